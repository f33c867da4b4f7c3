//! Command-line drivers reproducing the solver laboratory's quantitative
//! studies: AP convergence ladders, long-time error growth, solitary-wave
//! construction, phase-plane orbits, and plain model runs.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use bbmh::experiments::{
    ap_table_csv, growth_csv, profile_csv, run_ap_table, run_error_growth, run_error_growth_bbm,
    run_solve, to_json, ApTableConfig, GrowthConfig, GrowthMode, ModelKind, SolveConfig,
};
use bbmh::imex::load;
use bbmh::models::{VInit, WOp};
use bbmh::sbp::{FourierOperator, GridSpec};
use bbmh::waves::{
    bbm_soliton, integrate_phase_plane_with, petviashvili_solve, PetviashviliOptions,
    DEFAULT_DEN_STOP,
};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bbmh", version, about = "Structure-preserving BBM/BBMH solver laboratory")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum VInitArg {
    Consistent,
    Zero,
}

#[derive(Clone, Copy, ValueEnum)]
enum WOpArg {
    Central,
    Minus,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Petviashvili,
    Analytic,
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Bbm,
    Bbmh,
}

#[derive(Subcommand)]
enum Cmd {
    /// AP convergence ladder: hyperbolic runs against the explicit limit
    /// scheme for a descending list of eps^2 values.
    ApTable {
        #[arg(long, default_value = "ars443")]
        tableau: String,
        #[arg(long, default_value_t = 512)]
        n: usize,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[arg(long, default_value_t = 19.5)]
        t_end: f64,
        /// Descending comma-separated eps^2 ladder.
        #[arg(long, value_delimiter = ',', default_values_t = [1e-2, 1e-4, 1e-6, 1e-8, 1e-10])]
        eps2: Vec<f64>,
        #[arg(long, value_enum, default_value_t = VInitArg::Consistent)]
        v_init: VInitArg,
        /// Derivative used for the w (and v) limit references; `minus`
        /// matches the discrete limit exactly.
        #[arg(long, value_enum, default_value_t = WOpArg::Central)]
        w_op: WOpArg,
        /// CSV output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        order: usize,
        #[arg(long, default_value_t = -90.0, allow_negative_numbers = true)]
        x_min: f64,
        #[arg(long, default_value_t = 90.0, allow_negative_numbers = true)]
        x_max: f64,
        /// Soliton speed of the initial profile.
        #[arg(long, default_value_t = 1.2)]
        c: f64,
        /// Sign convention of the prepared w(0) = w_sign * D eta(0).
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        w_sign: f64,
        /// Optional JSON mirror of the full table.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Long-time error growth against a translated traveling reference.
    ErrorGrowth {
        #[arg(long, value_enum, default_value_t = ModeArg::Petviashvili)]
        mode: ModeArg,
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        #[arg(long, default_value = "ars443")]
        tableau: String,
        #[arg(long, value_enum, default_value_t = OnOff::Off)]
        relaxation: OnOff,
        #[arg(long, default_value_t = 256)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        dt: f64,
        #[arg(long, default_value_t = 1071.0)]
        t_end: f64,
        /// CSV output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        order: usize,
        #[arg(long, default_value_t = -90.0, allow_negative_numbers = true)]
        x_min: f64,
        #[arg(long, default_value_t = 90.0, allow_negative_numbers = true)]
        x_max: f64,
        #[arg(long, default_value_t = 1.2)]
        c: f64,
        /// Trailing fraction of the series the slope is fitted on.
        #[arg(long, default_value_t = 0.5)]
        slope_window: f64,
        /// Errors above this fraction of the signal scale are excluded from
        /// the fit (decorrelation plateau carries no growth rate).
        #[arg(long, default_value_t = 0.25)]
        saturation_fraction: f64,
        #[arg(long, default_value_t = 1)]
        snapshot_stride: usize,
        /// `bbm` runs the BBM semidiscretization companion curve (analytic
        /// reference only).
        #[arg(long, value_enum, default_value_t = ModelArg::Bbmh)]
        model: ModelArg,
        /// Optional JSON mirror of the series.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Solitary-wave profile of the hyperbolic system by Petviashvili
    /// iteration on a Fourier grid.
    Petviashvili {
        #[arg(long, default_value_t = 1.2)]
        c: f64,
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        #[arg(long, default_value_t = 1024)]
        n: usize,
        /// Sup-norm increment threshold declaring convergence.
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Profile CSV output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = -90.0, allow_negative_numbers = true)]
        x_min: f64,
        #[arg(long, default_value_t = 90.0, allow_negative_numbers = true)]
        x_max: f64,
        #[arg(long, default_value_t = 2.0)]
        gamma_exp: f64,
        #[arg(long, default_value_t = 1000)]
        max_iter: usize,
        /// Optional JSON mirror (profile plus residual history).
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Fixed-step phase-plane integration of the traveling-wave ODE,
    /// stopping on the singular line.
    TravelingOde {
        #[arg(long, default_value_t = 0.5)]
        c: f64,
        #[arg(long, default_value_t = 4.0 / 3.0)]
        eps2: f64,
        /// Starting point as `u,w`.
        #[arg(long, value_name = "u,w", default_value = "0.999,-0.001", allow_hyphen_values = true)]
        start: String,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        #[arg(long, default_value_t = 2_000_000)]
        steps: usize,
        /// Profile CSV output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Stopping distance from the singular line.
        #[arg(long, default_value_t = DEFAULT_DEN_STOP)]
        den_stop: f64,
        /// Optional JSON mirror of the orbit.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Soliton-seeded evolution of either model from a key=value config
    /// file; emits a JSON run summary.
    Solve {
        #[arg(long, value_enum)]
        model: ModelArg,
        /// Plain key=value file mirroring the flags above.
        #[arg(long)]
        config: PathBuf,
        /// JSON output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn write_out(path: Option<&PathBuf>, content: &str) -> Result<(), String> {
    match path {
        Some(p) => std::fs::write(p, content).map_err(|e| format!("writing {}: {e}", p.display())),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.cmd {
        Cmd::ApTable {
            tableau,
            n,
            dt,
            t_end,
            eps2,
            v_init,
            w_op,
            out,
            order,
            x_min,
            x_max,
            c,
            w_sign,
            json,
        } => {
            let tab = load(&tableau).map_err(|e| e.to_string())?;
            let cfg = ApTableConfig {
                n,
                order,
                x_min,
                x_max,
                c,
                dt,
                t_end,
                eps_sq: eps2,
                v_init: match v_init {
                    VInitArg::Consistent => VInit::Consistent,
                    VInitArg::Zero => VInit::Zero,
                },
                w_op: match w_op {
                    WOpArg::Central => WOp::Central,
                    WOpArg::Minus => WOp::Minus,
                },
                w_sign,
            };
            let table = run_ap_table(&tab, &cfg).map_err(|e| e.to_string())?;
            write_out(out.as_ref(), &ap_table_csv(&table))?;
            if let Some(jp) = json {
                let js = to_json(&table).map_err(|e| e.to_string())?;
                write_out(Some(&jp), &js)?;
            }
            Ok(())
        }
        Cmd::ErrorGrowth {
            mode,
            eps,
            tableau,
            relaxation,
            n,
            dt,
            t_end,
            out,
            order,
            x_min,
            x_max,
            c,
            slope_window,
            saturation_fraction,
            snapshot_stride,
            model,
            json,
        } => {
            let tab = load(&tableau).map_err(|e| e.to_string())?;
            let cfg = GrowthConfig {
                mode: match mode {
                    ModeArg::Petviashvili => GrowthMode::PetviashviliRef,
                    ModeArg::Analytic => GrowthMode::AnalyticRef,
                },
                eps,
                n,
                order,
                x_min,
                x_max,
                c,
                dt,
                t_end,
                relaxation: matches!(relaxation, OnOff::On),
                snapshot_stride,
                slope_window,
                saturation_fraction,
            };
            let series = match model {
                ModelArg::Bbmh => run_error_growth(&tab, &cfg),
                ModelArg::Bbm => run_error_growth_bbm(&tab, &cfg),
            }
            .map_err(|e| e.to_string())?;
            write_out(out.as_ref(), &growth_csv(&series))?;
            if let Some(jp) = json {
                let js = to_json(&series).map_err(|e| e.to_string())?;
                write_out(Some(&jp), &js)?;
            }
            Ok(())
        }
        Cmd::Petviashvili {
            c,
            eps,
            n,
            tol,
            out,
            x_min,
            x_max,
            gamma_exp,
            max_iter,
            json,
        } => {
            let grid = GridSpec::new(x_min, x_max, n).map_err(|e| e.to_string())?;
            let fop = FourierOperator::new(grid).map_err(|e| e.to_string())?;
            let guess: Vec<f64> = bbm_soliton(c, &grid, 0.0)
                .map_err(|e| e.to_string())?
                .iter()
                .map(|x| x - 1.0)
                .collect();
            let opts = PetviashviliOptions {
                gamma_exp,
                tol,
                max_iter,
                ..PetviashviliOptions::default()
            };
            let res =
                petviashvili_solve(c, eps, &fop, &guess, &opts).map_err(|e| e.to_string())?;
            let mut csv = String::new();
            let _ = writeln!(csv, "# iterations = {}", res.iterations);
            let _ = writeln!(csv, "# final_residual = {:.16e}", res.final_residual);
            csv.push_str(&profile_csv(&res.profile));
            write_out(out.as_ref(), &csv)?;
            if let Some(jp) = json {
                let js = to_json(&res).map_err(|e| e.to_string())?;
                write_out(Some(&jp), &js)?;
            }
            Ok(())
        }
        Cmd::TravelingOde {
            c,
            eps2,
            start,
            step,
            steps,
            out,
            den_stop,
            json,
        } => {
            let (su, sw) = parse_start(&start)?;
            let orbit = integrate_phase_plane_with((su, sw), c, eps2, step, steps, den_stop)
                .map_err(|e| e.to_string())?;
            let mut csv = String::new();
            let _ = writeln!(csv, "# hit_singular_line = {}", orbit.hit_singular_line);
            let _ = writeln!(csv, "# steps_taken = {}", orbit.steps_taken);
            csv.push_str(&profile_csv(&orbit.profile));
            write_out(out.as_ref(), &csv)?;
            if let Some(jp) = json {
                let js = to_json(&orbit).map_err(|e| e.to_string())?;
                write_out(Some(&jp), &js)?;
            }
            Ok(())
        }
        Cmd::Solve { model, config, out } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| format!("reading {}: {e}", config.display()))?;
            let cfg = SolveConfig::parse(&text).map_err(|e| e.to_string())?;
            let kind = match model {
                ModelArg::Bbm => ModelKind::Bbm,
                ModelArg::Bbmh => ModelKind::Bbmh,
            };
            let summary = run_solve(kind, &cfg).map_err(|e| e.to_string())?;
            let js = to_json(&summary).map_err(|e| e.to_string())?;
            write_out(out.as_ref(), &js)?;
            Ok(())
        }
    }
}

fn parse_start(text: &str) -> Result<(f64, f64), String> {
    let (a, b) = text
        .split_once(',')
        .ok_or_else(|| format!("--start expects `u,w`, got {text:?}"))?;
    let u: f64 = a
        .trim()
        .parse()
        .map_err(|_| format!("--start: bad u value {a:?}"))?;
    let w: f64 = b
        .trim()
        .parse()
        .map_err(|_| format!("--start: bad w value {b:?}"))?;
    Ok((u, w))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
