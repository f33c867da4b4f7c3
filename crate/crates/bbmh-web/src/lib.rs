//! Browser bindings: three interactive demos returning JSON strings so the
//! page stays a plain static file with no framework.

use bbmh::experiments::to_json;
use bbmh::imex::{evolve, load, EvolveOptions};
use bbmh::models::{well_prepared_init, BbmhSystem, SplittingParams, VInit, WOp};
use bbmh::sbp::{build_upwind_operators, FourierOperator, GridSpec};
use bbmh::waves::{bbm_soliton, petviashvili_solve, symmetric_peakon, PetviashviliOptions};
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

#[derive(Serialize)]
struct Frame {
    t: f64,
    u: Vec<f64>,
}

#[derive(Serialize)]
struct SolitonRun {
    x: Vec<f64>,
    frames: Vec<Frame>,
    times: Vec<f64>,
    energy_rel: Vec<f64>,
    energy_drift: f64,
    mass_drift: f64,
    relaxation: bool,
}

/// Evolve a soliton-seeded BBMH run and return animation frames of u plus
/// the relative energy history, so the page can show the relaxation payoff.
#[wasm_bindgen]
pub fn soliton_frames(
    c: f64,
    eps: f64,
    n: usize,
    dt: f64,
    t_end: f64,
    relaxation: bool,
) -> Result<String, JsValue> {
    soliton_frames_impl(c, eps, n, dt, t_end, relaxation).map_err(|e| JsValue::from_str(&e))
}

fn soliton_frames_impl(
    c: f64,
    eps: f64,
    n: usize,
    dt: f64,
    t_end: f64,
    relaxation: bool,
) -> Result<String, String> {
    if !(4..=2048).contains(&n) {
        return Err(err("n must lie in [4, 2048]"));
    }
    if !(dt > 0.0 && t_end > 0.0 && t_end / dt <= 20_000.0) {
        return Err(err("need dt > 0, t_end > 0 and at most 20000 steps"));
    }
    let grid = GridSpec::new(-90.0, 90.0, n).map_err(err)?;
    let op = build_upwind_operators(grid, 4).map_err(err)?;
    let sp = SplittingParams::standard(eps).map_err(err)?;
    let eta0 = bbm_soliton(c, &op.grid, 0.0).map_err(err)?;
    let init = well_prepared_init(&eta0, &op, VInit::Consistent, c, WOp::Minus, 1.0);
    let steps = (t_end / dt).ceil() as usize;
    let stride = steps.div_ceil(300).max(1);
    let tab = load("ars443").map_err(err)?;
    let mut sys = BbmhSystem::new(op.clone(), sp);
    let opts = EvolveOptions {
        relaxation,
        snapshot_stride: stride,
        record_final_stages: false,
    };
    let rec = evolve(&mut sys, &init, t_end, dt, &tab, &opts).map_err(err)?;
    let e0 = rec.invariants.first().map(|i| i.energy).unwrap_or(1.0);
    let m0 = rec.invariants.first().map(|i| i.linear_u).unwrap_or(1.0);
    let mut energy_drift = 0.0f64;
    let mut mass_drift = 0.0f64;
    let energy_rel: Vec<f64> = rec
        .invariants
        .iter()
        .map(|i| {
            let de = (i.energy - e0) / e0.abs().max(f64::MIN_POSITIVE);
            let dm = (i.linear_u - m0) / m0.abs().max(f64::MIN_POSITIVE);
            energy_drift = energy_drift.max(de.abs());
            mass_drift = mass_drift.max(dm.abs());
            de
        })
        .collect();
    let mut times = vec![0.0];
    times.extend_from_slice(&rec.times);
    let run = SolitonRun {
        x: op.grid.nodes(),
        frames: rec
            .snapshots
            .iter()
            .map(|(t, s)| Frame {
                t: *t,
                u: s.u.clone(),
            })
            .collect(),
        times,
        energy_rel,
        energy_drift,
        mass_drift,
        relaxation,
    };
    to_json(&run).map_err(err)
}

#[derive(Serialize)]
struct PeakonRun {
    xi: Vec<f64>,
    u: Vec<f64>,
    w: Vec<f64>,
    corner_u: f64,
    symmetry_defect: f64,
    hit_singular_line: bool,
}

/// Integrate the peaked traveling-wave orbit (c < ε²) up to the singular
/// line and mirror it; returns the profile and its phase-plane trace.
#[wasm_bindgen]
pub fn peakon_orbit(c: f64, eps2: f64, step: f64) -> Result<String, JsValue> {
    peakon_orbit_impl(c, eps2, step).map_err(|e| JsValue::from_str(&e))
}

fn peakon_orbit_impl(c: f64, eps2: f64, step: f64) -> Result<String, String> {
    if !(step > 1e-6 && step <= 0.1) {
        return Err(err("step must lie in (1e-6, 0.1]"));
    }
    let res = symmetric_peakon(c, eps2, step, 1e-8, 4_000_000).map_err(err)?;
    let len = res.profile.xi.len();
    let stride = len.div_ceil(4000).max(1);
    let pick = |xs: &[f64]| -> Vec<f64> { xs.iter().step_by(stride).copied().collect() };
    let run = PeakonRun {
        xi: pick(&res.profile.xi),
        u: pick(&res.profile.u),
        w: pick(&res.profile.w),
        corner_u: res.corner_u,
        symmetry_defect: res.symmetry_defect,
        hit_singular_line: res.hit_singular_line,
    };
    to_json(&run).map_err(err)
}

#[derive(Serialize)]
struct PetviashviliRun {
    x: Vec<f64>,
    u: Vec<f64>,
    v: Vec<f64>,
    w: Vec<f64>,
    soliton_u: Vec<f64>,
    max_deviation: f64,
    residuals: Vec<f64>,
    iterations: usize,
    final_residual: f64,
}

/// Converge the solitary profile of the hyperbolic system by Petviashvili
/// iteration and compare the u component against the closed-form BBM
/// soliton of the same speed.
#[wasm_bindgen]
pub fn petviashvili_profile(c: f64, eps: f64, n: usize) -> Result<String, JsValue> {
    petviashvili_profile_impl(c, eps, n).map_err(|e| JsValue::from_str(&e))
}

fn petviashvili_profile_impl(c: f64, eps: f64, n: usize) -> Result<String, String> {
    if !(16..=4096).contains(&n) {
        return Err(err("n must lie in [16, 4096]"));
    }
    let grid = GridSpec::new(-90.0, 90.0, n).map_err(err)?;
    let fop = FourierOperator::new(grid).map_err(err)?;
    let soliton = bbm_soliton(c, &grid, 0.0).map_err(err)?;
    let guess: Vec<f64> = soliton.iter().map(|x| x - 1.0).collect();
    let res = petviashvili_solve(c, eps, &fop, &guess, &PetviashviliOptions::default())
        .map_err(err)?;
    let max_deviation = res
        .profile
        .u
        .iter()
        .zip(&soliton)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    let run = PetviashviliRun {
        x: grid.nodes(),
        u: res.profile.u,
        v: res.profile.v,
        w: res.profile.w,
        soliton_u: soliton,
        max_deviation,
        residuals: res.residuals,
        iterations: res.iterations,
        final_residual: res.final_residual,
    };
    to_json(&run).map_err(err)
}
