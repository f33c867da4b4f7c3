//! Additive IMEX time stepping with invariant-preserving relaxation.

pub mod tableau;

pub use tableau::{
    builtin, load, ImexTableau, OrderCondition, OrderReport, TableauClassification, TableauKind,
    BUILTIN_TABLEAUX,
};

use crate::models::InvariantValue;
use crate::{Error, Result};

/// Minimal vector-space interface the integrator needs from a model state.
pub trait StateVec: Clone {
    fn axpy(&mut self, a: f64, x: &Self);
    fn scale(&mut self, a: f64);
    fn all_finite(&self) -> bool;
}

/// A split semidiscretization dq/dt = f(q) + g(q): f is integrated
/// explicitly, g implicitly through `solve_implicit`, which must solve
/// q − κ g(q) = r.
pub trait SplitSystem {
    type State: StateVec;

    fn explicit_rhs(&self, q: &Self::State) -> Self::State;
    fn implicit_rhs(&self, q: &Self::State) -> Self::State;
    /// Build/caches stage solvers for the distinct κ = Δt·a_ii values.
    fn prepare(&mut self, kappas: &[f64]) -> Result<()>;
    fn solve_implicit(&self, r: &Self::State, kappa: f64) -> Result<Self::State>;
    /// Inner product whose quadratic form is the conserved energy.
    fn energy_inner(&self, a: &Self::State, b: &Self::State) -> f64;
    fn invariants(&self, q: &Self::State) -> InvariantValue;

    fn energy(&self, q: &Self::State) -> f64 {
        0.5 * self.energy_inner(q, q)
    }
}

/// Result of one IMEX step: the assembled update, all solved stage values
/// and the (energy-norm, relative) defect between the assembled update and
/// the last stage when the tableau is globally stiffly accurate.
pub struct StepResult<St> {
    pub q_next: St,
    pub stages: Vec<St>,
    pub gsa_defect: Option<f64>,
}

/// One additive Runge–Kutta step.
///
/// g at solved stages is recovered algebraically as (q_i − r_i)/(Δt a_ii)
/// rather than re-evaluated: the direct evaluation of the stiff part loses
/// all digits once ε² approaches roundoff, while the recovery is exact up to
/// the solver residual. Direct evaluation only happens at explicit stages
/// (a_ii = 0), where type II tableaux start from the given state.
pub fn imex_step<S: SplitSystem>(
    sys: &S,
    tab: &ImexTableau,
    cls: &TableauClassification,
    q: &S::State,
    dt: f64,
    t: f64,
) -> Result<StepResult<S::State>> {
    imex_step_with_stages(sys, tab, cls, q, dt, t, false)
}

/// Relaxation parameter and the effective step it implies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelaxationStep {
    pub gamma: f64,
    pub accepted_dt: f64,
}

/// Energy-restoring relaxation: choose γ so the quadratic invariant of
/// q_old + γ(q_new − q_old) equals that of q_old, then advance time by γΔt.
/// γ has a closed form because the invariant is quadratic:
/// γ = −2⟨q_old, Δq⟩ / ⟨Δq, Δq⟩.
pub fn relax<S: SplitSystem>(
    sys: &S,
    q_old: &S::State,
    q_new: &S::State,
    dt: f64,
    t: f64,
) -> Result<(RelaxationStep, S::State)> {
    let mut dq = q_new.clone();
    dq.axpy(-1.0, q_old);
    let denom = sys.energy_inner(&dq, &dq);
    let gamma = if denom < 1e-300 {
        1.0
    } else {
        -2.0 * sys.energy_inner(q_old, &dq) / denom
    };
    if !(0.1..=1.9).contains(&gamma) {
        return Err(Error::RelaxationOutOfBounds {
            gamma,
            lo: 0.1,
            hi: 1.9,
            t,
        });
    }
    let mut relaxed = q_old.clone();
    relaxed.axpy(gamma, &dq);
    Ok((
        RelaxationStep {
            gamma,
            accepted_dt: gamma * dt,
        },
        relaxed,
    ))
}

#[derive(Clone, Copy, Debug)]
pub struct EvolveOptions {
    pub relaxation: bool,
    /// Record a state snapshot every this many steps (0 disables snapshots;
    /// the initial state is always recorded when enabled).
    pub snapshot_stride: usize,
    /// Keep the solved stage values of the final step and the state just
    /// before it; limit-scheme references are assembled from these.
    pub record_final_stages: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            relaxation: false,
            snapshot_stride: 0,
            record_final_stages: false,
        }
    }
}

/// Full trajectory record of an `evolve` run.
pub struct RunRecord<St> {
    /// Actual time after each step (relaxed time when relaxation is on).
    pub times: Vec<f64>,
    /// Nominal accumulated time n·Δt after each step.
    pub nominal_times: Vec<f64>,
    /// Relaxation parameter per step (1 when relaxation is off).
    pub gammas: Vec<f64>,
    /// Invariants at t = 0 and after each step.
    pub invariants: Vec<InvariantValue>,
    pub snapshots: Vec<(f64, St)>,
    pub final_state: St,
    pub final_time: f64,
    pub steps: usize,
    pub max_gsa_defect: f64,
    pub final_stages: Option<Vec<St>>,
    pub state_before_final: Option<St>,
}

/// March a split system from t = 0 to t_end with constant Δt (the last step
/// is shortened to land within one step of t_end even under relaxation).
pub fn evolve<S: SplitSystem>(
    sys: &mut S,
    initial: &S::State,
    t_end: f64,
    dt: f64,
    tab: &ImexTableau,
    opts: &EvolveOptions,
) -> Result<RunRecord<S::State>> {
    if !(dt > 0.0 && dt.is_finite()) || !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "need positive finite dt and t_end, got dt = {dt}, t_end = {t_end}"
        )));
    }
    let cls = tab.validate()?;
    let kappas: Vec<f64> = (0..tab.s).map(|i| dt * tab.a_impl[i][i]).collect();
    sys.prepare(&kappas)?;

    let mut q = initial.clone();
    let mut t = 0.0f64;
    let mut nominal = 0.0f64;
    let mut steps = 0usize;
    let tol = 1e-9 * dt;
    let mut rec = RunRecord {
        times: vec![0.0],
        nominal_times: vec![0.0],
        gammas: Vec::new(),
        invariants: vec![sys.invariants(&q)],
        snapshots: Vec::new(),
        final_state: q.clone(),
        final_time: 0.0,
        steps: 0,
        max_gsa_defect: 0.0,
        final_stages: None,
        state_before_final: None,
    };
    if opts.snapshot_stride > 0 {
        rec.snapshots.push((0.0, q.clone()));
    }
    while t_end - t > tol {
        let remaining = t_end - t;
        // A remaining interval within roundoff of dt counts as a full step,
        // otherwise runs whose t_end is an exact multiple of dt would end on
        // a spurious ~1e-15 step.
        let full_step = remaining >= dt * (1.0 - 1e-9);
        let dt_step = if full_step { dt } else { remaining };
        if !full_step && opts.record_final_stages {
            // Limit references need uniform steps; a shortened final step
            // would silently break the stage algebra they rest on.
            return Err(Error::InvalidConfig(format!(
                "t_end = {t_end} is not an integer multiple of dt = {dt}"
            )));
        }
        if opts.record_final_stages {
            rec.state_before_final = Some(q.clone());
        }
        if !full_step {
            let kappas_step: Vec<f64> =
                (0..tab.s).map(|i| dt_step * tab.a_impl[i][i]).collect();
            sys.prepare(&kappas_step)?;
        }
        let step = imex_step_with_stages(
            sys,
            tab,
            &cls,
            &q,
            dt_step,
            t,
            opts.record_final_stages,
        )?;
        if let Some(d) = step.gsa_defect {
            if d > rec.max_gsa_defect {
                rec.max_gsa_defect = d;
            }
        }
        let gamma = if opts.relaxation {
            let (r, relaxed) = relax(sys, &q, &step.q_next, dt_step, t)?;
            q = relaxed;
            r.gamma
        } else {
            q = step.q_next;
            1.0
        };
        if opts.record_final_stages {
            rec.final_stages = Some(step.stages);
        }
        steps += 1;
        nominal += dt_step;
        if opts.relaxation {
            t += gamma * dt_step;
        } else {
            // Without relaxation keep t free of accumulation drift.
            t = if full_step { steps as f64 * dt } else { t_end };
        }
        rec.times.push(t);
        rec.nominal_times.push(nominal);
        rec.gammas.push(gamma);
        rec.invariants.push(sys.invariants(&q));
        if opts.snapshot_stride > 0 && steps % opts.snapshot_stride == 0 {
            rec.snapshots.push((t, q.clone()));
        }
    }
    if opts.snapshot_stride > 0 {
        if let Some(&(last_t, _)) = rec.snapshots.last() {
            if (last_t - t).abs() > tol {
                rec.snapshots.push((t, q.clone()));
            }
        }
    }
    rec.final_state = q;
    rec.final_time = t;
    rec.steps = steps;
    Ok(rec)
}

/// `imex_step` with optional stage retention; the hot path (keep_stages
/// false) only ever clones the final stage.
pub fn imex_step_with_stages<S: SplitSystem>(
    sys: &S,
    tab: &ImexTableau,
    cls: &TableauClassification,
    q: &S::State,
    dt: f64,
    t: f64,
    keep_stages: bool,
) -> Result<StepResult<S::State>> {
    let s = tab.s;
    let mut f_evals: Vec<S::State> = Vec::with_capacity(s);
    let mut g_evals: Vec<S::State> = Vec::with_capacity(s);
    let mut stages: Vec<S::State> = Vec::new();
    let mut last_stage: Option<S::State> = None;
    for i in 0..s {
        let mut r = q.clone();
        for j in 0..i {
            let ae = tab.a_expl[i][j];
            if ae != 0.0 {
                r.axpy(dt * ae, &f_evals[j]);
            }
            let ai = tab.a_impl[i][j];
            if ai != 0.0 {
                r.axpy(dt * ai, &g_evals[j]);
            }
        }
        let aii = tab.a_impl[i][i];
        let (qi, gi) = if aii == 0.0 {
            let gi = sys.implicit_rhs(&r);
            (r, gi)
        } else {
            let kappa = dt * aii;
            let qi = sys.solve_implicit(&r, kappa)?;
            let mut gi = qi.clone();
            gi.axpy(-1.0, &r);
            gi.scale(1.0 / kappa);
            (qi, gi)
        };
        if !qi.all_finite() {
            return Err(Error::NonFinite(t));
        }
        f_evals.push(sys.explicit_rhs(&qi));
        g_evals.push(gi);
        if keep_stages {
            stages.push(qi);
        } else if i == s - 1 {
            last_stage = Some(qi);
        }
    }
    let mut q_next = q.clone();
    for j in 0..s {
        if tab.b_expl[j] != 0.0 {
            q_next.axpy(dt * tab.b_expl[j], &f_evals[j]);
        }
        if tab.b_impl[j] != 0.0 {
            q_next.axpy(dt * tab.b_impl[j], &g_evals[j]);
        }
    }
    if !q_next.all_finite() {
        return Err(Error::NonFinite(t));
    }
    let gsa_defect = if cls.gsa {
        let last = stages.last().or(last_stage.as_ref()).expect("s >= 1");
        let mut diff = q_next.clone();
        diff.axpy(-1.0, last);
        let d = sys.energy_inner(&diff, &diff).sqrt();
        let scale = sys.energy_inner(last, last).sqrt().max(f64::MIN_POSITIVE);
        let rel = d / scale;
        if rel > 1e-12 {
            return Err(Error::GsaInconsistent { t, defect: rel });
        }
        Some(rel)
    } else {
        None
    };
    Ok(StepResult {
        q_next,
        stages,
        gsa_defect,
    })
}
