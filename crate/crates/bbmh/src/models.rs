//! Semidiscrete models: the hyperbolic approximation (BBMH) in split form and
//! the BBM limit equation, plus their invariants and well-prepared data.

use serde::Serialize;

use crate::imex::{SplitSystem, StateVec};
use crate::linsolve::{bbm_elliptic_solver, CyclicLu, StageSystem};
use crate::sbp::{OperatorSet, Stencil};
use crate::{Error, Result};

/// Splitting weights δ = (δ1, δ2, δ3) and stiffness parameter ε for the
/// split system
///   u_t = −uu_x − δ1ε v_x   − (1−δ1ε) v_x
///   v_t = −δ2/ε u_x         − (1−δ2ε)/ε² u_x + w/ε²
///   w_t = −δ3ε² w_x         − (1−δ3)ε² w_x − v
/// with the first column treated explicitly and the second implicitly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SplittingParams {
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub eps: f64,
}

/// Admissibility conditions for an energy-stable splitting. Returns one
/// message per violated condition; empty means admissible.
pub fn validate_splitting(delta1: f64, delta2: f64, delta3: f64, eps: f64) -> Vec<String> {
    let mut bad = Vec::new();
    if !(eps.is_finite() && eps > 0.0) {
        bad.push(format!("eps = {eps} must be finite and positive"));
    }
    for (name, d) in [("delta1", delta1), ("delta2", delta2), ("delta3", delta3)] {
        if !(0.0..=1.0).contains(&d) || !d.is_finite() {
            bad.push(format!("{name} = {d} outside [0, 1]"));
        }
    }
    if eps > 0.0 {
        if delta1 * eps > 1.0 {
            bad.push(format!("delta1*eps = {} exceeds 1", delta1 * eps));
        }
        if delta2 * eps > 1.0 {
            bad.push(format!("delta2*eps = {} exceeds 1", delta2 * eps));
        }
        let z1 = delta1 == 0.0;
        let z2 = delta2 == 0.0;
        if z1 != z2 {
            bad.push(format!(
                "delta1 = {delta1}, delta2 = {delta2}: one vanishes, both must"
            ));
        }
        let u1 = delta1 * eps == 1.0;
        let u2 = delta2 * eps == 1.0;
        if u1 != u2 {
            bad.push(format!(
                "delta1*eps = {}, delta2*eps = {}: one equals 1, both must",
                delta1 * eps,
                delta2 * eps
            ));
        }
    }
    bad
}

impl SplittingParams {
    pub fn new(delta1: f64, delta2: f64, delta3: f64, eps: f64) -> Result<Self> {
        let bad = validate_splitting(delta1, delta2, delta3, eps);
        if !bad.is_empty() {
            return Err(Error::InvalidSplitting(bad.join("; ")));
        }
        Ok(SplittingParams {
            delta1,
            delta2,
            delta3,
            eps,
        })
    }

    /// The default splitting δ = (0, 0, 1): fully implicit v/u coupling,
    /// explicit w transport.
    pub fn standard(eps: f64) -> Result<Self> {
        SplittingParams::new(0.0, 0.0, 1.0, eps)
    }

    pub fn eps2(&self) -> f64 {
        self.eps * self.eps
    }
}

/// Grid state of the hyperbolic system.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct State {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
}

impl State {
    pub fn zeros(n: usize) -> Self {
        State {
            u: vec![0.0; n],
            v: vec![0.0; n],
            w: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }
}

impl StateVec for State {
    fn axpy(&mut self, a: f64, x: &Self) {
        for (y, xv) in self.u.iter_mut().zip(&x.u) {
            *y += a * xv;
        }
        for (y, xv) in self.v.iter_mut().zip(&x.v) {
            *y += a * xv;
        }
        for (y, xv) in self.w.iter_mut().zip(&x.w) {
            *y += a * xv;
        }
    }

    fn scale(&mut self, a: f64) {
        self.u.iter_mut().for_each(|y| *y *= a);
        self.v.iter_mut().for_each(|y| *y *= a);
        self.w.iter_mut().for_each(|y| *y *= a);
    }

    fn all_finite(&self) -> bool {
        self.u.iter().chain(&self.v).chain(&self.w).all(|v| v.is_finite())
    }
}

impl StateVec for Vec<f64> {
    fn axpy(&mut self, a: f64, x: &Self) {
        for (y, xv) in self.iter_mut().zip(x) {
            *y += a * xv;
        }
    }

    fn scale(&mut self, a: f64) {
        self.iter_mut().for_each(|y| *y *= a);
    }

    fn all_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
}

/// Conserved quantities of a semidiscrete model: the linear functional
/// 1ᵀM u and the quadratic energy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InvariantValue {
    pub linear_u: f64,
    pub energy: f64,
}

/// Explicit part f of the splitting: nonlinearity in split form plus the
/// δ-weighted transport terms.
pub fn bbmh_rhs_explicit(state: &State, sp: &SplittingParams, op: &OperatorSet) -> State {
    let n = state.len();
    let u = &state.u;
    // Split form (u·D1u + D1 u²)/3: makes uᵀM f_u vanish identically.
    let du = op.d_central.apply(u);
    let u2: Vec<f64> = u.iter().map(|x| x * x).collect();
    let du2 = op.d_central.apply(&u2);
    let mut f_u: Vec<f64> = (0..n)
        .map(|j| -(u[j] * du[j] + du2[j]) / 3.0)
        .collect();
    if sp.delta1 != 0.0 {
        let dv = op.d_plus.apply(&state.v);
        let a = sp.delta1 * sp.eps;
        for (f, d) in f_u.iter_mut().zip(&dv) {
            *f -= a * d;
        }
    }
    let f_v = if sp.delta2 != 0.0 {
        let du_m = op.d_minus.apply(u);
        let a = -sp.delta2 / sp.eps;
        du_m.iter().map(|d| a * d).collect()
    } else {
        vec![0.0; n]
    };
    let f_w = if sp.delta3 != 0.0 {
        let dw = op.d_central.apply(&state.w);
        let a = -sp.delta3 * sp.eps2();
        dw.iter().map(|d| a * d).collect()
    } else {
        vec![0.0; n]
    };
    State {
        u: f_u,
        v: f_v,
        w: f_w,
    }
}

/// Implicit part g of the splitting. Direct evaluation; inside the IMEX loop
/// g at solved stages is recovered from the stage equation instead (see
/// `imex::imex_step`), because the u_x/ε² − w/ε² cancellation is catastrophic
/// here for ε² near roundoff.
pub fn bbmh_rhs_implicit(state: &State, sp: &SplittingParams, op: &OperatorSet) -> State {
    let n = state.len();
    let eps2 = sp.eps2();
    let dv = op.d_plus.apply(&state.v);
    let a1 = -(1.0 - sp.delta1 * sp.eps);
    let g_u: Vec<f64> = dv.iter().map(|d| a1 * d).collect();
    let du = op.d_minus.apply(&state.u);
    let one_m_d2e = 1.0 - sp.delta2 * sp.eps;
    let g_v: Vec<f64> = (0..n)
        .map(|j| (state.w[j] - one_m_d2e * du[j]) / eps2)
        .collect();
    let a3 = -(1.0 - sp.delta3) * eps2;
    let g_w: Vec<f64> = if a3 != 0.0 {
        let dw = op.d_central.apply(&state.w);
        (0..n).map(|j| a3 * dw[j] - state.v[j]).collect()
    } else {
        state.v.iter().map(|v| -v).collect()
    };
    State {
        u: g_u,
        v: g_v,
        w: g_w,
    }
}

/// Semidiscrete BBM right-hand side −(I − D+D−)⁻¹ (η D1η + D1 η²)/3.
pub fn bbm_rhs(eta: &[f64], op: &OperatorSet, elliptic: &CyclicLu) -> Vec<f64> {
    let de = op.d_central.apply(eta);
    let e2: Vec<f64> = eta.iter().map(|x| x * x).collect();
    let de2 = op.d_central.apply(&e2);
    let mut rhs: Vec<f64> = (0..eta.len())
        .map(|j| -(eta[j] * de[j] + de2[j]) / 3.0)
        .collect();
    elliptic.solve_into(&mut rhs);
    rhs
}

/// Invariants of the hyperbolic system: 1ᵀMu and
/// (uᵀMu + ε² vᵀMv + wᵀMw)/2.
pub fn bbmh_invariants(state: &State, sp: &SplittingParams, op: &OperatorSet) -> InvariantValue {
    let h = op.grid.h();
    let linear_u = h * state.u.iter().sum::<f64>();
    let eps2 = sp.eps2();
    let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    let energy = 0.5 * h * (sq(&state.u) + eps2 * sq(&state.v) + sq(&state.w));
    InvariantValue { linear_u, energy }
}

/// Invariants of semidiscrete BBM: 1ᵀMη and ηᵀM(I − D+D−)η/2, the latter
/// evaluated as h(‖η‖² + ‖D−η‖²)/2 through the SBP property.
pub fn bbm_invariants(eta: &[f64], op: &OperatorSet) -> InvariantValue {
    let h = op.grid.h();
    let linear_u = h * eta.iter().sum::<f64>();
    let de = op.d_minus.apply(eta);
    let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    let energy = 0.5 * h * (sq(eta) + sq(&de));
    InvariantValue { linear_u, energy }
}

/// Largest characteristic speeds of the explicit flux F and implicit flux G:
///   F′: −δ3ε and u/2 ± sqrt(u²/4 + δ1δ2)
///   G′: (1−δ3)ε² and ±sqrt((1−δ1ε)(1−δ2ε))/ε.
pub fn max_wave_speeds(state: &State, sp: &SplittingParams) -> (f64, f64) {
    let d12 = sp.delta1 * sp.delta2;
    let mut expl = sp.delta3 * sp.eps;
    for &u in &state.u {
        let s = u.abs() / 2.0 + (u * u / 4.0 + d12).sqrt();
        if s > expl {
            expl = s;
        }
    }
    let stiff = ((1.0 - sp.delta1 * sp.eps) * (1.0 - sp.delta2 * sp.eps)).sqrt() / sp.eps;
    let impl_speed = stiff.max((1.0 - sp.delta3) * sp.eps2());
    (expl, impl_speed)
}

/// Which derivative approximates η_x in the well-prepared w component.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum WOp {
    /// Central D1; the default definition of the continuous limit w = η_x.
    Central,
    /// Upwind D−; the operator the discrete stage constraint enforces, so
    /// limit-table errors reach the time-integrator floor with this choice.
    Minus,
}

/// How to initialize the auxiliary variable v.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum VInit {
    /// v(·,0) = c·D1²η0, consistent with a wave of speed c.
    Consistent,
    /// v(·,0) = 0.
    Zero,
}

/// Well-prepared hyperbolic data from a BBM profile: u = η0, w ≈ η0_x with a
/// selectable operator and sign, v either consistent (c·D1²η0) or zero.
pub fn well_prepared_init(
    eta0: &[f64],
    op: &OperatorSet,
    v_mode: VInit,
    wave_speed_c: f64,
    w_op: WOp,
    w_sign: f64,
) -> State {
    let d_eta = match w_op {
        WOp::Central => op.d_central.apply(eta0),
        WOp::Minus => op.d_minus.apply(eta0),
    };
    let w: Vec<f64> = d_eta.iter().map(|d| w_sign * d).collect();
    let v = match v_mode {
        VInit::Consistent => {
            let d1 = op.d_central.apply(eta0);
            let d2 = op.d_central.apply(&d1);
            d2.iter().map(|d| wave_speed_c * d).collect()
        }
        VInit::Zero => vec![0.0; eta0.len()],
    };
    State {
        u: eta0.to_vec(),
        v,
        w,
    }
}

/// BBMH semidiscretization wired for the IMEX integrator, with stage solvers
/// cached per distinct Δt·a_ii.
pub struct BbmhSystem {
    pub op: OperatorSet,
    pub sp: SplittingParams,
    solvers: Vec<(u64, StageSystem)>,
}

impl BbmhSystem {
    pub fn new(op: OperatorSet, sp: SplittingParams) -> Self {
        BbmhSystem {
            op,
            sp,
            solvers: Vec::new(),
        }
    }
}

impl SplitSystem for BbmhSystem {
    type State = State;

    fn explicit_rhs(&self, q: &State) -> State {
        bbmh_rhs_explicit(q, &self.sp, &self.op)
    }

    fn implicit_rhs(&self, q: &State) -> State {
        bbmh_rhs_implicit(q, &self.sp, &self.op)
    }

    fn prepare(&mut self, kappas: &[f64]) -> Result<()> {
        for &k in kappas {
            if !self.solvers.iter().any(|(bits, _)| *bits == k.to_bits()) {
                let sys = StageSystem::new(&self.op, &self.sp, k)?;
                self.solvers.push((k.to_bits(), sys));
            }
        }
        Ok(())
    }

    fn solve_implicit(&self, r: &State, kappa: f64) -> Result<State> {
        let sys = self
            .solvers
            .iter()
            .find(|(bits, _)| *bits == kappa.to_bits())
            .map(|(_, s)| s)
            .ok_or_else(|| {
                Error::InvalidConfig(format!("no cached stage solver for dt*a_ii = {kappa:e}"))
            })?;
        sys.solve(&r.u, &r.v, &r.w)
    }

    fn energy_inner(&self, a: &State, b: &State) -> f64 {
        let h = self.op.grid.h();
        let eps2 = self.sp.eps2();
        let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
        h * (dot(&a.u, &b.u) + eps2 * dot(&a.v, &b.v) + dot(&a.w, &b.w))
    }

    fn invariants(&self, q: &State) -> InvariantValue {
        bbmh_invariants(q, &self.sp, &self.op)
    }
}

/// BBM semidiscretization. Its "implicit part" is identically zero, so the
/// IMEX integrator degenerates to the explicit submethod: exactly the limit
/// scheme the hyperbolic tables are compared against.
pub struct BbmSystem {
    pub op: OperatorSet,
    elliptic: CyclicLu,
}

impl BbmSystem {
    pub fn new(op: OperatorSet) -> Result<Self> {
        let elliptic = bbm_elliptic_solver(&op)?;
        Ok(BbmSystem { op, elliptic })
    }

    pub fn elliptic(&self) -> &CyclicLu {
        &self.elliptic
    }
}

impl SplitSystem for BbmSystem {
    type State = Vec<f64>;

    fn explicit_rhs(&self, q: &Vec<f64>) -> Vec<f64> {
        bbm_rhs(q, &self.op, &self.elliptic)
    }

    fn implicit_rhs(&self, q: &Vec<f64>) -> Vec<f64> {
        vec![0.0; q.len()]
    }

    fn prepare(&mut self, _kappas: &[f64]) -> Result<()> {
        Ok(())
    }

    fn solve_implicit(&self, r: &Vec<f64>, _kappa: f64) -> Result<Vec<f64>> {
        Ok(r.clone())
    }

    fn energy_inner(&self, a: &Vec<f64>, b: &Vec<f64>) -> f64 {
        let h = self.op.grid.h();
        let da = self.op.d_minus.apply(a);
        let db = self.op.d_minus.apply(b);
        let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
        h * (dot(a, b) + dot(&da, &db))
    }

    fn invariants(&self, q: &Vec<f64>) -> InvariantValue {
        bbm_invariants(q, &self.op)
    }
}

/// D1 applied twice; exposed for consistent v initialization elsewhere.
pub fn d1_squared(op: &OperatorSet) -> Stencil {
    op.d_central.compose(&op.d_central)
}
