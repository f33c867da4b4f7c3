//! Shared helpers for the integration suites: a deterministic RNG, dense
//! reconstructions of the circulant operators, and a dense 3n×3n oracle for
//! the implicit stage solve.

use bbmh::models::SplittingParams;
use bbmh::sbp::{OperatorSet, Stencil};
use nalgebra::{DMatrix, DVector};

/// SplitMix64: tiny, seedable, reproducible across platforms.
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Log-uniform in [lo, hi), lo > 0.
    pub fn log_uniform(&mut self, lo: f64, hi: f64) -> f64 {
        (self.uniform(lo.ln(), hi.ln())).exp()
    }

    pub fn vec(&mut self, n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|_| self.uniform(lo, hi)).collect()
    }
}

/// Dense n×n matrix of a periodic stencil (row i holds the stencil centered
/// at i, wrapped).
pub fn dense_from_stencil(st: &Stencil, n: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for off in st.lo()..=st.hi() {
            let j = (i as isize + off).rem_euclid(n as isize) as usize;
            a[(i, j)] += st.coeff(off);
        }
    }
    a
}

pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Dense assembly of the implicit stage system
///   u + κ(1−δ1ε) D+ v                  = r_u
///   v + κ(1−δ2ε)/ε² D− u − κ/ε² w      = r_v
///   w + κ(1−δ3)ε² D1 w + κ v           = r_w
/// in the unknown ordering (u, v, w).
pub fn dense_stage_matrix(op: &OperatorSet, sp: &SplittingParams, kappa: f64) -> DMatrix<f64> {
    let n = op.grid.n;
    let eps = sp.eps;
    let eps2 = eps * eps;
    let dp = dense_from_stencil(&op.d_plus, n);
    let dm = dense_from_stencil(&op.d_minus, n);
    let dc = dense_from_stencil(&op.d_central, n);
    let mut a = DMatrix::zeros(3 * n, 3 * n);
    let id = DMatrix::<f64>::identity(n, n);
    let set = |a: &mut DMatrix<f64>, bi: usize, bj: usize, m: &DMatrix<f64>| {
        for i in 0..n {
            for j in 0..n {
                a[(bi * n + i, bj * n + j)] = m[(i, j)];
            }
        }
    };
    set(&mut a, 0, 0, &id);
    set(&mut a, 0, 1, &(kappa * (1.0 - sp.delta1 * eps) * &dp));
    set(&mut a, 1, 0, &(kappa * (1.0 - sp.delta2 * eps) / eps2 * &dm));
    set(&mut a, 1, 1, &id);
    set(&mut a, 1, 2, &(-(kappa / eps2) * &id));
    set(&mut a, 2, 1, &(kappa * &id));
    set(
        &mut a,
        2,
        2,
        &(&id + kappa * (1.0 - sp.delta3) * eps2 * &dc),
    );
    a
}

/// Solve the dense stage system for stacked right-hand sides.
pub fn dense_stage_solve(
    op: &OperatorSet,
    sp: &SplittingParams,
    kappa: f64,
    r_u: &[f64],
    r_v: &[f64],
    r_w: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = op.grid.n;
    let a = dense_stage_matrix(op, sp, kappa);
    let mut b = DVector::zeros(3 * n);
    for i in 0..n {
        b[i] = r_u[i];
        b[n + i] = r_v[i];
        b[2 * n + i] = r_w[i];
    }
    let x = a.lu().solve(&b).expect("dense stage matrix is invertible");
    (
        x.as_slice()[..n].to_vec(),
        x.as_slice()[n..2 * n].to_vec(),
        x.as_slice()[2 * n..].to_vec(),
    )
}

pub fn rel_err(got: &[f64], want: &[f64]) -> f64 {
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for (g, w) in got.iter().zip(want) {
        num += (g - w) * (g - w);
        den += w * w;
    }
    (num / den.max(f64::MIN_POSITIVE)).sqrt()
}
