//! Periodic upwind SBP operators on uniform grids.
//!
//! Operators are stored as circulant stencils and applied as circular
//! convolutions; dense assembly exists only inside tests. The mass matrix of
//! the uniform periodic case is h·I, but inner products go through
//! `mass_diag` so the code stays honest about the weighting.

pub mod fourier;

pub use fourier::{fourier_inverse_helmholtz, FourierOperator};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::GridTooSmall { n, min: 4 });
        }
        if !(x_max - x_min).is_finite() || x_max <= x_min {
            return Err(Error::InvalidConfig(format!(
                "bad domain [{x_min}, {x_max}]"
            )));
        }
        Ok(GridSpec { x_min, x_max, n })
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn h(&self) -> f64 {
        self.length() / self.n as f64
    }

    /// Nodes x_j = x_min + j·h, j = 0..n−1; x_max is identified with x_min.
    pub fn nodes(&self) -> Vec<f64> {
        let h = self.h();
        (0..self.n).map(|j| self.x_min + j as f64 * h).collect()
    }

    /// M-weighted inner product h·Σ a_j b_j.
    pub fn mass_inner(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), self.n);
        debug_assert_eq!(b.len(), self.n);
        let h = self.h();
        h * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
    }

    /// M-weighted L² norm sqrt(Σ M_jj a_j²).
    pub fn mass_norm(&self, a: &[f64]) -> f64 {
        self.mass_inner(a, a).sqrt()
    }
}

/// Circulant stencil: (S x)_j = Σ_m coeffs[m]·x_{j + lo + m (mod n)}.
/// Derivative stencils carry their 1/h scaling in the coefficients.
#[derive(Clone, Debug)]
pub struct Stencil {
    lo: isize,
    coeffs: Vec<f64>,
}

impl Stencil {
    pub fn new(lo: isize, coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty());
        Stencil { lo, coeffs }
    }

    pub fn identity() -> Self {
        Stencil {
            lo: 0,
            coeffs: vec![1.0],
        }
    }

    pub fn lo(&self) -> isize {
        self.lo
    }

    pub fn hi(&self) -> isize {
        self.lo + self.coeffs.len() as isize - 1
    }

    /// Largest offset magnitude; the bandwidth of the circulant matrix.
    pub fn radius(&self) -> usize {
        self.lo.unsigned_abs().max(self.hi().unsigned_abs())
    }

    pub fn coeff(&self, offset: isize) -> f64 {
        if offset < self.lo || offset > self.hi() {
            0.0
        } else {
            self.coeffs[(offset - self.lo) as usize]
        }
    }

    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let n = x.len();
        assert_eq!(y.len(), n);
        let ni = n as isize;
        let w = self.coeffs.len();
        // Rows whose full stencil stays in bounds take the direct path.
        let first = (-self.lo).max(0) as usize;
        let last = (ni - self.hi()).max(0) as usize;
        let interior = first..last.min(n);
        for j in 0..interior.start.min(n) {
            y[j] = self.wrapped_row(x, j as isize, ni);
        }
        for j in interior.clone() {
            let base = j as isize + self.lo;
            let xs = &x[base as usize..base as usize + w];
            y[j] = self
                .coeffs
                .iter()
                .zip(xs)
                .map(|(c, v)| c * v)
                .sum::<f64>();
        }
        for j in interior.end..n {
            y[j] = self.wrapped_row(x, j as isize, ni);
        }
    }

    fn wrapped_row(&self, x: &[f64], j: isize, n: isize) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(m, c)| {
                let idx = (j + self.lo + m as isize).rem_euclid(n) as usize;
                c * x[idx]
            })
            .sum()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        self.apply_into(x, &mut y);
        y
    }

    pub fn scaled(&self, a: f64) -> Stencil {
        Stencil {
            lo: self.lo,
            coeffs: self.coeffs.iter().map(|c| a * c).collect(),
        }
    }

    pub fn add(&self, other: &Stencil) -> Stencil {
        let lo = self.lo.min(other.lo);
        let hi = self.hi().max(other.hi());
        let coeffs = (lo..=hi)
            .map(|m| self.coeff(m) + other.coeff(m))
            .collect();
        Stencil { lo, coeffs }
    }

    /// Stencil of the operator product self∘other (apply other first).
    pub fn compose(&self, other: &Stencil) -> Stencil {
        let lo = self.lo + other.lo;
        let hi = self.hi() + other.hi();
        let mut coeffs = vec![0.0; (hi - lo + 1) as usize];
        for (ka, &a) in self.coeffs.iter().enumerate() {
            for (kb, &b) in other.coeffs.iter().enumerate() {
                coeffs[ka + kb] += a * b;
            }
        }
        Stencil { lo, coeffs }
    }

    /// Transpose of the circulant matrix: offsets negated.
    pub fn transpose(&self) -> Stencil {
        let mut coeffs: Vec<f64> = self.coeffs.iter().rev().copied().collect();
        let lo = -self.hi();
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Stencil { lo, coeffs }
    }

    /// Circulant eigenvalue Σ_m s_m e^{i m θ} at angle θ = 2π j / n.
    pub fn symbol(&self, theta: f64) -> (f64, f64) {
        let mut re = 0.0;
        let mut im = 0.0;
        for (m, &c) in self.coeffs.iter().enumerate() {
            let phi = (self.lo + m as isize) as f64 * theta;
            re += c * phi.cos();
            im += c * phi.sin();
        }
        (re, im)
    }
}

#[derive(Clone, Debug)]
pub struct OperatorSet {
    pub grid: GridSpec,
    pub order: usize,
    pub d_plus: Stencil,
    pub d_minus: Stencil,
    pub d_central: Stencil,
    pub mass_diag: Vec<f64>,
}

/// Periodic upwind interior stencils, offsets relative to the point,
/// coefficients before the 1/h scaling.
fn upwind_tables(order: usize) -> Option<(isize, &'static [f64], isize, &'static [f64])> {
    match order {
        2 => Some((
            0,
            &[-3.0 / 2.0, 2.0, -1.0 / 2.0],
            -2,
            &[1.0 / 2.0, -2.0, 3.0 / 2.0],
        )),
        3 => Some((
            -1,
            &[-1.0 / 3.0, -1.0 / 2.0, 1.0, -1.0 / 6.0],
            -2,
            &[1.0 / 6.0, -1.0, 1.0 / 2.0, 1.0 / 3.0],
        )),
        4 => Some((
            -1,
            &[-1.0 / 4.0, -5.0 / 6.0, 3.0 / 2.0, -1.0 / 2.0, 1.0 / 12.0],
            -3,
            &[-1.0 / 12.0, 1.0 / 2.0, -3.0 / 2.0, 5.0 / 6.0, 1.0 / 4.0],
        )),
        _ => None,
    }
}

pub fn build_upwind_operators(grid: GridSpec, order: usize) -> Result<OperatorSet> {
    let (lo_p, c_p, lo_m, c_m) = upwind_tables(order).ok_or(Error::UnsupportedOrder(order))?;
    let min_n = 2 * order + 2;
    if grid.n < min_n {
        return Err(Error::GridTooSmall {
            n: grid.n,
            min: min_n,
        });
    }
    let h = grid.h();
    let d_plus = Stencil::new(lo_p, c_p.iter().map(|c| c / h).collect());
    let d_minus = Stencil::new(lo_m, c_m.iter().map(|c| c / h).collect());
    let d_central = d_plus.add(&d_minus).scaled(0.5);
    Ok(OperatorSet {
        grid,
        order,
        d_plus,
        d_minus,
        d_central,
        mass_diag: vec![h; grid.n],
    })
}

/// Spec-level apply: stencil × grid vector with a length check.
pub fn apply(op: &Stencil, vec: &[f64], grid: &GridSpec) -> Result<Vec<f64>> {
    if vec.len() != grid.n {
        return Err(Error::SizeMismatch {
            expected: grid.n,
            got: vec.len(),
        });
    }
    Ok(op.apply(vec))
}
