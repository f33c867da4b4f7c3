//! Traveling-wave machinery: the closed-form BBM soliton, the Petviashvili
//! fixed-point iteration for hyperbolic solitary waves, and phase-plane
//! integration of the traveling-wave ODE including its singular line.

use serde::Serialize;

use crate::sbp::{FourierOperator, GridSpec};
use crate::{Error, Result};

/// Closed-form BBM solitary wave on unit background,
/// η(x, t) = 1 + 3(c−1) / cosh²(K(x − ct)), K = √((c−1)/c)/2,
/// wrapped periodically onto the grid.
pub fn bbm_soliton(c: f64, grid: &GridSpec, t: f64) -> Result<Vec<f64>> {
    if !(c > 1.0) || !c.is_finite() {
        return Err(Error::InvalidWave(format!(
            "soliton needs speed c > 1, got {c}"
        )));
    }
    let k = 0.5 * ((c - 1.0) / c).sqrt();
    let l = grid.length();
    let amp = 3.0 * (c - 1.0);
    Ok(grid
        .nodes()
        .iter()
        .map(|&x| {
            let mut xi = (x - c * t - grid.x_min).rem_euclid(l) + grid.x_min;
            // Wrap relative to the peak's image nearest the domain center.
            let center = 0.5 * (grid.x_min + grid.x_max);
            if xi - center > 0.5 * l {
                xi -= l;
            } else if center - xi > 0.5 * l {
                xi += l;
            }
            1.0 + amp / (k * xi).cosh().powi(2)
        })
        .collect())
}

/// Magnitude of the soliton tail at the domain boundary; callers warn when
/// this is not negligible against the profile.
pub fn soliton_boundary_tail(c: f64, grid: &GridSpec) -> f64 {
    let k = 0.5 * ((c - 1.0) / c).sqrt();
    3.0 * (c - 1.0) / (k * 0.5 * grid.length()).cosh().powi(2)
}

/// A traveling-wave profile of the hyperbolic system in the frame ξ = x − ct.
#[derive(Clone, Debug, Serialize)]
pub struct TravelingWaveProfile {
    pub xi: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    pub c: f64,
    pub eps: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct PetviashviliOptions {
    /// Stabilizing exponent on the ratio m; 2 is the classical choice for a
    /// quadratic nonlinearity.
    pub gamma_exp: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Background added to the converged zero-background iterate. The
    /// traveling ansatz is solved for ũ = u − shift; validation against the
    /// closed-form soliton fixes shift = +1 (a −1 background reproduces
    /// nothing of the kind), but the convention stays inspectable here.
    pub shift: f64,
}

impl Default for PetviashviliOptions {
    fn default() -> Self {
        PetviashviliOptions {
            gamma_exp: 2.0,
            tol: 1e-12,
            max_iter: 1000,
            shift: 1.0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PetviashviliResult {
    pub profile: TravelingWaveProfile,
    /// Sup-norm iterate increments per iteration.
    pub increments: Vec<f64>,
    /// M-weighted fixed-point residual ‖Lũ − N(ũ)‖ per iteration.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub final_residual: f64,
}

/// Symbol of the linear operator of the shifted traveling system,
/// L̂(k) = (c−1) + (c−ε²)k² / (1 − (c−ε²)cε²k²).
fn petviashvili_symbol(c: f64, eps: f64, k: f64) -> Result<f64> {
    let eps2 = eps * eps;
    let gamma = (c - eps2) * c * eps2;
    let den = 1.0 - gamma * k * k;
    if den.abs() < 1e-13 * (1.0 + (gamma * k * k).abs()) {
        return Err(Error::SingularSymbol {
            k,
            magnitude: den.abs(),
        });
    }
    Ok((c - 1.0) + (c - eps2) * k * k / den)
}

/// Petviashvili iteration for the solitary profile of the hyperbolic system:
/// fixed point of Lũ = ũ²/2 in the zero-background frame, iterated as
/// ũ ← L⁻¹(m^γ ũ²/2) with m = ⟨Lũ, ũ⟩/⟨ũ²/2, ũ⟩.
///
/// Converged output carries the full state: v from v = (c − 1 − ũ/2)ũ and
/// w from w = u′ − cε²v′ (spectral derivatives).
pub fn petviashvili_solve(
    c: f64,
    eps: f64,
    fop: &FourierOperator,
    initial_guess: &[f64],
    opts: &PetviashviliOptions,
) -> Result<PetviashviliResult> {
    let eps2 = eps * eps;
    if !(c > 1.0) || !(eps > 0.0) || c <= eps2 {
        return Err(Error::InvalidWave(format!(
            "solitary regime needs c > 1 and c > eps^2, got c = {c}, eps = {eps}"
        )));
    }
    let grid = &fop.grid;
    if initial_guess.len() != grid.n {
        return Err(Error::SizeMismatch {
            expected: grid.n,
            got: initial_guess.len(),
        });
    }
    // Precheck the symbol on every grid mode so resonances surface before
    // the iteration starts.
    for &k in &fop.wavenumbers {
        let s = petviashvili_symbol(c, eps, k)?;
        if s.abs() < 1e-13 {
            return Err(Error::SingularSymbol {
                k,
                magnitude: s.abs(),
            });
        }
    }
    let apply_l = |u: &[f64]| -> Vec<f64> {
        fop.apply_real_symbol(|k| petviashvili_symbol(c, eps, k).unwrap(), u)
            .expect("length checked")
    };
    let solve_l = |rhs: &[f64]| -> Vec<f64> {
        fop.apply_real_symbol(|k| 1.0 / petviashvili_symbol(c, eps, k).unwrap(), rhs)
            .expect("length checked")
    };
    let m_norm = |r: &[f64]| grid.mass_norm(r);

    let mut u = initial_guess.to_vec();
    let mut increments = Vec::new();
    let mut residuals = Vec::new();
    let mut converged = false;
    let mut final_residual = f64::INFINITY;
    for _ in 0..opts.max_iter {
        let lu = apply_l(&u);
        let nu: Vec<f64> = u.iter().map(|x| 0.5 * x * x).collect();
        let num = grid.mass_inner(&lu, &u);
        let den = grid.mass_inner(&nu, &u);
        if !(den.abs() > 0.0) || !num.is_finite() {
            return Err(Error::PetviashviliDiverged {
                tol: opts.tol,
                iters: increments.len(),
                residual: f64::NAN,
                history: increments,
            });
        }
        let m = num / den;
        if m <= 0.0 {
            return Err(Error::InvalidWave(format!(
                "Petviashvili ratio m = {m:.3e} is not positive: iteration diverges \
                 (guess orthogonal to the solitary branch?)"
            )));
        }
        let scaled: Vec<f64> = nu.iter().map(|x| m.powf(opts.gamma_exp) * x).collect();
        let next = solve_l(&scaled);
        let inc = u
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let res_vec: Vec<f64> = lu.iter().zip(&nu).map(|(a, b)| a - b).collect();
        let res = m_norm(&res_vec);
        increments.push(inc);
        residuals.push(res);
        u = next;
        final_residual = res;
        // Converge on the iterate increment and on the genuine fixed-point
        // residual: the increment alone can pass while high-mode residual
        // remains above the contract.
        if inc <= opts.tol && res <= 10.0 * opts.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::PetviashviliDiverged {
            tol: opts.tol,
            iters: increments.len(),
            residual: final_residual,
            history: increments,
        });
    }
    // Recompute the residual at the accepted iterate.
    let lu = apply_l(&u);
    let res_vec: Vec<f64> = lu
        .iter()
        .zip(u.iter())
        .map(|(a, &x)| a - 0.5 * x * x)
        .collect();
    final_residual = m_norm(&res_vec);

    let v: Vec<f64> = u.iter().map(|&x| (c - 1.0 - 0.5 * x) * x).collect();
    let du = fop.derivative(&u)?;
    let dv = fop.derivative(&v)?;
    let w: Vec<f64> = du
        .iter()
        .zip(&dv)
        .map(|(a, b)| a - c * eps2 * b)
        .collect();
    let u_full: Vec<f64> = u.iter().map(|&x| x + opts.shift).collect();
    Ok(PetviashviliResult {
        profile: TravelingWaveProfile {
            xi: grid.nodes(),
            u: u_full,
            v,
            w,
            c,
            eps,
        },
        iterations: increments.len(),
        increments,
        residuals,
        final_residual,
    })
}

/// Right-hand side of the traveling-wave ODE in the (ũ, w̃) phase plane:
///   ũ′ = w̃ / (1 + cε²(ũ − c)),   w̃′ = ũ(ũ/2 − c) / (ε² − c).
/// The denominator root 1 + cε²(ũ − c) = 0 is the singular line.
pub fn traveling_ode_rhs(u: f64, w: f64, c: f64, eps2: f64) -> Result<(f64, f64)> {
    let den2 = eps2 - c;
    if den2.abs() < 1e-14 {
        return Err(Error::InvalidWave(format!(
            "traveling ODE degenerate: eps^2 = {eps2} equals c = {c}"
        )));
    }
    let den = 1.0 + c * eps2 * (u - c);
    if den.abs() < 1e-14 {
        return Err(Error::InvalidWave(format!(
            "traveling ODE singular line reached: 1 + c eps^2 (u - c) = {den:.3e} at u = {u}"
        )));
    }
    Ok((w / den, u * (0.5 * u - c) / den2))
}

/// Phase-plane orbit with sample points in ξ.
#[derive(Clone, Debug, Serialize)]
pub struct PhasePlaneOrbit {
    pub profile: TravelingWaveProfile,
    /// True when integration stopped at the singular line rather than
    /// exhausting its step budget.
    pub hit_singular_line: bool,
    pub steps_taken: usize,
}

fn singular_den(u: f64, c: f64, eps2: f64) -> f64 {
    1.0 + c * eps2 * (u - c)
}

/// One classical RK4 step; None when any stage denominator drops below
/// `den_floor` on the signed side. Stage points that sneak arbitrarily close
/// to the singular line produce enormous slopes that can cancel into a
/// finite landing point on the far side, so a zero-adjacent floor is not
/// enough; callers pass a floor tied to their stopping distance.
fn rk4_try(
    u: f64,
    w: f64,
    h: f64,
    c: f64,
    eps2: f64,
    den_sign: f64,
    den_floor: f64,
) -> Option<(f64, f64)> {
    let f = |u: f64, w: f64| -> Option<(f64, f64)> {
        let den = singular_den(u, c, eps2);
        if den * den_sign < den_floor {
            return None;
        }
        traveling_ode_rhs(u, w, c, eps2).ok()
    };
    let (k1u, k1w) = f(u, w)?;
    let (k2u, k2w) = f(u + 0.5 * h * k1u, w + 0.5 * h * k1w)?;
    let (k3u, k3w) = f(u + 0.5 * h * k2u, w + 0.5 * h * k2w)?;
    let (k4u, k4w) = f(u + h * k3u, w + h * k3w)?;
    let nu = u + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
    let nw = w + h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
    if !(nu.is_finite() && nw.is_finite()) {
        return None;
    }
    // A smooth flow moves h·‖f‖(1 + O(h)) per step; a displacement far
    // beyond that means stage slopes blew up near the line and partially
    // cancelled, i.e. the step jumped across. Reject it.
    let speed = (k1u * k1u + k1w * k1w).sqrt();
    let disp = ((nu - u) * (nu - u) + (nw - w) * (nw - w)).sqrt();
    if disp > 10.0 * h * speed + 1e3 * f64::EPSILON * (u.abs() + w.abs() + 1.0) {
        return None;
    }
    Some((nu, nw))
}

pub const DEFAULT_DEN_STOP: f64 = 1e-6;

/// Fixed-step RK4 integration of the traveling-wave ODE. When a step would
/// reach the singular line the step is bisected to land just on the regular
/// side (denominator magnitude ≈ den_stop) and the orbit stops there with
/// the flag set.
pub fn integrate_phase_plane(
    start: (f64, f64),
    c: f64,
    eps2: f64,
    step: f64,
    n_steps: usize,
) -> Result<PhasePlaneOrbit> {
    integrate_phase_plane_with(start, c, eps2, step, n_steps, DEFAULT_DEN_STOP)
}

pub fn integrate_phase_plane_with(
    start: (f64, f64),
    c: f64,
    eps2: f64,
    step: f64,
    n_steps: usize,
    den_stop: f64,
) -> Result<PhasePlaneOrbit> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidConfig(format!("bad step {step}")));
    }
    let (mut u, mut w) = start;
    let den0 = singular_den(u, c, eps2);
    if den0.abs() <= den_stop {
        return Err(Error::InvalidWave(format!(
            "start point already on the singular line (den = {den0:.3e})"
        )));
    }
    let den_sign = den0.signum();
    let den_floor = 0.5 * den_stop;
    // Reject degenerate eps2 once up front.
    traveling_ode_rhs(u, w, c, eps2)?;
    let mut xi = 0.0f64;
    let mut orbit_xi = vec![0.0];
    let mut orbit_u = vec![u];
    let mut orbit_w = vec![w];
    let mut hit = false;
    let mut steps_taken = 0usize;
    for _ in 0..n_steps {
        let ok = rk4_try(u, w, step, c, eps2, den_sign, den_floor)
            .filter(|&(nu, _)| singular_den(nu, c, eps2) * den_sign >= den_stop);
        match ok {
            Some((nu, nw)) => {
                u = nu;
                w = nw;
                xi += step;
            }
            None => {
                // Bisect the step length: largest h whose landing point
                // keeps den·sign ≥ den_stop.
                let mut lo = 0.0f64;
                let mut hi = step;
                let mut landed = None;
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    match rk4_try(u, w, mid, c, eps2, den_sign, den_floor)
                        .filter(|&(nu, _)| singular_den(nu, c, eps2) * den_sign >= den_stop)
                    {
                        Some(p) => {
                            lo = mid;
                            landed = Some(p);
                        }
                        None => hi = mid,
                    }
                }
                if let Some((nu, nw)) = landed {
                    u = nu;
                    w = nw;
                    xi += lo;
                    steps_taken += 1;
                    orbit_xi.push(xi);
                    orbit_u.push(u);
                    orbit_w.push(w);
                }
                hit = true;
                break;
            }
        }
        steps_taken += 1;
        orbit_xi.push(xi);
        orbit_u.push(u);
        orbit_w.push(w);
    }
    let v = orbit_u
        .iter()
        .map(|&uu| (c - 0.5 * uu) * uu)
        .collect::<Vec<f64>>();
    Ok(PhasePlaneOrbit {
        profile: TravelingWaveProfile {
            xi: orbit_xi,
            u: orbit_u,
            v,
            w: orbit_w,
            c,
            eps: eps2.sqrt(),
        },
        hit_singular_line: hit,
        steps_taken,
    })
}

/// One RK4 step of the desingularized traveling system. Rescaling the phase
/// variable by dξ/dτ = den(ũ) turns Eq.-style ũ′ = w̃/den, w̃′ = G(ũ) into
/// the polynomial system
///   dũ/dτ = w̃,  dw̃/dτ = G(ũ)·den(ũ),  dξ/dτ = den(ũ),
/// with the same orbits (where den > 0) and no singular line: the peakon
/// corner becomes a regular saddle the orbit approaches exponentially in τ
/// while ξ converges to the finite corner position.
fn peakon_aug_step(q: [f64; 3], h: f64, c: f64, eps2: f64) -> [f64; 3] {
    let f = |q: [f64; 3]| -> [f64; 3] {
        let den = singular_den(q[0], c, eps2);
        let g = q[0] * (0.5 * q[0] - c) / (eps2 - c);
        [q[1], g * den, den]
    };
    let k1 = f(q);
    let k2 = f([
        q[0] + 0.5 * h * k1[0],
        q[1] + 0.5 * h * k1[1],
        q[2] + 0.5 * h * k1[2],
    ]);
    let k3 = f([
        q[0] + 0.5 * h * k2[0],
        q[1] + 0.5 * h * k2[1],
        q[2] + 0.5 * h * k2[2],
    ]);
    let k4 = f([q[0] + h * k3[0], q[1] + h * k3[1], q[2] + h * k3[2]]);
    let mut out = q;
    for i in 0..3 {
        out[i] = q[i] + h / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
    }
    out
}

/// Symmetric peakon construction: shoot from the saddle (2c, 0) along its
/// unstable manifold down to the singular line, reflect w̃ → −w̃ there and
/// continue integrating forward, replaying the outbound step sizes in
/// reverse so the continuation samples align with the mirrored outbound
/// ones. The true flow is reversible under (ξ, w̃) → (−ξ, −w̃), so the
/// worst pairwise mismatch isolates integrator error through the corner.
///
/// Integration runs in the desingularized variable τ (see above): in the
/// raw phase variable the transverse dynamics stiffen like 1/den near the
/// line and a fixed step cannot resolve the corner reversibly, while the
/// polynomial τ-system has no stiffness anywhere on the orbit.
///
/// The comparison stops once the continuation has climbed back within 5%
/// of the saddle plateau: past that point the saddle's unstable direction
/// amplifies any deviation exponentially, and the mismatch would measure
/// that amplification instead of the corner construction. The glued profile
/// uses the outbound branch and its exact mirror.
#[derive(Clone, Debug, Serialize)]
pub struct PeakonResult {
    /// Glued profile, ξ centered so the corner sits at 0.
    pub profile: TravelingWaveProfile,
    /// Worst distance between the reflected continuation and the mirrored
    /// outbound branch over the corner window.
    pub symmetry_defect: f64,
    /// u value at which the defect comparison stopped.
    pub compare_u_limit: f64,
    pub corner_u: f64,
    pub corner_den: f64,
    pub hit_singular_line: bool,
}

pub fn symmetric_peakon(
    c: f64,
    eps2: f64,
    step: f64,
    offset: f64,
    max_steps: usize,
) -> Result<PeakonResult> {
    if !(step > 0.0) || !(offset > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "need positive step and offset, got {step}, {offset}"
        )));
    }
    // Saddle of the τ-system at (2c, 0): d(δũ)/dτ = δw̃ and
    // d(δw̃)/dτ = G'(2c)·den(2c)·δũ, so μ² = den(2c)·c/(ε²−c) and the
    // unstable eigenvector is (1, μ). Take the branch descending in ũ.
    let den_s = singular_den(2.0 * c, c, eps2);
    let mu2 = den_s * c / (eps2 - c);
    if !(mu2 > 0.0) {
        return Err(Error::InvalidWave(format!(
            "(2c, 0) is not a saddle for c = {c}, eps^2 = {eps2} (mu^2 = {mu2:.3e})"
        )));
    }
    let mu = mu2.sqrt();
    let den_stop = DEFAULT_DEN_STOP;
    let mut q = [2.0 * c - offset, -mu * offset, 0.0];
    if singular_den(q[0], c, eps2) <= den_stop {
        return Err(Error::InvalidWave(
            "start point already on the singular line".into(),
        ));
    }
    let mut outbound: Vec<[f64; 3]> = vec![q];
    let mut taus: Vec<f64> = vec![0.0];
    let mut steps_h: Vec<f64> = Vec::new();
    let mut hit = false;
    for _ in 0..max_steps {
        let next = peakon_aug_step(q, step, c, eps2);
        if !next.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidWave(
                "desingularized orbit left the finite plane".into(),
            ));
        }
        if singular_den(next[0], c, eps2) <= den_stop {
            // Bisect the final step so the orbit lands just on the regular
            // side of the line; the field is smooth so this is only a
            // stopping rule, not a stability guard.
            let mut lo = 0.0f64;
            let mut hi = step;
            let mut landed = None;
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let trial = peakon_aug_step(q, mid, c, eps2);
                if singular_den(trial[0], c, eps2) > den_stop {
                    lo = mid;
                    landed = Some(trial);
                } else {
                    hi = mid;
                }
            }
            if let Some(p) = landed {
                q = p;
                outbound.push(q);
                taus.push(taus.last().unwrap() + lo);
                steps_h.push(lo);
            }
            hit = true;
            break;
        }
        q = next;
        outbound.push(q);
        taus.push(taus.last().unwrap() + step);
        steps_h.push(step);
    }
    if !hit {
        return Err(Error::InvalidWave(
            "orbit did not reach the singular line within the step budget".into(),
        ));
    }
    let m = outbound.len() - 1; // landing index
    let (ue, we) = (outbound[m][0], outbound[m][1]);
    let u_cmp = ue + 0.95 * (2.0 * c - ue);
    let mut r = [ue, -we, outbound[m][2]];
    let mut defect = 0.0f64;
    for k in (0..m).rev() {
        r = peakon_aug_step(r, steps_h[k], c, eps2);
        let du = r[0] - outbound[k][0];
        let dw = r[1] + outbound[k][1];
        let d = (du * du + dw * dw).sqrt();
        if d > defect {
            defect = d;
        }
        if r[0] >= u_cmp {
            break;
        }
    }
    // Glue: outbound branch and its mirror, centered on the corner.
    let xi_star = outbound[m][2];
    let mut xi = Vec::with_capacity(2 * m + 1);
    let mut uu = Vec::with_capacity(2 * m + 1);
    let mut ww = Vec::with_capacity(2 * m + 1);
    for p in &outbound {
        xi.push(p[2] - xi_star);
        uu.push(p[0]);
        ww.push(p[1]);
    }
    for p in outbound.iter().rev().skip(1) {
        xi.push(xi_star - p[2]);
        uu.push(p[0]);
        ww.push(-p[1]);
    }
    let v = uu.iter().map(|&x| (c - 0.5 * x) * x).collect();
    Ok(PeakonResult {
        profile: TravelingWaveProfile {
            xi,
            u: uu,
            v,
            w: ww,
            c,
            eps: eps2.sqrt(),
        },
        symmetry_defect: defect,
        compare_u_limit: u_cmp,
        corner_u: ue,
        corner_den: singular_den(ue, c, eps2),
        hit_singular_line: true,
    })
}

/// Shoot the unstable manifold of the origin (a saddle when c > ε²) around
/// the homoclinic loop; returns the closest return distance to the origin.
pub fn homoclinic_return(
    c: f64,
    eps2: f64,
    offset: f64,
    step: f64,
    max_steps: usize,
) -> Result<f64> {
    let den0 = singular_den(0.0, c, eps2);
    let lam2 = (1.0 / den0) * (-c / (eps2 - c));
    if !(lam2 > 0.0) {
        return Err(Error::InvalidWave(format!(
            "origin is not a saddle for c = {c}, eps^2 = {eps2}"
        )));
    }
    let lam = lam2.sqrt();
    let u0 = offset;
    let w0 = lam * den0 * offset;
    let orbit = integrate_phase_plane_with((u0, w0), c, eps2, step, max_steps, DEFAULT_DEN_STOP)?;
    let mut left_neighborhood = false;
    let mut best = f64::INFINITY;
    for (u, w) in orbit.profile.u.iter().zip(&orbit.profile.w) {
        let r = (u * u + w * w).sqrt();
        if r > 100.0 * offset {
            left_neighborhood = true;
        }
        if left_neighborhood && r < best {
            best = r;
        }
    }
    if !left_neighborhood {
        return Err(Error::InvalidWave(
            "orbit never left the saddle neighborhood; shot too weak".into(),
        ));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soliton_peak_and_background() {
        let grid = GridSpec::new(-90.0, 90.0, 512).unwrap();
        let eta = bbm_soliton(1.2, &grid, 0.0).unwrap();
        let mx = eta.iter().cloned().fold(f64::MIN, f64::max);
        assert!((mx - 1.6).abs() < 1e-6); // 1 + 3(c−1) at the peak
        assert!((eta[0] - 1.0).abs() < 1e-12); // far tail on background 1
        // Peak travels: at t = 10 the max sits near x = 12.
        let eta_t = bbm_soliton(1.2, &grid, 10.0).unwrap();
        let arg = eta_t
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        let x_peak = grid.nodes()[arg];
        assert!((x_peak - 12.0).abs() < 2.0 * grid.h());
    }

    #[test]
    fn soliton_rejects_subcritical_speed() {
        let grid = GridSpec::new(-90.0, 90.0, 64).unwrap();
        assert!(bbm_soliton(0.9, &grid, 0.0).is_err());
    }

    #[test]
    fn traveling_rhs_guards() {
        assert!(traveling_ode_rhs(1.0, 1.0, 0.5, 0.5).is_err()); // eps2 == c
        // On the singular line: u such that 1 + c eps2 (u − c) = 0.
        let c = 0.5;
        let eps2 = 4.0 / 3.0;
        let u_line = c - 1.0 / (c * eps2);
        assert!(traveling_ode_rhs(u_line, 0.3, c, eps2).is_err());
        assert!(traveling_ode_rhs(0.0, 0.3, c, eps2).is_ok());
    }

    #[test]
    fn phase_plane_regular_orbit_conserves_first_integral() {
        // H = w²/2 − ∫ den·G du is conserved along orbits of the ξ-system
        // wherever den > 0; RK4 should preserve it to its order.
        let c = 1.2;
        let eps2 = 0.5;
        let p = |u: f64| {
            // ∫0^u (1 + c e (s − c))·(s(s/2 − c)/(e − c)) ds, e = eps2,
            // evaluated exactly for the quartic integrand.
            let e = eps2;
            let a = 1.0 + c * e * (0.0 - c);
            let b = c * e;
            // den·G = (a + b s)(s²/2 − c s)/(e − c)
            // = [a s²/2 − a c s + b s³/2 − b c s²]/(e − c)
            (a * u.powi(3) / 6.0 - a * c * u * u / 2.0 + b * u.powi(4) / 8.0
                - b * c * u.powi(3) / 3.0)
                / (e - c)
        };
        let h_of = |u: f64, w: f64| 0.5 * w * w - p(u);
        let start = (0.1, 0.05);
        let orbit = integrate_phase_plane(start, c, eps2, 1e-3, 20_000).unwrap();
        assert!(!orbit.hit_singular_line);
        let h0 = h_of(start.0, start.1);
        for (u, w) in orbit.profile.u.iter().zip(&orbit.profile.w) {
            assert!((h_of(*u, *w) - h0).abs() < 1e-10);
        }
    }

    #[test]
    fn homoclinic_shot_returns_to_origin() {
        let d = homoclinic_return(1.2, 0.5, 1e-8, 1e-3, 200_000).unwrap();
        assert!(d < 1e-6, "return distance {d:e}");
    }

    #[test]
    fn peakon_orbit_hits_line_and_is_symmetric() {
        let res = symmetric_peakon(0.5, 4.0 / 3.0, 1e-3, 1e-8, 2_000_000).unwrap();
        assert!(res.hit_singular_line);
        // Singular line for these parameters sits at ũ = −1.
        assert!((res.corner_u - (-1.0)).abs() < 0.05, "corner at {}", res.corner_u);
        assert!(res.symmetry_defect <= 1e-8, "defect {:e}", res.symmetry_defect);
        // Peaked: |slope| just off the corner is near 3/√5, nowhere near 0.
        let n = res.profile.xi.len();
        let mid = n / 2;
        let du = res.profile.u[mid + 1] - res.profile.u[mid];
        let dxi = res.profile.xi[mid + 1] - res.profile.xi[mid];
        let slope = du / dxi;
        assert!(slope > 0.5, "right-of-corner slope {slope}");
    }
}

