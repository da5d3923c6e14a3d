//! Self-similar solutions and the scalar diagnostics tied to them.
//!
//! A closed convex hypersurface shrinks self-similarly under the α-Gauss
//! curvature flow exactly when K^α = h. On curves this is the periodic ODE
//! h″ + h = h^{−1/α}, solved here by shooting; in higher dimensions the only
//! available self-similar data are round spheres and converged flow states.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{GcfError, Result};
use crate::field::argmax;
use crate::geometry::{Geometry1, GeometryBundle, TensorOps};
use crate::grid::{Grid1, Grid2, SphereGrid, TWO_PI};
use crate::stencil::Deriv1;
use crate::support::shrinker_residual;
use crate::tol;

/// Fixed step count of the curve integrator: 2π/4096 with RK4 puts the
/// one-revolution truncation error near the closure tolerance floor.
pub const ODE_STEPS: usize = 4096;

/// A closed trajectory of h″ + h = h^{−1/α}, sampled at θ_j = j·2π/N.
#[derive(Debug, Clone)]
pub struct ShrinkerSolution {
    pub alpha: f64,
    pub n: usize,
    pub h: Vec<f64>,
    /// Max |h − K^α| of the sampled support function at native resolution.
    pub residual: f64,
    /// |h(2π) − h(0)| + |h′(2π) − h′(0)|.
    pub closure: f64,
    /// Max drift of the conserved energy h′²/2 + h²/2 − Φ(h) along the orbit.
    pub energy_drift: f64,
    /// Endpoint Richardson estimate: |end(Δ) − end(2Δ)| / 15.
    pub step_error: f64,
}

impl ShrinkerSolution {
    /// Restriction to a coarser periodic grid; N must divide the native count.
    pub fn subsample(&self, n_nodes: usize) -> Result<Vec<f64>> {
        if n_nodes == 0 || self.h.len() % n_nodes != 0 {
            return Err(GcfError::ShapeMismatch);
        }
        let stride = self.h.len() / n_nodes;
        Ok(self.h.iter().step_by(stride).copied().collect())
    }
}

/// Outcome of one shooting integration.
#[derive(Debug, Clone)]
pub enum OdeOutcome {
    Closed(ShrinkerSolution),
    /// Trajectory stayed convex but did not return to its initial state.
    Open { closure: f64 },
    /// h reached 0 before a full revolution: the trajectory leaves the cone
    /// of support functions.
    Blowup { theta: f64 },
}

/// Potential with Φ′ = h^{−1/α}, fixing the conserved energy of the orbit.
fn potential(h: f64, alpha: f64) -> f64 {
    if alpha == 1.0 {
        libm::log(h)
    } else {
        let e = 1.0 - 1.0 / alpha;
        libm::pow(h, e) / e
    }
}

#[inline]
fn accel(h: f64, alpha: f64) -> f64 {
    libm::pow(h, -1.0 / alpha) - h
}

/// Integrate one revolution from (h₀, p₀) with `steps` RK4 steps; returns the
/// sample vector (length `steps`), final state, and max energy drift, or the
/// blowup angle.
fn integrate(
    alpha: f64,
    h0: f64,
    p0: f64,
    steps: usize,
) -> core::result::Result<(Vec<f64>, f64, f64, f64), f64> {
    let dt = TWO_PI / steps as f64;
    let mut h = h0;
    let mut p = p0;
    let e0 = 0.5 * p0 * p0 + 0.5 * h0 * h0 - potential(h0, alpha);
    let mut drift = 0.0_f64;
    let mut samples = vec![0.0; steps];
    for j in 0..steps {
        samples[j] = h;
        let k1h = p;
        let k1p = accel(h, alpha);
        let h2 = h + 0.5 * dt * k1h;
        if h2 <= 0.0 {
            return Err(j as f64 * dt);
        }
        let k2h = p + 0.5 * dt * k1p;
        let k2p = accel(h2, alpha);
        let h3 = h + 0.5 * dt * k2h;
        if h3 <= 0.0 {
            return Err(j as f64 * dt);
        }
        let k3h = p + 0.5 * dt * k2p;
        let k3p = accel(h3, alpha);
        let h4 = h + dt * k3h;
        if h4 <= 0.0 {
            return Err(j as f64 * dt);
        }
        let k4h = p + dt * k3p;
        let k4p = accel(h4, alpha);
        h += dt / 6.0 * (k1h + 2.0 * k2h + 2.0 * k3h + k4h);
        p += dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        if !(h > 0.0) || !h.is_finite() || !p.is_finite() {
            return Err((j + 1) as f64 * dt);
        }
        let e = 0.5 * p * p + 0.5 * h * h - potential(h, alpha);
        drift = drift.max((e - e0).abs());
    }
    Ok((samples, h, p, drift))
}

/// Shoot the curve shrinker ODE from h(0) = h₀, h′(0) = p₀ over [0, 2π].
/// A trajectory closing to within the tolerance is returned as a solution
/// whose residual is measured on the native periodic grid.
pub fn solve_shrinker_ode_n1(alpha: f64, h0: f64, p0: f64) -> Result<OdeOutcome> {
    if alpha <= 0.0 || h0 <= 0.0 {
        return Err(GcfError::OdeBlowup { theta: 0.0 });
    }
    let (samples, h_end, p_end, drift) = match integrate(alpha, h0, p0, ODE_STEPS) {
        Ok(v) => v,
        Err(theta) => return Ok(OdeOutcome::Blowup { theta }),
    };
    let closure = (h_end - h0).abs() + (p_end - p0).abs();
    if closure >= tol::ODE_CLOSURE {
        return Ok(OdeOutcome::Open { closure });
    }
    let step_error = match integrate(alpha, h0, p0, ODE_STEPS / 2) {
        Ok((_, h2, _, _)) => (h_end - h2).abs() / 15.0,
        Err(_) => f64::INFINITY,
    };
    let grid = SphereGrid::build(1, ODE_STEPS)?;
    let residual = shrinker_residual(&grid, &samples, alpha)?;
    Ok(OdeOutcome::Closed(ShrinkerSolution {
        alpha,
        n: 1,
        h: samples,
        residual,
        closure,
        energy_drift: drift,
        step_error,
    }))
}

/// One row of a shooting sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepRow {
    pub h0: f64,
    pub closure: f64,
    pub residual: f64,
}

/// Scan initial heights looking for closed trajectories. Open trajectories
/// report their closure defect; blown-up ones report infinities.
pub fn shooting_sweep(alpha: f64, h0_min: f64, h0_max: f64, count: usize) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(count);
    for i in 0..count {
        let t = if count == 1 { 0.0 } else { i as f64 / (count - 1) as f64 };
        let h0 = h0_min + t * (h0_max - h0_min);
        let row = match solve_shrinker_ode_n1(alpha, h0, 0.0)? {
            OdeOutcome::Closed(sol) => SweepRow {
                h0,
                closure: sol.closure,
                residual: sol.residual,
            },
            OdeOutcome::Open { closure } => SweepRow {
                h0,
                closure,
                residual: f64::INFINITY,
            },
            OdeOutcome::Blowup { .. } => SweepRow {
                h0,
                closure: f64::INFINITY,
                residual: f64::INFINITY,
            },
        };
        rows.push(row);
    }
    Ok(rows)
}

/// The scalar fields of the maximum-principle argument:
///   w = K^α/λ_min − ((nα−1)/(2nα))|X|²,
///   f = K^α Σᵢ 1/λᵢ − ((nα−1)/(2α))|X|²,
/// with the umbilicity measure U = max_i |λᵢ − H/n|/(H/n) and |∇|X|²||.
#[derive(Debug, Clone)]
pub struct ScalarDiagnostics {
    pub w: Vec<f64>,
    pub f: Vec<f64>,
    pub u: Vec<f64>,
    pub grad_xsq: Vec<f64>,
    pub w_max: f64,
    pub f_max: f64,
    pub argmax_w: usize,
    pub argmax_f: usize,
}

pub fn compute_w_f2(g2: &Grid2, bd: &GeometryBundle, alpha: f64) -> ScalarDiagnostics {
    let nd = 2.0;
    let cw = (nd * alpha - 1.0) / (2.0 * nd * alpha);
    let cf = (nd * alpha - 1.0) / (2.0 * alpha);
    let len = bd.k.len();
    let mut w = vec![0.0; len];
    let mut f = vec![0.0; len];
    let mut u = vec![0.0; len];
    for n in 0..len {
        let ka = libm::pow(bd.k[n], alpha);
        let (l1, l2) = (bd.lam[0][n], bd.lam[1][n]);
        w[n] = ka / l1 - cw * bd.x_sq[n];
        f[n] = ka * (1.0 / l1 + 1.0 / l2) - cf * bd.x_sq[n];
        let half_h = 0.5 * bd.h_tr[n];
        u[n] = ((l1 - half_h).abs().max((l2 - half_h).abs())) / half_h;
    }
    let mut ops = TensorOps::new(g2);
    let grad_xsq = ops.grad_norm(bd, &bd.x_sq);
    let (argmax_w, argmax_f) = (argmax(&w), argmax(&f));
    ScalarDiagnostics {
        w_max: w[argmax_w],
        f_max: f[argmax_f],
        argmax_w,
        argmax_f,
        w,
        f,
        u,
        grad_xsq,
    }
}

pub fn compute_w_f1(g1: &Grid1, geo: &Geometry1, alpha: f64) -> ScalarDiagnostics {
    let c = (alpha - 1.0) / (2.0 * alpha);
    let len = geo.k.len();
    let d = Deriv1::new(g1);
    let dxsq = d.d1(&geo.x_sq);
    let mut w = vec![0.0; len];
    let mut u = vec![0.0; len];
    let mut grad_xsq = vec![0.0; len];
    for n in 0..len {
        let ka = libm::pow(geo.k[n], alpha);
        w[n] = ka / geo.lam[n] - c * geo.x_sq[n];
        // A curve has a single curvature: every point is umbilic.
        u[n] = 0.0;
        grad_xsq[n] = dxsq[n].abs() / libm::sqrt(geo.g11[n]);
    }
    let f = w.clone();
    let am = argmax(&w);
    ScalarDiagnostics {
        w_max: w[am],
        f_max: f[am],
        argmax_w: am,
        argmax_f: am,
        w,
        f,
        u,
        grad_xsq,
    }
}

/// Diagnostic claims at the maximum of f, valid in proportion to how well the
/// input satisfies K^α = h.
#[derive(Debug, Clone, Copy)]
pub struct UmbilicityReport {
    pub applicable: bool,
    pub residual: f64,
    /// max(1e−8, 10 × residual): the scale both quantities must sit below.
    pub gate: f64,
    pub argmax_f: usize,
    pub u_at_max: f64,
    pub grad_xsq_at_max: f64,
}

/// Evaluate U and |∇|X|²| at the argmax of f. `residual_tolerance` decides
/// whether the input counts as a shrinker at all; the gate the values are
/// compared against scales with the actual residual regardless.
pub fn umbilicity_at_max(
    diag: &ScalarDiagnostics,
    residual: f64,
    residual_tolerance: f64,
) -> UmbilicityReport {
    let gate = tol::UMBILIC_FLOOR.max(tol::UMBILIC_RESIDUAL_FACTOR * residual);
    UmbilicityReport {
        applicable: residual <= residual_tolerance,
        residual,
        gate,
        argmax_f: diag.argmax_f,
        u_at_max: diag.u[diag.argmax_f],
        grad_xsq_at_max: diag.grad_xsq[diag.argmax_f],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::BodySpec;

    #[test]
    fn constant_orbit_is_the_unit_circle() {
        for alpha in [0.4, 1.0, 1.7] {
            match solve_shrinker_ode_n1(alpha, 1.0, 0.0).unwrap() {
                OdeOutcome::Closed(sol) => {
                    assert!(sol.closure < 1e-14, "closure {:.3e}", sol.closure);
                    assert!(sol.residual < 1e-13, "residual {:.3e}", sol.residual);
                    assert!(sol.h.iter().all(|&v| (v - 1.0).abs() < 1e-14));
                }
                other => panic!("expected closed orbit, got {other:?}"),
            }
        }
    }

    #[test]
    fn calabi_ellipse_recovered_at_third_alpha() {
        // α = 1/3, h₀ = 2, h′₀ = 0 traces the support function of the
        // ellipse with semi-axes (2, 1/2).
        let sol = match solve_shrinker_ode_n1(1.0 / 3.0, 2.0, 0.0).unwrap() {
            OdeOutcome::Closed(sol) => sol,
            other => panic!("expected closed orbit, got {other:?}"),
        };
        assert!(sol.closure < tol::ODE_CLOSURE);
        assert!(sol.energy_drift < tol::ODE_ENERGY_DRIFT, "{:.3e}", sol.energy_drift);
        let grid = SphereGrid::build(1, ODE_STEPS).unwrap();
        let oracle = BodySpec::Ellipse { a: 2.0, b: 0.5 }.sample(&grid).unwrap();
        let mut worst = 0.0_f64;
        for (a, b) in sol.h.iter().zip(&oracle) {
            worst = worst.max((a - b).abs());
        }
        assert!(worst < 1e-8, "trajectory vs analytic ellipse: {worst:.3e}");
        assert!(sol.step_error < 1e-10, "richardson {:.3e}", sol.step_error);
    }

    #[test]
    fn sweep_in_uniqueness_range_finds_no_closed_orbit() {
        let rows = shooting_sweep(1.5, 1.01, 2.8, 24).unwrap();
        for r in &rows {
            assert!(r.closure > 1e-3, "h0={} closed unexpectedly", r.h0);
        }
    }

    #[test]
    fn high_energy_trajectory_blows_up() {
        // For α = 3/2 the orbit energy turns nonnegative near h₀ ≈ 2.93 and
        // the trajectory crashes into h = 0.
        match solve_shrinker_ode_n1(1.5, 2.99, 0.0).unwrap() {
            OdeOutcome::Blowup { theta } => assert!(theta > 0.0 && theta < TWO_PI),
            other => panic!("expected blowup, got {other:?}"),
        }
    }

    #[test]
    fn subsample_requires_divisor_grids() {
        let sol = match solve_shrinker_ode_n1(1.0 / 3.0, 2.0, 0.0).unwrap() {
            OdeOutcome::Closed(sol) => sol,
            _ => unreachable!(),
        };
        assert_eq!(sol.subsample(256).unwrap().len(), 256);
        assert!(sol.subsample(100).is_err());
    }

    #[test]
    fn sphere_w_f_match_closed_forms() {
        let g2 = Grid2::new(16, 32).unwrap();
        let h = vec![1.0; g2.node_count()];
        let bd = GeometryBundle::build(&g2, &h).unwrap();
        for alpha in [0.6, 1.0, 1.4] {
            let diag = compute_w_f2(&g2, &bd, alpha);
            let w_expect = 1.0 - (2.0 * alpha - 1.0) / (4.0 * alpha);
            for n in 0..diag.w.len() {
                assert!((diag.w[n] - w_expect).abs() < 1e-12);
                assert!((diag.f[n] - 2.0 * w_expect).abs() < 1e-12);
                // f ≤ n·w with equality on the round sphere.
                assert!(diag.f[n] <= 2.0 * diag.w[n] + 1e-12);
            }
            let rep = umbilicity_at_max(&diag, 0.0, tol::SHRINKER_GATE);
            assert!(rep.applicable);
            assert!(rep.u_at_max < 1e-12);
            assert!(rep.grad_xsq_at_max < 1e-12);
        }
    }

    #[test]
    fn f_bounded_by_n_w_on_fuzzed_bodies() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let grid = SphereGrid::build(2, 24).unwrap();
        for _ in 0..5 {
            let mut coeffs = [0.0; crate::bodies::TRIG_BASIS];
            for c in coeffs.iter_mut() {
                *c = rng.gen_range(-1.0..1.0);
            }
            let mut body = BodySpec::TrigSphere { amp: 0.2, coeffs };
            body.shrink_to_convex(&grid, 0.1).unwrap();
            let h = body.sample(&grid).unwrap();
            if let SphereGrid::Sphere(g2) = &grid {
                let bd = GeometryBundle::build(g2, &h).unwrap();
                for alpha in [0.6, 1.0, 1.4] {
                    let diag = compute_w_f2(g2, &bd, alpha);
                    let worst = diag
                        .f
                        .iter()
                        .zip(&diag.w)
                        .fold(f64::NEG_INFINITY, |m, (&fv, &wv)| m.max(fv - 2.0 * wv));
                    assert!(worst <= 1e-10, "max(f − 2w) = {worst:.3e}");
                }
            }
        }
    }

    #[test]
    fn nonshrinker_input_flagged_inapplicable() {
        let g2 = Grid2::new(16, 32).unwrap();
        let grid = SphereGrid::build(2, 16).unwrap();
        let h = BodySpec::Ellipsoid { a: 1.3, b: 1.0, c: 0.8 }.sample(&grid).unwrap();
        let bd = GeometryBundle::build(&g2, &h).unwrap();
        let residual = shrinker_residual(&grid, &h, 1.0).unwrap();
        assert!(residual > tol::SHRINKER_GATE);
        let diag = compute_w_f2(&g2, &bd, 1.0);
        let rep = umbilicity_at_max(&diag, residual, tol::SHRINKER_GATE);
        assert!(!rep.applicable);
    }
}
