//! Analytic convex bodies used as initial data and test fixtures.
//!
//! Bodies are described by parameters, not samples, so one spec can be
//! evaluated on any resolution (refinement studies need the same body at
//! several grids). Random bodies take their coefficients as input; drawing
//! them is the caller's job, which keeps this crate free of RNG state.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{GcfError, Result};
use crate::grid::SphereGrid;
use crate::support::{Bundle1, Bundle2};

/// One circular harmonic of a perturbed-circle support function.
#[derive(Debug, Clone, Copy)]
pub struct Harmonic {
    pub m: usize,
    pub a_cos: f64,
    pub a_sin: f64,
}

/// Number of spherical-polynomial basis functions for perturbed spheres.
pub const TRIG_BASIS: usize = 11;

/// Basis evaluated on a unit normal: degree ≤ 3 harmonic polynomials spanning
/// enough directional structure to fuzz every tensor component.
#[inline]
pub fn trig_basis(nu: [f64; 3]) -> [f64; TRIG_BASIS] {
    let [x, y, z] = nu;
    [
        x,
        y,
        z,
        x * y,
        y * z,
        z * x,
        x * x - y * y,
        3.0 * z * z - 1.0,
        x * y * z,
        x * (x * x - 3.0 * y * y),
        z * (x * x - y * y),
    ]
}

#[derive(Debug, Clone)]
pub enum BodySpec {
    /// h ≡ r on either S¹ or S².
    Sphere { r: f64 },
    /// n = 1: h(θ) = √(a²cos²θ + b²sin²θ).
    Ellipse { a: f64, b: f64 },
    /// n = 2: h(ν) = √(a²ν_x² + b²ν_y² + c²ν_z²).
    Ellipsoid { a: f64, b: f64, c: f64 },
    /// n = 1: h(θ) = 1 + Σ_m (a_cos cos mθ + a_sin sin mθ).
    TrigCircle { harmonics: Vec<Harmonic> },
    /// n = 2: h(ν) = 1 + amp · Σ_k c_k P_k(ν).
    TrigSphere { amp: f64, coeffs: [f64; TRIG_BASIS] },
}

impl BodySpec {
    /// The classic wavy-circle initial datum. As written its radius of
    /// curvature dips negative; pass it through [`BodySpec::shrink_to_convex`]
    /// before flowing.
    pub fn perturbed_circle() -> Self {
        BodySpec::TrigCircle {
            harmonics: vec![
                Harmonic { m: 2, a_cos: 0.3, a_sin: 0.0 },
                Harmonic { m: 3, a_cos: 0.1, a_sin: 0.0 },
            ],
        }
    }

    /// Fixed perturbed sphere built from even-longitude basis functions only.
    /// Products of even-m fields stay even-m, which keeps pole-row stencil
    /// error sin-suppressed; refinement studies use this body so measured
    /// orders reflect the interior truncation error.
    pub fn even_calibration() -> Self {
        let mut coeffs = [0.0; TRIG_BASIS];
        coeffs[3] = 0.03; // xy
        coeffs[6] = 0.05; // x² − y²
        coeffs[7] = 0.06; // 3z² − 1
        coeffs[10] = 0.04; // z(x² − y²)
        BodySpec::TrigSphere { amp: 1.0, coeffs }
    }

    /// Support value at a normal angle θ (curve bodies only). Needed by the
    /// rotated-chart covariance tests, which sample off the grid nodes.
    pub fn support_at_angle(&self, theta: f64) -> Result<f64> {
        match self {
            BodySpec::Sphere { r } => Ok(*r),
            BodySpec::Ellipse { a, b } => {
                let (c, s) = (libm::cos(theta), libm::sin(theta));
                Ok(libm::sqrt(a * a * c * c + b * b * s * s))
            }
            BodySpec::TrigCircle { harmonics } => {
                let mut h = 1.0;
                for hm in harmonics {
                    let mt = hm.m as f64 * theta;
                    h += hm.a_cos * libm::cos(mt) + hm.a_sin * libm::sin(mt);
                }
                Ok(h)
            }
            _ => Err(GcfError::ShapeMismatch),
        }
    }

    /// Support value at a unit normal ν (surface bodies only).
    pub fn support_at_normal(&self, nu: [f64; 3]) -> Result<f64> {
        match self {
            BodySpec::Sphere { r } => Ok(*r),
            BodySpec::Ellipsoid { a, b, c } => Ok(libm::sqrt(
                a * a * nu[0] * nu[0] + b * b * nu[1] * nu[1] + c * c * nu[2] * nu[2],
            )),
            BodySpec::TrigSphere { amp, coeffs } => {
                let p = trig_basis(nu);
                let mut v = 1.0;
                for (c, b) in coeffs.iter().zip(p.iter()) {
                    v += amp * c * b;
                }
                Ok(v)
            }
            _ => Err(GcfError::ShapeMismatch),
        }
    }

    /// Evaluate the support function on a grid. Errs when the body and grid
    /// dimensions disagree.
    pub fn sample(&self, grid: &SphereGrid) -> Result<Vec<f64>> {
        match (self, grid) {
            (BodySpec::Sphere { r }, g) => Ok(vec![*r; g.node_count()]),
            (_, SphereGrid::Circle(g)) => {
                g.theta.iter().map(|&t| self.support_at_angle(t)).collect()
            }
            (_, SphereGrid::Sphere(g)) => {
                let mut h = vec![0.0; g.node_count()];
                for i in 0..g.n_phi {
                    for j in 0..g.n_theta {
                        h[g.idx(i, j)] = self.support_at_normal(g.normal(i, j))?;
                    }
                }
                Ok(h)
            }
        }
    }

    /// Scale the adjustable perturbation by 0.8 until every principal radius
    /// on `grid` is at least `margin` (and h > 0). Returns the number of
    /// shrink steps applied. Fixed bodies (sphere, ellipse, ellipsoid) are
    /// convex by construction and are returned untouched.
    pub fn shrink_to_convex(&mut self, grid: &SphereGrid, margin: f64) -> Result<usize> {
        const FACTOR: f64 = 0.8;
        const MAX_STEPS: usize = 100;
        if matches!(
            self,
            BodySpec::Sphere { .. } | BodySpec::Ellipse { .. } | BodySpec::Ellipsoid { .. }
        ) {
            return Ok(0);
        }
        for step in 0..MAX_STEPS {
            let h = self.sample(grid)?;
            let min_r = match grid {
                SphereGrid::Circle(g) => {
                    let b = Bundle1::compute(g, &h);
                    b.w.iter().fold(f64::INFINITY, |m, &v| m.min(v))
                }
                SphereGrid::Sphere(g) => Bundle2::compute(g, &h).min_radius().1,
            };
            let min_h = h.iter().fold(f64::INFINITY, |m, &v| m.min(v));
            if min_r >= margin && min_h > 0.0 {
                return Ok(step);
            }
            match self {
                BodySpec::TrigCircle { harmonics } => {
                    for hm in harmonics.iter_mut() {
                        hm.a_cos *= FACTOR;
                        hm.a_sin *= FACTOR;
                    }
                }
                BodySpec::TrigSphere { amp, .. } => *amp *= FACTOR,
                _ => unreachable!(),
            }
        }
        Err(GcfError::ConvexityLoss { node: 0, min_eig: margin })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::support::gauss_curvature1;

    #[test]
    fn perturbed_circle_needs_three_shrinks() {
        let grid = SphereGrid::build(1, 256).unwrap();
        let mut body = BodySpec::perturbed_circle();
        // Raw amplitudes (0.3, 0.1) give W = 1 − 3·0.3cos2θ − 8·0.1cos3θ < 0.
        let h0 = body.sample(&grid).unwrap();
        if let SphereGrid::Circle(g) = &grid {
            let b = Bundle1::compute(g, &h0);
            assert!(gauss_curvature1(&b).is_err());
        }
        let steps = body.shrink_to_convex(&grid, 0.1).unwrap();
        assert_eq!(steps, 3);
        match &body {
            BodySpec::TrigCircle { harmonics } => {
                assert!((harmonics[0].a_cos - 0.1536).abs() < 1e-12);
                assert!((harmonics[1].a_cos - 0.0512).abs() < 1e-12);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn even_calibration_body_is_already_convex() {
        let grid = SphereGrid::build(2, 24).unwrap();
        let mut body = BodySpec::even_calibration();
        assert_eq!(body.shrink_to_convex(&grid, 0.1).unwrap(), 0);
    }

    #[test]
    fn sample_rejects_dimension_mismatch() {
        let g1 = SphereGrid::build(1, 64).unwrap();
        let g2 = SphereGrid::build(2, 16).unwrap();
        assert!(BodySpec::Ellipsoid { a: 1.0, b: 1.0, c: 1.0 }.sample(&g1).is_err());
        assert!(BodySpec::Ellipse { a: 1.0, b: 1.0 }.sample(&g2).is_err());
        assert!(BodySpec::Sphere { r: 1.0 }.sample(&g1).is_ok());
        assert!(BodySpec::Sphere { r: 1.0 }.sample(&g2).is_ok());
    }

    #[test]
    fn random_bodies_shrink_to_requested_margin() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let grid = SphereGrid::build(2, 24).unwrap();
        for _ in 0..5 {
            let mut coeffs = [0.0; TRIG_BASIS];
            for c in coeffs.iter_mut() {
                *c = rng.gen_range(-1.0..1.0);
            }
            let mut body = BodySpec::TrigSphere { amp: 0.2, coeffs };
            body.shrink_to_convex(&grid, 0.1).unwrap();
            let h = body.sample(&grid).unwrap();
            if let SphereGrid::Sphere(g) = &grid {
                assert!(Bundle2::compute(g, &h).min_radius().1 >= 0.1);
            }
        }
    }
}
