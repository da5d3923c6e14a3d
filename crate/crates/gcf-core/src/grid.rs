//! Node layouts and quadrature on S¹ and S².
//!
//! n = 1: N equally spaced angles θ_j = jΔθ, Δθ = 2π/N.
//!
//! n = 2: latitude rows offset half a step from the poles, φ_i = (i + 1/2)Δφ
//! with Δφ = π/np, and nt = 2·np equally spaced longitudes. No node sits on a
//! pole, so 1/sinφ stays finite everywhere. nt must be even: derivative
//! stencils reach across the poles by re-reading a neighbouring row at
//! longitude θ + π, which is an exact column shift of nt/2.

use alloc::vec::Vec;

use crate::error::{GcfError, Result};
use crate::field::kahan_sum;

pub const TWO_PI: f64 = 2.0 * core::f64::consts::PI;
pub const FOUR_PI: f64 = 4.0 * core::f64::consts::PI;

/// Fewest nodes per axis for which the 7-point longitude stencil and the
/// refinement studies make sense.
pub const MIN_AXIS: usize = 16;

/// Equally spaced periodic grid on the circle.
#[derive(Debug, Clone)]
pub struct Grid1 {
    pub n_theta: usize,
    pub d_theta: f64,
    pub theta: Vec<f64>,
    pub cos_theta: Vec<f64>,
    pub sin_theta: Vec<f64>,
}

impl Grid1 {
    pub fn new(n_theta: usize) -> Result<Self> {
        if n_theta < MIN_AXIS {
            return Err(GcfError::ResolutionTooSmall {
                axis: "theta",
                got: n_theta,
            });
        }
        let d_theta = TWO_PI / n_theta as f64;
        let theta: Vec<f64> = (0..n_theta).map(|j| j as f64 * d_theta).collect();
        let cos_theta = theta.iter().map(|&t| libm::cos(t)).collect();
        let sin_theta = theta.iter().map(|&t| libm::sin(t)).collect();
        Ok(Self {
            n_theta,
            d_theta,
            theta,
            cos_theta,
            sin_theta,
        })
    }

    pub fn node_count(&self) -> usize {
        self.n_theta
    }

    /// Constant quadrature weight; the trapezoid rule is exact for periodic
    /// smooth integrands up to spectral accuracy.
    pub fn weight(&self) -> f64 {
        self.d_theta
    }

    /// Outward unit normal at node j.
    pub fn normal(&self, j: usize) -> [f64; 2] {
        [self.cos_theta[j], self.sin_theta[j]]
    }
}

/// Latitude-longitude grid on the 2-sphere with half-offset rows.
#[derive(Debug, Clone)]
pub struct Grid2 {
    pub n_phi: usize,
    pub n_theta: usize,
    pub d_phi: f64,
    pub d_theta: f64,
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    pub sin_phi: Vec<f64>,
    pub cos_phi: Vec<f64>,
    pub cot_phi: Vec<f64>,
    pub inv_sin_phi: Vec<f64>,
    pub cos_theta: Vec<f64>,
    pub sin_theta: Vec<f64>,
    /// Per-row quadrature weight: the exact cell integral
    /// ∫ sinφ dφ dθ over one cell = 2·sin(Δφ/2)·sinφ_i·Δθ.
    pub w_row: Vec<f64>,
}

impl Grid2 {
    pub fn new(n_phi: usize, n_theta: usize) -> Result<Self> {
        if n_phi < MIN_AXIS {
            return Err(GcfError::ResolutionTooSmall {
                axis: "phi",
                got: n_phi,
            });
        }
        if n_theta < MIN_AXIS || n_theta % 2 != 0 {
            return Err(GcfError::ResolutionTooSmall {
                axis: "theta",
                got: n_theta,
            });
        }
        let d_phi = core::f64::consts::PI / n_phi as f64;
        let d_theta = TWO_PI / n_theta as f64;
        let phi: Vec<f64> = (0..n_phi).map(|i| (i as f64 + 0.5) * d_phi).collect();
        let theta: Vec<f64> = (0..n_theta).map(|j| j as f64 * d_theta).collect();
        let sin_phi: Vec<f64> = phi.iter().map(|&p| libm::sin(p)).collect();
        let cos_phi: Vec<f64> = phi.iter().map(|&p| libm::cos(p)).collect();
        let cot_phi: Vec<f64> = phi
            .iter()
            .zip(&sin_phi)
            .map(|(&p, &s)| libm::cos(p) / s)
            .collect();
        let inv_sin_phi: Vec<f64> = sin_phi.iter().map(|&s| 1.0 / s).collect();
        let cos_theta = theta.iter().map(|&t| libm::cos(t)).collect();
        let sin_theta = theta.iter().map(|&t| libm::sin(t)).collect();
        // 2·sin(Δφ/2)·sinφ_i = cos(φ_i − Δφ/2) − cos(φ_i + Δφ/2): the row sums
        // telescope to cos0 − cosπ = 2 exactly, so Σ w = 4π to roundoff.
        let half = 2.0 * libm::sin(0.5 * d_phi);
        let w_row: Vec<f64> = sin_phi.iter().map(|&s| half * s * d_theta).collect();
        Ok(Self {
            n_phi,
            n_theta,
            d_phi,
            d_theta,
            phi,
            theta,
            sin_phi,
            cos_phi,
            cot_phi,
            inv_sin_phi,
            cos_theta,
            sin_theta,
            w_row,
        })
    }

    pub fn node_count(&self) -> usize {
        self.n_phi * self.n_theta
    }

    /// Row-major node index.
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n_theta + j
    }

    /// Outward unit normal at node (i, j).
    pub fn normal(&self, i: usize, j: usize) -> [f64; 3] {
        [
            self.sin_phi[i] * self.cos_theta[j],
            self.sin_phi[i] * self.sin_theta[j],
            self.cos_phi[i],
        ]
    }

    /// Quadrature weight of node (i, j).
    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.w_row[i]
    }
}

/// A node layout on Sⁿ for n = 1 or 2.
#[derive(Debug, Clone)]
pub enum SphereGrid {
    Circle(Grid1),
    Sphere(Grid2),
}

impl SphereGrid {
    /// `resolution` is the node count for n = 1 and the latitude row count for
    /// n = 2 (longitudes are fixed at twice the latitude rows).
    pub fn build(n: usize, resolution: usize) -> Result<Self> {
        match n {
            1 => Ok(SphereGrid::Circle(Grid1::new(resolution)?)),
            2 => Ok(SphereGrid::Sphere(Grid2::new(resolution, 2 * resolution)?)),
            other => Err(GcfError::UnsupportedDimension(other)),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            SphereGrid::Circle(_) => 1,
            SphereGrid::Sphere(_) => 2,
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            SphereGrid::Circle(g) => g.node_count(),
            SphereGrid::Sphere(g) => g.node_count(),
        }
    }

    /// Area of the unit Sⁿ this grid's weights must reproduce.
    pub fn reference_area(&self) -> f64 {
        match self {
            SphereGrid::Circle(_) => TWO_PI,
            SphereGrid::Sphere(_) => FOUR_PI,
        }
    }

    /// Compensated sum of all quadrature weights.
    pub fn weight_sum(&self) -> f64 {
        match self {
            SphereGrid::Circle(g) => g.weight() * g.n_theta as f64,
            SphereGrid::Sphere(g) => kahan_sum(
                (0..g.n_phi).flat_map(|i| (0..g.n_theta).map(move |_| g.w_row[i])),
            ),
        }
    }

    /// Integrate a node field against the quadrature weights.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        match self {
            SphereGrid::Circle(g) => g.weight() * kahan_sum(f.iter().copied()),
            SphereGrid::Sphere(g) => kahan_sum(
                f.iter()
                    .enumerate()
                    .map(|(k, &v)| g.w_row[k / g.n_theta] * v),
            ),
        }
    }
}
