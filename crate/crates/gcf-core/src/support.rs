//! Radii-of-curvature calculus from a support function.
//!
//! For a closed strictly convex hypersurface with support function h on Sⁿ,
//! the orthonormal-frame radii matrix Ŵ = ∇²h + h·g_S has the principal radii
//! of curvature as eigenvalues and det Ŵ = 1/K. Everything downstream (flow
//! speed, volume, tensor geometry) is assembled from Ŵ and the tangential
//! gradient u of h.
//!
//! On the sphere grid the frame is (e_φ, e_θ/sinφ) and
//!   u₁ = ∂φh,            u₂ = ∂θh / sinφ,
//!   Ŵ₁₁ = ∂φφh + h,      Ŵ₁₂ = ∂φu₂,      Ŵ₂₂ = ∂θu₂/sinφ + cotφ·u₁ + h.
//! u₂ flips sign across a pole (σ = −1); h does not.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{GcfError, Result};
use crate::field::kahan_sum;
use crate::grid::{Grid1, Grid2, SphereGrid};
use crate::stencil::{Deriv1, Deriv2, Scratch2};

/// h, tangential gradient and radii operator on the circle: W = h'' + h is
/// the (single) radius of curvature.
#[derive(Debug, Clone)]
pub struct Bundle1 {
    pub hp: Vec<f64>,
    pub w: Vec<f64>,
}

impl Bundle1 {
    pub fn compute(g: &Grid1, h: &[f64]) -> Self {
        let d = Deriv1::new(g);
        let hp = d.d1(h);
        let mut w = d.d2(h);
        for (wv, &hv) in w.iter_mut().zip(h) {
            *wv += hv;
        }
        Self { hp, w }
    }
}

/// Gradient components and radii matrix on the sphere grid.
#[derive(Debug, Clone)]
pub struct Bundle2 {
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub w11: Vec<f64>,
    pub w12: Vec<f64>,
    pub w22: Vec<f64>,
    pub det_w: Vec<f64>,
}

impl Bundle2 {
    pub fn zeros(g: &Grid2) -> Self {
        let n = g.node_count();
        Self {
            u1: vec![0.0; n],
            u2: vec![0.0; n],
            w11: vec![0.0; n],
            w12: vec![0.0; n],
            w22: vec![0.0; n],
            det_w: vec![0.0; n],
        }
    }

    pub fn compute(g: &Grid2, h: &[f64]) -> Self {
        let d = Deriv2::new(g);
        let mut s = Scratch2::new(g);
        let mut b = Self::zeros(g);
        b.compute_into(g, &d, h, &mut s);
        b
    }

    /// Allocation-free recomputation; the flow loop calls this every step.
    /// h and u₂ are both weight-0 fields, so each needs one ghost extension
    /// feeding both of its φ-derivatives.
    pub fn compute_into(&mut self, g: &Grid2, d: &Deriv2, h: &[f64], s: &mut Scratch2) {
        let (np, nt) = (g.n_phi, g.n_theta);
        d.extend_into(h, 1.0, s.ext_mut());
        d.dphi_raw_into(s.ext(), &mut self.u1);
        d.dphiphi_raw_into(s.ext(), &mut self.w11);
        d.dtheta_into(h, &mut self.u2);
        for i in 0..np {
            let inv_s = g.inv_sin_phi[i];
            for j in 0..nt {
                let n = i * nt + j;
                self.u2[n] *= inv_s;
                self.w11[n] += h[n];
            }
        }
        d.extend_into(&self.u2, -1.0, s.ext_mut());
        d.dphi_raw_into(s.ext(), &mut self.w12);
        d.dtheta_into(&self.u2, &mut self.w22);
        for i in 0..np {
            let inv_s = g.inv_sin_phi[i];
            let cot = g.cot_phi[i];
            for j in 0..nt {
                let n = i * nt + j;
                self.w22[n] = self.w22[n] * inv_s + cot * self.u1[n] + h[n];
                self.det_w[n] = self.w11[n] * self.w22[n] - self.w12[n] * self.w12[n];
            }
        }
    }

    /// Multiply the underlying support function by c: Ŵ and u are linear in h.
    pub fn scale(&mut self, c: f64) {
        for v in self
            .u1
            .iter_mut()
            .chain(&mut self.u2)
            .chain(&mut self.w11)
            .chain(&mut self.w12)
            .chain(&mut self.w22)
        {
            *v *= c;
        }
        for v in self.det_w.iter_mut() {
            *v *= c * c;
        }
    }

    /// Eigenvalues of Ŵ at a node: the principal radii (min, max).
    #[inline]
    pub fn radii_at(&self, n: usize) -> (f64, f64) {
        let mean = 0.5 * (self.w11[n] + self.w22[n]);
        let half = 0.5 * (self.w11[n] - self.w22[n]);
        let disc = libm::sqrt(half * half + self.w12[n] * self.w12[n]);
        (mean - disc, mean + disc)
    }

    /// Smallest eigenvalue of Ŵ over all nodes, with its node.
    pub fn min_radius(&self) -> (usize, f64) {
        let mut node = 0;
        let mut best = f64::INFINITY;
        for n in 0..self.w11.len() {
            let (lo, _) = self.radii_at(n);
            if lo < best {
                best = lo;
                node = n;
            }
        }
        (node, best)
    }
}

/// Gauss curvature K = 1/det Ŵ on the sphere grid; errs if convexity fails.
pub fn gauss_curvature2(g: &Grid2, b: &Bundle2) -> Result<Vec<f64>> {
    let _ = g;
    let mut k = vec![0.0; b.det_w.len()];
    for (n, &dw) in b.det_w.iter().enumerate() {
        let (lo, _) = b.radii_at(n);
        if lo <= 0.0 {
            return Err(GcfError::ConvexityLoss { node: n, min_eig: lo });
        }
        k[n] = 1.0 / dw;
    }
    Ok(k)
}

/// Curvature on the circle: K = 1/W.
pub fn gauss_curvature1(b: &Bundle1) -> Result<Vec<f64>> {
    let mut k = vec![0.0; b.w.len()];
    for (n, &w) in b.w.iter().enumerate() {
        if w <= 0.0 {
            return Err(GcfError::ConvexityLoss { node: n, min_eig: w });
        }
        k[n] = 1.0 / w;
    }
    Ok(k)
}

fn check_positive(h: &[f64]) -> Result<()> {
    for (n, &v) in h.iter().enumerate() {
        if v <= 0.0 {
            return Err(GcfError::NonPositiveSupport { node: n, value: v });
        }
    }
    Ok(())
}

/// Max |h − K^α| over the grid: zero exactly on self-similar solutions.
pub fn shrinker_residual(grid: &SphereGrid, h: &[f64], alpha: f64) -> Result<f64> {
    check_positive(h)?;
    let mut worst = 0.0_f64;
    match grid {
        SphereGrid::Circle(g) => {
            let b = Bundle1::compute(g, h);
            let k = gauss_curvature1(&b)?;
            for n in 0..h.len() {
                worst = worst.max((h[n] - libm::pow(k[n], alpha)).abs());
            }
        }
        SphereGrid::Sphere(g) => {
            let b = Bundle2::compute(g, h);
            let k = gauss_curvature2(g, &b)?;
            for n in 0..h.len() {
                worst = worst.max((h[n] - libm::pow(k[n], alpha)).abs());
            }
        }
    }
    Ok(worst)
}

/// Enclosed volume V = 1/(n+1) ∫ h · det Ŵ dσ.
pub fn enclosed_volume(grid: &SphereGrid, h: &[f64]) -> f64 {
    match grid {
        SphereGrid::Circle(g) => {
            let b = Bundle1::compute(g, h);
            0.5 * g.weight() * kahan_sum((0..h.len()).map(|n| h[n] * b.w[n]))
        }
        SphereGrid::Sphere(g) => {
            let b = Bundle2::compute(g, h);
            let nt = g.n_theta;
            kahan_sum((0..h.len()).map(|n| g.w_row[n / nt] * h[n] * b.det_w[n])) / 3.0
        }
    }
}

/// Embedding point X = hν + ∇h and per-node frame data on the sphere grid.
#[derive(Debug, Clone)]
pub struct Embedding2 {
    /// Position of the surface point whose outward normal is the grid node.
    pub x: Vec<[f64; 3]>,
    /// ⟨X, F₁⟩ and ⟨X, F₂⟩ in the coordinate chart (F_i = ∂_i X).
    pub xf1: Vec<f64>,
    pub xf2: Vec<f64>,
    /// |X|² = h² + u₁² + u₂².
    pub x_sq: Vec<f64>,
}

/// Build the embedding from the support bundle. The tangent-frame dot
/// products come from ⟨X, F_i⟩ = Σ_a u_a (DŴD)_{ia} with D = diag(1, sinφ),
/// which is exact in the frame data and never differentiates positions.
pub fn embed2(g: &Grid2, h: &[f64], b: &Bundle2) -> Embedding2 {
    let (np, nt) = (g.n_phi, g.n_theta);
    let mut x = vec![[0.0; 3]; h.len()];
    let mut xf1 = vec![0.0; h.len()];
    let mut xf2 = vec![0.0; h.len()];
    let mut x_sq = vec![0.0; h.len()];
    for i in 0..np {
        let (sp, cp) = (g.sin_phi[i], g.cos_phi[i]);
        for j in 0..nt {
            let n = i * nt + j;
            let (st, ct) = (g.sin_theta[j], g.cos_theta[j]);
            let nu = [sp * ct, sp * st, cp];
            let e1 = [cp * ct, cp * st, -sp];
            let e2 = [-st, ct, 0.0];
            let (hv, u1, u2) = (h[n], b.u1[n], b.u2[n]);
            for a in 0..3 {
                x[n][a] = hv * nu[a] + u1 * e1[a] + u2 * e2[a];
            }
            xf1[n] = u1 * b.w11[n] + u2 * b.w12[n];
            xf2[n] = (u1 * b.w12[n] + u2 * b.w22[n]) * sp;
            x_sq[n] = hv * hv + u1 * u1 + u2 * u2;
        }
    }
    Embedding2 { x, xf1, xf2, x_sq }
}

/// Circle analogue: X = hν + h'τ, ⟨X, F₁⟩ = h'W, |X|² = h² + h'².
#[derive(Debug, Clone)]
pub struct Embedding1 {
    pub x: Vec<[f64; 2]>,
    pub xf1: Vec<f64>,
    pub x_sq: Vec<f64>,
}

pub fn embed1(g: &Grid1, h: &[f64], b: &Bundle1) -> Embedding1 {
    let mut x = vec![[0.0; 2]; h.len()];
    let mut xf1 = vec![0.0; h.len()];
    let mut x_sq = vec![0.0; h.len()];
    for n in 0..h.len() {
        let (ct, st) = (g.cos_theta[n], g.sin_theta[n]);
        x[n] = [h[n] * ct - b.hp[n] * st, h[n] * st + b.hp[n] * ct];
        xf1[n] = b.hp[n] * b.w[n];
        x_sq[n] = h[n] * h[n] + b.hp[n] * b.hp[n];
    }
    Embedding1 { x, xf1, x_sq }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::max_abs;
    use crate::grid::FOUR_PI;
    use crate::tol;

    fn sphere_h(g: &Grid2, r: f64) -> Vec<f64> {
        vec![r; g.node_count()]
    }

    #[test]
    fn round_sphere_bundle_is_exact() {
        let g = Grid2::new(24, 48).unwrap();
        let h = sphere_h(&g, 1.0);
        let b = Bundle2::compute(&g, &h);
        // Stencils vanish bitwise on constants, so Ŵ = diag(h, h) exactly
        // up to the cot·u₁ term which is cot·0 = 0.
        assert_eq!(max_abs(&b.u1), 0.0);
        assert_eq!(max_abs(&b.u2), 0.0);
        assert_eq!(max_abs(&b.w12), 0.0);
        for n in 0..h.len() {
            assert_eq!(b.w11[n], 1.0);
            assert_eq!(b.w22[n], 1.0);
        }
        let res = shrinker_residual(&SphereGrid::Sphere(g), &h, 0.7).unwrap();
        assert!(res <= tol::SPHERE_RESIDUAL);
    }

    #[test]
    fn sphere_volume_and_scaling() {
        let g2 = SphereGrid::build(2, 24).unwrap();
        let n = g2.node_count();
        let v = enclosed_volume(&g2, &vec![2.0; n]);
        assert!((v - FOUR_PI / 3.0 * 8.0).abs() / v < 1e-13);

        let g1 = SphereGrid::build(1, 128).unwrap();
        let v1 = enclosed_volume(&g1, &vec![1.5; g1.node_count()]);
        assert!((v1 - core::f64::consts::PI * 2.25).abs() / v1 < 1e-13);
    }

    #[test]
    fn curvature_scales_as_minus_n() {
        // K(c·h) = c⁻ⁿ K(h): Ŵ is linear in h, det is n-homogeneous.
        let g = Grid2::new(16, 32).unwrap();
        let mut h = vec![0.0; g.node_count()];
        for i in 0..g.n_phi {
            for j in 0..g.n_theta {
                let nu = g.normal(i, j);
                h[g.idx(i, j)] =
                    libm::sqrt(1.44 * nu[0] * nu[0] + nu[1] * nu[1] + 0.64 * nu[2] * nu[2]);
            }
        }
        let c = 1.7;
        let hc: Vec<f64> = h.iter().map(|&v| c * v).collect();
        let k = gauss_curvature2(&g, &Bundle2::compute(&g, &h)).unwrap();
        let kc = gauss_curvature2(&g, &Bundle2::compute(&g, &hc)).unwrap();
        for n in 0..k.len() {
            let rel = (kc[n] * c * c - k[n]).abs() / k[n];
            assert!(rel < 1e-12, "node {n}: rel {rel:.3e}");
        }
    }

    #[test]
    fn convexity_loss_is_reported_with_node() {
        let g = Grid1::new(64).unwrap();
        // h = 1 + 0.5 cos 2θ has W = 1 − 1.5 cos 2θ < 0 near θ = 0.
        let h: Vec<f64> = g.theta.iter().map(|&t| 1.0 + 0.5 * libm::cos(2.0 * t)).collect();
        let b = Bundle1::compute(&g, &h);
        match gauss_curvature1(&b) {
            Err(GcfError::ConvexityLoss { min_eig, .. }) => assert!(min_eig < 0.0),
            other => panic!("expected convexity loss, got {other:?}"),
        }
    }

    #[test]
    fn nonpositive_support_is_rejected() {
        let g = SphereGrid::build(1, 32).unwrap();
        let mut h = vec![1.0; 32];
        h[5] = -0.25;
        assert!(matches!(
            shrinker_residual(&g, &h, 1.0),
            Err(GcfError::NonPositiveSupport { node: 5, .. })
        ));
    }

    #[test]
    fn embedding_recovers_support_and_ellipsoid_points() {
        // For the ellipsoid support function, X(ν) must land on the ellipsoid
        // x²/a² + y²/b² + z²/c² = 1 and satisfy ⟨X, ν⟩ = h.
        let g = Grid2::new(48, 96).unwrap();
        let (a, b_ax, c) = (1.3, 1.0, 0.8);
        let mut h = vec![0.0; g.node_count()];
        for i in 0..g.n_phi {
            for j in 0..g.n_theta {
                let nu = g.normal(i, j);
                h[g.idx(i, j)] = libm::sqrt(
                    a * a * nu[0] * nu[0] + b_ax * b_ax * nu[1] * nu[1] + c * c * nu[2] * nu[2],
                );
            }
        }
        let bd = Bundle2::compute(&g, &h);
        let em = embed2(&g, &h, &bd);
        let mut worst_q = 0.0_f64;
        let mut worst_s = 0.0_f64;
        for i in 0..g.n_phi {
            for j in 0..g.n_theta {
                let n = g.idx(i, j);
                let nu = g.normal(i, j);
                let x = em.x[n];
                let q = x[0] * x[0] / (a * a) + x[1] * x[1] / (b_ax * b_ax)
                    + x[2] * x[2] / (c * c);
                worst_q = worst_q.max((q - 1.0).abs());
                let dot = x[0] * nu[0] + x[1] * nu[1] + x[2] * nu[2];
                worst_s = worst_s.max((dot - h[n]).abs());
            }
        }
        // Support identity is frame-exact; the quadric residual carries the
        // 4th-order gradient truncation error.
        assert!(worst_s < tol::EXACT_F64, "support identity {worst_s:.3e}");
        assert!(worst_q < 5e-7, "quadric residual {worst_q:.3e}");
    }

    #[test]
    fn circle_embedding_traces_the_ellipse() {
        let g = Grid1::new(256).unwrap();
        let (a, b_ax) = (2.0, 1.0);
        let h: Vec<f64> = g
            .theta
            .iter()
            .map(|&t| libm::sqrt(a * a * libm::cos(t) * libm::cos(t) + b_ax * b_ax * libm::sin(t) * libm::sin(t)))
            .collect();
        let b = Bundle1::compute(&g, &h);
        let em = embed1(&g, &h, &b);
        let mut worst = 0.0_f64;
        for p in &em.x {
            let q = p[0] * p[0] / (a * a) + p[1] * p[1] / (b_ax * b_ax);
            worst = worst.max((q - 1.0).abs());
        }
        assert!(worst < 1e-7, "quadric residual {worst:.3e}");
    }
}
