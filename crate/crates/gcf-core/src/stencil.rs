//! Finite-difference stencils on the periodic circle and the lat-long sphere
//! grid.
//!
//! Circle and latitude direction: 4th-order centered differences. Longitude:
//! 6th-order centered differences, which keeps the θ-direction truncation
//! error negligible on the rows nearest the poles where 1/sinφ amplifies it.
//! All second-derivative stencils are written in center-subtracted form so
//! they vanish exactly (bitwise 0.0) on constant fields; several verification
//! identities rely on that.
//!
//! Crossing a pole: a smooth field sampled past φ = 0 equals the field at the
//! reflected latitude and longitude θ + π, up to a sign. Fields carrying a
//! longitude weight k (k covariant θ-indices minus contravariant ones) are
//! first divided by sin^k φ; the remaining factor has a definite pole parity
//! σ = ±1 and its ghost rows are σ times a column rotation by half the period.
//! Derivatives of the sin^k φ prefactor are applied analytically afterwards,
//! so no stencil ever differences the steep prefactor itself.

use alloc::vec;
use alloc::vec::Vec;

use crate::grid::{Grid1, Grid2};

/// Max symbol of the 4th-order second-derivative stencil (at wavenumber π);
/// enters the explicit-step stability bound.
pub const D2_SYMBOL_4: f64 = 16.0 / 3.0;

/// Max symbol of the 6th-order second-derivative stencil: 6 + 2/45.
pub const D2_SYMBOL_6: f64 = 6.0 + 2.0 / 45.0;

/// 4th-order periodic derivatives on the circle.
#[derive(Debug, Clone)]
pub struct Deriv1 {
    n: usize,
    inv_12d: f64,
    inv_12dd: f64,
}

impl Deriv1 {
    pub fn new(g: &Grid1) -> Self {
        Self {
            n: g.n_theta,
            inv_12d: 1.0 / (12.0 * g.d_theta),
            inv_12dd: 1.0 / (12.0 * g.d_theta * g.d_theta),
        }
    }

    pub fn d1_into(&self, f: &[f64], out: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(f.len(), n);
        for j in 0..n {
            let jm2 = (j + n - 2) % n;
            let jm1 = (j + n - 1) % n;
            let jp1 = (j + 1) % n;
            let jp2 = (j + 2) % n;
            out[j] = (8.0 * (f[jp1] - f[jm1]) - (f[jp2] - f[jm2])) * self.inv_12d;
        }
    }

    pub fn d2_into(&self, f: &[f64], out: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(f.len(), n);
        for j in 0..n {
            let jm2 = (j + n - 2) % n;
            let jm1 = (j + n - 1) % n;
            let jp1 = (j + 1) % n;
            let jp2 = (j + 2) % n;
            let f0 = f[j];
            out[j] = (16.0 * ((f[jp1] - f0) + (f[jm1] - f0))
                - ((f[jp2] - f0) + (f[jm2] - f0)))
                * self.inv_12dd;
        }
    }

    pub fn d1(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; f.len()];
        self.d1_into(f, &mut out);
        out
    }

    pub fn d2(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; f.len()];
        self.d2_into(f, &mut out);
        out
    }
}

/// sinφ_i raised to a small signed power.
#[inline]
fn sin_pow(g: &Grid2, i: usize, k: i32) -> f64 {
    let (base, m) = if k >= 0 {
        (g.sin_phi[i], k)
    } else {
        (g.inv_sin_phi[i], -k)
    };
    let mut p = 1.0;
    for _ in 0..m {
        p *= base;
    }
    p
}

/// Reusable buffers for the sphere stencils; the flow loop calls these every
/// step and must not allocate.
#[derive(Debug, Clone)]
pub struct Scratch2 {
    ext: Vec<f64>,
    fhat: Vec<f64>,
    raw: Vec<f64>,
    raw2: Vec<f64>,
}

impl Scratch2 {
    pub fn new(g: &Grid2) -> Self {
        Self {
            ext: vec![0.0; (g.n_phi + 4) * g.n_theta],
            fhat: vec![0.0; g.n_phi * g.n_theta],
            raw: vec![0.0; g.n_phi * g.n_theta],
            raw2: vec![0.0; g.n_phi * g.n_theta],
        }
    }

    /// Direct access to the ghost-padded buffer for callers that want to
    /// reuse one extension across several raw derivative passes.
    pub fn ext(&self) -> &[f64] {
        &self.ext
    }

    pub fn ext_mut(&mut self) -> &mut [f64] {
        &mut self.ext
    }
}

/// Sphere-grid derivative operators.
#[derive(Debug, Clone)]
pub struct Deriv2 {
    np: usize,
    nt: usize,
    inv_12d: f64,
    inv_12dd: f64,
    inv_60dt: f64,
    inv_dtdt: f64,
}

impl Deriv2 {
    pub fn new(g: &Grid2) -> Self {
        Self {
            np: g.n_phi,
            nt: g.n_theta,
            inv_12d: 1.0 / (12.0 * g.d_phi),
            inv_12dd: 1.0 / (12.0 * g.d_phi * g.d_phi),
            inv_60dt: 1.0 / (60.0 * g.d_theta),
            inv_dtdt: 1.0 / (g.d_theta * g.d_theta),
        }
    }

    /// Copy `f` into the ghost-padded buffer. Extended row r holds physical
    /// row r − 2; ghost rows hold σ times the mirrored row rotated by half a
    /// period in longitude.
    pub fn extend_into(&self, f: &[f64], sigma: f64, ext: &mut [f64]) {
        let (np, nt) = (self.np, self.nt);
        debug_assert_eq!(f.len(), np * nt);
        debug_assert_eq!(ext.len(), (np + 4) * nt);
        let half = nt / 2;
        ext[2 * nt..(np + 2) * nt].copy_from_slice(f);
        for j in 0..nt {
            let js = (j + half) % nt;
            // North: physical rows −1, −2 mirror rows 0, 1.
            ext[nt + j] = sigma * f[js];
            ext[j] = sigma * f[nt + js];
            // South: physical rows np, np+1 mirror rows np−1, np−2.
            ext[(np + 2) * nt + j] = sigma * f[(np - 1) * nt + js];
            ext[(np + 3) * nt + j] = sigma * f[(np - 2) * nt + js];
        }
    }

    /// 4th-order ∂φ of the extended buffer, written for physical rows only.
    pub fn dphi_raw_into(&self, ext: &[f64], out: &mut [f64]) {
        let (np, nt) = (self.np, self.nt);
        for i in 0..np {
            let r = (i + 2) * nt;
            for j in 0..nt {
                out[i * nt + j] = (8.0 * (ext[r + nt + j] - ext[r - nt + j])
                    - (ext[r + 2 * nt + j] - ext[r - 2 * nt + j]))
                    * self.inv_12d;
            }
        }
    }

    /// 4th-order ∂φφ (center-subtracted) of the extended buffer.
    pub fn dphiphi_raw_into(&self, ext: &[f64], out: &mut [f64]) {
        let (np, nt) = (self.np, self.nt);
        for i in 0..np {
            let r = (i + 2) * nt;
            for j in 0..nt {
                let f0 = ext[r + j];
                out[i * nt + j] = (16.0
                    * ((ext[r + nt + j] - f0) + (ext[r - nt + j] - f0))
                    - ((ext[r + 2 * nt + j] - f0) + (ext[r - 2 * nt + j] - f0)))
                    * self.inv_12dd;
            }
        }
    }

    /// 6th-order periodic ∂θ, row by row.
    pub fn dtheta_into(&self, f: &[f64], out: &mut [f64]) {
        let (np, nt) = (self.np, self.nt);
        for i in 0..np {
            let r = i * nt;
            for j in 0..nt {
                let jm3 = r + (j + nt - 3) % nt;
                let jm2 = r + (j + nt - 2) % nt;
                let jm1 = r + (j + nt - 1) % nt;
                let jp1 = r + (j + 1) % nt;
                let jp2 = r + (j + 2) % nt;
                let jp3 = r + (j + 3) % nt;
                out[r + j] = (45.0 * (f[jp1] - f[jm1]) - 9.0 * (f[jp2] - f[jm2])
                    + (f[jp3] - f[jm3]))
                    * self.inv_60dt;
            }
        }
    }

    /// 6th-order periodic ∂θθ (center-subtracted), row by row.
    pub fn dthetatheta_into(&self, f: &[f64], out: &mut [f64]) {
        const C1: f64 = 1.5;
        const C2: f64 = -3.0 / 20.0;
        const C3: f64 = 1.0 / 90.0;
        let (np, nt) = (self.np, self.nt);
        for i in 0..np {
            let r = i * nt;
            for j in 0..nt {
                let jm3 = r + (j + nt - 3) % nt;
                let jm2 = r + (j + nt - 2) % nt;
                let jm1 = r + (j + nt - 1) % nt;
                let jp1 = r + (j + 1) % nt;
                let jp2 = r + (j + 2) % nt;
                let jp3 = r + (j + 3) % nt;
                let f0 = f[r + j];
                out[r + j] = (C1 * ((f[jp1] - f0) + (f[jm1] - f0))
                    + C2 * ((f[jp2] - f0) + (f[jm2] - f0))
                    + C3 * ((f[jp3] - f0) + (f[jm3] - f0)))
                    * self.inv_dtdt;
            }
        }
    }

    /// ∂φ of a field with longitude weight k and desinned pole parity σ:
    /// f = sin^k φ · f̂, ∂φ f = sin^k D₁f̂ + k sin^{k−1} cosφ · f̂.
    pub fn dphi_into(&self, g: &Grid2, f: &[f64], k: i32, sigma: f64, s: &mut Scratch2, out: &mut [f64]) {
        let (np, nt) = (self.np, self.nt);
        if k == 0 {
            self.extend_into(f, sigma, &mut s.ext);
            self.dphi_raw_into(&s.ext, out);
            return;
        }
        for i in 0..np {
            let w = sin_pow(g, i, -k);
            for j in 0..nt {
                s.fhat[i * nt + j] = f[i * nt + j] * w;
            }
        }
        self.extend_into(&s.fhat, sigma, &mut s.ext);
        self.dphi_raw_into(&s.ext, &mut s.raw);
        for i in 0..np {
            let sk = sin_pow(g, i, k);
            let dk = k as f64 * sin_pow(g, i, k - 1) * g.cos_phi[i];
            for j in 0..nt {
                let n = i * nt + j;
                out[n] = sk * s.raw[n] + dk * s.fhat[n];
            }
        }
    }

    /// ∂φφ of a weighted field:
    /// sin^k D₂f̂ + 2k sin^{k−1} cosφ D₁f̂ + (k(k−1) sin^{k−2} cos²φ − k sin^k φ) f̂.
    pub fn dphiphi_into(&self, g: &Grid2, f: &[f64], k: i32, sigma: f64, s: &mut Scratch2, out: &mut [f64]) {
        let (np, nt) = (self.np, self.nt);
        if k == 0 {
            self.extend_into(f, sigma, &mut s.ext);
            self.dphiphi_raw_into(&s.ext, out);
            return;
        }
        for i in 0..np {
            let w = sin_pow(g, i, -k);
            for j in 0..nt {
                s.fhat[i * nt + j] = f[i * nt + j] * w;
            }
        }
        self.extend_into(&s.fhat, sigma, &mut s.ext);
        self.dphi_raw_into(&s.ext, &mut s.raw);
        self.dphiphi_raw_into(&s.ext, &mut s.raw2);
        let kf = k as f64;
        for i in 0..np {
            let sk = sin_pow(g, i, k);
            let c = g.cos_phi[i];
            let a1 = 2.0 * kf * sin_pow(g, i, k - 1) * c;
            let a0 = kf * (kf - 1.0) * sin_pow(g, i, k - 2) * c * c - kf * sk;
            for j in 0..nt {
                let n = i * nt + j;
                out[n] = sk * s.raw2[n] + a1 * s.raw[n] + a0 * s.fhat[n];
            }
        }
    }

    pub fn dphi(&self, g: &Grid2, f: &[f64], k: i32, sigma: f64) -> Vec<f64> {
        let mut s = Scratch2::new_from_dims(self.np, self.nt);
        let mut out = vec![0.0; f.len()];
        self.dphi_into(g, f, k, sigma, &mut s, &mut out);
        out
    }

    pub fn dphiphi(&self, g: &Grid2, f: &[f64], k: i32, sigma: f64) -> Vec<f64> {
        let mut s = Scratch2::new_from_dims(self.np, self.nt);
        let mut out = vec![0.0; f.len()];
        self.dphiphi_into(g, f, k, sigma, &mut s, &mut out);
        out
    }

    pub fn dtheta(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; f.len()];
        self.dtheta_into(f, &mut out);
        out
    }

    pub fn dthetatheta(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; f.len()];
        self.dthetatheta_into(f, &mut out);
        out
    }
}

impl Scratch2 {
    fn new_from_dims(np: usize, nt: usize) -> Self {
        Self {
            ext: vec![0.0; (np + 4) * nt],
            fhat: vec![0.0; np * nt],
            raw: vec![0.0; np * nt],
            raw2: vec![0.0; np * nt],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{max_abs, max_abs_diff, observed_order};
    use alloc::vec::Vec;

    #[test]
    fn circle_stencils_vanish_on_constants() {
        let g = Grid1::new(64).unwrap();
        let d = Deriv1::new(&g);
        let f = vec![3.25; 64];
        assert!(d.d1(&f).iter().all(|&v| v == 0.0));
        assert!(d.d2(&f).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn circle_stencils_are_fourth_order() {
        let mut errs1 = Vec::new();
        let mut errs2 = Vec::new();
        for n in [64usize, 128, 256] {
            let g = Grid1::new(n).unwrap();
            let d = Deriv1::new(&g);
            let f: Vec<f64> = g.theta.iter().map(|&t| libm::exp(libm::sin(t))).collect();
            let df: Vec<f64> = g
                .theta
                .iter()
                .map(|&t| libm::cos(t) * libm::exp(libm::sin(t)))
                .collect();
            let ddf: Vec<f64> = g
                .theta
                .iter()
                .map(|&t| (libm::cos(t) * libm::cos(t) - libm::sin(t)) * libm::exp(libm::sin(t)))
                .collect();
            errs1.push(max_abs_diff(&d.d1(&f), &df));
            errs2.push(max_abs_diff(&d.d2(&f), &ddf));
        }
        for e in [&errs1, &errs2] {
            assert!(observed_order(e[0], e[1]) > 3.7, "{e:?}");
            assert!(observed_order(e[1], e[2]) > 3.8, "{e:?}");
        }
    }

    #[test]
    fn sphere_stencils_vanish_on_constants() {
        let g = Grid2::new(16, 32).unwrap();
        let d = Deriv2::new(&g);
        let f = vec![1.7; g.node_count()];
        assert!(d.dphi(&g, &f, 0, 1.0).iter().all(|&v| v == 0.0));
        assert!(d.dphiphi(&g, &f, 0, 1.0).iter().all(|&v| v == 0.0));
        assert!(d.dtheta(&f).iter().all(|&v| v == 0.0));
        assert!(d.dthetatheta(&f).iter().all(|&v| v == 0.0));
    }

    /// A longitude-only field with odd pole parity must be seen as
    /// φ-constant by the ghost extension; σ = +1 would break this.
    #[test]
    fn odd_parity_ghosts_cancel_phi_derivative() {
        let g = Grid2::new(16, 32).unwrap();
        let d = Deriv2::new(&g);
        let mut f = vec![0.0; g.node_count()];
        for i in 0..g.n_phi {
            for j in 0..g.n_theta {
                f[g.idx(i, j)] = -g.sin_theta[j];
            }
        }
        // sin(θ + π) is −sinθ only to roundoff, so the cancellation is at
        // eps/Δφ scale rather than bitwise.
        assert!(max_abs(&d.dphi(&g, &f, 0, -1.0)) < 1e-13);
        assert!(max_abs(&d.dphi(&g, &f, 0, 1.0)) > 1.0);
    }

    /// With f̂ ≡ 1 the stencils see a constant, so the weighted derivatives
    /// reduce to the analytic prefactor terms at machine precision.
    #[test]
    fn weighted_derivatives_are_exact_on_pure_weights() {
        let g = Grid2::new(24, 48).unwrap();
        let d = Deriv2::new(&g);
        let f: Vec<f64> = (0..g.node_count())
            .map(|n| {
                let i = n / g.n_theta;
                g.sin_phi[i] * g.sin_phi[i]
            })
            .collect();
        let d1 = d.dphi(&g, &f, 2, 1.0);
        let d2 = d.dphiphi(&g, &f, 2, 1.0);
        for i in 0..g.n_phi {
            let want1 = 2.0 * g.sin_phi[i] * g.cos_phi[i];
            let want2 = 2.0 * (g.cos_phi[i] * g.cos_phi[i] - g.sin_phi[i] * g.sin_phi[i]);
            for j in 0..g.n_theta {
                assert!((d1[g.idx(i, j)] - want1).abs() < 1e-14);
                assert!((d2[g.idx(i, j)] - want2).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn sphere_derivatives_converge_at_design_order() {
        // f = ν_x = sinφ cosθ crosses both poles; the ghost machinery with
        // σ = +1 must deliver clean 4th order in φ and ≥6th in θ.
        let mut e_phi = Vec::new();
        let mut e_phiphi = Vec::new();
        let mut e_th = Vec::new();
        for np in [16usize, 32, 64] {
            let g = Grid2::new(np, 2 * np).unwrap();
            let d = Deriv2::new(&g);
            let mut f = vec![0.0; g.node_count()];
            let mut dphi = vec![0.0; g.node_count()];
            let mut dphiphi = vec![0.0; g.node_count()];
            let mut dth = vec![0.0; g.node_count()];
            for i in 0..g.n_phi {
                for j in 0..g.n_theta {
                    let n = g.idx(i, j);
                    f[n] = g.sin_phi[i] * g.cos_theta[j];
                    dphi[n] = g.cos_phi[i] * g.cos_theta[j];
                    dphiphi[n] = -g.sin_phi[i] * g.cos_theta[j];
                    dth[n] = -g.sin_phi[i] * g.sin_theta[j];
                }
            }
            e_phi.push(max_abs_diff(&d.dphi(&g, &f, 0, 1.0), &dphi));
            e_phiphi.push(max_abs_diff(&d.dphiphi(&g, &f, 0, 1.0), &dphiphi));
            e_th.push(max_abs_diff(&d.dtheta(&f), &dth));
        }
        assert!(observed_order(e_phi[0], e_phi[1]) > 3.5, "{e_phi:?}");
        assert!(observed_order(e_phi[1], e_phi[2]) > 3.7, "{e_phi:?}");
        assert!(observed_order(e_phiphi[0], e_phiphi[1]) > 3.5, "{e_phiphi:?}");
        assert!(observed_order(e_th[0], e_th[1]) > 5.0, "{e_th:?}");
    }
}
