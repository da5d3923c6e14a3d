//! Extrinsic tensor geometry of a convex body in the (φ, θ) support chart.
//!
//! All coordinate tensors come from the orthonormal radii matrix Ŵ through
//! the scaling D = diag(1, sinφ):
//!   g = DŴ²D,   h = DŴD,   b = h⁻¹ = D⁻¹Ŵ⁻¹D⁻¹,   g⁻¹ = D⁻¹Ŵ⁻²D⁻¹.
//! The second fundamental form is taken positive definite on convex bodies;
//! principal curvatures are the (h, g) pencil eigenvalues, equal to the
//! reciprocals of Ŵ's eigenvalues.
//!
//! Christoffel symbols use the same weighted stencils as every other partial
//! derivative here, which makes discrete metric compatibility (∇g ≈ 0) hold
//! to δ-consistency roundoff rather than truncation order.

use alloc::vec::Vec;

use crate::error::{GcfError, Result};
use crate::field::zeros;
use crate::grid::{Grid1, Grid2};
use crate::stencil::{Deriv1, Deriv2, Scratch2};
use crate::support::{embed2, Bundle1, Bundle2, Embedding2};

/// Symmetric-pair index: (0,0)→0, (0,1)→1, (1,1)→2. Chart index 0 is φ,
/// index 1 is θ, so the value also counts θ-slots (the longitude weight).
#[inline]
pub fn sym2(i: usize, j: usize) -> usize {
    i + j
}

/// Stable eigenvalues of the pencil h·v = λ·g·v for SPD g, symmetric h.
/// Cholesky-congruence form; returns ascending (λ_min, λ_max).
#[inline]
pub fn pencil_eigs(g11: f64, g12: f64, g22: f64, h11: f64, h12: f64, h22: f64) -> (f64, f64) {
    let l11 = libm::sqrt(g11);
    let l21 = g12 / l11;
    let l22 = libm::sqrt(g22 - l21 * l21);
    let a = 1.0 / l11;
    let c = 1.0 / l22;
    let b = -l21 * a * c;
    let m11 = a * a * h11;
    let m12 = a * (b * h11 + c * h12);
    let m22 = b * b * h11 + 2.0 * b * c * h12 + c * c * h22;
    let mean = 0.5 * (m11 + m22);
    let half = 0.5 * (m11 - m22);
    let disc = libm::sqrt(half * half + m12 * m12);
    (mean - disc, mean + disc)
}

/// Per-node tensor planes of a convex body on the sphere grid.
#[derive(Debug, Clone)]
pub struct GeometryBundle {
    /// Metric g_{ij}: planes [g_φφ, g_φθ, g_θθ].
    pub g: [Vec<f64>; 3],
    /// Inverse metric g^{ij}.
    pub gi: [Vec<f64>; 3],
    /// Second fundamental form h_{ij} (positive definite).
    pub hm: [Vec<f64>; 3],
    /// Inverse second fundamental form b^{ij}.
    pub b: [Vec<f64>; 3],
    /// Christoffel symbols Γ^κ_{ij}: gam[κ][sym2(i,j)].
    pub gam: [[Vec<f64>; 3]; 2],
    /// Gauss curvature K = 1/det Ŵ.
    pub k: Vec<f64>,
    /// Mean curvature H = g^{ij} h_{ij}.
    pub h_tr: Vec<f64>,
    /// Principal curvatures, ascending.
    pub lam: [Vec<f64>; 2],
    /// |X|² and the tangential projections ⟨X, F_i⟩, ⟨X, F^i⟩.
    pub x_sq: Vec<f64>,
    pub xf: [Vec<f64>; 2],
    pub xfu: [Vec<f64>; 2],
}

impl GeometryBundle {
    pub fn build(g2: &Grid2, h: &[f64]) -> Result<Self> {
        for (n, &v) in h.iter().enumerate() {
            if v <= 0.0 {
                return Err(GcfError::NonPositiveSupport { node: n, value: v });
            }
        }
        let sup = Bundle2::compute(g2, h);
        let (node, min_eig) = sup.min_radius();
        if min_eig <= 0.0 {
            return Err(GcfError::ConvexityLoss { node, min_eig });
        }
        let emb = embed2(g2, h, &sup);
        Ok(Self::from_parts(g2, &sup, &emb))
    }

    pub fn from_parts(g2: &Grid2, sup: &Bundle2, emb: &Embedding2) -> Self {
        let (np, nt) = (g2.n_phi, g2.n_theta);
        let len = np * nt;
        let mut g = [zeros(len), zeros(len), zeros(len)];
        let mut gi = [zeros(len), zeros(len), zeros(len)];
        let mut hm = [zeros(len), zeros(len), zeros(len)];
        let mut b = [zeros(len), zeros(len), zeros(len)];
        let mut k = zeros(len);
        let mut h_tr = zeros(len);
        let mut lam = [zeros(len), zeros(len)];
        let mut xfu = [zeros(len), zeros(len)];
        for i in 0..np {
            let sp = g2.sin_phi[i];
            let isp = g2.inv_sin_phi[i];
            for j in 0..nt {
                let n = i * nt + j;
                let (w11, w12, w22) = (sup.w11[n], sup.w12[n], sup.w22[n]);
                let dw = sup.det_w[n];
                g[0][n] = w11 * w11 + w12 * w12;
                g[1][n] = w12 * (w11 + w22) * sp;
                g[2][n] = (w12 * w12 + w22 * w22) * sp * sp;
                hm[0][n] = w11;
                hm[1][n] = w12 * sp;
                hm[2][n] = w22 * sp * sp;
                // Ŵ⁻¹ and its square, then unscale by D⁻¹.
                let (m11, m12, m22) = (w22 / dw, -w12 / dw, w11 / dw);
                b[0][n] = m11;
                b[1][n] = m12 * isp;
                b[2][n] = m22 * isp * isp;
                gi[0][n] = m11 * m11 + m12 * m12;
                gi[1][n] = m12 * (m11 + m22) * isp;
                gi[2][n] = (m12 * m12 + m22 * m22) * isp * isp;
                k[n] = 1.0 / dw;
                h_tr[n] = gi[0][n] * hm[0][n] + 2.0 * gi[1][n] * hm[1][n] + gi[2][n] * hm[2][n];
                let (lo, hi) = pencil_eigs(g[0][n], g[1][n], g[2][n], hm[0][n], hm[1][n], hm[2][n]);
                lam[0][n] = lo;
                lam[1][n] = hi;
                xfu[0][n] = gi[0][n] * emb.xf1[n] + gi[1][n] * emb.xf2[n];
                xfu[1][n] = gi[1][n] * emb.xf1[n] + gi[2][n] * emb.xf2[n];
            }
        }
        let gam = christoffels(g2, &g, &gi);
        Self {
            g,
            gi,
            hm,
            b,
            gam,
            k,
            h_tr,
            lam,
            x_sq: emb.x_sq.clone(),
            xf: [emb.xf1.clone(), emb.xf2.clone()],
            xfu,
        }
    }

    /// Worst deviation of g^{ik}g_{kj} and b^{ik}h_{kj} from the identity.
    pub fn delta_consistency(&self) -> f64 {
        let mut worst = 0.0_f64;
        for n in 0..self.k.len() {
            let pairs = [(&self.gi, &self.g), (&self.b, &self.hm)];
            for (a, m) in pairs {
                let d00 = a[0][n] * m[0][n] + a[1][n] * m[1][n] - 1.0;
                let d01 = a[0][n] * m[1][n] + a[1][n] * m[2][n];
                let d10 = a[1][n] * m[0][n] + a[2][n] * m[1][n];
                let d11 = a[1][n] * m[1][n] + a[2][n] * m[2][n] - 1.0;
                for d in [d00, d01, d10, d11] {
                    worst = worst.max(d.abs());
                }
            }
        }
        worst
    }
}

/// Γ^κ_{ij} = ½ g^{κl}(∂_i g_{jl} + ∂_j g_{il} − ∂_l g_{ij}) with weighted
/// stencil partials of the metric planes.
fn christoffels(g2: &Grid2, g: &[Vec<f64>; 3], gi: &[Vec<f64>; 3]) -> [[Vec<f64>; 3]; 2] {
    let d = Deriv2::new(g2);
    let len = g[0].len();
    // dg[a][s]: ∂_a of metric plane s; plane s has longitude weight s.
    let dg = [
        [
            d.dphi(g2, &g[0], 0, 1.0),
            d.dphi(g2, &g[1], 1, 1.0),
            d.dphi(g2, &g[2], 2, 1.0),
        ],
        [d.dtheta(&g[0]), d.dtheta(&g[1]), d.dtheta(&g[2])],
    ];
    let mut gam = [
        [zeros(len), zeros(len), zeros(len)],
        [zeros(len), zeros(len), zeros(len)],
    ];
    for n in 0..len {
        let part = |a: usize, i: usize, j: usize| dg[a][sym2(i, j)][n];
        for kappa in 0..2 {
            for i in 0..2 {
                for j in i..2 {
                    let mut v = 0.0;
                    for l in 0..2 {
                        v += gi[sym2(kappa, l)][n]
                            * (part(i, j, l) + part(j, i, l) - part(l, i, j));
                    }
                    gam[kappa][sym2(i, j)][n] = 0.5 * v;
                }
            }
        }
    }
    gam
}

/// Derivative machinery bound to one grid; identity checks allocate freely.
pub struct TensorOps<'a> {
    pub g2: &'a Grid2,
    d: Deriv2,
    s: Scratch2,
}

impl<'a> TensorOps<'a> {
    pub fn new(g2: &'a Grid2) -> Self {
        Self {
            g2,
            d: Deriv2::new(g2),
            s: Scratch2::new(g2),
        }
    }

    /// ∂φ of a plane with longitude weight k and desinned parity σ.
    pub fn dphi(&mut self, f: &[f64], k: i32, sigma: f64) -> Vec<f64> {
        let mut out = zeros(f.len());
        self.d.dphi_into(self.g2, f, k, sigma, &mut self.s, &mut out);
        out
    }

    pub fn dphiphi(&mut self, f: &[f64], k: i32, sigma: f64) -> Vec<f64> {
        let mut out = zeros(f.len());
        self.d.dphiphi_into(self.g2, f, k, sigma, &mut self.s, &mut out);
        out
    }

    pub fn dtheta(&mut self, f: &[f64]) -> Vec<f64> {
        let mut out = zeros(f.len());
        self.d.dtheta_into(f, &mut out);
        out
    }

    pub fn dthetatheta(&mut self, f: &[f64]) -> Vec<f64> {
        let mut out = zeros(f.len());
        self.d.dthetatheta_into(f, &mut out);
        out
    }

    /// Partial of plane `f` along chart direction `a` given (weight, parity).
    fn partial(&mut self, f: &[f64], a: usize, k: i32, sigma: f64) -> Vec<f64> {
        if a == 0 {
            self.dphi(f, k, sigma)
        } else {
            self.dtheta(f)
        }
    }

    /// ∇_a T_{ij} for a symmetric covariant 2-tensor; planes [a][sym2(i,j)].
    pub fn cov_deriv_sym2(&mut self, bd: &GeometryBundle, t: &[Vec<f64>; 3]) -> [[Vec<f64>; 3]; 2] {
        let len = t[0].len();
        let mut out = [
            [zeros(len), zeros(len), zeros(len)],
            [zeros(len), zeros(len), zeros(len)],
        ];
        for a in 0..2 {
            for i in 0..2 {
                for j in i..2 {
                    let s = sym2(i, j);
                    let mut plane = self.partial(&t[s], a, s as i32, 1.0);
                    for n in 0..len {
                        let mut v = plane[n];
                        for l in 0..2 {
                            v -= bd.gam[l][sym2(a, i)][n] * t[sym2(l, j)][n];
                            v -= bd.gam[l][sym2(a, j)][n] * t[sym2(i, l)][n];
                        }
                        plane[n] = v;
                    }
                    out[a][s] = plane;
                }
            }
        }
        out
    }

    /// ∇_a T^{pq} for a symmetric contravariant 2-tensor.
    pub fn cov_deriv_sym2_con(
        &mut self,
        bd: &GeometryBundle,
        t: &[Vec<f64>; 3],
    ) -> [[Vec<f64>; 3]; 2] {
        let len = t[0].len();
        let mut out = [
            [zeros(len), zeros(len), zeros(len)],
            [zeros(len), zeros(len), zeros(len)],
        ];
        for a in 0..2 {
            for p in 0..2 {
                for q in p..2 {
                    let s = sym2(p, q);
                    let mut plane = self.partial(&t[s], a, -(s as i32), 1.0);
                    for n in 0..len {
                        let mut v = plane[n];
                        for l in 0..2 {
                            v += bd.gam[p][sym2(a, l)][n] * t[sym2(l, q)][n];
                            v += bd.gam[q][sym2(a, l)][n] * t[sym2(p, l)][n];
                        }
                        plane[n] = v;
                    }
                    out[a][s] = plane;
                }
            }
        }
        out
    }

    /// ∇_a ∇_b T_{ij} planes indexed [2a + b][sym2(i,j)], from the 3-tensor
    /// A_{b,ij} = ∇T. Plane A_{b,ij} carries weight [b=θ] + i + j, parity −1.
    pub fn second_cov_deriv_sym2(
        &mut self,
        bd: &GeometryBundle,
        grad: &[[Vec<f64>; 3]; 2],
    ) -> [[Vec<f64>; 3]; 4] {
        let len = grad[0][0].len();
        let mut out: [[Vec<f64>; 3]; 4] = core::array::from_fn(|_| core::array::from_fn(|_| zeros(len)));
        for a in 0..2 {
            for bidx in 0..2 {
                for i in 0..2 {
                    for j in i..2 {
                        let s = sym2(i, j);
                        let kw = bidx as i32 + s as i32;
                        let mut plane = self.partial(&grad[bidx][s], a, kw, -1.0);
                        for n in 0..len {
                            let mut v = plane[n];
                            for l in 0..2 {
                                v -= bd.gam[l][sym2(a, bidx)][n] * grad[l][s][n];
                                v -= bd.gam[l][sym2(a, i)][n] * grad[bidx][sym2(l, j)][n];
                                v -= bd.gam[l][sym2(a, j)][n] * grad[bidx][sym2(i, l)][n];
                            }
                            plane[n] = v;
                        }
                        out[2 * a + bidx][s] = plane;
                    }
                }
            }
        }
        out
    }

    /// ∇_a ∇_b T^{pq} planes indexed [2a + b][sym2(p,q)], from A_b^{pq} = ∇T.
    pub fn second_cov_deriv_sym2_con(
        &mut self,
        bd: &GeometryBundle,
        grad: &[[Vec<f64>; 3]; 2],
    ) -> [[Vec<f64>; 3]; 4] {
        let len = grad[0][0].len();
        let mut out: [[Vec<f64>; 3]; 4] = core::array::from_fn(|_| core::array::from_fn(|_| zeros(len)));
        for a in 0..2 {
            for bidx in 0..2 {
                for p in 0..2 {
                    for q in p..2 {
                        let s = sym2(p, q);
                        let kw = bidx as i32 - s as i32;
                        let mut plane = self.partial(&grad[bidx][s], a, kw, -1.0);
                        for n in 0..len {
                            let mut v = plane[n];
                            for l in 0..2 {
                                v -= bd.gam[l][sym2(a, bidx)][n] * grad[l][s][n];
                                v += bd.gam[p][sym2(a, l)][n] * grad[bidx][sym2(l, q)][n];
                                v += bd.gam[q][sym2(a, l)][n] * grad[bidx][sym2(p, l)][n];
                            }
                            plane[n] = v;
                        }
                        out[2 * a + bidx][s] = plane;
                    }
                }
            }
        }
        out
    }

    /// Covariant Hessian of a scalar: ∇_i∇_j f = ∂_i∂_j f − Γ^l_{ij} ∂_l f.
    pub fn hessian_scalar(&mut self, bd: &GeometryBundle, f: &[f64]) -> [Vec<f64>; 3] {
        let fp = self.dphi(f, 0, 1.0);
        let ft = self.dtheta(f);
        let mut out = [
            self.dphiphi(f, 0, 1.0),
            self.dphi(&ft, 0, 1.0),
            self.dthetatheta(f),
        ];
        for s in 0..3 {
            for n in 0..f.len() {
                out[s][n] -= bd.gam[0][s][n] * fp[n] + bd.gam[1][s][n] * ft[n];
            }
        }
        out
    }

    /// 𝓛f = α K^α b^{ij} ∇_i∇_j f. Annihilates constants exactly because the
    /// underlying stencils do.
    pub fn apply_l(&mut self, bd: &GeometryBundle, f: &[f64], alpha: f64) -> Vec<f64> {
        let hess = self.hessian_scalar(bd, f);
        let mut out = zeros(f.len());
        for n in 0..f.len() {
            let tr = bd.b[0][n] * hess[0][n]
                + 2.0 * bd.b[1][n] * hess[1][n]
                + bd.b[2][n] * hess[2][n];
            out[n] = alpha * libm::pow(bd.k[n], alpha) * tr;
        }
        out
    }

    /// ⟨F, ∇f⟩ = ⟨X, F^i⟩ ∂_i f.
    pub fn radial_transport(&mut self, bd: &GeometryBundle, f: &[f64]) -> Vec<f64> {
        let fp = self.dphi(f, 0, 1.0);
        let ft = self.dtheta(f);
        (0..f.len())
            .map(|n| bd.xfu[0][n] * fp[n] + bd.xfu[1][n] * ft[n])
            .collect()
    }

    /// |∇f| = (g^{ij} ∂_i f ∂_j f)^{1/2}.
    pub fn grad_norm(&mut self, bd: &GeometryBundle, f: &[f64]) -> Vec<f64> {
        let fp = self.dphi(f, 0, 1.0);
        let ft = self.dtheta(f);
        (0..f.len())
            .map(|n| {
                let q = bd.gi[0][n] * fp[n] * fp[n]
                    + 2.0 * bd.gi[1][n] * fp[n] * ft[n]
                    + bd.gi[2][n] * ft[n] * ft[n];
                libm::sqrt(q.max(0.0))
            })
            .collect()
    }
}

/// One-dimensional reduction: every tensor has a single component.
#[derive(Debug, Clone)]
pub struct Geometry1 {
    pub g11: Vec<f64>,
    pub gi11: Vec<f64>,
    pub h11: Vec<f64>,
    pub b11: Vec<f64>,
    /// Γ^1_{11} = ∂θ g_{11} / (2 g_{11}).
    pub gam: Vec<f64>,
    pub k: Vec<f64>,
    pub lam: Vec<f64>,
    pub x_sq: Vec<f64>,
    pub xf1: Vec<f64>,
    pub xfu1: Vec<f64>,
}

impl Geometry1 {
    pub fn build(g1: &Grid1, h: &[f64]) -> Result<Self> {
        for (n, &v) in h.iter().enumerate() {
            if v <= 0.0 {
                return Err(GcfError::NonPositiveSupport { node: n, value: v });
            }
        }
        let sup = Bundle1::compute(g1, h);
        for (n, &w) in sup.w.iter().enumerate() {
            if w <= 0.0 {
                return Err(GcfError::ConvexityLoss { node: n, min_eig: w });
            }
        }
        let d = Deriv1::new(g1);
        let len = h.len();
        let mut g11 = zeros(len);
        let mut gi11 = zeros(len);
        let mut b11 = zeros(len);
        let mut k = zeros(len);
        let mut x_sq = zeros(len);
        let mut xf1 = zeros(len);
        let mut xfu1 = zeros(len);
        for n in 0..len {
            let w = sup.w[n];
            g11[n] = w * w;
            gi11[n] = 1.0 / (w * w);
            b11[n] = 1.0 / w;
            k[n] = 1.0 / w;
            x_sq[n] = h[n] * h[n] + sup.hp[n] * sup.hp[n];
            xf1[n] = sup.hp[n] * w;
            xfu1[n] = sup.hp[n] / w;
        }
        let dg = d.d1(&g11);
        let gam = (0..len).map(|n| dg[n] / (2.0 * g11[n])).collect();
        Ok(Self {
            g11,
            gi11,
            h11: sup.w.clone(),
            b11,
            gam,
            k: k.clone(),
            lam: k,
            x_sq,
            xf1,
            xfu1,
        })
    }
}

/// Pointwise tensor data in an arbitrary (possibly skewed) chart: just enough
/// for the chart-dependent inequality checks. Obtained from a bundle and
/// optionally pushed through per-node congruences J (simulating a chart whose
/// coordinate frame is J times the original one).
#[derive(Debug, Clone)]
pub struct ChartTensors {
    pub g: [Vec<f64>; 3],
    pub gi: [Vec<f64>; 3],
    pub hm: [Vec<f64>; 3],
    pub b: [Vec<f64>; 3],
    pub lam_min: Vec<f64>,
    pub lam_max: Vec<f64>,
    pub k: Vec<f64>,
    pub x_sq: Vec<f64>,
}

impl ChartTensors {
    pub fn from_bundle(bd: &GeometryBundle) -> Self {
        Self {
            g: bd.g.clone(),
            gi: bd.gi.clone(),
            hm: bd.hm.clone(),
            b: bd.b.clone(),
            lam_min: bd.lam[0].clone(),
            lam_max: bd.lam[1].clone(),
            k: bd.k.clone(),
            x_sq: bd.x_sq.clone(),
        }
    }

    /// Change frame by F'_i = J^a_i F_a per node (J row-major [j11,j12,j21,j22]).
    /// Covariant tensors pick up JᵀTJ, contravariant ones J⁻¹TJ⁻ᵀ; the pencil
    /// eigenvalues are recomputed and must be invariant.
    pub fn apply_congruence(&mut self, jf: &[[f64; 4]]) {
        assert_eq!(jf.len(), self.k.len());
        for n in 0..self.k.len() {
            let [j11, j12, j21, j22] = jf[n];
            let det = j11 * j22 - j12 * j21;
            let (i11, i12, i21, i22) = (j22 / det, -j12 / det, -j21 / det, j11 / det);
            let cov = |t: &[Vec<f64>; 3]| -> [f64; 3] {
                let (t11, t12, t22) = (t[0][n], t[1][n], t[2][n]);
                [
                    j11 * (t11 * j11 + t12 * j21) + j21 * (t12 * j11 + t22 * j21),
                    j11 * (t11 * j12 + t12 * j22) + j21 * (t12 * j12 + t22 * j22),
                    j12 * (t11 * j12 + t12 * j22) + j22 * (t12 * j12 + t22 * j22),
                ]
            };
            let con = |t: &[Vec<f64>; 3]| -> [f64; 3] {
                let (t11, t12, t22) = (t[0][n], t[1][n], t[2][n]);
                [
                    i11 * (t11 * i11 + t12 * i12) + i12 * (t12 * i11 + t22 * i12),
                    i11 * (t11 * i21 + t12 * i22) + i12 * (t12 * i21 + t22 * i22),
                    i21 * (t11 * i21 + t12 * i22) + i22 * (t12 * i21 + t22 * i22),
                ]
            };
            let gn = cov(&self.g);
            let hn = cov(&self.hm);
            let bn = con(&self.b);
            let gin = con(&self.gi);
            for s in 0..3 {
                self.g[s][n] = gn[s];
                self.hm[s][n] = hn[s];
                self.b[s][n] = bn[s];
                self.gi[s][n] = gin[s];
            }
            let (lo, hi) = pencil_eigs(gn[0], gn[1], gn[2], hn[0], hn[1], hn[2]);
            self.lam_min[n] = lo;
            self.lam_max[n] = hi;
        }
    }

    /// (b g b)^{ii} for i = 0, 1.
    #[inline]
    fn bgb_diag(&self, n: usize) -> [f64; 2] {
        let (b11, b12, b22) = (self.b[0][n], self.b[1][n], self.b[2][n]);
        let (g11, g12, g22) = (self.g[0][n], self.g[1][n], self.g[2][n]);
        [
            b11 * b11 * g11 + 2.0 * b11 * b12 * g12 + b12 * b12 * g22,
            b12 * b12 * g11 + 2.0 * b12 * b22 * g12 + b22 * b22 * g22,
        ]
    }

    /// Normal-curvature bound gap per node and chart axis:
    /// 1/λ_min² − (b g b)^{ii}/g^{ii} ≥ 0 up to roundoff, in any chart.
    pub fn euler_gap(&self) -> [Vec<f64>; 2] {
        let len = self.k.len();
        let mut out = [zeros(len), zeros(len)];
        for n in 0..len {
            let bgb = self.bgb_diag(n);
            let bound = 1.0 / (self.lam_min[n] * self.lam_min[n]);
            out[0][n] = bound - bgb[0] / self.gi[0][n];
            out[1][n] = bound - bgb[1] / self.gi[2][n];
        }
        out
    }

    /// w = K^α/λ_min − ((nα−1)/(2nα))|X|² (chart-free).
    pub fn pogorelov_w(&self, nd: usize, alpha: f64) -> Vec<f64> {
        let c = (nd as f64 * alpha - 1.0) / (2.0 * nd as f64 * alpha);
        (0..self.k.len())
            .map(|n| libm::pow(self.k[n], alpha) / self.lam_min[n] - c * self.x_sq[n])
            .collect()
    }

    /// w̄ along chart axis i: K^α ((b g b)^{ii}/g^{ii})^{1/2} − ((nα−1)/(2nα))|X|².
    /// Chart-dependent, but always ≤ w.
    pub fn pogorelov_wbar(&self, nd: usize, alpha: f64, axis: usize) -> Vec<f64> {
        let c = (nd as f64 * alpha - 1.0) / (2.0 * nd as f64 * alpha);
        let gii = if axis == 0 { &self.gi[0] } else { &self.gi[2] };
        (0..self.k.len())
            .map(|n| {
                let bgb = self.bgb_diag(n)[axis];
                libm::pow(self.k[n], alpha) * libm::sqrt(bgb / gii[n]) - c * self.x_sq[n]
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::BodySpec;
    use crate::field::{max_abs, max_abs_diff, observed_order};
    use crate::grid::SphereGrid;
    use rand::{Rng, SeedableRng};

    fn sphere_bundle(np: usize) -> (Grid2, GeometryBundle) {
        let g2 = Grid2::new(np, 2 * np).unwrap();
        let h = vec![1.0; g2.node_count()];
        let bd = GeometryBundle::build(&g2, &h).unwrap();
        (g2, bd)
    }

    fn fuzz_body(seed: u64, amp: f64) -> BodySpec {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut coeffs = [0.0; crate::bodies::TRIG_BASIS];
        for c in coeffs.iter_mut() {
            *c = rng.gen_range(-1.0..1.0);
        }
        BodySpec::TrigSphere { amp, coeffs }
    }

    #[test]
    fn unit_sphere_bundle_matches_round_chart() {
        let (g2, bd) = sphere_bundle(24);
        for i in 0..g2.n_phi {
            let s2v = g2.sin_phi[i] * g2.sin_phi[i];
            for j in 0..g2.n_theta {
                let n = g2.idx(i, j);
                assert!((bd.g[0][n] - 1.0).abs() < 1e-14);
                assert!(bd.g[1][n].abs() < 1e-14);
                assert!((bd.g[2][n] - s2v).abs() < 1e-14);
                assert!((bd.lam[0][n] - 1.0).abs() < 1e-13);
                assert!((bd.lam[1][n] - 1.0).abs() < 1e-13);
                assert!((bd.k[n] - 1.0).abs() < 1e-13);
                assert!((bd.h_tr[n] - 2.0).abs() < 1e-10);
                assert!((bd.x_sq[n] - 1.0).abs() < 1e-14);
                assert!(bd.xf[0][n].abs() < 1e-14);
            }
        }
        assert!(bd.delta_consistency() < 1e-12);
    }

    #[test]
    fn delta_consistency_and_trace_on_fuzzed_body() {
        let grid = SphereGrid::build(2, 24).unwrap();
        let mut body = fuzz_body(11, 0.2);
        body.shrink_to_convex(&grid, 0.1).unwrap();
        let h = body.sample(&grid).unwrap();
        if let SphereGrid::Sphere(g2) = &grid {
            let bd = GeometryBundle::build(g2, &h).unwrap();
            assert!(bd.delta_consistency() < 1e-12);
            // H = λ₁ + λ₂ ties the contraction to the pencil eigenvalues.
            for n in 0..bd.k.len() {
                assert!((bd.h_tr[n] - bd.lam[0][n] - bd.lam[1][n]).abs() < 1e-10);
                // K = λ₁λ₂ as well.
                assert!((bd.k[n] - bd.lam[0][n] * bd.lam[1][n]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn degenerate_input_reports_convexity_loss() {
        // A plane-like support function (huge single harmonic) loses W ≻ 0.
        let g2 = Grid2::new(16, 32).unwrap();
        let mut h = vec![1.0; g2.node_count()];
        for i in 0..g2.n_phi {
            for j in 0..g2.n_theta {
                h[g2.idx(i, j)] += 0.9 * (3.0 * g2.cos_phi[i] * g2.cos_phi[i] - 1.0);
            }
        }
        assert!(matches!(
            GeometryBundle::build(&g2, &h),
            Err(GcfError::ConvexityLoss { .. })
        ));
    }

    #[test]
    fn ellipse_curvature_matches_support_cube() {
        // For an ellipse with ab = 1 the curvature at normal angle θ is h³.
        let mut errs = Vec::new();
        for nt in [128usize, 256, 512] {
            let g1 = Grid1::new(nt).unwrap();
            let grid = SphereGrid::Circle(g1.clone());
            let h = BodySpec::Ellipse { a: 2.0, b: 0.5 }.sample(&grid).unwrap();
            let geo = Geometry1::build(&g1, &h).unwrap();
            let kappa_oracle: Vec<f64> = h.iter().map(|&v| v * v * v).collect();
            errs.push(max_abs_diff(&geo.k, &kappa_oracle));
        }
        assert!(observed_order(errs[0], errs[1]) > 3.5, "{errs:?}");
        assert!(observed_order(errs[1], errs[2]) > 3.5, "{errs:?}");
        assert!(errs[2] < 1e-3, "{errs:?}");
    }

    #[test]
    fn metric_compatibility_holds_at_roundoff() {
        // ∇g vanishes identically in the discrete algebra because Γ is built
        // from the same stencil partials; only δ-consistency roundoff remains.
        let grid = SphereGrid::build(2, 24).unwrap();
        let mut body = fuzz_body(3, 0.2);
        body.shrink_to_convex(&grid, 0.1).unwrap();
        let h = body.sample(&grid).unwrap();
        if let SphereGrid::Sphere(g2) = &grid {
            let bd = GeometryBundle::build(g2, &h).unwrap();
            let mut ops = TensorOps::new(g2);
            let grad = ops.cov_deriv_sym2(&bd, &bd.g);
            for a in 0..2 {
                for s in 0..3 {
                    assert!(max_abs(&grad[a][s]) < 1e-10, "a={a} s={s}");
                }
            }
        }
    }

    #[test]
    fn codazzi_symmetry_decays_at_stencil_order() {
        // Total symmetry of ∇h in (a, i, j): the two independent defects are
        // measured componentwise in the raw chart.
        let body = BodySpec::even_calibration();
        let mut defects = Vec::new();
        for np in [24usize, 48, 96] {
            let grid = SphereGrid::build(2, np).unwrap();
            let h = body.sample(&grid).unwrap();
            if let SphereGrid::Sphere(g2) = &grid {
                let bd = GeometryBundle::build(g2, &h).unwrap();
                let mut ops = TensorOps::new(g2);
                let grad = ops.cov_deriv_sym2(&bd, &bd.hm);
                // ∇_φ h_{φθ} vs ∇_θ h_{φφ} and ∇_φ h_{θθ} vs ∇_θ h_{φθ}.
                let d1 = max_abs_diff(&grad[0][1], &grad[1][0]);
                let d2 = max_abs_diff(&grad[0][2], &grad[1][1]);
                defects.push(d1.max(d2));
            }
        }
        assert!(observed_order(defects[0], defects[1]) > 3.0, "{defects:?}");
        assert!(observed_order(defects[1], defects[2]) > 3.0, "{defects:?}");
    }

    #[test]
    fn hessian_and_l_annihilate_sphere_invariants() {
        let (g2, bd) = sphere_bundle(24);
        let mut ops = TensorOps::new(&g2);
        // |X|² ≡ 1: Hessian and 𝓛 vanish exactly (constant field).
        let hess = ops.hessian_scalar(&bd, &bd.x_sq);
        for s in 0..3 {
            assert!(max_abs(&hess[s]) < 1e-12);
        }
        let lf = ops.apply_l(&bd, &bd.x_sq, 0.8);
        assert!(max_abs(&lf) < 1e-12);
        // A genuinely varying scalar: f = ν_z. ∇²f = −f g on the unit sphere.
        let mut f = vec![0.0; g2.node_count()];
        for i in 0..g2.n_phi {
            for j in 0..g2.n_theta {
                f[g2.idx(i, j)] = g2.cos_phi[i];
            }
        }
        let hess = ops.hessian_scalar(&bd, &f);
        let mut worst = 0.0_f64;
        for s in 0..3 {
            for n in 0..f.len() {
                worst = worst.max((hess[s][n] + f[n] * bd.g[s][n]).abs());
            }
        }
        assert!(worst < 1e-5, "hessian defect {worst:.3e}");
    }

    #[test]
    fn euler_gap_nonnegative_on_skewed_charts() {
        let grid = SphereGrid::build(2, 24).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for seed in 0..5u64 {
            let mut body = fuzz_body(100 + seed, 0.2);
            body.shrink_to_convex(&grid, 0.1).unwrap();
            let h = body.sample(&grid).unwrap();
            if let SphereGrid::Sphere(g2) = &grid {
                let bd = GeometryBundle::build(g2, &h).unwrap();
                let mut ct = ChartTensors::from_bundle(&bd);
                let lam_before = ct.lam_min.clone();
                let jf: Vec<[f64; 4]> = (0..ct.k.len())
                    .map(|_| loop {
                        let j: [f64; 4] = [
                            1.0 + 0.4 * rng.gen_range(-1.0..1.0),
                            0.4 * rng.gen_range(-1.0..1.0),
                            0.4 * rng.gen_range(-1.0..1.0),
                            1.0 + 0.4 * rng.gen_range(-1.0..1.0),
                        ];
                        if (j[0] * j[3] - j[1] * j[2]).abs() > 0.3 {
                            break j;
                        }
                    })
                    .collect();
                ct.apply_congruence(&jf);
                // Pencil eigenvalues are congruence invariants.
                let lam_drift = max_abs_diff(&lam_before, &ct.lam_min);
                assert!(lam_drift < 1e-10, "eig drift {lam_drift:.3e}");
                let gap = ct.euler_gap();
                for axis in 0..2 {
                    let min_gap = gap[axis].iter().cloned().fold(f64::INFINITY, f64::min);
                    assert!(min_gap >= -1e-10, "axis {axis}: min gap {min_gap:.3e}");
                }
            }
        }
    }

    #[test]
    fn wbar_bounded_by_w_and_sphere_equality() {
        let (_, bd) = sphere_bundle(16);
        let ct = ChartTensors::from_bundle(&bd);
        let alpha = 0.9;
        let w = ct.pogorelov_w(2, alpha);
        let wbar = ct.pogorelov_wbar(2, alpha, 0);
        let expect = 1.0 - (2.0 * alpha - 1.0) / (4.0 * alpha);
        for n in 0..w.len() {
            assert!((w[n] - expect).abs() < 1e-12);
            assert!((wbar[n] - expect).abs() < 1e-12);
        }
        // Skewed fuzzed body: w̄ ≤ w must survive any chart.
        let grid = SphereGrid::build(2, 24).unwrap();
        let mut body = fuzz_body(77, 0.2);
        body.shrink_to_convex(&grid, 0.1).unwrap();
        let h = body.sample(&grid).unwrap();
        if let SphereGrid::Sphere(g2) = &grid {
            let bd = GeometryBundle::build(g2, &h).unwrap();
            let mut ct = ChartTensors::from_bundle(&bd);
            let w_plain = ct.pogorelov_w(2, alpha);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
            let jf: Vec<[f64; 4]> = (0..ct.k.len())
                .map(|_| {
                    [
                        1.0 + 0.3 * rng.gen_range(-1.0..1.0),
                        0.3 * rng.gen_range(-1.0..1.0),
                        0.3 * rng.gen_range(-1.0..1.0),
                        1.0 + 0.3 * rng.gen_range(-1.0..1.0),
                    ]
                })
                .collect();
            ct.apply_congruence(&jf);
            // w is chart-free (λ_min, K, |X|² invariant).
            let w_skew = ct.pogorelov_w(2, alpha);
            assert!(max_abs_diff(&w_plain, &w_skew) < 1e-9);
            for axis in 0..2 {
                let wbar = ct.pogorelov_wbar(2, alpha, axis);
                let worst = wbar
                    .iter()
                    .zip(&w_skew)
                    .fold(f64::NEG_INFINITY, |m, (&wb, &wv)| m.max(wb - wv));
                assert!(worst <= 1e-10, "axis {axis}: max(w̄−w) {worst:.3e}");
            }
        }
    }
}
