//! Constant elasticity tensors of plane elastostatics.
//!
//! A tensor is stored through its action on symmetric tensors in the
//! orthonormal Voigt basis `(E11, E22, √2·E12)`. In that basis the induced
//! 3×3 matrix is symmetric exactly when `C_ijhk = C_hkij`, and its extreme
//! eigenvalues are the positivity bounds `(μ₀, μₑ)`.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use super::linalg::{Mat2, Vec2};
use crate::error::{Error, Result};

/// Fourth-order tensor `C`, linear on Sym and vanishing on Skw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElasticityTensor {
    voigt: [[f64; 3]; 3],
}

/// Lamé moduli of an isotropic material, `C[E] = 2μE + λ tr(E) 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsotropicModuli {
    pub lambda_lame: f64,
    pub mu_shear: f64,
}

impl IsotropicModuli {
    pub fn new(lambda_lame: f64, mu_shear: f64) -> Result<Self> {
        if !(mu_shear > 0.0) || !(lambda_lame >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "isotropic moduli need λ ≥ 0 and μ > 0, got λ = {lambda_lame}, μ = {mu_shear}"
            )));
        }
        Ok(Self {
            lambda_lame,
            mu_shear,
        })
    }

    pub fn tensor(&self) -> ElasticityTensor {
        ElasticityTensor::isotropic(self.lambda_lame, self.mu_shear)
    }

    /// Positivity bounds `(2μ, 2μ + 2λ)`.
    pub fn bounds(&self) -> (f64, f64) {
        (
            2.0 * self.mu_shear,
            2.0 * self.mu_shear + 2.0 * self.lambda_lame,
        )
    }

    /// Plane-strain Poisson ratio `λ / (2(λ + μ))`.
    pub fn poisson_ratio(&self) -> f64 {
        self.lambda_lame / (2.0 * (self.lambda_lame + self.mu_shear))
    }
}

#[inline]
fn voigt_index(i: usize, j: usize) -> usize {
    if i == j {
        i
    } else {
        2
    }
}

#[inline]
fn voigt_scale(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        std::f64::consts::FRAC_1_SQRT_2
    }
}

impl ElasticityTensor {
    pub const ZERO: ElasticityTensor = ElasticityTensor {
        voigt: [[0.0; 3]; 3],
    };

    /// Builds a tensor from its Voigt matrix. The matrix is symmetrized; an
    /// asymmetric input is rejected.
    pub fn from_voigt(m: [[f64; 3]; 3]) -> Result<Self> {
        let scale = m
            .iter()
            .flatten()
            .fold(0.0f64, |a, b| a.max(b.abs()))
            .max(1.0);
        for a in 0..3 {
            for b in 0..a {
                if (m[a][b] - m[b][a]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidTensor(format!(
                        "Voigt matrix not symmetric at ({a}, {b}): no major symmetry"
                    )));
                }
            }
        }
        let mut voigt = m;
        for a in 0..3 {
            for b in 0..a {
                let s = 0.5 * (m[a][b] + m[b][a]);
                voigt[a][b] = s;
                voigt[b][a] = s;
            }
        }
        Ok(Self { voigt })
    }

    /// Builds a tensor from full components `C_ijhk`, checking major and
    /// minor symmetries.
    pub fn from_components(c: [[[[f64; 2]; 2]; 2]; 2]) -> Result<Self> {
        let scale = c
            .iter()
            .flatten()
            .flatten()
            .flatten()
            .fold(0.0f64, |a, b| a.max(b.abs()))
            .max(1.0);
        let tol = 1e-12 * scale;
        for i in 0..2 {
            for j in 0..2 {
                for h in 0..2 {
                    for k in 0..2 {
                        let v = c[i][j][h][k];
                        if (v - c[h][k][i][j]).abs() > tol {
                            return Err(Error::InvalidTensor("C_ijhk ≠ C_hkij".into()));
                        }
                        if (v - c[j][i][h][k]).abs() > tol || (v - c[i][j][k][h]).abs() > tol {
                            return Err(Error::InvalidTensor(
                                "C must map into Sym and vanish on Skw".into(),
                            ));
                        }
                    }
                }
            }
        }
        let mut m = [[0.0; 3]; 3];
        for (i, j) in [(0, 0), (1, 1), (0, 1)] {
            for (h, k) in [(0, 0), (1, 1), (0, 1)] {
                m[voigt_index(i, j)][voigt_index(h, k)] =
                    c[i][j][h][k] / (voigt_scale(i, j) * voigt_scale(h, k));
            }
        }
        Self::from_voigt(m)
    }

    pub fn isotropic(lambda_lame: f64, mu_shear: f64) -> Self {
        let d = lambda_lame + 2.0 * mu_shear;
        Self {
            voigt: [
                [d, lambda_lame, 0.0],
                [lambda_lame, d, 0.0],
                [0.0, 0.0, 2.0 * mu_shear],
            ],
        }
    }

    /// `μ·sym`, the tensor with `E·C[E] = μ|E|²` on Sym.
    pub fn scaled_identity(mu: f64) -> Self {
        Self {
            voigt: [[mu, 0.0, 0.0], [0.0, mu, 0.0], [0.0, 0.0, mu]],
        }
    }

    pub fn voigt(&self) -> [[f64; 3]; 3] {
        self.voigt
    }

    /// Component `C_ijhk`.
    pub fn component(&self, i: usize, j: usize, h: usize, k: usize) -> f64 {
        self.voigt[voigt_index(i, j)][voigt_index(h, k)] * voigt_scale(i, j) * voigt_scale(h, k)
    }

    /// Components as a 4×4 matrix on Lin, row `2i + j`, column `2h + k`.
    pub fn lin_matrix(&self) -> [[f64; 4]; 4] {
        let mut out = [[0.0; 4]; 4];
        for i in 0..2 {
            for j in 0..2 {
                for h in 0..2 {
                    for k in 0..2 {
                        out[2 * i + j][2 * h + k] = self.component(i, j, h, k);
                    }
                }
            }
        }
        out
    }

    /// `C[L] = C[sym L]`; the result is symmetric.
    pub fn apply(&self, l: Mat2) -> Mat2 {
        let e = l.sym();
        let v = [e[(0, 0)], e[(1, 1)], SQRT_2 * e[(0, 1)]];
        let m = &self.voigt;
        let w = [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ];
        let off = w[2] / SQRT_2;
        Mat2::new(w[0], off, off, w[1])
    }

    /// Traction `C[∇u] n`.
    pub fn traction(&self, grad_u: Mat2, n: Vec2) -> Vec2 {
        self.apply(grad_u).apply(n)
    }

    /// Energy density `L·C[L]`.
    pub fn energy(&self, l: Mat2) -> f64 {
        l.dot(self.apply(l))
    }

    /// Acoustic tensor `K(b)_ih = C_ijhk b_j b_k`.
    pub fn acoustic(&self, b: Vec2) -> Mat2 {
        Mat2::from_fn(|i, h| {
            let mut s = 0.0;
            for j in 0..2 {
                for k in 0..2 {
                    s += self.component(i, j, h, k) * b[j] * b[k];
                }
            }
            s
        })
    }

    /// Extreme eigenvalues `(μ₀, μₑ)` of the induced operator on Sym.
    pub fn certify_bounds(&self) -> Result<(f64, f64)> {
        let (lo, hi) = self.sym_eigen_range();
        if !(lo > 0.0) {
            return Err(Error::NotPositiveDefinite { min_eigenvalue: lo });
        }
        Ok((lo, hi))
    }

    /// Least and greatest eigenvalue of the Voigt matrix, without judging sign.
    pub fn sym_eigen_range(&self) -> (f64, f64) {
        let ev = symmetric3_eigenvalues(self.voigt);
        (ev[0], ev[2])
    }

    /// `min_{|a|=|b|=1} a·C[a⊗b]b` by angular sampling with Newton refinement.
    ///
    /// For fixed `b` the minimum over `a` is the least eigenvalue of the
    /// acoustic tensor, so only the direction of `b` is searched.
    pub fn strong_ellipticity_margin(&self) -> f64 {
        const SAMPLES: usize = 720;
        const NEWTON_STEPS: usize = 3;
        let f = |phi: f64| self.acoustic(Vec2::polar(phi)).sym_eigenvalues().0;
        let mut best_phi = 0.0;
        let mut best = f64::INFINITY;
        for s in 0..SAMPLES {
            let phi = 2.0 * PI * s as f64 / SAMPLES as f64;
            let v = f(phi);
            if v < best {
                best = v;
                best_phi = phi;
            }
        }
        let h = 1e-4;
        let mut phi = best_phi;
        for _ in 0..NEWTON_STEPS {
            let (fm, f0, fp) = (f(phi - h), f(phi), f(phi + h));
            let d1 = (fp - fm) / (2.0 * h);
            let d2 = (fp - 2.0 * f0 + fm) / (h * h);
            if d2 <= 0.0 || !d2.is_finite() {
                break;
            }
            let step = (d1 / d2).clamp(-PI / SAMPLES as f64, PI / SAMPLES as f64);
            phi -= step;
        }
        best.min(f(phi))
    }

    /// Operator norm on Sym of `self − other`.
    pub fn distance(&self, other: &ElasticityTensor) -> f64 {
        let mut d = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                d[a][b] = self.voigt[a][b] - other.voigt[a][b];
            }
        }
        let ev = symmetric3_eigenvalues(d);
        ev[0].abs().max(ev[2].abs())
    }

    /// Lamé moduli when the tensor is isotropic.
    pub fn as_isotropic(&self) -> Option<IsotropicModuli> {
        let m = &self.voigt;
        let scale = m.iter().flatten().fold(0.0f64, |a, b| a.max(b.abs()));
        let tol = 1e-12 * scale.max(1e-300);
        let lambda = m[0][1];
        let mu = 0.5 * m[2][2];
        let iso = (m[0][0] - (lambda + 2.0 * mu)).abs() <= tol
            && (m[1][1] - (lambda + 2.0 * mu)).abs() <= tol
            && m[0][2].abs() <= tol
            && m[1][2].abs() <= tol;
        if iso {
            IsotropicModuli::new(lambda, mu).ok()
        } else {
            None
        }
    }
}

/// Ascending eigenvalues of a symmetric 3×3 matrix (cyclic Jacobi).
pub fn symmetric3_eigenvalues(a: [[f64; 3]; 3]) -> [f64; 3] {
    let mut m = a;
    for _ in 0..50 {
        let off = m[0][1].powi(2) + m[0][2].powi(2) + m[1][2].powi(2);
        let diag = m[0][0].powi(2) + m[1][1].powi(2) + m[2][2].powi(2);
        if off <= 1e-34 * diag || off == 0.0 {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if m[p][q] == 0.0 {
                continue;
            }
            let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            for k in 0..3 {
                let (mkp, mkq) = (m[k][p], m[k][q]);
                m[k][p] = c * mkp - s * mkq;
                m[k][q] = s * mkp + c * mkq;
            }
            for k in 0..3 {
                let (mpk, mqk) = (m[p][k], m[q][k]);
                m[p][k] = c * mpk - s * mqk;
                m[q][k] = s * mpk + c * mqk;
            }
        }
    }
    let mut ev = [m[0][0], m[1][1], m[2][2]];
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

/// Energy-growth exponent `γ = 4μ₀ / (5μ₀ + 8μₑ)`.
pub fn gamma_exponent(mu0: f64, mue: f64) -> Result<f64> {
    if !(mu0 > 0.0) || !(mue >= mu0) {
        return Err(Error::InvalidBounds {
            lower: mu0,
            upper: mue,
        });
    }
    Ok(4.0 * mu0 / (5.0 * mu0 + 8.0 * mue))
}

/// Exponent `1/√L`, `L = Λ/λ`, for tensors bounded on all of Lin.
pub fn sqrt_l_exponent(lambda: f64, big_lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) || !(big_lambda >= lambda) {
        return Err(Error::InvalidBounds {
            lower: lambda,
            upper: big_lambda,
        });
    }
    Ok((lambda / big_lambda).sqrt())
}
