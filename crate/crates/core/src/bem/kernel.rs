//! Fundamental matrix `𝒰(d) = Φ₀ log|d| + Φ(d/|d|)` of a constant tensor.
//!
//! Normalization: the displacement `𝒰e` of a unit point force `e` carries
//! total traction `−e` across every circle around the origin (normal pointing
//! away from the origin).

use std::f64::consts::{LN_2, PI, TAU};

use crate::error::{Error, Result};
use crate::tensor::{ElasticityTensor, Mat2, Vec2};

const ANGULAR_SAMPLES: usize = 360;
const MAX_HARMONIC: usize = 90;

#[derive(Debug, Clone)]
enum Kind {
    /// Closed-form plane-strain Kelvin matrix, `scale = 1/(8πμ(1−ν))`.
    Kelvin { scale: f64, log_coeff: f64 },
    /// Fourier series of `Φ` from `K(n)⁻¹` sampled on the unit circle.
    Fourier {
        cos: Vec<Mat2>,
        sin: Vec<Mat2>,
        constant: Mat2,
    },
}

#[derive(Debug, Clone)]
pub struct FundamentalSolution {
    tensor: ElasticityTensor,
    phi0: Mat2,
    kind: Kind,
}

impl FundamentalSolution {
    /// Closed form for isotropic tensors, angular Fourier expansion otherwise.
    pub fn new(c0: ElasticityTensor) -> Result<Self> {
        match c0.as_isotropic() {
            Some(iso) => Ok(Self::kelvin(c0, iso.lambda_lame, iso.mu_shear)),
            None => Self::fourier(c0),
        }
    }

    /// Forces the angular expansion even for isotropic tensors.
    pub fn fourier(c0: ElasticityTensor) -> Result<Self> {
        let margin = c0.strong_ellipticity_margin();
        if !(margin > 0.0) {
            return Err(Error::NotStronglyElliptic { margin });
        }
        let m = ANGULAR_SAMPLES;
        let g: Vec<Mat2> = (0..m)
            .map(|j| {
                let phi = TAU * j as f64 / m as f64;
                c0.acoustic(Vec2::polar(phi))
                    .inverse()
                    .expect("acoustic tensor invertible")
            })
            .collect();
        let mean = g.iter().fold(Mat2::ZERO, |a, &b| a + b) * (1.0 / m as f64);
        let mut cos = Vec::new();
        let mut sin = Vec::new();
        for k in 1..MAX_HARMONIC {
            let mut a = Mat2::ZERO;
            let mut b = Mat2::ZERO;
            for (j, gj) in g.iter().enumerate() {
                let arg = 2.0 * k as f64 * TAU * j as f64 / m as f64;
                a += *gj * arg.cos();
                b += *gj * arg.sin();
            }
            cos.push(a * (2.0 / m as f64));
            sin.push(b * (2.0 / m as f64));
        }
        // drop the tail once it is below round-off
        let scale = mean.norm();
        while let (Some(a), Some(b)) = (cos.last(), sin.last()) {
            if a.norm() + b.norm() < 1e-17 * scale {
                cos.pop();
                sin.pop();
            } else {
                break;
            }
        }
        let phi0 = mean * (-1.0 / TAU);
        let sign = |k: usize| if k.is_multiple_of(2) { 1.0 } else { -1.0 };
        let series: Vec<(Mat2, Mat2)> = cos
            .iter()
            .zip(&sin)
            .enumerate()
            .map(|(i, (a, b))| {
                let k = i + 1;
                let c = sign(k) / (2.0 * TAU * k as f64);
                (*a * c, *b * c)
            })
            .collect();
        Ok(Self {
            tensor: c0,
            phi0,
            kind: Kind::Fourier {
                cos: series.iter().map(|p| p.0).collect(),
                sin: series.iter().map(|p| p.1).collect(),
                constant: mean * (LN_2 / TAU),
            },
        })
    }

    fn kelvin(c0: ElasticityTensor, lambda: f64, mu: f64) -> Self {
        let nu = lambda / (2.0 * (lambda + mu));
        let scale = 1.0 / (8.0 * PI * mu * (1.0 - nu));
        let log_coeff = -(3.0 - 4.0 * nu) * scale;
        Self {
            tensor: c0,
            phi0: Mat2::IDENTITY * log_coeff,
            kind: Kind::Kelvin { scale, log_coeff },
        }
    }

    pub fn tensor(&self) -> ElasticityTensor {
        self.tensor
    }

    pub fn is_closed_form(&self) -> bool {
        matches!(self.kind, Kind::Kelvin { .. })
    }

    pub fn phi0(&self) -> Mat2 {
        self.phi0
    }

    /// Degree-zero part `Φ(d̂)` for a unit vector `d̂`.
    pub fn phi(&self, dir: Vec2) -> Mat2 {
        match &self.kind {
            Kind::Kelvin { scale, .. } => dir.outer(dir) * *scale,
            Kind::Fourier { cos, sin, constant } => {
                let theta = dir.y().atan2(dir.x());
                let mut out = *constant;
                for (i, (a, b)) in cos.iter().zip(sin).enumerate() {
                    let arg = 2.0 * (i + 1) as f64 * theta;
                    out += *a * arg.cos() + *b * arg.sin();
                }
                out
            }
        }
    }

    /// `dΦ/dθ` along the unit circle.
    fn phi_prime(&self, theta: f64) -> Mat2 {
        match &self.kind {
            Kind::Kelvin { scale, .. } => {
                let e = Vec2::polar(theta);
                let t = e.perp();
                (e.outer(t) + t.outer(e)) * *scale
            }
            Kind::Fourier { cos, sin, .. } => {
                let mut out = Mat2::ZERO;
                for (i, (a, b)) in cos.iter().zip(sin).enumerate() {
                    let k2 = 2.0 * (i + 1) as f64;
                    let arg = k2 * theta;
                    out += (*b * arg.cos() - *a * arg.sin()) * k2;
                }
                out
            }
        }
    }

    /// `𝒰(d)`.
    pub fn eval(&self, d: Vec2) -> Result<Mat2> {
        let r = d.norm();
        if r == 0.0 {
            return Err(Error::SingularPoint);
        }
        Ok(self.eval_unchecked(d, r))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, d: Vec2, r: f64) -> Mat2 {
        let dir = d * (1.0 / r);
        match &self.kind {
            Kind::Kelvin { scale, log_coeff } => {
                let lr = r.ln() * log_coeff;
                let o = dir.outer(dir) * *scale;
                Mat2::new(lr + o[(0, 0)], o[(0, 1)], o[(1, 0)], lr + o[(1, 1)])
            }
            Kind::Fourier { .. } => self.phi0 * r.ln() + self.phi(dir),
        }
    }

    /// `[∂₁𝒰, ∂₂𝒰]` at `d`.
    pub fn gradient(&self, d: Vec2) -> Result<[Mat2; 2]> {
        let r = d.norm();
        if r == 0.0 {
            return Err(Error::SingularPoint);
        }
        Ok(self.gradient_unchecked(d, r))
    }

    pub(crate) fn gradient_unchecked(&self, d: Vec2, r: f64) -> [Mat2; 2] {
        match &self.kind {
            Kind::Kelvin { scale, log_coeff } => {
                let r2 = r * r;
                let mut out = [Mat2::ZERO; 2];
                for (k, m) in out.iter_mut().enumerate() {
                    *m = Mat2::from_fn(|i, j| {
                        let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
                        let dlog = d[k] / r2;
                        let dout = (delta(i, k) * d[j] + delta(j, k) * d[i]) / r2
                            - 2.0 * d[i] * d[j] * d[k] / (r2 * r2);
                        log_coeff * dlog * delta(i, j) + scale * dout
                    });
                }
                out
            }
            Kind::Fourier { .. } => {
                let theta = d.y().atan2(d.x());
                let pp = self.phi_prime(theta);
                let et = Vec2::polar(theta).perp();
                let r2 = r * r;
                [
                    self.phi0 * (d[0] / r2) + pp * (et[0] / r),
                    self.phi0 * (d[1] / r2) + pp * (et[1] / r),
                ]
            }
        }
    }

    /// `∇(𝒰(d)e)` in the `(∇u)_ij = ∂_j u_i` convention.
    pub fn displacement_gradient(&self, d: Vec2, e: Vec2) -> Result<Mat2> {
        let g = self.gradient(d)?;
        Ok(Mat2::from_columns(g[0].apply(e), g[1].apply(e)))
    }
}
