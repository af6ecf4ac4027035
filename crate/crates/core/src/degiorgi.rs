//! Radial counter-example `C̃[L] = sym L + 4ξ⁻²(e_r⊗e_r)(e_r·L e_r)` with the
//! exact solutions `u′ = (c₁ r^ε + c₂ r^{−ε}) e_r`, `ε = |ξ|/√(4+ξ²)`.

use std::f64::consts::{SQRT_2, TAU};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::gauss_on;
use crate::tensor::{ElasticityField, ElasticityTensor, Mat2, Vec2};

pub fn epsilon(xi: f64) -> f64 {
    xi.abs() / (4.0 + xi * xi).sqrt()
}

/// `q` above which the boundary-vanishing branch has finite `D^{1,q}` seminorm.
pub fn integrability_threshold(xi: f64) -> f64 {
    2.0 / (1.0 - epsilon(xi))
}

fn check_xi(xi: f64) -> Result<()> {
    if xi == 0.0 || !xi.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "ξ must be finite and nonzero, got {xi}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
pub struct DeGiorgiField {
    xi: f64,
    stiffening: f64,
}

impl DeGiorgiField {
    pub fn new(xi: f64) -> Result<Self> {
        check_xi(xi)?;
        Ok(Self {
            xi,
            stiffening: 4.0 / (xi * xi),
        })
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    /// Tensor for the radial direction `e_r = (c, s)`: in Voigt form it is
    /// `I + a·v vᵀ` with `v = (c², s², √2 cs)`.
    pub fn tensor_for_direction(&self, er: Vec2) -> ElasticityTensor {
        let (c, s) = (er.x(), er.y());
        let v = [c * c, s * s, SQRT_2 * c * s];
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = self.stiffening * v[i] * v[j] + if i == j { 1.0 } else { 0.0 };
            }
        }
        ElasticityTensor::from_voigt(m).expect("symmetric by construction")
    }
}

impl ElasticityField for DeGiorgiField {
    fn tensor_at(&self, x: Vec2) -> Result<ElasticityTensor> {
        let r = x.norm();
        if r == 0.0 {
            return Err(Error::OriginSingular);
        }
        Ok(self.tensor_for_direction(x * (1.0 / r)))
    }

    fn bounds(&self) -> (f64, f64) {
        (1.0, 1.0 + self.stiffening)
    }
}

pub fn degiorgi_tensor(xi: f64) -> Result<DeGiorgiField> {
    DeGiorgiField::new(xi)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CounterexampleParams {
    pub xi: f64,
    pub c1: f64,
    pub c2: f64,
}

impl CounterexampleParams {
    pub fn new(xi: f64, c1: f64, c2: f64) -> Result<Self> {
        check_xi(xi)?;
        Ok(Self { xi, c1, c2 })
    }

    pub fn epsilon(&self) -> f64 {
        epsilon(self.xi)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ClosedFormSolution {
    pub params: CounterexampleParams,
    eps: f64,
}

pub fn closed_form(params: CounterexampleParams) -> ClosedFormSolution {
    ClosedFormSolution {
        params,
        eps: params.epsilon(),
    }
}

impl ClosedFormSolution {
    /// Radial profile `f(r)` and `f′(r)`.
    pub fn profile(&self, r: f64) -> (f64, f64) {
        let (c1, c2, e) = (self.params.c1, self.params.c2, self.eps);
        let (p, m) = (r.powf(e), r.powf(-e));
        (c1 * p + c2 * m, e * (c1 * p - c2 * m) / r)
    }

    pub fn value(&self, x: Vec2) -> Vec2 {
        let r = x.norm();
        if r == 0.0 {
            return Vec2::ZERO;
        }
        x * (self.profile(r).0 / r)
    }

    /// `∇u′ = f′ e_r⊗e_r + (f/r) e_θ⊗e_θ`.
    pub fn gradient(&self, x: Vec2) -> Mat2 {
        let r = x.norm();
        let er = x * (1.0 / r);
        let et = er.perp();
        let (f, fp) = self.profile(r);
        er.outer(er) * fp + et.outer(et) * (f / r)
    }

    /// `|∇u′|` as a function of `r` only.
    pub fn gradient_norm(&self, r: f64) -> f64 {
        let (f, fp) = self.profile(r);
        (fp * fp + (f / r).powi(2)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TailVerdict {
    Convergent,
    Divergent,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct TailReport {
    pub q: f64,
    pub threshold: f64,
    pub verdict: TailVerdict,
    /// `∫|∇u′|^q` over the dyadic shells `2^k < r < 2^{k+1}`.
    pub increments: Vec<f64>,
    /// Last over first increment across the second half of the shells.
    pub tail_ratio: f64,
}

/// Classifies `∫_{1<r<R}|∇u′|^q` as `R → ∞` from dyadic increments up to `r_max`.
///
/// The verdict looks at the second half of the shells, where the leading power
/// `R^{q(ε−1)+2}` dominates: growth by more than 10% means divergence, decay
/// by more than 10% means convergence, anything flatter is inconclusive.
pub fn q_tail_classify(params: CounterexampleParams, q: f64, r_max: f64) -> Result<TailReport> {
    if !(q > 1.0) {
        return Err(Error::InvalidParameter(format!("q must exceed 1, got {q}")));
    }
    if !(r_max >= 2f64.powi(8)) {
        return Err(Error::InvalidParameter(format!(
            "r_max must be at least 2^8, got {r_max}"
        )));
    }
    let sol = closed_form(params);
    let shells = r_max.log2().floor() as usize;
    let increments: Vec<f64> = (0..shells)
        .map(|k| {
            // substitute r = e^s so the shell is smooth in s
            let (a, b) = (
                (k as f64) * std::f64::consts::LN_2,
                ((k + 1) as f64) * std::f64::consts::LN_2,
            );
            gauss_on(16, a, b)
                .iter()
                .map(|&(s, w)| {
                    let r = s.exp();
                    w * sol.gradient_norm(r).powf(q) * TAU * r * r
                })
                .sum()
        })
        .collect();
    let first = increments[shells / 2];
    let last = increments[shells - 1];
    let tail_ratio = last / first;
    let verdict = if tail_ratio > 1.1 {
        TailVerdict::Divergent
    } else if tail_ratio < 1.0 / 1.1 {
        TailVerdict::Convergent
    } else {
        TailVerdict::Inconclusive
    };
    Ok(TailReport {
        q,
        threshold: integrability_threshold(params.xi),
        verdict,
        increments,
        tail_ratio,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct NotInMReport {
    /// `max |u′|` on the unit circle.
    pub boundary_trace: f64,
    pub radii: Vec<f64>,
    /// `|u′(r e₁)| / log r` at `radii`.
    pub log_ratios: Vec<f64>,
    pub grows_faster_than_log: bool,
}

pub fn not_in_m_certificate(params: CounterexampleParams) -> NotInMReport {
    let sol = closed_form(params);
    let boundary_trace = (0..360)
        .map(|j| sol.value(Vec2::polar(TAU * j as f64 / 360.0)).norm())
        .fold(0.0, f64::max);
    let radii = vec![1e2, 1e4, 1e6];
    let log_ratios: Vec<f64> = radii
        .iter()
        .map(|&r| sol.value(Vec2::E1 * r).norm() / f64::ln(r))
        .collect();
    let grows_faster_than_log = log_ratios.windows(2).all(|w| w[1] > w[0]);
    NotInMReport {
        boundary_trace,
        radii,
        log_ratios,
        grows_faster_than_log,
    }
}
