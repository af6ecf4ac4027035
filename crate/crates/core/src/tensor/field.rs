//! Position-dependent elasticity.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::elasticity::ElasticityTensor;
use super::linalg::Vec2;
use crate::error::{Error, Result};

/// `x ↦ C(x)` together with declared global bounds `(μ₀, μₑ)`.
pub trait ElasticityField: Send + Sync {
    fn tensor_at(&self, x: Vec2) -> Result<ElasticityTensor>;

    /// Declared `(μ₀, μₑ)`; spot-checked by [`verify_bounds`], never clamped.
    fn bounds(&self) -> (f64, f64);

    /// Limit tensor `C₀` when the field is regular at infinity.
    fn limit(&self) -> Option<ElasticityTensor> {
        None
    }

    fn regular_at_infinity(&self) -> bool {
        self.limit().is_some()
    }
}

/// Samples the field at `points` and fails on the first point whose certified
/// bounds leave the declared interval.
pub fn verify_bounds(field: &dyn ElasticityField, points: &[Vec2]) -> Result<()> {
    let (d0, de) = field.bounds();
    let tol = 1e-10 * de.abs().max(1.0);
    for &x in points {
        let c = field.tensor_at(x)?;
        let (lo, hi) = c.sym_eigen_range();
        if lo < d0 - tol || hi > de + tol {
            return Err(Error::BoundsViolated {
                x: x.x(),
                y: x.y(),
                mu0: lo,
                mue: hi,
                declared_mu0: d0,
                declared_mue: de,
            });
        }
    }
    Ok(())
}

/// Sample points on a polar lattice `r ∈ [r_in, r_out]`, used for spot checks.
pub fn polar_sample_points(r_in: f64, r_out: f64, n_r: usize, n_theta: usize) -> Vec<Vec2> {
    let mut pts = Vec::with_capacity(n_r * n_theta);
    for i in 0..n_r {
        let t = if n_r > 1 {
            i as f64 / (n_r - 1) as f64
        } else {
            0.0
        };
        let r = r_in * (r_out / r_in).powf(t);
        for j in 0..n_theta {
            let th = 2.0 * std::f64::consts::PI * j as f64 / n_theta as f64;
            pts.push(Vec2::polar(th) * r);
        }
    }
    pts
}

#[derive(Debug, Clone)]
pub struct ConstantField {
    tensor: ElasticityTensor,
    bounds: (f64, f64),
}

impl ConstantField {
    pub fn new(tensor: ElasticityTensor) -> Result<Self> {
        let bounds = tensor.certify_bounds()?;
        Ok(Self { tensor, bounds })
    }

    pub fn tensor(&self) -> ElasticityTensor {
        self.tensor
    }
}

impl ElasticityField for ConstantField {
    fn tensor_at(&self, _x: Vec2) -> Result<ElasticityTensor> {
        Ok(self.tensor)
    }
    fn bounds(&self) -> (f64, f64) {
        self.bounds
    }
    fn limit(&self) -> Option<ElasticityTensor> {
        Some(self.tensor)
    }
}

/// `C(x) = (1 + δ·b(x)) C_base` with a smooth bump `b` supported in `|x − c| < ρ`.
#[derive(Debug, Clone)]
pub struct PerturbedField {
    base: ElasticityTensor,
    base_bounds: (f64, f64),
    delta: f64,
    center: Vec2,
    radius: f64,
}

impl PerturbedField {
    pub fn new(base: ElasticityTensor, delta: f64, center: Vec2, radius: f64) -> Result<Self> {
        if !(delta.abs() < 1.0) || !(radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "perturbation needs |δ| < 1 and ρ > 0, got δ = {delta}, ρ = {radius}"
            )));
        }
        let base_bounds = base.certify_bounds()?;
        Ok(Self {
            base,
            base_bounds,
            delta,
            center,
            radius,
        })
    }

    fn bump(&self, x: Vec2) -> f64 {
        let s = (x - self.center).norm_sq() / (self.radius * self.radius);
        if s >= 1.0 {
            0.0
        } else {
            (1.0 - 1.0 / (1.0 - s)).exp()
        }
    }
}

impl ElasticityField for PerturbedField {
    fn tensor_at(&self, x: Vec2) -> Result<ElasticityTensor> {
        let s = 1.0 + self.delta * self.bump(x);
        let mut v = self.base.voigt();
        v.iter_mut().flatten().for_each(|a| *a *= s);
        ElasticityTensor::from_voigt(v)
    }
    fn bounds(&self) -> (f64, f64) {
        // the bump takes values in [0, 1]
        let lo = 1.0 + self.delta.min(0.0);
        let hi = 1.0 + self.delta.max(0.0);
        (self.base_bounds.0 * lo, self.base_bounds.1 * hi)
    }
    fn limit(&self) -> Option<ElasticityTensor> {
        Some(self.base)
    }
}

/// Smooth scalar modulation `C(x) = m(x)·sym` with `m ∈ [μ₀, μₑ]`, built from a
/// handful of seeded Fourier modes in `(log r, θ)`.
#[derive(Debug, Clone)]
pub struct RandomSmoothField {
    mu0: f64,
    mue: f64,
    modes: Vec<(f64, f64, f64, f64)>,
}

impl RandomSmoothField {
    pub fn new(mu0: f64, mue: f64, seed: u64) -> Result<Self> {
        if !(mu0 > 0.0) || !(mue >= mu0) {
            return Err(Error::InvalidBounds {
                lower: mu0,
                upper: mue,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let modes = (0..6)
            .map(|_| {
                let kr = rng.random_range(0.2..1.5);
                let kt = rng.random_range(0..4) as f64;
                let phase = rng.random_range(0.0..std::f64::consts::TAU);
                let amp = rng.random_range(0.2..1.0);
                (kr, kt, phase, amp)
            })
            .collect();
        Ok(Self { mu0, mue, modes })
    }

    pub fn modulus(&self, x: Vec2) -> f64 {
        let lr = x.norm().max(1e-300).ln();
        let th = x.y().atan2(x.x());
        let total: f64 = self.modes.iter().map(|m| m.3).sum();
        let s: f64 = self
            .modes
            .iter()
            .map(|&(kr, kt, ph, a)| a * (kr * lr + kt * th + ph).cos())
            .sum();
        let sigma = s / total;
        0.5 * (self.mu0 + self.mue) + 0.5 * (self.mue - self.mu0) * sigma
    }
}

impl ElasticityField for RandomSmoothField {
    fn tensor_at(&self, x: Vec2) -> Result<ElasticityTensor> {
        Ok(ElasticityTensor::scaled_identity(self.modulus(x)))
    }
    fn bounds(&self) -> (f64, f64) {
        (self.mu0, self.mue)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_field_reports_its_bounds() {
        let f = ConstantField::new(ElasticityTensor::isotropic(1.0, 1.0)).unwrap();
        let (lo, hi) = f.bounds();
        assert!((lo - 2.0).abs() < 1e-13 && (hi - 4.0).abs() < 1e-13);
        verify_bounds(&f, &polar_sample_points(1.0, 10.0, 5, 8)).unwrap();
    }

    #[test]
    fn perturbed_field_tends_to_its_limit() {
        let base = ElasticityTensor::isotropic(1.0, 1.0);
        let f = PerturbedField::new(base, 0.3, Vec2::new(2.0, 0.0), 1.5).unwrap();
        verify_bounds(&f, &polar_sample_points(1.0, 8.0, 40, 64)).unwrap();
        for r in [4.0, 10.0, 100.0] {
            for k in 0..8 {
                let x = Vec2::polar(k as f64 * 0.785) * r;
                assert!(f.tensor_at(x).unwrap().distance(&base) < 1e-14);
            }
        }
        let (lo, hi) = f.bounds();
        assert!((lo - 2.0).abs() < 1e-13 && (hi - 4.0 * 1.3).abs() < 1e-13);
    }

    #[test]
    fn random_field_respects_declared_bounds() {
        let f = RandomSmoothField::new(1.0, 1.2, 11).unwrap();
        verify_bounds(&f, &polar_sample_points(1.0, 64.0, 50, 90)).unwrap();
    }

    #[test]
    fn violation_is_reported_not_clamped() {
        struct Liar;
        impl ElasticityField for Liar {
            fn tensor_at(&self, _x: Vec2) -> Result<ElasticityTensor> {
                Ok(ElasticityTensor::isotropic(1.0, 1.0))
            }
            fn bounds(&self) -> (f64, f64) {
                (2.0, 3.0)
            }
        }
        assert!(matches!(
            verify_bounds(&Liar, &[Vec2::E1]),
            Err(Error::BoundsViolated { .. })
        ));
    }
}
