//! Discrete checks of the Wirtinger, Hardy and first Korn inequalities.

use std::f64::consts::TAU;
use std::sync::Arc;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::annulus::{DiscreteField, PolarGrid};
use crate::error::{Error, Result};
use crate::quad::gauss_on;
use crate::tensor::Vec2;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct InequalityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

impl InequalityReport {
    pub fn ratio(&self) -> f64 {
        if self.rhs > 0.0 {
            self.lhs / self.rhs
        } else if self.lhs > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    }
}

/// Fourier coefficients `ĉ_k = (1/n) Σ u_j e^{−ikθ_j}` per component, with
/// the symmetric wavenumber of each bin.
fn spectrum(samples: &[Vec2]) -> Vec<(f64, [Complex64; 2])> {
    let n = samples.len();
    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut out: Vec<(f64, [Complex64; 2])> = (0..n)
        .map(|k| {
            let kk = if k <= n / 2 {
                k as f64
            } else {
                k as f64 - n as f64
            };
            (kk, [Complex64::ZERO; 2])
        })
        .collect();
    for c in 0..2 {
        let mut buf: Vec<Complex64> = samples.iter().map(|v| Complex64::new(v[c], 0.0)).collect();
        fft.process(&mut buf);
        for (o, b) in out.iter_mut().zip(buf) {
            o.1[c] = b / n as f64;
        }
    }
    out
}

/// `∫|u − mean|² ds ≤ R² ∫|∂u/∂s|² ds` on the circle of radius `R`, both
/// sides from the trigonometric interpolant of the samples.
pub fn wirtinger_check(samples: &[Vec2], radius: f64) -> Result<InequalityReport> {
    if samples.len() < 16 {
        return Err(Error::InvalidParameter(format!(
            "need at least 16 samples, got {}",
            samples.len()
        )));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "radius must be positive, got {radius}"
        )));
    }
    let (mut lhs, mut rhs) = (0.0, 0.0);
    for (k, c) in spectrum(samples) {
        let e = c[0].norm_sqr() + c[1].norm_sqr();
        if k != 0.0 {
            lhs += e;
        }
        rhs += k * k * e;
    }
    let lhs = radius * TAU * lhs;
    let rhs = radius * TAU * rhs;
    Ok(InequalityReport {
        lhs,
        rhs,
        ok: lhs <= rhs * (1.0 + 1e-10),
    })
}

/// Samples `u(r_i)` on a geometric grid over `[1, R_max]` with exponent `q`.
#[derive(Debug, Clone, Serialize)]
pub struct RadialProfile {
    pub radii: Vec<f64>,
    pub values: Vec<Vec2>,
    pub q: f64,
}

impl RadialProfile {
    pub fn new(radii: Vec<f64>, values: Vec<Vec2>, q: f64) -> Result<Self> {
        if radii.len() != values.len() {
            return Err(Error::NodeCountMismatch {
                expected: radii.len(),
                got: values.len(),
            });
        }
        if radii.len() < 2 || radii.windows(2).any(|w| !(w[1] > w[0])) || !(radii[0] > 0.0) {
            return Err(Error::InvalidParameter(
                "radii must be positive and strictly increasing".into(),
            ));
        }
        if !(q > 1.0) || q == 2.0 || !q.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "q must lie in (1, 2) or (2, ∞), got {q}"
            )));
        }
        Ok(Self { radii, values, q })
    }

    pub fn sample(r_max: f64, n: usize, q: f64, u: impl Fn(f64) -> Vec2) -> Result<Self> {
        let g = r_max.powf(1.0 / (n.max(2) - 1) as f64);
        let radii: Vec<f64> = (0..n).map(|i| g.powi(i as i32)).collect();
        let values = radii.iter().map(|&r| u(r)).collect();
        Self::new(radii, values, q)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct HardyReport {
    /// `∫ |u − a|^q / r^q` over the annulus.
    pub lhs: f64,
    /// Bound the left side must satisfy.
    pub rhs: f64,
    /// `∫ |∇u|^q`.
    pub gradient_term: f64,
    /// Sharp radial constant `(q/|2−q|)^q`.
    pub constant: f64,
    /// `2π |u(R_max) − a|^q R^{2−q}/(2−q)` for `q < 2`, else 0.
    pub boundary_term: f64,
    /// Anchor `a`: `u₀` for `q < 2`, the inner value `u(1)` for `q > 2`.
    pub anchor: Vec2,
    pub ok: bool,
}

/// Radial Hardy inequality for the piecewise-linear interpolant of the
/// profile, integrated with area weight `2πr dr`.
///
/// For `q < 2` the truncated form `L ≤ B + k L^{1−1/q} D^{1/q}`, `k = q/(2−q)`,
/// is checked; it reduces to `L ≤ k^q D` when the profile reaches `u₀` at
/// `R_max`. For `q > 2` the profile is anchored at its inner value and
/// `L ≤ (q/(q−2))^q D` holds with no boundary term.
pub fn hardy_check(profile: &RadialProfile, u0: Vec2) -> Result<HardyReport> {
    let q = profile.q;
    let (r, v) = (&profile.radii, &profile.values);
    let n = r.len();
    let anchor = if q < 2.0 { u0 } else { v[0] };
    if q < 2.0 {
        let mid = n / 2;
        if (v[n - 1] - u0).norm() > (v[mid] - u0).norm() * (1.0 + 1e-12) + 1e-300 {
            return Err(Error::NonDecayingProfile);
        }
    }
    let (mut lhs, mut grad) = (0.0, 0.0);
    for k in 0..n - 1 {
        let slope = (v[k + 1] - v[k]) * (1.0 / (r[k + 1] - r[k]));
        let sq = slope.norm().powf(q);
        for (x, w) in gauss_on(8, r[k], r[k + 1]) {
            let t = (x - r[k]) / (r[k + 1] - r[k]);
            let w_val = (v[k] * (1.0 - t) + v[k + 1] * t - anchor).norm();
            lhs += w * w_val.powf(q) * x.powf(1.0 - q);
            grad += w * sq * x;
        }
    }
    lhs *= TAU;
    grad *= TAU;
    let k = q / (2.0 - q).abs();
    let constant = k.powf(q);
    let (rhs, boundary_term) = if q < 2.0 {
        let a = 2.0 - q;
        let b = TAU * (v[n - 1] - anchor).norm().powf(q) * r[n - 1].powf(a) / a;
        (b + k * lhs.powf(1.0 - 1.0 / q) * grad.powf(1.0 / q), b)
    } else {
        (constant * grad, 0.0)
    };
    Ok(HardyReport {
        lhs,
        rhs,
        gradient_term: grad,
        constant,
        boundary_term,
        anchor,
        ok: lhs <= rhs * (1.0 + 1e-10) + 1e-300,
    })
}

/// `∫|∇u|² ≤ 2∫|∇̂u|²` for a field vanishing on both rings of its grid.
pub fn korn_first_check(u: &DiscreteField) -> Result<InequalityReport> {
    let g = u.grid();
    let scale = u.max_abs();
    let boundary = u
        .ring(0)
        .iter()
        .chain(u.ring(g.n_r() - 1))
        .map(|v| v.norm())
        .fold(0.0, f64::max);
    if boundary > 1e-14 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::BoundaryNotZero { max_abs: boundary });
    }
    let lhs = u.integrate(1.0, g.r_max(), 4, |p| p.weight * p.grad.norm_sq());
    let rhs = 2.0 * u.integrate(1.0, g.r_max(), 4, |p| p.weight * p.grad.sym().norm_sq());
    Ok(InequalityReport {
        lhs,
        rhs,
        ok: lhs <= rhs * (1.0 + 1e-8),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialSummary {
    pub trials: usize,
    pub passed: usize,
    /// Largest observed `lhs/rhs`.
    pub worst_ratio: f64,
    /// Offending inputs, serialized for triage.
    pub failures: Vec<serde_json::Value>,
}

impl TrialSummary {
    fn new() -> Self {
        Self {
            trials: 0,
            passed: 0,
            worst_ratio: 0.0,
            failures: Vec::new(),
        }
    }

    fn record(&mut self, ok: bool, ratio: f64, dump: impl FnOnce() -> serde_json::Value) {
        self.trials += 1;
        if ok {
            self.passed += 1;
        } else {
            self.failures.push(dump());
        }
        if ratio.is_finite() {
            self.worst_ratio = self.worst_ratio.max(ratio);
        }
    }

    pub fn all_passed(&self) -> bool {
        self.passed == self.trials
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GymReport {
    pub seed: u64,
    pub wirtinger: TrialSummary,
    /// Largest `|lhs/rhs − 1|` over first-harmonic fields.
    pub wirtinger_equality_defect: f64,
    /// Largest ratio over fields orthogonal to the first harmonics.
    pub wirtinger_off_harmonic_ratio: f64,
    pub hardy_below_two: TrialSummary,
    pub hardy_above_two: TrialSummary,
    pub korn_first: TrialSummary,
}

impl GymReport {
    pub fn all_passed(&self) -> bool {
        self.wirtinger.all_passed()
            && self.hardy_below_two.all_passed()
            && self.hardy_above_two.all_passed()
            && self.korn_first.all_passed()
            && self.wirtinger_equality_defect <= 1e-10
            && self.wirtinger_off_harmonic_ratio < 1.0 - 1e-3
    }
}

fn random_vec(rng: &mut ChaCha8Rng) -> Vec2 {
    Vec2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// Samples of `Σ a_k cos kθ + b_k sin kθ` over `k ∈ modes`.
fn trig_samples(rng: &mut ChaCha8Rng, n: usize, modes: &[usize]) -> Vec<Vec2> {
    let coeffs: Vec<(usize, Vec2, Vec2)> = modes
        .iter()
        .map(|&k| (k, random_vec(rng), random_vec(rng)))
        .collect();
    (0..n)
        .map(|j| {
            let th = TAU * j as f64 / n as f64;
            coeffs.iter().fold(Vec2::ZERO, |s, (k, a, b)| {
                let (sn, cs) = (*k as f64 * th).sin_cos();
                s + *a * cs + *b * sn
            })
        })
        .collect()
}

/// Runs `trials` randomized instances of every check.
pub fn run_gym(trials: usize, seed: u64) -> Result<GymReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut wirtinger = TrialSummary::new();
    let mut equality_defect = 0.0f64;
    let mut off_ratio = 0.0f64;
    for _ in 0..trials {
        let n = 2 * rng.random_range(8..=64usize);
        let radius = rng.random_range(0.5..50.0);
        let samples: Vec<Vec2> = (0..n).map(|_| random_vec(&mut rng) * 3.0).collect();
        let rep = wirtinger_check(&samples, radius)?;
        wirtinger.record(
            rep.ok,
            rep.ratio(),
            || serde_json::json!({ "radius": radius, "samples": samples }),
        );

        let first = wirtinger_check(&trig_samples(&mut rng, n, &[0, 1]), radius)?;
        equality_defect = equality_defect.max((first.ratio() - 1.0).abs());
        let higher: Vec<usize> = (2..=n / 2).filter(|_| rng.random_bool(0.5)).collect();
        let modes = if higher.is_empty() { vec![2] } else { higher };
        let off = wirtinger_check(&trig_samples(&mut rng, n, &modes), radius)?;
        off_ratio = off_ratio.max(off.ratio());
    }

    let mut below = TrialSummary::new();
    let mut above = TrialSummary::new();
    for t in 0..trials {
        let terms: Vec<(Vec2, f64)> = (0..rng.random_range(1..4))
            .map(|_| (random_vec(&mut rng), rng.random_range(0.1..2.0)))
            .collect();
        let u0 = random_vec(&mut rng);
        let r_max = rng.random_range(8.0..200.0);
        let n = rng.random_range(64..256);
        let u = |r: f64| terms.iter().fold(u0, |s, (a, p)| s + *a * r.powf(-*p));
        let (q, summary) = if t % 2 == 0 {
            (rng.random_range(1.05..1.95), &mut below)
        } else {
            (rng.random_range(2.05..4.0), &mut above)
        };
        // a mixed-sign sum can grow again in the tail; retry with a single term
        let profile = RadialProfile::sample(r_max, n, q, u)?;
        let profile = match hardy_check(&profile, u0) {
            Err(Error::NonDecayingProfile) => {
                let (a, p) = terms[0];
                RadialProfile::sample(r_max, n, q, |r| u0 + a * r.powf(-p))?
            }
            _ => profile,
        };
        let rep = hardy_check(&profile, u0)?;
        summary.record(
            rep.ok,
            rep.lhs / rep.rhs,
            || serde_json::json!({ "u0": u0, "profile": profile }),
        );
    }

    let mut korn = TrialSummary::new();
    let grid = Arc::new(PolarGrid::new(4.0, 16, 32)?);
    for t in 0..trials {
        let field = if t % 5 == 4 {
            // tapered rotation: nearly skew gradient
            let w = rng.random_range(0.5..2.0);
            DiscreteField::sample(grid.clone(), |x| {
                let r = x.norm();
                x.perp() * (w * (r - 1.0) * (4.0 - r))
            })?
        } else {
            let bumps: Vec<(Vec2, Vec2, f64)> = (0..rng.random_range(1..5))
                .map(|_| {
                    let c = Vec2::polar(rng.random_range(0.0..TAU)) * rng.random_range(1.5..3.5);
                    (c, random_vec(&mut rng), rng.random_range(0.4..1.5))
                })
                .collect();
            DiscreteField::sample(grid.clone(), |x| {
                bumps.iter().fold(Vec2::ZERO, |s, (c, a, rho)| {
                    let d = (x - *c).norm() / rho;
                    s + *a * if d < 1.0 { (1.0 - d * d).powi(2) } else { 0.0 }
                })
            })?
        };
        let nt = grid.n_theta();
        let last = grid.n_r() - 1;
        let values: Vec<Vec2> = field
            .values()
            .iter()
            .enumerate()
            .map(|(k, v)| {
                if k / nt == 0 || k / nt == last {
                    Vec2::ZERO
                } else {
                    *v
                }
            })
            .collect();
        let field = DiscreteField::new(grid.clone(), values)?;
        let rep = korn_first_check(&field)?;
        korn.record(
            rep.ok,
            rep.ratio(),
            || serde_json::json!({ "values": field.values() }),
        );
    }

    Ok(GymReport {
        seed,
        wirtinger,
        wirtinger_equality_defect: equality_defect,
        wirtinger_off_harmonic_ratio: off_ratio,
        hardy_below_two: below,
        hardy_above_two: above,
        korn_first: korn,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(n: usize, f: impl Fn(f64) -> Vec2) -> Vec<Vec2> {
        (0..n).map(|j| f(TAU * j as f64 / n as f64)).collect()
    }

    #[test]
    fn wirtinger_examples() {
        let r = wirtinger_check(&circle(64, |t| Vec2::new(t.sin(), 0.0)), 1.0).unwrap();
        assert!(
            (r.lhs - std::f64::consts::PI).abs() < 1e-12
                && (r.rhs - std::f64::consts::PI).abs() < 1e-12
        );
        let r = wirtinger_check(&circle(64, |t| Vec2::new((2.0 * t).sin(), 0.0)), 1.0).unwrap();
        assert!(
            (r.lhs - std::f64::consts::PI).abs() < 1e-12
                && (r.rhs - 4.0 * std::f64::consts::PI).abs() < 1e-12
        );
        let r = wirtinger_check(&circle(16, |_| Vec2::new(2.0, 1.0)), 3.0).unwrap();
        assert!(r.lhs.abs() < 1e-28 && r.rhs.abs() < 1e-28 && r.ok);
        // alternating samples: the Nyquist mode still satisfies the bound
        let r = wirtinger_check(&circle(16, |t| Vec2::new((8.0 * t).cos(), 0.0)), 1.0).unwrap();
        assert!(r.ok && (r.ratio() - 1.0 / 64.0).abs() < 1e-12);
        assert!(wirtinger_check(&circle(8, |t| Vec2::new(t, 0.0)), 1.0).is_err());
    }

    #[test]
    fn hardy_examples() {
        let p = RadialProfile::sample(50.0, 64, 1.5, |_| Vec2::new(1.0, 2.0)).unwrap();
        let r = hardy_check(&p, Vec2::new(1.0, 2.0)).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(r.ok);
        let p = RadialProfile::sample(1e4, 512, 1.5, |r| Vec2::new(r.powf(-0.5), 0.0)).unwrap();
        let r = hardy_check(&p, Vec2::ZERO).unwrap();
        // 1-D oracle: ∫₁^R r^{−3/4} r^{−1/2} dr and ∫₁^R (r^{−3/2}/2)^{3/2} r dr
        let big_r: f64 = 1e4;
        let lhs = TAU * 4.0 * (1.0 - big_r.powf(-0.25));
        let grad = TAU * 0.5f64.powf(1.5) * 4.0 * (1.0 - big_r.powf(-0.25));
        assert!((r.lhs - lhs).abs() < 1e-3 * lhs, "{} vs {lhs}", r.lhs);
        assert!(
            (r.gradient_term - grad).abs() < 1e-2 * grad,
            "{} vs {grad}",
            r.gradient_term
        );
        assert!(r.ok);
        let p = RadialProfile::sample(50.0, 64, 1.5, |r| Vec2::new(r, 0.0)).unwrap();
        assert!(matches!(
            hardy_check(&p, Vec2::ZERO),
            Err(Error::NonDecayingProfile)
        ));
        let p = RadialProfile::sample(1e3, 256, 2.5, |r| Vec2::new(r.ln(), 1.0)).unwrap();
        let r = hardy_check(&p, Vec2::ZERO).unwrap();
        assert!(r.ok && r.lhs.is_finite() && r.anchor == Vec2::new(0.0, 1.0));
        assert!(RadialProfile::sample(10.0, 8, 2.0, |_| Vec2::ZERO).is_err());
    }

    #[test]
    fn korn_examples() {
        let g = Arc::new(PolarGrid::new(4.0, 24, 48).unwrap());
        // gradient of a scalar bump: symmetric gradient
        let phi_grad = |x: Vec2| {
            let r = x.norm();
            let s = (r - 1.0) * (4.0 - r);
            let ds = 5.0 - 2.0 * r;
            x * (2.0 * s * ds / r)
        };
        let f = DiscreteField::sample(g.clone(), phi_grad).unwrap();
        let rep = korn_first_check(&f).unwrap();
        assert!(rep.ok && rep.ratio() < 0.6);
        let f = DiscreteField::sample(g.clone(), |x| x).unwrap();
        assert!(matches!(
            korn_first_check(&f),
            Err(Error::BoundaryNotZero { .. })
        ));
    }

    #[test]
    fn randomized_sweep() {
        let rep = run_gym(200, 1).unwrap();
        assert!(
            rep.all_passed(),
            "{:?}",
            (
                rep.wirtinger_equality_defect,
                rep.wirtinger_off_harmonic_ratio
            )
        );
        assert!(rep.korn_first.worst_ratio > 0.9);
    }
}
