//! Energy growth, Caccioppoli, energy identity, net traction and decay fits
//! for fields on the polar grid.

use serde::Serialize;

use super::fem::AnnulusSolution;
use super::grid::{DiscreteField, FieldPoint};
use crate::error::{Error, Result};
use crate::tensor::{Mat2, Vec2};

/// Gauss order used for the nested-disk quadratures; high enough that clipped
/// and unclipped cells agree to round-off.
const PROFILE_GAUSS: usize = 5;

fn growth_density(p: &FieldPoint) -> f64 {
    p.weight * (p.grad.norm_sq() + p.grad.trace().powi(2))
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyProfile {
    pub radii: Vec<f64>,
    /// `G(R) = ∫_{1<r<R} |∇u|² + |div u|²`.
    pub g: Vec<f64>,
    /// Same integrand over `R < r < R_max`.
    pub q: Vec<f64>,
    pub total: f64,
}

impl EnergyProfile {
    /// `max |G + Q − total| / total`.
    pub fn partition_defect(&self) -> f64 {
        if self.total == 0.0 {
            return 0.0;
        }
        self.g
            .iter()
            .zip(&self.q)
            .map(|(g, q)| (g + q - self.total).abs())
            .fold(0.0, f64::max)
            / self.total
    }
}

pub fn energy_profiles(u: &DiscreteField, radii: &[f64]) -> Result<EnergyProfile> {
    let grid = u.grid();
    for &r in radii {
        grid.check_radius(r)?;
    }
    let r_max = grid.r_max();
    let total = u.integrate(1.0, r_max, PROFILE_GAUSS, growth_density);
    let g = radii
        .iter()
        .map(|&r| u.integrate(1.0, r, PROFILE_GAUSS, growth_density))
        .collect();
    let q = radii
        .iter()
        .map(|&r| u.integrate(r, r_max, PROFILE_GAUSS, growth_density))
        .collect();
    Ok(EnergyProfile {
        radii: radii.to_vec(),
        g,
        q,
        total,
    })
}

/// `2^{k/4}` from `r_lo` while `≤ r_hi`.
pub fn quarter_dyadic_radii(r_lo: f64, r_hi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut k = 0;
    loop {
        let r = r_lo * 2f64.powf(k as f64 / 4.0);
        if r > r_hi * (1.0 + 1e-12) {
            break;
        }
        out.push(r);
        k += 1;
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    pub gamma: f64,
    pub radii: Vec<f64>,
    /// `G(R)/R^γ`.
    pub g_scaled: Vec<f64>,
    /// `R^γ Q(R)`.
    pub q_scaled: Vec<f64>,
    /// Largest relative drop of `G/R^γ` between consecutive radii.
    pub g_violation: f64,
    /// Largest relative rise of `R^γ Q`.
    pub q_violation: f64,
    /// Zero field: monotonicity is vacuous.
    pub degenerate: bool,
}

impl GrowthReport {
    pub fn g_monotone(&self, tol: f64) -> bool {
        self.degenerate || self.g_violation <= tol
    }

    pub fn q_monotone(&self, tol: f64) -> bool {
        self.degenerate || self.q_violation <= tol
    }
}

pub fn growth_monotonicity_check(profile: &EnergyProfile, gamma: f64) -> GrowthReport {
    let g_scaled: Vec<f64> = profile
        .radii
        .iter()
        .zip(&profile.g)
        .map(|(r, g)| g / r.powf(gamma))
        .collect();
    let q_scaled: Vec<f64> = profile
        .radii
        .iter()
        .zip(&profile.q)
        .map(|(r, q)| q * r.powf(gamma))
        .collect();
    let mut g_violation = 0.0f64;
    let mut q_violation = 0.0f64;
    for k in 1..g_scaled.len() {
        if g_scaled[k - 1] > 0.0 {
            g_violation = g_violation.max((g_scaled[k - 1] - g_scaled[k]) / g_scaled[k - 1]);
        }
        if q_scaled[k - 1] > 0.0 {
            q_violation = q_violation.max((q_scaled[k] - q_scaled[k - 1]) / q_scaled[k - 1]);
        } else if q_scaled[k] > 0.0 {
            q_violation = f64::INFINITY;
        }
    }
    GrowthReport {
        gamma,
        radii: profile.radii.clone(),
        g_scaled,
        q_scaled,
        g_violation,
        q_violation,
        degenerate: profile.total == 0.0,
    }
}

/// Value and recovered gradient on the circle `|x| = R` at the grid angles,
/// linearly interpolated in `r`.
fn circle_trace(u: &DiscreteField, grads: &[Mat2], radius: f64) -> Result<Vec<(Vec2, Mat2)>> {
    let grid = u.grid();
    let (i, a) = grid.locate_radius(radius)?;
    let nt = grid.n_theta();
    Ok((0..nt)
        .map(|j| {
            let (p, q) = (grid.node(i, j), grid.node(i + 1, j));
            let v = u.values()[p] * (1.0 - a) + u.values()[q] * a;
            let g = grads[p] * (1.0 - a) + grads[q] * a;
            (v, g)
        })
        .collect())
}

/// `∫_{|x|=1} n·[∇u − (div u)1]u` with `n = −e_r`.
fn inner_korn_term(u: &DiscreteField, grads: &[Mat2]) -> f64 {
    let grid = u.grid();
    let nt = grid.n_theta();
    let mut s = 0.0;
    for j in 0..nt {
        let n = -Vec2::polar(grid.theta(j));
        let g = grads[grid.node(0, j)];
        let v = u.at(0, j);
        s += n.dot(g * v) - g.trace() * n.dot(v);
    }
    s * grid.h_theta()
}

#[derive(Debug, Clone, Serialize)]
pub struct CaccioppoliReport {
    pub radius: f64,
    /// `∫_{Ω_R} |∇u|²`.
    pub lhs: f64,
    /// `R⁻² ∫_{T_R} |u|²`.
    pub tail: f64,
    pub sigma: f64,
    pub ratio: Option<f64>,
    pub degenerate: bool,
}

/// `2∫∂Ω u·s(u) − μ₀∫∂Ω n·[∇u − (div u)1]u + 2∫ f·u`, normal into the hole.
pub fn sigma_functional(sol: &AnnulusSolution) -> f64 {
    let u = &sol.field;
    let grads = u.recovered_gradients();
    let work: f64 = sol
        .inner_reactions
        .iter()
        .zip(u.ring(0))
        .map(|(r, v)| r.dot(*v))
        .sum();
    let mu0 = sol.problem.bounds().0;
    let force = match &sol.problem.force {
        Some(f) => u.integrate(1.0, u.grid().r_max(), 3, |p| p.weight * f(p.x).dot(p.u)),
        None => 0.0,
    };
    2.0 * work - mu0 * inner_korn_term(u, &grads) + 2.0 * force
}

pub fn caccioppoli_check(sol: &AnnulusSolution, radius: f64) -> Result<CaccioppoliReport> {
    let u = &sol.field;
    let grid = u.grid();
    grid.check_radius(radius)?;
    grid.check_radius(2.0 * radius)?;
    let lhs = u.integrate(1.0, radius, 3, |p| p.weight * p.grad.norm_sq());
    let tail =
        u.integrate(radius, 2.0 * radius, 3, |p| p.weight * p.u.norm_sq()) / (radius * radius);
    let sigma = sigma_functional(sol);
    let den = tail + sigma;
    let degenerate = lhs == 0.0 && den.abs() < 1e-300;
    let ratio = (!degenerate && den > 0.0).then(|| lhs / den);
    Ok(CaccioppoliReport {
        radius,
        lhs,
        tail,
        sigma,
        ratio,
        degenerate,
    })
}

/// `∫_{|x|=R} C[∇u] e_r ds` from recovered gradients.
pub fn traction_flux(sol: &AnnulusSolution, radius: f64) -> Result<Vec2> {
    let u = &sol.field;
    let grid = u.grid();
    let trace = circle_trace(u, &u.recovered_gradients(), radius)?;
    let mut s = Vec2::ZERO;
    for (j, (_, g)) in trace.iter().enumerate() {
        let er = Vec2::polar(grid.theta(j));
        let c = sol.problem.field.tensor_at(er * radius)?;
        s += c.traction(*g, er);
    }
    Ok(s * (grid.h_theta() * radius))
}

/// `|∫_{Ω_R} ∇u·C[∇u] − ∫∂Ω u·s(u) − ∫_{∂S_R} u·s(u) − ∫_{Ω_R} f·u|` over the energy.
pub fn energy_identity_residual(sol: &AnnulusSolution, radius: f64) -> Result<f64> {
    let u = &sol.field;
    let grid = u.grid();
    grid.check_radius(radius)?;
    let field = sol.problem.field.clone();
    let energy = u.integrate(1.0, radius, 3, |p| {
        let c = field.tensor_at(p.x).expect("tensor inside the grid");
        p.weight * c.energy(p.grad)
    });
    if energy == 0.0 {
        return Ok(0.0);
    }
    let inner: f64 = sol
        .inner_reactions
        .iter()
        .zip(u.ring(0))
        .map(|(r, v)| r.dot(*v))
        .sum();
    let trace = circle_trace(u, &u.recovered_gradients(), radius)?;
    let mut outer = 0.0;
    for (j, (v, g)) in trace.iter().enumerate() {
        let er = Vec2::polar(grid.theta(j));
        let c = field.tensor_at(er * radius)?;
        outer += c.traction(*g, er).dot(*v);
    }
    outer *= grid.h_theta() * radius;
    let force = match &sol.problem.force {
        Some(f) => u.integrate(1.0, radius, 3, |p| p.weight * f(p.x).dot(p.u)),
        None => 0.0,
    };
    Ok((energy - inner - outer - force).abs() / energy)
}

/// `∫∂Ω s(u)` from the inner-ring reactions (normal into the hole).
pub fn net_traction_discrete(sol: &AnnulusSolution) -> Vec2 {
    sol.inner_reactions.iter().fold(Vec2::ZERO, |a, b| a + *b)
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    pub alpha: f64,
    pub u0: Vec2,
    /// RMS residual of the log-log regression.
    pub residual: f64,
    pub poor_fit: bool,
    pub radii: Vec<f64>,
    /// `max_θ |u − u₀|` per radius.
    pub amplitudes: Vec<f64>,
}

const POOR_FIT: f64 = 0.1;

/// Regresses `log max_θ|u − u₀|` on `log r`; `u₀` is the angular mean at the
/// largest radius.
pub fn decay_exponent_fit(
    radii: &[f64],
    n_theta: usize,
    u: impl Fn(Vec2) -> Result<Vec2>,
) -> Result<DecayFit> {
    if radii.len() < 5 {
        return Err(Error::InvalidParameter(format!(
            "need at least 5 radii, got {}",
            radii.len()
        )));
    }
    if radii.windows(2).any(|w| !(w[1] > w[0])) || !(radii[0] > 0.0) {
        return Err(Error::InvalidParameter(
            "radii must be positive and increasing".into(),
        ));
    }
    let dirs: Vec<Vec2> = (0..n_theta)
        .map(|j| Vec2::polar(std::f64::consts::TAU * j as f64 / n_theta as f64))
        .collect();
    let rings: Vec<Vec<Vec2>> = radii
        .iter()
        .map(|&r| dirs.iter().map(|d| u(*d * r)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let last = &rings[rings.len() - 1];
    let u0 = last.iter().fold(Vec2::ZERO, |a, b| a + *b) * (1.0 / n_theta as f64);
    let amplitudes: Vec<f64> = rings
        .iter()
        .map(|ring| ring.iter().map(|v| (*v - u0).norm()).fold(0.0, f64::max))
        .collect();
    if amplitudes.iter().any(|a| !(*a > 0.0)) {
        return Err(Error::NonDecayingProfile);
    }
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = amplitudes.iter().map(|a| a.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    if !(slope < 0.0) {
        return Err(Error::NonDecayingProfile);
    }
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - my - slope * (x - mx)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(DecayFit {
        alpha: -slope,
        u0,
        residual,
        poor_fit: residual > POOR_FIT,
        radii: radii.to_vec(),
        amplitudes,
    })
}

/// [`decay_exponent_fit`] on the bilinear interpolant at the grid angles.
pub fn decay_exponent_fit_field(u: &DiscreteField, radii: &[f64]) -> Result<DecayFit> {
    for &r in radii {
        u.grid().check_radius(r)?;
    }
    decay_exponent_fit(radii, u.grid().n_theta(), |x| u.eval(x))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::annulus::grid::PolarGrid;

    #[test]
    fn zero_field_profiles_vanish() {
        let g = Arc::new(PolarGrid::new(8.0, 24, 32).unwrap());
        let z = DiscreteField::zeros(g);
        let p = energy_profiles(&z, &[1.0, 2.0, 4.0]).unwrap();
        assert!(p.g.iter().chain(&p.q).all(|v| *v == 0.0));
        let rep = growth_monotonicity_check(&p, 0.2);
        assert!(rep.degenerate);
    }

    #[test]
    fn partition_identity() {
        let g = Arc::new(PolarGrid::new(16.0, 48, 64).unwrap());
        let f = DiscreteField::sample(g, |x| Vec2::new(x.x() / x.norm_sq(), (x.y() * 0.3).sin()))
            .unwrap();
        let p = energy_profiles(&f, &quarter_dyadic_radii(1.0, 16.0)).unwrap();
        assert!(p.partition_defect() < 1e-12, "{}", p.partition_defect());
    }

    #[test]
    fn exact_power_law_fit() {
        let kappa = Vec2::new(0.3, -1.2);
        let radii = [1.0, 2.0, 4.0, 8.0, 16.0];
        let fit = decay_exponent_fit(&radii, 64, |x| Ok(kappa + x * (2.5 / x.norm_sq()))).unwrap();
        assert!((fit.alpha - 1.0).abs() < 0.01);
        assert!((fit.u0 - kappa).norm() < 1e-12);
        assert!(fit.residual < 1e-10 && !fit.poor_fit);
        assert!(matches!(
            decay_exponent_fit(&radii, 64, Ok),
            Err(Error::NonDecayingProfile)
        ));
        assert!(decay_exponent_fit(&radii[..4], 64, Ok).is_err());
    }
}
