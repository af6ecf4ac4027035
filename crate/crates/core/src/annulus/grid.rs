//! Graded polar mesh on `1 < r < R_max` and nodal fields on it.

use std::f64::consts::TAU;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quad::gauss_legendre;
use crate::tensor::{Mat2, Vec2};

const MAX_GRADING: f64 = 1.2;

#[derive(Debug, Clone, PartialEq)]
pub struct PolarGrid {
    radii: Vec<f64>,
    n_theta: usize,
}

impl PolarGrid {
    /// Geometric radii `r_i = g^i`, `i < n_r`, ending at `r_max`.
    pub fn new(r_max: f64, n_r: usize, n_theta: usize) -> Result<Self> {
        if !(r_max > 1.0) || !r_max.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "outer radius must exceed 1, got {r_max}"
            )));
        }
        if n_r < 3 {
            return Err(Error::GridTooCoarse(format!("n_r = {n_r} < 3")));
        }
        let g = r_max.powf(1.0 / (n_r - 1) as f64);
        let mut radii: Vec<f64> = (0..n_r).map(|i| g.powi(i as i32)).collect();
        radii[n_r - 1] = r_max;
        Self::from_radii(radii, n_theta)
    }

    pub fn from_radii(radii: Vec<f64>, n_theta: usize) -> Result<Self> {
        if n_theta < 8 || n_theta % 2 == 1 {
            return Err(Error::GridTooCoarse(format!(
                "n_theta = {n_theta} must be even and at least 8"
            )));
        }
        if radii.len() < 3 || (radii[0] - 1.0).abs() > 1e-14 {
            return Err(Error::InvalidParameter(
                "radii must start at 1 and have at least 3 entries".into(),
            ));
        }
        for w in radii.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidParameter(
                    "radii must be strictly increasing".into(),
                ));
            }
            if w[1] / w[0] > MAX_GRADING * (1.0 + 1e-12) {
                return Err(Error::GridTooCoarse(format!(
                    "grading ratio {} exceeds {MAX_GRADING}",
                    w[1] / w[0]
                )));
            }
        }
        Ok(Self { radii, n_theta })
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn n_r(&self) -> usize {
        self.radii.len()
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn r_max(&self) -> f64 {
        self.radii[self.radii.len() - 1]
    }

    /// Largest ratio of consecutive radii.
    pub fn grading(&self) -> f64 {
        self.radii
            .windows(2)
            .map(|w| w[1] / w[0])
            .fold(1.0, f64::max)
    }

    pub fn h_theta(&self) -> f64 {
        TAU / self.n_theta as f64
    }

    pub fn theta(&self, j: usize) -> f64 {
        TAU * j as f64 / self.n_theta as f64
    }

    pub fn n_nodes(&self) -> usize {
        self.radii.len() * self.n_theta
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> usize {
        i * self.n_theta + j % self.n_theta
    }

    pub fn point(&self, i: usize, j: usize) -> Vec2 {
        Vec2::polar(self.theta(j)) * self.radii[i]
    }

    pub fn check_radius(&self, r: f64) -> Result<()> {
        if r < 1.0 - 1e-12 || r > self.r_max() * (1.0 + 1e-12) || !r.is_finite() {
            return Err(Error::RadiusOutOfGrid {
                radius: r,
                inner: 1.0,
                outer: self.r_max(),
            });
        }
        Ok(())
    }

    /// Radial cell containing `r` and the local coordinate in `[0, 1]`.
    pub fn locate_radius(&self, r: f64) -> Result<(usize, f64)> {
        self.check_radius(r)?;
        let n = self.radii.len();
        let i = self.radii.partition_point(|&x| x <= r).clamp(1, n - 1) - 1;
        let a = ((r - self.radii[i]) / (self.radii[i + 1] - self.radii[i])).clamp(0.0, 1.0);
        Ok((i, a))
    }

    fn locate_angle(&self, theta: f64) -> (usize, f64) {
        let s = theta.rem_euclid(TAU) / self.h_theta();
        let j = (s.floor() as usize).min(self.n_theta - 1);
        (j, (s - j as f64).clamp(0.0, 1.0))
    }

    /// Gauss points of the `k × k` rule on the part of radial cell `i` inside
    /// `[ra, rb]`, angular cell `j`: `(r, θ, weight)` with `dA = r dr dθ`.
    pub(crate) fn cell_points(
        &self,
        i: usize,
        j: usize,
        ra: f64,
        rb: f64,
        rule: &GaussRule,
    ) -> Vec<(f64, f64, f64)> {
        let lo = self.radii[i].max(ra);
        let hi = self.radii[i + 1].min(rb);
        if hi <= lo {
            return Vec::new();
        }
        let ht = self.h_theta();
        let t0 = self.theta(j);
        let mut out = Vec::with_capacity(rule.x.len() * rule.x.len());
        for (xa, wa) in rule.x.iter().zip(&rule.w) {
            let r = lo + xa * (hi - lo);
            for (xb, wb) in rule.x.iter().zip(&rule.w) {
                out.push((r, t0 + xb * ht, wa * wb * (hi - lo) * ht * r));
            }
        }
        out
    }

    /// Bilinear shape functions of cell `(i, j)` at `(r, θ)`: values and
    /// Cartesian gradients, node order `(i,j), (i+1,j), (i,j+1), (i+1,j+1)`.
    pub(crate) fn shape(&self, i: usize, j: usize, r: f64, theta: f64) -> ([f64; 4], [Vec2; 4]) {
        let hr = self.radii[i + 1] - self.radii[i];
        let ht = self.h_theta();
        let a = (r - self.radii[i]) / hr;
        let b = (theta - self.theta(j)) / ht;
        let n = [(1.0 - a) * (1.0 - b), a * (1.0 - b), (1.0 - a) * b, a * b];
        let da = [-(1.0 - b), 1.0 - b, -b, b];
        let db = [-(1.0 - a), -a, 1.0 - a, a];
        let er = Vec2::polar(theta);
        let et = er.perp();
        let mut g = [Vec2::ZERO; 4];
        for k in 0..4 {
            g[k] = er * (da[k] / hr) + et * (db[k] / (ht * r));
        }
        (n, g)
    }

    pub(crate) fn cell_nodes(&self, i: usize, j: usize) -> [usize; 4] {
        [
            self.node(i, j),
            self.node(i + 1, j),
            self.node(i, j + 1),
            self.node(i + 1, j + 1),
        ]
    }

    /// Nodal quadrature weights `r_i Δr_i Δθ` (trapezoid in `r`).
    pub fn nodal_weights(&self) -> Vec<f64> {
        let n = self.radii.len();
        let ht = self.h_theta();
        let mut w = Vec::with_capacity(self.n_nodes());
        for i in 0..n {
            let left = if i > 0 {
                self.radii[i] - self.radii[i - 1]
            } else {
                0.0
            };
            let right = if i + 1 < n {
                self.radii[i + 1] - self.radii[i]
            } else {
                0.0
            };
            let wi = 0.5 * (left + right) * self.radii[i] * ht;
            w.extend(std::iter::repeat_n(wi, self.n_theta));
        }
        w
    }
}

/// Gauss rule on `[0, 1]`.
#[derive(Debug, Clone)]
pub(crate) struct GaussRule {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
}

impl GaussRule {
    pub fn new(k: usize) -> Self {
        let (x, w) = gauss_legendre(k);
        Self {
            x: x.iter().map(|t| 0.5 * (t + 1.0)).collect(),
            w: w.iter().map(|t| 0.5 * t).collect(),
        }
    }

    /// `k` points on each of `m` equal subintervals.
    pub fn composite(k: usize, m: usize) -> Self {
        let base = Self::new(k);
        let h = 1.0 / m as f64;
        let mut x = Vec::with_capacity(k * m);
        let mut w = Vec::with_capacity(k * m);
        for s in 0..m {
            for (a, b) in base.x.iter().zip(&base.w) {
                x.push((s as f64 + a) * h);
                w.push(b * h);
            }
        }
        Self { x, w }
    }
}

/// Nodal 2-vector field; node `(i, j)` is `values[i·n_θ + j]`.
#[derive(Debug, Clone)]
pub struct DiscreteField {
    grid: Arc<PolarGrid>,
    values: Vec<Vec2>,
}

/// One quadrature point with the field and its gradient.
#[derive(Debug, Clone, Copy)]
pub struct FieldPoint {
    pub x: Vec2,
    pub r: f64,
    pub weight: f64,
    pub u: Vec2,
    pub grad: Mat2,
}

impl DiscreteField {
    pub fn new(grid: Arc<PolarGrid>, values: Vec<Vec2>) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(Error::NodeCountMismatch {
                expected: grid.n_nodes(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "field has non-finite values".into(),
            ));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<PolarGrid>) -> Self {
        let n = grid.n_nodes();
        Self {
            grid,
            values: vec![Vec2::ZERO; n],
        }
    }

    pub fn sample(grid: Arc<PolarGrid>, f: impl Fn(Vec2) -> Vec2) -> Result<Self> {
        let values = (0..grid.n_r())
            .flat_map(|i| (0..grid.n_theta()).map(move |j| (i, j)))
            .map(|(i, j)| f(grid.point(i, j)))
            .collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<PolarGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Vec2] {
        &self.values
    }

    pub fn at(&self, i: usize, j: usize) -> Vec2 {
        self.values[self.grid.node(i, j)]
    }

    pub fn ring(&self, i: usize) -> &[Vec2] {
        let m = self.grid.n_theta();
        &self.values[i * m..(i + 1) * m]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn sub(&self, other: &DiscreteField) -> DiscreteField {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| *a - *b)
            .collect();
        Self {
            grid: self.grid.clone(),
            values,
        }
    }

    /// `Σ cₖ fₖ`; all fields must share the grid.
    pub fn combine(fields: &[&DiscreteField], coeffs: &[f64]) -> DiscreteField {
        let mut values = vec![Vec2::ZERO; fields[0].values.len()];
        for (f, c) in fields.iter().zip(coeffs) {
            for (v, x) in values.iter_mut().zip(&f.values) {
                *v += *x * *c;
            }
        }
        Self {
            grid: fields[0].grid.clone(),
            values,
        }
    }

    /// Bilinear interpolation at `x`.
    pub fn eval(&self, x: Vec2) -> Result<Vec2> {
        let (i, j, r, th) = self.locate(x)?;
        let (n, _) = self.grid.shape(i, j, r, th);
        Ok(self.combine_cell(i, j, &n))
    }

    /// Gradient of the bilinear interpolant at `x`.
    pub fn gradient(&self, x: Vec2) -> Result<Mat2> {
        let (i, j, r, th) = self.locate(x)?;
        Ok(self.cell_gradient(i, j, r, th))
    }

    fn locate(&self, x: Vec2) -> Result<(usize, usize, f64, f64)> {
        let r = x.norm();
        let (i, _) = self.grid.locate_radius(r)?;
        let (j, _) = self.grid.locate_angle(x.y().atan2(x.x()));
        let th = x.y().atan2(x.x()).rem_euclid(TAU).max(self.grid.theta(j));
        Ok((i, j, r, th))
    }

    fn combine_cell(&self, i: usize, j: usize, n: &[f64; 4]) -> Vec2 {
        let nodes = self.grid.cell_nodes(i, j);
        let mut u = Vec2::ZERO;
        for k in 0..4 {
            u += self.values[nodes[k]] * n[k];
        }
        u
    }

    pub(crate) fn cell_gradient(&self, i: usize, j: usize, r: f64, th: f64) -> Mat2 {
        let (_, g) = self.grid.shape(i, j, r, th);
        let nodes = self.grid.cell_nodes(i, j);
        let mut m = Mat2::ZERO;
        for k in 0..4 {
            m += self.values[nodes[k]].outer(g[k]);
        }
        m
    }

    /// `∫ f` over `ra < r < rb` with a `k × k` Gauss rule per (clipped) cell.
    /// Summation order is fixed, so results are bit-reproducible.
    pub fn integrate(
        &self,
        ra: f64,
        rb: f64,
        k: usize,
        f: impl Fn(&FieldPoint) -> f64 + Sync,
    ) -> f64 {
        use rayon::prelude::*;
        let rule = GaussRule::new(k);
        let g = &*self.grid;
        let rings: Vec<usize> = (0..g.n_r() - 1)
            .filter(|&i| g.radii[i + 1] > ra && g.radii[i] < rb)
            .collect();
        let parts: Vec<f64> = rings
            .par_iter()
            .map(|&i| {
                let mut s = 0.0;
                for j in 0..g.n_theta() {
                    let nodes = g.cell_nodes(i, j);
                    for (r, th, w) in g.cell_points(i, j, ra, rb, &rule) {
                        let (n, dn) = g.shape(i, j, r, th);
                        let mut u = Vec2::ZERO;
                        let mut grad = Mat2::ZERO;
                        for c in 0..4 {
                            let v = self.values[nodes[c]];
                            u += v * n[c];
                            grad += v.outer(dn[c]);
                        }
                        let x = Vec2::polar(th) * r;
                        s += f(&FieldPoint {
                            x,
                            r,
                            weight: w,
                            u,
                            grad,
                        });
                    }
                }
                s
            })
            .collect();
        parts.iter().sum()
    }

    /// Nodal gradients recovered by finite differences: three-point
    /// nonuniform in `r`, centred periodic in `θ`.
    pub fn recovered_gradients(&self) -> Vec<Mat2> {
        let g = &*self.grid;
        let (nr, nt) = (g.n_r(), g.n_theta());
        let ht = g.h_theta();
        let mut out = Vec::with_capacity(g.n_nodes());
        for i in 0..nr {
            let (a, b, c) = if i == 0 {
                (0, 1, 2)
            } else if i == nr - 1 {
                (nr - 3, nr - 2, nr - 1)
            } else {
                (i - 1, i, i + 1)
            };
            let w = three_point_weights(g.radii[a], g.radii[b], g.radii[c], g.radii[i]);
            for j in 0..nt {
                let dr = self.at(a, j) * w[0] + self.at(b, j) * w[1] + self.at(c, j) * w[2];
                let dt = (self.at(i, j + 1) - self.at(i, j + nt - 1)) * (0.5 / ht);
                let er = Vec2::polar(g.theta(j));
                out.push(dr.outer(er) + dt.outer(er.perp()) * (1.0 / g.radii[i]));
            }
        }
        out
    }
}

/// Derivative weights at `x` from samples at `a < b < c`.
fn three_point_weights(a: f64, b: f64, c: f64, x: f64) -> [f64; 3] {
    [
        ((x - b) + (x - c)) / ((a - b) * (a - c)),
        ((x - a) + (x - c)) / ((b - a) * (b - c)),
        ((x - a) + (x - b)) / ((c - a) * (c - b)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grading_and_validation() {
        let g = PolarGrid::new(64.0, 128, 256).unwrap();
        assert!((g.r_max() - 64.0).abs() < 1e-14);
        assert!(g.grading() < 1.04);
        assert!(matches!(
            PolarGrid::new(64.0, 16, 64),
            Err(Error::GridTooCoarse(_))
        ));
        assert!(PolarGrid::new(4.0, 16, 63).is_err());
        assert!(PolarGrid::from_radii(vec![1.0, 1.1, 1.05], 16).is_err());
    }

    #[test]
    fn bilinear_reproduces_linear_in_cartesian_components_on_nodes() {
        let g = Arc::new(PolarGrid::new(4.0, 32, 64).unwrap());
        let f = DiscreteField::sample(g.clone(), |x| {
            Vec2::new(2.0 * x.x() - x.y(), 0.5 * x.y() + 3.0)
        })
        .unwrap();
        // disc area check with a constant integrand
        let area = f.integrate(1.0, 4.0, 3, |p| p.weight);
        assert!((area - std::f64::consts::PI * 15.0).abs() < 1e-12);
        let u = f.eval(Vec2::new(2.0, 0.0)).unwrap();
        assert!((u - Vec2::new(4.0, 3.0)).norm() < 1e-12);
        assert!(f.eval(Vec2::new(0.5, 0.0)).is_err());
        // recovered gradient of a linear field: exact in r, O(h²) in θ
        let rg = f.recovered_gradients();
        let exact = Mat2::new(2.0, -1.0, 0.0, 0.5);
        let worst = rg.iter().map(|m| (*m - exact).norm()).fold(0.0, f64::max);
        assert!(worst < 1e-2, "{worst}");
    }

    #[test]
    fn partial_cell_integration_is_additive() {
        let g = Arc::new(PolarGrid::new(8.0, 24, 32).unwrap());
        let f = DiscreteField::sample(g, |x| Vec2::new(x.x() * x.y(), x.norm())).unwrap();
        let dens = |p: &FieldPoint| p.weight * (p.grad.norm_sq() + p.u.norm_sq());
        let whole = f.integrate(1.0, 8.0, 3, dens);
        let split = f.integrate(1.0, 3.3, 3, dens) + f.integrate(3.3, 8.0, 3, dens);
        assert!((whole - split).abs() < 1e-5 * whole);
    }
}
