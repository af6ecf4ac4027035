//! Closed boundary curves sampled at `N` equispaced parameter nodes.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Vec2;

/// Geometry behind a [`BoundaryCurve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CurveShape {
    Circle {
        a: f64,
    },
    Ellipse {
        a: f64,
        b: f64,
    },
    /// Convex polygon (counter-clockwise vertices) with corners rounded to radius `rho`.
    RoundedPolygon {
        vertices: Vec<Vec2>,
        rho: f64,
    },
}

#[derive(Debug, Clone)]
struct Fillet {
    // straight piece of edge i, then arc around inner vertex i + 1
    start: Vec2,
    end: Vec2,
    center: Vec2,
    angle_from: f64,
    sweep: f64,
}

impl CurveShape {
    fn fillets(&self) -> Option<(Vec<Fillet>, f64)> {
        let CurveShape::RoundedPolygon { vertices, rho } = self else {
            return None;
        };
        let n = vertices.len();
        let normal = |i: usize| {
            let e = vertices[(i + 1) % n] - vertices[i];
            Vec2::new(e.y(), -e.x()) * (1.0 / e.norm())
        };
        let inner: Vec<Vec2> = (0..n)
            .map(|i| {
                let (a, b) = (normal((i + n - 1) % n), normal(i));
                vertices[i] - (a + b) * (rho / (1.0 + a.dot(b)))
            })
            .collect();
        let mut pieces = Vec::with_capacity(n);
        let mut length = 0.0;
        for i in 0..n {
            let nu = normal(i);
            let nu_next = normal((i + 1) % n);
            let start = inner[i] + nu * *rho;
            let end = inner[(i + 1) % n] + nu * *rho;
            let angle_from = nu.y().atan2(nu.x());
            let mut sweep = nu_next.y().atan2(nu_next.x()) - angle_from;
            while sweep < 0.0 {
                sweep += TAU;
            }
            length += (end - start).norm() + rho * sweep;
            pieces.push(Fillet {
                start,
                end,
                center: inner[(i + 1) % n],
                angle_from,
                sweep,
            });
        }
        Some((pieces, length))
    }
}

/// Closed curve `t ↦ x(t)`, `t ∈ [0, 2π)`, traversed counter-clockwise, with
/// nodes `t_k = 2πk/N`.
///
/// `normals` follow the convention of the exterior problem: they point out of
/// the exterior domain Ω, i.e. into the body.
#[derive(Debug, Clone)]
pub struct BoundaryCurve {
    shape: CurveShape,
    pub params: Vec<f64>,
    pub points: Vec<Vec2>,
    pub derivatives: Vec<Vec2>,
    pub speeds: Vec<f64>,
    pub normals: Vec<Vec2>,
    fillets: Option<(Vec<Fillet>, f64)>,
}

impl BoundaryCurve {
    pub fn circle(a: f64, n: usize) -> Result<Self> {
        if !(a > 0.0) {
            return Err(Error::InvalidCurve(format!(
                "circle radius must be positive, got {a}"
            )));
        }
        Self::build(CurveShape::Circle { a }, n)
    }

    pub fn ellipse(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::InvalidCurve(format!(
                "ellipse semi-axes must be positive, got {a}, {b}"
            )));
        }
        Self::build(CurveShape::Ellipse { a, b }, n)
    }

    /// Convex polygon with rounded corners, parametrized proportionally to arc length.
    pub fn rounded_polygon(vertices: Vec<Vec2>, rho: f64, n: usize) -> Result<Self> {
        if vertices.len() < 3 || !(rho > 0.0) {
            return Err(Error::InvalidCurve(
                "rounded polygon needs ≥ 3 vertices and ρ > 0".into(),
            ));
        }
        let m = vertices.len();
        for i in 0..m {
            let a = vertices[(i + 1) % m] - vertices[i];
            let b = vertices[(i + 2) % m] - vertices[(i + 1) % m];
            if a.x() * b.y() - a.y() * b.x() <= 0.0 {
                return Err(Error::InvalidCurve(
                    "rounded polygon vertices must be convex and counter-clockwise".into(),
                ));
            }
        }
        let shape = CurveShape::RoundedPolygon { vertices, rho };
        let (pieces, _) = shape.fillets().expect("polygon");
        for p in &pieces {
            // a corner radius larger than the edge reverses the straight piece
            let dir = Vec2::polar(p.angle_from).perp();
            if (p.end - p.start).dot(dir) < 0.0 {
                return Err(Error::InvalidCurve(format!(
                    "corner radius {rho} too large for the edges"
                )));
            }
        }
        Self::build(shape, n)
    }

    pub fn unit_square_rounded(half: f64, rho: f64, n: usize) -> Result<Self> {
        let v = vec![
            Vec2::new(-half, -half),
            Vec2::new(half, -half),
            Vec2::new(half, half),
            Vec2::new(-half, half),
        ];
        Self::rounded_polygon(v, rho, n)
    }

    fn build(shape: CurveShape, n: usize) -> Result<Self> {
        if n < 16 || !n.is_multiple_of(2) {
            return Err(Error::InvalidCurve(format!(
                "node count must be even and ≥ 16, got {n}"
            )));
        }
        let fillets = shape.fillets();
        let mut curve = Self {
            shape,
            params: Vec::with_capacity(n),
            points: Vec::with_capacity(n),
            derivatives: Vec::with_capacity(n),
            speeds: Vec::with_capacity(n),
            normals: Vec::with_capacity(n),
            fillets,
        };
        for k in 0..n {
            let t = TAU * k as f64 / n as f64;
            let (x, dx) = curve.eval(t);
            let s = dx.norm();
            curve.params.push(t);
            curve.points.push(x);
            curve.derivatives.push(dx);
            curve.speeds.push(s);
            curve.normals.push(dx.perp() * (1.0 / s));
        }
        curve.check_simple()?;
        Ok(curve)
    }

    /// Point and derivative at parameter `t`.
    pub fn eval(&self, t: f64) -> (Vec2, Vec2) {
        match &self.shape {
            CurveShape::Circle { a } => (Vec2::polar(t) * *a, Vec2::polar(t).perp() * *a),
            CurveShape::Ellipse { a, b } => (
                Vec2::new(a * t.cos(), b * t.sin()),
                Vec2::new(-a * t.sin(), b * t.cos()),
            ),
            CurveShape::RoundedPolygon { rho, .. } => {
                let (pieces, length) = self.fillets.as_ref().expect("polygon pieces");
                let scale = length / TAU;
                let mut s = t.rem_euclid(TAU) * scale;
                for p in pieces {
                    let straight = (p.end - p.start).norm();
                    if straight > 0.0 && s <= straight {
                        let dir = (p.end - p.start) * (1.0 / straight);
                        return (p.start + dir * s, dir * scale);
                    }
                    s -= straight;
                    let arc = rho * p.sweep;
                    if s <= arc {
                        let phi = p.angle_from + s / rho;
                        return (
                            p.center + Vec2::polar(phi) * *rho,
                            Vec2::polar(phi).perp() * scale,
                        );
                    }
                    s -= arc;
                }
                let p = &pieces[0];
                (p.start, Vec2::polar(p.angle_from).perp() * scale)
            }
        }
    }

    fn check_simple(&self) -> Result<()> {
        let n = self.len();
        let seg = |k: usize| (self.points[k], self.points[(k + 1) % n]);
        let cross = |a: Vec2, b: Vec2| a.x() * b.y() - a.y() * b.x();
        for i in 0..n {
            let (p, p2) = seg(i);
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (q, q2) = seg(j);
                let d1 = cross(p2 - p, q - p);
                let d2 = cross(p2 - p, q2 - p);
                let d3 = cross(q2 - q, p - q);
                let d4 = cross(q2 - q, p2 - q);
                if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
                    return Err(Error::InvalidCurve(format!(
                        "self-intersection between segments {i} and {j}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn shape(&self) -> &CurveShape {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Spectral quadrature is only available for analytic curves.
    pub fn is_smooth(&self) -> bool {
        !matches!(self.shape, CurveShape::RoundedPolygon { .. })
    }

    /// Same shape at a different node count.
    pub fn resampled(&self, n: usize) -> Result<Self> {
        Self::build(self.shape.clone(), n)
    }

    /// Quadrature weight `|x′(t_k)|·2π/N`.
    pub fn weight(&self, k: usize) -> f64 {
        self.speeds[k] * TAU / self.len() as f64
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.weight(k)).collect()
    }

    pub fn perimeter(&self) -> f64 {
        self.weights().iter().sum()
    }

    /// `∫∂Ω ψ ds`.
    pub fn total(&self, psi: &[Vec2]) -> Vec2 {
        psi.iter()
            .enumerate()
            .fold(Vec2::ZERO, |acc, (k, &p)| acc + p * self.weight(k))
    }

    /// `∫∂Ω f·g ds`.
    pub fn pairing(&self, f: &[Vec2], g: &[Vec2]) -> f64 {
        f.iter()
            .zip(g)
            .enumerate()
            .map(|(k, (a, b))| a.dot(*b) * self.weight(k))
            .sum()
    }

    /// `|∇f|` on the boundary for `f(ξ) = (ξ₁/a)² + (ξ₂/b)²`.
    pub fn grad_f_norms(&self) -> Result<Vec<f64>> {
        let CurveShape::Ellipse { a, b } = self.shape else {
            if let CurveShape::Circle { a } = self.shape {
                return Ok(vec![2.0 / a; self.len()]);
            }
            return Err(Error::NotAnEllipse);
        };
        Ok(self
            .points
            .iter()
            .map(|x| 2.0 * (x.x().powi(2) / a.powi(4) + x.y().powi(2) / b.powi(4)).sqrt())
            .collect())
    }

    /// Whether `x` lies in the closed body bounded by the curve.
    pub fn contains(&self, x: Vec2) -> bool {
        match &self.shape {
            CurveShape::Circle { a } => x.norm() <= *a,
            CurveShape::Ellipse { a, b } => (x.x() / a).powi(2) + (x.y() / b).powi(2) <= 1.0,
            CurveShape::RoundedPolygon { .. } => {
                let n = self.len();
                let mut winding = 0.0;
                for k in 0..n {
                    let a = self.points[k] - x;
                    let b = self.points[(k + 1) % n] - x;
                    winding += (a.x() * b.y() - a.y() * b.x()).atan2(a.dot(b));
                }
                winding.abs() > PI
            }
        }
    }

    /// Smallest distance from `x` to a node, a cheap proxy for the boundary distance.
    pub fn node_distance(&self, x: Vec2) -> f64 {
        self.points
            .iter()
            .map(|p| (*p - x).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Mean node spacing.
    pub fn spacing(&self) -> f64 {
        self.perimeter() / self.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_basics() {
        let c = BoundaryCurve::circle(2.0, 64).unwrap();
        assert!((c.perimeter() - 4.0 * PI).abs() < 1e-12);
        // normal points into the body
        assert!((c.normals[0] - Vec2::new(-1.0, 0.0)).norm() < 1e-14);
        assert!(c.contains(Vec2::new(1.0, 1.0)) && !c.contains(Vec2::new(2.0, 1.0)));
        assert!(c
            .grad_f_norms()
            .unwrap()
            .iter()
            .all(|g| (g - 1.0).abs() < 1e-15));
    }

    #[test]
    fn ellipse_perimeter_and_gradient() {
        let c = BoundaryCurve::ellipse(2.0, 1.0, 256).unwrap();
        // Ramanujan's second approximation is accurate to ~1e-9 at this aspect
        let (a, b) = (2.0f64, 1.0f64);
        let h = ((a - b) / (a + b)).powi(2);
        let ram = PI * (a + b) * (1.0 + 3.0 * h / (10.0 + (4.0 - 3.0 * h).sqrt()));
        assert!((c.perimeter() - ram).abs() < 1e-4);
        let g = c.grad_f_norms().unwrap();
        assert!((g[0] - 1.0).abs() < 1e-14); // (2, 0): 2·2/4
        assert!((g[64] - 2.0).abs() < 1e-14); // (0, 1): 2·1/1
                                              // gradient is parallel to the outward normal of the body
        for k in 0..c.len() {
            let x = c.points[k];
            let grad = Vec2::new(2.0 * x.x() / 4.0, 2.0 * x.y());
            assert!((grad * (1.0 / grad.norm()) + c.normals[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn rounded_square_is_closed_and_c1() {
        let c = BoundaryCurve::unit_square_rounded(1.0, 0.25, 256).unwrap();
        assert!(!c.is_smooth());
        let exact = 4.0 * 1.5 + TAU * 0.25;
        assert!((c.perimeter() - exact).abs() < 1e-12);
        let (x0, _) = c.eval(0.0);
        let (x1, _) = c.eval(TAU - 1e-12);
        assert!((x0 - x1).norm() < 1e-9);
        for k in 0..c.len() {
            let k2 = (k + 1) % c.len();
            assert!((c.normals[k] - c.normals[k2]).norm() < 0.15);
        }
        assert!(c.contains(Vec2::ZERO) && !c.contains(Vec2::new(0.99, 0.99)));
        assert!(c.grad_f_norms().is_err());
    }

    #[test]
    fn bad_inputs_rejected() {
        assert!(BoundaryCurve::circle(1.0, 15).is_err());
        assert!(BoundaryCurve::circle(-1.0, 16).is_err());
        let cw = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(1.0, 0.0),
        ];
        assert!(BoundaryCurve::rounded_polygon(cw, 0.1, 64).is_err());
        assert!(BoundaryCurve::unit_square_rounded(1.0, 1.5, 64).is_err());
    }

    #[test]
    fn totals_and_pairings() {
        let c = BoundaryCurve::circle(1.0, 32).unwrap();
        let ones = vec![Vec2::E1; 32];
        assert!((c.total(&ones) - Vec2::E1 * TAU).norm() < 1e-13);
        let rot: Vec<Vec2> = c
            .params
            .iter()
            .map(|&t| Vec2::new(-t.sin(), t.cos()))
            .collect();
        assert!(c.pairing(&rot, &ones).abs() < 1e-13);
    }
}
