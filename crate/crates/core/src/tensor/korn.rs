//! Pointwise check of `|∇̂u|² − |∇̃u|² = div[(∇u)u − (div u)u] + |div u|²`.
//!
//! Fields are sampled on a uniform Cartesian lattice so that every
//! derivative is a plain centered difference.

use super::linalg::{Mat2, Vec2};
use crate::error::{Error, Result};

/// Nodal vector field on the lattice `origin + (i·h, j·h)`, `i < nx`, `j < ny`.
#[derive(Debug, Clone)]
pub struct LatticeField {
    pub origin: Vec2,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    values: Vec<Vec2>,
}

impl LatticeField {
    pub fn sample(origin: Vec2, h: f64, nx: usize, ny: usize, u: impl Fn(Vec2) -> Vec2) -> Self {
        let mut values = Vec::with_capacity(nx * ny);
        for i in 0..nx {
            for j in 0..ny {
                values.push(u(origin + Vec2::new(i as f64 * h, j as f64 * h)));
            }
        }
        Self {
            origin,
            h,
            nx,
            ny,
            values,
        }
    }

    pub fn at(&self, i: usize, j: usize) -> Vec2 {
        self.values[i * self.ny + j]
    }

    fn gradient(&self, i: usize, j: usize) -> Mat2 {
        let dx = (self.at(i + 1, j) - self.at(i - 1, j)) * (0.5 / self.h);
        let dy = (self.at(i, j + 1) - self.at(i, j - 1)) * (0.5 / self.h);
        Mat2::from_columns(dx, dy)
    }
}

/// Max over interior nodes of `|∇̂u|² − |∇̃u|² − div[(∇u)u − (div u)u] − |div u|²`.
///
/// The flux `(∇u)u − (div u)u` is formed at the nodes one layer inside the
/// boundary and differenced once more, so nodes two layers inside are scored.
pub fn korn_identity_residual(u: &LatticeField) -> Result<f64> {
    if u.nx < 5 || u.ny < 5 {
        return Err(Error::GridTooCoarse(format!(
            "korn residual needs at least 5 nodes per direction, got {}×{}",
            u.nx, u.ny
        )));
    }
    let (nx, ny) = (u.nx, u.ny);
    let mut flux = vec![Vec2::ZERO; nx * ny];
    for i in 1..nx - 1 {
        for j in 1..ny - 1 {
            let g = u.gradient(i, j);
            let v = u.at(i, j);
            flux[i * ny + j] = g.apply(v) - v * g.trace();
        }
    }
    let mut worst = 0.0f64;
    for i in 2..nx - 2 {
        for j in 2..ny - 2 {
            let g = u.gradient(i, j);
            let lhs = g.sym().norm_sq() - g.skw().norm_sq();
            let div_flux = (flux[(i + 1) * ny + j].x() - flux[(i - 1) * ny + j].x()
                + flux[i * ny + j + 1].y()
                - flux[i * ny + j - 1].y())
                * (0.5 / u.h);
            let rhs = div_flux + g.trace().powi(2);
            worst = worst.max((lhs - rhs).abs());
        }
    }
    Ok(worst)
}
