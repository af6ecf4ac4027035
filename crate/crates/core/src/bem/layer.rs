//! Nyström discretization of the single layer `v[ψ](x) = ∫∂Ω 𝒰(x−y)ψ(y) ds_y`.
//!
//! The logarithm is split as `½log(4 sin²((t−τ)/2)) + ½log(|x(t)−x(τ)|²/(4 sin²((t−τ)/2)))`;
//! the first part is integrated exactly against the trigonometric interpolant
//! of the density (Kress weights), the second by the trapezoid rule.

use std::f64::consts::TAU;

use faer::Mat;
use rayon::prelude::*;

use super::curve::BoundaryCurve;
use super::kernel::FundamentalSolution;
use crate::tensor::{Mat2, Vec2};

/// Weights `R_k` with `∫ log(4 sin²((t_i−τ)/2)) f(τ) dτ ≈ Σ_j R_{i−j} f(t_j)`.
pub fn kress_weights(n_nodes: usize) -> Vec<f64> {
    let n = n_nodes / 2;
    let nf = n_nodes as f64;
    (0..n_nodes)
        .map(|k| {
            let t = TAU * k as f64 / nf;
            let mut s = 0.0;
            for m in 1..n {
                s += (m as f64 * t).cos() / m as f64;
            }
            -(2.0 * TAU / nf) * s - (2.0 * TAU / (nf * nf)) * (n as f64 * t).cos()
        })
        .collect()
}

/// Smooth remainder `½ log(|x_i − x_j|² / (4 sin²((t_i − t_j)/2)))`, with its
/// diagonal limit `log|x′(t_i)|`.
#[inline]
fn smooth_log(curve: &BoundaryCurve, i: usize, j: usize) -> f64 {
    if i == j {
        return curve.speeds[i].ln();
    }
    let d = curve.points[i] - curve.points[j];
    let s = ((curve.params[i] - curve.params[j]) * 0.5).sin();
    0.5 * (d.norm_sq() / (4.0 * s * s)).ln()
}

/// Dense `2N × 2N` matrix of the single layer at the nodes; unknown `2k + c`
/// is component `c` of `ψ(t_k)`.
///
/// The rounded polygon is only `C^{1,1}`, so the splitting loses its spectral
/// rate there; [`assembly_warning`] reports it.
pub fn assemble_single_layer(curve: &BoundaryCurve, kernel: &FundamentalSolution) -> Mat<f64> {
    let n = curve.len();
    let rw = kress_weights(n);
    let h = TAU / n as f64;
    let phi0 = kernel.phi0();
    let rows: Vec<Vec<Mat2>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    let log_part = 0.5 * rw[(i + n - j) % n] + h * smooth_log(curve, i, j);
                    let dir = if i == j {
                        curve.derivatives[i] * (1.0 / curve.speeds[i])
                    } else {
                        let d = curve.points[i] - curve.points[j];
                        d * (1.0 / d.norm())
                    };
                    (phi0 * log_part + kernel.phi(dir) * h) * curve.speeds[j]
                })
                .collect()
        })
        .collect();
    Mat::from_fn(2 * n, 2 * n, |r, c| rows[r / 2][c / 2][(r % 2, c % 2)])
}

pub fn assembly_warning(curve: &BoundaryCurve) -> Option<String> {
    (!curve.is_smooth()).then(|| {
        "curve is only C^1,1 (rounded corners): log-splitting quadrature converges algebraically".to_string()
    })
}

/// Applies `A` to nodal densities.
pub fn apply_layer(a: &Mat<f64>, psi: &[Vec2]) -> Vec<Vec2> {
    let n = psi.len();
    (0..n)
        .map(|i| {
            let mut out = Vec2::ZERO;
            for (j, p) in psi.iter().enumerate() {
                for c in 0..2 {
                    out[c] += a[(2 * i + c, 2 * j)] * p[0] + a[(2 * i + c, 2 * j + 1)] * p[1];
                }
            }
            out
        })
        .collect()
}

/// Scalar layer `∫∂Ω log|x_i − y| σ(y) ds_y` with the same splitting.
pub fn scalar_log_layer(curve: &BoundaryCurve) -> Mat<f64> {
    let n = curve.len();
    let rw = kress_weights(n);
    let h = TAU / n as f64;
    Mat::from_fn(n, n, |i, j| {
        (0.5 * rw[(i + n - j) % n] + h * smooth_log(curve, i, j)) * curve.speeds[j]
    })
}

pub fn flatten(v: &[Vec2]) -> Vec<f64> {
    v.iter().flat_map(|p| p.0).collect()
}

pub fn unflatten(v: &[f64]) -> Vec<Vec2> {
    v.chunks_exact(2).map(|c| Vec2::new(c[0], c[1])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::ElasticityTensor;

    #[test]
    fn kress_weights_integrate_log_sine_exactly() {
        // ∫ log(4 sin²(τ/2)) cos(mτ) dτ = −2π/m, and 0 for m = 0
        let n = 32;
        let w = kress_weights(n);
        let s0: f64 = w.iter().sum();
        assert!(s0.abs() < 1e-13);
        for m in 1..8 {
            let s: f64 = (0..n)
                .map(|k| w[k] * (m as f64 * TAU * k as f64 / n as f64).cos())
                .sum();
            assert!((s + TAU / m as f64).abs() < 1e-12, "m = {m}: {s}");
        }
    }

    #[test]
    fn constant_log_potential_on_circle() {
        for a in [0.5, 1.0, 2.5] {
            let c = BoundaryCurve::circle(a, 64).unwrap();
            let s = scalar_log_layer(&c);
            let expected = TAU * a * f64::ln(a);
            for i in 0..64 {
                let row: f64 = (0..64).map(|j| s[(i, j)]).sum();
                assert!(
                    (row - expected).abs() < 1e-12,
                    "a = {a}: {row} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn isotropic_block_matrix_is_symmetric() {
        let c = BoundaryCurve::ellipse(2.0, 1.0, 64).unwrap();
        let k = FundamentalSolution::new(ElasticityTensor::isotropic(1.0, 1.0)).unwrap();
        let a = assemble_single_layer(&c, &k);
        let mut worst = 0.0f64;
        for r in 0..128 {
            for col in 0..128 {
                // symmetric after removing the speed factor of the column node
                let x = a[(r, col)] / c.speeds[col / 2];
                let y = a[(col, r)] / c.speeds[r / 2];
                worst = worst.max((x - y).abs());
            }
        }
        assert!(worst < 1e-12, "{worst}");
        let c = BoundaryCurve::circle(1.0, 64).unwrap();
        let a = assemble_single_layer(&c, &k);
        for r in 0..128 {
            for col in 0..128 {
                assert!((a[(r, col)] - a[(col, r)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn self_convergence_on_circle() {
        let k = FundamentalSolution::new(ElasticityTensor::isotropic(1.0, 1.0)).unwrap();
        let eval = |n: usize| {
            let c = BoundaryCurve::circle(1.0, n).unwrap();
            let psi: Vec<Vec2> = c
                .params
                .iter()
                .map(|&t| Vec2::new(t.cos(), (2.0 * t).sin()))
                .collect();
            apply_layer(&assemble_single_layer(&c, &k), &psi)
        };
        let coarse = eval(64);
        let fine = eval(512);
        for i in 0..64 {
            assert!((coarse[i] - fine[8 * i]).norm() < 1e-10);
        }
    }
}
