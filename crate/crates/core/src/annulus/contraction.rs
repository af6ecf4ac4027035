//! Volume potential `v_f = ∫ 𝒰(x−y) f(y) dy` and the fixed-point solver
//! `v_{k+1} = v_f + 𝒬[v_k]` for inhomogeneous fields.
//!
//! On the grid the Green operator of the reference problem is the inverse of
//! its stiffness matrix `K₀` (same boundary conditions), so one step reads
//! `K₀ v_{k+1} = b − (K_C − K₀) v_k`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::fem::{load_vector, DofLayout, FreeSolver, Stiffness, VariationalProblem};
use super::grid::{DiscreteField, GaussRule, PolarGrid};
use crate::bem::FundamentalSolution;
use crate::error::{Error, Result};
use crate::tensor::{ElasticityTensor, Vec2};

/// Direct quadrature of the convolution with the fundamental matrix at every
/// node. Cells close to the target are subdivided 6 × 6.
pub fn volume_potential(
    force: &(dyn Fn(Vec2) -> Vec2 + Sync),
    kernel: &FundamentalSolution,
    grid: &Arc<PolarGrid>,
) -> Result<DiscreteField> {
    let coarse = GaussRule::new(3);
    let fine = GaussRule::composite(3, 6);
    struct Cell {
        centre: Vec2,
        diam: f64,
        coarse: Vec<(Vec2, Vec2)>,
        fine: Vec<(Vec2, Vec2)>,
    }
    let points = |i: usize, j: usize, rule: &GaussRule| -> Vec<(Vec2, Vec2)> {
        grid.cell_points(i, j, 1.0, f64::INFINITY, rule)
            .into_iter()
            .map(|(r, th, w)| {
                let y = Vec2::polar(th) * r;
                (y, force(y) * w)
            })
            .collect()
    };
    let mut cells = Vec::new();
    for i in 0..grid.n_r() - 1 {
        for j in 0..grid.n_theta() {
            let c = points(i, j, &coarse);
            if c.iter().all(|(_, f)| *f == Vec2::ZERO) {
                continue;
            }
            let (r0, r1) = (grid.radii()[i], grid.radii()[i + 1]);
            let tm = grid.theta(j) + 0.5 * grid.h_theta();
            cells.push(Cell {
                centre: Vec2::polar(tm) * (0.5 * (r0 + r1)),
                diam: (r1 - r0) + r1 * grid.h_theta(),
                coarse: c,
                fine: points(i, j, &fine),
            });
        }
    }
    let values: Vec<Vec2> = (0..grid.n_nodes())
        .into_par_iter()
        .map(|p| {
            let x = grid.point(p / grid.n_theta(), p % grid.n_theta());
            let mut v = Vec2::ZERO;
            for cell in &cells {
                let near = (x - cell.centre).norm() < 2.0 * cell.diam;
                for (y, fw) in if near { &cell.fine } else { &cell.coarse } {
                    if let Ok(u) = kernel.eval(x - *y) {
                        v += u * *fw;
                    }
                }
            }
            v
        })
        .collect();
    DiscreteField::new(grid.clone(), values)
}

/// Reference tensor `C₀` of the iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ReferenceTensor {
    /// `μₑ` times the identity on Sym.
    SymIdentity,
    /// `μₑ δ_ih δ_jk`, the identity on all of Lin.
    LinIdentity,
}

#[derive(Debug, Clone, Copy)]
pub struct ContractionOptions {
    pub reference: ReferenceTensor,
    pub q: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ContractionOptions {
    fn default() -> Self {
        Self {
            reference: ReferenceTensor::SymIdentity,
            q: 2.0,
            tol: 1e-10,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ContractionReport {
    pub solution: DiscreteField,
    /// `‖v_{k+1} − v_k‖ / ‖v_k − v_{k−1}‖` in the `D^{1,q}` seminorm.
    pub factors: Vec<f64>,
    pub iterations: usize,
    /// `(μₑ − μ₀)/μₑ`.
    pub contrast: f64,
    pub reference: ReferenceTensor,
}

fn seminorm(grid: &Arc<PolarGrid>, w: Vec<Vec2>, q: f64) -> Result<f64> {
    let f = DiscreteField::new(grid.clone(), w)?;
    Ok(
        f.integrate(1.0, grid.r_max(), 3, |p| p.weight * p.grad.norm().powf(q))
            .powf(1.0 / q),
    )
}

pub fn contraction_solve(
    problem: &VariationalProblem,
    grid: &Arc<PolarGrid>,
    opts: &ContractionOptions,
) -> Result<ContractionReport> {
    let (mu0, mue) = problem.bounds();
    let contrast = (mue - mu0) / mue;
    if !(contrast < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "contrast {contrast} must be below 1"
        )));
    }
    if !(opts.q > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "q = {} must exceed 1",
            opts.q
        )));
    }
    let kc = Stiffness::for_field(grid, problem.field.as_ref())?;
    let lin0 = match opts.reference {
        ReferenceTensor::SymIdentity => ElasticityTensor::scaled_identity(mue).lin_matrix(),
        ReferenceTensor::LinIdentity => {
            let mut m = [[0.0; 4]; 4];
            for (k, row) in m.iter_mut().enumerate() {
                row[k] = mue;
            }
            m
        }
    };
    let k0 = Stiffness::assemble(grid, &|_| Ok(lin0))?;
    let layout = DofLayout::new(grid, problem);
    let load = load_vector(grid, problem.force.as_ref());
    let ku_d = kc.apply(&layout.lift);
    let b: Vec<Vec2> = load.iter().zip(&ku_d).map(|(f, a)| *f - *a).collect();
    let solver = FreeSolver::new(&k0, &layout)?;

    let mut v = vec![0.0; layout.n_free];
    let mut factors = Vec::new();
    let mut prev: Option<f64> = None;
    let mut first = 0.0;
    let mut above_one = 0;
    for k in 1..=opts.max_iter {
        let full = layout.scatter_homogeneous(&v);
        let (a, c) = (kc.apply(&full), k0.apply(&full));
        let rhs: Vec<Vec2> = b
            .iter()
            .zip(a.iter().zip(&c))
            .map(|(b, (a, c))| *b - (*a - *c))
            .collect();
        let next = solver.solve(&layout.gather(&rhs));
        let diff: Vec<f64> = next.iter().zip(&v).map(|(x, y)| x - y).collect();
        let s = seminorm(grid, layout.scatter_homogeneous(&diff), opts.q)?;
        v = next;
        if k == 1 {
            first = s;
        }
        if let Some(p) = prev {
            if p > 0.0 {
                let f = s / p;
                factors.push(f);
                above_one = if f > 1.0 { above_one + 1 } else { 0 };
                if above_one >= 3 {
                    return Err(Error::NotContracting { factors });
                }
            }
        }
        if k > 1 && s <= opts.tol * first {
            let solution = DiscreteField::new(grid.clone(), layout.scatter(&v))?;
            return Ok(ContractionReport {
                solution,
                factors,
                iterations: k - 1,
                contrast,
                reference: opts.reference,
            });
        }
        if first == 0.0 {
            let solution = DiscreteField::new(grid.clone(), layout.scatter(&v))?;
            return Ok(ContractionReport {
                solution,
                factors,
                iterations: k,
                contrast,
                reference: opts.reference,
            });
        }
        prev = Some(s);
    }
    Err(Error::SolverDiverged(format!(
        "fixed-point iteration did not reach tolerance {} in {} steps",
        opts.tol, opts.max_iter
    )))
}
