//! Bilinear finite elements on the polar grid, Cartesian nodal components.
//!
//! Unknown `2p + c` is component `c` of node `p`. The inner ring carries
//! Dirichlet data; the outer ring is Dirichlet or traction free.

use std::fmt;
use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Llt;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use rayon::prelude::*;

use super::grid::{DiscreteField, GaussRule, PolarGrid};
use crate::error::{Error, Result};
use crate::tensor::{ElasticityField, Mat2, Vec2};

pub type VectorFn = Arc<dyn Fn(Vec2) -> Vec2 + Send + Sync>;

/// Components `C_ijhk` at `x` as a 4×4 matrix on Lin (row `2i+j`, column `2h+k`).
pub(crate) type LinFn<'a> = dyn Fn(Vec2) -> Result<[[f64; 4]; 4]> + Sync + 'a;

#[derive(Clone)]
pub enum OuterCondition {
    Dirichlet(VectorFn),
    TractionFree,
}

#[derive(Clone)]
pub struct VariationalProblem {
    pub field: Arc<dyn ElasticityField>,
    pub inner: VectorFn,
    pub outer: OuterCondition,
    pub force: Option<VectorFn>,
}

impl fmt::Debug for VariationalProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VariationalProblem")
            .field("bounds", &self.field.bounds())
            .field(
                "outer_dirichlet",
                &matches!(self.outer, OuterCondition::Dirichlet(_)),
            )
            .field("force", &self.force.is_some())
            .finish()
    }
}

impl VariationalProblem {
    pub fn new(
        field: Arc<dyn ElasticityField>,
        inner: VectorFn,
        outer: OuterCondition,
    ) -> Result<Self> {
        let (lo, hi) = field.bounds();
        if !(lo > 0.0) || !(hi >= lo) || !hi.is_finite() {
            return Err(Error::InvalidBounds {
                lower: lo,
                upper: hi,
            });
        }
        Ok(Self {
            field,
            inner,
            outer,
            force: None,
        })
    }

    /// Homogeneous inner data.
    pub fn clamped(field: Arc<dyn ElasticityField>, outer: OuterCondition) -> Result<Self> {
        Self::new(field, Arc::new(|_| Vec2::ZERO), outer)
    }

    pub fn with_force(mut self, force: VectorFn) -> Self {
        self.force = Some(force);
        self
    }

    pub fn bounds(&self) -> (f64, f64) {
        self.field.bounds()
    }

    fn check_force_support(&self, grid: &PolarGrid) -> Result<()> {
        let Some(f) = &self.force else { return Ok(()) };
        let half = 0.5 * grid.r_max();
        for (i, &r) in grid.radii().iter().enumerate() {
            if r < half {
                continue;
            }
            for j in 0..grid.n_theta() {
                if f(grid.point(i, j)) != Vec2::ZERO {
                    return Err(Error::InvalidParameter(format!(
                        "volume force must vanish for r ≥ R_max/2 = {half}, nonzero at r = {r}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Assembled operator in 3×3 node-neighbour blocks; `blocks[p][3(di+1) + dj+1]`
/// couples node `p = (i, j)` to `(i+di, j+dj)`.
pub(crate) struct Stiffness {
    grid: Arc<PolarGrid>,
    blocks: Vec<[Mat2; 9]>,
}

const LOCAL: [(usize, usize); 4] = [(0, 0), (1, 0), (0, 1), (1, 1)];

impl Stiffness {
    pub fn assemble(grid: &Arc<PolarGrid>, lin: &LinFn<'_>) -> Result<Self> {
        let rule = GaussRule::new(3);
        let (nr, nt) = (grid.n_r(), grid.n_theta());
        let rings: Vec<Vec<[[f64; 8]; 8]>> = (0..nr - 1)
            .into_par_iter()
            .map(|i| {
                (0..nt)
                    .map(|j| {
                        let mut ke = [[0.0; 8]; 8];
                        for (r, th, w) in grid.cell_points(i, j, 1.0, f64::INFINITY, &rule) {
                            let c = lin(Vec2::polar(th) * r)?;
                            let (_, g) = grid.shape(i, j, r, th);
                            for a in 0..4 {
                                for b in 0..4 {
                                    for ci in 0..2 {
                                        for ck in 0..2 {
                                            let mut s = 0.0;
                                            for cj in 0..2 {
                                                for cl in 0..2 {
                                                    s += g[a][cj]
                                                        * c[2 * ci + cj][2 * ck + cl]
                                                        * g[b][cl];
                                                }
                                            }
                                            ke[2 * a + ci][2 * b + ck] += w * s;
                                        }
                                    }
                                }
                            }
                        }
                        Ok(ke)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let mut blocks = vec![[Mat2::ZERO; 9]; grid.n_nodes()];
        for (i, ring) in rings.iter().enumerate() {
            for (j, ke) in ring.iter().enumerate() {
                for (a, &(ai, aj)) in LOCAL.iter().enumerate() {
                    let p = grid.node(i + ai, j + aj);
                    for (b, &(bi, bj)) in LOCAL.iter().enumerate() {
                        let slot = 3 * (bi + 1 - ai) + (bj + 1 - aj);
                        let blk = &mut blocks[p][slot];
                        for ci in 0..2 {
                            for ck in 0..2 {
                                blk[(ci, ck)] += ke[2 * a + ci][2 * b + ck];
                            }
                        }
                    }
                }
            }
        }
        Ok(Self {
            grid: grid.clone(),
            blocks,
        })
    }

    pub fn for_field(grid: &Arc<PolarGrid>, field: &dyn ElasticityField) -> Result<Self> {
        let (d0, de) = field.bounds();
        let tol = 1e-10 * de.abs().max(1.0);
        let lin = |x: Vec2| {
            let c = field.tensor_at(x)?;
            let (m0, me) = c.sym_eigen_range();
            if m0 < d0 - tol || me > de + tol {
                return Err(Error::BoundsViolated {
                    x: x.x(),
                    y: x.y(),
                    mu0: m0,
                    mue: me,
                    declared_mu0: d0,
                    declared_mue: de,
                });
            }
            Ok(c.lin_matrix())
        };
        Self::assemble(grid, &lin)
    }

    /// Neighbour node of `p` in `slot`, if inside the grid.
    #[inline]
    fn neighbour(&self, p: usize, slot: usize) -> Option<usize> {
        let nt = self.grid.n_theta();
        let (i, j) = (p / nt, p % nt);
        let ii = (i + slot / 3).checked_sub(1)?;
        if ii >= self.grid.n_r() {
            return None;
        }
        Some(self.grid.node(ii, j + nt + slot % 3 - 1))
    }

    pub fn apply(&self, x: &[Vec2]) -> Vec<Vec2> {
        (0..self.blocks.len())
            .into_par_iter()
            .map(|p| {
                let mut y = Vec2::ZERO;
                for s in 0..9 {
                    if let Some(q) = self.neighbour(p, s) {
                        y += self.blocks[p][s] * x[q];
                    }
                }
                y
            })
            .collect()
    }

    /// `uᵀ K u`.
    pub fn quadratic(&self, u: &[Vec2]) -> f64 {
        self.apply(u).iter().zip(u).map(|(a, b)| a.dot(*b)).sum()
    }

    /// Lower triangle of the free-free block.
    fn free_matrix(&self, layout: &DofLayout) -> Result<SparseColMat<usize, f64>> {
        let mut trips = Vec::with_capacity(layout.n_free * 18);
        for p in 0..self.blocks.len() {
            for s in 0..9 {
                let Some(q) = self.neighbour(p, s) else {
                    continue;
                };
                for c in 0..2 {
                    let Some(fp) = layout.free(2 * p + c) else {
                        continue;
                    };
                    for d in 0..2 {
                        let Some(fq) = layout.free(2 * q + d) else {
                            continue;
                        };
                        if fp >= fq {
                            trips.push(Triplet::new(fp, fq, self.blocks[p][s][(c, d)]));
                        }
                    }
                }
            }
        }
        SparseColMat::try_new_from_triplets(layout.n_free, layout.n_free, &trips)
            .map_err(|e| Error::SolverDiverged(format!("sparse assembly: {e:?}")))
    }
}

/// Free/Dirichlet split of the unknowns.
pub(crate) struct DofLayout {
    free_index: Vec<usize>,
    pub n_free: usize,
    /// Prescribed values, zero on free unknowns.
    pub lift: Vec<Vec2>,
}

impl DofLayout {
    pub fn new(grid: &PolarGrid, problem: &VariationalProblem) -> Self {
        let (nr, nt) = (grid.n_r(), grid.n_theta());
        let mut lift = vec![Vec2::ZERO; grid.n_nodes()];
        let mut fixed = vec![false; grid.n_nodes()];
        for j in 0..nt {
            let p = grid.node(0, j);
            lift[p] = (problem.inner)(grid.point(0, j));
            fixed[p] = true;
            if let OuterCondition::Dirichlet(g) = &problem.outer {
                let p = grid.node(nr - 1, j);
                lift[p] = g(grid.point(nr - 1, j));
                fixed[p] = true;
            }
        }
        let mut free_index = vec![usize::MAX; 2 * grid.n_nodes()];
        let mut n_free = 0;
        for (p, &f) in fixed.iter().enumerate() {
            if !f {
                for c in 0..2 {
                    free_index[2 * p + c] = n_free;
                    n_free += 1;
                }
            }
        }
        Self {
            free_index,
            n_free,
            lift,
        }
    }

    #[inline]
    pub fn free(&self, dof: usize) -> Option<usize> {
        let k = self.free_index[dof];
        (k != usize::MAX).then_some(k)
    }

    pub fn is_fixed(&self, node: usize) -> bool {
        self.free_index[2 * node] == usize::MAX
    }

    pub fn gather(&self, v: &[Vec2]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_free];
        for (p, x) in v.iter().enumerate() {
            for c in 0..2 {
                if let Some(f) = self.free(2 * p + c) {
                    out[f] = x[c];
                }
            }
        }
        out
    }

    /// Free values over the lift.
    pub fn scatter(&self, free: &[f64]) -> Vec<Vec2> {
        let mut out = self.lift.clone();
        for (p, x) in out.iter_mut().enumerate() {
            for c in 0..2 {
                if let Some(f) = self.free(2 * p + c) {
                    x[c] = free[f];
                }
            }
        }
        out
    }

    /// Same with a zero lift.
    pub fn scatter_homogeneous(&self, free: &[f64]) -> Vec<Vec2> {
        let mut out = vec![Vec2::ZERO; self.lift.len()];
        for (p, x) in out.iter_mut().enumerate() {
            for c in 0..2 {
                if let Some(f) = self.free(2 * p + c) {
                    x[c] = free[f];
                }
            }
        }
        out
    }
}

/// Load vector `∫ N_p f`.
pub(crate) fn load_vector(grid: &PolarGrid, force: Option<&VectorFn>) -> Vec<Vec2> {
    let mut out = vec![Vec2::ZERO; grid.n_nodes()];
    let Some(f) = force else { return out };
    let rule = GaussRule::new(3);
    for i in 0..grid.n_r() - 1 {
        for j in 0..grid.n_theta() {
            let nodes = grid.cell_nodes(i, j);
            for (r, th, w) in grid.cell_points(i, j, 1.0, f64::INFINITY, &rule) {
                let fx = f(Vec2::polar(th) * r);
                if fx == Vec2::ZERO {
                    continue;
                }
                let (n, _) = grid.shape(i, j, r, th);
                for k in 0..4 {
                    out[nodes[k]] += fx * (w * n[k]);
                }
            }
        }
    }
    out
}

/// Factored free-free block.
pub(crate) struct FreeSolver {
    llt: Llt<usize, f64>,
}

impl FreeSolver {
    pub fn new(stiffness: &Stiffness, layout: &DofLayout) -> Result<Self> {
        if layout.n_free == 0 {
            return Err(Error::GridTooCoarse("no free unknowns".into()));
        }
        let a = stiffness.free_matrix(layout)?;
        let llt = a
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::SolverDiverged(format!("Cholesky factorization failed: {e:?}")))?;
        Ok(Self { llt })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let b = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        let x = self.llt.solve(&b);
        (0..rhs.len()).map(|i| x[(i, 0)]).collect()
    }
}

#[derive(Debug, Clone)]
pub struct AnnulusSolution {
    pub field: DiscreteField,
    /// `(K u − F)` on the inner ring: nodal forces `∫ N_p s(u)` with the
    /// normal pointing into the hole.
    pub inner_reactions: Vec<Vec2>,
    /// `uᵀ K u ≈ ∫ ∇u·C[∇u]`.
    pub energy: f64,
    /// Relative residual `‖K_ff u_f − b_f‖ / ‖b_f‖` after the solve.
    pub residual: f64,
    pub problem: VariationalProblem,
}

/// Minimizes the discrete energy under the boundary conditions of `problem`.
pub fn solve_annulus(
    problem: &VariationalProblem,
    grid: &Arc<PolarGrid>,
) -> Result<AnnulusSolution> {
    problem.check_force_support(grid)?;
    let k = Stiffness::for_field(grid, problem.field.as_ref())?;
    let layout = DofLayout::new(grid, problem);
    let load = load_vector(grid, problem.force.as_ref());
    let ku_d = k.apply(&layout.lift);
    let rhs_full: Vec<Vec2> = load.iter().zip(&ku_d).map(|(f, a)| *f - *a).collect();
    let rhs = layout.gather(&rhs_full);
    let solver = FreeSolver::new(&k, &layout)?;
    let mut x = solver.solve(&rhs);
    let u = layout.scatter(&x);
    // one step of refinement against the assembled operator
    let ku = k.apply(&u);
    let res_full: Vec<Vec2> = load.iter().zip(&ku).map(|(f, a)| *f - *a).collect();
    let res = layout.gather(&res_full);
    let dx = solver.solve(&res);
    for (a, b) in x.iter_mut().zip(&dx) {
        *a += b;
    }
    let u = layout.scatter(&x);
    let ku = k.apply(&u);
    let res_full: Vec<Vec2> = load.iter().zip(&ku).map(|(f, a)| *f - *a).collect();
    let res = layout.gather(&res_full);
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let residual = norm(&res) / norm(&rhs).max(f64::MIN_POSITIVE);
    if !residual.is_finite() || (norm(&rhs) > 0.0 && residual > 1e-6) {
        return Err(Error::SolverDiverged(format!(
            "relative residual {residual:e}"
        )));
    }
    let nt = grid.n_theta();
    let inner_reactions = (0..nt).map(|j| ku[j] - load[j]).collect();
    let energy = ku.iter().zip(&u).map(|(a, b)| a.dot(*b)).sum();
    Ok(AnnulusSolution {
        field: DiscreteField::new(grid.clone(), u)?,
        inner_reactions,
        energy,
        residual,
        problem: problem.clone(),
    })
}

/// `½ uᵀKu − F·u`, the functional minimized by [`solve_annulus`].
pub fn discrete_energy(problem: &VariationalProblem, u: &DiscreteField) -> Result<f64> {
    let grid = u.grid();
    let k = Stiffness::for_field(grid, problem.field.as_ref())?;
    let load = load_vector(grid, problem.force.as_ref());
    let f_u: f64 = load.iter().zip(u.values()).map(|(a, b)| a.dot(*b)).sum();
    Ok(0.5 * k.quadratic(u.values()) - f_u)
}

/// Whether `u` matches the Dirichlet values of `problem` at the nodes.
pub fn is_admissible(problem: &VariationalProblem, u: &DiscreteField, tol: f64) -> bool {
    let layout = DofLayout::new(u.grid(), problem);
    u.values()
        .iter()
        .enumerate()
        .all(|(p, v)| !layout.is_fixed(p) || (*v - layout.lift[p]).norm() <= tol)
}
