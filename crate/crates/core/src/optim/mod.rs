//! Equality-constrained minimization over NRIC with the integrability constraints.

mod config;
mod solver;

pub use config::{parse_key_values, SolverConfig};
pub use solver::{
    augmented_lagrangian, solve_constrained, AugLagState, LagrangianEval, PhaseTimings, SolveOutcome, SolveReport,
    SolveStatus,
};

use crate::error::{Error, Result};
use crate::integrability::ConstraintSystem;
use crate::sparse::{CscMatrix, Triplets};
use crate::INFEASIBLE;

/// A smooth objective on `S` stacked NRIC vectors of one connectivity.
pub trait Objective: Sync {
    /// Length of the stacked vector (`S · nric_dim`).
    fn dim(&self) -> usize;
    /// Value, or `INFEASIBLE` outside the domain.
    fn value(&self, z: &[f64]) -> f64;
    fn gradient(&self, z: &[f64]) -> Result<Vec<f64>>;
    /// Hessian triplets; the pattern must depend only on the connectivity.
    fn hessian(&self, z: &[f64]) -> Result<Triplets>;
}

/// Splits a full vector into fixed and free coordinates; fixed entries keep their base value.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableLayout {
    base: Vec<f64>,
    free: Vec<usize>,
    map: Vec<Option<usize>>,
}

impl VariableLayout {
    pub fn new(base: Vec<f64>, fixed: &[bool]) -> Self {
        assert_eq!(base.len(), fixed.len());
        let free: Vec<usize> = (0..base.len()).filter(|&i| !fixed[i]).collect();
        let mut map = vec![None; base.len()];
        for (k, &i) in free.iter().enumerate() {
            map[i] = Some(k);
        }
        VariableLayout { base, free, map }
    }

    pub fn all_free(base: Vec<f64>) -> Self {
        let n = base.len();
        Self::new(base, &vec![false; n])
    }

    pub fn full_dim(&self) -> usize {
        self.base.len()
    }

    pub fn free_dim(&self) -> usize {
        self.free.len()
    }

    pub fn free_indices(&self) -> &[usize] {
        &self.free
    }

    pub fn is_fixed(&self, i: usize) -> bool {
        self.map[i].is_none()
    }

    pub fn base(&self) -> &[f64] {
        &self.base
    }

    /// Free part of a full vector.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&i| full[i]).collect()
    }

    /// Full vector with the free entries replaced by `x`.
    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        let mut full = self.base.clone();
        for (&i, &v) in self.free.iter().zip(x) {
            full[i] = v;
        }
        full
    }

    /// Restriction of a full-space matrix to the free rows and columns.
    pub fn restrict_matrix(&self, m: CscMatrix) -> CscMatrix {
        let n = self.free_dim();
        if n == self.full_dim() {
            return m;
        }
        m.select(&self.map, n, &self.map, n)
    }
}

/// An objective, the per-shape integrability constraints and the eliminated coordinates.
pub struct ConstrainedProblem<'a> {
    objective: &'a dyn Objective,
    system: &'a ConstraintSystem<'a>,
    shapes: usize,
    layout: VariableLayout,
}

impl<'a> ConstrainedProblem<'a> {
    pub fn new(objective: &'a dyn Objective, system: &'a ConstraintSystem<'a>, layout: VariableLayout) -> Result<Self> {
        let d = system.cols();
        if layout.full_dim() != objective.dim() || d == 0 || !objective.dim().is_multiple_of(d) {
            return Err(Error::DimensionMismatch {
                expected: objective.dim(),
                actual: layout.full_dim(),
            });
        }
        Ok(ConstrainedProblem {
            objective,
            system,
            shapes: objective.dim() / d,
            layout,
        })
    }

    pub fn layout(&self) -> &VariableLayout {
        &self.layout
    }

    pub fn system(&self) -> &ConstraintSystem<'a> {
        self.system
    }

    pub fn objective(&self) -> &dyn Objective {
        self.objective
    }

    pub fn shapes(&self) -> usize {
        self.shapes
    }

    /// Number of constraint rows over all shapes.
    pub fn constraint_rows(&self) -> usize {
        self.shapes * self.system.rows()
    }

    fn shape<'z>(&self, full: &'z [f64], s: usize) -> &'z [f64] {
        let d = self.system.cols();
        &full[s * d..(s + 1) * d]
    }

    /// Strict triangle inequalities on every face and `|θ| < π` on every angle.
    pub fn feasible(&self, full: &[f64]) -> bool {
        let surface = self.system.surface();
        let ne = surface.edge_count();
        (0..self.shapes).all(|s| {
            let z = self.shape(full, s);
            z.iter().all(|v| v.is_finite())
                && surface.lengths_admissible(&z[..ne])
                && z[ne..].iter().all(|t| t.abs() < std::f64::consts::PI)
        })
    }

    /// Stacked residual of all shapes.
    pub fn residual(&self, full: &[f64]) -> Vec<f64> {
        (0..self.shapes)
            .flat_map(|s| self.system.residual_flat(self.shape(full, s)))
            .collect()
    }

    /// `DQᵀ w` in the full space.
    pub fn jacobian_transpose_mul(&self, full: &[f64], w: &[f64]) -> Vec<f64> {
        let m = self.system.rows();
        (0..self.shapes)
            .flat_map(|s| self.system.jacobian_transpose_mul(self.shape(full, s), &w[s * m..(s + 1) * m]))
            .collect()
    }

    /// Per-shape constraint Jacobians.
    pub fn jacobians(&self, full: &[f64]) -> Vec<CscMatrix> {
        (0..self.shapes)
            .map(|s| self.system.jacobian_flat(self.shape(full, s)))
            .collect()
    }

    /// `Σ w·∂²Q + μ DQᵀDQ` of every shape, block diagonal in the full space.
    pub fn constraint_hessian(&self, full: &[f64], weights: &[f64], mu: f64) -> CscMatrix {
        let m = self.system.rows();
        let blocks: Vec<CscMatrix> = (0..self.shapes)
            .map(|s| self.system.lagrangian_hessian(self.shape(full, s), &weights[s * m..(s + 1) * m], mu))
            .collect();
        if blocks.len() == 1 {
            blocks.into_iter().next().unwrap()
        } else {
            CscMatrix::block_diagonal(&blocks)
        }
    }

    /// Objective value at a free vector, with the feasibility test applied first.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        let full = self.layout.expand(x);
        if !self.feasible(&full) {
            return INFEASIBLE;
        }
        self.objective.value(&full)
    }
}
