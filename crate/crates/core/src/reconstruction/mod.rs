//! Vertex positions from NRIC: spanning-tree frame traversal followed by Gauss–Newton refinement.

mod frames;
mod refine;
mod tree;

pub use frames::{default_root, local_edge_vectors, traverse_reconstruct, FrameSeed, TraversalOutcome, REORTHONORMALIZE_EVERY};
pub use refine::{quadratic_residual, variational_refine, weighted_residual, RefineOutcome};
pub use tree::{build_tree, edge_weights, preassembled_weights, TraversalTree, TreeStrategy, WEIGHT_SENTINEL};

use std::fmt;

use nalgebra::{Matrix3, Vector3};

use crate::energy::{MaterialParameters, QuadraticWeights, WeightRecipe};
use crate::error::{Error, Result};
use crate::forward::{nric_from_positions, wrap_angle};
use crate::integrability::ConstraintSystem;
use crate::mesh::{NricVector, SimplicialSurface, VertexPositions};

/// Rotation and centroids of the best rigid alignment of `a` onto `b` (Kabsch, no scaling).
fn kabsch(a: &VertexPositions, b: &VertexPositions) -> (Matrix3<f64>, Vector3<f64>, Vector3<f64>) {
    let n = a.len() as f64;
    let ca = a.as_slice().iter().sum::<Vector3<f64>>() / n;
    let cb = b.as_slice().iter().sum::<Vector3<f64>>() / n;
    let mut h = Matrix3::zeros();
    for (p, q) in a.as_slice().iter().zip(b.as_slice()) {
        h += (p - ca) * (q - cb).transpose();
    }
    let svd = h.svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut d = Matrix3::identity();
    if (vt.transpose() * u.transpose()).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    (vt.transpose() * d * u.transpose(), ca, cb)
}

/// `a` moved rigidly to best match `b`.
pub fn align_rigidly(a: &VertexPositions, b: &VertexPositions) -> VertexPositions {
    let (r, ca, cb) = kabsch(a, b);
    VertexPositions::new(a.as_slice().iter().map(|p| r * (p - ca) + cb).collect())
}

/// Root-mean-square distance between `a` and `b` after the best rigid alignment of `a` onto `b`.
pub fn procrustes_rms(a: &VertexPositions, b: &VertexPositions) -> f64 {
    let aligned = align_rigidly(a, b);
    let sum: f64 = aligned.as_slice().iter().zip(b.as_slice()).map(|(p, q)| (p - q).norm_squared()).sum();
    (sum / a.len() as f64).sqrt()
}

#[derive(Debug, Clone)]
pub struct ReconstructOptions {
    pub strategy: TreeStrategy,
    /// Gauss–Newton steps after the traversal.
    pub gn_steps: usize,
    /// `δ` weights the angle residuals of the refinement.
    pub params: MaterialParameters,
    /// Root frame; by default the most integrable face with an identity frame at the origin.
    pub seed: Option<FrameSeed>,
    /// Samples whose weights are maximized for the preassembled tree. The input itself is
    /// always included.
    pub samples: Vec<Vec<f64>>,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        ReconstructOptions {
            strategy: TreeStrategy::Mst,
            gn_steps: 1,
            params: MaterialParameters::default(),
            seed: None,
            samples: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReconstructionReport {
    pub strategy: TreeStrategy,
    pub root: usize,
    /// Largest and mean rotation residual `|tr I_v − 3|` over interior vertices.
    pub max_violation: f64,
    pub mean_violation: f64,
    pub degenerate_faces: Vec<usize>,
    pub max_mismatch: f64,
    pub frame_error: f64,
    /// `W_q[z, Z(X)]` after the traversal and after refinement.
    pub residual_traversal: f64,
    pub residual_final: f64,
    pub gn_steps: usize,
    /// `‖Z(X) − z‖_∞` with wrapped angle differences; infinite for a degenerate result.
    pub nric_error: f64,
    /// Visiting position per face.
    pub traversal_rank: Vec<usize>,
}

impl fmt::Display for ReconstructionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "strategy = {}", self.strategy)?;
        writeln!(f, "root_face = {}", self.root)?;
        writeln!(f, "max_rotation_residual = {:e}", self.max_violation)?;
        writeln!(f, "mean_rotation_residual = {:e}", self.mean_violation)?;
        writeln!(f, "degenerate_faces = {}", self.degenerate_faces.len())?;
        writeln!(f, "max_vertex_mismatch = {:e}", self.max_mismatch)?;
        writeln!(f, "frame_orthogonality_error = {:e}", self.frame_error)?;
        writeln!(f, "residual_traversal = {:e}", self.residual_traversal)?;
        writeln!(f, "residual_final = {:e}", self.residual_final)?;
        writeln!(f, "gauss_newton_steps = {}", self.gn_steps)?;
        write!(f, "nric_error = {:e}", self.nric_error)
    }
}

/// `‖Z(X) − z‖_∞`, comparing angles modulo `2π`.
pub fn nric_error(surface: &SimplicialSurface, z: &[f64], x: &VertexPositions) -> f64 {
    let Ok(zx) = nric_from_positions(surface, x) else {
        return f64::INFINITY;
    };
    let ne = surface.edge_count();
    zx.as_slice()
        .iter()
        .zip(z)
        .enumerate()
        .map(|(i, (a, b))| if i < ne { (a - b).abs() } else { wrap_angle(a - b).abs() })
        .fold(0.0, f64::max)
}

/// Refinement weights from `z`, falling back to unit weights where `z` has no valid areas.
fn refine_weights(surface: &SimplicialSurface, z: &[f64]) -> QuadraticWeights {
    NricVector::from_flat(surface, z.to_vec())
        .and_then(|r| QuadraticWeights::from_reference(surface, &r, WeightRecipe::InverseLength))
        .unwrap_or_else(|_| QuadraticWeights::unit(surface))
}

/// Edge weights, spanning tree, traversal and `gn_steps` Gauss–Newton steps.
pub fn reconstruct(surface: &SimplicialSurface, z: &[f64], options: &ReconstructOptions) -> Result<(VertexPositions, ReconstructionReport)> {
    if z.len() != surface.nric_dim() {
        return Err(Error::DimensionMismatch {
            expected: surface.nric_dim(),
            actual: z.len(),
        });
    }
    let system = ConstraintSystem::new(surface);
    let residuals = system.rotation_residual(&NricVector::from_flat(surface, z.to_vec())?);
    let max_violation = residuals.iter().copied().fold(0.0, f64::max);
    let mean_violation = if residuals.is_empty() {
        0.0
    } else {
        residuals.iter().sum::<f64>() / residuals.len() as f64
    };
    let weights = match options.strategy {
        TreeStrategy::Preassembled => {
            let mut all = options.samples.clone();
            all.push(z.to_vec());
            preassembled_weights(&system, &all)?
        }
        _ => edge_weights(&system, z),
    };
    let seed = options.seed.unwrap_or_else(|| FrameSeed::at_face(default_root(&system, z)));
    let tree = build_tree(surface, &weights, options.strategy, seed.face)?;
    let traversal = traverse_reconstruct(surface, z, &tree, &seed)?;
    let qw = refine_weights(surface, z);
    let residual_traversal = quadratic_residual(surface, z, &traversal.positions, &qw, &options.params);
    let (positions, gn_steps, residual_final) = if options.gn_steps > 0 && traversal.positions.first_degenerate_face(surface).is_none() {
        let r = variational_refine(surface, z, &traversal.positions, &qw, &options.params, options.gn_steps)?;
        let last = *r.history.last().unwrap();
        (r.positions, r.steps, last)
    } else {
        (traversal.positions.clone(), 0, residual_traversal)
    };
    let report = ReconstructionReport {
        strategy: options.strategy,
        root: seed.face,
        max_violation,
        mean_violation,
        degenerate_faces: traversal.degenerate_faces.clone(),
        max_mismatch: traversal.max_mismatch(),
        frame_error: traversal.frame_error,
        residual_traversal,
        residual_final,
        gn_steps,
        nric_error: nric_error(surface, z, &positions),
        traversal_rank: tree.rank(),
    };
    Ok((positions, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;
    use nalgebra::Rotation3;

    #[test]
    fn procrustes_ignores_rigid_motions() {
        let s = generators::icosahedron();
        let r = Rotation3::from_euler_angles(0.4, 1.0, -0.3);
        let moved = s.map_positions(|p| r * p + Vector3::new(3.0, -1.0, 2.0));
        assert!(procrustes_rms(&s.positions, &moved.positions) < 1e-14);
        let scaled = s.map_positions(|p| 1.1 * p);
        assert!(procrustes_rms(&s.positions, &scaled.positions) > 1e-3);
        let back = align_rigidly(&moved.positions, &s.positions);
        let err = (0..back.len()).map(|v| (back[v] - s.positions[v]).norm()).fold(0.0, f64::max);
        assert!(err < 1e-14);
    }

    #[test]
    fn pipeline_round_trip_and_report() {
        let s = generators::bumpy_plate(6);
        let z = nric_from_positions(&s.surface, &s.positions).unwrap().into_vec();
        for strategy in [TreeStrategy::Bfs, TreeStrategy::Mst, TreeStrategy::Spt, TreeStrategy::Preassembled] {
            let options = ReconstructOptions {
                strategy,
                ..Default::default()
            };
            let (x, report) = reconstruct(&s.surface, &z, &options).unwrap();
            assert!(report.nric_error < 1e-8);
            assert!(procrustes_rms(&x, &s.positions) < 1e-8 * s.positions.diameter());
            assert!(report.max_violation < 1e-20);
            let text = report.to_string();
            assert!(text.contains(&format!("strategy = {strategy}")));
        }
    }

    #[test]
    fn hybrid_beats_plain_breadth_first_on_crossed_folds() {
        let a = generators::folded_plate(8, 0.6, 0);
        let b = generators::folded_plate(8, 0.6, 1);
        let s = &a.surface;
        let za = nric_from_positions(s, &a.positions).unwrap().into_vec();
        let zb = nric_from_positions(s, &b.positions).unwrap().into_vec();
        let blend: Vec<f64> = za.iter().zip(&zb).map(|(p, q)| 0.5 * (p + q)).collect();
        let bfs = ReconstructOptions {
            strategy: TreeStrategy::Bfs,
            gn_steps: 0,
            ..Default::default()
        };
        let hybrid = ReconstructOptions {
            strategy: TreeStrategy::Mst,
            gn_steps: 1,
            ..Default::default()
        };
        let (_, rb) = reconstruct(s, &blend, &bfs).unwrap();
        let (_, rh) = reconstruct(s, &blend, &hybrid).unwrap();
        assert!(rb.max_violation > 1e-6);
        assert!(rh.residual_final <= rb.residual_final, "{} vs {}", rh.residual_final, rb.residual_final);
    }
}
