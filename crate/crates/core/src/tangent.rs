//! Tangent space of the NRIC manifold and the infinitesimal rigidity test.

use nalgebra::{DMatrix, DVector};

use crate::energy::{DeformationEnergy, MaterialParameters, QuadraticWeights, WeightRecipe};
use crate::error::{Error, Result};
use crate::integrability::{max_violation, ConstraintSystem};
use crate::mesh::NricVector;
use crate::objectives::{solve_objective, DissimilarityObjective};
use crate::optim::{SolveOutcome, SolverConfig};

/// Default bound on `‖Q‖_∞` for a point to count as integrable.
pub const INTEGRABILITY_TOLERANCE: f64 = 1e-8;
/// `λ₀` below this multiple of `σ_max` counts as zero.
pub const RIGIDITY_THRESHOLD: f64 = 1e-7;

/// Orthonormal basis of `ker DQ(z)`, one vector per column.
#[derive(Debug, Clone)]
pub struct TangentBasis {
    pub basis: DMatrix<f64>,
    /// Rank of `DQ(z)` used to split range and kernel.
    pub rank: usize,
    pub singular_values: Vec<f64>,
}

impl TangentBasis {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }
}

/// Full SVD of `a` padded with zero rows to a square matrix, so `V` spans the whole domain.
/// Singular values are sorted in decreasing order.
fn full_svd(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.ncols();
    let rows = a.nrows().max(n);
    let mut m = DMatrix::zeros(rows, n);
    m.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("requested V");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let s = order.iter().map(|&i| svd.singular_values[i]).collect();
    let v = DMatrix::from_fn(n, n, |r, c| vt[(order[c], r)]);
    (s, v)
}

/// Kernel of `DQ(z)`, after checking that `z` is integrable to within `tolerance`.
pub fn tangent_basis(system: &ConstraintSystem, z: &[f64], tolerance: f64) -> Result<TangentBasis> {
    let residual = max_violation(&system.residual_flat(z));
    if !(residual <= tolerance) {
        return Err(Error::NotOnManifold { residual, tolerance });
    }
    let j = system.jacobian_flat(z).to_dense();
    let (s, v) = full_svd(&j);
    let n = j.ncols();
    let sigma_max = s.first().copied().unwrap_or(0.0);
    let tau = j.nrows().max(n) as f64 * f64::EPSILON * sigma_max;
    let rank = s.iter().filter(|&&x| x > tau).count();
    Ok(TangentBasis {
        basis: v.columns(rank, n - rank).into_owned(),
        rank,
        singular_values: s,
    })
}

/// Result of the rigidity test when at least one angle is selected.
#[derive(Debug, Clone)]
pub struct RigidityReport {
    /// Smallest singular value of `(B_T | B_θ)`.
    pub lambda0: f64,
    pub sigma_max: f64,
    /// Dimension of the tangent space.
    pub kernel_dim: usize,
    /// Number of angle columns taken into account.
    pub candidate_angles: usize,
    /// Infinitesimal isometric variation, present when `λ₀ < threshold · σ_max`. Scaled so the
    /// largest angle component is one; the length part is zero up to roundoff.
    pub variation: Option<Vec<f64>>,
    /// Interior edges whose angle changes under the variation (relative size above 1e-8).
    pub support: Vec<usize>,
    pub threshold: f64,
}

impl RigidityReport {
    pub fn normalized_lambda0(&self) -> f64 {
        if self.sigma_max > 0.0 {
            self.lambda0 / self.sigma_max
        } else {
            0.0
        }
    }

    pub fn is_flexible(&self) -> bool {
        self.variation.is_some()
    }
}

#[derive(Debug, Clone)]
pub enum RigidityOutcome {
    /// The selector excluded every angle, so there is nothing to test.
    NoCandidateSubspace { kernel_dim: usize },
    Tested(RigidityReport),
}

/// Smallest singular value of the tangent basis augmented by the angle coordinate directions
/// selected by `selector` (one flag per interior edge; `None` selects all). A zero value means
/// some tangent vector changes only the selected angles and leaves every length fixed.
pub fn rigidity_test(system: &ConstraintSystem, z: &[f64], selector: Option<&[bool]>, threshold: f64) -> Result<RigidityOutcome> {
    let surface = system.surface();
    let ne = surface.edge_count();
    let nint = surface.interior_edge_count();
    if let Some(sel) = selector {
        if sel.len() != nint {
            return Err(Error::DimensionMismatch {
                expected: nint,
                actual: sel.len(),
            });
        }
    }
    let tangent = tangent_basis(system, z, INTEGRABILITY_TOLERANCE)?;
    let slots: Vec<usize> = (0..nint).filter(|&s| selector.is_none_or(|sel| sel[s])).collect();
    if slots.is_empty() {
        return Ok(RigidityOutcome::NoCandidateSubspace {
            kernel_dim: tangent.dim(),
        });
    }
    let n = z.len();
    let k = tangent.dim();
    let mut m = DMatrix::zeros(n, k + slots.len());
    m.columns_mut(0, k).copy_from(&tangent.basis);
    for (c, &s) in slots.iter().enumerate() {
        m[(ne + s, k + c)] = 1.0;
    }
    let (sv, v) = full_svd(&m);
    let lambda0 = *sv.last().unwrap();
    let sigma_max = sv[0];
    let (variation, support) = if lambda0 < threshold * sigma_max {
        let y = v.column(v.ncols() - 1);
        let a = y.rows(0, k);
        let mut w: DVector<f64> = &tangent.basis * a;
        let peak = w.rows(ne, nint).amax();
        if peak > 0.0 {
            w /= peak * w.rows(ne, nint).iter().find(|x| x.abs() == peak).unwrap().signum();
        }
        let support = surface
            .interior_edges()
            .iter()
            .enumerate()
            .filter(|(s, _)| w[ne + s].abs() > 1e-8)
            .map(|(_, &e)| e)
            .collect();
        (Some(w.as_slice().to_vec()), support)
    } else {
        (None, Vec::new())
    };
    Ok(RigidityOutcome::Tested(RigidityReport {
        lambda0,
        sigma_max,
        kernel_dim: k,
        candidate_angles: slots.len(),
        variation,
        support,
        threshold,
    }))
}

/// One step `z + h·(0, w_θ)` along an isometric variation, projected back onto the manifold by
/// minimizing the quadratic energy to the stepped point. Lengths stay at their values in `z`.
pub fn extrapolate(
    system: &ConstraintSystem,
    z: &[f64],
    variation: &[f64],
    step: f64,
    params: &MaterialParameters,
    config: &SolverConfig,
) -> Result<SolveOutcome> {
    let surface = system.surface();
    let ne = surface.edge_count();
    let mut stepped = z.to_vec();
    for i in ne..z.len() {
        stepped[i] += step * variation[i];
    }
    let reference = NricVector::from_flat(surface, z.to_vec())?;
    let weights = QuadraticWeights::from_reference(surface, &reference, WeightRecipe::InverseLength)?;
    let energy = DeformationEnergy::quadratic(surface, *params, weights);
    let objective = DissimilarityObjective::new(energy, stepped.clone())?;
    let fixed: Vec<bool> = (0..z.len()).map(|i| i < ne).collect();
    solve_objective(&objective, system, stepped, &fixed, config)
}
