use crate::energy::{MaterialParameters, QuadraticWeights};
use crate::error::{Error, Result};
use crate::forward::{forward_jacobian, nric_from_positions, wrap_angle};
use crate::mesh::{SimplicialSurface, VertexPositions};
use crate::sparse::{CholeskySolver, Triplets};

/// Weighted residual `(√α (l(X) − l), δ √β (θ(X) − θ))`; angle differences are wrapped.
/// `None` when a face of `x` is degenerate.
pub fn weighted_residual(
    surface: &SimplicialSurface,
    target: &[f64],
    x: &VertexPositions,
    weights: &QuadraticWeights,
    params: &MaterialParameters,
) -> Option<Vec<f64>> {
    let z = nric_from_positions(surface, x).ok()?.into_vec();
    let ne = surface.edge_count();
    Some(
        (0..z.len())
            .map(|i| {
                if i < ne {
                    weights.alpha[i].sqrt() * (z[i] - target[i])
                } else {
                    params.delta * weights.beta[i - ne].sqrt() * wrap_angle(z[i] - target[i])
                }
            })
            .collect(),
    )
}

/// `W_q[target, Z(X)]`, or `+∞` for degenerate `X`.
pub fn quadratic_residual(
    surface: &SimplicialSurface,
    target: &[f64],
    x: &VertexPositions,
    weights: &QuadraticWeights,
    params: &MaterialParameters,
) -> f64 {
    weighted_residual(surface, target, x, weights, params).map_or(f64::INFINITY, |r| r.iter().map(|v| v * v).sum())
}

#[derive(Debug, Clone)]
pub struct RefineOutcome {
    pub positions: VertexPositions,
    /// Objective before the first and after every accepted step.
    pub history: Vec<f64>,
    pub steps: usize,
}

/// Gauss–Newton on `W_q[target, Z(X)]` with Tikhonov damping `ρ = 1e−8 · tr(JᵀJ) / dim` to
/// absorb the rigid-motion kernel. Steps are halved until the objective does not increase and
/// no face degenerates.
pub fn variational_refine(
    surface: &SimplicialSurface,
    target: &[f64],
    x0: &VertexPositions,
    weights: &QuadraticWeights,
    params: &MaterialParameters,
    max_iter: usize,
) -> Result<RefineOutcome> {
    if let Some(face) = x0.first_degenerate_face(surface) {
        return Err(Error::DegenerateFace { face });
    }
    let n = 3 * surface.vertex_count();
    let ne = surface.edge_count();
    let scale: Vec<f64> = (0..surface.nric_dim())
        .map(|i| {
            if i < ne {
                weights.alpha[i].sqrt()
            } else {
                params.delta * weights.beta[i - ne].sqrt()
            }
        })
        .collect();
    let mut x = x0.clone();
    let mut r = weighted_residual(surface, target, &x, weights, params).expect("checked above");
    let mut value: f64 = r.iter().map(|v| v * v).sum();
    let mut history = vec![value];
    let mut chol = CholeskySolver::new();
    let mut steps = 0;
    for _ in 0..max_iter {
        if value == 0.0 {
            break;
        }
        let jt = forward_jacobian(surface, &x).transpose();
        let mut t = Triplets::with_capacity(n, n, 144 * surface.nric_dim());
        let mut g = vec![0.0; n];
        for row in 0..jt.ncols() {
            let entries: Vec<(usize, f64)> = jt.column(row).collect();
            let s = scale[row];
            for &(i, a) in &entries {
                g[i] += s * a * r[row];
                for &(j, b) in &entries {
                    t.push(i, j, s * s * a * b);
                }
            }
        }
        for i in 0..n {
            t.push(i, i, 0.0);
        }
        let jtj = t.to_csc();
        let rho = 1e-8 * jtj.diagonal().iter().sum::<f64>() / n as f64;
        let factor = chol.factor(&jtj, rho.max(f64::MIN_POSITIVE))?;
        let d = factor.solve(&g);
        let mut alpha = 1.0;
        let mut accepted = None;
        while alpha > 1e-10 {
            let flat: Vec<f64> = x.to_flat().iter().zip(&d).map(|(p, q)| p - alpha * q).collect();
            let trial = VertexPositions::from_flat(&flat);
            if let Some(rt) = weighted_residual(surface, target, &trial, weights, params) {
                let vt: f64 = rt.iter().map(|v| v * v).sum();
                if vt <= value {
                    accepted = Some((trial, rt, vt));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((xn, rn, vn)) = accepted else { break };
        x = xn;
        r = rn;
        value = vn;
        history.push(value);
        steps += 1;
    }
    Ok(RefineOutcome {
        positions: x,
        history,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::WeightRecipe;
    use crate::generators;
    use nalgebra::Vector3;

    #[test]
    fn exact_target_leaves_positions_unchanged() {
        let shape = generators::bumpy_plate(5);
        let s = &shape.surface;
        let z = nric_from_positions(s, &shape.positions).unwrap();
        let w = QuadraticWeights::from_reference(s, &z, WeightRecipe::InverseLength).unwrap();
        let out = variational_refine(s, z.as_slice(), &shape.positions, &w, &MaterialParameters::default(), 3).unwrap();
        let moved = (0..s.vertex_count()).map(|v| (out.positions[v] - shape.positions[v]).norm()).fold(0.0, f64::max);
        assert!(moved < 1e-10);
    }

    #[test]
    fn objective_never_increases() {
        let shape = generators::bumpy_plate(5);
        let s = &shape.surface;
        let z = nric_from_positions(s, &shape.positions).unwrap();
        let w = QuadraticWeights::from_reference(s, &z, WeightRecipe::InverseLength).unwrap();
        let noisy = shape.map_positions(|p| p + Vector3::new((7.0 * p.y).sin(), (5.0 * p.x).cos(), (3.0 * p.x * p.y).sin()) * 0.02);
        let p = MaterialParameters { delta: 0.3, ..Default::default() };
        let out = variational_refine(s, z.as_slice(), &noisy.positions, &w, &p, 10).unwrap();
        assert!(out.steps > 0);
        for pair in out.history.windows(2) {
            assert!(pair[1] <= pair[0]);
        }
        assert!(*out.history.last().unwrap() < 1e-6 * out.history[0]);
    }
}
