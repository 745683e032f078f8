//! The integrability map: one quaternion closure condition per interior vertex.
//!
//! Around an interior vertex with fan faces `f_0 … f_{n−1}`, crossing `edges[i]` from `f_i` into
//! `f_{i+1}` contributes `q̂(θ, a, b, c)` with `θ` the dihedral angle of the crossed edge, `a` its
//! length, `b` the length of the next spoke and `c` the length of the edge of `f_{i+1}` opposite
//! the vertex. The closure residual is the vector part of the ordered product.

use std::sync::OnceLock;

use rayon::prelude::*;

use crate::mesh::{triangle_admissible, NricVector, SimplicialSurface};
use crate::quaternion::{Quaternion, QuaternionJet, TransitionQuaternion};
use crate::sparse::{CscMatrix, Triplets};
use crate::INFEASIBLE;

/// Rotation residual assigned to fans whose lengths violate a triangle inequality.
pub const ROTATION_RESIDUAL_SENTINEL: f64 = 1e6;

/// Per-fan variable indices into the flat NRIC vector.
#[derive(Debug, Clone)]
struct FanLayout {
    /// For transition `k`: `[θ(e_k), l(e_k), l(e_{k+1}), l(opp_{k+1})]`.
    transitions: Vec<[usize; 4]>,
    /// Faces of the fan, used for the admissibility check.
    faces: Vec<usize>,
    /// Sorted distinct coordinates the fan depends on.
    vars: Vec<usize>,
    /// Position in `vars` of each entry of `transitions`.
    local: Vec<[usize; 4]>,
}

/// Evaluates the integrability residual and its first two derivatives.
#[derive(Debug, Clone)]
pub struct ConstraintSystem<'a> {
    surface: &'a SimplicialSurface,
    fans: Vec<FanLayout>,
    /// Second-derivative pattern, built on first use.
    pattern: OnceLock<HessianPattern>,
}

/// CSC pattern of the union of all fan blocks, plus the value slot of every block entry.
#[derive(Debug, Clone)]
struct HessianPattern {
    colptr: Vec<usize>,
    rowind: Vec<usize>,
    /// Per fan, row-major over its `vars × vars` block.
    slots: Vec<Vec<u32>>,
}

/// Dense local derivative data of one fan.
struct FanJet {
    vars: Vec<usize>,
    /// `∂ vec(P) / ∂ vars[j]`.
    grad: Vec<[f64; 3]>,
}

impl<'a> ConstraintSystem<'a> {
    pub fn new(surface: &'a SimplicialSurface) -> Self {
        let fans = surface
            .fans()
            .iter()
            .map(|fan| {
                let n = fan.valence();
                let transitions = (0..n)
                    .map(|k| {
                        let next = (k + 1) % n;
                        [
                            surface.angle_index(fan.edges[k]).expect("fan edges are interior"),
                            surface.length_index(fan.edges[k]),
                            surface.length_index(fan.edges[next]),
                            surface.length_index(fan.opposite[next]),
                        ]
                    })
                    .collect::<Vec<[usize; 4]>>();
                let mut vars: Vec<usize> = transitions.iter().flatten().copied().collect();
                vars.sort_unstable();
                vars.dedup();
                let local = transitions
                    .iter()
                    .map(|t| t.map(|v| vars.binary_search(&v).expect("collected above")))
                    .collect();
                FanLayout {
                    transitions,
                    faces: fan.faces.clone(),
                    vars,
                    local,
                }
            })
            .collect();
        ConstraintSystem {
            surface,
            fans,
            pattern: OnceLock::new(),
        }
    }

    pub fn surface(&self) -> &'a SimplicialSurface {
        self.surface
    }

    /// Number of residual rows, `3·|interior vertices|`.
    pub fn rows(&self) -> usize {
        3 * self.fans.len()
    }

    pub fn cols(&self) -> usize {
        self.surface.nric_dim()
    }

    fn fan_admissible(&self, fan: &FanLayout, z: &[f64]) -> bool {
        let l = &z[..self.surface.edge_count()];
        fan.faces
            .iter()
            .all(|&f| triangle_admissible(self.surface.face_lengths(f, l)))
    }

    fn transitions(&self, fan: &FanLayout, z: &[f64]) -> Vec<TransitionQuaternion> {
        fan.transitions
            .iter()
            .map(|t| TransitionQuaternion {
                theta: z[t[0]],
                a: z[t[1]],
                b: z[t[2]],
                c: z[t[3]],
            })
            .collect()
    }

    /// Ordered loop product of fan `r`, or `None` when a face of the fan is inadmissible.
    pub fn loop_product(&self, r: usize, z: &[f64]) -> Option<Quaternion> {
        let fan = &self.fans[r];
        if !self.fan_admissible(fan, z) {
            return None;
        }
        Some(
            self.transitions(fan, z)
                .iter()
                .fold(Quaternion::ONE, |p, q| p * q.value()),
        )
    }

    /// `Q(z)`; blocks of fans with an inadmissible face hold the `INFEASIBLE` sentinel.
    pub fn residual(&self, z: &NricVector) -> Vec<f64> {
        self.residual_flat(z.as_slice())
    }

    pub fn residual_flat(&self, z: &[f64]) -> Vec<f64> {
        let blocks: Vec<[f64; 3]> = (0..self.fans.len())
            .into_par_iter()
            .map(|r| match self.loop_product(r, z) {
                Some(p) => [p.x, p.y, p.z],
                None => [INFEASIBLE; 3],
            })
            .collect();
        blocks.into_iter().flatten().collect()
    }

    /// `|tr I_v − 3| = 4‖vec(P_v)‖²` per interior vertex, in fan order.
    pub fn rotation_residual(&self, z: &NricVector) -> Vec<f64> {
        (0..self.fans.len())
            .into_par_iter()
            .map(|r| match self.loop_product(r, z.as_slice()) {
                Some(p) => 4.0 * p.vec().norm_squared() / p.norm_squared(),
                None => ROTATION_RESIDUAL_SENTINEL,
            })
            .collect()
    }

    fn fan_jets(&self, fan: &FanLayout, z: &[f64]) -> (Vec<QuaternionJet>, Vec<Quaternion>, Vec<Quaternion>) {
        let jets: Vec<QuaternionJet> = self.transitions(fan, z).iter().map(|t| t.jet()).collect();
        let n = jets.len();
        // prefix[k] = q_0 ⋯ q_{k−1}, suffix[k] = q_{k+1} ⋯ q_{n−1}
        let mut prefix = vec![Quaternion::ONE; n];
        for k in 1..n {
            prefix[k] = prefix[k - 1] * jets[k - 1].value;
        }
        let mut suffix = vec![Quaternion::ONE; n];
        for k in (0..n - 1).rev() {
            suffix[k] = jets[k + 1].value * suffix[k + 1];
        }
        (jets, prefix, suffix)
    }

    fn fan_gradient(&self, fan: &FanLayout, z: &[f64]) -> FanJet {
        let (jets, prefix, suffix) = self.fan_jets(fan, z);
        let mut grad = vec![[0.0; 3]; fan.vars.len()];
        for (k, jet) in jets.iter().enumerate() {
            for a in 0..4 {
                let d = prefix[k] * jet.grad[a] * suffix[k];
                let g = &mut grad[fan.local[k][a]];
                g[0] += d.x;
                g[1] += d.y;
                g[2] += d.z;
            }
        }
        FanJet {
            vars: fan.vars.clone(),
            grad,
        }
    }

    /// Sparse `DQ(z)`, `rows() × cols()`. Every structurally nonzero entry is stored, even when
    /// its value vanishes, so the pattern depends on the connectivity only.
    pub fn jacobian(&self, z: &NricVector) -> CscMatrix {
        self.jacobian_flat(z.as_slice())
    }

    pub fn jacobian_flat(&self, z: &[f64]) -> CscMatrix {
        let blocks: Vec<FanJet> = self
            .fans
            .par_iter()
            .map(|fan| self.fan_gradient(fan, z))
            .collect();
        let nnz = blocks.iter().map(|b| 3 * b.vars.len()).sum();
        let mut t = Triplets::with_capacity(self.rows(), self.cols(), nnz);
        for (r, b) in blocks.iter().enumerate() {
            for (&v, g) in b.vars.iter().zip(&b.grad) {
                for (m, &gm) in g.iter().enumerate() {
                    t.push(3 * r + m, v, gm);
                }
            }
        }
        t.to_csc()
    }

    /// `DQ(z)ᵀ w` without assembling the matrix.
    pub fn jacobian_transpose_mul(&self, z: &[f64], w: &[f64]) -> Vec<f64> {
        assert_eq!(w.len(), self.rows());
        let blocks: Vec<FanJet> = self.fans.par_iter().map(|fan| self.fan_gradient(fan, z)).collect();
        let mut out = vec![0.0; self.cols()];
        for (r, b) in blocks.iter().enumerate() {
            for (&v, g) in b.vars.iter().zip(&b.grad) {
                out[v] += g[0] * w[3 * r] + g[1] * w[3 * r + 1] + g[2] * w[3 * r + 2];
            }
        }
        out
    }

    /// Local Hessian of `w · vec(P)` for one fan, dense and row-major over `fan.vars`.
    fn fan_hessian(&self, fan: &FanLayout, z: &[f64], w: [f64; 3]) -> Vec<f64> {
        let (jets, prefix, suffix) = self.fan_jets(fan, z);
        let n = jets.len();
        let nv = fan.vars.len();
        let contract = |q: Quaternion| w[0] * q.x + w[1] * q.y + w[2] * q.z;
        let mut out = vec![0.0; nv * nv];
        for k in 0..n {
            let lk = &fan.local[k];
            for a in 0..4 {
                for b in 0..4 {
                    out[lk[a] * nv + lk[b]] += contract(prefix[k] * jets[k].hess[a][b] * suffix[k]);
                }
            }
            // Pairs k < m: prefix_k · ∂q_k · (q_{k+1} ⋯ q_{m−1}) · ∂q_m · suffix_m.
            let left: [Quaternion; 4] = std::array::from_fn(|a| prefix[k] * jets[k].grad[a]);
            let mut mid = Quaternion::ONE;
            for m in k + 1..n {
                let lm = &fan.local[m];
                for a in 0..4 {
                    let la = left[a] * mid;
                    for b in 0..4 {
                        let s = contract(la * jets[m].grad[b] * suffix[m]);
                        out[lk[a] * nv + lm[b]] += s;
                        out[lm[b] * nv + lk[a]] += s;
                    }
                }
                mid = mid * jets[m].value;
            }
        }
        out
    }

    fn pattern(&self) -> &HessianPattern {
        self.pattern.get_or_init(|| {
            let n = self.cols();
            let mut t = Triplets::new(n, n);
            for fan in &self.fans {
                for &i in &fan.vars {
                    for &j in &fan.vars {
                        t.push(i, j, 0.0);
                    }
                }
            }
            let csc = t.to_csc();
            let (colptr, rowind) = (csc.colptr().to_vec(), csc.rowind().to_vec());
            let slots = self
                .fans
                .iter()
                .map(|fan| {
                    let mut out = Vec::with_capacity(fan.vars.len() * fan.vars.len());
                    for &i in &fan.vars {
                        for &j in &fan.vars {
                            let col = &rowind[colptr[j]..colptr[j + 1]];
                            let k = colptr[j] + col.binary_search(&i).expect("entry is in the pattern");
                            out.push(u32::try_from(k).expect("pattern fits in u32"));
                        }
                    }
                    out
                })
                .collect();
            HessianPattern { colptr, rowind, slots }
        })
    }

    /// `Σ_v w_v · ∂²Q_v`, plus `μ DQᵀDQ` when `mu` is given, scattered into the cached pattern.
    fn assemble_hessian(&self, z: &[f64], weights: &[f64], mu: Option<f64>) -> CscMatrix {
        assert_eq!(weights.len(), self.rows());
        let pattern = self.pattern();
        let blocks: Vec<Vec<f64>> = self
            .fans
            .par_iter()
            .enumerate()
            .map(|(r, fan)| {
                let mut out = self.fan_hessian(fan, z, [weights[3 * r], weights[3 * r + 1], weights[3 * r + 2]]);
                if let Some(mu) = mu {
                    let jet = self.fan_gradient(fan, z);
                    let nv = jet.vars.len();
                    for (a, ga) in jet.grad.iter().enumerate() {
                        for (b, gb) in jet.grad.iter().enumerate() {
                            out[a * nv + b] += mu * (ga[0] * gb[0] + ga[1] * gb[1] + ga[2] * gb[2]);
                        }
                    }
                }
                out
            })
            .collect();
        let mut values = vec![0.0; pattern.rowind.len()];
        for (slots, block) in pattern.slots.iter().zip(&blocks) {
            for (&k, &v) in slots.iter().zip(block) {
                values[k as usize] += v;
            }
        }
        let n = self.cols();
        CscMatrix::from_parts(n, n, pattern.colptr.clone(), pattern.rowind.clone(), values)
    }

    /// `Σ_v Σ_m weights[3v + m] · ∂²(Q_v)_m`, symmetric `cols() × cols()`.
    pub fn hessian_contraction(&self, z: &NricVector, weights: &[f64]) -> CscMatrix {
        self.hessian_contraction_flat(z.as_slice(), weights)
    }

    pub fn hessian_contraction_flat(&self, z: &[f64], weights: &[f64]) -> CscMatrix {
        self.assemble_hessian(z, weights, None)
    }

    /// `Σ_v w_v · ∂²Q_v + μ DQᵀDQ`, the constraint part of the augmented Lagrangian Hessian.
    pub fn lagrangian_hessian(&self, z: &[f64], weights: &[f64], mu: f64) -> CscMatrix {
        self.assemble_hessian(z, weights, Some(mu))
    }

    /// Whether every fan is admissible, i.e. the residual is finite.
    pub fn all_admissible(&self, z: &[f64]) -> bool {
        self.fans.iter().all(|f| self.fan_admissible(f, z))
    }

    /// Interior vertex owning residual block `r`.
    pub fn vertex_of_block(&self, r: usize) -> usize {
        self.surface.interior_vertices()[r]
    }
}

/// `‖Q‖_∞`.
pub fn max_violation(residual: &[f64]) -> f64 {
    residual.iter().fold(0.0, |m, v| m.max(v.abs()))
}
