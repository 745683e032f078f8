//! Objectives for the shape-space applications: projection onto the manifold, weighted elastic
//! averages and time-discrete geodesic paths.

use rayon::prelude::*;

use crate::energy::{Argument, DeformationEnergy, HessianBlock};
use crate::error::{Error, Result};
use crate::integrability::ConstraintSystem;
use crate::mesh::SimplicialSurface;
use crate::optim::{solve_constrained, ConstrainedProblem, Objective, SolveOutcome, SolverConfig, VariableLayout};
use crate::sparse::Triplets;
use crate::INFEASIBLE;

fn finite_or_sentinel(v: f64) -> f64 {
    if v.is_finite() && v < INFEASIBLE {
        v
    } else {
        INFEASIBLE
    }
}

/// `z ↦ W[z*, z]`.
pub struct DissimilarityObjective<'a> {
    energy: DeformationEnergy<'a>,
    reference: Vec<f64>,
}

impl<'a> DissimilarityObjective<'a> {
    pub fn new(energy: DeformationEnergy<'a>, reference: Vec<f64>) -> Result<Self> {
        let d = energy.surface().nric_dim();
        if reference.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: reference.len(),
            });
        }
        if !energy.surface().lengths_admissible(&reference[..energy.surface().edge_count()]) {
            return Err(Error::InfeasibleStart("reference shape violates the triangle inequality".into()));
        }
        Ok(DissimilarityObjective { energy, reference })
    }

    pub fn reference(&self) -> &[f64] {
        &self.reference
    }
}

impl Objective for DissimilarityObjective<'_> {
    fn dim(&self) -> usize {
        self.reference.len()
    }

    fn value(&self, z: &[f64]) -> f64 {
        finite_or_sentinel(self.energy.value(&self.reference, z))
    }

    fn gradient(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.energy.gradient(&self.reference, z, Argument::Second)
    }

    fn hessian(&self, z: &[f64]) -> Result<Triplets> {
        self.energy.hessian_triplets(&self.reference, z, HessianBlock::SecondSecond)
    }
}

/// `z ↦ Σ_i w_i W[z_i, z]` for convex weights `w`.
pub struct ElasticAverageObjective<'a> {
    energy: DeformationEnergy<'a>,
    examples: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl<'a> ElasticAverageObjective<'a> {
    pub fn new(energy: DeformationEnergy<'a>, examples: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let s = energy.surface();
        if examples.is_empty() || examples.len() != weights.len() {
            return Err(Error::InvalidArgument(format!(
                "{} examples but {} weights",
                examples.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument("weights must be nonnegative and sum to one".into()));
        }
        for (i, z) in examples.iter().enumerate() {
            if z.len() != s.nric_dim() {
                return Err(Error::DimensionMismatch {
                    expected: s.nric_dim(),
                    actual: z.len(),
                });
            }
            if !s.lengths_admissible(&z[..s.edge_count()]) {
                return Err(Error::InfeasibleStart(format!("example {i} violates the triangle inequality")));
            }
        }
        Ok(ElasticAverageObjective {
            energy,
            examples,
            weights,
        })
    }

    pub fn examples(&self) -> &[Vec<f64>] {
        &self.examples
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

impl Objective for ElasticAverageObjective<'_> {
    fn dim(&self) -> usize {
        self.energy.surface().nric_dim()
    }

    fn value(&self, z: &[f64]) -> f64 {
        let mut s = 0.0;
        for (zi, &w) in self.examples.iter().zip(&self.weights) {
            let v = self.energy.value(zi, z);
            if v >= INFEASIBLE {
                return INFEASIBLE;
            }
            s += w * v;
        }
        finite_or_sentinel(s)
    }

    fn gradient(&self, z: &[f64]) -> Result<Vec<f64>> {
        let mut g = vec![0.0; z.len()];
        for (zi, &w) in self.examples.iter().zip(&self.weights) {
            for (a, b) in g.iter_mut().zip(self.energy.gradient(zi, z, Argument::Second)?) {
                *a += w * b;
            }
        }
        Ok(g)
    }

    fn hessian(&self, z: &[f64]) -> Result<Triplets> {
        let d = z.len();
        let mut t = Triplets::new(d, d);
        for (zi, &w) in self.examples.iter().zip(&self.weights) {
            let h = self.energy.hessian_triplets(zi, z, HessianBlock::SecondSecond)?;
            for (i, j, v) in h.iter() {
                t.push(i, j, w * v);
            }
        }
        Ok(t)
    }
}

/// Shapes `z_0, …, z_K` of a discrete path; the endpoints stay fixed during optimization.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicPath {
    pub shapes: Vec<Vec<f64>>,
}

impl GeodesicPath {
    /// Number of segments `K`.
    pub fn segments(&self) -> usize {
        self.shapes.len() - 1
    }

    /// Inner shapes stacked into one vector.
    pub fn free_stack(&self) -> Vec<f64> {
        self.shapes[1..self.shapes.len() - 1].concat()
    }

    /// Replaces the inner shapes by the blocks of `stack`.
    pub fn set_free(&mut self, stack: &[f64]) {
        let k = self.segments();
        let d = self.shapes[0].len();
        for i in 1..k {
            self.shapes[i].copy_from_slice(&stack[(i - 1) * d..i * d]);
        }
    }

    /// `W[z_{k−1}, z_k]` for `k = 1..=K`.
    pub fn segment_energies(&self, energy: &DeformationEnergy) -> Vec<f64> {
        self.shapes.windows(2).map(|w| energy.value(&w[0], &w[1])).collect()
    }

    /// `K Σ_k W[z_{k−1}, z_k]`.
    pub fn path_energy(&self, energy: &DeformationEnergy) -> f64 {
        let e = self.segment_energies(energy);
        if e.iter().any(|&v| v >= INFEASIBLE) {
            return INFEASIBLE;
        }
        self.segments() as f64 * e.iter().sum::<f64>()
    }
}

/// Straight-line path between `z_a` and `z_b`. A blend whose lengths leave the
/// triangle-inequality region takes geometric means of the lengths instead.
pub fn initialize_geodesic(surface: &SimplicialSurface, z_a: &[f64], z_b: &[f64], k: usize) -> Result<GeodesicPath> {
    if k < 1 {
        return Err(Error::InvalidArgument("a path needs at least one segment".into()));
    }
    let d = surface.nric_dim();
    let ne = surface.edge_count();
    for (name, z) in [("start", z_a), ("end", z_b)] {
        if z.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: z.len(),
            });
        }
        if !surface.lengths_admissible(&z[..ne]) {
            return Err(Error::InfeasibleStart(format!("{name} shape violates the triangle inequality")));
        }
    }
    let shapes = (0..=k)
        .map(|i| {
            let t = i as f64 / k as f64;
            let mut z: Vec<f64> = z_a.iter().zip(z_b).map(|(a, b)| (1.0 - t) * a + t * b).collect();
            if !surface.lengths_admissible(&z[..ne]) {
                z[..ne].copy_from_slice(&log_blend(&z_a[..ne], &z_b[..ne], t));
            }
            z
        })
        .collect();
    Ok(GeodesicPath { shapes })
}

/// Weighted geometric mean `a^(1−t) b^t`, positive for positive inputs.
pub fn log_blend(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| ((1.0 - t) * x.ln() + t * y.ln()).exp()).collect()
}

/// `K Σ_k W[z_{k−1}, z_k]` as a function of the stacked inner shapes.
pub struct GeodesicObjective<'a> {
    energy: DeformationEnergy<'a>,
    start: Vec<f64>,
    end: Vec<f64>,
    segments: usize,
}

impl<'a> GeodesicObjective<'a> {
    pub fn new(energy: DeformationEnergy<'a>, path: &GeodesicPath) -> Result<Self> {
        let k = path.segments();
        if k < 2 {
            return Err(Error::InvalidArgument("a geodesic needs at least two segments".into()));
        }
        let s = energy.surface();
        for (idx, z) in [(0, &path.shapes[0]), (k, &path.shapes[k])] {
            if !s.lengths_admissible(&z[..s.edge_count()]) {
                return Err(Error::InfeasibleStart(format!("endpoint {idx} violates the triangle inequality")));
            }
        }
        Ok(GeodesicObjective {
            energy,
            start: path.shapes[0].clone(),
            end: path.shapes[k].clone(),
            segments: k,
        })
    }

    pub fn energy(&self) -> &DeformationEnergy<'a> {
        &self.energy
    }

    fn shape_dim(&self) -> usize {
        self.start.len()
    }

    /// Shape `i ∈ 0..=K` of the path given the stacked inner shapes.
    fn shape<'z>(&'z self, x: &'z [f64], i: usize) -> &'z [f64] {
        let d = self.shape_dim();
        if i == 0 {
            &self.start
        } else if i == self.segments {
            &self.end
        } else {
            &x[(i - 1) * d..i * d]
        }
    }
}

impl Objective for GeodesicObjective<'_> {
    fn dim(&self) -> usize {
        (self.segments - 1) * self.shape_dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let terms: Vec<f64> = (1..=self.segments)
            .into_par_iter()
            .map(|k| self.energy.value(self.shape(x, k - 1), self.shape(x, k)))
            .collect();
        if terms.iter().any(|&v| v >= INFEASIBLE) {
            return INFEASIBLE;
        }
        finite_or_sentinel(self.segments as f64 * terms.iter().sum::<f64>())
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let scale = self.segments as f64;
        let blocks: Vec<Vec<f64>> = (1..self.segments)
            .into_par_iter()
            .map(|k| {
                let prev = self.shape(x, k - 1);
                let cur = self.shape(x, k);
                let next = self.shape(x, k + 1);
                let mut g = self.energy.gradient(prev, cur, Argument::Second)?;
                for (a, b) in g.iter_mut().zip(self.energy.gradient(cur, next, Argument::First)?) {
                    *a = scale * (*a + b);
                }
                Ok(g)
            })
            .collect::<Result<_>>()?;
        Ok(blocks.concat())
    }

    fn hessian(&self, x: &[f64]) -> Result<Triplets> {
        let d = self.shape_dim();
        let n = self.dim();
        let scale = self.segments as f64;
        // Per inner shape: its diagonal block and the coupling to the next inner shape.
        let blocks: Vec<(Triplets, Triplets, Option<Triplets>)> = (1..self.segments)
            .into_par_iter()
            .map(|k| {
                let prev = self.shape(x, k - 1);
                let cur = self.shape(x, k);
                let next = self.shape(x, k + 1);
                let a = self.energy.hessian_triplets(prev, cur, HessianBlock::SecondSecond)?;
                let b = self.energy.hessian_triplets(cur, next, HessianBlock::FirstFirst)?;
                let c = if k + 1 < self.segments {
                    Some(self.energy.hessian_triplets(cur, next, HessianBlock::FirstSecond)?)
                } else {
                    None
                };
                Ok((a, b, c))
            })
            .collect::<Result<_>>()?;
        let mut t = Triplets::new(n, n);
        for (k, (a, b, c)) in blocks.iter().enumerate() {
            let o = k * d;
            for (i, j, v) in a.iter().chain(b.iter()) {
                t.push(o + i, o + j, scale * v);
            }
            if let Some(c) = c {
                for (i, j, v) in c.iter() {
                    t.push(o + i, o + d + j, scale * v);
                    t.push(o + d + j, o + i, scale * v);
                }
            }
        }
        Ok(t)
    }
}

/// Per-coordinate fixed flags for one shape: lengths, angles or explicit entries.
pub fn repeat_mask(mask: &[bool], copies: usize) -> Vec<bool> {
    mask.iter().copied().cycle().take(mask.len() * copies).collect()
}

/// Minimizes `objective` from `z0` subject to integrability of every shape; entries of `fixed`
/// keep their value from `z0`.
pub fn solve_objective(
    objective: &dyn Objective,
    system: &ConstraintSystem,
    z0: Vec<f64>,
    fixed: &[bool],
    config: &SolverConfig,
) -> Result<SolveOutcome> {
    let layout = VariableLayout::new(z0, fixed);
    let problem = ConstrainedProblem::new(objective, system, layout)?;
    solve_constrained(&problem, config)
}

/// Optimizes the inner shapes of `path` into a discrete geodesic; `fixed` applies to every
/// inner shape.
pub fn solve_geodesic(
    energy: DeformationEnergy,
    path: &GeodesicPath,
    fixed: &[bool],
    config: &SolverConfig,
) -> Result<(GeodesicPath, SolveOutcome)> {
    let surface = energy.surface();
    let system = ConstraintSystem::new(surface);
    let objective = GeodesicObjective::new(energy, path)?;
    let mask = repeat_mask(fixed, path.segments() - 1);
    let outcome = solve_objective(&objective, &system, path.free_stack(), &mask, config)?;
    let mut out = path.clone();
    out.set_free(&outcome.z);
    Ok((out, outcome))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{MaterialParameters, QuadraticWeights, WeightRecipe};
    use crate::forward::nric_from_positions;
    use crate::generators;
    use crate::mesh::NricVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn plates() -> (SimplicialSurface, Vec<f64>, Vec<f64>) {
        let a = generators::bent_plate(4, 0.6, 0);
        let b = generators::bent_plate(4, -0.6, 0);
        let za = nric_from_positions(&a.surface, &a.positions).unwrap().into_vec();
        let zb = nric_from_positions(&b.surface, &b.positions).unwrap().into_vec();
        (a.surface, za, zb)
    }

    fn fd_check(obj: &dyn Objective, x: &[f64], h: f64) {
        let g = obj.gradient(x).unwrap();
        let hm = obj.hessian(x).unwrap().to_csc().to_dense();
        let n = x.len();
        let gscale = g.iter().fold(1e-8_f64, |m, v| m.max(v.abs()));
        let hscale = hm.iter().fold(1e-8_f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            let mut p = x.to_vec();
            let mut m = x.to_vec();
            p[i] += h;
            m[i] -= h;
            let fd = (obj.value(&p) - obj.value(&m)) / (2.0 * h);
            assert!((fd - g[i]).abs() <= 1e-6 * gscale, "gradient {i}: {fd} vs {}", g[i]);
            let gp = obj.gradient(&p).unwrap();
            let gm = obj.gradient(&m).unwrap();
            for j in 0..n {
                let fd = (gp[j] - gm[j]) / (2.0 * h);
                assert!((fd - hm[(j, i)]).abs() <= 1e-5 * hscale, "hessian ({j},{i}): {fd} vs {}", hm[(j, i)]);
            }
        }
    }

    #[test]
    fn dissimilarity_vanishes_at_reference() {
        let (s, za, zb) = plates();
        let obj = DissimilarityObjective::new(DeformationEnergy::nonlinear(&s, MaterialParameters::default()), za.clone()).unwrap();
        assert!(obj.value(&za).abs() < 1e-14);
        assert!(obj.gradient(&za).unwrap().iter().all(|g| g.abs() < 1e-12));
        assert!(obj.value(&zb) > 0.0);
        let mut bad = za.clone();
        bad[0] = 100.0;
        assert_eq!(obj.value(&bad), INFEASIBLE);
    }

    #[test]
    fn dissimilarity_derivatives() {
        let (s, za, zb) = plates();
        let obj = DissimilarityObjective::new(DeformationEnergy::nonlinear(&s, MaterialParameters::default()), za).unwrap();
        fd_check(&obj, &zb, 1e-6);
    }

    #[test]
    fn average_endpoints_and_symmetry() {
        let (s, za, zb) = plates();
        let p = MaterialParameters::default();
        let e = || DeformationEnergy::nonlinear(&s, p);
        let obj = ElasticAverageObjective::new(e(), vec![za.clone(), zb.clone()], vec![0.3, 0.7]).unwrap();
        let swapped = ElasticAverageObjective::new(e(), vec![zb.clone(), za.clone()], vec![0.7, 0.3]).unwrap();
        let mid: Vec<f64> = za.iter().zip(&zb).map(|(a, b)| 0.5 * (a + b)).collect();
        assert_eq!(obj.value(&mid), swapped.value(&mid));
        let w = e().value(&zb, &za);
        assert!((obj.value(&za) - 0.7 * w).abs() < 1e-14 * w.max(1.0));
        fd_check(&obj, &mid, 1e-6);
    }

    #[test]
    fn single_example_average_is_the_example() {
        let (s, za, _) = plates();
        let sys = ConstraintSystem::new(&s);
        let obj = ElasticAverageObjective::new(DeformationEnergy::nonlinear(&s, MaterialParameters::default()), vec![za.clone()], vec![1.0]).unwrap();
        let out = solve_objective(&obj, &sys, za.clone(), &vec![false; za.len()], &SolverConfig::default()).unwrap();
        assert!(out.report.converged());
        assert_eq!(out.report.penalty_increases, 0);
        assert!(out.z.iter().zip(&za).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn blend_initialization() {
        let (s, za, zb) = plates();
        let p = initialize_geodesic(&s, &za, &zb, 2).unwrap();
        for i in 0..za.len() {
            assert!((p.shapes[1][i] - 0.5 * (za[i] + zb[i])).abs() < 1e-15);
        }
        let c = initialize_geodesic(&s, &za, &za, 5).unwrap();
        assert!(c.shapes.iter().all(|z| z.iter().zip(&za).all(|(p, q)| (p - q).abs() <= 1e-15 * q.abs())));
    }

    #[test]
    fn log_blend_stays_positive() {
        let a = [1e-3, 2.0, 5.0];
        let b = [4.0, 1e-6, 5.0];
        for t in [0.0, 0.1, 0.5, 0.9, 1.0] {
            let m = log_blend(&a, &b, t);
            assert!(m.iter().all(|&v| v > 0.0));
            assert!((m[2] - 5.0).abs() < 1e-14);
        }
        assert!((log_blend(&[0.1], &[1.0], 0.5)[0] - 0.1f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn geodesic_derivatives_and_block_pattern() {
        let (s, za, zb) = plates();
        let path = initialize_geodesic(&s, &za, &zb, 4).unwrap();
        let mut x = path.free_stack();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        x.iter_mut().for_each(|v| *v += rng.gen_range(-1e-3..1e-3));
        let obj = GeodesicObjective::new(DeformationEnergy::nonlinear(&s, MaterialParameters { delta: 0.1, ..Default::default() }), &path).unwrap();
        fd_check(&obj, &x, 1e-6);
        let d = s.nric_dim();
        let h = obj.hessian(&x).unwrap();
        for (i, j, _) in h.iter() {
            assert!((i / d).abs_diff(j / d) <= 1, "entry ({i},{j}) couples non-adjacent shapes");
        }
    }

    #[test]
    fn quadratic_path_energy_matches_loop() {
        let (s, za, zb) = plates();
        let p = MaterialParameters::default();
        let w = QuadraticWeights::from_reference(&s, &NricVector::from_flat(&s, za.clone()).unwrap(), WeightRecipe::InverseLength).unwrap();
        let path = initialize_geodesic(&s, &za, &zb, 3).unwrap();
        let obj = GeodesicObjective::new(DeformationEnergy::quadratic(&s, p, w.clone()), &path).unwrap();
        let ne = s.edge_count();
        let mut naive = 0.0;
        for k in 1..=3 {
            let (a, b) = (&path.shapes[k - 1], &path.shapes[k]);
            for e in 0..ne {
                naive += w.alpha[e] * (a[e] - b[e]).powi(2);
            }
            for t in 0..s.interior_edge_count() {
                naive += p.delta * p.delta * w.beta[t] * (a[ne + t] - b[ne + t]).powi(2);
            }
        }
        naive *= 3.0;
        let v = obj.value(&path.free_stack());
        assert!((v - naive).abs() <= 1e-12 * naive, "{v} vs {naive}");
    }

    #[test]
    fn constant_path_is_optimal() {
        let (s, za, _) = plates();
        let path = initialize_geodesic(&s, &za, &za, 3).unwrap();
        let (out, outcome) = solve_geodesic(DeformationEnergy::nonlinear(&s, MaterialParameters::default()), &path, &vec![false; za.len()], &SolverConfig::default()).unwrap();
        assert!(outcome.report.converged());
        assert!(out.segment_energies(&DeformationEnergy::nonlinear(&s, MaterialParameters::default())).iter().all(|&e| e.abs() < 1e-14));
    }
}
