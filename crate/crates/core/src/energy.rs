//! Deformation energies on NRIC: membrane, bending, their nonlinear sum and the weighted
//! quadratic model, with derivatives in both arguments.
//!
//! `W[z, z̃]` measures the cost of deforming the reference `z` into `z̃`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperdual::{Hd, Real};
use crate::mesh::{face_area, triangle_admissible, NricVector, SimplicialSurface};
use crate::sparse::{CscMatrix, Triplets};
use crate::INFEASIBLE;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialParameters {
    /// Membrane shear weight.
    pub mu: f64,
    /// Membrane bulk weight.
    pub lambda: f64,
    /// Thickness; bending is weighted by its square.
    pub delta: f64,
}

impl Default for MaterialParameters {
    fn default() -> Self {
        MaterialParameters {
            mu: 1.0,
            lambda: 1.0,
            delta: 1e-2,
        }
    }
}

impl MaterialParameters {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.lambda > 0.0 && self.delta >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "material parameters need mu > 0, lambda > 0, delta >= 0 (got {:?})",
                self
            )));
        }
        Ok(())
    }
}

/// How the per-coordinate weights of the quadratic energy are derived from a reference shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightRecipe {
    /// `α_e = l̄_e⁻²`, `β_e = l̄_e² / d̄_e`.
    #[default]
    InverseLength,
    /// `α_e = d̄_e · l̄_e⁻²`, `β_e = l̄_e² / d̄_e`.
    AreaScaled,
}

/// Weights `α` (per edge) and `β` (per interior edge) of the quadratic energy.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticWeights {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub reference: NricVector,
    pub recipe: WeightRecipe,
}

/// One third of the summed areas of the faces adjacent to each edge.
pub fn edge_area_weights(surface: &SimplicialSurface, lengths: &[f64]) -> Result<Vec<f64>> {
    let mut areas = Vec::with_capacity(surface.face_count());
    for f in 0..surface.face_count() {
        let [a, b, c] = surface.face_lengths(f, lengths);
        areas.push(face_area(a, b, c).map_err(|_| Error::ReferenceDegenerate { face: f })?);
    }
    Ok(surface
        .edges()
        .iter()
        .map(|e| e.faces.iter().flatten().map(|&f| areas[f]).sum::<f64>() / 3.0)
        .collect())
}

impl QuadraticWeights {
    pub fn from_reference(surface: &SimplicialSurface, reference: &NricVector, recipe: WeightRecipe) -> Result<Self> {
        let l = reference.lengths();
        let d = edge_area_weights(surface, l)?;
        let alpha = (0..surface.edge_count())
            .map(|e| match recipe {
                WeightRecipe::InverseLength => 1.0 / (l[e] * l[e]),
                WeightRecipe::AreaScaled => d[e] / (l[e] * l[e]),
            })
            .collect();
        let beta = surface
            .interior_edges()
            .iter()
            .map(|&e| l[e] * l[e] / d[e])
            .collect();
        Ok(QuadraticWeights {
            alpha,
            beta,
            reference: reference.clone(),
            recipe,
        })
    }

    /// All weights equal to one.
    pub fn unit(surface: &SimplicialSurface) -> Self {
        QuadraticWeights {
            alpha: vec![1.0; surface.edge_count()],
            beta: vec![1.0; surface.interior_edge_count()],
            reference: NricVector::new(vec![1.0; surface.edge_count()], vec![0.0; surface.interior_edge_count()]),
            recipe: WeightRecipe::InverseLength,
        }
    }
}

/// `16·area²` by the product form, generic in the scalar.
fn heron16<T: Real>(a: T, b: T, c: T) -> T {
    (a + b + c) * (b + c - a) * (a - b + c) * (a + b - c)
}

/// `a_f · W_mem` with `W_mem(G) = μ/2 tr G + λ/4 det G − (μ/2 + λ/4) log det G − μ − λ/4` for the
/// undeformed triple `(a, b, c)` and deformed triple `(ã, b̃, c̃)`. The log coefficient makes the
/// identity a stationary point. `None` when the deformed triple is not a strict triangle.
pub fn membrane_density<T: Real>(und: [T; 3], def: [T; 3], p: &MaterialParameters) -> Option<T> {
    if !triangle_admissible([def[0].value(), def[1].value(), def[2].value()]) {
        return None;
    }
    let area2 = heron16(und[0], und[1], und[2]) / 16.0;
    let area2_def = heron16(def[0], def[1], def[2]) / 16.0;
    if !(area2_def.value() > 0.0) {
        return None;
    }
    let [a2, b2, c2] = und.map(|x| x * x);
    let [at2, bt2, ct2] = def.map(|x| x * x);
    let trace = (at2 * (b2 + c2 - a2) + bt2 * (a2 - b2 + c2) + ct2 * (a2 + b2 - c2)) / (area2 * 8.0);
    let det = area2_def / area2;
    let w = trace * (0.5 * p.mu) + det * (0.25 * p.lambda) - det.ln() * (0.5 * p.mu + 0.25 * p.lambda) - (p.mu + 0.25 * p.lambda);
    Some(area2.sqrt() * w)
}

/// Local membrane term of one face; the infinity sentinel when the deformed triple is inadmissible.
pub fn local_membrane(und: [f64; 3], def: [f64; 3], p: &MaterialParameters) -> Result<f64> {
    if !triangle_admissible(und) {
        return Err(Error::TriangleInequalityViolated(und[0], und[1], und[2]));
    }
    Ok(membrane_density(und, def, p).unwrap_or(INFEASIBLE))
}

/// Bending term of one interior edge given `θ`, `θ̃`, the edge length and the other two lengths
/// of each adjacent face, all from the reference except `θ̃`.
fn bending_term<T: Real>(theta: T, theta_def: T, len: [T; 5]) -> T {
    let area_f = heron16(len[0], len[1], len[2]).sqrt() / 4.0;
    let area_g = heron16(len[0], len[3], len[4]).sqrt() / 4.0;
    let d = (area_f + area_g) / 3.0;
    let diff = theta - theta_def;
    diff * diff * len[0] * len[0] / d
}

/// Which argument of `W[z, z̃]` a derivative is taken in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Argument {
    /// The reference `z`.
    First,
    /// The deformed `z̃`.
    Second,
}

/// Second-derivative blocks of `W[z, z̃]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HessianBlock {
    /// `∂²W / ∂z²`.
    FirstFirst,
    /// `∂²W / ∂z̃²`.
    SecondSecond,
    /// `∂²W / ∂z ∂z̃` (rows index `z`, columns `z̃`).
    FirstSecond,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnergyModel {
    /// Membrane plus `δ²`-weighted bending.
    Nonlinear,
    /// `Σ α (Δl)² + δ² Σ β (Δθ)²`.
    Quadratic(QuadraticWeights),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyKind {
    #[default]
    Nonlinear,
    Quadratic,
}

/// A dissimilarity `W[z, z̃]` on a fixed connectivity.
#[derive(Debug, Clone)]
pub struct DeformationEnergy<'a> {
    surface: &'a SimplicialSurface,
    params: MaterialParameters,
    model: EnergyModel,
    /// Per interior slot: `[l_e, f-others…, f'-others…]` as length indices.
    hinge: Vec<[usize; 5]>,
}

/// Local derivative contribution: global indices of the stacked `(z, z̃)` variables with the
/// local gradient and Hessian.
struct Local<const N: usize> {
    idx: [usize; N],
    val: Hd<N>,
}

impl<'a> DeformationEnergy<'a> {
    pub fn new(surface: &'a SimplicialSurface, params: MaterialParameters, model: EnergyModel) -> Self {
        let hinge = surface
            .interior_edges()
            .iter()
            .map(|&e| {
                let edge = &surface.edges()[e];
                let others = |f: usize| {
                    let fe = surface.face_edges()[f];
                    let k = fe.iter().position(|&x| x == e).unwrap();
                    [fe[(k + 1) % 3], fe[(k + 2) % 3]]
                };
                let [a, b] = others(edge.faces[0].unwrap());
                let [c, d] = others(edge.faces[1].unwrap());
                [e, a, b, c, d]
            })
            .collect();
        DeformationEnergy {
            surface,
            params,
            model,
            hinge,
        }
    }

    pub fn nonlinear(surface: &'a SimplicialSurface, params: MaterialParameters) -> Self {
        Self::new(surface, params, EnergyModel::Nonlinear)
    }

    pub fn quadratic(surface: &'a SimplicialSurface, params: MaterialParameters, weights: QuadraticWeights) -> Self {
        Self::new(surface, params, EnergyModel::Quadratic(weights))
    }

    pub fn surface(&self) -> &'a SimplicialSurface {
        self.surface
    }

    pub fn params(&self) -> &MaterialParameters {
        &self.params
    }

    pub fn model(&self) -> &EnergyModel {
        &self.model
    }

    fn dim(&self) -> usize {
        self.surface.nric_dim()
    }

    fn ne(&self) -> usize {
        self.surface.edge_count()
    }

    /// Whether both arguments lie in the triangle-inequality region.
    fn admissible(&self, z: &[f64], zt: &[f64]) -> bool {
        let ne = self.ne();
        self.surface.lengths_admissible(&z[..ne]) && self.surface.lengths_admissible(&zt[..ne])
    }

    /// Membrane part `Σ_f a_f W_mem`; the sentinel outside the domain.
    pub fn membrane(&self, z: &[f64], zt: &[f64]) -> f64 {
        if !self.surface.lengths_admissible(&z[..self.ne()]) {
            return INFEASIBLE;
        }
        let terms: Vec<f64> = (0..self.surface.face_count())
            .into_par_iter()
            .map(|f| {
                let und = self.surface.face_lengths(f, z);
                let def = self.surface.face_lengths(f, zt);
                membrane_density(und, def, &self.params).unwrap_or(INFEASIBLE)
            })
            .collect();
        sum_or_sentinel(&terms)
    }

    /// Bending part `Σ_e (θ_e − θ̃_e)² l_e² / d_e` (without the `δ²` factor).
    pub fn bending(&self, z: &[f64], zt: &[f64]) -> f64 {
        if !self.surface.lengths_admissible(&z[..self.ne()]) {
            return INFEASIBLE;
        }
        let ne = self.ne();
        let terms: Vec<f64> = self
            .hinge
            .par_iter()
            .enumerate()
            .map(|(s, h)| bending_term(z[ne + s], zt[ne + s], h.map(|i| z[i])))
            .collect();
        terms.iter().sum()
    }

    /// `W[z, z̃]`, or the sentinel when either argument leaves the triangle-inequality region.
    pub fn value(&self, z: &[f64], zt: &[f64]) -> f64 {
        if !self.admissible(z, zt) {
            return INFEASIBLE;
        }
        let d2 = self.params.delta * self.params.delta;
        match &self.model {
            EnergyModel::Nonlinear => {
                let m = self.membrane(z, zt);
                if m >= INFEASIBLE {
                    return INFEASIBLE;
                }
                m + d2 * self.bending(z, zt)
            }
            EnergyModel::Quadratic(w) => {
                let ne = self.ne();
                let lterms: f64 = (0..ne).map(|e| w.alpha[e] * (z[e] - zt[e]).powi(2)).sum();
                let aterms: f64 = (0..self.surface.interior_edge_count())
                    .map(|s| w.beta[s] * (z[ne + s] - zt[ne + s]).powi(2))
                    .sum();
                lterms + d2 * aterms
            }
        }
    }

    fn membrane_locals(&self, z: &[f64], zt: &[f64]) -> Vec<Local<6>> {
        let dim = self.dim();
        (0..self.surface.face_count())
            .into_par_iter()
            .map(|f| {
                let fe = self.surface.face_edges()[f];
                let und = fe.map(|e| z[e]);
                let def = fe.map(|e| zt[e]);
                let v = Hd::<6>::vars([und[0], und[1], und[2], def[0], def[1], def[2]]);
                let val = membrane_density([v[0], v[1], v[2]], [v[3], v[4], v[5]], &self.params)
                    .expect("admissibility checked by caller");
                Local {
                    idx: [fe[0], fe[1], fe[2], dim + fe[0], dim + fe[1], dim + fe[2]],
                    val,
                }
            })
            .collect()
    }

    fn bending_locals(&self, z: &[f64], zt: &[f64]) -> Vec<Local<7>> {
        let ne = self.ne();
        let dim = self.dim();
        let d2 = self.params.delta * self.params.delta;
        self.hinge
            .par_iter()
            .enumerate()
            .map(|(s, h)| {
                let v = Hd::<7>::vars([z[ne + s], zt[ne + s], z[h[0]], z[h[1]], z[h[2]], z[h[3]], z[h[4]]]);
                let val = bending_term(v[0], v[1], [v[2], v[3], v[4], v[5], v[6]]) * d2;
                Local {
                    idx: [ne + s, dim + ne + s, h[0], h[1], h[2], h[3], h[4]],
                    val,
                }
            })
            .collect()
    }

    fn check(&self, z: &[f64], zt: &[f64]) -> Result<()> {
        let dim = self.dim();
        for v in [z, zt] {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: v.len(),
                });
            }
        }
        if self.value(z, zt) >= INFEASIBLE {
            return Err(Error::InfeasiblePoint);
        }
        Ok(())
    }

    /// Gradient in the chosen argument.
    pub fn gradient(&self, z: &[f64], zt: &[f64], arg: Argument) -> Result<Vec<f64>> {
        self.check(z, zt)?;
        let dim = self.dim();
        let offset = match arg {
            Argument::First => 0,
            Argument::Second => dim,
        };
        let mut g = vec![0.0; dim];
        match &self.model {
            EnergyModel::Nonlinear => {
                let mut scatter = |idx: &[usize], grad: &[f64]| {
                    for (&i, &v) in idx.iter().zip(grad) {
                        if i >= offset && i < offset + dim {
                            g[i - offset] += v;
                        }
                    }
                };
                for l in self.membrane_locals(z, zt) {
                    scatter(&l.idx, &l.val.g);
                }
                for l in self.bending_locals(z, zt) {
                    scatter(&l.idx, &l.val.g);
                }
            }
            EnergyModel::Quadratic(w) => {
                let sign = if arg == Argument::First { 1.0 } else { -1.0 };
                let d2 = self.params.delta * self.params.delta;
                let ne = self.ne();
                for e in 0..ne {
                    g[e] = sign * 2.0 * w.alpha[e] * (z[e] - zt[e]);
                }
                for s in 0..self.surface.interior_edge_count() {
                    g[ne + s] = sign * 2.0 * d2 * w.beta[s] * (z[ne + s] - zt[ne + s]);
                }
            }
        }
        Ok(g)
    }

    /// Triplets of a Hessian block, structurally complete for the connectivity.
    pub fn hessian_triplets(&self, z: &[f64], zt: &[f64], block: HessianBlock) -> Result<Triplets> {
        self.check(z, zt)?;
        let dim = self.dim();
        let (row_off, col_off) = match block {
            HessianBlock::FirstFirst => (0, 0),
            HessianBlock::SecondSecond => (dim, dim),
            HessianBlock::FirstSecond => (0, dim),
        };
        let in_row = |i: usize| i >= row_off && i < row_off + dim;
        let in_col = |i: usize| i >= col_off && i < col_off + dim;
        let mut t = Triplets::new(dim, dim);
        match &self.model {
            EnergyModel::Nonlinear => {
                let ml = self.membrane_locals(z, zt);
                let bl = self.bending_locals(z, zt);
                t = Triplets::with_capacity(dim, dim, 9 * ml.len() + 16 * bl.len());
                for l in &ml {
                    for (a, &i) in l.idx.iter().enumerate() {
                        if !in_row(i) {
                            continue;
                        }
                        for (b, &j) in l.idx.iter().enumerate() {
                            if in_col(j) {
                                t.push(i - row_off, j - col_off, l.val.h[a][b]);
                            }
                        }
                    }
                }
                for l in &bl {
                    for (a, &i) in l.idx.iter().enumerate() {
                        if !in_row(i) {
                            continue;
                        }
                        for (b, &j) in l.idx.iter().enumerate() {
                            if in_col(j) {
                                t.push(i - row_off, j - col_off, l.val.h[a][b]);
                            }
                        }
                    }
                }
                if block == HessianBlock::SecondSecond {
                    // Angles enter the second argument only through θ̃; keep the diagonal even
                    // when δ = 0 so the pattern stays fixed.
                    let ne = self.ne();
                    for s in 0..self.surface.interior_edge_count() {
                        t.push(ne + s, ne + s, 0.0);
                    }
                }
            }
            EnergyModel::Quadratic(w) => {
                let sign = if block == HessianBlock::FirstSecond { -1.0 } else { 1.0 };
                let d2 = self.params.delta * self.params.delta;
                let ne = self.ne();
                for e in 0..ne {
                    t.push(e, e, sign * 2.0 * w.alpha[e]);
                }
                for s in 0..self.surface.interior_edge_count() {
                    t.push(ne + s, ne + s, sign * 2.0 * d2 * w.beta[s]);
                }
            }
        }
        Ok(t)
    }

    pub fn hessian(&self, z: &[f64], zt: &[f64], block: HessianBlock) -> Result<CscMatrix> {
        Ok(self.hessian_triplets(z, zt, block)?.to_csc())
    }

    /// `½ Hess_{z̃} W[z, z̃]` at `z̃ = z`.
    pub fn riemannian_metric(&self, z: &[f64]) -> Result<CscMatrix> {
        let mut h = self.hessian(z, z, HessianBlock::SecondSecond)?;
        h.scale(0.5);
        Ok(h)
    }
}

fn sum_or_sentinel(terms: &[f64]) -> f64 {
    let mut s = 0.0;
    for &t in terms {
        if t >= INFEASIBLE {
            return INFEASIBLE;
        }
        s += t;
    }
    s
}

/// `Σ_f a_f W_mem` with the reference checked.
pub fn membrane_energy(surface: &SimplicialSurface, z: &NricVector, zt: &NricVector, params: &MaterialParameters) -> Result<f64> {
    check_reference(surface, z)?;
    Ok(DeformationEnergy::nonlinear(surface, *params).membrane(z.as_slice(), zt.as_slice()))
}

/// Bending energy (without `δ²`).
pub fn bending_energy(surface: &SimplicialSurface, z: &NricVector, zt: &NricVector) -> Result<f64> {
    check_reference(surface, z)?;
    Ok(DeformationEnergy::nonlinear(surface, MaterialParameters::default()).bending(z.as_slice(), zt.as_slice()))
}

/// `W_mem + δ² W_bend`.
pub fn nonlinear_energy(surface: &SimplicialSurface, z: &NricVector, zt: &NricVector, params: &MaterialParameters) -> Result<f64> {
    check_reference(surface, z)?;
    Ok(DeformationEnergy::nonlinear(surface, *params).value(z.as_slice(), zt.as_slice()))
}

pub fn quadratic_energy(
    surface: &SimplicialSurface,
    z: &NricVector,
    target: &NricVector,
    weights: &QuadraticWeights,
    params: &MaterialParameters,
) -> f64 {
    DeformationEnergy::quadratic(surface, *params, weights.clone()).value(target.as_slice(), z.as_slice())
}

/// Fails with `ReferenceDegenerate` if a face of `z` is not a strict triangle.
pub fn check_reference(surface: &SimplicialSurface, z: &NricVector) -> Result<()> {
    for f in 0..surface.face_count() {
        if !triangle_admissible(surface.face_lengths(f, z.lengths())) {
            return Err(Error::ReferenceDegenerate { face: f });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::nric_from_positions;
    use crate::generators;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn membrane_identity_and_scaling() {
        let p = MaterialParameters::default();
        let t = [0.9, 1.1, 1.3];
        assert!(local_membrane(t, t, &p).unwrap().abs() < 1e-15);
        // Uniform scale: tr = 2s², det = s⁴.
        let s: f64 = 1.2;
        let area = face_area(t[0], t[1], t[2]).unwrap();
        let expected = area
            * (p.mu * s * s + 0.25 * p.lambda * s.powi(4) - (0.5 * p.mu + 0.25 * p.lambda) * s.powi(4).ln() - p.mu - 0.25 * p.lambda);
        let got = local_membrane(t, t.map(|x| x * s), &p).unwrap();
        assert!((got - expected).abs() < 1e-14);
        assert_eq!(local_membrane([1.0; 3], [1.0, 1.0, 2.0], &p).unwrap(), INFEASIBLE);
        assert!(local_membrane([1.0, 1.0, 2.0], [1.0; 3], &p).is_err());
    }

    #[test]
    fn membrane_diverges_near_degeneracy() {
        let p = MaterialParameters::default();
        let mut last = 0.0;
        for k in 1..20 {
            // Height of the deformed triangle shrinks as 2^-k.
            let h = 2f64.powi(-k);
            let side = (0.25 + h * h).sqrt();
            let w = local_membrane([1.0; 3], [1.0, side, side], &p).unwrap();
            assert!(w > last);
            last = w;
        }
    }

    #[test]
    fn single_hinge_bending() {
        let s = SimplicialSurface::new(4, vec![[0, 1, 2], [1, 0, 3]]).unwrap();
        let z = NricVector::new(vec![1.0; 5], vec![0.0]);
        let zt = NricVector::new(vec![1.0; 5], vec![0.2]);
        let d = (2.0 * 3f64.sqrt() / 4.0) / 3.0;
        let b = bending_energy(&s, &z, &zt).unwrap();
        assert!((b - 0.04 / d).abs() < 1e-12);
        let zt2 = NricVector::new(vec![1.0; 5], vec![0.4]);
        assert!((bending_energy(&s, &z, &zt2).unwrap() - 4.0 * b).abs() < 1e-12);
    }

    #[test]
    fn quadratic_single_edge() {
        let s = SimplicialSurface::new(3, vec![[0, 1, 2]]).unwrap();
        let w = QuadraticWeights::unit(&s);
        let z = NricVector::new(vec![1.0; 3], vec![]);
        let zt = NricVector::new(vec![1.3, 1.0, 1.0], vec![]);
        let v = quadratic_energy(&s, &zt, &z, &w, &MaterialParameters::default());
        assert!((v - 0.09).abs() < 1e-15);
    }

    fn random_pair(seed: u64) -> (generators::Shape, Vec<f64>, Vec<f64>) {
        let shape = generators::bumpy_plate(3);
        let z = nric_from_positions(&shape.surface, &shape.positions).unwrap().into_vec();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut z1 = z.clone();
        let mut z2 = z.clone();
        for v in z1.iter_mut().chain(z2.iter_mut()) {
            *v *= 1.0 + rng.gen_range(-0.05..0.05);
            *v += rng.gen_range(-0.02..0.02);
        }
        (shape, z1, z2)
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for model in ["nonlinear", "quadratic"] {
            let (shape, z, zt) = random_pair(1);
            let s = &shape.surface;
            let p = MaterialParameters { mu: 1.0, lambda: 2.0, delta: 0.3 };
            let energy = match model {
                "nonlinear" => DeformationEnergy::nonlinear(s, p),
                _ => {
                    let w = QuadraticWeights::from_reference(s, &NricVector::from_flat(s, z.clone()).unwrap(), WeightRecipe::InverseLength).unwrap();
                    DeformationEnergy::quadratic(s, p, w)
                }
            };
            let g1 = energy.gradient(&z, &zt, Argument::First).unwrap();
            let g2 = energy.gradient(&z, &zt, Argument::Second).unwrap();
            let h11 = energy.hessian(&z, &zt, HessianBlock::FirstFirst).unwrap().to_dense();
            let h22 = energy.hessian(&z, &zt, HessianBlock::SecondSecond).unwrap().to_dense();
            let h12 = energy.hessian(&z, &zt, HessianBlock::FirstSecond).unwrap().to_dense();
            let h = 1e-6;
            for i in 0..z.len() {
                let (mut zp, mut zm) = (z.clone(), z.clone());
                zp[i] += h;
                zm[i] -= h;
                let fd = (energy.value(&zp, &zt) - energy.value(&zm, &zt)) / (2.0 * h);
                assert!((fd - g1[i]).abs() < 1e-6 * (1.0 + fd.abs()), "{model} g1[{i}]: {fd} vs {}", g1[i]);
                let gp = energy.gradient(&zp, &zt, Argument::First).unwrap();
                let gm = energy.gradient(&zm, &zt, Argument::First).unwrap();
                let gp2 = energy.gradient(&zp, &zt, Argument::Second).unwrap();
                let gm2 = energy.gradient(&zm, &zt, Argument::Second).unwrap();
                for j in 0..z.len() {
                    let fd = (gp[j] - gm[j]) / (2.0 * h);
                    assert!((fd - h11[(j, i)]).abs() < 1e-5 * (1.0 + fd.abs()), "{model} h11[{j},{i}]");
                    let fd = (gp2[j] - gm2[j]) / (2.0 * h);
                    assert!((fd - h12[(i, j)]).abs() < 1e-5 * (1.0 + fd.abs()), "{model} h12[{i},{j}]");
                }
                let (mut tp, mut tm) = (zt.clone(), zt.clone());
                tp[i] += h;
                tm[i] -= h;
                let fd = (energy.value(&z, &tp) - energy.value(&z, &tm)) / (2.0 * h);
                assert!((fd - g2[i]).abs() < 1e-6 * (1.0 + fd.abs()), "{model} g2[{i}]");
                let gp = energy.gradient(&z, &tp, Argument::Second).unwrap();
                let gm = energy.gradient(&z, &tm, Argument::Second).unwrap();
                for j in 0..z.len() {
                    let fd = (gp[j] - gm[j]) / (2.0 * h);
                    assert!((fd - h22[(j, i)]).abs() < 1e-5 * (1.0 + fd.abs()), "{model} h22[{j},{i}]");
                }
            }
        }
    }

    #[test]
    fn minimum_at_identity() {
        let (shape, z, _) = random_pair(2);
        let e = DeformationEnergy::nonlinear(&shape.surface, MaterialParameters::default());
        assert!(e.value(&z, &z).abs() < 1e-13);
        let g = e.gradient(&z, &z, Argument::Second).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-12));
        let m = e.riemannian_metric(&z).unwrap().to_dense();
        let eig = m.clone().symmetric_eigen();
        assert!(eig.eigenvalues.min() >= -1e-8 * m.amax());
    }
}
