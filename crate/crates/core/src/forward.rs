//! The map from vertex positions to edge lengths and signed dihedral angles, and its Jacobian.

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{NricVector, SimplicialSurface, VertexPositions};
use crate::sparse::{CscMatrix, Triplets};

/// Unnormalized normal `(p1 − p0) × (p2 − p0)` of face `f`.
pub fn face_normal(surface: &SimplicialSurface, x: &VertexPositions, f: usize) -> Vector3<f64> {
    let [a, b, c] = surface.faces()[f];
    (x[b] - x[a]).cross(&(x[c] - x[a]))
}

pub fn edge_length(surface: &SimplicialSurface, x: &VertexPositions, e: usize) -> f64 {
    let [a, b] = surface.edges()[e].vertices;
    (x[b] - x[a]).norm()
}

/// Vertex of face `f` not on edge `e`.
fn apex(surface: &SimplicialSurface, f: usize, e: usize) -> usize {
    let [v0, v1] = surface.edges()[e].vertices;
    *surface.faces()[f]
        .iter()
        .find(|&&v| v != v0 && v != v1)
        .expect("triangle has an apex")
}

/// Signed dihedral angle of interior edge `e` in `(−π, π]`; zero for a flat hinge.
///
/// With `f` the face holding `e` positively, `f'` the other face and `ê` the unit edge direction
/// in `f`, the angle is `atan2(⟨N_f × N_f', ê⟩, ⟨N_f, N_f'⟩)`.
pub fn dihedral_angle(surface: &SimplicialSurface, x: &VertexPositions, e: usize) -> f64 {
    let edge = &surface.edges()[e];
    let (Some(f), Some(g)) = (edge.faces[0], edge.faces[1]) else {
        return 0.0;
    };
    let [v0, v1] = edge.vertices;
    let d = (x[v1] - x[v0]).normalize();
    let nf = face_normal(surface, x, f).normalize();
    let ng = face_normal(surface, x, g).normalize();
    nf.cross(&ng).dot(&d).atan2(nf.dot(&ng))
}

/// Gradient of the dihedral angle of interior edge `e` with respect to its four vertices,
/// returned as `[(vertex, ∂θ/∂p)]` for `v0, v1`, the apex of `faces[0]` and the apex of `faces[1]`.
pub fn dihedral_gradient(
    surface: &SimplicialSurface,
    x: &VertexPositions,
    e: usize,
) -> [(usize, Vector3<f64>); 4] {
    let edge = &surface.edges()[e];
    let f = edge.faces[0].expect("interior edge");
    let g = edge.faces[1].expect("interior edge");
    let [v0, v1] = edge.vertices;
    let (pb, pa) = (apex(surface, f, e), apex(surface, g, e));
    let ev = x[v1] - x[v0];
    let len2 = ev.norm_squared();
    let len = len2.sqrt();
    let nb = face_normal(surface, x, f);
    let na = face_normal(surface, x, g);
    // |N| = 2·area = height·|e|, so N/|N|² · |e| = n̂ / height.
    let db = -nb * (len / nb.norm_squared());
    let da = -na * (len / na.norm_squared());
    let sb = (x[pb] - x[v0]).dot(&ev) / len2;
    let sa = (x[pa] - x[v0]).dot(&ev) / len2;
    let d0 = -(da * (1.0 - sa)) - db * (1.0 - sb);
    let d1 = -(da * sa) - db * sb;
    [(v0, d0), (v1, d1), (pb, db), (pa, da)]
}

/// `Z(X)`: lengths of all edges and dihedral angles of all interior edges.
pub fn nric_from_positions(surface: &SimplicialSurface, x: &VertexPositions) -> Result<NricVector> {
    if x.len() != surface.vertex_count() {
        return Err(Error::DimensionMismatch {
            expected: surface.vertex_count(),
            actual: x.len(),
        });
    }
    if let Some(face) = x.first_degenerate_face(surface) {
        return Err(Error::DegenerateFace { face });
    }
    let lengths: Vec<f64> = (0..surface.edge_count())
        .into_par_iter()
        .map(|e| edge_length(surface, x, e))
        .collect();
    let angles: Vec<f64> = surface
        .interior_edges()
        .par_iter()
        .map(|&e| dihedral_angle(surface, x, e))
        .collect();
    Ok(NricVector::new(lengths, angles))
}

/// Sparse Jacobian `DZ(X)` of size `nric_dim × 3|V|`; columns are `(x, y, z)` per vertex.
pub fn forward_jacobian(surface: &SimplicialSurface, x: &VertexPositions) -> CscMatrix {
    let ne = surface.edge_count();
    let mut t = Triplets::with_capacity(surface.nric_dim(), 3 * surface.vertex_count(), 6 * ne + 12 * surface.interior_edge_count());
    for (e, edge) in surface.edges().iter().enumerate() {
        let [v0, v1] = edge.vertices;
        let d = (x[v1] - x[v0]).normalize();
        for k in 0..3 {
            t.push(e, 3 * v0 + k, -d[k]);
            t.push(e, 3 * v1 + k, d[k]);
        }
    }
    for (slot, &e) in surface.interior_edges().iter().enumerate() {
        for (v, g) in dihedral_gradient(surface, x, e) {
            for k in 0..3 {
                t.push(ne + slot, 3 * v + k, g[k]);
            }
        }
    }
    t.to_csc()
}

/// Smallest difference `a − b` modulo `2π`, in `(−π, π]`.
pub fn wrap_angle(d: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let r = d.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Angle defect `2π − Σγ` of the embedded corners around each interior vertex, in the order of
/// `surface.interior_vertices()`.
pub fn angle_defects(surface: &SimplicialSurface, x: &VertexPositions) -> Vec<f64> {
    let mut sum = vec![0.0; surface.vertex_count()];
    for f in surface.faces() {
        for k in 0..3 {
            let (p, a, b) = (x[f[k]], x[f[(k + 1) % 3]], x[f[(k + 2) % 3]]);
            sum[f[k]] += (a - p).angle(&(b - p));
        }
    }
    surface.interior_vertices().iter().map(|&v| std::f64::consts::TAU - sum[v]).collect()
}
