use nalgebra::{Matrix3, Rotation3, Unit, Vector3};

use super::tree::TraversalTree;
use crate::error::{Error, Result};
use crate::integrability::{ConstraintSystem, ROTATION_RESIDUAL_SENTINEL};
use crate::mesh::{interior_angle, triangle_admissible, SimplicialSurface, VertexPositions};

/// Frames are projected back to rotations after this many traversal steps.
pub const REORTHONORMALIZE_EVERY: usize = 64;

/// Position of one vertex and orientation of the root face.
///
/// The frame's columns are the unit direction of the face's first edge, the in-plane
/// perpendicular pointing into the face and the unit normal. The origin is the face's first
/// vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameSeed {
    pub face: usize,
    pub origin: Vector3<f64>,
    pub frame: Matrix3<f64>,
}

impl FrameSeed {
    pub fn new(face: usize, origin: Vector3<f64>, frame: Matrix3<f64>) -> Result<Self> {
        let err = (frame.transpose() * frame - Matrix3::identity()).amax();
        if err > 1e-12 || frame.determinant() < 0.0 {
            return Err(Error::InvalidArgument("seed frame is not a rotation".into()));
        }
        Ok(FrameSeed { face, origin, frame })
    }

    /// Origin at zero and identity frame at `face`.
    pub fn at_face(face: usize) -> Self {
        FrameSeed {
            face,
            origin: Vector3::zeros(),
            frame: Matrix3::identity(),
        }
    }
}

/// Lowest-index face among those whose vertices have the smallest summed rotation residual.
/// Boundary vertices contribute zero.
pub fn default_root(system: &ConstraintSystem, z: &[f64]) -> usize {
    let surface = system.surface();
    let mut r = vec![0.0; surface.vertex_count()];
    for (i, fan) in surface.fans().iter().enumerate() {
        r[fan.vertex] = match system.loop_product(i, z) {
            Some(p) => 4.0 * p.vec().norm_squared() / p.norm_squared(),
            None => ROTATION_RESIDUAL_SENTINEL,
        };
    }
    let mut best = (f64::INFINITY, 0);
    for (f, face) in surface.faces().iter().enumerate() {
        let s: f64 = face.iter().map(|&v| r[v]).sum();
        if s < best.0 {
            best = (s, f);
        }
    }
    best.1
}

/// Interior angles at the three corners; all zero when the lengths are not a strict triangle.
/// Corner `k` lies between local edges `k` and `k + 2`.
fn corner_angles(l: [f64; 3]) -> Option<[f64; 3]> {
    if !triangle_admissible(l) {
        return None;
    }
    Some([0, 1, 2].map(|k| interior_angle(l[k], l[(k + 2) % 3], l[(k + 1) % 3]).expect("admissible")))
}

/// Edge vectors of a face in its own frame: `E_k` runs from corner `k` to corner `k + 1`.
pub fn local_edge_vectors(l: [f64; 3], angles: [f64; 3]) -> [Vector3<f64>; 3] {
    let [a0, a1, _] = angles;
    [
        Vector3::new(l[0], 0.0, 0.0),
        Vector3::new(-l[1] * a1.cos(), l[1] * a1.sin(), 0.0),
        Vector3::new(-l[2] * a0.cos(), -l[2] * a0.sin(), 0.0),
    ]
}

/// Corner positions of a face in its own frame.
fn local_corners(e: &[Vector3<f64>; 3]) -> [Vector3<f64>; 3] {
    [Vector3::zeros(), e[0], e[0] + e[1]]
}

struct FaceGeometry {
    lengths: [f64; 3],
    angles: [f64; 3],
    admissible: bool,
}

fn geometry(surface: &SimplicialSurface, z: &[f64], f: usize) -> FaceGeometry {
    let lengths = surface.face_lengths(f, &z[..surface.edge_count()]);
    match corner_angles(lengths) {
        Some(angles) => FaceGeometry {
            lengths,
            angles,
            admissible: true,
        },
        None => FaceGeometry {
            lengths,
            angles: [0.0; 3],
            admissible: false,
        },
    }
}

/// Rotation `R` with `F_h = F_f R` for neighbouring faces `f` and `h` sharing edge `e`.
///
/// Crossing `e` turns the normal by the dihedral angle about the edge as directed in `f`; this
/// holds for either orientation of the pair, since swapping faces flips both the edge and the
/// sign of the angle.
fn transition(surface: &SimplicialSurface, z: &[f64], f: usize, h: usize, e: usize, gf: &FaceGeometry, gh: &FaceGeometry) -> Matrix3<f64> {
    let k = surface.face_edges()[f].iter().position(|&x| x == e).expect("edge of f");
    let m = surface.face_edges()[h].iter().position(|&x| x == e).expect("edge of h");
    let theta = z[surface.angle_index(e).expect("interior edge")];
    let qf = local_corners(&local_edge_vectors(gf.lengths, gf.angles));
    let (start, end) = (qf[(k + 1) % 3], qf[k]);
    let d = (end - start).normalize();
    let normal = Rotation3::from_axis_angle(&Unit::new_unchecked(-d), theta) * Vector3::z();
    let perp = normal.cross(&d);
    let a = gh.angles[m];
    let apex = start + gh.lengths[(m + 2) % 3] * (a.cos() * d + a.sin() * perp);
    let mut q = [Vector3::zeros(); 3];
    q[m] = start;
    q[(m + 1) % 3] = end;
    q[(m + 2) % 3] = apex;
    let dh = (q[1] - q[0]).normalize();
    Matrix3::from_columns(&[dh, normal.cross(&dh), normal])
}

/// Nearest rotation in the Frobenius norm.
fn polar(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    let r = u * vt;
    if r.determinant() < 0.0 {
        let mut u = u;
        let i = svd.singular_values.imin();
        u.column_mut(i).neg_mut();
        u * vt
    } else {
        r
    }
}

/// Positions produced by a traversal, with per-face and per-vertex diagnostics.
#[derive(Debug, Clone)]
pub struct TraversalOutcome {
    pub positions: VertexPositions,
    /// Faces whose lengths violate the triangle inequality; their angles were taken as zero.
    pub degenerate_faces: Vec<usize>,
    /// Per vertex: distance between the first placement and the largest later disagreement.
    pub mismatch: Vec<f64>,
    /// Largest `‖E₁ + E₂ + E₃‖` over placed faces.
    pub closure_error: f64,
    /// Largest `‖FᵀF − I‖_max` over all frames.
    pub frame_error: f64,
}

impl TraversalOutcome {
    pub fn max_mismatch(&self) -> f64 {
        self.mismatch.iter().copied().fold(0.0, f64::max)
    }
}

/// Propagates frames along `tree` and places each face's new vertex by its edge vectors. The
/// first placement of a vertex wins.
pub fn traverse_reconstruct(surface: &SimplicialSurface, z: &[f64], tree: &TraversalTree, seed: &FrameSeed) -> Result<TraversalOutcome> {
    if z.len() != surface.nric_dim() {
        return Err(Error::DimensionMismatch {
            expected: surface.nric_dim(),
            actual: z.len(),
        });
    }
    if z[..surface.edge_count()].iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidArgument("edge lengths must be positive and finite".into()));
    }
    if seed.face != tree.root {
        return Err(Error::InvalidArgument(format!(
            "seed face {} differs from tree root {}",
            seed.face, tree.root
        )));
    }
    let nv = surface.vertex_count();
    let nf = surface.face_count();
    let geo: Vec<FaceGeometry> = (0..nf).map(|f| geometry(surface, z, f)).collect();
    let mut frames = vec![Matrix3::zeros(); nf];
    let mut placed: Vec<Option<Vector3<f64>>> = vec![None; nv];
    let mut mismatch = vec![0.0; nv];
    let mut closure_error = 0.0_f64;
    let mut frame_error = 0.0_f64;

    let mut place = |v: usize, p: Vector3<f64>, placed: &mut Vec<Option<Vector3<f64>>>| match placed[v] {
        None => placed[v] = Some(p),
        Some(q) => mismatch[v] = f64::max(mismatch[v], (p - q).norm()),
    };

    for (step, &h) in tree.order.iter().enumerate() {
        let mut frame = match tree.parent[h] {
            None => seed.frame,
            Some((f, e)) => frames[f] * transition(surface, z, f, h, e, &geo[f], &geo[h]),
        };
        if step > 0 && step % REORTHONORMALIZE_EVERY == 0 {
            frame = polar(&frame);
        }
        frame_error = frame_error.max((frame.transpose() * frame - Matrix3::identity()).amax());
        frames[h] = frame;
        let ev = local_edge_vectors(geo[h].lengths, geo[h].angles).map(|v| frame * v);
        closure_error = closure_error.max((ev[0] + ev[1] + ev[2]).norm());
        let face = surface.faces()[h];
        match tree.parent[h] {
            None => {
                place(face[0], seed.origin, &mut placed);
                place(face[1], seed.origin + ev[0], &mut placed);
                place(face[2], seed.origin + ev[0] + ev[1], &mut placed);
            }
            Some((_, e)) => {
                let m = surface.face_edges()[h].iter().position(|&x| x == e).unwrap();
                let from = face[(m + 1) % 3];
                let base = placed[from].expect("shared vertices are placed with the parent");
                place(face[(m + 2) % 3], base + ev[(m + 1) % 3], &mut placed);
            }
        }
    }
    let degenerate_faces = (0..nf).filter(|&f| !geo[f].admissible).collect();
    let positions = VertexPositions::new(placed.into_iter().map(|p| p.expect("every vertex lies on a face")).collect());
    Ok(TraversalOutcome {
        positions,
        degenerate_faces,
        mismatch,
        closure_error,
        frame_error,
    })
}
