//! Procedural test meshes: platonic solids, subdivided spheres and height-field patches.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::Vector3;

use crate::mesh::{SimplicialSurface, VertexPositions};

/// A connectivity together with one embedding.
#[derive(Debug, Clone)]
pub struct Shape {
    pub surface: SimplicialSurface,
    pub positions: VertexPositions,
}

impl Shape {
    fn new(faces: Vec<[usize; 3]>, positions: Vec<Vector3<f64>>) -> Shape {
        let surface = SimplicialSurface::new(positions.len(), faces).expect("generator produced a valid mesh");
        Shape {
            surface,
            positions: VertexPositions::new(positions),
        }
    }

    /// Same connectivity, vertex positions moved by `f`.
    pub fn map_positions(&self, f: impl Fn(Vector3<f64>) -> Vector3<f64>) -> Shape {
        Shape {
            surface: self.surface.clone(),
            positions: VertexPositions::new(self.positions.as_slice().iter().map(|&p| f(p)).collect()),
        }
    }
}

/// Flip faces so normals point away from the centroid (for star-shaped closed meshes).
fn orient_outward(faces: &mut [[usize; 3]], pos: &[Vector3<f64>]) {
    let c = pos.iter().sum::<Vector3<f64>>() / pos.len() as f64;
    for f in faces.iter_mut() {
        let (a, b, d) = (pos[f[0]], pos[f[1]], pos[f[2]]);
        let n = (b - a).cross(&(d - a));
        if n.dot(&((a + b + d) / 3.0 - c)) < 0.0 {
            f.swap(1, 2);
        }
    }
}

/// Regular tetrahedron with unit edges.
pub fn tetrahedron() -> Shape {
    let s = 1.0 / (2.0 * 2f64.sqrt());
    let pos = vec![
        Vector3::new(s, s, s),
        Vector3::new(s, -s, -s),
        Vector3::new(-s, s, -s),
        Vector3::new(-s, -s, s),
    ];
    let mut faces = vec![[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];
    orient_outward(&mut faces, &pos);
    Shape::new(faces, pos)
}

/// Regular icosahedron with unit edges.
pub fn icosahedron() -> Shape {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ];
    let pos: Vec<Vector3<f64>> = raw.iter().map(|&(x, y, z)| Vector3::new(x, y, z) * 0.5).collect();
    let mut faces = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    orient_outward(&mut faces, &pos);
    Shape::new(faces, pos)
}

/// Icosahedron subdivided `levels` times and projected to the sphere of radius `radius`;
/// `20·4^levels` faces.
pub fn icosphere(levels: usize, radius: f64) -> Shape {
    let base = icosahedron();
    let mut pos: Vec<Vector3<f64>> = base.positions.as_slice().iter().map(|p| p.normalize()).collect();
    let mut faces = base.surface.faces().to_vec();
    for _ in 0..levels {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, pos: &mut Vec<Vector3<f64>>| {
            let key = (a.min(b), a.max(b));
            *mid.entry(key).or_insert_with(|| {
                pos.push(((pos[a] + pos[b]) * 0.5).normalize());
                pos.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut pos);
            let bc = midpoint(b, c, &mut pos);
            let ca = midpoint(c, a, &mut pos);
            next.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        faces = next;
    }
    let pos = pos.into_iter().map(|p| p * radius).collect();
    Shape::new(faces, pos)
}

/// Flat `nx × ny` quad grid on `[0, width] × [0, height]` split into triangles with alternating
/// diagonals; `2·nx·ny` faces, normals along `+z`. Vertex `(i, j)` has index `j·(nx + 1) + i`.
pub fn grid(nx: usize, ny: usize, width: f64, height: f64) -> Shape {
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut pos = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            pos.push(Vector3::new(width * i as f64 / nx as f64, height * j as f64 / ny as f64, 0.0));
        }
    }
    let mut faces = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            if (i + j) % 2 == 0 {
                faces.push([a, b, c]);
                faces.push([a, c, d]);
            } else {
                faces.push([a, b, d]);
                faces.push([b, c, d]);
            }
        }
    }
    Shape::new(faces, pos)
}

/// Grid over `[-1, 1]²` displaced by `z = h(x, y)`.
pub fn height_field(n: usize, h: impl Fn(f64, f64) -> f64) -> Shape {
    grid(n, n, 2.0, 2.0).map_positions(|p| {
        let (x, y) = (p.x - 1.0, p.y - 1.0);
        Vector3::new(x, y, h(x, y))
    })
}

/// Plate with a few smooth bumps; has a boundary.
pub fn bumpy_plate(n: usize) -> Shape {
    height_field(n, |x, y| 0.15 * (PI * x).sin() * (PI * y).cos() + 0.1 * (-4.0 * (x * x + y * y)).exp())
}

/// Quadratic saddle `z = c·(x² − y²)`.
pub fn saddle(n: usize, c: f64) -> Shape {
    height_field(n, |x, y| c * (x * x - y * y))
}

/// Dome `z = c·(x² + y²)`; `c < 0` gives the mirror image.
pub fn dome(n: usize, c: f64) -> Shape {
    height_field(n, |x, y| c * (x * x + y * y))
}

/// The plate over `[-1, 1]²` wrapped isometrically around a cylinder whose axis is parallel to
/// `axis` (`0`: x-axis, `1`: y-axis), with curvature `kappa` (signed).
pub fn bent_plate(n: usize, kappa: f64, axis: usize) -> Shape {
    grid(n, n, 2.0, 2.0).map_positions(|p| {
        let (x, y) = (p.x - 1.0, p.y - 1.0);
        let s = if axis == 0 { y } else { x };
        let (u, w) = if kappa.abs() < 1e-12 {
            (s, 0.0)
        } else {
            ((kappa * s).sin() / kappa, (1.0 - (kappa * s).cos()) / kappa)
        };
        if axis == 0 {
            Vector3::new(x, u, w)
        } else {
            Vector3::new(u, y, w)
        }
    })
}

/// The plate over `[-1, 1]²` (even `n`) folded by `fold` radians along its middle grid line
/// parallel to `axis`: with `axis = 0` the half `y > 0` is lifted. An exact isometry.
pub fn folded_plate(n: usize, fold: f64, axis: usize) -> Shape {
    grid(n, n, 2.0, 2.0).map_positions(|p| {
        let (x, y) = (p.x - 1.0, p.y - 1.0);
        let (s, t) = if axis == 0 { (y, x) } else { (x, y) };
        let (s, w) = if s <= 0.0 { (s, 0.0) } else { (s * fold.cos(), s * fold.sin()) };
        if axis == 0 {
            Vector3::new(t, s, w)
        } else {
            Vector3::new(s, t, w)
        }
    })
}

/// Flat strip `[0, length] × [0, width]` with `nx × ny` quads, folded by `fold` radians along
/// the vertical grid line `x = i_crease` (a straight crease across the whole strip).
pub fn creased_strip(nx: usize, ny: usize, length: f64, width: f64, i_crease: usize, fold: f64) -> Shape {
    let xc = length * i_crease as f64 / nx as f64;
    grid(nx, ny, length, width).map_positions(|p| {
        if p.x <= xc {
            p
        } else {
            let d = p.x - xc;
            Vector3::new(xc + d * fold.cos(), p.y, d * fold.sin())
        }
    })
}

/// Closed torus; rejected as a simplicial surface, so only the raw data is returned.
pub fn torus_faces(nu: usize, nv: usize) -> (usize, Vec<[usize; 3]>) {
    let idx = |i: usize, j: usize| (j % nv) * nu + (i % nu);
    let mut faces = Vec::new();
    for j in 0..nv {
        for i in 0..nu {
            faces.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            faces.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    (nu * nv, faces)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        let t = tetrahedron();
        assert_eq!((t.surface.vertex_count(), t.surface.edge_count(), t.surface.face_count()), (4, 6, 4));
        let i = icosahedron();
        assert_eq!((i.surface.vertex_count(), i.surface.edge_count(), i.surface.face_count()), (12, 30, 20));
        let s = icosphere(2, 1.0);
        assert_eq!(s.surface.face_count(), 320);
        assert_eq!(s.surface.euler_characteristic(), 2);
        let g = grid(4, 3, 1.0, 1.0);
        assert_eq!(g.surface.face_count(), 24);
        assert_eq!(g.surface.boundary_loops(), 1);
        let (n, f) = torus_faces(6, 5);
        assert!(SimplicialSurface::new(n, f).is_err());
    }

    #[test]
    fn unit_edges() {
        for shape in [tetrahedron(), icosahedron()] {
            for e in shape.surface.edges() {
                let [a, b] = e.vertices;
                assert!(((shape.positions[a] - shape.positions[b]).norm() - 1.0).abs() < 1e-14);
            }
        }
    }
}
