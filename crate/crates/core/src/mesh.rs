//! Connectivity of oriented, simply connected triangle meshes and the NRIC vector layout.
//!
//! Local conventions used throughout the crate:
//!
//! * face `f = [c0, c1, c2]` is listed in its orientation order;
//! * local edge `k` of a face runs from corner `k` to corner `k + 1 (mod 3)`;
//! * an [`Edge`] stores its vertices in the direction in which it appears in
//!   `faces[0]`; an interior edge appears reversed in `faces[1]`.

use std::collections::HashMap;

use nalgebra::Vector3;

use crate::error::{Error, Result, TopologyError};

/// An undirected mesh edge together with its (at most two) adjacent faces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    /// Endpoints, directed as in `faces[0]`.
    pub vertices: [usize; 2],
    /// `faces[0]` holds the edge in positive orientation, `faces[1]` (if any) reversed.
    pub faces: [Option<usize>; 2],
}

impl Edge {
    pub fn is_interior(&self) -> bool {
        self.faces[1].is_some()
    }
}

/// Cyclic fan of faces around an interior vertex.
///
/// `faces[i] = (v, a_i, b_i)` in orientation order and `b_i = a_{i+1}`. `edges[i]` is the
/// edge `{v, b_i}` shared by `faces[i]` and `faces[i + 1]`, and `opposite[i]` is the edge of
/// `faces[i]` not incident to `v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexFan {
    pub vertex: usize,
    pub faces: Vec<usize>,
    pub edges: Vec<usize>,
    pub opposite: Vec<usize>,
}

impl VertexFan {
    pub fn valence(&self) -> usize {
        self.faces.len()
    }
}

/// Immutable connectivity of an oriented, connected, simply connected triangle mesh.
#[derive(Debug, Clone)]
pub struct SimplicialSurface {
    vertex_count: usize,
    faces: Vec<[usize; 3]>,
    edges: Vec<Edge>,
    face_edges: Vec<[usize; 3]>,
    angle_slot: Vec<Option<usize>>,
    interior_edges: Vec<usize>,
    on_boundary: Vec<bool>,
    interior_vertices: Vec<usize>,
    fans: Vec<VertexFan>,
    dual: Vec<Vec<(usize, usize)>>,
    boundary_loops: usize,
}

impl SimplicialSurface {
    /// Builds and validates the connectivity. Non-manifold, non-orientable, disconnected and
    /// non-simply-connected input is rejected.
    pub fn new(vertex_count: usize, faces: Vec<[usize; 3]>) -> Result<Self, TopologyError> {
        if faces.is_empty() {
            return Err(TopologyError::Empty);
        }
        let mut referenced = vec![false; vertex_count];
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                if v >= vertex_count {
                    return Err(TopologyError::VertexOutOfRange {
                        face: fi,
                        vertex: v,
                        vertex_count,
                    });
                }
                referenced[v] = true;
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(TopologyError::RepeatedVertex { face: fi });
            }
        }
        if let Some(v) = referenced.iter().position(|r| !r) {
            return Err(TopologyError::UnreferencedVertex { vertex: v });
        }

        let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut face_edges = vec![[0usize; 3]; faces.len()];
        for (fi, f) in faces.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                match lookup.get(&key) {
                    None => {
                        lookup.insert(key, edges.len());
                        face_edges[fi][k] = edges.len();
                        edges.push(Edge {
                            vertices: [a, b],
                            faces: [Some(fi), None],
                        });
                    }
                    Some(&ei) => {
                        let e = &mut edges[ei];
                        if e.faces[1].is_some() {
                            return Err(TopologyError::NonManifoldEdge(key.0, key.1));
                        }
                        if e.vertices != [b, a] {
                            return Err(TopologyError::NonOrientable(key.0, key.1));
                        }
                        e.faces[1] = Some(fi);
                        face_edges[fi][k] = ei;
                    }
                }
            }
        }

        let mut on_boundary = vec![false; vertex_count];
        let mut interior_edges = Vec::new();
        let mut angle_slot = vec![None; edges.len()];
        for (ei, e) in edges.iter().enumerate() {
            if e.is_interior() {
                angle_slot[ei] = Some(interior_edges.len());
                interior_edges.push(ei);
            } else {
                on_boundary[e.vertices[0]] = true;
                on_boundary[e.vertices[1]] = true;
            }
        }

        let mut incident: Vec<Vec<usize>> = vec![Vec::new(); vertex_count];
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                incident[v].push(fi);
            }
        }

        let mut surface = SimplicialSurface {
            vertex_count,
            faces,
            edges,
            face_edges,
            angle_slot,
            interior_edges,
            on_boundary,
            interior_vertices: Vec::new(),
            fans: Vec::new(),
            dual: Vec::new(),
            boundary_loops: 0,
        };

        // Every vertex star must be a single cycle (interior) or a single chain (boundary).
        for v in 0..vertex_count {
            let star = &incident[v];
            if surface.on_boundary[v] {
                let start = star
                    .iter()
                    .copied()
                    .find(|&f| {
                        // The chain starts at the face whose edge (v -> a) lies on the boundary.
                        let k = surface.corner_of(f, v);
                        let e = surface.face_edges[f][k];
                        !surface.edges[e].is_interior()
                    })
                    .ok_or(TopologyError::NonManifoldVertex { vertex: v })?;
                let mut count = 1;
                let mut f = start;
                while let Some(next) = surface.next_in_fan(f, v) {
                    f = next;
                    count += 1;
                    if count > star.len() {
                        return Err(TopologyError::NonManifoldVertex { vertex: v });
                    }
                }
                if count != star.len() {
                    return Err(TopologyError::NonManifoldVertex { vertex: v });
                }
            } else {
                let fan = surface.build_fan(v, star)?;
                surface.interior_vertices.push(v);
                surface.fans.push(fan);
            }
        }

        let mut dual = vec![Vec::new(); surface.faces.len()];
        for &ei in &surface.interior_edges {
            let e = &surface.edges[ei];
            let (f, g) = (e.faces[0].unwrap(), e.faces[1].unwrap());
            dual[f].push((g, ei));
            dual[g].push((f, ei));
        }
        for adj in &mut dual {
            adj.sort_unstable();
        }
        surface.dual = dual;

        // Connectivity of the dual graph.
        let mut seen = vec![false; surface.faces.len()];
        let mut stack = vec![0];
        seen[0] = true;
        let mut reached = 1;
        while let Some(f) = stack.pop() {
            for &(g, _) in &surface.dual[f] {
                if !seen[g] {
                    seen[g] = true;
                    reached += 1;
                    stack.push(g);
                }
            }
        }
        if reached != surface.faces.len() {
            return Err(TopologyError::Disconnected);
        }

        surface.boundary_loops = surface.count_boundary_loops();
        let euler = surface.euler_characteristic();
        let simply_connected = matches!((surface.boundary_loops, euler), (0, 2) | (1, 1));
        if !simply_connected {
            return Err(TopologyError::NotSimplyConnected {
                euler,
                boundary_loops: surface.boundary_loops,
            });
        }
        Ok(surface)
    }

    fn corner_of(&self, f: usize, v: usize) -> usize {
        self.faces[f].iter().position(|&c| c == v).expect("vertex not in face")
    }

    /// Face following `f` counter-clockwise around `v`: across the edge `{v, b}` where
    /// `f = (v, a, b)`.
    fn next_in_fan(&self, f: usize, v: usize) -> Option<usize> {
        let k = self.corner_of(f, v);
        let e = self.face_edges[f][(k + 2) % 3];
        self.other_face(e, f)
    }

    fn build_fan(&self, v: usize, star: &[usize]) -> Result<VertexFan, TopologyError> {
        let start = *star.iter().min().expect("vertex has faces");
        let mut faces = Vec::with_capacity(star.len());
        let mut edges = Vec::with_capacity(star.len());
        let mut opposite = Vec::with_capacity(star.len());
        let mut f = start;
        loop {
            let k = self.corner_of(f, v);
            faces.push(f);
            edges.push(self.face_edges[f][(k + 2) % 3]);
            opposite.push(self.face_edges[f][(k + 1) % 3]);
            let next = self
                .next_in_fan(f, v)
                .ok_or(TopologyError::NonManifoldVertex { vertex: v })?;
            if next == start {
                break;
            }
            if faces.len() >= star.len() {
                return Err(TopologyError::NonManifoldVertex { vertex: v });
            }
            f = next;
        }
        if faces.len() != star.len() {
            return Err(TopologyError::NonManifoldVertex { vertex: v });
        }
        Ok(VertexFan {
            vertex: v,
            faces,
            edges,
            opposite,
        })
    }

    fn count_boundary_loops(&self) -> usize {
        let mut next: HashMap<usize, usize> = HashMap::new();
        for e in self.edges.iter().filter(|e| !e.is_interior()) {
            next.insert(e.vertices[0], e.vertices[1]);
        }
        let mut visited: HashMap<usize, bool> = next.keys().map(|&k| (k, false)).collect();
        let mut starts: Vec<usize> = next.keys().copied().collect();
        starts.sort_unstable();
        let mut loops = 0;
        for s in starts {
            if visited[&s] {
                continue;
            }
            loops += 1;
            let mut v = s;
            while !visited[&v] {
                visited.insert(v, true);
                v = next[&v];
            }
        }
        loops
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Global edge indices of the local edges of every face.
    pub fn face_edges(&self) -> &[[usize; 3]] {
        &self.face_edges
    }

    /// Interior edges in ascending edge order; position `i` owns angle slot `i`.
    pub fn interior_edges(&self) -> &[usize] {
        &self.interior_edges
    }

    pub fn interior_edge_count(&self) -> usize {
        self.interior_edges.len()
    }

    /// Index of the dihedral angle of edge `e` inside the angle block, `None` on the boundary.
    pub fn angle_slot(&self, e: usize) -> Option<usize> {
        self.angle_slot[e]
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.on_boundary[v]
    }

    pub fn interior_vertices(&self) -> &[usize] {
        &self.interior_vertices
    }

    /// Fans of the interior vertices, in the order of [`Self::interior_vertices`].
    pub fn fans(&self) -> &[VertexFan] {
        &self.fans
    }

    /// Dual adjacency: for each face, `(neighbour face, shared edge)` sorted by face index.
    pub fn dual_neighbors(&self, f: usize) -> &[(usize, usize)] {
        &self.dual[f]
    }

    pub fn other_face(&self, e: usize, f: usize) -> Option<usize> {
        match self.edges[e].faces {
            [Some(a), b] if a == f => b,
            [Some(a), Some(b)] if b == f => Some(a),
            _ => None,
        }
    }

    pub fn is_closed(&self) -> bool {
        self.boundary_loops == 0
    }

    pub fn boundary_loops(&self) -> usize {
        self.boundary_loops
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count as i64 - self.edges.len() as i64 + self.faces.len() as i64
    }

    /// Number of NRIC entries: one length per edge plus one angle per interior edge.
    pub fn nric_dim(&self) -> usize {
        self.edges.len() + self.interior_edges.len()
    }

    /// Position of the length of edge `e` in a flat NRIC vector.
    pub fn length_index(&self, e: usize) -> usize {
        e
    }

    /// Position of the dihedral angle of edge `e` in a flat NRIC vector.
    pub fn angle_index(&self, e: usize) -> Option<usize> {
        self.angle_slot[e].map(|s| self.edges.len() + s)
    }

    /// Lengths of the three local edges of face `f` read from a flat length block.
    pub fn face_lengths(&self, f: usize, lengths: &[f64]) -> [f64; 3] {
        let fe = &self.face_edges[f];
        [lengths[fe[0]], lengths[fe[1]], lengths[fe[2]]]
    }

    /// Checks `𝒯_f > 0` for every face.
    pub fn lengths_admissible(&self, lengths: &[f64]) -> bool {
        (0..self.faces.len()).all(|f| triangle_admissible(self.face_lengths(f, lengths)))
    }
}

/// Stacked edge lengths and interior dihedral angles, `z = (l, θ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NricVector {
    data: Vec<f64>,
    edge_count: usize,
}

impl NricVector {
    pub fn new(lengths: Vec<f64>, angles: Vec<f64>) -> Self {
        let edge_count = lengths.len();
        let mut data = lengths;
        data.extend(angles);
        NricVector { data, edge_count }
    }

    /// Wraps a flat vector laid out as `surface.nric_dim()`.
    pub fn from_flat(surface: &SimplicialSurface, data: Vec<f64>) -> Result<Self> {
        if data.len() != surface.nric_dim() {
            return Err(Error::DimensionMismatch {
                expected: surface.nric_dim(),
                actual: data.len(),
            });
        }
        Ok(NricVector {
            data,
            edge_count: surface.edge_count(),
        })
    }

    pub fn lengths(&self) -> &[f64] {
        &self.data[..self.edge_count]
    }

    pub fn angles(&self) -> &[f64] {
        &self.data[self.edge_count..]
    }

    pub fn lengths_mut(&mut self) -> &mut [f64] {
        &mut self.data[..self.edge_count]
    }

    pub fn angles_mut(&mut self) -> &mut [f64] {
        &mut self.data[self.edge_count..]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Lengths strictly positive and angles in `(-π, π)`.
    pub fn is_valid(&self) -> bool {
        self.lengths().iter().all(|&l| l > 0.0 && l.is_finite())
            && self
                .angles()
                .iter()
                .all(|&t| t.abs() < std::f64::consts::PI)
    }
}

/// Nodal positions of a discrete surface.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexPositions {
    positions: Vec<Vector3<f64>>,
}

impl VertexPositions {
    pub fn new(positions: Vec<Vector3<f64>>) -> Self {
        VertexPositions { positions }
    }

    /// Validates that no face of `surface` is degenerate.
    pub fn checked(surface: &SimplicialSurface, positions: Vec<Vector3<f64>>) -> Result<Self> {
        if positions.len() != surface.vertex_count() {
            return Err(Error::DimensionMismatch {
                expected: surface.vertex_count(),
                actual: positions.len(),
            });
        }
        let x = VertexPositions { positions };
        if let Some(face) = x.first_degenerate_face(surface) {
            return Err(Error::DegenerateFace { face });
        }
        Ok(x)
    }

    pub fn first_degenerate_face(&self, surface: &SimplicialSurface) -> Option<usize> {
        surface.faces().iter().position(|f| {
            let (a, b, c) = (self[f[0]], self[f[1]], self[f[2]]);
            let n = (b - a).cross(&(c - a));
            let scale = (b - a).norm_squared().max((c - a).norm_squared());
            !(n.norm() > 1e-14 * scale) || !n.norm().is_finite()
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn as_slice(&self) -> &[Vector3<f64>] {
        &self.positions
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.positions.iter().flat_map(|p| [p.x, p.y, p.z]).collect()
    }

    pub fn from_flat(flat: &[f64]) -> Self {
        VertexPositions {
            positions: flat
                .chunks_exact(3)
                .map(|c| Vector3::new(c[0], c[1], c[2]))
                .collect(),
        }
    }

    /// Largest distance between two vertices of the bounding box.
    pub fn diameter(&self) -> f64 {
        let mut lo = Vector3::repeat(f64::INFINITY);
        let mut hi = Vector3::repeat(f64::NEG_INFINITY);
        for p in &self.positions {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        (hi - lo).norm()
    }
}

impl std::ops::Index<usize> for VertexPositions {
    type Output = Vector3<f64>;
    fn index(&self, i: usize) -> &Vector3<f64> {
        &self.positions[i]
    }
}

impl std::ops::IndexMut<usize> for VertexPositions {
    fn index_mut(&mut self, i: usize) -> &mut Vector3<f64> {
        &mut self.positions[i]
    }
}

/// Per-face triangle-inequality values `𝒯_f(l)` for lengths `(l_i, l_j, l_k)`.
pub fn triangle_inequality_values(l: [f64; 3]) -> [f64; 3] {
    [l[0] + l[1] - l[2], l[0] - l[1] + l[2], -l[0] + l[1] + l[2]]
}

pub fn triangle_admissible(l: [f64; 3]) -> bool {
    triangle_inequality_values(l).iter().all(|&t| t > 0.0)
}

/// Triangle-inequality values of every face plus whether all are strictly positive.
pub fn triangle_inequalities(surface: &SimplicialSurface, z: &NricVector) -> (Vec<[f64; 3]>, bool) {
    let values: Vec<[f64; 3]> = (0..surface.face_count())
        .map(|f| triangle_inequality_values(surface.face_lengths(f, z.lengths())))
        .collect();
    let ok = values.iter().all(|t| t.iter().all(|&x| x > 0.0));
    (values, ok)
}

/// Law-of-cosines ratio `Q(a, b, c) = (a² + b² − c²) / (2ab)`.
pub fn cosine_ratio(a: f64, b: f64, c: f64) -> f64 {
    (a * a + b * b - c * c) / (2.0 * a * b)
}

/// `16·area²` of a triangle with side lengths `a, b, c`; negative when inadmissible.
pub fn sixteen_area_squared(a: f64, b: f64, c: f64) -> f64 {
    (a + b + c) * (-a + b + c) * (a - b + c) * (a + b - c)
}

/// Area by Heron's formula in Kahan's ordering, which stays accurate for needle triangles.
pub fn face_area(a: f64, b: f64, c: f64) -> Result<f64> {
    if !triangle_admissible([a, b, c]) {
        return Err(Error::TriangleInequalityViolated(a, b, c));
    }
    let mut s = [a, b, c];
    s.sort_by(|x, y| y.partial_cmp(x).unwrap());
    let [a, b, c] = s;
    let p = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
    Ok(0.25 * p.max(0.0).sqrt())
}

/// Interior angle between the sides of length `a` and `b`, i.e. opposite `c`.
pub fn interior_angle(a: f64, b: f64, c: f64) -> Result<f64> {
    let area = face_area(a, b, c)?;
    Ok((4.0 * area).atan2(a * a + b * b - c * c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn square() -> SimplicialSurface {
        SimplicialSurface::new(4, vec![[0, 1, 2], [0, 2, 3]]).unwrap()
    }

    #[test]
    fn square_connectivity() {
        let s = square();
        assert_eq!(s.edge_count(), 5);
        assert_eq!(s.interior_edge_count(), 1);
        assert_eq!(s.interior_vertices().len(), 0);
        assert_eq!(s.euler_characteristic(), 1);
        assert_eq!(s.boundary_loops(), 1);
        let diag = s.interior_edges()[0];
        assert_eq!(s.edges()[diag].faces, [Some(0), Some(1)]);
        assert_eq!(s.edges()[diag].vertices, [2, 0]);
    }

    #[test]
    fn closed_tetrahedron_fans() {
        let s = SimplicialSurface::new(4, vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]]).unwrap();
        assert!(s.is_closed());
        assert_eq!(s.interior_vertices(), &[0, 1, 2, 3]);
        for fan in s.fans() {
            assert_eq!(fan.valence(), 3);
            let n = fan.valence();
            for i in 0..n {
                // edges[i] is shared by faces[i] and faces[i+1]
                let e = &s.edges()[fan.edges[i]];
                let adj = [e.faces[0].unwrap(), e.faces[1].unwrap()];
                assert!(adj.contains(&fan.faces[i]));
                assert!(adj.contains(&fan.faces[(i + 1) % n]));
                assert!(e.vertices.contains(&fan.vertex));
                assert!(!s.edges()[fan.opposite[i]].vertices.contains(&fan.vertex));
            }
        }
    }

    #[test]
    fn rejects_bad_topology() {
        assert_eq!(
            SimplicialSurface::new(4, vec![[0, 1, 2], [0, 1, 3]]).unwrap_err(),
            TopologyError::NonOrientable(0, 1)
        );
        assert!(matches!(
            SimplicialSurface::new(5, vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]]).unwrap_err(),
            TopologyError::NonManifoldEdge(..) | TopologyError::NonOrientable(..)
        ));
        assert_eq!(
            SimplicialSurface::new(6, vec![[0, 1, 2], [3, 4, 5]]).unwrap_err(),
            TopologyError::Disconnected
        );
        assert_eq!(
            SimplicialSurface::new(4, vec![[0, 1, 2]]).unwrap_err(),
            TopologyError::UnreferencedVertex { vertex: 3 }
        );
        // bow-tie: two triangles sharing only a vertex
        assert!(matches!(
            SimplicialSurface::new(5, vec![[0, 1, 2], [0, 3, 4]]).unwrap_err(),
            TopologyError::NonManifoldVertex { .. } | TopologyError::Disconnected
        ));
    }

    #[test]
    fn rejects_torus() {
        let (n, m) = (6, 5);
        let idx = |i: usize, j: usize| (i % n) * m + (j % m);
        let mut faces = Vec::new();
        for i in 0..n {
            for j in 0..m {
                faces.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
                faces.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
            }
        }
        let err = SimplicialSurface::new(n * m, faces).unwrap_err();
        assert_eq!(
            err,
            TopologyError::NotSimplyConnected {
                euler: 0,
                boundary_loops: 0
            }
        );
    }

    #[test]
    fn triangle_inequality_examples() {
        assert_eq!(triangle_inequality_values([1.0, 1.0, 1.0]), [1.0, 1.0, 1.0]);
        assert!(triangle_admissible([1.0, 1.0, 1.0]));
        let t = triangle_inequality_values([1.0, 1.0, 2.0]);
        assert!(t.contains(&0.0));
        assert!(!triangle_admissible([1.0, 1.0, 2.0]));
        assert_eq!(triangle_inequality_values([3.0, 4.0, 5.0]), [2.0, 4.0, 6.0]);
    }

    #[test]
    fn angle_and_area_examples() {
        assert!((interior_angle(1.0, 1.0, 1.0).unwrap() - PI / 3.0).abs() < 1e-15);
        assert!((face_area(1.0, 1.0, 1.0).unwrap() - 3f64.sqrt() / 4.0).abs() < 1e-15);
        assert!((interior_angle(3.0, 4.0, 5.0).unwrap() - PI / 2.0).abs() < 1e-15);
        assert!((face_area(3.0, 4.0, 5.0).unwrap() - 6.0).abs() < 1e-14);
        assert!(matches!(
            interior_angle(1.0, 1.0, 2.0),
            Err(Error::TriangleInequalityViolated(..))
        ));
    }

    #[test]
    fn needle_triangle_matches_cross_product() {
        // Embedded (1, 1, 1.999): apex at height h above the midpoint of the long side.
        let half = 1.999 / 2.0;
        let h = (1.0f64 - half * half).sqrt();
        let p0 = Vector3::new(-half, 0.0, 0.0);
        let p1 = Vector3::new(half, 0.0, 0.0);
        let p2 = Vector3::new(0.0, h, 0.0);
        let (a, b, c) = ((p2 - p0).norm(), (p2 - p1).norm(), (p1 - p0).norm());
        let oracle_area = 0.5 * (p1 - p0).cross(&(p2 - p0)).norm();
        let area = face_area(a, b, c).unwrap();
        assert!((area - oracle_area).abs() < 1e-12 * oracle_area.max(1e-3));
        let gamma = interior_angle(a, b, c).unwrap();
        assert!(gamma.is_finite() && gamma < PI && gamma > 3.0);
        let oracle_gamma = (p0 - p2).angle(&(p1 - p2));
        assert!((gamma - oracle_gamma).abs() < 1e-9);
    }

    #[test]
    fn angles_sum_to_pi() {
        for l in [[1.0, 1.0, 1.0], [3.0, 4.0, 5.0], [0.3, 0.9, 1.1], [2.0, 2.0, 3.9]] {
            let s = interior_angle(l[1], l[2], l[0]).unwrap()
                + interior_angle(l[2], l[0], l[1]).unwrap()
                + interior_angle(l[0], l[1], l[2]).unwrap();
            assert!((s - PI).abs() < 1e-12);
        }
    }
}
