use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::integrability::{ConstraintSystem, ROTATION_RESIDUAL_SENTINEL};
use crate::mesh::{triangle_admissible, SimplicialSurface};

/// Weight of dual edges next to a face that violates the triangle inequality.
pub const WEIGHT_SENTINEL: f64 = ROTATION_RESIDUAL_SENTINEL;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TreeStrategy {
    /// Breadth-first, ignoring weights.
    Bfs,
    /// Minimum spanning tree (Prim).
    #[default]
    Mst,
    /// Shortest-path tree from the root (Dijkstra).
    Spt,
    /// Minimum spanning tree over weights maximized across several samples.
    Preassembled,
}

impl FromStr for TreeStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bfs" => Ok(TreeStrategy::Bfs),
            "mst" => Ok(TreeStrategy::Mst),
            "spt" => Ok(TreeStrategy::Spt),
            "pre" | "preassembled" => Ok(TreeStrategy::Preassembled),
            _ => Err(Error::InvalidArgument(format!("unknown tree strategy `{s}`"))),
        }
    }
}

impl fmt::Display for TreeStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TreeStrategy::Bfs => "bfs",
            TreeStrategy::Mst => "mst",
            TreeStrategy::Spt => "spt",
            TreeStrategy::Preassembled => "pre",
        })
    }
}

/// `w_e = (r_v + r_v') / 2` over the endpoints of each interior edge, with `r` the rotation
/// residual of interior vertices and zero on the boundary. Edges next to an inadmissible face
/// get [`WEIGHT_SENTINEL`]. Indexed by interior slot.
pub fn edge_weights(system: &ConstraintSystem, z: &[f64]) -> Vec<f64> {
    let surface = system.surface();
    let ne = surface.edge_count();
    let mut per_vertex = vec![0.0; surface.vertex_count()];
    for (r, fan) in surface.fans().iter().enumerate() {
        per_vertex[fan.vertex] = match system.loop_product(r, z) {
            Some(p) => 4.0 * p.vec().norm_squared() / p.norm_squared(),
            None => ROTATION_RESIDUAL_SENTINEL,
        };
    }
    let bad_face: Vec<bool> = (0..surface.face_count())
        .map(|f| !triangle_admissible(surface.face_lengths(f, &z[..ne])))
        .collect();
    surface
        .interior_edges()
        .iter()
        .map(|&e| {
            let edge = &surface.edges()[e];
            if edge.faces.iter().flatten().any(|&f| bad_face[f]) {
                return WEIGHT_SENTINEL;
            }
            let [a, b] = edge.vertices;
            0.5 * (per_vertex[a] + per_vertex[b])
        })
        .collect()
}

/// Edgewise maximum of the weights of several samples.
pub fn preassembled_weights(system: &ConstraintSystem, samples: &[Vec<f64>]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("preassembled weights need at least one sample".into()));
    }
    let mut w = vec![0.0_f64; system.surface().interior_edge_count()];
    for z in samples {
        for (a, b) in w.iter_mut().zip(edge_weights(system, z)) {
            *a = a.max(b);
        }
    }
    Ok(w)
}

/// Rooted spanning tree of the dual graph and the order in which faces are visited.
#[derive(Debug, Clone, PartialEq)]
pub struct TraversalTree {
    pub strategy: TreeStrategy,
    pub root: usize,
    /// Faces in visiting order; every parent precedes its children.
    pub order: Vec<usize>,
    /// `(parent face, crossed edge)` per face; `None` at the root.
    pub parent: Vec<Option<(usize, usize)>>,
    /// Root distance along the tree for shortest-path trees.
    pub distance: Option<Vec<f64>>,
}

impl TraversalTree {
    /// Position of every face in the visiting order.
    pub fn rank(&self) -> Vec<usize> {
        let mut r = vec![0; self.order.len()];
        for (i, &f) in self.order.iter().enumerate() {
            r[f] = i;
        }
        r
    }

    /// Sum of the weights of the tree edges.
    pub fn total_weight(&self, surface: &SimplicialSurface, weights: &[f64]) -> f64 {
        self.parent
            .iter()
            .flatten()
            .map(|&(_, e)| weights[surface.angle_slot(e).expect("tree edges are interior")])
            .sum()
    }
}

/// Heap entry ordered by increasing key, then face, then parent.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    key: f64,
    face: usize,
    from: usize,
    edge: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, o: &Self) -> Ordering {
        o.key
            .total_cmp(&self.key)
            .then(o.face.cmp(&self.face))
            .then(o.from.cmp(&self.from))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Dual neighbours of `f` as `(edge, face)` sorted by face index.
fn neighbors(surface: &SimplicialSurface, f: usize) -> Vec<(usize, usize)> {
    let mut n: Vec<(usize, usize)> = surface.dual_neighbors(f).iter().map(|&(g, e)| (e, g)).collect();
    n.sort_by_key(|&(e, g)| (g, e));
    n
}

/// Spanning tree of the dual graph rooted at `root`. `weights` are indexed by interior slot and
/// ignored for breadth-first trees. Ties are broken by ascending face index.
pub fn build_tree(surface: &SimplicialSurface, weights: &[f64], strategy: TreeStrategy, root: usize) -> Result<TraversalTree> {
    let nf = surface.face_count();
    if root >= nf {
        return Err(Error::InvalidArgument(format!("root face {root} out of range")));
    }
    if strategy != TreeStrategy::Bfs && weights.len() != surface.interior_edge_count() {
        return Err(Error::DimensionMismatch {
            expected: surface.interior_edge_count(),
            actual: weights.len(),
        });
    }
    let weight = |e: usize| weights[surface.angle_slot(e).expect("dual edges are interior")];
    let mut parent = vec![None; nf];
    let mut visited = vec![false; nf];
    let mut order = Vec::with_capacity(nf);
    let mut distance = None;
    match strategy {
        TreeStrategy::Bfs => {
            let mut queue = VecDeque::from([root]);
            visited[root] = true;
            while let Some(f) = queue.pop_front() {
                order.push(f);
                for (e, g) in neighbors(surface, f) {
                    if !visited[g] {
                        visited[g] = true;
                        parent[g] = Some((f, e));
                        queue.push_back(g);
                    }
                }
            }
        }
        TreeStrategy::Mst | TreeStrategy::Preassembled | TreeStrategy::Spt => {
            let spt = strategy == TreeStrategy::Spt;
            let mut best = vec![f64::INFINITY; nf];
            let mut heap = BinaryHeap::new();
            best[root] = 0.0;
            heap.push(Entry {
                key: 0.0,
                face: root,
                from: usize::MAX,
                edge: usize::MAX,
            });
            while let Some(Entry { key, face, from, edge }) = heap.pop() {
                if visited[face] {
                    continue;
                }
                visited[face] = true;
                if from != usize::MAX {
                    parent[face] = Some((from, edge));
                }
                order.push(face);
                for (e, g) in neighbors(surface, face) {
                    if visited[g] {
                        continue;
                    }
                    let k = if spt { key + weight(e) } else { weight(e) };
                    if k <= best[g] {
                        best[g] = k;
                        heap.push(Entry { key: k, face: g, from: face, edge: e });
                    }
                }
            }
            if spt {
                distance = Some(best);
            }
        }
    }
    if order.len() != nf {
        return Err(Error::InvalidArgument("dual graph is disconnected".into()));
    }
    Ok(TraversalTree {
        strategy,
        root,
        order,
        parent,
        distance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::nric_from_positions;
    use crate::generators;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Faces `0 … n−1` of a triangle strip form a path in the dual graph.
    fn strip(n: usize) -> SimplicialSurface {
        let faces = (0..n)
            .map(|i| if i % 2 == 0 { [i, i + 1, i + 2] } else { [i + 1, i, i + 2] })
            .collect();
        SimplicialSurface::new(n + 2, faces).unwrap()
    }

    #[test]
    fn zero_weights_reduce_to_breadth_first_sets() {
        let g = generators::grid(3, 3, 1.0, 1.0);
        let w = vec![0.0; g.surface.interior_edge_count()];
        let bfs = build_tree(&g.surface, &w, TreeStrategy::Bfs, 0).unwrap();
        let spt = build_tree(&g.surface, &w, TreeStrategy::Spt, 0).unwrap();
        let mst = build_tree(&g.surface, &w, TreeStrategy::Mst, 0).unwrap();
        for t in [&bfs, &spt, &mst] {
            assert_eq!(t.order[0], 0);
            assert_eq!(t.order.len(), g.surface.face_count());
            assert_eq!(t.parent.iter().filter(|p| p.is_none()).count(), 1);
        }
        assert!(spt.distance.as_ref().unwrap().iter().all(|&d| d == 0.0));
    }

    #[test]
    fn integrable_input_has_zero_weights() {
        let ico = generators::icosahedron();
        let z = nric_from_positions(&ico.surface, &ico.positions).unwrap().into_vec();
        let sys = ConstraintSystem::new(&ico.surface);
        assert!(edge_weights(&sys, &z).iter().all(|&w| w < 1e-20));
    }

    #[test]
    fn perturbed_angle_lights_up_neighbouring_edges() {
        let ico = generators::icosahedron();
        let s = &ico.surface;
        let mut z = nric_from_positions(s, &ico.positions).unwrap().into_vec();
        let e = s.interior_edges()[7];
        z[s.angle_index(e).unwrap()] += 0.1;
        let sys = ConstraintSystem::new(s);
        let w = edge_weights(&sys, &z);
        let [a, b] = s.edges()[e].vertices;
        for (slot, &f) in s.interior_edges().iter().enumerate() {
            let [p, q] = s.edges()[f].vertices;
            let touches = [p, q].iter().any(|v| *v == a || *v == b);
            assert_eq!(w[slot] > 1e-12, touches, "edge {f}");
        }
    }

    #[test]
    fn inadmissible_face_gets_sentinel() {
        let g = generators::grid(2, 2, 1.0, 1.0);
        let s = &g.surface;
        let mut z = nric_from_positions(s, &g.positions).unwrap().into_vec();
        let f = 3;
        z[s.face_edges()[f][0]] = 10.0;
        let sys = ConstraintSystem::new(s);
        let w = edge_weights(&sys, &z);
        for &(_, e) in s.dual_neighbors(f) {
            assert_eq!(w[s.angle_slot(e).unwrap()], WEIGHT_SENTINEL);
        }
    }

    #[test]
    fn preassembled_is_edgewise_max() {
        let ico = generators::icosahedron();
        let s = &ico.surface;
        let z = nric_from_positions(s, &ico.positions).unwrap().into_vec();
        let sys = ConstraintSystem::new(s);
        let mut a = z.clone();
        let mut b = z.clone();
        a[s.angle_index(s.interior_edges()[0]).unwrap()] += 0.1;
        b[s.angle_index(s.interior_edges()[29]).unwrap()] += 0.1;
        let single = preassembled_weights(&sys, &[a.clone()]).unwrap();
        assert_eq!(single, edge_weights(&sys, &a));
        let both = preassembled_weights(&sys, &[a.clone(), b.clone()]).unwrap();
        let (wa, wb) = (edge_weights(&sys, &a), edge_weights(&sys, &b));
        for i in 0..both.len() {
            assert_eq!(both[i], wa[i].max(wb[i]));
            assert_eq!(both[i] > 0.0, wa[i] > 0.0 || wb[i] > 0.0);
        }
    }

    #[test]
    fn mst_on_path_visits_heavy_edge_last() {
        let s = strip(6);
        // Dual path 0-1-2-3-4-5; make the crossing between 2 and 3 heavy and root in the middle.
        let mut w = vec![0.1; s.interior_edge_count()];
        let heavy = s.dual_neighbors(2).iter().find(|(g, _)| *g == 3).unwrap().1;
        w[s.angle_slot(heavy).unwrap()] = 5.0;
        let t = build_tree(&s, &w, TreeStrategy::Mst, 2).unwrap();
        assert_eq!(*t.order.last().unwrap(), 5);
        assert_eq!(t.order[..3], [2, 1, 0]);
        assert_eq!(t.parent[3], Some((2, heavy)));
    }

    /// All spanning trees of a small graph by brute force over edge subsets.
    fn brute_force_mst(n: usize, edges: &[(usize, usize, f64)]) -> f64 {
        let m = edges.len();
        let mut best = f64::INFINITY;
        for mask in 0u32..(1 << m) {
            if mask.count_ones() as usize != n - 1 {
                continue;
            }
            let mut comp: Vec<usize> = (0..n).collect();
            fn find(c: &mut Vec<usize>, x: usize) -> usize {
                if c[x] != x {
                    let r = find(c, c[x]);
                    c[x] = r;
                }
                c[x]
            }
            let mut ok = true;
            let mut total = 0.0;
            for (i, &(a, b, w)) in edges.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    let (ra, rb) = (find(&mut comp, a), find(&mut comp, b));
                    if ra == rb {
                        ok = false;
                        break;
                    }
                    comp[ra] = rb;
                    total += w;
                }
            }
            if ok {
                best = best.min(total);
            }
        }
        best
    }

    #[test]
    fn mst_matches_brute_force_and_spt_matches_dijkstra() {
        let g = generators::grid(2, 2, 1.0, 1.0);
        let s = &g.surface;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let w: Vec<f64> = (0..s.interior_edge_count()).map(|_| rng.gen_range(0.0..1.0)).collect();
            let edges: Vec<(usize, usize, f64)> = s
                .interior_edges()
                .iter()
                .enumerate()
                .map(|(slot, &e)| {
                    let [f, h] = s.edges()[e].faces;
                    (f.unwrap(), h.unwrap(), w[slot])
                })
                .collect();
            let t = build_tree(s, &w, TreeStrategy::Mst, 0).unwrap();
            assert!((t.total_weight(s, &w) - brute_force_mst(s.face_count(), &edges)).abs() < 1e-12);

            // Bellman-Ford as the independent shortest-path oracle.
            let nf = s.face_count();
            let mut d = vec![f64::INFINITY; nf];
            d[0] = 0.0;
            for _ in 0..nf {
                for &(a, b, wt) in &edges {
                    d[b] = d[b].min(d[a] + wt);
                    d[a] = d[a].min(d[b] + wt);
                }
            }
            let spt = build_tree(s, &w, TreeStrategy::Spt, 0).unwrap();
            let dist = spt.distance.unwrap();
            for f in 0..nf {
                assert!((dist[f] - d[f]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn parents_precede_children() {
        let sph = generators::icosphere(2, 1.0);
        let s = &sph.surface;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w: Vec<f64> = (0..s.interior_edge_count()).map(|_| rng.gen_range(0.0..1.0)).collect();
        for strategy in [TreeStrategy::Bfs, TreeStrategy::Mst, TreeStrategy::Spt] {
            let t = build_tree(s, &w, strategy, 17).unwrap();
            let rank = t.rank();
            for f in 0..s.face_count() {
                if let Some((p, e)) = t.parent[f] {
                    assert!(rank[p] < rank[f]);
                    assert!(s.edges()[e].faces.contains(&Some(p)) && s.edges()[e].faces.contains(&Some(f)));
                }
            }
        }
    }
}
