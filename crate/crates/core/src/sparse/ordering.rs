use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// Minimum-degree fill-reducing ordering on the graph of a symmetric pattern.
///
/// Works on the explicit elimination graph: eliminating a node turns its neighbourhood into a
/// clique. Ties are broken by the smaller node index, so the result is deterministic. Returns
/// `perm` with `perm[new] = old`.
pub fn minimum_degree(n: usize, colptr: &[usize], rowind: &[usize]) -> Vec<usize> {
    let mut adj: Vec<Vec<usize>> = (0..n)
        .map(|j| {
            let mut v: Vec<usize> = rowind[colptr[j]..colptr[j + 1]]
                .iter()
                .copied()
                .filter(|&i| i != j)
                .collect();
            v.sort_unstable();
            v.dedup();
            v
        })
        .collect();
    // Symmetrize in case only one triangle was supplied.
    for j in 0..n {
        for k in 0..adj[j].len() {
            let i = adj[j][k];
            if adj[i].binary_search(&j).is_err() {
                let pos = adj[i].binary_search(&j).unwrap_err();
                adj[i].insert(pos, j);
            }
        }
    }

    let mut eliminated = vec![false; n];
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> =
        (0..n).map(|i| Reverse((adj[i].len(), i))).collect();
    let mut order = Vec::with_capacity(n);
    let mut merged = Vec::new();

    while let Some(Reverse((deg, p))) = heap.pop() {
        if eliminated[p] || deg != adj[p].len() {
            continue;
        }
        eliminated[p] = true;
        order.push(p);
        let nbrs = std::mem::take(&mut adj[p]);
        for &u in &nbrs {
            // adj[u] <- (adj[u] ∪ nbrs) \ {u, p}, kept sorted.
            merged.clear();
            let au = &adj[u];
            let (mut a, mut b) = (0, 0);
            while a < au.len() || b < nbrs.len() {
                let x = match (au.get(a), nbrs.get(b)) {
                    (Some(&x), Some(&y)) if x < y => {
                        a += 1;
                        x
                    }
                    (Some(&x), Some(&y)) if y < x => {
                        b += 1;
                        y
                    }
                    (Some(&x), Some(_)) => {
                        a += 1;
                        b += 1;
                        x
                    }
                    (Some(&x), None) => {
                        a += 1;
                        x
                    }
                    (None, Some(&y)) => {
                        b += 1;
                        y
                    }
                    (None, None) => unreachable!(),
                };
                if x != u && x != p {
                    merged.push(x);
                }
            }
            std::mem::swap(&mut adj[u], &mut merged);
            heap.push(Reverse((adj[u].len(), u)));
        }
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arrow_matrix_eliminates_hub_last() {
        // Node 0 is connected to everything; eliminating it first would fill the whole matrix.
        let n = 6;
        let mut colptr = vec![0];
        let mut rowind = Vec::new();
        for j in 0..n {
            if j == 0 {
                rowind.extend(0..n);
            } else {
                rowind.extend([0, j]);
            }
            colptr.push(rowind.len());
        }
        let perm = minimum_degree(n, &colptr, &rowind);
        assert_eq!(perm.len(), n);
        // Once the leaves are gone the hub ties with the last leaf.
        assert!(perm[n - 2..].contains(&0));
        let mut sorted = perm.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..n).collect::<Vec<_>>());
    }
}
