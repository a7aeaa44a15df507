//! Fill-reducing symmetric orderings.

use std::collections::BTreeSet;

use super::sparse::CsrMatrix;

/// Minimum-degree ordering of the pattern of `A + Aᵀ`.
///
/// Returns `perm` with `perm[new] = old`. Ties are broken by the smallest
/// vertex index, so the result is deterministic.
pub fn minimum_degree(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "ordering requires a square matrix");
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for r in 0..n {
        for &c in a.row(r).0 {
            if c != r {
                adj[r].push(c);
                adj[c].push(r);
            }
        }
    }
    for l in &mut adj {
        l.sort_unstable();
        l.dedup();
    }
    let mut queue: BTreeSet<(usize, usize)> = (0..n).map(|v| (adj[v].len(), v)).collect();
    let mut eliminated = vec![false; n];
    let mut perm = Vec::with_capacity(n);
    let mut merged = Vec::new();
    while let Some((_, v)) = queue.pop_first() {
        eliminated[v] = true;
        perm.push(v);
        let nbrs = std::mem::take(&mut adj[v]);
        for &u in &nbrs {
            let old = adj[u].len();
            merged.clear();
            let (mut i, mut j) = (0, 0);
            let au = &adj[u];
            while i < au.len() || j < nbrs.len() {
                let x = if j >= nbrs.len() || (i < au.len() && au[i] <= nbrs[j]) {
                    let x = au[i];
                    if j < nbrs.len() && nbrs[j] == x {
                        j += 1;
                    }
                    i += 1;
                    x
                } else {
                    let x = nbrs[j];
                    j += 1;
                    x
                };
                if x != u && x != v && !eliminated[x] {
                    merged.push(x);
                }
            }
            std::mem::swap(&mut adj[u], &mut merged);
            if adj[u].len() != old {
                queue.remove(&(old, u));
                queue.insert((adj[u].len(), u));
            }
        }
    }
    perm
}

/// Inverse of a permutation.
pub fn invert(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}
