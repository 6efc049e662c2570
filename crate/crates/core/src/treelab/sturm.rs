//! Singular values of sparse matrices whose bipartite row/column graph is a forest.
//!
//! The symmetric matrix `[[0, A], [A^*, 0]]` has eigenvalues `+-sigma_i` and `m - k` zeros for
//! an `m x k` matrix `A` with `m >= k`. On a forest, `LDL^T` without fill counts the negative
//! eigenvalues of the shifted matrix, and entry phases can be gauged away, so only moduli matter.

/// Forest on `n` nodes, stored with children before parents.
#[derive(Clone, Debug)]
pub struct Forest {
    parent: Vec<Option<usize>>,
    /// Squared weight of the edge to the parent.
    weight2: Vec<f64>,
    order: Vec<usize>,
    pivmin: f64,
}

impl Forest {
    /// Builds the forest from weighted edges. Returns `None` if the edges contain a cycle.
    pub fn new(n: usize, edges: &[(usize, usize, f64)]) -> Option<Self> {
        let mut adj = vec![Vec::new(); n];
        for &(a, b, w) in edges {
            if w != 0.0 {
                adj[a].push((b, w * w));
                adj[b].push((a, w * w));
            }
        }
        let mut parent = vec![None; n];
        let mut weight2 = vec![0.0; n];
        let mut seen = vec![false; n];
        let mut preorder = Vec::with_capacity(n);
        for root in 0..n {
            if seen[root] {
                continue;
            }
            seen[root] = true;
            let mut stack = vec![root];
            while let Some(v) = stack.pop() {
                preorder.push(v);
                let mut skipped_parent = false;
                for &(u, w2) in &adj[v] {
                    if !skipped_parent && parent[v] == Some(u) {
                        skipped_parent = true;
                        continue;
                    }
                    if seen[u] {
                        return None;
                    }
                    seen[u] = true;
                    parent[u] = Some(v);
                    weight2[u] = w2;
                    stack.push(u);
                }
            }
        }
        let max_w2 = edges.iter().map(|e| e.2 * e.2).fold(1.0, f64::max);
        preorder.reverse();
        Some(Forest { parent, weight2, order: preorder, pivmin: f64::MIN_POSITIVE * max_w2 })
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// Number of eigenvalues of the zero-diagonal symmetric matrix below `s`.
    pub fn count_below(&self, s: f64) -> usize {
        let mut acc = vec![0.0; self.len()];
        let mut count = 0;
        for &v in &self.order {
            let mut d = -s - acc[v];
            if d.abs() < self.pivmin {
                d = -self.pivmin;
            }
            if d < 0.0 {
                count += 1;
            }
            if let Some(p) = self.parent[v] {
                acc[p] += self.weight2[v] / d;
            }
        }
        count
    }

    /// Smallest singular value of the `rows x (len - rows)` block, given an upper bound.
    pub fn sigma_min(&self, rows: usize, upper: f64) -> f64 {
        let below = |s: f64| self.count_below(s) > rows;
        let mut hi = upper * (1.0 + 1e-12) + f64::MIN_POSITIVE;
        if !below(hi) {
            hi = upper.max(1.0) * 2.0;
            while !below(hi) {
                hi *= 2.0;
            }
        }
        let mut lo = 0.0;
        for _ in 0..400 {
            if hi - lo <= 1e-13 * hi || hi < 1e-300 {
                break;
            }
            let mid = if lo > 0.0 && hi / lo > 4.0 {
                (lo * hi).sqrt()
            } else if lo > 0.0 {
                0.5 * (lo + hi)
            } else {
                hi * 1e-3
            };
            if below(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        if lo == 0.0 && hi < 1e-300 {
            0.0
        } else {
            0.5 * (lo + hi)
        }
    }
}
