//! Directed-graph utilities shared by the shift and transfer-matrix code.

/// Strongly connected components (iterative Tarjan).
///
/// Components are returned with their members sorted, ordered by smallest member.
pub fn strongly_connected_components(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comps = Vec::new();
    let mut next_index = 0;
    // (vertex, position in its adjacency list)
    let mut call: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        call.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if *pos < adj[v].len() {
                let w = adj[v][*pos];
                *pos += 1;
                if index[w] == usize::MAX {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    comps.push(comp);
                }
            }
        }
    }
    comps.sort_by_key(|c| c[0]);
    comps
}

pub fn component_map(comps: &[Vec<usize>], n: usize) -> Vec<usize> {
    let mut of = vec![usize::MAX; n];
    for (c, comp) in comps.iter().enumerate() {
        for &v in comp {
            of[v] = c;
        }
    }
    of
}

/// Condensation DAG: sorted, deduplicated successor lists between components.
pub fn condensation(adj: &[Vec<usize>], comp_of: &[usize], ncomp: usize) -> Vec<Vec<usize>> {
    let mut dag = vec![Vec::new(); ncomp];
    for (u, succ) in adj.iter().enumerate() {
        for &v in succ {
            let (cu, cv) = (comp_of[u], comp_of[v]);
            if cu != cv {
                dag[cu].push(cv);
            }
        }
    }
    for row in &mut dag {
        row.sort_unstable();
        row.dedup();
    }
    dag
}

/// A component is nontrivial when it carries a cycle: more than one vertex, or a self-loop.
pub fn is_nontrivial(adj: &[Vec<usize>], comp: &[usize]) -> bool {
    comp.len() > 1 || adj[comp[0]].contains(&comp[0])
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Period and cyclic classes of a strongly connected vertex set.
///
/// `members` must be strongly connected in `adj` and carry a cycle. Returns the period `k`
/// and, for each member (in the order given), its class in `0..k`; edges inside the
/// component go from class `j` to class `j + 1 mod k`. Class 0 contains `members[0]`.
pub fn period_and_classes(adj: &[Vec<usize>], members: &[usize]) -> (usize, Vec<usize>) {
    let n = adj.len();
    let mut local = vec![usize::MAX; n];
    for (i, &v) in members.iter().enumerate() {
        local[v] = i;
    }
    let mut level = vec![usize::MAX; members.len()];
    level[0] = 0;
    let mut queue = std::collections::VecDeque::from([members[0]]);
    let mut period = 0usize;
    while let Some(u) = queue.pop_front() {
        let lu = level[local[u]];
        for &v in &adj[u] {
            let lv = local[v];
            if lv == usize::MAX {
                continue;
            }
            if level[lv] == usize::MAX {
                level[lv] = lu + 1;
                queue.push_back(v);
            } else {
                // lu + 1 - level[v] may be negative; gcd only needs the absolute value
                let diff = (lu + 1).abs_diff(level[lv]);
                period = gcd(period, diff);
            }
        }
    }
    debug_assert!(period > 0, "component carries no cycle");
    let classes = level.iter().map(|&l| l % period).collect();
    (period, classes)
}
