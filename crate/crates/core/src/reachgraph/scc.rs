//! Strongly connected components via an iterative Tarjan traversal.
//!
//! The recursion is converted to an explicit stack so deep graphs cannot
//! overflow the call stack.

/// Computes all strongly connected components of a directed graph given as an
/// adjacency list. Each component's node list is sorted ascending; components
/// are returned in the order Tarjan completes them (reverse topological
/// order).
pub fn tarjan_scc(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    const UNSET: usize = usize::MAX;

    let mut index = vec![UNSET; n];
    let mut lowlink = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_index = 0usize;
    let mut components: Vec<Vec<usize>> = Vec::new();

    // Work frames: (node, next child position to examine).
    let mut work: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNSET {
            continue;
        }
        work.push((root, 0));
        while let Some(&mut (v, ref mut child_pos)) = work.last_mut() {
            if *child_pos == 0 {
                index[v] = next_index;
                lowlink[v] = next_index;
                next_index += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            let mut advanced = false;
            while *child_pos < adj[v].len() {
                let w = adj[v][*child_pos];
                *child_pos += 1;
                if index[w] == UNSET {
                    work.push((w, 0));
                    advanced = true;
                    break;
                } else if on_stack[w] {
                    lowlink[v] = lowlink[v].min(index[w]);
                }
            }
            if advanced {
                continue;
            }
            // All children explored: close v.
            work.pop();
            if let Some(&(parent, _)) = work.last() {
                lowlink[parent] = lowlink[parent].min(lowlink[v]);
            }
            if lowlink[v] == index[v] {
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
                components.push(comp);
            }
        }
    }
    components
}

/// Returns the node set of the largest strongly connected component, sorted
/// ascending. Ties on size are broken toward the component containing the
/// smallest node index. Empty input yields an empty set.
pub fn largest_scc(adj: &[Vec<usize>]) -> Vec<usize> {
    tarjan_scc(adj)
        .into_iter()
        .max_by(|a, b| {
            a.len()
                .cmp(&b.len())
                // Larger wins; on equal size, the smaller minimum index wins,
                // which under `max_by` means comparing min indices reversed.
                .then_with(|| b[0].cmp(&a[0]))
        })
        .unwrap_or_default()
}
