//! Small directed-graph helpers shared by the matrix structure analysis and
//! the Büchi product search.

use num_integer::Integer;

/// Strongly connected components in topological order: if there is an edge
/// from a vertex of component `i` to a vertex of component `j != i`, then
/// `i < j`. Iterative Tarjan.
pub(crate) fn strongly_connected_components(succ: &[Vec<usize>]) -> Vec<Vec<usize>> {
    const UNSEEN: usize = usize::MAX;
    let n = succ.len();
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut out = Vec::new();
    let mut next_index = 0usize;
    // (vertex, position in its successor list)
    let mut call: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        call.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if *pos < succ[v].len() {
                let w = succ[v][*pos];
                *pos += 1;
                if index[w] == UNSEEN {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack");
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                out.push(comp);
            }
        }
    }
    // Tarjan emits sinks first
    out.reverse();
    out
}

/// Period of a strongly connected vertex set: the gcd of all cycle lengths,
/// from BFS levels. `None` when the set carries no cycle (a single vertex
/// without a self-loop).
pub(crate) fn period(succ: &[Vec<usize>], comp: &[usize]) -> Option<u64> {
    let mut inside = vec![false; succ.len()];
    for &v in comp {
        inside[v] = true;
    }
    let mut level = vec![i64::MIN; succ.len()];
    let root = *comp.first()?;
    level[root] = 0;
    let mut queue = std::collections::VecDeque::from([root]);
    let mut g: i64 = 0;
    while let Some(u) = queue.pop_front() {
        for &v in &succ[u] {
            if !inside[v] {
                continue;
            }
            if level[v] == i64::MIN {
                level[v] = level[u] + 1;
                queue.push_back(v);
            } else {
                g = g.gcd(&(level[u] + 1 - level[v]));
            }
        }
    }
    (g != 0).then_some(g.unsigned_abs())
}

/// Lengths of all simple cycles inside `comp`, each cycle counted once (from
/// its smallest vertex). Exponential; meant for tiny graphs.
pub(crate) fn simple_cycle_lengths(succ: &[Vec<usize>], comp: &[usize]) -> Vec<u64> {
    let mut inside = vec![false; succ.len()];
    for &v in comp {
        inside[v] = true;
    }
    let mut lengths = Vec::new();
    let mut on_path = vec![false; succ.len()];
    for &start in comp {
        // explicit DFS over (vertex, successor cursor)
        let mut path: Vec<(usize, usize)> = vec![(start, 0)];
        on_path[start] = true;
        while let Some(&mut (v, ref mut pos)) = path.last_mut() {
            if *pos < succ[v].len() {
                let w = succ[v][*pos];
                *pos += 1;
                if !inside[w] || w < start {
                    continue;
                }
                if w == start {
                    lengths.push(path.len() as u64);
                } else if !on_path[w] {
                    on_path[w] = true;
                    path.push((w, 0));
                }
            } else {
                on_path[v] = false;
                path.pop();
            }
        }
    }
    lengths
}
