//! Exact maximum clique on graphs of at most 64 vertices, stored as
//! adjacency bitmasks.

/// Size of the largest clique inside `candidates`.
pub(crate) fn max_clique(adj: &[u64], candidates: u64) -> usize {
    let mut best = 0;
    expand(adj, 0, candidates, &mut best);
    best
}

fn expand(adj: &[u64], size: usize, mut p: u64, best: &mut usize) {
    if p == 0 {
        *best = (*best).max(size);
        return;
    }
    let (order, colors) = color_sort(adj, p);
    for i in (0..order.len()).rev() {
        if size + colors[i] <= *best {
            return;
        }
        let v = order[i];
        expand(adj, size + 1, p & adj[v], best);
        p &= !(1u64 << v);
    }
}

/// Greedy sequential colouring of `p`. Returns vertices in colour order and,
/// for each, the number of colours used up to it: an upper bound on any
/// clique among that vertex and the ones before it.
fn color_sort(adj: &[u64], p: u64) -> (Vec<usize>, Vec<usize>) {
    let mut order = Vec::with_capacity(p.count_ones() as usize);
    let mut colors = Vec::with_capacity(order.capacity());
    let mut uncolored = p;
    let mut color = 0;
    while uncolored != 0 {
        color += 1;
        let mut q = uncolored;
        while q != 0 {
            let v = q.trailing_zeros() as usize;
            q &= !(1u64 << v);
            q &= !adj[v];
            uncolored &= !(1u64 << v);
            order.push(v);
            colors.push(color);
        }
    }
    (order, colors)
}
