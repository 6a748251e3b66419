use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use super::CsrMatrix;

/// Fill-reducing column ordering applied before factorization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ColumnOrdering {
    Natural,
    /// Reverse Cuthill-McKee on the pattern of `A + Aᵀ`.
    #[default]
    ReverseCuthillMcKee,
}

/// Symmetric adjacency (without self loops) of `A + Aᵀ`, rows sorted.
fn symmetric_pattern(a: &CsrMatrix) -> Vec<Vec<usize>> {
    let n = a.nrows();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for r in 0..n {
        for &c in a.row(r).0 {
            if c != r && c < n {
                adj[r].push(c);
                adj[c].push(r);
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    adj
}

fn bfs_levels(adj: &[Vec<usize>], start: usize, level: &mut [usize]) -> (usize, usize) {
    // returns (last node reached, eccentricity)
    level.iter_mut().for_each(|l| *l = usize::MAX);
    let mut queue = VecDeque::new();
    level[start] = 0;
    queue.push_back(start);
    let mut last = start;
    while let Some(v) = queue.pop_front() {
        last = v;
        for &w in &adj[v] {
            if level[w] == usize::MAX {
                level[w] = level[v] + 1;
                queue.push_back(w);
            }
        }
    }
    (last, level[last])
}

/// Reverse Cuthill-McKee permutation: `perm[k]` is the original index placed
/// at position `k`. Each connected component starts from a pseudo-peripheral
/// node of minimum degree.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let adj = symmetric_pattern(a);
    let mut visited = vec![false; n];
    let mut level = vec![usize::MAX; n];
    let mut order = Vec::with_capacity(n);

    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&v| (adj[v].len(), v));

    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        // pseudo-peripheral node by repeated BFS
        let mut start = seed;
        let (mut far, mut ecc) = bfs_levels(&adj, start, &mut level);
        for _ in 0..8 {
            let (far2, ecc2) = bfs_levels(&adj, far, &mut level);
            if ecc2 <= ecc {
                break;
            }
            start = far;
            far = far2;
            ecc = ecc2;
        }

        let begin = order.len();
        visited[start] = true;
        order.push(start);
        let mut head = begin;
        let mut nbrs = Vec::new();
        while head < order.len() {
            let v = order[head];
            head += 1;
            nbrs.clear();
            nbrs.extend(adj[v].iter().copied().filter(|&w| !visited[w]));
            nbrs.sort_by_key(|&w| (adj[w].len(), w));
            for &w in &nbrs {
                visited[w] = true;
                order.push(w);
            }
        }
    }
    order.reverse();
    order
}
