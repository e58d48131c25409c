//! Shortest paths on weighted adjacency lists.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source shortest paths. `adj[u]` lists `(v, weight)` with
/// non-negative weights. Returns distances (`INFINITY` when unreachable)
/// and predecessors.
pub fn dijkstra(adj: &[Vec<(usize, f64)>], source: usize) -> (Vec<f64>, Vec<Option<usize>>) {
    let n = adj.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![None; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Entry { dist: 0.0, node: source });
    while let Some(Entry { dist: d, node: u }) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, w) in &adj[u] {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                pred[v] = Some(u);
                heap.push(Entry { dist: nd, node: v });
            }
        }
    }
    (dist, pred)
}

/// Node sequence `source .. target` from a predecessor array.
pub fn trace(pred: &[Option<usize>], source: usize, target: usize) -> Option<Vec<usize>> {
    let mut out = vec![target];
    let mut cur = target;
    while cur != source {
        cur = pred[cur]?;
        out.push(cur);
    }
    out.reverse();
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn picks_cheaper_two_hop_route() {
        let adj = vec![vec![(1, 1.0), (2, 5.0)], vec![(2, 1.0)], vec![]];
        let (d, p) = dijkstra(&adj, 0);
        assert_eq!(d, vec![0.0, 1.0, 2.0]);
        assert_eq!(trace(&p, 0, 2), Some(vec![0, 1, 2]));
    }

    #[test]
    fn unreachable_is_infinite() {
        let adj = vec![vec![], vec![(0, 1.0)]];
        let (d, p) = dijkstra(&adj, 0);
        assert!(d[1].is_infinite());
        assert_eq!(trace(&p, 0, 1), None);
    }
}
