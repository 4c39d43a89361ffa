//! The mDP constraint graph: one node per secret record, one weighted edge
//! per neighboring pair.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::instance::MdpInstance;

/// Exponents above this saturate the chain-rule bound to `+inf`.
pub const EXP_OVERFLOW_GUARD: f64 = 700.0;

#[derive(Clone, Debug)]
pub struct MdpGraph {
    adjacency: Vec<Vec<(usize, f64)>>,
    component_id: Vec<usize>,
    component_count: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathDistances {
    pub source: usize,
    pub dist: Vec<f64>,
}

#[derive(Copy, Clone, PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, then node index
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra over a nonnegative adjacency list.
pub(crate) fn dijkstra(adjacency: &[Vec<(usize, f64)>], source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adjacency.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapItem(0.0, source));
    while let Some(HeapItem(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, w) in &adjacency[u] {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(HeapItem(nd, v));
            }
        }
    }
    dist
}

pub fn build_graph(instance: &MdpInstance) -> MdpGraph {
    let n = instance.n();
    let mut adjacency = vec![Vec::new(); n];
    for &(i, j) in instance.edges() {
        let w = instance.dist()[i][j];
        adjacency[i].push((j, w));
        adjacency[j].push((i, w));
    }
    MdpGraph::from_adjacency(adjacency)
}

impl MdpGraph {
    pub fn from_adjacency(adjacency: Vec<Vec<(usize, f64)>>) -> Self {
        let n = adjacency.len();
        let mut component_id = vec![usize::MAX; n];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if component_id[start] != usize::MAX {
                continue;
            }
            component_id[start] = count;
            stack.push(start);
            while let Some(u) = stack.pop() {
                for &(v, _) in &adjacency[u] {
                    if component_id[v] == usize::MAX {
                        component_id[v] = count;
                        stack.push(v);
                    }
                }
            }
            count += 1;
        }
        Self { adjacency, component_id, component_count: count }
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    pub fn component_id(&self) -> &[usize] {
        &self.component_id
    }

    pub fn component_count(&self) -> usize {
        self.component_count
    }

    /// Node lists per component, each sorted ascending.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.component_count];
        for (i, &c) in self.component_id.iter().enumerate() {
            out[c].push(i);
        }
        out
    }

    pub fn shortest_paths(&self, source: usize) -> PathDistances {
        PathDistances { source, dist: dijkstra(&self.adjacency, source) }
    }
}

pub fn shortest_paths(graph: &MdpGraph, source: usize) -> PathDistances {
    graph.shortest_paths(source)
}

/// `e^{eps * D}`: the factor bounding `z_{i,k} / z_{j,k}` along a path of
/// length `D`. Returns `+inf` past the overflow guard.
pub fn chain_rule_bound(instance: &MdpInstance, path_len: f64) -> f64 {
    chain_bound(instance.epsilon(), path_len)
}

pub fn chain_bound(epsilon: f64, path_len: f64) -> f64 {
    let x = epsilon * path_len;
    if x > EXP_OVERFLOW_GUARD {
        f64::INFINITY
    } else {
        x.exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::cost::CostModel;
    use crate::instance::{build_instance, Metric, Record, RecordKind};

    fn adj(n: usize, edges: &[(usize, usize, f64)]) -> MdpGraph {
        let mut a = vec![Vec::new(); n];
        for &(i, j, w) in edges {
            a[i].push((j, w));
            a[j].push((i, w));
        }
        MdpGraph::from_adjacency(a)
    }

    fn floyd_warshall(n: usize, edges: &[(usize, usize, f64)]) -> Vec<Vec<f64>> {
        let mut d = vec![vec![f64::INFINITY; n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        for &(i, j, w) in edges {
            d[i][j] = d[i][j].min(w);
            d[j][i] = d[j][i].min(w);
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if d[i][k] + d[k][j] < d[i][j] {
                        d[i][j] = d[i][k] + d[k][j];
                    }
                }
            }
        }
        d
    }

    #[test]
    fn components_from_instance() {
        let rs: Vec<Record> = [0.0, 1.0, 5.0]
            .iter()
            .enumerate()
            .map(|(i, &x)| Record::new(i, vec![x], RecordKind::Synthetic))
            .collect();
        let inst = build_instance(rs.clone(), rs, &Metric::Euclidean, 1.0, 1.5, &CostModel::Direct, None).unwrap();
        let g = build_graph(&inst);
        assert_eq!(g.components(), vec![vec![0, 1], vec![2]]);
        assert_eq!(adj(5, &[]).component_count(), 5);
        assert_eq!(adj(3, &[(0, 1, 1.0), (1, 2, 1.0)]).component_count(), 1);
    }

    #[test]
    fn path_and_triangle_distances() {
        let g = adj(3, &[(0, 1, 1.0), (1, 2, 1.0)]);
        assert_eq!(g.shortest_paths(0).dist, vec![0.0, 1.0, 2.0]);
        let tri = [(0, 1, 5.0), (1, 2, 1.0), (0, 2, 1.0)];
        let g = adj(3, &tri);
        assert_eq!(g.shortest_paths(0).dist[1], 2.0);
        assert_eq!(floyd_warshall(3, &tri)[0][1], 2.0);
    }

    #[test]
    fn disconnected_is_infinite() {
        let g = adj(4, &[(0, 1, 1.0), (2, 3, 1.0)]);
        let d = g.shortest_paths(0).dist;
        assert!(d[2].is_infinite() && d[3].is_infinite());
    }

    #[test]
    fn chain_bound_values() {
        assert_eq!(chain_bound(10.0, 0.0), 1.0);
        assert!((chain_bound(10.0, 0.2) - 7.389_056_098_930_65).abs() < 1e-12);
        assert!(chain_bound(10.0, 71.0).is_infinite());
    }

    proptest::proptest! {
        #[test]
        fn dijkstra_matches_floyd_warshall(
            n in 2usize..12,
            raw in proptest::collection::vec((0usize..12, 0usize..12, 0.0f64..5.0), 0..30),
        ) {
            let edges: Vec<_> = raw.into_iter().filter(|&(i, j, _)| i < n && j < n && i != j).collect();
            let g = adj(n, &edges);
            let fw = floyd_warshall(n, &edges);
            for s in 0..n {
                let d = g.shortest_paths(s).dist;
                for t in 0..n {
                    if fw[s][t].is_infinite() {
                        proptest::prop_assert!(d[t].is_infinite());
                    } else {
                        proptest::prop_assert!((d[t] - fw[s][t]).abs() < 1e-9);
                    }
                }
                // Bellman condition
                for &(u, v, w) in &edges {
                    proptest::prop_assert!(d[v] <= d[u] + w + 1e-12);
                    proptest::prop_assert!(d[u] <= d[v] + w + 1e-12);
                }
            }
        }
    }
}
