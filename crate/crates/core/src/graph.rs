//! Weighted label digraphs: cycle search, cycle breaking, topological
//! ordering and export.
//!
//! Every traversal is deterministic: nodes are visited by ascending id and
//! out-edges by ascending end node.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::correlation::DependenceMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedDigraph {
    node_labels: Vec<String>,
    edges: BTreeMap<(usize, usize), f64>,
}

impl WeightedDigraph {
    /// Edgeless graph over the named nodes.
    pub fn new(node_labels: Vec<String>) -> Self {
        Self {
            node_labels,
            edges: BTreeMap::new(),
        }
    }

    pub fn from_edges(node_labels: Vec<String>, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut g = Self::new(node_labels);
        for &(u, v, w) in edges {
            g.add_edge(u, v, w)?;
        }
        Ok(g)
    }

    pub fn node_count(&self) -> usize {
        self.node_labels.len()
    }

    pub fn node_labels(&self) -> &[String] {
        &self.node_labels
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn add_edge(&mut self, from: usize, to: usize, weight: f64) -> Result<()> {
        let m = self.node_count();
        if from >= m || to >= m {
            return Err(Error::InvalidGraph(format!("edge {from}->{to} out of range for {m} nodes")));
        }
        if from == to {
            return Err(Error::InvalidGraph(format!("self-loop on node {from}")));
        }
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::InvalidGraph(format!("edge weight {weight} outside [0,1]")));
        }
        if self.edges.insert((from, to), weight).is_some() {
            return Err(Error::InvalidGraph(format!("duplicate edge {from}->{to}")));
        }
        Ok(())
    }

    pub fn remove_edge(&mut self, from: usize, to: usize) -> Option<f64> {
        self.edges.remove(&(from, to))
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.edges.contains_key(&(from, to))
    }

    pub fn weight(&self, from: usize, to: usize) -> Option<f64> {
        self.edges.get(&(from, to)).copied()
    }

    /// Edges in ascending `(from, to)` order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges
            .iter()
            .map(|(&(from, to), &weight)| Edge { from, to, weight })
    }

    /// Ascending successor lists.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.node_count()];
        for &(u, v) in self.edges.keys() {
            adj[u].push(v);
        }
        adj
    }

    pub fn parents_of(&self, node: usize) -> Vec<usize> {
        self.edges
            .keys()
            .filter(|&&(_, v)| v == node)
            .map(|&(u, _)| u)
            .collect()
    }

    pub fn is_acyclic(&self) -> bool {
        find_cycle(self).is_none()
    }

    pub fn to_adjacency_list(&self) -> AdjacencyList {
        let mut adjacency: BTreeMap<String, Vec<Neighbor>> = self
            .node_labels
            .iter()
            .map(|n| (n.clone(), Vec::new()))
            .collect();
        for e in self.edges() {
            adjacency
                .get_mut(&self.node_labels[e.from])
                .expect("node present")
                .push(Neighbor {
                    to: self.node_labels[e.to].clone(),
                    weight: e.weight,
                });
        }
        AdjacencyList {
            nodes: self.node_labels.clone(),
            adjacency,
        }
    }
}

/// JSON-friendly adjacency-list form of a [`WeightedDigraph`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjacencyList {
    pub nodes: Vec<String>,
    pub adjacency: BTreeMap<String, Vec<Neighbor>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub to: String,
    pub weight: f64,
}

/// A permutation of label ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct LabelOrder(Vec<usize>);

impl LabelOrder {
    pub fn new(permutation: Vec<usize>) -> Result<Self> {
        let m = permutation.len();
        let mut seen = vec![false; m];
        for &p in &permutation {
            if p >= m || seen[p] {
                return Err(Error::InvalidOrder(format!("{permutation:?} is not a permutation of 0..{m}")));
            }
            seen[p] = true;
        }
        Ok(Self(permutation))
    }

    pub fn identity(m: usize) -> Self {
        Self((0..m).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Position of each label: `positions()[label] = index in the order`.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.0.len()];
        for (i, &l) in self.0.iter().enumerate() {
            pos[l] = i;
        }
        pos
    }
}

impl TryFrom<Vec<usize>> for LabelOrder {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<LabelOrder> for Vec<usize> {
    fn from(o: LabelOrder) -> Self {
        o.0
    }
}

/// Both directed edges between every pair of labels, weighted by the
/// dependence degree of the edge's end on its start.
pub fn fully_connected_dcg(dep: &DependenceMatrix) -> WeightedDigraph {
    let m = dep.n_labels();
    let mut edges = BTreeMap::new();
    for k in 0..m {
        for j in 0..m {
            if k != j {
                edges.insert((k, j), dep.get(k, j));
            }
        }
    }
    WeightedDigraph {
        node_labels: dep.label_names().to_vec(),
        edges,
    }
}

/// First directed cycle met by a depth-first search rooted at ascending node
/// ids, exploring successors in ascending order.
pub fn find_cycle(g: &WeightedDigraph) -> Option<Vec<Edge>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Color {
        White,
        Grey,
        Black,
    }

    let adj = g.adjacency();
    let mut color = vec![Color::White; g.node_count()];
    // (node, index of next successor to explore)
    let mut stack: Vec<(usize, usize)> = Vec::new();

    for root in 0..g.node_count() {
        if color[root] != Color::White {
            continue;
        }
        color[root] = Color::Grey;
        stack.push((root, 0));
        while let Some(&mut (u, ref mut next)) = stack.last_mut() {
            if let Some(&v) = adj[u].get(*next) {
                *next += 1;
                match color[v] {
                    Color::White => {
                        color[v] = Color::Grey;
                        stack.push((v, 0));
                    }
                    Color::Grey => {
                        let start = stack.iter().position(|&(n, _)| n == v).expect("grey on stack");
                        let path: Vec<usize> = stack[start..].iter().map(|&(n, _)| n).collect();
                        let cycle = path
                            .iter()
                            .zip(path.iter().skip(1).chain(std::iter::once(&v)))
                            .map(|(&a, &b)| Edge {
                                from: a,
                                to: b,
                                weight: g.edges[&(a, b)],
                            })
                            .collect();
                        return Some(cycle);
                    }
                    Color::Black => {}
                }
            } else {
                color[u] = Color::Black;
                stack.pop();
            }
        }
    }
    None
}

/// Repeatedly find a cycle and delete its weakest edge until none remain.
pub fn break_cycles(g: &WeightedDigraph) -> WeightedDigraph {
    break_cycles_traced(g).0
}

/// [`break_cycles`] plus the removed edges in removal order.
pub fn break_cycles_traced(g: &WeightedDigraph) -> (WeightedDigraph, Vec<Edge>) {
    let mut out = g.clone();
    let mut removed = Vec::new();
    while let Some(cycle) = find_cycle(&out) {
        let weakest = cycle
            .into_iter()
            .min_by(|a, b| {
                a.weight
                    .total_cmp(&b.weight)
                    .then((a.from, a.to).cmp(&(b.from, b.to)))
            })
            .expect("cycles are nonempty");
        out.remove_edge(weakest.from, weakest.to);
        removed.push(weakest);
    }
    (out, removed)
}

/// Kahn's algorithm, always taking the smallest available in-degree-0 node.
pub fn topological_sort(g: &WeightedDigraph) -> Result<LabelOrder> {
    let m = g.node_count();
    let adj = g.adjacency();
    let mut in_degree = vec![0usize; m];
    for succ in &adj {
        for &v in succ {
            in_degree[v] += 1;
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> =
        (0..m).filter(|&v| in_degree[v] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(m);
    while let Some(Reverse(u)) = ready.pop() {
        order.push(u);
        for &v in &adj[u] {
            in_degree[v] -= 1;
            if in_degree[v] == 0 {
                ready.push(Reverse(v));
            }
        }
    }
    if order.len() != m {
        return Err(Error::Cycle);
    }
    LabelOrder::new(order)
}

fn dot_id(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Graphviz digraph with six-decimal `weight` attributes.
pub fn export_dot(g: &WeightedDigraph) -> String {
    export_dot_with_comment(g, None)
}

/// [`export_dot`] with an optional leading `//` comment block.
pub fn export_dot_with_comment(g: &WeightedDigraph, comment: Option<&str>) -> String {
    let mut s = String::new();
    if let Some(c) = comment {
        for line in c.lines() {
            let _ = writeln!(s, "// {line}");
        }
    }
    s.push_str("digraph labels {\n");
    for name in &g.node_labels {
        let _ = writeln!(s, "  {};", dot_id(name));
    }
    for e in g.edges() {
        let _ = writeln!(
            s,
            "  {} -> {} [weight={:.6}];",
            dot_id(&g.node_labels[e.from]),
            dot_id(&g.node_labels[e.to]),
            e.weight
        );
    }
    s.push_str("}\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn names(m: usize) -> Vec<String> {
        (0..m).map(|i| format!("n{i}")).collect()
    }

    fn graph(m: usize, edges: &[(usize, usize, f64)]) -> WeightedDigraph {
        WeightedDigraph::from_edges(names(m), edges).unwrap()
    }

    fn uniform_dep(m: usize) -> DependenceMatrix {
        let mut v = Array2::from_elem((m, m), 0.5);
        v.diag_mut().fill(0.0);
        DependenceMatrix::from_values(v, names(m)).unwrap()
    }

    #[test]
    fn dcg_edge_counts() {
        assert_eq!(fully_connected_dcg(&uniform_dep(3)).edge_count(), 6);
        assert_eq!(fully_connected_dcg(&uniform_dep(5)).edge_count(), 20);
    }

    #[test]
    fn dcg_copies_weights() {
        let v = Array2::from_shape_vec((2, 2), vec![0.0, 0.25, 0.75, 0.0]).unwrap();
        let g = fully_connected_dcg(&DependenceMatrix::from_values(v, names(2)).unwrap());
        assert_eq!(g.weight(0, 1), Some(0.25));
        assert_eq!(g.weight(1, 0), Some(0.75));
    }

    #[test]
    fn rejects_malformed_edges() {
        let mut g = WeightedDigraph::new(names(2));
        assert!(g.add_edge(0, 0, 0.1).is_err());
        assert!(g.add_edge(0, 2, 0.1).is_err());
        assert!(g.add_edge(0, 1, 1.5).is_err());
        g.add_edge(0, 1, 0.1).unwrap();
        assert!(g.add_edge(0, 1, 0.2).is_err());
    }

    #[test]
    fn find_cycle_cases() {
        assert!(find_cycle(&graph(3, &[(0, 1, 0.1), (1, 2, 0.1)])).is_none());
        let c = find_cycle(&graph(2, &[(0, 1, 0.3), (1, 0, 0.4)])).unwrap();
        let pairs: Vec<_> = c.iter().map(|e| (e.from, e.to)).collect();
        assert_eq!(pairs, vec![(0, 1), (1, 0)]);
        // DFS from 0 goes to 1 first, and 1's first successor is 0
        let c = find_cycle(&fully_connected_dcg(&uniform_dep(3))).unwrap();
        let pairs: Vec<_> = c.iter().map(|e| (e.from, e.to)).collect();
        assert_eq!(pairs, vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn two_cycle_keeps_stronger_edge() {
        let g = break_cycles(&graph(2, &[(0, 1, 0.7), (1, 0, 0.3)]));
        assert_eq!(g.edges().map(|e| (e.from, e.to)).collect::<Vec<_>>(), vec![(0, 1)]);
    }

    #[test]
    fn acyclic_input_is_unchanged() {
        let g = graph(4, &[(0, 1, 0.2), (2, 1, 0.9), (1, 3, 0.5)]);
        let (out, removed) = break_cycles_traced(&g);
        assert_eq!(out, g);
        assert!(removed.is_empty());
    }

    #[test]
    fn triangle_with_chord() {
        // a=0, b=1, c=2: a->b .5, b->c .4, c->a .6, a->c .2
        let g = graph(3, &[(0, 1, 0.5), (1, 2, 0.4), (2, 0, 0.6), (0, 2, 0.2)]);
        let (out, removed) = break_cycles_traced(&g);
        // hand trace: first cycle a->b->c->a loses b->c; then a->c->a loses a->c
        let removed_pairs: Vec<_> = removed.iter().map(|e| (e.from, e.to)).collect();
        assert_eq!(removed_pairs, vec![(1, 2), (0, 2)]);
        let kept: Vec<_> = out.edges().map(|e| (e.from, e.to)).collect();
        assert_eq!(kept, vec![(0, 1), (2, 0)]);
        assert!(out.is_acyclic());
        let removed_weight: f64 = removed.iter().map(|e| e.weight).sum();
        assert!(removed_weight <= 0.4 + 0.2 + 1e-12);
    }

    #[test]
    fn equal_weights_break_toward_smallest_pair() {
        let g = break_cycles(&graph(2, &[(0, 1, 0.5), (1, 0, 0.5)]));
        assert!(g.has_edge(1, 0) && !g.has_edge(0, 1));
    }

    #[test]
    fn topo_cases() {
        assert_eq!(topological_sort(&graph(4, &[])).unwrap().as_slice(), &[0, 1, 2, 3]);
        assert_eq!(
            topological_sort(&graph(3, &[(2, 0, 0.1), (0, 1, 0.1)])).unwrap().as_slice(),
            &[2, 0, 1]
        );
        let diamond = graph(4, &[(0, 1, 0.1), (0, 2, 0.1), (1, 3, 0.1), (2, 3, 0.1)]);
        assert_eq!(topological_sort(&diamond).unwrap().as_slice(), &[0, 1, 2, 3]);
        assert!(matches!(
            topological_sort(&graph(2, &[(0, 1, 0.1), (1, 0, 0.1)])),
            Err(Error::Cycle)
        ));
    }

    #[test]
    fn dot_output() {
        let g = WeightedDigraph::from_edges(vec!["a".into(), "b".into()], &[(0, 1, 0.5)]).unwrap();
        let dot = export_dot(&g);
        assert!(dot.contains("\"a\" -> \"b\" [weight=0.500000]"));
        let empty = export_dot(&WeightedDigraph::new(vec!["a".into(), "b".into()]));
        assert_eq!(empty, "digraph labels {\n  \"a\";\n  \"b\";\n}\n");
    }

    #[test]
    fn label_order_validation() {
        assert!(LabelOrder::new(vec![1, 0, 2]).is_ok());
        assert!(LabelOrder::new(vec![1, 1, 2]).is_err());
        assert!(LabelOrder::new(vec![0, 3, 1]).is_err());
        let o = LabelOrder::new(vec![2, 0, 1]).unwrap();
        assert_eq!(o.positions(), vec![1, 2, 0]);
        let json = serde_json::to_string(&o).unwrap();
        assert_eq!(json, "[2,0,1]");
        assert!(serde_json::from_str::<LabelOrder>("[0,0]").is_err());
    }

    #[test]
    fn adjacency_json() {
        let g = graph(2, &[(1, 0, 0.25)]);
        let adj = g.to_adjacency_list();
        assert_eq!(adj.adjacency["n1"][0].to, "n0");
        assert!(adj.adjacency["n0"].is_empty());
    }
}
