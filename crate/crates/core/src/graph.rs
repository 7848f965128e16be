//! Undirected simple graphs with ground-truth labels, the graph file format,
//! and labeled/unlabeled node partitions used for supervision.
//!
//! Node ids are 0-based and contiguous. Labels are 0-based internally; the
//! text formats write them 1-based.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub type NodeId = usize;

/// Immutable undirected simple graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    neighbors: Vec<Vec<NodeId>>,
    labels: Option<Vec<usize>>,
    num_labels: usize,
    num_edges: usize,
}

impl Graph {
    /// Build a graph from an edge list. Duplicate edges (in either
    /// orientation) collapse to one; self-loops and out-of-range ids are
    /// rejected.
    pub fn from_edges(
        num_nodes: usize,
        num_labels: usize,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
        labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        let mut neighbors = vec![Vec::new(); num_nodes];
        for (u, v) in edges {
            if u >= num_nodes || v >= num_nodes {
                return Err(Error::Config(format!(
                    "edge ({u},{v}) references a node outside [0,{num_nodes})"
                )));
            }
            if u == v {
                return Err(Error::Config(format!("self-loop on node {u}")));
            }
            neighbors[u].push(v);
            neighbors[v].push(u);
        }
        Self::from_neighbor_lists(neighbors, num_labels, labels)
    }

    fn from_neighbor_lists(
        mut neighbors: Vec<Vec<NodeId>>,
        num_labels: usize,
        labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        let num_edges = neighbors.iter().map(Vec::len).sum::<usize>() / 2;
        if let Some(labels) = &labels {
            validate_labels(labels, neighbors.len(), num_labels)?;
        }
        Ok(Graph {
            neighbors,
            labels,
            num_labels,
            num_edges,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.neighbors.len()
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    /// Sorted, duplicate-free neighbor list of `node`.
    pub fn neighbors(&self, node: NodeId) -> &[NodeId] {
        &self.neighbors[node]
    }

    pub fn degree(&self, node: NodeId) -> usize {
        self.neighbors[node].len()
    }

    pub fn is_adjacent(&self, u: NodeId, v: NodeId) -> bool {
        self.neighbors[u].binary_search(&v).is_ok()
    }

    /// Ground-truth labels (0-based), if the graph carries them.
    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.neighbors.iter().enumerate().flat_map(|(u, list)| {
            let start = list.partition_point(|&v| v <= u);
            list[start..].iter().map(move |&v| (u, v))
        })
    }

    pub fn isolated_nodes(&self) -> Vec<NodeId> {
        (0..self.num_nodes())
            .filter(|&v| self.neighbors[v].is_empty())
            .collect()
    }

    /// Connected component index per node; components are numbered in order
    /// of their smallest node id.
    pub fn components(&self) -> Vec<usize> {
        let n = self.num_nodes();
        let mut comp = vec![usize::MAX; n];
        let mut next = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = next;
            stack.push(start);
            while let Some(u) = stack.pop() {
                for &v in &self.neighbors[u] {
                    if comp[v] == usize::MAX {
                        comp[v] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    /// Parse the graph text format.
    pub fn parse(text: &str) -> Result<Self> {
        parse_graph(text)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Render in the graph text format (0-based ids).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "graph N {} L {} base 0",
            self.num_nodes(),
            self.num_labels
        );
        for (u, v) in self.edges() {
            let _ = writeln!(out, "{u} {v}");
        }
        if let Some(labels) = &self.labels {
            out.push_str("labels\n");
            let line: Vec<String> = labels.iter().map(|l| (l + 1).to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

fn validate_labels(labels: &[usize], num_nodes: usize, num_labels: usize) -> Result<()> {
    if labels.len() != num_nodes {
        return Err(Error::Dimension(format!(
            "{} labels for {} nodes",
            labels.len(),
            num_nodes
        )));
    }
    let mut seen = vec![false; num_labels];
    for (node, &l) in labels.iter().enumerate() {
        if l >= num_labels {
            return Err(Error::Config(format!(
                "node {node} has label {} outside [1,{num_labels}]",
                l + 1
            )));
        }
        seen[l] = true;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::Config(format!(
            "label {} is not used by any node",
            missing + 1
        )));
    }
    Ok(())
}

fn parse_graph(text: &str) -> Result<Graph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, raw)| (i + 1, raw.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "missing header line"))?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    let bad_header = || {
        Error::parse(
            hline,
            "expected header `graph N <num_nodes> L <num_labels> base <0|1>`",
        )
    };
    if tokens.len() != 7 || tokens[0] != "graph" || tokens[1] != "N" || tokens[3] != "L" {
        return Err(bad_header());
    }
    if tokens[5] != "base" {
        return Err(bad_header());
    }
    let n: usize = tokens[2].parse().map_err(|_| bad_header())?;
    let num_labels: usize = tokens[4].parse().map_err(|_| bad_header())?;
    let base: usize = match tokens[6] {
        "0" => 0,
        "1" => 1,
        _ => return Err(bad_header()),
    };

    let mut neighbors = vec![Vec::new(); n];
    let mut labels: Option<Vec<usize>> = None;
    let mut label_line = 0;
    for (lineno, line) in lines {
        if let Some(labels) = labels.as_mut() {
            for tok in line.split_whitespace() {
                let id: usize = tok
                    .parse()
                    .map_err(|_| Error::parse(lineno, format!("invalid label `{tok}`")))?;
                if id == 0 || id > num_labels {
                    return Err(Error::parse(
                        lineno,
                        format!("label {id} out of range [1,{num_labels}]"),
                    ));
                }
                if labels.len() == n {
                    return Err(Error::parse(lineno, format!("more than {n} labels")));
                }
                labels.push(id - 1);
            }
            continue;
        }
        if line == "labels" {
            labels = Some(Vec::with_capacity(n));
            label_line = lineno;
            continue;
        }
        let mut it = line.split_whitespace();
        let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
            return Err(Error::parse(lineno, "expected edge line `<u> <v>`"));
        };
        let node = |tok: &str| -> Result<NodeId> {
            let raw: usize = tok
                .parse()
                .map_err(|_| Error::parse(lineno, format!("invalid node id `{tok}`")))?;
            if raw < base || raw - base >= n {
                return Err(Error::parse(
                    lineno,
                    format!("node id {raw} outside [{base},{})", n + base),
                ));
            }
            Ok(raw - base)
        };
        let (u, v) = (node(a)?, node(b)?);
        if u == v {
            return Err(Error::parse(lineno, format!("self-loop on node {a}")));
        }
        neighbors[u].push(v);
        neighbors[v].push(u);
    }
    if let Some(l) = &labels {
        if l.len() != n {
            return Err(Error::parse(
                label_line,
                format!("expected {n} labels, found {}", l.len()),
            ));
        }
    }
    Graph::from_neighbor_lists(neighbors, num_labels, labels).map_err(|e| match e {
        Error::Config(msg) | Error::Dimension(msg) => Error::parse(label_line, msg),
        other => other,
    })
}

/// Applies the combinatorial Laplacian `D - A` to a node vector.
pub fn laplacian_apply(graph: &Graph, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != graph.num_nodes() {
        return Err(Error::Dimension(format!(
            "vector of length {} for a graph with {} nodes",
            x.len(),
            graph.num_nodes()
        )));
    }
    Ok((0..graph.num_nodes())
        .map(|i| {
            let nb = graph.neighbors(i);
            nb.len() as f64 * x[i] - nb.iter().map(|&j| x[j]).sum::<f64>()
        })
        .collect())
}

/// Supervision: which nodes carry a known label.
///
/// `E_i` is [`LabeledSets::labeled`]`(i)`; the complement of `E_i` among
/// labeled nodes is [`LabeledSets::others`]; the unlabeled set is
/// [`LabeledSets::unlabeled`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSets {
    assignment: Vec<Option<usize>>,
    by_label: Vec<Vec<NodeId>>,
    unlabeled: Vec<NodeId>,
}

impl LabeledSets {
    /// Build from `(node, label)` pairs with 0-based labels. Repeating a pair
    /// is harmless; giving one node two different labels is an error.
    pub fn new(
        num_nodes: usize,
        num_labels: usize,
        pairs: impl IntoIterator<Item = (NodeId, usize)>,
    ) -> Result<Self> {
        let mut assignment = vec![None; num_nodes];
        for (node, label) in pairs {
            if node >= num_nodes {
                return Err(Error::Config(format!(
                    "labeled node {node} outside [0,{num_nodes})"
                )));
            }
            if label >= num_labels {
                return Err(Error::Config(format!(
                    "label {} outside [1,{num_labels}]",
                    label + 1
                )));
            }
            match assignment[node] {
                Some(prev) if prev != label => {
                    return Err(Error::Config(format!(
                        "node {node} labeled both {} and {}",
                        prev + 1,
                        label + 1
                    )))
                }
                _ => assignment[node] = Some(label),
            }
        }
        let mut by_label = vec![Vec::new(); num_labels];
        let mut unlabeled = Vec::new();
        for (node, a) in assignment.iter().enumerate() {
            match a {
                Some(l) => by_label[*l].push(node),
                None => unlabeled.push(node),
            }
        }
        Ok(LabeledSets {
            assignment,
            by_label,
            unlabeled,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.assignment.len()
    }

    pub fn num_labels(&self) -> usize {
        self.by_label.len()
    }

    pub fn label_of(&self, node: NodeId) -> Option<usize> {
        self.assignment[node]
    }

    pub fn is_labeled(&self, node: NodeId) -> bool {
        self.assignment[node].is_some()
    }

    /// Nodes known to carry `label`, ascending.
    pub fn labeled(&self, label: usize) -> &[NodeId] {
        &self.by_label[label]
    }

    /// Labeled nodes whose label differs from `label`.
    pub fn others(&self, label: usize) -> impl Iterator<Item = NodeId> + '_ {
        self.assignment
            .iter()
            .enumerate()
            .filter(move |(_, a)| matches!(a, Some(l) if *l != label))
            .map(|(n, _)| n)
    }

    /// Unlabeled nodes, ascending.
    pub fn unlabeled(&self) -> &[NodeId] {
        &self.unlabeled
    }

    pub fn num_labeled(&self) -> usize {
        self.assignment.len() - self.unlabeled.len()
    }

    /// `(node, label)` pairs in node order.
    pub fn pairs(&self) -> impl Iterator<Item = (NodeId, usize)> + '_ {
        self.assignment
            .iter()
            .enumerate()
            .filter_map(|(n, a)| a.map(|l| (n, l)))
    }

    /// Fails unless every label has at least one known node.
    pub fn require_all_labels(&self) -> Result<()> {
        match self.by_label.iter().position(Vec::is_empty) {
            Some(l) => Err(Error::Precondition(format!(
                "label {} has no labeled node",
                l + 1
            ))),
            None => Ok(()),
        }
    }

    /// Parse a prior file: lines `<node_id> <label_id>`, labels 1-based.
    pub fn parse(text: &str, num_nodes: usize, num_labels: usize, base: usize) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
                return Err(Error::parse(lineno, "expected `<node_id> <label_id>`"));
            };
            let node: usize = a
                .parse()
                .map_err(|_| Error::parse(lineno, format!("invalid node id `{a}`")))?;
            let label: usize = b
                .parse()
                .map_err(|_| Error::parse(lineno, format!("invalid label `{b}`")))?;
            if node < base || node - base >= num_nodes {
                return Err(Error::parse(lineno, format!("node id {node} out of range")));
            }
            if label == 0 || label > num_labels {
                return Err(Error::parse(lineno, format!("label {label} out of range")));
            }
            pairs.push((node - base, label - 1));
        }
        Self::new(num_nodes, num_labels, pairs)
    }

    pub fn load(path: impl AsRef<Path>, num_nodes: usize, num_labels: usize) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, num_nodes, num_labels, 0)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (n, l) in self.pairs() {
            let _ = writeln!(out, "{n} {}", l + 1);
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}
