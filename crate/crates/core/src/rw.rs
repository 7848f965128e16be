//! Random-walk initialization: absorption probabilities of the walk into
//! each label's known nodes.
//!
//! The primary route solves one Dirichlet problem per label over the
//! unlabeled nodes. The second route assembles the same solution from
//! equilibrium measures `v^F` (the unique `v` with `Lv = 1` on `F`, `v = 0`
//! off `F`):
//!
//! ```text
//! p_i(x) = Σ_{z∈E_i} (v^{{z}∪F}(x) - v^F(x)) / v^{{z}∪F}(z)
//! ```
//!
//! Components without any labeled node get the uniform distribution.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::ProbabilityField;
use crate::graph::{Graph, LabeledSets, NodeId};

/// Default relative residual for the linear solves.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Sub-Laplacian `L_FF` of the nodes in `F`, applied matrix-free. Degrees
/// are full-graph degrees, so edges leaving `F` ground the system.
struct SubLaplacian<'g> {
    graph: &'g Graph,
    nodes: Vec<NodeId>,
    local: Vec<Option<usize>>,
}

impl<'g> SubLaplacian<'g> {
    fn new(graph: &'g Graph, nodes: Vec<NodeId>) -> Self {
        let mut local = vec![None; graph.num_nodes()];
        for (i, &v) in nodes.iter().enumerate() {
            local[v] = Some(i);
        }
        SubLaplacian {
            graph,
            nodes,
            local,
        }
    }

    fn dim(&self) -> usize {
        self.nodes.len()
    }

    fn diagonal(&self) -> Vec<f64> {
        self.nodes
            .iter()
            .map(|&v| self.graph.degree(v) as f64)
            .collect()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (a, &v) in self.nodes.iter().enumerate() {
            let mut acc = self.graph.degree(v) as f64 * x[a];
            for &u in self.graph.neighbors(v) {
                if let Some(b) = self.local[u] {
                    acc -= x[b];
                }
            }
            y[a] = acc;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned conjugate gradient. Stops at relative residual
/// `tol`; fails after `max_iter` iterations.
fn conjugate_gradient(op: &SubLaplacian, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = op.dim();
    let mut x = vec![0.0; n];
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return Ok(x);
    }
    let inv_diag: Vec<f64> = op.diagonal().iter().map(|d| 1.0 / d).collect();
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut residual = 1.0;
    for _ in 0..max_iter {
        op.apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        residual = dot(&r, &r).sqrt() / b_norm;
        if residual <= tol {
            // confirm against the true residual, not the recurrence
            op.apply(&x, &mut ap);
            let true_res = b
                .iter()
                .zip(&ap)
                .map(|(b, a)| (b - a) * (b - a))
                .sum::<f64>()
                .sqrt()
                / b_norm;
            if true_res <= tol.max(1e-14) * 10.0 {
                return Ok(x);
            }
            for i in 0..n {
                r[i] = b[i] - ap[i];
            }
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Solver {
        iterations: max_iter,
        residual,
    })
}

fn iteration_cap(n: usize) -> usize {
    (10 * n).max(50)
}

fn check_inputs(graph: &Graph, labeled: &LabeledSets) -> Result<()> {
    if labeled.num_nodes() != graph.num_nodes() {
        return Err(Error::Dimension(format!(
            "prior covers {} nodes, graph has {}",
            labeled.num_nodes(),
            graph.num_nodes()
        )));
    }
    if labeled.num_labels() == 0 {
        return Err(Error::Precondition("no labels".into()));
    }
    labeled.require_all_labels()
}

/// Number of labeled nodes in each connected component.
fn labeled_per_component(graph: &Graph, labeled: &LabeledSets) -> (Vec<usize>, Vec<usize>) {
    let comp = graph.components();
    let ncomp = comp.iter().copied().max().map_or(0, |m| m + 1);
    let mut count = vec![0; ncomp];
    for (node, _) in labeled.pairs() {
        count[comp[node]] += 1;
    }
    (comp, count)
}

/// Unlabeled nodes whose component contains no labeled node; these receive
/// the uniform fallback distribution.
pub fn ungrounded_nodes(graph: &Graph, labeled: &LabeledSets) -> Vec<NodeId> {
    let (comp, count) = labeled_per_component(graph, labeled);
    labeled
        .unlabeled()
        .iter()
        .copied()
        .filter(|&v| count[comp[v]] == 0)
        .collect()
}

/// Clip round-off outside `[0, 1]` and renormalize each row.
fn tidy_rows(field: &mut ProbabilityField) {
    for node in 0..field.num_nodes() {
        let row = field.row_mut(node);
        for x in row.iter_mut() {
            *x = x.clamp(0.0, 1.0);
        }
        let s: f64 = row.iter().sum();
        if s > 0.0 {
            for x in row.iter_mut() {
                *x /= s;
            }
        }
    }
}

/// Solve the Dirichlet problem `L p_i = 0` on unlabeled nodes, `p_i = 1` on
/// `E_i`, `p_i = 0` on the other labeled nodes, for every label.
pub fn solve_dirichlet(graph: &Graph, labeled: &LabeledSets, tol: f64) -> Result<ProbabilityField> {
    check_inputs(graph, labeled)?;
    let l = labeled.num_labels();
    let n = graph.num_nodes();
    let (comp, count) = labeled_per_component(graph, labeled);
    let interior: Vec<NodeId> = labeled
        .unlabeled()
        .iter()
        .copied()
        .filter(|&v| count[comp[v]] > 0)
        .collect();
    let op = SubLaplacian::new(graph, interior);

    let columns: Vec<Vec<f64>> = (0..l)
        .into_par_iter()
        .map(|label| {
            let b: Vec<f64> = op
                .nodes
                .iter()
                .map(|&v| {
                    graph
                        .neighbors(v)
                        .iter()
                        .filter(|&&u| labeled.label_of(u) == Some(label))
                        .count() as f64
                })
                .collect();
            conjugate_gradient(&op, &b, tol, iteration_cap(n))
        })
        .collect::<Result<_>>()?;

    let mut field = ProbabilityField::uniform(n, l);
    for (a, &v) in op.nodes.iter().enumerate() {
        let row = field.row_mut(v);
        for (label, col) in columns.iter().enumerate() {
            row[label] = col[a];
        }
    }
    tidy_rows(&mut field);
    field.clamp_labeled(labeled);
    Ok(field)
}

/// Equilibrium measure of `interior`: `Lv = 1` on the interior, `v = 0`
/// elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumMeasure {
    pub values: Vec<f64>,
    pub support: Vec<NodeId>,
}

pub fn equilibrium_measure(graph: &Graph, interior: &[NodeId], tol: f64) -> Result<EquilibriumMeasure> {
    let n = graph.num_nodes();
    let mut in_f = vec![false; n];
    for &v in interior {
        if v >= n {
            return Err(Error::Dimension(format!("node {v} outside [0,{n})")));
        }
        in_f[v] = true;
    }
    let size = in_f.iter().filter(|&&b| b).count();
    if size == 0 || size == n {
        return Err(Error::Precondition(
            "interior and its complement must both be nonempty".into(),
        ));
    }
    // every component of the induced subgraph on F must touch F^c
    let mut seen = vec![false; n];
    for start in (0..n).filter(|&v| in_f[v]) {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut grounded = false;
        while let Some(u) = stack.pop() {
            for &w in graph.neighbors(u) {
                if !in_f[w] {
                    grounded = true;
                } else if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        if !grounded {
            return Err(Error::Precondition(format!(
                "the part of the interior containing node {start} is not adjacent to its complement"
            )));
        }
    }
    let support: Vec<NodeId> = (0..n).filter(|&v| in_f[v]).collect();
    let op = SubLaplacian::new(graph, support.clone());
    let ones = vec![1.0; op.dim()];
    let sol = conjugate_gradient(&op, &ones, tol, iteration_cap(n))?;
    let mut values = vec![0.0; n];
    for (a, &v) in support.iter().enumerate() {
        values[v] = sol[a];
    }
    Ok(EquilibriumMeasure { values, support })
}

/// Same field as [`solve_dirichlet`], assembled from equilibrium measures.
///
/// Components are handled by how many labeled nodes they hold: none gives
/// the uniform fallback, one makes every node in the component certain of
/// that label (the constant is harmonic), two or more use the formula.
pub fn solve_via_equilibrium(
    graph: &Graph,
    labeled: &LabeledSets,
    tol: f64,
) -> Result<ProbabilityField> {
    check_inputs(graph, labeled)?;
    let l = labeled.num_labels();
    let n = graph.num_nodes();
    let (comp, count) = labeled_per_component(graph, labeled);
    let mut field = ProbabilityField::uniform(n, l);

    let mut sole_label = vec![None; count.len()];
    for (node, label) in labeled.pairs() {
        if count[comp[node]] == 1 {
            sole_label[comp[node]] = Some(label);
        }
    }
    for &v in labeled.unlabeled() {
        if let Some(label) = sole_label[comp[v]] {
            field.set_one_hot(v, label);
        }
    }

    let interior: Vec<NodeId> = labeled
        .unlabeled()
        .iter()
        .copied()
        .filter(|&v| count[comp[v]] >= 2)
        .collect();
    if !interior.is_empty() {
        for &v in &interior {
            field.row_mut(v).fill(0.0);
        }
        let base = equilibrium_measure(graph, &interior, tol)?;
        let sources: Vec<(NodeId, usize)> = labeled
            .pairs()
            .filter(|&(z, _)| count[comp[z]] >= 2)
            .collect();
        let contributions: Vec<(usize, Vec<(NodeId, f64)>)> = sources
            .par_iter()
            .map(|&(z, label)| {
                let mut with_z = interior.clone();
                let pos = with_z.partition_point(|&v| v < z);
                with_z.insert(pos, z);
                let m = equilibrium_measure(graph, &with_z, tol)?;
                let scale = m.values[z];
                let terms = interior
                    .iter()
                    .filter(|&&x| comp[x] == comp[z])
                    .map(|&x| (x, (m.values[x] - base.values[x]) / scale))
                    .collect();
                Ok((label, terms))
            })
            .collect::<Result<_>>()?;
        for (label, terms) in contributions {
            for (x, t) in terms {
                field.row_mut(x)[label] += t;
            }
        }
    }
    tidy_rows(&mut field);
    field.clamp_labeled(labeled);
    Ok(field)
}
