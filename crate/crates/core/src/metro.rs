//! Transport-network analysis: hop-count centralities and population estimates from passenger flows.

use std::collections::VecDeque;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::graph::Laplacian;
use crate::spectral::pseudo_inverse;

/// Net passenger outflow per station.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowVector(DVector<f64>);

impl FlowVector {
    pub fn new(q: DVector<f64>) -> Result<Self> {
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("flow vector has non-finite entries"));
        }
        Ok(Self(q))
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn adjacency_lists(g: &Graph, skip: Option<usize>) -> Vec<Vec<usize>> {
    (0..g.n())
        .map(|i| if Some(i) == skip { Vec::new() } else { g.neighbors(i).filter(|&j| Some(j) != skip).collect() })
        .collect()
}

/// Hop distances from `s`; `usize::MAX` for unreachable vertices.
fn bfs(adj: &[Vec<usize>], s: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; adj.len()];
    dist[s] = 0;
    let mut queue = VecDeque::from([s]);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Σ over unordered pairs k ≠ m (both ≠ n) of the share of shortest hop paths through n.
pub fn betweenness(g: &Graph) -> DVector<f64> {
    let n = g.n();
    let adj = adjacency_lists(g, None);
    let partial: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|s| {
            // Brandes accumulation from source s
            let mut sigma = vec![0.0; n];
            let mut dist = vec![usize::MAX; n];
            let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
            let mut order = Vec::with_capacity(n);
            sigma[s] = 1.0;
            dist[s] = 0;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                order.push(u);
                for &v in &adj[u] {
                    if dist[v] == usize::MAX {
                        dist[v] = dist[u] + 1;
                        queue.push_back(v);
                    }
                    if dist[v] == dist[u] + 1 {
                        sigma[v] += sigma[u];
                        preds[v].push(u);
                    }
                }
            }
            let mut delta = vec![0.0; n];
            for &w in order.iter().rev() {
                for &u in &preds[w] {
                    delta[u] += sigma[u] / sigma[w] * (1.0 + delta[w]);
                }
            }
            delta[s] = 0.0;
            delta
        })
        .collect();
    let mut b = DVector::zeros(n);
    for d in &partial {
        for (i, v) in d.iter().enumerate() {
            b[i] += v;
        }
    }
    b / 2.0
}

/// Sum of hop distances over connected unordered pairs, and the number of such pairs.
fn distance_total(adj: &[Vec<usize>], skip: Option<usize>) -> (usize, usize) {
    let n = adj.len();
    let mut total = 0;
    let mut pairs = 0;
    for s in (0..n).filter(|&s| Some(s) != skip) {
        let d = bfs(adj, s);
        for t in s + 1..n {
            if Some(t) != skip && d[t] != usize::MAX {
                total += d[t];
                pairs += 1;
            }
        }
    }
    (total, pairs)
}

/// Change in the total pairwise hop distance when a vertex is removed; +∞ when the removal
/// disconnects a pair of other vertices that was connected.
pub fn closeness_vitality(g: &Graph) -> DVector<f64> {
    let n = g.n();
    let full_adj = adjacency_lists(g, None);
    let (full, _) = distance_total(&full_adj, None);
    let comp = g.components();
    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|v| {
            let adj = adjacency_lists(g, Some(v));
            let (total, pairs) = distance_total(&adj, Some(v));
            let expected_pairs: usize = {
                let mut sizes = vec![0usize; n];
                for (u, &c) in comp.iter().enumerate() {
                    if u != v {
                        sizes[c] += 1;
                    }
                }
                sizes.iter().map(|&s| s * s.saturating_sub(1) / 2).sum()
            };
            if pairs < expected_pairs {
                f64::INFINITY
            } else {
                full as f64 - total as f64
            }
        })
        .collect();
    DVector::from_vec(values)
}

/// φ̂ = −(1/k) L⁺ q, shifted so that its minimum is zero.
pub fn fick_population(l: &Laplacian, q: &FlowVector, k: f64) -> Result<DVector<f64>> {
    if !(k > 0.0) {
        return Err(Error::invalid(format!("diffusivity must be > 0, got {k}")));
    }
    if q.len() != l.n() {
        return Err(Error::dim(format!("{} flows for {} stations", q.len(), l.n())));
    }
    if !l.to_graph().is_connected() {
        return Err(Error::Disconnected("population is only defined up to a constant per component".into()));
    }
    let phi = fick_population_unshifted(l, q, k);
    let min = phi.min();
    Ok(phi.map(|v| v - min))
}

/// −(1/k) L⁺ q without the shift.
pub fn fick_population_unshifted(l: &Laplacian, q: &FlowVector, k: f64) -> DVector<f64> {
    pseudo_inverse(l.matrix(), 1e-12) * q.as_vector() * (-1.0 / k)
}
