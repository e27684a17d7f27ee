//! Market graphs, spectral portfolio cuts and graph-based asset allocation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{laplacian, normalized_laplacian, Graph, LaplacianKind};
use crate::spectral::{eig_sym, inverse_sym};

/// T×N asset returns, one row per period.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    returns: DMatrix<f64>,
}

impl ReturnSeries {
    pub fn new(returns: DMatrix<f64>) -> Result<Self> {
        if returns.nrows() < 2 {
            return Err(Error::invalid(format!("need at least 2 periods, got {}", returns.nrows())));
        }
        if returns.ncols() == 0 {
            return Err(Error::invalid("need at least one asset"));
        }
        if let Some(k) = returns.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite return at period {}, asset {}",
                k % returns.nrows(),
                k / returns.nrows()
            )));
        }
        Ok(Self { returns })
    }

    /// r_t(i) = (p_t(i) − p_{t−1}(i)) / p_{t−1}(i) from a (T+1)×N price matrix.
    pub fn from_prices(prices: &DMatrix<f64>) -> Result<Self> {
        if prices.nrows() < 3 {
            return Err(Error::invalid("need at least 3 price rows"));
        }
        let t = prices.nrows() - 1;
        let mut r = DMatrix::zeros(t, prices.ncols());
        for i in 0..prices.ncols() {
            for s in 0..t {
                let prev = prices[(s, i)];
                if prev == 0.0 {
                    return Err(Error::invalid(format!("zero price for asset {i} at period {s}")));
                }
                r[(s, i)] = (prices[(s + 1, i)] - prev) / prev;
            }
        }
        Self::new(r)
    }

    pub fn returns(&self) -> &DMatrix<f64> {
        &self.returns
    }

    pub fn periods(&self) -> usize {
        self.returns.nrows()
    }

    pub fn assets(&self) -> usize {
        self.returns.ncols()
    }

    /// Sample covariance (T − 1 denominator).
    pub fn covariance(&self) -> DMatrix<f64> {
        let t = self.periods() as f64;
        let mean = self.returns.row_mean();
        let mut centered = self.returns.clone();
        for mut row in centered.row_iter_mut() {
            row -= &mean;
        }
        centered.transpose() * &centered / (t - 1.0)
    }

    /// Returns restricted to the given periods.
    pub fn window(&self, start: usize, len: usize) -> Result<Self> {
        if start + len > self.periods() {
            return Err(Error::invalid(format!("window {start}..{} beyond {} periods", start + len, self.periods())));
        }
        Self::new(self.returns.rows(start, len).into_owned())
    }
}

/// W_mn = |σ_mn| / √(σ_mm σ_nn).
pub fn market_graph(r: &ReturnSeries) -> Result<Graph> {
    let s = r.covariance();
    let n = s.nrows();
    if let Some(i) = (0..n).find(|&i| s[(i, i)] <= 0.0) {
        return Err(Error::invalid(format!("asset {i} has zero variance")));
    }
    let w =
        DMatrix::from_fn(
            n,
            n,
            |m, k| {
                if m == k {
                    0.0
                } else {
                    (s[(m, k)].abs() / (s[(m, m)] * s[(k, k)]).sqrt()).min(1.0)
                }
            },
        );
    Graph::new(w)
}

/// Σ⁻¹𝟙 / (𝟙ᵀΣ⁻¹𝟙). A singular Σ is an error; no pseudo-inverse is substituted.
pub fn min_variance_weights(sigma: &DMatrix<f64>) -> Result<DVector<f64>> {
    let inv = inverse_sym(sigma).map_err(|e| match e {
        Error::IllConditioned { cond } => Error::Singular(format!(
            "covariance is singular (condition number {cond:e}); minimum-variance weights are undefined"
        )),
        other => other,
    })?;
    let ones = DVector::from_element(sigma.nrows(), 1.0);
    let raw = inv * ones;
    let total = raw.sum();
    if total.abs() < f64::MIN_POSITIVE {
        return Err(Error::Singular("𝟙ᵀΣ⁻¹𝟙 vanishes".into()));
    }
    Ok(raw / total)
}

/// Equal weights 1/N.
pub fn equal_weights(n: usize) -> DVector<f64> {
    DVector::from_element(n, 1.0 / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutKind {
    /// (1/N₁ + 1/N₂) Σ_cross W
    Normalized,
    /// (1/V₁ + 1/V₂) Σ_cross W
    Volume,
}

impl std::str::FromStr for CutKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cutn" | "normalized" => Ok(Self::Normalized),
            "cutv" | "volume" => Ok(Self::Volume),
            other => Err(Error::invalid(format!("unknown cut kind {other:?}"))),
        }
    }
}

fn check_side(g: &Graph, side: &[bool]) -> Result<(f64, f64)> {
    if side.len() != g.n() {
        return Err(Error::dim(format!("{} side flags for {} vertices", side.len(), g.n())));
    }
    let n1 = side.iter().filter(|&&s| s).count();
    if n1 == 0 || n1 == side.len() {
        return Err(Error::invalid("both sides of the cut must be non-empty"));
    }
    Ok((n1 as f64, (side.len() - n1) as f64))
}

fn side_sizes(g: &Graph, side: &[bool], kind: CutKind) -> Result<(f64, f64)> {
    let (n1, n2) = check_side(g, side)?;
    match kind {
        CutKind::Normalized => Ok((n1, n2)),
        CutKind::Volume => {
            let d = g.degrees();
            let v1: f64 = (0..g.n()).filter(|&i| side[i]).map(|i| d[i]).sum();
            let v2: f64 = (0..g.n()).filter(|&i| !side[i]).map(|i| d[i]).sum();
            if v1 <= 0.0 || v2 <= 0.0 {
                return Err(Error::invalid("a side of the cut has zero volume"));
            }
            Ok((v1, v2))
        }
    }
}

/// Weight crossing the cut, scaled by the sizes or volumes of the two sides.
pub fn cut_value(g: &Graph, side: &[bool], kind: CutKind) -> Result<f64> {
    let (a, b) = side_sizes(g, side, kind)?;
    let mut cross = 0.0;
    for (i, j, w) in g.edges() {
        if side[i] != side[j] {
            cross += w;
        }
    }
    Ok((1.0 / a + 1.0 / b) * cross)
}

/// Indicator 1/N₁ (or 1/V₁) on the `true` side and −1/N₂ (or −1/V₂) on the other.
pub fn cut_indicator(g: &Graph, side: &[bool], kind: CutKind) -> Result<DVector<f64>> {
    let (a, b) = side_sizes(g, side, kind)?;
    Ok(DVector::from_fn(g.n(), |i, _| if side[i] { 1.0 / a } else { -1.0 / b }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bisection {
    /// `true` for vertices on the non-negative side of the Fiedler vector.
    pub side: Vec<bool>,
    pub fiedler: Option<DVector<f64>>,
    /// The input was disconnected; the split separates the component of vertex 0.
    pub disconnected: bool,
    pub cut: f64,
}

/// Sign split of the Fiedler vector of L (`Normalized`) or of L x = λ D x (`Volume`).
pub fn spectral_bisect(g: &Graph, kind: CutKind) -> Result<Bisection> {
    let n = g.n();
    if n < 2 {
        return Err(Error::invalid(format!("bisection needs at least 2 vertices, got {n}")));
    }
    if !g.is_connected() {
        let comp = g.components();
        let side: Vec<bool> = comp.iter().map(|&c| c == comp[0]).collect();
        return Ok(Bisection { side, fiedler: None, disconnected: true, cut: 0.0 });
    }
    let (values, vectors) = match kind {
        CutKind::Normalized => {
            let dec = eig_sym(laplacian(g, LaplacianKind::Combinatorial)?.matrix())?;
            (dec.eigenvalues().clone(), dec.eigenvectors().clone())
        }
        CutKind::Volume => {
            let dec = eig_sym(normalized_laplacian(g, true)?.matrix())?;
            let d = g.degrees();
            let x = DMatrix::from_fn(n, n, |i, k| dec.eigenvectors()[(i, k)] / d[i].sqrt());
            (dec.eigenvalues().clone(), x)
        }
    };
    // A repeated second eigenvalue leaves the Fiedler direction arbitrary; try each basis vector of
    // the eigenspace and their sum, keeping the smallest cut.
    let top = values.amax().max(f64::MIN_POSITIVE);
    let mult = (1..n).take_while(|&k| (values[k] - values[1]).abs() <= 1e-9 * top).count();
    let mut candidates: Vec<DVector<f64>> = (1..1 + mult).map(|k| vectors.column(k).into_owned()).collect();
    if mult > 1 {
        let sum = candidates.iter().fold(DVector::zeros(n), |acc, v| acc + v);
        candidates.push(sum);
    }
    let mut best: Option<(f64, Vec<bool>, DVector<f64>)> = None;
    for f in candidates {
        let scale = f.amax();
        let side: Vec<bool> = f.iter().map(|&v| v >= -1e-12 * scale).collect();
        if side.iter().all(|&s| s) {
            continue;
        }
        let cut = cut_value(g, &side, kind)?;
        if best.as_ref().is_none_or(|b| cut < b.0) {
            best = Some((cut, side, f));
        }
    }
    let (cut, side, fiedler) = best.ok_or_else(|| Error::Singular("Fiedler vector has no negative entry".into()))?;
    Ok(Bisection { side, fiedler: Some(fiedler), disconnected: false, cut })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutNode {
    pub vertices: Vec<usize>,
    /// Number of cuts on the path from the root.
    pub depth: usize,
    pub children: Option<(usize, usize)>,
}

/// Binary tree of vertex subsets; the leaves partition the root set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutTree {
    nodes: Vec<CutNode>,
}

impl CutTree {
    /// Single leaf holding vertices 0..n.
    pub fn root(n: usize) -> Self {
        Self { nodes: vec![CutNode { vertices: (0..n).collect(), depth: 0, children: None }] }
    }

    pub fn nodes(&self) -> &[CutNode] {
        &self.nodes
    }

    pub fn n(&self) -> usize {
        self.nodes[0].vertices.len()
    }

    /// Splits leaf `node` into `part` and the remaining vertices. The child holding the smaller
    /// lowest vertex index comes first.
    pub fn split(&mut self, node: usize, part: &[usize]) -> Result<(usize, usize)> {
        let parent = self.nodes.get(node).ok_or_else(|| Error::invalid(format!("no tree node {node}")))?;
        if parent.children.is_some() {
            return Err(Error::invalid(format!("node {node} is already split")));
        }
        let mut a: Vec<usize> = part.to_vec();
        a.sort_unstable();
        a.dedup();
        if a.iter().any(|v| parent.vertices.binary_search(v).is_err()) {
            return Err(Error::invalid(format!("part is not a subset of node {node}")));
        }
        if a.is_empty() || a.len() == parent.vertices.len() {
            return Err(Error::invalid("both children must be non-empty"));
        }
        let b: Vec<usize> = parent.vertices.iter().copied().filter(|v| a.binary_search(v).is_err()).collect();
        let (first, second) = if a[0] < b[0] { (a, b) } else { (b, a) };
        let depth = parent.depth + 1;
        let i = self.nodes.len();
        self.nodes.push(CutNode { vertices: first, depth, children: None });
        self.nodes.push(CutNode { vertices: second, depth, children: None });
        self.nodes[node].children = Some((i, i + 1));
        Ok((i, i + 1))
    }

    /// Leaf node ids in depth-first order.
    pub fn leaves(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![0];
        while let Some(id) = stack.pop() {
            match self.nodes[id].children {
                Some((a, b)) => {
                    stack.push(b);
                    stack.push(a);
                }
                None => out.push(id),
            }
        }
        out
    }

    pub fn leaf_sets(&self) -> Vec<Vec<usize>> {
        self.leaves().into_iter().map(|id| self.nodes[id].vertices.clone()).collect()
    }

    /// Cluster label per vertex, numbered in leaf order.
    pub fn labels(&self) -> Vec<usize> {
        let mut labels = vec![0; self.n()];
        for (c, set) in self.leaf_sets().iter().enumerate() {
            for &v in set {
                labels[v] = c;
            }
        }
        labels
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafSelect {
    #[default]
    LargestSize,
    LargestVolume,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepeatedCuts {
    pub tree: CutTree,
    pub warnings: Vec<String>,
}

/// `k` successive bisections, each applied to the leaf ranked first by `select`
/// (ties go to the leaf with the lowest smallest vertex index).
pub fn repeated_cuts(g: &Graph, k: usize, kind: CutKind, select: LeafSelect) -> Result<RepeatedCuts> {
    let n = g.n();
    if n == 0 || k > n - 1 {
        return Err(Error::invalid(format!("{k} cuts on {n} vertices (at most N-1)")));
    }
    let d = g.degrees();
    let mut tree = CutTree::root(n);
    let mut warnings = Vec::new();
    for _ in 0..k {
        let mut ranked: Vec<usize> = tree.leaves();
        let score = |id: usize| -> f64 {
            let vs = &tree.nodes[id].vertices;
            match select {
                LeafSelect::LargestSize => vs.len() as f64,
                LeafSelect::LargestVolume => vs.iter().map(|&v| d[v]).sum(),
            }
        };
        ranked.sort_by(|&a, &b| {
            score(b).total_cmp(&score(a)).then(tree.nodes[a].vertices[0].cmp(&tree.nodes[b].vertices[0]))
        });
        let mut chosen = None;
        for id in ranked {
            if tree.nodes[id].vertices.len() < 2 {
                warnings.push(format!("leaf {:?} has a single vertex; skipped", tree.nodes[id].vertices));
                continue;
            }
            chosen = Some(id);
            break;
        }
        let id = chosen.ok_or_else(|| Error::invalid("no leaf with two or more vertices left to cut"))?;
        let vs = tree.nodes[id].vertices.clone();
        let sub = g.induced(&vs);
        let bis = spectral_bisect(&sub, kind)?;
        if bis.disconnected {
            warnings.push(format!("leaf {vs:?} is disconnected; split along components"));
        }
        let part: Vec<usize> = vs.iter().zip(&bis.side).filter(|(_, &s)| s).map(|(&v, _)| v).collect();
        let part = if part.len() == vs.len() { vec![vs[vs.len() - 1]] } else { part };
        tree.split(id, &part)?;
    }
    Ok(RepeatedCuts { tree, warnings })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AllocationScheme {
    /// Leaf weight 2^{−K_i}, K_i the number of cuts above the leaf.
    #[serde(rename = "as1")]
    As1,
    /// Leaf weight 1/(K+1).
    #[serde(rename = "as2")]
    As2,
}

impl std::str::FromStr for AllocationScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "as1" => Ok(Self::As1),
            "as2" => Ok(Self::As2),
            other => Err(Error::invalid(format!("unknown allocation scheme {other:?}"))),
        }
    }
}

/// Per-leaf cluster weights, in leaf order.
pub fn cluster_weights(tree: &CutTree, scheme: AllocationScheme) -> Vec<f64> {
    let leaves = tree.leaves();
    leaves
        .iter()
        .map(|&id| match scheme {
            AllocationScheme::As1 => 0.5f64.powi(tree.nodes[id].depth as i32),
            AllocationScheme::As2 => 1.0 / leaves.len() as f64,
        })
        .collect()
}

/// Asset weights: each leaf's cluster weight shared equally by its assets.
pub fn allocate(tree: &CutTree, scheme: AllocationScheme) -> Result<DVector<f64>> {
    let weights = cluster_weights(tree, scheme);
    let mut w = DVector::zeros(tree.n());
    for (set, cw) in tree.leaf_sets().iter().zip(&weights) {
        for &v in set {
            w[v] = cw / set.len() as f64;
        }
    }
    let total = w.sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(format!("allocation sums to {total}, not 1")));
    }
    Ok(w)
}

/// Per-period portfolio returns r_t · w.
pub fn portfolio_returns(r: &ReturnSeries, w: &DVector<f64>) -> Result<DVector<f64>> {
    if w.len() != r.assets() {
        return Err(Error::dim(format!("{} weights for {} assets", w.len(), r.assets())));
    }
    Ok(r.returns() * w)
}

/// Mean over standard deviation (T − 1 denominator) of the portfolio returns, times √`periods_per_year` when given.
pub fn sharpe(r: &ReturnSeries, w: &DVector<f64>, periods_per_year: Option<f64>) -> Result<f64> {
    let p = portfolio_returns(r, w)?;
    let t = p.len() as f64;
    let mean = p.mean();
    let var = p.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (t - 1.0);
    let std = var.sqrt();
    if std <= 1e-14 * mean.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::invalid("portfolio returns have zero standard deviation"));
    }
    Ok(mean / std * periods_per_year.map_or(1.0, f64::sqrt))
}
