use serde::{Deserialize, Serialize};

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::stats::linear_fit;

use super::activity::ActivityEstimate;
use super::polymer::{Cluster, Partition1D};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeGraphCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Checks `Σ_{connected G} Π w ≤ Π_{i≠j}(1 + w_ij) · Σ_{trees} Π w` on `r`
/// vertices by enumerating every graph. `w` is a row-major symmetric matrix.
pub fn tree_graph_bound_check(r: usize, w: &[f64]) -> Result<TreeGraphCheck> {
    if r == 0 || r > 6 {
        return Err(Error::SizeLimit(format!("tree-graph check needs 1 <= r <= 6, got {r}")));
    }
    if w.len() != r * r {
        return Err(Error::spec("weight matrix must be r x r"));
    }
    let edges: Vec<(usize, usize)> = (0..r).flat_map(|i| (i + 1..r).map(move |j| (i, j))).collect();
    for &(i, j) in &edges {
        let x = w[i * r + j];
        if !(0.0..=1.0).contains(&x) || x != w[j * r + i] {
            return Err(Error::spec("weights must be symmetric and lie in [0, 1]"));
        }
    }
    let (mut connected, mut trees) = (0.0, 0.0);
    for g in 0u32..1 << edges.len() {
        let mut comp: Vec<usize> = (0..r).collect();
        let mut prod = 1.0;
        let mut cycle = false;
        for (e, &(i, j)) in edges.iter().enumerate() {
            if g >> e & 1 == 1 {
                prod *= w[i * r + j];
                let (ci, cj) = (comp[i], comp[j]);
                if ci == cj {
                    cycle = true;
                }
                comp.iter_mut().filter(|c| **c == cj).for_each(|c| *c = ci);
            }
        }
        if comp.iter().all(|c| *c == comp[0]) {
            connected += prod;
            if !cycle {
                trees += prod;
            }
        }
    }
    let factor: f64 = edges.iter().map(|&(i, j)| (1.0 + w[i * r + j]).powi(2)).product();
    let rhs = factor * trees;
    Ok(TreeGraphCheck { lhs: connected, rhs, holds: connected <= rhs * (1.0 + 1e-12) })
}

/// Tree-graph checks on `instances` random weight matrices with uniform
/// entries, cycling `r` through 3, 4, 5.
pub fn tree_graph_random(instances: usize, stream: RngStream) -> Result<Vec<(usize, TreeGraphCheck)>> {
    let mut rng = stream.rng();
    (0..instances)
        .map(|k| {
            let r = 3 + k % 3;
            let mut w = vec![0.0; r * r];
            for i in 0..r {
                for j in i + 1..r {
                    let x: f64 = rng.random();
                    w[i * r + j] = x;
                    w[j * r + i] = x;
                }
            }
            Ok((r, tree_graph_bound_check(r, &w)?))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceParams {
    pub epsilon: f64,
    pub b: f64,
    pub delta: f64,
}

/// `ε = |λ|^{Λ / (Λ + C)}`.
pub fn epsilon_from_lambda(lambda: f64, big_lambda: f64, c: f64) -> f64 {
    lambda.abs().powf(big_lambda / (big_lambda + c))
}

/// `C` solving `ε = |λ|^{Λ / (Λ + C)}`.
pub fn fit_c(lambda: f64, big_lambda: f64, epsilon: f64) -> f64 {
    big_lambda * (lambda.abs().ln() / epsilon.ln() - 1.0)
}

/// Pair decay `(1 + b · g)^{-δ}` with `g = |i - j| - 1` intervals between the pair.
pub fn pair_decay(i: usize, j: usize, b: f64, delta: f64) -> f64 {
    let gap = i.abs_diff(j).saturating_sub(1) as f64;
    (1.0 + b * gap).powf(-delta)
}

/// `Π_{pairs} ε D(i, j) · ε^{Σ |ρ̄|}`.
pub fn cluster_bound(cluster: &Cluster, p: &ConvergenceParams) -> f64 {
    let mut bound = 1.0;
    for c in &cluster.contours {
        for &(i, j) in &c.pairs {
            bound *= p.epsilon * pair_decay(i, j, p.b, p.delta);
        }
    }
    let links: usize = cluster.chains.iter().map(|c| c.len).sum();
    bound * p.epsilon.powi(links as i32)
}

/// Smallest `ε` for which a fraction `q` of the clusters meet their bound.
pub fn calibrate_epsilon(estimates: &[ActivityEstimate], b: f64, delta: f64, q: f64) -> f64 {
    let need: Vec<f64> = estimates
        .iter()
        .map(|e| {
            let unit = ConvergenceParams { epsilon: 1.0, b, delta };
            let d = cluster_bound(&e.cluster, &unit);
            let power = e.cluster.contours.iter().map(|c| c.pairs.len()).sum::<usize>() + e.cluster.chains.iter().map(|c| c.len).sum::<usize>();
            (e.value.abs() / d).powf(1.0 / power as f64)
        })
        .collect();
    crate::stats::quantile(&need, q)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub cluster: String,
    pub weight: usize,
    pub k_hat: f64,
    pub se: f64,
    pub bound: f64,
    pub violated: bool,
    /// `|K̂| - 2 SE <= bound`.
    pub within_two_se: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// `(n, Σ |K̂|)` over clusters with `|Γ̄| = n` whose time-points contain the origin.
    pub weight_sums: Vec<(usize, f64)>,
    /// Geometric rate fitted to `weight_sums`.
    pub eta_hat: Option<f64>,
    pub violation_fraction: f64,
}

pub fn convergence_diagnostic(partition: &Partition1D, estimates: &[ActivityEstimate], params: &ConvergenceParams) -> Result<ConvergenceReport> {
    if !(params.epsilon > 0.0 && params.b > 0.0 && params.delta >= 0.0) {
        return Err(Error::spec("convergence parameters must be positive"));
    }
    let rows: Vec<ConvergenceRow> = estimates
        .iter()
        .map(|e| {
            let bound = cluster_bound(&e.cluster, params);
            let a = e.value.abs();
            ConvergenceRow { cluster: e.id(), weight: e.cluster.weight(), k_hat: e.value, se: e.se, bound, violated: a > bound, within_two_se: a - 2.0 * e.se <= bound }
        })
        .collect();
    let origin = partition.origin();
    let mut sums = std::collections::BTreeMap::new();
    for e in estimates {
        if e.cluster.timepoint_mask() >> origin & 1 == 1 {
            *sums.entry(e.cluster.weight()).or_insert(0.0) += e.value.abs();
        }
    }
    let weight_sums: Vec<(usize, f64)> = sums.into_iter().collect();
    let pts: Vec<(f64, f64)> = weight_sums.iter().filter(|(_, s)| *s > 0.0).map(|&(n, s)| (n as f64, s.ln())).collect();
    let eta_hat = if pts.len() >= 2 {
        let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        Some(linear_fit(&x, &y).slope.exp())
    } else {
        None
    };
    let violation_fraction = if rows.is_empty() { 0.0 } else { rows.iter().filter(|r| r.violated).count() as f64 / rows.len() as f64 };
    Ok(ConvergenceReport { rows, weight_sums, eta_hat, violation_fraction })
}
