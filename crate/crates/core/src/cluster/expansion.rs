use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::stats::CompensatedSum;

use super::activity::ActivityEstimate;
use super::polymer::Cluster;

/// A cluster reduced to what the polymer sums need: its time-point set and activity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Polymer {
    pub mask: u64,
    pub activity: f64,
}

impl Polymer {
    pub fn new(mask: u64, activity: f64) -> Self {
        Polymer { mask, activity }
    }

    pub fn from_estimate(e: &ActivityEstimate) -> Self {
        Polymer { mask: e.cluster.timepoint_mask(), activity: e.value }
    }

    /// Polymers for `clusters`, looking activities up by cluster id.
    pub fn for_clusters(clusters: &[Cluster], estimates: &[ActivityEstimate]) -> Result<Vec<Polymer>> {
        let by_id: HashMap<String, f64> = estimates.iter().map(|e| (e.id(), e.value)).collect();
        clusters
            .iter()
            .map(|c| {
                let id = c.id();
                by_id.get(&id).map(|k| Polymer::new(c.timepoint_mask(), *k)).ok_or(Error::MissingActivity(id))
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZSum {
    pub value: f64,
    /// Collections visited, the empty one included.
    pub collections: usize,
    pub truncated: bool,
}

fn walk(polys: &[Polymer], from: usize, used: u64, prod: f64, budget: &mut usize, acc: &mut CompensatedSum, visit: &mut Vec<usize>, record: &mut Option<&mut Vec<Vec<usize>>>) -> bool {
    for k in from..polys.len() {
        let p = polys[k];
        if p.mask & used != 0 {
            continue;
        }
        if *budget == 0 {
            return true;
        }
        *budget -= 1;
        let v = prod * p.activity;
        acc.add(v);
        visit.push(k);
        if let Some(r) = record.as_deref_mut() {
            r.push(visit.clone());
        }
        let cut = walk(polys, k + 1, used | p.mask, v, budget, acc, visit, record);
        visit.pop();
        if cut {
            return true;
        }
    }
    false
}

fn z_sum(polys: &[Polymer], exclude: u64, max_terms: Option<usize>, record: Option<&mut Vec<Vec<usize>>>) -> ZSum {
    let mut acc = CompensatedSum::new();
    acc.add(1.0);
    let limit = max_terms.unwrap_or(usize::MAX).max(1);
    let mut budget = limit - 1;
    let mut record = record;
    if let Some(r) = record.as_deref_mut() {
        r.push(Vec::new());
    }
    let truncated = walk(polys, 0, exclude, 1.0, &mut budget, &mut acc, &mut Vec::new(), &mut record);
    ZSum { value: acc.value(), collections: limit - budget, truncated }
}

/// `Z = 1 + Σ Π K` over nonempty collections of pairwise time-point-disjoint
/// polymers, stopping after `max_terms` collections.
pub fn z_cluster_sum(polys: &[Polymer], max_terms: Option<usize>) -> ZSum {
    z_sum(polys, 0, max_terms, None)
}

/// Index lists of the collections entering [`z_cluster_sum`], the empty one first.
pub fn z_collections(polys: &[Polymer], max_terms: Option<usize>) -> (Vec<Vec<usize>>, bool) {
    let mut out = Vec::new();
    let z = z_sum(polys, 0, max_terms, Some(&mut out));
    (out, z.truncated)
}

/// `Z^A`: the cluster sum restricted to polymers avoiding the time-points in `avoid`.
pub fn z_excluding(polys: &[Polymer], avoid: u64, max_terms: Option<usize>) -> ZSum {
    z_sum(polys, avoid, max_terms, None)
}

/// `∂Z / ∂K_a`, which is the sum over polymers disjoint from `a`.
pub fn z_gradient(polys: &[Polymer]) -> Vec<f64> {
    polys.iter().map(|p| z_excluding(polys, p.mask, None).value).collect()
}

/// Delta-method standard error of `Z` from the activity covariance (row-major).
pub fn z_standard_error(polys: &[Polymer], covariance: &[f64]) -> Result<f64> {
    let m = polys.len();
    if covariance.len() != m * m {
        return Err(Error::spec("covariance size does not match the polymer count"));
    }
    let g = z_gradient(polys);
    let mut v = 0.0;
    for a in 0..m {
        for b in 0..m {
            v += g[a] * covariance[a * m + b] * g[b];
        }
    }
    Ok(v.max(0.0).sqrt())
}

/// `f^A = Z^A / Z` for the time-point set `avoid`.
pub fn correlation_f(polys: &[Polymer], avoid: u64) -> Result<f64> {
    let z = z_cluster_sum(polys, None).value;
    if !(z > 0.0) {
        return Err(Error::NonPositiveZ(z));
    }
    Ok(z_excluding(polys, avoid, None).value / z)
}

/// Time-points touched by a set of intervals.
pub fn timepoints_of_intervals(intervals: &[usize]) -> u64 {
    intervals.iter().fold(0, |m, &k| m | 0b11 << k)
}

pub const MAX_URSELL: usize = 7;

/// Ursell function `φ^T` of a tuple whose members intersect as given by `adj`.
pub fn ursell(adj: &[Vec<bool>]) -> Result<f64> {
    let n = adj.len();
    if n == 0 || n > MAX_URSELL {
        return Err(Error::SizeLimit(format!("ursell needs 1..={MAX_URSELL} members, got {n}")));
    }
    if adj.iter().any(|r| r.len() != n) {
        return Err(Error::spec("intersection matrix must be square"));
    }
    // F(S) = Π_{e ⊂ S} (1 + f_e) with f_e = -1 on intersecting pairs
    let full = 1usize << n;
    let free: Vec<f64> = (0..full)
        .map(|s| {
            let hit = (0..n).any(|i| s >> i & 1 == 1 && (i + 1..n).any(|j| s >> j & 1 == 1 && adj[i][j]));
            if hit {
                0.0
            } else {
                1.0
            }
        })
        .collect();
    let mut conn = vec![0.0; full];
    for s in 1..full {
        let low = s & s.wrapping_neg();
        let rest = s ^ low;
        let mut c = free[s];
        // proper subsets T of s that contain the lowest member
        let mut t = rest;
        loop {
            let tt = t | low;
            if tt != s {
                c -= conn[tt] * free[s ^ tt];
            }
            if t == 0 {
                break;
            }
            t = (t - 1) & rest;
        }
        conn[s] = c;
    }
    Ok(conn[full - 1])
}

const MAX_MULTISETS: usize = 5_000_000;

/// `log Z` as `Σ_n (1/n!) Σ_{(Γ_1..Γ_n)} φ^T Π K`, summed over multisets up to `order`.
pub fn log_z_series(polys: &[Polymer], order: usize) -> Result<f64> {
    if order > MAX_URSELL {
        return Err(Error::SizeLimit(format!("series order above {MAX_URSELL}")));
    }
    let m = polys.len();
    let mut count = 0usize;
    let mut binom = 1.0f64;
    for k in 1..=order {
        binom = binom * (m + k - 1) as f64 / k as f64;
        count += binom as usize;
    }
    if count > MAX_MULTISETS {
        return Err(Error::SizeLimit(format!("{count} multisets exceed the series budget")));
    }
    let mut acc = CompensatedSum::new();
    let mut picks = Vec::with_capacity(order);
    multisets(polys, 0, order, &mut picks, &mut acc)?;
    Ok(acc.value())
}

fn multisets(polys: &[Polymer], from: usize, left: usize, picks: &mut Vec<usize>, acc: &mut CompensatedSum) -> Result<()> {
    if left == 0 {
        return Ok(());
    }
    for k in from..polys.len() {
        picks.push(k);
        let n = picks.len();
        let adj: Vec<Vec<bool>> = (0..n).map(|a| (0..n).map(|b| a != b && polys[picks[a]].mask & polys[picks[b]].mask != 0).collect()).collect();
        let phi = ursell(&adj)?;
        if phi != 0.0 {
            let mut term = phi;
            let mut run = 0;
            for (a, &p) in picks.iter().enumerate() {
                run = if a > 0 && picks[a - 1] == p { run + 1 } else { 1 };
                term *= polys[p].activity / run as f64;
            }
            acc.add(term);
        }
        multisets(polys, k, left - 1, picks, acc)?;
        picks.pop();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Sum over all graphs on `n` vertices, keeping connected ones.
    fn ursell_brute(adj: &[Vec<bool>]) -> f64 {
        let n = adj.len();
        let edges: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let mut total = 0.0;
        for g in 0u64..1 << edges.len() {
            let chosen: Vec<(usize, usize)> = (0..edges.len()).filter(|e| g >> e & 1 == 1).map(|e| edges[e]).collect();
            let mut comp: Vec<usize> = (0..n).collect();
            for &(i, j) in &chosen {
                let (ci, cj) = (comp[i], comp[j]);
                for c in comp.iter_mut() {
                    if *c == cj {
                        *c = ci;
                    }
                }
            }
            if comp.iter().all(|c| *c == comp[0]) {
                total += chosen.iter().map(|&(i, j)| if adj[i][j] { -1.0 } else { 0.0 }).product::<f64>();
            }
        }
        total
    }

    fn adj_from(masks: &[u64]) -> Vec<Vec<bool>> {
        (0..masks.len()).map(|a| (0..masks.len()).map(|b| a != b && masks[a] & masks[b] != 0).collect()).collect()
    }

    /// `Z` by scanning every subset of polymers.
    fn z_brute(polys: &[Polymer]) -> f64 {
        let mut z = 0.0;
        for s in 0u32..1 << polys.len() {
            let mut used = 0;
            let mut prod = 1.0;
            let mut ok = true;
            for (k, p) in polys.iter().enumerate() {
                if s >> k & 1 == 1 {
                    ok &= used & p.mask == 0;
                    used |= p.mask;
                    prod *= p.activity;
                }
            }
            if ok {
                z += prod;
            }
        }
        z
    }

    #[test]
    fn ursell_fixtures() {
        assert_eq!(ursell(&[vec![false]]).unwrap(), 1.0);
        assert_eq!(ursell(&adj_from(&[0b011, 0b1100])).unwrap(), 0.0);
        assert_eq!(ursell(&adj_from(&[0b111, 0b110, 0b011])).unwrap(), 2.0);
        assert!(ursell(&vec![vec![true; 8]; 8]).is_err());
    }

    #[test]
    fn ursell_complete_graph() {
        for n in 1..=7usize {
            let adj: Vec<Vec<bool>> = (0..n).map(|a| (0..n).map(|b| a != b).collect()).collect();
            let fact: f64 = (1..n).map(|k| k as f64).product();
            let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
            assert_eq!(ursell(&adj).unwrap(), sign * fact);
        }
    }

    proptest! {
        #[test]
        fn ursell_matches_graph_sum(masks in prop::collection::vec(1u64..64, 1..=5)) {
            let adj = adj_from(&masks);
            prop_assert_eq!(ursell(&adj).unwrap(), ursell_brute(&adj));
        }

        #[test]
        fn z_matches_subset_scan(masks in prop::collection::vec(1u64..512, 0..=6), ks in prop::collection::vec(-0.5f64..0.5, 6)) {
            let polys: Vec<Polymer> = masks.iter().zip(&ks).map(|(m, k)| Polymer::new(*m, *k)).collect();
            prop_assert!((z_cluster_sum(&polys, None).value - z_brute(&polys)).abs() < 1e-14);
        }

        #[test]
        fn polymer_log_remainder(masks in prop::collection::vec(1u64..256, 1..=5), ks in prop::collection::vec(-0.1f64..0.1, 5)) {
            let polys: Vec<Polymer> = masks.iter().zip(&ks).map(|(m, k)| Polymer::new(*m, *k)).collect();
            let z = z_cluster_sum(&polys, None).value;
            let s = log_z_series(&polys, 6).unwrap();
            // |φ^T| <= (n - 1)! bounds the tail by Σ_{n >= 7} a^n / n
            let a: f64 = polys.iter().map(|p| p.activity.abs()).sum();
            let tail = a.powi(7) / (7.0 * (1.0 - a));
            prop_assert!((s - z.ln()).abs() <= tail + 1e-14, "{} vs {} (tail {tail})", s, z.ln());
        }

        #[test]
        fn polymer_log_identity_small_activities(masks in prop::collection::vec(1u64..256, 1..=5), ks in prop::collection::vec(-0.02f64..0.02, 5)) {
            let polys: Vec<Polymer> = masks.iter().zip(&ks).map(|(m, k)| Polymer::new(*m, *k)).collect();
            let z = z_cluster_sum(&polys, None).value;
            prop_assert!((log_z_series(&polys, 6).unwrap().exp() - z).abs() <= 1e-6);
        }
    }

    #[test]
    fn single_polymer_series() {
        let k = 0.1;
        let s = log_z_series(&[Polymer::new(0b11, k)], 6).unwrap();
        let want: f64 = (1..=6).map(|n| if n % 2 == 1 { 1.0 } else { -1.0 } * k.powi(n) / n as f64).sum();
        assert!((s - want).abs() < 1e-16);
        assert!((s.exp() - (1.0 + k)).abs() < 1e-6);
        assert!(log_z_series(&[Polymer::new(0b11, k)], 8).is_err());
    }

    #[test]
    fn trivial_sums() {
        let zero = vec![Polymer::new(0b11, 0.0), Polymer::new(0b110, 0.0)];
        assert_eq!(z_cluster_sum(&zero, None).value, 1.0);
        assert_eq!(log_z_series(&zero, 4).unwrap(), 0.0);
        assert_eq!(correlation_f(&zero, 0b111).unwrap(), 1.0);
        let one = [Polymer::new(0b11, 0.3)];
        assert_eq!(z_cluster_sum(&one, None).value, 1.3);
        assert_eq!(correlation_f(&one, 0b11).unwrap(), 1.0 / 1.3);
    }

    #[test]
    fn truncation_and_collections() {
        let polys = vec![Polymer::new(0b0011, 0.1), Polymer::new(0b1100, 0.2), Polymer::new(0b0110, 0.3)];
        let (all, cut) = z_collections(&polys, None);
        assert!(!cut);
        assert_eq!(all, vec![vec![], vec![0], vec![0, 1], vec![1], vec![2]]);
        let z = z_cluster_sum(&polys, Some(3));
        assert!(z.truncated);
        assert_eq!(z.collections, 3);
        assert!((z.value - 1.12).abs() < 1e-15);
    }

    #[test]
    fn gradient_and_error() {
        let polys = vec![Polymer::new(0b0011, 0.1), Polymer::new(0b1100, 0.2)];
        let g = z_gradient(&polys);
        assert!((g[0] - 1.2).abs() < 1e-15 && (g[1] - 1.1).abs() < 1e-15);
        let se = z_standard_error(&polys, &[0.01, 0.0, 0.0, 0.04]).unwrap();
        assert!((se - (1.44f64 * 0.01 + 1.21 * 0.04).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn nonpositive_z() {
        assert!(matches!(correlation_f(&[Polymer::new(1, -1.5)], 0), Err(Error::NonPositiveZ(_))));
    }

    #[test]
    fn missing_activity() {
        use super::super::polymer::Contour;
        let c = Cluster::new(vec![Contour::new(vec![(0, 1)])], vec![]);
        assert!(matches!(Polymer::for_clusters(&[c], &[]), Err(Error::MissingActivity(_))));
    }
}
