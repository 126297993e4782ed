use crate::error::{Error, Result};

use super::polymer::{connected, decompose, Chain, Cluster, Component, Contour, Partition1D};

pub const MAX_N: usize = 8;
pub const MAX_WEIGHT: usize = 6;

/// All clusters on the partition with `|Γ̄| <= max_weight`, in canonical order.
pub fn enumerate_clusters(partition: &Partition1D, max_weight: usize) -> Result<Vec<Cluster>> {
    let n = partition.n;
    if n > MAX_N || max_weight > MAX_WEIGHT {
        return Err(Error::SizeLimit(format!("exhaustive enumeration needs N <= {MAX_N} and weight <= {MAX_WEIGHT}")));
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut out = Vec::new();
    let mut chosen = Vec::new();
    pair_subsets(&pairs, 0, 0, max_weight, &mut chosen, &mut |r| {
        let contours: Vec<Contour> = decompose(r, &[], n).expect("pairs in range").into_iter().flat_map(|c| c.cluster.contours).collect();
        let ct = contours.iter().fold(0u64, |m, c| m | c.timepoint_mask());
        let base = contours.iter().fold(0u64, |m, c| m | c.interval_mask());
        let ends: Vec<usize> = (0..=n).filter(|k| ct >> k & 1 == 1).collect();
        let runs: Vec<Chain> = ends.iter().flat_map(|&a| ends.iter().filter(move |&&b| b > a).map(move |&b| Chain { start: a, len: b - a })).collect();
        let mut picked = Vec::new();
        chain_sets(&runs, 0, base, max_weight, &mut picked, &mut |chains| {
            let members: Vec<u64> = contours.iter().map(|c| c.timepoint_mask()).chain(chains.iter().map(|c| c.timepoint_mask())).collect();
            if connected(&members) {
                out.push(Cluster::new(contours.clone(), chains.to_vec()));
            }
        });
    });
    out.sort();
    Ok(out)
}

fn pair_subsets(pairs: &[(usize, usize)], from: usize, mask: u64, max_weight: usize, chosen: &mut Vec<(usize, usize)>, emit: &mut impl FnMut(&[(usize, usize)])) {
    for k in from..pairs.len() {
        let (i, j) = pairs[k];
        let m = mask | 1 << i | 1 << j;
        if m.count_ones() as usize > max_weight {
            continue;
        }
        chosen.push(pairs[k]);
        emit(chosen);
        pair_subsets(pairs, k + 1, m, max_weight, chosen, emit);
        chosen.pop();
    }
}

fn chain_sets(runs: &[Chain], from: usize, mask: u64, max_weight: usize, picked: &mut Vec<Chain>, emit: &mut impl FnMut(&[Chain])) {
    emit(picked);
    for k in from..runs.len() {
        let c = runs[k];
        if picked.last().is_some_and(|p| p.end() >= c.start) {
            continue;
        }
        let m = mask | c.interval_mask();
        if m.count_ones() as usize > max_weight {
            continue;
        }
        picked.push(c);
        chain_sets(runs, k + 1, m, max_weight, picked, emit);
        picked.pop();
    }
}

/// Every `(R, S)` on `n <= 4` intervals with its component decomposition.
pub fn enumerate_components(n: usize) -> Result<Vec<(Vec<(usize, usize)>, Vec<usize>, Vec<Component>)>> {
    if n > 4 {
        return Err(Error::SizeLimit("full (R, S) enumeration needs N <= 4".into()));
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut out = Vec::new();
    for rm in 0u32..1 << pairs.len() {
        let r: Vec<(usize, usize)> = (0..pairs.len()).filter(|k| rm >> k & 1 == 1).map(|k| pairs[k]).collect();
        for sm in 0u32..1 << n {
            let s: Vec<usize> = (0..n).filter(|k| sm >> k & 1 == 1).collect();
            let comps = decompose(&r, &s, n)?;
            out.push((r.clone(), s, comps));
        }
    }
    Ok(out)
}
