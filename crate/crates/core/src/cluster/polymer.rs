use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Partition1D {
    pub half_window: f64,
    pub n: usize,
}

impl Partition1D {
    pub fn new(half_window: f64, n: usize) -> Result<Self> {
        if !(half_window > 0.0) || n == 0 || n % 2 == 1 || n > 62 {
            return Err(Error::spec("partition needs T > 0 and an even N <= 62"));
        }
        Ok(Partition1D { half_window, n })
    }

    /// Partition with interval length `b`.
    pub fn with_spacing(n: usize, b: f64) -> Result<Self> {
        Partition1D::new(0.5 * n as f64 * b, n)
    }

    pub fn b(&self) -> f64 {
        2.0 * self.half_window / self.n as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        -self.half_window + self.b() * k as f64
    }

    /// Time-point at `t = 0` (the window centre).
    pub fn origin(&self) -> usize {
        self.n / 2
    }
}

/// Set of interacting interval pairs, connected through shared intervals.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Contour {
    pub pairs: Vec<(usize, usize)>,
}

impl Contour {
    pub fn new(mut pairs: Vec<(usize, usize)>) -> Self {
        for p in pairs.iter_mut() {
            if p.0 > p.1 {
                *p = (p.1, p.0);
            }
        }
        pairs.sort();
        pairs.dedup();
        Contour { pairs }
    }

    pub fn intervals(&self) -> BTreeSet<usize> {
        self.pairs.iter().flat_map(|&(i, j)| [i, j]).collect()
    }

    pub fn interval_mask(&self) -> u64 {
        self.pairs.iter().fold(0, |m, &(i, j)| m | 1 << i | 1 << j)
    }

    pub fn timepoint_mask(&self) -> u64 {
        let m = self.interval_mask();
        m | m << 1
    }

    pub fn is_connected(&self) -> bool {
        if self.pairs.is_empty() {
            return false;
        }
        let mut mask: u64 = 1 << self.pairs[0].0 | 1 << self.pairs[0].1;
        let mut used = vec![false; self.pairs.len()];
        used[0] = true;
        loop {
            let mut grew = false;
            for (k, &(i, j)) in self.pairs.iter().enumerate() {
                if !used[k] && (mask >> i & 1 == 1 || mask >> j & 1 == 1) {
                    used[k] = true;
                    mask |= 1 << i | 1 << j;
                    grew = true;
                }
            }
            if !grew {
                break;
            }
        }
        used.iter().all(|u| *u)
    }
}

/// Run of consecutive intervals `start..start + len` carrying transition factors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Chain {
    pub start: usize,
    pub len: usize,
}

impl Chain {
    pub fn end(&self) -> usize {
        self.start + self.len
    }

    pub fn interval_mask(&self) -> u64 {
        ((1u64 << self.len) - 1) << self.start
    }

    pub fn timepoint_mask(&self) -> u64 {
        ((1u64 << (self.len + 1)) - 1) << self.start
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cluster {
    pub contours: Vec<Contour>,
    pub chains: Vec<Chain>,
}

impl Cluster {
    pub fn new(mut contours: Vec<Contour>, mut chains: Vec<Chain>) -> Self {
        contours.sort();
        chains.sort();
        Cluster { contours, chains }
    }

    pub fn id(&self) -> String {
        serde_json::to_string(self).expect("cluster serialises")
    }

    pub fn interval_mask(&self) -> u64 {
        self.contours.iter().map(|c| c.interval_mask()).chain(self.chains.iter().map(|c| c.interval_mask())).fold(0, |a, b| a | b)
    }

    /// `Γ*` as a bit mask of time-points.
    pub fn timepoint_mask(&self) -> u64 {
        self.contours.iter().map(|c| c.timepoint_mask()).chain(self.chains.iter().map(|c| c.timepoint_mask())).fold(0, |a, b| a | b)
    }

    /// `|Γ̄|`, the number of intervals touched.
    pub fn weight(&self) -> usize {
        self.interval_mask().count_ones() as usize
    }

    pub fn contour_timepoints(&self) -> u64 {
        self.contours.iter().fold(0, |m, c| m | c.timepoint_mask())
    }

    fn members(&self) -> Vec<u64> {
        self.contours.iter().map(|c| c.timepoint_mask()).chain(self.chains.iter().map(|c| c.timepoint_mask())).collect()
    }

    pub fn validate(&self, partition: &Partition1D) -> Result<()> {
        let n = partition.n;
        let bad = |m: &str| Err(Error::InvalidCluster(format!("{m}: {}", self.id())));
        if self.contours.is_empty() {
            return bad("no contour");
        }
        for c in &self.contours {
            if c.pairs.iter().any(|&(i, j)| i >= j || j >= n) {
                return bad("pair outside the partition");
            }
            if !c.is_connected() {
                return bad("disconnected contour");
            }
        }
        for (a, c) in self.contours.iter().enumerate() {
            for d in &self.contours[a + 1..] {
                if c.interval_mask() & d.interval_mask() != 0 {
                    return bad("contours share an interval");
                }
            }
        }
        for (a, c) in self.chains.iter().enumerate() {
            if c.len == 0 || c.end() > n {
                return bad("chain outside the partition");
            }
            for d in &self.chains[a + 1..] {
                if c.timepoint_mask() & d.timepoint_mask() != 0 {
                    return bad("chains share a time-point");
                }
            }
        }
        let ct = self.contour_timepoints();
        for c in &self.chains {
            if ct >> c.start & 1 == 0 || ct >> c.end() & 1 == 0 {
                return bad("chain with a loose end");
            }
        }
        if !connected(&self.members()) {
            return bad("disconnected cluster");
        }
        Ok(())
    }
}

pub(crate) fn connected(members: &[u64]) -> bool {
    if members.is_empty() {
        return false;
    }
    let mut reached = vec![false; members.len()];
    reached[0] = true;
    let mut mask = members[0];
    loop {
        let mut grew = false;
        for (k, m) in members.iter().enumerate() {
            if !reached[k] && m & mask != 0 {
                reached[k] = true;
                mask |= m;
                grew = true;
            }
        }
        if !grew {
            return reached.iter().all(|r| *r);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ComponentKind {
    Cluster,
    /// Some chain end meets no contour.
    LooseEnd,
    /// Chains only.
    ChainOnly,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Component {
    pub kind: ComponentKind,
    pub cluster: Cluster,
}

/// Splits `(R, S)` on `n` intervals into contours, maximal chains and
/// connected components.
pub fn decompose(r: &[(usize, usize)], s: &[usize], n: usize) -> Result<Vec<Component>> {
    if r.iter().any(|&(i, j)| i == j || i.max(j) >= n) || s.iter().any(|k| *k >= n) {
        return Err(Error::InvalidCluster("pair or link outside the partition".into()));
    }
    // contours: components of R under shared intervals
    let mut pairs: Vec<(usize, usize)> = r.iter().map(|&(i, j)| (i.min(j), i.max(j))).collect();
    pairs.sort();
    pairs.dedup();
    let mut contours: Vec<Contour> = Vec::new();
    let mut left = pairs;
    while let Some(first) = left.pop() {
        let mut group = vec![first];
        let mut mask: u64 = 1 << first.0 | 1 << first.1;
        loop {
            let (take, keep): (Vec<_>, Vec<_>) = left.iter().partition(|&&(i, j)| mask >> i & 1 == 1 || mask >> j & 1 == 1);
            if take.is_empty() {
                break;
            }
            for &(i, j) in &take {
                mask |= 1 << i | 1 << j;
            }
            group.extend(take);
            left = keep;
        }
        contours.push(Contour::new(group));
    }
    // chains: maximal runs of S
    let mut links: Vec<usize> = s.to_vec();
    links.sort();
    links.dedup();
    let mut chains: Vec<Chain> = Vec::new();
    for k in links {
        match chains.last_mut() {
            Some(c) if c.end() == k => c.len += 1,
            _ => chains.push(Chain { start: k, len: 1 }),
        }
    }
    // components under shared time-points
    let members: Vec<u64> = contours.iter().map(|c| c.timepoint_mask()).chain(chains.iter().map(|c| c.timepoint_mask())).collect();
    let nc = contours.len();
    let mut comp = vec![usize::MAX; members.len()];
    let mut out = Vec::new();
    for seed in 0..members.len() {
        if comp[seed] != usize::MAX {
            continue;
        }
        let id = out.len();
        comp[seed] = id;
        let mut mask = members[seed];
        loop {
            let mut grew = false;
            for k in 0..members.len() {
                if comp[k] == usize::MAX && members[k] & mask != 0 {
                    comp[k] = id;
                    mask |= members[k];
                    grew = true;
                }
            }
            if !grew {
                break;
            }
        }
        let cs: Vec<Contour> = (0..nc).filter(|k| comp[*k] == id).map(|k| contours[k].clone()).collect();
        let ch: Vec<Chain> = (nc..members.len()).filter(|k| comp[*k] == id).map(|k| chains[k - nc]).collect();
        let cluster = Cluster::new(cs, ch);
        let kind = if cluster.contours.is_empty() {
            ComponentKind::ChainOnly
        } else {
            let ct = cluster.contour_timepoints();
            if cluster.chains.iter().all(|c| ct >> c.start & 1 == 1 && ct >> c.end() & 1 == 1) {
                ComponentKind::Cluster
            } else {
                ComponentKind::LooseEnd
            }
        };
        out.push(Component { kind, cluster });
    }
    out.sort_by(|a, b| a.cluster.cmp(&b.cluster));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn part(n: usize) -> Partition1D {
        Partition1D::with_spacing(n, 1.0).unwrap()
    }

    #[test]
    fn single_pair_cluster() {
        let c = Cluster::new(vec![Contour::new(vec![(0, 3)])], vec![]);
        assert!(c.validate(&part(4)).is_ok());
        assert_eq!(c.weight(), 2);
        assert_eq!(c.timepoint_mask(), 0b11011);
    }

    #[test]
    fn loose_chain_rejected() {
        let c = Cluster::new(vec![Contour::new(vec![(1, 2)])], vec![Chain { start: 3, len: 2 }]);
        assert!(c.validate(&part(6)).is_err());
        let ok = Cluster::new(vec![Contour::new(vec![(0, 1)]), Contour::new(vec![(3, 4)])], vec![Chain { start: 2, len: 1 }]);
        assert!(ok.validate(&part(6)).is_ok());
    }

    #[test]
    fn structural_rejections() {
        let p = part(6);
        assert!(Cluster::new(vec![], vec![]).validate(&p).is_err());
        assert!(Cluster::new(vec![Contour::new(vec![(0, 1), (3, 4)])], vec![]).validate(&p).is_err());
        assert!(Cluster::new(vec![Contour::new(vec![(0, 1)]), Contour::new(vec![(1, 2)])], vec![]).validate(&p).is_err());
        // far apart contours need a chain to connect
        assert!(Cluster::new(vec![Contour::new(vec![(0, 1)]), Contour::new(vec![(4, 5)])], vec![]).validate(&p).is_err());
    }

    #[test]
    fn decompose_reassembles() {
        let r = vec![(0, 1), (1, 2), (4, 5)];
        let s = vec![2, 3, 5];
        let comps = decompose(&r, &s, 6).unwrap();
        let mut pairs: Vec<(usize, usize)> = comps.iter().flat_map(|c| c.cluster.contours.iter().flat_map(|k| k.pairs.clone())).collect();
        pairs.sort();
        assert_eq!(pairs, r);
        let mut links: Vec<usize> = comps.iter().flat_map(|c| c.cluster.chains.iter().flat_map(|k| k.start..k.end())).collect();
        links.sort();
        assert_eq!(links, s);
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].kind, ComponentKind::Cluster);
        let loose = decompose(&[(0, 1)], &[2, 3], 6).unwrap();
        assert_eq!(loose.len(), 1);
        assert_eq!(loose[0].kind, ComponentKind::LooseEnd);
    }

    #[test]
    fn three_intervals_every_pair_set_is_one_contour() {
        let all = [(0, 1), (0, 2), (1, 2)];
        for m in 1u32..8 {
            let r: Vec<_> = (0..3).filter(|k| m >> k & 1 == 1).map(|k| all[k]).collect();
            let comps = decompose(&r, &[], 3).unwrap();
            assert_eq!(comps.len(), 1);
            assert_eq!(comps[0].cluster.contours.len(), 1);
        }
    }

    #[test]
    fn lone_chain_is_loose() {
        let comps = decompose(&[], &[1, 2], 4).unwrap();
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].kind, ComponentKind::ChainOnly);
    }

    #[test]
    fn odd_partition_rejected() {
        assert!(Partition1D::new(1.0, 3).is_err());
    }

    #[test]
    fn canonical_json_roundtrip() {
        let c = Cluster::new(vec![Contour::new(vec![(2, 1), (0, 1)])], vec![Chain { start: 2, len: 1 }]);
        let s = c.id();
        assert_eq!(s, r#"{"contours":[{"pairs":[[0,1],[1,2]]}],"chains":[{"start":2,"len":1}]}"#);
        assert_eq!(serde_json::from_str::<Cluster>(&s).unwrap(), c);
    }
}
