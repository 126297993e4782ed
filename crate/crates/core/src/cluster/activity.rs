use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::brownian::{sample, Law, PathLawSpec};
use crate::error::{Error, Result};
use crate::potentials::{allocate_pair, cross_energy, self_energy, PairPotential, PotentialExt};
use crate::rng::RngStream;
use crate::rough::GridPath;
use crate::stats::Moments;

use super::polymer::{Cluster, Partition1D};

const CHUNK: usize = 256;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActivityModel {
    pub partition: Partition1D,
    /// Grid level of each interval.
    pub level: u32,
    pub ext: PotentialExt,
    pub w: PairPotential,
    pub lambda: f64,
}

impl ActivityModel {
    pub fn validate(&self) -> Result<()> {
        if !matches!(self.ext, PotentialExt::HarmonicRef { .. }) {
            return Err(Error::Unsupported("activities need the harmonic reference kernel".into()));
        }
        if !self.lambda.is_finite() {
            return Err(Error::spec("coupling must be finite"));
        }
        if self.level > 16 {
            return Err(Error::SizeLimit("interval level above 16".into()));
        }
        self.w.validate()
    }

    pub fn dim(&self) -> usize {
        self.ext.dim()
    }
}

/// One configuration under the auxiliary product measure: iid stationary
/// endpoints and independent bridges on the requested intervals.
#[derive(Clone, Debug)]
pub struct ChiSample {
    pub endpoints: Vec<Vec<f64>>,
    pub segments: Vec<Option<GridPath>>,
}

pub fn sample_chi<R: Rng>(model: &ActivityModel, intervals: u64, rng: &mut R) -> Result<ChiSample> {
    let p = &model.partition;
    let d = model.dim();
    let endpoints: Vec<Vec<f64>> = (0..=p.n)
        .map(|_| {
            (0..d)
                .map(|_| {
                    let z: f64 = rng.sample(rand_distr::StandardNormal);
                    z * std::f64::consts::FRAC_1_SQRT_2
                })
                .collect()
        })
        .collect();
    let mut segments = Vec::with_capacity(p.n);
    for k in 0..p.n {
        if intervals >> k & 1 == 1 {
            let law = Law::OuBridge { x: endpoints[k].clone(), y: endpoints[k + 1].clone() };
            segments.push(Some(sample(&PathLawSpec::new(law, (p.time(k), p.time(k + 1)), model.level, d), rng)?));
        } else {
            segments.push(None);
        }
    }
    Ok(ChiSample { endpoints, segments })
}

fn segment(sample: &ChiSample, k: usize) -> Result<&GridPath> {
    sample.segments.get(k).and_then(|s| s.as_ref()).ok_or_else(|| Error::spec(format!("sample lacks the segment on interval {k}")))
}

fn pair_energy(model: &ActivityModel, sample: &ChiSample, i: usize, j: usize) -> Result<f64> {
    let (x, y) = (segment(sample, i)?, segment(sample, j)?);
    let jij = 0.5 * cross_energy(x, (0, x.n_steps()), y, (0, y.n_steps()), &model.w);
    let (jii, jjj) = if i.abs_diff(j) == 1 { (self_energy(x, 0, x.n_steps(), &model.w), self_energy(y, 0, y.n_steps(), &model.w)) } else { (0.0, 0.0) };
    Ok(allocate_pair(i, j, model.partition.n, jij, jii, jjj))
}

fn link_factor(model: &ActivityModel, sample: &ChiSample, k: usize) -> Result<f64> {
    let b = model.partition.b();
    Ok(model.ext.mehler_pi(b, &sample.endpoints[k + 1], &sample.endpoints[k])? - 1.0)
}

/// `κ_Γ`: product of `e^{-λ W_ij} - 1` over contour pairs and `π_b - 1` over chain links.
pub fn kappa_eval(cluster: &Cluster, sample: &ChiSample, model: &ActivityModel) -> Result<f64> {
    if sample.endpoints.len() != model.partition.n + 1 {
        return Err(Error::spec("sample does not match the partition"));
    }
    let mut k = 1.0;
    for c in &cluster.contours {
        for &(i, j) in &c.pairs {
            k *= (-model.lambda * pair_energy(model, sample, i, j)?).exp_m1();
        }
    }
    for ch in &cluster.chains {
        for l in ch.start..ch.end() {
            k *= link_factor(model, sample, l)?;
        }
    }
    Ok(k)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActivityEstimate {
    pub cluster: Cluster,
    pub value: f64,
    pub se: f64,
    pub n_samples: u64,
}

impl ActivityEstimate {
    pub fn id(&self) -> String {
        self.cluster.id()
    }
}

/// Monte Carlo `K_Γ = E_χ[κ_Γ]`; chunks of samples use fixed substreams.
pub fn estimate_activity(cluster: &Cluster, model: &ActivityModel, n: usize, stream: RngStream) -> Result<ActivityEstimate> {
    model.validate()?;
    cluster.validate(&model.partition)?;
    estimate_unchecked(cluster, model, n, stream)
}

/// As [`estimate_activity`] without the cluster validator, for objects such as
/// chains with free ends.
pub fn estimate_unchecked(cluster: &Cluster, model: &ActivityModel, n: usize, stream: RngStream) -> Result<ActivityEstimate> {
    let mask = cluster.interval_mask();
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream.substream(c as u64).rng();
            let mut m = Moments::default();
            for _ in 0..CHUNK.min(n - c * CHUNK) {
                let s = sample_chi(model, mask, &mut rng)?;
                m.push(kappa_eval(cluster, &s, model)?);
            }
            Ok(m)
        })
        .collect::<Result<_>>()?;
    let m = parts.iter().fold(Moments::default(), |a, b| a.merge(b));
    Ok(ActivityEstimate { cluster: cluster.clone(), value: m.mean, se: m.se(), n_samples: m.n })
}

/// Activities of many clusters estimated on common samples, with the
/// covariance matrix of the estimates (row-major).
#[derive(Clone, Debug)]
pub struct ActivityBatch {
    pub estimates: Vec<ActivityEstimate>,
    pub covariance: Vec<f64>,
}

struct Accum {
    n: u64,
    sum: Vec<f64>,
    cross: Vec<f64>,
}

impl Accum {
    fn new(m: usize) -> Self {
        Accum { n: 0, sum: vec![0.0; m], cross: vec![0.0; m * m] }
    }

    fn merge(mut self, o: Accum) -> Accum {
        self.n += o.n;
        self.sum.iter_mut().zip(&o.sum).for_each(|(a, b)| *a += b);
        self.cross.iter_mut().zip(&o.cross).for_each(|(a, b)| *a += b);
        self
    }
}

pub fn estimate_activities_shared(clusters: &[Cluster], model: &ActivityModel, n: usize, stream: RngStream) -> Result<ActivityBatch> {
    model.validate()?;
    let p = &model.partition;
    for c in clusters {
        c.validate(p)?;
    }
    let m = clusters.len();
    if m > 4096 {
        return Err(Error::SizeLimit("shared estimation handles at most 4096 clusters".into()));
    }
    let mask = clusters.iter().fold(0u64, |a, c| a | c.interval_mask());
    let mut pairs = vec![false; p.n * p.n];
    let mut links = vec![false; p.n];
    for c in clusters {
        for k in &c.contours {
            for &(i, j) in &k.pairs {
                pairs[i * p.n + j] = true;
            }
        }
        for ch in &c.chains {
            for l in ch.start..ch.end() {
                links[l] = true;
            }
        }
    }
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<Accum> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream.substream(c as u64).rng();
            let mut acc = Accum::new(m);
            let mut f = vec![0.0; p.n * p.n];
            let mut g = vec![0.0; p.n];
            let mut kap = vec![0.0; m];
            for _ in 0..CHUNK.min(n - c * CHUNK) {
                let s = sample_chi(model, mask, &mut rng)?;
                for i in 0..p.n {
                    for j in i + 1..p.n {
                        if pairs[i * p.n + j] {
                            f[i * p.n + j] = (-model.lambda * pair_energy(model, &s, i, j)?).exp_m1();
                        }
                    }
                    if links[i] {
                        g[i] = link_factor(model, &s, i)?;
                    }
                }
                for (a, cl) in clusters.iter().enumerate() {
                    let mut k = 1.0;
                    for ct in &cl.contours {
                        for &(i, j) in &ct.pairs {
                            k *= f[i * p.n + j];
                        }
                    }
                    for ch in &cl.chains {
                        for l in ch.start..ch.end() {
                            k *= g[l];
                        }
                    }
                    kap[a] = k;
                }
                acc.n += 1;
                for a in 0..m {
                    acc.sum[a] += kap[a];
                    if kap[a] != 0.0 {
                        for b in a..m {
                            acc.cross[a * m + b] += kap[a] * kap[b];
                        }
                    }
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let acc = parts.into_iter().fold(Accum::new(m), Accum::merge);
    let nf = acc.n as f64;
    let mean: Vec<f64> = acc.sum.iter().map(|s| s / nf).collect();
    let mut cov = vec![0.0; m * m];
    for a in 0..m {
        for b in a..m {
            let c = (acc.cross[a * m + b] - nf * mean[a] * mean[b]) / (nf - 1.0) / nf;
            cov[a * m + b] = c;
            cov[b * m + a] = c;
        }
    }
    let estimates = clusters
        .iter()
        .enumerate()
        .map(|(a, c)| ActivityEstimate { cluster: c.clone(), value: mean[a], se: cov[a * m + a].max(0.0).sqrt(), n_samples: acc.n })
        .collect();
    Ok(ActivityBatch { estimates, covariance: cov })
}

/// Activity table as CSV: cluster id, weight, estimate, standard error, samples.
pub fn write_activity_csv<W: std::io::Write>(out: W, estimates: &[ActivityEstimate]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["cluster", "weight", "k_hat", "se", "n"])?;
    for e in estimates {
        w.write_record([e.id(), e.cluster.weight().to_string(), crate::io::fmt_f64(e.value), crate::io::fmt_f64(e.se), e.n_samples.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
