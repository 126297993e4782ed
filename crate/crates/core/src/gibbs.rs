//! Importance-weighted path-space Gibbs ensembles.
//!
//! Samples come from an Ornstein-Uhlenbeck reference law and carry log-weights
//! `-λ W` (plus transition-density factors for the product reference), so the
//! mean weight estimates the normalised partition function.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::brownian::{cal_n, sample, Law, OuStart, PathLawSpec};
use crate::currents::{BoundaryCurrent, Side, WField};
use crate::error::{Error, Result};
use crate::potentials::{mehler, w_energy, PairPotential, PotentialExt};
use crate::rng::RngStream;
use crate::rough::{rough_integral, GridPath, HolderMode, LiftScheme, Step2RoughPath};
use crate::stats::{linear_fit, quantile, CompensatedSum, LinearFit};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Reference {
    /// Stationary Ornstein-Uhlenbeck path on `[-T, T]`.
    NuStationary,
    /// Ornstein-Uhlenbeck bridge from `x` at `-T` to `y` at `T`.
    NuBridge { x: Vec<f64>, y: Vec<f64> },
    /// Independent stationary endpoints at the partition points joined by
    /// bridges, reweighted by the transition densities.
    ChiProduct { n: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GibbsSpec {
    pub half_window: f64,
    /// Grid level of the whole window `[-T, T]`.
    pub level: u32,
    pub dim: usize,
    pub ext: PotentialExt,
    pub w: PairPotential,
    pub lambda: f64,
    pub reference: Reference,
}

impl GibbsSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.half_window > 0.0) {
            return Err(Error::spec("half window must be positive"));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::spec("coupling must be finite and non-negative"));
        }
        self.w.validate()?;
        if !matches!(self.ext, PotentialExt::HarmonicRef { .. }) {
            return Err(Error::Unsupported("Gibbs sampling uses the harmonic reference process".into()));
        }
        if self.ext.dim() != self.dim {
            return Err(Error::spec("external potential dimension differs from path dimension"));
        }
        if let Reference::ChiProduct { n } = &self.reference {
            if *n == 0 || !n.is_power_of_two() || *n > (1usize << self.level) {
                return Err(Error::spec("product reference needs a power-of-two number of intervals dividing the grid"));
            }
        }
        Ok(())
    }

    pub fn interval(&self) -> (f64, f64) {
        (-self.half_window, self.half_window)
    }
}

#[derive(Clone, Debug)]
pub struct WeightedPath {
    pub lift: Arc<Step2RoughPath>,
    pub log_weight: f64,
}

impl WeightedPath {
    pub fn path(&self) -> &GridPath {
        self.lift.base()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub n: usize,
    pub z_hat: Estimate,
    pub ess: f64,
    pub max_weight_share: f64,
    pub log_weight_min: f64,
    pub log_weight_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalRow {
    pub time: f64,
    pub component: usize,
    pub mean: Estimate,
    pub second_moment: Estimate,
}

#[derive(Clone, Debug, Default)]
pub struct WeightedEnsemble {
    pub paths: Vec<WeightedPath>,
}

impl WeightedEnsemble {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    fn weights(&self) -> Vec<f64> {
        self.paths.iter().map(|p| p.log_weight.exp()).collect()
    }

    /// Mean weight and its standard error.
    pub fn z_hat(&self) -> Estimate {
        let w = self.weights();
        let n = w.len() as f64;
        let mean = w.iter().copied().collect::<CompensatedSum>().value() / n;
        let var = w.iter().map(|x| (x - mean) * (x - mean)).collect::<CompensatedSum>().value() / (n - 1.0).max(1.0);
        Estimate { value: mean, se: (var / n).sqrt() }
    }

    pub fn ess(&self) -> f64 {
        let w = self.weights();
        let s: f64 = w.iter().copied().collect::<CompensatedSum>().value();
        let s2: f64 = w.iter().map(|x| x * x).collect::<CompensatedSum>().value();
        s * s / s2
    }

    /// Self-normalised weighted mean with a delta-method standard error.
    pub fn expectation(&self, f: impl Fn(&WeightedPath) -> f64 + Sync) -> Estimate {
        let vals: Vec<f64> = self.paths.par_iter().map(&f).collect();
        weighted_mean(&self.weights(), &vals)
    }

    /// Weighted covariance of two functionals with a linearised standard error.
    pub fn covariance(&self, f: impl Fn(&WeightedPath) -> f64 + Sync, g: impl Fn(&WeightedPath) -> f64 + Sync) -> Estimate {
        let fv: Vec<f64> = self.paths.par_iter().map(&f).collect();
        let gv: Vec<f64> = self.paths.par_iter().map(&g).collect();
        weighted_cov(&self.weights(), &fv, &gv)
    }

    pub fn summary(&self) -> EnsembleSummary {
        let w = self.weights();
        let total: f64 = w.iter().copied().collect::<CompensatedSum>().value();
        let lw = self.paths.iter().map(|p| p.log_weight);
        EnsembleSummary {
            n: self.len(),
            z_hat: self.z_hat(),
            ess: self.ess(),
            max_weight_share: w.iter().fold(0.0f64, |m, v| m.max(*v)) / total,
            log_weight_min: lw.clone().fold(f64::INFINITY, f64::min),
            log_weight_max: lw.fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// Weighted first and second moments of each coordinate every `stride`
    /// grid points.
    pub fn marginal_moments(&self, stride: usize) -> Vec<MarginalRow> {
        let Some(first) = self.paths.first() else {
            return Vec::new();
        };
        let p = first.path();
        let mut rows = Vec::new();
        for j in (0..p.n_points()).step_by(stride.max(1)) {
            for c in 0..p.dim() {
                rows.push(MarginalRow {
                    time: p.time(j),
                    component: c,
                    mean: self.expectation(|w| w.path().point(j)[c]),
                    second_moment: self.expectation(|w| w.path().point(j)[c].powi(2)),
                });
            }
        }
        rows
    }

    /// Concatenation; associative.
    pub fn merge(mut self, other: WeightedEnsemble) -> WeightedEnsemble {
        self.paths.extend(other.paths);
        self
    }

    fn check_ess(self) -> Result<Self> {
        let n = self.len();
        let ess = self.ess();
        if !(ess >= 0.01 * n as f64) {
            return Err(Error::EssCollapse { ess, n });
        }
        Ok(self)
    }
}

pub fn weighted_mean(w: &[f64], x: &[f64]) -> Estimate {
    let sw: f64 = w.iter().copied().collect::<CompensatedSum>().value();
    let m = w.iter().zip(x).map(|(a, b)| a * b).collect::<CompensatedSum>().value() / sw;
    let v: f64 = w.iter().zip(x).map(|(a, b)| a * a * (b - m) * (b - m)).sum();
    Estimate { value: m, se: v.sqrt() / sw }
}

pub fn weighted_cov(w: &[f64], f: &[f64], g: &[f64]) -> Estimate {
    let sw: f64 = w.iter().copied().collect::<CompensatedSum>().value();
    let mf = w.iter().zip(f).map(|(a, b)| a * b).collect::<CompensatedSum>().value() / sw;
    let mg = w.iter().zip(g).map(|(a, b)| a * b).collect::<CompensatedSum>().value() / sw;
    let c = (0..w.len()).map(|i| w[i] * (f[i] - mf) * (g[i] - mg)).collect::<CompensatedSum>().value() / sw;
    let v: f64 = (0..w.len()).map(|i| (w[i] * ((f[i] - mf) * (g[i] - mg) - c)).powi(2)).sum();
    Estimate { value: c, se: v.sqrt() / sw }
}

fn draw_reference(spec: &GibbsSpec, stream: RngStream) -> Result<(GridPath, f64)> {
    let d = spec.dim;
    let iv = spec.interval();
    let mut rng = stream.rng();
    match &spec.reference {
        Reference::NuStationary => Ok((sample(&PathLawSpec::new(Law::Ou { start: OuStart::Stationary }, iv, spec.level, d), &mut rng)?, 0.0)),
        Reference::NuBridge { x, y } => Ok((sample(&PathLawSpec::new(Law::OuBridge { x: x.clone(), y: y.clone() }, iv, spec.level, d), &mut rng)?, 0.0)),
        Reference::ChiProduct { n } => {
            let n = *n;
            let b = 2.0 * spec.half_window / n as f64;
            let ends: Vec<Vec<f64>> = (0..=n)
                .map(|_| {
                    let mut e = vec![0.0; d];
                    stationary_point(&mut rng, &mut e);
                    e
                })
                .collect();
            let sub = spec.level - n.trailing_zeros();
            let mut segs = Vec::with_capacity(n);
            let mut log_pi = 0.0;
            for k in 0..n {
                let s = iv.0 + b * k as f64;
                segs.push(sample(&PathLawSpec::new(Law::OuBridge { x: ends[k].clone(), y: ends[k + 1].clone() }, (s, s + b), sub, d), &mut rng)?);
                log_pi += mehler(b, &ends[k + 1], &ends[k]).ln();
            }
            Ok((GridPath::concat(&segs)?, log_pi))
        }
    }
}

fn stationary_point<R: rand::Rng>(rng: &mut R, out: &mut [f64]) {
    for v in out.iter_mut() {
        let z: f64 = rng.sample(rand_distr::StandardNormal);
        *v = z * std::f64::consts::FRAC_1_SQRT_2;
    }
}

/// `n` weighted draws from the finite-window Gibbs measure.
pub fn sample_mu_t(spec: &GibbsSpec, n: usize, stream: RngStream) -> Result<WeightedEnsemble> {
    spec.validate()?;
    let paths = (0..n)
        .into_par_iter()
        .map(|i| {
            let (p, extra) = draw_reference(spec, stream.substream(i as u64))?;
            let lift = Step2RoughPath::lift(p, LiftScheme::Ito);
            let e = if spec.lambda == 0.0 { 0.0 } else { w_energy(&lift, &spec.w, 0, lift.n_steps())? };
            Ok(WeightedPath { lift: Arc::new(lift), log_weight: -spec.lambda * e + extra })
        })
        .collect::<Result<Vec<_>>>()?;
    WeightedEnsemble { paths }.check_ess()
}

/// Outside configuration: boundary currents on both sides of `[-T, T]`.
#[derive(Clone, Debug)]
pub struct BoundaryCondition {
    pub left: BoundaryCurrent,
    pub right: BoundaryCurrent,
}

impl BoundaryCondition {
    pub fn new(left: BoundaryCurrent, right: BoundaryCurrent) -> Result<Self> {
        if left.side() != Side::Minus || right.side() != Side::Plus {
            return Err(Error::SideMismatch);
        }
        if left.windows().is_empty() || right.windows().is_empty() {
            return Err(Error::spec("boundary condition needs windows on both sides"));
        }
        Ok(BoundaryCondition { left, right })
    }

    /// Splits `path` into unit windows outside `[s, t]`.
    pub fn from_path(path: &GridPath, s: f64, t: f64) -> Result<Self> {
        let (a, b) = (path.index_of(s)?, path.index_of(t)?);
        let per = path.index_of(path.interval().0 + 1.0)?;
        if per == 0 || a % per != 0 || (path.n_steps() - b) % per != 0 {
            return Err(Error::spec("boundary windows must tile the outside by unit intervals"));
        }
        let cut = |lo: usize, hi: usize| -> Result<Vec<Arc<Step2RoughPath>>> {
            (lo..hi).step_by(per).map(|j| Ok(Arc::new(Step2RoughPath::lift(path.window(j, j + per)?, LiftScheme::Ito)))).collect()
        };
        BoundaryCondition::new(BoundaryCurrent::new(Side::Minus, cut(0, a)?)?, BoundaryCurrent::new(Side::Plus, cut(b, path.n_steps())?)?)
    }

    pub fn left_end(&self) -> &[f64] {
        self.left.windows().last().unwrap().base().last()
    }

    pub fn right_start(&self) -> &[f64] {
        self.right.windows().first().unwrap().base().first()
    }

    /// Adds windows adjacent to the current ones (inner windows of a nested interval).
    pub fn extended(&self, left_inner: Vec<Arc<Step2RoughPath>>, right_inner: Vec<Arc<Step2RoughPath>>) -> Result<Self> {
        let mut l: Vec<_> = self.left.windows().to_vec();
        l.extend(left_inner);
        let mut r: Vec<_> = self.right.windows().to_vec();
        r.extend(right_inner);
        BoundaryCondition::new(BoundaryCurrent::new(Side::Minus, l)?, BoundaryCurrent::new(Side::Plus, r)?)
    }

    /// `Σ_k (1 + |k|)^{-α} N_k³` over all windows.
    pub fn size(&self, alpha: f64, gamma: f64) -> Result<f64> {
        let ws: Vec<(i64, &Step2RoughPath)> =
            self.left.windows().iter().chain(self.right.windows()).map(|w| (BoundaryCurrent::index(w), &**w)).collect();
        Ok(cal_n(&ws, alpha, 3.0, gamma, HolderMode::DyadicPairs)?.value)
    }

    pub fn check_cap(&self, cap: f64, alpha: f64, gamma: f64) -> Result<()> {
        let s = self.size(alpha, gamma)?;
        if s > cap {
            return Err(Error::spec(format!("boundary size {s} exceeds cap {cap}")));
        }
        Ok(())
    }
}

/// Draws from the conditional measure on `[-T, T]` given the outside.
pub fn specification_kernel(spec: &GibbsSpec, bc: &BoundaryCondition, n: usize, stream: RngStream) -> Result<WeightedEnsemble> {
    let (s, t) = spec.interval();
    bc.left.check_sides(s, t)?;
    bc.right.check_sides(s, t)?;
    let tol = 1e-9 * (1.0 + t.abs());
    let left_end = bc.left.windows().last().unwrap().base().interval().1;
    let right_start = bc.right.windows().first().unwrap().base().interval().0;
    if (left_end - s).abs() > tol || (right_start - t).abs() > tol {
        return Err(Error::SideMismatch);
    }
    let inner = GibbsSpec { reference: Reference::NuBridge { x: bc.left_end().to_vec(), y: bc.right_start().to_vec() }, ..spec.clone() };
    inner.validate()?;
    let field = WField::from_boundaries(&[&bc.left, &bc.right], spec.w.clone());
    let paths = (0..n)
        .into_par_iter()
        .map(|i| {
            let (p, _) = draw_reference(&inner, stream.substream(i as u64))?;
            let lift = Step2RoughPath::lift(p, LiftScheme::Ito);
            let m = lift.n_steps();
            let e = if spec.lambda == 0.0 { 0.0 } else { w_energy(&lift, &spec.w, 0, m)? + rough_integral(&lift, &field, 0, m)? };
            Ok(WeightedPath { lift: Arc::new(lift), log_weight: -spec.lambda * e })
        })
        .collect::<Result<Vec<_>>>()?;
    WeightedEnsemble { paths }.check_ess()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DlrReport {
    pub direct: Estimate,
    pub composed: Estimate,
}

impl DlrReport {
    pub fn z_score(&self) -> f64 {
        (self.composed.value - self.direct.value) / (self.direct.se.powi(2) + self.composed.se.powi(2)).sqrt()
    }
}

/// Compares `∫ F dρ_J(·|Z)` with `∫∫ F dρ_I(·|Y) dρ_J(dY|Z)` for nested
/// centred windows `I ⊂ J`; `spec` describes `J`.
pub fn dlr_consistency_check(
    spec: &GibbsSpec,
    inner_half_window: f64,
    outside: &BoundaryCondition,
    f: impl Fn(&GridPath) -> f64 + Sync,
    n_outer: usize,
    n_inner: usize,
    stream: RngStream,
) -> Result<DlrReport> {
    let (tj, ti) = (spec.half_window, inner_half_window);
    let ratio = tj / ti;
    if !(ti > 0.0 && ti < tj) || ratio.fract() != 0.0 || !(ratio as usize).is_power_of_two() {
        return Err(Error::spec("inner window must be a power-of-two fraction of the outer window"));
    }
    let inner_level = spec.level.checked_sub(ratio.log2() as u32).ok_or_else(|| Error::spec("inner grid too coarse"))?;
    let inner_spec = GibbsSpec { half_window: ti, level: inner_level, ..spec.clone() };

    let direct_ens = specification_kernel(spec, outside, n_outer, stream.substream(0))?;
    let direct = direct_ens.expectation(|p| f(p.path()));

    let outer = specification_kernel(spec, outside, n_outer, stream.substream(1))?;
    let per: Vec<(f64, Estimate)> = outer
        .paths
        .par_iter()
        .enumerate()
        .map(|(m, yp)| {
            let y = yp.path();
            let (a, b) = (y.index_of(-ti)?, y.index_of(ti)?);
            let unit = y.index_of(y.interval().0 + 1.0)?;
            let cut = |lo: usize, hi: usize| -> Result<Vec<Arc<Step2RoughPath>>> {
                (lo..hi).step_by(unit).map(|j| Ok(Arc::new(Step2RoughPath::lift(y.window(j, j + unit)?, LiftScheme::Ito)))).collect()
            };
            let bc = outside.extended(cut(0, a)?, cut(b, y.n_steps())?)?;
            let inner = specification_kernel(&inner_spec, &bc, n_inner, stream.substream(2).substream(m as u64))?;
            Ok((yp.log_weight.exp(), inner.expectation(|p| f(p.path()))))
        })
        .collect::<Result<_>>()?;
    let w: Vec<f64> = per.iter().map(|p| p.0).collect();
    let v: Vec<f64> = per.iter().map(|p| p.1.value).collect();
    let composed = crate::gibbs::weighted_mean(&w, &v);
    Ok(DlrReport { direct, composed })
}

/// `max |X_t|` over consecutive windows of `window` grid steps.
pub fn window_maxima(path: &GridPath, window: usize) -> Vec<f64> {
    (0..path.n_steps() / window)
        .map(|k| {
            (k * window..=(k + 1) * window).map(|j| path.point(j).iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max)
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct GrowthReport {
    /// `(n, q-quantile of the window max on [n, n+1], q-quantile of the running max on [0, n+1])`.
    pub rows: Vec<(usize, f64, f64)>,
    /// Running-max quantile against `(log(n + 2))^{1/(s+1)}`.
    pub fit: LinearFit,
}

/// Quantiles of window and running maxima across samples (`maxima[sample][window]`).
pub fn growth_diagnostic(maxima: &[Vec<f64>], q: f64, s: f64) -> GrowthReport {
    let nw = maxima.iter().map(|m| m.len()).min().unwrap_or(0);
    let mut running: Vec<f64> = vec![0.0; maxima.len()];
    let mut rows = Vec::with_capacity(nw);
    for n in 0..nw {
        let col: Vec<f64> = maxima.iter().map(|m| m[n]).collect();
        for (r, c) in running.iter_mut().zip(&col) {
            *r = r.max(*c);
        }
        rows.push((n, quantile(&col, q), quantile(&running, q)));
    }
    let x: Vec<f64> = rows.iter().map(|r| ((r.0 as f64 + 2.0).ln()).powf(1.0 / (s + 1.0))).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.2).collect();
    GrowthReport { fit: linear_fit(&x, &y), rows }
}

#[derive(Clone, Debug)]
pub struct TailReport {
    pub levels: Vec<f64>,
    pub probabilities: Vec<f64>,
    /// `log P(max > a)` against `a^exponent`.
    pub fit: LinearFit,
}

pub fn tail_profile(maxima: &[f64], levels: &[f64], exponent: f64) -> Result<TailReport> {
    let n = maxima.len() as f64;
    let probabilities: Vec<f64> = levels.iter().map(|a| maxima.iter().filter(|m| **m > *a).count() as f64 / n).collect();
    if probabilities.iter().any(|p| *p == 0.0) {
        return Err(Error::spec("a tail level has no exceedances; increase the sample"));
    }
    let x: Vec<f64> = levels.iter().map(|a| a.powf(exponent)).collect();
    let y: Vec<f64> = probabilities.iter().map(|p| p.ln()).collect();
    Ok(TailReport { levels: levels.to_vec(), fit: linear_fit(&x, &y), probabilities })
}

#[derive(Clone, Debug)]
pub struct MixingReport {
    pub rows: Vec<(f64, Estimate)>,
    /// `log |cov|` against separation.
    pub exponential: LinearFit,
    /// `log |cov|` against `log` separation.
    pub power: LinearFit,
    pub nonincreasing: bool,
}

/// Covariances of `F` anchored at `anchor` and `G` anchored at `anchor + r`.
pub fn mixing_diagnostic(
    ens: &WeightedEnsemble,
    f: impl Fn(&GridPath, f64) -> f64 + Sync,
    g: impl Fn(&GridPath, f64) -> f64 + Sync,
    anchor: f64,
    separations: &[f64],
) -> MixingReport {
    let rows: Vec<(f64, Estimate)> =
        separations.iter().map(|&r| (r, ens.covariance(|p| f(p.path(), anchor), |p| g(p.path(), anchor + r)))).collect();
    let x: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.1.value.abs().max(f64::MIN_POSITIVE).ln()).collect();
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let nonincreasing = rows.windows(2).all(|w| w[1].1.value.abs() <= w[0].1.value.abs());
    MixingReport { exponential: linear_fit(&x, &y), power: linear_fit(&lx, &y), nonincreasing, rows }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(lambda: f64, reference: Reference) -> GibbsSpec {
        GibbsSpec {
            half_window: 1.0,
            level: 5,
            dim: 1,
            ext: PotentialExt::HarmonicRef { dim: 1 },
            w: PairPotential::default(),
            lambda,
            reference,
        }
    }

    fn at(p: &GridPath, t: f64) -> f64 {
        p.point(p.index_of(t).unwrap())[0]
    }

    #[test]
    fn zero_coupling_is_reference() {
        let ens = sample_mu_t(&spec(0.0, Reference::NuStationary), 500, RngStream::new(3)).unwrap();
        let z = ens.z_hat();
        assert_eq!(z.value, 1.0);
        assert_eq!(ens.ess(), 500.0);
        let e = ens.expectation(|p| at(p.path(), 0.0).powi(2));
        let plain: f64 = ens.paths.iter().map(|p| at(p.path(), 0.0).powi(2)).collect::<CompensatedSum>().value() / 500.0;
        assert!((e.value - plain).abs() < 1e-12);
    }

    #[test]
    fn summary_and_marginals_of_free_ensemble() {
        let ens = sample_mu_t(&spec(0.0, Reference::NuStationary), 400, RngStream::new(8)).unwrap();
        let s = ens.summary();
        assert_eq!(s.n, 400);
        assert_eq!(s.z_hat.value, 1.0);
        assert_eq!((s.log_weight_min, s.log_weight_max), (0.0, 0.0));
        assert!((s.max_weight_share - 1.0 / 400.0).abs() < 1e-15);
        let rows = ens.marginal_moments(8);
        assert_eq!(rows.len(), 5);
        assert_eq!(rows[2].time, 0.0);
        for r in &rows {
            assert!((r.second_moment.value - 0.5).abs() < 5.0 * r.second_moment.se + 0.05, "{r:?}");
        }
    }

    #[test]
    fn positive_coupling_shrinks_z() {
        let ens = sample_mu_t(&spec(0.1, Reference::NuStationary), 400, RngStream::new(4)).unwrap();
        assert!(ens.z_hat().value <= 1.0);
        assert!(ens.paths.iter().all(|p| p.log_weight <= 0.0));
    }

    #[test]
    fn ess_collapse_is_an_error() {
        let r = sample_mu_t(&GibbsSpec { w: PairPotential::GaussExp { amplitude: 50.0, sigma: 1.0, ell: 0.5 }, ..spec(50.0, Reference::NuStationary) }, 300, RngStream::new(5));
        assert!(matches!(r, Err(Error::EssCollapse { .. })));
    }

    #[test]
    fn product_reference_reweights_to_stationary() {
        let ens = sample_mu_t(&spec(0.0, Reference::ChiProduct { n: 2 }), 20000, RngStream::new(6)).unwrap();
        let z = ens.z_hat();
        assert!((z.value - 1.0).abs() < 4.0 * z.se);
        let c = ens.expectation(|p| at(p.path(), -1.0) * at(p.path(), 1.0));
        let exact = 0.5 * (-2.0f64).exp();
        assert!((c.value - exact).abs() < 4.0 * c.se, "{} vs {exact} ({})", c.value, c.se);
    }

    #[test]
    fn merge_is_associative() {
        let s = spec(0.05, Reference::NuStationary);
        let (a, b, c) = (sample_mu_t(&s, 5, RngStream::new(1)).unwrap(), sample_mu_t(&s, 6, RngStream::new(2)).unwrap(), sample_mu_t(&s, 7, RngStream::new(3)).unwrap());
        let l = a.clone().merge(b.clone()).merge(c.clone());
        let r = a.merge(b.merge(c));
        assert_eq!(l.len(), 18);
        assert_eq!(l.z_hat(), r.z_hat());
    }

    #[test]
    fn time_reversal_symmetry() {
        let ens = sample_mu_t(&GibbsSpec { half_window: 2.0, level: 6, ..spec(0.05, Reference::NuStationary) }, 4000, RngStream::new(8)).unwrap();
        let d = ens.expectation(|p| at(p.path(), -1.0).powi(2) - at(p.path(), 1.0).powi(2));
        assert!(d.value.abs() < 2.5 * d.se);
    }

    fn boundary(seed: u64) -> (GibbsSpec, BoundaryCondition) {
        let path = sample(&PathLawSpec::new(Law::Ou { start: OuStart::Stationary }, (-4.0, 4.0), 6, 1), &mut RngStream::new(seed).rng()).unwrap();
        (GibbsSpec { half_window: 2.0, level: 5, ..spec(0.05, Reference::NuStationary) }, BoundaryCondition::from_path(&path, -2.0, 2.0).unwrap())
    }

    #[test]
    fn kernel_pins_endpoints_and_checks_sides() {
        let (s, bc) = boundary(11);
        let ens = specification_kernel(&s, &bc, 50, RngStream::new(1)).unwrap();
        for p in &ens.paths {
            assert_eq!(p.path().first(), bc.left_end());
            assert_eq!(p.path().last(), bc.right_start());
        }
        let wrong = GibbsSpec { half_window: 1.0, level: 4, ..s };
        assert!(matches!(specification_kernel(&wrong, &bc, 5, RngStream::new(1)), Err(Error::SideMismatch)));
        assert!(bc.size(2.0, 0.4).unwrap() > 0.0);
        assert!(bc.check_cap(1e-9, 2.0, 0.4).is_err());
    }

    #[test]
    fn boundary_influence_decays_with_distance() {
        // perturb the outside far away and close by, compare the shift in E[X_0²]
        let (s, _) = boundary(12);
        let path = sample(&PathLawSpec::new(Law::Ou { start: OuStart::Stationary }, (-8.0, 8.0), 7, 1), &mut RngStream::new(12).rng()).unwrap();
        let base = BoundaryCondition::from_path(&path, -2.0, 2.0).unwrap();
        let bump = |lo: f64, hi: f64| {
            let mut v = path.values().to_vec();
            for j in 0..path.n_points() {
                let t = path.time(j);
                if t >= lo && t <= hi {
                    v[j] += 2.0 * ((t - lo) * std::f64::consts::PI / (hi - lo)).sin();
                }
            }
            BoundaryCondition::from_path(&GridPath::new(path.interval(), path.level(), 1, v).unwrap(), -2.0, 2.0).unwrap()
        };
        let s = GibbsSpec { lambda: 0.3, ..s };
        let f = |p: &WeightedPath| at(p.path(), 0.0).powi(2);
        let e0 = specification_kernel(&s, &base, 2000, RngStream::new(2)).unwrap().expectation(f).value;
        let near = specification_kernel(&s, &bump(2.0, 3.0), 2000, RngStream::new(2)).unwrap().expectation(f).value;
        let far = specification_kernel(&s, &bump(6.0, 7.0), 2000, RngStream::new(2)).unwrap().expectation(f).value;
        assert!((far - e0).abs() < (near - e0).abs());
    }

    #[test]
    fn diagnostics_on_known_inputs() {
        let maxima: Vec<Vec<f64>> = (0..200).map(|i| (0..20).map(|n| ((i * 31 + n * 17) % 97) as f64 / 97.0 + (n as f64 + 2.0).ln().sqrt()).collect()).collect();
        let g = growth_diagnostic(&maxima, 0.9, 2.0);
        assert_eq!(g.rows.len(), 20);
        assert!(g.rows.windows(2).all(|w| w[1].2 >= w[0].2));
        assert!(g.fit.slope > 0.0);

        let xs: Vec<f64> = (1..=10000).map(|i| -((i as f64) / 10001.0).ln()).collect();
        let t = tail_profile(&xs, &[1.0, 2.0, 3.0], 1.0).unwrap();
        assert!((t.fit.slope + 1.0).abs() < 0.05);
        assert!(tail_profile(&xs, &[100.0], 1.0).is_err());
    }

    #[test]
    fn ou_covariance_decays_at_unit_rate() {
        let s = GibbsSpec { half_window: 4.0, level: 6, ..spec(0.0, Reference::NuStationary) };
        let ens = sample_mu_t(&s, 20000, RngStream::new(9)).unwrap();
        let m = mixing_diagnostic(&ens, at, at, -2.0, &[0.5, 1.0, 1.5, 2.0]);
        assert!((m.exponential.slope + 1.0).abs() < 0.2, "{:?}", m.exponential);
        assert!(m.nonincreasing);
    }

    #[test]
    fn dlr_zero_coupling() {
        let (s, bc) = boundary(13);
        let s = GibbsSpec { lambda: 0.0, ..s };
        let r = dlr_consistency_check(&s, 1.0, &bc, |p| at(p, 0.0).powi(2), 2000, 4, RngStream::new(3)).unwrap();
        assert!(r.z_score().abs() < 3.0, "{r:?}");
    }
}
