//! Exact grid samplers for Brownian motion, bridges and Ornstein-Uhlenbeck paths,
//! plus the rough-path size functionals used by the boundary estimates.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::rough::{holder_norm_area, holder_norm_path, GridPath, HolderMode, Step2RoughPath};
use crate::stats::zeta_tail;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum OuStart {
    Stationary,
    Fixed(Vec<f64>),
}

/// Path laws. The Ornstein-Uhlenbeck process solves `dX = -X dt + dB`, whose
/// stationary law is `N(0, ½ I)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum Law {
    Bm { start: Vec<f64> },
    Bridge { x: Vec<f64>, y: Vec<f64> },
    Ou { start: OuStart },
    OuBridge { x: Vec<f64>, y: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathLawSpec {
    pub law: Law,
    pub interval: (f64, f64),
    pub level: u32,
    pub dim: usize,
}

impl PathLawSpec {
    pub fn new(law: Law, interval: (f64, f64), level: u32, dim: usize) -> Self {
        PathLawSpec { law, interval, level, dim }
    }

    pub fn validate(&self) -> Result<()> {
        let (s, t) = self.interval;
        if !(s.is_finite() && t.is_finite() && s < t) {
            return Err(Error::spec(format!("empty interval [{s}, {t}]")));
        }
        if self.dim == 0 {
            return Err(Error::spec("dimension must be positive"));
        }
        if self.level > 24 {
            return Err(Error::SizeLimit(format!("level {} exceeds 24", self.level)));
        }
        let check = |v: &[f64]| {
            if v.len() != self.dim || v.iter().any(|c| !c.is_finite()) {
                Err(Error::spec("endpoint dimension mismatch or non-finite endpoint"))
            } else {
                Ok(())
            }
        };
        match &self.law {
            Law::Bm { start } => check(start),
            Law::Bridge { x, y } | Law::OuBridge { x, y } => check(x).and(check(y)),
            Law::Ou { start: OuStart::Fixed(x) } => check(x),
            Law::Ou { start: OuStart::Stationary } => Ok(()),
        }
    }
}

fn normals<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64], scale: f64) {
    for v in out.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *v = scale * z;
    }
}

fn ou_path<R: Rng + ?Sized>(rng: &mut R, x0: &[f64], n: usize, dt: f64, out: &mut [f64]) {
    let d = x0.len();
    let a = (-dt).exp();
    let sd = (-0.5 * (-2.0 * dt).exp_m1()).sqrt();
    out[..d].copy_from_slice(x0);
    let mut z = vec![0.0; d];
    for j in 0..n {
        normals(rng, &mut z, sd);
        for i in 0..d {
            out[(j + 1) * d + i] = a * out[j * d + i] + z[i];
        }
    }
}

/// Draws one path of the given law.
pub fn sample<R: Rng + ?Sized>(spec: &PathLawSpec, rng: &mut R) -> Result<GridPath> {
    spec.validate()?;
    let d = spec.dim;
    let n = 1usize << spec.level;
    let (s, t) = spec.interval;
    let dt = (t - s) / n as f64;
    let mut v = vec![0.0; (n + 1) * d];
    let mut z = vec![0.0; d];
    match &spec.law {
        Law::Bm { start } => {
            v[..d].copy_from_slice(start);
            for j in 0..n {
                normals(rng, &mut z, dt.sqrt());
                for i in 0..d {
                    v[(j + 1) * d + i] = v[j * d + i] + z[i];
                }
            }
        }
        Law::Bridge { x, y } => {
            let mut b = vec![0.0; (n + 1) * d];
            for j in 0..n {
                normals(rng, &mut z, dt.sqrt());
                for i in 0..d {
                    b[(j + 1) * d + i] = b[j * d + i] + z[i];
                }
            }
            for j in 0..=n {
                let r = j as f64 / n as f64;
                for i in 0..d {
                    v[j * d + i] = x[i] + b[j * d + i] - r * (b[n * d + i] - (y[i] - x[i]));
                }
            }
            v[n * d..].copy_from_slice(y);
        }
        Law::Ou { start } => {
            let x0: Vec<f64> = match start {
                OuStart::Fixed(x) => x.clone(),
                OuStart::Stationary => {
                    let mut x = vec![0.0; d];
                    normals(rng, &mut x, std::f64::consts::FRAC_1_SQRT_2);
                    x
                }
            };
            ou_path(rng, &x0, n, dt, &mut v);
        }
        Law::OuBridge { x, y } => {
            ou_path(rng, x, n, dt, &mut v);
            let total = t - s;
            let end: Vec<f64> = v[n * d..].to_vec();
            for j in 0..=n {
                let r = (j as f64 * dt).sinh() / total.sinh();
                for i in 0..d {
                    v[j * d + i] += r * (y[i] - end[i]);
                }
            }
            v[..d].copy_from_slice(x);
            v[n * d..].copy_from_slice(y);
        }
    }
    GridPath::new(spec.interval, spec.level, d, v)
}

/// `n` paths, path `i` drawn from substream `i` of `stream`.
pub fn sample_many(spec: &PathLawSpec, n: usize, stream: RngStream) -> Result<Vec<GridPath>> {
    spec.validate()?;
    (0..n).into_par_iter().map(|i| sample(spec, &mut stream.substream(i as u64).rng())).collect()
}

/// `‖X‖_{γ,[a,b]} + ‖𝕏‖_{2γ,[a,b]}`.
pub fn n_functional(rp: &Step2RoughPath, a: usize, b: usize, gamma: f64, mode: HolderMode) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 0.5) {
        return Err(Error::spec(format!("Hölder exponent {gamma} must lie in (0, 1/2)")));
    }
    Ok(holder_norm_path(rp.base(), a, b, gamma, mode)?.value + holder_norm_area(rp, a, b, 2.0 * gamma, mode)?.value)
}

/// Weighted window sum and the weight of the windows left out.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CalN {
    pub value: f64,
    /// `Σ_{|k| > K} (1 + |k|)^{-α}` with `K` the largest supplied window index.
    pub tail_weight: f64,
    pub max_window: u64,
}

/// `Σ_k (1 + |k|)^{-α} N_k^p` over unit windows indexed by `k`.
pub fn cal_n(windows: &[(i64, &Step2RoughPath)], alpha: f64, p: f64, gamma: f64, mode: HolderMode) -> Result<CalN> {
    if !(alpha > 1.0) {
        return Err(Error::spec("window weight exponent must exceed 1"));
    }
    let mut value = 0.0;
    let mut kmax = 0u64;
    for (k, rp) in windows {
        let nk = n_functional(rp, 0, rp.n_steps(), gamma, mode)?;
        value += (1.0 + k.unsigned_abs() as f64).powf(-alpha) * nk.powf(p);
        kmax = kmax.max(k.unsigned_abs());
    }
    Ok(CalN { value, tail_weight: 2.0 * zeta_tail(alpha, kmax + 2), max_window: kmax })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rough::LiftScheme;
    use crate::stats::Moments;

    fn stream() -> RngStream {
        RngStream::new(2024)
    }

    #[test]
    fn bm_increment_variance() {
        let spec = PathLawSpec::new(Law::Bm { start: vec![0.0] }, (0.0, 1.0), 4, 1);
        let paths = sample_many(&spec, 4000, stream()).unwrap();
        let m: Moments = paths.iter().map(|p| p.last()[0]).collect();
        assert!(m.mean.abs() < 4.0 * m.se());
        assert!((m.variance() - 1.0).abs() < 0.1);
        let q: Moments = paths.iter().map(|p| p.point(4)[0] * p.point(12)[0]).collect();
        assert!((q.mean - 0.25).abs() < 4.0 * q.se());
    }

    #[test]
    fn bridge_endpoints_exact() {
        let spec = PathLawSpec::new(Law::Bridge { x: vec![0.3, -0.1], y: vec![0.3, -0.1] }, (0.0, 2.0), 6, 2);
        let p = sample(&spec, &mut stream().rng()).unwrap();
        assert_eq!(p.first(), &[0.3, -0.1]);
        assert_eq!(p.last(), &[0.3, -0.1]);
        let ob = PathLawSpec::new(Law::OuBridge { x: vec![1.0], y: vec![-2.0] }, (-1.0, 1.0), 5, 1);
        let q = sample(&ob, &mut stream().rng()).unwrap();
        assert_eq!(q.first(), &[1.0]);
        assert_eq!(q.last(), &[-2.0]);
    }

    #[test]
    fn bridge_midpoint_law() {
        let spec = PathLawSpec::new(Law::Bridge { x: vec![0.0], y: vec![1.0] }, (0.0, 1.0), 3, 1);
        let paths = sample_many(&spec, 6000, stream()).unwrap();
        let m: Moments = paths.iter().map(|p| p.point(4)[0]).collect();
        assert!((m.mean - 0.5).abs() < 4.0 * m.se());
        assert!((m.variance() - 0.25).abs() < 0.03);
    }

    #[test]
    fn ou_stationary_moments() {
        let spec = PathLawSpec::new(Law::Ou { start: OuStart::Stationary }, (0.0, 2.0), 4, 1);
        let paths = sample_many(&spec, 6000, stream()).unwrap();
        let v: Moments = paths.iter().map(|p| p.last()[0].powi(2)).collect();
        assert!((v.mean - 0.5).abs() < 4.0 * v.se());
        let c: Moments = paths.iter().map(|p| p.first()[0] * p.point(8)[0]).collect();
        assert!((c.mean - 0.5 * (-1.0f64).exp()).abs() < 4.0 * c.se());
    }

    #[test]
    fn ou_bridge_midpoint_law() {
        // OU from x on [0, 2] pinned at y: mean x cosh-type interpolation
        let (x, y) = (1.0, -0.5);
        let spec = PathLawSpec::new(Law::OuBridge { x: vec![x], y: vec![y] }, (0.0, 2.0), 3, 1);
        let paths = sample_many(&spec, 8000, stream()).unwrap();
        let m: Moments = paths.iter().map(|p| p.point(4)[0]).collect();
        let t = 1.0f64;
        let tt = 2.0f64;
        let mean = x * (tt - t).sinh() / tt.sinh() + y * t.sinh() / tt.sinh();
        let var = 0.5 * (1.0 - (-2.0 * t).exp()) - 0.5 * (-(tt - t)).exp().powi(2) * (1.0 - (-2.0 * t).exp()).powi(2) / (1.0 - (-2.0 * tt).exp());
        assert!((m.mean - mean).abs() < 4.0 * m.se());
        assert!((m.variance() - var).abs() < 0.1 * var);
    }

    #[test]
    fn deterministic_and_validated() {
        let spec = PathLawSpec::new(Law::Ou { start: OuStart::Stationary }, (0.0, 1.0), 5, 2);
        assert_eq!(sample_many(&spec, 3, stream()).unwrap(), sample_many(&spec, 3, stream()).unwrap());
        let bad = PathLawSpec::new(Law::Bm { start: vec![0.0] }, (0.0, 1.0), 5, 2);
        assert!(sample(&bad, &mut stream().rng()).is_err());
        let s = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<PathLawSpec>(&s).unwrap(), spec);
        let f = PathLawSpec::new(Law::Ou { start: OuStart::Fixed(vec![0.1]) }, (0.0, 1.0), 2, 1);
        assert_eq!(serde_json::from_str::<PathLawSpec>(&serde_json::to_string(&f).unwrap()).unwrap(), f);
    }

    #[test]
    fn n_functional_and_window_sum() {
        let spec = PathLawSpec::new(Law::Bm { start: vec![0.0, 0.0] }, (0.0, 1.0), 8, 2);
        let rp = Step2RoughPath::lift(sample(&spec, &mut stream().rng()).unwrap(), LiftScheme::Ito);
        let n = n_functional(&rp, 0, 256, 0.4, HolderMode::ExactAllPairs).unwrap();
        let nd = n_functional(&rp, 0, 256, 0.4, HolderMode::DyadicPairs).unwrap();
        assert!(n.is_finite() && n > 0.0 && nd <= n + 1e-12);
        assert!(n_functional(&rp, 0, 256, 0.6, HolderMode::DyadicPairs).is_err());
        let c = cal_n(&[(0, &rp), (1, &rp)], 2.0, 3.0, 0.4, HolderMode::DyadicPairs).unwrap();
        assert!((c.value - (1.0 + 0.25) * nd.powi(3)).abs() < 1e-9 * c.value);
        let pi2 = std::f64::consts::PI.powi(2) / 6.0;
        assert!((c.tail_weight - 2.0 * (pi2 - 1.0 - 0.25)).abs() < 1e-12);
    }
}
