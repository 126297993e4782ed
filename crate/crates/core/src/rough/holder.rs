use serde::{Deserialize, Serialize};

use super::{GridPath, Step2RoughPath};
use crate::error::{Error, Result};

/// Largest number of grid points accepted by [`HolderMode::ExactAllPairs`].
pub const EXACT_PAIRS_LIMIT: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HolderMode {
    ExactAllPairs,
    /// Pairs `(a, a + 2^m)` only.
    DyadicPairs,
}

impl HolderMode {
    pub fn auto(points: usize) -> HolderMode {
        if points <= EXACT_PAIRS_LIMIT {
            HolderMode::ExactAllPairs
        } else {
            HolderMode::DyadicPairs
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HolderNorm {
    pub value: f64,
    pub argmax: (usize, usize),
}

fn scan(a: usize, b: usize, mode: HolderMode, time: impl Fn(usize) -> f64, exponent: f64, mut size: impl FnMut(usize, usize) -> f64) -> Result<HolderNorm> {
    if mode == HolderMode::ExactAllPairs && b - a + 1 > EXACT_PAIRS_LIMIT {
        return Err(Error::SizeLimit(format!("{} points exceed the all-pairs limit {EXACT_PAIRS_LIMIT}", b - a + 1)));
    }
    let mut best = HolderNorm { value: 0.0, argmax: (a, a) };
    let mut visit = |s: usize, t: usize| {
        let q = size(s, t) / (time(t) - time(s)).powf(exponent);
        if q > best.value {
            best = HolderNorm { value: q, argmax: (s, t) };
        }
    };
    match mode {
        HolderMode::ExactAllPairs => {
            for s in a..b {
                for t in s + 1..=b {
                    visit(s, t);
                }
            }
        }
        HolderMode::DyadicPairs => {
            let mut h = 1;
            while h <= b - a {
                for s in a..=b - h {
                    visit(s, s + h);
                }
                h *= 2;
            }
        }
    }
    Ok(best)
}

/// `sup |X_t - X_s| / |t - s|^γ` over pairs in `a..=b`.
pub fn holder_norm_path(path: &GridPath, a: usize, b: usize, gamma: f64, mode: HolderMode) -> Result<HolderNorm> {
    path.check_range(a, b)?;
    scan(a, b, mode, |j| path.time(j), gamma, |s, t| {
        path.point(t).iter().zip(path.point(s)).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    })
}

/// `sup |𝕏_st| / |t - s|^exponent` (Frobenius norm) over pairs in `a..=b`.
pub fn holder_norm_area(rp: &Step2RoughPath, a: usize, b: usize, exponent: f64, mode: HolderMode) -> Result<HolderNorm> {
    rp.base().check_range(a, b)?;
    let mut buf = vec![0.0; rp.dim() * rp.dim()];
    scan(a, b, mode, |j| rp.base().time(j), exponent, |s, t| {
        rp.area_into(s, t, &mut buf);
        buf.iter().map(|x| x * x).sum::<f64>().sqrt()
    })
}

/// Two-parameter tensor `R(s, t)` on grid points.
pub trait PairwiseTensor {
    fn n_points(&self) -> usize;
    fn time(&self, i: usize) -> f64;
    fn width(&self) -> usize;
    fn eval(&self, s: usize, t: usize, out: &mut [f64]);
}

impl PairwiseTensor for Step2RoughPath {
    fn n_points(&self) -> usize {
        self.base().n_points()
    }
    fn time(&self, i: usize) -> f64 {
        self.base().time(i)
    }
    fn width(&self) -> usize {
        self.dim() * self.dim()
    }
    fn eval(&self, s: usize, t: usize, out: &mut [f64]) {
        self.area_into(s, t, out)
    }
}

/// `R ≡ 0` on a grid.
pub struct ZeroPairwise {
    pub times: Vec<f64>,
}

impl PairwiseTensor for ZeroPairwise {
    fn n_points(&self) -> usize {
        self.times.len()
    }
    fn time(&self, i: usize) -> f64 {
        self.times[i]
    }
    fn width(&self) -> usize {
        1
    }
    fn eval(&self, _: usize, _: usize, out: &mut [f64]) {
        out[0] = 0.0;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrrConfig {
    /// The triple supremum is taken on a subgrid with at most this many points.
    pub max_points: usize,
    /// Number of interior `θ₁` values scanned in `(0, θ)`.
    pub theta1_steps: usize,
    pub constant: f64,
}

impl Default for GrrConfig {
    fn default() -> Self {
        GrrConfig { max_points: 129, theta1_steps: 9, constant: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrrReport {
    pub u: f64,
    pub v: f64,
    pub theta1: f64,
    pub bound: f64,
}

/// `C (U_{θ+2/p,p}(R) + V_θ(R))` with `U` by grid quadrature off the diagonal and
/// `V_θ` the triple supremum minimised over a `θ₁` scan.
pub fn grr_bound<R: PairwiseTensor + ?Sized>(r: &R, theta: f64, p: f64, cfg: &GrrConfig) -> Result<GrrReport> {
    if !(theta > 0.0 && p >= 1.0) {
        return Err(Error::spec("grr_bound needs theta > 0 and p >= 1"));
    }
    let n = r.n_points();
    if n < 3 {
        return Err(Error::InvalidPath("need at least three grid points".into()));
    }
    let w = r.width();
    let mut buf = vec![0.0; w];
    let norm = |buf: &[f64]| buf.iter().map(|x| x * x).sum::<f64>().sqrt();

    let h = (r.time(n - 1) - r.time(0)) / (n - 1) as f64;
    let e = theta + 2.0 / p;
    let mut acc = 0.0;
    for s in 0..n {
        for t in s + 1..n {
            r.eval(s, t, &mut buf);
            let q = norm(&buf) / (r.time(t) - r.time(s)).powf(e);
            acc += 2.0 * q.powf(p) * h * h;
        }
    }
    let u = acc.powf(1.0 / p);

    let stride = (n - 1).div_ceil(cfg.max_points.max(3) - 1).max(1);
    let idx: Vec<usize> = (0..n).step_by(stride).collect();
    let m = idx.len();
    let mut cache = vec![0.0; m * m * w];
    for a in 0..m {
        for b in a + 1..m {
            r.eval(idx[a], idx[b], &mut cache[(a * m + b) * w..(a * m + b + 1) * w]);
        }
    }
    let thetas: Vec<f64> = (1..=cfg.theta1_steps).map(|k| theta * k as f64 / (cfg.theta1_steps + 1) as f64).collect();
    let mut sups = vec![0.0f64; thetas.len()];
    let mut d = vec![0.0; w];
    for a in 0..m {
        for b in a + 1..m {
            for c in b + 1..m {
                for k in 0..w {
                    d[k] = cache[(a * m + c) * w + k] - cache[(a * m + b) * w + k] - cache[(b * m + c) * w + k];
                }
                let dn = norm(&d);
                if dn == 0.0 {
                    continue;
                }
                let (tu, us) = (r.time(idx[c]) - r.time(idx[b]), r.time(idx[b]) - r.time(idx[a]));
                for (sup, th1) in sups.iter_mut().zip(&thetas) {
                    let q = dn / (tu.powf(*th1) * us.powf(theta - th1));
                    if q > *sup {
                        *sup = q;
                    }
                }
            }
        }
    }
    let (best, v) = sups.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, s)| if *s < acc.1 { (i, *s) } else { acc });
    Ok(GrrReport { u, v, theta1: thetas[best], bound: cfg.constant * (u + v) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rough::LiftScheme;

    #[test]
    fn linear_path_norms() {
        let p = GridPath::from_fn((0.0, 1.0), 6, 1, |t, x| x[0] = 3.0 * t).unwrap();
        let lip = holder_norm_path(&p, 0, 64, 1.0, HolderMode::ExactAllPairs).unwrap();
        assert!((lip.value - 3.0).abs() < 1e-12);
        let half = holder_norm_path(&p, 0, 64, 0.5, HolderMode::ExactAllPairs).unwrap();
        assert!((half.value - 3.0).abs() < 1e-12);
        assert_eq!(half.argmax, (0, 64));
        let dy = holder_norm_path(&p, 0, 64, 0.5, HolderMode::DyadicPairs).unwrap();
        assert!((dy.value - 3.0).abs() < 1e-12);
    }

    #[test]
    fn dyadic_is_lower_bound() {
        let p = GridPath::from_fn((0.0, 1.0), 7, 2, |t, x| {
            x[0] = (40.0 * t).sin();
            x[1] = (t * 17.0).cos();
        })
        .unwrap();
        let ex = holder_norm_path(&p, 0, 128, 0.4, HolderMode::ExactAllPairs).unwrap();
        let dy = holder_norm_path(&p, 0, 128, 0.4, HolderMode::DyadicPairs).unwrap();
        assert!(dy.value <= ex.value + 1e-15);
        assert!(dy.value >= 0.5 * ex.value);
    }

    #[test]
    fn exact_mode_limit() {
        let p = GridPath::constant((0.0, 1.0), 13, &[0.0]).unwrap();
        assert!(matches!(holder_norm_path(&p, 0, 8192, 0.5, HolderMode::ExactAllPairs), Err(Error::SizeLimit(_))));
        assert_eq!(HolderMode::auto(8193), HolderMode::DyadicPairs);
    }

    #[test]
    fn grr_zero_tensor() {
        let z = ZeroPairwise { times: (0..33).map(|i| i as f64 / 32.0).collect() };
        let g = grr_bound(&z, 0.5, 4.0, &GrrConfig::default()).unwrap();
        assert_eq!(g.u, 0.0);
        assert_eq!(g.v, 0.0);
        assert_eq!(g.bound, 0.0);
    }

    #[test]
    fn grr_dominates_area_sup_on_smooth_path() {
        let p = GridPath::from_fn((0.0, 1.0), 7, 2, |t, x| {
            x[0] = (3.0 * t).sin();
            x[1] = t * t;
        })
        .unwrap();
        let rp = Step2RoughPath::lift(p, LiftScheme::Ito);
        let g = grr_bound(&rp, 1.0, 8.0, &GrrConfig::default()).unwrap();
        let sup = holder_norm_area(&rp, 0, 128, 1.0, HolderMode::ExactAllPairs).unwrap();
        assert!(g.v > 0.0 && g.u > 0.0);
        assert!(g.bound >= sup.value);
    }
}
