use serde::{Deserialize, Serialize};

use super::GridPath;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LiftScheme {
    /// Left-point sums.
    Ito,
    /// Itô area plus `½ δ_ij (t - s)`.
    StratExact,
    /// Trapezoidal sums.
    StratTrapezoid,
}

/// Step-2 lift of a grid path.
///
/// Areas are recovered from prefix tensors
/// `P_k = Σ_{j<k} Y_j ⊗ ΔX_j` through
/// `𝕏_ab = P_b - P_a - X_a ⊗ (X_b - X_a)`.
#[derive(Clone, Debug)]
pub struct Step2RoughPath {
    base: GridPath,
    scheme: LiftScheme,
    prefix: Vec<f64>,
}

impl Step2RoughPath {
    pub fn lift(base: GridPath, scheme: LiftScheme) -> Self {
        let d = base.dim();
        let n = base.n_steps();
        let mut prefix = vec![0.0; (n + 1) * d * d];
        let mut y = vec![0.0; d];
        for k in 0..n {
            let (x0, x1) = (base.point(k), base.point(k + 1));
            match scheme {
                LiftScheme::Ito | LiftScheme::StratExact => y.copy_from_slice(x0),
                LiftScheme::StratTrapezoid => {
                    for i in 0..d {
                        y[i] = 0.5 * (x0[i] + x1[i]);
                    }
                }
            }
            let (done, rest) = prefix.split_at_mut((k + 1) * d * d);
            let prev = &done[k * d * d..];
            let next = &mut rest[..d * d];
            for i in 0..d {
                for j in 0..d {
                    next[i * d + j] = prev[i * d + j] + y[i] * (x1[j] - x0[j]);
                }
            }
        }
        Step2RoughPath { base, scheme, prefix }
    }

    pub fn base(&self) -> &GridPath {
        &self.base
    }

    pub fn scheme(&self) -> LiftScheme {
        self.scheme
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn n_steps(&self) -> usize {
        self.base.n_steps()
    }

    pub fn prefix(&self, k: usize) -> &[f64] {
        let dd = self.dim() * self.dim();
        &self.prefix[k * dd..(k + 1) * dd]
    }

    /// `𝕏^{ij}_{ab}` written to `out[i * d + j]`, for `a <= b`.
    pub fn area_into(&self, a: usize, b: usize, out: &mut [f64]) {
        let d = self.dim();
        let (pa, pb) = (self.prefix(a), self.prefix(b));
        let (xa, xb) = (self.base.point(a), self.base.point(b));
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] = pb[i * d + j] - pa[i * d + j] - xa[i] * (xb[j] - xa[j]);
            }
        }
        if self.scheme == LiftScheme::StratExact {
            let half = 0.5 * (self.base.time(b) - self.base.time(a));
            for i in 0..d {
                out[i * d + i] += half;
            }
        }
    }

    pub fn area(&self, a: usize, b: usize) -> Result<Vec<f64>> {
        self.base.check_range(a, b)?;
        let mut out = vec![0.0; self.dim() * self.dim()];
        self.area_into(a, b, &mut out);
        Ok(out)
    }

    /// Area by grid times.
    pub fn area_at(&self, s: f64, t: f64) -> Result<Vec<f64>> {
        let a = self.base.index_of(s)?;
        let b = self.base.index_of(t)?;
        self.area(a, b)
    }

    /// Area over the single step `j..j+1` in closed form.
    pub fn step_area_into(&self, j: usize, out: &mut [f64]) {
        let d = self.dim();
        match self.scheme {
            LiftScheme::Ito => out.iter_mut().for_each(|v| *v = 0.0),
            LiftScheme::StratExact => {
                out.iter_mut().for_each(|v| *v = 0.0);
                let half = 0.5 * (self.base.time(j + 1) - self.base.time(j));
                for i in 0..d {
                    out[i * d + i] = half;
                }
            }
            LiftScheme::StratTrapezoid => {
                let (x0, x1) = (self.base.point(j), self.base.point(j + 1));
                for i in 0..d {
                    for k in 0..d {
                        out[i * d + k] = 0.5 * (x1[i] - x0[i]) * (x1[k] - x0[k]);
                    }
                }
            }
        }
    }

    pub fn same_base(&self, other: &Step2RoughPath) -> Result<()> {
        if self.base != other.base {
            return Err(Error::MismatchedBase);
        }
        Ok(())
    }

    /// Lift of the coarser dyadic subsample.
    pub fn subsample(&self, level: u32) -> Result<Step2RoughPath> {
        Ok(Step2RoughPath::lift(self.base.subsample(level)?, self.scheme))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn wiggle(level: u32) -> GridPath {
        GridPath::from_fn((0.0, 1.0), level, 2, |t, x| {
            x[0] = (7.0 * t).sin() + t;
            x[1] = (3.0 * t).cos() * t;
        })
        .unwrap()
    }

    #[test]
    fn constant_path_has_zero_area() {
        let p = GridPath::constant((0.0, 1.0), 5, &[0.3, -1.0]).unwrap();
        for scheme in [LiftScheme::Ito, LiftScheme::StratTrapezoid] {
            let rp = Step2RoughPath::lift(p.clone(), scheme);
            assert!(rp.area(3, 29).unwrap().iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn trapezoid_one_dim_is_half_square() {
        let p = GridPath::from_fn((0.0, 1.0), 8, 1, |t, x| x[0] = (5.0 * t).sin()).unwrap();
        let rp = Step2RoughPath::lift(p.clone(), LiftScheme::StratTrapezoid);
        for (a, b) in [(0, 256), (17, 200), (100, 101)] {
            let inc = p.point(b)[0] - p.point(a)[0];
            assert!((rp.area(a, b).unwrap()[0] - 0.5 * inc * inc).abs() < 1e-13);
        }
    }

    #[test]
    fn strat_exact_adds_half_time() {
        let p = wiggle(6);
        let ito = Step2RoughPath::lift(p.clone(), LiftScheme::Ito);
        let st = Step2RoughPath::lift(p, LiftScheme::StratExact);
        let a = ito.area(4, 36).unwrap();
        let b = st.area(4, 36).unwrap();
        assert!((b[0] - a[0] - 0.25).abs() < 1e-14);
        assert!((b[1] - a[1]).abs() < 1e-14);
        assert!((b[3] - a[3] - 0.25).abs() < 1e-14);
    }

    #[test]
    fn ito_area_matches_direct_sum() {
        let p = wiggle(5);
        let rp = Step2RoughPath::lift(p.clone(), LiftScheme::Ito);
        let (a, b) = (3, 27);
        let mut direct = [0.0; 4];
        for k in a..b {
            for i in 0..2 {
                for j in 0..2 {
                    direct[i * 2 + j] += (p.point(k)[i] - p.point(a)[i]) * (p.point(k + 1)[j] - p.point(k)[j]);
                }
            }
        }
        let q = rp.area(a, b).unwrap();
        for c in 0..4 {
            assert!((q[c] - direct[c]).abs() < 1e-13);
        }
    }

    #[test]
    fn step_area_matches_prefix_query() {
        let p = wiggle(5);
        for scheme in [LiftScheme::Ito, LiftScheme::StratExact, LiftScheme::StratTrapezoid] {
            let rp = Step2RoughPath::lift(p.clone(), scheme);
            let mut s = [0.0; 4];
            for j in [0, 7, 31] {
                rp.step_area_into(j, &mut s);
                let q = rp.area(j, j + 1).unwrap();
                for c in 0..4 {
                    assert!((s[c] - q[c]).abs() < 1e-14);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn chen_relation(seed in 0u64..1000, s in 0usize..64, u in 0usize..64, t in 0usize..64) {
            let mut v = [s, u, t];
            v.sort();
            let [s, u, t] = v;
            let p = GridPath::from_fn((0.0, 1.0), 6, 2, |tt, x| {
                x[0] = (tt * (seed as f64 + 1.0)).sin();
                x[1] = (tt * 13.0 + seed as f64).cos();
            }).unwrap();
            for scheme in [LiftScheme::Ito, LiftScheme::StratExact, LiftScheme::StratTrapezoid] {
                let rp = Step2RoughPath::lift(p.clone(), scheme);
                let (st, su, ut) = (rp.area(s, t).unwrap(), rp.area(s, u).unwrap(), rp.area(u, t).unwrap());
                let (xsu, xut) = (p.increment(s, u), p.increment(u, t));
                for i in 0..2 {
                    for j in 0..2 {
                        let d = st[i * 2 + j] - su[i * 2 + j] - ut[i * 2 + j] - xsu[i] * xut[j];
                        prop_assert!(d.abs() < 1e-12);
                    }
                }
            }
        }
    }
}
