//! Currents as linear functionals on test fields, boundary currents and the
//! `W`-pairing of currents.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::brownian::n_functional;
use crate::error::{Error, Result};
use crate::potentials::PairPotential;
use crate::rough::{rough_integral, HolderMode, Step2RoughPath, VectorField};
use crate::stats::zeta_tail;

/// Current `φ ↦ ∫_s^t φ(u, X_u) · dX_u` supported on grid steps `a..b` of a lift.
#[derive(Clone, Debug)]
pub struct GridCurrent {
    lift: Arc<Step2RoughPath>,
    a: usize,
    b: usize,
}

impl GridCurrent {
    pub fn new(lift: Arc<Step2RoughPath>) -> Self {
        let b = lift.n_steps();
        GridCurrent { lift, a: 0, b }
    }

    pub fn with_support(lift: Arc<Step2RoughPath>, a: usize, b: usize) -> Result<Self> {
        lift.base().check_range(a, b)?;
        Ok(GridCurrent { lift, a, b })
    }

    pub fn lift(&self) -> &Arc<Step2RoughPath> {
        &self.lift
    }

    pub fn support(&self) -> (usize, usize) {
        (self.a, self.b)
    }

    pub fn dim(&self) -> usize {
        self.lift.dim()
    }

    /// `C_{[s,t]}(φ)` for grid times `s <= t` inside the support.
    pub fn evaluate<F: VectorField + ?Sized>(&self, phi: &F, s: f64, t: f64) -> Result<f64> {
        let base = self.lift.base();
        let (a, b) = (base.index_of(s)?, base.index_of(t)?);
        if a < self.a || b > self.b || a > b {
            return Err(Error::OutOfRange { a, b, n: self.b });
        }
        rough_integral(&*self.lift, phi, a, b)
    }

    pub fn evaluate_all<F: VectorField + ?Sized>(&self, phi: &F) -> Result<f64> {
        rough_integral(&*self.lift, phi, self.a, self.b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Windows to the left of the interval.
    Minus,
    /// Windows to the right of the interval.
    Plus,
}

/// Sum of window currents on one side of an interval.
#[derive(Clone, Debug)]
pub struct BoundaryCurrent {
    side: Side,
    windows: Vec<Arc<Step2RoughPath>>,
}

impl BoundaryCurrent {
    pub fn new(side: Side, mut windows: Vec<Arc<Step2RoughPath>>) -> Result<Self> {
        windows.sort_by(|a, b| a.base().interval().0.total_cmp(&b.base().interval().0));
        for w in windows.windows(2) {
            if w[0].base().interval().1 > w[1].base().interval().0 + 1e-12 {
                return Err(Error::InvalidPath("boundary windows overlap".into()));
            }
        }
        if let Some(w) = windows.first() {
            let d = w.dim();
            if windows.iter().any(|x| x.dim() != d) {
                return Err(Error::InvalidPath("boundary windows differ in dimension".into()));
            }
        }
        Ok(BoundaryCurrent { side, windows })
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn windows(&self) -> &[Arc<Step2RoughPath>] {
        &self.windows
    }

    /// Window index `⌊start⌋`.
    pub fn index(w: &Step2RoughPath) -> i64 {
        w.base().interval().0.floor() as i64
    }

    pub fn check_sides(&self, s: f64, t: f64) -> Result<()> {
        let tol = 1e-9 * (1.0 + s.abs().max(t.abs()));
        let ok = self.windows.iter().all(|w| {
            let (ws, we) = w.base().interval();
            match self.side {
                Side::Minus => we <= s + tol,
                Side::Plus => ws >= t - tol,
            }
        });
        if ok {
            Ok(())
        } else {
            Err(Error::SideMismatch)
        }
    }

    /// `Σ (1 + |i|)^{-α}` over window indices beyond the stored ones on this side.
    pub fn tail_weight(&self, alpha: f64) -> f64 {
        let idx: Vec<i64> = self.windows.iter().map(|w| Self::index(w)).collect();
        match self.side {
            Side::Plus => tail_beyond(idx.iter().copied().max().unwrap_or(0), alpha),
            Side::Minus => tail_beyond(-idx.iter().copied().min().unwrap_or(0), alpha),
        }
    }
}

/// `Σ_{i > i1} (1 + |i|)^{-α}`.
fn tail_beyond(i1: i64, alpha: f64) -> f64 {
    if i1 >= 0 {
        zeta_tail(alpha, i1 as u64 + 2)
    } else {
        let explicit: f64 = (i1 + 1..=0).map(|i| (1.0 + i.unsigned_abs() as f64).powf(-alpha)).sum();
        explicit + zeta_tail(alpha, 2)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldNormConfig {
    pub alpha: f64,
    pub gamma: f64,
    /// Centre of the spatial lattice (origin when empty).
    pub center: Vec<f64>,
    pub radius: f64,
    pub x_points: usize,
    pub t_points: usize,
    /// Unit windows `[k, k + 1]` scanned for the weighted norm.
    pub k_range: (i64, i64),
}

impl Default for FieldNormConfig {
    fn default() -> Self {
        FieldNormConfig { alpha: 2.0, gamma: 0.4, center: vec![], radius: 3.0, x_points: 13, t_points: 5, k_range: (-16, 16) }
    }
}

fn fro(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Lattice estimate of `‖φ‖_{ρ,2,[s,t]}`: sup of `φ, ∇φ, ∇²φ` plus the
/// time-Hölder quotients of `φ` and `∇φ`.
pub fn field_norm<F: VectorField + ?Sized>(phi: &F, s: f64, t: f64, dim: usize, cfg: &FieldNormConfig) -> f64 {
    let center = if cfg.center.is_empty() { vec![0.0; dim] } else { cfg.center.clone() };
    let m = cfg.x_points.max(1);
    let total = m.pow(dim as u32);
    let times: Vec<f64> = (0..cfg.t_points.max(2)).map(|i| s + (t - s) * i as f64 / (cfg.t_points.max(2) - 1) as f64).collect();
    let rho = phi.time_exponent();
    let mut x = vec![0.0; dim];
    let mut v = vec![vec![0.0; dim]; times.len()];
    let mut j = vec![vec![0.0; dim * dim]; times.len()];
    let mut h = vec![0.0; dim * dim * dim];
    let mut sup = 0.0f64;
    let mut hol = 0.0f64;
    for idx in 0..total {
        let mut r = idx;
        for c in 0..dim {
            let step = if m > 1 { 2.0 * cfg.radius / (m - 1) as f64 } else { 0.0 };
            x[c] = center[c] - if m > 1 { cfg.radius } else { 0.0 } + step * (r % m) as f64;
            r /= m;
        }
        for (q, &u) in times.iter().enumerate() {
            phi.value(u, &x, &mut v[q]);
            phi.jacobian(u, &x, &mut j[q]);
            phi.hessian(u, &x, &mut h);
            sup = sup.max(fro(&v[q])).max(fro(&j[q])).max(fro(&h));
        }
        for p in 0..times.len() {
            for q in p + 1..times.len() {
                let dt = (times[q] - times[p]).powf(rho);
                let dv: Vec<f64> = v[q].iter().zip(&v[p]).map(|(a, b)| a - b).collect();
                let dj: Vec<f64> = j[q].iter().zip(&j[p]).map(|(a, b)| a - b).collect();
                hol = hol.max(fro(&dv) / dt).max(fro(&dj) / dt);
            }
        }
    }
    sup + hol
}

/// `sup_k (1 + |k|)^α ‖φ‖_{ρ,2,[k,k+1]}` over the configured window range.
pub fn d_alpha_norm<F: VectorField + ?Sized>(phi: &F, dim: usize, cfg: &FieldNormConfig) -> f64 {
    (cfg.k_range.0..=cfg.k_range.1)
        .map(|k| (1.0 + k.unsigned_abs() as f64).powf(cfg.alpha) * field_norm(phi, k as f64, k as f64 + 1.0, dim, cfg))
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowCheck {
    pub index: i64,
    pub value: f64,
    pub bound: f64,
}

impl WindowCheck {
    pub fn ratio(&self) -> f64 {
        if self.bound > 0.0 {
            self.value.abs() / self.bound
        } else if self.value == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Clone, Debug)]
pub struct BoundaryEval {
    pub value: f64,
    /// `‖φ‖_D Σ_{beyond} (1 + |i|)^{-α} (1 + max N_i)³`.
    pub tail_bound: f64,
    pub d_norm: f64,
    pub max_n: f64,
    pub windows: Vec<WindowCheck>,
}

pub fn boundary_evaluate<F: VectorField + ?Sized>(bc: &BoundaryCurrent, phi: &F, cfg: &FieldNormConfig) -> Result<BoundaryEval> {
    let dim = bc.windows.first().map(|w| w.dim()).unwrap_or(1);
    let dn = d_alpha_norm(phi, dim, cfg);
    let mut value = 0.0;
    let mut max_n = 0.0f64;
    let mut windows = Vec::with_capacity(bc.windows.len());
    for w in &bc.windows {
        let v = rough_integral(&**w, phi, 0, w.n_steps())?;
        let nk = n_functional(w, 0, w.n_steps(), cfg.gamma, HolderMode::DyadicPairs)?;
        max_n = max_n.max(nk);
        let i = BoundaryCurrent::index(w);
        windows.push(WindowCheck { index: i, value: v, bound: (1.0 + i.unsigned_abs() as f64).powf(-cfg.alpha) * dn * (1.0 + nk).powi(3) });
        value += v;
    }
    let tail_bound = dn * bc.tail_weight(cfg.alpha) * (1.0 + max_n).powi(3);
    Ok(BoundaryEval { value, tail_bound, d_norm: dn, max_n, windows })
}

struct Piece {
    times: Vec<f64>,
    points: Vec<f64>,
    incs: Vec<f64>,
    areas: Option<Vec<f64>>,
}

/// `w^C(x, t) = C(W(x - ·, t - ·) e_c)_c`, the field a current generates
/// through the pair potential.
pub struct WField {
    w: PairPotential,
    dim: usize,
    pieces: Vec<Piece>,
}

impl WField {
    fn piece(rp: &Step2RoughPath, a: usize, b: usize) -> Piece {
        let d = rp.dim();
        let base = rp.base();
        let mut times = Vec::with_capacity(b - a);
        let mut points = Vec::with_capacity((b - a) * d);
        let mut incs = Vec::with_capacity((b - a) * d);
        let mut areas = Vec::with_capacity((b - a) * d * d);
        let mut buf = vec![0.0; d * d];
        let mut any = false;
        for j in a..b {
            times.push(base.time(j));
            points.extend_from_slice(base.point(j));
            incs.extend(base.point(j + 1).iter().zip(base.point(j)).map(|(y, x)| y - x));
            rp.step_area_into(j, &mut buf);
            any |= buf.iter().any(|v| *v != 0.0);
            areas.extend_from_slice(&buf);
        }
        Piece { times, points, incs, areas: any.then_some(areas) }
    }

    pub fn new(current: &GridCurrent, w: PairPotential) -> Self {
        let (a, b) = current.support();
        WField { dim: current.dim(), pieces: vec![Self::piece(current.lift(), a, b)], w }
    }

    pub fn from_boundary(bc: &BoundaryCurrent, w: PairPotential) -> Self {
        let dim = bc.windows.first().map(|x| x.dim()).unwrap_or(1);
        WField { dim, pieces: bc.windows.iter().map(|r| Self::piece(r, 0, r.n_steps())).collect(), w }
    }

    pub fn from_boundaries(bcs: &[&BoundaryCurrent], w: PairPotential) -> Self {
        let dim = bcs.iter().flat_map(|b| b.windows.first()).map(|x| x.dim()).next().unwrap_or(1);
        let pieces = bcs.iter().flat_map(|bc| bc.windows.iter().map(|r| Self::piece(r, 0, r.n_steps()))).collect();
        WField { dim, pieces, w }
    }

    /// Field of the sum of the two currents.
    pub fn sum(mut self, other: WField) -> Result<WField> {
        if self.w != other.w || self.dim != other.dim {
            return Err(Error::spec("summed fields must share potential and dimension"));
        }
        self.pieces.extend(other.pieces);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn accumulate(&self, t: f64, x: &[f64], order: usize, out: &mut [f64]) {
        let d = self.dim;
        out.iter_mut().for_each(|v| *v = 0.0);
        let mut y = vec![0.0; d];
        let mut g = vec![0.0; d];
        let mut h = vec![0.0; d * d];
        let mut th = vec![0.0; d * d * d];
        for p in &self.pieces {
            for a in 0..p.times.len() {
                let ya = &p.points[a * d..(a + 1) * d];
                for i in 0..d {
                    y[i] = x[i] - ya[i];
                }
                let dt = t - p.times[a];
                let inc = &p.incs[a * d..(a + 1) * d];
                let area = p.areas.as_ref().map(|v| &v[a * d * d..(a + 1) * d * d]);
                match order {
                    0 => {
                        let wv = self.w.value(&y, dt);
                        for c in 0..d {
                            out[c] += wv * inc[c];
                        }
                        if let Some(ar) = area {
                            self.w.gradient(&y, dt, &mut g);
                            for c in 0..d {
                                for i in 0..d {
                                    out[c] -= g[i] * ar[i * d + c];
                                }
                            }
                        }
                    }
                    1 => {
                        self.w.gradient(&y, dt, &mut g);
                        if area.is_some() {
                            self.w.hessian(&y, dt, &mut h);
                        }
                        for m in 0..d {
                            for c in 0..d {
                                let mut v = g[m] * inc[c];
                                if let Some(ar) = area {
                                    for i in 0..d {
                                        v -= h[m * d + i] * ar[i * d + c];
                                    }
                                }
                                out[m * d + c] += v;
                            }
                        }
                    }
                    _ => {
                        self.w.hessian(&y, dt, &mut h);
                        if area.is_some() {
                            self.w.third(&y, dt, &mut th);
                        }
                        for m in 0..d {
                            for n in 0..d {
                                for c in 0..d {
                                    let mut v = h[m * d + n] * inc[c];
                                    if let Some(ar) = area {
                                        for i in 0..d {
                                            v -= th[(m * d + n) * d + i] * ar[i * d + c];
                                        }
                                    }
                                    out[(m * d + n) * d + c] += v;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

impl VectorField for WField {
    fn value(&self, t: f64, x: &[f64], out: &mut [f64]) {
        self.accumulate(t, x, 0, out)
    }
    fn jacobian(&self, t: f64, x: &[f64], out: &mut [f64]) {
        self.accumulate(t, x, 1, out)
    }
    fn hessian(&self, t: f64, x: &[f64], out: &mut [f64]) {
        self.accumulate(t, x, 2, out)
    }
}

pub fn w_field(current: &GridCurrent, w: &PairPotential) -> WField {
    WField::new(current, w.clone())
}

/// Currents with closed-form Fourier coefficients on `ψ_{k,ϖ} = e^{i(k·x + ϖt)}`.
pub trait FourierCurrent: Sync {
    fn dim(&self) -> usize;
    /// `out[m * d + c] = C(ψ_{k,ϖ_m} e_c)`.
    fn fourier(&self, k: &[f64], omegas: &[f64], out: &mut [Complex64]);
    /// Mean of `Σ_c |C(ψ_{k,ϖ} e_c)|²` over one period in `ϖ`.
    fn period_mean(&self, k: &[f64]) -> f64;
    /// Period in `ϖ` of `|C(ψ_{k,ϖ})|`.
    fn frequency_period(&self) -> f64;
    /// `(Σ_j |ΔX_j|, Σ_j |𝕏_{j,j+1}|)`.
    fn masses(&self) -> (f64, f64);
}

impl GridCurrent {
    fn coefficients(&self, k: &[f64], g: &mut [Complex64]) {
        let d = self.dim();
        let base = self.lift.base();
        let mut area = vec![0.0; d * d];
        for (slot, j) in (self.a..self.b).enumerate() {
            let x = base.point(j);
            let y = base.point(j + 1);
            let ph = Complex64::cis(k.iter().zip(x).map(|(a, b)| a * b).sum());
            self.lift.step_area_into(j, &mut area);
            for c in 0..d {
                let mut im = 0.0;
                for i in 0..d {
                    im += k[i] * area[i * d + c];
                }
                g[slot * d + c] = ph * Complex64::new(y[c] - x[c], im);
            }
        }
    }
}

impl FourierCurrent for GridCurrent {
    fn dim(&self) -> usize {
        self.lift.dim()
    }

    fn fourier(&self, k: &[f64], omegas: &[f64], out: &mut [Complex64]) {
        let d = self.dim();
        let n = self.b - self.a;
        let mut g = vec![Complex64::new(0.0, 0.0); n * d];
        self.coefficients(k, &mut g);
        let base = self.lift.base();
        let (t0, dt) = (base.time(self.a), base.dt());
        for (m, &om) in omegas.iter().enumerate() {
            let z = Complex64::cis(om * dt);
            let mut e = Complex64::cis(om * t0);
            let acc = &mut out[m * d..(m + 1) * d];
            acc.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            for j in 0..n {
                for c in 0..d {
                    acc[c] += g[j * d + c] * e;
                }
                e *= z;
            }
        }
    }

    fn period_mean(&self, k: &[f64]) -> f64 {
        let d = self.dim();
        let mut g = vec![Complex64::new(0.0, 0.0); (self.b - self.a) * d];
        self.coefficients(k, &mut g);
        g.iter().map(|v| v.norm_sqr()).sum()
    }

    fn frequency_period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.lift.base().dt()
    }

    fn masses(&self) -> (f64, f64) {
        let d = self.dim();
        let base = self.lift.base();
        let mut area = vec![0.0; d * d];
        let (mut s1, mut s2) = (0.0, 0.0);
        for j in self.a..self.b {
            s1 += fro(&base.increment(j, j + 1));
            self.lift.step_area_into(j, &mut area);
            s2 += fro(&area);
        }
        (s1, s2)
    }
}

/// `λ C` for a current `C`.
pub struct ScaledCurrent<'a> {
    pub inner: &'a dyn FourierCurrent,
    pub factor: f64,
}

impl FourierCurrent for ScaledCurrent<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn fourier(&self, k: &[f64], omegas: &[f64], out: &mut [Complex64]) {
        self.inner.fourier(k, omegas, out);
        out.iter_mut().for_each(|v| *v *= self.factor);
    }
    fn period_mean(&self, k: &[f64]) -> f64 {
        self.factor * self.factor * self.inner.period_mean(k)
    }
    fn frequency_period(&self) -> f64 {
        self.inner.frequency_period()
    }
    fn masses(&self) -> (f64, f64) {
        let (a, b) = self.inner.masses();
        (self.factor.abs() * a, self.factor.abs() * b)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairingConfig {
    /// Half-width of the `k` box per axis; `6/σ` when absent.
    pub k_box: Option<f64>,
    /// Half-width of the `ϖ` box; `40/ℓ` when absent.
    pub omega_box: Option<f64>,
    pub k_points: usize,
    pub omega_points: usize,
}

impl Default for PairingConfig {
    fn default() -> Self {
        PairingConfig { k_box: None, omega_box: None, k_points: 64, omega_points: 64 }
    }
}

impl PairingConfig {
    /// Resolution fine enough that trapezoid images in `x` and `t` fall
    /// beyond the support of `W` for paths of the given duration and spatial range.
    pub fn resolved(mut self, w: &PairPotential, duration: f64, spatial_range: f64) -> Self {
        let kb = self.k_box.unwrap_or(6.0 / w.sigma());
        let ob = self.omega_box.unwrap_or(40.0 / w.ell());
        let hk = 2.0 * std::f64::consts::PI / (spatial_range + 14.0 * w.sigma());
        let ho = 2.0 * std::f64::consts::PI / (duration + 36.0 * w.ell());
        self.k_points = self.k_points.max((2.0 * kb / hk).ceil() as usize + 1);
        self.omega_points = self.omega_points.max((2.0 * ob / ho).ceil() as usize + 1);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pairing {
    /// Trapezoid quadrature over the truncated box.
    pub value: f64,
    /// Bound on the contribution from outside the box.
    pub tail_bound: f64,
    /// Midpoint estimate of the contribution from `|ϖ|` beyond the box.
    pub omega_tail_estimate: f64,
}

fn grid(half: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let n = n.max(2);
    let h = 2.0 * half / (n - 1) as f64;
    let nodes = (0..n).map(|i| -half + h * i as f64).collect();
    let w = (0..n).map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h }).collect();
    (nodes, w)
}

fn erfc(x: f64) -> f64 {
    // Numerical Recipes erfcc, relative error below 1.2e-7
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let r = t
        * (-z * z - 1.26551223
            + t * (1.00002368
                + t * (0.37409196 + t * (0.09678418 + t * (-0.18628806 + t * (0.27886807 + t * (-1.13520398 + t * (1.48851587 + t * (-0.82215223 + t * 0.17087277)))))))))
            .exp();
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}

/// `⟨a, b⟩_W = (2π)^{-(d+1)} ∫∫ Ŵ(k, ϖ) Σ_c a(ψ_{k,ϖ} e_c) conj(b(ψ_{k,ϖ} e_c)) dk dϖ`.
pub fn pair_w(a: &dyn FourierCurrent, b: &dyn FourierCurrent, w: &PairPotential, cfg: &PairingConfig) -> Result<Pairing> {
    use rayon::prelude::*;
    let d = a.dim();
    if b.dim() != d {
        return Err(Error::spec("paired currents differ in dimension"));
    }
    if d > 3 {
        return Err(Error::SizeLimit("pairing quadrature supports d <= 3".into()));
    }
    let kb = cfg.k_box.unwrap_or(6.0 / w.sigma());
    let ob = cfg.omega_box.unwrap_or(40.0 / w.ell());
    let (kn, kw) = grid(kb, cfg.k_points);
    let (on, ow) = grid(ob, cfg.omega_points);
    let nk = kn.len();
    let total = nk.pow(d as u32);
    let same = std::ptr::addr_eq(a as *const dyn FourierCurrent, b as *const dyn FourierCurrent);
    let ell = w.ell();
    let lor = |om: f64| 2.0 * ell / (1.0 + ell * ell * om * om);
    let big_l = |om: f64| 2.0 * (std::f64::consts::FRAC_PI_2 - (ell * om).atan());

    let parts: Vec<(f64, f64, f64)> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let mut k = vec![0.0; d];
            let mut wk = 1.0;
            let mut r = idx;
            for c in 0..d {
                k[c] = kn[r % nk];
                wk *= kw[r % nk];
                r /= nk;
            }
            let gk = w.fourier(&k, 0.0) / (2.0 * ell);
            let mut fa = vec![Complex64::new(0.0, 0.0); on.len() * d];
            a.fourier(&k, &on, &mut fa);
            let fb = if same {
                None
            } else {
                let mut v = vec![Complex64::new(0.0, 0.0); on.len() * d];
                b.fourier(&k, &on, &mut v);
                Some(v)
            };
            let fbr = fb.as_ref().unwrap_or(&fa);
            let mut s = 0.0;
            for m in 0..on.len() {
                let mut re = 0.0;
                for c in 0..d {
                    re += (fa[m * d + c] * fbr[m * d + c].conj()).re;
                }
                s += ow[m] * lor(on[m]) * re;
            }
            // ϖ tails per current: bracket over whole periods of |C|²
            let tails = |x: &dyn FourierCurrent| {
                let p = x.frequency_period();
                let mean = x.period_mean(&k);
                (2.0 * (big_l(ob) + lor(ob) * p) * mean, 2.0 * big_l(ob) * mean)
            };
            let (ua, ea) = tails(a);
            let (ub, eb) = if same { (ua, ea) } else { tails(b) };
            (wk * gk * s, wk * gk * 0.5 * (ua + ub), wk * gk * 0.5 * (ea + eb))
        })
        .collect();
    let norm = (2.0 * std::f64::consts::PI).powi(-(d as i32 + 1));
    let value = norm * parts.iter().map(|p| p.0).sum::<f64>();
    let omega_tail = norm * parts.iter().map(|p| p.1).sum::<f64>();
    let omega_tail_estimate = norm * parts.iter().map(|p| p.2).sum::<f64>();

    // k outside the box, all ϖ
    let amp = w.amplitude();
    let sig = w.sigma();
    let pk = d as f64 * erfc(kb * sig / std::f64::consts::SQRT_2);
    let dd = d as f64;
    let k_tail = |x: &dyn FourierCurrent| {
        let (s1, s2) = x.masses();
        amp * (2.0 * s1 * s1 * pk + 2.0 * s2 * s2 * ((dd * dd + 2.0 * dd) * pk).sqrt() / (sig * sig))
    };
    let kt = 0.5 * (k_tail(a) + k_tail(b));
    Ok(Pairing { value, tail_bound: omega_tail + kt, omega_tail_estimate })
}
