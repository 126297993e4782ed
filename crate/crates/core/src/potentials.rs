//! External potentials, pair potentials and path energies.

use serde::{Deserialize, Serialize};

use crate::currents::{BoundaryCurrent, WField};
use crate::error::{Error, Result};
use crate::rough::{rough_integral, GridPath, LiftScheme, Step2RoughPath};
use crate::stats::CompensatedSum;

/// External potential `V` of the single-particle Schrödinger operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialExt {
    /// `V = ½|x|² - d/2`: ground state `π^{-d/4} e^{-|x|²/2}`, gap 1.
    HarmonicRef { dim: usize },
    /// `V = c1 |x|^s - c3`.
    ConfiningPower { dim: usize, s: f64, c1: f64, c3: f64 },
}

impl PotentialExt {
    pub fn validate(&self) -> Result<()> {
        match self {
            PotentialExt::HarmonicRef { dim } if *dim == 0 => Err(Error::spec("dimension must be positive")),
            PotentialExt::ConfiningPower { dim, s, c1, .. } => {
                if *dim == 0 || !(*s > 2.0) || !(*c1 > 0.0) {
                    Err(Error::spec("confining power needs dim > 0, s > 2, c1 > 0"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            PotentialExt::HarmonicRef { dim } | PotentialExt::ConfiningPower { dim, .. } => *dim,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        match self {
            PotentialExt::HarmonicRef { dim } => 0.5 * r2 - 0.5 * *dim as f64,
            PotentialExt::ConfiningPower { s, c1, c3, .. } => c1 * r2.sqrt().powf(*s) - c3,
        }
    }

    fn harmonic(&self, what: &str) -> Result<usize> {
        match self {
            PotentialExt::HarmonicRef { dim } => Ok(*dim),
            PotentialExt::ConfiningPower { .. } => Err(Error::Unsupported(format!("{what} is only available in closed form for the harmonic reference"))),
        }
    }

    pub fn ground_state(&self, x: &[f64]) -> Result<f64> {
        let d = self.harmonic("ground state")?;
        let r2: f64 = x.iter().map(|v| v * v).sum();
        Ok(std::f64::consts::PI.powf(-(d as f64) / 4.0) * (-0.5 * r2).exp())
    }

    pub fn ground_energy(&self) -> Result<f64> {
        self.harmonic("ground energy").map(|_| 0.0)
    }

    pub fn spectral_gap(&self) -> Result<f64> {
        self.harmonic("spectral gap").map(|_| 1.0)
    }

    /// Transition density of the ground-state process with respect to `ω = Ψ² dx`.
    pub fn mehler_pi(&self, t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
        let d = self.harmonic("transition density")?;
        if !(t > 0.0) {
            return Err(Error::spec(format!("transition time must be positive, got {t}")));
        }
        if x.len() != d || y.len() != d {
            return Err(Error::spec("point dimension mismatch"));
        }
        Ok(mehler(t, x, y))
    }

    /// `∫_a^b V(X_t) dt` by trapezoid rule on grid indices `a..b`.
    pub fn v_energy(&self, path: &GridPath, a: usize, b: usize) -> Result<f64> {
        path.check_range(a, b)?;
        let mut acc = CompensatedSum::new();
        for j in a..b {
            acc.add(0.5 * (self.value(path.point(j)) + self.value(path.point(j + 1))) * (path.time(j + 1) - path.time(j)));
        }
        Ok(acc.value())
    }
}

/// Mehler kernel of the unit-rate Ornstein-Uhlenbeck process relative to `N(0, ½ I)`.
pub fn mehler(t: f64, x: &[f64], y: &[f64]) -> f64 {
    let q = (-t).exp();
    let q2 = q * q;
    let one = -(-2.0 * t).exp_m1();
    let mut e = 0.0;
    for (a, b) in x.iter().zip(y) {
        e += 2.0 * q * a * b - q2 * (a * a + b * b);
    }
    (e / one).exp() * one.powf(-0.5 * x.len() as f64)
}

/// Translation-invariant pair potential `W(x, t)`, even in both arguments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PairPotential {
    /// `A exp(-|x|²/2σ²) exp(-|t|/ℓ)`.
    GaussExp { amplitude: f64, sigma: f64, ell: f64 },
}

impl Default for PairPotential {
    fn default() -> Self {
        PairPotential::GaussExp { amplitude: 1.0, sigma: 1.0, ell: 0.5 }
    }
}

impl PairPotential {
    pub fn validate(&self) -> Result<()> {
        let PairPotential::GaussExp { amplitude, sigma, ell } = self;
        if !(*amplitude > 0.0 && *sigma > 0.0 && *ell > 0.0) {
            return Err(Error::spec("pair potential parameters must be positive"));
        }
        Ok(())
    }

    pub fn value(&self, x: &[f64], t: f64) -> f64 {
        let PairPotential::GaussExp { amplitude, sigma, ell } = self;
        let r2: f64 = x.iter().map(|v| v * v).sum();
        amplitude * (-r2 / (2.0 * sigma * sigma) - t.abs() / ell).exp()
    }

    pub fn gradient(&self, x: &[f64], t: f64, out: &mut [f64]) {
        let PairPotential::GaussExp { sigma, .. } = self;
        let w = self.value(x, t);
        let s2 = sigma * sigma;
        for i in 0..x.len() {
            out[i] = -x[i] / s2 * w;
        }
    }

    /// `out[i * d + k] = ∂_i ∂_k W`.
    pub fn hessian(&self, x: &[f64], t: f64, out: &mut [f64]) {
        let PairPotential::GaussExp { sigma, .. } = self;
        let d = x.len();
        let w = self.value(x, t);
        let s2 = sigma * sigma;
        for i in 0..d {
            for k in 0..d {
                let delta = if i == k { 1.0 } else { 0.0 };
                out[i * d + k] = (x[i] * x[k] / (s2 * s2) - delta / s2) * w;
            }
        }
    }

    /// `out[(i * d + k) * d + m] = ∂_i ∂_k ∂_m W`.
    pub fn third(&self, x: &[f64], t: f64, out: &mut [f64]) {
        let PairPotential::GaussExp { sigma, .. } = self;
        let d = x.len();
        let w = self.value(x, t);
        let s2 = sigma * sigma;
        let s4 = s2 * s2;
        let dl = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        for i in 0..d {
            for k in 0..d {
                for m in 0..d {
                    let v = -x[i] * x[k] * x[m] / (s4 * s2) + (dl(i, k) * x[m] + dl(i, m) * x[k] + dl(k, m) * x[i]) / s4;
                    out[(i * d + k) * d + m] = v * w;
                }
            }
        }
    }

    /// `Ŵ(k, ϖ) = ∫ W(x, t) e^{-i(k·x + ϖt)} dx dt`.
    pub fn fourier(&self, k: &[f64], omega: f64) -> f64 {
        let PairPotential::GaussExp { amplitude, sigma, ell } = self;
        let d = k.len() as f64;
        let k2: f64 = k.iter().map(|v| v * v).sum();
        amplitude
            * (2.0 * std::f64::consts::PI).powf(0.5 * d)
            * sigma.powf(d)
            * (-0.5 * sigma * sigma * k2).exp()
            * 2.0
            * ell
            / (1.0 + ell * ell * omega * omega)
    }

    pub fn sigma(&self) -> f64 {
        let PairPotential::GaussExp { sigma, .. } = self;
        *sigma
    }

    pub fn ell(&self) -> f64 {
        let PairPotential::GaussExp { ell, .. } = self;
        *ell
    }

    pub fn amplitude(&self) -> f64 {
        let PairPotential::GaussExp { amplitude, .. } = self;
        *amplitude
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyConfig {
    pub ext: PotentialExt,
    pub w: PairPotential,
    pub lambda: f64,
}

fn require_ito(rp: &Step2RoughPath) -> Result<()> {
    if rp.scheme() != LiftScheme::Ito {
        return Err(Error::Unsupported("pair energies are defined on Itô lifts".into()));
    }
    Ok(())
}

/// Cross energy `Σ_{p in A} Σ_{q in B} ΔX_p · ΔY_q W(X_p - Y_q, t_p - u_q)` between
/// step ranges of two grid paths.
pub fn cross_energy(x: &GridPath, xr: (usize, usize), y: &GridPath, yr: (usize, usize), w: &PairPotential) -> f64 {
    let d = x.dim();
    let mut diff = vec![0.0; d];
    let mut acc = CompensatedSum::new();
    for p in xr.0..xr.1 {
        let (xp, xp1, tp) = (x.point(p), x.point(p + 1), x.time(p));
        let mut row = 0.0;
        for q in yr.0..yr.1 {
            let (yq, yq1) = (y.point(q), y.point(q + 1));
            let mut dot = 0.0;
            for i in 0..d {
                diff[i] = xp[i] - yq[i];
                dot += (xp1[i] - xp[i]) * (yq1[i] - yq[i]);
            }
            row += dot * w.value(&diff, tp - y.time(q));
        }
        acc.add(row);
    }
    acc.value()
}

/// `½ Σ_{p,q} ΔX_p · ΔX_q W(X_p - X_q, t_p - t_q)` over steps `a..b`.
pub fn self_energy(x: &GridPath, a: usize, b: usize, w: &PairPotential) -> f64 {
    let d = x.dim();
    let mut diff = vec![0.0; d];
    let w0 = w.value(&diff, 0.0);
    let mut acc = CompensatedSum::new();
    for p in a..b {
        let (xp, xp1, tp) = (x.point(p), x.point(p + 1), x.time(p));
        let mut sq = 0.0;
        for i in 0..d {
            sq += (xp1[i] - xp[i]) * (xp1[i] - xp[i]);
        }
        let mut row = 0.5 * sq * w0;
        for q in p + 1..b {
            let (xq, xq1) = (x.point(q), x.point(q + 1));
            let mut dot = 0.0;
            for i in 0..d {
                diff[i] = xp[i] - xq[i];
                dot += (xp1[i] - xp[i]) * (xq1[i] - xq[i]);
            }
            row += dot * w.value(&diff, tp - x.time(q));
        }
        acc.add(row);
    }
    acc.value()
}

/// `W_{[a,b]} = ½ ∫∫ W(X_u - X_v, u - v) dX_u · dX_v` on the grid.
pub fn w_energy(rp: &Step2RoughPath, w: &PairPotential, a: usize, b: usize) -> Result<f64> {
    require_ito(rp)?;
    rp.base().check_range(a, b)?;
    Ok(self_energy(rp.base(), a, b, w))
}

/// Contiguous path made of `N` dyadic segments, one per partition interval.
#[derive(Clone, Debug)]
pub struct SegmentedPath {
    segments: Vec<GridPath>,
}

impl SegmentedPath {
    pub fn new(segments: Vec<GridPath>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidPath("no segments".into()));
        }
        for w in segments.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if a.dim() != b.dim() || a.last() != b.first() || (a.interval().1 - b.interval().0).abs() > 1e-12 * (1.0 + a.interval().1.abs()) {
                return Err(Error::InvalidPath("segments must be contiguous".into()));
            }
        }
        Ok(SegmentedPath { segments })
    }

    /// Splits a dyadic path into `n` equal segments (`n` a power of two).
    pub fn split(path: &GridPath, n: usize) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() || n > path.n_steps() {
            return Err(Error::spec(format!("cannot split {} steps into {n} dyadic segments", path.n_steps())));
        }
        let m = path.n_steps() / n;
        SegmentedPath::new((0..n).map(|k| path.window(k * m, (k + 1) * m)).collect::<Result<_>>()?)
    }

    pub fn segments(&self) -> &[GridPath] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// `J_ij = ½ Σ_{p in τ_i} Σ_{q in τ_j} ΔX_p · ΔX_q W(X_p - X_q, t_p - t_q)`,
    /// so that `W_T = Σ_{i,j} J_ij`.
    pub fn j(&self, i: usize, j: usize, w: &PairPotential) -> f64 {
        if i == j {
            let s = &self.segments[i];
            self_energy(s, 0, s.n_steps(), w)
        } else {
            let (a, b) = (&self.segments[i], &self.segments[j]);
            0.5 * cross_energy(a, (0, a.n_steps()), b, (0, b.n_steps()), w)
        }
    }

    /// Total `W_T` as one double sum over all steps.
    pub fn total_energy(&self, w: &PairPotential) -> f64 {
        let mut acc = CompensatedSum::new();
        for i in 0..self.len() {
            acc.add(self.j(i, i, w));
            for j in i + 1..self.len() {
                acc.add(2.0 * self.j(i, j, w));
            }
        }
        acc.value()
    }
}

/// Share of the self energy `J_kk` carried by the adjacent pair containing `k`.
fn diagonal_share(k: usize, n: usize) -> f64 {
    let deg = (k > 0) as usize + (k + 1 < n) as usize;
    1.0 / deg as f64
}

/// Pair energy `W_{τ_i τ_j}` given the `J` entries it needs.
///
/// Cross terms `J_ij + J_ji`; adjacent pairs also carry the self energy of each
/// member divided by the number of adjacent pairs that member belongs to.
/// Summing over `i < j` reproduces `W_T` for every `N >= 2`.
pub fn allocate_pair(i: usize, j: usize, n: usize, jij: f64, jii: f64, jjj: f64) -> f64 {
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    let mut e = 2.0 * jij;
    if j == i + 1 {
        e += jii * diagonal_share(i, n) + jjj * diagonal_share(j, n);
    }
    e
}

/// True when both edge intervals belong to the same adjacent pair.
pub fn edge_rules_overlap(n: usize) -> bool {
    n == 2
}

pub fn w_pair_energy(path: &SegmentedPath, w: &PairPotential, i: usize, j: usize) -> Result<f64> {
    let n = path.len();
    if n < 2 || i == j || i >= n || j >= n {
        return Err(Error::spec(format!("pair ({i}, {j}) is not a pair of distinct intervals among {n}")));
    }
    let adjacent = i.abs_diff(j) == 1;
    let (jii, jjj) = if adjacent { (path.j(i, i, w), path.j(j, j, w)) } else { (0.0, 0.0) };
    Ok(allocate_pair(i, j, n, path.j(i, j, w), jii, jjj))
}

/// All pair energies, indexed `[i * n + j]` for `i < j`.
pub fn pair_energy_table(path: &SegmentedPath, w: &PairPotential) -> Vec<f64> {
    let n = path.len();
    let diag: Vec<f64> = (0..n).map(|k| path.j(k, k, w)).collect();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            out[i * n + j] = allocate_pair(i, j, n, path.j(i, j, w), diag[i], diag[j]);
        }
    }
    out
}

/// `∫_a^b w^{C_Y}(t, X_t) · dX_t` for the boundary current `bc`.
pub fn w_boundary_energy(rp: &Step2RoughPath, bc: &BoundaryCurrent, w: &PairPotential, a: usize, b: usize) -> Result<f64> {
    require_ito(rp)?;
    rp.base().check_range(a, b)?;
    let (s, t) = (rp.base().time(a), rp.base().time(b));
    bc.check_sides(s, t)?;
    let field = WField::from_boundary(bc, w.clone());
    rough_integral(rp, &field, a, b)
}
