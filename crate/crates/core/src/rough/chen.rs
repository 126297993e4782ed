use super::Step2RoughPath;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChenReport {
    /// `max |𝕏_st - 𝕏_su - 𝕏_ut - X_su ⊗ X_ut|` over entries and triples.
    pub max_abs: f64,
    pub triples: u64,
}

impl ChenReport {
    /// Upper bound for `|defect| / (|X_su| |X_ut| + 1)` in Frobenius norm.
    pub fn relative_bound(&self, dim: usize) -> f64 {
        dim as f64 * self.max_abs
    }
}

const MAX_POINTS: usize = 1 << 13;

/// Chen defect over every grid triple `s < u < t`, blocked over `s` and `t`.
pub fn chen_defect_max(rp: &Step2RoughPath) -> Result<ChenReport> {
    let n = rp.base().n_points();
    if n > MAX_POINTS {
        return Err(Error::SizeLimit(format!("{n} points exceed the triple scan limit {MAX_POINTS}")));
    }
    let d = rp.dim();
    let (a, x) = tables(rp);
    let max_abs = scan(&a, &x, n, d);
    let nn = n as u64;
    let triples = if nn >= 3 { nn * (nn - 1) * (nn - 2) / 6 } else { 0 };
    Ok(ChenReport { max_abs, triples })
}

/// `a[c][s * n + t] = 𝕏^c_{st}` and `x[i][t] = X^i_t`.
fn tables(rp: &Step2RoughPath) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = rp.base().n_points();
    let d = rp.dim();
    let dd = d * d;
    let mut a = vec![vec![0.0; n * n]; dd];
    let mut buf = vec![0.0; dd];
    for s in 0..n {
        for t in s + 1..n {
            rp.area_into(s, t, &mut buf);
            for c in 0..dd {
                a[c][s * n + t] = buf[c];
            }
        }
    }
    let x = (0..d).map(|i| (0..n).map(|j| rp.base().point(j)[i]).collect()).collect();
    (a, x)
}

const LANES: usize = 8;
const S_BLOCK: usize = 32;
const T_CHUNK: usize = 256;

/// Folds `|𝕏_st - 𝕏_su - 𝕏_ut - X_su ⊗ X_ut|` over `t` in a chunk into the
/// lane maxima `acc`, for fixed `s < u`. Returns the max over the ragged tail.
#[inline(always)]
fn run_defect<const D: usize, const DD: usize>(
    acc: &mut [[f64; LANES]; DD],
    row_s: [&[f64]; DD],
    row_u: [&[f64]; DD],
    xt: [&[f64]; D],
    asu: &[f64; DD],
    du: &[f64; D],
    xu: &[f64; D],
) -> f64 {
    let len = row_s[0].len();
    let mut k0 = 0;
    while k0 + LANES <= len {
        let mut dv = [[0.0; LANES]; D];
        for j in 0..D {
            let x = &xt[j][k0..k0 + LANES];
            for l in 0..LANES {
                dv[j][l] = x[l] - xu[j];
            }
        }
        for c in 0..DD {
            let (i, j) = (c / D, c % D);
            let (r1, r2) = (&row_s[c][k0..k0 + LANES], &row_u[c][k0..k0 + LANES]);
            for l in 0..LANES {
                let v = (r1[l] - asu[c] - r2[l] - du[i] * dv[j][l]).abs();
                acc[c][l] = if v > acc[c][l] { v } else { acc[c][l] };
            }
        }
        k0 += LANES;
    }
    let mut m = 0.0f64;
    for k in k0..len {
        for c in 0..DD {
            let (i, j) = (c / D, c % D);
            let v = (row_s[c][k] - asu[c] - row_u[c][k] - du[i] * (xt[j][k] - xu[j])).abs();
            m = if v > m { v } else { m };
        }
    }
    m
}

#[inline(always)]
fn scan_fused<const D: usize, const DD: usize>(a: &[Vec<f64>], x: &[Vec<f64>], n: usize) -> f64 {
    let mut max_abs = 0.0f64;
    let mut acc = [[0.0f64; LANES]; DD];
    for s0 in (0..n).step_by(S_BLOCK) {
        let s1 = (s0 + S_BLOCK).min(n);
        for t0 in (s0 + 2..n).step_by(T_CHUNK) {
            let t1 = (t0 + T_CHUNK).min(n);
            for u in s0 + 1..t1 - 1 {
                let lo = t0.max(u + 1);
                if lo >= t1 {
                    continue;
                }
                let xu: [f64; D] = std::array::from_fn(|i| x[i][u]);
                let row_u: [&[f64]; DD] = std::array::from_fn(|c| &a[c][u * n + lo..u * n + t1]);
                let xt: [&[f64]; D] = std::array::from_fn(|i| &x[i][lo..t1]);
                for s in s0..s1.min(u) {
                    let asu: [f64; DD] = std::array::from_fn(|c| a[c][s * n + u]);
                    let du: [f64; D] = std::array::from_fn(|i| xu[i] - x[i][s]);
                    let row_s: [&[f64]; DD] = std::array::from_fn(|c| &a[c][s * n + lo..s * n + t1]);
                    let tail = run_defect::<D, DD>(&mut acc, row_s, row_u, xt, &asu, &du, &xu);
                    max_abs = if tail > max_abs { tail } else { max_abs };
                }
            }
        }
    }
    acc.iter().flatten().fold(max_abs, |m, v| m.max(*v))
}

#[inline(always)]
fn scan_generic(a: &[Vec<f64>], x: &[Vec<f64>], n: usize, d: usize) -> f64 {
    match d {
        1 => scan_fused::<1, 1>(a, x, n),
        2 => scan_fused::<2, 4>(a, x, n),
        3 => scan_fused::<3, 9>(a, x, n),
        _ => {
            let mut max_abs = 0.0f64;
            for s in 0..n {
                for u in s + 1..n {
                    for t in u + 1..n {
                        for c in 0..d * d {
                            let (i, j) = (c / d, c % d);
                            let v = (a[c][s * n + t] - a[c][s * n + u] - a[c][u * n + t] - (x[i][u] - x[i][s]) * (x[j][t] - x[j][u])).abs();
                            max_abs = max_abs.max(v);
                        }
                    }
                }
            }
            max_abs
        }
    }
}

#[cfg(target_arch = "x86_64")]
mod avx512 {
    use std::arch::x86_64::*;

    const S_OUTER: usize = 256;
    const U_BLOCK: usize = 8;
    const T_INNER: usize = 256;

    #[inline]
    #[target_feature(enable = "avx512f,fma")]
    #[allow(clippy::too_many_arguments)]
    unsafe fn step<const D: usize, const DD: usize>(
        acc: &mut [__m512d; DD],
        m: __mmask8,
        ps: &[*const f64; DD],
        pu: &[*const f64; DD],
        px: &[*const f64; D],
        ndu: &[__m512d; D],
        kv: &[__m512d; DD],
        k: usize,
    ) {
        // SAFETY: the caller guarantees the unmasked lanes are in bounds
        unsafe {
            let xt: [__m512d; D] = std::array::from_fn(|j| _mm512_maskz_loadu_pd(m, px[j].add(k)));
            for c in 0..DD {
                let (i, j) = (c / D, c % D);
                let r = _mm512_sub_pd(_mm512_maskz_loadu_pd(m, ps[c].add(k)), _mm512_maskz_loadu_pd(m, pu[c].add(k)));
                let r = _mm512_add_pd(_mm512_fmadd_pd(ndu[i], xt[j], r), kv[c]);
                acc[c] = _mm512_mask_max_pd(acc[c], m, _mm512_abs_pd(r), acc[c]);
            }
        }
    }

    #[target_feature(enable = "avx512f,fma")]
    unsafe fn fused<const D: usize, const DD: usize>(a: &[Vec<f64>], x: &[Vec<f64>], n: usize) -> f64 {
        let mut acc = [_mm512_setzero_pd(); DD];
        for s0 in (0..n).step_by(S_OUTER) {
            let s1 = (s0 + S_OUTER).min(n);
            for t0 in (s0 + 2..n).step_by(T_INNER) {
                let t1 = (t0 + T_INNER).min(n);
                for u0 in (s0 + 1..t1 - 1).step_by(U_BLOCK) {
                    let u1 = (u0 + U_BLOCK).min(t1 - 1);
                    for s in s0..s1.min(u1 - 1) {
                        for u in u0.max(s + 1)..u1 {
                            let lo = t0.max(u + 1);
                            if lo >= t1 {
                                continue;
                            }
                            let len = t1 - lo;
                            let xu: [f64; D] = std::array::from_fn(|i| x[i][u]);
                            let du: [f64; D] = std::array::from_fn(|i| xu[i] - x[i][s]);
                            let k_v: [__m512d; DD] = std::array::from_fn(|c| _mm512_set1_pd(du[c / D] * xu[c % D] - a[c][s * n + u]));
                            let ndu_v: [__m512d; D] = std::array::from_fn(|i| _mm512_set1_pd(-du[i]));
                            let pu: [*const f64; DD] = std::array::from_fn(|c| a[c][u * n + lo..u * n + t1].as_ptr());
                            let ps: [*const f64; DD] = std::array::from_fn(|c| a[c][s * n + lo..s * n + t1].as_ptr());
                            let px: [*const f64; D] = std::array::from_fn(|i| x[i][lo..t1].as_ptr());
                            let mut k = 0;
                            while k + 8 <= len {
                                // SAFETY: k + 8 <= len and every row slice has length len
                                unsafe { step::<D, DD>(&mut acc, 0xff, &ps, &pu, &px, &ndu_v, &k_v, k) };
                                k += 8;
                            }
                            if k < len {
                                // SAFETY: lanes at or beyond len are masked off and masked loads do not fault
                                unsafe { step::<D, DD>(&mut acc, (1u8 << (len - k)) - 1, &ps, &pu, &px, &ndu_v, &k_v, k) };
                            }
                        }
                    }
                }
            }
        }
        acc.iter().fold(0.0f64, |m, v| m.max(_mm512_reduce_max_pd(*v)))
    }

    /// # Safety
    /// The caller must have detected `avx512f` at runtime.
    #[target_feature(enable = "avx512f,fma")]
    pub(super) unsafe fn scan(a: &[Vec<f64>], x: &[Vec<f64>], n: usize, d: usize) -> Option<f64> {
        // SAFETY: forwarded from the caller
        unsafe {
            match d {
                1 => Some(fused::<1, 1>(a, x, n)),
                2 => Some(fused::<2, 4>(a, x, n)),
                3 => Some(fused::<3, 9>(a, x, n)),
                _ => None,
            }
        }
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn scan_avx2(a: &[Vec<f64>], x: &[Vec<f64>], n: usize, d: usize) -> f64 {
    scan_generic(a, x, n, d)
}

fn scan(a: &[Vec<f64>], x: &[Vec<f64>], n: usize, d: usize) -> f64 {
    #[cfg(target_arch = "x86_64")]
    {
        if std::is_x86_feature_detected!("avx512f") && std::is_x86_feature_detected!("fma") {
            // SAFETY: the feature was detected at runtime
            if let Some(m) = unsafe { avx512::scan(a, x, n, d) } {
                return m;
            }
        }
        if std::is_x86_feature_detected!("avx2") {
            // SAFETY: the feature was detected at runtime
            return unsafe { scan_avx2(a, x, n, d) };
        }
    }
    scan_generic(a, x, n, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rough::{GridPath, LiftScheme};

    fn naive(a: &[Vec<f64>], x: &[Vec<f64>], n: usize, d: usize) -> f64 {
        let mut m = 0.0f64;
        for s in 0..n {
            for u in s + 1..n {
                for t in u + 1..n {
                    for i in 0..d {
                        for j in 0..d {
                            let c = i * d + j;
                            let v = a[c][s * n + t] - a[c][s * n + u] - a[c][u * n + t] - (x[i][u] - x[i][s]) * (x[j][t] - x[j][u]);
                            m = m.max(v.abs());
                        }
                    }
                }
            }
        }
        m
    }

    fn path(d: usize, level: u32) -> Step2RoughPath {
        let p = GridPath::from_fn((0.0, 1.0), level, d, |t, x| {
            for (i, xi) in x.iter_mut().enumerate() {
                *xi = ((31.0 + 5.0 * i as f64) * t).sin() * 1e3;
            }
        })
        .unwrap();
        Step2RoughPath::lift(p, LiftScheme::Ito)
    }

    #[test]
    fn lifted_path_has_roundoff_defect() {
        let rp = path(2, 7);
        let r = chen_defect_max(&rp).unwrap();
        assert_eq!(r.triples, 129 * 128 * 127 / 6);
        assert!(r.max_abs < 1e-8, "{}", r.max_abs);
    }

    #[test]
    fn planted_defects_found_by_every_kernel() {
        for d in 1..=4 {
            let rp = path(d, 6);
            let n = rp.base().n_points();
            let (mut a, x) = tables(&rp);
            for (k, (s, t)) in [(3, 40), (0, 64), (17, 18), (30, 61)].into_iter().enumerate() {
                a[(k * 5) % (d * d)][s * n + t] += 1e-3 * (k + 1) as f64;
            }
            let want = naive(&a, &x, n, d);
            assert!(want > 1e-3);
            for got in [scan(&a, &x, n, d), scan_generic(&a, &x, n, d)] {
                assert!((got - want).abs() <= 1e-9 * want, "d={d}: {got} vs {want}");
            }
        }
    }
}
