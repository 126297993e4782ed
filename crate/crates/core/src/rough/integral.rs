use super::{Step2RoughPath, VectorField};
use crate::error::{Error, Result};
use crate::stats::CompensatedSum;

/// Compensated sum `Σ_j [φ(t_j, X_j)·ΔX_j + ∂_iφ_j(t_j, X_j) 𝕏^{ij}_{j,j+1}]`
/// over grid steps `a..b`.
pub fn rough_integral<F: VectorField + ?Sized>(rp: &Step2RoughPath, phi: &F, a: usize, b: usize) -> Result<f64> {
    rp.base().check_range(a, b)?;
    Ok(coarse_sum(rp, phi, a, b, 1))
}

fn coarse_sum<F: VectorField + ?Sized>(rp: &Step2RoughPath, phi: &F, a: usize, b: usize, stride: usize) -> f64 {
    let d = rp.dim();
    let base = rp.base();
    let mut v = vec![0.0; d];
    let mut jac = vec![0.0; d * d];
    let mut area = vec![0.0; d * d];
    let mut acc = CompensatedSum::new();
    let mut j = a;
    while j < b {
        let k = (j + stride).min(b);
        let (t, x, y) = (base.time(j), base.point(j), base.point(k));
        phi.value(t, x, &mut v);
        let mut term = 0.0;
        for i in 0..d {
            term += v[i] * (y[i] - x[i]);
        }
        if k == j + 1 {
            rp.step_area_into(j, &mut area);
        } else {
            rp.area_into(j, k, &mut area);
        }
        if area.iter().any(|c| *c != 0.0) {
            phi.jacobian(t, x, &mut jac);
            for c in 0..d * d {
                term += jac[c] * area[c];
            }
        }
        acc.add(term);
        j = k;
    }
    acc.value()
}

/// `|S_L - S_{L-1}|` for consecutive entries of `levels`, where `S_L` is the
/// compensated sum on the level-`L` subgrid of the whole path.
pub fn dyadic_convergence_profile<F: VectorField + ?Sized>(rp: &Step2RoughPath, phi: &F, levels: &[u32]) -> Result<Vec<f64>> {
    let top = rp.base().level();
    if levels.iter().any(|l| *l > top) {
        return Err(Error::InvalidPath(format!("profile level above path level {top}")));
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::spec("profile levels must be strictly increasing"));
    }
    let n = rp.n_steps();
    let sums: Vec<f64> = levels.iter().map(|l| coarse_sum(rp, phi, 0, n, 1usize << (top - l))).collect();
    Ok(sums.windows(2).map(|w| (w[1] - w[0]).abs()).collect())
}

/// `|I_strat - I_ito - ½ ∫ div φ dt|` with the time integral by trapezoid rule
/// on the grid.
pub fn ito_strat_defect<F: VectorField + ?Sized>(ito: &Step2RoughPath, strat: &Step2RoughPath, phi: &F, a: usize, b: usize) -> Result<f64> {
    ito.same_base(strat)?;
    let base = ito.base();
    base.check_range(a, b)?;
    let i_ito = rough_integral(ito, phi, a, b)?;
    let i_str = rough_integral(strat, phi, a, b)?;
    let mut corr = CompensatedSum::new();
    let mut prev = phi.divergence(base.time(a), base.point(a));
    for j in a..b {
        let next = phi.divergence(base.time(j + 1), base.point(j + 1));
        corr.add(0.5 * (prev + next) * (base.time(j + 1) - base.time(j)));
        prev = next;
    }
    Ok((i_str - i_ito - 0.5 * corr.value()).abs())
}

/// Rejects fields whose time regularity cannot be integrated against a
/// `gamma`-Hölder path.
pub fn check_regularity<F: VectorField + ?Sized>(phi: &F, gamma: f64) -> Result<()> {
    if phi.time_exponent() + gamma <= 1.0 {
        return Err(Error::spec(format!(
            "time exponent {} plus path exponent {} must exceed 1",
            phi.time_exponent(),
            gamma
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rough::{FourierPhase, GridPath, LiftScheme, TestField};

    fn circle(level: u32) -> GridPath {
        GridPath::from_fn((0.0, std::f64::consts::PI), level, 2, |t, x| {
            x[0] = t.cos();
            x[1] = t.sin();
        })
        .unwrap()
    }

    #[test]
    fn circle_rotation_integral() {
        let rp = Step2RoughPath::lift(circle(12), LiftScheme::Ito);
        let v = rough_integral(&rp, &TestField::rotation(), 0, rp.n_steps()).unwrap();
        assert!((v - std::f64::consts::PI).abs() < 1e-6);
    }

    #[test]
    fn constant_field_gives_increment() {
        let p = circle(6);
        let rp = Step2RoughPath::lift(p.clone(), LiftScheme::StratTrapezoid);
        let phi = TestField::Constant { value: vec![2.0, -0.5] };
        let v = rough_integral(&rp, &phi, 5, 40).unwrap();
        let inc = p.increment(5, 40);
        assert!((v - (2.0 * inc[0] - 0.5 * inc[1])).abs() < 1e-14);
    }

    #[test]
    fn zero_field_vanishes_and_empty_range() {
        let rp = Step2RoughPath::lift(circle(5), LiftScheme::StratExact);
        let phi = TestField::Constant { value: vec![0.0, 0.0] };
        assert_eq!(rough_integral(&rp, &phi, 0, 32).unwrap(), 0.0);
        assert_eq!(rough_integral(&rp, &TestField::rotation(), 7, 7).unwrap(), 0.0);
        assert!(rough_integral(&rp, &phi, 0, 33).is_err());
    }

    #[test]
    fn additive_over_adjacent_ranges() {
        let rp = Step2RoughPath::lift(circle(7), LiftScheme::StratTrapezoid);
        let phi = TestField::Fourier { k: vec![1.0, 2.0], omega: 0.3, component: 0, phase: FourierPhase::Sin };
        let whole = rough_integral(&rp, &phi, 3, 100).unwrap();
        let split = rough_integral(&rp, &phi, 3, 41).unwrap() + rough_integral(&rp, &phi, 41, 100).unwrap();
        assert!((whole - split).abs() < 1e-13);
    }

    #[test]
    fn smooth_path_converges_at_first_order() {
        let phi = TestField::GaussianEnvelope { center: vec![0.5, 0.5], width: 0.7, amplitude: vec![1.0, 0.5] };
        let exact = {
            let rp = Step2RoughPath::lift(circle(16), LiftScheme::StratTrapezoid);
            rough_integral(&rp, &phi, 0, rp.n_steps()).unwrap()
        };
        for level in [6, 8, 10] {
            let rp = Step2RoughPath::lift(circle(level), LiftScheme::Ito);
            let err = (rough_integral(&rp, &phi, 0, rp.n_steps()).unwrap() - exact).abs();
            assert!(err <= 4.0 * 2f64.powi(-(level as i32)), "level {level}: {err}");
        }
    }

    #[test]
    fn strat_exact_linear_defect_vanishes() {
        let p = circle(8);
        let ito = Step2RoughPath::lift(p.clone(), LiftScheme::Ito);
        let st = Step2RoughPath::lift(p, LiftScheme::StratExact);
        for (i, j) in [(0, 0), (0, 1), (1, 1)] {
            let phi = TestField::LinearCoordinate { from: i, to: j };
            assert!(ito_strat_defect(&ito, &st, &phi, 0, 256).unwrap() < 1e-12);
        }
        let other = Step2RoughPath::lift(circle(7), LiftScheme::StratExact);
        assert!(ito_strat_defect(&ito, &other, &TestField::rotation(), 0, 1).is_err());
    }

    #[test]
    fn profile_of_smooth_field_on_smooth_path() {
        let rp = Step2RoughPath::lift(circle(10), LiftScheme::StratTrapezoid);
        let phi = TestField::Fourier { k: vec![2.0, 1.0], omega: 0.0, component: 0, phase: FourierPhase::Cos };
        let prof = dyadic_convergence_profile(&rp, &phi, &[4, 5, 6, 7, 8]).unwrap();
        assert_eq!(prof.len(), 4);
        for w in prof.windows(2) {
            assert!(w[1] < w[0]);
        }
        assert!(dyadic_convergence_profile(&rp, &TestField::rotation(), &[4, 11]).is_err());
    }

    #[test]
    fn regularity_gate() {
        assert!(check_regularity(&TestField::rotation(), 0.4).is_ok());
        assert!(check_regularity(&TestField::rotation(), 0.0).is_err());
    }
}
