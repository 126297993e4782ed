use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::PairPotential;

/// Time-dependent vector field `φ: [s, t] × R^d → R^d`.
///
/// Layouts: `jacobian[i * d + j] = ∂_i φ_j`,
/// `hessian[(i * d + k) * d + j] = ∂_i ∂_k φ_j`.
pub trait VectorField: Send + Sync {
    fn value(&self, t: f64, x: &[f64], out: &mut [f64]);
    fn jacobian(&self, t: f64, x: &[f64], out: &mut [f64]);
    fn hessian(&self, t: f64, x: &[f64], out: &mut [f64]);

    /// Hölder exponent of `t ↦ φ(t, ·)`.
    fn time_exponent(&self) -> f64 {
        1.0
    }

    fn divergence(&self, t: f64, x: &[f64]) -> f64 {
        let d = x.len();
        let mut j = vec![0.0; d * d];
        self.jacobian(t, x, &mut j);
        (0..d).map(|i| j[i * d + i]).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FourierPhase {
    Cos,
    Sin,
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TestField {
    /// `cos(k·x + ϖ t)` (or `sin`) in one component.
    Fourier { k: Vec<f64>, omega: f64, component: usize, phase: FourierPhase },
    /// `a exp(-|x - c|² / 2w²)`.
    GaussianEnvelope { center: Vec<f64>, width: f64, amplitude: Vec<f64> },
    /// `φ_k(ξ) = ξ^from δ_{k, to}`.
    LinearCoordinate { from: usize, to: usize },
    Constant { value: Vec<f64> },
    /// `φ_c(u, y) = W(x - y, t - u) δ_{c, component}`.
    TranslatedPairPotential { w: PairPotential, x: Vec<f64>, t: f64, component: usize },
    Scaled { factor: f64, field: Box<TestField> },
    Sum { fields: Vec<TestField> },
    #[serde(skip)]
    Custom(Arc<dyn VectorField>),
}

impl std::fmt::Debug for TestField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TestField::Custom(_) => f.write_str("Custom(..)"),
            other => write!(f, "{}", serde_json::to_string(other).unwrap_or_default()),
        }
    }
}

impl TestField {
    /// The rotation field `(-ξ₂, ξ₁)` in the plane.
    pub fn rotation() -> TestField {
        TestField::Sum {
            fields: vec![
                TestField::Scaled { factor: -1.0, field: Box::new(TestField::LinearCoordinate { from: 1, to: 0 }) },
                TestField::LinearCoordinate { from: 0, to: 1 },
            ],
        }
    }

    pub fn scaled(self, factor: f64) -> TestField {
        TestField::Scaled { factor, field: Box::new(self) }
    }

    /// Checks indices and vector lengths against the path dimension.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let len = |v: &[f64], what: &str| {
            if v.len() != dim || v.iter().any(|c| !c.is_finite()) {
                Err(Error::spec(format!("{what} must have {dim} finite entries")))
            } else {
                Ok(())
            }
        };
        let index = |i: usize| if i < dim { Ok(()) } else { Err(Error::spec(format!("component {i} outside dimension {dim}"))) };
        match self {
            TestField::Fourier { k, omega, component, .. } => {
                len(k, "wave vector")?;
                if !omega.is_finite() {
                    return Err(Error::spec("frequency must be finite"));
                }
                index(*component)
            }
            TestField::GaussianEnvelope { center, width, amplitude } => {
                len(center, "centre")?;
                len(amplitude, "amplitude")?;
                if !(*width > 0.0) {
                    return Err(Error::spec("envelope width must be positive"));
                }
                Ok(())
            }
            TestField::LinearCoordinate { from, to } => index(*from).and(index(*to)),
            TestField::Constant { value } => len(value, "constant"),
            TestField::TranslatedPairPotential { w, x, component, .. } => {
                w.validate()?;
                len(x, "translation")?;
                index(*component)
            }
            TestField::Scaled { factor, field } => {
                if !factor.is_finite() {
                    return Err(Error::spec("scale factor must be finite"));
                }
                field.validate(dim)
            }
            TestField::Sum { fields } => fields.iter().try_for_each(|f| f.validate(dim)),
            TestField::Custom(_) => Ok(()),
        }
    }
}

fn zero(out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
}

impl VectorField for TestField {
    fn value(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let d = x.len();
        match self {
            TestField::Fourier { k, omega, component, phase } => {
                zero(out);
                let arg = dot(k, x) + omega * t;
                out[*component] = match phase {
                    FourierPhase::Cos => arg.cos(),
                    FourierPhase::Sin => arg.sin(),
                };
            }
            TestField::GaussianEnvelope { center, width, amplitude } => {
                let g = gauss(x, center, *width);
                for j in 0..d {
                    out[j] = amplitude[j] * g;
                }
            }
            TestField::LinearCoordinate { from, to } => {
                zero(out);
                out[*to] = x[*from];
            }
            TestField::Constant { value } => out.copy_from_slice(value),
            TestField::TranslatedPairPotential { w, x: x0, t: t0, component } => {
                zero(out);
                let y: Vec<f64> = x0.iter().zip(x).map(|(a, b)| a - b).collect();
                out[*component] = w.value(&y, t0 - t);
            }
            TestField::Scaled { factor, field } => {
                field.value(t, x, out);
                out.iter_mut().for_each(|v| *v *= factor);
            }
            TestField::Sum { fields } => {
                zero(out);
                let mut tmp = vec![0.0; out.len()];
                for f in fields {
                    f.value(t, x, &mut tmp);
                    out.iter_mut().zip(&tmp).for_each(|(o, v)| *o += v);
                }
            }
            TestField::Custom(f) => f.value(t, x, out),
        }
    }

    fn jacobian(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let d = x.len();
        match self {
            TestField::Fourier { k, omega, component, phase } => {
                zero(out);
                let arg = dot(k, x) + omega * t;
                let dv = match phase {
                    FourierPhase::Cos => -arg.sin(),
                    FourierPhase::Sin => arg.cos(),
                };
                for i in 0..d {
                    out[i * d + component] = k[i] * dv;
                }
            }
            TestField::GaussianEnvelope { center, width, amplitude } => {
                let g = gauss(x, center, *width);
                let w2 = width * width;
                for i in 0..d {
                    let gi = -(x[i] - center[i]) / w2 * g;
                    for j in 0..d {
                        out[i * d + j] = amplitude[j] * gi;
                    }
                }
            }
            TestField::LinearCoordinate { from, to } => {
                zero(out);
                out[from * d + to] = 1.0;
            }
            TestField::Constant { .. } => zero(out),
            TestField::TranslatedPairPotential { w, x: x0, t: t0, component } => {
                zero(out);
                let y: Vec<f64> = x0.iter().zip(x).map(|(a, b)| a - b).collect();
                let mut g = vec![0.0; d];
                w.gradient(&y, t0 - t, &mut g);
                for i in 0..d {
                    out[i * d + component] = -g[i];
                }
            }
            TestField::Scaled { factor, field } => {
                field.jacobian(t, x, out);
                out.iter_mut().for_each(|v| *v *= factor);
            }
            TestField::Sum { fields } => {
                zero(out);
                let mut tmp = vec![0.0; out.len()];
                for f in fields {
                    f.jacobian(t, x, &mut tmp);
                    out.iter_mut().zip(&tmp).for_each(|(o, v)| *o += v);
                }
            }
            TestField::Custom(f) => f.jacobian(t, x, out),
        }
    }

    fn hessian(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let d = x.len();
        match self {
            TestField::Fourier { k, omega, component, phase } => {
                zero(out);
                let arg = dot(k, x) + omega * t;
                let dv = match phase {
                    FourierPhase::Cos => -arg.cos(),
                    FourierPhase::Sin => -arg.sin(),
                };
                for i in 0..d {
                    for m in 0..d {
                        out[(i * d + m) * d + component] = k[i] * k[m] * dv;
                    }
                }
            }
            TestField::GaussianEnvelope { center, width, amplitude } => {
                let g = gauss(x, center, *width);
                let w2 = width * width;
                for i in 0..d {
                    for m in 0..d {
                        let delta = if i == m { 1.0 } else { 0.0 };
                        let h = ((x[i] - center[i]) * (x[m] - center[m]) / (w2 * w2) - delta / w2) * g;
                        for j in 0..d {
                            out[(i * d + m) * d + j] = amplitude[j] * h;
                        }
                    }
                }
            }
            TestField::LinearCoordinate { .. } | TestField::Constant { .. } => zero(out),
            TestField::TranslatedPairPotential { w, x: x0, t: t0, component } => {
                zero(out);
                let y: Vec<f64> = x0.iter().zip(x).map(|(a, b)| a - b).collect();
                let mut h = vec![0.0; d * d];
                w.hessian(&y, t0 - t, &mut h);
                for i in 0..d {
                    for m in 0..d {
                        out[(i * d + m) * d + component] = h[i * d + m];
                    }
                }
            }
            TestField::Scaled { factor, field } => {
                field.hessian(t, x, out);
                out.iter_mut().for_each(|v| *v *= factor);
            }
            TestField::Sum { fields } => {
                zero(out);
                let mut tmp = vec![0.0; out.len()];
                for f in fields {
                    f.hessian(t, x, &mut tmp);
                    out.iter_mut().zip(&tmp).for_each(|(o, v)| *o += v);
                }
            }
            TestField::Custom(f) => f.hessian(t, x, out),
        }
    }

    fn time_exponent(&self) -> f64 {
        match self {
            TestField::Scaled { field, .. } => field.time_exponent(),
            TestField::Sum { fields } => fields.iter().map(|f| f.time_exponent()).fold(1.0, f64::min),
            TestField::Custom(f) => f.time_exponent(),
            _ => 1.0,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn gauss(x: &[f64], c: &[f64], w: f64) -> f64 {
    let r2: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
    (-r2 / (2.0 * w * w)).exp()
}
