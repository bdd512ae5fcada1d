//! Potentials acting through the differential path (polynomials) or the
//! kernel path (decaying analytic forms and tables).

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const MAX_DEGREE: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    /// `sum c[n] x^n`, ascending coefficients.
    Polynomial { coefficients: Vec<f64> },
    /// Values on a uniform table `x0 + i dx`, zero outside.
    Sampled { x0: f64, dx: f64, values: Vec<f64> },
    /// `a exp(-(x - x0)^2 / (2 w^2))`
    Gaussian {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    /// `a / (1 + ((x - x0) / w)^2)`
    Lorentzian {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    /// `a sech^2((x - x0) / w)`
    Sech2 {
        amplitude: f64,
        center: f64,
        width: f64,
    },
}

impl PotentialSpec {
    /// `alpha x^2 / 2`
    pub fn harmonic(alpha: f64) -> Self {
        PotentialSpec::Polynomial {
            coefficients: vec![0.0, 0.0, 0.5 * alpha],
        }
    }

    /// `x^4 + alpha x^3 + beta x^2 + gamma x`
    pub fn quartic(alpha: f64, beta: f64, gamma: f64) -> Self {
        PotentialSpec::Polynomial {
            coefficients: vec![0.0, gamma, beta, alpha, 1.0],
        }
    }

    pub fn zero() -> Self {
        PotentialSpec::Polynomial {
            coefficients: vec![],
        }
    }

    pub fn gaussian(amplitude: f64, center: f64, width: f64) -> Self {
        PotentialSpec::Gaussian {
            amplitude,
            center,
            width,
        }
    }

    pub fn is_polynomial(&self) -> bool {
        matches!(self, PotentialSpec::Polynomial { .. })
    }

    /// Degree with trailing zero coefficients dropped; `None` for non-polynomials.
    pub fn degree(&self) -> Option<usize> {
        match self {
            PotentialSpec::Polynomial { coefficients } => {
                Some(coefficients.iter().rposition(|&c| c != 0.0).unwrap_or(0))
            }
            _ => None,
        }
    }

    /// Polynomial coefficients padded to degree 4.
    pub fn polynomial_coefficients(&self) -> Result<[f64; MAX_DEGREE + 1]> {
        match self {
            PotentialSpec::Polynomial { coefficients } => {
                let deg = self.degree().unwrap_or(0);
                if deg > MAX_DEGREE {
                    return Err(Error::DegreeTooHigh { degree: deg });
                }
                let mut c = [0.0; MAX_DEGREE + 1];
                for (dst, src) in c.iter_mut().zip(coefficients) {
                    *dst = *src;
                }
                Ok(c)
            }
            _ => Err(Error::UnsupportedPotential(
                "only polynomial potentials become differential operators".into(),
            )),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            PotentialSpec::Polynomial { coefficients } => {
                coefficients.iter().rev().fold(0.0, |acc, &c| acc * x + c)
            }
            PotentialSpec::Sampled { x0, dx, values } => {
                let t = (x - x0) / dx;
                if t < 0.0 || values.is_empty() || t > (values.len() - 1) as f64 {
                    return 0.0;
                }
                let i = (t.floor() as usize).min(values.len().saturating_sub(2));
                let f = t - i as f64;
                if values.len() == 1 {
                    return values[0];
                }
                values[i] * (1.0 - f) + values[i + 1] * f
            }
            PotentialSpec::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let z = (x - center) / width;
                amplitude * (-0.5 * z * z).exp()
            }
            PotentialSpec::Lorentzian {
                amplitude,
                center,
                width,
            } => {
                let z = (x - center) / width;
                amplitude / (1.0 + z * z)
            }
            PotentialSpec::Sech2 {
                amplitude,
                center,
                width,
            } => {
                let c = ((x - center) / width).cosh();
                amplitude / (c * c)
            }
        }
    }

    /// `V'(x)`; piecewise-constant slope for tables.
    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            PotentialSpec::Polynomial { coefficients } => coefficients
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (n, &c)| acc * x + n as f64 * c),
            PotentialSpec::Sampled { x0, dx, values } => {
                let t = (x - x0) / dx;
                if values.len() < 2 || t < 0.0 || t > (values.len() - 1) as f64 {
                    return 0.0;
                }
                let i = (t.floor() as usize).min(values.len() - 2);
                (values[i + 1] - values[i]) / dx
            }
            PotentialSpec::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let z = (x - center) / width;
                -amplitude * z / width * (-0.5 * z * z).exp()
            }
            PotentialSpec::Lorentzian {
                amplitude,
                center,
                width,
            } => {
                let z = (x - center) / width;
                -2.0 * amplitude * z / (width * (1.0 + z * z).powi(2))
            }
            PotentialSpec::Sech2 {
                amplitude,
                center,
                width,
            } => {
                let z = (x - center) / width;
                let c = z.cosh();
                -2.0 * amplitude * z.tanh() / (width * c * c)
            }
        }
    }

    /// `K(q) = int exp(-i q x) V(x) dx` in closed form, where one exists.
    pub fn fourier_analytic(&self, q: f64) -> Option<C64> {
        let shift = |x0: f64| C64::from_polar(1.0, -q * x0);
        match *self {
            PotentialSpec::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let s = width;
                Some(
                    shift(center)
                        * (amplitude * s * (2.0 * PI).sqrt() * (-0.5 * s * s * q * q).exp()),
                )
            }
            PotentialSpec::Lorentzian {
                amplitude,
                center,
                width,
            } => Some(shift(center) * (amplitude * PI * width * (-width * q.abs()).exp())),
            PotentialSpec::Sech2 {
                amplitude,
                center,
                width,
            } => {
                let z = 0.5 * PI * q * width;
                let shape = if z.abs() < 1e-8 {
                    2.0 * width * (1.0 - z * z / 6.0)
                } else if z.abs() > 700.0 {
                    0.0
                } else {
                    PI * q * width * width / z.sinh()
                };
                Some(shift(center) * (amplitude * shape))
            }
            _ => None,
        }
    }

    /// Kernel `K(q)`: closed form for named shapes, trapezoid quadrature of the
    /// table for sampled potentials.
    pub fn fourier(&self, q: f64) -> Result<C64> {
        if let Some(k) = self.fourier_analytic(q) {
            return Ok(k);
        }
        match self {
            PotentialSpec::Sampled { x0, dx, values } => {
                let n = values.len();
                let mut acc = C64::new(0.0, 0.0);
                for (i, &v) in values.iter().enumerate() {
                    let w = if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
                    acc += C64::from_polar(w * v, -q * (x0 + i as f64 * dx));
                }
                Ok(acc * *dx)
            }
            PotentialSpec::Polynomial { .. } => Err(Error::UnsupportedPotential(
                "a polynomial potential has no integrable Fourier transform (its kernel is a \
                 sum of derivatives of delta functions); use the differential assembly instead"
                    .into(),
            )),
            _ => unreachable!(),
        }
    }

    /// True when `V(-x) = V(x)`, which makes every kernel real.
    pub fn is_even(&self) -> bool {
        match self {
            PotentialSpec::Polynomial { coefficients } => {
                coefficients.iter().skip(1).step_by(2).all(|&c| c == 0.0)
            }
            PotentialSpec::Sampled { x0, dx, values } => {
                let n = values.len();
                let last = x0 + (n as f64 - 1.0) * dx;
                let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                (x0 + last).abs() < 1e-12 * dx.abs().max(1.0)
                    && (0..n).all(|i| (values[i] - values[n - 1 - i]).abs() <= 1e-14 * scale)
            }
            PotentialSpec::Gaussian { center, .. }
            | PotentialSpec::Lorentzian { center, .. }
            | PotentialSpec::Sech2 { center, .. } => *center == 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trapezoid_ft(v: &PotentialSpec, q: f64, half: f64, n: usize) -> C64 {
        let dx = 2.0 * half / n as f64;
        (0..=n)
            .map(|i| {
                let x = -half + i as f64 * dx;
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                C64::from_polar(w * v.eval(x) * dx, -q * x)
            })
            .sum()
    }

    #[test]
    fn unit_gaussian_transform() {
        let v = PotentialSpec::gaussian(1.0, 0.0, 1.0);
        for q in [0.0, 0.5, 1.3, 3.0] {
            let k = v.fourier(q).unwrap();
            assert!((k.re - (2.0 * PI).sqrt() * (-0.5 * q * q).exp()).abs() < 1e-15);
            assert!(k.im.abs() < 1e-15);
        }
    }

    #[test]
    fn closed_forms_match_quadrature() {
        let shapes = [
            PotentialSpec::gaussian(0.7, 1.0, 0.8),
            PotentialSpec::Sech2 {
                amplitude: 1.3,
                center: -0.4,
                width: 0.9,
            },
            PotentialSpec::Sech2 {
                amplitude: 1.0,
                center: 0.0,
                width: 1.0,
            },
        ];
        for v in &shapes {
            for q in [0.0, 0.3, 1.1, 2.5] {
                let a = v.fourier(q).unwrap();
                let b = trapezoid_ft(v, q, 40.0, 40_000);
                assert!((a - b).norm() < 1e-9, "{v:?} q={q}: {a} vs {b}");
            }
        }
        // slow algebraic tails need a wide window
        let v = PotentialSpec::Lorentzian {
            amplitude: 1.0,
            center: 0.5,
            width: 0.5,
        };
        let a = v.fourier(0.7).unwrap();
        let b = trapezoid_ft(&v, 0.7, 4000.0, 4_000_000);
        assert!((a - b).norm() < 1e-3);
    }

    #[test]
    fn sampled_transform_is_trapezoid() {
        let g = PotentialSpec::gaussian(1.0, 0.0, 1.0);
        let dx = 0.01;
        let values: Vec<f64> = (0..=2000).map(|i| g.eval(-10.0 + i as f64 * dx)).collect();
        let s = PotentialSpec::Sampled {
            x0: -10.0,
            dx,
            values,
        };
        assert!(s.is_even());
        for q in [0.0, 1.0, 2.0] {
            assert!((s.fourier(q).unwrap() - g.fourier(q).unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn derivatives_match_differences() {
        let shapes = [
            PotentialSpec::quartic(0.5, -1.0, 0.25),
            PotentialSpec::gaussian(0.7, 1.0, 0.8),
            PotentialSpec::Lorentzian {
                amplitude: 1.0,
                center: 0.5,
                width: 0.5,
            },
            PotentialSpec::Sech2 {
                amplitude: 1.3,
                center: -0.4,
                width: 0.9,
            },
        ];
        let e = 1e-5;
        for v in &shapes {
            for x in [-1.3, 0.0, 0.4, 2.2] {
                let fd = (v.eval(x + e) - v.eval(x - e)) / (2.0 * e);
                assert!((v.derivative(x) - fd).abs() < 1e-8, "{v:?} at {x}");
            }
        }
    }

    #[test]
    fn polynomial_routing() {
        let v = PotentialSpec::harmonic(1.0);
        assert_eq!(v.degree(), Some(2));
        assert!(v.fourier(0.0).is_err());
        assert_eq!(v.eval(2.0), 2.0);
        let q = PotentialSpec::quartic(0.5, -1.0, 0.25);
        assert_eq!(q.degree(), Some(4));
        assert!(!q.is_even());
        let too_high = PotentialSpec::Polynomial {
            coefficients: vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
        };
        assert!(matches!(
            too_high.polynomial_coefficients(),
            Err(Error::DegreeTooHigh { degree: 5 })
        ));
    }
}
