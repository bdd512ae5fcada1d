//! Constant-coefficient differential symbols `sum a_n d^n` with `n <= 4`.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::potential::{PotentialSpec, MAX_DEGREE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum StencilOrder {
    /// 3-point first and second differences; third and fourth derivatives as
    /// products of them.
    #[default]
    Second,
    /// 5-point first and second differences. Only for symbols of degree <= 2.
    Fourth,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DifferentialSymbol {
    /// `a[n]` multiplies `d^n / dq^n`.
    pub coefficients: [C64; MAX_DEGREE + 1],
}

fn i_pow(n: usize, sign: f64) -> C64 {
    match n % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, sign),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -sign),
    }
}

impl DifferentialSymbol {
    /// Position polynomial acting in momentum space, `x -> i d/dp`.
    pub fn from_position_potential(v: &PotentialSpec) -> Result<Self> {
        let c = v.polynomial_coefficients()?;
        let mut a = [C64::new(0.0, 0.0); MAX_DEGREE + 1];
        for (n, (dst, &cn)) in a.iter_mut().zip(c.iter()).enumerate() {
            *dst = i_pow(n, 1.0) * cn;
        }
        Ok(DifferentialSymbol { coefficients: a })
    }

    /// Momentum polynomial `sum c[n] p^n` acting in position space, `p -> -i d/dx`.
    pub fn from_momentum_polynomial(c: [f64; MAX_DEGREE + 1]) -> Self {
        let mut a = [C64::new(0.0, 0.0); MAX_DEGREE + 1];
        for (n, (dst, &cn)) in a.iter_mut().zip(c.iter()).enumerate() {
            *dst = i_pow(n, -1.0) * cn;
        }
        DifferentialSymbol { coefficients: a }
    }

    pub fn degree(&self) -> usize {
        self.coefficients
            .iter()
            .rposition(|c| c.norm() != 0.0)
            .unwrap_or(0)
    }

    pub fn check_order(&self, order: StencilOrder) -> Result<()> {
        if order == StencilOrder::Fourth && self.degree() > 2 {
            return Err(Error::DegreeTooHigh {
                degree: self.degree(),
            });
        }
        Ok(())
    }
}

/// Offsets and weights (before dividing by `h^n`) of the first difference.
pub(crate) fn first_difference(order: StencilOrder) -> &'static [(isize, f64)] {
    match order {
        StencilOrder::Second => &[(-1, -0.5), (1, 0.5)],
        StencilOrder::Fourth => &[
            (-2, 1.0 / 12.0),
            (-1, -2.0 / 3.0),
            (1, 2.0 / 3.0),
            (2, -1.0 / 12.0),
        ],
    }
}

pub(crate) fn second_difference(order: StencilOrder) -> &'static [(isize, f64)] {
    match order {
        StencilOrder::Second => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
        StencilOrder::Fourth => &[
            (-2, -1.0 / 12.0),
            (-1, 4.0 / 3.0),
            (0, -5.0 / 2.0),
            (1, 4.0 / 3.0),
            (2, -1.0 / 12.0),
        ],
    }
}
