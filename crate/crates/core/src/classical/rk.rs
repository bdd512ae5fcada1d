//! Dormand-Prince 5(4) steps for autonomous systems.

use crate::error::Result;

const C: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

/// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// One step of size `h`: the fifth-order solution and the error estimate.
pub(crate) fn step<const N: usize>(
    f: &dyn Fn(&[f64; N]) -> Result<[f64; N]>,
    y: &[f64; N],
    h: f64,
) -> Result<([f64; N], [f64; N])> {
    let mut k = [[0.0; N]; 7];
    k[0] = f(y)?;
    for s in 0..6 {
        let mut stage = *y;
        for (i, v) in stage.iter_mut().enumerate() {
            *v += h * (0..=s).map(|j| C[s][j] * k[j][i]).sum::<f64>();
        }
        if s == 5 {
            // first-same-as-last: the last stage point is the solution
            k[6] = f(&stage)?;
            let mut err = [0.0; N];
            for (i, e) in err.iter_mut().enumerate() {
                *e = h * (0..7).map(|j| E[j] * k[j][i]).sum::<f64>();
            }
            return Ok((stage, err));
        }
        k[s + 1] = f(&stage)?;
    }
    unreachable!()
}

/// Mixed absolute/relative error measure; a step is accepted when `<= 1`.
pub(crate) fn error_norm<const N: usize>(
    y0: &[f64; N],
    y1: &[f64; N],
    err: &[f64; N],
    tol: f64,
) -> f64 {
    (0..N)
        .map(|i| err[i].abs() / (tol * (1.0 + y0[i].abs().max(y1[i].abs()))))
        .fold(0.0, f64::max)
}

/// Next step size after an error estimate `e`.
pub(crate) fn rescale(h: f64, e: f64) -> f64 {
    let factor = if e == 0.0 {
        5.0
    } else {
        (0.9 * e.powf(-0.2)).clamp(0.2, 5.0)
    };
    h * factor
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_is_fifth_order() {
        let f = |y: &[f64; 1]| Ok([-y[0]]);
        let err = |h: f64| {
            let (y, _) = step(&f, &[1.0], h).unwrap();
            (y[0] - (-h).exp()).abs()
        };
        let ratio = err(0.2) / err(0.1);
        assert!(ratio > 50.0 && ratio < 80.0, "{ratio}");
    }

    #[test]
    fn error_estimate_tracks_fourth_order_gap() {
        let f = |y: &[f64; 2]| Ok([y[1], -y[0]]);
        let (_, e1) = step(&f, &[1.0, 0.0], 0.2).unwrap();
        let (_, e2) = step(&f, &[1.0, 0.0], 0.1).unwrap();
        let r = e1[0].abs().max(e1[1].abs()) / e2[0].abs().max(e2[1].abs());
        assert!(r > 20.0 && r < 40.0, "{r}");
    }
}
