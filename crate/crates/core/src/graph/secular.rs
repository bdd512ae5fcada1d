use std::f64::consts::PI;

fn bisect(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 || (b - a) < 1e-15 * m.abs().max(1.0) {
            return m;
        }
        if (fa < 0.0) == (fm < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn roots(f: &dyn Fn(f64) -> f64, k_max: f64, step: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut a = step * 1e-3;
    let mut fa = f(a);
    while a < k_max {
        let b = (a + step).min(k_max);
        let fb = f(b);
        if fb == 0.0 {
            out.push(b);
        } else if (fa < 0.0) != (fb < 0.0) && fa != 0.0 {
            out.push(bisect(f, a, b));
        }
        a = b;
        fa = fb;
    }
    out
}

/// Wavenumbers of the equilateral star with Dirichlet tips and a Kirchhoff
/// center, ascending with multiplicity: `cos(k l) = 0` once (all edges in
/// phase) and `sin(k l) = 0` with multiplicity `edges - 1` (vanishing center).
pub fn star_secular_spectrum(edge_count: usize, length: f64, k_max: f64) -> Vec<f64> {
    if edge_count == 0 || !(length > 0.0) || !(k_max > 0.0) {
        return Vec::new();
    }
    let step = 0.05 * PI / length;
    let mut out = roots(&|k: f64| (k * length).cos(), k_max, step);
    for k in roots(&|k: f64| (k * length).sin(), k_max, step) {
        out.extend(std::iter::repeat_n(k, edge_count - 1));
    }
    out.sort_by(f64::total_cmp);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_star_pattern() {
        let k = star_secular_spectrum(3, 1.0, 7.0);
        let expect = [PI / 2.0, PI, PI, 1.5 * PI, 2.0 * PI, 2.0 * PI];
        assert_eq!(k.len(), expect.len());
        for (a, b) in k.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn two_star_is_interval() {
        let k = star_secular_spectrum(2, 0.75, 20.0);
        for (n, kn) in k.iter().enumerate() {
            assert!((kn - (n + 1) as f64 * PI / 1.5).abs() < 1e-12);
        }
    }

    #[test]
    fn doubling_length_halves_wavenumbers() {
        let a = star_secular_spectrum(4, 1.0, 12.0);
        let b = star_secular_spectrum(4, 2.0, 6.0);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - 2.0 * y).abs() < 1e-12);
        }
    }
}
