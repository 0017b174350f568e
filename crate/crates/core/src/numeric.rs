//! Adaptive quadrature, bracketed root finding and least-squares slopes.

use crate::error::{Error, Result};

// Gauss–Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Panel> {
    let c = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(c);
    if !fc.is_finite() {
        return Err(Error::Pole { at: c });
    }
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let (f1, f2) = (f(c - dx), f(c + dx));
        if !f1.is_finite() {
            return Err(Error::Pole { at: c - dx });
        }
        if !f2.is_finite() {
            return Err(Error::Pole { at: c + dx });
        }
        kronrod += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    Ok(Panel { a, b, value: kronrod * half, error: ((kronrod - gauss) * half).abs() })
}

/// `∫_a^b f` by globally adaptive Gauss–Kronrod (7/15) to absolute tolerance
/// `abs_tol`. Returns [`Error::Pole`] if `f` is non-finite at a node or the
/// subdivision budget is exhausted near a singularity.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    const MAX_PANELS: usize = 2000;
    let mut panels = vec![gk15(&f, a, b)?];
    loop {
        let total_err: f64 = panels.iter().map(|p| p.error).sum();
        let total: f64 = panels.iter().map(|p| p.value).sum();
        if total_err <= abs_tol.max(4.0 * f64::EPSILON * total.abs()) {
            return Ok(total);
        }
        if panels.len() >= MAX_PANELS {
            let worst = panels.iter().max_by(|x, y| x.error.total_cmp(&y.error)).unwrap();
            return Err(Error::Pole { at: 0.5 * (worst.a + worst.b) });
        }
        let (idx, _) = panels.iter().enumerate().max_by(|x, y| x.1.error.total_cmp(&y.1.error)).unwrap();
        let p = panels.swap_remove(idx);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a.min(p.b) || mid >= p.a.max(p.b) {
            return Err(Error::Pole { at: mid });
        }
        panels.push(gk15(&f, p.a, mid)?);
        panels.push(gk15(&f, mid, p.b)?);
    }
}

/// Root of `g` in `[lo, hi]` by a secant (Illinois) / bisection hybrid.
///
/// `g(lo)` and `g(hi)` must differ in sign (or one must vanish); otherwise
/// [`Error::Domain`]. Iterates until the bracket is within `tol` (absolute)
/// or a few ulps of the root.
pub fn find_root<G: Fn(f64) -> f64>(g: G, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let (mut fa, mut fb) = (g(a), g(b));
    if !fa.is_finite() || !fb.is_finite() {
        return Err(Error::Domain(format!("root bracket [{a}, {b}] has non-finite end values")));
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Domain(format!("no sign change of the target on [{a}, {b}]")));
    }
    let mut side = 0i8;
    for _ in 0..200 {
        let width = b - a;
        if width <= tol.max(2.0 * f64::EPSILON * a.abs().max(b.abs())) {
            break;
        }
        let mut x = (a * fb - b * fa) / (fb - fa);
        // bisect when the secant point leaves the interior
        if !(x > a && x < b) || !x.is_finite() {
            x = 0.5 * (a + b);
        }
        let fx = g(x);
        if !fx.is_finite() {
            return Err(Error::Domain(format!("target is non-finite at {x}")));
        }
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = x;
            fb = fx;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
        // guarantee progress: fall back to a bisection step when the bracket
        // barely shrank
        if b - a > 0.5 * width {
            let m = 0.5 * (a + b);
            let fm = g(m);
            if fm == 0.0 {
                return Ok(m);
            }
            if fm.signum() == fa.signum() {
                a = m;
                fa = fm;
            } else {
                b = m;
                fb = fm;
            }
            side = 0;
        }
    }
    Ok(if fa.abs() < fb.abs() { a } else { b })
}

/// Least-squares slope of `log(err)` against `log(h)`.
pub fn loglog_slope(h: &[f64], err: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        h.iter().zip(err).filter(|(x, y)| **x > 0.0 && **y > 0.0 && y.is_finite()).map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn integrates_smooth_functions() {
        assert_abs_diff_eq!(integrate(|x| x.sin(), 0.0, std::f64::consts::PI, 1e-12).unwrap(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(integrate(|u| 1.0 / u, 1.0, 10.0, 1e-12).unwrap(), 10f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(integrate(|u| 1.0 / u, 10.0, 1.0, 1e-12).unwrap(), -(10f64.ln()), epsilon = 1e-12);
        assert_eq!(integrate(|u| u, 3.0, 3.0, 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn integrable_sqrt_endpoint_singularity() {
        // ∫_0^1 x^{-1/2} = 2, with f finite at every Kronrod node
        let v = integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0, 1e-9).unwrap();
        assert_abs_diff_eq!(v, 2.0, epsilon = 1e-8);
    }

    #[test]
    fn detects_pole() {
        assert!(matches!(integrate(|x| 1.0 / (x - 0.5), 0.0, 1.0, 1e-12), Err(Error::Pole { .. })));
    }

    #[test]
    fn root_finding() {
        let r = find_root(|x| x * x - 2.0, 0.0, 2.0, 1e-15).unwrap();
        assert_abs_diff_eq!(r, 2f64.sqrt(), epsilon = 1e-15);
        let r = find_root(|x| x.powi(3), -1.0, 0.5, 0.0).unwrap();
        assert!(r.abs() < 1e-5);
        assert!(find_root(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_err());
    }

    #[test]
    fn slope_of_power_law() {
        let h = [0.1, 0.05, 0.025];
        let e: Vec<f64> = h.iter().map(|x| 3.0 * x * x).collect();
        assert_abs_diff_eq!(loglog_slope(&h, &e).unwrap(), 2.0, epsilon = 1e-12);
        assert!(loglog_slope(&[0.1], &[1.0]).is_none());
    }
}
