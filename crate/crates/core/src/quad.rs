//! Adaptive Gauss–Kronrod (7, 15) quadrature and fixed Gauss–Legendre
//! product rules on balls.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639,
    0.949_107_912_342_758_525,
    0.864_864_423_359_769_073,
    0.741_531_185_599_394_440,
    0.586_087_235_467_691_130,
    0.405_845_151_377_397_167,
    0.207_784_955_007_898_468,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_553,
    0.104_790_010_322_250_184,
    0.140_653_259_715_525_919,
    0.169_004_726_639_267_903,
    0.190_350_578_064_785_410,
    0.204_432_940_075_298_892,
    0.209_482_141_084_727_828,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693,
    0.279_705_391_489_276_668,
    0.381_830_050_505_118_945,
    0.417_959_183_673_469_388,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Integrates `f` over `[a, b]` to absolute tolerance `abs_tol`.
///
/// Returns `(value, error_estimate)`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64) -> Result<(f64, f64)> {
    const MAX_INTERVALS: usize = 4000;
    if a == b {
        return Ok((0.0, 0.0));
    }
    let (v, e) = gk15(&mut f, a, b);
    // (lo, hi, value, err)
    let mut pieces = vec![(a, b, v, e)];
    let mut total = v;
    let mut err = e;
    while err > abs_tol {
        if pieces.len() >= MAX_INTERVALS {
            return Err(Error::Numerical(format!(
                "quadrature on [{a}, {b}] stalled at error {err:e} (tolerance {abs_tol:e})"
            )));
        }
        let (idx, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("nonempty");
        let (lo, hi, pv, pe) = pieces.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        total += v1 + v2 - pv;
        err += e1 + e2 - pe;
        pieces.push((lo, mid, v1, e1));
        pieces.push((mid, hi, v2, e2));
        if !total.is_finite() {
            return Err(Error::Numerical("quadrature produced a non-finite value".into()));
        }
    }
    // resum to shed the running-update drift
    let value = pieces.iter().map(|p| p.2).sum();
    let err = pieces.iter().map(|p| p.3).sum();
    Ok((value, err))
}

/// Nested adaptive quadrature over the box `Π [lo_i, hi_i]`.
pub fn integrate_box<F>(f: &F, lo: &[f64], hi: &[f64], abs_tol: f64) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> f64,
{
    let mut point = vec![0.0; lo.len()];
    nested(f, lo, hi, abs_tol, 0, &mut point)
}

fn nested<F>(f: &F, lo: &[f64], hi: &[f64], abs_tol: f64, axis: usize, point: &mut [f64]) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> f64,
{
    let last = axis + 1 == lo.len();
    let width = (hi[axis] - lo[axis]).max(1.0);
    let mut inner_err = 0.0f64;
    let mut failure = None;
    let (v, e) = integrate(
        |x| {
            point[axis] = x;
            if last {
                f(point)
            } else {
                match nested(f, lo, hi, abs_tol / (4.0 * width), axis + 1, &mut *point) {
                    Ok((v, e)) => {
                        inner_err = inner_err.max(e);
                        v
                    }
                    Err(err) => {
                        failure = Some(err);
                        0.0
                    }
                }
            }
        },
        lo[axis],
        hi[axis],
        abs_tol / 2.0,
    )?;
    if let Some(err) = failure {
        return Err(err);
    }
    Ok((v, e + inner_err * (hi[axis] - lo[axis])))
}

fn legendre(m: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=m {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, m as f64 * (x * p1 - p0) / (x * x - 1.0))
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, `m ≥ 1`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    if m == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(m, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(m, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    (nodes, weights)
}

/// Product rule on the ball `B(0, radius)` in `d ≤ 3` dimensions with `m`
/// radial nodes; `None` for higher dimensions.
///
/// Returns flat node coordinates (`d` per node) and weights.
pub fn ball_rule(dim: usize, radius: f64, m: usize) -> Option<(Vec<f64>, Vec<f64>)> {
    use std::f64::consts::PI;
    let (gx, gw) = gauss_legendre(m);
    let mut pts = Vec::new();
    let mut ws = Vec::new();
    match dim {
        1 => {
            for (x, w) in gx.iter().zip(&gw) {
                pts.push(radius * x);
                ws.push(radius * w);
            }
        }
        2 => {
            let na = 2 * m;
            for (x, w) in gx.iter().zip(&gw) {
                let r = 0.5 * radius * (x + 1.0);
                let wr = 0.5 * radius * w * r;
                for k in 0..na {
                    let th = 2.0 * PI * k as f64 / na as f64;
                    pts.extend([r * th.cos(), r * th.sin()]);
                    ws.push(wr * 2.0 * PI / na as f64);
                }
            }
        }
        3 => {
            let na = 2 * m;
            for (x, w) in gx.iter().zip(&gw) {
                let r = 0.5 * radius * (x + 1.0);
                let wr = 0.5 * radius * w * r * r;
                for (c, wc) in gx.iter().zip(&gw) {
                    let s = (1.0 - c * c).sqrt();
                    for k in 0..na {
                        let ph = 2.0 * PI * k as f64 / na as f64;
                        pts.extend([r * s * ph.cos(), r * s * ph.sin(), r * c]);
                        ws.push(wr * wc * 2.0 * PI / na as f64);
                    }
                }
            }
        }
        _ => return None,
    }
    Some((pts, ws))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_integral() {
        let (v, e) = integrate(|x| (-x * x).exp(), -10.0, 10.0, 1e-13).unwrap();
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-12, "{v} {e}");
    }

    #[test]
    fn kinked_integrand_converges() {
        let (v, _) = integrate(|x: f64| x.abs(), -1.0, 2.0, 1e-12).unwrap();
        assert!((v - 2.5).abs() < 1e-11);
    }

    #[test]
    fn two_dimensional_box() {
        let f = |p: &[f64]| (-(p[0] * p[0] + p[1] * p[1])).exp();
        let (v, _) = integrate_box(&f, &[-8.0, -8.0], &[8.0, 8.0], 1e-10).unwrap();
        assert!((v - std::f64::consts::PI).abs() < 1e-9);
    }

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre(5);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((s - 2.0 / 9.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn ball_rule_volumes() {
        for d in 1..=3 {
            let (_, w) = ball_rule(d, 2.0, 8).unwrap();
            let v: f64 = w.iter().sum();
            let exact = crate::special::unit_ball_volume(d) * 2f64.powi(d as i32);
            assert!((v - exact).abs() < 1e-12 * exact, "d={d}");
        }
        let (p, w) = ball_rule(2, 1.0, 10).unwrap();
        let m2: f64 = p.chunks(2).zip(&w).map(|(p, w)| w * (p[0] * p[0] + p[1] * p[1])).sum();
        assert!((m2 - std::f64::consts::PI / 2.0).abs() < 1e-12);
    }
}
