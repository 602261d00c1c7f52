use super::kernel_fn::FiniteConfiguration;
use crate::error::{invalid, Error, Result};
use crate::kernel::{sq_dist, HeatKernelParams};
use crate::points::Configuration;

/// Largest matrix order accepted by `permanent`.
pub const MAX_PERMANENT_ORDER: usize = 24;
/// Largest `n` handled by the subset recursion of the inclusion–exclusion
/// route (`3^n` work).
const MAX_IE_ORDER: usize = 16;
/// Above this many injective tuples the enumeration route is not chosen
/// automatically.
const ENUMERATION_BUDGET: f64 = 1e6;

/// `p[k * m + i] = p_t(x_i, y_k)`
fn kernel_matrix(gamma: &Configuration, theta: &FiniteConfiguration, t: f64) -> Result<(Vec<f64>, usize)> {
    if !gamma.is_simple() {
        return invalid("correlation function needs a simple configuration");
    }
    if gamma.dim() != theta.dim() {
        return invalid("configuration and θ dimensions differ");
    }
    let k = HeatKernelParams::new(gamma.dim(), t)?;
    let xs: Vec<&[f64]> = gamma.particles().collect();
    let mut p = Vec::with_capacity(xs.len() * theta.len());
    for y in theta.points() {
        p.extend(xs.iter().map(|x| k.density_sq(sq_dist(x, y))));
    }
    Ok((p, xs.len()))
}

/// `k_t^(n)(θ) = Σ` over injective `(i₁..i_n)` of `Π_k p_t(x_{i_k}, y_k)`,
/// choosing between direct enumeration and inclusion–exclusion by cost.
pub fn correlation_function(gamma: &Configuration, theta: &FiniteConfiguration, t: f64) -> Result<f64> {
    let m = gamma.particle_count();
    let n = theta.len();
    let tuples: f64 = (0..n).map(|k| m.saturating_sub(k) as f64).product();
    if n <= 5 && tuples <= ENUMERATION_BUDGET {
        correlation_by_enumeration(gamma, theta, t)
    } else {
        correlation_by_inclusion_exclusion(gamma, theta, t)
    }
}

/// Direct sum over injective index tuples; `O(m^n)`.
pub fn correlation_by_enumeration(gamma: &Configuration, theta: &FiniteConfiguration, t: f64) -> Result<f64> {
    if theta.is_empty() {
        return invalid("θ must contain at least one point");
    }
    let (p, m) = kernel_matrix(gamma, theta, t)?;
    let n = theta.len();
    if n > m {
        return Ok(0.0);
    }
    fn rec(k: usize, n: usize, m: usize, p: &[f64], used: &mut [bool], acc: f64) -> f64 {
        if k == n {
            return acc;
        }
        let row = &p[k * m..(k + 1) * m];
        let mut s = 0.0;
        for i in 0..m {
            if !used[i] {
                used[i] = true;
                s += rec(k + 1, n, m, p, used, acc * row[i]);
                used[i] = false;
            }
        }
        s
    }
    Ok(rec(0, n, m, &p, &mut vec![false; m], 1.0))
}

/// Möbius inversion over set partitions of the θ indices:
/// `Σ_π Π_{B∈π} (-1)^{|B|-1} (|B|-1)! Σ_x Π_{k∈B} p_t(x, y_k)`,
/// evaluated by a `3^n` subset recursion.
pub fn correlation_by_inclusion_exclusion(gamma: &Configuration, theta: &FiniteConfiguration, t: f64) -> Result<f64> {
    if theta.is_empty() {
        return invalid("θ must contain at least one point");
    }
    let n = theta.len();
    if n > MAX_IE_ORDER {
        return Err(Error::Capacity {
            what: "correlation order (inclusion–exclusion)",
            requested: n as u128,
            limit: MAX_IE_ORDER as u128,
        });
    }
    let (p, m) = kernel_matrix(gamma, theta, t)?;
    if n > m {
        return Ok(0.0);
    }
    let full = (1usize << n) - 1;
    // s[B] = Σ_x Π_{k∈B} p(x, y_k)
    let mut s = vec![0.0; full + 1];
    let mut prod = vec![0.0; full + 1];
    for i in 0..m {
        prod[0] = 1.0;
        for b in 1..=full {
            let low = b.trailing_zeros() as usize;
            prod[b] = prod[b & (b - 1)] * p[low * m + i];
            s[b] += prod[b];
        }
    }
    let mut fact = vec![1.0; n + 1];
    for k in 1..=n {
        fact[k] = fact[k - 1] * k as f64;
    }
    let weight = |b: usize| {
        let size = b.count_ones() as usize;
        let sign = if size % 2 == 1 { 1.0 } else { -1.0 };
        sign * fact[size - 1] * s[b]
    };
    // f[S] = Σ over set partitions of S; the block holding the lowest
    // element of S is chosen first
    let mut f = vec![0.0; full + 1];
    f[0] = 1.0;
    for set in 1..=full {
        let low = set & set.wrapping_neg();
        let rest = set ^ low;
        let mut acc = 0.0;
        let mut sub = rest;
        loop {
            acc += weight(sub | low) * f[rest ^ sub];
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
        f[set] = acc;
    }
    Ok(f[full])
}

/// `Π_k Σ_{x∈γ} p_t(x, y_k)`, an upper bound for `k_t^(n)(θ)`.
pub fn correlation_bound(gamma: &Configuration, theta: &FiniteConfiguration, t: f64) -> Result<f64> {
    let (p, m) = kernel_matrix(gamma, theta, t)?;
    if m == 0 {
        return Ok(if theta.is_empty() { 1.0 } else { 0.0 });
    }
    Ok(p.chunks_exact(m).map(|row| row.iter().sum::<f64>()).product())
}

/// Permanent of the row-major `n × n` matrix by Ryser's formula with
/// Gray-code column updates.
pub fn permanent(matrix: &[f64], n: usize) -> Result<f64> {
    if matrix.len() != n * n {
        return invalid(format!("expected {} entries for a {n}×{n} matrix", n * n));
    }
    if n > MAX_PERMANENT_ORDER {
        return Err(Error::Capacity {
            what: "permanent order",
            requested: n as u128,
            limit: MAX_PERMANENT_ORDER as u128,
        });
    }
    if n == 0 {
        return Ok(1.0);
    }
    let mut row_sums = vec![0.0; n];
    let mut total = 0.0;
    for k in 1u64..(1u64 << n) {
        let j = k.trailing_zeros() as usize;
        let gray = k ^ (k >> 1);
        let add = gray >> j & 1 == 1;
        for (i, rs) in row_sums.iter_mut().enumerate() {
            let a = matrix[i * n + j];
            if add {
                *rs += a;
            } else {
                *rs -= a;
            }
        }
        let prod: f64 = row_sums.iter().product();
        if gray.count_ones() % 2 == 1 {
            total -= prod;
        } else {
            total += prod;
        }
    }
    Ok(if n % 2 == 1 { -total } else { total })
}

/// `R_t(η, θ) = Σ_σ Π_k p_t(x_k, y_{σ(k)})`; zero when `|η| ≠ |θ|`.
pub fn permanent_kernel(eta: &FiniteConfiguration, theta: &FiniteConfiguration, t: f64) -> Result<f64> {
    if eta.dim() != theta.dim() {
        return invalid("η and θ dimensions differ");
    }
    let k = HeatKernelParams::new(eta.dim(), t)?;
    if eta.len() != theta.len() {
        return Ok(0.0);
    }
    let n = eta.len();
    if n > MAX_PERMANENT_ORDER {
        return Err(Error::Capacity {
            what: "permanent order",
            requested: n as u128,
            limit: MAX_PERMANENT_ORDER as u128,
        });
    }
    let mut a = Vec::with_capacity(n * n);
    for x in eta.points() {
        a.extend(theta.points().iter().map(|y| k.density_sq(sq_dist(x, y))));
    }
    permanent(&a, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn cfg(points: &[[f64; 2]]) -> Configuration {
        let pts: Vec<Vec<f64>> = points.iter().map(|p| p.to_vec()).collect();
        Configuration::from_points_auto(2, &pts).unwrap()
    }

    fn fin(points: &[[f64; 2]]) -> FiniteConfiguration {
        FiniteConfiguration::new(2, points.iter().map(|p| p.to_vec()).collect()).unwrap()
    }

    #[test]
    fn single_point_is_a_sum() {
        let g = cfg(&[[0.0, 0.0], [1.0, 0.5], [-2.0, 1.0]]);
        let th = fin(&[[0.3, 0.1]]);
        let k = HeatKernelParams::new(2, 0.4).unwrap();
        let want: f64 = g.particles().map(|x| k.density(x, &[0.3, 0.1]).unwrap()).sum();
        let got = correlation_function(&g, &th, 0.4).unwrap();
        assert!((got - want).abs() < 1e-15);
        assert!((correlation_by_inclusion_exclusion(&g, &th, 0.4).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn two_by_two_and_too_many() {
        let x = [[0.0, 0.0], [1.0, 1.0]];
        let y = [[0.2, -0.1], [0.5, 0.9]];
        let g = cfg(&x);
        let th = fin(&y);
        let k = HeatKernelParams::new(2, 0.3).unwrap();
        let p = |a: &[f64; 2], b: &[f64; 2]| k.density(a, b).unwrap();
        let want = p(&x[0], &y[0]) * p(&x[1], &y[1]) + p(&x[1], &y[0]) * p(&x[0], &y[1]);
        for v in [
            correlation_by_enumeration(&g, &th, 0.3).unwrap(),
            correlation_by_inclusion_exclusion(&g, &th, 0.3).unwrap(),
        ] {
            assert!((v - want).abs() < 1e-14 * want);
        }
        let th3 = fin(&[[0.0, 1.0], [1.0, 2.0], [3.0, 3.0]]);
        assert_eq!(correlation_function(&g, &th3, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn routes_agree_and_respect_bound() {
        let mut rng = crate::rng::substream(3, &[]);
        for _ in 0..20 {
            let m = rng.random_range(1..=8);
            let n = rng.random_range(1..=5);
            let g: Vec<[f64; 2]> = (0..m)
                .map(|_| [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)])
                .collect();
            let th: Vec<[f64; 2]> = (0..n)
                .map(|_| [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)])
                .collect();
            let (g, th) = (cfg(&g), fin(&th));
            let a = correlation_by_enumeration(&g, &th, 0.5).unwrap();
            let b = correlation_by_inclusion_exclusion(&g, &th, 0.5).unwrap();
            assert!((a - b).abs() <= 1e-10 * a.abs().max(1e-300), "{a} {b}");
            assert!(a <= correlation_bound(&g, &th, 0.5).unwrap() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn ryser_matches_definition() {
        assert_eq!(permanent(&[1.0, 2.0, 3.0, 4.0], 2).unwrap(), 10.0);
        // all-ones 5×5 has permanent 5!
        assert_eq!(permanent(&[1.0; 25], 5).unwrap(), 120.0);
        assert!(matches!(permanent(&vec![0.0; 625], 25), Err(Error::Capacity { .. })));
    }

    #[test]
    fn permanent_kernel_edge_cases() {
        let e = FiniteConfiguration::empty(2);
        assert_eq!(permanent_kernel(&e, &e, 1.0).unwrap(), 1.0);
        let a = fin(&[[0.0, 0.0]]);
        let b = fin(&[[1.0, 0.0]]);
        assert_eq!(permanent_kernel(&a, &e, 1.0).unwrap(), 0.0);
        let k = HeatKernelParams::new(2, 1.0).unwrap();
        assert_eq!(
            permanent_kernel(&a, &b, 1.0).unwrap(),
            k.density(&[0.0, 0.0], &[1.0, 0.0]).unwrap()
        );
    }
}
