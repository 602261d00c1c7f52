use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernel::{norm, sq_dist};
use crate::points::{lex_cmp, uniform_in_ball, Configuration};
use crate::rng::substream;
use crate::special::normal_cdf;

/// A finite simple configuration `η`, stored in canonical (lexicographic)
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteConfiguration {
    dim: usize,
    coords: Vec<f64>,
}

impl FiniteConfiguration {
    pub fn new(dim: usize, mut points: Vec<Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return invalid("dimension must be at least 1");
        }
        for p in &points {
            if p.len() != dim {
                return invalid(format!("point has {} coordinates, expected {dim}", p.len()));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return invalid("point has non-finite coordinates");
            }
        }
        points.sort_by(|a, b| lex_cmp(a, b));
        if points.windows(2).any(|w| w[0] == w[1]) {
            return invalid("finite configuration has coincident points");
        }
        Ok(Self {
            dim,
            coords: points.concat(),
        })
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            coords: Vec::new(),
        }
    }

    /// The sites of a simple configuration.
    pub fn from_configuration(gamma: &Configuration) -> Result<Self> {
        if !gamma.is_simple() {
            return invalid("configuration has multiplicities; expected a simple one");
        }
        Self::new(gamma.dim(), gamma.sites().map(|s| s.position.to_vec()).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> Vec<&[f64]> {
        self.coords.chunks_exact(self.dim).collect()
    }
}

/// Evaluator for one level `G^(n)`; always receives its arguments in
/// canonical order.
pub type LevelFn = Arc<dyn Fn(&[&[f64]]) -> f64 + Send + Sync>;

/// Single-point profile used by product-form levels
/// `G^(n)(x₁..x_n) = coefficient · Π_k factor(x_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Factor {
    /// `amplitude · exp(-|x - center|² / (2 width²))`
    Gaussian {
        center: Vec<f64>,
        amplitude: f64,
        width: f64,
    },
    /// Indicator of the cube `[-h, h]^d` convolved with a centered
    /// Gaussian of per-coordinate deviation `smoothing` (0 = sharp).
    SmoothedBox { half_width: f64, smoothing: f64 },
    /// Indicator of the closed ball `B(0, radius)`.
    Ball { radius: f64 },
}

impl Factor {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Factor::Gaussian {
                center,
                amplitude,
                width,
            } => amplitude * (-sq_dist(x, center) / (2.0 * width * width)).exp(),
            Factor::SmoothedBox { half_width, smoothing } => x
                .iter()
                .map(|&xi| {
                    if *smoothing == 0.0 {
                        if xi.abs() <= *half_width {
                            1.0
                        } else {
                            0.0
                        }
                    } else {
                        normal_cdf((half_width - xi) / smoothing) - normal_cdf((-half_width - xi) / smoothing)
                    }
                })
                .product(),
            Factor::Ball { radius } => {
                if norm(x) <= *radius {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Factor::Gaussian {
                center,
                width,
                amplitude,
            } => {
                if center.len() != dim {
                    return invalid("Gaussian factor center has the wrong dimension");
                }
                if !(*width > 0.0) || !amplitude.is_finite() {
                    return invalid("Gaussian factor needs width > 0 and finite amplitude");
                }
            }
            Factor::SmoothedBox { half_width, smoothing } => {
                if !(*half_width > 0.0) || !(*smoothing >= 0.0) {
                    return invalid("box factor needs half_width > 0 and smoothing >= 0");
                }
            }
            Factor::Ball { radius } => {
                if !(*radius > 0.0) {
                    return invalid("ball factor needs radius > 0");
                }
            }
        }
        Ok(())
    }

    /// `∫ factor(y) p(t, x, y) dy` as a new factor.
    pub fn heat_convolved(&self, dim: usize, t: f64) -> Result<Factor> {
        Ok(match self {
            Factor::Gaussian {
                center,
                amplitude,
                width,
            } => {
                let w2 = width * width + 2.0 * t;
                Factor::Gaussian {
                    center: center.clone(),
                    amplitude: amplitude * (width * width / w2).powf(dim as f64 / 2.0),
                    width: w2.sqrt(),
                }
            }
            Factor::SmoothedBox { half_width, smoothing } => Factor::SmoothedBox {
                half_width: *half_width,
                smoothing: (smoothing * smoothing + 2.0 * t).sqrt(),
            },
            Factor::Ball { radius } if dim == 1 => Factor::SmoothedBox {
                half_width: *radius,
                smoothing: (2.0 * t).sqrt(),
            },
            Factor::Ball { .. } => {
                return Err(Error::Capability(
                    "heat convolution of a ball indicator is only available for d = 1".into(),
                ))
            }
        })
    }

    /// `sup_x |factor(x)| e^{(1+eps)|x|}` when it has a closed form.
    pub fn decay_constant(&self, dim: usize, eps: f64) -> Option<f64> {
        let k = 1.0 + eps;
        match self {
            Factor::Gaussian {
                center,
                amplitude,
                width,
            } => Some(amplitude.abs() * (k * norm(center) + 0.5 * width * width * k * k).exp()),
            Factor::SmoothedBox { half_width, smoothing } if *smoothing == 0.0 => {
                Some((k * half_width * (dim as f64).sqrt()).exp())
            }
            Factor::SmoothedBox { .. } => None,
            Factor::Ball { radius } => Some((k * radius).exp()),
        }
    }
}

/// One level of a kernel function.
#[derive(Clone)]
pub enum Level {
    Zero,
    Constant(f64),
    Product { coefficient: f64, factor: Factor },
    Custom(LevelFn),
}

impl fmt::Debug for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Zero => write!(f, "Zero"),
            Level::Constant(c) => write!(f, "Constant({c})"),
            Level::Product { coefficient, factor } => write!(f, "Product({coefficient}, {factor:?})"),
            Level::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl Level {
    fn eval(&self, pts: &[&[f64]]) -> f64 {
        match self {
            Level::Zero => 0.0,
            Level::Constant(c) => *c,
            Level::Product { coefficient, factor } => coefficient * pts.iter().map(|p| factor.eval(p)).product::<f64>(),
            Level::Custom(f) => {
                if pts.windows(2).all(|w| lex_cmp(w[0], w[1]).is_le()) {
                    f(pts)
                } else {
                    let mut sorted = pts.to_vec();
                    sorted.sort_by(|a, b| lex_cmp(a, b));
                    f(&sorted)
                }
            }
        }
    }
}

/// `|G^(n)(x₁..x_n)| ≤ c^n exp(-(1+eps) Σ|x_k|)` for all `n ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DClass {
    pub c: f64,
    pub eps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DClassReport {
    pub pass: bool,
    /// Largest `|G^(n)| / (c^n e^{-(1+eps)Σ|x|})` seen.
    pub worst_ratio: f64,
    pub samples: usize,
}

/// A finite-order function `G = (G^(0), ..., G^(N))` on finite
/// configurations in ℝ^d.
#[derive(Debug, Clone)]
pub struct KernelFunction {
    dim: usize,
    levels: Vec<Level>,
    d_class: Option<DClass>,
}

impl KernelFunction {
    /// `levels[n]` is `G^(n)`; `levels[0]` must be `Zero` or `Constant`.
    pub fn new(dim: usize, levels: Vec<Level>) -> Result<Self> {
        if dim == 0 {
            return invalid("dimension must be at least 1");
        }
        if levels.is_empty() {
            return invalid("kernel function needs at least the empty-set level");
        }
        if !matches!(levels[0], Level::Zero | Level::Constant(_)) {
            return invalid("G^(0) must be a constant");
        }
        for l in &levels {
            if let Level::Product { factor, coefficient } = l {
                factor.validate(dim)?;
                if !coefficient.is_finite() {
                    return invalid("non-finite level coefficient");
                }
            }
        }
        Ok(Self {
            dim,
            levels,
            d_class: None,
        })
    }

    /// `G^(0) = c`, all other levels zero.
    pub fn constant(dim: usize, c: f64) -> Result<Self> {
        Self::new(dim, vec![Level::Constant(c)])
    }

    /// `G^(n) ≡ 1` for `n ≤ max_order`.
    pub fn ones(dim: usize, max_order: usize) -> Result<Self> {
        Self::new(dim, vec![Level::Constant(1.0); max_order + 1])
    }

    /// Only `G^(n) = coefficient · Π factor(x_k)`.
    pub fn single_product(dim: usize, n: usize, coefficient: f64, factor: Factor) -> Result<Self> {
        let mut levels = vec![Level::Zero; n + 1];
        levels[n] = Level::Product { coefficient, factor };
        Self::new(dim, levels)
    }

    pub fn with_d_class(mut self, d_class: DClass) -> Self {
        self.d_class = Some(d_class);
        self
    }

    /// Attaches the tightest certificate available in closed form for the
    /// exponent `eps`.
    pub fn certified(self, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return invalid("certificate exponent must be positive");
        }
        let mut c: f64 = 0.0;
        for (n, l) in self.levels.iter().enumerate().skip(1) {
            let per_point = match l {
                Level::Zero => continue,
                Level::Constant(v) if *v == 0.0 => continue,
                Level::Product { coefficient, factor } => {
                    let f = factor
                        .decay_constant(self.dim, eps)
                        .ok_or_else(|| Error::Capability(format!("no closed-form decay bound for {factor:?}")))?;
                    coefficient.abs().powf(1.0 / n as f64) * f
                }
                _ => {
                    return Err(Error::Capability(
                        "constant and custom levels carry no decay certificate".into(),
                    ))
                }
            };
            c = c.max(per_point);
        }
        Ok(self.with_d_class(DClass {
            c: c.max(f64::MIN_POSITIVE),
            eps,
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_order(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn level(&self, n: usize) -> Option<&Level> {
        self.levels.get(n)
    }

    pub fn d_class(&self) -> Option<DClass> {
        self.d_class
    }

    pub fn value_at_empty(&self) -> f64 {
        self.levels[0].eval(&[])
    }

    /// `G(η)` for the points of `η` (any order).
    pub fn eval(&self, pts: &[&[f64]]) -> f64 {
        match self.levels.get(pts.len()) {
            Some(l) => l.eval(pts),
            None => 0.0,
        }
    }

    pub fn eval_finite(&self, eta: &FiniteConfiguration) -> f64 {
        self.eval(&eta.points())
    }

    /// Kernel with `levels[n]` replaced by `f(n, level)`.
    pub(crate) fn map_levels<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, &Level) -> Result<Level>,
    {
        let levels = self
            .levels
            .iter()
            .enumerate()
            .map(|(n, l)| f(n, l))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dim: self.dim,
            levels,
            d_class: None,
        })
    }

    /// `G1 ⋆ G2` as a kernel function of order `N1 + N2`.
    pub fn star(g1: &KernelFunction, g2: &KernelFunction) -> Result<KernelFunction> {
        if g1.dim != g2.dim {
            return invalid("star product of kernels in different dimensions");
        }
        let order = g1.max_order() + g2.max_order();
        if order > super::MAX_STAR_SIZE {
            return Err(Error::Capacity {
                what: "star-product order",
                requested: order as u128,
                limit: super::MAX_STAR_SIZE as u128,
            });
        }
        let mut levels = Vec::with_capacity(order + 1);
        levels.push(Level::Constant(g1.value_at_empty() * g2.value_at_empty()));
        for _ in 1..=order {
            let (a, b) = (g1.clone(), g2.clone());
            levels.push(Level::Custom(Arc::new(move |pts: &[&[f64]]| {
                super::transform::star_points(&a, &b, pts)
            })));
        }
        KernelFunction::new(g1.dim, levels)
    }

    /// Checks the attached `𝔻` certificate on random points in
    /// `B(0, radius)` (`samples` tuples per order).
    pub fn check_d_class(&self, radius: f64, samples: usize, seed: u64) -> Result<DClassReport> {
        let dc = self
            .d_class
            .ok_or_else(|| Error::InvalidInput("kernel carries no D-class certificate".into()))?;
        let mut worst: f64 = 0.0;
        let mut count = 0;
        for n in 1..=self.max_order() {
            let mut rng = substream(seed, &[n as u64]);
            for s in 0..samples {
                let mut coords = Vec::with_capacity(n * self.dim);
                // mix in points on the axes and at the origin
                let r_scale = if s % 4 == 0 { rng.random::<f64>() * 0.1 } else { radius };
                for _ in 0..n {
                    uniform_in_ball(self.dim, r_scale, &mut rng, &mut coords);
                }
                let pts: Vec<&[f64]> = coords.chunks_exact(self.dim).collect();
                let v = self.eval(&pts).abs();
                let log_bound = n as f64 * dc.c.ln() - (1.0 + dc.eps) * pts.iter().map(|p| norm(p)).sum::<f64>();
                let ratio = if v == 0.0 { 0.0 } else { (v.ln() - log_bound).exp() };
                worst = worst.max(ratio);
                count += 1;
            }
        }
        Ok(DClassReport {
            pass: worst <= 1.0 + 1e-12,
            worst_ratio: worst,
            samples: count,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finite_configuration_is_canonical() {
        let e = FiniteConfiguration::new(2, vec![vec![1.0, 0.0], vec![0.0, 5.0]]).unwrap();
        assert_eq!(e.point(0), &[0.0, 5.0]);
        assert!(FiniteConfiguration::new(1, vec![vec![1.0], vec![1.0]]).is_err());
        let multi = Configuration::new(1, 2.0, vec![(vec![0.0], 2)]).unwrap();
        assert!(FiniteConfiguration::from_configuration(&multi).is_err());
    }

    #[test]
    fn custom_levels_see_sorted_arguments() {
        let g = KernelFunction::new(
            1,
            vec![
                Level::Zero,
                Level::Zero,
                Level::Custom(Arc::new(|p: &[&[f64]]| p[0][0] - 2.0 * p[1][0])),
            ],
        )
        .unwrap();
        let a = [1.0];
        let b = [3.0];
        assert_eq!(g.eval(&[&a, &b]), g.eval(&[&b, &a]));
        assert_eq!(g.eval(&[&a, &b]), -5.0);
    }

    #[test]
    fn gaussian_factor_convolution() {
        let f = Factor::Gaussian {
            center: vec![0.0],
            amplitude: 0.5,
            width: 1.0,
        };
        let g = f.heat_convolved(1, 0.5).unwrap();
        // a s / √(s² + 2t)
        assert!((g.eval(&[0.0]) - 0.5 / 2f64.sqrt()).abs() < 1e-15);
        assert!(Factor::Ball { radius: 1.0 }.heat_convolved(2, 1.0).is_err());
    }

    #[test]
    fn certificate_holds_for_gaussian_products() {
        let g = KernelFunction::single_product(
            2,
            2,
            3.0,
            Factor::Gaussian {
                center: vec![0.5, -0.2],
                amplitude: 0.8,
                width: 0.7,
            },
        )
        .unwrap()
        .certified(0.3)
        .unwrap();
        let rep = g.check_d_class(6.0, 2000, 1).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.worst_ratio > 0.0);
    }

    #[test]
    fn first_level_must_be_constant() {
        let f = Factor::Ball { radius: 1.0 };
        assert!(KernelFunction::new(
            1,
            vec![Level::Product {
                coefficient: 1.0,
                factor: f
            }]
        )
        .is_err());
    }
}
