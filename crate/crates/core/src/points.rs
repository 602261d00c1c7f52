//! Finite windowed configurations, Poisson sampling and the independent
//! heat-flow sampler for the kernel measures `P_{t,γ}`.

use std::cmp::Ordering;

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernel::{norm, HeatKernelParams};
use crate::special::unit_ball_volume;

/// Analytic description of the part of a configuration outside its window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailModel {
    /// Poisson intensity `z` (times Lebesgue measure) beyond the window.
    pub intensity: f64,
}

/// A finite point configuration in the closed ball `B(0, window_radius)`,
/// with multiplicities. All multiplicities equal to one means the
/// configuration is simple.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    dim: usize,
    window_radius: f64,
    coords: Vec<f64>,
    mults: Vec<u32>,
    tail_model: Option<TailModel>,
}

/// Borrowed view of one site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Site<'a> {
    pub position: &'a [f64],
    pub multiplicity: u32,
}

impl Configuration {
    pub fn empty(dim: usize, window_radius: f64) -> Result<Self> {
        Self::new(dim, window_radius, Vec::new())
    }

    /// Builds a configuration from `(position, multiplicity)` pairs.
    pub fn new(dim: usize, window_radius: f64, sites: Vec<(Vec<f64>, u32)>) -> Result<Self> {
        if dim == 0 {
            return invalid("dimension must be at least 1");
        }
        if !(window_radius > 0.0) || !window_radius.is_finite() {
            return invalid(format!("window radius must be positive, got {window_radius}"));
        }
        let mut coords = Vec::with_capacity(dim * sites.len());
        let mut mults = Vec::with_capacity(sites.len());
        for (i, (pos, m)) in sites.into_iter().enumerate() {
            if pos.len() != dim {
                return invalid(format!("point {i} has {} coordinates, expected {dim}", pos.len()));
            }
            if pos.iter().any(|v| !v.is_finite()) {
                return invalid(format!("point {i} has non-finite coordinates"));
            }
            if m == 0 {
                return invalid(format!("point {i} has multiplicity 0"));
            }
            if norm(&pos) > window_radius {
                return invalid(format!("point {i} lies outside the window of radius {window_radius}"));
            }
            coords.extend_from_slice(&pos);
            mults.push(m);
        }
        Ok(Self {
            dim,
            window_radius,
            coords,
            mults,
            tail_model: None,
        })
    }

    /// A simple configuration from a list of positions.
    pub fn from_points(dim: usize, window_radius: f64, points: &[Vec<f64>]) -> Result<Self> {
        Self::new(dim, window_radius, points.iter().map(|p| (p.clone(), 1)).collect())
    }

    /// Simple configuration whose window is the smallest ball containing
    /// the points (at least radius 1).
    pub fn from_points_auto(dim: usize, points: &[Vec<f64>]) -> Result<Self> {
        let r = points.iter().map(|p| norm(p)).fold(1.0, f64::max);
        Self::from_points(dim, r, points)
    }

    pub(crate) fn from_raw(dim: usize, window_radius: f64, coords: Vec<f64>, mults: Vec<u32>) -> Self {
        debug_assert_eq!(coords.len(), dim * mults.len());
        Self {
            dim,
            window_radius,
            coords,
            mults,
            tail_model: None,
        }
    }

    pub fn with_tail_model(mut self, tail: TailModel) -> Self {
        self.tail_model = Some(tail);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn window_radius(&self) -> f64 {
        self.window_radius
    }

    pub fn tail_model(&self) -> Option<TailModel> {
        self.tail_model
    }

    /// Number of distinct sites.
    pub fn site_count(&self) -> usize {
        self.mults.len()
    }

    /// Number of particles, counted with multiplicity.
    pub fn particle_count(&self) -> usize {
        self.mults.iter().map(|&m| m as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.mults.is_empty()
    }

    pub fn is_simple(&self) -> bool {
        self.mults.iter().all(|&m| m == 1)
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn multiplicity(&self, i: usize) -> u32 {
        self.mults[i]
    }

    pub fn sites(&self) -> impl Iterator<Item = Site<'_>> + '_ {
        self.coords
            .chunks_exact(self.dim)
            .zip(&self.mults)
            .map(|(position, &multiplicity)| Site { position, multiplicity })
    }

    /// Positions with each site repeated by its multiplicity.
    pub fn particles(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.sites()
            .flat_map(|s| std::iter::repeat_n(s.position, s.multiplicity as usize))
    }

    /// Raw coordinates of the distinct sites, row-major.
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Same particles, each as its own site of multiplicity one.
    pub fn unfolded(&self) -> Configuration {
        let mut coords = Vec::with_capacity(self.particle_count() * self.dim);
        for p in self.particles() {
            coords.extend_from_slice(p);
        }
        let n = coords.len() / self.dim;
        Configuration {
            mults: vec![1; n],
            coords,
            ..self.clone()
        }
    }

    /// Sites within the closed ball `B(0, radius)`.
    pub fn restricted(&self, radius: f64) -> Configuration {
        let mut coords = Vec::new();
        let mut mults = Vec::new();
        for s in self.sites() {
            if norm(s.position) <= radius {
                coords.extend_from_slice(s.position);
                mults.push(s.multiplicity);
            }
        }
        Configuration {
            coords,
            mults,
            window_radius: radius.min(self.window_radius),
            ..self.clone()
        }
    }

    /// Canonical form: sites sorted lexicographically, coincident
    /// positions merged into one site.
    pub fn as_multiset(&self) -> Configuration {
        let mut order: Vec<usize> = (0..self.site_count()).collect();
        order.sort_by(|&a, &b| lex_cmp(self.position(a), self.position(b)));
        let mut coords: Vec<f64> = Vec::with_capacity(self.coords.len());
        let mut mults: Vec<u32> = Vec::with_capacity(self.mults.len());
        for i in order {
            let p = self.position(i);
            let same = !mults.is_empty() && &coords[coords.len() - self.dim..] == p;
            if same {
                *mults.last_mut().expect("nonempty") += self.mults[i];
            } else {
                coords.extend_from_slice(p);
                mults.push(self.mults[i]);
            }
        }
        Configuration {
            coords,
            mults,
            ..self.clone()
        }
    }

    /// Order-independent equality of the underlying point measures.
    pub fn same_multiset(&self, other: &Configuration) -> bool {
        let (a, b) = (self.as_multiset(), other.as_multiset());
        a.dim == b.dim && a.coords == b.coords && a.mults == b.mults
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("configuration serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("configuration JSON: {e}")))
    }
}

pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigurationJson {
    dim: usize,
    window_radius: f64,
    points: Vec<(Vec<f64>, u32)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tail_model: Option<TailModel>,
}

impl Serialize for Configuration {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ConfigurationJson {
            dim: self.dim,
            window_radius: self.window_radius,
            points: self.sites().map(|s| (s.position.to_vec(), s.multiplicity)).collect(),
            tail_model: self.tail_model,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Configuration {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = ConfigurationJson::deserialize(deserializer)?;
        let mut c = Configuration::new(raw.dim, raw.window_radius, raw.points).map_err(serde::de::Error::custom)?;
        c.tail_model = raw.tail_model;
        Ok(c)
    }
}

/// A centered ball together with a Poisson intensity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    radius: f64,
    intensity: f64,
}

impl Window {
    pub fn new(radius: f64, intensity: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return invalid(format!("window radius must be positive, got {radius}"));
        }
        if !(intensity > 0.0 && intensity.is_finite()) {
            return invalid(format!("intensity must be positive, got {intensity}"));
        }
        Ok(Self { radius, intensity })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    /// Expected number of Poisson points in the window.
    pub fn mean_count(&self, dim: usize) -> f64 {
        self.intensity * unit_ball_volume(dim) * self.radius.powi(dim as i32)
    }
}

/// Uniform point in the ball `B(0, radius)`.
pub fn uniform_in_ball<R: Rng + ?Sized>(dim: usize, radius: f64, rng: &mut R, out: &mut Vec<f64>) {
    loop {
        let start = out.len();
        let mut sq = 0.0;
        for _ in 0..dim {
            let z: f64 = rng.sample(StandardNormal);
            sq += z * z;
            out.push(z);
        }
        if sq == 0.0 {
            out.truncate(start);
            continue;
        }
        let u: f64 = rng.random();
        let scale = radius * u.powf(1.0 / dim as f64) / sq.sqrt();
        for v in &mut out[start..] {
            *v *= scale;
        }
        return;
    }
}

/// Poisson configuration with intensity `z` on the window ball.
pub fn sample_poisson<R: Rng + ?Sized>(window: &Window, dim: usize, rng: &mut R) -> Result<Configuration> {
    if dim == 0 {
        return invalid("dimension must be at least 1");
    }
    let lambda = window.mean_count(dim);
    let count = Poisson::new(lambda)
        .map_err(|e| Error::InvalidInput(format!("Poisson mean {lambda}: {e}")))?
        .sample(rng) as usize;
    let mut coords = Vec::with_capacity(count * dim);
    for _ in 0..count {
        uniform_in_ball(dim, window.radius, rng, &mut coords);
    }
    // rounding can push |x| a hair past R
    for p in coords.chunks_exact_mut(dim) {
        let n = norm(p);
        if n > window.radius {
            for v in p.iter_mut() {
                *v *= window.radius / n;
            }
        }
    }
    Ok(
        Configuration::from_raw(dim, window.radius, coords, vec![1; count]).with_tail_model(TailModel {
            intensity: window.intensity,
        }),
    )
}

/// Default window enlargement for `diffuse`: `6√(2t)√d + 1`.
pub fn default_pad(dim: usize, t: f64) -> f64 {
    6.0 * (2.0 * t).sqrt() * (dim as f64).sqrt() + 1.0
}

/// Expected number of particles that leave the padded window,
/// `|γ| · tail_mass(t, pad)`.
pub fn boundary_leakage(gamma: &Configuration, t: f64, pad: f64) -> Result<f64> {
    let k = HeatKernelParams::new(gamma.dim, t)?;
    Ok(gamma.particle_count() as f64 * k.tail_mass(pad)?)
}

/// Moves every particle (multiplicity unfolded) by an independent heat
/// kernel step of duration `t`, enlarging the window by the default pad.
pub fn diffuse<R: Rng + ?Sized>(gamma: &Configuration, t: f64, rng: &mut R) -> Result<Configuration> {
    diffuse_with_pad(gamma, t, default_pad(gamma.dim, t), rng)
}

pub fn diffuse_with_pad<R: Rng + ?Sized>(
    gamma: &Configuration,
    t: f64,
    pad: f64,
    rng: &mut R,
) -> Result<Configuration> {
    let k = HeatKernelParams::new(gamma.dim, t)?;
    if !(pad >= 0.0) {
        return invalid(format!("pad must be nonnegative, got {pad}"));
    }
    let sd = k.std_dev();
    let mut coords = Vec::with_capacity(gamma.particle_count() * gamma.dim);
    for p in gamma.particles() {
        for &x in p {
            let z: f64 = rng.sample(StandardNormal);
            coords.push(x + sd * z);
        }
    }
    Ok(finish_diffused(gamma, coords, pad))
}

/// Antithetic pair: the same Gaussian displacements applied with both
/// signs. Each member has the law of `diffuse(γ, t)`.
pub fn diffuse_antithetic<R: Rng + ?Sized>(
    gamma: &Configuration,
    t: f64,
    pad: f64,
    rng: &mut R,
) -> Result<(Configuration, Configuration)> {
    let k = HeatKernelParams::new(gamma.dim, t)?;
    let sd = k.std_dev();
    let n = gamma.particle_count() * gamma.dim;
    let mut plus = Vec::with_capacity(n);
    let mut minus = Vec::with_capacity(n);
    for p in gamma.particles() {
        for &x in p {
            let z: f64 = rng.sample(StandardNormal);
            plus.push(x + sd * z);
            minus.push(x - sd * z);
        }
    }
    Ok((finish_diffused(gamma, plus, pad), finish_diffused(gamma, minus, pad)))
}

fn finish_diffused(gamma: &Configuration, coords: Vec<f64>, pad: f64) -> Configuration {
    let dim = gamma.dim;
    let mut radius = gamma.window_radius + pad;
    for p in coords.chunks_exact(dim) {
        radius = radius.max(norm(p));
    }
    let n = coords.len() / dim;
    Configuration {
        dim,
        window_radius: radius,
        coords,
        mults: vec![1; n],
        tail_model: gamma.tail_model,
    }
}

/// Upper bound for `E_π[Σ_{|x|>R} exp(-|x|/n)]` under a Poisson measure of
/// intensity `z`: the shell series `z Σ_k e^{-(k-1)/n} ω_d k^d` over the
/// shells `k-1 < |x| ≤ k` that meet `{|x| > R}`.
pub fn truncation_tail_bound(radius: f64, n: u32, dim: usize, intensity: f64) -> Result<f64> {
    if !(radius > 0.0) {
        return invalid(format!("radius must be positive, got {radius}"));
    }
    if n == 0 || dim == 0 {
        return invalid("n and dim must be positive");
    }
    if !(intensity >= 0.0) {
        return invalid("intensity must be nonnegative");
    }
    let c_d = unit_ball_volume(dim);
    let nf = n as f64;
    let first = radius.floor() as u64 + 1;
    let mut sum = 0.0;
    let mut k = first;
    loop {
        let kf = k as f64;
        let term = (-(kf - 1.0) / nf).exp() * c_d * kf.powi(dim as i32);
        sum += term;
        // terms decrease once k > d n
        if kf > dim as f64 * nf && term < 1e-18 * sum {
            break;
        }
        k += 1;
    }
    Ok(intensity * sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    fn cfg(points: &[(&[f64], u32)]) -> Configuration {
        Configuration::new(
            points[0].0.len(),
            10.0,
            points.iter().map(|(p, m)| (p.to_vec(), *m)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn rejects_points_outside_window() {
        assert!(Configuration::from_points(1, 1.0, &[vec![1.5]]).is_err());
        assert!(Configuration::new(1, 1.0, vec![(vec![0.5], 0)]).is_err());
        assert!(Configuration::from_points(2, 1.0, &[vec![0.5]]).is_err());
    }

    #[test]
    fn multiset_sorts_and_merges() {
        let c = cfg(&[(&[1.0, 0.0], 1), (&[0.0, 0.0], 1)]).as_multiset();
        assert_eq!(c.coords(), &[0.0, 0.0, 1.0, 0.0]);
        let m = cfg(&[(&[0.0, 0.0], 1), (&[0.0, 0.0], 1)]).as_multiset();
        assert_eq!(m.site_count(), 1);
        assert_eq!(m.multiplicity(0), 2);
        assert_eq!(m.as_multiset(), m);
    }

    #[test]
    fn diffuse_empty_and_unfolding() {
        let mut rng = substream(3, &[]);
        let e = Configuration::empty(2, 1.0).unwrap();
        assert!(diffuse(&e, 1.0, &mut rng).unwrap().is_empty());
        let c = cfg(&[(&[0.0], 1), (&[1.0], 2)]);
        let d = diffuse(&c, 0.5, &mut rng).unwrap();
        assert_eq!(d.particle_count(), 3);
        assert!(d.is_simple());
        assert!(diffuse(&c, 0.0, &mut rng).is_err());
        assert!(diffuse(&c, -1.0, &mut rng).is_err());
    }

    #[test]
    fn diffuse_window_contains_all_points() {
        let mut rng = substream(9, &[]);
        let c = cfg(&[(&[0.0, 0.0], 5)]);
        for _ in 0..200 {
            let d = diffuse_with_pad(&c, 4.0, 0.0, &mut rng).unwrap();
            assert!(d.particles().all(|p| norm(p) <= d.window_radius()));
        }
    }

    #[test]
    fn tail_bound_unit_case_matches_series() {
        // 2 Σ_{k≥11} k e^{1-k}
        let mut want = 0.0;
        for k in 11..2000 {
            want += 2.0 * k as f64 * (1.0 - k as f64).exp();
        }
        let got = truncation_tail_bound(10.0, 1, 1, 1.0).unwrap();
        assert!((got - want).abs() < 1e-15 * want.max(1e-300) + 1e-18);
    }

    #[test]
    fn tail_bound_decreases_in_radius() {
        let mut prev = f64::INFINITY;
        for r in [1.0, 2.0, 5.0, 10.0, 20.0, 40.0, 80.0] {
            let b = truncation_tail_bound(r, 3, 2, 1.0).unwrap();
            assert!(b < prev);
            prev = b;
        }
        assert!(prev < 1e-2);
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let c = Configuration::new(2, 3.0, vec![(vec![0.1, -0.2], 1), (vec![1.0 / 3.0, 2.0f64.sqrt()], 4)])
            .unwrap()
            .with_tail_model(TailModel { intensity: 0.7 });
        let text = c.to_json();
        let back = Configuration::from_json(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_json(), text);
        assert!(text.starts_with(r#"{"dim":2,"window_radius":3.0,"points":[[[0.1,-0.2],1]"#));
    }

    #[test]
    fn json_rejects_unknown_and_invalid() {
        assert!(Configuration::from_json(r#"{"dim":1,"window_radius":1,"points":[],"x":1}"#).is_err());
        assert!(Configuration::from_json(r#"{"dim":1,"window_radius":1,"points":[[[2.0],1]]}"#).is_err());
    }
}
