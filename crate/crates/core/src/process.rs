//! Discretized independent particle process: every particle of a
//! configuration follows its own Brownian path with generator `Δ`, sampled
//! exactly at grid times. Diagnostics probe `B_n` continuity, the
//! oscillation bound `2τ(δ, r/4)`, and collisions.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernel::{norm, sq_dist, HeatKernelParams};
use crate::points::{diffuse_with_pad, Configuration};
use crate::rng::substream;
use crate::semigroup::par_replicas;
use crate::special::normal_sf;
use crate::stats::{covariance, ks_two_sample, median, KsResult, MeanEstimate, Verdict};

/// Largest `steps × particles` a bundle may hold.
pub const MAX_PATH_POINTS: u128 = 100_000_000;

/// Stream key separating path increments from other draws of a replica.
const PATH_STREAM: u64 = 0x7061_7468;

/// One replica of the process on the grid `0, dt, …, horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBundle {
    dim: usize,
    dt: f64,
    horizon: f64,
    steps: usize,
    particles: usize,
    /// `[particle][step][coord]`, `steps + 1` positions per particle
    data: Vec<f64>,
    seed: u64,
    replica: u64,
}

/// Grid for `simulate_paths`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    pub horizon: f64,
    pub dt: f64,
    /// Zero every increment (test mode).
    pub frozen: bool,
}

impl PathSpec {
    pub fn new(horizon: f64, dt: f64) -> Self {
        Self {
            horizon,
            dt,
            frozen: false,
        }
    }

    /// Number of steps; `horizon` must be an integer multiple of `dt`.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return invalid(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.horizon >= self.dt) || !self.horizon.is_finite() {
            return invalid(format!("horizon {} must be at least dt {}", self.horizon, self.dt));
        }
        let steps = (self.horizon / self.dt).round();
        if (steps * self.dt - self.horizon).abs() > 1e-9 * self.horizon {
            return invalid(format!("horizon {} is not a multiple of dt {}", self.horizon, self.dt));
        }
        if steps as u128 > MAX_PATH_POINTS {
            return Err(Error::Capacity {
                what: "path steps",
                requested: steps as u128,
                limit: MAX_PATH_POINTS,
            });
        }
        Ok(steps as usize)
    }
}

/// Independent Brownian paths (variance `2 dt` per coordinate and step)
/// from every particle of `γ`, multiplicities unfolded. Particle `k` of
/// replica `r` draws from the substream `(seed, r, k)`.
pub fn simulate_paths(gamma: &Configuration, spec: &PathSpec, seed: u64, replica: u64) -> Result<PathBundle> {
    let steps = spec.steps()?;
    let particles = gamma.particle_count();
    let total = (steps as u128 + 1) * particles as u128;
    if total > MAX_PATH_POINTS {
        return Err(Error::Capacity {
            what: "path points (steps × particles)",
            requested: total,
            limit: MAX_PATH_POINTS,
        });
    }
    let dim = gamma.dim();
    let sd = (2.0 * spec.dt).sqrt();
    let mut data = Vec::with_capacity(total as usize * dim);
    for (k, start) in gamma.particles().enumerate() {
        let mut rng = substream(seed, &[PATH_STREAM, replica, k as u64]);
        let mut x = start.to_vec();
        data.extend_from_slice(&x);
        for _ in 0..steps {
            for xi in x.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                if !spec.frozen {
                    *xi += sd * z;
                }
            }
            data.extend_from_slice(&x);
        }
    }
    Ok(PathBundle {
        dim,
        dt: spec.dt,
        horizon: spec.horizon,
        steps,
        particles,
        data,
        seed,
        replica,
    })
}

impl PathBundle {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn replica(&self) -> u64 {
        self.replica
    }

    pub fn time(&self, step: usize) -> f64 {
        step as f64 * self.dt
    }

    /// Position of `particle` at grid index `step`.
    pub fn position(&self, particle: usize, step: usize) -> &[f64] {
        let i = (particle * (self.steps + 1) + step) * self.dim;
        &self.data[i..i + self.dim]
    }

    /// The configuration at grid index `step`.
    pub fn slice(&self, step: usize) -> Result<Configuration> {
        let pts: Vec<Vec<f64>> = (0..self.particles).map(|k| self.position(k, step).to_vec()).collect();
        if pts.is_empty() {
            return Configuration::empty(self.dim, 1.0);
        }
        Configuration::from_points_auto(self.dim, &pts)
    }

    fn b_n_at(&self, n: u32, step: usize) -> f64 {
        (0..self.particles)
            .map(|k| (-norm(self.position(k, step)) / n as f64).exp())
            .sum()
    }

    /// `B_n` at every grid time.
    pub fn b_n_path(&self, n: u32) -> Vec<f64> {
        (0..=self.steps).map(|s| self.b_n_at(n, s)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BnContinuityReport {
    pub n: u32,
    pub max_increment: f64,
    /// `|ΔB_n| ≤ (1/n) Σ_k |Δω_k|` held at every step.
    pub lipschitz_holds: bool,
}

/// `B_n` increments along the grid, checked against the pathwise bound
/// `|ΔB_n| ≤ (1/n) Σ_k |Δω_k|`.
pub fn bn_continuity_report(bundle: &PathBundle, n: u32) -> Result<BnContinuityReport> {
    bn_report_strided(bundle, n, 1)
}

fn bn_report_strided(bundle: &PathBundle, n: u32, stride: usize) -> Result<BnContinuityReport> {
    if n == 0 {
        return invalid("B_n needs n ≥ 1");
    }
    let mut max_increment: f64 = 0.0;
    let mut lipschitz_holds = true;
    let mut prev = bundle.b_n_at(n, 0);
    let mut s = stride;
    while s <= bundle.steps {
        let cur = bundle.b_n_at(n, s);
        let inc = (cur - prev).abs();
        let moved: f64 = (0..bundle.particles)
            .map(|k| sq_dist(bundle.position(k, s), bundle.position(k, s - stride)).sqrt())
            .sum();
        if inc > moved / n as f64 * (1.0 + 1e-12) + 1e-300 {
            lipschitz_holds = false;
        }
        max_increment = max_increment.max(inc);
        prev = cur;
        s += stride;
    }
    Ok(BnContinuityReport {
        n,
        max_increment,
        lipschitz_holds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BnRefinementReport {
    pub n: u32,
    pub dt_coarse: f64,
    pub dt_fine: f64,
    pub median_coarse: f64,
    pub median_fine: f64,
    pub lipschitz_holds: bool,
    pub replicas: usize,
    pub verdict: Verdict,
}

/// Median over replicas of the largest `B_n` step increment, on a fine
/// grid and on the coarse grid obtained by subsampling the same paths.
pub fn bn_refinement(
    gamma: &Configuration,
    n: u32,
    horizon: f64,
    dt_coarse: f64,
    dt_fine: f64,
    replicas: usize,
    seed: u64,
) -> Result<BnRefinementReport> {
    let ratio = (dt_coarse / dt_fine).round();
    if !(ratio >= 2.0) || (ratio * dt_fine - dt_coarse).abs() > 1e-9 * dt_coarse {
        return invalid("dt_coarse must be an integer multiple (≥ 2) of dt_fine");
    }
    PathSpec::new(horizon, dt_coarse).steps()?;
    let spec = PathSpec::new(horizon, dt_fine);
    let rows = par_replicas(replicas, seed, |r, _| {
        let b = simulate_paths(gamma, &spec, seed, r as u64)?;
        let fine = bn_report_strided(&b, n, 1)?;
        let coarse = bn_report_strided(&b, n, ratio as usize)?;
        Ok((fine, coarse))
    })?;
    let fine: Vec<f64> = rows.iter().map(|r| r.0.max_increment).collect();
    let coarse: Vec<f64> = rows.iter().map(|r| r.1.max_increment).collect();
    let lipschitz_holds = rows.iter().all(|r| r.0.lipschitz_holds && r.1.lipschitz_holds);
    let (mf, mc) = (median(&fine), median(&coarse));
    Ok(BnRefinementReport {
        n,
        dt_coarse,
        dt_fine,
        median_coarse: mc,
        median_fine: mf,
        lipschitz_holds,
        replicas,
        verdict: Verdict::from_pass(lipschitz_holds && mf < mc),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationReport {
    pub delta: f64,
    pub r: f64,
    pub sub_steps: usize,
    /// Fraction of replicas whose grid path on `[a, b]` has diameter `> r`.
    pub empirical: f64,
    pub std_error: f64,
    /// `2 τ(δ, r/4)`
    pub bound: f64,
    pub replicas: usize,
    pub verdict: Verdict,
}

/// Smallest sub-grid accepted by `oscillation_check`.
pub const MIN_OSCILLATION_STEPS: usize = 64;

/// Empirical `P(sup_{a≤s,u≤b} |ω(s) - ω(u)| > r)` on a grid of `sub_steps`
/// intervals, against the bound `2 τ(δ, r/4)` with `δ ≥ b - a`.
#[allow(clippy::too_many_arguments)]
pub fn oscillation_check(
    start: &[f64],
    a: f64,
    b: f64,
    delta: f64,
    r: f64,
    sub_steps: usize,
    replicas: usize,
    seed: u64,
) -> Result<OscillationReport> {
    let dim = start.len();
    if dim == 0 {
        return invalid("start point needs at least one coordinate");
    }
    if !(a >= 0.0 && b > a) {
        return invalid(format!("need 0 ≤ a < b, got a = {a}, b = {b}"));
    }
    if !(b - a <= delta * (1.0 + 1e-12)) {
        return invalid(format!("interval length {} exceeds δ = {delta}", b - a));
    }
    if !(r > 0.0) {
        return invalid("r must be positive");
    }
    if sub_steps < MIN_OSCILLATION_STEPS {
        return invalid(format!(
            "need at least {MIN_OSCILLATION_STEPS} sub-steps, got {sub_steps}"
        ));
    }
    if replicas < 2 {
        return invalid("need at least 2 replicas");
    }
    let bound = 2.0 * HeatKernelParams::new(dim, delta)?.tail_mass(r / 4.0)?;
    let h = (b - a) / sub_steps as f64;
    let sd = (2.0 * h).sqrt();
    let hits = par_replicas(replicas, seed, |_, rng| {
        let mut x: Vec<f64> = start
            .iter()
            .map(|s| s + (2.0 * a).sqrt() * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let mut pts = Vec::with_capacity((sub_steps + 1) * dim);
        pts.extend_from_slice(&x);
        for _ in 0..sub_steps {
            for xi in x.iter_mut() {
                *xi += sd * rng.sample::<f64, _>(StandardNormal);
            }
            pts.extend_from_slice(&x);
        }
        Ok(if diameter_exceeds(&pts, dim, r) { 1.0 } else { 0.0 })
    })?;
    let est = MeanEstimate::from_values(&hits);
    Ok(OscillationReport {
        delta,
        r,
        sub_steps,
        empirical: est.mean,
        std_error: est.std_error,
        bound,
        replicas,
        verdict: Verdict::from_pass(est.mean <= bound + 4.0 * est.std_error),
    })
}

fn diameter_exceeds(pts: &[f64], dim: usize, r: f64) -> bool {
    if dim == 1 {
        let (lo, hi) = pts
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
        return hi - lo > r;
    }
    let r2 = r * r;
    let p: Vec<&[f64]> = pts.chunks_exact(dim).collect();
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if sq_dist(p[i], p[j]) > r2 {
                return true;
            }
        }
    }
    false
}

/// Per-replica collision summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionReport {
    /// Smallest pairwise distance over all grid times.
    pub min_distance: f64,
    /// `min_distance < ε` for each ε.
    pub below: Vec<bool>,
    /// d = 1: some pair changed order between grid times.
    pub sign_change: bool,
    /// d = 1: probability that some pair met in continuous time, given the
    /// grid values (Brownian-bridge correction; 1 after a sign change).
    pub bridge_crossing: f64,
}

/// Minimum pairwise distance over the grid and, in `d = 1`, crossing
/// diagnostics.
pub fn collision_report(bundle: &PathBundle, epsilons: &[f64]) -> Result<CollisionReport> {
    if bundle.particles < 2 {
        return invalid("collision diagnostics need at least two particles");
    }
    check_epsilons(epsilons)?;
    let mut min2 = f64::INFINITY;
    for s in 0..=bundle.steps {
        for i in 0..bundle.particles {
            for j in i + 1..bundle.particles {
                min2 = min2.min(sq_dist(bundle.position(i, s), bundle.position(j, s)));
            }
        }
    }
    let min_distance = min2.sqrt();
    let (mut sign_change, mut bridge_crossing) = (false, 0.0);
    if bundle.dim == 1 {
        // difference of two particles: Brownian with variance 4 dt per step
        let var = 4.0 * bundle.dt;
        let mut none = 1.0;
        for i in 0..bundle.particles {
            for j in i + 1..bundle.particles {
                for s in 0..bundle.steps {
                    let u = bundle.position(i, s)[0] - bundle.position(j, s)[0];
                    let v = bundle.position(i, s + 1)[0] - bundle.position(j, s + 1)[0];
                    if u * v <= 0.0 {
                        sign_change = true;
                        none = 0.0;
                    } else {
                        none *= 1.0 - (-2.0 * u * v / var).exp();
                    }
                }
            }
        }
        bridge_crossing = 1.0 - none;
    }
    Ok(CollisionReport {
        min_distance,
        below: epsilons.iter().map(|e| min_distance < *e).collect(),
        sign_change,
        bridge_crossing,
    })
}

fn check_epsilons(epsilons: &[f64]) -> Result<()> {
    if epsilons.is_empty() || epsilons.iter().any(|e| !(*e > 0.0)) {
        return invalid("ε list must contain positive values");
    }
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return invalid("ε list must be strictly decreasing");
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionExperiment {
    pub dim: usize,
    pub epsilons: Vec<f64>,
    /// Fraction of replicas with grid minimum distance below each ε.
    pub fractions: Vec<f64>,
    pub fraction_errors: Vec<f64>,
    /// d = 1 only: grid sign-change fraction.
    pub sign_change_fraction: Option<f64>,
    /// d = 1 only: bridge-corrected crossing fraction and its standard error.
    pub crossing_fraction: Option<f64>,
    pub crossing_error: Option<f64>,
    /// d = 1 with two particles: `2 Φ̄(Δ / √(4T))`.
    pub reflection_value: Option<f64>,
    pub replicas: usize,
    pub verdict: Verdict,
}

/// Largest final collision fraction accepted in `d ≥ 2`.
pub const FINAL_COLLISION_FRACTION: f64 = 0.01;

/// Collision fractions over independent replicas. In `d ≥ 2` the verdict
/// asks for strictly decreasing fractions ending below 1%; in `d = 1` with
/// two particles it compares the crossing fraction with the reflection
/// principle value.
pub fn collision_experiment(
    gamma: &Configuration,
    spec: &PathSpec,
    epsilons: &[f64],
    replicas: usize,
    seed: u64,
) -> Result<CollisionExperiment> {
    check_epsilons(epsilons)?;
    if replicas < 2 {
        return invalid("need at least 2 replicas");
    }
    let reports = par_replicas(replicas, seed, |r, _| {
        let b = simulate_paths(gamma, spec, seed, r as u64)?;
        collision_report(&b, epsilons)
    })?;
    let mut fractions = Vec::new();
    let mut fraction_errors = Vec::new();
    for k in 0..epsilons.len() {
        let v: Vec<f64> = reports.iter().map(|r| if r.below[k] { 1.0 } else { 0.0 }).collect();
        let e = MeanEstimate::from_values(&v);
        fractions.push(e.mean);
        fraction_errors.push(e.std_error);
    }
    let dim = gamma.dim();
    let mut out = CollisionExperiment {
        dim,
        epsilons: epsilons.to_vec(),
        fractions,
        fraction_errors,
        sign_change_fraction: None,
        crossing_fraction: None,
        crossing_error: None,
        reflection_value: None,
        replicas,
        verdict: Verdict::Fail,
    };
    if dim == 1 {
        let sc: Vec<f64> = reports.iter().map(|r| if r.sign_change { 1.0 } else { 0.0 }).collect();
        let bc: Vec<f64> = reports.iter().map(|r| r.bridge_crossing).collect();
        let est = MeanEstimate::from_values(&bc);
        out.sign_change_fraction = Some(MeanEstimate::from_values(&sc).mean);
        out.crossing_fraction = Some(est.mean);
        out.crossing_error = Some(est.std_error);
        if gamma.particle_count() == 2 {
            let pts: Vec<&[f64]> = gamma.particles().collect();
            let gap = (pts[0][0] - pts[1][0]).abs();
            let want = 2.0 * normal_sf(gap / (4.0 * spec.horizon).sqrt());
            out.reflection_value = Some(want);
            out.verdict = Verdict::from_pass((est.mean - want).abs() <= 4.0 * est.std_error);
        } else {
            out.verdict = Verdict::from_pass(est.mean > 0.0);
        }
    } else {
        let decreasing = out.fractions.windows(2).all(|w| w[1] < w[0]);
        let last = *out.fractions.last().expect("nonempty ε list");
        out.verdict = Verdict::from_pass(decreasing && last < FINAL_COLLISION_FRACTION);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalReport {
    pub t: f64,
    pub ks: KsResult,
    /// Per-coordinate variance of the path displacement at `t` and its
    /// standard error; expected `2t`.
    pub variance: f64,
    pub variance_error: f64,
    /// Correlation between the first coordinates of the first two
    /// particles' displacements, with its standard error (0 expected).
    pub correlation: Option<f64>,
    pub correlation_error: Option<f64>,
    pub samples: usize,
    pub verdict: Verdict,
}

/// Smallest KS p-value accepted by `marginal_check`.
pub const KS_LEVEL: f64 = 0.001;

/// Compares the path position at the last grid time with independent
/// `diffuse(γ, T)` draws: two-sample KS on displacement norms of all
/// particles, displacement variance against `2T`, and cross-particle
/// correlation against 0.
pub fn marginal_check(gamma: &Configuration, spec: &PathSpec, samples: usize, seed: u64) -> Result<MarginalReport> {
    if gamma.is_empty() {
        return invalid("marginal check needs at least one particle");
    }
    if samples < 2 {
        return invalid("need at least 2 samples");
    }
    let steps = spec.steps()?;
    let starts: Vec<Vec<f64>> = gamma.particles().map(|p| p.to_vec()).collect();
    let dim = gamma.dim();
    let rows = par_replicas(samples, seed, |r, rng| {
        let b = simulate_paths(gamma, spec, seed, r as u64)?;
        let path_norms: Vec<f64> = (0..b.particles())
            .map(|k| sq_dist(b.position(k, steps), &starts[k]).sqrt())
            .collect();
        let first: Vec<f64> = (0..b.particles())
            .map(|k| b.position(k, steps)[0] - starts[k][0])
            .collect();
        let sq: f64 = (0..b.particles())
            .map(|k| sq_dist(b.position(k, steps), &starts[k]))
            .sum::<f64>()
            / (b.particles() * dim) as f64;
        let d = diffuse_with_pad(gamma, spec.horizon, 0.0, rng)?;
        let diff_norms: Vec<f64> = d.particles().zip(&starts).map(|(p, s)| sq_dist(p, s).sqrt()).collect();
        Ok((path_norms, diff_norms, first, sq))
    })?;
    let a: Vec<f64> = rows.iter().flat_map(|r| r.0.iter().copied()).collect();
    let b: Vec<f64> = rows.iter().flat_map(|r| r.1.iter().copied()).collect();
    let ks = ks_two_sample(&a, &b);
    let var = MeanEstimate::from_values(&rows.iter().map(|r| r.3).collect::<Vec<_>>());
    let mut pass = ks.p_value > KS_LEVEL && (var.mean - 2.0 * spec.horizon).abs() <= 4.0 * var.std_error;
    let (mut correlation, mut correlation_error) = (None, None);
    if gamma.particle_count() >= 2 {
        let x: Vec<f64> = rows.iter().map(|r| r.2[0]).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.2[1]).collect();
        let c = covariance(&x, &y) / (covariance(&x, &x) * covariance(&y, &y)).sqrt();
        // standard error of a sample correlation near 0
        let se = 1.0 / (samples as f64).sqrt();
        pass &= c.abs() <= 4.0 * se;
        correlation = Some(c);
        correlation_error = Some(se);
    }
    Ok(MarginalReport {
        t: spec.horizon,
        ks,
        variance: var.mean,
        variance_error: var.std_error,
        correlation,
        correlation_error,
        samples,
        verdict: Verdict::from_pass(pass),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(pts: &[&[f64]]) -> Configuration {
        let v: Vec<Vec<f64>> = pts.iter().map(|p| p.to_vec()).collect();
        Configuration::from_points_auto(pts[0].len(), &v).unwrap()
    }

    #[test]
    fn frozen_paths_have_no_increments() {
        let g = cfg(&[&[0.0, 1.0], &[2.0, 0.0]]);
        let spec = PathSpec {
            horizon: 1.0,
            dt: 0.01,
            frozen: true,
        };
        let b = simulate_paths(&g, &spec, 1, 0).unwrap();
        assert_eq!(b.steps(), 100);
        assert_eq!(bn_continuity_report(&b, 1).unwrap().max_increment, 0.0);
    }

    #[test]
    fn empty_and_bad_grids() {
        let e = Configuration::empty(2, 1.0).unwrap();
        let b = simulate_paths(&e, &PathSpec::new(1.0, 0.1), 0, 0).unwrap();
        assert_eq!(b.particles(), 0);
        assert!(PathSpec::new(1.0, 0.3).steps().is_err());
        assert!(matches!(PathSpec::new(1.0, 1e-9).steps(), Err(Error::Capacity { .. })));
    }

    #[test]
    fn b1_is_lipschitz_in_the_path() {
        let g = cfg(&[&[0.0]]);
        let b = simulate_paths(&g, &PathSpec::new(1.0, 1e-3), 7, 0).unwrap();
        assert!(bn_continuity_report(&b, 1).unwrap().lipschitz_holds);
    }

    #[test]
    fn paths_are_reproducible() {
        let g = cfg(&[&[0.0], &[1.0]]);
        let a = simulate_paths(&g, &PathSpec::new(0.5, 0.01), 3, 9).unwrap();
        let b = simulate_paths(&g, &PathSpec::new(0.5, 0.01), 3, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn oscillation_far_tail() {
        let rep = oscillation_check(&[0.0], 0.0, 0.01, 0.01, 20.0 * 0.02f64.sqrt(), 64, 500, 1).unwrap();
        assert_eq!(rep.empirical, 0.0);
        assert!(rep.verdict.is_pass());
    }

    #[test]
    fn oscillation_reference_bound() {
        let rep = oscillation_check(&[0.0], 0.0, 0.01, 0.01, 1.0, 64, 2000, 2).unwrap();
        assert!((rep.bound - 0.1542).abs() < 1e-4, "{}", rep.bound);
        assert!(rep.empirical <= 0.05);
    }

    #[test]
    fn far_particles_do_not_collide() {
        let g = cfg(&[&[0.0, 0.0], &[100.0, 0.0]]);
        let rep = collision_experiment(&g, &PathSpec::new(0.1, 1e-3), &[1.0, 0.1], 50, 0).unwrap();
        assert_eq!(rep.fractions, vec![0.0, 0.0]);
    }

    #[test]
    fn marginal_after_one_step() {
        let g = cfg(&[&[0.5, -0.5]]);
        let rep = marginal_check(&g, &PathSpec::new(0.1, 0.1), 4000, 11).unwrap();
        assert!(rep.verdict.is_pass(), "{rep:?}");
    }
}
