//! Empirical zero measures and their comparison against the limit law:
//! windowed radial Kolmogorov-Smirnov distance, circular (rotation-minimized)
//! angular KS, pointwise potential convergence checks, and the Monte Carlo
//! orchestration that aggregates them over trials.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limitlaw::LimitMeasure;
use crate::roots::{find_roots, ZeroSet};
use crate::sampler::{instantiate, NoiseDistribution, RandomFunctionInstance};
use crate::schedule::CoefficientSchedule;

/// Right-continuous empirical radial CDF with weights `multiplicity / n`.
#[derive(Debug, Clone)]
pub struct StepCdf {
    /// distinct radii, ascending
    pub radii: Vec<f64>,
    /// cumulative weight at and below each radius
    pub cum: Vec<f64>,
}

impl StepCdf {
    pub fn value(&self, r: f64) -> f64 {
        match self.radii.binary_search_by(|v| v.total_cmp(&r)) {
            Ok(i) => self.cum[i],
            Err(0) => 0.0,
            Err(i) => self.cum[i - 1],
        }
    }

    /// Plateaus as `(r_lo, r_hi, level)` triples between consecutive jumps.
    pub fn plateaus(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        for i in 0..self.radii.len().saturating_sub(1) {
            out.push((self.radii[i], self.radii[i + 1], self.cum[i]));
        }
        out
    }
}

/// Empirical radial CDF `r -> (1/n) #\{zeros in the closed disk r\}`.
///
/// Origin zeros enter at radius 0.
pub fn empirical_radial_cdf(zs: &ZeroSet, n: u32) -> Result<StepCdf> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    if zs.zeros.is_empty() && zs.origin_multiplicity == 0 {
        return Err(Error::Degenerate("empty zero set".into()));
    }
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(zs.zeros.len() + 1);
    if zs.origin_multiplicity > 0 {
        pairs.push((0.0, zs.origin_multiplicity as f64));
    }
    for z in &zs.zeros {
        pairs.push((z.location.norm(), z.multiplicity as f64));
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut radii = Vec::with_capacity(pairs.len());
    let mut cum = Vec::with_capacity(pairs.len());
    let mut acc = 0.0;
    for (r, w) in pairs {
        acc += w / n as f64;
        if radii.last().is_some_and(|&last: &f64| last == r) {
            *cum.last_mut().unwrap() = acc;
        } else {
            radii.push(r);
            cum.push(acc);
        }
    }
    Ok(StepCdf { radii, cum })
}

/// Windowed radial distance between the zeros and the limit law.
///
/// Both CDFs are restricted to the closed disk of the window radius and
/// normalized to total mass one there. The statistic is the Levy distance
/// `inf { eps : F_th(r - eps) - eps <= F_emp(r) <= F_th(r + eps) + eps }`,
/// evaluated at the jump points of both CDFs and solved by bisection.
/// The horizontal slack is what handles atoms: an atom law compares the
/// empirical CDF against left and right limits of the theory CDF shifted by
/// `eps`, so finite-size radial spread around an atom circle is charged at
/// its actual width rather than as a unit-mass vertical discrepancy. On
/// atomless laws the statistic is the usual KS distance up to that slack,
/// and it metrizes exactly the weak convergence being tested.
pub fn ks_radial(zs: &ZeroSet, n: u32, lm: &LimitMeasure, window: f64) -> Result<f64> {
    let _ = n;
    if !(window > 0.0) {
        return Err(Error::InvalidParameter("window must be positive".into()));
    }
    let total_th = lm.radial_cdf(window)?;
    if !(total_th > 0.0) {
        return Err(Error::Degenerate("limit law has no mass in the window".into()));
    }
    let mut radii: Vec<(f64, f64)> = Vec::new();
    if zs.origin_multiplicity > 0 {
        radii.push((0.0, zs.origin_multiplicity as f64));
    }
    for z in &zs.zeros {
        let r = z.location.norm();
        if r <= window {
            radii.push((r, z.multiplicity as f64));
        }
    }
    if radii.is_empty() {
        return Err(Error::Degenerate("no zeros inside the window".into()));
    }
    radii.sort_by(|a, b| a.0.total_cmp(&b.0));
    let m: f64 = radii.iter().map(|p| p.1).sum();
    // group duplicates: the empirical CDF jumps once per distinct radius
    let mut grouped: Vec<(f64, f64)> = Vec::with_capacity(radii.len());
    for (r, w) in radii {
        match grouped.last_mut() {
            Some((last_r, last_w)) if *last_r == r => *last_w += w,
            _ => grouped.push((r, w)),
        }
    }

    let th_closed = |r: f64| -> f64 {
        if r >= window {
            1.0
        } else if r <= 0.0 {
            0.0
        } else {
            lm.radial_cdf(r).map(|v| v / total_th).unwrap_or(1.0)
        }
    };
    let th_open = |r: f64| -> f64 {
        if r > window {
            1.0
        } else if r <= 0.0 {
            0.0
        } else {
            lm.radial_cdf_open(r).map(|v| v / total_th).unwrap_or(1.0)
        }
    };

    // feasibility of a given slack: monotonicity makes the empirical jump
    // points sufficient check points for both one-sided conditions
    let feasible = |eps: f64| -> bool {
        let mut acc = 0.0;
        for (r, w) in &grouped {
            let emp_before = acc / m;
            acc += w;
            let emp_after = acc / m;
            // F_emp(r) <= F_th(r + eps) + eps
            if emp_after > th_closed(r + eps) + eps + 1e-12 {
                return false;
            }
            // F_th(r - eps)^- <= F_emp(r^-) + eps
            if th_open(r - eps) > emp_before + eps + 1e-12 {
                return false;
            }
        }
        // theory mass approaching the window end must be matched too
        th_open(window - eps) <= 1.0 + eps
    };

    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    if feasible(0.0) {
        return Ok(0.0);
    }
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi.clamp(0.0, 1.0))
}

/// Circular KS distance of zero arguments against the uniform law: the
/// minimum over a 1024-point rotation grid of the linear KS statistic.
pub fn ks_angular(zs: &ZeroSet) -> Result<f64> {
    let mut args: Vec<f64> = Vec::new();
    for z in &zs.zeros {
        for _ in 0..z.multiplicity {
            args.push(
                z.location.arg().rem_euclid(2.0 * std::f64::consts::PI)
                    / (2.0 * std::f64::consts::PI),
            );
        }
    }
    if args.len() < 10 {
        return Err(Error::Degenerate(format!(
            "need at least 10 zeros for the angular statistic, have {}",
            args.len()
        )));
    }
    args.sort_by(|a, b| a.total_cmp(b));
    let m = args.len();
    let mf = m as f64;
    const ROTATIONS: usize = 1024;
    let mut best = 1.0f64;
    for j in 0..ROTATIONS {
        let tau = j as f64 / ROTATIONS as f64;
        // rotated sorted sample = cyclic shift at the first element > 1 - tau
        let cut = args.partition_point(|&x| x + tau < 1.0);
        let mut d = 0.0f64;
        for i in 0..m {
            let v = if i < m - cut {
                args[cut + i] + tau - 1.0
            } else {
                args[i - (m - cut)] + tau
            };
            d = d.max(v - i as f64 / mf).max((i + 1) as f64 / mf - v);
        }
        best = best.min(d);
    }
    Ok(best)
}

/// Pointwise potential check at `z`: `p_n = log|G(z)| / n` against the
/// conjugate target `I(log |z|)`.
#[derive(Debug, Clone, Copy)]
pub struct PotentialCheck {
    pub z: Complex64,
    pub p_n: f64,
    pub target: f64,
    pub gap: f64,
}

/// Evaluate the normalized log-modulus and its deterministic target.
///
/// Errors when `z` is (numerically) a zero of the realization; callers
/// resample with a declared jitter.
pub fn potential_at(
    inst: &RandomFunctionInstance,
    lm: &LimitMeasure,
    z: Complex64,
) -> Result<PotentialCheck> {
    if z.norm() == 0.0 {
        return Err(Error::Domain("potential check requires z != 0".into()));
    }
    let v = inst.evaluate(z)?;
    if v.log_mag == f64::NEG_INFINITY {
        return Err(Error::Degenerate(format!("z = {z} is a zero of the realization")));
    }
    let p_n = v.log_mag / inst.n() as f64;
    let target = lm.conjugate().i_at(z.norm().ln())?;
    Ok(PotentialCheck {
        z,
        p_n,
        target,
        gap: p_n - target,
    })
}

/// Configuration of one Monte Carlo comparison campaign.
#[derive(Debug, Clone)]
pub struct CompareConfig {
    pub ensemble: String,
    pub schedule: CoefficientSchedule,
    pub noise: NoiseDistribution,
    pub trials: u32,
    pub window: f64,
    pub base_seed: u64,
    /// probe points for the potential check (may be empty)
    pub probes: Vec<Complex64>,
}

/// Per-trial statistics.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TrialStats {
    pub seed: u64,
    pub ks_radial: f64,
    pub ks_angular: f64,
    pub count: usize,
}

/// Aggregates over successful trials.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
pub struct Aggregate {
    pub mean_ks_radial: f64,
    pub mean_ks_angular: f64,
    pub max_ks_radial: f64,
    pub max_ks_angular: f64,
    pub mean_count: f64,
}

/// Mean potential gap at one probe point.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PotentialSummary {
    pub z_re: f64,
    pub z_im: f64,
    pub p_n_mean: f64,
    pub target: f64,
    pub gap: f64,
}

/// A trial that failed, with its error message.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TrialError {
    pub trial: u32,
    pub seed: u64,
    pub message: String,
}

/// Empirical-vs-theoretical statistics over Monte Carlo trials.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ComparisonReport {
    pub ensemble: String,
    pub noise: String,
    pub n: u32,
    pub trials: u32,
    pub window: f64,
    pub base_seed: u64,
    pub per_trial: Vec<TrialStats>,
    pub aggregate: Aggregate,
    pub potential: Vec<PotentialSummary>,
    pub errors: Vec<TrialError>,
}

struct TrialOutcome {
    stats: TrialStats,
    potentials: Vec<Option<PotentialCheck>>,
}

fn run_trial(
    cfg: &CompareConfig,
    lm: &LimitMeasure,
    trial: u32,
) -> Result<TrialOutcome> {
    let seed = cfg.base_seed ^ trial as u64;
    let inst = instantiate(&cfg.schedule, cfg.noise, seed, cfg.window)?;
    let zs = find_roots(&inst)?;
    let ks_r = ks_radial(&zs, cfg.schedule.n(), lm, cfg.window)?;
    let ks_a = ks_angular(&zs)?;
    let count = zs.count_in_disk(cfg.window);
    let mut potentials = Vec::with_capacity(cfg.probes.len());
    for &z in &cfg.probes {
        // jitter radially off realized zeros, a few attempts
        let mut probe = z;
        let mut res = potential_at(&inst, lm, probe);
        let mut tries = 0;
        while res.is_err() && tries < 3 {
            probe *= 1.0 + 1e-6 * (tries + 1) as f64;
            res = potential_at(&inst, lm, probe);
            tries += 1;
        }
        potentials.push(res.ok());
    }
    Ok(TrialOutcome {
        stats: TrialStats {
            seed,
            ks_radial: ks_r,
            ks_angular: ks_a,
            count,
        },
        potentials,
    })
}

/// Run the campaign: trial-parallel, deterministic aggregation in trial
/// order, failed trials recorded rather than aborting the report.
pub fn compare_report(cfg: &CompareConfig, lm: &LimitMeasure) -> Result<ComparisonReport> {
    cfg.noise.validate()?;
    let outcomes: Vec<(u32, Result<TrialOutcome>)> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| (t, run_trial(cfg, lm, t)))
        .collect();

    let mut per_trial = Vec::new();
    let mut errors = Vec::new();
    let mut pot_acc: Vec<(f64, f64, usize)> = vec![(0.0, 0.0, 0); cfg.probes.len()];
    for (t, out) in outcomes {
        match out {
            Ok(o) => {
                per_trial.push(o.stats);
                for (i, p) in o.potentials.iter().enumerate() {
                    if let Some(p) = p {
                        pot_acc[i].0 += p.p_n;
                        pot_acc[i].1 = p.target;
                        pot_acc[i].2 += 1;
                    }
                }
            }
            Err(e) => errors.push(TrialError {
                trial: t,
                seed: cfg.base_seed ^ t as u64,
                message: e.to_string(),
            }),
        }
    }

    let mut aggregate = Aggregate::default();
    if !per_trial.is_empty() {
        let m = per_trial.len() as f64;
        for s in &per_trial {
            aggregate.mean_ks_radial += s.ks_radial / m;
            aggregate.mean_ks_angular += s.ks_angular / m;
            aggregate.max_ks_radial = aggregate.max_ks_radial.max(s.ks_radial);
            aggregate.max_ks_angular = aggregate.max_ks_angular.max(s.ks_angular);
            aggregate.mean_count += s.count as f64 / m;
        }
    }

    let potential = cfg
        .probes
        .iter()
        .zip(pot_acc)
        .filter(|(_, (_, _, c))| *c > 0)
        .map(|(z, (sum, target, c))| {
            let p_n_mean = sum / c as f64;
            PotentialSummary {
                z_re: z.re,
                z_im: z.im,
                p_n_mean,
                target,
                gap: p_n_mean - target,
            }
        })
        .collect();

    Ok(ComparisonReport {
        ensemble: cfg.ensemble.clone(),
        noise: cfg.noise.label(),
        n: cfg.schedule.n(),
        trials: cfg.trials,
        window: cfg.window,
        base_seed: cfg.base_seed,
        per_trial,
        aggregate,
        potential,
        errors,
    })
}
