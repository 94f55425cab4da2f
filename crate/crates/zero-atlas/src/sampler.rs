//! Random coefficient noise, truncation of entire series, and stable
//! evaluation of random function realizations.
//!
//! Noise draws are counter-based: draw `k` is a pure function of
//! `(seed, k)`, so coefficient `k` keeps its value when the truncation
//! degree changes and realizations couple across scales.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::schedule::{CoefficientSchedule, TAIL_EPSILON};

/// Noise models for the i.i.d. coefficients. Magnitudes are produced in log
/// domain; the phase carries the sign or argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseDistribution {
    /// Standard complex Gaussian, density `pi^{-1} exp(-|z|^2)`.
    ComplexGaussian,
    /// Standard real Gaussian.
    RealGaussian,
    /// Uniform on `{-1, +1}`.
    Rademacher,
    /// Standard real Cauchy.
    Cauchy,
    /// `P[log|xi| > t] = t^{-gamma}` for `t > 1`, argument uniform.
    ParetoLog { gamma: f64 },
    /// Uniform on the closed unit disk.
    UniformDisc,
}

/// One draw, stored as `(log |xi|, arg xi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSample {
    pub log_mag: f64,
    pub phase: f64,
}

const TAU: f64 = 2.0 * std::f64::consts::PI;

impl NoiseDistribution {
    pub fn validate(&self) -> Result<()> {
        if let NoiseDistribution::ParetoLog { gamma } = self {
            if !(*gamma > 0.0) || !gamma.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "pareto_log tail exponent must be positive, got {gamma}"
                )));
            }
        }
        Ok(())
    }

    /// Whether `E log(1 + |xi|)` is finite. `pareto_log` with `gamma <= 1`
    /// violates it and is kept for demonstrations only.
    pub fn has_log_moment(&self) -> bool {
        match self {
            NoiseDistribution::ParetoLog { gamma } => *gamma > 1.0,
            _ => true,
        }
    }

    /// True when every draw is real (phase 0 or pi).
    pub fn is_real(&self) -> bool {
        matches!(
            self,
            NoiseDistribution::RealGaussian | NoiseDistribution::Rademacher | NoiseDistribution::Cauchy
        )
    }

    pub fn label(&self) -> String {
        match self {
            NoiseDistribution::ComplexGaussian => "complex_gaussian".into(),
            NoiseDistribution::RealGaussian => "real_gaussian".into(),
            NoiseDistribution::Rademacher => "rademacher".into(),
            NoiseDistribution::Cauchy => "cauchy".into(),
            NoiseDistribution::ParetoLog { gamma } => format!("pareto_log(gamma={gamma})"),
            NoiseDistribution::UniformDisc => "uniform_disc".into(),
        }
    }

    /// Parse a label as produced by `label` (with `pareto_log:g` also accepted).
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim().to_ascii_lowercase().replace('-', "_");
        let dist = match t.as_str() {
            "complex_gaussian" => NoiseDistribution::ComplexGaussian,
            "real_gaussian" => NoiseDistribution::RealGaussian,
            "rademacher" => NoiseDistribution::Rademacher,
            "cauchy" => NoiseDistribution::Cauchy,
            "uniform_disc" => NoiseDistribution::UniformDisc,
            other => {
                let rest = other
                    .strip_prefix("pareto_log")
                    .ok_or_else(|| Error::Parse(format!("unknown noise kind: {text}")))?;
                let arg = rest
                    .trim_start_matches([':', '(', '='])
                    .trim_end_matches(')')
                    .trim_start_matches("gamma=");
                let gamma: f64 = arg
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad pareto_log parameter: {text}")))?;
                NoiseDistribution::ParetoLog { gamma }
            }
        };
        dist.validate()?;
        Ok(dist)
    }

    /// Draw `k` as a pure function of `(seed, k)`.
    pub fn draw(&self, seed: u64, k: u64) -> NoiseSample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k);
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        // map [0,1) to (0,1] so logs stay finite
        let v1 = 1.0 - u1;
        match self {
            NoiseDistribution::ComplexGaussian => {
                // |xi|^2 ~ Exp(1), angle uniform
                let e = -v1.ln();
                NoiseSample {
                    log_mag: 0.5 * e.ln(),
                    phase: TAU * u2,
                }
            }
            NoiseDistribution::RealGaussian => {
                let x = (-2.0 * v1.ln()).sqrt() * (TAU * u2).cos();
                NoiseSample {
                    log_mag: x.abs().ln(),
                    phase: if x < 0.0 { std::f64::consts::PI } else { 0.0 },
                }
            }
            NoiseDistribution::Rademacher => NoiseSample {
                log_mag: 0.0,
                phase: if u1 < 0.5 { 0.0 } else { std::f64::consts::PI },
            },
            NoiseDistribution::Cauchy => {
                let x = (std::f64::consts::PI * (u1 - 0.5)).tan();
                NoiseSample {
                    log_mag: x.abs().ln(),
                    phase: if x < 0.0 { std::f64::consts::PI } else { 0.0 },
                }
            }
            NoiseDistribution::ParetoLog { gamma } => NoiseSample {
                log_mag: v1.powf(-1.0 / gamma),
                phase: TAU * u2,
            },
            NoiseDistribution::UniformDisc => NoiseSample {
                log_mag: 0.5 * v1.ln(),
                phase: TAU * u2,
            },
        }
    }

    /// `count` draws as parallel `(log_mag, phase)` arrays.
    pub fn draw_noise(&self, count: usize, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
        if count == 0 {
            return Err(Error::InvalidParameter("count must be >= 1".into()));
        }
        self.validate()?;
        let mut log_mag = Vec::with_capacity(count);
        let mut phase = Vec::with_capacity(count);
        for k in 0..count {
            let s = self.draw(seed, k as u64);
            log_mag.push(s.log_mag);
            phase.push(s.phase);
        }
        Ok((log_mag, phase))
    }
}

/// Smallest `K` such that the bounded tail
/// `sum_{k > K} exp(log|f_k| + eps k + k log r)` drops below `tol`, with
/// `eps` the noise-growth margin. Polynomial schedules return their exact
/// degree. The bound is evaluated over the materialized entries; if they end
/// before the tail is controlled the schedule is too short, and if the bound
/// terms are still growing there the series is treated as divergent at `r`.
pub fn truncation_degree(schedule: &CoefficientSchedule, r: f64, tol: f64) -> Result<usize> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidParameter("radius must be positive".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    let ln_r = r.ln();
    if ln_r >= schedule.log_r0() {
        return Err(Error::Divergence(format!(
            "radius {r} at or beyond the convergence radius"
        )));
    }
    if let Some(d) = schedule.degree_hint() {
        return Ok(d.min(schedule.len() - 1));
    }
    let eps = if schedule.log_r0().is_finite() {
        TAIL_EPSILON.min(0.5 * (schedule.log_r0() - ln_r))
    } else {
        TAIL_EPSILON
    };
    let n = schedule.len();
    let terms: Vec<f64> = (0..n)
        .map(|k| schedule.log_mag(k) + k as f64 * (eps + ln_r))
        .collect();
    // suffix log-sum-exp
    let mut suffix = vec![f64::NEG_INFINITY; n + 1];
    for k in (0..n).rev() {
        suffix[k] = log_add(suffix[k + 1], terms[k]);
    }
    let ln_tol = tol.ln();
    for kk in 0..n {
        if suffix[kk + 1] < ln_tol {
            return Ok(kk);
        }
    }
    // tail never controlled within the materialized entries
    let w = 16.min(n - 1);
    let growing = terms[n - 1] >= terms[n - 1 - w];
    if growing {
        Err(Error::Divergence(format!(
            "tail terms still growing at k = {}; empirical convergence radius below {r}",
            n - 1
        )))
    } else {
        Err(Error::InvalidParameter(format!(
            "schedule too short ({n} entries) to certify tail < {tol} at r = {r}"
        )))
    }
}

#[inline]
fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// One realization `G(z) = sum xi_k f_k z^k`, truncated for a window.
#[derive(Debug, Clone)]
pub struct RandomFunctionInstance {
    schedule: CoefficientSchedule,
    noise_log_mag: Vec<f64>,
    noise_phase: Vec<f64>,
    degree: usize,
    seed: u64,
    window_radius: f64,
    noise_label: String,
}

/// Stable value of `log G(z)`: magnitude in log domain plus a phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogComplex {
    pub log_mag: f64,
    pub phase: f64,
}

impl LogComplex {
    pub fn to_complex(self) -> Complex64 {
        Complex64::from_polar(self.log_mag.exp(), self.phase)
    }
}

/// Attach noise to a schedule, truncating entire series so the tail beyond
/// the returned degree is below `1e-12` (times the realized noise bound)
/// everywhere in the window.
pub fn instantiate(
    schedule: &CoefficientSchedule,
    dist: NoiseDistribution,
    seed: u64,
    window_radius: f64,
) -> Result<RandomFunctionInstance> {
    dist.validate()?;
    if !(window_radius > 0.0) {
        return Err(Error::InvalidParameter("window radius must be positive".into()));
    }
    if window_radius.ln() >= schedule.log_r0() {
        return Err(Error::Divergence(format!(
            "window radius {window_radius} not below the convergence radius"
        )));
    }
    let degree = truncation_degree(schedule, window_radius, 1e-12)?;
    let (noise_log_mag, noise_phase) = dist.draw_noise(degree + 1, seed)?;
    Ok(RandomFunctionInstance {
        schedule: schedule.clone(),
        noise_log_mag,
        noise_phase,
        degree,
        seed,
        window_radius,
        noise_label: dist.label(),
    })
}

impl RandomFunctionInstance {
    /// Deterministic instance with unit noise (`xi_k = 1`).
    pub fn deterministic(schedule: &CoefficientSchedule, window_radius: f64) -> Result<Self> {
        if !(window_radius > 0.0) || window_radius.ln() >= schedule.log_r0() {
            return Err(Error::InvalidParameter("bad window radius".into()));
        }
        let degree = truncation_degree(schedule, window_radius, 1e-12)?;
        Ok(RandomFunctionInstance {
            schedule: schedule.clone(),
            noise_log_mag: vec![0.0; degree + 1],
            noise_phase: vec![0.0; degree + 1],
            degree,
            seed: 0,
            window_radius,
            noise_label: "deterministic".into(),
        })
    }

    /// Instance with explicit combined coefficients (tests, special sums).
    pub fn from_log_coefficients(
        log_mags: Vec<f64>,
        phases: Vec<f64>,
        window_radius: f64,
    ) -> Result<Self> {
        let degree = log_mags.len().saturating_sub(1);
        let schedule = CoefficientSchedule::from_parts(
            1,
            log_mags,
            phases,
            Some(degree),
            f64::INFINITY,
            "explicit",
        )?;
        Ok(RandomFunctionInstance {
            noise_log_mag: vec![0.0; degree + 1],
            noise_phase: vec![0.0; degree + 1],
            schedule,
            degree,
            seed: 0,
            window_radius,
            noise_label: "explicit".into(),
        })
    }

    pub fn schedule(&self) -> &CoefficientSchedule {
        &self.schedule
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn window_radius(&self) -> f64 {
        self.window_radius
    }

    pub fn n(&self) -> u32 {
        self.schedule.n()
    }

    pub fn noise_label(&self) -> &str {
        &self.noise_label
    }

    /// Combined `log |xi_k f_k|`.
    pub fn term_log_mag(&self, k: usize) -> f64 {
        self.schedule.log_mag(k) + self.noise_log_mag[k]
    }

    /// Combined `arg(xi_k f_k)`.
    pub fn term_phase(&self, k: usize) -> f64 {
        self.schedule.phase(k) + self.noise_phase[k]
    }

    /// Largest per-term log-magnitude over `k = 0..=degree` at radius `|z|`.
    fn peak_term(&self, ln_r: f64) -> f64 {
        let mut peak = f64::NEG_INFINITY;
        for k in 0..=self.degree {
            let v = self.term_log_mag(k) + k as f64 * ln_r;
            if v > peak {
                peak = v;
            }
        }
        peak
    }

    /// `log sum_k |xi_k f_k z^k|`: the coefficient-scale used by backward
    /// error certificates.
    pub fn log_term_sum(&self, z: Complex64) -> f64 {
        let r = z.norm();
        if r == 0.0 {
            return self.term_log_mag(0);
        }
        let ln_r = r.ln();
        let peak = self.peak_term(ln_r);
        if peak == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let mut sum = 0.0;
        for k in 0..=self.degree {
            let v = self.term_log_mag(k) + k as f64 * ln_r - peak;
            if v > -745.0 {
                sum += v.exp();
            }
        }
        peak + sum.ln()
    }

    /// Evaluate `G(z)` stably: scale by the peak term, accumulate with
    /// compensated summation, return `log |G|` and the phase.
    ///
    /// Errors with `IdenticallyZero` when every term vanishes.
    pub fn evaluate(&self, z: Complex64) -> Result<LogComplex> {
        let r = z.norm();
        if r > self.window_radius * (1.0 + 1e-9) {
            return Err(Error::Domain(format!(
                "|z| = {r} outside instance window {}",
                self.window_radius
            )));
        }
        self.evaluate_raw(z)
    }

    /// Evaluate the truncated polynomial anywhere, without the window check.
    /// Outside the window the value is that of the truncation, not of the
    /// underlying series.
    pub(crate) fn evaluate_raw(&self, z: Complex64) -> Result<LogComplex> {
        let r = z.norm();
        if r == 0.0 {
            let lm = self.term_log_mag(0);
            if lm == f64::NEG_INFINITY && self.degree == 0 {
                return Err(Error::IdenticallyZero);
            }
            return Ok(LogComplex {
                log_mag: lm,
                phase: self.term_phase(0),
            });
        }
        let ln_r = r.ln();
        let arg = z.arg();
        let peak = self.peak_term(ln_r);
        if peak == f64::NEG_INFINITY {
            return Err(Error::IdenticallyZero);
        }
        // compensated accumulation of the peak-scaled terms
        let (mut re, mut re_c, mut im, mut im_c) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for k in 0..=self.degree {
            let lm = self.term_log_mag(k) + k as f64 * ln_r - peak;
            if lm < -745.0 {
                continue;
            }
            let mag = lm.exp();
            let ph = self.term_phase(k) + k as f64 * arg;
            let (s, c) = ph.sin_cos();
            let tr = mag * c;
            let ti = mag * s;
            let y = tr - re_c;
            let t = re + y;
            re_c = (t - re) - y;
            re = t;
            let y = ti - im_c;
            let t = im + y;
            im_c = (t - im) - y;
            im = t;
        }
        let norm = re.hypot(im);
        Ok(LogComplex {
            log_mag: if norm == 0.0 {
                f64::NEG_INFINITY
            } else {
                peak + norm.ln()
            },
            phase: im.atan2(re),
        })
    }

    /// The derivative realization `G'`; same noise, shifted schedule.
    pub fn derivative(&self) -> Result<Self> {
        if self.degree == 0 {
            return Err(Error::Degenerate("derivative of a constant".into()));
        }
        let mut log_mags = Vec::with_capacity(self.degree);
        let mut phases = Vec::with_capacity(self.degree);
        for k in 1..=self.degree {
            log_mags.push(self.schedule.log_mag(k) + (k as f64).ln());
            phases.push(self.schedule.phase(k));
        }
        let schedule = CoefficientSchedule::from_parts(
            self.schedule.n(),
            log_mags,
            phases,
            Some(self.degree - 1),
            self.schedule.log_r0(),
            format!("{}'", self.schedule.label()),
        )?;
        Ok(RandomFunctionInstance {
            schedule,
            noise_log_mag: self.noise_log_mag[1..].to_vec(),
            noise_phase: self.noise_phase[1..].to_vec(),
            degree: self.degree - 1,
            seed: self.seed,
            window_radius: self.window_radius,
            noise_label: self.noise_label.clone(),
        })
    }

    /// Serialized manifest for exact replay.
    pub fn manifest(&self) -> String {
        format!(
            "schedule = {}\nn = {}\nnoise = {}\nseed = {}\ndegree = {}\nwindow = {:.17e}\n",
            self.schedule.label(),
            self.schedule.n(),
            self.noise_label,
            self.seed,
            self.degree,
            self.window_radius
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::{coefficients, RadialProfile};
    use approx::assert_relative_eq;

    #[test]
    fn rademacher_draws() {
        let (lm, ph) = NoiseDistribution::Rademacher.draw_noise(4, 9).unwrap();
        assert!(lm.iter().all(|&v| v == 0.0));
        assert!(ph.iter().all(|&p| p == 0.0 || p == std::f64::consts::PI));
    }

    #[test]
    fn complex_gaussian_second_moment() {
        let n = 1_000_000;
        let (lm, _) = NoiseDistribution::ComplexGaussian.draw_noise(n, 123).unwrap();
        let mean_sq: f64 = lm.iter().map(|v| (2.0 * v).exp()).sum::<f64>() / n as f64;
        assert!((mean_sq - 1.0).abs() <= 0.01, "E|xi|^2 = {mean_sq}");
    }

    #[test]
    fn pareto_log_tail_probability() {
        let n = 1_000_000;
        let (lm, _) = NoiseDistribution::ParetoLog { gamma: 4.0 }
            .draw_noise(n, 42)
            .unwrap();
        let p_hat = lm.iter().filter(|&&v| v > 2.0).count() as f64 / n as f64;
        let p = 2.0f64.powi(-4);
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((p_hat - p).abs() <= 3.0 * sigma, "p_hat = {p_hat}");
    }

    #[test]
    fn pareto_log_rejects_bad_gamma() {
        assert!(NoiseDistribution::ParetoLog { gamma: 0.0 }.validate().is_err());
        assert!(!NoiseDistribution::ParetoLog { gamma: 0.5 }.has_log_moment());
        assert!(NoiseDistribution::ParetoLog { gamma: 4.0 }.has_log_moment());
    }

    #[test]
    fn noise_parse_round_trip() {
        for d in [
            NoiseDistribution::ComplexGaussian,
            NoiseDistribution::Rademacher,
            NoiseDistribution::Cauchy,
            NoiseDistribution::ParetoLog { gamma: 4.0 },
            NoiseDistribution::UniformDisc,
            NoiseDistribution::RealGaussian,
        ] {
            assert_eq!(NoiseDistribution::parse(&d.label()).unwrap(), d);
        }
        assert_eq!(
            NoiseDistribution::parse("pareto-log:2.5").unwrap(),
            NoiseDistribution::ParetoLog { gamma: 2.5 }
        );
    }

    #[test]
    fn draws_are_counter_based() {
        let d = NoiseDistribution::ComplexGaussian;
        let a = d.draw(5, 17);
        let (lm, ph) = d.draw_noise(32, 5).unwrap();
        assert_eq!(a.log_mag, lm[17]);
        assert_eq!(a.phase, ph[17]);
    }

    #[test]
    fn truncation_flat_tail_bound() {
        let p = RadialProfile::flat(1.0, 0.0).unwrap();
        let s = coefficients(&p, 100, 4000).unwrap();
        let k = truncation_degree(&s, 2.0, 1e-12).unwrap();
        // oracle: direct tail sums at K and K-1
        let tail = |kk: usize| -> f64 {
            (kk + 1..s.len())
                .map(|j| (s.log_mag(j) + j as f64 * (TAIL_EPSILON + 2.0f64.ln())).exp())
                .sum()
        };
        assert!(tail(k) < 1e-12, "tail at K = {}", tail(k));
        assert!(tail(k - 1) >= 1e-12, "K not minimal");
    }

    #[test]
    fn truncation_polynomial_is_exact_degree() {
        let p = RadialProfile::kac();
        let s = coefficients(&p, 50, 50).unwrap();
        assert_eq!(truncation_degree(&s, 2.0, 1e-12).unwrap(), 50);
    }

    #[test]
    fn truncation_hyperbolic_grows_toward_radius_one() {
        let p = RadialProfile::hyperbolic(0.5).unwrap();
        let s = crate::schedule::schedule_for_window(&p, 50, 0.99, 1e-10).unwrap();
        let k99 = truncation_degree(&s, 0.99, 1e-10).unwrap();
        let k90 = truncation_degree(&s, 0.90, 1e-10).unwrap();
        assert!(k99 > k90, "K(0.99) = {k99} <= K(0.9) = {k90}");
        assert!(truncation_degree(&s, 1.0, 1e-10).is_err());
    }

    #[test]
    fn instantiate_polynomial_and_entire() {
        let kac = coefficients(&RadialProfile::kac(), 100, 100).unwrap();
        let inst = instantiate(&kac, NoiseDistribution::ComplexGaussian, 1, 2.0).unwrap();
        assert_eq!(inst.degree(), 100);

        let theta = RadialProfile::theta(2.0).unwrap();
        let s = crate::schedule::schedule_for_window(&theta, 100, 4.0, 1e-12).unwrap();
        let inst = instantiate(&s, NoiseDistribution::ComplexGaussian, 1, 4.0).unwrap();
        let tail: f64 = (inst.degree() + 1..s.len())
            .map(|j| (s.log_mag(j) + j as f64 * (TAIL_EPSILON + 4.0f64.ln())).exp())
            .sum();
        assert!(tail < 1e-12);

        let flat = RadialProfile::flat(0.5, 0.0).unwrap();
        let s = crate::schedule::schedule_for_window(&flat, 400, 1.5, 1e-12).unwrap();
        let inst = instantiate(&s, NoiseDistribution::ComplexGaussian, 1, 1.5).unwrap();
        assert!(inst.degree() >= 400 && inst.degree() < s.len());
    }

    #[test]
    fn evaluate_single_term_and_direct_sum() {
        // single nonzero term: log|G| equals the term's log-magnitude
        let inst = RandomFunctionInstance::from_log_coefficients(
            vec![0.25f64.ln(), f64::NEG_INFINITY, f64::NEG_INFINITY],
            vec![0.0, 0.0, 0.0],
            2.0,
        )
        .unwrap();
        for z in [Complex64::new(0.3, 0.2), Complex64::new(-1.0, 0.5)] {
            let v = inst.evaluate(z).unwrap();
            assert_relative_eq!(v.log_mag, 0.25f64.ln(), epsilon = 1e-14);
        }

        // Kac n=2 with unit noise at z=1 sums to 3
        let kac = coefficients(&RadialProfile::kac(), 2, 2).unwrap();
        let inst = RandomFunctionInstance::deterministic(&kac, 2.0).unwrap();
        let v = inst.evaluate(Complex64::new(1.0, 0.0)).unwrap();
        assert_relative_eq!(v.log_mag, 3.0f64.ln(), epsilon = 1e-14);
        assert!(v.phase.abs() < 1e-14);
    }

    // exact-rational oracle: flat alpha=1 n=50 with Rademacher signs has
    // coefficients 50^k / k!, all exactly representable as big rationals
    #[test]
    fn evaluate_matches_exact_rational_oracle() {
        use num::{BigInt, BigRational, One, Signed, Zero};

        let p = RadialProfile::flat(1.0, 0.0).unwrap();
        let sched = crate::schedule::schedule_for_window(&p, 50, 1.0, 1e-12).unwrap();
        let inst = instantiate(&sched, NoiseDistribution::Rademacher, 2024, 1.0).unwrap();
        let z = Complex64::new(0.5, 0.0);
        let got = inst.evaluate(z).unwrap();

        let mut acc = BigRational::zero();
        let mut term = BigRational::one(); // 50^k / (k! 2^k) at k = 0
        let half = BigRational::new(BigInt::from(1), BigInt::from(2));
        let fifty = BigRational::from(BigInt::from(50));
        for k in 0..=inst.degree() {
            if k > 0 {
                term = term * &fifty * &half / BigRational::from(BigInt::from(k as i64));
            }
            let sign = if inst.term_phase(k).abs() > 1.0 { -1 } else { 1 };
            acc += term.clone() * BigRational::from(BigInt::from(sign));
        }
        assert!(!acc.is_zero());
        // high-precision log of |p/q| via bit lengths
        let log_big = |x: &BigInt| -> f64 {
            let b = x.bits() as i64;
            let shift = (b - 64).max(0);
            let top: BigInt = x.abs() >> shift as u64;
            let top_f = top.to_string().parse::<f64>().unwrap();
            top_f.ln() + shift as f64 * std::f64::consts::LN_2
        };
        let expect = log_big(acc.numer()) - log_big(acc.denom());
        assert!(
            (got.log_mag - expect).abs() <= 1e-10 * expect.abs().max(1.0),
            "got {} expect {expect}",
            got.log_mag
        );
    }

    #[test]
    fn determinism_and_conjugate_symmetry() {
        let p = RadialProfile::lo_poly(0.5, 0.0).unwrap();
        let s = coefficients(&p, 60, 60).unwrap();
        let a = instantiate(&s, NoiseDistribution::RealGaussian, 7, 1.5).unwrap();
        let b = instantiate(&s, NoiseDistribution::RealGaussian, 7, 1.5).unwrap();
        for i in 0..100 {
            let th = i as f64 * 0.0628;
            let z = Complex64::from_polar(0.3 + 0.01 * i as f64 % 1.0, th);
            let va = a.evaluate(z).unwrap();
            let vb = b.evaluate(z).unwrap();
            assert_eq!(va, vb);
            // real coefficients: G(conj z) = conj G(z)
            let vc = a.evaluate(z.conj()).unwrap();
            assert_relative_eq!(vc.log_mag, va.log_mag, epsilon = 1e-12, max_relative = 1e-12);
            let wrap = |x: f64| {
                let mut y = x % TAU;
                if y > std::f64::consts::PI {
                    y -= TAU;
                }
                if y < -std::f64::consts::PI {
                    y += TAU;
                }
                y
            };
            assert!(wrap(vc.phase + va.phase).abs() < 1e-9);
        }
    }

    #[test]
    fn tail_safety_at_window_boundary() {
        let p = RadialProfile::flat(0.5, 0.0).unwrap();
        let s = crate::schedule::schedule_for_window(&p, 200, 1.2, 1e-14).unwrap();
        let inst = instantiate(&s, NoiseDistribution::ComplexGaussian, 3, 1.2).unwrap();
        let k = inst.degree();
        // re-instantiate with 50 more terms; values at the boundary agree
        let longer = RandomFunctionInstance {
            schedule: s.clone(),
            noise_log_mag: {
                let (lm, _) = NoiseDistribution::ComplexGaussian
                    .draw_noise(k + 51, 3)
                    .unwrap();
                lm
            },
            noise_phase: {
                let (_, ph) = NoiseDistribution::ComplexGaussian
                    .draw_noise(k + 51, 3)
                    .unwrap();
                ph
            },
            degree: k + 50,
            seed: 3,
            window_radius: 1.2,
            noise_label: "complex_gaussian".into(),
        };
        let z = Complex64::from_polar(1.2, 0.7);
        let va = inst.evaluate(z).unwrap();
        let vb = longer.evaluate(z).unwrap();
        assert!(
            (va.log_mag - vb.log_mag).abs() <= 1e-10 * va.log_mag.abs().max(1.0),
            "{} vs {}",
            va.log_mag,
            vb.log_mag
        );
    }

    #[test]
    fn log_moment_realization_bounded() {
        // sup_k |xi_k| e^{-0.05 k} finite and attained early for gamma = 4
        let d = NoiseDistribution::ParetoLog { gamma: 4.0 };
        let (lm, _) = d.draw_noise(100_000, 77).unwrap();
        let mut sup = f64::NEG_INFINITY;
        let mut arg = 0usize;
        for (k, v) in lm.iter().enumerate() {
            let b = v - 0.05 * k as f64;
            if b > sup {
                sup = b;
                arg = k;
            }
        }
        assert!(sup.is_finite());
        assert!(arg < 10_000, "bound attained at k = {arg}");
    }

    #[test]
    fn identically_zero_errors() {
        let inst = RandomFunctionInstance::from_log_coefficients(
            vec![f64::NEG_INFINITY, f64::NEG_INFINITY],
            vec![0.0, 0.0],
            1.0,
        )
        .unwrap();
        assert!(matches!(
            inst.evaluate(Complex64::new(0.5, 0.0)),
            Err(Error::IdenticallyZero)
        ));
    }

    #[test]
    fn derivative_shifts_terms() {
        // d/dz (1 + z + z^2) = 1 + 2z
        let inst = RandomFunctionInstance::from_log_coefficients(
            vec![0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0],
            2.0,
        )
        .unwrap();
        let d = inst.derivative().unwrap();
        let v = d.evaluate(Complex64::new(1.0, 0.0)).unwrap();
        assert_relative_eq!(v.log_mag, 3.0f64.ln(), epsilon = 1e-14);
    }
}
