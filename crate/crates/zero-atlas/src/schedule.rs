//! Radial coefficient profiles and concrete coefficient schedules.
//!
//! A profile is the pair `(f, u = -log f)` describing how coefficient
//! magnitudes decay along the diagonal `k ~ t*n`, together with the cutoff
//! `T0` (beyond which coefficients vanish) and the convergence radius `R0`.
//! A schedule materializes `log |f_{k,n}|` for one scale parameter `n`.
//!
//! All magnitudes live in log domain throughout; raw values like `1/2000!`
//! are never formed.

use crate::error::{Error, Result};

/// Hard cap on materialized schedule length.
pub const MAX_COEFFICIENTS: usize = 1 << 24;

/// Safety margin exponent used in tail bounds; stands in for the almost-sure
/// noise growth bound `|xi_k| <= M e^{eps k}`. Tunable in principle; any
/// positive value is valid, smaller values shrink truncation degrees near
/// a finite convergence radius.
pub const TAIL_EPSILON: f64 = 0.05;

/// `t * ln t` continued by its limit `0` at `t = 0`.
#[inline]
pub(crate) fn xlnx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

#[inline]
pub(crate) fn ln_factorial(k: usize) -> f64 {
    libm::lgamma(k as f64 + 1.0)
}

/// Family tag plus parameters of a radial profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileKind {
    Kac,
    Elliptic { alpha: f64 },
    Flat { alpha: f64, beta: f64 },
    Hyperbolic { alpha: f64 },
    LoPoly { alpha: f64, beta: f64 },
    Theta { alpha: f64 },
    ThreeCircles,
    Custom,
}

impl ProfileKind {
    pub fn label(&self) -> String {
        match self {
            ProfileKind::Kac => "kac".into(),
            ProfileKind::Elliptic { alpha } => format!("elliptic(alpha={alpha})"),
            ProfileKind::Flat { alpha, beta } => format!("flat(alpha={alpha},beta={beta})"),
            ProfileKind::Hyperbolic { alpha } => format!("hyperbolic(alpha={alpha})"),
            ProfileKind::LoPoly { alpha, beta } => format!("lo_poly(alpha={alpha},beta={beta})"),
            ProfileKind::Theta { alpha } => format!("theta(alpha={alpha})"),
            ProfileKind::ThreeCircles => "three_circles".into(),
            ProfileKind::Custom => "custom".into(),
        }
    }
}

/// Piecewise-linear sample grid backing a custom profile.
#[derive(Debug, Clone)]
pub struct ProfileGrid {
    pub t: Vec<f64>,
    pub u: Vec<f64>,
}

/// The pair `(f, u)` with cutoff `T0` and convergence radius `R0`.
///
/// `u` is finite and continuous on `[0, T0)`, `+inf` beyond `T0`, and
/// `liminf u(t)/t = log R0` as `t -> inf` when `T0 = inf`.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    kind: ProfileKind,
    t0: f64,
    log_r0: f64,
    grid: Option<ProfileGrid>,
}

impl RadialProfile {
    fn check_alpha(alpha: f64) -> Result<()> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "alpha must be positive and finite, got {alpha}"
            )));
        }
        Ok(())
    }

    /// Kac profile: `u = 0` on `[0, 1]`, `+inf` after.
    pub fn kac() -> Self {
        RadialProfile {
            kind: ProfileKind::Kac,
            t0: 1.0,
            log_r0: f64::INFINITY,
            grid: Some(ProfileGrid {
                t: vec![0.0, 1.0],
                u: vec![0.0, 0.0],
            }),
        }
    }

    /// Elliptic (binomial) profile: `u = alpha (t ln t + (1-t) ln(1-t))` on `[0, 1]`.
    pub fn elliptic(alpha: f64) -> Result<Self> {
        Self::check_alpha(alpha)?;
        Ok(RadialProfile {
            kind: ProfileKind::Elliptic { alpha },
            t0: 1.0,
            log_r0: f64::INFINITY,
            grid: None,
        })
    }

    /// Flat (entire) profile: `u = alpha (t ln t - t) + beta t` on `[0, inf)`.
    pub fn flat(alpha: f64, beta: f64) -> Result<Self> {
        Self::check_alpha(alpha)?;
        if !beta.is_finite() {
            return Err(Error::InvalidParameter("beta must be finite".into()));
        }
        Ok(RadialProfile {
            kind: ProfileKind::Flat { alpha, beta },
            t0: f64::INFINITY,
            log_r0: f64::INFINITY,
            grid: None,
        })
    }

    /// Hyperbolic (unit-disk) profile: `u = alpha (t ln t - (1+t) ln(1+t))`.
    pub fn hyperbolic(alpha: f64) -> Result<Self> {
        Self::check_alpha(alpha)?;
        Ok(RadialProfile {
            kind: ProfileKind::Hyperbolic { alpha },
            t0: f64::INFINITY,
            log_r0: 0.0,
            grid: None,
        })
    }

    /// Degree-`n` polynomial cut of the flat profile: flat `u` on `[0, 1]`.
    pub fn lo_poly(alpha: f64, beta: f64) -> Result<Self> {
        Self::check_alpha(alpha)?;
        if !beta.is_finite() {
            return Err(Error::InvalidParameter("beta must be finite".into()));
        }
        Ok(RadialProfile {
            kind: ProfileKind::LoPoly { alpha, beta },
            t0: 1.0,
            log_r0: f64::INFINITY,
            grid: None,
        })
    }

    /// Stretched-exponential profile: `u = sigma t^alpha` with `sigma = sign(alpha - 1)`.
    ///
    /// `alpha = 1` is excluded: it degenerates to the Kac regime.
    pub fn theta(alpha: f64) -> Result<Self> {
        Self::check_alpha(alpha)?;
        if alpha == 1.0 {
            return Err(Error::InvalidParameter(
                "theta profile requires alpha in (0,1) or (1,inf)".into(),
            ));
        }
        Ok(RadialProfile {
            kind: ProfileKind::Theta { alpha },
            t0: f64::INFINITY,
            log_r0: if alpha > 1.0 { f64::INFINITY } else { 0.0 },
            grid: None,
        })
    }

    /// Piecewise-linear profile whose limit law is uniform on three circles
    /// of radii 1, 2, 3.
    pub fn three_circles() -> Self {
        let ln2 = std::f64::consts::LN_2;
        let ln6 = 6.0f64.ln();
        RadialProfile {
            kind: ProfileKind::ThreeCircles,
            t0: 3.0,
            log_r0: f64::INFINITY,
            grid: Some(ProfileGrid {
                t: vec![0.0, 1.0, 2.0, 3.0],
                u: vec![0.0, 0.0, ln2, ln6],
            }),
        }
    }

    /// Piecewise-linear profile from samples of `u` on an increasing grid.
    ///
    /// The grid must start at 0 and be strictly increasing; values must be
    /// finite. `u` is `+inf` beyond `t0`; if `t0` exceeds the last node the
    /// final segment is extended linearly.
    pub fn from_samples(t_grid: &[f64], u_values: &[f64], t0: f64) -> Result<Self> {
        if t_grid.len() != u_values.len() {
            return Err(Error::InvalidParameter(
                "t grid and u values must have equal length".into(),
            ));
        }
        if t_grid.len() < 2 {
            return Err(Error::InvalidParameter(
                "profile grid needs at least two nodes".into(),
            ));
        }
        if t_grid[0] != 0.0 {
            return Err(Error::InvalidParameter("t grid must start at 0".into()));
        }
        for w in t_grid.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidParameter(
                    "t grid must be strictly increasing".into(),
                ));
            }
        }
        if u_values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "u values must be finite on the grid".into(),
            ));
        }
        let last = *t_grid.last().unwrap();
        if !(t0 >= last) || !t0.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "t0 = {t0} must be finite and at or beyond the last grid node {last}"
            )));
        }
        Ok(RadialProfile {
            kind: ProfileKind::Custom,
            t0,
            log_r0: f64::INFINITY,
            grid: Some(ProfileGrid {
                t: t_grid.to_vec(),
                u: u_values.to_vec(),
            }),
        })
    }

    /// Construct a custom profile directly (used by conjugation round trips).
    pub(crate) fn custom_from_grid(t: Vec<f64>, u: Vec<f64>, t0: f64, log_r0: f64) -> Self {
        RadialProfile {
            kind: ProfileKind::Custom,
            t0,
            log_r0,
            grid: Some(ProfileGrid { t, u }),
        }
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn log_r0(&self) -> f64 {
        self.log_r0
    }

    pub fn r0(&self) -> f64 {
        self.log_r0.exp()
    }

    pub fn grid(&self) -> Option<&ProfileGrid> {
        self.grid.as_ref()
    }

    /// True when `u` is backed by a piecewise-linear grid (suprema over `t`
    /// are then attained at nodes and computed exactly).
    pub fn is_piecewise_linear(&self) -> bool {
        self.grid.is_some()
    }

    /// Evaluate `u(t)`. Returns `+inf` beyond `t0`.
    pub fn u(&self, t: f64) -> f64 {
        if t < 0.0 {
            return f64::INFINITY;
        }
        if t > self.t0 {
            return f64::INFINITY;
        }
        if let Some(g) = &self.grid {
            return interp_linear(&g.t, &g.u, t);
        }
        match self.kind {
            ProfileKind::Kac => 0.0,
            ProfileKind::Elliptic { alpha } => alpha * (xlnx(t) + xlnx(1.0 - t)),
            ProfileKind::Flat { alpha, beta } | ProfileKind::LoPoly { alpha, beta } => {
                alpha * (xlnx(t) - t) + beta * t
            }
            ProfileKind::Hyperbolic { alpha } => alpha * (xlnx(t) - xlnx(1.0 + t)),
            ProfileKind::Theta { alpha } => {
                let sigma = if alpha > 1.0 { 1.0 } else { -1.0 };
                sigma * t.powf(alpha)
            }
            ProfileKind::ThreeCircles | ProfileKind::Custom => unreachable!("grid-backed"),
        }
    }

    /// Left derivative `u'(t)` for `t in (0, t0]`; `-inf` and `+inf` are
    /// legitimate limits at the ends of some families.
    pub fn u_left_deriv(&self, t: f64) -> f64 {
        if let Some(g) = &self.grid {
            return grid_left_slope(&g.t, &g.u, t);
        }
        match self.kind {
            ProfileKind::Kac => 0.0,
            ProfileKind::Elliptic { alpha } => {
                if t >= 1.0 {
                    f64::INFINITY
                } else {
                    alpha * (t.ln() - (1.0 - t).ln())
                }
            }
            ProfileKind::Flat { alpha, beta } | ProfileKind::LoPoly { alpha, beta } => {
                alpha * t.ln() + beta
            }
            ProfileKind::Hyperbolic { alpha } => alpha * (t.ln() - (1.0 + t).ln()),
            ProfileKind::Theta { alpha } => {
                let sigma = if alpha > 1.0 { 1.0 } else { -1.0 };
                sigma * alpha * t.powf(alpha - 1.0)
            }
            ProfileKind::ThreeCircles | ProfileKind::Custom => unreachable!("grid-backed"),
        }
    }

    /// Limit `u'(0+)`; the inner edge of the limit support is `exp` of this.
    pub fn u_deriv_at_zero_plus(&self) -> f64 {
        if let Some(g) = &self.grid {
            return (g.u[1] - g.u[0]) / (g.t[1] - g.t[0]);
        }
        match self.kind {
            ProfileKind::Kac => 0.0,
            ProfileKind::Elliptic { .. }
            | ProfileKind::Flat { .. }
            | ProfileKind::LoPoly { .. }
            | ProfileKind::Hyperbolic { .. } => f64::NEG_INFINITY,
            ProfileKind::Theta { alpha } => {
                if alpha > 1.0 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            ProfileKind::ThreeCircles | ProfileKind::Custom => unreachable!("grid-backed"),
        }
    }

    /// Exact polynomial degree at scale `n`, when the family is polynomial.
    pub fn natural_degree(&self, n: u32) -> Option<usize> {
        match self.kind {
            ProfileKind::Kac | ProfileKind::Elliptic { .. } | ProfileKind::LoPoly { .. } => {
                Some(n as usize)
            }
            ProfileKind::ThreeCircles => Some(3 * n as usize),
            ProfileKind::Flat { .. } | ProfileKind::Hyperbolic { .. } | ProfileKind::Theta { .. } => {
                None
            }
            ProfileKind::Custom => {
                if self.t0.is_finite() {
                    Some((self.t0 * n as f64 + 1e-9).floor() as usize)
                } else {
                    None
                }
            }
        }
    }
}

fn interp_linear(t: &[f64], u: &[f64], x: f64) -> f64 {
    let last = *t.last().unwrap();
    if x >= last {
        // extend final segment up to t0 (handled by caller's t0 check)
        let k = t.len() - 1;
        let slope = (u[k] - u[k - 1]) / (t[k] - t[k - 1]);
        return u[k] + slope * (x - last);
    }
    match t.binary_search_by(|v| v.total_cmp(&x)) {
        Ok(i) => u[i],
        Err(i) => {
            // t[i-1] < x < t[i]; i >= 1 because x >= 0 = t[0]
            let w = (x - t[i - 1]) / (t[i] - t[i - 1]);
            u[i - 1] + w * (u[i] - u[i - 1])
        }
    }
}

fn grid_left_slope(t: &[f64], u: &[f64], x: f64) -> f64 {
    let k = t.len() - 1;
    if x >= t[k] {
        return (u[k] - u[k - 1]) / (t[k] - t[k - 1]);
    }
    let i = match t.binary_search_by(|v| v.total_cmp(&x)) {
        Ok(i) => i.max(1),
        Err(i) => i,
    };
    (u[i] - u[i - 1]) / (t[i] - t[i - 1])
}

/// Log-magnitudes (and phases) of the deterministic coefficients `f_{k,n}`
/// for one scale parameter `n`. Entry `k` is implicit in the index.
#[derive(Debug, Clone)]
pub struct CoefficientSchedule {
    n: u32,
    log_mags: Vec<f64>,
    phases: Vec<f64>,
    degree_hint: Option<usize>,
    log_r0: f64,
    label: String,
}

impl CoefficientSchedule {
    /// Assemble a schedule from raw parts (tests, deterministic instances).
    pub fn from_parts(
        n: u32,
        log_mags: Vec<f64>,
        phases: Vec<f64>,
        degree_hint: Option<usize>,
        log_r0: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        if log_mags.is_empty() || log_mags.len() != phases.len() {
            return Err(Error::InvalidParameter(
                "schedule needs equal-length, nonempty magnitude and phase arrays".into(),
            ));
        }
        Ok(CoefficientSchedule {
            n,
            log_mags,
            phases,
            degree_hint,
            log_r0,
            label: label.into(),
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn len(&self) -> usize {
        self.log_mags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_mags.is_empty()
    }

    pub fn log_mag(&self, k: usize) -> f64 {
        self.log_mags[k]
    }

    pub fn log_mags(&self) -> &[f64] {
        &self.log_mags
    }

    pub fn phase(&self, k: usize) -> f64 {
        self.phases[k]
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn degree_hint(&self) -> Option<usize> {
        self.degree_hint
    }

    pub fn log_r0(&self) -> f64 {
        self.log_r0
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Schedule of `G(c z)` for `c = exp(log_c)`: shifts `log |f_k|` by `k log_c`.
    pub fn with_variable_scale(&self, log_c: f64) -> Self {
        let log_mags = self
            .log_mags
            .iter()
            .enumerate()
            .map(|(k, &v)| v + k as f64 * log_c)
            .collect();
        CoefficientSchedule {
            n: self.n,
            log_mags,
            phases: self.phases.clone(),
            degree_hint: self.degree_hint,
            log_r0: if self.log_r0.is_finite() {
                self.log_r0 - log_c
            } else {
                self.log_r0
            },
            label: format!("{}*scale({log_c})", self.label),
        }
    }
}

/// Materialize `log |f_{k,n}|` for `k = 0..=k_max` using exact log-gamma
/// formulas for the named families and `-n u(k/n)` for custom profiles.
///
/// For polynomial families `k_max` is clamped to the exact degree.
pub fn coefficients(profile: &RadialProfile, n: u32, k_max: usize) -> Result<CoefficientSchedule> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    if k_max >= MAX_COEFFICIENTS {
        return Err(Error::InvalidParameter(format!(
            "k_max = {k_max} exceeds table capacity {MAX_COEFFICIENTS}"
        )));
    }
    let k_top = match profile.natural_degree(n) {
        Some(d) => k_max.min(d),
        None => k_max,
    };
    let nf = n as f64;
    let mut log_mags = Vec::with_capacity(k_top + 1);
    match profile.kind {
        ProfileKind::Kac => {
            log_mags.resize(k_top + 1, 0.0);
        }
        ProfileKind::Elliptic { alpha } => {
            let lg_n1 = libm::lgamma(nf + 1.0);
            for k in 0..=k_top {
                let kf = k as f64;
                log_mags
                    .push(alpha * (lg_n1 - libm::lgamma(kf + 1.0) - libm::lgamma(nf - kf + 1.0)));
            }
        }
        ProfileKind::Flat { alpha, beta } | ProfileKind::LoPoly { alpha, beta } => {
            let ln_n = nf.ln();
            for k in 0..=k_top {
                let kf = k as f64;
                log_mags.push(alpha * (kf * ln_n - ln_factorial(k)) - beta * kf);
            }
        }
        ProfileKind::Hyperbolic { alpha } => {
            let lg_n = libm::lgamma(nf);
            for k in 0..=k_top {
                let kf = k as f64;
                log_mags.push(alpha * (libm::lgamma(nf + kf) - lg_n - libm::lgamma(kf + 1.0)));
            }
        }
        ProfileKind::Theta { alpha } => {
            let sigma = if alpha > 1.0 { 1.0 } else { -1.0 };
            let scale = nf.powf(1.0 - alpha);
            for k in 0..=k_top {
                log_mags.push(-sigma * scale * (k as f64).powf(alpha));
            }
        }
        ProfileKind::ThreeCircles => {
            let ln2 = std::f64::consts::LN_2;
            let ln3 = 3.0f64.ln();
            let ln92 = 4.5f64.ln();
            for k in 0..=k_top {
                let kf = k as f64;
                let v = if k <= n as usize {
                    0.0
                } else if k <= 2 * n as usize {
                    (nf - kf) * ln2
                } else {
                    nf * ln92 - kf * ln3
                };
                log_mags.push(v);
            }
        }
        ProfileKind::Custom => {
            for k in 0..=k_top {
                let u = profile.u(k as f64 / nf);
                if u.is_nan() {
                    return Err(Error::Domain(format!(
                        "profile u undefined at t = {}",
                        k as f64 / nf
                    )));
                }
                log_mags.push(if u.is_infinite() {
                    f64::NEG_INFINITY
                } else {
                    -nf * u
                });
            }
        }
    }
    if log_mags.iter().all(|v| *v == f64::NEG_INFINITY) {
        return Err(Error::Degenerate("all coefficients vanish".into()));
    }
    let phases = vec![0.0; log_mags.len()];
    CoefficientSchedule::from_parts(
        n,
        log_mags,
        phases,
        profile.natural_degree(n),
        profile.log_r0(),
        profile.kind().label(),
    )
}

/// Schedule of the series cut at degree `floor(kappa * n)`: the truncated
/// ensemble whose limit law has total mass `kappa`. The result is an exact
/// polynomial (`degree_hint` set) regardless of the parent family.
pub fn coefficients_truncated(
    profile: &RadialProfile,
    n: u32,
    kappa: f64,
) -> Result<CoefficientSchedule> {
    if !(kappa > 0.0) || kappa > profile.t0() {
        return Err(Error::InvalidParameter(format!(
            "kappa = {kappa} outside (0, T0 = {}]",
            profile.t0()
        )));
    }
    let degree = (kappa * n as f64 + 1e-9).floor() as usize;
    if degree == 0 {
        return Err(Error::Degenerate(
            "kappa * n < 1 leaves a constant polynomial".into(),
        ));
    }
    let sched = coefficients(profile, n, degree)?;
    CoefficientSchedule::from_parts(
        n,
        sched.log_mags,
        sched.phases,
        Some(degree),
        f64::INFINITY,
        format!("{}|kappa={kappa}", profile.kind().label()),
    )
}

/// Smallest truncation mass `kappa` whose limit law covers the window:
/// `exp(u'(kappa)) >= window * margin`. The truncated and full limit laws
/// coincide inside the support of the truncated one, so zeros of the
/// `kappa`-cut observed in the window follow the full law. Requires convex
/// `u` (monotone left derivative).
pub fn truncation_kappa_for_window(profile: &RadialProfile, window: f64) -> Result<f64> {
    if !(window > 0.0) {
        return Err(Error::InvalidParameter("window must be positive".into()));
    }
    let target = (window * 1.02).ln();
    if profile.log_r0().is_finite() && target >= profile.log_r0() {
        return Err(Error::Divergence(format!(
            "window {window} too close to the convergence radius {}",
            profile.r0()
        )));
    }
    let t0 = profile.t0();
    if t0.is_finite() && profile.u_left_deriv(t0) >= target {
        return Ok(t0);
    }
    let mut kappa = 1.0f64;
    let mut guard = 0;
    while profile.u_left_deriv(kappa.min(t0)) < target {
        kappa *= 2.0;
        guard += 1;
        if guard > 120 || (t0.is_finite() && kappa >= t0) {
            return Err(Error::Domain(format!(
                "no truncation mass covers window {window}"
            )));
        }
    }
    // bisect to economize the degree
    let mut lo = kappa / 2.0;
    let mut hi = kappa;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if profile.u_left_deriv(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Materialize a schedule long enough that the tail beyond the returned
/// entries is below `tol` at radius `r` (with the `TAIL_EPSILON` noise
/// margin). Polynomial families simply get their exact degree.
pub fn schedule_for_window(
    profile: &RadialProfile,
    n: u32,
    r: f64,
    tol: f64,
) -> Result<CoefficientSchedule> {
    if !(r > 0.0) || !(tol > 0.0) {
        return Err(Error::InvalidParameter(
            "window radius and tolerance must be positive".into(),
        ));
    }
    if let Some(d) = profile.natural_degree(n) {
        return coefficients(profile, n, d);
    }
    let ln_r = r.ln();
    let log_r0 = profile.log_r0();
    if ln_r >= log_r0 {
        return Err(Error::Divergence(format!(
            "radius {r} is not below the convergence radius {}",
            log_r0.exp()
        )));
    }
    let eps = if log_r0.is_finite() {
        TAIL_EPSILON.min(0.5 * (log_r0 - ln_r))
    } else {
        TAIL_EPSILON
    };
    // exponent rate of the bounding terms, per unit t
    let rate = |t: f64| -profile.u(t) + t * (ln_r + eps);
    let nf = n as f64;
    let budget = (tol.ln() - 30.0) / nf;
    let mut t = 1.0;
    let mut guard = 0;
    while rate(t) > budget || rate(t * 0.75) > budget {
        t *= 1.5;
        guard += 1;
        if guard > 200 {
            return Err(Error::UnboundedSup(
                "tail bound does not decay; growth assumption violated".into(),
            ));
        }
    }
    let k_max = (nf * t).ceil() as usize + 8;
    coefficients(profile, n, k_max)
}
