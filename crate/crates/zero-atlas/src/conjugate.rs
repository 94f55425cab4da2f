//! Numerical Legendre-Fenchel transform engine.
//!
//! Computes `I(s) = sup_{t >= 0} (s t - u(t))` on an `s`-grid, the left
//! derivative `I'`, and the jump/constancy structure of `I'` that encodes
//! atoms and gaps of the limit measure. Piecewise-linear profiles are
//! conjugated exactly (the supremum sits on a node); smooth profiles are
//! bracketed geometrically and refined by ternary search, which is valid
//! because `s t - u(t)` is concave in `t` for every profile family here.

use crate::error::{Error, Result};
use crate::schedule::{ProfileKind, RadialProfile};

/// A detected jump of `I'` at `s`: the circle `|z| = e^s` carries mass `size`.
/// `cell_lo..=cell_hi` are the grid cells whose increments form the jump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub s: f64,
    pub size: f64,
    pub cell_lo: usize,
    pub cell_hi: usize,
}

/// A maximal constancy interval of `I'`: the annulus `e^{s_lo} < |z| < e^{s_hi}`
/// carries no mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatRun {
    pub s_lo: f64,
    pub s_hi: f64,
    pub level: f64,
    pub at_grid_start: bool,
    pub at_grid_end: bool,
}

/// `I`, its left derivative and structure on a uniform `s`-grid.
#[derive(Debug, Clone)]
pub struct ConjugateProfile {
    kind: ProfileKind,
    s_lo: f64,
    h: f64,
    i_values: Vec<f64>,
    argmax: Vec<f64>,
    left_deriv: Vec<f64>,
    jumps: Vec<Jump>,
    flats: Vec<FlatRun>,
    log_r0: f64,
}

impl ConjugateProfile {
    pub fn len(&self) -> usize {
        self.i_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.i_values.is_empty()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn s_lo(&self) -> f64 {
        self.s_lo
    }

    pub fn s_hi(&self) -> f64 {
        self.s_at(self.len() - 1)
    }

    pub fn s_at(&self, i: usize) -> f64 {
        self.s_lo + i as f64 * self.h
    }

    pub fn i_values(&self) -> &[f64] {
        &self.i_values
    }

    pub fn argmax(&self) -> &[f64] {
        &self.argmax
    }

    pub fn left_deriv(&self) -> &[f64] {
        &self.left_deriv
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    pub fn flats(&self) -> &[FlatRun] {
        &self.flats
    }

    pub fn log_r0(&self) -> f64 {
        self.log_r0
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn analyzed(&self) -> bool {
        !self.left_deriv.is_empty()
    }

    /// Linear interpolation of `I` at `s`.
    pub fn i_at(&self, s: f64) -> Result<f64> {
        let top = self.s_hi();
        if s < self.s_lo - 1e-12 || s > top + 1e-12 {
            return Err(Error::Domain(format!(
                "s = {s} outside conjugate grid [{}, {top}]",
                self.s_lo
            )));
        }
        let x = ((s - self.s_lo) / self.h).clamp(0.0, (self.len() - 1) as f64);
        let i = (x.floor() as usize).min(self.len() - 2);
        let w = x - i as f64;
        Ok(self.i_values[i] * (1.0 - w) + self.i_values[i + 1] * w)
    }

    /// Left-continuous step interpolation of the left derivative.
    pub fn left_deriv_at(&self, s: f64) -> Result<f64> {
        if !self.analyzed() {
            return Err(Error::Domain("left derivative not computed".into()));
        }
        if s <= self.s_lo {
            return Ok(self.left_deriv[0]);
        }
        let top = self.s_hi();
        if s > top + 1e-12 {
            return Err(Error::Domain(format!(
                "s = {s} beyond conjugate grid end {top}"
            )));
        }
        let i = (((s - self.s_lo) / self.h).ceil() as usize).min(self.len() - 1);
        Ok(self.left_deriv[i])
    }

    fn nearest_node(&self, s: f64) -> usize {
        (((s - self.s_lo) / self.h).round() as isize).clamp(0, self.len() as isize - 1) as usize
    }

    fn near_jump(&self, i: usize, cells: usize) -> bool {
        let s = self.s_at(i);
        self.jumps
            .iter()
            .any(|j| (j.s - s).abs() <= cells as f64 * self.h)
    }

    /// Richardson-refined central estimate of `I'(s)`, falling back to the
    /// raw left derivative near jumps and grid ends.
    pub fn deriv_refined_at(&self, s: f64) -> Result<f64> {
        if !self.analyzed() {
            return Err(Error::Domain("left derivative not computed".into()));
        }
        let c = self.nearest_node(s);
        if c < 4 || c + 4 >= self.len() || self.near_jump(c, 6) {
            return self.left_deriv_at(s);
        }
        let h = self.h;
        let d2 = (self.i_values[c + 2] - self.i_values[c - 2]) / (4.0 * h);
        let d4 = (self.i_values[c + 4] - self.i_values[c - 4]) / (8.0 * h);
        Ok((4.0 * d2 - d4) / 3.0)
    }

    /// Centered second difference of `I` with Richardson extrapolation,
    /// interpolated linearly between the two nodes bracketing `s`;
    /// one-sided (shifted inward) near the grid ends.
    pub fn second_deriv_at(&self, s: f64) -> Result<f64> {
        if self.len() < 18 {
            return Err(Error::GridTooCoarse(
                "conjugate grid too short for curvature estimates".into(),
            ));
        }
        let h = self.h;
        let at_node = |c: usize| {
            let stencil = |m: usize| {
                let hh = m as f64 * h;
                (self.i_values[c + m] - 2.0 * self.i_values[c] + self.i_values[c - m]) / (hh * hh)
            };
            (4.0 * stencil(4) - stencil(8)) / 3.0
        };
        let x = (s - self.s_lo) / h;
        let lo_lim = 8.0;
        let hi_lim = (self.len() - 9) as f64;
        let xc = x.clamp(lo_lim, hi_lim);
        let c0 = (xc.floor() as usize).min(self.len() - 10).max(8);
        let c1 = (c0 + 1).min(self.len() - 9);
        let w = (xc - c0 as f64).clamp(0.0, 1.0);
        Ok(at_node(c0) * (1.0 - w) + at_node(c1) * w)
    }
}

/// Candidate list for a supremum over a piecewise-linear profile: the grid
/// nodes, plus the cutoff when it extends past the last node.
fn grid_candidates(profile: &RadialProfile) -> (Vec<f64>, Vec<f64>, bool) {
    let g = profile.grid().expect("grid-backed profile");
    let mut t = g.t.clone();
    let mut u = g.u.clone();
    let t0 = profile.t0();
    if t0.is_finite() && t0 > *t.last().unwrap() + 1e-15 {
        t.push(t0);
        u.push(profile.u(t0));
    }
    let mut convex = true;
    for i in 1..t.len() - 1 {
        let sl = (u[i] - u[i - 1]) / (t[i] - t[i - 1]);
        let sr = (u[i + 1] - u[i]) / (t[i + 1] - t[i]);
        if sr < sl - 1e-12 * (1.0 + sl.abs()) {
            convex = false;
            break;
        }
    }
    (t, u, convex)
}

struct SupEngine<'a> {
    profile: &'a RadialProfile,
    grid: Option<(Vec<f64>, Vec<f64>, bool)>,
    warm_idx: usize,
}

impl<'a> SupEngine<'a> {
    fn new(profile: &'a RadialProfile) -> Self {
        let grid = profile.is_piecewise_linear().then(|| grid_candidates(profile));
        SupEngine {
            profile,
            grid,
            warm_idx: 0,
        }
    }

    /// `(I(s), argmax t)`; argmax ties resolved toward the smallest `t`.
    fn sup(&mut self, s: f64) -> Result<(f64, f64)> {
        if let Some((t, u, convex)) = &self.grid {
            // exact: piecewise-linear objective attains its max on a node,
            // and the argmax is nondecreasing in s
            let mut best_i = self.warm_idx;
            let mut best = s * t[best_i] - u[best_i];
            let mut i = best_i + 1;
            while i < t.len() {
                let v = s * t[i] - u[i];
                if v > best {
                    best = v;
                    best_i = i;
                } else if *convex && v < best {
                    break;
                }
                i += 1;
            }
            self.warm_idx = best_i;
            return Ok((best, t[best_i]));
        }
        self.sup_smooth(s)
    }

    fn sup_smooth(&self, s: f64) -> Result<(f64, f64)> {
        let p = self.profile;
        let t0 = p.t0();
        let f = |t: f64| s * t - p.u(t);
        // geometric sample sweep; the objective is concave in t, so the best
        // sample's neighbors bracket the true maximum
        let mut ts: Vec<f64> = vec![0.0];
        let mut vs: Vec<f64> = vec![f(0.0)];
        let mut t = 1e-12f64;
        let mut running_max = vs[0];
        loop {
            let tc = if t0.is_finite() { t.min(t0) } else { t };
            let v = f(tc);
            ts.push(tc);
            vs.push(v);
            if (v.is_infinite() && v > 0.0) || v > 1e15 {
                return Err(Error::UnboundedSup(format!(
                    "sup of s*t - u(t) diverges at s = {s}"
                )));
            }
            running_max = running_max.max(v);
            if v < running_max - 50.0 {
                break;
            }
            if t0.is_finite() && tc >= t0 {
                break;
            }
            if t > 1e13 {
                if vs[vs.len() - 1] > vs[vs.len() - 2] {
                    return Err(Error::UnboundedSup(format!(
                        "sup of s*t - u(t) still increasing at t = {t:.3e} for s = {s}"
                    )));
                }
                break;
            }
            t *= 2.0;
        }
        // best sample, earliest index on ties (smallest t)
        let mut bi = 0;
        for (i, &v) in vs.iter().enumerate() {
            if v > vs[bi] {
                bi = i;
            }
        }
        let mut a = if bi == 0 { 0.0 } else { ts[bi - 1] };
        let mut b = if bi + 1 < ts.len() { ts[bi + 1] } else { ts[bi] };
        if !(b > a) {
            return Ok((vs[bi], ts[bi]));
        }
        for _ in 0..240 {
            if b - a <= 1e-15 * (a.abs() + b.abs()) + 1e-300 {
                break;
            }
            let m1 = a + (b - a) / 3.0;
            let m2 = b - (b - a) / 3.0;
            if f(m1) < f(m2) {
                a = m1;
            } else {
                b = m2;
            }
        }
        let tm = 0.5 * (a + b);
        let fm = f(tm);
        let mut best_t = ts[bi];
        let mut best_f = vs[bi];
        if fm > best_f {
            best_f = fm;
            best_t = tm;
        }
        Ok((best_f, best_t))
    }
}

/// Compute `I` on the uniform grid `s_lo, s_lo + h, ..., s_hi`.
///
/// `s_hi` must stay strictly below `log R0`; the supremum engine enforces
/// the growth assumption by erroring when the objective is unbounded.
pub fn conjugate(
    profile: &RadialProfile,
    s_lo: f64,
    s_hi: f64,
    h: f64,
) -> Result<ConjugateProfile> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidParameter("grid step h must be positive".into()));
    }
    if !(s_hi > s_lo) {
        return Err(Error::InvalidParameter("empty s range".into()));
    }
    if s_hi >= profile.log_r0() {
        return Err(Error::Domain(format!(
            "s range [{s_lo}, {s_hi}] intersects [log R0 = {}, inf)",
            profile.log_r0()
        )));
    }
    let cells = ((s_hi - s_lo) / h).round() as usize;
    if cells < 2 {
        return Err(Error::InvalidParameter("s range shorter than two steps".into()));
    }
    if cells > 50_000_000 {
        return Err(Error::InvalidParameter("s grid too large".into()));
    }
    let mut engine = SupEngine::new(profile);
    let mut i_values = Vec::with_capacity(cells + 1);
    let mut argmax = Vec::with_capacity(cells + 1);
    for i in 0..=cells {
        let s = s_lo + i as f64 * h;
        let (v, t) = engine.sup(s)?;
        i_values.push(v);
        argmax.push(t);
    }
    Ok(ConjugateProfile {
        kind: profile.kind(),
        s_lo,
        h,
        i_values,
        argmax,
        left_deriv: Vec::new(),
        jumps: Vec::new(),
        flats: Vec::new(),
        log_r0: profile.log_r0(),
    })
}

/// Fill in the left derivative, jumps and constancy runs.
///
/// `I'(s_i) = (I(s_i) - I(s_{i-1})) / h` with isotonic cleanup of rounding
/// noise. A cell is a jump candidate when its one-step increase of `I'`
/// exceeds both the scale-aware threshold `10 h max(1, |I'|)` and four
/// times the local smooth background; adjacent candidates merge into one
/// jump whose location is the increment-weighted mean of cell left edges.
/// Constancy runs are maximal stretches where the estimated `I''` stays
/// below `h`.
pub fn left_derivative(cp: ConjugateProfile) -> Result<ConjugateProfile> {
    let mut cp = cp;
    let n = cp.i_values.len();
    let h = cp.h;
    let max_abs_i = cp
        .i_values
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    let neg_floor = (64.0 * f64::EPSILON * (1.0 + max_abs_i) / h).max(1e-12);

    let mut ld = vec![0.0; n];
    for i in 1..n {
        ld[i] = (cp.i_values[i] - cp.i_values[i - 1]) / h;
    }
    ld[0] = ld[1];
    for i in 2..n {
        let incr = ld[i] - ld[i - 1];
        if incr < 0.0 {
            if incr < -neg_floor * (1.0 + ld[i - 1].abs()) {
                return Err(Error::Domain(format!(
                    "convexity violation at s = {}: I' decreases by {incr:.3e}",
                    cp.s_at(i)
                )));
            }
            ld[i] = ld[i - 1];
        }
    }

    let incr: Vec<f64> = (0..n)
        .map(|i| if i < 2 { 0.0 } else { ld[i] - ld[i - 1] })
        .collect();

    // smooth background: largest increment a few cells away on either side
    let bg_at = |i: usize| -> f64 {
        let mut bg = 0.0f64;
        for d in 2..=5usize {
            if i >= d && i - d >= 2 {
                bg = bg.max(incr[i - d]);
            }
            if i + d < n {
                bg = bg.max(incr[i + d]);
            }
        }
        bg
    };

    let mut flagged = vec![false; n];
    for i in 2..n {
        let scale = ld[i - 1].abs().max(ld[i].abs()).max(1.0);
        if incr[i] > 10.0 * h * scale && incr[i] > 4.0 * bg_at(i) + 10.0 * h {
            flagged[i] = true;
        }
    }

    // cluster flagged cells (gap <= 2) into jumps
    let mut jumps = Vec::new();
    let mut in_cluster: Vec<bool> = vec![false; n];
    let mut i = 2;
    while i < n {
        if !flagged[i] {
            i += 1;
            continue;
        }
        let start = i;
        let mut end = i;
        let mut j = i + 1;
        let mut gap = 0;
        while j < n && gap <= 2 {
            if flagged[j] {
                end = j;
                gap = 0;
            } else {
                gap += 1;
            }
            j += 1;
        }
        let mut size = 0.0;
        let mut loc = 0.0;
        for c in start..=end {
            size += incr[c];
            loc += incr[c] * cp.s_at(c - 1);
            in_cluster[c] = true;
        }
        loc /= size;
        jumps.push(Jump {
            s: loc,
            size,
            cell_lo: start,
            cell_hi: end,
        });
        i = end + 1;
    }

    // self-check: families with known atoms must resolve them
    let expected: Vec<f64> = match cp.kind {
        ProfileKind::Kac => vec![0.0],
        ProfileKind::ThreeCircles => vec![0.0, 2.0f64.ln(), 3.0f64.ln()],
        _ => vec![],
    };
    for e in expected {
        let inside = e > cp.s_lo + 5.0 * h && e < cp.s_hi() - 5.0 * h;
        if inside && !jumps.iter().any(|j| (j.s - e).abs() <= 4.0 * h) {
            return Err(Error::GridTooCoarse(format!(
                "known jump of {} at s = {e} not resolved at h = {h}",
                cp.kind.label()
            )));
        }
    }

    // constancy runs of I' (estimated I'' below the flat threshold h)
    let mut flats = Vec::new();
    let mut run_start: Option<usize> = None;
    for c in 2..=n {
        let is_flat = c < n && !in_cluster[c] && incr[c] / h < h;
        if is_flat && run_start.is_none() {
            run_start = Some(c);
        }
        if (!is_flat || c == n - 1) && run_start.is_some() {
            let start = run_start.take().unwrap();
            let end = if is_flat { c } else { c - 1 };
            if end >= start + 10 {
                let level =
                    ld[start..=end].iter().sum::<f64>() / (end - start + 1) as f64;
                flats.push(FlatRun {
                    s_lo: cp.s_at(start - 1),
                    s_hi: cp.s_at(end),
                    level,
                    at_grid_start: start == 2,
                    at_grid_end: end == n - 1,
                });
            }
        }
    }

    cp.left_deriv = ld;
    cp.jumps = jumps;
    cp.flats = flats;
    Ok(cp)
}

/// `conjugate` followed by `left_derivative`.
pub fn conjugate_analyzed(
    profile: &RadialProfile,
    s_lo: f64,
    s_hi: f64,
    h: f64,
) -> Result<ConjugateProfile> {
    left_derivative(conjugate(profile, s_lo, s_hi, h)?)
}

/// Greatest convex minorant of `u` sampled on `t_grid`, returned as a
/// piecewise-linear profile on the same grid. Idempotent; equal to `u`
/// when `u` is convex.
pub fn convex_hull(profile: &RadialProfile, t_grid: &[f64]) -> Result<RadialProfile> {
    let mut ts = Vec::new();
    let mut us = Vec::new();
    for &t in t_grid {
        let u = profile.u(t);
        if u.is_finite() {
            ts.push(t);
            us.push(u);
        }
    }
    if ts.len() < 2 {
        return Err(Error::InvalidParameter(
            "need at least two finite samples of u".into(),
        ));
    }
    // monotone-chain lower hull
    let mut hull: Vec<usize> = Vec::new();
    for i in 0..ts.len() {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (ts[b] - ts[a]) * (us[i] - us[a]) - (ts[i] - ts[a]) * (us[b] - us[a]);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    let mut hu = vec![0.0; ts.len()];
    for w in hull.windows(2) {
        let (a, b) = (w[0], w[1]);
        for i in a..=b {
            let w01 = if b == a {
                0.0
            } else {
                (ts[i] - ts[a]) / (ts[b] - ts[a])
            };
            hu[i] = us[a] * (1.0 - w01) + us[b] * w01;
        }
    }
    Ok(RadialProfile::custom_from_grid(
        ts.clone(),
        hu,
        *ts.last().unwrap(),
        profile.log_r0(),
    ))
}

/// Discrete biconjugate `u**(t) = sup_s (s t - I(s))` over the stored grid,
/// using the monotone-argmax sweep (valid since `I` is convex).
///
/// The node maximum is refined by fitting a parabola through the argmax
/// neighborhood (removes the O(h^2) discretization bias of smooth conjugates),
/// and, when jumps of `I'` have been analyzed, the exact kink positions of a
/// piecewise-linear `I` are reconstructed and offered as extra candidates.
pub fn biconjugate_on(cp: &ConjugateProfile, t_grid: &[f64]) -> Vec<f64> {
    let n = cp.len();
    // reconstruct kink candidates (s_J, I(s_J)) from detected jumps: below
    // the cluster the stored I is exact and locally linear with the slope
    // recorded just before the cluster
    let kinks: Vec<(f64, f64)> = cp
        .jumps
        .iter()
        .filter_map(|j| {
            if j.cell_lo < 2 {
                return None;
            }
            let a = j.cell_lo - 1;
            let slope_left = cp.left_deriv.get(a).copied()?;
            let i_j = cp.i_values[a] + slope_left * (j.s - cp.s_at(a));
            Some((j.s, i_j))
        })
        .collect();
    let mut j = 0usize;
    let mut out = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let val = |k: usize| cp.s_at(k) * t - cp.i_values[k];
        while j + 1 < n && val(j + 1) >= val(j) {
            j += 1;
        }
        let mut best = val(j);
        let near_kink = cp
            .jumps
            .iter()
            .any(|jm| (jm.s - cp.s_at(j)).abs() <= 3.0 * cp.h);
        if j > 0 && j + 1 < n && !near_kink {
            // parabolic vertex through (j-1, j, j+1); valid off kinks only,
            // where a parabola through a slope break overshoots
            let (vm, v0, vp) = (val(j - 1), val(j), val(j + 1));
            let d2 = vp - 2.0 * v0 + vm;
            if d2 < 0.0 {
                let d1 = 0.5 * (vp - vm);
                best = best.max(v0 - d1 * d1 / (2.0 * d2));
            }
        }
        for (s_k, i_k) in &kinks {
            best = best.max(t * s_k - i_k);
        }
        out.push(best);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid(cp: &ConjugateProfile) -> Vec<f64> {
        (0..cp.len()).map(|i| cp.s_at(i)).collect()
    }

    #[test]
    fn kac_conjugate_is_exact() {
        let cp = conjugate(&RadialProfile::kac(), -3.0, 3.0, 1e-3).unwrap();
        for (i, s) in grid(&cp).iter().enumerate() {
            assert_eq!(cp.i_values()[i], s.max(0.0), "s = {s}");
        }
    }

    #[test]
    fn flat_half_matches_closed_form() {
        let p = RadialProfile::flat(0.5, 0.0).unwrap();
        let cp = conjugate(&p, -3.0, 3.0, 1e-3).unwrap();
        let mut worst = 0.0f64;
        for (i, s) in grid(&cp).iter().enumerate() {
            let exact = 0.5 * (2.0 * s).exp();
            worst = worst.max((cp.i_values()[i] - exact).abs());
        }
        assert!(worst <= 1e-8, "max error {worst:.3e}");
    }

    #[test]
    fn elliptic_value_at_zero() {
        let p = RadialProfile::elliptic(1.0).unwrap();
        let cp = conjugate(&p, -0.5, 0.5, 1e-3).unwrap();
        let mid = cp.len() / 2;
        assert_relative_eq!(cp.i_values()[mid], 2.0f64.ln(), epsilon = 1e-10);
    }

    #[test]
    fn theta_conjugate_direct_sup() {
        // sup_t (st - t^alpha) is 0 for s < 0 and (alpha-1)(s/alpha)^{alpha/(alpha-1)}
        // for s >= 0
        for alpha in [1.5, 2.0, 3.0] {
            let p = RadialProfile::theta(alpha).unwrap();
            let cp = conjugate(&p, -2.0, 2.0, 1e-3).unwrap();
            for (i, s) in grid(&cp).iter().enumerate() {
                let exact = if *s < 0.0 {
                    0.0
                } else {
                    (alpha - 1.0) * (s / alpha).powf(alpha / (alpha - 1.0))
                };
                assert!(
                    (cp.i_values()[i] - exact).abs() <= 1e-8,
                    "alpha={alpha} s={s}"
                );
            }
        }
    }

    #[test]
    fn hyperbolic_range_check() {
        let p = RadialProfile::hyperbolic(0.5).unwrap();
        assert!(conjugate(&p, -1.0, 0.1, 1e-3).is_err());
        let cp = conjugate(&p, -3.0, -0.1, 1e-3).unwrap();
        let last = cp.len() - 1;
        let s = cp.s_at(last);
        let exact = -0.5 * (1.0 - (2.0 * s).exp()).ln();
        assert_relative_eq!(cp.i_values()[last], exact, epsilon = 1e-8);
    }

    #[test]
    fn three_circles_jump_structure() {
        let cp = conjugate_analyzed(&RadialProfile::three_circles(), -2.0, 2.0, 1e-3).unwrap();
        let jumps = cp.jumps();
        assert_eq!(jumps.len(), 3, "jumps: {jumps:?}");
        let expect = [0.0, 2.0f64.ln(), 3.0f64.ln()];
        for (j, e) in jumps.iter().zip(expect) {
            assert!((j.s - e).abs() <= 2e-3, "jump at {} vs {e}", j.s);
            assert!((j.size - 1.0).abs() <= 0.01, "size {}", j.size);
        }
    }

    #[test]
    fn kac_jump_and_flats() {
        let cp = conjugate_analyzed(&RadialProfile::kac(), -3.0, 3.0, 1e-3).unwrap();
        assert_eq!(cp.jumps().len(), 1);
        let j = cp.jumps()[0];
        assert!(j.s.abs() <= 1e-9 && (j.size - 1.0).abs() <= 1e-9);
        // constancy on both sides of the jump (grid nodes carry ~1e-16
        // rounding, so the boundaries sit within that of 0)
        assert!(cp.flats().iter().any(|f| f.at_grid_start && f.s_hi < 1e-9));
        assert!(cp.flats().iter().any(|f| f.at_grid_end && f.s_lo > -1e-9));
    }

    #[test]
    fn refined_derivative_flat_half() {
        let p = RadialProfile::flat(0.5, 0.0).unwrap();
        let cp = conjugate_analyzed(&p, -3.0, 3.0, 1e-3).unwrap();
        // closed form I' = e^{2s}; at s = 0 the refined estimate is 1
        let d = cp.deriv_refined_at(0.0).unwrap();
        assert!((d - 1.0).abs() <= 1e-6, "I'(0) = {d}");
    }

    #[test]
    fn coarse_grid_rejected_for_declared_jumps() {
        // at h = 0.3 the unit-circle jump smears across cells and cannot
        // clear the scale-aware threshold
        let err = conjugate_analyzed(&RadialProfile::three_circles(), -2.0, 2.0, 0.3);
        assert!(matches!(err, Err(Error::GridTooCoarse(_))));
    }

    #[test]
    fn convex_hull_of_dent() {
        let p = RadialProfile::from_samples(&[0.0, 1.0, 2.0], &[0.0, 1.0, 0.5], 2.0).unwrap();
        let hull = convex_hull(&p, &[0.0, 1.0, 2.0]).unwrap();
        assert_relative_eq!(hull.u(0.0), 0.0, epsilon = 1e-14);
        assert_relative_eq!(hull.u(1.0), 0.25, epsilon = 1e-14);
        assert_relative_eq!(hull.u(2.0), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn convex_hull_fixes_convex_input() {
        let t: Vec<f64> = (0..=40).map(|i| i as f64 * 0.05).collect();
        let u: Vec<f64> = t.iter().map(|&x| x * x).collect();
        let p = RadialProfile::from_samples(&t, &u, 2.0).unwrap();
        let hull = convex_hull(&p, &t).unwrap();
        for &x in &t {
            assert_relative_eq!(hull.u(x), x * x, epsilon = 1e-12);
        }
        // idempotent
        let hull2 = convex_hull(&hull, &t).unwrap();
        for &x in &t {
            assert_relative_eq!(hull2.u(x), hull.u(x), epsilon = 1e-12);
        }
    }

    #[test]
    fn convex_hull_needs_two_samples() {
        let p = RadialProfile::kac();
        assert!(convex_hull(&p, &[0.5]).is_err());
    }

    #[test]
    fn argmax_is_monotone() {
        for p in [
            RadialProfile::flat(0.5, 0.0).unwrap(),
            RadialProfile::elliptic(1.0).unwrap(),
            RadialProfile::three_circles(),
        ] {
            let cp = conjugate(&p, -2.0, 2.0, 1e-2).unwrap();
            for w in cp.argmax().windows(2) {
                assert!(w[1] >= w[0] - 1e-6 * (1.0 + w[0].abs()));
            }
        }
    }

    #[test]
    fn range_ending_near_log_r0_still_works() {
        // the sup stays finite right up to log R0 for disk families
        let p = RadialProfile::hyperbolic(0.5).unwrap();
        let cp = conjugate(&p, -0.2, -0.01, 1e-4).unwrap();
        assert!(cp.i_values().iter().all(|v| v.is_finite()));
    }
}
