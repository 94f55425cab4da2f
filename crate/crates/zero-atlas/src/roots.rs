//! Certified zero finding for truncated random function realizations.
//!
//! The coefficient dynamic range of these ensembles (log-magnitudes spanning
//! hundreds) rules out balanced companion-matrix eigensolvers beyond small
//! degrees. Instead the variable is rescaled so the first and last coefficient
//! magnitudes match, the whole polynomial is centered in log scale, and an
//! Aberth-Ehrlich simultaneous iteration runs from Newton-polygon initial
//! circles. Every root is certified afterwards by a coefficient-scale
//! backward error computed with the stable log-domain evaluator.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sampler::RandomFunctionInstance;

/// One zero: location, multiplicity, and certified backward error
/// `|G(z)| / sum_k |xi_k f_k z^k|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Zero {
    pub location: Complex64,
    pub multiplicity: u32,
    pub residual: f64,
}

/// All zeros of one realization, multiplicities included.
///
/// `degree` is the effective degree after trailing zero coefficients are
/// stripped, so the multiplicities (zeros inside and outside the window
/// alike) plus `origin_multiplicity` always sum to `degree`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroSet {
    pub zeros: Vec<Zero>,
    pub degree: usize,
    pub window_radius: f64,
    pub origin_multiplicity: u32,
    pub seed: u64,
}

impl ZeroSet {
    /// Multiplicity-weighted count of zeros in the closed disk `|z| <= r`
    /// (origin zeros included).
    pub fn count_in_disk(&self, r: f64) -> usize {
        let mut c = self.origin_multiplicity as usize;
        for z in &self.zeros {
            if z.location.norm() <= r {
                c += z.multiplicity as usize;
            }
        }
        c
    }

    pub fn total_multiplicity(&self) -> usize {
        self.origin_multiplicity as usize
            + self.zeros.iter().map(|z| z.multiplicity as usize).sum::<usize>()
    }

    pub fn max_residual(&self) -> f64 {
        self.zeros.iter().fold(0.0, |a, z| a.max(z.residual))
    }

    /// True when clustering merged near-coincident roots; with continuous
    /// noise this flags a diagnostic, not an expectation.
    pub fn has_multiple_zeros(&self) -> bool {
        self.zeros.iter().any(|z| z.multiplicity > 1)
    }
}

/// Tunables for the simultaneous iteration.
#[derive(Debug, Clone, Copy)]
pub struct RootOptions {
    pub max_iters: u32,
    /// relative step size at which a sweep counts as converged
    pub step_tol: f64,
    /// backward-error certificate bound
    pub residual_tol: f64,
    /// pairing distance for multiplicity clustering, relative to window scale
    pub cluster_tol: f64,
}

impl Default for RootOptions {
    fn default() -> Self {
        RootOptions {
            max_iters: 500,
            step_tol: 1e-13,
            residual_tol: 1e-10,
            cluster_tol: 1e-8,
        }
    }
}

/// Find all zeros of the realization with default options.
pub fn find_roots(inst: &RandomFunctionInstance) -> Result<ZeroSet> {
    find_roots_with(inst, &RootOptions::default())
}

struct ScaledPoly {
    coeffs: Vec<Complex64>,
    log_c: f64,
    tau: u32,
    degree: usize,
}

fn scaled_coefficients(inst: &RandomFunctionInstance) -> Result<ScaledPoly> {
    let top_all = inst.degree();
    let logs: Vec<f64> = (0..=top_all).map(|k| inst.term_log_mag(k)).collect();
    let first = logs.iter().position(|v| v.is_finite());
    let last = logs.iter().rposition(|v| v.is_finite());
    let (tau, top) = match (first, last) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::IdenticallyZero),
    };
    let degree = top - tau;
    if degree == 0 {
        return Ok(ScaledPoly {
            coeffs: vec![Complex64::new(1.0, 0.0)],
            log_c: 0.0,
            tau: tau as u32,
            degree: 0,
        });
    }
    // balance endpoint magnitudes, then center the log range
    let log_c = (logs[tau] - logs[top]) / degree as f64;
    let mut shifted: Vec<f64> = (0..=degree)
        .map(|j| {
            let v = logs[tau + j];
            if v.is_finite() {
                v + j as f64 * log_c
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in &shifted {
        if v.is_finite() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    let center = 0.5 * (lo + hi);
    if hi - center > 700.0 {
        return Err(Error::Domain(format!(
            "coefficient log range {:.1} too wide even after balancing",
            hi - lo
        )));
    }
    for v in &mut shifted {
        *v -= center;
    }
    let coeffs: Vec<Complex64> = (0..=degree)
        .map(|j| {
            if shifted[j].is_finite() {
                Complex64::from_polar(shifted[j].exp(), inst.term_phase(tau + j))
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    Ok(ScaledPoly {
        coeffs,
        log_c,
        tau: tau as u32,
        degree,
    })
}

/// Newton-polygon initial guesses: one circle per upper-hull segment of
/// `(j, log |b_j|)`, radius `exp(-slope)`, segment length many points.
fn initial_guesses(coeffs: &[Complex64]) -> Vec<Complex64> {
    let pts: Vec<(f64, f64)> = coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm_sqr() > 0.0)
        .map(|(j, c)| (j as f64, c.norm().ln()))
        .collect();
    let mut hull: Vec<usize> = Vec::new();
    for i in 0..pts.len() {
        while hull.len() >= 2 {
            let a = pts[hull[hull.len() - 2]];
            let b = pts[hull[hull.len() - 1]];
            let c = pts[i];
            let cross = (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    let mut guesses = Vec::with_capacity(coeffs.len() - 1);
    let golden = 0.618_033_988_749_894_9_f64;
    for (si, w) in hull.windows(2).enumerate() {
        let a = pts[w[0]];
        let b = pts[w[1]];
        let count = (b.0 - a.0).round() as usize;
        let slope = (b.1 - a.1) / (b.0 - a.0);
        let radius = (-slope).exp();
        for m in 0..count {
            let angle = 2.0 * std::f64::consts::PI * (m as f64 + 0.26) / count as f64
                + golden * (si as f64 + 1.0);
            guesses.push(Complex64::from_polar(radius, angle));
        }
    }
    guesses
}

/// Fused Horner evaluation of `p`, `p'`, and the absolute-value sum
/// `sum_j |b_j| |w|^j` that scales the evaluation rounding noise.
#[inline]
fn horner(coeffs: &[Complex64], w: Complex64) -> (Complex64, Complex64, f64) {
    let d = coeffs.len() - 1;
    let aw = w.norm();
    let mut p = coeffs[d];
    let mut dp = Complex64::new(0.0, 0.0);
    let mut abs_sum = coeffs[d].norm();
    for j in (0..d).rev() {
        dp = dp * w + p;
        p = p * w + coeffs[j];
        abs_sum = abs_sum * aw + coeffs[j].norm();
    }
    (p, dp, abs_sum)
}

/// Find all zeros with explicit options.
pub fn find_roots_with(inst: &RandomFunctionInstance, opts: &RootOptions) -> Result<ZeroSet> {
    let sp = scaled_coefficients(inst)?;
    if sp.degree == 0 {
        return Ok(ZeroSet {
            zeros: Vec::new(),
            degree: sp.tau as usize,
            window_radius: inst.window_radius(),
            origin_multiplicity: sp.tau,
            seed: inst.seed(),
        });
    }
    let mut w = initial_guesses(&sp.coeffs);
    debug_assert_eq!(w.len(), sp.degree);
    let radius_scale = w.iter().map(|z| z.norm()).fold(0.0f64, f64::max).max(1e-300);

    let d = sp.degree;
    let mut iterations = 0u32;
    let mut converged = false;
    while iterations < opts.max_iters {
        iterations += 1;
        // a sweep converges when every step is below its allowance: the
        // relative tolerance, or the rounding noise of evaluating p at w
        let mut worst_ratio = 0.0f64;
        for i in 0..d {
            let wi = w[i];
            let (p, dp, abs_sum) = horner(&sp.coeffs, wi);
            if !p.re.is_finite() || !p.im.is_finite() {
                // drifted into overflow territory; pull back toward the origin
                w[i] = wi * 0.5;
                worst_ratio = f64::INFINITY;
                continue;
            }
            if p.norm_sqr() == 0.0 {
                continue;
            }
            let newton = if dp.norm_sqr() > 0.0 {
                p / dp
            } else {
                // stationary point: nudge off it
                w[i] = wi + Complex64::new(1e-9 * radius_scale, 1e-9 * radius_scale);
                worst_ratio = f64::INFINITY;
                continue;
            };
            let mut repulsion = Complex64::new(0.0, 0.0);
            let mut collided = false;
            for j in 0..d {
                if j == i {
                    continue;
                }
                let diff = wi - w[j];
                if diff.norm_sqr() == 0.0 {
                    collided = true;
                    break;
                }
                repulsion += diff.inv();
            }
            if collided {
                w[i] = wi + Complex64::new(1e-9 * radius_scale, -1e-9 * radius_scale);
                worst_ratio = f64::INFINITY;
                continue;
            }
            let denom = Complex64::new(1.0, 0.0) - newton * repulsion;
            let step = if denom.norm_sqr() > f64::MIN_POSITIVE {
                newton / denom
            } else {
                newton
            };
            let next = wi - step;
            if !next.re.is_finite() || !next.im.is_finite() {
                w[i] = wi * 0.5;
                worst_ratio = f64::INFINITY;
                continue;
            }
            w[i] = next;
            let noise_floor = 4.0 * f64::EPSILON * abs_sum / dp.norm();
            let allowance = (opts.step_tol * (wi.norm() + 1e-3 * radius_scale)).max(noise_floor);
            let ratio = step.norm() / allowance;
            if ratio > worst_ratio {
                worst_ratio = ratio;
            }
        }
        if worst_ratio <= 1.0 {
            converged = true;
            break;
        }
    }

    let scale = sp.log_c.exp();
    let mut roots: Vec<Complex64> = w.iter().map(|&wi| wi * scale).collect();
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));

    // cluster near-coincident roots into multiplicities
    let eps = opts.cluster_tol * inst.window_radius().max(1.0);
    let mut used = vec![false; roots.len()];
    let mut zeros: Vec<Zero> = Vec::with_capacity(roots.len());
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let mut members = vec![roots[i]];
        let mut j = i + 1;
        while j < roots.len() && roots[j].re - roots[i].re <= eps {
            if !used[j] && (roots[j] - roots[i]).norm() <= eps {
                used[j] = true;
                members.push(roots[j]);
            }
            j += 1;
        }
        let mean = members.iter().sum::<Complex64>() / members.len() as f64;
        zeros.push(Zero {
            location: mean,
            multiplicity: members.len() as u32,
            residual: 0.0,
        });
    }

    // certify with the stable evaluator: coefficient-scale backward error
    for z in &mut zeros {
        let v = inst.evaluate_raw(z.location);
        let scale_log = inst.log_term_sum(z.location);
        z.residual = match v {
            Ok(val) => (val.log_mag - scale_log).exp(),
            Err(_) => f64::INFINITY,
        };
    }
    zeros.sort_by(|a, b| {
        a.location
            .norm()
            .total_cmp(&b.location.norm())
            .then(a.location.arg().total_cmp(&b.location.arg()))
    });

    let set = ZeroSet {
        zeros,
        degree: sp.degree + sp.tau as usize,
        window_radius: inst.window_radius(),
        origin_multiplicity: sp.tau,
        seed: inst.seed(),
    };
    if !converged {
        return Err(Error::RootNonConvergence {
            iterations,
            partial: Box::new(set),
        });
    }
    let max_res = set.max_residual();
    if max_res > opts.residual_tol {
        return Err(Error::ResidualCheck {
            max_residual: max_res,
            tolerance: opts.residual_tol,
            partial: Box::new(set),
        });
    }
    Ok(set)
}

/// Count zeros in the closed disk `|z| < r` by the argument principle:
/// adaptive trapezoidal quadrature of the phase increment along `|z| = r`.
///
/// Independent of `find_roots`; used as a cross-check oracle.
pub fn count_zeros_in_disk(inst: &RandomFunctionInstance, r: f64) -> Result<usize> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter("radius must be positive".into()));
    }
    let top = inst.degree();
    let ln_r = r.ln();
    let mut peak = f64::NEG_INFINITY;
    for k in 0..=top {
        peak = peak.max(inst.term_log_mag(k) + k as f64 * ln_r);
    }
    if peak == f64::NEG_INFINITY {
        return Err(Error::IdenticallyZero);
    }
    let coeffs: Vec<Complex64> = (0..=top)
        .map(|k| {
            let lm = inst.term_log_mag(k) + k as f64 * ln_r - peak;
            if lm < -745.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::from_polar(lm.exp(), inst.term_phase(k))
            }
        })
        .collect();

    let eval_phase_mag = |theta: f64| -> (f64, f64) {
        // p(r e^{i theta}) via rotation recurrence, resynced periodically
        let step = Complex64::from_polar(1.0, theta);
        let mut rot = Complex64::new(1.0, 0.0);
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, c) in coeffs.iter().enumerate() {
            if k > 0 {
                if k % 256 == 0 {
                    rot = Complex64::from_polar(1.0, theta * k as f64);
                } else {
                    rot *= step;
                }
            }
            acc += c * rot;
        }
        (acc.arg(), acc.norm())
    };

    let mut m = 1024usize.max(8 * top.min(4096));
    loop {
        let mut phases = Vec::with_capacity(m);
        let mut min_mag = f64::INFINITY;
        let mut max_mag = 0.0f64;
        for i in 0..m {
            let theta = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
            let (ph, mag) = eval_phase_mag(theta);
            phases.push(ph);
            min_mag = min_mag.min(mag);
            max_mag = max_mag.max(mag);
        }
        if min_mag == 0.0 || min_mag / max_mag < 1e-13 {
            return Err(Error::WindingAmbiguous(format!(
                "circle |z| = {r} passes within rounding distance of a zero"
            )));
        }
        let mut total = 0.0;
        let mut ok = true;
        for i in 0..m {
            let a = phases[i];
            let b = phases[(i + 1) % m];
            let mut d = b - a;
            while d > std::f64::consts::PI {
                d -= 2.0 * std::f64::consts::PI;
            }
            while d < -std::f64::consts::PI {
                d += 2.0 * std::f64::consts::PI;
            }
            if d.abs() > 0.5 * std::f64::consts::PI {
                ok = false;
                break;
            }
            total += d;
        }
        if ok {
            let winding = total / (2.0 * std::f64::consts::PI);
            let rounded = winding.round();
            if (winding - rounded).abs() > 0.1 {
                return Err(Error::WindingAmbiguous(format!(
                    "non-integral winding {winding:.4} at r = {r}"
                )));
            }
            if rounded < 0.0 {
                return Err(Error::WindingAmbiguous(format!(
                    "negative winding {winding:.4} at r = {r}"
                )));
            }
            return Ok(rounded as usize);
        }
        if m >= (1 << 21) {
            return Err(Error::WindingAmbiguous(format!(
                "phase increments stay above pi/2 at r = {r}; suspected zero on the circle"
            )));
        }
        m *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{instantiate, NoiseDistribution, RandomFunctionInstance};
    use crate::schedule::{coefficients, RadialProfile};

    fn explicit(coeffs: &[Complex64], window: f64) -> RandomFunctionInstance {
        let logs: Vec<f64> = coeffs
            .iter()
            .map(|c| {
                let n = c.norm();
                if n == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    n.ln()
                }
            })
            .collect();
        let phases: Vec<f64> = coeffs.iter().map(|c| c.arg()).collect();
        RandomFunctionInstance::from_log_coefficients(logs, phases, window).unwrap()
    }

    #[test]
    fn cube_roots_of_unity() {
        let one = Complex64::new(1.0, 0.0);
        let inst = explicit(
            &[-one, 0.0 * one, 0.0 * one, one], // z^3 - 1
            2.0,
        );
        let zs = find_roots(&inst).unwrap();
        assert_eq!(zs.zeros.len(), 3);
        assert_eq!(zs.total_multiplicity(), 3);
        for z in &zs.zeros {
            assert!((z.location.norm() - 1.0).abs() <= 1e-12);
            assert!((z.location.powi(3) - one).norm() <= 1e-12);
            assert!(z.residual <= 1e-13, "residual {}", z.residual);
        }
    }

    #[test]
    fn double_root_clusters() {
        // (z - 0.5)^2 = 0.25 - z + z^2
        let inst = explicit(
            &[
                Complex64::new(0.25, 0.0),
                Complex64::new(-1.0, 0.0),
                Complex64::new(1.0, 0.0),
            ],
            2.0,
        );
        let zs = find_roots(&inst).unwrap();
        assert_eq!(zs.zeros.len(), 1, "zeros: {:?}", zs.zeros);
        assert_eq!(zs.zeros[0].multiplicity, 2);
        assert!((zs.zeros[0].location - Complex64::new(0.5, 0.0)).norm() <= 1e-7);
        assert!(zs.has_multiple_zeros());
    }

    #[test]
    fn origin_multiplicity_counted() {
        // z^2 (z - 1) = -z^2 + z^3
        let inst = explicit(
            &[
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(-1.0, 0.0),
                Complex64::new(1.0, 0.0),
            ],
            2.0,
        );
        let zs = find_roots(&inst).unwrap();
        assert_eq!(zs.origin_multiplicity, 2);
        assert_eq!(zs.degree, 3);
        assert_eq!(zs.zeros.len(), 1);
        assert!((zs.zeros[0].location - Complex64::new(1.0, 0.0)).norm() <= 1e-12);
        assert_eq!(zs.count_in_disk(2.0), 3);
    }

    #[test]
    fn identically_zero_rejected() {
        let inst = RandomFunctionInstance::from_log_coefficients(
            vec![f64::NEG_INFINITY; 3],
            vec![0.0; 3],
            1.0,
        )
        .unwrap();
        assert!(matches!(find_roots(&inst), Err(Error::IdenticallyZero)));
    }

    #[test]
    fn winding_cube_roots() {
        let one = Complex64::new(1.0, 0.0);
        let inst = explicit(&[-one, 0.0 * one, 0.0 * one, one], 3.0);
        assert_eq!(count_zeros_in_disk(&inst, 2.0).unwrap(), 3);
        assert_eq!(count_zeros_in_disk(&inst, 0.5).unwrap(), 0);
    }

    #[test]
    fn winding_counts_multiplicity() {
        let inst = explicit(
            &[
                Complex64::new(0.25, 0.0),
                Complex64::new(-1.0, 0.0),
                Complex64::new(1.0, 0.0),
            ],
            2.0,
        );
        assert_eq!(count_zeros_in_disk(&inst, 1.0).unwrap(), 2);
    }

    #[test]
    fn winding_matches_find_roots_on_kac() {
        let sched = coefficients(&RadialProfile::kac(), 100, 100).unwrap();
        let inst = instantiate(&sched, NoiseDistribution::ComplexGaussian, 31, 2.5).unwrap();
        let zs = find_roots(&inst).unwrap();
        let counted = count_zeros_in_disk(&inst, 2.0).unwrap();
        assert_eq!(counted, zs.count_in_disk(2.0));
    }

    #[test]
    fn scaling_equivariance() {
        let sched = coefficients(&RadialProfile::kac(), 40, 40).unwrap();
        let inst = instantiate(&sched, NoiseDistribution::ComplexGaussian, 5, 4.0).unwrap();
        let base = find_roots(&inst).unwrap();
        for c in [2.0f64, 1.0 / 3.0] {
            let scaled_sched = sched.with_variable_scale(c.ln());
            let scaled =
                instantiate(&scaled_sched, NoiseDistribution::ComplexGaussian, 5, 4.0 / c)
                    .unwrap();
            let zs = find_roots(&scaled).unwrap();
            assert_eq!(zs.zeros.len(), base.zeros.len());
            // zeros of G(cz) are zeros of G divided by c
            let mut got: Vec<Complex64> = zs.zeros.iter().map(|z| z.location * c).collect();
            for b in &base.zeros {
                let (bi, dist) = got
                    .iter()
                    .enumerate()
                    .map(|(i, g)| (i, (g - b.location).norm()))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .unwrap();
                assert!(
                    dist <= 1e-12 * (1.0 + b.location.norm()),
                    "scale {c}: dist {dist:.3e}"
                );
                got.swap_remove(bi);
            }
        }
    }

    #[test]
    fn residuals_small_for_random_polynomials() {
        let p = RadialProfile::lo_poly(0.5, 0.0).unwrap();
        let sched = coefficients(&p, 200, 200).unwrap();
        let inst = instantiate(&sched, NoiseDistribution::ComplexGaussian, 11, 1.3).unwrap();
        let zs = find_roots(&inst).unwrap();
        assert_eq!(zs.total_multiplicity(), 200);
        assert!(zs.max_residual() <= 1e-10, "max residual {}", zs.max_residual());
    }
}
