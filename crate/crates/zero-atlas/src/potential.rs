//! Equilibrium-measure verification for truncated limit laws.
//!
//! Cutting the series at degree `kappa * n` produces a limit measure of
//! total mass `kappa` supported in the annulus
//! `e^{u'(0+)} <= |z| <= e^{u'(kappa)}`. Its logarithmic potential has a
//! three-branch closed form; an independent layer-cake quadrature over the
//! radial CDF cross-checks it, and the flatness of
//! `U(z) + I(log |z|)` over the support certifies the equilibrium property.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::conjugate::{conjugate_analyzed, ConjugateProfile};
use crate::error::{Error, Result};
use crate::limitlaw::LimitMeasure;
use crate::schedule::RadialProfile;

/// The law of the series truncated at mass `kappa`, with everything needed
/// to evaluate and certify its logarithmic potential.
#[derive(Debug, Clone)]
pub struct TruncatedLaw {
    kappa: f64,
    u0: f64,
    u_kappa: f64,
    u_prime_0: f64,
    u_prime_kappa: f64,
    lm: LimitMeasure,
    /// mass sitting exactly on the outer support circle (e.g. the whole
    /// measure for the Kac family, whose `u'` is constant)
    edge_mass: f64,
}

const GRID_H: f64 = 1e-3;

impl TruncatedLaw {
    /// Build the truncated law. `u` must be convex (named families are;
    /// non-convex custom profiles take `convex_hull` preprocessing first).
    /// `kappa = T0` is allowed when `u(T0)` is finite.
    pub fn new(profile: &RadialProfile, kappa: f64) -> Result<Self> {
        if !(kappa > 0.0) || kappa > profile.t0() {
            return Err(Error::InvalidParameter(format!(
                "kappa = {kappa} outside (0, T0 = {}]",
                profile.t0()
            )));
        }
        let u_kappa = profile.u(kappa);
        if !u_kappa.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "u(kappa) = {u_kappa} not finite at kappa = {kappa}"
            )));
        }
        let u0 = profile.u(0.0);
        let u_prime_0 = profile.u_deriv_at_zero_plus();
        let u_prime_kappa = profile.u_left_deriv(kappa);
        if !u_prime_kappa.is_finite() {
            return Err(Error::InvalidParameter(
                "u'(kappa) must be finite for the potential closed form".into(),
            ));
        }
        // conjugate grid: deep enough below the support that the mass left
        // under the grid start is negligible, extended above the support
        // edge (but below log R0) so the external field is available outside
        let s_kappa = u_prime_kappa;
        let s_lo = (s_kappa - 40.0).min(-40.0);
        let mut s_hi = s_kappa + 1.5;
        if profile.log_r0().is_finite() {
            s_hi = s_hi.min(0.5 * (s_kappa + profile.log_r0()));
        }
        let cells = ((s_hi - s_lo) / GRID_H).ceil() as usize;
        let s_hi_snapped = s_lo + cells as f64 * GRID_H;
        let cp = conjugate_analyzed(profile, s_lo, s_hi_snapped, GRID_H)?;
        let lm = LimitMeasure::from_conjugate(cp)?;
        // mass strictly below the support edge: continuous part plus atoms
        // clearly inside; an atom sitting on the edge itself is absorbed
        // into the capped edge mass
        let cont_below = lm.cont_value_at(s_kappa);
        let atoms_below: f64 = lm
            .atoms()
            .iter()
            .filter(|a| a.s < s_kappa - 5.0 * GRID_H)
            .map(|a| a.mass)
            .sum();
        let edge_mass = (kappa - cont_below - atoms_below).max(0.0);
        Ok(TruncatedLaw {
            kappa,
            u0,
            u_kappa,
            u_prime_0,
            u_prime_kappa,
            lm,
            edge_mass,
        })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn u_prime_0(&self) -> f64 {
        self.u_prime_0
    }

    pub fn u_prime_kappa(&self) -> f64 {
        self.u_prime_kappa
    }

    /// Support annulus `[e^{u'(0+)}, e^{u'(kappa)}]`.
    pub fn support(&self) -> (f64, f64) {
        (self.u_prime_0.exp(), self.u_prime_kappa.exp())
    }

    pub fn conjugate(&self) -> &ConjugateProfile {
        self.lm.conjugate()
    }

    fn field(&self, s: f64) -> f64 {
        // external field I(log|z|), clamped below the grid where I ~ 0
        let cp = self.lm.conjugate();
        if s <= cp.s_lo() {
            cp.i_values()[0]
        } else {
            cp.i_at(s).unwrap_or(f64::INFINITY)
        }
    }

    /// External field `I(log |z|)` at radius `r` (finite for `r` within the
    /// analyzed range).
    pub fn external_field(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::Domain("field requires r > 0".into()));
        }
        let s = r.ln();
        let cp = self.lm.conjugate();
        if s > cp.s_hi() + cp.h() {
            return Err(Error::Domain(format!("r = {r} beyond analyzed range")));
        }
        Ok(self.field(s))
    }

    /// Closed-form logarithmic potential of the truncated law at `|z| = r`.
    pub fn equilibrium_potential(&self, r: f64) -> Result<f64> {
        if r < 0.0 {
            return Err(Error::Domain("radius must be nonnegative".into()));
        }
        let inner = self.u_prime_0.exp();
        let outer = self.u_prime_kappa.exp();
        if r <= inner || r == 0.0 {
            return Ok(-(self.u_kappa - self.u0));
        }
        if r >= outer {
            return Ok(-self.kappa * r.ln());
        }
        Ok(-(self.field(r.ln()) + self.u_kappa))
    }

    /// Independent route: layer-cake quadrature
    /// `U(z) = -integral max(log rho, log |z|) dF(rho)` over the truncated
    /// radial CDF (continuous part + atoms + support-edge mass).
    ///
    /// The integral is evaluated by midpoint Stieltjes sums at the grid
    /// resolution and at double the step; their difference is the error
    /// estimate checked against `tol`.
    pub fn potential_quadrature(&self, r: f64, tol: f64) -> Result<f64> {
        if !(tol > 0.0) {
            return Err(Error::InvalidParameter("tolerance must be positive".into()));
        }
        if r < 0.0 {
            return Err(Error::Domain("radius must be nonnegative".into()));
        }
        let fine = self.quadrature_at(r, 1);
        let coarse = self.quadrature_at(r, 2);
        let err = (fine - coarse).abs();
        if err > tol {
            return Err(Error::QuadratureNonConvergence(format!(
                "error estimate {err:.3e} above tol {tol:.3e} at r = {r}"
            )));
        }
        Ok(fine)
    }

    fn quadrature_at(&self, r: f64, stride: usize) -> f64 {
        let s_z = if r == 0.0 { f64::NEG_INFINITY } else { r.ln() };
        let s_kappa = self.u_prime_kappa;
        let h = self.lm.conjugate().h();
        let (mid, cont) = self.lm.cont_nodes();
        let cap = self.lm.cont_value_at(s_kappa);

        // integral of max(sigma, s_z) dF
        // mass already accumulated under the grid start (negligible by
        // construction, but accounted for)
        let mut acc = cont[0].min(cap) * mid[0].max(s_z);
        // continuous part, cells of width stride*h up to the support edge
        let mut j = 0usize;
        while j < mid.len() {
            let j2 = (j + stride).min(mid.len() - 1);
            if j2 == j {
                break;
            }
            let (s_a, s_b) = (mid[j], mid[j2].min(s_kappa));
            if s_a >= s_kappa {
                break;
            }
            let c_a = cont[j].min(cap);
            let c_b = if mid[j2] <= s_kappa {
                cont[j2].min(cap)
            } else {
                cap
            };
            let dm = (c_b - c_a).max(0.0);
            if dm > 0.0 {
                let sigma_mid = 0.5 * (s_a + s_b);
                acc += sigma_mid.max(s_z) * dm;
            }
            j += stride;
        }
        // atoms strictly inside the support
        for a in self.lm.atoms() {
            if a.s < s_kappa - 5.0 * h {
                acc += a.s.max(s_z) * a.mass;
            }
        }
        // mass on the support edge itself
        acc += s_kappa.max(s_z) * self.edge_mass;
        -acc
    }

    /// Deterministic quantile discretization of the law: `m` equal-weight
    /// points, radii at mass quantiles, golden-angle arguments.
    pub fn quantile_points(&self, m: usize) -> Result<Vec<(Complex64, f64)>> {
        if m == 0 {
            return Err(Error::InvalidParameter("need at least one point".into()));
        }
        let s_kappa = self.u_prime_kappa;
        let h = self.lm.conjugate().h();
        let (mid, cont) = self.lm.cont_nodes();
        let cap = self.lm.cont_value_at(s_kappa);
        let golden_angle = 2.0 * std::f64::consts::PI * 0.618_033_988_749_894_9;
        let w = self.kappa / m as f64;
        let mut out = Vec::with_capacity(m);
        // cumulative structure: continuous capped + interior atoms + edge
        let mut atoms: Vec<(f64, f64)> = self
            .lm
            .atoms()
            .iter()
            .filter(|a| a.s < s_kappa - 5.0 * h)
            .map(|a| (a.s, a.mass))
            .collect();
        atoms.push((s_kappa, self.edge_mass));
        for jdx in 0..m {
            let q = (jdx as f64 + 0.5) / m as f64 * self.kappa;
            // how much of q is continuous vs atomic below the target
            let mut s = f64::NAN;
            let mut atom_below = 0.0;
            for &(sa, ma) in &atoms {
                let cont_at_sa = cont
                    .iter()
                    .zip(mid)
                    .take_while(|(_, &ms)| ms <= sa)
                    .map(|(c, _)| *c)
                    .last()
                    .unwrap_or(0.0)
                    .min(cap);
                if cont_at_sa + atom_below + ma >= q {
                    if cont_at_sa + atom_below >= q {
                        break; // falls in the continuous part below this atom
                    }
                    s = sa;
                    break;
                }
                atom_below += ma;
            }
            if s.is_nan() {
                // invert the continuous part at q - atom_below
                let target = (q - atom_below).clamp(0.0, cap);
                let idx = cont.partition_point(|c| c.min(cap) < target);
                let i1 = idx.min(mid.len() - 1);
                if i1 == 0 {
                    s = mid[0];
                } else {
                    let c0 = cont[i1 - 1].min(cap);
                    let c1 = cont[i1].min(cap);
                    let t = if c1 > c0 { (target - c0) / (c1 - c0) } else { 0.5 };
                    s = mid[i1 - 1] + t * (mid[i1] - mid[i1 - 1]);
                }
                s = s.min(s_kappa);
            }
            let theta = golden_angle * jdx as f64;
            out.push((Complex64::from_polar(s.exp(), theta), w));
        }
        Ok(out)
    }

    /// Flatness certificate: evaluates `F(z) = U_quad(z) + I(log |z|)` on
    /// probes inside the open support annulus and outside it.
    pub fn flatness_certificate(
        &self,
        probes_inside: usize,
        probes_outside: usize,
    ) -> Result<FlatnessCertificate> {
        let cp = self.lm.conjugate();
        let h = cp.h();
        let inner = self.u_prime_0.max(cp.s_lo() + 20.0 * h);
        let outer = self.u_prime_kappa;
        let span = outer - inner;
        if !(span > 40.0 * h) {
            return Err(Error::Degenerate(
                "support annulus too thin for a probe sweep".into(),
            ));
        }
        let constant = -self.u_kappa;
        let quad_tol = 1e-4;
        let mut rows = Vec::new();
        let mut max_dev_inside = 0.0f64;
        for i in 0..probes_inside {
            let s = inner + span * (i as f64 + 0.5) / probes_inside as f64;
            // stay off the exact edges
            let s = s.clamp(inner + 10.0 * h, outer - 10.0 * h);
            let r = s.exp();
            let f = self.potential_quadrature(r, quad_tol)? + self.field(s);
            max_dev_inside = max_dev_inside.max((f - constant).abs());
            rows.push(ProbeRow {
                r,
                f_value: f,
                in_support: true,
            });
        }
        let mut min_margin_outside = f64::INFINITY;
        let s_top = cp.s_hi() - 10.0 * h;
        for i in 0..probes_outside {
            let frac = (i as f64 + 0.5) / probes_outside as f64;
            // half the probes beyond the outer edge, half inside the inner disk
            let s = if i % 2 == 0 {
                outer + (s_top - outer) * frac
            } else if self.u_prime_0.is_finite() {
                self.u_prime_0 - 0.5 * frac
            } else {
                outer + (s_top - outer) * frac
            };
            if s <= cp.s_lo() + 10.0 * h {
                continue;
            }
            let r = s.exp();
            let f = self.potential_quadrature(r, quad_tol)? + self.field(s);
            min_margin_outside = min_margin_outside.min(f - constant);
            rows.push(ProbeRow {
                r,
                f_value: f,
                in_support: false,
            });
        }
        Ok(FlatnessCertificate {
            kappa: self.kappa,
            constant,
            max_dev_inside,
            min_margin_outside,
            rows,
        })
    }
}

/// One probe of the variational functional `U + I(log|z|)`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ProbeRow {
    pub r: f64,
    pub f_value: f64,
    pub in_support: bool,
}

/// Result of the flatness sweep; the equilibrium property demands
/// `max_dev_inside` small and `min_margin_outside` not below `-tolerance`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FlatnessCertificate {
    pub kappa: f64,
    pub constant: f64,
    pub max_dev_inside: f64,
    pub min_margin_outside: f64,
    pub rows: Vec<ProbeRow>,
}

/// Discrete energy of a weighted point set in the external field:
/// `J = 1/2 sum_{i != j} w_i w_j log 1/|z_i - z_j| + sum_i w_i field(log |z_i|)`.
///
/// Self-interaction is excluded; coincident points are rejected (the
/// logarithmic kernel is singular there).
pub fn energy(
    points: &[(Complex64, f64)],
    field: impl Fn(f64) -> f64,
) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::InvalidParameter("empty point set".into()));
    }
    let mut interaction = 0.0;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let d = (points[i].0 - points[j].0).norm();
            if d == 0.0 {
                return Err(Error::Degenerate(format!(
                    "coincident points at index {i} and {j}"
                )));
            }
            interaction += points[i].1 * points[j].1 * (1.0 / d).ln();
        }
    }
    let mut external = 0.0;
    for (z, w) in points {
        external += w * field(z.norm().ln());
    }
    Ok(interaction + external)
}

/// Rotationally invariant weight families whose orthonormal-polynomial
/// coefficients `f_{k,n} = (moment_{2k})^{-1/2}` reproduce named ensembles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrthogonalWeight {
    /// uniform probability on the unit circle
    KacCircle,
    /// Gaussian weight `(n/pi) exp(-n |z|^2)`
    FlatGaussian,
    /// spherical weight `((n+1)/pi) (1 + |z|^2)^{-(n+2)}`
    EllipticSphere,
}

impl OrthogonalWeight {
    /// Large-deviation rate function `Q(|z|)` of the weight family.
    pub fn rate_function(&self, r: f64) -> f64 {
        match self {
            OrthogonalWeight::KacCircle => {
                if (r - 1.0).abs() < 1e-12 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            OrthogonalWeight::FlatGaussian => 0.5 * r * r,
            OrthogonalWeight::EllipticSphere => 0.5 * (1.0 + r * r).ln(),
        }
    }

    /// The radial profile whose schedule these weights reproduce.
    pub fn matching_profile(&self) -> RadialProfile {
        match self {
            OrthogonalWeight::KacCircle => RadialProfile::kac(),
            OrthogonalWeight::FlatGaussian => RadialProfile::flat(0.5, 0.0).unwrap(),
            OrthogonalWeight::EllipticSphere => RadialProfile::elliptic(0.5).unwrap(),
        }
    }

    /// `log f_{k,n} = -1/2 log integral |z|^{2k} m_n(dz)` by radial
    /// quadrature in log coordinates (the integrands are sharply peaked).
    pub fn log_moment_coefficient(&self, n: u32, k: usize) -> Result<f64> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be >= 1".into()));
        }
        let nf = n as f64;
        let kf = k as f64;
        match self {
            OrthogonalWeight::KacCircle => Ok(0.0),
            OrthogonalWeight::FlatGaussian => {
                // integrand exp(ln(2n) + (2k+2)x - n e^{2x}) over x = ln r
                let x_star = 0.5 * ((kf + 1.0) / nf).ln();
                let width = 0.5 / (kf + 1.0).sqrt();
                let g = |x: f64| (2.0 * nf).ln() + (2.0 * kf + 2.0) * x - nf * (2.0 * x).exp();
                Ok(-0.5 * log_quadrature(g, x_star, width))
            }
            OrthogonalWeight::EllipticSphere => {
                if k + 1 >= n as usize {
                    return Err(Error::InvalidParameter(format!(
                        "moment order k = {k} too large for spherical weight at n = {n}"
                    )));
                }
                let x_star = 0.5 * ((kf + 1.0) / (nf + 1.0 - kf)).ln();
                let width = 0.5 / (kf + 1.0).sqrt();
                let g = |x: f64| {
                    (2.0 * (nf + 1.0)).ln() + (2.0 * kf + 2.0) * x
                        - (nf + 2.0) * (2.0 * x).exp().ln_1p()
                };
                Ok(-0.5 * log_quadrature(g, x_star, width))
            }
        }
    }
}

/// `log integral exp(g(x)) dx` by trapezoid over `x_star +- 14 width`.
fn log_quadrature(g: impl Fn(f64) -> f64, x_star: f64, width: f64) -> f64 {
    const POINTS: usize = 8193;
    let lo = x_star - 14.0 * width;
    let hi = x_star + 14.0 * width;
    let step = (hi - lo) / (POINTS - 1) as f64;
    let mut peak = f64::NEG_INFINITY;
    let mut vals = Vec::with_capacity(POINTS);
    for i in 0..POINTS {
        let v = g(lo + i as f64 * step);
        peak = peak.max(v);
        vals.push(v);
    }
    let mut sum = 0.0;
    for (i, v) in vals.iter().enumerate() {
        let w = if i == 0 || i == POINTS - 1 { 0.5 } else { 1.0 };
        sum += w * (v - peak).exp();
    }
    peak + (sum * step).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn weyl_law() -> TruncatedLaw {
        TruncatedLaw::new(&RadialProfile::flat(0.5, 0.0).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn weyl_closed_form_branches() {
        let law = weyl_law();
        // support is the closed unit disk
        let (inner, outer) = law.support();
        assert_eq!(inner, 0.0);
        assert_relative_eq!(outer, 1.0, epsilon = 1e-12);
        // outer branch at |z| = 2
        assert_relative_eq!(
            law.equilibrium_potential(2.0).unwrap(),
            -2.0f64.ln(),
            epsilon = 1e-12
        );
        // annulus edge |z| = 1: -(I(0) + u(1)) = -(1/2 - 1/2) = 0
        assert!(law.equilibrium_potential(1.0).unwrap().abs() <= 2e-3);
        // center by limit: -(u(1) - u(0)) = 1/2
        assert_relative_eq!(law.equilibrium_potential(0.0).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn weyl_quadrature_matches_closed_form() {
        let law = weyl_law();
        for r in [0.0, 0.3, 0.7, 1.0, 1.5, 2.0] {
            let q = law.potential_quadrature(r, 1e-4).unwrap();
            let c = law.equilibrium_potential(r).unwrap();
            assert!((q - c).abs() <= 1e-4, "r = {r}: quad {q} vs closed {c}");
        }
    }

    #[test]
    fn kac_single_atom_potential() {
        let law = TruncatedLaw::new(&RadialProfile::kac(), 1.0).unwrap();
        // all mass on the unit circle: U(z) = -max(0, log|z|)
        assert_relative_eq!(
            law.potential_quadrature(3.0, 1e-6).unwrap(),
            -3.0f64.ln(),
            epsilon = 1e-6
        );
        assert!(law.potential_quadrature(0.5, 1e-6).unwrap().abs() <= 1e-6);
        assert_relative_eq!(
            law.equilibrium_potential(3.0).unwrap(),
            -3.0f64.ln(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn three_circles_outer_potential() {
        let law = TruncatedLaw::new(&RadialProfile::three_circles(), 3.0).unwrap();
        let expect = -3.0 * 10.0f64.ln();
        assert!((law.potential_quadrature(10.0, 1e-4).unwrap() - expect).abs() <= 1e-4);
        assert_relative_eq!(
            law.equilibrium_potential(10.0).unwrap(),
            expect,
            epsilon = 1e-12
        );
    }

    #[test]
    fn flatness_certificate_weyl() {
        let law = weyl_law();
        let cert = law.flatness_certificate(100, 40).unwrap();
        assert_relative_eq!(cert.constant, 0.5, epsilon = 1e-12);
        assert!(cert.max_dev_inside <= 1e-3, "dev {}", cert.max_dev_inside);
        assert!(
            cert.min_margin_outside >= -1e-3,
            "margin {}",
            cert.min_margin_outside
        );
    }

    #[test]
    fn support_nesting_in_kappa() {
        for profile in [
            RadialProfile::flat(0.5, 0.0).unwrap(),
            RadialProfile::hyperbolic(0.5).unwrap(),
        ] {
            let mut prev_outer = 0.0;
            for kappa in [0.3, 0.7, 1.0] {
                let law = TruncatedLaw::new(&profile, kappa).unwrap();
                let (inner, outer) = law.support();
                assert!(inner <= outer);
                assert!(outer >= prev_outer, "support shrank at kappa = {kappa}");
                prev_outer = outer;
            }
        }
    }

    #[test]
    fn energy_two_points_and_single_mass() {
        let pts = [
            (Complex64::new(1.0, 0.0), 1.0),
            (Complex64::new(-1.0, 0.0), 1.0),
        ];
        let j = energy(&pts, |_| 0.0).unwrap();
        assert_relative_eq!(j, -(2.0f64.ln()), epsilon = 1e-14);

        // single point of mass kappa: no interaction, pure field term
        let law = weyl_law();
        let one = [(Complex64::new(0.5, 0.0), 2.0)];
        let j = energy(&one, |s| law.external_field(s.exp()).unwrap()).unwrap();
        assert_relative_eq!(j, 2.0 * 0.5 * 0.25, epsilon = 1e-5);

        let dup = [
            (Complex64::new(0.3, 0.0), 1.0),
            (Complex64::new(0.3, 0.0), 1.0),
        ];
        assert!(energy(&dup, |_| 0.0).is_err());
    }

    #[test]
    fn energy_minimizer_beats_spread_competitor() {
        // discretized truncated law vs equal-mass uniform blob on a bigger disk
        let law = weyl_law();
        let mu_pts = law.quantile_points(400).unwrap();
        let field = |s: f64| law.field(s);
        let j_mu = energy(&mu_pts, field).unwrap();
        // continuum values: J(mu) = 3/8; uniform on D_{1.3} gives ~0.4163
        assert!((j_mu - 0.375).abs() <= 0.05, "J(mu) = {j_mu}");
        let m = 400;
        let mut comp = Vec::with_capacity(m);
        let golden_angle = 2.0 * std::f64::consts::PI * 0.618_033_988_749_894_9;
        for j in 0..m {
            let r = 1.3 * (((j as f64 + 0.5) / m as f64) as f64).sqrt();
            comp.push((Complex64::from_polar(r, golden_angle * j as f64), 1.0 / m as f64));
        }
        let j_comp = energy(&comp, field).unwrap();
        assert!(
            j_mu + 0.01 < j_comp,
            "J(mu) = {j_mu} not below competitor {j_comp}"
        );
    }

    #[test]
    fn orthogonal_moments_match_exact_formulas() {
        // Gaussian weight: moment_{2k} = k! / n^k exactly
        let n = 50u32;
        for k in [0usize, 5, 20, 40] {
            let got = OrthogonalWeight::FlatGaussian
                .log_moment_coefficient(n, k)
                .unwrap();
            let exact = 0.5 * (k as f64 * (n as f64).ln() - libm::lgamma(k as f64 + 1.0));
            assert!((got - exact).abs() <= 1e-6, "flat k={k}: {got} vs {exact}");
        }
        // spherical weight: moment_{2k} = 1 / C(n, k) exactly
        for k in [0usize, 5, 20, 40] {
            let got = OrthogonalWeight::EllipticSphere
                .log_moment_coefficient(n, k)
                .unwrap();
            let nf = n as f64;
            let exact = 0.5
                * (libm::lgamma(nf + 1.0)
                    - libm::lgamma(k as f64 + 1.0)
                    - libm::lgamma(nf - k as f64 + 1.0));
            assert!((got - exact).abs() <= 1e-6, "elliptic k={k}: {got} vs {exact}");
        }
    }

    #[test]
    fn rate_function_equals_external_field() {
        // Q(e^s) coincides with the conjugate I(s) of the matching profile
        let law = weyl_law();
        for r in [0.3, 0.8, 1.0] {
            let q = OrthogonalWeight::FlatGaussian.rate_function(r);
            let i = law.external_field(r).unwrap();
            assert!((q - i).abs() <= 1e-6, "r = {r}: Q = {q}, I = {i}");
        }
    }
}
