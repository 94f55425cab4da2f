//! The limiting zero measure derived from a conjugate profile.
//!
//! The radial CDF is `mu(D_r) = I'(log r)`; atoms (circles of positive mass)
//! come from jumps of `I'`, gaps (empty annuli) from its constancy runs, and
//! the density on smooth annuli is `I''(log |z|) / (2 pi |z|^2)`.
//!
//! The measure is kept raw (mass can exceed 1 and even be infinite in total);
//! statistical comparisons window-normalize explicitly.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::conjugate::ConjugateProfile;
use crate::error::{Error, Result};

/// A circle `|z| = radius` carrying positive limit mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub radius: f64,
    pub mass: f64,
    /// Location in log-radius coordinates.
    pub s: f64,
}

/// An annulus `r_lo < |z| < r_hi` carrying no limit mass. `r_lo = 0` and
/// `r_hi = inf` encode runs touching the ends of the analyzed grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gap {
    pub r_lo: f64,
    pub r_hi: f64,
}

/// Atoms below this multiple of the grid step are treated as unresolved
/// numerical mass and folded back into the continuous part.
const ATOM_RESOLUTION_FACTOR: f64 = 10.0;

#[derive(Debug, Clone)]
enum Segment {
    Cont {
        s_lo: f64,
        s_hi: f64,
        mass_lo: f64,
        mass_hi: f64,
    },
    Atom {
        radius: f64,
        mass_hi: f64,
    },
}

/// Radial CDF, density, atoms and gaps of the limit measure.
#[derive(Debug, Clone)]
pub struct LimitMeasure {
    cp: ConjugateProfile,
    atoms: Vec<Atom>,
    gaps: Vec<Gap>,
    /// midpoint grid in s and the continuous (atom-free) cumulative mass there
    mid_s: Vec<f64>,
    cont: Vec<f64>,
}

impl LimitMeasure {
    /// Build the measure from an analyzed conjugate profile.
    pub fn from_conjugate(cp: ConjugateProfile) -> Result<Self> {
        if !cp.analyzed() {
            return Err(Error::Domain(
                "conjugate profile must have its left derivative computed".into(),
            ));
        }
        let h = cp.h();
        let ld = cp.left_deriv();
        let n = cp.len();

        let atoms: Vec<Atom> = cp
            .jumps()
            .iter()
            .filter(|j| j.size >= ATOM_RESOLUTION_FACTOR * h)
            .map(|j| Atom {
                radius: j.s.exp(),
                mass: j.size,
                s: j.s,
            })
            .collect();

        let mut atom_cell = vec![false; n];
        for j in cp.jumps() {
            if j.size >= ATOM_RESOLUTION_FACTOR * h {
                for c in j.cell_lo..=j.cell_hi {
                    atom_cell[c] = true;
                }
            }
        }

        // continuous cumulative mass on the midpoint grid; the backward
        // difference ld[i] is the exact cell average of I', so it carries
        // O(h^2) accuracy at the midpoint
        let mut mid_s = Vec::with_capacity(n - 1);
        let mut cont = Vec::with_capacity(n - 1);
        let mut acc = ld[1];
        mid_s.push(cp.s_lo() + 0.5 * h);
        cont.push(acc);
        for i in 2..n {
            let incr = (ld[i] - ld[i - 1]).max(0.0);
            if !atom_cell[i] {
                acc += incr;
            }
            mid_s.push(cp.s_at(i) - 0.5 * h);
            cont.push(acc);
        }

        let gaps = cp
            .flats()
            .iter()
            .map(|f| Gap {
                r_lo: if f.at_grid_start && f.level <= ATOM_RESOLUTION_FACTOR * h {
                    0.0
                } else {
                    f.s_lo.exp()
                },
                r_hi: if f.at_grid_end {
                    f64::INFINITY
                } else {
                    f.s_hi.exp()
                },
            })
            .collect();

        Ok(LimitMeasure {
            cp,
            atoms,
            gaps,
            mid_s,
            cont,
        })
    }

    pub fn conjugate(&self) -> &ConjugateProfile {
        &self.cp
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn gaps(&self) -> &[Gap] {
        &self.gaps
    }

    /// Atoms and gaps, masses left raw.
    pub fn atoms_and_gaps(&self) -> (&[Atom], &[Gap]) {
        (&self.atoms, &self.gaps)
    }

    /// Midpoint grid and continuous (atom-free) cumulative mass, for
    /// Stieltjes integration against the measure.
    pub(crate) fn cont_nodes(&self) -> (&[f64], &[f64]) {
        (&self.mid_s, &self.cont)
    }

    pub(crate) fn cont_value_at(&self, s: f64) -> f64 {
        self.cont_at(s)
    }

    fn cont_at(&self, s: f64) -> f64 {
        let m = &self.mid_s;
        if s <= m[0] {
            return self.cont[0];
        }
        if s >= *m.last().unwrap() {
            return *self.cont.last().unwrap();
        }
        let h = self.cp.h();
        let x = (s - m[0]) / h;
        let i = (x.floor() as usize).min(m.len() - 2);
        let w = x - i as f64;
        self.cont[i] * (1.0 - w) + self.cont[i + 1] * w
    }

    fn check_radius(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::Domain("radius must be positive".into()));
        }
        let s = r.ln();
        if s >= self.cp.log_r0() {
            return Err(Error::Domain(format!(
                "radius {r} is not below the convergence radius"
            )));
        }
        if s > self.cp.s_hi() + self.cp.h() {
            return Err(Error::Domain(format!(
                "radius {r} beyond analyzed grid (log r = {s:.4} > {:.4})",
                self.cp.s_hi()
            )));
        }
        Ok(s)
    }

    /// Mass of the closed disk `|z| <= r` (right-continuous CDF).
    pub fn radial_cdf(&self, r: f64) -> Result<f64> {
        let s = self.check_radius(r)?;
        let atom_mass: f64 = self
            .atoms
            .iter()
            .filter(|a| a.s <= s + 1e-12 * (1.0 + s.abs()))
            .map(|a| a.mass)
            .sum();
        Ok(self.cont_at(s) + atom_mass)
    }

    /// Mass of the open disk `|z| < r` (left-continuous CDF).
    pub fn radial_cdf_open(&self, r: f64) -> Result<f64> {
        let s = self.check_radius(r)?;
        let atom_mass: f64 = self
            .atoms
            .iter()
            .filter(|a| a.s < s - 1e-12 * (1.0 + s.abs()))
            .map(|a| a.mass)
            .sum();
        Ok(self.cont_at(s) + atom_mass)
    }

    /// Lebesgue density at `z`, where defined.
    pub fn density(&self, z: Complex64) -> Result<f64> {
        let r = z.norm();
        if r == 0.0 {
            return Err(Error::Domain("density undefined at the origin".into()));
        }
        let s = self.check_radius(r)?;
        let h = self.cp.h();
        for a in &self.atoms {
            if (s - a.s).abs() <= 10.0 * h {
                return Err(Error::Domain(format!(
                    "density undefined on the atom circle |z| = {:.6}",
                    a.radius
                )));
            }
        }
        if s < self.cp.s_lo() + 8.0 * h || s > self.cp.s_hi() - 8.0 * h {
            return Err(Error::Domain(
                "density query too close to the grid boundary".into(),
            ));
        }
        let second = self.cp.second_deriv_at(s)?;
        Ok(second.max(0.0) / (2.0 * std::f64::consts::PI * r * r))
    }

    fn segments_up_to(&self, window: f64) -> Result<(Vec<Segment>, f64)> {
        let s_w = self.check_radius(window)?;
        let mut segs = Vec::new();
        let mut acc = 0.0f64;
        let mut atom_idx = 0usize;
        let atoms: Vec<&Atom> = self.atoms.iter().filter(|a| a.s <= s_w).collect();
        let m = &self.mid_s;
        let mut prev_s = m[0];
        let mut prev_c = self.cont[0];
        if prev_c > 0.0 {
            segs.push(Segment::Cont {
                s_lo: prev_s - 1e-9,
                s_hi: prev_s,
                mass_lo: 0.0,
                mass_hi: prev_c,
            });
            acc = prev_c;
        }
        for i in 1..m.len() {
            let s_cur = m[i].min(s_w);
            if m[i - 1] > s_w {
                break;
            }
            // atoms located before this midpoint
            while atom_idx < atoms.len() && atoms[atom_idx].s <= s_cur {
                let a = atoms[atom_idx];
                segs.push(Segment::Atom {
                    radius: a.radius,
                    mass_hi: acc + a.mass,
                });
                acc += a.mass;
                atom_idx += 1;
            }
            let mut c_cur = self.cont_at(s_cur);
            if c_cur > prev_c {
                segs.push(Segment::Cont {
                    s_lo: prev_s,
                    s_hi: s_cur,
                    mass_lo: acc,
                    mass_hi: acc + (c_cur - prev_c),
                });
                acc += c_cur - prev_c;
            } else {
                c_cur = prev_c;
            }
            prev_s = s_cur;
            prev_c = c_cur;
            if s_cur >= s_w {
                break;
            }
        }
        while atom_idx < atoms.len() {
            let a = atoms[atom_idx];
            segs.push(Segment::Atom {
                radius: a.radius,
                mass_hi: acc + a.mass,
            });
            acc += a.mass;
            atom_idx += 1;
        }
        Ok((segs, acc))
    }

    /// Draw `m` points i.i.d. from the window-normalized restriction of the
    /// measure to `|z| <= window_radius`. Deterministic in `(seed, m)`.
    pub fn sample(&self, window_radius: f64, m: usize, seed: u64) -> Result<Vec<Complex64>> {
        let (segs, total) = self.segments_up_to(window_radius)?;
        if !(total > 0.0) {
            return Err(Error::Degenerate("zero-mass sampling window".into()));
        }
        let mut out = Vec::with_capacity(m);
        for j in 0..m {
            let (u_r, u_a) = unit_pair(seed, j as u64);
            let target = u_r * total;
            let idx = segs.partition_point(|seg| match seg {
                Segment::Cont { mass_hi, .. } | Segment::Atom { mass_hi, .. } => {
                    *mass_hi < target
                }
            });
            let seg = &segs[idx.min(segs.len() - 1)];
            let r = match seg {
                Segment::Atom { radius, .. } => *radius,
                Segment::Cont {
                    s_lo,
                    s_hi,
                    mass_lo,
                    mass_hi,
                } => {
                    let w = ((target - mass_lo) / (mass_hi - mass_lo)).clamp(0.0, 1.0);
                    (s_lo + w * (s_hi - s_lo)).exp()
                }
            };
            let theta = 2.0 * std::f64::consts::PI * u_a;
            out.push(Complex64::from_polar(r, theta));
        }
        Ok(out)
    }
}

/// Two uniforms in `[0, 1)` as a pure function of `(seed, index)`.
pub(crate) fn unit_pair(seed: u64, index: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    (rng.random::<f64>(), rng.random::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conjugate::conjugate_analyzed;
    use crate::schedule::RadialProfile;
    use approx::assert_relative_eq;

    fn measure(p: &RadialProfile, s_lo: f64, s_hi: f64) -> LimitMeasure {
        LimitMeasure::from_conjugate(conjugate_analyzed(p, s_lo, s_hi, 1e-3).unwrap()).unwrap()
    }

    #[test]
    fn lo_poly_radial_cdf_is_r_squared() {
        let p = RadialProfile::lo_poly(0.5, 0.0).unwrap();
        let lm = measure(&p, -6.0, 0.8);
        for r in [0.2, 0.5, 0.8] {
            assert!(
                (lm.radial_cdf(r).unwrap() - r * r).abs() <= 2e-5,
                "cdf({r}) = {}",
                lm.radial_cdf(r).unwrap()
            );
        }
        // r = 1 sits on the kink of I' where the cell average smears by O(h)
        assert!((lm.radial_cdf(1.0).unwrap() - 1.0).abs() <= 1e-3);
        assert!((lm.radial_cdf(1.5).unwrap() - 1.0).abs() <= 2e-5);
    }

    #[test]
    fn theta_radial_cdf_is_half_log() {
        let p = RadialProfile::theta(2.0).unwrap();
        let lm = measure(&p, -1.0, 1.6);
        assert!(lm.radial_cdf(0.8).unwrap().abs() <= 1e-5);
        for r in [1.5, 2.0, 4.0] {
            assert!(
                (lm.radial_cdf(r).unwrap() - r.ln() / 2.0).abs() <= 2e-5,
                "cdf({r})"
            );
        }
    }

    #[test]
    fn kac_cdf_steps_at_one() {
        let lm = measure(&RadialProfile::kac(), -3.0, 3.0);
        assert_eq!(lm.radial_cdf((-0.1f64).exp()).unwrap(), 0.0);
        assert_relative_eq!(lm.radial_cdf((0.1f64).exp()).unwrap(), 1.0, epsilon = 1e-9);
        let (atoms, gaps) = lm.atoms_and_gaps();
        assert_eq!(atoms.len(), 1);
        assert!((atoms[0].radius - 1.0).abs() <= 1e-12);
        assert!((atoms[0].mass - 1.0).abs() <= 1e-9);
        assert!(gaps
            .iter()
            .any(|g| g.r_lo == 0.0 && (g.r_hi - 1.0).abs() < 0.05));
        assert!(gaps
            .iter()
            .any(|g| (g.r_lo - 1.0).abs() < 0.05 && g.r_hi.is_infinite()));
    }

    #[test]
    fn three_circles_atoms_and_gaps() {
        let lm = measure(&RadialProfile::three_circles(), -2.0, 1.6);
        let (atoms, gaps) = lm.atoms_and_gaps();
        assert_eq!(atoms.len(), 3);
        let total: f64 = atoms.iter().map(|a| a.mass).sum();
        for (a, r_exp) in atoms.iter().zip([1.0, 2.0, 3.0]) {
            assert!((a.radius - r_exp).abs() <= 0.01 * r_exp, "radius {}", a.radius);
            assert!((a.mass / total - 1.0 / 3.0).abs() <= 0.01);
        }
        let has = |lo: f64, hi: f64| {
            gaps.iter()
                .any(|g| (g.r_lo - lo).abs() <= 0.05 && (g.r_hi - hi).abs() <= 0.05)
        };
        assert!(has(1.0, 2.0), "gaps: {gaps:?}");
        assert!(has(2.0, 3.0), "gaps: {gaps:?}");
    }

    #[test]
    fn densities_match_closed_forms() {
        let flat = measure(&RadialProfile::flat(0.5, 0.0).unwrap(), -3.0, 1.0);
        let d = flat.density(Complex64::new(0.5, 0.0)).unwrap();
        assert!((d - 1.0 / std::f64::consts::PI).abs() <= 1e-4, "flat d = {d}");

        let hyp = measure(&RadialProfile::hyperbolic(0.5).unwrap(), -4.0, -0.05);
        let d = hyp.density(Complex64::new(0.0, 0.5)).unwrap();
        let expect = 16.0 / (9.0 * std::f64::consts::PI);
        assert!((d - expect).abs() <= 1e-4, "hyperbolic d = {d}");

        let theta = measure(&RadialProfile::theta(2.0).unwrap(), -1.0, 1.6);
        let d = theta.density(Complex64::new(2.0, 0.0)).unwrap();
        let expect = 1.0 / (16.0 * std::f64::consts::PI);
        assert!((d - expect).abs() <= 1e-4, "theta d = {d}");
    }

    #[test]
    fn density_rejects_atom_circles_and_origin() {
        let lm = measure(&RadialProfile::kac(), -3.0, 3.0);
        assert!(lm.density(Complex64::new(1.0, 0.0)).is_err());
        assert!(lm.density(Complex64::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn cdf_increment_matches_density_integral() {
        // over an atom-free annulus the density integrates to the CDF increment
        let lm = measure(&RadialProfile::flat(0.5, 0.0).unwrap(), -3.0, 1.0);
        let (r1, r2) = (0.4, 0.9);
        let steps = 2000;
        let mut integral = 0.0;
        for i in 0..steps {
            let r = r1 + (r2 - r1) * (i as f64 + 0.5) / steps as f64;
            let rho = lm.density(Complex64::new(r, 0.0)).unwrap();
            integral += rho * 2.0 * std::f64::consts::PI * r * (r2 - r1) / steps as f64;
        }
        let incr = lm.radial_cdf(r2).unwrap() - lm.radial_cdf(r1).unwrap();
        assert!((integral - incr).abs() <= 1e-4, "{integral} vs {incr}");
    }

    #[test]
    fn sample_kac_all_on_unit_circle() {
        let lm = measure(&RadialProfile::kac(), -3.0, 3.0);
        let pts = lm.sample(2.0, 10_000, 7).unwrap();
        for p in &pts {
            assert!((p.norm() - 1.0).abs() <= 1e-9);
        }
        // angles roughly uniform: coarse 8-bin chi-square-ish sanity bound
        let mut bins = [0usize; 8];
        for p in &pts {
            let a = p.arg().rem_euclid(2.0 * std::f64::consts::PI);
            bins[((a / (2.0 * std::f64::consts::PI) * 8.0) as usize).min(7)] += 1;
        }
        for b in bins {
            assert!((b as f64 - 1250.0).abs() < 250.0, "bins: {bins:?}");
        }
    }

    #[test]
    fn sample_weyl_radius_squared_uniform() {
        let p = RadialProfile::lo_poly(0.5, 0.0).unwrap();
        let lm = measure(&p, -6.0, 0.5);
        let pts = lm.sample(1.0, 10_000, 11).unwrap();
        let mut v: Vec<f64> = pts.iter().map(|z| z.norm_sqr()).collect();
        v.sort_by(|a, b| a.total_cmp(b));
        let m = v.len() as f64;
        let mut ks = 0.0f64;
        for (i, x) in v.iter().enumerate() {
            ks = ks.max(((i + 1) as f64 / m - x).abs());
            ks = ks.max((i as f64 / m - x).abs());
        }
        assert!(ks <= 0.02, "ks = {ks}");
    }

    #[test]
    fn sample_three_circles_masses() {
        let lm = measure(&RadialProfile::three_circles(), -2.0, 1.6);
        let pts = lm.sample(4.0, 30_000, 3).unwrap();
        let mut counts = [0usize; 3];
        for p in &pts {
            let r = p.norm();
            for (i, c) in [1.0, 2.0, 3.0].iter().enumerate() {
                if (r - c).abs() < 1e-6 {
                    counts[i] += 1;
                }
            }
        }
        for c in counts {
            assert!(
                (c as f64 / 30_000.0 - 1.0 / 3.0).abs() <= 0.01,
                "counts: {counts:?}"
            );
        }
    }

    #[test]
    fn sample_is_deterministic() {
        let lm = measure(&RadialProfile::kac(), -3.0, 3.0);
        let a = lm.sample(2.0, 100, 42).unwrap();
        let b = lm.sample(2.0, 100, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_mass_window_rejected() {
        let lm = measure(&RadialProfile::kac(), -3.0, 3.0);
        assert!(matches!(
            lm.sample(0.5, 10, 1),
            Err(Error::Degenerate(_))
        ));
    }
}
