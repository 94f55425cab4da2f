//! Text serialization: profile key-value documents, conjugate tables,
//! zero-set tables, and JSON reports.
//!
//! Floats are emitted with 17 significant digits so identical runs produce
//! byte-identical files. JSON is written by hand for that reason (the keys
//! come out in a fixed order); parsing goes through serde.

use num_complex::Complex64;
use serde::Deserialize;

use crate::conjugate::ConjugateProfile;
use crate::empirics::ComparisonReport;
use crate::error::{Error, Result};
use crate::limitlaw::LimitMeasure;
use crate::potential::FlatnessCertificate;
use crate::roots::{Zero, ZeroSet};
use crate::schedule::{ProfileKind, RadialProfile};

/// 17 significant digits; `inf`/`-inf` spelled out for key-value documents.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:.16e}")
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    match s.trim() {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        "nan" => Ok(f64::NAN),
        other => other
            .parse()
            .map_err(|_| Error::Parse(format!("bad float: {other}"))),
    }
}

// ---------------------------------------------------------------- profiles

/// Profile as a key-value document: `kind`, parameters, `t0`, `r0`, and the
/// grid arrays for custom profiles.
pub fn profile_to_kv(p: &RadialProfile) -> String {
    let mut out = String::new();
    let (kind, alpha, beta) = match p.kind() {
        ProfileKind::Kac => ("kac", None, None),
        ProfileKind::Elliptic { alpha } => ("elliptic", Some(alpha), None),
        ProfileKind::Flat { alpha, beta } => ("flat", Some(alpha), Some(beta)),
        ProfileKind::Hyperbolic { alpha } => ("hyperbolic", Some(alpha), None),
        ProfileKind::LoPoly { alpha, beta } => ("lo_poly", Some(alpha), Some(beta)),
        ProfileKind::Theta { alpha } => ("theta", Some(alpha), None),
        ProfileKind::ThreeCircles => ("three_circles", None, None),
        ProfileKind::Custom => ("custom", None, None),
    };
    out.push_str(&format!("kind = {kind}\n"));
    if let Some(a) = alpha {
        out.push_str(&format!("alpha = {}\n", fmt_f64(a)));
    }
    if let Some(b) = beta {
        out.push_str(&format!("beta = {}\n", fmt_f64(b)));
    }
    out.push_str(&format!("t0 = {}\n", fmt_f64(p.t0())));
    out.push_str(&format!("r0 = {}\n", fmt_f64(p.r0())));
    if matches!(p.kind(), ProfileKind::Custom) {
        let g = p.grid().expect("custom profiles are grid-backed");
        let ts: Vec<String> = g.t.iter().map(|v| fmt_f64(*v)).collect();
        let us: Vec<String> = g.u.iter().map(|v| fmt_f64(*v)).collect();
        out.push_str(&format!("t = {}\n", ts.join(" ")));
        out.push_str(&format!("u = {}\n", us.join(" ")));
    }
    out
}

/// Parse a profile document produced by `profile_to_kv`.
pub fn profile_from_kv(doc: &str) -> Result<RadialProfile> {
    let mut fields = std::collections::BTreeMap::new();
    for line in doc.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected 'key = value', got: {line}")))?;
        fields.insert(k.trim().to_string(), v.trim().to_string());
    }
    let kind = fields
        .get("kind")
        .ok_or_else(|| Error::Parse("missing kind".into()))?
        .as_str();
    let get = |k: &str| -> Result<f64> {
        parse_f64(
            fields
                .get(k)
                .ok_or_else(|| Error::Parse(format!("missing field {k}")))?,
        )
    };
    match kind {
        "kac" => Ok(RadialProfile::kac()),
        "three_circles" => Ok(RadialProfile::three_circles()),
        "elliptic" => RadialProfile::elliptic(get("alpha")?),
        "hyperbolic" => RadialProfile::hyperbolic(get("alpha")?),
        "theta" => RadialProfile::theta(get("alpha")?),
        "flat" => RadialProfile::flat(get("alpha")?, get("beta")?),
        "lo_poly" => RadialProfile::lo_poly(get("alpha")?, get("beta")?),
        "custom" => {
            let parse_arr = |k: &str| -> Result<Vec<f64>> {
                fields
                    .get(k)
                    .ok_or_else(|| Error::Parse(format!("missing array {k}")))?
                    .split_whitespace()
                    .map(parse_f64)
                    .collect()
            };
            let t = parse_arr("t")?;
            let u = parse_arr("u")?;
            RadialProfile::from_samples(&t, &u, get("t0")?)
        }
        other => Err(Error::Parse(format!("unknown profile kind: {other}"))),
    }
}

// --------------------------------------------------------------- conjugate

/// Columnar table `s I I_prime`, one row per node, with jump/flat footer
/// records.
pub fn conjugate_to_table(cp: &ConjugateProfile) -> String {
    let mut out = String::from("# s I I_prime\n");
    let ld = cp.left_deriv();
    for i in 0..cp.len() {
        let d = if ld.is_empty() { f64::NAN } else { ld[i] };
        out.push_str(&format!(
            "{} {} {}\n",
            fmt_f64(cp.s_at(i)),
            fmt_f64(cp.i_values()[i]),
            fmt_f64(d)
        ));
    }
    for j in cp.jumps() {
        out.push_str(&format!(
            "# jump s = {} size = {}\n",
            fmt_f64(j.s),
            fmt_f64(j.size)
        ));
    }
    for f in cp.flats() {
        out.push_str(&format!(
            "# flat s_lo = {} s_hi = {} level = {}\n",
            fmt_f64(f.s_lo),
            fmt_f64(f.s_hi),
            fmt_f64(f.level)
        ));
    }
    out
}

/// Parse the data rows of a conjugate table back into `(s, I, I')` triples.
pub fn conjugate_rows_from_table(doc: &str) -> Result<Vec<(f64, f64, f64)>> {
    let mut rows = Vec::new();
    for line in doc.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 3 {
            return Err(Error::Parse(format!("expected 3 columns: {line}")));
        }
        rows.push((parse_f64(cols[0])?, parse_f64(cols[1])?, parse_f64(cols[2])?));
    }
    Ok(rows)
}

// ------------------------------------------------------------------- zeros

/// Delimited zero table: header comment with the realization metadata, then
/// `re,im,multiplicity,residual` rows.
pub fn zeros_to_table(zs: &ZeroSet) -> String {
    let mut out = format!(
        "# degree = {} window = {} origin_multiplicity = {} seed = {}\n",
        zs.degree,
        fmt_f64(zs.window_radius),
        zs.origin_multiplicity,
        zs.seed
    );
    out.push_str("re,im,multiplicity,residual\n");
    for z in &zs.zeros {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_f64(z.location.re),
            fmt_f64(z.location.im),
            z.multiplicity,
            fmt_f64(z.residual)
        ));
    }
    out
}

/// Parse a zero table produced by `zeros_to_table`.
pub fn zeros_from_table(doc: &str) -> Result<ZeroSet> {
    let mut meta = std::collections::BTreeMap::new();
    let mut zeros = Vec::new();
    for line in doc.lines() {
        let line = line.trim();
        if line.is_empty() || line == "re,im,multiplicity,residual" {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            for part in rest.split_whitespace().collect::<Vec<_>>().chunks(3) {
                if part.len() == 3 && part[1] == "=" {
                    meta.insert(part[0].to_string(), part[2].to_string());
                }
            }
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(Error::Parse(format!("expected 4 columns: {line}")));
        }
        zeros.push(Zero {
            location: Complex64::new(parse_f64(cols[0])?, parse_f64(cols[1])?),
            multiplicity: cols[2]
                .parse()
                .map_err(|_| Error::Parse(format!("bad multiplicity: {}", cols[2])))?,
            residual: parse_f64(cols[3])?,
        });
    }
    let get = |k: &str| -> Result<&String> {
        meta.get(k)
            .ok_or_else(|| Error::Parse(format!("missing header field {k}")))
    };
    Ok(ZeroSet {
        zeros,
        degree: get("degree")?
            .parse()
            .map_err(|_| Error::Parse("bad degree".into()))?,
        window_radius: parse_f64(get("window")?)?,
        origin_multiplicity: get("origin_multiplicity")?
            .parse()
            .map_err(|_| Error::Parse("bad origin multiplicity".into()))?,
        seed: get("seed")?
            .parse()
            .map_err(|_| Error::Parse("bad seed".into()))?,
    })
}

// -------------------------------------------------------------------- JSON

struct JsonWriter {
    buf: String,
}

impl JsonWriter {
    fn new() -> Self {
        JsonWriter { buf: String::new() }
    }

    fn raw(&mut self, s: &str) {
        self.buf.push_str(s);
    }

    fn string(&mut self, s: &str) {
        self.buf.push('"');
        for c in s.chars() {
            match c {
                '"' => self.buf.push_str("\\\""),
                '\\' => self.buf.push_str("\\\\"),
                '\n' => self.buf.push_str("\\n"),
                c if (c as u32) < 0x20 => self.buf.push_str(&format!("\\u{:04x}", c as u32)),
                c => self.buf.push(c),
            }
        }
        self.buf.push('"');
    }

    fn num(&mut self, x: f64) {
        if x.is_finite() {
            self.buf.push_str(&format!("{x:.16e}"));
        } else {
            self.buf.push_str("null");
        }
    }
}

/// Comparison report in its documented JSON schema.
pub fn comparison_to_json(r: &ComparisonReport) -> String {
    let mut w = JsonWriter::new();
    w.raw("{\"config\":{");
    w.raw("\"ensemble\":");
    w.string(&r.ensemble);
    w.raw(",\"noise\":");
    w.string(&r.noise);
    w.raw(&format!(",\"n\":{}", r.n));
    w.raw(&format!(",\"trials\":{}", r.trials));
    w.raw(",\"window\":");
    w.num(r.window);
    w.raw(&format!(",\"base_seed\":{}", r.base_seed));
    w.raw("},\"per_trial\":[");
    for (i, t) in r.per_trial.iter().enumerate() {
        if i > 0 {
            w.raw(",");
        }
        w.raw(&format!("{{\"seed\":{},\"ks_radial\":", t.seed));
        w.num(t.ks_radial);
        w.raw(",\"ks_angular\":");
        w.num(t.ks_angular);
        w.raw(&format!(",\"count\":{}}}", t.count));
    }
    w.raw("],\"aggregate\":{\"mean_ks_radial\":");
    w.num(r.aggregate.mean_ks_radial);
    w.raw(",\"mean_ks_angular\":");
    w.num(r.aggregate.mean_ks_angular);
    w.raw(",\"max_ks_radial\":");
    w.num(r.aggregate.max_ks_radial);
    w.raw(",\"max_ks_angular\":");
    w.num(r.aggregate.max_ks_angular);
    w.raw(",\"mean_count\":");
    w.num(r.aggregate.mean_count);
    w.raw("},\"potential\":[");
    for (i, p) in r.potential.iter().enumerate() {
        if i > 0 {
            w.raw(",");
        }
        w.raw("{\"z_re\":");
        w.num(p.z_re);
        w.raw(",\"z_im\":");
        w.num(p.z_im);
        w.raw(",\"p_n_mean\":");
        w.num(p.p_n_mean);
        w.raw(",\"target\":");
        w.num(p.target);
        w.raw(",\"gap\":");
        w.num(p.gap);
        w.raw("}");
    }
    w.raw("],\"errors\":[");
    for (i, e) in r.errors.iter().enumerate() {
        if i > 0 {
            w.raw(",");
        }
        w.raw(&format!("{{\"trial\":{},\"seed\":{},\"message\":", e.trial, e.seed));
        w.string(&e.message);
        w.raw("}");
    }
    w.raw("]}");
    w.buf
}

/// Parsed form of the comparison JSON (round-trip test surface).
#[derive(Debug, Deserialize)]
pub struct ComparisonJson {
    pub config: ComparisonJsonConfig,
    pub per_trial: Vec<crate::empirics::TrialStats>,
    pub aggregate: crate::empirics::Aggregate,
    pub potential: Vec<crate::empirics::PotentialSummary>,
    pub errors: Vec<crate::empirics::TrialError>,
}

#[derive(Debug, Deserialize)]
pub struct ComparisonJsonConfig {
    pub ensemble: String,
    pub noise: String,
    pub n: u32,
    pub trials: u32,
    pub window: f64,
    pub base_seed: u64,
}

pub fn comparison_from_json(doc: &str) -> Result<ComparisonJson> {
    serde_json::from_str(doc).map_err(|e| Error::Parse(format!("comparison json: {e}")))
}

/// Limit-law summary: radial CDF table, density samples, atoms, gaps.
pub fn limit_to_json(
    ensemble: &str,
    lm: &LimitMeasure,
    radii: &[f64],
    densities: &[(f64, Option<f64>)],
) -> Result<String> {
    let mut w = JsonWriter::new();
    w.raw("{\"config\":{\"ensemble\":");
    w.string(ensemble);
    w.raw("},\"radial_cdf\":[");
    for (i, &r) in radii.iter().enumerate() {
        if i > 0 {
            w.raw(",");
        }
        w.raw("{\"r\":");
        w.num(r);
        w.raw(",\"mass\":");
        w.num(lm.radial_cdf(r)?);
        w.raw("}");
    }
    w.raw("],\"density\":[");
    for (i, (r, d)) in densities.iter().enumerate() {
        if i > 0 {
            w.raw(",");
        }
        w.raw("{\"r\":");
        w.num(*r);
        w.raw(",\"value\":");
        match d {
            Some(v) => w.num(*v),
            None => w.raw("null"),
        }
        w.raw("}");
    }
    w.raw("],\"atoms\":[");
    for (i, a) in lm.atoms().iter().enumerate() {
        if i > 0 {
            w.raw(",");
        }
        w.raw("{\"radius\":");
        w.num(a.radius);
        w.raw(",\"mass\":");
        w.num(a.mass);
        w.raw("}");
    }
    w.raw("],\"gaps\":[");
    for (i, g) in lm.gaps().iter().enumerate() {
        if i > 0 {
            w.raw(",");
        }
        w.raw("{\"r_lo\":");
        w.num(g.r_lo);
        w.raw(",\"r_hi\":");
        if g.r_hi.is_finite() {
            w.num(g.r_hi);
        } else {
            w.raw("null");
        }
        w.raw("}");
    }
    w.raw("]}");
    Ok(w.buf)
}

#[derive(Debug, Deserialize)]
pub struct LimitJson {
    pub config: serde_json::Value,
    pub radial_cdf: Vec<RadialRow>,
    pub density: Vec<DensityRow>,
    pub atoms: Vec<AtomRow>,
    pub gaps: Vec<GapRow>,
}

#[derive(Debug, Deserialize)]
pub struct RadialRow {
    pub r: f64,
    pub mass: f64,
}

#[derive(Debug, Deserialize)]
pub struct DensityRow {
    pub r: f64,
    pub value: Option<f64>,
}

#[derive(Debug, Deserialize)]
pub struct AtomRow {
    pub radius: f64,
    pub mass: f64,
}

#[derive(Debug, Deserialize)]
pub struct GapRow {
    pub r_lo: f64,
    pub r_hi: Option<f64>,
}

pub fn limit_from_json(doc: &str) -> Result<LimitJson> {
    serde_json::from_str(doc).map_err(|e| Error::Parse(format!("limit json: {e}")))
}

/// Flatness certificate with the probe table.
pub fn flatness_to_json(ensemble: &str, cert: &FlatnessCertificate) -> String {
    let mut w = JsonWriter::new();
    w.raw("{\"config\":{\"ensemble\":");
    w.string(ensemble);
    w.raw(",\"kappa\":");
    w.num(cert.kappa);
    w.raw("},\"constant\":");
    w.num(cert.constant);
    w.raw(",\"max_dev_inside\":");
    w.num(cert.max_dev_inside);
    w.raw(",\"min_margin_outside\":");
    w.num(cert.min_margin_outside);
    w.raw(",\"probes\":[");
    for (i, p) in cert.rows.iter().enumerate() {
        if i > 0 {
            w.raw(",");
        }
        w.raw("{\"r\":");
        w.num(p.r);
        w.raw(",\"f\":");
        w.num(p.f_value);
        w.raw(&format!(",\"in_support\":{}}}", p.in_support));
    }
    w.raw("]}");
    w.buf
}

#[derive(Debug, Deserialize)]
pub struct FlatnessJson {
    pub config: serde_json::Value,
    pub constant: f64,
    pub max_dev_inside: f64,
    pub min_margin_outside: f64,
    pub probes: Vec<FlatnessProbeRow>,
}

#[derive(Debug, Deserialize)]
pub struct FlatnessProbeRow {
    pub r: f64,
    pub f: f64,
    pub in_support: bool,
}

pub fn flatness_from_json(doc: &str) -> Result<FlatnessJson> {
    serde_json::from_str(doc).map_err(|e| Error::Parse(format!("flatness json: {e}")))
}
