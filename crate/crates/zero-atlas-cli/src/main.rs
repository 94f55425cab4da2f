//! Command-line front end: limit-law inspection, zero computation,
//! Monte Carlo comparison campaigns, potential certificates, and raw
//! conjugate tables.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 threshold violation in `--check` mode.

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use zero_atlas::conjugate::conjugate_analyzed;
use zero_atlas::empirics::{compare_report, CompareConfig};
use zero_atlas::limitlaw::LimitMeasure;
use zero_atlas::potential::TruncatedLaw;
use zero_atlas::report;
use zero_atlas::roots::find_roots;
use zero_atlas::sampler::{instantiate, NoiseDistribution};
use zero_atlas::schedule::{schedule_for_window, RadialProfile};
use zero_atlas::{Error, DEFAULT_SEED};

#[derive(Parser)]
#[command(name = "zero-atlas", version, about = "Zeros of random analytic functions: limit laws and verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit the limit law: radial CDF table, density samples, atoms, gaps.
    Limit(CommonArgs),
    /// Sample one realization, find all zeros, emit a zero table.
    Zeros(CommonArgs),
    /// Run a Monte Carlo comparison campaign against the limit law.
    Compare(CommonArgs),
    /// Emit the equilibrium flatness certificate for the truncated law.
    Potential(CommonArgs),
    /// Emit the conjugate profile as a columnar table.
    Conjugate(CommonArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Ensemble: kac | elliptic | flat | hyperbolic | lo-poly | weyl | theta | three-circles
    #[arg(long, default_value = "weyl")]
    ensemble: String,
    /// Profile exponent (where applicable)
    #[arg(long)]
    alpha: Option<f64>,
    /// Profile drift (flat / lo-poly)
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    /// Truncation mass for `potential`
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    /// Noise kind: complex-gaussian | real-gaussian | rademacher | cauchy |
    /// uniform-disc | pareto-log:GAMMA
    #[arg(long, default_value = "complex-gaussian")]
    noise: String,
    /// Scale parameter
    #[arg(long, default_value_t = 200)]
    n: u32,
    /// Monte Carlo trials for `compare`
    #[arg(long, default_value_t = 20)]
    trials: u32,
    /// Window radius (ensemble-specific default)
    #[arg(long)]
    window: Option<f64>,
    /// Base seed (env ZERO_ATLAS_SEED overrides this default)
    #[arg(long)]
    seed: Option<u64>,
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<std::path::PathBuf>,
    /// Output format: json | csv
    #[arg(long, default_value = "json")]
    format: String,
    /// Rayon thread count (0 = library default); output is independent of it
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Validate built-in thresholds and exit 4 on violation
    #[arg(long, default_value_t = false)]
    check: bool,
}

struct Resolved {
    profile: RadialProfile,
    label: String,
    window: f64,
    seed: u64,
    noise: NoiseDistribution,
}

fn resolve(args: &CommonArgs) -> Result<Resolved, Error> {
    let kind = args.ensemble.trim().to_ascii_lowercase().replace('_', "-");
    let alpha = args.alpha;
    let a_or = |d: f64| alpha.unwrap_or(d);
    let need_alpha = || -> Result<f64, Error> {
        alpha.ok_or_else(|| Error::InvalidParameter(format!("--alpha required for {kind}")))
    };
    let (profile, default_window) = match kind.as_str() {
        "kac" => (RadialProfile::kac(), 2.0),
        "elliptic" => (RadialProfile::elliptic(need_alpha()?)?, 3.0),
        "flat" => (RadialProfile::flat(need_alpha()?, args.beta)?, 1.3),
        "hyperbolic" => (RadialProfile::hyperbolic(need_alpha()?)?, 0.9),
        "lo-poly" => (RadialProfile::lo_poly(need_alpha()?, args.beta)?, 1.0),
        "weyl" => (RadialProfile::lo_poly(a_or(0.5), args.beta)?, 1.0),
        "theta" => (RadialProfile::theta(need_alpha()?)?, 4.0),
        "three-circles" => (RadialProfile::three_circles(), 4.0),
        other => {
            return Err(Error::InvalidParameter(format!("unknown ensemble: {other}")))
        }
    };
    let seed = args
        .seed
        .or_else(|| {
            std::env::var("ZERO_ATLAS_SEED")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(DEFAULT_SEED);
    let window = args.window.unwrap_or(default_window);
    if profile.log_r0().is_finite() && window.ln() >= profile.log_r0() {
        return Err(Error::InvalidParameter(format!(
            "window {window} not below the convergence radius {}",
            profile.r0()
        )));
    }
    Ok(Resolved {
        label: profile.kind().label(),
        profile,
        window,
        seed,
        noise: NoiseDistribution::parse(&args.noise)?,
    })
}

/// s-grid covering the window, kept below log R0.
fn grid_range(profile: &RadialProfile, window: f64) -> (f64, f64) {
    let s_w = window.ln();
    let mut s_hi = s_w + 0.35;
    if profile.log_r0().is_finite() {
        s_hi = s_hi.min(profile.log_r0() - 0.05);
    }
    let s_lo = (s_w - 7.0).min(-6.0);
    (s_lo, s_hi)
}

fn limit_measure_for(profile: &RadialProfile, window: f64) -> Result<LimitMeasure, Error> {
    let (s_lo, s_hi) = grid_range(profile, window);
    LimitMeasure::from_conjugate(conjugate_analyzed(profile, s_lo, s_hi, 1e-3)?)
}

fn write_out(args: &CommonArgs, content: &str) -> Result<(), Error> {
    match &args.out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| Error::InvalidParameter(format!("cannot write {path:?}: {e}"))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn cmd_limit(args: &CommonArgs) -> Result<bool, Error> {
    let r = resolve(args)?;
    let lm = limit_measure_for(&r.profile, r.window)?;
    let steps = 64;
    let radii: Vec<f64> = (1..=steps)
        .map(|i| r.window * i as f64 / steps as f64)
        .collect();
    let densities: Vec<(f64, Option<f64>)> = radii
        .iter()
        .map(|&rad| {
            (
                rad,
                lm.density(Complex64::new(rad, 0.0)).ok(),
            )
        })
        .collect();
    let content = match args.format.as_str() {
        "json" => report::limit_to_json(&r.label, &lm, &radii, &densities)?,
        "csv" => {
            let mut s = String::from("r,mass,density\n");
            for (&rad, (_, d)) in radii.iter().zip(&densities) {
                s.push_str(&format!(
                    "{},{},{}\n",
                    report::fmt_f64(rad),
                    report::fmt_f64(lm.radial_cdf(rad)?),
                    d.map(report::fmt_f64).unwrap_or_else(|| "".into())
                ));
            }
            for a in lm.atoms() {
                s.push_str(&format!(
                    "# atom radius = {} mass = {}\n",
                    report::fmt_f64(a.radius),
                    report::fmt_f64(a.mass)
                ));
            }
            for g in lm.gaps() {
                s.push_str(&format!(
                    "# gap r_lo = {} r_hi = {}\n",
                    report::fmt_f64(g.r_lo),
                    report::fmt_f64(g.r_hi)
                ));
            }
            s
        }
        other => {
            return Err(Error::InvalidParameter(format!("unknown format: {other}")))
        }
    };
    write_out(args, &content)?;
    Ok(true)
}

fn cmd_zeros(args: &CommonArgs) -> Result<bool, Error> {
    let r = resolve(args)?;
    let sched = schedule_for_window(&r.profile, args.n, r.window, 1e-12)?;
    let inst = instantiate(&sched, r.noise, r.seed, r.window)?;
    let zs = find_roots(&inst)?;
    let ok = !args.check || zs.max_residual() <= 1e-10;
    write_out(args, &report::zeros_to_table(&zs))?;
    Ok(ok)
}

fn cmd_compare(args: &CommonArgs) -> Result<bool, Error> {
    let r = resolve(args)?;
    let lm = limit_measure_for(&r.profile, r.window)?;
    let sched = schedule_for_window(&r.profile, args.n, r.window, 1e-12)?;
    let probes: Vec<Complex64> = {
        // 8 radii x 3 angles inside the window, off atoms and the origin
        let mut v = Vec::new();
        'radii: for i in 1..=8 {
            let rad = r.window * i as f64 / 9.0;
            for a in lm.atoms() {
                if (rad - a.radius).abs() < 1e-3 {
                    continue 'radii;
                }
            }
            for j in 0..3 {
                let th = 2.0 * std::f64::consts::PI * (j as f64 + 0.37) / 3.0;
                v.push(Complex64::from_polar(rad, th));
            }
        }
        v
    };
    let cfg = CompareConfig {
        ensemble: r.label.clone(),
        schedule: sched,
        noise: r.noise,
        trials: args.trials,
        window: r.window,
        base_seed: r.seed,
        probes,
    };
    let rep = compare_report(&cfg, &lm)?;
    let ok = !args.check
        || (rep.errors.is_empty()
            && rep.aggregate.mean_ks_radial <= 0.1
            && rep.aggregate.mean_ks_angular <= 0.1);
    write_out(args, &report::comparison_to_json(&rep))?;
    Ok(ok)
}

fn cmd_potential(args: &CommonArgs) -> Result<bool, Error> {
    let r = resolve(args)?;
    let law = TruncatedLaw::new(&r.profile, args.kappa)?;
    let cert = law.flatness_certificate(100, 40)?;
    let ok = !args.check || (cert.max_dev_inside <= 1e-3 && cert.min_margin_outside >= -1e-3);
    write_out(args, &report::flatness_to_json(&r.label, &cert))?;
    Ok(ok)
}

fn cmd_conjugate(args: &CommonArgs) -> Result<bool, Error> {
    let r = resolve(args)?;
    let s_hi = if r.profile.log_r0().is_finite() {
        (r.profile.log_r0() - 0.1).min(3.0)
    } else {
        3.0
    };
    let cp = conjugate_analyzed(&r.profile, -3.0, s_hi, 1e-3)?;
    write_out(args, &report::conjugate_to_table(&cp))?;
    Ok(true)
}

fn main() {
    let cli = Cli::parse();
    let args = match &cli.command {
        Command::Limit(a)
        | Command::Zeros(a)
        | Command::Compare(a)
        | Command::Potential(a)
        | Command::Conjugate(a) => a.clone(),
    };
    if args.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(args.threads)
            .build_global()
            .ok();
    }
    let outcome = match &cli.command {
        Command::Limit(a) => cmd_limit(a),
        Command::Zeros(a) => cmd_zeros(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Potential(a) => cmd_potential(a),
        Command::Conjugate(a) => cmd_conjugate(a),
    };
    let code = match outcome {
        Ok(true) => 0,
        Ok(false) => 4,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                2
            } else {
                3
            }
        }
    };
    std::process::exit(code);
}
