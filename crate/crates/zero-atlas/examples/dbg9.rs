use num_complex::Complex64;
use zero_atlas::sampler::{instantiate, NoiseDistribution};
use zero_atlas::schedule::{schedule_for_window, RadialProfile};

fn initial_guesses(coeffs: &[Complex64]) -> Vec<Complex64> {
    let pts: Vec<(f64, f64)> = coeffs.iter().enumerate()
        .filter(|(_, c)| c.norm_sqr() > 0.0)
        .map(|(j, c)| (j as f64, c.norm().ln())).collect();
    let mut hull: Vec<usize> = Vec::new();
    for i in 0..pts.len() {
        while hull.len() >= 2 {
            let a = pts[hull[hull.len() - 2]];
            let b = pts[hull[hull.len() - 1]];
            let c = pts[i];
            let cross = (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
            if cross >= 0.0 { hull.pop(); } else { break; }
        }
        hull.push(i);
    }
    let mut guesses = Vec::new();
    let golden = 0.618_033_988_749_894_9_f64;
    for (si, w) in hull.windows(2).enumerate() {
        let a = pts[w[0]]; let b = pts[w[1]];
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

fn main() {
    let p = RadialProfile::flat(1.0, 0.0).unwrap();
    let sched = schedule_for_window(&p, 1, 50.0, 1e-12).unwrap();
    let seed = (0x5EEDu64 ^ 0x800) ^ 9;
    let inst = instantiate(&sched, NoiseDistribution::ComplexGaussian, seed, 50.0).unwrap();
    let top = inst.degree();
    let logs: Vec<f64> = (0..=top).map(|k| inst.term_log_mag(k)).collect();
    let d = top;
    let log_c = (logs[0] - logs[d]) / d as f64;
    let mut shifted: Vec<f64> = (0..=d).map(|j| logs[j] + j as f64 * log_c).collect();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in &shifted { lo = lo.min(v); hi = hi.max(v); }
    let c0 = 0.5 * (lo + hi);
    for v in &mut shifted { *v -= c0; }
    let coeffs: Vec<Complex64> = (0..=d)
        .map(|j| Complex64::from_polar(shifted[j].exp(), inst.term_phase(j)))
        .collect();
    let mut w = initial_guesses(&coeffs);
    let radius_scale = w.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    println!("d={d} log_c={log_c:.3} rs={radius_scale:.3}");
    for sweep in 0..520 {
        let mut worst = 0.0f64; let mut wi_idx = 0usize; 
        let mut wstep2 = 0.0;
        for i in 0..d {
            let wi = w[i];
            let aw = wi.norm();
            let mut pv = coeffs[d];
            let mut dp = Complex64::new(0.0, 0.0);
            let mut asum = coeffs[d].norm();
            for j in (0..d).rev() {
                dp = dp * wi + pv;
                pv = pv * wi + coeffs[j];
                asum = asum * aw + coeffs[j].norm();
            }
            if !pv.re.is_finite() || !pv.im.is_finite() { if sweep > 100 && sweep % 50 == 0 { println!("  overflow at i={i} |w|={:.3}", wi.norm()); } w[i] = wi * 0.5; worst = f64::INFINITY; continue; }
            if pv.norm_sqr() == 0.0 { continue; }
            if dp.norm_sqr() == 0.0 { continue; }
            let newton = pv / dp;
            let mut rep = Complex64::new(0.0, 0.0);
            for j in 0..d { if j != i { rep += (wi - w[j]).inv(); } }
            let denom = Complex64::new(1.0, 0.0) - newton * rep;
            let step = if denom.norm_sqr() > f64::MIN_POSITIVE { newton / denom } else { newton };
            let next = wi - step;
            if !next.re.is_finite() || !next.im.is_finite() { if sweep > 100 && sweep % 50 == 0 { println!("  bad-next at i={i} |w|={:.3}", wi.norm()); } w[i] = wi * 0.5; worst = f64::INFINITY; continue; }
            w[i] = next;
            let floor = 4.0 * f64::EPSILON * asum / dp.norm();
            let allow = (1e-13 * (aw + 1e-3 * radius_scale)).max(floor);
            let ratio = step.norm() / allow;
            if ratio > worst { worst = ratio; wi_idx = i; wstep2 = step.norm(); }
        }
        let _ = wstep2;
        if sweep % 50 == 0 || worst <= 1.0 {
            println!("sweep {sweep}: worst {worst:.3e} at i={wi_idx} |w|={:.4}", w[wi_idx].norm());
        }
        if worst <= 1.0 { break; }
    }
}
