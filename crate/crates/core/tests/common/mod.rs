//! Test-only oracles, written independently of the library code paths.
#![allow(dead_code)]

use std::f64::consts::{PI, TAU};
use std::path::PathBuf;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use zeta_ladder::moments::{table_fingerprint, Moments};
use zeta_ladder::quadrature::PanelPolicy;
use zeta_ladder::weighted_moments::{MuFamily, WeightedMomentContext};
use zeta_ladder::ZEvaluator;

// Minimal double-double pieces: (hi, lo) pairs.
type Dd = (f64, f64);

fn dd_add(a: Dd, b: Dd) -> Dd {
    let s = a.0 + b.0;
    let v = s - a.0;
    let e = (a.0 - (s - v)) + (b.0 - v) + a.1 + b.1;
    let hi = s + e;
    (hi, e - (hi - s))
}

fn dd_mul_f64(a: Dd, x: f64) -> Dd {
    let p = a.0 * x;
    let e = a.0.mul_add(x, -p) + a.1 * x;
    let hi = p + e;
    (hi, e - (hi - p))
}

fn dd_mul(a: Dd, b: Dd) -> Dd {
    let p = a.0 * b.0;
    let e = a.0.mul_add(b.0, -p) + a.0 * b.1 + a.1 * b.0;
    let hi = p + e;
    (hi, e - (hi - p))
}

fn dd_div_f64(a: Dd, d: f64) -> Dd {
    let hi = a.0 / d;
    let r = (-hi).mul_add(d, a.0);
    (hi, (r + a.1) / d)
}

fn dd_recip(d: f64) -> Dd {
    let hi = 1.0 / d;
    (hi, (-hi).mul_add(d, 1.0) / d)
}

/// ln m for m = 0..=n (index 0 unused) as double-doubles, from
/// ln m = ln(m − 1) + 2 atanh(1/(2m − 1)).
fn ln_table(n: usize) -> Vec<Dd> {
    let mut out = vec![(0.0, 0.0); n + 1];
    for m in 2..=n {
        let d = (2 * m - 1) as f64;
        let u = dd_recip(d);
        let u2 = dd_recip(d * d); // d² is exact for these sizes
        let mut power = u;
        let mut atanh = u;
        let mut j = 1.0;
        loop {
            power = dd_mul(power, u2);
            j += 2.0;
            let term = dd_div_f64(power, j);
            atanh = dd_add(atanh, term);
            if term.0.abs() < 1e-36 {
                break;
            }
        }
        out[m] = dd_add(out[m - 1], dd_mul_f64(atanh, 2.0));
    }
    out
}

const TWO_PI_HI: f64 = TAU;
const TWO_PI_LO: f64 = 2.4492935982947064e-16;

/// (cos, sin) of t·l for a double-double l, reduced modulo 2π in extended precision.
fn phase_cos_sin(t: f64, l: Dd) -> (f64, f64) {
    let p = dd_mul_f64(l, t);
    let k = (p.0 / TWO_PI_HI).round();
    let q = k * TWO_PI_HI;
    let q_err = k.mul_add(TWO_PI_HI, -q);
    let r = (p.0 - q) - q_err - k * TWO_PI_LO + p.1;
    let (s, c) = r.sin_cos();
    (c, s)
}

/// ζ(1/2 + it) from Borwein's accelerated alternating series.
///
/// The weights (d_n − d_k)/d_n are built in log space from the term ratios of
/// d_k, so the e^{πt/2} growth of d_n never materializes. Phases t ln m are
/// carried in double-double.
pub fn zeta_alternating(t: f64) -> Complex64 {
    let n = ((PI * t / 2.0 + (1e14 * (1.0 + t)).ln()) / (3.0 + 8f64.sqrt()).ln()).ceil() as usize + 10;
    let nf = n as f64;
    let mut log_terms = Vec::with_capacity(n + 1);
    let mut acc = 0.0; // log of term i, term 0 = 1
    for i in 0..=n {
        log_terms.push(acc);
        let fi = i as f64;
        acc += ((nf + fi) * (nf - fi) * 4.0 / ((2.0 * fi + 1.0) * (2.0 * fi + 2.0))).ln();
    }
    let peak = log_terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_terms.iter().map(|l| (l - peak).exp()).collect();
    // suffix[k] = Σ_{i>k} w_i
    let mut suffix = vec![0.0; n + 1];
    for k in (0..n).rev() {
        suffix[k] = suffix[k + 1] + w[k + 1];
    }
    let total = suffix[0] + w[0];
    let logs = ln_table(n.max(2));
    let mut sum = Complex64::new(0.0, 0.0);
    for (k, &tail) in suffix.iter().take(n).enumerate() {
        let c = tail / total;
        let m = k + 1;
        let (co, s) = phase_cos_sin(t, logs[m]);
        let term = Complex64::new(co, -s) * (c / (m as f64).sqrt());
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    // 1 − 2^{1−s} = 1 − √2 e^{−it ln 2}
    let (co, s) = phase_cos_sin(t, logs[2]);
    sum / (Complex64::new(1.0, 0.0) - Complex64::new(co, -s) * 2f64.sqrt())
}

/// ln Γ(z) for Re z > 0: shift by 8, then Stirling with eight Bernoulli terms.
pub fn ln_gamma_oracle(z: Complex64) -> Complex64 {
    let mut shift = Complex64::new(0.0, 0.0);
    let mut w = z;
    for _ in 0..8 {
        shift += w.ln();
        w += 1.0;
    }
    let b = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360360.0,
        1.0 / 156.0,
        -3617.0 / 122400.0,
    ];
    let inv = 1.0 / w;
    let inv2 = inv * inv;
    let mut series = Complex64::new(0.0, 0.0);
    let mut p = inv;
    for c in b {
        series += p * c;
        p *= inv2;
    }
    (w - 0.5) * w.ln() - w + 0.5 * (2.0 * PI).ln() + series - shift
}

pub fn theta_oracle(t: f64) -> f64 {
    ln_gamma_oracle(Complex64::new(0.25, t / 2.0)).im - t / 2.0 * PI.ln()
}

/// Z(t) = Re(e^{iθ} ζ(1/2 + it)) from the oracles above.
pub fn z_oracle(t: f64) -> f64 {
    let r = Complex64::from_polar(1.0, theta_oracle(t)) * zeta_alternating(t);
    r.re
}

/// Composite Simpson rule with step close to `h`.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, h: f64) -> f64 {
    let mut n = ((b - a) / h).ceil() as usize;
    if n % 2 == 1 {
        n += 1;
    }
    let step = (b - a) / n as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for i in 1..n {
        let v = f(a + i as f64 * step);
        if i % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    step / 3.0 * (f(a) + f(b) + 4.0 * odd + 2.0 * even)
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Where the default-configuration moment table lives between test runs.
pub fn shared_cache_path() -> PathBuf {
    let fp = table_fingerprint(&ZEvaluator::default(), &PanelPolicy::default(), 1.0);
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(format!("moments-{fp}.csv"))
}

/// Moment table persisted under the cargo test tmp dir, shared per test binary.
pub fn shared_moments() -> Arc<Moments> {
    static SHARED: OnceLock<Arc<Moments>> = OnceLock::new();
    SHARED
        .get_or_init(|| {
            let ev = Arc::new(ZEvaluator::default());
            let m = Moments::with_cache_file(ev, PanelPolicy::default(), shared_cache_path());
            Arc::new(m.expect("shared moment table"))
        })
        .clone()
}

pub fn ctx() -> WeightedMomentContext {
    WeightedMomentContext::new(MuFamily::default(), shared_moments())
}

pub fn ctx_with(omega1: f64, omega2: f64) -> WeightedMomentContext {
    WeightedMomentContext::new(MuFamily::new(omega1, omega2).unwrap(), shared_moments())
}
