mod common;

use std::f64::consts::{E, PI, SQRT_2};

use common::{ctx, ctx_with, rel, simpson};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zeta_ladder::quadrature::{integrate_weighted, PanelPolicy};
use zeta_ladder::weighted_moments::{MuFamily, WeightedMomentContext};
use zeta_ladder::Error;

fn central<F: Fn(f64) -> f64>(f: F, y: f64, h: f64) -> f64 {
    (f(y + h) - f(y - h)) / (2.0 * h)
}

#[test]
fn mu_closed_forms() {
    let d = MuFamily::default();
    assert!((d.mu(E).unwrap() - 4.0 * E).abs() < 1e-14);
    assert!((d.mu(100.0).unwrap() - 400.0 * 100f64.ln()).abs() < 1e-12);
    assert!((d.mu(100.0).unwrap() - 1842.07).abs() < 0.01);
    let sq = MuFamily::new(2.0, 1.0).unwrap();
    assert!((sq.mu(E).unwrap() - 4.0 * E * E).abs() < 1e-13);
    assert!(matches!(d.mu(1.9), Err(Error::Domain(_))));
    assert!(MuFamily::new(0.5, 1.0).is_err());
}

#[test]
fn mu_derivatives_closed_forms_and_differences() {
    let d = MuFamily::default();
    let (d1, d2) = d.mu_derivatives(E).unwrap();
    assert!((d1 - 8.0).abs() < 1e-14);
    assert!((d2 - 4.0 / E).abs() < 1e-15);
    for fam in [d, MuFamily::new(2.0, 1.0).unwrap(), MuFamily::new(1.0, 2.0).unwrap(), MuFamily::new(1.5, 1.7).unwrap()] {
        let (d1, d2) = fam.mu_derivatives(50.0).unwrap();
        let fd1 = central(|y| fam.mu(y).unwrap(), 50.0, 1e-5);
        assert!(rel(d1, fd1) <= 1e-8, "{fam:?}: {d1} vs {fd1}");
        let fd2 = central(|y| fam.mu_derivatives(y).unwrap().0, 50.0, 1e-5);
        assert!(rel(d2, fd2) <= 1e-7, "{fam:?}: {d2} vs {fd2}");
    }
}

#[test]
fn weighted_moment_examples() {
    let c = ctx();
    assert!(c.weighted_fourth_moment(10.0).unwrap() > 0.0);
    let w100 = c.weighted_fourth_moment(100.0).unwrap();
    assert!(c.weighted_fourth_moment(200.0).unwrap() > w100);

    let ev = c.evaluator();
    let upper = c.mu().mu(100.0).unwrap();
    let oracle = simpson(|t| ev.z4(t).unwrap() * (-t / 100.0).exp(), 0.0, upper, 1e-3);
    assert!(rel(w100, oracle) <= 1e-5, "{w100} vs {oracle}");
    // the stored cell moments and plain quadrature agree far below that
    assert!(rel(w100, c.weighted_fourth_moment_direct(100.0).unwrap()) <= 1e-12);
}

#[test]
fn laplace_moment_is_w_at_reciprocal() {
    let c = ctx();
    assert_eq!(c.laplace_fourth_moment(0.01).unwrap().to_bits(), c.weighted_fourth_moment(100.0).unwrap().to_bits());
    assert!(c.laplace_fourth_moment(0.0).is_err());
    assert!(c.laplace_fourth_moment(0.6).is_err());
}

#[test]
fn laplace_tail_bound_at_delta_001() {
    // ∫_U^{2U} Z⁴ e^{-δt} dt < 4/(eδ²) e^{-δU/2} with U = μ(1/δ)
    let c = ctx();
    let delta = 0.01;
    let u = c.mu().mu(1.0 / delta).unwrap();
    let ev = c.evaluator();
    let tail = integrate_weighted(|t| ev.z4(t).unwrap(), 1.0 / delta, u, 2.0 * u, &PanelPolicy::default()).unwrap().value;
    let bound = 4.0 / (E * delta * delta) * (-delta * u / 2.0).exp();
    assert!(tail > 0.0 && tail <= bound, "tail {tail:e}, bound {bound:e}");
    // and the truncation rule's target 4/(eδ²) e^{-δU/2} <= 1/√δ
    assert!(bound <= 1.0 / delta.sqrt());
}

#[test]
fn laplace_leading_order_at_delta_0001() {
    let v = ctx().laplace_fourth_moment(1e-3).unwrap();
    let main = 1e3 * 1e3f64.ln().powi(4) / (2.0 * PI * PI);
    let ratio = v / main;
    assert!((0.5..=2.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn phi2_prime_examples() {
    let c = ctx();
    assert!(c.phi2_prime(100.0).unwrap() > 0.0);
    let fd = central(|y| c.weighted_fourth_moment(y).unwrap(), 100.0, 1e-3);
    assert!(rel(c.phi2_prime(100.0).unwrap(), fd) <= 1e-4);
}

#[test]
fn phi2_prime_leading_order() {
    let c = ctx();
    // against d/dy of the main term, A(ln⁴y + 4 ln³y); the bare A ln⁴y leaves out
    // a 4/ln y correction worth 58% at y = 10³
    let ratio = |y: f64| {
        let l = y.ln();
        let p = c.phi2_prime(y).unwrap();
        (p / ((l.powi(4) + 4.0 * l.powi(3)) / (2.0 * PI * PI)), p / (l.powi(4) / (2.0 * PI * PI)))
    };
    let (at_1e3, bare_1e3) = ratio(1e3);
    assert!((0.5..=2.0).contains(&at_1e3), "ratio {at_1e3}");
    let (at_1e4, bare_1e4) = ratio(1e4);
    assert!((0.5..=2.0).contains(&at_1e4), "ratio {at_1e4}");
    // the bare ratio falls toward 1 as y grows
    assert!(bare_1e4 < bare_1e3, "{bare_1e4} vs {bare_1e3}");
}

/// Golden-section search for an extremum of `f` on [a, b].
fn golden<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, minimize: bool) -> f64 {
    let g = |x: f64| if minimize { f(x) } else { -f(x) };
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = b - r * (b - a);
        let d = a + r * (b - a);
        if g(c) < g(d) {
            b = d;
        } else {
            a = c;
        }
    }
    f(0.5 * (a + b))
}

#[test]
fn g1_extrema_fixture() {
    let y = 100.0;
    let g1 = |t: f64| (t * t / y - 2.0 * t) * (-t / y).exp();
    let min = golden(g1, 0.0, 2.0 * y, true);
    let max = golden(g1, 2.0 * y, 10.0 * y, false);
    let want_min = -2.0 * (SQRT_2 - 1.0) * (-2.0 + SQRT_2).exp() * y;
    let want_max = 2.0 * (SQRT_2 + 1.0) * (-2.0 - SQRT_2).exp() * y;
    assert!(rel(min, want_min) <= 1e-12, "{min} vs {want_min}");
    assert!(rel(max, want_max) <= 1e-12, "{max} vs {want_max}");
    assert!((g1((2.0 - SQRT_2) * y) - want_min).abs() <= 1e-12 * want_min.abs());
    assert!((g1((2.0 + SQRT_2) * y) - want_max).abs() <= 1e-12 * want_max);
}

#[test]
fn phi2_second_examples() {
    let c = ctx();
    let s = c.phi2_second(100.0).unwrap();
    assert_eq!(s.value, s.j + s.q);
    let fd = central(|y| c.phi2_prime(y).unwrap(), 100.0, 1e-2);
    assert!(rel(s.value, fd) <= 1e-3, "{} vs {fd}", s.value);

    let scaled = |y: f64| c.phi2_second(y).unwrap().value.abs() * y / (y.ln().powi(4) * y.ln().ln().powi(2));
    let (a, b) = (scaled(1e3), scaled(1e4));
    assert!(a.is_finite() && b.is_finite());
    assert!(b <= 10.0 * a, "{b} vs {a}");
}

fn assert_monotone(c: &WeightedMomentContext) {
    let mut prev = 0.0;
    for k in 1..=100 {
        let w = c.weighted_fourth_moment(10.0 * k as f64).unwrap();
        assert!(w > prev, "W not increasing at y = {}", 10 * k);
        prev = w;
    }
}

fn assert_derivative_chain(c: &WeightedMomentContext, seed: u64, points: usize, hi: f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..points {
        let y = rng.gen_range(30.0..hi);
        let p = c.phi2_prime(y).unwrap();
        let fd = central(|v| c.weighted_fourth_moment(v).unwrap(), y, 1e-3);
        assert!(rel(p, fd) <= 1e-3, "{:?} Φ₂′({y}) = {p} vs {fd}", c.mu());
        let s = c.phi2_second(y).unwrap().value;
        let fd = central(|v| c.phi2_prime(v).unwrap(), y, 1e-2);
        assert!(rel(s, fd) <= 1e-3, "{:?} Φ₂″({y}) = {s} vs {fd}", c.mu());
    }
}

fn assert_truncation_sound(c: &WeightedMomentContext, ys: &[f64]) {
    for &y in ys {
        let w = c.weighted_fourth_moment(y).unwrap();
        let doubled = c.weighted_integral(y, [1.0, 0.0, 0.0], 2.0 * c.upper_limit(y).unwrap()).unwrap();
        // the truncation rule guarantees an absolute tail of at most √y
        assert!(doubled - w <= y.sqrt(), "y = {y}: {w} vs {doubled}");
        // the relative change falls like y⁻⁴ and is below 1e-6 from y ≈ 55 on
        if y >= 60.0 {
            assert!(rel(doubled, w) <= 1e-6, "y = {y}: {w} vs {doubled}");
        }
    }
}

#[test]
fn monotone_on_grid() {
    assert_monotone(&ctx());
}

#[test]
fn derivative_chain_at_random_points() {
    assert_derivative_chain(&ctx(), 17, 20, 3000.0);
}

#[test]
fn truncation_is_sound() {
    assert_truncation_sound(&ctx(), &[50.0, 60.0, 80.0, 200.0, 1000.0]);
}

#[test]
fn steeper_mu_families_keep_the_properties() {
    for (w1, w2) in [(2.0, 1.0), (1.0, 2.0), (1.3, 1.6)] {
        let c = ctx_with(w1, w2);
        assert_monotone(&c);
        assert_derivative_chain(&c, 5, 5, 1000.0);
        assert_truncation_sound(&c, &[50.0, 60.0, 300.0]);
        assert!(c.phi2_prime(100.0).unwrap() > 0.0);
    }
}
