//! Adaptive Gauss–Legendre panel quadrature for integrands that oscillate on
//! the local zero-spacing scale of Z, 2π / ln(t/2π).
//!
//! Panels are laid out left to right with widths capped by that scale, each
//! panel is integrated at `gl_order` and `2 * gl_order` nodes, and panels whose
//! disagreement exceeds their share of the tolerance are bisected. Panel values
//! are combined by a fixed balanced (pairwise) reduction over the panel index,
//! so results do not depend on how many threads evaluated the panels.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Panels below this count are evaluated on the calling thread.
const PARALLEL_MIN_PANELS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PanelPolicy {
    /// Gauss–Legendre nodes per panel for the low-order estimate.
    pub gl_order: usize,
    pub panels_per_oscillation: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for PanelPolicy {
    fn default() -> Self {
        Self {
            gl_order: 16,
            panels_per_oscillation: 4.0,
            rel_tol: 1e-8,
            max_panels: 10_000_000,
        }
    }
}

impl PanelPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.gl_order < 4 {
            return Err(Error::domain(format!("gl_order must be >= 4, got {}", self.gl_order)));
        }
        if !(self.panels_per_oscillation >= 1.0 && self.panels_per_oscillation.is_finite()) {
            return Err(Error::domain(format!(
                "panels_per_oscillation must be >= 1, got {}",
                self.panels_per_oscillation
            )));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::domain(format!("rel_tol must be in (0, 1), got {}", self.rel_tol)));
        }
        if self.max_panels == 0 {
            return Err(Error::domain("max_panels must be positive"));
        }
        Ok(())
    }

    pub fn fingerprint_fields(&self) -> String {
        format!(
            "policy:gl_order={};panels_per_oscillation={:e};rel_tol={:e}",
            self.gl_order, self.panels_per_oscillation, self.rel_tol
        )
    }

    /// Largest panel width allowed with its left end at `t`.
    pub fn panel_width(&self, t: f64) -> f64 {
        let w0 = oscillation_scale(t) / self.panels_per_oscillation;
        // the scale shrinks with t, so take it at the far end of a first-guess panel
        oscillation_scale(t + w0) / self.panels_per_oscillation
    }
}

/// Mean spacing of zeros of Z near height t, floored at t = 20.
pub fn oscillation_scale(t: f64) -> f64 {
    2.0 * PI / (t.abs().max(20.0) / (2.0 * PI)).ln()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub panels_used: usize,
    pub evaluations: usize,
}

/// Result of integrating a vector of functions over one shared panel set.
/// Error control is driven by component 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiResult<const N: usize> {
    pub values: [f64; N],
    pub error_estimate: f64,
    pub panels_used: usize,
    pub evaluations: usize,
}

/// Extra constraints on the panel layout.
#[derive(Debug, Clone, Default)]
pub struct PanelLayout {
    /// Additional cap on every panel width.
    pub max_width: Option<f64>,
    /// Points that must be panel boundaries.
    pub breakpoints: Vec<f64>,
}

/// Gauss–Legendre rule on [-1, 1].
#[derive(Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    fn compute(n: usize) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Apply the rule to `f` on `[a, b]`.
    pub fn apply<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}

/// P_n(x) and P_n'(x) by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Shared, lazily built Gauss–Legendre rule with `n` nodes.
pub fn gauss_legendre(n: usize) -> Arc<GaussLegendre> {
    static RULES: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
    let rules = RULES.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = rules.lock().expect("rule cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| Arc::new(GaussLegendre::compute(n)))
        .clone()
}

/// Sum of `value(i)` for `i in 0..len` by a fixed balanced tree.
pub fn pairwise_sum_by<F: Fn(usize) -> f64>(len: usize, value: F) -> f64 {
    fn go<F: Fn(usize) -> f64>(lo: usize, hi: usize, value: &F) -> f64 {
        let n = hi - lo;
        if n <= 8 {
            let mut acc = 0.0;
            for i in lo..hi {
                acc += value(i);
            }
            acc
        } else {
            let mid = lo + n / 2;
            go(lo, mid, value) + go(mid, hi, value)
        }
    }
    go(0, len, &value)
}

pub fn pairwise_sum(values: &[f64]) -> f64 {
    pairwise_sum_by(values.len(), |i| values[i])
}

#[derive(Debug, Clone, Copy)]
struct Panel<const N: usize> {
    a: f64,
    b: f64,
    values: [f64; N],
    error: f64,
}

fn eval_panel<const N: usize, F>(f: &F, a: f64, b: f64, lo: &GaussLegendre, hi: &GaussLegendre) -> Panel<N>
where
    F: Fn(f64) -> [f64; N],
{
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut low = 0.0;
    for (x, w) in lo.nodes.iter().zip(&lo.weights) {
        low += w * f(mid + half * x)[0];
    }
    let mut values = [0.0; N];
    for (x, w) in hi.nodes.iter().zip(&hi.weights) {
        let v = f(mid + half * x);
        for j in 0..N {
            values[j] += w * v[j];
        }
    }
    for v in &mut values {
        *v *= half;
    }
    Panel {
        a,
        b,
        values,
        error: (values[0] - low * half).abs(),
    }
}

fn eval_panels<const N: usize, F>(f: &F, bounds: &[(f64, f64)], lo: &GaussLegendre, hi: &GaussLegendre) -> Vec<Panel<N>>
where
    F: Fn(f64) -> [f64; N] + Sync,
{
    if bounds.len() < PARALLEL_MIN_PANELS {
        bounds.iter().map(|&(a, b)| eval_panel(f, a, b, lo, hi)).collect()
    } else {
        bounds.par_iter().map(|&(a, b)| eval_panel(f, a, b, lo, hi)).collect()
    }
}

/// Initial panel boundaries on `[a, b]`.
pub fn layout_panels(a: f64, b: f64, policy: &PanelPolicy, layout: &PanelLayout) -> Vec<(f64, f64)> {
    let mut stops: Vec<f64> = layout
        .breakpoints
        .iter()
        .copied()
        .filter(|&p| p > a && p < b)
        .collect();
    stops.sort_by(f64::total_cmp);
    stops.dedup();
    stops.push(b);

    let mut bounds = Vec::new();
    let mut left = a;
    for stop in stops {
        while left < stop {
            let mut width = policy.panel_width(left);
            if let Some(cap) = layout.max_width {
                width = width.min(cap);
            }
            let right = if left + width >= stop { stop } else { left + width };
            bounds.push((left, right));
            left = right;
        }
    }
    bounds
}

/// Integrate a vector-valued `f` over `[a, b]` on one shared adaptive panel set.
pub fn integrate_multi<const N: usize, F>(
    f: F,
    a: f64,
    b: f64,
    policy: &PanelPolicy,
    layout: &PanelLayout,
) -> Result<MultiResult<N>>
where
    F: Fn(f64) -> [f64; N] + Sync,
{
    policy.validate()?;
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::domain(format!("integration limits must be finite, got [{a}, {b}]")));
    }
    if a > b {
        return Err(Error::domain(format!("integration needs a <= b, got [{a}, {b}]")));
    }
    if N == 0 {
        return Err(Error::domain("integrand must have at least one component"));
    }
    if a == b {
        return Ok(MultiResult {
            values: [0.0; N],
            error_estimate: 0.0,
            panels_used: 1,
            evaluations: 1,
        });
    }

    let lo = gauss_legendre(policy.gl_order);
    let hi = gauss_legendre(2 * policy.gl_order);
    let per_panel = 3 * policy.gl_order;

    let bounds = layout_panels(a, b, policy, layout);
    let mut evaluations = bounds.len() * per_panel;
    let mut panels = eval_panels(&f, &bounds, &lo, &hi);
    let span = b - a;

    loop {
        let mass = pairwise_sum_by(panels.len(), |i| panels[i].values[0].abs());
        let error = pairwise_sum_by(panels.len(), |i| panels[i].error);
        let budget = policy.rel_tol * mass;
        if error <= budget {
            break;
        }
        let to_split: Vec<usize> = (0..panels.len())
            .filter(|&i| {
                let p = &panels[i];
                let width = p.b - p.a;
                p.error > budget * width / span && width > 8.0 * f64::EPSILON * p.a.abs().max(p.b.abs())
            })
            .collect();
        if to_split.is_empty() || panels.len() + to_split.len() > policy.max_panels {
            let values = sum_components(&panels);
            return Err(Error::Quadrature {
                a,
                b,
                value: values[0],
                estimate: error,
                panels: panels.len(),
            });
        }
        let halves: Vec<(f64, f64)> = to_split
            .iter()
            .flat_map(|&i| {
                let p = &panels[i];
                let m = 0.5 * (p.a + p.b);
                [(p.a, m), (m, p.b)]
            })
            .collect();
        evaluations += halves.len() * per_panel;
        let refined = eval_panels(&f, &halves, &lo, &hi);

        let mut next = Vec::with_capacity(panels.len() + to_split.len());
        let mut split_iter = to_split.iter().peekable();
        let mut refined_iter = refined.into_iter();
        for (i, p) in panels.into_iter().enumerate() {
            if split_iter.peek() == Some(&&i) {
                split_iter.next();
                next.push(refined_iter.next().expect("left half"));
                next.push(refined_iter.next().expect("right half"));
            } else {
                next.push(p);
            }
        }
        panels = next;
    }

    let error_estimate = pairwise_sum_by(panels.len(), |i| panels[i].error);
    Ok(MultiResult {
        values: sum_components(&panels),
        error_estimate,
        panels_used: panels.len(),
        evaluations,
    })
}

fn sum_components<const N: usize>(panels: &[Panel<N>]) -> [f64; N] {
    let mut out = [0.0; N];
    for (j, slot) in out.iter_mut().enumerate() {
        *slot = pairwise_sum_by(panels.len(), |i| panels[i].values[j]);
    }
    out
}

fn scalar(r: MultiResult<1>) -> QuadratureResult {
    QuadratureResult {
        value: r.values[0],
        error_estimate: r.error_estimate,
        panels_used: r.panels_used,
        evaluations: r.evaluations,
    }
}

/// ∫ₐᵇ f(t) dt.
pub fn integrate<F>(f: F, a: f64, b: f64, policy: &PanelPolicy) -> Result<QuadratureResult>
where
    F: Fn(f64) -> f64 + Sync,
{
    integrate_multi(|t| [f(t)], a, b, policy, &PanelLayout::default()).map(scalar)
}

/// ∫ₐᵇ f(t) dt with explicit layout constraints.
pub fn integrate_with_layout<F>(f: F, a: f64, b: f64, policy: &PanelPolicy, layout: &PanelLayout) -> Result<QuadratureResult>
where
    F: Fn(f64) -> f64 + Sync,
{
    integrate_multi(|t| [f(t)], a, b, policy, layout).map(scalar)
}

/// ∫ₐᵇ f(t) e^{-t/x} dt; panels are additionally capped at width x/8.
pub fn integrate_weighted<F>(f: F, x: f64, a: f64, b: f64, policy: &PanelPolicy) -> Result<QuadratureResult>
where
    F: Fn(f64) -> f64 + Sync,
{
    integrate_weighted_with_layout(f, x, a, b, policy, PanelLayout::default())
}

pub fn integrate_weighted_with_layout<F>(
    f: F,
    x: f64,
    a: f64,
    b: f64,
    policy: &PanelPolicy,
    mut layout: PanelLayout,
) -> Result<QuadratureResult>
where
    F: Fn(f64) -> f64 + Sync,
{
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::domain(format!("weight scale must be positive, got {x}")));
    }
    let cap = x / 8.0;
    layout.max_width = Some(layout.max_width.map_or(cap, |w| w.min(cap)));
    integrate_multi(|t| [f(t) * (-t / x).exp()], a, b, policy, &layout).map(scalar)
}
