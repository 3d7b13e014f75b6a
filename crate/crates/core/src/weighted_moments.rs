//! Exponentially weighted fourth moments and the derivatives of Φ₂.
//!
//! W(x) = ∫₀^{μ(x)} Z⁴(t) e^{-t/x} dt, Φ₂′ = dW/dx and Φ₂″ = J + Q.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::moments::{Moments, CELL_ORDER};
use crate::quadrature::{integrate_multi, PanelLayout, PanelPolicy};
use crate::zeta::ZEvaluator;

/// Below this scale the weight varies too fast across a unit cell for the
/// stored power moments, and integrals go straight to quadrature.
pub const CELL_MIN_SCALE: f64 = 20.0;
/// Integration stops at min(μ(x), TAIL_CUT·x). Beyond it e^{-t/x} < e^{-60}
/// and the remaining mass sits far below binary64 resolution of W.
pub const TAIL_CUT: f64 = 60.0;
/// Central-difference step for Z′ in the boundary terms of Φ₂″.
pub const Z_PRIME_STEP: f64 = 1e-4;
/// Boundary weights below this are evaluated without the accuracy gate.
const NEGLIGIBLE_WEIGHT: f64 = 1e-30;

/// μ(y) = 4 y^{ω₁} ln^{ω₂} y on y ≥ 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuFamily {
    omega1: f64,
    omega2: f64,
}

impl Default for MuFamily {
    fn default() -> Self {
        Self {
            omega1: 1.0,
            omega2: 1.0,
        }
    }
}

impl MuFamily {
    pub fn new(omega1: f64, omega2: f64) -> Result<Self> {
        if !(omega1.is_finite() && omega1 >= 1.0 && omega2.is_finite() && omega2 >= 1.0) {
            return Err(Error::domain(format!(
                "mu family needs omega1, omega2 >= 1, got ({omega1}, {omega2})"
            )));
        }
        Ok(Self { omega1, omega2 })
    }

    pub fn omega1(&self) -> f64 {
        self.omega1
    }

    pub fn omega2(&self) -> f64 {
        self.omega2
    }

    fn check(y: f64) -> Result<()> {
        if y.is_finite() && y >= 2.0 {
            Ok(())
        } else {
            Err(Error::domain(format!("mu is defined for y >= 2, got {y}")))
        }
    }

    pub fn mu(&self, y: f64) -> Result<f64> {
        Self::check(y)?;
        Ok(4.0 * y.powf(self.omega1) * y.ln().powf(self.omega2))
    }

    /// (μ′(y), μ″(y)).
    pub fn mu_derivatives(&self, y: f64) -> Result<(f64, f64)> {
        Self::check(y)?;
        let (w1, w2) = (self.omega1, self.omega2);
        let l = y.ln();
        let inner = w1 * l + w2;
        let d1 = 4.0 * y.powf(w1 - 1.0) * l.powf(w2 - 1.0) * inner;
        let d2 = 4.0
            * y.powf(w1 - 2.0)
            * l.powf(w2 - 2.0)
            * ((w1 - 1.0) * l * inner + (w2 - 1.0) * inner + w1 * l);
        Ok((d1, d2))
    }
}

/// Φ₂″(y) with its two parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phi2Second {
    pub value: f64,
    /// Weighted integral part.
    pub j: f64,
    /// Closed-form boundary part.
    pub q: f64,
}

/// The pairing of a μ-family with a fourth-moment table.
#[derive(Debug, Clone)]
pub struct WeightedMomentContext {
    mu: MuFamily,
    moments: Arc<Moments>,
}

impl WeightedMomentContext {
    pub fn new(mu: MuFamily, moments: Arc<Moments>) -> Self {
        Self { mu, moments }
    }

    pub fn mu(&self) -> &MuFamily {
        &self.mu
    }

    pub fn moments(&self) -> &Arc<Moments> {
        &self.moments
    }

    pub fn evaluator(&self) -> &ZEvaluator {
        self.moments.evaluator()
    }

    pub fn policy(&self) -> &PanelPolicy {
        self.moments.policy()
    }

    /// Upper integration limit actually used for scale `x`.
    pub fn upper_limit(&self, x: f64) -> Result<f64> {
        Ok(self.mu.mu(x)?.min(TAIL_CUT * x))
    }

    /// ∫₀^{upper} Z⁴(t) p(t) e^{-t/x} dt for p(t) = p₀ + p₁t + p₂t².
    pub fn weighted_integral(&self, x: f64, poly: [f64; 3], upper: f64) -> Result<f64> {
        if !(x.is_finite() && x > 0.0) {
            return Err(Error::domain(format!("weight scale must be positive, got {x}")));
        }
        if !(upper.is_finite() && upper >= 0.0) {
            return Err(Error::domain(format!("upper limit must be finite and >= 0, got {upper}")));
        }
        let ev = self.evaluator();
        ev.check_range(0.0, upper)?;
        if x < CELL_MIN_SCALE {
            return self.weighted_quadrature(x, poly, 0.0, upper);
        }
        let table = self.moments.ensure(upper)?;
        let full = ((upper / table.dt()).floor() as usize).min(table.cells_covered());
        let cells = table.contract_cells(0..full, |c| weight_taylor(x, poly, c));
        let rest = self.weighted_quadrature(x, poly, full as f64 * table.dt(), upper)?;
        Ok(cells + rest)
    }

    fn weighted_quadrature(&self, x: f64, poly: [f64; 3], a: f64, b: f64) -> Result<f64> {
        let ev = self.evaluator();
        let mut layout = PanelLayout {
            max_width: Some(x / 8.0),
            breakpoints: Vec::new(),
        };
        layout.breakpoints.extend(poly_roots(poly));
        let p = |t: f64| poly[0] + t * (poly[1] + t * poly[2]);
        let r = integrate_multi(
            |t| [ev.z4_unchecked(t) * p(t) * (-t / x).exp()],
            a,
            b,
            self.policy(),
            &layout,
        )?;
        Ok(r.values[0])
    }

    /// W(x), the left side of the ladder equation.
    pub fn weighted_fourth_moment(&self, x: f64) -> Result<f64> {
        MuFamily::check(x)?;
        self.weighted_integral(x, [1.0, 0.0, 0.0], self.upper_limit(x)?)
    }

    /// W(x) by a single adaptive quadrature over the full [0, μ(x)],
    /// bypassing the stored cell moments and the tail cut.
    pub fn weighted_fourth_moment_direct(&self, x: f64) -> Result<f64> {
        let u = self.mu.mu(x)?;
        let ev = self.evaluator();
        ev.check_range(0.0, u)?;
        let r = crate::quadrature::integrate_weighted(|t| ev.z4_unchecked(t), x, 0.0, u, self.policy())?;
        Ok(r.value)
    }

    /// ∫₀^{μ(1/δ)} Z⁴(t) e^{-δt} dt.
    pub fn laplace_fourth_moment(&self, delta: f64) -> Result<f64> {
        if !(delta > 0.0 && delta <= 0.5) {
            return Err(Error::domain(format!("laplace moment needs 0 < delta <= 1/2, got {delta}")));
        }
        self.weighted_fourth_moment(1.0 / delta)
    }

    /// Z(μ) and the weight e^{-μ/y} for the boundary terms.
    fn boundary_z(&self, mu: f64, y: f64) -> Result<(f64, f64)> {
        let weight = (-mu / y).exp();
        let ev = self.evaluator();
        let z = if weight < NEGLIGIBLE_WEIGHT {
            ev.z_unchecked(mu)
        } else {
            ev.hardy_z(mu)?
        };
        Ok((z, weight))
    }

    /// Φ₂′(y) = y⁻² ∫₀^{μ(y)} t Z⁴ e^{-t/y} dt + Z⁴(μ(y)) e^{-μ(y)/y} μ′(y).
    pub fn phi2_prime(&self, y: f64) -> Result<f64> {
        Ok(self.phi2_prime_integral(y)? + self.phi2_prime_boundary(y)?)
    }

    /// The integral part of Φ₂′ alone.
    pub fn phi2_prime_integral(&self, y: f64) -> Result<f64> {
        let u = self.upper_limit(y)?;
        Ok(self.weighted_integral(y, [0.0, 1.0, 0.0], u)? / (y * y))
    }

    /// The boundary part of Φ₂′ alone.
    pub fn phi2_prime_boundary(&self, y: f64) -> Result<f64> {
        let mu = self.mu.mu(y)?;
        let (d1, _) = self.mu.mu_derivatives(y)?;
        let (z, weight) = self.boundary_z(mu, y)?;
        Ok(z.powi(4) * weight * d1)
    }

    /// Φ₂″(y) = J + Q.
    pub fn phi2_second(&self, y: f64) -> Result<Phi2Second> {
        let u = self.upper_limit(y)?;
        let j = self.weighted_integral(y, [0.0, -2.0, 1.0 / y], u)? / (y * y * y);
        let q = self.phi2_second_boundary(y)?;
        Ok(Phi2Second { value: j + q, j, q })
    }

    /// Q(y) = e^{-μ/y}[2μμ′Z⁴/y² + 4μ′²Z³Z′ − μ′²Z⁴/y + μ″Z⁴], Z at μ(y).
    pub fn phi2_second_boundary(&self, y: f64) -> Result<f64> {
        let mu = self.mu.mu(y)?;
        let (d1, d2) = self.mu.mu_derivatives(y)?;
        let (z, weight) = self.boundary_z(mu, y)?;
        let ev = self.evaluator();
        let h = Z_PRIME_STEP;
        let zp = (ev.z_unchecked(mu + h) - ev.z_unchecked(mu - h)) / (2.0 * h);
        let z4 = z.powi(4);
        let bracket = 2.0 * mu * d1 * z4 / (y * y) + 4.0 * d1 * d1 * z.powi(3) * zp - d1 * d1 * z4 / y + d2 * z4;
        Ok(weight * bracket)
    }
}

/// Taylor coefficients in s = t − c of p(t) e^{-t/x}, up to s^{CELL_ORDER−1}.
fn weight_taylor(x: f64, poly: [f64; 3], c: f64) -> [f64; CELL_ORDER] {
    let q0 = poly[0] + c * (poly[1] + c * poly[2]);
    let q1 = poly[1] + 2.0 * c * poly[2];
    let q2 = poly[2];
    let mut a = [0.0; CELL_ORDER];
    a[0] = 1.0;
    for j in 1..CELL_ORDER {
        a[j] = a[j - 1] * (-1.0 / x) / j as f64;
    }
    let scale = (-c / x).exp();
    let mut g = [0.0; CELL_ORDER];
    for j in 0..CELL_ORDER {
        let mut v = q0 * a[j];
        if j >= 1 {
            v += q1 * a[j - 1];
        }
        if j >= 2 {
            v += q2 * a[j - 2];
        }
        g[j] = scale * v;
    }
    g
}

/// Positive real roots of a polynomial of degree ≤ 2 (panel breakpoints).
fn poly_roots(p: [f64; 3]) -> Vec<f64> {
    let [c, b, a] = p;
    let mut roots = Vec::new();
    if a != 0.0 {
        let disc = b * b - 4.0 * a * c;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            roots.push((-b + sq) / (2.0 * a));
            roots.push((-b - sq) / (2.0 * a));
        }
    } else if b != 0.0 {
        roots.push(-c / b);
    }
    roots.retain(|r| r.is_finite() && *r > 0.0);
    roots
}
