//! The ladder φ₂(T): the solution x of W(x) = I(T), its inverse M₂ and
//! derived quantities.

use crate::cheb::Chebyshev;
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use crate::roots::{brent, RootOptions};
use crate::weighted_moments::WeightedMomentContext;

pub const DEFAULT_TOL: f64 = 1e-9;
/// Lowest height accepted by the solvers.
pub const LADDER_FLOOR: f64 = 100.0;
const MAX_ITER: usize = 200;
/// Relative truncation target for the surrogates of W and Φ₂′.
const SURROGATE_TOL: f64 = 1e-12;
const SURROGATE_MAX_NODES: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderPoint {
    pub t: f64,
    pub phi2: f64,
    /// |W(φ₂) − I(T)| / I(T).
    pub residual: f64,
    pub iterations: usize,
    /// (4/5)T < φ₂ < (5/4)T.
    pub within_bracket: bool,
}

impl LadderPoint {
    /// |φ₂ − T| ≤ T/4.
    pub fn within_quarter(&self) -> bool {
        (self.phi2 - self.t).abs() <= self.t / 4.0
    }
}

/// M₂(y): the height T with I(T) = W(y).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversePoint {
    pub y: f64,
    pub t: f64,
    /// |I(T) − W(y)| / W(y).
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReverseInterval {
    pub t: f64,
    pub u: f64,
    pub t_ring: f64,
    pub tu_ring: f64,
    pub residual_t: f64,
    pub residual_tu: f64,
}

pub fn bracket_holds(t: f64, phi2: f64) -> bool {
    0.8 * t < phi2 && phi2 < 1.25 * t
}

fn check_floor(what: &str, t: f64) -> Result<()> {
    if t.is_finite() && t >= LADDER_FLOOR {
        Ok(())
    } else {
        Err(Error::domain(format!("{what} needs a height >= {LADDER_FLOOR}, got {t}")))
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("tolerance must lie in (0, 1), got {tol}")))
    }
}

fn root_options() -> RootOptions {
    // run to bracket collapse; `tol` is checked on the result
    RootOptions {
        ftol: 0.0,
        xtol: 0.0,
        max_iter: MAX_ITER,
    }
}

/// φ₂(T) by bracketed refinement of x ↦ W(x) − I(T), warm-started at x = T.
///
/// The bracket grows from T towards T/2 or 2T only as far as needed.
pub fn solve_phi2(t: f64, ctx: &WeightedMomentContext, tol: f64) -> Result<LadderPoint> {
    check_floor("solve_phi2", t)?;
    check_tol(tol)?;
    let target = ctx.moments().fourth_moment(t)?;
    let f = |x: f64| Ok(ctx.weighted_fourth_moment(x)? - target);

    let f0 = f(t)?;
    let steps: [f64; 3] = if f0 > 0.0 { [0.8, 0.65, 0.5] } else { [1.25, 1.6, 2.0] };
    let mut far = (t, f0);
    for s in steps {
        let x = s * t;
        far = (x, f(x)?);
        if far.1.signum() != f0.signum() || far.1 == 0.0 {
            break;
        }
    }
    let (a, fa, b, fb) = if far.0 < t { (far.0, far.1, t, f0) } else { (t, f0, far.0, far.1) };
    let root = brent(f, a, b, fa, fb, root_options())?;
    let residual = root.fx.abs() / target;
    if residual > tol {
        return Err(Error::NoConvergence {
            what: "ladder solve",
            iterations: root.iterations,
            residual,
        });
    }
    Ok(LadderPoint {
        t,
        phi2: root.x,
        residual,
        iterations: root.iterations,
        within_bracket: bracket_holds(t, root.x),
    })
}

/// M₂(y) by bracketed refinement of T ↦ I(T) − W(y) on [y/2, 2y].
///
/// Accepts any y in the domain of W (y >= 2), since φ₂ maps the floor
/// T = 100 below 100. The checkpoint table narrows the bracket to one cell
/// before refining.
pub fn inverse_ladder(y: f64, ctx: &WeightedMomentContext, tol: f64) -> Result<InversePoint> {
    check_tol(tol)?;
    let target = ctx.weighted_fourth_moment(y)?;
    let moments = ctx.moments();
    let table = moments.ensure(2.0 * y)?;
    let dt = table.dt();
    let lo = (0.5 * y / dt).floor() as usize;
    let hi = (2.0 * y / dt).ceil() as usize;
    let values = &table.values()[lo..=hi];
    if !(values[0] <= target && target <= values[values.len() - 1]) {
        return Err(Error::Bracket {
            a: lo as f64 * dt,
            b: hi as f64 * dt,
            fa: values[0] - target,
            fb: values[values.len() - 1] - target,
        });
    }
    // first checkpoint at or above the target
    let k = lo + values.partition_point(|&v| v < target);
    let b = k as f64 * dt;
    let fb = table.values()[k] - target;
    let a = (k.max(1) - 1) as f64 * dt;
    let fa = table.values()[k.max(1) - 1] - target;
    let root = brent(|x| Ok(moments.fourth_moment(x)? - target), a, b, fa, fb, root_options())?;
    let residual = root.fx.abs() / target;
    if residual > tol {
        return Err(Error::NoConvergence {
            what: "inverse ladder solve",
            iterations: root.iterations,
            residual,
        });
    }
    Ok(InversePoint {
        y,
        t: root.x,
        residual,
        iterations: root.iterations,
    })
}

/// φ₂′(t) = Z⁴(t) / Φ₂′(φ₂(t)).
pub fn phi2_derivative(t: f64, ctx: &WeightedMomentContext) -> Result<f64> {
    let p = solve_phi2(t, ctx, DEFAULT_TOL)?;
    Ok(ctx.evaluator().z4(t)? / ctx.phi2_prime(p.phi2)?)
}

/// [T̊, (T+U)̊] = [M₂(T), M₂(T+U)].
pub fn reverse_interval(t: f64, u: f64, ctx: &WeightedMomentContext, tol: f64) -> Result<ReverseInterval> {
    check_floor("reverse_interval", t)?;
    if !(u > 0.0 && u <= t) {
        return Err(Error::domain(format!("reverse_interval needs 0 < U <= T, got U = {u}")));
    }
    let a = inverse_ladder(t, ctx, tol)?;
    let b = inverse_ladder(t + u, ctx, tol)?;
    Ok(ReverseInterval {
        t,
        u,
        t_ring: a.t,
        tu_ring: b.t,
        residual_t: a.residual,
        residual_tu: b.residual,
    })
}

/// tan α₂ = (φ₂(T+U) − φ₂(T)) / U.
pub fn chord_slope(t: f64, u: f64, ctx: &WeightedMomentContext, tol: f64) -> Result<f64> {
    check_floor("chord_slope", t)?;
    if !(u.is_finite() && u > 0.0) {
        return Err(Error::domain(format!("chord_slope needs U > 0, got {u}")));
    }
    let a = solve_phi2(t, ctx, tol)?;
    let b = solve_phi2(t + u, ctx, tol)?;
    Ok((b.phi2 - a.phi2) / u)
}

/// Pointwise φ₂(t) on a dense set of heights in [t0, t1].
///
/// I(t) is carried on a fine grid re-anchored at every checkpoint of the
/// moment table, and φ₂(t) is read off by inverting a Chebyshev surrogate of W
/// whose nodes are full W evaluations.
pub struct LadderTrack<'a> {
    ctx: &'a WeightedMomentContext,
    t0: f64,
    t1: f64,
    w: Chebyshev,
    dw: Chebyshev,
    /// Fine grid in t and I at each grid point.
    grid: Vec<f64>,
    integral: Vec<f64>,
}

impl<'a> LadderTrack<'a> {
    /// Track over [t0, t1], solving φ₂ at both ends to size the surrogate.
    pub fn new(ctx: &'a WeightedMomentContext, t0: f64, t1: f64) -> Result<Self> {
        let a = solve_phi2(t0, ctx, DEFAULT_TOL)?;
        let b = solve_phi2(t1, ctx, DEFAULT_TOL)?;
        Self::with_range(ctx, t0, t1, a.phi2, b.phi2)
    }

    /// Track over [t0, t1] when φ₂(t0) ≈ x0 and φ₂(t1) ≈ x1 are known.
    pub fn with_range(ctx: &'a WeightedMomentContext, t0: f64, t1: f64, x0: f64, x1: f64) -> Result<Self> {
        check_floor("ladder track", t0)?;
        if !(t1 > t0) {
            return Err(Error::domain(format!("ladder track needs t0 < t1, got [{t0}, {t1}]")));
        }
        let margin = 0.01 * (x1 - x0) + 1.0;
        let (xa, xb) = ((x0 - margin).max(2.0), x1 + margin);
        let w = Chebyshev::fit_adaptive(
            |x| ctx.weighted_fourth_moment(x),
            xa,
            xb,
            SURROGATE_TOL,
            SURROGATE_MAX_NODES,
        )?;
        let dw = w.derivative();

        let ev = ctx.evaluator();
        ev.check_range(t0, t1)?;
        let moments = ctx.moments();
        let table = moments.ensure(t1)?;
        let dt = table.dt();
        let policy = ctx.policy();
        let gl = gauss_legendre(policy.gl_order);

        let k0 = (t0 / dt).floor() as usize;
        let k1 = (t1 / dt).ceil() as usize;
        let mut grid = Vec::new();
        let mut integral = Vec::new();
        for k in k0..k1 {
            let (a, ia) = table.checkpoint(k);
            let b = a + dt;
            let m = (dt / policy.panel_width(a)).ceil().max(1.0) as usize;
            let mut acc = ia;
            for i in 0..m {
                let lo = a + dt * i as f64 / m as f64;
                let hi = if i + 1 == m { b } else { a + dt * (i + 1) as f64 / m as f64 };
                grid.push(lo);
                integral.push(acc);
                acc += gl.apply(|t| ev.z4_unchecked(t), lo, hi);
            }
        }
        let (tk1, ik1) = table.checkpoint(k1);
        grid.push(tk1);
        integral.push(ik1);

        Ok(Self {
            ctx,
            t0,
            t1,
            w,
            dw,
            grid,
            integral,
        })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.t0, self.t1)
    }

    /// Grid points of the fine I(t) grid (a natural panel layout).
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// I(t) for t inside the track.
    pub fn fourth_moment(&self, t: f64) -> f64 {
        let j = self.grid.partition_point(|&g| g <= t).max(1) - 1;
        let base = self.integral[j];
        let g = self.grid[j];
        if t == g {
            return base;
        }
        let ev = self.ctx.evaluator();
        let gl = gauss_legendre(self.ctx.policy().gl_order);
        base + gl.apply(|s| ev.z4_unchecked(s), g, t)
    }

    /// Surrogate W(x).
    pub fn w(&self, x: f64) -> f64 {
        self.w.eval(x)
    }

    /// Surrogate W′(x) = Φ₂′(x).
    pub fn w_prime(&self, x: f64) -> f64 {
        self.dw.eval(x)
    }

    /// x with W(x) = `value`, by safeguarded Newton on the surrogate.
    pub fn invert_w(&self, value: f64) -> Result<f64> {
        let (mut lo, mut hi) = self.w.domain();
        if !(self.w.eval(lo) <= value && value <= self.w.eval(hi)) {
            return Err(Error::Bracket {
                a: lo,
                b: hi,
                fa: self.w.eval(lo) - value,
                fb: self.w.eval(hi) - value,
            });
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..MAX_ITER {
            let f = self.w.eval(x) - value;
            if f > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let step = f / self.dw.eval(x);
            let mut next = x - step;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs() || hi - lo <= 4.0 * f64::EPSILON * x.abs() {
                return Ok(next);
            }
            x = next;
        }
        Err(Error::NoConvergence {
            what: "surrogate inversion",
            iterations: MAX_ITER,
            residual: (self.w.eval(x) - value).abs(),
        })
    }

    /// φ₂(t) for t inside the track.
    pub fn phi2(&self, t: f64) -> Result<f64> {
        self.invert_w(self.fourth_moment(t))
    }

    /// φ₂′(t) = Z⁴(t) / Φ₂′(φ₂(t)).
    pub fn phi2_derivative(&self, t: f64) -> Result<f64> {
        let x = self.phi2(t)?;
        Ok(self.ctx.evaluator().z4_unchecked(t) / self.w_prime(x))
    }
}
