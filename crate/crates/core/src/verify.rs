//! Both sides of each checkable formula, collected into reports.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::cheb::Chebyshev;
use crate::error::{Error, Result};
use crate::ladder::{self, reverse_interval, solve_phi2, LadderTrack};
use crate::moments::ingham_main;
use crate::quadrature::{integrate_multi, PanelLayout};
use crate::weighted_moments::WeightedMomentContext;

/// Acceptance bands, chosen by hand; the asymptotic statements fix no finite-T constants.
pub mod bands {
    pub const IDENTITY_REL: f64 = 1e-3;
    pub const THEOREM_RATIO: (f64, f64) = (0.3, 3.0);
    pub const MAIN_TERM_RATIO: (f64, f64) = (0.5, 2.0);
    pub const LAPLACE_TREND_SLACK: f64 = 0.1;
    pub const PHI2PP_GROWTH: f64 = 10.0;
    /// |tan α₂ − 1| ≤ CHORD_CONSTANT / ln T.
    pub const CHORD_CONSTANT: f64 = 5.0;
}

pub const DEFAULT_EPSILON: f64 = 0.01;
/// Lowest T accepted by [`verify_theorem`].
pub const THEOREM_FLOOR: f64 = 1e3;

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    /// Named parameters (T, U, delta, epsilon as applicable), in order.
    pub parameters: Vec<(String, f64)>,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub aux: BTreeMap<String, f64>,
}

impl ReportRow {
    fn new(parameters: &[(&str, f64)], lhs: f64, rhs: f64) -> Self {
        Self {
            parameters: parameters.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            lhs,
            rhs,
            ratio: if rhs != 0.0 { lhs / rhs } else { f64::NAN },
            aux: BTreeMap::new(),
        }
    }

    fn with(mut self, key: &str, value: f64) -> Self {
        self.aux.insert(key.to_string(), value);
        self
    }

    pub fn parameter(&self, name: &str) -> Option<f64> {
        self.parameters.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    /// Exact identities, solver residuals and the bracket: a failure falsifies the computation.
    Hard,
    /// Asymptotic bands and trends at finite height.
    Soft,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub severity: Severity,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportMeta {
    pub fingerprint: String,
    /// Unix seconds at report creation.
    pub timestamp: u64,
    pub tolerances: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    SoftFail,
    HardFail,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub name: String,
    pub meta: ReportMeta,
    pub rows: Vec<ReportRow>,
    pub checks: Vec<Check>,
}

impl VerificationReport {
    fn new(name: &str, ctx: &WeightedMomentContext) -> Self {
        let mut tolerances = BTreeMap::new();
        tolerances.insert("quadrature_rel_tol".into(), ctx.policy().rel_tol);
        tolerances.insert("z_target_abs_err".into(), ctx.evaluator().target_abs_err());
        tolerances.insert("ladder_tol".into(), ladder::DEFAULT_TOL);
        tolerances.insert("omega1".into(), ctx.mu().omega1());
        tolerances.insert("omega2".into(), ctx.mu().omega2());
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            name: name.to_string(),
            meta: ReportMeta {
                fingerprint: ctx.moments().fingerprint(),
                timestamp,
                tolerances,
            },
            rows: Vec::new(),
            checks: Vec::new(),
        }
    }

    fn check(&mut self, name: impl Into<String>, severity: Severity, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            severity,
            passed,
            detail: detail.into(),
        });
    }

    /// Append the rows and checks of another report of the same kind.
    pub fn absorb(&mut self, other: VerificationReport) {
        self.rows.extend(other.rows);
        self.checks.extend(other.checks);
        for (k, v) in other.meta.tolerances {
            let entry = self.meta.tolerances.entry(k).or_insert(v);
            *entry = entry.max(v);
        }
    }

    pub fn outcome(&self) -> Outcome {
        let failed = |s| self.checks.iter().any(|c| c.severity == s && !c.passed);
        if failed(Severity::Hard) {
            Outcome::HardFail
        } else if failed(Severity::Soft) {
            Outcome::SoftFail
        } else {
            Outcome::Pass
        }
    }

    /// Column names: parameters, lhs, rhs, ratio, then aux keys, in first-seen order.
    fn columns(&self) -> Vec<String> {
        let mut cols: Vec<String> = Vec::new();
        for row in &self.rows {
            for (k, _) in &row.parameters {
                if !cols.contains(k) {
                    cols.push(k.clone());
                }
            }
        }
        cols.extend(["lhs", "rhs", "ratio"].map(String::from));
        for row in &self.rows {
            for k in row.aux.keys() {
                if !cols.contains(k) {
                    cols.push(k.clone());
                }
            }
        }
        cols
    }

    fn row_value(row: &ReportRow, col: &str) -> Option<f64> {
        match col {
            "lhs" => Some(row.lhs),
            "rhs" => Some(row.rhs),
            "ratio" => Some(row.ratio),
            _ => row.parameter(col).or_else(|| row.aux.get(col).copied()),
        }
    }

    pub fn to_csv(&self) -> String {
        let cols = self.columns();
        let mut out = cols.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = cols
                .iter()
                .map(|c| Self::row_value(row, c).map(fmt_num).unwrap_or_default())
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// JSON with top-level `name`, `meta`, `rows` (flat records) and `checks`.
    pub fn to_structured(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{{");
        let _ = writeln!(out, "  \"name\": {},", json_str(&self.name));
        let _ = writeln!(out, "  \"meta\": {{");
        let _ = writeln!(out, "    \"fingerprint\": {},", json_str(&self.meta.fingerprint));
        let _ = writeln!(out, "    \"timestamp\": {},", self.meta.timestamp);
        let tol: Vec<String> = self
            .meta
            .tolerances
            .iter()
            .map(|(k, v)| format!("{}: {}", json_str(k), json_num(*v)))
            .collect();
        let _ = writeln!(out, "    \"tolerances\": {{{}}}", tol.join(", "));
        let _ = writeln!(out, "  }},");
        let _ = writeln!(out, "  \"rows\": [");
        let cols = self.columns();
        for (i, row) in self.rows.iter().enumerate() {
            let fields: Vec<String> = cols
                .iter()
                .filter_map(|c| Self::row_value(row, c).map(|v| format!("{}: {}", json_str(c), json_num(v))))
                .collect();
            let sep = if i + 1 < self.rows.len() { "," } else { "" };
            let _ = writeln!(out, "    {{{}}}{sep}", fields.join(", "));
        }
        let _ = writeln!(out, "  ],");
        let _ = writeln!(out, "  \"checks\": [");
        for (i, c) in self.checks.iter().enumerate() {
            let sep = if i + 1 < self.checks.len() { "," } else { "" };
            let severity = match c.severity {
                Severity::Hard => "hard",
                Severity::Soft => "soft",
            };
            let _ = writeln!(
                out,
                "    {{\"name\": {}, \"severity\": \"{severity}\", \"passed\": {}, \"detail\": {}}}{sep}",
                json_str(&c.name),
                c.passed,
                json_str(&c.detail)
            );
        }
        let _ = writeln!(out, "  ]");
        let _ = writeln!(out, "}}");
        out
    }
}

/// 17 significant digits.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

fn json_num(v: f64) -> String {
    if v.is_finite() {
        fmt_num(v)
    } else {
        "null".into()
    }
}

fn json_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn in_band(v: f64, band: (f64, f64)) -> bool {
    v >= band.0 && v <= band.1
}

fn require_grid(grid: &[f64], what: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::domain(format!("{what} needs a non-empty grid")));
    }
    Ok(())
}

fn sorted(grid: &[f64]) -> Vec<f64> {
    let mut g = grid.to_vec();
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

/// U(T, ε) = T^{13/14 + 2ε}, and the same capped at T/2.
pub fn theorem_u(t: f64, epsilon: f64) -> (f64, f64) {
    let raw = t.powf(13.0 / 14.0 + 2.0 * epsilon);
    (raw, raw.min(0.5 * t))
}

/// U ln⁸T / (4π⁴).
pub fn theorem_rhs(t: f64, u: f64) -> f64 {
    u * t.ln().powi(8) / (4.0 * PI.powi(4))
}

/// The mean-value Theorem: ∫ over [T̊, (T+U)̊] of Z⁴(φ₂(t)) Z⁴(t) dt against
/// U ln⁸T / (4π⁴), with the change-of-variable identity as a second path.
pub fn verify_theorem(t: f64, epsilon: f64, ctx: &WeightedMomentContext) -> Result<VerificationReport> {
    if !(t.is_finite() && t >= THEOREM_FLOOR) {
        return Err(Error::domain(format!("verify_theorem needs T >= {THEOREM_FLOOR}, got {t}")));
    }
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::domain(format!("epsilon must be finite and >= 0, got {epsilon}")));
    }
    let mut report = VerificationReport::new("theorem", ctx);
    report.meta.tolerances.insert("identity_rel".into(), bands::IDENTITY_REL);
    let (u_raw, u) = theorem_u(t, epsilon);
    let rev = reverse_interval(t, u, ctx, ladder::DEFAULT_TOL)?;

    let direct = theorem_lhs_direct(ctx, &rev)?;
    let transformed = theorem_lhs_transformed(ctx, t, u)?;
    let rhs = theorem_rhs(t, u);
    let identity = direct.0 / transformed.0;

    let row = ReportRow::new(&[("T", t), ("U", u), ("epsilon", epsilon)], direct.0, rhs)
        .with("lhs_transformed", transformed.0)
        .with("identity_ratio", identity)
        .with("lhs_direct_error", direct.1)
        .with("lhs_transformed_error", transformed.1)
        .with("t_ring", rev.t_ring)
        .with("tu_ring", rev.tu_ring)
        .with("u_uncapped", u_raw)
        .with("u_capped", if u < u_raw { 1.0 } else { 0.0 });
    let ratio = row.ratio;
    report.rows.push(row);

    report.check(
        format!("identity T={t}"),
        Severity::Hard,
        (identity - 1.0).abs() <= bands::IDENTITY_REL,
        format!("LHS_direct/LHS_transformed = {identity:.12}"),
    );
    report.check(
        format!("main-term band T={t}"),
        Severity::Soft,
        in_band(ratio, bands::THEOREM_RATIO),
        format!("LHS/RHS = {ratio:.6} against {:?}", bands::THEOREM_RATIO),
    );
    Ok(report)
}

/// ∫_{T̊}^{(T+U)̊} Z⁴(φ₂(t)) Z⁴(t) dt with φ₂ from a dense track.
fn theorem_lhs_direct(ctx: &WeightedMomentContext, rev: &ladder::ReverseInterval) -> Result<(f64, f64)> {
    let track = LadderTrack::with_range(ctx, rev.t_ring, rev.tu_ring, rev.t, rev.t + rev.u)?;
    let policy = ctx.policy();
    let ev = ctx.evaluator();
    ev.check_range(rev.t_ring, rev.tu_ring)?;
    ev.check_range(rev.t, rev.t + rev.u)?;

    // break panels where φ₂ advances faster than Z(φ₂) can be resolved
    let grid: Vec<f64> = track
        .grid()
        .iter()
        .copied()
        .filter(|&g| g > rev.t_ring && g < rev.tu_ring)
        .collect();
    let mut stops = vec![rev.t_ring];
    stops.extend(&grid);
    stops.push(rev.tu_ring);
    let phis: Vec<f64> = stops.iter().map(|&s| track.phi2(s)).collect::<Result<_>>()?;
    let mut breakpoints = Vec::with_capacity(stops.len() * 2);
    for j in 0..stops.len() - 1 {
        let advance = phis[j + 1] - phis[j];
        let m = (advance / policy.panel_width(phis[j])).ceil().max(1.0) as usize;
        for i in 0..m {
            breakpoints.push(stops[j] + (stops[j + 1] - stops[j]) * i as f64 / m as f64);
        }
    }
    let layout = PanelLayout {
        max_width: None,
        breakpoints,
    };
    let r = integrate_multi(
        |s| {
            let x = track.phi2(s).unwrap_or(f64::NAN);
            [ev.z4_unchecked(s) * ev.z4_unchecked(x)]
        },
        rev.t_ring,
        rev.tu_ring,
        policy,
        &layout,
    )?;
    finite("direct theorem integral", r.values[0])?;
    Ok((r.values[0], r.error_estimate))
}

/// ∫_T^{T+U} Z⁴(w) Φ₂′(w) dw with Φ₂′ in its integral-plus-boundary form.
fn theorem_lhs_transformed(ctx: &WeightedMomentContext, t: f64, u: f64) -> Result<(f64, f64)> {
    let ev = ctx.evaluator();
    ev.check_range(t, t + u)?;
    let integral_part = Chebyshev::fit_adaptive(|w| ctx.phi2_prime_integral(w), t - 1.0, t + u + 1.0, 1e-12, 512)?;
    let r = integrate_multi(
        |w| {
            let boundary = ctx.phi2_prime_boundary(w).unwrap_or(f64::NAN);
            [ev.z4_unchecked(w) * (integral_part.eval(w) + boundary)]
        },
        t,
        t + u,
        ctx.policy(),
        &PanelLayout::default(),
    )?;
    finite("transformed theorem integral", r.values[0])?;
    Ok((r.values[0], r.error_estimate))
}

fn finite(what: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::NoConvergence {
            what,
            iterations: 0,
            residual: f64::NAN,
        })
    }
}

/// φ₂(T) − T against T / ln T, with the bracket and the Ingham ratio.
pub fn verify_lemma_phi2_near_t(grid: &[f64], ctx: &WeightedMomentContext) -> Result<VerificationReport> {
    require_grid(grid, "verify_lemma_phi2_near_t")?;
    let mut report = VerificationReport::new("phi2-near-t", ctx);
    let mut max_norm: f64 = 0.0;
    for t in sorted(grid) {
        let p = solve_phi2(t, ctx, ladder::DEFAULT_TOL)?;
        let i = ctx.moments().fourth_moment(t)?;
        let ingham = i / ingham_main(t)?;
        let row = ReportRow::new(&[("T", t)], p.phi2 - t, t / t.ln())
            .with("phi2", p.phi2)
            .with("residual", p.residual)
            .with("iterations", p.iterations as f64)
            .with("ingham_ratio", ingham);
        max_norm = max_norm.max(row.ratio.abs());
        report.check(
            format!("residual T={t}"),
            Severity::Hard,
            p.residual <= ladder::DEFAULT_TOL,
            format!("{:.3e}", p.residual),
        );
        report.check(
            format!("bracket |phi2-T| <= T/4 at T={t}"),
            Severity::Hard,
            p.within_quarter(),
            format!("phi2/T = {:.6}", p.phi2 / t),
        );
        report.check(
            format!("ingham band T={t}"),
            Severity::Soft,
            in_band(ingham, bands::MAIN_TERM_RATIO),
            format!("I(T)/(T ln^4 T/2pi^2) = {ingham:.6}"),
        );
        report.rows.push(row);
    }
    report
        .meta
        .tolerances
        .insert("observed_max_normalized".into(), max_norm);
    Ok(report)
}

/// (1/2π²)(1/δ) ln⁴(1/δ).
pub fn laplace_main_term(delta: f64) -> f64 {
    (1.0 / delta) * (1.0 / delta).ln().powi(4) / (2.0 * PI * PI)
}

/// The truncated Laplace transform against its main term, plus the I(T)
/// form at T = M₂(1/δ) where 1/δ lies in the ladder's range.
pub fn verify_laplace(deltas: &[f64], ctx: &WeightedMomentContext) -> Result<VerificationReport> {
    require_grid(deltas, "verify_laplace")?;
    let mut report = VerificationReport::new("laplace", ctx);
    let deltas = sorted(deltas);
    let mut ratios = Vec::new();
    for &d in deltas.iter().rev() {
        let lhs = ctx.laplace_fourth_moment(d)?;
        let row = ReportRow::new(&[("delta", d)], lhs, laplace_main_term(d));
        report.check(
            format!("main-term band delta={d}"),
            Severity::Soft,
            in_band(row.ratio, bands::MAIN_TERM_RATIO),
            format!("ratio = {:.6}", row.ratio),
        );
        ratios.push((d, row.ratio));
        report.rows.push(row);

        let y = 1.0 / d;
        if y >= ladder::LADDER_FLOOR {
            let m2 = ladder::inverse_ladder(y, ctx, ladder::DEFAULT_TOL)?;
            let i = ctx.moments().fourth_moment(m2.t)?;
            let rhs = y * y.ln().powi(4) / (2.0 * PI * PI);
            report
                .rows
                .push(ReportRow::new(&[("delta", d), ("T", m2.t)], i, rhs).with("inverse_residual", m2.residual));
        }
    }
    if ratios.len() >= 2 {
        let (d_big, r_big) = ratios[0];
        let (d_small, r_small) = ratios[ratios.len() - 1];
        report.check(
            format!("trend delta={d_small} vs delta={d_big}"),
            Severity::Soft,
            (r_small - 1.0).abs() <= (r_big - 1.0).abs() + bands::LAPLACE_TREND_SLACK,
            format!("|r-1|: {:.4} vs {:.4}", (r_small - 1.0).abs(), (r_big - 1.0).abs()),
        );
    }
    Ok(report)
}

/// ln⁴T (ln ln T)² / T.
pub fn phi2pp_scale(t: f64) -> f64 {
    let l = t.ln();
    l.powi(4) * l.ln().powi(2) / t
}

/// Φ₂″(φ₂(T)) against ln⁴T (ln ln T)² / T, with the Q-part constant.
pub fn verify_phi2pp_bound(grid: &[f64], ctx: &WeightedMomentContext) -> Result<VerificationReport> {
    require_grid(grid, "verify_phi2pp_bound")?;
    let mut report = VerificationReport::new("phi2pp", ctx);
    let grid = sorted(grid);
    let mut normalized = Vec::new();
    for &t in &grid {
        let p = solve_phi2(t, ctx, ladder::DEFAULT_TOL)?;
        let y = p.phi2;
        let s = ctx.phi2_second(y)?;
        let q_const = s.q.abs() * y.powi(3) / y.ln().powi(3);
        let row = ReportRow::new(&[("T", t)], s.value, phi2pp_scale(t))
            .with("phi2", y)
            .with("j", s.j)
            .with("q", s.q)
            .with("q_constant", q_const);
        let norm = row.ratio.abs();
        let row = row.with("normalized", norm);
        report.check(
            format!("finite T={t}"),
            Severity::Hard,
            norm.is_finite() && q_const.is_finite(),
            format!("normalized = {norm:.6e}, |Q| y^3/ln^3 y = {q_const:.6e}"),
        );
        normalized.push((t, norm));
        report.rows.push(row);
    }
    for pair in normalized.windows(2) {
        let ((t0, n0), (t1, n1)) = (pair[0], pair[1]);
        report.check(
            format!("growth T={t1} vs T={t0}"),
            Severity::Soft,
            n1 <= bands::PHI2PP_GROWTH * n0,
            format!("{n1:.6e} <= {} x {n0:.6e}", bands::PHI2PP_GROWTH),
        );
    }
    Ok(report)
}

/// Chord slopes tan α₂(T, U) against 1.
pub fn verify_chord(grid: &[(f64, f64)], ctx: &WeightedMomentContext) -> Result<VerificationReport> {
    if grid.is_empty() {
        return Err(Error::domain("verify_chord needs a non-empty grid"));
    }
    let mut report = VerificationReport::new("chord", ctx);
    let mut grid = grid.to_vec();
    grid.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    grid.dedup();
    let mut max_norm: f64 = 0.0;
    for (t, u) in grid {
        let slope = ladder::chord_slope(t, u, ctx, ladder::DEFAULT_TOL)?;
        let norm = (slope - 1.0) * t.ln();
        let band = bands::CHORD_CONSTANT / t.ln();
        max_norm = max_norm.max(norm.abs());
        report.check(
            format!("positive slope T={t} U={u}"),
            Severity::Hard,
            slope > 0.0,
            format!("tan = {slope:.9}"),
        );
        report.check(
            format!("slope band T={t} U={u}"),
            Severity::Soft,
            (slope - 1.0).abs() <= band,
            format!("|tan - 1| = {:.6} against {band:.6}", (slope - 1.0).abs()),
        );
        report.rows.push(
            ReportRow::new(&[("T", t), ("U", u)], slope, 1.0)
                .with("normalized", norm)
                .with("band", band),
        );
    }
    report
        .meta
        .tolerances
        .insert("observed_max_normalized".into(), max_norm);
    Ok(report)
}
