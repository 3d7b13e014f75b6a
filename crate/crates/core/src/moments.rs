//! Cumulative fourth moment I(T) = ∫₀ᵀ Z⁴(t) dt backed by a checkpoint table.
//!
//! The table stores I at T = kΔT and, for every unit cell [kΔT, (k+1)ΔT], the
//! local power moments ∫ Z⁴(t) (t - c_k)^j dt about the cell centre c_k for
//! j < [`CELL_ORDER`]. The power moments let smooth-weighted integrals of Z⁴
//! (the exponential weights of the ladder equation) be evaluated as a
//! contraction with the Taylor coefficients of the weight, without touching Z
//! again.
//!
//! On disk the checkpoints live in a text file
//!
//! ```text
//! zeta-ladder-moments v1 dT=<ΔT> fingerprint=<hex>
//! T,I4
//! 0.0000000000000000e0,0.0000000000000000e0
//! ...
//! ```
//!
//! and the power moments in a binary sidecar `<path>.cells`.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{CacheError, Error, Result};
use crate::quadrature::{integrate, integrate_multi, pairwise_sum, PanelLayout, PanelPolicy};
use crate::zeta::ZEvaluator;

pub const FORMAT_VERSION: u32 = 1;
pub const DEFAULT_DT: f64 = 1.0;
/// Number of stored power moments per cell (powers 0..CELL_ORDER).
pub const CELL_ORDER: usize = 9;

const HEADER_TAG: &str = "zeta-ladder-moments";
const CELLS_TAG: &str = "zeta-ladder-cells";
/// Cells per parallel work unit; fixed so reductions do not depend on thread count.
const CELL_CHUNK: usize = 512;
/// Automatic extensions grow the table in multiples of this many cells.
const GROWTH_QUANTUM: usize = 4096;

pub type CellMoments = [f64; CELL_ORDER];

#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    dt: f64,
    fingerprint: String,
    /// I(k ΔT) for k = 0..len.
    values: Vec<f64>,
    /// Power moments of cell k; may cover fewer cells than `values` after
    /// loading checkpoints without their sidecar.
    cells: Vec<CellMoments>,
}

impl MomentTable {
    pub fn new(dt: f64, fingerprint: impl Into<String>) -> Self {
        Self {
            dt,
            fingerprint: fingerprint.into(),
            values: vec![0.0],
            cells: Vec::new(),
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    /// Number of checkpoint rows (including the (0, 0) row).
    pub fn rows(&self) -> usize {
        self.values.len()
    }

    /// Height of the last checkpoint.
    pub fn t_max(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.dt
    }

    pub fn checkpoint(&self, k: usize) -> (f64, f64) {
        (k as f64 * self.dt, self.values[k])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cells(&self) -> &[CellMoments] {
        &self.cells
    }

    /// Number of cells whose power moments are available.
    pub fn cells_covered(&self) -> usize {
        self.cells.len()
    }

    pub fn cell_center(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.dt
    }

    /// Check the structural invariants of the table.
    pub fn validate(&self) -> std::result::Result<(), CacheError> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(CacheError::Format {
                line: 1,
                detail: format!("dT must be positive, got {}", self.dt),
            });
        }
        if self.values.first() != Some(&0.0) {
            return Err(CacheError::Monotonicity {
                row: 0,
                detail: "first checkpoint must be (0, 0)".into(),
            });
        }
        for (k, pair) in self.values.windows(2).enumerate() {
            if !(pair[1] >= pair[0]) || !pair[1].is_finite() {
                return Err(CacheError::Monotonicity {
                    row: k + 1,
                    detail: format!("I decreases from {:e} to {:e}", pair[0], pair[1]),
                });
            }
        }
        if self.cells.len() + 1 > self.values.len() {
            return Err(CacheError::Inconsistent { row: self.values.len() });
        }
        for (k, cell) in self.cells.iter().enumerate() {
            if self.values[k] + cell[0] != self.values[k + 1] {
                return Err(CacheError::Inconsistent { row: k + 1 });
            }
        }
        Ok(())
    }

    /// Σ over cells k in `range` of Σ_j cell_k[j] · coeffs(c_k)[j].
    ///
    /// With `coeffs(c)` the Taylor coefficients of a weight g about the cell
    /// centre c, this is ∫ Z⁴ g over those cells.
    pub fn contract_cells<G>(&self, range: std::ops::Range<usize>, coeffs: G) -> f64
    where
        G: Fn(f64) -> CellMoments + Sync,
    {
        assert!(range.end <= self.cells.len(), "cells beyond the covered range");
        let starts: Vec<usize> = (range.start..range.end).step_by(CELL_CHUNK).collect();
        let partial: Vec<f64> = starts
            .par_iter()
            .map(|&s| {
                let e = (s + CELL_CHUNK).min(range.end);
                let terms: Vec<f64> = (s..e)
                    .map(|k| {
                        let g = coeffs(self.cell_center(k));
                        let m = &self.cells[k];
                        let mut acc = 0.0;
                        for j in (0..CELL_ORDER).rev() {
                            acc += g[j] * m[j];
                        }
                        acc
                    })
                    .collect();
                pairwise_sum(&terms)
            })
            .collect();
        pairwise_sum(&partial)
    }
}

/// Fingerprint of everything that determines table contents.
pub fn table_fingerprint(evaluator: &ZEvaluator, policy: &PanelPolicy, dt: f64) -> String {
    let mut hasher = Sha256::new();
    hasher.update(format!("format=v{FORMAT_VERSION};dt={dt:e};cell_order={CELL_ORDER};").as_bytes());
    hasher.update(evaluator.fingerprint_fields().as_bytes());
    hasher.update(b";");
    hasher.update(policy.fingerprint_fields().as_bytes());
    let digest = hasher.finalize();
    digest[..16].iter().map(|b| format!("{b:02x}")).collect()
}

fn cells_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".cells");
    PathBuf::from(name)
}

/// Write the checkpoint file and its power-moment sidecar.
pub fn save_table(table: &MomentTable, path: &Path) -> std::result::Result<(), CacheError> {
    let write = || -> std::io::Result<()> {
        let tmp = path.with_extension("tmp");
        {
            let mut out = BufWriter::new(File::create(&tmp)?);
            writeln!(
                out,
                "{HEADER_TAG} v{FORMAT_VERSION} dT={} fingerprint={}",
                table.dt, table.fingerprint
            )?;
            writeln!(out, "T,I4")?;
            for (k, v) in table.values.iter().enumerate() {
                writeln!(out, "{:.16e},{:.16e}", k as f64 * table.dt, v)?;
            }
            out.flush()?;
        }
        fs::rename(&tmp, path)?;

        let cpath = cells_path(path);
        let ctmp = cpath.with_extension("tmp");
        {
            let mut out = BufWriter::new(File::create(&ctmp)?);
            writeln!(
                out,
                "{CELLS_TAG} v{FORMAT_VERSION} dT={} order={CELL_ORDER} rows={} fingerprint={}",
                table.dt,
                table.cells.len(),
                table.fingerprint
            )?;
            for cell in &table.cells {
                for v in cell {
                    out.write_all(&v.to_le_bytes())?;
                }
            }
            out.flush()?;
        }
        fs::rename(&ctmp, &cpath)?;
        Ok(())
    };
    write().map_err(|e| CacheError::io(path, e))
}

fn parse_header(line: &str, tag: &str, lineno: usize) -> std::result::Result<Vec<(String, String)>, CacheError> {
    let mut parts = line.split_whitespace();
    if parts.next() != Some(tag) {
        return Err(CacheError::Format {
            line: lineno,
            detail: format!("expected `{tag}` header"),
        });
    }
    let version = parts
        .next()
        .and_then(|v| v.strip_prefix('v'))
        .and_then(|v| v.parse::<u32>().ok())
        .ok_or_else(|| CacheError::Format {
            line: lineno,
            detail: "missing format version".into(),
        })?;
    if version != FORMAT_VERSION {
        return Err(CacheError::Version {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    parts
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| CacheError::Format {
                    line: lineno,
                    detail: format!("bad header field `{kv}`"),
                })
        })
        .collect()
}

fn header_field<'a>(fields: &'a [(String, String)], key: &str, line: usize) -> std::result::Result<&'a str, CacheError> {
    fields
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
        .ok_or_else(|| CacheError::Format {
            line,
            detail: format!("missing `{key}` in header"),
        })
}

/// Read a checkpoint file (and its sidecar when present) and validate it.
pub fn load_table(path: &Path) -> std::result::Result<MomentTable, CacheError> {
    let file = File::open(path).map_err(|e| CacheError::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let mut next_line = |n: usize| -> std::result::Result<String, CacheError> {
        lines
            .next()
            .ok_or_else(|| CacheError::Format {
                line: n,
                detail: "unexpected end of file".into(),
            })?
            .map_err(|e| CacheError::io(path, e))
    };

    let header = next_line(1)?;
    let fields = parse_header(&header, HEADER_TAG, 1)?;
    let dt: f64 = header_field(&fields, "dT", 1)?.parse().map_err(|_| CacheError::Format {
        line: 1,
        detail: "unparsable dT".into(),
    })?;
    let fingerprint = header_field(&fields, "fingerprint", 1)?.to_string();
    if next_line(2)?.trim() != "T,I4" {
        return Err(CacheError::Format {
            line: 2,
            detail: "expected column header `T,I4`".into(),
        });
    }

    let mut values = Vec::new();
    let file = File::open(path).map_err(|e| CacheError::io(path, e))?;
    for (idx, line) in BufReader::new(file).lines().enumerate().skip(2) {
        let line = line.map_err(|e| CacheError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let (t, i) = line.split_once(',').ok_or_else(|| CacheError::Format {
            line: lineno,
            detail: "expected `T,I4` row".into(),
        })?;
        let parse = |s: &str| {
            s.trim().parse::<f64>().map_err(|_| CacheError::Format {
                line: lineno,
                detail: format!("unparsable number `{s}`"),
            })
        };
        let (t, i) = (parse(t)?, parse(i)?);
        let k = values.len();
        if t != k as f64 * dt {
            return Err(CacheError::Monotonicity {
                row: k,
                detail: format!("expected T = {}, found {t}", k as f64 * dt),
            });
        }
        values.push(i);
    }
    if values.is_empty() {
        return Err(CacheError::Format {
            line: 3,
            detail: "table has no rows".into(),
        });
    }

    let mut table = MomentTable {
        dt,
        fingerprint,
        values,
        cells: Vec::new(),
    };
    let cpath = cells_path(path);
    if cpath.exists() {
        table.cells = load_cells(&cpath, &table)?;
    }
    table.validate()?;
    Ok(table)
}

fn load_cells(path: &Path, table: &MomentTable) -> std::result::Result<Vec<CellMoments>, CacheError> {
    let mut reader = BufReader::new(File::open(path).map_err(|e| CacheError::io(path, e))?);
    let mut header = String::new();
    reader.read_line(&mut header).map_err(|e| CacheError::io(path, e))?;
    let fields = parse_header(header.trim_end(), CELLS_TAG, 1)?;
    let found = header_field(&fields, "fingerprint", 1)?;
    if found != table.fingerprint {
        return Err(CacheError::Fingerprint {
            expected: table.fingerprint.clone(),
            found: found.to_string(),
        });
    }
    let order: usize = header_field(&fields, "order", 1)?.parse().unwrap_or(0);
    if order != CELL_ORDER {
        return Err(CacheError::Format {
            line: 1,
            detail: format!("cell order {order}, expected {CELL_ORDER}"),
        });
    }
    let rows: usize = header_field(&fields, "rows", 1)?.parse().map_err(|_| CacheError::Format {
        line: 1,
        detail: "unparsable rows".into(),
    })?;
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes).map_err(|e| CacheError::io(path, e))?;
    if bytes.len() != rows * CELL_ORDER * 8 {
        return Err(CacheError::Format {
            line: 2,
            detail: format!("expected {} bytes of cell data, found {}", rows * CELL_ORDER * 8, bytes.len()),
        });
    }
    let cells = bytes
        .chunks_exact(CELL_ORDER * 8)
        .map(|row| {
            let mut cell = [0.0; CELL_ORDER];
            for (j, v) in row.chunks_exact(8).enumerate() {
                cell[j] = f64::from_le_bytes(v.try_into().expect("8 bytes"));
            }
            cell
        })
        .collect();
    Ok(cells)
}

/// Leading term of Ingham's fourth-moment asymptotic, T ln⁴T / (2π²).
pub fn ingham_main(t: f64) -> Result<f64> {
    if !(t.is_finite() && t > 1.0) {
        return Err(Error::domain(format!("ingham_main needs T > 1, got {t}")));
    }
    let l = t.ln();
    Ok(t * l.powi(4) / (2.0 * std::f64::consts::PI.powi(2)))
}

/// Shared, extendable fourth-moment table.
///
/// Readers get immutable snapshots; extensions are serialized by a writer lock
/// and published atomically.
#[derive(Debug)]
pub struct Moments {
    evaluator: Arc<ZEvaluator>,
    policy: PanelPolicy,
    table: RwLock<Arc<MomentTable>>,
    writer: Mutex<()>,
    path: Option<PathBuf>,
}

impl Moments {
    /// In-memory table starting at (0, 0).
    pub fn new(evaluator: Arc<ZEvaluator>, policy: PanelPolicy) -> Result<Self> {
        policy.validate()?;
        let fingerprint = table_fingerprint(&evaluator, &policy, DEFAULT_DT);
        Ok(Self {
            evaluator,
            policy,
            table: RwLock::new(Arc::new(MomentTable::new(DEFAULT_DT, fingerprint))),
            writer: Mutex::new(()),
            path: None,
        })
    }

    /// Table persisted at `path`, loaded when the file exists.
    pub fn with_cache_file(evaluator: Arc<ZEvaluator>, policy: PanelPolicy, path: impl Into<PathBuf>) -> Result<Self> {
        let mut moments = Self::new(evaluator, policy)?;
        let path = path.into();
        if path.exists() {
            let loaded = load_table(&path)?;
            let expected = moments.fingerprint();
            if loaded.fingerprint != expected {
                return Err(CacheError::Fingerprint {
                    expected,
                    found: loaded.fingerprint,
                }
                .into());
            }
            if loaded.dt != DEFAULT_DT {
                return Err(CacheError::Format {
                    line: 1,
                    detail: format!("dT = {}, expected {DEFAULT_DT}", loaded.dt),
                }
                .into());
            }
            moments.table = RwLock::new(Arc::new(loaded));
        }
        moments.path = Some(path);
        Ok(moments)
    }

    pub fn evaluator(&self) -> &Arc<ZEvaluator> {
        &self.evaluator
    }

    pub fn policy(&self) -> &PanelPolicy {
        &self.policy
    }

    pub fn cache_path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn fingerprint(&self) -> String {
        table_fingerprint(&self.evaluator, &self.policy, DEFAULT_DT)
    }

    pub fn snapshot(&self) -> Arc<MomentTable> {
        self.table.read().expect("table lock poisoned").clone()
    }

    /// Extend the table so checkpoints and cell moments cover `[0, t]`,
    /// rounding the extension up to a growth quantum.
    pub fn ensure(&self, t: f64) -> Result<Arc<MomentTable>> {
        let snap = self.snapshot();
        let needed = (t / snap.dt).ceil().max(0.0) as usize;
        if needed <= snap.cells_covered() {
            return Ok(snap);
        }
        let target = needed.div_ceil(GROWTH_QUANTUM) * GROWTH_QUANTUM;
        self.extend_cells(target)
    }

    /// Extend to exactly `ceil(t / ΔT)` cells (no rounding).
    pub fn extend_to(&self, t: f64) -> Result<Arc<MomentTable>> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::domain(format!("table height must be finite and >= 0, got {t}")));
        }
        let snap = self.snapshot();
        let needed = (t / snap.dt).ceil() as usize;
        if needed <= snap.cells_covered() && needed < snap.rows() {
            return Ok(snap);
        }
        self.extend_cells(needed)
    }

    fn extend_cells(&self, target_cells: usize) -> Result<Arc<MomentTable>> {
        let _guard = self.writer.lock().expect("writer lock poisoned");
        let snap = self.snapshot();
        if target_cells <= snap.cells_covered() && target_cells < snap.rows() {
            return Ok(snap);
        }
        let start = snap.cells_covered();
        let dt = snap.dt;
        self.evaluator.check_range(start as f64 * dt, target_cells as f64 * dt)?;

        let new_cells = (start..target_cells)
            .step_by(CELL_CHUNK)
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&s| {
                let e = (s + CELL_CHUNK).min(target_cells);
                (s..e).map(|k| self.cell_moments(k, dt)).collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;

        let mut table = (*snap).clone();
        for cell in new_cells.into_iter().flatten() {
            let k = table.cells.len();
            let next = table.values[k] + cell[0];
            if k + 1 < table.values.len() {
                if table.values[k + 1] != next {
                    return Err(CacheError::Inconsistent { row: k + 1 }.into());
                }
            } else {
                table.values.push(next);
            }
            table.cells.push(cell);
        }
        let table = Arc::new(table);
        if let Some(path) = &self.path {
            save_table(&table, path)?;
        }
        *self.table.write().expect("table lock poisoned") = table.clone();
        Ok(table)
    }

    fn cell_moments(&self, k: usize, dt: f64) -> Result<CellMoments> {
        let a = k as f64 * dt;
        let b = (k + 1) as f64 * dt;
        let c = 0.5 * (a + b);
        let ev = &self.evaluator;
        let r = integrate_multi(
            |t| {
                let z4 = ev.z4_unchecked(t);
                let s = t - c;
                let mut out = [0.0; CELL_ORDER];
                let mut p = z4;
                for slot in out.iter_mut() {
                    *slot = p;
                    p *= s;
                }
                out
            },
            a,
            b,
            &self.policy,
            &PanelLayout::default(),
        )?;
        Ok(r.values)
    }

    /// I(T) = ∫₀ᵀ Z⁴(t) dt: nearest lower checkpoint plus quadrature over the rest.
    pub fn fourth_moment(&self, t: f64) -> Result<f64> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::domain(format!("fourth_moment needs T >= 0, got {t}")));
        }
        let table = self.ensure(t)?;
        let k = ((t / table.dt).floor() as usize).min(table.rows() - 1);
        let (tk, ik) = table.checkpoint(k);
        if tk == t {
            return Ok(ik);
        }
        Ok(ik + self.z4_integral(tk, t)?)
    }

    /// ∫ₐᵇ Z⁴ by adaptive quadrature (no table).
    pub fn z4_integral(&self, a: f64, b: f64) -> Result<f64> {
        self.evaluator.check_range(a, b)?;
        let ev = &self.evaluator;
        Ok(integrate(|t| ev.z4_unchecked(t), a, b, &self.policy)?.value)
    }
}
