//! Binary checkpoints and the CSV codec shared by the solvers and the
//! experiment harness.
//!
//! A checkpoint is a single file: a short ASCII header describing the grid,
//! the weight parameters, the run scalars and the component list, followed
//! by raw little-endian doubles in component-major, x2-fastest order.
//! Writes go through a temp file and a rename so a crash never leaves a
//! torn checkpoint behind.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::{build_grid, Grid};
use crate::state::{MaterialLaw, StateField, COMPONENT_NAMES};

pub const MAGIC: &str = "MHDSLAB1";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointMeta {
    pub version: u32,
    pub n1: usize,
    pub n2: usize,
    pub l1: f64,
    pub l2: f64,
    /// Conormal-weight descriptor (kind and blend interval).
    pub sigma: String,
    pub lambda: f64,
    pub time: f64,
    pub eos: String,
}

impl CheckpointMeta {
    pub fn new(grid: &Grid, law: &MaterialLaw, lambda: f64, time: f64) -> Self {
        CheckpointMeta {
            version: FORMAT_VERSION,
            n1: grid.n1,
            n2: grid.n2,
            l1: grid.l1,
            l2: grid.l2,
            sigma: format!("quintic {} {}", 0.25 * grid.l1, 0.75 * grid.l1),
            lambda,
            time,
            eos: law.tag(),
        }
    }

    /// Rebuild the grid the payload was sampled on.
    pub fn grid(&self) -> Result<Grid> {
        build_grid(self.n1, self.n2, self.l1, self.l2)
    }
}

/// Write named fields as one checkpoint; returns the payload byte count.
pub fn write_checkpoint(
    path: &Path,
    fields: &[(&str, &ScalarField)],
    meta: &CheckpointMeta,
) -> Result<u64> {
    let payload_len = 8 * fields.len() * meta.n1 * meta.n2;
    let mut header = String::new();
    header.push_str(MAGIC);
    header.push('\n');
    header.push_str(&format!("version {}\n", meta.version));
    header.push_str(&format!("grid {} {} {} {}\n", meta.n1, meta.n2, meta.l1, meta.l2));
    header.push_str(&format!("sigma {}\n", meta.sigma));
    header.push_str(&format!("lambda {}\n", meta.lambda));
    header.push_str(&format!("time {}\n", meta.time));
    header.push_str(&format!("eos {}\n", meta.eos));
    header.push_str(&format!("components {}", fields.len()));
    for (name, _) in fields {
        header.push(' ');
        header.push_str(name);
    }
    header.push('\n');
    header.push_str(&format!("payload {payload_len}\n"));

    let mut bytes = Vec::with_capacity(header.len() + payload_len);
    bytes.extend_from_slice(header.as_bytes());
    for (name, f) in fields {
        if f.n1() != meta.n1 || f.n2() != meta.n2 {
            return Err(Error::Format(format!(
                "component {name} has grid {}x{}, header says {}x{}",
                f.n1(),
                f.n2(),
                meta.n1,
                meta.n2
            )));
        }
        for i in 0..meta.n1 {
            for &v in f.row(i as isize) {
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!("component {name}")));
                }
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    let tmp = path.with_extension("ckpt.tmp");
    fs::File::create(&tmp)?.write_all(&bytes)?;
    fs::rename(&tmp, path)?;
    Ok(payload_len as u64)
}

pub fn read_checkpoint(path: &Path) -> Result<(Vec<(String, ScalarField)>, CheckpointMeta)> {
    let mut raw = Vec::new();
    fs::File::open(path)?.read_to_end(&mut raw)?;

    let mut pos = 0usize;
    let mut next_line = |raw: &[u8]| -> Result<String> {
        let start = pos;
        while pos < raw.len() && raw[pos] != b'\n' {
            pos += 1;
        }
        if pos >= raw.len() {
            return Err(Error::Format("truncated header".into()));
        }
        let line = std::str::from_utf8(&raw[start..pos])
            .map_err(|_| Error::Format("non-utf8 header".into()))?
            .to_string();
        pos += 1;
        Ok(line)
    };

    if next_line(&raw)? != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version: u32 = parse_kv(&next_line(&raw)?, "version")?;
    if version > FORMAT_VERSION {
        return Err(Error::Format(format!(
            "version {version} newer than supported {FORMAT_VERSION}"
        )));
    }
    let grid_line = next_line(&raw)?;
    let parts: Vec<&str> = grid_line.split_whitespace().collect();
    if parts.len() != 5 || parts[0] != "grid" {
        return Err(Error::Format("bad grid line".into()));
    }
    let n1: usize = parts[1].parse().map_err(|_| Error::Format("bad n1".into()))?;
    let n2: usize = parts[2].parse().map_err(|_| Error::Format("bad n2".into()))?;
    let l1: f64 = parts[3].parse().map_err(|_| Error::Format("bad l1".into()))?;
    let l2: f64 = parts[4].parse().map_err(|_| Error::Format("bad l2".into()))?;
    let sigma = next_line(&raw)?
        .strip_prefix("sigma ")
        .ok_or_else(|| Error::Format("missing sigma line".into()))?
        .to_string();
    let lambda: f64 = parse_kv(&next_line(&raw)?, "lambda")?;
    let time: f64 = parse_kv(&next_line(&raw)?, "time")?;
    let eos = next_line(&raw)?
        .strip_prefix("eos ")
        .ok_or_else(|| Error::Format("missing eos line".into()))?
        .to_string();
    let comp_line = next_line(&raw)?;
    let parts: Vec<&str> = comp_line.split_whitespace().collect();
    if parts.len() < 2 || parts[0] != "components" {
        return Err(Error::Format("bad components line".into()));
    }
    let n_comp: usize = parts[1]
        .parse()
        .map_err(|_| Error::Format("bad component count".into()))?;
    if parts.len() != 2 + n_comp {
        return Err(Error::Format("component name count mismatch".into()));
    }
    let names: Vec<String> = parts[2..].iter().map(|s| s.to_string()).collect();
    let payload_len: usize = parse_kv(&next_line(&raw)?, "payload")?;
    if payload_len != 8 * n_comp * n1 * n2 {
        return Err(Error::Format(format!(
            "payload length {payload_len} inconsistent with {n_comp} x {n1} x {n2}"
        )));
    }
    if raw.len() - pos != payload_len {
        return Err(Error::Format(format!(
            "payload holds {} bytes, header says {payload_len}",
            raw.len() - pos
        )));
    }

    let meta = CheckpointMeta {
        version,
        n1,
        n2,
        l1,
        l2,
        sigma,
        lambda,
        time,
        eos,
    };
    let grid = meta.grid()?;
    let mut fields = Vec::with_capacity(n_comp);
    for name in names {
        let mut f = ScalarField::zeros(&grid);
        for i in 0..n1 {
            for j in 0..n2 {
                let mut b = [0u8; 8];
                b.copy_from_slice(&raw[pos..pos + 8]);
                pos += 8;
                let v = f64::from_le_bytes(b);
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!("component {name}")));
                }
                f.set(i as isize, j, v);
            }
        }
        fields.push((name, f));
    }
    Ok((fields, meta))
}

fn parse_kv<T: std::str::FromStr>(line: &str, key: &str) -> Result<T> {
    line.strip_prefix(key)
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| Error::Format(format!("bad {key} line: {line}")))
}

/// Write the 7-component state with the canonical component ordering.
pub fn write_state_checkpoint(
    path: &Path,
    state: &StateField,
    grid: &Grid,
    law: &MaterialLaw,
    time: f64,
) -> Result<u64> {
    let meta = CheckpointMeta::new(grid, law, state.lambda, time);
    let comps = state.components();
    let fields: Vec<(&str, &ScalarField)> = COMPONENT_NAMES
        .iter()
        .zip(comps)
        .map(|(n, f)| (*n, f))
        .collect();
    write_checkpoint(path, &fields, &meta)
}

pub fn read_state_checkpoint(path: &Path) -> Result<(StateField, CheckpointMeta)> {
    let (fields, meta) = read_checkpoint(path)?;
    if fields.len() != 7 {
        return Err(Error::Format(format!(
            "state checkpoint needs 7 components, found {}",
            fields.len()
        )));
    }
    for (k, (name, _)) in fields.iter().enumerate() {
        if name != COMPONENT_NAMES[k] {
            return Err(Error::Format(format!(
                "component {k} named {name}, expected {}",
                COMPONENT_NAMES[k]
            )));
        }
    }
    let grid = meta.grid()?;
    let mut state = StateField::zeros(&grid, meta.lambda);
    let mut it = fields.into_iter();
    state.q = it.next().unwrap().1;
    for c in 0..3 {
        state.v[c] = it.next().unwrap().1;
    }
    for c in 0..3 {
        state.h[c] = it.next().unwrap().1;
    }
    // ghosts are left unset so the payload round-trips bit for bit; the
    // solver refreshes them before differencing anyway
    Ok((state, meta))
}

/// CSV with a header row, LF endings and shortest-round-trip floats; the
/// byte stream is a pure function of the rows.
pub fn csv_string(columns: &[&str], rows: &[Vec<f64>]) -> Result<String> {
    let mut out = String::new();
    out.push_str(&columns.join(","));
    out.push('\n');
    for row in rows {
        if row.len() != columns.len() {
            return Err(Error::Format(format!(
                "row has {} entries, header {}",
                row.len(),
                columns.len()
            )));
        }
        let mut first = true;
        for v in row {
            if !v.is_finite() {
                return Err(Error::NonFinite("csv value".into()));
            }
            if !first {
                out.push(',');
            }
            out.push_str(&format!("{v}"));
            first = false;
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_csv(path: &Path, columns: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let s = csv_string(columns, rows)?;
    let tmp = path.with_extension("csv.tmp");
    fs::File::create(&tmp)?.write_all(s.as_bytes())?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path)?;
    parse_csv(&text)
}

pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty csv".into()))?;
    let columns: Vec<String> = header.split(',').map(|s| s.to_string()).collect();
    let mut rows = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::with_capacity(columns.len());
        for cell in line.split(',') {
            row.push(
                cell.parse::<f64>()
                    .map_err(|_| Error::Format(format!("bad csv cell {cell}")))?,
            );
        }
        if row.len() != columns.len() {
            return Err(Error::Format("ragged csv row".into()));
        }
        rows.push(row);
    }
    Ok((columns, rows))
}
