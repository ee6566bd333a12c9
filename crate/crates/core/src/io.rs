//! Table and report serialization: CSV for dense data, JSON envelopes for
//! metadata. Formatting is pinned so identical inputs produce byte-identical
//! artifacts.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64 as C64;
use serde::Serialize;
use thiserror::Error;

use crate::kernel::KernelTable;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

fn fmt_float(v: f64) -> String {
    format!("{v:.17e}")
}

/// One row per (target, source) pair: indices, real part, imaginary part,
/// magnitude.
pub fn write_kernel_csv<W: Write>(table: &KernelTable, sink: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(sink);
    let dim = table.window.dimension();
    let mut header: Vec<String> = Vec::new();
    for j in 0..dim {
        header.push(format!("target_{}", j + 1));
    }
    for j in 0..dim {
        header.push(format!("source_{}", j + 1));
    }
    header.extend(["re".into(), "im".into(), "magnitude".into()]);
    w.write_record(&header)?;
    let sites = table.window.sites();
    for (t_idx, t) in sites.iter().enumerate() {
        for (s_idx, s) in sites.iter().enumerate() {
            let v = table.entry_flat(t_idx, s_idx);
            let mut rec: Vec<String> = Vec::with_capacity(2 * dim + 3);
            rec.extend(t.iter().map(|x| x.to_string()));
            rec.extend(s.iter().map(|x| x.to_string()));
            rec.push(fmt_float(v.re));
            rec.push(fmt_float(v.im));
            rec.push(fmt_float(v.norm()));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct KernelEnvelope<'a> {
    pub schema_version: u32,
    pub dimension: usize,
    pub lattice: &'a crate::kernel::LatticeKind,
    pub window: &'a crate::kernel::Window,
    pub time: f64,
    pub convention: String,
    pub drive_summary: &'a str,
    pub field_phases: &'a [f64],
    pub amplitudes: Vec<(f64, f64)>,
    pub phase_constraint: Option<crate::kernel::PhaseConstraintCheck>,
    pub truncation_warning: Option<&'a str>,
    pub csv_file: Option<String>,
}

impl<'a> KernelEnvelope<'a> {
    pub fn new(table: &'a KernelTable, csv_file: Option<String>) -> Self {
        KernelEnvelope {
            schema_version: SCHEMA_VERSION,
            dimension: table.dimension,
            lattice: &table.lattice,
            window: &table.window,
            time: table.time,
            convention: table.convention.to_string(),
            drive_summary: &table.drive_summary,
            field_phases: &table.field_phases,
            amplitudes: table.amplitudes.iter().map(|f| (f.re, f.im)).collect(),
            phase_constraint: table.phase_constraint,
            truncation_warning: table.truncation_warning.as_deref(),
            csv_file,
        }
    }
}

/// Atomic file write: temp file in the target directory, then rename.
pub fn write_atomically(path: &Path, contents: &[u8]) -> Result<(), IoError> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "artifact".into())
    ));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn kernel_csv_string(table: &KernelTable) -> Result<String, IoError> {
    let mut buf = Vec::new();
    write_kernel_csv(table, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

pub fn envelope_json_string(table: &KernelTable, csv_file: Option<String>) -> Result<String, IoError> {
    let env = KernelEnvelope::new(table, csv_file);
    let mut s = serde_json::to_string_pretty(&env)?;
    s.push('\n');
    Ok(s)
}

/// Columnar probability data: one row per target site with `|U[target, source]|^2`
/// for a fixed source, plot-ready.
pub fn probability_map_csv(table: &KernelTable, source: &[i64]) -> Result<String, IoError> {
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let dim = table.window.dimension();
        let mut header: Vec<String> = (0..dim).map(|j| format!("site_{}", j + 1)).collect();
        header.push("probability".into());
        w.write_record(&header)?;
        let s_idx = table
            .window
            .flatten(source)
            .ok_or_else(|| csv_err(format!("source {source:?} outside window")))?;
        for (t_idx, t) in table.window.sites().iter().enumerate() {
            let mut rec: Vec<String> = t.iter().map(|x| x.to_string()).collect();
            rec.push(fmt_float(table.entry_flat(t_idx, s_idx).norm_sqr()));
            w.write_record(&rec)?;
        }
        w.flush()?;
    }
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

/// Wavepacket snapshot: per-site complex amplitude and probability.
pub fn state_csv(window: &crate::kernel::Window, state: &[C64]) -> Result<String, IoError> {
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let dim = window.dimension();
        let mut header: Vec<String> = (0..dim).map(|j| format!("site_{}", j + 1)).collect();
        header.extend(["re".into(), "im".into(), "probability".into()]);
        w.write_record(&header)?;
        for (idx, site) in window.sites().iter().enumerate() {
            let mut rec: Vec<String> = site.iter().map(|x| x.to_string()).collect();
            rec.push(fmt_float(state[idx].re));
            rec.push(fmt_float(state[idx].im));
            rec.push(fmt_float(state[idx].norm_sqr()));
            w.write_record(&rec)?;
        }
        w.flush()?;
    }
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

fn csv_err(msg: String) -> csv::Error {
    csv::Error::from(std::io::Error::new(std::io::ErrorKind::InvalidInput, msg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drive::DriveProtocol;
    use crate::kernel::{kernel_1d, AxisWindow, Convention};

    #[test]
    fn csv_is_deterministic() {
        let drive = DriveProtocol::chain_constant(C64::new(1.0, 0.0), 0.3);
        let u = kernel_1d(&drive, 0.7, AxisWindow::symmetric(3), Convention::ForwardSchrodinger)
            .unwrap();
        let a = kernel_csv_string(&u).unwrap();
        let b = kernel_csv_string(&u).unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with("target_1,source_1,re,im,magnitude\n"));
    }

    #[test]
    fn envelope_carries_metadata() {
        let drive = DriveProtocol::chain_constant(C64::new(1.0, 0.0), 0.0);
        let u = kernel_1d(&drive, 1.0, AxisWindow::symmetric(2), Convention::PaperMm).unwrap();
        let s = envelope_json_string(&u, Some("kernel.csv".into())).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["convention"], "paper-mm");
        assert_eq!(v["csv_file"], "kernel.csv");
    }

    #[test]
    fn probability_map_rows() {
        let drive = DriveProtocol::chain_constant(C64::new(1.0, 0.0), 0.0);
        let u = kernel_1d(&drive, 0.0, AxisWindow::symmetric(2), Convention::ForwardSchrodinger)
            .unwrap();
        let s = probability_map_csv(&u, &[0]).unwrap();
        let lines: Vec<&str> = s.trim().lines().collect();
        assert_eq!(lines.len(), 6); // header + 5 sites
        assert!(lines[3].starts_with("0,"));
        assert!(lines[3].contains("1.00000000000000000e0"));
    }
}
