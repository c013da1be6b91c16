//! CSV writers. Floats are written in shortest round-trip form so every
//! value re-parses to the same `f64`.

use std::path::{Path, PathBuf};

use mtffm_core::special::FourierLineCoefficients;
use mtffm_core::waveform::AmbiguitySurface;

use crate::error::CliError;

pub fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

pub fn write_table<I>(path: &Path, header: &[&str], rows: I) -> Result<PathBuf, CliError>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(path.to_path_buf())
}

/// Two-column `key,value` record.
pub fn write_summary(path: &Path, entries: &[(&str, f64)]) -> Result<PathBuf, CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["key", "value"])?;
    for (key, value) in entries {
        w.write_record([key.to_string(), value.to_string()])?;
    }
    w.flush()?;
    Ok(path.to_path_buf())
}

/// `|χ|` matrix: the header row holds the delays, the first column the Doppler shifts.
pub fn write_surface(path: &Path, surface: &AmbiguitySurface) -> Result<PathBuf, CliError> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["nu_hz\\tau_s".to_string()];
    header.extend(surface.tau_axis.iter().map(|t| t.to_string()));
    w.write_record(&header)?;
    for (row, nu) in surface.nu_axis.iter().enumerate() {
        let mut record = vec![nu.to_string()];
        record.extend((0..surface.tau_axis.len()).map(|col| surface.get(row, col).norm().to_string()));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(path.to_path_buf())
}

pub fn write_lines(path: &Path, lines: &FourierLineCoefficients) -> Result<PathBuf, CliError> {
    let t = lines.duration();
    write_table(
        path,
        &["line", "freq_hz", "re", "im"],
        lines.iter().map(|(l, c)| vec![l as f64, l as f64 / t, c.re, c.im]),
    )
}
