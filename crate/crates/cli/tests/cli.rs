use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mtffm_core::kapteyn::{DesignCoefficients, WaveformParams};
use mtffm_core::metrics::{isr_sampled, rms_bandwidth_direct, MIN_POINTS_PER_RESOLUTION};
use tempfile::TempDir;

fn mtffm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mtffm"))
        .args(args)
        .env_remove("MTFFM_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn read_table(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let header = reader.headers().unwrap().iter().map(String::from).collect();
    let rows = reader
        .records()
        .map(|r| r.unwrap().iter().map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn read_summary(path: &Path) -> HashMap<String, f64> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].to_string(), r[1].parse().unwrap())
        })
        .collect()
}

const SMALL: &str = "T = 1\ndelta_f = 20\nK = 4\nseed = 1\nmax_evals = 60\nmargin = 0.6\n";

#[test]
fn verify_defaults_pass() {
    let out = mtffm(&["verify"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("all 9 identities hold"));
}

#[test]
fn verify_reports_nielsen_value() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "k1.cfg", "z = 0.5\ndelta_f = 20\n");
    let out = mtffm(&["verify", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("PASS nielsen z=0.5: sum 0.062500000000"));
}

#[test]
fn verify_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "v.cfg", "K = 6\nseed = 11\ndelta_f = 40\n");
    let a = mtffm(&["verify", cfg.to_str().unwrap()]);
    let b = mtffm(&["verify", cfg.to_str().unwrap()]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn verify_detects_corrupted_coefficient() {
    let out = mtffm(&["verify", "--corrupt-coefficient", "2"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stdout(&out).contains("FAIL gbf kapteyn identity"));
}

#[test]
fn infeasible_design_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "bad.cfg", "z = 0.8, 0.2\n");
    let out = mtffm(&["design", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("convergence domain"));
}

#[test]
fn malformed_inputs_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "bad.cfg", "K = many\n");
    assert_eq!(mtffm(&["design", cfg.to_str().unwrap()]).status.code(), Some(2));
    let missing = dir.path().join("missing.cfg");
    assert_eq!(mtffm(&["export-waveform", missing.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(mtffm(&["af-surface"]).status.code(), Some(2));
    let ok = write_config(dir.path(), "ok.cfg", "K = 2\ndelta_f = 10\n");
    let out = mtffm(&["af-surface", ok.to_str().unwrap(), "--tau-points", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn design_artifacts_round_trip() {
    let dir = TempDir::new().unwrap();
    let out_dir = dir.path().join("nested").join("out");
    let cfg = write_config(dir.path(), "small.cfg", &format!("{SMALL}output_dir = {}\n", out_dir.display()));
    let out = mtffm(&["design", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let summary = read_summary(&out_dir.join("summary.csv"));
    let (header, z_rows) = read_table(&out_dir.join("design_z.csv"));
    assert_eq!(header, ["k", "z_initial", "z_final"]);
    let z = DesignCoefficients::new(z_rows.iter().map(|r| r[2]).collect()).unwrap();
    let params = WaveformParams::new(1.0, 20.0, z.clone()).unwrap();
    let isr = isr_sampled(&params, MIN_POINTS_PER_RESOLUTION).unwrap();
    assert!((isr.isr_db - summary["final_isr_db"]).abs() < 1e-9);
    assert!((isr.tau_m - summary["final_tau_m_s"]).abs() < 1e-12);
    let beta2 = rms_bandwidth_direct(&z, params.scale()).powi(2);
    assert!((beta2 / summary["final_beta2_direct"] - 1.0).abs() < 1e-9);
    assert!(summary["final_isr_db"] <= summary["initial_isr_db"]);
    assert!((summary["beta2_ratio"] - 1.0).abs() <= 0.1);

    let (_, trace) = read_table(&out_dir.join("trace.csv"));
    let last = trace.last().unwrap();
    assert_eq!(last[0], summary["evals"]);
    assert_eq!(last[1], summary["final_isr_db"]);
    assert!(trace.windows(2).all(|w| w[1][1] <= w[0][1]));
    assert!(trace.iter().all(|r| r[3] <= 1.0 + 1e-12));

    // the ν = 0 row of the AF export matches the ACF export on shared delays
    let (_, acf) = read_table(&out_dir.join("acf.csv"));
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_path(out_dir.join("af_surface.csv")).unwrap();
    let grid: Vec<Vec<f64>> = reader
        .records()
        .skip(1)
        .map(|r| r.unwrap().iter().map(|v| v.parse().unwrap()).collect())
        .collect();
    let taus: Vec<f64> = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(out_dir.join("af_surface.csv"))
        .unwrap()
        .records()
        .next()
        .unwrap()
        .unwrap()
        .iter()
        .skip(1)
        .map(|v| v.parse().unwrap())
        .collect();
    let zero_row = grid.iter().find(|r| r[0] == 0.0).expect("ν = 0 row");
    let step = acf[1][0];
    let mut compared = 0;
    for (tau, chi) in taus.iter().zip(&zero_row[1..]) {
        if *tau < 0.0 {
            continue;
        }
        let idx = (tau / step).round() as usize;
        if (idx as f64 * step - tau).abs() < 1e-12 {
            assert!((chi * chi - acf[idx][2]).abs() < 1e-6, "τ = {tau}");
            compared += 1;
        }
    }
    assert!(compared > 10);

    for name in ["spectrum.csv", "spectrogram.csv", "modulation.csv"] {
        let (_, rows) = read_table(&out_dir.join(name));
        assert!(!rows.is_empty() && rows.iter().all(|r| r.iter().all(|v| v.is_finite())), "{name}");
    }

    let rerun = mtffm(&["verify", out_dir.join("optimized.cfg").to_str().unwrap()]);
    assert_eq!(rerun.status.code(), Some(0), "{}", stdout(&rerun));
}

#[test]
fn output_dir_env_override() {
    let dir = TempDir::new().unwrap();
    let target = dir.path().join("from-env");
    let cfg = write_config(dir.path(), "w.cfg", "K = 3\ndelta_f = 10\noutput_dir = ignored\n");
    let out = Command::new(env!("CARGO_BIN_EXE_mtffm"))
        .args(["export-waveform", cfg.to_str().unwrap()])
        .env("MTFFM_OUTPUT_DIR", &target)
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(target.join("waveform.csv").is_file());
    assert!(!dir.path().join("ignored").exists());
}

#[test]
fn exported_waveform_is_unit_energy() {
    let dir = TempDir::new().unwrap();
    let out_dir = dir.path().join("w");
    let cfg = write_config(dir.path(), "w.cfg", &format!("K = 3\ndelta_f = 10\noutput_dir = {}\n", out_dir.display()));
    assert_eq!(mtffm(&["export-waveform", cfg.to_str().unwrap()]).status.code(), Some(0));
    let (header, rows) = read_table(&out_dir.join("waveform.csv"));
    assert_eq!(header, ["time_s", "re", "im", "modulation_hz", "phase_rad"]);
    assert_eq!(rows.len(), 160);
    assert!(rows.iter().all(|r| ((r[1] * r[1] + r[2] * r[2]).sqrt() - 1.0).abs() < 1e-14));
    assert!(rows.iter().all(|r| r[3].abs() <= 5.0 + 1e-9));
    let (_, lines) = read_table(&out_dir.join("lines.csv"));
    let energy: f64 = lines.iter().map(|r| r[2] * r[2] + r[3] * r[3]).sum();
    assert!((energy - 1.0).abs() < 1e-9);
}

#[test]
fn single_point_surface_is_unity() {
    let dir = TempDir::new().unwrap();
    let out_dir = dir.path().join("af");
    let cfg = write_config(dir.path(), "a.cfg", &format!("K = 5\ndelta_f = 30\noutput_dir = {}\n", out_dir.display()));
    let out = mtffm(&["af-surface", cfg.to_str().unwrap(), "--tau-points", "1", "--nu-points", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(out_dir.join("af_surface.csv")).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 2);
    let value: f64 = rows[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!((value - 1.0).abs() < 1e-9);
}

#[test]
fn tbp_200_surface_is_a_thumbtack() {
    let dir = TempDir::new().unwrap();
    let out_dir = dir.path().join("af");
    let cfg = write_config(dir.path(), "p.cfg", &format!("K = 32\nseed = 0\ndelta_f = 200\noutput_dir = {}\n", out_dir.display()));
    let out = mtffm(&["af-surface", cfg.to_str().unwrap(), "--tau-points", "65", "--nu-points", "33"]);
    assert_eq!(out.status.code(), Some(0));
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_path(out_dir.join("af_surface.csv")).unwrap();
    let rows: Vec<Vec<f64>> = reader
        .records()
        .map(|r| r.unwrap().iter().map(|v| v.parse().unwrap_or(f64::NAN)).collect())
        .collect();
    let taus = &rows[0][1..];
    let mut peak = 0.0f64;
    let mut off = 0.0f64;
    for row in &rows[1..] {
        let nu = row[0];
        for (tau, chi) in taus.iter().zip(&row[1..]) {
            peak = peak.max(*chi);
            // mainlobe: zero delay and Doppler inside the first sinc null
            if !(*tau == 0.0 && nu.abs() < 1.0) {
                off = off.max(*chi);
            }
        }
    }
    assert!((peak - 1.0).abs() < 1e-6);
    assert!(20.0 * (off / peak).log10() <= -10.0, "off-mainlobe level {off}");
}
