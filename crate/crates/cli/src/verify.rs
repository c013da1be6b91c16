//! Identity suite for one design.

use std::f64::consts::PI;

use mtffm_core::kapteyn::{invert_kepler, kapteyn_coefficients, DesignCoefficients, DEFAULT_TRUNCATION_TOL};
use mtffm_core::metrics::{rms_bandwidth_direct, rms_bandwidth_spectral};
use mtffm_core::special::{bessel_j, gbf, GbfArgument};
use mtffm_core::waveform::{
    ambiguity_closed, ambiguity_numeric, default_line_cap, snap_delay, symmetric_axis, synthesize, waveform_lines,
};

use crate::config::DesignConfig;
use crate::error::CliError;

/// Offset added to the selected coefficient by `--corrupt-coefficient`.
pub const CORRUPTION: f64 = 1e-3;

const KEPLER_SAMPLES: usize = 256;
const AF_GRID: usize = 16;
const GBF_ORDERS_CHECKED: usize = 16;
/// Minimum oversampling of the waveform behind the numeric AF oracle.
const AF_ORACLE_OVERSAMPLING: f64 = 32.0;

pub struct Check {
    pub name: String,
    pub value: String,
    pub error: f64,
    pub tol: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.error <= self.tol
    }
}

/// `Σ_m (J_m(mz)/m)²` summed until five consecutive terms fall below 1e-12.
pub fn nielsen_sum(z: f64) -> Result<f64, CliError> {
    let mut sum = 0.0;
    let mut small = 0;
    let mut m = 0u32;
    while small < 5 {
        m += 1;
        let term = bessel_j(m, m as f64 * z)? / m as f64;
        sum += term * term;
        small = if term.abs() < 1e-12 { small + 1 } else { 0 };
    }
    Ok(sum)
}

pub fn run_checks(cfg: &DesignConfig, corrupt: Option<usize>) -> Result<Vec<Check>, CliError> {
    let design = cfg.initial_design()?;
    let params = cfg.params(design.clone())?;
    let z = design.as_slice();
    let mut checks = Vec::new();

    let nielsen_points: Vec<f64> = if z.len() == 1 { vec![z[0].abs()] } else { vec![0.1, 0.5, 0.9] };
    for zn in nielsen_points {
        let sum = nielsen_sum(zn)?;
        checks.push(Check {
            name: format!("nielsen z={zn}"),
            value: format!("sum {sum:.12} expected {:.12}", zn * zn / 4.0),
            error: (sum - zn * zn / 4.0).abs(),
            tol: 1e-8,
        });
    }

    let expansion = kapteyn_coefficients(&design, DEFAULT_TRUNCATION_TOL)?;
    let mut b = expansion.coefficients().to_vec();
    if let Some(m) = corrupt {
        if m == 0 || m > b.len() {
            return Err(CliError::Config(format!("cannot corrupt b_{m}: expansion has {} terms", b.len())));
        }
        b[m - 1] += CORRUPTION;
    }

    // 4 Σ (J_m/m)² with J_m = m b_m / 2
    let identity: f64 = b.iter().map(|v| v * v).sum();
    checks.push(Check {
        name: "gbf kapteyn identity".into(),
        value: format!("4·Σ(J_m/m)² = {identity:.12} vs Σz² = {:.12} (M = {})", design.sum_of_squares(), b.len()),
        error: (identity - design.sum_of_squares()).abs(),
        tol: 1e-8,
    });

    let arg = GbfArgument::new(z.to_vec())?;
    let gap = b
        .iter()
        .take(GBF_ORDERS_CHECKED)
        .enumerate()
        .map(|(i, bm)| {
            let m = (i + 1) as f64;
            (bm - 2.0 * gbf(i as i64 + 1, &arg.scaled(m)) / m).abs()
        })
        .fold(0.0, f64::max);
    checks.push(Check {
        name: "series vs direct gbf".into(),
        value: format!("max |b_m - 2J_m/m| over m ≤ {}", GBF_ORDERS_CHECKED.min(b.len())),
        error: gap,
        tol: 1e-12,
    });

    let kepler = (0..KEPLER_SAMPLES)
        .map(|i| {
            let psi = 2.0 * PI * (i as f64 + 0.5) / KEPLER_SAMPLES as f64;
            let series: f64 = b.iter().enumerate().map(|(j, bm)| bm * ((j + 1) as f64 * psi).sin()).sum();
            invert_kepler(psi, &design).map(|theta| (series - (theta - psi)).abs())
        })
        .try_fold(0.0f64, |acc, e| e.map(|e| acc.max(e)))?;
    checks.push(Check {
        name: "kepler oracle".into(),
        value: format!("sup |series - root| over {KEPLER_SAMPLES} angles"),
        error: kepler,
        tol: 1e-6,
    });

    let oracle = synthesize(&params, cfg.sample_rate.max(AF_ORACLE_OVERSAMPLING * cfg.bandwidth))?;
    let lines = waveform_lines(&oracle, default_line_cap(&params))?;
    let mut af_gap = 0.0f64;
    for nu in symmetric_axis(10.0 / cfg.duration, AF_GRID) {
        for tau in symmetric_axis(cfg.duration, AF_GRID) {
            let tau = snap_delay(&oracle, tau);
            af_gap = af_gap.max((ambiguity_closed(&lines, tau, nu) - ambiguity_numeric(&oracle, tau, nu)).norm());
        }
    }
    checks.push(Check {
        name: "closed vs numeric af".into(),
        value: format!("max |difference| on {AF_GRID}×{AF_GRID} grid"),
        error: af_gap,
        tol: 1e-5,
    });

    let a2 = params.scale() * params.scale();
    let direct = rms_bandwidth_direct(&design, params.scale()).powi(2);
    let series = 2.0 * PI * PI * a2 * identity;
    let spectral = rms_bandwidth_spectral(&synthesize(&params, cfg.sample_rate)?).powi(2);
    if direct > 0.0 {
        checks.push(Check {
            name: "beta2 kapteyn vs direct".into(),
            value: format!("{series:.9e} vs {direct:.9e}"),
            error: (series / direct - 1.0).abs(),
            tol: 1e-8,
        });
        checks.push(Check {
            name: "beta2 spectral vs direct".into(),
            value: format!("{spectral:.9e} vs {direct:.9e}"),
            error: (spectral / direct - 1.0).abs(),
            tol: 5e-3,
        });
    }
    Ok(checks)
}

pub fn verify(cfg: &DesignConfig, corrupt: Option<usize>) -> Result<(), CliError> {
    let checks = run_checks(cfg, corrupt)?;
    let design: DesignCoefficients = cfg.initial_design()?;
    println!(
        "design K = {}, Σk|z_k| = {:.6}, TBP = {}",
        design.len(),
        design.weighted_sum(),
        cfg.duration * cfg.bandwidth
    );
    let mut failures = 0;
    for c in &checks {
        if !c.passed() {
            failures += 1;
        }
        println!(
            "{} {}: {} (error {:.3e}, tol {:.0e})",
            if c.passed() { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.error,
            c.tol
        );
    }
    if failures > 0 {
        return Err(CliError::Verification(format!("{failures} of {} identities failed", checks.len())));
    }
    println!("all {} identities hold", checks.len());
    Ok(())
}
