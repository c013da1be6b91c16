use mtffm_core::kapteyn::{midpoint_grid, modulation_function, phase_function, WaveformParams};
use mtffm_core::metrics::{
    acf_profile, isr_from_profile, rms_bandwidth_direct, rms_bandwidth_kapteyn, rms_bandwidth_spectral,
    MIN_POINTS_PER_RESOLUTION,
};
use mtffm_core::optimizer::optimize;
use mtffm_core::waveform::{design_lines, spectrogram, spectrum, symmetric_axis, synthesize, AmbiguitySurface};

use crate::config::DesignConfig;
use crate::error::CliError;
use crate::output::{prepare_dir, write_lines, write_summary, write_surface, write_table};

/// Delay points on `[-T, T]` and Doppler points on `±10/T` for the design AF export.
pub const DESIGN_AF_TAU_POINTS: usize = 129;
pub const DESIGN_AF_NU_POINTS: usize = 65;
pub const DESIGN_AF_NU_SPAN: f64 = 10.0;

/// Spectrum samples per line spacing `1/T`.
const SPECTRUM_POINTS_PER_LINE: f64 = 4.0;

fn spectrogram_window(samples: usize) -> usize {
    (samples / 25).next_power_of_two().clamp(16, samples)
}

/// `β` via the three routes, squared.
fn beta_squared(params: &WaveformParams, sample_rate: f64) -> Result<[f64; 3], CliError> {
    let wf = synthesize(params, sample_rate)?;
    Ok([
        rms_bandwidth_direct(params.coeffs(), params.scale()).powi(2),
        rms_bandwidth_kapteyn(params.expansion(), params.scale()).powi(2),
        rms_bandwidth_spectral(&wf).powi(2),
    ])
}

pub fn design(cfg: &DesignConfig) -> Result<(), CliError> {
    let out = cfg.resolved_output_dir();
    prepare_dir(&out)?;
    let init = cfg.initial_design()?;
    let start = cfg.params(init.clone())?;
    println!(
        "optimizing K = {} at TBP = {} (budget {} evaluations)",
        init.len(),
        start.time_bandwidth(),
        cfg.max_evals
    );
    let trace = optimize(&init, &start, &cfg.optimizer())?;
    let best = cfg.params(trace.best_z.clone())?;

    write_table(
        &out.join("design_z.csv"),
        &["k", "z_initial", "z_final"],
        init.as_slice()
            .iter()
            .zip(trace.best_z.as_slice())
            .enumerate()
            .map(|(i, (a, b))| vec![(i + 1) as f64, *a, *b]),
    )?;
    write_table(
        &out.join("trace.csv"),
        &["evals", "isr_db", "violation", "weighted_sum"],
        trace.iterations.iter().map(|r| vec![r.evals as f64, r.isr_db, r.violation, r.weighted_sum]),
    )?;

    let profile_start = acf_profile(&start, MIN_POINTS_PER_RESOLUTION);
    let profile_best = acf_profile(&best, MIN_POINTS_PER_RESOLUTION);
    write_table(
        &out.join("acf.csv"),
        &["tau_s", "initial_power", "final_power"],
        profile_best
            .delays()
            .zip(profile_start.power.iter().zip(&profile_best.power))
            .map(|(tau, (a, b))| vec![tau, *a, *b]),
    )?;

    let lines_start = design_lines(&start)?;
    let lines_best = design_lines(&best)?;
    let surface = AmbiguitySurface::closed(
        &lines_best,
        &symmetric_axis(cfg.duration, DESIGN_AF_TAU_POINTS),
        &symmetric_axis(DESIGN_AF_NU_SPAN / cfg.duration, DESIGN_AF_NU_POINTS),
    );
    write_surface(&out.join("af_surface.csv"), &surface)?;

    let half = (SPECTRUM_POINTS_PER_LINE * cfg.bandwidth * cfg.duration).ceil() as usize;
    let freqs = symmetric_axis(half as f64 / (SPECTRUM_POINTS_PER_LINE * cfg.duration), 2 * half + 1);
    let (s0, s1) = (spectrum(&lines_start, &freqs), spectrum(&lines_best, &freqs));
    write_table(
        &out.join("spectrum.csv"),
        &["freq_hz", "initial_power", "final_power"],
        freqs.iter().enumerate().map(|(i, f)| vec![*f, s0[i].norm_sqr(), s1[i].norm_sqr()]),
    )?;

    let wf = synthesize(&best, cfg.sample_rate)?;
    let window = spectrogram_window(wf.len());
    let sg = spectrogram(&wf, window, (window / 8).max(1))?;
    write_table(
        &out.join("spectrogram.csv"),
        &["time_s", "freq_hz", "power"],
        sg.times.iter().zip(&sg.power).flat_map(|(t, row)| {
            sg.freqs.iter().zip(row).map(move |(f, p)| vec![*t, *f, *p])
        }),
    )?;

    let t = midpoint_grid(cfg.duration, wf.len());
    let columns = [
        modulation_function(&start, &t),
        modulation_function(&best, &t),
        phase_function(&start, &t),
        phase_function(&best, &t),
    ];
    write_table(
        &out.join("modulation.csv"),
        &["time_s", "initial_modulation_hz", "final_modulation_hz", "initial_phase_rad", "final_phase_rad"],
        t.iter().enumerate().map(|(i, ti)| {
            let mut row = vec![*ti];
            row.extend(columns.iter().map(|c| c[i]));
            row
        }),
    )?;

    let isr_start = isr_from_profile(&profile_start)?;
    let isr_best = isr_from_profile(&profile_best)?;
    let b0 = beta_squared(&start, cfg.sample_rate)?;
    let b1 = beta_squared(&best, cfg.sample_rate)?;
    let summary = [
        ("T", cfg.duration),
        ("delta_f", cfg.bandwidth),
        ("K", init.len() as f64),
        ("seed", cfg.seed as f64),
        ("delta", cfg.delta),
        ("evals", trace.evals as f64),
        ("initial_isr_db", trace.initial_isr_db),
        ("final_isr_db", trace.final_isr_db),
        ("improvement_db", trace.improvement_db()),
        ("initial_tau_m_s", isr_start.tau_m),
        ("final_tau_m_s", isr_best.tau_m),
        ("initial_weighted_sum", init.weighted_sum()),
        ("final_weighted_sum", trace.best_z.weighted_sum()),
        ("initial_scale_hz", start.scale()),
        ("final_scale_hz", best.scale()),
        ("initial_beta2_direct", b0[0]),
        ("initial_beta2_kapteyn", b0[1]),
        ("initial_beta2_spectral", b0[2]),
        ("final_beta2_direct", b1[0]),
        ("final_beta2_kapteyn", b1[1]),
        ("final_beta2_spectral", b1[2]),
        ("beta2_ratio", b1[0] / b0[0]),
    ];
    write_summary(&out.join("summary.csv"), &summary)?;
    std::fs::write(out.join("optimized.cfg"), cfg.to_text_with(trace.best_z.as_slice()))?;

    println!(
        "ISR {:+.3} dB -> {:+.3} dB (improvement {:.3} dB) after {} evaluations",
        trace.initial_isr_db,
        trace.final_isr_db,
        trace.improvement_db(),
        trace.evals
    );
    println!(
        "beta^2 [rad^2/s^2] direct {:.6e}, kapteyn {:.6e}, spectral {:.6e} (ratio to initial {:.4})",
        b1[0],
        b1[1],
        b1[2],
        b1[0] / b0[0]
    );
    println!("wrote artifacts to {}", out.display());
    Ok(())
}

pub fn af_surface(cfg: &DesignConfig, tau_points: usize, nu_points: usize, nu_max: f64) -> Result<(), CliError> {
    if tau_points == 0 || nu_points == 0 {
        return Err(CliError::Config("grid needs at least one point per axis".into()));
    }
    if !(nu_max >= 0.0 && nu_max.is_finite()) {
        return Err(CliError::Config(format!("nu-max must be finite and non-negative, got {nu_max}")));
    }
    let out = cfg.resolved_output_dir();
    prepare_dir(&out)?;
    let params = cfg.params(cfg.initial_design()?)?;
    let lines = design_lines(&params)?;
    let surface = AmbiguitySurface::closed(
        &lines,
        &symmetric_axis(cfg.duration, tau_points),
        &symmetric_axis(nu_max, nu_points),
    );
    let path = write_surface(&out.join("af_surface.csv"), &surface)?;
    let (row, col, peak) = surface.peak();
    println!(
        "{}×{} surface, peak |chi| = {peak:.9} at tau = {} s, nu = {} Hz",
        nu_points, tau_points, surface.tau_axis[col], surface.nu_axis[row]
    );
    println!("wrote {}", path.display());
    Ok(())
}

pub fn export_waveform(cfg: &DesignConfig) -> Result<(), CliError> {
    let out = cfg.resolved_output_dir();
    prepare_dir(&out)?;
    let params = cfg.params(cfg.initial_design()?)?;
    let wf = synthesize(&params, cfg.sample_rate)?;
    let times = wf.times();
    let modulation = modulation_function(&params, &times);
    let phase = phase_function(&params, &times);
    let path = write_table(
        &out.join("waveform.csv"),
        &["time_s", "re", "im", "modulation_hz", "phase_rad"],
        wf.samples()
            .iter()
            .enumerate()
            .map(|(i, s)| vec![times[i], s.re, s.im, modulation[i], phase[i]]),
    )?;
    let lines = write_lines(&out.join("lines.csv"), &design_lines(&params)?)?;
    println!("{} samples at {} Hz, scale A = {} Hz", wf.len(), wf.sample_rate(), params.scale());
    println!("wrote {} and {}", path.display(), lines.display());
    Ok(())
}
