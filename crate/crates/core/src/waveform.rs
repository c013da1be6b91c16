//! Sampled MT-FFM waveforms, their line spectrum, and the narrowband
//! ambiguity function evaluated both in closed form and by direct summation.

use core::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::kapteyn::WaveformParams;
use crate::special::{fourier_line_coefficients_adaptive, lines_from_envelope, FourierLineCoefficients};

/// Minimum synthesis rate as a multiple of the swept bandwidth.
pub const MIN_OVERSAMPLING: f64 = 8.0;

/// Default synthesis rate as a multiple of the swept bandwidth.
pub const DEFAULT_OVERSAMPLING: f64 = 16.0;

/// Line-order cap as a multiple of `⌈TΔf⌉`.
pub const LINE_ORDER_CAP_FACTOR: usize = 16;

/// Unnormalized `sin x / x`.
#[inline]
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Complex baseband samples on the cell midpoints `t_i = -T/2 + (i + ½)T/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledWaveform {
    samples: Vec<Complex64>,
    duration: f64,
}

impl SampledWaveform {
    pub fn from_samples(samples: Vec<Complex64>, duration: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Precondition("waveform needs at least one sample".into()));
        }
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::Domain(format!("duration must be positive, got {duration}")));
        }
        Ok(Self { samples, duration })
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    /// Sample spacing `T/N`.
    pub fn sample_interval(&self) -> f64 {
        self.duration / self.samples.len() as f64
    }

    /// Effective rate `N/T`, at least the requested synthesis rate.
    pub fn sample_rate(&self) -> f64 {
        self.samples.len() as f64 / self.duration
    }

    pub fn time(&self, index: usize) -> f64 {
        -0.5 * self.duration + (index as f64 + 0.5) * self.sample_interval()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }

    /// `Σ |s_i|² Δt`.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() * self.sample_interval()
    }

    /// Phase-difference frequency estimate `(t, f)` between consecutive samples.
    pub fn instantaneous_frequency(&self) -> Vec<(f64, f64)> {
        let dt = self.sample_interval();
        self.samples
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let t = self.time(i) + 0.5 * dt;
                (t, (w[1] * w[0].conj()).arg() / (2.0 * PI * dt))
            })
            .collect()
    }
}

/// `s_i = e^{jφ(t_i)}/√T` on `N = ⌈T·f_s⌉` midpoint samples.
pub fn synthesize(params: &WaveformParams, sample_rate: f64) -> Result<SampledWaveform> {
    let floor = MIN_OVERSAMPLING * params.bandwidth();
    if !(sample_rate >= floor) {
        return Err(Error::Precondition(format!(
            "sample rate {sample_rate} Hz is below {MIN_OVERSAMPLING}·Δf = {floor} Hz"
        )));
    }
    let duration = params.duration();
    let n = (duration * sample_rate - 1e-9).ceil() as usize;
    let t0 = -0.5 * duration + 0.5 * duration / n as f64;
    let amplitude = 1.0 / duration.sqrt();
    let samples = params
        .phase_on_grid(t0, n)
        .into_iter()
        .map(|p| Complex64::from_polar(amplitude, p))
        .collect();
    SampledWaveform::from_samples(samples, duration)
}

/// Default line-order cap `16⌈TΔf⌉`.
pub fn default_line_cap(params: &WaveformParams) -> usize {
    LINE_ORDER_CAP_FACTOR * params.time_bandwidth().ceil().max(1.0) as usize
}

/// Adaptive line expansion straight from the analytic phase, sampled on
/// `4L + 4` midpoints for the default cap `L` so no sample rate limits it.
pub fn design_lines(params: &WaveformParams) -> Result<FourierLineCoefficients> {
    let cap = default_line_cap(params);
    let n = 4 * cap + 4;
    let duration = params.duration();
    let phase = params.phase_on_grid(-0.5 * duration + 0.5 * duration / n as f64, n);
    fourier_line_coefficients_adaptive(&phase, duration, cap)
}

/// Adaptive line expansion of a sampled waveform (order chosen to capture
/// `1 - 1e-10` of the energy, capped at `order_cap`).
pub fn waveform_lines(wf: &SampledWaveform, order_cap: usize) -> Result<FourierLineCoefficients> {
    let root_t = wf.duration().sqrt();
    let envelope = wf.samples().iter().map(|s| s * root_t).collect();
    lines_from_envelope(envelope, wf.duration(), order_cap)
}

/// `S(f) = √T Σ_ℓ c_ℓ sinc(πT(f - ℓ/T))` at each frequency in Hz.
pub fn spectrum(lines: &FourierLineCoefficients, f_grid: &[f64]) -> Vec<Complex64> {
    let t = lines.duration();
    let root_t = t.sqrt();
    f_grid
        .iter()
        .map(|&f| {
            lines
                .iter()
                .map(|(l, c)| c * sinc(PI * t * (f - l as f64 / t)))
                .sum::<Complex64>()
                * root_t
        })
        .collect()
}

/// Closed-form narrowband AF from the line expansion:
///
/// ```text
/// χ(τ,ν) = ((T-|τ|)/T) Σ_{ℓ,ℓ'} c_ℓ c*_ℓ' e^{-jπ(ℓ+ℓ')τ/T} sinc(π(T-|τ|)(ν + (ℓ-ℓ')/T))
/// ```
///
/// Zero outside `|τ| ≤ T`.
pub fn ambiguity_closed(lines: &FourierLineCoefficients, tau: f64, nu: f64) -> Complex64 {
    let t = lines.duration();
    let overlap = t - tau.abs();
    if overlap <= 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let l = lines.max_order() as i64;
    // sinc depends only on ℓ - ℓ' ∈ [-2L, 2L]
    let kernel: Vec<f64> = (-2 * l..=2 * l)
        .map(|d| sinc(PI * overlap * (nu + d as f64 / t)))
        .collect();
    // c_ℓ e^{-jπℓτ/T} and c*_ℓ' e^{-jπℓ'τ/T}
    let rotated: Vec<Complex64> = lines
        .iter()
        .map(|(line, c)| c * Complex64::cis(-PI * line as f64 * tau / t))
        .collect();
    let counter: Vec<Complex64> = lines
        .iter()
        .map(|(line, c)| (c * Complex64::cis(PI * line as f64 * tau / t)).conj())
        .collect();
    let width = rotated.len();
    let mut total = Complex64::new(0.0, 0.0);
    for (i, a) in rotated.iter().enumerate() {
        // kernel index of ℓ - ℓ' for ℓ' = -L..L runs downward from i + 2L
        let window = &kernel[i..i + width];
        let inner: Complex64 = counter
            .iter()
            .zip(window.iter().rev())
            .map(|(b, &k)| b * k)
            .sum();
        total += a * inner;
    }
    total * (overlap / t)
}

/// Zero-Doppler cut `R(τ) = χ(τ, 0)`.
pub fn acf(lines: &FourierLineCoefficients, tau: f64) -> Complex64 {
    ambiguity_closed(lines, tau, 0.0)
}

/// Nearest delay representable as an even multiple of the sample interval.
pub fn snap_delay(wf: &SampledWaveform, tau: f64) -> f64 {
    2.0 * half_shift(wf, tau) as f64 * wf.sample_interval()
}

fn half_shift(wf: &SampledWaveform, tau: f64) -> i64 {
    (tau / (2.0 * wf.sample_interval())).round() as i64
}

/// Direct evaluation of `∫ s(t-τ/2) s*(t+τ/2) e^{j2πνt} dt` from samples.
///
/// `τ` is snapped to `2pΔt` (see [`snap_delay`]) so both copies shift by
/// whole samples. The sum over the overlap is a composite midpoint rule; an
/// Euler–Maclaurin end correction with one-sided derivative stencils raises
/// it to fourth order.
pub fn ambiguity_numeric(wf: &SampledWaveform, tau: f64, nu: f64) -> Complex64 {
    let n = wf.len() as i64;
    let p = half_shift(wf, tau);
    let dt = wf.sample_interval();
    let lo = p.abs();
    let hi = n - 1 - p.abs();
    if hi < lo {
        return Complex64::new(0.0, 0.0);
    }
    let s = wf.samples();
    let term = |j: i64| {
        s[(j - p) as usize] * s[(j + p) as usize].conj() * Complex64::cis(2.0 * PI * nu * wf.time(j as usize))
    };
    let mut sum: Complex64 = (lo..=hi).map(term).sum();
    if hi - lo >= 2 {
        let right = term(hi) * 2.0 - term(hi - 1) * 3.0 + term(hi - 2);
        let left = term(lo) * 2.0 - term(lo + 1) * 3.0 + term(lo + 2);
        sum += (right + left) / 24.0;
    }
    sum * dt
}

/// Sampled AF with rows indexed by Doppler and columns by delay.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbiguitySurface {
    pub tau_axis: Vec<f64>,
    pub nu_axis: Vec<f64>,
    /// Row-major `nu_axis.len() × tau_axis.len()`.
    pub values: Vec<Complex64>,
}

impl AmbiguitySurface {
    /// Closed-form surface over the given axes.
    pub fn closed(lines: &FourierLineCoefficients, tau_axis: &[f64], nu_axis: &[f64]) -> Self {
        let values = nu_axis
            .iter()
            .flat_map(|&nu| tau_axis.iter().map(move |&tau| ambiguity_closed(lines, tau, nu)))
            .collect();
        Self { tau_axis: tau_axis.to_vec(), nu_axis: nu_axis.to_vec(), values }
    }

    pub fn get(&self, nu_index: usize, tau_index: usize) -> Complex64 {
        self.values[nu_index * self.tau_axis.len() + tau_index]
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    /// `(nu_index, tau_index, |χ|)` of the largest magnitude.
    pub fn peak(&self) -> (usize, usize, f64) {
        let cols = self.tau_axis.len();
        let (idx, mag) = self
            .values
            .iter()
            .map(|v| v.norm())
            .enumerate()
            .fold((0, f64::MIN), |best, (i, m)| if m > best.1 { (i, m) } else { best });
        (idx / cols, idx % cols, mag)
    }
}

/// Uniform axis of `count` points spanning `[-half_width, half_width]`.
pub fn symmetric_axis(half_width: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..count)
            .map(|i| -half_width + 2.0 * half_width * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// Short-time power spectrum with frame-center times and centered bin frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub times: Vec<f64>,
    pub freqs: Vec<f64>,
    /// `times.len()` rows of `freqs.len()` power values.
    pub power: Vec<Vec<f64>>,
}

impl Spectrogram {
    /// Frequency of the strongest bin in every frame.
    pub fn ridge(&self) -> Vec<f64> {
        self.power
            .iter()
            .map(|row| {
                let (idx, _) = row
                    .iter()
                    .enumerate()
                    .fold((0, f64::MIN), |b, (i, &p)| if p > b.1 { (i, p) } else { b });
                self.freqs[idx]
            })
            .collect()
    }

    pub fn bin_width(&self) -> f64 {
        if self.freqs.len() > 1 {
            self.freqs[1] - self.freqs[0]
        } else {
            0.0
        }
    }
}

/// Hann-windowed `|STFT|²` with frames of `window_len` samples every `hop`.
pub fn spectrogram(wf: &SampledWaveform, window_len: usize, hop: usize) -> Result<Spectrogram> {
    if window_len < 2 || hop == 0 {
        return Err(Error::Precondition(format!(
            "degenerate spectrogram window (len {window_len}, hop {hop})"
        )));
    }
    if window_len > wf.len() {
        return Err(Error::Precondition(format!(
            "window of {window_len} samples exceeds waveform length {}",
            wf.len()
        )));
    }
    let window: Vec<f64> = (0..window_len)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / window_len as f64).cos())
        .collect();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(window_len);
    let fs = wf.sample_rate();
    let half = (window_len / 2) as i64;
    let freqs: Vec<f64> = (0..window_len as i64)
        .map(|k| (k - half) as f64 * fs / window_len as f64)
        .collect();
    let frames = 1 + (wf.len() - window_len) / hop;
    let dt = wf.sample_interval();
    let mut times = Vec::with_capacity(frames);
    let mut power = Vec::with_capacity(frames);
    let mut buf = vec![Complex64::new(0.0, 0.0); window_len];
    for frame in 0..frames {
        let start = frame * hop;
        for (i, slot) in buf.iter_mut().enumerate() {
            *slot = wf.samples()[start + i] * window[i];
        }
        fft.process(&mut buf);
        let row = (0..window_len)
            .map(|k| {
                let bin = (k as i64 - half).rem_euclid(window_len as i64) as usize;
                buf[bin].norm_sqr()
            })
            .collect();
        times.push(-0.5 * wf.duration() + (start as f64 + 0.5 * window_len as f64) * dt);
        power.push(row);
    }
    Ok(Spectrogram { times, freqs, power })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kapteyn::DesignCoefficients;

    fn tone(duration: f64, n: usize) -> SampledWaveform {
        let a = 1.0 / duration.sqrt();
        SampledWaveform::from_samples(vec![Complex64::new(a, 0.0); n], duration).unwrap()
    }

    fn params(z: &[f64], duration: f64, bandwidth: f64) -> WaveformParams {
        WaveformParams::new(duration, bandwidth, DesignCoefficients::new(z.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn unmodulated_synthesis_is_constant_tone() {
        let p = params(&[0.0, 0.0], 2.0, 10.0);
        let wf = synthesize(&p, 160.0).unwrap();
        assert_eq!(wf.len(), 320);
        let a = 1.0 / 2f64.sqrt();
        for s in wf.samples() {
            assert!((s - Complex64::new(a, 0.0)).norm() < 1e-15);
        }
        assert!((wf.energy() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn synthesis_has_constant_envelope() {
        let p = params(&[0.4, -0.2, 0.05], 1.0, 40.0);
        let wf = synthesize(&p, 16.0 * 40.0).unwrap();
        for s in wf.samples() {
            assert!((s.norm() - 1.0).abs() < 1e-14);
        }
        assert!((wf.energy() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn undersampling_is_rejected() {
        let p = params(&[0.3], 1.0, 40.0);
        assert!(matches!(synthesize(&p, 300.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn spectrum_of_pure_line() {
        let lines = FourierLineCoefficients::from_coefficients(
            vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            4.0,
        )
        .unwrap();
        let s = spectrum(&lines, &[0.0, 0.25, -0.5, 1.0]);
        assert!((s[0] - Complex64::new(2.0, 0.0)).norm() < 1e-15);
        for v in &s[1..] {
            assert!(v.norm() < 1e-15);
        }
    }

    #[test]
    fn closed_af_trivial_points() {
        let p = params(&[0.3, 0.1, -0.05], 1.0, 20.0);
        let wf = synthesize(&p, 320.0).unwrap();
        let lines = waveform_lines(&wf, default_line_cap(&p)).unwrap();
        assert!((ambiguity_closed(&lines, 0.0, 0.0).re - lines.energy()).abs() < 1e-12);
        assert!((acf(&lines, 0.0) - Complex64::new(1.0, 0.0)).norm() < 1e-9);
        assert_eq!(ambiguity_closed(&lines, 1.0, 3.0), Complex64::new(0.0, 0.0));
        assert_eq!(acf(&lines, -1.2), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn numeric_af_energy_and_symmetry() {
        let p = params(&[0.25, -0.1, 0.08], 1.0, 20.0);
        let wf = synthesize(&p, 320.0).unwrap();
        assert!((ambiguity_numeric(&wf, 0.0, 0.0) - Complex64::new(1.0, 0.0)).norm() < 1e-9);
        for &(tau, nu) in &[(0.1, 3.0), (0.37, -7.5), (0.8, 1.0)] {
            let a = ambiguity_numeric(&wf, tau, nu);
            let b = ambiguity_numeric(&wf, -tau, -nu);
            assert!((a - b.conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn spectrogram_preconditions() {
        let wf = tone(1.0, 64);
        assert!(spectrogram(&wf, 65, 8).is_err());
        assert!(spectrogram(&wf, 16, 0).is_err());
        assert!(spectrogram(&wf, 1, 1).is_err());
    }

    #[test]
    fn spectrogram_of_tone_sits_at_dc() {
        let wf = tone(1.0, 256);
        let sg = spectrogram(&wf, 32, 16).unwrap();
        assert_eq!(sg.times.len(), 15);
        for f in sg.ridge() {
            assert_eq!(f, 0.0);
        }
    }
}
