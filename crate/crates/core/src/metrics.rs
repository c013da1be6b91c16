//! Autocorrelation sidelobe metrics and RMS bandwidth.
//!
//! The integrated sidelobe ratio compares the area under `|R(τ)|²` beyond
//! the first null `τ_m` with the area inside it:
//!
//! ```text
//! ISR = ∫_{τ_m}^{T} |R|² dτ / ∫_0^{τ_m} |R|² dτ
//! ```
//!
//! RMS bandwidth is available three ways: from the sampled waveform's
//! spectral second moment, from the Kapteyn coefficients, and directly from
//! the design vector. For a valid design all three agree.

use core::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::kapteyn::{DesignCoefficients, KapteynExpansion, WaveformParams};
use crate::waveform::SampledWaveform;

/// Minimum delay samples per `1/Δf` for ISR integration.
pub const MIN_POINTS_PER_RESOLUTION: usize = 64;

/// Relative accuracy requested from the adaptive ISR quadrature.
pub const ISR_RELATIVE_TOL: f64 = 1e-6;

const MAX_SIMPSON_LEVELS: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsrResult {
    pub isr_db: f64,
    /// Delay of the first null of `|R(τ)|²`, seconds.
    pub tau_m: f64,
    pub sidelobe_area: f64,
    pub mainlobe_area: f64,
}

impl IsrResult {
    fn from_areas(tau_m: f64, sidelobe_area: f64, mainlobe_area: f64) -> Result<Self> {
        if !(mainlobe_area > 0.0) {
            return Err(Error::MetricUndefined(format!(
                "mainlobe area must be positive, got {mainlobe_area}"
            )));
        }
        Ok(Self {
            isr_db: 10.0 * (sidelobe_area / mainlobe_area).log10(),
            tau_m,
            sidelobe_area,
            mainlobe_area,
        })
    }

    /// Linear sidelobe-to-mainlobe ratio.
    pub fn linear(&self) -> f64 {
        self.sidelobe_area / self.mainlobe_area
    }
}

/// First strict local minimum of `|R(τ)|²` sampled at `τ_i = i·dτ`, refined
/// by a three-point parabola.
pub fn mainlobe_null(profile: &[f64], delay_step: f64) -> Result<f64> {
    if profile.len() < 3 {
        return Err(Error::MetricUndefined("ACF profile too short to locate a null".into()));
    }
    for i in 1..profile.len() - 1 {
        let (prev, here, next) = (profile[i - 1], profile[i], profile[i + 1]);
        if here < prev && here <= next {
            let curvature = prev - 2.0 * here + next;
            let offset = if curvature > 0.0 { 0.5 * (prev - next) / curvature } else { 0.0 };
            return Ok((i as f64 + offset.clamp(-0.5, 0.5)) * delay_step);
        }
    }
    Err(Error::MetricUndefined("ACF has no interior null before τ = T".into()))
}

/// Composite Simpson on `[a, b]`, doubling the panel count until the
/// Richardson error estimate falls below `rel_tol` of the integral.
fn simpson_adaptive(f: &impl Fn(f64) -> f64, a: f64, b: f64, min_panels: usize, rel_tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    // trapezoid sequence T_n, T_2n, ... shares nodes; Simpson S_2n = (4T_2n - T_n)/3
    let mut n = min_panels.max(2).div_ceil(2);
    let mut h = (b - a) / n as f64;
    let mut interior: f64 = (1..n).map(|i| f(a + i as f64 * h)).sum();
    let ends = 0.5 * (f(a) + f(b));
    let mut trap = h * (ends + interior);
    let mut previous_simpson: Option<f64> = None;
    for _ in 0..MAX_SIMPSON_LEVELS {
        let mids: f64 = (0..n).map(|i| f(a + (i as f64 + 0.5) * h)).sum();
        interior += mids;
        n *= 2;
        h *= 0.5;
        let refined = h * (ends + interior);
        let simpson = (4.0 * refined - trap) / 3.0;
        trap = refined;
        if let Some(prev) = previous_simpson {
            let err = (simpson - prev) / 15.0;
            if err.abs() <= rel_tol * simpson.abs() {
                return simpson + err;
            }
        }
        previous_simpson = Some(simpson);
    }
    previous_simpson.unwrap_or(trap)
}

/// ISR from an arbitrary `|R(τ)|²` evaluator.
///
/// Each region is integrated by composite Simpson starting from at least 64
/// points per `1/Δf` and refined until the Richardson estimate reaches 1e-6
/// relative.
pub fn isr(
    acf_power: impl Fn(f64) -> f64,
    tau_m: f64,
    duration: f64,
    bandwidth: f64,
) -> Result<IsrResult> {
    if !(tau_m > 0.0 && tau_m < duration) {
        return Err(Error::Precondition(format!("τ_m = {tau_m} must lie in (0, T = {duration})")));
    }
    let panels = |len: f64| (len * bandwidth * MIN_POINTS_PER_RESOLUTION as f64).ceil() as usize;
    let main = simpson_adaptive(&acf_power, 0.0, tau_m, panels(tau_m), ISR_RELATIVE_TOL);
    let side = simpson_adaptive(&acf_power, tau_m, duration, panels(duration - tau_m), ISR_RELATIVE_TOL);
    IsrResult::from_areas(tau_m, side, main)
}

/// `|R(τ)|²` sampled at `τ_p = p·dτ`, `p = 0..=N`, spanning `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AcfProfile {
    pub delay_step: f64,
    pub power: Vec<f64>,
}

impl AcfProfile {
    pub fn delays(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.power.len()).map(move |p| p as f64 * self.delay_step)
    }

    /// Integral of the interpolated profile over `[a, b]`.
    ///
    /// Piecewise-cubic Lagrange interpolation through the four nearest
    /// samples, integrated exactly by three-point Gauss–Legendre.
    pub fn integrate(&self, a: f64, b: f64) -> f64 {
        let y = &self.power;
        let last = y.len() - 1;
        let dx = self.delay_step;
        let end = last as f64 * dx;
        let (a, b) = (a.clamp(0.0, end), b.clamp(0.0, end));
        if b <= a {
            return 0.0;
        }
        const NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
        const WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
        let first_cell = ((a / dx).floor() as usize).min(last - 1);
        let last_cell = ((b / dx).ceil() as usize).clamp(first_cell + 1, last);
        let mut total = 0.0;
        for cell in first_cell..last_cell {
            let lo = (cell as f64 * dx).max(a);
            let hi = ((cell + 1) as f64 * dx).min(b);
            if hi <= lo {
                continue;
            }
            let base = cell.saturating_sub(1).min(last.saturating_sub(3));
            let count = 4.min(last + 1);
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            for (node, weight) in NODES.iter().zip(WEIGHTS) {
                let x = mid + half * node;
                total += weight * half * lagrange(&y[base..base + count], base, dx, x);
            }
        }
        total
    }
}

fn lagrange(values: &[f64], base: usize, dx: f64, x: f64) -> f64 {
    let u = x / dx - base as f64;
    let mut acc = 0.0;
    for (i, &v) in values.iter().enumerate() {
        let mut w = 1.0;
        for j in 0..values.len() {
            if j != i {
                w *= (u - j as f64) / (i as f64 - j as f64);
            }
        }
        acc += w * v;
    }
    acc
}

/// Dense `|R(τ)|²` for `τ ∈ [0, T]` from the analytic phase.
///
/// The waveform is sampled on the periodic grid `x_i = -T/2 + iT/N` with
/// `N = ⌈points_per_resolution·TΔf⌉`; all lags come from one FFT
/// correlation, integrated by the trapezoid rule with the exact
/// `-Δx²/12 (h'(b) - h'(a))` end correction built from the known
/// instantaneous frequency.
pub fn acf_profile(params: &WaveformParams, points_per_resolution: usize) -> AcfProfile {
    let duration = params.duration();
    let n = ((points_per_resolution as f64 * params.time_bandwidth()).ceil() as usize).max(64);
    let dx = duration / n as f64;
    let x0 = -0.5 * duration;
    let s: Vec<Complex64> = params.phase_on_grid(x0, n).into_iter().map(Complex64::cis).collect();
    let freq = params.modulation_on_grid(x0, n);

    let size = 2 * n;
    let mut planner = FftPlanner::<f64>::new();
    let mut buf = vec![Complex64::new(0.0, 0.0); size];
    buf[..n].copy_from_slice(&s);
    planner.plan_fft_forward(size).process(&mut buf);
    for v in buf.iter_mut() {
        *v = Complex64::new(v.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(size).process(&mut buf);

    let mut power = Vec::with_capacity(n + 1);
    for p in 0..=n {
        if p == n {
            power.push(0.0);
            continue;
        }
        // Σ_{i=0}^{N-1-p} s_i s*_{i+p}
        let partial = buf[p].conj() / size as f64;
        let tail = n - p; // last node; its partner x + τ = T/2 wraps to index 0
        let h_first = s[0] * s[p].conj();
        let h_last = s[tail % n] * s[0].conj();
        let trap = partial + h_last - 0.5 * (h_first + h_last);
        let slope_first = Complex64::new(0.0, 2.0 * PI * (freq[0] - freq[p])) * h_first;
        let slope_last = Complex64::new(0.0, 2.0 * PI * (freq[tail % n] - freq[0])) * h_last;
        let r = (trap * dx - (slope_last - slope_first) * (dx * dx / 12.0)) / duration;
        power.push(r.norm_sqr());
    }
    AcfProfile { delay_step: dx, power }
}

/// ISR of an [`AcfProfile`].
pub fn isr_from_profile(profile: &AcfProfile) -> Result<IsrResult> {
    let tau_m = mainlobe_null(&profile.power, profile.delay_step)?;
    let end = (profile.power.len() - 1) as f64 * profile.delay_step;
    let main = profile.integrate(0.0, tau_m);
    let side = profile.integrate(tau_m, end);
    IsrResult::from_areas(tau_m, side, main)
}

/// ISR of a design evaluated on a dense FFT-correlated delay grid.
pub fn isr_sampled(params: &WaveformParams, points_per_resolution: usize) -> Result<IsrResult> {
    isr_from_profile(&acf_profile(params, points_per_resolution))
}

/// Bin frequencies of an `n`-point DFT over duration `T`; the Nyquist bin of
/// an even transform is assigned zero.
fn dft_frequencies(n: usize, duration: f64) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| {
        if 2 * k == n {
            0.0
        } else if 2 * k < n {
            k as f64 / duration
        } else {
            (k as f64 - n as f64) / duration
        }
    })
}

/// Energy-weighted spectral moments `(Σ f|X|², Σ f²|X|², Σ |X|²)` of the
/// samples' periodic DFT, all scaled by `Δt/N`.
fn spectral_moments(wf: &SampledWaveform) -> (f64, f64, f64) {
    let n = wf.len();
    let mut buf = wf.samples().to_vec();
    FftPlanner::<f64>::new().plan_fft_forward(n).process(&mut buf);
    let scale = wf.sample_interval() / n as f64;
    let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for (x, f) in buf.iter().zip(dft_frequencies(n, wf.duration())) {
        let p = x.norm_sqr() * scale;
        m0 += p;
        m1 += f * p;
        m2 += f * f * p;
    }
    (m1, m2, m0)
}

/// Mean frequency `∫ f |S(f)|² df / ∫ |S(f)|² df` in Hz.
pub fn first_spectral_moment(wf: &SampledWaveform) -> f64 {
    let (m1, _, m0) = spectral_moments(wf);
    m1 / m0
}

/// RMS bandwidth in rad/s from the time-domain form
/// `β² = ∫|ṡ|² dt - |∫ s ṡ* dt|²`.
///
/// The derivative is spectral on the sample record's periodic extension, so
/// only the in-pulse phase modulation contributes; the rectangular edges are
/// excluded and an unmodulated pulse gives zero on every grid.
pub fn rms_bandwidth_spectral(wf: &SampledWaveform) -> f64 {
    let (m1, m2, m0) = spectral_moments(wf);
    let two_pi = 2.0 * PI;
    let beta_sq = two_pi * two_pi * (m2 - m1 * m1 / m0);
    beta_sq.max(0.0).sqrt()
}

/// RMS bandwidth in rad/s from the Kapteyn series:
/// `β² = 8π²A² Σ_m (J_m^{1:K}{m z_k}/m)²`.
pub fn rms_bandwidth_kapteyn(expansion: &KapteynExpansion, scale: f64) -> f64 {
    let series: f64 = expansion
        .gbf_terms()
        .enumerate()
        .map(|(i, j)| {
            let r = j / (i + 1) as f64;
            r * r
        })
        .sum();
    (8.0 * PI * PI * scale * scale * series).sqrt()
}

/// RMS bandwidth in rad/s directly from the design: `β² = 2π²A² Σ_k z_k²`.
pub fn rms_bandwidth_direct(coeffs: &DesignCoefficients, scale: f64) -> f64 {
    (2.0 * PI * PI * scale * scale * coeffs.sum_of_squares()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kapteyn::kapteyn_coefficients;
    use crate::waveform::synthesize;

    #[test]
    fn triangle_acf_has_no_null() {
        let profile: Vec<f64> = (0..=100).map(|i| (1.0 - i as f64 / 100.0).powi(2)).collect();
        assert!(matches!(mainlobe_null(&profile, 0.01), Err(Error::MetricUndefined(_))));
    }

    #[test]
    fn parabolic_refinement_recovers_vertex() {
        let vertex = 0.337;
        let profile: Vec<f64> = (0..50)
            .map(|i| {
                let t = i as f64 * 0.02;
                (t - vertex).powi(2) + if t > 0.6 { -10.0 * (t - 0.6) } else { 0.0 }
            })
            .collect();
        let tau_m = mainlobe_null(&profile, 0.02).unwrap();
        assert!((tau_m - vertex).abs() < 1e-12);
    }

    #[test]
    fn null_is_branch_independent() {
        let sinc_sq = |i: i64| {
            let x = 7.0 * i as f64 * 0.005;
            if i == 0 { 1.0 } else { (x.sin() / x).powi(2) }
        };
        let positive: Vec<f64> = (0..=200).map(sinc_sq).collect();
        let negative: Vec<f64> = (-200..=0).rev().map(sinc_sq).collect();
        let tau_m = mainlobe_null(&positive, 0.005).unwrap();
        assert_eq!(tau_m, mainlobe_null(&negative, 0.005).unwrap());
        assert!((tau_m - PI / 7.0).abs() < 1e-3);
    }

    #[test]
    fn equal_areas_give_zero_db() {
        let r = isr(|_| 0.25, 0.5, 1.0, 10.0).unwrap();
        assert!(r.isr_db.abs() < 1e-12);
        assert!(matches!(isr(|_| 0.0, 0.5, 1.0, 10.0), Err(Error::MetricUndefined(_))));
        assert!(isr(|_| 1.0, 1.5, 1.0, 10.0).is_err());
    }

    #[test]
    fn simpson_is_accurate_on_smooth_integrand() {
        let v = simpson_adaptive(&|x: f64| (3.0 * x).cos().powi(2), 0.0, 2.0, 8, 1e-10);
        let exact = 1.0 + (12.0f64).sin() / 12.0;
        assert!((v - exact).abs() < 1e-10);
    }

    #[test]
    fn profile_integration_is_exact_for_cubics() {
        let dx = 0.1;
        let power: Vec<f64> = (0..=20).map(|i| (i as f64 * dx).powi(3) - (i as f64 * dx)).collect();
        let profile = AcfProfile { delay_step: dx, power };
        let exact = |a: f64, b: f64| (b.powi(4) - a.powi(4)) / 4.0 - (b * b - a * a) / 2.0;
        for &(a, b) in &[(0.0, 2.0), (0.13, 1.77), (0.0, 0.05), (1.95, 2.0)] {
            assert!((profile.integrate(a, b) - exact(a, b)).abs() < 1e-12, "[{a}, {b}]");
        }
    }

    #[test]
    fn rms_bandwidth_routes_for_zero_design() {
        let zeros = DesignCoefficients::zeros(3).unwrap();
        let exp = kapteyn_coefficients(&zeros, 1e-12).unwrap();
        assert_eq!(rms_bandwidth_direct(&zeros, 10.0), 0.0);
        assert_eq!(rms_bandwidth_kapteyn(&exp, 10.0), 0.0);
    }

    #[test]
    fn rms_bandwidth_direct_arithmetic() {
        let c = DesignCoefficients::new(vec![0.3, 0.1]).unwrap();
        let beta = rms_bandwidth_direct(&c, 10.0);
        assert!((beta * beta - 20.0 * PI * PI).abs() < 1e-10);
    }

    #[test]
    fn rms_bandwidth_kapteyn_single_tone_reduces_to_nielsen() {
        let c = DesignCoefficients::new(vec![0.6]).unwrap();
        let exp = kapteyn_coefficients(&c, 1e-12).unwrap();
        let a = 3.0;
        let beta = rms_bandwidth_kapteyn(&exp, a);
        let expected = 2.0 * PI * PI * a * a * 0.36;
        assert!((beta * beta - expected).abs() < 1e-10 * expected);
    }

    #[test]
    fn unmodulated_pulse_spectral_bandwidth_is_grid_independent_zero() {
        for n in [64, 256, 1000] {
            let a = 1.0;
            let wf = SampledWaveform::from_samples(vec![Complex64::new(a, 0.0); n], 1.0).unwrap();
            assert!(rms_bandwidth_spectral(&wf) < 1e-10);
        }
    }

    #[test]
    fn spectral_route_matches_direct_for_small_design() {
        let c = DesignCoefficients::new(vec![0.4, -0.15, 0.05]).unwrap();
        let params = WaveformParams::new(1.0, 30.0, c).unwrap();
        let wf = synthesize(&params, 16.0 * 30.0).unwrap();
        let spectral = rms_bandwidth_spectral(&wf);
        let direct = rms_bandwidth_direct(params.coeffs(), params.scale());
        assert!((spectral - direct).abs() < 1e-3 * direct);
        assert!(2.0 * PI * first_spectral_moment(&wf).abs() < 1e-6 * direct);
    }
}
