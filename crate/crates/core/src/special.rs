//! Bessel functions of the first kind, multi-variable generalized Bessel
//! functions, and the discrete line expansion of a unit-modulus waveform.
//!
//! The generalized Bessel function of order `m` over `K` harmonics is
//!
//! ```text
//! J_m^{1:K}{x_1..x_K} = (1/2π) ∫_0^{2π} cos(mθ − Σ_k x_k sin kθ) dθ
//! ```
//!
//! which reduces to the ordinary `J_m(x_1)` for `K = 1`.

use core::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Largest `|x|` handled by the ascending power series.
const SERIES_LIMIT: f64 = 12.0;

/// Convergence threshold between successive quadrature refinements.
const QUADRATURE_TOL: f64 = 1e-13;

/// Upper bound on the θ grid used by [`gbf`].
const MAX_QUADRATURE_POINTS: usize = 1 << 24;

/// Captured-energy threshold used when choosing the line order adaptively.
pub const LINE_ENERGY_THRESHOLD: f64 = 1.0 - 1e-10;

/// Bessel function of the first kind `J_m(x)` for integer order `m ≥ 0`.
///
/// Uses the ascending series for `|x| ≤ 12` and Miller's normalized backward
/// recurrence above that.
pub fn bessel_j(order: u32, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("bessel_j argument must be finite, got {x}")));
    }
    let value = if x.abs() <= SERIES_LIMIT {
        bessel_j_series(order, x.abs())
    } else {
        bessel_j_miller(order, x.abs())
    };
    // J_m(-x) = (-1)^m J_m(x)
    Ok(if x < 0.0 && order % 2 == 1 { -value } else { value })
}

fn bessel_j_series(order: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if order == 0 { 1.0 } else { 0.0 };
    }
    let half = 0.5 * x;
    let mut lead = 1.0;
    for k in 1..=order {
        lead *= half / k as f64;
        if lead == 0.0 {
            return 0.0;
        }
    }
    let q = -half * half;
    let mut term = lead;
    let mut sum = lead;
    let m = order as f64;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= q / (n * (n + m));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() && n > half {
            break;
        }
        if n > 500.0 {
            break;
        }
    }
    sum
}

fn bessel_j_miller(order: u32, x: f64) -> f64 {
    let top = (order as f64).max(x);
    let mut start = (top + 30.0 + (60.0 * top).sqrt()) as u32;
    start += start % 2;
    let two_over_x = 2.0 / x;
    let mut next = 0.0; // J_{j+1}
    let mut cur = 1e-300; // J_j, arbitrary small seed
    let mut norm = 0.0;
    let mut wanted = 0.0;
    for j in (1..=start).rev() {
        let prev = j as f64 * two_over_x * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
            wanted *= 1e-250;
        }
        // cur now holds J_{j-1}
        let k = j - 1;
        if k == order {
            wanted = cur;
        }
        if k > 0 && k % 2 == 0 {
            norm += cur;
        }
    }
    // J_0 + 2 Σ J_{2k} = 1
    wanted / (cur + 2.0 * norm)
}

/// Argument vector `x_1..x_K` of a K-variable generalized Bessel function.
#[derive(Debug, Clone, PartialEq)]
pub struct GbfArgument {
    values: Vec<f64>,
}

impl GbfArgument {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Precondition("GBF argument needs K ≥ 1 entries".into()));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("GBF argument entries must be finite, got {bad}")));
        }
        Ok(Self { values })
    }

    /// Number of harmonics `K`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `Σ_k k·|x_k|`.
    pub fn weighted_sum(&self) -> f64 {
        weighted_sum(&self.values)
    }

    /// Every dimension multiplied by `factor`, e.g. `{m·z_k}` for Kapteyn terms.
    pub fn scaled(&self, factor: f64) -> Self {
        Self { values: self.values.iter().map(|v| v * factor).collect() }
    }
}

pub(crate) fn weighted_sum(z: &[f64]) -> f64 {
    z.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v.abs()).sum()
}

/// `Σ_k x_k sin(kθ)` using the rotation recurrence for the harmonics.
#[inline]
pub(crate) fn harmonic_sine_sum(values: &[f64], theta: f64) -> f64 {
    let w = Complex64::cis(theta);
    let mut p = w;
    let mut acc = 0.0;
    for &x in values {
        acc += x * p.im;
        p *= w;
    }
    acc
}

/// Generalized Bessel function `J_m^{1:K}{x_1..x_K}` of integer order.
///
/// Trapezoidal quadrature of the defining integral on a uniform θ grid. The
/// integrand's harmonics beyond `|m| + Σ k|x_k|` are negligible, so the
/// starting grid is `max(256, 8(|m| + ⌈Σ k|x_k|⌉))` points; it is doubled
/// until successive estimates agree to 1e-13.
pub fn gbf(order: i64, arg: &GbfArgument) -> f64 {
    let start = 8.0 * (order.unsigned_abs() as f64 + arg.weighted_sum().ceil());
    let mut n = (start as usize).max(256).next_power_of_two();
    let m = order as f64;
    let integrand = |theta: f64| (m * theta - harmonic_sine_sum(&arg.values, theta)).cos();

    let mut sum: f64 = (0..n).map(|j| integrand(2.0 * PI * j as f64 / n as f64)).sum();
    let mut estimate = sum / n as f64;
    while n < MAX_QUADRATURE_POINTS {
        // the refined grid reuses every existing node; only midpoints are new
        let step = 2.0 * PI / n as f64;
        let mids: f64 = (0..n).map(|j| integrand((j as f64 + 0.5) * step)).sum();
        sum += mids;
        n *= 2;
        let refined = sum / n as f64;
        let converged = (refined - estimate).abs() < QUADRATURE_TOL;
        estimate = refined;
        if converged {
            break;
        }
    }
    estimate
}

/// Discrete line expansion `c_{-L}..c_{L}` of a waveform over one period `T`.
///
/// The waveform is `s(t) = (1/√T) Σ_ℓ c_ℓ e^{+j2πℓt/T}` on `|t| ≤ T/2`, so line
/// `ℓ` sits at frequency `ℓ/T`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierLineCoefficients {
    coeffs: Vec<Complex64>,
    max_order: usize,
    duration: f64,
}

impl FourierLineCoefficients {
    /// Build from an explicit coefficient list ordered `ℓ = -L..=L`.
    pub fn from_coefficients(coeffs: Vec<Complex64>, duration: f64) -> Result<Self> {
        if coeffs.len() % 2 == 0 {
            return Err(Error::Precondition(format!(
                "line coefficient count must be odd (2L+1), got {}",
                coeffs.len()
            )));
        }
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::Domain(format!("duration must be positive, got {duration}")));
        }
        let max_order = coeffs.len() / 2;
        Ok(Self { coeffs, max_order, duration })
    }

    /// Maximum line order `L`.
    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    /// Coefficient of line `ℓ`, zero outside `-L..=L`.
    pub fn get(&self, line: i64) -> Complex64 {
        let idx = line + self.max_order as i64;
        if idx < 0 || idx as usize >= self.coeffs.len() {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[idx as usize]
        }
    }

    /// Coefficients ordered `ℓ = -L..=L`.
    pub fn as_slice(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `(ℓ, c_ℓ)` pairs in ascending line order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let l = self.max_order as i64;
        self.coeffs.iter().enumerate().map(move |(i, &c)| (i as i64 - l, c))
    }

    /// Captured energy `Σ |c_ℓ|²`.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// All `N` discrete Fourier lines of `e^{jφ}` sampled on the cell-midpoint grid
/// `t_i = -T/2 + (i + ½)T/N`, indexed by `ℓ mod N`.
fn all_lines(phase_samples: &[f64]) -> Vec<Complex64> {
    dft(phase_samples.iter().map(|&p| Complex64::cis(p)).collect())
}

fn dft(mut buf: Vec<Complex64>) -> Vec<Complex64> {
    let n = buf.len();
    FftPlanner::<f64>::new().plan_fft_forward(n).process(&mut buf);
    buf
}

/// Projection `c_ℓ = (1/N) Σ_i e^{jφ_i} e^{-j2πℓ t_i/T}` for one line, given the
/// raw DFT bins from [`all_lines`].
fn line_from_bins(bins: &[Complex64], line: i64) -> Complex64 {
    let n = bins.len() as i64;
    let bin = bins[line.rem_euclid(n) as usize];
    // e^{-j2πℓ t_0/T} with t_0 = -T/2 + T/(2N)
    let shift = Complex64::cis(PI * line as f64 - PI * line as f64 / n as f64);
    bin * shift / n as f64
}

/// Line coefficients `c_{-L}..c_{L}` of `e^{jφ(t)}` from phase samples taken on
/// the midpoint grid `t_i = -T/2 + (i + ½)T/N`.
///
/// Requires `N ≥ 4L + 4` so the retained lines are well clear of aliasing.
pub fn fourier_line_coefficients(
    phase_samples: &[f64],
    duration: f64,
    max_order: usize,
) -> Result<FourierLineCoefficients> {
    let n = phase_samples.len();
    if n < 4 * max_order + 4 {
        return Err(Error::Precondition(format!(
            "need at least 4L+4 = {} phase samples for L = {max_order}, got {n}",
            4 * max_order + 4
        )));
    }
    let bins = all_lines(phase_samples);
    let l = max_order as i64;
    let coeffs = (-l..=l).map(|line| line_from_bins(&bins, line)).collect();
    FourierLineCoefficients::from_coefficients(coeffs, duration)
}

/// Line coefficients with the order chosen as the smallest `L` capturing at
/// least `1 - 1e-10` of the energy, capped at `order_cap` and at `(N-4)/4`.
pub fn fourier_line_coefficients_adaptive(
    phase_samples: &[f64],
    duration: f64,
    order_cap: usize,
) -> Result<FourierLineCoefficients> {
    let n = phase_samples.len();
    if n < 4 {
        return Err(Error::Precondition(format!("need at least 4 phase samples, got {n}")));
    }
    adaptive_from_bins(&all_lines(phase_samples), duration, order_cap)
}

/// Adaptive line expansion of an arbitrary complex envelope sampled on the
/// midpoint grid, normalized so that `Σ_i |x_i|²/N = 1` maps to unit energy.
pub(crate) fn lines_from_envelope(
    envelope: Vec<Complex64>,
    duration: f64,
    order_cap: usize,
) -> Result<FourierLineCoefficients> {
    if envelope.len() < 4 {
        return Err(Error::Precondition(format!(
            "need at least 4 samples, got {}",
            envelope.len()
        )));
    }
    adaptive_from_bins(&dft(envelope), duration, order_cap)
}

fn adaptive_from_bins(
    bins: &[Complex64],
    duration: f64,
    order_cap: usize,
) -> Result<FourierLineCoefficients> {
    let n = bins.len();
    let cap = order_cap.min((n - 4) / 4);
    let norm = 1.0 / (n as f64 * n as f64);
    let mut captured = bins[0].norm_sqr() * norm;
    let mut order = 0usize;
    while captured < LINE_ENERGY_THRESHOLD && order < cap {
        order += 1;
        let o = order as i64;
        captured += (bins[o.rem_euclid(n as i64) as usize].norm_sqr()
            + bins[(-o).rem_euclid(n as i64) as usize].norm_sqr())
            * norm;
    }
    let l = order as i64;
    let coeffs = (-l..=l).map(|line| line_from_bins(bins, line)).collect();
    FourierLineCoefficients::from_coefficients(coeffs, duration)
}
