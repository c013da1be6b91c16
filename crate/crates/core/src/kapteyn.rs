//! Kapteyn-series solution of the multi-tone feedback FM equation.
//!
//! The feedback system `φ = Σ_k z_k sin(k(ωt + φ))` is solved by the
//! substitution `θ = ωt + φ`, which turns it into the generalized Kepler
//! equation `ψ = θ - Σ_k z_k sin kθ` with `ψ = ωt`. Its inverse gives the
//! odd, `2π`-periodic output `g(ψ) = θ(ψ) - ψ = Σ_m b_m sin mψ` with
//!
//! ```text
//! b_m = (2/m) J_m^{1:K}{m z_1, .., m z_K}
//! ```
//!
//! The series is computed here from the GBF integral and, independently,
//! [`invert_kepler`] solves the Kepler equation pointwise.

use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::special::{harmonic_sine_sum, weighted_sum};
use crate::trig::{harmonic_sum_at, harmonic_sum_on_grid};

/// Default truncation tolerance on the trailing Kapteyn coefficients.
pub const DEFAULT_TRUNCATION_TOL: f64 = 1e-12;

/// Hard cap on the number of Kapteyn coefficients.
pub const MAX_KAPTEYN_ORDER: usize = 4096;

/// Rounding slack admitted on `Σ k|z_k| ≤ 1`.
pub const WEIGHTED_SUM_SLACK: f64 = 1e-12;

/// Grid used to locate the modulation peak when normalizing the scale.
pub const PEAK_SEARCH_POINTS: usize = 4096;

/// Agreement required between two quadrature grids for the coefficient batch.
const BATCH_QUADRATURE_TOL: f64 = 1e-13;

/// Below this `|f'(θ)|` the Kepler solver stops trusting Newton steps.
const NEWTON_DERIVATIVE_FLOOR: f64 = 1e-8;

const KEPLER_RESIDUAL_TOL: f64 = 1e-13;
const KEPLER_MAX_ITER: usize = 200;

/// Oscillator weights `z_1..z_K` of a multi-tone feedback FM system.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignCoefficients {
    z: Vec<f64>,
}

impl DesignCoefficients {
    /// Validates `K ≥ 1`, finiteness and `Σ k|z_k| ≤ 1`.
    pub fn new(z: Vec<f64>) -> Result<Self> {
        if z.is_empty() {
            return Err(Error::Precondition("design needs at least one coefficient".into()));
        }
        if let Some(bad) = z.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("design coefficients must be finite, got {bad}")));
        }
        let ws = weighted_sum(&z);
        if ws > 1.0 + WEIGHTED_SUM_SLACK {
            return Err(Error::ConvergenceDomain { weighted_sum: ws });
        }
        Ok(Self { z })
    }

    pub fn zeros(k: usize) -> Result<Self> {
        Self::new(vec![0.0; k])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.z
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.z
    }

    /// Number of oscillators `K`.
    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// `Σ_k k·|z_k|`.
    pub fn weighted_sum(&self) -> f64 {
        weighted_sum(&self.z)
    }

    /// Distance to the convergence boundary, `1 - Σ k|z_k|`.
    pub fn margin(&self) -> f64 {
        1.0 - self.weighted_sum()
    }

    /// `Σ_k z_k²`.
    pub fn sum_of_squares(&self) -> f64 {
        self.z.iter().map(|v| v * v).sum()
    }

    fn is_zero(&self) -> bool {
        self.z.iter().all(|&v| v == 0.0)
    }
}

/// Truncated sine-series coefficients `b_1..b_M` of the modulation shape.
#[derive(Debug, Clone, PartialEq)]
pub struct KapteynExpansion {
    b: Vec<f64>,
    tail_bound: f64,
}

impl KapteynExpansion {
    /// `b_m` for `m = 1..=M` (index `m - 1`).
    pub fn coefficients(&self) -> &[f64] {
        &self.b
    }

    /// Truncation order `M`.
    pub fn order(&self) -> usize {
        self.b.len()
    }

    /// Largest magnitude among the trailing coefficients at truncation.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    /// `Σ_m b_m²`, which equals `Σ_k z_k²` for a converged expansion.
    pub fn sum_of_squares(&self) -> f64 {
        self.b.iter().map(|v| v * v).sum()
    }

    /// `J_m^{1:K}{m z_k} = m b_m / 2`.
    pub fn gbf_terms(&self) -> impl Iterator<Item = f64> + '_ {
        self.b.iter().enumerate().map(|(i, b)| 0.5 * (i + 1) as f64 * b)
    }

    /// `g(ψ) = Σ_m b_m sin mψ`.
    pub fn evaluate(&self, psi: f64) -> f64 {
        harmonic_sum_at(&self.b, psi).im
    }
}

/// `b_m` for `m = 1..=m_max` by trapezoidal quadrature of
/// `(1/πm) ∫ cos(mψ(θ)) dθ` on `n` uniform θ nodes, `ψ(θ) = θ - Σ z_k sin kθ`.
///
/// The integrand is even in θ, so only the half period is visited.
fn kapteyn_batch(z: &[f64], n: usize, m_max: usize) -> Vec<f64> {
    debug_assert!(n % 2 == 0);
    let mut acc = vec![0.0; m_max];
    let half = n / 2;
    for j in 0..=half {
        let theta = 2.0 * PI * j as f64 / n as f64;
        let psi = theta - harmonic_sine_sum(z, theta);
        let weight = if j == 0 || j == half { 1.0 } else { 2.0 };
        let w = Complex64::cis(psi);
        let mut p = w;
        for (idx, slot) in acc.iter_mut().enumerate() {
            let m = idx + 1;
            if m % 64 == 0 {
                p = Complex64::cis(m as f64 * psi);
            }
            *slot += weight * p.re;
            p *= w;
        }
    }
    acc.iter()
        .enumerate()
        .map(|(idx, a)| 2.0 * a / ((idx + 1) as f64 * n as f64))
        .collect()
}

/// First `M ≥ 5` whose window `|b_{M-4}|..|b_M|` lies entirely below `tol`.
fn truncation_point(b: &[f64], tol: f64) -> Option<usize> {
    (5..=b.len()).find(|&m| b[m - 5..m].iter().all(|v| v.abs() < tol))
}

fn trailing_max(b: &[f64]) -> f64 {
    b.iter().rev().take(5).fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Kapteyn coefficients `b_m = (2/m) J_m^{1:K}{m z_k}` truncated once five
/// consecutive terms fall below `tol`, or at [`MAX_KAPTEYN_ORDER`].
///
/// All orders share one θ grid; it is doubled until two consecutive grids
/// agree to 1e-13 on every retained coefficient.
pub fn kapteyn_coefficients(coeffs: &DesignCoefficients, tol: f64) -> Result<KapteynExpansion> {
    if !(tol > 0.0) {
        return Err(Error::Precondition(format!("truncation tolerance must be positive, got {tol}")));
    }
    let ws = coeffs.weighted_sum();
    if ws > 1.0 + WEIGHTED_SUM_SLACK {
        return Err(Error::ConvergenceDomain { weighted_sum: ws });
    }
    if coeffs.is_zero() {
        return Ok(KapteynExpansion { b: Vec::new(), tail_bound: 0.0 });
    }
    let z = coeffs.as_slice();
    let start = 8 * (1 + z.len());
    let mut n = start.max(256).next_power_of_two();
    loop {
        let m_limit = (n / 4).min(MAX_KAPTEYN_ORDER);
        let coarse = kapteyn_batch(z, n, m_limit);
        let order = match truncation_point(&coarse, tol) {
            Some(m) => m,
            None if m_limit == MAX_KAPTEYN_ORDER => MAX_KAPTEYN_ORDER,
            None => {
                n *= 2;
                continue;
            }
        };
        let fine = kapteyn_batch(z, 2 * n, order);
        let drift = coarse[..order]
            .iter()
            .zip(&fine)
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        if drift < BATCH_QUADRATURE_TOL {
            let tail_bound = trailing_max(&fine);
            return Ok(KapteynExpansion { b: fine, tail_bound });
        }
        n *= 2;
    }
}

/// Solve `θ - Σ_k z_k sin kθ = ψ` for `θ`.
///
/// Newton iteration safeguarded by a bracketing interval, falling back to
/// bisection whenever a Newton step leaves the bracket or `|f'(θ)| < 1e-8`
/// (the degenerate boundary `Σ k|z_k| = 1`).
pub fn invert_kepler(psi: f64, coeffs: &DesignCoefficients) -> Result<f64> {
    if !psi.is_finite() {
        return Err(Error::Domain(format!("Kepler angle must be finite, got {psi}")));
    }
    let z = coeffs.as_slice();
    let f = |theta: f64| theta - harmonic_sine_sum(z, theta) - psi;
    let df = |theta: f64| {
        let w = Complex64::cis(theta);
        let mut p = w;
        let mut acc = 1.0;
        for (i, &zk) in z.iter().enumerate() {
            acc -= (i + 1) as f64 * zk * p.re;
            p *= w;
        }
        acc
    };

    // |Σ z_k sin kθ| ≤ Σ|z_k| bounds the root around ψ
    let reach: f64 = z.iter().map(|v| v.abs()).sum::<f64>() + 1e-12;
    let mut lo = psi - reach;
    let mut hi = psi + reach;
    let mut theta = psi;
    for _ in 0..KEPLER_MAX_ITER {
        let value = f(theta);
        if value.abs() <= KEPLER_RESIDUAL_TOL {
            return Ok(theta);
        }
        if value < 0.0 {
            lo = theta;
        } else {
            hi = theta;
        }
        if hi - lo <= 4.0 * f64::EPSILON * psi.abs().max(1.0) {
            return Ok(theta);
        }
        let slope = df(theta);
        let newton = theta - value / slope;
        theta = if slope.abs() >= NEWTON_DERIVATIVE_FLOOR && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Err(Error::Numerical(format!(
        "Kepler inversion did not converge for ψ = {psi} after {KEPLER_MAX_ITER} iterations"
    )))
}

/// Physical description of one MT-FFM waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformParams {
    duration: f64,
    bandwidth: f64,
    scale: f64,
    coeffs: DesignCoefficients,
    expansion: KapteynExpansion,
}

impl WaveformParams {
    /// Waveform with the scale `A` chosen so that `max_t |m(t)| = Δf/2`
    /// (peak located on a 4096-point grid).
    ///
    /// For all-zero coefficients the modulation vanishes and `A = Δf/2`.
    pub fn new(duration: f64, bandwidth: f64, coeffs: DesignCoefficients) -> Result<Self> {
        validate_positive("duration", duration)?;
        validate_positive("bandwidth", bandwidth)?;
        let expansion = kapteyn_coefficients(&coeffs, DEFAULT_TRUNCATION_TOL)?;
        let scale = peak_normalized_scale(&expansion, bandwidth);
        Ok(Self { duration, bandwidth, scale, coeffs, expansion })
    }

    /// Waveform with an explicit modulation scale `A` in Hz.
    pub fn with_scale(
        duration: f64,
        bandwidth: f64,
        scale: f64,
        coeffs: DesignCoefficients,
    ) -> Result<Self> {
        validate_positive("duration", duration)?;
        validate_positive("bandwidth", bandwidth)?;
        validate_positive("scale", scale)?;
        let expansion = kapteyn_coefficients(&coeffs, DEFAULT_TRUNCATION_TOL)?;
        Ok(Self { duration, bandwidth, scale, coeffs, expansion })
    }

    /// Pulse length `T` in seconds.
    pub fn duration(&self) -> f64 {
        self.duration
    }

    /// Swept bandwidth `Δf` in Hz.
    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Modulation scale `A` in Hz.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn coeffs(&self) -> &DesignCoefficients {
        &self.coeffs
    }

    pub fn expansion(&self) -> &KapteynExpansion {
        &self.expansion
    }

    /// Time-bandwidth product `T·Δf`.
    pub fn time_bandwidth(&self) -> f64 {
        self.duration * self.bandwidth
    }

    /// Fundamental angular frequency `2π/T`.
    pub fn fundamental(&self) -> f64 {
        2.0 * PI / self.duration
    }

    /// Cosine-series coefficients `-A T b_m / m` of the phase.
    fn phase_coefficients(&self) -> Vec<f64> {
        let at = self.scale * self.duration;
        self.expansion
            .coefficients()
            .iter()
            .enumerate()
            .map(|(i, b)| -at * b / (i + 1) as f64)
            .collect()
    }

    fn scaled_shape(&self) -> Vec<f64> {
        self.expansion.coefficients().iter().map(|b| self.scale * b).collect()
    }

    /// Instantaneous frequency `m(t) = A Σ b_m sin(2πmt/T)` in Hz.
    pub fn modulation_at(&self, t: f64) -> f64 {
        harmonic_sum_at(&self.scaled_shape(), self.fundamental() * t).im
    }

    /// Phase `φ(t) = Σ_m (-A T b_m/m) cos(2πmt/T)` in radians.
    pub fn phase_at(&self, t: f64) -> f64 {
        harmonic_sum_at(&self.phase_coefficients(), self.fundamental() * t).re
    }

    /// `m(t_i)` on the grid `t_i = t_0 + iT/n`.
    pub fn modulation_on_grid(&self, t0: f64, n: usize) -> Vec<f64> {
        harmonic_sum_on_grid(&self.scaled_shape(), self.fundamental() * t0, n)
            .into_iter()
            .map(|v| v.im)
            .collect()
    }

    /// `φ(t_i)` on the grid `t_i = t_0 + iT/n`.
    pub fn phase_on_grid(&self, t0: f64, n: usize) -> Vec<f64> {
        harmonic_sum_on_grid(&self.phase_coefficients(), self.fundamental() * t0, n)
            .into_iter()
            .map(|v| v.re)
            .collect()
    }
}

fn validate_positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive and finite, got {value}")))
    }
}

fn peak_normalized_scale(expansion: &KapteynExpansion, bandwidth: f64) -> f64 {
    let n = PEAK_SEARCH_POINTS;
    let psi0 = -PI + PI / n as f64;
    let peak = harmonic_sum_on_grid(expansion.coefficients(), psi0, n)
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.im.abs()));
    if peak > 0.0 {
        0.5 * bandwidth / peak
    } else {
        0.5 * bandwidth
    }
}

/// Cell-midpoint sample times `t_i = -T/2 + (i + ½)T/n`.
pub fn midpoint_grid(duration: f64, n: usize) -> Vec<f64> {
    let dt = duration / n as f64;
    (0..n).map(|i| -0.5 * duration + (i as f64 + 0.5) * dt).collect()
}

/// Instantaneous frequency in Hz at each time in `t_grid`.
pub fn modulation_function(params: &WaveformParams, t_grid: &[f64]) -> Vec<f64> {
    let shape = params.scaled_shape();
    let w = params.fundamental();
    t_grid.iter().map(|&t| harmonic_sum_at(&shape, w * t).im).collect()
}

/// Instantaneous phase in radians at each time in `t_grid`.
pub fn phase_function(params: &WaveformParams, t_grid: &[f64]) -> Vec<f64> {
    let coeffs = params.phase_coefficients();
    let w = params.fundamental();
    t_grid.iter().map(|&t| harmonic_sum_at(&coeffs, w * t).re).collect()
}
