//! Evaluation of real-coefficient harmonic sums `Σ_{m≥1} a_m e^{jmψ}`.
//!
//! Both the modulation function (sine series) and the phase (cosine series)
//! are read off the imaginary or real part of the same complex sum.

use core::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

/// Re-seed interval for the rotation recurrence; bounds the drift of `|w^m|`.
const RESEED: usize = 64;

/// `Σ_{m=1}^{M} a_m e^{jmψ}` at a single angle, `coeffs[m-1] = a_m`.
pub(crate) fn harmonic_sum_at(coeffs: &[f64], psi: f64) -> Complex64 {
    let w = Complex64::cis(psi);
    let mut p = w;
    let mut acc = Complex64::new(0.0, 0.0);
    for (idx, &a) in coeffs.iter().enumerate() {
        let m = idx + 1;
        if m % RESEED == 0 {
            p = Complex64::cis(m as f64 * psi);
        }
        acc += p * a;
        p *= w;
    }
    acc
}

/// `Σ_{m=1}^{M} a_m e^{jmψ_i}` on the uniform angle grid `ψ_i = ψ₀ + 2πi/n`.
///
/// Harmonics above `n` are folded into their alias bins, so the returned
/// values are the exact truncated sum at the grid points.
pub(crate) fn harmonic_sum_on_grid(coeffs: &[f64], psi0: f64, n: usize) -> Vec<Complex64> {
    let mut bins = vec![Complex64::new(0.0, 0.0); n];
    if n == 0 {
        return bins;
    }
    for (idx, &a) in coeffs.iter().enumerate() {
        let m = idx + 1;
        // reduce the offset phase modulo 2π before scaling to keep it exact-ish
        let phase = (m as f64 * psi0) % (2.0 * PI);
        bins[m % n] += Complex64::cis(phase) * a;
    }
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_inverse(n).process(&mut bins);
    bins
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_matches_pointwise_sum() {
        let coeffs: Vec<f64> = (1..=40).map(|m| 1.0 / (m as f64).powi(2)).collect();
        let n = 32; // fewer points than harmonics: exercises folding
        let psi0 = -PI + PI / n as f64;
        let grid = harmonic_sum_on_grid(&coeffs, psi0, n);
        for (i, g) in grid.iter().enumerate() {
            let psi = psi0 + 2.0 * PI * i as f64 / n as f64;
            let direct = harmonic_sum_at(&coeffs, psi);
            assert!((g - direct).norm() < 1e-12, "i={i}: {g} vs {direct}");
        }
    }

    #[test]
    fn pointwise_sum_is_conjugate_symmetric() {
        let coeffs: Vec<f64> = (1..=300).map(|m| (m as f64).sin() / m as f64).collect();
        for &psi in &[0.1, 1.3, 2.9, 5.0] {
            let a = harmonic_sum_at(&coeffs, psi);
            let b = harmonic_sum_at(&coeffs, -psi);
            assert_eq!(a.re, b.re);
            assert_eq!(a.im, -b.im);
        }
    }
}
