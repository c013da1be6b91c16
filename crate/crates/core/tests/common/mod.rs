#![allow(dead_code)]

use std::f64::consts::PI;

use mtffm_core::kapteyn::{DesignCoefficients, WaveformParams};
use mtffm_core::waveform::SampledWaveform;
use num_complex::Complex64;
use proptest::prelude::*;

/// Design with `K` entries in `[-1, 1]` rescaled to the weighted sum `ws`.
pub fn design_from(raw: &[f64], ws: f64) -> DesignCoefficients {
    let total: f64 = raw.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v.abs()).sum();
    if total == 0.0 {
        return DesignCoefficients::zeros(raw.len()).unwrap();
    }
    DesignCoefficients::new(raw.iter().map(|v| v * ws / total).collect()).unwrap()
}

pub fn designs(max_k: usize, ws: std::ops::Range<f64>) -> impl Strategy<Value = DesignCoefficients> {
    (prop::collection::vec(-1.0f64..1.0, 1..=max_k), ws)
        .prop_filter("non-zero", |(raw, _)| raw.iter().any(|v| v.abs() > 1e-3))
        .prop_map(|(raw, ws)| design_from(&raw, ws))
}

/// Linear FM pulse `e^{jπ(B/T)t²}/√T` on the midpoint grid.
pub fn lfm(duration: f64, sweep: f64, n: usize) -> SampledWaveform {
    let rate = sweep / duration;
    let dt = duration / n as f64;
    let samples = (0..n)
        .map(|i| {
            let t = -0.5 * duration + (i as f64 + 0.5) * dt;
            Complex64::from_polar(1.0 / duration.sqrt(), PI * rate * t * t)
        })
        .collect();
    SampledWaveform::from_samples(samples, duration).unwrap()
}

pub fn params(duration: f64, bandwidth: f64, z: &DesignCoefficients) -> WaveformParams {
    WaveformParams::new(duration, bandwidth, z.clone()).unwrap()
}
