//! ISR minimization over the design coefficients.
//!
//! Minimizes the linear integrated sidelobe ratio subject to
//! `Σ k|z_k| ≤ 1` and a two-sided band `β²_target (1 ± δ)` on the squared
//! RMS bandwidth. The convergence set is enforced by radial projection; the
//! band by a quadratic penalty on the relative violation. The solver is a
//! seeded compass search in the weighted coordinates `k z_k`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rand_pcg::Pcg64;

use crate::error::{Error, Result};
use crate::kapteyn::{DesignCoefficients, WaveformParams, WEIGHTED_SUM_SLACK};
use crate::metrics::{isr_sampled, rms_bandwidth_direct, IsrResult, MIN_POINTS_PER_RESOLUTION};
use crate::special::weighted_sum;

/// Weighted sum used by [`random_init`] unless told otherwise.
pub const DEFAULT_INIT_MARGIN: f64 = 0.95;

/// Step length below which the compass search stops.
pub const MIN_STEP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    /// Relative half-width of the RMS-bandwidth band.
    pub delta: f64,
    pub max_evals: usize,
    /// Seeds the poll ordering.
    pub seed: u64,
    pub penalty_weight: f64,
    /// Initial step, in units of the weighted sum `Σ k|z_k|`.
    pub step_init: f64,
    /// Delay samples per `1/Δf` in the ACF profile behind each evaluation.
    pub points_per_resolution: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            delta: 0.1,
            max_evals: 4000,
            seed: 0,
            penalty_weight: 100.0,
            step_init: 0.05,
            points_per_resolution: MIN_POINTS_PER_RESOLUTION,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Precondition(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if self.max_evals == 0 {
            return Err(Error::Precondition("max_evals must be positive".into()));
        }
        if !(self.penalty_weight >= 0.0 && self.penalty_weight.is_finite()) {
            return Err(Error::Precondition("penalty_weight must be finite and non-negative".into()));
        }
        if !(self.step_init > 0.0 && self.step_init.is_finite()) {
            return Err(Error::Precondition("step_init must be finite and positive".into()));
        }
        if self.points_per_resolution < 4 {
            return Err(Error::Precondition("points_per_resolution must be at least 4".into()));
        }
        Ok(())
    }
}

/// One record per completed poll: evaluations spent so far and the
/// incumbent's ISR, band violation and weighted sum `Σ k|z_k|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub evals: usize,
    pub isr_db: f64,
    pub violation: f64,
    pub weighted_sum: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationTrace {
    pub iterations: Vec<TraceRecord>,
    pub best_z: DesignCoefficients,
    pub initial_isr_db: f64,
    pub final_isr_db: f64,
    pub initial_objective: f64,
    pub final_objective: f64,
    pub evals: usize,
}

impl OptimizationTrace {
    pub fn improvement_db(&self) -> f64 {
        self.initial_isr_db - self.final_isr_db
    }
}

/// `K` i.i.d. standard normal draws rescaled so that `Σ k|z_k| = margin`.
///
/// The generator is PCG-64 (`Pcg64::seed_from_u64`), so a seed reproduces
/// the same vector on every platform.
pub fn random_init(k: usize, seed: u64, margin: f64) -> Result<DesignCoefficients> {
    if k < 1 {
        return Err(Error::Precondition("random_init needs K ≥ 1".into()));
    }
    if !(margin > 0.0 && margin <= 1.0) {
        return Err(Error::Precondition(format!("margin must lie in (0, 1], got {margin}")));
    }
    let mut rng = Pcg64::seed_from_u64(seed);
    let mut z: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
    let ws = weighted_sum(&z);
    for v in z.iter_mut() {
        *v *= margin / ws;
    }
    DesignCoefficients::new(z)
}

/// Radial projection onto `Σ k|z_k| ≤ 1`.
pub fn project_convergence(z: &[f64]) -> Vec<f64> {
    let ws = weighted_sum(z);
    if ws <= 1.0 {
        return z.to_vec();
    }
    let mut out: Vec<f64> = z.iter().map(|v| v / ws).collect();
    // rounding can leave the sum a few ulps above one
    while weighted_sum(&out) > 1.0 {
        for v in out.iter_mut() {
            *v *= 1.0 - f64::EPSILON;
        }
    }
    out
}

/// Relative distance of `β²/β²_target` outside `[1 - δ, 1 + δ]`.
pub fn band_violation(beta2: f64, target: f64, delta: f64) -> f64 {
    let ratio = beta2 / target;
    (ratio - (1.0 + delta)).max(0.0) + ((1.0 - delta) - ratio).max(0.0)
}

/// One objective evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub objective: f64,
    pub isr: IsrResult,
    pub violation: f64,
    pub beta2: f64,
}

/// Penalized objective for designs sharing `T` and `Δf` with `reference`,
/// whose own squared RMS bandwidth anchors the band.
#[derive(Debug, Clone)]
pub struct Objective {
    duration: f64,
    bandwidth: f64,
    target_beta2: f64,
    delta: f64,
    penalty_weight: f64,
    points_per_resolution: usize,
}

impl Objective {
    pub fn new(reference: &WaveformParams, config: &OptimizerConfig) -> Result<Self> {
        config.validate()?;
        let target_beta2 = rms_bandwidth_direct(reference.coeffs(), reference.scale()).powi(2);
        if !(target_beta2 > 0.0) {
            return Err(Error::Precondition("reference design has zero RMS bandwidth".into()));
        }
        Ok(Self {
            duration: reference.duration(),
            bandwidth: reference.bandwidth(),
            target_beta2,
            delta: config.delta,
            penalty_weight: config.penalty_weight,
            points_per_resolution: config.points_per_resolution,
        })
    }

    pub fn target_beta2(&self) -> f64 {
        self.target_beta2
    }

    pub fn evaluate(&self, z: &DesignCoefficients) -> Result<Evaluation> {
        let params = WaveformParams::new(self.duration, self.bandwidth, z.clone())?;
        let isr = isr_sampled(&params, self.points_per_resolution)?;
        let beta2 = rms_bandwidth_direct(z, params.scale()).powi(2);
        let violation = band_violation(beta2, self.target_beta2, self.delta);
        let objective = isr.linear() + self.penalty_weight * violation * violation;
        Ok(Evaluation { objective, isr, violation, beta2 })
    }
}

/// Penalized objective of `z`, with the band anchored at `params`.
pub fn objective(z: &DesignCoefficients, params: &WaveformParams, config: &OptimizerConfig) -> Result<f64> {
    Ok(Objective::new(params, config)?.evaluate(z)?.objective)
}

fn record(evals: usize, eval: &Evaluation, z: &DesignCoefficients) -> TraceRecord {
    TraceRecord { evals, isr_db: eval.isr.isr_db, violation: eval.violation, weighted_sum: z.weighted_sum() }
}

/// Compass search from `init`.
///
/// Polls `±step/k` along each coordinate `z_k` in a seeded random order,
/// moves to the first improving point and repeats a successful direction
/// with a doubled step. A poll with no improvement halves the step. Every
/// trial point is projected onto the convergence set. Once the incumbent
/// lies inside the band, points outside it are never accepted. Trial points
/// whose ISR is undefined are rejected.
pub fn optimize(init: &DesignCoefficients, params: &WaveformParams, config: &OptimizerConfig) -> Result<OptimizationTrace> {
    config.validate()?;
    let start = project_convergence(init.as_slice());
    if weighted_sum(&start) > 1.0 + WEIGHTED_SUM_SLACK {
        return Err(Error::Precondition("initial design infeasible after projection".into()));
    }
    let start = DesignCoefficients::new(start)?;
    let objective = Objective::new(params, config)?;
    let mut rng = Pcg64::seed_from_u64(config.seed);

    let mut best_z = start;
    let mut best = objective.evaluate(&best_z)?;
    let initial = best.clone();
    let mut evals = 1;
    let mut iterations = vec![record(evals, &best, &best_z)];

    let k = best_z.len();
    let mut directions: Vec<(usize, f64)> = (0..k).flat_map(|i| [(i, 1.0), (i, -1.0)]).collect();
    let mut step = config.step_init;

    let accepts = |trial: &Evaluation, incumbent: &Evaluation| {
        trial.objective < incumbent.objective && (incumbent.violation > 0.0 || trial.violation == 0.0)
    };

    'search: while step >= MIN_STEP && evals < config.max_evals {
        directions.shuffle(&mut rng);
        let mut improved = false;
        for &(i, sign) in &directions {
            let mut length = step;
            loop {
                if evals >= config.max_evals {
                    break 'search;
                }
                let mut z = best_z.as_slice().to_vec();
                z[i] += sign * length / (i + 1) as f64;
                let z = DesignCoefficients::new(project_convergence(&z))?;
                evals += 1;
                match objective.evaluate(&z) {
                    Ok(trial) if accepts(&trial, &best) => {
                        best = trial;
                        best_z = z;
                        improved = true;
                        length *= 2.0;
                    }
                    _ => break,
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
        iterations.push(record(evals, &best, &best_z));
    }
    if iterations.last().map(|r| r.evals) != Some(evals) {
        iterations.push(record(evals, &best, &best_z));
    }

    Ok(OptimizationTrace {
        iterations,
        best_z,
        initial_isr_db: initial.isr.isr_db,
        final_isr_db: best.isr.isr_db,
        initial_objective: initial.objective,
        final_objective: best.objective,
        evals,
    })
}
