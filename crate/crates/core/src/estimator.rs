//! Sampled energy estimation with a variance estimate, and the
//! variance-driven resampling procedure.
//!
//! Each non-identity term is measured independently: the state is rotated so
//! the word becomes Z-form (X via a Hadamard, Y via S-dagger then Hadamard),
//! the exact +1/-1 outcome distribution is read off the rotated amplitudes,
//! and the requested number of draws is taken from it. Sampling a binomial
//! count is distributionally identical to taking the draws one at a time and
//! keeps the cost independent of the draw count.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{exact_expectation, PauliSum, PauliWord};
use crate::sim::{apply_one_qubit, AnsatzCircuit, StateVector};

/// One sampled objective value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyEstimate {
    /// Sample mean (Hartree).
    pub mean: f64,
    /// Variance of the returned mean (Hartree^2).
    pub variance: f64,
    /// Per-term draw count used to build the estimate.
    pub samples_used: u64,
    /// Whether the evaluation visited a previously unseen parameter vector;
    /// set by the accounting layer.
    pub unique_circuit: bool,
}

/// Estimator configuration: draws per evaluation, stream seed, exact mode.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct EstimatorConfig {
    /// Draws per term for one objective evaluation (m).
    pub samples_per_eval: u64,
    /// Base seed for the estimator stream.
    pub rng_seed: u64,
    /// When set, evaluations return the exact expectation with zero variance.
    pub noiseless: bool,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            samples_per_eval: 64,
            rng_seed: 0,
            noiseless: false,
        }
    }
}

impl EstimatorConfig {
    fn validate(&self) -> Result<()> {
        if self.samples_per_eval == 0 {
            return Err(Error::ZeroSamples);
        }
        Ok(())
    }
}

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Rotates a copy of the state so that measuring `word` becomes a Z-basis
/// parity measurement, and returns the probability of the +1 outcome.
fn plus_outcome_probability(word: &PauliWord, state: &StateVector) -> f64 {
    let n = state.n_qubits();
    let mut rotated = state.clone();
    let h = [
        Complex64::new(FRAC_1_SQRT_2, 0.0),
        Complex64::new(FRAC_1_SQRT_2, 0.0),
        Complex64::new(FRAC_1_SQRT_2, 0.0),
        Complex64::new(-FRAC_1_SQRT_2, 0.0),
    ];
    let s_dag = [
        Complex64::ONE,
        Complex64::ZERO,
        Complex64::ZERO,
        Complex64::new(0.0, -1.0),
    ];
    for j in 0..n {
        let bit = 1u32 << j;
        let qubit = n - j;
        let x = word.x_mask() & bit != 0;
        let z = word.z_mask() & bit != 0;
        if x && z {
            apply_one_qubit(rotated.amps_mut(), n, qubit, s_dag);
            apply_one_qubit(rotated.amps_mut(), n, qubit, h);
        } else if x {
            apply_one_qubit(rotated.amps_mut(), n, qubit, h);
        }
    }
    let support = (word.x_mask() | word.z_mask()) as usize;
    let mut p_plus = 0.0;
    for (i, a) in rotated.amplitudes().iter().enumerate() {
        if (i & support).count_ones() % 2 == 0 {
            p_plus += a.norm_sqr();
        }
    }
    p_plus.clamp(0.0, 1.0)
}

/// Draws `m` outcomes of measuring a unit-coefficient Pauli word and returns
/// the sample mean and the unbiased sample variance of the draws.
pub fn sample_term_mean(
    word: &PauliWord,
    state: &StateVector,
    m: u64,
    rng: &mut impl Rng,
) -> Result<(f64, f64)> {
    if word.is_identity() {
        return Err(Error::IdentityTermSampled);
    }
    if word.n_qubits() != state.n_qubits() {
        return Err(Error::QubitCountMismatch {
            left: word.n_qubits(),
            right: state.n_qubits(),
        });
    }
    if m == 0 {
        return Err(Error::ZeroSamples);
    }
    let p_plus = plus_outcome_probability(word, state);
    let plus_draws = Binomial::new(m, p_plus)
        .map_err(|e| Error::Numerical(format!("binomial: {e}")))?
        .sample(rng);
    let mean = (2.0 * plus_draws as f64 - m as f64) / m as f64;
    // Outcomes are +-1, so the unbiased sample variance is a function of the
    // mean: sum (x_i - mean)^2 = m (1 - mean^2).
    let sample_variance = if m > 1 {
        (m as f64) * (1.0 - mean * mean) / (m as f64 - 1.0)
    } else {
        0.0
    };
    Ok((mean, sample_variance))
}

/// Builds the sampled objective estimate for one parameter point. Identity
/// terms enter exactly; each non-identity term gets its own draws. In
/// noiseless mode this is the exact expectation with zero variance.
pub fn estimate_energy(
    ansatz: &AnsatzCircuit,
    theta: &[f64],
    h: &PauliSum,
    cfg: &EstimatorConfig,
    rng: &mut impl Rng,
) -> Result<EnergyEstimate> {
    cfg.validate()?;
    let state = ansatz.prepare_state(theta)?;
    if cfg.noiseless {
        return Ok(EnergyEstimate {
            mean: exact_expectation(h, &state)?,
            variance: 0.0,
            samples_used: cfg.samples_per_eval,
            unique_circuit: false,
        });
    }
    let m = cfg.samples_per_eval;
    let mut mean = 0.0;
    let mut variance = 0.0;
    for term in h.terms() {
        if term.word.is_identity() {
            mean += term.coefficient;
            continue;
        }
        let (term_mean, term_var) = sample_term_mean(&term.word, &state, m, rng)?;
        mean += term.coefficient * term_mean;
        variance += term.coefficient * term.coefficient * term_var / m as f64;
    }
    Ok(EnergyEstimate {
        mean,
        variance,
        samples_used: m,
        unique_circuit: false,
    })
}

/// Draw count needed to bring the standard deviation of the mean below
/// `eps_r`, given a pilot variance of the m-sample estimator:
/// N_r = max(m, ceil(m * variance / eps_r^2)).
pub fn resample_count(m: u64, pilot_variance: f64, eps_r: f64) -> Result<u64> {
    if eps_r <= 0.0 {
        return Err(Error::NonPositiveTolerance(eps_r));
    }
    let raw = (m as f64) * pilot_variance / (eps_r * eps_r);
    Ok(m.max(raw.ceil() as u64))
}

/// Re-estimates the objective at a converged point: an m-sample pilot sets
/// the draw count N_r, and a fresh N_r-sample estimate is returned. The
/// pilot's cost (m draws) is charged by the caller.
pub fn resample_to_tolerance(
    ansatz: &AnsatzCircuit,
    theta: &[f64],
    h: &PauliSum,
    cfg: &EstimatorConfig,
    eps_r: f64,
    rng: &mut impl Rng,
) -> Result<EnergyEstimate> {
    let pilot = estimate_energy(ansatz, theta, h, cfg, rng)?;
    let n_r = resample_count(cfg.samples_per_eval, pilot.variance, eps_r)?;
    let refined_cfg = EstimatorConfig {
        samples_per_eval: n_r,
        ..*cfg
    };
    estimate_energy(ansatz, theta, h, &refined_cfg, rng)
}
