//! Simultaneous perturbation stochastic approximation with standard gain
//! sequences and a first-step calibration of the gain numerator.

use rand::Rng;

use crate::error::Result;
use crate::oracle::Objective;

use super::{HistoryPoint, OptimizerRun, StopReason};

/// Gain exponents and perturbation scale. `a` is calibrated at runtime so the
/// magnitude of the first per-coordinate update matches `initial_step`.
#[derive(Debug, Clone, Copy)]
pub struct SpsaGains {
    pub alpha: f64,
    pub gamma: f64,
    pub stability: f64,
    pub perturbation: f64,
    pub initial_step: f64,
    pub calibration_pairs: usize,
}

impl Default for SpsaGains {
    fn default() -> Self {
        Self {
            alpha: 0.602,
            gamma: 0.101,
            stability: 0.0,
            perturbation: 0.1,
            initial_step: 1.0,
            calibration_pairs: 25,
        }
    }
}

fn rademacher(p: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..p)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect()
}

/// Runs SPSA for exactly `max_iter` iterations of two evaluations each,
/// after `2 * calibration_pairs` calibration evaluations that set the gain
/// numerator.
pub fn run_spsa(
    obj: &mut dyn Objective,
    theta0: &[f64],
    max_iter: usize,
    gains: &SpsaGains,
    rng: &mut impl Rng,
) -> Result<OptimizerRun> {
    let p = theta0.len();
    let c = gains.perturbation;

    // Calibration: average the magnitude of the per-coordinate directional
    // difference quotient at theta0, then choose a so the first update has
    // per-coordinate magnitude initial_step.
    let mut magnitude_acc = 0.0;
    let mut midpoint_acc = 0.0;
    let mut midpoint_var_acc = 0.0;
    for _ in 0..gains.calibration_pairs {
        let delta = rademacher(p, rng);
        let plus: Vec<f64> = theta0.iter().zip(&delta).map(|(t, d)| t + c * d).collect();
        let minus: Vec<f64> = theta0.iter().zip(&delta).map(|(t, d)| t - c * d).collect();
        let fp = obj.evaluate(&plus)?;
        let fm = obj.evaluate(&minus)?;
        magnitude_acc += (fp.mean - fm.mean).abs() / (2.0 * c);
        midpoint_acc += (fp.mean + fm.mean) / 2.0;
        midpoint_var_acc += (fp.variance + fm.variance) / 4.0;
    }
    let pairs = gains.calibration_pairs as f64;
    let avg_magnitude = magnitude_acc / pairs;
    let a = if avg_magnitude > 0.0 {
        gains.initial_step * (1.0 + gains.stability).powf(gains.alpha) / avg_magnitude
    } else {
        gains.initial_step
    };

    let mut theta = theta0.to_vec();
    let mut history = vec![HistoryPoint {
        theta: theta.clone(),
        energy: midpoint_acc / pairs,
        variance: midpoint_var_acc / (pairs * pairs),
        counters: obj.counters(),
    }];
    for k in 1..=max_iter {
        let ak = a / ((k as f64) + gains.stability).powf(gains.alpha);
        let ck = c / (k as f64).powf(gains.gamma);
        let delta = rademacher(p, rng);
        let plus: Vec<f64> = theta.iter().zip(&delta).map(|(t, d)| t + ck * d).collect();
        let minus: Vec<f64> = theta.iter().zip(&delta).map(|(t, d)| t - ck * d).collect();
        let fp = obj.evaluate(&plus)?;
        let fm = obj.evaluate(&minus)?;
        let diff = fp.mean - fm.mean;
        for (t, d) in theta.iter_mut().zip(&delta) {
            *t -= ak * diff / (2.0 * ck * d);
        }
        history.push(HistoryPoint {
            theta: theta.clone(),
            energy: (fp.mean + fm.mean) / 2.0,
            variance: (fp.variance + fm.variance) / 4.0,
            counters: obj.counters(),
        });
    }
    Ok(OptimizerRun {
        theta_final: theta,
        history,
        iterations: max_iter,
        stop_reason: StopReason::MaxIter,
        degenerate_moves: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::super::test_support::FnObjective;
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_evaluations_per_iteration_plus_calibration() {
        let mut obj = FnObjective::new(3, |t: &[f64]| t.iter().map(|x| x * x).sum::<f64>());
        let gains = SpsaGains::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let run = run_spsa(&mut obj, &[0.5, -0.5, 0.25], 100, &gains, &mut rng).unwrap();
        assert_eq!(run.iterations, 100);
        assert_eq!(
            obj.counters().evaluations,
            2 * 100 + 2 * gains.calibration_pairs as u64
        );
        assert_eq!(run.history.len(), 101);
    }

    #[test]
    fn quadratic_shrinks_over_500_iterations() {
        let gains = SpsaGains::default();
        let mut final_norms: Vec<f64> = (0..20)
            .map(|seed| {
                let mut obj =
                    FnObjective::new(4, |t: &[f64]| t.iter().map(|x| x * x).sum::<f64>());
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let run = run_spsa(&mut obj, &[1.0, -1.0, 0.5, -0.5], 500, &gains, &mut rng)
                    .unwrap();
                run.theta_final.iter().map(|x| x * x).sum::<f64>().sqrt()
            })
            .collect();
        final_norms.sort_by(f64::total_cmp);
        let median = final_norms[final_norms.len() / 2];
        assert!(median < 0.1, "median final norm {median}");
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let gains = SpsaGains::default();
        let run_once = || {
            let mut obj = FnObjective::new(2, |t: &[f64]| t[0] * t[0] + 2.0 * t[1] * t[1]);
            let mut rng = ChaCha8Rng::seed_from_u64(77);
            run_spsa(&mut obj, &[0.3, 0.7], 50, &gains, &mut rng)
                .unwrap()
                .theta_final
        };
        assert_eq!(run_once(), run_once());
    }
}
