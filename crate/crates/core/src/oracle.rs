//! The counted objective: energy estimation bound to one ansatz and
//! Hamiltonian, with evaluation, sample and unique-point accounting.

use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::estimator::{estimate_energy, resample_count, EnergyEstimate, EstimatorConfig};
use crate::pauli::PauliSum;
use crate::sim::AnsatzCircuit;

/// Monotone evaluation counters. `evaluations`, `samples` and
/// `unique_points` cover the optimization phase only; resampling is tracked
/// separately so unique-circuit metrics exclude it by construction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    pub evaluations: u64,
    pub samples: u64,
    pub unique_points: u64,
    pub resample_evaluations: u64,
    pub resample_samples: u64,
}

impl Counters {
    pub fn total_samples(&self) -> u64 {
        self.samples + self.resample_samples
    }
}

/// Anything an optimizer can minimize: returns a sampled estimate at a
/// parameter point and exposes its accounting state.
pub trait Objective {
    fn evaluate(&mut self, theta: &[f64]) -> Result<EnergyEstimate>;

    fn counters(&self) -> Counters {
        Counters::default()
    }

    fn dim(&self) -> usize;
}

fn theta_key(theta: &[f64]) -> Vec<u64> {
    theta.iter().map(|x| x.to_bits()).collect()
}

/// Estimator bound to an ansatz, a Hamiltonian and a seeded stream.
///
/// The Hamiltonian is swappable so one oracle (and its counters and stream)
/// can follow a continuation path.
pub struct ObjectiveOracle {
    ansatz: AnsatzCircuit,
    hamiltonian: PauliSum,
    cfg: EstimatorConfig,
    rng: ChaCha8Rng,
    counters: Counters,
    visited: HashSet<Vec<u64>>,
}

impl ObjectiveOracle {
    pub fn new(ansatz: AnsatzCircuit, hamiltonian: PauliSum, cfg: EstimatorConfig) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        Self {
            ansatz,
            hamiltonian,
            cfg,
            rng,
            counters: Counters::default(),
            visited: HashSet::new(),
        }
    }

    pub fn ansatz(&self) -> &AnsatzCircuit {
        &self.ansatz
    }

    pub fn hamiltonian(&self) -> &PauliSum {
        &self.hamiltonian
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.cfg
    }

    /// Swaps the operator being estimated; counters and stream carry on.
    pub fn set_hamiltonian(&mut self, hamiltonian: PauliSum) {
        self.hamiltonian = hamiltonian;
    }

    /// Re-estimates a converged point to tolerance `eps_r`. Charges the
    /// pilot and the refined estimate to the resampling counters and never
    /// touches the unique-point set.
    pub fn resample(&mut self, theta: &[f64], eps_r: f64) -> Result<EnergyEstimate> {
        let pilot = estimate_energy(&self.ansatz, theta, &self.hamiltonian, &self.cfg, &mut self.rng)?;
        self.counters.resample_evaluations += 1;
        self.counters.resample_samples += pilot.samples_used;
        let n_r = resample_count(self.cfg.samples_per_eval, pilot.variance, eps_r)?;
        let refined_cfg = EstimatorConfig {
            samples_per_eval: n_r,
            ..self.cfg
        };
        let mut refined = estimate_energy(
            &self.ansatz,
            theta,
            &self.hamiltonian,
            &refined_cfg,
            &mut self.rng,
        )?;
        self.counters.resample_evaluations += 1;
        self.counters.resample_samples += refined.samples_used;
        refined.unique_circuit = false;
        Ok(refined)
    }
}

impl Objective for ObjectiveOracle {
    fn evaluate(&mut self, theta: &[f64]) -> Result<EnergyEstimate> {
        let mut est = estimate_energy(&self.ansatz, theta, &self.hamiltonian, &self.cfg, &mut self.rng)?;
        self.counters.evaluations += 1;
        self.counters.samples += est.samples_used;
        est.unique_circuit = self.visited.insert(theta_key(theta));
        if est.unique_circuit {
            self.counters.unique_points += 1;
        }
        Ok(est)
    }

    fn counters(&self) -> Counters {
        self.counters
    }

    fn dim(&self) -> usize {
        self.ansatz.param_count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::parse_pauli_sum;
    use crate::sim::AnsatzSpec;

    fn oracle(seed: u64) -> ObjectiveOracle {
        let ansatz = AnsatzSpec::h2().build().unwrap();
        let h = parse_pauli_sum("0.7 ZZ\n-0.4 XX\n0.2 IZ").unwrap();
        ObjectiveOracle::new(
            ansatz,
            h,
            EstimatorConfig {
                rng_seed: seed,
                ..Default::default()
            },
        )
    }

    #[test]
    fn unique_points_count_first_visits_only() {
        let mut o = oracle(1);
        let a = [0.1, 0.2, 0.3, 0.4];
        let b = [0.5, 0.2, 0.3, 0.4];
        assert!(o.evaluate(&a).unwrap().unique_circuit);
        assert!(!o.evaluate(&a).unwrap().unique_circuit);
        assert!(o.evaluate(&b).unwrap().unique_circuit);
        let c = o.counters();
        assert_eq!(c.evaluations, 3);
        assert_eq!(c.unique_points, 2);
        assert_eq!(c.samples, 3 * 64);
    }

    #[test]
    fn resampling_counts_apart_from_optimization() {
        let mut o = oracle(2);
        let theta = [0.1, 0.2, 0.3, 0.4];
        o.evaluate(&theta).unwrap();
        let before = o.counters();
        let refined = o.resample(&theta, 5e-4).unwrap();
        let after = o.counters();
        assert_eq!(after.evaluations, before.evaluations);
        assert_eq!(after.unique_points, before.unique_points);
        assert_eq!(after.resample_evaluations, 2);
        assert_eq!(after.resample_samples, 64 + refined.samples_used);
        assert!(refined.samples_used >= 64);
        // The refined variance tracks eps_r^2 up to pilot-variance noise.
        assert!(refined.variance <= 2.0 * 5e-4 * 5e-4);
    }

    #[test]
    fn counters_are_monotone() {
        let mut o = oracle(3);
        let mut last = o.counters();
        for i in 0..10 {
            let theta = [0.01 * i as f64, 0.2, 0.3, 0.4];
            o.evaluate(&theta).unwrap();
            let now = o.counters();
            assert!(now.evaluations > last.evaluations);
            assert!(now.samples > last.samples);
            assert!(now.unique_points >= last.unique_points);
            last = now;
        }
    }
}
