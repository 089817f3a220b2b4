//! Noise-robust optimizers (gradient descent with the parameter shift rule,
//! simultaneous perturbation, sequential sinusoidal coordinate minimization)
//! and the windowed adaptive termination test.

mod nft;
mod sgd;
mod spsa;

pub use nft::run_nft;
pub use sgd::run_sgd;
pub use spsa::{run_spsa, SpsaGains};

use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;

use crate::error::Result;
use crate::oracle::{Counters, Objective};

/// Windowed termination tolerances.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TerminationConfig {
    /// Window length N_w.
    pub window: usize,
    /// Objective tolerance (Hartree).
    pub f_tol: f64,
    /// Parameter tolerance (Euclidean norm, radians).
    pub theta_tol: f64,
}

impl TerminationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 || self.f_tol <= 0.0 || self.theta_tol <= 0.0 {
            return Err(crate::error::Error::Numerical(
                "termination window must be >= 1 with positive tolerances".into(),
            ));
        }
        Ok(())
    }
}

/// Why an optimizer run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxIter,
    FWindow,
    ThetaWindow,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            StopReason::MaxIter => "max_iter",
            StopReason::FWindow => "f_window",
            StopReason::ThetaWindow => "theta_window",
        };
        write!(f, "{s}")
    }
}

/// One recorded iterate.
#[derive(Debug, Clone)]
pub struct HistoryPoint {
    pub theta: Vec<f64>,
    pub energy: f64,
    pub variance: f64,
    /// Counter snapshot at record time.
    pub counters: Counters,
}

/// Outcome of one optimizer run. `history` has `iterations + 1` entries:
/// the initial point plus one per iteration.
#[derive(Debug, Clone)]
pub struct OptimizerRun {
    pub theta_final: Vec<f64>,
    pub history: Vec<HistoryPoint>,
    pub iterations: usize,
    pub stop_reason: StopReason,
    /// Coordinate updates skipped because the fitted amplitude was
    /// negligible (sequential minimization only).
    pub degenerate_moves: u32,
}

impl OptimizerRun {
    pub fn final_energy(&self) -> f64 {
        self.history.last().map_or(f64::NAN, |h| h.energy)
    }
}

fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Change of the windowed average of the objective:
/// (1/N_w) |sum_{i=1..N_w} f[k-i] - sum_{i=1..N_w} f[k+1-i]| for the latest k.
pub fn windowed_f_criterion(f: &[f64], window: usize) -> Option<f64> {
    let k = f.len().checked_sub(1)?;
    if k < window {
        return None;
    }
    let older: f64 = (1..=window).map(|i| f[k - i]).sum();
    let newer: f64 = (1..=window).map(|i| f[k + 1 - i]).sum();
    Some((older - newer).abs() / window as f64)
}

/// The same quantity after cancelling the shared terms:
/// |f[k] - f[k-N_w]| / N_w.
pub fn telescoped_f_criterion(f: &[f64], window: usize) -> Option<f64> {
    let k = f.len().checked_sub(1)?;
    if k < window {
        return None;
    }
    Some((f[k] - f[k - window]).abs() / window as f64)
}

/// Windowed-average parameter drift (Euclidean norm of the difference of
/// window sums, divided by N_w).
pub fn windowed_theta_criterion(thetas: &[Vec<f64>], window: usize) -> Option<f64> {
    let k = thetas.len().checked_sub(1)?;
    if k < window {
        return None;
    }
    let p = thetas[k].len();
    let mut diff = vec![0.0; p];
    for i in 1..=window {
        for j in 0..p {
            diff[j] += thetas[k - i][j] - thetas[k + 1 - i][j];
        }
    }
    Some(diff.iter().map(|d| d * d).sum::<f64>().sqrt() / window as f64)
}

/// Telescoped parameter drift: ||theta[k] - theta[k-N_w]|| / N_w.
pub fn telescoped_theta_criterion(thetas: &[Vec<f64>], window: usize) -> Option<f64> {
    let k = thetas.len().checked_sub(1)?;
    if k < window {
        return None;
    }
    Some(l2_distance(&thetas[k], &thetas[k - window]) / window as f64)
}

/// Windowed stop decision over recorded history. Returns `None` until
/// N_w + 1 iterates are recorded or while both criteria exceed tolerance.
pub fn termination_check(history: &[HistoryPoint], cfg: &TerminationConfig) -> Option<StopReason> {
    let k = history.len().checked_sub(1)?;
    if k < cfg.window {
        return None;
    }
    let newest = &history[k];
    let oldest = &history[k - cfg.window];
    let w = cfg.window as f64;
    if (newest.energy - oldest.energy).abs() / w <= cfg.f_tol {
        return Some(StopReason::FWindow);
    }
    if l2_distance(&newest.theta, &oldest.theta) / w <= cfg.theta_tol {
        return Some(StopReason::ThetaWindow);
    }
    None
}

/// Parameter-shift gradient: g_i = [f(theta + pi/2 e_i) - f(theta - pi/2 e_i)] / 2.
/// Exact for RY-type circuits; costs exactly 2p evaluations.
pub fn parameter_shift_gradient(obj: &mut dyn Objective, theta: &[f64]) -> Result<Vec<f64>> {
    let mut grad = Vec::with_capacity(theta.len());
    let mut shifted = theta.to_vec();
    for i in 0..theta.len() {
        shifted[i] = theta[i] + FRAC_PI_2;
        let plus = obj.evaluate(&shifted)?;
        shifted[i] = theta[i] - FRAC_PI_2;
        let minus = obj.evaluate(&shifted)?;
        shifted[i] = theta[i];
        grad.push((plus.mean - minus.mean) / 2.0);
    }
    Ok(grad)
}

/// Iterated parameter-shift Hessian: the four-point rule
/// [f(++) - f(+-) - f(-+) + f(--)] / 4 at shifts of pi/2 in coordinates
/// i and j, evaluated for i <= j and mirrored. Costs 4`p(p+1)/2` evaluations.
pub fn parameter_shift_hessian(obj: &mut dyn Objective, theta: &[f64]) -> Result<DMatrix<f64>> {
    let p = theta.len();
    let mut hess = DMatrix::<f64>::zeros(p, p);
    let mut point = theta.to_vec();
    let mut eval_at = |point: &mut Vec<f64>, i: usize, si: f64, j: usize, sj: f64| -> Result<f64> {
        point[i] += si * FRAC_PI_2;
        point[j] += sj * FRAC_PI_2;
        let est = obj.evaluate(point)?;
        point[i] = theta[i];
        point[j] = theta[j];
        Ok(est.mean)
    };
    for i in 0..p {
        for j in i..p {
            let pp = eval_at(&mut point, i, 1.0, j, 1.0)?;
            let pm = eval_at(&mut point, i, 1.0, j, -1.0)?;
            let mp = eval_at(&mut point, i, -1.0, j, 1.0)?;
            let mm = eval_at(&mut point, i, -1.0, j, -1.0)?;
            let value = (pp - pm - mp + mm) / 4.0;
            hess[(i, j)] = value;
            hess[(j, i)] = value;
        }
    }
    Ok(hess)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::EstimatorConfig;
    use crate::oracle::ObjectiveOracle;
    use crate::pauli::parse_pauli_sum;
    use crate::sim::{build_layered_ry_ansatz, AnsatzSpec};
    use approx::assert_abs_diff_eq;
    use rand::Rng as _;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn history_from(fs: &[f64], thetas: &[Vec<f64>]) -> Vec<HistoryPoint> {
        fs.iter()
            .zip(thetas)
            .map(|(&energy, theta)| HistoryPoint {
                theta: theta.clone(),
                energy,
                variance: 0.0,
                counters: Counters::default(),
            })
            .collect()
    }

    #[test]
    fn constant_sequence_stops_once_history_suffices() {
        let cfg = TerminationConfig {
            window: 5,
            f_tol: 1e-3,
            theta_tol: 1e-3,
        };
        let thetas: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        let fs = vec![1.0; 6];
        let hist = history_from(&fs, &thetas);
        assert!(termination_check(&hist[..5], &cfg).is_none());
        assert_eq!(termination_check(&hist, &cfg), Some(StopReason::FWindow));
    }

    #[test]
    fn slope_one_sequence_never_stops_on_f() {
        let cfg = TerminationConfig {
            window: 10,
            f_tol: 1e-3,
            theta_tol: 1e-12,
        };
        let fs: Vec<f64> = (0..40).map(|k| k as f64).collect();
        let thetas: Vec<Vec<f64>> = (0..40).map(|k| vec![k as f64]).collect();
        let hist = history_from(&fs, &thetas);
        for end in 11..=40 {
            assert!(termination_check(&hist[..end], &cfg).is_none());
        }
        // The windowed-average change for a slope-one sequence is exactly
        // N_w / N_w = 1.
        assert_eq!(windowed_f_criterion(&fs, 10), Some(1.0));
        assert_eq!(telescoped_f_criterion(&fs, 10), Some(1.0));
    }

    #[test]
    fn alternating_theta_stops_on_even_window() {
        let cfg = TerminationConfig {
            window: 10,
            f_tol: 1e-12,
            theta_tol: 1e-3,
        };
        let eps = 0.5; // far apart, yet the even window cancels exactly
        let thetas: Vec<Vec<f64>> = (0..12)
            .map(|k| vec![if k % 2 == 0 { 0.0 } else { eps }])
            .collect();
        let fs: Vec<f64> = (0..12).map(|k| k as f64 * 10.0).collect();
        let hist = history_from(&fs, &thetas);
        assert_eq!(windowed_theta_criterion(&thetas, 10), Some(0.0));
        assert_eq!(
            termination_check(&hist, &cfg),
            Some(StopReason::ThetaWindow)
        );
    }

    #[test]
    fn windowed_equals_telescoped_on_dyadic_histories() {
        // Values on a dyadic lattice make the window sums exact in floating
        // point, so the two forms agree bit for bit.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..1000 {
            let len = rng.random_range(12..40);
            let window = rng.random_range(1..=10);
            let fs: Vec<f64> = (0..len)
                .map(|_| rng.random_range(0u32..1 << 20) as f64 / (1u64 << 20) as f64)
                .collect();
            let thetas: Vec<Vec<f64>> = (0..len)
                .map(|_| {
                    (0..3)
                        .map(|_| rng.random_range(0u32..1 << 20) as f64 / (1u64 << 20) as f64)
                        .collect()
                })
                .collect();
            assert_eq!(
                windowed_f_criterion(&fs, window),
                telescoped_f_criterion(&fs, window)
            );
            assert_eq!(
                windowed_theta_criterion(&thetas, window),
                telescoped_theta_criterion(&thetas, window)
            );
        }
    }

    #[test]
    fn gradient_on_single_qubit_cosine() {
        let ansatz = build_layered_ry_ansatz(1, 0, &[], &[]).unwrap();
        let h = parse_pauli_sum("1.0 Z").unwrap();
        let cfg = EstimatorConfig {
            noiseless: true,
            ..Default::default()
        };
        let mut oracle = ObjectiveOracle::new(ansatz, h, cfg);
        let g0 = parameter_shift_gradient(&mut oracle, &[0.0]).unwrap();
        assert_abs_diff_eq!(g0[0], 0.0, epsilon = 1e-12);
        let g1 = parameter_shift_gradient(&mut oracle, &[std::f64::consts::FRAC_PI_2]).unwrap();
        assert_abs_diff_eq!(g1[0], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn hessian_on_single_qubit_cosine() {
        let ansatz = build_layered_ry_ansatz(1, 0, &[], &[]).unwrap();
        let h = parse_pauli_sum("1.0 Z").unwrap();
        let cfg = EstimatorConfig {
            noiseless: true,
            ..Default::default()
        };
        let mut oracle = ObjectiveOracle::new(ansatz, h, cfg);
        let hess = parameter_shift_hessian(&mut oracle, &[0.0]).unwrap();
        assert_abs_diff_eq!(hess[(0, 0)], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn shift_rule_evaluation_counts() {
        let ansatz = AnsatzSpec::lih().build().unwrap();
        let h = parse_pauli_sum("0.3 ZIII\n0.2 IXYI").unwrap();
        let cfg = EstimatorConfig {
            noiseless: true,
            ..Default::default()
        };
        let mut oracle = ObjectiveOracle::new(ansatz, h, cfg);
        let theta = vec![0.1; 20];
        parameter_shift_gradient(&mut oracle, &theta).unwrap();
        assert_eq!(oracle.counters().evaluations, 40);
        parameter_shift_hessian(&mut oracle, &theta).unwrap();
        assert_eq!(oracle.counters().evaluations, 40 + 4 * (20 * 21) / 2);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        use crate::sim::AnsatzCircuit;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let words = ["ZI", "IZ", "ZZ", "XX", "YY", "XI", "IX", "ZX"];
        for _ in 0..20 {
            let layers = rng.random_range(0..=2usize);
            let ansatz = AnsatzSpec {
                n_qubits: 2,
                layers,
                x_prefix: vec![],
                x_suffix: vec![],
            }
            .build()
            .unwrap();
            let p = ansatz.param_count();
            assert!(p <= 8);
            let n_terms = rng.random_range(1..=4usize);
            let text: String = (0..n_terms)
                .map(|_| {
                    format!(
                        "{} {}\n",
                        rng.random_range(-1.0..1.0f64),
                        words[rng.random_range(0..words.len())]
                    )
                })
                .collect();
            let h = match parse_pauli_sum(&text) {
                Ok(h) => h,
                Err(_) => continue, // merged away to nothing
            };
            let cfg = EstimatorConfig {
                noiseless: true,
                ..Default::default()
            };
            let theta: Vec<f64> = (0..p).map(|_| rng.random_range(-3.0..3.0)).collect();
            let mut oracle = ObjectiveOracle::new(ansatz.clone(), h.clone(), cfg);

            let fd = |ansatz: &AnsatzCircuit, theta: &[f64], i: usize, step: f64| -> (f64, f64) {
                let eval = |t: &[f64]| {
                    crate::pauli::exact_expectation(&h, &ansatz.prepare_state(t).unwrap()).unwrap()
                };
                let mut tp = theta.to_vec();
                let mut tm = theta.to_vec();
                tp[i] += step;
                tm[i] -= step;
                ((eval(&tp) - eval(&tm)) / (2.0 * step), eval(theta))
            };

            let grad = parameter_shift_gradient(&mut oracle, &theta).unwrap();
            for i in 0..p {
                let (g_fd, _) = fd(&ansatz, &theta, i, 1e-4);
                assert!((grad[i] - g_fd).abs() < 1e-6, "grad mismatch {i}");
            }

            let hess = parameter_shift_hessian(&mut oracle, &theta).unwrap();
            let step = 1e-3;
            let eval = |t: &[f64]| {
                crate::pauli::exact_expectation(&h, &ansatz.prepare_state(t).unwrap()).unwrap()
            };
            for i in 0..p {
                for j in 0..p {
                    let mut tpp = theta.clone();
                    let mut tpm = theta.clone();
                    let mut tmp = theta.clone();
                    let mut tmm = theta.clone();
                    tpp[i] += step;
                    tpp[j] += step;
                    tpm[i] += step;
                    tpm[j] -= step;
                    tmp[i] -= step;
                    tmp[j] += step;
                    tmm[i] -= step;
                    tmm[j] -= step;
                    let h_fd =
                        (eval(&tpp) - eval(&tpm) - eval(&tmp) + eval(&tmm)) / (4.0 * step * step);
                    assert!(
                        (hess[(i, j)] - h_fd).abs() < 1e-5,
                        "hessian mismatch ({i},{j}): {} vs {h_fd}",
                        hess[(i, j)]
                    );
                }
            }
        }
    }
}
