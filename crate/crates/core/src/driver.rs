//! Continuation driver: schedule generation, warm-started corrector stepping
//! along H(t) (with an optional explicit Euler predictor), spectral-gap and
//! parameter-drift diagnostics, random-restart VQE and budget-matched
//! surface comparisons.

use nalgebra::{DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{EnergyEstimate, EstimatorConfig};
use crate::optimize::{
    parameter_shift_gradient, parameter_shift_hessian, run_nft, run_sgd, run_spsa, OptimizerRun,
    SpsaGains, StopReason, TerminationConfig,
};
use crate::oracle::{Counters, Objective, ObjectiveOracle};
use crate::pauli::{exact_eigen, exact_expectation, HomotopyHamiltonian, PauliSum};
use crate::sim::AnsatzCircuit;

/// Stream-splitting constant so the optimizer's perturbation stream differs
/// from the estimator stream derived from the same seed.
const OPT_STREAM_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// Shape of the time reparameterization t = s(x) on a uniform grid x = k/K.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "exponent")]
pub enum ScheduleKind {
    Cubic,
    Linear,
    Power(f64),
}

/// Strictly increasing evaluation points in (0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    points: Vec<f64>,
}

impl Schedule {
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Numerical("schedule needs at least one point".into()));
        }
        let mut prev = 0.0;
        for &t in &points {
            if t <= prev || t > 1.0 {
                return Err(Error::Numerical(format!(
                    "schedule points must be strictly increasing in (0, 1], got {t}"
                )));
            }
            prev = t;
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Builds the K = 1/step point schedule t_k = s(k/K). The cubic shape is
/// s(x) = 1 - (1-x)^3; power(a) generalizes to 1 - (1-x)^a.
pub fn make_schedule(kind: ScheduleKind, step: f64) -> Result<Schedule> {
    if !(step > 0.0 && step < 1.0) {
        return Err(Error::BadScheduleStep(step));
    }
    let k_count = (1.0 / step).round();
    if ((1.0 / step) - k_count).abs() > 1e-9 {
        return Err(Error::BadScheduleStep(step));
    }
    let k_count = k_count as usize;
    let shape = |x: f64| -> f64 {
        match kind {
            ScheduleKind::Cubic => 1.0 - (1.0 - x).powi(3),
            ScheduleKind::Linear => x,
            ScheduleKind::Power(a) => {
                if x >= 1.0 {
                    1.0
                } else {
                    1.0 - (1.0 - x).powf(a)
                }
            }
        }
    };
    if let ScheduleKind::Power(a) = kind {
        if !(a > 0.0) {
            return Err(Error::Numerical(format!(
                "power schedule exponent must be positive, got {a}"
            )));
        }
    }
    let points = (1..=k_count)
        .map(|k| shape(k as f64 / k_count as f64))
        .collect();
    Schedule::from_points(points)
}

/// Which optimizer serves as the corrector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Spsa,
    Nft,
}

impl OptimizerKind {
    /// Average objective evaluations per iteration, used for budget
    /// matching. NFT's fractional part covers the periodic baseline refresh.
    pub fn evaluations_per_iteration(&self, p: usize, nft_refresh: Option<usize>) -> f64 {
        match self {
            OptimizerKind::Sgd => 2.0 * p as f64 + 1.0,
            OptimizerKind::Spsa => 2.0,
            OptimizerKind::Nft => 2.0 + 1.0 / nft_refresh.unwrap_or(p).max(1) as f64,
        }
    }

    /// One-off evaluations charged before iterating (initial estimate or
    /// calibration probes).
    pub fn setup_evaluations(&self, spsa: &SpsaGains) -> f64 {
        match self {
            OptimizerKind::Sgd | OptimizerKind::Nft => 1.0,
            OptimizerKind::Spsa => 2.0 * spsa.calibration_pairs as f64,
        }
    }
}

/// Full corrector settings for one optimization run.
#[derive(Debug, Clone)]
pub struct OptimizerSettings {
    pub kind: OptimizerKind,
    pub max_iter: usize,
    /// Adaptive termination; honored by the gradient corrector only.
    pub termination: Option<TerminationConfig>,
    pub spsa_gains: SpsaGains,
    pub nft_refresh: Option<usize>,
}

impl OptimizerSettings {
    pub fn sgd(max_iter: usize, termination: Option<TerminationConfig>) -> Self {
        Self {
            kind: OptimizerKind::Sgd,
            max_iter,
            termination,
            spsa_gains: SpsaGains::default(),
            nft_refresh: None,
        }
    }

    pub fn spsa(max_iter: usize) -> Self {
        Self {
            kind: OptimizerKind::Spsa,
            max_iter,
            termination: None,
            spsa_gains: SpsaGains::default(),
            nft_refresh: None,
        }
    }

    pub fn nft(max_iter: usize) -> Self {
        Self {
            kind: OptimizerKind::Nft,
            max_iter,
            termination: None,
            spsa_gains: SpsaGains::default(),
            nft_refresh: None,
        }
    }
}

/// Dispatches one optimizer run.
pub fn run_configured<R: Rng>(
    obj: &mut dyn Objective,
    theta0: &[f64],
    settings: &OptimizerSettings,
    rng: &mut R,
) -> Result<OptimizerRun> {
    match settings.kind {
        OptimizerKind::Sgd => run_sgd(obj, theta0, settings.max_iter, settings.termination.as_ref()),
        OptimizerKind::Spsa => run_spsa(obj, theta0, settings.max_iter, &settings.spsa_gains, rng),
        OptimizerKind::Nft => run_nft(obj, theta0, settings.max_iter, settings.nft_refresh),
    }
}

/// How the next step's starting point is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predictor {
    /// Reuse the previous solution unchanged.
    Bootstrap,
    /// Explicit Euler step on the stationarity conditions.
    Euler,
}

/// Corrector configuration for a continuation run.
#[derive(Debug, Clone)]
pub struct CorrectorConfig {
    pub step: OptimizerSettings,
    /// Override applied at the last schedule point.
    pub final_step: Option<OptimizerSettings>,
    /// Re-estimation tolerance applied to each accepted point.
    pub resample_tolerance: Option<f64>,
    pub predictor: Predictor,
}

/// One accepted continuation step.
#[derive(Debug, Clone)]
pub struct VaqcStep {
    /// 1-based step index.
    pub index: usize,
    pub t: f64,
    /// Corrector starting point (the previous solution, or its Euler image).
    pub theta_start: Vec<f64>,
    /// Accepted parameters.
    pub theta: Vec<f64>,
    pub corrector_iterations: usize,
    pub stop_reason: StopReason,
    pub energy: f64,
    pub variance: f64,
    pub estimate_samples: u64,
    pub predictor_evaluations: u64,
    /// Samples charged during this step (corrector plus any resampling).
    pub samples_step: u64,
    pub samples_cum: u64,
    pub evaluations_cum: u64,
    pub unique_points_cum: u64,
    /// ||theta_k - theta_{k-1}||_2 between accepted points.
    pub theta_drift: f64,
}

/// Record of one full continuation run.
#[derive(Debug, Clone)]
pub struct VaqcTrajectory {
    pub steps: Vec<VaqcStep>,
    pub initial_theta: Vec<f64>,
    /// Set when the starting point failed the ground-state check against the
    /// initial operator (a warning, not an error).
    pub initial_check_warning: Option<String>,
    pub counters: Counters,
    pub total_corrector_iterations: usize,
    /// Iterations spent in the final-step override, also included in the
    /// total above.
    pub final_step_iterations: usize,
}

impl VaqcTrajectory {
    pub fn final_step(&self) -> &VaqcStep {
        self.steps.last().expect("schedule is non-empty")
    }

    pub fn max_theta_drift(&self) -> f64 {
        self.steps.iter().map(|s| s.theta_drift).fold(0.0, f64::max)
    }
}

fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Tolerance of the starting-point ground-state check.
const INITIAL_CHECK_TOL: f64 = 1e-6;

/// Runs the warm-started corrector along the schedule: the solution at each
/// point seeds the next (optionally advanced by an Euler predictor), the
/// final point gets the override settings, and each accepted point is
/// re-estimated to `resample_tolerance` when configured.
pub fn run_vaqc(
    hh: &HomotopyHamiltonian,
    ansatz: &AnsatzCircuit,
    theta0: &[f64],
    schedule: &Schedule,
    cfg: &CorrectorConfig,
    est_cfg: &EstimatorConfig,
) -> Result<VaqcTrajectory> {
    let initial_check_warning = {
        let psi0 = ansatz.prepare_state(theta0)?;
        let e0 = exact_expectation(hh.initial(), &psi0)?;
        let (lam0, _, _) = exact_eigen(hh.initial())?;
        if (e0 - lam0).abs() > INITIAL_CHECK_TOL {
            Some(format!(
                "starting point is not a ground state of the initial operator: \
                 energy {e0:.6} vs lowest eigenvalue {lam0:.6}"
            ))
        } else {
            None
        }
    };

    let mut oracle = ObjectiveOracle::new(ansatz.clone(), hh.at(schedule.points()[0]), *est_cfg);
    let mut opt_rng = ChaCha8Rng::seed_from_u64(est_cfg.rng_seed ^ OPT_STREAM_SALT);

    let mut steps = Vec::with_capacity(schedule.len());
    let mut accepted = theta0.to_vec();
    let mut prev_t = 0.0;
    let mut prev_samples = 0u64;
    let mut total_iterations = 0usize;
    let mut final_step_iterations = 0usize;
    for (idx, &t) in schedule.points().iter().enumerate() {
        let k = idx + 1;
        let is_last = k == schedule.len();
        let mut predictor_evaluations = 0;
        let mut start = accepted.clone();
        if cfg.predictor == Predictor::Euler && idx > 0 {
            // The oracle is still bound to H at the previous point here.
            let before = oracle.counters().evaluations;
            start = euler_predictor_step(&mut oracle, hh, &accepted, t - prev_t)?;
            predictor_evaluations = oracle.counters().evaluations - before;
        }
        oracle.set_hamiltonian(hh.at(t));
        let settings = if is_last {
            cfg.final_step.as_ref().unwrap_or(&cfg.step)
        } else {
            &cfg.step
        };
        let run = run_configured(&mut oracle, &start, settings, &mut opt_rng)?;
        let theta = run.theta_final.clone();
        let estimate = accept_estimate(&mut oracle, &theta, &run, cfg.resample_tolerance)?;
        let counters = oracle.counters();
        total_iterations += run.iterations;
        if is_last {
            final_step_iterations = run.iterations;
        }
        steps.push(VaqcStep {
            index: k,
            t,
            theta_start: start,
            theta_drift: l2_distance(&theta, &accepted),
            theta: theta.clone(),
            corrector_iterations: run.iterations,
            stop_reason: run.stop_reason,
            energy: estimate.mean,
            variance: estimate.variance,
            estimate_samples: estimate.samples_used,
            predictor_evaluations,
            samples_step: counters.total_samples() - prev_samples,
            samples_cum: counters.total_samples(),
            evaluations_cum: counters.evaluations,
            unique_points_cum: counters.unique_points,
        });
        prev_samples = counters.total_samples();
        prev_t = t;
        accepted = theta;
    }
    Ok(VaqcTrajectory {
        steps,
        initial_theta: theta0.to_vec(),
        initial_check_warning,
        counters: oracle.counters(),
        total_corrector_iterations: total_iterations,
        final_step_iterations,
    })
}

fn accept_estimate(
    oracle: &mut ObjectiveOracle,
    theta: &[f64],
    run: &OptimizerRun,
    resample_tolerance: Option<f64>,
) -> Result<EnergyEstimate> {
    match resample_tolerance {
        Some(eps) => oracle.resample(theta, eps),
        None => {
            let last = run.history.last().expect("history is never empty");
            Ok(EnergyEstimate {
                mean: last.energy,
                variance: last.variance,
                samples_used: oracle.config().samples_per_eval,
                unique_circuit: false,
            })
        }
    }
}

/// Explicit Euler step on the stationarity conditions: with H the
/// parameter-shift Hessian at the current point and v the gradient of the
/// objective difference (target minus initial operator, which equals the
/// mixed t-derivative for a linear interpolation), solves H dtheta = -v
/// with diagonal damping when the smallest eigenvalue drops below 1e-6, and
/// returns theta + dt * dtheta.
pub fn euler_predictor_step(
    oracle: &mut ObjectiveOracle,
    hh: &HomotopyHamiltonian,
    theta: &[f64],
    dt: f64,
) -> Result<Vec<f64>> {
    let p = theta.len();
    let hess = parameter_shift_hessian(oracle, theta)?;
    let held = oracle.hamiltonian().clone();
    oracle.set_hamiltonian(hh.target().clone());
    let grad_target = parameter_shift_gradient(oracle, theta)?;
    oracle.set_hamiltonian(hh.initial().clone());
    let grad_initial = parameter_shift_gradient(oracle, theta)?;
    oracle.set_hamiltonian(held);
    let v = DVector::from_iterator(p, grad_target.iter().zip(&grad_initial).map(|(t, i)| t - i));

    let eig = SymmetricEigen::new(hess.clone());
    let min_eigenvalue = eig.eigenvalues.min();
    let mut eigenvalues = eig.eigenvalues.clone();
    if min_eigenvalue < 1e-6 {
        let damping = 1e-6 * (1.0 + hess.norm());
        eigenvalues.add_scalar_mut(damping);
    }
    let projected = eig.eigenvectors.transpose() * (-v);
    let scaled = DVector::from_iterator(
        p,
        projected
            .iter()
            .zip(eigenvalues.iter())
            .map(|(x, &lam)| if lam.abs() < 1e-12 { 0.0 } else { x / lam }),
    );
    let dtheta = eig.eigenvectors * scaled;
    Ok(theta
        .iter()
        .zip(dtheta.iter())
        .map(|(t, d)| t + dt * d)
        .collect())
}

/// Exact spectrum data at one interpolation point.
#[derive(Debug, Clone, Copy)]
pub struct GapPoint {
    pub t: f64,
    pub lam0: f64,
    pub lam1: f64,
    pub gap: f64,
}

/// Dense diagonalization of H(t) over a grid; the gap hypothesis holds on
/// the grid when every gap is positive.
pub fn gap_diagnostic(hh: &HomotopyHamiltonian, grid: &[f64]) -> Result<Vec<GapPoint>> {
    grid.iter()
        .map(|&t| {
            let (lam0, lam1, _) = exact_eigen(&hh.at(t))?;
            Ok(GapPoint {
                t,
                lam0,
                lam1,
                gap: lam1 - lam0,
            })
        })
        .collect()
}

/// Smallest gap over a diagnostic grid.
pub fn min_gap(points: &[GapPoint]) -> Option<GapPoint> {
    points
        .iter()
        .copied()
        .min_by(|a, b| a.gap.total_cmp(&b.gap))
}

/// One random restart of direct minimization on a fixed operator.
#[derive(Debug, Clone)]
pub struct RestartRecord {
    pub restart: usize,
    pub seed: u64,
    pub theta0: Vec<f64>,
    pub theta: Vec<f64>,
    pub energy: f64,
    pub variance: f64,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub counters: Counters,
}

/// Runs one seeded restart: the starting point is drawn uniformly from
/// [0, 2pi]^p unless `theta0` pins it.
pub fn run_single_restart(
    h: &PauliSum,
    ansatz: &AnsatzCircuit,
    restart: usize,
    seed: u64,
    theta0: Option<&[f64]>,
    settings: &OptimizerSettings,
    resample_tolerance: Option<f64>,
    est_cfg: &EstimatorConfig,
) -> Result<RestartRecord> {
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let p = ansatz.param_count();
    let theta0: Vec<f64> = match theta0 {
        Some(t) => t.to_vec(),
        None => (0..p)
            .map(|_| master.random_range(0.0..std::f64::consts::TAU))
            .collect(),
    };
    let cfg = EstimatorConfig {
        rng_seed: master.random::<u64>(),
        ..*est_cfg
    };
    let mut oracle = ObjectiveOracle::new(ansatz.clone(), h.clone(), cfg);
    let mut opt_rng = ChaCha8Rng::seed_from_u64(master.random::<u64>());
    let run = run_configured(&mut oracle, &theta0, settings, &mut opt_rng)?;
    let estimate = accept_estimate(&mut oracle, &run.theta_final, &run, resample_tolerance)?;
    Ok(RestartRecord {
        restart,
        seed,
        theta0,
        theta: run.theta_final.clone(),
        energy: estimate.mean,
        variance: estimate.variance,
        iterations: run.iterations,
        stop_reason: run.stop_reason,
        counters: oracle.counters(),
    })
}

/// Outcome of a batch of random restarts against one operator.
#[derive(Debug, Clone)]
pub struct RestartOutcome {
    pub records: Vec<RestartRecord>,
    /// Lowest eigenvalue of the operator, the error reference.
    pub reference_energy: f64,
}

impl RestartOutcome {
    pub fn best_energy(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.energy)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn errors(&self) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| (r.energy - self.reference_energy).abs())
            .collect()
    }

    pub fn mean_iterations(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().map(|r| r.iterations as f64).sum::<f64>() / self.records.len() as f64
    }
}

/// Restart r draws its stream from `base_seed + r`.
pub fn run_random_restart_vqe(
    h: &PauliSum,
    ansatz: &AnsatzCircuit,
    n_restarts: usize,
    settings: &OptimizerSettings,
    resample_tolerance: Option<f64>,
    est_cfg: &EstimatorConfig,
) -> Result<RestartOutcome> {
    if n_restarts == 0 {
        return Err(Error::Numerical("need at least one restart".into()));
    }
    let (reference_energy, _, _) = exact_eigen(h)?;
    let records = (0..n_restarts)
        .map(|r| {
            run_single_restart(
                h,
                ansatz,
                r,
                est_cfg.rng_seed + r as u64,
                None,
                settings,
                resample_tolerance,
                est_cfg,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RestartOutcome {
        records,
        reference_energy,
    })
}

/// A named optimizer variant for surface comparisons: base optimizer plus
/// the adaptive-termination / bootstrapping / resampling augmentations.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SurfaceMethodSpec {
    pub label: String,
    pub kind: OptimizerKind,
    #[serde(default)]
    pub adaptive: bool,
    #[serde(default)]
    pub bootstrap: bool,
    #[serde(default)]
    pub resample: bool,
}

/// Accuracy and cost record for one instance inside one surface pass.
#[derive(Debug, Clone)]
pub struct SurfaceInstanceRecord {
    pub instance: usize,
    pub theta: Vec<f64>,
    pub energy: f64,
    pub variance: f64,
    pub abs_error: f64,
    pub iterations: usize,
    pub samples_opt: u64,
    pub samples_resample: u64,
    pub evaluations: u64,
}

/// One seeded pass over the whole instance sequence.
#[derive(Debug, Clone)]
pub struct SurfaceTrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub instances: Vec<SurfaceInstanceRecord>,
    pub counters: Counters,
}

/// Runs one method over the ordered instances for one trial. Bootstrapped
/// methods carry the previous solution forward; others restart from zero.
pub fn run_surface_trial(
    instances: &[PauliSum],
    references: &[f64],
    ansatz: &AnsatzCircuit,
    spec: &SurfaceMethodSpec,
    max_iter: usize,
    termination: &TerminationConfig,
    resample_tolerance: f64,
    est_cfg: &EstimatorConfig,
    trial: usize,
) -> Result<SurfaceTrialRecord> {
    if instances.is_empty() {
        return Err(Error::EmptySurface);
    }
    let seed = est_cfg.rng_seed + trial as u64;
    let cfg = EstimatorConfig {
        rng_seed: seed,
        ..*est_cfg
    };
    let mut oracle = ObjectiveOracle::new(ansatz.clone(), instances[0].clone(), cfg);
    let mut opt_rng = ChaCha8Rng::seed_from_u64(seed ^ OPT_STREAM_SALT);
    let p = ansatz.param_count();
    let settings = OptimizerSettings {
        kind: spec.kind,
        max_iter,
        termination: spec.adaptive.then_some(*termination),
        spsa_gains: SpsaGains::default(),
        nft_refresh: None,
    };
    let mut carried = vec![0.0; p];
    let mut records = Vec::with_capacity(instances.len());
    let mut prev = Counters::default();
    for (j, h) in instances.iter().enumerate() {
        oracle.set_hamiltonian(h.clone());
        let start = if spec.bootstrap && j > 0 {
            carried.clone()
        } else {
            vec![0.0; p]
        };
        let run = run_configured(&mut oracle, &start, &settings, &mut opt_rng)?;
        carried = run.theta_final.clone();
        let estimate = accept_estimate(
            &mut oracle,
            &carried,
            &run,
            spec.resample.then_some(resample_tolerance),
        )?;
        let now = oracle.counters();
        records.push(SurfaceInstanceRecord {
            instance: j,
            theta: carried.clone(),
            energy: estimate.mean,
            variance: estimate.variance,
            abs_error: (estimate.mean - references[j]).abs(),
            iterations: run.iterations,
            samples_opt: now.samples - prev.samples,
            samples_resample: now.resample_samples - prev.resample_samples,
            evaluations: now.evaluations - prev.evaluations,
        });
        prev = now;
    }
    Ok(SurfaceTrialRecord {
        trial,
        seed,
        instances: records,
        counters: oracle.counters(),
    })
}

/// Iteration limit so one pass over one instance consumes about
/// `samples_per_instance`, given the method's per-iteration cost.
pub fn matched_iteration_limit(
    kind: OptimizerKind,
    p: usize,
    est_cfg: &EstimatorConfig,
    samples_per_instance: f64,
    spsa: &SpsaGains,
    nft_refresh: Option<usize>,
) -> usize {
    let m = est_cfg.samples_per_eval as f64;
    let evals_budget = samples_per_instance / m - kind.setup_evaluations(spsa);
    let per_iter = kind.evaluations_per_iteration(p, nft_refresh);
    (evals_budget / per_iter).floor().max(1.0) as usize
}
