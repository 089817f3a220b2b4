//! Run reports: per-trial rows, aggregates recomputable from them, CSV
//! emission and human-readable summary tables.
//!
//! CSV layouts (fixed column orders):
//! - trajectory: `k,t,energy,variance,error_vs_exact,corrector_iters,
//!   samples_step,samples_cum,unique_points_cum,theta_drift,theta_1..theta_p`
//! - optimizer history: `iteration,f_hat,variance,theta_1..theta_p,
//!   evaluations_cum,samples_cum,unique_points_cum`
//! - restarts: `restart,seed,energy,error,abs_error,iterations,stop_reason,
//!   samples_total,unique_points`
//! - surface: `method,trial,instance,energy,variance,abs_error,iterations,
//!   samples_opt,samples_resample,evaluations`
//! - gap: `t,lambda0,lambda1,gap`

use std::fmt::Write as _;

use serde::Serialize;

use vaqc_core::driver::{GapPoint, RestartRecord, SurfaceTrialRecord, VaqcTrajectory};
use vaqc_core::optimize::HistoryPoint;

/// Accuracy and cost for one seeded trial.
#[derive(Debug, Clone, Serialize)]
pub struct TrialReport {
    pub trial: usize,
    pub seed: u64,
    pub final_energy: f64,
    /// Signed error against the reference eigenvalue.
    pub error: f64,
    pub abs_error: f64,
    pub iterations: usize,
    pub evaluations: u64,
    pub unique_evaluations: u64,
    pub samples_optimization: u64,
    pub samples_resampling: u64,
    pub samples_total: u64,
    /// Raw per-term draw total (samples times non-identity term count).
    pub raw_term_draws: u64,
    pub wall_ms: u128,
}

/// Aggregate statistics; every field is recomputable from the trial rows.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Aggregate {
    pub mean_abs_error: f64,
    pub min_abs_error: f64,
    pub max_abs_error: f64,
    pub mean_iterations: f64,
    pub total_iterations: usize,
    pub mean_evaluations: f64,
    pub mean_unique_evaluations: f64,
    pub total_samples: u64,
    pub mean_wall_ms: f64,
}

/// Aggregates trial rows; `None` on empty input.
pub fn aggregate(trials: &[TrialReport]) -> Option<Aggregate> {
    if trials.is_empty() {
        return None;
    }
    let n = trials.len() as f64;
    Some(Aggregate {
        mean_abs_error: trials.iter().map(|t| t.abs_error).sum::<f64>() / n,
        min_abs_error: trials.iter().map(|t| t.abs_error).fold(f64::INFINITY, f64::min),
        max_abs_error: trials
            .iter()
            .map(|t| t.abs_error)
            .fold(f64::NEG_INFINITY, f64::max),
        mean_iterations: trials.iter().map(|t| t.iterations as f64).sum::<f64>() / n,
        total_iterations: trials.iter().map(|t| t.iterations).sum(),
        mean_evaluations: trials.iter().map(|t| t.evaluations as f64).sum::<f64>() / n,
        mean_unique_evaluations: trials
            .iter()
            .map(|t| t.unique_evaluations as f64)
            .sum::<f64>()
            / n,
        total_samples: trials.iter().map(|t| t.samples_total).sum(),
        mean_wall_ms: trials.iter().map(|t| t.wall_ms as f64).sum::<f64>() / n,
    })
}

/// Per-method aggregate for surface comparisons.
#[derive(Debug, Clone, Serialize)]
pub struct MethodSummary {
    pub method: String,
    pub mean_abs_error: f64,
    pub max_abs_error: f64,
    /// Unique parameter points per full surface pass, averaged over trials.
    pub mean_unique_evaluations: f64,
    /// Optimization-phase evaluation count per pass, the unique-circuit
    /// estimate used when points may be revisited.
    pub mean_evaluations: f64,
    pub max_iter: usize,
    pub samples_optimization: u64,
    pub samples_resampling: u64,
    pub samples_total: u64,
    /// Matched-phase sample ratio against the reference run.
    pub budget_ratio: f64,
}

pub fn summarize_surface_method(
    label: &str,
    max_iter: usize,
    trials: &[SurfaceTrialRecord],
    matched_reference_samples: u64,
    resampled: bool,
) -> MethodSummary {
    let n = trials.len() as f64;
    let errors: Vec<f64> = trials
        .iter()
        .flat_map(|t| t.instances.iter().map(|i| i.abs_error))
        .collect();
    let samples_opt: u64 = trials.iter().map(|t| t.counters.samples).sum();
    let samples_resample: u64 = trials.iter().map(|t| t.counters.resample_samples).sum();
    let matched = if resampled {
        samples_opt
    } else {
        samples_opt + samples_resample
    };
    MethodSummary {
        method: label.to_string(),
        mean_abs_error: errors.iter().sum::<f64>() / errors.len() as f64,
        max_abs_error: errors.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)),
        mean_unique_evaluations: trials
            .iter()
            .map(|t| t.counters.unique_points as f64)
            .sum::<f64>()
            / n,
        mean_evaluations: trials
            .iter()
            .map(|t| t.counters.evaluations as f64)
            .sum::<f64>()
            / n,
        max_iter,
        samples_optimization: samples_opt,
        samples_resampling: samples_resample,
        samples_total: samples_opt + samples_resample,
        budget_ratio: matched as f64 / matched_reference_samples as f64,
    }
}

fn push_row(out: &mut String, fields: &[String]) {
    out.push_str(&fields.join(","));
    out.push('\n');
}

fn f(x: f64) -> String {
    // Shortest round-trip form keeps CSVs byte-stable across runs.
    format!("{x}")
}

/// Trajectory CSV for one trial; `references[k]` is the lowest eigenvalue of
/// the interpolated operator at step k.
pub fn trajectory_csv(traj: &VaqcTrajectory, references: &[f64]) -> String {
    let p = traj.initial_theta.len();
    let mut out = String::new();
    let mut header = vec![
        "k".into(),
        "t".into(),
        "energy".into(),
        "variance".into(),
        "error_vs_exact".into(),
        "corrector_iters".into(),
        "samples_step".into(),
        "samples_cum".into(),
        "unique_points_cum".into(),
        "theta_drift".into(),
    ];
    header.extend((1..=p).map(|i| format!("theta_{i}")));
    push_row(&mut out, &header);
    for (step, reference) in traj.steps.iter().zip(references) {
        let mut row = vec![
            step.index.to_string(),
            f(step.t),
            f(step.energy),
            f(step.variance),
            f((step.energy - reference).abs()),
            step.corrector_iterations.to_string(),
            step.samples_step.to_string(),
            step.samples_cum.to_string(),
            step.unique_points_cum.to_string(),
            f(step.theta_drift),
        ];
        row.extend(step.theta.iter().map(|&x| f(x)));
        push_row(&mut out, &row);
    }
    out
}

/// Optimizer-history CSV (one corrector or restart run).
pub fn history_csv(history: &[HistoryPoint]) -> String {
    let p = history.first().map_or(0, |h| h.theta.len());
    let mut out = String::new();
    let mut header = vec!["iteration".into(), "f_hat".into(), "variance".into()];
    header.extend((1..=p).map(|i| format!("theta_{i}")));
    header.extend([
        "evaluations_cum".into(),
        "samples_cum".into(),
        "unique_points_cum".into(),
    ]);
    push_row(&mut out, &header);
    for (i, point) in history.iter().enumerate() {
        let mut row = vec![i.to_string(), f(point.energy), f(point.variance)];
        row.extend(point.theta.iter().map(|&x| f(x)));
        row.extend([
            point.counters.evaluations.to_string(),
            point.counters.total_samples().to_string(),
            point.counters.unique_points.to_string(),
        ]);
        push_row(&mut out, &row);
    }
    out
}

pub fn restarts_csv(records: &[RestartRecord], reference_energy: f64) -> String {
    let mut out = String::new();
    push_row(
        &mut out,
        &[
            "restart".into(),
            "seed".into(),
            "energy".into(),
            "error".into(),
            "abs_error".into(),
            "iterations".into(),
            "stop_reason".into(),
            "samples_total".into(),
            "unique_points".into(),
        ],
    );
    for r in records {
        let err = r.energy - reference_energy;
        push_row(
            &mut out,
            &[
                r.restart.to_string(),
                r.seed.to_string(),
                f(r.energy),
                f(err),
                f(err.abs()),
                r.iterations.to_string(),
                r.stop_reason.to_string(),
                r.counters.total_samples().to_string(),
                r.counters.unique_points.to_string(),
            ],
        );
    }
    out
}

pub fn surface_csv(methods: &[(String, Vec<SurfaceTrialRecord>)]) -> String {
    let mut out = String::new();
    push_row(
        &mut out,
        &[
            "method".into(),
            "trial".into(),
            "instance".into(),
            "energy".into(),
            "variance".into(),
            "abs_error".into(),
            "iterations".into(),
            "samples_opt".into(),
            "samples_resample".into(),
            "evaluations".into(),
        ],
    );
    for (label, trials) in methods {
        for t in trials {
            for inst in &t.instances {
                push_row(
                    &mut out,
                    &[
                        label.clone(),
                        t.trial.to_string(),
                        inst.instance.to_string(),
                        f(inst.energy),
                        f(inst.variance),
                        f(inst.abs_error),
                        inst.iterations.to_string(),
                        inst.samples_opt.to_string(),
                        inst.samples_resample.to_string(),
                        inst.evaluations.to_string(),
                    ],
                );
            }
        }
    }
    out
}

pub fn gap_csv(points: &[GapPoint]) -> String {
    let mut out = String::new();
    push_row(
        &mut out,
        &["t".into(), "lambda0".into(), "lambda1".into(), "gap".into()],
    );
    for pt in points {
        push_row(&mut out, &[f(pt.t), f(pt.lam0), f(pt.lam1), f(pt.gap)]);
    }
    out
}

/// Plain-text accuracy table over trial rows.
pub fn summary_table(title: &str, reference_energy: f64, trials: &[TrialReport]) -> String {
    let agg = aggregate(trials).expect("at least one trial");
    let mut s = String::new();
    let _ = writeln!(s, "{title}");
    let _ = writeln!(s, "reference energy: {reference_energy:.12}");
    let _ = writeln!(
        s,
        "{:>6} {:>8} {:>16} {:>12} {:>8} {:>12} {:>12}",
        "trial", "seed", "energy", "abs_error", "iters", "samples", "unique"
    );
    for t in trials {
        let _ = writeln!(
            s,
            "{:>6} {:>8} {:>16.9} {:>12.3e} {:>8} {:>12} {:>12}",
            t.trial, t.seed, t.final_energy, t.abs_error, t.iterations, t.samples_total,
            t.unique_evaluations
        );
    }
    let _ = writeln!(
        s,
        "mean abs error {:.3e} | min {:.3e} | max {:.3e} | total iterations {} | total samples {}",
        agg.mean_abs_error,
        agg.min_abs_error,
        agg.max_abs_error,
        agg.total_iterations,
        agg.total_samples
    );
    s
}

pub fn surface_summary_table(summaries: &[MethodSummary]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<12} {:>10} {:>14} {:>14} {:>14} {:>14} {:>10}",
        "method", "max_iter", "mean_abs_err", "max_abs_err", "mean_unique", "total_samples", "budget"
    );
    for m in summaries {
        let _ = writeln!(
            s,
            "{:<12} {:>10} {:>14.4e} {:>14.4e} {:>14.1} {:>14} {:>10.3}",
            m.method,
            m.max_iter,
            m.mean_abs_error,
            m.max_abs_error,
            m.mean_unique_evaluations,
            m.samples_total,
            m.budget_ratio
        );
    }
    s
}
