//! Stochastic gradient descent with the plateau-then-1/k step schedule.

use crate::error::Result;
use crate::oracle::Objective;

use super::{
    parameter_shift_gradient, termination_check, HistoryPoint, OptimizerRun, StopReason,
    TerminationConfig,
};

/// Step length: 1 for the first ten iterations, then 1/(k-10).
fn step_length(k: usize) -> f64 {
    if k <= 10 {
        1.0
    } else {
        1.0 / (k - 10) as f64
    }
}

/// Minimizes the objective by `theta <- theta - gamma_k g_k` with
/// parameter-shift gradients. Each iteration costs 2p + 1 evaluations: the
/// gradient plus the estimate recorded at the new iterate (one extra
/// evaluation samples the initial point before the loop). Stops on
/// `max_iter`, or earlier by the windowed test when `term` is given.
pub fn run_sgd(
    obj: &mut dyn Objective,
    theta0: &[f64],
    max_iter: usize,
    term: Option<&TerminationConfig>,
) -> Result<OptimizerRun> {
    if let Some(cfg) = term {
        cfg.validate()?;
    }
    let mut theta = theta0.to_vec();
    let first = obj.evaluate(&theta)?;
    let mut history = vec![HistoryPoint {
        theta: theta.clone(),
        energy: first.mean,
        variance: first.variance,
        counters: obj.counters(),
    }];
    let mut stop_reason = StopReason::MaxIter;
    let mut iterations = 0;
    for k in 1..=max_iter {
        let grad = parameter_shift_gradient(obj, &theta)?;
        let gamma = step_length(k);
        for (t, g) in theta.iter_mut().zip(&grad) {
            *t -= gamma * g;
        }
        let est = obj.evaluate(&theta)?;
        history.push(HistoryPoint {
            theta: theta.clone(),
            energy: est.mean,
            variance: est.variance,
            counters: obj.counters(),
        });
        iterations = k;
        if let Some(cfg) = term {
            if let Some(reason) = termination_check(&history, cfg) {
                stop_reason = reason;
                break;
            }
        }
    }
    Ok(OptimizerRun {
        theta_final: theta,
        history,
        iterations,
        stop_reason,
        degenerate_moves: 0,
    })
}
