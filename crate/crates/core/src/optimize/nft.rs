//! Sequential coordinate minimization for RY-type circuits, where the
//! objective restricted to one parameter is a sinusoid
//! f(x) = a cos(x - b) + c and the coordinate minimizer is analytic.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::Result;
use crate::oracle::Objective;

use super::{HistoryPoint, OptimizerRun, StopReason};

/// Fitted amplitudes below this are treated as a flat coordinate section.
const DEGENERATE_AMPLITUDE: f64 = 1e-12;

/// One iteration updates one coordinate (cycling 1..p) from evaluations at
/// +-pi/2 around it, reusing a cached baseline estimate for the third
/// sinusoid sample. Every `refresh_interval` iterations the baseline is
/// re-measured instead of carried forward from the fit (defaults to p, one
/// refresh per sweep).
pub fn run_nft(
    obj: &mut dyn Objective,
    theta0: &[f64],
    max_iter: usize,
    refresh_interval: Option<usize>,
) -> Result<OptimizerRun> {
    let p = theta0.len();
    let refresh = refresh_interval.unwrap_or(p).max(1);
    let mut theta = theta0.to_vec();
    let first = obj.evaluate(&theta)?;
    let mut baseline = first.mean;
    let mut baseline_var = first.variance;
    let mut history = vec![HistoryPoint {
        theta: theta.clone(),
        energy: baseline,
        variance: baseline_var,
        counters: obj.counters(),
    }];
    let mut degenerate_moves = 0u32;
    for k in 1..=max_iter {
        let i = (k - 1) % p;
        let x0 = theta[i];
        let mut probe = theta.clone();
        probe[i] = x0 + FRAC_PI_2;
        let f_plus = obj.evaluate(&probe)?;
        probe[i] = x0 - FRAC_PI_2;
        let f_minus = obj.evaluate(&probe)?;
        // f(x) = a cos(x - b) + c with
        //   c = (f+ + f-)/2,  a cos(x0-b) = f0 - c,  a sin(x0-b) = (f- - f+)/2
        let offset = (f_plus.mean + f_minus.mean) / 2.0;
        let u = baseline - offset;
        let v = (f_minus.mean - f_plus.mean) / 2.0;
        let amplitude = u.hypot(v);
        if amplitude >= DEGENERATE_AMPLITUDE {
            let b = x0 - v.atan2(u);
            theta[i] = b + PI;
            baseline = offset - amplitude;
            baseline_var = (f_plus.variance + f_minus.variance) / 4.0;
        } else {
            degenerate_moves += 1;
        }
        if k % refresh == 0 {
            let est = obj.evaluate(&theta)?;
            baseline = est.mean;
            baseline_var = est.variance;
        }
        history.push(HistoryPoint {
            theta: theta.clone(),
            energy: baseline,
            variance: baseline_var,
            counters: obj.counters(),
        });
    }
    Ok(OptimizerRun {
        theta_final: theta,
        history,
        iterations: max_iter,
        stop_reason: StopReason::MaxIter,
        degenerate_moves,
    })
}
