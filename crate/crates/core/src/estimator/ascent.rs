//! Projected gradient ascent on the 0-homogeneous quotient `R(x)` with
//! Armijo backtracking. Directions are Riesz gradients with respect to the
//! quadrature mass, and iterates are renormalized after every step.

use crate::error::Result;

use super::problem::{dot, Problem};

#[derive(Debug, Clone)]
pub(crate) struct AscentRun {
    pub value: f64,
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `R` at the start and after every accepted step.
    pub trace: Vec<f64>,
}

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 50;

fn normalized(problem: &Problem, x: &[f64]) -> Vec<f64> {
    let norm = problem.weighted_dot(x, x).sqrt();
    x.iter().map(|v| v / norm).collect()
}

pub(crate) fn ascend(problem: &Problem, p: f64, x0: &[f64], max_iter: usize, tol_rel: f64) -> Result<AscentRun> {
    let inv_w: Vec<f64> = problem.slot_weights().iter().map(|w| 1.0 / w).collect();
    let mut x = x0.to_vec();
    problem.project(&mut x);
    x = normalized(problem, &x);
    let (mut value, mut grad) = problem.ratio_gradient(&x, p)?;
    let mut trace = vec![value];
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        problem.constrain(&mut grad);
        let mut dir: Vec<f64> = grad.iter().zip(&inv_w).map(|(g, w)| g * w).collect();
        problem.project(&mut dir);
        let dnorm = problem.weighted_dot(&dir, &dir).sqrt();
        if dnorm == 0.0 || !dnorm.is_finite() {
            break;
        }
        for d in dir.iter_mut() {
            *d /= dnorm;
        }
        let slope = dot(&grad, &dir);
        if slope <= 0.0 {
            break;
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let mut trial: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
            problem.project(&mut trial);
            let r = problem.ratio(&trial, p)?;
            if r.is_finite() && r >= value + ARMIJO * t * slope {
                accepted = Some(trial);
                break;
            }
            t *= 0.5;
        }
        let Some(trial) = accepted else { break };
        let next = normalized(problem, &trial);
        let (next_value, next_grad) = problem.ratio_gradient(&next, p)?;
        if next_value < value {
            break;
        }
        let previous = value;
        (x, value, grad) = (next, next_value, next_grad);
        trace.push(value);
        if value - previous <= tol_rel * previous.abs() {
            break;
        }
    }
    Ok(AscentRun {
        value,
        x,
        iterations,
        trace,
    })
}
