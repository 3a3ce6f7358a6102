//! The inner problem `inf_{A ∈ so(n)} ‖P − A‖_{L^p}` over constant skews.
//!
//! Writing `s_x = ‖sym P(x)‖²` and `σ_x` for the packed skew part,
//! `‖P(x) − A‖² = s_x + 2 |σ_x − a|²`, so the objective
//! `f(a) = Σ_x w_x (s_x + 2 |σ_x − a|²)^{p/2}` is convex in the packed
//! coordinates `a`. At `p = 2` the minimizer is the weighted mean of `σ`.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::fields::MatrixField;
use crate::grid::{check_exponent, GridDomain};
use crate::tensor::{packed_pairs, so_dim, PackedSkew};

/// `(Σ_x w_x skew P(x)) / (Σ_x w_x)`, packed.
pub fn skew_mean(grid: &GridDomain, p: &MatrixField) -> PackedSkew {
    let n = p.dim();
    let m = so_dim(n);
    let mut acc = vec![0.0; m];
    for (node, w) in grid.weights().iter().enumerate() {
        for (slot, (i, j)) in packed_pairs(n).enumerate() {
            acc[slot] += w * 0.5 * (p.entry(node, i, j) - p.entry(node, j, i));
        }
    }
    let vol: f64 = grid.weights().iter().sum();
    PackedSkew::from_packed(n, acc.into_iter().map(|a| a / vol).collect()).expect("packed length")
}

struct Split {
    sym2: Vec<f64>,
    skew: Vec<Vec<f64>>,
}

fn split(p: &MatrixField) -> Split {
    let n = p.dim();
    let mut sym2 = Vec::with_capacity(p.node_count());
    let mut skew = Vec::with_capacity(p.node_count());
    for node in 0..p.node_count() {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                let v = 0.5 * (p.entry(node, i, j) + p.entry(node, j, i));
                s += v * v;
            }
        }
        sym2.push(s);
        skew.push(
            packed_pairs(n)
                .map(|(i, j)| 0.5 * (p.entry(node, i, j) - p.entry(node, j, i)))
                .collect(),
        );
    }
    Split { sym2, skew }
}

fn objective(parts: &Split, weights: &[f64], a: &[f64], p: f64) -> f64 {
    parts
        .sym2
        .iter()
        .zip(&parts.skew)
        .zip(weights)
        .map(|((s, sig), w)| {
            let d2: f64 = sig.iter().zip(a).map(|(x, y)| (x - y) * (x - y)).sum();
            w * (s + 2.0 * d2).powf(0.5 * p)
        })
        .sum()
}

/// Minimizer and value of `A ↦ ‖P − A‖_{L^p}` over constant skews.
pub fn inner_inf(grid: &GridDomain, p: &MatrixField, exponent: f64) -> Result<(PackedSkew, f64)> {
    check_exponent(exponent)?;
    let n = p.dim();
    let m = so_dim(n);
    let mean = skew_mean(grid, p);
    let parts = split(p);
    let weights = grid.weights();
    if exponent == 2.0 {
        let value = objective(&parts, weights, mean.packed(), 2.0).sqrt();
        return Ok((mean, value));
    }

    let half = 0.5 * exponent;
    let mut a = mean.packed().to_vec();
    let mut f = objective(&parts, weights, &a, exponent);
    for _ in 0..200 {
        let mut grad = DVector::<f64>::zeros(m);
        let mut hess = DMatrix::<f64>::zeros(m, m);
        for ((s, sig), w) in parts.sym2.iter().zip(&parts.skew).zip(weights) {
            let d: Vec<f64> = sig.iter().zip(&a).map(|(x, y)| y - x).collect();
            let g = s + 2.0 * d.iter().map(|v| v * v).sum::<f64>();
            if g <= 0.0 {
                continue;
            }
            let c1 = w * half * g.powf(half - 1.0) * 4.0;
            let c2 = w * half * (half - 1.0) * g.powf(half - 2.0) * 16.0;
            for r in 0..m {
                grad[r] += c1 * d[r];
                hess[(r, r)] += c1;
                for c in 0..m {
                    hess[(r, c)] += c2 * d[r] * d[c];
                }
            }
        }
        let gnorm = grad.norm();
        if gnorm == 0.0 {
            break;
        }
        let step = match hess.clone().cholesky() {
            Some(ch) => -ch.solve(&grad),
            None => -&grad / hess.diagonal().max().max(f64::MIN_POSITIVE),
        };
        let slope = grad.dot(&step);
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let trial: Vec<f64> = a.iter().zip(step.iter()).map(|(x, d)| x + t * d).collect();
            let ft = objective(&parts, weights, &trial, exponent);
            if ft <= f + 1e-4 * t * slope {
                let delta = t * step.norm();
                let scale = 1.0 + a.iter().map(|v| v * v).sum::<f64>().sqrt();
                a = trial;
                moved = ft < f;
                f = ft;
                if delta <= 1e-15 * scale {
                    moved = false;
                }
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    Ok((PackedSkew::from_packed(n, a).expect("packed length"), f.powf(1.0 / exponent)))
}
