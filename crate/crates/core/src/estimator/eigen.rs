//! Smallest eigenpair of `K x = λ M x` on the admissible subspace.
//!
//! The search space grows by inverse-iteration directions `K⁻¹ M x` of the
//! lowest Ritz vectors (solved by preconditioned conjugate gradients), with a
//! Rayleigh–Ritz step on the whole space after every expansion and a thick
//! restart when it gets large. The lowest spectrum of these operators is
//! tightly clustered, which plain block inverse iteration resolves only
//! slowly.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{KornError, Result};

use super::problem::{dot, Problem};

const BLOCK: usize = 4;
const CG_TOL: f64 = 1e-13;

#[derive(Debug, Clone)]
pub(crate) struct EigenOutcome {
    pub lambda: f64,
    pub vector: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    /// Rayleigh quotient of a random admissible field, a scale for `λ`.
    pub scale: f64,
}

pub(crate) fn random_field(problem: &Problem, seed: u64) -> Vec<f64> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..problem.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
    problem.project(&mut x);
    x
}

/// Solves `Π K Π y = b` for `b` in the admissible subspace.
fn pcg(problem: &Problem, b: &[f64], x0: Vec<f64>, inv_w: &[f64]) -> Vec<f64> {
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return vec![0.0; b.len()];
    }
    let precondition = |r: &[f64]| {
        let mut z: Vec<f64> = r.iter().zip(inv_w).map(|(a, w)| a * w).collect();
        problem.constrain(&mut z);
        z
    };
    let mut x = x0;
    problem.constrain(&mut x);
    let kx = problem.stiffness(&x);
    let mut r: Vec<f64> = b.iter().zip(&kx).map(|(a, c)| a - c).collect();
    problem.constrain(&mut r);
    let mut z = precondition(&r);
    let mut d = z.clone();
    let mut rz = dot(&r, &z);
    let cap = 20 * b.len() + 200;
    for _ in 0..cap {
        if dot(&r, &r).sqrt() <= CG_TOL * bnorm {
            break;
        }
        let mut kd = problem.stiffness(&d);
        problem.constrain(&mut kd);
        let dkd = dot(&d, &kd);
        if dkd <= 0.0 {
            break;
        }
        let alpha = rz / dkd;
        for i in 0..x.len() {
            x[i] += alpha * d[i];
            r[i] -= alpha * kd[i];
        }
        z = precondition(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..d.len() {
            d[i] = z[i] + beta * d[i];
        }
    }
    x
}

/// A growing mass-orthonormal basis with its stiffness and mass images and
/// the projected stiffness matrix.
struct Subspace<'a> {
    problem: &'a Problem,
    vectors: Vec<Vec<f64>>,
    kv: Vec<Vec<f64>>,
    mv: Vec<Vec<f64>>,
    h: Vec<Vec<f64>>,
}

fn combine(cols: &[Vec<f64>], coef: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut out = vec![0.0; cols[0].len()];
    for (r, col) in cols.iter().enumerate() {
        let c = coef(r);
        for (o, x) in out.iter_mut().zip(col) {
            *o += c * x;
        }
    }
    out
}

impl<'a> Subspace<'a> {
    fn new(problem: &'a Problem) -> Self {
        Self {
            problem,
            vectors: Vec::new(),
            kv: Vec::new(),
            mv: Vec::new(),
            h: Vec::new(),
        }
    }

    fn len(&self) -> usize {
        self.vectors.len()
    }

    /// Orthogonalizes `v` against the basis and appends it unless it is
    /// numerically dependent. Returns whether it was added.
    fn push(&mut self, mut v: Vec<f64>) -> bool {
        let norm0 = dot(&v, &self.problem.mass(&v)).max(0.0).sqrt();
        if norm0 == 0.0 || !norm0.is_finite() {
            return false;
        }
        for _ in 0..2 {
            for (u, mu) in self.vectors.iter().zip(&self.mv) {
                let c = dot(&v, mu);
                for (a, b) in v.iter_mut().zip(u) {
                    *a -= c * b;
                }
            }
        }
        let mut mv = self.problem.mass(&v);
        let norm = dot(&v, &mv).max(0.0).sqrt();
        if norm <= 1e-10 * norm0 {
            return false;
        }
        for (a, b) in v.iter_mut().zip(mv.iter_mut()) {
            *a /= norm;
            *b /= norm;
        }
        let kv = self.problem.stiffness(&v);
        let col: Vec<f64> = self.vectors.iter().map(|u| dot(u, &kv)).collect();
        for (row, c) in self.h.iter_mut().zip(&col) {
            row.push(*c);
        }
        let mut last = col;
        last.push(dot(&v, &kv));
        self.h.push(last);
        self.vectors.push(v);
        self.kv.push(kv);
        self.mv.push(mv);
        true
    }

    /// Ritz values (ascending) and coefficient columns.
    fn ritz(&self) -> (Vec<f64>, DMatrix<f64>) {
        let m = self.len();
        let reduced = DMatrix::from_fn(m, m, |i, j| 0.5 * (self.h[i][j] + self.h[j][i]));
        let eig = SymmetricEigen::new(reduced);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&c| eig.eigenvalues[c]).collect();
        let coefs = DMatrix::from_fn(m, m, |r, c| eig.eigenvectors[(r, order[c])]);
        (values, coefs)
    }

    fn ritz_vector(&self, coefs: &DMatrix<f64>, c: usize) -> Vec<f64> {
        combine(&self.vectors, |r| coefs[(r, c)])
    }

    /// Replaces the basis by its lowest `keep` Ritz vectors.
    fn restart(&mut self, values: &[f64], coefs: &DMatrix<f64>, keep: usize) {
        let pick = |cols: &[Vec<f64>]| -> Vec<Vec<f64>> {
            (0..keep).map(|c| combine(cols, |r| coefs[(r, c)])).collect()
        };
        self.vectors = pick(&self.vectors);
        self.kv = pick(&self.kv);
        self.mv = pick(&self.mv);
        self.h = (0..keep)
            .map(|i| (0..keep).map(|j| if i == j { values[i] } else { 0.0 }).collect())
            .collect();
    }
}

const MAX_BASIS: usize = 160;

/// `‖Π(K x − λ M x)‖ / ‖Π K x‖`.
pub(crate) fn eigen_residual(problem: &Problem, x: &[f64], lambda: f64) -> f64 {
    let mut kx = problem.stiffness(x);
    problem.constrain(&mut kx);
    let mut mx = problem.mass(x);
    problem.constrain(&mut mx);
    let r: Vec<f64> = kx.iter().zip(&mx).map(|(a, b)| a - lambda * b).collect();
    dot(&r, &r).sqrt() / dot(&kx, &kx).sqrt().max(f64::MIN_POSITIVE)
}

pub(crate) fn smallest_eigenpair(problem: &Problem, max_iter: usize, tol_rel: f64, seed: u64) -> Result<EigenOutcome> {
    if problem.is_trivial() {
        return Err(KornError::ZeroSubspace);
    }
    let inv_w: Vec<f64> = problem.slot_weights().iter().map(|w| 1.0 / w).collect();

    let probe = random_field(problem, seed ^ 0x5eed);
    let scale = dot(&probe, &problem.stiffness(&probe)) / dot(&probe, &problem.mass(&probe));

    let mut space = Subspace::new(problem);
    for i in 0..BLOCK as u64 {
        space.push(random_field(problem, seed.wrapping_add(i)));
    }
    if space.len() == 0 {
        return Err(KornError::ZeroSubspace);
    }
    let mut lambda = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    let mut vector;
    loop {
        let (values, coefs) = space.ritz();
        let previous = lambda;
        lambda = values[0];
        vector = space.ritz_vector(&coefs, 0);
        if (lambda - previous).abs() <= tol_rel * lambda.abs() {
            converged = true;
            break;
        }
        if iterations >= max_iter {
            break;
        }
        iterations += 1;
        let active = BLOCK.min(space.len());
        let ritz: Vec<(Vec<f64>, f64)> = (0..active).map(|c| (space.ritz_vector(&coefs, c), values[c])).collect();
        if space.len() + active > MAX_BASIS {
            let keep = (3 * BLOCK).min(space.len());
            space.restart(&values, &coefs, keep);
        }
        let mut grew = false;
        for (x, mu) in ritz {
            let mut b = problem.mass(&x);
            problem.constrain(&mut b);
            let guess = if mu > 0.0 { x.iter().map(|v| v / mu).collect() } else { vec![0.0; x.len()] };
            let mut y = pcg(problem, &b, guess, &inv_w);
            problem.project(&mut y);
            grew |= space.push(y);
        }
        if !grew {
            converged = true;
            break;
        }
    }
    let residual = eigen_residual(problem, &vector, lambda);
    Ok(EigenOutcome {
        lambda,
        vector,
        iterations,
        residual,
        converged,
        scale,
    })
}
