//! The discrete variational problem behind every estimator: a space of nodal
//! variables, a linear constraint (applied as a Euclidean projector), the
//! numerator and denominator terms of the quotient, and the quadratic forms
//! used at `p = 2`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fields::{CurlField, MatrixField, VectorField};
use crate::grid::{check_exponent, FaceSet, GridDomain};
use crate::operators::{
    curl_matrix, curl_matrix_adjoint, grad_scalar, grad_scalar_adjoint, grad_vector, grad_vector_adjoint,
};
use crate::tensor::{packed_pairs, so_dim};
use crate::traces::{apply_constraints, TraceConstraint};

use super::quotient;

/// The kind of nodal unknown a problem optimizes over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariableKind {
    Matrix,
    Skew,
    Vector,
    Scalar,
}

impl VariableKind {
    pub fn components(self, n: usize) -> usize {
        match self {
            VariableKind::Matrix => n * n,
            VariableKind::Skew => so_dim(n),
            VariableKind::Vector => n,
            VariableKind::Scalar => 1,
        }
    }
}

/// Linear maps from the variable to a pointwise-normed field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Term {
    /// The variable itself; `factor` turns packed storage into Frobenius.
    Identity { factor: f64 },
    Sym,
    Curl,
    /// `Curl` of the unpacked skew field.
    CurlSkew,
    Grad,
    SymGrad,
    ScalarGrad,
}

fn sym_in_place(n: usize, v: &mut [f64]) {
    for node in v.chunks_mut(n * n) {
        for i in 0..n {
            for j in i + 1..n {
                let s = 0.5 * (node[i * n + j] + node[j * n + i]);
                node[i * n + j] = s;
                node[j * n + i] = s;
            }
        }
    }
}

fn unpack_skew(n: usize, packed: &[f64]) -> Vec<f64> {
    let m = so_dim(n);
    let mut out = vec![0.0; packed.len() / m * n * n];
    for (src, dst) in packed.chunks(m).zip(out.chunks_mut(n * n)) {
        for ((i, j), a) in packed_pairs(n).zip(src) {
            dst[i * n + j] = *a;
            dst[j * n + i] = -*a;
        }
    }
    out
}

fn unpack_skew_adjoint(n: usize, full: &[f64]) -> Vec<f64> {
    let m = so_dim(n);
    let mut out = Vec::with_capacity(full.len() / (n * n) * m);
    for node in full.chunks(n * n) {
        for (i, j) in packed_pairs(n) {
            out.push(node[i * n + j] - node[j * n + i]);
        }
    }
    out
}

impl Term {
    /// Components per node of the image and the factor `f` with
    /// `|value|² = f Σ components²`.
    pub(crate) fn layout(self, n: usize) -> (usize, f64) {
        match self {
            Term::Identity { .. } => unreachable!("identity layout depends on the variable"),
            Term::Sym | Term::Grad | Term::SymGrad => (n * n, 1.0),
            Term::Curl | Term::CurlSkew => (n * so_dim(n), 2.0),
            Term::ScalarGrad => (n, 1.0),
        }
    }

    pub(crate) fn apply(self, grid: &GridDomain, x: &[f64]) -> Vec<f64> {
        let n = grid.dim();
        match self {
            Term::Identity { .. } => x.to_vec(),
            Term::Sym => {
                let mut y = x.to_vec();
                sym_in_place(n, &mut y);
                y
            }
            Term::Curl => curl_matrix(grid, &MatrixField::from_parts(n, x.to_vec())).into_values(),
            Term::CurlSkew => curl_matrix(grid, &MatrixField::from_parts(n, unpack_skew(n, x))).into_values(),
            Term::Grad => grad_vector(grid, &VectorField::from_parts(n, x.to_vec())).into_values(),
            Term::SymGrad => {
                let mut y = grad_vector(grid, &VectorField::from_parts(n, x.to_vec())).into_values();
                sym_in_place(n, &mut y);
                y
            }
            Term::ScalarGrad => grad_scalar(grid, x).into_values(),
        }
    }

    pub(crate) fn adjoint(self, grid: &GridDomain, y: &[f64]) -> Vec<f64> {
        let n = grid.dim();
        match self {
            Term::Identity { .. } => y.to_vec(),
            Term::Sym => {
                let mut x = y.to_vec();
                sym_in_place(n, &mut x);
                x
            }
            Term::Curl => curl_matrix_adjoint(grid, &CurlField::from_parts(n, y.to_vec())).into_values(),
            Term::CurlSkew => {
                let full = curl_matrix_adjoint(grid, &CurlField::from_parts(n, y.to_vec())).into_values();
                unpack_skew_adjoint(n, &full)
            }
            Term::Grad => grad_vector_adjoint(grid, &MatrixField::from_parts(n, y.to_vec())).into_values(),
            Term::SymGrad => {
                let mut s = y.to_vec();
                sym_in_place(n, &mut s);
                grad_vector_adjoint(grid, &MatrixField::from_parts(n, s)).into_values()
            }
            Term::ScalarGrad => grad_scalar_adjoint(grid, &VectorField::from_parts(n, y.to_vec())),
        }
    }
}

/// The admissible subspace, described by its Euclidean projector.
#[derive(Debug, Clone)]
pub(crate) enum Constraint {
    None,
    Trace(Vec<TraceConstraint>),
    /// Every component vanishes at these nodes.
    ZeroAt(Vec<usize>),
    /// Zero on `zero`, and each component constant over every node group.
    Pinned { zero: Vec<usize>, groups: Vec<Vec<usize>> },
}

/// Nodes lying on at least one face of `gamma`.
pub(crate) fn gamma_nodes(grid: &GridDomain, gamma: &FaceSet) -> Vec<usize> {
    (0..grid.node_count())
        .filter(|&node| grid.faces_of(node).iter().any(|f| gamma.contains(f)))
        .collect()
}

/// Connected pieces of `gamma`: faces on different axes always share an
/// edge, opposite faces touch only through a third face.
pub(crate) fn gamma_components(grid: &GridDomain, gamma: &FaceSet) -> Vec<Vec<usize>> {
    let axes: std::collections::BTreeSet<usize> = gamma.iter().map(|f| f.axis).collect();
    let pieces: Vec<FaceSet> = if axes.len() >= 2 {
        vec![gamma.clone()]
    } else {
        gamma.iter().map(|f| FaceSet::from_faces([*f])).collect()
    };
    pieces.iter().map(|piece| gamma_nodes(grid, piece)).collect()
}

#[derive(Debug, Clone)]
pub(crate) struct Problem {
    pub grid: GridDomain,
    pub variable: VariableKind,
    pub numerator: Term,
    pub denominator: Vec<Term>,
    pub constraint: Constraint,
    /// Quotient mode: the numerator is `inf_A ‖P − A‖` over constant skews,
    /// and iterates are kept mass-orthogonal to the constant skews.
    pub quotient: bool,
}

/// `(Σ_x w_x |y(x)|^p)^{1/p}` with `|y(x)|² = f Σ_c y_c(x)²`.
pub(crate) fn weighted_lp(weights: &[f64], y: &[f64], ncomp: usize, factor: f64, p: f64) -> f64 {
    let sum: f64 = y
        .chunks(ncomp)
        .zip(weights)
        .map(|(c, w)| {
            let r2 = factor * c.iter().map(|v| v * v).sum::<f64>();
            w * r2.powf(0.5 * p)
        })
        .sum();
    sum.powf(1.0 / p)
}

/// Gradient of [`weighted_lp`] with respect to `y`, given its value.
fn weighted_lp_gradient(weights: &[f64], y: &[f64], ncomp: usize, factor: f64, p: f64, value: f64) -> Vec<f64> {
    let mut g = vec![0.0; y.len()];
    if value == 0.0 {
        return g;
    }
    let scale = value.powf(1.0 - p);
    for ((c, gc), w) in y.chunks(ncomp).zip(g.chunks_mut(ncomp)).zip(weights) {
        let r2 = factor * c.iter().map(|v| v * v).sum::<f64>();
        if r2 == 0.0 {
            continue;
        }
        let coef = scale * w * r2.powf(0.5 * p - 1.0) * factor;
        for (gv, v) in gc.iter_mut().zip(c) {
            *gv = coef * v;
        }
    }
    g
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Problem {
    pub(crate) fn n(&self) -> usize {
        self.grid.dim()
    }

    pub(crate) fn ncomp(&self) -> usize {
        self.variable.components(self.n())
    }

    pub(crate) fn len(&self) -> usize {
        self.grid.node_count() * self.ncomp()
    }

    fn term_layout(&self, term: Term) -> (usize, f64) {
        match term {
            Term::Identity { factor } => (self.ncomp(), factor),
            t => t.layout(self.n()),
        }
    }

    /// Quadrature weight attached to every variable slot.
    pub(crate) fn slot_weights(&self) -> Vec<f64> {
        let c = self.ncomp();
        self.grid.weights().iter().flat_map(|&w| std::iter::repeat_n(w, c)).collect()
    }

    /// Euclidean projection onto the constraint set.
    pub(crate) fn constrain(&self, x: &mut [f64]) {
        let c = self.ncomp();
        match &self.constraint {
            Constraint::None => {}
            Constraint::Trace(cons) => apply_constraints(cons, self.n(), x),
            Constraint::ZeroAt(nodes) => {
                for &node in nodes {
                    x[node * c..(node + 1) * c].fill(0.0);
                }
            }
            Constraint::Pinned { zero, groups } => {
                for group in groups {
                    for k in 0..c {
                        let mean = group.iter().map(|&node| x[node * c + k]).sum::<f64>() / group.len() as f64;
                        for &node in group {
                            x[node * c + k] = mean;
                        }
                    }
                }
                for &node in zero {
                    x[node * c..(node + 1) * c].fill(0.0);
                }
            }
        }
    }

    /// Removes the constant-skew component (mass-orthogonal) in quotient mode.
    pub(crate) fn deflate(&self, x: &mut [f64]) {
        if !self.quotient {
            return;
        }
        let n = self.n();
        let field = MatrixField::from_parts(n, x.to_vec());
        let mean = quotient::skew_mean(&self.grid, &field);
        for node in x.chunks_mut(n * n) {
            for ((i, j), a) in packed_pairs(n).zip(mean.packed()) {
                node[i * n + j] -= a;
                node[j * n + i] += a;
            }
        }
    }

    pub(crate) fn project(&self, x: &mut [f64]) {
        self.constrain(x);
        self.deflate(x);
    }

    /// `Σ_x w_x ⟨x, y⟩` on variable storage (the mass inner product for
    /// matrix, vector and scalar variables, half of it for packed skews).
    pub(crate) fn weighted_dot(&self, x: &[f64], y: &[f64]) -> f64 {
        let c = self.ncomp();
        x.chunks(c)
            .zip(y.chunks(c))
            .zip(self.grid.weights())
            .map(|((a, b), w)| w * dot(a, b))
            .sum()
    }

    fn term_norm(&self, term: Term, x: &[f64], p: f64) -> (Vec<f64>, f64) {
        let y = term.apply(&self.grid, x);
        let (ncomp, factor) = self.term_layout(term);
        let v = weighted_lp(self.grid.weights(), &y, ncomp, factor, p);
        (y, v)
    }

    /// `Σ_t ‖L_t x‖_p`.
    pub(crate) fn denominator_value(&self, x: &[f64], p: f64) -> f64 {
        self.denominator.iter().map(|&t| self.term_norm(t, x, p).1).sum()
    }

    /// Numerator with the shifted variable it was evaluated at.
    fn numerator_eval(&self, x: &[f64], p: f64) -> Result<(Vec<f64>, f64)> {
        if self.quotient {
            let n = self.n();
            let field = MatrixField::from_parts(n, x.to_vec());
            let (a, value) = quotient::inner_inf(&self.grid, &field, p)?;
            let mut shifted = x.to_vec();
            for node in shifted.chunks_mut(n * n) {
                for ((i, j), s) in packed_pairs(n).zip(a.packed()) {
                    node[i * n + j] -= s;
                    node[j * n + i] += s;
                }
            }
            Ok((shifted, value))
        } else {
            let (_, v) = self.term_norm(self.numerator, x, p);
            Ok((x.to_vec(), v))
        }
    }

    pub(crate) fn numerator_value(&self, x: &[f64], p: f64) -> Result<f64> {
        Ok(self.numerator_eval(x, p)?.1)
    }

    /// `R(x) = numerator / denominator`.
    pub(crate) fn ratio(&self, x: &[f64], p: f64) -> Result<f64> {
        check_exponent(p)?;
        Ok(self.numerator_value(x, p)? / self.denominator_value(x, p))
    }

    /// `R(x)` and its Euclidean gradient.
    pub(crate) fn ratio_gradient(&self, x: &[f64], p: f64) -> Result<(f64, Vec<f64>)> {
        let (shifted, num) = self.numerator_eval(x, p)?;
        let weights = self.grid.weights();
        let (ny, _) = self.term_norm(self.numerator, &shifted, p);
        let (nc, nf) = self.term_layout(self.numerator);
        let num_grad = self
            .numerator
            .adjoint(&self.grid, &weighted_lp_gradient(weights, &ny, nc, nf, p, num));

        let mut den = 0.0;
        let mut den_grad = vec![0.0; x.len()];
        for &t in &self.denominator {
            let (y, v) = self.term_norm(t, x, p);
            let (c, f) = self.term_layout(t);
            den += v;
            for (d, g) in den_grad
                .iter_mut()
                .zip(t.adjoint(&self.grid, &weighted_lp_gradient(weights, &y, c, f, p, v)))
            {
                *d += g;
            }
        }
        let r = num / den;
        let grad = num_grad
            .iter()
            .zip(&den_grad)
            .map(|(a, b)| (a - r * b) / den)
            .collect();
        Ok((r, grad))
    }

    fn quadratic_apply(&self, term: Term, x: &[f64]) -> Vec<f64> {
        let (c, f) = self.term_layout(term);
        let mut y = term.apply(&self.grid, x);
        for (chunk, w) in y.chunks_mut(c).zip(self.grid.weights()) {
            for v in chunk {
                *v *= w * f;
            }
        }
        term.adjoint(&self.grid, &y)
    }

    /// `K x = Σ_t L_tᵀ W_t L_t x`, the denominator quadratic form.
    pub(crate) fn stiffness(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        for &t in &self.denominator {
            for (o, v) in out.iter_mut().zip(self.quadratic_apply(t, x)) {
                *o += v;
            }
        }
        out
    }

    /// `M x = L_numᵀ W L_num x`, the numerator quadratic form.
    pub(crate) fn mass(&self, x: &[f64]) -> Vec<f64> {
        self.quadratic_apply(self.numerator, x)
    }

    /// True when the projector annihilates a generic probe.
    pub(crate) fn is_trivial(&self) -> bool {
        let mut probe: Vec<f64> = (0..self.len()).map(|i| 1.0 + (i % 7) as f64).collect();
        self.project(&mut probe);
        probe.iter().all(|v| *v == 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid2() -> GridDomain {
        GridDomain::unit_cube(2, 5).unwrap()
    }

    fn pseudo(len: usize, seed: u64) -> Vec<f64> {
        let mut s = seed;
        (0..len)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect()
    }

    #[test]
    fn term_adjoints_are_transposes() {
        for n in [2usize, 3] {
            let g = GridDomain::unit_cube(n, 4).unwrap();
            let cases: [(Term, usize); 6] = [
                (Term::Sym, n * n),
                (Term::Curl, n * n),
                (Term::CurlSkew, so_dim(n)),
                (Term::Grad, n),
                (Term::SymGrad, n),
                (Term::ScalarGrad, 1),
            ];
            for (t, c) in cases {
                let x = pseudo(g.node_count() * c, 3);
                let y0 = t.apply(&g, &x);
                let y = pseudo(y0.len(), 5);
                let lhs = dot(&y0, &y);
                let rhs = dot(&x, &t.adjoint(&g, &y));
                assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0), "{t:?}");
            }
        }
    }

    #[test]
    fn ratio_gradient_matches_finite_differences() {
        let g = grid2();
        let prob = Problem {
            grid: g.clone(),
            variable: VariableKind::Matrix,
            numerator: Term::Identity { factor: 1.0 },
            denominator: vec![Term::Sym, Term::Curl],
            constraint: Constraint::None,
            quotient: false,
        };
        let x = pseudo(prob.len(), 11);
        for p in [1.5, 2.0, 3.0] {
            let (_, grad) = prob.ratio_gradient(&x, p).unwrap();
            let d = pseudo(prob.len(), 17);
            let eps = 1e-6;
            let xp: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + eps * b).collect();
            let xm: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a - eps * b).collect();
            let fd = (prob.ratio(&xp, p).unwrap() - prob.ratio(&xm, p).unwrap()) / (2.0 * eps);
            let an = dot(&grad, &d);
            assert!((fd - an).abs() < 1e-6 * an.abs().max(1e-3), "p={p}: {fd} vs {an}");
        }
    }

    #[test]
    fn gamma_components_split_opposite_faces() {
        let g = grid2();
        let opposite = FaceSet::parse("+x1,-x1", 2).unwrap();
        assert_eq!(gamma_components(&g, &opposite).len(), 2);
        let adjacent = FaceSet::parse("+x1,-x2", 2).unwrap();
        let comps = gamma_components(&g, &adjacent);
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].len(), 9);
    }

    #[test]
    fn pinned_projection_is_idempotent() {
        let g = grid2();
        let gamma = FaceSet::parse("+x1,-x1", 2).unwrap();
        let comps = gamma_components(&g, &gamma);
        let prob = Problem {
            grid: g.clone(),
            variable: VariableKind::Vector,
            numerator: Term::Grad,
            denominator: vec![Term::SymGrad],
            constraint: Constraint::Pinned {
                zero: comps[0].clone(),
                groups: comps[1..].to_vec(),
            },
            quotient: false,
        };
        let mut x = pseudo(prob.len(), 2);
        prob.project(&mut x);
        let once = x.clone();
        prob.project(&mut x);
        assert_eq!(once, x);
        let grad = Term::Grad.apply(&g, &x);
        let field = MatrixField::from_parts(2, grad);
        let projected = crate::traces::project_tangential_zero(&g, &field, &gamma).unwrap();
        for (a, b) in projected.values().iter().zip(field.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
