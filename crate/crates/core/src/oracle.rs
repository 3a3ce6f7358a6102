//! Dense reference for tiny grids. The quadratic forms are assembled row by
//! row from the index formulas (with a separate copy of the difference
//! stencils), restricted to an explicit basis of the admissible subspace,
//! and the generalized eigenproblem is solved by Cholesky congruence and
//! cyclic Jacobi rotations.

use crate::error::{KornError, Result};
use crate::estimator::{EstimatorConfig, Inequality};
use crate::grid::{FaceSet, GridDomain, Side};

/// Largest reduced dimension the oracle will assemble.
pub const MAX_DIM: usize = 20000;

/// Relative threshold below which an eigenvalue counts as zero.
pub const NEAR_ZERO: f64 = 1e-10;

/// The variational problem the oracle reproduces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleProblem {
    /// Matrix fields; `None` means no boundary condition.
    Korn { gamma: Option<FaceSet> },
    TangentialKorn(FaceSet),
    PoincareSkew(FaceSet),
    ScalarPoincare(FaceSet),
}

impl OracleProblem {
    /// The quotient inequality maps to the unconstrained Korn problem, whose
    /// kernel is left in place.
    pub fn from_inequality(ineq: &Inequality, dim: usize) -> Self {
        match ineq {
            Inequality::KornFullBc => OracleProblem::Korn {
                gamma: Some(FaceSet::all(dim)),
            },
            Inequality::KornPartialBc(g) => OracleProblem::Korn { gamma: Some(g.clone()) },
            Inequality::KornQuotient => OracleProblem::Korn { gamma: None },
            Inequality::TangentialKorn(g) => OracleProblem::TangentialKorn(g.clone()),
            Inequality::PoincareSkew(g) => OracleProblem::PoincareSkew(g.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Form {
    /// The left-hand side `‖·‖²`.
    Mass,
    /// `‖sym ·‖²` (matrix and skew fields; `sym D u` for vector fields).
    Sym,
    /// `‖Curl ·‖²` (matrix and skew fields).
    Curl,
    /// The full right-hand side of the problem.
    Rhs,
}

/// A symmetric matrix on the reduced coordinates together with the basis
/// that maps them to nodal storage.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    dim: usize,
    matrix: Vec<f64>,
    basis: Vec<Vec<(usize, f64)>>,
    storage_len: usize,
}

impl DenseOperator {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.dim + j]
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn apply(&self, c: &[f64]) -> Vec<f64> {
        self.matrix
            .chunks(self.dim)
            .map(|row| row.iter().zip(c).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Nodal storage of the field with reduced coordinates `c`.
    pub fn expand(&self, c: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.storage_len];
        for (b, ci) in self.basis.iter().zip(c) {
            for &(slot, v) in b {
                out[slot] += v * ci;
            }
        }
        out
    }

    /// Transpose of [`expand`](Self::expand).
    pub fn restrict(&self, y: &[f64]) -> Vec<f64> {
        self.basis
            .iter()
            .map(|b| b.iter().map(|&(slot, v)| v * y[slot]).sum())
            .collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `max |A_ij − A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in i + 1..self.dim {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Unknown {
    Matrix,
    Skew,
    Vector,
    Scalar,
}

struct Layout<'a> {
    grid: &'a GridDomain,
    n: usize,
    unknown: Unknown,
}

type Sparse = Vec<(usize, f64)>;

fn decode(grid: &GridDomain, mut node: usize) -> Vec<usize> {
    let pts = grid.points();
    let mut idx = vec![0; pts.len()];
    for d in (0..pts.len()).rev() {
        idx[d] = node % pts[d];
        node /= pts[d];
    }
    idx
}

fn encode(grid: &GridDomain, idx: &[usize]) -> usize {
    idx.iter().zip(grid.points()).fold(0, |acc, (&i, &p)| acc * p + i)
}

/// Second-order one-dimensional derivative weights at position `m`.
fn derivative_weights(m: usize, len: usize, h: f64) -> Vec<(usize, f64)> {
    if m == 0 {
        vec![(0, -1.5 / h), (1, 2.0 / h), (2, -0.5 / h)]
    } else if m + 1 == len {
        vec![(len - 3, 0.5 / h), (len - 2, -2.0 / h), (len - 1, 1.5 / h)]
    } else {
        vec![(m - 1, -0.5 / h), (m + 1, 0.5 / h)]
    }
}

fn skew_slot(n: usize, i: usize, j: usize) -> usize {
    let mut slot = 0;
    for a in 0..n {
        for b in a + 1..n {
            if (a, b) == (i, j) {
                return slot;
            }
            slot += 1;
        }
    }
    unreachable!("i < j < n")
}

impl Layout<'_> {
    fn comps(&self) -> usize {
        match self.unknown {
            Unknown::Matrix => self.n * self.n,
            Unknown::Skew => self.n * (self.n - 1) / 2,
            Unknown::Vector => self.n,
            Unknown::Scalar => 1,
        }
    }

    fn storage_len(&self) -> usize {
        self.grid.node_count() * self.comps()
    }

    /// Nodes reached by `∂_axis` at `node`, with weights.
    fn derivative(&self, node: usize, axis: usize) -> Vec<(usize, f64)> {
        let mut idx = decode(self.grid, node);
        let m = idx[axis];
        derivative_weights(m, self.grid.points()[axis], self.grid.spacing()[axis])
            .into_iter()
            .map(|(pos, w)| {
                idx[axis] = pos;
                (encode(self.grid, &idx), w)
            })
            .collect()
    }

    /// Entry `(k, j)` of the pointwise matrix value: `P`, `A` or `D u`.
    fn view(&self, node: usize, k: usize, j: usize) -> Sparse {
        let n = self.n;
        let c = self.comps();
        match self.unknown {
            Unknown::Matrix => vec![(node * c + k * n + j, 1.0)],
            Unknown::Skew => match k.cmp(&j) {
                std::cmp::Ordering::Less => vec![(node * c + skew_slot(n, k, j), 1.0)],
                std::cmp::Ordering::Greater => vec![(node * c + skew_slot(n, j, k), -1.0)],
                std::cmp::Ordering::Equal => vec![],
            },
            Unknown::Vector => self
                .derivative(node, j)
                .into_iter()
                .map(|(y, w)| (y * c + k, w))
                .collect(),
            Unknown::Scalar => unreachable!("scalar fields have no matrix view"),
        }
    }

    /// `∂_axis` of the view entry `(k, j)`; only for point-valued views.
    fn view_derivative(&self, node: usize, axis: usize, k: usize, j: usize) -> Sparse {
        self.derivative(node, axis)
            .into_iter()
            .flat_map(|(y, w)| self.view(y, k, j).into_iter().map(move |(s, v)| (s, w * v)))
            .collect()
    }

    /// Calls `emit(row, weight)` for every squared term of the form.
    fn rows(&self, form: Form, emit: &mut dyn FnMut(Sparse, f64)) -> Result<()> {
        let n = self.n;
        let weights = self.grid.weights();
        let matrix_like = matches!(self.unknown, Unknown::Matrix | Unknown::Skew);
        let (sym, curl) = match (form, self.unknown) {
            (Form::Mass, _) => (false, false),
            (Form::Sym, Unknown::Scalar) | (Form::Curl, Unknown::Scalar | Unknown::Vector) => {
                return Err(KornError::Config(format!("{form:?} form is not defined for this problem")))
            }
            (Form::Sym, _) => (true, false),
            (Form::Curl, _) => (false, true),
            (Form::Rhs, Unknown::Matrix) => (true, true),
            (Form::Rhs, Unknown::Skew) => (false, true),
            (Form::Rhs, Unknown::Vector) => (true, false),
            (Form::Rhs, Unknown::Scalar) => (false, false),
        };
        for (node, &w) in weights.iter().enumerate() {
            if self.unknown == Unknown::Scalar {
                if form == Form::Mass {
                    emit(vec![(node, 1.0)], w);
                } else {
                    for axis in 0..n {
                        emit(self.derivative(node, axis), w);
                    }
                }
                continue;
            }
            if form == Form::Mass {
                for k in 0..n {
                    for j in 0..n {
                        emit(self.view(node, k, j), w);
                    }
                }
            }
            if sym {
                for k in 0..n {
                    for j in 0..n {
                        let mut row: Sparse = self.view(node, k, j).into_iter().map(|(s, v)| (s, 0.5 * v)).collect();
                        row.extend(self.view(node, j, k).into_iter().map(|(s, v)| (s, 0.5 * v)));
                        emit(row, w);
                    }
                }
            }
            if curl && matrix_like {
                for k in 0..n {
                    for i in 0..n {
                        for j in i + 1..n {
                            let mut row = self.view_derivative(node, i, k, j);
                            row.extend(self.view_derivative(node, j, k, i).into_iter().map(|(s, v)| (s, -v)));
                            emit(row, 2.0 * w);
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Faces of `gamma` touching `node`.
fn gamma_hits(grid: &GridDomain, gamma: &FaceSet, node: usize) -> Vec<(usize, Side)> {
    let idx = decode(grid, node);
    let mut hits = Vec::new();
    for face in gamma.iter() {
        let m = idx[face.axis];
        let on = match face.side {
            Side::Lower => m == 0,
            Side::Upper => m + 1 == grid.points()[face.axis],
        };
        if on {
            hits.push((face.axis, face.side));
        }
    }
    hits
}

fn basis_for(grid: &GridDomain, problem: &OracleProblem) -> (Unknown, Vec<Sparse>) {
    let n = grid.dim();
    let nodes = grid.node_count();
    let units = |c: usize, skip: &dyn Fn(usize) -> bool| -> Vec<Sparse> {
        (0..nodes)
            .filter(|&x| !skip(x))
            .flat_map(|x| (0..c).map(move |q| vec![(x * c + q, 1.0)]))
            .collect()
    };
    match problem {
        OracleProblem::Korn { gamma } => {
            let mut basis = Vec::new();
            for x in 0..nodes {
                let hits = gamma.as_ref().map(|g| gamma_hits(grid, g, x)).unwrap_or_default();
                match hits.len() {
                    0 => basis.extend((0..n * n).map(|q| vec![(x * n * n + q, 1.0)])),
                    1 => {
                        let a = hits[0].0;
                        basis.extend((0..n).map(|k| vec![(x * n * n + k * n + a, 1.0)]));
                    }
                    _ => {}
                }
            }
            (Unknown::Matrix, basis)
        }
        OracleProblem::PoincareSkew(g) => {
            let m = n * (n - 1) / 2;
            (Unknown::Skew, units(m, &|x| !gamma_hits(grid, g, x).is_empty()))
        }
        OracleProblem::ScalarPoincare(g) => (Unknown::Scalar, units(1, &|x| !gamma_hits(grid, g, x).is_empty())),
        OracleProblem::TangentialKorn(g) => {
            let on_gamma = |x: usize| !gamma_hits(grid, g, x).is_empty();
            let mut basis = units(n, &on_gamma);
            let axes: std::collections::BTreeSet<usize> = g.iter().map(|f| f.axis).collect();
            let groups: Vec<Vec<usize>> = if axes.len() >= 2 {
                vec![(0..nodes).filter(|&x| on_gamma(x)).collect()]
            } else {
                g.iter()
                    .map(|f| {
                        let single = FaceSet::from_faces([*f]);
                        (0..nodes).filter(|&x| !gamma_hits(grid, &single, x).is_empty()).collect()
                    })
                    .collect()
            };
            for group in groups.iter().skip(1) {
                for k in 0..n {
                    basis.push(group.iter().map(|&x| (x * n + k, 1.0)).collect());
                }
            }
            (Unknown::Vector, basis)
        }
    }
}

/// Assembles `form` on the admissible subspace of `problem`.
pub fn assemble(form: Form, grid: &GridDomain, problem: &OracleProblem) -> Result<DenseOperator> {
    let (unknown, basis) = basis_for(grid, problem);
    let dim = basis.len();
    if dim > MAX_DIM {
        return Err(KornError::OracleTooLarge { dim, limit: MAX_DIM });
    }
    if dim == 0 {
        return Err(KornError::ZeroSubspace);
    }
    let layout = Layout {
        grid,
        n: grid.dim(),
        unknown,
    };
    let storage_len = layout.storage_len();
    let mut owners: Vec<Vec<(usize, f64)>> = vec![Vec::new(); storage_len];
    for (b, vec) in basis.iter().enumerate() {
        for &(slot, v) in vec {
            owners[slot].push((b, v));
        }
    }
    let mut matrix = vec![0.0; dim * dim];
    let mut reduced: Vec<(usize, f64)> = Vec::new();
    layout.rows(form, &mut |row, w| {
        reduced.clear();
        for (slot, v) in row {
            for &(b, c) in &owners[slot] {
                reduced.push((b, v * c));
            }
        }
        for &(a, va) in &reduced {
            for &(b, vb) in &reduced {
                matrix[a * dim + b] += w * va * vb;
            }
        }
    })?;
    Ok(DenseOperator {
        dim,
        matrix,
        basis,
        storage_len,
    })
}

/// Eigenvalues ascending with `M`-orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    /// `max ‖A v − λ B v‖ / ‖A‖_F` over all pairs.
    pub max_residual: f64,
    /// `max |vᵢᵀ B vⱼ − δᵢⱼ|`.
    pub orthonormality_error: f64,
}

fn cholesky(b: &[f64], d: usize) -> Result<Vec<f64>> {
    let mut l = vec![0.0; d * d];
    for j in 0..d {
        let mut s = b[j * d + j];
        for k in 0..j {
            s -= l[j * d + k] * l[j * d + k];
        }
        if !(s > 0.0) {
            return Err(KornError::MassNotPositiveDefinite { pivot: j, value: s });
        }
        let ljj = s.sqrt();
        l[j * d + j] = ljj;
        for i in j + 1..d {
            let mut s = b[i * d + j];
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k];
            }
            l[i * d + j] = s / ljj;
        }
    }
    Ok(l)
}

/// Solves `L x = y` in place.
fn forward(l: &[f64], d: usize, y: &mut [f64]) {
    for i in 0..d {
        let mut s = y[i];
        for k in 0..i {
            s -= l[i * d + k] * y[k];
        }
        y[i] = s / l[i * d + i];
    }
}

/// Solves `Lᵀ x = y` in place.
fn backward(l: &[f64], d: usize, y: &mut [f64]) {
    for i in (0..d).rev() {
        let mut s = y[i];
        for k in i + 1..d {
            s -= l[k * d + i] * y[k];
        }
        y[i] = s / l[i * d + i];
    }
}

/// Cyclic Jacobi on a symmetric row-major matrix. Returns the diagonal and
/// the accumulated rotations (columns are eigenvectors).
fn jacobi(mut a: Vec<f64>, d: usize) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0; d * d];
    for i in 0..d {
        v[i * d + i] = 1.0;
    }
    let total: f64 = a.iter().map(|x| x * x).sum();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..d {
            for q in p + 1..d {
                off += a[p * d + q] * a[p * d + q];
            }
        }
        if off <= 1e-32 * total {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                let apq = a[p * d + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * d + p];
                let aqq = a[q * d + q];
                if apq.abs() <= 1e-300 + f64::EPSILON * 1e-3 * (app.abs() * aqq.abs()).sqrt() {
                    a[p * d + q] = 0.0;
                    a[q * d + p] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let akp = a[k * d + p];
                    let akq = a[k * d + q];
                    a[k * d + p] = c * akp - s * akq;
                    a[k * d + q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let apk = a[p * d + k];
                    let aqk = a[q * d + k];
                    a[p * d + k] = c * apk - s * aqk;
                    a[q * d + k] = s * apk + c * aqk;
                }
                a[p * d + q] = 0.0;
                a[q * d + p] = 0.0;
                for k in 0..d {
                    let vkp = v[k * d + p];
                    let vkq = v[k * d + q];
                    v[k * d + p] = c * vkp - s * vkq;
                    v[k * d + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..d).map(|i| a[i * d + i]).collect(), v)
}

/// Solves `A v = λ B v` for symmetric `A` and positive definite `B`.
pub fn full_spectrum(op: &DenseOperator, mass: &DenseOperator) -> Result<Spectrum> {
    let d = op.dim;
    if mass.dim != d {
        return Err(KornError::DimensionMismatch {
            expected: d,
            found: mass.dim,
        });
    }
    let l = cholesky(&mass.matrix, d)?;
    // X = L⁻¹ A column by column (A symmetric, so rows serve as columns).
    let mut x = vec![0.0; d * d];
    for j in 0..d {
        let mut col: Vec<f64> = (0..d).map(|i| op.matrix[i * d + j]).collect();
        forward(&l, d, &mut col);
        for i in 0..d {
            x[i * d + j] = col[i];
        }
    }
    // C = L⁻¹ Xᵀ.
    let mut c = vec![0.0; d * d];
    for j in 0..d {
        let mut col: Vec<f64> = (0..d).map(|i| x[j * d + i]).collect();
        forward(&l, d, &mut col);
        for i in 0..d {
            c[i * d + j] = col[i];
        }
    }
    for i in 0..d {
        for j in i + 1..d {
            let s = 0.5 * (c[i * d + j] + c[j * d + i]);
            c[i * d + j] = s;
            c[j * d + i] = s;
        }
    }
    let (values, z) = jacobi(c, d);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut sorted = Vec::with_capacity(d);
    let mut vectors = Vec::with_capacity(d);
    for &col in &order {
        let mut y: Vec<f64> = (0..d).map(|i| z[i * d + col]).collect();
        backward(&l, d, &mut y);
        sorted.push(values[col]);
        vectors.push(y);
    }

    let anorm = op.frobenius_norm().max(f64::MIN_POSITIVE);
    let mut max_residual: f64 = 0.0;
    let bv: Vec<Vec<f64>> = vectors.iter().map(|v| mass.apply(v)).collect();
    for ((v, lam), bvi) in vectors.iter().zip(&sorted).zip(&bv) {
        let av = op.apply(v);
        let r: f64 = av.iter().zip(bvi).map(|(a, b)| (a - lam * b).powi(2)).sum::<f64>().sqrt();
        max_residual = max_residual.max(r / anorm);
    }
    let mut orthonormality_error: f64 = 0.0;
    for i in 0..d {
        for j in i..d {
            let g: f64 = vectors[i].iter().zip(&bv[j]).map(|(a, b)| a * b).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            orthonormality_error = orthonormality_error.max((g - target).abs());
        }
    }
    Ok(Spectrum {
        values: sorted,
        vectors,
        max_residual,
        orthonormality_error,
    })
}

/// Number of eigenvalues below `rel · λ_max`.
pub fn count_near_zero(values: &[f64], rel: f64) -> usize {
    let max = values.iter().cloned().fold(0.0, f64::max);
    values.iter().filter(|&&v| v < rel * max).count()
}

/// Oracle summary for an estimator configuration at `p = 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSummary {
    pub dim: usize,
    /// Smallest eigenvalue above the near-zero threshold.
    pub lambda_min: f64,
    pub near_zero: usize,
    pub lambda_max: f64,
    pub max_residual: f64,
    pub orthonormality_error: f64,
}

pub fn oracle_for(cfg: &EstimatorConfig) -> Result<OracleSummary> {
    let problem = OracleProblem::from_inequality(&cfg.inequality, cfg.grid.dim());
    summarize(&cfg.grid, &problem)
}

pub fn summarize(grid: &GridDomain, problem: &OracleProblem) -> Result<OracleSummary> {
    let k = assemble(Form::Rhs, grid, problem)?;
    let m = assemble(Form::Mass, grid, problem)?;
    let spectrum = full_spectrum(&k, &m)?;
    let near_zero = count_near_zero(&spectrum.values, NEAR_ZERO);
    let lambda_max = *spectrum.values.last().expect("non-empty spectrum");
    Ok(OracleSummary {
        dim: k.dim(),
        lambda_min: spectrum.values.get(near_zero).copied().unwrap_or(f64::NAN),
        near_zero,
        lambda_max,
        max_residual: spectrum.max_residual,
        orthonormality_error: spectrum.orthonormality_error,
    })
}
