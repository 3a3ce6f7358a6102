//! Discrete optimal constants of the Korn-type inequalities.
//!
//! At `p = 2` the constant of the quadratic form
//! `‖P‖² ≤ c² (‖sym P‖² + ‖Curl P‖²)` is `λ_min^{−1/2}` for the smallest
//! eigenvalue of the pencil (stiffness, mass) on the admissible subspace.
//! The sum-form constant `‖P‖ ≤ c (‖sym P‖ + ‖Curl P‖)` then lies in
//! `[c₂/√2, c₂]`. For general `p` the quotient is maximized by multi-start
//! projected ascent, and the best value found is a lower bound.

mod ascent;
mod eigen;
pub(crate) mod problem;
pub mod quotient;

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{KornError, Result};
use crate::fields::{MatrixField, VectorField};
use crate::grid::{check_exponent, FaceSet, GridDomain};
use crate::operators::{curl_matrix, grad_vector};
use crate::tensor::{packed_pairs, so_dim};
use crate::traces::trace_constraints;

use problem::{gamma_components, gamma_nodes, Constraint, Problem, Term};
pub use problem::VariableKind;
pub use quotient::{inner_inf, skew_mean};

/// Which inequality to estimate the constant of.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Inequality {
    /// Zero tangential trace on the whole boundary.
    KornFullBc,
    /// Zero tangential trace on the faces in Γ.
    KornPartialBc(FaceSet),
    /// No boundary condition, constant skews factored out.
    KornQuotient,
    /// `‖D u‖ ≤ c ‖sym D u‖` with `D u ⨯ ν = 0` on Γ.
    TangentialKorn(FaceSet),
    /// `‖A‖ ≤ c ‖Curl A‖` for skew fields vanishing on Γ.
    PoincareSkew(FaceSet),
}

impl Inequality {
    pub const NAMES: [&'static str; 5] = [
        "korn_full_bc",
        "korn_partial_bc",
        "korn_quotient",
        "tangential_korn",
        "poincare_skew",
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Inequality::KornFullBc => "korn_full_bc",
            Inequality::KornPartialBc(_) => "korn_partial_bc",
            Inequality::KornQuotient => "korn_quotient",
            Inequality::TangentialKorn(_) => "tangential_korn",
            Inequality::PoincareSkew(_) => "poincare_skew",
        }
    }

    pub fn gamma(&self) -> Option<&FaceSet> {
        match self {
            Inequality::KornPartialBc(g) | Inequality::TangentialKorn(g) | Inequality::PoincareSkew(g) => Some(g),
            _ => None,
        }
    }

    /// Builds the selector from its name. `gamma` is required for the
    /// partial-boundary variants and ignored otherwise.
    pub fn from_name(name: &str, gamma: Option<FaceSet>) -> Result<Self> {
        let need = |g: Option<FaceSet>| g.ok_or_else(|| KornError::Config(format!("`{name}` needs a gamma face set")));
        Ok(match name {
            "korn_full_bc" => Inequality::KornFullBc,
            "korn_quotient" => Inequality::KornQuotient,
            "korn_partial_bc" => Inequality::KornPartialBc(need(gamma)?),
            "tangential_korn" => Inequality::TangentialKorn(need(gamma)?),
            "poincare_skew" => Inequality::PoincareSkew(need(gamma)?),
            other => {
                return Err(KornError::Config(format!(
                    "unknown inequality `{other}` (expected one of {})",
                    Self::NAMES.join(", ")
                )))
            }
        })
    }
}

impl fmt::Display for Inequality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    pub inequality: Inequality,
    pub p: f64,
    pub grid: GridDomain,
    pub max_iter: usize,
    pub tol_rel: f64,
    pub seed: u64,
    /// Number of ascent starts for `p ≠ 2`.
    pub starts: usize,
}

impl EstimatorConfig {
    pub const DEFAULT_MAX_ITER: usize = 200;
    pub const DEFAULT_TOL_REL: f64 = 1e-10;
    pub const DEFAULT_STARTS: usize = 8;

    pub fn new(inequality: Inequality, p: f64, grid: GridDomain) -> Self {
        Self {
            inequality,
            p,
            grid,
            max_iter: Self::DEFAULT_MAX_ITER,
            tol_rel: Self::DEFAULT_TOL_REL,
            seed: 0,
            starts: Self::DEFAULT_STARTS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_exponent(self.p)?;
        if !(self.tol_rel > 0.0 && self.tol_rel.is_finite()) {
            return Err(KornError::Config(format!("tol_rel must be positive, got {}", self.tol_rel)));
        }
        if self.max_iter == 0 {
            return Err(KornError::Config("max_iter must be at least 1".into()));
        }
        if self.starts == 0 {
            return Err(KornError::Config("at least one ascent start is required".into()));
        }
        if let Some(gamma) = self.inequality.gamma() {
            if gamma.is_empty() {
                return Err(KornError::EmptyGamma);
            }
            if let Some(f) = gamma.iter().find(|f| f.axis >= self.grid.dim()) {
                return Err(KornError::InvalidFace(f.to_string()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Eigen,
    Ascent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorReport {
    pub config: EstimatorConfig,
    pub route: Route,
    pub variable: VariableKind,
    /// The constant `c`; `1 / quotient_value`.
    pub constant_estimate: f64,
    pub quotient_value: f64,
    pub lambda_min: Option<f64>,
    /// Bracket for the sum-form constant at `p = 2`.
    pub sum_form_interval: Option<[f64; 2]>,
    /// True when `constant_estimate` is only a lower bound.
    pub lower_bound: bool,
    pub iterations: usize,
    pub residual: f64,
    /// The optimizer in variable storage (see [`VariableKind`]).
    pub minimizer: Vec<f64>,
    /// One trace of accepted quotient values per ascent start.
    pub ascent_traces: Vec<Vec<f64>>,
    pub best_start: Option<usize>,
}

impl EstimatorReport {
    fn problem(&self) -> Result<Problem> {
        build_problem(&self.config, self.variable == VariableKind::Scalar)
    }

    /// Quotient `R(x)` of this report's problem at `x` (sum form).
    pub fn ratio_at(&self, x: &[f64]) -> Result<f64> {
        let prob = self.problem()?;
        if x.len() != prob.len() {
            return Err(KornError::DimensionMismatch {
                expected: prob.len(),
                found: x.len(),
            });
        }
        prob.ratio(x, self.config.p)
    }

    /// The minimizer as a matrix field: `P` itself, the unpacked skew field,
    /// `D u`, or `a I` for scalar fields.
    pub fn minimizer_snapshot(&self) -> MatrixField {
        let grid = &self.config.grid;
        let n = grid.dim();
        let x = &self.minimizer;
        match self.variable {
            VariableKind::Matrix => MatrixField::from_parts(n, x.clone()),
            VariableKind::Skew => {
                let m = so_dim(n);
                let mut out = MatrixField::zeros(grid);
                for node in 0..grid.node_count() {
                    let vals = out.values_mut();
                    for ((i, j), a) in packed_pairs(n).zip(&x[node * m..(node + 1) * m]) {
                        vals[(node * n + i) * n + j] = *a;
                        vals[(node * n + j) * n + i] = -*a;
                    }
                }
                out
            }
            VariableKind::Vector => grad_vector(grid, &VectorField::from_parts(n, x.clone())),
            VariableKind::Scalar => {
                let mut out = MatrixField::zeros(grid);
                for (node, a) in x.iter().enumerate() {
                    for i in 0..n {
                        out.values_mut()[(node * n + i) * n + i] = *a;
                    }
                }
                out
            }
        }
    }
}

fn build_problem(cfg: &EstimatorConfig, scalar: bool) -> Result<Problem> {
    cfg.validate()?;
    let grid = cfg.grid.clone();
    let matrix = |constraint, quotient| Problem {
        grid: grid.clone(),
        variable: VariableKind::Matrix,
        numerator: Term::Identity { factor: 1.0 },
        denominator: vec![Term::Sym, Term::Curl],
        constraint,
        quotient,
    };
    Ok(match &cfg.inequality {
        Inequality::KornFullBc => matrix(Constraint::Trace(trace_constraints(&grid, &FaceSet::all(grid.dim()))), false),
        Inequality::KornPartialBc(gamma) => matrix(Constraint::Trace(trace_constraints(&grid, gamma)), false),
        Inequality::KornQuotient => matrix(Constraint::None, true),
        Inequality::TangentialKorn(gamma) => {
            let mut comps = gamma_components(&grid, gamma);
            let zero = comps.remove(0);
            Problem {
                grid: grid.clone(),
                variable: VariableKind::Vector,
                numerator: Term::Grad,
                denominator: vec![Term::SymGrad],
                constraint: Constraint::Pinned { zero, groups: comps },
                quotient: false,
            }
        }
        Inequality::PoincareSkew(gamma) if scalar => Problem {
            grid: grid.clone(),
            variable: VariableKind::Scalar,
            numerator: Term::Identity { factor: 1.0 },
            denominator: vec![Term::ScalarGrad],
            constraint: Constraint::ZeroAt(gamma_nodes(&grid, gamma)),
            quotient: false,
        },
        Inequality::PoincareSkew(gamma) => Problem {
            grid: grid.clone(),
            variable: VariableKind::Skew,
            numerator: Term::Identity { factor: 2.0 },
            denominator: vec![Term::CurlSkew],
            constraint: Constraint::ZeroAt(gamma_nodes(&grid, gamma)),
            quotient: false,
        },
    })
}

/// `‖sym P‖_{L^p} + ‖Curl P‖_{L^p}`.
pub fn rhs_functional(grid: &GridDomain, p_field: &MatrixField, p: f64) -> Result<f64> {
    Ok(p_field.sym().lp_norm(grid, p)? + curl_matrix(grid, p_field).lp_norm(grid, p)?)
}

fn eigen_route(cfg: &EstimatorConfig, scalar: bool) -> Result<EstimatorReport> {
    if cfg.p != 2.0 {
        return Err(KornError::Config(format!("the eigen route needs p = 2, got {}", cfg.p)));
    }
    let prob = build_problem(cfg, scalar)?;
    let out = eigen::smallest_eigenpair(&prob, cfg.max_iter, cfg.tol_rel, cfg.seed)?;
    if !out.converged {
        return Err(KornError::NotConverged {
            iterations: out.iterations,
            best: out.lambda,
            residual: out.residual,
        });
    }
    if out.lambda <= 1e-10 * out.scale {
        return Err(KornError::KernelLeak(format!(
            "smallest eigenvalue {:e} is negligible against the operator scale {:e}",
            out.lambda, out.scale
        )));
    }
    let c2 = out.lambda.powf(-0.5);
    Ok(EstimatorReport {
        config: cfg.clone(),
        route: Route::Eigen,
        variable: prob.variable,
        constant_estimate: c2,
        quotient_value: out.lambda.sqrt(),
        lambda_min: Some(out.lambda),
        sum_form_interval: Some([c2 / std::f64::consts::SQRT_2, c2]),
        lower_bound: false,
        iterations: out.iterations,
        residual: out.residual,
        minimizer: out.vector,
        ascent_traces: Vec::new(),
        best_start: None,
    })
}

fn coordinate_field(prob: &Problem, axis: usize) -> Vec<f64> {
    let c = prob.ncomp();
    let mut x: Vec<f64> = (0..prob.grid.node_count())
        .flat_map(|node| {
            let t = prob.grid.coords(node)[axis];
            std::iter::repeat_n(t, c)
        })
        .collect();
    prob.project(&mut x);
    x
}

fn usable(prob: &Problem, x: &[f64], p: f64) -> bool {
    let norm = prob.weighted_dot(x, x).sqrt();
    norm > 0.0 && prob.denominator_value(x, p) >= 1e-14 * norm
}

fn ascent_route(cfg: &EstimatorConfig, scalar: bool) -> Result<EstimatorReport> {
    let prob = build_problem(cfg, scalar)?;
    let p = cfg.p;
    let n = cfg.grid.dim();

    let eig = eigen::smallest_eigenpair(&prob, cfg.max_iter.max(50), cfg.tol_rel.max(1e-8), cfg.seed)?;
    if eig.lambda <= 1e-10 * eig.scale {
        return Err(KornError::KernelLeak(format!(
            "admissible field with vanishing right-hand side (eigenvalue {:e})",
            eig.lambda
        )));
    }
    let mut starts = vec![eig.vector];
    for i in 1..cfg.starts {
        let x = if i <= n.min(2) {
            coordinate_field(&prob, i - 1)
        } else {
            eigen::random_field(&prob, cfg.seed.wrapping_add(i as u64))
        };
        starts.push(x);
    }
    for (i, x) in starts.iter_mut().enumerate() {
        let mut attempt = 0u64;
        while !usable(&prob, x, p) {
            attempt += 1;
            if attempt > 8 {
                return Err(KornError::KernelLeak(format!(
                    "start {i} keeps a vanishing right-hand side after {} reseeds",
                    attempt - 1
                )));
            }
            *x = eigen::random_field(&prob, cfg.seed.wrapping_add(1000 * attempt + i as u64));
        }
    }

    let runs: Vec<ascent::AscentRun> = starts
        .par_iter()
        .map(|x| ascent::ascend(&prob, p, x, cfg.max_iter, cfg.tol_rel))
        .collect::<Result<_>>()?;
    let best = (0..runs.len())
        .max_by(|&a, &b| runs[a].value.total_cmp(&runs[b].value).then(b.cmp(&a)))
        .expect("at least one start");
    let run = &runs[best];
    let residual = if runs[best].trace.len() >= 2 {
        let t = &run.trace;
        (t[t.len() - 1] - t[t.len() - 2]) / t[t.len() - 1]
    } else {
        0.0
    };
    Ok(EstimatorReport {
        config: cfg.clone(),
        route: Route::Ascent,
        variable: prob.variable,
        constant_estimate: run.value,
        quotient_value: 1.0 / run.value,
        lambda_min: None,
        sum_form_interval: None,
        lower_bound: true,
        iterations: run.iterations,
        residual,
        minimizer: run.x.clone(),
        ascent_traces: runs.iter().map(|r| r.trace.clone()).collect(),
        best_start: Some(best),
    })
}

/// Exact discrete constant of the quadratic form at `p = 2`.
pub fn estimate_constant_p2(cfg: &EstimatorConfig) -> Result<EstimatorReport> {
    eigen_route(cfg, false)
}

/// Certified lower bound on the sum-form constant for any `1 < p < ∞`.
pub fn estimate_constant_lp(cfg: &EstimatorConfig) -> Result<EstimatorReport> {
    ascent_route(cfg, false)
}

/// Lower bound on the constant of the quotient inequality without boundary
/// conditions.
pub fn estimate_quotient_constant(cfg: &EstimatorConfig) -> Result<EstimatorReport> {
    if cfg.inequality != Inequality::KornQuotient {
        return Err(KornError::Config(format!(
            "quotient estimation needs korn_quotient, got {}",
            cfg.inequality
        )));
    }
    ascent_route(cfg, false)
}

fn dispatch(cfg: &EstimatorConfig, scalar: bool) -> Result<EstimatorReport> {
    if cfg.p == 2.0 {
        eigen_route(cfg, scalar)
    } else {
        ascent_route(cfg, scalar)
    }
}

pub fn tangential_korn_constant(cfg: &EstimatorConfig) -> Result<EstimatorReport> {
    match cfg.inequality {
        Inequality::TangentialKorn(_) => dispatch(cfg, false),
        _ => Err(KornError::Config(format!("expected tangential_korn, got {}", cfg.inequality))),
    }
}

pub fn poincare_skew_constant(cfg: &EstimatorConfig) -> Result<EstimatorReport> {
    match cfg.inequality {
        Inequality::PoincareSkew(_) => dispatch(cfg, false),
        _ => Err(KornError::Config(format!("expected poincare_skew, got {}", cfg.inequality))),
    }
}

/// The Poincaré constant `‖a‖ ≤ c ‖∇a‖` for scalar fields vanishing on the
/// Γ of a `poincare_skew` configuration.
pub fn scalar_poincare_constant(cfg: &EstimatorConfig) -> Result<EstimatorReport> {
    match cfg.inequality {
        Inequality::PoincareSkew(_) => dispatch(cfg, true),
        _ => Err(KornError::Config(format!("expected poincare_skew, got {}", cfg.inequality))),
    }
}

/// Eigen route at `p = 2`, ascent otherwise.
pub fn estimate(cfg: &EstimatorConfig) -> Result<EstimatorReport> {
    dispatch(cfg, false)
}

#[cfg(test)]
pub(crate) fn build_problem_for_tests(cfg: &EstimatorConfig) -> Problem {
    build_problem(cfg, false).expect("valid test configuration")
}
