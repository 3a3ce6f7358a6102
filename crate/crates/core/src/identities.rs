//! Randomized checks of the algebraic and discrete identities the rest of
//! the crate relies on. Each check reports the largest residual it saw.

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{KornError, Result};
use crate::fields::{MatrixField, VectorField};
use crate::grid::{FacetClass, GridDomain};
use crate::operators::{curl_matrix, grad_skew_from_curl, grad_vector, partial};
use crate::tensor::{
    axl_cross_compat, crucial_combination, generalized_cross, matrix_cross, packed_pairs, recover_skew, so_dim, MatN,
    PackedSkew, ThirdOrderCross, VecN,
};
use crate::traces::{project_tangential_zero, trace_equivalence_check};

/// Signature of the crucial combination `T_kij − T_kji + T_jik`.
pub type CrucialFn = fn(&ThirdOrderCross, usize, usize, usize) -> Result<f64>;

/// Dimensions above this only produce a runtime warning.
pub const MAX_QUICK_DIM: usize = 6;

const SAMPLES: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityResult {
    pub name: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub dims: Vec<usize>,
    pub results: Vec<IdentityResult>,
    pub warnings: Vec<String>,
}

impl IdentityReport {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn failing(&self) -> Vec<&str> {
        self.results.iter().filter(|r| !r.passed).map(|r| r.name.as_str()).collect()
    }
}

struct Tracker {
    name: &'static str,
    tolerance: f64,
    worst: f64,
}

impl Tracker {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            tolerance,
            worst: 0.0,
        }
    }

    fn see(&mut self, residual: f64) {
        if residual.is_nan() {
            self.worst = f64::INFINITY;
        } else {
            self.worst = self.worst.max(residual);
        }
    }

    fn finish(self) -> IdentityResult {
        IdentityResult {
            name: self.name.to_string(),
            max_residual: self.worst,
            tolerance: self.tolerance,
            passed: self.worst <= self.tolerance,
        }
    }
}

fn unit(rng: &mut Xoshiro256PlusPlus) -> f64 {
    rng.random_range(-1.0..1.0)
}

fn random_vec(rng: &mut Xoshiro256PlusPlus, n: usize) -> VecN {
    VecN::new((0..n).map(|_| unit(rng)).collect()).expect("n >= 2")
}

fn random_skew(rng: &mut Xoshiro256PlusPlus, n: usize) -> PackedSkew {
    PackedSkew::from_packed(n, (0..so_dim(n)).map(|_| unit(rng)).collect()).expect("packed length")
}

fn random_mat(rng: &mut Xoshiro256PlusPlus, n: usize) -> MatN {
    MatN::from_row_major(n, (0..n * n).map(|_| unit(rng)).collect()).expect("n² entries")
}

/// Exponent tuples with total degree at most `degree`.
fn monomials(n: usize, degree: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|e: Vec<usize>| {
                let used: usize = e.iter().sum();
                (0..=degree - used).map(move |k| {
                    let mut f = e.clone();
                    f.push(k);
                    f
                })
            })
            .collect();
    }
    out
}

/// A vector field whose components are random polynomials of degree ≤ `degree`.
pub fn random_polynomial_field(grid: &GridDomain, degree: usize, seed: u64) -> VectorField {
    let n = grid.dim();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let terms = monomials(n, degree);
    let coefs: Vec<Vec<f64>> = (0..n).map(|_| terms.iter().map(|_| unit(&mut rng)).collect()).collect();
    VectorField::from_fn(grid, |x| {
        coefs
            .iter()
            .map(|cs| {
                terms
                    .iter()
                    .zip(cs)
                    .map(|(e, c)| c * e.iter().zip(x).map(|(&k, xi)| xi.powi(k as i32)).product::<f64>())
                    .sum()
            })
            .collect()
    })
}

fn grid_for(n: usize) -> Result<GridDomain> {
    let points = match n {
        2 | 3 => 7,
        4 => 5,
        _ => 4,
    };
    GridDomain::unit_cube(n, points)
}

/// Runs the suite with the crate's own crucial combination.
pub fn verify_identities(dims: &[usize], seed: u64) -> Result<IdentityReport> {
    verify_identities_with(dims, seed, crucial_combination)
}

/// Runs the suite with a caller-supplied crucial combination.
pub fn verify_identities_with(dims: &[usize], seed: u64, crucial: CrucialFn) -> Result<IdentityReport> {
    if dims.is_empty() {
        return Err(KornError::Config("no dimensions given".into()));
    }
    if let Some(&d) = dims.iter().find(|&&d| d < 2) {
        return Err(KornError::Config(format!("dimension {d} is below 2")));
    }
    let warnings = dims
        .iter()
        .filter(|&&d| d > MAX_QUICK_DIM)
        .map(|d| format!("dimension {d} exceeds {MAX_QUICK_DIM}; the discrete checks may take a while"))
        .collect();

    let mut antisym = Tracker::new("antisymmetry", 1e-15);
    let mut crucial_t = Tracker::new("crucial_combination", 1e-12);
    let mut recover = Tracker::new("recover_skew", 1e-12);
    let mut axl_t = Tracker::new("axl_compatibility", 1e-14);
    let mut parallel = Tracker::new("parallel_rows_zero_cross", 1e-14);
    let mut orth = Tracker::new("sym_skew_orthogonality", 1e-14);
    let mut curl_grad = Tracker::new("curl_grad_interior", 1e-13);
    let mut grad_from_curl = Tracker::new("gradient_from_curl", 1e-10);
    let mut curl_const = Tracker::new("curl_of_constants", 1e-10);
    let mut trace_eq = Tracker::new("trace_equivalence", 0.0);

    for &n in dims {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed.wrapping_add(n as u64));
        for _ in 0..SAMPLES {
            let a = random_vec(&mut rng, n);
            let b = random_vec(&mut rng, n);
            let ab = generalized_cross(&a, &b)?;
            let ba = generalized_cross(&b, &a)?;
            let aa = generalized_cross(&a, &a)?;
            for ((x, y), z) in ab.packed().iter().zip(ba.packed()).zip(aa.packed()) {
                antisym.see((x + y).abs().max(z.abs()));
            }

            let s = random_skew(&mut rng, n);
            let t = matrix_cross(&s.unpack(), &b)?;
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        crucial_t.see((crucial(&t, i, j, k)? - 2.0 * s.get(i, j) * b[k]).abs());
                    }
                }
            }
            let back = recover_skew(&t, &b)?;
            let err = back.unpack().sub(&s.unpack()).frobenius_norm() / s.frobenius_norm();
            recover.see(err);

            if n == 3 {
                let c = axl_cross_compat(&a, &b)?;
                let classical = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
                for (x, y) in c.as_slice().iter().zip(classical) {
                    axl_t.see((x - y).abs());
                }
            }

            let alphas = random_vec(&mut rng, n);
            let p = MatN::dyad(&alphas, &b)?;
            parallel.see(matrix_cross(&p, &b)?.frobenius_norm());

            let m = random_mat(&mut rng, n);
            orth.see(m.sym().frobenius_inner(&m.skew()).abs());
        }

        let grid = grid_for(n)?;
        for trial in 0..3u64 {
            let v = random_polynomial_field(&grid, 3, seed.wrapping_add(97 * n as u64 + trial));
            let c = curl_matrix(&grid, &grad_vector(&grid, &v));
            let scale = v.max_abs().max(1.0);
            for node in (0..grid.node_count()).filter(|&x| grid.is_interior(x, 1)) {
                for blk in c.at(node).blocks() {
                    for val in blk.packed() {
                        curl_grad.see(val.abs() / scale);
                    }
                }
            }
        }

        let m = so_dim(n);
        let nodes = grid.node_count();
        let packed: Vec<f64> = (0..nodes * m).map(|_| unit(&mut rng)).collect();
        let mut full = vec![0.0; nodes * n * n];
        for node in 0..nodes {
            for (slot, (i, j)) in packed_pairs(n).enumerate() {
                full[node * n * n + i * n + j] = packed[node * m + slot];
                full[node * n * n + j * n + i] = -packed[node * m + slot];
            }
        }
        let a_field = MatrixField::from_values(&grid, full)?;
        let recovered = grad_skew_from_curl(&curl_matrix(&grid, &a_field));
        let scale = 1.0 / grid.max_spacing();
        for k in 0..n {
            let direct = partial(&grid, &packed, m, k);
            for node in 0..nodes {
                for slot in 0..m {
                    let r = recovered.values()[node * n * m + k * m + slot];
                    grad_from_curl.see((r - direct[node * m + slot]).abs() / scale);
                }
            }
        }

        let constant = MatrixField::constant(&grid, &random_mat(&mut rng, n));
        curl_const.see(curl_matrix(&grid, &constant).max_abs());

        let random = MatrixField::from_values(&grid, (0..nodes * n * n).map(|_| unit(&mut rng)).collect())?;
        let projected = project_tangential_zero(&grid, &random, &crate::grid::FaceSet::all(n))?;
        for facet in grid.classify_boundary().iter().filter(|f| f.class == FacetClass::Face) {
            for field in [&random, &projected] {
                let ok = trace_equivalence_check(field, facet, 1e-12)?;
                trace_eq.see(if ok { 0.0 } else { 1.0 });
            }
        }
    }

    let mut results = vec![antisym.finish(), crucial_t.finish(), recover.finish()];
    if dims.contains(&3) {
        results.push(axl_t.finish());
    }
    results.extend([
        parallel.finish(),
        orth.finish(),
        curl_grad.finish(),
        grad_from_curl.finish(),
        curl_const.finish(),
        trace_eq.finish(),
    ]);
    Ok(IdentityReport {
        dims: dims.to_vec(),
        results,
        warnings,
    })
}
