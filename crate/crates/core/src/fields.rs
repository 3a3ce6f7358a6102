//! Nodal fields on a [`GridDomain`], stored node-major in flat vectors.

use crate::error::{KornError, Result};
use crate::grid::{lp_norm, GridDomain};
use crate::tensor::{so_dim, MatN, PackedSkew, ThirdOrderCross, VecN};

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(KornError::DimensionMismatch { expected, found });
    }
    Ok(())
}

macro_rules! flat_field_common {
    ($ty:ident) => {
        impl $ty {
            #[allow(dead_code)]
            pub(crate) fn from_parts(dim: usize, values: Vec<f64>) -> Self {
                Self { dim, values }
            }

            pub fn dim(&self) -> usize {
                self.dim
            }

            pub fn values(&self) -> &[f64] {
                &self.values
            }

            pub fn values_mut(&mut self) -> &mut [f64] {
                &mut self.values
            }

            pub fn into_values(self) -> Vec<f64> {
                self.values
            }

            pub fn node_count(&self) -> usize {
                self.values.len() / Self::stride_for(self.dim)
            }

            pub fn scaled(&self, c: f64) -> Self {
                Self {
                    dim: self.dim,
                    values: self.values.iter().map(|x| c * x).collect(),
                }
            }

            /// `α self + β other`.
            pub fn combine(&self, alpha: f64, other: &Self, beta: f64) -> Self {
                Self {
                    dim: self.dim,
                    values: self
                        .values
                        .iter()
                        .zip(&other.values)
                        .map(|(x, y)| alpha * x + beta * y)
                        .collect(),
                }
            }

            pub fn max_abs(&self) -> f64 {
                self.values.iter().fold(0.0, |m, x| m.max(x.abs()))
            }

            /// Discrete `L^p` norm with pointwise Frobenius norms.
            pub fn lp_norm(&self, grid: &GridDomain, p: f64) -> Result<f64> {
                lp_norm(&self.pointwise_norms(), p, grid.weights())
            }
        }
    };
}

/// `v: Ω → R^n` sampled at the nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    dim: usize,
    values: Vec<f64>,
}

flat_field_common!(VectorField);

impl VectorField {
    fn stride_for(dim: usize) -> usize {
        dim
    }

    pub fn zeros(grid: &GridDomain) -> Self {
        Self {
            dim: grid.dim(),
            values: vec![0.0; grid.node_count() * grid.dim()],
        }
    }

    pub fn from_values(grid: &GridDomain, values: Vec<f64>) -> Result<Self> {
        check_len(grid.node_count() * grid.dim(), values.len())?;
        Ok(Self {
            dim: grid.dim(),
            values,
        })
    }

    pub fn from_fn(grid: &GridDomain, f: impl Fn(&[f64]) -> Vec<f64>) -> Self {
        let n = grid.dim();
        let mut values = Vec::with_capacity(grid.node_count() * n);
        for node in 0..grid.node_count() {
            let v = f(&grid.coords(node));
            assert_eq!(v.len(), n, "vector field value has wrong length");
            values.extend(v);
        }
        Self { dim: n, values }
    }

    pub fn at(&self, node: usize) -> VecN {
        VecN::new(self.values[node * self.dim..(node + 1) * self.dim].to_vec())
            .expect("dimension >= 2")
    }

    pub fn pointwise_norms(&self) -> Vec<f64> {
        self.values
            .chunks(self.dim)
            .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect()
    }
}

/// `P: Ω → R^{n×n}` sampled at the nodes; node values are row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixField {
    dim: usize,
    values: Vec<f64>,
}

flat_field_common!(MatrixField);

impl MatrixField {
    fn stride_for(dim: usize) -> usize {
        dim * dim
    }

    pub fn zeros(grid: &GridDomain) -> Self {
        Self {
            dim: grid.dim(),
            values: vec![0.0; grid.node_count() * grid.dim() * grid.dim()],
        }
    }

    pub fn from_values(grid: &GridDomain, values: Vec<f64>) -> Result<Self> {
        let n = grid.dim();
        check_len(grid.node_count() * n * n, values.len())?;
        Ok(Self { dim: n, values })
    }

    pub fn from_fn(grid: &GridDomain, f: impl Fn(&[f64]) -> MatN) -> Self {
        let n = grid.dim();
        let mut values = Vec::with_capacity(grid.node_count() * n * n);
        for node in 0..grid.node_count() {
            let m = f(&grid.coords(node));
            assert_eq!(m.dim(), n, "matrix field value has wrong dimension");
            values.extend_from_slice(m.as_slice());
        }
        Self { dim: n, values }
    }

    /// The same matrix at every node.
    pub fn constant(grid: &GridDomain, m: &MatN) -> Self {
        Self::from_fn(grid, |_| m.clone())
    }

    pub fn at(&self, node: usize) -> MatN {
        let nn = self.dim * self.dim;
        MatN::from_row_major(self.dim, self.values[node * nn..(node + 1) * nn].to_vec())
            .expect("length checked")
    }

    pub fn set(&mut self, node: usize, m: &MatN) {
        let nn = self.dim * self.dim;
        self.values[node * nn..(node + 1) * nn].copy_from_slice(m.as_slice());
    }

    /// `P[k][j]` at `node`.
    #[inline]
    pub fn entry(&self, node: usize, k: usize, j: usize) -> f64 {
        self.values[(node * self.dim + k) * self.dim + j]
    }

    pub fn sym(&self) -> Self {
        self.map_nodes(|m| m.sym())
    }

    pub fn skew(&self) -> Self {
        self.map_nodes(|m| m.skew())
    }

    pub fn transpose(&self) -> Self {
        self.map_nodes(|m| m.transpose())
    }

    fn map_nodes(&self, f: impl Fn(&MatN) -> MatN) -> Self {
        let mut out = self.clone();
        for node in 0..self.node_count() {
            out.set(node, &f(&self.at(node)));
        }
        out
    }

    pub fn pointwise_norms(&self) -> Vec<f64> {
        self.values
            .chunks(self.dim * self.dim)
            .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect()
    }
}

/// A field of packed `so(n)` values, e.g. the curl of a vector field.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewField {
    dim: usize,
    values: Vec<f64>,
}

flat_field_common!(SkewField);

impl SkewField {
    fn stride_for(dim: usize) -> usize {
        so_dim(dim)
    }

    pub fn zeros(grid: &GridDomain) -> Self {
        Self {
            dim: grid.dim(),
            values: vec![0.0; grid.node_count() * so_dim(grid.dim())],
        }
    }

    pub fn from_values(grid: &GridDomain, values: Vec<f64>) -> Result<Self> {
        check_len(grid.node_count() * so_dim(grid.dim()), values.len())?;
        Ok(Self {
            dim: grid.dim(),
            values,
        })
    }

    pub fn at(&self, node: usize) -> PackedSkew {
        let m = so_dim(self.dim);
        PackedSkew::from_packed(self.dim, self.values[node * m..(node + 1) * m].to_vec())
            .expect("length checked")
    }

    /// Unpacks into a skew-valued matrix field.
    pub fn to_matrix_field(&self) -> MatrixField {
        let n = self.dim;
        let mut values = Vec::with_capacity(self.node_count() * n * n);
        for node in 0..self.node_count() {
            values.extend_from_slice(self.at(node).unpack().as_slice());
        }
        MatrixField { dim: n, values }
    }

    pub fn pointwise_norms(&self) -> Vec<f64> {
        self.values
            .chunks(so_dim(self.dim).max(1))
            .map(|c| (2.0 * c.iter().map(|x| x * x).sum::<f64>()).sqrt())
            .collect()
    }
}

/// `n` packed skew blocks per node, i.e. values in `so(n) × R^n`.
/// Used for `Curl P` (block `k` = curl of row `k`) and for the gradient
/// `(∂_k A)_k` of a skew field.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSkewField {
    dim: usize,
    values: Vec<f64>,
}

pub type CurlField = BlockSkewField;

flat_field_common!(BlockSkewField);

impl BlockSkewField {
    fn stride_for(dim: usize) -> usize {
        dim * so_dim(dim)
    }

    pub fn zeros(grid: &GridDomain) -> Self {
        let n = grid.dim();
        Self {
            dim: n,
            values: vec![0.0; grid.node_count() * n * so_dim(n)],
        }
    }

    pub fn from_values(grid: &GridDomain, values: Vec<f64>) -> Result<Self> {
        let n = grid.dim();
        check_len(grid.node_count() * n * so_dim(n), values.len())?;
        Ok(Self { dim: n, values })
    }

    pub fn at(&self, node: usize) -> ThirdOrderCross {
        let n = self.dim;
        let m = so_dim(n);
        let base = node * n * m;
        let blocks = (0..n)
            .map(|k| {
                PackedSkew::from_packed(n, self.values[base + k * m..base + (k + 1) * m].to_vec())
                    .expect("length checked")
            })
            .collect();
        ThirdOrderCross::from_blocks(blocks).expect("blocks share dimension")
    }

    /// Frobenius norm over all `n³` entries of each node value.
    pub fn pointwise_norms(&self) -> Vec<f64> {
        self.values
            .chunks((self.dim * so_dim(self.dim)).max(1))
            .map(|c| (2.0 * c.iter().map(|x| x * x).sum::<f64>()).sqrt())
            .collect()
    }
}
