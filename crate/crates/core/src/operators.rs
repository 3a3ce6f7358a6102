//! Matrix-free finite-difference operators: gradient, generalized curl of
//! vector fields, generalized `Curl` and `Div` of matrix fields, their
//! adjoints, and the reconstruction of `D A` from `Curl A` for skew fields.
//!
//! Every first derivative uses second-order central differences at interior
//! nodes and second-order one-sided three-point stencils at boundary nodes.
//! Interior central differences along distinct axes commute, so
//! `Curl D v` vanishes at interior nodes up to roundoff.

use rayon::prelude::*;

use crate::fields::{BlockSkewField, CurlField, MatrixField, SkewField, VectorField};
use crate::grid::GridDomain;
use crate::tensor::{pack_index, packed_pairs, so_dim};

/// `(offset, coefficient)` pairs of the derivative stencil at position `m`
/// of an axis with `len >= 3` points.
#[inline]
pub(crate) fn stencil(m: usize, len: usize, h: f64) -> [(isize, f64); 3] {
    let c = 0.5 / h;
    if m == 0 {
        [(0, -3.0 * c), (1, 4.0 * c), (2, -c)]
    } else if m == len - 1 {
        [(-2, c), (-1, -4.0 * c), (0, 3.0 * c)]
    } else {
        [(-1, -c), (1, c), (0, 0.0)]
    }
}

/// Derivative along `axis` of every component of a node-major field with
/// `ncomp` components per node.
pub fn partial(grid: &GridDomain, data: &[f64], ncomp: usize, axis: usize) -> Vec<f64> {
    debug_assert_eq!(data.len(), grid.node_count() * ncomp);
    let stride = grid.stride(axis) as isize;
    let len = grid.points()[axis];
    let h = grid.spacing()[axis];
    let mut out = vec![0.0; data.len()];
    out.par_chunks_mut(ncomp).enumerate().for_each(|(node, o)| {
        let m = grid.axis_position(node, axis);
        for (off, c) in stencil(m, len, h) {
            if c == 0.0 {
                continue;
            }
            let src = (node as isize + off * stride) as usize * ncomp;
            for (q, oq) in o.iter_mut().enumerate() {
                *oq += c * data[src + q];
            }
        }
    });
    out
}

/// Transpose of [`partial`] (Euclidean inner product on the flat arrays).
pub fn partial_adjoint(grid: &GridDomain, data: &[f64], ncomp: usize, axis: usize) -> Vec<f64> {
    debug_assert_eq!(data.len(), grid.node_count() * ncomp);
    let stride = grid.stride(axis) as isize;
    let len = grid.points()[axis];
    let h = grid.spacing()[axis];
    let mut out = vec![0.0; data.len()];
    out.par_chunks_mut(ncomp).enumerate().for_each(|(node, o)| {
        let m = grid.axis_position(node, axis) as isize;
        // Gather from every node whose stencil reaches this one.
        for delta in -2isize..=2 {
            let mt = m + delta;
            if mt < 0 || mt >= len as isize {
                continue;
            }
            for (off, c) in stencil(mt as usize, len, h) {
                if off != -delta || c == 0.0 {
                    continue;
                }
                let src = (node as isize + delta * stride) as usize * ncomp;
                for (q, oq) in o.iter_mut().enumerate() {
                    *oq += c * data[src + q];
                }
            }
        }
    });
    out
}

/// `(D v)[k][j] = ∂_j v_k`.
pub fn grad_vector(grid: &GridDomain, v: &VectorField) -> MatrixField {
    let n = grid.dim();
    let mut out = vec![0.0; grid.node_count() * n * n];
    for j in 0..n {
        let dj = partial(grid, v.values(), n, j);
        for node in 0..grid.node_count() {
            for k in 0..n {
                out[(node * n + k) * n + j] = dj[node * n + k];
            }
        }
    }
    MatrixField::from_values(grid, out).expect("length matches grid")
}

/// Transpose of [`grad_vector`].
pub fn grad_vector_adjoint(grid: &GridDomain, p: &MatrixField) -> VectorField {
    let n = grid.dim();
    let nodes = grid.node_count();
    let mut out = vec![0.0; nodes * n];
    let mut column = vec![0.0; nodes * n];
    for j in 0..n {
        for node in 0..nodes {
            for k in 0..n {
                column[node * n + k] = p.values()[(node * n + k) * n + j];
            }
        }
        for (o, a) in out.iter_mut().zip(partial_adjoint(grid, &column, n, j)) {
            *o += a;
        }
    }
    VectorField::from_values(grid, out).expect("length matches grid")
}

/// Gradient of a scalar field, one component per axis.
pub fn grad_scalar(grid: &GridDomain, a: &[f64]) -> VectorField {
    let n = grid.dim();
    let mut out = vec![0.0; grid.node_count() * n];
    for d in 0..n {
        for (node, v) in partial(grid, a, 1, d).into_iter().enumerate() {
            out[node * n + d] = v;
        }
    }
    VectorField::from_values(grid, out).expect("length matches grid")
}

/// Transpose of [`grad_scalar`].
pub fn grad_scalar_adjoint(grid: &GridDomain, g: &VectorField) -> Vec<f64> {
    let n = grid.dim();
    let nodes = grid.node_count();
    let mut out = vec![0.0; nodes];
    let mut comp = vec![0.0; nodes];
    for d in 0..n {
        for node in 0..nodes {
            comp[node] = g.values()[node * n + d];
        }
        for (o, a) in out.iter_mut().zip(partial_adjoint(grid, &comp, 1, d)) {
            *o += a;
        }
    }
    out
}

/// `curl v = −2 skew(D v)`, packed: entry `(i, j)` is `∂_i v_j − ∂_j v_i`.
pub fn curl_vector(grid: &GridDomain, v: &VectorField) -> SkewField {
    let n = grid.dim();
    let g = grad_vector(grid, v);
    let mut out = Vec::with_capacity(grid.node_count() * so_dim(n));
    for node in 0..grid.node_count() {
        for (i, j) in packed_pairs(n) {
            out.push(g.entry(node, j, i) - g.entry(node, i, j));
        }
    }
    SkewField::from_values(grid, out).expect("length matches grid")
}

/// `(Curl P)[i][j][k] = ∂_i P[k][j] − ∂_j P[k][i]`, block `k` = curl of row `k`.
pub fn curl_matrix(grid: &GridDomain, p: &MatrixField) -> CurlField {
    let n = grid.dim();
    let nn = n * n;
    let m = so_dim(n);
    let derivs: Vec<Vec<f64>> = (0..n).map(|a| partial(grid, p.values(), nn, a)).collect();
    let mut out = vec![0.0; grid.node_count() * n * m];
    out.par_chunks_mut(n * m).enumerate().for_each(|(node, o)| {
        let base = node * nn;
        for k in 0..n {
            for (slot, (i, j)) in packed_pairs(n).enumerate() {
                o[k * m + slot] = derivs[i][base + k * n + j] - derivs[j][base + k * n + i];
            }
        }
    });
    CurlField::from_values(grid, out).expect("length matches grid")
}

/// Transpose of [`curl_matrix`] on the packed storage.
pub fn curl_matrix_adjoint(grid: &GridDomain, c: &CurlField) -> MatrixField {
    let n = grid.dim();
    let nn = n * n;
    let m = so_dim(n);
    let nodes = grid.node_count();
    let mut out = vec![0.0; nodes * nn];
    for a in 0..n {
        // Coefficients multiplying ∂_a P[k][·] in the packed curl.
        let mut y = vec![0.0; nodes * nn];
        y.par_chunks_mut(nn).enumerate().for_each(|(node, yn)| {
            let cb = node * n * m;
            for k in 0..n {
                for j in a + 1..n {
                    yn[k * n + j] += c.values()[cb + k * m + pack_index(n, a, j)];
                }
                for i in 0..a {
                    yn[k * n + i] -= c.values()[cb + k * m + pack_index(n, i, a)];
                }
            }
        });
        for (o, v) in out.iter_mut().zip(partial_adjoint(grid, &y, nn, a)) {
            *o += v;
        }
    }
    MatrixField::from_values(grid, out).expect("length matches grid")
}

/// `(Div P)_k = Σ_j ∂_j P[k][j]`.
pub fn div_matrix(grid: &GridDomain, p: &MatrixField) -> VectorField {
    let n = grid.dim();
    let nn = n * n;
    let mut out = vec![0.0; grid.node_count() * n];
    for j in 0..n {
        let dj = partial(grid, p.values(), nn, j);
        for node in 0..grid.node_count() {
            for k in 0..n {
                out[node * n + k] += dj[node * nn + k * n + j];
            }
        }
    }
    VectorField::from_values(grid, out).expect("length matches grid")
}

/// Recovers `∂_k A` for a skew field `A` from `C = Curl A`:
/// `(∂_k A)[i][j] = −(C[k][i][j] − C[k][j][i] + C[j][i][k]) / 2`.
/// Block `k` of the output holds `∂_k A`.
pub fn grad_skew_from_curl(c: &CurlField) -> BlockSkewField {
    let n = c.dim();
    let m = so_dim(n);
    let nodes = c.node_count();
    let vals = c.values();
    // C[a][b][c] at a node: block c, entry (a, b).
    let entry = |base: usize, a: usize, b: usize, blk: usize| -> f64 {
        use std::cmp::Ordering::*;
        match a.cmp(&b) {
            Less => vals[base + blk * m + pack_index(n, a, b)],
            Greater => -vals[base + blk * m + pack_index(n, b, a)],
            Equal => 0.0,
        }
    };
    let mut out = vec![0.0; nodes * n * m];
    out.par_chunks_mut(n * m).enumerate().for_each(|(node, o)| {
        let base = node * n * m;
        for k in 0..n {
            for (slot, (i, j)) in packed_pairs(n).enumerate() {
                let comb = entry(base, k, i, j) - entry(base, k, j, i) + entry(base, j, i, k);
                o[k * m + slot] = -0.5 * comb;
            }
        }
    });
    BlockSkewField::from_parts(n, out)
}
