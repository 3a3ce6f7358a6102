//! Tangential traces `P ⨯ ν`, the zero-trace constraint on a set of box
//! faces Γ, and a quadrature check of the integration-by-parts formula that
//! defines the trace.
//!
//! A node on exactly one face of Γ carries the constraint "every row of `P`
//! is parallel to `ν`" (equivalently `P τ_l = 0` for the tangent frame). A
//! node on two or more faces of Γ has independent normals, and the only rows
//! parallel to all of them are zero.

use crate::error::{KornError, Result};
use crate::fields::{MatrixField, VectorField};
use crate::grid::{BoundaryFacet, FaceSet, FacetClass, GridDomain};
use crate::operators::{curl_vector, div_matrix};
use crate::tensor::{matrix_cross, packed_pairs, ThirdOrderCross, VecN};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    RowsParallelToNormal,
    RowsZero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceConstraint {
    pub node: usize,
    pub kind: ConstraintKind,
    pub active_normals: Vec<VecN>,
}

/// Trace constraints induced by the faces in `gamma`.
pub fn trace_constraints(grid: &GridDomain, gamma: &FaceSet) -> Vec<TraceConstraint> {
    grid.classify_boundary()
        .into_iter()
        .filter_map(|facet| {
            let active: Vec<VecN> = facet
                .faces
                .iter()
                .zip(&facet.normals)
                .filter(|(f, _)| gamma.contains(f))
                .map(|(_, nu)| nu.clone())
                .collect();
            let kind = match active.len() {
                0 => return None,
                1 => ConstraintKind::RowsParallelToNormal,
                _ => ConstraintKind::RowsZero,
            };
            Some(TraceConstraint {
                node: facet.node,
                kind,
                active_normals: active,
            })
        })
        .collect()
}

/// Applies the constraints to raw node-major matrix data in place.
pub fn apply_constraints(constraints: &[TraceConstraint], n: usize, data: &mut [f64]) {
    for c in constraints {
        let value = &mut data[c.node * n * n..(c.node + 1) * n * n];
        match c.kind {
            ConstraintKind::RowsZero => value.fill(0.0),
            ConstraintKind::RowsParallelToNormal => {
                let nu = c.active_normals[0].as_slice();
                for row in value.chunks_mut(n) {
                    let along: f64 = row.iter().zip(nu).map(|(a, b)| a * b).sum();
                    for (r, v) in row.iter_mut().zip(nu) {
                        *r = along * v;
                    }
                }
            }
        }
    }
}

/// Nearest field (nodewise Frobenius) with vanishing tangential trace on Γ.
pub fn project_tangential_zero(grid: &GridDomain, p: &MatrixField, gamma: &FaceSet) -> Result<MatrixField> {
    if gamma.is_empty() {
        return Err(KornError::EmptyGamma);
    }
    let mut out = p.clone();
    apply_constraints(&trace_constraints(grid, gamma), grid.dim(), out.values_mut());
    Ok(out)
}

/// `P(node) ⨯ ν` for every outward normal adjacent to the facet (exactly one
/// for a face-class facet).
pub fn tangential_trace(p: &MatrixField, facet: &BoundaryFacet) -> Vec<ThirdOrderCross> {
    let value = p.at(facet.node);
    facet
        .normals
        .iter()
        .map(|nu| matrix_cross(&value, nu).expect("field and grid share dimension"))
        .collect()
}

/// Compares `P ⨯ ν = 0` with `P τ_l = 0 ∀l` at a face-class facet. Both sides
/// are measured on the same scale (`‖P ⨯ ν‖ / √2` and `(Σ_l ‖P τ_l‖²)^{1/2}`,
/// which coincide for a unit normal), so the result is `true` whenever the
/// equivalence holds.
pub fn trace_equivalence_check(p: &MatrixField, facet: &BoundaryFacet, tol: f64) -> Result<bool> {
    if facet.class != FacetClass::Face {
        return Err(KornError::Degenerate(format!(
            "node {} is an edge or corner node; the check needs a face-class facet",
            facet.node
        )));
    }
    let value = p.at(facet.node);
    let nu = facet.outward_normal().expect("face-class facet has a normal");
    let cross = matrix_cross(&value, nu)?.frobenius_norm() / std::f64::consts::SQRT_2;
    let tangential = facet
        .tangent_frame
        .iter()
        .map(|tau| value.mul_vec(tau).map(|v| v.norm().powi(2)))
        .sum::<Result<f64>>()?
        .sqrt();
    Ok((cross <= tol) == (tangential <= tol))
}

/// `⟨S, Q⟩` for a packed skew `S` against a full matrix `Q` (row-major slice).
fn skew_pairing(n: usize, packed: &[f64], q: &[f64]) -> f64 {
    packed_pairs(n)
        .zip(packed)
        .map(|((i, j), s)| s * (q[i * n + j] - q[j * n + i]))
        .sum()
}

/// Quadrature residual of the integration-by-parts identity for row `k`:
///
/// `∮ ⟨(Pᵀe_k) ⨯ ν, Q⟩ dS = −∫ ⟨curl(Pᵀe_k), Q⟩ dx + 2 ∫ ⟨Pᵀe_k, Div(skew Q)⟩ dx`
///
/// with `curl r = −2 skew(D r)`. Returns the absolute difference of the two
/// sides under trapezoidal quadrature.
pub fn ibp_residual(grid: &GridDomain, p: &MatrixField, q: &MatrixField, k: usize) -> Result<f64> {
    let n = grid.dim();
    if k >= n {
        return Err(KornError::IndexOutOfRange { index: k, dim: n });
    }
    let nn = n * n;
    let row_values: Vec<f64> = (0..grid.node_count())
        .flat_map(|node| (0..n).map(move |j| (node, j)))
        .map(|(node, j)| p.entry(node, k, j))
        .collect();
    let row = VectorField::from_values(grid, row_values)?;

    let mut boundary = 0.0;
    for facet_face in crate::grid::Face::all(n) {
        let nu = facet_face.outward_normal(n);
        for (node, w) in grid.face_quadrature(facet_face) {
            let cross = crate::tensor::generalized_cross(&row.at(node), &nu)?;
            boundary += w * skew_pairing(n, cross.packed(), &q.values()[node * nn..(node + 1) * nn]);
        }
    }

    let curl = curl_vector(grid, &row);
    let div_skew = div_matrix(grid, &q.skew());
    let weights = grid.weights();
    let mut volume_curl = 0.0;
    let mut volume_div = 0.0;
    for node in 0..grid.node_count() {
        let w = weights[node];
        volume_curl += w * skew_pairing(n, curl.at(node).packed(), &q.values()[node * nn..(node + 1) * nn]);
        volume_div += w * row.at(node).dot(&div_skew.at(node));
    }
    Ok((boundary - (-volume_curl + 2.0 * volume_div)).abs())
}
