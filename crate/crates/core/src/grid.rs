//! Axis-aligned box grids: node enumeration, trapezoidal quadrature,
//! boundary faces with their outward normals and tangent frames, and the
//! discrete `L^p` norm.
//!
//! Nodes are enumerated lexicographically over multi-indices with the last
//! axis running fastest.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{KornError, Result};
use crate::tensor::VecN;

#[derive(Debug, Clone, PartialEq)]
pub struct GridDomain {
    dim: usize,
    extents: Vec<f64>,
    points: Vec<usize>,
    spacing: Vec<f64>,
    strides: Vec<usize>,
    node_count: usize,
    weights: Vec<f64>,
}

impl GridDomain {
    /// Builds a box `[0, extents[0]] × … × [0, extents[n-1]]` sampled with
    /// `points[d]` nodes along axis `d`.
    pub fn new(dim: usize, extents: &[f64], points: &[usize]) -> Result<Self> {
        if dim < 2 {
            return Err(KornError::InvalidGrid(format!("dimension must be >= 2, got {dim}")));
        }
        if extents.len() != dim || points.len() != dim {
            return Err(KornError::InvalidGrid(format!(
                "expected {dim} extents and {dim} point counts, got {} and {}",
                extents.len(),
                points.len()
            )));
        }
        if let Some(&p) = points.iter().find(|&&p| p < 3) {
            return Err(KornError::InvalidGrid(format!(
                "every axis needs at least 3 points, got {p}"
            )));
        }
        if extents.iter().any(|&e| !(e.is_finite() && e > 0.0)) {
            return Err(KornError::InvalidGrid("extents must be finite and positive".into()));
        }
        let spacing: Vec<f64> = extents
            .iter()
            .zip(points)
            .map(|(&e, &p)| e / (p - 1) as f64)
            .collect();
        let mut strides = vec![1; dim];
        for d in (0..dim - 1).rev() {
            strides[d] = strides[d + 1] * points[d + 1];
        }
        let node_count = points.iter().product();

        let axis_weights: Vec<Vec<f64>> = (0..dim)
            .map(|d| {
                (0..points[d])
                    .map(|m| {
                        if m == 0 || m == points[d] - 1 {
                            0.5 * spacing[d]
                        } else {
                            spacing[d]
                        }
                    })
                    .collect()
            })
            .collect();
        let mut grid = Self {
            dim,
            extents: extents.to_vec(),
            points: points.to_vec(),
            spacing,
            strides,
            node_count,
            weights: Vec::new(),
        };
        let mut idx = vec![0; dim];
        grid.weights = (0..node_count)
            .map(|node| {
                grid.fill_multi_index(node, &mut idx);
                idx.iter().enumerate().map(|(d, &m)| axis_weights[d][m]).product()
            })
            .collect();
        Ok(grid)
    }

    /// Unit cube with the same number of points on every axis.
    pub fn unit_cube(dim: usize, points_per_axis: usize) -> Result<Self> {
        Self::new(dim, &vec![1.0; dim], &vec![points_per_axis; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extents(&self) -> &[f64] {
        &self.extents
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacing.iter().copied().fold(0.0, f64::max)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    /// Trapezoidal volume weight of every node.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn volume(&self) -> f64 {
        self.extents.iter().product()
    }

    fn fill_multi_index(&self, node: usize, out: &mut [usize]) {
        let mut rest = node;
        for d in 0..self.dim {
            out[d] = rest / self.strides[d];
            rest %= self.strides[d];
        }
    }

    pub fn multi_index(&self, node: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim];
        self.fill_multi_index(node, &mut idx);
        idx
    }

    /// Position of `node` along `axis`.
    #[inline]
    pub fn axis_position(&self, node: usize, axis: usize) -> usize {
        (node / self.strides[axis]) % self.points[axis]
    }

    pub fn node_at(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn coords(&self, node: usize) -> Vec<f64> {
        (0..self.dim)
            .map(|d| self.axis_position(node, d) as f64 * self.spacing[d])
            .collect()
    }

    /// Faces of the box that contain `node`.
    pub fn faces_of(&self, node: usize) -> Vec<Face> {
        let mut faces = Vec::new();
        for axis in 0..self.dim {
            let m = self.axis_position(node, axis);
            if m == 0 {
                faces.push(Face { axis, side: Side::Lower });
            } else if m == self.points[axis] - 1 {
                faces.push(Face { axis, side: Side::Upper });
            }
        }
        faces
    }

    /// True when `node` is at least `margin` steps away from every face.
    pub fn is_interior(&self, node: usize, margin: usize) -> bool {
        (0..self.dim).all(|d| {
            let m = self.axis_position(node, d);
            m >= margin && m + margin < self.points[d]
        })
    }

    /// Nodes of `face` with their trapezoidal weights on that face.
    pub fn face_quadrature(&self, face: Face) -> Vec<(usize, f64)> {
        (0..self.node_count)
            .filter(|&node| {
                let m = self.axis_position(node, face.axis);
                match face.side {
                    Side::Lower => m == 0,
                    Side::Upper => m == self.points[face.axis] - 1,
                }
            })
            .map(|node| {
                let w = (0..self.dim)
                    .filter(|&d| d != face.axis)
                    .map(|d| {
                        let m = self.axis_position(node, d);
                        if m == 0 || m == self.points[d] - 1 {
                            0.5 * self.spacing[d]
                        } else {
                            self.spacing[d]
                        }
                    })
                    .product();
                (node, w)
            })
            .collect()
    }

    /// All boundary nodes with their adjacent faces.
    pub fn classify_boundary(&self) -> Vec<BoundaryFacet> {
        (0..self.node_count)
            .filter_map(|node| {
                let faces = self.faces_of(node);
                if faces.is_empty() {
                    None
                } else {
                    Some(BoundaryFacet::new(node, faces, self.dim))
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    Lower,
    Upper,
}

/// One face of the box, `x_axis = 0` (lower) or `x_axis = extent` (upper).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Face {
    pub axis: usize,
    pub side: Side,
}

impl Face {
    pub fn lower(axis: usize) -> Self {
        Self { axis, side: Side::Lower }
    }

    pub fn upper(axis: usize) -> Self {
        Self { axis, side: Side::Upper }
    }

    pub fn all(dim: usize) -> Vec<Face> {
        (0..dim).flat_map(|d| [Face::upper(d), Face::lower(d)]).collect()
    }

    pub fn outward_normal(&self, dim: usize) -> VecN {
        let mut e = VecN::basis(dim, self.axis);
        if self.side == Side::Lower {
            e = e.scaled(-1.0);
        }
        e
    }

    /// Canonical tangent frame `{e_m : m ≠ axis}`.
    pub fn tangent_frame(&self, dim: usize) -> Vec<VecN> {
        (0..dim)
            .filter(|&m| m != self.axis)
            .map(|m| VecN::basis(dim, m))
            .collect()
    }
}

impl fmt::Display for Face {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = match self.side {
            Side::Upper => '+',
            Side::Lower => '-',
        };
        write!(f, "{sign}x{}", self.axis + 1)
    }
}

impl FromStr for Face {
    type Err = KornError;

    /// Accepts `+x1`, `-x2` and the Unicode minus `−x2`; axes are 1-based.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let (side, rest) = if let Some(r) = t.strip_prefix('+') {
            (Side::Upper, r)
        } else if let Some(r) = t.strip_prefix('-') {
            (Side::Lower, r)
        } else if let Some(r) = t.strip_prefix('\u{2212}') {
            (Side::Lower, r)
        } else {
            return Err(KornError::InvalidFace(s.to_string()));
        };
        let axis: usize = rest
            .strip_prefix('x')
            .and_then(|a| a.parse().ok())
            .filter(|&a: &usize| a >= 1)
            .ok_or_else(|| KornError::InvalidFace(s.to_string()))?;
        Ok(Face { axis: axis - 1, side })
    }
}

/// A set of box faces, the discrete stand-in for a boundary portion Γ.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FaceSet(BTreeSet<Face>);

impl FaceSet {
    pub fn all(dim: usize) -> Self {
        Self(Face::all(dim).into_iter().collect())
    }

    pub fn from_faces(faces: impl IntoIterator<Item = Face>) -> Self {
        Self(faces.into_iter().collect())
    }

    /// Parses `all` or a comma-separated list of face labels, checking the
    /// axes against `dim`.
    pub fn parse(text: &str, dim: usize) -> Result<Self> {
        let text = text.trim();
        if text.eq_ignore_ascii_case("all") {
            return Ok(Self::all(dim));
        }
        let mut set = BTreeSet::new();
        for label in text.split(',').filter(|s| !s.trim().is_empty()) {
            let face: Face = label.parse()?;
            if face.axis >= dim {
                return Err(KornError::InvalidFace(label.trim().to_string()));
            }
            set.insert(face);
        }
        if set.is_empty() {
            return Err(KornError::EmptyGamma);
        }
        Ok(Self(set))
    }

    pub fn contains(&self, face: &Face) -> bool {
        self.0.contains(face)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Face> {
        self.0.iter()
    }

    pub fn is_subset(&self, other: &FaceSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn is_all(&self, dim: usize) -> bool {
        self.0.len() == 2 * dim
    }

    /// Label used in configs and reports (`all` or `+x1,-x2,…`).
    pub fn label(&self, dim: usize) -> String {
        if self.is_all(dim) {
            "all".to_string()
        } else {
            self.0.iter().map(Face::to_string).collect::<Vec<_>>().join(",")
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FacetClass {
    /// On exactly one face.
    Face,
    EdgeOrCorner,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFacet {
    pub node: usize,
    /// Every face containing the node.
    pub faces: Vec<Face>,
    /// Outward normals of `faces`, in the same order.
    pub normals: Vec<VecN>,
    /// Orthonormal tangent frame; empty for edge and corner nodes.
    pub tangent_frame: Vec<VecN>,
    pub class: FacetClass,
}

impl BoundaryFacet {
    fn new(node: usize, faces: Vec<Face>, dim: usize) -> Self {
        let normals = faces.iter().map(|f| f.outward_normal(dim)).collect();
        let (class, tangent_frame) = if faces.len() == 1 {
            (FacetClass::Face, faces[0].tangent_frame(dim))
        } else {
            (FacetClass::EdgeOrCorner, Vec::new())
        };
        Self {
            node,
            faces,
            normals,
            tangent_frame,
            class,
        }
    }

    /// The unique outward normal of a face-class facet.
    pub fn outward_normal(&self) -> Option<&VecN> {
        match self.class {
            FacetClass::Face => self.normals.first(),
            FacetClass::EdgeOrCorner => None,
        }
    }
}

/// `(Σ_x w_x |value(x)|^p)^{1/p}` from precomputed pointwise norms.
pub fn lp_norm(pointwise: &[f64], p: f64, weights: &[f64]) -> Result<f64> {
    check_exponent(p)?;
    if pointwise.len() != weights.len() {
        return Err(KornError::DimensionMismatch {
            expected: weights.len(),
            found: pointwise.len(),
        });
    }
    let sum: f64 = pointwise
        .iter()
        .zip(weights)
        .map(|(v, w)| w * v.abs().powf(p))
        .sum();
    Ok(sum.powf(1.0 / p))
}

pub fn check_exponent(p: f64) -> Result<()> {
    if p.is_finite() && p > 1.0 {
        Ok(())
    } else {
        Err(KornError::InvalidExponent(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoidal_weights_on_small_square() {
        let g = GridDomain::unit_cube(2, 3).unwrap();
        assert_eq!(g.node_count(), 9);
        let h: f64 = 0.5;
        assert_eq!(g.weights()[0], h * h / 4.0);
        assert_eq!(g.weights()[4], h * h);
        assert_eq!(g.weights()[1], h * h / 2.0);
    }

    #[test]
    fn weights_sum_to_volume() {
        let g = GridDomain::unit_cube(3, 5).unwrap();
        let sum: f64 = g.weights().iter().sum();
        assert!((sum - 1.0).abs() <= 1e-15);
        let g = GridDomain::new(2, &[2.0, 0.5], &[4, 7]).unwrap();
        let sum: f64 = g.weights().iter().sum();
        assert!((sum - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn rejects_bad_resolution() {
        assert!(matches!(
            GridDomain::new(2, &[1.0, 1.0], &[2, 3]),
            Err(KornError::InvalidGrid(_))
        ));
        assert!(GridDomain::new(1, &[1.0], &[4]).is_err());
        assert!(GridDomain::new(2, &[1.0, -1.0], &[4, 4]).is_err());
    }

    #[test]
    fn multi_index_roundtrip() {
        let g = GridDomain::new(3, &[1.0, 1.0, 1.0], &[3, 4, 5]).unwrap();
        for node in 0..g.node_count() {
            assert_eq!(g.node_at(&g.multi_index(node)), node);
        }
        assert_eq!(g.multi_index(1), vec![0, 0, 1]);
    }

    #[test]
    fn boundary_counts() {
        let sq = GridDomain::unit_cube(2, 3).unwrap().classify_boundary();
        assert_eq!(sq.len(), 8);
        assert_eq!(sq.iter().filter(|f| f.class == FacetClass::Face).count(), 4);
        assert!(sq.iter().all(|f| f.node != 4));

        let cube = GridDomain::unit_cube(3, 3).unwrap().classify_boundary();
        assert_eq!(cube.len(), 26);
        assert_eq!(cube.iter().filter(|f| f.class == FacetClass::Face).count(), 6);
    }

    #[test]
    fn face_frames_are_orthonormal() {
        let g = GridDomain::unit_cube(4, 3).unwrap();
        for facet in g.classify_boundary() {
            match facet.class {
                FacetClass::Face => {
                    let nu = facet.outward_normal().unwrap();
                    assert_eq!(facet.tangent_frame.len(), 3);
                    for (l, t) in facet.tangent_frame.iter().enumerate() {
                        assert_eq!(t.dot(nu), 0.0);
                        for (m, s) in facet.tangent_frame.iter().enumerate() {
                            assert_eq!(t.dot(s), if l == m { 1.0 } else { 0.0 });
                        }
                    }
                }
                FacetClass::EdgeOrCorner => assert!(facet.normals.len() >= 2),
            }
        }
    }

    #[test]
    fn outward_normals_point_out() {
        let g = GridDomain::unit_cube(2, 4).unwrap();
        let node = g.node_at(&[0, 1]);
        let facet = g.classify_boundary().into_iter().find(|f| f.node == node).unwrap();
        assert_eq!(facet.outward_normal().unwrap().as_slice(), &[-1.0, 0.0]);
    }

    #[test]
    fn face_quadrature_integrates_area() {
        let g = GridDomain::new(3, &[1.0, 2.0, 3.0], &[4, 5, 3]).unwrap();
        let area: f64 = g.face_quadrature(Face::upper(0)).iter().map(|(_, w)| w).sum();
        assert!((area - 6.0).abs() < 1e-14);
        let area: f64 = g.face_quadrature(Face::lower(2)).iter().map(|(_, w)| w).sum();
        assert!((area - 2.0).abs() < 1e-14);
    }

    #[test]
    fn face_labels() {
        assert_eq!("+x1".parse::<Face>().unwrap(), Face::upper(0));
        assert_eq!("−x2".parse::<Face>().unwrap(), Face::lower(1));
        assert_eq!(Face::lower(2).to_string(), "-x3");
        assert!("x1".parse::<Face>().is_err());
        assert!("+x0".parse::<Face>().is_err());
        let set = FaceSet::parse("+x1, -x2", 2).unwrap();
        assert_eq!(set.len(), 2);
        assert!(FaceSet::parse("+x3", 2).is_err());
        assert!(matches!(FaceSet::parse("", 2), Err(KornError::EmptyGamma)));
        assert_eq!(FaceSet::parse("all", 3).unwrap().label(3), "all");
    }

    #[test]
    fn lp_norm_examples() {
        let g = GridDomain::unit_cube(2, 5).unwrap();
        let ones = vec![1.0; g.node_count()];
        for p in [1.5, 2.0, 3.0, 7.0] {
            assert!((lp_norm(&ones, p, g.weights()).unwrap() - 1.0).abs() < 1e-14);
        }
        assert_eq!(lp_norm(&vec![0.0; g.node_count()], 2.0, g.weights()).unwrap(), 0.0);

        let mut spike = vec![0.0; g.node_count()];
        let center = g.node_at(&[2, 2]);
        let edge = g.node_at(&[0, 3]);
        spike[center] = 3.0;
        spike[edge] = -2.0;
        let expected = (0.0625 * 9.0 + 0.03125 * 4.0_f64).sqrt();
        assert!((lp_norm(&spike, 2.0, g.weights()).unwrap() - expected).abs() < 1e-15);

        assert!(matches!(lp_norm(&ones, 1.0, g.weights()), Err(KornError::InvalidExponent(_))));
        assert!(lp_norm(&ones, f64::INFINITY, g.weights()).is_err());
    }

    #[test]
    fn lp_norm_is_homogeneous() {
        let g = GridDomain::unit_cube(2, 6).unwrap();
        let vals: Vec<f64> = (0..g.node_count()).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let base = lp_norm(&vals, 2.5, g.weights()).unwrap();
        for c in [-3.0, 0.1, 10.0] {
            let scaled: Vec<f64> = vals.iter().map(|v| c * v).collect();
            let got = lp_norm(&scaled, 2.5, g.weights()).unwrap();
            assert!((got - c.abs() * base).abs() <= 1e-13 * base.abs() * c.abs());
        }
    }
}
