//! Dimension-generic vectors, matrices and skew-symmetric matrices, together
//! with the generalized cross products `a ⨯ b ∈ so(n)` and
//! `P ⨯ b ∈ so(n) × R^n`.
//!
//! All indices are zero-based. A skew-symmetric matrix is stored packed: the
//! entries `A[i][j]` with `i < j` in lexicographic `(i, j)` order.
//! A third-order cross value `T` is stored as `n` packed blocks, block `k`
//! holding `T[i][j][k]` for `i < j`.

use crate::error::{KornError, Result};

/// Number of packed components of `so(n)`.
pub fn so_dim(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Packed slot of the pair `(i, j)` with `i < j`.
#[inline]
pub fn pack_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// Iterates the `(i, j)` pairs with `i < j` in packed order.
pub fn packed_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(KornError::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// A vector in `R^n`, `n >= 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct VecN(Vec<f64>);

impl VecN {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.len() < 2 {
            return Err(KornError::InvalidGrid(format!(
                "vector dimension must be at least 2, got {}",
                entries.len()
            )));
        }
        Ok(Self(entries))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    /// Unit vector `e_axis`.
    pub fn basis(n: usize, axis: usize) -> Self {
        let mut v = vec![0.0; n];
        v[axis] = 1.0;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &VecN) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scaled(&self, c: f64) -> VecN {
        Self(self.0.iter().map(|x| c * x).collect())
    }
}

impl std::ops::Index<usize> for VecN {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// A square `n × n` matrix, row-major (`P[i][j]`, `i` = row).
#[derive(Debug, Clone, PartialEq)]
pub struct MatN {
    dim: usize,
    entries: Vec<f64>,
}

impl MatN {
    pub fn zeros(n: usize) -> Self {
        Self {
            dim: n,
            entries: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(f(i, j));
            }
        }
        Self { dim: n, entries }
    }

    pub fn from_row_major(n: usize, entries: Vec<f64>) -> Result<Self> {
        check_dim(n * n, entries.len())?;
        Ok(Self { dim: n, entries })
    }

    /// Dyadic product `a ⊗ b`.
    pub fn dyad(a: &VecN, b: &VecN) -> Result<Self> {
        check_dim(a.dim(), b.dim())?;
        Ok(Self::from_fn(a.dim(), |i, j| a[i] * b[j]))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.entries[i * self.dim + j] = value;
    }

    /// Row `k`, i.e. `P^T e_k`.
    pub fn row(&self, k: usize) -> VecN {
        VecN(self.entries[k * self.dim..(k + 1) * self.dim].to_vec())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i))
    }

    pub fn sym(&self) -> Self {
        Self::from_fn(self.dim, |i, j| 0.5 * (self.get(i, j) + self.get(j, i)))
    }

    pub fn skew(&self) -> Self {
        Self::from_fn(self.dim, |i, j| 0.5 * (self.get(i, j) - self.get(j, i)))
    }

    pub fn mul_vec(&self, b: &VecN) -> Result<VecN> {
        check_dim(self.dim, b.dim())?;
        Ok(VecN(
            (0..self.dim)
                .map(|i| (0..self.dim).map(|j| self.get(i, j) * b[j]).sum())
                .collect(),
        ))
    }

    pub fn frobenius_inner(&self, other: &MatN) -> f64 {
        self.entries.iter().zip(&other.entries).map(|(a, b)| a * b).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_inner(self).sqrt()
    }

    pub fn scaled(&self, c: f64) -> MatN {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|x| c * x).collect(),
        }
    }

    pub fn sub(&self, other: &MatN) -> MatN {
        Self {
            dim: self.dim,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn add(&self, other: &MatN) -> MatN {
        Self {
            dim: self.dim,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect(),
        }
    }
}

/// An element of `so(n)` in packed storage.
#[derive(Debug, Clone, PartialEq)]
pub struct PackedSkew {
    dim: usize,
    packed: Vec<f64>,
}

impl PackedSkew {
    pub fn zeros(n: usize) -> Self {
        Self {
            dim: n,
            packed: vec![0.0; so_dim(n)],
        }
    }

    pub fn from_packed(n: usize, packed: Vec<f64>) -> Result<Self> {
        check_dim(so_dim(n), packed.len())?;
        Ok(Self { dim: n, packed })
    }

    /// Packs the strict upper triangle of `m`; the lower triangle is ignored.
    pub fn pack(m: &MatN) -> Self {
        let n = m.dim();
        Self {
            dim: n,
            packed: packed_pairs(n).map(|(i, j)| m.get(i, j)).collect(),
        }
    }

    /// The packed skew part of `m`.
    pub fn skew_of(m: &MatN) -> Self {
        let n = m.dim();
        Self {
            dim: n,
            packed: packed_pairs(n)
                .map(|(i, j)| 0.5 * (m.get(i, j) - m.get(j, i)))
                .collect(),
        }
    }

    pub fn unpack(&self) -> MatN {
        MatN::from_fn(self.dim, |i, j| self.get(i, j))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn packed(&self) -> &[f64] {
        &self.packed
    }

    /// Entry `A[i][j]` for any `i, j`.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        use std::cmp::Ordering::*;
        match i.cmp(&j) {
            Less => self.packed[pack_index(self.dim, i, j)],
            Greater => -self.packed[pack_index(self.dim, j, i)],
            Equal => 0.0,
        }
    }

    /// Frobenius norm of the full (unpacked) matrix.
    pub fn frobenius_norm(&self) -> f64 {
        (2.0 * self.packed.iter().map(|x| x * x).sum::<f64>()).sqrt()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            dim: self.dim,
            packed: self.packed.iter().map(|x| c * x).collect(),
        }
    }

    /// Row `k` of the unpacked matrix.
    pub fn row(&self, k: usize) -> VecN {
        VecN((0..self.dim).map(|j| self.get(k, j)).collect())
    }
}

/// A value in `so(n) × R^n`: `n` packed skew blocks, block `k` holding the
/// `(i, j)` part `T[i][j][k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThirdOrderCross {
    dim: usize,
    blocks: Vec<PackedSkew>,
}

impl ThirdOrderCross {
    pub fn zeros(n: usize) -> Self {
        Self {
            dim: n,
            blocks: vec![PackedSkew::zeros(n); n],
        }
    }

    pub fn from_blocks(blocks: Vec<PackedSkew>) -> Result<Self> {
        let n = blocks.len();
        for b in &blocks {
            check_dim(n, b.dim())?;
        }
        Ok(Self { dim: n, blocks })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[PackedSkew] {
        &self.blocks
    }

    pub fn block(&self, k: usize) -> &PackedSkew {
        &self.blocks[k]
    }

    /// `T[i][j][k]`.
    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.blocks[k].get(i, j)
    }

    /// Frobenius norm over all `n³` entries.
    pub fn frobenius_norm(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.frobenius_norm().powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// `a ⨯ b = a ⊗ b − b ⊗ a`.
pub fn generalized_cross(a: &VecN, b: &VecN) -> Result<PackedSkew> {
    check_dim(a.dim(), b.dim())?;
    let n = a.dim();
    Ok(PackedSkew {
        dim: n,
        packed: packed_pairs(n).map(|(i, j)| a[i] * b[j] - a[j] * b[i]).collect(),
    })
}

/// The axial vector of `A ∈ so(3)`, fixed by `A b = axl(A) × b`.
pub fn axl(a: &PackedSkew) -> Result<VecN> {
    if a.dim() != 3 {
        return Err(KornError::RequiresDim3(a.dim()));
    }
    Ok(VecN(vec![a.get(2, 1), a.get(0, 2), a.get(1, 0)]))
}

/// Classical cross product recovered as `−axl(a ⨯ b)`.
pub fn axl_cross_compat(a: &VecN, b: &VecN) -> Result<VecN> {
    if a.dim() != 3 {
        return Err(KornError::RequiresDim3(a.dim()));
    }
    Ok(axl(&generalized_cross(a, b)?)?.scaled(-1.0))
}

/// Row-wise cross product `(P ⨯ b)[i][j][k] = P[k][i] b[j] − P[k][j] b[i]`.
pub fn matrix_cross(p: &MatN, b: &VecN) -> Result<ThirdOrderCross> {
    check_dim(p.dim(), b.dim())?;
    let blocks = (0..p.dim())
        .map(|k| generalized_cross(&p.row(k), b))
        .collect::<Result<Vec<_>>>()?;
    Ok(ThirdOrderCross {
        dim: p.dim(),
        blocks,
    })
}

/// `T[k][i][j] − T[k][j][i] + T[j][i][k]`. For `T = A ⨯ b` with skew `A`
/// this equals `2 A[i][j] b[k]`.
pub fn crucial_combination(t: &ThirdOrderCross, i: usize, j: usize, k: usize) -> Result<f64> {
    let n = t.dim();
    for index in [i, j, k] {
        if index >= n {
            return Err(KornError::IndexOutOfRange { index, dim: n });
        }
    }
    Ok(t.get(k, i, j) - t.get(k, j, i) + t.get(j, i, k))
}

/// Inverts `A ↦ A ⨯ b` on `so(n)`, pivoting on the largest `|b_k|`.
pub fn recover_skew(t: &ThirdOrderCross, b: &VecN) -> Result<PackedSkew> {
    check_dim(t.dim(), b.dim())?;
    let n = b.dim();
    let (pivot, bk) = b
        .as_slice()
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0_f64), |best, (k, v)| if v.abs() > best.1.abs() { (k, v) } else { best });
    if bk == 0.0 {
        return Err(KornError::Degenerate("recover_skew needs a non-zero vector b".into()));
    }
    let packed = packed_pairs(n)
        .map(|(i, j)| crucial_combination(t, i, j, pivot).map(|c| c / (2.0 * bk)))
        .collect::<Result<Vec<_>>>()?;
    Ok(PackedSkew { dim: n, packed })
}

/// `‖a ⨯ b‖ ≤ tol ‖a‖ ‖b‖`; zero vectors count as parallel.
pub fn is_parallel(a: &VecN, b: &VecN, tol: f64) -> bool {
    assert_eq!(a.dim(), b.dim(), "is_parallel: dimension mismatch");
    let cross = generalized_cross(a, b).expect("dimensions checked");
    cross.frobenius_norm() <= tol * a.norm() * b.norm()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankVerdict {
    /// Every row is parallel to the normal, which forces a skew matrix to vanish.
    Zero,
    NonzeroViolation,
}

/// Checks the rows of a skew matrix against a normal: if all rows are
/// parallel to `nu` the matrix has rank at most one, and being skew its rank
/// is even, so it is zero.
pub fn skew_rank_bound(a: &PackedSkew, nu: &VecN, tol: f64) -> Result<RankVerdict> {
    check_dim(a.dim(), nu.dim())?;
    if nu.norm() == 0.0 {
        return Err(KornError::Degenerate("skew_rank_bound needs a non-zero normal".into()));
    }
    let all_parallel = (0..a.dim()).all(|k| is_parallel(&a.row(k), nu, tol));
    Ok(if all_parallel {
        RankVerdict::Zero
    } else {
        RankVerdict::NonzeroViolation
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(x: &[f64]) -> VecN {
        VecN::new(x.to_vec()).unwrap()
    }

    #[test]
    fn packing_layout() {
        let n = 4;
        let pairs: Vec<_> = packed_pairs(n).collect();
        assert_eq!(pairs, vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        for (slot, (i, j)) in pairs.into_iter().enumerate() {
            assert_eq!(pack_index(n, i, j), slot);
        }
    }

    #[test]
    fn cross_of_unit_vectors() {
        let c = generalized_cross(&VecN::basis(3, 0), &VecN::basis(3, 1)).unwrap();
        let m = c.unpack();
        assert_eq!(m.get(0, 1), 1.0);
        assert_eq!(m.get(1, 0), -1.0);
        assert_eq!(m.frobenius_norm(), 2f64.sqrt());
    }

    #[test]
    fn cross_with_itself_vanishes() {
        let a = v(&[0.3, -1.2, 4.0, 2.5]);
        assert!(generalized_cross(&a, &a).unwrap().packed().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn cross_matches_twice_skew_of_dyad() {
        // Dyadic rationals keep both routes exact.
        let a = v(&[0.5, -1.25, 3.0, 0.125, 2.0]);
        let b = v(&[1.5, 0.75, -2.0, 4.0, -0.5]);
        let direct = generalized_cross(&a, &b).unwrap().unpack();
        let dyad = MatN::dyad(&a, &b).unwrap().skew();
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(direct.get(i, j), 2.0 * dyad.get(i, j));
            }
        }
    }

    #[test]
    fn cross_dimension_mismatch() {
        let err = generalized_cross(&v(&[1.0, 0.0]), &v(&[1.0, 0.0, 0.0])).unwrap_err();
        assert!(matches!(err, KornError::DimensionMismatch { .. }));
    }

    #[test]
    fn classical_cross_from_axl() {
        let e = |i| VecN::basis(3, i);
        assert_eq!(axl_cross_compat(&e(0), &e(1)).unwrap(), e(2));
        assert_eq!(axl_cross_compat(&e(1), &e(0)).unwrap(), e(2).scaled(-1.0));
        assert!(matches!(
            axl_cross_compat(&VecN::basis(4, 0), &VecN::basis(4, 1)),
            Err(KornError::RequiresDim3(4))
        ));
    }

    #[test]
    fn axl_satisfies_defining_relation() {
        let a = PackedSkew::from_packed(3, vec![0.7, -1.1, 2.3]).unwrap();
        let w = axl(&a).unwrap();
        let b = v(&[0.4, 1.9, -0.6]);
        let lhs = a.unpack().mul_vec(&b).unwrap();
        let rhs = [
            w[1] * b[2] - w[2] * b[1],
            w[2] * b[0] - w[0] * b[2],
            w[0] * b[1] - w[1] * b[0],
        ];
        for i in 0..3 {
            assert!((lhs[i] - rhs[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn matrix_cross_identity_two_dims() {
        let t = matrix_cross(&MatN::identity(2), &VecN::basis(2, 0)).unwrap();
        // P[k][i] b[j] − P[k][j] b[i] with P = id, b = e1.
        assert_eq!(t.block(0).packed(), &[0.0]);
        assert_eq!(t.block(1).packed(), &[-1.0]);
    }

    #[test]
    fn matrix_cross_degenerate_inputs() {
        let p = MatN::from_fn(3, |i, j| (i * 3 + j) as f64 - 4.0);
        let zero = matrix_cross(&p, &VecN::zeros(3)).unwrap();
        assert_eq!(zero.frobenius_norm(), 0.0);
        let b = v(&[1.0, -2.0, 0.5]);
        let parallel = matrix_cross(&MatN::dyad(&b, &b).unwrap(), &b).unwrap();
        assert_eq!(parallel.frobenius_norm(), 0.0);
    }

    #[test]
    fn crucial_combination_examples() {
        let a = PackedSkew::from_packed(3, vec![0.8, -0.3, 1.7]).unwrap();
        let t = matrix_cross(&a.unpack(), &VecN::basis(3, 2)).unwrap();
        assert!((crucial_combination(&t, 0, 1, 2).unwrap() - 2.0 * 0.8).abs() < 1e-15);
        for i in 0..3 {
            assert_eq!(crucial_combination(&t, i, i, 1).unwrap(), 0.0);
        }
        let zero = matrix_cross(&MatN::zeros(3), &v(&[1.0, 2.0, 3.0])).unwrap();
        assert_eq!(crucial_combination(&zero, 2, 0, 1).unwrap(), 0.0);
        assert!(matches!(
            crucial_combination(&t, 0, 3, 1),
            Err(KornError::IndexOutOfRange { index: 3, dim: 3 })
        ));
    }

    #[test]
    fn recover_skew_trivial_cases() {
        let b = VecN::basis(4, 0);
        let zero = ThirdOrderCross::zeros(4);
        assert_eq!(recover_skew(&zero, &b).unwrap(), PackedSkew::zeros(4));
        assert!(matches!(
            recover_skew(&zero, &VecN::zeros(4)),
            Err(KornError::Degenerate(_))
        ));
    }

    #[test]
    fn parallel_checks() {
        let a = v(&[1.0, -2.0, 0.5]);
        assert!(is_parallel(&a, &a.scaled(2.0), 1e-12));
        assert!(!is_parallel(&VecN::basis(3, 0), &VecN::basis(3, 1), 1e-12));
        assert!(is_parallel(&VecN::zeros(3), &a, 1e-12));
        let noisy = v(&[1.0 * (1.0 + 1e-14), -2.0, 0.5 * (1.0 - 1e-14)]);
        assert!(is_parallel(&a, &noisy, 1e-12));
    }

    #[test]
    fn rank_bound_verdicts() {
        let nu = VecN::basis(3, 2);
        assert_eq!(skew_rank_bound(&PackedSkew::zeros(3), &nu, 1e-12).unwrap(), RankVerdict::Zero);
        let e12 = PackedSkew::from_packed(3, vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(
            skew_rank_bound(&e12, &nu, 1e-12).unwrap(),
            RankVerdict::NonzeroViolation
        );
        assert!(skew_rank_bound(&e12, &VecN::zeros(3), 1e-12).is_err());
        // Forcing rows a_k ν into skew shape: skew(a ⊗ ν) has rows parallel to ν
        // only if it vanishes.
        let a = v(&[0.3, 1.0, -2.0]);
        let forced = PackedSkew::skew_of(&MatN::dyad(&a, &nu).unwrap());
        assert_eq!(
            skew_rank_bound(&forced, &nu, 1e-12).unwrap(),
            RankVerdict::NonzeroViolation
        );
    }

    fn vec_strategy(n: usize) -> impl Strategy<Value = VecN> {
        prop::collection::vec(-1.0..1.0f64, n).prop_map(|x| VecN::new(x).unwrap())
    }

    fn skew_strategy(n: usize) -> impl Strategy<Value = PackedSkew> {
        prop::collection::vec(-1.0..1.0f64, so_dim(n))
            .prop_map(move |x| PackedSkew::from_packed(n, x).unwrap())
    }

    proptest! {
        #[test]
        fn cross_is_antisymmetric((a, b) in (2usize..7).prop_flat_map(|n| (vec_strategy(n), vec_strategy(n)))) {
            let ab = generalized_cross(&a, &b).unwrap();
            let ba = generalized_cross(&b, &a).unwrap();
            for (x, y) in ab.packed().iter().zip(ba.packed()) {
                prop_assert_eq!(*x, -*y);
            }
        }

        #[test]
        fn pack_unpack_roundtrip(a in (2usize..7).prop_flat_map(skew_strategy)) {
            let m = a.unpack();
            for i in 0..a.dim() {
                prop_assert_eq!(m.get(i, i), 0.0);
                for j in 0..a.dim() {
                    prop_assert_eq!(m.get(i, j), -m.get(j, i));
                }
            }
            prop_assert_eq!(PackedSkew::pack(&m), a);
        }

        #[test]
        fn crucial_relation_holds((a, b) in (2usize..7).prop_flat_map(|n| (skew_strategy(n), vec_strategy(n)))) {
            let n = a.dim();
            let t = matrix_cross(&a.unpack(), &b).unwrap();
            for i in 0..n { for j in 0..n { for k in 0..n {
                let lhs = crucial_combination(&t, i, j, k).unwrap();
                prop_assert!((lhs - 2.0 * a.get(i, j) * b[k]).abs() <= 8.0 * f64::EPSILON);
            }}}
        }

        #[test]
        fn recover_inverts_matrix_cross((a, b) in (2usize..7).prop_flat_map(|n| (skew_strategy(n), vec_strategy(n)))) {
            prop_assume!(b.norm() > 1e-3);
            let t = matrix_cross(&a.unpack(), &b).unwrap();
            let back = recover_skew(&t, &b).unwrap();
            let scale = a.frobenius_norm().max(1e-300);
            let err = back.packed().iter().zip(a.packed()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            prop_assert!(err <= 1e-12 * scale.max(1.0));
        }

        #[test]
        fn sym_skew_split_is_orthogonal(x in (2usize..7).prop_flat_map(|n| prop::collection::vec(-1.0..1.0f64, n * n).prop_map(move |e| MatN::from_row_major(n, e).unwrap()))) {
            let s = x.sym();
            let k = x.skew();
            prop_assert!(s.add(&k).as_slice().iter().zip(x.as_slice()).all(|(a, b)| (a - b).abs() <= 2.0 * f64::EPSILON));
            let lhs = s.frobenius_norm().powi(2) + k.frobenius_norm().powi(2);
            prop_assert!((lhs - x.frobenius_norm().powi(2)).abs() <= 1e-14 * (1.0 + lhs));
        }

        #[test]
        fn three_dim_compat(a in vec_strategy(3), b in vec_strategy(3)) {
            let c = axl_cross_compat(&a, &b).unwrap();
            let classical = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
            for i in 0..3 {
                prop_assert!((c[i] - classical[i]).abs() <= 1e-15);
            }
        }
    }
}
