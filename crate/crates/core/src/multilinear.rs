//! Ordered monomial bases for the graded slots Λ^j V* ⊗ S^k V* ⊗ W and the
//! explicit matrices of the formal differential ∂ and its φ-twisted
//! extension ∂_φ.
//!
//! Conventions, pinned once so that every serialized matrix is reproducible:
//!
//! * symmetric multi-indices of a fixed degree are enumerated in descending
//!   lexicographic order — for n = 2, degree 2: (2,0), (1,1), (0,2);
//! * exterior index subsets are enumerated in ascending lexicographic order;
//! * a slot's flat basis index is exterior-major, then symmetric, then the
//!   W component: `(ext · sym_count + sym) · m + w`;
//! * contraction in direction d acts as the formal partial derivative on
//!   polynomial coefficients: the coefficient at multi-index α moves to
//!   α − e_d with multiplier α_d (so the contraction of x² in its only
//!   direction has matrix [[2]]);
//! * the differential carries the sign (−1)^j on Λ^j, and wedging dx_d into
//!   an ascending exterior monomial contributes (−1)^{#{s ∈ S : s > d}}.

use crate::exactla::{rat, Rational, RationalMatrix, Subspace};
use num::Zero;
use std::collections::BTreeMap;
use thiserror::Error;

/// Errors produced by the graded-slot layer.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum MultilinearError {
    /// Contraction or ∂ applied below symmetric degree 1.
    #[error("operation needs symmetric degree >= 1, got {k}")]
    SymmetricDegreeTooLow { k: i64 },
    /// ∂ applied at the top of the exterior ladder.
    #[error("formal differential leaves the complex: exterior degree {j} with n = {n}")]
    ExteriorDegreeTooHigh { j: usize, n: usize },
    /// Contraction direction outside 0..n.
    #[error("direction {direction} out of range for n = {n}")]
    DirectionOutOfRange { direction: usize, n: usize },
    /// A symbol-map matrix whose row count is not n·m.
    #[error("symbol-map matrix has {got} rows, expected n*m = {expected}")]
    SymbolRows { expected: usize, got: usize },
}

/// The graded slot Λ^j V* ⊗ S^k V* ⊗ W with dim V = n, dim W = m.
///
/// A negative symmetric degree denotes the zero space.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct GradedSlot {
    pub n: usize,
    pub m: usize,
    pub j: usize,
    pub k: i64,
}

impl GradedSlot {
    /// Slot constructor.
    pub fn new(n: usize, m: usize, j: usize, k: i64) -> Self {
        Self { n, m, j, k }
    }

    /// Total dimension C(n,j) · C(n+k−1,k) · m, zero for k < 0 or j > n.
    pub fn dim(&self) -> usize {
        slot_dim(self)
    }

    /// Number of symmetric monomials of degree k.
    pub fn sym_count(&self) -> usize {
        if self.k < 0 {
            0
        } else {
            sym_dim(self.n, self.k as usize)
        }
    }

    /// Number of exterior monomials of degree j.
    pub fn ext_count(&self) -> usize {
        binomial(self.n, self.j)
    }
}

/// One basis monomial of a graded slot.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MonomialIndex {
    /// Strictly increasing exterior index subset (0-based directions).
    pub exterior: Vec<usize>,
    /// Symmetric multi-index with |alpha| = k.
    pub alpha: Vec<u32>,
    /// W component, 0-based.
    pub w: usize,
}

/// Binomial coefficient C(n, k); zero when k > n.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Dimension of S^k V* for dim V = n: C(n+k−1, k).
pub fn sym_dim(n: usize, k: usize) -> usize {
    if n == 0 {
        return usize::from(k == 0);
    }
    binomial(n + k - 1, k)
}

/// Dimension of a graded slot (zero for negative symmetric degree).
pub fn slot_dim(s: &GradedSlot) -> usize {
    if s.k < 0 {
        return 0;
    }
    binomial(s.n, s.j) * sym_dim(s.n, s.k as usize) * s.m
}

/// All multi-indices of length n with |alpha| = k, in descending
/// lexicographic order.
pub fn multi_indices(n: usize, k: usize) -> Vec<Vec<u32>> {
    if n == 0 {
        return if k == 0 { vec![Vec::new()] } else { Vec::new() };
    }
    let mut out = Vec::with_capacity(sym_dim(n, k));
    let mut current = vec![0u32; n];
    fill_multi_indices(&mut out, &mut current, 0, k);
    out
}

fn fill_multi_indices(out: &mut Vec<Vec<u32>>, current: &mut Vec<u32>, pos: usize, remaining: usize) {
    if pos == current.len() - 1 {
        current[pos] = remaining as u32;
        out.push(current.clone());
        return;
    }
    for first in (0..=remaining).rev() {
        current[pos] = first as u32;
        fill_multi_indices(out, current, pos + 1, remaining - first);
    }
}

/// All strictly increasing index subsets of {0..n−1} of size j, in
/// ascending lexicographic order.
pub fn exterior_subsets(n: usize, j: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(binomial(n, j));
    let mut current = Vec::with_capacity(j);
    fill_subsets(&mut out, &mut current, 0, n, j);
    out
}

fn fill_subsets(out: &mut Vec<Vec<usize>>, current: &mut Vec<usize>, start: usize, n: usize, j: usize) {
    if current.len() == j {
        out.push(current.clone());
        return;
    }
    let needed = j - current.len();
    for i in start..n {
        if n - i < needed {
            break;
        }
        current.push(i);
        fill_subsets(out, current, i + 1, n, j);
        current.pop();
    }
}

/// The full ordered monomial basis of a slot; its length equals `slot_dim`.
pub fn monomial_basis(slot: &GradedSlot) -> Vec<MonomialIndex> {
    if slot.k < 0 {
        return Vec::new();
    }
    let ext = exterior_subsets(slot.n, slot.j);
    let sym = multi_indices(slot.n, slot.k as usize);
    let mut out = Vec::with_capacity(slot.dim());
    for e in &ext {
        for a in &sym {
            for w in 0..slot.m {
                out.push(MonomialIndex {
                    exterior: e.clone(),
                    alpha: a.clone(),
                    w,
                });
            }
        }
    }
    out
}

/// Matrix of the contraction S^k V* ⊗ W → S^{k−1} V* ⊗ W in one coordinate
/// direction (0-based): the formal partial derivative on coefficients.
pub fn contraction(
    n: usize,
    m: usize,
    k: usize,
    direction: usize,
) -> Result<RationalMatrix, MultilinearError> {
    if k < 1 {
        return Err(MultilinearError::SymmetricDegreeTooLow { k: k as i64 });
    }
    if direction >= n {
        return Err(MultilinearError::DirectionOutOfRange { direction, n });
    }
    let source = multi_indices(n, k);
    let target_pos = position_map(multi_indices(n, k - 1));
    let mut out = RationalMatrix::zeros(target_pos.len() * m, source.len() * m);
    for (si, alpha) in source.iter().enumerate() {
        if alpha[direction] == 0 {
            continue;
        }
        let mut beta = alpha.clone();
        beta[direction] -= 1;
        let ti = target_pos[&beta];
        let mult = rat(i64::from(alpha[direction]));
        for w in 0..m {
            out.set(ti * m + w, si * m + w, mult.clone());
        }
    }
    Ok(out)
}

/// Matrix of the formal differential
/// ∂: Λ^j V* ⊗ S^k V* ⊗ W → Λ^{j+1} V* ⊗ S^{k−1} V* ⊗ W,
/// sending ω⊗T to (−1)^j ω ∧ ∂T in the canonical bases.
pub fn partial_matrix(slot: &GradedSlot) -> Result<RationalMatrix, MultilinearError> {
    let (n, m, j) = (slot.n, slot.m, slot.j);
    if slot.k < 1 {
        return Err(MultilinearError::SymmetricDegreeTooLow { k: slot.k });
    }
    if j >= n {
        return Err(MultilinearError::ExteriorDegreeTooHigh { j, n });
    }
    let k = slot.k as usize;
    let src_ext = exterior_subsets(n, j);
    let src_sym = multi_indices(n, k);
    let dst_ext_pos = position_map(exterior_subsets(n, j + 1));
    let dst_sym_pos = position_map(multi_indices(n, k - 1));
    let dst_sym_count = dst_sym_pos.len();
    let rows = dst_ext_pos.len() * dst_sym_count * m;
    let cols = src_ext.len() * src_sym.len() * m;
    let mut out = RationalMatrix::zeros(rows, cols);
    for (ei, subset) in src_ext.iter().enumerate() {
        for (si, alpha) in src_sym.iter().enumerate() {
            for d in 0..n {
                if alpha[d] == 0 || subset.contains(&d) {
                    continue;
                }
                let mut beta = alpha.clone();
                beta[d] -= 1;
                let mut wedge = subset.clone();
                wedge.push(d);
                wedge.sort_unstable();
                let swaps = subset.iter().filter(|&&s| s > d).count();
                let negative = (j + swaps) % 2 == 1;
                let mut coeff = rat(i64::from(alpha[d]));
                if negative {
                    coeff = -coeff;
                }
                let de = dst_ext_pos[&wedge];
                let ds = dst_sym_pos[&beta];
                for w in 0..m {
                    let row = (de * dst_sym_count + ds) * m + w;
                    let col = (ei * src_sym.len() + si) * m + w;
                    out.set(row, col, coeff.clone());
                }
            }
        }
    }
    Ok(out)
}

/// Matrix of the φ-twisted differential
/// ∂_φ: Λ^j V* ⊗ g → Λ^{j+1} V* ⊗ W, sending ω⊗T to (−1)^j ω ∧ φ(T).
///
/// `phi` maps abstract g-coordinates (its columns) to V*⊗W with the
/// direction-major row layout `dir · m + w`.  The domain basis is
/// exterior-major: column index `ext · dim(g) + r`.  Total in j: at the top
/// of the ladder the result has zero rows.
pub fn phi_partial_matrix(
    n: usize,
    m: usize,
    j: usize,
    phi: &RationalMatrix,
) -> Result<RationalMatrix, MultilinearError> {
    if phi.rows() != n * m {
        return Err(MultilinearError::SymbolRows {
            expected: n * m,
            got: phi.rows(),
        });
    }
    let d_g = phi.cols();
    let src_ext = exterior_subsets(n, j);
    let dst_ext_pos = position_map(exterior_subsets(n, j + 1));
    let rows = dst_ext_pos.len() * m;
    let cols = src_ext.len() * d_g;
    let mut out = RationalMatrix::zeros(rows, cols);
    for (ei, subset) in src_ext.iter().enumerate() {
        for r in 0..d_g {
            for dir in 0..n {
                if subset.contains(&dir) {
                    continue;
                }
                let mut wedge = subset.clone();
                wedge.push(dir);
                wedge.sort_unstable();
                let swaps = subset.iter().filter(|&&s| s > dir).count();
                let negative = (j + swaps) % 2 == 1;
                let de = dst_ext_pos[&wedge];
                for w in 0..m {
                    let v = phi.entry(dir * m + w, r);
                    if v.is_zero() {
                        continue;
                    }
                    let signed = if negative { -v.clone() } else { v.clone() };
                    out.set(de * m + w, ei * d_g + r, signed);
                }
            }
        }
    }
    Ok(out)
}

/// The subspace Λ^j V* ⊗ s inside Λ^j V* ⊗ ℚ^D for s ⊂ ℚ^D: one block copy
/// of s per exterior monomial (block layout `ext · D + c`).
pub fn wedge_tensor_subspace(n: usize, j: usize, s: &Subspace) -> Subspace {
    let blocks = binomial(n, j);
    let width = s.ambient_dim();
    let ambient = blocks * width;
    let mut generators = Vec::with_capacity(blocks * s.dim());
    for b in 0..blocks {
        for r in 0..s.dim() {
            let mut v = vec![Rational::zero(); ambient];
            for (c, value) in s.basis_row(r).iter().enumerate() {
                if !value.is_zero() {
                    v[b * width + c] = value.clone();
                }
            }
            generators.push(v);
        }
    }
    Subspace::from_generators(ambient, generators)
        .expect("generator lengths match the ambient dimension by construction")
}

fn position_map<T: Ord>(items: Vec<T>) -> BTreeMap<T, usize> {
    items.into_iter().enumerate().map(|(i, x)| (x, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactla::ratio;
    use num::One;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn slot_dims_match_binomial_formulas() {
        assert_eq!(GradedSlot::new(2, 1, 0, 2).dim(), 3);
        assert_eq!(GradedSlot::new(3, 2, 1, 1).dim(), 18);
        assert_eq!(GradedSlot::new(2, 1, 0, -1).dim(), 0);
        assert_eq!(GradedSlot::new(3, 1, 4, 2).dim(), 0);
    }

    #[test]
    fn enumeration_orders_are_pinned() {
        assert_eq!(
            multi_indices(2, 2),
            vec![vec![2, 0], vec![1, 1], vec![0, 2]]
        );
        assert_eq!(
            exterior_subsets(3, 2),
            vec![vec![0, 1], vec![0, 2], vec![1, 2]]
        );
        assert_eq!(multi_indices(0, 0), vec![Vec::<u32>::new()]);
        assert!(multi_indices(0, 1).is_empty());
    }

    #[test]
    fn monomial_basis_length_matches_slot_dim() {
        for n in 1..=4usize {
            for m in 1..=2usize {
                for j in 0..=n {
                    for k in 0..=4i64 {
                        let slot = GradedSlot::new(n, m, j, k);
                        assert_eq!(
                            monomial_basis(&slot).len(),
                            slot.dim(),
                            "slot {slot:?}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn contraction_is_the_formal_derivative() {
        // d/dx of x² has coefficient 2 in the coefficient convention.
        let c = contraction(1, 1, 2, 0).unwrap();
        assert_eq!(c, RationalMatrix::from_i64(&[&[2]]));
        // On S¹ (n = 2) the two directions pick out the two coordinates.
        let c0 = contraction(2, 1, 1, 0).unwrap();
        assert_eq!(c0, RationalMatrix::from_i64(&[&[1, 0]]));
        let c1 = contraction(2, 1, 1, 1).unwrap();
        assert_eq!(c1, RationalMatrix::from_i64(&[&[0, 1]]));
        assert!(contraction(2, 1, 0, 0).is_err());
        assert!(contraction(2, 1, 1, 2).is_err());
    }

    #[test]
    fn contractions_commute_on_symmetric_forms() {
        for n in 1..=3usize {
            for m in 1..=2usize {
                for k in 2..=4usize {
                    for i in 0..n {
                        for j in 0..n {
                            let ci_first = contraction(n, m, k - 1, j)
                                .unwrap()
                                .mul(&contraction(n, m, k, i).unwrap())
                                .unwrap();
                            let cj_first = contraction(n, m, k - 1, i)
                                .unwrap()
                                .mul(&contraction(n, m, k, j).unwrap())
                                .unwrap();
                            assert_eq!(ci_first, cj_first, "n={n} m={m} k={k} i={i} j={j}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn partial_squares_to_zero() {
        for n in 1..=4usize {
            for m in 1..=2usize {
                for k in 2..=4i64 {
                    for j in 0..n.saturating_sub(1) {
                        let first = partial_matrix(&GradedSlot::new(n, m, j, k)).unwrap();
                        let second =
                            partial_matrix(&GradedSlot::new(n, m, j + 1, k - 1)).unwrap();
                        let square = second.mul(&first).unwrap();
                        assert!(square.is_zero(), "n={n} m={m} j={j} k={k}");
                    }
                }
            }
        }
    }

    #[test]
    fn partial_on_first_symmetric_degree_is_injective() {
        // ∂: S¹V*⊗W → Λ¹V*⊗W only relabels the basis (up to sign).
        let p = partial_matrix(&GradedSlot::new(2, 1, 0, 1)).unwrap();
        assert_eq!(p.rank(), 2);
        assert_eq!((p.rows(), p.cols()), (2, 2));
    }

    #[test]
    fn classical_complex_is_exact_for_two_variables() {
        // 0 → S²V* → V*⊗S¹V* → Λ²V*⊗S⁰V* → 0 with n = 2, m = 1:
        // dimensions 3, 4, 1 with ranks 3 and 1 — exact everywhere.
        let d0 = partial_matrix(&GradedSlot::new(2, 1, 0, 2)).unwrap();
        let d1 = partial_matrix(&GradedSlot::new(2, 1, 1, 1)).unwrap();
        assert_eq!(d0.rank(), 3);
        assert_eq!(d1.rank(), 1);
        assert_eq!(d1.kernel(), d0.column_space());
    }

    #[test]
    fn phi_partial_with_zero_symbol_is_zero() {
        let phi = RationalMatrix::zeros(6, 4);
        let m = phi_partial_matrix(3, 2, 1, &phi).unwrap();
        assert!(m.is_zero());
        assert_eq!((m.rows(), m.cols()), (3 * 2, 3 * 4));
    }

    #[test]
    fn phi_partial_with_identity_symbol_antisymmetrizes() {
        // g = V*⊗W with φ the identity: on Λ¹V*⊗g the map is (minus) the
        // antisymmetrization V*⊗V*⊗W → Λ²V*⊗W; its kernel is the symmetric
        // square, of dimension C(n+1,2)·m.
        for n in 2..=3usize {
            for m in 1..=2usize {
                let phi = RationalMatrix::identity(n * m);
                let map = phi_partial_matrix(n, m, 1, &phi).unwrap();
                let expected_kernel = sym_dim(n, 2) * m;
                assert_eq!(map.kernel().dim(), expected_kernel, "n={n} m={m}");
                // A symmetric two-tensor is annihilated: e_0⊗e_1 + e_1⊗e_0.
                let mut v = vec![Rational::zero(); n * n * m];
                let d_g = n * m;
                v[0 * d_g + (1 * m)] = Rational::one();
                v[1 * d_g + (0 * m)] = Rational::one();
                let image = map.apply(&v).unwrap();
                assert!(image.iter().all(Rational::is_zero));
            }
        }
    }

    #[test]
    fn phi_partial_at_top_degree_has_no_rows() {
        let phi = RationalMatrix::identity(2);
        let top = phi_partial_matrix(2, 1, 2, &phi).unwrap();
        assert_eq!(top.rows(), 0);
        assert!(phi_partial_matrix(2, 1, 1, &RationalMatrix::zeros(3, 2)).is_err());
    }

    #[test]
    fn wedge_tensor_blocks_have_the_product_dimension() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let gens = RationalMatrix::from_fn(2, 4, |_, _| ratio(rng.gen_range(-3..=3), 1));
        let s = Subspace::from_matrix_rows(&gens);
        for (n, j) in [(3usize, 1usize), (3, 2), (4, 2)] {
            let wedged = wedge_tensor_subspace(n, j, &s);
            assert_eq!(wedged.dim(), binomial(n, j) * s.dim());
            assert_eq!(wedged.ambient_dim(), binomial(n, j) * 4);
            // Each block copy of a basis vector is a member.
            let mut v = vec![Rational::zero(); wedged.ambient_dim()];
            for (c, value) in s.basis_row(0).iter().enumerate() {
                v[c] = value.clone();
            }
            assert!(wedged.contains(&v).unwrap());
        }
    }
}
