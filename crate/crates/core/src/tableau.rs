//! Tableaux and their prolongations, Spencer cohomology over a finite
//! window, acyclicity verdicts, and towers.
//!
//! A tableau of order `k` is a subspace `g ⊆ S^k V* ⊗ W` with
//! `dim V = n`, `dim W = m`.  Its prolongation `g⁽¹⁾ ⊆ S^{k+1} V* ⊗ W`
//! collects the elements all of whose contractions lie in `g`.  A tableau
//! map presents an abstract tableau by a linear map `φ: g → V*⊗W`; its
//! first prolongation lives in `V*⊗g` and consists of the maps `T` with
//! `φ(T e_i)(e_j)` symmetric in `i, j`.
//!
//! Cohomology tables are keyed by `(symmetric degree, exterior degree)`.
//! The complex attached to window parameter `p` runs
//!
//! ```text
//! 0 → g⁽ᵖ⁾ → Λ¹V*⊗g⁽ᵖ⁻¹⁾ → ⋯ → Λᵖ V*⊗g → Λᵖ⁺¹V* ⊗ S^{k-1}V*⊗W,
//! ```
//!
//! so the slot at exterior degree `p+1` (the terminal slot, symmetric
//! label `k-1`) measures the classical complex below the tableau.  Entries
//! at symmetric degree `≥ k` sit on prolongations of the tableau; those are
//! the entries the acyclicity verdicts quantify over.  (For the zero
//! tableau the terminal entries are honestly nonzero — the incoming image
//! vanishes while the classical kernel does not.)

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exactla::{format_rational, parse_rational, LinAlgError, RationalMatrix, Subspace};
use crate::multilinear::{
    contraction, partial_matrix, phi_partial_matrix, wedge_tensor_subspace, GradedSlot,
};

/// Errors for tableau construction, serialization, and towers.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum TableauError {
    /// Tableaux start at order 1.
    #[error("tableau order must be at least 1, got {k}")]
    OrderTooLow { k: usize },
    /// The carrier subspace does not live in `S^k V* ⊗ W`.
    #[error("tableau space has ambient dimension {got}, expected {expected}")]
    AmbientMismatch { expected: usize, got: usize },
    /// A symbol map must have one row per coordinate of `V*⊗W`.
    #[error("symbol map must have {expected} rows, got {got}")]
    SymbolRowCount { expected: usize, got: usize },
    /// A symbol map must have one column per source dimension.
    #[error("symbol map must have {expected} columns, got {got}")]
    SymbolColumnCount { expected: usize, got: usize },
    /// Inclusion presentations only make sense for order-1 tableaux.
    #[error("an inclusion tableau map needs an order-1 tableau, got order {k}")]
    InclusionOrder { k: usize },
    /// A generator entry failed to parse as a rational.
    #[error("generator entry at row {row}, column {col}: {source}")]
    BadGenerator {
        row: usize,
        col: usize,
        source: LinAlgError,
    },
    /// An underlying linear-algebra shape error.
    #[error(transparent)]
    LinAlg(#[from] LinAlgError),
    /// Towers contain at least one tableau.
    #[error("a tower needs at least one tableau")]
    EmptyTower,
    /// All tower levels share the same `(n, m)`.
    #[error("tower level {level} does not match the base dimensions (n, m)")]
    TowerShape { level: usize },
    /// Tower orders increase by one at each level.
    #[error("tower level {level} must have order {expected}, got {got}")]
    TowerOrder {
        level: usize,
        expected: usize,
        got: usize,
    },
    /// Each tower level embeds in the prolongation of the previous one.
    #[error("tower level {level} is not contained in the prolongation of the previous level")]
    TowerInclusion { level: usize },
}

/// A tableau `g ⊆ S^k V* ⊗ W` in the graded coordinates of
/// [`GradedSlot`]`(n, m, 0, k)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tableau {
    n: usize,
    m: usize,
    k: usize,
    space: Subspace,
}

/// On-disk form of a tableau: generator rows of rational strings in
/// monomial order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableauFile {
    pub schema: String,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub generators: Vec<Vec<String>>,
}

impl Tableau {
    /// Wraps a subspace of `S^k V* ⊗ W` as a tableau of order `k ≥ 1`.
    pub fn new(n: usize, m: usize, k: usize, space: Subspace) -> Result<Self, TableauError> {
        if k < 1 {
            return Err(TableauError::OrderTooLow { k });
        }
        let expected = GradedSlot::new(n, m, 0, k as i64).dim();
        if space.ambient_dim() != expected {
            return Err(TableauError::AmbientMismatch {
                expected,
                got: space.ambient_dim(),
            });
        }
        Ok(Self { n, m, k, space })
    }

    /// The full tableau `S^k V* ⊗ W`.
    pub fn full(n: usize, m: usize, k: usize) -> Self {
        let dim = GradedSlot::new(n, m, 0, k as i64).dim();
        Self::new(n, m, k, Subspace::full(dim)).expect("order is fixed at construction")
    }

    /// The zero tableau inside `S^k V* ⊗ W`.
    pub fn zero(n: usize, m: usize, k: usize) -> Self {
        let dim = GradedSlot::new(n, m, 0, k as i64).dim();
        Self::new(n, m, k, Subspace::zero(dim)).expect("order is fixed at construction")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn space(&self) -> &Subspace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// Parses the on-disk form, canonicalizing the generator rows.
    pub fn from_file(file: &TableauFile) -> Result<Self, TableauError> {
        let mut generators = Vec::with_capacity(file.generators.len());
        for (row, raw) in file.generators.iter().enumerate() {
            let mut v = Vec::with_capacity(raw.len());
            for (col, text) in raw.iter().enumerate() {
                v.push(parse_rational(text).map_err(|source| TableauError::BadGenerator {
                    row,
                    col,
                    source,
                })?);
            }
            generators.push(v);
        }
        let ambient = GradedSlot::new(file.n, file.m, 0, file.k as i64).dim();
        let space = Subspace::from_generators(ambient, generators)?;
        Self::new(file.n, file.m, file.k, space)
    }

    /// Emits the on-disk form with the canonical (echelon) generators.
    pub fn to_file(&self) -> TableauFile {
        let generators = (0..self.space.dim())
            .map(|r| {
                self.space
                    .basis_row(r)
                    .iter()
                    .map(format_rational)
                    .collect()
            })
            .collect();
        TableauFile {
            schema: crate::SCHEMA.to_string(),
            n: self.n,
            m: self.m,
            k: self.k,
            generators,
        }
    }
}

/// An abstract tableau presented by a symbol map `φ: g → V*⊗W`.
///
/// The source is a subspace only to fix a canonical basis; `φ` is written
/// in that basis, with `n·m` rows laid out direction-major (`i·m + w`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableauMap {
    n: usize,
    m: usize,
    g: Subspace,
    phi: RationalMatrix,
}

impl TableauMap {
    pub fn new(
        n: usize,
        m: usize,
        g: Subspace,
        phi: RationalMatrix,
    ) -> Result<Self, TableauError> {
        if phi.rows() != n * m {
            return Err(TableauError::SymbolRowCount {
                expected: n * m,
                got: phi.rows(),
            });
        }
        if phi.cols() != g.dim() {
            return Err(TableauError::SymbolColumnCount {
                expected: g.dim(),
                got: phi.cols(),
            });
        }
        Ok(Self { n, m, g, phi })
    }

    /// Presents an order-1 tableau `g ⊆ V*⊗W` by its inclusion map.
    pub fn from_inclusion(t: &Tableau) -> Result<Self, TableauError> {
        if t.k != 1 {
            return Err(TableauError::InclusionOrder { k: t.k });
        }
        let phi = t.space.basis().transpose();
        Self::new(t.n, t.m, t.space.clone(), phi)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// The abstract source space (its dimension is the column count of `φ`).
    pub fn source(&self) -> &Subspace {
        &self.g
    }

    pub fn phi(&self) -> &RationalMatrix {
        &self.phi
    }

    /// Dimension of the abstract source.
    pub fn source_dim(&self) -> usize {
        self.g.dim()
    }
}

/// The prolongation `g⁽¹⁾ = {T ∈ S^{k+1}V*⊗W : ∂_d T ∈ g for all d}`.
pub fn prolong(t: &Tableau) -> Tableau {
    let k_next = t.k + 1;
    let ambient = GradedSlot::new(t.n, t.m, 0, k_next as i64).dim();
    let cons = t.space.constraints();
    let mut stacked = RationalMatrix::zeros(0, ambient);
    for d in 0..t.n {
        let c = contraction(t.n, t.m, k_next, d).expect("degree and direction are in range");
        let rows = cons.mul(&c).expect("contraction maps into the tableau ambient");
        stacked = stacked.stack(&rows).expect("constraint widths agree");
    }
    Tableau {
        n: t.n,
        m: t.m,
        k: k_next,
        space: stacked.kernel(),
    }
}

/// The chain `g = g⁽⁰⁾, g⁽¹⁾, …, g⁽ᵘᵖ⁻ᵗᵒ⁾` as tableaux.
pub fn prolongations(t: &Tableau, up_to: usize) -> Vec<Tableau> {
    let mut out = Vec::with_capacity(up_to + 1);
    out.push(t.clone());
    for _ in 0..up_to {
        let next = prolong(out.last().expect("chain is nonempty"));
        out.push(next);
    }
    out
}

/// First prolongation of a tableau map: the subspace of `V*⊗g`
/// (direction-major coordinates `i·dim g + r`) on which `φ` is symmetric.
pub fn prolong_phi(tm: &TableauMap) -> Subspace {
    phi_partial_matrix(tm.n, tm.m, 1, &tm.phi)
        .expect("symbol map shape is checked at construction")
        .kernel()
}

/// One entry of a cohomology table: kernel and incoming-image dimensions
/// of the complex at that slot, and their difference.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CohomologyEntry {
    pub kernel_dim: usize,
    pub image_dim: usize,
    pub cohomology_dim: usize,
}

impl CohomologyEntry {
    fn zero() -> Self {
        Self {
            kernel_dim: 0,
            image_dim: 0,
            cohomology_dim: 0,
        }
    }
}

/// Cohomology dimensions over a window, keyed by
/// `(symmetric degree, exterior degree)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CohomologyTable {
    pub p_max: usize,
    pub entries: BTreeMap<(i64, usize), CohomologyEntry>,
}

impl CohomologyTable {
    /// Dimension at a key, taking absent keys as zero.
    pub fn dim_at(&self, sym: i64, ext: usize) -> usize {
        self.entries
            .get(&(sym, ext))
            .map(|e| e.cohomology_dim)
            .unwrap_or(0)
    }
}

/// The space sitting at a slot of the complex: a wedge of a chain level,
/// or the full slot below level 0.
fn level_space(n: usize, m: usize, chain: &[Subspace], level: i64, j: usize, sym: i64) -> Subspace {
    let slot = GradedSlot::new(n, m, j, sym);
    if slot.dim() == 0 {
        return Subspace::zero(0);
    }
    if level < 0 {
        Subspace::full(slot.dim())
    } else {
        wedge_tensor_subspace(n, j, &chain[level as usize])
    }
}

/// The differential leaving `Λ^j ⊗ S^sym ⊗ W`, when its target is nonzero.
fn outgoing(n: usize, m: usize, j: usize, sym: i64) -> Option<RationalMatrix> {
    if sym >= 1 && j < n {
        Some(
            partial_matrix(&GradedSlot::new(n, m, j, sym))
                .expect("degree ≥ 1 and exterior degree < n"),
        )
    } else {
        None
    }
}

/// Cohomology at `Λ^j ⊗ (chain level)`; levels below zero mean the full
/// slot.  `chain[level + 1]` must exist whenever `j ≥ 1` and `level ≥ -1`.
fn plain_entry(
    n: usize,
    m: usize,
    k: usize,
    chain: &[Subspace],
    level: i64,
    j: usize,
) -> CohomologyEntry {
    let sym = k as i64 + level;
    let space = level_space(n, m, chain, level, j, sym);
    if space.dim() == 0 {
        return CohomologyEntry::zero();
    }
    let kernel_dim = match outgoing(n, m, j, sym) {
        Some(d) => {
            space.dim()
                - space
                    .apply_map(&d)
                    .expect("differential domain matches the slot")
                    .dim()
        }
        None => space.dim(),
    };
    let image_dim = if j == 0 {
        0
    } else {
        match outgoing(n, m, j - 1, sym + 1) {
            Some(d) => level_space(n, m, chain, level + 1, j - 1, sym + 1)
                .apply_map(&d)
                .expect("differential domain matches the previous slot")
                .dim(),
            None => 0,
        }
    };
    CohomologyEntry {
        kernel_dim,
        image_dim,
        cohomology_dim: kernel_dim - image_dim,
    }
}

/// All window cohomology of a tableau: entries `(k+p-j, j)` for
/// `0 ≤ p ≤ p_max`, `0 ≤ j ≤ min(p, n) + 1`.
pub fn spencer_cohomology(t: &Tableau, p_max: usize) -> CohomologyTable {
    let chain: Vec<Subspace> = prolongations(t, p_max)
        .into_iter()
        .map(|g| g.space)
        .collect();
    let mut entries = BTreeMap::new();
    for p in 0..=p_max {
        for j in 0..=p.min(t.n) + 1 {
            let level = p as i64 - j as i64;
            let sym = t.k as i64 + level;
            entries.insert((sym, j), plain_entry(t.n, t.m, t.k, &chain, level, j));
        }
    }
    CohomologyTable { p_max, entries }
}

/// The chain `ℚ^d = G⁽⁰⁾, G⁽¹⁾, …` of φ-prolongations, where
/// `G⁽ˡ⁾ ⊆ S^l V* ⊗ ℚ^d` for `l ≥ 1` are plain prolongations of the
/// order-1 tableau carried by `prolong_phi`.
fn phi_chain(tm: &TableauMap, up_to: usize) -> Vec<Subspace> {
    let d = tm.g.dim();
    let mut out = vec![Subspace::full(d)];
    if up_to >= 1 {
        let g1 = prolong_phi(tm);
        let mut cur = Tableau {
            n: tm.n,
            m: d,
            k: 1,
            space: g1,
        };
        out.push(cur.space.clone());
        for _ in 2..=up_to {
            cur = prolong(&cur);
            out.push(cur.space.clone());
        }
    }
    out
}

/// Window cohomology of the complexes
/// `0 → G⁽ᵖ⁾ → ⋯ → Λᵖ⊗ℚ^d → Λᵖ⁺¹⊗W` attached to a tableau map, the last
/// arrow being the φ-twisted differential.  Source slots at chain level
/// `l` are keyed `(1 + l, j)`; the terminal `W`-valued slot is keyed
/// `(0, p+1)`.  When `φ` is the inclusion of an order-1 tableau the table
/// coincides with [`spencer_cohomology`] of that tableau, keys included.
pub fn phi_spencer_cohomology(tm: &TableauMap, p_max: usize) -> CohomologyTable {
    let d = tm.g.dim();
    let chain = phi_chain(tm, p_max);
    let mut entries = BTreeMap::new();
    for p in 0..=p_max {
        for j in 0..=p.min(tm.n) + 1 {
            if j == p + 1 {
                // Terminal slot Λ^{p+1} ⊗ W with the φ-twisted incoming map.
                let slot = GradedSlot::new(tm.n, tm.m, j, 0);
                if slot.dim() == 0 {
                    entries.insert((0, j), CohomologyEntry::zero());
                    continue;
                }
                let kernel_dim = slot.dim();
                let dphi = phi_partial_matrix(tm.n, tm.m, p, &tm.phi)
                    .expect("symbol map shape is checked at construction");
                let image_dim = level_space(tm.n, d, &chain, 0, p, 0)
                    .apply_map(&dphi)
                    .expect("φ-differential domain matches the previous slot")
                    .dim();
                entries.insert(
                    (0, j),
                    CohomologyEntry {
                        kernel_dim,
                        image_dim,
                        cohomology_dim: kernel_dim - image_dim,
                    },
                );
                continue;
            }
            let level = p as i64 - j as i64;
            let space = level_space(tm.n, d, &chain, level, j, level);
            if space.dim() == 0 {
                entries.insert((1 + level, j), CohomologyEntry::zero());
                continue;
            }
            let kernel_dim = if level == 0 {
                // Outgoing map is the φ-twisted differential into Λ^{j+1}⊗W.
                let dphi = phi_partial_matrix(tm.n, tm.m, j, &tm.phi)
                    .expect("symbol map shape is checked at construction");
                space.dim()
                    - space
                        .apply_map(&dphi)
                        .expect("φ-differential domain matches the slot")
                        .dim()
            } else {
                match outgoing(tm.n, d, j, level) {
                    Some(dmap) => {
                        space.dim()
                            - space
                                .apply_map(&dmap)
                                .expect("differential domain matches the slot")
                                .dim()
                    }
                    None => space.dim(),
                }
            };
            let image_dim = if j == 0 {
                0
            } else {
                match outgoing(tm.n, d, j - 1, level + 1) {
                    Some(dmap) => level_space(tm.n, d, &chain, level + 1, j - 1, level + 1)
                        .apply_map(&dmap)
                        .expect("differential domain matches the previous slot")
                        .dim(),
                    None => 0,
                }
            };
            entries.insert(
                (1 + level, j),
                CohomologyEntry {
                    kernel_dim,
                    image_dim,
                    cohomology_dim: kernel_dim - image_dim,
                },
            );
        }
    }
    CohomologyTable { p_max, entries }
}

/// Window verdicts for `r`-acyclicity: vanishing of the cohomology on
/// `Λ^j ⊗ g⁽ᵖ⁾` (symmetric degree `k+p`) for `p ≤ p_max`, `j ≤ r`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AcyclicityReport {
    pub r: usize,
    pub p_max: usize,
    /// `(p, j) → ` "is the cohomology at symmetric degree `k+p`,
    /// exterior degree `j` zero".
    pub entries: BTreeMap<(usize, usize), bool>,
    pub acyclic_within_window: bool,
}

/// Checks `r`-acyclicity over the window `0 ≤ p ≤ p_max`, `0 ≤ j ≤ r`.
pub fn acyclicity_report(t: &Tableau, r: usize, p_max: usize) -> AcyclicityReport {
    let chain: Vec<Subspace> = prolongations(t, p_max + 1)
        .into_iter()
        .map(|g| g.space)
        .collect();
    let mut entries = BTreeMap::new();
    let mut all = true;
    for p in 0..=p_max {
        for j in 0..=r {
            let entry = plain_entry(t.n, t.m, t.k, &chain, p as i64, j);
            let zero = entry.cohomology_dim == 0;
            all &= zero;
            entries.insert((p, j), zero);
        }
    }
    AcyclicityReport {
        r,
        p_max,
        entries,
        acyclic_within_window: all,
    }
}

/// Involutivity within a window is `n`-acyclicity within that window.
pub fn involutive_within_window(t: &Tableau, p_max: usize) -> bool {
    acyclicity_report(t, t.n, p_max).acyclic_within_window
}

/// Smallest `p ≤ bound` such that every prolongation `g⁽ᑫ⁾`, `p ≤ q ≤
/// bound`, passes the involutivity window test with the remaining budget
/// `bound - q`; `None` when no such `p` exists within the bound.
pub fn stabilization_order(t: &Tableau, bound: usize) -> Option<usize> {
    let chain = prolongations(t, bound);
    let flags: Vec<bool> = chain
        .iter()
        .enumerate()
        .map(|(q, g)| involutive_within_window(g, bound - q))
        .collect();
    (0..=bound).find(|&p| flags[p..].iter().all(|&f| f))
}

/// A tower of tableaux with consecutive orders, each level contained in
/// the prolongation of the previous one (checked at construction).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tower {
    levels: Vec<Tableau>,
}

impl Tower {
    pub fn new(levels: Vec<Tableau>) -> Result<Self, TableauError> {
        let first = levels.first().ok_or(TableauError::EmptyTower)?.clone();
        for (i, t) in levels.iter().enumerate() {
            if (t.n, t.m) != (first.n, first.m) {
                return Err(TableauError::TowerShape { level: i });
            }
            if t.k != first.k + i {
                return Err(TableauError::TowerOrder {
                    level: i,
                    expected: first.k + i,
                    got: t.k,
                });
            }
        }
        for i in 0..levels.len().saturating_sub(1) {
            let pr = prolong(&levels[i]);
            if !levels[i + 1]
                .space
                .is_subspace_of(&pr.space)
                .expect("consecutive orders share the ambient")
            {
                return Err(TableauError::TowerInclusion { level: i + 1 });
            }
        }
        Ok(Self { levels })
    }

    pub fn levels(&self) -> &[Tableau] {
        &self.levels
    }
}

/// Per-pair equality flags for a tower: does each level equal the full
/// prolongation of the previous one?
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TowerValidation {
    /// Flag `i` compares level `i+1` with the prolongation of level `i`.
    pub equality_flags: Vec<bool>,
    /// First pair index from which equality holds through the end, if any.
    pub stable_from: Option<usize>,
}

/// Compares each tower level with the full prolongation of its
/// predecessor.
pub fn validate_tower(tower: &Tower) -> TowerValidation {
    let equality_flags: Vec<bool> = (0..tower.levels.len().saturating_sub(1))
        .map(|i| prolong(&tower.levels[i]).space == tower.levels[i + 1].space)
        .collect();
    let stable_from = (0..equality_flags.len()).find(|&s| equality_flags[s..].iter().all(|&f| f));
    TowerValidation {
        equality_flags,
        stable_from,
    }
}
