//! Constant-coefficient relative connections: symbol data, partial and
//! classical prolongations, curvature, iterated prolongation towers,
//! reduced-curvature obstructions, formal-integrability and finite-type
//! analysis, and compatibility of stacked connections.
//!
//! The model: `F = ℚ^a`, `E = ℚ^b`, a surjective `l: F → E`, and one
//! matrix `C(X_i): F → E` per coordinate direction.  The operator acts on
//! sections by `D_X s = l(∂_X s) + C(X) s`, so every object of the theory
//! (first jets compatible with `D`, curvature, prolongations) becomes an
//! exact kernel or image computation:
//!
//! * jets are pairs `(e, ψ) ∈ F ⊕ Hom(V, F)`, flattened value-first;
//! * the partial prolongation is `J¹_D = {(e, ψ) : l ψ_i + C_i e = 0}`;
//! * the curvature is `κ(e, ψ)(X_i, X_j) = C_i ψ_j − C_j ψ_i`, and the
//!   classical prolongation space is `P = J¹_D ∩ ker κ`;
//! * when `P` projects onto `F`, the induced connection on `P` relative to
//!   that projection is constant-coefficient again, so the construction
//!   iterates into a tower.
//!
//! The level-`k` obstruction is the image of the curvature classes in the
//! quotient of `Λ²V* ⊗ (previous symbol)` by the span of the curvature of
//! purely vertical jets; its dimension is zero exactly when the next
//! projection is surjective.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exactla::{format_rational, parse_rational, LinAlgError, Rational, RationalMatrix, Subspace};
use crate::multilinear::exterior_subsets;
use crate::tableau::{phi_spencer_cohomology, prolong, prolong_phi, Tableau, TableauMap};

/// Errors for connection construction, serialization, and analysis.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum RelConnError {
    /// `l` must be surjective for the symbol theory to apply.
    #[error("the map l must be surjective: rank {rank} < {expected}")]
    NotSurjective { rank: usize, expected: usize },
    /// One zeroth-order matrix per coordinate direction.
    #[error("expected {expected} zeroth-order matrices, got {got}")]
    CoefficientCount { expected: usize, got: usize },
    /// A structure matrix has the wrong shape.
    #[error("matrix {which} must be {expected_rows}x{expected_cols}, got {rows}x{cols}")]
    MatrixShape {
        which: String,
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },
    /// A serialized matrix entry failed to parse.
    #[error("entry ({row}, {col}) of matrix {which}: {source}")]
    BadMatrixEntry {
        which: String,
        row: usize,
        col: usize,
        source: LinAlgError,
    },
    /// A jet point has the wrong number of coordinates.
    #[error("jet point must have {expected} coordinates (value then derivatives), got {got}")]
    JetPointLength { expected: usize, got: usize },
    /// Curvature evaluation requires a point of the partial prolongation.
    #[error("the point does not satisfy the first-order compatibility constraints")]
    PointOutsideJetSpace,
    /// The classical prolongation exists only when the projection onto the
    /// base space is surjective.
    #[error(
        "classical prolongation is not smoothly defined: the projection misses a \
         {cokernel_dim}-dimensional cokernel"
    )]
    NotSmoothlyDefined { cokernel_dim: usize },
    /// A leveled analysis hit a non-surjective projection while climbing.
    #[error(
        "prolongation level {level} is not smoothly defined: the projection misses a \
         {cokernel_dim}-dimensional cokernel"
    )]
    NotSmoothlyDefinedAtLevel { level: usize, cokernel_dim: usize },
    /// Stacked connections must compose: the upper target is the lower source.
    #[error("upper connection maps into rank {upper_e}, lower connection lives on rank {lower_f}")]
    CompositionShape { upper_e: usize, lower_f: usize },
    /// Stacked connections must share the base dimension.
    #[error("base dimensions differ: upper n = {upper_n}, lower n = {lower_n}")]
    BaseMismatch { upper_n: usize, lower_n: usize },
    /// An underlying linear-algebra shape error.
    #[error(transparent)]
    LinAlg(#[from] LinAlgError),
}

/// A connection `D_X s = l(∂_X s) + C(X) s` on `F = ℚ^a` relative to the
/// surjective `l: F → E = ℚ^b`, with constant coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstantRelativeConnection {
    n: usize,
    a: usize,
    b: usize,
    l: RationalMatrix,
    c: Vec<RationalMatrix>,
}

/// On-disk form of a connection: matrices as nested rational strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectionFile {
    pub schema: String,
    pub n: usize,
    #[serde(rename = "F_rank")]
    pub f_rank: usize,
    #[serde(rename = "E_rank")]
    pub e_rank: usize,
    pub l: Vec<Vec<String>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<Vec<String>>>,
}

fn matrix_to_strings(m: &RationalMatrix) -> Vec<Vec<String>> {
    (0..m.rows())
        .map(|r| m.row(r).iter().map(format_rational).collect())
        .collect()
}

fn matrix_from_strings(
    which: &str,
    expected_rows: usize,
    expected_cols: usize,
    data: &[Vec<String>],
) -> Result<RationalMatrix, RelConnError> {
    if data.len() != expected_rows || data.iter().any(|r| r.len() != expected_cols) {
        return Err(RelConnError::MatrixShape {
            which: which.to_string(),
            expected_rows,
            expected_cols,
            rows: data.len(),
            cols: data.first().map(|r| r.len()).unwrap_or(0),
        });
    }
    let mut rows = Vec::with_capacity(expected_rows);
    for (r, raw) in data.iter().enumerate() {
        let mut row = Vec::with_capacity(expected_cols);
        for (col, text) in raw.iter().enumerate() {
            row.push(
                parse_rational(text).map_err(|source| RelConnError::BadMatrixEntry {
                    which: which.to_string(),
                    row: r,
                    col,
                    source,
                })?,
            );
        }
        rows.push(row);
    }
    Ok(RationalMatrix::from_rows(rows)?)
}

impl ConstantRelativeConnection {
    pub fn new(
        n: usize,
        f_rank: usize,
        e_rank: usize,
        l: RationalMatrix,
        c: Vec<RationalMatrix>,
    ) -> Result<Self, RelConnError> {
        if l.rows() != e_rank || l.cols() != f_rank {
            return Err(RelConnError::MatrixShape {
                which: "l".to_string(),
                expected_rows: e_rank,
                expected_cols: f_rank,
                rows: l.rows(),
                cols: l.cols(),
            });
        }
        if c.len() != n {
            return Err(RelConnError::CoefficientCount {
                expected: n,
                got: c.len(),
            });
        }
        for (i, ci) in c.iter().enumerate() {
            if ci.rows() != e_rank || ci.cols() != f_rank {
                return Err(RelConnError::MatrixShape {
                    which: format!("C[{i}]"),
                    expected_rows: e_rank,
                    expected_cols: f_rank,
                    rows: ci.rows(),
                    cols: ci.cols(),
                });
            }
        }
        let rank = l.rank();
        if rank != e_rank {
            return Err(RelConnError::NotSurjective {
                rank,
                expected: e_rank,
            });
        }
        Ok(Self {
            n,
            a: f_rank,
            b: e_rank,
            l,
            c,
        })
    }

    pub fn from_file(file: &ConnectionFile) -> Result<Self, RelConnError> {
        let l = matrix_from_strings("l", file.e_rank, file.f_rank, &file.l)?;
        if file.c.len() != file.n {
            return Err(RelConnError::CoefficientCount {
                expected: file.n,
                got: file.c.len(),
            });
        }
        let mut c = Vec::with_capacity(file.n);
        for (i, data) in file.c.iter().enumerate() {
            c.push(matrix_from_strings(
                &format!("C[{i}]"),
                file.e_rank,
                file.f_rank,
                data,
            )?);
        }
        Self::new(file.n, file.f_rank, file.e_rank, l, c)
    }

    pub fn to_file(&self) -> ConnectionFile {
        ConnectionFile {
            schema: crate::SCHEMA.to_string(),
            n: self.n,
            f_rank: self.a,
            e_rank: self.b,
            l: matrix_to_strings(&self.l),
            c: self.c.iter().map(matrix_to_strings).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn f_rank(&self) -> usize {
        self.a
    }

    pub fn e_rank(&self) -> usize {
        self.b
    }

    pub fn l(&self) -> &RationalMatrix {
        &self.l
    }

    pub fn coefficient(&self, direction: usize) -> &RationalMatrix {
        &self.c[direction]
    }

    pub fn coefficients(&self) -> &[RationalMatrix] {
        &self.c
    }

    /// Ambient dimension of first jets `F ⊕ Hom(V, F)`.
    pub fn jet_ambient_dim(&self) -> usize {
        self.a * (1 + self.n)
    }

    /// The symbol `g = ker l ⊆ F`.
    pub fn symbol(&self) -> Subspace {
        self.l.kernel()
    }

    /// The symbol presented as an abstract tableau: `φ(v)(X_i) = C_i v`
    /// for `v ∈ g`.
    pub fn symbol_map(&self) -> TableauMap {
        let g = self.symbol();
        let basis_t = g.basis().transpose();
        let mut phi = RationalMatrix::zeros(0, g.dim());
        for ci in &self.c {
            let block = ci.mul(&basis_t).expect("coefficient shapes are validated");
            phi = phi.stack(&block).expect("stacked blocks share the width");
        }
        TableauMap::new(self.n, self.b, g, phi).expect("assembled shapes are consistent")
    }

    /// Constraint rows cutting out `J¹_D` from `F ⊕ Hom(V, F)`:
    /// `l ψ_i + C_i e = 0` for each direction.
    fn jet_constraint_matrix(&self) -> RationalMatrix {
        let (a, b, n) = (self.a, self.b, self.n);
        RationalMatrix::from_fn(n * b, a * (1 + n), |row, col| {
            let (i, w) = (row / b, row % b);
            if col < a {
                self.c[i].entry(w, col).clone()
            } else if col >= a * (1 + i) && col < a * (2 + i) {
                self.l.entry(w, col - a * (1 + i)).clone()
            } else {
                Rational::from_integer(0.into())
            }
        })
    }

    /// The partial prolongation `J¹_D ⊆ F ⊕ Hom(V, F)`, of dimension
    /// `a + n(a − b)`.
    pub fn partial_prolongation(&self) -> Subspace {
        self.jet_constraint_matrix().kernel()
    }

    /// Curvature on the full jet ambient: rows `(i<j)`-pair-major values
    /// `C_i ψ_j − C_j ψ_i ∈ E`.
    pub fn curvature_ambient_matrix(&self) -> RationalMatrix {
        let (a, b, n) = (self.a, self.b, self.n);
        let pairs = exterior_subsets(n, 2);
        RationalMatrix::from_fn(pairs.len() * b, a * (1 + n), |row, col| {
            let (p, w) = (row / b, row % b);
            let (i, j) = (pairs[p][0], pairs[p][1]);
            if col >= a * (1 + j) && col < a * (2 + j) {
                self.c[i].entry(w, col - a * (1 + j)).clone()
            } else if col >= a * (1 + i) && col < a * (2 + i) {
                -self.c[j].entry(w, col - a * (1 + i)).clone()
            } else {
                Rational::from_integer(0.into())
            }
        })
    }

    /// Matrix of the curvature in the coordinates of `J¹_D`.
    pub fn curvature_matrix(&self) -> RationalMatrix {
        let basis_t = self.partial_prolongation().basis().transpose();
        self.curvature_ambient_matrix()
            .mul(&basis_t)
            .expect("jet ambient dimensions agree")
    }

    /// Evaluates the curvature at a point of `J¹_D`.
    pub fn curvature_at(&self, point: &JetPoint) -> Result<Vec<Rational>, RelConnError> {
        let flat = point.flatten();
        if flat.len() != self.jet_ambient_dim() {
            return Err(RelConnError::JetPointLength {
                expected: self.jet_ambient_dim(),
                got: flat.len(),
            });
        }
        let inside = self.partial_prolongation().coordinates_of(&flat)?;
        if inside.is_none() {
            return Err(RelConnError::PointOutsideJetSpace);
        }
        Ok(self.curvature_ambient_matrix().apply(&flat)?)
    }

    /// The classical prolongation space `P = J¹_D ∩ ker κ`.
    pub fn prolongation_space(&self) -> Subspace {
        self.jet_constraint_matrix()
            .stack(&self.curvature_ambient_matrix())
            .expect("constraint widths agree")
            .kernel()
    }

    /// The induced connection on `P` relative to the value projection;
    /// callers must have checked that the projection is surjective.
    fn connection_on(&self, p: &Subspace) -> ConstantRelativeConnection {
        let basis = p.basis();
        let l_next = basis.column_block(0, self.a).transpose();
        let c_next = (0..self.n)
            .map(|i| {
                basis
                    .column_block(self.a * (1 + i), self.a)
                    .transpose()
                    .neg()
            })
            .collect();
        ConstantRelativeConnection::new(self.n, p.dim(), self.a, l_next, c_next)
            .expect("projection surjectivity was checked by the caller")
    }

    /// The classical prolongation: the space `P` together with the induced
    /// connection on it, when the projection `P → F` is surjective.
    pub fn classical_prolongation(
        &self,
    ) -> Result<(Subspace, ConstantRelativeConnection), RelConnError> {
        let p = self.prolongation_space();
        let rank = p.basis().column_block(0, self.a).rank();
        if rank < self.a {
            return Err(RelConnError::NotSmoothlyDefined {
                cokernel_dim: self.a - rank,
            });
        }
        let next = self.connection_on(&p);
        Ok((p, next))
    }

    /// Image of the curvature of purely vertical jets `(0, η)`,
    /// `η: V → ker l`: the ambiguity subtracted by the level obstruction.
    fn ambiguity_space(&self) -> Subspace {
        let g = self.symbol();
        let d = g.dim();
        let basis_t = g.basis().transpose();
        let cg: Vec<RationalMatrix> = self
            .c
            .iter()
            .map(|ci| ci.mul(&basis_t).expect("coefficient shapes are validated"))
            .collect();
        let pairs = exterior_subsets(self.n, 2);
        let b = self.b;
        let m = RationalMatrix::from_fn(pairs.len() * b, self.n * d, |row, col| {
            let (p, w) = (row / b, row % b);
            let (i, j) = (pairs[p][0], pairs[p][1]);
            let (dir, r) = (col / d.max(1), col % d.max(1));
            if d == 0 {
                Rational::from_integer(0.into())
            } else if dir == j {
                cg[i].entry(w, r).clone()
            } else if dir == i {
                -cg[j].entry(w, r).clone()
            } else {
                Rational::from_integer(0.into())
            }
        });
        m.column_space()
    }

    /// Dimension of the curvature classes modulo the vertical ambiguity;
    /// zero exactly when the next projection is surjective.
    fn level_obstruction_dim(&self) -> usize {
        let image = self
            .partial_prolongation()
            .apply_map(&self.curvature_ambient_matrix())
            .expect("curvature domain is the jet ambient");
        let ambiguity = self.ambiguity_space();
        let total = image
            .sum(&ambiguity)
            .expect("both live in the two-form ambient")
            .dim();
        total - ambiguity.dim()
    }
}

/// A first-jet point: a value in `F` and one derivative vector per
/// coordinate direction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JetPoint {
    pub value: Vec<Rational>,
    pub derivative: Vec<Vec<Rational>>,
}

impl JetPoint {
    /// Splits a flat `(value, ψ_1, …, ψ_n)` coordinate vector.
    pub fn from_flat(n: usize, a: usize, flat: &[Rational]) -> Result<Self, RelConnError> {
        if flat.len() != a * (1 + n) {
            return Err(RelConnError::JetPointLength {
                expected: a * (1 + n),
                got: flat.len(),
            });
        }
        let value = flat[..a].to_vec();
        let derivative = (0..n).map(|i| flat[a * (1 + i)..a * (2 + i)].to_vec()).collect();
        Ok(Self { value, derivative })
    }

    /// Value-first flat coordinates.
    pub fn flatten(&self) -> Vec<Rational> {
        let mut out = self.value.clone();
        for psi in &self.derivative {
            out.extend(psi.iter().cloned());
        }
        out
    }
}

/// One level of a prolongation tower.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TowerRow {
    pub level: usize,
    /// Dimension of the level-`k` prolongation space (`F` itself at level 0).
    pub prolongation_rank: usize,
    /// Dimension of the level symbol (kernel of the level's `l`); at a
    /// non-surjective final level, the kernel of the value projection.
    pub symbol_rank: usize,
    /// Whether the projection onto the previous level is surjective
    /// (`None` at level 0).
    pub projection_surjective: Option<bool>,
    /// Obstruction dimension measured at this level (`None` when the level
    /// connection does not exist because the projection failed).
    pub obstruction_dim: Option<usize>,
}

/// Where and why a tower stopped before the requested depth.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TowerStop {
    pub level: usize,
    pub cokernel_dim: usize,
}

/// Per-level ranks, surjectivity flags, and obstruction dimensions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TowerReport {
    pub requested_levels: usize,
    pub rows: Vec<TowerRow>,
    pub stopped: Option<TowerStop>,
}

/// Iterates the classical prolongation `levels` times, recording ranks,
/// symbol dimensions, projection flags, and obstruction dimensions.  The
/// report is total: a non-surjective projection is recorded as a final row
/// plus a stop marker instead of an error.
pub fn prolong_tower(c: &ConstantRelativeConnection, levels: usize) -> TowerReport {
    let mut rows = Vec::with_capacity(levels + 1);
    let mut stopped = None;
    let mut current = c.clone();
    rows.push(TowerRow {
        level: 0,
        prolongation_rank: current.f_rank(),
        symbol_rank: current.symbol().dim(),
        projection_surjective: None,
        obstruction_dim: Some(current.level_obstruction_dim()),
    });
    for level in 1..=levels {
        let p = current.prolongation_space();
        let rank = p.basis().column_block(0, current.a).rank();
        if rank < current.a {
            let vertical = value_projection(current.n, current.a).kernel();
            let symbol_rank = p
                .intersect(&vertical)
                .expect("both live in the jet ambient")
                .dim();
            rows.push(TowerRow {
                level,
                prolongation_rank: p.dim(),
                symbol_rank,
                projection_surjective: Some(false),
                obstruction_dim: None,
            });
            stopped = Some(TowerStop {
                level,
                cokernel_dim: current.a - rank,
            });
            break;
        }
        let next = current.connection_on(&p);
        rows.push(TowerRow {
            level,
            prolongation_rank: next.f_rank(),
            symbol_rank: next.symbol().dim(),
            projection_surjective: Some(true),
            obstruction_dim: Some(next.level_obstruction_dim()),
        });
        current = next;
    }
    TowerReport {
        requested_levels: levels,
        rows,
        stopped,
    }
}

/// The projection `F ⊕ Hom(V, F) → F` onto the value block.
fn value_projection(n: usize, a: usize) -> RationalMatrix {
    RationalMatrix::from_fn(a, a * (1 + n), |row, col| {
        if row == col {
            Rational::from_integer(1.into())
        } else {
            Rational::from_integer(0.into())
        }
    })
}

/// Evidence for the level-`k` obstruction: curvature image, vertical
/// ambiguity, their quotient dimension, and the two containment laws the
/// image satisfies (trivially reported `true` at level 0 or when there are
/// no 3-forms).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReducedCurvatureReport {
    pub level: usize,
    pub curvature_image_dim: usize,
    pub ambiguity_dim: usize,
    pub obstruction_dim: usize,
    /// The curvature image lies in `Λ² ⊗ (previous-level symbol)`.
    pub values_in_previous_symbol: bool,
    /// The curvature image is killed by the previous level's coefficient
    /// antisymmetrization into 3-forms.
    pub values_partial_closed: bool,
}

/// Climbs the tower to level `k` and measures the obstruction there.
pub fn reduced_curvature(
    c: &ConstantRelativeConnection,
    k: usize,
) -> Result<ReducedCurvatureReport, RelConnError> {
    let mut lower: Option<ConstantRelativeConnection> = None;
    let mut current = c.clone();
    for level in 1..=k {
        let p = current.prolongation_space();
        let rank = p.basis().column_block(0, current.a).rank();
        if rank < current.a {
            return Err(RelConnError::NotSmoothlyDefinedAtLevel {
                level,
                cokernel_dim: current.a - rank,
            });
        }
        let next = current.connection_on(&p);
        lower = Some(current);
        current = next;
    }
    let image = current
        .partial_prolongation()
        .apply_map(&current.curvature_ambient_matrix())
        .expect("curvature domain is the jet ambient");
    let ambiguity = current.ambiguity_space();
    let obstruction_dim = image
        .sum(&ambiguity)
        .expect("both live in the two-form ambient")
        .dim()
        - ambiguity.dim();
    let values_in_previous_symbol = match &lower {
        None => true,
        Some(low) => {
            let target =
                crate::multilinear::wedge_tensor_subspace(current.n, 2, &low.symbol());
            image
                .is_subspace_of(&target)
                .expect("both live in the two-form ambient")
        }
    };
    let values_partial_closed = match &lower {
        None => true,
        Some(low) => {
            let d3 = three_form_antisymmetrization(low);
            image
                .apply_map(&d3)
                .expect("three-form domain matches")
                .is_zero()
        }
    };
    Ok(ReducedCurvatureReport {
        level: k,
        curvature_image_dim: image.dim(),
        ambiguity_dim: ambiguity.dim(),
        obstruction_dim,
        values_in_previous_symbol,
        values_partial_closed,
    })
}

/// The map `Λ²⊗F_low → Λ³⊗E_low` sending `T` to
/// `(i<j<l) ↦ C_i T_{jl} − C_j T_{il} + C_l T_{ij}` with the lower level's
/// coefficients.
fn three_form_antisymmetrization(low: &ConstantRelativeConnection) -> RationalMatrix {
    let pairs = exterior_subsets(low.n, 2);
    let mut pair_index = BTreeMap::new();
    for (idx, p) in pairs.iter().enumerate() {
        pair_index.insert((p[0], p[1]), idx);
    }
    let triples = exterior_subsets(low.n, 3);
    let (a, b) = (low.a, low.b);
    RationalMatrix::from_fn(triples.len() * b, pairs.len() * a, |row, col| {
        let (t, w) = (row / b, row % b);
        let (i, j, l) = (triples[t][0], triples[t][1], triples[t][2]);
        let (q, s) = (col / a, col % a);
        if q == pair_index[&(j, l)] {
            low.c[i].entry(w, s).clone()
        } else if q == pair_index[&(i, l)] {
            -low.c[j].entry(w, s).clone()
        } else if q == pair_index[&(i, j)] {
            low.c[l].entry(w, s).clone()
        } else {
            Rational::from_integer(0.into())
        }
    })
}

/// Verdict of the formal-integrability criterion, always window-qualified.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntegrabilityVerdict {
    CertifiedWithinWindow,
    FailsHypothesis,
}

/// Evidence for the formal-integrability criterion: surjectivity of the
/// projection, the first prolongation rank, and vanishing of the
/// exterior-degree-two symbol cohomology on the window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FormalIntegrabilityReport {
    pub window: usize,
    pub projection_surjective: bool,
    pub first_prolongation_rank: usize,
    /// `(level, is the degree-two cohomology at that level zero)`.
    pub cohomology_zero: Vec<(usize, bool)>,
    pub verdict: IntegrabilityVerdict,
}

/// Checks the integrability hypotheses exactly: projection surjectivity,
/// the (automatically constant-rank) first prolongation, and vanishing of
/// the degree-two symbol cohomology for levels `0..=window`.
pub fn formal_integrability_report(
    c: &ConstantRelativeConnection,
    window: usize,
) -> FormalIntegrabilityReport {
    let p = c.prolongation_space();
    let projection_surjective = p.basis().column_block(0, c.a).rank() == c.a;
    let tm = c.symbol_map();
    let first_prolongation_rank = prolong_phi(&tm).dim();
    let table = phi_spencer_cohomology(&tm, window + 2);
    let cohomology_zero: Vec<(usize, bool)> = (0..=window)
        .map(|level| (level, table.dim_at(1 + level as i64, 2) == 0))
        .collect();
    let verdict = if projection_surjective && cohomology_zero.iter().all(|&(_, z)| z) {
        IntegrabilityVerdict::CertifiedWithinWindow
    } else {
        IntegrabilityVerdict::FailsHypothesis
    };
    FormalIntegrabilityReport {
        window,
        projection_surjective,
        first_prolongation_rank,
        cohomology_zero,
        verdict,
    }
}

/// Outcome of the finite-type search: symbol prolongation dimensions, the
/// vanishing order when one exists within the bound, and the solution-space
/// dimension `a + Σ_{i<order} dim g⁽ⁱ⁾` predicted at that order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteTypeReport {
    pub bound: usize,
    /// Dimensions of `g⁽⁰⁾, g⁽¹⁾, …` up to the vanishing order or the bound.
    pub symbol_dims: Vec<usize>,
    pub order: Option<usize>,
    pub solution_rank: Option<usize>,
}

/// Searches for the smallest `k ≤ bound` with vanishing `k`-th symbol
/// prolongation.
pub fn finite_type_analysis(c: &ConstantRelativeConnection, bound: usize) -> FiniteTypeReport {
    let g = c.symbol();
    let mut symbol_dims = vec![g.dim()];
    let mut order = if g.dim() == 0 { Some(0) } else { None };
    if order.is_none() {
        let g1 = prolong_phi(&c.symbol_map());
        let mut chain = Tableau::new(c.n, g.dim(), 1, g1).expect("prolongation shapes agree");
        for k in 1..=bound {
            symbol_dims.push(chain.dim());
            if chain.dim() == 0 {
                order = Some(k);
                break;
            }
            if k < bound {
                chain = prolong(&chain);
            }
        }
    }
    let solution_rank = order.map(|k| c.a + symbol_dims.iter().take(k).skip(1).sum::<usize>());
    FiniteTypeReport {
        bound,
        symbol_dims,
        order,
        solution_rank,
    }
}

/// Compatibility flags for stacked connections `upper: K → F`,
/// `lower: F → E`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompatibilityReport {
    /// `C(X)·l̃ = l·C̃(X)` for every direction.
    pub compat1: bool,
    /// `C(X)·C̃(Y) = C(Y)·C̃(X)` for every pair of directions.
    pub compat2: bool,
    /// The induced jet inclusion of the upper space lands in the lower
    /// prolongation space.
    pub embeds_in_prolongation: bool,
    pub embedding_dim: usize,
    pub prolongation_dim: usize,
}

/// Checks the two compatibility identities and whether the induced map
/// `v ↦ (l̃ v, X ↦ −C̃(X) v)` embeds the upper space into the lower
/// prolongation space.
pub fn validate_compatible(
    upper: &ConstantRelativeConnection,
    lower: &ConstantRelativeConnection,
) -> Result<CompatibilityReport, RelConnError> {
    if upper.n != lower.n {
        return Err(RelConnError::BaseMismatch {
            upper_n: upper.n,
            lower_n: lower.n,
        });
    }
    if upper.b != lower.a {
        return Err(RelConnError::CompositionShape {
            upper_e: upper.b,
            lower_f: lower.a,
        });
    }
    let compat1 = (0..lower.n).all(|i| {
        let left = lower.c[i].mul(&upper.l).expect("composition shapes agree");
        let right = lower.l.mul(&upper.c[i]).expect("composition shapes agree");
        left == right
    });
    let compat2 = (0..lower.n).all(|i| {
        (i + 1..lower.n).all(|j| {
            let left = lower.c[i].mul(&upper.c[j]).expect("composition shapes agree");
            let right = lower.c[j].mul(&upper.c[i]).expect("composition shapes agree");
            left == right
        })
    });
    let mut jet_map = upper.l.clone();
    for ci in &upper.c {
        jet_map = jet_map.stack(&ci.neg()).expect("stacked blocks share the width");
    }
    let image = jet_map.column_space();
    let p = lower.prolongation_space();
    let embeds_in_prolongation = image
        .is_subspace_of(&p)
        .expect("both live in the lower jet ambient");
    Ok(CompatibilityReport {
        compat1,
        compat2,
        embeds_in_prolongation,
        embedding_dim: image.dim(),
        prolongation_dim: p.dim(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactla::rat;
    use num::Zero;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// The third-derivative-zero system: n = 1, three state components,
    /// C shifting each component into the previous one.
    fn third_derivative_system() -> ConstantRelativeConnection {
        ConstantRelativeConnection::new(
            1,
            3,
            3,
            RationalMatrix::identity(3),
            vec![RationalMatrix::from_i64(&[&[0, -1, 0], &[0, 0, -1], &[0, 0, 0]])],
        )
        .unwrap()
    }

    /// Two non-commuting zeroth-order terms on the trivial symbol.
    fn obstructed_system() -> ConstantRelativeConnection {
        ConstantRelativeConnection::new(
            2,
            2,
            2,
            RationalMatrix::identity(2),
            vec![
                RationalMatrix::from_i64(&[&[0, 1], &[0, 0]]),
                RationalMatrix::from_i64(&[&[0, 0], &[0, 1]]),
            ],
        )
        .unwrap()
    }

    /// Scalar gradient-type system: n = 2, value plus one free slot.
    fn scalar_gradient_system() -> ConstantRelativeConnection {
        ConstantRelativeConnection::new(
            2,
            2,
            1,
            RationalMatrix::from_i64(&[&[1, 0]]),
            vec![RationalMatrix::zeros(1, 2), RationalMatrix::zeros(1, 2)],
        )
        .unwrap()
    }

    /// First-jet connection of a scalar bundle on n = 2: coordinates
    /// (value, two derivative slots), l the value projection, C(X_i) minus
    /// the i-th derivative slot.
    fn scalar_first_jet_system() -> ConstantRelativeConnection {
        ConstantRelativeConnection::new(
            2,
            3,
            1,
            RationalMatrix::from_i64(&[&[1, 0, 0]]),
            vec![
                RationalMatrix::from_i64(&[&[0, -1, 0]]),
                RationalMatrix::from_i64(&[&[0, 0, -1]]),
            ],
        )
        .unwrap()
    }

    /// First-jet connection of a rank-2 bundle on n = 3.
    fn rank_two_first_jet_system() -> ConstantRelativeConnection {
        let a = 8;
        let selector = |block: usize, sign: i64| {
            RationalMatrix::from_fn(2, a, |r, c| {
                if c == 2 * block + r {
                    rat(sign)
                } else {
                    rat(0)
                }
            })
        };
        ConstantRelativeConnection::new(
            3,
            a,
            2,
            selector(0, 1),
            vec![selector(1, -1), selector(2, -1), selector(3, -1)],
        )
        .unwrap()
    }

    /// Connection whose symbol is the one-dimensional plane-field tableau:
    /// F = W ⊕ g with W of rank 2, symbol map sending g into dy ⊗ e_1.
    fn plane_field_symbol_system() -> ConstantRelativeConnection {
        ConstantRelativeConnection::new(
            2,
            3,
            2,
            RationalMatrix::from_i64(&[&[1, 0, 0], &[0, 1, 0]]),
            vec![
                RationalMatrix::zeros(2, 3),
                RationalMatrix::from_i64(&[&[0, 0, 0], &[0, 0, 1]]),
            ],
        )
        .unwrap()
    }

    /// l bijective with commuting zeroth-order terms.
    fn commuting_system() -> ConstantRelativeConnection {
        ConstantRelativeConnection::new(
            2,
            2,
            2,
            RationalMatrix::identity(2),
            vec![
                RationalMatrix::from_i64(&[&[0, 1], &[0, 0]]),
                RationalMatrix::identity(2),
            ],
        )
        .unwrap()
    }

    /// Infinite-type scalar ODE encoding: n = 1, symbol survives forever.
    fn infinite_ode_system() -> ConstantRelativeConnection {
        ConstantRelativeConnection::new(
            1,
            2,
            1,
            RationalMatrix::from_i64(&[&[1, 0]]),
            vec![RationalMatrix::from_i64(&[&[0, 1]])],
        )
        .unwrap()
    }

    fn random_connection(rng: &mut ChaCha8Rng, n: usize, a: usize, b: usize) -> ConstantRelativeConnection {
        let l = RationalMatrix::identity(b)
            .hstack(&RationalMatrix::from_fn(b, a - b, |_, _| {
                rat(rng.gen_range(-2..=2))
            }))
            .unwrap();
        let c = (0..n)
            .map(|_| RationalMatrix::from_fn(b, a, |_, _| rat(rng.gen_range(-2..=2))))
            .collect();
        ConstantRelativeConnection::new(n, a, b, l, c).unwrap()
    }

    #[test]
    fn construction_rejects_bad_shapes_and_non_surjective_l() {
        let err = ConstantRelativeConnection::new(
            1,
            2,
            1,
            RationalMatrix::zeros(1, 2),
            vec![RationalMatrix::zeros(1, 2)],
        )
        .unwrap_err();
        assert_eq!(
            err,
            RelConnError::NotSurjective {
                rank: 0,
                expected: 1
            }
        );

        let err = ConstantRelativeConnection::new(
            2,
            2,
            1,
            RationalMatrix::from_i64(&[&[1, 0]]),
            vec![RationalMatrix::zeros(1, 2)],
        )
        .unwrap_err();
        assert_eq!(
            err,
            RelConnError::CoefficientCount {
                expected: 2,
                got: 1
            }
        );

        let err = ConstantRelativeConnection::new(
            1,
            2,
            1,
            RationalMatrix::from_i64(&[&[1, 0]]),
            vec![RationalMatrix::zeros(2, 2)],
        )
        .unwrap_err();
        assert!(matches!(err, RelConnError::MatrixShape { .. }));
    }

    #[test]
    fn symbols_and_jet_spaces_of_the_basic_fixtures() {
        let u3 = third_derivative_system();
        assert_eq!(u3.symbol().dim(), 0);
        assert_eq!(u3.partial_prolongation().dim(), 3);

        let grad = scalar_gradient_system();
        let g = grad.symbol();
        assert_eq!(g.dim(), 1);
        assert!(g.contains(&[rat(0), rat(1)]).unwrap());
        assert_eq!(grad.partial_prolongation().dim(), 4);
        assert!(grad.symbol_map().phi().is_zero());

        // l bijective with zero C: jets are (e, 0).
        let flat = ConstantRelativeConnection::new(
            2,
            2,
            2,
            RationalMatrix::identity(2),
            vec![RationalMatrix::zeros(2, 2), RationalMatrix::zeros(2, 2)],
        )
        .unwrap();
        let jets = flat.partial_prolongation();
        assert_eq!(jets.dim(), 2);
        assert!(jets
            .contains(&[rat(1), rat(0), rat(0), rat(0), rat(0), rat(0)])
            .unwrap());
    }

    #[test]
    fn curvature_of_the_obstructed_system_is_the_commutator() {
        let c = obstructed_system();
        // On J¹_D the derivative parts are determined: ψ_i = −C_i e, so
        // κ(e) = (C₂C₁ − C₁C₂)e and the commutator is nonzero.
        let point = JetPoint {
            value: vec![rat(0), rat(1)],
            derivative: vec![vec![rat(-1), rat(0)], vec![rat(0), rat(-1)]],
        };
        let kappa = c.curvature_at(&point).unwrap();
        assert_eq!(kappa, vec![rat(-1), rat(0)]);

        let outside = JetPoint {
            value: vec![rat(1), rat(0)],
            derivative: vec![vec![rat(1), rat(1)], vec![rat(0), rat(0)]],
        };
        assert_eq!(
            c.curvature_at(&outside).unwrap_err(),
            RelConnError::PointOutsideJetSpace
        );

        assert_eq!(c.prolongation_space().dim(), 1);
        assert_eq!(
            c.classical_prolongation().unwrap_err(),
            RelConnError::NotSmoothlyDefined { cokernel_dim: 1 }
        );
    }

    #[test]
    fn curvature_matrix_is_well_defined_across_coordinate_choices() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..4 {
            let c = random_connection(&mut rng, 2, 4, 2);
            let jets = c.partial_prolongation();
            let ambient = c.curvature_ambient_matrix();
            let p_direct = c.prolongation_space();

            // Kernel of the in-coordinates curvature, pushed back to the
            // ambient space, for the canonical basis and a recombined one.
            let basis = jets.basis().clone();
            let dim = jets.dim();
            let mut recomb = RationalMatrix::from_fn(dim, dim, |_, _| rat(rng.gen_range(-2..=2)));
            while recomb.rank() < dim {
                recomb = RationalMatrix::from_fn(dim, dim, |_, _| rat(rng.gen_range(-2..=2)));
            }
            for b in [basis.clone(), recomb.mul(&basis).unwrap()] {
                let in_coords = ambient.mul(&b.transpose()).unwrap();
                let back = in_coords.kernel().apply_map(&b.transpose()).unwrap();
                assert_eq!(back, p_direct, "trial {trial}");
            }
        }
    }

    #[test]
    fn third_derivative_tower_is_flat_of_rank_three() {
        let report = prolong_tower(&third_derivative_system(), 3);
        assert!(report.stopped.is_none());
        let ranks: Vec<usize> = report.rows.iter().map(|r| r.prolongation_rank).collect();
        assert_eq!(ranks, vec![3, 3, 3, 3]);
        assert!(report.rows.iter().all(|r| r.symbol_rank == 0));
        assert!(report.rows.iter().all(|r| r.obstruction_dim == Some(0)));
        assert_eq!(report.rows[0].projection_surjective, None);
        assert!(report.rows[1..]
            .iter()
            .all(|r| r.projection_surjective == Some(true)));
    }

    #[test]
    fn first_jet_towers_reproduce_jet_space_dimensions() {
        let report = prolong_tower(&scalar_first_jet_system(), 3);
        assert!(report.stopped.is_none());
        let ranks: Vec<usize> = report.rows.iter().map(|r| r.prolongation_rank).collect();
        assert_eq!(ranks, vec![3, 6, 10, 15]);
        let symbols: Vec<usize> = report.rows.iter().map(|r| r.symbol_rank).collect();
        assert_eq!(symbols, vec![2, 3, 4, 5]);
        assert!(report.rows.iter().all(|r| r.obstruction_dim == Some(0)));

        let big = prolong_tower(&rank_two_first_jet_system(), 2);
        assert!(big.stopped.is_none());
        let ranks: Vec<usize> = big.rows.iter().map(|r| r.prolongation_rank).collect();
        assert_eq!(ranks, vec![8, 20, 40]);
        let symbols: Vec<usize> = big.rows.iter().map(|r| r.symbol_rank).collect();
        assert_eq!(symbols, vec![6, 12, 20]);
    }

    #[test]
    fn obstructed_tower_records_the_failure_level() {
        let report = prolong_tower(&obstructed_system(), 3);
        assert_eq!(report.rows.len(), 2);
        assert_eq!(report.rows[0].prolongation_rank, 2);
        assert_eq!(report.rows[0].obstruction_dim, Some(1));
        assert_eq!(report.rows[1].prolongation_rank, 1);
        assert_eq!(report.rows[1].symbol_rank, 0);
        assert_eq!(report.rows[1].projection_surjective, Some(false));
        assert_eq!(report.rows[1].obstruction_dim, None);
        assert_eq!(
            report.stopped,
            Some(TowerStop {
                level: 1,
                cokernel_dim: 1
            })
        );
    }

    #[test]
    fn scalar_gradient_tower_follows_the_rank_law() {
        let report = prolong_tower(&scalar_gradient_system(), 4);
        assert!(report.stopped.is_none());
        let ranks: Vec<usize> = report.rows.iter().map(|r| r.prolongation_rank).collect();
        assert_eq!(ranks, vec![2, 4, 7, 11, 16]);
        for pair in report.rows.windows(2) {
            assert_eq!(
                pair[1].prolongation_rank,
                pair[0].prolongation_rank + pair[1].symbol_rank
            );
        }
    }

    #[test]
    fn plane_field_symbol_tower_grows_by_one_per_level() {
        let c = plane_field_symbol_system();
        assert_eq!(c.partial_prolongation().dim(), 5);
        let report = prolong_tower(&c, 3);
        assert!(report.stopped.is_none());
        let ranks: Vec<usize> = report.rows.iter().map(|r| r.prolongation_rank).collect();
        assert_eq!(ranks, vec![3, 4, 5, 6]);
        assert!(report.rows.iter().all(|r| r.obstruction_dim == Some(0)));
    }

    #[test]
    fn commuting_coefficients_give_a_constant_tower() {
        let report = prolong_tower(&commuting_system(), 3);
        assert!(report.stopped.is_none());
        assert!(report
            .rows
            .iter()
            .all(|r| r.prolongation_rank == 2 && r.symbol_rank == 0));
    }

    #[test]
    fn vertical_kernel_matches_the_twisted_tableau_prolongation() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut checked = 0;
        for trial in 0..24 {
            let n = 1 + trial % 3;
            let b = 1 + trial % 2;
            let a = b + 1 + (trial / 3) % 3;
            let c = random_connection(&mut rng, n, a, b);

            let p = c.prolongation_space();
            let vertical = p
                .intersect(&value_projection(n, a).kernel())
                .unwrap();

            let tm = c.symbol_map();
            let g = tm.source().clone();
            let d = g.dim();
            let embed = RationalMatrix::from_fn(a * (1 + n), n * d, |row, col| {
                if row < a {
                    Rational::zero()
                } else {
                    let (i, s) = ((row - a) / a, (row - a) % a);
                    let (dir, r) = (col / d, col % d);
                    if i == dir {
                        g.basis_row(r)[s].clone()
                    } else {
                        Rational::zero()
                    }
                }
            });
            let transported = prolong_phi(&tm).apply_map(&embed).unwrap();
            assert_eq!(vertical, transported, "trial {trial} (n={n}, a={a}, b={b})");
            checked += 1;
        }
        assert!(checked >= 20);
    }

    #[test]
    fn random_towers_satisfy_the_rank_law_where_surjective() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for trial in 0..6 {
            let c = random_connection(&mut rng, 2, 3 + trial % 2, 1 + trial % 2);
            let report = prolong_tower(&c, 2);
            for pair in report.rows.windows(2) {
                if pair[1].projection_surjective == Some(true) {
                    assert_eq!(
                        pair[1].prolongation_rank,
                        pair[0].prolongation_rank + pair[1].symbol_rank
                    );
                }
            }
        }
    }

    #[test]
    fn reduced_curvature_of_the_obstructed_system() {
        let report = reduced_curvature(&obstructed_system(), 0).unwrap();
        assert_eq!(report.curvature_image_dim, 1);
        assert_eq!(report.ambiguity_dim, 0);
        assert_eq!(report.obstruction_dim, 1);

        assert_eq!(
            reduced_curvature(&obstructed_system(), 1).unwrap_err(),
            RelConnError::NotSmoothlyDefinedAtLevel {
                level: 1,
                cokernel_dim: 1
            }
        );
    }

    #[test]
    fn reduced_curvature_vanishes_along_unobstructed_towers() {
        for k in 0..=2 {
            let report = reduced_curvature(&plane_field_symbol_system(), k).unwrap();
            assert_eq!(report.obstruction_dim, 0, "level {k}");
            assert!(report.values_in_previous_symbol);
            assert!(report.values_partial_closed);
        }
        // A base dimension with honest 3-forms exercises the closure law.
        let report = reduced_curvature(&rank_two_first_jet_system(), 1).unwrap();
        assert_eq!(report.obstruction_dim, 0);
        assert!(report.values_in_previous_symbol);
        assert!(report.values_partial_closed);
    }

    #[test]
    fn plane_field_symbol_ambiguity_absorbs_the_curvature_image() {
        let report = reduced_curvature(&plane_field_symbol_system(), 0).unwrap();
        assert_eq!(report.curvature_image_dim, 1);
        assert_eq!(report.ambiguity_dim, 1);
        assert_eq!(report.obstruction_dim, 0);
    }

    #[test]
    fn formal_integrability_verdicts_on_the_fixtures() {
        let certified = formal_integrability_report(&third_derivative_system(), 3);
        assert!(certified.projection_surjective);
        assert!(certified.cohomology_zero.iter().all(|&(_, z)| z));
        assert_eq!(
            certified.verdict,
            IntegrabilityVerdict::CertifiedWithinWindow
        );

        let grad = formal_integrability_report(&scalar_gradient_system(), 3);
        assert_eq!(grad.verdict, IntegrabilityVerdict::CertifiedWithinWindow);
        assert_eq!(grad.first_prolongation_rank, 2);

        let obstructed = formal_integrability_report(&obstructed_system(), 3);
        assert!(!obstructed.projection_surjective);
        assert!(obstructed.cohomology_zero.iter().all(|&(_, z)| z));
        assert_eq!(obstructed.verdict, IntegrabilityVerdict::FailsHypothesis);

        let plane = formal_integrability_report(&plane_field_symbol_system(), 3);
        assert_eq!(plane.verdict, IntegrabilityVerdict::CertifiedWithinWindow);
    }

    #[test]
    fn finite_type_analysis_on_the_fixtures() {
        let u3 = finite_type_analysis(&third_derivative_system(), 4);
        assert_eq!(u3.order, Some(0));
        assert_eq!(u3.solution_rank, Some(3));
        assert_eq!(u3.symbol_dims, vec![0]);

        let infinite = finite_type_analysis(&infinite_ode_system(), 5);
        assert_eq!(infinite.order, None);
        assert_eq!(infinite.solution_rank, None);
        assert_eq!(infinite.symbol_dims, vec![1; 6]);

        let plane = finite_type_analysis(&plane_field_symbol_system(), 6);
        assert_eq!(plane.order, None);
        assert_eq!(plane.symbol_dims, vec![1; 7]);

        let grad = finite_type_analysis(&scalar_gradient_system(), 4);
        assert_eq!(grad.order, None);
        assert_eq!(grad.symbol_dims, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn tower_pairs_validate_as_compatible_with_image_equality() {
        for c in [
            third_derivative_system(),
            scalar_first_jet_system(),
            plane_field_symbol_system(),
            scalar_gradient_system(),
        ] {
            let (p, upper) = c.classical_prolongation().unwrap();
            let report = validate_compatible(&upper, &c).unwrap();
            assert!(report.compat1);
            assert!(report.compat2);
            assert!(report.embeds_in_prolongation);
            assert_eq!(report.embedding_dim, p.dim());
            assert_eq!(report.prolongation_dim, p.dim());
        }
    }

    #[test]
    fn compatibility_flags_detect_perturbations() {
        let lower = commuting_system();
        let report = validate_compatible(&lower, &lower).unwrap();
        assert!(report.compat1);
        assert!(report.compat2);
        assert!(report.embeds_in_prolongation);

        // Perturb one upper coefficient by a matrix that fails to commute.
        let mut upper = lower.clone();
        upper.c[0] = upper.c[0].add(&RationalMatrix::from_i64(&[&[0, 0], &[1, 0]])).unwrap();
        let report = validate_compatible(&upper, &lower).unwrap();
        assert!(!report.compat2);

        let err = validate_compatible(&scalar_gradient_system(), &lower).unwrap_err();
        assert_eq!(
            err,
            RelConnError::CompositionShape {
                upper_e: 1,
                lower_f: 2
            }
        );
    }

    #[test]
    fn compatible_flags_imply_the_embedding_on_random_pairs() {
        // Whenever both identities hold, the induced jet map must land in
        // the prolongation space.
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let mut seen_compatible = 0;
        for _ in 0..40 {
            let lower = random_connection(&mut rng, 2, 3, 2);
            let (_, upper) = match lower.classical_prolongation() {
                Ok(pair) => pair,
                Err(_) => continue,
            };
            let report = validate_compatible(&upper, &lower).unwrap();
            if report.compat1 && report.compat2 {
                assert!(report.embeds_in_prolongation);
                seen_compatible += 1;
            }
        }
        assert!(seen_compatible > 0);
    }

    #[test]
    fn connection_files_round_trip_with_located_errors() {
        let c = plane_field_symbol_system();
        let file = c.to_file();
        assert_eq!(file.schema, crate::SCHEMA);
        let json = serde_json::to_string_pretty(&file).unwrap();
        assert!(json.contains("\"F_rank\""));
        let reparsed: ConnectionFile = serde_json::from_str(&json).unwrap();
        assert_eq!(ConstantRelativeConnection::from_file(&reparsed).unwrap(), c);

        let mut bad = file.clone();
        bad.c[1][1][2] = "x".to_string();
        match ConstantRelativeConnection::from_file(&bad).unwrap_err() {
            RelConnError::BadMatrixEntry { which, row: 1, col: 2, .. } => {
                assert_eq!(which, "C[1]");
            }
            other => panic!("unexpected error {other:?}"),
        }

        let mut short = file;
        short.l.pop();
        assert!(matches!(
            ConstantRelativeConnection::from_file(&short).unwrap_err(),
            RelConnError::MatrixShape { .. }
        ));
    }

    #[test]
    fn jet_points_flatten_and_split_consistently() {
        let point = JetPoint {
            value: vec![rat(1), rat(2)],
            derivative: vec![vec![rat(3), rat(4)], vec![rat(5), rat(6)]],
        };
        let flat = point.flatten();
        assert_eq!(flat.len(), 6);
        assert_eq!(JetPoint::from_flat(2, 2, &flat).unwrap(), point);
        assert_eq!(
            JetPoint::from_flat(2, 2, &flat[..5]).unwrap_err(),
            RelConnError::JetPointLength {
                expected: 6,
                got: 5
            }
        );
    }
}
