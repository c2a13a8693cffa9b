//! The linear Pfaffian correspondence in the constant-coefficient model:
//! relative connection ⇄ linear 1-form ⇄ linear distribution.
//!
//! The 1-form attached to `(l, C)` acts at a point `(x, e)` on a tangent
//! vector `X ⊕ w ∈ V ⊕ F` by `θ(X ⊕ w) = l(w) + C(X) e`.  Its kernel at a
//! fiber point is the kernel of the `b × (n + a)` matrix `[C(·)e | l]`,
//! a distribution of constant rank `n + a − b` because the `l` block is
//! surjective at every point.
//!
//! Sections relate the two sides: pulling `θ` back along a polynomial
//! section `s` reproduces the connection's action `l(∂_i s) + C(X_i) s`.
//! This module computes the two sides of that identity along deliberately
//! different code paths — the connection side by direct coefficient-table
//! manipulation, the form side by generic polynomial matrix-vector
//! multiplication along the graph of `s` — so agreement is evidence, not
//! tautology.

use std::collections::BTreeMap;

use num::Zero;
use thiserror::Error;

use crate::exactla::{rat, LinAlgError, Rational, RationalMatrix, Subspace};
use crate::relconn::{ConnectionFile, ConstantRelativeConnection, RelConnError};

/// Errors for form construction, fiber evaluation, and polynomial sections.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum PfaffianError {
    /// The underlying `(l, C)` data failed connection validation.
    #[error(transparent)]
    Construction(#[from] RelConnError),
    /// A fiber point must have one coordinate per `F`-component.
    #[error("fiber point must have {expected} coordinates, got {got}")]
    FiberPointLength { expected: usize, got: usize },
    /// A polynomial section does not match the form's chart and fiber.
    #[error(
        "section maps {vars} variables into rank {dim}, expected {expected_vars} \
         variables into rank {expected_dim}"
    )]
    SectionShape {
        expected_vars: usize,
        expected_dim: usize,
        vars: usize,
        dim: usize,
    },
    /// A coefficient vector has the wrong length.
    #[error("coefficient vector must have {expected} entries, got {got}")]
    CoefficientLength { expected: usize, got: usize },
    /// An exponent vector has the wrong number of variables.
    #[error("exponent vector must have {expected} entries, got {got}")]
    ExponentLength { expected: usize, got: usize },
    /// An underlying linear-algebra shape error.
    #[error(transparent)]
    LinAlg(#[from] LinAlgError),
}

/// A linear 1-form `θ(X ⊕ w) = l(w) + C(X) e` on the total space of
/// `F = ℚ^a` over an `n`-dimensional chart, with values in `E = ℚ^b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearPfaffianForm {
    data: ConstantRelativeConnection,
}

impl LinearPfaffianForm {
    pub fn new(
        n: usize,
        f_rank: usize,
        e_rank: usize,
        l: RationalMatrix,
        c: Vec<RationalMatrix>,
    ) -> Result<Self, PfaffianError> {
        Ok(Self {
            data: ConstantRelativeConnection::new(n, f_rank, e_rank, l, c)?,
        })
    }

    /// Forms share the connection file format.
    pub fn from_file(file: &ConnectionFile) -> Result<Self, PfaffianError> {
        Ok(Self {
            data: ConstantRelativeConnection::from_file(file)?,
        })
    }

    pub fn to_file(&self) -> ConnectionFile {
        self.data.to_file()
    }

    pub fn n(&self) -> usize {
        self.data.n()
    }

    pub fn f_rank(&self) -> usize {
        self.data.f_rank()
    }

    pub fn e_rank(&self) -> usize {
        self.data.e_rank()
    }

    pub fn l(&self) -> &RationalMatrix {
        self.data.l()
    }

    pub fn coefficient(&self, direction: usize) -> &RationalMatrix {
        self.data.coefficient(direction)
    }
}

/// Reads a connection as the linear 1-form carried by the same data.
pub fn to_form(c: &ConstantRelativeConnection) -> LinearPfaffianForm {
    LinearPfaffianForm { data: c.clone() }
}

/// Reads a linear 1-form back as a relative connection.
pub fn to_connection(f: &LinearPfaffianForm) -> ConstantRelativeConnection {
    f.data.clone()
}

/// The matrix `[C(·)e | l]` of `θ` at the fiber point `e`, acting on
/// `V ⊕ F` coordinates.
fn form_matrix_at(f: &LinearPfaffianForm, e: &[Rational]) -> RationalMatrix {
    let (n, a, b) = (f.n(), f.f_rank(), f.e_rank());
    RationalMatrix::from_fn(b, n + a, |row, col| {
        if col < n {
            (0..a)
                .map(|s| f.coefficient(col).entry(row, s).clone() * e[s].clone())
                .fold(Rational::zero(), |acc, t| acc + t)
        } else {
            f.l().entry(row, col - n).clone()
        }
    })
}

/// Kernel of `θ` at the fiber point `e`, as a subspace of `V ⊕ F`.
pub fn kernel_distribution(
    f: &LinearPfaffianForm,
    e: &[Rational],
) -> Result<Subspace, PfaffianError> {
    if e.len() != f.f_rank() {
        return Err(PfaffianError::FiberPointLength {
            expected: f.f_rank(),
            got: e.len(),
        });
    }
    Ok(form_matrix_at(f, e).kernel())
}

/// The vertical tangent space `0 ⊕ F` inside `V ⊕ F`.
fn vertical_space(n: usize, a: usize) -> Subspace {
    RationalMatrix::from_fn(n, n + a, |row, col| {
        if row == col {
            rat(1)
        } else {
            Rational::zero()
        }
    })
    .kernel()
}

/// Structural facts about the kernel distribution of a linear 1-form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PfaffianCheck {
    /// The kernel plus the vertical space spans `V ⊕ F` at every fiber
    /// point (verified on basis probes, which decide the linear condition).
    pub transversal: bool,
    /// Rank of the vertical part `ker θ ∩ (0 ⊕ F) = 0 ⊕ ker l`.
    pub vertical_part_rank: usize,
    /// The vertical part is a constant subbundle of a vector bundle, so it
    /// carries fiber-constant frames with vanishing brackets; involutivity
    /// is certified by that structural argument rather than a bracket
    /// computation.
    pub vertically_involutive: bool,
}

/// Checks transversality and the vertical part of the kernel distribution.
///
/// Transversality at `e` says `ker θ_e + (0 ⊕ F) = V ⊕ F`; the fiber points
/// where it fails form a linear subspace, so probing the origin and every
/// basis vector of `F` decides the condition everywhere.
pub fn check_pfaffian(f: &LinearPfaffianForm) -> PfaffianCheck {
    let (n, a) = (f.n(), f.f_rank());
    let vertical = vertical_space(n, a);
    let origin = vec![Rational::zero(); a];
    let mut probes = vec![origin.clone()];
    for t in 0..a {
        let mut e = origin.clone();
        e[t] = rat(1);
        probes.push(e);
    }
    let transversal = probes.iter().all(|e| {
        kernel_distribution(f, e)
            .expect("probe length matches the fiber rank")
            .sum(&vertical)
            .expect("both live in V ⊕ F")
            .is_full()
    });
    let vertical_part_rank = kernel_distribution(f, &origin)
        .expect("probe length matches the fiber rank")
        .intersect(&vertical)
        .expect("both live in V ⊕ F")
        .dim();
    PfaffianCheck {
        transversal,
        vertical_part_rank,
        vertically_involutive: true,
    }
}

/// A polynomial map from an `vars`-dimensional chart into `ℚ^dim`, stored
/// as one coefficient vector per exponent multi-index, with all-zero
/// coefficients pruned so equality is representation-independent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolynomialMap {
    vars: usize,
    dim: usize,
    coeffs: BTreeMap<Vec<usize>, Vec<Rational>>,
}

impl PolynomialMap {
    pub fn new(vars: usize, dim: usize) -> Self {
        Self {
            vars,
            dim,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Sets (or clears, when zero) the coefficient vector of one monomial.
    pub fn set_coefficient(
        &mut self,
        exponent: &[usize],
        value: &[Rational],
    ) -> Result<(), PfaffianError> {
        if exponent.len() != self.vars {
            return Err(PfaffianError::ExponentLength {
                expected: self.vars,
                got: exponent.len(),
            });
        }
        if value.len() != self.dim {
            return Err(PfaffianError::CoefficientLength {
                expected: self.dim,
                got: value.len(),
            });
        }
        if value.iter().all(Rational::is_zero) {
            self.coeffs.remove(exponent);
        } else {
            self.coeffs.insert(exponent.to_vec(), value.to_vec());
        }
        Ok(())
    }

    /// The coefficient vector of one monomial (zero when absent).
    pub fn coefficient(&self, exponent: &[usize]) -> Vec<Rational> {
        self.coeffs
            .get(exponent)
            .cloned()
            .unwrap_or_else(|| vec![Rational::zero(); self.dim])
    }

    /// Monomial exponents with a nonzero coefficient vector.
    pub fn support(&self) -> impl Iterator<Item = &Vec<usize>> {
        self.coeffs.keys()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// One scalar component as a standalone polynomial.
    fn component(&self, index: usize) -> ScalarPoly {
        let mut out = ScalarPoly::new();
        for (exp, value) in &self.coeffs {
            if !value[index].is_zero() {
                out.insert(exp.clone(), value[index].clone());
            }
        }
        out
    }
}

/// Scalar polynomial: exponent vector → coefficient, zeros pruned.
type ScalarPoly = BTreeMap<Vec<usize>, Rational>;

fn scalar_constant(vars: usize, value: Rational) -> ScalarPoly {
    let mut out = ScalarPoly::new();
    if !value.is_zero() {
        out.insert(vec![0; vars], value);
    }
    out
}

fn scalar_add_scaled(target: &mut ScalarPoly, source: &ScalarPoly, scale: &Rational) {
    for (exp, coeff) in source {
        let entry = target.entry(exp.clone()).or_insert_with(Rational::zero);
        *entry += coeff.clone() * scale.clone();
        if entry.is_zero() {
            target.remove(exp);
        }
    }
}

fn scalar_product(p: &ScalarPoly, q: &ScalarPoly) -> ScalarPoly {
    let mut out = ScalarPoly::new();
    for (ea, ca) in p {
        for (eb, cb) in q {
            let exp: Vec<usize> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
            let entry = out.entry(exp.clone()).or_insert_with(Rational::zero);
            *entry += ca.clone() * cb.clone();
            if entry.is_zero() {
                out.remove(&exp);
            }
        }
    }
    out
}

fn scalar_derivative(p: &ScalarPoly, direction: usize) -> ScalarPoly {
    let mut out = ScalarPoly::new();
    for (exp, coeff) in p {
        if exp[direction] == 0 {
            continue;
        }
        let mut shifted = exp.clone();
        shifted[direction] -= 1;
        out.insert(shifted, coeff.clone() * rat(exp[direction] as i64));
    }
    out
}

fn check_section_shape(
    n: usize,
    a: usize,
    s: &PolynomialMap,
) -> Result<(), PfaffianError> {
    if s.vars() != n || s.dim() != a {
        return Err(PfaffianError::SectionShape {
            expected_vars: n,
            expected_dim: a,
            vars: s.vars(),
            dim: s.dim(),
        });
    }
    Ok(())
}

/// The connection applied to a polynomial section: one `E`-valued
/// polynomial per direction, `l(∂_i s) + C(X_i) s`, computed directly on
/// the coefficient table (the derivative is an index shift with a
/// multiplier; no polynomial multiplication happens here).
pub fn connection_applied(
    c: &ConstantRelativeConnection,
    s: &PolynomialMap,
) -> Result<Vec<PolynomialMap>, PfaffianError> {
    let (n, a, b) = (c.n(), c.f_rank(), c.e_rank());
    check_section_shape(n, a, s)?;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut table: BTreeMap<Vec<usize>, Vec<Rational>> = BTreeMap::new();
        let mut add = |exp: Vec<usize>, value: Vec<Rational>| {
            let entry = table.entry(exp).or_insert_with(|| vec![Rational::zero(); b]);
            for (slot, term) in entry.iter_mut().zip(value) {
                *slot += term;
            }
        };
        for exp in s.support() {
            let coeff = s.coefficient(exp);
            add(exp.clone(), c.coefficient(i).apply(&coeff)?);
            if exp[i] > 0 {
                let mut lowered = exp.clone();
                lowered[i] -= 1;
                let scaled: Vec<Rational> = c
                    .l()
                    .apply(&coeff)?
                    .into_iter()
                    .map(|v| v * rat(exp[i] as i64))
                    .collect();
                add(lowered, scaled);
            }
        }
        let mut poly = PolynomialMap::new(n, b);
        for (exp, value) in table {
            poly.set_coefficient(&exp, &value)?;
        }
        out.push(poly);
    }
    Ok(out)
}

/// The pull-back `s*θ`: one `E`-valued polynomial per direction, computed
/// on the form side by assembling the polynomial-entried matrix of `θ`
/// along the graph of `s` and multiplying it against the graph's tangent
/// vectors `X_i ⊕ ∂_i s` with generic polynomial arithmetic.
pub fn pullback_along(
    f: &LinearPfaffianForm,
    s: &PolynomialMap,
) -> Result<Vec<PolynomialMap>, PfaffianError> {
    let (n, a, b) = (f.n(), f.f_rank(), f.e_rank());
    check_section_shape(n, a, s)?;
    let components: Vec<ScalarPoly> = (0..a).map(|t| s.component(t)).collect();

    // θ along the graph: row w, first n columns carry C(X_j) s(x), the
    // last a columns carry the constants of l.
    let mut theta: Vec<Vec<ScalarPoly>> = Vec::with_capacity(b);
    for w in 0..b {
        let mut row = Vec::with_capacity(n + a);
        for j in 0..n {
            let mut entry = ScalarPoly::new();
            for (t, component) in components.iter().enumerate() {
                scalar_add_scaled(&mut entry, component, f.coefficient(j).entry(w, t));
            }
            row.push(entry);
        }
        for t in 0..a {
            row.push(scalar_constant(n, f.l().entry(w, t).clone()));
        }
        theta.push(row);
    }

    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut tangent: Vec<ScalarPoly> = Vec::with_capacity(n + a);
        for j in 0..n {
            tangent.push(scalar_constant(n, if i == j { rat(1) } else { Rational::zero() }));
        }
        for component in &components {
            tangent.push(scalar_derivative(component, i));
        }
        let mut poly = PolynomialMap::new(n, b);
        let mut table: BTreeMap<Vec<usize>, Vec<Rational>> = BTreeMap::new();
        for (w, row) in theta.iter().enumerate() {
            let mut value = ScalarPoly::new();
            for (entry, factor) in row.iter().zip(&tangent) {
                let product = scalar_product(entry, factor);
                scalar_add_scaled(&mut value, &product, &rat(1));
            }
            for (exp, coeff) in value {
                table
                    .entry(exp)
                    .or_insert_with(|| vec![Rational::zero(); b])[w] = coeff;
            }
        }
        for (exp, value) in table {
            poly.set_coefficient(&exp, &value)?;
        }
        out.push(poly);
    }
    Ok(out)
}
