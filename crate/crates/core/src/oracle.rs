//! Independent brute-force verifier: counts truncated polynomial solutions
//! of a constant-coefficient relative connection and compares the counts
//! against the prolongation tower.
//!
//! A truncated section is a polynomial map `s: chart → F` of total degree
//! at most `N`, stored as one coefficient vector per exponent multi-index.
//! The defining equations `l(∂_{X_i} s) + C(X_i) s = 0`, truncated to
//! degree `N − 1` (the derivative drops one degree, so this is the largest
//! degree on which the equation is fully determined by the ansatz), form
//! one exact linear system; the solution count is its nullity.
//!
//! This module deliberately computes that count from scratch: it enumerates
//! exponent vectors privately and assembles the system directly from the
//! structure matrices, sharing no code with the prolongation machinery it
//! is checking.  The comparison report presents both columns without
//! asserting equality in general — agreement is the expected outcome for
//! formally integrable systems, and a recorded obstruction is expected to
//! show up as a disagreement.

use crate::exactla::{rat, RationalMatrix};
use crate::relconn::{prolong_tower, ConstantRelativeConnection, TowerReport};
use std::collections::BTreeMap;

/// All exponent vectors in `n` variables of total degree at most
/// `max_degree`, listed degree by degree.
fn exponents_up_to(n: usize, max_degree: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for degree in 0..=max_degree {
        let mut current = vec![0usize; n];
        push_exponents_of_degree(n, degree, 0, &mut current, &mut out);
    }
    out
}

fn push_exponents_of_degree(
    n: usize,
    remaining: usize,
    slot: usize,
    current: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if slot + 1 == n {
        current[slot] = remaining;
        out.push(current.clone());
        return;
    }
    for value in (0..=remaining).rev() {
        current[slot] = value;
        push_exponents_of_degree(n, remaining - value, slot + 1, current, out);
    }
}

/// Dimension of the space of polynomial sections of total degree at most
/// `degree` that satisfy the connection equations truncated to degree
/// `degree − 1`.
pub fn truncated_solution_dim(c: &ConstantRelativeConnection, degree: usize) -> usize {
    let (n, a, b) = (c.n(), c.f_rank(), c.e_rank());
    let alphas = exponents_up_to(n, degree);
    let position: BTreeMap<&[usize], usize> = alphas
        .iter()
        .enumerate()
        .map(|(idx, alpha)| (alpha.as_slice(), idx))
        .collect();
    let betas: Vec<&Vec<usize>> = alphas
        .iter()
        .filter(|alpha| alpha.iter().sum::<usize>() + 1 <= degree)
        .collect();

    let rows = n * betas.len() * b;
    let cols = a * alphas.len();
    let mut system = RationalMatrix::zeros(rows, cols);
    for i in 0..n {
        for (bpos, beta) in betas.iter().enumerate() {
            let mut shifted = (*beta).clone();
            shifted[i] += 1;
            let apos = position[shifted.as_slice()];
            let factor = rat(shifted[i] as i64);
            for w in 0..b {
                let row = (i * betas.len() + bpos) * b + w;
                for s in 0..a {
                    // l acts on the degree-raised coefficient with the
                    // formal-derivative multiplier, C on the base one.
                    let derivative_term = c.l().entry(w, s).clone() * factor.clone();
                    system.set(row, apos * a + s, derivative_term);
                    system.set(
                        row,
                        position[beta.as_slice()] * a + s,
                        c.coefficient(i).entry(w, s).clone(),
                    );
                }
            }
        }
    }
    system.kernel().dim()
}

/// One joined row of the oracle-versus-tower comparison.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleRow {
    pub level: usize,
    /// The brute-force count at this truncation degree.
    pub truncated_dim: usize,
    /// The tower rank at this level, when the tower reached it.
    pub tower_rank: Option<usize>,
    /// Whether the two counts coincide (`None` past a tower stop).
    pub agree: Option<bool>,
}

/// The tower report joined with the independent solution counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleComparison {
    pub requested_levels: usize,
    pub tower: TowerReport,
    pub rows: Vec<OracleRow>,
}

/// Runs the prolongation tower and the truncated-polynomial count side by
/// side for every level up to `levels`.  The two columns are computed along
/// disjoint code paths and are presented without a general equality claim.
pub fn compare_with_tower(c: &ConstantRelativeConnection, levels: usize) -> OracleComparison {
    let tower = prolong_tower(c, levels);
    let rows = (0..=levels)
        .map(|level| {
            let truncated_dim = truncated_solution_dim(c, level);
            let tower_rank = tower
                .rows
                .iter()
                .find(|row| row.level == level)
                .map(|row| row.prolongation_rank);
            let agree = tower_rank.map(|rank| rank == truncated_dim);
            OracleRow {
                level,
                truncated_dim,
                tower_rank,
                agree,
            }
        })
        .collect();
    OracleComparison {
        requested_levels: levels,
        tower,
        rows,
    }
}
