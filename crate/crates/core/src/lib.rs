//! Exact-arithmetic kernels for the formal theory of linear PDE systems:
//! tableaux and their prolongations, Spencer cohomology, constant-coefficient
//! relative connections with curvature obstructions, a truncated-jet solution
//! counter, and the linear Pfaffian correspondence.
//!
//! All computations run over arbitrary-precision rationals; every rank,
//! dimension, and subspace comparison is exact.

pub mod exactla;
pub mod multilinear;
pub mod oracle;
pub mod pfaffian;
pub mod relconn;
pub mod tableau;

/// Version tag carried by every serialized file and report.
pub const SCHEMA: &str = "spencer-lab/1";

pub use exactla::{LinAlgError, Rational, RationalMatrix, Subspace};
pub use oracle::{compare_with_tower, truncated_solution_dim, OracleComparison, OracleRow};
pub use pfaffian::{
    check_pfaffian, connection_applied, kernel_distribution, pullback_along, to_connection,
    to_form, LinearPfaffianForm, PfaffianCheck, PfaffianError, PolynomialMap,
};
pub use relconn::{
    finite_type_analysis, formal_integrability_report, prolong_tower, reduced_curvature,
    validate_compatible, CompatibilityReport, ConnectionFile, ConstantRelativeConnection,
    FiniteTypeReport, FormalIntegrabilityReport, IntegrabilityVerdict, JetPoint,
    ReducedCurvatureReport, RelConnError, TowerReport, TowerRow, TowerStop,
};
pub use tableau::{
    acyclicity_report, involutive_within_window, phi_spencer_cohomology, prolong, prolong_phi,
    prolongations, spencer_cohomology, stabilization_order, validate_tower, AcyclicityReport,
    CohomologyEntry, CohomologyTable, Tableau, TableauError, TableauFile, TableauMap, Tower,
    TowerValidation,
};
