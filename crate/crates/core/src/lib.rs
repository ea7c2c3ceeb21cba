//! Covariant decomposable maps on matrix algebras.
//!
//! The crate builds Frobenius Hermitian bases of M_n, represents linear maps
//! through their coefficient matrices, classifies complete positivity and
//! complete copositivity, analyzes covariance with respect to the maximal
//! commutative subgroup of U(n) (the diagonal unitaries), constructs
//! finite-dimensional dilations of CP/coCP/decomposable maps, and integrates
//! D-divisible quantum master equations.

pub mod basis;
pub mod covariance;
pub mod dilation;
pub mod dynamics;
pub mod error;
pub mod json;
pub mod linmap;
pub mod mat;
pub mod report;
pub mod selftest;

pub use basis::{build_frobenius_basis, canonical_basis, FrobeniusBasis};
pub use covariance::{
    build_alpha, build_beta, classify_covariant_blocks, conj_diag_unitary, diag_unitary,
    is_conjugate_covariant, is_covariant, project_covariant, random_covariant_map,
    BlockClassification, CommutationVerdict, ConjugateCovariantBlocks, CovarianceReport,
    CovariantBlocks, CovariantKind, ProjectionMode, TorusElement,
};
pub use dilation::{
    costinespring, covariance_intertwiner, jordan_dilation, kraus_covariance_witness, stinespring,
    CovarianceIntertwiner, Dilation, DilationKind, KrausCovarianceWitness,
};
pub use dynamics::{
    dynamics_covariance_check, evolve, evolve_family, generator_covariance_report,
    propagator_covariance_check, semigroup_structure_check, DensityMatrix, EvolutionFamily,
    FamilyCovarianceReport, Generator, GeneratorCovarianceReport, SemigroupReport,
    TrajectoryPoint,
};
pub use error::{Error, Result};
pub use linmap::{
    decomposable_certificate, from_canonical_covariant, BasisTag, CanonicalCovariantForm,
    CertifiedDecomposable, CpReport, MapMatrix, OperatorSum,
};
