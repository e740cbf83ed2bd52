//! A numerical laboratory for the Fredholm index on l2(N).
//!
//! The crate computes the index of Toeplitz operators with invertible
//! trigonometric-polynomial symbols, the unilateral shift, compact
//! perturbations of scalars, and products thereof, by three independent
//! engines:
//!
//! * a topological engine (minus the winding number of the symbol, by
//!   phase unwrapping and by the contour integral of f'/f),
//! * an analytic engine (dim ker - dim coker counted from small singular
//!   values of tall rectangular finite sections),
//! * a K-theoretic engine (the defect-trace series of the operator against
//!   its parametrix, evaluated from Fourier coefficients).
//!
//! Modules:
//!
//! * [`symbol`]: symbols on the unit circle, winding numbers, reciprocals,
//!   homotopy paths;
//! * [`operator`]: finite truncations, polar phases, defect operators;
//! * [`engines`]: the three index engines and their reconciliation;
//! * [`harness`]: corpus runner, invariance suites, reports, and the
//!   independent zero-counting oracle.

pub mod engines;
pub mod error;
pub mod harness;
pub mod operator;
pub mod symbol;

pub use engines::{
    index_analytic, index_analytic_spec, index_ktheoretic, index_of_spec,
    index_of_spec_with_bandwidth, index_scalar_plus_compact, index_topological, kernel_dimension,
    reconcile, EngineKind, IndexEstimate, IndexReport, LadderConfig, Verdict, DEFAULT_BANDWIDTH,
    RECIPROCAL_TAIL_LIMIT, SERIES_RESIDUAL_LIMIT,
};
pub use error::{Error, Result};
pub use harness::{
    builtin_corpus, emit_report, homotopy_suite, load_corpus, perturbation_suite, random_corpus,
    random_certified_symbol, random_perturbation, render_report, run_corpus,
    run_corpus_with_bandwidth, selftest, winding_oracle, ConfigEcho, CorpusEntry, EntryResult,
    HomotopyCase, HomotopyReport, PerturbationCase, PerturbationReport, Provenance, ReportFormat,
    SelftestReport, SuiteReport, SuiteSummary,
};
pub use operator::{
    defect_operators, polar_phase, toeplitz_truncation, OperatorSpec, PerturbationSpec,
    PhaseResult, TruncatedOperator,
};
pub use symbol::{
    path_check, reciprocal_coeffs, winding_contour, winding_phase_unwrap, PathCheck, Reciprocal,
    Symbol, SymbolPath, UnitCircleGrid, WindingResult,
};

/// Complex scalar used throughout.
pub type Complex = num_complex::Complex64;
