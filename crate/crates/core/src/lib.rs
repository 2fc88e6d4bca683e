//! Tri-state binarization of gene expression against a signed regulatory
//! graph, plus Hill-kinetics simulation of Boolean networks and the
//! evaluation loop tying the two together.

pub mod binarize;
pub mod eval;
pub mod expression;
pub mod gene;
pub mod graph;
pub mod hill;
pub mod integrate;
pub mod logic;
pub mod tri;

pub use binarize::{
    binarize, binarize_batch, binarize_prepared, BinarizeError, BinarizerConfig, BinaryProfile,
    Biomarkers, Provenance, SweepEvent,
};
pub use eval::{
    dissimilarity, parameter_sweep, run_validation, Dissimilarity, RunOutcome, SweepConfig,
    SweepReport, ValidateError, ValidationReport,
};
pub use expression::{
    min_max_normalize, min_max_normalize_rows, parse_expression_csv, ExpressionVector,
    NormalizationMode, RawSample,
};
pub use gene::{GeneId, InteractionSign};
pub use graph::{GraphError, RegulatoryGraph};
pub use hill::{hill_minus, hill_plus, HillError, HillOdeSystem, HillParams};
pub use integrate::{
    detect_steady_state, extract_snapshots, integrate_rk4, threshold_binarize, IntegrateError,
    IntegrationConfig, Snapshot, SnapshotPolicy, Trajectory,
};
pub use logic::{BoolExpr, BooleanNetwork, LogicError};
pub use tri::TriState;
