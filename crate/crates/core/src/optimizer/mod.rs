//! Per-frame energy minimisation and the sequence fitting pipeline.
//!
//! The parameter vector is `[root translation | body joints | left hand |
//! right hand]`. Each frame minimises a robust reprojection error plus pose
//! priors, temporal smoothness, a standing prior and the linguistic
//! symmetry and invariance terms, using a trust-region Newton-CG solver with
//! Gauss-Newton curvature.

mod fit;
mod objective;
mod posefile;
mod solver;

pub use fit::{
    cold_start, fit_frame, lift_arms, fit_sequence, init_camera, scale_arms, ClassChoice, ConstraintFilter, FitConfig,
    FrameFit, SequenceConfig, SequenceFit, SequenceInputs,
};
pub use objective::{
    geman_mcclure, observations, Evaluation, FitState, FrameObjective, FrameTerms, Layout, ObjectiveConfig,
    ObjectiveWeights, Observation, TermBreakdown,
};
pub use posefile::{PoseFile, PoseHeader, PoseRecord};
pub use solver::{
    check_gradient, solve_trust_region_ncg, Convergence, FnObjective, Objective, SolveReport, SolverOptions,
    TraceEntry,
};
