//! Reconstruction of single-photon and two-photon absorption coefficients
//! of a 2-D medium from interior photoacoustic pressure data.
//!
//! The photon density solves the semilinear diffusion equation
//! `-div(D grad u) + sigma u + mu u^2 = 0` with Dirichlet illumination data,
//! and the measured interior pressure is `H = Gamma (sigma u + mu u^2)`.
//! Given pressure data for two illuminations, the pair `(sigma, mu)` is
//! recovered by minimizing a least-squares misfit with H1 and L1 penalties
//! under box constraints, using a variable inertial proximal method driven
//! by adjoint-state gradients.
//!
//! Everything is generic over the floating-point scalar through
//! [`Scalar`]; the `f64` aliases below cover common use.

pub mod adjoint;
pub mod elliptic;
pub mod error;
pub mod forward;
pub mod grid;
pub mod io;
pub mod phantom;
pub mod scalar;
pub mod study;
pub mod synth;
pub mod vip;

pub use adjoint::{
    evaluate, h1_smooth, h1_smooth_scaled, objective, reduced_gradients, smooth_pair,
    solve_adjoint, DataSet, Evaluation, GradientPair, GradientSpace, ObjectiveValue,
    ObjectiveWeights, OpticalModel, PicardSettings,
};
pub use elliptic::{assemble, assemble_neumann, EllipticSystem, NeumannSystem};
pub use error::{Error, Result};
pub use forward::{picard_solve, pressure_field, semilinear_residual, PicardReport};
pub use grid::{relative_l2_error, restrict, Grid2D, ScalarField};
pub use phantom::{
    derive_optics, make_disk, make_heartlung, make_phantom, make_shepplogan, PhantomKind,
    PhantomSpec,
};
pub use scalar::Scalar;
pub use study::{manufactured_convergence_study, ConvergenceRow, DEFAULT_LEVELS};
pub use synth::{synthesize, SynthOutput, SynthSpec, RNG_ID};
pub use vip::{
    backtrack_lipschitz, complementarity_residual, prox_shrink_project, recover_multipliers,
    vip_reconstruct, write_trace_csv, Backtrack, BoxBounds, KktMultipliers, ProxParams,
    ReconResult, ReconTraceRow, VipConfig, VipState,
};

/// Grid with `f64` coordinates.
pub type Grid = grid::Grid2D<f64>;
/// Field with `f64` values.
pub type Field = grid::ScalarField<f64>;
