//! Quasi-free Markovian dynamics of hybrid quantum-classical systems.
//!
//! A hybrid system couples `n` canonical quantum modes to `s` classical
//! coordinates on the phase space `Ξ = ℝ^{2n} ⊕ ℝ^s`. Quasi-free dynamics maps
//! every Weyl operator `W(ξ)` to `f_t(ξ) W(S_t ξ)`, with `S_t = e^{Zt}` and a
//! noise function built from a Lévy-Khintchine exponent. Everything in this
//! crate works at that level: Weyl descriptors, characteristic functions,
//! Gaussian moments, Wigner grids and Monte Carlo paths of the classical
//! component. No Hilbert-space operator is ever materialized.
//!
//! Module map:
//!
//! * [`phase_space`]: dimensions, symplectic form, Weyl composition law.
//! * [`levy`]: finite atomic Lévy measures and the exponent `ψ`.
//! * [`generator`]: parameter sets, block algebra, positivity, term
//!   decomposition and structural classifiers.
//! * [`semigroup`]: flow, noise function, charfn and moment propagation,
//!   multi-time classical statistics.
//! * [`states`] and [`grid`]: Gaussian states, admissibility, Wigner
//!   transforms, marginals and conditional decomposition.
//! * [`stochastic`]: Monte Carlo oracle for the classical component.
//! * [`exec`]: sequential/parallel execution backends.

pub mod error;
pub mod exec;
pub mod generator;
pub mod grid;
pub mod levy;
pub mod linalg;
pub mod phase_space;
pub mod quadrature;
pub mod semigroup;
pub mod states;
pub mod stochastic;

pub use error::{Error, Result};
pub use exec::Backend;
pub use generator::{
    check_no_information_flow, classify, decompose_terms, derive_blocks, validate_positivity,
    BlockView, DerivedMatrices, GeneratorFlags, GeneratorParams, GeneratorTermDecomposition,
    InformationFlowReport, PositivityReport, DEFAULT_POSITIVITY_TOL,
};
pub use grid::{wigner_from_charfn, CharFnGrid, GridAxis, GridSpec, WignerGrid};
pub use levy::{
    levy_marginal, psi_eval, validate_levy, LevyAtom, LevyExponentParams, LevyMeasure, Sector,
};
pub use phase_space::{
    make_phase_space, weyl_adjoint_conjugate, weyl_compose, PhaseSpace, PhaseSpaceDim,
    SectorProjections, SymplecticForm, WeylDescriptor,
};
pub use semigroup::{
    check_semigroup_law, evolve_charfn, flow, gaussian_propagate, multi_time_charfn,
    FlowOperator, NoiseFunctionEvaluator, PropagatedGaussian,
};
pub use states::{
    admissibility_check, conditional_decomposition, gaussian_charfn, marginals,
    AdmissibilityReport, CharacteristicFunction, ConditionalDecomposition, GaussianMarginal,
    HybridGaussianState,
};
pub use stochastic::{
    empirical_charfn, simulate_classical, simulate_hybrid_gaussian, ClassicalSdeModel,
    EmpiricalEstimate, InitialCondition, ScalarEstimate, SimulationConfig, TrajectoryEnsemble,
};

/// Complex double used for amplitudes and characteristic-function values.
pub type C64 = nalgebra::Complex<f64>;
