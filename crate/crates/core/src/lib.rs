//! Single-shot gate synthesis for Heisenberg-coupled qubit chains driven by a
//! Zeeman-type control field on one actuator qubit.
//!
//! The modules follow the pipeline: build operators ([`hamiltonians`]),
//! pick a target ([`targets`]), evolve piecewise-constant schedules
//! ([`propagation`]), optimize them ([`optimize`]), verify controllability
//! ([`dla`]), band-limit the optimum ([`bandlimit`]) and drive it all from
//! reproducible experiments ([`experiments`]).

pub mod bandlimit;
pub mod dla;
pub mod error;
pub mod experiments;
pub mod hamiltonians;
pub mod linalg;
pub mod optimize;
pub mod propagation;
pub mod targets;

pub use error::{Error, Result};
pub use hamiltonians::{build_control_generators, build_drift, Coupling, SpinChainSpec};
pub use linalg::{Operator, C64};
pub use optimize::{global_search, GradientMode, OptimizationReport, OptimizerConfig};
pub use propagation::{expm_hermitian_generator, propagate, trace_fidelity, ControlSequence};
pub use targets::{GateKind, TargetGate};
