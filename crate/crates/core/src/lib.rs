//! Steady supersonic Euler-Poisson flow in a flat two-dimensional nozzle:
//! background construction, linearization, weighted energy estimates and
//! spectral/Picard solvers for the perturbed problems.

pub mod background;
pub mod banded;
pub mod error;
pub mod linearize;
pub mod linsolve;
pub mod model;
pub mod multiplier;
pub mod nonlinear;
pub mod quad;
pub mod spectral;

pub use background::{Background1D, BgPoint, CriticalAbscissas, OrbitClass, OrbitKind};
pub use error::{Error, Result};
pub use linsolve::{LinearProblem, LinearSolution, X1Scheme};
pub use model::{FlowState, GasParams};
pub use multiplier::{MultiplierConfig, WeightFunction};
pub use nonlinear::{BoundaryData, Diagnostics, IonPerturbation, IterationConfig, Resolution, SolutionBundle};
pub use spectral::{Basis, CosineSeries, Field2D, SineSeries, X2Grid};
