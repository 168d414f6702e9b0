use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid gas parameters: {0}")]
    InvalidParams(String),
    #[error("density law needs zeta/S > 0, got zeta = {zeta}, S = {s}")]
    NonPositiveArgument { zeta: f64, s: f64 },
    #[error("hyperbolicity denominator c^2 - u1^2 = {0:e} is too close to zero")]
    SonicDenominator(f64),
    #[error("horizontal velocity u1 = {0:e} is too close to zero")]
    StagnationDenominator(f64),
    #[error("density reached the sonic value at x1 = {0}; the requested length exceeds the supersonic range")]
    SonicEncounter(f64),
    #[error("adaptive step underflow at x1 = {0} (blow-up proximity)")]
    StepFailure(f64),
    #[error("{0}")]
    NotApplicable(String),
    #[error("L = {length} admits no weight function with W > 0 on [0, L] (critical length {critical})")]
    LengthExceedsCritical { length: f64, critical: f64 },
    #[error("truncation m = {m} too high for {n2} quadrature nodes (need m <= {max})")]
    TruncationTooHigh { m: usize, n2: usize, max: usize },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("discrete system is numerically singular (zero pivot at row {0})")]
    SingularSystem(usize),
    #[error("post-solve residual {0:e} exceeds tolerance")]
    ResidualTooLarge(f64),
    #[error("fixed-point iteration did not converge in {iters} iterations (last difference {last:e})")]
    MaxIterExceeded { iters: usize, last: f64 },
    #[error("iterate left the admissible set: {0}")]
    IterateEscapedSet(String),
    #[error("streamfunction at the inlet is not strictly increasing (M1 = {value:e} at node ({i}, {j}))")]
    NonMonotoneStream { i: usize, j: usize, value: f64 },
    #[error("mass flux varies by {0:e} across x1; streamfunction ill-defined")]
    DivergenceTooLarge(f64),
    #[error("boundary data violates wall symmetry: {0}")]
    SymmetryViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
