//! Thermodynamic state functions shared by every solver stage.

use crate::error::{Error, Result};

/// Constants fixing the one-dimensional background problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasParams {
    gamma: f64,
    j0: f64,
    s0: f64,
    b0: f64,
    rho0: f64,
    e0: f64,
}

impl GasParams {
    pub fn new(gamma: f64, j0: f64, s0: f64, b0: f64, rho0: f64, e0: f64) -> Result<Self> {
        let bad = |msg: &str| Err(Error::InvalidParams(msg.to_string()));
        if !(gamma > 1.0) || !gamma.is_finite() {
            return bad("gamma must exceed 1");
        }
        if !(j0 > 0.0) || !j0.is_finite() {
            return bad("J0 must be positive");
        }
        if !(s0 > 0.0) || !s0.is_finite() {
            return bad("S0 must be positive");
        }
        if !e0.is_finite() {
            return bad("E0 must be finite");
        }
        let gp = GasParams { gamma, j0, s0, b0, rho0, e0 };
        let rs = gp.rho_s();
        if !(b0 > 0.0 && b0 < rs) {
            return bad(&format!("b0 = {b0} must lie in (0, rho_s) with rho_s = {rs}"));
        }
        if !(rho0 > 0.0) {
            return bad("rho0 must be positive");
        }
        if !(rho0 < rs) {
            return bad(&format!("rho0 not supersonic: rho0 = {rho0} >= rho_s = {rs}"));
        }
        Ok(gp)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn j0(&self) -> f64 {
        self.j0
    }
    pub fn s0(&self) -> f64 {
        self.s0
    }
    pub fn b0(&self) -> f64 {
        self.b0
    }
    pub fn rho0(&self) -> f64 {
        self.rho0
    }
    pub fn e0(&self) -> f64 {
        self.e0
    }

    /// Same constants with a different inlet field.
    pub fn with_e0(&self, e0: f64) -> Result<Self> {
        Self::new(self.gamma, self.j0, self.s0, self.b0, self.rho0, e0)
    }

    pub fn with_rho0(&self, rho0: f64) -> Result<Self> {
        Self::new(self.gamma, self.j0, self.s0, self.b0, rho0, self.e0)
    }

    pub fn rho_s(&self) -> f64 {
        sonic_density(self)
    }

    /// m0 = J0 S0^{1/(gamma-1)}.
    pub fn m0(&self) -> f64 {
        self.j0 * self.s0.powf(1.0 / (self.gamma - 1.0))
    }

    /// Bernoulli constant at the inlet, which is also Phi0(0).
    pub fn b_inlet(&self) -> f64 {
        let u0 = self.j0 / self.rho0;
        bernoulli(self.gamma, self.rho0, u0, self.s0)
    }

    /// gamma S0 rho^{gamma-1} - J0^2/rho^2: negative on the supersonic branch.
    pub fn sonic_gap(&self, rho: f64) -> f64 {
        self.gamma * self.s0 * rho.powf(self.gamma - 1.0) - self.j0 * self.j0 / (rho * rho)
    }
}

pub fn sonic_density(gp: &GasParams) -> f64 {
    (gp.j0 * gp.j0 / (gp.gamma * gp.s0)).powf(1.0 / (gp.gamma + 1.0))
}

/// gamma/(gamma-1) S rho^{gamma-1}.
pub fn enthalpy(gamma: f64, rho: f64, s: f64) -> f64 {
    gamma / (gamma - 1.0) * s * rho.powf(gamma - 1.0)
}

pub fn bernoulli(gamma: f64, rho: f64, speed: f64, s: f64) -> f64 {
    0.5 * speed * speed + enthalpy(gamma, rho, s)
}

pub fn pressure(gamma: f64, rho: f64, s: f64) -> f64 {
    s * rho.powf(gamma)
}

/// H(S, zeta): inverts the enthalpy.
pub fn density_law(gamma: f64, s: f64, zeta: f64) -> Result<f64> {
    let ratio = zeta / s;
    if !(ratio > 0.0) || !ratio.is_finite() {
        return Err(Error::NonPositiveArgument { zeta, s });
    }
    Ok(((gamma - 1.0) / gamma * ratio).powf(1.0 / (gamma - 1.0)))
}

/// H0(z, q) = H(S0, z - |q|^2/2).
pub fn density_law_isentropic(gp: &GasParams, z: f64, q: [f64; 2]) -> Result<f64> {
    density_law(gp.gamma, gp.s0, z - 0.5 * (q[0] * q[0] + q[1] * q[1]))
}

/// c^2 = (gamma-1)(z - |q|^2/2).
pub fn sound_speed_sq(gamma: f64, z: f64, q: [f64; 2]) -> Result<f64> {
    let zeta = z - 0.5 * (q[0] * q[0] + q[1] * q[1]);
    if !(zeta > 0.0) {
        return Err(Error::NonPositiveArgument { zeta, s: 1.0 });
    }
    Ok((gamma - 1.0) * zeta)
}

pub fn sound_speed(gamma: f64, z: f64, q: [f64; 2]) -> Result<f64> {
    sound_speed_sq(gamma, z, q).map(f64::sqrt)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowState {
    pub rho: f64,
    pub u: [f64; 2],
    pub s: f64,
    pub phi: f64,
}

impl FlowState {
    pub fn speed(&self) -> f64 {
        self.u[0].hypot(self.u[1])
    }

    pub fn pressure(&self, gamma: f64) -> f64 {
        pressure(gamma, self.rho, self.s)
    }

    pub fn enthalpy(&self, gamma: f64) -> f64 {
        enthalpy(gamma, self.rho, self.s)
    }

    pub fn bernoulli(&self, gamma: f64) -> f64 {
        bernoulli(gamma, self.rho, self.speed(), self.s)
    }
}

/// K = B - Phi.
pub fn pseudo_bernoulli(gamma: f64, state: &FlowState) -> f64 {
    state.bernoulli(gamma) - state.phi
}
