//! Numerical settings shared by computations and verification suites.

use crate::error::{Error, Result};
use crate::forms::Quadrature;
use crate::isotopy::CheckConfig;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub quadrature: Quadrature,
    /// Homogenize at `n = 2^k_max`.
    pub k_max: u32,
    /// RK4 steps for flow letters built from Hamiltonian specs.
    pub rk4_steps: usize,
    /// Time panels for the outer integrals of `R` and `S`.
    pub t_steps: usize,
    pub seed: u64,
    /// Iterations for translation numbers.
    pub n_rot: u64,
    /// Letter-step budget per homogenization in the verify suites; powers
    /// are lowered below `2^k_max` for words that would exceed it.
    pub work_budget: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            quadrature: Quadrature::default(),
            k_max: 10,
            rk4_steps: 256,
            t_steps: 32,
            seed: 20_240_611,
            n_rot: 1024,
            work_budget: 1 << 25,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.quadrature.validate()?;
        if self.k_max > 20 {
            return Err(Error::InvalidConfig(format!(
                "k_max {} is too large (max 20)",
                self.k_max
            )));
        }
        if self.rk4_steps < crate::isotopy::MIN_FLOW_STEPS {
            return Err(Error::InvalidConfig(format!(
                "rk4_steps must be at least {}",
                crate::isotopy::MIN_FLOW_STEPS
            )));
        }
        if self.t_steps == 0 || self.n_rot == 0 || self.work_budget == 0 {
            return Err(Error::InvalidConfig(
                "t_steps, n_rot and work_budget must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn check_config(&self) -> CheckConfig {
        CheckConfig {
            q: self.quadrature,
            t_steps: self.t_steps,
            k_max: self.k_max,
            n_rot: self.n_rot,
        }
    }
}
