//! Step-size strategies: Armijo backtracking, the adaptive closed form and
//! the diminishing schedule `2 / (k + 2)`.

use crate::error::{Error, Result};

/// Parameters of the Armijo backtracking line search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArmijoParams {
    /// Sufficient-decrease constant in `(0, 1)`.
    pub zeta: f64,
    /// Lower contraction bound.
    pub omega1: f64,
    /// Upper contraction bound, `0 < omega1 < omega2 < 1`.
    pub omega2: f64,
    pub max_backtracks: usize,
}

impl Default for ArmijoParams {
    fn default() -> Self {
        Self {
            zeta: 0.1,
            omega1: 0.05,
            omega2: 0.95,
            max_backtracks: 60,
        }
    }
}

impl ArmijoParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.zeta > 0.0
            && self.zeta < 1.0
            && self.omega1 > 0.0
            && self.omega1 < self.omega2
            && self.omega2 < 1.0;
        if !ok {
            return Err(Error::Config(format!(
                "Armijo parameters need 0 < zeta < 1 and 0 < omega1 < omega2 < 1, got {self:?}"
            )));
        }
        Ok(())
    }

    /// Contraction factor between trials, the midpoint of `[omega1, omega2]`.
    pub fn contraction(&self) -> f64 {
        0.5 * (self.omega1 + self.omega2)
    }
}

/// How the solver picks `lambda_k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepSizeStrategy {
    Armijo(ArmijoParams),
    /// `min(1, -theta / (L dist^2))` with smoothness constant `L`.
    Adaptive { lipschitz: f64 },
    Diminishing,
}

impl StepSizeStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            StepSizeStrategy::Armijo(_) => "armijo",
            StepSizeStrategy::Adaptive { .. } => "adaptive",
            StepSizeStrategy::Diminishing => "diminishing",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            StepSizeStrategy::Armijo(p) => p.validate(),
            StepSizeStrategy::Adaptive { lipschitz } if !(*lipschitz > 0.0) => Err(
                Error::Config(format!("adaptive step needs L > 0, got {lipschitz}")),
            ),
            _ => Ok(()),
        }
    }
}

/// Outcome of [`armijo_search`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArmijoOutcome {
    pub lambda: f64,
    pub backtracks: usize,
    /// `true` when no trial satisfied the decrease condition; `lambda` is then
    /// the smallest trial.
    pub stalled: bool,
}

/// Backtracking search for `F(R_x(lambda d)) <= F(x) + zeta lambda theta`,
/// starting at `lambda = 1`. `f_at(lambda)` evaluates `F(R_x(lambda d))`.
pub fn armijo_search(
    mut f_at: impl FnMut(f64) -> f64,
    f_x: f64,
    theta: f64,
    params: &ArmijoParams,
) -> Result<ArmijoOutcome> {
    params.validate()?;
    if !(theta < 0.0) {
        return Err(Error::Contract(format!(
            "Armijo search needs a negative gap, got {theta}"
        )));
    }
    let shrink = params.contraction();
    let mut lambda = 1.0;
    for backtracks in 0..=params.max_backtracks {
        if f_at(lambda) <= f_x + params.zeta * lambda * theta {
            return Ok(ArmijoOutcome {
                lambda,
                backtracks,
                stalled: false,
            });
        }
        if backtracks < params.max_backtracks {
            lambda *= shrink;
        }
    }
    Ok(ArmijoOutcome {
        lambda,
        backtracks: params.max_backtracks,
        stalled: true,
    })
}

/// `min(1, -theta / (L dist2))`, the minimizer over `(0, 1]` of
/// `lambda theta + (L/2) lambda^2 dist2`.
pub fn adaptive_step(theta: f64, lipschitz: f64, dist2: f64) -> Result<f64> {
    if !(theta < 0.0) || !(lipschitz > 0.0) || !(dist2 > 0.0) {
        return Err(Error::Contract(format!(
            "adaptive step needs theta < 0, L > 0 and dist^2 > 0, got theta = {theta}, L = {lipschitz}, dist^2 = {dist2}"
        )));
    }
    Ok((-theta / (lipschitz * dist2)).min(1.0))
}

/// `2 / (k + 2)`.
pub fn diminishing_step(k: usize) -> f64 {
    2.0 / (k as f64 + 2.0)
}
