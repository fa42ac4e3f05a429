//! Expected profit, CVaR and the risk-averse optimal contract for one window.
//!
//! The objective is `J(C) + alpha * CVaR(C)` with
//!
//! ```text
//! J(C)    = pi_r C + p [ -pi_p E(C - q)^+ + pi_e E min(C, q) ]
//! CVaR(C) = pi_r C + p / (1 - c_hat) * ∫_tail [pi_e q - pi_p (C - q)] dF
//! ```
//!
//! where the tail is the lowest `1 - c_hat` of probability mass. With that
//! tail the CVaR is affine in `C` with slope `pi_r - p pi_p`, the objective is
//! concave, and its maximiser is the quantile of
//!
//! ```text
//! psi = (pi_r + p pi_e + alpha (pi_r - p pi_p)) / (p (pi_p + pi_e))
//! ```
//!
//! clipped to `[0, c_max]`.

use serde::{Deserialize, Serialize};

use crate::distribution::{CurtailmentDistribution, NormalDistribution};
use crate::program::ProgramTerms;
use crate::{normal, Error, Result};

/// Which bound, if any, the optimal contract was clipped to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Clipping {
    None,
    Low,
    High,
}

impl Clipping {
    pub fn as_str(self) -> &'static str {
        match self {
            Clipping::None => "none",
            Clipping::Low => "low",
            Clipping::High => "high",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractDecision {
    pub c_star: f64,
    /// Argument of the quantile function.
    pub psi: f64,
    pub clipped_low: bool,
    pub clipped_high: bool,
    pub expected_profit: f64,
    pub cvar: f64,
    pub objective: f64,
    /// Capability quantile at `1 - c_hat`.
    pub tail_cutoff: f64,
}

impl ContractDecision {
    pub fn clipping(&self) -> Clipping {
        match (self.clipped_low, self.clipped_high) {
            (true, _) => Clipping::Low,
            (_, true) => Clipping::High,
            _ => Clipping::None,
        }
    }

    /// True when the contract sits below the CVaR tail cutoff.
    pub fn below_tail_cutoff(&self) -> bool {
        self.c_star < self.tail_cutoff
    }
}

/// Expected profit of contracting `c` for one window.
pub fn expected_profit(terms: &ProgramTerms, dist: &CurtailmentDistribution, c: f64) -> Result<f64> {
    terms.check_contract(c)?;
    Ok(expected_profit_unchecked(terms, dist, c))
}

fn expected_profit_unchecked(terms: &ProgramTerms, dist: &CurtailmentDistribution, c: f64) -> f64 {
    terms.pi_r() * c
        + terms.p()
            * (-terms.pi_p() * dist.shortfall_expectation(c)
                + terms.pi_e() * dist.expected_delivery(c))
}

/// Conditional value at risk of the window's profit at level `c_hat`.
pub fn cvar(terms: &ProgramTerms, dist: &CurtailmentDistribution, c: f64) -> Result<f64> {
    if c.is_nan() || c < 0.0 {
        return Err(Error::InvalidArgument(format!("contract must be >= 0, got {c}")));
    }
    let tail_mass = 1.0 - terms.c_hat();
    let tail_q = dist.tail_expectation(tail_mass)?;
    let tail_integral = (terms.pi_e() + terms.pi_p()) * tail_q - terms.pi_p() * c * tail_mass;
    Ok(terms.pi_r() * c + terms.p() / tail_mass * tail_integral)
}

/// Risk-adjusted objective `J(c) + alpha * CVaR(c)`.
pub fn objective(terms: &ProgramTerms, dist: &CurtailmentDistribution, c: f64) -> Result<f64> {
    let j = expected_profit(terms, dist, c)?;
    if terms.alpha() == 0.0 {
        return Ok(j);
    }
    Ok(j + terms.alpha() * cvar(terms, dist, c)?)
}

/// The quantile argument `psi`. Undefined when no event can occur.
pub fn quantile_argument(terms: &ProgramTerms) -> Result<f64> {
    let denom = terms.p() * (terms.pi_p() + terms.pi_e());
    if terms.p() == 0.0 {
        return Err(Error::NoEvents);
    }
    if denom == 0.0 {
        return Err(Error::InvalidTerms(
            "pi_p + pi_e = 0 leaves the contract unpriced".into(),
        ));
    }
    Ok((terms.pi_r() + terms.p() * terms.pi_e() + terms.alpha() * terms.no_asset_margin()) / denom)
}

/// Risk aversion at which `psi` reaches zero and the contract collapses to 0.
pub fn collapse_alpha(terms: &ProgramTerms) -> f64 {
    (terms.pi_r() + terms.p() * terms.pi_e()) / -terms.no_asset_margin()
}

/// Optimal contract from the quantile of `psi`, clipped to `[0, c_max]`.
pub fn optimal_contract(
    terms: &ProgramTerms,
    dist: &CurtailmentDistribution,
) -> Result<ContractDecision> {
    let psi = quantile_argument(terms)?;
    let (c_star, clipped_low, clipped_high) = if psi <= 0.0 {
        (0.0, true, false)
    } else if psi >= 1.0 {
        if terms.c_max().is_infinite() {
            return Err(Error::UnboundedContract { psi });
        }
        (terms.c_max(), false, true)
    } else {
        let q = dist.lower_quantile(psi)?;
        if q < 0.0 {
            (0.0, true, false)
        } else if q > terms.c_max() {
            (terms.c_max(), false, true)
        } else {
            (q, false, false)
        }
    };
    decision_at(terms, dist, c_star, psi, clipped_low, clipped_high)
}

fn decision_at(
    terms: &ProgramTerms,
    dist: &CurtailmentDistribution,
    c_star: f64,
    psi: f64,
    clipped_low: bool,
    clipped_high: bool,
) -> Result<ContractDecision> {
    let expected_profit = expected_profit(terms, dist, c_star)?;
    let cvar = cvar(terms, dist, c_star)?;
    Ok(ContractDecision {
        c_star,
        psi,
        clipped_low,
        clipped_high,
        expected_profit,
        cvar,
        objective: expected_profit + terms.alpha() * cvar,
        tail_cutoff: dist.quantile(1.0 - terms.c_hat())?,
    })
}

/// Closed-form profit at the optimum next to the direct evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfitFormulaCheck {
    /// `p (pi_p + pi_e) ∫_0^C* q f(q) dq - alpha (pi_r - p pi_p) C*`.
    pub formula: f64,
    /// Expected profit evaluated directly at `C*`.
    pub expected_profit: f64,
    pub residual: f64,
}

/// The closed form holds wherever `F(C*) = psi`; for step CDFs it is
/// approximate and the residual says by how much.
pub fn optimal_profit_formula(
    terms: &ProgramTerms,
    dist: &CurtailmentDistribution,
    c_star: f64,
) -> Result<ProfitFormulaCheck> {
    let formula = terms.p() * (terms.pi_p() + terms.pi_e()) * dist.partial_expectation(c_star)
        - terms.alpha() * terms.no_asset_margin() * c_star;
    let expected_profit = expected_profit(terms, dist, c_star)?;
    Ok(ProfitFormulaCheck {
        formula,
        expected_profit,
        residual: formula - expected_profit,
    })
}

/// Brute-force maximiser of the objective on `{0, r, 2r, ..., c_upper}`.
///
/// `c_upper` is `min(c_max, top of the distribution)`; ties go to the smaller
/// contract.
pub fn grid_search_optimal(
    terms: &ProgramTerms,
    dist: &CurtailmentDistribution,
    resolution: f64,
) -> Result<f64> {
    if !(resolution > 0.0) || !resolution.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "resolution must be > 0, got {resolution}"
        )));
    }
    let upper = dist.search_upper().min(terms.c_max());
    let steps = (upper / resolution).floor() as u64;
    let eval = |c: f64| objective(terms, dist, c);
    let (mut best_c, mut best_v) = (0.0, eval(0.0)?);
    let mut consider = |c: f64| -> Result<()> {
        let v = eval(c)?;
        if v > best_v {
            best_c = c;
            best_v = v;
        }
        Ok(())
    };
    for k in 1..=steps {
        consider(k as f64 * resolution)?;
    }
    if (steps as f64) * resolution < upper {
        consider(upper)?;
    }
    Ok(best_c)
}

/// Standard normal quantile of `psi`: `C* = mu + gamma * sigma` for any
/// distribution symmetric about its mean.
pub fn gamma(terms: &ProgramTerms) -> Result<f64> {
    let psi = quantile_argument(terms)?;
    if !(psi > 0.0 && psi < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "gamma needs psi in (0, 1), got {psi}"
        )));
    }
    Ok(normal::quantile(psi))
}

/// Coefficient of `sigma` in the optimal expected profit of a normal asset:
/// `-p (pi_p + pi_e) phi(gamma) - alpha (pi_r - p pi_p) gamma`.
pub fn profit_sigma_coefficient(terms: &ProgramTerms, gamma: f64) -> f64 {
    -terms.p() * (terms.pi_p() + terms.pi_e()) * normal::pdf(gamma)
        - terms.alpha() * terms.no_asset_margin() * gamma
}

/// Finite-difference sensitivities of the optimum to the capability spread.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaSensitivity {
    pub gamma: f64,
    /// `dJ*/dsigma`: expected profit at the optimal contract.
    pub d_profit: f64,
    /// Derivative of the risk-adjusted objective at the optimum.
    pub d_objective: f64,
    /// `dC*/dsigma`, equal to `gamma` for normals.
    pub d_contract: f64,
    /// Closed-form coefficient for comparison with `d_profit`.
    pub coefficient: f64,
}

pub fn sigma_sensitivity(
    terms: &ProgramTerms,
    mu: f64,
    sigma: f64,
    delta: f64,
) -> Result<SigmaSensitivity> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("delta must be > 0, got {delta}")));
    }
    if !(sigma > delta) {
        return Err(Error::InvalidArgument(format!(
            "sigma must exceed delta, got sigma={sigma}, delta={delta}"
        )));
    }
    let at = |s: f64| -> Result<ContractDecision> {
        let dist = CurtailmentDistribution::Normal(NormalDistribution::new(mu, s)?);
        optimal_contract(terms, &dist)
    };
    let (hi, lo) = (at(sigma + delta)?, at(sigma - delta)?);
    let g = gamma(terms)?;
    let span = 2.0 * delta;
    Ok(SigmaSensitivity {
        gamma: g,
        d_profit: (hi.expected_profit - lo.expected_profit) / span,
        d_objective: (hi.objective - lo.objective) / span,
        d_contract: (hi.c_star - lo.c_star) / span,
        coefficient: profit_sigma_coefficient(terms, g),
    })
}

/// Location of the sign change in the profit's sigma coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaThreshold {
    pub gamma_hat: f64,
    /// Final bisection bracket `[lo, hi]`: coefficient `< 0` at `lo`, `>= 0` at `hi`.
    pub bracket: (f64, f64),
}

/// Bisection for the `gamma > 0` where extra spread stops costing profit.
/// Only exists under risk aversion.
pub fn gamma_threshold(terms: &ProgramTerms, tolerance: f64) -> Option<GammaThreshold> {
    let coef = |g| profit_sigma_coefficient(terms, g);
    if terms.alpha() * terms.no_asset_margin() >= 0.0 || coef(0.0) >= 0.0 {
        return None;
    }
    let mut hi = 1.0;
    while coef(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return None;
        }
    }
    let mut lo = 0.0;
    while hi - lo >= tolerance {
        let mid = 0.5 * (lo + hi);
        if coef(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(GammaThreshold {
        gamma_hat: 0.5 * (lo + hi),
        bracket: (lo, hi),
    })
}

/// One row of a risk-aversion sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub alpha: f64,
    pub decision: ContractDecision,
}

/// Optimal decisions for `n` evenly spaced risk-aversion weights in `[a0, a1]`.
pub fn alpha_sweep(
    terms: &ProgramTerms,
    dist: &CurtailmentDistribution,
    a0: f64,
    a1: f64,
    n: usize,
) -> Result<Vec<SweepPoint>> {
    alpha_grid(a0, a1, n)?
        .into_iter()
        .map(|alpha| {
            let t = terms.with_alpha(alpha)?;
            Ok(SweepPoint {
                alpha,
                decision: optimal_contract(&t, dist)?,
            })
        })
        .collect()
}

pub fn alpha_grid(a0: f64, a1: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 || !(a0 >= 0.0) || !(a1 >= a0) || !a1.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "sweep needs 0 <= a0 <= a1 and n >= 1, got {a0}:{a1}:{n}"
        )));
    }
    if n == 1 {
        return Ok(vec![a0]);
    }
    let step = (a1 - a0) / (n - 1) as f64;
    Ok((0..n).map(|i| a0 + step * i as f64).collect())
}
