//! Program economics and per-window settlement.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default CVaR confidence level when none is given.
pub const DEFAULT_C_HAT: f64 = 0.95;

/// Three one-hour events per month spread over 720 hourly windows.
pub const DEFAULT_EVENT_PROBABILITY: f64 = 3.0 / 720.0;

/// Economic parameters of an incentive-based DR program, as seen by one asset.
///
/// Construct through [`ProgramTermsSpec`], which validates ranges and rejects
/// programs where contracting without any capability is profitable in
/// expectation (`pi_r - p * pi_p >= 0`) unless explicitly allowed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProgramTermsSpec", into = "ProgramTermsSpec")]
pub struct ProgramTerms {
    pi_e: f64,
    pi_r: f64,
    pi_p: f64,
    p: f64,
    alpha: f64,
    c_hat: f64,
    c_max: f64,
}

/// Unvalidated program terms: the JSON form, and a builder with defaults.
///
/// `c_max` absent means unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProgramTermsSpec {
    pub pi_e: f64,
    pub pi_r: f64,
    pub pi_p: f64,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default = "default_c_hat")]
    pub c_hat: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_max: Option<f64>,
}

fn default_p() -> f64 {
    DEFAULT_EVENT_PROBABILITY
}

fn default_c_hat() -> f64 {
    DEFAULT_C_HAT
}

impl Default for ProgramTermsSpec {
    fn default() -> Self {
        Self {
            pi_e: 0.0,
            pi_r: 0.0,
            pi_p: 0.0,
            p: DEFAULT_EVENT_PROBABILITY,
            alpha: 0.0,
            c_hat: DEFAULT_C_HAT,
            c_max: None,
        }
    }
}

impl ProgramTermsSpec {
    pub fn new(pi_e: f64, pi_r: f64, pi_p: f64, p: f64) -> Self {
        Self {
            pi_e,
            pi_r,
            pi_p,
            p,
            ..Self::default()
        }
    }

    pub fn alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn c_hat(mut self, c_hat: f64) -> Self {
        self.c_hat = c_hat;
        self
    }

    pub fn c_max(mut self, c_max: f64) -> Self {
        self.c_max = Some(c_max);
        self
    }

    /// Validate, rejecting ill-posed programs.
    pub fn build(self) -> Result<ProgramTerms> {
        let terms = self.build_allowing_ill_posed()?;
        let margin = terms.no_asset_margin();
        if margin >= 0.0 {
            return Err(Error::IllPosedProgram { margin });
        }
        Ok(terms)
    }

    /// Validate ranges only. For exploratory runs on programs that reward
    /// contracting without capability.
    pub fn build_allowing_ill_posed(self) -> Result<ProgramTerms> {
        for (name, v) in [
            ("pi_e", self.pi_e),
            ("pi_r", self.pi_r),
            ("pi_p", self.pi_p),
            ("alpha", self.alpha),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidTerms(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::InvalidTerms(format!(
                "p must lie in [0, 1], got {}",
                self.p
            )));
        }
        if !(self.c_hat > 0.0 && self.c_hat < 1.0) {
            return Err(Error::InvalidTerms(format!(
                "c_hat must lie in (0, 1), got {}",
                self.c_hat
            )));
        }
        let c_max = match self.c_max {
            None => f64::INFINITY,
            Some(c) if c >= 0.0 && !c.is_nan() => c,
            Some(c) => {
                return Err(Error::InvalidTerms(format!("c_max must be >= 0, got {c}")));
            }
        };
        Ok(ProgramTerms {
            pi_e: self.pi_e,
            pi_r: self.pi_r,
            pi_p: self.pi_p,
            p: self.p,
            alpha: self.alpha,
            c_hat: self.c_hat,
            c_max,
        })
    }
}

impl TryFrom<ProgramTermsSpec> for ProgramTerms {
    type Error = Error;

    fn try_from(spec: ProgramTermsSpec) -> Result<Self> {
        spec.build()
    }
}

impl From<ProgramTerms> for ProgramTermsSpec {
    fn from(t: ProgramTerms) -> Self {
        Self {
            pi_e: t.pi_e,
            pi_r: t.pi_r,
            pi_p: t.pi_p,
            p: t.p,
            alpha: t.alpha,
            c_hat: t.c_hat,
            c_max: t.c_max.is_finite().then_some(t.c_max),
        }
    }
}

impl ProgramTerms {
    /// Retail tariff, $/kWh.
    pub fn pi_e(&self) -> f64 {
        self.pi_e
    }

    /// Incentive per contracted kWh.
    pub fn pi_r(&self) -> f64 {
        self.pi_r
    }

    /// Penalty per kWh of shortfall.
    pub fn pi_p(&self) -> f64 {
        self.pi_p
    }

    /// Event probability for one window.
    pub fn p(&self) -> f64 {
        self.p
    }

    /// Risk-aversion weight on CVaR.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// CVaR confidence level.
    pub fn c_hat(&self) -> f64 {
        self.c_hat
    }

    /// Contract cap, `+inf` when unbounded.
    pub fn c_max(&self) -> f64 {
        self.c_max
    }

    /// Same terms with a different risk-aversion weight.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(Error::InvalidTerms(format!(
                "alpha must be finite and >= 0, got {alpha}"
            )));
        }
        Ok(Self { alpha, ..*self })
    }

    pub fn to_spec(&self) -> ProgramTermsSpec {
        (*self).into()
    }

    /// Expected profit per kWh contracted by an asset with no capability at all.
    pub fn no_asset_margin(&self) -> f64 {
        self.pi_r - self.p * self.pi_p
    }

    /// Check that a contract lies in `[0, c_max]`.
    pub fn check_contract(&self, contract: f64) -> Result<()> {
        if contract.is_nan() || contract < 0.0 || contract > self.c_max {
            return Err(Error::InvalidArgument(format!(
                "contract {contract} outside [0, {}]",
                self.c_max
            )));
        }
        Ok(())
    }
}

/// Curtailment actually delivered: never more than promised.
pub fn realized_curtailment(contract: f64, capability: f64) -> Result<f64> {
    if !(contract >= 0.0) || !(capability >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "contract and capability must be >= 0, got {contract} and {capability}"
        )));
    }
    Ok(contract.min(capability))
}

/// Settlement of one delivery window.
///
/// The incentive `pi_r * C` is paid whether or not an event is called. During
/// an event the agent is penalised on the shortfall and saves the tariff on
/// what it actually curtails.
pub fn realized_profit(
    terms: &ProgramTerms,
    contract: f64,
    capability: f64,
    event_occurred: bool,
) -> Result<f64> {
    terms.check_contract(contract)?;
    let delivered = realized_curtailment(contract, capability)?;
    Ok(settle(terms, contract, delivered, event_occurred))
}

/// Unchecked settlement for hot loops; `delivered = min(contract, capability)`.
#[inline]
pub(crate) fn settle(terms: &ProgramTerms, contract: f64, delivered: f64, event: bool) -> f64 {
    let payment = terms.pi_r * contract;
    if event {
        payment - terms.pi_p * (contract - delivered) + terms.pi_e * delivered
    } else {
        payment
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn terms(pi_e: f64, pi_r: f64, pi_p: f64, p: f64) -> ProgramTerms {
        ProgramTermsSpec::new(pi_e, pi_r, pi_p, p).build().unwrap()
    }

    #[test]
    fn margin_examples() {
        assert_eq!(terms(0.0, 1.0, 10.0, 0.2).no_asset_margin(), -1.0);
        assert_eq!(terms(0.0, 0.0, 2.0, 0.5).no_asset_margin(), -1.0);
        assert!((terms(0.0, 0.05, 10.0, 0.01).no_asset_margin() + 0.05).abs() < 1e-15);
    }

    #[test]
    fn curtailment_examples() {
        assert_eq!(realized_curtailment(5.0, 3.0).unwrap(), 3.0);
        assert_eq!(realized_curtailment(5.0, 7.0).unwrap(), 5.0);
        assert_eq!(realized_curtailment(0.0, 10.0).unwrap(), 0.0);
        assert!(realized_curtailment(-1.0, 1.0).is_err());
        assert!(realized_curtailment(1.0, -1.0).is_err());
    }

    #[test]
    fn profit_examples() {
        let t = terms(0.2, 1.0, 10.0, 0.2);
        assert!((realized_profit(&t, 1.0, 0.6, true).unwrap() + 2.88).abs() < 1e-12);
        assert_eq!(realized_profit(&t, 1.0, 0.6, false).unwrap(), 1.0);
        assert!((realized_profit(&t, 1.0, 2.0, true).unwrap() - 1.2).abs() < 1e-12);
        assert!(realized_profit(&t, -0.1, 2.0, true).is_err());
    }

    #[test]
    fn ill_posed_programs_rejected_unless_allowed() {
        let spec = ProgramTermsSpec::new(0.1, 1.0, 1.0, 0.5);
        assert!(matches!(
            spec.build(),
            Err(Error::IllPosedProgram { margin }) if margin == 0.5
        ));
        assert!(spec.build_allowing_ill_posed().is_ok());
    }

    #[test]
    fn range_validation() {
        let base = ProgramTermsSpec::new(0.1, 0.05, 10.0, 0.01);
        assert!(ProgramTermsSpec { p: 1.5, ..base }.build().is_err());
        assert!(base.c_hat(1.0).build().is_err());
        assert!(base.c_hat(0.0).build().is_err());
        assert!(ProgramTermsSpec { pi_e: -1.0, ..base }.build().is_err());
        assert!(base.c_max(-1.0).build().is_err());
        assert!(base.build().unwrap().c_max().is_infinite());
        let capped = base.c_max(5.0).build().unwrap();
        assert!(capped.check_contract(6.0).is_err());
    }

    #[test]
    fn json_form() {
        let t: ProgramTerms = serde_json::from_str(
            r#"{"pi_e":0.2,"pi_r":1,"pi_p":10,"p":0.2,"alpha":0.5,"c_hat":0.9}"#,
        )
        .unwrap();
        assert_eq!(t.alpha(), 0.5);
        assert!(t.c_max().is_infinite());
        let text = serde_json::to_string(&t).unwrap();
        assert!(!text.contains("c_max"));

        let defaults: ProgramTerms =
            serde_json::from_str(r#"{"pi_e":0.2,"pi_r":0.01,"pi_p":10}"#).unwrap();
        assert_eq!(defaults.c_hat(), DEFAULT_C_HAT);
        assert_eq!(defaults.p(), DEFAULT_EVENT_PROBABILITY);

        assert!(serde_json::from_str::<ProgramTerms>(
            r#"{"pi_e":0.2,"pi_r":1,"pi_p":10,"p":0.2,"bogus":1}"#
        )
        .is_err());
        assert!(
            serde_json::from_str::<ProgramTerms>(r#"{"pi_e":0.2,"pi_r":5,"pi_p":1,"p":0.2}"#)
                .is_err()
        );
    }

    proptest! {
        #[test]
        fn settlement_properties(c in 0.0..50.0f64, q1 in 0.0..80.0f64, q2 in 0.0..80.0f64) {
            let t = terms(0.2, 1.0, 10.0, 0.2);
            let (lo, hi) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
            let p_lo = realized_profit(&t, c, lo, true).unwrap();
            let p_hi = realized_profit(&t, c, hi, true).unwrap();
            prop_assert!(p_lo <= p_hi + 1e-12);
            if lo >= c {
                prop_assert_eq!(p_lo, p_hi);
            }
            let no_event = realized_profit(&t, c, lo, false).unwrap();
            prop_assert!(p_lo <= no_event + t.pi_e() * c + 1e-12);
            let x = realized_curtailment(c, lo).unwrap();
            prop_assert!(x <= c && x <= lo);
        }
    }
}
