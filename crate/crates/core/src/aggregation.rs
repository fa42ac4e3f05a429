//! Joint participation of several assets under one contract.
//!
//! The aggregate capability is the sum of member capabilities. Its spread is
//! at most the sum of member spreads, and the gap
//! `delta_sigma = sum_k sigma_k - sigma_ag` (the complementarity metric) drives
//! the profit gained by contracting jointly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contract::{self, ContractDecision};
use crate::distribution::{
    sum_empirical, sum_normal, AlignedSamples, CovarianceModel, CurtailmentDistribution,
};
use crate::program::ProgramTerms;
use crate::{normal, Error, Result};

/// An asset known through aligned historical capability samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Asset {
    pub id: String,
    pub samples: AlignedSamples,
}

impl Asset {
    pub fn new(id: impl Into<String>, samples: AlignedSamples) -> Self {
        Self {
            id: id.into(),
            samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Members {
    Empirical(Vec<Asset>),
    /// Jointly normal members; asset `k` is marginal `k` of the model.
    Normal {
        ids: Vec<String>,
        model: CovarianceModel,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssetPortfolio {
    members: Members,
    terms: ProgramTerms,
    alpha_ag: f64,
}

impl AssetPortfolio {
    /// Sample-based members; all must share alignment keys.
    pub fn empirical(assets: Vec<Asset>, terms: ProgramTerms) -> Result<Self> {
        if assets.is_empty() {
            return Err(Error::InvalidArgument("portfolio needs at least one member".into()));
        }
        let sets: Vec<AlignedSamples> = assets.iter().map(|a| a.samples.clone()).collect();
        sum_empirical(&sets)?;
        Ok(Self {
            members: Members::Empirical(assets),
            alpha_ag: terms.alpha(),
            terms,
        })
    }

    pub fn normal(ids: Vec<String>, model: CovarianceModel, terms: ProgramTerms) -> Result<Self> {
        if ids.len() != model.len() {
            return Err(Error::InvalidArgument(format!(
                "{} ids for {} modelled assets",
                ids.len(),
                model.len()
            )));
        }
        Ok(Self {
            members: Members::Normal { ids, model },
            alpha_ag: terms.alpha(),
            terms,
        })
    }

    /// Risk aversion of the aggregation itself; defaults to the members'.
    pub fn with_alpha_ag(mut self, alpha_ag: f64) -> Result<Self> {
        self.terms.with_alpha(alpha_ag)?;
        self.alpha_ag = alpha_ag;
        Ok(self)
    }

    pub fn terms(&self) -> &ProgramTerms {
        &self.terms
    }

    pub fn alpha_ag(&self) -> f64 {
        self.alpha_ag
    }

    pub fn members(&self) -> &Members {
        &self.members
    }

    pub fn len(&self) -> usize {
        match &self.members {
            Members::Empirical(a) => a.len(),
            Members::Normal { ids, .. } => ids.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ids(&self) -> Vec<&str> {
        match &self.members {
            Members::Empirical(a) => a.iter().map(|m| m.id.as_str()).collect(),
            Members::Normal { ids, .. } => ids.iter().map(String::as_str).collect(),
        }
    }

    pub fn member_distributions(&self) -> Vec<CurtailmentDistribution> {
        match &self.members {
            Members::Empirical(a) => a
                .iter()
                .map(|m| CurtailmentDistribution::Empirical(m.samples.distribution()))
                .collect(),
            Members::Normal { model, .. } => (0..model.len())
                .map(|k| CurtailmentDistribution::Normal(model.marginal(k)))
                .collect(),
        }
    }

    fn aggregation_terms(&self) -> ProgramTerms {
        self.terms
            .with_alpha(self.alpha_ag)
            .expect("validated in with_alpha_ag")
    }
}

/// Distribution of the summed capability.
pub fn aggregate_distribution(portfolio: &AssetPortfolio) -> Result<CurtailmentDistribution> {
    Ok(match &portfolio.members {
        Members::Empirical(assets) => {
            let sets: Vec<AlignedSamples> = assets.iter().map(|a| a.samples.clone()).collect();
            CurtailmentDistribution::Empirical(sum_empirical(&sets)?.distribution())
        }
        Members::Normal { model, .. } => CurtailmentDistribution::Normal(sum_normal(model)),
    })
}

/// Optimal contract of the aggregation as one entity, at `alpha_ag`.
pub fn aggregation_contract(portfolio: &AssetPortfolio) -> Result<ContractDecision> {
    let agg = aggregate_distribution(portfolio)?;
    contract::optimal_contract(&portfolio.aggregation_terms(), &agg)
}

fn member_contracts(portfolio: &AssetPortfolio) -> Result<Vec<(CurtailmentDistribution, ContractDecision)>> {
    portfolio
        .member_distributions()
        .into_iter()
        .map(|d| {
            let decision = contract::optimal_contract(&portfolio.terms, &d)?;
            Ok((d, decision))
        })
        .collect()
}

/// `sum_k sigma_k - sigma_ag`.
pub fn complementarity(portfolio: &AssetPortfolio) -> Result<f64> {
    let (sum, agg) = sigmas(portfolio)?;
    Ok(sum - agg)
}

fn sigmas(portfolio: &AssetPortfolio) -> Result<(f64, f64)> {
    let mut sum = 0.0;
    for d in portfolio.member_distributions() {
        sum += d.stddev()?;
    }
    Ok((sum, aggregate_distribution(portfolio)?.stddev()?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContractOrdering {
    AgSmaller,
    AgLarger,
    Equal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractComparison {
    pub ordering: ContractOrdering,
    pub c_star_ag: f64,
    pub sum_c_star: f64,
    pub gamma: f64,
    pub delta_sigma: f64,
    /// For normal members with `delta_sigma > 0`: whether
    /// `sign(sum C*_k - C*_ag) = sign(gamma)`. `None` when it does not apply.
    pub sign_law_holds: Option<bool>,
}

const ORDER_TOLERANCE: f64 = 1e-9;

/// How the aggregation's contract compares with the sum of member contracts.
pub fn contract_comparison(portfolio: &AssetPortfolio) -> Result<ContractComparison> {
    let gamma = contract::gamma(&portfolio.terms)?;
    let members = member_contracts(portfolio)?;
    let sum_c_star: f64 = members.iter().map(|(_, d)| d.c_star).sum();
    let c_star_ag = aggregation_contract(portfolio)?.c_star;
    let delta_sigma = complementarity(portfolio)?;
    let scale = ORDER_TOLERANCE * sum_c_star.abs().max(1.0);
    let ordering = if c_star_ag < sum_c_star - scale {
        ContractOrdering::AgSmaller
    } else if c_star_ag > sum_c_star + scale {
        ContractOrdering::AgLarger
    } else {
        ContractOrdering::Equal
    };
    let unclipped = members
        .iter()
        .all(|(_, d)| !d.clipped_low && !d.clipped_high);
    let sign_law_holds = match portfolio.members {
        Members::Normal { .. } if delta_sigma > scale && unclipped => Some(
            match ordering {
                ContractOrdering::AgSmaller => gamma > 0.0,
                ContractOrdering::AgLarger => gamma < 0.0,
                ContractOrdering::Equal => gamma.abs() < 1e-12,
            },
        ),
        _ => None,
    };
    Ok(ContractComparison {
        ordering,
        c_star_ag,
        sum_c_star,
        gamma,
        delta_sigma,
        sign_law_holds,
    })
}

/// Ground-truth profit gain of aggregating: expected profit of the
/// aggregation at its optimum minus the members' expected profits at theirs.
pub fn profit_delta_oracle(portfolio: &AssetPortfolio) -> Result<f64> {
    Ok(deltas(portfolio)?.0)
}

/// Returns (profit delta, objective delta).
fn deltas(portfolio: &AssetPortfolio) -> Result<(f64, f64)> {
    let agg = aggregation_contract(portfolio)?;
    let members = member_contracts(portfolio)?;
    let profit = agg.expected_profit - members.iter().map(|(_, d)| d.expected_profit).sum::<f64>();
    let objective = agg.objective - members.iter().map(|(_, d)| d.objective).sum::<f64>();
    Ok((profit, objective))
}

/// Variants of the closed-form profit delta for normal members.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaForm {
    /// Includes the `-(N - 1) p (pi_p + pi_e) Phi(gamma)` term.
    AsPrinted,
    /// Only the spread term, which survives once `mu_ag = sum mu_k` cancels.
    MeanCancelled,
}

/// The factor multiplying `delta_sigma`:
/// `p (pi_p + pi_e) phi(gamma) + alpha (pi_r - p pi_p) gamma`.
pub fn spread_factor(terms: &ProgramTerms, gamma: f64) -> f64 {
    terms.p() * (terms.pi_p() + terms.pi_e()) * normal::gaussian_kernel(gamma)
        + terms.alpha() * terms.no_asset_margin() * gamma
}

/// Closed-form profit delta from moments alone.
pub fn profit_delta_formula(
    terms: &ProgramTerms,
    gamma: f64,
    members: usize,
    delta_sigma: f64,
    form: DeltaForm,
) -> f64 {
    let spread = delta_sigma * spread_factor(terms, gamma);
    match form {
        DeltaForm::MeanCancelled => spread,
        DeltaForm::AsPrinted => {
            let count = members as f64 - 1.0;
            -terms.p()
                * (terms.pi_p() + terms.pi_e())
                * count
                * 0.5
                * (normal::erf(gamma / std::f64::consts::SQRT_2) + 1.0)
                + spread
        }
    }
}

/// Closed-form profit delta; normal members only.
pub fn profit_delta_normal(portfolio: &AssetPortfolio, form: DeltaForm) -> Result<f64> {
    let Members::Normal { .. } = portfolio.members else {
        return Err(Error::InvalidArgument(
            "closed-form profit delta needs normal members".into(),
        ));
    };
    let gamma = contract::gamma(&portfolio.terms)?;
    Ok(profit_delta_formula(
        &portfolio.terms,
        gamma,
        portfolio.len(),
        complementarity(portfolio)?,
        form,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregationReport {
    pub member_ids: Vec<String>,
    pub aggregate: CurtailmentDistribution,
    pub aggregate_decision: ContractDecision,
    pub member_decisions: Vec<ContractDecision>,
    pub c_star_ag: f64,
    pub sum_c_star: f64,
    pub comparison: Option<ContractComparison>,
    pub delta_j_oracle: f64,
    pub delta_objective_oracle: f64,
    /// Closed forms; for sample-based members these use the sample spreads.
    pub delta_j_printed: Option<f64>,
    pub delta_j_cancelled: Option<f64>,
    pub delta_sigma: f64,
    /// The spread factor is negative: extra diversification lowers profit.
    /// Unreachable for well-posed terms with alpha >= 0; kept as a guard.
    pub aggregation_unprofitable: bool,
}

pub fn evaluate(portfolio: &AssetPortfolio) -> Result<AggregationReport> {
    let aggregate = aggregate_distribution(portfolio)?;
    let aggregate_decision =
        contract::optimal_contract(&portfolio.aggregation_terms(), &aggregate)?;
    let member_decisions: Vec<ContractDecision> = member_contracts(portfolio)?
        .into_iter()
        .map(|(_, d)| d)
        .collect();
    let (delta_j_oracle, delta_objective_oracle) = deltas(portfolio)?;
    let delta_sigma = complementarity(portfolio)?;
    let gamma = contract::gamma(&portfolio.terms).ok();
    let closed = |form| {
        gamma.map(|g| profit_delta_formula(&portfolio.terms, g, portfolio.len(), delta_sigma, form))
    };
    Ok(AggregationReport {
        member_ids: portfolio.ids().into_iter().map(String::from).collect(),
        c_star_ag: aggregate_decision.c_star,
        sum_c_star: member_decisions.iter().map(|d| d.c_star).sum(),
        comparison: gamma.and_then(|_| contract_comparison(portfolio).ok()),
        delta_j_printed: closed(DeltaForm::AsPrinted),
        delta_j_cancelled: closed(DeltaForm::MeanCancelled),
        aggregation_unprofitable: gamma.is_some_and(|g| spread_factor(&portfolio.terms, g) < 0.0),
        aggregate,
        aggregate_decision,
        member_decisions,
        delta_j_oracle,
        delta_objective_oracle,
        delta_sigma,
    })
}

/// One candidate's value as a partner for the base asset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartnerRow {
    pub candidate_id: String,
    pub delta_sigma: f64,
    pub delta_j_oracle: f64,
    pub delta_j_printed: Option<f64>,
    pub delta_j_cancelled: Option<f64>,
    /// Candidate's own expected profit at its optimal contract.
    pub individual_profit: f64,
}

/// Evaluate each candidate paired with `base`, most complementary first.
pub fn rank_partners(
    base: &Asset,
    candidates: &[Asset],
    terms: &ProgramTerms,
) -> Result<Vec<PartnerRow>> {
    let mut rows = candidates
        .par_iter()
        .map(|cand| {
            let pair = AssetPortfolio::empirical(vec![base.clone(), cand.clone()], *terms)?;
            let report = evaluate(&pair)?;
            Ok(PartnerRow {
                candidate_id: cand.id.clone(),
                delta_sigma: report.delta_sigma,
                delta_j_oracle: report.delta_j_oracle,
                delta_j_printed: report.delta_j_printed,
                delta_j_cancelled: report.delta_j_cancelled,
                individual_profit: report.member_decisions[1].expected_profit,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    sort_rows(&mut rows);
    Ok(rows)
}

pub(crate) fn sort_rows(rows: &mut [PartnerRow]) {
    rows.sort_by(|a, b| {
        b.delta_sigma
            .total_cmp(&a.delta_sigma)
            .then_with(|| a.candidate_id.cmp(&b.candidate_id))
    });
}
