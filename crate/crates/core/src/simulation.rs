//! Monte Carlo settlement of a contracted horizon.
//!
//! Every trial replays each window of the horizon: an event arrives with
//! probability `p`, and in event windows a capability `q` is drawn and
//! settled. Trial `t` draws from its own counter-based substreams, so results
//! do not depend on how trials are scheduled across threads.

use std::collections::BTreeMap;
use std::io::Write;

use chrono::{Datelike, NaiveDate};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contract;
use crate::distribution::CurtailmentDistribution;
use crate::estimation::{BucketKey, DayType};
use crate::program::{settle, ProgramTerms};
use crate::rng::{stream, Purpose};
use crate::stats::{self, fmt_sig};
use crate::{Error, Result};

pub const DEFAULT_WINDOWS_PER_HORIZON: u64 = 720;
pub const DEFAULT_CALENDAR_YEAR: i32 = 2021;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub n_trials: u64,
    #[serde(default = "default_windows")]
    pub windows_per_horizon: u64,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; never changes the result.
    #[serde(default = "default_streams")]
    pub parallel_streams: usize,
}

fn default_windows() -> u64 {
    DEFAULT_WINDOWS_PER_HORIZON
}

fn default_streams() -> usize {
    1
}

impl SimulationConfig {
    pub fn new(n_trials: u64, seed: u64) -> Self {
        Self {
            n_trials,
            windows_per_horizon: DEFAULT_WINDOWS_PER_HORIZON,
            seed,
            parallel_streams: default_streams(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trials == 0 || self.windows_per_horizon == 0 || self.parallel_streams == 0 {
            return Err(Error::InvalidArgument(
                "n_trials, windows_per_horizon and parallel_streams must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Windows settled against one distribution and contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub label: String,
    pub distribution: CurtailmentDistribution,
    pub contract: f64,
    pub windows: u64,
}

/// Every window of the horizon uses the same distribution and contract.
pub fn single_schedule(
    dist: CurtailmentDistribution,
    contract: f64,
    config: &SimulationConfig,
) -> Vec<ScheduleEntry> {
    vec![ScheduleEntry {
        label: "all".into(),
        distribution: dist,
        contract,
        windows: config.windows_per_horizon,
    }]
}

/// Number of days of each day type in a calendar month.
pub fn day_counts(year: i32, month: u32) -> Result<(u64, u64)> {
    let mut d = NaiveDate::from_ymd_opt(year, month, 1)
        .ok_or_else(|| Error::InvalidArgument(format!("no month {year}-{month}")))?;
    let (mut weekday, mut weekend) = (0, 0);
    while d.month() == month {
        match DayType::of(d) {
            DayType::Weekday => weekday += 1,
            DayType::Weekend => weekend += 1,
        }
        d = d.succ_opt().expect("within calendar range");
    }
    Ok((weekday, weekend))
}

/// One month of hourly windows: each contracted bucket gets one window per
/// day of its day type in `month` of `year`.
pub fn month_schedule(
    capability: &BTreeMap<BucketKey, CurtailmentDistribution>,
    contracts: &BTreeMap<BucketKey, f64>,
    year: i32,
    month: u32,
) -> Result<Vec<ScheduleEntry>> {
    let (weekday, weekend) = day_counts(year, month)?;
    contracts
        .iter()
        .filter(|(k, _)| k.month == month)
        .map(|(key, &c)| {
            let dist = capability.get(key).ok_or_else(|| {
                Error::InvalidArgument(format!("no capability distribution for contracted {key}"))
            })?;
            Ok(ScheduleEntry {
                label: key.to_string(),
                distribution: dist.clone(),
                contract: c,
                windows: if key.is_weekend { weekend } else { weekday },
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub analytic: f64,
}

impl Estimate {
    /// |value - analytic| in standard errors. Differences at rounding level
    /// count as zero; any other difference with a zero standard error is
    /// infinite.
    pub fn z_score(&self) -> f64 {
        let diff = (self.value - self.analytic).abs();
        if diff <= 1e-12 * self.analytic.abs().max(1.0) {
            0.0
        } else {
            diff / self.std_error
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryStats {
    pub label: String,
    pub contract: f64,
    pub windows_per_trial: u64,
    pub events: u64,
    pub shortfalls: u64,
    pub clipped_draws: u64,
    /// Per event-window draws; `None` when too few events occurred.
    pub cvar: Option<Estimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub n_trials: u64,
    pub windows_per_trial: u64,
    pub seed: u64,
    /// Horizon profit of each trial, in trial order.
    #[serde(skip)]
    pub profits: Vec<f64>,
    pub profit: Estimate,
    pub min_profit: f64,
    pub max_profit: f64,
    pub events: u64,
    pub mean_events_per_trial: f64,
    /// Shortfalls per window, against `p * P(q < C)` averaged over windows.
    pub shortfall_frequency: Estimate,
    pub clipped_draws: u64,
    pub entries: Vec<EntryStats>,
}

struct TrialOutcome {
    profit: f64,
    events: Vec<u64>,
    shortfalls: Vec<u64>,
    clipped: Vec<u64>,
    draws: Vec<Vec<f64>>,
}

fn run_trial(
    terms: &ProgramTerms,
    schedule: &[ScheduleEntry],
    seed: u64,
    trial: u64,
) -> TrialOutcome {
    let mut events_rng = stream(seed, trial, Purpose::Event);
    let mut q_rng = stream(seed, trial, Purpose::Capability);
    let k = schedule.len();
    let mut out = TrialOutcome {
        profit: 0.0,
        events: vec![0; k],
        shortfalls: vec![0; k],
        clipped: vec![0; k],
        draws: vec![Vec::new(); k],
    };
    let p = terms.p();
    for (i, e) in schedule.iter().enumerate() {
        let mut profit = 0.0;
        for _ in 0..e.windows {
            let event = p >= 1.0 || (p > 0.0 && events_rng.random::<f64>() < p);
            if !event {
                profit += settle(terms, e.contract, 0.0, false);
                continue;
            }
            let (q, clipped) = e.distribution.sample_with_clip(&mut q_rng);
            out.events[i] += 1;
            out.clipped[i] += u64::from(clipped);
            out.shortfalls[i] += u64::from(q < e.contract);
            out.draws[i].push(q);
            profit += settle(terms, e.contract, q.min(e.contract), true);
        }
        out.profit += profit;
    }
    out
}

/// Replay the schedule `n_trials` times.
pub fn simulate_horizon(
    terms: &ProgramTerms,
    schedule: &[ScheduleEntry],
    config: &SimulationConfig,
) -> Result<SimulationResult> {
    config.validate()?;
    if schedule.is_empty() {
        return Err(Error::InvalidArgument("empty schedule".into()));
    }
    for e in schedule {
        terms.check_contract(e.contract)?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallel_streams)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let outcomes: Vec<TrialOutcome> = pool.install(|| {
        (0..config.n_trials)
            .into_par_iter()
            .map(|t| run_trial(terms, schedule, config.seed, t))
            .collect()
    });

    let profits: Vec<f64> = outcomes.iter().map(|o| o.profit).collect();
    let (mean, se) = stats::mean_and_se(&profits);
    let mut analytic_profit = 0.0;
    let mut analytic_shortfalls = 0.0;
    let mut entries = Vec::with_capacity(schedule.len());
    for (i, e) in schedule.iter().enumerate() {
        let sum = |f: fn(&TrialOutcome, usize) -> u64| outcomes.iter().map(|o| f(o, i)).sum::<u64>();
        let events = sum(|o, i| o.events[i]);
        let shortfalls = sum(|o, i| o.shortfalls[i]);
        let clipped_draws = sum(|o, i| o.clipped[i]);
        let mut draws: Vec<f64> = Vec::with_capacity(events as usize);
        for o in &outcomes {
            draws.extend_from_slice(&o.draws[i]);
        }
        analytic_profit += e.windows as f64 * contract::expected_profit(terms, &e.distribution, e.contract)?;
        analytic_shortfalls +=
            e.windows as f64 * terms.p() * e.distribution.prob_below(e.contract);
        let var = e.distribution.lower_quantile(1.0 - terms.c_hat())?.max(0.0);
        let cvar = match cvar_estimate(terms, e.contract, &mut draws, Some(var)) {
            Ok(est) => Some(Estimate {
                analytic: contract::cvar(terms, &e.distribution, e.contract)?,
                ..est
            }),
            Err(_) => None,
        };
        entries.push(EntryStats {
            label: e.label.clone(),
            contract: e.contract,
            windows_per_trial: e.windows,
            events,
            shortfalls,
            clipped_draws,
            cvar,
        });
    }
    let windows: u64 = schedule.iter().map(|e| e.windows).sum();
    let total_windows = (windows * config.n_trials) as f64;
    let shortfalls: u64 = entries.iter().map(|e| e.shortfalls).sum();
    let freq = shortfalls as f64 / total_windows;
    let events: u64 = entries.iter().map(|e| e.events).sum();
    Ok(SimulationResult {
        n_trials: config.n_trials,
        windows_per_trial: windows,
        seed: config.seed,
        profit: Estimate {
            value: mean,
            std_error: se,
            analytic: analytic_profit,
        },
        min_profit: profits.iter().copied().fold(f64::INFINITY, f64::min),
        max_profit: profits.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        events,
        mean_events_per_trial: events as f64 / config.n_trials as f64,
        shortfall_frequency: Estimate {
            value: freq,
            std_error: (freq * (1.0 - freq) / total_windows).sqrt(),
            analytic: analytic_shortfalls / windows as f64,
        },
        clipped_draws: entries.iter().map(|e| e.clipped_draws).sum(),
        entries,
        profits,
    })
}

/// Lowest-`mass` tail weights of `n` sorted draws: full weight up to the
/// boundary draw, which carries the fractional remainder.
fn tail_weights(n: usize, mass: f64) -> impl Iterator<Item = (usize, f64)> {
    let k = mass * n as f64;
    let full = k.floor() as usize;
    let frac = k - full as f64;
    (0..full.min(n))
        .map(|i| (i, 1.0))
        .chain((frac > 0.0 && full < n).then_some((full, frac)))
}

/// Sample counterpart of the analytic CVaR:
/// `pi_r C + p * mean over the lowest (1 - c_hat) draws of
/// (pi_e q - pi_p (C - q))`.
pub fn empirical_cvar(terms: &ProgramTerms, contract: f64, draws: &[f64]) -> Result<f64> {
    let mut sorted = draws.to_vec();
    Ok(cvar_estimate(terms, contract, &mut sorted, None)?.value)
}

/// Tail-mean estimate with its standard error. The error is evaluated at
/// `population_var` when known: on an atom the sample VaR can sit one atom
/// low, where the spread below it, and with it the error, is zero.
fn cvar_estimate(
    terms: &ProgramTerms,
    contract: f64,
    draws: &mut [f64],
    population_var: Option<f64>,
) -> Result<Estimate> {
    let mass = 1.0 - terms.c_hat();
    let n = draws.len();
    let needed = (1.0 / mass).ceil() as usize;
    if n < needed.max(2) {
        return Err(Error::InvalidArgument(format!(
            "CVaR at c_hat = {} needs at least {} draws, got {n}",
            terms.c_hat(),
            needed.max(2)
        )));
    }
    draws.sort_by(f64::total_cmp);
    let slope = terms.pi_e() + terms.pi_p();
    let denom = mass * n as f64;
    let tail_q: f64 = tail_weights(n, mass).map(|(i, w)| w * draws[i]).sum::<f64>() / denom;
    let tail_g = slope * tail_q - terms.pi_p() * contract;
    let value = terms.pi_r() * contract + terms.p() * tail_g;
    // The tail mean equals VaR - E[(VaR - q)+] / mass; its error is driven
    // by the spread of the shortfall below VaR.
    let var = population_var.unwrap_or(draws[((mass * n as f64).ceil() as usize).clamp(1, n) - 1]);
    let below: Vec<f64> = draws.iter().map(|q| (var - q).max(0.0)).collect();
    let (_, se_below) = stats::mean_and_se(&below);
    let std_error = terms.p() * slope * se_below / mass;
    Ok(Estimate {
        value,
        std_error,
        analytic: f64::NAN,
    })
}

/// Running mean and standard error at `n = 10, 100, ...` and the full count.
pub fn convergence_table(profits: &[f64]) -> Vec<(usize, f64, f64)> {
    let mut sizes = Vec::new();
    let mut n = 10;
    while n < profits.len() {
        sizes.push(n);
        n *= 10;
    }
    sizes.push(profits.len());
    sizes
        .into_iter()
        .map(|n| {
            let (m, se) = stats::mean_and_se(&profits[..n]);
            (n, m, se)
        })
        .collect()
}

pub fn write_trials_csv<W: Write>(profits: &[f64], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["trial", "profit"])?;
    for (t, p) in profits.iter().enumerate() {
        w.write_record([t.to_string(), fmt_sig(*p)])?;
    }
    w.flush().map_err(|e| Error::io("writing trials csv", e))
}

pub fn write_convergence_csv<W: Write>(profits: &[f64], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["n", "mean_profit", "std_error"])?;
    for (n, m, se) in convergence_table(profits) {
        w.write_record([n.to_string(), fmt_sig(m), fmt_sig(se)])?;
    }
    w.flush().map_err(|e| Error::io("writing convergence csv", e))
}
