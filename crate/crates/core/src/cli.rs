//! Command-line pipeline: `estimate`, `contract`, `aggregate`, `simulate`.
//!
//! Every command is a pure function of its input files, the run
//! configuration and the seed, so reruns produce identical bytes.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::aggregation::{self, sort_rows, Asset, AssetPortfolio, PartnerRow};
use crate::contract::{self, ContractDecision};
use crate::distribution::CurtailmentDistribution;
use crate::estimation::{self, BucketKey, CapabilityModel, EstimationConfig};
use crate::program::{ProgramTerms, ProgramTermsSpec};
use crate::simulation::{self, SimulationConfig, DEFAULT_CALENDAR_YEAR};
use crate::stats::{fmt_sig, spearman};
use crate::{Error, Result};

const SCHEMAS: &str = "\
Run configuration (JSON, unknown keys rejected; paths relative to the file):
  {
    \"terms\": {\"pi_e\": .., \"pi_r\": .., \"pi_p\": .., \"p\": .., \"alpha\": 0,
              \"c_hat\": 0.95, \"c_max\": <optional>},
    \"allow_ill_posed\": false,
    \"estimation\": {\"curtailable_fraction\": 0.6, \"curtailable_end_use\": \"hvac\",
                   \"min_bucket_size\": 4},
    \"simulation\": {\"n_trials\": .., \"windows_per_horizon\": 720, \"seed\": 0,
                   \"parallel_streams\": 1},
    \"calendar_year\": 2021,
    \"paths\": {\"load_csv\": .., \"shapes_csv\": .., \"model\": .., \"contracts\": ..}
  }

Load CSV:      timestamp,building_id,load_kwh   (ISO-8601 local time, hourly)
Shapes CSV:    end_use,day_type,hour,weight     (day_type: weekday | weekend | all)
Contract CSV:  month,hour,is_weekend,psi,c_star,clipped,expected_profit,cvar,objective
               [,c_star_grid]
Sweep CSV:     month,hour,is_weekend,alpha,psi,c_star,clipped,expected_profit,cvar,objective
Ranking CSV:   candidate_id,delta_sigma,delta_j_oracle,delta_j_printed,delta_j_cancelled,
               individual_profit
Simulate:      --out names a directory receiving result.json, convergence.csv,
               checks.csv and, with --trials-csv, trials.csv (trial,profit)

Exit status: 0 success, 2 input error, 3 model-consistency error.";

#[derive(Debug, Parser)]
#[command(
    name = "drpart",
    version,
    about = "Optimal demand-response contracts from metered load",
    after_long_help = SCHEMAS
)]
pub struct Cli {
    /// Run configuration JSON.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (directory for `simulate`); standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overrides the configured simulation seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a capability model from metered load and end-use shapes.
    Estimate {
        #[arg(long)]
        load: Option<PathBuf>,
        #[arg(long)]
        shapes: Option<PathBuf>,
    },
    /// Optimal contract for each bucket of one building.
    Contract {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        building: String,
        /// Risk-aversion sweep `a0:a1:n` instead of the schedule.
        #[arg(long)]
        alpha_sweep: Option<String>,
        /// Append the brute-force optimum at 10^4 grid points.
        #[arg(long)]
        with_oracle: bool,
    },
    /// Rank candidate partners for a base building.
    Aggregate {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        base: String,
        /// Comma-separated ids; every other building when omitted.
        #[arg(long, value_delimiter = ',')]
        candidates: Vec<String>,
    },
    /// Monte Carlo settlement of a contract schedule.
    Simulate {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        contracts: Option<PathBuf>,
        #[arg(long)]
        building: String,
        #[arg(long)]
        trials_csv: bool,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub load_csv: Option<PathBuf>,
    pub shapes_csv: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub contracts: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub terms: Option<ProgramTermsSpec>,
    #[serde(default)]
    pub allow_ill_posed: bool,
    pub estimation: Option<EstimationConfig>,
    pub simulation: Option<SimulationConfig>,
    #[serde(default = "default_year")]
    pub calendar_year: i32,
    #[serde(default)]
    pub paths: Paths,
    #[serde(skip)]
    base_dir: PathBuf,
}

fn default_year() -> i32 {
    DEFAULT_CALENDAR_YEAR
}

impl RunConfig {
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: Self = serde_json::from_str(text)?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.terms_if_present()?;
        if let Some(sim) = &cfg.simulation {
            sim.validate()?;
        }
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        Self::from_json(&text, dir).map_err(|e| match e {
            Error::Json(j) => Error::Parse {
                path: path.to_path_buf(),
                line: j.line() as u64,
                message: j.to_string(),
            },
            other => other,
        })
    }

    fn terms_if_present(&self) -> Result<Option<ProgramTerms>> {
        self.terms
            .clone()
            .map(|spec| {
                if self.allow_ill_posed {
                    spec.build_allowing_ill_posed()
                } else {
                    spec.build()
                }
            })
            .transpose()
    }

    pub fn terms(&self) -> Result<ProgramTerms> {
        self.terms_if_present()?
            .ok_or_else(|| Error::InvalidArgument("configuration has no `terms` block".into()))
    }

    fn resolve(&self, flag: Option<&PathBuf>, configured: Option<&PathBuf>, what: &str) -> Result<PathBuf> {
        flag.cloned()
            .or_else(|| configured.map(|p| self.base_dir.join(p)))
            .ok_or_else(|| Error::InvalidArgument(format!("no {what} given")))
    }
}

/// Parse arguments and run; returns the process exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(&cli, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            let _ = lock.flush();
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    let config = match &cli.config {
        Some(p) => RunConfig::read(p)?,
        None => {
            return Err(Error::InvalidArgument("--config is required".into()));
        }
    };
    match &cli.command {
        Command::Estimate { load, shapes } => estimate(cli, &config, load.as_ref(), shapes.as_ref(), stdout),
        Command::Contract {
            model,
            building,
            alpha_sweep,
            with_oracle,
        } => {
            let model = load_model(&config, model.as_ref())?;
            let text = match alpha_sweep {
                Some(spec) => sweep_csv(&config, &model, building, spec)?,
                None => contract_csv(&config, &model, building, *with_oracle)?,
            };
            emit(cli.out.as_deref(), &text, stdout)
        }
        Command::Aggregate {
            model,
            base,
            candidates,
        } => {
            let model = load_model(&config, model.as_ref())?;
            let rows = ranking(&config, &model, base, candidates)?;
            let text = ranking_csv(&rows)?;
            let x: Vec<f64> = rows.iter().map(|r| r.delta_sigma).collect();
            let y: Vec<f64> = rows.iter().map(|r| r.delta_j_oracle).collect();
            if cli.out.is_some() {
                emit(cli.out.as_deref(), &text, stdout)?;
            } else {
                stdout_write(stdout, &text)?;
            }
            let rho = if rows.len() >= 2 { fmt_sig(spearman(&x, &y)) } else { "nan".into() };
            stdout_write(
                stdout,
                &format!("# candidates: {}\n# spearman(delta_sigma, delta_j_oracle): {rho}\n", rows.len()),
            )
        }
        Command::Simulate {
            model,
            contracts,
            building,
            trials_csv,
        } => simulate(cli, &config, model.as_ref(), contracts.as_ref(), building, *trials_csv, stdout),
    }
}

fn stdout_write(stdout: &mut dyn Write, text: &str) -> Result<()> {
    stdout
        .write_all(text.as_bytes())
        .map_err(|e| Error::io("writing standard output", e))
}

fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Error::io(format!("writing {}", p.display()), e)),
        None => stdout_write(stdout, text),
    }
}

fn load_model(config: &RunConfig, flag: Option<&PathBuf>) -> Result<CapabilityModel> {
    let path = config.resolve(flag, config.paths.model.as_ref(), "capability model (--model)")?;
    CapabilityModel::read(&path).map_err(|e| match e {
        Error::Json(j) => Error::Parse {
            path: path.clone(),
            line: j.line() as u64,
            message: j.to_string(),
        },
        other => other,
    })
}

fn estimate(
    cli: &Cli,
    config: &RunConfig,
    load: Option<&PathBuf>,
    shapes: Option<&PathBuf>,
    stdout: &mut dyn Write,
) -> Result<()> {
    let est = config.estimation.clone().ok_or_else(|| {
        Error::InvalidArgument("configuration has no `estimation` block".into())
    })?;
    let load_path = config.resolve(load, config.paths.load_csv.as_ref(), "load CSV (--load)")?;
    let shapes_path = config.resolve(shapes, config.paths.shapes_csv.as_ref(), "shapes CSV (--shapes)")?;
    let (records, load_sha) = estimation::read_load_csv(&load_path)?;
    let (shapes, shapes_sha) = estimation::read_shapes_csv(&shapes_path, &est.curtailable_end_use)?;
    let mut model = estimation::build_capability_model(&records, &shapes, &est)?;
    model.metadata.source_sha256 = Some(load_sha);
    model.metadata.shapes_sha256 = Some(shapes_sha);
    let json = model.to_json()?;
    let summary = estimate_summary(&model);
    match &cli.out {
        Some(p) => {
            fs::write(p, &json).map_err(|e| Error::io(format!("writing {}", p.display()), e))?;
            stdout_write(stdout, &summary)
        }
        None => {
            stdout_write(stdout, &json)?;
            eprint!("{summary}");
            Ok(())
        }
    }
}

fn estimate_summary(model: &CapabilityModel) -> String {
    let mut s = String::new();
    let m = &model.metadata;
    s += &format!(
        "records {} | hours estimated {} | hours retained {} | days skipped {}\n",
        m.records_read, m.hours_estimated, m.hours_retained, m.days_skipped
    );
    s += "building,buckets,mean_fit_distance,max_fit_distance,mean_residual_norm\n";
    for (id, b) in &model.buildings {
        let d: Vec<f64> = b.buckets.iter().map(|x| x.fit_distance).collect();
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        let max = d.iter().copied().fold(0.0, f64::max);
        s += &format!(
            "{id},{},{},{},{}\n",
            b.buckets.len(),
            fmt_sig(mean),
            fmt_sig(max),
            fmt_sig(b.mean_residual_norm)
        );
    }
    s += &format!("dropped buckets {}\n", m.dropped_buckets.len());
    const SHOWN: usize = 5;
    for w in m.warnings.iter().take(SHOWN) {
        s += &format!("warning: {w}\n");
    }
    if m.warnings.len() > SHOWN {
        s += &format!("... {} more warnings in the model metadata\n", m.warnings.len() - SHOWN);
    }
    s
}

fn bucket_dists(
    model: &CapabilityModel,
    building: &str,
) -> Result<Vec<(BucketKey, CurtailmentDistribution)>> {
    model
        .building(building)?
        .buckets
        .iter()
        .map(|b| Ok((b.key(), CurtailmentDistribution::Empirical(b.empirical()?))))
        .collect()
}

fn key_fields(k: &BucketKey) -> [String; 3] {
    [k.month.to_string(), k.hour.to_string(), k.is_weekend.to_string()]
}

fn decision_fields(d: &ContractDecision) -> [String; 6] {
    [
        fmt_sig(d.psi),
        fmt_sig(d.c_star),
        d.clipping().as_str().to_string(),
        fmt_sig(d.expected_profit),
        fmt_sig(d.cvar),
        fmt_sig(d.objective),
    ]
}

fn csv_text(header: &[&str], rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::io("buffering csv", std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv fields are utf-8"))
}

pub const ORACLE_POINTS: f64 = 1e4;

fn contract_csv(config: &RunConfig, model: &CapabilityModel, building: &str, oracle: bool) -> Result<String> {
    let terms = config.terms()?;
    let mut header = vec![
        "month", "hour", "is_weekend", "psi", "c_star", "clipped", "expected_profit", "cvar", "objective",
    ];
    if oracle {
        header.push("c_star_grid");
    }
    let mut rows = Vec::new();
    for (key, dist) in bucket_dists(model, building)? {
        let d = contract::optimal_contract(&terms, &dist)?;
        let mut row: Vec<String> = key_fields(&key).into_iter().chain(decision_fields(&d)).collect();
        if oracle {
            let upper = dist.search_upper().min(terms.c_max());
            let grid = if upper > 0.0 {
                contract::grid_search_optimal(&terms, &dist, upper / ORACLE_POINTS)?
            } else {
                0.0
            };
            row.push(fmt_sig(grid));
        }
        rows.push(row);
    }
    csv_text(&header, rows)
}

/// Parse `a0:a1:n`.
pub fn parse_sweep(spec: &str) -> Result<(f64, f64, usize)> {
    let bad = || Error::InvalidArgument(format!("sweep must look like a0:a1:n, got {spec:?}"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [a0, a1, n] = parts.as_slice() else {
        return Err(bad());
    };
    let out = (
        a0.parse().map_err(|_| bad())?,
        a1.parse().map_err(|_| bad())?,
        n.parse().map_err(|_| bad())?,
    );
    contract::alpha_grid(out.0, out.1, out.2)?;
    Ok(out)
}

fn sweep_csv(config: &RunConfig, model: &CapabilityModel, building: &str, spec: &str) -> Result<String> {
    let terms = config.terms()?;
    let (a0, a1, n) = parse_sweep(spec)?;
    let header = [
        "month", "hour", "is_weekend", "alpha", "psi", "c_star", "clipped", "expected_profit", "cvar",
        "objective",
    ];
    let mut rows = Vec::new();
    for (key, dist) in bucket_dists(model, building)? {
        for point in contract::alpha_sweep(&terms, &dist, a0, a1, n)? {
            rows.push(
                key_fields(&key)
                    .into_iter()
                    .chain([fmt_sig(point.alpha)])
                    .chain(decision_fields(&point.decision))
                    .collect(),
            );
        }
    }
    csv_text(&header, rows)
}

/// Candidate scores summed over the buckets shared with the base building.
pub fn ranking(
    config: &RunConfig,
    model: &CapabilityModel,
    base: &str,
    candidates: &[String],
) -> Result<Vec<PartnerRow>> {
    let terms = config.terms()?;
    let base_model = model.building(base)?;
    let ids: Vec<String> = if candidates.is_empty() {
        model.buildings.keys().filter(|id| *id != base).cloned().collect()
    } else {
        candidates.to_vec()
    };
    let mut rows = Vec::new();
    let mut unalignable = Vec::new();
    for id in &ids {
        let cand = model.building(id)?;
        let mut total = PartnerRow {
            candidate_id: id.clone(),
            delta_sigma: 0.0,
            delta_j_oracle: 0.0,
            delta_j_printed: Some(0.0),
            delta_j_cancelled: Some(0.0),
            individual_profit: 0.0,
        };
        let mut shared = 0;
        for b in &base_model.buckets {
            let Some(c) = cand.bucket(b.key()) else { continue };
            if b.keys != c.keys {
                unalignable.push(format!("{base}/{id} {}", b.key()));
                continue;
            }
            shared += 1;
            let pair = AssetPortfolio::empirical(
                vec![Asset::new(base, b.aligned()?), Asset::new(id.as_str(), c.aligned()?)],
                terms,
            )?;
            let r = aggregation::evaluate(&pair)?;
            total.delta_sigma += r.delta_sigma;
            total.delta_j_oracle += r.delta_j_oracle;
            total.delta_j_printed = total.delta_j_printed.zip(r.delta_j_printed).map(|(a, b)| a + b);
            total.delta_j_cancelled = total.delta_j_cancelled.zip(r.delta_j_cancelled).map(|(a, b)| a + b);
            total.individual_profit += r.member_decisions[1].expected_profit;
        }
        if shared == 0 {
            unalignable.push(format!("{base}/{id}: no shared buckets"));
        }
        rows.push(total);
    }
    if !unalignable.is_empty() {
        return Err(Error::Unalignable(unalignable.join("; ")));
    }
    sort_rows(&mut rows);
    Ok(rows)
}

pub fn ranking_csv(rows: &[PartnerRow]) -> Result<String> {
    let opt = |v: Option<f64>| v.map(fmt_sig).unwrap_or_default();
    csv_text(
        &[
            "candidate_id",
            "delta_sigma",
            "delta_j_oracle",
            "delta_j_printed",
            "delta_j_cancelled",
            "individual_profit",
        ],
        rows.iter()
            .map(|r| {
                vec![
                    r.candidate_id.clone(),
                    fmt_sig(r.delta_sigma),
                    fmt_sig(r.delta_j_oracle),
                    opt(r.delta_j_printed),
                    opt(r.delta_j_cancelled),
                    fmt_sig(r.individual_profit),
                ]
            })
            .collect(),
    )
}

/// Read `c_star` per bucket from a contract CSV.
pub fn read_contracts(path: &Path) -> Result<BTreeMap<BucketKey, f64>> {
    let parse = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| parse(0, e.to_string()))?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| parse(1, format!("missing column {name:?}")))
    };
    let (month, hour, weekend, c_star) = (col("month")?, col("hour")?, col("is_weekend")?, col("c_star")?);
    let mut out = BTreeMap::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let field = |i: usize| row.get(i).unwrap_or("");
        let key = (|| -> Option<BucketKey> {
            BucketKey::new(field(month).parse().ok()?, field(hour).parse().ok()?, field(weekend).parse().ok()?)
                .ok()
        })()
        .ok_or_else(|| parse(line, "bad bucket key".into()))?;
        let c: f64 = field(c_star)
            .parse()
            .ok()
            .filter(|c: &f64| c.is_finite() && *c >= 0.0)
            .ok_or_else(|| parse(line, format!("bad c_star {:?}", field(c_star))))?;
        if out.insert(key, c).is_some() {
            return Err(parse(line, format!("bucket {key} repeated")));
        }
    }
    Ok(out)
}

fn simulate(
    cli: &Cli,
    config: &RunConfig,
    model_flag: Option<&PathBuf>,
    contracts_flag: Option<&PathBuf>,
    building: &str,
    trials_csv: bool,
    stdout: &mut dyn Write,
) -> Result<()> {
    let terms = config.terms()?;
    let mut sim = config.simulation.ok_or_else(|| {
        Error::InvalidArgument("configuration has no `simulation` block".into())
    })?;
    if let Some(seed) = cli.seed {
        sim.seed = seed;
    }
    let model = load_model(config, model_flag)?;
    let contracts_path =
        config.resolve(contracts_flag, config.paths.contracts.as_ref(), "contract CSV (--contracts)")?;
    let contracts = read_contracts(&contracts_path)?;
    let capability: BTreeMap<BucketKey, CurtailmentDistribution> =
        bucket_dists(&model, building)?.into_iter().collect();
    let missing: Vec<String> = contracts
        .keys()
        .filter(|k| !capability.contains_key(k))
        .map(|k| k.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Model(format!(
            "contracts reference buckets absent from {building}: {}",
            missing.join("; ")
        )));
    }
    let mut months: Vec<u32> = contracts.keys().map(|k| k.month).collect();
    months.dedup();
    let mut schedule = Vec::new();
    for m in months {
        schedule.extend(simulation::month_schedule(&capability, &contracts, config.calendar_year, m)?);
    }
    let result = simulation::simulate_horizon(&terms, &schedule, &sim)?;

    let dir = cli
        .out
        .clone()
        .ok_or_else(|| Error::InvalidArgument("simulate needs --out DIR".into()))?;
    fs::create_dir_all(&dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    let write = |name: &str, text: &str| {
        let p = dir.join(name);
        fs::write(&p, text).map_err(|e| Error::io(format!("writing {}", p.display()), e))
    };
    let mut json = serde_json::to_string_pretty(&result)?;
    json.push('\n');
    write("result.json", &json)?;

    let analytic = result.profit.analytic;
    let conv = simulation::convergence_table(&result.profits)
        .into_iter()
        .map(|(n, m, se)| {
            let z = simulation::Estimate { value: m, std_error: se, analytic }.z_score();
            vec![n.to_string(), fmt_sig(m), fmt_sig(se), fmt_sig(analytic), fmt_sig(z)]
        })
        .collect();
    write(
        "convergence.csv",
        &csv_text(&["n", "mean_profit", "std_error", "analytic", "z_score"], conv)?,
    )?;

    let mut checks = vec![check_row("profit", "horizon", &result.profit)];
    checks.push(check_row("shortfall_frequency", "horizon", &result.shortfall_frequency));
    for e in &result.entries {
        if let Some(c) = &e.cvar {
            checks.push(check_row("cvar", &e.label, c));
        }
    }
    write(
        "checks.csv",
        &csv_text(&["quantity", "scope", "monte_carlo", "analytic", "std_error", "z_score", "within_3se"], checks)?,
    )?;
    if trials_csv {
        let mut buf = Vec::new();
        simulation::write_trials_csv(&result.profits, &mut buf)?;
        write("trials.csv", &String::from_utf8(buf).expect("utf-8"))?;
    }
    stdout_write(
        stdout,
        &format!(
            "trials {} | windows {} | mean profit {} (se {}) | analytic {} | events {} | clipped draws {}\n",
            result.n_trials,
            result.windows_per_trial,
            fmt_sig(result.profit.value),
            fmt_sig(result.profit.std_error),
            fmt_sig(result.profit.analytic),
            result.events,
            result.clipped_draws
        ),
    )
}

fn check_row(quantity: &str, scope: &str, e: &simulation::Estimate) -> Vec<String> {
    let z = e.z_score();
    vec![
        quantity.into(),
        scope.into(),
        fmt_sig(e.value),
        fmt_sig(e.analytic),
        fmt_sig(e.std_error),
        fmt_sig(z),
        (z <= 3.0).to_string(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_rejects_unknown_keys() {
        let dir = Path::new(".");
        let ok = r#"{"terms":{"pi_e":0.2,"pi_r":1,"pi_p":10,"p":0.2}}"#;
        assert!(RunConfig::from_json(ok, dir).is_ok());
        let bad = r#"{"terms":{"pi_e":0.2,"pi_r":1,"pi_p":10,"p":0.2},"extra":1}"#;
        assert!(RunConfig::from_json(bad, dir).is_err());
        let ill = r#"{"terms":{"pi_e":0.2,"pi_r":3,"pi_p":10,"p":0.2}}"#;
        assert!(matches!(
            RunConfig::from_json(ill, dir),
            Err(Error::IllPosedProgram { .. })
        ));
        let est = r#"{"estimation":{"min_bucket_size":4}}"#;
        assert!(RunConfig::from_json(est, dir).is_err());
    }

    #[test]
    fn sweep_spec() {
        assert_eq!(parse_sweep("0:1:11").unwrap(), (0.0, 1.0, 11));
        assert!(parse_sweep("0:1").is_err());
        assert!(parse_sweep("1:0:3").is_err());
        assert!(parse_sweep("a:1:3").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(main_with(["drpart", "--help"]), 0);
        assert_eq!(main_with(["drpart", "frobnicate"]), 2);
        assert_eq!(main_with(["drpart", "estimate"]), 2);
        assert_eq!(Error::Unalignable("x".into()).exit_code(), 3);
    }
}
