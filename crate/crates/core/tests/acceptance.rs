//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so each criterion can report its own
//! measured figures. Exits non-zero if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use drpart::aggregation::{self, Asset, AssetPortfolio, ContractOrdering, DeltaForm};
use drpart::contract::{self, gamma_threshold, sigma_sensitivity};
use drpart::distribution::{CovarianceModel, CurtailmentDistribution};
use drpart::estimation::{self, DayType, EndUse, EndUseShapes, EstimationConfig, HOURS};
use drpart::normal;
use drpart::program::{ProgramTerms, ProgramTermsSpec};
use drpart::rng::substream;
use drpart::simulation::{self, SimulationConfig};
use drpart::stats::spearman;
use drpart::synthetic::factor_samples;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

type Check = fn() -> Outcome;

fn main() {
    let criteria: [(&str, Check); 10] = [
        ("optimal contract vs brute-force grid", c1_grid),
        ("closed-form optimal profit at alpha = 0", c2_profit_formula),
        ("risk-aversion sweep shape and collapse threshold", c3_alpha_sweep),
        ("normal capability: contract and spread sensitivity", c4_result_two),
        ("aggregate contract sign law", c5_sign_law),
        ("aggregation profit delta audit", c6_delta_audit),
        ("complementarity ranking on 13 candidates", c7_ranking),
        ("Monte Carlo convergence", c8_monte_carlo),
        ("estimation pipeline", c9_estimation),
        ("distribution layer", c10_distributions),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = format!("{}", i + 1);
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        println!(
            "{} [{id:>2}] {name}: {} ({secs:.1}s)",
            if result.pass { "PASS" } else { "FAIL" },
            result.detail
        );
        failed += usize::from(!result.pass);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

fn rng(tag: u8) -> ChaCha8Rng {
    substream(20_240_601, 0, tag)
}

/// Terms with the requested quantile argument; `None` if `pi_r` would be negative.
fn terms_with_psi(psi: f64, pi_e: f64, pi_p: f64, p: f64, alpha: f64) -> Option<ProgramTerms> {
    let d = p * (pi_p + pi_e);
    let pi_r = (psi * d - p * pi_e + alpha * p * pi_p) / (1.0 + alpha);
    if pi_r < 0.0 {
        return None;
    }
    ProgramTermsSpec::new(pi_e, pi_r, pi_p, p).alpha(alpha).build().ok()
}

fn random_terms(r: &mut ChaCha8Rng, psi_range: (f64, f64), alpha_max: f64) -> ProgramTerms {
    loop {
        let psi = r.random_range(psi_range.0..psi_range.1);
        let pi_e = r.random_range(0.0..1.0);
        let pi_p = r.random_range(2.0..20.0);
        let p = r.random_range(0.001..0.3);
        let alpha = if alpha_max > 0.0 { r.random_range(0.0..alpha_max) } else { 0.0 };
        if let Some(t) = terms_with_psi(psi, pi_e, pi_p, p, alpha) {
            return t;
        }
    }
}

fn random_empirical(r: &mut ChaCha8Rng) -> CurtailmentDistribution {
    let n = r.random_range(20..2000);
    let scale = r.random_range(1.0..100.0);
    let kind = r.random_range(0..3);
    let samples = (0..n)
        .map(|_| {
            let u: f64 = r.random();
            match kind {
                0 => scale * u,
                1 => scale * (-u.max(1e-12).ln()),
                _ => {
                    let z: f64 = r.sample(StandardNormal);
                    (scale * (1.0 + 0.3 * z)).max(0.0)
                }
            }
        })
        .collect();
    CurtailmentDistribution::empirical(samples).unwrap()
}

fn c1_grid() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1);
    let mut worst_steps: f64 = 0.0;
    let mut failures = 0;
    for i in 0..200 {
        let terms = random_terms(&mut r, (0.02, 0.98), 1.0);
        let dist = if i % 2 == 0 {
            random_empirical(&mut r)
        } else {
            let mu = r.random_range(10.0..100.0);
            CurtailmentDistribution::normal(mu, r.random_range(0.5..mu / 3.0)).unwrap()
        };
        let step = dist.search_upper() / 1e4;
        let c_star = contract::optimal_contract(&terms, &dist).unwrap().c_star;
        let grid = contract::grid_search_optimal(&terms, &dist, step).unwrap();
        let steps = (c_star - grid).abs() / step;
        worst_steps = worst_steps.max(steps);
        if steps > 1.0 {
            failures += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        failures == 0 && elapsed < Duration::from_secs(60),
        format!(
            "200 scenarios, worst gap {worst_steps:.3} grid steps, {failures} beyond one step, {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn c2_profit_formula() -> Outcome {
    let mut r = rng(2);
    let mut worst: f64 = 0.0;
    let mut worst_alpha: f64 = 0.0;
    for i in 0..100 {
        let alpha = if i < 50 { 0.0 } else { 1.0 };
        let terms = random_terms(&mut r, (0.02, 0.98), alpha);
        let mu = r.random_range(10.0..100.0);
        let dist = CurtailmentDistribution::normal(mu, r.random_range(0.5..mu / 4.0)).unwrap();
        let c = contract::optimal_contract(&terms, &dist).unwrap().c_star;
        let check = contract::optimal_profit_formula(&terms, &dist, c).unwrap();
        let rel = (check.residual / check.expected_profit).abs();
        if alpha == 0.0 {
            worst = worst.max(rel);
        } else {
            worst_alpha = worst_alpha.max(rel);
        }
    }
    // Uniform(0, 1) in closed form: C* = psi, P(C) = C^2 / 2.
    let t = ProgramTermsSpec::new(0.2, 1.0, 10.0, 0.2).build().unwrap();
    let psi = contract::quantile_argument(&t).unwrap();
    let d = t.p() * (t.pi_p() + t.pi_e());
    let formula = d * psi * psi / 2.0;
    let shortfall = psi * psi - psi * psi / 2.0;
    let delivery = psi * psi / 2.0 + psi * (1.0 - psi);
    let direct = t.pi_r() * psi + t.p() * (-t.pi_p() * shortfall + t.pi_e() * delivery);
    let uniform_rel = ((formula - direct) / direct).abs();
    let uniform_ok = uniform_rel <= 1e-9 && (formula - 0.2651).abs() < 5e-5;
    outcome(
        worst <= 1e-9 && uniform_ok,
        format!(
            "50 normal scenarios worst relative residual {worst:.2e}; uniform closed form {formula:.6} vs {direct:.6}; at alpha > 0 residual {worst_alpha:.2e} (reported)"
        ),
    )
}

fn c3_alpha_sweep() -> Outcome {
    let mut r = rng(3);
    let mut problems = Vec::new();
    let mut worst_threshold: f64 = 0.0;
    for case in 0..20 {
        let terms = random_terms(&mut r, (0.05, 0.95), 0.0);
        let dist = if case % 2 == 0 {
            let mut d;
            loop {
                d = random_empirical(&mut r);
                if let CurtailmentDistribution::Empirical(e) = &d {
                    if e.min() > 0.0 {
                        break;
                    }
                }
            }
            d
        } else {
            CurtailmentDistribution::normal(50.0, 8.0).unwrap()
        };
        // Independent root of the psi numerator by bisection.
        let numerator = |a: f64| {
            terms.pi_r() + terms.p() * terms.pi_e() + a * (terms.pi_r() - terms.p() * terms.pi_p())
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        while numerator(hi) > 0.0 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if numerator(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let root = 0.5 * (lo + hi);
        let closed = contract::collapse_alpha(&terms);
        worst_threshold = worst_threshold.max((root - closed).abs());

        let sweep = contract::alpha_sweep(&terms, &dist, 0.0, 2.0 * closed, 401).unwrap();
        for w in sweep.windows(2) {
            let (a, b) = (&w[0].decision, &w[1].decision);
            if b.c_star > a.c_star || b.expected_profit > a.expected_profit + 1e-12 * a.expected_profit.abs() {
                problems.push(format!("case {case}: increase at alpha {}", w[1].alpha));
                break;
            }
        }
        for pt in &sweep {
            let flat = pt.decision.psi <= 0.0;
            if flat && (pt.decision.c_star != 0.0 || pt.decision.expected_profit != 0.0) {
                problems.push(format!("case {case}: nonzero after collapse at {}", pt.alpha));
                break;
            }
        }
        let before = terms.with_alpha(closed * (1.0 - 1e-9)).unwrap();
        let after = terms.with_alpha(closed * (1.0 + 1e-9)).unwrap();
        let c_before = contract::optimal_contract(&before, &dist).unwrap();
        let c_after = contract::optimal_contract(&after, &dist).unwrap();
        if case % 2 == 0 && !(c_before.c_star > 0.0) {
            problems.push(format!("case {case}: contract already zero below threshold"));
        }
        if c_after.c_star != 0.0 {
            problems.push(format!("case {case}: contract nonzero above threshold"));
        }
    }
    outcome(
        problems.is_empty() && worst_threshold <= 1e-9,
        format!(
            "20 sweeps x 401 points; threshold vs bisection root max gap {worst_threshold:.2e}; {}",
            if problems.is_empty() { "monotone with exact zeros".into() } else { problems.join("; ") }
        ),
    )
}

fn c4_result_two() -> Outcome {
    let mut r = rng(4);
    let mut worst_c: f64 = 0.0;
    let mut worst_fd: f64 = 0.0;
    for _ in 0..50 {
        let terms = random_terms(&mut r, (0.02, 0.98), 1.0);
        let mu = r.random_range(20.0..100.0);
        let sigma = r.random_range(0.5..mu / 8.0);
        let g = contract::gamma(&terms).unwrap();
        let dist = CurtailmentDistribution::normal(mu, sigma).unwrap();
        let c = contract::optimal_contract(&terms, &dist).unwrap().c_star;
        worst_c = worst_c.max((c - (mu + g * sigma)).abs() / c.max(1.0));
        // Phi(gamma) = psi confirms gamma is the standard normal quantile.
        worst_c = worst_c.max((normal::cdf(g) - contract::quantile_argument(&terms).unwrap()).abs());
        let s = sigma_sensitivity(&terms, mu, sigma, 1e-3).unwrap();
        worst_fd = worst_fd.max((s.d_contract - g).abs());
    }
    let at_zero = terms_with_psi(0.5, 0.2, 10.0, 0.2, 0.0).unwrap();
    let s0 = sigma_sensitivity(&at_zero, 50.0, 5.0, 1e-3).unwrap();
    let expected = -at_zero.p() * (at_zero.pi_p() + at_zero.pi_e()) * normal::pdf(0.0);
    let slope_ok = s0.d_profit < 0.0 && (s0.d_profit - expected).abs() < 1e-6;

    let mut brackets = Vec::new();
    let mut flips_ok = true;
    for alpha in [0.1, 0.5, 1.0, 3.0] {
        let t = terms_with_psi(0.6, 0.2, 10.0, 0.2, alpha).unwrap();
        let th = gamma_threshold(&t, 1e-7).expect("exists under risk aversion");
        let coef = |g: f64| {
            -t.p() * (t.pi_p() + t.pi_e()) * normal::pdf(g) - t.alpha() * t.no_asset_margin() * g
        };
        flips_ok &= coef(th.bracket.0) < 0.0 && coef(th.bracket.1) >= 0.0;
        brackets.push(th.bracket.1 - th.bracket.0);
    }
    let none_at_zero = gamma_threshold(&at_zero, 1e-7).is_none();
    let widest = brackets.iter().copied().fold(0.0, f64::max);
    outcome(
        worst_c <= 1e-9 && worst_fd <= 1e-6 && slope_ok && flips_ok && widest < 1e-6 && none_at_zero,
        format!(
            "C* vs mu + gamma sigma max {worst_c:.2e}; dC*/dsigma vs gamma max {worst_fd:.2e}; dJ*/dsigma at gamma 0 = {:.6} (expected {expected:.6}); gamma_hat bracket max {widest:.2e}, none at alpha 0: {none_at_zero}",
            s0.d_profit
        ),
    )
}

fn random_portfolio(r: &mut ChaCha8Rng, terms: ProgramTerms, mu_sigma_ratio: f64) -> AssetPortfolio {
    let n = r.random_range(2..6);
    let mus: Vec<f64> = (0..n).map(|_| r.random_range(50.0..200.0)).collect();
    let sds: Vec<f64> = mus.iter().map(|m| r.random_range(1.0..m / mu_sigma_ratio)).collect();
    // One-factor correlation: always positive semi-definite.
    let loads: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
    let corr: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { loads[i] * loads[j] }).collect())
        .collect();
    let model = CovarianceModel::new(mus, sds, corr).unwrap();
    AssetPortfolio::normal((0..n).map(|k| format!("a{k}")).collect(), model, terms).unwrap()
}

fn c5_sign_law() -> Outcome {
    let mut r = rng(5);
    let mut checked = 0;
    let mut violations = 0;
    for _ in 0..300 {
        let terms = random_terms(&mut r, (0.02, 0.98), 1.0);
        let p = random_portfolio(&mut r, terms, 6.0);
        let cmp = aggregation::contract_comparison(&p).unwrap();
        if cmp.delta_sigma <= 1e-9 {
            continue;
        }
        checked += 1;
        // Independent: sum of members' mu + gamma sigma against the aggregate's.
        let g = cmp.gamma;
        let expected = g * cmp.delta_sigma;
        let diff = cmp.sum_c_star - cmp.c_star_ag;
        let sign_ok = match cmp.ordering {
            ContractOrdering::AgSmaller => g > 0.0,
            ContractOrdering::AgLarger => g < 0.0,
            ContractOrdering::Equal => g.abs() < 1e-9 || cmp.delta_sigma * g.abs() < 1e-9 * cmp.sum_c_star,
        };
        if !sign_ok || (diff - expected).abs() > 1e-8 * cmp.sum_c_star {
            violations += 1;
        }
    }
    let mut equal_ok = true;
    for rho_case in [(10.0, 10.0), (3.0, 7.0)] {
        let t = terms_with_psi(0.8, 0.2, 10.0, 0.2, 0.3).unwrap();
        let model = CovarianceModel::pair([100.0, 60.0], [rho_case.0, rho_case.1], 1.0).unwrap();
        let p = AssetPortfolio::normal(vec!["a".into(), "b".into()], model, t).unwrap();
        let cmp = aggregation::contract_comparison(&p).unwrap();
        equal_ok &= cmp.delta_sigma == 0.0 && cmp.ordering == ContractOrdering::Equal;
    }
    outcome(
        violations == 0 && equal_ok && checked > 100,
        format!("{checked} portfolios with positive spread reduction, {violations} violations; comonotone pairs equal: {equal_ok}"),
    )
}

fn c6_delta_audit() -> Outcome {
    let mut r = rng(6);
    let (mut worst_cancel, mut worst_printed): (f64, f64) = (0.0, 0.0);
    let mut n = 0;
    while n < 100 {
        let terms = random_terms(&mut r, (0.02, 0.98), 1.0);
        let p = random_portfolio(&mut r, terms, 6.0);
        let oracle = aggregation::profit_delta_oracle(&p).unwrap();
        if oracle.abs() < 1e-6 {
            continue;
        }
        n += 1;
        let cancelled = aggregation::profit_delta_normal(&p, DeltaForm::MeanCancelled).unwrap();
        let printed = aggregation::profit_delta_normal(&p, DeltaForm::AsPrinted).unwrap();
        worst_cancel = worst_cancel.max(((cancelled - oracle) / oracle).abs());
        let g = contract::gamma(&terms).unwrap();
        let term = -terms.p() * (terms.pi_p() + terms.pi_e()) * (p.len() as f64 - 1.0) * normal::cdf(g);
        worst_printed = worst_printed.max(((printed - oracle - term) / term).abs());
    }
    let t = terms_with_psi(0.7, 0.2, 10.0, 0.2, 0.4).unwrap();
    let model = CovarianceModel::pair([80.0, 80.0], [6.0, 6.0], 1.0).unwrap();
    let comon = AssetPortfolio::normal(vec!["a".into(), "b".into()], model, t).unwrap();
    let comon_delta = aggregation::profit_delta_oracle(&comon).unwrap();
    outcome(
        worst_cancel <= 0.01 && worst_printed <= 0.01 && comon_delta.abs() <= 1e-9,
        format!(
            "100 portfolios: mean-cancelled vs oracle max rel {worst_cancel:.2e}; as-printed residual vs -(N-1)p(pi_p+pi_e)Phi(gamma) max rel {worst_printed:.2e}; comonotone delta {comon_delta:.2e}"
        ),
    )
}

fn c7_ranking() -> Outcome {
    let start = Instant::now();
    let terms = ProgramTermsSpec::new(0.2, 0.03, 10.0, 0.005).build().unwrap();
    let mut mus = vec![60.0];
    let mut sigmas = vec![8.0];
    let mut loadings = vec![1.0];
    for k in 0..13 {
        mus.push(40.0 + 3.0 * k as f64);
        sigmas.push(4.0 + (k % 4) as f64 * 2.0);
        loadings.push(-0.9 + 1.8 * k as f64 / 12.0);
    }
    let samples = factor_samples(&mus, &sigmas, &loadings, 5_000, 17).unwrap();
    let base = Asset::new("base", samples[0].clone());
    let candidates: Vec<Asset> = samples[1..]
        .iter()
        .enumerate()
        .map(|(k, s)| Asset::new(format!("cand_{k:02}"), s.clone()))
        .collect();
    let rows = aggregation::rank_partners(&base, &candidates, &terms).unwrap();
    let x: Vec<f64> = rows.iter().map(|r| r.delta_sigma).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.delta_j_oracle).collect();
    let rho = spearman(&x, &y);
    let elapsed = start.elapsed();
    outcome(
        rows.len() == 13 && rho >= 0.9 && elapsed < Duration::from_secs(30),
        format!("Spearman {rho:.4} over {} candidates", rows.len()),
    )
}

fn c8_monte_carlo() -> Outcome {
    let start = Instant::now();
    let mut r = rng(8);
    let mut worst = [0.0f64; 3];
    let mut misses = Vec::new();
    let mut ran = 0;
    for s in 0..20 {
        // Event probability of a few windows per horizon, as in practice.
        let terms = loop {
            let psi = r.random_range(0.05..0.95);
            let p = r.random_range(1.0..12.0) / 720.0;
            let alpha = r.random_range(0.0..1.0);
            if let Some(t) = terms_with_psi(psi, r.random_range(0.0..1.0), r.random_range(2.0..20.0), p, alpha) {
                break t;
            }
        };
        let mu = r.random_range(10.0..100.0);
        let dist = CurtailmentDistribution::normal(mu, r.random_range(0.5..mu / 3.0)).unwrap();
        let c_star = contract::optimal_contract(&terms, &dist).unwrap().c_star;
        let config = SimulationConfig {
            n_trials: 100_000,
            windows_per_horizon: 720,
            seed: 1000 + s,
            parallel_streams: 1,
        };
        let res = simulation::simulate_horizon(
            &terms,
            &simulation::single_schedule(dist, c_star, &config),
            &config,
        )
        .unwrap();
        let zs = [
            res.profit.z_score(),
            res.entries[0].cvar.map_or(f64::INFINITY, |c| c.z_score()),
            res.shortfall_frequency.z_score(),
        ];
        ran += 1;
        for (k, z) in zs.iter().enumerate() {
            worst[k] = worst[k].max(*z);
        }
        if zs.iter().any(|z| *z > 3.0) {
            misses.push(format!("scenario {s}: z = {:.2}/{:.2}/{:.2}", zs[0], zs[1], zs[2]));
        }
    }
    let elapsed = start.elapsed();
    outcome(
        ran == 20 && misses.is_empty() && elapsed < Duration::from_secs(300),
        format!(
            "{ran} scenarios x 1e5 trials x 720 windows; worst z profit {:.2}, CVaR {:.2}, shortfall {:.2}{}",
            worst[0],
            worst[1],
            worst[2],
            if misses.is_empty() { String::new() } else { format!("; {}", misses.join("; ")) }
        ),
    )
}

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data")
}

fn run_cli(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_drpart"))
        .args(args)
        .output()
        .expect("binary runs");
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn c9_estimation() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;

    let mut s1 = [0.0; HOURS];
    let mut s2 = [0.0; HOURS];
    for h in 0..HOURS {
        if h < 12 { s1[h] = 1.0 } else { s2[h] = 1.0 }
    }
    let shapes =
        EndUseShapes::new(vec![EndUse::uniform("hvac", s1), EndUse::uniform("other", s2)], "hvac").unwrap();
    let mut profile = [0.0; HOURS];
    for h in 0..HOURS {
        profile[h] = 2.0 * s1[h] + 3.0 * s2[h];
    }
    let exact = estimation::decompose_load(&profile, &shapes, DayType::Weekday).unwrap();
    let exact_ok = exact.weights == vec![2.0, 3.0] && exact.residual_norm == 0.0;
    ok &= exact_ok;
    notes.push(format!("exact weights {:?}", exact.weights));

    let mut r = substream(7, 0, 0);
    let mut noisy = profile;
    for v in noisy.iter_mut() {
        *v += 0.01 * (2.0 * r.random::<f64>() - 1.0);
    }
    let w = estimation::decompose_load(&noisy, &shapes, DayType::Weekday).unwrap().weights;
    let noisy_ok = (w[0] - 2.0).abs() <= 0.05 && (w[1] - 3.0).abs() <= 0.05;
    ok &= noisy_ok;
    notes.push(format!("noisy weights ({:.4}, {:.4})", w[0], w[1]));

    let data = fixture_dir();
    let cfg = EstimationConfig::default();
    let (records, _) = estimation::read_load_csv(&data.join("load.csv")).unwrap();
    let (shapes, _) = estimation::read_shapes_csv(&data.join("shapes.csv"), "hvac").unwrap();
    let model = estimation::build_capability_model(&records, &shapes, &cfg).unwrap();
    let mut seen = std::collections::HashSet::new();
    let mut duplicates = 0;
    let mut total = 0;
    for (id, b) in &model.buildings {
        for bm in &b.buckets {
            for k in &bm.keys {
                total += 1;
                duplicates += usize::from(!seen.insert((id.clone(), k.clone())));
            }
        }
    }
    let dropped: usize = model.metadata.dropped_buckets.iter().map(|d| d.samples).sum();
    let counts_ok = duplicates == 0
        && total == model.metadata.hours_retained
        && total + dropped == model.metadata.hours_estimated
        && model.metadata.hours_estimated == records.len();
    ok &= counts_ok;
    notes.push(format!("{total} hours in buckets of {} records, {duplicates} duplicates", records.len()));

    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = data.join("config.json");
    let cfg_s = cfg_path.to_str().unwrap();
    let mut identical = true;
    let mut codes = Vec::new();
    let mut outputs = Vec::new();
    for run in 0..2 {
        let dir = tmp.path().join(format!("run{run}"));
        std::fs::create_dir_all(&dir).unwrap();
        let p = |n: &str| dir.join(n).to_str().unwrap().to_string();
        let (model, contracts, sim) = (p("model.json"), p("contracts.csv"), p("sim"));
        let steps: Vec<Vec<&str>> = vec![
            vec!["--config", cfg_s, "--out", &model, "estimate"],
            vec!["--config", cfg_s, "--out", &contracts, "contract", "--model", &model, "--building", "office_a", "--with-oracle"],
            vec!["--config", cfg_s, "aggregate", "--model", &model, "--base", "office_a"],
            vec!["--config", cfg_s, "--out", &sim, "--seed", "5", "simulate", "--model", &model, "--building", "office_a", "--contracts", &contracts, "--trials-csv"],
        ];
        let mut bytes = Vec::new();
        for args in &steps {
            let (code, stdout) = run_cli(args);
            codes.push(code);
            bytes.push(stdout);
        }
        for f in ["model.json", "contracts.csv", "sim/result.json", "sim/convergence.csv", "sim/checks.csv", "sim/trials.csv"] {
            bytes.push(std::fs::read(dir.join(f)).unwrap_or_default());
        }
        outputs.push(bytes);
    }
    identical &= outputs[0] == outputs[1] && outputs[0][4..].iter().all(|b| !b.is_empty());
    let codes_ok = codes.iter().all(|c| *c == 0);
    ok &= identical && codes_ok;
    notes.push(format!("CLI reruns byte-identical: {identical}, exit codes {codes:?}"));

    outcome(ok, notes.join("; "))
}

/// Adaptive Simpson quadrature with a forced minimum depth.
fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
    }
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (l, r) = (simpson(f, a, m), simpson(f, m, b));
        if depth > 40 || (depth > 6 && (l + r - whole).abs() <= 15.0 * tol) {
            return l + r + (l + r - whole) / 15.0;
        }
        rec(f, a, m, l, tol / 2.0, depth + 1) + rec(f, m, b, r, tol / 2.0, depth + 1)
    }
    rec(f, a, b, simpson(f, a, b), tol, 0)
}

fn c10_distributions() -> Outcome {
    let mut worst_rt: f64 = 0.0;
    for (mu, sigma) in [(0.0, 1.0), (50.0, 5.0), (3.0, 10.0), (1e3, 0.1)] {
        let d = CurtailmentDistribution::normal(mu, sigma).unwrap();
        for i in 1..1000 {
            let u = i as f64 / 1000.0;
            worst_rt = worst_rt.max((d.cdf(d.quantile(u).unwrap()) - u).abs());
        }
    }
    let mut worst_quad: f64 = 0.0;
    for (mu, sigma) in [(10.0, 2.0), (5.0, 4.0), (40.0, 10.0)] {
        let d = CurtailmentDistribution::normal(mu, sigma).unwrap();
        let pdf = |q: f64| normal::pdf((q - mu) / sigma) / sigma;
        for c in [1.0, mu - sigma, mu, mu + 2.0 * sigma] {
            if c <= 0.0 {
                continue;
            }
            let partial = integrate(&|q| q * pdf(q), 0.0, c, 1e-13);
            // Draws clip at zero, so the mass below zero is an atom at q = 0.
            let atom = normal::cdf(-mu / sigma);
            let shortfall = c * atom + integrate(&|q| (c - q) * pdf(q), 0.0, c, 1e-13);
            worst_quad = worst_quad
                .max(((d.partial_expectation(c) - partial) / partial).abs())
                .max(((d.shortfall_expectation(c) - shortfall) / shortfall).abs());
        }
    }
    let t = ProgramTermsSpec::new(0.2, 1.0, 10.0, 0.2).build().unwrap();
    let ds = |s: [f64; 2], rho: f64| {
        let m = CovarianceModel::pair([10.0, 20.0], s, rho).unwrap();
        let p = AssetPortfolio::normal(vec!["a".into(), "b".into()], m, t).unwrap();
        aggregation::complementarity(&p).unwrap()
    };
    let cases = [ds([3.0, 4.0], 0.0), ds([2.0, 2.0], 1.0), ds([2.0, 2.0], -1.0)];
    let exact = cases == [2.0, 0.0, 4.0];
    outcome(
        worst_rt <= 1e-9 && worst_quad <= 1e-6 && exact,
        format!(
            "cdf/quantile roundtrip max {worst_rt:.2e}; quadrature max rel {worst_quad:.2e}; delta sigma cases {cases:?}"
        ),
    )
}
