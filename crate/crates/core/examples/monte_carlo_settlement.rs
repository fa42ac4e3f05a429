//! Replay a month of settlement and compare with the analytic values.
//!
//! ```text
//! cargo run --release --example monte_carlo_settlement
//! ```

use drpart::contract;
use drpart::distribution::CurtailmentDistribution;
use drpart::program::ProgramTermsSpec;
use drpart::simulation::{simulate_horizon, single_schedule, SimulationConfig};

fn main() -> drpart::Result<()> {
    // Three hour-long events expected per 720-window month.
    let terms = ProgramTermsSpec::new(0.2, 0.035, 10.0, 3.0 / 720.0).build()?;
    let dist = CurtailmentDistribution::normal(25.0, 4.0)?;
    let c_star = contract::optimal_contract(&terms, &dist)?.c_star;
    let config = SimulationConfig {
        n_trials: 100_000,
        parallel_streams: 4,
        ..SimulationConfig::new(0, 2024)
    };
    let r = simulate_horizon(&terms, &single_schedule(dist, c_star, &config), &config)?;

    println!("contract {c_star:.4} kWh for {} windows, {} trials", r.windows_per_trial, r.n_trials);
    let show = |name: &str, e: &drpart::simulation::Estimate| {
        println!(
            "{name:<22} mc {:>12.6}  analytic {:>12.6}  se {:>10.3e}  z {:.2}",
            e.value,
            e.analytic,
            e.std_error,
            e.z_score()
        );
    };
    show("monthly profit", &r.profit);
    show("shortfall / window", &r.shortfall_frequency);
    if let Some(c) = &r.entries[0].cvar {
        show("CVaR per window", c);
    }
    println!("events per month {:.3}, clipped draws {}", r.mean_events_per_trial, r.clipped_draws);
    Ok(())
}
