//! Optimal contract for one capability distribution.
//!
//! ```text
//! cargo run --example contract_basics
//! ```
//!
//! Sizes the contract for a normal and an empirical capability, checks it
//! against a brute-force grid, and prints the closed-form optimal profit.

use drpart::contract::{self, optimal_profit_formula};
use drpart::distribution::CurtailmentDistribution;
use drpart::program::ProgramTermsSpec;

fn main() -> drpart::Result<()> {
    // Reservation pays 1/kWh, events (p = 0.2) pay 0.2/kWh delivered and
    // cost 10/kWh of shortfall.
    let terms = ProgramTermsSpec::new(0.2, 1.0, 10.0, 0.2).build()?;
    println!("quantile argument psi = {:.6}", contract::quantile_argument(&terms)?);

    let uniform = CurtailmentDistribution::empirical((0..10_000).map(|i| (i as f64 + 0.5) / 1e4).collect())?;
    let normal = CurtailmentDistribution::normal(40.0, 6.0)?;

    for (name, dist) in [("uniform(0,1)", &uniform), ("normal(40, 6)", &normal)] {
        let d = contract::optimal_contract(&terms, dist)?;
        let upper = dist.search_upper();
        let grid = contract::grid_search_optimal(&terms, dist, upper / 1e4)?;
        let check = optimal_profit_formula(&terms, dist, d.c_star)?;
        println!("\n{name}");
        println!("  C*              {:.6}   (grid {:.6})", d.c_star, grid);
        println!("  expected profit {:.6}", d.expected_profit);
        println!("  closed form     {:.6}   (residual {:.2e})", check.formula, check.residual);
        println!("  CVaR at c_hat   {:.6}", d.cvar);
        println!("  clipping        {}", d.clipping().as_str());
    }

    // A cap on the contract binds when the quantile exceeds it.
    let capped = terms.to_spec().c_max(35.0).build()?;
    let d = contract::optimal_contract(&capped, &normal)?;
    println!("\nwith c_max = 35: C* = {} ({})", d.c_star, d.clipping().as_str());
    Ok(())
}
