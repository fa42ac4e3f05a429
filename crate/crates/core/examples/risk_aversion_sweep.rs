//! Contract size and profit as risk aversion grows.
//!
//! ```text
//! cargo run --example risk_aversion_sweep
//! ```
//!
//! Both fall monotonically. Once the quantile argument reaches zero the
//! optimal contract is exactly 0 and stays there.

use drpart::contract::{self, alpha_sweep};
use drpart::distribution::CurtailmentDistribution;
use drpart::program::ProgramTermsSpec;

fn main() -> drpart::Result<()> {
    let terms = ProgramTermsSpec::new(0.2, 1.0, 10.0, 0.2).c_hat(0.9).build()?;
    let dist = CurtailmentDistribution::normal(20.0, 5.0)?;
    let collapse = contract::collapse_alpha(&terms);
    println!("contract collapses to zero at alpha = {collapse:.6}\n");
    println!("{:>6} {:>9} {:>10} {:>10} {:>10}", "alpha", "psi", "C*", "profit", "objective");
    for point in alpha_sweep(&terms, &dist, 0.0, 1.5, 16)? {
        let d = point.decision;
        println!(
            "{:>6.2} {:>9.4} {:>10.4} {:>10.4} {:>10.4}{}",
            point.alpha,
            d.psi,
            d.c_star,
            d.expected_profit,
            d.objective,
            if d.clipped_low { "  (clipped)" } else { "" }
        );
    }
    Ok(())
}
