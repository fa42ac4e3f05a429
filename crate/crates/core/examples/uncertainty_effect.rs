//! How capability spread moves the contract and the profit.
//!
//! ```text
//! cargo run --example uncertainty_effect
//! ```
//!
//! For a normal capability `C* = mu + gamma * sigma`. Expected profit falls
//! with sigma; under risk aversion the objective's sigma coefficient changes
//! sign at a threshold `gamma_hat`.

use drpart::contract::{self, gamma_threshold, sigma_sensitivity};
use drpart::program::ProgramTermsSpec;

fn main() -> drpart::Result<()> {
    for alpha in [0.0, 0.5] {
        let terms = ProgramTermsSpec::new(0.2, 1.0, 10.0, 0.2).alpha(alpha).build()?;
        let g = contract::gamma(&terms)?;
        println!("alpha = {alpha}: gamma = {g:.6}");
        println!("{:>6} {:>10} {:>12} {:>12}", "sigma", "C*", "dProfit/ds", "dObj/ds");
        for sigma in [1.0, 2.0, 4.0, 8.0] {
            let s = sigma_sensitivity(&terms, 30.0, sigma, 1e-4)?;
            let c = 30.0 + g * sigma;
            println!("{sigma:>6} {c:>10.4} {:>12.6} {:>12.6}", s.d_profit, s.d_objective);
        }
        match gamma_threshold(&terms, 1e-9) {
            Some(t) => println!("sigma coefficient changes sign at gamma_hat = {:.8}\n", t.gamma_hat),
            None => println!("sigma coefficient keeps its sign for every gamma\n"),
        }
    }
    Ok(())
}
