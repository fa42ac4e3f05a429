//! Which partner adds the most by contracting jointly?
//!
//! ```text
//! cargo run --example aggregation_ranking
//! ```
//!
//! Thirteen synthetic candidates with correlations from -0.9 to 0.9 against
//! a base asset are ranked by spread reduction. The ranking tracks the exact
//! profit gain closely.

use drpart::aggregation::{rank_partners, Asset};
use drpart::program::ProgramTermsSpec;
use drpart::stats::spearman;
use drpart::synthetic::factor_samples;

fn main() -> drpart::Result<()> {
    let terms = ProgramTermsSpec::new(0.2, 0.03, 10.0, 0.005).build()?;
    let n = 13;
    let mut mus = vec![60.0];
    let mut sigmas = vec![8.0];
    let mut loadings = vec![1.0];
    for k in 0..n {
        mus.push(40.0 + 3.0 * k as f64);
        sigmas.push(4.0 + (k % 4) as f64 * 2.0);
        loadings.push(-0.9 + 1.8 * k as f64 / (n - 1) as f64);
    }
    let samples = factor_samples(&mus, &sigmas, &loadings, 5_000, 17)?;
    let base = Asset::new("base", samples[0].clone());
    let candidates: Vec<Asset> = samples[1..]
        .iter()
        .enumerate()
        .map(|(k, s)| Asset::new(format!("cand_{k:02}"), s.clone()))
        .collect();

    let rows = rank_partners(&base, &candidates, &terms)?;
    println!("{:<8} {:>10} {:>12} {:>12}", "id", "dSigma", "dJ oracle", "dJ formula");
    for r in &rows {
        println!(
            "{:<8} {:>10.4} {:>12.6} {:>12.6}",
            r.candidate_id,
            r.delta_sigma,
            r.delta_j_oracle,
            r.delta_j_cancelled.unwrap_or(f64::NAN)
        );
    }
    let x: Vec<f64> = rows.iter().map(|r| r.delta_sigma).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.delta_j_oracle).collect();
    println!("\nSpearman(dSigma, dJ) = {:.4}", spearman(&x, &y));
    Ok(())
}
