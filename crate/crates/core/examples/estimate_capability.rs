//! Capability model from the bundled metered-load fixture.
//!
//! ```text
//! cargo run --example estimate_capability
//! ```
//!
//! Decomposes each day into end uses, keeps 60% of HVAC as curtailable and
//! fits each calendar bucket.

use std::path::Path;

use drpart::estimation::{self, BucketKey, EstimationConfig};

fn main() -> drpart::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    let config = EstimationConfig::default();
    let (records, sha) = estimation::read_load_csv(&data.join("load.csv"))?;
    let (shapes, _) = estimation::read_shapes_csv(&data.join("shapes.csv"), &config.curtailable_end_use)?;
    let model = estimation::build_capability_model(&records, &shapes, &config)?;
    println!("source sha256 {sha}");
    println!("{} records, {} hours retained\n", records.len(), model.metadata.hours_retained);

    let key = BucketKey::new(3, 14, false)?;
    println!("{:<10} {:>8} {:>10} {:>10} {:>8}", "building", "samples", "mu", "sigma", "KS");
    for (id, building) in &model.buildings {
        let b = building.bucket(key).expect("every fixture building has weekday afternoons");
        println!(
            "{id:<10} {:>8} {:>10.3} {:>10.3} {:>8.3}",
            b.samples.len(),
            b.normal.mu(),
            b.normal.sigma(),
            b.fit_distance
        );
    }
    println!("\n({} warnings in model metadata)", model.metadata.warnings.len());
    Ok(())
}
