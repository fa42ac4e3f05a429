//! Regenerate the bundled synthetic fixture set in `examples/data/`.
//!
//! ```text
//! cargo run --example generate_fixtures
//! ```

use std::fs::File;
use std::path::Path;

use chrono::NaiveDate;
use drpart::estimation::{write_load_csv, write_shapes_csv};
use drpart::synthetic::{default_fleet, generate_load, reference_shapes};

fn main() -> drpart::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    let shapes = reference_shapes();
    let start = NaiveDate::from_ymd_opt(2021, 3, 1).expect("valid date");
    // March and April 2021.
    let load = generate_load(&default_fleet(), &shapes, start, 61, 2021)?;

    let open = |name: &str| File::create(dir.join(name)).expect("examples/data is writable");
    write_shapes_csv(&shapes, open("shapes.csv"))?;
    write_load_csv(&load, open("load.csv"))?;
    println!("wrote {} load records and {} end-use shapes to {}", load.len(), shapes.end_uses().len(), dir.display());
    Ok(())
}
