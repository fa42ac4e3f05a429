//! Seeded synthetic data for examples, fixtures and tests.
//!
//! Buildings share a daily weather factor. Each building's curtailable load
//! loads on it with its own sign and strength, which gives a fleet with mixed
//! correlations.

use chrono::NaiveDate;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::distribution::AlignedSamples;
use crate::estimation::{DayType, EndUse, EndUseShapes, LoadRecord, HOURS};
use crate::rng::substream;
use crate::Result;

const WEATHER: u8 = 0x10;
const BUILDING: u8 = 0x11;
const FACTOR: u8 = 0x12;

fn profile(f: impl Fn(f64) -> f64) -> [f64; HOURS] {
    let mut out = [0.0; HOURS];
    for (h, v) in out.iter_mut().enumerate() {
        *v = f(h as f64 + 0.5);
    }
    out
}

fn occupied(h: f64, start: f64, end: f64) -> f64 {
    let rise = 1.0 / (1.0 + (-(h - start) * 2.0).exp());
    let fall = 1.0 / (1.0 + ((h - end) * 2.0).exp());
    rise * fall
}

/// Office-like HVAC, lighting and plug shapes, peak-normalised.
pub fn reference_shapes() -> EndUseShapes {
    let hvac = EndUse::new(
        "hvac",
        profile(|h| 0.15 + 0.85 * occupied(h, 7.0, 18.0) * (1.0 + 0.25 * ((h - 15.0) / 4.0).cos())
            / 1.25),
        profile(|h| 0.15 + 0.35 * occupied(h, 9.0, 16.0)),
    );
    let lighting = EndUse::new(
        "lighting",
        profile(|h| 0.1 + 0.9 * occupied(h, 6.5, 19.5)),
        profile(|h| 0.1 + 0.2 * occupied(h, 8.0, 17.0)),
    );
    let plug = EndUse::uniform("plug", profile(|h| 0.6 + 0.4 * occupied(h, 8.0, 18.0)));
    EndUseShapes::new(vec![hvac, lighting, plug], "hvac").expect("reference shapes are valid")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticBuilding {
    pub id: String,
    /// Mean daily weight per end use, in shape order.
    pub weights: Vec<f64>,
    /// Relative daily spread of the curtailable weight.
    pub variability: f64,
    /// Correlation of the curtailable weight with the shared weather factor.
    pub weather_loading: f64,
    /// Hourly metering noise, kWh.
    pub noise_sd: f64,
}

impl SyntheticBuilding {
    pub fn new(id: &str, weights: &[f64], variability: f64, weather_loading: f64) -> Self {
        Self {
            id: id.into(),
            weights: weights.to_vec(),
            variability,
            weather_loading,
            noise_sd: 0.5,
        }
    }
}

/// A four-building fleet with mixed exposure to weather.
pub fn default_fleet() -> Vec<SyntheticBuilding> {
    vec![
        SyntheticBuilding::new("office_a", &[120.0, 40.0, 60.0], 0.25, 0.9),
        SyntheticBuilding::new("office_b", &[90.0, 30.0, 50.0], 0.3, 0.7),
        SyntheticBuilding::new("lab_c", &[150.0, 25.0, 110.0], 0.2, -0.6),
        SyntheticBuilding::new("school_d", &[70.0, 35.0, 30.0], 0.35, 0.0),
    ]
}

/// Hourly load for `days` days from `start`.
pub fn generate_load(
    fleet: &[SyntheticBuilding],
    shapes: &EndUseShapes,
    start: NaiveDate,
    days: u32,
    seed: u64,
) -> Result<Vec<LoadRecord>> {
    let mut weather_rng = substream(seed, 0, WEATHER);
    let weather: Vec<f64> = (0..days).map(|_| weather_rng.sample(StandardNormal)).collect();
    let cur = shapes.curtailable_index();
    let mut out = Vec::with_capacity(fleet.len() * days as usize * HOURS);
    for (b, building) in fleet.iter().enumerate() {
        if building.weights.len() != shapes.end_uses().len() {
            return Err(crate::Error::InvalidArgument(format!(
                "{}: {} weights for {} end uses",
                building.id,
                building.weights.len(),
                shapes.end_uses().len()
            )));
        }
        let mut rng = substream(seed, b as u64 + 1, BUILDING);
        let own = (1.0 - building.weather_loading.powi(2)).max(0.0).sqrt();
        for (d, z) in weather.iter().enumerate() {
            let date = start + chrono::Days::new(d as u64);
            let day = DayType::of(date);
            let mut daily = building.weights.clone();
            let e: f64 = rng.sample(StandardNormal);
            daily[cur] *= (1.0 + building.variability * (building.weather_loading * z + own * e)).max(0.0);
            for (u, w) in daily.iter_mut().enumerate() {
                if u != cur {
                    *w *= 1.0 + 0.05 * rng.sample::<f64, _>(StandardNormal);
                }
            }
            for h in 0..HOURS {
                let clean: f64 = shapes
                    .end_uses()
                    .iter()
                    .zip(&daily)
                    .map(|(s, w)| w * s.shape(day)[h])
                    .sum();
                let noise: f64 = building.noise_sd * rng.sample::<f64, _>(StandardNormal);
                out.push(LoadRecord {
                    timestamp: date.and_hms_opt(h as u32, 0, 0).expect("hour < 24"),
                    building_id: building.id.clone(),
                    load_kwh: (clean + noise).max(0.0),
                });
            }
        }
    }
    Ok(out)
}

/// One-factor capability samples: asset `k` is
/// `max(0, mu_k + sigma_k (l_k z + sqrt(1 - l_k^2) e_k))`, aligned by index.
pub fn factor_samples(
    mus: &[f64],
    sigmas: &[f64],
    loadings: &[f64],
    n: usize,
    seed: u64,
) -> Result<Vec<AlignedSamples>> {
    if mus.len() != sigmas.len() || mus.len() != loadings.len() {
        return Err(crate::Error::InvalidArgument("parameter lengths differ".into()));
    }
    let mut common = substream(seed, 0, FACTOR);
    let z: Vec<f64> = (0..n).map(|_| common.sample(StandardNormal)).collect();
    mus.iter()
        .zip(sigmas)
        .zip(loadings)
        .enumerate()
        .map(|(k, ((mu, sigma), l))| {
            let mut rng = substream(seed, k as u64 + 1, FACTOR);
            let own = (1.0 - l * l).max(0.0).sqrt();
            let values = z
                .iter()
                .map(|zi| {
                    let e: f64 = rng.sample(StandardNormal);
                    (mu + sigma * (l * zi + own * e)).max(0.0)
                })
                .collect();
            AlignedSamples::indexed(values)
        })
        .collect()
}
