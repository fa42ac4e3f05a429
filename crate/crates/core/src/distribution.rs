//! Curtailment-capability distributions.
//!
//! Capability is non-negative. Normal models are treated as clipped at zero:
//! the mass below zero behaves as an atom at `q = 0`. Every integral here is
//! therefore taken over `[0, c]`, and `shortfall = c * F(c) - partial(c)` is
//! exactly `E[(c - max(q, 0))^+]`. Sampling clips the same way, so Monte Carlo
//! settlement and the analytic formulas describe one random variable.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{normal, Error, Result};

/// Clipped probability mass above which a normal fit is flagged.
pub const CLIPPED_MASS_WARNING: f64 = 1e-3;

/// Sample-based distribution. Samples are kept sorted with running sums so
/// that CDF and partial expectations are logarithmic-time lookups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EmpiricalRepr", into = "EmpiricalRepr")]
pub struct EmpiricalDistribution {
    sorted: Vec<f64>,
    prefix: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EmpiricalRepr {
    samples: Vec<f64>,
}

impl TryFrom<EmpiricalRepr> for EmpiricalDistribution {
    type Error = Error;

    fn try_from(repr: EmpiricalRepr) -> Result<Self> {
        Self::new(repr.samples)
    }
}

impl From<EmpiricalDistribution> for EmpiricalRepr {
    fn from(d: EmpiricalDistribution) -> Self {
        EmpiricalRepr { samples: d.sorted }
    }
}

impl EmpiricalDistribution {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidDistribution(
                "empirical distribution needs at least one sample".into(),
            ));
        }
        if let Some(bad) = samples.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "samples must be finite and >= 0, found {bad}"
            )));
        }
        samples.sort_by(f64::total_cmp);
        let mut prefix = Vec::with_capacity(samples.len() + 1);
        let mut acc = 0.0;
        prefix.push(acc);
        for v in &samples {
            acc += v;
            prefix.push(acc);
        }
        Ok(Self {
            sorted: samples,
            prefix,
        })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Samples in ascending order.
    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    pub fn min(&self) -> f64 {
        self.sorted[0]
    }

    pub fn max(&self) -> f64 {
        self.sorted[self.sorted.len() - 1]
    }

    fn n(&self) -> f64 {
        self.sorted.len() as f64
    }

    fn count_le(&self, x: f64) -> usize {
        self.sorted.partition_point(|v| *v <= x)
    }

    fn count_lt(&self, x: f64) -> usize {
        self.sorted.partition_point(|v| *v < x)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.count_le(x) as f64 / self.n()
    }

    pub fn prob_below(&self, x: f64) -> f64 {
        self.count_lt(x) as f64 / self.n()
    }

    /// Linear interpolation between order statistics placed at `(i-1)/(N-1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        let n = self.sorted.len();
        if n == 1 {
            return self.sorted[0];
        }
        let h = u * (n - 1) as f64;
        let lo = (h.floor() as usize).min(n - 1);
        let hi = (lo + 1).min(n - 1);
        let frac = h - lo as f64;
        self.sorted[lo] + frac * (self.sorted[hi] - self.sorted[lo])
    }

    /// Generalised inverse `inf { x : F(x) >= u }`.
    pub fn lower_quantile(&self, u: f64) -> f64 {
        let k = (u * self.n()).ceil() as usize;
        self.sorted[k.clamp(1, self.sorted.len()) - 1]
    }

    pub fn partial_expectation(&self, c: f64) -> f64 {
        if c < 0.0 {
            return 0.0;
        }
        self.prefix[self.count_le(c)] / self.n()
    }

    /// `∫ q dF` over the lowest `mass` of probability, splitting the boundary atom.
    pub fn tail_expectation(&self, mass: f64) -> f64 {
        let n = self.sorted.len();
        let pos = (mass * self.n()).min(self.n());
        let whole = (pos.floor() as usize).min(n);
        let mut total = self.prefix[whole];
        if whole < n {
            total += (pos - whole as f64) * self.sorted[whole];
        }
        total / self.n()
    }

    pub fn mean(&self) -> f64 {
        self.prefix[self.sorted.len()] / self.n()
    }

    /// Unbiased sample standard deviation.
    pub fn stddev(&self) -> Result<f64> {
        if self.sorted.len() < 2 {
            return Err(Error::InvalidDistribution(
                "standard deviation needs at least two samples".into(),
            ));
        }
        let mean = self.mean();
        let ss: f64 = self.sorted.iter().map(|v| (v - mean).powi(2)).sum();
        Ok((ss / (self.n() - 1.0)).sqrt())
    }
}

/// Normal capability model; `sigma = 0` is a point mass at `mu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NormalRepr", into = "NormalRepr")]
pub struct NormalDistribution {
    mu: f64,
    sigma: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NormalRepr {
    mu: f64,
    sigma: f64,
}

impl TryFrom<NormalRepr> for NormalDistribution {
    type Error = Error;

    fn try_from(r: NormalRepr) -> Result<Self> {
        Self::new(r.mu, r.sigma)
    }
}

impl From<NormalDistribution> for NormalRepr {
    fn from(d: NormalDistribution) -> Self {
        NormalRepr {
            mu: d.mu,
            sigma: d.sigma,
        }
    }
}

impl NormalDistribution {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() || !sigma.is_finite() || sigma < 0.0 {
            return Err(Error::InvalidDistribution(format!(
                "normal needs finite mu and sigma >= 0, got ({mu}, {sigma})"
            )));
        }
        Ok(Self { mu, sigma })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    fn z(&self, x: f64) -> f64 {
        (x - self.mu) / self.sigma
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if self.sigma == 0.0 {
            return if x >= self.mu { 1.0 } else { 0.0 };
        }
        normal::cdf(self.z(x))
    }

    pub fn prob_below(&self, x: f64) -> f64 {
        if self.sigma == 0.0 {
            return if x > self.mu { 1.0 } else { 0.0 };
        }
        self.cdf(x)
    }

    /// `mu + sigma * Phi^-1(u)`; unbounded at `u = 0` and `u = 1`.
    pub fn quantile(&self, u: f64) -> f64 {
        if self.sigma == 0.0 {
            return self.mu;
        }
        self.mu + self.sigma * normal::quantile(u)
    }

    /// `∫_0^c q f(q) dq`.
    pub fn partial_expectation(&self, c: f64) -> f64 {
        if c <= 0.0 {
            return 0.0;
        }
        if self.sigma == 0.0 {
            return if self.mu > 0.0 && self.mu <= c {
                self.mu
            } else {
                0.0
            };
        }
        let (zc, z0) = (self.z(c), self.z(0.0));
        self.mu * (normal::cdf(zc) - normal::cdf(z0))
            - self.sigma * (normal::pdf(zc) - normal::pdf(z0))
    }

    pub fn tail_expectation(&self, mass: f64) -> f64 {
        let cutoff = self.quantile(mass);
        if cutoff <= 0.0 {
            0.0
        } else {
            self.partial_expectation(cutoff)
        }
    }

    /// Probability mass the clipped model moves onto `q = 0`.
    pub fn clipped_mass(&self) -> f64 {
        if self.sigma == 0.0 {
            return if self.mu < 0.0 { 1.0 } else { 0.0 };
        }
        normal::cdf(self.z(0.0))
    }
}

/// Either kind of capability model behind one interface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum CurtailmentDistribution {
    Empirical(EmpiricalDistribution),
    Normal(NormalDistribution),
}

impl From<EmpiricalDistribution> for CurtailmentDistribution {
    fn from(d: EmpiricalDistribution) -> Self {
        Self::Empirical(d)
    }
}

impl From<NormalDistribution> for CurtailmentDistribution {
    fn from(d: NormalDistribution) -> Self {
        Self::Normal(d)
    }
}

impl CurtailmentDistribution {
    pub fn normal(mu: f64, sigma: f64) -> Result<Self> {
        NormalDistribution::new(mu, sigma).map(Self::Normal)
    }

    pub fn empirical(samples: Vec<f64>) -> Result<Self> {
        EmpiricalDistribution::new(samples).map(Self::Empirical)
    }

    /// Right-continuous CDF.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Self::Empirical(d) => d.cdf(x),
            Self::Normal(d) => d.cdf(x),
        }
    }

    /// `P(q < x)`.
    pub fn prob_below(&self, x: f64) -> f64 {
        match self {
            Self::Empirical(d) => d.prob_below(x),
            Self::Normal(d) => d.prob_below(x),
        }
    }

    /// Quantile function: interpolated for samples, exact for normals.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        check_probability(u)?;
        Ok(match self {
            Self::Empirical(d) => d.quantile(u),
            Self::Normal(d) => d.quantile(u),
        })
    }

    /// Generalised inverse `inf { x : F(x) >= u }`, the exact maximiser used
    /// by the optimal contract. Coincides with [`Self::quantile`] for normals.
    pub fn lower_quantile(&self, u: f64) -> Result<f64> {
        check_probability(u)?;
        Ok(match self {
            Self::Empirical(d) => d.lower_quantile(u),
            Self::Normal(d) => d.quantile(u),
        })
    }

    /// `∫_0^c q f(q) dq`.
    pub fn partial_expectation(&self, c: f64) -> f64 {
        match self {
            Self::Empirical(d) => d.partial_expectation(c),
            Self::Normal(d) => d.partial_expectation(c),
        }
    }

    /// `∫_0^c (c - q) f(q) dq`, with clipped mass counted at `q = 0`.
    pub fn shortfall_expectation(&self, c: f64) -> f64 {
        if c <= 0.0 {
            return 0.0;
        }
        (c * self.cdf(c) - self.partial_expectation(c)).max(0.0)
    }

    /// `E[min(c, q)]`.
    pub fn expected_delivery(&self, c: f64) -> f64 {
        if c <= 0.0 {
            return 0.0;
        }
        self.partial_expectation(c) + c * (1.0 - self.cdf(c))
    }

    /// `∫ q dF` over the lowest `mass` of probability.
    pub fn tail_expectation(&self, mass: f64) -> Result<f64> {
        check_probability(mass)?;
        Ok(match self {
            Self::Empirical(d) => d.tail_expectation(mass),
            Self::Normal(d) => d.tail_expectation(mass),
        })
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Empirical(d) => d.mean(),
            Self::Normal(d) => d.mu,
        }
    }

    pub fn stddev(&self) -> Result<f64> {
        match self {
            Self::Empirical(d) => d.stddev(),
            Self::Normal(d) => Ok(d.sigma),
        }
    }

    /// Largest value worth searching over: the top sample, or the
    /// `1 - 1e-6` quantile of a normal.
    pub fn search_upper(&self) -> f64 {
        match self {
            Self::Empirical(d) => d.max(),
            Self::Normal(d) => d.quantile(1.0 - 1e-6).max(0.0),
        }
    }

    /// One capability draw; normal draws are clipped at zero.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sample_with_clip(rng).0
    }

    /// One draw plus whether it was clipped at zero.
    pub fn sample_with_clip<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, bool) {
        match self {
            Self::Empirical(d) => (d.sorted[rng.random_range(0..d.sorted.len())], false),
            Self::Normal(d) => {
                let z: f64 = rng.sample(StandardNormal);
                let q = d.mu + d.sigma * z;
                if q < 0.0 {
                    (0.0, true)
                } else {
                    (q, false)
                }
            }
        }
    }
}

fn check_probability(u: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::InvalidArgument(format!(
            "probability must lie in [0, 1], got {u}"
        )));
    }
    Ok(())
}

/// Samples in historical order with the key of the window each came from.
/// Samples at equal index across assets must share a key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedSamples {
    keys: Vec<String>,
    values: Vec<f64>,
}

impl AlignedSamples {
    pub fn new(keys: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if keys.len() != values.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} keys for {} samples",
                keys.len(),
                values.len()
            )));
        }
        EmpiricalDistribution::new(values.clone())?;
        Ok(Self { keys, values })
    }

    /// Keys are the sample indices.
    pub fn indexed(values: Vec<f64>) -> Result<Self> {
        let keys = (0..values.len()).map(|i| i.to_string()).collect();
        Self::new(keys, values)
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn distribution(&self) -> EmpiricalDistribution {
        EmpiricalDistribution::new(self.values.clone()).expect("validated on construction")
    }
}

/// Index-wise sum of aligned sample sets.
pub fn sum_empirical(sets: &[AlignedSamples]) -> Result<AlignedSamples> {
    let first = sets
        .first()
        .ok_or_else(|| Error::Unalignable("no sample sets to sum".into()))?;
    for (i, s) in sets.iter().enumerate().skip(1) {
        if s.len() != first.len() {
            return Err(Error::Unalignable(format!(
                "set {i} has {} samples, set 0 has {}",
                s.len(),
                first.len()
            )));
        }
        if let Some(pos) = s.keys.iter().zip(&first.keys).position(|(a, b)| a != b) {
            return Err(Error::Unalignable(format!(
                "set {i} key {:?} differs from {:?} at index {pos}",
                s.keys[pos], first.keys[pos]
            )));
        }
    }
    let values = (0..first.len())
        .map(|j| sets.iter().map(|s| s.values[j]).sum())
        .collect();
    AlignedSamples::new(first.keys.clone(), values)
}

/// Means, standard deviations and the correlation matrix of several assets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceModel {
    means: Vec<f64>,
    std_devs: Vec<f64>,
    correlation: Vec<Vec<f64>>,
}

const PSD_TOLERANCE: f64 = 1e-10;

impl CovarianceModel {
    pub fn new(means: Vec<f64>, std_devs: Vec<f64>, correlation: Vec<Vec<f64>>) -> Result<Self> {
        let n = means.len();
        if n == 0 {
            return Err(Error::InvalidCovariance("no assets".into()));
        }
        if std_devs.len() != n || correlation.len() != n || correlation.iter().any(|r| r.len() != n)
        {
            return Err(Error::InvalidCovariance(format!(
                "dimension mismatch for {n} assets"
            )));
        }
        if means.iter().chain(&std_devs).any(|v| !v.is_finite()) || std_devs.iter().any(|s| *s < 0.0)
        {
            return Err(Error::InvalidCovariance(
                "means must be finite and std devs finite and >= 0".into(),
            ));
        }
        for i in 0..n {
            if correlation[i][i] != 1.0 {
                return Err(Error::InvalidCovariance(format!(
                    "diagonal entry {i} is {}",
                    correlation[i][i]
                )));
            }
            for j in 0..n {
                let r = correlation[i][j];
                if !(-1.0..=1.0).contains(&r) {
                    return Err(Error::InvalidCovariance(format!(
                        "entry ({i}, {j}) = {r} outside [-1, 1]"
                    )));
                }
                if (r - correlation[j][i]).abs() > 1e-12 {
                    return Err(Error::InvalidCovariance(format!(
                        "not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let m = DMatrix::from_fn(n, n, |i, j| correlation[i][j]);
        let min_eig = SymmetricEigen::new(m)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -PSD_TOLERANCE {
            return Err(Error::InvalidCovariance(format!(
                "correlation matrix not positive semidefinite (eigenvalue {min_eig})"
            )));
        }
        Ok(Self {
            means,
            std_devs,
            correlation,
        })
    }

    /// Two assets with correlation `rho`.
    pub fn pair(means: [f64; 2], std_devs: [f64; 2], rho: f64) -> Result<Self> {
        Self::new(
            means.to_vec(),
            std_devs.to_vec(),
            vec![vec![1.0, rho], vec![rho, 1.0]],
        )
    }

    /// Sample moments and Pearson correlations of aligned sample sets.
    pub fn from_aligned(sets: &[AlignedSamples]) -> Result<Self> {
        sum_empirical(sets)?;
        let mut means = Vec::with_capacity(sets.len());
        let mut std_devs = Vec::with_capacity(sets.len());
        for s in sets {
            let d = s.distribution();
            means.push(d.mean());
            std_devs.push(d.stddev()?);
        }
        let n = sets.len();
        let count = sets[0].len() as f64;
        let mut correlation = vec![vec![0.0; n]; n];
        for i in 0..n {
            correlation[i][i] = 1.0;
            for j in (i + 1)..n {
                let cov: f64 = sets[i]
                    .values
                    .iter()
                    .zip(&sets[j].values)
                    .map(|(a, b)| (a - means[i]) * (b - means[j]))
                    .sum::<f64>()
                    / (count - 1.0);
                let denom = std_devs[i] * std_devs[j];
                let r = if denom > 0.0 {
                    (cov / denom).clamp(-1.0, 1.0)
                } else {
                    0.0
                };
                correlation[i][j] = r;
                correlation[j][i] = r;
            }
        }
        Self::new(means, std_devs, correlation)
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn std_devs(&self) -> &[f64] {
        &self.std_devs
    }

    pub fn correlation(&self) -> &[Vec<f64>] {
        &self.correlation
    }

    pub fn marginal(&self, k: usize) -> NormalDistribution {
        NormalDistribution {
            mu: self.means[k],
            sigma: self.std_devs[k],
        }
    }

    /// Keep only the listed assets, in the given order.
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        Self::new(
            idx.iter().map(|&i| self.means[i]).collect(),
            idx.iter().map(|&i| self.std_devs[i]).collect(),
            idx.iter()
                .map(|&i| idx.iter().map(|&j| self.correlation[i][j]).collect())
                .collect(),
        )
    }
}

/// Distribution of the sum of jointly normal assets.
pub fn sum_normal(model: &CovarianceModel) -> NormalDistribution {
    let n = model.len();
    let mut var = 0.0;
    for i in 0..n {
        for j in 0..n {
            var += model.std_devs[i] * model.std_devs[j] * model.correlation[i][j];
        }
    }
    NormalDistribution {
        mu: model.means.iter().sum(),
        sigma: var.max(0.0).sqrt(),
    }
}

/// Moment-matched normal and its Kolmogorov-Smirnov distance to the samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalFit {
    pub normal: NormalDistribution,
    pub fit_distance: f64,
}

pub fn fit_normal(emp: &EmpiricalDistribution) -> Result<NormalFit> {
    let normal = NormalDistribution::new(emp.mean(), emp.stddev()?)?;
    let mut points: Vec<f64> = emp.sorted.clone();
    if normal.sigma == 0.0 {
        points.push(normal.mu);
    }
    let fit_distance = points
        .iter()
        .map(|&x| {
            let right = (emp.cdf(x) - normal.cdf(x)).abs();
            let left = (emp.prob_below(x) - normal.prob_below(x)).abs();
            right.max(left)
        })
        .fold(0.0, f64::max);
    Ok(NormalFit {
        normal,
        fit_distance,
    })
}
