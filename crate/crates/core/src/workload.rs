//! Seeded workload generators.
//!
//! Lengths and read rates come from two streams of one ChaCha8 generator, so an
//! instance of length `n` is always a prefix of the same seed's longer instances.

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, LogNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::ContinuousCDF;

use crate::error::{Error, Result};
use crate::model::{Arrival, Instance};

const LENGTH_STREAM: u64 = 0;
const READ_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WorkloadKind {
    Uniform {
        mean_length: f64,
        mean_read: f64,
    },
    /// Lengths `exp(Normal(mu, v))` (v is the variance), read rates exponential.
    Lognormal {
        mu: f64,
        v: f64,
        read_mean: f64,
        /// Clamp both draws at this quantile of their distribution (bounded inputs).
        #[serde(default, skip_serializing_if = "Option::is_none")]
        truncate_quantile: Option<f64>,
    },
    FromFile {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    #[serde(flatten)]
    pub kind: WorkloadKind,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
}

impl WorkloadSpec {
    pub fn uniform(mean_length: f64, mean_read: f64, n: usize) -> Self {
        Self { kind: WorkloadKind::Uniform { mean_length, mean_read }, n, seed: 0 }
    }

    pub fn lognormal(mu: f64, v: f64, read_mean: f64, n: usize, seed: u64) -> Self {
        Self { kind: WorkloadKind::Lognormal { mu, v, read_mean, truncate_quantile: None }, n, seed }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            WorkloadKind::Uniform { mean_length, mean_read } => {
                if !(mean_length.is_finite() && *mean_length >= 0.0 && mean_read.is_finite() && *mean_read >= 0.0) {
                    return Err(Error::domain("uniform workload needs finite non-negative means"));
                }
            }
            WorkloadKind::Lognormal { mu, v, read_mean, truncate_quantile } => {
                if !mu.is_finite() || !(v.is_finite() && *v >= 0.0) {
                    return Err(Error::domain("lognormal workload needs finite mu and v >= 0"));
                }
                if !(read_mean.is_finite() && *read_mean > 0.0) {
                    return Err(Error::domain("lognormal workload needs read_mean > 0"));
                }
                if let Some(q) = truncate_quantile {
                    if !(*q > 0.0 && *q < 1.0) {
                        return Err(Error::domain("truncation quantile must lie in (0, 1)"));
                    }
                }
            }
            WorkloadKind::FromFile { .. } => {}
        }
        Ok(())
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Builds the instance described by `spec`. File workloads are truncated to `n`
/// steps when `n` is positive and smaller than the file.
pub fn generate(spec: &WorkloadSpec) -> Result<Instance> {
    spec.validate()?;
    let n = spec.n;
    match &spec.kind {
        WorkloadKind::Uniform { mean_length, mean_read } => Instance::uniform(*mean_length, *mean_read, n),
        WorkloadKind::Lognormal { mu, v, read_mean, truncate_quantile } => {
            let sigma = v.sqrt();
            let lengths = LogNormal::new(*mu, sigma).map_err(|e| Error::domain(e.to_string()))?;
            let reads = Exp::new(1.0 / read_mean).map_err(|e| Error::domain(e.to_string()))?;
            let (len_cap, read_cap) = match truncate_quantile {
                Some(q) => {
                    let l = if sigma > 0.0 {
                        statrs::distribution::LogNormal::new(*mu, sigma)
                            .map_err(|e| Error::domain(e.to_string()))?
                            .inverse_cdf(*q)
                    } else {
                        mu.exp()
                    };
                    let r = statrs::distribution::Exp::new(1.0 / read_mean)
                        .map_err(|e| Error::domain(e.to_string()))?
                        .inverse_cdf(*q);
                    (l, r)
                }
                None => (f64::INFINITY, f64::INFINITY),
            };
            let mut lr = stream(spec.seed, LENGTH_STREAM);
            let mut rr = stream(spec.seed, READ_STREAM);
            let steps = (0..n)
                .map(|_| {
                    let l: f64 = lengths.sample(&mut lr);
                    let r: f64 = reads.sample(&mut rr);
                    Arrival::new(l.min(len_cap), r.min(read_cap))
                })
                .collect();
            Instance::new(steps)
        }
        WorkloadKind::FromFile { path } => {
            let inst = crate::io::read_instance(path)?;
            if n > 0 && n < inst.len() {
                Ok(inst.prefix(n))
            } else {
                Ok(inst)
            }
        }
    }
}

/// Arithmetic means of lengths and read rates.
pub fn empirical_means(instance: &Instance) -> Result<(f64, f64)> {
    instance.empirical_means()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_repeats() {
        let inst = generate(&WorkloadSpec::uniform(1.0, 1.0, 3)).unwrap();
        assert_eq!(inst.steps(), &[Arrival::new(1.0, 1.0); 3]);
        assert_eq!(empirical_means(&inst).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn means_of_small_instance() {
        let inst = Instance::from_pairs(&[(1.0, 2.0), (3.0, 4.0)]).unwrap();
        assert_eq!(empirical_means(&inst).unwrap(), (2.0, 3.0));
        assert!(empirical_means(&Instance::new(vec![]).unwrap()).is_err());
    }

    #[test]
    fn deterministic_and_prefix_stable() {
        let a = generate(&WorkloadSpec::lognormal(10.0, 1.0, 1.0, 500, 7)).unwrap();
        let b = generate(&WorkloadSpec::lognormal(10.0, 1.0, 1.0, 500, 7)).unwrap();
        let c = generate(&WorkloadSpec::lognormal(10.0, 1.0, 1.0, 200, 7)).unwrap();
        let d = generate(&WorkloadSpec::lognormal(10.0, 1.0, 1.0, 200, 8)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.prefix(200), c);
        assert_ne!(c, d);
    }

    #[test]
    fn truncation_clamps() {
        let mut spec = WorkloadSpec::lognormal(0.0, 1.0, 1.0, 2000, 3);
        spec.kind = WorkloadKind::Lognormal { mu: 0.0, v: 1.0, read_mean: 1.0, truncate_quantile: Some(0.9) };
        let inst = generate(&spec).unwrap();
        // 90% quantiles: exp(1.2816) for the lengths, ln(10) for unit-mean exponential reads.
        let lcap = 1.2815515655446004f64.exp();
        let rcap = 10f64.ln();
        assert!(inst.steps().iter().all(|a| a.length <= lcap + 1e-9 && a.read_rate <= rcap + 1e-9));
        let at_cap = inst.steps().iter().filter(|a| (a.length - lcap).abs() < 1e-9).count();
        assert!(at_cap > 100 && at_cap < 300, "{at_cap}");
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(generate(&WorkloadSpec::lognormal(10.0, -1.0, 1.0, 5, 0)).is_err());
        assert!(generate(&WorkloadSpec::lognormal(10.0, 1.0, 0.0, 5, 0)).is_err());
        assert!(generate(&WorkloadSpec::uniform(-1.0, 1.0, 5)).is_err());
    }

    #[test]
    fn spec_json_shape() {
        let spec = WorkloadSpec::lognormal(10.0, 1.0, 2.0, 100, 42);
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(json, r#"{"kind":"lognormal","mu":10.0,"v":1.0,"read_mean":2.0,"n":100,"seed":42}"#);
        assert_eq!(serde_json::from_str::<WorkloadSpec>(&json).unwrap(), spec);
    }

    /// Kolmogorov–Smirnov statistic of `sample` against `cdf`.
    fn ks_statistic(mut sample: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
        sample.sort_by(f64::total_cmp);
        let n = sample.len() as f64;
        sample
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / n).max((i + 1) as f64 / n - f)
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn read_rates_pass_ks_against_exponential() {
        let n = 10_000;
        // Asymptotic critical value at significance 0.01.
        let critical = 1.628 / (n as f64).sqrt();
        for seed in [1, 2, 3] {
            let inst = generate(&WorkloadSpec::lognormal(0.0, 1.0, 2.5, n, seed)).unwrap();
            let reads: Vec<f64> = inst.steps().iter().map(|a| a.read_rate).collect();
            let d = ks_statistic(reads, |x| 1.0 - (-x / 2.5).exp());
            assert!(d < critical, "seed {seed}: D = {d} >= {critical}");
            let lengths: Vec<f64> = inst.steps().iter().map(|a| a.length.ln()).collect();
            let normal = statrs::distribution::Normal::new(0.0, 1.0).unwrap();
            assert!(ks_statistic(lengths, |x| normal.cdf(x)) < critical, "seed {seed}: log-lengths");
        }
    }
}
