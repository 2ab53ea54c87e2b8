//! Request generation: Mandelbrot-Zipf content popularity and the arrival
//! process that assigns requests to consumer routers.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ndn::Name;
use crate::time::{SimDuration, SimTime};
use crate::topology::NodeId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorkloadError {
    #[error("invalid workload parameter: {0}")]
    InvalidParameter(String),
    #[error("rank {rank} outside 1..={catalog_size}")]
    RankOutOfRange { rank: u32, catalog_size: u32 },
}

/// Mandelbrot-Zipf parameters: skewness `alpha`, plateau `q`, catalog size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MZipfParams {
    pub alpha: f64,
    pub q: f64,
    pub catalog_size: u32,
}

impl MZipfParams {
    pub fn new(alpha: f64, q: f64, catalog_size: u32) -> Result<Self, WorkloadError> {
        let params = MZipfParams {
            alpha,
            q,
            catalog_size,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), WorkloadError> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(WorkloadError::InvalidParameter(format!(
                "alpha must be a positive finite number, got {}",
                self.alpha
            )));
        }
        if !(self.q.is_finite() && self.q >= 0.0) {
            return Err(WorkloadError::InvalidParameter(format!(
                "q must be finite and >= 0, got {}",
                self.q
            )));
        }
        if self.catalog_size == 0 {
            return Err(WorkloadError::InvalidParameter(
                "catalog size must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Precomputed Mandelbrot-Zipf distribution over ranks `1..=N`.
///
/// `p(r) = (r + q)^-alpha / sum_{c=1..N} (c + q)^-alpha`.
#[derive(Debug, Clone)]
pub struct MZipf {
    params: MZipfParams,
    pmf: Vec<f64>,
    cdf: Vec<f64>,
}

impl MZipf {
    pub fn new(params: MZipfParams) -> Result<Self, WorkloadError> {
        params.validate()?;
        let weights: Vec<f64> = (1..=params.catalog_size)
            .map(|r| (r as f64 + params.q).powf(-params.alpha))
            .collect();
        let total = compensated_sum(weights.iter().copied());
        let pmf: Vec<f64> = weights.iter().map(|w| w / total).collect();

        let mut cdf = Vec::with_capacity(pmf.len());
        let mut acc = 0.0;
        let mut comp = 0.0;
        for &p in &pmf {
            // Kahan step so the table tail lands on 1 even for large catalogs.
            let y = p - comp;
            let t = acc + y;
            comp = (t - acc) - y;
            acc = t;
            cdf.push(acc);
        }
        if let Some(last) = cdf.last_mut() {
            *last = 1.0;
        }
        Ok(MZipf { params, pmf, cdf })
    }

    pub fn params(&self) -> MZipfParams {
        self.params
    }

    pub fn catalog_size(&self) -> u32 {
        self.params.catalog_size
    }

    /// Probability of requesting the content at `rank`.
    pub fn pmf(&self, rank: u32) -> Result<f64, WorkloadError> {
        if rank == 0 || rank > self.params.catalog_size {
            return Err(WorkloadError::RankOutOfRange {
                rank,
                catalog_size: self.params.catalog_size,
            });
        }
        Ok(self.pmf[rank as usize - 1])
    }

    pub fn pmf_table(&self) -> &[f64] {
        &self.pmf
    }

    /// Probability mass of the `count` most popular ranks.
    pub fn head_mass(&self, count: u32) -> f64 {
        let count = (count as usize).min(self.pmf.len());
        if count == 0 {
            0.0
        } else {
            self.cdf[count - 1]
        }
    }

    /// Draws a rank by inverse-CDF lookup. Consumes one `f64` from `rng`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Name {
        let u: f64 = rng.random();
        let idx = self.cdf.partition_point(|&c| c <= u);
        Name(idx.min(self.cdf.len() - 1) as u32 + 1)
    }
}

fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let y = v - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

/// How inter-arrival gaps are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrivalProcess {
    /// Exponential gaps with mean `1 / rate`.
    #[default]
    Poisson,
    /// Fixed gaps of exactly `1 / rate`.
    Periodic,
}

/// One generated request.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Request {
    pub time: SimTime,
    pub consumer: NodeId,
    pub name: Name,
}

/// Aggregate request process across all consumer routers.
#[derive(Debug, Clone)]
pub struct RequestStream {
    rate: f64,
    arrival: ArrivalProcess,
    consumers: Vec<NodeId>,
    exp: Exp<f64>,
}

impl RequestStream {
    pub fn new(
        rate: f64,
        arrival: ArrivalProcess,
        consumers: Vec<NodeId>,
    ) -> Result<Self, WorkloadError> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(WorkloadError::InvalidParameter(format!(
                "aggregate rate must be positive, got {rate}"
            )));
        }
        if consumers.is_empty() {
            return Err(WorkloadError::InvalidParameter(
                "at least one consumer router is required".into(),
            ));
        }
        let exp = Exp::new(rate)
            .map_err(|e| WorkloadError::InvalidParameter(format!("rate {rate}: {e}")))?;
        Ok(RequestStream {
            rate,
            arrival,
            consumers,
            exp,
        })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Draws the next request after `now`. Draw order is fixed: gap, consumer, rank.
    pub fn next_request<R: Rng + ?Sized>(
        &self,
        catalog: &MZipf,
        rng: &mut R,
        now: SimTime,
    ) -> Request {
        let gap_secs = match self.arrival {
            ArrivalProcess::Poisson => self.exp.sample(rng),
            ArrivalProcess::Periodic => 1.0 / self.rate,
        };
        // Gaps are strictly positive on the nanosecond clock.
        let gap = SimDuration::from_nanos(SimDuration::from_secs_f64(gap_secs).as_nanos().max(1));
        let consumer = self.consumers[rng.random_range(0..self.consumers.len())];
        let name = catalog.sample(rng);
        Request {
            time: now + gap,
            consumer,
            name,
        }
    }
}
