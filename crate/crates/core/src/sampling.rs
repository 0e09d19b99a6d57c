//! Random instance generation for experiments and property tests.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::enumerate::DistributionSpace;
use crate::error::{Error, Result};
use crate::model::{Commodity, Edge, EdgeCostModel, Instance, NoiseSpec, Topology};

/// Sampling law for random instances. Ranges are inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingLaw {
    pub vertices: (usize, usize),
    /// Edges added on top of a random spanning tree.
    pub extra_edges: (usize, usize),
    pub commodities: (usize, usize),
    /// Polynomial degree drawn per edge.
    pub degree: (u32, u32),
    pub leading: (f64, f64),
    pub lower: (f64, f64),
    /// Probability that a lower-order coefficient is exactly zero.
    pub lower_zero_prob: f64,
    /// Keep constant terms at zero.
    pub zero_constant: bool,
    pub noise_half_width: f64,
    /// Rejected when the distribution space is larger than this.
    pub enumeration_cap: u64,
    pub max_attempts: usize,
}

impl Default for SamplingLaw {
    fn default() -> Self {
        SamplingLaw {
            vertices: (4, 8),
            extra_edges: (1, 4),
            commodities: (2, 3),
            degree: (1, 3),
            leading: (0.5, 2.0),
            lower: (0.0, 2.0),
            lower_zero_prob: 0.3,
            zero_constant: true,
            noise_half_width: 0.0,
            enumeration_cap: 20_000,
            max_attempts: 1_000,
        }
    }
}

impl SamplingLaw {
    /// Every edge gets exactly degree `d`.
    pub fn with_degree(mut self, d: u32) -> Self {
        self.degree = (d, d);
        self
    }

    fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(format!("sampling law: {what}")));
        if self.vertices.0 < 2 || self.vertices.0 > self.vertices.1 {
            return bad("vertices range");
        }
        if self.commodities.0 < 1 || self.commodities.0 > self.commodities.1 {
            return bad("commodities range");
        }
        if self.degree.0 < 1 || self.degree.0 > self.degree.1 {
            return bad("degree range");
        }
        if !(self.leading.0 > 0.0 && self.leading.0 <= self.leading.1) {
            return bad("leading coefficient range");
        }
        if !(self.lower.0 >= 0.0 && self.lower.0 <= self.lower.1) {
            return bad("lower coefficient range");
        }
        if self.extra_edges.0 > self.extra_edges.1 {
            return bad("extra edge range");
        }
        Ok(())
    }
}

fn sample_range<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..hi)
    }
}

fn sample_model<R: Rng + ?Sized>(law: &SamplingLaw, rng: &mut R) -> EdgeCostModel {
    let degree = rng.gen_range(law.degree.0..=law.degree.1);
    let mut coefficients = vec![sample_range(rng, law.leading)];
    for i in 1..=degree {
        let constant = i == degree;
        let c = if (constant && law.zero_constant) || rng.gen_bool(law.lower_zero_prob) {
            0.0
        } else {
            sample_range(rng, law.lower)
        };
        coefficients.push(c);
    }
    let noise = if law.noise_half_width > 0.0 {
        NoiseSpec::uniform(law.noise_half_width)
    } else {
        NoiseSpec::none()
    };
    EdgeCostModel::new(coefficients, noise)
}

/// One attempt: connected simple graph, random commodities, random costs.
fn sample_once<R: Rng + ?Sized>(law: &SamplingLaw, seed: u64, rng: &mut R) -> Result<Instance> {
    let n = rng.gen_range(law.vertices.0..=law.vertices.1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    let mut present = vec![vec![false; n]; n];
    for i in 1..n {
        let a = order[i];
        let b = order[rng.gen_range(0..i)];
        present[a][b] = true;
        present[b][a] = true;
        edges.push(Edge::new(a.min(b), a.max(b)));
    }
    let max_extra = n * (n - 1) / 2 - (n - 1);
    let extra = rng
        .gen_range(law.extra_edges.0..=law.extra_edges.1)
        .min(max_extra);
    while edges.len() < n - 1 + extra {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b && !present[a][b] {
            present[a][b] = true;
            present[b][a] = true;
            edges.push(Edge::new(a.min(b), a.max(b)));
        }
    }
    let k = rng.gen_range(law.commodities.0..=law.commodities.1);
    let commodities = (0..k)
        .map(|_| {
            let s = rng.gen_range(0..n);
            let mut t = rng.gen_range(0..n - 1);
            if t >= s {
                t += 1;
            }
            Commodity { source: s, dest: t }
        })
        .collect();
    let models = (0..edges.len()).map(|_| sample_model(law, rng)).collect();
    let topo = Topology::new(n, edges)?;
    Instance::new(Vec::new(), topo, models, commodities, seed)
}

/// Draws instances until one fits the enumeration cap.
pub fn sample_instance<R: Rng + ?Sized>(law: &SamplingLaw, seed: u64, rng: &mut R) -> Result<Instance> {
    law.validate()?;
    for _ in 0..law.max_attempts.max(1) {
        let inst = sample_once(law, seed, rng)?;
        match DistributionSpace::new(&inst, law.enumeration_cap) {
            Ok(_) => return Ok(inst),
            Err(Error::EnumerationCap { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::InvalidParameter(format!(
        "no instance within enumeration cap {} after {} attempts",
        law.enumeration_cap, law.max_attempts
    )))
}
