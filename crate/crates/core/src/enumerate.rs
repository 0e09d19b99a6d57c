//! Exhaustive enumeration of fully assigned flow distributions.

use crate::error::{Error, Result};
use crate::model::{simple_paths, FlowDistribution, Instance, Path};

/// Default limit on the number of enumerated distributions.
pub const DEFAULT_CAP: u64 = 1_000_000;

/// Per-commodity simple-path sets and their Cartesian product.
#[derive(Debug, Clone)]
pub struct DistributionSpace {
    paths: Vec<Vec<Path>>,
    size: u64,
}

impl DistributionSpace {
    /// Lists every commodity's simple paths. Fails when the product exceeds `cap`.
    pub fn new(inst: &Instance, cap: u64) -> Result<Self> {
        let mut paths = Vec::with_capacity(inst.num_commodities());
        let mut size: u128 = 1;
        for k in 0..inst.num_commodities() {
            let p = simple_paths(inst, k, cap.min(usize::MAX as u64) as usize)?;
            size *= p.len() as u128;
            if size > cap as u128 {
                return Err(Error::EnumerationCap { size, cap });
            }
            paths.push(p);
        }
        Ok(DistributionSpace {
            paths,
            size: size as u64,
        })
    }

    pub fn size(&self) -> u64 {
        self.size
    }

    pub fn paths(&self, k: usize) -> &[Path] {
        &self.paths[k]
    }

    pub fn num_commodities(&self) -> usize {
        self.paths.len()
    }

    /// Visits every distribution in odometer order (commodity 0 varies
    /// slowest) with its path choice indices and edge loads.
    pub fn for_each<F: FnMut(&[usize], &[u32])>(&self, num_edges: usize, mut visit: F) {
        let k = self.paths.len();
        let mut choice = vec![0usize; k];
        let mut loads = vec![0u32; num_edges];
        for p in &self.paths {
            for &e in &p[0].edges {
                loads[e] += 1;
            }
        }
        loop {
            visit(&choice, &loads);
            // advance the last commodity first
            let mut i = k;
            loop {
                if i == 0 {
                    return;
                }
                i -= 1;
                for &e in &self.paths[i][choice[i]].edges {
                    loads[e] -= 1;
                }
                choice[i] += 1;
                if choice[i] < self.paths[i].len() {
                    for &e in &self.paths[i][choice[i]].edges {
                        loads[e] += 1;
                    }
                    break;
                }
                choice[i] = 0;
                for &e in &self.paths[i][0].edges {
                    loads[e] += 1;
                }
            }
        }
    }

    pub fn distribution(&self, inst: &Instance, choice: &[usize]) -> Result<FlowDistribution> {
        let paths = choice
            .iter()
            .enumerate()
            .map(|(k, &i)| self.paths[k][i].clone())
            .collect();
        FlowDistribution::from_paths(inst, paths)
    }

    /// Expected costs of all distributions, in enumeration order.
    pub fn costs(&self, inst: &Instance) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.size as usize);
        self.for_each(inst.num_edges(), |_, loads| out.push(inst.cost_of_loads(loads)));
        out
    }
}
