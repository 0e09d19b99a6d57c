//! Incentive prices: each edge charges the extra expected network cost one
//! more unit flow causes, and a user's revenue is the cost it adds to the
//! whole network.

use crate::dsee::{estimated_edge_price, SampleStore};
use crate::error::{Error, Result};
use crate::model::{CommodityId, EdgeId, FlowDistribution, Instance, Path};

/// Where prices come from.
#[derive(Debug, Clone, Copy)]
pub enum PriceView<'a> {
    /// True expected costs.
    Exact,
    /// Clamped sample-mean differences from router memory.
    Estimated(&'a SampleStore),
}

impl PriceView<'_> {
    pub fn is_exact(&self) -> bool {
        matches!(self, PriceView::Exact)
    }
}

/// Price of edge `e` at load `f_e` for a flow of size `f_k` already counted
/// in `f_e`: `c(f_e) - c(f_e - f_k)`.
pub fn edge_price(
    inst: &Instance,
    view: &PriceView<'_>,
    e: EdgeId,
    f_e: u32,
    f_k: u32,
) -> Result<f64> {
    if e >= inst.num_edges() {
        return Err(Error::UnknownEdge(e));
    }
    if f_e > inst.max_load() {
        return Err(Error::LoadOutOfRange {
            load: f_e as i64,
            max: inst.max_load(),
        });
    }
    if f_k > f_e {
        return Err(Error::LoadOutOfRange {
            load: f_e as i64 - f_k as i64,
            max: inst.max_load(),
        });
    }
    Ok(match view {
        PriceView::Exact => inst.cost_at(e, f_e) - inst.cost_at(e, f_e - f_k),
        PriceView::Estimated(store) => estimated_edge_price(store, e, f_e, f_k),
    })
}

/// Unit-flow price of every edge for a user who is not yet counted in `loads`.
pub fn insertion_weights(inst: &Instance, view: &PriceView<'_>, loads: &[u32]) -> Result<Vec<f64>> {
    loads
        .iter()
        .enumerate()
        .map(|(e, &f)| edge_price(inst, view, e, f + 1, 1))
        .collect()
}

/// Price charged to commodity `k` for riding `path`, where `flow` already
/// counts `k` on that path.
pub fn path_price(
    inst: &Instance,
    flow: &FlowDistribution,
    k: CommodityId,
    path: &Path,
) -> Result<f64> {
    let c = inst.commodity(k)?;
    path.validate(inst.topology(), c.source, c.dest)?;
    path.edges
        .iter()
        .map(|&e| edge_price(inst, &PriceView::Exact, e, flow.edge_load(e)?, 1))
        .sum()
}

/// Revenue of commodity `k`: expected network cost with `k` minus the cost
/// with `k` withdrawn.
pub fn user_revenue(inst: &Instance, flow: &FlowDistribution, k: CommodityId) -> Result<f64> {
    inst.commodity(k)?;
    if flow.path(k).is_none() {
        return Err(Error::Unassigned(k));
    }
    let with = inst.cost_of_loads(flow.loads());
    let without = inst.cost_of_loads(flow.without(k).loads());
    Ok(with - without)
}

/// Total price `sum_e [c(f_e) - c(f_e - 1)] * f_e`.
pub fn total_price(inst: &Instance, flow: &FlowDistribution) -> Result<f64> {
    if let Some(k) = flow.first_unassigned() {
        return Err(Error::Unassigned(k));
    }
    Ok(total_price_of_loads(inst, flow.loads()))
}

pub(crate) fn total_price_of_loads(inst: &Instance, loads: &[u32]) -> f64 {
    loads
        .iter()
        .enumerate()
        .filter(|(_, &f)| f > 0)
        .map(|(e, &f)| inst.marginal(e, f) * f as f64)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::{d1, e};
    use crate::model::{Commodity, Edge, EdgeCostModel, Topology};

    fn cubic_line() -> Instance {
        // 0-1-2-3 line, f^3 + f on every edge, three commodities
        let topo = Topology::new(4, (0..3).map(|i| Edge::new(i, i + 1)).collect()).unwrap();
        Instance::new(
            vec![],
            topo,
            vec![EdgeCostModel::deterministic(vec![1.0, 0.0, 1.0, 0.0]); 3],
            vec![
                Commodity { source: 0, dest: 3 },
                Commodity { source: 1, dest: 3 },
                Commodity { source: 0, dest: 2 },
            ],
            0,
        )
        .unwrap()
    }

    #[test]
    fn exact_edge_prices() {
        let inst = d1();
        assert_eq!(edge_price(&inst, &PriceView::Exact, 0, 2, 1).unwrap(), 3.0);
        assert_eq!(edge_price(&inst, &PriceView::Exact, 0, 1, 1).unwrap(), 1.0);
        let line = cubic_line();
        assert_eq!(edge_price(&line, &PriceView::Exact, 0, 2, 1).unwrap(), 8.0);
        assert!(edge_price(&inst, &PriceView::Exact, 0, 0, 1).is_err());
        assert!(edge_price(&inst, &PriceView::Exact, 0, 3, 1).is_err());
        assert!(edge_price(&inst, &PriceView::Exact, 5, 1, 1).is_err());
    }

    #[test]
    fn d1_path_prices() {
        let inst = d1();
        let stacked = FlowDistribution::from_paths(&inst, vec![e(&inst, 0), e(&inst, 0)]).unwrap();
        assert_eq!(path_price(&inst, &stacked, 1, &e(&inst, 0)).unwrap(), 3.0);
        let split = FlowDistribution::from_paths(&inst, vec![e(&inst, 0), e(&inst, 1)]).unwrap();
        assert_eq!(path_price(&inst, &split, 1, &e(&inst, 1)).unwrap(), 1.0);
        let bad = crate::model::Path::trivial(0);
        assert!(path_price(&inst, &split, 1, &bad).is_err());
    }

    #[test]
    fn multi_edge_path_price_is_sum_of_edge_prices() {
        let inst = cubic_line();
        let paths = vec![
            inst.path_through(&[0, 1, 2, 3]).unwrap(),
            inst.path_through(&[1, 2, 3]).unwrap(),
            inst.path_through(&[0, 1, 2]).unwrap(),
        ];
        let flow = FlowDistribution::from_paths(&inst, paths.clone()).unwrap();
        // loads: e0 = 2, e1 = 3, e2 = 2; f^3+f marginals: c(2)-c(1) = 8, c(3)-c(2) = 20
        let by_hand = 8.0 + 20.0 + 8.0;
        assert_eq!(path_price(&inst, &flow, 0, &paths[0]).unwrap(), by_hand);
    }

    #[test]
    fn d1_revenues_and_total_price() {
        let inst = d1();
        let stacked = FlowDistribution::from_paths(&inst, vec![e(&inst, 0), e(&inst, 0)]).unwrap();
        assert_eq!(user_revenue(&inst, &stacked, 0).unwrap(), 3.0);
        assert_eq!(total_price(&inst, &stacked).unwrap(), 6.0);
        let split = FlowDistribution::from_paths(&inst, vec![e(&inst, 0), e(&inst, 1)]).unwrap();
        assert_eq!(user_revenue(&inst, &split, 0).unwrap(), 1.0);
        assert_eq!(user_revenue(&inst, &split, 1).unwrap(), 1.0);
        assert_eq!(total_price(&inst, &split).unwrap(), 2.0);
        assert!(matches!(
            user_revenue(&inst, &split.without(1), 1),
            Err(Error::Unassigned(1))
        ));
        assert!(total_price(&inst, &split.without(0)).is_err());
    }
}
