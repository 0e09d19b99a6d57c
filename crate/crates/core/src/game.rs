//! The virtual routing game.
//!
//! Users take turns in fixed commodity order. On its turn a user is withdrawn
//! from the network, every edge is priced at the extra expected cost one more
//! unit would cause, distance-vector routing from the user's source finds the
//! cheapest path, and the user is re-inserted on it. Because a user's price
//! equals the cost it adds to the network, every path change strictly lowers
//! the expected total cost, so the game stops at a Nash equilibrium.

use crate::enumerate::DistributionSpace;
use crate::error::{Error, Result};
use crate::model::{CommodityId, FlowDistribution, Instance, Path};
use crate::pricing::{insertion_weights, PriceView};
use crate::routing::{extract_path, path_weight, run_distance_vector, shortest_path_oracle};

/// Relative tolerance under which two prices count as equal.
pub const PRICE_TOLERANCE: f64 = 1e-9;

pub(crate) fn tolerance(scale: f64) -> f64 {
    PRICE_TOLERANCE * scale.abs().max(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MoveRecord {
    pub circle: usize,
    pub user: CommodityId,
    pub old_path: Option<Path>,
    pub new_path: Path,
    /// Expected cost of all currently assigned flows before and after the move.
    pub cost_before: f64,
    pub cost_after: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircleReport {
    pub circle: usize,
    pub moved: Vec<bool>,
    pub cost_after: f64,
}

impl CircleReport {
    pub fn any_moved(&self) -> bool {
        self.moved.iter().any(|&m| m)
    }
}

/// Mutable game state over a borrowed instance.
#[derive(Debug, Clone)]
pub struct GameState<'a> {
    inst: &'a Instance,
    flow: FlowDistribution,
    circle: usize,
    moves: Vec<MoveRecord>,
    slots: u64,
}

impl<'a> GameState<'a> {
    /// Every commodity starts unassigned.
    pub fn new(inst: &'a Instance) -> Self {
        Self::from_flow(inst, FlowDistribution::empty(inst))
    }

    pub fn from_flow(inst: &'a Instance, flow: FlowDistribution) -> Self {
        GameState {
            inst,
            flow,
            circle: 0,
            moves: Vec::new(),
            slots: 0,
        }
    }

    pub fn instance(&self) -> &'a Instance {
        self.inst
    }

    pub fn flow(&self) -> &FlowDistribution {
        &self.flow
    }

    pub fn into_flow(self) -> FlowDistribution {
        self.flow
    }

    /// Number of completed circles.
    pub fn circles(&self) -> usize {
        self.circle
    }

    pub fn moves(&self) -> &[MoveRecord] {
        &self.moves
    }

    /// Simulated slots spent in routing, `N` per user turn.
    pub fn slots_charged(&self) -> u64 {
        self.slots
    }

    /// One user turn. Returns whether the user's path changed (a first
    /// placement counts as a change). Ties keep the current path.
    pub fn optimize_user(&mut self, view: &PriceView<'_>, k: CommodityId) -> Result<bool> {
        let inst = self.inst;
        let c = inst.commodity(k)?;
        let n = inst.num_vertices();
        let cost_before = inst.cost_of_loads(self.flow.loads());
        let old = self.flow.withdraw(k);
        let weights = insertion_weights(inst, view, self.flow.loads())?;
        let (state, _) = run_distance_vector(inst.topology(), &weights, c.source, n)?;
        self.slots += n as u64;
        let best = extract_path(&state, c.dest).map_err(|_| {
            Error::Disconnected {
                commodity: k,
                source_name: inst.vertex_name(c.source).to_string(),
                dest_name: inst.vertex_name(c.dest).to_string(),
            }
        })?;
        let best_price = state.distance_to(c.dest);
        let chosen = match old {
            Some(ref current)
                if path_weight(&weights, current) <= best_price + tolerance(best_price) =>
            {
                current.clone()
            }
            _ => best,
        };
        let moved = old.as_ref() != Some(&chosen);
        self.flow.assign(inst, k, chosen.clone())?;
        if moved {
            self.moves.push(MoveRecord {
                circle: self.circle + 1,
                user: k,
                old_path: old,
                new_path: chosen,
                cost_before,
                cost_after: inst.cost_of_loads(self.flow.loads()),
            });
        }
        Ok(moved)
    }

    /// Every user takes one turn in commodity order.
    pub fn run_circle(&mut self, view: &PriceView<'_>) -> Result<CircleReport> {
        let moved = (0..self.inst.num_commodities())
            .map(|k| self.optimize_user(view, k))
            .collect::<Result<Vec<_>>>()?;
        self.circle += 1;
        Ok(CircleReport {
            circle: self.circle,
            moved,
            cost_after: self.inst.cost_of_loads(self.flow.loads()),
        })
    }

    /// Runs circles with exact prices until one passes without any move.
    /// Returns the equilibrium and the number of circles used, including the
    /// final no-move circle.
    pub fn run_to_equilibrium(&mut self) -> Result<(FlowDistribution, usize)> {
        let start = self.circle;
        loop {
            let report = self.run_circle(&PriceView::Exact)?;
            if !report.any_moved() {
                return Ok((self.flow.clone(), self.circle - start));
            }
        }
    }
}

/// Convenience: game from the all-unassigned state.
pub fn run_to_equilibrium(inst: &Instance) -> Result<(FlowDistribution, usize, Vec<MoveRecord>)> {
    let mut game = GameState::new(inst);
    let (flow, circles) = game.run_to_equilibrium()?;
    Ok((flow, circles, game.moves))
}

/// Cheapest unilateral alternative for every user, as
/// `(current price, best alternative price)` with exact prices.
pub fn deviation_prices(inst: &Instance, flow: &FlowDistribution) -> Result<Vec<(f64, f64)>> {
    if let Some(k) = flow.first_unassigned() {
        return Err(Error::Unassigned(k));
    }
    (0..inst.num_commodities())
        .map(|k| {
            let c = inst.commodity(k)?;
            let others = flow.without(k);
            let weights = insertion_weights(inst, &PriceView::Exact, others.loads())?;
            let current = path_weight(&weights, flow.path(k).expect("complete"));
            let (best, _) = shortest_path_oracle(inst.topology(), &weights, c.source, c.dest)?;
            Ok((current, best))
        })
        .collect()
}

/// True iff no user can lower its exact price by switching paths alone.
pub fn is_nash(inst: &Instance, flow: &FlowDistribution) -> Result<bool> {
    Ok(deviation_prices(inst, flow)?
        .into_iter()
        .all(|(current, best)| current <= best + tolerance(best)))
}

/// Distinct expected costs of `costs`, merging values closer than the
/// price tolerance.
pub(crate) fn distinct_sorted(mut costs: Vec<f64>) -> Vec<f64> {
    costs.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(costs.len());
    for c in costs {
        match out.last() {
            Some(&last) if c - last <= tolerance(c) => {}
            _ => out.push(c),
        }
    }
    out
}

/// Largest and smallest positive cost difference between two fully
/// assigned distributions, and the circle bound `ceil(S_M / S_m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceBound {
    pub max_gap: f64,
    pub min_gap: f64,
    pub bound: u64,
}

pub fn convergence_bound_detail(inst: &Instance, cap: u64) -> Result<ConvergenceBound> {
    let space = DistributionSpace::new(inst, cap)?;
    let distinct = distinct_sorted(space.costs(inst));
    if distinct.len() < 2 {
        return Err(Error::Degenerate(
            "all flow distributions have the same expected cost".into(),
        ));
    }
    let max_gap = distinct[distinct.len() - 1] - distinct[0];
    let min_gap = distinct
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let ratio = max_gap / min_gap;
    // guard against 2.0000000000000004 style ceilings
    let bound = (ratio - tolerance(ratio)).ceil().max(1.0) as u64;
    Ok(ConvergenceBound {
        max_gap,
        min_gap,
        bound,
    })
}

/// `ceil(S_M / S_m)` over all fully assigned distributions.
pub fn convergence_bound(inst: &Instance, cap: u64) -> Result<u64> {
    convergence_bound_detail(inst, cap).map(|b| b.bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::DEFAULT_CAP;
    use crate::model::fixtures::{d1, e};
    use crate::model::{expected_total_cost, Commodity, Edge, EdgeCostModel, Topology};

    #[test]
    fn first_move_takes_smaller_edge() {
        let inst = d1();
        let mut g = GameState::new(&inst);
        assert!(g.optimize_user(&PriceView::Exact, 0).unwrap());
        assert_eq!(g.flow().path(0).unwrap().edges, vec![0]);
        assert_eq!(g.slots_charged(), 2);
    }

    #[test]
    fn second_user_avoids_loaded_edge() {
        let inst = d1();
        let mut flow = FlowDistribution::empty(&inst);
        flow.assign(&inst, 0, e(&inst, 0)).unwrap();
        let mut g = GameState::from_flow(&inst, flow);
        assert!(g.optimize_user(&PriceView::Exact, 1).unwrap());
        assert_eq!(g.flow().path(1).unwrap().edges, vec![1]);
    }

    #[test]
    fn stacked_user_moves_and_cost_drops() {
        let inst = d1();
        let stacked = FlowDistribution::from_paths(&inst, vec![e(&inst, 0), e(&inst, 0)]).unwrap();
        let mut g = GameState::from_flow(&inst, stacked);
        assert!(g.optimize_user(&PriceView::Exact, 1).unwrap());
        let m = &g.moves()[0];
        assert_eq!((m.cost_before, m.cost_after), (4.0, 2.0));
    }

    #[test]
    fn circle_from_unassigned_reaches_split() {
        let inst = d1();
        let mut g = GameState::new(&inst);
        let r = g.run_circle(&PriceView::Exact).unwrap();
        assert_eq!(r.moved, vec![true, true]);
        assert_eq!(r.cost_after, 2.0);
        assert_eq!(g.slots_charged(), 4);
        let r = g.run_circle(&PriceView::Exact).unwrap();
        assert_eq!(r.moved, vec![false, false]);
        assert_eq!(r.cost_after, 2.0);
    }

    #[test]
    fn d1_equilibrium() {
        let inst = d1();
        let (flow, circles, _) = run_to_equilibrium(&inst).unwrap();
        assert_eq!(expected_total_cost(&inst, &flow).unwrap(), 2.0);
        assert!(circles <= 2);
        assert!(is_nash(&inst, &flow).unwrap());
        assert_eq!(convergence_bound(&inst, DEFAULT_CAP).unwrap(), 1);
        let b = convergence_bound_detail(&inst, DEFAULT_CAP).unwrap();
        assert_eq!((b.max_gap, b.min_gap), (2.0, 2.0));
    }

    #[test]
    fn nash_checks_on_d1() {
        let inst = d1();
        let split = FlowDistribution::from_paths(&inst, vec![e(&inst, 0), e(&inst, 1)]).unwrap();
        assert!(is_nash(&inst, &split).unwrap());
        let stacked = FlowDistribution::from_paths(&inst, vec![e(&inst, 0), e(&inst, 0)]).unwrap();
        assert!(!is_nash(&inst, &stacked).unwrap());
        let dev = deviation_prices(&inst, &stacked).unwrap();
        assert_eq!(dev[1], (3.0, 1.0));
    }

    #[test]
    fn single_commodity_on_shortest_path_is_nash() {
        let topo = Topology::new(3, vec![Edge::new(0, 1), Edge::new(1, 2), Edge::new(0, 2)]).unwrap();
        let inst = Instance::new(
            vec![],
            topo,
            vec![
                EdgeCostModel::deterministic(vec![1.0, 0.0]),
                EdgeCostModel::deterministic(vec![1.0, 0.0]),
                EdgeCostModel::deterministic(vec![3.0, 0.0]),
            ],
            vec![Commodity { source: 0, dest: 2 }],
            0,
        )
        .unwrap();
        let flow =
            FlowDistribution::from_paths(&inst, vec![inst.path_through(&[0, 1, 2]).unwrap()]).unwrap();
        assert!(is_nash(&inst, &flow).unwrap());
    }

    #[test]
    fn equilibrium_start_needs_one_quiet_circle() {
        let inst = d1();
        let split = FlowDistribution::from_paths(&inst, vec![e(&inst, 1), e(&inst, 0)]).unwrap();
        let mut g = GameState::from_flow(&inst, split.clone());
        let (flow, circles) = g.run_to_equilibrium().unwrap();
        assert_eq!(circles, 1);
        assert_eq!(flow, split);
        assert!(g.moves().is_empty());
    }

    #[test]
    fn constant_costs_are_degenerate() {
        let topo = Topology::new(2, vec![Edge::new(0, 1), Edge::new(0, 1)]).unwrap();
        let inst = Instance::new(
            vec![],
            topo,
            vec![EdgeCostModel::deterministic(vec![1.0]); 2],
            vec![Commodity { source: 0, dest: 1 }; 2],
            0,
        )
        .unwrap();
        assert!(matches!(
            convergence_bound(&inst, DEFAULT_CAP),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn unassigned_flow_is_not_checked() {
        let inst = d1();
        assert!(matches!(
            is_nash(&inst, &FlowDistribution::empty(&inst)),
            Err(Error::Unassigned(0))
        ));
    }
}
