//! Distributed flow scheduling on a shared network.
//!
//! `K` unit flows share an undirected multigraph whose edges have stochastic
//! polynomial costs. Each edge charges the extra expected cost one more unit
//! would cause; users re-route one at a time over distance-vector routing
//! until nobody can lower their price, which is a Nash equilibrium. When the
//! cost expectations are unknown, routers learn them with a deterministic
//! schedule of exploration and exploitation slots.
//!
//! Modules:
//! - [`model`]: graph, cost models, commodities, flow distributions
//! - [`pricing`]: incentive prices and revenues
//! - [`routing`]: synchronous distance-vector routing and a Dijkstra oracle
//! - [`game`]: the virtual routing game and its convergence bound
//! - [`poa`]: optimum, price of anarchy and supporting inequality checks
//! - [`dsee`]: the learning schedule, sample store and `G` bound
//! - [`regret`]: regret curves and G sweeps
//! - [`scenario`], [`export`]: TOML input and CSV output

pub mod dsee;
pub mod enumerate;
pub mod error;
pub mod export;
pub mod game;
pub mod model;
pub mod poa;
pub mod pricing;
pub mod regret;
pub mod rng;
pub mod routing;
pub mod sampling;
pub mod scenario;

pub use dsee::{
    build_schedule, compute_g_bound, estimated_edge_price, exploration_period, run_unknown,
    run_unknown_with, DseeSchedule, GBoundOptions, GBoundParams, SampleStore, SlotKind, SlotRecord,
};
pub use enumerate::{DistributionSpace, DEFAULT_CAP};
pub use error::{Error, Result};
pub use game::{convergence_bound, is_nash, run_to_equilibrium, GameState, MoveRecord};
pub use model::{
    expected_total_cost, sample_slot_cost, Commodity, Edge, EdgeCostModel, FlowDistribution,
    Instance, NoiseFamily, NoiseSpec, Path, Topology,
};
pub use poa::{brute_force_optimum, poa_study, price_of_anarchy, poa_upper_bound, PoaReport};
pub use pricing::{edge_price, path_price, total_price, user_revenue, PriceView};
pub use regret::{regret_study, regret_trace, RegretCurve, RegretStudyConfig};
pub use routing::{extract_path, run_distance_vector, shortest_path_oracle};
pub use scenario::Scenario;
