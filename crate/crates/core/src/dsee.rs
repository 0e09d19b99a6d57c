//! Learning unknown edge costs with a deterministic sequence of exploration
//! and exploitation slots.
//!
//! Time starts with one exploration period. After each exploration period,
//! if the number of exploration slots so far `card` is still below `G ln t`
//! another exploration period follows; otherwise an exploitation period
//! starts with `N * K` routing slots (one game circle on estimated prices)
//! and then routes the current distribution until `card < G ln t` again.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::enumerate::DistributionSpace;
use crate::error::{Error, Result};
use crate::game::{distinct_sorted, is_nash, GameState, MoveRecord};
use crate::model::{sample_loads_cost, simple_paths, CommodityId, EdgeId, FlowDistribution, Instance};
use crate::pricing::{insertion_weights, PriceView};
use crate::rng::substream;

/// Per-(edge, load) sample means kept in router memory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleStore {
    max_load: u32,
    /// Known constant terms, used as the load-0 estimate.
    base: Vec<f64>,
    counts: Vec<u64>,
    means: Vec<f64>,
    card: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoreEntry {
    pub edge: EdgeId,
    pub load: u32,
    pub count: u64,
    pub mean: f64,
}

impl SampleStore {
    /// Empty store: every load level unobserved.
    pub fn new(inst: &Instance) -> Self {
        let slots = inst.num_edges() * inst.max_load() as usize;
        SampleStore {
            max_load: inst.max_load(),
            base: inst.cost_models().iter().map(|m| m.constant_term()).collect(),
            counts: vec![0; slots],
            means: vec![0.0; slots],
            card: 0,
        }
    }

    /// Store holding the true expectation once at every load level.
    pub fn exact(inst: &Instance) -> Self {
        let mut store = Self::new(inst);
        for e in 0..inst.num_edges() {
            for l in 1..=inst.max_load() {
                store.observe(e, l, inst.cost_at(e, l)).expect("in range");
            }
        }
        store
    }

    pub fn num_edges(&self) -> usize {
        self.base.len()
    }

    pub fn max_load(&self) -> u32 {
        self.max_load
    }

    fn index(&self, e: EdgeId, load: u32) -> Result<usize> {
        if e >= self.base.len() {
            return Err(Error::UnknownEdge(e));
        }
        if load == 0 || load > self.max_load {
            return Err(Error::LoadOutOfRange {
                load: load as i64,
                max: self.max_load,
            });
        }
        Ok(e * self.max_load as usize + load as usize - 1)
    }

    /// Folds one observation into the running mean.
    pub fn observe(&mut self, e: EdgeId, load: u32, value: f64) -> Result<()> {
        let i = self.index(e, load)?;
        self.counts[i] += 1;
        self.means[i] += (value - self.means[i]) / self.counts[i] as f64;
        Ok(())
    }

    pub fn count(&self, e: EdgeId, load: u32) -> u64 {
        self.index(e, load).map_or(0, |i| self.counts[i])
    }

    /// Current estimate: the known constant term at load 0, zero when never
    /// observed.
    pub fn mean(&self, e: EdgeId, load: u32) -> f64 {
        if load == 0 {
            return self.base.get(e).copied().unwrap_or(0.0);
        }
        self.index(e, load).map_or(0.0, |i| self.means[i])
    }

    /// Exploration slots consumed so far.
    pub fn card(&self) -> u64 {
        self.card
    }

    pub fn all_observed(&self) -> bool {
        self.counts.iter().all(|&c| c > 0)
    }

    pub fn total_observations(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn snapshot(&self) -> Vec<StoreEntry> {
        (0..self.base.len())
            .flat_map(|e| {
                (1..=self.max_load).map(move |load| StoreEntry {
                    edge: e,
                    load,
                    count: self.count(e, load),
                    mean: self.mean(e, load),
                })
            })
            .collect()
    }
}

/// `max(0, ĉ(f_e) - ĉ(f_e - f_k))`.
pub fn estimated_edge_price(store: &SampleStore, e: EdgeId, f_e: u32, f_k: u32) -> f64 {
    (store.mean(e, f_e) - store.mean(e, f_e.saturating_sub(f_k))).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotKind {
    Explore,
    BellmanFord,
    Exploit,
}

impl SlotKind {
    pub fn label(self) -> &'static str {
        match self {
            SlotKind::Explore => "explore",
            SlotKind::BellmanFord => "bellman_ford",
            SlotKind::Exploit => "exploit",
        }
    }
}

/// A maximal run of slots of one kind. `tag` is the exploring commodity for
/// exploration, and the circle number (1-based) for routing and exploitation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Period {
    pub kind: SlotKind,
    /// First slot, 1-based.
    pub start: u64,
    pub len: u64,
    pub tag: u32,
}

impl Period {
    pub fn end(&self) -> u64 {
        self.start + self.len - 1
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotCounts {
    pub explore: u64,
    pub bellman_ford: u64,
    pub exploit: u64,
}

impl SlotCounts {
    pub fn total(&self) -> u64 {
        self.explore + self.bellman_ford + self.exploit
    }

    fn add(&mut self, kind: SlotKind, n: u64) {
        match kind {
            SlotKind::Explore => self.explore += n,
            SlotKind::BellmanFord => self.bellman_ford += n,
            SlotKind::Exploit => self.exploit += n,
        }
    }
}

/// The full slot labeling, fixed in advance by `(G, N, K, horizon)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DseeSchedule {
    pub g: f64,
    pub n: u32,
    pub k: u32,
    pub horizon: u64,
    pub periods: Vec<Period>,
}

/// First slot `t >= from` with `card < g ln t`.
fn first_deficit(g: f64, card: u64, from: u64) -> u64 {
    let below = |t: u64| (card as f64) < g * (t as f64).ln();
    if below(from) {
        return from;
    }
    let guess = (card as f64 / g).exp();
    let mut t = if guess.is_finite() && guess < u64::MAX as f64 / 2.0 {
        (guess.floor() as u64).max(from)
    } else {
        return u64::MAX;
    };
    while t > from && below(t - 1) {
        t -= 1;
    }
    while !below(t) {
        t += 1;
    }
    t
}

/// Builds the schedule. Periods cut by the horizon are truncated.
pub fn build_schedule(g: f64, n: u32, k: u32, horizon: u64) -> Result<DseeSchedule> {
    if !(g > 0.0) || !g.is_finite() {
        return Err(Error::InvalidParameter(format!("G must be positive, got {g}")));
    }
    if n == 0 || k == 0 {
        return Err(Error::InvalidParameter("N and K must be positive".into()));
    }
    let min = n as u64 * (k as u64 + 1);
    if horizon < min {
        return Err(Error::InvalidParameter(format!(
            "horizon {horizon} is shorter than N(K+1) = {min}"
        )));
    }
    let (n64, block) = (n as u64, n as u64 * k as u64);
    let mut periods = Vec::new();
    let mut t = 1;
    let mut card = 0;
    let mut source = 0;
    let mut circle = 0;
    while t <= horizon {
        let len = n64.min(horizon - t + 1);
        periods.push(Period {
            kind: SlotKind::Explore,
            start: t,
            len,
            tag: source,
        });
        card += len;
        source = (source + 1) % k;
        t += len;
        if t > horizon || (card as f64) < g * (t as f64).ln() {
            continue;
        }
        circle += 1;
        let len = block.min(horizon - t + 1);
        periods.push(Period {
            kind: SlotKind::BellmanFord,
            start: t,
            len,
            tag: circle,
        });
        t += len;
        if t > horizon {
            break;
        }
        let stop = first_deficit(g, card, t).min(horizon + 1);
        if stop > t {
            periods.push(Period {
                kind: SlotKind::Exploit,
                start: t,
                len: stop - t,
                tag: circle,
            });
            t = stop;
        }
    }
    Ok(DseeSchedule {
        g,
        n,
        k,
        horizon,
        periods,
    })
}

impl DseeSchedule {
    pub fn counts(&self) -> SlotCounts {
        let mut c = SlotCounts::default();
        for p in &self.periods {
            c.add(p.kind, p.len);
        }
        c
    }

    /// Slot counts over `1..=t`.
    pub fn counts_until(&self, t: u64) -> SlotCounts {
        let mut c = SlotCounts::default();
        for p in self.periods.iter().take_while(|p| p.start <= t) {
            c.add(p.kind, p.len.min(t - p.start + 1));
        }
        c
    }

    /// `(start, exploring commodity)` of every exploration period.
    pub fn exploration_starts(&self) -> Vec<(u64, u32)> {
        self.periods
            .iter()
            .filter(|p| p.kind == SlotKind::Explore)
            .map(|p| (p.start, p.tag))
            .collect()
    }

    /// Every slot as `(t, kind, tag)`.
    pub fn slots(&self) -> impl Iterator<Item = (u64, SlotKind, u32)> + '_ {
        self.periods
            .iter()
            .flat_map(|p| (p.start..=p.end()).map(move |t| (t, p.kind, p.tag)))
    }
}

/// Runs `hops` steps of the exploration walk from `source`: each hop probes
/// a random incident edge at a random load level in `1..=K` and moves across it.
fn explore_hops<R: Rng + ?Sized>(
    inst: &Instance,
    source: usize,
    hops: u64,
    store: &mut SampleStore,
    rng: &mut R,
) -> Result<()> {
    let topo = inst.topology();
    let mut at = source;
    for _ in 0..hops {
        let incident = topo.incident(at);
        if incident.is_empty() {
            return Err(Error::Degenerate(format!(
                "vertex {} is isolated",
                inst.vertex_name(at)
            )));
        }
        let (e, next) = incident[rng.gen_range(0..incident.len())];
        let load = rng.gen_range(1..=inst.max_load());
        let value = inst.cost_models()[e].sample(load, rng);
        store.observe(e, load, value)?;
        store.card += 1;
        at = next;
    }
    Ok(())
}

/// One `N`-hop exploration period from the source of commodity `k`.
pub fn exploration_period<R: Rng + ?Sized>(
    inst: &Instance,
    k: CommodityId,
    store: &mut SampleStore,
    rng: &mut R,
) -> Result<()> {
    let source = inst.commodity(k)?.source;
    explore_hops(inst, source, inst.num_vertices() as u64, store, rng)
}

/// One slot of an unknown-model run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub t: u64,
    pub kind: SlotKind,
    /// Exploring commodity, or the circle whose distribution is in force.
    pub tag: u32,
    /// Whether the routed distribution is an equilibrium under true
    /// expectations. Always false in slots that carry no traffic.
    pub at_nash: bool,
    /// Sampled network cost; zero when no traffic is carried.
    pub realized_cost: f64,
    /// Exploration slots up to and including `t`.
    pub card: u64,
}

#[derive(Debug, Clone)]
pub struct UnknownSummary {
    pub schedule: DseeSchedule,
    pub store: SampleStore,
    pub flow: FlowDistribution,
    pub circles: usize,
    pub moves: Vec<MoveRecord>,
    /// Slot counts over the whole horizon.
    pub counts: SlotCounts,
    /// Exploitation slots spent away from equilibrium.
    pub off_nash_exploit: u64,
}

#[derive(Debug, Clone)]
pub struct UnknownRun {
    pub summary: UnknownSummary,
    pub trace: Vec<SlotRecord>,
}

/// Runs the learner for `horizon` slots and collects the slot trace.
pub fn run_unknown(inst: &Instance, g: f64, horizon: u64, seed: u64) -> Result<UnknownRun> {
    let mut trace = Vec::with_capacity(horizon.min(1 << 24) as usize);
    let summary = run_unknown_with(inst, g, horizon, seed, |r| trace.push(*r))?;
    Ok(UnknownRun { summary, trace })
}

/// Runs the learner, handing each slot record to `visit` instead of keeping
/// the trace. Walks and exploitation noise use separate substreams of `seed`.
pub fn run_unknown_with<F: FnMut(&SlotRecord)>(
    inst: &Instance,
    g: f64,
    horizon: u64,
    seed: u64,
    mut visit: F,
) -> Result<UnknownSummary> {
    let schedule = build_schedule(g, inst.num_vertices() as u32, inst.num_commodities() as u32, horizon)?;
    let mut walk_rng = substream(seed, "explore", 0);
    let mut noise_rng = substream(seed, "noise", 0);
    let mut store = SampleStore::new(inst);
    let mut game = GameState::new(inst);
    let mut off_nash_exploit = 0;

    for p in &schedule.periods {
        let mut emit = |t: u64, at_nash: bool, realized_cost: f64, card: u64| {
            visit(&SlotRecord {
                t,
                kind: p.kind,
                tag: p.tag,
                at_nash,
                realized_cost,
                card,
            })
        };
        match p.kind {
            SlotKind::Explore => {
                let source = inst.commodity(p.tag as usize)?.source;
                let before = store.card;
                explore_hops(inst, source, p.len, &mut store, &mut walk_rng)?;
                for (i, t) in (p.start..=p.end()).enumerate() {
                    emit(t, false, 0.0, before + i as u64 + 1);
                }
            }
            SlotKind::BellmanFord => {
                // a block cut by the horizon never completes its circle
                if p.len == schedule.n as u64 * schedule.k as u64 {
                    game.run_circle(&PriceView::Estimated(&store))?;
                }
                for t in p.start..=p.end() {
                    emit(t, false, 0.0, store.card);
                }
            }
            SlotKind::Exploit => {
                let flow = game.flow();
                let at_nash = is_nash(inst, flow)?;
                if !at_nash {
                    off_nash_exploit += p.len;
                }
                for t in p.start..=p.end() {
                    let cost = sample_loads_cost(inst, flow.loads(), &mut noise_rng);
                    emit(t, at_nash, cost, store.card);
                }
            }
        }
    }

    let counts = schedule.counts();
    let circles = game.circles();
    let moves = game.moves().to_vec();
    Ok(UnknownSummary {
        schedule,
        store,
        flow: game.into_flow(),
        circles,
        moves,
        counts,
        off_nash_exploit,
    })
}

/// Constants of the sufficient condition on `G`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GBoundParams {
    /// Largest rank of a commodity's path incidence vectors.
    pub d: usize,
    /// Largest noise variance over edges and loads.
    pub sigma2: f64,
    /// Smallest per-(edge, load) observation rate per exploration slot.
    pub r: f64,
    /// 95% half-width of the Monte Carlo estimate of `r`.
    pub r_half_width: f64,
    /// Smallest positive gap between a commodity's best and second-best
    /// path price.
    pub c: f64,
}

impl GBoundParams {
    /// `max(3/r, 8 d^2 |E| sigma^2 / (r c^2))`.
    pub fn g_star(&self, num_edges: usize) -> f64 {
        let d = self.d as f64;
        (3.0 / self.r).max(8.0 * d * d * num_edges as f64 * self.sigma2 / (self.r * self.c * self.c))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GBoundOptions {
    /// Monte Carlo exploration periods per commodity.
    pub periods_per_source: u64,
    pub path_cap: usize,
    pub enumeration_cap: u64,
}

impl Default for GBoundOptions {
    fn default() -> Self {
        GBoundOptions {
            periods_per_source: 20_000,
            path_cap: 10_000,
            enumeration_cap: crate::enumerate::DEFAULT_CAP,
        }
    }
}

/// Rank of the 0/1 edge-incidence vectors of each commodity's simple paths.
pub fn path_dimension(inst: &Instance, path_cap: usize) -> Result<usize> {
    let mut best = 0;
    for k in 0..inst.num_commodities() {
        let paths = simple_paths(inst, k, path_cap)?;
        let m = inst.num_edges();
        let mut data = vec![0.0; paths.len() * m];
        for (i, p) in paths.iter().enumerate() {
            for &e in &p.edges {
                data[i * m + e] = 1.0;
            }
        }
        let rank = DMatrix::from_row_slice(paths.len(), m, &data).rank(1e-9);
        best = best.max(rank);
    }
    Ok(best)
}

/// Smallest positive gap between the cheapest and the next distinct path
/// price of a commodity, over every placement of the other commodities.
pub fn min_price_gap(inst: &Instance, cap: u64) -> Result<f64> {
    let space = DistributionSpace::new(inst, cap)?;
    let mut gap = f64::INFINITY;
    let mut failure = None;
    space.for_each(inst.num_edges(), |choice, loads| {
        if failure.is_some() {
            return;
        }
        for k in 0..inst.num_commodities() {
            let mut others = loads.to_vec();
            for &e in &space.paths(k)[choice[k]].edges {
                others[e] -= 1;
            }
            let weights = match insertion_weights(inst, &PriceView::Exact, &others) {
                Ok(w) => w,
                Err(e) => {
                    failure = Some(e);
                    return;
                }
            };
            let prices: Vec<f64> = space
                .paths(k)
                .iter()
                .map(|p| p.edges.iter().map(|&e| weights[e]).sum())
                .collect();
            let distinct = distinct_sorted(prices);
            if distinct.len() >= 2 {
                gap = gap.min(distinct[1] - distinct[0]);
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    if gap.is_finite() {
        Ok(gap)
    } else {
        Err(Error::Degenerate(
            "every commodity's paths always tie in price".into(),
        ))
    }
}

/// Monte Carlo estimate of the smallest per-(edge, load) observation rate
/// per exploration slot, with sources taken round-robin. Returns the
/// estimate and a 95% half-width.
pub fn observation_rate(inst: &Instance, periods_per_source: u64, seed: u64) -> Result<(f64, f64)> {
    if periods_per_source == 0 {
        return Err(Error::InvalidParameter("Monte Carlo budget is zero".into()));
    }
    let n = inst.num_vertices() as u64;
    let cells = inst.num_edges() * inst.max_load() as usize;
    let mut rng = substream(seed, "g-bound/walk", 0);
    let mut sum = vec![0.0; cells];
    let mut sum_sq = vec![0.0; cells];
    let mut periods = 0u64;
    for _ in 0..periods_per_source {
        for k in 0..inst.num_commodities() {
            let mut store = SampleStore::new(inst);
            exploration_period(inst, k, &mut store, &mut rng)?;
            for (i, &c) in store.counts.iter().enumerate() {
                let x = c as f64 / n as f64;
                sum[i] += x;
                sum_sq[i] += x * x;
            }
            periods += 1;
        }
    }
    let p = periods as f64;
    let (i, &min) = sum
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("instance has edges");
    let mean = min / p;
    if mean <= 0.0 {
        let (e, load) = (i / inst.max_load() as usize, i % inst.max_load() as usize + 1);
        return Err(Error::Degenerate(format!(
            "exploration never observed edge {} at load {load}",
            inst.edge_name(e)
        )));
    }
    let var = (sum_sq[i] / p - mean * mean).max(0.0) * p / (p - 1.0).max(1.0);
    Ok((mean, 1.96 * (var / p).sqrt()))
}

/// Parameters and the resulting sufficient `G`; `seed` drives the Monte
/// Carlo walks.
pub fn compute_g_bound(inst: &Instance, opts: &GBoundOptions, seed: u64) -> Result<(GBoundParams, f64)> {
    let d = path_dimension(inst, opts.path_cap)?;
    let c = min_price_gap(inst, opts.enumeration_cap)?;
    let sigma2 = inst
        .cost_models()
        .iter()
        .flat_map(|m| (1..=inst.max_load()).map(move |l| m.variance(l)))
        .fold(0.0, f64::max);
    let (r, r_half_width) = observation_rate(inst, opts.periods_per_source, seed)?;
    let params = GBoundParams {
        d,
        sigma2,
        r,
        r_half_width,
        c,
    };
    Ok((params, params.g_star(inst.num_edges())))
}
