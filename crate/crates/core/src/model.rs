//! Network model: undirected multigraph, stochastic polynomial edge costs,
//! unit-demand commodities and flow distributions.
//!
//! Expected edge cost is a polynomial in the integer load carried by the edge.
//! Realized costs add zero-mean noise with bounded support. Loads never exceed
//! the commodity count `K`, so every model is validated on `0..=K` only.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type VertexId = usize;
pub type EdgeId = usize;
pub type CommodityId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub a: VertexId,
    pub b: VertexId,
}

impl Edge {
    pub fn new(a: VertexId, b: VertexId) -> Self {
        Edge { a, b }
    }

    /// The endpoint opposite to `v`, if `v` is an endpoint.
    pub fn other(&self, v: VertexId) -> Option<VertexId> {
        if v == self.a {
            Some(self.b)
        } else if v == self.b {
            Some(self.a)
        } else {
            None
        }
    }

    pub fn touches(&self, v: VertexId) -> bool {
        self.a == v || self.b == v
    }
}

/// Undirected multigraph with adjacency lists ordered by edge id.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    num_vertices: usize,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(EdgeId, VertexId)>>,
}

impl Topology {
    pub fn new(num_vertices: usize, edges: Vec<Edge>) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); num_vertices];
        for (id, e) in edges.iter().enumerate() {
            if e.a >= num_vertices || e.b >= num_vertices {
                return Err(Error::Config(format!(
                    "edge {id} references a vertex outside 0..{num_vertices}"
                )));
            }
            if e.a == e.b {
                return Err(Error::Config(format!("edge {id} is a self-loop")));
            }
            adjacency[e.a].push((id, e.b));
            adjacency[e.b].push((id, e.a));
        }
        Ok(Topology {
            num_vertices,
            edges,
            adjacency,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> Result<Edge> {
        self.edges.get(id).copied().ok_or(Error::UnknownEdge(id))
    }

    /// Incident `(edge, neighbour)` pairs of `v`, ordered by edge id.
    pub fn incident(&self, v: VertexId) -> &[(EdgeId, VertexId)] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adjacency[v].len()
    }

    pub fn reachable(&self, from: VertexId, to: VertexId) -> bool {
        let mut seen = vec![false; self.num_vertices];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(v) = stack.pop() {
            if v == to {
                return true;
            }
            for &(_, w) in &self.adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseFamily {
    /// Deterministic costs.
    #[default]
    None,
    /// Uniform on `[-w, w]`.
    Uniform,
    /// `+w` or `-w` with equal probability.
    TwoPoint,
}

/// Zero-mean bounded noise added to each realized edge cost.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseSpec {
    #[serde(default)]
    pub family: NoiseFamily,
    #[serde(default)]
    pub half_width: f64,
    /// Optional half-width per load level `1..=K`, overriding `half_width`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_load: Option<Vec<f64>>,
}

impl NoiseSpec {
    pub fn none() -> Self {
        NoiseSpec::default()
    }

    pub fn uniform(half_width: f64) -> Self {
        NoiseSpec {
            family: NoiseFamily::Uniform,
            half_width,
            per_load: None,
        }
    }

    pub fn two_point(half_width: f64) -> Self {
        NoiseSpec {
            family: NoiseFamily::TwoPoint,
            half_width,
            per_load: None,
        }
    }

    pub fn half_width_at(&self, load: u32) -> f64 {
        if self.family == NoiseFamily::None {
            return 0.0;
        }
        match &self.per_load {
            Some(widths) if load >= 1 && (load as usize) <= widths.len() => {
                widths[load as usize - 1]
            }
            _ => self.half_width,
        }
    }

    pub fn variance_at(&self, load: u32) -> f64 {
        let w = self.half_width_at(load);
        match self.family {
            NoiseFamily::None => 0.0,
            NoiseFamily::Uniform => w * w / 3.0,
            NoiseFamily::TwoPoint => w * w,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, load: u32, rng: &mut R) -> f64 {
        let w = self.half_width_at(load);
        match self.family {
            NoiseFamily::None => 0.0,
            _ if w == 0.0 => 0.0,
            NoiseFamily::Uniform => rng.gen_range(-w..=w),
            NoiseFamily::TwoPoint => {
                if rng.gen_bool(0.5) {
                    w
                } else {
                    -w
                }
            }
        }
    }

    fn validate(&self) -> std::result::Result<(), String> {
        let check = |w: f64| {
            if w.is_finite() && w >= 0.0 {
                Ok(())
            } else {
                Err(format!("noise half-width {w} must be finite and nonnegative"))
            }
        };
        check(self.half_width)?;
        if let Some(widths) = &self.per_load {
            widths.iter().try_for_each(|&w| check(w))?;
        }
        Ok(())
    }
}

/// Per-edge cost model: expected cost polynomial plus noise.
///
/// `coefficients` are ordered from the leading power down to the constant
/// term, so `[1, 0, 0]` is `f^2` and `[1, 0, 1, 0]` is `f^3 + f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeCostModel {
    pub coefficients: Vec<f64>,
    #[serde(default)]
    pub noise: NoiseSpec,
}

impl EdgeCostModel {
    pub fn new(coefficients: Vec<f64>, noise: NoiseSpec) -> Self {
        EdgeCostModel {
            coefficients,
            noise,
        }
    }

    pub fn deterministic(coefficients: Vec<f64>) -> Self {
        Self::new(coefficients, NoiseSpec::none())
    }

    pub fn degree(&self) -> u32 {
        self.coefficients.len().saturating_sub(1) as u32
    }

    pub fn leading(&self) -> f64 {
        self.coefficients.first().copied().unwrap_or(0.0)
    }

    pub fn constant_term(&self) -> f64 {
        self.coefficients.last().copied().unwrap_or(0.0)
    }

    /// Expected cost at `load`, evaluated by Horner's rule. No range check.
    pub fn eval(&self, load: f64) -> f64 {
        self.coefficients.iter().fold(0.0, |acc, &c| acc * load + c)
    }

    pub fn variance(&self, load: u32) -> f64 {
        self.noise.variance_at(load)
    }

    pub fn sample<R: Rng + ?Sized>(&self, load: u32, rng: &mut R) -> f64 {
        self.eval(load as f64) + self.noise.sample(load, rng)
    }

    /// Checks nonnegativity, monotonicity and convexity over loads `0..=max_load`.
    pub fn validate(&self, edge: EdgeId, max_load: u32) -> Result<()> {
        let invalid = |reason: String| Error::InvalidCostModel { edge, reason };
        if self.coefficients.is_empty() {
            return Err(invalid("empty coefficient list".into()));
        }
        if self.coefficients.iter().any(|c| !c.is_finite()) {
            return Err(invalid("non-finite coefficient".into()));
        }
        if self.leading() <= 0.0 {
            return Err(invalid(format!(
                "leading coefficient {} must be positive",
                self.leading()
            )));
        }
        self.noise.validate().map_err(invalid)?;
        let values: Vec<f64> = (0..=max_load).map(|f| self.eval(f as f64)).collect();
        if let Some(f) = values.iter().position(|&v| v < 0.0) {
            return Err(invalid(format!("negative expected cost at load {f}")));
        }
        for f in 0..max_load as usize {
            if values[f + 1] < values[f] {
                return Err(Error::NonMonotone {
                    edge,
                    load: f as u32,
                    next: f as u32 + 1,
                });
            }
        }
        for f in 1..max_load as usize {
            let second = values[f + 1] - 2.0 * values[f] + values[f - 1];
            if second < -1e-9 * values[f + 1].abs().max(1.0) {
                return Err(Error::NonConvex {
                    edge,
                    load: f as u32,
                });
            }
        }
        Ok(())
    }
}

/// A unit-demand source/destination pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Commodity {
    pub source: VertexId,
    pub dest: VertexId,
}

/// Immutable problem description.
#[derive(Debug, Clone)]
pub struct Instance {
    vertex_names: Vec<String>,
    edge_names: Vec<String>,
    topology: Topology,
    cost_models: Vec<EdgeCostModel>,
    commodities: Vec<Commodity>,
    seed: u64,
    // expected cost per edge for loads 0..=K+1
    cost_table: Vec<Vec<f64>>,
}

impl Instance {
    /// Validates and builds an instance. Vertex and edge names are used only
    /// for reporting; pass empty vectors to get generated names.
    pub fn new(
        vertex_names: Vec<String>,
        topology: Topology,
        cost_models: Vec<EdgeCostModel>,
        commodities: Vec<Commodity>,
        seed: u64,
    ) -> Result<Self> {
        let n = topology.num_vertices();
        let vertex_names = if vertex_names.is_empty() {
            (0..n).map(|v| format!("v{v}")).collect()
        } else {
            vertex_names
        };
        if vertex_names.len() != n {
            return Err(Error::Config(format!(
                "{} vertex names for {} vertices",
                vertex_names.len(),
                n
            )));
        }
        if cost_models.len() != topology.num_edges() {
            return Err(Error::Config(format!(
                "{} cost models for {} edges",
                cost_models.len(),
                topology.num_edges()
            )));
        }
        if commodities.is_empty() {
            return Err(Error::NoCommodities);
        }
        let k = commodities.len() as u32;
        for (i, c) in commodities.iter().enumerate() {
            if c.source >= n || c.dest >= n {
                return Err(Error::Config(format!(
                    "commodity {i} references an unknown vertex"
                )));
            }
            if c.source == c.dest {
                return Err(Error::DegenerateCommodity { commodity: i });
            }
        }
        for (e, model) in cost_models.iter().enumerate() {
            model.validate(e, k)?;
        }
        for (i, c) in commodities.iter().enumerate() {
            if !topology.reachable(c.source, c.dest) {
                return Err(Error::Disconnected {
                    commodity: i,
                    source_name: vertex_names[c.source].clone(),
                    dest_name: vertex_names[c.dest].clone(),
                });
            }
        }
        let cost_table = cost_models
            .iter()
            .map(|m| (0..=k + 1).map(|f| m.eval(f as f64)).collect())
            .collect();
        let edge_names = (0..topology.num_edges())
            .map(|e| format!("e{}", e + 1))
            .collect();
        Ok(Instance {
            vertex_names,
            edge_names,
            topology,
            cost_models,
            commodities,
            seed,
            cost_table,
        })
    }

    pub fn with_edge_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.num_edges() {
            return Err(Error::Config("edge name count mismatch".into()));
        }
        self.edge_names = names;
        Ok(self)
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn num_vertices(&self) -> usize {
        self.topology.num_vertices()
    }

    pub fn num_edges(&self) -> usize {
        self.topology.num_edges()
    }

    /// `K`, the number of unit commodities.
    pub fn num_commodities(&self) -> usize {
        self.commodities.len()
    }

    pub fn max_load(&self) -> u32 {
        self.commodities.len() as u32
    }

    pub fn commodities(&self) -> &[Commodity] {
        &self.commodities
    }

    pub fn commodity(&self, k: CommodityId) -> Result<Commodity> {
        self.commodities
            .get(k)
            .copied()
            .ok_or(Error::UnknownCommodity(k))
    }

    pub fn cost_models(&self) -> &[EdgeCostModel] {
        &self.cost_models
    }

    pub fn cost_model(&self, e: EdgeId) -> Result<&EdgeCostModel> {
        self.cost_models.get(e).ok_or(Error::UnknownEdge(e))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn vertex_name(&self, v: VertexId) -> &str {
        &self.vertex_names[v]
    }

    pub fn vertex_names(&self) -> &[String] {
        &self.vertex_names
    }

    pub fn edge_name(&self, e: EdgeId) -> &str {
        &self.edge_names[e]
    }

    /// Short stable fingerprint of the topology, cost models and commodities.
    pub fn digest(&self) -> String {
        let mut buf = Vec::new();
        buf.extend((self.num_vertices() as u64).to_le_bytes());
        for (edge, model) in self.topology.edges().iter().zip(&self.cost_models) {
            buf.extend((edge.a as u64).to_le_bytes());
            buf.extend((edge.b as u64).to_le_bytes());
            buf.extend((model.coefficients.len() as u64).to_le_bytes());
            for c in &model.coefficients {
                buf.extend(c.to_bits().to_le_bytes());
            }
            buf.push(model.noise.family as u8);
            for l in 1..=self.max_load() {
                buf.extend(model.noise.half_width_at(l).to_bits().to_le_bytes());
            }
        }
        for c in &self.commodities {
            buf.extend((c.source as u64).to_le_bytes());
            buf.extend((c.dest as u64).to_le_bytes());
        }
        crate::rng::hex_digest(&buf)
    }

    /// Highest polynomial degree over all edges.
    pub fn max_degree(&self) -> u32 {
        self.cost_models.iter().map(|m| m.degree()).max().unwrap_or(0)
    }

    /// Expected cost of edge `e` at `load`, checked against `0..=K`.
    pub fn expected_edge_cost(&self, e: EdgeId, load: i64) -> Result<f64> {
        let table = self.cost_table.get(e).ok_or(Error::UnknownEdge(e))?;
        if load < 0 || load > self.max_load() as i64 {
            return Err(Error::LoadOutOfRange {
                load,
                max: self.max_load(),
            });
        }
        Ok(table[load as usize])
    }

    /// Table lookup for loads `0..=K+1`; the `K+1` entry extends the
    /// polynomial one step past the realizable range for inequality checks.
    #[inline]
    pub(crate) fn cost_at(&self, e: EdgeId, load: u32) -> f64 {
        self.cost_table[e][load as usize]
    }

    /// First difference `c(load) - c(load - 1)` for `load >= 1`.
    #[inline]
    pub(crate) fn marginal(&self, e: EdgeId, load: u32) -> f64 {
        self.cost_table[e][load as usize] - self.cost_table[e][load as usize - 1]
    }

    /// Sum of expected edge costs for an arbitrary load vector.
    pub fn cost_of_loads(&self, loads: &[u32]) -> f64 {
        loads
            .iter()
            .enumerate()
            .map(|(e, &f)| self.cost_at(e, f))
            .sum()
    }

    /// Path from a vertex sequence, choosing the lowest-id edge between
    /// consecutive vertices.
    pub fn path_through(&self, vertices: &[VertexId]) -> Result<Path> {
        let mut edges = Vec::with_capacity(vertices.len().saturating_sub(1));
        for w in vertices.windows(2) {
            let e = self
                .topology
                .incident(w[0])
                .iter()
                .find(|&&(_, v)| v == w[1])
                .map(|&(e, _)| e)
                .ok_or_else(|| {
                    Error::InvalidPath(format!("no edge between {} and {}", w[0], w[1]))
                })?;
            edges.push(e);
        }
        Ok(Path {
            vertices: vertices.to_vec(),
            edges,
        })
    }

    /// Path from a start vertex and a sequence of edges.
    pub fn path_from_edges(&self, start: VertexId, edges: &[EdgeId]) -> Result<Path> {
        let mut vertices = vec![start];
        let mut at = start;
        for &e in edges {
            let edge = self.topology.edge(e)?;
            at = edge.other(at).ok_or_else(|| {
                Error::InvalidPath(format!("edge {e} does not touch vertex {at}"))
            })?;
            vertices.push(at);
        }
        Ok(Path {
            vertices,
            edges: edges.to_vec(),
        })
    }

    /// Human-readable path: edge names joined by `>`.
    pub fn describe_path(&self, path: &Path) -> String {
        path.edges
            .iter()
            .map(|&e| self.edge_name(e))
            .collect::<Vec<_>>()
            .join(">")
    }
}

/// A walk through the graph as parallel vertex and edge sequences
/// (`vertices.len() == edges.len() + 1`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Path {
    pub vertices: Vec<VertexId>,
    pub edges: Vec<EdgeId>,
}

impl Path {
    pub fn trivial(v: VertexId) -> Self {
        Path {
            vertices: vec![v],
            edges: Vec::new(),
        }
    }

    pub fn source(&self) -> VertexId {
        self.vertices[0]
    }

    pub fn dest(&self) -> VertexId {
        *self.vertices.last().expect("path has at least one vertex")
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Checks adjacency, simplicity and endpoints against `topology`.
    pub fn validate(&self, topology: &Topology, source: VertexId, dest: VertexId) -> Result<()> {
        if self.vertices.len() != self.edges.len() + 1 {
            return Err(Error::InvalidPath("vertex/edge count mismatch".into()));
        }
        if self.source() != source || self.dest() != dest {
            return Err(Error::InvalidPath(format!(
                "path runs {} -> {}, expected {} -> {}",
                self.source(),
                self.dest(),
                source,
                dest
            )));
        }
        for (i, &e) in self.edges.iter().enumerate() {
            let edge = topology.edge(e)?;
            if edge.other(self.vertices[i]) != Some(self.vertices[i + 1]) {
                return Err(Error::InvalidPath(format!(
                    "edge {e} does not join {} and {}",
                    self.vertices[i],
                    self.vertices[i + 1]
                )));
            }
        }
        let mut seen = vec![false; topology.num_vertices()];
        for &v in &self.vertices {
            if v >= seen.len() || seen[v] {
                return Err(Error::InvalidPath(format!("vertex {v} repeated")));
            }
            seen[v] = true;
        }
        Ok(())
    }
}

/// Joint path assignment of all commodities and the induced edge loads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowDistribution {
    assignments: Vec<Option<Path>>,
    loads: Vec<u32>,
}

impl FlowDistribution {
    /// Nothing assigned, all loads zero.
    pub fn empty(inst: &Instance) -> Self {
        FlowDistribution {
            assignments: vec![None; inst.num_commodities()],
            loads: vec![0; inst.num_edges()],
        }
    }

    /// Fully assigned distribution; every path is validated.
    pub fn from_paths(inst: &Instance, paths: Vec<Path>) -> Result<Self> {
        if paths.len() != inst.num_commodities() {
            return Err(Error::Config(format!(
                "{} paths for {} commodities",
                paths.len(),
                inst.num_commodities()
            )));
        }
        let mut flow = Self::empty(inst);
        for (k, p) in paths.into_iter().enumerate() {
            flow.assign(inst, k, p)?;
        }
        Ok(flow)
    }

    pub fn assignments(&self) -> &[Option<Path>] {
        &self.assignments
    }

    pub fn path(&self, k: CommodityId) -> Option<&Path> {
        self.assignments.get(k).and_then(|p| p.as_ref())
    }

    pub fn loads(&self) -> &[u32] {
        &self.loads
    }

    pub fn edge_load(&self, e: EdgeId) -> Result<u32> {
        self.loads.get(e).copied().ok_or(Error::UnknownEdge(e))
    }

    pub fn is_complete(&self) -> bool {
        self.assignments.iter().all(Option::is_some)
    }

    pub fn first_unassigned(&self) -> Option<CommodityId> {
        self.assignments.iter().position(Option::is_none)
    }

    /// Puts commodity `k` on `path`, replacing any previous assignment.
    pub fn assign(&mut self, inst: &Instance, k: CommodityId, path: Path) -> Result<()> {
        let c = inst.commodity(k)?;
        path.validate(inst.topology(), c.source, c.dest)?;
        self.withdraw(k);
        for &e in &path.edges {
            self.loads[e] += 1;
        }
        self.assignments[k] = Some(path);
        Ok(())
    }

    /// Removes commodity `k`, returning its previous path.
    pub fn withdraw(&mut self, k: CommodityId) -> Option<Path> {
        let old = self.assignments.get_mut(k)?.take();
        if let Some(p) = &old {
            for &e in &p.edges {
                self.loads[e] -= 1;
            }
        }
        old
    }

    /// Copy with commodity `k` withdrawn.
    pub fn without(&self, k: CommodityId) -> Self {
        let mut f = self.clone();
        f.withdraw(k);
        f
    }

    fn require_complete(&self) -> Result<()> {
        match self.first_unassigned() {
            Some(k) => Err(Error::Unassigned(k)),
            None => Ok(()),
        }
    }
}

/// Load on edge `e` under `flow`.
pub fn edge_load(flow: &FlowDistribution, e: EdgeId) -> Result<u32> {
    flow.edge_load(e)
}

/// Expected total cost of one slot, the sum of expected edge costs.
pub fn expected_total_cost(inst: &Instance, flow: &FlowDistribution) -> Result<f64> {
    flow.require_complete()?;
    Ok(inst.cost_of_loads(flow.loads()))
}

/// One realized slot cost: expected edge costs plus an independent noise
/// draw per edge.
pub fn sample_slot_cost<R: Rng + ?Sized>(
    inst: &Instance,
    flow: &FlowDistribution,
    rng: &mut R,
) -> Result<f64> {
    flow.require_complete()?;
    Ok(sample_loads_cost(inst, flow.loads(), rng))
}

pub(crate) fn sample_loads_cost<R: Rng + ?Sized>(inst: &Instance, loads: &[u32], rng: &mut R) -> f64 {
    loads
        .iter()
        .enumerate()
        .map(|(e, &f)| inst.cost_at(e, f) + inst.cost_models[e].noise.sample(f, rng))
        .sum()
}

/// All simple paths for commodity `k`, in depth-first order over edge ids.
/// Fails if more than `cap` paths exist.
pub fn simple_paths(inst: &Instance, k: CommodityId, cap: usize) -> Result<Vec<Path>> {
    let c = inst.commodity(k)?;
    let topo = inst.topology();
    let mut out = Vec::new();
    let mut on_path = vec![false; topo.num_vertices()];
    let mut vertices = vec![c.source];
    let mut edges = Vec::new();
    on_path[c.source] = true;

    fn dfs(
        topo: &Topology,
        dest: VertexId,
        cap: usize,
        on_path: &mut [bool],
        vertices: &mut Vec<VertexId>,
        edges: &mut Vec<EdgeId>,
        out: &mut Vec<Path>,
    ) -> Result<()> {
        let at = *vertices.last().unwrap();
        if at == dest {
            if out.len() >= cap {
                return Err(Error::EnumerationCap {
                    size: cap as u128 + 1,
                    cap: cap as u64,
                });
            }
            out.push(Path {
                vertices: vertices.clone(),
                edges: edges.clone(),
            });
            return Ok(());
        }
        for &(e, w) in topo.incident(at) {
            if on_path[w] {
                continue;
            }
            on_path[w] = true;
            vertices.push(w);
            edges.push(e);
            dfs(topo, dest, cap, on_path, vertices, edges, out)?;
            edges.pop();
            vertices.pop();
            on_path[w] = false;
        }
        Ok(())
    }

    dfs(
        topo,
        c.dest,
        cap,
        &mut on_path,
        &mut vertices,
        &mut edges,
        &mut out,
    )?;
    Ok(out)
}
