//! Synchronous distance-vector routing.
//!
//! Each round every router with a finite estimate advertises it over each
//! incident edge; receivers relax using the estimates of the previous round.
//! One round models one time slot. A centralized Dijkstra oracle is provided
//! for cross-checking.

use crate::error::{Error, Result};
use crate::model::{EdgeId, Path, Topology, VertexId};

/// One advertisement sent over an edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Message {
    pub round: usize,
    pub sender: VertexId,
    pub receiver: VertexId,
    pub edge: EdgeId,
    pub distance: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MessageLog {
    pub messages: Vec<Message>,
}

/// Per-router state after a number of synchronous rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct RouterState {
    pub source: VertexId,
    pub distance: Vec<f64>,
    /// `(edge, upstream vertex)` the estimate was learned from.
    pub predecessor: Vec<Option<(EdgeId, VertexId)>>,
    pub rounds: usize,
    /// Distance vector after each round; entry 0 is the initial state.
    pub history: Vec<Vec<f64>>,
}

impl RouterState {
    pub fn distance_to(&self, v: VertexId) -> f64 {
        self.distance[v]
    }
}

fn check_weights(topology: &Topology, weights: &[f64]) -> Result<()> {
    if weights.len() != topology.num_edges() {
        return Err(Error::InvalidParameter(format!(
            "{} weights for {} edges",
            weights.len(),
            topology.num_edges()
        )));
    }
    for (edge, &weight) in weights.iter().enumerate() {
        if !(weight >= 0.0) || !weight.is_finite() {
            return Err(Error::NegativeWeight { edge, weight });
        }
    }
    Ok(())
}

/// Runs `rounds` synchronous distance-vector rounds from `source`.
///
/// Within a round a router adopts the best advertisement by
/// `(distance, edge id, sender id)` and only when it strictly improves its
/// estimate, so predecessor chains stay acyclic and ties break the same way
/// on every run.
pub fn run_distance_vector(
    topology: &Topology,
    weights: &[f64],
    source: VertexId,
    rounds: usize,
) -> Result<(RouterState, MessageLog)> {
    check_weights(topology, weights)?;
    let n = topology.num_vertices();
    if source >= n {
        return Err(Error::UnknownVertex(source.to_string()));
    }
    let mut distance = vec![f64::INFINITY; n];
    let mut predecessor = vec![None; n];
    distance[source] = 0.0;
    let mut history = vec![distance.clone()];
    let mut log = MessageLog::default();

    for round in 1..=rounds {
        let previous = distance.clone();
        let mut best: Vec<Option<(f64, EdgeId, VertexId)>> = vec![None; n];
        for sender in 0..n {
            if !previous[sender].is_finite() {
                continue;
            }
            for &(edge, receiver) in topology.incident(sender) {
                log.messages.push(Message {
                    round,
                    sender,
                    receiver,
                    edge,
                    distance: previous[sender],
                });
                let candidate = (previous[sender] + weights[edge], edge, sender);
                let better = match best[receiver] {
                    None => true,
                    Some(b) => (candidate.0, candidate.1, candidate.2) < (b.0, b.1, b.2),
                };
                if better {
                    best[receiver] = Some(candidate);
                }
            }
        }
        for v in 0..n {
            if let Some((d, edge, sender)) = best[v] {
                if d < distance[v] {
                    distance[v] = d;
                    predecessor[v] = Some((edge, sender));
                }
            }
        }
        history.push(distance.clone());
    }

    Ok((
        RouterState {
            source,
            distance,
            predecessor,
            rounds,
            history,
        },
        log,
    ))
}

/// Follows predecessors from `dest` back to the source.
pub fn extract_path(state: &RouterState, dest: VertexId) -> Result<Path> {
    if dest >= state.distance.len() || !state.distance[dest].is_finite() {
        return Err(Error::Unreachable(dest));
    }
    let mut vertices = vec![dest];
    let mut edges = Vec::new();
    let mut at = dest;
    while at != state.source {
        let (edge, up) = state.predecessor[at].ok_or(Error::Unreachable(dest))?;
        edges.push(edge);
        vertices.push(up);
        at = up;
        if edges.len() > state.distance.len() {
            return Err(Error::InvalidPath("predecessor cycle".into()));
        }
    }
    vertices.reverse();
    edges.reverse();
    Ok(Path { vertices, edges })
}

/// Sum of `weights` along `path`, accumulated from the source end.
pub fn path_weight(weights: &[f64], path: &Path) -> f64 {
    path.edges.iter().fold(0.0, |acc, &e| acc + weights[e])
}

/// Centralized shortest path (Dijkstra over a dense scan).
pub fn shortest_path_oracle(
    topology: &Topology,
    weights: &[f64],
    source: VertexId,
    dest: VertexId,
) -> Result<(f64, Path)> {
    check_weights(topology, weights)?;
    let n = topology.num_vertices();
    if source >= n || dest >= n {
        return Err(Error::UnknownVertex(source.max(dest).to_string()));
    }
    let mut dist = vec![f64::INFINITY; n];
    let mut pred: Vec<Option<(EdgeId, VertexId)>> = vec![None; n];
    let mut done = vec![false; n];
    dist[source] = 0.0;
    loop {
        let next = (0..n)
            .filter(|&v| !done[v] && dist[v].is_finite())
            .min_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)));
        let Some(u) = next else { break };
        done[u] = true;
        if u == dest {
            break;
        }
        for &(e, w) in topology.incident(u) {
            let d = dist[u] + weights[e];
            if d < dist[w] {
                dist[w] = d;
                pred[w] = Some((e, u));
            }
        }
    }
    if !dist[dest].is_finite() {
        return Err(Error::Unreachable(dest));
    }
    let state = RouterState {
        source,
        distance: dist.clone(),
        predecessor: pred,
        rounds: 0,
        history: Vec::new(),
    };
    Ok((dist[dest], extract_path(&state, dest)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Edge;

    fn d1_topology() -> Topology {
        Topology::new(2, vec![Edge::new(0, 1), Edge::new(0, 1)]).unwrap()
    }

    fn line() -> Topology {
        Topology::new(3, vec![Edge::new(0, 1), Edge::new(1, 2)]).unwrap()
    }

    #[test]
    fn parallel_edges_pick_cheaper() {
        let topo = d1_topology();
        let (state, _) = run_distance_vector(&topo, &[3.0, 1.0], 0, 2).unwrap();
        assert_eq!(state.distance_to(1), 1.0);
        assert_eq!(extract_path(&state, 1).unwrap().edges, vec![1]);
        let (d, p) = shortest_path_oracle(&topo, &[3.0, 1.0], 0, 1).unwrap();
        assert_eq!((d, p.edges), (1.0, vec![1]));
    }

    #[test]
    fn line_graph_chain() {
        let topo = line();
        let (state, log) = run_distance_vector(&topo, &[1.0, 1.0], 0, 3).unwrap();
        assert_eq!(state.distance_to(2), 2.0);
        let p = extract_path(&state, 2).unwrap();
        assert_eq!(p.vertices, vec![0, 1, 2]);
        assert_eq!(p.edges, vec![0, 1]);
        for m in &log.messages {
            assert!(topo.edge(m.edge).unwrap().touches(m.sender));
            assert_eq!(topo.edge(m.edge).unwrap().other(m.sender), Some(m.receiver));
        }
    }

    #[test]
    fn equal_weights_break_toward_smaller_edge() {
        let topo = d1_topology();
        let (state, _) = run_distance_vector(&topo, &[1.0, 1.0], 0, 2).unwrap();
        assert_eq!(extract_path(&state, 1).unwrap().edges, vec![0]);
    }

    #[test]
    fn source_equals_dest() {
        let topo = line();
        let (d, p) = shortest_path_oracle(&topo, &[1.0, 1.0], 1, 1).unwrap();
        assert_eq!(d, 0.0);
        assert!(p.is_empty());
        let (state, _) = run_distance_vector(&topo, &[1.0, 1.0], 1, 3).unwrap();
        assert!(extract_path(&state, 1).unwrap().is_empty());
    }

    #[test]
    fn negative_weight_rejected() {
        let topo = line();
        assert!(matches!(
            run_distance_vector(&topo, &[1.0, -0.5], 0, 3),
            Err(Error::NegativeWeight { edge: 1, .. })
        ));
        assert!(shortest_path_oracle(&topo, &[f64::NAN, 1.0], 0, 2).is_err());
    }

    #[test]
    fn unreachable_destination() {
        let topo = Topology::new(3, vec![Edge::new(0, 1)]).unwrap();
        let (state, _) = run_distance_vector(&topo, &[1.0], 0, 3).unwrap();
        assert!(matches!(extract_path(&state, 2), Err(Error::Unreachable(2))));
        assert!(matches!(
            shortest_path_oracle(&topo, &[1.0], 0, 2),
            Err(Error::Unreachable(2))
        ));
    }

    #[test]
    fn too_few_rounds_leave_far_vertices_unknown() {
        let topo = line();
        let (state, _) = run_distance_vector(&topo, &[1.0, 1.0], 0, 1).unwrap();
        assert_eq!(state.distance_to(1), 1.0);
        assert!(state.distance_to(2).is_infinite());
    }
}
