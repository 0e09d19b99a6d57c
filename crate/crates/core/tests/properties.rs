use proptest::prelude::*;
use rand::Rng;

use flowsched_core::dsee::{build_schedule, estimated_edge_price, SampleStore, SlotKind};
use flowsched_core::game::{convergence_bound, is_nash, run_to_equilibrium, GameState};
use flowsched_core::model::{simple_paths, Edge, FlowDistribution, Instance, NoiseSpec, Topology};
use flowsched_core::poa::{price_of_anarchy, poa_upper_bound};
use flowsched_core::pricing::{insertion_weights, path_price, total_price, user_revenue, PriceView};
use flowsched_core::rng::substream;
use flowsched_core::routing::{extract_path, path_weight, run_distance_vector, shortest_path_oracle};
use flowsched_core::sampling::{sample_instance, SamplingLaw};
use flowsched_core::DEFAULT_CAP;

fn random_instance(seed: u64, law: &SamplingLaw) -> Instance {
    let mut rng = substream(seed, "prop/instance", 0);
    sample_instance(law, seed, &mut rng).unwrap()
}

fn random_flow(inst: &Instance, seed: u64) -> FlowDistribution {
    let mut rng = substream(seed, "prop/flow", 0);
    let paths = (0..inst.num_commodities())
        .map(|k| {
            let all = simple_paths(inst, k, 10_000).unwrap();
            all[rng.gen_range(0..all.len())].clone()
        })
        .collect();
    FlowDistribution::from_paths(inst, paths).unwrap()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

fn graph_strategy() -> impl Strategy<Value = (usize, Vec<(usize, usize)>, Vec<f64>)> {
    (2usize..=12).prop_flat_map(|n| {
        let edge = (0..n, 0..n).prop_filter("no self loops", |(a, b)| a != b);
        proptest::collection::vec(edge, 1..30).prop_flat_map(move |edges| {
            let m = edges.len();
            // small integers make ties common
            let weight = prop_oneof![(0u32..4).prop_map(f64::from), 0.0f64..10.0];
            (Just(n), Just(edges), proptest::collection::vec(weight, m))
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn revenue_equals_path_price_and_sums_to_total_price(seed in any::<u64>()) {
        let inst = random_instance(seed, &SamplingLaw::default());
        let flow = random_flow(&inst, seed);
        let mut sum = 0.0;
        for k in 0..inst.num_commodities() {
            let revenue = user_revenue(&inst, &flow, k).unwrap();
            let price = path_price(&inst, &flow, k, flow.path(k).unwrap()).unwrap();
            prop_assert!(close(revenue, price), "{revenue} vs {price}");
            sum += revenue;
        }
        prop_assert!(close(sum, total_price(&inst, &flow).unwrap()));
    }

    #[test]
    fn loads_count_paths(seed in any::<u64>()) {
        let inst = random_instance(seed, &SamplingLaw::default());
        let flow = random_flow(&inst, seed);
        for e in 0..inst.num_edges() {
            let by_hand = flow.assignments().iter().flatten().filter(|p| p.edges.contains(&e)).count();
            prop_assert_eq!(flow.edge_load(e).unwrap() as usize, by_hand);
        }
    }

    #[test]
    fn distance_vector_matches_oracle((n, edges, weights) in graph_strategy(), source in 0usize..12) {
        let source = source % n;
        let topo = Topology::new(n, edges.iter().map(|&(a, b)| Edge::new(a, b)).collect()).unwrap();
        let (state, log) = run_distance_vector(&topo, &weights, source, n).unwrap();
        for dest in 0..n {
            match shortest_path_oracle(&topo, &weights, source, dest) {
                Ok((d, _)) => {
                    prop_assert_eq!(state.distance_to(dest), d);
                    let p = extract_path(&state, dest).unwrap();
                    p.validate(&topo, source, dest).unwrap();
                    prop_assert_eq!(path_weight(&weights, &p), d);
                }
                Err(_) => prop_assert!(state.distance_to(dest).is_infinite()),
            }
        }
        for m in &log.messages {
            prop_assert_eq!(topo.edge(m.edge).unwrap().other(m.sender), Some(m.receiver));
        }
    }

    #[test]
    fn game_moves_lower_cost_and_end_at_equilibrium(seed in any::<u64>()) {
        let inst = random_instance(seed, &SamplingLaw::default());
        let (flow, _, moves) = run_to_equilibrium(&inst).unwrap();
        for m in moves.iter().filter(|m| m.old_path.is_some()) {
            prop_assert!(m.cost_after < m.cost_before);
        }
        prop_assert!(is_nash(&inst, &flow).unwrap());
        let mut circles: Vec<usize> = moves.iter().map(|m| m.circle).collect();
        circles.dedup();
        if let Ok(bound) = convergence_bound(&inst, DEFAULT_CAP) {
            prop_assert!(circles.len() as u64 <= bound);
        }
    }

    #[test]
    fn poa_between_one_and_closed_form_bound(seed in any::<u64>()) {
        let inst = random_instance(seed, &SamplingLaw::default());
        let (flow, _, _) = run_to_equilibrium(&inst).unwrap();
        let poa = price_of_anarchy(&inst, &flow, DEFAULT_CAP).unwrap();
        prop_assert!(poa >= 1.0 - 1e-12);
        prop_assert!(poa <= poa_upper_bound(&inst).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn exact_store_reproduces_known_game(seed in any::<u64>()) {
        let inst = random_instance(seed, &SamplingLaw::default());
        let store = SampleStore::exact(&inst);
        let mut known = GameState::new(&inst);
        let mut learned = GameState::new(&inst);
        for _ in 0..6 {
            known.run_circle(&PriceView::Exact).unwrap();
            learned.run_circle(&PriceView::Estimated(&store)).unwrap();
        }
        prop_assert_eq!(known.moves(), learned.moves());
        prop_assert_eq!(known.flow(), learned.flow());
    }

    #[test]
    fn estimated_prices_are_never_negative(
        seed in any::<u64>(),
        obs in proptest::collection::vec((0usize..16, 1u32..4, -5.0f64..5.0), 0..60),
    ) {
        let inst = random_instance(seed, &SamplingLaw::default());
        let mut store = SampleStore::new(&inst);
        for (e, l, x) in obs {
            let _ = store.observe(e % inst.num_edges(), l, x);
        }
        for e in 0..inst.num_edges() {
            for f in 1..=inst.max_load() {
                prop_assert!(estimated_edge_price(&store, e, f, 1) >= 0.0);
            }
        }
        let loads = vec![0; inst.num_edges()];
        prop_assert!(insertion_weights(&inst, &PriceView::Estimated(&store), &loads).unwrap().iter().all(|&w| w >= 0.0));
    }

    #[test]
    fn running_mean_matches_stored_sum(values in proptest::collection::vec(-100.0f64..100.0, 1..200)) {
        let inst = random_instance(1, &SamplingLaw::default());
        let mut store = SampleStore::new(&inst);
        for &v in &values {
            store.observe(0, 1, v).unwrap();
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        prop_assert_eq!(store.count(0, 1), values.len() as u64);
        prop_assert!((store.mean(0, 1) - mean).abs() <= 1e-9 * mean.abs().max(1.0));
    }

    #[test]
    fn schedule_is_well_formed(g in 0.2f64..60.0, n in 1u32..8, k in 1u32..5, extra in 0u64..20_000) {
        let horizon = n as u64 * (k as u64 + 1) + extra;
        let s = build_schedule(g, n, k, horizon).unwrap();
        prop_assert_eq!(s.periods[0].kind, SlotKind::Explore);
        let mut t = 1;
        let mut card = 0u64;
        let mut source = 0;
        for (i, p) in s.periods.iter().enumerate() {
            prop_assert_eq!(p.start, t);
            prop_assert!(p.len > 0);
            let last = p.end() == horizon;
            match p.kind {
                SlotKind::Explore => {
                    prop_assert!(p.len == n as u64 || last);
                    prop_assert_eq!(p.tag, source);
                    if i > 0 {
                        prop_assert!((card as f64) < g * (t as f64).ln());
                    }
                    source = (source + 1) % k;
                    card += p.len;
                }
                SlotKind::BellmanFord => {
                    prop_assert!(p.len == n as u64 * k as u64 || last);
                    prop_assert!((card as f64) >= g * (t as f64).ln());
                }
                SlotKind::Exploit => {
                    prop_assert_eq!(s.periods[i - 1].kind, SlotKind::BellmanFord);
                    for u in [p.start, p.end()] {
                        prop_assert!((card as f64) >= g * (u as f64).ln());
                    }
                }
            }
            t += p.len;
        }
        prop_assert_eq!(t, horizon + 1);
        prop_assert_eq!(s.counts().explore, card);
        prop_assert_eq!(s, build_schedule(g, n, k, horizon).unwrap());
    }

    #[test]
    fn noise_stays_in_its_support(w in 0.0f64..3.0, seed in any::<u64>()) {
        let topo = Topology::new(2, vec![Edge::new(0, 1)]).unwrap();
        for noise in [NoiseSpec::uniform(w), NoiseSpec::two_point(w)] {
            let m = flowsched_core::EdgeCostModel::new(vec![1.0, 0.5, 0.0], noise);
            let inst = Instance::new(
                vec![],
                topo.clone(),
                vec![m.clone()],
                vec![flowsched_core::Commodity { source: 0, dest: 1 }; 2],
                seed,
            )
            .unwrap();
            let mut rng = substream(seed, "prop/noise", 0);
            for load in 1..=2u32 {
                let x = m.sample(load, &mut rng);
                let mean = inst.expected_edge_cost(0, load as i64).unwrap();
                prop_assert!((x - mean).abs() <= w + 1e-12);
            }
        }
    }
}
