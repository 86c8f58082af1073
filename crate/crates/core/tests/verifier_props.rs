use std::collections::{HashSet, VecDeque};

use bipk::dsl;
use bipk::engine;
use bipk::fixtures::{random_state, random_system};
use bipk::verifier::{
    self, check_safety, compute_dis, component_invariants, explore, find_deadlocks, precheck_deadlock, Codec,
    Exploration, Options, PrecheckResult, Verdict,
};
use bipk::{flatten, GlobalState, SystemModel};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn flat(seed: u64) -> SystemModel {
    flatten(&random_system(seed).into()).unwrap()
}

/// Plain breadth-first search over full states. Returns reachable states
/// and those without a successor.
fn oracle(m: &SystemModel) -> (Vec<GlobalState>, Vec<GlobalState>) {
    let mut seen = HashSet::new();
    let mut order = Vec::new();
    let mut sinks = Vec::new();
    let mut queue = VecDeque::from([m.initial_state()]);
    seen.insert(m.initial_state());
    while let Some(s) = queue.pop_front() {
        let en = m.enabled_interactions(&s).unwrap();
        let max = m.apply_priorities(&en, &s).unwrap();
        if max.is_empty() {
            sinks.push(s.clone());
        }
        for e in max {
            let next = engine::fire(m, &s, e).unwrap();
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
        order.push(s);
    }
    (order, sinks)
}

fn keys(codec: &Codec, states: &[GlobalState]) -> HashSet<Box<[u16]>> {
    states.iter().map(|s| codec.encode(s)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exploration_matches_oracle(seed in 0u64..500) {
        let m = flat(seed);
        let codec = Codec::new(&m, &[]).unwrap();
        let (reach, sinks) = oracle(&m);
        let g = explore(&m, 1_000_000).unwrap();
        prop_assert_eq!(g.status, Exploration::Complete);
        let got: Vec<GlobalState> = (0..g.len() as u32).map(|id| g.state(id)).collect();
        prop_assert_eq!(keys(&codec, &got), keys(&codec, &reach));
        let got_sinks: Vec<GlobalState> = g.sinks().into_iter().map(|id| g.state(id)).collect();
        prop_assert_eq!(keys(&codec, &got_sinks), keys(&codec, &sinks));
    }

    #[test]
    fn exploration_is_deterministic(seed in 0u64..500) {
        let m = flat(seed);
        let a = explore(&m, 1_000_000).unwrap();
        let b = explore(&m, 1_000_000).unwrap();
        let order = |g: &verifier::StateGraph| (0..g.len() as u32).map(|id| g.state(id)).collect::<Vec<_>>();
        prop_assert_eq!(order(&a), order(&b));
    }

    #[test]
    fn deadlock_witnesses_replay(seed in 0u64..500) {
        let m = flat(seed);
        let v = find_deadlocks(&m, Options { max_witnesses: 4, ..Options::default() }).unwrap();
        for w in v.witnesses() {
            let end = engine::replay(&m, &w.trace).unwrap();
            prop_assert_eq!(&end, &w.terminal);
            prop_assert!(m.enabled_interactions(&end).unwrap().is_empty());
            prop_assert_eq!(w.trace.events.len(), w.path.len());
        }
        let has_sink = !oracle(&m).1.is_empty();
        prop_assert_eq!(matches!(v, Verdict::Deadlocked { .. }), has_sink);
    }

    #[test]
    fn precheck_unsat_is_sound(seed in 0u64..500) {
        let m = flat(seed);
        if let PrecheckResult::Unsat = precheck_deadlock(&m, Default::default()).unwrap() {
            prop_assert!(oracle(&m).1.is_empty());
        }
    }

    #[test]
    fn reachable_states_lie_in_component_invariants(seed in 0u64..500) {
        let m = flat(seed);
        let codec = Codec::new(&m, &[]).unwrap();
        let cis = component_invariants(&m, &codec).unwrap();
        for s in oracle(&m).0 {
            for ci in &cis {
                prop_assert!(ci.contains(&s), "{} outside invariant of {}", m.describe(&s), m.instances[ci.instance].name);
            }
        }
    }

    #[test]
    fn dis_agrees_with_enabledness(seed in 0u64..500, state_seed in any::<u64>()) {
        let m = flat(seed);
        let dis = compute_dis(&m);
        let mut rng = ChaCha8Rng::seed_from_u64(state_seed);
        for _ in 0..50 {
            let s = random_state(&m, &mut rng);
            prop_assert_eq!(dis.holds(&m, &s).unwrap(), m.enabled_interactions(&s).unwrap().is_empty());
        }
    }

    #[test]
    fn safety_matches_reachability(seed in 0u64..500) {
        let m = flat(seed);
        let c0 = &m.instances[0];
        let last = c0.component.locations.len() - 1;
        let text = format!("{}@{}", c0.name, c0.component.locations[last]);
        let bad = verifier::resolve_property(&m, &dsl::parse_expr(&text).unwrap()).unwrap();
        let v = check_safety(&m, &bad, Options::default()).unwrap();
        let reachable = oracle(&m).0.iter().any(|s| s.locs[0] == last);
        prop_assert_eq!(v.name(), if reachable { "violated" } else { "holds" });
        for w in v.witnesses() {
            let end = engine::replay(&m, &w.trace).unwrap();
            prop_assert!(engine::holds(&bad, &end).unwrap());
        }
    }
}

#[test]
fn bound_below_state_count_is_inconclusive() {
    let m = flat(7);
    let n = oracle(&m).0.len();
    if n > 1 {
        let v = find_deadlocks(&m, Options { bound: n - 1, ..Options::default() }).unwrap();
        assert_eq!(v.name(), "inconclusive");
    }
    let v = find_deadlocks(&m, Options { bound: n, ..Options::default() }).unwrap();
    assert_ne!(v.name(), "inconclusive");
}
