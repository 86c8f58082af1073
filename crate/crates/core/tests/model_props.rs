use std::collections::BTreeSet;
use std::sync::Arc;

use bipk::dsl::{self, SourceModel};
use bipk::fixtures::{random_state, random_system, three_port_system, ThreePort};
use bipk::verifier::{compute_dis, explore};
use bipk::{
    flatten, ComponentRef, CompoundComponent, Connector, Instance, QPort, StateEnv, SystemModel,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Sets = BTreeSet<BTreeSet<String>>;

fn feasible_sets(c: &Connector) -> Sets {
    c.feasible_interactions()
        .iter()
        .map(|i| i.0.iter().map(ToString::to_string).collect())
        .collect()
}

fn flat(c: &CompoundComponent) -> SystemModel {
    flatten(&c.clone().into()).unwrap()
}

proptest! {
    #[test]
    fn feasible_interactions_match_subset_enumeration(n in 1usize..=6, triggers in any::<u8>()) {
        let ports: Vec<QPort> = (0..n).map(|i| QPort::new(&format!("c{i}"), "p")).collect();
        let is_trig = |i: usize| triggers & (1 << i) != 0;
        let c = Connector::broadcast(
            "k",
            (0..n).filter(|&i| is_trig(i)).map(|i| ports[i].clone()),
            (0..n).filter(|&i| !is_trig(i)).map(|i| ports[i].clone()),
        );
        let any_trig = (0..n).any(is_trig);
        let full = (1u32 << n) - 1;
        let expected: Sets = (1..=full)
            .filter(|&m| if any_trig { (0..n).any(|i| m & (1 << i) != 0 && is_trig(i)) } else { m == full })
            .map(|m| (0..n).filter(|i| m & (1 << i) != 0).map(|i| ports[i].to_string()).collect())
            .collect();
        prop_assert_eq!(feasible_sets(&c), expected);
    }

    #[test]
    fn enabled_interactions_are_feasible(seed in 0u64..400, state_seed in any::<u64>()) {
        let root = random_system(seed);
        let m = flat(&root);
        let mut rng = ChaCha8Rng::seed_from_u64(state_seed);
        for _ in 0..20 {
            let s = random_state(&m, &mut rng);
            for e in m.enabled_interactions(&s).unwrap() {
                let name = &m.connectors[e.connector].name;
                let c = root.find_connector(name).expect("root connector");
                let got: BTreeSet<String> = m.interaction_names(e).into_iter().collect();
                prop_assert!(feasible_sets(c).contains(&got), "{name}: {got:?}");
            }
        }
    }

    #[test]
    fn priority_filter_is_idempotent_and_keeps_a_maximal_entry(seed in 0u64..400, state_seed in any::<u64>()) {
        let m = flat(&random_system(seed));
        let mut rng = ChaCha8Rng::seed_from_u64(state_seed);
        for _ in 0..20 {
            let s = random_state(&m, &mut rng);
            let en = m.enabled_interactions(&s).unwrap();
            let once = m.apply_priorities(&en, &s).unwrap();
            prop_assert_eq!(&m.apply_priorities(&once, &s).unwrap(), &once);
            prop_assert_eq!(en.is_empty(), once.is_empty());
            prop_assert!(once.iter().all(|e| en.contains(e)));
        }
    }

    #[test]
    fn evaluation_is_pure(seed in 0u64..400, state_seed in any::<u64>()) {
        let m = flat(&random_system(seed));
        let dis = compute_dis(&m).to_expr(&m);
        let mut rng = ChaCha8Rng::seed_from_u64(state_seed);
        let s = random_state(&m, &mut rng);
        prop_assert_eq!(dis.eval(&StateEnv(&s)), dis.eval(&StateEnv(&s)));
    }

    #[test]
    fn random_models_round_trip(seed in 0u64..400) {
        let src = SourceModel::from_root(&random_system(seed).into()).unwrap();
        let text = dsl::print(&src);
        let back = dsl::parse(&text).map_err(|d| TestCaseError::fail(format!("{d:?}\n{text}")))?;
        prop_assert_eq!(&back.atomics, &src.atomics);
        prop_assert_eq!(&back.compounds, &src.compounds);
    }
}

/// `(connector, ports, target)` per state, with the `in.` prefix removed.
fn labelled_graph(m: &SystemModel) -> Vec<Vec<(String, Vec<String>, u32)>> {
    let strip = |s: &str| s.strip_prefix("in.").unwrap_or(s).to_owned();
    let g = explore(m, 100_000).unwrap();
    (0..g.len() as u32)
        .map(|id| {
            g.successors(id)
                .iter()
                .map(|e| {
                    let names = m.interaction_names(e.interaction).iter().map(|p| strip(p)).collect();
                    (strip(&m.connectors[e.interaction.connector].name), names, e.to)
                })
                .collect()
        })
        .collect()
}

/// Moves everything of `c` one level down, under instance `in`.
fn nest(c: &CompoundComponent) -> CompoundComponent {
    let mut inner = c.clone();
    inner.name = format!("{}Inner", c.name);
    CompoundComponent::new("Outer").instance(Instance::new("in", ComponentRef::Compound(Arc::new(inner))))
}

/// The three-port connector placed at the root over ports exported by a
/// nested compound.
fn exported_three_port(kind: ThreePort) -> (CompoundComponent, CompoundComponent) {
    let flat_version = three_port_system(kind);
    let mut inner = flat_version.clone();
    inner.name = "ThreeInner".into();
    let conn = inner.connectors.pop().unwrap();
    for i in 1..=3 {
        inner = inner.export(&format!("c{i}.p{i}"), QPort::new(&format!("c{i}"), &format!("p{i}")));
    }
    let mut outer_conn = conn;
    for p in &mut outer_conn.ports {
        p.port = QPort::new("in", &p.port.to_string());
    }
    let nested = CompoundComponent::new("Outer")
        .instance(Instance::new("in", ComponentRef::Compound(Arc::new(inner))))
        .connector(outer_conn);
    (flat_version, nested)
}

#[test]
fn flattening_preserves_behaviour() {
    for seed in [1, 5, 17, 42, 99] {
        let c = random_system(seed);
        assert_eq!(labelled_graph(&flat(&c)), labelled_graph(&flat(&nest(&c))), "seed {seed}");
    }
    for kind in [ThreePort::Unrestricted, ThreePort::Rendezvous, ThreePort::Broadcast] {
        let (a, b) = exported_three_port(kind);
        assert_eq!(labelled_graph(&flat(&a)), labelled_graph(&flat(&b)), "{kind:?}");
    }
}
