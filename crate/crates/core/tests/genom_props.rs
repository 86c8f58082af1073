use bipk::engine::{self, Engine, SelectionPolicy};
use bipk::fixtures::random_state;
use bipk::genom::{build_dala_mini, build_system, ConstraintSpec, ModuleSpec, ServiceRef, SyncMode, Variant};
use bipk::verifier::{explore, Exploration};
use bipk::{flatten, GlobalState, SystemModel, Value};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn flat(c: bipk::CompoundComponent) -> SystemModel {
    flatten(&c.into()).unwrap()
}

fn loc<'a>(m: &'a SystemModel, s: &GlobalState, i: usize) -> &'a str {
    &m.instances[i].component.locations[s.locs[i]]
}

fn instances_of<'a>(m: &'a SystemModel, pred: impl Fn(&str) -> bool + 'a) -> impl Iterator<Item = usize> + 'a {
    (0..m.instances.len()).filter(move |&i| pred(&m.instances[i].component.name))
}

/// Audits every reachable state of `m` for the controller and message box
/// invariants.
fn audit_reachable(m: &SystemModel) {
    let g = explore(m, 1_000_000).unwrap();
    assert_eq!(g.status, Exploration::Complete);
    let controllers: Vec<usize> = instances_of(m, |n| n == "ServiceController").collect();
    let boxes: Vec<usize> = instances_of(m, |n| n.ends_with("MessageBox")).collect();
    assert!(!controllers.is_empty() && !boxes.is_empty());
    for id in 0..g.len() as u32 {
        let s = g.state(id);
        for &c in &controllers {
            if loc(m, &s, c) == "ethr" {
                let active = m.value_of(&s, &format!("{}.active", m.instances[c].name));
                assert_eq!(active, Some(Value::Bool(false)), "{}", m.describe(&s));
            }
        }
        let busy = boxes
            .iter()
            .filter(|&&b| matches!(loc(m, &s, b), "chk" | "abtI" | "give"))
            .count();
        assert!(busy <= 1, "{}", m.describe(&s));
    }
}

#[test]
fn idle_controllers_are_inactive_and_requests_are_exclusive() {
    audit_reachable(&flat(build_dala_mini(Variant::Fig11Fixed)));
    audit_reachable(&flat(build_dala_mini(Variant::Fig12Fixed)));
}

fn with_before() -> SystemModel {
    let spec = ModuleSpec::new("M").exec("A", &[], false).exec("B", &[], false);
    let before = ConstraintSpec::Before {
        prereqs: vec![ServiceRef::new("m", "A")],
        target: ServiceRef::new("m", "B"),
        report: "TOO_EARLY".into(),
    };
    flat(build_system("Pair", &[spec], &[before], SyncMode::OptionalInterface).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn abort_dominates_service_progress(v in prop::sample::select(Variant::ALL.to_vec()), state_seed in any::<u64>()) {
        let m = flat(build_dala_mini(v));
        let controllers: Vec<String> = instances_of(&m, |n| n == "ServiceController")
            .map(|i| m.instances[i].name.clone())
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(state_seed);
        for _ in 0..100 {
            let s = random_state(&m, &mut rng);
            let ports: Vec<Vec<String>> = engine::maximal_enabled(&m, &s)
                .unwrap()
                .into_iter()
                .map(|e| m.interaction_names(e))
                .collect();
            for c in &controllers {
                let abt = format!("{c}.abt");
                if ports.iter().any(|p| p.contains(&abt)) {
                    for low in ["start", "exec", "fin", "stat"] {
                        let low = format!("{c}.{low}");
                        prop_assert!(!ports.iter().any(|p| p.contains(&low)), "{low} beside {abt}");
                    }
                }
            }
        }
    }

    #[test]
    fn before_waits_for_prerequisite(run_seed in any::<u64>()) {
        let m = with_before();
        let (t, _) = Engine::new(&m, SelectionPolicy::SeededUniform(run_seed)).run(m.initial_state(), 800).unwrap();
        let mut a_done = false;
        let mut b_started = false;
        for ev in &t.events {
            a_done |= ev.interaction.iter().any(|p| p == "m.A.fin");
            if ev.interaction.iter().any(|p| p == "m.B.trig") {
                prop_assert!(a_done, "B triggered at step {} before A finished", ev.step);
                b_started = true;
            }
        }
        if !a_done {
            prop_assert!(!b_started);
        }
    }
}

#[test]
fn before_target_is_reachable_after_prerequisite() {
    let m = with_before();
    let g = explore(&m, 1_000_000).unwrap();
    let b = m.slot_of("m.B.done").unwrap();
    assert!((0..g.len() as u32).any(|id| g.state(id).vals[b] == Value::Bool(true)));
}
