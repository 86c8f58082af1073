//! Small reference models and seeded random systems, shared by tests and
//! benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{
    AtomicComponent, BinOp, Clause, CompoundComponent, Connector, Expr, GlobalState, Instance,
    Path, Pattern, QPort, SystemModel, Transition, Type, Value, VarDecl,
};

/// Two-location buffer: `in` is accepted while `0 < x` and sets
/// `y := x * 2`; `out` empties it.
pub fn reactive() -> AtomicComponent {
    let x = || Expr::Var(Path::single("x"));
    AtomicComponent::new("Reactive", "empty")
        .ports(["in", "out"])
        .var(VarDecl::ranged("x", 1, 0, 3))
        .var(VarDecl::int("y", 0))
        .transition(
            Transition::new("empty", "in", "full")
                .guard(Expr::bin(BinOp::Lt, Expr::int(0), x()))
                .assign("y", Expr::bin(BinOp::Mul, x(), Expr::int(2))),
        )
        .transition(Transition::new("full", "out", "empty"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThreePort {
    Unrestricted,
    Rendezvous,
    /// `c1.p1` triggers.
    Broadcast,
}

/// A connector over `c1.p1`, `c2.p2`, `c3.p3`.
pub fn three_port_connector(kind: ThreePort) -> Connector {
    let ports = (1..=3).map(|i| QPort::new(&format!("c{i}"), &format!("p{i}")));
    match kind {
        ThreePort::Unrestricted => Connector::unrestricted("conn", ports),
        ThreePort::Rendezvous => Connector::rendezvous("conn", ports),
        ThreePort::Broadcast => {
            let mut ps: Vec<QPort> = ports.collect();
            let rest = ps.split_off(1);
            Connector::broadcast("conn", ps, rest)
        }
    }
}

/// The connector wired to three one-port, one-location atoms.
pub fn three_port_system(kind: ThreePort) -> CompoundComponent {
    (1..=3)
        .fold(CompoundComponent::new("Three"), |c, i| {
            let p = format!("p{i}");
            let a = AtomicComponent::new(&format!("C{i}"), "s")
                .port(&p)
                .transition(Transition::new("s", &p, "s"));
            c.instance(Instance::new(&format!("c{i}"), a))
        })
        .connector(three_port_connector(kind))
}

/// A random system of two to four atoms with up to three locations and
/// ports each, a bounded counter in some of them, and one to four
/// connectors of mixed kinds. Each `(location, port)` pair has at most one
/// transition, so every system is deterministic per port.
pub fn random_system(seed: u64) -> CompoundComponent {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=4);
    let x = || Expr::Var(Path::single("x"));
    let mut root = CompoundComponent::new("Random");
    let mut shape = Vec::new();
    for i in 0..n {
        let locs: Vec<String> = (0..rng.gen_range(1..=3)).map(|l| format!("l{l}")).collect();
        let ports: Vec<String> = (0..rng.gen_range(1..=3)).map(|p| format!("p{p}")).collect();
        let counter = rng.gen_bool(0.5);
        let mut a = AtomicComponent::new(&format!("A{i}"), "l0").ports(ports.iter().map(String::as_str));
        for l in &locs {
            a = a.location(l);
        }
        if counter {
            a = a.var(VarDecl::ranged("x", 0, 0, 2));
        }
        for l in &locs {
            for p in &ports {
                if !rng.gen_bool(0.6) {
                    continue;
                }
                let mut t = Transition::new(l, p, &locs[rng.gen_range(0..locs.len())]);
                if counter {
                    match rng.gen_range(0..3) {
                        0 => {
                            t = t
                                .guard(Expr::bin(BinOp::Lt, x(), Expr::int(2)))
                                .assign("x", Expr::bin(BinOp::Add, x(), Expr::int(1)))
                        }
                        1 => t = t.assign("x", Expr::int(0)),
                        _ => {}
                    }
                }
                a = a.transition(t);
            }
        }
        root = root.instance(Instance::new(&format!("c{i}"), a));
        shape.push((ports.len(), counter));
    }
    let m = rng.gen_range(1..=4);
    for k in 0..m {
        let mut insts: Vec<usize> = (0..n).collect();
        let size = rng.gen_range(1..=n.min(3));
        for j in 0..size {
            let r = rng.gen_range(j..n);
            insts.swap(j, r);
        }
        insts.truncate(size);
        let ports: Vec<QPort> = insts
            .iter()
            .map(|&i| QPort::new(&format!("c{i}"), &format!("p{}", rng.gen_range(0..shape[i].0))))
            .collect();
        let name = format!("k{k}");
        let c = match rng.gen_range(0..3) {
            0 => {
                let c = Connector::rendezvous(&name, ports.clone());
                match insts.iter().find(|&&i| shape[i].1) {
                    Some(&i) if rng.gen_bool(0.4) => c.clause(Clause::new(ports).guard(Expr::bin(
                        BinOp::Ne,
                        Expr::Var(Path::parse(&format!("c{i}.x"))),
                        Expr::int(1),
                    ))),
                    _ => c,
                }
            }
            1 => {
                let mut ps = ports;
                let rest = ps.split_off(1);
                Connector::broadcast(&name, ps, rest)
            }
            _ => Connector::unrestricted(&name, ports),
        };
        root = root.connector(c);
    }
    if m >= 2 && rng.gen_bool(0.3) {
        root = root.priority("r0", Pattern::Connector("k0".into()), Pattern::Connector("k1".into()));
    }
    root
}

/// A uniformly drawn valuation: any location per instance, any in-range
/// value per variable. Unranged integers and symbols keep their initial
/// value.
pub fn random_state(m: &SystemModel, rng: &mut impl Rng) -> GlobalState {
    let mut s = m.initial_state();
    for (i, inst) in m.instances.iter().enumerate() {
        s.locs[i] = rng.gen_range(0..inst.component.locations.len());
    }
    for (slot, v) in m.vars.iter().enumerate() {
        s.vals[slot] = match (v.ty, v.range) {
            (Type::Int, Some((lo, hi))) => Value::Int(rng.gen_range(lo..=hi)),
            (Type::Bool, _) => Value::Bool(rng.gen_bool(0.5)),
            _ => s.vals[slot],
        };
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flatten;

    #[test]
    fn three_port_counts() {
        assert_eq!(three_port_connector(ThreePort::Unrestricted).feasible_interactions().len(), 7);
        assert_eq!(three_port_connector(ThreePort::Rendezvous).feasible_interactions().len(), 1);
        assert_eq!(three_port_connector(ThreePort::Broadcast).feasible_interactions().len(), 4);
    }

    #[test]
    fn random_systems_flatten() {
        for seed in 0..200 {
            let c = random_system(seed);
            flatten(&c.clone().into()).unwrap_or_else(|e| panic!("seed {seed}: {e:?}"));
            assert_eq!(c, random_system(seed));
        }
    }
}
