//! Deadlock and safety verification.
//!
//! [`verify`] first tries the cheap pre-check: if no element of the product
//! of component invariants satisfies the deadlock predicate, the system is
//! deadlock-free. Otherwise exhaustive reachability decides, and every
//! deadlock found comes with a shortest, replayable witness.

mod explore;
mod invariant;

use std::collections::HashSet;

use serde_json::{json, Map, Value as Json};
use thiserror::Error;

use crate::engine::{self, EngineError, Status, Trace};
use crate::model::{Enabled, GlobalState, SlotExpr, SystemModel};

pub use explore::{explore, explore_with, relevant_vars, Codec, Edge, Exploration, StateGraph};
pub use invariant::{
    component_invariant, component_invariants, compute_dis, offered_expr, precheck,
    ComponentInvariant, DeadlockPredicate, DisTerm, PrecheckLimits, PrecheckResult, Target,
};

pub const DEFAULT_BOUND: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("`{var}` influences a guard but has no declared range")]
    Unranged { var: String },
    #[error("range of `{var}` is too wide to enumerate")]
    RangeTooWide { var: String },
    #[error("evaluation failed: {0}")]
    Eval(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Precheck,
    Exhaustive,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Precheck => "precheck",
            Method::Exhaustive => "exhaustive",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reason {
    BoundExceeded,
    Cap,
}

/// A path from the initial state to a deadlock or to a bad state.
#[derive(Clone, Debug)]
pub struct Witness {
    pub path: Vec<Enabled>,
    pub trace: Trace,
    pub terminal: GlobalState,
    pub summary: String,
}

#[derive(Clone, Debug)]
pub enum Verdict {
    DeadlockFree { method: Method, states: usize },
    Deadlocked {
        witnesses: Vec<Witness>,
        /// Number of deadlock states found; `witnesses` may hold fewer.
        total: usize,
        states: usize,
    },
    Holds { method: Method, states: usize },
    Violated { witnesses: Vec<Witness>, states: usize },
    Inconclusive {
        candidates: Vec<GlobalState>,
        reason: Reason,
        states: usize,
    },
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::DeadlockFree { .. } => "deadlock-free",
            Verdict::Deadlocked { .. } => "deadlocked",
            Verdict::Holds { .. } => "holds",
            Verdict::Violated { .. } => "violated",
            Verdict::Inconclusive { .. } => "inconclusive",
        }
    }

    pub fn witnesses(&self) -> &[Witness] {
        match self {
            Verdict::Deadlocked { witnesses, .. } | Verdict::Violated { witnesses, .. } => witnesses,
            _ => &[],
        }
    }

    pub fn states(&self) -> usize {
        match self {
            Verdict::DeadlockFree { states, .. }
            | Verdict::Deadlocked { states, .. }
            | Verdict::Holds { states, .. }
            | Verdict::Violated { states, .. }
            | Verdict::Inconclusive { states, .. } => *states,
        }
    }

    /// JSON summary; `trace_files[i]` names the file holding witness `i`.
    pub fn to_json(&self, m: &SystemModel, trace_files: &[String]) -> Json {
        let method = match self {
            Verdict::DeadlockFree { method, .. } | Verdict::Holds { method, .. } => {
                Json::from(method.name())
            }
            Verdict::Deadlocked { .. } | Verdict::Violated { .. } => Json::from("exhaustive"),
            Verdict::Inconclusive { .. } => Json::Null,
        };
        let witnesses: Vec<Json> = self
            .witnesses()
            .iter()
            .enumerate()
            .map(|(i, w)| {
                json!({
                    "trace_file": trace_files.get(i),
                    "length": w.path.len(),
                    "terminal": terminal_json(m, &w.terminal),
                })
            })
            .collect();
        let mut out = json!({
            "verdict": self.name(),
            "method": method,
            "states": self.states(),
            "witnesses": witnesses,
        });
        match self {
            Verdict::Deadlocked { total, .. } => {
                out["deadlock_states"] = json!(total);
            }
            Verdict::Inconclusive {
                candidates, reason, ..
            } => {
                out["candidates"] = json!(candidates.len());
                out["reason"] = json!(match reason {
                    Reason::BoundExceeded => "bound-exceeded",
                    Reason::Cap => "cap",
                });
            }
            _ => {}
        }
        out
    }
}

/// `{inst: {loc, vars: {name: value}}}`.
pub fn terminal_json(m: &SystemModel, s: &GlobalState) -> Json {
    let mut obj = Map::new();
    for (i, inst) in m.instances.iter().enumerate() {
        let vars: Map<String, Json> = m
            .instance_vars(s, i)
            .map(|(n, v)| (n.to_owned(), serde_json::to_value(v).unwrap()))
            .collect();
        obj.insert(
            inst.name.clone(),
            json!({"loc": m.location_of(s, i), "vars": vars}),
        );
    }
    Json::Object(obj)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Options {
    pub bound: usize,
    pub max_witnesses: usize,
    pub limits: PrecheckLimits,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            bound: DEFAULT_BOUND,
            max_witnesses: 8,
            limits: PrecheckLimits::default(),
        }
    }
}

fn witness(m: &SystemModel, g: &StateGraph, id: u32, status: Status) -> Result<Witness, VerifyError> {
    let path = g.path_to(id);
    let (trace, terminal) = engine::script(m, &path, status)?;
    Ok(Witness {
        summary: m.describe(&terminal),
        path,
        trace,
        terminal,
    })
}

/// Deadlocks of a complete exploration. Witnesses are shortest paths to
/// sinks with pairwise distinct control locations.
pub fn find_deadlocks(m: &SystemModel, opts: Options) -> Result<Verdict, VerifyError> {
    let g = explore(m, opts.bound)?;
    deadlocks_of(m, &g, opts.max_witnesses)
}

pub fn deadlocks_of(m: &SystemModel, g: &StateGraph, max_witnesses: usize) -> Result<Verdict, VerifyError> {
    if g.status == Exploration::Truncated {
        return Ok(Verdict::Inconclusive {
            candidates: Vec::new(),
            reason: Reason::BoundExceeded,
            states: g.len(),
        });
    }
    let sinks = g.sinks();
    if sinks.is_empty() {
        return Ok(Verdict::DeadlockFree {
            method: Method::Exhaustive,
            states: g.len(),
        });
    }
    // One witness per distinct location vector, shortest first.
    let mut shapes = HashSet::new();
    let witnesses = sinks
        .iter()
        .filter(|&&id| shapes.insert(g.state(id).locs))
        .take(max_witnesses.max(1))
        .map(|&id| witness(m, g, id, Status::Deadlock))
        .collect::<Result<_, _>>()?;
    Ok(Verdict::Deadlocked {
        witnesses,
        total: sinks.len(),
        states: g.len(),
    })
}

/// Deadlock pre-check alone.
pub fn precheck_deadlock(m: &SystemModel, limits: PrecheckLimits) -> Result<PrecheckResult, VerifyError> {
    let codec = Codec::new(m, &[])?;
    let cis = component_invariants(m, &codec)?;
    let dis = compute_dis(m);
    Ok(precheck(m, &cis, Target::Deadlock(&dis), limits))
}

/// Pre-check, then exhaustive exploration if the pre-check is inconclusive.
pub fn verify(m: &SystemModel, opts: Options) -> Result<Verdict, VerifyError> {
    match precheck_deadlock(m, opts.limits)? {
        PrecheckResult::Unsat => Ok(Verdict::DeadlockFree {
            method: Method::Precheck,
            states: 0,
        }),
        PrecheckResult::Candidates { states, .. } => {
            let v = find_deadlocks(m, opts)?;
            Ok(match v {
                Verdict::Inconclusive { reason, states: n, .. } => Verdict::Inconclusive {
                    candidates: states,
                    reason,
                    states: n,
                },
                other => other,
            })
        }
    }
}

/// Searches for a reachable state satisfying `bad`.
pub fn check_safety(m: &SystemModel, bad: &SlotExpr, opts: Options) -> Result<Verdict, VerifyError> {
    let g = explore_with(m, opts.bound, &[bad], |s| {
        engine::holds(bad, s).map_err(VerifyError::from)
    })?;
    Ok(match g.status {
        Exploration::Found(id) => Verdict::Violated {
            witnesses: vec![witness(m, &g, id, Status::ExternalStop)?],
            states: g.len(),
        },
        Exploration::Complete => Verdict::Holds {
            method: Method::Exhaustive,
            states: g.len(),
        },
        Exploration::Truncated => Verdict::Inconclusive {
            candidates: Vec::new(),
            reason: Reason::BoundExceeded,
            states: g.len(),
        },
    })
}

/// Resolves a root-level property such as `battery.FIDS.totalPwr > 10` or
/// `ndd.GoTo@abrt` against flattened names.
pub fn resolve_property(m: &SystemModel, e: &crate::model::Expr) -> Result<SlotExpr, String> {
    e.try_map(
        &mut |p: &crate::model::Path| {
            m.slot_of(&p.to_string())
                .ok_or_else(|| format!("unknown variable `{p}`"))
        },
        &mut |l: &crate::model::LocPath| {
            let i = m
                .instance_index(&l.instance.to_string())
                .ok_or_else(|| format!("unknown instance `{}`", l.instance))?;
            let loc = m.instances[i]
                .component
                .location_index(&l.location)
                .ok_or_else(|| format!("unknown location `{l}`"))?;
            Ok(crate::model::InstLoc {
                instance: i,
                location: loc,
            })
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::component::tests::reactive;
    use crate::model::{
        flatten_compound, AtomicComponent, CompoundComponent, Connector, Instance, QPort, Transition,
    };

    fn reactive_sys() -> SystemModel {
        let c = CompoundComponent::new("Top")
            .instance(Instance::new("r", reactive()))
            .connector(Connector::rendezvous("cin", [QPort::new("r", "in")]))
            .connector(Connector::rendezvous("cout", [QPort::new("r", "out")]));
        flatten_compound(&c).unwrap()
    }

    #[test]
    fn reactive_has_two_states() {
        let m = reactive_sys();
        let g = explore(&m, 100).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.status, Exploration::Complete);
        assert!(g.sinks().is_empty());
    }

    #[test]
    fn lone_atomic_is_one_sink() {
        let c = CompoundComponent::new("Top").instance(Instance::new("k", AtomicComponent::new("K", "s")));
        let m = flatten_compound(&c).unwrap();
        let g = explore(&m, 10).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.sinks(), vec![0]);
        let v = verify(&m, Options::default()).unwrap();
        let Verdict::Deadlocked { witnesses, .. } = v else { panic!("{v:?}") };
        assert!(witnesses[0].path.is_empty());
    }

    #[test]
    fn self_loop_is_free_by_precheck() {
        let a = AtomicComponent::new("L", "s")
            .port("p")
            .transition(Transition::new("s", "p", "s"));
        let c = CompoundComponent::new("Top")
            .instance(Instance::new("l", a))
            .connector(Connector::rendezvous("loop", [QPort::new("l", "p")]));
        let m = flatten_compound(&c).unwrap();
        let v = verify(&m, Options::default()).unwrap();
        assert!(matches!(v, Verdict::DeadlockFree { method: Method::Precheck, .. }), "{v:?}");
    }

    #[test]
    fn reactive_invariant_matches_hand_enumeration() {
        let m = reactive_sys();
        let codec = Codec::new(&m, &[]).unwrap();
        let ci = component_invariant(&m, &codec, 0).unwrap();
        // y is unranged and never read by a guard, so only x is tracked.
        assert_eq!(ci.locations().len(), 2);
        assert_eq!(ci.elements.len(), 2);

        let mut ranged = reactive();
        ranged.variables[1].range = Some((0, 6));
        let c = CompoundComponent::new("Top")
            .instance(Instance::new("r", ranged))
            .connector(Connector::rendezvous("cin", [QPort::new("r", "in")]))
            .connector(Connector::rendezvous("cout", [QPort::new("r", "out")]));
        let m = flatten_compound(&c).unwrap();
        let codec = Codec::new(&m, &[]).unwrap();
        let ci = component_invariant(&m, &codec, 0).unwrap();
        // (empty, y=0), (full, y=2), (empty, y=2)
        assert_eq!(ci.elements.len(), 3);
        assert_eq!(explore(&m, 100).unwrap().len(), 3);
    }

    #[test]
    fn bad_false_holds() {
        let m = reactive_sys();
        let v = check_safety(&m, &SlotExpr::Const(crate::model::Value::Bool(false)), Options::default()).unwrap();
        assert!(matches!(v, Verdict::Holds { .. }));
    }
}
