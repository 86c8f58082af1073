//! Two-phase execution: compute enabled interactions, filter by priority,
//! select one, run its data transfer, then fire each participant's
//! transition on its port.

mod trace;

use std::collections::{BTreeMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::system::eval_bool;
use crate::model::{Enabled, EvalError, GlobalState, SlotExpr, StateEnv, SystemModel, Value};

pub use trace::{model_hash, state_hash, Delta, Status, StepEvent, Trace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SelectionPolicy {
    SeededUniform(u64),
    FirstInCanonicalOrder,
}

impl SelectionPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            SelectionPolicy::SeededUniform(_) => "seeded-uniform",
            SelectionPolicy::FirstInCanonicalOrder => "first",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            SelectionPolicy::SeededUniform(s) => Some(*s),
            SelectionPolicy::FirstInCanonicalOrder => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("evaluating {context}: {error}")]
    Eval { context: String, error: EvalError },
    #[error("{instance}@{location}: {count} transitions enabled on port `{port}`")]
    Nondeterministic {
        instance: String,
        location: String,
        port: String,
        count: usize,
    },
    #[error("{instance}@{location}: no transition enabled on port `{port}`")]
    NotOffered {
        instance: String,
        location: String,
        port: String,
    },
    #[error("`{var}` := {value} leaves its declared range")]
    OutOfRange { var: String, value: Value },
    #[error("`{var}` := {value} has the wrong type")]
    WrongType { var: String, value: Value },
    #[error("trace was recorded against model {found}, not {expected}")]
    ModelMismatch { expected: String, found: String },
    #[error("replay diverges at step {step}: {reason}")]
    Divergence { step: usize, reason: String },
}

/// Result of one engine cycle.
#[derive(Clone, Debug, PartialEq)]
pub enum StepOutcome {
    Fired(StepEvent, GlobalState),
    Deadlock,
}

/// A run that stopped on an error, with the events recorded before it.
#[derive(Debug, Clone, Error)]
#[error("{error} (after {} steps)", trace.events.len())]
pub struct RunError {
    pub trace: Box<Trace>,
    pub error: EngineError,
}

fn eval_err(context: impl Into<String>) -> impl FnOnce(EvalError) -> EngineError {
    let context = context.into();
    move |error| EngineError::Eval { context, error }
}

fn store(m: &SystemModel, s: &mut GlobalState, slot: usize, v: Value) -> Result<(), EngineError> {
    let info = &m.vars[slot];
    if v.ty() != info.ty {
        return Err(EngineError::WrongType {
            var: info.name.clone(),
            value: v,
        });
    }
    if let (Some((lo, hi)), Value::Int(i)) = (info.range, v) {
        if i < lo || i > hi {
            return Err(EngineError::OutOfRange {
                var: info.name.clone(),
                value: v,
            });
        }
    }
    s.vals[slot] = v;
    Ok(())
}

fn eval(e: &SlotExpr, s: &GlobalState, context: impl FnOnce() -> String) -> Result<Value, EngineError> {
    e.eval(&StateEnv(s)).map_err(|error| EngineError::Eval {
        context: context(),
        error,
    })
}

/// Post-priority enabled interactions of `s`.
pub fn maximal_enabled(m: &SystemModel, s: &GlobalState) -> Result<Vec<Enabled>, EngineError> {
    let en = m
        .enabled_interactions(s)
        .map_err(eval_err("enabled interactions"))?;
    m.apply_priorities(&en, s)
        .map_err(eval_err("priority conditions"))
}

/// Executes interaction `e` from `s`: data transfer, then the participants'
/// transitions in instance order. Transition choice uses pre-state guards.
pub fn fire(m: &SystemModel, s: &GlobalState, e: Enabled) -> Result<GlobalState, EngineError> {
    let it = m.interaction(e);
    let mut chosen = Vec::with_capacity(it.ports.len());
    for p in &it.ports {
        let inst = &m.instances[p.instance];
        let ts = m
            .transitions_on(s, p.instance, p.port)
            .map_err(eval_err(format!("guards of {}", inst.name)))?;
        match ts.len() {
            1 => chosen.push((p.instance, ts[0])),
            0 => {
                return Err(EngineError::NotOffered {
                    instance: inst.name.clone(),
                    location: m.location_of(s, p.instance).into(),
                    port: inst.port_name(p.port).into(),
                })
            }
            n => {
                return Err(EngineError::Nondeterministic {
                    instance: inst.name.clone(),
                    location: m.location_of(s, p.instance).into(),
                    port: inst.port_name(p.port).into(),
                    count: n,
                })
            }
        }
    }
    let mut next = s.clone();
    let cname = &m.connectors[e.connector].name;
    for a in &it.action {
        let v = eval(&a.value, &next, || format!("action of {cname}"))?;
        store(m, &mut next, a.target, v)?;
    }
    for (i, t) in chosen {
        for a in &t.action {
            let v = eval(&a.value, &next, || {
                format!("transition #{} of {}", t.index, m.instances[i].name)
            })?;
            store(m, &mut next, a.target, v)?;
        }
        next.locs[i] = t.to;
    }
    Ok(next)
}

/// The event describing the step `s --e--> next`.
pub fn describe_step(
    m: &SystemModel,
    step: usize,
    s: &GlobalState,
    e: Enabled,
    next: &GlobalState,
) -> StepEvent {
    let it = m.interaction(e);
    let locs = it
        .ports
        .iter()
        .map(|p| (m.instances[p.instance].name.clone(), m.location_of(next, p.instance).to_owned()))
        .collect::<BTreeMap<_, _>>();
    let deltas = s
        .vals
        .iter()
        .zip(&next.vals)
        .enumerate()
        .filter(|(_, (a, b))| a != b)
        .map(|(slot, (a, b))| Delta {
            var: m.var_name(slot).to_owned(),
            old: *a,
            new: *b,
        })
        .collect();
    StepEvent {
        step,
        connector: m.connectors[e.connector].name.clone(),
        interaction: m.interaction_names(e),
        pre_hash: state_hash(s),
        locs,
        deltas,
    }
}

/// Stateful runner; holds the selection RNG.
pub struct Engine<'m> {
    model: &'m SystemModel,
    policy: SelectionPolicy,
    rng: ChaCha8Rng,
    hash: String,
}

impl<'m> Engine<'m> {
    pub fn new(model: &'m SystemModel, policy: SelectionPolicy) -> Self {
        Engine {
            model,
            policy,
            rng: ChaCha8Rng::seed_from_u64(policy.seed().unwrap_or(0)),
            hash: model_hash(model),
        }
    }

    pub fn model(&self) -> &SystemModel {
        self.model
    }

    pub fn model_hash(&self) -> &str {
        &self.hash
    }

    fn select(&mut self, candidates: &[Enabled]) -> Enabled {
        match self.policy {
            SelectionPolicy::FirstInCanonicalOrder => candidates[0],
            SelectionPolicy::SeededUniform(_) => candidates[self.rng.gen_range(0..candidates.len())],
        }
    }

    /// One cycle from `s`; `s` is left untouched.
    pub fn step(&mut self, s: &GlobalState, index: usize) -> Result<StepOutcome, EngineError> {
        let m = self.model;
        let maximal = maximal_enabled(m, s)?;
        if maximal.is_empty() {
            return Ok(StepOutcome::Deadlock);
        }
        let e = self.select(&maximal);
        let next = fire(m, s, e)?;
        Ok(StepOutcome::Fired(describe_step(m, index, s, e, &next), next))
    }

    pub fn run(&mut self, init: GlobalState, max_steps: usize) -> Result<(Trace, GlobalState), RunError> {
        self.run_with(init, max_steps, |_, _| false)
    }

    /// Like [`Engine::run`]; `stop` is consulted before each step and ends
    /// the run with `ExternalStop` when it returns true.
    pub fn run_with(
        &mut self,
        init: GlobalState,
        max_steps: usize,
        mut stop: impl FnMut(usize, &GlobalState) -> bool,
    ) -> Result<(Trace, GlobalState), RunError> {
        let mut trace = Trace {
            model_hash: self.hash.clone(),
            seed: self.policy.seed(),
            policy: self.policy.name().into(),
            events: Vec::new(),
            status: Status::StepLimit,
        };
        let mut s = init;
        for i in 0..max_steps {
            if stop(i, &s) {
                trace.status = Status::ExternalStop;
                return Ok((trace, s));
            }
            match self.step(&s, i) {
                Ok(StepOutcome::Fired(ev, next)) => {
                    trace.events.push(ev);
                    s = next;
                }
                Ok(StepOutcome::Deadlock) => {
                    trace.status = Status::Deadlock;
                    return Ok((trace, s));
                }
                Err(error) => return Err(RunError { trace: Box::new(trace), error }),
            }
        }
        Ok((trace, s))
    }
}

/// Builds a trace for an explicit interaction sequence, as used for
/// verifier witnesses. Each interaction must be maximal where it fires.
pub fn script(
    m: &SystemModel,
    path: &[Enabled],
    status: Status,
) -> Result<(Trace, GlobalState), EngineError> {
    let mut s = m.initial_state();
    let mut events = Vec::with_capacity(path.len());
    for (i, &e) in path.iter().enumerate() {
        if !maximal_enabled(m, &s)?.contains(&e) {
            return Err(EngineError::Divergence {
                step: i,
                reason: format!("{} is not enabled", m.connectors[e.connector].name),
            });
        }
        let next = fire(m, &s, e)?;
        events.push(describe_step(m, i, &s, e, &next));
        s = next;
    }
    Ok((
        Trace {
            model_hash: model_hash(m),
            seed: None,
            policy: "scripted".into(),
            events,
            status,
        },
        s,
    ))
}

/// Re-executes `t` from the initial state, checking every recorded field.
pub fn replay(m: &SystemModel, t: &Trace) -> Result<GlobalState, EngineError> {
    let expected = model_hash(m);
    if t.model_hash != expected {
        return Err(EngineError::ModelMismatch {
            expected,
            found: t.model_hash.clone(),
        });
    }
    let mut s = m.initial_state();
    for (i, ev) in t.events.iter().enumerate() {
        let diverge = |reason: String| EngineError::Divergence { step: i, reason };
        if ev.step != i {
            return Err(diverge(format!("recorded index {}", ev.step)));
        }
        if ev.pre_hash != state_hash(&s) {
            return Err(diverge("pre-state hash differs".into()));
        }
        let ci = m
            .connector_index(&ev.connector)
            .ok_or_else(|| diverge(format!("unknown connector `{}`", ev.connector)))?;
        let want: HashSet<&str> = ev.interaction.iter().map(String::as_str).collect();
        let e = (0..m.connectors[ci].interactions.len())
            .map(|ii| Enabled {
                connector: ci,
                interaction: ii,
            })
            .find(|&e| {
                let names = m.interaction_names(e);
                names.len() == want.len() && names.iter().all(|n| want.contains(n.as_str()))
            })
            .ok_or_else(|| diverge(format!("no interaction {:?} in {}", ev.interaction, ev.connector)))?;
        if !maximal_enabled(m, &s)?.contains(&e) {
            return Err(diverge(format!(
                "{{{}}} is not enabled",
                ev.interaction.join(", ")
            )));
        }
        let next = fire(m, &s, e)?;
        let got = describe_step(m, i, &s, e, &next);
        if got.deltas != ev.deltas {
            return Err(diverge("variable deltas differ".into()));
        }
        if got.locs != ev.locs {
            return Err(diverge("locations differ".into()));
        }
        s = next;
    }
    if t.status == Status::Deadlock && !maximal_enabled(m, &s)?.is_empty() {
        return Err(EngineError::Divergence {
            step: t.events.len(),
            reason: "trace ends in deadlock but interactions are enabled".into(),
        });
    }
    Ok(s)
}

/// Checks the frame property of one event: only participants change
/// location and only participants' variables change value.
pub fn frame_violations(m: &SystemModel, s: &GlobalState, e: Enabled, next: &GlobalState) -> Vec<String> {
    let parts: HashSet<usize> = m.interaction(e).ports.iter().map(|p| p.instance).collect();
    let mut out = Vec::new();
    for (i, (a, b)) in s.locs.iter().zip(&next.locs).enumerate() {
        if a != b && !parts.contains(&i) {
            out.push(format!("{} moved", m.instances[i].name));
        }
    }
    for (slot, (a, b)) in s.vals.iter().zip(&next.vals).enumerate() {
        if a != b && !parts.contains(&m.vars[slot].instance) {
            out.push(format!("{} changed", m.vars[slot].name));
        }
    }
    out
}

/// Evaluates a boolean state predicate.
pub fn holds(e: &SlotExpr, s: &GlobalState) -> Result<bool, EngineError> {
    eval_bool(e, s).map_err(eval_err("predicate"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::component::tests::reactive;
    use crate::model::{flatten_compound, CompoundComponent, Connector, Instance, QPort};

    fn reactive_sys() -> SystemModel {
        let c = CompoundComponent::new("Top")
            .instance(Instance::new("r", reactive()))
            .connector(Connector::rendezvous("cin", [QPort::new("r", "in")]))
            .connector(Connector::rendezvous("cout", [QPort::new("r", "out")]));
        flatten_compound(&c).unwrap()
    }

    #[test]
    fn reactive_fires_in_then_out() {
        let m = reactive_sys();
        let mut eng = Engine::new(&m, SelectionPolicy::FirstInCanonicalOrder);
        let s0 = m.initial_state();
        assert_eq!(m.location_of(&s0, 0), "empty");
        let StepOutcome::Fired(ev, s1) = eng.step(&s0, 0).unwrap() else {
            panic!("deadlock")
        };
        assert_eq!(ev.interaction, vec!["r.in"]);
        assert_eq!(m.location_of(&s1, 0), "full");
        assert_eq!(m.value_of(&s1, "r.y"), Some(Value::Int(2)));
        assert_eq!(ev.deltas.len(), 1);
        assert_eq!(m.location_of(&s0, 0), "empty");
    }

    #[test]
    fn zero_steps_is_empty_step_limit() {
        let m = reactive_sys();
        let (t, _) = Engine::new(&m, SelectionPolicy::SeededUniform(1))
            .run(m.initial_state(), 0)
            .unwrap();
        assert!(t.events.is_empty());
        assert_eq!(t.status, Status::StepLimit);
    }

    #[test]
    fn sink_deadlocks() {
        let sink = crate::model::AtomicComponent::new("Sink", "s");
        let c = CompoundComponent::new("Top").instance(Instance::new("k", sink));
        let m = flatten_compound(&c).unwrap();
        let (t, _) = Engine::new(&m, SelectionPolicy::SeededUniform(1))
            .run(m.initial_state(), 10)
            .unwrap();
        assert_eq!(t.status, Status::Deadlock);
        assert!(t.events.is_empty());
    }

    #[test]
    fn replay_round_trips_through_jsonl() {
        let m = reactive_sys();
        let (t, last) = Engine::new(&m, SelectionPolicy::SeededUniform(9))
            .run(m.initial_state(), 25)
            .unwrap();
        let back = Trace::from_jsonl(&t.to_jsonl()).unwrap();
        assert_eq!(back, t);
        assert_eq!(replay(&m, &back).unwrap(), last);
        assert_eq!(replay(&m, &Trace { events: vec![], ..t }).unwrap(), m.initial_state());
    }

    #[test]
    fn override_sets_initial_value() {
        let c = CompoundComponent::new("Top")
            .instance(Instance::new("r", reactive()).with("x", Value::Int(3)));
        let m = flatten_compound(&c).unwrap();
        assert_eq!(m.value_of(&m.initial_state(), "r.x"), Some(Value::Int(3)));
    }
}
