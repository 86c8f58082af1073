//! The flattened system and the pure functions computing offers, enabled
//! interactions and priority filtering on a global state.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::component::AtomicComponent;
use super::expr::{Assign, Env, EvalError, InstLoc, Slot, SlotExpr};
use super::value::{Type, Value};

/// A port of a flattened atomic instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FlatPort {
    pub instance: usize,
    pub port: usize,
}

pub type SlotAction = Vec<Assign<Slot, InstLoc>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatTransition {
    /// Index into the component's transition list.
    pub index: usize,
    pub port: usize,
    pub guard: SlotExpr,
    pub action: SlotAction,
    pub to: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatInstance {
    /// Dotted path from the root, e.g. `ndd.MessageBox`.
    pub name: String,
    pub component: Arc<AtomicComponent>,
    /// Position of this instance's first variable in the global valuation.
    pub var_base: usize,
    pub init: Vec<Value>,
    /// Outgoing transitions grouped by source location index.
    pub outgoing: Vec<Vec<FlatTransition>>,
}

impl FlatInstance {
    pub fn port_name(&self, port: usize) -> &str {
        &self.component.ports[port]
    }

    pub fn location_name(&self, loc: usize) -> &str {
        &self.component.locations[loc]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarInfo {
    /// `instance.var`
    pub name: String,
    pub instance: usize,
    pub ty: Type,
    pub range: Option<(i64, i64)>,
}

/// One executable interaction of a flattened connector: its ports (sorted),
/// guard, and data-transfer action.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatInteraction {
    pub ports: Vec<FlatPort>,
    /// Bit `i` set iff `FlatConnector::ports[i]` takes part.
    pub mask: u64,
    pub guard: SlotExpr,
    pub action: SlotAction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatConnector {
    /// Dotted path of the declaring compound plus the connector name.
    pub name: String,
    pub ports: Vec<FlatPort>,
    pub interactions: Vec<FlatInteraction>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlatPattern {
    Connector(usize),
    Port(FlatPort),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatPriority {
    pub name: String,
    pub low: FlatPattern,
    pub high: FlatPattern,
    pub condition: Option<SlotExpr>,
}

/// Root component with the hierarchy resolved: atomic instances, executable
/// connectors and a flat priority order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemModel {
    pub name: String,
    pub instances: Vec<FlatInstance>,
    pub vars: Vec<VarInfo>,
    pub connectors: Vec<FlatConnector>,
    pub priorities: Vec<FlatPriority>,
}

/// Identifies one interaction of one connector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Enabled {
    pub connector: usize,
    pub interaction: usize,
}

/// Per-instance location and the global variable valuation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GlobalState {
    pub locs: Vec<usize>,
    pub vals: Vec<Value>,
}

/// Evaluation environment over a global state.
pub struct StateEnv<'a>(pub &'a GlobalState);

impl Env<Slot, InstLoc> for StateEnv<'_> {
    fn var(&self, v: &Slot) -> Option<Value> {
        self.0.vals.get(*v).copied()
    }

    fn at(&self, l: &InstLoc) -> Option<bool> {
        self.0.locs.get(l.instance).map(|&x| x == l.location)
    }
}

pub fn eval_bool(e: &SlotExpr, s: &GlobalState) -> Result<bool, EvalError> {
    match e {
        SlotExpr::Const(Value::Bool(b)) => Ok(*b),
        _ => e
            .eval(&StateEnv(s))?
            .as_bool()
            .ok_or(EvalError::IllTyped("guard")),
    }
}

impl SystemModel {
    pub fn instance_index(&self, name: &str) -> Option<usize> {
        self.instances.iter().position(|i| i.name == name)
    }

    pub fn connector_index(&self, name: &str) -> Option<usize> {
        self.connectors.iter().position(|c| c.name == name)
    }

    pub fn slot_of(&self, qualified: &str) -> Option<Slot> {
        self.vars.iter().position(|v| v.name == qualified)
    }

    pub fn port_name(&self, p: FlatPort) -> String {
        let inst = &self.instances[p.instance];
        format!("{}.{}", inst.name, inst.port_name(p.port))
    }

    pub fn interaction(&self, e: Enabled) -> &FlatInteraction {
        &self.connectors[e.connector].interactions[e.interaction]
    }

    pub fn interaction_names(&self, e: Enabled) -> Vec<String> {
        self.interaction(e)
            .ports
            .iter()
            .map(|&p| self.port_name(p))
            .collect()
    }

    pub fn initial_state(&self) -> GlobalState {
        let locs = self
            .instances
            .iter()
            .map(|i| i.component.location_index(&i.component.initial).unwrap_or(0))
            .collect();
        let vals = self.instances.iter().flat_map(|i| i.init.iter().copied()).collect();
        GlobalState { locs, vals }
    }

    pub fn location_of(&self, s: &GlobalState, inst: usize) -> &str {
        self.instances[inst].location_name(s.locs[inst])
    }

    pub fn value_of(&self, s: &GlobalState, qualified: &str) -> Option<Value> {
        self.slot_of(qualified).map(|slot| s.vals[slot])
    }

    /// Bit set of ports offered by each instance in `s`.
    pub fn offers(&self, s: &GlobalState) -> Result<Vec<u64>, EvalError> {
        self.instances
            .iter()
            .enumerate()
            .map(|(i, inst)| {
                let mut bits = 0u64;
                for t in &inst.outgoing[s.locs[i]] {
                    if bits & (1 << t.port) == 0 && eval_bool(&t.guard, s)? {
                        bits |= 1 << t.port;
                    }
                }
                Ok(bits)
            })
            .collect()
    }

    /// Ports offered by one instance, in port declaration order.
    pub fn offered_ports(&self, s: &GlobalState, inst: usize) -> Result<Vec<usize>, EvalError> {
        let bits = self.offers(s)?[inst];
        Ok((0..64).filter(|p| bits & (1 << p) != 0).collect())
    }

    /// All interactions whose ports are all offered and whose guard holds,
    /// in connector declaration order then canonical interaction order.
    pub fn enabled_interactions(&self, s: &GlobalState) -> Result<Vec<Enabled>, EvalError> {
        let offers = self.offers(s)?;
        self.enabled_with_offers(s, &offers)
    }

    pub fn enabled_with_offers(
        &self,
        s: &GlobalState,
        offers: &[u64],
    ) -> Result<Vec<Enabled>, EvalError> {
        let mut out = Vec::new();
        for (ci, c) in self.connectors.iter().enumerate() {
            for (ii, it) in c.interactions.iter().enumerate() {
                if it.ports.iter().all(|p| offers[p.instance] & (1 << p.port) != 0)
                    && eval_bool(&it.guard, s)?
                {
                    out.push(Enabled {
                        connector: ci,
                        interaction: ii,
                    });
                }
            }
        }
        Ok(out)
    }

    fn matches(&self, pat: &FlatPattern, e: Enabled) -> bool {
        match pat {
            FlatPattern::Connector(c) => *c == e.connector,
            FlatPattern::Port(p) => self.interaction(e).ports.contains(p),
        }
    }

    /// Whether `low` is dominated by `high` in `s`: by maximal progress
    /// inside one connector, or by a priority rule whose condition holds.
    pub fn dominates(&self, high: Enabled, low: Enabled, s: &GlobalState) -> Result<bool, EvalError> {
        if high == low {
            return Ok(false);
        }
        if high.connector == low.connector {
            let (h, l) = (self.interaction(high).mask, self.interaction(low).mask);
            if l & h == l && l != h {
                return Ok(true);
            }
        }
        for r in &self.priorities {
            if self.matches(&r.low, low) && self.matches(&r.high, high) {
                let holds = match &r.condition {
                    Some(c) => eval_bool(c, s)?,
                    None => true,
                };
                if holds {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }

    /// Removes every entry dominated by another entry of `enabled`.
    /// Entries absent from `enabled` never dominate anything.
    pub fn apply_priorities(
        &self,
        enabled: &[Enabled],
        s: &GlobalState,
    ) -> Result<Vec<Enabled>, EvalError> {
        let mut out = Vec::with_capacity(enabled.len());
        'outer: for &low in enabled {
            for &high in enabled {
                if self.dominates(high, low, s)? {
                    continue 'outer;
                }
            }
            out.push(low);
        }
        Ok(out)
    }

    /// Transitions of `inst` enabled on `port` in `s`.
    pub fn transitions_on<'a>(
        &'a self,
        s: &GlobalState,
        inst: usize,
        port: usize,
    ) -> Result<Vec<&'a FlatTransition>, EvalError> {
        let mut out = Vec::new();
        for t in &self.instances[inst].outgoing[s.locs[inst]] {
            if t.port == port && eval_bool(&t.guard, s)? {
                out.push(t);
            }
        }
        Ok(out)
    }

    /// Human-readable `inst.var` for a slot.
    pub fn var_name(&self, slot: Slot) -> &str {
        &self.vars[slot].name
    }

    /// Values of one instance's variables in `s`.
    pub fn instance_vars<'a>(
        &'a self,
        s: &'a GlobalState,
        inst: usize,
    ) -> impl Iterator<Item = (&'a str, Value)> + 'a {
        let fi = &self.instances[inst];
        fi.component
            .variables
            .iter()
            .enumerate()
            .map(move |(k, d)| (d.name.as_str(), s.vals[fi.var_base + k]))
    }

    /// Compact per-instance description: `inst@loc{var=val,...}`.
    pub fn describe(&self, s: &GlobalState) -> String {
        let mut parts = Vec::new();
        for (i, inst) in self.instances.iter().enumerate() {
            let vars: Vec<String> = self
                .instance_vars(s, i)
                .map(|(n, v)| format!("{n}={v}"))
                .collect();
            if vars.is_empty() {
                parts.push(format!("{}@{}", inst.name, self.location_of(s, i)));
            } else {
                parts.push(format!(
                    "{}@{}{{{}}}",
                    inst.name,
                    self.location_of(s, i),
                    vars.join(",")
                ));
            }
        }
        parts.join(" ")
    }
}

impl fmt::Display for FlatPort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}.{}", self.instance, self.port)
    }
}
