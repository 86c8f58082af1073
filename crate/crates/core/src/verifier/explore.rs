//! Explicit-state breadth-first reachability over compact state keys.

use std::collections::HashSet;

use indexmap::IndexSet;

use crate::engine::{fire, maximal_enabled};
use crate::model::{Enabled, GlobalState, Slot, SlotExpr, Symbol, SystemModel, Type, Value};

use super::VerifyError;

#[derive(Clone, Copy, Debug)]
enum Kind {
    Int(i64),
    Bool,
    Sym,
}

/// Maps global states to compact keys: one `u16` per location and per
/// tracked variable. Unranged integers that cannot influence a guard, a
/// priority condition or a checked predicate are not tracked.
#[derive(Clone, Debug)]
pub struct Codec {
    tracked: Vec<(Slot, Kind)>,
    tracked_mask: Vec<bool>,
    template: GlobalState,
}

/// Variables read, directly or through assignments, by any guard,
/// priority condition or `extra` predicate.
pub fn relevant_vars(m: &SystemModel, extra: &[&SlotExpr]) -> Vec<bool> {
    let mut rel = vec![false; m.vars.len()];
    let mark = |e: &SlotExpr, rel: &mut Vec<bool>| e.visit_vars(&mut |s: &Slot| rel[*s] = true);
    for inst in &m.instances {
        for t in inst.outgoing.iter().flatten() {
            mark(&t.guard, &mut rel);
        }
    }
    for c in &m.connectors {
        for it in &c.interactions {
            mark(&it.guard, &mut rel);
        }
    }
    for p in &m.priorities {
        if let Some(c) = &p.condition {
            mark(c, &mut rel);
        }
    }
    for e in extra {
        mark(e, &mut rel);
    }
    let assigns: Vec<_> = m
        .instances
        .iter()
        .flat_map(|i| i.outgoing.iter().flatten().flat_map(|t| t.action.iter()))
        .chain(
            m.connectors
                .iter()
                .flat_map(|c| c.interactions.iter().flat_map(|it| it.action.iter())),
        )
        .collect();
    loop {
        let mut changed = false;
        for a in &assigns {
            if rel[a.target] {
                a.value.visit_vars(&mut |s: &Slot| {
                    if !rel[*s] {
                        rel[*s] = true;
                        changed = true;
                    }
                });
            }
        }
        if !changed {
            return rel;
        }
    }
}

impl Codec {
    pub fn new(m: &SystemModel, extra: &[&SlotExpr]) -> Result<Codec, VerifyError> {
        let rel = relevant_vars(m, extra);
        let mut tracked = Vec::new();
        let mut tracked_mask = vec![false; m.vars.len()];
        for (slot, v) in m.vars.iter().enumerate() {
            let kind = match (v.ty, v.range) {
                (Type::Int, Some((lo, hi))) => {
                    if hi - lo >= u16::MAX as i64 {
                        return Err(VerifyError::RangeTooWide { var: v.name.clone() });
                    }
                    Kind::Int(lo)
                }
                (Type::Int, None) if rel[slot] => {
                    return Err(VerifyError::Unranged { var: v.name.clone() })
                }
                (Type::Int, None) => continue,
                (Type::Bool, _) => Kind::Bool,
                (Type::Sym, _) => Kind::Sym,
            };
            tracked.push((slot, kind));
            tracked_mask[slot] = true;
        }
        Ok(Codec {
            tracked,
            tracked_mask,
            template: m.initial_state(),
        })
    }

    pub fn is_tracked(&self, slot: Slot) -> bool {
        self.tracked_mask[slot]
    }

    pub fn encode(&self, s: &GlobalState) -> Box<[u16]> {
        let mut k = Vec::with_capacity(s.locs.len() + self.tracked.len());
        k.extend(s.locs.iter().map(|&l| l as u16));
        for &(slot, kind) in &self.tracked {
            k.push(match (kind, s.vals[slot]) {
                (Kind::Int(lo), Value::Int(i)) => (i - lo) as u16,
                (Kind::Bool, Value::Bool(b)) => b as u16,
                (Kind::Sym, Value::Sym(y)) => y.id() as u16,
                _ => u16::MAX,
            });
        }
        k.into_boxed_slice()
    }

    /// Inverse of [`Codec::encode`]; untracked variables take their
    /// initial values.
    pub fn decode(&self, k: &[u16]) -> GlobalState {
        let mut s = self.template.clone();
        let n = s.locs.len();
        for (l, &x) in s.locs.iter_mut().zip(&k[..n]) {
            *l = x as usize;
        }
        for (&(slot, kind), &x) in self.tracked.iter().zip(&k[n..]) {
            s.vals[slot] = match kind {
                Kind::Int(lo) => Value::Int(lo + x as i64),
                Kind::Bool => Value::Bool(x != 0),
                Kind::Sym => Value::Sym(Symbol::from_id(x as u32).expect("interned symbol")),
            };
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exploration {
    Complete,
    Truncated,
    /// Stopped at the first state satisfying the search target.
    Found(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub interaction: Enabled,
    pub to: u32,
}

/// Reachable states in BFS order, with CSR adjacency and BFS parents.
pub struct StateGraph {
    pub codec: Codec,
    pub states: IndexSet<Box<[u16]>>,
    pub parent: Vec<Option<(u32, Enabled)>>,
    edge_start: Vec<u32>,
    edges: Vec<Edge>,
    pub status: Exploration,
}

impl StateGraph {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Number of states whose successors were computed.
    pub fn expanded(&self) -> usize {
        self.edge_start.len() - 1
    }

    pub fn state(&self, id: u32) -> GlobalState {
        self.codec.decode(&self.states[id as usize])
    }

    pub fn successors(&self, id: u32) -> &[Edge] {
        let i = id as usize;
        if i + 1 >= self.edge_start.len() {
            return &[];
        }
        &self.edges[self.edge_start[i] as usize..self.edge_start[i + 1] as usize]
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Shortest interaction sequence from the initial state to `id`.
    pub fn path_to(&self, id: u32) -> Vec<Enabled> {
        let mut path = Vec::new();
        let mut cur = id;
        while let Some((p, e)) = self.parent[cur as usize] {
            path.push(e);
            cur = p;
        }
        path.reverse();
        path
    }

    /// Expanded states without successors.
    pub fn sinks(&self) -> Vec<u32> {
        (0..self.expanded() as u32)
            .filter(|&i| self.successors(i).is_empty())
            .collect()
    }
}

/// Breadth-first exploration of the post-priority transition system.
pub fn explore(m: &SystemModel, bound: usize) -> Result<StateGraph, VerifyError> {
    explore_with(m, bound, &[], |_| Ok(false))
}

/// Exploration that stops as soon as `target` holds on a discovered state.
/// `extra` lists predicates whose variables must be tracked.
pub fn explore_with(
    m: &SystemModel,
    bound: usize,
    extra: &[&SlotExpr],
    mut target: impl FnMut(&GlobalState) -> Result<bool, VerifyError>,
) -> Result<StateGraph, VerifyError> {
    let codec = Codec::new(m, extra)?;
    let init = m.initial_state();
    let mut g = StateGraph {
        states: IndexSet::new(),
        parent: vec![None],
        edge_start: vec![0],
        edges: Vec::new(),
        status: Exploration::Complete,
        codec,
    };
    g.states.insert(g.codec.encode(&init));
    if target(&init)? {
        g.status = Exploration::Found(0);
        return Ok(g);
    }
    let bound = bound.max(1);
    let mut i = 0usize;
    while i < g.states.len() {
        let s = g.codec.decode(&g.states[i]);
        let maximal = maximal_enabled(m, &s)?;
        let mut seen_here = HashSet::new();
        for e in maximal {
            let next = fire(m, &s, e)?;
            let key = g.codec.encode(&next);
            let to = match g.states.get_index_of(&key) {
                Some(j) => j,
                None => {
                    if g.states.len() >= bound {
                        g.status = Exploration::Truncated;
                        g.edges.truncate(g.edge_start[i] as usize);
                        return Ok(g);
                    }
                    let (j, _) = g.states.insert_full(key);
                    g.parent.push(Some((i as u32, e)));
                    if target(&next)? {
                        g.edges.push(Edge {
                            interaction: e,
                            to: j as u32,
                        });
                        g.edge_start.push(g.edges.len() as u32);
                        g.status = Exploration::Found(j as u32);
                        return Ok(g);
                    }
                    j
                }
            };
            if seen_here.insert((e, to)) {
                g.edges.push(Edge {
                    interaction: e,
                    to: to as u32,
                });
            }
        }
        g.edge_start.push(g.edges.len() as u32);
        i += 1;
    }
    Ok(g)
}
