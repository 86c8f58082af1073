//! Component invariants, the deadlock predicate and the satisfiability
//! pre-check over their conjunction.

use std::collections::HashSet;

use indexmap::IndexSet;

use crate::model::system::eval_bool;
use crate::model::{
    Enabled, Expr, FlatPort, GlobalState, InstLoc, Slot, SlotExpr, Symbol, SystemModel, Type,
    Value,
};

use super::explore::Codec;
use super::VerifyError;

/// Reachable `(location, tracked values)` pairs of one instance computed in
/// isolation, with every port assumed synchronisable.
#[derive(Clone, Debug)]
pub struct ComponentInvariant {
    pub instance: usize,
    /// Slots of the instance's tracked variables, in order.
    pub tracked: Vec<Slot>,
    pub elements: IndexSet<(usize, Vec<Value>)>,
}

impl ComponentInvariant {
    pub fn project(&self, s: &GlobalState) -> (usize, Vec<Value>) {
        (
            s.locs[self.instance],
            self.tracked.iter().map(|&k| s.vals[k]).collect(),
        )
    }

    pub fn contains(&self, s: &GlobalState) -> bool {
        self.elements.contains(&self.project(s))
    }

    pub fn locations(&self) -> HashSet<usize> {
        self.elements.iter().map(|(l, _)| *l).collect()
    }

    /// Writes element `e` into `s`.
    pub fn inject(&self, e: &(usize, Vec<Value>), s: &mut GlobalState) {
        s.locs[self.instance] = e.0;
        for (&k, &v) in self.tracked.iter().zip(&e.1) {
            s.vals[k] = v;
        }
    }
}

/// Every symbol that can appear in a model's state.
fn symbol_universe(m: &SystemModel) -> Vec<Symbol> {
    let mut consts = Vec::new();
    for inst in &m.instances {
        consts.extend(inst.init.iter().copied());
        for t in inst.outgoing.iter().flatten() {
            t.guard.constants(&mut consts);
            for a in &t.action {
                a.value.constants(&mut consts);
            }
        }
    }
    for c in &m.connectors {
        for it in &c.interactions {
            it.guard.constants(&mut consts);
            for a in &it.action {
                a.value.constants(&mut consts);
            }
        }
    }
    let mut out: Vec<Symbol> = Vec::new();
    for v in consts {
        if let Value::Sym(s) = v {
            if !out.contains(&s) {
                out.push(s);
            }
        }
    }
    out
}

fn domain(m: &SystemModel, slot: Slot, syms: &[Symbol]) -> Vec<Value> {
    let v = &m.vars[slot];
    match (v.ty, v.range) {
        (Type::Int, Some((lo, hi))) => (lo..=hi).map(Value::Int).collect(),
        (Type::Int, None) => Vec::new(),
        (Type::Bool, _) => vec![Value::Bool(false), Value::Bool(true)],
        (Type::Sym, _) => syms.iter().map(|&s| Value::Sym(s)).collect(),
    }
}

fn in_range(m: &SystemModel, slot: Slot, v: Value) -> bool {
    match (m.vars[slot].range, v) {
        (Some((lo, hi)), Value::Int(i)) => lo <= i && i <= hi,
        _ => v.ty() == m.vars[slot].ty,
    }
}

/// Forward propagation to a fixpoint. Variables that connector actions may
/// write when the instance takes part through port `p` are havocked over
/// their domain before the transition's own action on `p` runs.
pub fn component_invariant(
    m: &SystemModel,
    codec: &Codec,
    instance: usize,
) -> Result<ComponentInvariant, VerifyError> {
    let fi = &m.instances[instance];
    let tracked: Vec<Slot> = (fi.var_base..fi.var_base + fi.init.len())
        .filter(|&k| codec.is_tracked(k))
        .collect();
    let syms = symbol_universe(m);
    let nports = fi.component.ports.len();
    let mut havoc: Vec<Vec<Slot>> = vec![Vec::new(); nports];
    for c in &m.connectors {
        for it in &c.interactions {
            for p in it.ports.iter().filter(|p| p.instance == instance) {
                for a in &it.action {
                    if m.vars[a.target].instance == instance
                        && codec.is_tracked(a.target)
                        && !havoc[p.port].contains(&a.target)
                    {
                        havoc[p.port].push(a.target);
                    }
                }
            }
        }
    }
    let mut ci = ComponentInvariant {
        instance,
        tracked,
        elements: IndexSet::new(),
    };
    let mut scratch = m.initial_state();
    ci.elements.insert(ci.project(&scratch));
    let mut i = 0;
    while i < ci.elements.len() {
        let elem = ci.elements[i].clone();
        ci.inject(&elem, &mut scratch);
        for t in &fi.outgoing[elem.0] {
            if !eval_bool(&t.guard, &scratch).unwrap_or(false) {
                continue;
            }
            // Enumerate havoc combinations.
            let hv = &havoc[t.port];
            let doms: Vec<Vec<Value>> = hv.iter().map(|&k| domain(m, k, &syms)).collect();
            let mut idx = vec![0usize; hv.len()];
            loop {
                let mut st = scratch.clone();
                for (j, &k) in hv.iter().enumerate() {
                    if let Some(&v) = doms[j].get(idx[j]) {
                        st.vals[k] = v;
                    }
                }
                let mut ok = true;
                for a in &t.action {
                    if !codec.is_tracked(a.target) {
                        continue;
                    }
                    match a.value.eval(&crate::model::StateEnv(&st)) {
                        Ok(v) if in_range(m, a.target, v) => st.vals[a.target] = v,
                        _ => {
                            ok = false;
                            break;
                        }
                    }
                }
                if ok {
                    st.locs[instance] = t.to;
                    let p = ci.project(&st);
                    ci.elements.insert(p);
                }
                // next combination
                let mut j = 0;
                while j < hv.len() {
                    idx[j] += 1;
                    if idx[j] < doms[j].len() {
                        break;
                    }
                    idx[j] = 0;
                    j += 1;
                }
                if j == hv.len() {
                    break;
                }
            }
        }
        i += 1;
    }
    Ok(ci)
}

pub fn component_invariants(m: &SystemModel, codec: &Codec) -> Result<Vec<ComponentInvariant>, VerifyError> {
    (0..m.instances.len())
        .map(|i| component_invariant(m, codec, i))
        .collect()
}

/// The disabling condition of one interaction: some port unoffered, or the
/// guard false.
#[derive(Clone, Debug)]
pub struct DisTerm {
    pub interaction: Enabled,
    pub ports: Vec<FlatPort>,
    pub guard: SlotExpr,
}

/// Conjunction of [`DisTerm`]s; holds exactly in states where no
/// interaction is enabled.
#[derive(Clone, Debug)]
pub struct DeadlockPredicate {
    pub terms: Vec<DisTerm>,
}

pub fn compute_dis(m: &SystemModel) -> DeadlockPredicate {
    let mut terms = Vec::new();
    for (ci, c) in m.connectors.iter().enumerate() {
        for (ii, it) in c.interactions.iter().enumerate() {
            terms.push(DisTerm {
                interaction: Enabled {
                    connector: ci,
                    interaction: ii,
                },
                ports: it.ports.clone(),
                guard: it.guard.clone(),
            });
        }
    }
    DeadlockPredicate { terms }
}

/// `offered(inst.port)` as an expression over locations and variables.
pub fn offered_expr(m: &SystemModel, p: FlatPort) -> SlotExpr {
    let fi = &m.instances[p.instance];
    Expr::any(fi.outgoing.iter().enumerate().flat_map(|(l, ts)| {
        ts.iter().filter(|t| t.port == p.port).map(move |t| {
            let at = Expr::At(InstLoc {
                instance: p.instance,
                location: l,
            });
            if t.guard.is_true_const() {
                at
            } else {
                Expr::and(at, t.guard.clone())
            }
        })
    }))
}

impl DisTerm {
    /// Whether the interaction is enabled (the term is violated) in `s`.
    pub fn enabled(&self, offers: &[u64], s: &GlobalState) -> bool {
        self.ports
            .iter()
            .all(|p| offers[p.instance] & (1 << p.port) != 0)
            && eval_bool(&self.guard, s).unwrap_or(false)
    }
}

impl DeadlockPredicate {
    pub fn holds(&self, m: &SystemModel, s: &GlobalState) -> Result<bool, VerifyError> {
        let offers = m.offers(s).map_err(|e| VerifyError::Eval(e.to_string()))?;
        Ok(!self.terms.iter().any(|t| t.enabled(&offers, s)))
    }

    /// The predicate as one boolean expression.
    pub fn to_expr(&self, m: &SystemModel) -> SlotExpr {
        Expr::all(self.terms.iter().map(|t| {
            let enabled = Expr::all(
                t.ports
                    .iter()
                    .map(|&p| offered_expr(m, p))
                    .chain((!t.guard.is_true_const()).then(|| t.guard.clone())),
            );
            Expr::negate(enabled)
        }))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrecheckLimits {
    pub max_candidates: usize,
    pub max_nodes: usize,
}

impl Default for PrecheckLimits {
    fn default() -> Self {
        PrecheckLimits {
            max_candidates: 1_000,
            max_nodes: 2_000_000,
        }
    }
}

/// What the pre-check looks for in the product of component invariants.
pub enum Target<'a> {
    Deadlock(&'a DeadlockPredicate),
    Bad(&'a SlotExpr),
}

#[derive(Clone, Debug)]
pub enum PrecheckResult {
    /// No element of the product satisfies the target.
    Unsat,
    Candidates {
        states: Vec<GlobalState>,
        /// The search stopped at a limit; `states` is partial.
        capped: bool,
    },
}

fn max_instance(m: &SystemModel, e: &SlotExpr, init: Option<usize>) -> Option<usize> {
    let mut hi = init;
    e.visit_vars(&mut |s: &Slot| hi = hi.max(Some(m.vars[*s].instance)));
    e.visit_locs(&mut |l: &InstLoc| hi = hi.max(Some(l.instance)));
    hi
}

/// Lazy product of the component invariants, pruned as soon as a fully
/// determined conjunct of the target fails.
pub fn precheck(
    m: &SystemModel,
    cis: &[ComponentInvariant],
    target: Target<'_>,
    limits: PrecheckLimits,
) -> PrecheckResult {
    let n = m.instances.len();
    if n == 0 {
        return PrecheckResult::Candidates {
            states: vec![m.initial_state()],
            capped: false,
        };
    }
    // Offers per invariant element.
    let offers: Vec<Vec<u64>> = cis
        .iter()
        .map(|ci| {
            let mut s = m.initial_state();
            ci.elements
                .iter()
                .map(|e| {
                    ci.inject(e, &mut s);
                    let mut bits = 0u64;
                    for t in &m.instances[ci.instance].outgoing[e.0] {
                        if eval_bool(&t.guard, &s).unwrap_or(false) {
                            bits |= 1 << t.port;
                        }
                    }
                    bits
                })
                .collect()
        })
        .collect();
    // Conjuncts grouped by the depth at which they become decidable.
    let mut at_depth: Vec<Vec<&DisTerm>> = vec![Vec::new(); n];
    let mut bad_depth = None;
    match &target {
        Target::Deadlock(d) => {
            for t in &d.terms {
                let hi = t.ports.iter().map(|p| p.instance).max();
                let depth = max_instance(m, &t.guard, hi).unwrap_or(0);
                at_depth[depth].push(t);
            }
        }
        Target::Bad(b) => bad_depth = Some(max_instance(m, b, None).unwrap_or(0)),
    }

    struct Search<'a> {
        cis: &'a [ComponentInvariant],
        offers: &'a [Vec<u64>],
        at_depth: &'a [Vec<&'a DisTerm>],
        bad: Option<(&'a SlotExpr, usize)>,
        cur_offers: Vec<u64>,
        state: GlobalState,
        out: Vec<GlobalState>,
        nodes: usize,
        limits: PrecheckLimits,
        capped: bool,
    }

    impl Search<'_> {
        fn go(&mut self, d: usize) {
            if self.capped {
                return;
            }
            if d == self.cis.len() {
                self.out.push(self.state.clone());
                if self.out.len() >= self.limits.max_candidates {
                    self.capped = true;
                }
                return;
            }
            let ci = &self.cis[d];
            for (k, e) in ci.elements.iter().enumerate() {
                self.nodes += 1;
                if self.nodes > self.limits.max_nodes {
                    self.capped = true;
                    return;
                }
                ci.inject(e, &mut self.state);
                self.cur_offers[d] = self.offers[d][k];
                let pruned = self.at_depth[d]
                    .iter()
                    .any(|t| t.enabled(&self.cur_offers, &self.state))
                    || matches!(self.bad, Some((b, bd)) if bd == d
                        && !eval_bool(b, &self.state).unwrap_or(true));
                if !pruned {
                    self.go(d + 1);
                    if self.capped {
                        return;
                    }
                }
            }
        }
    }

    let mut search = Search {
        cis,
        offers: &offers,
        at_depth: &at_depth,
        bad: match target {
            Target::Bad(b) => Some((b, bad_depth.unwrap_or(0))),
            Target::Deadlock(_) => None,
        },
        cur_offers: vec![0; n],
        state: m.initial_state(),
        out: Vec::new(),
        nodes: 0,
        limits,
        capped: false,
    };
    search.go(0);
    if search.out.is_empty() && !search.capped {
        PrecheckResult::Unsat
    } else {
        PrecheckResult::Candidates {
            states: search.out,
            capped: search.capped,
        }
    }
}
