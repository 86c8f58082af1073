//! Hierarchy flattening: compound trees become a [`SystemModel`] with dotted
//! instance names, slot-resolved expressions and composed connectors.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use super::component::AtomicComponent;
use super::compound::{ComponentRef, CompoundComponent, Pattern};
use super::connector::{Clause, Connector, QPort};
use super::error::ModelError;
use super::expr::{Assign, Expr, InstLoc, LocPath, Path, Slot, SlotExpr, TypeError};
use super::system::{
    FlatConnector, FlatInstance, FlatInteraction, FlatPattern, FlatPort, FlatPriority,
    FlatTransition, SlotAction, SystemModel, VarInfo,
};
use super::value::{Type, Value};

#[derive(Clone, Debug)]
struct Alt {
    ports: Vec<FlatPort>,
    guard: SlotExpr,
    action: SlotAction,
}

#[derive(Clone, Debug)]
enum Exported {
    Port(FlatPort),
    /// An exported connector: executable only as part of an upper one.
    Conn(Vec<Alt>),
}

enum Node {
    Atomic(usize),
    Compound(CompoundNode),
}

#[derive(Default)]
struct CompoundNode {
    subs: HashMap<String, Node>,
    exports: HashMap<String, Exported>,
}

struct Builder {
    sys: SystemModel,
    errors: Vec<ModelError>,
    stack: Vec<String>,
    checked: HashSet<String>,
    names: HashSet<String>,
}

/// Flattens `root` into an executable system.
pub fn flatten(root: &ComponentRef) -> Result<SystemModel, Vec<ModelError>> {
    let mut b = Builder {
        sys: SystemModel {
            name: root.type_name().to_owned(),
            instances: Vec::new(),
            vars: Vec::new(),
            connectors: Vec::new(),
            priorities: Vec::new(),
        },
        errors: Vec::new(),
        stack: Vec::new(),
        checked: HashSet::new(),
        names: HashSet::new(),
    };
    match root {
        ComponentRef::Atomic(a) => {
            b.add_atomic(a.name.clone(), a, &[]);
        }
        ComponentRef::Compound(c) => {
            b.add_compound("", c, Vec::new());
        }
    }
    if b.errors.is_empty() {
        Ok(b.sys)
    } else {
        Err(b.errors)
    }
}

pub fn flatten_compound(root: &CompoundComponent) -> Result<SystemModel, Vec<ModelError>> {
    flatten(&ComponentRef::Compound(Arc::new(root.clone())))
}

fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_owned()
    } else {
        format!("{prefix}.{name}")
    }
}

fn conj(a: SlotExpr, b: SlotExpr) -> SlotExpr {
    if a.is_true_const() {
        b
    } else if b.is_true_const() {
        a
    } else {
        Expr::and(a, b)
    }
}

impl Builder {
    fn claim(&mut self, name: &str) {
        if !self.names.insert(name.to_owned()) {
            self.errors.push(ModelError::NameClash { name: name.into() });
        }
    }

    fn add_atomic(
        &mut self,
        name: String,
        a: &Arc<AtomicComponent>,
        overrides: &[(Path, Value)],
    ) -> usize {
        if self.checked.insert(a.name.clone()) {
            self.errors.extend(a.check());
            if a.ports.len() > 64 {
                self.errors.push(ModelError::TooManyPorts {
                    scope: a.name.clone(),
                    count: a.ports.len(),
                });
            }
        }
        self.claim(&name);
        let idx = self.sys.instances.len();
        let var_base = self.sys.vars.len();
        let mut init: Vec<Value> = a.variables.iter().map(|v| v.init).collect();
        for (path, val) in overrides {
            let scope = format!("instance {name}");
            let target = if path.is_single() { a.var_index(&path.0[0]) } else { None };
            match target {
                None => self.errors.push(ModelError::Unresolved {
                    scope,
                    kind: "variable",
                    name: path.to_string(),
                }),
                Some(k) => {
                    let d = &a.variables[k];
                    if val.ty() != d.ty || !d.in_range(*val) {
                        self.errors.push(ModelError::BadRange {
                            scope,
                            var: d.name.clone(),
                        });
                    }
                    init[k] = *val;
                }
            }
        }
        for d in &a.variables {
            self.sys.vars.push(VarInfo {
                name: format!("{name}.{}", d.name),
                instance: idx,
                ty: d.ty,
                range: d.range,
            });
        }
        let local = |p: &Path| -> Result<Slot, ()> {
            match p.segments() {
                [v] => a.var_index(v).map(|k| var_base + k).ok_or(()),
                _ => Err(()),
            }
        };
        let mut outgoing = vec![Vec::new(); a.locations.len()];
        for (ti, t) in a.transitions.iter().enumerate() {
            let (Some(from), Some(to), Some(port)) = (
                a.location_index(&t.from),
                a.location_index(&t.to),
                a.port_index(&t.port),
            ) else {
                continue;
            };
            let guard = t.guard.try_map(&mut |p| local(p), &mut |_| Err(()));
            let action: Result<SlotAction, ()> = t
                .action
                .iter()
                .map(|asg| {
                    Ok(Assign::new(
                        local(&asg.target)?,
                        asg.value.try_map(&mut |p| local(p), &mut |_| Err(()))?,
                    ))
                })
                .collect();
            if let (Ok(guard), Ok(action)) = (guard, action) {
                outgoing[from].push(FlatTransition {
                    index: ti,
                    port,
                    guard,
                    action,
                    to,
                });
            }
        }
        self.sys.instances.push(FlatInstance {
            name,
            component: a.clone(),
            var_base,
            init,
            outgoing,
        });
        idx
    }

    fn add_compound(
        &mut self,
        prefix: &str,
        c: &CompoundComponent,
        overrides: Vec<(Path, Value)>,
    ) -> CompoundNode {
        let mut node = CompoundNode::default();
        if self.stack.contains(&c.name) {
            self.errors.push(ModelError::HierarchyCycle {
                name: c.name.clone(),
            });
            return node;
        }
        self.stack.push(c.name.clone());
        if self.checked.insert(format!("compound {}", c.name)) {
            self.errors.extend(c.check());
        }

        for (path, _) in &overrides {
            if c.find_instance(&path.0[0]).is_none() {
                self.errors.push(ModelError::Unresolved {
                    scope: format!("compound {}", c.name),
                    kind: "instance",
                    name: path.to_string(),
                });
            }
        }
        for inst in &c.instances {
            let full = join(prefix, &inst.name);
            let mut ov = inst.overrides.clone();
            ov.extend(
                overrides
                    .iter()
                    .filter(|(p, _)| p.0.len() > 1 && p.0[0] == inst.name)
                    .map(|(p, v)| (Path(p.0[1..].to_vec()), *v)),
            );
            let sub = match &inst.component {
                ComponentRef::Atomic(a) => Node::Atomic(self.add_atomic(full, a, &ov)),
                ComponentRef::Compound(cc) => Node::Compound(self.add_compound(&full, cc, ov)),
            };
            node.subs.insert(inst.name.clone(), sub);
        }

        let mut local_conns: HashMap<&str, Option<usize>> = HashMap::new();
        for conn in &c.connectors {
            let qualified = join(prefix, &conn.name);
            let alts = self.connector_alts(&qualified, conn, &node);
            if let Some(e) = &conn.export {
                node.exports.insert(e.clone(), Exported::Conn(alts));
                local_conns.insert(&conn.name, None);
                continue;
            }
            self.claim(&qualified);
            let mut ports: Vec<FlatPort> = alts.iter().flat_map(|a| a.ports.iter().copied()).collect();
            ports.sort();
            ports.dedup();
            if ports.len() > 64 {
                self.errors.push(ModelError::TooManyPorts {
                    scope: format!("connector {qualified}"),
                    count: ports.len(),
                });
                continue;
            }
            let interactions = alts
                .into_iter()
                .map(|a| FlatInteraction {
                    mask: a.ports.iter().fold(0, |m, p| {
                        m | 1 << ports.iter().position(|q| q == p).unwrap()
                    }),
                    ports: a.ports,
                    guard: a.guard,
                    action: a.action,
                })
                .collect();
            local_conns.insert(&conn.name, Some(self.sys.connectors.len()));
            self.sys.connectors.push(FlatConnector {
                name: qualified,
                ports,
                interactions,
            });
        }

        for e in &c.exports {
            if let Some(x) = self.resolve_port(&node, &e.target) {
                node.exports.insert(e.name.clone(), x);
            }
        }

        for r in &c.priorities {
            let scope = format!("priority {}", join(prefix, &r.name));
            let pat = |p: &Pattern, b: &mut Builder| -> Option<FlatPattern> {
                match p {
                    Pattern::Connector(n) => match local_conns.get(n.as_str()) {
                        Some(Some(i)) => Some(FlatPattern::Connector(*i)),
                        Some(None) => {
                            b.errors.push(ModelError::Invalid {
                                scope: scope.clone(),
                                message: format!("`{n}` is an exported connector"),
                            });
                            None
                        }
                        None => None,
                    },
                    Pattern::Port(q) => match b.resolve_port(&node, q) {
                        Some(Exported::Port(fp)) => Some(FlatPattern::Port(fp)),
                        Some(Exported::Conn(_)) => {
                            b.errors.push(ModelError::Invalid {
                                scope: scope.clone(),
                                message: format!("`{q}` is an exported connector, not a port"),
                            });
                            None
                        }
                        None => None,
                    },
                }
            };
            let low = pat(&r.low, self);
            let high = pat(&r.high, self);
            let condition = r
                .condition
                .as_ref()
                .and_then(|e| self.compile_bool(&node, e, &scope));
            if let (Some(low), Some(high)) = (low, high) {
                if r.condition.is_some() && condition.is_none() {
                    continue;
                }
                self.sys.priorities.push(FlatPriority {
                    name: join(prefix, &r.name),
                    low,
                    high,
                    condition,
                });
            }
        }
        self.stack.pop();
        node
    }

    fn resolve_port(&self, node: &CompoundNode, q: &QPort) -> Option<Exported> {
        match node.subs.get(&q.instance)? {
            Node::Atomic(i) => self.sys.instances[*i]
                .component
                .port_index(&q.port)
                .map(|port| Exported::Port(FlatPort { instance: *i, port })),
            Node::Compound(n) => n.exports.get(&q.port).cloned(),
        }
    }

    /// Resolves `inst.var`, `inst.port.var`, `sub.export.var` or
    /// `sub.inst...var` to a slot.
    fn resolve_var(&self, node: &CompoundNode, segs: &[String]) -> Option<Slot> {
        let (head, rest) = segs.split_first()?;
        match node.subs.get(head)? {
            Node::Atomic(i) => {
                let inst = &self.sys.instances[*i];
                let var = match rest {
                    [v] => v,
                    [p, v] if inst.component.port_index(p).is_some() => v,
                    _ => return None,
                };
                inst.component.var_index(var).map(|k| inst.var_base + k)
            }
            Node::Compound(n) => {
                if let [e, v] = rest {
                    if let Some(Exported::Port(fp)) = n.exports.get(e) {
                        let inst = &self.sys.instances[fp.instance];
                        return inst.component.var_index(v).map(|k| inst.var_base + k);
                    }
                }
                self.resolve_var(n, rest)
            }
        }
    }

    fn resolve_inst(&self, node: &CompoundNode, segs: &[String]) -> Option<usize> {
        let (head, rest) = segs.split_first()?;
        match (node.subs.get(head)?, rest.is_empty()) {
            (Node::Atomic(i), true) => Some(*i),
            (Node::Compound(n), false) => self.resolve_inst(n, rest),
            _ => None,
        }
    }

    fn compile(&mut self, node: &CompoundNode, e: &Expr, scope: &str) -> Option<SlotExpr> {
        let out = e.try_map(
            &mut |p: &Path| self.resolve_var(node, p.segments()).ok_or_else(|| ("variable", p.to_string())),
            &mut |l: &LocPath| {
                let i = self
                    .resolve_inst(node, l.instance.segments())
                    .ok_or_else(|| ("instance", l.instance.to_string()))?;
                let loc = self.sys.instances[i]
                    .component
                    .location_index(&l.location)
                    .ok_or_else(|| ("location", l.to_string()))?;
                Ok(InstLoc { instance: i, location: loc })
            },
        );
        match out {
            Ok(x) => Some(x),
            Err((kind, name)) => {
                self.errors.push(ModelError::Unresolved {
                    scope: scope.into(),
                    kind,
                    name,
                });
                None
            }
        }
    }

    fn type_of(&self, e: &SlotExpr) -> Result<Type, TypeError> {
        let vars = &self.sys.vars;
        e.type_of(&|s: &Slot| vars.get(*s).map(|v| v.ty), &|_: &InstLoc| Ok(()))
    }

    fn compile_bool(&mut self, node: &CompoundNode, e: &Expr, scope: &str) -> Option<SlotExpr> {
        let x = self.compile(node, e, scope)?;
        match self.type_of(&x) {
            Ok(Type::Bool) => Some(x),
            Ok(found) => {
                self.errors.push(ModelError::Type {
                    scope: scope.into(),
                    error: TypeError::Mismatch {
                        op: "provided",
                        expected: "bool",
                        found,
                    },
                });
                None
            }
            Err(error) => {
                self.errors.push(ModelError::Type {
                    scope: scope.into(),
                    error,
                });
                None
            }
        }
    }

    fn compile_clause(
        &mut self,
        node: &CompoundNode,
        cl: &Clause,
        scope: &str,
    ) -> Option<(SlotExpr, SlotAction)> {
        let guard = self.compile_bool(node, &cl.guard, scope);
        let mut action = Vec::new();
        let mut ok = true;
        for a in &cl.action {
            let Some(target) = self.resolve_var(node, a.target.segments()) else {
                self.errors.push(ModelError::Unresolved {
                    scope: scope.into(),
                    kind: "variable",
                    name: a.target.to_string(),
                });
                ok = false;
                continue;
            };
            let Some(value) = self.compile(node, &a.value, scope) else {
                ok = false;
                continue;
            };
            let want = self.sys.vars[target].ty;
            match self.type_of(&value) {
                Ok(t) if t == want => action.push(Assign::new(target, value)),
                Ok(found) => {
                    ok = false;
                    self.errors.push(ModelError::Type {
                        scope: scope.into(),
                        error: TypeError::Mismatch {
                            op: ":=",
                            expected: match want {
                                Type::Int => "int",
                                Type::Bool => "bool",
                                Type::Sym => "sym",
                            },
                            found,
                        },
                    });
                }
                Err(error) => {
                    ok = false;
                    self.errors.push(ModelError::Type {
                        scope: scope.into(),
                        error,
                    });
                }
            }
        }
        guard.filter(|_| ok).map(|g| (g, action))
    }

    fn connector_alts(&mut self, qualified: &str, conn: &Connector, node: &CompoundNode) -> Vec<Alt> {
        let scope = format!("connector {qualified}");
        let resolved: Option<Vec<Exported>> = conn
            .ports
            .iter()
            .map(|p| self.resolve_port(node, &p.port))
            .collect();
        // Unresolved ports were already reported by the compound check.
        let Some(resolved) = resolved else {
            return Vec::new();
        };
        let default_clause = Clause::new(Vec::new());
        let patterns: Vec<(u64, &Clause)> = if conn.clauses.is_empty() {
            conn.feasible_masks()
                .into_iter()
                .map(|m| (m, &default_clause))
                .collect()
        } else {
            conn.clauses
                .iter()
                .filter_map(|cl| {
                    conn.mask_of(&cl.ports)
                        .filter(|&m| conn.rule_feasible(m))
                        .map(|m| (m, cl))
                })
                .collect()
        };

        let mut out = Vec::new();
        let mut reported_overlap = false;
        let mut reported_write = HashSet::new();
        for (mask, cl) in patterns {
            let Some((guard, action)) = self.compile_clause(node, cl, &scope) else {
                continue;
            };
            let mut partial = vec![Alt {
                ports: Vec::new(),
                guard: Expr::truth(),
                action: Vec::new(),
            }];
            for (i, r) in resolved.iter().enumerate() {
                if mask & (1 << i) == 0 {
                    continue;
                }
                partial = match r {
                    Exported::Port(fp) => partial
                        .into_iter()
                        .map(|mut a| {
                            a.ports.push(*fp);
                            a
                        })
                        .collect(),
                    Exported::Conn(lower) => partial
                        .iter()
                        .flat_map(|a| {
                            lower.iter().map(move |l| {
                                let mut ports = a.ports.clone();
                                ports.extend(&l.ports);
                                let mut action = a.action.clone();
                                action.extend(l.action.iter().cloned());
                                Alt {
                                    ports,
                                    guard: conj(a.guard.clone(), l.guard.clone()),
                                    action,
                                }
                            })
                        })
                        .collect(),
                };
            }
            for mut a in partial {
                a.ports.sort();
                let insts: HashSet<usize> = a.ports.iter().map(|p| p.instance).collect();
                if insts.len() != a.ports.len() {
                    if !reported_overlap {
                        reported_overlap = true;
                        let dup = a
                            .ports
                            .windows(2)
                            .find(|w| w[0].instance == w[1].instance)
                            .map(|w| self.sys.instances[w[0].instance].name.clone())
                            .unwrap_or_default();
                        self.errors.push(ModelError::OnePortPerComponent {
                            scope: scope.clone(),
                            instance: dup,
                        });
                    }
                    continue;
                }
                a.guard = conj(a.guard, guard.clone());
                a.action.extend(action.iter().cloned());
                for asg in &a.action {
                    let owner = self.sys.vars[asg.target].instance;
                    if !insts.contains(&owner) && reported_write.insert(asg.target) {
                        self.errors.push(ModelError::WriteOutsideInteraction {
                            scope: scope.clone(),
                            var: self.sys.vars[asg.target].name.clone(),
                        });
                    }
                }
                out.push(a);
            }
        }
        out.sort_by(|x, y| x.ports.cmp(&y.ports));
        out
    }
}
