//! Compound components: instances, connectors, priorities and exports.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::component::AtomicComponent;
use super::connector::{Connector, QPort};
use super::error::ModelError;
use super::expr::{Expr, Path};
use super::value::Value;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ComponentRef {
    Atomic(Arc<AtomicComponent>),
    Compound(Arc<CompoundComponent>),
}

impl ComponentRef {
    pub fn type_name(&self) -> &str {
        match self {
            ComponentRef::Atomic(a) => &a.name,
            ComponentRef::Compound(c) => &c.name,
        }
    }
}

impl From<AtomicComponent> for ComponentRef {
    fn from(a: AtomicComponent) -> Self {
        ComponentRef::Atomic(Arc::new(a))
    }
}

impl From<CompoundComponent> for ComponentRef {
    fn from(c: CompoundComponent) -> Self {
        ComponentRef::Compound(Arc::new(c))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub name: String,
    pub component: ComponentRef,
    /// Initial-value overrides; the path is relative to the instance
    /// (`x` for an atom, `sub.x` inside a compound).
    pub overrides: Vec<(Path, Value)>,
}

impl Instance {
    pub fn new(name: &str, component: impl Into<ComponentRef>) -> Self {
        Instance {
            name: name.into(),
            component: component.into(),
            overrides: Vec::new(),
        }
    }

    pub fn of(name: &str, component: &ComponentRef) -> Self {
        Instance {
            name: name.into(),
            component: component.clone(),
            overrides: Vec::new(),
        }
    }

    pub fn with(mut self, var: &str, v: Value) -> Self {
        self.overrides.push((Path::parse(var), v));
        self
    }
}

/// Which interactions a priority rule side refers to.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pattern {
    /// Any interaction of the named connector.
    Connector(String),
    /// Any interaction containing the port.
    Port(QPort),
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pattern::Connector(c) => f.write_str(c),
            Pattern::Port(p) => write!(f, "{p}"),
        }
    }
}

/// `low < high [provided condition]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorityRule {
    pub name: String,
    pub low: Pattern,
    pub high: Pattern,
    pub condition: Option<Expr>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortExport {
    pub name: String,
    pub target: QPort,
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct CompoundComponent {
    pub name: String,
    pub instances: Vec<Instance>,
    pub connectors: Vec<Connector>,
    pub priorities: Vec<PriorityRule>,
    pub exports: Vec<PortExport>,
}

impl CompoundComponent {
    pub fn new(name: &str) -> Self {
        CompoundComponent {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn instance(mut self, i: Instance) -> Self {
        self.instances.push(i);
        self
    }

    pub fn connector(mut self, c: Connector) -> Self {
        self.connectors.push(c);
        self
    }

    pub fn priority(mut self, name: &str, low: Pattern, high: Pattern) -> Self {
        self.priorities.push(PriorityRule {
            name: name.into(),
            low,
            high,
            condition: None,
        });
        self
    }

    pub fn export(mut self, name: &str, target: QPort) -> Self {
        self.exports.push(PortExport {
            name: name.into(),
            target,
        });
        self
    }

    pub fn find_instance(&self, name: &str) -> Option<&Instance> {
        self.instances.iter().find(|i| i.name == name)
    }

    pub fn find_connector(&self, name: &str) -> Option<&Connector> {
        self.connectors.iter().find(|c| c.name == name)
    }

    pub fn find_connector_mut(&mut self, name: &str) -> Option<&mut Connector> {
        self.connectors.iter_mut().find(|c| c.name == name)
    }

    /// Names visible from the outside: port exports and exported connectors.
    pub fn export_names(&self) -> impl Iterator<Item = &str> {
        self.exports
            .iter()
            .map(|e| e.name.as_str())
            .chain(self.connectors.iter().filter_map(|c| c.export.as_deref()))
    }

    pub fn has_export(&self, name: &str) -> bool {
        self.export_names().any(|n| n == name)
    }

    /// Whether `q` names a port (or export) of a direct sub-instance.
    pub fn port_exists(&self, q: &QPort) -> bool {
        match self.find_instance(&q.instance).map(|i| &i.component) {
            Some(ComponentRef::Atomic(a)) => a.port_index(&q.port).is_some(),
            Some(ComponentRef::Compound(c)) => c.has_export(&q.port),
            None => false,
        }
    }

    /// Local structural checks (names, port references, priority shape).
    /// Typing and variable resolution are checked by flattening.
    pub fn check(&self) -> Vec<ModelError> {
        let scope = format!("compound {}", self.name);
        let mut errs = Vec::new();
        let mut seen = HashSet::new();
        for i in &self.instances {
            if !seen.insert(i.name.as_str()) {
                errs.push(ModelError::Duplicate {
                    scope: scope.clone(),
                    kind: "instance",
                    name: i.name.clone(),
                });
            }
        }
        let mut seen = HashSet::new();
        for c in &self.connectors {
            if !seen.insert(c.name.as_str()) {
                errs.push(ModelError::Duplicate {
                    scope: scope.clone(),
                    kind: "connector",
                    name: c.name.clone(),
                });
            }
        }
        let mut seen = HashSet::new();
        for n in self.export_names() {
            if !seen.insert(n) {
                errs.push(ModelError::Duplicate {
                    scope: scope.clone(),
                    kind: "export",
                    name: n.to_owned(),
                });
            }
        }
        for c in &self.connectors {
            errs.extend(c.check_with(|i| {
                !matches!(
                    self.find_instance(i).map(|x| &x.component),
                    Some(ComponentRef::Compound(_))
                )
            }));
            for p in &c.ports {
                if !self.port_exists(&p.port) {
                    errs.push(ModelError::Unresolved {
                        scope: format!("connector {}", c.name),
                        kind: "port",
                        name: p.port.to_string(),
                    });
                }
            }
        }
        for e in &self.exports {
            if !self.port_exists(&e.target) {
                errs.push(ModelError::DanglingExport {
                    scope: scope.clone(),
                    name: e.name.clone(),
                });
            }
        }
        for r in &self.priorities {
            let rs = format!("priority {}", r.name);
            if r.low == r.high {
                errs.push(ModelError::PrioritySelf { scope: rs.clone() });
            }
            for p in [&r.low, &r.high] {
                let ok = match p {
                    Pattern::Connector(c) => self.find_connector(c).is_some(),
                    Pattern::Port(q) => self.port_exists(q),
                };
                if !ok {
                    errs.push(ModelError::Unresolved {
                        scope: rs.clone(),
                        kind: "pattern",
                        name: p.to_string(),
                    });
                }
            }
        }
        if has_cycle(&self.priorities) {
            errs.push(ModelError::PriorityCycle { scope });
        }
        errs
    }
}

/// Cycle detection over the pattern graph `low -> high`.
pub(crate) fn has_cycle(rules: &[PriorityRule]) -> bool {
    let nodes: Vec<&Pattern> = {
        let mut v: Vec<&Pattern> = Vec::new();
        for r in rules {
            for p in [&r.low, &r.high] {
                if !v.contains(&p) {
                    v.push(p);
                }
            }
        }
        v
    };
    let idx = |p: &Pattern| nodes.iter().position(|q| *q == p).unwrap();
    let mut adj = vec![Vec::new(); nodes.len()];
    for r in rules {
        adj[idx(&r.low)].push(idx(&r.high));
    }
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state = vec![0u8; nodes.len()];
    fn dfs(n: usize, adj: &[Vec<usize>], state: &mut [u8]) -> bool {
        state[n] = 1;
        for &m in &adj[n] {
            if state[m] == 1 || (state[m] == 0 && dfs(m, adj, state)) {
                return true;
            }
        }
        state[n] = 2;
        false
    }
    (0..nodes.len()).any(|n| state[n] == 0 && dfs(n, &adj, &mut state))
}
