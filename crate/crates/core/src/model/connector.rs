//! Connectors: port sets with trigger markings and guarded interaction clauses.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::error::ModelError;
use super::expr::{Action, Expr};

/// A qualified port `instance.port`, where `port` may also name an export of
/// a compound instance.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QPort {
    pub instance: String,
    pub port: String,
}

impl QPort {
    pub fn new(instance: &str, port: &str) -> Self {
        QPort {
            instance: instance.into(),
            port: port.into(),
        }
    }

    /// Parses `a.b`; the last segment is the port.
    pub fn parse(s: &str) -> Option<QPort> {
        let (i, p) = s.rsplit_once('.')?;
        Some(QPort::new(i, p))
    }
}

impl fmt::Display for QPort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.instance, self.port)
    }
}

/// A port in a connector's `define` list. Ports sharing a `unit` were
/// written as one bracket group: they fire together or not at all, and
/// share one trigger marking.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectorPort {
    pub port: QPort,
    pub trigger: bool,
    pub unit: u32,
}

/// `on α provided Gα do Fα`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clause {
    pub ports: Vec<QPort>,
    pub guard: Expr,
    pub action: Action,
}

impl Clause {
    pub fn new(ports: Vec<QPort>) -> Self {
        Clause {
            ports,
            guard: Expr::truth(),
            action: Vec::new(),
        }
    }

    pub fn guard(mut self, g: Expr) -> Self {
        self.guard = g;
        self
    }

    pub fn action(mut self, a: Action) -> Self {
        self.action = a;
        self
    }
}

/// A set of ports firing together, listed in connector port order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interaction(pub Vec<QPort>);

impl fmt::Display for Interaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// Connectors with more ports than this are rejected; subset enumeration is
/// exponential in the port count.
pub const MAX_CONNECTOR_PORTS: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Connector {
    pub name: String,
    pub ports: Vec<ConnectorPort>,
    pub clauses: Vec<Clause>,
    pub export: Option<String>,
}

impl Connector {
    /// Strong synchronisation over all `ports`.
    pub fn rendezvous(name: &str, ports: impl IntoIterator<Item = QPort>) -> Self {
        Connector {
            name: name.into(),
            ports: ports
                .into_iter()
                .enumerate()
                .map(|(i, port)| ConnectorPort {
                    port,
                    trigger: false,
                    unit: i as u32,
                })
                .collect(),
            clauses: Vec::new(),
            export: None,
        }
    }

    /// Broadcast: `triggers` initiate, `others` join when they can.
    pub fn broadcast(
        name: &str,
        triggers: impl IntoIterator<Item = QPort>,
        others: impl IntoIterator<Item = QPort>,
    ) -> Self {
        let mut ports: Vec<ConnectorPort> = triggers
            .into_iter()
            .map(|port| ConnectorPort {
                port,
                trigger: true,
                unit: 0,
            })
            .collect();
        ports.extend(others.into_iter().map(|port| ConnectorPort {
            port,
            trigger: false,
            unit: 0,
        }));
        for (i, p) in ports.iter_mut().enumerate() {
            p.unit = i as u32;
        }
        Connector {
            name: name.into(),
            ports,
            clauses: Vec::new(),
            export: None,
        }
    }

    /// Every nonempty subset of `ports` is feasible.
    pub fn unrestricted(name: &str, ports: impl IntoIterator<Item = QPort>) -> Self {
        Connector::broadcast(name, ports, [])
    }

    /// Connector over bracket groups: each `(ports, trigger)` fires as a
    /// whole.
    pub fn grouped(name: &str, units: impl IntoIterator<Item = (Vec<QPort>, bool)>) -> Self {
        let mut ports = Vec::new();
        for (u, (group, trigger)) in units.into_iter().enumerate() {
            ports.extend(group.into_iter().map(|port| ConnectorPort {
                port,
                trigger,
                unit: u as u32,
            }));
        }
        Connector {
            name: name.into(),
            ports,
            clauses: Vec::new(),
            export: None,
        }
    }

    pub fn clause(mut self, c: Clause) -> Self {
        self.clauses.push(c);
        self
    }

    pub fn exported(mut self, as_name: &str) -> Self {
        self.export = Some(as_name.into());
        self
    }

    pub fn is_rendezvous(&self) -> bool {
        !self.ports.iter().any(|p| p.trigger)
    }

    pub fn port_position(&self, q: &QPort) -> Option<usize> {
        self.ports.iter().position(|p| &p.port == q)
    }

    fn full_mask(&self) -> u64 {
        (1u64 << self.ports.len()) - 1
    }

    fn trigger_mask(&self) -> u64 {
        self.ports
            .iter()
            .enumerate()
            .filter(|(_, p)| p.trigger)
            .fold(0, |m, (i, _)| m | (1 << i))
    }

    fn unit_masks(&self) -> Vec<u64> {
        let mut units: Vec<(u32, u64)> = Vec::new();
        for (i, p) in self.ports.iter().enumerate() {
            match units.iter_mut().find(|(u, _)| *u == p.unit) {
                Some((_, m)) => *m |= 1 << i,
                None => units.push((p.unit, 1 << i)),
            }
        }
        units.into_iter().map(|(_, m)| m).collect()
    }

    /// Whether `mask` is allowed by the groups and trigger markings alone.
    pub fn rule_feasible(&self, mask: u64) -> bool {
        if mask == 0 || mask & !self.full_mask() != 0 {
            return false;
        }
        if self
            .unit_masks()
            .iter()
            .any(|&u| mask & u != 0 && mask & u != u)
        {
            return false;
        }
        if self.is_rendezvous() {
            mask == self.full_mask()
        } else {
            mask & self.trigger_mask() != 0
        }
    }

    pub fn mask_of(&self, ports: &[QPort]) -> Option<u64> {
        ports.iter().try_fold(0u64, |m, q| {
            self.port_position(q).map(|i| m | (1 << i))
        })
    }

    pub fn interaction_of(&self, mask: u64) -> Interaction {
        Interaction(
            self.ports
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, p)| p.port.clone())
                .collect(),
        )
    }

    /// Feasible interactions as bit masks over `ports`, in lexicographic
    /// order of their port-index lists.
    pub fn feasible_masks(&self) -> Vec<u64> {
        let n = self.ports.len();
        if n == 0 || n > MAX_CONNECTOR_PORTS {
            return Vec::new();
        }
        let mut masks: Vec<u64> = if self.clauses.is_empty() {
            if self.is_rendezvous() {
                vec![self.full_mask()]
            } else {
                (1..=self.full_mask()).filter(|&m| self.rule_feasible(m)).collect()
            }
        } else {
            let mut v: Vec<u64> = self
                .clauses
                .iter()
                .filter_map(|c| self.mask_of(&c.ports))
                .filter(|&m| self.rule_feasible(m))
                .collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        masks.sort_by_key(|&m| lex_key(m, n));
        masks
    }

    pub fn feasible_interactions(&self) -> Vec<Interaction> {
        self.feasible_masks()
            .into_iter()
            .map(|m| self.interaction_of(m))
            .collect()
    }

    /// Structural invariants that do not need the enclosing compound. Every
    /// instance is assumed atomic.
    pub fn check(&self) -> Vec<ModelError> {
        self.check_with(|_| true)
    }

    /// As [`Connector::check`]; two ports of one instance are only an error
    /// when `is_atomic` holds for it. Distinct exports of a compound may
    /// share a connector.
    pub fn check_with(&self, is_atomic: impl Fn(&str) -> bool) -> Vec<ModelError> {
        let scope = format!("connector {}", self.name);
        let mut errs = Vec::new();
        if self.ports.is_empty() {
            errs.push(ModelError::EmptyConnector { scope: scope.clone() });
        }
        if self.ports.len() > MAX_CONNECTOR_PORTS {
            errs.push(ModelError::TooManyPorts {
                scope: scope.clone(),
                count: self.ports.len(),
            });
        }
        for (i, p) in self.ports.iter().enumerate() {
            if self.ports[..i].iter().any(|q| q.port == p.port) {
                errs.push(ModelError::Duplicate {
                    scope: scope.clone(),
                    kind: "port",
                    name: p.port.to_string(),
                });
            } else if self.ports[..i]
                .iter()
                .any(|q| q.port.instance == p.port.instance)
                && is_atomic(&p.port.instance)
            {
                errs.push(ModelError::OnePortPerComponent {
                    scope: scope.clone(),
                    instance: p.port.instance.clone(),
                });
            }
        }
        for (i, p) in self.ports.iter().enumerate() {
            let prev = &self.ports[..i];
            let split = prev.iter().any(|q| q.unit == p.unit)
                && prev.last().map(|q| q.unit) != Some(p.unit);
            let mixed = prev.iter().any(|q| q.unit == p.unit && q.trigger != p.trigger);
            if split || mixed {
                errs.push(ModelError::Invalid {
                    scope: scope.clone(),
                    message: format!("port group of `{}` is split or inconsistently marked", p.port),
                });
            }
        }
        for c in &self.clauses {
            if self.mask_of(&c.ports).is_none() || c.ports.is_empty() {
                errs.push(ModelError::ClauseNotSubset { scope: scope.clone() });
            }
        }
        errs
    }
}

fn lex_key(mask: u64, n: usize) -> Vec<usize> {
    (0..n).filter(|i| mask & (1 << i) != 0).collect()
}
