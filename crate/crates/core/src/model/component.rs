//! Atomic components: ports, locations, variables and guarded transitions.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::error::ModelError;
use super::expr::{Action, Assign, EvalError, Expr, LocPath, Path, TypeError};
use super::value::{Type, Value};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarDecl {
    pub name: String,
    pub ty: Type,
    pub init: Value,
    /// Inclusive bounds for `int` variables; required by the verifier for
    /// every variable that can influence a guard.
    pub range: Option<(i64, i64)>,
}

impl VarDecl {
    pub fn int(name: &str, init: i64) -> Self {
        VarDecl {
            name: name.into(),
            ty: Type::Int,
            init: Value::Int(init),
            range: None,
        }
    }

    pub fn ranged(name: &str, init: i64, lo: i64, hi: i64) -> Self {
        VarDecl {
            range: Some((lo, hi)),
            ..VarDecl::int(name, init)
        }
    }

    pub fn boolean(name: &str, init: bool) -> Self {
        VarDecl {
            name: name.into(),
            ty: Type::Bool,
            init: Value::Bool(init),
            range: None,
        }
    }

    pub fn symbol(name: &str, init: &str) -> Self {
        VarDecl {
            name: name.into(),
            ty: Type::Sym,
            init: Value::sym(init),
            range: None,
        }
    }

    pub fn in_range(&self, v: Value) -> bool {
        match (self.range, v) {
            (Some((lo, hi)), Value::Int(i)) => lo <= i && i <= hi,
            _ => true,
        }
    }
}

/// `(source, port, guard, action, target)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub from: String,
    pub port: String,
    pub guard: Expr,
    pub action: Action,
    pub to: String,
}

impl Transition {
    pub fn new(from: &str, port: &str, to: &str) -> Self {
        Transition {
            from: from.into(),
            port: port.into(),
            guard: Expr::truth(),
            action: Vec::new(),
            to: to.into(),
        }
    }

    pub fn guard(mut self, g: Expr) -> Self {
        self.guard = g;
        self
    }

    pub fn assign(mut self, var: &str, value: Expr) -> Self {
        self.action.push(Assign::new(Path::single(var), value));
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomicComponent {
    pub name: String,
    pub ports: Vec<String>,
    pub locations: Vec<String>,
    pub variables: Vec<VarDecl>,
    pub initial: String,
    pub transitions: Vec<Transition>,
}

impl AtomicComponent {
    pub fn new(name: &str, initial: &str) -> Self {
        AtomicComponent {
            name: name.into(),
            ports: Vec::new(),
            locations: vec![initial.into()],
            variables: Vec::new(),
            initial: initial.into(),
            transitions: Vec::new(),
        }
    }

    pub fn port(mut self, p: &str) -> Self {
        self.ports.push(p.into());
        self
    }

    pub fn ports<'a>(mut self, ps: impl IntoIterator<Item = &'a str>) -> Self {
        self.ports.extend(ps.into_iter().map(String::from));
        self
    }

    pub fn location(mut self, l: &str) -> Self {
        if !self.locations.iter().any(|x| x == l) {
            self.locations.push(l.into());
        }
        self
    }

    pub fn var(mut self, v: VarDecl) -> Self {
        self.variables.push(v);
        self
    }

    pub fn transition(mut self, t: Transition) -> Self {
        for l in [&t.from, &t.to] {
            if !self.locations.iter().any(|x| x == l) {
                self.locations.push(l.clone());
            }
        }
        self.transitions.push(t);
        self
    }

    pub fn port_index(&self, p: &str) -> Option<usize> {
        self.ports.iter().position(|x| x == p)
    }

    pub fn location_index(&self, l: &str) -> Option<usize> {
        self.locations.iter().position(|x| x == l)
    }

    pub fn var_index(&self, v: &str) -> Option<usize> {
        self.variables.iter().position(|x| x.name == v)
    }

    pub fn var_decl(&self, v: &str) -> Option<&VarDecl> {
        self.variables.iter().find(|x| x.name == v)
    }

    fn local_type(&self, p: &Path) -> Option<Type> {
        if p.is_single() {
            self.var_decl(&p.0[0]).map(|d| d.ty)
        } else {
            None
        }
    }

    /// Checks the structural and typing invariants of the component.
    pub fn check(&self) -> Vec<ModelError> {
        let mut errs = Vec::new();
        let comp = &self.name;
        let mut dup = |kind: &'static str, names: &mut dyn Iterator<Item = &String>| {
            let mut seen = HashSet::new();
            for n in names {
                if !seen.insert(n.clone()) {
                    errs.push(ModelError::Duplicate {
                        scope: comp.clone(),
                        kind,
                        name: n.clone(),
                    });
                }
            }
        };
        dup("port", &mut self.ports.iter());
        dup("location", &mut self.locations.iter());
        dup("variable", &mut self.variables.iter().map(|v| &v.name));

        if self.location_index(&self.initial).is_none() {
            errs.push(ModelError::Unresolved {
                scope: comp.clone(),
                kind: "location",
                name: self.initial.clone(),
            });
        }
        for v in &self.variables {
            if v.init.ty() != v.ty {
                errs.push(ModelError::Type {
                    scope: format!("{comp}.{}", v.name),
                    error: TypeError::Mismatch {
                        op: ":=",
                        expected: type_word(v.ty),
                        found: v.init.ty(),
                    },
                });
            }
            if let Some((lo, hi)) = v.range {
                if v.ty != Type::Int || lo > hi || !v.in_range(v.init) {
                    errs.push(ModelError::BadRange {
                        scope: comp.clone(),
                        var: v.name.clone(),
                    });
                }
            }
            if is_symbol_spelling(&v.name) {
                errs.push(ModelError::UppercaseVariable {
                    scope: comp.clone(),
                    var: v.name.clone(),
                });
            }
        }

        let no_loc = |_: &LocPath| Err(TypeError::LocationTest);
        let tyf = |p: &Path| self.local_type(p);
        for (i, t) in self.transitions.iter().enumerate() {
            let site = format!("{comp}: transition #{i} ({} -{}-> {})", t.from, t.port, t.to);
            for (kind, name) in [("location", &t.from), ("location", &t.to), ("port", &t.port)] {
                let ok = if kind == "port" {
                    self.port_index(name).is_some()
                } else {
                    self.location_index(name).is_some()
                };
                if !ok {
                    errs.push(ModelError::Unresolved {
                        scope: site.clone(),
                        kind,
                        name: name.clone(),
                    });
                }
            }
            match t.guard.type_of(&tyf, &no_loc) {
                Ok(Type::Bool) => {}
                Ok(other) => errs.push(ModelError::Type {
                    scope: site.clone(),
                    error: TypeError::Mismatch {
                        op: "provided",
                        expected: "bool",
                        found: other,
                    },
                }),
                Err(error) => errs.push(ModelError::Type {
                    scope: site.clone(),
                    error,
                }),
            }
            for a in &t.action {
                let Some(target_ty) = self.local_type(&a.target) else {
                    errs.push(ModelError::Type {
                        scope: site.clone(),
                        error: TypeError::UnknownVariable(a.target.to_string()),
                    });
                    continue;
                };
                match a.value.type_of(&tyf, &no_loc) {
                    Ok(t) if t == target_ty => {}
                    Ok(t) => errs.push(ModelError::Type {
                        scope: site.clone(),
                        error: TypeError::Mismatch {
                            op: ":=",
                            expected: type_word(target_ty),
                            found: t,
                        },
                    }),
                    Err(error) => errs.push(ModelError::Type {
                        scope: site.clone(),
                        error,
                    }),
                }
            }
        }
        errs
    }

    /// Ports offered at `loc` under `env`: those with a transition from `loc`
    /// whose guard holds.
    pub fn offered_ports(
        &self,
        loc: &str,
        env: &HashMap<String, Value>,
    ) -> Result<Vec<String>, EvalError> {
        let mut out: Vec<String> = Vec::new();
        for t in self.transitions.iter().filter(|t| t.from == loc) {
            if t.guard.eval(env)? == Value::Bool(true) && !out.contains(&t.port) {
                out.push(t.port.clone());
            }
        }
        out.sort_by_key(|p| self.port_index(p));
        Ok(out)
    }

    /// Initial valuation, keyed by variable name.
    pub fn initial_env(&self) -> HashMap<String, Value> {
        self.variables
            .iter()
            .map(|v| (v.name.clone(), v.init))
            .collect()
    }

    /// Locations reachable from the initial one ignoring guards.
    pub fn structurally_reachable(&self) -> HashSet<&str> {
        let mut seen: HashSet<&str> = HashSet::new();
        let mut stack = vec![self.initial.as_str()];
        while let Some(l) = stack.pop() {
            if !seen.insert(l) {
                continue;
            }
            for t in self.transitions.iter().filter(|t| t.from == l) {
                stack.push(&t.to);
            }
        }
        seen
    }
}

fn type_word(t: Type) -> &'static str {
    match t {
        Type::Int => "int",
        Type::Bool => "bool",
        Type::Sym => "sym",
    }
}

/// Bare upper-case identifiers are symbol literals, so variables may not be
/// spelled that way.
pub fn is_symbol_spelling(name: &str) -> bool {
    name.chars().any(|c| c.is_ascii_uppercase())
        && !name.chars().any(|c| c.is_ascii_lowercase())
}
