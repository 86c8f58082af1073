//! Textual component language: lexer, parser, printer and validator.
//!
//! Files hold atomic `component` definitions, `compound` definitions and an
//! optional `root NAME` line. Connectors and priorities written outside any
//! compound belong to the root compound.

pub(crate) mod lexer;
pub(crate) mod parser;
mod printer;
mod validate;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::model::{
    flatten, AtomicComponent, ComponentRef, CompoundComponent, ModelError, SystemModel,
};

pub use parser::{parse_connector, parse_expr, parse_unchecked};
pub use printer::{print, print_connector, print_expr};
pub use validate::validate;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub line: usize,
    pub col: usize,
    pub code: &'static str,
    pub message: String,
}

impl Diagnostic {
    pub fn error(code: &'static str, line: usize, col: usize, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            line,
            col,
            code,
            message: message.into(),
        }
    }

    pub fn warning(code: &'static str, line: usize, col: usize, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            ..Diagnostic::error(code, line, col, message)
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    /// `file:line:col: severity[CODE]: message`.
    pub fn render(&self, file: &str) -> String {
        format!("{file}:{self}")
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(
            f,
            "{}:{}: {sev}[{}]: {}",
            self.line, self.col, self.code, self.message
        )
    }
}

/// Source positions keyed by the scope strings that [`ModelError`] uses.
/// Ignored by equality so that printed and reparsed models compare equal.
#[derive(Clone, Debug, Default)]
pub struct Spans(HashMap<String, (usize, usize)>);

impl PartialEq for Spans {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Spans {
    pub(crate) fn insert(&mut self, key: String, at: (usize, usize)) {
        self.0.entry(key).or_insert(at);
    }

    pub fn get(&self, key: &str) -> Option<(usize, usize)> {
        self.0.get(key).copied()
    }

    /// Best position for a model error's scope: exact key, then the part
    /// before ` (` or `:`, then the last dotted segment of `kind a.b.c`.
    pub fn locate(&self, scope: &str) -> Option<(usize, usize)> {
        let mut keys = vec![scope.to_owned()];
        if let Some((head, _)) = scope.split_once(" (") {
            keys.push(head.to_owned());
        }
        if let Some((head, _)) = scope.split_once(':') {
            keys.push(head.to_owned());
        }
        if let Some((kind, name)) = scope.split_once(' ') {
            if let Some((_, last)) = name.rsplit_once('.') {
                keys.push(format!("{kind} {last}"));
            }
        }
        if let Some((head, _)) = scope.split_once('.') {
            keys.push(head.to_owned());
        }
        keys.iter().find_map(|k| self.get(k))
    }
}

/// A parsed file: definitions in source order and the designated root.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceModel {
    pub atomics: Vec<Arc<AtomicComponent>>,
    pub compounds: Vec<Arc<CompoundComponent>>,
    pub root: String,
    pub spans: Spans,
}

impl SourceModel {
    /// Collects every component type reachable from `root`, dependencies
    /// first. Fails if two different types share a name.
    pub fn from_root(root: &ComponentRef) -> Result<SourceModel, String> {
        let mut m = SourceModel {
            atomics: Vec::new(),
            compounds: Vec::new(),
            root: root.type_name().to_owned(),
            spans: Spans::default(),
        };
        m.collect(root)?;
        Ok(m)
    }

    fn collect(&mut self, c: &ComponentRef) -> Result<(), String> {
        match c {
            ComponentRef::Atomic(a) => {
                if let Some(prev) = self.atomics.iter().find(|p| p.name == a.name) {
                    if **prev != **a {
                        return Err(format!("two different components named `{}`", a.name));
                    }
                } else if self.compounds.iter().any(|p| p.name == a.name) {
                    return Err(format!("two different components named `{}`", a.name));
                } else {
                    self.atomics.push(a.clone());
                }
            }
            ComponentRef::Compound(k) => {
                if let Some(prev) = self.compounds.iter().find(|p| p.name == k.name) {
                    if **prev != **k {
                        return Err(format!("two different compounds named `{}`", k.name));
                    }
                    return Ok(());
                }
                if self.atomics.iter().any(|p| p.name == k.name) {
                    return Err(format!("two different components named `{}`", k.name));
                }
                for i in &k.instances {
                    self.collect(&i.component)?;
                }
                self.compounds.push(k.clone());
            }
        }
        Ok(())
    }

    pub fn lookup(&self, name: &str) -> Option<ComponentRef> {
        self.compounds
            .iter()
            .find(|c| c.name == name)
            .map(|c| ComponentRef::Compound(c.clone()))
            .or_else(|| {
                self.atomics
                    .iter()
                    .find(|a| a.name == name)
                    .map(|a| ComponentRef::Atomic(a.clone()))
            })
    }

    pub fn root_component(&self) -> Option<ComponentRef> {
        self.lookup(&self.root)
    }

    pub fn to_system(&self) -> Result<SystemModel, Vec<ModelError>> {
        let root = self.root_component().ok_or_else(|| {
            vec![ModelError::Unresolved {
                scope: "root".into(),
                kind: "component",
                name: self.root.clone(),
            }]
        })?;
        flatten(&root)
    }
}

/// Parses and validates `src`; any error-severity diagnostic fails.
pub fn parse(src: &str) -> Result<SourceModel, Vec<Diagnostic>> {
    let m = parse_unchecked(src)?;
    let errs: Vec<Diagnostic> = validate(&m).into_iter().filter(|d| d.is_error()).collect();
    if errs.is_empty() {
        Ok(m)
    } else {
        Err(errs)
    }
}

/// Parses, validates and flattens `src`, returning warnings alongside.
pub fn load(src: &str) -> Result<(SystemModel, Vec<Diagnostic>), Vec<Diagnostic>> {
    let m = parse_unchecked(src)?;
    let diags = validate(&m);
    if diags.iter().any(|d| d.is_error()) {
        return Err(diags);
    }
    let sys = m.to_system().map_err(|errs| {
        errs.iter()
            .map(|e| {
                let (l, c) = m.spans.locate(e.scope()).unwrap_or((1, 1));
                Diagnostic::error(e.code(), l, c, e.to_string())
            })
            .collect::<Vec<_>>()
    })?;
    Ok((sys, diags))
}
