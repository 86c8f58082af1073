//! Functional-level modules built from components.
//!
//! A [`ModuleSpec`] describes a module's services, posters and task periods;
//! [`instantiate_module`] turns it into a compound of standard atoms and
//! [`compile_constraint`] turns safety rules into root-level connectors.
//! [`build_dala_mini`] assembles the reference scenarios.

mod atoms;
mod constraint;
mod dala;
mod module;
mod text;

use std::collections::HashSet;

use thiserror::Error;

pub use atoms::{
    build_activity, build_ids_lock, build_master_timer, build_message_box, build_permanent,
    build_poster, build_scheduler, build_service_controller, build_task_controller, build_timer,
    build_trig_semaphore,
};
pub use constraint::{compile_constraint, ConstraintSpec, OverlapPolicy, ServiceRef};
pub use dala::{build_dala_mini, ndd_mini, Variant};
pub use module::{
    assemble, build_inter_module_sync, build_module_sync, build_system, instantiate_module,
    instantiate_module_with, names, SyncMode,
};
pub use text::{parse_genom, GenomFile};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenomError {
    #[error("module {module}: {message}")]
    InvalidSpec { module: String, message: String },
    #[error("unresolved {kind} `{name}`")]
    Unresolved { kind: &'static str, name: String },
    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),
    #[error("{line}:{col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExecService {
    pub name: String,
    pub incompatible: Vec<String>,
    pub main_loop: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ControlService {
    pub name: String,
    pub incompatible: Vec<String>,
}

/// A poster and the age (in poster-timer periods) beyond which its data is
/// stale. Its `PosterAge` saturates one above the threshold.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PosterSpec {
    pub name: String,
    pub fresh: i64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModuleSpec {
    pub name: String,
    pub exec_services: Vec<ExecService>,
    pub control_services: Vec<ControlService>,
    pub posters: Vec<PosterSpec>,
    pub interface_period: i64,
    pub exec_period: i64,
    pub poster_period: i64,
    pub permanent: bool,
}

impl ModuleSpec {
    pub fn new(name: &str) -> Self {
        ModuleSpec {
            name: name.into(),
            exec_services: Vec::new(),
            control_services: Vec::new(),
            posters: Vec::new(),
            interface_period: 1,
            exec_period: 1,
            poster_period: 1,
            permanent: false,
        }
    }

    pub fn periods(mut self, interface: i64, exec: i64, poster: i64) -> Self {
        self.interface_period = interface;
        self.exec_period = exec;
        self.poster_period = poster;
        self
    }

    pub fn exec(mut self, name: &str, incompatible: &[&str], main_loop: bool) -> Self {
        self.exec_services.push(ExecService {
            name: name.into(),
            incompatible: incompatible.iter().map(|s| s.to_string()).collect(),
            main_loop,
        });
        self
    }

    pub fn control(mut self, name: &str, incompatible: &[&str]) -> Self {
        self.control_services.push(ControlService {
            name: name.into(),
            incompatible: incompatible.iter().map(|s| s.to_string()).collect(),
        });
        self
    }

    pub fn poster(mut self, name: &str, fresh: i64) -> Self {
        self.posters.push(PosterSpec {
            name: name.into(),
            fresh,
        });
        self
    }

    pub fn with_permanent(mut self) -> Self {
        self.permanent = true;
        self
    }

    /// Instance name of the module inside a system: the lower-cased name.
    pub fn instance_name(&self) -> String {
        self.name.to_lowercase()
    }

    /// Execution services first, then control services.
    pub fn services(&self) -> Vec<String> {
        self.exec_services
            .iter()
            .map(|s| s.name.clone())
            .chain(self.control_services.iter().map(|s| s.name.clone()))
            .collect()
    }

    pub fn is_exec(&self, service: &str) -> bool {
        self.exec_services.iter().any(|s| s.name == service)
    }

    fn declared_incompat(&self, service: &str) -> &[String] {
        self.exec_services
            .iter()
            .find(|s| s.name == service)
            .map(|s| s.incompatible.as_slice())
            .or_else(|| {
                self.control_services
                    .iter()
                    .find(|s| s.name == service)
                    .map(|s| s.incompatible.as_slice())
            })
            .unwrap_or(&[])
    }

    /// Symmetric closure of the declared incompatibilities, in service
    /// order.
    pub fn incompatible_with(&self, service: &str) -> Vec<String> {
        self.services()
            .into_iter()
            .filter(|o| {
                o != service
                    && (self.declared_incompat(service).contains(o)
                        || self.declared_incompat(o).iter().any(|x| x == service))
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), GenomError> {
        let err = |message: String| {
            Err(GenomError::InvalidSpec {
                module: self.name.clone(),
                message,
            })
        };
        if self.exec_services.is_empty() {
            return err("no execution service".into());
        }
        for (what, p) in [
            ("interface", self.interface_period),
            ("exec", self.exec_period),
            ("poster", self.poster_period),
        ] {
            if p < 1 {
                return err(format!("{what} period must be at least 1"));
            }
        }
        let mut seen = HashSet::new();
        for s in self.services() {
            if !seen.insert(s.clone()) {
                return err(format!("duplicate service `{s}`"));
            }
        }
        for s in self.services() {
            for o in self.declared_incompat(&s) {
                if o == &s {
                    return err(format!("`{s}` declared incompatible with itself"));
                }
                if !seen.contains(o) {
                    return err(format!("`{s}` declared incompatible with unknown service `{o}`"));
                }
            }
        }
        let mut posters = HashSet::new();
        for p in &self.posters {
            if !posters.insert(&p.name) {
                return err(format!("duplicate poster `{}`", p.name));
            }
            if p.fresh < 0 {
                return err(format!("poster `{}` has a negative freshness bound", p.name));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn incompatibility_is_symmetric() {
        let m = ModuleSpec::new("M")
            .exec("A", &["B"], false)
            .exec("B", &[], false)
            .control("C", &["A"]);
        assert_eq!(m.incompatible_with("A"), vec!["B", "C"]);
        assert_eq!(m.incompatible_with("B"), vec!["A"]);
        assert_eq!(m.incompatible_with("C"), vec!["A"]);
    }

    #[test]
    fn validation_failures() {
        assert!(ModuleSpec::new("M").validate().is_err());
        assert!(ModuleSpec::new("M").exec("A", &["Z"], false).validate().is_err());
        assert!(ModuleSpec::new("M")
            .exec("A", &[], false)
            .periods(0, 1, 1)
            .validate()
            .is_err());
        assert!(ModuleSpec::new("M")
            .exec("A", &[], false)
            .control("A", &[])
            .validate()
            .is_err());
        assert!(ModuleSpec::new("M").exec("A", &[], false).validate().is_ok());
    }
}
