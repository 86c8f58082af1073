use thiserror::Error;

use super::expr::TypeError;

/// Violation of a model invariant, found while building, checking or
/// flattening. `scope` names the offending construct.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("{scope}: duplicate {kind} `{name}`")]
    Duplicate {
        scope: String,
        kind: &'static str,
        name: String,
    },
    #[error("{scope}: unresolved {kind} `{name}`")]
    Unresolved {
        scope: String,
        kind: &'static str,
        name: String,
    },
    #[error("{scope}: {error}")]
    Type { scope: String, error: TypeError },
    #[error("{scope}: invalid range or initial value for `{var}`")]
    BadRange { scope: String, var: String },
    #[error("{scope}: variable `{var}` is spelled like a symbol")]
    UppercaseVariable { scope: String, var: String },
    #[error("{scope}: one port per component: `{instance}` appears twice")]
    OnePortPerComponent { scope: String, instance: String },
    #[error("{scope}: interaction pattern is not a subset of the connector ports")]
    ClauseNotSubset { scope: String },
    #[error("{scope}: header port list differs from the define list")]
    HeaderMismatch { scope: String },
    #[error("{scope}: connector has no ports")]
    EmptyConnector { scope: String },
    #[error("{scope}: too many ports for enumeration ({count})")]
    TooManyPorts { scope: String, count: usize },
    #[error("{scope}: `{var}` is written but its component does not take part in the interaction")]
    WriteOutsideInteraction { scope: String, var: String },
    #[error("{scope}: priority rule relates a pattern to itself")]
    PrioritySelf { scope: String },
    #[error("{scope}: priority rules form a cycle")]
    PriorityCycle { scope: String },
    #[error("{scope}: export `{name}` does not resolve")]
    DanglingExport { scope: String, name: String },
    #[error("name clash after flattening: `{name}`")]
    NameClash { name: String },
    #[error("component hierarchy is cyclic through `{name}`")]
    HierarchyCycle { name: String },
    #[error("{scope}: {message}")]
    Invalid { scope: String, message: String },
}

impl ModelError {
    /// Stable diagnostic code.
    pub fn code(&self) -> &'static str {
        match self {
            ModelError::Duplicate { .. } => "E002",
            ModelError::Unresolved { .. } => "E003",
            ModelError::Type { .. } => "E004",
            ModelError::OnePortPerComponent { .. } => "E005",
            ModelError::ClauseNotSubset { .. } | ModelError::HeaderMismatch { .. } => "E006",
            ModelError::BadRange { .. } | ModelError::UppercaseVariable { .. } => "E007",
            ModelError::EmptyConnector { .. } | ModelError::TooManyPorts { .. } => "E008",
            ModelError::WriteOutsideInteraction { .. } => "E009",
            ModelError::PrioritySelf { .. } | ModelError::PriorityCycle { .. } => "E010",
            ModelError::DanglingExport { .. } => "E011",
            ModelError::NameClash { .. } => "E012",
            ModelError::HierarchyCycle { .. } => "E013",
            ModelError::Invalid { .. } => "E014",
        }
    }

    pub fn scope(&self) -> &str {
        match self {
            ModelError::Duplicate { scope, .. }
            | ModelError::Unresolved { scope, .. }
            | ModelError::Type { scope, .. }
            | ModelError::BadRange { scope, .. }
            | ModelError::UppercaseVariable { scope, .. }
            | ModelError::OnePortPerComponent { scope, .. }
            | ModelError::ClauseNotSubset { scope }
            | ModelError::HeaderMismatch { scope }
            | ModelError::EmptyConnector { scope }
            | ModelError::TooManyPorts { scope, .. }
            | ModelError::WriteOutsideInteraction { scope, .. }
            | ModelError::PrioritySelf { scope }
            | ModelError::PriorityCycle { scope }
            | ModelError::DanglingExport { scope, .. }
            | ModelError::Invalid { scope, .. } => scope,
            ModelError::NameClash { name } | ModelError::HierarchyCycle { name } => name,
        }
    }
}
