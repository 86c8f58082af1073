//! Component model: values, expressions, atomic and compound components,
//! connectors, priorities and the flattened system.

pub mod component;
pub mod compound;
pub mod connector;
pub mod error;
pub mod expr;
pub mod flatten;
pub mod system;
pub mod value;

pub use component::{AtomicComponent, Transition, VarDecl};
pub use compound::{ComponentRef, CompoundComponent, Instance, Pattern, PortExport, PriorityRule};
pub use connector::{Clause, Connector, ConnectorPort, Interaction, QPort};
pub use error::ModelError;
pub use expr::{Action, Assign, BinOp, EvalError, Expr, InstLoc, LocPath, Path, Slot, SlotExpr, UnOp};
pub use flatten::{flatten, flatten_compound};
pub use system::{
    Enabled, FlatConnector, FlatInstance, FlatInteraction, FlatPattern, FlatPort, FlatPriority,
    GlobalState, StateEnv, SystemModel,
};
pub use value::{Symbol, Type, Value};
