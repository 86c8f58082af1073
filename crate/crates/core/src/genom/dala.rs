//! Reduced robot scenarios: the two timer-synchronisation deadlocks, the
//! stale-poster deadlock with its two fixes, and the battery budget.

use std::fmt;
use std::str::FromStr;

use super::atoms::ex;
use super::constraint::{compile_constraint, ConstraintSpec, ServiceRef};
use super::module::{assemble, instantiate_module_with, names, SyncMode};
use super::ModuleSpec;
use crate::model::{
    Assign, AtomicComponent, Clause, CompoundComponent, Connector, ConnectorPort, Expr, Instance,
    Path, QPort, Transition, VarDecl,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    Fig11Bug,
    Fig11Fixed,
    Fig12Bug,
    Fig12Fix1,
    Fig12Fixed,
    BatteryUnsafe,
    BatterySafe,
}

impl Variant {
    pub const ALL: [Variant; 7] = [
        Variant::Fig11Bug,
        Variant::Fig11Fixed,
        Variant::Fig12Bug,
        Variant::Fig12Fix1,
        Variant::Fig12Fixed,
        Variant::BatteryUnsafe,
        Variant::BatterySafe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Fig11Bug => "fig11-bug",
            Variant::Fig11Fixed => "fig11-fixed",
            Variant::Fig12Bug => "fig12-bug",
            Variant::Fig12Fix1 => "fig12-fix1",
            Variant::Fig12Fixed => "fig12-fixed",
            Variant::BatteryUnsafe => "battery-unsafe",
            Variant::BatterySafe => "battery-safe",
        }
    }

    /// The property checked by default: `None` means deadlock freedom.
    pub fn bad_state(self) -> Option<&'static str> {
        match self {
            Variant::BatteryUnsafe | Variant::BatterySafe => Some(BATTERY_BAD),
            _ => None,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| {
                let known: Vec<&str> = Variant::ALL.iter().map(|v| v.name()).collect();
                format!("unknown variant `{s}` (expected one of {})", known.join(", "))
            })
    }
}

pub const BATTERY_BAD: &str = "battery.FIDS.totalPwr > battery.init.maxPwr";

/// Navigation module: two parameter services, a looping `GoTo` that is
/// incompatible with `Init`, and the `Stop` control service.
pub fn ndd_mini() -> ModuleSpec {
    ModuleSpec::new("NDD")
        .exec("SetParams", &[], false)
        .exec("SetSpeed", &[], false)
        .exec("GoTo", &["Init"], true)
        .exec("Init", &[], false)
        .control("Stop", &[])
        .periods(1, 1, 1)
}

/// Navigation module for the timer deadlock: `GoTo` is aborted by `Init`
/// and `Stop`, and the tasks run at period 2.
fn ndd_sync() -> ModuleSpec {
    ModuleSpec::new("NDD")
        .exec("SetParams", &[], false)
        .exec("GoTo", &["Init", "Stop"], true)
        .exec("Init", &[], false)
        .control("Stop", &[])
        .periods(2, 2, 1)
}

fn ndd_permanent() -> ModuleSpec {
    ModuleSpec::new("NDD")
        .exec("GoTo", &[], true)
        .with_permanent()
        .periods(1, 1, 1)
}

fn aspect() -> ModuleSpec {
    ModuleSpec::new("Aspect")
        .exec("Scan", &[], false)
        .poster("Polar", 5)
        .periods(1, 1, 1)
}

const DEVICES: [(&str, i64); 2] = [("CameraStartUsingBattery", 4), ("HeaterStartUsingBattery", 3)];
const MAX_PWR: i64 = 6;

fn battery() -> ModuleSpec {
    DEVICES
        .iter()
        .fold(ModuleSpec::new("Battery"), |m, (d, _)| m.exec(d, &[], false))
        .periods(1, 1, 1)
}

fn q(i: &str, p: &str) -> QPort {
    QPort::new(i, p)
}

/// Adds `port` to every interaction of `c`, appending `action`.
fn join_port(c: &mut Connector, port: QPort, action: Vec<Assign>) {
    c.ports.push(ConnectorPort {
        port: port.clone(),
        trigger: false,
        unit: c.ports.len() as u32,
    });
    if c.clauses.is_empty() {
        let all = c.ports.iter().map(|p| p.port.clone()).collect();
        c.clauses.push(Clause::new(all).action(action));
    } else {
        for cl in &mut c.clauses {
            cl.ports.push(port.clone());
            cl.action.extend(action.iter().cloned());
        }
    }
}

/// The battery module with its power accounting: `FIDS.totalPwr` grows
/// when a device's service is triggered and shrinks when it ends.
fn battery_module() -> CompoundComponent {
    let spec = battery();
    let mut c = instantiate_module_with(&spec, SyncMode::OptionalInterface).expect("battery spec");
    let total: i64 = DEVICES.iter().map(|d| d.1).sum();
    let fids = AtomicComponent::new("FIDS", "ready")
        .port("use")
        .var(VarDecl::ranged("totalPwr", 0, 0, total))
        .transition(Transition::new("ready", "use", "ready"));
    let init = AtomicComponent::new("BatteryInit", "ready").var(VarDecl::ranged("maxPwr", MAX_PWR, 0, total));
    c = c.instance(Instance::new("FIDS", fids)).instance(Instance::new("init", init));
    for (d, p) in DEVICES {
        let delta = |sign: &str| {
            vec![Assign::new(
                Path::parse("FIDS.totalPwr"),
                ex(&format!("FIDS.totalPwr {sign} {p}")),
            )]
        };
        for (conn, sign) in [("Trig", "+"), ("Fin", "-"), ("Inter", "-")] {
            let k = c.find_connector_mut(&format!("{conn}_{d}")).expect("template connector");
            join_port(k, q("FIDS", "use"), delta(sign));
        }
    }
    c
}

fn fig11(mode: SyncMode) -> CompoundComponent {
    let spec = ndd_sync();
    let m = instantiate_module_with(&spec, mode).expect("ndd spec");
    assemble("Dala", vec![(spec, m)], vec![])
}

fn fig12(v: Variant) -> CompoundComponent {
    let (nspec, aspec) = (ndd_permanent(), aspect());
    let mut ndd = instantiate_module_with(&nspec, SyncMode::OptionalInterface).expect("ndd spec");
    ndd.connectors.retain(|c| c.name != names::PERM_START);
    let asp = instantiate_module_with(&aspec, SyncMode::OptionalInterface).expect("aspect spec");
    let age = ex("aspect.PolarPoster.PosterAge");
    let read = q("aspect", &names::poster_read("Polar"));
    let lock = q("ndd", "Lock.take");
    let perm_start = Connector::rendezvous(
        "PermStartRead",
        [q("ndd", "Scheduler.permstart"), q("ndd", "Permanent.start"), read.clone(), lock.clone()],
    );
    let perm_start = super::module::guarded(perm_start, Expr::bin(crate::model::BinOp::Lt, age.clone(), Expr::int(5)), vec![]);
    let stale = Expr::bin(crate::model::BinOp::Ge, age, Expr::int(5));
    let group = vec![q("ndd", "Scheduler.permanentexec"), q("ndd", "Permanent.exec"), read, lock];
    let abort = q("ndd", &names::abt("GoTo"));
    let mut root = assemble("Dala", vec![(nspec, ndd), (aspec, asp)], vec![]);
    // Nobody requests Aspect services here; it is only stopped.
    root.connectors.retain(|c| !c.name.starts_with("aspect_"));
    let mut root = root
        .connector(perm_start)
        .connector(Connector::rendezvous("AspectStop", [q("aspect", names::STOP)]));
    match v {
        Variant::Fig12Fix1 => {
            let c = Connector::rendezvous("GoToAbortNonFreshData", group.into_iter().chain([abort]));
            root = root.connector(super::module::guarded(c, stale, vec![]));
        }
        Variant::Fig12Fixed => {
            let mut with_abort = group.clone();
            with_abort.push(abort.clone());
            let c = Connector::grouped("GoToAbortNonFreshData", [(group.clone(), true), (vec![abort], false)])
                .clause(Clause::new(group).guard(stale.clone()))
                .clause(Clause::new(with_abort).guard(stale));
            root = root.connector(c);
        }
        _ => {}
    }
    root
}

fn battery_system(safe: bool) -> CompoundComponent {
    let spec = battery();
    let constraints: Vec<ConstraintSpec> = if safe {
        DEVICES
            .iter()
            .map(|(d, p)| ConstraintSpec::Budget {
                target: ServiceRef::new("battery", d),
                counter: Path::parse("battery.FIDS.totalPwr"),
                increment: Expr::int(*p),
                limit: Path::parse("battery.init.maxPwr"),
                report: "MAX-PWR-EXCEEDED".into(),
            })
            .collect()
    } else {
        vec![]
    };
    let mut conns = Vec::new();
    for c in &constraints {
        conns.extend(compile_constraint(c, std::slice::from_ref(&spec)).expect("battery constraint"));
    }
    assemble("Dala", vec![(spec, battery_module())], conns)
}

/// The root compound of a scenario.
pub fn build_dala_mini(v: Variant) -> CompoundComponent {
    match v {
        Variant::Fig11Bug => fig11(SyncMode::Strong),
        Variant::Fig11Fixed => fig11(SyncMode::OptionalInterface),
        Variant::Fig12Bug | Variant::Fig12Fix1 | Variant::Fig12Fixed => fig12(v),
        Variant::BatteryUnsafe => battery_system(false),
        Variant::BatterySafe => battery_system(true),
    }
}
