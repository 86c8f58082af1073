//! The module template and system assembly.

use std::collections::HashSet;
use std::sync::Arc;

use super::atoms::*;
use super::constraint::{compile_constraint, ConstraintSpec};
use super::{GenomError, ModuleSpec};
use crate::model::{
    Action, AtomicComponent, Clause, ComponentRef, CompoundComponent, Connector, Expr, Instance,
    Pattern, QPort,
};

/// Instance, connector and export names shared by the template, the
/// constraint compiler and the scenarios.
pub mod names {
    use super::ModuleSpec;

    pub const MESSAGE_BOX: &str = "MessageBox";
    pub const INTERFACE_TIMER: &str = "interfaceTimer";
    pub const EXEC_TIMER: &str = "execTaskTimer";
    pub const SCHEDULER: &str = "Scheduler";
    pub const TASK_CONTROLLER: &str = "TaskController";
    pub const PERMANENT: &str = "Permanent";
    pub const LOCK: &str = "Lock";
    pub const MASTER_TIMER: &str = "masterTimer";
    pub const TRIG_SEMAPHORE: &str = "trigSemaphore";

    pub const MODULE_TICK: &str = "moduleTick";
    pub const READ: &str = "read";
    pub const GIVE: &str = "give";
    pub const STOP: &str = "stop";
    pub const ERR: &str = "err";
    pub const PERM_START: &str = "PermStart";

    pub fn trig(s: &str) -> String {
        format!("trig_{s}")
    }
    pub fn rej(s: &str) -> String {
        format!("rej_{s}")
    }
    pub fn abt_inc(s: &str) -> String {
        format!("abtInc_{s}")
    }
    pub fn abt(s: &str) -> String {
        format!("abt_{s}")
    }
    pub fn stat(s: &str) -> String {
        format!("stat_{s}")
    }
    pub fn activity(s: &str) -> String {
        format!("{s}Activity")
    }
    pub fn poster(p: &str) -> String {
        format!("{p}Poster")
    }
    pub fn poster_read(p: &str) -> String {
        format!("{p}Poster.read")
    }
    /// `posterTimer` when the module has one poster.
    pub fn poster_timer(m: &ModuleSpec, p: &str) -> String {
        if m.posters.len() == 1 {
            "posterTimer".into()
        } else {
            format!("posterTimer_{p}")
        }
    }
}

use names::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SyncMode {
    /// All timer ticks of the module in one rendezvous.
    Strong,
    /// Execution and poster timers tick together; the interface timer joins
    /// when it can.
    OptionalInterface,
}

fn q(i: &str, p: &str) -> QPort {
    QPort::new(i, p)
}

/// Attaches a guard and action to the full interaction of a rendezvous.
pub(crate) fn guarded(c: Connector, guard: Expr, action: Action) -> Connector {
    if guard.is_true_const() && action.is_empty() {
        return c;
    }
    let all = c.ports.iter().map(|p| p.port.clone()).collect();
    c.clause(Clause::new(all).guard(guard).action(action))
}

/// The module tick connector, exported as `moduleTick`.
pub fn build_module_sync(m: &ModuleSpec, mode: SyncMode) -> Connector {
    let mut core = vec![q(EXEC_TIMER, "tick")];
    core.extend(m.posters.iter().map(|p| q(&poster_timer(m, &p.name), "tick")));
    let iface = q(INTERFACE_TIMER, "tick");
    let c = match mode {
        SyncMode::Strong => Connector::rendezvous("ModuleSync", std::iter::once(iface).chain(core)),
        SyncMode::OptionalInterface => {
            Connector::grouped("ModuleSync", [(core, true), (vec![iface], false)])
        }
    };
    c.exported(MODULE_TICK)
}

/// Rendezvous of the master clock with every module tick.
pub fn build_inter_module_sync(master: &str, modules: &[String]) -> Connector {
    Connector::rendezvous(
        "InterModuleSync",
        std::iter::once(q(master, "tick")).chain(modules.iter().map(|m| q(m, MODULE_TICK))),
    )
}

pub fn instantiate_module(spec: &ModuleSpec) -> Result<CompoundComponent, GenomError> {
    instantiate_module_with(spec, SyncMode::OptionalInterface)
}

/// Builds the compound for one module.
///
/// Request handling: `read` pairs the interface timer trigger with the
/// message box; `trig_b` executes a request once every incompatible service
/// is inactive; `abtInc_b` lets the incompatible running services abort.
/// Execution: each activity step synchronises controller, activity and a
/// scheduler `step`, so activities only progress during scheduler rounds.
pub fn instantiate_module_with(spec: &ModuleSpec, mode: SyncMode) -> Result<CompoundComponent, GenomError> {
    spec.validate()?;
    let services = spec.services();
    let atom = |a: AtomicComponent| ComponentRef::Atomic(Arc::new(a));
    let controller = atom(build_service_controller());
    let act_plain = atom(build_activity(false));
    let act_loop = atom(build_activity(true));

    let mut c = CompoundComponent::new(&spec.name)
        .instance(Instance::of(
            MESSAGE_BOX,
            &atom(build_message_box(&format!("{}MessageBox", spec.name), &services)),
        ))
        .instance(Instance::of(INTERFACE_TIMER, &atom(build_timer(spec.interface_period))));
    for s in &spec.exec_services {
        c = c
            .instance(Instance::of(&s.name, &controller))
            .instance(Instance::of(
                &activity(&s.name),
                if s.main_loop { &act_loop } else { &act_plain },
            ));
    }
    c = c
        .instance(Instance::of(SCHEDULER, &atom(build_scheduler(spec.permanent))))
        .instance(Instance::of(TASK_CONTROLLER, &atom(build_task_controller())))
        .instance(Instance::of(EXEC_TIMER, &atom(build_timer(spec.exec_period))));
    if spec.permanent {
        c = c.instance(Instance::of(PERMANENT, &atom(build_permanent())));
    }
    let poster_timer_atom = atom(build_timer(spec.poster_period));
    for p in &spec.posters {
        c = c
            .instance(Instance::of(&poster(&p.name), &atom(build_poster(p.fresh + 1))))
            .instance(Instance::of(&poster_timer(spec, &p.name), &poster_timer_atom));
    }
    c = c.instance(Instance::of(LOCK, &atom(build_ids_lock())));

    // Control task.
    c = c
        .connector(Connector::rendezvous("InitBox", [q(MESSAGE_BOX, "init")]))
        .connector(
            Connector::rendezvous("Read", [q(INTERFACE_TIMER, "trigger"), q(MESSAGE_BOX, "read")])
                .exported(READ),
        )
        .connector(Connector::rendezvous("Chk", [q(MESSAGE_BOX, "chk")]));
    for b in &services {
        let incompat = spec.incompatible_with(b);
        let exec_incompat: Vec<&String> = incompat.iter().filter(|o| spec.is_exec(o)).collect();
        let mut ports = vec![q(MESSAGE_BOX, &trig(b))];
        if spec.is_exec(b) {
            ports.push(q(b, "trig"));
        }
        ports.extend(exec_incompat.iter().map(|o| q(o, "stat")));
        let guard = Expr::all(exec_incompat.iter().map(|o| ex(&format!("!{o}.active"))));
        c = c.connector(guarded(Connector::rendezvous(&format!("Trig_{b}"), ports), guard, vec![]).exported(&trig(b)));

        let mut units = vec![(vec![q(MESSAGE_BOX, &abt_inc(b))], true)];
        units.extend(
            exec_incompat
                .iter()
                .map(|o| (vec![q(o, "abt"), q(&activity(o), "abt")], false)),
        );
        c = c.connector(Connector::grouped(&format!("AbtInc_{b}"), units).exported(&abt_inc(b)));
        c = c.export(&rej(b), q(MESSAGE_BOX, &rej(b)));
    }
    c = c
        .export(GIVE, q(MESSAGE_BOX, "give"))
        .export(STOP, q(MESSAGE_BOX, "stop"))
        .export(ERR, q(MESSAGE_BOX, "err"));

    // Execution task.
    for s in &spec.exec_services {
        let b = &s.name;
        let act = activity(b);
        for (conn, port) in [("Start", "start"), ("Exec", "exec"), ("Fin", "fin"), ("Inter", "inter")] {
            c = c.connector(Connector::rendezvous(
                &format!("{conn}_{b}"),
                [q(b, port), q(&act, port), q(SCHEDULER, "step")],
            ));
        }
        c = c
            .connector(Connector::rendezvous(&format!("Report_{b}"), [q(&act, "report")]))
            .connector(Connector::rendezvous(&format!("Abt_{b}"), [q(b, "abt"), q(&act, "abt")]).exported(&abt(b)))
            .export(&stat(b), q(b, "stat"));
        for port in ["start", "exec", "fin", "stat"] {
            c = c.priority(
                &format!("AbtFirst_{b}_{port}"),
                Pattern::Port(q(b, port)),
                Pattern::Port(q(b, "abt")),
            );
        }
    }
    let stats = || spec.exec_services.iter().map(|s| q(&s.name, "stat"));
    let idle = Expr::all(spec.exec_services.iter().map(|s| ex(&format!("!{}.active", s.name))));
    let busy = Expr::any(spec.exec_services.iter().map(|s| ex(&format!("{}.active", s.name))));
    c = c
        .connector(Connector::rendezvous(
            "ExecTrigger",
            [q(EXEC_TIMER, "trigger"), q(SCHEDULER, "trigger")],
        ))
        .connector(guarded(
            Connector::rendezvous(
                "TaskStop",
                [q(SCHEDULER, "stop"), q(TASK_CONTROLLER, "stop")].into_iter().chain(stats()),
            ),
            idle,
            vec![],
        ))
        .connector(guarded(
            Connector::rendezvous(
                "TaskWake",
                [q(SCHEDULER, "wake"), q(TASK_CONTROLLER, "wake")].into_iter().chain(stats()),
            ),
            busy,
            vec![],
        ))
        .connector(Connector::rendezvous(
            "SchedEnd",
            std::iter::once(q(SCHEDULER, "done")).chain(spec.posters.iter().map(|p| q(&poster(&p.name), "write"))),
        ));
    if spec.permanent {
        c = c
            .connector(Connector::rendezvous(
                PERM_START,
                [q(SCHEDULER, "permstart"), q(PERMANENT, "start"), q(LOCK, "take")],
            ))
            .connector(Connector::rendezvous("PermEnd", [q(PERMANENT, "fin"), q(LOCK, "give")]));
        for (inst, port) in [
            (SCHEDULER, "permstart"),
            (SCHEDULER, "permanentexec"),
            (PERMANENT, "start"),
            (PERMANENT, "exec"),
            (LOCK, "take"),
        ] {
            c = c.export(&format!("{inst}.{port}"), q(inst, port));
        }
    }

    // Posters.
    for p in &spec.posters {
        c = c
            .connector(Connector::rendezvous(
                &format!("PosterTick_{}", p.name),
                [q(&poster_timer(spec, &p.name), "trigger"), q(&poster(&p.name), "tick")],
            ))
            .export(&poster_read(&p.name), q(&poster(&p.name), "read"));
    }
    Ok(c.connector(build_module_sync(spec, mode)))
}

/// Wraps instantiated modules in a root compound with the master timer,
/// the trig semaphore, the compiled constraints, and a no-op singleton for
/// every `trig_b` and `abtInc_b` export that no constraint mentions.
pub fn assemble(
    name: &str,
    modules: Vec<(ModuleSpec, CompoundComponent)>,
    constrained: Vec<Connector>,
) -> CompoundComponent {
    let mut root = CompoundComponent::new(name)
        .instance(Instance::new(MASTER_TIMER, build_master_timer()))
        .instance(Instance::new(TRIG_SEMAPHORE, build_trig_semaphore()));
    let insts: Vec<String> = modules.iter().map(|(s, _)| s.instance_name()).collect();
    for (spec, comp) in &modules {
        root = root.instance(Instance::new(&spec.instance_name(), comp.clone()));
    }
    root = root.connector(build_inter_module_sync(MASTER_TIMER, &insts));
    for m in &insts {
        root = root
            .connector(Connector::rendezvous(
                &format!("Read_{m}"),
                [q(m, READ), q(TRIG_SEMAPHORE, "take")],
            ))
            .connector(Connector::rendezvous(
                &format!("Give_{m}"),
                [q(m, GIVE), q(TRIG_SEMAPHORE, "give")],
            ));
    }
    let used: HashSet<QPort> = constrained
        .iter()
        .flat_map(|c| c.ports.iter().map(|p| p.port.clone()))
        .collect();
    for (spec, _) in &modules {
        let m = spec.instance_name();
        for b in spec.services() {
            for export in [trig(&b), abt_inc(&b)] {
                let port = q(&m, &export);
                if !used.contains(&port) {
                    root = root.connector(Connector::rendezvous(&format!("{m}_{export}"), [port]));
                }
            }
        }
    }
    for c in merge_allows(constrained) {
        root = root.connector(c);
    }
    root
}

/// Allow connectors gating the same `trig` export are conjoined: each one
/// alone would let the request through.
fn merge_allows(conns: Vec<Connector>) -> Vec<Connector> {
    let is_allow = |c: &Connector| {
        c.is_rendezvous()
            && c.clauses.len() == 1
            && c.ports.first().is_some_and(|p| p.port.port.starts_with("trig_"))
    };
    let mut out: Vec<Connector> = Vec::new();
    for c in conns {
        if !is_allow(&c) {
            out.push(c);
            continue;
        }
        let target = c.ports[0].port.clone();
        match out
            .iter_mut()
            .find(|o| is_allow(o) && o.ports[0].port == target)
        {
            Some(o) => {
                for p in &c.ports {
                    if o.port_position(&p.port).is_none() {
                        o.ports.push(crate::model::ConnectorPort {
                            port: p.port.clone(),
                            trigger: false,
                            unit: o.ports.len() as u32,
                        });
                    }
                }
                let mut cl = o.clauses.pop().unwrap();
                cl.guard = Expr::and(cl.guard, c.clauses[0].guard.clone());
                cl.action.extend(c.clauses[0].action.iter().cloned());
                cl.ports = o.ports.iter().map(|p| p.port.clone()).collect();
                o.clauses.push(cl);
            }
            None => out.push(c),
        }
    }
    out
}

/// Instantiates every module, compiles the constraints and assembles the
/// root compound `name`.
pub fn build_system(
    name: &str,
    specs: &[ModuleSpec],
    constraints: &[ConstraintSpec],
    mode: SyncMode,
) -> Result<CompoundComponent, GenomError> {
    let mut seen = HashSet::new();
    for s in specs {
        if !seen.insert(s.instance_name()) {
            return Err(GenomError::InvalidSpec {
                module: s.name.clone(),
                message: "module declared twice".into(),
            });
        }
    }
    let modules = specs
        .iter()
        .map(|s| Ok((s.clone(), instantiate_module_with(s, mode)?)))
        .collect::<Result<Vec<_>, GenomError>>()?;
    let mut conns = Vec::new();
    for c in constraints {
        conns.extend(compile_constraint(c, specs)?);
    }
    Ok(assemble(name, modules, conns))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{flatten, Interaction};

    fn small() -> ModuleSpec {
        ModuleSpec::new("M")
            .exec("A", &["B"], true)
            .exec("B", &[], false)
            .control("C", &[])
            .poster("P", 2)
            .periods(2, 2, 1)
    }

    #[test]
    fn module_sync_modes() {
        let m = small();
        let strong = build_module_sync(&m, SyncMode::Strong);
        assert_eq!(strong.feasible_masks().len(), 1);
        let opt = build_module_sync(&m, SyncMode::OptionalInterface);
        let alone = Interaction(vec![q(INTERFACE_TIMER, "tick")]);
        let f = opt.feasible_interactions();
        assert_eq!(f.len(), 2);
        assert!(!f.contains(&alone));
    }

    #[test]
    fn inter_module_sync_shapes() {
        let two = build_inter_module_sync("m", &["a".into(), "b".into()]);
        assert_eq!(two.feasible_interactions(), vec![Interaction(vec![q("m", "tick"), q("a", MODULE_TICK), q("b", MODULE_TICK)])]);
        assert_eq!(build_inter_module_sync("m", &["a".into()]).ports.len(), 2);
    }

    #[test]
    fn system_flattens_cleanly() {
        let root = build_system("Sys", &[small()], &[], SyncMode::OptionalInterface).unwrap();
        let sys = flatten(&ComponentRef::Compound(Arc::new(root))).unwrap();
        // msgbox + 2+1 timers + poster + 2·2 service atoms + scheduler,
        // task controller, lock; plus master timer and semaphore.
        assert_eq!(sys.instances.len(), 1 + 3 + 1 + 4 + 3 + 2);
    }

    #[test]
    fn dangling_module_tick_is_rejected() {
        let mut root = build_system("Sys", &[small()], &[], SyncMode::OptionalInterface).unwrap();
        root.connectors[0] = build_inter_module_sync(MASTER_TIMER, &["m".into(), "gone".into()]);
        assert!(flatten(&ComponentRef::Compound(Arc::new(root))).is_err());
    }
}
