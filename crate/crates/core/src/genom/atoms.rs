//! Parametric atomic components of a functional-level module.
//!
//! Each builder documents its transitions; the reconstruction follows the
//! prose description of the module template, and the deadlock scenarios in
//! [`super::dala`] exercise them end to end.

use crate::dsl::parse_expr;
use crate::model::{AtomicComponent, Expr, Transition, VarDecl};

pub(crate) fn ex(src: &str) -> Expr {
    parse_expr(src).unwrap_or_else(|d| panic!("builder expression `{src}`: {d}"))
}

/// Counter `t` in `[0, period]`. `tick` advances it while below the period,
/// `trigger` is offered exactly at the period and resets it.
pub fn build_timer(period: i64) -> AtomicComponent {
    assert!(period >= 1, "timer period must be positive");
    AtomicComponent::new(&format!("Timer{period}"), "run")
        .ports(["tick", "trigger"])
        .var(VarDecl::ranged("t", 0, 0, period))
        .transition(
            Transition::new("run", "tick", "run")
                .guard(ex(&format!("t < {period}")))
                .assign("t", ex("t + 1")),
        )
        .transition(
            Transition::new("run", "trigger", "run")
                .guard(ex(&format!("t == {period}")))
                .assign("t", Expr::int(0)),
        )
}

/// The global clock source; its single port is always offered.
pub fn build_master_timer() -> AtomicComponent {
    AtomicComponent::new("MasterTimer", "run")
        .port("tick")
        .transition(Transition::new("run", "tick", "run"))
}

/// Binary semaphore with `take` and `give`.
fn semaphore(name: &str) -> AtomicComponent {
    AtomicComponent::new(name, "free")
        .ports(["take", "give"])
        .transition(Transition::new("free", "take", "held"))
        .transition(Transition::new("held", "give", "free"))
}

/// Serialises request handling across all message boxes of a system.
pub fn build_trig_semaphore() -> AtomicComponent {
    semaphore("TrigSemaphore")
}

/// Mutual exclusion on poster access inside one module.
pub fn build_ids_lock() -> AtomicComponent {
    semaphore("IDSLock")
}

/// Request handling for a module's `services`.
///
/// * `init` leaves `start` for `idle`; `err` kills the box in `dead`.
/// * `read` takes the trig semaphore and moves `idle -> chk`; `stop` ends
///   service in `fini`.
/// * From `chk`: `chk` (nothing pending) goes to `give`; `abtInc_b` records
///   the request in `req` and waits in `abtI` while incompatible services
///   are aborted; `rej_b` refuses the request.
/// * From `abtI`: `trig_b` executes the request recorded in `req`, or
///   `rej_b` refuses it.
/// * `give` releases the semaphore and returns to `idle`.
///
/// Connector guards supply the conditions on the other services; `rep`
/// receives the report written by reject connectors.
pub fn build_message_box(type_name: &str, services: &[String]) -> AtomicComponent {
    assert!(!services.is_empty(), "a message box needs at least one service");
    let mut a = AtomicComponent::new(type_name, "start")
        .ports(["init", "chk", "stop", "err", "read", "give"])
        .var(VarDecl::ranged("req", 0, 0, services.len() as i64 - 1))
        .var(VarDecl::symbol("rep", "NONE"));
    for b in services {
        a = a.ports([
            format!("trig_{b}").as_str(),
            format!("rej_{b}").as_str(),
            format!("abtInc_{b}").as_str(),
        ]);
    }
    a = a
        .transition(Transition::new("start", "init", "idle"))
        .transition(Transition::new("start", "err", "dead"))
        .transition(Transition::new("idle", "read", "chk"))
        .transition(Transition::new("idle", "stop", "fini"))
        .transition(Transition::new("chk", "chk", "give"));
    for (i, b) in services.iter().enumerate() {
        a = a
            .transition(
                Transition::new("chk", &format!("abtInc_{b}"), "abtI").assign("req", Expr::int(i as i64)),
            )
            .transition(Transition::new("chk", &format!("rej_{b}"), "give"));
    }
    for (i, b) in services.iter().enumerate() {
        let mine = ex(&format!("req == {i}"));
        a = a
            .transition(Transition::new("abtI", &format!("trig_{b}"), "give").guard(mine.clone()))
            .transition(Transition::new("abtI", &format!("rej_{b}"), "give").guard(mine));
    }
    a.transition(Transition::new("give", "give", "idle"))
        .location("fini")
        .location("dead")
}

/// Lifecycle of one execution service. `trig` activates it, `start`,
/// `exec` and `fin` follow its activity, `abt` (from `strt` or `exec`)
/// moves to `abrt` and `inter` completes the abort. `stat` exposes
/// `active` and `done` everywhere.
pub fn build_service_controller() -> AtomicComponent {
    let mut a = AtomicComponent::new("ServiceController", "ethr")
        .ports(["trig", "start", "exec", "fin", "abt", "inter", "stat"])
        .var(VarDecl::boolean("active", false))
        .var(VarDecl::boolean("done", false))
        .var(VarDecl::symbol("rep", "NONE"))
        .transition(Transition::new("ethr", "trig", "strt").assign("active", Expr::truth()))
        .transition(Transition::new("strt", "start", "exec"))
        .transition(Transition::new("exec", "exec", "exec"))
        .transition(
            Transition::new("exec", "fin", "ethr")
                .assign("done", Expr::truth())
                .assign("active", ex("false")),
        )
        .transition(Transition::new("strt", "abt", "abrt"))
        .transition(Transition::new("exec", "abt", "abrt"))
        .transition(Transition::new("abrt", "inter", "ethr").assign("active", ex("false")));
    for l in ["ethr", "strt", "exec", "abrt"] {
        a = a.transition(Transition::new(l, "stat", l));
    }
    a
}

/// The code of one execution service, from the fictitious `ether` through
/// `start` and `exec` to `ended`. With `main_loop` the `exec` location loops.
/// `abt` raises `aborted`, which blocks any further `exec` or `fin`;
/// `inter` returns to `ether` once the controller has finished aborting.
pub fn build_activity(main_loop: bool) -> AtomicComponent {
    let name = if main_loop { "LoopActivity" } else { "Activity" };
    let mut a = AtomicComponent::new(name, "ether")
        .ports(["start", "exec", "fin", "report", "abt", "inter"])
        .var(VarDecl::boolean("aborted", false))
        .transition(Transition::new("ether", "start", "start"))
        .transition(Transition::new("start", "exec", "exec").guard(ex("!aborted")));
    if main_loop {
        a = a.transition(Transition::new("exec", "exec", "exec").guard(ex("!aborted")));
    }
    a = a
        .transition(Transition::new("exec", "fin", "ended").guard(ex("!aborted")))
        .transition(Transition::new("ended", "report", "ether"));
    for l in ["ether", "start", "exec"] {
        a = a
            .transition(Transition::new(l, "abt", l).assign("aborted", Expr::truth()))
            .transition(
                Transition::new(l, "inter", "ether")
                    .guard(ex("aborted"))
                    .assign("aborted", ex("false")),
            );
    }
    a
}

/// Drives the activities of an execution task. `trigger` starts a round
/// (through `perm` when the task has a permanent activity), `step` lets one
/// activity move, `done` closes the round. The task controller parks it in
/// `stpd` with `stop` and resumes it with `wake`; a parked scheduler still
/// consumes timer triggers.
pub fn build_scheduler(permanent: bool) -> AtomicComponent {
    let (name, after) = if permanent {
        ("PermScheduler", "perm")
    } else {
        ("Scheduler", "run")
    };
    let mut a = AtomicComponent::new(name, "idle")
        .ports(["trigger", "step", "done", "stop", "wake"])
        .transition(Transition::new("idle", "trigger", after))
        .transition(Transition::new("run", "step", "run"))
        .transition(Transition::new("run", "done", "idle"))
        .transition(Transition::new("idle", "stop", "stpd"))
        .transition(Transition::new("stpd", "trigger", "stpd"))
        .transition(Transition::new("stpd", "wake", "idle"));
    if permanent {
        a = a
            .ports(["permstart", "permanentexec"])
            .transition(Transition::new("perm", "permstart", "run"))
            .transition(Transition::new("perm", "permanentexec", "run"));
    }
    a
}

/// Stops the scheduler while no service runs and wakes it otherwise; the
/// conditions live on its connectors.
pub fn build_task_controller() -> AtomicComponent {
    AtomicComponent::new("TaskController", "ready")
        .ports(["stop", "wake"])
        .transition(Transition::new("ready", "stop", "ready"))
        .transition(Transition::new("ready", "wake", "ready"))
}

/// Permanent activity of an execution task: one step per round, entered by
/// `start` (fresh data) or `exec` (the stale-data path) and left by `fin`.
pub fn build_permanent() -> AtomicComponent {
    AtomicComponent::new("Permanent", "sleep")
        .ports(["start", "exec", "fin"])
        .transition(Transition::new("sleep", "start", "work"))
        .transition(Transition::new("sleep", "exec", "work"))
        .transition(Transition::new("work", "fin", "sleep"))
}

/// Shared data with an age in timer periods. `tick` ages it up to `cap`,
/// `write` refreshes it, `read` lets connector guards inspect `PosterAge`.
pub fn build_poster(cap: i64) -> AtomicComponent {
    assert!(cap >= 1, "poster cap must be positive");
    AtomicComponent::new(&format!("Poster{cap}"), "ready")
        .ports(["read", "write", "tick"])
        .var(VarDecl::ranged("PosterAge", 0, 0, cap))
        .transition(Transition::new("ready", "read", "ready"))
        .transition(Transition::new("ready", "write", "ready").assign("PosterAge", Expr::int(0)))
        .transition(
            Transition::new("ready", "tick", "ready")
                .guard(ex(&format!("PosterAge < {cap}")))
                .assign("PosterAge", ex("PosterAge + 1")),
        )
        .transition(Transition::new("ready", "tick", "ready").guard(ex(&format!("PosterAge == {cap}"))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{flatten, ComponentRef, Value};
    use std::sync::Arc;

    fn ports_after(a: AtomicComponent, steps: &[&str]) -> (String, Vec<(String, Value)>) {
        let sys = flatten(&ComponentRef::Atomic(Arc::new(a))).unwrap();
        let inst = &sys.instances[0];
        let mut s = sys.initial_state();
        for p in steps {
            let pi = inst.component.port_index(p).unwrap();
            let t = inst.outgoing[s.locs[0]]
                .iter()
                .find(|t| t.port == pi && crate::model::system::eval_bool(&t.guard, &s).unwrap())
                .unwrap_or_else(|| panic!("`{p}` not offered"));
            for asg in &t.action {
                let v = asg.value.eval(&crate::model::StateEnv(&s)).unwrap();
                s.vals[asg.target] = v;
            }
            s.locs[0] = t.to;
        }
        let vars = inst
            .component
            .variables
            .iter()
            .enumerate()
            .map(|(k, v)| (v.name.clone(), s.vals[inst.var_base + k]))
            .collect();
        (inst.location_name(s.locs[0]).to_owned(), vars)
    }

    fn var(vars: &[(String, Value)], n: &str) -> Value {
        vars.iter().find(|(k, _)| k == n).unwrap().1
    }

    #[test]
    fn timer_period_one_alternates() {
        let (_, v) = ports_after(build_timer(1), &["tick", "trigger", "tick"]);
        assert_eq!(var(&v, "t"), Value::Int(1));
        assert!(build_timer(1).check().is_empty());
    }

    #[test]
    fn controller_completion_and_abort() {
        let (l, v) = ports_after(build_service_controller(), &["trig", "start", "exec", "fin"]);
        assert_eq!(l, "ethr");
        assert_eq!((var(&v, "done"), var(&v, "active")), (Value::Bool(true), Value::Bool(false)));
        let (l, v) = ports_after(build_service_controller(), &["trig", "start", "abt", "inter"]);
        assert_eq!(l, "ethr");
        assert_eq!((var(&v, "done"), var(&v, "active")), (Value::Bool(false), Value::Bool(false)));
        let (_, v) = ports_after(build_service_controller(), &["stat"]);
        assert_eq!((var(&v, "done"), var(&v, "active")), (Value::Bool(false), Value::Bool(false)));
    }

    #[test]
    fn activity_cycle_and_abort_flag() {
        let (l, _) = ports_after(build_activity(true), &["start", "exec", "exec", "fin", "report"]);
        assert_eq!(l, "ether");
        let a = build_activity(true);
        let env = a.initial_env();
        assert_eq!(
            a.offered_ports("ether", &env).unwrap(),
            vec!["start".to_owned(), "abt".to_owned()]
        );
    }

    #[test]
    #[should_panic(expected = "`exec` not offered")]
    fn aborted_activity_cannot_exec() {
        ports_after(build_activity(true), &["start", "abt", "exec"]);
    }

    #[test]
    fn poster_ages_and_saturates() {
        let (_, v) = ports_after(build_poster(6), &["write", "tick", "tick", "tick", "read"]);
        assert_eq!(var(&v, "PosterAge"), Value::Int(3));
        let (_, v) = ports_after(build_poster(2), &["tick", "tick", "tick"]);
        assert_eq!(var(&v, "PosterAge"), Value::Int(2));
    }

    #[test]
    fn message_box_paths() {
        let names: Vec<String> = vec!["A".into(), "B".into()];
        let mb = build_message_box("MB", &names);
        assert!(mb.check().is_empty(), "{:?}", mb.check());
        let (l, _) = ports_after(mb.clone(), &["init", "stop"]);
        assert_eq!(l, "fini");
        let (l, _) = ports_after(mb.clone(), &["err"]);
        assert_eq!(l, "dead");
        let (l, v) = ports_after(mb, &["init", "read", "abtInc_B", "trig_B"]);
        assert_eq!(l, "give");
        assert_eq!(var(&v, "req"), Value::Int(1));
    }
}
