//! Safety rules compiled into root-level connectors.
//!
//! Every rule gates a request (`trig_b`) with an allow connector and pairs
//! it with a reject connector, or adds an abort connector. Connector names
//! follow the pattern `Allow<Service>...`, `Reject<Service>...`,
//! `Abort<Service>...`.

use std::fmt;

use super::atoms::ex;
use super::module::{guarded, names};
use super::{GenomError, ModuleSpec};
use crate::model::{Assign, Clause, Connector, Expr, Path, QPort};

/// `module.service`, where `module` is the module's instance name.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ServiceRef {
    pub module: String,
    pub service: String,
}

impl ServiceRef {
    pub fn new(module: &str, service: &str) -> Self {
        ServiceRef {
            module: module.into(),
            service: service.into(),
        }
    }

    fn port(&self, export: String) -> QPort {
        QPort::new(&self.module, &export)
    }

    fn var(&self, v: &str) -> String {
        format!("{}.{}.{v}", self.module, self.service)
    }
}

impl fmt::Display for ServiceRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.module, self.service)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum OverlapPolicy {
    /// Refuse the new request while the other service runs.
    RejectNew { report: String },
    /// Abort the running service, then execute the new request.
    AbortRunning { report: String },
}

#[derive(Clone, Debug, PartialEq)]
pub enum ConstraintSpec {
    /// `target` runs only after every prerequisite completed once.
    Before {
        prereqs: Vec<ServiceRef>,
        target: ServiceRef,
        report: String,
    },
    /// `a` (when `guard` holds) and `b` never run together.
    NonOverlap {
        a: ServiceRef,
        guard: Option<Expr>,
        b: ServiceRef,
        policy: OverlapPolicy,
    },
    /// `target` may start only if `counter + increment <= limit`.
    Budget {
        target: ServiceRef,
        counter: Path,
        increment: Expr,
        limit: Path,
        report: String,
    },
    /// Abort `victim` while the poster is older than `max_age`.
    Freshness {
        module: String,
        poster: String,
        max_age: i64,
        victim: ServiceRef,
        report: String,
    },
}

fn find<'a>(modules: &'a [ModuleSpec], module: &str) -> Result<&'a ModuleSpec, GenomError> {
    modules
        .iter()
        .find(|m| m.instance_name() == module)
        .ok_or_else(|| GenomError::Unresolved {
            kind: "module",
            name: module.into(),
        })
}

fn service<'a>(modules: &'a [ModuleSpec], r: &ServiceRef) -> Result<&'a ModuleSpec, GenomError> {
    let m = find(modules, &r.module)?;
    if m.services().contains(&r.service) {
        Ok(m)
    } else {
        Err(GenomError::Unresolved {
            kind: "service",
            name: r.to_string(),
        })
    }
}

fn exec_service(modules: &[ModuleSpec], r: &ServiceRef) -> Result<(), GenomError> {
    if service(modules, r)?.is_exec(&r.service) {
        Ok(())
    } else {
        Err(GenomError::InvalidConstraint(format!(
            "`{r}` is a control service and has no status"
        )))
    }
}

/// Whether the request connector of `target` already carries `other`'s
/// status port.
fn stat_inside(modules: &[ModuleSpec], target: &ServiceRef, other: &ServiceRef) -> bool {
    target.module == other.module
        && find(modules, &target.module)
            .map(|m| m.incompatible_with(&target.service).contains(&other.service))
            .unwrap_or(false)
}

fn report_to(r: &ServiceRef, report: &str) -> Vec<Assign> {
    vec![Assign::new(
        Path::parse(&format!("{}.{}.rep", r.module, names::rej(&r.service))),
        Expr::Const(crate::model::Value::sym(report)),
    )]
}

fn allow_reject(
    name: &str,
    target: &ServiceRef,
    watched: &[QPort],
    ok: Expr,
    report: &str,
) -> Vec<Connector> {
    let allow = Connector::rendezvous(
        &format!("Allow{name}"),
        std::iter::once(target.port(names::trig(&target.service))).chain(watched.iter().cloned()),
    );
    let reject = Connector::rendezvous(
        &format!("Reject{name}"),
        std::iter::once(target.port(names::rej(&target.service))).chain(watched.iter().cloned()),
    );
    vec![
        force_clause(allow, ok.clone(), vec![]),
        force_clause(reject, Expr::negate(ok), report_to(target, report)),
    ]
}

/// Like `guarded`, but always writes the clause so that the connector is
/// recognisable as a gate even under a trivial guard.
fn force_clause(c: Connector, guard: Expr, action: Vec<Assign>) -> Connector {
    if guard.is_true_const() && action.is_empty() {
        let all = c.ports.iter().map(|p| p.port.clone()).collect();
        return c.clause(Clause::new(all));
    }
    guarded(c, guard, action)
}

/// Compiles `c` against the module specs it refers to.
pub fn compile_constraint(c: &ConstraintSpec, modules: &[ModuleSpec]) -> Result<Vec<Connector>, GenomError> {
    match c {
        ConstraintSpec::Before {
            prereqs,
            target,
            report,
        } => {
            service(modules, target)?;
            if prereqs.is_empty() {
                return Err(GenomError::InvalidConstraint("`before` needs a prerequisite".into()));
            }
            for p in prereqs {
                exec_service(modules, p)?;
                if p == target {
                    return Err(GenomError::InvalidConstraint(format!(
                        "`{target}` cannot be its own prerequisite"
                    )));
                }
            }
            let watched: Vec<QPort> = prereqs
                .iter()
                .filter(|p| !stat_inside(modules, target, p))
                .map(|p| p.port(names::stat(&p.service)))
                .collect();
            let ok = Expr::all(prereqs.iter().map(|p| ex(&p.var("done"))));
            Ok(allow_reject(
                &format!("{}AfterPrereqs", target.service),
                target,
                &watched,
                ok,
                report,
            ))
        }
        ConstraintSpec::NonOverlap { a, guard, b, policy } => {
            exec_service(modules, a)?;
            exec_service(modules, b)?;
            if a == b {
                return Err(GenomError::InvalidConstraint(format!("`{a}` overlaps itself")));
            }
            let idle = |r: &ServiceRef| ex(&format!("!{}", r.var("active")));
            let watch = |x: &ServiceRef, y: &ServiceRef| -> Vec<QPort> {
                if stat_inside(modules, x, y) {
                    vec![]
                } else {
                    vec![y.port(names::stat(&y.service))]
                }
            };
            match policy {
                OverlapPolicy::RejectNew { report } => {
                    let mut ok_a = idle(b);
                    if let Some(g) = guard {
                        ok_a = Expr::and(ok_a, g.clone());
                    }
                    let mut out = allow_reject(
                        &format!("{}IfNot{}", a.service, b.service),
                        a,
                        &watch(a, b),
                        ok_a,
                        report,
                    );
                    out.extend(allow_reject(
                        &format!("{}IfNot{}", b.service, a.service),
                        b,
                        &watch(b, a),
                        idle(a),
                        report,
                    ));
                    Ok(out)
                }
                OverlapPolicy::AbortRunning { report } => {
                    if stat_inside(modules, a, b) {
                        return Err(GenomError::InvalidConstraint(format!(
                            "`{a}` and `{b}` are already incompatible inside their module"
                        )));
                    }
                    let mut ok = idle(b);
                    if let Some(g) = guard {
                        ok = Expr::and(ok, g.clone());
                    }
                    let allow = force_clause(
                        Connector::rendezvous(
                            &format!("Allow{}IfNot{}", a.service, b.service),
                            std::iter::once(a.port(names::trig(&a.service))).chain(watch(a, b)),
                        ),
                        ok,
                        vec![],
                    );
                    let inc = a.port(names::abt_inc(&a.service));
                    let abt = b.port(names::abt(&b.service));
                    let abort = Connector::broadcast(
                        &format!("Abort{}For{}", b.service, a.service),
                        [inc.clone()],
                        [abt.clone()],
                    )
                    .clause(Clause::new(vec![inc.clone()]))
                    .clause(Clause::new(vec![inc, abt]).action(vec![Assign::new(
                        Path::parse(&b.var("rep")),
                        Expr::Const(crate::model::Value::sym(report)),
                    )]));
                    Ok(vec![allow, abort])
                }
            }
        }
        ConstraintSpec::Budget {
            target,
            counter,
            increment,
            limit,
            report,
        } => {
            service(modules, target)?;
            for p in [counter, limit] {
                find(modules, &p.0[0])?;
            }
            let ok = Expr::bin(
                crate::model::BinOp::Le,
                Expr::bin(crate::model::BinOp::Add, Expr::Var(counter.clone()), increment.clone()),
                Expr::Var(limit.clone()),
            );
            Ok(allow_reject(
                &format!("{}WithinBudget", target.service),
                target,
                &[],
                ok,
                report,
            ))
        }
        ConstraintSpec::Freshness {
            module,
            poster,
            max_age,
            victim,
            report,
        } => {
            let m = find(modules, module)?;
            let Some(p) = m.posters.iter().find(|p| &p.name == poster) else {
                return Err(GenomError::Unresolved {
                    kind: "poster",
                    name: format!("{module}.{poster}"),
                });
            };
            exec_service(modules, victim)?;
            if *max_age > p.fresh {
                return Err(GenomError::InvalidConstraint(format!(
                    "poster `{module}.{poster}` saturates at {}, so age > {max_age} never holds",
                    p.fresh + 1
                )));
            }
            let read = QPort::new(module, &names::poster_read(poster));
            let c = Connector::rendezvous(
                &format!("Abt{}IfPstrNotFresh", victim.service),
                [victim.port(names::abt(&victim.service)), read],
            );
            Ok(vec![guarded(
                c,
                ex(&format!("{module}.{}.PosterAge > {max_age}", names::poster(poster))),
                vec![Assign::new(
                    Path::parse(&victim.var("rep")),
                    Expr::Const(crate::model::Value::sym(report)),
                )],
            )])
        }
    }
}
