//! Declarative module and constraint files.
//!
//! ```text
//! system Dala;
//! module NDD {
//!   interface period 2; exec period 2; poster period 2;
//!   service exec GoTo incompatible [Init] loop;
//!   service exec Init;
//!   service control Stop incompatible [GoTo];
//!   poster Speed fresh 5;
//!   permanent;
//! }
//! constraint before [ndd.SetParams, ndd.SetSpeed] -> ndd.GoTo report PARAMS-OR-SPEED-NOT-SET;
//! constraint nonoverlap rflex.Track provided rflex.speed > 0 with viam.Acquire reject CANNOT-MOVE;
//! constraint nonoverlap antenna.Communicate with rflex.Track abort CANNOT-COMM-AND-MOVE;
//! constraint budget battery.Camera uses 4 counter battery.FIDS.totalPwr limit battery.init.maxPwr report MAX-PWR-EXCEEDED;
//! constraint fresh ndd.Rflex 10 abort rflex.Track report NDD-POSTER-NOT-FRESH;
//! ```
//!
//! Modules are referred to by their lower-cased name. `#` starts a comment.

use super::constraint::{ConstraintSpec, OverlapPolicy, ServiceRef};
use super::module::{build_system, SyncMode};
use super::{GenomError, ModuleSpec};
use crate::dsl::lexer::Tok;
use crate::dsl::parser::Parser;
use crate::dsl::Diagnostic;
use crate::model::{CompoundComponent, Value};

#[derive(Clone, Debug, PartialEq)]
pub struct GenomFile {
    pub system: String,
    pub modules: Vec<ModuleSpec>,
    pub constraints: Vec<ConstraintSpec>,
}

impl GenomFile {
    /// The root compound, with the interface timer optional in each module
    /// tick.
    pub fn build(&self) -> Result<CompoundComponent, GenomError> {
        build_system(&self.system, &self.modules, &self.constraints, SyncMode::OptionalInterface)
    }
}

fn syntax(d: Diagnostic) -> GenomError {
    GenomError::Syntax {
        line: d.line,
        col: d.col,
        message: d.message,
    }
}

fn int(p: &mut Parser) -> Result<i64, Diagnostic> {
    match p.literal()? {
        Value::Int(i) => Ok(i),
        _ => p.err("an integer"),
    }
}

fn symbol(p: &mut Parser) -> Result<String, Diagnostic> {
    match p.literal()? {
        Value::Sym(s) => Ok(s.as_str().to_owned()),
        _ => p.err("a report symbol"),
    }
}

fn service_ref(p: &mut Parser) -> Result<ServiceRef, Diagnostic> {
    let m = p.name()?;
    p.expect(Tok::Dot)?;
    let s = p.any_ident()?;
    Ok(ServiceRef::new(&m, &s))
}

fn name_list(p: &mut Parser, item: fn(&mut Parser) -> Result<String, Diagnostic>) -> Result<Vec<String>, Diagnostic> {
    p.expect(Tok::LBracket)?;
    let mut v = Vec::new();
    if !p.eat(&Tok::RBracket) {
        v.push(item(p)?);
        while p.eat(&Tok::Comma) {
            v.push(item(p)?);
        }
        p.expect(Tok::RBracket)?;
    }
    Ok(v)
}

fn module(p: &mut Parser) -> Result<ModuleSpec, Diagnostic> {
    let mut m = ModuleSpec::new(&p.name()?);
    p.expect(Tok::LBrace)?;
    while !p.eat(&Tok::RBrace) {
        if p.eat_kw("interface") {
            p.expect_kw("period")?;
            m.interface_period = int(p)?;
        } else if p.eat_kw("exec") {
            p.expect_kw("period")?;
            m.exec_period = int(p)?;
        } else if p.eat_kw("poster") {
            if p.eat_kw("period") {
                m.poster_period = int(p)?;
            } else {
                let name = p.name()?;
                p.expect_kw("fresh")?;
                let fresh = int(p)?;
                m = m.poster(&name, fresh);
            }
        } else if p.eat_kw("permanent") {
            m.permanent = true;
        } else if p.eat_kw("service") {
            let exec = if p.eat_kw("exec") {
                true
            } else if p.eat_kw("control") {
                false
            } else {
                return p.err("`exec` or `control`");
            };
            let name = p.name()?;
            let incompat = if p.eat_kw("incompatible") {
                name_list(p, Parser::name)?
            } else {
                Vec::new()
            };
            let refs: Vec<&str> = incompat.iter().map(String::as_str).collect();
            if exec {
                let main_loop = p.eat_kw("loop");
                m = m.exec(&name, &refs, main_loop);
            } else {
                m = m.control(&name, &refs);
            }
        } else {
            return p.err("a module item");
        }
        p.expect(Tok::Semi)?;
    }
    Ok(m)
}

fn constraint(p: &mut Parser) -> Result<ConstraintSpec, Diagnostic> {
    let c = if p.eat_kw("before") {
        p.expect(Tok::LBracket)?;
        let mut prereqs = vec![service_ref(p)?];
        while p.eat(&Tok::Comma) {
            prereqs.push(service_ref(p)?);
        }
        p.expect(Tok::RBracket)?;
        p.expect(Tok::Minus)?;
        p.expect(Tok::Gt)?;
        let target = service_ref(p)?;
        p.expect_kw("report")?;
        ConstraintSpec::Before {
            prereqs,
            target,
            report: symbol(p)?,
        }
    } else if p.eat_kw("nonoverlap") {
        let a = service_ref(p)?;
        let guard = if p.eat_kw("provided") { Some(p.expr()?) } else { None };
        p.expect_kw("with")?;
        let b = service_ref(p)?;
        let policy = if p.eat_kw("reject") {
            OverlapPolicy::RejectNew { report: symbol(p)? }
        } else if p.eat_kw("abort") {
            OverlapPolicy::AbortRunning { report: symbol(p)? }
        } else {
            return p.err("`reject` or `abort`");
        };
        ConstraintSpec::NonOverlap { a, guard, b, policy }
    } else if p.eat_kw("budget") {
        let target = service_ref(p)?;
        p.expect_kw("uses")?;
        let increment = p.expr()?;
        p.expect_kw("counter")?;
        let counter = p.path()?;
        p.expect_kw("limit")?;
        let limit = p.path()?;
        p.expect_kw("report")?;
        ConstraintSpec::Budget {
            target,
            counter,
            increment,
            limit,
            report: symbol(p)?,
        }
    } else if p.eat_kw("fresh") {
        let module = p.name()?;
        p.expect(Tok::Dot)?;
        let poster = p.any_ident()?;
        let max_age = int(p)?;
        p.expect_kw("abort")?;
        let victim = service_ref(p)?;
        p.expect_kw("report")?;
        ConstraintSpec::Freshness {
            module,
            poster,
            max_age,
            victim,
            report: symbol(p)?,
        }
    } else {
        return p.err("`before`, `nonoverlap`, `budget` or `fresh`");
    };
    p.expect(Tok::Semi)?;
    Ok(c)
}

/// Parses a module/constraint file. Module specs are validated; constraint
/// references are checked when the system is built.
pub fn parse_genom(src: &str) -> Result<GenomFile, GenomError> {
    let mut p = Parser::new(src).map_err(syntax)?;
    let mut f = GenomFile {
        system: "System".into(),
        modules: Vec::new(),
        constraints: Vec::new(),
    };
    while *p.peek() != Tok::Eof {
        let at = p.here();
        if p.eat_kw("system") {
            f.system = p.name().map_err(syntax)?;
            p.expect(Tok::Semi).map_err(syntax)?;
        } else if p.eat_kw("module") {
            let m = module(&mut p).map_err(syntax)?;
            m.validate().map_err(|e| GenomError::Syntax {
                line: at.0,
                col: at.1,
                message: e.to_string(),
            })?;
            f.modules.push(m);
        } else if p.eat_kw("constraint") {
            f.constraints.push(constraint(&mut p).map_err(syntax)?);
        } else {
            return Err(syntax(
                p.err::<()>("`system`, `module` or `constraint`").unwrap_err(),
            ));
        }
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    const NDD: &str = "
module NDD {
  interface period 2; exec period 2; poster period 2;
  service exec SetParams;
  service exec SetSpeed;
  service exec GoTo incompatible [Init] loop;
  service exec Init;
  service control Stop;
  poster Speed fresh 5;
}
constraint before [ndd.SetParams, ndd.SetSpeed] -> ndd.GoTo report PARAMS-OR-SPEED-NOT-SET;
";

    #[test]
    fn parses_module_and_constraint() {
        let f = parse_genom(NDD).unwrap();
        assert_eq!(f.modules.len(), 1);
        let m = &f.modules[0];
        assert_eq!(m.services(), vec!["SetParams", "SetSpeed", "GoTo", "Init", "Stop"]);
        assert!(m.exec_services[2].main_loop);
        assert_eq!(m.incompatible_with("Init"), vec!["GoTo"]);
        assert_eq!(m.posters[0].fresh, 5);
        assert!(matches!(&f.constraints[0], ConstraintSpec::Before { prereqs, .. } if prereqs.len() == 2));
        f.build().unwrap();
    }

    #[test]
    fn unknown_incompatibility_is_an_error() {
        let src = NDD.replace("incompatible [Init]", "incompatible [Nope]");
        let e = parse_genom(&src).unwrap_err();
        assert!(e.to_string().contains("Nope"), "{e}");
    }

    #[test]
    fn syntax_error_position() {
        let e = parse_genom("module M {\n  service maybe X;\n}").unwrap_err();
        assert_eq!(
            e,
            GenomError::Syntax {
                line: 2,
                col: 11,
                message: "expected `exec` or `control`, found `maybe`".into()
            }
        );
    }
}
