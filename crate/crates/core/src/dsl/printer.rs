use std::fmt::Write;

use super::SourceModel;
use crate::model::value::none_symbol;
use crate::model::{
    Action, AtomicComponent, CompoundComponent, Connector, Expr, Pattern, Type, UnOp, Value,
};

fn bare_symbol(s: &str) -> bool {
    let b = s.as_bytes();
    !b.is_empty()
        && b[0].is_ascii_uppercase()
        && b.iter()
            .all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || *c == b'_' || *c == b'-')
        && b.windows(2)
            .all(|w| w[0] != b'-' || w[1].is_ascii_uppercase())
}

fn value(v: Value) -> String {
    match v {
        Value::Int(i) => i.to_string(),
        Value::Bool(b) => b.to_string(),
        Value::Sym(s) if bare_symbol(s.as_str()) => s.as_str().to_owned(),
        Value::Sym(s) => format!("\"{}\"", s.as_str()),
    }
}

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Binary(op, ..) => op.precedence(),
        Expr::Unary(..) => 6,
        _ => 7,
    }
}

fn write_expr(out: &mut String, e: &Expr) {
    match e {
        Expr::Const(v) => out.push_str(&value(*v)),
        Expr::Var(p) => out.push_str(&p.to_string()),
        Expr::At(l) => {
            let _ = write!(out, "{}@{}", l.instance, l.location);
        }
        Expr::Unary(op, x) => {
            out.push(match op {
                UnOp::Not => '!',
                UnOp::Neg => '-',
            });
            // A constant under negation is parenthesised so that it is not
            // folded into a negative literal on reparse.
            if prec(x) < 6 || matches!(**x, Expr::Const(Value::Int(_))) {
                out.push('(');
                write_expr(out, x);
                out.push(')');
            } else {
                write_expr(out, x);
            }
        }
        Expr::Binary(op, l, r) => {
            let p = op.precedence();
            let wrap = |out: &mut String, x: &Expr, paren: bool| {
                if paren {
                    out.push('(');
                    write_expr(out, x);
                    out.push(')');
                } else {
                    write_expr(out, x);
                }
            };
            wrap(out, l, prec(l) < p);
            let _ = write!(out, " {} ", op.symbol());
            wrap(out, r, prec(r) <= p);
        }
    }
}

pub fn print_expr(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e);
    s
}

fn action(a: &Action) -> String {
    let items: Vec<String> = a
        .iter()
        .map(|x| format!("{} := {}", x.target, print_expr(&x.value)))
        .collect();
    format!("{{ {} }}", items.join("; "))
}

fn default_init(t: Type) -> Value {
    match t {
        Type::Int => Value::Int(0),
        Type::Bool => Value::Bool(false),
        Type::Sym => Value::Sym(none_symbol()),
    }
}

fn type_word(t: Type) -> &'static str {
    match t {
        Type::Int => "int",
        Type::Bool => "bool",
        Type::Sym => "sym",
    }
}

fn print_atomic(out: &mut String, a: &AtomicComponent) {
    let _ = writeln!(out, "component {}", a.name);
    if !a.ports.is_empty() {
        let _ = writeln!(out, "  port {}", a.ports.join(", "));
    }
    let mut i = 0;
    while i < a.variables.len() {
        let ty = a.variables[i].ty;
        let mut decls = Vec::new();
        while i < a.variables.len() && a.variables[i].ty == ty {
            let v = &a.variables[i];
            let mut d = v.name.clone();
            if v.init != default_init(ty) {
                let _ = write!(d, " := {}", value(v.init));
            }
            if let Some((lo, hi)) = v.range {
                let _ = write!(d, " range [{lo}, {hi}]");
            }
            decls.push(d);
            i += 1;
        }
        let _ = writeln!(out, "  data {} {}", type_word(ty), decls.join(", "));
    }
    let _ = writeln!(out, "  behavior initial to {}", a.initial);
    let loc_idx = |l: &str| a.location_index(l).unwrap_or(usize::MAX);
    let grouped = a
        .transitions
        .windows(2)
        .all(|w| loc_idx(&w[0].from) <= loc_idx(&w[1].from))
        && a.transitions.iter().all(|t| a.location_index(&t.from).is_some());
    let transition = |out: &mut String, t: &crate::model::Transition| {
        let mut line = format!("      on {}", t.port);
        if !t.guard.is_true_const() {
            let _ = write!(line, " provided {}", print_expr(&t.guard));
        }
        if !t.action.is_empty() {
            let _ = write!(line, " do {}", action(&t.action));
        }
        let _ = writeln!(out, "{line} to {}", t.to);
    };
    if grouped {
        for l in &a.locations {
            let _ = writeln!(out, "    state {l}");
            for t in a.transitions.iter().filter(|t| &t.from == l) {
                transition(out, t);
            }
        }
    } else {
        for l in &a.locations {
            let _ = writeln!(out, "    state {l}");
        }
        let mut cur: Option<&str> = None;
        for t in &a.transitions {
            if cur != Some(t.from.as_str()) {
                let _ = writeln!(out, "    state {}", t.from);
                cur = Some(&t.from);
            }
            transition(out, t);
        }
    }
    out.push_str("  end\nend\n");
}

fn write_connector(out: &mut String, c: &Connector, indent: &str) {
    let names: Vec<String> = c.ports.iter().map(|p| p.port.to_string()).collect();
    let _ = writeln!(out, "{indent}connector {}({})", c.name, names.join(", "));
    let mut items = Vec::new();
    let mut i = 0;
    while i < c.ports.len() {
        let u = c.ports[i].unit;
        let mut j = i;
        while j < c.ports.len() && c.ports[j].unit == u {
            j += 1;
        }
        let prime = if c.ports[i].trigger { "'" } else { "" };
        if j - i == 1 {
            items.push(format!("{}{prime}", c.ports[i].port));
        } else {
            let inner: Vec<String> = c.ports[i..j].iter().map(|p| p.port.to_string()).collect();
            items.push(format!("[{}]{prime}", inner.join(", ")));
        }
        i = j;
    }
    let _ = writeln!(out, "{indent}  define {}", items.join(", "));
    for cl in &c.clauses {
        let ps: Vec<String> = cl.ports.iter().map(|p| p.to_string()).collect();
        let _ = writeln!(out, "{indent}  on {}", ps.join(", "));
        if !cl.guard.is_true_const() {
            let _ = writeln!(out, "{indent}    provided {}", print_expr(&cl.guard));
        }
        if !cl.action.is_empty() {
            let _ = writeln!(out, "{indent}    do {}", action(&cl.action));
        }
    }
    if let Some(e) = &c.export {
        let _ = writeln!(out, "{indent}  export port Port {e}");
    }
}

pub fn print_connector(c: &Connector) -> String {
    let mut s = String::new();
    write_connector(&mut s, c, "");
    s
}

fn pattern(p: &Pattern) -> String {
    p.to_string()
}

fn print_compound(out: &mut String, c: &CompoundComponent) {
    let _ = writeln!(out, "compound {}", c.name);
    for i in &c.instances {
        let _ = write!(out, "  component {} {}", i.component.type_name(), i.name);
        if !i.overrides.is_empty() {
            let o: Vec<String> = i
                .overrides
                .iter()
                .map(|(p, v)| format!("{p} := {}", value(*v)))
                .collect();
            let _ = write!(out, "({})", o.join(", "));
        }
        out.push('\n');
    }
    for k in &c.connectors {
        write_connector(out, k, "  ");
    }
    for r in &c.priorities {
        let _ = write!(
            out,
            "  priority {} {} < {}",
            r.name,
            pattern(&r.low),
            pattern(&r.high)
        );
        if let Some(g) = &r.condition {
            let _ = write!(out, " provided {}", print_expr(g));
        }
        out.push('\n');
    }
    for e in &c.exports {
        let _ = writeln!(out, "  export port {} as {}", e.target, e.name);
    }
    out.push_str("end\n");
}

/// Renders `m` so that parsing the output yields an equal model.
pub fn print(m: &SourceModel) -> String {
    let mut out = String::new();
    for a in &m.atomics {
        print_atomic(&mut out, a);
        out.push('\n');
    }
    for c in &m.compounds {
        print_compound(&mut out, c);
        out.push('\n');
    }
    let _ = writeln!(out, "root {}", m.root);
    out
}

#[cfg(test)]
mod tests {
    use super::super::parse_expr;
    use super::*;

    #[test]
    fn expressions_round_trip() {
        for src in [
            "a - (b - c)",
            "(a || b) && c",
            "-(5)",
            "--(x)",
            "-x * -3",
            "!(a && b)",
            "x.y@idle || r != NDD-POSTER-NOT-FRESH",
            "id == \"Marlin\"",
            "-9223372036854775808 < 1",
        ] {
            let e = parse_expr(src).unwrap();
            let printed = print_expr(&e);
            assert_eq!(parse_expr(&printed).unwrap(), e, "{src} -> {printed}");
        }
    }
}
