use std::collections::HashSet;

use super::{Diagnostic, SourceModel};
use crate::model::{Connector, ModelError};

fn from_model(m: &SourceModel, e: &ModelError) -> Diagnostic {
    let (l, c) = m
        .spans
        .locate(e.scope())
        .or_else(|| m.spans.get(&format!("compound {}", m.root)))
        .or_else(|| m.spans.get(&m.root))
        .unwrap_or((1, 1));
    Diagnostic::error(e.code(), l, c, e.to_string())
}

fn never_feasible(c: &Connector) -> bool {
    !c.ports.is_empty() && c.check().is_empty() && c.feasible_masks().is_empty()
}

/// Model-invariant errors plus warnings for unreachable locations (W001),
/// locations without outgoing transitions (W002) and connectors with no
/// feasible interaction (W003). Empty iff the model is clean.
pub fn validate(m: &SourceModel) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut seen: HashSet<(&'static str, String)> = HashSet::new();
    let mut push = |d: Diagnostic, out: &mut Vec<Diagnostic>| {
        if seen.insert((d.code, d.message.clone())) {
            out.push(d);
        }
    };

    for a in &m.atomics {
        for e in a.check() {
            push(from_model(m, &e), &mut out);
        }
        let at = m.spans.get(&a.name).unwrap_or((1, 1));
        let reachable = a.structurally_reachable();
        for l in &a.locations {
            if !reachable.contains(l.as_str()) {
                push(
                    Diagnostic::warning(
                        "W001",
                        at.0,
                        at.1,
                        format!("{}: location `{l}` is unreachable", a.name),
                    ),
                    &mut out,
                );
            } else if !a.transitions.iter().any(|t| &t.from == l) {
                push(
                    Diagnostic::warning(
                        "W002",
                        at.0,
                        at.1,
                        format!("{}: location `{l}` has no outgoing transition", a.name),
                    ),
                    &mut out,
                );
            }
        }
    }
    for c in &m.compounds {
        for e in c.check() {
            push(from_model(m, &e), &mut out);
        }
        for k in c.connectors.iter().filter(|k| never_feasible(k)) {
            let at = m
                .spans
                .get(&format!("connector {}", k.name))
                .unwrap_or((1, 1));
            push(
                Diagnostic::warning(
                    "W003",
                    at.0,
                    at.1,
                    format!("connector {} has no feasible interaction", k.name),
                ),
                &mut out,
            );
        }
    }
    if !out.iter().any(|d| d.is_error()) {
        match m.root_component() {
            None => push(
                Diagnostic::error("E003", 1, 1, format!("unresolved root `{}`", m.root)),
                &mut out,
            ),
            Some(root) => {
                if let Err(errs) = crate::model::flatten(&root) {
                    for e in errs {
                        push(from_model(m, &e), &mut out);
                    }
                }
            }
        }
    }
    out.sort_by_key(|d| (d.severity, d.line, d.col));
    out
}

#[cfg(test)]
mod tests {
    use super::super::parse_unchecked;
    use super::*;

    const PAIR: &str = "
component A
  port p
  data int x := 1 range [0, 3]
  behavior initial to s
    state s
      on p provided 0 < x to t
    state t
  end
end
compound Top
  component A a
  component A b
  connector c(a.p, b.p) define a.p, b.p
end
";

    #[test]
    fn sink_location_warns() {
        let m = parse_unchecked(PAIR).unwrap();
        let d = validate(&m);
        assert_eq!(d.len(), 1, "{d:?}");
        assert_eq!(d[0].code, "W002");
        assert_eq!((d[0].line, d[0].col), (2, 1));
    }

    #[test]
    fn two_ports_of_one_instance_rejected() {
        let src = PAIR.replace("define a.p, b.p", "define a.p, a.p").replace("c(a.p, b.p)", "c(a.p, a.p)");
        let m = parse_unchecked(&src).unwrap();
        let errs: Vec<_> = validate(&m).into_iter().filter(|d| d.is_error()).collect();
        assert!(errs.iter().any(|d| d.code == "E002" || d.code == "E005"), "{errs:?}");
        let src = PAIR
            .replace("port p", "port p, q")
            .replace("state t", "state t\n      on q to s")
            .replace("define a.p, b.p", "define a.p, a.q")
            .replace("c(a.p, b.p)", "c(a.p, a.q)");
        let m = parse_unchecked(&src).unwrap();
        let errs: Vec<_> = validate(&m).into_iter().filter(|d| d.is_error()).collect();
        assert_eq!(errs[0].code, "E005");
        assert_eq!(errs[0].line, 15);
    }

    #[test]
    fn foreign_variable_in_guard_rejected() {
        let src = PAIR.replace("0 < x", "0 < b.x");
        let m = parse_unchecked(&src).unwrap();
        let errs: Vec<_> = validate(&m).into_iter().filter(|d| d.is_error()).collect();
        assert_eq!(errs[0].code, "E004");
        assert_eq!(errs[0].line, 7);
    }
}
