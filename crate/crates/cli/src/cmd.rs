use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::Context;
use bipk::dsl::{self, Diagnostic, SourceModel};
use bipk::engine::{Engine, SelectionPolicy, Status};
use bipk::genom::{build_dala_mini, parse_genom, Variant};
use bipk::verifier::{self, Options, Verdict};
use bipk::SystemModel;
use serde_json::json;

use crate::{DemoAction, Format, Policy, RunArgs, VerifyArgs};

pub const OK: i32 = 0;
pub const FOUND: i32 = 1;
pub const USAGE: i32 = 2;
pub const INTERNAL: i32 = 3;

/// A command that could not produce its normal result.
#[derive(Debug)]
pub struct Failure {
    pub status: i32,
    pub error: anyhow::Error,
}

impl Failure {
    fn usage(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            status: USAGE,
            error: error.into(),
        }
    }

    fn internal(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            status: INTERNAL,
            error: error.into(),
        }
    }

    pub fn report(self) -> i32 {
        eprintln!("error: {:#}", self.error);
        self.status
    }
}

type CmdResult = Result<i32, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::usage)
}

fn print_diagnostics(file: &Path, diags: &[Diagnostic]) {
    for d in diags {
        eprintln!("{}", d.render(&file.display().to_string()));
    }
}

/// Writes to stdout; a closed pipe on the reading side is not an error.
fn out(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn emit(format: Format, value: &serde_json::Value, text: impl FnOnce() -> String) {
    let body = match format {
        Format::Json => serde_json::to_string_pretty(value).expect("json"),
        Format::Text => text(),
    };
    out(&(body + "\n"));
}

pub fn check(file: &Path, format: Format) -> CmdResult {
    let src = read(file)?;
    let (diags, status) = match dsl::load(&src) {
        Ok((_, warnings)) => (warnings, OK),
        Err(diags) => (diags, USAGE),
    };
    print_diagnostics(file, &diags);
    let errors = diags.iter().filter(|d| d.is_error()).count();
    let warnings = diags.len() - errors;
    emit(
        format,
        &json!({"file": file.display().to_string(), "errors": errors, "warnings": warnings}),
        || format!("{}: {errors} error(s), {warnings} warning(s)", file.display()),
    );
    Ok(status)
}

pub fn load(file: &Path) -> Result<SystemModel, Failure> {
    let src = read(file)?;
    match dsl::load(&src) {
        Ok((m, warnings)) => {
            print_diagnostics(file, &warnings);
            Ok(m)
        }
        Err(diags) => {
            print_diagnostics(file, &diags);
            Err(Failure::usage(anyhow::anyhow!("{} does not validate", file.display())))
        }
    }
}

fn write_trace(path: &Path, trace: &bipk::engine::Trace) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)
            .with_context(|| format!("creating {}", dir.display()))
            .map_err(Failure::usage)?;
    }
    fs::write(path, trace.to_jsonl())
        .with_context(|| format!("writing {}", path.display()))
        .map_err(Failure::usage)
}

pub fn run(m: &SystemModel, args: &RunArgs, format: Format) -> CmdResult {
    let policy = match args.policy {
        Policy::Seeded => SelectionPolicy::SeededUniform(args.seed),
        Policy::First => SelectionPolicy::FirstInCanonicalOrder,
    };
    let mut engine = Engine::new(m, policy);
    let pause = Duration::from_millis(args.tick_sleep_ms);
    let result = engine.run_with(m.initial_state(), args.steps, |i, _| {
        if i > 0 && !pause.is_zero() {
            std::thread::sleep(pause);
        }
        false
    });
    let (trace, last) = match result {
        Ok(r) => r,
        Err(e) => {
            if let Some(path) = &args.trace {
                write_trace(path, &e.trace)?;
            }
            return Err(Failure::internal(e));
        }
    };
    if let Some(path) = &args.trace {
        write_trace(path, &trace)?;
    }
    let status = match trace.status {
        Status::Deadlock => "deadlock",
        Status::StepLimit => "step-limit",
        Status::ExternalStop => "external-stop",
    };
    emit(
        format,
        &json!({
            "status": status,
            "steps": trace.events.len(),
            "seed": trace.seed,
            "policy": trace.policy,
            "final_state": verifier::terminal_json(m, &last),
        }),
        || format!("{status} after {} steps\n{}", trace.events.len(), m.describe(&last)),
    );
    Ok(if trace.status == Status::Deadlock { FOUND } else { OK })
}

/// Exit status of a verdict.
pub fn verdict_status(v: &Verdict) -> i32 {
    match v {
        Verdict::DeadlockFree { .. } | Verdict::Holds { .. } => OK,
        Verdict::Deadlocked { .. } | Verdict::Violated { .. } => FOUND,
        Verdict::Inconclusive { .. } => INTERNAL,
    }
}

pub fn verify(
    m: &SystemModel,
    args: &VerifyArgs,
    default_property: Option<&str>,
    max_witnesses: usize,
    format: Format,
) -> CmdResult {
    let opts = Options {
        bound: args.bound,
        max_witnesses,
        ..Options::default()
    };
    let verdict = match args.property.as_deref().or(default_property) {
        Some(p) => {
            let e = dsl::parse_expr(p).map_err(|d| Failure::usage(anyhow::anyhow!("property: {d}")))?;
            let bad = verifier::resolve_property(m, &e)
                .map_err(|msg| Failure::usage(anyhow::anyhow!("property: {msg}")))?;
            verifier::check_safety(m, &bad, opts)
        }
        None => verifier::verify(m, opts),
    }
    .map_err(Failure::internal)?;

    let mut files = Vec::new();
    if let Some(dir) = &args.witness_dir {
        for (i, w) in verdict.witnesses().iter().enumerate() {
            let path: PathBuf = dir.join(format!("witness-{i:02}.jsonl"));
            write_trace(&path, &w.trace)?;
            files.push(path.display().to_string());
        }
    }
    if let Verdict::Inconclusive { states, .. } = &verdict {
        eprintln!("inconclusive: exploration bound of {} states reached after {states}", args.bound);
    }
    emit(format, &verdict.to_json(m, &files), || {
        let mut out = format!("{} ({} states)", verdict.name(), verdict.states());
        for (i, w) in verdict.witnesses().iter().enumerate() {
            out.push_str(&format!("\nwitness {i} ({} steps): {}", w.path.len(), w.summary));
        }
        out
    });
    Ok(verdict_status(&verdict))
}

pub fn gen(spec: &Path, output: Option<&Path>) -> CmdResult {
    let src = read(spec)?;
    let file = parse_genom(&src)
        .with_context(|| spec.display().to_string())
        .map_err(Failure::usage)?;
    let root = file
        .build()
        .with_context(|| spec.display().to_string())
        .map_err(Failure::usage)?;
    let model = SourceModel::from_root(&root.into())
        .map_err(|e| Failure::usage(anyhow::anyhow!("{e}")))?;
    let text = dsl::print(&model);
    match output {
        Some(path) => fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(Failure::usage)?,
        None => out(&text),
    }
    Ok(OK)
}

/// Verdicts of the reference scenarios list every distinct deadlock shape.
const DEMO_WITNESSES: usize = 64;

pub fn demo(variant: &str, action: DemoAction, format: Format) -> CmdResult {
    let v: Variant = variant.parse().map_err(|e: String| Failure::usage(anyhow::anyhow!(e)))?;
    let m = bipk::flatten(&build_dala_mini(v).into())
        .map_err(|errs| Failure::internal(anyhow::anyhow!("{v}: {errs:?}")))?;
    match action {
        DemoAction::Run(args) => run(&m, &args, format),
        DemoAction::Verify(args) => verify(&m, &args, v.bad_state(), DEMO_WITNESSES, format),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use bipk::verifier::{Method, Reason};

    #[test]
    fn exit_codes_follow_verdicts() {
        let cases = [
            (Verdict::DeadlockFree { method: Method::Precheck, states: 0 }, OK),
            (Verdict::Holds { method: Method::Exhaustive, states: 3 }, OK),
            (Verdict::Deadlocked { witnesses: vec![], total: 1, states: 3 }, FOUND),
            (Verdict::Violated { witnesses: vec![], states: 3 }, FOUND),
            (
                Verdict::Inconclusive { candidates: vec![], reason: Reason::BoundExceeded, states: 3 },
                INTERNAL,
            ),
        ];
        for (v, code) in cases {
            assert_eq!(verdict_status(&v), code, "{}", v.name());
        }
    }
}
