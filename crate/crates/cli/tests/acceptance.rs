//! End-to-end acceptance checks. Runs as a plain binary and prints one
//! PASS/FAIL line per criterion.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use bipk::engine::{self, Engine, SelectionPolicy, Trace};
use bipk::fixtures::{random_state, random_system, three_port_connector, ThreePort};
use bipk::genom::{build_dala_mini, build_system, ndd_mini, ConstraintSpec, ServiceRef, SyncMode, Variant};
use bipk::verifier::{self, explore, Exploration, PrecheckLimits, PrecheckResult};
use bipk::{flatten, SystemModel, Value};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value as Json;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

struct Cli {
    out: tempfile::TempDir,
}

struct Run {
    status: i32,
    stdout: String,
    elapsed: Duration,
}

impl Cli {
    fn new() -> Self {
        Cli {
            out: tempfile::tempdir().expect("tempdir"),
        }
    }

    fn run(&self, args: &[&str]) -> Run {
        let t = Instant::now();
        let out = Command::new(env!("CARGO_BIN_EXE_bipk"))
            .args(args)
            .env_remove("BIPK_SEED")
            .output()
            .expect("spawn bipk");
        Run {
            status: out.status.code().unwrap_or(-1),
            stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
            elapsed: t.elapsed(),
        }
    }

    fn witness_dir(&self, v: Variant) -> PathBuf {
        self.out.path().join(v.name())
    }

    /// `demo <v> verify`, returning the exit status, verdict JSON and time.
    fn demo_verify(&self, v: Variant) -> Result<(i32, Json, Duration), String> {
        let dir = self.witness_dir(v);
        let r = self.run(&["demo", v.name(), "verify", "--witness-dir", dir.to_str().unwrap()]);
        let json: Json = serde_json::from_str(&r.stdout).map_err(|e| format!("{v}: bad JSON ({e}): {}", r.stdout))?;
        Ok((r.status, json, r.elapsed))
    }
}

fn model(v: Variant) -> SystemModel {
    flatten(&build_dala_mini(v).into()).expect("scenario flattens")
}

fn loc<'a>(t: &'a Json, inst: &str) -> &'a str {
    t[inst]["loc"].as_str().unwrap_or("?")
}

fn var(t: &Json, inst: &str, v: &str) -> i64 {
    t[inst]["vars"][v].as_i64().unwrap_or(i64::MIN)
}

fn terminals(j: &Json) -> Vec<&Json> {
    j["witnesses"]
        .as_array()
        .map(|ws| ws.iter().map(|w| &w["terminal"]).collect())
        .unwrap_or_default()
}

fn c1() -> Outcome {
    let n = |k| three_port_connector(k).feasible_interactions().len();
    let got = (n(ThreePort::Unrestricted), n(ThreePort::Rendezvous), n(ThreePort::Broadcast));
    ensure!(got == (7, 1, 4), "got {got:?}");
    Ok("7 / 1 / 4 interactions".into())
}

fn c2(cli: &Cli) -> Outcome {
    let (status, j, t) = cli.demo_verify(Variant::Fig11Bug)?;
    ensure!(status == 1 && j["verdict"] == "deadlocked", "status {status}, verdict {}", j["verdict"]);
    let hit = terminals(&j).into_iter().any(|t| {
        loc(t, "ndd.MessageBox") == "abtI"
            && loc(t, "ndd.Scheduler") == "idle"
            && loc(t, "ndd.SetParams") == "exec"
            && loc(t, "ndd.GoTo") == "abrt"
            && var(t, "ndd.interfaceTimer", "t") == 2
            && var(t, "ndd.execTaskTimer", "t") == 0
    });
    ensure!(hit, "no witness with the expected terminal state");
    ensure!(t < Duration::from_secs(60), "took {t:?}");
    Ok(format!("{} deadlock states, {:.1?}", j["deadlock_states"], t))
}

fn c3(cli: &Cli) -> Outcome {
    let (status, j, t) = cli.demo_verify(Variant::Fig11Fixed)?;
    ensure!(
        status == 0 && j["verdict"] == "deadlock-free" && j["method"] == "exhaustive",
        "status {status}, verdict {}, method {}",
        j["verdict"],
        j["method"]
    );
    ensure!(t < Duration::from_secs(120), "took {t:?}");
    Ok(format!("{} states, {:.1?}", j["states"], t))
}

fn c4(cli: &Cli) -> Outcome {
    let (s, bug, t1) = cli.demo_verify(Variant::Fig12Bug)?;
    ensure!(s == 1, "fig12-bug status {s}");
    ensure!(
        terminals(&bug).into_iter().any(|t| var(t, "aspect.PolarPoster", "PosterAge") == 5
            && loc(t, "ndd.MessageBox") == "abtI"),
        "fig12-bug: no witness with PosterAge = 5 and MessageBox@abtI"
    );
    let (s, fix1, t2) = cli.demo_verify(Variant::Fig12Fix1)?;
    ensure!(s == 1, "fig12-fix1 status {s}");
    ensure!(
        terminals(&fix1).into_iter().any(|t| loc(t, "ndd.GoTo") == "abrt"),
        "fig12-fix1: no witness with GoTo@abrt"
    );
    let (s, fixed, t3) = cli.demo_verify(Variant::Fig12Fixed)?;
    ensure!(
        s == 0 && fixed["method"] == "exhaustive",
        "fig12-fixed status {s}, method {}",
        fixed["method"]
    );
    let limit = Duration::from_secs(120);
    ensure!(t1 < limit && t2 < limit && t3 < limit, "times {t1:?} {t2:?} {t3:?}");
    Ok(format!("bug/fix1 deadlock, fixed deadlock-free; {t1:.1?} {t2:.1?} {t3:.1?}"))
}

fn c5(cli: &Cli) -> Outcome {
    let (s, safe, t1) = cli.demo_verify(Variant::BatterySafe)?;
    ensure!(s == 0 && safe["verdict"] == "holds", "battery-safe: status {s}, {}", safe["verdict"]);
    let (s, unsafe_, t2) = cli.demo_verify(Variant::BatteryUnsafe)?;
    ensure!(s == 1 && unsafe_["verdict"] == "violated", "battery-unsafe: status {s}, {}", unsafe_["verdict"]);
    let t = &terminals(&unsafe_)[0];
    let (total, max) = (var(t, "battery.FIDS", "totalPwr"), var(t, "battery.init", "maxPwr"));
    ensure!(total > max, "witness terminal has totalPwr {total} <= maxPwr {max}");
    ensure!(t1 + t2 < Duration::from_secs(30), "took {:?}", t1 + t2);
    Ok(format!("holds / violated (totalPwr {total} > {max})"))
}

/// States from which GoTo's `trig` fires before both prerequisites are done.
fn early_goto_triggers(constrained: bool) -> Result<usize, String> {
    let before = ConstraintSpec::Before {
        prereqs: vec![ServiceRef::new("ndd", "SetParams"), ServiceRef::new("ndd", "SetSpeed")],
        target: ServiceRef::new("ndd", "GoTo"),
        report: "PARAMS-OR-SPEED-NOT-SET".into(),
    };
    let cons = if constrained { vec![before] } else { vec![] };
    let root = build_system("Dala", &[ndd_mini()], &cons, SyncMode::OptionalInterface).map_err(|e| e.to_string())?;
    let m = flatten(&root.into()).map_err(|e| format!("{e:?}"))?;
    let g = explore(&m, 2_000_000).map_err(|e| e.to_string())?;
    ensure!(g.status == Exploration::Complete, "exploration truncated at {}", g.len());
    let done = |s: &bipk::GlobalState, svc: &str| m.value_of(s, &format!("ndd.{svc}.done")) == Some(Value::Bool(true));
    let mut count = 0;
    for id in 0..g.len() as u32 {
        let fires = g
            .successors(id)
            .iter()
            .any(|e| m.interaction_names(e.interaction).iter().any(|p| p == "ndd.GoTo.trig"));
        if fires {
            let s = g.state(id);
            if !(done(&s, "SetParams") && done(&s, "SetSpeed")) {
                count += 1;
            }
        }
    }
    Ok(count)
}

fn c6() -> Outcome {
    let t = Instant::now();
    let with = early_goto_triggers(true)?;
    let without = early_goto_triggers(false)?;
    ensure!(with == 0, "{with} early triggers with the constraint");
    ensure!(without >= 1, "no early trigger without the constraint");
    ensure!(t.elapsed() < Duration::from_secs(60), "took {:?}", t.elapsed());
    Ok(format!("0 with, {without} without; {:.1?}", t.elapsed()))
}

fn c7() -> Outcome {
    let t = Instant::now();
    let (mut proved, mut violations) = (0, Vec::new());
    for seed in 0..300 {
        let m = flatten(&random_system(seed).into()).map_err(|e| format!("seed {seed}: {e:?}"))?;
        let pre = verifier::precheck_deadlock(&m, PrecheckLimits::default()).map_err(|e| e.to_string())?;
        if matches!(pre, PrecheckResult::Unsat) {
            proved += 1;
            let g = explore(&m, 1_000_000).map_err(|e| e.to_string())?;
            if !g.sinks().is_empty() {
                violations.push(seed);
            }
        }
    }
    ensure!(violations.is_empty(), "unsound on seeds {violations:?}");
    ensure!(proved > 0, "the sweep never exercised a deadlock-free proof");
    Ok(format!("300 systems, {proved} proved deadlock-free, 0 violations, {:.1?}", t.elapsed()))
}

fn c8(cli: &Cli) -> Outcome {
    let t = Instant::now();
    for seed in 0..50u64 {
        let seed_s = seed.to_string();
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let trace = cli.out.path().join(format!("run-{seed}-{rep}.jsonl"));
            let r = cli.run(&[
                "demo", "fig11-fixed", "run", "--steps", "300", "--seed", &seed_s, "--trace",
                trace.to_str().unwrap(),
            ]);
            ensure!(r.status == 0, "seed {seed}: status {}", r.status);
            outputs.push((r.stdout, fs::read(&trace).map_err(|e| e.to_string())?));
        }
        ensure!(outputs[0] == outputs[1], "seed {seed}: runs differ");
    }
    let m = model(Variant::Fig11Fixed);
    let mut audited = 0;
    for seed in 0..50u64 {
        let mut engine = Engine::new(&m, SelectionPolicy::SeededUniform(seed));
        let mut s = m.initial_state();
        for i in 0..300 {
            for e in engine::maximal_enabled(&m, &s).map_err(|e| e.to_string())? {
                let next = engine::fire(&m, &s, e).map_err(|e| e.to_string())?;
                let v = engine::frame_violations(&m, &s, e, &next);
                ensure!(v.is_empty(), "seed {seed} step {i}: {v:?}");
                audited += 1;
            }
            match engine.step(&s, i).map_err(|e| e.to_string())? {
                engine::StepOutcome::Fired(_, next) => s = next,
                engine::StepOutcome::Deadlock => break,
            }
        }
    }
    Ok(format!("100 runs identical, {audited} firings audited, {:.1?}", t.elapsed()))
}

fn c9() -> Outcome {
    let t = Instant::now();
    let mut fixtures: Vec<(String, SystemModel)> = Variant::ALL.iter().map(|&v| (v.to_string(), model(v))).collect();
    for seed in 0..20 {
        fixtures.push((format!("random-{seed}"), flatten(&random_system(seed).into()).unwrap()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut mismatches = Vec::new();
    for (name, m) in &fixtures {
        let dis = verifier::compute_dis(m);
        for _ in 0..1000 {
            let s = random_state(m, &mut rng);
            let by_dis = dis.holds(m, &s).map_err(|e| e.to_string())?;
            let none = m.enabled_interactions(&s).map_err(|e| e.to_string())?.is_empty();
            if by_dis != none {
                mismatches.push(name.clone());
            }
        }
    }
    ensure!(mismatches.is_empty(), "{} mismatches, first in {}", mismatches.len(), mismatches[0]);
    ensure!(t.elapsed() < Duration::from_secs(60), "took {:?}", t.elapsed());
    Ok(format!("{} fixtures x 1000 states, 0 mismatches", fixtures.len()))
}

fn replay_dir(dir: &Path, v: Variant) -> Result<usize, String> {
    let m = model(v);
    let bad = match v.bad_state() {
        Some(p) => Some(
            verifier::resolve_property(&m, &bipk::dsl::parse_expr(p).map_err(|d| d.to_string())?)?,
        ),
        None => None,
    };
    let mut n = 0;
    let mut files: Vec<_> = fs::read_dir(dir)
        .map_err(|e| format!("{}: {e}", dir.display()))?
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    for f in files {
        let trace = Trace::from_jsonl(&fs::read_to_string(&f).unwrap()).map_err(|e| e.to_string())?;
        let end = engine::replay(&m, &trace).map_err(|e| format!("{}: {e}", f.display()))?;
        let ok = match &bad {
            Some(b) => engine::holds(b, &end).map_err(|e| e.to_string())?,
            None => engine::maximal_enabled(&m, &end).map_err(|e| e.to_string())?.is_empty(),
        };
        ensure!(ok, "{}: terminal state is not a deadlock/bad state", f.display());
        n += 1;
    }
    Ok(n)
}

fn c10(cli: &Cli) -> Outcome {
    let mut total = 0;
    for v in [Variant::Fig11Bug, Variant::Fig12Bug, Variant::Fig12Fix1, Variant::BatteryUnsafe] {
        let n = replay_dir(&cli.witness_dir(v), v)?;
        ensure!(n > 0, "{v}: no witness files");
        total += n;
    }
    Ok(format!("{total} witnesses replayed"))
}

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn main() {
    let cli = Cli::new();
    let criteria: Vec<Criterion<'_>> = vec![
        ("connector semantics", Box::new(c1)),
        ("timer deadlock reproduced", Box::new(|| c2(&cli))),
        ("timer deadlock fixed", Box::new(|| c3(&cli))),
        ("stale-poster deadlock and fixes", Box::new(|| c4(&cli))),
        ("battery budget", Box::new(|| c5(&cli))),
        ("before constraint", Box::new(c6)),
        ("precheck soundness", Box::new(c7)),
        ("engine determinism and frame", Box::new(|| c8(&cli))),
        ("DIS agrees with enabledness", Box::new(c9)),
        ("witness replay", Box::new(|| c10(&cli))),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
