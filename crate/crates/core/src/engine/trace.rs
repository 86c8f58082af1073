//! Trace records and their JSON Lines form.

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::model::{GlobalState, SystemModel, Value};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Delta {
    pub var: String,
    pub old: Value,
    pub new: Value,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepEvent {
    pub step: usize,
    pub connector: String,
    pub interaction: Vec<String>,
    pub pre_hash: String,
    /// New location of every participating instance.
    pub locs: BTreeMap<String, String>,
    pub deltas: Vec<Delta>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    StepLimit,
    Deadlock,
    ExternalStop,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub model_hash: String,
    pub seed: Option<u64>,
    pub policy: String,
    pub events: Vec<StepEvent>,
    pub status: Status,
}

#[derive(Serialize, Deserialize)]
struct Header {
    model_hash: String,
    seed: Option<u64>,
    policy: String,
}

#[derive(Serialize, Deserialize)]
struct Footer {
    status: Status,
    steps: usize,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Content hash of the flattened model.
pub fn model_hash(m: &SystemModel) -> String {
    let json = serde_json::to_vec(m).expect("model serializes");
    hex(&Sha256::digest(&json))
}

/// Stable hash of a state; symbols hash by spelling, so the value does not
/// depend on interning order.
pub fn state_hash(s: &GlobalState) -> String {
    let mut h = Sha256::new();
    for l in &s.locs {
        h.update((*l as u64).to_le_bytes());
    }
    for v in &s.vals {
        match v {
            Value::Int(i) => {
                h.update([0]);
                h.update(i.to_le_bytes());
            }
            Value::Bool(b) => h.update([1, *b as u8]),
            Value::Sym(s) => {
                h.update([2]);
                h.update(s.as_str().as_bytes());
                h.update([0]);
            }
        }
    }
    hex(&h.finalize()[..8])
}

impl Trace {
    pub fn write_jsonl(&self, mut w: impl Write) -> io::Result<()> {
        let header = Header {
            model_hash: self.model_hash.clone(),
            seed: self.seed,
            policy: self.policy.clone(),
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        for e in &self.events {
            serde_json::to_writer(&mut w, e)?;
            w.write_all(b"\n")?;
        }
        serde_json::to_writer(
            &mut w,
            &Footer {
                status: self.status,
                steps: self.events.len(),
            },
        )?;
        w.write_all(b"\n")
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("write to vec");
        String::from_utf8(buf).expect("json is utf-8")
    }

    pub fn read_jsonl(r: impl BufRead) -> io::Result<Trace> {
        let bad = |m: String| io::Error::new(io::ErrorKind::InvalidData, m);
        let lines: Vec<String> = r
            .lines()
            .filter(|l| !matches!(l, Ok(s) if s.trim().is_empty()))
            .collect::<Result<_, _>>()?;
        if lines.len() < 2 {
            return Err(bad("trace needs a header and a footer".into()));
        }
        let header: Header =
            serde_json::from_str(&lines[0]).map_err(|e| bad(format!("header: {e}")))?;
        let footer: Footer = serde_json::from_str(&lines[lines.len() - 1])
            .map_err(|e| bad(format!("footer: {e}")))?;
        let events = lines[1..lines.len() - 1]
            .iter()
            .enumerate()
            .map(|(i, l)| serde_json::from_str(l).map_err(|e| bad(format!("line {}: {e}", i + 2))))
            .collect::<Result<Vec<StepEvent>, _>>()?;
        if footer.steps != events.len() {
            return Err(bad(format!(
                "footer says {} steps, found {}",
                footer.steps,
                events.len()
            )));
        }
        Ok(Trace {
            model_hash: header.model_hash,
            seed: header.seed,
            policy: header.policy,
            events,
            status: footer.status,
        })
    }

    pub fn from_jsonl(s: &str) -> io::Result<Trace> {
        Trace::read_jsonl(s.as_bytes())
    }
}
