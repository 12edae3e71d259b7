//! Demonstration files: a JSON header line followed by one trajectory per
//! line.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dsl::Vocabulary;
use crate::trajectory::{Step, Trajectory};

const FORMAT: &str = "sketchreward-demos";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct DemoSet {
    pub env: String,
    pub seed: u64,
    pub expert: String,
    pub trajectories: Vec<Trajectory>,
}

#[derive(Debug, thiserror::Error)]
pub enum DemoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("unsupported demo format `{format}` version {version}")]
    Version { format: String, version: u32 },
    #[error("header announces {expected} trajectories but the file holds {found}")]
    Truncated { expected: usize, found: usize },
    #[error("line {line}: unknown token `{name}`")]
    UnknownToken { line: usize, name: String },
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    env: String,
    seed: u64,
    expert: String,
    count: usize,
}

#[derive(Serialize, Deserialize)]
struct Line {
    steps: Vec<[u32; 2]>,
    tokens: Vec<String>,
    log_pi: f64,
}

pub fn save_demos(set: &DemoSet, vocab: &Vocabulary, path: &Path) -> Result<(), DemoError> {
    let io = |source| DemoError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut w = BufWriter::new(fs::File::create(path).map_err(io)?);
    let header = Header {
        format: FORMAT.into(),
        version: VERSION,
        env: set.env.clone(),
        seed: set.seed,
        expert: set.expert.clone(),
        count: set.trajectories.len(),
    };
    writeln!(w, "{}", to_line(&header)).map_err(io)?;
    for t in &set.trajectories {
        let line = Line {
            steps: t.steps().iter().map(|s| [s.state, s.action]).collect(),
            tokens: t
                .tokens()
                .iter()
                .map(|k| vocab.name(*k).to_string())
                .collect(),
            log_pi: t.log_pi(),
        };
        writeln!(w, "{}", to_line(&line)).map_err(io)?;
    }
    w.flush().map_err(io)
}

fn to_line<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("demo records serialise")
}

pub fn load_demos(path: &Path, vocab: &Vocabulary) -> Result<DemoSet, DemoError> {
    let text = fs::read_to_string(path).map_err(|source| DemoError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_demos(&text, vocab)
}

pub(crate) fn parse_demos(text: &str, vocab: &Vocabulary) -> Result<DemoSet, DemoError> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines.next().ok_or(DemoError::Malformed {
        line: 1,
        msg: "missing header".into(),
    })?;
    let header: Header = serde_json::from_str(first).map_err(|e| DemoError::Malformed {
        line: 1,
        msg: e.to_string(),
    })?;
    if header.format != FORMAT || header.version != VERSION {
        return Err(DemoError::Version {
            format: header.format,
            version: header.version,
        });
    }
    let mut trajectories = Vec::with_capacity(header.count);
    for (i, raw) in lines {
        let line = i + 1;
        let bad = |msg: String| DemoError::Malformed { line, msg };
        let rec: Line = serde_json::from_str(raw).map_err(|e| bad(e.to_string()))?;
        if rec.steps.is_empty() {
            return Err(bad("empty trajectory".into()));
        }
        let tokens = rec
            .tokens
            .iter()
            .map(|n| {
                vocab.lookup(n).ok_or_else(|| DemoError::UnknownToken {
                    line,
                    name: n.clone(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let steps = rec.steps.iter().map(|[s, a]| Step::new(*s, *a)).collect();
        let t = Trajectory::new(steps, tokens, rec.log_pi).map_err(|e| bad(e.to_string()))?;
        trajectories.push(t);
    }
    if trajectories.len() != header.count {
        return Err(DemoError::Truncated {
            expected: header.count,
            found: trajectories.len(),
        });
    }
    Ok(DemoSet {
        env: header.env,
        seed: header.seed,
        expert: header.expert,
        trajectories,
    })
}
