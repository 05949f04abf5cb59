//! JSON and CSV formats for classes, streams, transcripts, summaries and
//! run manifests.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use appletaste_core::hypothesis::Family;
use appletaste_core::protocol::GameTranscript;
use appletaste_core::{HypothesisClass, LabeledStream};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{AppError, AppResult};

/// `{"matrix": [[0,1],...]}` or a named family such as
/// `{"family": "singletons", "n": 8}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ClassSpec {
    Matrix { matrix: Vec<Vec<u8>> },
    Family(Family),
}

impl ClassSpec {
    pub fn build(&self) -> AppResult<HypothesisClass> {
        Ok(match self {
            ClassSpec::Matrix { matrix } => HypothesisClass::from_rows(matrix)?,
            ClassSpec::Family(f) => HypothesisClass::from_family(f)?,
        })
    }

    pub fn singletons(n: usize) -> Self {
        ClassSpec::Family(Family::Singletons { n })
    }
}

/// Reads a JSON argument that is either inline (starting with `{` or `[`) or
/// a path to a file.
pub fn read_json_arg(arg: &str) -> AppResult<String> {
    let t = arg.trim_start();
    if t.starts_with('{') || t.starts_with('[') {
        return Ok(arg.to_string());
    }
    fs::read_to_string(arg).map_err(|e| AppError::Config(format!("cannot read {arg}: {e}")))
}

pub fn parse_json_arg<T: serde::de::DeserializeOwned>(arg: &str, what: &str) -> AppResult<T> {
    let text = read_json_arg(arg)?;
    serde_json::from_str(&text).map_err(|e| AppError::Config(format!("invalid {what} JSON: {e}")))
}

/// A stream as a JSON array of `[instance, label]` pairs.
pub fn parse_stream(text: &str) -> AppResult<LabeledStream> {
    serde_json::from_str(text).map_err(|e| AppError::Config(format!("invalid stream JSON: {e}")))
}

pub fn stream_to_json(stream: &LabeledStream) -> String {
    serde_json::to_string(stream).expect("streams always serialize")
}

pub const TRANSCRIPT_HEADER: [&str; 7] = [
    "round",
    "instance",
    "prediction",
    "feedback_visible",
    "true_label",
    "mistake_kind",
    "p1",
];

pub fn write_transcript_csv<W: Write>(transcript: &GameTranscript, out: W) -> AppResult<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| AppError::Runtime(format!("writing transcript: {e}"));
    w.write_record(TRANSCRIPT_HEADER).map_err(io)?;
    for r in &transcript.rounds {
        w.write_record([
            r.round.to_string(),
            r.instance.to_string(),
            r.prediction.to_string(),
            r.feedback_visible.to_string(),
            r.true_label.to_string(),
            r.mistake_kind.as_str().to_string(),
            r.p1.map(|p| p.to_string()).unwrap_or_default(),
        ])
        .map_err(io)?;
    }
    w.flush()
        .map_err(|e| AppError::Runtime(format!("writing transcript: {e}")))?;
    Ok(())
}

pub fn transcript_csv(transcript: &GameTranscript) -> AppResult<Vec<u8>> {
    let mut buf = Vec::new();
    write_transcript_csv(transcript, &mut buf)?;
    Ok(buf)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub mistakes: usize,
    pub false_pos: usize,
    pub false_neg: usize,
    pub regret: i64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Summary {
    pub fn of(transcript: &GameTranscript, class: &HypothesisClass) -> Self {
        Summary {
            mistakes: transcript.mistakes,
            false_pos: transcript.false_pos,
            false_neg: transcript.false_neg,
            regret: appletaste_core::protocol::regret(transcript, class),
            seed: transcript.seed,
            error: transcript.error.clone(),
        }
    }
}

/// Hex SHA-256 of the canonical JSON form of a config.
pub fn config_hash<T: Serialize>(config: &T) -> String {
    let bytes = serde_json::to_vec(config).expect("configs always serialize");
    Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub core_version: String,
    pub command: String,
    pub config_hash: String,
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
}

/// Output directory that records every file written to it and finishes with
/// a `manifest.json`.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> AppResult<Self> {
        fs::create_dir_all(root).map_err(|e| {
            AppError::Config(format!(
                "cannot create output directory {}: {e}",
                root.display()
            ))
        })?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> AppResult<PathBuf> {
        let p = self.root.join(name);
        fs::write(&p, bytes)
            .map_err(|e| AppError::Runtime(format!("cannot write {}: {e}", p.display())))?;
        self.written.push(name.to_string());
        Ok(p)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> AppResult<PathBuf> {
        let mut bytes = serde_json::to_vec_pretty(value).expect("outputs always serialize");
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    pub fn finish<T: Serialize>(mut self, command: &str, config: &T) -> AppResult<Manifest> {
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            core_version: appletaste_core::VERSION.to_string(),
            command: command.to_string(),
            config_hash: config_hash(config),
            config: serde_json::to_value(config).expect("configs always serialize"),
            outputs: self.written.clone(),
        };
        self.write_json("manifest.json", &manifest)?;
        Ok(manifest)
    }
}
