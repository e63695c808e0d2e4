//! Run manifests: enough recorded state to replay any invocation and
//! reproduce byte-identical output.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{CliError, CliResult, Command, VERSION};

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    /// The full argument vector (without the binary name); replaying these
    /// arguments reproduces the run.
    pub argv: Vec<String>,
    pub seed: u64,
    pub version: String,
    pub outputs: Vec<OutputRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct OutputRecord {
    pub quantity: String,
    pub value: Value,
    pub method: String,
}

impl OutputRecord {
    pub fn new(quantity: &str, value: Value, method: &str) -> Self {
        Self { quantity: quantity.into(), value, method: method.into() }
    }
}

impl RunManifest {
    pub fn new(subcommand: &str, command: &Command, seed: u64) -> Self {
        Self {
            subcommand: subcommand.into(),
            argv: command_argv(command),
            seed,
            version: VERSION.into(),
            outputs: Vec::new(),
        }
    }

    pub fn with_output(mut self, record: OutputRecord) -> Self {
        self.outputs.push(record);
        self
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("bad manifest {}: {e}", path.display())))
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    PathBuf::from(format!("{}.manifest.json", out.display()))
}

/// Reconstruct the argument vector for a command; used both for the manifest
/// and for the JSON `params` field.
pub fn command_argv(command: &Command) -> Vec<String> {
    fn push(argv: &mut Vec<String>, flag: &str, value: String) {
        argv.push(flag.to_string());
        argv.push(value);
    }
    let mut argv = Vec::new();
    match command {
        Command::Rate { schedule, n, method, trials, seed, out, format } => {
            argv.push("rate".into());
            push(&mut argv, "--schedule", schedule.clone());
            push(&mut argv, "--n", n.to_string());
            push(
                &mut argv,
                "--method",
                match method {
                    crate::Method::Recursion => "recursion",
                    crate::Method::Exact => "exact",
                    crate::Method::Mc => "mc",
                }
                .into(),
            );
            push(&mut argv, "--trials", trials.to_string());
            push(&mut argv, "--seed", seed.to_string());
            push(
                &mut argv,
                "--format",
                match format {
                    crate::Format::Json => "json",
                    crate::Format::Csv => "csv",
                }
                .into(),
            );
            if let Some(out) = out {
                push(&mut argv, "--out", out.display().to_string());
            }
        }
        Command::Ctable { schedule, n_max, check, seed, out } => {
            argv.push("ctable".into());
            push(&mut argv, "--schedule", schedule.clone());
            push(&mut argv, "--n-max", n_max.to_string());
            if *check {
                argv.push("--check".into());
            }
            push(&mut argv, "--seed", seed.to_string());
            if let Some(out) = out {
                push(&mut argv, "--out", out.display().to_string());
            }
        }
        Command::Envelope { z_min, z_max, points, out } => {
            argv.push("envelope".into());
            push(&mut argv, "--z-min", z_min.to_string());
            push(&mut argv, "--z-max", z_max.to_string());
            push(&mut argv, "--points", points.to_string());
            if let Some(out) = out {
                push(&mut argv, "--out", out.display().to_string());
            }
        }
        Command::Sharpness { m_list, u, out } => {
            argv.push("sharpness".into());
            push(&mut argv, "--m-list", m_list.clone());
            if let Some(u) = u {
                push(&mut argv, "--u", u.to_string());
            }
            if let Some(out) = out {
                push(&mut argv, "--out", out.display().to_string());
            }
        }
        Command::Verify { suite, seed, cases, out } => {
            argv.push("verify".into());
            push(&mut argv, "--suite", suite.label().into());
            push(&mut argv, "--seed", seed.to_string());
            push(&mut argv, "--cases", cases.to_string());
            if let Some(out) = out {
                push(&mut argv, "--out", out.display().to_string());
            }
        }
        Command::Iterate { operator, schedule, n, seed, out } => {
            argv.push("iterate".into());
            push(&mut argv, "--operator", operator.clone());
            push(&mut argv, "--schedule", schedule.clone());
            push(&mut argv, "--n", n.to_string());
            push(&mut argv, "--seed", seed.to_string());
            if let Some(out) = out {
                push(&mut argv, "--out", out.display().to_string());
            }
        }
        Command::Replay { .. } => unreachable!("replay runs are not manifested"),
    }
    argv
}
