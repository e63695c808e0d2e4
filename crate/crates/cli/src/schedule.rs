//! Schedule-source parsing for the CLI.
//!
//! Accepted forms:
//!   const:A            constant alpha, length chosen by the subcommand
//!   two-block:M,U      the sharpness construction (length 2M)
//!   uniform-random     iid Uniform[0,1] alphas, seeded by --seed
//!   file:PATH          whitespace/comma-separated alphas from a file
//!   json:{...}         a serialized ScheduleSpec

use kmreg::bounds::{ScheduleSpec, StepSchedule};

use crate::{CliError, CliResult};

pub fn parse(source: &str, len: usize, seed: u64) -> CliResult<StepSchedule> {
    let spec = if let Some(alpha) = source.strip_prefix("const:") {
        let alpha: f64 =
            alpha.parse().map_err(|e| CliError::Usage(format!("bad alpha: {e}")))?;
        ScheduleSpec::Const { alpha, len }
    } else if let Some(rest) = source.strip_prefix("two-block:") {
        let (m, u) = rest
            .split_once(',')
            .ok_or_else(|| CliError::Usage("two-block needs M,U".into()))?;
        ScheduleSpec::TwoBlock {
            m: m.trim().parse().map_err(|e| CliError::Usage(format!("bad m: {e}")))?,
            u: u.trim().parse().map_err(|e| CliError::Usage(format!("bad u: {e}")))?,
        }
    } else if source == "uniform-random" {
        ScheduleSpec::UniformRandom { len, seed }
    } else if let Some(path) = source.strip_prefix("file:") {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {path}: {e}")))?;
        let alphas: Vec<f64> = text
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::Usage(format!("bad schedule file {path}: {e}")))?;
        ScheduleSpec::Explicit { alphas }
    } else if let Some(json) = source.strip_prefix("json:") {
        serde_json::from_str(json)
            .map_err(|e| CliError::Usage(format!("bad schedule json: {e}")))?
    } else {
        return Err(CliError::Usage(format!("unrecognized schedule source '{source}'")));
    };
    spec.build().map_err(|e| CliError::Usage(e.to_string()))
}
