use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::CliError;

/// Version of every JSON document this binary writes; bumped together with
/// the files under `schemas/`.
pub const SCHEMA_VERSION: &str = "1.0.0";

#[derive(Serialize)]
struct Envelope<'a, C: Serialize, R: Serialize> {
    schema_version: &'static str,
    command: &'a str,
    config: &'a C,
    #[serde(flatten)]
    result: &'a R,
}

pub fn to_json<C: Serialize, R: Serialize>(command: &str, config: &C, result: &R) -> Result<String, CliError> {
    let doc = Envelope { schema_version: SCHEMA_VERSION, command, config, result };
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    Ok(text)
}

pub fn print(text: &str) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

pub fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
