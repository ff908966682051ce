//! Dataset loading: whitespace/comma/newline separated numbers with `#`
//! comment lines. Parse failures carry the line and token position.

use std::io::Read;

use bregsel::density::Sample;

use crate::CliError;

/// Read the raw text behind `--input` (a path, or stdin for `-`/absent).
/// Returns the text together with a short name for diagnostics.
pub fn read_input(input: Option<&str>) -> Result<(String, String), CliError> {
    match input {
        None | Some("-") => {
            let mut text = String::new();
            std::io::stdin()
                .read_to_string(&mut text)
                .map_err(|err| CliError::NoInput(format!("stdin: {err}")))?;
            Ok(("stdin".to_string(), text))
        }
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|err| CliError::NoInput(format!("input file '{path}': {err}")))?;
            Ok((path.to_string(), text))
        }
    }
}

/// Parse the dataset text into values. Tokens are separated by whitespace,
/// commas, or newlines; lines whose first non-blank character is `#` are
/// skipped entirely.
pub fn parse_dataset(name: &str, text: &str) -> Result<Vec<f64>, CliError> {
    let mut values = Vec::new();
    for (line_idx, line) in text.lines().enumerate() {
        let trimmed = line.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        for (tok_idx, token) in line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .enumerate()
        {
            let value: f64 = token.parse().map_err(|_| {
                CliError::Data(format!(
                    "{name}: parse error at line {}, token {}: '{token}' is not a number",
                    line_idx + 1,
                    tok_idx + 1
                ))
            })?;
            if !value.is_finite() {
                return Err(CliError::Data(format!(
                    "{name}: non-finite value at line {}, token {}: '{token}'",
                    line_idx + 1,
                    tok_idx + 1
                )));
            }
            values.push(value);
        }
    }
    if values.len() < 2 {
        return Err(CliError::Data(format!(
            "{name}: dataset has {} value(s); at least 2 are required",
            values.len()
        )));
    }
    Ok(values)
}

/// Load, parse, and wrap the dataset, echoing a one-line summary to stderr.
pub fn load_sample(input: Option<&str>) -> Result<Sample, CliError> {
    let (name, text) = read_input(input)?;
    let values = parse_dataset(&name, &text)?;
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    eprintln!(
        "bregsel: dataset '{name}': {} values, min {min}, max {max}",
        values.len()
    );
    Sample::new(values, &name).map_err(crate::module_error)
}
