//! Report rendering and output plumbing shared by the subcommands.

use std::io::IsTerminal;
use std::path::Path;

use crate::CliError;

/// CSV numbers carry 17 significant digits so a reader parsing them back
/// recovers the exact f64.
pub fn csv_num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Whether the text format may use ANSI emphasis: only when writing to a
/// terminal and NO_COLOR is unset.
pub fn color_enabled(out: Option<&Path>) -> bool {
    out.is_none() && std::env::var_os("NO_COLOR").is_none() && std::io::stdout().is_terminal()
}

/// Wrap a heading in bold when color is allowed.
pub fn heading(text: &str, color: bool) -> String {
    if color {
        format!("\x1b[1m{text}\x1b[0m")
    } else {
        text.to_string()
    }
}

/// Deliver the finished report: stdout by default, or an atomic
/// write-then-rename when `--out` was given so readers never observe a
/// half-written file.
pub fn write_output(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    match out {
        None => {
            print!("{content}");
            Ok(())
        }
        Some(path) => {
            let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
            let file_name = path
                .file_name()
                .ok_or_else(|| {
                    CliError::Usage(format!("--out path '{}' has no file name", path.display()))
                })?
                .to_string_lossy()
                .into_owned();
            let tmp_name = format!(".{file_name}.tmp{}", std::process::id());
            let tmp = match dir {
                Some(d) => d.join(&tmp_name),
                None => std::path::PathBuf::from(&tmp_name),
            };
            std::fs::write(&tmp, content).map_err(|err| {
                CliError::Internal(format!("writing '{}': {err}", tmp.display()))
            })?;
            std::fs::rename(&tmp, path).map_err(|err| {
                let _ = std::fs::remove_file(&tmp);
                CliError::Internal(format!("renaming into '{}': {err}", path.display()))
            })
        }
    }
}
