//! `--config FILE`: flat `key = value` lines whose keys are long flag names.
//!
//! Entries are spliced into `argv` right after the subcommand, skipping any
//! flag the command line already sets, so flags win over the file and the
//! file wins over the built-in defaults. A `command` key names the
//! subcommand when `argv` has none.

use std::ffi::OsString;
use std::path::Path;

use clap::CommandFactory;

use crate::args::{Cli, SUBCOMMANDS};
use crate::CliError;

/// Parses the config text into ordered `(key, value)` pairs.
pub fn parse(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::usage(
                "config",
                format!("line {}: expected `key = value`", i + 1),
            ));
        };
        let key = key.trim().trim_start_matches("--");
        if key.is_empty() {
            return Err(CliError::usage(
                "config",
                format!("line {}: empty key", i + 1),
            ));
        }
        let value = unquote(value.trim()).ok_or_else(|| {
            CliError::usage("config", format!("line {}: unterminated quote", i + 1))
        })?;
        entries.push((key.to_string(), value));
    }
    Ok(entries)
}

fn unquote(v: &str) -> Option<String> {
    let Some(inner) = v.strip_prefix('"') else {
        return Some(v.to_string());
    };
    let mut out = String::new();
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' => out.push(chars.next()?),
            '"' => return chars.as_str().trim().is_empty().then_some(out),
            c => out.push(c),
        }
    }
    None
}

fn config_path(argv: &[OsString]) -> Option<OsString> {
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(p.into());
        }
    }
    None
}

fn subcommand_index(argv: &[OsString]) -> Option<usize> {
    let mut skip = false;
    for (i, a) in argv.iter().enumerate().skip(1) {
        if skip {
            skip = false;
            continue;
        }
        let s = a.to_string_lossy();
        if s == "--config" || s == "--threads" {
            skip = true;
        } else if SUBCOMMANDS.contains(&s.as_ref()) {
            return Some(i);
        }
    }
    None
}

fn present(argv: &[OsString], key: &str) -> bool {
    let flag = format!("--{key}");
    let prefix = format!("--{key}=");
    argv.iter().any(|a| {
        let s = a.to_string_lossy();
        s == flag || s.starts_with(&prefix)
    })
}

fn is_true(v: &str) -> Result<bool, CliError> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(CliError::usage(
            "config",
            format!("expected a boolean, got {v:?}"),
        )),
    }
}

/// Applies the config file named in `argv`, if any.
pub fn expand(mut argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let path = Path::new(&path);
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage("file_not_found", format!("{}: {e}", path.display())))?;
    let mut entries = parse(&text)?;

    let at = match subcommand_index(&argv) {
        Some(i) => i,
        None => {
            let Some(pos) = entries.iter().position(|(k, _)| k == "command") else {
                return Ok(argv);
            };
            argv.push(entries[pos].1.clone().into());
            argv.len() - 1
        }
    };
    entries.retain(|(k, _)| k != "command");

    let name = argv[at].to_string_lossy().into_owned();
    let root = Cli::command();
    let sub = root
        .find_subcommand(&name)
        .ok_or_else(|| CliError::usage("config", format!("unknown subcommand {name:?}")))?;

    let mut extra: Vec<OsString> = Vec::new();
    for (key, value) in entries {
        if key == "config" {
            return Err(CliError::usage(
                "config",
                "config files cannot include other config files",
            ));
        }
        if present(&argv, &key) {
            continue;
        }
        let arg = sub
            .get_arguments()
            .chain(root.get_arguments())
            .find(|a| a.get_long() == Some(key.as_str()))
            .ok_or_else(|| CliError::usage("config", format!("unknown key {key:?} for {name}")))?;
        let flag = format!("--{key}");
        if arg.get_action().takes_values() {
            extra.push(flag.into());
            extra.push(value.into());
        } else if is_true(&value)? {
            extra.push(flag.into());
        }
    }
    argv.splice(at + 1..at + 1, extra);
    Ok(argv)
}
