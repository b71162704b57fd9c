//! `key = value` configuration files.
//!
//! Keys are long flag names (`walk-length` or `walk_length`). Values are
//! spliced into the command line ahead of the user's own flags, so explicit
//! flags override the file. Keys that belong to a different subcommand are
//! ignored, which lets one file configure a whole pipeline.

use std::collections::HashSet;
use std::ffi::OsString;
use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::CommandFactory;

use crate::args::Cli;

/// Parses a config file into `(key, value)` pairs in file order.
pub fn parse(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("line {}: expected key = value", i + 1);
        };
        let key = key.trim().replace('_', "-");
        if key.is_empty() {
            bail!("line {}: empty key", i + 1);
        }
        out.push((key, value.trim().to_string()));
    }
    Ok(out)
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut iter = args.iter();
    while let Some(a) = iter.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return iter.next().cloned();
        }
        if let Some(rest) = s.strip_prefix("--config=") {
            return Some(rest.into());
        }
    }
    None
}

/// Rewrites `argv` with the values of any `--config` file inserted right
/// after the subcommand name.
pub fn expand(argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let path = Path::new(&path);
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let entries = parse(&text).with_context(|| format!("in config {}", path.display()))?;

    let cli = Cli::command();
    let Some(sub_name) = argv.get(1).map(|s| s.to_string_lossy().into_owned()) else {
        return Ok(argv);
    };
    let Some(sub) = cli.find_subcommand(&sub_name) else {
        return Ok(argv);
    };
    let own: HashSet<String> = sub
        .get_arguments()
        .filter_map(|a| a.get_long().map(str::to_string))
        .collect();
    let any: HashSet<String> = cli
        .get_subcommands()
        .flat_map(|s| s.get_arguments().filter_map(|a| a.get_long().map(str::to_string)))
        .collect();

    let mut injected = Vec::new();
    for (key, value) in entries {
        if key == "config" {
            bail!("config files cannot include other config files");
        }
        if own.contains(&key) {
            injected.push(OsString::from(format!("--{key}={value}")));
        } else if !any.contains(&key) {
            bail!("unknown key {key:?} in config {}", path.display());
        }
    }
    let mut out = Vec::with_capacity(argv.len() + injected.len());
    out.extend(argv[..2].iter().cloned());
    out.extend(injected);
    out.extend(argv[2..].iter().cloned());
    Ok(out)
}
