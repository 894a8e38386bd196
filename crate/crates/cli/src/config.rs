//! `key = value` config files merged under command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{ArgAction, Command};

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("config line {}: expected `key = value`, got {raw:?}", i + 1);
        };
        let key = k.trim().replace('-', "_");
        if key.is_empty() {
            bail!("config line {}: empty key", i + 1);
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

pub fn read(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    parse(&text)
}

/// Value of `--config` in a raw argument list.
pub fn config_path(argv: &[String]) -> Option<PathBuf> {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(v));
        }
    }
    None
}

fn flag_given(argv: &[String], long: &str) -> bool {
    let eq = format!("--{long}=");
    argv.iter().any(|a| a.strip_prefix("--") == Some(long) || a.starts_with(&eq))
}

/// Extra arguments that apply config entries not already given as flags.
/// Works on the raw argument list so that config files can supply required
/// options. Unknown keys are an error so typos do not pass silently.
pub fn extra_args(cmd: &Command, argv: &[String], entries: &[(String, String)]) -> Result<Vec<String>> {
    let sub = argv.iter().skip(1).find_map(|a| cmd.find_subcommand(a)).context("config files need a subcommand")?;
    let sub_name = sub.get_name();
    let mut out = Vec::new();
    for (key, value) in entries {
        if key == "config" {
            continue;
        }
        let arg = sub
            .get_arguments()
            .chain(cmd.get_arguments())
            .find(|a| a.get_id().as_str() == key)
            .with_context(|| format!("config key `{key}` is not an option of `{sub_name}`"))?;
        let long = arg.get_long().with_context(|| format!("config key `{key}` is positional"))?;
        if flag_given(argv, long) {
            continue;
        }
        match arg.get_action() {
            ArgAction::SetTrue => match value.as_str() {
                "true" | "1" | "yes" => out.push(format!("--{long}")),
                "false" | "0" | "no" => {}
                _ => bail!("config key `{key}`: expected a boolean, got {value:?}"),
            },
            _ => out.push(format!("--{long}={value}")),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_dashes() {
        let e = parse("# grid\nsamples = 20\nn-max-factor=1.5 # inline\n\n").unwrap();
        assert_eq!(e, vec![("samples".into(), "20".into()), ("n_max_factor".into(), "1.5".into())]);
        assert!(parse("novalue").is_err());
    }

    #[test]
    fn config_flag_forms() {
        let argv = |s: &str| s.split(' ').map(String::from).collect::<Vec<_>>();
        assert_eq!(config_path(&argv("qsat --config a.conf gen")), Some(PathBuf::from("a.conf")));
        assert_eq!(config_path(&argv("qsat gen --config=b.conf")), Some(PathBuf::from("b.conf")));
        assert_eq!(config_path(&argv("qsat gen")), None);
        assert!(flag_given(&argv("qsat gen --n=4"), "n"));
        assert!(!flag_given(&argv("qsat gen --nc-min 4"), "n"));
    }
}
