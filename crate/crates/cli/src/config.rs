//! `--config FILE`: `key=value` lines that act as flags placed before the
//! ones given on the command line.

use std::fs;
use std::io;

/// Keys that map to switches rather than valued flags.
const SWITCHES: &[&str] = &["store-chan", "verify"];

#[derive(Debug)]
pub enum ConfigError {
    Io(String, io::Error),
    Syntax(String),
}

/// Parses config text into flag tokens.
pub fn config_args(text: &str) -> Result<Vec<String>, ConfigError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::Syntax(format!("config line {}: expected key=value", i + 1)))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key.is_empty() || key == "config" {
            return Err(ConfigError::Syntax(format!("config line {}: bad key", i + 1)));
        }
        if SWITCHES.contains(&key.as_str()) {
            match value {
                "true" | "1" | "yes" => out.push(format!("--{key}")),
                "false" | "0" | "no" => {}
                v => {
                    return Err(ConfigError::Syntax(format!(
                        "config line {}: '{key}' takes true or false, got '{v}'",
                        i + 1
                    )))
                }
            }
        } else {
            out.push(format!("--{key}"));
            out.push(value.to_string());
        }
    }
    Ok(out)
}

/// Removes `--config FILE` from `args` and splices the file's flags in right
/// after the subcommand name, so explicit flags still win.
pub fn expand(mut args: Vec<String>, subcommands: &[&str]) -> Result<Vec<String>, ConfigError> {
    let Some(pos) = args
        .iter()
        .position(|a| a == "--config" || a.starts_with("--config="))
    else {
        return Ok(args);
    };
    let path = match args[pos].strip_prefix("--config=") {
        Some(p) => {
            let p = p.to_string();
            args.remove(pos);
            p
        }
        None => {
            if pos + 1 >= args.len() {
                return Err(ConfigError::Syntax("--config needs a file".into()));
            }
            args.remove(pos);
            args.remove(pos)
        }
    };
    let text = fs::read_to_string(&path).map_err(|e| ConfigError::Io(path.clone(), e))?;
    let extra = config_args(&text)?;
    let at = args
        .iter()
        .position(|a| subcommands.contains(&a.as_str()))
        .map_or(args.len().min(1), |p| p + 1);
    args.splice(at..at, extra);
    Ok(args)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn parses_keys_and_switches() {
        let args = config_args("# build\nsnr_db = 3\nstore-chan=true\nverify=false\n").unwrap();
        assert_eq!(args, strings(&["--snr-db", "3", "--store-chan"]));
        assert!(config_args("nonsense").is_err());
        assert!(config_args("store-chan=maybe").is_err());
    }

    #[test]
    fn splices_after_subcommand() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.conf");
        fs::write(&path, "seed=4\n").unwrap();
        let p = path.to_str().unwrap();
        let out = expand(strings(&["sbnd", "--threads", "2", "build", "--config", p, "--seed", "9"]), &["build"]).unwrap();
        assert_eq!(out, strings(&["sbnd", "--threads", "2", "build", "--seed", "4", "--seed", "9"]));
        let eq = format!("--config={p}");
        let out = expand(strings(&["sbnd", "build", &eq]), &["build"]).unwrap();
        assert_eq!(out, strings(&["sbnd", "build", "--seed", "4"]));
    }
}
