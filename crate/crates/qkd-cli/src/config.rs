//! JSON config files whose keys are the long flag names of a subcommand.

use std::fs;

use serde_json::Value;

use crate::CliError;

/// Finds the value of `--config` in `args`, accepting both `--config PATH`
/// and `--config=PATH`.
pub fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

/// Turns a flat JSON object into flags. `true` becomes a bare flag, `false`
/// and `null` are dropped, arrays are joined with commas.
pub fn flags_from_json(text: &str) -> Result<Vec<String>, CliError> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| CliError::Validation(format!("config is not valid JSON: {e}")))?;
    let Value::Object(map) = value else {
        return Err(CliError::Validation("config must be a JSON object".into()));
    };
    let mut flags = Vec::new();
    for (key, v) in map {
        if key == "config" {
            return Err(CliError::Validation(
                "config files cannot include other config files".into(),
            ));
        }
        let flag = format!("--{key}");
        match v {
            Value::Null | Value::Bool(false) => {}
            Value::Bool(true) => flags.push(flag),
            Value::Array(items) => {
                let joined = items
                    .iter()
                    .map(scalar)
                    .collect::<Result<Vec<_>, _>>()?
                    .join(",");
                flags.push(flag);
                flags.push(joined);
            }
            other => {
                flags.push(flag);
                flags.push(scalar(&other)?);
            }
        }
    }
    Ok(flags)
}

fn scalar(v: &Value) -> Result<String, CliError> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        other => Err(CliError::Validation(format!(
            "unsupported config value {other}"
        ))),
    }
}

/// Inserts the config file's flags right after the subcommand name, so any
/// flag given on the command line overrides them.
pub fn merge(args: Vec<String>, subcommands: &[&str]) -> Result<Vec<String>, CliError> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::Io(format!("cannot read config {path}: {e}")))?;
    let flags = flags_from_json(&text)?;
    let Some(sub) = args
        .iter()
        .skip(1)
        .position(|a| subcommands.contains(&a.as_str()))
    else {
        return Ok(args);
    };
    let at = sub + 2;
    let mut merged = args[..at].to_vec();
    merged.extend(flags);
    merged.extend_from_slice(&args[at..]);
    Ok(merged)
}
