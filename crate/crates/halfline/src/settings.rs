//! Folding a JSON config file into the argument list.

use std::ffi::OsString;

use serde_json::Value;

use crate::cli::CliError;

const CONFIG_FLAG: &str = "--json-config";

/// Removes `--json-config FILE` from `args` and inserts the file's entries as flags right after
/// the subcommand path, ahead of the explicit flags so that those win.
pub(crate) fn expand_json_config(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let mut rest = Vec::with_capacity(args.len());
    let mut config = None;
    let mut it = args.into_iter();
    let program = it.next();
    while let Some(a) = it.next() {
        let text = a.to_string_lossy();
        if text == CONFIG_FLAG {
            let path = it.next().ok_or_else(|| CliError::Usage(format!("{CONFIG_FLAG} needs a file")))?;
            config = Some(path);
        } else if let Some(p) = text.strip_prefix("--json-config=") {
            config = Some(OsString::from(p));
        } else {
            rest.push(a);
        }
    }
    let Some(path) = config else {
        return Ok(program.into_iter().chain(rest).collect());
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.to_string_lossy())))?;
    let json: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("invalid JSON in {}: {e}", path.to_string_lossy())))?;
    let Value::Object(map) = json else {
        return Err(CliError::Usage("JSON config must be an object".into()));
    };
    let mut flags = Vec::new();
    for (key, value) in map {
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            Value::Bool(true) => flags.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::Number(n) => flags.extend([flag, n.to_string()]),
            Value::String(s) => flags.extend([flag, s]),
            Value::Array(items) => {
                let joined: Vec<String> = items
                    .iter()
                    .map(|v| match v {
                        Value::String(s) => s.clone(),
                        other => other.to_string(),
                    })
                    .collect();
                flags.extend([flag, joined.join(",")]);
            }
            Value::Object(_) => return Err(CliError::Usage(format!("config entry `{key}` must not be an object"))),
        }
    }
    let depth = rest.iter().take(2).take_while(|a| !a.to_string_lossy().starts_with('-')).count();
    let mut out: Vec<OsString> = program.into_iter().collect();
    out.extend(rest.drain(..depth));
    out.extend(flags.into_iter().map(OsString::from));
    out.extend(rest);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn inserts_after_subcommands() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"kappa": 2, "y": 0.5, "seed": 3, "fold": true, "off": false}"#).unwrap();
        let args = os(&["halfline", "verify", "bounds", "--json-config", path.to_str().unwrap(), "--kappa", "1"]);
        let out = expand_json_config(args).unwrap();
        let out: Vec<String> = out.iter().map(|s| s.to_string_lossy().into_owned()).collect();
        assert_eq!(&out[..3], &["halfline", "verify", "bounds"]);
        assert_eq!(out.last().unwrap(), "1");
        assert!(out.contains(&"--fold".to_string()) && !out.contains(&"--off".to_string()));
        let k = out.iter().position(|s| s == "--kappa").unwrap();
        assert_eq!(out[k + 1], "2");
    }

    #[test]
    fn untouched_without_config() {
        let args = os(&["halfline", "density", "--beta", "-1"]);
        assert_eq!(expand_json_config(args.clone()).unwrap(), args);
    }
}
