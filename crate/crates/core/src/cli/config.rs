use std::ffi::OsString;

use clap::CommandFactory;

use super::Cli;

/// Values a config key may take on the command line.
fn flag_tokens(key: &str, value: &toml::Value) -> Result<Vec<OsString>, String> {
    let flag = format!("--{}", key.replace('_', "-"));
    let text = match value {
        toml::Value::Boolean(true) => return Ok(vec![flag.into()]),
        toml::Value::Boolean(false) => return Ok(vec![]),
        toml::Value::String(s) => s.clone(),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Float(f) => f.to_string(),
        other => return Err(format!("config key {key:?}: unsupported value {other}")),
    };
    Ok(vec![flag.into(), text.into()])
}

/// Position of the subcommand in `argv` and the `--config` path, if any.
fn scan(argv: &[OsString]) -> (Option<usize>, Option<OsString>) {
    let mut config = None;
    let mut sub = None;
    let mut i = 1;
    while i < argv.len() {
        let a = argv[i].to_string_lossy();
        if a == "--config" || a == "--log-level" {
            if a == "--config" {
                config = argv.get(i + 1).cloned();
            }
            i += 2;
            continue;
        }
        if let Some(p) = a.strip_prefix("--config=") {
            config = Some(p.into());
        } else if !a.starts_with('-') && sub.is_none() {
            sub = Some(i);
        }
        i += 1;
    }
    (sub, config)
}

/// Inserts the flags from the config file's stage table (and shared
/// top-level keys the stage accepts) directly after the subcommand, so that
/// explicit flags, which come later, take precedence.
pub(super) fn splice_config(argv: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let (Some(sub), Some(path)) = scan(&argv) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| format!("cannot read config {}: {e}", path.to_string_lossy()))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| format!("invalid config {}: {e}", path.to_string_lossy()))?;

    let name = argv[sub].to_string_lossy().into_owned();
    let command = Cli::command();
    let Some(stage) = command.find_subcommand(&name) else {
        return Ok(argv);
    };
    let accepts = |key: &str| {
        let long = key.replace('_', "-");
        stage.get_arguments().any(|a| a.get_long() == Some(long.as_str()))
            || command.get_arguments().any(|a| a.is_global_set() && a.get_long() == Some(long.as_str()))
    };

    let mut extra = Vec::new();
    for (key, value) in &table {
        if value.is_table() || key == "config" {
            continue;
        }
        if accepts(key) {
            extra.extend(flag_tokens(key, value)?);
        }
    }
    if let Some(section) = table.get(&name) {
        let section = section
            .as_table()
            .ok_or_else(|| format!("config entry {name:?} must be a table"))?;
        for (key, value) in section {
            extra.extend(flag_tokens(key, value)?);
        }
    }
    let mut out = argv;
    out.splice(sub + 1..sub + 1, extra);
    Ok(out)
}
