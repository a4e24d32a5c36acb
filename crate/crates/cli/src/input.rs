use std::io::Read;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;
use serde_json::Value;

use steiner_core::local_min::Network;
use steiner_core::smt::{steiner_minimal_trees, SmtOptions};
use steiner_core::Configuration;

use crate::usage;

pub fn read_json(path: &Path) -> anyhow::Result<Value> {
    let text = if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).context("reading stdin")?;
        s
    } else {
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?
    };
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn config_from(value: Value, path: &Path) -> anyhow::Result<Configuration> {
    serde_json::from_value(value).with_context(|| format!("{} is not a configuration", path.display()))
}

pub fn load_config(path: &Path) -> anyhow::Result<Configuration> {
    config_from(read_json(path)?, path)
}

/// A network file as written by the library, or a configuration whose
/// shortest network is unique.
pub fn load_network(path: &Path, opts: &SmtOptions) -> anyhow::Result<Network> {
    let value = read_json(path)?;
    if value.get("edges").is_some() {
        return serde_json::from_value(value).with_context(|| format!("{} is not a network", path.display()));
    }
    let config = config_from(value, path)?;
    let result = steiner_minimal_trees(&config, opts)?;
    if result.ambiguous {
        return Err(usage(format!("{} has {} shortest networks; pass one explicitly", path.display(), result.minima.len())));
    }
    Ok(result.minima.into_iter().next().expect("search returns a minimum").network)
}

pub fn write_output<T: Serialize>(out: Option<&Path>, value: &T) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
