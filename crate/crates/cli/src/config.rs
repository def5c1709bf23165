//! Key-value configuration: one TOML file whose tables mirror the command
//! path (`[selfsim]`, `[realheat.witness]`, ...). Flags win over the file,
//! the file wins over built-in defaults.

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use std::cell::RefCell;
use std::collections::BTreeSet;
use std::path::Path;

#[derive(Debug, Default)]
pub struct Section {
    path: String,
    table: toml::Table,
    used: RefCell<BTreeSet<String>>,
}

/// Global keys allowed at the top level next to the command tables.
pub const GLOBAL_KEYS: [&str; 2] = ["workers", "gnuplot"];

pub fn load(file: Option<&Path>) -> Result<toml::Table> {
    let Some(file) = file else { return Ok(toml::Table::new()) };
    let text = std::fs::read_to_string(file).with_context(|| format!("reading config {}", file.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing config {}", file.display()))
}

impl Section {
    /// The table at `path` inside `root`; an absent table is empty.
    pub fn new(root: &toml::Table, path: &[&str]) -> Result<Self> {
        let mut table = root.clone();
        for (i, key) in path.iter().enumerate() {
            table = match table.get(*key) {
                None => toml::Table::new(),
                Some(toml::Value::Table(t)) => {
                    let mut t = t.clone();
                    if i + 1 == path.len() {
                        // Nested subcommand tables are not keys of this command.
                        t.retain(|_, v| !v.is_table());
                    }
                    t
                }
                Some(_) => bail!("config key {} must be a table", path[..=i].join(".")),
            };
        }
        Ok(Section { path: path.join("."), table, used: RefCell::new(BTreeSet::new()) })
    }

    pub fn get<T: DeserializeOwned>(&self, key: &str) -> Result<Option<T>> {
        self.used.borrow_mut().insert(key.to_string());
        match self.table.get(key) {
            None => Ok(None),
            Some(v) => v
                .clone()
                .try_into()
                .map(Some)
                .with_context(|| format!("config key {}.{key} has the wrong type", self.path)),
        }
    }

    pub fn pick<T: DeserializeOwned>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        Ok(self.pick_opt(flag, key)?.unwrap_or(default))
    }

    pub fn pick_opt<T: DeserializeOwned>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        let from_file = self.get(key)?;
        Ok(flag.or(from_file))
    }

    /// Fails on keys that no resolver asked for.
    pub fn finish(&self) -> Result<()> {
        let used = self.used.borrow();
        let unknown: Vec<&String> = self.table.keys().filter(|k| !used.contains(*k)).collect();
        if !unknown.is_empty() {
            bail!("unknown config keys in [{}]: {:?}", self.path, unknown);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_unknown_keys() {
        let root: toml::Table = toml::from_str("workers = 2\n[realheat]\n[realheat.witness]\npanels = 32\nbogus = 1\n").unwrap();
        let s = Section::new(&root, &["realheat", "witness"]).unwrap();
        assert_eq!(s.pick(None, "panels", 64usize).unwrap(), 32);
        assert_eq!(s.pick(Some(16), "panels", 64usize).unwrap(), 16);
        assert_eq!(s.pick(None, "epsilon", 1e-6).unwrap(), 1e-6);
        assert!(s.finish().is_err());
        let top = Section::new(&root, &["realheat"]).unwrap();
        top.finish().unwrap();
    }

    #[test]
    fn integers_read_as_floats() {
        let root: toml::Table = toml::from_str("[selfsim]\nalpha = 1\n").unwrap();
        let s = Section::new(&root, &["selfsim"]).unwrap();
        assert_eq!(s.pick(None, "alpha", 0.5).unwrap(), 1.0);
    }
}
