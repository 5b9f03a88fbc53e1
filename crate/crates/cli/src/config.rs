//! Flat `key = value` configuration files.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

/// Keys a config file may set; each mirrors the long flag of the same name.
pub const KEYS: [&str; 13] = [
    "kind", "n", "mode", "x", "y", "Y", "K", "seed", "count", "format", "output", "vectors", "golden",
];

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = match raw.split_once('#') {
                Some((before, _)) => before,
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected `key = value`", i + 1))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                bail!("line {}: unknown key {k:?}", i + 1);
            }
            values.insert(k.to_string(), v.to_string());
        }
        Ok(FileConfig { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// The command-line value if given, else the file's, else `None`.
    pub fn pick<T: FromStr>(&self, cli: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if cli.is_some() {
            return Ok(cli);
        }
        match self.raw(key) {
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| anyhow!("config key {key}: {e}")),
            None => Ok(None),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_overrides() {
        let c = FileConfig::parse("# run\nn = 12  # digits\n\nkind=sp\n").unwrap();
        assert_eq!(c.pick::<u32>(None, "n").unwrap(), Some(12));
        assert_eq!(c.pick(Some(8u32), "n").unwrap(), Some(8));
        assert_eq!(c.raw("kind"), Some("sp"));
        assert_eq!(c.pick::<u64>(None, "seed").unwrap(), None);
    }

    #[test]
    fn rejects_garbage() {
        assert!(FileConfig::parse("n 12").is_err());
        assert!(FileConfig::parse("colour = red").is_err());
        let c = FileConfig::parse("n = twelve").unwrap();
        assert!(c.pick::<u32>(None, "n").is_err());
    }
}
