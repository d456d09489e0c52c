//! Plain-text run configuration: one `key = value` per line, `#` comments.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunConfig {
    entries: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::invalid(format!("config line {}: expected key = value", i + 1))
            })?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::invalid(format!("config line {}: empty key", i + 1)));
            }
            entries.insert(k.to_string(), v.trim().to_string());
        }
        Ok(RunConfig { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        self.entries
            .get(key)
            .map(|v| {
                v.parse()
                    .map_err(|e| Error::invalid(format!("config key {key}: {e}")))
            })
            .transpose()
    }

    pub fn set(&mut self, key: &str, value: impl Display) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    /// The flag value if given, else the configured value, else `default`.
    /// The chosen value is recorded under `key`.
    pub fn resolve<T: FromStr + Display>(
        &mut self,
        key: &str,
        flag: Option<T>,
        default: T,
    ) -> Result<T>
    where
        T::Err: Display,
    {
        let v = match flag {
            Some(v) => v,
            None => self.get(key)?.unwrap_or(default),
        };
        self.set(key, &v);
        Ok(v)
    }

    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_resolve_round_trip() {
        let mut c = RunConfig::parse("# run\nsteps = 10\n\nsampler=reverse # note\n").unwrap();
        assert_eq!(c.resolve("steps", None, 5usize).unwrap(), 10);
        assert_eq!(c.resolve("steps", Some(7usize), 5).unwrap(), 7);
        assert_eq!(c.resolve("batch", None, 64usize).unwrap(), 64);
        assert_eq!(c.get_str("sampler"), Some("reverse"));
        assert_eq!(RunConfig::parse(&c.to_text()).unwrap(), c);
        assert!(RunConfig::parse("novalue").is_err());
        assert!(c.get::<usize>("sampler").is_err());
    }
}
