//! Flat `key = value` files with dotted keys.
//!
//! Blank lines and lines starting with `#` are ignored; keys are unique;
//! values run to the end of the line. Lists are comma separated.

use std::collections::BTreeMap;
use std::fmt::{self, Display, Write as _};
use std::str::FromStr;

use crate::error::{HarnessError, Result};

pub struct KvReader {
    origin: String,
    entries: BTreeMap<String, (String, usize)>,
}

fn valid_key(k: &str) -> bool {
    !k.is_empty()
        && !k.starts_with('.')
        && !k.ends_with('.')
        && !k.contains("..")
        && k.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-'))
}

impl KvReader {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let err = |line, message: String| HarnessError::Config {
            path: origin.to_string(),
            line,
            message,
        };
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(err(i + 1, format!("expected `key = value`, found {line:?}")));
            };
            let (key, value) = (key.trim(), value.trim());
            if !valid_key(key) {
                return Err(err(i + 1, format!("invalid key {key:?}")));
            }
            if value.is_empty() {
                return Err(err(i + 1, format!("key {key:?} has no value")));
            }
            if let Some((_, first)) = entries.insert(key.to_string(), (value.to_string(), i + 1)) {
                return Err(err(i + 1, format!("duplicate key {key:?} (first set on line {first})")));
            }
        }
        Ok(Self {
            origin: origin.to_string(),
            entries,
        })
    }

    /// A config error located in this file.
    pub fn error(&self, line: usize, message: String) -> HarnessError {
        HarnessError::Config {
            path: self.origin.clone(),
            line,
            message,
        }
    }

    /// Sets or replaces `key` from outside the file (line 0).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !valid_key(key) {
            return Err(self.error(0, format!("invalid key {key:?}")));
        }
        self.entries.insert(key.to_string(), (value.trim().to_string(), 0));
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        match pair.split_once('=') {
            Some((k, v)) if !v.trim().is_empty() => self.set(k.trim(), v),
            _ => Err(HarnessError::Usage(format!("override {pair:?} is not `key=value`"))),
        }
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    /// Removes and parses `key`.
    pub fn take<T>(&mut self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.entries.remove(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse()
                .map(Some)
                .map_err(|e| self.error(line, format!("{key}: {e}"))),
        }
    }

    pub fn take_list<T>(&mut self, key: &str) -> Result<Option<Vec<T>>>
    where
        T: FromStr,
        T::Err: Display,
    {
        let Some((v, line)) = self.entries.remove(key) else {
            return Ok(None);
        };
        let items = v
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|e| self.error(line, format!("{key}: {:?}: {e}", s.trim())))
            })
            .collect::<Result<Vec<T>>>()?;
        if items.is_empty() {
            return Err(self.error(line, format!("{key}: empty list")));
        }
        Ok(Some(items))
    }

    /// Line on which `key` was set, if present.
    pub fn line_of(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|(_, l)| *l)
    }

    /// Fails on the first key nobody consumed.
    pub fn finish(self) -> Result<()> {
        match self.entries.iter().min_by_key(|(_, (_, line))| *line) {
            None => Ok(()),
            Some((key, (_, line))) => Err(self.error(*line, format!("unknown key {key:?}"))),
        }
    }
}

/// Float text that parses back to the same bits.
pub struct Exact(pub f64);

impl Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

#[derive(Default)]
pub struct KvWriter {
    out: String,
}

impl KvWriter {
    pub fn set(&mut self, key: &str, value: impl Display) -> &mut Self {
        let _ = writeln!(self.out, "{key} = {value}");
        self
    }

    pub fn set_f64(&mut self, key: &str, value: f64) -> &mut Self {
        self.set(key, Exact(value))
    }

    pub fn set_list(&mut self, key: &str, values: impl IntoIterator<Item = impl Display>) -> &mut Self {
        let joined: Vec<String> = values.into_iter().map(|v| v.to_string()).collect();
        self.set(key, joined.join(", "))
    }

    pub fn finish(self) -> String {
        self.out
    }
}
