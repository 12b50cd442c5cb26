//! `key = value` text files used for synthetic-data configs and experiment specs.
//!
//! Blank lines and lines starting with `#` are ignored. Every key must be
//! consumed by the caller; leftovers are reported as config errors so typos
//! do not pass silently.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct KvFile {
    path: PathBuf,
    entries: BTreeMap<String, (String, usize)>,
}

impl KvFile {
    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(path, i + 1, "expected `key = value`"))?;
            let key = key.trim().to_owned();
            if key.is_empty() {
                return Err(Error::parse(path, i + 1, "empty key"));
            }
            if entries
                .insert(key.clone(), (value.trim().to_owned(), i + 1))
                .is_some()
            {
                return Err(Error::parse(path, i + 1, format!("duplicate key `{key}`")));
            }
        }
        Ok(Self {
            path: path.to_owned(),
            entries,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(path, &text)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn take_str(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key).map(|(v, _)| v)
    }

    pub fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.remove(key) {
            None => Ok(None),
            Some((v, line)) => v.parse::<T>().map(Some).map_err(|e| {
                Error::parse(&self.path, line, format!("bad value for `{key}`: {e}"))
            }),
        }
    }

    pub fn take_or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.take(key)?.unwrap_or(default))
    }

    /// Comma-separated list.
    pub fn take_list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.remove(key) {
            None => Ok(None),
            Some((v, line)) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<T>().map_err(|e| {
                        Error::parse(&self.path, line, format!("bad item `{s}` in `{key}`: {e}"))
                    })
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    /// Fails when keys remain that no caller asked for.
    pub fn finish(self) -> Result<()> {
        if let Some((key, (_, line))) = self.entries.into_iter().next() {
            return Err(Error::parse(&self.path, line, format!("unknown key `{key}`")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_consumes() {
        let mut kv = KvFile::parse(
            Path::new("x.txt"),
            "# comment\nseed = 7\n\nnames = a, b ,c\nlr=0.5\n",
        )
        .unwrap();
        assert_eq!(kv.take::<u64>("seed").unwrap(), Some(7));
        assert_eq!(
            kv.take_list::<String>("names").unwrap().unwrap(),
            vec!["a", "b", "c"]
        );
        assert_eq!(kv.take_or("missing", 3usize).unwrap(), 3);
        assert_eq!(kv.take::<f64>("lr").unwrap(), Some(0.5));
        kv.finish().unwrap();
    }

    #[test]
    fn leftovers_and_bad_values_are_errors() {
        let mut kv = KvFile::parse(Path::new("x.txt"), "a = 1\nb = nope\n").unwrap();
        assert!(matches!(kv.take::<u32>("b"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(kv.finish(), Err(Error::Parse { line: 1, .. })));
        assert!(KvFile::parse(Path::new("x"), "novalue\n").is_err());
        assert!(KvFile::parse(Path::new("x"), "a=1\na=2\n").is_err());
    }
}
