//! `key = value` text files with `#` comments and dotted keys.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KvError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: bad value `{value}` for `{key}`: {msg}")]
    Value {
        line: usize,
        key: String,
        value: String,
        msg: String,
    },
    #[error("unknown key `{key}` (line {line})")]
    Unknown { line: usize, key: String },
}

/// Parsed entries, consumed key by key so leftovers can be reported.
#[derive(Clone, Debug, Default)]
pub struct KvFile {
    entries: BTreeMap<String, (String, usize)>,
}

impl KvFile {
    pub fn parse(src: &str) -> Result<Self, KvError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in src.lines().enumerate() {
            let line = i + 1;
            let text = raw.split('#').next().unwrap_or("").trim();
            if text.is_empty() {
                continue;
            }
            let (k, v) = text.split_once('=').ok_or(KvError::Syntax { line })?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(KvError::Syntax { line });
            }
            if entries
                .insert(k.to_string(), (v.to_string(), line))
                .is_some()
            {
                return Err(KvError::Duplicate {
                    line,
                    key: k.to_string(),
                });
            }
        }
        Ok(Self { entries })
    }

    /// Removes and parses `key` if present.
    pub fn take<T>(&mut self, key: &str) -> Result<Option<T>, KvError>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.entries.remove(key) {
            None => Ok(None),
            Some((v, line)) => v.parse::<T>().map(Some).map_err(|e| KvError::Value {
                line,
                key: key.to_string(),
                value: v,
                msg: e.to_string(),
            }),
        }
    }

    /// Removes `key` and parses it with `f`.
    pub fn take_with<T>(
        &mut self,
        key: &str,
        f: impl FnOnce(&str) -> Result<T, String>,
    ) -> Result<Option<T>, KvError> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some((v, line)) => f(&v).map(Some).map_err(|msg| KvError::Value {
                line,
                key: key.to_string(),
                value: v,
                msg,
            }),
        }
    }

    /// Fails on the first key nobody consumed.
    pub fn finish(self) -> Result<(), KvError> {
        match self.entries.into_iter().next() {
            None => Ok(()),
            Some((key, (_, line))) => Err(KvError::Unknown { line, key }),
        }
    }
}

/// Parses `x,y`.
pub fn parse_cell(s: &str) -> Result<(usize, usize), String> {
    let (x, y) = s
        .split_once(',')
        .ok_or_else(|| "expected `x,y`".to_string())?;
    let x = x.trim().parse().map_err(|e| format!("{e}"))?;
    let y = y.trim().parse().map_err(|e| format!("{e}"))?;
    Ok((x, y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_consume() {
        let mut f = KvFile::parse("a = 1\n# c\nsafety.d = 0.5 # trailing\ncell = 2, 3\n").unwrap();
        assert_eq!(f.take::<u32>("a").unwrap(), Some(1));
        assert_eq!(f.take::<f64>("safety.d").unwrap(), Some(0.5));
        assert_eq!(f.take_with("cell", parse_cell).unwrap(), Some((2, 3)));
        assert_eq!(f.take::<f64>("missing").unwrap(), None);
        f.finish().unwrap();
    }

    #[test]
    fn errors() {
        assert_eq!(
            KvFile::parse("novalue").unwrap_err(),
            KvError::Syntax { line: 1 }
        );
        assert!(matches!(
            KvFile::parse("a=1\na=2"),
            Err(KvError::Duplicate { line: 2, .. })
        ));
        let mut f = KvFile::parse("a = x\nb = 1").unwrap();
        assert!(matches!(
            f.take::<f64>("a"),
            Err(KvError::Value { line: 1, .. })
        ));
        assert!(matches!(f.finish(), Err(KvError::Unknown { line: 2, .. })));
    }
}
