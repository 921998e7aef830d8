//! Flat `key = value` configuration with `#` comments.
//!
//! Values from the file are overlaid by command-line overrides. Each command pulls
//! the keys it understands with a default; [`Settings::finish`] then rejects anything
//! left over, so a misspelled key is an error rather than a silent default.

use crate::error::CliError;
use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
}

fn parse_lines(text: &str, origin: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut values = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("{origin}:{}: expected key = value", n + 1)))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(CliError::Config(format!("{origin}:{}: empty key", n + 1)));
        }
        if values.insert(key.to_string(), value.trim().to_string()).is_some() {
            return Err(CliError::Config(format!("{origin}:{}: duplicate key '{key}'", n + 1)));
        }
    }
    Ok(values)
}

/// Turns `--key value`, `--key=value` and `--set key=value` into pairs. Dashes in
/// flag names map to underscores.
pub fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let Some(flag) = arg.strip_prefix("--") else {
            return Err(CliError::Config(format!("unexpected argument '{arg}'")));
        };
        let (key, value) = match flag.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it.next().ok_or_else(|| CliError::Config(format!("--{flag} needs a value")))?;
                (flag.to_string(), v.clone())
            }
        };
        let (key, value) = if key == "set" {
            let (k, v) = value.split_once('=').ok_or_else(|| CliError::Config(format!("--set expects key=value, got '{value}'")))?;
            (k.trim().to_string(), v.trim().to_string())
        } else {
            (key, value)
        };
        out.push((key.replace('-', "_"), value));
    }
    Ok(out)
}

impl Settings {
    pub fn from_text(text: &str) -> Result<Self, CliError> {
        Ok(Self { values: parse_lines(text, "config")?, used: RefCell::default() })
    }

    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self, CliError> {
        let mut values = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                parse_lines(&text, &p.display().to_string())?
            }
            None => BTreeMap::new(),
        };
        for (k, v) in overrides {
            values.insert(k.clone(), v.clone());
        }
        Ok(Self { values, used: RefCell::default() })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.used.borrow_mut().insert(key.to_string());
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e| CliError::Config(format!("{key} = '{v}': {e}"))),
        }
    }

    pub fn get_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key).map(|v| v.parse().map_err(|e| CliError::Config(format!("{key} = '{v}': {e}")))).transpose()
    }

    /// A positive finite number.
    pub fn positive(&self, key: &str, default: f64) -> Result<f64, CliError> {
        let v: f64 = self.get(key, default)?;
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(CliError::Config(format!("{key} must be positive, got {v}")))
        }
    }

    /// A comma-separated list of numbers.
    pub fn list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, CliError> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|e| CliError::Config(format!("{key}: '{x}': {e}"))))
                .collect(),
        }
    }

    /// Fails on any key no command asked for.
    pub fn finish(&self) -> Result<(), CliError> {
        let used = self.used.borrow();
        let unknown: Vec<&str> = self.values.keys().filter(|k| !used.contains(*k)).map(String::as_str).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(format!("unknown key(s): {}", unknown.join(", "))))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blanks() {
        let s = Settings::from_text("# header\n\nseed = 7  # trailing\nname=a b\n").unwrap();
        assert_eq!(s.get("seed", 0u64).unwrap(), 7);
        assert_eq!(s.get("name", String::new()).unwrap(), "a b");
        assert_eq!(s.get("missing", 1.5).unwrap(), 1.5);
        s.finish().unwrap();
    }

    #[test]
    fn rejects_malformed_and_unknown() {
        assert!(Settings::from_text("novalue\n").is_err());
        assert!(Settings::from_text("a = 1\na = 2\n").is_err());
        let s = Settings::from_text("sede = 3\n").unwrap();
        s.get("seed", 0u64).unwrap();
        assert!(matches!(s.finish(), Err(CliError::Config(m)) if m.contains("sede")));
        let s = Settings::from_text("dt = fast\n").unwrap();
        assert!(s.get("dt", 1.0).is_err());
        let s = Settings::from_text("dt = -1\n").unwrap();
        assert!(s.positive("dt", 1.0).is_err());
    }

    #[test]
    fn overrides_take_every_form() {
        let args: Vec<String> = ["--t-end", "2", "--seed=5", "--set", "dt=0.1"].iter().map(|s| s.to_string()).collect();
        let o = parse_overrides(&args).unwrap();
        assert_eq!(o, vec![("t_end".into(), "2".into()), ("seed".into(), "5".into()), ("dt".into(), "0.1".into())]);
        assert!(parse_overrides(&["stray".to_string()]).is_err());
        assert!(parse_overrides(&["--dt".to_string()]).is_err());
    }

    #[test]
    fn lists() {
        let s = Settings::from_text("radii = 10, 20,40\n").unwrap();
        assert_eq!(s.list("radii", &[]).unwrap(), vec![10.0, 20.0, 40.0]);
    }
}
