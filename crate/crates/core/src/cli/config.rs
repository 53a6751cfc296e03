use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

/// Inclusive grid `lo:hi:count`; a bare value is a one-point grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Grid {
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').map(str::trim).collect();
        let num = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::invalid(format!("bad grid value {s:?} in {text:?}")))
        };
        match parts.as_slice() {
            [v] => {
                let v = num(v)?;
                Ok(Grid { lo: v, hi: v, count: 1 })
            }
            [lo, hi, count] => {
                let count: usize = count
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad grid count in {text:?}")))?;
                if count == 0 {
                    return Err(Error::invalid(format!("grid count must be >= 1 in {text:?}")));
                }
                Ok(Grid { lo: num(lo)?, hi: num(hi)?, count })
            }
            _ => Err(Error::invalid(format!("grid must be lo:hi:count or a value, got {text:?}"))),
        }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| if i + 1 == self.count { self.hi } else { self.lo + step * i as f64 })
            .collect()
    }
}

/// Flat `key=value` settings with a record of every value read.
#[derive(Debug, Clone, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
    echo: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Config::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("line {}: expected key=value", lineno + 1)))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::invalid(format!("line {}: empty key", lineno + 1)));
            }
            cfg.set(k, v.trim());
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.values.insert(key.to_string(), value.to_string());
    }

    pub fn contains(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn has_prefix(&self, prefix: &str) -> bool {
        self.values.keys().any(|k| k.starts_with(prefix))
    }

    /// Value without recording it in the echo.
    pub fn peek(&self, key: &str) -> Option<String> {
        self.values.get(key).cloned()
    }

    pub fn echo(&self) -> &BTreeMap<String, String> {
        &self.echo
    }

    pub fn get(&mut self, key: &str) -> Option<String> {
        let v = self.values.get(key).cloned()?;
        self.echo.insert(key.to_string(), v.clone());
        Some(v)
    }

    pub fn str_or(&mut self, key: &str, default: &str) -> String {
        let v = self.values.get(key).cloned().unwrap_or_else(|| default.to_string());
        self.echo.insert(key.to_string(), v.clone());
        v
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str, default: T, shown: String) -> Result<T> {
        match self.get(key) {
            Some(v) => v.parse().map_err(|_| Error::invalid(format!("bad value for {key}: {v:?}"))),
            None => {
                self.echo.insert(key.to_string(), shown);
                Ok(default)
            }
        }
    }

    pub fn f64_or(&mut self, key: &str, default: f64) -> Result<f64> {
        let v = self.parsed(key, default, default.to_string())?;
        if !v.is_finite() {
            return Err(Error::invalid(format!("{key} must be finite")));
        }
        Ok(v)
    }

    pub fn usize_or(&mut self, key: &str, default: usize) -> Result<usize> {
        self.parsed(key, default, default.to_string())
    }

    pub fn u64_or(&mut self, key: &str, default: u64) -> Result<u64> {
        self.parsed(key, default, default.to_string())
    }

    pub fn bool_or(&mut self, key: &str, default: bool) -> Result<bool> {
        self.parsed(key, default, default.to_string())
    }

    pub fn f64_list(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        self.get(key).map(|v| parse_list(&v)).transpose()
    }

    pub fn grid_or(&mut self, key: &str, default: &str) -> Result<Grid> {
        Grid::parse(&self.str_or(key, default))
    }
}

pub fn parse_list<T: std::str::FromStr>(text: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad list entry {s:?} in {text:?}")))
        })
        .collect()
}

/// `"a,b,c,d;a,b,c,d"` into row-major 2×2 matrices.
pub fn parse_matrices(text: &str) -> Result<Vec<[f64; 4]>> {
    text.split(';')
        .map(|m| {
            let v: Vec<f64> = parse_list(m)?;
            <[f64; 4]>::try_from(v).map_err(|_| Error::invalid(format!("matrix needs 4 entries: {m:?}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_syntax() {
        let g = Grid::parse("0.5:0.67:50").unwrap();
        let v = g.values();
        assert_eq!(v.len(), 50);
        assert_eq!((v[0], v[49]), (0.5, 0.67));
        assert_eq!(Grid::parse("0.3").unwrap().values(), vec![0.3]);
        assert!(Grid::parse("0:1:0").is_err());
        assert!(Grid::parse("0:1").is_err());
    }

    #[test]
    fn config_lines() {
        let mut c = Config::parse("# comment\nfamily.map1.kind = affine\n\nlambda=0.5\n").unwrap();
        assert_eq!(c.get("family.map1.kind").as_deref(), Some("affine"));
        assert_eq!(c.f64_or("lambda", 0.0).unwrap(), 0.5);
        assert_eq!(c.usize_or("depth", 7).unwrap(), 7);
        assert_eq!(c.echo().get("depth").map(String::as_str), Some("7"));
        assert!(Config::parse("novalue").is_err());
        assert!(c.f64_or("family.map1.kind", 0.0).is_err());
    }

    #[test]
    fn matrices() {
        assert_eq!(parse_matrices("2,1,1,2;1,1,1,2").unwrap(), vec![[2.0, 1.0, 1.0, 2.0], [1.0, 1.0, 1.0, 2.0]]);
        assert!(parse_matrices("1,2,3").is_err());
    }
}
