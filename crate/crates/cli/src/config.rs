//! Flat `key = value` configuration files. Command-line flags override file
//! values, which override built-in defaults.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use surfharm::Error;

/// Keys accepted in a configuration file.
pub const KEYS: &[&str] = &[
    "alpha",
    "atom_format",
    "contact_offset",
    "format",
    "hks_count",
    "interface",
    "jobs",
    "k",
    "k_nearest",
    "lambda_max",
    "merge_eps",
    "min_interface",
    "mu",
    "normalize",
    "radius",
    "rmsd_threshold",
    "sigma",
    "standardize",
    "t",
    "table",
    "threshold",
    "times",
    "tolerance",
];

#[derive(Debug, Clone, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, Error> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                msg: format!("expected key = value, found '{line}'"),
            })?;
            let key = k.trim().replace('-', "_");
            if !KEYS.contains(&key.as_str()) {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("unknown configuration key '{key}'"),
                });
            }
            if values.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("duplicate key '{key}'"),
                });
            }
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, Error> {
        self.values
            .get(key)
            .map(|v| {
                v.parse().map_err(|_| Error::Parse {
                    line: 0,
                    msg: format!("invalid value '{v}' for configuration key '{key}'"),
                })
            })
            .transpose()
    }

    /// The flag if given, else the file value.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, Error> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }

    pub fn pick_or<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, Error> {
        Ok(self.pick(flag, key)?.unwrap_or(default))
    }

    /// Comma-separated list, from the flag or the file.
    pub fn pick_list(&self, flag: Option<&str>, key: &str) -> Result<Option<Vec<f64>>, Error> {
        let Some(s) = flag.map(str::to_string).or_else(|| self.values.get(key).cloned()) else {
            return Ok(None);
        };
        s.split(',')
            .map(|t| {
                t.trim().parse::<f64>().map_err(|_| Error::Parse {
                    line: 0,
                    msg: format!("invalid number '{t}' in '{key}' list"),
                })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_resolves() {
        let c = Config::parse("# comment\nk = 20\nlambda-max=0.5 # trailing\n\nnormalize = true\n").unwrap();
        assert_eq!(c.get::<usize>("k").unwrap(), Some(20));
        assert_eq!(c.pick::<f64>(Some(0.1), "lambda_max").unwrap(), Some(0.1));
        assert_eq!(c.pick::<f64>(None, "lambda_max").unwrap(), Some(0.5));
        assert_eq!(c.pick_or::<f64>(None, "alpha", 2.0).unwrap(), 2.0);
        assert_eq!(c.get::<bool>("normalize").unwrap(), Some(true));
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(matches!(Config::parse("k 20"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(
            Config::parse("\nbogus = 1"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(Config::parse("k = 1\nk = 2").is_err());
        assert!(Config::parse("k = x").unwrap().get::<usize>("k").is_err());
    }

    #[test]
    fn lists() {
        let c = Config::parse("times = 0.1, 0.2,1e1").unwrap();
        assert_eq!(c.pick_list(None, "times").unwrap(), Some(vec![0.1, 0.2, 10.0]));
        assert_eq!(c.pick_list(Some("3"), "times").unwrap(), Some(vec![3.0]));
        assert!(c.pick_list(Some("3,a"), "times").is_err());
    }
}
