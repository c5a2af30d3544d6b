use std::collections::BTreeMap;
use std::str::FromStr;

use crate::Failure;

/// `--set key=value` pairs; every key must be consumed by the subcommand.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    values: BTreeMap<String, String>,
    used: Vec<String>,
}

impl Overrides {
    pub fn parse(pairs: &[String]) -> Result<Self, Failure> {
        let mut values = BTreeMap::new();
        for p in pairs {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| Failure::Usage(format!("override `{p}` is not key=value")))?;
            values.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Overrides {
            values,
            used: Vec::new(),
        })
    }

    pub fn map(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    pub fn get<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, Failure> {
        let Some(raw) = self.values.get(key) else {
            return Ok(None);
        };
        self.used.push(key.to_string());
        raw.parse()
            .map(Some)
            .map_err(|_| Failure::Usage(format!("override `{key}={raw}` has the wrong type")))
    }

    pub fn list(&mut self, key: &str) -> Result<Option<Vec<f64>>, Failure> {
        let Some(raw) = self.values.get(key).cloned() else {
            return Ok(None);
        };
        self.used.push(key.to_string());
        raw.split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
            .map_err(|_| Failure::Usage(format!("override `{key}={raw}` is not a list of numbers")))
    }

    /// Fail on keys the subcommand did not read.
    pub fn finish(&self) -> Result<(), Failure> {
        match self.values.keys().find(|k| !self.used.contains(k)) {
            Some(k) => Err(Failure::Usage(format!("unknown override key `{k}` for this subcommand"))),
            None => Ok(()),
        }
    }
}
