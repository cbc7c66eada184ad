//! Declarative sweep configuration.
//!
//! A configuration is a TOML file with an optional global `budget` and any
//! number of `[[sweep]]` sections. Every field element in a configuration is
//! written as a discrete logarithm of the field's fixed generator (`a = 2`
//! means g^2), so the format stays exact and uniform across prime and
//! non-prime fields; character exponents are taken modulo the unit-group
//! order of their factor.
//!
//! ```toml
//! budget = 100000000        # max |B*|·q^2 per cell (default 10^8)
//!
//! [[sweep]]
//! p = 3                     # base field F_{p^n}
//! n = 1
//! types = [[1, 1], [2]]     # factorization types, degrees over the base
//! chars = "all"             # or a list of exponent tuples: [[0, 0], [1, 0]]
//! twists = "all"            # additive twists c, as dlogs; or [0, 1]
//! extensions = [1]          # extension-of-scalars degrees m
//! a_values = "all"          # norm-fiber parameters a ∈ F_{q^m}*, as dlogs
//! ```

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

pub const DEFAULT_BUDGET: u64 = 100_000_000;

/// Either the keyword `"all"` or an explicit list.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum AllOr<T> {
    Keyword(String),
    List(Vec<T>),
}

impl<T> Default for AllOr<T> {
    fn default() -> Self {
        AllOr::Keyword("all".to_string())
    }
}

impl<T: Clone> AllOr<T> {
    /// Expand to a concrete list, drawing the full range from `all`.
    pub fn expand(&self, all: impl FnOnce() -> Vec<T>) -> Result<Vec<T>> {
        match self {
            AllOr::Keyword(s) if s == "all" => Ok(all()),
            AllOr::Keyword(s) => Err(Error::Config(format!(
                "expected \"all\" or a list, got {s:?}"
            ))),
            AllOr::List(v) => Ok(v.clone()),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Per-cell ceiling on the estimated term count |B*|·q².
    #[serde(default = "default_budget")]
    pub budget: u64,
    #[serde(default)]
    pub sweep: Vec<SweepSection>,
}

fn default_budget() -> u64 {
    DEFAULT_BUDGET
}

fn default_n() -> u32 {
    1
}

fn default_extensions() -> Vec<u32> {
    vec![1]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub p: u64,
    #[serde(default = "default_n")]
    pub n: u32,
    pub types: Vec<Vec<u32>>,
    #[serde(default)]
    pub chars: AllOr<Vec<u64>>,
    #[serde(default)]
    pub twists: AllOr<u64>,
    #[serde(default = "default_extensions")]
    pub extensions: Vec<u32>,
    #[serde(default)]
    pub a_values: AllOr<u64>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let config: Config =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Config> {
        Config::parse(&std::fs::read_to_string(path)?)
    }

    fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::Config("budget must be positive".to_string()));
        }
        for (i, s) in self.sweep.iter().enumerate() {
            let ctx = |msg: String| Error::Config(format!("sweep section {}: {}", i + 1, msg));
            if s.types.is_empty() {
                return Err(ctx("types must be nonempty".to_string()));
            }
            for t in &s.types {
                if t.is_empty() || t.contains(&0) {
                    return Err(ctx(format!("invalid factorization type {:?}", t)));
                }
            }
            if s.extensions.is_empty() || s.extensions.contains(&0) {
                return Err(ctx("extensions must be a nonempty list of degrees ≥ 1".to_string()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_section() {
        let cfg = Config::parse(
            r#"
            budget = 1000

            [[sweep]]
            p = 3
            types = [[1, 1], [2]]
            chars = [[0, 0], [1, 0]]
            twists = "all"
            extensions = [1, 2]
            a_values = [0]
            "#,
        )
        .unwrap();
        assert_eq!(cfg.budget, 1000);
        assert_eq!(cfg.sweep.len(), 1);
        let s = &cfg.sweep[0];
        assert_eq!((s.p, s.n), (3, 1));
        assert_eq!(s.types, vec![vec![1, 1], vec![2]]);
        assert_eq!(
            s.chars.expand(Vec::new).unwrap(),
            vec![vec![0, 0], vec![1, 0]]
        );
        assert_eq!(s.twists.expand(|| vec![7, 8]).unwrap(), vec![7, 8]);
        assert_eq!(s.extensions, vec![1, 2]);
        assert_eq!(s.a_values.expand(|| vec![9]).unwrap(), vec![0]);
    }

    #[test]
    fn defaults_are_all_and_base_scalars() {
        let cfg = Config::parse("[[sweep]]\np = 5\ntypes = [[1, 1]]\n").unwrap();
        assert_eq!(cfg.budget, DEFAULT_BUDGET);
        let s = &cfg.sweep[0];
        assert_eq!(s.n, 1);
        assert_eq!(s.extensions, vec![1]);
        assert!(matches!(&s.chars, AllOr::Keyword(k) if k == "all"));
    }

    #[test]
    fn empty_config_is_valid() {
        let cfg = Config::parse("").unwrap();
        assert!(cfg.sweep.is_empty());
    }

    #[test]
    fn rejects_bad_keyword_and_bad_types() {
        let cfg = Config::parse("[[sweep]]\np = 3\ntypes = [[1]]\nchars = \"some\"\n").unwrap();
        assert!(matches!(
            cfg.sweep[0].chars.expand(Vec::new),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            Config::parse("[[sweep]]\np = 3\ntypes = []\n"),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            Config::parse("[[sweep]]\np = 3\ntypes = [[0]]\n"),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            Config::parse("[[sweep]]\np = 3\ntypes = [[1,1]]\nextensions = []\n"),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            Config::parse("nonsense = true"),
            Err(Error::Config(_))
        ));
    }
}
