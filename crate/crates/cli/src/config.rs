//! Layered configuration: built-in defaults, then the `[common]` and
//! `[<command>]` sections of a TOML file, then command-line flags.

use std::path::Path;

use anyhow::{anyhow, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

/// Keys a `[common]` section may set for any command that has them.
pub const COMMON_KEYS: [&str; 2] = ["alpha", "seed"];

pub fn read_file(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.parse::<Table>()
        .with_context(|| format!("parsing {}", path.display()))
}

fn to_table<T: Serialize>(v: &T) -> Result<Table> {
    match Value::try_from(v)? {
        Value::Table(t) => Ok(t),
        other => Err(anyhow!("expected a table, got {}", other.type_str())),
    }
}

/// Resolves the configuration of `command`: `C::default()`, overlaid by the
/// file (if any), overlaid by the flags that were given.
pub fn resolve<C, F>(command: &str, file: Option<&Table>, flags: &F) -> Result<C>
where
    C: Serialize + DeserializeOwned + Default,
    F: Serialize,
{
    let mut merged = to_table(&C::default())?;
    if let Some(file) = file {
        for key in file.keys() {
            if key != "common" && !crate::COMMANDS.contains(&key.as_str()) {
                return Err(anyhow!("unknown config section [{key}]"));
            }
        }
        if let Some(common) = file.get("common") {
            let common = common.as_table().ok_or_else(|| anyhow!("[common] must be a table"))?;
            for (k, v) in common {
                if !COMMON_KEYS.contains(&k.as_str()) {
                    return Err(anyhow!("unknown key {k:?} in [common]"));
                }
                if merged.contains_key(k) {
                    merged.insert(k.clone(), v.clone());
                }
            }
        }
        if let Some(section) = file.get(command) {
            let section = section
                .as_table()
                .ok_or_else(|| anyhow!("[{command}] must be a table"))?;
            for (k, v) in section {
                merged.insert(k.clone(), v.clone());
            }
        }
    }
    for (k, v) in to_table(flags)? {
        merged.insert(k, v);
    }
    Value::Table(merged)
        .try_into()
        .with_context(|| format!("invalid configuration for {command}"))
}

/// The resolved configuration as a TOML section, as accepted by [`resolve`].
pub fn render<C: Serialize>(command: &str, config: &C) -> Result<String> {
    let mut outer = Table::new();
    outer.insert(command.to_string(), Value::Table(to_table(config)?));
    Ok(toml::to_string(&outer)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleConfig {
    pub alpha: f64,
    pub dim: usize,
    /// `increment` or `subordinator`.
    pub kind: String,
    pub dt: f64,
    pub n: usize,
    pub seed: u64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            alpha: 1.5,
            dim: 1,
            kind: "increment".into(),
            dt: 1.0,
            n: 1000,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensityConfig {
    pub alpha: f64,
    pub dim: usize,
    pub t: f64,
    /// Points, `dim` coordinates each.
    pub x: Vec<f64>,
    /// `quad` or `mc`.
    pub method: String,
    pub samples: usize,
    pub seed: u64,
    /// Kernel inequality checks to run instead (`all` or names).
    pub bounds: Vec<String>,
}

impl Default for DensityConfig {
    fn default() -> Self {
        Self {
            alpha: 1.5,
            dim: 1,
            t: 1.0,
            x: vec![0.0],
            method: "quad".into(),
            samples: 1_000_000,
            seed: 1,
            bounds: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThetaConfig {
    pub alpha: f64,
    pub dim: usize,
    pub r: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
}

impl Default for ThetaConfig {
    fn default() -> Self {
        Self {
            alpha: 1.5,
            dim: 1,
            r: vec![0.0, 0.25, 0.5, 1.0],
            samples: 1_000_000,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParametrixConfig {
    pub alpha: f64,
    pub drift: String,
    pub x0: f64,
    pub delta: f64,
    pub steps: usize,
    pub k_max: usize,
    pub refinement: usize,
    /// Monte Carlo paths for the histogram comparison; 0 skips it.
    pub paths: usize,
    pub bins: usize,
    pub range: Vec<f64>,
    pub floor: f64,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for ParametrixConfig {
    fn default() -> Self {
        Self {
            alpha: 1.5,
            drift: "sin".into(),
            x0: 0.0,
            delta: 0.1,
            steps: 10,
            k_max: 4,
            refinement: 1,
            paths: 0,
            bins: 60,
            range: vec![-4.0, 4.0],
            floor: 1e-3,
            tolerance: 0.1,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KrylovConfig {
    pub alpha: f64,
    pub drift: String,
    pub x0: Vec<f64>,
    pub delta: f64,
    pub horizon: f64,
    pub function: String,
    pub q: f64,
    pub spans: Vec<f64>,
    pub paths: usize,
    pub substeps: usize,
    pub seed: u64,
}

impl Default for KrylovConfig {
    fn default() -> Self {
        Self {
            alpha: 1.5,
            drift: "holder:0.4".into(),
            x0: vec![0.0],
            delta: 0.025,
            horizon: 0.8,
            function: "gaussian".into(),
            q: 4.0,
            spans: vec![0.1, 0.2, 0.4, 0.8],
            paths: 20_000,
            substeps: 8,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KhasminskiiConfig {
    pub alpha: f64,
    pub drift: String,
    pub x0: Vec<f64>,
    pub delta: f64,
    pub horizon: f64,
    pub function: String,
    pub q: f64,
    pub lambdas: Vec<f64>,
    /// Fitted Krylov constant; fitted from a fresh Krylov run when absent.
    pub krylov_constant: Option<f64>,
    pub spans: Vec<f64>,
    pub paths: usize,
    pub seed: u64,
}

impl Default for KhasminskiiConfig {
    fn default() -> Self {
        let k = KrylovConfig::default();
        Self {
            alpha: k.alpha,
            drift: k.drift,
            x0: k.x0,
            delta: k.delta,
            horizon: k.horizon,
            function: k.function,
            q: k.q,
            lambdas: vec![0.0, 0.5, 1.0, 2.0],
            krylov_constant: None,
            spans: k.spans,
            paths: k.paths,
            seed: k.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriftincConfig {
    pub alpha: f64,
    pub drift: String,
    pub x0: Vec<f64>,
    pub deltas: Vec<f64>,
    pub horizon: f64,
    pub paths: usize,
    pub resolution: usize,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for DriftincConfig {
    fn default() -> Self {
        Self {
            alpha: 1.5,
            drift: "weierstrass:0.4".into(),
            x0: vec![0.0],
            deltas: vec![0.2, 0.1, 0.05, 0.025],
            horizon: 1.0,
            paths: 20_000,
            resolution: 32,
            epsilon: 0.9,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergeConfig {
    pub alpha: f64,
    pub drift: String,
    pub x0: Vec<f64>,
    pub eta: f64,
    pub deltas: Vec<f64>,
    pub delta_ref: Option<f64>,
    pub horizon: f64,
    pub paths: usize,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for ConvergeConfig {
    fn default() -> Self {
        Self {
            alpha: 1.5,
            drift: "holder:0.4".into(),
            x0: vec![0.0],
            eta: 1.0,
            deltas: vec![0.2, 0.1, 0.05, 0.025],
            delta_ref: None,
            horizon: 1.0,
            paths: 4000,
            epsilon: 0.9,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    /// `holder` or `weierstrass`.
    pub family: String,
    pub eta: f64,
    pub deltas: Vec<f64>,
    pub horizon: f64,
    pub paths: usize,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            alphas: vec![1.2, 1.5, 1.8],
            betas: vec![0.3, 0.5, 0.7],
            family: "weierstrass".into(),
            eta: 1.0,
            deltas: vec![0.2, 0.1, 0.05],
            horizon: 1.0,
            paths: 1000,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelftestConfig {
    pub seed: u64,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        Self { seed: 1 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize, Default)]
    struct Flags {
        paths: Option<usize>,
        deltas: Option<Vec<f64>>,
    }

    #[test]
    fn flags_override_file_override_defaults() {
        let file: Table = "[common]\nalpha = 1.2\nseed = 5\n[converge]\npaths = 10\ndrift = \"sin\"\n"
            .parse()
            .unwrap();
        let flags = Flags {
            paths: Some(99),
            deltas: None,
        };
        let c: ConvergeConfig = resolve("converge", Some(&file), &flags).unwrap();
        assert_eq!(c.alpha, 1.2);
        assert_eq!(c.seed, 5);
        assert_eq!(c.drift, "sin");
        assert_eq!(c.paths, 99);
        assert_eq!(c.deltas, ConvergeConfig::default().deltas);
    }

    #[test]
    fn rendered_config_round_trips() {
        let mut c = ConvergeConfig {
            delta_ref: Some(0.001),
            ..Default::default()
        };
        c.paths = 123;
        let text = render("converge", &c).unwrap();
        let file: Table = text.parse().unwrap();
        let back: ConvergeConfig = resolve("converge", Some(&file), &Flags::default()).unwrap();
        assert_eq!(back, c);
        assert_eq!(render("converge", &back).unwrap(), text);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let file: Table = "[converge]\npath = 3\n".parse().unwrap();
        assert!(resolve::<ConvergeConfig, _>("converge", Some(&file), &Flags::default()).is_err());
        let file: Table = "[common]\nfoo = 3\n".parse().unwrap();
        assert!(resolve::<ConvergeConfig, _>("converge", Some(&file), &Flags::default()).is_err());
        let file: Table = "[bogus]\n".parse().unwrap();
        assert!(resolve::<ConvergeConfig, _>("converge", Some(&file), &Flags::default()).is_err());
    }
}
