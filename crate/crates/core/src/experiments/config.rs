//! TOML scenario configuration.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::envs::{make_bernoulli_risk, make_cliff, make_random_semimeasure, TableEnv};
use crate::error::{Error, Result};
use crate::mixture::{description_length_priors, uniform_priors, PriorMode};
use crate::primitives::PerceptAlphabet;
use crate::scalar::Scalar;
use crate::semimeasure::{normalize, DeathState, DynEnvironment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LogFormat {
    Csv,
    #[serde(alias = "json-lines")]
    Jsonl,
}

impl LogFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => LogFormat::Jsonl,
            _ => LogFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableRow {
    pub depth: usize,
    pub action: usize,
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EnvSpec {
    Cliff {
        alive_reward: f64,
    },
    Bernoulli {
        survival_prob: f64,
        reward: f64,
    },
    Random {
        seed: u64,
        actions: usize,
        percepts: usize,
        depth: usize,
    },
    /// One percept per reward; `rows` list the conditional per (depth, action).
    Table {
        actions: usize,
        rewards: Vec<f64>,
        rows: Vec<TableRow>,
    },
    Normalized {
        inner: Box<EnvSpec>,
    },
    DeathState {
        inner: Box<EnvSpec>,
        #[serde(default)]
        death_reward: f64,
    },
}

impl EnvSpec {
    pub fn build<S: Scalar>(&self) -> Result<DynEnvironment<S>> {
        Ok(match self {
            EnvSpec::Cliff { alive_reward } => Arc::new(make_cliff(S::lit(*alive_reward))?),
            EnvSpec::Bernoulli {
                survival_prob,
                reward,
            } => Arc::new(make_bernoulli_risk(
                S::lit(*survival_prob),
                S::lit(*reward),
            )?),
            EnvSpec::Random {
                seed,
                actions,
                percepts,
                depth,
            } => Arc::new(make_random_semimeasure::<S>(
                *seed, *actions, *percepts, *depth,
            )?),
            EnvSpec::Table {
                actions,
                rewards,
                rows,
            } => Arc::new(build_table(*actions, rewards, rows)?),
            EnvSpec::Normalized { inner } => Arc::new(normalize(inner.build::<S>()?)),
            EnvSpec::DeathState {
                inner,
                death_reward,
            } => Arc::new(DeathState::new(inner.build::<S>()?, S::lit(*death_reward))?),
        })
    }

    /// Length in bytes of the compact JSON rendering, a stand-in for description length.
    pub fn description_length(&self) -> usize {
        serde_json::to_string(self).map(|s| s.len()).unwrap_or(0)
    }
}

fn build_table<S: Scalar>(
    actions: usize,
    rewards: &[f64],
    rows: &[TableRow],
) -> Result<TableEnv<S>> {
    let rewards: Vec<S> = rewards.iter().map(|&r| S::lit(r)).collect();
    let alphabet = PerceptAlphabet::from_rewards(&rewards)?;
    let depth = rows.iter().map(|r| r.depth).max().unwrap_or(0);
    let mut layers: Vec<Vec<Option<Vec<S>>>> = vec![vec![None; actions]; depth];
    for row in rows {
        if row.depth == 0 || row.action >= actions {
            return Err(Error::Config(format!(
                "table row (depth {}, action {}) out of range",
                row.depth, row.action
            )));
        }
        let slot = &mut layers[row.depth - 1][row.action];
        if slot.is_some() {
            return Err(Error::Config(format!(
                "table row (depth {}, action {}) given twice",
                row.depth, row.action
            )));
        }
        *slot = Some(row.probs.iter().map(|&p| S::lit(p)).collect());
    }
    let layers = layers
        .into_iter()
        .enumerate()
        .map(|(d, layer)| {
            layer
                .into_iter()
                .enumerate()
                .map(|(a, v)| {
                    v.ok_or_else(|| {
                        Error::Config(format!("table row (depth {}, action {a}) missing", d + 1))
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    TableEnv::new(alphabet, actions, layers)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorSpec {
    #[default]
    Uniform,
    DescriptionLength,
}

impl From<PriorSpec> for PriorMode {
    fn from(p: PriorSpec) -> Self {
        match p {
            PriorSpec::Uniform => PriorMode::Uniform,
            PriorSpec::DescriptionLength => PriorMode::DescriptionLength,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemberSpec {
    pub name: String,
    pub env: EnvSpec,
    /// Fixed prior weight; members without one share the remaining mass.
    #[serde(default)]
    pub prior: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureSpec {
    #[serde(default)]
    pub prior: PriorSpec,
    pub members: Vec<MemberSpec>,
    /// Members whose posterior ratio is logged; defaults to the first two.
    #[serde(default)]
    pub ratio: Option<[usize; 2]>,
}

impl MixtureSpec {
    pub fn priors<S: Scalar>(&self) -> Result<Vec<S>> {
        let fixed: f64 = self.members.iter().filter_map(|m| m.prior).sum();
        let free: Vec<usize> = (0..self.members.len())
            .filter(|&i| self.members[i].prior.is_none())
            .collect();
        if fixed > 1.0 + S::TOLERANCE || (!free.is_empty() && fixed >= 1.0) {
            return Err(Error::Config(format!(
                "explicit priors sum to {fixed}, leaving no mass for the other members"
            )));
        }
        let shares: Vec<S> = match PriorMode::from(self.prior) {
            PriorMode::Uniform => uniform_priors(free.len()),
            PriorMode::DescriptionLength => description_length_priors(
                &free
                    .iter()
                    .map(|&i| self.members[i].env.description_length())
                    .collect::<Vec<_>>(),
            ),
        };
        let remaining = S::lit(1.0 - fixed);
        let mut priors: Vec<S> = self
            .members
            .iter()
            .map(|m| m.prior.map(S::lit).unwrap_or_else(S::zero))
            .collect();
        for (&i, share) in free.iter().zip(shares) {
            priors[i] = share * remaining;
        }
        Ok(priors)
    }

    pub fn ratio_pair(&self) -> Option<(usize, usize)> {
        match self.ratio {
            Some([i, j]) => Some((i, j)),
            None if self.members.len() >= 2 => Some((0, 1)),
            None => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// The true environment.
    pub environment: EnvSpec,
    /// When present the agent plans in this mixture, otherwise in the true environment.
    #[serde(default)]
    pub mixture: Option<MixtureSpec>,
    pub gamma: f64,
    pub horizon: usize,
    pub steps: usize,
    /// Added to every reward of the true environment and of every member.
    #[serde(default)]
    pub offset: f64,
    #[serde(default)]
    pub seed: u64,
    /// Sample percepts from the normalized conditional, never dying where survival is possible.
    #[serde(default)]
    pub survival_conditioned: bool,
    /// Fixed action sequence, cycled, instead of the planner's choice.
    #[serde(default)]
    pub actions: Option<Vec<usize>>,
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<LogFormat>,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn tolerance<S: Scalar>(&self) -> S {
        self.tolerance.map(S::lit).unwrap_or_else(S::tolerance)
    }

    /// Structural checks that do not need the environments built.
    pub fn check(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::Config("steps must be at least 1".into()));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Config(format!("gamma {} not in (0, 1)", self.gamma)));
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if !self.offset.is_finite() {
            return Err(Error::Config("offset must be finite".into()));
        }
        if let Some(t) = self.tolerance {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::Config(format!(
                    "tolerance {t} must be finite and non-negative"
                )));
            }
        }
        if matches!(&self.actions, Some(a) if a.is_empty()) {
            return Err(Error::Config("fixed action sequence is empty".into()));
        }
        if let Some(m) = &self.mixture {
            if m.members.is_empty() {
                return Err(Error::Config("mixture has no members".into()));
            }
            for (i, member) in m.members.iter().enumerate() {
                let bad = member.name.is_empty()
                    || member
                        .name
                        .contains(|c: char| c == ',' || c == '"' || c.is_whitespace());
                if bad {
                    return Err(Error::Config(format!(
                        "member {i} name {:?} must be non-empty without commas, quotes or spaces",
                        member.name
                    )));
                }
                if m.members[..i].iter().any(|o| o.name == member.name) {
                    return Err(Error::Config(format!(
                        "duplicate member name {:?}",
                        member.name
                    )));
                }
                if matches!(member.prior, Some(p) if !(p > 0.0 && p.is_finite())) {
                    return Err(Error::Config(format!(
                        "prior of {:?} must be positive",
                        member.name
                    )));
                }
            }
            if let Some([i, j]) = m.ratio {
                if i >= m.members.len() || j >= m.members.len() {
                    return Err(Error::Config(format!(
                        "ratio members [{i}, {j}] out of range"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const POSTERIOR: &str = r#"
name = "t"
gamma = 0.9
horizon = 2
steps = 3

[environment]
kind = "bernoulli"
survival_prob = 0.9
reward = 1.0

[mixture]
[[mixture.members]]
name = "risky"
env = { kind = "bernoulli", survival_prob = 0.9, reward = 1.0 }
[[mixture.members]]
name = "safe"
env = { kind = "normalized", inner = { kind = "bernoulli", survival_prob = 0.9, reward = 1.0 } }
"#;

    #[test]
    fn parses_nested_specs() {
        let cfg = ScenarioConfig::from_toml(POSTERIOR).unwrap();
        cfg.check().unwrap();
        let m = cfg.mixture.as_ref().unwrap();
        assert_eq!(m.members.len(), 2);
        assert_eq!(m.ratio_pair(), Some((0, 1)));
        assert_eq!(m.priors::<f64>().unwrap(), vec![0.5, 0.5]);
        assert!(matches!(m.members[1].env, EnvSpec::Normalized { .. }));
        assert_eq!(cfg.tolerance::<f64>(), 1e-9);
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = ScenarioConfig::from_toml(POSTERIOR).unwrap();
        assert_eq!(ScenarioConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn rejects_unknown_fields_and_kinds() {
        assert!(ScenarioConfig::from_toml(&format!("{POSTERIOR}\nbogus = 1")).is_err());
        let bad_kind = POSTERIOR.replace(
            "kind = \"bernoulli\"\nsurvival_prob",
            "kind = \"gridworld\"\nsurvival_prob",
        );
        assert!(ScenarioConfig::from_toml(&bad_kind).is_err());
    }

    #[test]
    fn check_catches_bad_values() {
        let mut cfg = ScenarioConfig::from_toml(POSTERIOR).unwrap();
        cfg.steps = 0;
        assert!(cfg.check().is_err());
        let mut cfg = ScenarioConfig::from_toml(POSTERIOR).unwrap();
        cfg.mixture.as_mut().unwrap().ratio = Some([0, 5]);
        assert!(cfg.check().is_err());
        let mut cfg = ScenarioConfig::from_toml(POSTERIOR).unwrap();
        cfg.mixture.as_mut().unwrap().members[1].name = "risky".into();
        assert!(cfg.check().is_err());
    }

    #[test]
    fn prior_overrides_and_description_length() {
        let mut cfg = ScenarioConfig::from_toml(POSTERIOR).unwrap();
        let m = cfg.mixture.as_mut().unwrap();
        m.members[0].prior = Some(0.2);
        let w = m.priors::<f64>().unwrap();
        assert_eq!(w[0], 0.2);
        assert!((w[1] - 0.8).abs() < 1e-15);

        m.members[0].prior = None;
        m.prior = PriorSpec::DescriptionLength;
        let w = m.priors::<f64>().unwrap();
        // The normalized member has the longer description.
        assert!(w[0] > w[1]);
        assert!((w[0] + w[1] - 1.0).abs() < 1e-15);

        m.members[0].prior = Some(1.0);
        assert!(m.priors::<f64>().is_err());
    }

    #[test]
    fn table_rows_build_layers() {
        let spec = EnvSpec::Table {
            actions: 2,
            rewards: vec![0.0, 1.0],
            rows: vec![
                TableRow {
                    depth: 1,
                    action: 0,
                    probs: vec![0.5, 0.5],
                },
                TableRow {
                    depth: 1,
                    action: 1,
                    probs: vec![0.2, 0.3],
                },
            ],
        };
        let env = spec.build::<f64>().unwrap();
        assert_eq!(env.action_count(), 2);

        let missing = EnvSpec::Table {
            actions: 2,
            rewards: vec![0.0],
            rows: vec![TableRow {
                depth: 1,
                action: 0,
                probs: vec![1.0],
            }],
        };
        assert!(matches!(missing.build::<f64>(), Err(Error::Config(_))));
    }
}
