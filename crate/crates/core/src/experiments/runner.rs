//! The agent/environment loop.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{EnvSpec, ScenarioConfig};
use super::log::{LogRow, TrajectoryLog};
use crate::error::{Error, Result};
use crate::mixture::Mixture;
use crate::planner::{aixi_like_action, optimal_action, shift_rewards, ValueResult};
use crate::primitives::{ActionId, DiscountSchedule, History, PerceptId};
use crate::scalar::Scalar;
use crate::semimeasure::{
    measure_loss_with_tolerance, validate, DynEnvironment, Environment, ValidationReport,
};

/// Depth to which `run_scenario` validates every configured environment.
const RUN_VALIDATION_DEPTH: usize = 3;

enum Agent<S: Scalar> {
    /// Plans in the true environment.
    Known(DynEnvironment<S>),
    Bayes {
        mixture: Mixture<S>,
        ratio: Option<(usize, usize)>,
    },
}

impl<S: Scalar> Agent<S> {
    fn plan(
        &self,
        history: &History,
        d: &DiscountSchedule<S>,
    ) -> Result<(ActionId, ValueResult<S>)> {
        match self {
            Agent::Known(env) => optimal_action(env, history, d),
            Agent::Bayes { mixture, .. } => aixi_like_action(mixture, history, d),
        }
    }

    fn loss(&self, query: &History, tolerance: S) -> Result<S> {
        Ok(match self {
            Agent::Known(env) => measure_loss_with_tolerance(env, query, tolerance)?.value(),
            Agent::Bayes { mixture, .. } => mixture.measure_loss(query)?.value(),
        })
    }
}

fn shifted<S: Scalar>(spec: &EnvSpec, offset: S) -> Result<DynEnvironment<S>> {
    let env = spec.build::<S>()?;
    Ok(if offset == S::zero() {
        env
    } else {
        Arc::new(shift_rewards(env, offset))
    })
}

/// Every environment named by the config with its validation report.
pub fn validate_config<S: Scalar>(
    cfg: &ScenarioConfig,
    depth: usize,
) -> Result<Vec<(String, ValidationReport)>> {
    let tolerance = cfg.tolerance::<S>();
    let mut reports = vec![(
        "environment".to_string(),
        validate(&cfg.environment.build::<S>()?, depth, tolerance),
    )];
    if let Some(m) = &cfg.mixture {
        for member in &m.members {
            let env = member.env.build::<S>()?;
            reports.push((
                format!("member {}", member.name),
                validate(&env, depth, tolerance),
            ));
        }
    }
    Ok(reports)
}

fn first_violation(reports: &[(String, ValidationReport)]) -> Option<Error> {
    reports.iter().find_map(|(label, report)| {
        report
            .violations
            .first()
            .map(|v| Error::SemimeasureViolation {
                history: format!("{label} {}", v.history),
                reason: v.reason.clone(),
            })
    })
}

/// Samples the percept for one cycle from a single uniform draw `u`.
///
/// `None` is death. Unconditioned, death happens when `u` lands beyond the
/// conditional's mass; conditioned on survival, `u` is rescaled into it.
fn sample_percept<S: Scalar>(conditional: &[S], u: f64, conditioned: bool) -> Option<PerceptId> {
    let probs: Vec<f64> = conditional.iter().map(|p| p.as_f64().max(0.0)).collect();
    let mass: f64 = probs.iter().sum();
    if mass <= 0.0 {
        return None;
    }
    let target = if conditioned {
        u * mass
    } else if u >= mass {
        return None;
    } else {
        u
    };
    let mut cumulative = 0.0;
    for (e, &p) in probs.iter().enumerate() {
        cumulative += p;
        if p > 0.0 && target < cumulative {
            return Some(PerceptId(e));
        }
    }
    // Rounding left `target` past the last boundary.
    probs.iter().rposition(|&p| p > 0.0).map(PerceptId)
}

pub fn run_scenario<S: Scalar>(cfg: &ScenarioConfig) -> Result<TrajectoryLog> {
    cfg.check()?;
    let tolerance = cfg.tolerance::<S>();
    let depth = cfg.horizon.min(RUN_VALIDATION_DEPTH);
    if let Some(err) = first_violation(&validate_config::<S>(cfg, depth)?) {
        return Err(err);
    }

    let offset = S::lit(cfg.offset);
    let truth = shifted(&cfg.environment, offset)?;
    let d = DiscountSchedule::new(S::lit(cfg.gamma), cfg.horizon)?;

    let mut agent = match &cfg.mixture {
        None => Agent::Known(truth.clone()),
        Some(spec) => {
            let members = spec
                .members
                .iter()
                .map(|m| Ok((m.name.clone(), shifted(&m.env, offset)?)))
                .collect::<Result<Vec<_>>>()?;
            let mixture = Mixture::new(members, spec.priors::<S>()?)?;
            if !mixture.alphabet().same_as(truth.alphabet())
                || mixture.action_count() != truth.action_count()
            {
                return Err(Error::IncompatibleMembers(
                    "the mixture and the true environment use different alphabets or actions"
                        .into(),
                ));
            }
            Agent::Bayes {
                mixture,
                ratio: spec.ratio_pair(),
            }
        }
    };
    let action_count = truth.action_count();
    if let Some(fixed) = &cfg.actions {
        if let Some(&bad) = fixed.iter().find(|&&a| a >= action_count) {
            return Err(Error::Config(format!(
                "fixed action {bad} out of range for {action_count} actions"
            )));
        }
    }

    let members = match &agent {
        Agent::Known(_) => Vec::new(),
        Agent::Bayes { mixture, .. } => mixture.names().to_vec(),
    };
    let mut log = TrajectoryLog::new(members, action_count);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut history = History::new();

    for t in 1..=cfg.steps {
        let (planned, values) = agent.plan(&history, &d)?;
        let action = match &cfg.actions {
            Some(fixed) => ActionId(fixed[(t - 1) % fixed.len()]),
            None => planned,
        };
        let losses = (0..action_count)
            .map(|a| {
                Ok(agent
                    .loss(&history.with_action(ActionId(a))?, tolerance)?
                    .as_f64())
            })
            .collect::<Result<Vec<f64>>>()?;

        let query = history.with_action(action)?;
        let u: f64 = rng.random();
        let percept = sample_percept(&truth.conditional(&query)?, u, cfg.survival_conditioned);

        let mut row = LogRow {
            t,
            action: action.0,
            observation: None,
            reward: None,
            death: percept.is_none(),
            weights: Vec::new(),
            ratio: None,
            loss_chosen: losses[action.0],
            losses,
            values: values.per_action.iter().map(|v| v.as_f64()).collect(),
        };

        if let Some(e) = percept {
            history = query.complete(e)?;
            if let Agent::Bayes { mixture, .. } = &mut agent {
                *mixture = mixture.update(action, e)?;
            }
            let p = truth
                .alphabet()
                .get(e)
                .expect("sampled percept is in the alphabet");
            row.observation = Some(p.observation);
            row.reward = Some(p.reward.as_f64());
        }
        if let Agent::Bayes { mixture, ratio } = &agent {
            row.weights = mixture.posteriors().into_iter().map(S::as_f64).collect();
            row.ratio = match ratio {
                Some((i, j)) => Some(mixture.posterior_ratio(*i, *j)?.as_f64()),
                None => None,
            };
        }
        let died = row.death;
        log.rows.push(row);
        if died {
            break;
        }
    }
    Ok(log)
}
