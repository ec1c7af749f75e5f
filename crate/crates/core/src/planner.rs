//! Discounted value of policies and expectimax action selection.
//!
//! Values are normalized by the discount mass of the planning window that
//! starts at the queried cycle, so a constant reward `r` in a proper measure
//! is worth exactly `r`. Internally every discount is taken relative to the
//! window's first cycle: the normalized value is unchanged and `γ^t` never
//! underflows on long runs. Percepts with zero conditional mass are skipped,
//! which makes any action with full measure loss worth exactly zero.

use crate::error::{Error, Result};
use crate::mixture::Mixture;
use crate::primitives::{ActionId, DiscountSchedule, History, PerceptAlphabet, PerceptId};
use crate::scalar::Scalar;
use crate::seeding::KeyHasher;
use crate::semimeasure::{check_action, Environment};

/// Deterministic map from histories (without pending action) to actions.
pub trait Policy: Send + Sync {
    fn decide(&self, history: &History) -> ActionId;
}

impl<F> Policy for F
where
    F: Fn(&History) -> ActionId + Send + Sync,
{
    fn decide(&self, history: &History) -> ActionId {
        self(history)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConstantPolicy(pub ActionId);

impl Policy for ConstantPolicy {
    fn decide(&self, _: &History) -> ActionId {
        self.0
    }
}

/// Arbitrary but fixed policy: the action is a seeded hash of the whole history.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomPolicy {
    seed: u64,
    action_count: usize,
}

impl RandomPolicy {
    pub fn new(seed: u64, action_count: usize) -> Self {
        assert!(action_count > 0, "policy needs at least one action");
        Self { seed, action_count }
    }
}

impl Policy for RandomPolicy {
    fn decide(&self, history: &History) -> ActionId {
        let key = KeyHasher::new(self.seed)
            .history(history, usize::MAX)
            .finish();
        ActionId((key % self.action_count as u64) as usize)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueResult<S> {
    pub value: S,
    pub per_action: Vec<S>,
}

/// A point in the search tree that knows its own conditionals.
trait SearchNode<S: Scalar>: Sized {
    fn alphabet(&self) -> &PerceptAlphabet<S>;
    fn action_count(&self) -> usize;
    fn conditional(&self, action: ActionId) -> Result<Vec<S>>;
    fn child(&self, action: ActionId, percept: PerceptId) -> Result<Self>;
}

struct EnvNode<'a, E: ?Sized> {
    env: &'a E,
    history: History,
}

impl<S: Scalar, E: Environment<S> + ?Sized> SearchNode<S> for EnvNode<'_, E> {
    fn alphabet(&self) -> &PerceptAlphabet<S> {
        self.env.alphabet()
    }

    fn action_count(&self) -> usize {
        self.env.action_count()
    }

    fn conditional(&self, action: ActionId) -> Result<Vec<S>> {
        self.env.conditional(&self.history.with_action(action)?)
    }

    fn child(&self, action: ActionId, percept: PerceptId) -> Result<Self> {
        Ok(EnvNode {
            env: self.env,
            history: self.history.append(action, percept)?,
        })
    }
}

/// Mixture nodes carry their own posterior, so each conditional costs one
/// query per member instead of a replay of the whole search path.
impl<S: Scalar> SearchNode<S> for Mixture<S> {
    fn alphabet(&self) -> &PerceptAlphabet<S> {
        Environment::alphabet(self)
    }

    fn action_count(&self) -> usize {
        Environment::action_count(self)
    }

    fn conditional(&self, action: ActionId) -> Result<Vec<S>> {
        self.predict(&self.history().with_action(action)?)
    }

    fn child(&self, action: ActionId, percept: PerceptId) -> Result<Self> {
        self.update(action, percept)
    }
}

/// Un-normalized expectimax value of `action` at `node`, `depth` cycles into a
/// window of `d.horizon()` cycles.
fn expectimax<S: Scalar, N: SearchNode<S>>(
    node: &N,
    action: ActionId,
    depth: usize,
    d: &DiscountSchedule<S>,
) -> Result<S> {
    let weight = d.relative_weight(depth);
    let mut total = S::zero();
    for (e, p) in node.conditional(action)?.into_iter().enumerate() {
        if p <= S::zero() {
            continue;
        }
        let percept = PerceptId(e);
        let mut future = S::zero();
        if depth + 1 < d.horizon() {
            let child = node.child(action, percept)?;
            let mut best = S::neg_infinity();
            for a in (0..child.action_count()).map(ActionId) {
                best = best.max(expectimax(&child, a, depth + 1, d)?);
            }
            future = best;
        }
        total = total + p * (weight * node.alphabet().reward(percept) + future);
    }
    Ok(total)
}

fn select<S: Scalar, N: SearchNode<S>>(
    root: &N,
    d: &DiscountSchedule<S>,
) -> Result<(ActionId, ValueResult<S>)> {
    let norm = d.relative_normalizer();
    let per_action = (0..root.action_count())
        .map(|a| Ok(expectimax(root, ActionId(a), 0, d)? / norm))
        .collect::<Result<Vec<S>>>()?;
    // Lowest index wins ties.
    let mut best = 0;
    for (a, v) in per_action.iter().enumerate().skip(1) {
        if *v > per_action[best] {
            best = a;
        }
    }
    Ok((
        ActionId(best),
        ValueResult {
            value: per_action[best],
            per_action,
        },
    ))
}

/// Expectimax-optimal action at `history` (which must not end in a pending action).
pub fn optimal_action<S: Scalar, E: Environment<S> + ?Sized>(
    env: &E,
    history: &History,
    d: &DiscountSchedule<S>,
) -> Result<(ActionId, ValueResult<S>)> {
    if let Some(a) = history.pending() {
        return Err(Error::PendingActionPresent(a.0));
    }
    select(
        &EnvNode {
            env,
            history: history.clone(),
        },
        d,
    )
}

/// Expectimax in the mixture, whose posterior must be conditioned on exactly `history`.
pub fn aixi_like_action<S: Scalar>(
    mixture: &Mixture<S>,
    history: &History,
    d: &DiscountSchedule<S>,
) -> Result<(ActionId, ValueResult<S>)> {
    if history != mixture.history() {
        return Err(Error::StateDesync {
            history: history.to_string(),
            state: mixture.history().to_string(),
        });
    }
    select(mixture, d)
}

fn policy_value<S: Scalar, E: Environment<S> + ?Sized, P: Policy + ?Sized>(
    env: &E,
    policy: &P,
    query: &History,
    depth: usize,
    d: &DiscountSchedule<S>,
) -> Result<S> {
    let weight = d.relative_weight(depth);
    let mut total = S::zero();
    for (e, p) in env.conditional(query)?.into_iter().enumerate() {
        if p <= S::zero() {
            continue;
        }
        let percept = PerceptId(e);
        let mut future = S::zero();
        if depth + 1 < d.horizon() {
            let next = query.complete(percept)?;
            let action = policy.decide(&next);
            check_action(env, action)?;
            future = policy_value(env, policy, &next.with_action(action)?, depth + 1, d)?;
        }
        total = total + p * (weight * env.alphabet().reward(percept) + future);
    }
    Ok(total)
}

/// `V^π_ν` at `history`. A pending action, if present, is taken instead of the
/// policy's first choice.
pub fn value_of_policy<S: Scalar, E: Environment<S> + ?Sized, P: Policy + ?Sized>(
    env: &E,
    policy: &P,
    history: &History,
    d: &DiscountSchedule<S>,
) -> Result<S> {
    let query = match history.pending() {
        Some(_) => history.clone(),
        None => {
            let action = policy.decide(history);
            check_action(env, action)?;
            history.with_action(action)?
        }
    };
    Ok(policy_value(env, policy, &query, 0, d)? / d.relative_normalizer())
}

/// Environment with every reward moved by a constant; conditionals are untouched.
#[derive(Debug, Clone)]
pub struct RewardShift<S, E> {
    inner: E,
    alphabet: PerceptAlphabet<S>,
}

pub fn shift_rewards<S: Scalar, E: Environment<S>>(env: E, offset: S) -> RewardShift<S, E> {
    let alphabet = env.alphabet().shifted(offset);
    RewardShift {
        inner: env,
        alphabet,
    }
}

impl<S: Scalar, E: Environment<S>> Environment<S> for RewardShift<S, E> {
    fn alphabet(&self) -> &PerceptAlphabet<S> {
        &self.alphabet
    }

    fn action_count(&self) -> usize {
        self.inner.action_count()
    }

    fn conditional(&self, history: &History) -> Result<Vec<S>> {
        self.inner.conditional(history)
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::envs::{make_bernoulli_risk, make_cliff, CLIFF_JUMP, CLIFF_SAFE};
    use crate::semimeasure::{normalize, DynEnvironment};

    fn schedule(gamma: f64, horizon: usize) -> DiscountSchedule<f64> {
        DiscountSchedule::new(gamma, horizon).unwrap()
    }

    #[test]
    fn full_loss_action_is_worth_zero() {
        let env = make_cliff(0.5).unwrap();
        let h = History::new().with_action(CLIFF_JUMP).unwrap();
        let v = value_of_policy(&env, &ConstantPolicy(CLIFF_SAFE), &h, &schedule(0.9, 5)).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn constant_reward_value_is_the_reward() {
        let env = make_bernoulli_risk(1.0, 0.5).unwrap();
        for (gamma, horizon) in [(0.1, 1), (0.5, 7), (0.95, 20)] {
            let v = value_of_policy(
                &env,
                &ConstantPolicy(ActionId(0)),
                &History::new(),
                &schedule(gamma, horizon),
            )
            .unwrap();
            assert!((v - 0.5).abs() < 1e-12, "{v}");
        }
    }

    #[test]
    fn bernoulli_value_matches_unrolled_sum() {
        let env = make_bernoulli_risk(0.9, 1.0).unwrap();
        let d = schedule(0.5, 20);
        let v = value_of_policy(&env, &ConstantPolicy(ActionId(0)), &History::new(), &d).unwrap();
        let num: f64 = (1..=20).map(|k| 0.5f64.powi(k) * 0.9f64.powi(k)).sum();
        let den: f64 = (1..=20).map(|k| 0.5f64.powi(k)).sum();
        assert!((v - num / den).abs() < 1e-9);
    }

    #[test]
    fn cliff_positive_rewards_stay_alive() {
        let (a, vr) = optimal_action(
            &make_cliff(0.5).unwrap(),
            &History::new(),
            &schedule(0.9, 10),
        )
        .unwrap();
        assert_eq!(a, CLIFF_SAFE);
        assert_eq!(vr.per_action[CLIFF_JUMP.0], 0.0);
        assert!(vr.value > 0.0);
    }

    #[test]
    fn cliff_negative_rewards_jump() {
        let (a, vr) = optimal_action(
            &make_cliff(-0.5).unwrap(),
            &History::new(),
            &schedule(0.9, 10),
        )
        .unwrap();
        assert_eq!(a, CLIFF_JUMP);
        assert_eq!(vr.value, 0.0);
        assert!(vr.per_action[CLIFF_SAFE.0] < 0.0);
    }

    #[test]
    fn zero_reward_tie_goes_to_lowest_index() {
        let (a, _) = optimal_action(
            &make_cliff(0.0).unwrap(),
            &History::new(),
            &schedule(0.9, 4),
        )
        .unwrap();
        assert_eq!(a, CLIFF_SAFE);
    }

    #[test]
    fn single_action_env() {
        let (a, vr) = optimal_action(
            &make_bernoulli_risk(0.5, 1.0).unwrap(),
            &History::new(),
            &schedule(0.9, 3),
        )
        .unwrap();
        assert_eq!(a, ActionId(0));
        assert_eq!(vr.per_action.len(), 1);
    }

    #[test]
    fn pending_history_is_rejected_by_optimal_action() {
        let h = History::new().with_action(CLIFF_SAFE).unwrap();
        assert!(optimal_action(&make_cliff(0.5).unwrap(), &h, &schedule(0.9, 3)).is_err());
    }

    fn cliff_mixture(reward: f64) -> Mixture<f64> {
        let risky: DynEnvironment<f64> = Arc::new(make_cliff(reward).unwrap());
        let safe: DynEnvironment<f64> = Arc::new(normalize(make_cliff(reward).unwrap()));
        Mixture::uniform(vec![("risky".into(), risky), ("safe".into(), safe)]).unwrap()
    }

    #[test]
    fn mixture_of_true_env_matches_aimu() {
        let env: DynEnvironment<f64> = Arc::new(make_cliff(0.5).unwrap());
        let m = Mixture::uniform(vec![("mu".into(), env.clone())]).unwrap();
        let d = schedule(0.9, 6);
        assert_eq!(
            aixi_like_action(&m, &History::new(), &d).unwrap(),
            optimal_action(&env, &History::new(), &d).unwrap()
        );
    }

    #[test]
    fn mixture_threaded_search_matches_full_history_queries() {
        let m = cliff_mixture(0.3);
        let d = schedule(0.8, 5);
        let threaded = aixi_like_action(&m, &History::new(), &d).unwrap();
        let queried = optimal_action(&m, &History::new(), &d).unwrap();
        assert_eq!(threaded.0, queried.0);
        for (x, y) in threaded.1.per_action.iter().zip(&queried.1.per_action) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn mixture_cliff_at_horizon_two() {
        let d = schedule(0.5, 2);
        let (a, vr) = aixi_like_action(&cliff_mixture(0.5), &History::new(), &d).unwrap();
        assert_eq!(a, CLIFF_SAFE);
        // Window discounts 1 and 1/2, normalizer 3/2.
        // safe: 1 * (0.5 + max(1 * 0.25, 0.5 * 0.25)) = 0.75
        // jump: 0.5 * (0.5 + 0.25), posterior moves wholly to the safe member
        assert!((vr.per_action[0] - 0.5).abs() < 1e-15);
        assert!((vr.per_action[1] - 0.25).abs() < 1e-15);

        let (a, vr) = aixi_like_action(&cliff_mixture(-0.5), &History::new(), &d).unwrap();
        assert_eq!(a, CLIFF_JUMP);
        // safe: 1 * (-0.5 + max(-0.25, 0.5 * -0.25)) = -0.625
        // jump: 0.5 * (-0.5 - 0.25) = -0.375
        assert!((vr.per_action[0] + 0.625 / 1.5).abs() < 1e-15);
        assert!((vr.per_action[1] + 0.25).abs() < 1e-15);
    }

    #[test]
    fn aixi_requires_synchronized_history() {
        let m = cliff_mixture(0.5);
        let h = History::new().append(CLIFF_SAFE, PerceptId(0)).unwrap();
        assert!(matches!(
            aixi_like_action(&m, &h, &schedule(0.9, 2)),
            Err(Error::StateDesync { .. })
        ));
    }

    #[test]
    fn shift_changes_rewards_only() {
        let shifted = shift_rewards(make_cliff(0.5).unwrap(), -1.0);
        assert_eq!(shifted.alphabet().reward(PerceptId(0)), -0.5);
        let q = History::new().with_action(CLIFF_JUMP).unwrap();
        assert_eq!(shifted.conditional(&q).unwrap(), vec![0.0]);
        let unshifted = shift_rewards(make_bernoulli_risk(0.9, 1.0).unwrap(), 0.0);
        let d = schedule(0.7, 4);
        let p = ConstantPolicy(ActionId(0));
        assert_eq!(
            value_of_policy(&unshifted, &p, &History::new(), &d).unwrap(),
            value_of_policy(
                &make_bernoulli_risk(0.9, 1.0).unwrap(),
                &p,
                &History::new(),
                &d
            )
            .unwrap()
        );
    }

    #[test]
    fn random_policy_is_deterministic_and_in_range() {
        let p = RandomPolicy::new(5, 3);
        let mut h = History::new();
        for t in 0..20 {
            let a = p.decide(&h);
            assert_eq!(a, p.decide(&h));
            assert!(a.0 < 3);
            h = h.append(a, PerceptId(t % 2)).unwrap();
        }
    }
}
