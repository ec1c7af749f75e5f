//! Alphabets, percepts, histories and discounting.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Index into an environment's finite action set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ActionId(pub usize);

/// Index into a [`PerceptAlphabet`]; the death percept, when present, has the last index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PerceptId(pub usize);

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}", self.0)
    }
}

impl fmt::Display for PerceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

/// An observation/reward pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Percept<S> {
    pub observation: usize,
    pub reward: S,
}

/// Finite percept set enumerated up front, optionally extended by a death percept.
#[derive(Debug, Clone, PartialEq)]
pub struct PerceptAlphabet<S> {
    observations: usize,
    percepts: Vec<Percept<S>>,
    death: Option<Percept<S>>,
}

impl<S: Scalar> PerceptAlphabet<S> {
    pub fn new(observations: usize, percepts: Vec<Percept<S>>) -> Result<Self> {
        if percepts.is_empty() {
            return Err(Error::InvalidParameter("percept alphabet is empty".into()));
        }
        for (i, p) in percepts.iter().enumerate() {
            if p.observation >= observations {
                return Err(Error::InvalidParameter(format!(
                    "percept {i} has observation {} but only {observations} observations exist",
                    p.observation
                )));
            }
            if !p.reward.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "percept {i} has non-finite reward"
                )));
            }
            if percepts[..i].contains(p) {
                return Err(Error::InvalidParameter(format!(
                    "percept {i} is a duplicate"
                )));
            }
        }
        Ok(Self {
            observations,
            percepts,
            death: None,
        })
    }

    /// One percept per reward value, each with its own observation symbol.
    pub fn from_rewards(rewards: &[S]) -> Result<Self> {
        let percepts = rewards
            .iter()
            .enumerate()
            .map(|(observation, &reward)| Percept {
                observation,
                reward,
            })
            .collect();
        Self::new(rewards.len(), percepts)
    }

    /// Adds a death percept on a fresh observation symbol, so it lies outside the base set.
    pub fn with_death(&self, death_reward: S) -> Result<Self> {
        if self.death.is_some() {
            return Err(Error::InvalidParameter(
                "alphabet already has a death percept".into(),
            ));
        }
        if !death_reward.is_finite() {
            return Err(Error::InvalidParameter(
                "death reward must be finite".into(),
            ));
        }
        Ok(Self {
            observations: self.observations + 1,
            percepts: self.percepts.clone(),
            death: Some(Percept {
                observation: self.observations,
                reward: death_reward,
            }),
        })
    }

    /// Every reward, including the death reward, moved by `offset`.
    pub fn shifted(&self, offset: S) -> Self {
        let shift = |p: &Percept<S>| Percept {
            observation: p.observation,
            reward: p.reward + offset,
        };
        Self {
            observations: self.observations,
            percepts: self.percepts.iter().map(shift).collect(),
            death: self.death.as_ref().map(shift),
        }
    }

    /// Number of percept symbols, death percept included.
    pub fn len(&self) -> usize {
        self.percepts.len() + usize::from(self.death.is_some())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn base_len(&self) -> usize {
        self.percepts.len()
    }

    pub fn observations(&self) -> usize {
        self.observations
    }

    pub fn death_id(&self) -> Option<PerceptId> {
        self.death.map(|_| PerceptId(self.percepts.len()))
    }

    pub fn get(&self, id: PerceptId) -> Option<&Percept<S>> {
        self.percepts.get(id.0).or(if id.0 == self.percepts.len() {
            self.death.as_ref()
        } else {
            None
        })
    }

    pub fn reward(&self, id: PerceptId) -> S {
        self.get(id)
            .map(|p| p.reward)
            .expect("percept id within alphabet")
    }

    pub fn ids(&self) -> impl Iterator<Item = PerceptId> {
        (0..self.len()).map(PerceptId)
    }

    /// Same symbols with identical rewards.
    pub fn same_as(&self, other: &Self) -> bool {
        self == other
    }
}

/// Alternating action/percept sequence, optionally ending in a pending action.
///
/// Values are persistent: every extension returns a new history.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct History {
    steps: Vec<(ActionId, PerceptId)>,
    pending: Option<ActionId>,
}

impl History {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_steps(steps: Vec<(ActionId, PerceptId)>) -> Self {
        Self {
            steps,
            pending: None,
        }
    }

    /// Completed cycles.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty() && self.pending.is_none()
    }

    /// 1-based cycle index of the next (or pending) action.
    pub fn time(&self) -> usize {
        self.steps.len() + 1
    }

    pub fn steps(&self) -> &[(ActionId, PerceptId)] {
        &self.steps
    }

    pub fn pending(&self) -> Option<ActionId> {
        self.pending
    }

    pub fn append(&self, action: ActionId, percept: PerceptId) -> Result<Self> {
        if let Some(a) = self.pending {
            return Err(Error::PendingActionPresent(a.0));
        }
        let mut steps = Vec::with_capacity(self.steps.len() + 1);
        steps.extend_from_slice(&self.steps);
        steps.push((action, percept));
        Ok(Self {
            steps,
            pending: None,
        })
    }

    pub fn with_action(&self, action: ActionId) -> Result<Self> {
        if let Some(a) = self.pending {
            return Err(Error::PendingActionPresent(a.0));
        }
        Ok(Self {
            steps: self.steps.clone(),
            pending: Some(action),
        })
    }

    /// Closes the pending action with `percept`.
    pub fn complete(&self, percept: PerceptId) -> Result<Self> {
        let action = self.pending.ok_or(Error::MissingPendingAction)?;
        self.without_pending().append(action, percept)
    }

    pub fn without_pending(&self) -> Self {
        Self {
            steps: self.steps.clone(),
            pending: None,
        }
    }

    /// Whether the completed cycles of `self` are a prefix of those of `other`.
    pub fn is_prefix_of(&self, other: &History) -> bool {
        self.pending.is_none()
            && other.steps.len() >= self.steps.len()
            && other.steps[..self.steps.len()] == self.steps[..]
    }

    pub fn contains_percept(&self, percept: PerceptId) -> bool {
        self.steps.iter().any(|&(_, e)| e == percept)
    }

    pub fn actions(&self) -> impl Iterator<Item = ActionId> + '_ {
        self.steps.iter().map(|&(a, _)| a)
    }

    pub fn percepts(&self) -> impl Iterator<Item = PerceptId> + '_ {
        self.steps.iter().map(|&(_, e)| e)
    }
}

impl fmt::Display for History {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, (a, e)) in self.steps.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{a}{e}")?;
        }
        if let Some(a) = self.pending {
            if !self.steps.is_empty() {
                write!(f, " ")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, "]")
    }
}

/// Geometric discount `γ_t = γ^t` with a planning window of `horizon` cycles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscountSchedule<S> {
    gamma: S,
    horizon: usize,
}

impl<S: Scalar> DiscountSchedule<S> {
    pub fn new(gamma: S, horizon: usize) -> Result<Self> {
        if !(gamma > S::zero() && gamma < S::one()) {
            return Err(Error::InvalidParameter(format!(
                "gamma {gamma} not in (0, 1)"
            )));
        }
        if horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        Ok(Self { gamma, horizon })
    }

    pub fn gamma(&self) -> S {
        self.gamma
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Instantaneous discount `γ^t` for `t >= 1`.
    pub fn weight(&self, t: usize) -> S {
        debug_assert!(t >= 1);
        self.gamma.powi(t as i32)
    }

    /// `Γ_t`: the discount mass of the window `t ..= t + horizon - 1`.
    pub fn normalizer(&self, t: usize) -> S {
        (t..t + self.horizon).map(|k| self.weight(k)).sum()
    }

    /// Discount `k` cycles into the window, relative to its first cycle.
    pub(crate) fn relative_weight(&self, k: usize) -> S {
        self.gamma.powi(k as i32)
    }

    /// `Γ_t / γ^t`, which is independent of `t` and never underflows.
    pub(crate) fn relative_normalizer(&self) -> S {
        (0..self.horizon).map(|k| self.relative_weight(k)).sum()
    }

    /// Upper bound on the un-normalized reward mass dropped by truncation, per unit reward.
    pub fn truncation_bound(&self, t: usize) -> S {
        self.weight(t + self.horizon) / (S::one() - self.gamma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alphabet() -> PerceptAlphabet<f64> {
        PerceptAlphabet::from_rewards(&[0.5, 1.0]).unwrap()
    }

    #[test]
    fn append_to_empty() {
        let h = History::new().append(ActionId(0), PerceptId(0)).unwrap();
        assert_eq!(h.len(), 1);
        assert_eq!(h.time(), 2);
    }

    #[test]
    fn append_twice_keeps_order_and_original() {
        let h0 = History::new();
        let h1 = h0.append(ActionId(0), PerceptId(1)).unwrap();
        let h2 = h1.append(ActionId(1), PerceptId(0)).unwrap();
        assert_eq!(h0.len(), 0);
        assert_eq!(h1.len(), 1);
        assert_eq!(
            h2.steps(),
            &[(ActionId(0), PerceptId(1)), (ActionId(1), PerceptId(0))]
        );
    }

    #[test]
    fn append_with_pending_is_an_error() {
        let h = History::new().with_action(ActionId(1)).unwrap();
        assert!(matches!(
            h.append(ActionId(0), PerceptId(0)),
            Err(Error::PendingActionPresent(1))
        ));
        assert!(h.with_action(ActionId(0)).is_err());
    }

    #[test]
    fn complete_closes_pending() {
        let h = History::new().with_action(ActionId(1)).unwrap();
        let done = h.complete(PerceptId(0)).unwrap();
        assert_eq!(done.steps(), &[(ActionId(1), PerceptId(0))]);
        assert!(History::new().complete(PerceptId(0)).is_err());
    }

    #[test]
    fn prefix_relation() {
        let a = History::new().append(ActionId(0), PerceptId(0)).unwrap();
        let b = a
            .append(ActionId(1), PerceptId(1))
            .unwrap()
            .with_action(ActionId(0))
            .unwrap();
        assert!(a.is_prefix_of(&b));
        assert!(History::new().is_prefix_of(&a));
        assert!(!b.is_prefix_of(&a));
    }

    #[test]
    fn display() {
        let h = History::new()
            .append(ActionId(0), PerceptId(1))
            .unwrap()
            .with_action(ActionId(1))
            .unwrap();
        assert_eq!(h.to_string(), "[a0e1 a1]");
    }

    #[test]
    fn discount_weights() {
        let d = DiscountSchedule::new(0.5, 3).unwrap();
        assert_eq!(d.weight(1), 0.5);
        assert_eq!(d.weight(3), 0.125);
        let d = DiscountSchedule::new(0.9f64, 3).unwrap();
        assert!((d.weight(2) - 0.81).abs() < 1e-15);
    }

    #[test]
    fn normalizer_sums_window() {
        let d = DiscountSchedule::new(0.5, 3).unwrap();
        assert_eq!(d.normalizer(1), 0.5 + 0.25 + 0.125);
        assert_eq!(d.normalizer(2), 0.25 + 0.125 + 0.0625);
        assert_eq!(d.relative_normalizer(), 1.75);
    }

    #[test]
    fn discount_rejects_bad_parameters() {
        assert!(DiscountSchedule::new(0.0, 3).is_err());
        assert!(DiscountSchedule::new(1.0, 3).is_err());
        assert!(DiscountSchedule::new(0.5, 0).is_err());
    }

    #[test]
    fn death_percept_is_outside_base() {
        let a = alphabet().with_death(0.0).unwrap();
        assert_eq!(a.len(), 3);
        assert_eq!(a.base_len(), 2);
        assert_eq!(a.death_id(), Some(PerceptId(2)));
        let death = a.get(PerceptId(2)).unwrap();
        assert_eq!(death.observation, 2);
        assert_eq!(a.observations(), 3);
        assert!(a.with_death(0.0).is_err());
    }

    #[test]
    fn shift_moves_every_reward() {
        let a = alphabet().with_death(0.0).unwrap().shifted(-1.0);
        assert_eq!(a.reward(PerceptId(0)), -0.5);
        assert_eq!(a.reward(PerceptId(2)), -1.0);
    }

    #[test]
    fn alphabet_rejects_bad_percepts() {
        assert!(PerceptAlphabet::<f64>::new(1, vec![]).is_err());
        assert!(PerceptAlphabet::new(
            1,
            vec![Percept {
                observation: 1,
                reward: 0.0
            }]
        )
        .is_err());
        assert!(PerceptAlphabet::new(
            1,
            vec![Percept {
                observation: 0,
                reward: f64::NAN
            }]
        )
        .is_err());
        let p = Percept {
            observation: 0,
            reward: 1.0,
        };
        assert!(PerceptAlphabet::new(1, vec![p, p]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn history_replays_in_order(cycles in prop::collection::vec((0usize..4, 0usize..4), 0..20)) {
                let mut h = History::new();
                for &(a, e) in &cycles {
                    h = h.append(ActionId(a), PerceptId(e)).unwrap();
                }
                prop_assert_eq!(h.len(), cycles.len());
                let replay: Vec<_> = h.steps().iter().map(|&(a, e)| (a.0, e.0)).collect();
                prop_assert_eq!(replay, cycles);
            }

            #[test]
            fn discount_is_positive_and_decreasing(gamma in 0.01f64..0.99, horizon in 1usize..30, t in 1usize..50) {
                let d = DiscountSchedule::new(gamma, horizon).unwrap();
                prop_assert!(d.normalizer(t) > 0.0);
                prop_assert!(d.weight(t + 1) < d.weight(t));
            }
        }
    }
}
