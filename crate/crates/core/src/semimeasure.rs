//! Chronological semimeasure environments, measure loss, Solomonoff
//! normalization and the equivalent death-state construction.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::primitives::{ActionId, History, PerceptAlphabet, PerceptId};
use crate::scalar::Scalar;

/// A chronological semimeasure over percepts, queried one conditional at a time.
///
/// `conditional` receives a history ending in a pending action and returns
/// `ν(e | history)` for every percept of [`Environment::alphabet`]. Entries are
/// non-negative and sum to at most one; the shortfall is the probability that
/// no percept is produced. Implementations must be pure: the same history
/// always yields the same vector.
pub trait Environment<S: Scalar>: Send + Sync {
    fn alphabet(&self) -> &PerceptAlphabet<S>;

    fn action_count(&self) -> usize;

    fn conditional(&self, history: &History) -> Result<Vec<S>>;
}

impl<S: Scalar, E: Environment<S> + ?Sized> Environment<S> for Arc<E> {
    fn alphabet(&self) -> &PerceptAlphabet<S> {
        (**self).alphabet()
    }
    fn action_count(&self) -> usize {
        (**self).action_count()
    }
    fn conditional(&self, history: &History) -> Result<Vec<S>> {
        (**self).conditional(history)
    }
}

impl<S: Scalar, E: Environment<S> + ?Sized> Environment<S> for Box<E> {
    fn alphabet(&self) -> &PerceptAlphabet<S> {
        (**self).alphabet()
    }
    fn action_count(&self) -> usize {
        (**self).action_count()
    }
    fn conditional(&self, history: &History) -> Result<Vec<S>> {
        (**self).conditional(history)
    }
}

impl<S: Scalar, E: Environment<S> + ?Sized> Environment<S> for &E {
    fn alphabet(&self) -> &PerceptAlphabet<S> {
        (**self).alphabet()
    }
    fn action_count(&self) -> usize {
        (**self).action_count()
    }
    fn conditional(&self, history: &History) -> Result<Vec<S>> {
        (**self).conditional(history)
    }
}

pub type DynEnvironment<S> = Arc<dyn Environment<S>>;

/// Checks that `history` is a well-formed query for `env` and returns its pending action.
pub fn pending_action<S: Scalar, E: Environment<S> + ?Sized>(
    env: &E,
    history: &History,
) -> Result<ActionId> {
    let action = history.pending().ok_or(Error::MissingPendingAction)?;
    check_action(env, action)?;
    let count = env.alphabet().len();
    for (a, e) in history.steps() {
        check_action(env, *a)?;
        if e.0 >= count {
            return Err(Error::PerceptOutOfRange {
                percept: e.0,
                count,
            });
        }
    }
    Ok(action)
}

pub fn check_action<S: Scalar, E: Environment<S> + ?Sized>(
    env: &E,
    action: ActionId,
) -> Result<()> {
    let count = env.action_count();
    if action.0 >= count {
        return Err(Error::ActionOutOfRange {
            action: action.0,
            count,
        });
    }
    Ok(())
}

/// Instantaneous measure loss `1 - Σ_e ν(e | history)`, always in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct MeasureLoss<S>(S);

impl<S: Scalar> MeasureLoss<S> {
    /// Clamps into `[0, 1]`.
    pub fn from_mass(mass: S) -> Self {
        MeasureLoss((S::one() - mass).max(S::zero()).min(S::one()))
    }

    pub fn value(self) -> S {
        self.0
    }
}

fn check_vector<S: Scalar>(vector: &[S], expected_len: usize, tolerance: S) -> Option<String> {
    if vector.len() != expected_len {
        return Some(format!(
            "conditional has {} entries, alphabet has {expected_len}",
            vector.len()
        ));
    }
    if let Some((i, p)) = vector
        .iter()
        .enumerate()
        .find(|(_, p)| !p.is_finite() || **p < S::zero())
    {
        return Some(format!("entry {i} is {p}"));
    }
    let sum: S = vector.iter().copied().sum();
    if sum > S::one() + tolerance {
        return Some(format!("conditional sums to {sum} > 1"));
    }
    None
}

pub fn measure_loss<S: Scalar, E: Environment<S> + ?Sized>(
    env: &E,
    history: &History,
) -> Result<MeasureLoss<S>> {
    measure_loss_with_tolerance(env, history, S::tolerance())
}

pub fn measure_loss_with_tolerance<S: Scalar, E: Environment<S> + ?Sized>(
    env: &E,
    history: &History,
    tolerance: S,
) -> Result<MeasureLoss<S>> {
    let vector = env.conditional(history)?;
    if let Some(reason) = check_vector(&vector, env.alphabet().len(), tolerance) {
        return Err(Error::SemimeasureViolation {
            history: history.to_string(),
            reason,
        });
    }
    Ok(MeasureLoss::from_mass(vector.into_iter().sum()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub history: History,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Number of `history + pending action` queries examined.
    pub checked: usize,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Exhaustively checks every query `æ_{<t} a_t` with `t <= depth`.
pub fn validate<S: Scalar, E: Environment<S> + ?Sized>(
    env: &E,
    depth: usize,
    tolerance: S,
) -> ValidationReport {
    let mut report = ValidationReport::default();
    let actions = env.action_count();
    let percepts = env.alphabet().len();
    let mut frontier = vec![History::new()];
    for t in 1..=depth {
        let mut next = Vec::new();
        for prefix in &frontier {
            for a in (0..actions).map(ActionId) {
                let query = prefix
                    .with_action(a)
                    .expect("frontier has no pending action");
                report.checked += 1;
                let reason = match env.conditional(&query) {
                    Ok(v) => check_vector(&v, percepts, tolerance),
                    Err(e) => Some(e.to_string()),
                };
                if let Some(reason) = reason {
                    report.violations.push(Violation {
                        history: query.clone(),
                        reason,
                    });
                }
                if t < depth {
                    for e in (0..percepts).map(PerceptId) {
                        next.push(prefix.append(a, e).expect("no pending action"));
                    }
                }
            }
        }
        frontier = next;
    }
    report
}

/// `ν(e_{from+1:n} | æ_{1:from}, a_{from+1:n})` along the completed cycles of `history`.
pub fn sequence_probability<S: Scalar, E: Environment<S> + ?Sized>(
    env: &E,
    history: &History,
    from: usize,
) -> Result<S> {
    let steps = history.steps();
    let mut prefix = History::from_steps(steps[..from.min(steps.len())].to_vec());
    let mut prob = S::one();
    for &(a, e) in &steps[from.min(steps.len())..] {
        let query = prefix.with_action(a)?;
        let vector = env.conditional(&query)?;
        prob = prob * vector[e.0];
        prefix = query.complete(e)?;
    }
    Ok(prob)
}

/// Joint probability `ν(e_{1:n} | a_{1:n})` of the completed cycles.
pub fn joint_probability<S: Scalar, E: Environment<S> + ?Sized>(
    env: &E,
    history: &History,
) -> Result<S> {
    sequence_probability(env, history, 0)
}

/// Solomonoff normalization of an inner semimeasure.
///
/// Zero-mass conditionals become uniform over the alphabet.
#[derive(Debug, Clone)]
pub struct Normalized<E> {
    inner: E,
}

impl<E> Normalized<E> {
    pub fn inner(&self) -> &E {
        &self.inner
    }
}

pub fn normalize<S: Scalar, E: Environment<S>>(env: E) -> Normalized<E> {
    Normalized { inner: env }
}

impl<S: Scalar, E: Environment<S>> Environment<S> for Normalized<E> {
    fn alphabet(&self) -> &PerceptAlphabet<S> {
        self.inner.alphabet()
    }

    fn action_count(&self) -> usize {
        self.inner.action_count()
    }

    fn conditional(&self, history: &History) -> Result<Vec<S>> {
        let mut vector = self.inner.conditional(history)?;
        let mass: S = vector.iter().copied().sum();
        if mass > S::zero() {
            vector.iter_mut().for_each(|p| *p = *p / mass);
        } else {
            let uniform = S::one() / S::lit(vector.len() as f64);
            vector.iter_mut().for_each(|p| *p = uniform);
        }
        Ok(vector)
    }
}

/// Proper measure that routes the inner environment's measure loss to an
/// absorbing death percept.
#[derive(Debug, Clone)]
pub struct DeathState<S, E> {
    inner: E,
    alphabet: PerceptAlphabet<S>,
    death: PerceptId,
}

impl<S: Scalar, E: Environment<S>> DeathState<S, E> {
    pub fn new(inner: E, death_reward: S) -> Result<Self> {
        let alphabet = inner.alphabet().with_death(death_reward)?;
        let death = alphabet
            .death_id()
            .expect("with_death adds a death percept");
        Ok(Self {
            inner,
            alphabet,
            death,
        })
    }

    pub fn death_percept(&self) -> PerceptId {
        self.death
    }

    pub fn inner(&self) -> &E {
        &self.inner
    }
}

/// Death-state equivalent with death reward 0.
pub fn augment_death_state<S: Scalar, E: Environment<S>>(env: E) -> Result<DeathState<S, E>> {
    DeathState::new(env, S::zero())
}

impl<S: Scalar, E: Environment<S>> Environment<S> for DeathState<S, E> {
    fn alphabet(&self) -> &PerceptAlphabet<S> {
        &self.alphabet
    }

    fn action_count(&self) -> usize {
        self.inner.action_count()
    }

    fn conditional(&self, history: &History) -> Result<Vec<S>> {
        pending_action(self, history)?;
        if history.contains_percept(self.death) {
            let mut vector = vec![S::zero(); self.alphabet.len()];
            vector[self.death.0] = S::one();
            return Ok(vector);
        }
        let mut vector = self.inner.conditional(history)?;
        let mass: S = vector.iter().copied().sum();
        vector.push(MeasureLoss::from_mass(mass).value());
        Ok(vector)
    }
}
