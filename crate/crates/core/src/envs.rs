//! Concrete environments: the cliff, constant-risk environments, explicit
//! per-depth tables and seeded random semimeasures.

use rand::Rng;

use crate::error::{Error, Result};
use crate::primitives::{ActionId, History, PerceptAlphabet};
use crate::scalar::Scalar;
use crate::seeding::KeyHasher;
use crate::semimeasure::{pending_action, Environment};

/// Action that keeps the agent alive in [`make_cliff`].
pub const CLIFF_SAFE: ActionId = ActionId(0);
/// Action that jumps off the cliff in [`make_cliff`].
pub const CLIFF_JUMP: ActionId = ActionId(1);

/// Conditionals indexed by cycle number and action.
///
/// `layers[t - 1][a]` is the conditional for action `a` at cycle `t`; cycles
/// beyond the last layer reuse it.
#[derive(Debug, Clone, PartialEq)]
pub struct TableEnv<S> {
    alphabet: PerceptAlphabet<S>,
    action_count: usize,
    layers: Vec<Vec<Vec<S>>>,
}

impl<S: Scalar> TableEnv<S> {
    /// Checks shapes only; probability mass is left to [`crate::semimeasure::validate`].
    pub fn new(
        alphabet: PerceptAlphabet<S>,
        action_count: usize,
        layers: Vec<Vec<Vec<S>>>,
    ) -> Result<Self> {
        if action_count == 0 {
            return Err(Error::InvalidParameter(
                "at least one action is required".into(),
            ));
        }
        if layers.is_empty() {
            return Err(Error::InvalidParameter("table has no layers".into()));
        }
        for (depth, layer) in layers.iter().enumerate() {
            if layer.len() != action_count {
                return Err(Error::InvalidParameter(format!(
                    "table layer {} has {} actions, expected {action_count}",
                    depth + 1,
                    layer.len()
                )));
            }
            for (a, vector) in layer.iter().enumerate() {
                if vector.len() != alphabet.len() {
                    return Err(Error::InvalidParameter(format!(
                        "table layer {} action {a} has {} entries, expected {}",
                        depth + 1,
                        vector.len(),
                        alphabet.len()
                    )));
                }
            }
        }
        Ok(Self {
            alphabet,
            action_count,
            layers,
        })
    }

    /// A single layer used at every cycle.
    pub fn stationary(alphabet: PerceptAlphabet<S>, per_action: Vec<Vec<S>>) -> Result<Self> {
        let action_count = per_action.len();
        Self::new(alphabet, action_count, vec![per_action])
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }
}

impl<S: Scalar> Environment<S> for TableEnv<S> {
    fn alphabet(&self) -> &PerceptAlphabet<S> {
        &self.alphabet
    }

    fn action_count(&self) -> usize {
        self.action_count
    }

    fn conditional(&self, history: &History) -> Result<Vec<S>> {
        let action = pending_action(self, history)?;
        let layer = history.time().min(self.layers.len()) - 1;
        Ok(self.layers[layer][action.0].clone())
    }
}

/// Two actions and one percept: [`CLIFF_SAFE`] survives with certainty and
/// receives `alive_reward`, [`CLIFF_JUMP`] loses all measure.
pub fn make_cliff<S: Scalar>(alive_reward: S) -> Result<TableEnv<S>> {
    let alphabet = PerceptAlphabet::from_rewards(&[alive_reward])?;
    TableEnv::stationary(alphabet, vec![vec![S::one()], vec![S::zero()]])
}

/// One action, one percept with reward `reward`, survival probability `survival` per cycle.
pub fn make_bernoulli_risk<S: Scalar>(survival: S, reward: S) -> Result<TableEnv<S>> {
    if !(survival > S::zero() && survival <= S::one()) {
        return Err(Error::InvalidParameter(format!(
            "survival probability {survival} not in (0, 1]"
        )));
    }
    let alphabet = PerceptAlphabet::from_rewards(&[reward])?;
    TableEnv::stationary(alphabet, vec![vec![survival]])
}

pub const RANDOM_MAX_COUNT: usize = 4;
pub const RANDOM_MAX_DEPTH: usize = 6;

/// Seeded random semimeasure with history-dependent conditionals.
///
/// The conditional at a query is a pure function of the seed, the first
/// `depth - 1` cycles and the pending action, so queries deeper than `depth`
/// repeat the conditionals of depth `depth`. Each conditional has total mass
/// uniform in `[0, 1)`, split across percepts by a flat Dirichlet draw.
/// Rewards are uniform in `[-1, 1)`.
#[derive(Debug, Clone)]
pub struct RandomSemimeasure<S> {
    seed: u64,
    alphabet: PerceptAlphabet<S>,
    action_count: usize,
    depth: usize,
}

impl<S: Scalar> RandomSemimeasure<S> {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn depth(&self) -> usize {
        self.depth
    }
}

pub fn make_random_semimeasure<S: Scalar>(
    seed: u64,
    action_count: usize,
    percept_count: usize,
    depth: usize,
) -> Result<RandomSemimeasure<S>> {
    if !(1..=RANDOM_MAX_COUNT).contains(&action_count)
        || !(1..=RANDOM_MAX_COUNT).contains(&percept_count)
    {
        return Err(Error::InvalidParameter(format!(
            "random environment counts must be in 1..={RANDOM_MAX_COUNT}"
        )));
    }
    if !(1..=RANDOM_MAX_DEPTH).contains(&depth) {
        return Err(Error::InvalidParameter(format!(
            "random environment depth must be in 1..={RANDOM_MAX_DEPTH}"
        )));
    }
    let mut rng = KeyHasher::new(seed).word(u64::MAX).rng();
    let rewards: Vec<S> = (0..percept_count)
        .map(|_| S::lit(rng.random_range(-1.0..1.0)))
        .collect();
    Ok(RandomSemimeasure {
        seed,
        alphabet: PerceptAlphabet::from_rewards(&rewards)?,
        action_count,
        depth,
    })
}

impl<S: Scalar> Environment<S> for RandomSemimeasure<S> {
    fn alphabet(&self) -> &PerceptAlphabet<S> {
        &self.alphabet
    }

    fn action_count(&self) -> usize {
        self.action_count
    }

    fn conditional(&self, history: &History) -> Result<Vec<S>> {
        pending_action(self, history)?;
        let mut rng = KeyHasher::new(self.seed)
            .history(history, self.depth - 1)
            .rng();
        let mass: f64 = rng.random();
        let weights: Vec<f64> = (0..self.alphabet.len())
            .map(|_| -(1.0 - rng.random::<f64>()).ln())
            .collect();
        let total: f64 = weights.iter().sum();
        Ok(weights
            .into_iter()
            .map(|w| S::lit(if total > 0.0 { mass * w / total } else { 0.0 }))
            .collect())
    }
}
