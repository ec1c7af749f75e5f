//! Finite Bayesian mixtures over environment classes.
//!
//! A [`Mixture`] is conditioned on one history. Its posterior is kept twice:
//! incrementally (multiplied by each observed conditional and renormalized)
//! and as per-member accumulated log joint probabilities, from which the
//! batch posterior `w_ν ν(e_{1:t} | a_{1:t}) / ξ(e_{1:t} | a_{1:t})` follows.
//! Both live in log space; survival probabilities over hundreds of cycles
//! underflow otherwise.

use std::fmt;

use crate::error::{Error, Result};
use crate::primitives::{ActionId, History, PerceptAlphabet, PerceptId};
use crate::scalar::Scalar;
use crate::semimeasure::{pending_action, DynEnvironment, Environment, MeasureLoss};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PriorMode {
    #[default]
    Uniform,
    /// `w ∝ 2^(-length)` for a per-member description length in bits.
    DescriptionLength,
}

pub fn uniform_priors<S: Scalar>(n: usize) -> Vec<S> {
    vec![S::one() / S::lit(n as f64); n]
}

/// Priors proportional to `2^(-length)`, normalized to sum to one.
pub fn description_length_priors<S: Scalar>(lengths: &[usize]) -> Vec<S> {
    let shortest = lengths.iter().copied().min().unwrap_or(0);
    let raw: Vec<f64> = lengths
        .iter()
        .map(|&l| (-((l - shortest) as f64) * std::f64::consts::LN_2).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| S::lit(w / total)).collect()
}

/// `exp(x - max) / Σ exp(x - max)`; all-`-inf` input yields all zeros.
fn normalize_log<S: Scalar>(logs: &[S]) -> Vec<S> {
    let max = logs.iter().copied().fold(S::neg_infinity(), S::max);
    if max == S::neg_infinity() {
        return vec![S::zero(); logs.len()];
    }
    let linear: Vec<S> = logs.iter().map(|&l| (l - max).exp()).collect();
    let total: S = linear.iter().copied().sum();
    linear.into_iter().map(|w| w / total).collect()
}

fn shift_to_max<S: Scalar>(logs: &mut [S]) {
    let max = logs.iter().copied().fold(S::neg_infinity(), S::max);
    if max.is_finite() {
        logs.iter_mut().for_each(|l| *l = *l - max);
    }
}

#[derive(Clone)]
pub struct Mixture<S: Scalar> {
    members: Vec<DynEnvironment<S>>,
    names: Vec<String>,
    priors: Vec<S>,
    log_priors: Vec<S>,
    log_joint: Vec<S>,
    log_weights: Vec<S>,
    history: History,
}

impl<S: Scalar> fmt::Debug for Mixture<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Mixture")
            .field("names", &self.names)
            .field("priors", &self.priors)
            .field("posteriors", &self.posteriors())
            .field("history", &self.history.to_string())
            .finish()
    }
}

impl<S: Scalar> Mixture<S> {
    pub fn new(members: Vec<(String, DynEnvironment<S>)>, priors: Vec<S>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidParameter("mixture has no members".into()));
        }
        if priors.len() != members.len() {
            return Err(Error::InvalidParameter(format!(
                "{} priors for {} members",
                priors.len(),
                members.len()
            )));
        }
        let (first_alphabet, first_actions) =
            (members[0].1.alphabet(), members[0].1.action_count());
        for (name, env) in &members[1..] {
            if !env.alphabet().same_as(first_alphabet) {
                return Err(Error::IncompatibleMembers(format!(
                    "percept alphabet ({name})"
                )));
            }
            if env.action_count() != first_actions {
                return Err(Error::IncompatibleMembers(format!("action count ({name})")));
            }
        }
        if let Some(i) = priors
            .iter()
            .position(|w| !(w.is_finite() && *w > S::zero()))
        {
            return Err(Error::InvalidParameter(format!(
                "prior of member {i} must be positive, got {}",
                priors[i]
            )));
        }
        let total: S = priors.iter().copied().sum();
        if total > S::one() + S::tolerance() {
            return Err(Error::InvalidParameter(format!(
                "priors sum to {total} > 1"
            )));
        }

        let log_priors: Vec<S> = priors.iter().map(|w| w.ln()).collect();
        let mut log_weights = log_priors.clone();
        shift_to_max(&mut log_weights);
        let (names, members) = members.into_iter().unzip();
        Ok(Self {
            log_joint: vec![S::zero(); priors.len()],
            members,
            names,
            priors,
            log_priors,
            log_weights,
            history: History::new(),
        })
    }

    pub fn uniform(members: Vec<(String, DynEnvironment<S>)>) -> Result<Self> {
        let priors = uniform_priors(members.len());
        Self::new(members, priors)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn members(&self) -> &[DynEnvironment<S>] {
        &self.members
    }

    pub fn priors(&self) -> &[S] {
        &self.priors
    }

    /// The history the posterior is conditioned on.
    pub fn history(&self) -> &History {
        &self.history
    }

    /// Accumulated `ln ν(e_{<t} | a_{<t})` per member.
    pub fn log_joint(&self) -> &[S] {
        &self.log_joint
    }

    /// Incrementally maintained posterior `w_ν(æ_{<t})`.
    pub fn posteriors(&self) -> Vec<S> {
        normalize_log(&self.log_weights)
    }

    /// Posterior recomputed from priors and joint probabilities.
    pub fn batch_posteriors(&self) -> Vec<S> {
        let logs: Vec<S> = self
            .log_priors
            .iter()
            .zip(&self.log_joint)
            .map(|(&p, &j)| p + j)
            .collect();
        normalize_log(&logs)
    }

    /// `w_i(æ) / w_j(æ)`, computed from priors and accumulated log joints.
    pub fn posterior_ratio(&self, i: usize, j: usize) -> Result<S> {
        for k in [i, j] {
            if k >= self.len() {
                return Err(Error::InvalidParameter(format!(
                    "member {k} out of range for {} members",
                    self.len()
                )));
            }
        }
        let log_j = self.log_priors[j] + self.log_joint[j];
        if log_j == S::neg_infinity() {
            return Err(Error::DegeneratePosterior(j));
        }
        Ok((self.log_priors[i] + self.log_joint[i] - log_j).exp())
    }

    fn check_sync(&self, history: &History) -> Result<()> {
        if self.history.is_prefix_of(history) {
            Ok(())
        } else {
            Err(Error::StateDesync {
                history: history.to_string(),
                state: self.history.to_string(),
            })
        }
    }

    /// Unnormalized log posterior after chaining through the cycles of
    /// `history` beyond the conditioning history.
    fn log_weights_at(&self, history: &History) -> Result<Vec<S>> {
        let mut logs = self.log_weights.clone();
        let steps = history.steps();
        let mut prefix = self.history.clone();
        for &(a, e) in &steps[self.history.len()..] {
            let query = prefix.with_action(a)?;
            for (log, env) in logs.iter_mut().zip(&self.members) {
                if *log > S::neg_infinity() {
                    *log = *log + env.conditional(&query)?[e.0].ln();
                }
            }
            prefix = query.complete(e)?;
        }
        Ok(logs)
    }

    /// `ξ(· | history)` for a history that extends the conditioning history
    /// and ends in a pending action.
    pub fn predict(&self, history: &History) -> Result<Vec<S>> {
        self.conditional(history)
    }

    /// `1 - Σ_e ξ(e | history)`.
    pub fn measure_loss(&self, history: &History) -> Result<MeasureLoss<S>> {
        let mass: S = self.predict(history)?.into_iter().sum();
        Ok(MeasureLoss::from_mass(mass))
    }

    /// `Σ_ν w_ν(history) L_ν(history)`; equals [`Mixture::measure_loss`].
    pub fn weighted_member_loss(&self, history: &History) -> Result<S> {
        pending_action(self, history)?;
        self.check_sync(history)?;
        let weights = normalize_log(&self.log_weights_at(history)?);
        let mut total = S::zero();
        for (w, env) in weights.iter().zip(&self.members) {
            if *w > S::zero() {
                let mass: S = env.conditional(history)?.into_iter().sum();
                total = total + *w * MeasureLoss::from_mass(mass).value();
            }
        }
        Ok(total)
    }

    /// Conditions on one more cycle.
    pub fn update(&self, action: ActionId, percept: PerceptId) -> Result<Self> {
        let query = self.history.with_action(action)?;
        pending_action(self, &query)?;
        let mut log_joint = self.log_joint.clone();
        let mut log_weights = self.log_weights.clone();
        for (k, env) in self.members.iter().enumerate() {
            let log_p = env.conditional(&query)?[percept.0].ln();
            log_joint[k] = log_joint[k] + log_p;
            log_weights[k] = log_weights[k] + log_p;
        }
        if log_weights.iter().all(|l| *l == S::neg_infinity()) {
            return Err(Error::ImpossibleObservation {
                action: action.0,
                percept: percept.0,
                history: self.history.to_string(),
            });
        }
        shift_to_max(&mut log_weights);
        Ok(Self {
            members: self.members.clone(),
            names: self.names.clone(),
            priors: self.priors.clone(),
            log_priors: self.log_priors.clone(),
            log_joint,
            log_weights,
            history: query.complete(percept)?,
        })
    }
}

/// A mixture queried at a history of zero mixture probability returns the
/// zero vector.
impl<S: Scalar> Environment<S> for Mixture<S> {
    fn alphabet(&self) -> &PerceptAlphabet<S> {
        self.members[0].alphabet()
    }

    fn action_count(&self) -> usize {
        self.members[0].action_count()
    }

    fn conditional(&self, history: &History) -> Result<Vec<S>> {
        pending_action(self, history)?;
        self.check_sync(history)?;
        let weights = normalize_log(&self.log_weights_at(history)?);
        let mut mixed = vec![S::zero(); self.alphabet().len()];
        for (w, env) in weights.iter().zip(&self.members) {
            if *w > S::zero() {
                for (m, p) in mixed.iter_mut().zip(env.conditional(history)?) {
                    *m = *m + *w * p;
                }
            }
        }
        Ok(mixed)
    }
}
