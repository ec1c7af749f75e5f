//! Mortality in universal reinforcement-learning agents.
//!
//! Environments are chronological semimeasures: conditional percept
//! distributions whose mass may fall short of one, the shortfall being the
//! probability that the agent dies. The crate provides measure loss,
//! Solomonoff normalization, the equivalent death-state construction, finite
//! Bayesian mixtures, an expectimax planner and a scenario runner with a CLI.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below fix it to `f64`.

pub mod envs;
pub mod error;
pub mod experiments;
pub mod mixture;
pub mod planner;
pub mod primitives;
pub mod scalar;
mod seeding;
pub mod semimeasure;

pub use error::{Error, Result};
pub use mixture::{Mixture, PriorMode};
pub use planner::{
    aixi_like_action, optimal_action, shift_rewards, value_of_policy, ConstantPolicy, Policy,
    RandomPolicy, ValueResult,
};
pub use primitives::{ActionId, DiscountSchedule, History, Percept, PerceptAlphabet, PerceptId};
pub use scalar::Scalar;
pub use semimeasure::{
    augment_death_state, joint_probability, measure_loss, normalize, validate, DynEnvironment,
    Environment, MeasureLoss, ValidationReport,
};

pub type Mixture64 = Mixture<f64>;
pub type DiscountSchedule64 = DiscountSchedule<f64>;
pub type PerceptAlphabet64 = PerceptAlphabet<f64>;
pub type DynEnvironment64 = DynEnvironment<f64>;
pub type TableEnv64 = envs::TableEnv<f64>;
pub type ValueResult64 = ValueResult<f64>;

pub type Mixture32 = Mixture<f32>;
pub type DiscountSchedule32 = DiscountSchedule<f32>;
pub type DynEnvironment32 = DynEnvironment<f32>;
