//! Brute-force oracles shared by the integration tests.
//!
//! Everything here walks explicit trees with work lists instead of calling
//! into the planner, so agreement with the library is a real cross-check.

#![allow(dead_code)]

use mortal_agents::envs::{make_random_semimeasure, RandomSemimeasure};
use mortal_agents::{ActionId, Environment, History, PerceptId, Policy};

/// Small random semimeasure whose shape is itself drawn from `seed`.
pub fn random_env(seed: u64, max_count: usize, depth: usize) -> RandomSemimeasure<f64> {
    let actions = 1 + (seed as usize * 7 + 3) % max_count;
    let percepts = 1 + (seed as usize * 13 + 5) % max_count;
    make_random_semimeasure(seed, actions, percepts, depth).unwrap()
}

/// Normalized discounted value of `policy` from the empty history, computed
/// by enumerating every reachable history of length `1..=horizon` and
/// weighting each reward by its absolute discount `gamma^k`.
pub fn unrolled_policy_value<E: Environment<f64> + ?Sized, P: Policy + ?Sized>(
    env: &E,
    policy: &P,
    gamma: f64,
    horizon: usize,
) -> f64 {
    let mut total = 0.0;
    let mut frontier = vec![(History::new(), 1.0f64)];
    for k in 1..=horizon {
        let weight = gamma.powi(k as i32);
        let mut next = Vec::new();
        for (h, prob) in frontier {
            let a = policy.decide(&h);
            let query = h.with_action(a).unwrap();
            let vector = env.conditional(&query).unwrap();
            for (e, p) in vector.into_iter().enumerate() {
                let joint = prob * p;
                if joint == 0.0 {
                    continue;
                }
                total += weight * joint * env.alphabet().reward(PerceptId(e));
                next.push((query.complete(PerceptId(e)).unwrap(), joint));
            }
        }
        frontier = next;
    }
    let normalizer: f64 = (1..=horizon).map(|k| gamma.powi(k as i32)).sum();
    total / normalizer
}

/// Best value of each first action from the empty history, by bottom-up
/// backward induction over an explicitly materialized tree.
///
/// Returns per-action values normalized by `Σ_{k=1}^{m} gamma^k`.
pub fn brute_force_action_values<E: Environment<f64> + ?Sized>(
    env: &E,
    gamma: f64,
    horizon: usize,
) -> Vec<f64> {
    let actions = env.action_count();
    let percepts = env.alphabet().len();
    // levels[k] holds decision nodes after k cycles, in lexicographic order of
    // (a_1, e_1, ..., a_k, e_k); reachability does not matter for the max.
    let mut levels: Vec<Vec<History>> = vec![vec![History::new()]];
    for k in 0..horizon - 1 {
        let mut next = Vec::new();
        for h in &levels[k] {
            for a in 0..actions {
                for e in 0..percepts {
                    next.push(h.append(ActionId(a), PerceptId(e)).unwrap());
                }
            }
        }
        levels.push(next);
    }
    // best[i] is the max over actions of the expected discounted return from
    // decision node i of the current level.
    let mut best = vec![0.0f64; levels[horizon - 1].len()];
    let mut first = Vec::new();
    for k in (0..horizon).rev() {
        let weight = gamma.powi(k as i32 + 1);
        let mut current = Vec::with_capacity(levels[k].len());
        for (i, h) in levels[k].iter().enumerate() {
            let mut q = Vec::with_capacity(actions);
            for a in 0..actions {
                let vector = env
                    .conditional(&h.with_action(ActionId(a)).unwrap())
                    .unwrap();
                let mut value = 0.0;
                for (e, p) in vector.into_iter().enumerate() {
                    let child = if k + 1 < horizon {
                        best[(i * actions + a) * percepts + e]
                    } else {
                        0.0
                    };
                    value += p * (weight * env.alphabet().reward(PerceptId(e)) + child);
                }
                q.push(value);
            }
            current.push(q.iter().copied().fold(f64::NEG_INFINITY, f64::max));
            if k == 0 {
                first = q;
            }
        }
        best = current;
    }
    let normalizer: f64 = (1..=horizon).map(|k| gamma.powi(k as i32)).sum();
    first.into_iter().map(|v| v / normalizer).collect()
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}
