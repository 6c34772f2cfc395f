//! Group-relative advantage estimators.
//!
//! Three estimators over the rewards of a rollout group:
//!
//! ```text
//!   grpo:        A_i     = (R_i - mean(R)) / std(R)          one flat group
//!   global-only: A_(i,l) = (R_(i,l) - mean(all)) / std(all)  pooled over subgroups
//!   eis:         A_(i,l) = global term + within-subgroup term
//! ```
//!
//! All standard deviations are population (divide by N, not N-1); the
//! worked fixture values below only come out under that convention. When a
//! denominator falls below [`ZERO_VARIANCE_EPS`] that term contributes 0:
//! constant rewards carry no learning signal and must not be inflated by
//! an epsilon divisor.

use crate::error::{Error, Result};

/// Standardization denominators below this threshold are treated as zero
/// variance and produce a zero term.
pub const ZERO_VARIANCE_EPS: f64 = 1e-8;

/// Mean and population standard deviation of a reward list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardStats {
    pub mean: f64,
    pub std: f64,
}

/// Stats over a non-empty reward list.
pub fn reward_stats(rewards: &[f64]) -> RewardStats {
    debug_assert!(!rewards.is_empty());
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    RewardStats {
        mean,
        std: var.sqrt(),
    }
}

fn standardize(reward: f64, stats: RewardStats) -> f64 {
    if stats.std < ZERO_VARIANCE_EPS {
        0.0
    } else {
        (reward - stats.mean) / stats.std
    }
}

/// Within-group standardized advantages: `(R_i - mean) / std`.
pub fn grpo_advantages(rewards: &[f64]) -> Result<Vec<f64>> {
    if rewards.len() < 2 {
        return Err(Error::DegenerateGroup(format!(
            "need at least 2 rewards to standardize, got {}",
            rewards.len()
        )));
    }
    let stats = reward_stats(rewards);
    Ok(rewards.iter().map(|&r| standardize(r, stats)).collect())
}

/// Pooled standardization across all subgroups, ignoring membership:
/// every reward is standardized against the global mean and std.
pub fn global_only_advantages(subgroup_rewards: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    validate_subgroups(subgroup_rewards, 1)?;
    let pooled: Vec<f64> = subgroup_rewards.iter().flatten().copied().collect();
    if pooled.len() < 2 {
        return Err(Error::DegenerateGroup(format!(
            "need at least 2 rewards overall, got {}",
            pooled.len()
        )));
    }
    let global = reward_stats(&pooled);
    Ok(subgroup_rewards
        .iter()
        .map(|sg| sg.iter().map(|&r| standardize(r, global)).collect())
        .collect())
}

/// Joint advantage: pooled standardized term plus within-subgroup
/// standardized term, each with its own zero-variance rule.
///
/// With a single subgroup the two terms coincide, so the result is exactly
/// twice [`grpo_advantages`].
pub fn eis_advantages(subgroup_rewards: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    validate_subgroups(subgroup_rewards, 2)?;
    let pooled: Vec<f64> = subgroup_rewards.iter().flatten().copied().collect();
    let global = reward_stats(&pooled);
    Ok(subgroup_rewards
        .iter()
        .map(|sg| {
            let local = reward_stats(sg);
            sg.iter()
                .map(|&r| standardize(r, global) + standardize(r, local))
                .collect()
        })
        .collect())
}

fn validate_subgroups(subgroup_rewards: &[Vec<f64>], min_members: usize) -> Result<()> {
    if subgroup_rewards.is_empty() {
        return Err(Error::DegenerateGroup("no subgroups".to_string()));
    }
    for (ell, sg) in subgroup_rewards.iter().enumerate() {
        if sg.is_empty() {
            return Err(Error::DegenerateGroup(format!("subgroup {ell} is empty")));
        }
        if sg.len() < min_members {
            return Err(Error::DegenerateGroup(format!(
                "subgroup {ell} has {} members, need at least {min_members}",
                sg.len()
            )));
        }
    }
    Ok(())
}

/// The embedded two-subgroup reference fixture: a strong subgroup
/// (12 rewards of 1.5, 4 of 1.0) and a weak one (12 of 0.0, 4 of 1.0),
/// with expected advantages for all three estimators. Used by the
/// `advcheck` command and the acceptance suite.
pub mod fixture {
    /// Strong subgroup rewards: 12 x 1.5 then 4 x 1.0.
    pub fn strong_rewards() -> Vec<f64> {
        let mut v = vec![1.5; 12];
        v.extend(vec![1.0; 4]);
        v
    }

    /// Weak subgroup rewards: 12 x 0.0 then 4 x 1.0.
    pub fn weak_rewards() -> Vec<f64> {
        let mut v = vec![0.0; 12];
        v.extend(vec![1.0; 4]);
        v
    }

    /// One expected value of the fixture table.
    #[derive(Debug, Clone, Copy)]
    pub struct ExpectedRow {
        pub estimator: &'static str,
        pub subgroup: &'static str,
        pub reward: f64,
        pub advantage: f64,
        /// Extra context printed alongside the row, if any.
        pub note: Option<&'static str>,
    }

    /// Expected advantages to three decimal places (tolerance 1e-3).
    pub const EXPECTED: [ExpectedRow; 12] = [
        ExpectedRow { estimator: "grpo", subgroup: "strong", reward: 1.5, advantage: 0.577, note: None },
        ExpectedRow { estimator: "grpo", subgroup: "strong", reward: 1.0, advantage: -1.732, note: None },
        ExpectedRow { estimator: "grpo", subgroup: "weak", reward: 1.0, advantage: 1.732, note: None },
        ExpectedRow { estimator: "grpo", subgroup: "weak", reward: 0.0, advantage: -0.577, note: None },
        ExpectedRow { estimator: "global-only", subgroup: "strong", reward: 1.5, advantage: 1.044, note: None },
        ExpectedRow { estimator: "global-only", subgroup: "strong", reward: 1.0, advantage: 0.285, note: None },
        ExpectedRow {
            estimator: "global-only",
            subgroup: "weak",
            reward: 1.0,
            advantage: 0.285,
            note: Some("pooled standardization is subgroup-blind: both subgroups' reward-1.0 entries get the same value"),
        },
        ExpectedRow { estimator: "global-only", subgroup: "weak", reward: 0.0, advantage: -1.234, note: None },
        ExpectedRow { estimator: "eis", subgroup: "strong", reward: 1.5, advantage: 1.621, note: None },
        ExpectedRow { estimator: "eis", subgroup: "strong", reward: 1.0, advantage: -1.447, note: None },
        ExpectedRow { estimator: "eis", subgroup: "weak", reward: 1.0, advantage: 2.017, note: None },
        ExpectedRow { estimator: "eis", subgroup: "weak", reward: 0.0, advantage: -1.811, note: None },
    ];
}
