//! Supervised loss, task rewards and the GRPO objective.

use alloc::vec::Vec;
use core::fmt;

use crate::scene::BBox;

pub const DEFAULT_BETA: f64 = 0.01;
/// Largest L1 distance, in pixels, at which a point still earns reward.
pub const POINT_L1_RADIUS: f64 = 50.0;

#[derive(Clone, Debug, PartialEq)]
pub enum RewardError {
    EmptyAnswerSpan,
    /// `k` must satisfy `1 <= k <= n`.
    AnswerStartOutOfRange { k: usize, n: usize },
    EmptyGroundTruth,
    EmptyBatch,
    NegativeBeta,
    TooFewSamples,
    /// All rewards equal; the advantages are zero.
    DegenerateGroup,
}

impl fmt::Display for RewardError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EmptyAnswerSpan => write!(f, "no answer tokens"),
            Self::AnswerStartOutOfRange { k, n } => write!(f, "answer start {k} outside 1..={n}"),
            Self::EmptyGroundTruth => write!(f, "no ground-truth points"),
            Self::EmptyBatch => write!(f, "empty batch"),
            Self::NegativeBeta => write!(f, "beta must be non-negative"),
            Self::TooFewSamples => write!(f, "a group needs at least two samples"),
            Self::DegenerateGroup => write!(f, "all rewards in the group are equal"),
        }
    }
}

/// Mean negative log-probability of the answer tokens `k..=n` (1-based `k`).
pub fn sft_loss(token_logprobs: &[f64], k: usize) -> Result<f64, RewardError> {
    let n = token_logprobs.len();
    if n == 0 {
        return Err(RewardError::EmptyAnswerSpan);
    }
    if k == 0 || k > n {
        return Err(RewardError::AnswerStartOutOfRange { k, n });
    }
    let span = &token_logprobs[k - 1..];
    Ok(-span.iter().sum::<f64>() / span.len() as f64)
}

/// Share of predictions within L1 distance 50 of their nearest ground truth.
pub fn point_reward(preds: &[(f64, f64)], gts: &[(f64, f64)]) -> Result<f64, RewardError> {
    point_reward_within(preds, gts, POINT_L1_RADIUS)
}

/// [`point_reward`] with a custom L1 radius.
pub fn point_reward_within(preds: &[(f64, f64)], gts: &[(f64, f64)], radius: f64) -> Result<f64, RewardError> {
    if gts.is_empty() {
        return Err(RewardError::EmptyGroundTruth);
    }
    if preds.is_empty() {
        return Ok(0.0);
    }
    let hits = preds
        .iter()
        .filter(|p| {
            gts.iter()
                .map(|g| libm::fabs(p.0 - g.0) + libm::fabs(p.1 - g.1))
                .fold(f64::INFINITY, f64::min)
                <= radius
        })
        .count();
    Ok(hits as f64 / preds.len() as f64)
}

pub fn choice_reward(pred: char, gt: char) -> f64 {
    if pred.eq_ignore_ascii_case(&gt) {
        1.0
    } else {
        0.0
    }
}

pub fn box_reward(pred: &BBox, gt: &BBox) -> f64 {
    crate::metrics::iou(pred, gt)
}

/// One sampled output: its reward and sequence log-probabilities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrpoSample {
    pub reward: f64,
    pub logp_policy: f64,
    pub logp_ref: f64,
}

fn check_batch(batch: &[GrpoSample], beta: f64) -> Result<(), RewardError> {
    if batch.is_empty() {
        return Err(RewardError::EmptyBatch);
    }
    if beta < 0.0 || beta.is_nan() {
        return Err(RewardError::NegativeBeta);
    }
    Ok(())
}

/// `-mean(R_i * r_i) + beta * mean(r_i)` with `r_i = logp_policy_i - logp_ref_i`.
pub fn grpo_loss(batch: &[GrpoSample], beta: f64) -> Result<f64, RewardError> {
    check_batch(batch, beta)?;
    let n = batch.len() as f64;
    let (mut pg, mut kl) = (0.0, 0.0);
    for s in batch {
        let r = s.logp_policy - s.logp_ref;
        pg += s.reward * r;
        kl += r;
    }
    Ok(-pg / n + beta * kl / n)
}

/// Gradient of [`grpo_loss`] with respect to each `logp_policy_i`.
pub fn grpo_loss_grad(batch: &[GrpoSample], beta: f64) -> Result<Vec<f64>, RewardError> {
    check_batch(batch, beta)?;
    let n = batch.len() as f64;
    Ok(batch.iter().map(|s| (beta - s.reward) / n).collect())
}

/// `(r - mean) / (std + 1e-8)` with the population standard deviation.
/// A group of identical rewards yields [`RewardError::DegenerateGroup`];
/// callers wanting zeros can use [`group_advantage_or_zero`].
pub fn group_advantage(rewards: &[f64]) -> Result<Vec<f64>, RewardError> {
    if rewards.len() < 2 {
        return Err(RewardError::TooFewSamples);
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    if rewards.iter().all(|&r| r == rewards[0]) {
        return Err(RewardError::DegenerateGroup);
    }
    let var = rewards.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    let std = libm::sqrt(var);
    Ok(rewards.iter().map(|r| (r - mean) / (std + 1e-8)).collect())
}

pub fn group_advantage_or_zero(rewards: &[f64]) -> Result<Vec<f64>, RewardError> {
    match group_advantage(rewards) {
        Err(RewardError::DegenerateGroup) => Ok(alloc::vec![0.0; rewards.len()]),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn sft_examples() {
        assert_eq!(sft_loss(&[-3.0, 0.0, 0.0], 2).unwrap(), 0.0);
        assert_eq!(sft_loss(&[-1.0, -1.0], 1).unwrap(), 1.0);
        assert_eq!(sft_loss(&[-0.5, -1.5, -2.0], 2).unwrap(), 1.75);
        assert_eq!(sft_loss(&[], 1), Err(RewardError::EmptyAnswerSpan));
        assert!(sft_loss(&[-1.0], 2).is_err());
    }

    #[test]
    fn point_examples() {
        assert_eq!(point_reward(&[(100.0, 100.0)], &[(120.0, 130.0)]).unwrap(), 1.0);
        assert_eq!(point_reward(&[(100.0, 100.0)], &[(126.0, 125.0)]).unwrap(), 0.0);
        assert_eq!(
            point_reward(&[(0.0, 0.0), (100.0, 100.0)], &[(0.0, 0.0), (300.0, 300.0)]).unwrap(),
            0.5
        );
        assert_eq!(point_reward(&[], &[(1.0, 1.0)]).unwrap(), 0.0);
        assert_eq!(point_reward(&[(1.0, 1.0)], &[]), Err(RewardError::EmptyGroundTruth));
    }

    #[test]
    fn choice_and_box() {
        assert_eq!(choice_reward('B', 'B'), 1.0);
        assert_eq!(choice_reward('A', 'B'), 0.0);
        assert_eq!(choice_reward('b', 'B'), 1.0);
        let (a, b) = (BBox::new(0, 0, 9, 9), BBox::new(5, 5, 14, 14));
        assert_eq!(box_reward(&a, &a), 1.0);
        assert!((box_reward(&a, &b) - 25.0 / 175.0).abs() < 1e-15);
    }

    #[test]
    fn grpo_examples() {
        let s = |reward, lp, lr| GrpoSample {
            reward,
            logp_policy: lp,
            logp_ref: lr,
        };
        assert_eq!(grpo_loss(&[s(1.0, -2.0, -2.0), s(0.0, -1.0, -1.0)], DEFAULT_BETA).unwrap(), 0.0);
        assert!((grpo_loss(&[s(1.0, -1.0, -1.2)], 0.01).unwrap() - (-0.198)).abs() < 1e-12);
        assert_eq!(grpo_loss(&[s(0.0, -1.0, -3.0)], 0.0).unwrap(), 0.0);
        assert_eq!(grpo_loss(&[], 0.01), Err(RewardError::EmptyBatch));
        assert_eq!(DEFAULT_BETA, 0.01);
    }

    #[test]
    fn advantage_examples() {
        let a = group_advantage(&[1.0, 0.0]).unwrap();
        assert!((a[0] - 1.0).abs() < 1e-6 && (a[1] + 1.0).abs() < 1e-6);
        assert_eq!(group_advantage(&[0.5, 0.5, 0.5]), Err(RewardError::DegenerateGroup));
        assert_eq!(group_advantage_or_zero(&[0.5, 0.5, 0.5]).unwrap(), vec![0.0; 3]);
        assert_eq!(group_advantage(&[1.0]), Err(RewardError::TooFewSamples));
    }
}
