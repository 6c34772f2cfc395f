//! Domain types for pairwise judgment samples, order transforms, rollouts,
//! and rollout groups.
//!
//! A `PairwiseSample` stores the two candidate responses in canonical form:
//! `y1` is always the substantively better response. Presentation order is
//! a *transform* of the sample — transform 1 shows the better response in
//! slot A, transform 2 swaps the slots — and the gold verdict label remaps
//! with the transform so that it always names the slot holding the better
//! response.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rewards::Token;

/// Verdict label over the two presentation slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    A,
    B,
}

impl Label {
    pub fn flip(self) -> Label {
        match self {
            Label::A => Label::B,
            Label::B => Label::A,
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Label::A => write!(f, "A"),
            Label::B => write!(f, "B"),
        }
    }
}

/// One pairwise judgment problem.
///
/// Feature dimensions are fixed per dataset: `x` has length `d_q`, each
/// response vector has length `d_r`. `y1` is the better response, always;
/// ties do not occur in training data. `len1`/`len2` are surrogate token
/// lengths carried along for length-matched pair selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseSample {
    pub id: String,
    pub x: Vec<f64>,
    pub y1: Vec<f64>,
    pub y2: Vec<f64>,
    pub len1: u32,
    pub len2: u32,
    pub source: String,
}

/// A sample under a specific order transform.
///
/// `features` is the exact concatenation `x ++ slot_a ++ slot_b`, so its
/// length is `d_q + 2 * d_r`. `gold` names the slot holding the better
/// response under this transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresentedInstance {
    pub sample_id: String,
    /// Transform index, 1-based. 1 = better response first, 2 = swapped.
    pub ell: usize,
    pub features: Vec<f64>,
    pub gold: Label,
}

/// Number of order transforms for the pairwise task.
pub const PAIRWISE_TRANSFORMS: usize = 2;

/// Present `sample` under transform `ell`.
///
/// Transform 1 yields `(A = y1, B = y2)` with gold `A`; transform 2 yields
/// `(A = y2, B = y1)` with gold `B`. Any other `ell` is rejected.
pub fn apply_transform(sample: &PairwiseSample, ell: usize) -> Result<PresentedInstance> {
    let (slot_a, slot_b, gold) = match ell {
        1 => (&sample.y1, &sample.y2, Label::A),
        2 => (&sample.y2, &sample.y1, Label::B),
        _ => {
            return Err(Error::InvalidTransform(format!(
                "pairwise transform index must be 1 or 2, got {ell}"
            )))
        }
    };
    let mut features = Vec::with_capacity(sample.x.len() + slot_a.len() + slot_b.len());
    features.extend_from_slice(&sample.x);
    features.extend_from_slice(slot_a);
    features.extend_from_slice(slot_b);
    Ok(PresentedInstance {
        sample_id: sample.id.clone(),
        ell,
        features,
        gold,
    })
}

/// Both orderings of a sample, in transform order `[1, 2]`.
pub fn make_orderings(sample: &PairwiseSample) -> [PresentedInstance; 2] {
    [
        apply_transform(sample, 1).expect("transform 1 is always valid"),
        apply_transform(sample, 2).expect("transform 2 is always valid"),
    ]
}

/// Reconstruct the canonical sample from a presented record.
///
/// The presented features are an exact concatenation, so given the dataset
/// dimensions this is lossless for `x`/`y1`/`y2`; surrogate lengths and the
/// source tag are not carried by presented records and are reset.
pub fn recover_sample(inst: &PresentedInstance, d_q: usize, d_r: usize) -> Result<PairwiseSample> {
    if inst.features.len() != d_q + 2 * d_r {
        return Err(Error::Contract(format!(
            "presented record {} has {} features, expected {}",
            inst.sample_id,
            inst.features.len(),
            d_q + 2 * d_r
        )));
    }
    let x = inst.features[..d_q].to_vec();
    let slot_a = inst.features[d_q..d_q + d_r].to_vec();
    let slot_b = inst.features[d_q + d_r..].to_vec();
    let (y1, y2) = match inst.gold {
        Label::A => (slot_a, slot_b),
        Label::B => (slot_b, slot_a),
    };
    Ok(PairwiseSample {
        id: inst.sample_id.clone(),
        x,
        y1,
        y2,
        len1: 1,
        len2: 1,
        source: "recovered".to_string(),
    })
}

/// A toy multiple-choice sample, for demonstrating transform generality
/// beyond the two-slot pairwise case.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiChoiceSample {
    pub id: String,
    /// One feature vector per option slot.
    pub options: Vec<Vec<f64>>,
    /// Index of the substantively correct option.
    pub correct: usize,
}

/// A multiple-choice sample with its option slots permuted and the gold
/// index remapped to follow the correct option's new slot.
#[derive(Debug, Clone, PartialEq)]
pub struct PresentedChoices {
    pub sample_id: String,
    pub options: Vec<Vec<f64>>,
    pub gold: usize,
}

/// Permute the option slots of a multiple-choice sample.
///
/// `perm` maps new slots to old: `options[i] = sample.options[perm[i]]`.
/// The gold index moves with the correct option's contents.
pub fn permute_choices(sample: &MultiChoiceSample, perm: &[usize]) -> Result<PresentedChoices> {
    let n = sample.options.len();
    if perm.len() != n {
        return Err(Error::InvalidTransform(format!(
            "permutation has {} entries for {} options",
            perm.len(),
            n
        )));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::InvalidTransform(format!(
                "not a bijection over {n} option slots: {perm:?}"
            )));
        }
        seen[p] = true;
    }
    if sample.correct >= n {
        return Err(Error::Contract(format!(
            "correct index {} out of range for {} options",
            sample.correct, n
        )));
    }
    let options: Vec<Vec<f64>> = perm.iter().map(|&p| sample.options[p].clone()).collect();
    let gold = perm
        .iter()
        .position(|&p| p == sample.correct)
        .expect("bijection covers every old slot");
    Ok(PresentedChoices {
        sample_id: sample.id.clone(),
        options,
        gold,
    })
}

/// One sampled judge output for a presented instance.
///
/// `old_logprobs` are the per-token log-probabilities under the behavior
/// policy that sampled the rollout; `reward` is always the exact sum of
/// the two reward components.
#[derive(Debug, Clone)]
pub struct Rollout {
    pub instance: Arc<PresentedInstance>,
    pub tokens: Vec<Token>,
    pub old_logprobs: Vec<f64>,
    pub r_judgment: f64,
    pub r_format: f64,
    pub reward: f64,
}

/// All rollouts collected for one question, partitioned into per-transform
/// subgroups, plus per-rollout advantages once an estimator has run.
///
/// Invariants: every rollout in subgroup `ell` references the same
/// `PresentedInstance` with that transform index, and subgroup sizes are
/// equal (G divisible by L).
#[derive(Debug, Clone)]
pub struct GroupBatch {
    pub sample_id: String,
    pub subgroups: Vec<Vec<Rollout>>,
    /// Parallel to `subgroups`; empty until an advantage estimator fills it.
    pub advantages: Vec<Vec<f64>>,
}

impl GroupBatch {
    pub fn new(sample_id: String, subgroups: Vec<Vec<Rollout>>) -> Self {
        GroupBatch {
            sample_id,
            subgroups,
            advantages: Vec::new(),
        }
    }

    /// Total rollout count G across all subgroups.
    pub fn total_rollouts(&self) -> usize {
        self.subgroups.iter().map(Vec::len).sum()
    }

    /// Per-subgroup reward lists, in subgroup order.
    pub fn subgroup_rewards(&self) -> Vec<Vec<f64>> {
        self.subgroups
            .iter()
            .map(|sg| sg.iter().map(|r| r.reward).collect())
            .collect()
    }

    pub fn has_advantages(&self) -> bool {
        self.advantages.len() == self.subgroups.len()
            && self
                .advantages
                .iter()
                .zip(&self.subgroups)
                .all(|(a, s)| a.len() == s.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PairwiseSample {
        PairwiseSample {
            id: "s0".into(),
            x: vec![0.1, 0.2],
            y1: vec![1.0, 2.0, 3.0],
            y2: vec![4.0, 5.0, 6.0],
            len1: 10,
            len2: 12,
            source: "test".into(),
        }
    }

    #[test]
    fn transform_one_is_better_first() {
        let inst = apply_transform(&sample(), 1).unwrap();
        assert_eq!(inst.gold, Label::A);
        assert_eq!(inst.features, vec![0.1, 0.2, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn transform_two_swaps_slots_and_gold() {
        let inst = apply_transform(&sample(), 2).unwrap();
        assert_eq!(inst.gold, Label::B);
        assert_eq!(inst.features, vec![0.1, 0.2, 4.0, 5.0, 6.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn transform_rejects_other_indices() {
        for ell in [0, 3, 17] {
            assert!(matches!(
                apply_transform(&sample(), ell),
                Err(Error::InvalidTransform(_))
            ));
        }
    }

    #[test]
    fn swap_is_an_involution() {
        // Swapping the slots of the already-swapped presentation must
        // reproduce the transform-1 layout exactly.
        let s = sample();
        let once = apply_transform(&s, 2).unwrap();
        let recovered = recover_sample(&once, 2, 3).unwrap();
        let twice = apply_transform(&recovered, 2).unwrap();
        let direct = apply_transform(&s, 1).unwrap();
        assert_eq!(twice.features, direct.features);
        // gold still names the slot holding y1's features in both layouts
        assert_eq!(twice.gold, Label::B);
        assert_eq!(recover_sample(&twice, 2, 3).unwrap().y1, s.y1);
    }

    #[test]
    fn orderings_cover_both_golds() {
        let [a, b] = make_orderings(&sample());
        assert_eq!((a.ell, a.gold), (1, Label::A));
        assert_eq!((b.ell, b.gold), (2, Label::B));
    }

    #[test]
    fn identical_responses_still_get_distinct_golds() {
        let mut s = sample();
        s.y2 = s.y1.clone();
        let [a, b] = make_orderings(&s);
        assert_eq!(a.features, b.features);
        assert_ne!(a.gold, b.gold);
    }

    #[test]
    fn recover_sample_roundtrips() {
        let s = sample();
        for ell in 1..=2 {
            let inst = apply_transform(&s, ell).unwrap();
            let r = recover_sample(&inst, 2, 3).unwrap();
            assert_eq!(r.x, s.x);
            assert_eq!(r.y1, s.y1);
            assert_eq!(r.y2, s.y2);
        }
    }

    fn mc_sample() -> MultiChoiceSample {
        // Four options; index 2 holds the correct contents.
        MultiChoiceSample {
            id: "mc0".into(),
            options: vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]],
            correct: 2,
        }
    }

    #[test]
    fn identity_permutation_keeps_gold() {
        let out = permute_choices(&mc_sample(), &[0, 1, 2, 3]).unwrap();
        assert_eq!(out.gold, 2);
        assert_eq!(out.options, mc_sample().options);
    }

    #[test]
    fn gold_follows_correct_option() {
        // New slot 0 takes old slot 2 (the correct one), mirroring the
        // [Cat,Dog,Bird,Pig] -> [Bird,Pig,Dog,Cat] relabeling.
        let out = permute_choices(&mc_sample(), &[2, 3, 1, 0]).unwrap();
        assert_eq!(out.gold, 0);
        assert_eq!(out.options[0], vec![3.0]);
    }

    #[test]
    fn non_bijective_perm_rejected() {
        assert!(matches!(
            permute_choices(&mc_sample(), &[0, 0, 1, 2]),
            Err(Error::InvalidTransform(_))
        ));
        assert!(matches!(
            permute_choices(&mc_sample(), &[0, 1, 2]),
            Err(Error::InvalidTransform(_))
        ));
        assert!(matches!(
            permute_choices(&mc_sample(), &[0, 1, 2, 9]),
            Err(Error::InvalidTransform(_))
        ));
    }

    #[test]
    fn gold_slot_always_holds_correct_contents() {
        let s = mc_sample();
        let perms: [&[usize]; 4] = [&[0, 1, 2, 3], &[3, 2, 1, 0], &[1, 2, 3, 0], &[2, 0, 3, 1]];
        for perm in perms {
            let out = permute_choices(&s, perm).unwrap();
            assert_eq!(out.options[out.gold], s.options[s.correct]);
        }
    }
}
