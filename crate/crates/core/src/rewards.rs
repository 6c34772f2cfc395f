//! Verdict grammar and rule-based rewards.
//!
//! The judge emits sequences over a 4-symbol vocabulary. A well-formed
//! output matches
//!
//! ```text
//!   THINK* (VA | VB) EOS
//! ```
//!
//! with nothing after the EOS. Rewards are rule-checked against the gold
//! label:
//!
//! ```text
//!   r_judgment = 1   if parse(o) = gold, else 0
//!   r_format   = 0.5 if o matches the grammar, else -0.5
//! ```
//!
//! so the total reward is always one of {-0.5, 0.5, 1.5}: an unparseable
//! output can never match the gold label, which rules out 1.0.

use serde::{Deserialize, Serialize};

use crate::domain::Label;

/// Vocabulary symbol. Codes are stable across runs and releases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Token {
    Think = 0,
    VerdictA = 1,
    VerdictB = 2,
    Eos = 3,
}

/// Vocabulary size.
pub const VOCAB: usize = 4;

impl Token {
    pub const ALL: [Token; VOCAB] = [Token::Think, Token::VerdictA, Token::VerdictB, Token::Eos];

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<Token> {
        Token::ALL.get(code).copied()
    }
}

/// Parsed final judgment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    A,
    B,
    Unparseable,
}

impl Verdict {
    pub fn matches(self, gold: Label) -> bool {
        matches!(
            (self, gold),
            (Verdict::A, Label::A) | (Verdict::B, Label::B)
        )
    }
}

/// Parse the final judgment out of a token sequence.
///
/// Returns `A`/`B` only for sequences matching the grammar exactly;
/// everything else (no verdict, multiple verdicts, missing EOS, trailing
/// tokens) is `Unparseable`. Malformed input is never an error.
pub fn parse_verdict(tokens: &[Token]) -> Verdict {
    let mut rest = tokens;
    while let [Token::Think, tail @ ..] = rest {
        rest = tail;
    }
    match rest {
        [Token::VerdictA, Token::Eos] => Verdict::A,
        [Token::VerdictB, Token::Eos] => Verdict::B,
        _ => Verdict::Unparseable,
    }
}

/// +0.5 for a grammar-conforming sequence, -0.5 otherwise.
pub fn format_reward(tokens: &[Token]) -> f64 {
    if parse_verdict(tokens) == Verdict::Unparseable {
        -0.5
    } else {
        0.5
    }
}

/// 1 if the parsed verdict equals the gold label, 0 otherwise
/// (unparseable output scores 0).
pub fn judgment_reward(tokens: &[Token], gold: Label) -> f64 {
    if parse_verdict(tokens).matches(gold) {
        1.0
    } else {
        0.0
    }
}

/// Judgment reward plus format reward.
pub fn total_reward(tokens: &[Token], gold: Label) -> f64 {
    judgment_reward(tokens, gold) + format_reward(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Token::*;

    #[test]
    fn vocab_codes_are_stable() {
        assert_eq!(
            Token::ALL.map(Token::code),
            [0, 1, 2, 3],
            "token codes are a wire format; do not renumber"
        );
        for t in Token::ALL {
            assert_eq!(Token::from_code(t.code()), Some(t));
        }
        assert_eq!(Token::from_code(4), None);
    }

    #[test]
    fn parses_minimal_verdicts() {
        assert_eq!(parse_verdict(&[Think, VerdictA, Eos]), Verdict::A);
        assert_eq!(parse_verdict(&[VerdictB, Eos]), Verdict::B);
        assert_eq!(parse_verdict(&[VerdictA, Eos]), Verdict::A);
    }

    #[test]
    fn malformed_sequences_are_unparseable() {
        let bad: &[&[Token]] = &[
            &[],
            &[VerdictA, VerdictB, Eos],   // two verdicts
            &[Think, Think],              // no verdict, no EOS
            &[VerdictA],                  // missing EOS
            &[Eos],                       // verdict missing
            &[VerdictA, Eos, Think],      // token after EOS
            &[VerdictA, Eos, Eos],        // token after EOS
            &[Eos, VerdictA],             // verdict after EOS
            &[Think, Eos],                // EOS without verdict
            &[VerdictA, Think, Eos],      // THINK after verdict
        ];
        for seq in bad {
            assert_eq!(parse_verdict(seq), Verdict::Unparseable, "{seq:?}");
        }
    }

    #[test]
    fn format_reward_signs() {
        assert_eq!(format_reward(&[Think, Think, VerdictA, Eos]), 0.5);
        assert_eq!(format_reward(&[Think, Think, Think, Think]), -0.5);
        assert_eq!(format_reward(&[Eos]), -0.5);
    }

    #[test]
    fn judgment_reward_requires_gold_match() {
        assert_eq!(judgment_reward(&[Think, VerdictA, Eos], Label::A), 1.0);
        assert_eq!(judgment_reward(&[Think, VerdictA, Eos], Label::B), 0.0);
        assert_eq!(judgment_reward(&[VerdictA, VerdictB, Eos], Label::A), 0.0);
    }

    #[test]
    fn total_reward_levels() {
        assert_eq!(total_reward(&[VerdictB, Eos], Label::B), 1.5);
        assert_eq!(total_reward(&[VerdictB, Eos], Label::A), 0.5);
        assert_eq!(total_reward(&[Think, Think], Label::A), -0.5);
    }

    #[test]
    fn at_most_one_gold_matches() {
        // judgment_reward(o, A) + judgment_reward(o, B) <= 1 for any o.
        let seqs: &[&[Token]] = &[
            &[VerdictA, Eos],
            &[VerdictB, Eos],
            &[Think, Think, VerdictB, Eos],
            &[Eos],
            &[Think, VerdictA, VerdictB, Eos],
        ];
        for seq in seqs {
            let s = judgment_reward(seq, Label::A) + judgment_reward(seq, Label::B);
            assert!(s <= 1.0, "{seq:?} scored {s}");
        }
    }
}
