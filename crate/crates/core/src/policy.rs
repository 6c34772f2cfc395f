//! The toy tokenized judge policy.
//!
//! Architecture, fixed and differentiated by hand:
//!
//! ```text
//!   hid    = tanh(enc_w @ features + enc_b)            d_in -> h
//!   logits = head_w @ [hid ; onehot(prev)] + head_b    (h + 4) -> 4
//!   pi(. | instance, prefix) = softmax(logits)
//! ```
//!
//! The previous-token input is a one-hot over the 4-symbol vocabulary; the
//! first step uses the reserved all-zero vector in its place. The hidden
//! vector depends only on the instance features, so one encoder pass serves
//! every step of a rollout.
//!
//! Gradients are exact for this architecture (no autodiff framework), and
//! the per-state KL to a reference policy is the exact categorical KL over
//! the 4 symbols, not a sampled estimate.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::domain::{PresentedInstance, Rollout};
use crate::error::{Error, Result};
use crate::rewards::{self, Token, VOCAB};

/// Parameters of the toy judge policy.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub d_in: usize,
    pub hidden: usize,
    /// Maximum output length in tokens.
    pub l_max: usize,
    /// Encoder weights, row-major `hidden x d_in`.
    pub enc_w: Vec<f64>,
    pub enc_b: Vec<f64>,
    /// Head weights, row-major `VOCAB x (hidden + VOCAB)`.
    pub head_w: Vec<f64>,
    pub head_b: Vec<f64>,
}

/// Gradient with respect to `PolicyParams`, same shapes.
#[derive(Debug, Clone)]
pub struct ParamGrad {
    pub enc_w: Vec<f64>,
    pub enc_b: Vec<f64>,
    pub head_w: Vec<f64>,
    pub head_b: Vec<f64>,
}

impl PolicyParams {
    /// All-zero parameters (uniform token distribution at every state).
    pub fn zeros(d_in: usize, hidden: usize, l_max: usize) -> Self {
        PolicyParams {
            d_in,
            hidden,
            l_max,
            enc_w: vec![0.0; hidden * d_in],
            enc_b: vec![0.0; hidden],
            head_w: vec![0.0; VOCAB * (hidden + VOCAB)],
            head_b: vec![0.0; VOCAB],
        }
    }

    /// Random initialization: weights ~ N(0, 1/fan_in), biases zero.
    pub fn init<R: Rng>(d_in: usize, hidden: usize, l_max: usize, rng: &mut R) -> Self {
        let mut p = Self::zeros(d_in, hidden, l_max);
        let enc = Normal::new(0.0, 1.0 / (d_in as f64).sqrt()).expect("valid std");
        for w in &mut p.enc_w {
            *w = enc.sample(rng);
        }
        let head = Normal::new(0.0, 1.0 / ((hidden + VOCAB) as f64).sqrt()).expect("valid std");
        for w in &mut p.head_w {
            *w = head.sample(rng);
        }
        p
    }

    pub fn param_count(&self) -> usize {
        self.enc_w.len() + self.enc_b.len() + self.head_w.len() + self.head_b.len()
    }

    /// Flatten in the fixed order `enc_w, enc_b, head_w, head_b`
    /// (also the checkpoint array order).
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        out.extend_from_slice(&self.enc_w);
        out.extend_from_slice(&self.enc_b);
        out.extend_from_slice(&self.head_w);
        out.extend_from_slice(&self.head_b);
        out
    }

    /// Inverse of [`to_flat`](Self::to_flat) for the same dimensions.
    pub fn from_flat(d_in: usize, hidden: usize, l_max: usize, flat: &[f64]) -> Result<Self> {
        let mut p = Self::zeros(d_in, hidden, l_max);
        if flat.len() != p.param_count() {
            return Err(Error::Contract(format!(
                "flat parameter vector has {} entries, expected {}",
                flat.len(),
                p.param_count()
            )));
        }
        let (a, rest) = flat.split_at(p.enc_w.len());
        let (b, rest) = rest.split_at(p.enc_b.len());
        let (c, d) = rest.split_at(p.head_w.len());
        p.enc_w.copy_from_slice(a);
        p.enc_b.copy_from_slice(b);
        p.head_w.copy_from_slice(c);
        p.head_b.copy_from_slice(d);
        Ok(p)
    }

    /// Encoder forward pass: `tanh(enc_w @ features + enc_b)`.
    pub fn encode(&self, features: &[f64]) -> Result<Vec<f64>> {
        if features.len() != self.d_in {
            return Err(Error::Contract(format!(
                "feature vector has {} entries, policy expects d_in = {}",
                features.len(),
                self.d_in
            )));
        }
        let mut hid = Vec::with_capacity(self.hidden);
        for i in 0..self.hidden {
            let row = &self.enc_w[i * self.d_in..(i + 1) * self.d_in];
            let mut a = self.enc_b[i];
            for (w, f) in row.iter().zip(features) {
                a += w * f;
            }
            hid.push(a.tanh());
        }
        Ok(hid)
    }

    /// Log-probability vector at the state `(hid, prev)`.
    ///
    /// `prev = None` is the reserved begin-of-sequence input (all-zero
    /// one-hot slot).
    pub fn step_logprobs(&self, hid: &[f64], prev: Option<Token>) -> [f64; VOCAB] {
        let width = self.hidden + VOCAB;
        let mut logits = [0.0f64; VOCAB];
        for (v, logit) in logits.iter_mut().enumerate() {
            let row = &self.head_w[v * width..(v + 1) * width];
            let mut z = self.head_b[v];
            for (w, h) in row.iter().zip(hid) {
                z += w * h;
            }
            if let Some(t) = prev {
                z += row[self.hidden + t.code()];
            }
            *logit = z;
        }
        log_softmax(logits)
    }

    /// Token distribution (probabilities) after `prefix`.
    pub fn token_distribution(
        &self,
        instance: &PresentedInstance,
        prefix: &[Token],
    ) -> Result<[f64; VOCAB]> {
        if prefix.len() >= self.l_max {
            return Err(Error::Contract(format!(
                "prefix of length {} leaves no room to generate (l_max = {})",
                prefix.len(),
                self.l_max
            )));
        }
        let hid = self.encode(&instance.features)?;
        let logp = self.step_logprobs(&hid, prefix.last().copied());
        Ok(logp.map(f64::exp))
    }

    /// Per-step log-probability vectors along a token sequence: entry `t`
    /// is the full distribution at the state before `tokens[t]`.
    pub fn step_logprobs_along(
        &self,
        instance: &PresentedInstance,
        tokens: &[Token],
    ) -> Result<Vec<[f64; VOCAB]>> {
        if tokens.is_empty() || tokens.len() > self.l_max {
            return Err(Error::Contract(format!(
                "token sequence length {} outside 1..={}",
                tokens.len(),
                self.l_max
            )));
        }
        let hid = self.encode(&instance.features)?;
        let mut prev = None;
        let mut out = Vec::with_capacity(tokens.len());
        for &t in tokens {
            out.push(self.step_logprobs(&hid, prev));
            prev = Some(t);
        }
        Ok(out)
    }

    /// Log-probability of each realized token in the sequence.
    pub fn sequence_logprobs(
        &self,
        instance: &PresentedInstance,
        tokens: &[Token],
    ) -> Result<Vec<f64>> {
        let steps = self.step_logprobs_along(instance, tokens)?;
        Ok(steps
            .iter()
            .zip(tokens)
            .map(|(lp, t)| lp[t.code()])
            .collect())
    }

    /// Gradient of
    /// `sum_t [ coeffs[t] * log pi(tokens[t] | .) + kl_coeffs[t] * KL_t(pi || pi_ref) ]`
    /// with respect to these parameters. The reference policy is a constant.
    pub fn weighted_objective_grad(
        &self,
        instance: &PresentedInstance,
        tokens: &[Token],
        coeffs: &[f64],
        kl_coeffs: &[f64],
        reference: &PolicyParams,
    ) -> Result<ParamGrad> {
        if coeffs.len() != tokens.len() || kl_coeffs.len() != tokens.len() {
            return Err(Error::Contract(format!(
                "coefficient lengths {}/{} do not match {} tokens",
                coeffs.len(),
                kl_coeffs.len(),
                tokens.len()
            )));
        }
        let hid = self.encode(&instance.features)?;
        let ref_hid = reference.encode(&instance.features)?;
        let mut grad = ParamGrad::zeros_like(self);
        let mut g_hid = vec![0.0; self.hidden];
        let width = self.hidden + VOCAB;

        let mut prev = None;
        for (t, &tok) in tokens.iter().enumerate() {
            let logp = self.step_logprobs(&hid, prev);
            let p = logp.map(f64::exp);

            // d/dz of coeffs[t] * logp[tok]: c * (onehot(tok) - p)
            let mut g_z = [0.0f64; VOCAB];
            let c = coeffs[t];
            if c != 0.0 {
                for v in 0..VOCAB {
                    g_z[v] = -c * p[v];
                }
                g_z[tok.code()] += c;
            }

            // d/dz of kl_coeffs[t] * KL(p || q): k * p[j] * ((logp - logq)[j] - KL)
            let k = kl_coeffs[t];
            if k != 0.0 {
                let logq = reference.step_logprobs(&ref_hid, prev);
                let kl = categorical_kl(&logp, &logq);
                for v in 0..VOCAB {
                    g_z[v] += k * p[v] * ((logp[v] - logq[v]) - kl);
                }
            }

            // Head backprop and accumulation of the hidden-state gradient.
            for v in 0..VOCAB {
                let g = g_z[v];
                if g == 0.0 {
                    continue;
                }
                let row = v * width;
                for (j, h) in hid.iter().enumerate() {
                    grad.head_w[row + j] += g * h;
                }
                if let Some(pt) = prev {
                    grad.head_w[row + self.hidden + pt.code()] += g;
                }
                grad.head_b[v] += g;
                let wrow = &self.head_w[row..row + self.hidden];
                for (gh, w) in g_hid.iter_mut().zip(wrow) {
                    *gh += g * w;
                }
            }
            prev = Some(tok);
        }

        // Encoder backprop through tanh, once for all steps.
        for i in 0..self.hidden {
            let ga = g_hid[i] * (1.0 - hid[i] * hid[i]);
            if ga == 0.0 {
                continue;
            }
            let row = i * self.d_in;
            for (j, f) in instance.features.iter().enumerate() {
                grad.enc_w[row + j] += ga * f;
            }
            grad.enc_b[i] += ga;
        }
        Ok(grad)
    }
}

impl ParamGrad {
    pub fn zeros_like(params: &PolicyParams) -> Self {
        ParamGrad {
            enc_w: vec![0.0; params.enc_w.len()],
            enc_b: vec![0.0; params.enc_b.len()],
            head_w: vec![0.0; params.head_w.len()],
            head_b: vec![0.0; params.head_b.len()],
        }
    }

    pub fn add_assign(&mut self, other: &ParamGrad) {
        for (a, b) in self.enc_w.iter_mut().zip(&other.enc_w) {
            *a += b;
        }
        for (a, b) in self.enc_b.iter_mut().zip(&other.enc_b) {
            *a += b;
        }
        for (a, b) in self.head_w.iter_mut().zip(&other.head_w) {
            *a += b;
        }
        for (a, b) in self.head_b.iter_mut().zip(&other.head_b) {
            *a += b;
        }
    }

    pub fn scale(&mut self, c: f64) {
        for v in self
            .enc_w
            .iter_mut()
            .chain(&mut self.enc_b)
            .chain(&mut self.head_w)
            .chain(&mut self.head_b)
        {
            *v *= c;
        }
    }

    /// Flatten in the same fixed order as [`PolicyParams::to_flat`].
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out =
            Vec::with_capacity(self.enc_w.len() + self.enc_b.len() + self.head_w.len() + self.head_b.len());
        out.extend_from_slice(&self.enc_w);
        out.extend_from_slice(&self.enc_b);
        out.extend_from_slice(&self.head_w);
        out.extend_from_slice(&self.head_b);
        out
    }
}

/// Numerically stable log-softmax.
fn log_softmax(logits: [f64; VOCAB]) -> [f64; VOCAB] {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|z| (z - m).exp()).sum::<f64>().ln();
    logits.map(|z| z - lse)
}

/// Exact KL divergence between two categorical distributions given in log
/// space. Non-negative; zero iff the distributions coincide.
pub fn categorical_kl(logp: &[f64; VOCAB], logq: &[f64; VOCAB]) -> f64 {
    let mut kl = 0.0;
    for v in 0..VOCAB {
        kl += logp[v].exp() * (logp[v] - logq[v]);
    }
    kl.max(0.0)
}

/// Sample one rollout autoregressively at temperature 1.0.
///
/// Generation stops at EOS or after `l_max` tokens. The stored
/// `old_logprobs` come from the sampling distribution itself, so re-scoring
/// the tokens under the same parameters reproduces them bitwise. Rewards
/// are rule-checked against the instance's gold label.
pub fn sample_rollout<R: Rng>(
    params: &PolicyParams,
    instance: &Arc<PresentedInstance>,
    rng: &mut R,
) -> Result<Rollout> {
    let hid = params.encode(&instance.features)?;
    let mut tokens = Vec::new();
    let mut old_logprobs = Vec::new();
    let mut prev = None;
    for _ in 0..params.l_max {
        let logp = params.step_logprobs(&hid, prev);
        let tok = sample_categorical(&logp, rng);
        tokens.push(tok);
        old_logprobs.push(logp[tok.code()]);
        if tok == Token::Eos {
            break;
        }
        prev = Some(tok);
    }
    let r_judgment = rewards::judgment_reward(&tokens, instance.gold);
    let r_format = rewards::format_reward(&tokens);
    Ok(Rollout {
        instance: Arc::clone(instance),
        tokens,
        old_logprobs,
        r_judgment,
        r_format,
        reward: r_judgment + r_format,
    })
}

/// Greedy (argmax) decoding; deterministic, ties broken by lowest code.
pub fn greedy_decode(params: &PolicyParams, instance: &PresentedInstance) -> Result<Vec<Token>> {
    let hid = params.encode(&instance.features)?;
    let mut tokens = Vec::new();
    let mut prev = None;
    for _ in 0..params.l_max {
        let logp = params.step_logprobs(&hid, prev);
        let mut best = 0;
        for v in 1..VOCAB {
            if logp[v] > logp[best] {
                best = v;
            }
        }
        let tok = Token::from_code(best).expect("code in range");
        tokens.push(tok);
        if tok == Token::Eos {
            break;
        }
        prev = Some(tok);
    }
    Ok(tokens)
}

fn sample_categorical<R: Rng>(logp: &[f64; VOCAB], rng: &mut R) -> Token {
    let u: f64 = rng.gen::<f64>();
    let mut acc = 0.0;
    for v in 0..VOCAB {
        acc += logp[v].exp();
        if u < acc {
            return Token::from_code(v).expect("code in range");
        }
    }
    // Rounding left u at or above the total mass; take the last symbol.
    Token::Eos
}

/// On-disk policy snapshot: a JSON header (dimensions, vocabulary codes,
/// originating seed) followed by the parameter arrays as flat lists of
/// doubles in the fixed order `enc_w, enc_b, head_w, head_b`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolicyCheckpoint {
    pub format: String,
    pub d_in: usize,
    pub hidden: usize,
    pub l_max: usize,
    pub vocab: Vec<(String, u8)>,
    pub seed: u64,
    pub enc_w: Vec<f64>,
    pub enc_b: Vec<f64>,
    pub head_w: Vec<f64>,
    pub head_b: Vec<f64>,
}

pub const CHECKPOINT_FORMAT: &str = "judge-rl-policy-v1";

impl PolicyCheckpoint {
    pub fn from_params(params: &PolicyParams, seed: u64) -> Self {
        PolicyCheckpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            d_in: params.d_in,
            hidden: params.hidden,
            l_max: params.l_max,
            vocab: Token::ALL
                .iter()
                .map(|t| (format!("{t:?}"), t.code() as u8))
                .collect(),
            seed,
            enc_w: params.enc_w.clone(),
            enc_b: params.enc_b.clone(),
            head_w: params.head_w.clone(),
            head_b: params.head_b.clone(),
        }
    }

    pub fn into_params(self) -> Result<PolicyParams> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(Error::Config(format!(
                "unknown checkpoint format {:?}",
                self.format
            )));
        }
        let p = PolicyParams {
            d_in: self.d_in,
            hidden: self.hidden,
            l_max: self.l_max,
            enc_w: self.enc_w,
            enc_b: self.enc_b,
            head_w: self.head_w,
            head_b: self.head_b,
        };
        let expect = PolicyParams::zeros(p.d_in, p.hidden, p.l_max);
        if p.enc_w.len() != expect.enc_w.len()
            || p.enc_b.len() != expect.enc_b.len()
            || p.head_w.len() != expect.head_w.len()
            || p.head_b.len() != expect.head_b.len()
        {
            return Err(Error::Config(
                "checkpoint array lengths do not match header dimensions".to_string(),
            ));
        }
        Ok(p)
    }
}
