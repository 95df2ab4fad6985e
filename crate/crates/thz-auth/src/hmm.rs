//! Two-state hidden Markov model over {no impersonation, impersonation}
//! and Viterbi maximum-likelihood sequence estimation.
//!
//! The per-slot hypothesis test turns each slot into a binary observation
//! x[k]; the true impersonation state s[k] stays hidden. The emission
//! matrix R captures the detector's error rates,
//!
//!   R = [[1 - Pfa, Pmd], [Pfa, 1 - Pmd]],  r[i][j] = P(x = i | s = j),
//!
//! with state 0 = no impersonation. The transition matrix P (row
//! stochastic, p[i][j] = P(next = j | current = i)) models how the
//! hidden state evolves; Viterbi then recovers the most likely state
//! sequence from a block of observations, which at low SNR is more
//! accurate than trusting each slot's test output in isolation.
//!
//! All path scores are accumulated in log space, so blocks of a million
//! observations decode without underflow. Score ties prefer state 0.

use crate::error::{Error, Result};

/// State index for "no impersonation".
pub const STATE_CLEAR: u8 = 0;
/// State index for "impersonation".
pub const STATE_IMPERSONATION: u8 = 1;

/// Two-state hidden Markov model. Construction validates that `transition`
/// is row stochastic, `emission` is column stochastic and `initial` is a
/// distribution, all to 1e-9.
#[derive(Debug, Clone)]
pub struct Hmm {
    transition: [[f64; 2]; 2],
    emission: [[f64; 2]; 2],
    initial: [f64; 2],
}

impl Hmm {
    pub fn new(
        transition: [[f64; 2]; 2],
        emission: [[f64; 2]; 2],
        initial: [f64; 2],
    ) -> Result<Self> {
        for row in &transition {
            check_distribution(&[row[0], row[1]], "transition row")?;
        }
        for column in [
            [emission[0][0], emission[1][0]],
            [emission[0][1], emission[1][1]],
        ] {
            check_distribution(&column, "emission column")?;
        }
        check_distribution(&initial, "initial distribution")?;
        Ok(Self {
            transition,
            emission,
            initial,
        })
    }

    /// Memoryless equal-probability transitions (every entry 0.5).
    pub fn uniform_transitions() -> [[f64; 2]; 2] {
        [[0.5, 0.5], [0.5, 0.5]]
    }

    /// Deterministic start in the clear state, x[0] = [1, 0].
    pub fn start_clear() -> [f64; 2] {
        [1.0, 0.0]
    }

    pub fn transition(&self) -> &[[f64; 2]; 2] {
        &self.transition
    }

    pub fn emission(&self) -> &[[f64; 2]; 2] {
        &self.emission
    }

    pub fn initial(&self) -> &[f64; 2] {
        &self.initial
    }
}

fn check_distribution(probs: &[f64], what: &str) -> Result<()> {
    if probs
        .iter()
        .any(|&p| !(0.0..=1.0).contains(&p) || !p.is_finite())
    {
        return Err(Error::InvalidParameter(format!(
            "{what} entries must lie in [0, 1], got {probs:?}"
        )));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "{what} must sum to 1, got {total}"
        )));
    }
    Ok(())
}

/// Emission matrix of a detector with the given error rates:
/// columns are the true states, rows the observed test outputs.
pub fn emission_from_errors(pfa: f64, pmd: f64) -> Result<[[f64; 2]; 2]> {
    for (name, p) in [("pfa", pfa), ("pmd", pmd)] {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "{name} must lie in (0, 1), got {p}"
            )));
        }
    }
    Ok([[1.0 - pfa, pmd], [pfa, 1.0 - pmd]])
}

/// k-step state distribution: the row vector `x0` propagated through the
/// transition matrix k times.
pub fn predict(x0: [f64; 2], transition: &[[f64; 2]; 2], steps: usize) -> [f64; 2] {
    let mut x = x0;
    for _ in 0..steps {
        x = [
            x[0] * transition[0][0] + x[1] * transition[1][0],
            x[0] * transition[0][1] + x[1] * transition[1][1],
        ];
    }
    x
}

/// Most likely hidden-state sequence for a block of binary observations.
///
/// Standard Viterbi dynamic program in log space; ties prefer state 0,
/// both in the per-step predecessor choice and in the final state. Since
/// backtracking resolves ties from the end of the block, the decoded path
/// is the colexicographically smallest maximum-likelihood sequence.
pub fn viterbi(observations: &[u8], hmm: &Hmm) -> Result<Vec<u8>> {
    if observations.is_empty() {
        return Err(Error::InvalidParameter(
            "viterbi requires a non-empty observation sequence".into(),
        ));
    }
    if let Some(&bad) = observations.iter().find(|&&o| o > 1) {
        return Err(Error::InvalidParameter(format!(
            "observations must be 0 or 1, got {bad}"
        )));
    }

    let ln = |p: f64| if p > 0.0 { p.ln() } else { f64::NEG_INFINITY };
    let ln_tr = [
        [ln(hmm.transition[0][0]), ln(hmm.transition[0][1])],
        [ln(hmm.transition[1][0]), ln(hmm.transition[1][1])],
    ];
    let ln_em = [
        [ln(hmm.emission[0][0]), ln(hmm.emission[0][1])],
        [ln(hmm.emission[1][0]), ln(hmm.emission[1][1])],
    ];

    let n = observations.len();
    let mut back = vec![[0u8; 2]; n];
    let first = observations[0] as usize;
    let mut score = [
        ln(hmm.initial[0]) + ln_em[first][0],
        ln(hmm.initial[1]) + ln_em[first][1],
    ];

    for (t, &obs) in observations.iter().enumerate().skip(1) {
        let obs = obs as usize;
        let mut next = [f64::NEG_INFINITY; 2];
        for s in 0..2 {
            // Strict > keeps predecessor 0 on ties.
            let from0 = score[0] + ln_tr[0][s];
            let from1 = score[1] + ln_tr[1][s];
            let (prev, best) = if from1 > from0 {
                (1, from1)
            } else {
                (0, from0)
            };
            back[t][s] = prev;
            next[s] = best + ln_em[obs][s];
        }
        score = next;
    }

    if score[0] == f64::NEG_INFINITY && score[1] == f64::NEG_INFINITY {
        return Err(Error::Numerical(
            "all state sequences have zero likelihood for these observations".into(),
        ));
    }

    let mut path = vec![0u8; n];
    path[n - 1] = if score[1] > score[0] { 1 } else { 0 };
    for t in (0..n - 1).rev() {
        path[t] = back[t + 1][path[t + 1] as usize];
    }
    Ok(path)
}
