//! Adaptive pattern proportions: a softmax over per-pattern losses,
//! recomputed every `period` steps so badly handled patterns are sampled
//! more often.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of steps between refreshes.
pub const DEFAULT_PERIOD: usize = 50;

/// exp(lᵢ/τ) / Σⱼ exp(lⱼ/τ), evaluated with the maximum subtracted.
pub fn softmax_proportions(losses: &[f64], temperature: f64) -> Result<Vec<f64>> {
    if losses.is_empty() {
        return Err(Error::param("losses", "empty loss vector"));
    }
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(Error::param("temperature", format!("{temperature} must be > 0")));
    }
    if let Some(bad) = losses.iter().find(|l| !l.is_finite()) {
        return Err(Error::param("losses", format!("non-finite loss {bad}")));
    }
    let top = losses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = losses.iter().map(|l| ((l - top) / temperature).exp()).collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProportionState {
    pub tags: Vec<String>,
    pub proportions: Vec<f64>,
    pub step: usize,
    pub period: usize,
    pub temperature: f64,
}

impl ProportionState {
    /// Uniform proportions over `tags`.
    pub fn new(tags: Vec<String>, period: usize, temperature: f64) -> Result<Self> {
        if tags.is_empty() {
            return Err(Error::param("tags", "no patterns"));
        }
        if period == 0 {
            return Err(Error::param("period", "must be >= 1"));
        }
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(Error::param("temperature", format!("{temperature} must be > 0")));
        }
        let k = tags.len();
        Ok(ProportionState {
            tags,
            proportions: vec![1.0 / k as f64; k],
            step: 0,
            period,
            temperature,
        })
    }

    /// Whether the step just taken triggered a refresh.
    pub fn refreshed(&self) -> bool {
        self.step > 0 && self.step.is_multiple_of(self.period)
    }

    /// Advances one step. Every `period` steps the probe is asked for each
    /// pattern's loss, in tag order, and the proportions are replaced by the
    /// softmax of those losses.
    pub fn step<F>(&self, mut probe: F) -> Result<ProportionState>
    where
        F: FnMut(&str) -> std::result::Result<f64, String>,
    {
        let mut next = self.clone();
        next.step += 1;
        if next.refreshed() {
            let losses = self
                .tags
                .iter()
                .map(|t| {
                    probe(t).map_err(|reason| Error::ProbeFailed {
                        pattern: t.clone(),
                        reason,
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            next.proportions = softmax_proportions(&losses, self.temperature)?;
        }
        Ok(next)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tags(k: usize) -> Vec<String> {
        (0..k).map(|i| format!("p{i}")).collect()
    }

    #[test]
    fn equal_losses_give_uniform() {
        let p = softmax_proportions(&[0.7; 4], 1.0).unwrap();
        assert!(p.iter().all(|v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn log_two_gap() {
        let p = softmax_proportions(&[0.0, 2f64.ln()], 1.0).unwrap();
        assert!((p[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((p[1] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(softmax_proportions(&[], 1.0).is_err());
        assert!(softmax_proportions(&[1.0], 0.0).is_err());
        assert!(softmax_proportions(&[f64::NAN], 1.0).is_err());
        assert!(ProportionState::new(tags(2), 0, 1.0).is_err());
    }

    #[test]
    fn huge_losses_do_not_overflow() {
        let p = softmax_proportions(&[1000.0, 999.0], 1.0).unwrap();
        assert!(p.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn period_one_refreshes_every_step() {
        let mut state = ProportionState::new(tags(2), 1, 1.0).unwrap();
        for k in 0..3 {
            let gap = k as f64;
            state = state.step(|t| Ok(if t == "p0" { gap } else { 0.0 })).unwrap();
            let expected = softmax_proportions(&[gap, 0.0], 1.0).unwrap();
            assert_eq!(state.proportions, expected);
        }
    }

    #[test]
    fn default_period_is_fifty() {
        assert_eq!(DEFAULT_PERIOD, 50);
        let mut state = ProportionState::new(tags(3), DEFAULT_PERIOD, 1.0).unwrap();
        let mut calls = 0;
        for _ in 0..49 {
            state = state
                .step(|_| {
                    calls += 1;
                    Ok(1.0)
                })
                .unwrap();
        }
        assert_eq!(calls, 0);
        state = state.step(|t| Ok(if t == "p1" { 3.0 } else { 0.0 })).unwrap();
        assert!(state.refreshed());
        assert!(state.proportions[1] > state.proportions[0]);
    }

    #[test]
    fn dominant_loss_takes_over_at_low_temperature() {
        let state = ProportionState::new(tags(4), 1, 0.1).unwrap();
        let next = state.step(|t| Ok(if t == "p2" { 10.0 } else { 0.0 })).unwrap();
        assert!(next.proportions[2] > 0.99);
    }

    #[test]
    fn probe_failure_names_the_pattern() {
        let state = ProportionState::new(tags(2), 1, 1.0).unwrap();
        let err = state
            .step(|t| if t == "p1" { Err("boom".into()) } else { Ok(0.0) })
            .unwrap_err();
        assert!(matches!(err, Error::ProbeFailed { ref pattern, .. } if pattern == "p1"));
    }
}
