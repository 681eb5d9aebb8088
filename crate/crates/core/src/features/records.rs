use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

fn invalid(id: &str, reason: impl Into<String>) -> Error {
    Error::InvalidRecord {
        id: id.into(),
        reason: reason.into(),
    }
}

/// Per-epoch probability of the gold answer for one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    id: String,
    gold_conf: Vec<f64>,
}

impl TraceRecord {
    pub fn new(id: impl Into<String>, gold_conf: Vec<f64>) -> Result<Self> {
        let id = id.into();
        if gold_conf.len() < 2 {
            return Err(invalid(&id, "gold_conf needs at least 2 epochs"));
        }
        if gold_conf.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(invalid(&id, "gold_conf entries must lie in [0, 1]"));
        }
        Ok(TraceRecord { id, gold_conf })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn gold_conf(&self) -> &[f64] {
        &self.gold_conf
    }
}

/// Gold-answer probabilities under the full-input and null-input models.
#[derive(Debug, Clone, PartialEq)]
pub struct PviRecord {
    id: String,
    p_full: f64,
    p_null: f64,
}

impl PviRecord {
    pub fn new(id: impl Into<String>, p_full: f64, p_null: f64) -> Result<Self> {
        let id = id.into();
        for (name, p) in [("p_full", p_full), ("p_null", p_null)] {
            if !(p > 0.0 && p <= 1.0) {
                return Err(invalid(
                    &id,
                    alloc::format!("{name} must lie in (0, 1], got {p}"),
                ));
            }
        }
        Ok(PviRecord { id, p_full, p_null })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn p_full(&self) -> f64 {
        self.p_full
    }

    pub fn p_null(&self) -> f64 {
        self.p_null
    }
}

/// Natural-log probabilities of the question tokens given the context.
#[derive(Debug, Clone, PartialEq)]
pub struct PerplexityRecord {
    id: String,
    token_logprobs: Vec<f64>,
}

impl PerplexityRecord {
    pub fn new(id: impl Into<String>, token_logprobs: Vec<f64>) -> Result<Self> {
        let id = id.into();
        if token_logprobs.is_empty() {
            return Err(invalid(&id, "token_logprobs is empty"));
        }
        if token_logprobs.iter().any(|lp| !lp.is_finite() || *lp > 0.0) {
            return Err(invalid(&id, "token_logprobs must be finite and <= 0"));
        }
        Ok(PerplexityRecord { id, token_logprobs })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn token_logprobs(&self) -> &[f64] {
        &self.token_logprobs
    }
}
