use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::records::{PerplexityRecord, PviRecord, TraceRecord};
use crate::data::{Instance, TaskKind};
use crate::error::{Error, Result};
use crate::math;
use crate::metrics::qa_token_f1;

/// PVI is reported in bits.
pub const PVI_LOG_BASE: f64 = 2.0;

/// Token count: the context for QA, premise plus hypothesis for
/// classification. Tokens are maximal runs of non-whitespace.
pub fn compute_length(instance: &Instance) -> usize {
    let a = instance.text_a.split_whitespace().count();
    match instance.task_kind {
        TaskKind::ExtractiveQa => a,
        TaskKind::Classification => a + instance.text_b.split_whitespace().count(),
    }
}

/// Training-dynamics variability of a confidence vector:
/// `sqrt(V + V^2 / (E - 1))` with `V` the population variance over `E` epochs.
pub fn variability(conf: &[f64]) -> Result<f64> {
    if conf.len() < 2 {
        return Err(Error::TooFew {
            needed: 2,
            got: conf.len(),
        });
    }
    let var = math::pop_sd(conf);
    let var = var * var;
    Ok(math::sqrt(var + var * var / (conf.len() - 1) as f64))
}

pub fn compute_ambiguity(trace: &TraceRecord) -> f64 {
    variability(trace.gold_conf()).expect("trace records hold at least two epochs")
}

/// `log p_full - log p_null`, i.e. the drop in negative log-probability of
/// the gold answer once the model sees the input.
pub fn pvi(p_full: f64, p_null: f64) -> Result<f64> {
    if !(p_full > 0.0 && p_null > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "PVI needs positive probabilities, got {p_full} and {p_null}"
        )));
    }
    Ok((math::ln(p_full) - math::ln(p_null)) / math::ln(PVI_LOG_BASE))
}

pub fn compute_difficulty(rec: &PviRecord) -> f64 {
    pvi(rec.p_full(), rec.p_null()).expect("pvi records hold positive probabilities")
}

/// Inverse inter-annotator agreement.
///
/// Classification agreement is the share of annotators choosing the majority
/// label. QA agreement is the mean token-F1 over all unordered annotator
/// pairs.
pub fn compute_noise(instance: &Instance) -> Result<f64> {
    let labels = &instance.annotator_labels;
    if labels.len() < 2 {
        return Err(Error::TooFew {
            needed: 2,
            got: labels.len(),
        });
    }
    let agreement = match instance.task_kind {
        TaskKind::Classification => {
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for l in labels {
                *counts.entry(l.as_str()).or_default() += 1;
            }
            let majority = counts.values().copied().max().unwrap_or(0);
            majority as f64 / labels.len() as f64
        }
        TaskKind::ExtractiveQa => {
            let mut pairs = Vec::new();
            for i in 0..labels.len() {
                for j in i + 1..labels.len() {
                    pairs.push(qa_token_f1(&labels[i], core::slice::from_ref(&labels[j])));
                }
            }
            math::mean(&pairs)
        }
    };
    Ok((1.0 - agreement).clamp(0.0, 1.0))
}

/// `exp(-mean(log p))` over the conditioned tokens.
pub fn compute_perplexity(rec: &PerplexityRecord) -> f64 {
    math::exp(-math::mean(rec.token_logprobs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::{String, ToString};
    use alloc::vec;

    fn inst(kind: TaskKind, a: &str, b: &str, labels: &[&str]) -> Instance {
        Instance {
            id: "x".into(),
            task_kind: kind,
            text_a: a.into(),
            text_b: b.into(),
            gold: vec!["g".into()],
            annotator_labels: labels
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<String>>(),
        }
    }

    #[test]
    fn length_examples() {
        assert_eq!(
            compute_length(&inst(TaskKind::Classification, "a b", "c", &[])),
            3
        );
        assert_eq!(
            compute_length(&inst(
                TaskKind::ExtractiveQa,
                "w x y z",
                "anything at all",
                &[]
            )),
            4
        );
        assert_eq!(
            compute_length(&inst(TaskKind::ExtractiveQa, "", "q", &[])),
            0
        );
        assert_eq!(
            compute_length(&inst(TaskKind::ExtractiveQa, "  a\t\nb  ", "", &[])),
            2
        );
    }

    // Independent oracle: population variance by explicit sum of squares
    // divided by E, then the variability formula term by term.
    fn variability_oracle(conf: &[f64]) -> f64 {
        let e = conf.len() as f64;
        let m = conf.iter().sum::<f64>() / e;
        let v = conf.iter().map(|c| (c - m).powi(2)).sum::<f64>() / e;
        (v + v * v / (e - 1.0)).sqrt()
    }

    #[test]
    fn ambiguity_examples() {
        let t = TraceRecord::new("q", vec![0.7; 10]).unwrap();
        assert_eq!(compute_ambiguity(&t), 0.0);

        let t = TraceRecord::new("q", vec![0.2, 0.8]).unwrap();
        assert!((variability_oracle(&[0.2, 0.8]) - 0.313_209).abs() < 1e-6);
        assert!((compute_ambiguity(&t) - 0.313_209).abs() < 1e-6);

        let conf = [0.0, 1.0, 0.0, 1.0];
        assert!((variability_oracle(&conf) - 0.520_416).abs() < 1e-6);
        assert!((variability(&conf).unwrap() - 0.520_416).abs() < 1e-6);
        assert!(variability(&[0.3]).is_err());
    }

    #[test]
    fn difficulty_examples() {
        let pvi_of = |f, n| compute_difficulty(&PviRecord::new("q", f, n).unwrap());
        assert_eq!(pvi_of(0.5, 0.5), 0.0);
        assert!((pvi_of(0.8, 0.5) - 0.678_072).abs() < 1e-6);
        assert!((pvi_of(0.25, 0.5) + 1.0).abs() < 1e-12);
        assert!(pvi(0.0, 0.5).is_err());
    }

    #[test]
    fn noise_examples() {
        let all = inst(TaskKind::Classification, "", "", &["e"; 5]);
        assert_eq!(compute_noise(&all).unwrap(), 0.0);
        let split = inst(TaskKind::Classification, "", "", &["e", "e", "e", "n", "c"]);
        assert!((compute_noise(&split).unwrap() - 0.4).abs() < 1e-12);
        let qa = inst(TaskKind::ExtractiveQa, "", "", &["x y", "x y", "x z"]);
        assert!((compute_noise(&qa).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        // "a" is an article and vanishes under answer normalization
        let qa = inst(TaskKind::ExtractiveQa, "", "", &["a b", "a b", "a c"]);
        assert!((compute_noise(&qa).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        let tie = inst(TaskKind::Classification, "", "", &["e", "e", "n", "n"]);
        assert_eq!(compute_noise(&tie).unwrap(), 0.5);
        assert!(compute_noise(&inst(TaskKind::Classification, "", "", &["e"])).is_err());
    }

    #[test]
    fn perplexity_examples() {
        let ppl = |v: Vec<f64>| compute_perplexity(&PerplexityRecord::new("q", v).unwrap());
        assert_eq!(ppl(vec![0.0, 0.0]), 1.0);
        assert!((ppl(vec![0.5f64.ln(); 4]) - 2.0).abs() < 1e-12);
        assert!((ppl(vec![0.25f64.ln(), 0.0]) - 2.0).abs() < 1e-12);
    }
}
