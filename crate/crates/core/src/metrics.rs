//! Per-instance answer metrics.
//!
//! Extractive QA uses the leaderboard conventions: answers are lowercased,
//! stripped of punctuation and English articles, then compared either as
//! token multisets (F1) or for equality (exact match). Classification uses
//! label equality per instance and macro-F1 at the aggregate level only.

use alloc::collections::BTreeMap;
use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use unicode_general_category::{get_general_category, GeneralCategory};

use crate::data::TaskKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MetricKind {
    QaTokenF1,
    QaExact,
    ClsAccuracy,
    ClsMacroF1,
}

impl MetricKind {
    pub const ALL: [MetricKind; 4] = [
        MetricKind::QaTokenF1,
        MetricKind::QaExact,
        MetricKind::ClsAccuracy,
        MetricKind::ClsMacroF1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::QaTokenF1 => "qa_token_f1",
            MetricKind::QaExact => "qa_exact",
            MetricKind::ClsAccuracy => "cls_accuracy",
            MetricKind::ClsMacroF1 => "cls_macro_f1",
        }
    }

    /// Whether the metric decomposes into one score per instance.
    pub fn is_per_instance(self) -> bool {
        !matches!(self, MetricKind::ClsMacroF1)
    }

    /// The metric actually used to score instances of `task`.
    ///
    /// Accuracy on QA is accepted as an alias for exact match; QA metrics on
    /// classification data and macro-F1 (aggregate only) are rejected.
    pub fn resolve_for(self, task: TaskKind) -> Result<MetricKind> {
        match (self, task) {
            (MetricKind::QaTokenF1 | MetricKind::QaExact, TaskKind::ExtractiveQa) => Ok(self),
            (MetricKind::ClsAccuracy, TaskKind::ExtractiveQa) => Ok(MetricKind::QaExact),
            (MetricKind::ClsAccuracy, TaskKind::Classification) => Ok(self),
            _ => Err(Error::MetricMismatch {
                metric: self.name(),
                task: task.name(),
            }),
        }
    }

    /// Scores one prediction against its gold answers.
    pub fn score(self, prediction: &str, golds: &[String]) -> f64 {
        match self {
            MetricKind::QaTokenF1 => qa_token_f1(prediction, golds),
            MetricKind::QaExact => qa_exact(prediction, golds),
            MetricKind::ClsAccuracy | MetricKind::ClsMacroF1 => cls_accuracy(prediction, golds),
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MetricKind::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(alloc::format!("unknown metric `{s}`")))
    }
}

fn is_punctuation(c: char) -> bool {
    matches!(
        get_general_category(c),
        GeneralCategory::ConnectorPunctuation
            | GeneralCategory::DashPunctuation
            | GeneralCategory::OpenPunctuation
            | GeneralCategory::ClosePunctuation
            | GeneralCategory::InitialPunctuation
            | GeneralCategory::FinalPunctuation
            | GeneralCategory::OtherPunctuation
    )
}

/// Lowercases, drops punctuation, splits on whitespace and removes articles.
pub fn normalize_answer(text: &str) -> Vec<String> {
    let cleaned: String = text
        .chars()
        .flat_map(char::to_lowercase)
        .filter(|c| !is_punctuation(*c))
        .collect();
    cleaned
        .split_whitespace()
        .filter(|t| !matches!(*t, "a" | "an" | "the"))
        .map(String::from)
        .collect()
}

fn token_f1(pred: &[String], gold: &[String]) -> f64 {
    if pred.is_empty() || gold.is_empty() {
        return if pred.is_empty() && gold.is_empty() {
            1.0
        } else {
            0.0
        };
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in gold {
        *counts.entry(t.as_str()).or_default() += 1;
    }
    let mut common = 0usize;
    for t in pred {
        if let Some(c) = counts.get_mut(t.as_str()) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    if common == 0 {
        return 0.0;
    }
    let precision = common as f64 / pred.len() as f64;
    let recall = common as f64 / gold.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Best token-multiset F1 of `prediction` over all gold answers.
pub fn qa_token_f1(prediction: &str, golds: &[String]) -> f64 {
    let pred = normalize_answer(prediction);
    golds
        .iter()
        .map(|g| token_f1(&pred, &normalize_answer(g)))
        .fold(0.0, f64::max)
}

/// 1.0 when the normalized prediction equals some normalized gold answer.
pub fn qa_exact(prediction: &str, golds: &[String]) -> f64 {
    let pred = normalize_answer(prediction);
    if golds.iter().any(|g| normalize_answer(g) == pred) {
        1.0
    } else {
        0.0
    }
}

pub fn cls_accuracy(prediction: &str, golds: &[String]) -> f64 {
    if golds.iter().any(|g| g == prediction) {
        1.0
    } else {
        0.0
    }
}

/// Unweighted mean of per-label F1 over the labels seen in golds or
/// predictions.
pub fn cls_macro_f1<P: AsRef<str>, G: AsRef<str>>(predictions: &[P], golds: &[G]) -> Result<f64> {
    if predictions.len() != golds.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: golds.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::Empty("macro-F1 needs at least one prediction"));
    }
    let labels: BTreeSet<&str> = predictions
        .iter()
        .map(AsRef::as_ref)
        .chain(golds.iter().map(AsRef::as_ref))
        .collect();
    let mut total = 0.0;
    for label in &labels {
        let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
        for (p, g) in predictions.iter().zip(golds) {
            match (p.as_ref() == *label, g.as_ref() == *label) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fneg += 1,
                (false, false) => {}
            }
        }
        total += (2 * tp) as f64 / (2 * tp + fp + fneg) as f64;
    }
    Ok(total / labels.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn golds(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn normalization_cases() {
        assert_eq!(normalize_answer("The Cat!"), vec!["cat"]);
        assert_eq!(normalize_answer("a b the c"), vec!["b", "c"]);
        assert!(normalize_answer("").is_empty());
        // non-ASCII punctuation is stripped too
        assert_eq!(normalize_answer("«Paris»—France"), vec!["parisfrance"]);
    }

    #[test]
    fn token_f1_cases() {
        assert_eq!(qa_token_f1("brown fox", &golds(&["brown fox"])), 1.0);
        assert_eq!(qa_token_f1("the brown fox", &golds(&["brown dog"])), 0.5);
        assert_eq!(qa_token_f1("brown fox", &golds(&["x", "brown fox"])), 1.0);
        assert_eq!(qa_token_f1("", &golds(&[""])), 1.0);
        assert_eq!(qa_token_f1("", &golds(&["cat"])), 0.0);
        assert_eq!(qa_token_f1("cat", &golds(&["the"])), 0.0);
    }

    #[test]
    fn token_f1_counts_multiset_overlap() {
        // pred tokens {a,a}, gold {a}: common 1, P=1/2, R=1
        let f = qa_token_f1("x x", &golds(&["x"]));
        assert!((f - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn exact_cases() {
        assert_eq!(qa_exact("The Cat", &golds(&["the cat"])), 1.0);
        assert_eq!(qa_exact("cats", &golds(&["cat"])), 0.0);
        assert_eq!(qa_exact("", &golds(&[""])), 1.0);
    }

    #[test]
    fn accuracy_and_macro() {
        let preds = ["e", "n", "n", "c"];
        let gold = ["e", "n", "n", "n"];
        let acc: f64 = preds
            .iter()
            .zip(gold)
            .map(|(p, g)| cls_accuracy(p, &golds(&[g])))
            .sum::<f64>()
            / 4.0;
        assert_eq!(acc, 0.75);

        let m = cls_macro_f1(&["e", "n", "n", "n"], &["e", "e", "n", "n"]).unwrap();
        assert!((m - (2.0 / 3.0 + 0.8) / 2.0).abs() < 1e-12);
        assert_eq!(cls_macro_f1(&["a", "b"], &["a", "b"]).unwrap(), 1.0);
        assert!(cls_macro_f1::<&str, &str>(&[], &[]).is_err());
    }

    #[test]
    fn metric_resolution() {
        assert_eq!(
            MetricKind::ClsAccuracy
                .resolve_for(TaskKind::ExtractiveQa)
                .unwrap(),
            MetricKind::QaExact
        );
        assert!(MetricKind::QaTokenF1
            .resolve_for(TaskKind::Classification)
            .is_err());
        assert!(MetricKind::ClsMacroF1
            .resolve_for(TaskKind::Classification)
            .is_err());
        for m in MetricKind::ALL {
            assert_eq!(m.name().parse::<MetricKind>().unwrap(), m);
        }
    }
}
