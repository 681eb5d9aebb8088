#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Fixture {
    pub instances: PathBuf,
    pub predictions_dir: PathBuf,
    pub traces: PathBuf,
    pub pvi: PathBuf,
    pub ppl: PathBuf,
}

const WORDS: [&str; 12] = [
    "river", "paris", "tower", "north", "king", "1990", "blue", "stone", "harbor", "seine", "city",
    "bridge",
];

fn word(rng: &mut ChaCha8Rng) -> &'static str {
    WORDS[rng.random_range(0..WORDS.len())]
}

/// A small extractive-QA corpus with every input the pipeline reads.
/// Model `m` answers correctly with probability `0.4 + 0.5 * m / models`.
pub fn write_fixture(dir: &Path, n: usize, models: usize, seed: u64) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut instances = String::new();
    let mut traces = String::new();
    let mut pvi = String::new();
    let mut ppl = String::new();
    let mut golds = Vec::with_capacity(n);
    for i in 0..n {
        let id = format!("q{i:04}");
        let context: Vec<&str> = (0..rng.random_range(5..60))
            .map(|_| word(&mut rng))
            .collect();
        let gold = format!("{} {}", word(&mut rng), word(&mut rng));
        let labels: Vec<String> = (0..3)
            .map(|_| {
                if rng.random::<f64>() < 0.7 {
                    gold.clone()
                } else {
                    word(&mut rng).to_string()
                }
            })
            .collect();
        let line = serde_json::json!({
            "id": id, "text_a": context.join(" "), "text_b": "what is it?",
            "gold": [gold], "annotator_labels": labels,
        });
        writeln!(instances, "{line}").unwrap();
        let conf: Vec<f64> = (0..4).map(|_| rng.random::<f64>()).collect();
        writeln!(
            traces,
            "{}",
            serde_json::json!({"id": id, "gold_conf": conf})
        )
        .unwrap();
        let (p_full, p_null): (f64, f64) =
            (rng.random_range(0.01..1.0), rng.random_range(0.01..1.0));
        writeln!(
            pvi,
            "{}",
            serde_json::json!({"id": id, "p_full": p_full, "p_null": p_null})
        )
        .unwrap();
        let lp: Vec<f64> = (0..rng.random_range(1..8))
            .map(|_| -rng.random_range(0.0..4.0))
            .collect();
        writeln!(
            ppl,
            "{}",
            serde_json::json!({"id": id, "token_logprobs": lp})
        )
        .unwrap();
        golds.push((id, gold));
    }
    let predictions_dir = dir.join("predictions");
    fs::create_dir_all(&predictions_dir).unwrap();
    for m in 0..models {
        let p = 0.4 + 0.5 * m as f64 / models as f64;
        let mut out = String::new();
        for (id, gold) in &golds {
            let pred = if rng.random::<f64>() < p {
                gold.clone()
            } else {
                word(&mut rng).to_string()
            };
            writeln!(out, "{}", serde_json::json!({"id": id, "prediction": pred})).unwrap();
        }
        fs::write(predictions_dir.join(format!("model_{m:02}.jsonl")), out).unwrap();
    }
    let write = |name: &str, body: &str| {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    };
    Fixture {
        instances: write("instances.jsonl", &instances),
        traces: write("traces.jsonl", &traces),
        pvi: write("pvi.jsonl", &pvi),
        ppl: write("ppl.jsonl", &ppl),
        predictions_dir,
    }
}

/// Every regular file under `dir` with its bytes, sorted by path.
pub fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let bytes = fs::read(&path).unwrap();
                out.push((path.strip_prefix(dir).unwrap().to_path_buf(), bytes));
            }
        }
    }
    out.sort();
    out
}
