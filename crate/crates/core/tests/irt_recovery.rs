use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use transparency_core::irt::{discriminability_column, fit_2pl, IrtConfig, ResponseMatrix};
use transparency_core::stats::spearman;

struct Truth {
    theta: Vec<f64>,
    a: Vec<f64>,
    matrix: ResponseMatrix,
}

// theta, b and log a all standard normal.
fn simulate(models: usize, items: usize, seed: u64) -> Truth {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };
    let theta: Vec<f64> = (0..models).map(|_| normal(&mut rng)).collect();
    let b: Vec<f64> = (0..items).map(|_| normal(&mut rng)).collect();
    let a: Vec<f64> = (0..items).map(|_| normal(&mut rng).exp()).collect();
    let rows = theta
        .iter()
        .map(|t| {
            (0..items)
                .map(|i| {
                    let p = 1.0 / (1.0 + (-a[i] * (t - b[i])).exp());
                    u8::from(rng.random::<f64>() < p)
                })
                .collect()
        })
        .collect();
    let ids = |p: &str, n: usize| (0..n).map(|i| format!("{p}{i}")).collect();
    Truth {
        theta,
        a,
        matrix: ResponseMatrix::new(ids("m", models), ids("i", items), rows).unwrap(),
    }
}

#[test]
fn recovers_abilities_and_discrimination() {
    let truth = simulate(50, 2000, 7);
    let fit = fit_2pl(&truth.matrix, &IrtConfig::default()).unwrap();
    let rho_theta = spearman(&truth.theta, &fit.params.theta).unwrap();
    let rho_a = spearman(&truth.a, &discriminability_column(&fit.params)).unwrap();
    assert!(rho_theta >= 0.9, "theta {rho_theta}");
    assert!(rho_a >= 0.8, "a {rho_a}");
    assert!(fit.objective > fit.initial_objective);
}

#[test]
fn easier_models_score_higher_ability() {
    let truth = simulate(8, 300, 3);
    let fit = fit_2pl(&truth.matrix, &IrtConfig::default()).unwrap();
    let correct: Vec<f64> = (0..8)
        .map(|j| (0..300).map(|i| f64::from(truth.matrix.get(j, i))).sum())
        .collect();
    assert!(spearman(&correct, &fit.params.theta).unwrap() > 0.95);
}
