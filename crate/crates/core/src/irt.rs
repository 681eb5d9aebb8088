//! Two-parameter logistic item response model.
//!
//! `P(model j answers item i) = sigmoid(a_i * (theta_j - b_i))` with
//! `a_i = exp(alpha_i)`. Parameters are fitted by maximizing the Bernoulli
//! log-likelihood plus Gaussian log-priors on `theta`, `b` and `alpha`.
//!
//! The optimizer is full-batch gradient ascent in which each coordinate's
//! step is scaled by the inverse of its expected curvature (the diagonal of
//! the Fisher information plus the prior precision). Abilities see thousands
//! of items while items see a handful of models, so an unscaled step would
//! either crawl for items or diverge for abilities. The best iterate is
//! returned.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::data::ScoreMatrix;
use crate::error::{Error, Result};
use crate::math;

/// Binary model x item response matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMatrix {
    model_ids: Vec<String>,
    instance_ids: Vec<String>,
    responses: Vec<u8>,
}

impl ResponseMatrix {
    /// `rows[j][i]` is 1 when model `j` answered item `i` correctly.
    pub fn new(
        model_ids: Vec<String>,
        instance_ids: Vec<String>,
        rows: Vec<Vec<u8>>,
    ) -> Result<Self> {
        if rows.len() != model_ids.len() {
            return Err(Error::LengthMismatch {
                left: rows.len(),
                right: model_ids.len(),
            });
        }
        let mut responses = Vec::with_capacity(rows.len() * instance_ids.len());
        for row in rows {
            if row.len() != instance_ids.len() {
                return Err(Error::LengthMismatch {
                    left: row.len(),
                    right: instance_ids.len(),
                });
            }
            if row.iter().any(|&r| r > 1) {
                return Err(Error::InvalidParameter("responses must be 0 or 1".into()));
            }
            responses.extend(row);
        }
        Ok(ResponseMatrix {
            model_ids,
            instance_ids,
            responses,
        })
    }

    /// Dichotomizes a score matrix built with a binary metric (exact match or
    /// accuracy).
    pub fn from_scores(matrix: &ScoreMatrix) -> Result<Self> {
        let rows = (0..matrix.n_models())
            .map(|m| {
                matrix
                    .row(m)
                    .iter()
                    .map(|&s| {
                        if s == 1.0 {
                            Ok(1)
                        } else if s == 0.0 {
                            Ok(0)
                        } else {
                            Err(Error::InvalidParameter(alloc::format!(
                                "non-binary score {s}; use an exact-match or accuracy metric"
                            )))
                        }
                    })
                    .collect::<Result<Vec<u8>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        ResponseMatrix::new(
            matrix.model_ids().to_vec(),
            matrix.instance_ids().to_vec(),
            rows,
        )
    }

    pub fn n_models(&self) -> usize {
        self.model_ids.len()
    }

    pub fn n_items(&self) -> usize {
        self.instance_ids.len()
    }

    pub fn model_ids(&self) -> &[String] {
        &self.model_ids
    }

    pub fn instance_ids(&self) -> &[String] {
        &self.instance_ids
    }

    pub fn get(&self, model: usize, item: usize) -> u8 {
        self.responses[model * self.n_items() + item]
    }

    /// Items answered identically by every model; their discriminability is
    /// not identified by the data.
    pub fn constant_items(&self) -> Vec<usize> {
        (0..self.n_items())
            .filter(|&i| {
                let first = self.get(0, i);
                (1..self.n_models()).all(|j| self.get(j, i) == first)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrtParams {
    pub theta: Vec<f64>,
    pub b: Vec<f64>,
    /// Log-discriminability.
    pub alpha: Vec<f64>,
}

impl IrtParams {
    pub fn zeros(n_models: usize, n_items: usize) -> Self {
        IrtParams {
            theta: vec![0.0; n_models],
            b: vec![0.0; n_items],
            alpha: vec![0.0; n_items],
        }
    }

    pub fn discrimination(&self, item: usize) -> f64 {
        math::exp(self.alpha[item])
    }
}

pub fn predict_prob(params: &IrtParams, model: usize, item: usize) -> f64 {
    math::sigmoid(params.discrimination(item) * (params.theta[model] - params.b[item]))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrtConfig {
    pub iterations: usize,
    pub learning_rate: f64,
    /// Recorded with the fit; the optimizer itself starts from zeros and is
    /// deterministic.
    pub seed: u64,
    pub prior_sd_theta: f64,
    pub prior_sd_b: f64,
    pub prior_sd_alpha: f64,
}

impl Default for IrtConfig {
    fn default() -> Self {
        IrtConfig {
            iterations: 1000,
            learning_rate: 0.5,
            seed: 0,
            prior_sd_theta: 1.0,
            prior_sd_b: 1.0,
            prior_sd_alpha: 0.5,
        }
    }
}

fn normal_log_density(x: f64, sd: f64) -> f64 {
    -0.5 * math::ln(2.0 * PI * sd * sd) - x * x / (2.0 * sd * sd)
}

fn log_prior(params: &IrtParams, config: &IrtConfig) -> f64 {
    let t: f64 = params
        .theta
        .iter()
        .map(|&x| normal_log_density(x, config.prior_sd_theta))
        .sum();
    let b: f64 = params
        .b
        .iter()
        .map(|&x| normal_log_density(x, config.prior_sd_b))
        .sum();
    let a: f64 = params
        .alpha
        .iter()
        .map(|&x| normal_log_density(x, config.prior_sd_alpha))
        .sum();
    t + b + a
}

fn check_shapes(params: &IrtParams, matrix: &ResponseMatrix) -> Result<()> {
    if params.theta.len() != matrix.n_models() {
        return Err(Error::LengthMismatch {
            left: params.theta.len(),
            right: matrix.n_models(),
        });
    }
    if params.b.len() != matrix.n_items() || params.alpha.len() != matrix.n_items() {
        return Err(Error::LengthMismatch {
            left: params.b.len().min(params.alpha.len()),
            right: matrix.n_items(),
        });
    }
    Ok(())
}

/// Bernoulli log-likelihood of the responses plus the Gaussian log-priors
/// (normalizing constants included).
pub fn penalized_loglik(
    params: &IrtParams,
    matrix: &ResponseMatrix,
    config: &IrtConfig,
) -> Result<f64> {
    check_shapes(params, matrix)?;
    let mut ll = 0.0;
    for j in 0..matrix.n_models() {
        for i in 0..matrix.n_items() {
            let z = params.discrimination(i) * (params.theta[j] - params.b[i]);
            ll += if matrix.get(j, i) == 1 {
                math::log_sigmoid(z)
            } else {
                math::log_sigmoid(-z)
            };
        }
    }
    Ok(ll + log_prior(params, config))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrtFit {
    pub params: IrtParams,
    pub objective: f64,
    pub initial_objective: f64,
    /// Iteration whose parameters were returned (0 is the initial point).
    pub best_iteration: usize,
    pub constant_items: Vec<usize>,
}

/// Fits the 2PL model from `theta = b = alpha = 0` and returns the iterate
/// with the highest penalized log-likelihood.
pub fn fit_2pl(matrix: &ResponseMatrix, config: &IrtConfig) -> Result<IrtFit> {
    let (n_models, n_items) = (matrix.n_models(), matrix.n_items());
    if n_models < 2 || n_items < 2 {
        return Err(Error::TooFew {
            needed: 2,
            got: n_models.min(n_items),
        });
    }
    let constant_items = matrix.constant_items();
    if !constant_items.is_empty() {
        log::warn!(
            "{} items are answered identically by every model; their discriminability stays near the prior",
            constant_items.len()
        );
    }

    let prec_theta = 1.0 / (config.prior_sd_theta * config.prior_sd_theta);
    let prec_b = 1.0 / (config.prior_sd_b * config.prior_sd_b);
    let prec_alpha = 1.0 / (config.prior_sd_alpha * config.prior_sd_alpha);

    let mut params = IrtParams::zeros(n_models, n_items);
    let mut best = params.clone();
    let mut best_objective = f64::NEG_INFINITY;
    let mut best_iteration = 0;
    let mut initial_objective = f64::NAN;

    let mut g_theta = vec![0.0; n_models];
    let mut h_theta = vec![0.0; n_models];
    let mut g_b = vec![0.0; n_items];
    let mut h_b = vec![0.0; n_items];
    let mut g_alpha = vec![0.0; n_items];
    let mut h_alpha = vec![0.0; n_items];

    for iteration in 0..=config.iterations {
        g_theta.iter_mut().for_each(|g| *g = 0.0);
        h_theta.iter_mut().for_each(|h| *h = 0.0);
        g_b.iter_mut().for_each(|g| *g = 0.0);
        h_b.iter_mut().for_each(|h| *h = 0.0);
        g_alpha.iter_mut().for_each(|g| *g = 0.0);
        h_alpha.iter_mut().for_each(|h| *h = 0.0);

        // One pass computes the objective at the current point and the
        // gradient / curvature needed to leave it. Fixed loop order keeps the
        // sums reproducible.
        let mut ll = 0.0;
        for j in 0..n_models {
            for i in 0..n_items {
                let a = math::exp(params.alpha[i]);
                let gap = params.theta[j] - params.b[i];
                let z = a * gap;
                let p = math::sigmoid(z);
                let y = f64::from(matrix.get(j, i));
                ll += if y == 1.0 {
                    math::log_sigmoid(z)
                } else {
                    math::log_sigmoid(-z)
                };
                let resid = y - p;
                let w = p * (1.0 - p);
                g_theta[j] += a * resid;
                h_theta[j] += a * a * w;
                g_b[i] -= a * resid;
                h_b[i] += a * a * w;
                g_alpha[i] += resid * z;
                h_alpha[i] += w * z * z;
            }
        }
        let objective = ll + log_prior(&params, config);
        if iteration == 0 {
            initial_objective = objective;
        }
        if !objective.is_finite() {
            return Err(Error::NonFiniteGradient { iteration });
        }
        if objective > best_objective {
            best_objective = objective;
            best.clone_from(&params);
            best_iteration = iteration;
        }
        if iteration == config.iterations {
            break;
        }

        let step = |g: f64, h: f64| (config.learning_rate * g / h).clamp(-1.0, 1.0);
        for j in 0..n_models {
            let g = g_theta[j] - params.theta[j] * prec_theta;
            let h = h_theta[j] + prec_theta;
            if !g.is_finite() {
                return Err(Error::NonFiniteGradient { iteration });
            }
            params.theta[j] += step(g, h);
        }
        for i in 0..n_items {
            let gb = g_b[i] - params.b[i] * prec_b;
            let ga = g_alpha[i] - params.alpha[i] * prec_alpha;
            if !gb.is_finite() || !ga.is_finite() {
                return Err(Error::NonFiniteGradient { iteration });
            }
            params.b[i] += step(gb, h_b[i] + prec_b);
            params.alpha[i] += step(ga, h_alpha[i] + prec_alpha);
        }
    }

    Ok(IrtFit {
        params: best,
        objective: best_objective,
        initial_objective,
        best_iteration,
        constant_items,
    })
}

/// Discriminability `a_i` per item, in item order.
pub fn discriminability_column(params: &IrtParams) -> Vec<f64> {
    (0..params.alpha.len())
        .map(|i| params.discrimination(i))
        .collect()
}
