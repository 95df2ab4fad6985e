//! Transmitter identification: nearest-fingerprint classification with
//! its closed-form misclassification probability, and a 1-D Gaussian
//! mixture model fitted by expectation-maximization.
//!
//! Nearest-fingerprint (ML) identification assigns a measurement to the
//! closest known fingerprint. With fingerprints sorted increasingly, the
//! decision regions are the midpoint intervals, and the probability of
//! attributing Alice i's transmission to somebody else is
//!
//!   Pmc|i = 1 - [Q((low_i - l_i)/sigma) - Q((up_i - l_i)/sigma)]
//!
//! with low_i, up_i the midpoints toward the neighbours (the outermost
//! regions extend to the path-loss bounds L_min, L_max). The total Pmc
//! weights the per-node terms by the transmit priors.
//!
//! The GMM route needs no ground-truth fingerprints at all: it fits Q
//! components to raw path-loss measurements by EM and identifies a
//! measurement with the component of highest posterior. Only legitimate
//! nodes produce training data, so the mixture is fitted with one
//! component per legitimate node.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{gaussian_log_pdf, q_function};

/// Nearest-fingerprint classification: argmin |z - l_i|, ties to the
/// lowest index.
pub fn ml_identify(z_db: f64, fingerprints_db: &[f64]) -> Result<usize> {
    if fingerprints_db.is_empty() {
        return Err(Error::InvalidParameter(
            "identification requires a non-empty fingerprint vector".into(),
        ));
    }
    let mut best = 0;
    let mut best_distance = f64::INFINITY;
    for (i, &l) in fingerprints_db.iter().enumerate() {
        let distance = (z_db - l).abs();
        if distance < best_distance {
            best_distance = distance;
            best = i;
        }
    }
    Ok(best)
}

/// Fingerprints sorted increasingly with their decision-region edges.
///
/// Duplicate fingerprints (possible only in crafted inputs) are merged
/// and their prior mass pooled; the midpoints then interleave strictly:
/// low_i <= l_i <= up_i, with low_1 = L_min and up_M = L_max.
#[derive(Debug, Clone)]
pub struct SortedFingerprints {
    values_db: Vec<f64>,
    priors: Vec<f64>,
    lower_db: Vec<f64>,
    upper_db: Vec<f64>,
    pub l_min_db: f64,
    pub l_max_db: f64,
}

impl SortedFingerprints {
    /// Sort fingerprints, merge duplicates (pooling their prior mass) and
    /// precompute the midpoint decision regions. `priors` defaults to
    /// uniform 1/M when absent.
    pub fn new(
        fingerprints_db: &[f64],
        priors: Option<&[f64]>,
        l_min_db: f64,
        l_max_db: f64,
    ) -> Result<Self> {
        if fingerprints_db.is_empty() {
            return Err(Error::InvalidParameter(
                "sorted fingerprints require at least one entry".into(),
            ));
        }
        if !(l_max_db > l_min_db) {
            return Err(Error::InvalidParameter(format!(
                "fingerprint bounds must satisfy l_min < l_max, got [{l_min_db}, {l_max_db}]"
            )));
        }
        if fingerprints_db.iter().any(|l| !l.is_finite()) {
            return Err(Error::InvalidParameter(
                "fingerprints must be finite".into(),
            ));
        }
        let m = fingerprints_db.len();
        let uniform = vec![1.0 / m as f64; m];
        let priors = match priors {
            Some(p) => {
                if p.len() != m {
                    return Err(Error::InvalidParameter(format!(
                        "prior vector length {} does not match fingerprint count {m}",
                        p.len()
                    )));
                }
                let total: f64 = p.iter().sum();
                if (total - 1.0).abs() > 1e-9 || p.iter().any(|&x| !(x >= 0.0)) {
                    return Err(Error::InvalidParameter(
                        "priors must be non-negative and sum to 1".into(),
                    ));
                }
                p.to_vec()
            }
            None => uniform,
        };

        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| fingerprints_db[a].partial_cmp(&fingerprints_db[b]).unwrap());

        let mut values_db: Vec<f64> = Vec::with_capacity(m);
        let mut merged_priors: Vec<f64> = Vec::with_capacity(m);
        for &i in &order {
            let l = fingerprints_db[i];
            match values_db.last() {
                Some(&last) if last == l => {
                    *merged_priors.last_mut().unwrap() += priors[i];
                }
                _ => {
                    values_db.push(l);
                    merged_priors.push(priors[i]);
                }
            }
        }

        let n = values_db.len();
        let mut lower_db = Vec::with_capacity(n);
        let mut upper_db = Vec::with_capacity(n);
        for i in 0..n {
            lower_db.push(if i == 0 {
                l_min_db
            } else {
                0.5 * (values_db[i - 1] + values_db[i])
            });
            upper_db.push(if i == n - 1 {
                l_max_db
            } else {
                0.5 * (values_db[i] + values_db[i + 1])
            });
        }
        Ok(Self {
            values_db,
            priors: merged_priors,
            lower_db,
            upper_db,
            l_min_db,
            l_max_db,
        })
    }

    pub fn values_db(&self) -> &[f64] {
        &self.values_db
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn decision_region(&self, i: usize) -> (f64, f64) {
        (self.lower_db[i], self.upper_db[i])
    }
}

/// Closed-form misclassification probability of nearest-fingerprint
/// identification under N(0, sigma^2) measurement noise.
pub fn analytic_pmc(sorted: &SortedFingerprints, sigma_db: f64) -> Result<f64> {
    if !(sigma_db > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "noise deviation must be positive, got {sigma_db}"
        )));
    }
    let mut pmc = 0.0;
    for (i, (&l, &prior)) in sorted
        .values_db
        .iter()
        .zip(sorted.priors.iter())
        .enumerate()
    {
        let (low, up) = sorted.decision_region(i);
        let hit = q_function((low - l) / sigma_db) - q_function((up - l) / sigma_db);
        pmc += prior * (1.0 - hit);
    }
    Ok(pmc.clamp(0.0, 1.0))
}

/// One-dimensional Gaussian mixture: weights on the simplex, means in dB
/// and variances in dB^2.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GmmModel {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
}

impl GmmModel {
    pub fn component_count(&self) -> usize {
        self.weights.len()
    }

    /// Total log-likelihood of `samples` under this mixture.
    pub fn log_likelihood(&self, samples: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for &x in samples {
            total += self.log_density(x)?;
        }
        Ok(total)
    }

    fn log_density(&self, x: f64) -> Result<f64> {
        let mut terms = Vec::with_capacity(self.weights.len());
        for q in 0..self.weights.len() {
            let w = self.weights[q];
            if w > 0.0 {
                terms.push(w.ln() + gaussian_log_pdf(x, self.means[q], self.variances[q])?);
            }
        }
        if terms.is_empty() {
            return Err(Error::Numerical("mixture has no positive weights".into()));
        }
        Ok(log_sum_exp(&terms))
    }

    /// Posterior responsibilities of each component for one sample.
    pub fn responsibilities(&self, x: f64) -> Result<Vec<f64>> {
        let q = self.weights.len();
        let mut log_terms = vec![f64::NEG_INFINITY; q];
        for (i, term) in log_terms.iter_mut().enumerate() {
            if self.weights[i] > 0.0 {
                *term =
                    self.weights[i].ln() + gaussian_log_pdf(x, self.means[i], self.variances[i])?;
            }
        }
        let norm = log_sum_exp(&log_terms);
        if norm == f64::NEG_INFINITY {
            return Err(Error::Numerical(
                "sample has zero density under every component".into(),
            ));
        }
        Ok(log_terms.iter().map(|&t| (t - norm).exp()).collect())
    }
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + terms.iter().map(|&t| (t - max).exp()).sum::<f64>().ln()
}

/// How the EM fitter chooses its starting point.
#[derive(Debug, Clone, Default)]
pub enum GmmInit {
    /// Means at evenly spaced sample quantiles, variances at the global
    /// sample variance, uniform weights. Deterministic given the data.
    #[default]
    Quantile,
    /// Start from an explicit model (weights/means/variances).
    Explicit(GmmModel),
}

/// EM fitting options.
#[derive(Debug, Clone)]
pub struct EmOptions {
    pub init: GmmInit,
    /// Stop once the log-likelihood gain drops below this.
    pub tol: f64,
    pub max_iters: usize,
    /// Lower bound on component variances, dB^2.
    pub variance_floor: f64,
}

impl Default for EmOptions {
    fn default() -> Self {
        Self {
            init: GmmInit::Quantile,
            tol: 1e-8,
            max_iters: 500,
            variance_floor: 1e-6,
        }
    }
}

/// A fitted mixture plus how the fit went.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GmmFit {
    pub model: GmmModel,
    pub iterations: usize,
    pub final_log_likelihood: f64,
    /// Seed of the data-generating stream, when the caller tracks one.
    pub seed: Option<u64>,
}

/// Fit a `components`-component mixture to `samples` by EM.
///
/// Alternates posterior responsibilities (E step) with weight, mean and
/// variance updates (M step) until the log-likelihood gain falls below
/// `opts.tol` or `opts.max_iters` is reached. The log-likelihood never
/// decreases across iterations; variances are floored at
/// `opts.variance_floor` to prevent component collapse on duplicated
/// samples.
pub fn gmm_fit(samples: &[f64], components: usize, opts: &EmOptions) -> Result<GmmFit> {
    if components == 0 {
        return Err(Error::InvalidParameter(
            "mixture needs at least one component".into(),
        ));
    }
    if samples.len() < components {
        return Err(Error::InvalidParameter(format!(
            "EM requires at least as many samples ({}) as components ({components})",
            samples.len()
        )));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("samples must be finite".into()));
    }

    let n = samples.len();
    let mut model = match &opts.init {
        GmmInit::Explicit(m) => {
            if m.weights.len() != components
                || m.means.len() != components
                || m.variances.len() != components
            {
                return Err(Error::InvalidParameter(
                    "explicit initial model has the wrong component count".into(),
                ));
            }
            let mut m = m.clone();
            for v in &mut m.variances {
                *v = v.max(opts.variance_floor);
            }
            m
        }
        GmmInit::Quantile => quantile_init(samples, components, opts.variance_floor),
    };

    let mut log_likelihood = model.log_likelihood(samples)?;
    let mut responsibilities = vec![0.0; n * components];

    for iteration in 1..=opts.max_iters {
        // E step.
        for (m, &x) in samples.iter().enumerate() {
            let r = model.responsibilities(x)?;
            responsibilities[m * components..(m + 1) * components].copy_from_slice(&r);
        }

        // M step.
        for q in 0..components {
            let mass: f64 = (0..n).map(|m| responsibilities[m * components + q]).sum();
            if mass < 1e-300 {
                return Err(Error::Numerical(format!(
                    "component {q} lost all responsibility mass"
                )));
            }
            let mean: f64 = (0..n)
                .map(|m| responsibilities[m * components + q] * samples[m])
                .sum::<f64>()
                / mass;
            let variance: f64 = (0..n)
                .map(|m| {
                    let d = samples[m] - mean;
                    responsibilities[m * components + q] * d * d
                })
                .sum::<f64>()
                / mass;
            model.weights[q] = mass / n as f64;
            model.means[q] = mean;
            model.variances[q] = variance.max(opts.variance_floor);
        }

        let next = model.log_likelihood(samples)?;
        let gain = next - log_likelihood;
        log_likelihood = next;
        if gain.abs() < opts.tol {
            return Ok(GmmFit {
                model,
                iterations: iteration,
                final_log_likelihood: log_likelihood,
                seed: None,
            });
        }
    }
    Ok(GmmFit {
        model,
        iterations: opts.max_iters,
        final_log_likelihood: log_likelihood,
        seed: None,
    })
}

fn quantile_init(samples: &[f64], components: usize, variance_floor: f64) -> GmmModel {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let mean: f64 = sorted.iter().sum::<f64>() / n as f64;
    let variance: f64 = sorted.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    let means: Vec<f64> = (0..components)
        .map(|q| {
            // Quantiles at (q + 1/2) / components.
            let rank = ((q as f64 + 0.5) / components as f64 * n as f64) as usize;
            sorted[rank.min(n - 1)]
        })
        .collect();
    // Within-component variance estimate: mean squared distance to the
    // nearest quantile mean. Seeding every component with the full data
    // variance smears the responsibilities when clusters sit far apart
    // and EM stalls on a merged configuration; the nearest-mean estimate
    // starts the components tight. For one component it reduces to the
    // plain biased sample variance.
    let variance = if components == 1 {
        variance
    } else {
        sorted
            .iter()
            .map(|&x| {
                means
                    .iter()
                    .map(|&m| (x - m) * (x - m))
                    .fold(f64::INFINITY, f64::min)
            })
            .sum::<f64>()
            / n as f64
    };
    GmmModel {
        weights: vec![1.0 / components as f64; components],
        means,
        variances: vec![variance.max(variance_floor); components],
    }
}

/// Identify a measurement with the mixture component of highest
/// posterior: argmax of weight * density, ties to the lowest index.
pub fn gmm_identify(z_db: f64, model: &GmmModel) -> usize {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for q in 0..model.component_count() {
        if model.weights[q] <= 0.0 {
            continue;
        }
        let score = model.weights[q].ln()
            + gaussian_log_pdf(z_db, model.means[q], model.variances[q])
                .unwrap_or(f64::NEG_INFINITY);
        if score > best_score {
            best_score = score;
            best = q;
        }
    }
    best
}
