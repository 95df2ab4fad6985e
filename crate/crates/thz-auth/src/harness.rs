//! Monte Carlo experiment driver: sweeps SNR, false-alarm targets or
//! noise variances over many deployment realizations and aggregates the
//! error probabilities into CSV result tables.
//!
//! Determinism contract: a config plus seed fixes every draw. Realization
//! r derives its own random streams through [`RandomSource::derive`], the
//! realizations run in parallel, and the reduction happens in realization
//! order, so reruns produce byte-identical CSV no matter how many threads
//! rayon uses. Sweep points reuse the same per-realization deployments
//! (common random numbers), which makes paired comparisons across the
//! sweep exact.
//!
//! SNR convention: SNR = 1 / sigma^2 with sigma the measurement-noise
//! deviation in dB of path loss, so sigma = 10^(-SNR_dB / 20).

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::auth::{
    acceptance_probability, analytic_pfa, analytic_pmd, authenticate,
    expected_acceptance_probability, expected_pmd, threshold_for_pfa, AuthConfig, Hypothesis,
};
use crate::channel::{
    absorption_loss_db, spreading_loss_db, AbsorptionModel, AbsorptionTable, LineCatalog, Medium,
};
use crate::error::{Error, Result};
use crate::hmm::{emission_from_errors, viterbi, Hmm};
use crate::numerics::RandomSource;
use crate::scenario::{deploy, ground_truth, sample_slot, GroundTruth, OccupancyModel, SlotTruth};
use crate::txid::{gmm_fit, gmm_identify, ml_identify, EmOptions, GmmFit};

/// Where the absorption coefficient comes from, as named in config files.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbsorptionSource {
    /// CSV table `frequency_hz,k_per_m`.
    Table(PathBuf),
    /// CSV line catalog `gas,isotopologue,center_hz,intensity,width_hz,mixing_ratio`.
    Catalog(PathBuf),
}

/// How a transmitting Eve's path loss is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EveLossMode {
    /// Uniform in dB over [L_min, L_max]; matches the closed-form
    /// expected missed detection.
    UniformInDb,
    /// From the deployed Eve positions.
    Geometric,
}

/// Scenario half of a config file: geometry, occupancy and channel.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub alice_count: usize,
    pub eve_count: usize,
    #[serde(default = "defaults::map_side_m")]
    pub map_side_m: f64,
    #[serde(default = "defaults::d_min_m")]
    pub d_min_m: f64,
    #[serde(default = "defaults::alpha")]
    pub alpha: f64,
    #[serde(default = "defaults::frequency_hz")]
    pub frequency_hz: f64,
    #[serde(default = "defaults::temperature_k")]
    pub temperature_k: f64,
    #[serde(default = "defaults::pressure_atm")]
    pub pressure_atm: f64,
    pub absorption: AbsorptionSource,
}

/// Frequency/distance grid for the path-loss table command.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathLossGrid {
    pub frequencies_hz: Vec<f64>,
    pub distances_m: Vec<f64>,
}

/// One experiment: scenario, sweep axes and Monte Carlo sizes.
///
/// Not every operation reads every field; each `run_*` validates what it
/// needs. Desk-scale defaults keep full sweeps in CI territory; `--full`
/// (or [`ExperimentConfig::apply_full`]) restores the 1e5-realization
/// scale.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    pub seed: u64,
    #[serde(default = "defaults::realizations")]
    pub realizations: usize,
    #[serde(default = "defaults::slots")]
    pub slots: usize,
    #[serde(default)]
    pub snr_db: Vec<f64>,
    #[serde(default)]
    pub pfa_grid: Vec<f64>,
    #[serde(default)]
    pub sigma2_grid: Vec<f64>,
    /// Fixed decision threshold; mutually exclusive with `pfa_target`.
    #[serde(default)]
    pub epsilon_db: Option<f64>,
    /// Per-sigma threshold via epsilon = sigma Q^{-1}(pfa/2).
    #[serde(default)]
    pub pfa_target: Option<f64>,
    #[serde(default = "defaults::eve_loss_mode")]
    pub eve_loss_mode: EveLossMode,
    /// Viterbi block length K.
    #[serde(default = "defaults::block_len")]
    pub block_len: usize,
    #[serde(default = "defaults::train_size")]
    pub train_size: usize,
    #[serde(default = "defaults::test_size")]
    pub test_size: usize,
    /// Hidden-state transition matrix for the HMM comparison; defaults to
    /// memoryless equal-probability transitions.
    #[serde(default)]
    pub hmm_transitions: Option<[[f64; 2]; 2]>,
    #[serde(default)]
    pub pathloss: Option<PathLossGrid>,
    /// Default output path; the CLI's `--out` overrides it.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

mod defaults {
    use super::EveLossMode;

    pub fn map_side_m() -> f64 {
        1.0
    }
    pub fn d_min_m() -> f64 {
        0.001
    }
    pub fn alpha() -> f64 {
        0.5
    }
    pub fn frequency_hz() -> f64 {
        1.0e12
    }
    pub fn temperature_k() -> f64 {
        285.0
    }
    pub fn pressure_atm() -> f64 {
        1.0
    }
    pub fn realizations() -> usize {
        1000
    }
    pub fn slots() -> usize {
        1000
    }
    pub fn eve_loss_mode() -> EveLossMode {
        EveLossMode::UniformInDb
    }
    pub fn block_len() -> usize {
        1000
    }
    pub fn train_size() -> usize {
        10_000
    }
    pub fn test_size() -> usize {
        100_000
    }
}

impl ExperimentConfig {
    /// Parse a JSON config. Relative absorption paths resolve against the
    /// config file's directory.
    pub fn from_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::File {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut self.scenario.absorption {
            AbsorptionSource::Table(p) | AbsorptionSource::Catalog(p) => resolve(p),
        }
    }

    /// Paper-scale realization count.
    pub fn apply_full(&mut self) {
        self.realizations = 100_000;
    }

    fn validate(&self) -> Result<()> {
        if self.scenario.alice_count == 0 {
            return Err(Error::Config("alice_count must be at least 1".into()));
        }
        if self.realizations == 0 {
            return Err(Error::Config("realizations must be at least 1".into()));
        }
        if self.slots == 0 {
            return Err(Error::Config("slots must be at least 1".into()));
        }
        if self.block_len == 0 {
            return Err(Error::Config("block_len must be at least 1".into()));
        }
        if !(self.scenario.alpha > 0.0 && self.scenario.alpha < 1.0) {
            return Err(Error::Config(format!(
                "alpha must lie in (0, 1), got {}",
                self.scenario.alpha
            )));
        }
        if self.epsilon_db.is_some() && self.pfa_target.is_some() {
            return Err(Error::Config(
                "epsilon_db and pfa_target are mutually exclusive".into(),
            ));
        }
        if let Some(eps) = self.epsilon_db {
            if !(eps > 0.0) {
                return Err(Error::Config(format!(
                    "epsilon_db must be positive, got {eps}"
                )));
            }
        }
        if let Some(pfa) = self.pfa_target {
            if !(pfa > 0.0 && pfa < 1.0) {
                return Err(Error::Config(format!(
                    "pfa_target must lie in (0, 1), got {pfa}"
                )));
            }
        }
        Ok(())
    }
}

/// One aggregated estimate of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub sweep: f64,
    pub metric: String,
    pub estimate: f64,
    pub stderr: f64,
    pub n: u64,
}

/// Ordered collection of estimates; serializes to the CSV schema
/// `sweep,metric,estimate,stderr,n`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    fn push(&mut self, sweep: f64, metric: impl Into<String>, estimate: f64, stderr: f64, n: u64) {
        self.rows.push(ResultRow {
            sweep,
            metric: metric.into(),
            estimate,
            stderr,
            n,
        });
    }

    /// Probability estimate with its binomial standard error.
    fn push_binomial(
        &mut self,
        sweep: f64,
        metric: impl Into<String>,
        successes: u64,
        trials: u64,
    ) {
        if trials == 0 {
            return;
        }
        let p = successes as f64 / trials as f64;
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        self.push(sweep, metric, p, se, trials);
    }

    /// Mean of per-realization analytic values with its standard error.
    fn push_mean(&mut self, sweep: f64, metric: impl Into<String>, values: &[f64]) {
        if values.is_empty() {
            return;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let stderr = if values.len() > 1 {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        self.push(sweep, metric, mean, stderr, values.len() as u64);
    }

    pub fn write_csv<W: Write>(&self, mut writer: W) -> Result<()> {
        writeln!(writer, "sweep,metric,estimate,stderr,n")?;
        for row in &self.rows {
            writeln!(
                writer,
                "{},{},{},{},{}",
                row.sweep, row.metric, row.estimate, row.stderr, row.n
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = Vec::new();
        self.write_csv(&mut out)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(out).expect("CSV output is UTF-8")
    }

    pub fn write_csv_path<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let file = std::fs::File::create(path.as_ref()).map_err(|source| Error::File {
            path: path.as_ref().to_path_buf(),
            source,
        })?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Rows matching a metric name, in sweep order.
    pub fn metric(&self, name: &str) -> Vec<&ResultRow> {
        self.rows.iter().filter(|r| r.metric == name).collect()
    }
}

/// noise deviation sigma from an SNR in dB (SNR = 1/sigma^2).
pub fn sigma_from_snr_db(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 20.0)
}

/// A validated experiment with its absorption input loaded.
pub struct Experiment {
    cfg: ExperimentConfig,
    model: AbsorptionModel,
    medium: Medium,
}

/// GMM fits produced by the identification experiment, tagged with their
/// sweep point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FittedModelRecord {
    pub sigma2_db2: f64,
    pub case: String,
    pub realization: usize,
    pub fit: GmmFit,
}

/// Output of [`Experiment::run_txid`].
pub struct TxidRun {
    pub table: ResultTable,
    pub fits: Vec<FittedModelRecord>,
}

impl Experiment {
    pub fn new(cfg: ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let medium = Medium::new(cfg.scenario.temperature_k, cfg.scenario.pressure_atm)?;
        let model = match &cfg.scenario.absorption {
            AbsorptionSource::Table(path) => {
                AbsorptionModel::Table(AbsorptionTable::from_csv_path(path)?)
            }
            AbsorptionSource::Catalog(path) => {
                AbsorptionModel::Catalog(LineCatalog::from_csv_path(path)?)
            }
        };
        // Fail now, not mid-sweep, if the table cannot cover the carrier.
        model.k_at(&medium, cfg.scenario.frequency_hz)?;
        Ok(Self { cfg, model, medium })
    }

    pub fn from_config_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::new(ExperimentConfig::from_path(path)?)
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    fn realize(&self, realization: usize) -> Result<GroundTruth> {
        let mut rng = RandomSource::derive(self.cfg.seed, stream_id(realization, 0));
        let dep = deploy(
            self.cfg.scenario.alice_count,
            self.cfg.scenario.eve_count,
            self.cfg.scenario.map_side_m,
            self.cfg.scenario.d_min_m,
            &mut rng,
        )?;
        ground_truth(
            &dep,
            &self.model,
            &self.medium,
            self.cfg.scenario.frequency_hz,
        )
    }

    fn occupancy(&self) -> Result<OccupancyModel> {
        OccupancyModel::uniform(
            self.cfg.scenario.alice_count,
            self.cfg.scenario.alpha,
            self.cfg.scenario.eve_count,
        )
    }

    /// Draw the loss of a transmitting Eve according to the configured
    /// loss mode.
    fn eve_loss(&self, gt: &GroundTruth, index: usize, rng: &mut RandomSource) -> f64 {
        match self.cfg.eve_loss_mode {
            EveLossMode::Geometric => gt.eve_db[index],
            EveLossMode::UniformInDb => rng.uniform(gt.l_min_db, gt.l_max_db),
        }
    }

    /// Analytic missed detection for one realization, matching the
    /// configured Eve loss mode (closed-form sum, clamped).
    fn analytic_pmd_for(&self, gt: &GroundTruth, epsilon_db: f64, sigma_db: f64) -> Result<f64> {
        match self.cfg.eve_loss_mode {
            EveLossMode::UniformInDb => {
                expected_pmd(&gt.alice_db, epsilon_db, sigma_db, gt.l_min_db, gt.l_max_db)
            }
            EveLossMode::Geometric => analytic_pmd(&gt.alice_db, &gt.eve_db, epsilon_db, sigma_db),
        }
    }

    /// Exact per-slot false-alarm rate: one minus the mean acceptance
    /// probability over the legitimate fingerprints (union of acceptance
    /// intervals, so neighbouring fingerprints are not double counted the
    /// way the closed form does). Used for HMM emission rates.
    fn exact_pfa_for(&self, gt: &GroundTruth, epsilon_db: f64, sigma_db: f64) -> Result<f64> {
        let mut accept = 0.0;
        for &l in &gt.alice_db {
            accept += acceptance_probability(&gt.alice_db, l, epsilon_db, sigma_db)?;
        }
        Ok(1.0 - accept / gt.alice_db.len() as f64)
    }

    /// Exact per-slot acceptance probability of an Eve transmission
    /// (union of acceptance intervals); used for HMM emission rates.
    fn exact_pmd_for(&self, gt: &GroundTruth, epsilon_db: f64, sigma_db: f64) -> Result<f64> {
        match self.cfg.eve_loss_mode {
            EveLossMode::UniformInDb => expected_acceptance_probability(
                &gt.alice_db,
                epsilon_db,
                sigma_db,
                gt.l_min_db,
                gt.l_max_db,
            ),
            EveLossMode::Geometric => {
                let mut total = 0.0;
                for &eve in &gt.eve_db {
                    total += acceptance_probability(&gt.alice_db, eve, epsilon_db, sigma_db)?;
                }
                Ok(total / gt.eve_db.len() as f64)
            }
        }
    }

    fn epsilon_for_sigma(&self, sigma_db: f64) -> Result<f64> {
        match (self.cfg.epsilon_db, self.cfg.pfa_target) {
            (Some(eps), _) => Ok(eps),
            (None, Some(pfa)) => threshold_for_pfa(pfa, sigma_db),
            (None, None) => threshold_for_pfa(0.2, sigma_db),
        }
    }

    /// Path-loss table over the configured frequency/distance grid.
    /// CSV schema: `frequency_hz,distance_m,spreading_db,absorption_db,path_loss_db`.
    pub fn run_pathloss<W: Write>(&self, mut writer: W) -> Result<()> {
        let grid = self.cfg.pathloss.as_ref().ok_or_else(|| {
            Error::Config("pathloss requires a `pathloss` grid in the config".into())
        })?;
        if grid.frequencies_hz.is_empty() || grid.distances_m.is_empty() {
            return Err(Error::Config("pathloss grid must be non-empty".into()));
        }
        writeln!(
            writer,
            "frequency_hz,distance_m,spreading_db,absorption_db,path_loss_db"
        )?;
        for &f in &grid.frequencies_hz {
            let k = self.model.k_at(&self.medium, f)?;
            for &d in &grid.distances_m {
                let spread = spreading_loss_db(f, d)?;
                let absorb = absorption_loss_db(k, d)?;
                writeln!(writer, "{f},{d},{spread},{absorb},{}", spread + absorb)?;
            }
        }
        Ok(())
    }

    /// Empirical and analytic false-alarm/missed-detection rates against
    /// SNR. Missed-detection metrics are omitted when no Eve exists.
    pub fn run_error_vs_snr(&self) -> Result<ResultTable> {
        if self.cfg.snr_db.is_empty() {
            return Err(Error::Config(
                "error-vs-snr requires a non-empty snr_db grid".into(),
            ));
        }
        let occ = self.occupancy()?;
        let mut table = ResultTable::default();
        for (snr_idx, &snr_db) in self.cfg.snr_db.iter().enumerate() {
            let sigma = sigma_from_snr_db(snr_db);
            let epsilon = self.epsilon_for_sigma(sigma)?;
            let auth_cfg = AuthConfig::new(sigma, epsilon)?;

            #[derive(Default)]
            struct Counts {
                alice_slots: u64,
                false_alarms: u64,
                eve_slots: u64,
                missed: u64,
                pmd_analytic: f64,
            }

            let per: Vec<Counts> = (0..self.cfg.realizations)
                .into_par_iter()
                .map(|r| -> Result<Counts> {
                    let gt = self.realize(r)?;
                    let mut rng =
                        RandomSource::derive(self.cfg.seed, stream_id(r, 1 + snr_idx as u64));
                    let mut counts = Counts::default();
                    for _ in 0..self.cfg.slots {
                        let truth = sample_slot(&occ, &mut rng);
                        let loss = match truth {
                            SlotTruth::Alice(i) => gt.alice_db[i],
                            SlotTruth::Eve(j) => self.eve_loss(&gt, j, &mut rng),
                        };
                        let z = loss + sigma * rng.standard_normal();
                        let decision = authenticate(z, &gt.alice_db, &auth_cfg)?;
                        match truth {
                            SlotTruth::Alice(_) => {
                                counts.alice_slots += 1;
                                if decision.hypothesis == Hypothesis::Impersonation {
                                    counts.false_alarms += 1;
                                }
                            }
                            SlotTruth::Eve(_) => {
                                counts.eve_slots += 1;
                                if decision.hypothesis == Hypothesis::NoImpersonation {
                                    counts.missed += 1;
                                }
                            }
                        }
                    }
                    if self.cfg.scenario.eve_count > 0 {
                        counts.pmd_analytic = self.analytic_pmd_for(&gt, epsilon, sigma)?;
                    }
                    Ok(counts)
                })
                .collect::<Result<Vec<_>>>()?;

            let alice_slots: u64 = per.iter().map(|c| c.alice_slots).sum();
            let false_alarms: u64 = per.iter().map(|c| c.false_alarms).sum();
            let eve_slots: u64 = per.iter().map(|c| c.eve_slots).sum();
            let missed: u64 = per.iter().map(|c| c.missed).sum();

            table.push_binomial(snr_db, "pfa_empirical", false_alarms, alice_slots);
            table.push(
                snr_db,
                "pfa_analytic",
                analytic_pfa(epsilon, sigma)?,
                0.0,
                self.cfg.realizations as u64,
            );
            if self.cfg.scenario.eve_count > 0 {
                table.push_binomial(snr_db, "pmd_empirical", missed, eve_slots);
                let analytic: Vec<f64> = per.iter().map(|c| c.pmd_analytic).collect();
                table.push_mean(snr_db, "pmd_analytic", &analytic);
            }
        }
        Ok(table)
    }

    /// ROC families: sweep the false-alarm target, derive the threshold
    /// per point and measure detection probability, misclassification and
    /// the realized false-alarm rate. Within one realization every sweep
    /// point sees the same measurements, so detection is exactly monotone
    /// and misclassification exactly constant across the sweep.
    pub fn run_roc(&self) -> Result<ResultTable> {
        if self.cfg.pfa_grid.is_empty() {
            return Err(Error::Config("roc requires a non-empty pfa_grid".into()));
        }
        if self.cfg.snr_db.is_empty() {
            return Err(Error::Config("roc requires a non-empty snr_db grid".into()));
        }
        if self.cfg.pfa_grid.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
            return Err(Error::Config("pfa grid values must lie in (0, 1)".into()));
        }
        let occ = self.occupancy()?;
        let mut table = ResultTable::default();
        for (snr_idx, &snr_db) in self.cfg.snr_db.iter().enumerate() {
            let sigma = sigma_from_snr_db(snr_db);
            let epsilons: Vec<f64> = self
                .cfg
                .pfa_grid
                .iter()
                .map(|&pfa| threshold_for_pfa(pfa, sigma))
                .collect::<Result<Vec<_>>>()?;

            #[derive(Clone, Default)]
            struct Counts {
                alice_slots: u64,
                eve_slots: u64,
                misclassified: u64,
                false_alarms: Vec<u64>,
                detections: Vec<u64>,
            }

            let per: Vec<Counts> = (0..self.cfg.realizations)
                .into_par_iter()
                .map(|r| -> Result<Counts> {
                    let gt = self.realize(r)?;
                    let mut rng =
                        RandomSource::derive(self.cfg.seed, stream_id(r, 1 + snr_idx as u64));
                    let mut counts = Counts {
                        false_alarms: vec![0; epsilons.len()],
                        detections: vec![0; epsilons.len()],
                        ..Default::default()
                    };
                    for _ in 0..self.cfg.slots {
                        let truth = sample_slot(&occ, &mut rng);
                        let loss = match truth {
                            SlotTruth::Alice(i) => gt.alice_db[i],
                            SlotTruth::Eve(j) => self.eve_loss(&gt, j, &mut rng),
                        };
                        let z = loss + sigma * rng.standard_normal();
                        // The statistic does not depend on the threshold;
                        // evaluate it once and compare against every
                        // epsilon in the sweep.
                        let statistic = gt
                            .alice_db
                            .iter()
                            .map(|&l| (z - l).abs())
                            .fold(f64::INFINITY, f64::min);
                        match truth {
                            SlotTruth::Alice(i) => {
                                counts.alice_slots += 1;
                                if ml_identify(z, &gt.alice_db)? != i {
                                    counts.misclassified += 1;
                                }
                                for (e, &eps) in epsilons.iter().enumerate() {
                                    if statistic >= eps {
                                        counts.false_alarms[e] += 1;
                                    }
                                }
                            }
                            SlotTruth::Eve(_) => {
                                counts.eve_slots += 1;
                                for (e, &eps) in epsilons.iter().enumerate() {
                                    if statistic >= eps {
                                        counts.detections[e] += 1;
                                    }
                                }
                            }
                        }
                    }
                    Ok(counts)
                })
                .collect::<Result<Vec<_>>>()?;

            let alice_slots: u64 = per.iter().map(|c| c.alice_slots).sum();
            let eve_slots: u64 = per.iter().map(|c| c.eve_slots).sum();
            let misclassified: u64 = per.iter().map(|c| c.misclassified).sum();
            for (e, &pfa) in self.cfg.pfa_grid.iter().enumerate() {
                let false_alarms: u64 = per.iter().map(|c| c.false_alarms[e]).sum();
                let detections: u64 = per.iter().map(|c| c.detections[e]).sum();
                table.push_binomial(pfa, format!("pd_snr{snr_db}"), detections, eve_slots);
                table.push_binomial(pfa, format!("pmc_snr{snr_db}"), misclassified, alice_slots);
                table.push_binomial(
                    pfa,
                    format!("pfa_empirical_snr{snr_db}"),
                    false_alarms,
                    alice_slots,
                );
            }
        }
        Ok(table)
    }

    /// Hidden-state sequence decoding: per SNR, generate hidden
    /// impersonation states, push measurements through the per-slot test
    /// and compare raw test accuracy against Viterbi-decoded accuracy.
    pub fn run_hmm_compare(&self) -> Result<ResultTable> {
        if self.cfg.snr_db.is_empty() {
            return Err(Error::Config(
                "hmm-compare requires a non-empty snr_db grid".into(),
            ));
        }
        if self.cfg.scenario.eve_count == 0 {
            return Err(Error::Config(
                "hmm-compare requires at least one Eve node".into(),
            ));
        }
        let transition = self
            .cfg
            .hmm_transitions
            .unwrap_or(Hmm::uniform_transitions());
        let initial = Hmm::start_clear();
        let epsilon = self.cfg.epsilon_db.unwrap_or(1.0);
        let occ = self.occupancy()?;
        let mut table = ResultTable::default();

        for (snr_idx, &snr_db) in self.cfg.snr_db.iter().enumerate() {
            let sigma = sigma_from_snr_db(snr_db);
            let auth_cfg = AuthConfig::new(sigma, epsilon)?;

            #[derive(Default)]
            struct Counts {
                slots: u64,
                ht_correct: u64,
                hmm_correct: u64,
            }

            let per: Vec<Counts> = (0..self.cfg.realizations)
                .into_par_iter()
                .map(|r| -> Result<Counts> {
                    let gt = self.realize(r)?;
                    let mut rng =
                        RandomSource::derive(self.cfg.seed, stream_id(r, 1 + snr_idx as u64));

                    // Hidden impersonation states from the transition
                    // matrix, started in the clear state.
                    let mut states = Vec::with_capacity(self.cfg.slots);
                    let mut state = if initial[0] >= 1.0 { 0u8 } else { 1u8 };
                    for _ in 0..self.cfg.slots {
                        states.push(state);
                        let stay = transition[state as usize][state as usize];
                        if !rng.bernoulli(stay) {
                            state = 1 - state;
                        }
                    }

                    // Per-slot measurements and raw test outputs.
                    let mut observations = Vec::with_capacity(self.cfg.slots);
                    for &s in &states {
                        let loss = if s == 0 {
                            let i = rng.categorical(occ.priors());
                            gt.alice_db[i]
                        } else {
                            let j = rng.index(self.cfg.scenario.eve_count);
                            self.eve_loss(&gt, j, &mut rng)
                        };
                        let z = loss + sigma * rng.standard_normal();
                        let decision = authenticate(z, &gt.alice_db, &auth_cfg)?;
                        observations.push((decision.hypothesis == Hypothesis::Impersonation) as u8);
                    }

                    // Emission rates from the exact per-slot error
                    // probabilities of this realization's fingerprints.
                    // The closed-form rates overcount overlapping
                    // acceptance intervals and would mis-tune the decoder
                    // whenever fingerprints sit closer than 2 epsilon.
                    let pfa = self
                        .exact_pfa_for(&gt, epsilon, sigma)?
                        .clamp(1e-12, 1.0 - 1e-12);
                    let pmd = self
                        .exact_pmd_for(&gt, epsilon, sigma)?
                        .clamp(1e-12, 1.0 - 1e-12);
                    let hmm = Hmm::new(transition, emission_from_errors(pfa, pmd)?, initial)?;

                    let mut decoded = Vec::with_capacity(self.cfg.slots);
                    for block in observations.chunks(self.cfg.block_len) {
                        decoded.extend(viterbi(block, &hmm)?);
                    }

                    let mut counts = Counts {
                        slots: self.cfg.slots as u64,
                        ..Default::default()
                    };
                    for k in 0..self.cfg.slots {
                        if observations[k] == states[k] {
                            counts.ht_correct += 1;
                        }
                        if decoded[k] == states[k] {
                            counts.hmm_correct += 1;
                        }
                    }
                    Ok(counts)
                })
                .collect::<Result<Vec<_>>>()?;

            let slots: u64 = per.iter().map(|c| c.slots).sum();
            let ht: u64 = per.iter().map(|c| c.ht_correct).sum();
            let hmm: u64 = per.iter().map(|c| c.hmm_correct).sum();
            table.push_binomial(snr_db, "accuracy_ht", ht, slots);
            table.push_binomial(snr_db, "accuracy_hmm", hmm, slots);
        }
        Ok(table)
    }

    /// Transmitter identification: nearest fingerprint vs GMM posterior,
    /// swept over the measurement-noise variance, with clean and noisy
    /// reference fingerprints.
    pub fn run_txid(&self) -> Result<TxidRun> {
        if self.cfg.sigma2_grid.is_empty() {
            return Err(Error::Config(
                "txid requires a non-empty sigma2_grid".into(),
            ));
        }
        if self
            .cfg
            .sigma2_grid
            .iter()
            .any(|&v| !(v > 0.0) || !v.is_finite())
        {
            return Err(Error::Config("sigma2 grid values must be positive".into()));
        }
        let m = self.cfg.scenario.alice_count;
        let priors = vec![1.0 / m as f64; m];
        let mut table = ResultTable::default();
        let mut fits = Vec::new();

        #[derive(Default)]
        struct Counts {
            tests: u64,
            ml_wrong_clean: u64,
            gmm_wrong_clean: u64,
            ml_wrong_noisy: u64,
            gmm_wrong_noisy: u64,
        }

        for (s_idx, &sigma2) in self.cfg.sigma2_grid.iter().enumerate() {
            let sigma = sigma2.sqrt();

            let per: Vec<(Counts, Vec<FittedModelRecord>)> = (0..self.cfg.realizations)
                .into_par_iter()
                .map(|r| -> Result<(Counts, Vec<FittedModelRecord>)> {
                    let gt = self.realize(r)?;
                    let node_rank = ranks(&gt.alice_db);
                    let mut counts = Counts::default();
                    let mut records = Vec::with_capacity(2);

                    for (case_idx, case) in ["clean", "noisy"].into_iter().enumerate() {
                        let sub = 1 + 4 * s_idx as u64 + 2 * case_idx as u64;
                        let mut train_rng = RandomSource::derive(self.cfg.seed, stream_id(r, sub));
                        let mut test_rng =
                            RandomSource::derive(self.cfg.seed, stream_id(r, sub + 1));

                        // Training data: raw measurements from legitimate
                        // nodes (labels hidden from the fitter).
                        let samples: Vec<f64> = (0..self.cfg.train_size)
                            .map(|_| {
                                let i = train_rng.categorical(&priors);
                                gt.alice_db[i] + sigma * train_rng.standard_normal()
                            })
                            .collect();
                        let mut fit = gmm_fit(&samples, m, &EmOptions::default())?;
                        fit.seed = Some(self.cfg.seed);
                        let component_rank = ranks(&fit.model.means);

                        // Reference fingerprints for the nearest-neighbour
                        // route: exact, or themselves measured with noise.
                        let references: Vec<f64> = match case {
                            "clean" => gt.alice_db.clone(),
                            _ => gt
                                .alice_db
                                .iter()
                                .map(|&l| l + sigma * train_rng.standard_normal())
                                .collect(),
                        };

                        let mut ml_wrong = 0u64;
                        let mut gmm_wrong = 0u64;
                        for _ in 0..self.cfg.test_size {
                            let i = test_rng.categorical(&priors);
                            let z = gt.alice_db[i] + sigma * test_rng.standard_normal();
                            if ml_identify(z, &references)? != i {
                                ml_wrong += 1;
                            }
                            let q = gmm_identify(z, &fit.model);
                            if component_rank[q] != node_rank[i] {
                                gmm_wrong += 1;
                            }
                        }
                        match case {
                            "clean" => {
                                counts.ml_wrong_clean = ml_wrong;
                                counts.gmm_wrong_clean = gmm_wrong;
                            }
                            _ => {
                                counts.ml_wrong_noisy = ml_wrong;
                                counts.gmm_wrong_noisy = gmm_wrong;
                            }
                        }
                        records.push(FittedModelRecord {
                            sigma2_db2: sigma2,
                            case: case.into(),
                            realization: r,
                            fit,
                        });
                    }
                    counts.tests = self.cfg.test_size as u64;
                    Ok((counts, records))
                })
                .collect::<Result<Vec<_>>>()?;

            let tests: u64 = per.iter().map(|(c, _)| c.tests).sum();
            let sum = |f: &dyn Fn(&Counts) -> u64| per.iter().map(|(c, _)| f(c)).sum::<u64>();
            table.push_binomial(sigma2, "pmc_ml_clean", sum(&|c| c.ml_wrong_clean), tests);
            table.push_binomial(sigma2, "pmc_gmm_clean", sum(&|c| c.gmm_wrong_clean), tests);
            table.push_binomial(sigma2, "pmc_ml_noisy", sum(&|c| c.ml_wrong_noisy), tests);
            table.push_binomial(sigma2, "pmc_gmm_noisy", sum(&|c| c.gmm_wrong_noisy), tests);
            for (_, records) in per {
                fits.extend(records);
            }
        }
        Ok(TxidRun { table, fits })
    }
}

/// Independent ChaCha stream for sub-experiment `sub` of a realization.
fn stream_id(realization: usize, sub: u64) -> u64 {
    ((realization as u64) << 20) | sub
}

/// Rank of each entry in ascending order; equal values rank by index.
fn ranks(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap().then(a.cmp(&b)));
    let mut rank = vec![0; values.len()];
    for (pos, &idx) in order.iter().enumerate() {
        rank[idx] = pos;
    }
    rank
}
