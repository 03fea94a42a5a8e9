//! Desk-scale experiment harness: synthetic ictal/interictal data, a random
//! forest classifier, and ROC/AUC scoring.

mod forest;

pub use forest::{predict_scores, train_forest, ForestConfig, RandomForest};

use std::time::Instant;

use ndarray::Array2;
use rand::RngExt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::pipeline::{extract_batch, PipelineConfig};
use crate::signal::SpatiotemporalSignal;

/// Feature rows with binary labels.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub features: Array2<f64>,
    pub labels: Vec<u8>,
    pub names: Vec<String>,
}

impl LabeledDataset {
    pub fn new(features: Array2<f64>, labels: Vec<u8>, names: Vec<String>) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::Dimension(format!(
                "{} feature rows vs {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if names.len() != features.ncols() {
            return Err(Error::Dimension(format!(
                "{} names vs {} feature columns",
                names.len(),
                features.ncols()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::Value(format!("labels must be 0 or 1, got {bad}")));
        }
        Ok(Self {
            features,
            labels,
            names,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Generates `n_per_class` interictal (label 0) and ictal (label 1) samples.
///
/// Interictal samples are independent unit-variance Gaussian noise per
/// channel. Ictal samples add a shared 4-8 Hz oscillation of amplitude 2 to
/// every channel — the cross-channel synchronization that distinguishes the
/// classes. Deterministic given the seed.
pub fn generate_synthetic(
    n_per_class: usize,
    channels: usize,
    samples: usize,
    sample_rate_hz: f64,
    seed: u64,
) -> Vec<(SpatiotemporalSignal, u8)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(2 * n_per_class);
    for label in [0u8, 1u8] {
        for _ in 0..n_per_class {
            let mut data = Array2::zeros((channels, samples));
            for i in 0..channels {
                for k in 0..samples {
                    data[[i, k]] = rng.sample::<f64, _>(StandardNormal);
                }
            }
            if label == 1 {
                let freq = rng.random_range(4.0..8.0);
                let phase = rng.random_range(0.0..std::f64::consts::TAU);
                for k in 0..samples {
                    let tone = 2.0
                        * (std::f64::consts::TAU * freq * k as f64 / sample_rate_hz + phase).sin();
                    for i in 0..channels {
                        data[[i, k]] += tone;
                    }
                }
            }
            let signal = SpatiotemporalSignal::new(data, sample_rate_hz)
                .expect("generated data is finite and correctly shaped");
            out.push((signal, label));
        }
    }
    out
}

/// Area under the ROC curve via the Mann-Whitney statistic: concordant
/// score pairs count 1, ties count 1/2, normalized by `n_pos * n_neg`.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Value(
            "AUC needs both classes present".to_string(),
        ));
    }
    if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::Value(format!("scores must be finite, got {bad}")));
    }

    // Rank-sum with average ranks over tied groups.
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_pos_sum = 0.0;
    let mut at = 0;
    while at < order.len() {
        let mut end = at + 1;
        while end < order.len() && scores[order[end]] == scores[order[at]] {
            end += 1;
        }
        // 1-based ranks at..end share the average rank
        let avg_rank = (at + 1 + end) as f64 / 2.0;
        for &idx in &order[at..end] {
            if labels[idx] == 1 {
                rank_pos_sum += avg_rank;
            }
        }
        at = end;
    }
    let u = rank_pos_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Data-generation and protocol knobs of [`run_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentParams {
    pub n_per_class: usize,
    pub channels: usize,
    pub samples: usize,
    pub sample_rate_hz: f64,
    /// Shuffle labels before the split — a null-model control.
    pub shuffle_labels: bool,
    /// Keep only the `q` highest-variance features (measured on the training
    /// half). `None` keeps everything.
    pub feature_select_top: Option<usize>,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        Self {
            n_per_class: 100,
            channels: 8,
            samples: 400,
            sample_rate_hz: 400.0,
            shuffle_labels: false,
            feature_select_top: None,
        }
    }
}

/// Wall-clock seconds per stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageTimings {
    pub generate_s: f64,
    pub extract_s: f64,
    pub train_s: f64,
    pub predict_s: f64,
    pub total_s: f64,
}

/// The outcome of one experiment run. Every field except `timings` is a
/// pure function of the seed and configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub seed: u64,
    pub config_hash: String,
    pub auc: f64,
    pub n_features: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub timings: StageTimings,
}

impl ExperimentReport {
    pub fn csv_header() -> &'static str {
        "seed,config_hash,auc,n_features,n_train,n_test,generate_s,extract_s,train_s,predict_s,total_s"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{:.3},{:.3},{:.3},{:.3},{:.3}",
            self.seed,
            self.config_hash,
            self.auc,
            self.n_features,
            self.n_train,
            self.n_test,
            self.timings.generate_s,
            self.timings.extract_s,
            self.timings.train_s,
            self.timings.predict_s,
            self.timings.total_s,
        )
    }
}

fn mix_seed(base: u64, salt: u64) -> u64 {
    let mut z = base ^ salt.wrapping_mul(0xd6e8feb86659fd93);
    z = (z ^ (z >> 32)).wrapping_mul(0xd6e8feb86659fd93);
    z ^ (z >> 32)
}

/// Class-stratified half/half split: per class, a seeded shuffle sends the
/// first ceil(half) to training and the rest to testing.
fn stratified_split(labels: &[u8], seed: u64) -> (Vec<usize>, Vec<usize>) {
    use rand::seq::SliceRandom;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [0u8, 1u8] {
        let mut idx: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect();
        idx.shuffle(&mut rng);
        let cut = idx.len().div_ceil(2);
        train.extend_from_slice(&idx[..cut]);
        test.extend_from_slice(&idx[cut..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Indices of the `q` highest-variance feature columns (ties keep the lower
/// index), measured over the given rows.
fn variance_rank_selection(features: &Array2<f64>, rows: &[usize], q: usize) -> Vec<usize> {
    let d = features.ncols();
    let n = rows.len() as f64;
    let mut variances: Vec<(f64, usize)> = (0..d)
        .map(|c| {
            let mean: f64 = rows.iter().map(|&r| features[[r, c]]).sum::<f64>() / n;
            let var: f64 = rows
                .iter()
                .map(|&r| {
                    let dev = features[[r, c]] - mean;
                    dev * dev
                })
                .sum::<f64>()
                / n;
            (var, c)
        })
        .collect();
    variances.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut keep: Vec<usize> = variances.into_iter().take(q.min(d)).map(|(_, c)| c).collect();
    keep.sort_unstable();
    keep
}

/// End-to-end synthetic experiment: generate, extract, split, train, score.
pub fn run_experiment(
    pipeline: &PipelineConfig,
    forest: &ForestConfig,
    params: &ExperimentParams,
    seed: u64,
) -> Result<ExperimentReport> {
    let t_start = Instant::now();

    let t0 = Instant::now();
    let data = generate_synthetic(
        params.n_per_class,
        params.channels,
        params.samples,
        params.sample_rate_hz,
        seed,
    );
    let generate_s = t0.elapsed().as_secs_f64();

    let signals: Vec<SpatiotemporalSignal> = data.iter().map(|(s, _)| s.clone()).collect();
    let all_labels: Vec<u8> = data.iter().map(|(_, l)| *l).collect();

    let t0 = Instant::now();
    let outcome = extract_batch(&signals, pipeline)?;
    for (i, e) in &outcome.failures {
        log::warn!("sample {i} failed extraction and was dropped: {e}");
    }
    let (names, features) = outcome
        .to_matrix()
        .ok_or_else(|| Error::Value("no samples survived extraction".to_string()))?;
    let mut labels: Vec<u8> = outcome.rows.iter().map(|(i, _)| all_labels[*i]).collect();
    let extract_s = t0.elapsed().as_secs_f64();

    if params.shuffle_labels {
        use rand::seq::SliceRandom;
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, SHUFFLE_SALT));
        labels.shuffle(&mut rng);
    }

    let (train_idx, test_idx) = stratified_split(&labels, mix_seed(seed, SPLIT_SALT));

    let selected: Vec<usize> = match params.feature_select_top {
        Some(q) => {
            if q == 0 {
                return Err(Error::Value(
                    "feature_select_top must be positive".to_string(),
                ));
            }
            variance_rank_selection(&features, &train_idx, q)
        }
        None => (0..features.ncols()).collect(),
    };

    let take = |rows: &[usize]| -> (Array2<f64>, Vec<u8>) {
        let mut m = Array2::zeros((rows.len(), selected.len()));
        let mut l = Vec::with_capacity(rows.len());
        for (out_r, &r) in rows.iter().enumerate() {
            for (out_c, &c) in selected.iter().enumerate() {
                m[[out_r, out_c]] = features[[r, c]];
            }
            l.push(labels[r]);
        }
        (m, l)
    };
    let (train_x, train_y) = take(&train_idx);
    let (test_x, test_y) = take(&test_idx);
    let selected_names: Vec<String> = selected.iter().map(|&c| names[c].clone()).collect();

    let t0 = Instant::now();
    let train_ds = LabeledDataset::new(train_x, train_y, selected_names)?;
    let model = train_forest(&train_ds, forest)?;
    let train_s = t0.elapsed().as_secs_f64();

    let t0 = Instant::now();
    let scores = predict_scores(&model, &test_x)?;
    let auc_value = auc(&scores, &test_y)?;
    let predict_s = t0.elapsed().as_secs_f64();

    let mut hasher = Sha256::new();
    hasher.update(pipeline.to_toml_string().as_bytes());
    hasher.update(format!("{forest:?}").as_bytes());
    hasher.update(format!("{params:?}").as_bytes());
    let config_hash = hex_prefix(&hasher.finalize(), 16);

    Ok(ExperimentReport {
        seed,
        config_hash,
        auc: auc_value,
        n_features: selected.len(),
        n_train: train_idx.len(),
        n_test: test_idx.len(),
        timings: StageTimings {
            generate_s,
            extract_s,
            train_s,
            predict_s,
            total_s: t_start.elapsed().as_secs_f64(),
        },
    })
}

fn hex_prefix(digest: &[u8], chars: usize) -> String {
    let mut s = String::with_capacity(chars);
    for byte in digest {
        use std::fmt::Write;
        let _ = write!(s, "{byte:02x}");
        if s.len() >= chars {
            break;
        }
    }
    s.truncate(chars);
    s
}

// salts separating the derived RNG streams
const SHUFFLE_SALT: u64 = 0x73_6875_66666c_65;
const SPLIT_SALT: u64 = 0x73_706c_6974;
