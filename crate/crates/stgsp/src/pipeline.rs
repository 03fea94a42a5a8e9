//! Three-level hierarchical feature extraction.
//!
//! Level 0 runs topology extraction on the raw signal. Level 1 band-passes
//! the signal through a filter bank and runs topology extraction on each
//! band and on each of its time windows. Level 2 downsamples each band to a
//! coarse signal, learns a longer-lag graph, and adds spectral features of
//! the dense spatiotemporal Laplacian on top of the topology block.
//!
//! Feature names follow `L<level>.<band|raw>.<window|full>.<metric>` and are
//! stable for a given configuration.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    collapse_autocovariance, dense_adjacency_with_cap, learn_weights, median_kappa,
    mean_autocovariance, threshold_from_mean, SpatialGraph, VertexIndexMap, WeightTensor,
};
use crate::signal::{bandpass, downsample, partition, BandSpec, SpatiotemporalSignal};
use crate::spectral::{gsp_embedding, laplacian};
use crate::topology::{topology_embedding, TopologyEmbedding, METRIC_NAMES};

/// How the threshold turning mean autocovariance into a binary spatial graph
/// is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KappaPolicy {
    /// Per-sample median of the mean-weight matrix: scale-free, so graphs
    /// stay comparable across samples of different amplitude.
    Median,
    /// A fixed absolute threshold.
    Fixed(f64),
}

/// Configuration of the full extraction hierarchy.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Filter-bank band edges, clamped to Nyquist per sample rate.
    pub bands_hz: BandSpec,
    /// Number of level-1 time windows `K`; must divide the sample count.
    pub windows: usize,
    /// Window stride `r`; `None` means `T/K` (non-overlapping).
    pub stride: Option<usize>,
    /// Level-2 samples per channel `T2`.
    pub level2_samples: usize,
    pub lag_level0: usize,
    pub lag_level1: usize,
    pub lag_level2: usize,
    pub kappa: KappaPolicy,
    /// Number of graph-frequency bands `M`.
    pub graph_bands: usize,
    /// Number of wavelet scales `J`.
    pub sgwt_scales: usize,
    /// Extreme frequencies per scale `z`.
    pub sgwt_extremes: usize,
    /// Refuse weight tensors above this many entries.
    pub tensor_entry_cap: usize,
    /// Refuse dense adjacency matrices above this many vertices.
    pub dense_vertex_cap: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            bands_hz: BandSpec::default_eeg_bands(),
            windows: 4,
            stride: None,
            level2_samples: 20,
            lag_level0: 1,
            lag_level1: 1,
            lag_level2: 10,
            kappa: KappaPolicy::Median,
            graph_bands: 4,
            sgwt_scales: 4,
            sgwt_extremes: 3,
            tensor_entry_cap: 50_000_000,
            dense_vertex_cap: crate::graph::DEFAULT_DENSE_VERTEX_CAP,
        }
    }
}

/// On-disk form of [`PipelineConfig`]: a TOML key-value file where every
/// key is optional and defaults apply.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    bands_hz: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    windows: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    stride: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    level2_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lag_level0: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lag_level1: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lag_level2: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kappa: Option<RawKappa>,
    #[serde(skip_serializing_if = "Option::is_none")]
    graph_bands: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sgwt_scales: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sgwt_extremes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tensor_entry_cap: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dense_vertex_cap: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum RawKappa {
    Fixed(f64),
    Policy(String),
}

impl PipelineConfig {
    /// Parses the TOML key-value config format. Missing keys take defaults;
    /// unknown keys are rejected.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| Error::Format(format!("config: {e}")))?;
        let defaults = Self::default();
        let kappa = match raw.kappa {
            None => defaults.kappa,
            Some(RawKappa::Fixed(v)) => {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::Value(format!(
                        "kappa: fixed threshold must be non-negative and finite, got {v}"
                    )));
                }
                KappaPolicy::Fixed(v)
            }
            Some(RawKappa::Policy(name)) => match name.as_str() {
                "median" => KappaPolicy::Median,
                other => {
                    return Err(Error::Value(format!(
                        "kappa: unknown policy {other:?}; use \"median\" or a number"
                    )))
                }
            },
        };
        let cfg = Self {
            bands_hz: match raw.bands_hz {
                Some(edges) => BandSpec::new(edges)
                    .map_err(|e| Error::Value(format!("bands_hz: {e}")))?,
                None => defaults.bands_hz,
            },
            windows: raw.windows.unwrap_or(defaults.windows),
            stride: raw.stride.or(defaults.stride),
            level2_samples: raw.level2_samples.unwrap_or(defaults.level2_samples),
            lag_level0: raw.lag_level0.unwrap_or(defaults.lag_level0),
            lag_level1: raw.lag_level1.unwrap_or(defaults.lag_level1),
            lag_level2: raw.lag_level2.unwrap_or(defaults.lag_level2),
            kappa,
            graph_bands: raw.graph_bands.unwrap_or(defaults.graph_bands),
            sgwt_scales: raw.sgwt_scales.unwrap_or(defaults.sgwt_scales),
            sgwt_extremes: raw.sgwt_extremes.unwrap_or(defaults.sgwt_extremes),
            tensor_entry_cap: raw.tensor_entry_cap.unwrap_or(defaults.tensor_entry_cap),
            dense_vertex_cap: raw.dense_vertex_cap.unwrap_or(defaults.dense_vertex_cap),
        };
        cfg.validate_static()?;
        Ok(cfg)
    }

    pub fn from_toml_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_toml_str(&text)
    }

    /// Canonical TOML rendering (all keys explicit).
    pub fn to_toml_string(&self) -> String {
        let raw = RawConfig {
            bands_hz: Some(self.bands_hz.edges_hz().to_vec()),
            windows: Some(self.windows),
            stride: self.stride,
            level2_samples: Some(self.level2_samples),
            lag_level0: Some(self.lag_level0),
            lag_level1: Some(self.lag_level1),
            lag_level2: Some(self.lag_level2),
            kappa: Some(match self.kappa {
                KappaPolicy::Median => RawKappa::Policy("median".to_string()),
                KappaPolicy::Fixed(v) => RawKappa::Fixed(v),
            }),
            graph_bands: Some(self.graph_bands),
            sgwt_scales: Some(self.sgwt_scales),
            sgwt_extremes: Some(self.sgwt_extremes),
            tensor_entry_cap: Some(self.tensor_entry_cap),
            dense_vertex_cap: Some(self.dense_vertex_cap),
        };
        toml::to_string(&raw).expect("config serializes")
    }

    /// Shape-independent sanity checks.
    fn validate_static(&self) -> Result<()> {
        if self.windows == 0 {
            return Err(Error::Value("windows: must be positive".to_string()));
        }
        if self.level2_samples < 2 {
            return Err(Error::Value(
                "level2_samples: must be at least 2".to_string(),
            ));
        }
        if self.lag_level2 >= self.level2_samples {
            return Err(Error::Value(format!(
                "lag_level2: lag {} must be smaller than level2_samples {}",
                self.lag_level2, self.level2_samples
            )));
        }
        if self.graph_bands == 0 {
            return Err(Error::Value("graph_bands: must be positive".to_string()));
        }
        if self.sgwt_scales == 0 {
            return Err(Error::Value("sgwt_scales: must be positive".to_string()));
        }
        if self.sgwt_extremes == 0 {
            return Err(Error::Value("sgwt_extremes: must be positive".to_string()));
        }
        Ok(())
    }

    /// Checks the configuration against a concrete signal shape.
    pub fn validate_for(&self, channels: usize, samples: usize, sample_rate_hz: f64) -> Result<()> {
        self.validate_static()?;
        if samples % self.windows != 0 {
            return Err(Error::Value(format!(
                "windows: sample count {samples} is not divisible by window count {}",
                self.windows
            )));
        }
        let width = samples / self.windows;
        if width < 2 {
            return Err(Error::Value(format!(
                "windows: window width {samples}/{} leaves fewer than 2 samples",
                self.windows
            )));
        }
        let stride = self.stride.unwrap_or(width);
        if stride == 0 || (self.windows - 1) * stride + width > samples {
            return Err(Error::Value(format!(
                "stride: windows exceed signal length ((K-1)*{stride} + {width} > {samples})"
            )));
        }
        if self.level2_samples > samples {
            return Err(Error::Value(format!(
                "level2_samples: target {} exceeds sample count {samples}",
                self.level2_samples
            )));
        }
        if self.lag_level0 >= samples {
            return Err(Error::Value(format!(
                "lag_level0: lag {} must be smaller than sample count {samples}",
                self.lag_level0
            )));
        }
        if self.lag_level1 >= width {
            return Err(Error::Value(format!(
                "lag_level1: lag {} must be smaller than window width {width}",
                self.lag_level1
            )));
        }
        let l2_vertices = channels * self.level2_samples;
        if self.sgwt_extremes > l2_vertices {
            return Err(Error::Value(format!(
                "sgwt_extremes: z = {} exceeds level-2 graph size {l2_vertices}",
                self.sgwt_extremes
            )));
        }
        self.bands_hz.clamped_to_nyquist(sample_rate_hz)?;
        let cap = WeightTensor::entry_capacity(channels, samples, self.lag_level0)?;
        if cap > self.tensor_entry_cap {
            return Err(Error::Size(format!(
                "tensor_entry_cap: level-0 tensor needs {cap} entries (cap {})",
                self.tensor_entry_cap
            )));
        }
        if l2_vertices > self.dense_vertex_cap {
            return Err(Error::Size(format!(
                "dense_vertex_cap: level-2 graph has {l2_vertices} vertices (cap {})",
                self.dense_vertex_cap
            )));
        }
        Ok(())
    }

    /// Number of features a signal at this sample rate produces:
    /// `11 * (1 + C*(K+1))` topology features from levels 0-1 plus, per band
    /// at level 2, 11 topology + M energies + 3 eigenvalue summaries +
    /// 2*J*z wavelet coefficients + 1 quadratic form.
    pub fn expected_feature_count(&self, sample_rate_hz: f64) -> Result<usize> {
        let c = self.bands_hz.clamped_to_nyquist(sample_rate_hz)?.band_count();
        let per_band_l2 =
            11 + self.graph_bands + 3 + 2 * self.sgwt_scales * self.sgwt_extremes + 1;
        Ok(11 * (1 + c * (self.windows + 1)) + c * per_band_l2)
    }
}

/// An ordered, named list of real-valued features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    names: Vec<String>,
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn push(&mut self, name: String, value: f64) {
        self.names.push(name);
        self.values.push(value);
    }

    fn push_topology(&mut self, prefix: &str, topo: &TopologyEmbedding) {
        for (metric, value) in METRIC_NAMES.iter().zip(topo.values()) {
            self.push(format!("{prefix}.{metric}"), value);
        }
    }
}

/// The topology block shared by all levels: learn weights, collapse over
/// time, threshold, measure.
fn topology_block(
    x: &SpatiotemporalSignal,
    lag: usize,
    cfg: &PipelineConfig,
) -> Result<TopologyEmbedding> {
    let entries = WeightTensor::entry_capacity(x.channels(), x.samples(), lag)?;
    if entries > cfg.tensor_entry_cap {
        return Err(Error::Size(format!(
            "weight tensor needs {entries} entries for S={}, T={}, L={lag} (cap {})",
            x.channels(),
            x.samples(),
            cfg.tensor_entry_cap
        )));
    }
    let tau = learn_weights(x, lag)?;
    let r = collapse_autocovariance(&tau);
    let weighted = mean_autocovariance(&r)?;
    let kappa = match cfg.kappa {
        KappaPolicy::Median => median_kappa(&r)?,
        KappaPolicy::Fixed(v) => v,
    };
    let binary = threshold_from_mean(&weighted, kappa)?;
    topology_embedding(&binary, Some(&weighted))
}

/// Everything the level-2 graph path produces for one band; the CLI's graph
/// dump and the feature assembly both go through this.
pub struct Level2Graph {
    pub tensor: WeightTensor,
    pub autocovariance: ndarray::Array3<f64>,
    pub weighted: SpatialGraph,
    pub kappa: f64,
    pub thresholded: SpatialGraph,
    pub adjacency: Array2<f64>,
    pub graph_signal: Vec<f64>,
}

/// Runs one band through the level-2 path: downsample, learn the longer-lag
/// weights, collapse and threshold, materialize the dense adjacency.
pub fn level2_graph(
    band_signal: &SpatiotemporalSignal,
    cfg: &PipelineConfig,
) -> Result<Level2Graph> {
    let coarse = downsample(band_signal, cfg.level2_samples)?;
    let entries =
        WeightTensor::entry_capacity(coarse.channels(), coarse.samples(), cfg.lag_level2)?;
    if entries > cfg.tensor_entry_cap {
        return Err(Error::Size(format!(
            "level-2 weight tensor needs {entries} entries (cap {})",
            cfg.tensor_entry_cap
        )));
    }
    let tensor = learn_weights(&coarse, cfg.lag_level2)?;
    let autocovariance = collapse_autocovariance(&tensor);
    let weighted = mean_autocovariance(&autocovariance)?;
    let kappa = match cfg.kappa {
        KappaPolicy::Median => median_kappa(&autocovariance)?,
        KappaPolicy::Fixed(v) => v,
    };
    let thresholded = threshold_from_mean(&weighted, kappa)?;
    let adjacency = dense_adjacency_with_cap(&tensor, cfg.dense_vertex_cap)?;
    let map = VertexIndexMap::new(coarse.channels(), coarse.samples());
    let graph_signal = map.flatten_signal(coarse.data());
    Ok(Level2Graph {
        tensor,
        autocovariance,
        weighted,
        kappa,
        thresholded,
        adjacency,
        graph_signal,
    })
}

/// Extracts the full hierarchical feature vector of one signal.
pub fn extract_features(x: &SpatiotemporalSignal, cfg: &PipelineConfig) -> Result<FeatureVector> {
    cfg.validate_for(x.channels(), x.samples(), x.sample_rate_hz())?;
    let effective_bands = cfg.bands_hz.clamped_to_nyquist(x.sample_rate_hz())?;

    let mut fv = FeatureVector {
        names: Vec::new(),
        values: Vec::new(),
    };

    // Level 0: topology on the raw signal.
    let topo0 = topology_block(x, cfg.lag_level0, cfg)?;
    fv.push_topology("L0.raw.full", &topo0);

    let width = x.samples() / cfg.windows;
    let stride = cfg.stride.unwrap_or(width);

    let mut band_signals = Vec::with_capacity(effective_bands.band_count());
    for (lo, hi) in effective_bands.bands() {
        band_signals.push(bandpass(x, lo, hi)?);
    }

    // Level 1: topology per band, full and per window.
    for (c, band_signal) in band_signals.iter().enumerate() {
        let band = c + 1;
        let topo = topology_block(band_signal, cfg.lag_level1, cfg)?;
        fv.push_topology(&format!("L1.band{band}.full"), &topo);
        for (k, window) in partition(band_signal, cfg.windows, stride)?.iter().enumerate() {
            let topo = topology_block(window, cfg.lag_level1, cfg)?;
            fv.push_topology(&format!("L1.band{band}.w{}", k + 1), &topo);
        }
    }

    // Level 2: coarse topology plus spectral features per band.
    for (c, band_signal) in band_signals.iter().enumerate() {
        let band = c + 1;
        let l2 = level2_graph(band_signal, cfg)?;
        let topo = topology_embedding(&l2.thresholded, Some(&l2.weighted))?;
        let prefix = format!("L2.band{band}.full");
        fv.push_topology(&prefix, &topo);

        let lap = laplacian(&l2.adjacency)?;
        let gsp = gsp_embedding(
            &lap,
            &l2.graph_signal,
            cfg.graph_bands,
            cfg.sgwt_scales,
            cfg.sgwt_extremes,
        )?;
        for (m, e) in gsp.band_energies.iter().enumerate() {
            fv.push(format!("{prefix}.energy{}", m + 1), *e);
        }
        fv.push(format!("{prefix}.lambda_min"), gsp.lambda_min);
        fv.push(format!("{prefix}.lambda_max"), gsp.lambda_max);
        fv.push(format!("{prefix}.lambda_mean"), gsp.lambda_mean);
        let z = cfg.sgwt_extremes;
        for j in 0..cfg.sgwt_scales {
            for q in 0..z {
                let idx = 2 * j * z + q;
                fv.push(
                    format!("{prefix}.sgwt{}.min{}", j + 1, q + 1),
                    gsp.wavelet_coeffs[idx],
                );
            }
            for q in 0..z {
                let idx = 2 * j * z + z + q;
                fv.push(
                    format!("{prefix}.sgwt{}.max{}", j + 1, q + 1),
                    gsp.wavelet_coeffs[idx],
                );
            }
        }
        fv.push(format!("{prefix}.quadratic_form"), gsp.quadratic_form);
    }

    debug_assert_eq!(
        fv.len(),
        cfg.expected_feature_count(x.sample_rate_hz())?,
        "feature layout drifted from the counting formula"
    );
    if let Some(bad) = fv.values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!(
            "feature {} = {}",
            fv.names[bad], fv.values[bad]
        )));
    }
    Ok(fv)
}

/// Result of a batch extraction: per-sample feature rows plus per-sample
/// failures, both carrying the original sample index.
#[derive(Debug)]
pub struct BatchOutcome {
    pub rows: Vec<(usize, FeatureVector)>,
    pub failures: Vec<(usize, String)>,
}

impl BatchOutcome {
    /// Dense feature matrix of the successful rows, in sample order.
    pub fn to_matrix(&self) -> Option<(Vec<String>, Array2<f64>)> {
        let first = &self.rows.first()?.1;
        let d = first.len();
        let mut m = Array2::zeros((self.rows.len(), d));
        for (r, (_, fv)) in self.rows.iter().enumerate() {
            for (c, v) in fv.values().iter().enumerate() {
                m[[r, c]] = *v;
            }
        }
        Some((first.names().to_vec(), m))
    }
}

/// Extracts features for every sample (in parallel); per-sample failures are
/// collected rather than aborting the batch. Errors only when every sample
/// failed (an empty batch succeeds with an empty outcome).
pub fn extract_batch(
    samples: &[SpatiotemporalSignal],
    cfg: &PipelineConfig,
) -> Result<BatchOutcome> {
    if let Some(first) = samples.first() {
        let shape = (first.channels(), first.samples(), first.sample_rate_hz());
        for (i, s) in samples.iter().enumerate() {
            let got = (s.channels(), s.samples(), s.sample_rate_hz());
            if got != shape {
                return Err(Error::Value(format!(
                    "batch is not homogeneous: sample {i} has (S, T, fs) = {got:?}, expected {shape:?}"
                )));
            }
        }
    }

    let results: Vec<(usize, std::result::Result<FeatureVector, String>)> = samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| (i, extract_features(s, cfg).map_err(|e| e.to_string())))
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (i, r) in results {
        match r {
            Ok(fv) => rows.push((i, fv)),
            Err(e) => failures.push((i, e)),
        }
    }
    if !samples.is_empty() && rows.is_empty() {
        let (first_index, first_error) = failures[0].clone();
        return Err(Error::BatchFailed {
            total: samples.len(),
            first_index,
            first_error,
        });
    }
    Ok(BatchOutcome { rows, failures })
}
