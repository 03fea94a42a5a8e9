//! Hierarchical graph-signal-processing feature extraction for spatiotemporal
//! signals.
//!
//! A spatiotemporal signal is an `S x T` matrix: `S` channels recorded over
//! `T` time samples. This crate learns a spatiotemporal graph from such a
//! signal (vertices are (channel, time) pairs, edge weights come from centered
//! signal products), then derives two families of embeddings from it:
//!
//! * **topology features** — eleven metrics (density, path lengths,
//!   components, ...) of a thresholded spatial graph obtained by collapsing
//!   the graph weights over time ([`topology`]),
//! * **spectral features** — graph-Fourier band energies, eigenvalue
//!   summaries, spectral graph wavelet coefficients and the Laplacian
//!   quadratic form of the flattened spatiotemporal graph ([`spectral`]).
//!
//! The [`pipeline`] module arranges these into a three-level hierarchy
//! (raw signal, band-passed signal and its time windows, down-sampled
//! coarse signal) and produces a flat, named feature vector. [`eval`]
//! provides a synthetic-data experiment harness (random forest + ROC/AUC)
//! and [`cli`] the command-line entry points.

pub mod cli;
pub mod error;
pub mod eval;
pub mod graph;
pub mod pipeline;
pub mod signal;
pub mod spectral;
pub mod topology;

pub use error::{Error, Result};
pub use graph::{SpatialGraph, VertexIndexMap, WeightTensor};
pub use pipeline::{FeatureVector, PipelineConfig};
pub use signal::{BandSpec, SpatiotemporalSignal};
