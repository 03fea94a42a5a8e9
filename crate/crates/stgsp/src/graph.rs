//! Spatiotemporal graph weight learning.
//!
//! Vertices are (channel, time) pairs. Spatial edge weights at time `k` come
//! from products of spatially centered samples; temporal edge weights between
//! times `k-l` and `k` (lags `l = 1..=L`) come from products of temporally
//! centered samples. Absolute values keep all weights non-negative. The
//! weights live in a 4-D tensor `tau[i, j, k, l]` — the sparse form of the
//! full `ST x ST` adjacency matrix, which is only materialized on demand and
//! under a size cap.

use std::fmt::Write as _;

use ndarray::{Array2, Array3};

use crate::error::{Error, Result};
use crate::signal::SpatiotemporalSignal;

/// Storage switches from a dense 4-D array to a coordinate list above this
/// many potential entries (`S*S*T*(L+1)`).
pub const DENSE_STORAGE_THRESHOLD: usize = 1 << 22;

/// Default cap on `S*T` for materializing the dense spatiotemporal adjacency.
pub const DEFAULT_DENSE_VERTEX_CAP: usize = 5000;

/// Subtracts the per-column (cross-channel) mean from every column.
pub fn center_spatial(x: &SpatiotemporalSignal) -> Array2<f64> {
    let mut out = x.data().clone();
    let s = out.nrows() as f64;
    for mut col in out.columns_mut() {
        let mean = col.sum() / s;
        col.mapv_inplace(|v| v - mean);
    }
    out
}

/// Subtracts the per-row (temporal) mean from every row.
pub fn center_temporal(x: &SpatiotemporalSignal) -> Array2<f64> {
    let mut out = x.data().clone();
    let t = out.ncols() as f64;
    for mut row in out.rows_mut() {
        let mean = row.sum() / t;
        row.mapv_inplace(|v| v - mean);
    }
    out
}

#[derive(Debug, Clone)]
enum Storage {
    /// Index layout: `((l * t + k) * s + i) * s + j`. Slots with `k < l`
    /// exist but are semantically absent (always zero).
    Dense(Vec<f64>),
    /// Sorted by `(l, k, i, j)`; only nonzero values are stored.
    Coo(Vec<CooEntry>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CooEntry {
    pub i: u32,
    pub j: u32,
    pub k: u32,
    pub l: u32,
    pub value: f64,
}

/// The learned edge weights `tau[i, j, k, l]` of a spatiotemporal graph with
/// `S` channels, `T` time samples and maximum temporal lag `L`.
///
/// Lag-0 slices hold the spatial weights at each time `k`; lag-`l` slices
/// (`l >= 1`) hold weights between channel `i` at time `k-l` and channel `j`
/// at time `k`, defined only for `k >= l`. All indices are 0-based.
#[derive(Debug, Clone)]
pub struct WeightTensor {
    s: usize,
    t: usize,
    lag: usize,
    storage: Storage,
}

impl WeightTensor {
    pub fn channels(&self) -> usize {
        self.s
    }

    pub fn samples(&self) -> usize {
        self.t
    }

    pub fn max_lag(&self) -> usize {
        self.lag
    }

    /// Upper bound on stored entries, `S*S*T*(L+1)`, or an overflow error.
    pub fn entry_capacity(s: usize, t: usize, lag: usize) -> Result<usize> {
        s.checked_mul(s)
            .and_then(|v| v.checked_mul(t))
            .and_then(|v| v.checked_mul(lag + 1))
            .ok_or_else(|| {
                Error::Overflow(format!("S^2*T*(L+1) overflows for S={s}, T={t}, L={lag}"))
            })
    }

    /// The weight `tau[i, j, k, l]`; absent entries (`k < l`) are zero.
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        debug_assert!(i < self.s && j < self.s && k < self.t && l <= self.lag);
        if k < l {
            return 0.0;
        }
        match &self.storage {
            Storage::Dense(v) => v[((l * self.t + k) * self.s + i) * self.s + j],
            Storage::Coo(entries) => {
                let key = (l as u32, k as u32, i as u32, j as u32);
                entries
                    .binary_search_by_key(&key, |e| (e.l, e.k, e.i, e.j))
                    .map(|idx| entries[idx].value)
                    .unwrap_or(0.0)
            }
        }
    }

    /// Visits every stored entry as `(i, j, k, l, value)`.
    pub fn for_each(&self, mut f: impl FnMut(usize, usize, usize, usize, f64)) {
        match &self.storage {
            Storage::Dense(v) => {
                for l in 0..=self.lag {
                    for k in l..self.t {
                        for i in 0..self.s {
                            for j in 0..self.s {
                                f(i, j, k, l, v[((l * self.t + k) * self.s + i) * self.s + j]);
                            }
                        }
                    }
                }
            }
            Storage::Coo(entries) => {
                for e in entries {
                    f(e.i as usize, e.j as usize, e.k as usize, e.l as usize, e.value);
                }
            }
        }
    }

    pub fn is_dense_storage(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    /// Serializes stored nonzero entries as `i,j,k,l,value` lines (0-based
    /// indices), sorted by `(l, k, i, j)`.
    pub fn to_coo_string(&self) -> String {
        let mut out = String::new();
        self.for_each(|i, j, k, l, v| {
            if v != 0.0 {
                let _ = writeln!(out, "{i},{j},{k},{l},{v}");
            }
        });
        out
    }
}

/// Learns the weight tensor of a signal up to temporal lag `max_lag`,
/// choosing dense or coordinate-list storage by size.
pub fn learn_weights(x: &SpatiotemporalSignal, max_lag: usize) -> Result<WeightTensor> {
    learn_weights_with_threshold(x, max_lag, DENSE_STORAGE_THRESHOLD)
}

/// As [`learn_weights`] with an explicit dense-storage threshold (entries).
pub fn learn_weights_with_threshold(
    x: &SpatiotemporalSignal,
    max_lag: usize,
    dense_threshold: usize,
) -> Result<WeightTensor> {
    let s = x.channels();
    let t = x.samples();
    if max_lag >= t {
        return Err(Error::Value(format!(
            "lag {max_lag} must be smaller than the sample count {t}"
        )));
    }

    // |centered| magnitudes; every weight is a product of two of these.
    let spatial_mag = center_spatial(x).mapv(f64::abs);
    let temporal_mag = center_temporal(x).mapv(f64::abs);

    let capacity = WeightTensor::entry_capacity(s, t, max_lag)?;
    let storage = if capacity <= dense_threshold {
        let mut v = vec![0.0; capacity];
        for l in 0..=max_lag {
            let (past, now) = if l == 0 {
                (&spatial_mag, &spatial_mag)
            } else {
                (&temporal_mag, &temporal_mag)
            };
            for k in l..t {
                let base = (l * t + k) * s * s;
                for i in 0..s {
                    let a = past[[i, k - l]];
                    for j in 0..s {
                        v[base + i * s + j] = a * now[[j, k]];
                    }
                }
            }
        }
        Storage::Dense(v)
    } else {
        let mut entries = Vec::new();
        for l in 0..=max_lag {
            let (past, now) = if l == 0 {
                (&spatial_mag, &spatial_mag)
            } else {
                (&temporal_mag, &temporal_mag)
            };
            for k in l..t {
                for i in 0..s {
                    let a = past[[i, k - l]];
                    for j in 0..s {
                        let value = a * now[[j, k]];
                        if value != 0.0 {
                            entries.push(CooEntry {
                                i: i as u32,
                                j: j as u32,
                                k: k as u32,
                                l: l as u32,
                                value,
                            });
                        }
                    }
                }
            }
        }
        Storage::Coo(entries)
    };

    Ok(WeightTensor {
        s,
        t,
        lag: max_lag,
        storage,
    })
}

/// Maps between flat vertex indices `u` in `0..S*T` and `(channel, time)`
/// pairs. Blocks are time-major: vertex `u = k*S + i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VertexIndexMap {
    s: usize,
    t: usize,
}

impl VertexIndexMap {
    pub fn new(s: usize, t: usize) -> Self {
        Self { s, t }
    }

    pub fn vertex_count(&self) -> usize {
        self.s * self.t
    }

    pub fn flatten(&self, channel: usize, time: usize) -> usize {
        debug_assert!(channel < self.s && time < self.t);
        time * self.s + channel
    }

    pub fn unflatten(&self, u: usize) -> (usize, usize) {
        debug_assert!(u < self.vertex_count());
        (u % self.s, u / self.s)
    }

    /// Flattens a signal matrix into a graph-signal vector under this map.
    pub fn flatten_signal(&self, x: &Array2<f64>) -> Vec<f64> {
        debug_assert_eq!(x.dim(), (self.s, self.t));
        let mut v = vec![0.0; self.vertex_count()];
        for k in 0..self.t {
            for i in 0..self.s {
                v[self.flatten(i, k)] = x[[i, k]];
            }
        }
        v
    }
}

/// Materializes the symmetric `ST x ST` adjacency matrix from the tensor
/// under the default vertex cap.
pub fn dense_adjacency(tau: &WeightTensor) -> Result<Array2<f64>> {
    dense_adjacency_with_cap(tau, DEFAULT_DENSE_VERTEX_CAP)
}

/// Materializes the dense adjacency, refusing when `S*T > cap`.
///
/// Block layout (time-major, per [`VertexIndexMap`]): lag-0 slices are the
/// diagonal blocks; the lag-`l` slice at time `k` is the block at rows `k`,
/// columns `k-l`, mirrored to keep the matrix symmetric.
pub fn dense_adjacency_with_cap(tau: &WeightTensor, cap: usize) -> Result<Array2<f64>> {
    let map = VertexIndexMap::new(tau.channels(), tau.samples());
    let n = map.vertex_count();
    if n > cap {
        let bytes = estimate_dense_bytes(tau.channels(), tau.samples(), 8)?;
        return Err(Error::Size(format!(
            "dense adjacency for S={}, T={} has {n} vertices (cap {cap}); \
             storing it would take {bytes} bytes — downsample first",
            tau.channels(),
            tau.samples(),
        )));
    }
    let mut w = Array2::zeros((n, n));
    tau.for_each(|i, j, k, l, v| {
        if l == 0 {
            w[[map.flatten(i, k), map.flatten(j, k)]] = v;
        } else {
            let row = map.flatten(i, k);
            let col = map.flatten(j, k - l);
            w[[row, col]] = v;
            w[[col, row]] = v;
        }
    });
    Ok(w)
}

/// Bytes needed to store a dense `(S*T) x (S*T)` matrix at
/// `bytes_per_entry` bytes per entry.
pub fn estimate_dense_bytes(s: usize, t: usize, bytes_per_entry: usize) -> Result<u64> {
    if s == 0 || t == 0 || bytes_per_entry == 0 {
        return Err(Error::Value(
            "estimate_dense_bytes arguments must be positive".to_string(),
        ));
    }
    let overflow =
        || Error::Overflow(format!("(S*T)^2 * {bytes_per_entry} overflows for S={s}, T={t}"));
    let st = (s as u64).checked_mul(t as u64).ok_or_else(overflow)?;
    st.checked_mul(st)
        .and_then(|v| v.checked_mul(bytes_per_entry as u64))
        .ok_or_else(overflow)
}

/// A spatial `S x S` graph: symmetric non-negative weights, optionally
/// thresholded to binary form.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGraph {
    weights: Array2<f64>,
    binary: bool,
}

impl SpatialGraph {
    pub fn new(weights: Array2<f64>, binary: bool) -> Result<Self> {
        let (r, c) = weights.dim();
        if r != c {
            return Err(Error::Value(format!("graph matrix must be square, got {r}x{c}")));
        }
        let max = weights.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..r {
            for j in 0..c {
                let v = weights[[i, j]];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::Value(format!(
                        "graph weight at ({i}, {j}) must be finite and non-negative, got {v}"
                    )));
                }
                if (v - weights[[j, i]]).abs() > 1e-12 * max.max(1.0) {
                    return Err(Error::Value(format!(
                        "graph matrix is asymmetric at ({i}, {j}): {v} vs {}",
                        weights[[j, i]]
                    )));
                }
                if binary && v != 0.0 && v != 1.0 {
                    return Err(Error::Value(format!(
                        "binary graph entries must be 0 or 1, got {v} at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { weights, binary })
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn is_binary(&self) -> bool {
        self.binary
    }

    pub fn vertex_count(&self) -> usize {
        self.weights.nrows()
    }
}

/// Collapses the tensor over time into per-lag autocovariance matrices:
/// `R[i, j, l] = (1/T) * sum_k tau[i, j, k, l]` (the sum runs over the valid
/// `k >= l`, the normalization stays `1/T` for every lag).
pub fn collapse_autocovariance(tau: &WeightTensor) -> Array3<f64> {
    let s = tau.channels();
    let inv_t = 1.0 / tau.samples() as f64;
    let mut r = Array3::zeros((s, s, tau.max_lag() + 1));
    tau.for_each(|i, j, _k, l, v| {
        r[[i, j, l]] += v;
    });
    r.mapv_inplace(|v| v * inv_t);
    r
}

/// Averages `R` over lags and symmetrizes, yielding the weighted spatial
/// graph that thresholding operates on. (Lagged autocovariance is not
/// symmetric in `(i, j)`; the average with its transpose is.)
pub fn mean_autocovariance(r: &Array3<f64>) -> Result<SpatialGraph> {
    let (s, s2, lags) = r.dim();
    if s != s2 {
        return Err(Error::Value(format!(
            "autocovariance tensor must be square in (i, j), got {s}x{s2}"
        )));
    }
    let inv = 1.0 / lags as f64;
    let mut m = Array2::zeros((s, s));
    for i in 0..s {
        for j in 0..s {
            let mut acc = 0.0;
            for l in 0..lags {
                acc += r[[i, j, l]] + r[[j, i, l]];
            }
            m[[i, j]] = acc * inv * 0.5;
        }
    }
    SpatialGraph::new(m, false)
}

/// Thresholds the lag-averaged autocovariance into an unweighted spatial
/// graph: edge present iff the mean weight strictly exceeds `kappa`.
pub fn threshold_graph(r: &Array3<f64>, kappa: f64) -> Result<SpatialGraph> {
    if !(kappa >= 0.0) {
        return Err(Error::Value(format!(
            "threshold must be non-negative, got {kappa}"
        )));
    }
    let mean = mean_autocovariance(r)?;
    threshold_from_mean(&mean, kappa)
}

/// Thresholds an already averaged weighted graph.
pub fn threshold_from_mean(mean: &SpatialGraph, kappa: f64) -> Result<SpatialGraph> {
    let w = mean
        .weights()
        .mapv(|v| if v > kappa { 1.0 } else { 0.0 });
    SpatialGraph::new(w, true)
}

/// Scale-free default threshold: the median of the `S^2` lag-averaged mean
/// weights (average of the two middle values for even counts).
pub fn median_kappa(r: &Array3<f64>) -> Result<f64> {
    let mean = mean_autocovariance(r)?;
    let mut values: Vec<f64> = mean.weights().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Ok(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use proptest::prelude::*;

    fn sig(data: Array2<f64>) -> SpatiotemporalSignal {
        SpatiotemporalSignal::new(data, 10.0).unwrap()
    }

    fn random_matrix(s: usize, t: usize, seed: u64) -> Array2<f64> {
        let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(0x2545f4914f6cdd1d);
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        Array2::from_shape_fn((s, t), |_| next() * 4.0)
    }

    /// Brute-force assembly of the full spatiotemporal adjacency, written
    /// directly from the weight definitions without going through
    /// `WeightTensor`.
    fn brute_force_adjacency(x: &SpatiotemporalSignal, max_lag: usize) -> Array2<f64> {
        let s = x.channels();
        let t = x.samples();
        let sp = center_spatial(x);
        let tl = center_temporal(x);
        let n = s * t;
        let mut w = Array2::zeros((n, n));
        // diagonal blocks: A_k(i, j) = |sp(i,k) * sp(j,k)|
        for k in 0..t {
            for i in 0..s {
                for j in 0..s {
                    w[[k * s + i, k * s + j]] = (sp[[i, k]] * sp[[j, k]]).abs();
                }
            }
        }
        // off-diagonal blocks: B_{k,l}(i, j) = |tl(i,k-l) * tl(j,k)| sits at
        // block row k, block column k-l.
        for l in 1..=max_lag {
            for k in l..t {
                for i in 0..s {
                    for j in 0..s {
                        let v = (tl[[i, k - l]] * tl[[j, k]]).abs();
                        w[[k * s + i, (k - l) * s + j]] = v;
                        w[[(k - l) * s + j, k * s + i]] = v;
                    }
                }
            }
        }
        w
    }

    #[test]
    fn center_spatial_examples() {
        let x = sig(array![[1.0, 2.0], [3.0, 4.0]]);
        assert_eq!(center_spatial(&x), array![[-1.0, -1.0], [1.0, 1.0]]);

        let c = sig(Array2::from_elem((3, 4), 7.5));
        assert_eq!(center_spatial(&c), Array2::zeros((3, 4)));
    }

    #[test]
    fn center_spatial_matches_per_column_oracle() {
        let x = sig(random_matrix(3, 5, 42));
        let centered = center_spatial(&x);
        for k in 0..5 {
            let mean: f64 = (0..3).map(|i| x.data()[[i, k]]).sum::<f64>() / 3.0;
            for i in 0..3 {
                assert_eq!(centered[[i, k]], x.data()[[i, k]] - mean);
            }
            let col_sum: f64 = (0..3).map(|i| centered[[i, k]]).sum();
            let max = x.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(col_sum.abs() <= 1e-12 * 3.0 * max);
        }
    }

    #[test]
    fn center_temporal_examples() {
        let x = sig(array![[1.0, 2.0], [3.0, 4.0]]);
        assert_eq!(center_temporal(&x), array![[-0.5, 0.5], [-0.5, 0.5]]);

        let x = sig(array![[5.0, 5.0, 5.0], [1.0, 2.0, 3.0]]);
        let c = center_temporal(&x);
        assert_eq!(c.row(0).to_vec(), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn center_temporal_matches_per_row_oracle() {
        let x = sig(random_matrix(3, 5, 7));
        let centered = center_temporal(&x);
        for i in 0..3 {
            let mean: f64 = (0..5).map(|k| x.data()[[i, k]]).sum::<f64>() / 5.0;
            for k in 0..5 {
                assert_eq!(centered[[i, k]], x.data()[[i, k]] - mean);
            }
        }
    }

    #[test]
    fn learn_weights_two_by_two_example() {
        // X = [[1,2],[3,4]]: spatially centered -> [[-1,-1],[1,1]];
        // temporally centered -> [[-0.5,0.5],[-0.5,0.5]].
        let x = sig(array![[1.0, 2.0], [3.0, 4.0]]);
        let tau = learn_weights(&x, 1).unwrap();
        assert_eq!(tau.get(0, 1, 0, 0), 1.0); // A_1(1,2)
        assert_eq!(tau.get(0, 0, 0, 0), 1.0); // A_1(1,1)
        assert_eq!(tau.get(0, 1, 1, 1), 0.25); // B_{2,1}(1,2)
        assert_eq!(tau.get(0, 1, 0, 1), 0.0); // absent: k < l
    }

    #[test]
    fn learn_weights_constant_signal_is_zero() {
        let x = sig(Array2::from_elem((3, 5), 2.0));
        let tau = learn_weights(&x, 2).unwrap();
        let mut total = 0.0;
        tau.for_each(|_, _, _, _, v| total += v.abs());
        assert_eq!(total, 0.0);
    }

    #[test]
    fn learn_weights_rejects_large_lag() {
        let x = sig(random_matrix(2, 4, 1));
        assert!(matches!(learn_weights(&x, 4).unwrap_err(), Error::Value(_)));
    }

    #[test]
    fn dense_adjacency_matches_brute_force() {
        let x = sig(random_matrix(4, 6, 99));
        let tau = learn_weights(&x, 2).unwrap();
        let w = dense_adjacency(&tau).unwrap();
        let oracle = brute_force_adjacency(&x, 2);
        assert_eq!(w.dim(), (24, 24));
        for i in 0..24 {
            for j in 0..24 {
                assert_abs_diff_eq!(w[[i, j]], oracle[[i, j]], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn dense_adjacency_two_by_two_frozen() {
        let x = sig(array![[1.0, 2.0], [3.0, 4.0]]);
        let tau = learn_weights(&x, 1).unwrap();
        let w = dense_adjacency(&tau).unwrap();
        let want = array![
            [1.0, 1.0, 0.25, 0.25],
            [1.0, 1.0, 0.25, 0.25],
            [0.25, 0.25, 1.0, 1.0],
            [0.25, 0.25, 1.0, 1.0]
        ];
        assert_eq!(w, want);
    }

    #[test]
    fn dense_adjacency_lag_zero_is_block_diagonal() {
        let x = sig(random_matrix(3, 4, 5));
        let tau = learn_weights(&x, 0).unwrap();
        let w = dense_adjacency(&tau).unwrap();
        for u in 0..12 {
            for v in 0..12 {
                if u / 3 != v / 3 {
                    assert_eq!(w[[u, v]], 0.0);
                }
            }
        }
    }

    #[test]
    fn dense_adjacency_respects_cap() {
        let x = sig(random_matrix(3, 4, 5));
        let tau = learn_weights(&x, 1).unwrap();
        let err = dense_adjacency_with_cap(&tau, 11).unwrap_err();
        match err {
            Error::Size(msg) => assert!(msg.contains("bytes"), "{msg}"),
            other => panic!("expected Size error, got {other:?}"),
        }
    }

    #[test]
    fn coo_and_dense_storage_agree() {
        let x = sig(random_matrix(3, 5, 21));
        let dense = learn_weights_with_threshold(&x, 2, usize::MAX).unwrap();
        let coo = learn_weights_with_threshold(&x, 2, 0).unwrap();
        assert!(dense.is_dense_storage());
        assert!(!coo.is_dense_storage());
        for l in 0..=2 {
            for k in 0..5 {
                for i in 0..3 {
                    for j in 0..3 {
                        assert_eq!(dense.get(i, j, k, l), coo.get(i, j, k, l));
                    }
                }
            }
        }
    }

    #[test]
    fn coo_text_round_trips_entries() {
        let x = sig(array![[1.0, 2.0], [3.0, 4.0]]);
        let tau = learn_weights(&x, 1).unwrap();
        let text = tau.to_coo_string();
        let mut rebuilt = std::collections::BTreeMap::new();
        for line in text.lines() {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields.len(), 5);
            let key: Vec<usize> = fields[..4].iter().map(|f| f.parse().unwrap()).collect();
            rebuilt.insert(key, fields[4].parse::<f64>().unwrap());
        }
        tau.for_each(|i, j, k, l, v| {
            if v != 0.0 {
                assert_eq!(rebuilt.get(&vec![i, j, k, l]), Some(&v));
            }
        });
        assert_eq!(rebuilt.len(), 8 + 4); // 2 lag-0 slices of 4 + one lag-1 slice
    }

    #[test]
    fn vertex_map_round_trip() {
        let map = VertexIndexMap::new(3, 4);
        for u in 0..12 {
            let (i, k) = map.unflatten(u);
            assert_eq!(map.flatten(i, k), u);
        }
        assert_eq!(map.flatten(2, 3), 11);
    }

    #[test]
    fn estimate_recording_scale_memory() {
        let bytes = estimate_dense_bytes(55, 5000, 8).unwrap();
        assert_eq!(bytes, 275_000u64 * 275_000 * 8);
        let gib = bytes as f64 / (1u64 << 30) as f64;
        assert!((gib - 563.5).abs() / 563.5 < 0.01, "got {gib} GiB");
    }

    #[test]
    fn estimate_small_cases() {
        assert_eq!(estimate_dense_bytes(1, 1, 8).unwrap(), 8);
        assert_eq!(estimate_dense_bytes(2, 3, 8).unwrap(), 288);
    }

    #[test]
    fn estimate_overflow_rejected() {
        assert!(matches!(
            estimate_dense_bytes(usize::MAX / 2, 3, 8).unwrap_err(),
            Error::Overflow(_)
        ));
        assert!(matches!(
            estimate_dense_bytes(0, 3, 8).unwrap_err(),
            Error::Value(_)
        ));
    }

    #[test]
    fn collapse_two_by_two_example() {
        let x = sig(array![[1.0, 2.0], [3.0, 4.0]]);
        let tau = learn_weights(&x, 1).unwrap();
        let r = collapse_autocovariance(&tau);
        // Only k=2 contributes at lag 1; divided by T=2.
        assert_eq!(r[[0, 1, 1]], 0.125);
        // Lag 0: A_1(1,2) = A_2(1,2) = 1 -> mean 1.
        assert_eq!(r[[0, 1, 0]], 1.0);
    }

    #[test]
    fn collapse_matches_direct_sums() {
        let x = sig(random_matrix(3, 6, 13));
        let tau = learn_weights(&x, 2).unwrap();
        let r = collapse_autocovariance(&tau);
        for i in 0..3 {
            for j in 0..3 {
                for l in 0..=2 {
                    let mut sum = 0.0;
                    for k in l..6 {
                        sum += tau.get(i, j, k, l);
                    }
                    assert_abs_diff_eq!(r[[i, j, l]], sum / 6.0, epsilon = 1e-15);
                }
            }
        }
    }

    #[test]
    fn collapse_constant_slices_average_to_constant() {
        // A signal whose centered magnitudes are constant over time: rows
        // +1/-1 alternating around a zero mean per column.
        let x = sig(array![[1.0, 1.0, 1.0, 1.0], [-1.0, -1.0, -1.0, -1.0]]);
        let tau = learn_weights(&x, 0).unwrap();
        let r = collapse_autocovariance(&tau);
        assert_eq!(r[[0, 1, 0]], 1.0);
        assert_eq!(r[[0, 0, 0]], 1.0);
    }

    #[test]
    fn threshold_examples() {
        let x = sig(random_matrix(3, 6, 3));
        let tau = learn_weights(&x, 1).unwrap();
        let r = collapse_autocovariance(&tau);

        let all = threshold_graph(&r, 0.0).unwrap();
        let mean = mean_autocovariance(&r).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if mean.weights()[[i, j]] > 0.0 { 1.0 } else { 0.0 };
                assert_eq!(all.weights()[[i, j]], want);
            }
        }

        let max = mean.weights().iter().fold(0.0f64, |m, &v| m.max(v));
        let none = threshold_graph(&r, max + 1.0).unwrap();
        assert_eq!(none.weights().sum(), 0.0);
    }

    #[test]
    fn threshold_mid_kappa() {
        // R with a single lag whose symmetric means are known exactly.
        let mut r = Array3::zeros((3, 3, 1));
        let means = array![[0.1, 0.5, 0.9], [0.5, 0.1, 0.5], [0.9, 0.5, 0.1]];
        for i in 0..3 {
            for j in 0..3 {
                r[[i, j, 0]] = means[[i, j]];
            }
        }
        let g = threshold_graph(&r, 0.4).unwrap();
        let want = array![[0.0, 1.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 0.0]];
        assert_eq!(g.weights(), &want);
    }

    #[test]
    fn median_kappa_splits_edges() {
        let x = sig(random_matrix(4, 8, 17));
        let tau = learn_weights(&x, 1).unwrap();
        let r = collapse_autocovariance(&tau);
        let kappa = median_kappa(&r).unwrap();
        let g = threshold_graph(&r, kappa).unwrap();
        let edges = g.weights().sum();
        // Strictly-above-median count is at most half of S^2 entries.
        assert!(edges <= 8.0, "got {edges}");
    }

    proptest! {
        #[test]
        fn prop_tensor_nonnegative_and_sign_invariant(seed in 0u64..500) {
            let data = random_matrix(3, 5, seed);
            let x = sig(data.clone());
            let flipped = sig(data.mapv(|v| -v));
            let a = learn_weights(&x, 2).unwrap();
            let b = learn_weights(&flipped, 2).unwrap();
            let mut ok = true;
            a.for_each(|i, j, k, l, v| {
                ok &= v >= 0.0;
                ok &= v == b.get(i, j, k, l);
            });
            prop_assert!(ok);
        }

        #[test]
        fn prop_spatial_blocks_ignore_column_offsets(seed in 0u64..500) {
            // Adding a constant to every channel within a column leaves the
            // lag-0 blocks unchanged.
            let data = random_matrix(3, 5, seed);
            let mut shifted = data.clone();
            for k in 0..5 {
                for i in 0..3 {
                    shifted[[i, k]] += (k as f64 + 1.0) * 3.5;
                }
            }
            let a = learn_weights(&sig(data), 0).unwrap();
            let b = learn_weights(&sig(shifted), 0).unwrap();
            let mut max_diff = 0.0f64;
            a.for_each(|i, j, k, l, v| {
                max_diff = max_diff.max((v - b.get(i, j, k, l)).abs());
            });
            prop_assert!(max_diff <= 1e-9, "max diff {max_diff}");
        }

        #[test]
        fn prop_temporal_blocks_ignore_row_offsets(seed in 0u64..500) {
            // Adding a constant to a whole row leaves the lag>=1 blocks
            // unchanged.
            let data = random_matrix(3, 5, seed);
            let mut shifted = data.clone();
            for i in 0..3 {
                for k in 0..5 {
                    shifted[[i, k]] += (i as f64 + 1.0) * 2.25;
                }
            }
            let a = learn_weights(&sig(data), 2).unwrap();
            let b = learn_weights(&sig(shifted), 2).unwrap();
            let mut max_diff = 0.0f64;
            a.for_each(|i, j, k, l, v| {
                if l >= 1 {
                    max_diff = max_diff.max((v - b.get(i, j, k, l)).abs());
                }
            });
            prop_assert!(max_diff <= 1e-9, "max diff {max_diff}");
        }

        #[test]
        fn prop_scaling_squares_through_the_tensor(seed in 0u64..500) {
            // power-of-two scaling is exact in floating point, so c*x must
            // scale every entry by exactly c^2
            let data = random_matrix(3, 5, seed);
            let a = learn_weights(&sig(data.clone()), 2).unwrap();
            let b = learn_weights(&sig(data.mapv(|v| 2.0 * v)), 2).unwrap();
            let mut ok = true;
            a.for_each(|i, j, k, l, v| {
                ok &= 4.0 * v == b.get(i, j, k, l);
            });
            prop_assert!(ok);
        }

        #[test]
        fn prop_threshold_monotone_in_kappa(seed in 0u64..500, k1 in 0.0f64..2.0, k2 in 0.0f64..2.0) {
            let (lo, hi) = if k1 <= k2 { (k1, k2) } else { (k2, k1) };
            let x = sig(random_matrix(4, 6, seed));
            let tau = learn_weights(&x, 1).unwrap();
            let r = collapse_autocovariance(&tau);
            let g_lo = threshold_graph(&r, lo).unwrap();
            let g_hi = threshold_graph(&r, hi).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    prop_assert!(g_hi.weights()[[i, j]] <= g_lo.weights()[[i, j]]);
                }
            }
        }

        #[test]
        fn prop_lag0_slice_symmetric(seed in 0u64..500) {
            let x = sig(random_matrix(4, 5, seed));
            let tau = learn_weights(&x, 1).unwrap();
            for k in 0..5 {
                for i in 0..4 {
                    for j in 0..4 {
                        prop_assert_eq!(tau.get(i, j, k, 0), tau.get(j, i, k, 0));
                    }
                }
            }
        }
    }
}
