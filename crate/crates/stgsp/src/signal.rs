//! Signal representation, file ingestion, ideal band-pass filtering,
//! time-window partitioning and temporal downsampling.

use std::path::Path;

use ndarray::{s, Array2};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// A multichannel time series: `S` channels (rows) by `T` samples (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct SpatiotemporalSignal {
    data: Array2<f64>,
    sample_rate_hz: f64,
}

impl SpatiotemporalSignal {
    /// Wraps an `S x T` matrix. Requires `S >= 2`, `T >= 2`, a positive
    /// sample rate and finite entries.
    pub fn new(data: Array2<f64>, sample_rate_hz: f64) -> Result<Self> {
        let (s, t) = data.dim();
        if s < 2 {
            return Err(Error::Value(format!("need at least 2 channels, got {s}")));
        }
        if t < 2 {
            return Err(Error::Value(format!("need at least 2 samples, got {t}")));
        }
        if !(sample_rate_hz > 0.0) || !sample_rate_hz.is_finite() {
            return Err(Error::Value(format!(
                "sample rate must be positive and finite, got {sample_rate_hz}"
            )));
        }
        if let Some(((i, k), v)) = data.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Value(format!(
                "non-finite entry {v} at channel {i}, sample {k}"
            )));
        }
        Ok(Self {
            data,
            sample_rate_hz,
        })
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_data(self) -> Array2<f64> {
        self.data
    }

    /// Number of channels `S`.
    pub fn channels(&self) -> usize {
        self.data.nrows()
    }

    /// Number of time samples `T`.
    pub fn samples(&self) -> usize {
        self.data.ncols()
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn nyquist_hz(&self) -> f64 {
        self.sample_rate_hz / 2.0
    }

    /// Reads a signal from a CSV file: one row per channel, comma-separated
    /// samples, no header.
    pub fn from_csv(path: impl AsRef<Path>, sample_rate_hz: f64) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (line_no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut row = Vec::new();
            for field in line.split(',') {
                let v: f64 = field.trim().parse().map_err(|_| {
                    Error::Format(format!(
                        "line {}: non-numeric field {:?}",
                        line_no + 1,
                        field.trim()
                    ))
                })?;
                row.push(v);
            }
            if let Some(first) = rows.first() {
                if row.len() != first.len() {
                    return Err(Error::Format(format!(
                        "ragged rows: line {} has {} fields, expected {}",
                        line_no + 1,
                        row.len(),
                        first.len()
                    )));
                }
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::Format("empty file".into()));
        }
        let s = rows.len();
        let t = rows[0].len();
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        let data = Array2::from_shape_vec((s, t), flat)
            .expect("row-major assembly matches (s, t) shape");
        Self::new(data, sample_rate_hz)
    }

    /// Reads a signal from a raw binary file of 64-bit little-endian floats,
    /// channel-major (all of channel 0's samples, then channel 1's, ...).
    pub fn from_raw_f64(
        path: impl AsRef<Path>,
        channels: usize,
        sample_rate_hz: f64,
    ) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        if bytes.len() % 8 != 0 {
            return Err(Error::Format(format!(
                "raw file length {} is not a multiple of 8",
                bytes.len()
            )));
        }
        let n = bytes.len() / 8;
        if channels == 0 || n % channels != 0 {
            return Err(Error::Format(format!(
                "{n} values do not divide evenly into {channels} channels"
            )));
        }
        let values: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        let data = Array2::from_shape_vec((channels, n / channels), values)
            .expect("length checked above");
        Self::new(data, sample_rate_hz)
    }

    /// Writes the signal as raw little-endian f64, channel-major. Inverse of
    /// [`Self::from_raw_f64`].
    pub fn write_raw_f64(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut bytes = Vec::with_capacity(self.data.len() * 8);
        for row in self.data.rows() {
            for v in row {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        std::fs::write(path, bytes).map_err(|e| Error::io(path.display().to_string(), e))
    }

    /// CSV rendering: one row per channel, no header.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for row in self.data.rows() {
            let fields: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    /// Writes the signal as CSV, one row per channel.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv_string())
            .map_err(|e| Error::io(path.display().to_string(), e))
    }
}

/// On-disk encodings understood by [`load_signal`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalFormat {
    Csv,
    /// Raw 64-bit little-endian floats; the channel count cannot be inferred
    /// from the file and must be declared.
    RawF64 {
        channels: usize,
    },
}

/// Loads a signal file in the given format.
pub fn load_signal(
    path: impl AsRef<Path>,
    format: SignalFormat,
    sample_rate_hz: f64,
) -> Result<SpatiotemporalSignal> {
    match format {
        SignalFormat::Csv => SpatiotemporalSignal::from_csv(path, sample_rate_hz),
        SignalFormat::RawF64 { channels } => {
            SpatiotemporalSignal::from_raw_f64(path, channels, sample_rate_hz)
        }
    }
}

/// Ascending band edges `w_0 < w_1 < ... < w_C` defining `C` half-open
/// frequency bands `[w_{c-1}, w_c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandSpec {
    edges_hz: Vec<f64>,
}

impl BandSpec {
    pub fn new(edges_hz: Vec<f64>) -> Result<Self> {
        if edges_hz.len() < 2 {
            return Err(Error::Value(
                "band spec needs at least two edges".to_string(),
            ));
        }
        if edges_hz[0] < 0.0 {
            return Err(Error::Value(format!(
                "band edges must be non-negative, got {}",
                edges_hz[0]
            )));
        }
        for w in edges_hz.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::Value(format!(
                    "band edges must be strictly ascending, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if edges_hz.iter().any(|e| !e.is_finite()) {
            return Err(Error::Value("band edges must be finite".to_string()));
        }
        Ok(Self { edges_hz })
    }

    /// The conventional EEG band edges (delta through gamma, beta split into
    /// sub-bands, plus a wide-open top band). Edges above Nyquist are clamped
    /// per sample rate when the bands are applied to a signal.
    pub fn default_eeg_bands() -> Self {
        Self {
            edges_hz: vec![0.0, 7.0, 10.0, 12.0, 18.0, 24.0, 30.0, 100.0, 5000.0],
        }
    }

    pub fn edges_hz(&self) -> &[f64] {
        &self.edges_hz
    }

    /// Number of bands `C`.
    pub fn band_count(&self) -> usize {
        self.edges_hz.len() - 1
    }

    /// Iterator over `(lo, hi)` band intervals.
    pub fn bands(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.edges_hz.windows(2).map(|w| (w[0], w[1]))
    }

    /// Clamps edges above Nyquist to Nyquist, dropping bands that become
    /// empty. Errors if no band survives.
    pub fn clamped_to_nyquist(&self, sample_rate_hz: f64) -> Result<Self> {
        let nyq = sample_rate_hz / 2.0;
        let mut edges: Vec<f64> = self.edges_hz.iter().map(|&e| e.min(nyq)).collect();
        edges.dedup();
        if edges.len() < 2 {
            return Err(Error::Value(format!(
                "all bands lie above the Nyquist frequency {nyq} Hz"
            )));
        }
        if edges != self.edges_hz {
            log::warn!(
                "band edges clamped to Nyquist {} Hz: {:?} -> {:?}",
                nyq,
                self.edges_hz,
                edges
            );
        }
        Self::new(edges)
    }
}

/// Ideal band-pass filter: zeroes every DFT bin of each row whose (folded)
/// frequency falls outside `[band_lo_hz, band_hi_hz)`.
///
/// Bin conventions: the DC bin passes only when `band_lo_hz == 0`; the
/// exact-Nyquist bin of an even-length signal passes when `band_hi_hz` is at
/// or above Nyquist, so a band partition ending at Nyquist claims every bin
/// exactly once.
pub fn bandpass(
    x: &SpatiotemporalSignal,
    band_lo_hz: f64,
    band_hi_hz: f64,
) -> Result<SpatiotemporalSignal> {
    let (out, _residue) = bandpass_with_residue(x, band_lo_hz, band_hi_hz)?;
    Ok(out)
}

/// As [`bandpass`], also reporting the largest imaginary residue (relative to
/// the input norm) discarded when the inverse transform is mapped back to
/// real samples.
pub fn bandpass_with_residue(
    x: &SpatiotemporalSignal,
    band_lo_hz: f64,
    band_hi_hz: f64,
) -> Result<(SpatiotemporalSignal, f64)> {
    if band_lo_hz < 0.0 {
        return Err(Error::Value(format!(
            "band low edge must be non-negative, got {band_lo_hz}"
        )));
    }
    if !(band_lo_hz < band_hi_hz) {
        return Err(Error::Value(format!(
            "band must satisfy lo < hi, got [{band_lo_hz}, {band_hi_hz})"
        )));
    }

    let t = x.samples();
    let fs = x.sample_rate_hz();
    let nyq = fs / 2.0;

    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(t);
    let inverse = planner.plan_fft_inverse(t);

    let keep: Vec<bool> = (0..t)
        .map(|n| {
            let folded = n.min(t - n);
            let f = folded as f64 * fs / t as f64;
            let is_nyquist_bin = t % 2 == 0 && n == t / 2;
            f >= band_lo_hz && (f < band_hi_hz || (is_nyquist_bin && band_hi_hz >= nyq))
        })
        .collect();

    let input_norm = x.data().iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut out = Array2::zeros(x.data().dim());
    let mut max_residue = 0.0f64;
    let mut buf: Vec<Complex<f64>> = Vec::with_capacity(t);
    for (i, row) in x.data().rows().into_iter().enumerate() {
        buf.clear();
        buf.extend(row.iter().map(|&v| Complex::new(v, 0.0)));
        forward.process(&mut buf);
        for (b, &k) in buf.iter_mut().zip(&keep) {
            if !k {
                *b = Complex::new(0.0, 0.0);
            }
        }
        inverse.process(&mut buf);
        let scale = 1.0 / t as f64;
        for (k, b) in buf.iter().enumerate() {
            out[[i, k]] = b.re * scale;
            max_residue = max_residue.max((b.im * scale).abs());
        }
    }
    let residue = if input_norm > 0.0 {
        max_residue / input_norm
    } else {
        max_residue
    };
    let out = SpatiotemporalSignal::new(out, fs)?;
    Ok((out, residue))
}

/// Applies one [`bandpass`] per band of `bands` (clamped to the signal's
/// Nyquist frequency), returning the `C` filtered signals.
pub fn filter_bank(x: &SpatiotemporalSignal, bands: &BandSpec) -> Result<Vec<SpatiotemporalSignal>> {
    let effective = bands.clamped_to_nyquist(x.sample_rate_hz())?;
    effective.bands().map(|(lo, hi)| bandpass(x, lo, hi)).collect()
}

/// Splits `x` into `K` windows of width `T/K` whose starts are `stride`
/// columns apart; window `k` (0-based) covers columns `k*stride ..
/// k*stride + T/K`. Windows overlap iff `stride < T/K`.
pub fn partition(
    x: &SpatiotemporalSignal,
    windows: usize,
    stride: usize,
) -> Result<Vec<SpatiotemporalSignal>> {
    let t = x.samples();
    if windows == 0 || stride == 0 {
        return Err(Error::Value(
            "window count and stride must be positive".to_string(),
        ));
    }
    if t % windows != 0 {
        return Err(Error::Value(format!(
            "sample count {t} is not divisible by window count {windows}"
        )));
    }
    let width = t / windows;
    if width < 2 {
        return Err(Error::Value(format!(
            "window width {t}/{windows} leaves fewer than 2 samples"
        )));
    }
    let last_end = (windows - 1) * stride + width;
    if last_end > t {
        return Err(Error::Value(format!(
            "windows exceed signal length: (K-1)*r + w = {last_end} > {t}"
        )));
    }
    (0..windows)
        .map(|k| {
            let start = k * stride;
            let slice = x.data().slice(s![.., start..start + width]).to_owned();
            SpatiotemporalSignal::new(slice, x.sample_rate_hz())
        })
        .collect()
}

/// Plain decimation: keeps the first `t2` columns of the strided sequence
/// `0, d, 2d, ...` with `d = floor(T1/t2)`, and scales the sample rate by
/// `t2/T1`.
pub fn downsample(x: &SpatiotemporalSignal, t2: usize) -> Result<SpatiotemporalSignal> {
    let t1 = x.samples();
    if t2 < 2 {
        return Err(Error::Value(format!(
            "downsample target must be at least 2 samples, got {t2}"
        )));
    }
    if t2 > t1 {
        return Err(Error::Value(format!(
            "downsample target {t2} exceeds signal length {t1}"
        )));
    }
    let stride = t1 / t2;
    let mut out = Array2::zeros((x.channels(), t2));
    for k in 0..t2 {
        out.column_mut(k).assign(&x.data().column(k * stride));
    }
    SpatiotemporalSignal::new(out, x.sample_rate_hz() * t2 as f64 / t1 as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use proptest::prelude::*;

    fn sine(freq: f64, fs: f64, t: usize, channels: usize) -> SpatiotemporalSignal {
        let mut data = Array2::zeros((channels, t));
        for i in 0..channels {
            for k in 0..t {
                data[[i, k]] = (2.0 * std::f64::consts::PI * freq * k as f64 / fs).sin();
            }
        }
        SpatiotemporalSignal::new(data, fs).unwrap()
    }

    fn rel_l2(a: &SpatiotemporalSignal, b: &SpatiotemporalSignal) -> f64 {
        let num: f64 = a
            .data()
            .iter()
            .zip(b.data().iter())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        let den: f64 = b.data().iter().map(|v| v * v).sum::<f64>().sqrt();
        num / den
    }

    fn norm(x: &SpatiotemporalSignal) -> f64 {
        x.data().iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    #[test]
    fn csv_parse_basic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        std::fs::write(&path, "1,2,3\n4,5,6\n").unwrap();
        let sig = SpatiotemporalSignal::from_csv(&path, 100.0).unwrap();
        assert_eq!(sig.channels(), 2);
        assert_eq!(sig.samples(), 3);
        assert_eq!(sig.data(), &array![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]);
        assert_eq!(sig.sample_rate_hz(), 100.0);
    }

    #[test]
    fn csv_ragged_rows_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        std::fs::write(&path, "1,2,3\n4,5\n").unwrap();
        let err = SpatiotemporalSignal::from_csv(&path, 100.0).unwrap_err();
        assert!(matches!(err, Error::Format(_)), "got {err:?}");
    }

    #[test]
    fn csv_non_numeric_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        std::fs::write(&path, "1,zap\n4,5\n").unwrap();
        assert!(matches!(
            SpatiotemporalSignal::from_csv(&path, 100.0).unwrap_err(),
            Error::Format(_)
        ));
    }

    #[test]
    fn csv_nan_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        std::fs::write(&path, "1,NaN\n4,5\n").unwrap();
        assert!(matches!(
            SpatiotemporalSignal::from_csv(&path, 100.0).unwrap_err(),
            Error::Value(_)
        ));
    }

    #[test]
    fn raw_f64_round_trip_bit_exact() {
        // Oracle: serialize known values by hand, read them back.
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.f64");
        let values: [f64; 6] = [1.0, -2.5, 3.25, 0.1, f64::MIN_POSITIVE, -0.0];
        let mut bytes = Vec::new();
        for v in values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        assert_eq!(bytes.len(), 48);
        std::fs::write(&path, &bytes).unwrap();

        let sig = load_signal(&path, SignalFormat::RawF64 { channels: 2 }, 10.0).unwrap();
        assert_eq!(sig.channels(), 2);
        assert_eq!(sig.samples(), 3);
        for (got, want) in sig.data().iter().zip(values.iter()) {
            assert_eq!(got.to_bits(), want.to_bits());
        }

        // And the writer inverts the reader.
        let path2 = dir.path().join("b.f64");
        sig.write_raw_f64(&path2).unwrap();
        assert_eq!(std::fs::read(&path2).unwrap(), bytes);
    }

    #[test]
    fn raw_f64_bad_length_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.f64");
        std::fs::write(&path, vec![0u8; 40]).unwrap();
        // 5 values do not divide into 2 channels
        assert!(matches!(
            load_signal(&path, SignalFormat::RawF64 { channels: 2 }, 10.0).unwrap_err(),
            Error::Format(_)
        ));
    }

    #[test]
    fn bandpass_passes_in_band_tone() {
        // 15 Hz tone, fs=100, T=200: exactly 30 cycles, lands in one bin.
        let x = sine(15.0, 100.0, 200, 2);
        let y = bandpass(&x, 12.0, 18.0).unwrap();
        assert!(rel_l2(&y, &x) <= 1e-9, "rel err {}", rel_l2(&y, &x));
    }

    #[test]
    fn bandpass_stops_out_of_band_tone() {
        let x = sine(15.0, 100.0, 200, 2);
        let y = bandpass(&x, 0.0, 7.0).unwrap();
        assert!(norm(&y) <= 1e-9 * norm(&x));
    }

    #[test]
    fn bandpass_zero_signal_stays_zero() {
        let x = SpatiotemporalSignal::new(Array2::zeros((2, 16)), 100.0).unwrap();
        let y = bandpass(&x, 3.0, 20.0).unwrap();
        assert_eq!(norm(&y), 0.0);
    }

    #[test]
    fn bandpass_rejects_bad_band() {
        let x = sine(5.0, 100.0, 32, 2);
        assert!(matches!(
            bandpass(&x, 18.0, 12.0).unwrap_err(),
            Error::Value(_)
        ));
        assert!(matches!(
            bandpass(&x, -1.0, 12.0).unwrap_err(),
            Error::Value(_)
        ));
    }

    #[test]
    fn filter_bank_two_bands_reconstruct() {
        let mut rng_state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            rng_state ^= rng_state << 13;
            rng_state ^= rng_state >> 7;
            rng_state ^= rng_state << 17;
            (rng_state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let data = Array2::from_shape_fn((3, 64), |_| next());
        let x = SpatiotemporalSignal::new(data, 100.0).unwrap();
        let bands = BandSpec::new(vec![0.0, 25.0, 50.0]).unwrap();
        let outs = filter_bank(&x, &bands).unwrap();
        assert_eq!(outs.len(), 2);
        let sum = SpatiotemporalSignal::new(outs[0].data() + outs[1].data(), 100.0).unwrap();
        assert!(rel_l2(&sum, &x) <= 1e-8, "rel err {}", rel_l2(&sum, &x));
    }

    #[test]
    fn filter_bank_single_full_band_is_identity() {
        let x = sine(7.3, 64.0, 50, 2);
        let bands = BandSpec::new(vec![0.0, 32.0]).unwrap();
        let outs = filter_bank(&x, &bands).unwrap();
        assert_eq!(outs.len(), 1);
        assert!(rel_l2(&outs[0], &x) <= 1e-8);
    }

    #[test]
    fn default_bands_clamped_at_400hz() {
        let spec = BandSpec::default_eeg_bands();
        let eff = spec.clamped_to_nyquist(400.0).unwrap();
        assert_eq!(
            eff.edges_hz(),
            &[0.0, 7.0, 10.0, 12.0, 18.0, 24.0, 30.0, 100.0, 200.0]
        );
        assert_eq!(eff.band_count(), 8);
    }

    #[test]
    fn clamping_drops_empty_bands() {
        // At fs=100 both 100 and 5000 clamp to 50; the duplicate edge goes away.
        let spec = BandSpec::default_eeg_bands();
        let eff = spec.clamped_to_nyquist(100.0).unwrap();
        assert_eq!(eff.edges_hz(), &[0.0, 7.0, 10.0, 12.0, 18.0, 24.0, 30.0, 50.0]);
    }

    #[test]
    fn partition_disjoint_windows() {
        let x = SpatiotemporalSignal::new(
            array![[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], [7.0, 8.0, 9.0, 10.0, 11.0, 12.0]],
            6.0,
        )
        .unwrap();
        let wins = partition(&x, 3, 2).unwrap();
        assert_eq!(wins.len(), 3);
        assert_eq!(wins[0].data(), &array![[1.0, 2.0], [7.0, 8.0]]);
        assert_eq!(wins[1].data(), &array![[3.0, 4.0], [9.0, 10.0]]);
        assert_eq!(wins[2].data(), &array![[5.0, 6.0], [11.0, 12.0]]);
    }

    #[test]
    fn partition_overlapping_windows() {
        let x = SpatiotemporalSignal::new(
            array![[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], [7.0, 8.0, 9.0, 10.0, 11.0, 12.0]],
            6.0,
        )
        .unwrap();
        let wins = partition(&x, 3, 1).unwrap();
        assert_eq!(wins[0].data(), &array![[1.0, 2.0], [7.0, 8.0]]);
        assert_eq!(wins[1].data(), &array![[2.0, 3.0], [8.0, 9.0]]);
        assert_eq!(wins[2].data(), &array![[3.0, 4.0], [9.0, 10.0]]);
    }

    #[test]
    fn partition_requires_divisibility() {
        let x = sine(1.0, 10.0, 7, 2);
        assert!(matches!(partition(&x, 3, 1).unwrap_err(), Error::Value(_)));
    }

    #[test]
    fn downsample_strided_columns() {
        let x = SpatiotemporalSignal::new(
            array![[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], [7.0, 8.0, 9.0, 10.0, 11.0, 12.0]],
            6.0,
        )
        .unwrap();
        let y = downsample(&x, 3).unwrap();
        assert_eq!(y.data(), &array![[1.0, 3.0, 5.0], [7.0, 9.0, 11.0]]);
        assert_abs_diff_eq!(y.sample_rate_hz(), 3.0);
    }

    #[test]
    fn downsample_identity() {
        let x = sine(2.0, 20.0, 10, 2);
        let y = downsample(&x, 10).unwrap();
        assert_eq!(y.data(), x.data());
        assert_eq!(y.sample_rate_hz(), x.sample_rate_hz());
    }

    #[test]
    fn downsample_non_dividing_target_takes_first_strided() {
        let x = SpatiotemporalSignal::new(
            array![[1.0, 2.0, 3.0, 4.0, 5.0], [6.0, 7.0, 8.0, 9.0, 10.0]],
            5.0,
        )
        .unwrap();
        let y = downsample(&x, 2).unwrap();
        assert_eq!(y.data(), &array![[1.0, 3.0], [6.0, 8.0]]);
    }

    #[test]
    fn downsample_rejects_bad_target() {
        let x = sine(1.0, 10.0, 8, 2);
        assert!(matches!(downsample(&x, 1).unwrap_err(), Error::Value(_)));
        assert!(matches!(downsample(&x, 9).unwrap_err(), Error::Value(_)));
    }

    /// Per-row DFT bin energies, folded over conjugate pairs.
    fn bin_energies(x: &SpatiotemporalSignal) -> Vec<Vec<f64>> {
        let t = x.samples();
        let mut planner = FftPlanner::<f64>::new();
        let fft = planner.plan_fft_forward(t);
        x.data()
            .rows()
            .into_iter()
            .map(|row| {
                let mut buf: Vec<Complex<f64>> =
                    row.iter().map(|&v| Complex::new(v, 0.0)).collect();
                fft.process(&mut buf);
                buf.iter().map(|c| c.norm_sqr()).collect()
            })
            .collect()
    }

    proptest! {
        #[test]
        fn prop_bandpass_idempotent(
            seed in 0u64..1000,
            t in 8usize..128,
            lo in 0.0f64..20.0,
            width in 0.5f64..30.0,
        ) {
            let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
            let mut next = move || {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            };
            let data = Array2::from_shape_fn((2, t), |_| next());
            let x = SpatiotemporalSignal::new(data, 100.0).unwrap();
            let once = bandpass(&x, lo, lo + width).unwrap();
            let twice = bandpass(&once, lo, lo + width).unwrap();
            let diff: f64 = once.data().iter().zip(twice.data().iter())
                .map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let scale = once.data().iter().map(|v| v.abs()).fold(1.0, f64::max);
            prop_assert!(diff <= 1e-12 * scale, "diff {diff}");
        }

        #[test]
        fn prop_bandpass_output_real(
            seed in 0u64..1000,
            t in 8usize..128,
        ) {
            let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(7);
            let mut next = move || {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            };
            let data = Array2::from_shape_fn((2, t), |_| next());
            let x = SpatiotemporalSignal::new(data, 100.0).unwrap();
            let (_, residue) = bandpass_with_residue(&x, 5.0, 20.0).unwrap();
            prop_assert!(residue < 1e-12, "imaginary residue {residue}");
        }

        #[test]
        fn prop_filter_bank_partitions_bin_energy(
            seed in 0u64..1000,
            t in 8usize..256,
            cuts in proptest::collection::vec(0.01f64..0.99, 1..5),
        ) {
            let fs = 100.0;
            let mut edges: Vec<f64> = cuts.iter().map(|c| c * fs / 2.0).collect();
            edges.push(0.0);
            edges.push(fs / 2.0);
            edges.sort_by(f64::total_cmp);
            edges.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
            prop_assume!(edges.len() >= 2);
            let bands = BandSpec::new(edges).unwrap();

            let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(3);
            let mut next = move || {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            };
            let data = Array2::from_shape_fn((2, t), |_| next());
            let x = SpatiotemporalSignal::new(data, fs).unwrap();

            let outs = filter_bank(&x, &bands).unwrap();
            let input_e = bin_energies(&x);
            let band_e: Vec<Vec<Vec<f64>>> = outs.iter().map(bin_energies).collect();
            for row in 0..2 {
                for bin in 0..t {
                    let total: f64 = band_e.iter().map(|b| b[row][bin]).sum();
                    let want = input_e[row][bin];
                    let scale = input_e[row].iter().cloned().fold(1.0, f64::max);
                    prop_assert!((total - want).abs() <= 1e-9 * scale,
                        "bin {bin}: `{total}` vs `{want}`");
                }
            }
        }

        #[test]
        fn prop_partition_concat_reproduces(
            seed in 0u64..1000,
            windows in 1usize..5,
            width in 2usize..6,
        ) {
            let t = windows * width;
            let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(11);
            let mut next = move || {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            };
            let data = Array2::from_shape_fn((3, t), |_| next());
            let x = SpatiotemporalSignal::new(data, 10.0).unwrap();
            let wins = partition(&x, windows, width).unwrap();
            let mut rebuilt = Array2::zeros((3, t));
            for (k, w) in wins.iter().enumerate() {
                rebuilt.slice_mut(s![.., k * width..(k + 1) * width]).assign(w.data());
            }
            prop_assert_eq!(&rebuilt, x.data());
        }
    }
}
