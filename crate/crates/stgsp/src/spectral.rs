//! Spectral features of the flattened spatiotemporal graph: Laplacian,
//! eigendecomposition, graph Fourier transform, band energies, spectral
//! graph wavelet coefficients and the quadratic form.

use nalgebra::DMatrix;
use ndarray::Array2;

use crate::error::{Error, Result};

/// Graph Laplacian `L = D - W` with `D = diag(W 1)`.
///
/// Self loops cancel: `W[u][u]` enters both `D[u][u]` and the subtraction,
/// so they never affect `L`.
pub fn laplacian(w: &Array2<f64>) -> Result<Array2<f64>> {
    let (r, c) = w.dim();
    if r != c {
        return Err(Error::Value(format!("adjacency must be square, got {r}x{c}")));
    }
    let max = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for i in 0..r {
        for j in 0..c {
            let v = w[[i, j]];
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Value(format!(
                    "adjacency entry at ({i}, {j}) must be finite and non-negative, got {v}"
                )));
            }
            if (v - w[[j, i]]).abs() > 1e-12 * max.max(1.0) {
                return Err(Error::Value(format!("adjacency is asymmetric at ({i}, {j})")));
            }
        }
    }
    let mut l = -w.clone();
    for i in 0..r {
        let degree: f64 = w.row(i).sum();
        l[[i, i]] += degree;
    }
    Ok(l)
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a symmetric
/// matrix, with a deterministic sign convention: the first component of each
/// eigenvector that is nonzero (relative to the vector's largest entry) is
/// made positive.
#[derive(Debug, Clone)]
pub struct LaplacianSpectrum {
    eigenvalues: Vec<f64>,
    /// Column `n` is the eigenvector paired with `eigenvalues[n]`.
    eigenvectors: Array2<f64>,
}

impl LaplacianSpectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &Array2<f64> {
        &self.eigenvectors
    }

    pub fn lambda_max(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty spectrum")
    }
}

/// Dense symmetric eigendecomposition of a Laplacian (or any symmetric
/// matrix).
pub fn spectrum(l: &Array2<f64>) -> Result<LaplacianSpectrum> {
    let (r, c) = l.dim();
    if r != c || r == 0 {
        return Err(Error::Value(format!("matrix must be square and non-empty, got {r}x{c}")));
    }
    let max = l.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for i in 0..r {
        for j in (i + 1)..c {
            if (l[[i, j]] - l[[j, i]]).abs() > 1e-9 * max.max(1.0) {
                return Err(Error::Value(format!("matrix is asymmetric at ({i}, {j})")));
            }
        }
    }

    let m = DMatrix::from_fn(r, r, |i, j| l[[i, j]]);
    let eigen = nalgebra::linalg::SymmetricEigen::try_new(m, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Convergence(format!("symmetric eigensolver stalled on {r}x{r} matrix")))?;

    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[a].total_cmp(&eigen.eigenvalues[b]));

    let eigenvalues: Vec<f64> = order.iter().map(|&n| eigen.eigenvalues[n]).collect();
    let mut eigenvectors = Array2::zeros((r, r));
    for (out_col, &n) in order.iter().enumerate() {
        let col = eigen.eigenvectors.column(n);
        let peak = col.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let flip = col
            .iter()
            .find(|v| v.abs() > 1e-12 * peak.max(1.0))
            .map_or(false, |&v| v < 0.0);
        for i in 0..r {
            eigenvectors[[i, out_col]] = if flip { -col[i] } else { col[i] };
        }
    }

    Ok(LaplacianSpectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// Graph Fourier transform: projects `x` onto each eigenvector.
pub fn gft(spec: &LaplacianSpectrum, x: &[f64]) -> Result<Vec<f64>> {
    let n = spec.len();
    if x.len() != n {
        return Err(Error::Dimension(format!(
            "signal length {} does not match graph size {n}",
            x.len()
        )));
    }
    let u = spec.eigenvectors();
    Ok((0..n)
        .map(|col| (0..n).map(|row| x[row] * u[[row, col]]).sum())
        .collect())
}

/// Inverse transform: `x = U x_hat`.
pub fn inverse_gft(spec: &LaplacianSpectrum, x_hat: &[f64]) -> Result<Vec<f64>> {
    let n = spec.len();
    if x_hat.len() != n {
        return Err(Error::Dimension(format!(
            "coefficient length {} does not match graph size {n}",
            x_hat.len()
        )));
    }
    let u = spec.eigenvectors();
    Ok((0..n)
        .map(|row| (0..n).map(|col| u[[row, col]] * x_hat[col]).sum())
        .collect())
}

/// Ascending graph-frequency band boundaries `b_0 < b_1 < ... < b_M`
/// defining bands `[b_{m-1}, b_m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphBandSpec {
    boundaries: Vec<f64>,
}

impl GraphBandSpec {
    pub fn new(boundaries: Vec<f64>) -> Result<Self> {
        if boundaries.len() < 2 {
            return Err(Error::Value("need at least two band boundaries".to_string()));
        }
        if boundaries[0] < 0.0 {
            return Err(Error::Value("band boundaries must be non-negative".to_string()));
        }
        for w in boundaries.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::Value(format!(
                    "band boundaries must be strictly ascending, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self { boundaries })
    }

    /// `m` equal-width bands covering `[0, lambda_max]` with a hair of
    /// headroom so the top eigenvalue lands inside the last band. A
    /// non-positive `lambda_max` (empty graph) falls back to unit width.
    pub fn equal_width(m: usize, lambda_max: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::Value("band count must be positive".to_string()));
        }
        let upper = if lambda_max > 0.0 {
            lambda_max * (1.0 + 1e-9)
        } else {
            1.0
        };
        Self::new((0..=m).map(|i| i as f64 * upper / m as f64).collect())
    }

    pub fn band_count(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }
}

/// Energy of the graph signal in each graph-frequency band:
/// `E_m = sum of x_hat(lambda_n)^2 over lambda_n in [b_{m-1}, b_m)`.
/// Eigenvalues outside every band contribute nowhere.
///
/// Zero eigenvalues that the solver returns as tiny negatives are binned as
/// exactly zero, so a partition starting at 0 always captures them.
pub fn band_energies(spec: &LaplacianSpectrum, x: &[f64], bands: &GraphBandSpec) -> Result<Vec<f64>> {
    let x_hat = gft(spec, x)?;
    let scale = spec.lambda_max().abs().max(1.0);
    let mut energies = vec![0.0; bands.band_count()];
    for (lambda, coeff) in spec.eigenvalues().iter().zip(&x_hat) {
        let lambda = if *lambda < 0.0 && *lambda >= -1e-10 * scale {
            0.0
        } else {
            *lambda
        };
        for (m, w) in bands.boundaries.windows(2).enumerate() {
            if lambda >= w[0] && lambda < w[1] {
                energies[m] += coeff * coeff;
                break;
            }
        }
    }
    Ok(energies)
}

/// `(lambda_min, lambda_max, lambda_mean)` of the spectrum.
pub fn eigen_summary(spec: &LaplacianSpectrum) -> (f64, f64, f64) {
    let vals = spec.eigenvalues();
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    (vals[0], *vals.last().expect("non-empty"), mean)
}

/// The band-pass wavelet kernel `g(s) = s * exp(1 - s)`: zero at the origin,
/// peak value 1 at `s = 1`, decaying tail.
pub fn wavelet_kernel(s: f64) -> f64 {
    s * (1.0 - s).exp()
}

/// Default wavelet scales: `j` values, log-spaced so `t * lambda_max` spans
/// `[1, 40]`. Falls back to the raw span for an empty spectrum.
pub fn default_sgwt_scales(lambda_max: f64, j: usize) -> Vec<f64> {
    const SPAN_LO: f64 = 1.0;
    const SPAN_HI: f64 = 40.0;
    let denom = if lambda_max > 0.0 { lambda_max } else { 1.0 };
    (0..j)
        .map(|q| {
            let frac = if j > 1 { q as f64 / (j - 1) as f64 } else { 0.0 };
            let s = SPAN_LO * (SPAN_HI / SPAN_LO).powf(frac);
            s / denom
        })
        .collect()
}

/// Spectral graph wavelet coefficients at the spectrum's extremes.
///
/// For each scale `t`, the spectral-domain coefficients are
/// `c_n(t) = g(t * lambda_n) * x_hat(lambda_n)`. Emitted per scale: the
/// coefficients at the `z` smallest eigenvalues (ascending), then at the `z`
/// largest (descending) — `2 * scales.len() * z` values, scale-major.
pub fn sgwt_features(
    spec: &LaplacianSpectrum,
    x: &[f64],
    scales: &[f64],
    z: usize,
) -> Result<Vec<f64>> {
    let n = spec.len();
    if z == 0 || z > n {
        return Err(Error::Value(format!(
            "extreme-frequency count z={z} must be in 1..={n}"
        )));
    }
    if scales.is_empty() {
        return Err(Error::Value("need at least one wavelet scale".to_string()));
    }
    let x_hat = gft(spec, x)?;
    let lambdas = spec.eigenvalues();
    let mut out = Vec::with_capacity(2 * scales.len() * z);
    for &t in scales {
        for q in 0..z {
            out.push(wavelet_kernel(t * lambdas[q]) * x_hat[q]);
        }
        for q in 0..z {
            let idx = n - 1 - q;
            out.push(wavelet_kernel(t * lambdas[idx]) * x_hat[idx]);
        }
    }
    Ok(out)
}

/// Laplacian quadratic form `x' L x` — the total variation of the signal
/// over the graph's edges.
pub fn quadratic_form(l: &Array2<f64>, x: &[f64]) -> Result<f64> {
    let (r, c) = l.dim();
    if r != c {
        return Err(Error::Value(format!("matrix must be square, got {r}x{c}")));
    }
    if x.len() != r {
        return Err(Error::Dimension(format!(
            "signal length {} does not match matrix size {r}",
            x.len()
        )));
    }
    let mut total = 0.0;
    for i in 0..r {
        let mut acc = 0.0;
        for j in 0..c {
            acc += l[[i, j]] * x[j];
        }
        total += x[i] * acc;
    }
    Ok(total)
}

/// The spectral feature block extracted at the coarse level of the pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct GspEmbedding {
    pub band_energies: Vec<f64>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_mean: f64,
    pub wavelet_coeffs: Vec<f64>,
    pub quadratic_form: f64,
}

/// Computes the full spectral block from a Laplacian and a graph signal:
/// `m` equal-width band energies, the eigenvalue summary, `j`-scale wavelet
/// coefficients at `z` extreme frequencies each, and the quadratic form.
pub fn gsp_embedding(
    lap: &Array2<f64>,
    x: &[f64],
    m: usize,
    j: usize,
    z: usize,
) -> Result<GspEmbedding> {
    let spec = spectrum(lap)?;
    let (lambda_min, lambda_max, lambda_mean) = eigen_summary(&spec);
    let bands = GraphBandSpec::equal_width(m, lambda_max)?;
    let energies = band_energies(&spec, x, &bands)?;
    let scales = default_sgwt_scales(lambda_max, j);
    let wavelets = sgwt_features(&spec, x, &scales, z)?;
    let qf = quadratic_form(lap, x)?;
    Ok(GspEmbedding {
        band_energies: energies,
        lambda_min,
        lambda_max,
        lambda_mean,
        wavelet_coeffs: wavelets,
        quadratic_form: qf,
    })
}
