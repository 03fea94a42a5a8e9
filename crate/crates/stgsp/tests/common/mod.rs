//! Independent oracles for the acceptance suite. Everything here is written
//! directly from first principles (dense assembly, Floyd-Warshall, explicit
//! pair counting) and never calls the implementation paths it checks.

use ndarray::Array2;
use stgsp::signal::SpatiotemporalSignal;

/// Small deterministic generator so oracle inputs never depend on crate RNGs.
pub struct XorShift(pub u64);

impl XorShift {
    pub fn new(seed: u64) -> Self {
        Self(seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(0x1234_5678))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        self.0
    }

    /// Uniform in [-0.5, 0.5).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }
}

/// Brute-force assembly of the dense spatiotemporal adjacency from the
/// centered-product weight definitions: diagonal blocks from spatially
/// centered columns, lag-l blocks (rows time k, columns time k-l) from
/// temporally centered rows.
pub fn oracle_dense_adjacency(x: &SpatiotemporalSignal, max_lag: usize) -> Array2<f64> {
    let s = x.channels();
    let t = x.samples();
    let data = x.data();

    let mut spatial = data.clone();
    for k in 0..t {
        let mean: f64 = (0..s).map(|i| data[[i, k]]).sum::<f64>() / s as f64;
        for i in 0..s {
            spatial[[i, k]] -= mean;
        }
    }
    let mut temporal = data.clone();
    for i in 0..s {
        let mean: f64 = (0..t).map(|k| data[[i, k]]).sum::<f64>() / t as f64;
        for k in 0..t {
            temporal[[i, k]] -= mean;
        }
    }

    let n = s * t;
    let mut w = Array2::zeros((n, n));
    for k in 0..t {
        for i in 0..s {
            for j in 0..s {
                w[[k * s + i, k * s + j]] = (spatial[[i, k]] * spatial[[j, k]]).abs();
            }
        }
    }
    for l in 1..=max_lag {
        for k in l..t {
            for i in 0..s {
                for j in 0..s {
                    let v = (temporal[[i, k - l]] * temporal[[j, k]]).abs();
                    w[[k * s + i, (k - l) * s + j]] = v;
                    w[[(k - l) * s + j, k * s + i]] = v;
                }
            }
        }
    }
    w
}

/// All-pairs shortest paths by exhaustive relaxation (Floyd-Warshall) on the
/// unweighted off-diagonal graph.
pub fn floyd_warshall(w: &Array2<f64>) -> Vec<Vec<f64>> {
    let n = w.nrows();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for u in 0..n {
        d[u][u] = 0.0;
        for v in 0..n {
            if u != v && w[[u, v]] != 0.0 {
                d[u][v] = 1.0;
            }
        }
    }
    for mid in 0..n {
        for u in 0..n {
            for v in 0..n {
                let via = d[u][mid] + d[mid][v];
                if via < d[u][v] {
                    d[u][v] = via;
                }
            }
        }
    }
    d
}

/// The eleven topology metrics derived from scratch out of the
/// Floyd-Warshall distance matrix, in the implementation's feature order.
pub fn oracle_topology_metrics(w: &Array2<f64>, weight_source: &Array2<f64>) -> [f64; 11] {
    let n = w.nrows();
    let d = floyd_warshall(w);

    let mut edges = 0usize;
    for u in 0..n {
        for v in (u + 1)..n {
            if w[[u, v]] != 0.0 {
                edges += 1;
            }
        }
    }
    let density = if n > 1 {
        edges as f64 / (n * (n - 1) / 2) as f64
    } else {
        0.0
    };

    let degree_sum: usize = (0..n)
        .map(|u| (0..n).filter(|&v| v != u && w[[u, v]] != 0.0).count())
        .sum();
    let avg_degree = degree_sum as f64 / n as f64;

    let mut weight_sum = 0.0;
    for u in 0..n {
        for v in 0..n {
            if u != v {
                weight_sum += weight_source[[u, v]];
            }
        }
    }
    let avg_weight = if n > 1 {
        weight_sum / (n * (n - 1)) as f64
    } else {
        0.0
    };

    let n_self_loops = (0..n).filter(|&u| w[[u, u]] != 0.0).count() as f64;

    // component of u = its smallest reachable vertex
    let component: Vec<usize> = (0..n)
        .map(|u| (0..n).find(|&v| d[u][v].is_finite()).expect("self-reachable"))
        .collect();
    let mut roots: Vec<usize> = component.clone();
    roots.sort_unstable();
    roots.dedup();
    let n_components = roots.len() as f64;
    let sizes: Vec<usize> = roots
        .iter()
        .map(|&r| component.iter().filter(|&&c| c == r).count())
        .collect();
    let max_size = *sizes.iter().max().expect("non-empty");
    // roots are sorted by their minimum vertex, so the first maximal one is
    // the lowest-vertex tie-break
    let largest_root = roots[sizes.iter().position(|&s| s == max_size).unwrap()];

    let mut path_sum = 0.0;
    let mut path_pairs = 0usize;
    for u in 0..n {
        for v in 0..n {
            if u != v && d[u][v].is_finite() {
                path_sum += d[u][v];
                path_pairs += 1;
            }
        }
    }
    let char_path_length = if path_pairs > 0 {
        path_sum / path_pairs as f64
    } else {
        0.0
    };

    let members: Vec<usize> = (0..n).filter(|&u| component[u] == largest_root).collect();
    let mut ecc_sum = 0.0;
    let mut radius = f64::INFINITY;
    let mut diameter = 0.0f64;
    for &u in &members {
        let ecc = members
            .iter()
            .map(|&v| d[u][v])
            .fold(0.0f64, f64::max);
        ecc_sum += ecc;
        radius = radius.min(ecc);
        diameter = diameter.max(ecc);
    }
    let mean_eccentricity = ecc_sum / members.len() as f64;
    if !radius.is_finite() {
        radius = 0.0;
    }

    let mut efficiency_sum = 0.0;
    for u in 0..n {
        let nb: Vec<usize> = (0..n).filter(|&v| v != u && w[[u, v]] != 0.0).collect();
        let m = nb.len();
        if m < 2 {
            continue;
        }
        let mut sub = Array2::zeros((m, m));
        for a in 0..m {
            for b in 0..m {
                if a != b && w[[nb[a], nb[b]]] != 0.0 {
                    sub[[a, b]] = 1.0;
                }
            }
        }
        let sd = floyd_warshall(&sub);
        let mut inv = 0.0;
        for a in 0..m {
            for b in 0..m {
                if a != b && sd[a][b].is_finite() {
                    inv += 1.0 / sd[a][b];
                }
            }
        }
        efficiency_sum += inv / (m * (m - 1)) as f64;
    }
    let local_efficiency = efficiency_sum / n as f64;

    [
        density,
        local_efficiency,
        n_components,
        max_size as f64,
        avg_degree,
        avg_weight,
        n_self_loops,
        char_path_length,
        mean_eccentricity,
        radius,
        diameter,
    ]
}

/// Connected-component count by iterative depth-first search.
pub fn oracle_component_count(w: &Array2<f64>) -> usize {
    let n = w.nrows();
    let mut seen = vec![false; n];
    let mut count = 0;
    for start in 0..n {
        if seen[start] {
            continue;
        }
        count += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(u) = stack.pop() {
            for v in 0..n {
                if v != u && w[[u, v]] != 0.0 && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
    }
    count
}

/// AUC by explicit positive/negative pair counting, ties half-credited.
pub fn oracle_auc_pairs(scores: &[f64], labels: &[u8]) -> f64 {
    let mut credit = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        if labels[i] != 1 {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] != 0 {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                credit += 1.0;
            } else if si == sj {
                credit += 0.5;
            }
        }
    }
    credit / pairs
}

pub fn random_signal(s: usize, t: usize, fs: f64, rng: &mut XorShift) -> SpatiotemporalSignal {
    let data = Array2::from_shape_fn((s, t), |_| rng.next_f64() * 4.0);
    SpatiotemporalSignal::new(data, fs).expect("valid random signal")
}

pub fn random_symmetric_weights(n: usize, rng: &mut XorShift) -> Array2<f64> {
    let mut w = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let v = rng.next_f64() + 0.5; // [0, 1)
            w[[i, j]] = v;
            w[[j, i]] = v;
        }
    }
    w
}

pub fn random_binary_graph(n: usize, edge_percent: usize, rng: &mut XorShift) -> Array2<f64> {
    let mut w = Array2::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            if rng.below(100) < edge_percent {
                w[[i, j]] = 1.0;
                w[[j, i]] = 1.0;
            }
        }
    }
    w
}
