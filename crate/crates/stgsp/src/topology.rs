//! Graph-topology metrics of a spatial graph.
//!
//! All path-based quantities treat the graph as unweighted (any nonzero
//! off-diagonal weight is an edge) and stay finite on disconnected graphs:
//! averages run over connected pairs only, and eccentricity, radius and
//! diameter are taken from the largest component (ties broken by lowest
//! vertex index). Self loops count only toward `n_self_loops`.

use std::collections::VecDeque;

use crate::error::Result;
use crate::graph::SpatialGraph;

/// The eleven topology metrics, in their canonical feature order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopologyEmbedding {
    pub density: f64,
    pub local_efficiency: f64,
    pub n_components: f64,
    pub largest_component_size: f64,
    pub avg_degree: f64,
    pub avg_weight: f64,
    pub n_self_loops: f64,
    pub char_path_length: f64,
    pub mean_eccentricity: f64,
    pub radius: f64,
    pub diameter: f64,
}

pub const METRIC_NAMES: [&str; 11] = [
    "density",
    "local_efficiency",
    "n_components",
    "largest_component_size",
    "avg_degree",
    "avg_weight",
    "n_self_loops",
    "char_path_length",
    "mean_eccentricity",
    "radius",
    "diameter",
];

impl TopologyEmbedding {
    pub fn values(&self) -> [f64; 11] {
        [
            self.density,
            self.local_efficiency,
            self.n_components,
            self.largest_component_size,
            self.avg_degree,
            self.avg_weight,
            self.n_self_loops,
            self.char_path_length,
            self.mean_eccentricity,
            self.radius,
            self.diameter,
        ]
    }
}

/// Computes the eleven metrics of `g`. `avg_weight` is taken from
/// `pre_threshold` (the weighted graph the binary one was thresholded from)
/// when given, so it carries information density does not.
pub fn topology_embedding(
    g: &SpatialGraph,
    pre_threshold: Option<&SpatialGraph>,
) -> Result<TopologyEmbedding> {
    let n = g.vertex_count();
    let w = g.weights();

    let neighbors: Vec<Vec<usize>> = (0..n)
        .map(|u| (0..n).filter(|&v| v != u && w[[u, v]] != 0.0).collect())
        .collect();

    let edge_count: usize = neighbors.iter().map(Vec::len).sum::<usize>() / 2;
    let pair_count = n * (n - 1) / 2;
    let density = if pair_count > 0 {
        edge_count as f64 / pair_count as f64
    } else {
        0.0
    };

    let avg_degree = neighbors.iter().map(|nb| nb.len() as f64).sum::<f64>() / n as f64;

    let weight_source = pre_threshold.unwrap_or(g).weights();
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

    // Components in vertex order, so the first maximal one has the lowest
    // minimum vertex index.
    let mut component = vec![usize::MAX; n];
    let mut component_sizes = Vec::new();
    for start in 0..n {
        if component[start] != usize::MAX {
            continue;
        }
        let id = component_sizes.len();
        let mut size = 0usize;
        let mut queue = VecDeque::from([start]);
        component[start] = id;
        while let Some(u) = queue.pop_front() {
            size += 1;
            for &v in &neighbors[u] {
                if component[v] == usize::MAX {
                    component[v] = id;
                    queue.push_back(v);
                }
            }
        }
        component_sizes.push(size);
    }
    let n_components = component_sizes.len() as f64;
    let (largest_id, largest_size) = component_sizes
        .iter()
        .enumerate()
        .max_by_key(|&(id, &size)| (size, std::cmp::Reverse(id)))
        .map(|(id, &size)| (id, size))
        .expect("at least one vertex");

    // BFS distances from every vertex; usize::MAX marks unreachable.
    let dist_from = |src: usize| -> Vec<usize> {
        let mut dist = vec![usize::MAX; n];
        dist[src] = 0;
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            for &v in &neighbors[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    };

    let mut path_sum = 0.0;
    let mut path_pairs = 0usize;
    let mut ecc_sum = 0.0;
    let mut radius = f64::INFINITY;
    let mut diameter = 0.0f64;
    for u in 0..n {
        let dist = dist_from(u);
        for v in 0..n {
            if v != u && dist[v] != usize::MAX {
                path_sum += dist[v] as f64;
                path_pairs += 1;
            }
        }
        if component[u] == largest_id {
            let ecc = (0..n)
                .filter(|&v| component[v] == largest_id)
                .map(|v| dist[v])
                .max()
                .unwrap_or(0) as f64;
            ecc_sum += ecc;
            radius = radius.min(ecc);
            diameter = diameter.max(ecc);
        }
    }
    let char_path_length = if path_pairs > 0 {
        path_sum / path_pairs as f64
    } else {
        0.0
    };
    let mean_eccentricity = ecc_sum / largest_size as f64;
    if !radius.is_finite() {
        radius = 0.0;
    }

    // Local efficiency: average inverse distance inside each vertex's
    // neighborhood subgraph (the vertex itself excluded); unreachable pairs
    // contribute 0, as do neighborhoods with fewer than two vertices.
    let mut efficiency_sum = 0.0;
    for u in 0..n {
        let nb = &neighbors[u];
        if nb.len() < 2 {
            continue;
        }
        let m = nb.len();
        let sub_neighbors: Vec<Vec<usize>> = (0..m)
            .map(|a| {
                (0..m)
                    .filter(|&b| b != a && w[[nb[a], nb[b]]] != 0.0)
                    .collect()
            })
            .collect();
        let mut inv_sum = 0.0;
        for a in 0..m {
            let mut dist = vec![usize::MAX; m];
            dist[a] = 0;
            let mut queue = VecDeque::from([a]);
            while let Some(p) = queue.pop_front() {
                for &q in &sub_neighbors[p] {
                    if dist[q] == usize::MAX {
                        dist[q] = dist[p] + 1;
                        queue.push_back(q);
                    }
                }
            }
            for (b, &d) in dist.iter().enumerate() {
                if b != a && d != usize::MAX {
                    inv_sum += 1.0 / d as f64;
                }
            }
        }
        efficiency_sum += inv_sum / (m * (m - 1)) as f64;
    }
    let local_efficiency = efficiency_sum / n as f64;

    Ok(TopologyEmbedding {
        density,
        local_efficiency,
        n_components,
        largest_component_size: largest_size as f64,
        avg_degree,
        avg_weight,
        n_self_loops,
        char_path_length,
        mean_eccentricity,
        radius,
        diameter,
    })
}
