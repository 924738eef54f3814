//! Graphs, Laplacians, and their spectral bases.
//!
//! Graphs are undirected, unweighted, and simple, over nodes `0..n`. The
//! spectral basis of the Laplacian `L = D - W` is the Graph Fourier
//! Transform; edge perturbations are toggles (add if absent, delete if
//! present) applied pair by pair.

use std::collections::btree_set;
use std::collections::BTreeSet;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An unordered pair of distinct nodes, stored with the smaller index first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pair(u32, u32);

impl Pair {
    pub fn new(a: usize, b: usize) -> Result<Self> {
        if a == b {
            return Err(Error::arg(format!("self-loop pair ({a}, {b})")));
        }
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        Ok(Pair(i as u32, j as u32))
    }

    pub fn a(&self) -> usize {
        self.0 as usize
    }

    pub fn b(&self) -> usize {
        self.1 as usize
    }

    pub fn valid_for(&self, n: usize) -> bool {
        (self.1 as usize) < n
    }
}

/// Undirected, unweighted, simple graph over nodes `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<Pair>,
}

impl Graph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = Pair>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for e in edges {
            if !e.valid_for(n) {
                return Err(Error::arg(format!(
                    "edge ({}, {}) out of range for n = {n}",
                    e.a(),
                    e.b()
                )));
            }
            if !set.insert(e) {
                return Err(Error::arg(format!("duplicate edge ({}, {})", e.a(), e.b())));
            }
        }
        Ok(Graph { n, edges: set })
    }

    pub fn empty(n: usize) -> Self {
        Graph {
            n,
            edges: BTreeSet::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, e: Pair) -> bool {
        self.edges.contains(&e)
    }

    /// Edges in lexicographic order.
    pub fn edges(&self) -> btree_set::Iter<'_, Pair> {
        self.edges.iter()
    }

    pub fn edge_set(&self) -> &BTreeSet<Pair> {
        &self.edges
    }

    pub fn degree(&self, node: usize) -> usize {
        self.edges
            .iter()
            .filter(|e| e.a() == node || e.b() == node)
            .count()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0usize; self.n];
        for e in &self.edges {
            d[e.a()] += 1;
            d[e.b()] += 1;
        }
        d
    }

    /// Graph on the same nodes whose edges are exactly the absent pairs.
    pub fn complement(&self) -> Graph {
        let mut edges = BTreeSet::new();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let e = Pair(i as u32, j as u32);
                if !self.edges.contains(&e) {
                    edges.insert(e);
                }
            }
        }
        Graph { n: self.n, edges }
    }

    /// Stable 64-bit digest of `(n, sorted edges)`, used in diagnostics and
    /// trace snapshots.
    pub fn digest(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.n.hash(&mut h);
        for e in &self.edges {
            e.hash(&mut h);
        }
        h.finish()
    }

    /// Serialize to the edge-list interchange format: a `n <count>` header
    /// line, then one `i j` line per edge with `i < j`, sorted
    /// lexicographically.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "n {}", self.n);
        for e in &self.edges {
            let _ = writeln!(out, "{} {}", e.a(), e.b());
        }
        out
    }

    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty edge-list input".into()))?;
        let mut parts = header.split_whitespace();
        match (parts.next(), parts.next(), parts.next()) {
            (Some("n"), Some(count), None) => {
                let n: usize = count
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad node count '{count}'")))?;
                let mut edges = Vec::new();
                for line in lines {
                    let mut it = line.split_whitespace();
                    let (a, b) = match (it.next(), it.next(), it.next()) {
                        (Some(a), Some(b), None) => (a, b),
                        _ => return Err(Error::Parse(format!("bad edge line '{line}'"))),
                    };
                    let a: usize = a
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad node index '{a}'")))?;
                    let b: usize = b
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad node index '{b}'")))?;
                    if a >= b {
                        return Err(Error::Parse(format!(
                            "edge line '{line}' must satisfy i < j"
                        )));
                    }
                    edges.push(Pair::new(a, b)?);
                }
                Graph::new(n, edges)
            }
            _ => Err(Error::Parse(format!("bad header line '{header}'"))),
        }
    }

    pub fn write_edge_list(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_edge_list())?;
        Ok(())
    }

    pub fn read_edge_list(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_edge_list(&text)
    }
}

/// Combinatorial Laplacian `L = D - W` of an unweighted graph. Entries are
/// integers stored in floating point; row sums are exactly zero.
#[derive(Debug, Clone)]
pub struct LaplacianMatrix {
    matrix: DMatrix<f64>,
}

impl LaplacianMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }
}

pub fn laplacian(g: &Graph) -> LaplacianMatrix {
    let n = g.n();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for e in g.edges() {
        let (i, j) = (e.a(), e.b());
        m[(i, j)] = -1.0;
        m[(j, i)] = -1.0;
        m[(i, i)] += 1.0;
        m[(j, j)] += 1.0;
    }
    LaplacianMatrix { matrix: m }
}

/// Orthonormal eigenbasis of a graph Laplacian with eigenvalues ascending:
/// the Graph Fourier Transform of the graph.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    /// Columns are eigenvectors, ordered by ascending eigenvalue.
    pub vectors: DMatrix<f64>,
    /// Eigenvalues, ascending.
    pub values: DVector<f64>,
}

impl SpectralBasis {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// Max absolute entry of `VᵀV - I`.
    pub fn orthonormality_defect(&self) -> f64 {
        let n = self.n();
        let gram = self.vectors.transpose() * &self.vectors;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram[(i, j)] - target).abs());
            }
        }
        worst
    }

    /// Max absolute entry of `LV - V diag(Λ)`.
    pub fn eigen_residual(&self, l: &DMatrix<f64>) -> f64 {
        let lv = l * &self.vectors;
        let mut worst: f64 = 0.0;
        for k in 0..self.n() {
            for i in 0..self.n() {
                worst = worst.max((lv[(i, k)] - self.values[k] * self.vectors[(i, k)]).abs());
            }
        }
        worst
    }
}

/// Eigendecompose the Laplacian of `g`.
///
/// Eigenvalues are sorted ascending and each eigenvector's sign is
/// canonicalized so that its largest-magnitude entry (first such entry on
/// ties) is positive. Within numerically degenerate eigenvalue clusters any
/// orthonormal basis of the cluster is acceptable, so downstream comparisons
/// across implementations must be subspace-level.
pub fn gft(g: &Graph) -> Result<SpectralBasis> {
    let l = laplacian(g).into_matrix();
    decompose_symmetric(l, || (g.digest(), g.n()))
}

/// Eigendecompose an arbitrary symmetric matrix with the same ordering and
/// sign conventions as [`gft`].
pub(crate) fn decompose_symmetric(
    matrix: DMatrix<f64>,
    diag: impl Fn() -> (u64, usize),
) -> Result<SpectralBasis> {
    let n = matrix.nrows();
    let eigen = nalgebra::SymmetricEigen::try_new(matrix, f64::EPSILON, 0).ok_or_else(|| {
        let (graph_hash, n) = diag();
        Error::EigenFailure { graph_hash, n }
    })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eigen.eigenvalues[a]
            .partial_cmp(&eigen.eigenvalues[b])
            .expect("eigenvalues are finite")
    });
    let mut vectors = DMatrix::<f64>::zeros(n, n);
    let mut values = DVector::<f64>::zeros(n);
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = eigen.eigenvalues[src];
        let col = eigen.eigenvectors.column(src);
        let mut best = 0usize;
        for i in 1..n {
            if col[i].abs() > col[best].abs() {
                best = i;
            }
        }
        let flip = if col[best] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vectors[(i, dst)] = flip * col[i];
        }
    }
    Ok(SpectralBasis { vectors, values })
}

/// An ordered list of distinct node pairs to toggle relative to a base edge
/// set.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerturbationSet {
    pairs: Vec<Pair>,
}

impl PerturbationSet {
    pub fn new(pairs: Vec<Pair>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for p in &pairs {
            if !seen.insert(*p) {
                return Err(Error::arg(format!(
                    "duplicate pair ({}, {}) in perturbation set",
                    p.a(),
                    p.b()
                )));
            }
        }
        Ok(PerturbationSet { pairs })
    }

    pub fn empty() -> Self {
        PerturbationSet { pairs: Vec::new() }
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, e: Pair) -> bool {
        self.pairs.contains(&e)
    }

    pub fn push(&mut self, e: Pair) -> Result<()> {
        if self.contains(e) {
            return Err(Error::arg(format!(
                "pair ({}, {}) already in perturbation set",
                e.a(),
                e.b()
            )));
        }
        self.pairs.push(e);
        Ok(())
    }
}

/// Toggle each pair of `p` in `edges`: present pairs are removed, absent
/// pairs are added. Applying the same set twice returns the original edges.
pub fn perturb_edges(
    n: usize,
    edges: &BTreeSet<Pair>,
    p: &PerturbationSet,
) -> Result<BTreeSet<Pair>> {
    let mut out = edges.clone();
    for pair in p.pairs() {
        if !pair.valid_for(n) {
            return Err(Error::arg(format!(
                "pair ({}, {}) out of range for n = {n}",
                pair.a(),
                pair.b()
            )));
        }
        if !out.remove(pair) {
            out.insert(*pair);
        }
    }
    Ok(out)
}

/// Convenience wrapper toggling a perturbation set on a whole graph.
pub fn perturb_graph(g: &Graph, p: &PerturbationSet) -> Result<Graph> {
    let edges = perturb_edges(g.n(), g.edge_set(), p)?;
    Ok(Graph {
        n: g.n(),
        edges,
    })
}

/// Size of the symmetric difference of two edge sets.
pub fn perturbation_distance(e1: &BTreeSet<Pair>, e2: &BTreeSet<Pair>) -> usize {
    e1.symmetric_difference(e2).count()
}

/// Thread-safe cache of eigendecompositions keyed by the exact edge set, so
/// a graph revisited across greedy steps or patch models reuses its GFT.
#[derive(Default)]
pub struct GftCache {
    map: Mutex<HashMap<(usize, Vec<Pair>), Arc<SpectralBasis>>>,
    hits: std::sync::atomic::AtomicUsize,
    misses: std::sync::atomic::AtomicUsize,
}

impl GftCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, g: &Graph) -> Result<Arc<SpectralBasis>> {
        use std::sync::atomic::Ordering;
        let key = (g.n(), g.edges().copied().collect::<Vec<_>>());
        if let Some(hit) = self.map.lock().unwrap().get(&key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(hit.clone());
        }
        let basis = Arc::new(gft(g)?);
        self.misses.fetch_add(1, Ordering::Relaxed);
        self.map
            .lock()
            .unwrap()
            .entry(key)
            .or_insert_with(|| basis.clone());
        Ok(basis)
    }

    pub fn hits(&self) -> usize {
        self.hits.load(std::sync::atomic::Ordering::Relaxed)
    }

    pub fn misses(&self) -> usize {
        self.misses.load(std::sync::atomic::Ordering::Relaxed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(a: usize, b: usize) -> Pair {
        Pair::new(a, b).unwrap()
    }

    fn complete_graph(n: usize) -> Graph {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                edges.push(pair(i, j));
            }
        }
        Graph::new(n, edges).unwrap()
    }

    fn path_graph(n: usize) -> Graph {
        Graph::new(n, (0..n - 1).map(|i| pair(i, i + 1))).unwrap()
    }

    #[test]
    fn laplacian_of_k3() {
        let l = laplacian(&complete_graph(3));
        let expected = DMatrix::from_row_slice(
            3,
            3,
            &[2.0, -1.0, -1.0, -1.0, 2.0, -1.0, -1.0, -1.0, 2.0],
        );
        assert_eq!(l.matrix(), &expected);
    }

    #[test]
    fn laplacian_of_p2() {
        let l = laplacian(&path_graph(2));
        let expected = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        assert_eq!(l.matrix(), &expected);
    }

    #[test]
    fn k3_eigenvalues() {
        // Oracle: dense symmetric eigensolver on the 3x3 matrix gives {0, 3, 3}.
        let basis = gft(&complete_graph(3)).unwrap();
        assert!(basis.values[0].abs() <= 1e-10);
        assert!((basis.values[1] - 3.0).abs() <= 1e-10);
        assert!((basis.values[2] - 3.0).abs() <= 1e-10);
    }

    #[test]
    fn p2_spectrum_closed_form() {
        let basis = gft(&path_graph(2)).unwrap();
        assert!(basis.values[0].abs() <= 1e-12);
        assert!((basis.values[1] - 2.0).abs() <= 1e-12);
        let inv_sqrt2 = 1.0 / 2.0f64.sqrt();
        assert!((basis.vectors[(0, 0)] - inv_sqrt2).abs() <= 1e-12);
        assert!((basis.vectors[(1, 0)] - inv_sqrt2).abs() <= 1e-12);
    }

    #[test]
    fn path_spectrum_closed_form() {
        for n in [4usize, 8] {
            let basis = gft(&path_graph(n)).unwrap();
            for k in 0..n {
                let expected = 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / n as f64).cos();
                assert!(
                    (basis.values[k] - expected).abs() <= 1e-9,
                    "path P{n} eigenvalue {k}: {} vs {expected}",
                    basis.values[k]
                );
            }
        }
    }

    #[test]
    fn lattice_spectrum_is_kronecker_sum_of_paths() {
        // 3x3 grid: eigenvalues are all pairwise sums of two P3 spectra.
        let mut edges = Vec::new();
        for r in 0..3usize {
            for c in 0..3usize {
                if c + 1 < 3 {
                    edges.push(pair(r * 3 + c, r * 3 + c + 1));
                }
                if r + 1 < 3 {
                    edges.push(pair(r * 3 + c, (r + 1) * 3 + c));
                }
            }
        }
        let grid = Graph::new(9, edges).unwrap();
        let basis = gft(&grid).unwrap();
        let p3: Vec<f64> = (0..3)
            .map(|k| 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / 3.0).cos())
            .collect();
        let mut sums: Vec<f64> = p3
            .iter()
            .flat_map(|a| p3.iter().map(move |b| a + b))
            .collect();
        sums.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for k in 0..9 {
            assert!(
                (basis.values[k] - sums[k]).abs() <= 1e-9,
                "grid eigenvalue {k}: {} vs {}",
                basis.values[k],
                sums[k]
            );
        }
    }

    #[test]
    fn gft_invariants_hold() {
        let g = complete_graph(6);
        let basis = gft(&g).unwrap();
        let l = laplacian(&g).into_matrix();
        let scale = basis.values[basis.n() - 1].max(1.0);
        assert!(basis.orthonormality_defect() <= 1e-8);
        assert!(basis.eigen_residual(&l) <= 1e-6 * scale);
        assert!(basis.values[0].abs() <= 1e-8);
        for k in 1..basis.n() {
            assert!(basis.values[k] >= basis.values[k - 1] - 1e-12);
        }
    }

    #[test]
    fn gft_reconstructs_laplacian() {
        let g = path_graph(7);
        let basis = gft(&g).unwrap();
        let l = laplacian(&g).into_matrix();
        let recon =
            &basis.vectors * DMatrix::from_diagonal(&basis.values) * basis.vectors.transpose();
        let scale = basis.values[basis.n() - 1].max(1.0);
        let worst = (recon - l).abs().max();
        assert!(worst <= 1e-6 * scale);
    }

    #[test]
    fn toggle_deletes_and_adds() {
        let base: BTreeSet<Pair> = [pair(0, 1)].into_iter().collect();
        let p = PerturbationSet::new(vec![pair(0, 1)]).unwrap();
        let deleted = perturb_edges(3, &base, &p).unwrap();
        assert!(deleted.is_empty());

        let empty = BTreeSet::new();
        let added = perturb_edges(3, &empty, &p).unwrap();
        assert_eq!(added, base);
    }

    #[test]
    fn toggle_twice_is_identity() {
        let base: BTreeSet<Pair> = [pair(0, 1), pair(1, 2)].into_iter().collect();
        let p = PerturbationSet::new(vec![pair(0, 2), pair(1, 2)]).unwrap();
        let once = perturb_edges(4, &base, &p).unwrap();
        let twice = perturb_edges(4, &once, &p).unwrap();
        assert_eq!(twice, base);
    }

    #[test]
    fn toggle_out_of_range_is_error() {
        let base = BTreeSet::new();
        let p = PerturbationSet::new(vec![pair(0, 9)]).unwrap();
        assert!(matches!(
            perturb_edges(5, &base, &p),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn distance_counts_symmetric_difference() {
        let a: BTreeSet<Pair> = [pair(0, 1), pair(2, 3)].into_iter().collect();
        let b: BTreeSet<Pair> = [pair(0, 2), pair(1, 3), pair(1, 2)].into_iter().collect();
        assert_eq!(perturbation_distance(&a, &a), 0);
        assert_eq!(perturbation_distance(&a, &b), 5);
    }

    #[test]
    fn distance_matches_toggle_count_enumerated() {
        // For every perturbation set of <= 2 distinct pairs on n = 5, the
        // distance between a set and its toggle equals the pair count.
        let n = 5usize;
        let all_pairs: Vec<Pair> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| pair(i, j)))
            .collect();
        let base: BTreeSet<Pair> = [pair(0, 1), pair(1, 2), pair(3, 4)].into_iter().collect();
        for i in 0..all_pairs.len() {
            let p1 = PerturbationSet::new(vec![all_pairs[i]]).unwrap();
            let toggled = perturb_edges(n, &base, &p1).unwrap();
            assert_eq!(perturbation_distance(&base, &toggled), 1);
            for j in (i + 1)..all_pairs.len() {
                let p2 = PerturbationSet::new(vec![all_pairs[i], all_pairs[j]]).unwrap();
                let toggled = perturb_edges(n, &base, &p2).unwrap();
                assert_eq!(perturbation_distance(&base, &toggled), 2);
            }
        }
    }

    #[test]
    fn complement_shares_eigenvectors() {
        // Eigen-projectors of L(g) commute with L(complement(g)).
        let g = Graph::new(
            5,
            vec![pair(0, 1), pair(1, 2), pair(2, 3), pair(0, 3), pair(3, 4)],
        )
        .unwrap();
        let basis = gft(&g).unwrap();
        let lc = laplacian(&g.complement()).into_matrix();
        let n = basis.n();
        let scale = basis.values[n - 1].max(1.0);
        // Group eigenvalues into numerically degenerate clusters.
        let mut start = 0usize;
        while start < n {
            let mut end = start + 1;
            while end < n && basis.values[end] - basis.values[end - 1] <= 1e-9 * scale {
                end += 1;
            }
            let cluster = basis.vectors.columns(start, end - start);
            let projector = &cluster * cluster.transpose();
            let commutator = &projector * &lc - &lc * &projector;
            assert!(
                commutator.abs().max() <= 1e-6,
                "projector for cluster {start}..{end} does not commute"
            );
            start = end;
        }
    }

    #[test]
    fn edge_list_round_trip() {
        let g = Graph::new(4, vec![pair(2, 3), pair(0, 1), pair(0, 3)]).unwrap();
        let text = g.to_edge_list();
        assert_eq!(text, "n 4\n0 1\n0 3\n2 3\n");
        let parsed = Graph::from_edge_list(&text).unwrap();
        assert_eq!(parsed, g);
    }

    #[test]
    fn edge_list_rejects_malformed_input() {
        assert!(Graph::from_edge_list("").is_err());
        assert!(Graph::from_edge_list("m 4\n0 1\n").is_err());
        assert!(Graph::from_edge_list("n 4\n1 0\n").is_err());
        assert!(Graph::from_edge_list("n 4\n0 9\n").is_err());
        assert!(Graph::from_edge_list("n 4\n0 1 2\n").is_err());
    }

    #[test]
    fn cache_reuses_decompositions() {
        let cache = GftCache::new();
        let g = path_graph(6);
        let a = cache.get(&g).unwrap();
        let b = cache.get(&g).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(cache.hits(), 1);
        assert_eq!(cache.misses(), 1);
    }
}
