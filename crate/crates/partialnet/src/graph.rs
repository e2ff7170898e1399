//! Graph representation, stochastic block model specification and
//! sampling, edge-list ingestion, connected components, and summary
//! statistics.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{sym_eigen_values, Mat};

/// How the diagonal of a sampled adjacency matrix is filled.
///
/// Real networks carry no self-loops (`Zero`). The `Bernoulli` mode
/// draws the diagonal like any other entry, which makes the expected
/// matrix exactly low-rank and is useful for exact verification runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum DiagonalMode {
    #[default]
    Zero,
    Bernoulli,
}

/// Symmetric binary adjacency matrix with optional node labels.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyMatrix {
    n: usize,
    entries: Vec<u8>,
    labels: Option<Vec<String>>,
    diagonal_mode: DiagonalMode,
}

impl AdjacencyMatrix {
    pub fn new(n: usize, diagonal_mode: DiagonalMode) -> Self {
        AdjacencyMatrix {
            n,
            entries: vec![0; n * n],
            labels: None,
            diagonal_mode,
        }
    }

    /// Build from undirected edges over `0..n`.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut a = AdjacencyMatrix::new(n, DiagonalMode::Zero);
        for &(u, v) in edges {
            assert!(u < n && v < n, "edge ({u}, {v}) out of range");
            if u != v {
                a.set(u, v, 1);
            }
        }
        a
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn diagonal_mode(&self) -> DiagonalMode {
        self.diagonal_mode
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.entries[i * self.n + j]
    }

    /// Set both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, value: u8) {
        debug_assert!(value <= 1);
        self.entries[i * self.n + j] = value;
        self.entries[j * self.n + i] = value;
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn set_labels(&mut self, labels: Vec<String>) {
        assert_eq!(labels.len(), self.n);
        self.labels = Some(labels);
    }

    pub fn degree(&self, i: usize) -> usize {
        self.row(i).iter().map(|&v| v as usize).sum()
    }

    /// Number of edges counted over `i < j` (the diagonal is excluded).
    pub fn edge_count(&self) -> usize {
        let mut count = 0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                count += self.get(i, j) as usize;
            }
        }
        count
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.get(i, j) == 1 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn to_mat(&self) -> Mat {
        Mat::from_fn(self.n, self.n, |i, j| self.get(i, j) as f64)
    }

    /// Induced subgraph on `keep` (given in ascending order), with labels
    /// carried over.
    pub fn induced(&self, keep: &[usize]) -> AdjacencyMatrix {
        let mut sub = AdjacencyMatrix::new(keep.len(), self.diagonal_mode);
        for (new_i, &old_i) in keep.iter().enumerate() {
            for (new_j, &old_j) in keep.iter().enumerate().skip(new_i + 1) {
                if self.get(old_i, old_j) == 1 {
                    sub.set(new_i, new_j, 1);
                }
            }
            if self.get(old_i, old_i) == 1 {
                sub.entries[new_i * keep.len() + new_i] = 1;
            }
        }
        if let Some(labels) = &self.labels {
            sub.labels = Some(keep.iter().map(|&i| labels[i].clone()).collect());
        }
        sub
    }
}

/// Index translation produced by node-dropping operations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeMap {
    pub old_to_new: Vec<Option<usize>>,
    pub new_to_old: Vec<usize>,
}

impl NodeMap {
    pub fn from_kept(source_n: usize, kept: &[usize]) -> Self {
        let mut old_to_new = vec![None; source_n];
        for (new, &old) in kept.iter().enumerate() {
            old_to_new[old] = Some(new);
        }
        NodeMap {
            old_to_new,
            new_to_old: kept.to_vec(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.new_to_old.len() == self.old_to_new.len()
            && self.new_to_old.iter().enumerate().all(|(i, &o)| i == o)
    }
}

/// Stochastic block model: `K` communities, a symmetric connection
/// probability matrix, and a membership assignment for each node.
#[derive(Debug, Clone, PartialEq)]
pub struct SbmSpec {
    k: usize,
    p: Mat,
    membership: Vec<usize>,
}

impl SbmSpec {
    pub fn new(k: usize, p: Mat, membership: Vec<usize>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidSpec("K must be positive".into()));
        }
        if p.rows() != k || p.cols() != k {
            return Err(Error::InvalidSpec(format!(
                "P must be {k}x{k}, got {}x{}",
                p.rows(),
                p.cols()
            )));
        }
        if p.max_asymmetry() > 0.0 {
            return Err(Error::InvalidSpec("P must be symmetric".into()));
        }
        for i in 0..k {
            for j in 0..k {
                let v = p[(i, j)];
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidSpec(format!(
                        "P[{i}][{j}] = {v} outside [0, 1]"
                    )));
                }
            }
        }
        let mut seen = vec![false; k];
        for &g in &membership {
            if g >= k {
                return Err(Error::InvalidSpec(format!(
                    "membership value {g} outside 0..{k}"
                )));
            }
            seen[g] = true;
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::InvalidSpec("every community needs a member".into()));
        }
        Ok(SbmSpec { k, p, membership })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn p(&self) -> &Mat {
        &self.p
    }

    pub fn membership(&self) -> &[usize] {
        &self.membership
    }

    pub fn n(&self) -> usize {
        self.membership.len()
    }

    pub fn community_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &g in &self.membership {
            sizes[g] += 1;
        }
        sizes
    }

    /// Balanced membership: `n / k` nodes per community, remainder
    /// assigned to the last one.
    pub fn balanced_membership(n: usize, k: usize) -> Vec<usize> {
        let base = n / k;
        let mut out = Vec::with_capacity(n);
        for g in 0..k {
            let size = if g == k - 1 { n - base * (k - 1) } else { base };
            out.extend(std::iter::repeat_n(g, size));
        }
        out
    }
}

/// Diagnostics on how comfortably a spec sits inside the regime the
/// detection guarantees assume.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionReport {
    pub p_n: f64,
    pub min_anchor_row: f64,
    pub min_block_fraction: f64,
    pub sigma_k_over_pn: f64,
    pub gap_ok: bool,
    pub notes: String,
}

/// `E[A]` under the block model: `M[i][j] = P[g(i)][g(j)]`.
pub fn expected_adjacency(spec: &SbmSpec) -> Mat {
    let g = spec.membership();
    Mat::from_fn(spec.n(), spec.n(), |i, j| spec.p[(g[i], g[j])])
}

/// Draw one network. Entries above the diagonal are independent
/// Bernoulli draws; the matrix is symmetric; the diagonal follows
/// `diagonal_mode`. The same `(spec, seed, diagonal_mode)` always
/// produces the same matrix.
pub fn sample_adjacency(spec: &SbmSpec, seed: u64, diagonal_mode: DiagonalMode) -> AdjacencyMatrix {
    let n = spec.n();
    let g = spec.membership();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = AdjacencyMatrix::new(n, diagonal_mode);
    for i in 0..n {
        for j in i..n {
            let r: f64 = rng.random();
            if i == j {
                if diagonal_mode == DiagonalMode::Bernoulli && r < spec.p[(g[i], g[j])] {
                    a.entries[i * n + i] = 1;
                }
            } else if r < spec.p[(g[i], g[j])] {
                a.set(i, j, 1);
            }
        }
    }
    a
}

/// Whether node ids in an edge-list file start at 0 or at 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IndexBase {
    Zero,
    One,
}

impl IndexBase {
    fn offset(self) -> i64 {
        match self {
            IndexBase::Zero => 0,
            IndexBase::One => 1,
        }
    }
}

/// Parse a whitespace-separated edge list. Lines starting with `#` are
/// comments; a `# n=N` pragma pins the node count. Duplicate edges
/// collapse; self-loops are dropped under the zero-diagonal mode.
/// `symmetrize` records that directed input is folded to undirected
/// (every listed pair produces an undirected edge either way).
pub fn load_edge_list(
    path: &Path,
    index_base: IndexBase,
    symmetrize: bool,
) -> Result<AdjacencyMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(&text, path, index_base, symmetrize, None)
}

/// Same as [`load_edge_list`] with an explicit node count; ids at or
/// beyond `n` are rejected.
pub fn load_edge_list_with_n(
    path: &Path,
    index_base: IndexBase,
    symmetrize: bool,
    n: usize,
) -> Result<AdjacencyMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(&text, path, index_base, symmetrize, Some(n))
}

pub(crate) fn parse_edge_list(
    text: &str,
    path: &Path,
    index_base: IndexBase,
    _symmetrize: bool,
    declared_n: Option<usize>,
) -> Result<AdjacencyMatrix> {
    let offset = index_base.offset();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut declared = declared_n;
    let mut max_id = 0usize;

    for (line_no, raw) in text.lines().enumerate() {
        let line_no = line_no + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if declared.is_none() {
                if let Some(value) = comment.strip_prefix("n=") {
                    if let Ok(n) = value.trim().parse::<usize>() {
                        declared = Some(n);
                    }
                }
            }
            continue;
        }
        let mut tokens = line.split_whitespace();
        let (u_tok, v_tok) = match (tokens.next(), tokens.next()) {
            (Some(u), Some(v)) => (u, v),
            _ => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: line_no,
                    msg: format!("expected two node ids, got {line:?}"),
                })
            }
        };
        if tokens.next().is_some() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: line_no,
                msg: format!("trailing tokens in {line:?}"),
            });
        }
        let parse = |tok: &str| -> Result<i64> {
            tok.parse::<i64>().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: line_no,
                msg: format!("{tok:?} is not an integer"),
            })
        };
        let u_raw = parse(u_tok)?;
        let v_raw = parse(v_tok)?;
        for &id in &[u_raw, v_raw] {
            let shifted = id - offset;
            if shifted < 0 || declared.is_some_and(|n| shifted as usize >= n) {
                return Err(Error::Index {
                    path: path.to_path_buf(),
                    line: line_no,
                    id,
                    n: declared.unwrap_or(0),
                });
            }
        }
        let u = (u_raw - offset) as usize;
        let v = (v_raw - offset) as usize;
        max_id = max_id.max(u).max(v);
        pairs.push((u, v));
    }

    let n = declared.unwrap_or(if pairs.is_empty() { 0 } else { max_id + 1 });
    let mut a = AdjacencyMatrix::new(n, DiagonalMode::Zero);
    for (u, v) in pairs {
        if u != v {
            a.set(u, v, 1);
        }
    }
    Ok(a)
}

/// Canonical edge-list serialization: `# n=N` pragma, then one `u v`
/// line per edge with `u < v`, ascending. Base 0.
pub fn serialize_edge_list(a: &AdjacencyMatrix) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# n={}", a.n());
    for (u, v) in a.edges() {
        let _ = writeln!(out, "{u} {v}");
    }
    out
}

pub fn save_edge_list(a: &AdjacencyMatrix, path: &Path) -> Result<()> {
    std::fs::write(path, serialize_edge_list(a)).map_err(|e| Error::io(path, e))
}

/// Induced subgraph on the largest connected component. Ties go to the
/// component containing the smallest node id. Also returns the index
/// map between old and new node ids.
pub fn largest_connected_component(a: &AdjacencyMatrix) -> (AdjacencyMatrix, NodeMap) {
    let n = a.n();
    let mut component = vec![usize::MAX; n];
    let mut count = 0usize;
    let mut sizes = Vec::new();
    for start in 0..n {
        if component[start] != usize::MAX {
            continue;
        }
        let id = count;
        count += 1;
        let mut size = 0;
        let mut stack = vec![start];
        component[start] = id;
        while let Some(u) = stack.pop() {
            size += 1;
            for (v, &e) in a.row(u).iter().enumerate() {
                if e == 1 && v != u && component[v] == usize::MAX {
                    component[v] = id;
                    stack.push(v);
                }
            }
        }
        sizes.push(size);
    }
    // components are discovered in order of their smallest node id, so
    // the first maximal one wins ties
    let mut best = 0usize;
    for (id, &size) in sizes.iter().enumerate() {
        if size > sizes[best] {
            best = id;
        }
    }
    let kept: Vec<usize> = (0..n).filter(|&i| component[i] == best).collect();
    let map = NodeMap::from_kept(n, &kept);
    (a.induced(&kept), map)
}

/// Degree counts: `histogram[d]` = number of nodes with degree `d`.
pub fn degree_histogram(a: &AdjacencyMatrix) -> BTreeMap<usize, usize> {
    let mut hist = BTreeMap::new();
    for i in 0..a.n() {
        *hist.entry(a.degree(i)).or_insert(0) += 1;
    }
    hist
}

/// Parse a membership label file: CSV `node_id,community` with a
/// header line. Every node in `0..n` must be labeled.
pub fn load_membership_labels(path: &Path, index_base: IndexBase, n: usize) -> Result<Vec<usize>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let offset = match index_base {
        IndexBase::Zero => 0i64,
        IndexBase::One => 1,
    };
    let mut labels = vec![0usize; n];
    let mut seen = vec![false; n];
    for (line_no, raw) in text.lines().enumerate() {
        let line_no = line_no + 1;
        let line = raw.trim();
        if line.is_empty() || line_no == 1 || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split(',');
        let (id_tok, label_tok) = match (parts.next(), parts.next()) {
            (Some(a), Some(b)) => (a.trim(), b.trim()),
            _ => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: line_no,
                    msg: format!("expected node_id,community, got {line:?}"),
                })
            }
        };
        let id: i64 = id_tok.parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            msg: format!("{id_tok:?} is not an integer"),
        })?;
        let label: usize = label_tok.parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            msg: format!("{label_tok:?} is not an integer"),
        })?;
        let idx = id - offset;
        if idx < 0 || idx as usize >= n {
            return Err(Error::Index {
                path: path.to_path_buf(),
                line: line_no,
                id,
                n,
            });
        }
        labels[idx as usize] = label;
        seen[idx as usize] = true;
    }
    if seen.iter().any(|&s| !s) {
        let missing = seen.iter().position(|&s| !s).unwrap();
        return Err(Error::InvalidGrid(format!(
            "label file is missing node {missing}"
        )));
    }
    Ok(labels)
}

pub const DEFAULT_GAP_FRACTION: f64 = 0.1;

/// Diagnostic report on the regime conditions; `gap_fraction` scales
/// the minimum separation required between distinct `P` values.
pub fn check_conditions(
    spec: &SbmSpec,
    anchor_community: usize,
    gap_fraction: f64,
) -> ConditionReport {
    let k = spec.k();
    let p = spec.p();
    let mut p_n = 0.0f64;
    for i in 0..k {
        for j in 0..k {
            p_n = p_n.max(p[(i, j)]);
        }
    }
    let min_anchor_row = (0..k)
        .map(|j| p[(anchor_community, j)])
        .fold(f64::INFINITY, f64::min);
    let sizes = spec.community_sizes();
    let min_block_fraction =
        sizes.iter().copied().min().unwrap_or(0) as f64 / spec.n().max(1) as f64;

    let sigma_k = sym_eigen_values(p)
        .map(|values| values.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min))
        .unwrap_or(0.0);
    let sigma_k_over_pn = if p_n > 0.0 { sigma_k / p_n } else { 0.0 };

    let mut distinct: Vec<f64> = Vec::new();
    for i in 0..k {
        for j in 0..k {
            let v = p[(i, j)];
            if !distinct.contains(&v) {
                distinct.push(v);
            }
        }
    }
    distinct.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut gap_ok = true;
    for w in distinct.windows(2) {
        if w[1] - w[0] < gap_fraction * p_n {
            gap_ok = false;
        }
    }

    let notes = format!(
        "K={k}, n={}, distinct P values: {}; value-gap threshold {:.4}",
        spec.n(),
        distinct.len(),
        gap_fraction * p_n
    );
    ConditionReport {
        p_n,
        min_anchor_row,
        min_block_fraction,
        sigma_k_over_pn,
        gap_ok,
        notes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn model1_spec(n: usize, q: f64) -> SbmSpec {
        let p = Mat::from_rows(&[vec![3.0 * q, q], vec![q, 3.0 * q]]);
        SbmSpec::new(2, p, SbmSpec::balanced_membership(n, 2)).unwrap()
    }

    #[test]
    fn expected_adjacency_model1_small() {
        let p = Mat::from_rows(&[vec![0.3, 0.1], vec![0.1, 0.3]]);
        let spec = SbmSpec::new(2, p, vec![0, 0, 1, 1]).unwrap();
        let m = expected_adjacency(&spec);
        let expect = [
            [0.3, 0.3, 0.1, 0.1],
            [0.3, 0.3, 0.1, 0.1],
            [0.1, 0.1, 0.3, 0.3],
            [0.1, 0.1, 0.3, 0.3],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(m[(i, j)], expect[i][j]);
            }
        }
    }

    #[test]
    fn expected_adjacency_single_block() {
        let spec = SbmSpec::new(1, Mat::from_rows(&[vec![0.42]]), vec![0; 5]).unwrap();
        let m = expected_adjacency(&spec);
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(m[(i, j)], 0.42);
            }
        }
    }

    #[test]
    fn expected_adjacency_model2() {
        let q = 0.1;
        let p = Mat::from_rows(&[
            vec![3.0 * q, 1.5 * q, q],
            vec![1.5 * q, 3.0 * q, 1.5 * q],
            vec![q, 1.5 * q, 3.0 * q],
        ]);
        let spec = SbmSpec::new(3, p, SbmSpec::balanced_membership(6, 3)).unwrap();
        let m = expected_adjacency(&spec);
        assert!((m[(0, 1)] - 0.3).abs() < 1e-15);
        assert!((m[(0, 2)] - 0.15).abs() < 1e-15);
        assert!((m[(0, 4)] - 0.1).abs() < 1e-15);
        assert!((m[(2, 4)] - 0.15).abs() < 1e-15);
    }

    #[test]
    fn expected_adjacency_has_k_distinct_rows() {
        let spec = model1_spec(10, 0.1);
        let m = expected_adjacency(&spec);
        let mut rows: Vec<Vec<u64>> = (0..10)
            .map(|i| m.row(i).iter().map(|v| v.to_bits()).collect())
            .collect();
        rows.sort();
        rows.dedup();
        assert_eq!(rows.len(), 2);
    }

    #[test]
    fn sampling_extremes() {
        let all = SbmSpec::new(1, Mat::from_rows(&[vec![1.0]]), vec![0; 6]).unwrap();
        let a = sample_adjacency(&all, 3, DiagonalMode::Zero);
        assert_eq!(a.edge_count(), 15);
        for i in 0..6 {
            assert_eq!(a.get(i, i), 0);
        }
        let none = SbmSpec::new(1, Mat::from_rows(&[vec![0.0]]), vec![0; 6]).unwrap();
        let b = sample_adjacency(&none, 3, DiagonalMode::Zero);
        assert_eq!(b.edge_count(), 0);
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = model1_spec(40, 0.2);
        let a = sample_adjacency(&spec, 99, DiagonalMode::Zero);
        let b = sample_adjacency(&spec, 99, DiagonalMode::Zero);
        assert_eq!(a, b);
        let c = sample_adjacency(&spec, 100, DiagonalMode::Zero);
        assert_ne!(a, c);
    }

    #[test]
    fn sampling_density_matches_model() {
        // within-block density over many seeds stays near 3q = 0.3
        let spec = model1_spec(300, 0.1);
        let mut total_edges = 0usize;
        let mut total_pairs = 0usize;
        for seed in 0..100u64 {
            let a = sample_adjacency(&spec, seed, DiagonalMode::Zero);
            for i in 0..150 {
                for j in (i + 1)..150 {
                    total_edges += a.get(i, j) as usize;
                    total_pairs += 1;
                }
            }
        }
        let density = total_edges as f64 / total_pairs as f64;
        assert!((density - 0.3).abs() < 0.01, "density {density}");
    }

    #[test]
    fn edge_list_small_path() {
        let path = PathBuf::from("test.txt");
        let a = parse_edge_list("1 2\n1 3\n", &path, IndexBase::One, false, None).unwrap();
        assert_eq!(a.n(), 3);
        assert_eq!(a.edge_count(), 2);
        assert_eq!(a.get(0, 1), 1);
        assert_eq!(a.get(0, 2), 1);
        assert_eq!(a.get(1, 2), 0);
    }

    #[test]
    fn edge_list_self_loop_dropped() {
        let path = PathBuf::from("test.txt");
        let a = parse_edge_list("2 2\n1 2\n", &path, IndexBase::One, false, None).unwrap();
        assert_eq!(a.n(), 2);
        assert_eq!(a.get(1, 1), 0);
        assert_eq!(a.edge_count(), 1);
    }

    #[test]
    fn edge_list_duplicates_collapse() {
        let path = PathBuf::from("test.txt");
        let a = parse_edge_list("0 1\n1 0\n0 1\n", &path, IndexBase::Zero, true, None).unwrap();
        assert_eq!(a.edge_count(), 1);
    }

    #[test]
    fn edge_list_parse_error_carries_line() {
        let path = PathBuf::from("test.txt");
        let err =
            parse_edge_list("0 1\nnope 2\n", &path, IndexBase::Zero, false, None).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn edge_list_index_error() {
        let path = PathBuf::from("test.txt");
        let err = parse_edge_list("0 5\n", &path, IndexBase::Zero, false, Some(3)).unwrap_err();
        match err {
            Error::Index { id, n, .. } => {
                assert_eq!(id, 5);
                assert_eq!(n, 3);
            }
            other => panic!("unexpected error {other:?}"),
        }
        let err = parse_edge_list("0 1\n", &path, IndexBase::One, false, None).unwrap_err();
        assert!(matches!(err, Error::Index { id: 0, .. }));
    }

    #[test]
    fn edge_list_round_trip() {
        let spec = model1_spec(30, 0.15);
        let a = sample_adjacency(&spec, 5, DiagonalMode::Zero);
        let text = serialize_edge_list(&a);
        let b = parse_edge_list(&text, &PathBuf::from("x"), IndexBase::Zero, false, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn lcc_connected_graph_is_identity() {
        let a = AdjacencyMatrix::from_edges(4, &[(0, 1), (1, 2), (2, 3)]);
        let (sub, map) = largest_connected_component(&a);
        assert_eq!(sub.n(), 4);
        assert!(map.is_identity());
    }

    #[test]
    fn lcc_tie_breaks_to_smallest_id() {
        // two triangles + isolated vertex 6
        let a = AdjacencyMatrix::from_edges(7, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)]);
        let (sub, map) = largest_connected_component(&a);
        assert_eq!(sub.n(), 3);
        assert_eq!(map.new_to_old, vec![0, 1, 2]);
        assert_eq!(sub.edge_count(), 3);
    }

    #[test]
    fn degree_histogram_cases() {
        let empty = AdjacencyMatrix::new(3, DiagonalMode::Zero);
        assert_eq!(degree_histogram(&empty), BTreeMap::from([(0, 3)]));

        let triangle = AdjacencyMatrix::from_edges(3, &[(0, 1), (1, 2), (2, 0)]);
        assert_eq!(degree_histogram(&triangle), BTreeMap::from([(2, 3)]));
    }

    #[test]
    fn degree_histogram_toy_network() {
        let a = AdjacencyMatrix::from_edges(
            6,
            &[(0, 1), (0, 2), (0, 3), (1, 2), (3, 4), (3, 5), (4, 5)],
        );
        assert_eq!(degree_histogram(&a), BTreeMap::from([(2, 4), (3, 2)]));
    }

    #[test]
    fn conditions_model1() {
        let spec = model1_spec(100, 0.1);
        let report = check_conditions(&spec, 0, DEFAULT_GAP_FRACTION);
        assert!((report.p_n - 0.3).abs() < 1e-12);
        assert!((report.min_anchor_row - 0.1).abs() < 1e-12);
        assert!((report.min_block_fraction - 0.5).abs() < 1e-12);
        // eigenvalues of [[3q, q], [q, 3q]] are 4q and 2q
        assert!((report.sigma_k_over_pn - 2.0 / 3.0).abs() < 1e-10);
        assert!(report.gap_ok);
    }

    #[test]
    fn conditions_single_community() {
        let spec = SbmSpec::new(1, Mat::from_rows(&[vec![0.5]]), vec![0; 10]).unwrap();
        let report = check_conditions(&spec, 0, DEFAULT_GAP_FRACTION);
        assert!((report.sigma_k_over_pn - 1.0).abs() < 1e-12);
        assert!(report.gap_ok);
    }

    #[test]
    fn conditions_tiny_gap_fails() {
        let p = Mat::from_rows(&[vec![0.3, 0.299], vec![0.299, 0.3]]);
        let spec = SbmSpec::new(2, p, vec![0, 1]).unwrap();
        let report = check_conditions(&spec, 0, DEFAULT_GAP_FRACTION);
        assert!(!report.gap_ok);
    }

    #[test]
    fn membership_label_file_round_trip() {
        let dir = std::env::temp_dir().join("partialnet_label_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("labels.csv");
        std::fs::write(&path, "node_id,community\n0,1\n1,0\n2,1\n").unwrap();
        let labels = load_membership_labels(&path, IndexBase::Zero, 3).unwrap();
        assert_eq!(labels, vec![1, 0, 1]);

        std::fs::write(&path, "node_id,community\n0,1\n2,1\n").unwrap();
        assert!(load_membership_labels(&path, IndexBase::Zero, 3).is_err());

        std::fs::write(&path, "node_id,community\n0,x\n").unwrap();
        let err = load_membership_labels(&path, IndexBase::Zero, 1).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn monte_carlo_entry_mean() {
        // mean of entry (2, 250) over 1200 seeds within 4 standard errors
        let spec = model1_spec(300, 0.1);
        let p_true = 0.1;
        let reps = 1200;
        let mut hits = 0usize;
        for seed in 0..reps {
            let a = sample_adjacency(&spec, seed as u64, DiagonalMode::Zero);
            hits += a.get(2, 250) as usize;
        }
        let mean = hits as f64 / reps as f64;
        let se = (p_true * (1.0 - p_true) / reps as f64).sqrt();
        assert!((mean - p_true).abs() < 4.0 * se, "mean {mean}, se {se}");
    }
}
