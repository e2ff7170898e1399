//! Experiment harness: simulation grids over block models and sparsity
//! rules, the spectral-theory verification sweep, the karate club case
//! study, and the political-blog pipeline.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data;
use crate::detect::{
    best_label_alignment, detect_communities, divide_clusters, misclustering_rate,
    spectral_cluster_full, DetectConfig,
};
use crate::error::{Error, Result};
use crate::graph::{
    degree_histogram, largest_connected_component, load_edge_list, load_membership_labels,
    sample_adjacency, DiagonalMode, IndexBase, SbmSpec,
};
use crate::linalg::{dot, magnitude_order, mix_seed, sym_eigen_values, Mat};
use crate::spectral::{
    build_theory_oracle, compute_m_set, empirical_c2, major_term_report,
    solve_quadratic_eigenproblem, verify_rank_be, SpectralEmbedding,
};
use crate::view::{delete_edge, perceive_based, perceive_within, view_stats, Depth};

/// The block models used in the simulation studies. All have `3q` on
/// the diagonal; they differ in size `K` and in the off-diagonal decay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Model {
    One,
    Two,
    Three,
}

impl Model {
    pub fn k(self) -> usize {
        match self {
            Model::One => 2,
            Model::Two => 3,
            Model::Three => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Model::One => "model1",
            Model::Two => "model2",
            Model::Three => "model3",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text.trim() {
            "1" | "model1" => Ok(Model::One),
            "2" | "model2" => Ok(Model::Two),
            "3" | "model3" => Ok(Model::Three),
            other => Err(Error::InvalidGrid(format!("unknown model {other:?}"))),
        }
    }

    pub fn p_matrix(self, q: f64) -> Mat {
        match self {
            Model::One => Mat::from_rows(&[vec![3.0 * q, q], vec![q, 3.0 * q]]),
            Model::Two => Mat::from_rows(&[
                vec![3.0 * q, 1.5 * q, q],
                vec![1.5 * q, 3.0 * q, 1.5 * q],
                vec![q, 1.5 * q, 3.0 * q],
            ]),
            Model::Three => Mat::from_rows(&[
                vec![3.0 * q, q, q],
                vec![q, 3.0 * q, q],
                vec![q, q, 3.0 * q],
            ]),
        }
    }

    pub fn spec(self, n: usize, q: f64) -> Result<SbmSpec> {
        SbmSpec::new(
            self.k(),
            self.p_matrix(q),
            SbmSpec::balanced_membership(n, self.k()),
        )
    }

    fn id(self) -> u64 {
        match self {
            Model::One => 1,
            Model::Two => 2,
            Model::Three => 3,
        }
    }
}

/// Sparsity rules for the base probability `q` as a function of `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum QRule {
    Fixed(f64),
    SqrtLogNOverN,
    QuarterRootLogNOverNHalf,
    InvSqrtN,
}

impl QRule {
    pub fn value(self, n: usize) -> f64 {
        let nf = n as f64;
        match self {
            QRule::Fixed(v) => v,
            QRule::SqrtLogNOverN => (nf.ln() / nf).sqrt(),
            QRule::QuarterRootLogNOverNHalf => (nf.ln() / nf).powf(0.25) / 2.0,
            QRule::InvSqrtN => 1.0 / nf.sqrt(),
        }
    }

    pub fn label(self) -> String {
        match self {
            QRule::Fixed(v) => format!("fixed({v})"),
            QRule::SqrtLogNOverN => "sqrt_logn_over_n".to_string(),
            QRule::QuarterRootLogNOverNHalf => "quarter_root_logn_over_n_half".to_string(),
            QRule::InvSqrtN => "inv_sqrt_n".to_string(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        match t {
            "sqrt_logn_over_n" => Ok(QRule::SqrtLogNOverN),
            "quarter_root_logn_over_n_half" | "quarter_root" => Ok(QRule::QuarterRootLogNOverNHalf),
            "inv_sqrt_n" => Ok(QRule::InvSqrtN),
            other => {
                let inner = other
                    .strip_prefix("fixed(")
                    .and_then(|rest| rest.strip_suffix(')'))
                    .unwrap_or(other);
                inner
                    .parse::<f64>()
                    .map(QRule::Fixed)
                    .map_err(|_| Error::InvalidGrid(format!("unknown q rule {text:?}")))
            }
        }
    }

    fn id(self) -> u64 {
        match self {
            QRule::Fixed(v) => 0x10 ^ v.to_bits(),
            QRule::SqrtLogNOverN => 0x21,
            QRule::QuarterRootLogNOverNHalf => 0x32,
            QRule::InvSqrtN => 0x43,
        }
    }
}

/// Where the anchor sits in simulated networks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AnchorRule {
    FirstNode,
    Explicit(usize),
}

impl AnchorRule {
    fn index(self) -> usize {
        match self {
            AnchorRule::FirstNode => 0,
            AnchorRule::Explicit(i) => i,
        }
    }
}

/// Which metric families a grid run computes.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MetricSet {
    pub stats: bool,
    pub partial_detection: bool,
    pub full_baseline: bool,
}

impl Default for MetricSet {
    fn default() -> Self {
        MetricSet {
            stats: true,
            partial_detection: true,
            full_baseline: true,
        }
    }
}

impl MetricSet {
    pub fn stats_only() -> Self {
        MetricSet {
            stats: true,
            partial_detection: false,
            full_baseline: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentGrid {
    pub model: Model,
    pub ns: Vec<usize>,
    pub qs: Vec<QRule>,
    pub reps: usize,
    pub seed: u64,
    pub anchor: AnchorRule,
    pub metrics: MetricSet,
    pub restarts: usize,
}

impl ExperimentGrid {
    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::InvalidGrid("reps must be at least 1".into()));
        }
        if self.ns.is_empty() {
            return Err(Error::InvalidGrid("ns must be non-empty".into()));
        }
        for &n in &self.ns {
            if self.anchor.index() >= n {
                return Err(Error::InvalidGrid(format!(
                    "anchor {} out of range for n = {n}",
                    self.anchor.index()
                )));
            }
            for &q in &self.qs {
                let value = q.value(n);
                // the largest P entry is 3q, which must stay a probability
                if !(value > 0.0 && 3.0 * value < 1.0) {
                    return Err(Error::InvalidGrid(format!(
                        "q rule {} gives q = {value} at n = {n}",
                        q.label()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Stable per-replicate seed: any cell can be reproduced in isolation.
pub fn replicate_seed(base: u64, model: Model, n: usize, q: QRule, rep: usize) -> u64 {
    let mut h = mix_seed(base, 0x9d3f);
    h = mix_seed(h, model.id());
    h = mix_seed(h, n as u64);
    h = mix_seed(h, q.id());
    mix_seed(h, rep as u64)
}

const SALT_DETECT: u64 = 0xD7;
const SALT_BASELINE: u64 = 0xF1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicateRow {
    pub model: String,
    pub n: usize,
    pub q_rule: String,
    pub q_value: f64,
    pub rep: usize,
    pub observed_edge_ratio: Option<f64>,
    pub within_depth_fraction: Option<f64>,
    pub misclustering_partial: Option<f64>,
    pub misclustering_full: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: String,
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellSummary {
    pub model: String,
    pub n: usize,
    pub q_rule: String,
    pub q_value: f64,
    pub reps: usize,
    pub failures: usize,
    pub metrics: Vec<MetricSummary>,
}

impl CellSummary {
    pub fn metric_mean(&self, name: &str) -> Option<f64> {
        self.metrics
            .iter()
            .find(|m| m.metric == name)
            .map(|m| m.mean)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridResult {
    pub model: String,
    pub seed: u64,
    pub reps: usize,
    pub rows: Vec<ReplicateRow>,
    pub cells: Vec<CellSummary>,
}

impl GridResult {
    pub fn cell(&self, n: usize, q_label: &str) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.n == n && c.q_rule == q_label)
    }
}

/// Run every `(n, q, rep)` combination. Replicates execute in parallel;
/// each one derives its own seed, so the emitted result is identical
/// however the work is scheduled.
pub fn run_grid(grid: &ExperimentGrid) -> Result<GridResult> {
    grid.validate()?;
    let config = DetectConfig {
        restarts: grid.restarts,
        ..DetectConfig::default()
    };
    let mut tasks = Vec::new();
    for (ni, &n) in grid.ns.iter().enumerate() {
        for (qi, &q) in grid.qs.iter().enumerate() {
            for rep in 0..grid.reps {
                tasks.push((ni, qi, n, q, rep));
            }
        }
    }
    let mut rows: Vec<((usize, usize, usize), ReplicateRow)> = tasks
        .par_iter()
        .map(|&(ni, qi, n, q, rep)| {
            let row = run_replicate(grid, n, q, rep, &config);
            ((ni, qi, rep), row)
        })
        .collect();
    rows.sort_by_key(|&(key, _)| key);
    let rows: Vec<ReplicateRow> = rows.into_iter().map(|(_, row)| row).collect();

    let mut cells = Vec::new();
    for &n in &grid.ns {
        for &q in &grid.qs {
            let label = q.label();
            let cell_rows: Vec<&ReplicateRow> = rows
                .iter()
                .filter(|r| r.n == n && r.q_rule == label)
                .collect();
            let failures = cell_rows.iter().filter(|r| r.failure.is_some()).count();
            let mut metrics = Vec::new();
            let mut push_metric = |name: &str, values: Vec<f64>| {
                if values.is_empty() {
                    return;
                }
                let count = values.len();
                let mean = values.iter().sum::<f64>() / count as f64;
                let stderr = if count > 1 {
                    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                        / (count as f64 - 1.0);
                    (var / count as f64).sqrt()
                } else {
                    0.0
                };
                metrics.push(MetricSummary {
                    metric: name.to_string(),
                    mean,
                    stderr,
                    count,
                });
            };

            push_metric(
                "observed_edge_ratio",
                cell_rows
                    .iter()
                    .filter_map(|r| r.observed_edge_ratio)
                    .collect(),
            );
            push_metric(
                "within_depth_fraction",
                cell_rows
                    .iter()
                    .filter_map(|r| r.within_depth_fraction)
                    .collect(),
            );
            push_metric(
                "misclustering_partial",
                cell_rows
                    .iter()
                    .filter_map(|r| r.misclustering_partial)
                    .collect(),
            );
            push_metric(
                "misclustering_full",
                cell_rows
                    .iter()
                    .filter_map(|r| r.misclustering_full)
                    .collect(),
            );
            cells.push(CellSummary {
                model: grid.model.name().to_string(),
                n,
                q_rule: label,
                q_value: q.value(n),
                reps: grid.reps,
                failures,
                metrics,
            });
        }
    }
    Ok(GridResult {
        model: grid.model.name().to_string(),
        seed: grid.seed,
        reps: grid.reps,
        rows,
        cells,
    })
}

fn run_replicate(
    grid: &ExperimentGrid,
    n: usize,
    q: QRule,
    rep: usize,
    config: &DetectConfig,
) -> ReplicateRow {
    let q_value = q.value(n);
    let mut row = ReplicateRow {
        model: grid.model.name().to_string(),
        n,
        q_rule: q.label(),
        q_value,
        rep,
        observed_edge_ratio: None,
        within_depth_fraction: None,
        misclustering_partial: None,
        misclustering_full: None,
        failure: None,
    };
    let spec = match grid.model.spec(n, q_value) {
        Ok(s) => s,
        Err(e) => {
            row.failure = Some(e.to_string());
            return row;
        }
    };
    let seed = replicate_seed(grid.seed, grid.model, n, q, rep);
    let a = sample_adjacency(&spec, seed, DiagonalMode::Zero);
    let anchor = grid.anchor.index();
    let view = perceive_based(&a, anchor, Depth::Two);

    if grid.metrics.stats {
        match view_stats(&a, &view) {
            Ok(stats) => {
                row.observed_edge_ratio = Some(stats.observed_edge_ratio);
                row.within_depth_fraction = Some(stats.within_depth_fraction);
            }
            Err(e) => {
                row.failure = Some(e.to_string());
                return row;
            }
        }
    }
    if grid.metrics.partial_detection {
        match detect_communities(&view, spec.k(), mix_seed(seed, SALT_DETECT), config)
            .and_then(|res| misclustering_rate(&res.membership, spec.membership(), spec.k()))
        {
            Ok(rate) => row.misclustering_partial = Some(rate),
            Err(e) => {
                row.failure = Some(e.to_string());
                return row;
            }
        }
    }
    if grid.metrics.full_baseline {
        match spectral_cluster_full(&a, spec.k(), mix_seed(seed, SALT_BASELINE), config)
            .and_then(|labels| misclustering_rate(&labels, spec.membership(), spec.k()))
        {
            Ok(rate) => row.misclustering_full = Some(rate),
            Err(e) => {
                row.failure = Some(e.to_string());
                return row;
            }
        }
    }
    row
}

/// Configuration of the spectral-theory verification sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TheoryCheckConfig {
    pub instances: usize,
    pub seed: u64,
    pub ks: Vec<usize>,
    pub n_range: (usize, usize),
    pub q_range: (f64, f64),
    pub restarts: usize,
}

impl Default for TheoryCheckConfig {
    fn default() -> Self {
        TheoryCheckConfig {
            instances: 50,
            seed: 20_240_817,
            ks: vec![1, 2, 3],
            n_range: (100, 400),
            q_range: (0.1, 0.3),
            restarts: 20,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RootResiduals {
    pub h_max: f64,
    pub eigen_max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormRatios {
    pub err_over_sigma: f64,
    pub err_over_norm: f64,
    pub proxy_over_norm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TheoryInstanceReport {
    pub k: usize,
    pub n: usize,
    pub q: f64,
    pub seed: u64,
    #[serde(rename = "rank_BE")]
    pub rank_be: usize,
    pub gap_ratio: f64,
    pub root_residuals: RootResiduals,
    pub orthogonality_max: Option<f64>,
    pub norm_ratios: NormRatios,
    pub companion_vs_dense_max_rel: f64,
    pub closed_form_max_err: Option<f64>,
    pub m_fraction: f64,
    pub pass: bool,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TheoryCheckReport {
    pub config_seed: u64,
    pub instances: Vec<TheoryInstanceReport>,
    pub all_pass: bool,
}

/// Draw random block-model instances and verify the spectral claims on
/// each: the signal matrix has rank exactly `2K` with a large spectral
/// gap, the companion-linearization roots match a dense eigensolve, the
/// reconstructed eigenvectors are genuine eigenpairs and mutually
/// orthogonal, and for `K = 1` the roots match the scalar closed form.
pub fn run_theory_check(config: &TheoryCheckConfig) -> Result<TheoryCheckReport> {
    let reports: Vec<TheoryInstanceReport> = (0..config.instances)
        .into_par_iter()
        .map(|idx| theory_instance(config, idx as u64))
        .collect::<Result<Vec<_>>>()?;
    let all_pass = reports.iter().all(|r| r.pass);
    Ok(TheoryCheckReport {
        config_seed: config.seed,
        instances: reports,
        all_pass,
    })
}

fn theory_instance(config: &TheoryCheckConfig, idx: u64) -> Result<TheoryInstanceReport> {
    let base = mix_seed(config.seed, idx);
    // deterministic resampling until the invertibility preconditions hold
    for attempt in 0..40u64 {
        let seed = mix_seed(base, attempt);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = config.ks[rng.random_range(0..config.ks.len())];
        let n = rng.random_range(config.n_range.0..=config.n_range.1);
        let q = config.q_range.0 + rng.random::<f64>() * (config.q_range.1 - config.q_range.0);

        // randomized block matrix in the models' shape: strong diagonal
        // 3q, off-diagonal between q and 2q
        let mut p = Mat::zeros(k, k);
        for a in 0..k {
            for b in a..k {
                let v = if a == b {
                    3.0 * q
                } else {
                    q * (1.0 + rng.random::<f64>())
                };
                p[(a, b)] = v;
                p[(b, a)] = v;
            }
        }
        let spec = match SbmSpec::new(k, p, SbmSpec::balanced_membership(n, k)) {
            Ok(s) => s,
            Err(_) => continue,
        };
        let a = sample_adjacency(&spec, mix_seed(seed, 0x5a), DiagonalMode::Zero);
        let view = perceive_based(&a, 0, Depth::Two);
        let oracle = match build_theory_oracle(&spec, view.s()) {
            Ok(o) => o,
            Err(_) => continue,
        };
        if !oracle.invertible() {
            continue;
        }
        let roots = match solve_quadratic_eigenproblem(&oracle) {
            Ok(r) => r,
            Err(Error::ComplexRoots(_)) | Err(Error::RootSignImbalance { .. }) => continue,
            Err(e) => return Err(e),
        };
        let (rank_be, gap_ratio) = verify_rank_be(&oracle)?;

        // companion roots against the dense eigensolve of BE
        let dense = sym_eigen_values(&oracle.be)?;
        let order = magnitude_order(&dense);
        let mut dense_top: Vec<f64> = order.iter().take(2 * k).map(|&i| dense[i]).collect();
        dense_top.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let mut ys = roots.ys.clone();
        ys.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let y_scale = ys.iter().map(|y| y.abs()).fold(0.0f64, f64::max);
        let companion_vs_dense_max_rel = ys
            .iter()
            .zip(&dense_top)
            .map(|(y, d)| (y - d).abs() / y_scale)
            .fold(0.0f64, f64::max);

        let mut orthogonality_max: Option<f64> = None;
        for i in 0..2 * k {
            for j in (i + 1)..2 * k {
                if (roots.ys[i] - roots.ys[j]).abs() > 1e-6 {
                    let g = dot(&roots.qfull.column(i), &roots.qfull.column(j)).abs();
                    orthogonality_max = Some(orthogonality_max.map_or(g, |cur: f64| cur.max(g)));
                }
            }
        }

        let closed_form_max_err = if k == 1 {
            let s_count = oracle.s.iter().map(|&v| v as usize).sum::<usize>() as f64;
            let p_val = oracle.spec.p()[(0, 0)];
            let disc = (s_count * s_count + 4.0 * s_count * (n as f64 - s_count)).sqrt();
            let y_minus = p_val * (s_count - disc) / 2.0;
            let y_plus = p_val * (s_count + disc) / 2.0;
            let err = (roots.ys[0] - y_minus)
                .abs()
                .max((roots.ys[1] - y_plus).abs());
            Some(err)
        } else {
            None
        };

        let report = major_term_report(&a, &view, &oracle)?;
        let detect_cfg = DetectConfig {
            restarts: config.restarts,
            ..DetectConfig::default()
        };
        let divide = match divide_clusters(&view, k, mix_seed(seed, 0x4d), &detect_cfg) {
            Ok(d) => d,
            Err(Error::GroupTooSmall(_, _)) => continue,
            Err(e) => return Err(e),
        };
        let embedding = SpectralEmbedding {
            w: divide.embedding.w.clone(),
            values: divide.embedding.values.clone(),
        };
        let c2 = empirical_c2(&oracle, &roots)?;
        let (_, m_fraction) = compute_m_set(&roots, &embedding, &divide.centroid_rows, c2)?;

        let h_max = roots.h_residuals.iter().copied().fold(0.0f64, f64::max);
        let eigen_max = roots.eigen_residuals.iter().copied().fold(0.0f64, f64::max);
        let mut failures = Vec::new();
        if rank_be != 2 * k {
            failures.push(format!("rank {rank_be} != {}", 2 * k));
        }
        if gap_ratio <= 1e6 {
            failures.push(format!("gap ratio {gap_ratio:.3e} <= 1e6"));
        }
        if companion_vs_dense_max_rel > 1e-8 {
            failures.push(format!(
                "companion vs dense {companion_vs_dense_max_rel:.3e} > 1e-8"
            ));
        }
        if h_max > 1e-8 || eigen_max > 1e-8 {
            failures.push(format!("residuals {h_max:.3e}/{eigen_max:.3e} > 1e-8"));
        }
        if let Some(o) = orthogonality_max {
            if o > 1e-6 {
                failures.push(format!("orthogonality {o:.3e} > 1e-6"));
            }
        }
        if let Some(err) = closed_form_max_err {
            if err > 1e-10 {
                failures.push(format!("closed form err {err:.3e} > 1e-10"));
            }
        }
        return Ok(TheoryInstanceReport {
            k,
            n,
            q,
            seed,
            rank_be,
            gap_ratio,
            root_residuals: RootResiduals { h_max, eigen_max },
            orthogonality_max,
            norm_ratios: NormRatios {
                err_over_sigma: report.err_over_sigma,
                err_over_norm: report.err_over_norm,
                proxy_over_norm: report.proxy_over_norm,
            },
            companion_vs_dense_max_rel,
            closed_form_max_err,
            m_fraction,
            pass: failures.is_empty(),
            failures,
        });
    }
    Err(Error::InvalidGrid(format!(
        "could not draw an invertible instance for index {idx}"
    )))
}

/// One anchor's row in the karate study.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KarateRow {
    pub anchor: String,
    pub observed_edge_ratio: f64,
    pub within_depth_nodes: usize,
    pub wrong_memberships: usize,
    pub anchor_self_correct: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KarateStudy {
    pub baseline: Vec<KarateRow>,
    pub deletions: Vec<(String, String)>,
    pub after_deletions: Vec<KarateRow>,
}

/// Detection quality of chosen anchors on the embedded karate network,
/// before and after deleting the given edges.
pub fn run_karate(
    anchors: &[String],
    deletions: &[(String, String)],
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<KarateStudy> {
    let graph = data::karate_graph();
    let truth = data::karate_factions();
    let config = DetectConfig {
        restarts,
        ..DetectConfig::default()
    };
    let run_one = |g: &crate::graph::AdjacencyMatrix| -> Result<Vec<KarateRow>> {
        anchors
            .iter()
            .map(|name| {
                let anchor = data::karate_anchor(name)?;
                let view = perceive_based(g, anchor, Depth::Two);
                let stats = view_stats(g, &view)?;
                let result = detect_communities(&view, k, seed, &config)?;
                let score_k = k.max(2);
                let alignment = best_label_alignment(&result.membership, &truth, score_k)?;
                let wrong = result
                    .membership
                    .iter()
                    .zip(&truth)
                    .filter(|&(&e, &t)| alignment[e] != t)
                    .count();
                Ok(KarateRow {
                    anchor: name.clone(),
                    observed_edge_ratio: stats.observed_edge_ratio,
                    within_depth_nodes: view.within_depth_nodes().len(),
                    wrong_memberships: wrong,
                    anchor_self_correct: alignment[result.membership[anchor]] == truth[anchor],
                })
            })
            .collect()
    };
    let baseline = run_one(&graph)?;
    let mut modified = graph.clone();
    for (u_name, v_name) in deletions {
        let u = data::karate_anchor(u_name)?;
        let v = data::karate_anchor(v_name)?;
        modified = delete_edge(&modified, u, v)?;
    }
    let after_deletions = if deletions.is_empty() {
        Vec::new()
    } else {
        run_one(&modified)?
    };
    Ok(KarateStudy {
        baseline,
        deletions: deletions.to_vec(),
        after_deletions,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolblogsRow {
    pub anchor_id: usize,
    pub nodes_observed: usize,
    pub observed_edge_ratio: f64,
    pub within_subnet_edge_ratio: f64,
    pub misclustering: Option<f64>,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolblogsStudy {
    pub total_nodes: usize,
    pub lcc_nodes: usize,
    pub lcc_edges: usize,
    pub rows: Vec<PolblogsRow>,
    pub full_degree_histogram: Vec<(usize, usize)>,
    pub anchor_degree_histogram: Vec<(usize, usize)>,
}

/// Within-depth detection on a directed-hyperlink network folded to
/// undirected edges: restrict to the largest connected component, build
/// each anchor's view, drop perceived-isolated nodes, detect two
/// communities, and score only the within-depth nodes against the
/// party labels.
pub fn run_polblogs(
    edges_path: &Path,
    labels_path: &Path,
    index_base: IndexBase,
    anchors: &[usize],
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<PolblogsStudy> {
    let full = load_edge_list(edges_path, index_base, true)?;
    let labels = load_membership_labels(labels_path, index_base, full.n())?;
    let (lcc, map) = largest_connected_component(&full);
    let config = DetectConfig {
        restarts,
        ..DetectConfig::default()
    };

    let mut rows = Vec::new();
    let mut anchor_histogram: Vec<(usize, usize)> = Vec::new();
    for (pos, &anchor_raw) in anchors.iter().enumerate() {
        let offset = match index_base {
            IndexBase::Zero => 0,
            IndexBase::One => 1,
        };
        if anchor_raw < offset || anchor_raw - offset >= full.n() {
            return Err(Error::UnknownAnchor(anchor_raw.to_string()));
        }
        let anchor_old = anchor_raw - offset;
        let anchor_lcc = map.old_to_new[anchor_old].ok_or(Error::AnchorOutsideLcc(anchor_raw))?;

        let view = perceive_based(&lcc, anchor_lcc, Depth::Two);
        let stats = view_stats(&lcc, &view)?;
        let (sub, submap) = perceive_within(&view);
        if pos == 0 {
            anchor_histogram = degree_histogram(&sub).into_iter().collect();
        }
        if sub.n() < 4 {
            rows.push(PolblogsRow {
                anchor_id: anchor_raw,
                nodes_observed: sub.n(),
                observed_edge_ratio: stats.observed_edge_ratio,
                within_subnet_edge_ratio: stats.within_subnet_edge_ratio,
                misclustering: None,
                degenerate: true,
            });
            continue;
        }
        let sub_anchor = submap.old_to_new[anchor_lcc].expect("anchor always kept");
        let sub_view = perceive_based(&sub, sub_anchor, Depth::Two);
        let misclustering = match detect_communities(&sub_view, k, seed, &config) {
            Ok(result) => {
                // truth restricted to the within-depth nodes, in original ids
                let truth: Vec<usize> = submap
                    .new_to_old
                    .iter()
                    .map(|&lcc_idx| labels[map.new_to_old[lcc_idx]])
                    .collect();
                let label_bound = truth.iter().copied().max().unwrap_or(0).max(k - 1) + 1;
                Some(misclustering_rate(&result.membership, &truth, label_bound)?)
            }
            Err(Error::GroupTooSmall(_, _)) => None,
            Err(e) => return Err(e),
        };
        rows.push(PolblogsRow {
            anchor_id: anchor_raw,
            nodes_observed: sub.n(),
            observed_edge_ratio: stats.observed_edge_ratio,
            within_subnet_edge_ratio: stats.within_subnet_edge_ratio,
            misclustering,
            degenerate: misclustering.is_none(),
        });
    }

    Ok(PolblogsStudy {
        total_nodes: full.n(),
        lcc_nodes: lcc.n(),
        lcc_edges: lcc.edge_count(),
        rows,
        full_degree_histogram: degree_histogram(&lcc).into_iter().collect(),
        anchor_degree_histogram: anchor_histogram,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_rules_match_definitions() {
        let n = 600;
        let nf = 600.0f64;
        assert_eq!(QRule::Fixed(0.1).value(n), 0.1);
        assert!((QRule::SqrtLogNOverN.value(n) - (nf.ln() / nf).sqrt()).abs() < 1e-15);
        assert!(
            (QRule::QuarterRootLogNOverNHalf.value(n) - (nf.ln() / nf).powf(0.25) / 2.0).abs()
                < 1e-15
        );
        assert!((QRule::InvSqrtN.value(n) - 1.0 / nf.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn q_rule_parsing_round_trips() {
        for rule in [
            QRule::Fixed(0.1),
            QRule::SqrtLogNOverN,
            QRule::QuarterRootLogNOverNHalf,
            QRule::InvSqrtN,
        ] {
            let parsed = QRule::parse(&rule.label()).unwrap();
            assert_eq!(parsed, rule);
        }
        assert!(QRule::parse("0.25").is_ok());
        assert!(QRule::parse("banana").is_err());
    }

    #[test]
    fn model_matrices() {
        let q = 0.1;
        let p2 = Model::Two.p_matrix(q);
        assert!((p2[(0, 1)] - 0.15).abs() < 1e-15);
        assert!((p2[(0, 2)] - 0.1).abs() < 1e-15);
        let p3 = Model::Three.p_matrix(q);
        assert!((p3[(0, 1)] - 0.1).abs() < 1e-15);
        assert_eq!(Model::One.k(), 2);
        assert_eq!(Model::Three.k(), 3);
    }

    #[test]
    fn grid_validation() {
        let mut grid = ExperimentGrid {
            model: Model::One,
            ns: vec![60],
            qs: vec![QRule::Fixed(0.1)],
            reps: 2,
            seed: 1,
            anchor: AnchorRule::FirstNode,
            metrics: MetricSet::default(),
            restarts: 5,
        };
        assert!(grid.validate().is_ok());
        grid.qs = vec![QRule::Fixed(0.4)]; // 3q > 1
        assert!(grid.validate().is_err());
        grid.qs = vec![QRule::Fixed(0.1)];
        grid.reps = 0;
        assert!(grid.validate().is_err());
    }

    #[test]
    fn replicate_seed_is_grid_independent() {
        let s1 = replicate_seed(9, Model::One, 300, QRule::Fixed(0.1), 4);
        let s2 = replicate_seed(9, Model::One, 300, QRule::Fixed(0.1), 4);
        assert_eq!(s1, s2);
        assert_ne!(s1, replicate_seed(9, Model::One, 300, QRule::Fixed(0.1), 5));
        assert_ne!(s1, replicate_seed(9, Model::Two, 300, QRule::Fixed(0.1), 4));
        assert_ne!(s1, replicate_seed(9, Model::One, 600, QRule::Fixed(0.1), 4));
        assert_ne!(s1, replicate_seed(9, Model::One, 300, QRule::InvSqrtN, 4));
    }

    #[test]
    fn single_cell_reproduces_full_grid_rows() {
        let full = ExperimentGrid {
            model: Model::One,
            ns: vec![60, 90],
            qs: vec![QRule::Fixed(0.1), QRule::InvSqrtN],
            reps: 3,
            seed: 77,
            anchor: AnchorRule::FirstNode,
            metrics: MetricSet::default(),
            restarts: 5,
        };
        let full_result = run_grid(&full).unwrap();
        let single = ExperimentGrid {
            ns: vec![90],
            qs: vec![QRule::InvSqrtN],
            ..full.clone()
        };
        let single_result = run_grid(&single).unwrap();
        let from_full: Vec<&ReplicateRow> = full_result
            .rows
            .iter()
            .filter(|r| r.n == 90 && r.q_rule == "inv_sqrt_n")
            .collect();
        assert_eq!(from_full.len(), single_result.rows.len());
        for (a, b) in from_full.iter().zip(&single_result.rows) {
            assert_eq!(
                serde_json::to_string(a).unwrap(),
                serde_json::to_string(b).unwrap()
            );
        }
    }

    #[test]
    fn grid_runs_are_deterministic() {
        let grid = ExperimentGrid {
            model: Model::Two,
            ns: vec![60],
            qs: vec![QRule::Fixed(0.15)],
            reps: 4,
            seed: 5,
            anchor: AnchorRule::FirstNode,
            metrics: MetricSet::default(),
            restarts: 5,
        };
        let a = run_grid(&grid).unwrap();
        let b = run_grid(&grid).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn theory_check_small_sweep_passes() {
        let config = TheoryCheckConfig {
            instances: 6,
            seed: 11,
            ..Default::default()
        };
        let report = run_theory_check(&config).unwrap();
        assert_eq!(report.instances.len(), 6);
        for inst in &report.instances {
            assert!(
                inst.pass,
                "instance k={} n={} failed: {:?}",
                inst.k, inst.n, inst.failures
            );
            assert_eq!(inst.rank_be, 2 * inst.k);
        }
        assert!(report.all_pass);
    }

    #[test]
    fn karate_study_reproduces_reference_rows() {
        let anchors: Vec<String> = ["H", "2", "3", "A", "20", "32"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let study = run_karate(&anchors, &[("A".into(), "20".into())], 2, 1, 50).unwrap();
        let ratios: Vec<f64> = study
            .baseline
            .iter()
            .map(|r| r.observed_edge_ratio)
            .collect();
        let expected = [0.6538, 0.5128, 0.7051, 0.6410, 0.5256, 0.6538];
        for (got, want) in ratios.iter().zip(expected) {
            assert!((got - want).abs() < 5e-5, "{got} vs {want}");
        }
        let by_anchor = |name: &str| {
            study
                .baseline
                .iter()
                .find(|r| r.anchor == name)
                .unwrap()
                .clone()
        };
        assert_eq!(by_anchor("32").wrong_memberships, 0);
        assert!(by_anchor("20").wrong_memberships <= 2);
        let after_20 = study
            .after_deletions
            .iter()
            .find(|r| r.anchor == "20")
            .unwrap();
        assert_eq!(after_20.within_depth_nodes, 18);
        assert!(after_20.wrong_memberships >= 5);
    }
}
