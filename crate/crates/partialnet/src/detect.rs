//! Community detection from an anchor's partial view: k-means on the
//! leading eigenvector rows of the perceived matrix, carried out
//! separately for the anchor-adjacent and non-adjacent groups, followed
//! by block-probability estimation and a permutation merge of the two
//! cluster families. Also the full-information spectral baseline and
//! the permutation-invariant misclustering metric.

// indexed loops over parallel arrays are the dominant access pattern here
#![allow(clippy::needless_range_loop)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::AdjacencyMatrix;
use crate::linalg::{mix_seed, Mat};
use crate::spectral::{eigendecompose_symmetric, SpectralEmbedding};
use crate::view::PartialView;

/// Tuning knobs for the k-means stages.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DetectConfig {
    pub restarts: usize,
    pub max_iter: usize,
    pub centroid_tol: f64,
}

impl Default for DetectConfig {
    fn default() -> Self {
        DetectConfig {
            restarts: 50,
            max_iter: 300,
            centroid_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    pub centroids: Mat,
    pub objective: f64,
    pub iterations: usize,
    pub restarts_used: usize,
}

/// Lloyd iterations with k-means++ seeding, empty-cluster repair by
/// farthest-point reassignment, and `restarts` independent starts (the
/// best objective wins, earlier restart on ties). Deterministic given
/// `seed`.
pub fn kmeans(points: &Mat, k: usize, seed: u64, config: &DetectConfig) -> Result<KMeansResult> {
    let m = points.rows();
    if m < k || k == 0 {
        return Err(Error::TooFewPoints { m, k });
    }
    let mut best: Option<KMeansResult> = None;
    for restart in 0..config.restarts.max(1) {
        let run = kmeans_once(points, k, mix_seed(seed, restart as u64), config)?;
        let better = match &best {
            None => true,
            Some(b) => run.objective < b.objective,
        };
        if better {
            best = Some(run);
        }
    }
    let mut out = best.unwrap();
    out.restarts_used = config.restarts.max(1);
    debug_assert!({
        let recomputed = assignment_objective(points, &out.labels, &out.centroids);
        (recomputed - out.objective).abs() <= 1e-10 * (1.0 + out.objective)
    });
    Ok(out)
}

fn kmeans_once(points: &Mat, k: usize, seed: u64, config: &DetectConfig) -> Result<KMeansResult> {
    let m = points.rows();
    let d = points.cols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // k-means++ seeding
    let mut centroids = Mat::zeros(k, d);
    let first = rng.random_range(0..m);
    centroids.row_mut(0).copy_from_slice(points.row(first));
    let mut dists: Vec<f64> = (0..m)
        .map(|i| sq_dist(points.row(i), centroids.row(0)))
        .collect();
    for c in 1..k {
        let total: f64 = dists.iter().sum();
        let pick = if total <= 0.0 {
            rng.random_range(0..m)
        } else {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = m - 1;
            for (i, &w) in dists.iter().enumerate() {
                acc += w;
                if target < acc {
                    chosen = i;
                    break;
                }
            }
            chosen
        };
        centroids.row_mut(c).copy_from_slice(points.row(pick));
        for i in 0..m {
            let dist = sq_dist(points.row(i), centroids.row(c));
            if dist < dists[i] {
                dists[i] = dist;
            }
        }
    }

    let mut labels = vec![0usize; m];
    let mut objective = f64::INFINITY;
    let mut iterations = 0usize;
    for iter in 0..config.max_iter {
        iterations = iter + 1;
        // assignment; ties go to the lowest centroid index
        let mut new_objective = 0.0;
        for i in 0..m {
            let mut best_c = 0usize;
            let mut best_d = f64::INFINITY;
            for c in 0..k {
                let dist = sq_dist(points.row(i), centroids.row(c));
                if dist < best_d {
                    best_d = dist;
                    best_c = c;
                }
            }
            labels[i] = best_c;
            new_objective += best_d;
        }
        assert!(
            new_objective <= objective * (1.0 + 1e-9) + 1e-12,
            "k-means objective increased: {objective} -> {new_objective}"
        );
        objective = new_objective;

        // update step
        let mut sums = Mat::zeros(k, d);
        let mut counts = vec![0usize; k];
        for i in 0..m {
            counts[labels[i]] += 1;
            let row = sums.row_mut(labels[i]);
            for (acc, &x) in row.iter_mut().zip(points.row(i)) {
                *acc += x;
            }
        }
        // empty-cluster repair: move the point farthest from its centroid
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let mut worst = usize::MAX;
            let mut worst_d = -1.0;
            for i in 0..m {
                if counts[labels[i]] < 2 {
                    continue;
                }
                let dist = sq_dist(points.row(i), centroids.row(labels[i]));
                if dist > worst_d {
                    worst_d = dist;
                    worst = i;
                }
            }
            if worst == usize::MAX {
                continue;
            }
            let old = labels[worst];
            counts[old] -= 1;
            counts[c] += 1;
            labels[worst] = c;
            for (j, &x) in points.row(worst).iter().enumerate() {
                sums[(old, j)] -= x;
                sums[(c, j)] += x;
            }
        }

        let mut movement = 0.0f64;
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            let inv = 1.0 / counts[c] as f64;
            let mut delta = 0.0;
            for j in 0..d {
                let updated = sums[(c, j)] * inv;
                let diff = updated - centroids[(c, j)];
                delta += diff * diff;
                centroids[(c, j)] = updated;
            }
            movement = movement.max(delta.sqrt());
        }
        if movement <= config.centroid_tol {
            break;
        }
    }

    // final assignment against the settled centroids
    let mut final_objective = 0.0;
    for i in 0..m {
        let mut best_c = 0usize;
        let mut best_d = f64::INFINITY;
        for c in 0..k {
            let dist = sq_dist(points.row(i), centroids.row(c));
            if dist < best_d {
                best_d = dist;
                best_c = c;
            }
        }
        labels[i] = best_c;
        final_objective += best_d;
    }
    Ok(KMeansResult {
        labels,
        centroids,
        objective: final_objective,
        iterations,
        restarts_used: 1,
    })
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn assignment_objective(points: &Mat, labels: &[usize], centroids: &Mat) -> f64 {
    (0..points.rows())
        .map(|i| sq_dist(points.row(i), centroids.row(labels[i])))
        .sum()
}

/// Which side of the anchor's adjacency split a node falls on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Adjacent,
    NonAdjacent,
}

/// Output of the group-wise clustering step: `2K` clusters (`K` per
/// group) over the rows of the leading eigenvector matrix of the
/// perceived network, plus the per-node centroid rows.
#[derive(Debug, Clone)]
pub struct DivideResult {
    pub group_of: Vec<Group>,
    pub cluster_within_group: Vec<usize>,
    pub centroid_rows: Mat,
    pub embedding: SpectralEmbedding,
    pub adjacent_members: Vec<Vec<usize>>,
    pub nonadjacent_members: Vec<Vec<usize>>,
    pub adjacent_objective: f64,
    pub nonadjacent_objective: f64,
}

/// Cluster the anchor-adjacent rows and the non-adjacent rows of the
/// top-2K eigenvector matrix separately into `k` clusters each. The
/// anchor sits in the group matching its own indicator entry (the
/// non-adjacent group under a zero diagonal).
pub fn divide_clusters(
    view: &PartialView,
    k: usize,
    seed: u64,
    config: &DetectConfig,
) -> Result<DivideResult> {
    let n = view.source_n();
    let s = view.s();
    let adjacent: Vec<usize> = (0..n).filter(|&i| s[i] == 1).collect();
    let nonadjacent: Vec<usize> = (0..n).filter(|&i| s[i] == 0).collect();
    if adjacent.len() < k {
        return Err(Error::GroupTooSmall("adjacent", k));
    }
    if nonadjacent.len() < k {
        return Err(Error::GroupTooSmall("non-adjacent", k));
    }

    let embedding = eigendecompose_symmetric(&view.b().to_mat(), 2 * k)?;
    let w = &embedding.w;

    let gather = |members: &[usize]| {
        let mut pts = Mat::zeros(members.len(), 2 * k);
        for (r, &i) in members.iter().enumerate() {
            pts.row_mut(r).copy_from_slice(w.row(i));
        }
        pts
    };
    let adj_points = gather(&adjacent);
    let non_points = gather(&nonadjacent);
    let adj_run = kmeans(&adj_points, k, mix_seed(seed, 0xAD), config)?;
    let non_run = kmeans(&non_points, k, mix_seed(seed, 0x90), config)?;

    // canonical cluster ids: order by smallest member node index
    let adj_labels = canonical_relabel(&adjacent, &adj_run.labels, k);
    let non_labels = canonical_relabel(&nonadjacent, &non_run.labels, k);

    let mut group_of = vec![Group::NonAdjacent; n];
    let mut cluster_within_group = vec![0usize; n];
    let mut centroid_rows = Mat::zeros(n, 2 * k);
    let mut adjacent_members = vec![Vec::new(); k];
    let mut nonadjacent_members = vec![Vec::new(); k];
    for (pos, &i) in adjacent.iter().enumerate() {
        let (canon, raw) = adj_labels[pos];
        group_of[i] = Group::Adjacent;
        cluster_within_group[i] = canon;
        centroid_rows
            .row_mut(i)
            .copy_from_slice(adj_run.centroids.row(raw));
        adjacent_members[canon].push(i);
    }
    for (pos, &i) in nonadjacent.iter().enumerate() {
        let (canon, raw) = non_labels[pos];
        group_of[i] = Group::NonAdjacent;
        cluster_within_group[i] = canon;
        centroid_rows
            .row_mut(i)
            .copy_from_slice(non_run.centroids.row(raw));
        nonadjacent_members[canon].push(i);
    }

    Ok(DivideResult {
        group_of,
        cluster_within_group,
        centroid_rows,
        embedding,
        adjacent_members,
        nonadjacent_members,
        adjacent_objective: adj_run.objective,
        nonadjacent_objective: non_run.objective,
    })
}

/// Map raw k-means labels to canonical ids ordered by each cluster's
/// smallest member node; returns `(canonical, raw)` per position.
fn canonical_relabel(members: &[usize], raw_labels: &[usize], k: usize) -> Vec<(usize, usize)> {
    let mut first_member = vec![usize::MAX; k];
    for (pos, &raw) in raw_labels.iter().enumerate() {
        first_member[raw] = first_member[raw].min(members[pos]);
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by_key(|&raw| first_member[raw]);
    let mut canon_of_raw = vec![0usize; k];
    for (canon, &raw) in order.iter().enumerate() {
        canon_of_raw[raw] = canon;
    }
    raw_labels
        .iter()
        .map(|&raw| (canon_of_raw[raw], raw))
        .collect()
}

/// `K x K` matrix with an entry mask for cells that had no data.
#[derive(Debug, Clone)]
pub struct MaskedMatrix {
    pub values: Mat,
    pub defined: Vec<bool>,
}

impl MaskedMatrix {
    pub fn k(&self) -> usize {
        self.values.rows()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        if self.defined[i * self.k() + j] {
            Some(self.values[(i, j)])
        } else {
            None
        }
    }

    pub fn to_options(&self) -> Vec<Vec<Option<f64>>> {
        (0..self.k())
            .map(|i| (0..self.k()).map(|j| self.get(i, j)).collect())
            .collect()
    }
}

/// Block-probability estimates from the divided clusters: the
/// within-adjacent estimate averages `b_ij` over ordered pairs of
/// distinct adjacent nodes in clusters `(k, l)`; the cross estimate
/// averages over (adjacent, non-adjacent) pairs. Cells without pairs
/// are flagged undefined.
pub fn estimate_block_probabilities(
    view: &PartialView,
    divide: &DivideResult,
) -> (MaskedMatrix, MaskedMatrix) {
    let k = divide.adjacent_members.len();
    let b = view.b();
    let mut p_ss = Mat::zeros(k, k);
    let mut p_ss_defined = vec![false; k * k];
    let mut p_sis = Mat::zeros(k, k);
    let mut p_sis_defined = vec![false; k * k];

    for ck in 0..k {
        for cl in 0..k {
            let mut sum = 0.0;
            let mut count = 0usize;
            for &i in &divide.adjacent_members[ck] {
                for &j in &divide.adjacent_members[cl] {
                    if i != j {
                        sum += b.get(i, j) as f64;
                        count += 1;
                    }
                }
            }
            if count > 0 {
                p_ss[(ck, cl)] = sum / count as f64;
                p_ss_defined[ck * k + cl] = true;
            }

            let mut sum2 = 0.0;
            let mut count2 = 0usize;
            for &i in &divide.adjacent_members[ck] {
                for &j in &divide.nonadjacent_members[cl] {
                    sum2 += b.get(i, j) as f64;
                    count2 += 1;
                }
            }
            if count2 > 0 {
                p_sis[(ck, cl)] = sum2 / count2 as f64;
                p_sis_defined[ck * k + cl] = true;
            }
        }
    }
    (
        MaskedMatrix {
            values: p_ss,
            defined: p_ss_defined,
        },
        MaskedMatrix {
            values: p_sis,
            defined: p_sis_defined,
        },
    )
}

/// Visit permutations of `0..k` in lexicographic order.
fn for_each_permutation(k: usize, mut visit: impl FnMut(&[usize])) {
    let mut perm: Vec<usize> = (0..k).collect();
    loop {
        visit(&perm);
        // next_permutation
        if k < 2 {
            return;
        }
        let mut i = k - 1;
        while i > 0 && perm[i - 1] >= perm[i] {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        let mut j = k - 1;
        while perm[j] <= perm[i - 1] {
            j -= 1;
        }
        perm.swap(i - 1, j);
        perm[i..].reverse();
    }
}

/// The permutation aligning the adjacent-group clusters with the
/// non-adjacent ones: minimizes the Frobenius distance between the
/// reindexed within-adjacent estimate `(i, j) -> c[f(i)][f(j)]` and the
/// cross estimate `(i, j) -> d[f(i)][j]`, skipping cells undefined on
/// either side. Ties resolve to the lexicographically smallest
/// permutation; returns the permutation and the Frobenius score.
pub fn merge_permutation(p_ss: &MaskedMatrix, p_sis: &MaskedMatrix) -> Result<(Vec<usize>, f64)> {
    let k = p_ss.k();
    if p_sis.k() != k {
        return Err(Error::DimensionMismatch(format!(
            "estimate sizes {k} vs {}",
            p_sis.k()
        )));
    }
    if k > 10 {
        return Err(Error::KTooLarge(k));
    }
    let mut best_score = f64::INFINITY;
    let mut best_perm: Vec<usize> = Vec::new();
    for_each_permutation(k, |perm| {
        let mut score = 0.0;
        for i in 0..k {
            for j in 0..k {
                if let (Some(c), Some(d)) = (p_ss.get(perm[i], perm[j]), p_sis.get(perm[i], j)) {
                    let diff = c - d;
                    score += diff * diff;
                }
            }
        }
        if score < best_score {
            best_score = score;
            best_perm = perm.to_vec();
        }
    });
    Ok((best_perm, best_score.sqrt()))
}

/// Full detection output. `membership[i]` is the final community of
/// node `i`; non-adjacent cluster `i` keeps its id as the community id
/// and adjacent cluster `merge_permutation[i]` joins it.
#[derive(Debug, Clone)]
pub struct DetectionResult {
    pub membership: Vec<usize>,
    pub group_of: Vec<Group>,
    pub cluster_within_group: Vec<usize>,
    pub p_ss_hat: MaskedMatrix,
    pub p_sis_hat: MaskedMatrix,
    pub merge_permutation: Vec<usize>,
    pub merge_score: f64,
    pub anchor: usize,
    pub anchor_self_estimate: usize,
}

impl DetectionResult {
    pub fn k(&self) -> usize {
        self.merge_permutation.len()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "membership": self.membership,
            "group_of": self.group_of,
            "cluster_within_group": self.cluster_within_group,
            "p_ss_hat": self.p_ss_hat.to_options(),
            "p_sis_hat": self.p_sis_hat.to_options(),
            "merge_permutation": self.merge_permutation,
            "merge_score": self.merge_score,
            "anchor": self.anchor,
            "anchor_self_estimate": self.anchor_self_estimate,
        })
    }
}

/// The complete pipeline: divide, estimate, merge.
pub fn detect_communities(
    view: &PartialView,
    k: usize,
    seed: u64,
    config: &DetectConfig,
) -> Result<DetectionResult> {
    let divide = divide_clusters(view, k, seed, config)?;
    let (p_ss, p_sis) = estimate_block_probabilities(view, &divide);
    let (perm, score) = merge_permutation(&p_ss, &p_sis)?;

    // adjacent cluster perm[i] joins non-adjacent cluster i
    let mut community_of_adjacent = vec![0usize; k];
    for (i, &fi) in perm.iter().enumerate() {
        community_of_adjacent[fi] = i;
    }
    let n = view.source_n();
    let mut membership = vec![0usize; n];
    for i in 0..n {
        membership[i] = match divide.group_of[i] {
            Group::NonAdjacent => divide.cluster_within_group[i],
            Group::Adjacent => community_of_adjacent[divide.cluster_within_group[i]],
        };
    }
    let anchor = view.anchor();
    let anchor_self_estimate = membership[anchor];
    Ok(DetectionResult {
        membership,
        group_of: divide.group_of,
        cluster_within_group: divide.cluster_within_group,
        p_ss_hat: p_ss,
        p_sis_hat: p_sis,
        merge_permutation: perm,
        merge_score: score,
        anchor,
        anchor_self_estimate,
    })
}

/// Baseline: k-means over the rows of the top-K eigenvector matrix of
/// the full adjacency matrix.
pub fn spectral_cluster_full(
    a: &AdjacencyMatrix,
    k: usize,
    seed: u64,
    config: &DetectConfig,
) -> Result<Vec<usize>> {
    let embedding = eigendecompose_symmetric(&a.to_mat(), k)?;
    let run = kmeans(&embedding.w, k, seed, config)?;
    Ok(run.labels)
}

/// The relabeling of the estimated side that maximizes agreement with
/// the truth: returns `alignment` with `alignment[est_label] =
/// truth_label`, found exhaustively for `k <= 8` and by optimal
/// assignment matching above that.
pub fn best_label_alignment(est: &[usize], truth: &[usize], k: usize) -> Result<Vec<usize>> {
    if est.len() != truth.len() {
        return Err(Error::DimensionMismatch(format!(
            "label lengths {} vs {}",
            est.len(),
            truth.len()
        )));
    }
    for &label in est.iter().chain(truth) {
        if label >= k {
            return Err(Error::LabelOutOfRange { label, k });
        }
    }
    let n = est.len();
    let mut confusion = Mat::zeros(k, k);
    for i in 0..n {
        confusion[(est[i], truth[i])] += 1.0;
    }
    if k <= 8 {
        let mut best = -1.0f64;
        let mut best_perm = Vec::new();
        for_each_permutation(k, |perm| {
            let agree: f64 = (0..k).map(|a| confusion[(a, perm[a])]).sum();
            if agree > best {
                best = agree;
                best_perm = perm.to_vec();
            }
        });
        Ok(best_perm)
    } else {
        Ok(hungarian_max_assignment(&confusion))
    }
}

/// Number of disagreements between two labelings, minimized over all
/// relabelings of the estimated side.
pub fn misclustering_count(est: &[usize], truth: &[usize], k: usize) -> Result<usize> {
    let alignment = best_label_alignment(est, truth, k)?;
    let wrong = est
        .iter()
        .zip(truth)
        .filter(|&(&e, &t)| alignment[e] != t)
        .count();
    Ok(wrong)
}

/// Fraction version of [`misclustering_count`].
pub fn misclustering_rate(est: &[usize], truth: &[usize], k: usize) -> Result<f64> {
    let count = misclustering_count(est, truth, k)?;
    Ok(count as f64 / est.len().max(1) as f64)
}

/// Maximum-total assignment on a square profit matrix (Hungarian
/// algorithm with potentials, on negated profits); returns the column
/// assigned to each row.
fn hungarian_max_assignment(profit: &Mat) -> Vec<usize> {
    let n = profit.rows();
    const INF: f64 = f64::INFINITY;
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = INF;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = -profit[(i0 - 1, j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}
