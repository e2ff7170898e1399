//! Spectral structure of a perceived network: the low-rank signal
//! matrix built from the expected adjacency and the anchor's neighbor
//! indicator, exact eigenpairs of that signal matrix through a
//! K-dimensional quadratic eigenvalue problem, and numerical
//! verification helpers (rank, norm comparisons, centroid outliers).

// indexed loops over parallel arrays are the dominant access pattern here
#![allow(clippy::needless_range_loop)]

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{expected_adjacency, AdjacencyMatrix, DiagonalMode, SbmSpec};
use crate::linalg::{
    eigenvalues_general, magnitude_order, spectral_norm_sym, svd_small, sym_eigen,
    sym_eigen_values, sym_top_eigen, Mat,
};
use crate::view::PartialView;

pub const SYMMETRY_TOL: f64 = 1e-10;
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-8;
pub const RANK_CUTOFF_REL: f64 = 1e-8;
pub const ORTHOGONALITY_TOL: f64 = 1e-6;
pub const INVERTIBILITY_TOL: f64 = 1e-10;

/// Leading eigenpairs of a symmetric matrix, ordered by descending
/// magnitude, with a deterministic sign convention: the entry of
/// largest magnitude in each column is positive (lowest index wins
/// ties).
#[derive(Debug, Clone)]
pub struct SpectralEmbedding {
    pub w: Mat,
    pub values: Vec<f64>,
}

impl SpectralEmbedding {
    pub fn m(&self) -> usize {
        self.values.len()
    }
}

/// Flip column signs in place so each column's largest-magnitude entry
/// is positive; the lowest index wins ties.
pub fn fix_column_signs(m: &mut Mat) {
    for j in 0..m.cols() {
        let mut best = 0usize;
        let mut best_abs = 0.0f64;
        for i in 0..m.rows() {
            let a = m[(i, j)].abs();
            if a > best_abs {
                best_abs = a;
                best = i;
            }
        }
        if m[(best, j)] < 0.0 {
            for i in 0..m.rows() {
                m[(i, j)] = -m[(i, j)];
            }
        }
    }
}

/// Top-`m` eigenpairs of a symmetric matrix by magnitude.
pub fn eigendecompose_symmetric(matrix: &Mat, m: usize) -> Result<SpectralEmbedding> {
    let n = matrix.rows();
    if matrix.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "expected square matrix, got {}x{}",
            n,
            matrix.cols()
        )));
    }
    if m == 0 || m > n {
        return Err(Error::DimensionMismatch(format!(
            "requested {m} eigenpairs of a {n}x{n} matrix"
        )));
    }
    let asym = matrix.max_asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(asym));
    }
    let (values, mut w) = sym_top_eigen(matrix, m, EIGEN_RESIDUAL_TOL)?;
    fix_column_signs(&mut w);
    Ok(SpectralEmbedding { w, values })
}

/// Exact spectral data of the block model behind a perceived network:
/// the expected adjacency `EA = V diag(D) V^T`, the anchor's neighbor
/// indicator `S`, the signal matrix `BE = -S EA S + EA S + S EA`, and
/// the Gram matrix `V^T S V` whose invertibility the eigenvalue theory
/// rests on.
#[derive(Debug, Clone)]
pub struct TheoryOracle {
    pub spec: SbmSpec,
    pub s: Vec<u8>,
    pub ea: Mat,
    pub v: Mat,
    pub d: Vec<f64>,
    pub be: Mat,
    pub vtsv: Mat,
    pub sigma_min_vtsv: f64,
    pub sigma_min_complement: f64,
    pub vtsv_invertible: bool,
    pub complement_invertible: bool,
}

impl TheoryOracle {
    pub fn n(&self) -> usize {
        self.s.len()
    }

    pub fn k(&self) -> usize {
        self.d.len()
    }

    pub fn invertible(&self) -> bool {
        self.vtsv_invertible && self.complement_invertible
    }
}

/// Compose `-diag(u) M diag(u) + M diag(u) + diag(u) M` entrywise,
/// which is `M[i][j] * (u_i + u_j - u_i u_j)`.
fn selection_composition(m: &Mat, u: &[f64]) -> Mat {
    Mat::from_fn(m.rows(), m.cols(), |i, j| {
        m[(i, j)] * (u[i] + u[j] - u[i] * u[j])
    })
}

/// Build the oracle for a spec and a binary neighbor indicator.
///
/// The eigendecomposition of `EA` is computed exactly through the
/// K-dimensional reduction `N P N` with `N = diag(sqrt(block sizes))`,
/// so no n-dimensional eigensolve is involved.
pub fn build_theory_oracle(spec: &SbmSpec, s: &[u8]) -> Result<TheoryOracle> {
    let n = spec.n();
    let k = spec.k();
    if s.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "indicator length {} != n = {n}",
            s.len()
        )));
    }
    debug_assert!(s.iter().all(|&v| v <= 1));
    let sizes = spec.community_sizes();
    let sqrt_sizes: Vec<f64> = sizes.iter().map(|&c| (c as f64).sqrt()).collect();
    let small = Mat::from_fn(k, k, |a, b| {
        sqrt_sizes[a] * spec.p()[(a, b)] * sqrt_sizes[b]
    });
    let (lambda, u) = sym_eigen(&small, true)?;
    let u = u.unwrap();
    let order = magnitude_order(&lambda);
    let top = lambda[order[0]].abs();
    let bottom = lambda[order[k - 1]].abs();
    if top == 0.0 || bottom <= INVERTIBILITY_TOL * top {
        return Err(Error::RankDeficient { k, sigma: bottom });
    }

    let mut d = Vec::with_capacity(k);
    let mut u_sorted = Mat::zeros(k, k);
    for (new_j, &old_j) in order.iter().enumerate() {
        d.push(lambda[old_j]);
        for i in 0..k {
            u_sorted[(i, new_j)] = u[(i, old_j)];
        }
    }
    fix_column_signs(&mut u_sorted);

    let g = spec.membership();
    let v = Mat::from_fn(n, k, |i, j| u_sorted[(g[i], j)] / sqrt_sizes[g[i]]);

    let mut vtsv = Mat::zeros(k, k);
    for i in 0..n {
        if s[i] == 1 {
            let row = v.row(i);
            for a in 0..k {
                for b in 0..k {
                    vtsv[(a, b)] += row[a] * row[b];
                }
            }
        }
    }

    let ea = expected_adjacency(spec);
    let sf: Vec<f64> = s.iter().map(|&x| x as f64).collect();
    let be = selection_composition(&ea, &sf);

    let sigma_min_vtsv = min_abs_eigenvalue(&vtsv)?;
    let complement = Mat::from_fn(k, k, |a, b| (if a == b { 1.0 } else { 0.0 }) - vtsv[(a, b)]);
    let sigma_min_complement = min_abs_eigenvalue(&complement)?;

    Ok(TheoryOracle {
        spec: spec.clone(),
        s: s.to_vec(),
        ea,
        v,
        d,
        be,
        vtsv,
        sigma_min_vtsv,
        sigma_min_complement,
        vtsv_invertible: sigma_min_vtsv > INVERTIBILITY_TOL,
        complement_invertible: sigma_min_complement > INVERTIBILITY_TOL,
    })
}

fn min_abs_eigenvalue(m: &Mat) -> Result<f64> {
    let values = sym_eigen_values(m)?;
    Ok(values.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min))
}

/// The `2K` nonzero eigenpairs of the signal matrix, produced from the
/// K-dimensional quadratic eigenvalue problem.
///
/// `xs` are the determinant-equation roots in ascending order (K
/// negative, K positive) and `ys` their reciprocals, which are the
/// nonzero eigenvalues of `BE`. Column `i` of `qfull` is the unit
/// eigenvector `S V q1_i + (I - S) V q2_i`.
#[derive(Debug, Clone)]
pub struct QuadraticRoots {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub q1: Mat,
    pub q2: Mat,
    pub qfull: Mat,
    pub h_residuals: Vec<f64>,
    pub eigen_residuals: Vec<f64>,
}

/// Evaluate `H(x) = I - x D VtSV - x^2 D (I - VtSV) D VtSV`.
pub fn h_matrix(oracle: &TheoryOracle, x: f64) -> Mat {
    let k = oracle.k();
    let m1 = scale_rows(&oracle.vtsv, &oracle.d);
    let mq = quadratic_coefficient(oracle);
    Mat::from_fn(k, k, |a, b| {
        (if a == b { 1.0 } else { 0.0 }) - x * m1[(a, b)] - x * x * mq[(a, b)]
    })
}

fn scale_rows(m: &Mat, d: &[f64]) -> Mat {
    Mat::from_fn(m.rows(), m.cols(), |a, b| d[a] * m[(a, b)])
}

/// `D (I - VtSV) D VtSV`, the constant coefficient of the quadratic
/// pencil in `y = 1/x`.
fn quadratic_coefficient(oracle: &TheoryOracle) -> Mat {
    let k = oracle.k();
    let complement = Mat::from_fn(k, k, |a, b| {
        (if a == b { 1.0 } else { 0.0 }) - oracle.vtsv[(a, b)]
    });
    let t = scale_rows(&complement, &oracle.d); // D (I - VtSV)
    let t = Mat::from_fn(k, k, |a, b| t[(a, b)] * oracle.d[b]); // D (I - VtSV) D
    t.matmul(&oracle.vtsv)
}

/// Solve the determinant equation by companion linearization of
/// `y^2 I - y D VtSV - D (I - VtSV) D VtSV`, then reconstruct the
/// eigenvectors of `BE` and verify them.
pub fn solve_quadratic_eigenproblem(oracle: &TheoryOracle) -> Result<QuadraticRoots> {
    if !oracle.invertible() {
        return Err(Error::InvalidSpec(format!(
            "V^T S V (sigma_min {:.3e}) or its complement (sigma_min {:.3e}) is numerically singular",
            oracle.sigma_min_vtsv, oracle.sigma_min_complement
        )));
    }
    let k = oracle.k();
    let n = oracle.n();
    let m1 = scale_rows(&oracle.vtsv, &oracle.d);
    let mq = quadratic_coefficient(oracle);

    let mut companion = Mat::zeros(2 * k, 2 * k);
    for a in 0..k {
        for b in 0..k {
            companion[(a, b)] = m1[(a, b)];
            companion[(a, k + b)] = mq[(a, b)];
        }
        companion[(k + a, a)] = 1.0;
    }
    let raw = eigenvalues_general(&companion)?;
    let scale = raw
        .iter()
        .map(|&(re, im)| re.hypot(im))
        .fold(0.0f64, f64::max);
    let max_im = raw.iter().map(|&(_, im)| im.abs()).fold(0.0f64, f64::max);
    if max_im > 1e-8 * scale.max(1.0) {
        return Err(Error::ComplexRoots(max_im));
    }
    let ys_raw: Vec<f64> = raw.iter().map(|&(re, _)| re).collect();
    let pos = ys_raw.iter().filter(|&&y| y > 0.0).count();
    let neg = ys_raw.iter().filter(|&&y| y < 0.0).count();
    if pos != k || neg != k {
        return Err(Error::RootSignImbalance {
            expected: k,
            pos,
            neg,
        });
    }
    let mut xs: Vec<f64> = ys_raw.iter().map(|&y| 1.0 / y).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let ys: Vec<f64> = xs.iter().map(|&x| 1.0 / x).collect();

    // group numerically equal roots so repeated roots receive distinct
    // null directions
    let x_scale = xs.iter().map(|x| x.abs()).fold(0.0f64, f64::max);
    let cluster_tol = 1e-9 * x_scale;
    let mut clusters: Vec<(usize, usize)> = Vec::new(); // [start, end)
    let mut start = 0usize;
    for i in 1..=xs.len() {
        if i == xs.len() || (xs[i] - xs[i - 1]).abs() > cluster_tol {
            clusters.push((start, i));
            start = i;
        }
    }

    let mut q1 = Mat::zeros(k, 2 * k);
    let mut q2 = Mat::zeros(k, 2 * k);
    let mut qfull = Mat::zeros(n, 2 * k);
    let mut h_residuals = vec![0.0; 2 * k];
    let mut eigen_residuals = vec![0.0; 2 * k];

    for &(lo, hi) in &clusters {
        let want = hi - lo;
        let x_rep = xs[lo..hi].iter().sum::<f64>() / want as f64;
        let h = h_matrix(oracle, x_rep);
        let null_vectors = extract_null_basis(&h, want, lo)?;
        for (offset, nv) in null_vectors.iter().enumerate() {
            let idx = lo + offset;
            let x_i = xs[idx];
            let y_i = ys[idx];

            // residual of the determinant-equation null vector (unit q1)
            let h_i = h_matrix(oracle, x_i);
            let mut hq = vec![0.0; k];
            h_i.matvec(nv, &mut hq);
            h_residuals[idx] = norm(&hq);

            // q2 = x D VtSV q1
            let mut q2_i = vec![0.0; k];
            m1.matvec(nv, &mut q2_i);
            for val in &mut q2_i {
                *val *= x_i;
            }

            // q = S V q1 + (I - S) V q2
            let mut q_i = vec![0.0; n];
            for r in 0..n {
                let row = oracle.v.row(r);
                let coeff = if oracle.s[r] == 1 { &nv[..] } else { &q2_i[..] };
                let mut acc = 0.0;
                for c in 0..k {
                    acc += row[c] * coeff[c];
                }
                q_i[r] = acc;
            }
            let q_norm = norm(&q_i);
            if q_norm <= 1e-12 {
                return Err(Error::ConvergenceFailure(format!(
                    "reconstructed eigenvector {idx} vanished"
                )));
            }
            let mut best_abs = 0.0;
            let mut best_row = 0usize;
            for (r, &val) in q_i.iter().enumerate() {
                if val.abs() > best_abs {
                    best_abs = val.abs();
                    best_row = r;
                }
            }
            let sign = if q_i[best_row] < 0.0 { -1.0 } else { 1.0 };
            let inv = sign / q_norm;
            for r in 0..n {
                qfull[(r, idx)] = q_i[r] * inv;
            }
            for c in 0..k {
                q1[(c, idx)] = nv[c] * inv;
                q2[(c, idx)] = q2_i[c] * inv;
            }

            // eigenpair residual ||BE q - y q|| on the unit eigenvector
            let q_unit = qfull.column(idx);
            let mut bq = vec![0.0; n];
            oracle.be.matvec(&q_unit, &mut bq);
            let mut res = 0.0f64;
            for r in 0..n {
                let diff = bq[r] - y_i * q_unit[r];
                res += diff * diff;
            }
            eigen_residuals[idx] = res.sqrt();
        }
    }

    for idx in 0..2 * k {
        if h_residuals[idx] > EIGEN_RESIDUAL_TOL {
            return Err(Error::ConvergenceFailure(format!(
                "null-vector residual {:.3e} at root {idx} exceeds {EIGEN_RESIDUAL_TOL:.0e}",
                h_residuals[idx]
            )));
        }
        if eigen_residuals[idx] > EIGEN_RESIDUAL_TOL {
            return Err(Error::ConvergenceFailure(format!(
                "eigenpair residual {:.3e} at root {idx} exceeds {EIGEN_RESIDUAL_TOL:.0e}",
                eigen_residuals[idx]
            )));
        }
    }

    Ok(QuadraticRoots {
        xs,
        ys,
        q1,
        q2,
        qfull,
        h_residuals,
        eigen_residuals,
    })
}

/// Unit right-singular vectors spanning the numerical null space of
/// `h`, at least `want` of them. A deterministic diagonal jitter breaks
/// degeneracy if the plain extraction comes up short.
fn extract_null_basis(h: &Mat, want: usize, root_index: usize) -> Result<Vec<Vec<f64>>> {
    let k = h.rows();
    let take = |m: &Mat| -> Vec<Vec<f64>> {
        let (_, sigma, v) = svd_small(m);
        let top = sigma.first().copied().unwrap_or(0.0);
        let nullity = sigma.iter().filter(|&&s| s <= 1e-6 * top.max(1.0)).count();
        if nullity < want {
            return Vec::new();
        }
        (0..want).map(|j| v.column(k - 1 - j)).collect()
    };
    let vectors = take(h);
    if !vectors.is_empty() {
        return Ok(vectors);
    }
    let jittered = Mat::from_fn(k, k, |a, b| {
        h[(a, b)] + if a == b { 1e-10 * (a + 1) as f64 } else { 0.0 }
    });
    let vectors = take(&jittered);
    if !vectors.is_empty() {
        return Ok(vectors);
    }
    Err(Error::NullspaceAmbiguous(root_index))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Numerical rank of the signal matrix and the singular-value gap ratio
/// `sigma_{2K} / sigma_{2K+1}` (infinite when the tail vanishes).
pub fn verify_rank_be(oracle: &TheoryOracle) -> Result<(usize, f64)> {
    let values = sym_eigen_values(&oracle.be)?;
    let mut sigmas: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    sigmas.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let top = sigmas[0];
    if top == 0.0 {
        return Ok((0, f64::INFINITY));
    }
    let rank = sigmas
        .iter()
        .filter(|&&s| s > RANK_CUTOFF_REL * top)
        .count();
    let t = 2 * oracle.k();
    let gap_ratio = if t == 0 || t >= sigmas.len() || sigmas[t] == 0.0 {
        f64::INFINITY
    } else {
        sigmas[t - 1] / sigmas[t]
    };
    Ok((rank, gap_ratio))
}

/// Spectral-norm comparison between a perceived network and the signal
/// matrix of its generating model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MajorTermReport {
    /// `||B - BE||`
    pub err_norm: f64,
    /// `||BE||`
    pub be_norm: f64,
    /// smallest nonzero singular value of `BE`
    pub sigma_2k: f64,
    /// norm of the all-expectations composition built from `E[S]`
    pub proxy_norm: f64,
    /// `||B - BE|| / sigma_{2K}(BE)`
    pub err_over_sigma: f64,
    /// `||B - BE|| / ||BE||`
    pub err_over_norm: f64,
    /// `||proxy|| / ||BE||`
    pub proxy_over_norm: f64,
}

/// Compare the perceived matrix against the oracle's signal matrix and
/// against the naive composition that replaces `S` by its expectation.
pub fn major_term_report(
    a: &AdjacencyMatrix,
    view: &PartialView,
    oracle: &TheoryOracle,
) -> Result<MajorTermReport> {
    let n = oracle.n();
    if a.n() != n || view.source_n() != n {
        return Err(Error::DimensionMismatch(format!(
            "graph n = {}, view n = {}, oracle n = {n}",
            a.n(),
            view.source_n()
        )));
    }
    let b = view.b().to_mat();
    let diff = b.sub(&oracle.be);
    let err_norm = spectral_norm_sym(&diff)?;

    let (top_vals, _) = sym_top_eigen(&oracle.be, 2 * oracle.k(), 1e-9)?;
    let be_norm = top_vals[0].abs();
    let sigma_2k = top_vals.last().unwrap().abs();

    let g = oracle.spec.membership();
    let anchor = view.anchor();
    let p = oracle.spec.p();
    let es: Vec<f64> = (0..n)
        .map(|i| {
            if i == anchor {
                match a.diagonal_mode() {
                    DiagonalMode::Bernoulli => p[(g[anchor], g[anchor])],
                    DiagonalMode::Zero => 0.0,
                }
            } else {
                p[(g[anchor], g[i])]
            }
        })
        .collect();
    let proxy = selection_composition(&oracle.ea, &es);
    let proxy_norm = spectral_norm_sym(&proxy)?;

    Ok(MajorTermReport {
        err_norm,
        be_norm,
        sigma_2k,
        proxy_norm,
        err_over_sigma: err_norm / sigma_2k,
        err_over_norm: err_norm / be_norm,
        proxy_over_norm: proxy_norm / be_norm,
    })
}

/// Nodes whose k-means centroid is far from its aligned ideal
/// eigenvector row: `{ i : ||c_i - (Q O)(i)|| >= 1 / sqrt(2 c2 n) }`,
/// with the alignment `O = U1 U2^T` from the SVD of `Q^T W`.
pub fn compute_m_set(
    roots: &QuadraticRoots,
    w: &SpectralEmbedding,
    centroids: &Mat,
    c2: f64,
) -> Result<(Vec<usize>, f64)> {
    let n = roots.qfull.rows();
    let m = roots.qfull.cols();
    if w.w.rows() != n || w.w.cols() != m || centroids.rows() != n || centroids.cols() != m {
        return Err(Error::DimensionMismatch(format!(
            "Q is {n}x{m}, W is {}x{}, centroids are {}x{}",
            w.w.rows(),
            w.w.cols(),
            centroids.rows(),
            centroids.cols()
        )));
    }
    let gram = roots.qfull.transpose().matmul(&w.w);
    let (u1, _, u2) = svd_small(&gram);
    let o = u1.matmul(&u2.transpose());
    let aligned = roots.qfull.matmul(&o);
    let threshold = 1.0 / (2.0 * c2 * n as f64).sqrt();
    let mut selected = Vec::new();
    for i in 0..n {
        let mut dist = 0.0f64;
        for j in 0..m {
            let d = centroids[(i, j)] - aligned[(i, j)];
            dist += d * d;
        }
        if dist.sqrt() >= threshold {
            selected.push(i);
        }
    }
    let fraction = selected.len() as f64 / n as f64;
    Ok((selected, fraction))
}

/// Empirical value for the constant in the outlier threshold:
/// `1 / (n lambda_min(Q Q^T))` with the stacked coefficient matrix
/// `[sqrt(p_n) D Q1; D Q2]` built from the block eigenrows.
pub fn empirical_c2(oracle: &TheoryOracle, roots: &QuadraticRoots) -> Result<f64> {
    let k = oracle.k();
    let n = oracle.n();
    let p = oracle.spec.p();
    let mut p_n = 0.0f64;
    for a in 0..k {
        for b in 0..k {
            p_n = p_n.max(p[(a, b)]);
        }
    }
    // row g of the block eigenrow matrix equals any V row in block g
    let g = oracle.spec.membership();
    let mut block_rows = Mat::zeros(k, k);
    let mut seen = vec![false; k];
    for i in 0..n {
        if !seen[g[i]] {
            seen[g[i]] = true;
            for c in 0..k {
                block_rows[(g[i], c)] = oracle.v[(i, c)];
            }
        }
    }
    let dq1 = block_rows.matmul(&roots.q1);
    let dq2 = block_rows.matmul(&roots.q2);
    let mut stacked = Mat::zeros(2 * k, 2 * k);
    let sqrt_pn = p_n.sqrt();
    for a in 0..k {
        for b in 0..2 * k {
            stacked[(a, b)] = sqrt_pn * dq1[(a, b)];
            stacked[(k + a, b)] = dq2[(a, b)];
        }
    }
    let gram = stacked.matmul(&stacked.transpose());
    let values = sym_eigen_values(&gram)?;
    let lambda_min = values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
        .max(1e-300);
    Ok(1.0 / (n as f64 * lambda_min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{sample_adjacency, SbmSpec};
    use crate::linalg::dot;

    fn model1_spec(n: usize, q: f64) -> SbmSpec {
        let p = Mat::from_rows(&[vec![3.0 * q, q], vec![q, 3.0 * q]]);
        SbmSpec::new(2, p, SbmSpec::balanced_membership(n, 2)).unwrap()
    }

    fn single_block_spec(n: usize, p: f64) -> SbmSpec {
        SbmSpec::new(1, Mat::from_rows(&[vec![p]]), vec![0; n]).unwrap()
    }

    fn indicator(n: usize, ones: &[usize]) -> Vec<u8> {
        let mut s = vec![0u8; n];
        for &i in ones {
            s[i] = 1;
        }
        s
    }

    fn sampled_indicator(spec: &SbmSpec, anchor: usize, seed: u64) -> Vec<u8> {
        let a = sample_adjacency(spec, seed, DiagonalMode::Zero);
        a.row(anchor).to_vec()
    }

    #[test]
    fn embedding_diagonal_matrix() {
        let m = Mat::from_rows(&[
            vec![3.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, -2.0],
        ]);
        let emb = eigendecompose_symmetric(&m, 2).unwrap();
        assert_eq!(emb.values.len(), 2);
        assert!((emb.values[0] - 3.0).abs() < 1e-12);
        assert!((emb.values[1] + 2.0).abs() < 1e-12);
        assert!((emb.w[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((emb.w[(2, 1)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn embedding_ones_matrix() {
        let m = Mat::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        let emb = eigendecompose_symmetric(&m, 1).unwrap();
        assert!((emb.values[0] - 2.0).abs() < 1e-12);
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        assert!((emb.w[(0, 0)] - inv_sqrt2).abs() < 1e-12);
        assert!((emb.w[(1, 0)] - inv_sqrt2).abs() < 1e-12);
    }

    #[test]
    fn embedding_full_reconstruction() {
        let mut state = 42u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        let n = 8;
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = next();
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        let emb = eigendecompose_symmetric(&m, n).unwrap();
        let mut recon = Mat::zeros(n, n);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    recon[(i, j)] += emb.values[k] * emb.w[(i, k)] * emb.w[(j, k)];
                }
            }
        }
        assert!(recon.sub(&m).frobenius_norm() < 1e-8);
    }

    #[test]
    fn embedding_rejects_asymmetric() {
        let m = Mat::from_rows(&[vec![0.0, 1.0], vec![0.5, 0.0]]);
        assert!(matches!(
            eigendecompose_symmetric(&m, 1),
            Err(Error::NotSymmetric(_))
        ));
    }

    #[test]
    fn embedding_is_deterministic() {
        let spec = model1_spec(320, 0.2);
        let a = sample_adjacency(&spec, 9, DiagonalMode::Zero).to_mat();
        let e1 = eigendecompose_symmetric(&a, 4).unwrap();
        let e2 = eigendecompose_symmetric(&a, 4).unwrap();
        assert_eq!(e1.values, e2.values);
        assert_eq!(e1.w.data(), e2.w.data());
    }

    #[test]
    fn oracle_single_block_gram() {
        let n = 10;
        let spec = single_block_spec(n, 0.5);
        let s = indicator(n, &[1, 2, 3]);
        let oracle = build_theory_oracle(&spec, &s).unwrap();
        assert_eq!(oracle.k(), 1);
        assert!((oracle.vtsv[(0, 0)] - 3.0 / n as f64).abs() < 1e-12);
        assert!(oracle.invertible());
    }

    #[test]
    fn oracle_factorization_reconstructs_expected_adjacency() {
        let spec = model1_spec(40, 0.2);
        let s = sampled_indicator(&spec, 0, 5);
        let oracle = build_theory_oracle(&spec, &s).unwrap();
        let n = oracle.n();
        let k = oracle.k();
        let mut recon = Mat::zeros(n, n);
        for c in 0..k {
            for i in 0..n {
                for j in 0..n {
                    recon[(i, j)] += oracle.d[c] * oracle.v[(i, c)] * oracle.v[(j, c)];
                }
            }
        }
        let err = recon.sub(&oracle.ea).frobenius_norm();
        assert!(err < 1e-8, "factorization error {err}");
    }

    #[test]
    fn oracle_all_ones_indicator_not_invertible() {
        let n = 8;
        let spec = single_block_spec(n, 0.4);
        let s = vec![1u8; n];
        let oracle = build_theory_oracle(&spec, &s).unwrap();
        assert!(!oracle.complement_invertible);
        assert!(oracle.vtsv_invertible);
    }

    #[test]
    fn oracle_gram_spectrum_inside_unit_band() {
        let spec = model1_spec(300, 0.1);
        let s = sampled_indicator(&spec, 0, 11);
        let oracle = build_theory_oracle(&spec, &s).unwrap();
        let values = sym_eigen_values(&oracle.vtsv).unwrap();
        for v in values {
            assert!(v > 0.0 && v < 1.0, "Gram eigenvalue {v} outside (0, 1)");
        }
    }

    #[test]
    fn oracle_rejects_singular_p() {
        let p = Mat::from_rows(&[vec![0.2, 0.2], vec![0.2, 0.2]]);
        let spec = SbmSpec::new(2, p, SbmSpec::balanced_membership(10, 2)).unwrap();
        let s = indicator(10, &[1, 2]);
        assert!(matches!(
            build_theory_oracle(&spec, &s),
            Err(Error::RankDeficient { .. })
        ));
    }

    /// For K = 1 the determinant equation collapses to the scalar
    /// quadratic y^2 - y p s - p^2 s (n - s) = 0.
    fn closed_form_roots(n: usize, p: f64, s_count: usize) -> (f64, f64) {
        let s = s_count as f64;
        let disc = (s * s + 4.0 * s * (n as f64 - s)).sqrt();
        (p * (s - disc) / 2.0, p * (s + disc) / 2.0)
    }

    #[test]
    fn quadratic_roots_single_block_closed_form() {
        let n = 4;
        let spec = single_block_spec(n, 0.5);
        let s = indicator(n, &[1, 2]);
        let oracle = build_theory_oracle(&spec, &s).unwrap();
        let roots = solve_quadratic_eigenproblem(&oracle).unwrap();
        let (y_minus, y_plus) = closed_form_roots(n, 0.5, 2);
        assert!((y_plus - 1.618033988749895).abs() < 1e-12);
        assert!((y_minus + 0.618033988749895).abs() < 1e-12);
        // xs ascending: most negative y first
        assert!((roots.ys[0] - y_minus).abs() < 1e-10);
        assert!((roots.ys[1] - y_plus).abs() < 1e-10);

        // dense eigensolver cross-check
        let dense = sym_eigen_values(&oracle.be).unwrap();
        let order = magnitude_order(&dense);
        let mut dense_nonzero = [dense[order[0]], dense[order[1]]];
        dense_nonzero.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((dense_nonzero[0] - y_minus).abs() < 1e-10);
        assert!((dense_nonzero[1] - y_plus).abs() < 1e-10);
    }

    #[test]
    fn quadratic_roots_anchor_only_indicator() {
        let n = 3;
        let spec = single_block_spec(n, 1.0);
        let s = indicator(n, &[0]);
        let oracle = build_theory_oracle(&spec, &s).unwrap();
        let roots = solve_quadratic_eigenproblem(&oracle).unwrap();
        assert!((roots.ys[0] + 1.0).abs() < 1e-10);
        assert!((roots.ys[1] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn quadratic_roots_match_dense_model1() {
        let spec = model1_spec(200, 0.2);
        let s = sampled_indicator(&spec, 0, 3);
        let oracle = build_theory_oracle(&spec, &s).unwrap();
        let roots = solve_quadratic_eigenproblem(&oracle).unwrap();
        assert_eq!(roots.ys.len(), 4);

        let dense = sym_eigen_values(&oracle.be).unwrap();
        let order = magnitude_order(&dense);
        let mut dense_top: Vec<f64> = order.iter().take(4).map(|&i| dense[i]).collect();
        dense_top.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut ys = roots.ys.clone();
        ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let scale = ys.iter().map(|y| y.abs()).fold(0.0f64, f64::max);
        for (y, d) in ys.iter().zip(&dense_top) {
            assert!((y - d).abs() <= 1e-8 * scale, "{y} vs {d}");
        }

        for idx in 0..4 {
            assert!(roots.h_residuals[idx] <= 1e-8);
            assert!(roots.eigen_residuals[idx] <= 1e-8);
            let q = roots.qfull.column(idx);
            assert!((norm(&q) - 1.0).abs() < 1e-12);
        }

        // orthogonality for distinct roots
        for i in 0..4 {
            for j in (i + 1)..4 {
                let gap = (roots.ys[i] - roots.ys[j]).abs();
                if gap > 1e-6 {
                    let qi = roots.qfull.column(i);
                    let qj = roots.qfull.column(j);
                    assert!(dot(&qi, &qj).abs() <= ORTHOGONALITY_TOL);
                }
            }
        }
    }

    #[test]
    fn rank_of_signal_matrix() {
        let spec = model1_spec(120, 0.15);
        let s = sampled_indicator(&spec, 0, 21);
        let oracle = build_theory_oracle(&spec, &s).unwrap();
        let (rank, gap) = verify_rank_be(&oracle).unwrap();
        assert_eq!(rank, 4);
        assert!(gap > 1e6);

        let single = single_block_spec(30, 0.4);
        let s_one = indicator(30, &[2, 3, 4, 5]);
        let oracle1 = build_theory_oracle(&single, &s_one).unwrap();
        let (rank1, _) = verify_rank_be(&oracle1).unwrap();
        assert_eq!(rank1, 2);

        // zero indicator: signal matrix is zero
        let zero_s = vec![0u8; 30];
        let oracle0 = build_theory_oracle(&single, &zero_s).unwrap();
        assert!(!oracle0.vtsv_invertible);
        let (rank0, _) = verify_rank_be(&oracle0).unwrap();
        assert_eq!(rank0, 0);
    }

    #[test]
    fn major_term_zero_for_deterministic_model() {
        // P with {0, 1} entries and a Bernoulli diagonal make the sample
        // equal its expectation, so the error term vanishes exactly
        let p = Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let spec = SbmSpec::new(2, p, SbmSpec::balanced_membership(12, 2)).unwrap();
        let a = sample_adjacency(&spec, 5, DiagonalMode::Bernoulli);
        let view = crate::view::perceive_based(&a, 0, crate::view::Depth::Two);
        let oracle = build_theory_oracle(&spec, view.s()).unwrap();
        let report = major_term_report(&a, &view, &oracle).unwrap();
        assert!(report.err_norm < 1e-10, "err_norm {}", report.err_norm);
    }

    #[test]
    fn m_set_trivial_cases() {
        let spec = model1_spec(60, 0.3);
        let s = sampled_indicator(&spec, 0, 7);
        let oracle = build_theory_oracle(&spec, &s).unwrap();
        let roots = solve_quadratic_eigenproblem(&oracle).unwrap();

        // W = Q exactly and centroids = rows of Q: alignment is the
        // identity and every distance is zero
        let w = SpectralEmbedding {
            w: roots.qfull.clone(),
            values: roots.ys.clone(),
        };
        let (set, frac) = compute_m_set(&roots, &w, &roots.qfull, 1.0).unwrap();
        assert!(set.is_empty());
        assert_eq!(frac, 0.0);

        // zero centroids with c2 = 1: exactly the rows with norm above
        // the threshold
        let zeros = Mat::zeros(60, 4);
        let (set, _) = compute_m_set(&roots, &w, &zeros, 1.0).unwrap();
        let threshold = 1.0 / (2.0 * 60.0f64).sqrt();
        for i in 0..60 {
            let row_norm = norm(roots.qfull.row(i));
            assert_eq!(set.contains(&i), row_norm >= threshold, "node {i}");
        }
    }

    #[test]
    fn empirical_c2_is_positive() {
        let spec = model1_spec(80, 0.25);
        let s = sampled_indicator(&spec, 0, 13);
        let oracle = build_theory_oracle(&spec, &s).unwrap();
        let roots = solve_quadratic_eigenproblem(&oracle).unwrap();
        let c2 = empirical_c2(&oracle, &roots).unwrap();
        assert!(c2.is_finite() && c2 > 0.0);
    }
}
