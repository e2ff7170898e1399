//! Dense f64 linear algebra kernels: symmetric eigendecomposition, a
//! Lanczos solver for the leading eigenpairs by magnitude, real
//! eigenvalues of small nonsymmetric matrices, and a small-matrix SVD.
//!
//! Everything here is deterministic: no thread-order-dependent reductions
//! and all "random" starting vectors come from fixed-seed generators.

// indexed loops over parallel arrays are the dominant access pattern here
#![allow(clippy::needless_range_loop)]

use crate::error::{Error, Result};

const EPS: f64 = 2.220_446_049_250_313e-16;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Mat {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = out.row_mut(i);
            for (k, &a_ik) in a_row.iter().enumerate() {
                if a_ik == 0.0 {
                    continue;
                }
                let b_row = other.row(k);
                for j in 0..b_row.len() {
                    out_row[j] += a_ik * b_row[j];
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(out.len(), self.rows);
        for i in 0..self.rows {
            let row = self.row(i);
            let mut acc = 0.0;
            for j in 0..row.len() {
                acc += row[j] * x[j];
            }
            out[i] = acc;
        }
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, col: &[f64]) {
        assert_eq!(col.len(), self.rows);
        for i in 0..self.rows {
            self[(i, j)] = col[i];
        }
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        out
    }

    pub fn max_asymmetry(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Full eigendecomposition of a symmetric matrix: values in ascending
/// order, optional orthonormal eigenvector columns.
///
/// Householder tridiagonalization followed by the implicit-shift QL
/// iteration, after the classic EISPACK/JAMA routines.
pub fn sym_eigen(a: &Mat, want_vectors: bool) -> Result<(Vec<f64>, Option<Mat>)> {
    let n = a.rows();
    assert_eq!(n, a.cols(), "sym_eigen needs a square matrix");
    if n == 0 {
        return Ok((Vec::new(), want_vectors.then(|| Mat::zeros(0, 0))));
    }
    let mut v = a.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut v, &mut d, &mut e);
    tql2(&mut v, &mut d, &mut e, want_vectors)?;
    // ascending sort with vector columns carried along
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let vectors = want_vectors.then(|| {
        let mut w = Mat::zeros(n, n);
        for (new_j, &old_j) in order.iter().enumerate() {
            for i in 0..n {
                w[(i, new_j)] = v[(i, old_j)];
            }
        }
        w
    });
    Ok((values, vectors))
}

/// Eigenvalues only, ascending.
pub fn sym_eigen_values(a: &Mat) -> Result<Vec<f64>> {
    Ok(sym_eigen(a, false)?.0)
}

fn tred2(v: &mut Mat, d: &mut [f64], e: &mut [f64]) {
    let n = v.rows();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for item in d.iter().take(i) {
            scale += item.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
                v[(j, i)] = 0.0;
            }
        } else {
            for item in d.iter_mut().take(i) {
                *item /= scale;
                h += *item * *item;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for item in e.iter_mut().take(i) {
                *item = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[(j, i)] = f;
                g = e[j] + v[(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    let t = f * e[k] + g * d[k];
                    v[(k, j)] -= t;
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..n.saturating_sub(1) {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    let t = g * d[k];
                    v[(k, j)] -= t;
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = 0.0;
    }
    v[(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

fn tql2(v: &mut Mat, d: &mut [f64], e: &mut [f64], want_vectors: bool) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= EPS * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 50 {
                    return Err(Error::ConvergenceFailure(format!(
                        "QL iteration stalled at eigenvalue {l}"
                    )));
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for item in d.iter_mut().take(n).skip(l + 2) {
                    *item -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if want_vectors {
                        for k in 0..n {
                            h = v[(k, i + 1)];
                            v[(k, i + 1)] = s * v[(k, i)] + c * h;
                            v[(k, i)] = c * v[(k, i)] - s * h;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= EPS * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Mix a seed with a salt into a new seed, splitmix64 style.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut state = seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    splitmix64(&mut state)
}

/// Deterministic pseudo-random stream used for starting vectors.
pub(crate) fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn unit_f64(state: &mut u64) -> f64 {
    // uniform in [-1, 1)
    (splitmix64(state) >> 11) as f64 / (1u64 << 52) as f64 - 1.0
}

/// Leading `m` eigenpairs of a symmetric matrix ordered by descending
/// magnitude (ties broken towards the positive eigenvalue).
///
/// Small problems go through the dense path; larger ones use Lanczos
/// with full reorthogonalization and a dense fallback. every returned
/// pair satisfies `||A w - lambda w|| <= tol_rel * ||A||`.
pub fn sym_top_eigen(a: &Mat, m: usize, tol_rel: f64) -> Result<(Vec<f64>, Mat)> {
    let n = a.rows();
    assert_eq!(n, a.cols());
    assert!(m >= 1 && m <= n, "requested {m} of {n} eigenpairs");

    const DENSE_CUTOFF: usize = 280;
    if n <= DENSE_CUTOFF || m * 3 >= n {
        let (values, vectors) = sym_eigen(a, true)?;
        let vectors = vectors.unwrap();
        let order = magnitude_order(&values);
        let mut out_vals = Vec::with_capacity(m);
        let mut out_vecs = Mat::zeros(n, m);
        for (j, &idx) in order.iter().take(m).enumerate() {
            out_vals.push(values[idx]);
            for i in 0..n {
                out_vecs[(i, j)] = vectors[(i, idx)];
            }
        }
        return Ok((out_vals, out_vecs));
    }

    match lanczos_top(a, m, tol_rel) {
        Ok(res) => Ok(res),
        Err(Error::ConvergenceFailure(_)) => {
            // rare: fall back to the dense path
            let (values, vectors) = sym_eigen(a, true)?;
            let vectors = vectors.unwrap();
            let order = magnitude_order(&values);
            let mut out_vals = Vec::with_capacity(m);
            let mut out_vecs = Mat::zeros(n, m);
            for (j, &idx) in order.iter().take(m).enumerate() {
                out_vals.push(values[idx]);
                for i in 0..n {
                    out_vecs[(i, j)] = vectors[(i, idx)];
                }
            }
            Ok((out_vals, out_vecs))
        }
        Err(e) => Err(e),
    }
}

/// Indices sorted by |value| descending, positive value first on ties.
pub fn magnitude_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| {
        values[j]
            .abs()
            .partial_cmp(&values[i].abs())
            .unwrap()
            .then(values[j].partial_cmp(&values[i]).unwrap())
    });
    order
}

fn lanczos_top(a: &Mat, m: usize, tol_rel: f64) -> Result<(Vec<f64>, Mat)> {
    let n = a.rows();
    let max_steps = n.min(600);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(max_steps);
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();

    let mut seed_state = 0x243f_6a88_85a3_08d3u64;
    let mut v = new_unit_vector(n, &mut seed_state, &basis);
    let mut w = vec![0.0; n];

    let mut next_check = (m + 4).min(max_steps);
    loop {
        basis.push(v.clone());
        let j = basis.len() - 1;
        a.matvec(&v, &mut w);
        if j > 0 {
            let beta = betas[j - 1];
            let prev = &basis[j - 1];
            for i in 0..n {
                w[i] -= beta * prev[i];
            }
        }
        let alpha = dot(&w, &v);
        for i in 0..n {
            w[i] -= alpha * v[i];
        }
        alphas.push(alpha);
        // full reorthogonalization, two passes
        for _ in 0..2 {
            for q in &basis {
                let c = dot(&w, q);
                if c != 0.0 {
                    for i in 0..n {
                        w[i] -= c * q[i];
                    }
                }
            }
        }
        let beta = norm2(&w);
        let scale_est = alphas
            .iter()
            .map(|x| x.abs())
            .chain(betas.iter().map(|x| x.abs()))
            .fold(0.0f64, f64::max)
            .max(1e-300);

        let steps = basis.len();
        let done_growing = steps == max_steps;
        let breakdown = beta <= 1e-13 * scale_est;

        if steps >= next_check || done_growing || breakdown {
            next_check = (steps + (steps / 3).max(8)).min(max_steps);
            if steps >= m {
                if let Some(res) = ritz_extract(a, &basis, &alphas, &betas, beta, m, tol_rel)? {
                    return Ok(res);
                }
            }
            if done_growing {
                return Err(Error::ConvergenceFailure(format!(
                    "Lanczos did not converge in {max_steps} steps"
                )));
            }
        }

        if breakdown {
            // invariant subspace found; continue with a fresh direction
            v = new_unit_vector(n, &mut seed_state, &basis);
            betas.push(0.0);
        } else {
            for i in 0..n {
                w[i] /= beta;
            }
            v.copy_from_slice(&w);
            betas.push(beta);
        }
    }
}

fn new_unit_vector(n: usize, seed_state: &mut u64, basis: &[Vec<f64>]) -> Vec<f64> {
    for _ in 0..8 {
        let mut v: Vec<f64> = (0..n).map(|_| unit_f64(seed_state)).collect();
        for q in basis {
            let c = dot(&v, q);
            for i in 0..n {
                v[i] -= c * q[i];
            }
        }
        let nrm = norm2(&v);
        if nrm > 1e-8 {
            for x in &mut v {
                *x /= nrm;
            }
            return v;
        }
    }
    // n exceeds the basis size, so an orthogonal direction always exists
    unreachable!("failed to draw a vector outside the Krylov basis");
}

#[allow(clippy::too_many_arguments)]
fn ritz_extract(
    a: &Mat,
    basis: &[Vec<f64>],
    alphas: &[f64],
    betas: &[f64],
    last_beta: f64,
    m: usize,
    tol_rel: f64,
) -> Result<Option<(Vec<f64>, Mat)>> {
    let steps = basis.len();
    let n = basis[0].len();
    let mut tri = Mat::zeros(steps, steps);
    for i in 0..steps {
        tri[(i, i)] = alphas[i];
        if i + 1 < steps {
            tri[(i, i + 1)] = betas[i];
            tri[(i + 1, i)] = betas[i];
        }
    }
    let (theta, s) = sym_eigen(&tri, true)?;
    let s = s.unwrap();
    let order = magnitude_order(&theta);
    let scale = theta[order[0]].abs().max(1e-300);

    // cheap residual bound: |beta_j * s[last, i]|
    for &idx in order.iter().take(m) {
        let est = (last_beta * s[(steps - 1, idx)]).abs();
        if est > 0.5 * tol_rel * scale {
            return Ok(None);
        }
    }

    let mut values = Vec::with_capacity(m);
    let mut vectors = Mat::zeros(n, m);
    for (j, &idx) in order.iter().take(m).enumerate() {
        values.push(theta[idx]);
        let mut x = vec![0.0; n];
        for (k, q) in basis.iter().enumerate() {
            let c = s[(k, idx)];
            if c != 0.0 {
                for i in 0..n {
                    x[i] += c * q[i];
                }
            }
        }
        let nrm = norm2(&x);
        for v in &mut x {
            *v /= nrm;
        }
        for i in 0..n {
            vectors[(i, j)] = x[i];
        }
    }

    // explicit residual verification
    let mut ax = vec![0.0; n];
    for j in 0..m {
        let x = vectors.column(j);
        a.matvec(&x, &mut ax);
        let mut res = 0.0f64;
        for i in 0..n {
            let r = ax[i] - values[j] * x[i];
            res += r * r;
        }
        if res.sqrt() > tol_rel * scale {
            return Ok(None);
        }
    }
    Ok(Some((values, vectors)))
}

/// Largest singular value of a symmetric matrix (its spectral norm).
pub fn spectral_norm_sym(a: &Mat) -> Result<f64> {
    if a.rows() == 0 {
        return Ok(0.0);
    }
    if a.data.iter().all(|&x| x == 0.0) {
        return Ok(0.0);
    }
    let (values, _) = sym_top_eigen(a, 1, 1e-9)?;
    Ok(values[0].abs())
}

/// Eigenvalues of a small real matrix as `(re, im)` pairs.
///
/// Householder reduction to Hessenberg form followed by the Francis
/// double-shift QR iteration (EISPACK `hqr` lineage, values only).
pub fn eigenvalues_general(a: &Mat) -> Result<Vec<(f64, f64)>> {
    let nn = a.rows();
    assert_eq!(nn, a.cols());
    if nn == 0 {
        return Ok(Vec::new());
    }
    let mut h = a.clone();
    orthes(&mut h);

    let mut d = vec![0.0; nn];
    let mut e = vec![0.0; nn];

    let low = 0usize;
    let high = nn - 1;
    let mut norm = 0.0;
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            norm += h[(i, j)].abs();
        }
    }
    if norm == 0.0 {
        return Ok(vec![(0.0, 0.0); nn]);
    }

    let mut n = high as isize;
    let mut exshift = 0.0;
    let mut iter = 0;
    let mut total_iter = 0;
    let (mut p, mut q, mut r, mut s, mut z);
    let (mut x, mut y, mut w);

    while n >= low as isize {
        let nu = n as usize;
        // find a small subdiagonal element
        let mut l = nu;
        while l > low {
            s = h[(l - 1, l - 1)].abs() + h[(l, l)].abs();
            if s == 0.0 {
                s = norm;
            }
            if h[(l, l - 1)].abs() < EPS * s {
                break;
            }
            l -= 1;
        }

        if l == nu {
            // single root
            h[(nu, nu)] += exshift;
            d[nu] = h[(nu, nu)];
            e[nu] = 0.0;
            n -= 1;
            iter = 0;
        } else if l == nu - 1 {
            // pair of roots
            w = h[(nu, nu - 1)] * h[(nu - 1, nu)];
            p = (h[(nu - 1, nu - 1)] - h[(nu, nu)]) / 2.0;
            q = p * p + w;
            z = q.abs().sqrt();
            h[(nu, nu)] += exshift;
            h[(nu - 1, nu - 1)] += exshift;
            x = h[(nu, nu)];
            if q >= 0.0 {
                z = if p >= 0.0 { p + z } else { p - z };
                d[nu - 1] = x + z;
                d[nu] = d[nu - 1];
                if z != 0.0 {
                    d[nu] = x - w / z;
                }
                e[nu - 1] = 0.0;
                e[nu] = 0.0;
            } else {
                d[nu - 1] = x + p;
                d[nu] = x + p;
                e[nu - 1] = z;
                e[nu] = -z;
            }
            n -= 2;
            iter = 0;
        } else {
            // form shift
            x = h[(nu, nu)];
            y = 0.0;
            w = 0.0;
            if l < nu {
                y = h[(nu - 1, nu - 1)];
                w = h[(nu, nu - 1)] * h[(nu - 1, nu)];
            }
            if iter == 10 {
                exshift += x;
                for i in low..=nu {
                    h[(i, i)] -= x;
                }
                s = h[(nu, nu - 1)].abs() + h[(nu - 1, nu - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if iter == 30 {
                s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in low..=nu {
                        h[(i, i)] -= s;
                    }
                    exshift += s;
                    x = 0.964;
                    y = x;
                    w = x;
                }
            }
            iter += 1;
            total_iter += 1;
            if iter > 60 || total_iter > 120 * nn {
                return Err(Error::ConvergenceFailure(
                    "QR iteration stalled on a Hessenberg matrix".into(),
                ));
            }

            // two consecutive small subdiagonal elements
            let mut m = nu - 2;
            loop {
                z = h[(m, m)];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[(m + 1, m)] + h[(m, m + 1)];
                q = h[(m + 1, m + 1)] - z - r - s;
                r = h[(m + 2, m + 1)];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if h[(m, m - 1)].abs() * (q.abs() + r.abs())
                    < EPS
                        * (p.abs() * (h[(m - 1, m - 1)].abs() + z.abs() + h[(m + 1, m + 1)].abs()))
                {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=nu {
                h[(i, i - 2)] = 0.0;
                if i > m + 2 {
                    h[(i, i - 3)] = 0.0;
                }
            }

            // double QR step on rows l..=n, columns m..=n
            for k in m..nu {
                let notlast = k != nu - 1;
                if k != m {
                    p = h[(k, k - 1)];
                    q = h[(k + 1, k - 1)];
                    r = if notlast { h[(k + 2, k - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s != 0.0 {
                    if k != m {
                        h[(k, k - 1)] = -s * x;
                    } else if l != m {
                        h[(k, k - 1)] = -h[(k, k - 1)];
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;

                    for j in k..nn {
                        let mut pp = h[(k, j)] + q * h[(k + 1, j)];
                        if notlast {
                            pp += r * h[(k + 2, j)];
                            h[(k + 2, j)] -= pp * z;
                        }
                        h[(k, j)] -= pp * x;
                        h[(k + 1, j)] -= pp * y;
                    }
                    let upper = nu.min(k + 3);
                    for i in 0..=upper {
                        let mut pp = x * h[(i, k)] + y * h[(i, k + 1)];
                        if notlast {
                            pp += z * h[(i, k + 2)];
                            h[(i, k + 2)] -= pp * r;
                        }
                        h[(i, k)] -= pp;
                        h[(i, k + 1)] -= pp * q;
                    }
                }
            }
        }
    }

    Ok(d.into_iter().zip(e).collect())
}

fn orthes(h: &mut Mat) {
    let n = h.rows();
    if n < 3 {
        return;
    }
    let low = 0usize;
    let high = n - 1;
    let mut ort = vec![0.0; n];
    for m in (low + 1)..high {
        let mut scale = 0.0;
        for i in m..=high {
            scale += h[(i, m - 1)].abs();
        }
        if scale != 0.0 {
            let mut hh = 0.0;
            for i in (m..=high).rev() {
                ort[i] = h[(i, m - 1)] / scale;
                hh += ort[i] * ort[i];
            }
            let mut g = hh.sqrt();
            if ort[m] > 0.0 {
                g = -g;
            }
            hh -= ort[m] * g;
            ort[m] -= g;

            for j in m..n {
                let mut f = 0.0;
                for i in (m..=high).rev() {
                    f += ort[i] * h[(i, j)];
                }
                f /= hh;
                for i in m..=high {
                    let t = f * ort[i];
                    h[(i, j)] -= t;
                }
            }
            for i in 0..=high {
                let mut f = 0.0;
                for j in (m..=high).rev() {
                    f += ort[j] * h[(i, j)];
                }
                f /= hh;
                for j in m..=high {
                    let t = f * ort[j];
                    h[(i, j)] -= t;
                }
            }
            ort[m] *= scale;
            h[(m, m - 1)] = scale * g;
        }
    }
}

/// Thin SVD of a small matrix with `rows >= cols`, by one-sided Jacobi.
/// Returns `(u, sigma, v)` with singular values descending and
/// `a = u * diag(sigma) * v^T`.
pub fn svd_small(a: &Mat) -> (Mat, Vec<f64>, Mat) {
    let m = a.rows();
    let n = a.cols();
    assert!(m >= n, "svd_small expects rows >= cols");
    let mut u = a.clone();
    let mut v = Mat::identity(n);

    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for i in 0..m {
                    let up = u[(i, p)];
                    let uq = u[(i, q)];
                    alpha += up * up;
                    beta += uq * uq;
                    gamma += up * uq;
                }
                if gamma.abs() <= 1e-30 || gamma.abs() <= EPS * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let up = u[(i, p)];
                    let uq = u[(i, q)];
                    u[(i, p)] = c * up - s * uq;
                    u[(i, q)] = s * up + c * uq;
                }
                for i in 0..n {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)];
                    v[(i, p)] = c * vp - s * vq;
                    v[(i, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sigma: Vec<f64> = (0..n).map(|j| norm2(&u.column(j))).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap());
    let mut u_sorted = Mat::zeros(m, n);
    let mut v_sorted = Mat::zeros(n, n);
    let mut s_sorted = Vec::with_capacity(n);
    let max_sigma = order.first().map(|&i| sigma[i]).unwrap_or(0.0);
    for (new_j, &old_j) in order.iter().enumerate() {
        let s = sigma[old_j];
        s_sorted.push(s);
        for i in 0..n {
            v_sorted[(i, new_j)] = v[(i, old_j)];
        }
        if s > EPS * max_sigma.max(1.0) * 8.0 {
            for i in 0..m {
                u_sorted[(i, new_j)] = u[(i, old_j)] / s;
            }
        } else {
            // left vector is numerically undefined; leave the column zero
            for i in 0..m {
                u_sorted[(i, new_j)] = 0.0;
            }
        }
    }
    sigma = s_sorted;
    (u_sorted, sigma, v_sorted)
}
