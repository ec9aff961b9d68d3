//! Dense real matrices, symmetric eigendecomposition (cyclic Jacobi) and the
//! spectral helpers built on it: Hermitian dilation, log-trace-exp, spectral
//! and nuclear norms, and projection onto the nuclear-norm ball.

use crate::error::{domain, structural, Error, Result};

const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return domain("matrix dimensions must be positive");
        }
        if data.len() != rows * cols {
            return structural(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return domain("matrix entries must be finite");
        }
        Ok(Mat { rows, cols, data })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return structural("ragged rows");
        }
        Mat::from_vec(r, c, rows.iter().flat_map(|row| row.iter().copied()).collect())
    }

    /// e_i e_jᵀ.
    pub fn indicator(rows: usize, cols: usize, i: usize, j: usize) -> Self {
        let mut m = Mat::zeros(rows, cols);
        m.set(i, j, 1.0);
        m
    }

    pub fn outer(u: &[f64], v: &[f64]) -> Self {
        let mut m = Mat::zeros(u.len(), v.len());
        for (i, ui) in u.iter().enumerate() {
            for (j, vj) in v.iter().enumerate() {
                m.data[i * v.len() + j] = ui * vj;
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

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j);
            }
        }
        t
    }

    pub fn matmul(&self, other: &Mat) -> Result<Mat> {
        if self.cols != other.rows {
            return structural(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            ));
        }
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn same_shape(&self, other: &Mat) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    /// self += alpha * other
    pub fn axpy(&mut self, alpha: f64, other: &Mat) -> Result<()> {
        if !self.same_shape(other) {
            return structural("matrix shapes differ");
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn scaled(&self, alpha: f64) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| alpha * v).collect(),
        }
    }

    /// Frobenius inner product ⟨A, B⟩ = tr(AᵀB).
    pub fn inner(&self, other: &Mat) -> Result<f64> {
        if !self.same_shape(other) {
            return structural("matrix shapes differ");
        }
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Symmetric matrix in full row-major storage. Constructors symmetrize.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMat {
    dim: usize,
    data: Vec<f64>,
}

impl SymMat {
    pub fn zeros(dim: usize) -> Self {
        SymMat { dim, data: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        SymMat::from_diag(&vec![1.0; dim])
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let n = d.len();
        let mut s = SymMat::zeros(n);
        for (i, v) in d.iter().enumerate() {
            s.data[i * n + i] = *v;
        }
        s
    }

    pub fn from_vec(dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim * dim {
            return structural(format!("{} entries for a {dim}x{dim} matrix", data.len()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return domain("matrix entries must be finite");
        }
        let mut s = SymMat { dim, data };
        s.symmetrize();
        Ok(s)
    }

    pub fn from_mat(m: &Mat) -> Result<Self> {
        if m.rows != m.cols {
            return structural("symmetric matrix must be square");
        }
        SymMat::from_vec(m.rows, m.data.clone())
    }

    /// v vᵀ
    pub fn outer(v: &[f64]) -> Self {
        let n = v.len();
        let mut s = SymMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                s.data[i * n + j] = v[i] * v[j];
            }
        }
        s
    }

    fn symmetrize(&mut self) {
        let n = self.dim;
        for i in 0..n {
            for j in (i + 1)..n {
                let m = 0.5 * (self.data[i * n + j] + self.data[j * n + i]);
                self.data[i * n + j] = m;
                self.data[j * n + i] = m;
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Sets both (i, j) and (j, i).
    pub fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    pub fn to_mat(&self) -> Mat {
        Mat { rows: self.dim, cols: self.dim, data: self.data.clone() }
    }

    /// self += alpha * other
    pub fn axpy(&mut self, alpha: f64, other: &SymMat) -> Result<()> {
        if self.dim != other.dim {
            return structural(format!("dimension {} vs {}", self.dim, other.dim));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
        Ok(())
    }

    /// alpha * self + beta * other
    pub fn lincomb(&self, alpha: f64, other: &SymMat, beta: f64) -> Result<SymMat> {
        if self.dim != other.dim {
            return structural(format!("dimension {} vs {}", self.dim, other.dim));
        }
        Ok(SymMat {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| alpha * a + beta * b).collect(),
        })
    }

    pub fn scaled(&self, alpha: f64) -> SymMat {
        SymMat { dim: self.dim, data: self.data.iter().map(|v| alpha * v).collect() }
    }

    pub fn add_diag(&mut self, v: f64) {
        for i in 0..self.dim {
            self.data[i * self.dim + i] += v;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim;
        (0..n)
            .map(|i| self.data[i * n..(i + 1) * n].iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

#[derive(Clone, Debug)]
pub struct Eigen {
    /// Descending.
    pub values: Vec<f64>,
    /// Column k is the unit eigenvector for `values[k]`.
    pub vectors: Mat,
}

/// Cyclic Jacobi sweeps on a full symmetric array. Stops once the
/// off-diagonal Frobenius norm is below `JACOBI_TOL` times the total norm.
fn jacobi(a: &mut [f64], n: usize, mut v: Option<&mut [f64]>) -> Result<()> {
    let total: f64 = a.iter().map(|x| x * x).sum();
    if total == 0.0 {
        return Ok(());
    }
    if !total.is_finite() {
        return Err(Error::Numeric("non-finite matrix passed to eigensolver".into()));
    }
    let tol2 = JACOBI_TOL * JACOBI_TOL * total;
    let mut off = 0.0;
    for _ in 0..JACOBI_MAX_SWEEPS {
        off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += 2.0 * a[p * n + q] * a[p * n + q];
            }
        }
        if off <= tol2 {
            return Ok(());
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    let np = c * akp - s * akq;
                    let nq = s * akp + c * akq;
                    a[k * n + p] = np;
                    a[p * n + k] = np;
                    a[k * n + q] = nq;
                    a[q * n + k] = nq;
                }
                if let Some(v) = v.as_deref_mut() {
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = c * vkp - s * vkq;
                        v[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }
    Err(Error::Numeric(format!(
        "Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps (off-diagonal norm {:.3e}, total {:.3e})",
        off.sqrt(),
        total.sqrt()
    )))
}

/// Eigenvalues only, descending.
pub fn sym_eigvals(s: &SymMat) -> Result<Vec<f64>> {
    let n = s.dim;
    let mut a = s.data.clone();
    jacobi(&mut a, n, None)?;
    let mut vals: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    vals.sort_by(|x, y| y.total_cmp(x));
    Ok(vals)
}

/// Full decomposition S = Q Λ Qᵀ with eigenvalues descending.
pub fn sym_eig(s: &SymMat) -> Result<Eigen> {
    let n = s.dim;
    let mut a = s.data.clone();
    let mut v = Mat::identity(n).data;
    jacobi(&mut a, n, Some(&mut v))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = Mat::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors.data[k * n + col] = v[k * n + src];
        }
    }
    Ok(Eigen { values, vectors })
}

/// [[0, X], [Xᵀ, 0]]
pub fn dilation(x: &Mat) -> SymMat {
    let (d1, d2) = (x.rows, x.cols);
    let mut s = SymMat::zeros(d1 + d2);
    for i in 0..d1 {
        for j in 0..d2 {
            s.set_sym(i, d1 + j, x.get(i, j));
        }
    }
    s
}

/// blockdiag(XXᵀ, XᵀX), which equals dilation(X)².
pub fn dilation_square(x: &Mat) -> SymMat {
    let (d1, d2) = (x.rows, x.cols);
    let n = d1 + d2;
    let mut s = SymMat::zeros(n);
    for i in 0..d1 {
        for k in 0..=i {
            let v: f64 = (0..d2).map(|j| x.get(i, j) * x.get(k, j)).sum();
            s.set_sym(i, k, v);
        }
    }
    for i in 0..d2 {
        for k in 0..=i {
            let v: f64 = (0..d1).map(|j| x.get(j, i) * x.get(j, k)).sum();
            s.set_sym(d1 + i, d1 + k, v);
        }
    }
    s
}

/// log Σ exp(λ_i), shifted by the largest value.
pub fn log_sum_exp(vals: &[f64]) -> f64 {
    let m = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || !m.is_finite() {
        return m;
    }
    m + vals.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// log tr exp(S).
pub fn log_trace_exp(s: &SymMat) -> Result<f64> {
    Ok(log_sum_exp(&sym_eigvals(s)?))
}

/// Largest |λ| of a symmetric matrix.
pub fn sym_spectral_norm(s: &SymMat) -> Result<f64> {
    let v = sym_eigvals(s)?;
    Ok(v.first().map_or(0.0, |a| a.abs()).max(v.last().map_or(0.0, |a| a.abs())))
}

/// Largest singular value, read off as λ₁ of the dilation.
pub fn spectral_norm(x: &Mat) -> Result<f64> {
    Ok(sym_eigvals(&dilation(x))?[0].max(0.0))
}

#[derive(Clone, Debug)]
pub struct Svd {
    /// d1 x k, columns are left singular vectors.
    pub u: Mat,
    /// Descending, length k = min(d1, d2).
    pub s: Vec<f64>,
    /// d2 x k
    pub v: Mat,
}

impl Svd {
    pub fn reconstruct(&self, s: &[f64]) -> Mat {
        let (d1, d2) = (self.u.rows, self.v.rows);
        let mut out = Mat::zeros(d1, d2);
        for (k, sk) in s.iter().enumerate() {
            if *sk == 0.0 {
                continue;
            }
            for i in 0..d1 {
                let a = sk * self.u.get(i, k);
                for j in 0..d2 {
                    out.data[i * d2 + j] += a * self.v.get(j, k);
                }
            }
        }
        out
    }
}

/// Thin SVD from the eigenvectors of the dilation: an eigenvector (u; v)
/// for eigenvalue σ > 0 gives the singular pair (u, v) after normalization.
pub fn svd(x: &Mat) -> Result<Svd> {
    let (d1, d2) = (x.rows, x.cols);
    let k = d1.min(d2);
    let eig = sym_eig(&dilation(x))?;
    let mut u = Mat::zeros(d1, k);
    let mut v = Mat::zeros(d2, k);
    let mut s = Vec::with_capacity(k);
    for c in 0..k {
        let sigma = eig.values[c].max(0.0);
        let nu: f64 = (0..d1).map(|i| eig.vectors.get(i, c).powi(2)).sum::<f64>().sqrt();
        let nv: f64 = (0..d2).map(|j| eig.vectors.get(d1 + j, c).powi(2)).sum::<f64>().sqrt();
        if nu > 1e-300 && nv > 1e-300 {
            for i in 0..d1 {
                u.set(i, c, eig.vectors.get(i, c) / nu);
            }
            for j in 0..d2 {
                v.set(j, c, eig.vectors.get(d1 + j, c) / nv);
            }
            s.push(sigma);
        } else {
            // Null-space vector of the dilation; carries no mass.
            s.push(0.0);
        }
    }
    Ok(Svd { u, s, v })
}

/// Sum of singular values, equal to ½ Σ |λ(dilation(X))|.
pub fn nuclear_norm(x: &Mat) -> Result<f64> {
    Ok(0.5 * sym_eigvals(&dilation(x))?.iter().map(|l| l.abs()).sum::<f64>())
}

/// Euclidean projection of a nonnegative vector onto {s ≥ 0, Σ s ≤ r}.
pub fn project_l1_nonneg(s: &[f64], r: f64) -> Vec<f64> {
    let total: f64 = s.iter().sum();
    if total <= r {
        return s.to_vec();
    }
    if r <= 0.0 {
        return vec![0.0; s.len()];
    }
    let mut sorted = s.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, v) in sorted.iter().enumerate() {
        cum += v;
        let cand = (cum - r) / (i + 1) as f64;
        if *v - cand > 0.0 {
            theta = cand;
        } else {
            break;
        }
    }
    s.iter().map(|v| (v - theta).max(0.0)).collect()
}

/// Projection onto {W : ‖W‖_Σ ≤ r}.
pub fn nuclear_projection(w: &Mat, r: f64) -> Result<Mat> {
    if !(r >= 0.0) {
        return domain(format!("nuclear radius must be nonnegative, got {r}"));
    }
    if r == 0.0 {
        return Ok(Mat::zeros(w.rows, w.cols));
    }
    let dec = svd(w)?;
    if dec.s.iter().sum::<f64>() <= r {
        return Ok(w.clone());
    }
    Ok(dec.reconstruct(&project_l1_nonneg(&dec.s, r)))
}

/// Lower Cholesky factor of a positive definite matrix.
#[derive(Clone, Debug)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    pub fn new(s: &SymMat) -> Result<Self> {
        let n = s.dim;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = s.get(j, j);
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > 0.0) {
                return Err(Error::Numeric(format!(
                    "matrix not positive definite (pivot {j} = {d:.3e})"
                )));
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in (j + 1)..n {
                let mut v = s.get(i, j);
                for k in 0..j {
                    v -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = v / d;
            }
        }
        Ok(Cholesky { n, l })
    }

    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.n).map(|i| self.l[i * self.n + i].ln()).sum::<f64>()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] -= self.l[i * n + k] * y[k];
            }
            y[i] /= self.l[i * n + i];
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                y[i] -= self.l[k * n + i] * y[k];
            }
            y[i] /= self.l[i * n + i];
        }
        y
    }

    /// bᵀ S⁻¹ b
    pub fn inv_quad(&self, b: &[f64]) -> f64 {
        let n = self.n;
        let mut y = b.to_vec();
        let mut acc = 0.0;
        for i in 0..n {
            for k in 0..i {
                y[i] -= self.l[i * n + k] * y[k];
            }
            y[i] /= self.l[i * n + i];
            acc += y[i] * y[i];
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_eigenvalues() {
        let s = SymMat::from_vec(2, vec![0.0, 3.0, 3.0, 0.0]).unwrap();
        let e = sym_eig(&s).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-14);
        assert!((e.values[1] + 3.0).abs() < 1e-14);
    }

    #[test]
    fn l1_projection_by_hand() {
        assert_eq!(project_l1_nonneg(&[3.0, 1.0], 2.0), vec![2.0, 0.0]);
        let p = project_l1_nonneg(&[1.0, 1.0, 1.0], 1.5);
        for v in p {
            assert!((v - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn cholesky_matches_diag() {
        let c = Cholesky::new(&SymMat::from_diag(&[4.0, 9.0])).unwrap();
        assert!((c.log_det() - 36f64.ln()).abs() < 1e-14);
        assert_eq!(c.solve(&[4.0, 9.0]), vec![1.0, 1.0]);
        assert!((c.inv_quad(&[2.0, 3.0]) - 2.0).abs() < 1e-15);
    }
}
