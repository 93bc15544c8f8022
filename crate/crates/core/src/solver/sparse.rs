//! Compressed sparse rows, ILU(0), and restarted GMRES.

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from per-row `(column, value)` lists; duplicates are summed.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            for (c, v) in row {
                if cols.len() > *row_ptr.last().unwrap() && *cols.last().unwrap() == c {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate().take(self.n) {
            let mut s = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            *yr = s;
        }
    }
}

/// Incomplete LU with the sparsity of the matrix itself.
#[derive(Clone, Debug)]
pub struct Ilu0 {
    lu: CsrMatrix,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let mut lu = a.clone();
        let n = lu.n;
        let mut diag = vec![usize::MAX; n];
        for r in 0..n {
            for k in lu.row_ptr[r]..lu.row_ptr[r + 1] {
                if lu.cols[k] == r {
                    diag[r] = k;
                }
            }
            if diag[r] == usize::MAX {
                return Err(Error::Singular(format!("row {r} has no diagonal entry")));
            }
        }
        let mut pos = vec![usize::MAX; n];
        for r in 0..n {
            let (start, end) = (lu.row_ptr[r], lu.row_ptr[r + 1]);
            for k in start..end {
                pos[lu.cols[k]] = k;
            }
            for k in start..end {
                let c = lu.cols[k];
                if c >= r {
                    break;
                }
                let pivot = lu.vals[diag[c]];
                let factor = lu.vals[k] / pivot;
                lu.vals[k] = factor;
                for kk in diag[c] + 1..lu.row_ptr[c + 1] {
                    let p = pos[lu.cols[kk]];
                    if p != usize::MAX {
                        lu.vals[p] -= factor * lu.vals[kk];
                    }
                }
            }
            for k in start..end {
                pos[lu.cols[k]] = usize::MAX;
            }
            let d = lu.vals[diag[r]];
            if !(d.abs() > 1e-300) || !d.is_finite() {
                return Err(Error::Singular(format!("zero pivot in incomplete factorization at row {r}")));
            }
        }
        Ok(Self { lu, diag })
    }

    /// Solves `LU z = r` in place.
    pub fn apply(&self, z: &mut [f64]) {
        let lu = &self.lu;
        for r in 0..lu.n {
            let mut s = z[r];
            for k in lu.row_ptr[r]..self.diag[r] {
                s -= lu.vals[k] * z[lu.cols[k]];
            }
            z[r] = s;
        }
        for r in (0..lu.n).rev() {
            let mut s = z[r];
            for k in self.diag[r] + 1..lu.row_ptr[r + 1] {
                s -= lu.vals[k] * z[lu.cols[k]];
            }
            z[r] = s / lu.vals[self.diag[r]];
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct GmresSettings {
    pub rel_tol: f64,
    pub restart: usize,
    pub max_iter: usize,
}

impl Default for GmresSettings {
    fn default() -> Self {
        Self { rel_tol: 1e-10, restart: 60, max_iter: 5000 }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct GmresOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Right-preconditioned restarted GMRES; `x` holds the initial guess.
pub fn gmres(a: &CsrMatrix, pre: &Ilu0, b: &[f64], x: &mut [f64], s: GmresSettings) -> Result<GmresOutcome> {
    let n = a.dim();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(GmresOutcome { iterations: 0, relative_residual: 0.0 });
    }
    let m = s.restart.max(1);
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut total = 0;
    let mut rel;
    loop {
        a.mul(x, &mut r);
        for i in 0..n {
            r[i] = b[i] - r[i];
        }
        let beta = norm(&r);
        rel = beta / bnorm;
        if rel <= s.rel_tol {
            return Ok(GmresOutcome { iterations: total, relative_residual: rel });
        }
        if total >= s.max_iter {
            return Err(Error::LinearSolver { iterations: total, relative_residual: rel });
        }
        let mut v: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        v.push(r.iter().map(|x| x / beta).collect());
        let mut hmat = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            z.copy_from_slice(&v[k]);
            pre.apply(&mut z);
            a.mul(&z, &mut w);
            for (i, vi) in v.iter().enumerate() {
                let hik = dot(&w, vi);
                hmat[i][k] = hik;
                for (wj, vj) in w.iter_mut().zip(vi) {
                    *wj -= hik * vj;
                }
            }
            let hn = norm(&w);
            hmat[k + 1][k] = hn;
            for i in 0..k {
                let t = cs[i] * hmat[i][k] + sn[i] * hmat[i + 1][k];
                hmat[i + 1][k] = -sn[i] * hmat[i][k] + cs[i] * hmat[i + 1][k];
                hmat[i][k] = t;
            }
            let d = (hmat[k][k] * hmat[k][k] + hmat[k + 1][k] * hmat[k + 1][k]).sqrt();
            if d == 0.0 {
                return Err(Error::Singular("GMRES breakdown: Krylov space collapsed".into()));
            }
            cs[k] = hmat[k][k] / d;
            sn[k] = hmat[k + 1][k] / d;
            hmat[k][k] = d;
            hmat[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            total += 1;
            k_used = k + 1;
            if (g[k + 1] / bnorm).abs() <= 0.5 * s.rel_tol || hn == 0.0 || total >= s.max_iter {
                break;
            }
            v.push(w.iter().map(|x| x / hn).collect());
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut t = g[i];
            for j in i + 1..k_used {
                t -= hmat[i][j] * y[j];
            }
            y[i] = t / hmat[i][i];
        }
        z.iter_mut().for_each(|e| *e = 0.0);
        for (j, yj) in y.iter().enumerate() {
            for (zi, vi) in z.iter_mut().zip(&v[j]) {
                *zi += yj * vi;
            }
        }
        pre.apply(&mut z);
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi += zi;
        }
        if x.iter().any(|e| !e.is_finite()) {
            return Err(Error::Singular("GMRES produced non-finite iterate".into()));
        }
    }
}

/// Solves `a x = b` from a zero initial guess.
pub fn solve(a: &CsrMatrix, b: &[f64], s: GmresSettings) -> Result<(Vec<f64>, GmresOutcome)> {
    let pre = Ilu0::new(a)?;
    let mut x = vec![0.0; a.dim()];
    let out = gmres(a, &pre, b, &mut x, s)?;
    Ok((x, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize) -> CsrMatrix {
        let idx = |i: usize, j: usize| j * n + i;
        let mut rows = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let mut row = vec![(idx(i, j), 4.0)];
                if i > 0 {
                    row.push((idx(i - 1, j), -1.0));
                }
                if i + 1 < n {
                    row.push((idx(i + 1, j), -1.2));
                }
                if j > 0 {
                    row.push((idx(i, j - 1), -1.0));
                }
                if j + 1 < n {
                    row.push((idx(i, j + 1), -0.8));
                }
                rows.push(row);
            }
        }
        CsrMatrix::from_rows(rows)
    }

    #[test]
    fn solves_nonsymmetric_system() {
        let a = laplacian(30);
        let xs: Vec<f64> = (0..a.dim()).map(|k| ((k * 7 % 13) as f64).sin()).collect();
        let mut b = vec![0.0; a.dim()];
        a.mul(&xs, &mut b);
        let (x, out) = solve(&a, &b, GmresSettings::default()).unwrap();
        assert!(out.relative_residual <= 1e-10);
        let err = x.iter().zip(&xs).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn duplicate_entries_are_summed() {
        let a = CsrMatrix::from_rows(vec![vec![(0, 1.0), (0, 1.0)], vec![(1, 3.0)]]);
        assert_eq!(a.nnz(), 2);
        let (x, _) = solve(&a, &[2.0, 3.0], GmresSettings::default()).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = CsrMatrix::from_rows(vec![vec![(0, 1.0), (1, 1.0)], vec![(0, 1.0), (1, 1.0)]]);
        assert!(matches!(solve(&a, &[1.0, 2.0], GmresSettings::default()), Err(Error::Singular(_))));
    }
}
