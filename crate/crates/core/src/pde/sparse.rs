//! Compressed sparse row storage for the (tridiagonal) P1 matrices and a
//! pivot-checked complex tridiagonal LU.

use num_complex::Complex64;

/// Structurally symmetric CSR matrix with complex entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSym {
    pub dim: usize,
    pub row_offsets: Vec<usize>,
    pub col_indices: Vec<usize>,
    pub values: Vec<Complex64>,
}

impl SparseSym {
    /// CSR matrix with sub/super diagonal `off` (length `n-1`) and `diag`.
    pub fn from_symmetric_tridiagonal(diag: &[Complex64], off: &[Complex64]) -> Self {
        let n = diag.len();
        assert_eq!(off.len() + 1, n.max(1));
        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut col_indices = Vec::with_capacity(3 * n);
        let mut values = Vec::with_capacity(3 * n);
        row_offsets.push(0);
        for i in 0..n {
            if i > 0 {
                col_indices.push(i - 1);
                values.push(off[i - 1]);
            }
            col_indices.push(i);
            values.push(diag[i]);
            if i + 1 < n {
                col_indices.push(i + 1);
                values.push(off[i]);
            }
            row_offsets.push(col_indices.len());
        }
        Self { dim: n, row_offsets, col_indices, values }
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        let row = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_indices[row.clone()]
            .iter()
            .position(|c| *c == j)
            .map(|p| self.values[row.start + p])
            .unwrap_or_default()
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::default(); self.dim];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = Complex64::default();
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                acc += self.values[k] * x[self.col_indices[k]];
            }
            *yi = acc;
        }
    }

    /// `xᵀ A y` (bilinear, no conjugation).
    pub fn bilinear(&self, x: &[Complex64], y: &[Complex64]) -> Complex64 {
        dot(x, &self.matvec(y))
    }

    /// `xᴴ A x`.
    pub fn hermitian_form(&self, x: &[Complex64]) -> Complex64 {
        cdot(x, &self.matvec(x))
    }

    /// Diagonal and superdiagonal bands (the matrix must be tridiagonal).
    pub fn bands(&self) -> (Vec<Complex64>, Vec<Complex64>, Vec<Complex64>) {
        let n = self.dim;
        let diag = (0..n).map(|i| self.get(i, i)).collect();
        let lower = (1..n).map(|i| self.get(i, i - 1)).collect();
        let upper = (0..n.saturating_sub(1)).map(|i| self.get(i, i + 1)).collect();
        (lower, diag, upper)
    }

    /// `self + s * other` on the same sparsity pattern.
    pub fn axpy(&self, s: Complex64, other: &SparseSym) -> SparseSym {
        assert_eq!(self.col_indices, other.col_indices);
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + s * b).collect();
        SparseSym { values, ..self.clone() }
    }

    pub fn is_structurally_symmetric(&self) -> bool {
        (0..self.dim).all(|i| {
            self.col_indices[self.row_offsets[i]..self.row_offsets[i + 1]]
                .iter()
                .all(|&j| self.col_indices[self.row_offsets[j]..self.row_offsets[j + 1]].contains(&i))
        })
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                let j = self.col_indices[k];
                worst = worst.max((self.values[k] - self.get(j, i)).norm());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

pub fn dot(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// `xᴴ y`.
pub fn cdot(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm2(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Near-zero pivot met during factorisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularPivot {
    pub row: usize,
    pub pivot: f64,
    pub scale: f64,
}

/// LU factors of a tridiagonal matrix (no pivoting).
#[derive(Debug, Clone)]
pub struct TridiagonalLu {
    lower: Vec<Complex64>,
    diag: Vec<Complex64>,
    upper: Vec<Complex64>,
}

impl TridiagonalLu {
    /// Factors the matrix with bands `(lower, diag, upper)`; a pivot below
    /// `rel_tol * scale` is rejected.
    pub fn factor(
        lower: &[Complex64],
        diag: &[Complex64],
        upper: &[Complex64],
        rel_tol: f64,
    ) -> Result<Self, SingularPivot> {
        let n = diag.len();
        let scale = diag.iter().chain(lower).chain(upper).map(|v| v.norm()).fold(0.0, f64::max);
        let mut l = vec![Complex64::default(); n.saturating_sub(1)];
        let mut d = diag.to_vec();
        for i in 0..n {
            if i > 0 {
                l[i - 1] = lower[i - 1] / d[i - 1];
                d[i] -= l[i - 1] * upper[i - 1];
            }
            if d[i].norm() < rel_tol * scale {
                return Err(SingularPivot { row: i, pivot: d[i].norm(), scale });
            }
        }
        Ok(Self { lower: l, diag: d, upper: upper.to_vec() })
    }

    pub fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let n = self.diag.len();
        let mut x = rhs.to_vec();
        for i in 1..n {
            let t = self.lower[i - 1] * x[i - 1];
            x[i] -= t;
        }
        for i in (0..n).rev() {
            if i + 1 < n {
                let t = self.upper[i] * x[i + 1];
                x[i] -= t;
            }
            x[i] /= self.diag[i];
        }
        x
    }
}
