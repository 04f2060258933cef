//! Dense row-major matrices for the small `p × p` systems that appear in
//! basis inversions and `‖A_D⁻¹‖` computations.

use crate::error::{CalmnessError, Result};
use serde::{Deserialize, Serialize};

/// Relative determinant threshold below which a matrix is declared singular.
pub const SINGULAR_REL_TOL: f64 = 1e-12;
/// Pivot threshold, relative to the largest entry, for factorizations of large bases.
pub const PIVOT_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |v| v.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(CalmnessError::dim(c, row.len()));
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix { rows: r, cols: c, data })
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

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|i| crate::norm::dot(self.row(i), x)).collect()
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// Largest absolute entry of `self − other`.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Product of the Euclidean row norms, the scale used by the singularity test.
    pub fn row_norm_product(&self) -> f64 {
        (0..self.rows).map(|i| crate::norm::NormSpec::Euclidean.norm(self.row(i))).product()
    }

    pub fn lu(&self) -> Result<Lu> {
        Lu::factor(self)
    }

    pub fn inverse(&self) -> Result<Matrix> {
        self.lu()?.inverse()
    }

    /// Inverse with a pivot-size singularity test, which unlike the determinant test
    /// does not degrade with the dimension.
    pub fn inverse_pivoted(&self) -> Result<Matrix> {
        Lu::factor_pivoted(self)?.inverse()
    }

    pub fn determinant(&self) -> Result<f64> {
        Ok(self.lu()?.det)
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        self.lu()?.solve(rhs)
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorization with partial pivoting, `P·A = L·U`.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Matrix,
    perm: Vec<usize>,
    pub det: f64,
}

impl Lu {
    /// Factorization declaring `A` singular when `|det A| ≤ 1e-12·∏‖row‖`.
    pub fn factor(a: &Matrix) -> Result<Lu> {
        let (lu, _) = Lu::decompose(a)?;
        let threshold = SINGULAR_REL_TOL * a.row_norm_product();
        if lu.det.abs() <= threshold || !lu.det.is_finite() {
            return Err(CalmnessError::Singular { det: lu.det, threshold });
        }
        Ok(lu)
    }

    /// Factorization declaring `A` singular when a pivot is below `1e-12·max|a_ij|`.
    pub fn factor_pivoted(a: &Matrix) -> Result<Lu> {
        let (lu, min_pivot) = Lu::decompose(a)?;
        let threshold = PIVOT_REL_TOL * a.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if min_pivot <= threshold || !min_pivot.is_finite() {
            return Err(CalmnessError::Singular { det: lu.det, threshold });
        }
        Ok(lu)
    }

    /// Partial-pivoting elimination; also returns the smallest pivot magnitude.
    fn decompose(a: &Matrix) -> Result<(Lu, f64)> {
        if a.rows != a.cols {
            return Err(CalmnessError::dim(a.rows, a.cols));
        }
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut det = 1.0;
        let mut min_pivot = f64::INFINITY;
        for k in 0..n {
            let (piv, big) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
            min_pivot = min_pivot.min(big);
            if big == 0.0 {
                det = 0.0;
                continue;
            }
            if piv != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, piv * n + j);
                }
                perm.swap(k, piv);
                det = -det;
            }
            let d = lu[(k, k)];
            det *= d;
            for i in k + 1..n {
                let f = lu[(i, k)] / d;
                lu[(i, k)] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        lu[(i, j)] -= f * lu[(k, j)];
                    }
                }
            }
        }
        Ok((Lu { n, lu, perm, det }, min_pivot))
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        if rhs.len() != n {
            return Err(CalmnessError::dim(n, rhs.len()));
        }
        let mut y: Vec<f64> = self.perm.iter().map(|&i| rhs[i]).collect();
        for i in 0..n {
            for j in 0..i {
                y[i] -= self.lu[(i, j)] * y[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                y[i] -= self.lu[(i, j)] * y[j];
            }
            y[i] /= self.lu[(i, i)];
        }
        Ok(y)
    }

    /// Solves `Aᵀ x = rhs`.
    pub fn solve_transpose(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        if rhs.len() != n {
            return Err(CalmnessError::dim(n, rhs.len()));
        }
        // Aᵀ = Uᵀ Lᵀ P
        let mut z = rhs.to_vec();
        for i in 0..n {
            for j in 0..i {
                z[i] -= self.lu[(j, i)] * z[j];
            }
            z[i] /= self.lu[(i, i)];
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                z[i] -= self.lu[(j, i)] * z[j];
            }
        }
        let mut x = vec![0.0; n];
        for (k, &pi) in self.perm.iter().enumerate() {
            x[pi] = z[k];
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<Matrix> {
        let n = self.n;
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e)?;
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Ok(inv)
    }
}

/// Inverse of a square matrix by LU with partial pivoting.
pub fn inverse_matrix(a: &Matrix) -> Result<Matrix> {
    a.inverse()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn inverse_of_example_basis() {
        let a = Matrix::from_rows(&[vec![-1.0, 0.0], vec![-1.0, -0.5]]).unwrap();
        let inv = inverse_matrix(&a).unwrap();
        let expected = Matrix::from_rows(&[vec![-1.0, 0.0], vec![2.0, -2.0]]).unwrap();
        assert!(inv.max_abs_diff(&expected) < 1e-14);
        assert!(a.mul(&inv).max_abs_diff(&Matrix::identity(2)) < 1e-10);
    }

    #[test]
    fn identity_inverse() {
        let i3 = Matrix::identity(3);
        assert_eq!(inverse_matrix(&i3).unwrap(), i3);
    }

    #[test]
    fn pivot_test_accepts_large_well_conditioned_bases() {
        // rows of norm √2 and |det| = 1: the determinant test rejects, pivots stay at 1
        let n = 120;
        let mut a = Matrix::identity(n);
        for i in 0..n - 1 {
            a[(i, i + 1)] = 1.0;
        }
        assert!(matches!(a.inverse(), Err(CalmnessError::Singular { .. })));
        let inv = a.inverse_pivoted().unwrap();
        assert!(a.mul(&inv).max_abs_diff(&Matrix::identity(n)) < 1e-9);
        let mut b = Matrix::identity(n);
        b[(n - 1, n - 1)] = 0.0;
        assert!(matches!(b.inverse_pivoted(), Err(CalmnessError::Singular { .. })));
    }

    #[test]
    fn parallel_rows_are_singular() {
        let pi = std::f64::consts::PI;
        let a = Matrix::from_rows(&[vec![(-pi).cos(), (-pi).sin()], vec![pi.cos(), pi.sin()]]).unwrap();
        assert!(matches!(inverse_matrix(&a), Err(CalmnessError::Singular { .. })));
    }

    #[test]
    fn non_square_rejected() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0, 3.0]]).unwrap();
        assert!(matches!(a.inverse(), Err(CalmnessError::DimensionMismatch { .. })));
    }

    #[test]
    fn transpose_solve_matches() {
        let a = Matrix::from_rows(&[vec![2.0, 1.0, 0.0], vec![1.0, 3.0, 1.0], vec![0.5, 0.0, 4.0]]).unwrap();
        let lu = a.lu().unwrap();
        let x = lu.solve_transpose(&[1.0, 2.0, 3.0]).unwrap();
        let back = a.transpose().mul_vec(&x);
        for (u, v) in back.iter().zip([1.0, 2.0, 3.0]) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn random_inverse_residual(p in 1usize..=5, seed in prop::collection::vec(-1.0f64..1.0, 25)) {
            let mut a = Matrix::zeros(p, p);
            for i in 0..p {
                for j in 0..p {
                    a[(i, j)] = seed[i * 5 + j] + if i == j { 2.0 } else { 0.0 };
                }
            }
            let inv = a.inverse().unwrap();
            prop_assert!(a.mul(&inv).max_abs_diff(&Matrix::identity(p)) <= 1e-9);
        }
    }
}
