//! Compressed sparse row matrices and MatrixMarket export.

use std::io::{self, Write};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SparseError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("triplet ({row}, {col}) outside a {nrows}x{ncols} matrix")]
    OutOfBounds {
        row: usize,
        col: usize,
        nrows: usize,
        ncols: usize,
    },
}

/// Real matrix in compressed row layout with sorted, duplicate-free columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self, SparseError> {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, _) in triplets {
            if r >= nrows || c >= ncols {
                return Err(SparseError::OutOfBounds {
                    row: r,
                    col: c,
                    nrows,
                    ncols,
                });
            }
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut cursor = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(r, c, v) in triplets {
            cols[cursor[r]] = c;
            vals[cursor[r]] = v;
            cursor[r] += 1;
        }

        let mut row_offsets = Vec::with_capacity(nrows + 1);
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_offsets.push(0);
        let mut row: Vec<(usize, f64)> = Vec::new();
        for i in 0..nrows {
            row.clear();
            row.extend((counts[i]..counts[i + 1]).map(|k| (cols[k], vals[k])));
            row.sort_by_key(|&(c, _)| c);
            for &(c, v) in &row {
                match col_indices.last() {
                    Some(&last) if last == c && values.len() > row_offsets[i] => {
                        *values.last_mut().unwrap() += v;
                    }
                    _ => {
                        col_indices.push(c);
                        values.push(v);
                    }
                }
            }
            row_offsets.push(col_indices.len());
        }
        Ok(Self {
            nrows,
            ncols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::identity(diag.len());
        m.values.copy_from_slice(diag);
        m
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Iterates the stored entries of row `i` as `(col, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_indices[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        match self.col_indices[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `y = A^T x`
    pub fn mul_vec_transposed(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for (i, &xi) in x.iter().enumerate() {
            for (j, v) in self.row(i) {
                y[j] += v * xi;
            }
        }
        y
    }

    pub fn transpose(&self) -> Self {
        let triplets: Vec<_> = (0..self.nrows)
            .flat_map(|i| self.row(i).map(move |(j, v)| (j, i, v)))
            .collect();
        Self::from_triplets(self.ncols, self.nrows, &triplets).expect("indices are in range")
    }

    /// Sparse product `self * rhs`.
    pub fn matmul(&self, rhs: &CsrMatrix) -> Result<Self, SparseError> {
        if self.ncols != rhs.nrows {
            return Err(SparseError::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.nrows, self.ncols, rhs.nrows, rhs.ncols
            )));
        }
        let mut row_offsets = vec![0];
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        let mut acc = vec![0.0; rhs.ncols];
        let mut marker = vec![usize::MAX; rhs.ncols];
        let mut pattern = Vec::new();
        for i in 0..self.nrows {
            pattern.clear();
            for (k, a) in self.row(i) {
                for (j, b) in rhs.row(k) {
                    if marker[j] != i {
                        marker[j] = i;
                        acc[j] = 0.0;
                        pattern.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            pattern.sort_unstable();
            for &j in &pattern {
                col_indices.push(j);
                values.push(acc[j]);
            }
            row_offsets.push(col_indices.len());
        }
        Ok(Self {
            nrows: self.nrows,
            ncols: rhs.ncols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// `alpha * self + beta * other`
    pub fn add_scaled(&self, alpha: f64, other: &CsrMatrix, beta: f64) -> Result<Self, SparseError> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(SparseError::DimensionMismatch(format!(
                "{}x{} plus {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let triplets: Vec<_> = (0..self.nrows)
            .flat_map(|i| {
                self.row(i)
                    .map(move |(j, v)| (i, j, alpha * v))
                    .chain(other.row(i).map(move |(j, v)| (i, j, beta * v)))
            })
            .collect();
        Self::from_triplets(self.nrows, self.ncols, &triplets)
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut m = self.clone();
        m.values.iter_mut().for_each(|v| *v *= alpha);
        m
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        (0..self.nrows)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `||A - A^T||_inf`
    pub fn symmetry_defect(&self) -> f64 {
        self.add_scaled(1.0, &self.transpose(), -1.0)
            .map(|d| d.inf_norm())
            .unwrap_or(f64::INFINITY)
    }

    pub fn max_abs_diff(&self, other: &CsrMatrix) -> f64 {
        self.add_scaled(1.0, other, -1.0)
            .map(|d| d.values.iter().fold(0.0, |m: f64, v| m.max(v.abs())))
            .unwrap_or(f64::INFINITY)
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        out
    }

    /// MatrixMarket coordinate output with 1-based indices. With `symmetric`
    /// only the lower triangle is written.
    pub fn write_matrix_market<W: Write>(&self, mut out: W, symmetric: bool) -> io::Result<()> {
        let kind = if symmetric { "symmetric" } else { "general" };
        writeln!(out, "%%MatrixMarket matrix coordinate real {kind}")?;
        let keep = |i: usize, j: usize| !symmetric || j <= i;
        let count = (0..self.nrows)
            .map(|i| self.row(i).filter(|&(j, _)| keep(i, j)).count())
            .sum::<usize>();
        writeln!(out, "{} {} {}", self.nrows, self.ncols, count)?;
        for i in 0..self.nrows {
            for (j, v) in self.row(i).filter(|&(j, _)| keep(i, j)) {
                writeln!(out, "{} {} {:.17e}", i + 1, j + 1, v)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> CsrMatrix {
        CsrMatrix::from_triplets(
            3,
            3,
            &[(0, 0, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 2.0), (1, 2, -1.0), (2, 1, -1.0), (2, 2, 2.0), (2, 2, 1.0)],
        )
        .unwrap()
    }

    #[test]
    fn duplicates_are_summed() {
        let a = sample();
        assert_eq!(a.nnz(), 7);
        assert_eq!(a.get(2, 2), 3.0);
        assert_eq!(a.get(0, 2), 0.0);
        assert_eq!(a.mul_vec(&[1.0, 1.0, 1.0]), vec![1.0, 0.0, 2.0]);
        assert_eq!(a.symmetry_defect(), 0.0);
    }

    #[test]
    fn out_of_bounds_triplet() {
        assert!(matches!(
            CsrMatrix::from_triplets(2, 2, &[(2, 0, 1.0)]),
            Err(SparseError::OutOfBounds { .. })
        ));
    }

    #[test]
    fn matrix_market_symmetric_lower_triangle() {
        let mut buf = Vec::new();
        sample().write_matrix_market(&mut buf, true).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("%%MatrixMarket matrix coordinate real symmetric"));
        assert_eq!(lines.next(), Some("3 3 5"));
        let entries: Vec<(usize, usize, f64)> = lines
            .map(|l| {
                let f: Vec<&str> = l.split_whitespace().collect();
                (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap())
            })
            .collect();
        assert_eq!(entries[0], (1, 1, 2.0));
        assert!(entries.iter().all(|&(i, j, _)| j <= i));
        assert_eq!(entries.last(), Some(&(3, 3, 3.0)));
    }

    fn arb_matrix(max: usize) -> impl Strategy<Value = CsrMatrix> {
        (1..max, 1..max).prop_flat_map(|(r, c)| {
            prop::collection::vec((0..r, 0..c, -10.0..10.0f64), 0..40)
                .prop_map(move |t| CsrMatrix::from_triplets(r, c, &t).unwrap())
        })
    }

    proptest! {
        #[test]
        fn transpose_matches_transposed_product(a in arb_matrix(8), seed in 0u64..1000) {
            let x: Vec<f64> = (0..a.nrows()).map(|i| ((i as u64 * 7919 + seed) % 13) as f64 - 6.0).collect();
            let y1 = a.mul_vec_transposed(&x);
            let y2 = a.transpose().mul_vec(&x);
            for (u, v) in y1.iter().zip(&y2) {
                prop_assert!((u - v).abs() < 1e-12);
            }
            prop_assert_eq!(a.transpose().transpose(), a);
        }

        #[test]
        fn matmul_agrees_with_dense(a in arb_matrix(6), b_cols in 1usize..6, seed in 0u64..1000) {
            let trip: Vec<_> = (0..a.ncols()).flat_map(|i| (0..b_cols).map(move |j| (i, j, ((i * 31 + j * 17) as u64 + seed) as f64 % 5.0 - 2.0))).collect();
            let b = CsrMatrix::from_triplets(a.ncols(), b_cols, &trip).unwrap();
            let c = a.matmul(&b).unwrap().to_dense();
            let (ad, bd) = (a.to_dense(), b.to_dense());
            for i in 0..a.nrows() {
                for j in 0..b_cols {
                    let expect: f64 = (0..a.ncols()).map(|k| ad[i][k] * bd[k][j]).sum();
                    prop_assert!((c[i][j] - expect).abs() < 1e-10);
                }
            }
        }
    }
}
