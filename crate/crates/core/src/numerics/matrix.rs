//! Dense/sparse matrix with storage-independent arithmetic.
//!
//! The same logical matrix can be held row-major dense or in CSR form.
//! Every operation skips zero terms in both representations and accumulates
//! in ascending index order, so results are bitwise identical regardless of
//! storage. That keeps simulation output reproducible when callers switch
//! storage for performance.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{config_err, domain_err, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    storage: Storage,
}

#[derive(Clone, Debug, PartialEq)]
enum Storage {
    /// Row-major values, length `rows * cols`.
    Dense(Vec<f64>),
    /// CSR: `indptr` has `rows + 1` entries; column indices per row are
    /// strictly ascending and values are nonzero.
    Sparse {
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    },
}

fn check_finite(values: &[f64]) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return domain_err("matrix entries must be finite (no NaN/Inf)");
    }
    Ok(())
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            storage: Storage::Dense(vec![0.0; rows * cols]),
        }
    }

    /// Dense matrix from row-major data.
    pub fn from_dense(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return config_err(format!(
                "dense data length {} does not match {}x{}",
                data.len(),
                rows,
                cols
            ));
        }
        check_finite(&data)?;
        Ok(Matrix {
            rows,
            cols,
            storage: Storage::Dense(data),
        })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return config_err("rows have inconsistent lengths");
        }
        let data: Vec<f64> = rows.into_iter().flatten().collect();
        Self::from_dense(nrows, ncols, data)
    }

    /// CSR matrix from per-row `(col, value)` entries, which must be sorted
    /// by column with no duplicates. Zero values are dropped.
    pub fn from_sparse_rows(
        rows: usize,
        cols: usize,
        row_entries: &[Vec<(usize, f64)>],
    ) -> Result<Self> {
        if row_entries.len() != rows {
            return config_err("row entry count does not match rows");
        }
        let mut indptr = Vec::with_capacity(rows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for entries in row_entries {
            let mut last: Option<usize> = None;
            for &(c, v) in entries {
                if c >= cols {
                    return config_err(format!("column {c} out of bounds ({cols})"));
                }
                if last.map_or(false, |p| c <= p) {
                    return config_err("sparse row entries must be sorted and unique");
                }
                if !v.is_finite() {
                    return domain_err("matrix entries must be finite (no NaN/Inf)");
                }
                last = Some(c);
                if v != 0.0 {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Ok(Matrix {
            rows,
            cols,
            storage: Storage::Sparse {
                indptr,
                indices,
                values,
            },
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse { .. })
    }

    /// Fraction of nonzero entries.
    pub fn density(&self) -> f64 {
        let total = (self.rows * self.cols).max(1);
        let nnz = match &self.storage {
            Storage::Dense(d) => d.iter().filter(|v| **v != 0.0).count(),
            Storage::Sparse { values, .. } => values.len(),
        };
        nnz as f64 / total as f64
    }

    /// Convert to CSR storage. Entries equal to 0.0 (including -0.0) are dropped.
    pub fn to_sparse(&self) -> Self {
        match &self.storage {
            Storage::Sparse { .. } => self.clone(),
            Storage::Dense(data) => {
                let mut indptr = Vec::with_capacity(self.rows + 1);
                let mut indices = Vec::new();
                let mut values = Vec::new();
                indptr.push(0);
                for r in 0..self.rows {
                    for c in 0..self.cols {
                        let v = data[r * self.cols + c];
                        if v != 0.0 {
                            indices.push(c);
                            values.push(v);
                        }
                    }
                    indptr.push(indices.len());
                }
                Matrix {
                    rows: self.rows,
                    cols: self.cols,
                    storage: Storage::Sparse {
                        indptr,
                        indices,
                        values,
                    },
                }
            }
        }
    }

    pub fn to_dense(&self) -> Self {
        match &self.storage {
            Storage::Dense(_) => self.clone(),
            Storage::Sparse {
                indptr,
                indices,
                values,
            } => {
                let mut data = vec![0.0; self.rows * self.cols];
                for r in 0..self.rows {
                    for k in indptr[r]..indptr[r + 1] {
                        data[r * self.cols + indices[k]] = values[k];
                    }
                }
                Matrix {
                    rows: self.rows,
                    cols: self.cols,
                    storage: Storage::Dense(data),
                }
            }
        }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        assert!(r < self.rows && c < self.cols, "index out of bounds");
        match &self.storage {
            Storage::Dense(d) => d[r * self.cols + c],
            Storage::Sparse {
                indptr,
                indices,
                values,
            } => {
                let lo = indptr[r];
                let hi = indptr[r + 1];
                match indices[lo..hi].binary_search(&c) {
                    Ok(k) => values[lo + k],
                    Err(_) => 0.0,
                }
            }
        }
    }

    /// Set one entry. Dense storage only.
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        assert!(r < self.rows && c < self.cols, "index out of bounds");
        assert!(v.is_finite(), "matrix entries must be finite");
        match &mut self.storage {
            Storage::Dense(d) => d[r * self.cols + c] = v,
            Storage::Sparse { .. } => panic!("set() requires dense storage"),
        }
    }

    /// Contiguous row slice. Dense storage only.
    pub fn row(&self, r: usize) -> &[f64] {
        match &self.storage {
            Storage::Dense(d) => &d[r * self.cols..(r + 1) * self.cols],
            Storage::Sparse { .. } => panic!("row() requires dense storage"),
        }
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        match &mut self.storage {
            Storage::Dense(d) => &mut d[r * self.cols..(r + 1) * self.cols],
            Storage::Sparse { .. } => panic!("row_mut() requires dense storage"),
        }
    }

    /// Nonzero entries of one row as `(col, value)`, ascending by column.
    pub fn row_nz(&self, r: usize) -> RowNz<'_> {
        match &self.storage {
            Storage::Dense(d) => RowNz::Dense {
                row: &d[r * self.cols..(r + 1) * self.cols],
                next: 0,
            },
            Storage::Sparse {
                indptr,
                indices,
                values,
            } => RowNz::Sparse {
                indices: &indices[indptr[r]..indptr[r + 1]],
                values: &values[indptr[r]..indptr[r + 1]],
                next: 0,
            },
        }
    }

    pub fn transpose(&self) -> Matrix {
        match &self.storage {
            Storage::Dense(d) => {
                let mut out = vec![0.0; self.rows * self.cols];
                for r in 0..self.rows {
                    for c in 0..self.cols {
                        out[c * self.rows + r] = d[r * self.cols + c];
                    }
                }
                Matrix {
                    rows: self.cols,
                    cols: self.rows,
                    storage: Storage::Dense(out),
                }
            }
            Storage::Sparse {
                indptr,
                indices,
                values,
            } => {
                // Counting sort by column keeps per-row indices ascending.
                let nnz = values.len();
                let mut counts = vec![0usize; self.cols + 1];
                for &c in indices {
                    counts[c + 1] += 1;
                }
                for c in 0..self.cols {
                    counts[c + 1] += counts[c];
                }
                let out_indptr = counts.clone();
                let mut cursor = counts;
                let mut out_indices = vec![0usize; nnz];
                let mut out_values = vec![0.0; nnz];
                for r in 0..self.rows {
                    for k in indptr[r]..indptr[r + 1] {
                        let c = indices[k];
                        let pos = cursor[c];
                        cursor[c] += 1;
                        out_indices[pos] = r;
                        out_values[pos] = values[k];
                    }
                }
                Matrix {
                    rows: self.cols,
                    cols: self.rows,
                    storage: Storage::Sparse {
                        indptr: out_indptr,
                        indices: out_indices,
                        values: out_values,
                    },
                }
            }
        }
    }

    /// Matrix product `self * rhs`.
    ///
    /// Accumulation runs in ascending inner-index order and accumulators
    /// start at +0.0, where adding a zero product is an exact bitwise no-op;
    /// the result therefore does not depend on which storage either operand
    /// uses. Dense right-hand sides take a vectorizable row-axpy path.
    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return config_err(format!(
                "matmul dimension mismatch: {}x{} * {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            ));
        }
        let rc = rhs.cols;
        let mut out = vec![0.0; self.rows * rc];
        match &rhs.storage {
            Storage::Dense(rd) => {
                for r in 0..self.rows {
                    let acc = &mut out[r * rc..(r + 1) * rc];
                    match &self.storage {
                        Storage::Dense(ld) => {
                            let lrow = &ld[r * self.cols..(r + 1) * self.cols];
                            for (k, &a) in lrow.iter().enumerate() {
                                if a != 0.0 {
                                    axpy(acc, a, &rd[k * rc..(k + 1) * rc]);
                                }
                            }
                        }
                        Storage::Sparse { .. } => {
                            for (k, a) in self.row_nz(r) {
                                axpy(acc, a, &rd[k * rc..(k + 1) * rc]);
                            }
                        }
                    }
                }
            }
            Storage::Sparse { .. } => {
                for r in 0..self.rows {
                    let acc = &mut out[r * rc..(r + 1) * rc];
                    for (k, a) in self.row_nz(r) {
                        for (c, b) in rhs.row_nz(k) {
                            acc[c] += a * b;
                        }
                    }
                }
            }
        }
        Matrix::from_dense(self.rows, rc, out)
    }

    /// Append columns to a dense matrix; `new_cols` are column vectors of
    /// length `rows`.
    pub fn append_cols(&mut self, new_cols: &[Vec<f64>]) {
        if new_cols.is_empty() {
            return;
        }
        let added = new_cols.len();
        for col in new_cols {
            assert_eq!(col.len(), self.rows, "column length must equal rows");
            assert!(col.iter().all(|v| v.is_finite()), "entries must be finite");
        }
        let old_cols = self.cols;
        let new_total = old_cols + added;
        let data = match &mut self.storage {
            Storage::Dense(d) => d,
            Storage::Sparse { .. } => panic!("append_cols() requires dense storage"),
        };
        data.resize(self.rows * new_total, 0.0);
        // Shift rows back-to-front so nothing is overwritten early.
        for r in (0..self.rows).rev() {
            data.copy_within(r * old_cols..(r + 1) * old_cols, r * new_total);
            for (j, col) in new_cols.iter().enumerate() {
                data[r * new_total + old_cols + j] = col[r];
            }
        }
        self.cols = new_total;
    }

    /// Euclidean norm of row `r`, skipping zero entries.
    pub fn row_norm(&self, r: usize) -> f64 {
        let mut acc = 0.0;
        for (_, v) in self.row_nz(r) {
            acc += v * v;
        }
        acc.sqrt()
    }

    /// Dot product of row `ra` of `self` with row `rb` of `other`
    /// (terms where either side is zero are skipped).
    pub fn row_dot(&self, ra: usize, other: &Matrix, rb: usize) -> f64 {
        let mut acc = 0.0;
        let mut ita = self.row_nz(ra);
        let mut itb = other.row_nz(rb);
        let (mut na, mut nb) = (ita.next(), itb.next());
        while let (Some((ca, va)), Some((cb, vb))) = (na, nb) {
            match ca.cmp(&cb) {
                std::cmp::Ordering::Less => na = ita.next(),
                std::cmp::Ordering::Greater => nb = itb.next(),
                std::cmp::Ordering::Equal => {
                    acc += va * vb;
                    na = ita.next();
                    nb = itb.next();
                }
            }
        }
        acc
    }

    /// Column sums.
    pub fn col_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for r in 0..self.rows {
            for (c, v) in self.row_nz(r) {
                out[c] += v;
            }
        }
        out
    }
}

#[inline]
fn axpy(acc: &mut [f64], a: f64, row: &[f64]) {
    for (slot, b) in acc.iter_mut().zip(row) {
        *slot += a * b;
    }
}

pub enum RowNz<'a> {
    Dense { row: &'a [f64], next: usize },
    Sparse {
        indices: &'a [usize],
        values: &'a [f64],
        next: usize,
    },
}

impl<'a> Iterator for RowNz<'a> {
    type Item = (usize, f64);

    fn next(&mut self) -> Option<(usize, f64)> {
        match self {
            RowNz::Dense { row, next } => {
                while *next < row.len() {
                    let c = *next;
                    *next += 1;
                    if row[c] != 0.0 {
                        return Some((c, row[c]));
                    }
                }
                None
            }
            RowNz::Sparse {
                indices,
                values,
                next,
            } => {
                if *next < indices.len() {
                    let k = *next;
                    *next += 1;
                    Some((indices[k], values[k]))
                } else {
                    None
                }
            }
        }
    }
}

/// Snapshots serialize as dense row-major values regardless of storage.
#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Serialize for Matrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let dense = self.to_dense();
        let data = match dense.storage {
            Storage::Dense(d) => d,
            Storage::Sparse { .. } => unreachable!(),
        };
        MatrixRepr {
            rows: self.rows,
            cols: self.cols,
            data,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = MatrixRepr::deserialize(deserializer)?;
        Matrix::from_dense(repr.rows, repr.cols, repr.data).map_err(serde::de::Error::custom)
    }
}
