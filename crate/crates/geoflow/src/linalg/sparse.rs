//! Compressed sparse row matrices and a triplet builder.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// A sparse matrix in compressed row form with sorted, unique column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

/// Accumulates `(row, col, value)` entries; duplicates are summed on build.
#[derive(Debug, Clone)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    /// Creates an empty builder for an `nrows × ncols` matrix.
    pub fn new(nrows: usize, ncols: usize) -> Self {
        TripletBuilder {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    /// Creates an empty builder with room for `cap` entries.
    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        TripletBuilder {
            nrows,
            ncols,
            entries: Vec::with_capacity(cap),
        }
    }

    /// Adds `value` at `(row, col)`.
    #[inline]
    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.entries.push((row, col, value));
    }

    /// Adds `scale · m` with its top-left corner at `(row0, col0)`.
    pub fn add_matrix(&mut self, row0: usize, col0: usize, m: &CsrMatrix, scale: f64) {
        for r in 0..m.nrows {
            for p in m.indptr[r]..m.indptr[r + 1] {
                self.push(row0 + r, col0 + m.indices[p], scale * m.values[p]);
            }
        }
    }

    /// Adds `scale · mᵀ` with its top-left corner at `(row0, col0)`.
    pub fn add_transpose(&mut self, row0: usize, col0: usize, m: &CsrMatrix, scale: f64) {
        for r in 0..m.nrows {
            for p in m.indptr[r]..m.indptr[r + 1] {
                self.push(row0 + m.indices[p], col0 + r, scale * m.values[p]);
            }
        }
    }

    /// Number of accumulated entries (before merging duplicates).
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Whether no entries have been added.
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Builds the matrix, summing duplicates. Explicit zeros are kept so that
    /// the sparsity pattern depends only on the pushed positions.
    pub fn build(self) -> CsrMatrix {
        let TripletBuilder {
            nrows,
            ncols,
            mut entries,
        } = self;
        let mut counts = vec![0usize; nrows + 1];
        for &(r, _, _) in &entries {
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut order = vec![(0usize, 0.0f64); entries.len()];
        let mut next = counts.clone();
        for &(r, c, v) in &entries {
            order[next[r]] = (c, v);
            next[r] += 1;
        }
        entries.clear();
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::with_capacity(order.len());
        let mut values = Vec::with_capacity(order.len());
        indptr.push(0);
        for r in 0..nrows {
            let row = &mut order[counts[r]..counts[r + 1]];
            row.sort_by_key(|e| e.0);
            let mut last = usize::MAX;
            for &(c, v) in row.iter() {
                if c == last {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(c);
                    values.push(v);
                    last = c;
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }
}

impl CsrMatrix {
    /// Builds from raw arrays, validating the invariants.
    pub fn from_raw(
        nrows: usize,
        ncols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let invalid = |m: &str| Error::InvalidParameter(format!("invalid CSR data: {m}"));
        if indptr.len() != nrows + 1 || indptr[0] != 0 || *indptr.last().unwrap() != indices.len() {
            return Err(invalid("row pointer array is inconsistent"));
        }
        if indices.len() != values.len() {
            return Err(invalid("index and value arrays differ in length"));
        }
        for r in 0..nrows {
            if indptr[r] > indptr[r + 1] {
                return Err(invalid("row pointers decrease"));
            }
            let row = &indices[indptr[r]..indptr[r + 1]];
            if row.windows(2).any(|w| w[0] >= w[1]) || row.iter().any(|&c| c >= ncols) {
                return Err(invalid(
                    "column indices unsorted, duplicated or out of range",
                ));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("non-finite value"));
        }
        Ok(CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        })
    }

    /// Builds from a triplet list.
    pub fn from_triplets(nrows: usize, ncols: usize, entries: &[(usize, usize, f64)]) -> Self {
        let mut b = TripletBuilder::with_capacity(nrows, ncols, entries.len());
        for &(r, c, v) in entries {
            b.push(r, c, v);
        }
        b.build()
    }

    /// The `n × n` identity.
    pub fn identity(n: usize) -> Self {
        CsrMatrix::diagonal_matrix(&vec![1.0; n])
    }

    /// Diagonal matrix with the given entries.
    pub fn diagonal_matrix(d: &[f64]) -> Self {
        let n = d.len();
        CsrMatrix {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: d.to_vec(),
        }
    }

    /// Builds from a dense row-major array.
    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut b = TripletBuilder::new(nrows, ncols);
        for (i, r) in rows.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                if v != 0.0 {
                    b.push(i, j, v);
                }
            }
        }
        b.build()
    }

    /// Number of rows.
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    /// Number of columns.
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// Number of stored entries.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Row pointer array.
    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    /// Column index array.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Value array.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[r], self.indptr[r + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    /// Entry `(r, c)`, zero if not stored.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (idx, val) = self.row(r);
        match idx.binary_search(&c) {
            Ok(p) => val[p],
            Err(_) => 0.0,
        }
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// Matrix-vector product into a preallocated output.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(
            x.len(),
            self.ncols,
            "vector length must equal the column count"
        );
        for (r, yr) in y.iter_mut().enumerate().take(self.nrows) {
            let mut s = 0.0;
            for p in self.indptr[r]..self.indptr[r + 1] {
                s += self.values[p] * x[self.indices[p]];
            }
            *yr = s;
        }
    }

    /// Transposed matrix-vector product `Aᵀ x`.
    pub fn mul_transpose_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(
            x.len(),
            self.nrows,
            "vector length must equal the row count"
        );
        let mut y = vec![0.0; self.ncols];
        for (r, &xr) in x.iter().enumerate() {
            for p in self.indptr[r]..self.indptr[r + 1] {
                y[self.indices[p]] += self.values[p] * xr;
            }
        }
        y
    }

    /// The transpose.
    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.indices {
            counts[c + 1] += 1;
        }
        for i in 0..self.ncols {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut indices = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for r in 0..self.nrows {
            for p in self.indptr[r]..self.indptr[r + 1] {
                let c = self.indices[p];
                indices[next[c]] = r;
                values[next[c]] = self.values[p];
                next[c] += 1;
            }
        }
        CsrMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            indptr: counts,
            indices,
            values,
        }
    }

    /// Sparse product `self · other`.
    pub fn matmul(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.ncols, other.nrows, "inner dimensions must agree");
        let mut indptr = Vec::with_capacity(self.nrows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        let mut acc = vec![0.0; other.ncols];
        let mut mark = vec![usize::MAX; other.ncols];
        let mut cols = Vec::new();
        indptr.push(0);
        for r in 0..self.nrows {
            cols.clear();
            for p in self.indptr[r]..self.indptr[r + 1] {
                let k = self.indices[p];
                let a = self.values[p];
                for q in other.indptr[k]..other.indptr[k + 1] {
                    let c = other.indices[q];
                    if mark[c] != r {
                        mark[c] = r;
                        acc[c] = 0.0;
                        cols.push(c);
                    }
                    acc[c] += a * other.values[q];
                }
            }
            cols.sort_unstable();
            for &c in &cols {
                indices.push(c);
                values.push(acc[c]);
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: other.ncols,
            indptr,
            indices,
            values,
        }
    }

    /// `alpha · self + beta · other`.
    pub fn add(&self, alpha: f64, other: &CsrMatrix, beta: f64) -> CsrMatrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut b = TripletBuilder::with_capacity(self.nrows, self.ncols, self.nnz() + other.nnz());
        b.add_matrix(0, 0, self, alpha);
        b.add_matrix(0, 0, other, beta);
        b.build()
    }

    /// Multiplies every entry by `s`.
    pub fn scaled(&self, s: f64) -> CsrMatrix {
        let mut m = self.clone();
        for v in &mut m.values {
            *v *= s;
        }
        m
    }

    /// Scales row `r` by `d[r]`.
    pub fn scale_rows(&self, d: &[f64]) -> CsrMatrix {
        let mut m = self.clone();
        for r in 0..m.nrows {
            for p in m.indptr[r]..m.indptr[r + 1] {
                m.values[p] *= d[r];
            }
        }
        m
    }

    /// `D A D` for the diagonal matrix `D = diag(d)`.
    pub fn scale_symmetric(&self, d: &[f64]) -> CsrMatrix {
        let mut m = self.clone();
        for r in 0..m.nrows {
            for p in m.indptr[r]..m.indptr[r + 1] {
                m.values[p] *= d[r] * d[m.indices[p]];
            }
        }
        m
    }

    /// Main diagonal.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols))
            .map(|i| self.get(i, i))
            .collect()
    }

    /// Whether every stored off-diagonal entry is zero.
    pub fn is_diagonal(&self) -> bool {
        (0..self.nrows).all(|r| {
            let (idx, val) = self.row(r);
            idx.iter().zip(val).all(|(&c, &v)| c == r || v == 0.0)
        })
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Infinity norm (maximum absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|r| self.row(r).1.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Whether `|a_ij − a_ji| ≤ tol · max|a|` for all entries.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.nrows != self.ncols {
            return false;
        }
        let t = self.transpose();
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        let diff = self.add(1.0, &t, -1.0);
        diff.max_abs() <= tol * scale
    }

    /// Dense row-major copy.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (r, row) in d.iter_mut().enumerate() {
            for p in self.indptr[r]..self.indptr[r + 1] {
                row[self.indices[p]] += self.values[p];
            }
        }
        d
    }

    /// Coordinate-format text dump, one `row col value` line per stored entry.
    pub fn to_coordinate_text(&self) -> String {
        let mut s = String::new();
        for r in 0..self.nrows {
            for p in self.indptr[r]..self.indptr[r + 1] {
                let _ = writeln!(s, "{} {} {:.16e}", r, self.indices[p], self.values[p]);
            }
        }
        s
    }

    /// Order-independent fingerprint of the sparsity pattern.
    pub fn pattern_fingerprint(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.nrows.hash(&mut h);
        self.ncols.hash(&mut h);
        self.indptr.hash(&mut h);
        self.indices.hash(&mut h);
        h.finish()
    }
}
