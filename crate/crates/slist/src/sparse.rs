//! Minimal compressed sparse row storage for the session-item design matrices.
//!
//! The training pipeline only ever iterates rows (Gram accumulation,
//! transpose-products, reconstruction checks), so a plain CSR triple of
//! `(indptr, indices, values)` is all that is needed. Dense `n x n` objects
//! appear only inside the solver.

/// Row-major sparse matrix with `f64` values.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a CSR matrix from per-row `(column, value)` pairs.
    ///
    /// Entries within a row are stored in the order given; callers are
    /// expected to pass each column at most once per row.
    pub fn from_rows(n_cols: usize, rows: &[Vec<(u32, f64)>]) -> Self {
        let n_rows = rows.len();
        let nnz: usize = rows.iter().map(Vec::len).sum();
        let mut indptr = Vec::with_capacity(n_rows + 1);
        let mut indices = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        indptr.push(0);
        for row in rows {
            for &(col, val) in row {
                debug_assert!((col as usize) < n_cols);
                indices.push(col);
                values.push(val);
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            n_rows,
            n_cols,
            indptr,
            indices,
            values,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[u32], &[f64]) {
        let lo = self.indptr[r];
        let hi = self.indptr[r + 1];
        (&self.indices[lo..hi], &self.values[lo..hi])
    }

    /// Iterator over `(row, &cols, &vals)` triples.
    pub fn rows(&self) -> impl Iterator<Item = (usize, &[u32], &[f64])> {
        (0..self.n_rows).map(move |r| {
            let (c, v) = self.row(r);
            (r, c, v)
        })
    }

    /// Materializes the matrix densely; intended for tests and debug dumps.
    pub fn to_dense(&self) -> ndarray::Array2<f64> {
        let mut out = ndarray::Array2::zeros((self.n_rows, self.n_cols));
        for (r, cols, vals) in self.rows() {
            for (&c, &v) in cols.iter().zip(vals) {
                out[[r, c as usize]] = v;
            }
        }
        out
    }

    /// Writes the triplets as `row\tcol\tvalue` lines for offline comparison.
    pub fn dump_triplets<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        for (r, cols, vals) in self.rows() {
            for (&c, &v) in cols.iter().zip(vals) {
                writeln!(w, "{r}\t{c}\t{v}")?;
            }
        }
        Ok(())
    }
}
