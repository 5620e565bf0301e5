use alloc::vec::Vec;

/// Square matrix in compressed sparse row form. Column indices are strictly
/// increasing within a row and no explicit zeros are stored.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn identity(n: usize) -> Self {
        Self::diagonal(&alloc::vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut b = CsrBuilder::new(d.len());
        for (i, &v) in d.iter().enumerate() {
            b.push(i, v);
            b.finish_row();
        }
        b.build()
    }

    /// Dense row-major input; zeros are dropped.
    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let mut b = CsrBuilder::new(rows.len());
        for row in rows {
            assert_eq!(row.len(), rows.len(), "matrix must be square");
            for (j, &v) in row.iter().enumerate() {
                b.push(j, v);
            }
            b.finish_row();
        }
        b.build()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map(|p| vals[p]).unwrap_or(0.0)
    }

    pub fn diag(&self, i: usize) -> f64 {
        self.get(i, i)
    }

    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let (cols, vals) = self.row(i);
        cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row_dot(i, x)).collect()
    }

    /// `Ax - b`.
    pub fn residual(&self, x: &[f64], b: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row_dot(i, x) - b[i]).collect()
    }

    /// First row violating "positive diagonal, nonpositive off-diagonals".
    pub fn first_non_m_row(&self) -> Option<usize> {
        (0..self.n).find(|&i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).any(|(&j, &v)| if j == i { v <= 0.0 } else { v > 0.0 })
        })
    }
}

/// Row-by-row CSR assembly. Entries within a row may arrive in any order;
/// duplicates are summed and zeros dropped when the row is finished.
#[derive(Debug)]
pub struct CsrBuilder {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    pending: Vec<(usize, f64)>,
}

impl CsrBuilder {
    pub fn new(n: usize) -> Self {
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        Self { n, row_ptr, cols: Vec::new(), vals: Vec::new(), pending: Vec::new() }
    }

    pub fn push(&mut self, col: usize, value: f64) {
        debug_assert!(col < self.n);
        self.pending.push((col, value));
    }

    pub fn finish_row(&mut self) {
        self.pending.sort_unstable_by_key(|e| e.0);
        let mut i = 0;
        while i < self.pending.len() {
            let col = self.pending[i].0;
            let mut v = 0.0;
            while i < self.pending.len() && self.pending[i].0 == col {
                v += self.pending[i].1;
                i += 1;
            }
            if v != 0.0 {
                self.cols.push(col);
                self.vals.push(v);
            }
        }
        self.pending.clear();
        self.row_ptr.push(self.cols.len());
    }

    pub fn build(self) -> CsrMatrix {
        assert_eq!(self.row_ptr.len(), self.n + 1, "every row must be finished");
        CsrMatrix { n: self.n, row_ptr: self.row_ptr, cols: self.cols, vals: self.vals }
    }
}
