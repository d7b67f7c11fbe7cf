//! Compressed sparse row matrices.

/// Row-compressed real matrix with sorted, duplicate-free column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Sums duplicate entries. Summation follows insertion order, so equal
    /// triplet streams give bit-identical matrices.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_by_key(|&k| (triplets[k].0, triplets[k].1));
        let mut row_ptr = vec![0; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for k in order {
            let (i, j, v) = triplets[k];
            assert!(i < nrows && j < ncols, "triplet ({i}, {j}) out of bounds");
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { nrows, ncols, row_ptr, col_idx, values }
    }

    pub fn identity(n: usize) -> Self {
        let t: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_triplets(n, n, &t)
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

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn row_mut(&mut self, i: usize) -> (&[usize], &mut [f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &mut self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map(|k| vals[k]).unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (c, v) = self.row(i);
            c.iter().zip(v).map(move |(&j, &x)| (i, j, x))
        })
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let (c, v) = self.row(i);
            *yi = c.iter().zip(v).map(|(&j, &a)| a * x[j]).sum();
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |A - Aᵀ|` over all entries.
    pub fn max_asymmetry(&self) -> f64 {
        self.iter().map(|(i, j, v)| (v - self.get(j, i)).abs()).fold(0.0, f64::max)
    }

    /// Rows `i` with `|A(i, j) - A(j, i)| > tol` for some `j`.
    pub fn asymmetric_rows(&self, tol: f64) -> Vec<usize> {
        let mut rows: Vec<usize> = self
            .iter()
            .filter(|&(i, j, v)| (v - self.get(j, i)).abs() > tol)
            .flat_map(|(i, j, _)| [i, j])
            .collect();
        rows.sort_unstable();
        rows.dedup();
        rows
    }

    /// Drops explicit entries for which `keep` returns false.
    pub fn retain(&mut self, mut keep: impl FnMut(usize, usize, f64) -> bool) {
        let mut row_ptr = vec![0; self.nrows + 1];
        let mut col_idx = Vec::with_capacity(self.col_idx.len());
        let mut values = Vec::with_capacity(self.values.len());
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let (j, v) = (self.col_idx[k], self.values[k]);
                if keep(i, j, v) {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr[i + 1] = col_idx.len();
        }
        self.row_ptr = row_ptr;
        self.col_idx = col_idx;
        self.values = values;
    }

    /// Replaces row `i` by the `i`-th unit row.
    pub fn set_identity_row(&mut self, i: usize) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        let has_diag = self.col_idx[r.clone()].binary_search(&i).is_ok();
        if !has_diag {
            // Rebuild with an explicit diagonal entry.
            let mut t: Vec<_> = self.iter().collect();
            t.push((i, i, 0.0));
            *self = Self::from_triplets(self.nrows, self.ncols, &t);
        }
        let (cols, vals) = self.row_mut(i);
        for (c, v) in cols.iter().zip(vals.iter_mut()) {
            *v = if *c == i { 1.0 } else { 0.0 };
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, j, v) in self.iter() {
            d[i][j] += v;
        }
        d
    }
}
