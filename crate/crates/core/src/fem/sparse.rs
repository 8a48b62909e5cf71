use rayon::prelude::*;

/// Rows above which matrix-vector products run on the rayon pool. Each row
/// is still summed sequentially, so results do not depend on scheduling.
const PAR_ROWS: usize = 16_384;

/// Accumulates `(row, col, value)` entries; duplicates are summed when the
/// matrix is built.
#[derive(Debug, Clone, Default)]
pub struct TripletBuilder {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        TripletBuilder { n, entries: Vec::new() }
    }

    pub fn with_capacity(n: usize, cap: usize) -> Self {
        TripletBuilder {
            n,
            entries: Vec::with_capacity(cap),
        }
    }

    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.n && col < self.n);
        self.entries.push((row, col, value));
    }

    /// Sorts by position (stable, so equal positions keep insertion order)
    /// and sums duplicates left to right.
    pub fn build(mut self) -> CsrMatrix {
        self.entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut cols = Vec::with_capacity(self.entries.len());
        let mut vals: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..self.n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            n: self.n,
            row_ptr,
            cols,
            vals,
        }
    }
}

/// Square sparse matrix in compressed-row form with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(n: usize) -> Self {
        TripletBuilder::new(n).build()
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut b = TripletBuilder::with_capacity(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            b.add(i, i, v);
        }
        b.build()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for k in self.row_ptr[i]..self.row_ptr[i + 1] {
            s += self.vals[k] * x[self.cols[k]];
        }
        s
    }

    /// `y = A x`.
    pub fn mul_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        if self.n >= PAR_ROWS {
            y.par_iter_mut().enumerate().for_each(|(i, yi)| *yi = self.row_dot(i, x));
        } else {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = self.row_dot(i, x);
            }
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_into(x, &mut y);
        y
    }

    /// `x^T A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.mul(x))
    }

    /// `A + s B`.
    pub fn add_scaled(&self, s: f64, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.n, other.n);
        let mut b = TripletBuilder::with_capacity(self.n, self.nnz() + other.nnz());
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                b.add(i, j, v);
            }
            for (j, v) in other.row(i) {
                b.add(i, j, s * v);
            }
        }
        b.build()
    }

    pub fn scaled(&self, s: f64) -> CsrMatrix {
        let mut m = self.clone();
        m.vals.iter_mut().for_each(|v| *v *= s);
        m
    }

    /// Largest `|a_ij - a_ji|` relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    /// Principal submatrix on `keep` (which must be sorted ascending), with
    /// rows and columns renumbered in that order.
    pub fn submatrix(&self, keep: &[usize]) -> CsrMatrix {
        let mut map = vec![usize::MAX; self.n];
        for (k, &i) in keep.iter().enumerate() {
            map[i] = k;
        }
        let mut b = TripletBuilder::with_capacity(keep.len(), self.nnz());
        for (k, &i) in keep.iter().enumerate() {
            for (j, v) in self.row(i) {
                if map[j] != usize::MAX {
                    b.add(k, map[j], v);
                }
            }
        }
        b.build()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
