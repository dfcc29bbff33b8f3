//! Minimal CSR matrix for the reduced-filter generators. Entries are exact
//! integers or half-integers times rates, so values stay f64 with no
//! tolerance games.

#[derive(Debug, Clone, Default)]
pub struct SparseMat {
    pub nrows: usize,
    pub ncols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl SparseMat {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        SparseMat {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    /// Build from triplets, summing duplicates and dropping exact zeros.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); nrows];
        for &(r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet out of bounds");
            rows[r].push((c as u32, v));
        }
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in &mut rows {
            row.sort_by_key(|&(c, _)| c);
            let mut i = 0;
            while i < row.len() {
                let c = row[i].0;
                let mut v = 0.0;
                while i < row.len() && row[i].0 == c {
                    v += row[i].1;
                    i += 1;
                }
                if v != 0.0 {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        SparseMat {
            nrows,
            ncols,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        self.cols[lo..hi]
            .iter()
            .zip(&self.vals[lo..hi])
            .map(|(&c, &v)| (c as usize, v))
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                out.push((r, c, v));
            }
        }
        out
    }

    /// y += alpha * A x
    pub fn apply(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for r in 0..self.nrows {
            let lo = self.row_ptr[r];
            let hi = self.row_ptr[r + 1];
            let mut acc = 0.0;
            for k in lo..hi {
                acc += self.vals[k] * x[self.cols[k] as usize];
            }
            y[r] += alpha * acc;
        }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(cc, _)| cc == c).map_or(0.0, |(_, v)| v)
    }

    /// T * M * E for the combiner (T: combined x raw, E: raw x combined).
    pub fn sandwich(t: &SparseMat, m: &SparseMat, e: &SparseMat) -> SparseMat {
        assert_eq!(t.ncols, m.nrows);
        assert_eq!(m.ncols, e.nrows);
        // column index of T: col -> [(row, val)]
        let mut t_by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); t.ncols];
        for r in 0..t.nrows {
            for (c, v) in t.row(r) {
                t_by_col[c].push((r, v));
            }
        }
        let mut triplets = Vec::new();
        for i in 0..m.nrows {
            for (j, mv) in m.row(i) {
                for &(a, tv) in &t_by_col[i] {
                    for (b, ev) in e.row(j) {
                        triplets.push((a, b, tv * mv * ev));
                    }
                }
            }
        }
        SparseMat::from_triplets(t.nrows, e.ncols, &triplets)
    }
}
