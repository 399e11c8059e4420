//! Symmetric positive-definite band matrices and their Cholesky factorisation.

// Index loops mirror the textbook recurrences.
#![allow(clippy::needless_range_loop)]

/// Symmetric `n x n` matrix with `A[i][j] = 0` whenever `|i - j| > bandwidth`.
/// Only the lower band is stored, row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct SymBandMatrix {
    n: usize,
    bandwidth: usize,
    // data[i * (bandwidth + 1) + d] = A[i][i - d]
    data: Vec<f64>,
}

/// Returned when a pivot is not strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NotPositiveDefinite {
    pub row: usize,
    pub pivot: f64,
}

impl SymBandMatrix {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        Self {
            n,
            bandwidth,
            data: vec![0.0; n * (bandwidth + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let d = hi - lo;
        (hi < self.n && d <= self.bandwidth).then(|| hi * (self.bandwidth + 1) + d)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    /// Adds `v` to `A[i][j]` (and thereby `A[j][i]`).
    ///
    /// # Panics
    /// If `(i, j)` lies outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self
            .slot(i, j)
            .unwrap_or_else(|| panic!("({i}, {j}) outside band of width {}", self.bandwidth));
        self.data[s] += v;
    }

    pub fn diagonal(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.data[i * (self.bandwidth + 1)])
    }

    pub fn add_to_diagonal(&mut self, v: f64) {
        for i in 0..self.n {
            self.data[i * (self.bandwidth + 1)] += v;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bandwidth);
            let hi = (i + self.bandwidth).min(self.n - 1);
            y[i] = (lo..=hi).map(|j| self.get(i, j) * x[j]).sum();
        }
        y
    }

    /// Band Cholesky `A = L L^T`; `L` keeps the bandwidth of `A`.
    pub fn cholesky(&self) -> Result<BandCholesky, NotPositiveDefinite> {
        let w = self.bandwidth;
        let mut l = self.data.clone();
        let at = |i: usize, d: usize| i * (w + 1) + d;
        for i in 0..self.n {
            let lo = i.saturating_sub(w);
            for j in lo..=i {
                // L[i][j] = (A[i][j] - sum_k L[i][k] L[j][k]) / L[j][j], k in band of both rows
                let k_lo = lo.max(j.saturating_sub(w));
                let mut s = l[at(i, i - j)];
                for k in k_lo..j {
                    s -= l[at(i, i - k)] * l[at(j, j - k)];
                }
                if i == j {
                    if !s.is_finite() || s <= 0.0 {
                        return Err(NotPositiveDefinite { row: i, pivot: s });
                    }
                    l[at(i, 0)] = s.sqrt();
                } else {
                    l[at(i, i - j)] = s / l[at(j, 0)];
                }
            }
        }
        Ok(BandCholesky {
            n: self.n,
            bandwidth: w,
            l,
        })
    }
}

/// Lower-triangular band factor produced by [`SymBandMatrix::cholesky`].
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bandwidth: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.n);
        let w = self.bandwidth;
        let at = |i: usize, d: usize| i * (w + 1) + d;
        let mut y = rhs.to_vec();
        for i in 0..self.n {
            let lo = i.saturating_sub(w);
            let mut s = y[i];
            for k in lo..i {
                s -= self.l[at(i, i - k)] * y[k];
            }
            y[i] = s / self.l[at(i, 0)];
        }
        for i in (0..self.n).rev() {
            let hi = (i + w).min(self.n - 1);
            let mut s = y[i];
            for k in i + 1..=hi {
                s -= self.l[at(k, k - i)] * y[k];
            }
            y[i] = s / self.l[at(i, 0)];
        }
        y
    }
}
