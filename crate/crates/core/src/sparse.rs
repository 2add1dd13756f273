//! Minimal CSR storage for the assembled symmetric forms. Assembly happens in
//! deterministic triplet order; duplicates are merged in a fixed sort, so the
//! result is reproducible regardless of how the element loop is scheduled.

use ndarray::Array2;

/// Symmetric sparse matrix in CSR form (full pattern stored).
#[derive(Debug, Clone)]
pub struct SymCsr {
    pub dim: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl SymCsr {
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        SymCsr {
            dim,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for r in 0..self.dim {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            out[r] = acc;
        }
    }

    pub fn quadratic(&self, x: &[f64]) -> f64 {
        self.bilinear(x, x)
    }

    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut acc = 0.0;
        for r in 0..self.dim {
            let mut row = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                row += self.values[k] * y[self.col_idx[k]];
            }
            acc += x[r] * row;
        }
        acc
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.dim, self.dim));
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[[r, self.col_idx[k]]] = self.values[k];
            }
        }
        m
    }

    /// self + scale * other (patterns may differ).
    pub fn add_scaled(&self, other: &SymCsr, scale: f64) -> SymCsr {
        let mut triplets = Vec::with_capacity(self.values.len() + other.values.len());
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                triplets.push((r, self.col_idx[k], self.values[k]));
            }
            for k in other.row_ptr[r]..other.row_ptr[r + 1] {
                triplets.push((r, other.col_idx[k], scale * other.values[k]));
            }
        }
        SymCsr::from_triplets(self.dim, triplets)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Largest |M - M^T| entry relative to the largest |M| entry.
    pub fn asymmetry(&self) -> f64 {
        let d = self.to_dense();
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                worst = worst.max((d[[i, j]] - d[[j, i]]).abs());
            }
        }
        worst / self.max_abs().max(1e-300)
    }
}
