use crate::error::{Error, Result};
use crate::features::SparseVector;

/// Row-major sparse rows plus a column-major copy for split search.
#[derive(Debug, Clone)]
pub struct FeatureMatrix<'a> {
    rows: &'a [SparseVector],
    dims: usize,
    /// Per column: `(row, value)` sorted by row.
    cols: Vec<Vec<(u32, f64)>>,
}

impl<'a> FeatureMatrix<'a> {
    pub fn new(rows: &'a [SparseVector]) -> Result<Self> {
        let dims = rows.first().map(SparseVector::dims).unwrap_or(0);
        let mut cols = vec![Vec::new(); dims];
        for (r, v) in rows.iter().enumerate() {
            if v.dims() != dims {
                return Err(Error::DimMismatch { expected: dims, actual: v.dims() });
            }
            for (c, w) in v.iter() {
                cols[c].push((r as u32, w));
            }
        }
        Ok(FeatureMatrix { rows, dims, cols })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn row(&self, r: usize) -> &SparseVector {
        &self.rows[r]
    }

    pub fn column(&self, c: usize) -> &[(u32, f64)] {
        &self.cols[c]
    }
}
