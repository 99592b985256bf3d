use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};

/// `n × m` matrix of opinions, row `i` is the opinion vector of user `i`.
///
/// Every entry lies in `[0, 1]`; constructors reject anything else.
#[derive(Debug, Clone, PartialEq)]
pub struct OpinionMatrix {
    n: usize,
    m: usize,
    values: Vec<f64>,
}

impl OpinionMatrix {
    /// Builds a matrix from row-major values.
    pub fn new(n: usize, m: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invalid("opinion matrix needs at least one user"));
        }
        if m == 0 {
            return Err(Error::Invalid("opinion matrix needs at least one dimension"));
        }
        check_dim("opinion values", n * m, values.len())?;
        if let Some(&bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::OutOfRange {
                what: "opinion entry",
                value: bad,
            });
        }
        Ok(Self { n, m, values })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let m = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * m);
        for row in rows {
            check_dim("opinion row", m, row.as_ref().len())?;
            values.extend_from_slice(row.as_ref());
        }
        Self::new(rows.len(), m, values)
    }

    /// All-zero matrix.
    pub fn zeros(n: usize, m: usize) -> Result<Self> {
        Self::new(n, m, alloc::vec![0.0; n * m])
    }

    /// Every row equal to `row`.
    pub fn repeated(n: usize, row: &[f64]) -> Result<Self> {
        let mut values = Vec::with_capacity(n * row.len());
        for _ in 0..n {
            values.extend_from_slice(row);
        }
        Self::new(n, row.len(), values)
    }

    /// Internal constructor for results of convex combinations, which stay in
    /// `[0, 1]` by construction.
    pub(crate) fn from_convex(n: usize, m: usize, values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| (0.0..=1.0).contains(v)));
        Self { n, m, values }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.m..(i + 1) * self.m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.m)
    }

    #[inline]
    pub fn get(&self, i: usize, p: usize) -> f64 {
        self.values[i * self.m + p]
    }

    /// Row-major view of the entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    /// Largest absolute entry-wise difference to `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |acc, (a, b)| f64::max(acc, libm::fabs(a - b)))
    }

    /// Largest per-coordinate spread `max_i x_i^p - min_i x_i^p` over the
    /// given users.
    pub fn spread_of(&self, users: &[usize]) -> f64 {
        let mut spread = 0.0_f64;
        for p in 0..self.m {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for &i in users {
                let v = self.get(i, p);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if hi >= lo {
                spread = spread.max(hi - lo);
            }
        }
        spread
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rejects_entries_outside_unit_interval() {
        assert!(OpinionMatrix::new(1, 2, vec![0.5, 1.5]).is_err());
        assert!(OpinionMatrix::new(1, 2, vec![-0.0, 1.0]).is_ok());
        assert!(OpinionMatrix::new(1, 2, vec![f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn rejects_empty_shapes() {
        assert!(OpinionMatrix::new(0, 2, vec![]).is_err());
        assert!(OpinionMatrix::new(2, 0, vec![]).is_err());
        assert!(OpinionMatrix::new(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn rows_and_spread() {
        let x = OpinionMatrix::from_rows(&[[0.0, 0.5], [1.0, 0.25]]).unwrap();
        assert_eq!(x.row(1), &[1.0, 0.25]);
        assert_eq!(x.rows().count(), 2);
        assert_eq!(x.spread_of(&[0, 1]), 1.0);
        assert_eq!(x.spread_of(&[0]), 0.0);
    }
}
