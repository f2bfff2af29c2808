//! Sample matrices: one row per sample, one column per factor or code.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

macro_rules! sample_matrix {
    ($(#[$doc:meta])* $name:ident, $min_rows:expr, $what:expr) => {
        $(#[$doc])*
        #[derive(Clone, Debug, PartialEq)]
        pub struct $name {
            data: DMatrix<f64>,
        }

        impl $name {
            pub fn new(data: DMatrix<f64>) -> Result<Self> {
                if data.ncols() == 0 {
                    return Err(Error::Empty);
                }
                if data.nrows() < $min_rows {
                    return Err(Error::TooFewSamples {
                        needed: $min_rows,
                        got: data.nrows(),
                    });
                }
                for c in 0..data.ncols() {
                    for r in 0..data.nrows() {
                        if !data[(r, c)].is_finite() {
                            return Err(Error::NonFinite { row: r, col: c });
                        }
                    }
                }
                Ok(Self { data })
            }

            /// Build from column vectors of equal length.
            pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
                let n = columns.first().map_or(0, |c| c.len());
                if columns.iter().any(|c| c.len() != n) {
                    return Err(Error::DimensionMismatch(format!(
                        "{} columns have unequal lengths",
                        $what
                    )));
                }
                let flat: Vec<f64> = columns.iter().flatten().copied().collect();
                Self::new(DMatrix::from_vec(n, columns.len(), flat))
            }

            /// Build from row vectors of equal length.
            pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
                let w = rows.first().map_or(0, |r| r.len());
                if rows.iter().any(|r| r.len() != w) {
                    return Err(Error::DimensionMismatch(format!(
                        "{} rows have unequal lengths",
                        $what
                    )));
                }
                let flat: Vec<f64> = rows.iter().flatten().copied().collect();
                Self::new(DMatrix::from_row_slice(rows.len(), w, &flat))
            }

            pub fn n(&self) -> usize {
                self.data.nrows()
            }

            pub fn cols(&self) -> usize {
                self.data.ncols()
            }

            pub fn column(&self, j: usize) -> &[f64] {
                let n = self.n();
                &self.data.as_slice()[j * n..(j + 1) * n]
            }

            pub fn as_matrix(&self) -> &DMatrix<f64> {
                &self.data
            }

            pub fn into_matrix(self) -> DMatrix<f64> {
                self.data
            }

            pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
                Self::new(self.data.select_rows(rows))
            }

            pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
                Self::new(self.data.select_columns(cols))
            }
        }
    };
}

sample_matrix!(
    /// Ground-truth latent samples, `n x d`.
    FactorMatrix,
    2,
    "factor"
);

sample_matrix!(
    /// Representation samples, `n x m`.
    CodeMatrix,
    1,
    "code"
);

impl FactorMatrix {
    pub fn d(&self) -> usize {
        self.cols()
    }
}

impl CodeMatrix {
    pub fn m(&self) -> usize {
        self.cols()
    }
}

pub(crate) fn check_paired(zhat: &CodeMatrix, z: &FactorMatrix) -> Result<()> {
    if zhat.n() != z.n() {
        return Err(Error::DimensionMismatch(format!(
            "codes have {} rows but factors have {}",
            zhat.n(),
            z.n()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_and_short() {
        assert!(matches!(
            FactorMatrix::from_columns(&[vec![1.0, f64::NAN]]),
            Err(Error::NonFinite { row: 1, col: 0 })
        ));
        assert!(matches!(
            FactorMatrix::from_columns(&[vec![1.0]]),
            Err(Error::TooFewSamples { .. })
        ));
        assert!(matches!(FactorMatrix::from_columns(&[]), Err(Error::Empty)));
    }

    #[test]
    fn column_access_matches_layout() {
        let z = FactorMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        assert_eq!(z.n(), 3);
        assert_eq!(z.d(), 2);
        assert_eq!(z.column(0), &[1.0, 3.0, 5.0]);
        assert_eq!(z.column(1), &[2.0, 4.0, 6.0]);
        let sub = z.select_rows(&[2, 0]).unwrap();
        assert_eq!(sub.column(1), &[6.0, 2.0]);
    }
}
