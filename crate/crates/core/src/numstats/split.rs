use crate::error::{Error, Result};
use crate::matrix::{check_paired, CodeMatrix, FactorMatrix};
use crate::rng::Rng;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitIndices {
    /// Sorted row indices.
    pub train: Vec<usize>,
    /// Sorted row indices.
    pub test: Vec<usize>,
}

/// Paired factor and code rows.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplePair {
    pub z: FactorMatrix,
    pub zhat: CodeMatrix,
}

/// Seeded shuffle partition; `floor(n * train_fraction)` rows go to training.
pub fn split_indices(n: usize, train_fraction: f64, rng: &Rng) -> Result<SplitIndices> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::param("train_fraction", "must lie strictly between 0 and 1"));
    }
    let n_train = (n as f64 * train_fraction).floor() as usize;
    if n_train < 2 || n - n_train < 2 {
        return Err(Error::TooFewSamples {
            needed: 4,
            got: n,
        });
    }
    let perm = rng.clone().permutation(n);
    let mut train = perm[..n_train].to_vec();
    let mut test = perm[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices { train, test })
}

pub fn split(
    z: &FactorMatrix,
    zhat: &CodeMatrix,
    train_fraction: f64,
    rng: &Rng,
) -> Result<(SamplePair, SamplePair)> {
    check_paired(zhat, z)?;
    let idx = split_indices(z.n(), train_fraction, rng)?;
    let train = SamplePair {
        z: z.select_rows(&idx.train)?,
        zhat: zhat.select_rows(&idx.train)?,
    };
    let test = SamplePair {
        z: z.select_rows(&idx.test)?,
        zhat: zhat.select_rows(&idx.test)?,
    };
    Ok((train, test))
}
