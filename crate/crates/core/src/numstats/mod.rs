//! Shared numerics: dependence kernels, ranking, optimal assignment,
//! entropy and histogram mutual information, orthogonal draws and splits.

mod assignment;
mod correlation;
mod information;
mod orthogonal;
mod rdc;
mod split;

pub use assignment::{hungarian_max, Assignment};
pub use correlation::{
    dependence_matrix, fractional_ranks, pearson, pearson_matrix, spearman_matrix,
    CorrelationMatrix, DependenceKind,
};
pub use information::{binned_entropy, discrete_entropy, histogram_mi, quantile_bins, MiEstimate};
pub(crate) use information::{entropy_from_codes, mi_from_codes};
pub use orthogonal::random_orthogonal;
pub use rdc::{rdc, rdc_matrix, RdcSettings, RdcValue};
pub use split::{split, split_indices, SamplePair, SplitIndices};

pub(crate) fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than 2 values.
pub(crate) fn sample_sd(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    let ss: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (x.len() - 1) as f64).sqrt()
}

pub(crate) fn is_constant(x: &[f64]) -> bool {
    x.iter().all(|v| *v == x[0])
}
