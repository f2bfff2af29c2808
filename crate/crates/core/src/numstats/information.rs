use crate::error::{Error, Result};

/// Shannon entropy in nats with `0 ln 0 = 0`.
pub fn discrete_entropy(p: &[f64]) -> Result<f64> {
    if let Some(v) = p.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::param("p", format!("entry {v} is negative or not a number")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::param("p", format!("sums to {total}, not 1")));
    }
    Ok(p.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.ln()).sum())
}

/// Equal-mass bin index per sample and the number of non-empty bins.
///
/// Edges sit at the empirical quantiles `t/bins`; tied values always share a
/// bin, so heavily tied data gets fewer effective bins.
pub fn quantile_bins(x: &[f64], bins: usize) -> (Vec<usize>, usize) {
    let n = x.len();
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut edges: Vec<f64> = (1..bins).map(|t| sorted[(t * n / bins).min(n - 1)]).collect();
    edges.dedup();
    // An edge equal to the minimum would leave its lower bin empty.
    edges.retain(|&e| e > sorted[0]);
    let codes: Vec<usize> = x.iter().map(|v| edges.partition_point(|&e| e <= *v)).collect();
    (codes, edges.len() + 1)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MiEstimate {
    pub value: f64,
    /// One of the inputs was constant; value is 0.
    pub constant: bool,
}

pub(crate) fn mi_from_codes(a: &[usize], ka: usize, b: &[usize], kb: usize) -> f64 {
    let n = a.len() as f64;
    let mut joint = vec![0usize; ka * kb];
    let mut pa = vec![0usize; ka];
    let mut pb = vec![0usize; kb];
    for (&i, &j) in a.iter().zip(b) {
        joint[i * kb + j] += 1;
        pa[i] += 1;
        pb[j] += 1;
    }
    let mut mi = 0.0;
    for i in 0..ka {
        for j in 0..kb {
            let c = joint[i * kb + j];
            if c > 0 {
                let pxy = c as f64 / n;
                mi += pxy * (pxy * n * n / (pa[i] as f64 * pb[j] as f64)).ln();
            }
        }
    }
    mi.max(0.0)
}

pub(crate) fn entropy_from_codes(a: &[usize], ka: usize) -> f64 {
    let n = a.len() as f64;
    let mut counts = vec![0usize; ka];
    for &i in a {
        counts[i] += 1;
    }
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Plug-in mutual information (nats) from the joint quantile histogram.
pub fn histogram_mi(x: &[f64], y: &[f64], bins: usize) -> Result<MiEstimate> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "histogram_mi inputs have lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    if bins < 2 {
        return Err(Error::param("bins", "must be at least 2"));
    }
    if x.is_empty() {
        return Err(Error::Empty);
    }
    let (a, ka) = quantile_bins(x, bins);
    let (b, kb) = quantile_bins(y, bins);
    if ka == 1 || kb == 1 {
        return Ok(MiEstimate {
            value: 0.0,
            constant: true,
        });
    }
    Ok(MiEstimate {
        value: mi_from_codes(&a, ka, &b, kb),
        constant: false,
    })
}

/// Entropy (nats) of the quantile-binned variable.
pub fn binned_entropy(x: &[f64], bins: usize) -> f64 {
    let (a, ka) = quantile_bins(x, bins);
    entropy_from_codes(&a, ka)
}
