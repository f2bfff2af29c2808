//! Constructed encoders applied directly to factor samples, plus null
//! baselines. Every [`EncoderSpec`] stores concrete parameters, so
//! re-applying it to the same factors reproduces the codes bit for bit.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dgp::DgpSample;
use crate::error::{Error, Result};
use crate::matrix::{CodeMatrix, FactorMatrix};
use crate::numstats::random_orthogonal;
use crate::rng::Rng;

/// Bounds on the magnitude of randomly drawn scales.
pub const SCALE_RANGE: (f64, f64) = (0.3, 3.0);

/// Upper limit on the code count of the multi-code encoder.
pub const DEFAULT_MAX_CODES: usize = 10_000;

/// Gap kept between the phase interval and ±π in the circular encoding.
pub const PHASE_MARGIN: f64 = 0.01;

/// Strictly increasing elementwise nonlinearities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotone {
    Tanh,
    Cube,
    Cbrt,
    Sinh,
}

impl Monotone {
    pub const LIBRARY: [Monotone; 4] = [Monotone::Tanh, Monotone::Cube, Monotone::Cbrt, Monotone::Sinh];

    pub fn apply(self, x: f64) -> f64 {
        match self {
            Monotone::Tanh => x.tanh(),
            Monotone::Cube => x * x * x,
            Monotone::Cbrt => x.cbrt(),
            Monotone::Sinh => x.sinh(),
        }
    }

    /// Deterministic cycle through the library.
    pub fn cycled(j: usize) -> Monotone {
        Self::LIBRARY[j % Self::LIBRARY.len()]
    }
}

/// Cross-factor code in the redundant overcomplete encoder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "fn", rename_all = "snake_case")]
pub enum CrossCode {
    Product { a: usize, b: usize },
    SumSquares { a: usize, b: usize },
    SineForm { weights: Vec<f64> },
}

impl CrossCode {
    fn evaluate(&self, row: &[f64]) -> f64 {
        match self {
            CrossCode::Product { a, b } => row[*a] * row[*b],
            CrossCode::SumSquares { a, b } => row[*a] * row[*a] + row[*b] * row[*b],
            CrossCode::SineForm { weights } => weights.iter().zip(row).map(|(w, x)| w * x).sum::<f64>().sin(),
        }
    }

    fn sources(&self) -> Vec<usize> {
        match self {
            CrossCode::Product { a, b } | CrossCode::SumSquares { a, b } => {
                let mut s = vec![*a, *b];
                s.sort_unstable();
                s.dedup();
                s
            }
            CrossCode::SineForm { weights } => (0..weights.len()).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullDistribution {
    #[default]
    Uniform,
    Gaussian,
}

/// Per-factor code layout of the multi-code encoder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum MultiCodeScheme {
    /// Two codes per factor: sin and cos of the factor mapped into a phase
    /// interval via the sample's `[low, high]`.
    Circular { low: Vec<f64>, high: Vec<f64> },
    /// `k` codes per factor; code `t` carries the value when it falls into
    /// interval `t` of the stored edges, else 0.
    Interval { edges: Vec<Vec<f64>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum EncoderKind {
    /// `c_j = s_j z_{perm[j]}`.
    E1 { perm: Vec<usize>, scales: Vec<f64> },
    /// `c_j = (1 - alpha) s_j z_{perm[j]} + alpha h_j(z_{perm[j]})`.
    E2 {
        perm: Vec<usize>,
        scales: Vec<f64>,
        alpha: f64,
        nonlinearities: Vec<Monotone>,
    },
    /// Square affine mixing `c = A z + b`.
    E3 {
        kappa: f64,
        mixing: Vec<Vec<f64>>,
        offset: Vec<f64>,
    },
    /// Rescaled subset of factors, in `retained` order.
    E4 { retained: Vec<usize>, scales: Vec<f64> },
    /// Duplicated scaled copies; `sources` must hit every factor.
    E5 { sources: Vec<usize>, scales: Vec<f64> },
    /// Monotone per-factor block followed by cross-factor codes.
    E6 {
        perm: Vec<usize>,
        monotone: Vec<Monotone>,
        cross: Vec<CrossCode>,
    },
    /// Tall full-column-rank affine mixing.
    E7 {
        kappa: f64,
        mixing: Vec<Vec<f64>>,
        offset: Vec<f64>,
    },
    /// `k` codes per factor, block `i` encodes factor `perm[i]`.
    E8 {
        k: usize,
        perm: Vec<usize>,
        scheme: MultiCodeScheme,
    },
    /// Arbitrary linear map with explicit matrix (rows = codes).
    Linear { mixing: Vec<Vec<f64>>, offset: Vec<f64> },
    /// Codes supplied from outside; cannot be re-applied.
    External,
    /// Codes independent of the factors, regenerated from the stored stream.
    Null {
        m: usize,
        distribution: NullDistribution,
        seed: u64,
        stream: u64,
    },
}

/// Equivalence class under which the encoder counts as identifying.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Equivalence {
    Perm,
    Nl,
    Aff,
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncoderSpec {
    pub kind: EncoderKind,
    pub d: usize,
    pub m: usize,
}

impl EncoderSpec {
    pub fn short_name(&self) -> &'static str {
        match &self.kind {
            EncoderKind::E1 { .. } => "e1",
            EncoderKind::E2 { .. } => "e2",
            EncoderKind::E3 { .. } => "e3",
            EncoderKind::E4 { .. } => "e4",
            EncoderKind::E5 { .. } => "e5",
            EncoderKind::E6 { .. } => "e6",
            EncoderKind::E7 { .. } => "e7",
            EncoderKind::E8 { .. } => "e8",
            EncoderKind::Linear { .. } => "linear",
            EncoderKind::External => "external",
            EncoderKind::Null {
                distribution: NullDistribution::Uniform,
                ..
            } => "e9",
            EncoderKind::Null {
                distribution: NullDistribution::Gaussian,
                ..
            } => "e10",
        }
    }

    pub fn equivalence(&self) -> Equivalence {
        match &self.kind {
            EncoderKind::E1 { .. } | EncoderKind::E4 { .. } | EncoderKind::E5 { .. } => Equivalence::Perm,
            EncoderKind::E2 { .. } | EncoderKind::E6 { .. } | EncoderKind::E8 { .. } => Equivalence::Nl,
            EncoderKind::E3 { .. } | EncoderKind::E7 { .. } | EncoderKind::Linear { .. } => Equivalence::Aff,
            EncoderKind::Null { .. } | EncoderKind::External => Equivalence::None,
        }
    }

    /// Source factors of every code.
    pub fn alignment(&self) -> Vec<Vec<usize>> {
        let all: Vec<usize> = (0..self.d).collect();
        match &self.kind {
            EncoderKind::E1 { perm, .. } | EncoderKind::E2 { perm, .. } => perm.iter().map(|&p| vec![p]).collect(),
            EncoderKind::E4 { retained: idx, .. } | EncoderKind::E5 { sources: idx, .. } => {
                idx.iter().map(|&p| vec![p]).collect()
            }
            EncoderKind::E3 { mixing, .. } | EncoderKind::E7 { mixing, .. } => vec![all; mixing.len()],
            EncoderKind::Linear { mixing, .. } => mixing
                .iter()
                .map(|row| (0..self.d).filter(|&j| row[j] != 0.0).collect())
                .collect(),
            EncoderKind::E6 { perm, cross, .. } => perm
                .iter()
                .map(|&p| vec![p])
                .chain(cross.iter().map(CrossCode::sources))
                .collect(),
            EncoderKind::E8 { k, perm, .. } => perm
                .iter()
                .flat_map(|&p| std::iter::repeat_n(vec![p], *k))
                .collect(),
            EncoderKind::Null { .. } | EncoderKind::External => vec![Vec::new(); self.m],
        }
    }

    /// Re-apply the encoder to factor samples.
    pub fn apply(&self, z: &FactorMatrix) -> Result<CodeMatrix> {
        if z.d() != self.d {
            return Err(Error::DimensionMismatch(format!(
                "encoder expects {} factors, got {}",
                self.d,
                z.d()
            )));
        }
        let n = z.n();
        let zm = z.as_matrix();
        let out = match &self.kind {
            EncoderKind::E1 { perm, scales }
            | EncoderKind::E4 { retained: perm, scales }
            | EncoderKind::E5 { sources: perm, scales } => {
                DMatrix::from_fn(n, perm.len(), |r, j| scales[j] * zm[(r, perm[j])])
            }
            EncoderKind::E2 {
                perm,
                scales,
                alpha,
                nonlinearities,
            } => DMatrix::from_fn(n, perm.len(), |r, j| {
                let x = zm[(r, perm[j])];
                (1.0 - alpha) * scales[j] * x + alpha * nonlinearities[j].apply(x)
            }),
            EncoderKind::E3 { mixing, offset, .. }
            | EncoderKind::E7 { mixing, offset, .. }
            | EncoderKind::Linear { mixing, offset } => affine(zm, mixing, offset),
            EncoderKind::E6 { perm, monotone, cross } => {
                let d = perm.len();
                let mut out = DMatrix::zeros(n, d + cross.len());
                let mut row = vec![0.0; self.d];
                for r in 0..n {
                    for (c, v) in row.iter_mut().enumerate() {
                        *v = zm[(r, c)];
                    }
                    for j in 0..d {
                        out[(r, j)] = monotone[j].apply(row[perm[j]]);
                    }
                    for (t, code) in cross.iter().enumerate() {
                        out[(r, d + t)] = code.evaluate(&row);
                    }
                }
                out
            }
            EncoderKind::E8 { k, perm, scheme } => multi_code(zm, *k, perm, scheme),
            EncoderKind::External => {
                return Err(Error::param("spec", "external codes have no generating encoder"));
            }
            EncoderKind::Null {
                m,
                distribution,
                seed,
                stream,
            } => {
                let mut rng = Rng::new(*seed, *stream);
                let mut out = DMatrix::zeros(n, *m);
                for c in 0..*m {
                    for r in 0..n {
                        out[(r, c)] = match distribution {
                            NullDistribution::Uniform => rng.uniform(),
                            NullDistribution::Gaussian => rng.normal(),
                        };
                    }
                }
                out
            }
        };
        CodeMatrix::new(out)
    }
}

fn affine(z: &DMatrix<f64>, mixing: &[Vec<f64>], offset: &[f64]) -> DMatrix<f64> {
    let d = z.ncols();
    DMatrix::from_fn(z.nrows(), mixing.len(), |r, i| {
        let mut acc = offset[i];
        for j in 0..d {
            acc += mixing[i][j] * z[(r, j)];
        }
        acc
    })
}

fn phase_bounds() -> (f64, f64) {
    let pi = std::f64::consts::PI;
    (-pi + PHASE_MARGIN, pi - PHASE_MARGIN)
}

/// Affine map of `[low, high]` onto the phase interval used before sin/cos.
pub fn to_phase(x: f64, low: f64, high: f64) -> f64 {
    let (lo, hi) = phase_bounds();
    let width = if high > low { high - low } else { 1.0 };
    lo + (x - low) / width * (hi - lo)
}

/// Inverse of [`to_phase`].
pub fn from_phase(p: f64, low: f64, high: f64) -> f64 {
    let (lo, hi) = phase_bounds();
    let width = if high > low { high - low } else { 1.0 };
    low + (p - lo) / (hi - lo) * width
}

fn interval_of(edges: &[f64], x: f64) -> usize {
    edges.partition_point(|&e| e <= x)
}

fn multi_code(z: &DMatrix<f64>, k: usize, perm: &[usize], scheme: &MultiCodeScheme) -> DMatrix<f64> {
    let n = z.nrows();
    let mut out = DMatrix::zeros(n, k * perm.len());
    for (block, &f) in perm.iter().enumerate() {
        for r in 0..n {
            let x = z[(r, f)];
            match scheme {
                MultiCodeScheme::Circular { low, high } => {
                    let p = to_phase(x, low[block], high[block]);
                    out[(r, 2 * block)] = p.sin();
                    out[(r, 2 * block + 1)] = p.cos();
                }
                MultiCodeScheme::Interval { edges } => {
                    out[(r, k * block + interval_of(&edges[block], x))] = x;
                }
            }
        }
    }
    out
}

/// Factors paired with the codes they generated.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedDataset {
    pub z: FactorMatrix,
    pub zhat: CodeMatrix,
    pub spec: EncoderSpec,
    pub alignment: Vec<Vec<usize>>,
    pub equivalence: Equivalence,
}

impl EncodedDataset {
    pub fn from_spec(z: FactorMatrix, spec: EncoderSpec) -> Result<Self> {
        let zhat = spec.apply(&z)?;
        Ok(EncodedDataset {
            alignment: spec.alignment(),
            equivalence: spec.equivalence(),
            z,
            zhat,
            spec,
        })
    }

    /// Codes supplied from outside with no known generating encoder.
    pub fn from_external(z: FactorMatrix, zhat: CodeMatrix) -> Result<Self> {
        crate::matrix::check_paired(&zhat, &z)?;
        let spec = EncoderSpec {
            kind: EncoderKind::External,
            d: z.d(),
            m: zhat.m(),
        };
        Ok(EncodedDataset {
            alignment: spec.alignment(),
            equivalence: Equivalence::None,
            spec,
            z,
            zhat,
        })
    }

    pub fn n(&self) -> usize {
        self.z.n()
    }

    pub fn d(&self) -> usize {
        self.z.d()
    }

    pub fn m(&self) -> usize {
        self.zhat.m()
    }

    /// Re-applying the encoder spec reproduces the stored codes exactly.
    pub fn audit(&self) -> bool {
        self.spec.apply(&self.z).is_ok_and(|again| again == self.zhat)
    }

    /// Restrict to a subset of rows. The encoder spec is kept as is, so the audit
    /// no longer holds for encoders with sample-dependent parameters.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        Ok(EncodedDataset {
            z: self.z.select_rows(rows)?,
            zhat: self.zhat.select_rows(rows)?,
            spec: self.spec.clone(),
            alignment: self.alignment.clone(),
            equivalence: self.equivalence,
        })
    }
}

fn check_perm(perm: &[usize], d: usize) -> Result<()> {
    if perm.len() != d {
        return Err(Error::param("perm", "must have one entry per factor"));
    }
    let mut seen = vec![false; d];
    for &p in perm {
        if p >= d || seen[p] {
            return Err(Error::param("perm", "must be a permutation of the factor indices"));
        }
        seen[p] = true;
    }
    Ok(())
}

fn check_scales(scales: &[f64], len: usize) -> Result<()> {
    if scales.len() != len {
        return Err(Error::param("scales", "must have one entry per code"));
    }
    if scales.iter().any(|s| *s == 0.0 || !s.is_finite()) {
        return Err(Error::param("scales", "must be finite and nonzero"));
    }
    Ok(())
}

fn draw_scales(len: usize, positive: bool, rng: &mut Rng) -> Vec<f64> {
    let (lo, hi) = SCALE_RANGE;
    (0..len)
        .map(|_| if positive { rng.magnitude(lo, hi) } else { rng.signed_magnitude(lo, hi) })
        .collect()
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

pub fn encode_e1(z: &FactorMatrix, perm: &[usize], scales: &[f64]) -> Result<EncodedDataset> {
    check_perm(perm, z.d())?;
    check_scales(scales, z.d())?;
    let spec = EncoderSpec {
        kind: EncoderKind::E1 {
            perm: perm.to_vec(),
            scales: scales.to_vec(),
        },
        d: z.d(),
        m: z.d(),
    };
    EncodedDataset::from_spec(z.clone(), spec)
}

pub fn encode_e2(
    z: &FactorMatrix,
    perm: &[usize],
    scales: &[f64],
    alpha: f64,
    nonlinearities: &[Monotone],
) -> Result<EncodedDataset> {
    check_perm(perm, z.d())?;
    check_scales(scales, z.d())?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::param("alpha", "must lie in [0, 1]"));
    }
    if nonlinearities.len() != z.d() {
        return Err(Error::param("nonlinearities", "must have one entry per factor"));
    }
    let spec = EncoderSpec {
        kind: EncoderKind::E2 {
            perm: perm.to_vec(),
            scales: scales.to_vec(),
            alpha,
            nonlinearities: nonlinearities.to_vec(),
        },
        d: z.d(),
        m: z.d(),
    };
    EncodedDataset::from_spec(z.clone(), spec)
}

/// Mixing matrix `U diag(linspace(1, 1/kappa, d_in)) V^T` of shape
/// `d_out x d_in`, with `U` the first `d_in` columns of a Haar orthogonal
/// matrix. With `signed_permutation`, `U` and `V` are random signed
/// permutations instead (square case only).
pub fn mixing_matrix(
    d_in: usize,
    d_out: usize,
    kappa: f64,
    rng: &mut Rng,
    signed_permutation: bool,
) -> Result<DMatrix<f64>> {
    if d_in == 0 || d_out < d_in {
        return Err(Error::param("d_out", "must be at least d_in >= 1"));
    }
    if !(kappa >= 1.0 && kappa.is_finite()) {
        return Err(Error::param("kappa", "must be finite and >= 1"));
    }
    let (u, v) = if signed_permutation {
        if d_out != d_in {
            return Err(Error::param("signed_permutation", "only defined for square mixing"));
        }
        (signed_perm_matrix(d_in, rng), signed_perm_matrix(d_in, rng))
    } else {
        let u = random_orthogonal(d_out, rng).columns(0, d_in).into_owned();
        (u, random_orthogonal(d_in, rng))
    };
    let spectrum = nalgebra::DVector::from_iterator(
        d_in,
        (0..d_in).map(|i| {
            if d_in == 1 {
                1.0
            } else {
                1.0 + (1.0 / kappa - 1.0) * i as f64 / (d_in - 1) as f64
            }
        }),
    );
    Ok(u * DMatrix::from_diagonal(&spectrum) * v.transpose())
}

fn signed_perm_matrix(dim: usize, rng: &mut Rng) -> DMatrix<f64> {
    let p = rng.permutation(dim);
    let mut out = DMatrix::zeros(dim, dim);
    for (i, &j) in p.iter().enumerate() {
        out[(i, j)] = if rng.below(2) == 0 { 1.0 } else { -1.0 };
    }
    out
}

/// Options for the affine encoders.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MixingOptions {
    pub kappa: f64,
    pub signed_permutation: bool,
    /// Standard deviation of the random offset; 0 disables it.
    pub offset_scale: f64,
}

impl Default for MixingOptions {
    fn default() -> Self {
        MixingOptions {
            kappa: 1.0,
            signed_permutation: false,
            offset_scale: 0.0,
        }
    }
}

fn build_affine(z: &FactorMatrix, m: usize, opts: &MixingOptions, rng: &Rng) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let a = mixing_matrix(z.d(), m, opts.kappa, &mut rng.derive("mixing"), opts.signed_permutation)?;
    let mut orng = rng.derive("offset");
    let offset = (0..m)
        .map(|_| if opts.offset_scale == 0.0 { 0.0 } else { opts.offset_scale * orng.normal() })
        .collect();
    Ok((a, offset))
}

pub fn encode_e3(z: &FactorMatrix, opts: &MixingOptions, rng: &Rng) -> Result<EncodedDataset> {
    let (a, offset) = build_affine(z, z.d(), opts, rng)?;
    let spec = EncoderSpec {
        kind: EncoderKind::E3 {
            kappa: opts.kappa,
            mixing: rows_of(&a),
            offset,
        },
        d: z.d(),
        m: z.d(),
    };
    EncodedDataset::from_spec(z.clone(), spec)
}

pub fn encode_e7(z: &FactorMatrix, m: usize, opts: &MixingOptions, rng: &Rng) -> Result<EncodedDataset> {
    if m <= z.d() {
        return Err(Error::param("m", "overcomplete mixing needs m > d"));
    }
    let (a, offset) = build_affine(z, m, opts, rng)?;
    let spec = EncoderSpec {
        kind: EncoderKind::E7 {
            kappa: opts.kappa,
            mixing: rows_of(&a),
            offset,
        },
        d: z.d(),
        m,
    };
    EncodedDataset::from_spec(z.clone(), spec)
}

/// Explicit linear map, `mixing` given with one row per code.
pub fn encode_linear(z: &FactorMatrix, mixing: &DMatrix<f64>, offset: &[f64]) -> Result<EncodedDataset> {
    if mixing.ncols() != z.d() || offset.len() != mixing.nrows() {
        return Err(Error::DimensionMismatch("mixing must be m x d with an m-vector offset".into()));
    }
    let spec = EncoderSpec {
        kind: EncoderKind::Linear {
            mixing: rows_of(mixing),
            offset: offset.to_vec(),
        },
        d: z.d(),
        m: mixing.nrows(),
    };
    EncodedDataset::from_spec(z.clone(), spec)
}

pub fn encode_e4(z: &FactorMatrix, retained: &[usize], scales: &[f64]) -> Result<EncodedDataset> {
    if retained.is_empty() {
        return Err(Error::param("retained", "must keep at least one factor"));
    }
    if retained.len() >= z.d() {
        return Err(Error::param("retained", "must drop at least one factor"));
    }
    let mut seen = vec![false; z.d()];
    for &j in retained {
        if j >= z.d() || seen[j] {
            return Err(Error::param("retained", "indices must be distinct and below d"));
        }
        seen[j] = true;
    }
    check_scales(scales, retained.len())?;
    let spec = EncoderSpec {
        kind: EncoderKind::E4 {
            retained: retained.to_vec(),
            scales: scales.to_vec(),
        },
        d: z.d(),
        m: retained.len(),
    };
    EncodedDataset::from_spec(z.clone(), spec)
}

pub fn encode_e5(z: &FactorMatrix, sources: &[usize], scales: &[f64]) -> Result<EncodedDataset> {
    let d = z.d();
    if sources.len() <= d {
        return Err(Error::param("sources", "duplication needs m > d"));
    }
    let mut hit = vec![false; d];
    for &s in sources {
        if s >= d {
            return Err(Error::param("sources", "index out of range"));
        }
        hit[s] = true;
    }
    if hit.iter().any(|h| !h) {
        return Err(Error::param("sources", "must cover every factor"));
    }
    check_scales(scales, sources.len())?;
    let spec = EncoderSpec {
        kind: EncoderKind::E5 {
            sources: sources.to_vec(),
            scales: scales.to_vec(),
        },
        d,
        m: sources.len(),
    };
    EncodedDataset::from_spec(z.clone(), spec)
}

pub fn encode_e6(z: &FactorMatrix, perm: &[usize], monotone: &[Monotone], cross: &[CrossCode]) -> Result<EncodedDataset> {
    let d = z.d();
    check_perm(perm, d)?;
    if monotone.len() != d {
        return Err(Error::param("monotone", "must have one entry per factor"));
    }
    if cross.is_empty() {
        return Err(Error::param("cross", "need at least one cross-factor code"));
    }
    for c in cross {
        let ok = match c {
            CrossCode::Product { a, b } | CrossCode::SumSquares { a, b } => *a < d && *b < d && a != b,
            CrossCode::SineForm { weights } => weights.len() == d,
        };
        if !ok {
            return Err(Error::param("cross", "cross code references invalid factors"));
        }
    }
    let spec = EncoderSpec {
        kind: EncoderKind::E6 {
            perm: perm.to_vec(),
            monotone: monotone.to_vec(),
            cross: cross.to_vec(),
        },
        d,
        m: d + cross.len(),
    };
    EncodedDataset::from_spec(z.clone(), spec)
}

/// Cross codes cycling product, sum of squares and sine of a random linear
/// form. Pairs are drawn from `rng`; needs `d >= 2`.
pub fn default_cross_codes(d: usize, count: usize, rng: &mut Rng) -> Vec<CrossCode> {
    let pair = |rng: &mut Rng| {
        let a = rng.below(d);
        let mut b = rng.below(d - 1);
        if b >= a {
            b += 1;
        }
        (a, b)
    };
    (0..count)
        .map(|t| match t % 3 {
            0 => {
                let (a, b) = pair(rng);
                CrossCode::Product { a, b }
            }
            1 => {
                let (a, b) = pair(rng);
                CrossCode::SumSquares { a, b }
            }
            _ => {
                let scale = 1.0 / (d as f64).sqrt();
                CrossCode::SineForm {
                    weights: (0..d).map(|_| rng.normal() * scale).collect(),
                }
            }
        })
        .collect()
}

pub fn encode_e8(z: &FactorMatrix, k: usize, perm: &[usize]) -> Result<EncodedDataset> {
    encode_e8_capped(z, k, perm, DEFAULT_MAX_CODES)
}

pub fn encode_e8_capped(z: &FactorMatrix, k: usize, perm: &[usize], max_codes: usize) -> Result<EncodedDataset> {
    let d = z.d();
    check_perm(perm, d)?;
    if k < 2 {
        return Err(Error::param("k", "needs at least two codes per factor"));
    }
    let m = k
        .checked_mul(d)
        .filter(|m| *m <= max_codes)
        .ok_or_else(|| Error::param("k", format!("k * d exceeds the configured maximum of {max_codes} codes")))?;
    let scheme = if k == 2 {
        let (low, high) = perm
            .iter()
            .map(|&f| {
                let c = z.column(f);
                let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            })
            .unzip();
        MultiCodeScheme::Circular { low, high }
    } else {
        MultiCodeScheme::Interval {
            edges: perm.iter().map(|&f| interval_edges(z.column(f), k)).collect(),
        }
    };
    let spec = EncoderSpec {
        kind: EncoderKind::E8 {
            k,
            perm: perm.to_vec(),
            scheme,
        },
        d,
        m,
    };
    EncodedDataset::from_spec(z.clone(), spec)
}

/// `k - 1` equal-quantile interior edges of `x`.
fn interval_edges(x: &[f64], k: usize) -> Vec<f64> {
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    (1..k).map(|t| sorted[(t * n / k).min(n - 1)]).collect()
}

/// Recover factor columns (original factor order) from multi-code outputs
/// with the declared reconstruction: atan2 for the circular scheme, a sum
/// over each block for the interval scheme.
pub fn reconstruct_e8(spec: &EncoderSpec, zhat: &CodeMatrix) -> Result<Vec<Vec<f64>>> {
    let EncoderKind::E8 { k, perm, scheme } = &spec.kind else {
        return Err(Error::param("spec", "not a multi-code encoder"));
    };
    if zhat.m() != spec.m {
        return Err(Error::DimensionMismatch("code count differs from the encoder spec".into()));
    }
    let mut out = vec![Vec::new(); spec.d];
    for (block, &f) in perm.iter().enumerate() {
        out[f] = match scheme {
            MultiCodeScheme::Circular { low, high } => zhat
                .column(2 * block)
                .iter()
                .zip(zhat.column(2 * block + 1))
                .map(|(s, c)| from_phase(s.atan2(*c), low[block], high[block]))
                .collect(),
            MultiCodeScheme::Interval { .. } => (0..zhat.n())
                .map(|r| (0..*k).map(|t| zhat.column(k * block + t)[r]).sum())
                .collect(),
        };
    }
    Ok(out)
}

pub fn encode_null(z: &FactorMatrix, m: usize, distribution: NullDistribution, rng: &Rng) -> Result<EncodedDataset> {
    if m == 0 {
        return Err(Error::param("m", "must be at least 1"));
    }
    let spec = EncoderSpec {
        kind: EncoderKind::Null {
            m,
            distribution,
            seed: rng.seed(),
            stream: rng.stream(),
        },
        d: z.d(),
        m,
    };
    EncodedDataset::from_spec(z.clone(), spec)
}

/// Declarative encoder choice; concrete parameters are drawn at build time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EncoderRecipe {
    E1,
    E2 {
        alpha: f64,
    },
    E3 {
        #[serde(flatten)]
        mixing: MixingOptions,
    },
    /// Keep the first `m` factors of the sample's keep order.
    E4 {
        m: usize,
    },
    E5 {
        m: usize,
    },
    E6 {
        m: usize,
    },
    E7 {
        m: usize,
        #[serde(flatten)]
        mixing: MixingOptions,
    },
    E8 {
        k: usize,
    },
    NullUniform {
        m: usize,
    },
    NullGaussian {
        m: usize,
    },
}

impl EncoderRecipe {
    pub fn label(&self) -> String {
        match self {
            EncoderRecipe::E1 => "e1".into(),
            EncoderRecipe::E2 { alpha } => format!("e2(alpha={alpha})"),
            EncoderRecipe::E3 { mixing } => format!("e3(kappa={})", mixing.kappa),
            EncoderRecipe::E4 { m } => format!("e4(m={m})"),
            EncoderRecipe::E5 { m } => format!("e5(m={m})"),
            EncoderRecipe::E6 { m } => format!("e6(m={m})"),
            EncoderRecipe::E7 { m, mixing } => format!("e7(m={m},kappa={})", mixing.kappa),
            EncoderRecipe::E8 { k } => format!("e8(k={k})"),
            EncoderRecipe::NullUniform { m } => format!("e9(m={m})"),
            EncoderRecipe::NullGaussian { m } => format!("e10(m={m})"),
        }
    }

    /// Output dimension for `d` factors.
    pub fn output_dim(&self, d: usize) -> usize {
        match self {
            EncoderRecipe::E1 | EncoderRecipe::E2 { .. } | EncoderRecipe::E3 { .. } => d,
            EncoderRecipe::E4 { m }
            | EncoderRecipe::E5 { m }
            | EncoderRecipe::E6 { m }
            | EncoderRecipe::E7 { m, .. }
            | EncoderRecipe::NullUniform { m }
            | EncoderRecipe::NullGaussian { m } => *m,
            EncoderRecipe::E8 { k } => k * d,
        }
    }

    pub fn build(&self, sample: &DgpSample, rng: &Rng) -> Result<EncodedDataset> {
        self.build_with_order(&sample.z, &sample.keep_order(), rng)
    }

    /// `keep_order` decides which factors `E4` retains.
    pub fn build_with_order(&self, z: &FactorMatrix, keep_order: &[usize], rng: &Rng) -> Result<EncodedDataset> {
        let d = z.d();
        let identity: Vec<usize> = (0..d).collect();
        match self {
            EncoderRecipe::E1 => {
                let perm = rng.derive("perm").permutation(d);
                let scales = draw_scales(d, false, &mut rng.derive("scales"));
                encode_e1(z, &perm, &scales)
            }
            EncoderRecipe::E2 { alpha } => {
                let scales = draw_scales(d, true, &mut rng.derive("scales"));
                let h: Vec<Monotone> = (0..d).map(Monotone::cycled).collect();
                encode_e2(z, &identity, &scales, *alpha, &h)
            }
            EncoderRecipe::E3 { mixing } => encode_e3(z, mixing, rng),
            EncoderRecipe::E4 { m } => {
                if *m == 0 || *m > keep_order.len() {
                    return Err(Error::param("m", "must lie in 1..=d"));
                }
                let scales = draw_scales(*m, false, &mut rng.derive("scales"));
                encode_e4(z, &keep_order[..*m], &scales)
            }
            EncoderRecipe::E5 { m } => {
                let sources: Vec<usize> = (0..*m).map(|j| j % d).collect();
                let scales = draw_scales(*m, false, &mut rng.derive("scales"));
                encode_e5(z, &sources, &scales)
            }
            EncoderRecipe::E6 { m } => {
                if *m <= d || d < 2 {
                    return Err(Error::param("m", "redundant overcomplete codes need m > d >= 2"));
                }
                let h: Vec<Monotone> = (0..d).map(Monotone::cycled).collect();
                let cross = default_cross_codes(d, m - d, &mut rng.derive("cross"));
                encode_e6(z, &identity, &h, &cross)
            }
            EncoderRecipe::E7 { m, mixing } => encode_e7(z, *m, mixing, rng),
            EncoderRecipe::E8 { k } => encode_e8(z, *k, &identity),
            EncoderRecipe::NullUniform { m } => encode_null(z, *m, NullDistribution::Uniform, &rng.derive("null")),
            EncoderRecipe::NullGaussian { m } => encode_null(z, *m, NullDistribution::Gaussian, &rng.derive("null")),
        }
    }
}
