//! Data ingestion (CSV datasets) and the probability models that
//! parameterize removal operators: empirical, product-of-marginals, uniform
//! box, Gaussian and point-mass references, plus Gaussian conditioning.
//!
//! Randomness policy: every sampling call takes an explicit 64-bit seed and
//! runs a ChaCha8 stream cipher generator (counter-based, no global state).
//! Draws are consumed in a fixed documented order, so identical
//! (distribution, count, seed) triples yield bitwise-identical rows.

use crate::coalition::Coalition;
use crate::exprfn::Interval;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::io::Read;
use std::path::Path;

/// The deterministic generator used throughout: ChaCha8 seeded explicitly,
/// with `stream` selecting an independent substream of the same seed.
pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

/// A rectangular table of n rows over d feature columns x1..xd, with an
/// optional label column y.
#[derive(Clone, PartialEq, Debug)]
pub struct Dataset {
    rows: Vec<Vec<f64>>,
    labels: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(rows: Vec<Vec<f64>>, labels: Option<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Dataset("dataset must have at least one row".into()));
        }
        let d = rows[0].len();
        if d == 0 {
            return Err(Error::Dataset("dataset must have at least one column".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::Dataset(format!(
                    "row {i} has {} cells, expected {d}",
                    row.len()
                )));
            }
            if let Some(bad) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::Dataset(format!("non-finite cell {bad} in row {i}")));
            }
        }
        if let Some(y) = &labels {
            if y.len() != n {
                return Err(Error::Dataset(format!(
                    "{} labels for {n} rows",
                    y.len()
                )));
            }
            if let Some(bad) = y.iter().find(|v| !v.is_finite()) {
                return Err(Error::Dataset(format!("non-finite label {bad}")));
            }
        }
        Ok(Dataset { rows, labels })
    }

    /// Parses CSV with header `x1,...,xd` (contiguous, starting at x1),
    /// optionally followed by a final `y` column when `has_label`.
    pub fn from_csv_reader<R: Read>(reader: R, has_label: bool) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|_| Error::Dataset("missing header row".into()))?
            .clone();
        let n_cols = headers.len();
        let d = if has_label {
            if n_cols < 2 {
                return Err(Error::Dataset(
                    "labeled CSV needs at least one feature column and y".into(),
                ));
            }
            n_cols - 1
        } else {
            n_cols
        };
        for (idx, name) in headers.iter().enumerate() {
            let expect = if idx < d {
                format!("x{}", idx + 1)
            } else {
                "y".to_string()
            };
            if name != expect {
                return Err(Error::Dataset(format!(
                    "header column {} is {name:?}, expected {expect:?} \
                     (features must be contiguous x1..xd{})",
                    idx + 1,
                    if has_label { " followed by y" } else { "" }
                )));
            }
        }
        let mut rows = Vec::new();
        let mut labels = if has_label { Some(Vec::new()) } else { None };
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != n_cols {
                return Err(Error::Dataset(format!(
                    "row {line} has {} cells, expected {n_cols}",
                    record.len()
                )));
            }
            let mut row = Vec::with_capacity(d);
            for (idx, cell) in record.iter().enumerate() {
                let v: f64 = cell.parse().map_err(|_| {
                    Error::Dataset(format!("non-numeric cell {cell:?} in row {line}"))
                })?;
                if idx < d {
                    row.push(v);
                } else {
                    labels.as_mut().expect("has_label").push(v);
                }
            }
            rows.push(row);
        }
        Dataset::new(rows, labels)
    }

    pub fn from_csv_path<P: AsRef<Path>>(path: P, has_label: bool) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())?;
        Dataset::from_csv_reader(file, has_label)
    }

    /// Parses CSV, detecting the optional label column from the header
    /// (a trailing `y` column means labeled).
    pub fn from_csv_str_auto(text: &str) -> Result<Self> {
        let first = text.lines().next().unwrap_or("");
        let has_label = first.split(',').map(str::trim).next_back() == Some("y");
        Dataset::from_csv_reader(text.as_bytes(), has_label)
    }

    pub fn from_csv_path_auto<P: AsRef<Path>>(path: P) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Dataset::from_csv_str_auto(&text)
    }

    pub fn d(&self) -> usize {
        self.rows[0].len()
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Values of 1-indexed column j, in row order.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j - 1]).collect()
    }

    pub fn labels(&self) -> Option<&[f64]> {
        self.labels.as_deref()
    }

    /// Restriction to the 1-indexed columns in `cols` (ascending), keeping
    /// labels; used by the retraining removal.
    pub fn column_subset(&self, cols: &Coalition) -> Result<Dataset> {
        if cols.d() != self.d() {
            return Err(Error::DimensionMismatch(format!(
                "column subset over [{}] of a {}-column dataset",
                cols.d(),
                self.d()
            )));
        }
        if cols.is_empty() {
            return Err(Error::Dataset("column subset must be nonempty".into()));
        }
        let keep: Vec<usize> = cols.players().collect();
        let rows = self
            .rows
            .iter()
            .map(|r| keep.iter().map(|&j| r[j - 1]).collect())
            .collect();
        Dataset::new(rows, self.labels.clone())
    }
}

// ---------------------------------------------------------------------------
// GaussianSpec
// ---------------------------------------------------------------------------

/// Mean vector and symmetric positive-semidefinite covariance matrix.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct GaussianSpec {
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

impl GaussianSpec {
    pub fn new(mean: Vec<f64>, cov: Vec<Vec<f64>>) -> Result<Self> {
        let spec = GaussianSpec { mean, cov };
        spec.validate()?;
        Ok(spec)
    }

    /// Standard normal: zero mean, identity covariance.
    pub fn standard(d: usize) -> Self {
        let mut cov = vec![vec![0.0; d]; d];
        for (i, row) in cov.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        GaussianSpec {
            mean: vec![0.0; d],
            cov,
        }
    }

    pub fn d(&self) -> usize {
        self.mean.len()
    }

    /// Checks shape, symmetry (tolerance 1e-12) and eigenvalues ≥ −1e-10.
    pub fn validate(&self) -> Result<()> {
        let d = self.mean.len();
        if d == 0 {
            return Err(Error::Distribution("empty mean vector".into()));
        }
        if self.mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::Distribution("non-finite mean entry".into()));
        }
        if self.cov.len() != d || self.cov.iter().any(|row| row.len() != d) {
            return Err(Error::Distribution(format!(
                "covariance must be {d}x{d}"
            )));
        }
        for i in 0..d {
            for j in 0..d {
                let (a, b) = (self.cov[i][j], self.cov[j][i]);
                if !a.is_finite() {
                    return Err(Error::Distribution("non-finite covariance entry".into()));
                }
                if (a - b).abs() > 1e-12 {
                    return Err(Error::Distribution(format!(
                        "covariance not symmetric at ({i},{j}): {a} vs {b}"
                    )));
                }
            }
        }
        let m = self.cov_matrix();
        let eig = m.symmetric_eigenvalues();
        if let Some(bad) = eig.iter().find(|&&l| l < -1e-10) {
            return Err(Error::Distribution(format!(
                "covariance has negative eigenvalue {bad}"
            )));
        }
        Ok(())
    }

    pub(crate) fn cov_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.d(), self.d(), |i, j| self.cov[i][j])
    }

    pub(crate) fn mean_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.mean)
    }

    /// A matrix A with AAᵀ = Σ: the Cholesky factor when Σ is positive
    /// definite, otherwise the symmetric eigendecomposition square root
    /// (covers semidefinite covariances such as perfectly correlated pairs).
    pub(crate) fn transform(&self) -> DMatrix<f64> {
        let m = self.cov_matrix();
        if let Some(chol) = m.clone().cholesky() {
            return chol.l();
        }
        let eig = m.symmetric_eigen();
        let sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
        &eig.eigenvectors * sqrt * eig.eigenvectors.transpose()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: GaussianSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }
}

// ---------------------------------------------------------------------------
// ReferenceDistribution
// ---------------------------------------------------------------------------

/// The reference distributions removal operators average over.
#[derive(Clone, Debug)]
pub enum ReferenceDistribution {
    /// Rows of a dataset, sampled uniformly with replacement.
    Empirical(Dataset),
    /// Each column sampled independently from its empirical marginal.
    ProductOfMarginals(Dataset),
    /// Independent uniform coordinates on a bounded box.
    UniformBox(Vec<Interval>),
    Gaussian(GaussianSpec),
    PointMass(Vec<f64>),
}

impl ReferenceDistribution {
    pub fn d(&self) -> usize {
        match self {
            ReferenceDistribution::Empirical(ds) => ds.d(),
            ReferenceDistribution::ProductOfMarginals(ds) => ds.d(),
            ReferenceDistribution::UniformBox(b) => b.len(),
            ReferenceDistribution::Gaussian(g) => g.d(),
            ReferenceDistribution::PointMass(p) => p.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ReferenceDistribution::Empirical(_) | ReferenceDistribution::ProductOfMarginals(_) => {
                Ok(())
            }
            ReferenceDistribution::UniformBox(bounds) => {
                if bounds.is_empty() {
                    return Err(Error::Distribution("empty uniform box".into()));
                }
                if let Some(bad) = bounds.iter().find(|b| !b.is_bounded()) {
                    return Err(Error::Distribution(format!(
                        "uniform reference requires finite bounds, got [{}, {}]",
                        bad.lo, bad.hi
                    )));
                }
                Ok(())
            }
            ReferenceDistribution::Gaussian(g) => g.validate(),
            ReferenceDistribution::PointMass(p) => {
                if p.is_empty() || p.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Distribution("bad point mass".into()));
                }
                Ok(())
            }
        }
    }

    /// The finite support when exact enumeration is available: dataset rows
    /// for Empirical, the single point for PointMass.
    pub fn exact_support(&self) -> Option<Vec<Vec<f64>>> {
        match self {
            ReferenceDistribution::Empirical(ds) => Some(ds.rows().to_vec()),
            ReferenceDistribution::PointMass(p) => Some(vec![p.clone()]),
            _ => None,
        }
    }
}

/// Draws `count` rows. Deterministic for fixed (distribution, count, seed);
/// draws are consumed row-major (row by row, coordinate by coordinate).
pub fn sample(dist: &ReferenceDistribution, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if count == 0 {
        return Err(Error::Config("sample count must be >= 1".into()));
    }
    dist.validate()?;
    let mut rng = rng_stream(seed, 0);
    let d = dist.d();
    let mut out = Vec::with_capacity(count);
    match dist {
        ReferenceDistribution::Empirical(ds) => {
            for _ in 0..count {
                let idx = rng.gen_range(0..ds.n());
                out.push(ds.row(idx).to_vec());
            }
        }
        ReferenceDistribution::ProductOfMarginals(ds) => {
            for _ in 0..count {
                let mut row = Vec::with_capacity(d);
                for j in 0..d {
                    let idx = rng.gen_range(0..ds.n());
                    row.push(ds.row(idx)[j]);
                }
                out.push(row);
            }
        }
        ReferenceDistribution::UniformBox(bounds) => {
            for _ in 0..count {
                let row = bounds
                    .iter()
                    .map(|b| {
                        if b.lo == b.hi {
                            b.lo
                        } else {
                            rng.gen_range(b.lo..b.hi)
                        }
                    })
                    .collect();
                out.push(row);
            }
        }
        ReferenceDistribution::Gaussian(spec) => {
            let a = spec.transform();
            let mu = spec.mean_vector();
            for _ in 0..count {
                let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
                let x = &mu + &a * z;
                out.push(x.iter().copied().collect());
            }
        }
        ReferenceDistribution::PointMass(p) => {
            for _ in 0..count {
                out.push(p.clone());
            }
        }
    }
    Ok(out)
}

/// Conditions a Gaussian on `X_known = x_known`, returning the spec of the
/// remaining coordinates in ascending index order.
pub fn gaussian_conditional(
    spec: &GaussianSpec,
    known: &Coalition,
    x_known: &[f64],
) -> Result<GaussianSpec> {
    spec.validate()?;
    if known.d() != spec.d() {
        return Err(Error::DimensionMismatch(format!(
            "conditioning a {}-dimensional Gaussian on a coalition over [{}]",
            spec.d(),
            known.d()
        )));
    }
    if x_known.len() != known.size() {
        return Err(Error::DimensionMismatch(format!(
            "{} known values for {} known coordinates",
            x_known.len(),
            known.size()
        )));
    }
    if known.is_empty() {
        return Ok(spec.clone());
    }
    if known.is_full() {
        return Err(Error::Config(
            "conditioning on every coordinate leaves nothing to describe".into(),
        ));
    }
    let k_idx: Vec<usize> = known.players().map(|p| p - 1).collect();
    let u_idx: Vec<usize> = known.complement().players().map(|p| p - 1).collect();
    let cov = spec.cov_matrix();
    let block = |rows: &[usize], cols: &[usize]| {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| cov[(rows[i], cols[j])])
    };
    let sigma_kk = block(&k_idx, &k_idx);
    let sigma_uk = block(&u_idx, &k_idx);
    let sigma_uu = block(&u_idx, &u_idx);
    let chol = sigma_kk
        .cholesky()
        .ok_or_else(|| Error::Numeric("singular known block in Gaussian conditioning".into()))?;

    let delta = DVector::from_fn(k_idx.len(), |i, _| x_known[i] - spec.mean[k_idx[i]]);
    let w = chol.solve(&delta);
    let mean_u = DVector::from_fn(u_idx.len(), |i, _| spec.mean[u_idx[i]]) + &sigma_uk * w;

    let m = chol.solve(&sigma_uk.transpose());
    let cov_u = &sigma_uu - &sigma_uk * m;

    let q = u_idx.len();
    // Symmetrize to wash out solve round-off before revalidation.
    let mean = mean_u.iter().copied().collect();
    let cov_rows: Vec<Vec<f64>> = (0..q)
        .map(|i| (0..q).map(|j| 0.5 * (cov_u[(i, j)] + cov_u[(j, i)])).collect())
        .collect();
    GaussianSpec::new(mean, cov_rows)
}
