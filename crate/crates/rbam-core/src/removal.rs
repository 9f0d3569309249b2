//! Removal-operator families {P_T} and behaviour mappings Φ — the first two
//! defining choices of every removal-based attribution method.
//!
//! A removal family produces, for any coalition T, a function that no longer
//! depends on the coordinates in T: by substituting a fixed baseline
//! (anchored), by averaging T out against a reference distribution
//! (marginal / product-of-marginals / uniform / conditional Gaussian), or by
//! retraining a model on the surviving columns.
//!
//! Common random numbers: expectation-based families hold a fixed
//! (mc_samples, seed) pair, and every `remove` call regenerates the identical
//! draw table from it. All coalitions T therefore share one table — draws for
//! coordinate j never depend on T — so linearity and composition identities
//! hold to full float precision instead of Monte Carlo noise.

use crate::coalition::Coalition;
use crate::distributions::{
    gaussian_conditional, rng_stream, sample, Dataset, GaussianSpec, ReferenceDistribution,
};
use crate::exprfn::{FunctionModel, Interval};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

/// Hard cap on exact product-of-marginals enumeration (n^|T| terms).
const EXACT_ENUM_CAP: usize = 1 << 20;

// ---------------------------------------------------------------------------
// Learner
// ---------------------------------------------------------------------------

/// A procedure that fits a model to a labeled dataset.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Learner {
    /// Ordinary least squares with an intercept term.
    #[default]
    LeastSquares,
}

impl Learner {
    /// Fits on all feature columns; the returned model's dimension equals
    /// the training column count.
    pub fn fit(&self, data: &Dataset) -> Result<FunctionModel> {
        match self {
            Learner::LeastSquares => ols_fit(data),
        }
    }
}

fn ols_fit(data: &Dataset) -> Result<FunctionModel> {
    let y = data
        .labels()
        .ok_or_else(|| Error::Dataset("least-squares training needs a label column".into()))?;
    let (n, d) = (data.n(), data.d());
    let x = DMatrix::from_fn(n, d + 1, |i, j| if j == 0 { 1.0 } else { data.row(i)[j - 1] });
    let yv = DVector::from_column_slice(y);
    let beta = x
        .svd(true, true)
        .solve(&yv, 1e-12)
        .map_err(|e| Error::Numeric(format!("least-squares solve failed: {e}")))?;
    let coefs: Vec<f64> = beta.iter().copied().collect();
    FunctionModel::new(d, move |x| {
        Ok(coefs[0] + x.iter().zip(&coefs[1..]).map(|(xi, b)| xi * b).sum::<f64>())
    })
}

// ---------------------------------------------------------------------------
// RemovalFamily
// ---------------------------------------------------------------------------

/// A family {P_T} of removal operators indexed by coalitions T ⊆ [d].
#[derive(Clone, Debug)]
pub enum RemovalFamily {
    /// Substitutes the removed coordinates with a fixed baseline vector.
    Anchored { baseline: Vec<f64> },
    /// Averages the removed block against the joint reference distribution.
    Marginal {
        reference: ReferenceDistribution,
        mc_samples: usize,
        seed: u64,
        /// Average over the full finite support instead of sampling
        /// (empirical and point-mass references only).
        exact: bool,
    },
    /// Averages each removed coordinate against its own empirical marginal,
    /// independently of the others.
    ProductMarginals {
        data: Dataset,
        mc_samples: usize,
        seed: u64,
        exact: bool,
    },
    /// Averages the removed block over a bounded uniform box.
    Uniform {
        bounds: Vec<Interval>,
        mc_samples: usize,
        seed: u64,
    },
    /// Averages the removed block against the Gaussian conditional given the
    /// kept coordinates.
    ConditionalGaussian {
        spec: GaussianSpec,
        mc_samples: usize,
        seed: u64,
    },
    /// Trains a fresh model on the surviving columns.
    Retraining { data: Dataset, learner: Learner },
    /// P_∅ = identity, P_T = the zero function for T ≠ ∅: the family whose
    /// decomposition puts all of f in the grand component. Exists for
    /// idempotence studies.
    Trivial { d: usize },
}

impl RemovalFamily {
    pub fn d(&self) -> usize {
        match self {
            RemovalFamily::Anchored { baseline } => baseline.len(),
            RemovalFamily::Marginal { reference, .. } => reference.d(),
            RemovalFamily::ProductMarginals { data, .. } => data.d(),
            RemovalFamily::Uniform { bounds, .. } => bounds.len(),
            RemovalFamily::ConditionalGaussian { spec, .. } => spec.d(),
            RemovalFamily::Retraining { data, .. } => data.d(),
            RemovalFamily::Trivial { d } => *d,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mc_check = |mc: usize, exact: bool| {
            if !exact && mc == 0 {
                Err(Error::Config(
                    "mc_samples must be >= 1 when exact enumeration is off".into(),
                ))
            } else {
                Ok(())
            }
        };
        match self {
            RemovalFamily::Anchored { baseline } => {
                if baseline.is_empty() {
                    return Err(Error::Config("empty baseline".into()));
                }
                if let Some(bad) = baseline.iter().find(|v| !v.is_finite()) {
                    return Err(Error::Config(format!("non-finite baseline entry {bad}")));
                }
                Ok(())
            }
            RemovalFamily::Marginal {
                reference,
                mc_samples,
                exact,
                ..
            } => {
                reference.validate()?;
                if *exact && reference.exact_support().is_none() {
                    return Err(Error::Config(
                        "exact enumeration is available only for empirical and \
                         point-mass references"
                            .into(),
                    ));
                }
                mc_check(*mc_samples, *exact)
            }
            RemovalFamily::ProductMarginals {
                mc_samples, exact, ..
            } => mc_check(*mc_samples, *exact),
            RemovalFamily::Uniform {
                bounds, mc_samples, ..
            } => {
                ReferenceDistribution::UniformBox(bounds.clone()).validate()?;
                mc_check(*mc_samples, false)
            }
            RemovalFamily::ConditionalGaussian {
                spec, mc_samples, ..
            } => {
                spec.validate()?;
                mc_check(*mc_samples, false)
            }
            RemovalFamily::Retraining { data, .. } => {
                if data.labels().is_none() {
                    return Err(Error::Config(
                        "the retraining family needs a labeled dataset".into(),
                    ));
                }
                Ok(())
            }
            RemovalFamily::Trivial { d } => {
                crate::coalition::check_d(*d)?;
                Ok(())
            }
        }
    }
}

/// Replaces the T-coordinates of `x` with those of a full-length row.
fn merge_row(x: &[f64], row: &[f64], t: &Coalition) -> Vec<f64> {
    (0..x.len())
        .map(|j| if t.contains(j + 1) { row[j] } else { x[j] })
        .collect()
}

/// The Monte-Carlo (or exact) average of f over full-length draw rows,
/// substituted into the T-coordinates. Summation order is the row order.
fn averaged_over_rows(
    f: &FunctionModel,
    t: &Coalition,
    rows: Vec<Vec<f64>>,
) -> Result<FunctionModel> {
    let inner = f.clone();
    let t = *t;
    let count = rows.len() as f64;
    let model = FunctionModel::new(f.d(), move |x| {
        let mut sum = 0.0;
        for row in &rows {
            sum += inner.evaluate(&merge_row(x, row, &t))?;
        }
        Ok(sum / count)
    })?;
    model.with_domain(removed_domain(f, &t))
}

/// The result of a removal no longer constrains the removed coordinates.
fn removed_domain(f: &FunctionModel, t: &Coalition) -> Vec<Interval> {
    let mut domain = f.domain().to_vec();
    for p in t.players() {
        domain[p - 1] = Interval::unbounded();
    }
    domain
}

/// Applies P_T to f: the returned function is evaluatable anywhere and
/// independent of the coordinates in T. P_∅ is the identity for every family.
pub fn remove(family: &RemovalFamily, f: &FunctionModel, t: &Coalition) -> Result<FunctionModel> {
    family.validate()?;
    let d = family.d();
    if f.d() != d {
        return Err(Error::DimensionMismatch(format!(
            "removal family over [{d}] applied to a {}-variable function",
            f.d()
        )));
    }
    if t.d() != d {
        return Err(Error::DimensionMismatch(format!(
            "removal family over [{d}] applied to a coalition over [{}]",
            t.d()
        )));
    }
    if t.is_empty() {
        return Ok(f.clone());
    }
    match family {
        RemovalFamily::Anchored { baseline } => {
            let base = baseline.clone();
            let inner = f.clone();
            let t = *t;
            let model = FunctionModel::new(d, move |x| inner.evaluate(&merge_row(x, &base, &t)))?;
            model.with_domain(removed_domain(f, &t))
        }
        RemovalFamily::Marginal {
            reference,
            mc_samples,
            seed,
            exact,
        } => {
            let rows = if *exact {
                reference
                    .exact_support()
                    .expect("validated: exact support exists")
            } else {
                sample(reference, *mc_samples, *seed)?
            };
            averaged_over_rows(f, t, rows)
        }
        RemovalFamily::ProductMarginals {
            data,
            mc_samples,
            seed,
            exact,
        } => {
            if *exact {
                let cols: Vec<usize> = t.players().collect();
                let n = data.n();
                let total = n
                    .checked_pow(cols.len() as u32)
                    .filter(|&c| c <= EXACT_ENUM_CAP)
                    .ok_or_else(|| {
                        Error::Config(format!(
                            "exact product-marginal enumeration needs n^|T| <= {EXACT_ENUM_CAP}, \
                             got {n}^{}",
                            cols.len()
                        ))
                    })?;
                let inner = f.clone();
                let data = data.clone();
                let model = FunctionModel::new(d, move |x| {
                    let mut sum = 0.0;
                    let mut idx = vec![0usize; cols.len()];
                    loop {
                        let mut y = x.to_vec();
                        for (slot, &col) in cols.iter().enumerate() {
                            y[col - 1] = data.row(idx[slot])[col - 1];
                        }
                        sum += inner.evaluate(&y)?;
                        let mut carry = 0;
                        while carry < idx.len() {
                            idx[carry] += 1;
                            if idx[carry] < n {
                                break;
                            }
                            idx[carry] = 0;
                            carry += 1;
                        }
                        if carry == idx.len() {
                            break;
                        }
                    }
                    Ok(sum / total as f64)
                })?;
                model.with_domain(removed_domain(f, t))
            } else {
                let rows = sample(
                    &ReferenceDistribution::ProductOfMarginals(data.clone()),
                    *mc_samples,
                    *seed,
                )?;
                averaged_over_rows(f, t, rows)
            }
        }
        RemovalFamily::Uniform {
            bounds,
            mc_samples,
            seed,
        } => {
            let rows = sample(
                &ReferenceDistribution::UniformBox(bounds.clone()),
                *mc_samples,
                *seed,
            )?;
            averaged_over_rows(f, t, rows)
        }
        RemovalFamily::ConditionalGaussian {
            spec,
            mc_samples,
            seed,
        } => {
            // One shared standard-normal table; each T reads its own columns.
            let mut rng = rng_stream(*seed, 0);
            let noise: Vec<Vec<f64>> = (0..*mc_samples)
                .map(|_| (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
                .collect();
            let spec = spec.clone();
            let inner = f.clone();
            let t = *t;
            let t_players: Vec<usize> = t.players().collect();
            let model = FunctionModel::new(d, move |x| {
                let known = t.complement();
                let x_known: Vec<f64> = known.players().map(|p| x[p - 1]).collect();
                let cond = gaussian_conditional(&spec, &known, &x_known)?;
                let a = cond.transform();
                let mu = cond.mean_vector();
                let mut sum = 0.0;
                for row in &noise {
                    let z = DVector::from_fn(t_players.len(), |i, _| row[t_players[i] - 1]);
                    let draw = &mu + &a * z;
                    let mut y = x.to_vec();
                    for (i, &p) in t_players.iter().enumerate() {
                        y[p - 1] = draw[i];
                    }
                    sum += inner.evaluate(&y)?;
                }
                Ok(sum / noise.len() as f64)
            })?;
            model.with_domain(removed_domain(f, &t))
        }
        RemovalFamily::Retraining { data, learner } => {
            if t.is_full() {
                let y = data.labels().expect("validated: labels present");
                let mean = y.iter().sum::<f64>() / y.len() as f64;
                return FunctionModel::constant(d, mean);
            }
            let kept = t.complement();
            let sub = data.column_subset(&kept)?;
            let model = learner.fit(&sub)?;
            let kept_players: Vec<usize> = kept.players().collect();
            FunctionModel::new(d, move |x| {
                let xs: Vec<f64> = kept_players.iter().map(|&p| x[p - 1]).collect();
                model.evaluate(&xs)
            })
        }
        RemovalFamily::Trivial { .. } => FunctionModel::zero(d),
    }
}

// ---------------------------------------------------------------------------
// BehaviourMapping
// ---------------------------------------------------------------------------

/// Loss functions for the loss-based behaviour mappings.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    Squared,
    CrossEntropy,
}

impl Loss {
    pub fn value(&self, prediction: f64, target: f64) -> Result<f64> {
        match self {
            Loss::Squared => Ok((prediction - target).powi(2)),
            Loss::CrossEntropy => {
                if !(prediction > 0.0 && prediction < 1.0) {
                    return Err(Error::Numeric(format!(
                        "cross-entropy needs predictions strictly inside (0,1), got {prediction}"
                    )));
                }
                Ok(-(target * prediction.ln() + (1.0 - target) * (1.0 - prediction).ln()))
            }
        }
    }
}

/// The mapping Φ from a model to the behaviour whose change is attributed.
#[derive(Clone, Debug)]
pub enum BehaviourMapping {
    /// Attribute the model output itself.
    Identity,
    /// Attribute −loss(f(x), y(x)) for a pointwise labeler y.
    LocalLoss { loss: Loss, labeler: FunctionModel },
    /// Attribute the negative average loss over a labeled dataset
    /// (a global mapping: the result is a constant function).
    DatasetLoss { loss: Loss, data: Dataset },
    /// Attribute the variance of the model output under a reference
    /// distribution (a global mapping).
    Variance {
        reference: ReferenceDistribution,
        mc_samples: usize,
        seed: u64,
        exact: bool,
    },
}

fn intersect_domains(a: &[Interval], b: &[Interval]) -> Vec<Interval> {
    a.iter()
        .zip(b)
        .map(|(p, q)| Interval {
            lo: p.lo.max(q.lo),
            hi: p.hi.min(q.hi),
        })
        .collect()
}

/// Applies Φ to f. Global mappings (dataset loss, variance) evaluate f
/// eagerly and return constant functions.
pub fn apply_behaviour(phi: &BehaviourMapping, f: &FunctionModel) -> Result<FunctionModel> {
    match phi {
        BehaviourMapping::Identity => Ok(f.clone()),
        BehaviourMapping::LocalLoss { loss, labeler } => {
            if labeler.d() != f.d() {
                return Err(Error::DimensionMismatch(format!(
                    "labeler over {} variables for a {}-variable model",
                    labeler.d(),
                    f.d()
                )));
            }
            let domain = intersect_domains(f.domain(), labeler.domain());
            let inner = f.clone();
            let labeler = labeler.clone();
            let loss = *loss;
            let model = FunctionModel::new(f.d(), move |x| {
                let p = inner.evaluate(x)?;
                let y = labeler.evaluate(x)?;
                Ok(-loss.value(p, y)?)
            })?;
            model.with_domain(domain)
        }
        BehaviourMapping::DatasetLoss { loss, data } => {
            if data.d() != f.d() {
                return Err(Error::DimensionMismatch(format!(
                    "{}-column dataset for a {}-variable model",
                    data.d(),
                    f.d()
                )));
            }
            let y = data.labels().ok_or_else(|| {
                Error::Dataset("the dataset-loss mapping needs a label column".into())
            })?;
            let mut total = 0.0;
            for (i, row) in data.rows().iter().enumerate() {
                total += loss.value(f.evaluate(row)?, y[i])?;
            }
            FunctionModel::constant(f.d(), -total / data.n() as f64)
        }
        BehaviourMapping::Variance {
            reference,
            mc_samples,
            seed,
            exact,
        } => {
            if reference.d() != f.d() {
                return Err(Error::DimensionMismatch(format!(
                    "{}-dimensional reference for a {}-variable model",
                    reference.d(),
                    f.d()
                )));
            }
            let rows = if *exact {
                reference.exact_support().ok_or_else(|| {
                    Error::Config(
                        "exact variance is available only for empirical and \
                         point-mass references"
                            .into(),
                    )
                })?
            } else {
                if *mc_samples == 0 {
                    return Err(Error::Config(
                        "mc_samples must be >= 1 when exact enumeration is off".into(),
                    ));
                }
                sample(reference, *mc_samples, *seed)?
            };
            let vals = rows
                .iter()
                .map(|r| f.evaluate(r))
                .collect::<Result<Vec<f64>>>()?;
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            FunctionModel::constant(f.d(), var)
        }
    }
}

// ---------------------------------------------------------------------------
// Independence probing
// ---------------------------------------------------------------------------

/// The box a coordinate is probed in: the domain interval when bounded,
/// otherwise a width-4 window ([−2, 2] for fully unbounded coordinates).
pub(crate) fn probe_range(iv: &Interval) -> (f64, f64) {
    match (iv.lo.is_finite(), iv.hi.is_finite()) {
        (true, true) => (iv.lo, iv.hi),
        (true, false) => (iv.lo, iv.lo + 4.0),
        (false, true) => (iv.hi - 4.0, iv.hi),
        (false, false) => (-2.0, 2.0),
    }
}

/// Seeded uniform probe points inside the per-coordinate probe ranges,
/// drawn row-major.
pub fn probe_points(domain: &[Interval], count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng_stream(seed, 0);
    (0..count)
        .map(|_| domain.iter().map(|iv| draw_in(&mut rng, iv)).collect())
        .collect()
}

pub(crate) fn draw_in(rng: &mut impl Rng, iv: &Interval) -> f64 {
    let (lo, hi) = probe_range(iv);
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..hi)
    }
}

/// A probe pair on which |f(x) − f(x′)| was largest, with x′ differing from
/// x only on the tested coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct IndependenceWitness {
    pub x: Vec<f64>,
    pub x_perturbed: Vec<f64>,
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndependenceCheck {
    pub independent: bool,
    pub max_deviation: f64,
    /// Present exactly when `independent` is false.
    pub witness: Option<IndependenceWitness>,
}

/// Probes whether f is independent of the coordinates in T: samples points,
/// redraws only the T-coordinates, and reports whether every |Δf| ≤ eps.
pub fn is_independent_of(
    f: &FunctionModel,
    t: &Coalition,
    probes: usize,
    seed: u64,
    eps: f64,
) -> Result<IndependenceCheck> {
    if t.d() != f.d() {
        return Err(Error::DimensionMismatch(format!(
            "coalition over [{}] for a {}-variable function",
            t.d(),
            f.d()
        )));
    }
    if probes == 0 {
        return Err(Error::Config("independence probing needs probes >= 1".into()));
    }
    let mut rng = rng_stream(seed, 0);
    let mut max_deviation = 0.0;
    let mut witness = None;
    for _ in 0..probes {
        let x: Vec<f64> = f.domain().iter().map(|iv| draw_in(&mut rng, iv)).collect();
        let mut xp = x.clone();
        for p in t.players() {
            xp[p - 1] = draw_in(&mut rng, &f.domain()[p - 1]);
        }
        let dev = (f.evaluate(&x)? - f.evaluate(&xp)?).abs();
        if dev > max_deviation {
            max_deviation = dev;
            witness = Some(IndependenceWitness {
                x,
                x_perturbed: xp,
                deviation: dev,
            });
        }
    }
    let independent = max_deviation <= eps;
    Ok(IndependenceCheck {
        independent,
        max_deviation,
        witness: if independent { None } else { witness },
    })
}

// ---------------------------------------------------------------------------
// JSON configuration
// ---------------------------------------------------------------------------

/// Files and defaults that path-valued configs resolve against.
#[derive(Clone, Copy, Default)]
pub struct BuildContext<'a> {
    /// Fallback dataset for configs that omit their "data" path.
    pub dataset: Option<&'a Dataset>,
}

fn resolve_dataset(path: &Option<PathBuf>, ctx: &BuildContext) -> Result<Dataset> {
    match path {
        Some(p) => Dataset::from_csv_path_auto(p),
        None => ctx.dataset.cloned().ok_or_else(|| {
            Error::Config("this configuration needs a dataset: set \"data\" or pass one".into())
        }),
    }
}

fn bounds_to_intervals(bounds: &[[f64; 2]]) -> Result<Vec<Interval>> {
    bounds.iter().map(|b| Interval::new(b[0], b[1])).collect()
}

fn default_mc_samples() -> usize {
    100
}

/// Serializable description of a reference distribution.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceConfig {
    Empirical {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        data: Option<PathBuf>,
    },
    ProductOfMarginals {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        data: Option<PathBuf>,
    },
    UniformBox { bounds: Vec<[f64; 2]> },
    Gaussian { mean: Vec<f64>, cov: Vec<Vec<f64>> },
    PointMass { point: Vec<f64> },
}

impl ReferenceConfig {
    pub fn build(&self, ctx: &BuildContext) -> Result<ReferenceDistribution> {
        let dist = match self {
            ReferenceConfig::Empirical { data } => {
                ReferenceDistribution::Empirical(resolve_dataset(data, ctx)?)
            }
            ReferenceConfig::ProductOfMarginals { data } => {
                ReferenceDistribution::ProductOfMarginals(resolve_dataset(data, ctx)?)
            }
            ReferenceConfig::UniformBox { bounds } => {
                ReferenceDistribution::UniformBox(bounds_to_intervals(bounds)?)
            }
            ReferenceConfig::Gaussian { mean, cov } => {
                ReferenceDistribution::Gaussian(GaussianSpec::new(mean.clone(), cov.clone())?)
            }
            ReferenceConfig::PointMass { point } => ReferenceDistribution::PointMass(point.clone()),
        };
        dist.validate()?;
        Ok(dist)
    }
}

/// Serializable description of a removal family.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RemovalConfig {
    Anchored {
        baseline: Vec<f64>,
    },
    Marginal {
        reference: ReferenceConfig,
        #[serde(default = "default_mc_samples")]
        mc_samples: usize,
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        exact: bool,
    },
    ProductMarginals {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        data: Option<PathBuf>,
        #[serde(default = "default_mc_samples")]
        mc_samples: usize,
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        exact: bool,
    },
    Uniform {
        bounds: Vec<[f64; 2]>,
        #[serde(default = "default_mc_samples")]
        mc_samples: usize,
        #[serde(default)]
        seed: u64,
    },
    ConditionalGaussian {
        mean: Vec<f64>,
        cov: Vec<Vec<f64>>,
        #[serde(default = "default_mc_samples")]
        mc_samples: usize,
        #[serde(default)]
        seed: u64,
    },
    Retraining {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        data: Option<PathBuf>,
        #[serde(default)]
        learner: Learner,
    },
    Trivial {
        d: usize,
    },
}

impl RemovalConfig {
    /// Builds the family, checking it describes functions over d variables.
    pub fn build(&self, d: usize, ctx: &BuildContext) -> Result<RemovalFamily> {
        let family = match self {
            RemovalConfig::Anchored { baseline } => RemovalFamily::Anchored {
                baseline: baseline.clone(),
            },
            RemovalConfig::Marginal {
                reference,
                mc_samples,
                seed,
                exact,
            } => RemovalFamily::Marginal {
                reference: reference.build(ctx)?,
                mc_samples: *mc_samples,
                seed: *seed,
                exact: *exact,
            },
            RemovalConfig::ProductMarginals {
                data,
                mc_samples,
                seed,
                exact,
            } => RemovalFamily::ProductMarginals {
                data: resolve_dataset(data, ctx)?,
                mc_samples: *mc_samples,
                seed: *seed,
                exact: *exact,
            },
            RemovalConfig::Uniform {
                bounds,
                mc_samples,
                seed,
            } => RemovalFamily::Uniform {
                bounds: bounds_to_intervals(bounds)?,
                mc_samples: *mc_samples,
                seed: *seed,
            },
            RemovalConfig::ConditionalGaussian {
                mean,
                cov,
                mc_samples,
                seed,
            } => RemovalFamily::ConditionalGaussian {
                spec: GaussianSpec::new(mean.clone(), cov.clone())?,
                mc_samples: *mc_samples,
                seed: *seed,
            },
            RemovalConfig::Retraining { data, learner } => RemovalFamily::Retraining {
                data: resolve_dataset(data, ctx)?,
                learner: *learner,
            },
            RemovalConfig::Trivial { d } => RemovalFamily::Trivial { d: *d },
        };
        family.validate()?;
        if family.d() != d {
            return Err(Error::Config(format!(
                "removal configuration is over {} variables, expected {d}",
                family.d()
            )));
        }
        Ok(family)
    }
}

/// Serializable description of a behaviour mapping.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BehaviourConfig {
    Identity,
    LocalLoss {
        loss: Loss,
        /// Expression over x1..xd giving the target y(x).
        labeler: String,
    },
    DatasetLoss {
        loss: Loss,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        data: Option<PathBuf>,
    },
    Variance {
        reference: ReferenceConfig,
        #[serde(default = "default_mc_samples")]
        mc_samples: usize,
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        exact: bool,
    },
}

impl BehaviourConfig {
    pub fn build(&self, d: usize, ctx: &BuildContext) -> Result<BehaviourMapping> {
        match self {
            BehaviourConfig::Identity => Ok(BehaviourMapping::Identity),
            BehaviourConfig::LocalLoss { loss, labeler } => Ok(BehaviourMapping::LocalLoss {
                loss: *loss,
                labeler: FunctionModel::parse(labeler, d)?,
            }),
            BehaviourConfig::DatasetLoss { loss, data } => {
                let data = resolve_dataset(data, ctx)?;
                if data.labels().is_none() {
                    return Err(Error::Config(
                        "the dataset-loss mapping needs a labeled dataset (trailing y column)"
                            .into(),
                    ));
                }
                if data.d() != d {
                    return Err(Error::Config(format!(
                        "dataset has {} feature columns, expected {d}",
                        data.d()
                    )));
                }
                Ok(BehaviourMapping::DatasetLoss { loss: *loss, data })
            }
            BehaviourConfig::Variance {
                reference,
                mc_samples,
                seed,
                exact,
            } => {
                let reference = reference.build(ctx)?;
                if reference.d() != d {
                    return Err(Error::Config(format!(
                        "reference is {}-dimensional, expected {d}",
                        reference.d()
                    )));
                }
                Ok(BehaviourMapping::Variance {
                    reference,
                    mc_samples: *mc_samples,
                    seed: *seed,
                    exact: *exact,
                })
            }
        }
    }
}
