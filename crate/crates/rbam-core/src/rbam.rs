//! Attribution methods assembled from three choices: a behaviour mapping Φ
//! (what aspect of the model is explained), a removal family {P_T} (how
//! features are deleted), and aggregation coefficients (how the removed-model
//! behaviours combine into one score per coalition):
//!
//!   m(f, S)(x) = Σ_{T⊆[d]} α_T^S · Φ(P_T(f))(x)
//!
//! Every method also acts on the pointwise cooperative game
//! v(S) = Φ(P_{S̄}(f))(x) − Φ(P_{[d]}(f))(x); coefficient tables in
//! sign-flip form (α_T^S = −α_{T∪i}^S for i ∈ S) are equivalently weighted
//! sums of discrete derivatives β_T^S·Δ_S v(T) with β_T^S = α_{comp(T∪S)}^S,
//! and — for identity Φ — weighted sums of decomposition components
//! Σ β̄_T^S·g_{T∪S}(f) with β̄_T^S = Σ_{T⊆U} β_U^S.

use crate::cad::{cad_component, MAX_DECOMPOSITION_PLAYERS};
use crate::coalition::{all_coalitions, apply_permutation, subsets_of, Coalition, Permutation};
use crate::distributions::{Dataset, GaussianSpec, ReferenceDistribution};
use crate::exprfn::FunctionModel;
use crate::game::CooperativeGame;
use crate::indices::binomial;
use crate::removal::{
    apply_behaviour, probe_points, remove, BehaviourConfig, BehaviourMapping, BuildContext,
    Learner, Loss, RemovalConfig, RemovalFamily,
};
use crate::{exec, Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

// ---------------------------------------------------------------------------
// Aggregation schemes
// ---------------------------------------------------------------------------

/// Named coefficient families. All are generated lazily per (S, T); no 4^d
/// table is materialized.
#[derive(Clone, Debug, PartialEq)]
pub enum PresetAggregation {
    /// Order-1 weighted marginal contributions with weights 1/(d·C(d−1,|T|)).
    Shapley,
    /// Order-1 uniform marginal contributions with weight 2^{1−d}.
    Banzhaf,
    /// Order-k index: Δ_S v(∅) below the order, (k/d)·C(d−1,|T|)^{-1}
    /// weights at the order.
    Stii { k: usize },
    /// Order-k index with weights |S|/((|S|+|T|)·C(d,|S|+|T|)).
    Cii { k: usize },
    /// Order-k index with weights 2^{−(d−|S|)}.
    Bii { k: usize },
    /// Remove one feature from the full input: β_T^i = 1 iff T = [d]∖i.
    Pfi,
    /// Include one feature starting from nothing: β_T^i = 1 iff T = ∅.
    Univariate,
    /// Average output change over the removal patches covering each feature:
    /// α_∅^i = 1, α_T^i = −1/n_i for patches T ∋ i, where n_i counts them.
    Occlusion { patches: Vec<Coalition> },
}

impl PresetAggregation {
    pub fn order(&self) -> usize {
        match self {
            PresetAggregation::Shapley
            | PresetAggregation::Banzhaf
            | PresetAggregation::Pfi
            | PresetAggregation::Univariate
            | PresetAggregation::Occlusion { .. } => 1,
            PresetAggregation::Stii { k }
            | PresetAggregation::Cii { k }
            | PresetAggregation::Bii { k } => *k,
        }
    }
}

/// How per-removal behaviours are combined into one attribution per
/// coalition. `Explicit` stores removal-indexed coefficients α_T^S sparsely
/// (absent ⇒ 0); `DerivativeForm` stores game-derivative weights β_T^S for
/// T ⊆ [d]∖S; `Cardinal` stores weights depending only on |S| and |T|.
#[derive(Clone, Debug, PartialEq)]
pub enum AggregationScheme {
    Explicit {
        order: usize,
        /// (S bits, T bits) → α_T^S.
        alpha: BTreeMap<(u32, u32), f64>,
    },
    DerivativeForm {
        order: usize,
        /// (S bits, T bits) → β_T^S with T disjoint from S.
        beta: BTreeMap<(u32, u32), f64>,
    },
    Cardinal {
        d: usize,
        order: usize,
        /// beta[s−1][t] = β_t^s for s = 1..=order, t = 0..=d−s.
        beta: Vec<Vec<f64>>,
    },
    Preset(PresetAggregation),
}

impl AggregationScheme {
    /// Highest coalition size that can receive a nonzero attribution.
    pub fn order(&self) -> usize {
        match self {
            AggregationScheme::Explicit { order, .. }
            | AggregationScheme::DerivativeForm { order, .. }
            | AggregationScheme::Cardinal { order, .. } => *order,
            AggregationScheme::Preset(p) => p.order(),
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        let full = (1u32 << d) - 1;
        match self {
            AggregationScheme::Explicit { order, alpha } => {
                for &(s, t) in alpha.keys() {
                    if s > full || t > full {
                        return Err(Error::Config(format!(
                            "coefficient key ({s:#b}, {t:#b}) outside [{d}]"
                        )));
                    }
                    if (s.count_ones() as usize) > *order {
                        return Err(Error::Config(format!(
                            "coefficient for a size-{} coalition in an order-{order} table",
                            s.count_ones()
                        )));
                    }
                }
            }
            AggregationScheme::DerivativeForm { order, beta } => {
                for &(s, t) in beta.keys() {
                    if s > full || t > full {
                        return Err(Error::Config(format!(
                            "coefficient key ({s:#b}, {t:#b}) outside [{d}]"
                        )));
                    }
                    if s & t != 0 {
                        return Err(Error::Config(
                            "derivative weights need T disjoint from S".into(),
                        ));
                    }
                    if (s.count_ones() as usize) > *order {
                        return Err(Error::Config(format!(
                            "coefficient for a size-{} coalition in an order-{order} table",
                            s.count_ones()
                        )));
                    }
                }
            }
            AggregationScheme::Cardinal {
                d: dd,
                order,
                beta,
            } => {
                if *dd != d {
                    return Err(Error::DimensionMismatch(format!(
                        "cardinal weights declared for d={dd}, used with d={d}"
                    )));
                }
                if *order == 0 || *order > d {
                    return Err(Error::Config(format!("order {order} outside 1..={d}")));
                }
                if beta.len() != *order {
                    return Err(Error::Config(format!(
                        "cardinal table has {} rows, expected {order}",
                        beta.len()
                    )));
                }
                for (row, weights) in beta.iter().enumerate() {
                    let s = row + 1;
                    if weights.len() != d - s + 1 {
                        return Err(Error::Config(format!(
                            "cardinal row for |S|={s} has {} weights, expected {}",
                            weights.len(),
                            d - s + 1
                        )));
                    }
                    if weights.iter().any(|w| !w.is_finite()) {
                        return Err(Error::Config("non-finite cardinal weight".into()));
                    }
                }
            }
            AggregationScheme::Preset(p) => match p {
                PresetAggregation::Stii { k }
                | PresetAggregation::Cii { k }
                | PresetAggregation::Bii { k } => {
                    if *k == 0 || *k > d {
                        return Err(Error::Config(format!("order {k} outside 1..={d}")));
                    }
                }
                PresetAggregation::Occlusion { patches } => {
                    if patches.is_empty() {
                        return Err(Error::Config("occlusion needs at least one patch".into()));
                    }
                    for patch in patches {
                        if patch.d() != d {
                            return Err(Error::DimensionMismatch(format!(
                                "patch over [{}] in a d={d} scheme",
                                patch.d()
                            )));
                        }
                        if patch.is_empty() {
                            return Err(Error::Config("empty occlusion patch".into()));
                        }
                    }
                }
                _ => {}
            },
        }
        Ok(())
    }

    /// Weights that depend only on (|S|, |T|), as β_t^s, when the scheme has
    /// that structure.
    fn cardinal_weight(&self, d: usize, s: usize, t: usize) -> Option<f64> {
        if s == 0 || s > self.order() || s + t > d {
            return None;
        }
        match self {
            AggregationScheme::Cardinal { beta, .. } => Some(beta[s - 1][t]),
            AggregationScheme::Preset(p) => match p {
                PresetAggregation::Shapley => Some(1.0 / (d as f64 * binomial(d - 1, t))),
                PresetAggregation::Banzhaf => Some(1.0 / (1u64 << (d - 1)) as f64),
                PresetAggregation::Stii { k } => Some(if s < *k {
                    if t == 0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    *k as f64 / d as f64 / binomial(d - 1, t)
                }),
                PresetAggregation::Cii { .. } => {
                    Some(s as f64 / (s + t) as f64 / binomial(d, s + t))
                }
                PresetAggregation::Bii { .. } => Some(1.0 / (1u64 << (d - s)) as f64),
                PresetAggregation::Pfi => Some(if t == d - 1 { 1.0 } else { 0.0 }),
                PresetAggregation::Univariate => Some(if t == 0 { 1.0 } else { 0.0 }),
                PresetAggregation::Occlusion { patches } => {
                    if all_singletons(patches) {
                        Some(if t == d - 1 { 1.0 } else { 0.0 })
                    } else {
                        None
                    }
                }
            },
            _ => None,
        }
    }

    /// True when the scheme is a weighted sum of game derivatives by
    /// construction (so the sign-flip identity on α holds identically).
    pub fn has_derivative_form(&self) -> bool {
        match self {
            AggregationScheme::Explicit { .. } => false,
            AggregationScheme::DerivativeForm { .. } | AggregationScheme::Cardinal { .. } => true,
            AggregationScheme::Preset(PresetAggregation::Occlusion { patches }) => {
                all_singletons(patches)
            }
            AggregationScheme::Preset(_) => true,
        }
    }

    /// β_T^S, the weight of Δ_S v(T), for T ⊆ [d]∖S. None when the scheme
    /// has no derivative form.
    pub fn derivative_weight(&self, s: &Coalition, t: &Coalition) -> Result<Option<f64>> {
        let d = check_pair(s, t)?;
        if !s.is_disjoint_from(t) {
            return Err(Error::Coalition(format!(
                "derivative weight needs disjoint coalitions, got S={s} T={t}"
            )));
        }
        if s.size() > self.order() || s.is_empty() {
            return Ok(Some(0.0));
        }
        match self {
            AggregationScheme::Explicit { .. } => Ok(None),
            AggregationScheme::DerivativeForm { beta, .. } => {
                Ok(Some(*beta.get(&(s.bits(), t.bits())).unwrap_or(&0.0)))
            }
            _ => Ok(self.cardinal_weight(d, s.size(), t.size())),
        }
    }

    /// Removal-indexed coefficient α_T^S: the weight of Φ(P_T(f))(x) in the
    /// attribution for S. Derivative-form schemes expand through
    /// α_T^S = (−1)^{|S∩T|} β_{comp(S∪T)}^S.
    pub fn alpha(&self, s: &Coalition, t: &Coalition) -> Result<f64> {
        check_pair(s, t)?;
        if s.size() > self.order() {
            return Ok(0.0);
        }
        match self {
            AggregationScheme::Explicit { alpha, .. } => {
                Ok(*alpha.get(&(s.bits(), t.bits())).unwrap_or(&0.0))
            }
            AggregationScheme::Preset(PresetAggregation::Occlusion { patches }) => {
                if s.size() != 1 {
                    return Ok(0.0);
                }
                let i = s.players().next().expect("singleton");
                if t.is_empty() {
                    return Ok(1.0);
                }
                if t.contains(i) && patches.contains(t) {
                    let n_i = patches.iter().filter(|p| p.contains(i)).count();
                    return Ok(-1.0 / n_i as f64);
                }
                Ok(0.0)
            }
            _ => {
                let rest = t.complement().intersection(&s.complement())?;
                let weight = self
                    .derivative_weight(s, &rest)?
                    .expect("non-explicit schemes have derivative weights");
                let sign = if s.intersection(t)?.size() % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                Ok(sign * weight)
            }
        }
    }

    /// Collapsed component weight β̄_T^S = Σ_{T⊆U⊆[d]∖S} β_U^S. Constant-time
    /// for the order-1 marginal-average scheme, linear for cardinal weights,
    /// and a superset sum for general derivative tables.
    pub fn component_weight(&self, s: &Coalition, t: &Coalition) -> Result<f64> {
        let d = check_pair(s, t)?;
        if !s.is_disjoint_from(t) {
            return Err(Error::Coalition(format!(
                "component weight needs disjoint coalitions, got S={s} T={t}"
            )));
        }
        if s.is_empty() || s.size() > self.order() {
            return Ok(0.0);
        }
        match self {
            AggregationScheme::Preset(PresetAggregation::Shapley) => {
                Ok(1.0 / (t.size() as f64 + 1.0))
            }
            AggregationScheme::DerivativeForm { .. } => {
                let free = s.complement().intersection(&t.complement())?;
                let mut acc = 0.0;
                for extra in subsets_of(&free) {
                    acc += self
                        .derivative_weight(s, &t.union(&extra)?)?
                        .expect("derivative form");
                }
                Ok(acc)
            }
            AggregationScheme::Explicit { .. } => Err(Error::Config(
                "component weights need a derivative-form aggregation scheme".into(),
            )),
            _ => {
                let (ss, tt) = (s.size(), t.size());
                let free = d - ss - tt;
                let mut acc = 0.0;
                for extra in 0..=free {
                    let w = self.cardinal_weight(d, ss, tt + extra).ok_or_else(|| {
                        Error::Config(
                            "component weights need a derivative-form aggregation scheme".into(),
                        )
                    })?;
                    acc += binomial(free, extra) * w;
                }
                Ok(acc)
            }
        }
    }

    /// Support of S coalitions that can carry nonzero coefficients.
    fn support(&self, d: usize) -> Result<Vec<Coalition>> {
        match self {
            AggregationScheme::Explicit { alpha, .. } => {
                let bits: BTreeSet<u32> = alpha.keys().map(|&(s, _)| s).collect();
                bits.into_iter()
                    .map(|b| Coalition::from_bits(b, d))
                    .collect()
            }
            AggregationScheme::DerivativeForm { beta, .. } => {
                let bits: BTreeSet<u32> = beta.keys().map(|&(s, _)| s).collect();
                bits.into_iter()
                    .map(|b| Coalition::from_bits(b, d))
                    .collect()
            }
            _ => {
                let order = self.order();
                Ok(all_coalitions(d)?
                    .filter(|s| !s.is_empty() && s.size() <= order)
                    .collect())
            }
        }
    }
}

fn all_singletons(patches: &[Coalition]) -> bool {
    patches.iter().all(|p| p.size() == 1)
}

fn check_pair(s: &Coalition, t: &Coalition) -> Result<usize> {
    if s.d() != t.d() {
        return Err(Error::DimensionMismatch(format!(
            "coalitions over [{}] and [{}]",
            s.d(),
            t.d()
        )));
    }
    Ok(s.d())
}

/// The sign-flip identity α_T^S = −α_{T∪i}^S for every i ∈ S, T ∌ i. Holds
/// identically for derivative-form schemes; checked coefficient-by-
/// coefficient otherwise. Returns the first violation.
pub fn sign_flip_witness(
    scheme: &AggregationScheme,
    d: usize,
    tolerance: f64,
) -> Result<Option<SignFlipWitness>> {
    scheme.validate(d)?;
    if scheme.has_derivative_form() {
        return Ok(None);
    }
    for s in scheme.support(d)? {
        if s.is_empty() {
            continue;
        }
        for i in s.players() {
            for t in all_coalitions(d)? {
                if t.contains(i) {
                    continue;
                }
                let a = scheme.alpha(&s, &t)?;
                let b = scheme.alpha(&s, &t.insert(i)?)?;
                if (a + b).abs() > tolerance {
                    return Ok(Some(SignFlipWitness {
                        s,
                        t,
                        player: i,
                        alpha: a,
                        alpha_with: b,
                    }));
                }
            }
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SignFlipWitness {
    pub s: Coalition,
    pub t: Coalition,
    pub player: usize,
    pub alpha: f64,
    pub alpha_with: f64,
}

// ---------------------------------------------------------------------------
// Method
// ---------------------------------------------------------------------------

/// A fully configured attribution method.
#[derive(Clone)]
pub struct Method {
    pub behaviour: BehaviourMapping,
    pub removal: RemovalFamily,
    pub aggregation: AggregationScheme,
    /// Coalitions larger than this receive attribution 0.
    pub order: usize,
}

fn behaviour_d(phi: &BehaviourMapping) -> Option<usize> {
    match phi {
        BehaviourMapping::Identity => None,
        BehaviourMapping::LocalLoss { labeler, .. } => Some(labeler.d()),
        BehaviourMapping::DatasetLoss { data, .. } => Some(data.d()),
        BehaviourMapping::Variance { reference, .. } => Some(reference.d()),
    }
}

impl Method {
    pub fn new(
        behaviour: BehaviourMapping,
        removal: RemovalFamily,
        aggregation: AggregationScheme,
    ) -> Result<Self> {
        let order = aggregation.order();
        let method = Method {
            behaviour,
            removal,
            aggregation,
            order,
        };
        method.validate()?;
        Ok(method)
    }

    pub fn with_order(mut self, order: usize) -> Self {
        self.order = order;
        self
    }

    pub fn d(&self) -> usize {
        self.removal.d()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.removal.d();
        self.removal.validate()?;
        self.aggregation.validate(d)?;
        if let Some(bd) = behaviour_d(&self.behaviour) {
            if bd != d {
                return Err(Error::DimensionMismatch(format!(
                    "behaviour mapping over [{bd}] with a removal family over [{d}]"
                )));
            }
        }
        Ok(())
    }

    /// The same method with all Monte-Carlo draw streams re-seeded. Families
    /// and behaviours without a seed are unchanged.
    pub fn with_seed(&self, seed: u64) -> Method {
        let mut m = self.clone();
        match &mut m.removal {
            RemovalFamily::Marginal { seed: s, .. }
            | RemovalFamily::ProductMarginals { seed: s, .. }
            | RemovalFamily::Uniform { seed: s, .. }
            | RemovalFamily::ConditionalGaussian { seed: s, .. } => *s = seed,
            _ => {}
        }
        if let BehaviourMapping::Variance { seed: s, .. } = &mut m.behaviour {
            *s = seed;
        }
        m
    }

    /// FNV-1a hash of the structural description, for report provenance.
    pub fn method_hash(&self) -> String {
        format!("{:016x}", fnv1a64(self.descriptor().as_bytes()))
    }

    fn descriptor(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "order={};", self.order);
        describe_family(&mut out, &self.removal);
        describe_behaviour(&mut out, &self.behaviour);
        describe_aggregation(&mut out, &self.aggregation);
        out
    }
}

/// FNV-1a hash of a byte string; the stable 64-bit digest behind
/// [`Method::method_hash`] and the CLI's embedded config hashes.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn push_f64(out: &mut String, v: f64) {
    let _ = write!(out, "{:016x},", v.to_bits());
}

fn describe_dataset(out: &mut String, data: &Dataset) {
    let _ = write!(out, "data[{}x{}](", data.n(), data.d());
    for row in data.rows() {
        for &v in row {
            push_f64(out, v);
        }
    }
    if let Some(labels) = data.labels() {
        out.push('|');
        for &v in labels {
            push_f64(out, v);
        }
    }
    out.push(')');
}

fn describe_gaussian(out: &mut String, spec: &GaussianSpec) {
    let _ = write!(out, "gaussian[{}](", spec.d());
    for &v in &spec.mean {
        push_f64(out, v);
    }
    out.push('|');
    for row in &spec.cov {
        for &v in row {
            push_f64(out, v);
        }
    }
    out.push(')');
}

fn describe_reference(out: &mut String, reference: &ReferenceDistribution) {
    match reference {
        ReferenceDistribution::Empirical(data) => {
            out.push_str("empirical:");
            describe_dataset(out, data);
        }
        ReferenceDistribution::ProductOfMarginals(data) => {
            out.push_str("product_of_marginals:");
            describe_dataset(out, data);
        }
        ReferenceDistribution::UniformBox(bounds) => {
            out.push_str("uniform_box:");
            for iv in bounds {
                push_f64(out, iv.lo);
                push_f64(out, iv.hi);
            }
        }
        ReferenceDistribution::Gaussian(spec) => {
            out.push_str("gaussian:");
            describe_gaussian(out, spec);
        }
        ReferenceDistribution::PointMass(point) => {
            out.push_str("point_mass:");
            for &v in point {
                push_f64(out, v);
            }
        }
    }
    out.push(';');
}

fn describe_family(out: &mut String, family: &RemovalFamily) {
    match family {
        RemovalFamily::Anchored { baseline } => {
            out.push_str("removal=anchored:");
            for &v in baseline {
                push_f64(out, v);
            }
        }
        RemovalFamily::Marginal {
            reference,
            mc_samples,
            seed,
            exact,
        } => {
            let _ = write!(out, "removal=marginal[{mc_samples},{seed},{exact}]:");
            describe_reference(out, reference);
        }
        RemovalFamily::ProductMarginals {
            data,
            mc_samples,
            seed,
            exact,
        } => {
            let _ = write!(out, "removal=product_marginals[{mc_samples},{seed},{exact}]:");
            describe_dataset(out, data);
        }
        RemovalFamily::Uniform {
            bounds,
            mc_samples,
            seed,
        } => {
            let _ = write!(out, "removal=uniform[{mc_samples},{seed}]:");
            for iv in bounds {
                push_f64(out, iv.lo);
                push_f64(out, iv.hi);
            }
        }
        RemovalFamily::ConditionalGaussian {
            spec,
            mc_samples,
            seed,
        } => {
            let _ = write!(out, "removal=conditional_gaussian[{mc_samples},{seed}]:");
            describe_gaussian(out, spec);
        }
        RemovalFamily::Retraining { data, learner } => {
            let _ = write!(out, "removal=retraining[{learner:?}]:");
            describe_dataset(out, data);
        }
        RemovalFamily::Trivial { d } => {
            let _ = write!(out, "removal=trivial[{d}]");
        }
    }
    out.push(';');
}

fn describe_behaviour(out: &mut String, phi: &BehaviourMapping) {
    match phi {
        BehaviourMapping::Identity => out.push_str("behaviour=identity"),
        BehaviourMapping::LocalLoss { loss, labeler } => {
            let _ = write!(out, "behaviour=local_loss[{loss:?}]:");
            // Closures cannot be serialized; fingerprint the labeler by its
            // outputs on a fixed probe grid.
            for x in probe_points(labeler.domain(), 8, 0xA11CE) {
                push_f64(out, labeler.evaluate(&x).unwrap_or(f64::NAN));
            }
        }
        BehaviourMapping::DatasetLoss { loss, data } => {
            let _ = write!(out, "behaviour=dataset_loss[{loss:?}]:");
            describe_dataset(out, data);
        }
        BehaviourMapping::Variance {
            reference,
            mc_samples,
            seed,
            exact,
        } => {
            let _ = write!(out, "behaviour=variance[{mc_samples},{seed},{exact}]:");
            describe_reference(out, reference);
        }
    }
    out.push(';');
}

fn describe_aggregation(out: &mut String, scheme: &AggregationScheme) {
    match scheme {
        AggregationScheme::Explicit { order, alpha } => {
            let _ = write!(out, "aggregation=explicit[{order}]:");
            for (&(s, t), &v) in alpha {
                let _ = write!(out, "({s},{t})=");
                push_f64(out, v);
            }
        }
        AggregationScheme::DerivativeForm { order, beta } => {
            let _ = write!(out, "aggregation=derivative[{order}]:");
            for (&(s, t), &v) in beta {
                let _ = write!(out, "({s},{t})=");
                push_f64(out, v);
            }
        }
        AggregationScheme::Cardinal { d, order, beta } => {
            let _ = write!(out, "aggregation=cardinal[{d},{order}]:");
            for row in beta {
                for &v in row {
                    push_f64(out, v);
                }
                out.push('|');
            }
        }
        AggregationScheme::Preset(p) => {
            let _ = write!(out, "aggregation=preset:{p:?}");
        }
    }
    out.push(';');
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

fn check_eval_inputs(method: &Method, f: &FunctionModel, x: &[f64]) -> Result<usize> {
    let d = method.d();
    if f.d() != d {
        return Err(Error::DimensionMismatch(format!(
            "{}-variable function with a method over [{d}]",
            f.d()
        )));
    }
    if x.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "point of length {} with a method over [{d}]",
            x.len()
        )));
    }
    if d > MAX_DECOMPOSITION_PLAYERS {
        return Err(Error::PlayerCount(d));
    }
    Ok(d)
}

/// Φ(P_T(f))(x) for every T, indexed by coalition bits. One shared table
/// backs the direct, game, and report paths so all coefficients see the same
/// Monte-Carlo draws.
fn removal_values(
    phi: &BehaviourMapping,
    family: &RemovalFamily,
    f: &FunctionModel,
    x: &[f64],
) -> Result<Vec<f64>> {
    let d = family.d();
    all_coalitions(d)?
        .map(|t| apply_behaviour(phi, &remove(family, f, &t)?)?.evaluate(x))
        .collect()
}

fn game_from_removal_values(d: usize, vals: &[f64]) -> Result<(CooperativeGame, f64)> {
    let full = vals.len() - 1;
    let shift = vals[full];
    let values: Vec<f64> = (0..vals.len())
        .map(|s_bits| vals[full ^ s_bits] - shift)
        .collect();
    Ok((CooperativeGame::new(d, values)?, shift))
}

/// The cooperative game a method implicitly explains at x: worth of a
/// coalition S is the behaviour with everything outside S removed, shifted
/// so the empty coalition is worth 0.
pub fn pointwise_game(
    phi: &BehaviourMapping,
    family: &RemovalFamily,
    f: &FunctionModel,
    x: &[f64],
) -> Result<CooperativeGame> {
    let d = family.d();
    if f.d() != d || x.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "game over [{d}] needs a d={d} function and point, got f over [{}] and |x|={}",
            f.d(),
            x.len()
        )));
    }
    if d > MAX_DECOMPOSITION_PLAYERS {
        return Err(Error::PlayerCount(d));
    }
    let vals = removal_values(phi, family, f, x)?;
    Ok(game_from_removal_values(d, &vals)?.0)
}

/// One attribution from the shared removal-value table.
fn attribution_from_values(
    scheme: &AggregationScheme,
    order: usize,
    d: usize,
    vals: &[f64],
    s: &Coalition,
) -> Result<f64> {
    if s.size() > order {
        return Ok(0.0);
    }
    match scheme {
        AggregationScheme::Explicit { alpha, .. } => {
            let mut acc = 0.0;
            for (&(s_bits, t_bits), &a) in
                alpha.range((s.bits(), 0)..=(s.bits(), u32::MAX))
            {
                debug_assert_eq!(s_bits, s.bits());
                acc += a * vals[t_bits as usize];
            }
            Ok(acc)
        }
        AggregationScheme::Preset(PresetAggregation::Occlusion { .. }) => {
            let mut acc = 0.0;
            for t in all_coalitions(d)? {
                let a = scheme.alpha(s, &t)?;
                if a != 0.0 {
                    acc += a * vals[t.bits() as usize];
                }
            }
            Ok(acc)
        }
        _ => {
            let (game, _) = game_from_removal_values(d, vals)?;
            let mut acc = 0.0;
            for t in subsets_of(&s.complement()) {
                let beta = scheme
                    .derivative_weight(s, &t)?
                    .expect("non-explicit schemes have derivative weights");
                if beta != 0.0 {
                    acc += beta * game.discrete_derivative(s, &t)?;
                }
            }
            Ok(acc)
        }
    }
}

/// m(f, S)(x). Explicit tables sum behaviours over removal sets directly;
/// derivative-form schemes weight discrete derivatives of the pointwise
/// game. Coalitions above the method order score 0.
pub fn evaluate(method: &Method, f: &FunctionModel, s: &Coalition, x: &[f64]) -> Result<f64> {
    let d = check_eval_inputs(method, f, x)?;
    if s.d() != d {
        return Err(Error::DimensionMismatch(format!(
            "coalition over [{}] with a method over [{d}]",
            s.d()
        )));
    }
    if s.size() > method.order {
        return Ok(0.0);
    }
    let vals = removal_values(&method.behaviour, &method.removal, f, x)?;
    attribution_from_values(&method.aggregation, method.order, d, &vals, s)
}

/// An attribution computed by summing decomposition components, with
/// truncation metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct ComponentAttribution {
    pub value: f64,
    /// Number of components summed.
    pub used_components: usize,
    /// Number of components skipped by the order cutoff.
    pub dropped_components: usize,
    pub max_order: Option<usize>,
}

impl ComponentAttribution {
    pub fn truncated(&self) -> bool {
        self.dropped_components > 0
    }
}

/// m(f, S)(x) as the component sum Σ_{T⊆[d]∖S} β̄_T^S · g_{T∪S}(f)(x),
/// valid for identity behaviour and derivative-form aggregation. With
/// `max_order` set, components larger than that order are dropped and the
/// truncation is reported.
pub fn mc_attribution_via_components(
    method: &Method,
    f: &FunctionModel,
    s: &Coalition,
    x: &[f64],
    max_order: Option<usize>,
) -> Result<ComponentAttribution> {
    let d = check_eval_inputs(method, f, x)?;
    if s.d() != d {
        return Err(Error::DimensionMismatch(format!(
            "coalition over [{}] with a method over [{d}]",
            s.d()
        )));
    }
    if !matches!(method.behaviour, BehaviourMapping::Identity) {
        return Err(Error::Config(
            "component-sum attribution needs the identity behaviour mapping".into(),
        ));
    }
    if !method.aggregation.has_derivative_form() {
        return Err(Error::Config(
            "component-sum attribution needs a derivative-form aggregation scheme".into(),
        ));
    }
    if s.size() > method.order || s.is_empty() {
        return Ok(ComponentAttribution {
            value: 0.0,
            used_components: 0,
            dropped_components: 0,
            max_order,
        });
    }
    let cutoff = max_order.unwrap_or(d);
    let mut value = 0.0;
    let mut used = 0;
    let mut dropped = 0;
    for t in subsets_of(&s.complement()) {
        let target = t.union(s)?;
        if target.size() > cutoff {
            dropped += 1;
            continue;
        }
        let weight = method.aggregation.component_weight(s, &t)?;
        if weight != 0.0 {
            value += weight * cad_component(&method.removal, f, &target)?.evaluate(x)?;
        }
        used += 1;
    }
    Ok(ComponentAttribution {
        value,
        used_components: used,
        dropped_components: dropped,
        max_order,
    })
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

/// Ingredients for `preset`. Every field is optional; each preset reports
/// which ones it needs.
#[derive(Clone, Debug, Default)]
pub struct PresetParams {
    pub baseline: Option<Vec<f64>>,
    pub data: Option<Dataset>,
    pub gaussian: Option<GaussianSpec>,
    pub loss: Option<Loss>,
    pub learner: Option<Learner>,
    pub order: Option<usize>,
    pub patches: Option<Vec<Coalition>>,
    pub mc_samples: Option<usize>,
    pub seed: Option<u64>,
    pub exact: Option<bool>,
}

impl PresetParams {
    fn mc(&self) -> usize {
        self.mc_samples.unwrap_or(100)
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    fn exact(&self) -> bool {
        self.exact.unwrap_or(false)
    }

    fn need_baseline(&self, d: usize, name: &str) -> Result<Vec<f64>> {
        let baseline = self
            .baseline
            .clone()
            .ok_or_else(|| Error::Config(format!("preset {name} needs a baseline vector")))?;
        if baseline.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "baseline of length {} for d={d}",
                baseline.len()
            )));
        }
        Ok(baseline)
    }

    fn need_data(&self, d: usize, name: &str) -> Result<Dataset> {
        let data = self
            .data
            .clone()
            .ok_or_else(|| Error::Config(format!("preset {name} needs a dataset")))?;
        if data.d() != d {
            return Err(Error::DimensionMismatch(format!(
                "dataset over [{}] for d={d}",
                data.d()
            )));
        }
        Ok(data)
    }

    fn need_labelled_data(&self, d: usize, name: &str) -> Result<Dataset> {
        let data = self.need_data(d, name)?;
        if data.labels().is_none() {
            return Err(Error::Config(format!("preset {name} needs labelled data")));
        }
        Ok(data)
    }

    fn need_gaussian(&self, d: usize, name: &str) -> Result<GaussianSpec> {
        let spec = self
            .gaussian
            .clone()
            .ok_or_else(|| Error::Config(format!("preset {name} needs a gaussian spec")))?;
        if spec.d() != d {
            return Err(Error::DimensionMismatch(format!(
                "gaussian spec over [{}] for d={d}",
                spec.d()
            )));
        }
        Ok(spec)
    }

    /// Removal family for presets that are agnostic about it: conditioning
    /// when a gaussian spec is given, marginalization when a dataset is
    /// given, baseline substitution when a baseline is given.
    fn removal(&self, d: usize, name: &str) -> Result<RemovalFamily> {
        if self.gaussian.is_some() {
            return Ok(RemovalFamily::ConditionalGaussian {
                spec: self.need_gaussian(d, name)?,
                mc_samples: self.mc(),
                seed: self.seed(),
            });
        }
        if self.data.is_some() {
            return Ok(RemovalFamily::Marginal {
                reference: ReferenceDistribution::Empirical(self.need_data(d, name)?),
                mc_samples: self.mc(),
                seed: self.seed(),
                exact: self.exact(),
            });
        }
        if self.baseline.is_some() {
            return Ok(RemovalFamily::Anchored {
                baseline: self.need_baseline(d, name)?,
            });
        }
        Err(Error::Config(format!(
            "preset {name} needs a baseline, dataset, or gaussian spec to define removal"
        )))
    }
}

/// Builds one of the named attribution methods.
///
/// Names: `shapley`, `occlusion`, `pfi`, `loco`, `univariate`,
/// `marginal_shapley`, `conditional_shapley`, `banzhaf`, `shapley_effects`,
/// `stii`, `sii` (alias `cii`), `bii`. The generic `shapley`/`banzhaf` names
/// take whichever removal the params define (gaussian > dataset > baseline).
pub fn preset(name: &str, d: usize, params: &PresetParams) -> Result<Method> {
    let method = match name {
        "shapley" => Method::new(
            BehaviourMapping::Identity,
            params.removal(d, name)?,
            AggregationScheme::Preset(PresetAggregation::Shapley),
        )?,
        "occlusion" => {
            let baseline = params.need_baseline(d, name)?;
            let patches = match &params.patches {
                Some(p) => p.clone(),
                None => (1..=d)
                    .map(|i| Coalition::from_players([i], d))
                    .collect::<Result<Vec<_>>>()?,
            };
            Method::new(
                BehaviourMapping::Identity,
                RemovalFamily::Anchored { baseline },
                AggregationScheme::Preset(PresetAggregation::Occlusion { patches }),
            )?
        }
        "pfi" => {
            let data = params.need_labelled_data(d, name)?;
            Method::new(
                BehaviourMapping::DatasetLoss {
                    loss: params.loss.unwrap_or(Loss::Squared),
                    data: data.clone(),
                },
                RemovalFamily::Marginal {
                    reference: ReferenceDistribution::Empirical(data),
                    mc_samples: params.mc(),
                    seed: params.seed(),
                    exact: params.exact(),
                },
                AggregationScheme::Preset(PresetAggregation::Pfi),
            )?
        }
        "loco" => {
            let data = params.need_labelled_data(d, name)?;
            Method::new(
                BehaviourMapping::DatasetLoss {
                    loss: params.loss.unwrap_or(Loss::Squared),
                    data: data.clone(),
                },
                RemovalFamily::Retraining {
                    data,
                    learner: params.learner.unwrap_or_default(),
                },
                AggregationScheme::Preset(PresetAggregation::Pfi),
            )?
        }
        "univariate" => {
            let data = params.need_labelled_data(d, name)?;
            Method::new(
                BehaviourMapping::DatasetLoss {
                    loss: params.loss.unwrap_or(Loss::Squared),
                    data: data.clone(),
                },
                RemovalFamily::Retraining {
                    data,
                    learner: params.learner.unwrap_or_default(),
                },
                AggregationScheme::Preset(PresetAggregation::Univariate),
            )?
        }
        "marginal_shapley" => {
            let data = params.need_data(d, name)?;
            Method::new(
                BehaviourMapping::Identity,
                RemovalFamily::Marginal {
                    reference: ReferenceDistribution::Empirical(data),
                    mc_samples: params.mc(),
                    seed: params.seed(),
                    exact: params.exact(),
                },
                AggregationScheme::Preset(PresetAggregation::Shapley),
            )?
        }
        "conditional_shapley" => {
            let spec = params.need_gaussian(d, name)?;
            Method::new(
                BehaviourMapping::Identity,
                RemovalFamily::ConditionalGaussian {
                    spec,
                    mc_samples: params.mc(),
                    seed: params.seed(),
                },
                AggregationScheme::Preset(PresetAggregation::Shapley),
            )?
        }
        "banzhaf" => Method::new(
            BehaviourMapping::Identity,
            params.removal(d, name)?,
            AggregationScheme::Preset(PresetAggregation::Banzhaf),
        )?,
        "shapley_effects" => {
            let spec = params.need_gaussian(d, name)?;
            let reference = if params.data.is_some() {
                ReferenceDistribution::Empirical(params.need_data(d, name)?)
            } else {
                ReferenceDistribution::Gaussian(spec.clone())
            };
            Method::new(
                BehaviourMapping::Variance {
                    reference,
                    mc_samples: params.mc(),
                    seed: params.seed(),
                    exact: params.exact() || params.data.is_some(),
                },
                RemovalFamily::ConditionalGaussian {
                    spec,
                    mc_samples: params.mc(),
                    seed: params.seed(),
                },
                AggregationScheme::Preset(PresetAggregation::Shapley),
            )?
        }
        "stii" => {
            let k = params.order.unwrap_or(d.min(2));
            Method::new(
                BehaviourMapping::Identity,
                params.removal(d, name)?,
                AggregationScheme::Preset(PresetAggregation::Stii { k }),
            )?
        }
        "sii" | "cii" => {
            let k = params.order.unwrap_or(d);
            Method::new(
                BehaviourMapping::Identity,
                params.removal(d, name)?,
                AggregationScheme::Preset(PresetAggregation::Cii { k }),
            )?
        }
        "bii" => {
            let k = params.order.unwrap_or(d);
            Method::new(
                BehaviourMapping::Identity,
                params.removal(d, name)?,
                AggregationScheme::Preset(PresetAggregation::Bii { k }),
            )?
        }
        other => {
            return Err(Error::Config(format!("unknown preset '{other}'")));
        }
    };
    Ok(method)
}

// ---------------------------------------------------------------------------
// Internal consistency
// ---------------------------------------------------------------------------

/// Whether a variable can be added or removed at x without changing any
/// behaviour value, with a witness removal set when it cannot.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalIndependence {
    pub player: usize,
    pub independent: bool,
    /// (T, Φ(P_T(f))(x), Φ(P_{T∪i}(f))(x)) at the largest disagreement.
    pub witness: Option<(Coalition, f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConsistencyViolation {
    pub coalition: Coalition,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConsistencyReport {
    /// The coefficient sign-flip identity holds.
    pub sign_flip_holds: bool,
    pub sign_flip_witness: Option<SignFlipWitness>,
    /// One entry per variable, in player order.
    pub local_independence: Vec<LocalIndependence>,
    /// Every coalition containing a locally independent variable scored 0.
    pub consistent_at_point: bool,
    pub violations: Vec<ConsistencyViolation>,
}

/// Static test: the sign-flip identity on the coefficients. Dynamic test:
/// find the locally independent variables of f at x and verify every
/// coalition containing one receives zero attribution.
pub fn check_internal_consistency(
    method: &Method,
    f: &FunctionModel,
    x: &[f64],
    eps: f64,
) -> Result<ConsistencyReport> {
    let d = check_eval_inputs(method, f, x)?;
    let sign_flip_witness = sign_flip_witness(&method.aggregation, d, 1e-12)?;
    let vals = removal_values(&method.behaviour, &method.removal, f, x)?;

    let mut local_independence = Vec::new();
    for i in 1..=d {
        let single = Coalition::from_players([i], d)?;
        let mut worst: Option<(Coalition, f64, f64)> = None;
        let mut max_dev = 0.0;
        for t in all_coalitions(d)? {
            if t.contains(i) {
                continue;
            }
            let without = vals[t.bits() as usize];
            let with = vals[t.union(&single)?.bits() as usize];
            let dev = (with - without).abs();
            if dev > max_dev {
                max_dev = dev;
                worst = Some((t, without, with));
            }
        }
        let independent = max_dev <= eps;
        local_independence.push(LocalIndependence {
            player: i,
            independent,
            witness: if independent { None } else { worst },
        });
    }

    let mut violations = Vec::new();
    for entry in &local_independence {
        if !entry.independent {
            continue;
        }
        for s in all_coalitions(d)? {
            if !s.contains(entry.player) || s.size() > method.order {
                continue;
            }
            let value =
                attribution_from_values(&method.aggregation, method.order, d, &vals, &s)?;
            if value.abs() > eps {
                violations.push(ConsistencyViolation {
                    coalition: s,
                    value,
                });
            }
        }
    }

    Ok(ConsistencyReport {
        sign_flip_holds: sign_flip_witness.is_none(),
        sign_flip_witness,
        consistent_at_point: violations.is_empty(),
        local_independence,
        violations,
    })
}

// ---------------------------------------------------------------------------
// Functional axioms
// ---------------------------------------------------------------------------

/// A declared structural premise about f together with the axiom it
/// activates. Premises are asserted by the caller, not inferred.
#[derive(Clone, Debug)]
pub enum FunctionalAxiom {
    /// f does not depend on this variable ⇒ every coalition containing it
    /// scores 0 everywhere.
    Null { independent: usize },
    /// f is additive in this variable ⇒ larger coalitions containing it
    /// score 0 and its own attribution depends only on that coordinate.
    Dummy { additive: usize },
    /// f is invariant under swapping this pair ⇒ equal attributions at
    /// points where the pair is tied.
    Symmetry { pair: (usize, usize) },
    /// Relabeling variables commutes with attribution:
    /// m(πf, S)(πx) = m(f, πS)(x).
    Anonymity { permutation: Permutation },
}

impl FunctionalAxiom {
    pub fn name(&self) -> &'static str {
        match self {
            FunctionalAxiom::Null { .. } => "null",
            FunctionalAxiom::Dummy { .. } => "dummy",
            FunctionalAxiom::Symmetry { .. } => "symmetry",
            FunctionalAxiom::Anonymity { .. } => "anonymity",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AxiomWitness {
    pub coalition: Coalition,
    pub x: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AxiomReport {
    pub axiom: &'static str,
    pub holds: bool,
    pub max_deviation: f64,
    pub witness: Option<AxiomWitness>,
}

struct AxiomTracker {
    tolerance: f64,
    max_deviation: f64,
    witness: Option<AxiomWitness>,
}

impl AxiomTracker {
    fn new(tolerance: f64) -> Result<Self> {
        if !(tolerance >= 0.0) {
            return Err(Error::Config(format!("bad tolerance {tolerance}")));
        }
        Ok(AxiomTracker {
            tolerance,
            max_deviation: 0.0,
            witness: None,
        })
    }

    fn observe(&mut self, s: &Coalition, x: &[f64], lhs: f64, rhs: f64) {
        let dev = (lhs - rhs).abs();
        if dev > self.max_deviation {
            self.max_deviation = dev;
            self.witness = Some(AxiomWitness {
                coalition: *s,
                x: x.to_vec(),
                lhs,
                rhs,
            });
        }
    }

    fn finish(self, axiom: &'static str) -> AxiomReport {
        let holds = self.max_deviation <= self.tolerance;
        AxiomReport {
            axiom,
            holds,
            max_deviation: self.max_deviation,
            witness: if holds { None } else { self.witness },
        }
    }
}

fn check_player(i: usize, d: usize) -> Result<()> {
    if i == 0 || i > d {
        return Err(Error::Coalition(format!("player {i} out of range 1..={d}")));
    }
    Ok(())
}

/// Tests the declared axiom's equality on seeded probe points. The caller
/// asserts the structural premise (that the variable really is independent /
/// additive, the pair symmetric); the checker evaluates only the method's
/// side of the guarantee.
pub fn check_functional_axiom(
    method: &Method,
    f: &FunctionModel,
    axiom: &FunctionalAxiom,
    tolerance: f64,
    probe_count: usize,
    seed: u64,
) -> Result<AxiomReport> {
    let d = method.d();
    if f.d() != d {
        return Err(Error::DimensionMismatch(format!(
            "{}-variable function with a method over [{d}]",
            f.d()
        )));
    }
    let probes = probe_points(f.domain(), probe_count, seed);
    let mut tracker = AxiomTracker::new(tolerance)?;
    match axiom {
        FunctionalAxiom::Null { independent: i } => {
            check_player(*i, d)?;
            for x in &probes {
                let vals = removal_values(&method.behaviour, &method.removal, f, x)?;
                for s in all_coalitions(d)? {
                    if !s.contains(*i) || s.size() > method.order {
                        continue;
                    }
                    let value =
                        attribution_from_values(&method.aggregation, method.order, d, &vals, &s)?;
                    tracker.observe(&s, x, value, 0.0);
                }
            }
        }
        FunctionalAxiom::Dummy { additive: i } => {
            check_player(*i, d)?;
            let single = Coalition::from_players([*i], d)?;
            for x in &probes {
                let vals = removal_values(&method.behaviour, &method.removal, f, x)?;
                for s in all_coalitions(d)? {
                    if s.is_empty() || !s.is_disjoint_from(&single) {
                        continue;
                    }
                    let joint = s.union(&single)?;
                    if joint.size() > method.order {
                        continue;
                    }
                    let value = attribution_from_values(
                        &method.aggregation,
                        method.order,
                        d,
                        &vals,
                        &joint,
                    )?;
                    tracker.observe(&joint, x, value, 0.0);
                }
            }
            // Own attribution must be a function of coordinate i alone:
            // perturbing the other coordinates may not change it.
            for pair in probes.windows(2) {
                let x = &pair[0];
                let mut y = pair[1].clone();
                y[*i - 1] = x[*i - 1];
                let at_x = evaluate(method, f, &single, x)?;
                let at_y = evaluate(method, f, &single, &y)?;
                tracker.observe(&single, &y, at_y, at_x);
            }
        }
        FunctionalAxiom::Symmetry { pair: (i, j) } => {
            check_player(*i, d)?;
            check_player(*j, d)?;
            if i == j {
                return Err(Error::Coalition("symmetric pair needs i != j".into()));
            }
            let si = Coalition::from_players([*i], d)?;
            let sj = Coalition::from_players([*j], d)?;
            let both = si.union(&sj)?;
            for x in &probes {
                let mut tied = x.clone();
                tied[*j - 1] = tied[*i - 1];
                let vals = removal_values(&method.behaviour, &method.removal, f, &tied)?;
                for s in all_coalitions(d)? {
                    if !s.is_disjoint_from(&both) || s.size() + 1 > method.order {
                        continue;
                    }
                    let with_i = attribution_from_values(
                        &method.aggregation,
                        method.order,
                        d,
                        &vals,
                        &s.union(&si)?,
                    )?;
                    let with_j = attribution_from_values(
                        &method.aggregation,
                        method.order,
                        d,
                        &vals,
                        &s.union(&sj)?,
                    )?;
                    tracker.observe(&s.union(&si)?, &tied, with_i, with_j);
                }
            }
        }
        FunctionalAxiom::Anonymity { permutation: pi } => {
            if pi.d() != d {
                return Err(Error::DimensionMismatch(format!(
                    "permutation of [{}] with a method over [{d}]",
                    pi.d()
                )));
            }
            let pf = f.permuted(pi)?;
            for x in &probes {
                let px = pi.permute_point(x)?;
                let vals_pf = removal_values(&method.behaviour, &method.removal, &pf, &px)?;
                let vals_f = removal_values(&method.behaviour, &method.removal, f, x)?;
                for s in all_coalitions(d)? {
                    if s.is_empty() || s.size() > method.order {
                        continue;
                    }
                    let lhs = attribution_from_values(
                        &method.aggregation,
                        method.order,
                        d,
                        &vals_pf,
                        &s,
                    )?;
                    let rhs = attribution_from_values(
                        &method.aggregation,
                        method.order,
                        d,
                        &vals_f,
                        &apply_permutation(pi, &s)?,
                    )?;
                    tracker.observe(&s, x, lhs, rhs);
                }
            }
        }
    }
    Ok(tracker.finish(axiom.name()))
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributionPoint {
    pub x: Vec<f64>,
    /// Coalition label → attribution, for every nonempty coalition up to the
    /// method order.
    pub attributions: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributionReport {
    pub method_hash: String,
    pub library_version: String,
    pub seed: u64,
    pub points: Vec<AttributionPoint>,
}

impl AttributionReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Attributions for every nonempty coalition up to the method order at each
/// point. Points are processed independently (in parallel when enabled) with
/// the Monte-Carlo streams of point i re-seeded to `seed ^ i`; outputs are
/// ordered by point index regardless of schedule.
pub fn batch_attribution(
    method: &Method,
    f: &FunctionModel,
    points: &[Vec<f64>],
    seed: u64,
) -> Result<AttributionReport> {
    let d = method.d();
    if d > MAX_DECOMPOSITION_PLAYERS {
        return Err(Error::PlayerCount(d));
    }
    if f.d() != d {
        return Err(Error::DimensionMismatch(format!(
            "{}-variable function with a method over [{d}]",
            f.d()
        )));
    }
    for x in points {
        if x.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "point of length {} with a method over [{d}]",
                x.len()
            )));
        }
    }
    let results = exec::try_map_indexed(points.len(), |i| {
        let local = method.with_seed(seed ^ i as u64);
        let x = &points[i];
        let vals = removal_values(&local.behaviour, &local.removal, f, x)?;
        let mut attributions = BTreeMap::new();
        for s in all_coalitions(d)? {
            if s.is_empty() || s.size() > local.order {
                continue;
            }
            let value =
                attribution_from_values(&local.aggregation, local.order, d, &vals, &s)?;
            attributions.insert(s.label(), value);
        }
        Ok(AttributionPoint {
            x: x.clone(),
            attributions,
        })
    })?;
    Ok(AttributionReport {
        method_hash: method.method_hash(),
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        points: results,
    })
}

// ---------------------------------------------------------------------------
// Config layer
// ---------------------------------------------------------------------------

/// One sparse coefficient entry, with coalitions as comma-separated player
/// labels ("" is the empty coalition).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoefficientEntry {
    pub s: String,
    pub t: String,
    pub value: f64,
}

/// Serialized form of an aggregation scheme.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AggregationConfig {
    Explicit {
        order: usize,
        coefficients: Vec<CoefficientEntry>,
    },
    DerivativeForm {
        order: usize,
        coefficients: Vec<CoefficientEntry>,
    },
    Cardinal {
        order: usize,
        weights: Vec<Vec<f64>>,
    },
    Preset {
        name: String,
        #[serde(default)]
        order: Option<usize>,
        #[serde(default)]
        patches: Option<Vec<String>>,
    },
}

impl AggregationConfig {
    pub fn build(&self, d: usize) -> Result<AggregationScheme> {
        let scheme = match self {
            AggregationConfig::Explicit {
                order,
                coefficients,
            } => AggregationScheme::Explicit {
                order: *order,
                alpha: parse_entries(coefficients, d)?,
            },
            AggregationConfig::DerivativeForm {
                order,
                coefficients,
            } => AggregationScheme::DerivativeForm {
                order: *order,
                beta: parse_entries(coefficients, d)?,
            },
            AggregationConfig::Cardinal { order, weights } => AggregationScheme::Cardinal {
                d,
                order: *order,
                beta: weights.clone(),
            },
            AggregationConfig::Preset {
                name,
                order,
                patches,
            } => {
                let preset = match name.as_str() {
                    "shapley" => PresetAggregation::Shapley,
                    "banzhaf" => PresetAggregation::Banzhaf,
                    "stii" => PresetAggregation::Stii {
                        k: order.unwrap_or(d.min(2)),
                    },
                    "sii" | "cii" => PresetAggregation::Cii {
                        k: order.unwrap_or(d),
                    },
                    "bii" => PresetAggregation::Bii {
                        k: order.unwrap_or(d),
                    },
                    "pfi" | "loco" => PresetAggregation::Pfi,
                    "univariate" => PresetAggregation::Univariate,
                    "occlusion" => {
                        let patches = match patches {
                            Some(labels) => labels
                                .iter()
                                .map(|l| Coalition::parse_label(l, d))
                                .collect::<Result<Vec<_>>>()?,
                            None => (1..=d)
                                .map(|i| Coalition::from_players([i], d))
                                .collect::<Result<Vec<_>>>()?,
                        };
                        PresetAggregation::Occlusion { patches }
                    }
                    other => {
                        return Err(Error::Config(format!(
                            "unknown aggregation preset '{other}'"
                        )))
                    }
                };
                AggregationScheme::Preset(preset)
            }
        };
        scheme.validate(d)?;
        Ok(scheme)
    }
}

fn parse_entries(entries: &[CoefficientEntry], d: usize) -> Result<BTreeMap<(u32, u32), f64>> {
    let mut out = BTreeMap::new();
    for entry in entries {
        let s = Coalition::parse_label(&entry.s, d)?;
        let t = Coalition::parse_label(&entry.t, d)?;
        if !entry.value.is_finite() {
            return Err(Error::Config(format!(
                "non-finite coefficient for (S={}, T={})",
                entry.s, entry.t
            )));
        }
        if out.insert((s.bits(), t.bits()), entry.value).is_some() {
            return Err(Error::Config(format!(
                "duplicate coefficient for (S={}, T={})",
                entry.s, entry.t
            )));
        }
    }
    Ok(out)
}

/// Serialized form of a complete method.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MethodConfig {
    pub behaviour: BehaviourConfig,
    pub removal: RemovalConfig,
    pub aggregation: AggregationConfig,
    #[serde(default)]
    pub order: Option<usize>,
}

impl MethodConfig {
    pub fn build(&self, d: usize, ctx: &BuildContext) -> Result<Method> {
        let behaviour = self.behaviour.build(d, ctx)?;
        let removal = self.removal.build(d, ctx)?;
        let aggregation = self.aggregation.build(d)?;
        let mut method = Method::new(behaviour, removal, aggregation)?;
        if let Some(order) = self.order {
            method = method.with_order(order);
        }
        Ok(method)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::fixtures::game_a;
    use crate::game::unanimity_game;
    use crate::indices::{shapley_taylor_index, shapley_value};
    use approx::assert_abs_diff_eq;

    fn c(players: &[usize], d: usize) -> Coalition {
        Coalition::from_players(players.iter().copied(), d).unwrap()
    }

    fn anchored(baseline: &[f64]) -> RemovalFamily {
        RemovalFamily::Anchored {
            baseline: baseline.to_vec(),
        }
    }

    fn ds2() -> Dataset {
        Dataset::new(vec![vec![1.0, 1.0], vec![-1.0, -1.0]], None).unwrap()
    }

    fn unifying_fixture() -> (FunctionModel, RemovalFamily, Vec<f64>) {
        (
            FunctionModel::parse("x1 + x2 + x2*x3", 3).unwrap(),
            anchored(&[0.0, 0.0, 0.0]),
            vec![3.0, 4.0, 5.0],
        )
    }

    fn shapley_method(removal: RemovalFamily) -> Method {
        Method::new(
            BehaviourMapping::Identity,
            removal,
            AggregationScheme::Preset(PresetAggregation::Shapley),
        )
        .unwrap()
    }

    fn correlated_gaussian(sigma: f64) -> GaussianSpec {
        GaussianSpec::new(
            vec![0.0, 0.0],
            vec![vec![1.0, sigma], vec![sigma, 1.0]],
        )
        .unwrap()
    }

    #[test]
    fn pointwise_game_reproduces_the_reference_table() {
        let (f, fam, x) = unifying_fixture();
        let v = pointwise_game(&BehaviourMapping::Identity, &fam, &f, &x).unwrap();
        assert_eq!(v.values(), game_a().values());
    }

    #[test]
    fn pointwise_game_of_a_constant_is_zero() {
        let f = FunctionModel::constant(3, 7.5).unwrap();
        let v = pointwise_game(
            &BehaviourMapping::Identity,
            &anchored(&[0.0, 0.0, 0.0]),
            &f,
            &[1.0, 2.0, 3.0],
        )
        .unwrap();
        assert_eq!(v.values(), &[0.0; 8]);
    }

    #[test]
    fn idempotent_component_games_are_weighted_unanimity() {
        let (f, fam, x) = unifying_fixture();
        for s in all_coalitions(3).unwrap() {
            let g_s = cad_component(&fam, &f, &s).unwrap();
            let v = pointwise_game(&BehaviourMapping::Identity, &fam, &g_s, &x).unwrap();
            let c_weight = g_s.evaluate(&x).unwrap();
            if s.is_empty() {
                // The empty component is constant, so its game is zero.
                assert_eq!(v.values(), &[0.0; 8]);
                continue;
            }
            let expected = unanimity_game(&s, 3).unwrap();
            for (got, want) in v.values().iter().zip(expected.values()) {
                assert_abs_diff_eq!(*got, c_weight * want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn shapley_attribution_matches_the_game_value() {
        let (f, fam, x) = unifying_fixture();
        let method = shapley_method(fam);
        let phi = shapley_value(&game_a()).unwrap();
        for i in 1..=3 {
            let got = evaluate(&method, &f, &c(&[i], 3), &x).unwrap();
            assert_abs_diff_eq!(got, phi.get(i), epsilon = 1e-12);
        }
        assert_eq!(evaluate(&method, &f, &c(&[2], 3), &x).unwrap(), 14.0);
        assert_eq!(evaluate(&method, &f, &c(&[1], 3), &x).unwrap(), 3.0);
        assert_eq!(evaluate(&method, &f, &c(&[3], 3), &x).unwrap(), 10.0);
        // Above the method order the attribution is identically zero.
        assert_eq!(evaluate(&method, &f, &c(&[2, 3], 3), &x).unwrap(), 0.0);
    }

    #[test]
    fn single_feature_removal_scores_a_switched_off_variable_zero() {
        let f = FunctionModel::parse("max(x1, x2)", 2).unwrap();
        let method = Method::new(
            BehaviourMapping::Identity,
            anchored(&[0.0, 0.0]),
            AggregationScheme::Preset(PresetAggregation::Pfi),
        )
        .unwrap();
        assert_eq!(evaluate(&method, &f, &c(&[1], 2), &[0.0, 2.0]).unwrap(), 0.0);
        // With the other variable dominant but x1 active, removal matters.
        assert_eq!(evaluate(&method, &f, &c(&[2], 2), &[0.0, 2.0]).unwrap(), 2.0);
    }

    #[test]
    fn interaction_preset_reproduces_the_top_order_index() {
        let (f, fam, x) = unifying_fixture();
        let method = Method::new(
            BehaviourMapping::Identity,
            fam,
            AggregationScheme::Preset(PresetAggregation::Stii { k: 2 }),
        )
        .unwrap();
        assert_eq!(evaluate(&method, &f, &c(&[2, 3], 3), &x).unwrap(), 20.0);
        let table = shapley_taylor_index(&game_a(), 2).unwrap();
        for s in all_coalitions(3).unwrap() {
            if s.is_empty() || s.size() > 2 {
                continue;
            }
            assert_abs_diff_eq!(
                evaluate(&method, &f, &s, &x).unwrap(),
                table.get(&s).unwrap(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn occlusion_alpha_table_matches_the_patch_formula() {
        let patches = vec![c(&[1, 2], 3), c(&[2, 3], 3)];
        let scheme = AggregationScheme::Preset(PresetAggregation::Occlusion { patches });
        let s = c(&[2], 3);
        assert_eq!(scheme.alpha(&s, &c(&[], 3)).unwrap(), 1.0);
        // Feature 2 sits in both patches, so each patch weighs 1/2.
        assert_eq!(scheme.alpha(&s, &c(&[1, 2], 3)).unwrap(), -0.5);
        assert_eq!(scheme.alpha(&s, &c(&[2, 3], 3)).unwrap(), -0.5);
        assert_eq!(scheme.alpha(&s, &c(&[2], 3)).unwrap(), 0.0);
        let s1 = c(&[1], 3);
        assert_eq!(scheme.alpha(&s1, &c(&[1, 2], 3)).unwrap(), -1.0);
        assert_eq!(scheme.alpha(&s1, &c(&[2, 3], 3)).unwrap(), 0.0);
    }

    #[test]
    fn occlusion_preset_scores_full_marginal_contributions() {
        let (f, _, x) = unifying_fixture();
        let params = PresetParams {
            baseline: Some(vec![0.0, 0.0, 0.0]),
            ..Default::default()
        };
        let method = preset("occlusion", 3, &params).unwrap();
        let v = game_a();
        for i in 1..=3 {
            let grand = Coalition::full(3).unwrap();
            let expected = v.grand_value() - v.value(&grand.remove(i).unwrap());
            assert_eq!(evaluate(&method, &f, &c(&[i], 3), &x).unwrap(), expected);
        }
        assert_eq!(evaluate(&method, &f, &c(&[1], 3), &x).unwrap(), 3.0);
        assert_eq!(evaluate(&method, &f, &c(&[2], 3), &x).unwrap(), 24.0);
        assert_eq!(evaluate(&method, &f, &c(&[3], 3), &x).unwrap(), 20.0);
    }

    #[test]
    fn representation_identity_holds_for_every_scheme() {
        let (f, fam, x) = unifying_fixture();
        let schemes = vec![
            AggregationScheme::Preset(PresetAggregation::Shapley),
            AggregationScheme::Preset(PresetAggregation::Banzhaf),
            AggregationScheme::Preset(PresetAggregation::Stii { k: 2 }),
            AggregationScheme::Preset(PresetAggregation::Cii { k: 3 }),
            AggregationScheme::Preset(PresetAggregation::Bii { k: 2 }),
            AggregationScheme::Preset(PresetAggregation::Pfi),
            AggregationScheme::Preset(PresetAggregation::Univariate),
            AggregationScheme::Preset(PresetAggregation::Occlusion {
                patches: vec![c(&[1, 2], 3), c(&[2, 3], 3), c(&[3], 3)],
            }),
        ];
        let vals = removal_values(&BehaviourMapping::Identity, &fam, &f, &x).unwrap();
        let (game, shift) = game_from_removal_values(3, &vals).unwrap();
        for scheme in schemes {
            let method = Method::new(BehaviourMapping::Identity, fam.clone(), scheme).unwrap();
            for s in all_coalitions(3).unwrap() {
                if s.size() > method.order {
                    continue;
                }
                let direct = evaluate(&method, &f, &s, &x).unwrap();
                // Σ_T α_{T̄}^S · [v(T) + shift], the game form of the same sum.
                let mut via_game = 0.0;
                for t in all_coalitions(3).unwrap() {
                    let a = method.aggregation.alpha(&s, &t.complement()).unwrap();
                    via_game += a * (game.value(&t) + shift);
                }
                assert_abs_diff_eq!(direct, via_game, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn derivative_weights_match_the_direct_evaluation() {
        let (f, fam, x) = unifying_fixture();
        let game = pointwise_game(&BehaviourMapping::Identity, &fam, &f, &x).unwrap();
        for scheme in [
            AggregationScheme::Preset(PresetAggregation::Shapley),
            AggregationScheme::Preset(PresetAggregation::Banzhaf),
            AggregationScheme::Preset(PresetAggregation::Cii { k: 2 }),
        ] {
            let method = Method::new(BehaviourMapping::Identity, fam.clone(), scheme).unwrap();
            for s in all_coalitions(3).unwrap() {
                if s.is_empty() || s.size() > method.order {
                    continue;
                }
                let mut via_derivatives = 0.0;
                for t in subsets_of(&s.complement()) {
                    let beta = method
                        .aggregation
                        .derivative_weight(&s, &t)
                        .unwrap()
                        .unwrap();
                    via_derivatives += beta * game.discrete_derivative(&s, &t).unwrap();
                }
                assert_abs_diff_eq!(
                    evaluate(&method, &f, &s, &x).unwrap(),
                    via_derivatives,
                    epsilon = 1e-10
                );
            }
        }
    }

    #[test]
    fn component_sum_reproduces_the_reference_attributions() {
        let (f, fam, x) = unifying_fixture();
        let method = shapley_method(fam);
        let at_2 =
            mc_attribution_via_components(&method, &f, &c(&[2], 3), &x, None).unwrap();
        assert_eq!(at_2.value, 14.0);
        assert!(!at_2.truncated());
        let at_1 =
            mc_attribution_via_components(&method, &f, &c(&[1], 3), &x, None).unwrap();
        assert_eq!(at_1.value, 3.0);
    }

    #[test]
    fn component_sum_truncation_drops_high_orders_and_reports_it() {
        let (f, fam, x) = unifying_fixture();
        let method = shapley_method(fam);
        let truncated =
            mc_attribution_via_components(&method, &f, &c(&[2], 3), &x, Some(1)).unwrap();
        assert_eq!(truncated.value, 4.0);
        assert!(truncated.truncated());
        assert_eq!(truncated.dropped_components, 3);
        assert_eq!(truncated.used_components, 1);
        let exact = evaluate(&method, &f, &c(&[2], 3), &x).unwrap();
        assert_abs_diff_eq!(exact - truncated.value, 10.0, epsilon = 1e-12);
    }

    #[test]
    fn component_sum_equals_direct_evaluation_across_schemes() {
        let f = FunctionModel::parse("x1*x2 + x2*x3*x4 - x3 + exp(x1/3)", 4).unwrap();
        let fam = anchored(&[0.2, -0.4, 0.8, -1.0]);
        let x = [0.9, -0.7, 1.3, 0.4];
        let schemes = vec![
            AggregationScheme::Preset(PresetAggregation::Shapley),
            AggregationScheme::Preset(PresetAggregation::Banzhaf),
            AggregationScheme::Preset(PresetAggregation::Stii { k: 2 }),
            AggregationScheme::Preset(PresetAggregation::Cii { k: 3 }),
            AggregationScheme::Preset(PresetAggregation::Bii { k: 2 }),
            AggregationScheme::Preset(PresetAggregation::Pfi),
            AggregationScheme::Preset(PresetAggregation::Univariate),
            AggregationScheme::Cardinal {
                d: 4,
                order: 2,
                beta: vec![vec![0.4, 0.1, 0.2, 0.1], vec![0.25, 0.5, 0.25]],
            },
            AggregationScheme::DerivativeForm {
                order: 1,
                beta: BTreeMap::from([
                    ((c(&[1], 4).bits(), c(&[2], 4).bits()), 0.75),
                    ((c(&[1], 4).bits(), c(&[3, 4], 4).bits()), 0.25),
                ]),
            },
        ];
        for scheme in schemes {
            let method =
                Method::new(BehaviourMapping::Identity, fam.clone(), scheme).unwrap();
            for s in all_coalitions(4).unwrap() {
                if s.is_empty() || s.size() > method.order {
                    continue;
                }
                let direct = evaluate(&method, &f, &s, &x).unwrap();
                let via_components =
                    mc_attribution_via_components(&method, &f, &s, &x, None).unwrap();
                assert_abs_diff_eq!(direct, via_components.value, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn component_sum_rejects_unsupported_methods() {
        let (f, fam, x) = unifying_fixture();
        let explicit = Method::new(
            BehaviourMapping::Identity,
            fam.clone(),
            AggregationScheme::Explicit {
                order: 1,
                alpha: BTreeMap::from([((c(&[1], 3).bits(), 0), 1.0)]),
            },
        )
        .unwrap();
        assert!(matches!(
            mc_attribution_via_components(&explicit, &f, &c(&[1], 3), &x, None),
            Err(Error::Config(_))
        ));

        let lossy = Method::new(
            BehaviourMapping::LocalLoss {
                loss: Loss::Squared,
                labeler: FunctionModel::zero(3).unwrap(),
            },
            fam,
            AggregationScheme::Preset(PresetAggregation::Shapley),
        )
        .unwrap();
        assert!(matches!(
            mc_attribution_via_components(&lossy, &f, &c(&[1], 3), &x, None),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn preset_construction_and_errors() {
        assert!(matches!(
            preset("nonsense", 3, &PresetParams::default()),
            Err(Error::Config(_))
        ));
        // The generic names take whichever removal the params define.
        let generic = preset(
            "shapley",
            3,
            &PresetParams {
                baseline: Some(vec![0.0; 3]),
                ..Default::default()
            },
        )
        .unwrap();
        assert!(matches!(generic.removal, RemovalFamily::Anchored { .. }));
        assert!(matches!(
            generic.aggregation,
            AggregationScheme::Preset(PresetAggregation::Shapley)
        ));
        assert!(matches!(
            preset("shapley", 3, &PresetParams::default()),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            preset("occlusion", 3, &PresetParams::default()),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            preset("loco", 2, &PresetParams {
                data: Some(ds2()),
                ..Default::default()
            }),
            Err(Error::Config(_))
        ));

        let labelled = Dataset::new(
            vec![vec![1.0, 2.0], vec![2.0, 1.0], vec![0.0, 0.0]],
            Some(vec![3.0, 3.0, 0.0]),
        )
        .unwrap();
        let loco = preset(
            "loco",
            2,
            &PresetParams {
                data: Some(labelled.clone()),
                ..Default::default()
            },
        )
        .unwrap();
        assert!(matches!(loco.removal, RemovalFamily::Retraining { .. }));
        assert!(matches!(
            loco.behaviour,
            BehaviourMapping::DatasetLoss { .. }
        ));
        assert_eq!(loco.order, 1);

        let cs = preset(
            "conditional_shapley",
            2,
            &PresetParams {
                gaussian: Some(correlated_gaussian(0.5)),
                ..Default::default()
            },
        )
        .unwrap();
        assert!(matches!(
            cs.removal,
            RemovalFamily::ConditionalGaussian { .. }
        ));

        let se = preset(
            "shapley_effects",
            2,
            &PresetParams {
                gaussian: Some(correlated_gaussian(0.0)),
                ..Default::default()
            },
        )
        .unwrap();
        assert!(matches!(se.behaviour, BehaviourMapping::Variance { .. }));

        let stii = preset(
            "stii",
            3,
            &PresetParams {
                baseline: Some(vec![0.0; 3]),
                order: Some(2),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(stii.order, 2);
    }

    #[test]
    fn locally_independent_variables_are_detected_and_scored_zero() {
        let f = FunctionModel::parse("max(x1, x2)", 2).unwrap();
        let method = shapley_method(anchored(&[0.0, 0.0]));

        let at_off = check_internal_consistency(&method, &f, &[0.0, 2.0], 1e-10).unwrap();
        assert!(at_off.sign_flip_holds);
        assert!(at_off.local_independence[0].independent);
        assert!(!at_off.local_independence[1].independent);
        assert!(at_off.consistent_at_point);
        assert_eq!(evaluate(&method, &f, &c(&[1], 2), &[0.0, 2.0]).unwrap(), 0.0);

        let at_on = check_internal_consistency(&method, &f, &[1.0, 2.0], 1e-10).unwrap();
        assert!(!at_on.local_independence[0].independent);
        // Adding x1=1 matters exactly when x2 is absent.
        let (t, without, with) = at_on.local_independence[0].witness.clone().unwrap();
        assert_eq!(t, c(&[2], 2));
        assert_eq!((without, with), (1.0, 0.0));
    }

    #[test]
    fn constant_attribution_tables_fail_the_sign_flip_test() {
        let alpha = BTreeMap::from([
            ((c(&[1], 2).bits(), c(&[1, 2], 2).bits()), 1.0),
            ((c(&[2], 2).bits(), c(&[1, 2], 2).bits()), 1.0),
        ]);
        let scheme = AggregationScheme::Explicit { order: 1, alpha };
        let witness = sign_flip_witness(&scheme, 2, 1e-12).unwrap().unwrap();
        assert_eq!(witness.alpha + witness.alpha_with, 1.0);

        let f = FunctionModel::parse("x1 + x2", 2).unwrap();
        let method = Method::new(
            BehaviourMapping::Identity,
            RemovalFamily::Trivial { d: 2 },
            scheme,
        )
        .unwrap();
        let report = check_internal_consistency(&method, &f, &[1.0, 2.0], 1e-10).unwrap();
        assert!(!report.sign_flip_holds);
        assert!(report.consistent_at_point);
    }

    #[test]
    fn conditional_gaussian_attribution_breaks_the_null_guarantee() {
        let f = FunctionModel::parse("x1", 2).unwrap();
        let method = preset(
            "conditional_shapley",
            2,
            &PresetParams {
                gaussian: Some(correlated_gaussian(0.5)),
                mc_samples: Some(8192),
                seed: Some(11),
                ..Default::default()
            },
        )
        .unwrap();
        let got = evaluate(&method, &f, &c(&[2], 2), &[0.0, 1.0]).unwrap();
        // The independent variable inherits half the conditional mean shift.
        assert_abs_diff_eq!(got.abs(), 0.25, epsilon = 0.02);
        assert!(got.abs() > 0.1);

        let report = check_functional_axiom(
            &method,
            &f,
            &FunctionalAxiom::Null { independent: 2 },
            1e-3,
            6,
            41,
        )
        .unwrap();
        assert!(!report.holds);
        assert!(report.witness.is_some());
    }

    #[test]
    fn independent_averaging_attribution_keeps_the_null_guarantee() {
        let f = FunctionModel::parse("x1", 2).unwrap();
        let method = shapley_method(RemovalFamily::Marginal {
            reference: ReferenceDistribution::Empirical(ds2()),
            mc_samples: 0,
            seed: 0,
            exact: true,
        });
        assert_eq!(evaluate(&method, &f, &c(&[2], 2), &[0.0, 1.0]).unwrap(), 0.0);
        let report = check_functional_axiom(
            &method,
            &f,
            &FunctionalAxiom::Null { independent: 2 },
            1e-10,
            8,
            43,
        )
        .unwrap();
        assert!(report.holds, "max deviation {}", report.max_deviation);

        let baseline_method = shapley_method(anchored(&[0.0, 0.0]));
        let report = check_functional_axiom(
            &baseline_method,
            &f,
            &FunctionalAxiom::Null { independent: 2 },
            1e-10,
            8,
            43,
        )
        .unwrap();
        assert!(report.holds);
    }

    #[test]
    fn additive_variables_stay_separated_only_under_clean_removal() {
        let f = FunctionModel::parse("x1 + x2*x3", 3).unwrap();
        let axiom = FunctionalAxiom::Dummy { additive: 1 };

        let good = Method::new(
            BehaviourMapping::Identity,
            anchored(&[0.1, -0.3, 0.7]),
            AggregationScheme::Preset(PresetAggregation::Cii { k: 3 }),
        )
        .unwrap();
        let report = check_functional_axiom(&good, &f, &axiom, 1e-9, 6, 47).unwrap();
        assert!(report.holds, "max deviation {}", report.max_deviation);

        let g = FunctionModel::parse("x1 + x2", 2).unwrap();
        let bad = Method::new(
            BehaviourMapping::Identity,
            RemovalFamily::ConditionalGaussian {
                spec: correlated_gaussian(0.5),
                mc_samples: 4096,
                seed: 5,
            },
            AggregationScheme::Preset(PresetAggregation::Cii { k: 2 }),
        )
        .unwrap();
        let report =
            check_functional_axiom(&bad, &g, &FunctionalAxiom::Dummy { additive: 1 }, 1e-2, 6, 47)
                .unwrap();
        assert!(!report.holds);
    }

    #[test]
    fn interaction_between_additive_variables_under_conditioning_is_the_covariance() {
        // Loaded verbatim: the conditional game of f = x1 + x2 under unit
        // variances and covariance σ, at x1=1/4, x2=1/2, σ=1/2. The order-2
        // interaction equals σ exactly even though f has no interaction.
        let sigma = 0.5;
        let (x1, x2) = (0.25, 0.5);
        let v = CooperativeGame::new(
            2,
            vec![0.0, x1 - sigma / 2.0, x2 - sigma / 2.0, x1 + x2],
        )
        .unwrap();
        let table = shapley_taylor_index(&v, 2).unwrap();
        assert_eq!(table.get(&c(&[1, 2], 2)).unwrap(), sigma);
        let sii = crate::indices::shapley_interaction_index(&v).unwrap();
        assert_eq!(sii.get(&c(&[1, 2], 2)).unwrap(), sigma);
    }

    #[test]
    fn symmetry_axiom_needs_an_exchangeable_baseline() {
        let f = FunctionModel::parse("x1 + x2", 2).unwrap();
        let axiom = FunctionalAxiom::Symmetry { pair: (1, 2) };
        let same = shapley_method(anchored(&[0.4, 0.4]));
        assert!(check_functional_axiom(&same, &f, &axiom, 1e-10, 8, 53)
            .unwrap()
            .holds);
        let different = shapley_method(anchored(&[0.0, 1.0]));
        let report = check_functional_axiom(&different, &f, &axiom, 1e-10, 8, 53).unwrap();
        assert!(!report.holds);
    }

    #[test]
    fn anonymity_axiom_needs_identical_per_feature_removal() {
        let f = FunctionModel::parse("x1 + x2^2 + x3^3", 3).unwrap();
        let pi = Permutation::new(vec![2, 3, 1]).unwrap();

        // Isolated-influence method: the attribution for i is the model with
        // every other feature replaced by its baseline entry.
        let isolated = |baseline: [f64; 3]| {
            let mut alpha = BTreeMap::new();
            for i in 1..=3usize {
                let s = c(&[i], 3);
                alpha.insert((s.bits(), s.complement().bits()), 1.0);
            }
            Method::new(
                BehaviourMapping::Identity,
                anchored(&baseline),
                AggregationScheme::Explicit { order: 1, alpha },
            )
            .unwrap()
        };

        let same = isolated([0.25, 0.25, 0.25]);
        let report = check_functional_axiom(
            &same,
            &f,
            &FunctionalAxiom::Anonymity {
                permutation: pi.clone(),
            },
            1e-10,
            8,
            59,
        )
        .unwrap();
        assert!(report.holds, "max deviation {}", report.max_deviation);

        let different = isolated([0.25, 1.25, -0.75]);
        let report = check_functional_axiom(
            &different,
            &f,
            &FunctionalAxiom::Anonymity { permutation: pi },
            1e-10,
            8,
            59,
        )
        .unwrap();
        assert!(!report.holds);

        // Hand check of the two sides at one point.
        let z = [0.5, 2.0, -1.0];
        let (b1, b2, b3): (f64, f64, f64) = (0.25, 1.25, -0.75);
        let pf = f.permuted(&Permutation::new(vec![2, 3, 1]).unwrap()).unwrap();
        let pz = Permutation::new(vec![2, 3, 1]).unwrap().permute_point(&z).unwrap();
        let lhs = evaluate(&different, &pf, &c(&[1], 3), &pz).unwrap();
        let rhs = evaluate(&different, &f, &c(&[2], 3), &z).unwrap();
        assert_abs_diff_eq!(lhs, b3 + z[1] * z[1] + b2.powi(3), epsilon = 1e-12);
        assert_abs_diff_eq!(rhs, b1 + z[1] * z[1] + b3.powi(3), epsilon = 1e-12);
    }

    #[test]
    fn batch_reports_are_deterministic_and_ordered() {
        let (f, fam, _) = unifying_fixture();
        let method = shapley_method(fam);
        let points = vec![
            vec![3.0, 4.0, 5.0],
            vec![1.0, 1.0, 1.0],
            vec![-1.0, 0.5, 2.0],
        ];
        let a = batch_attribution(&method, &f, &points, 7).unwrap();
        let b = batch_attribution(&method, &f, &points, 7).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        assert_eq!(a.points.len(), 3);
        assert_eq!(a.points[0].x, points[0]);
        assert_eq!(a.points[0].attributions["2"], 14.0);
        assert_eq!(a.points[0].attributions.len(), 3);
        assert_eq!(a.library_version, env!("CARGO_PKG_VERSION"));
        assert_eq!(a.method_hash, method.method_hash());

        let round = AttributionReport::from_json(&a.to_json().unwrap()).unwrap();
        assert_eq!(round, a);
    }

    #[test]
    fn batch_seeds_derive_per_point_for_monte_carlo_families() {
        let f = FunctionModel::parse("x1*x2", 2).unwrap();
        let method = shapley_method(RemovalFamily::Marginal {
            reference: ReferenceDistribution::Empirical(ds2()),
            mc_samples: 16,
            seed: 0,
            exact: false,
        });
        let x = vec![0.7, -0.4];
        let report = batch_attribution(&method, &f, &[x.clone(), x.clone()], 9).unwrap();
        // Same point, different derived seeds: estimates differ slightly.
        let first = report.points[0].attributions["1"];
        let second = report.points[1].attributions["1"];
        assert_ne!(first, second);
        // Point 0 sees exactly the base seed.
        let direct = evaluate(&method.with_seed(9), &f, &c(&[1], 2), &x).unwrap();
        assert_eq!(first, direct);
    }

    #[test]
    fn method_hashes_separate_different_configurations() {
        let (_, fam, _) = unifying_fixture();
        let a = shapley_method(fam.clone());
        let b = shapley_method(anchored(&[0.0, 0.0, 1.0]));
        let c = Method::new(
            BehaviourMapping::Identity,
            fam,
            AggregationScheme::Preset(PresetAggregation::Banzhaf),
        )
        .unwrap();
        assert_ne!(a.method_hash(), b.method_hash());
        assert_ne!(a.method_hash(), c.method_hash());
        assert_eq!(a.method_hash(), a.clone().method_hash());
    }

    #[test]
    fn method_config_round_trips_and_builds() {
        let text = r#"{
            "behaviour": {"kind": "identity"},
            "removal": {"kind": "anchored", "baseline": [0.0, 0.0, 0.0]},
            "aggregation": {"kind": "preset", "name": "shapley"},
            "order": 1
        }"#;
        let cfg = MethodConfig::from_json(text).unwrap();
        let method = cfg.build(3, &BuildContext::default()).unwrap();
        assert_eq!(method.order, 1);
        let f = FunctionModel::parse("x1 + x2 + x2*x3", 3).unwrap();
        assert_eq!(
            evaluate(&method, &f, &c(&[2], 3), &[3.0, 4.0, 5.0]).unwrap(),
            14.0
        );

        let round = MethodConfig::from_json(&cfg.to_json().unwrap()).unwrap();
        let rebuilt = round.build(3, &BuildContext::default()).unwrap();
        assert_eq!(method.method_hash(), rebuilt.method_hash());

        let explicit = r#"{
            "behaviour": {"kind": "identity"},
            "removal": {"kind": "anchored", "baseline": [0.0, 0.0]},
            "aggregation": {"kind": "explicit", "order": 1, "coefficients": [
                {"s": "1", "t": "", "value": 1.0},
                {"s": "1", "t": "1", "value": -1.0}
            ]}
        }"#;
        let cfg = MethodConfig::from_json(explicit).unwrap();
        let method = cfg.build(2, &BuildContext::default()).unwrap();
        let g = FunctionModel::parse("max(x1, x2)", 2).unwrap();
        assert_eq!(evaluate(&method, &g, &c(&[1], 2), &[0.0, 2.0]).unwrap(), 0.0);
        assert_eq!(evaluate(&method, &g, &c(&[1], 2), &[3.0, 2.0]).unwrap(), 1.0);
    }

    #[test]
    fn scheme_validation_rejects_malformed_tables() {
        assert!(AggregationScheme::Cardinal {
            d: 3,
            order: 2,
            beta: vec![vec![0.5, 0.5, 0.0]],
        }
        .validate(3)
        .is_err());
        assert!(AggregationScheme::Cardinal {
            d: 3,
            order: 1,
            beta: vec![vec![0.5, 0.5]],
        }
        .validate(3)
        .is_err());
        assert!(AggregationScheme::DerivativeForm {
            order: 1,
            beta: BTreeMap::from([((1, 1), 0.5)]),
        }
        .validate(3)
        .is_err());
        assert!(AggregationScheme::Preset(PresetAggregation::Stii { k: 4 })
            .validate(3)
            .is_err());
        assert!(
            AggregationScheme::Preset(PresetAggregation::Occlusion { patches: vec![] })
                .validate(3)
                .is_err()
        );
    }

    #[test]
    fn shapley_component_weights_collapse_to_harmonic_factors() {
        let scheme = AggregationScheme::Preset(PresetAggregation::Shapley);
        for d in 2..=6 {
            let s = c(&[1], d);
            for t in subsets_of(&s.complement()) {
                let got = scheme.component_weight(&s, &t).unwrap();
                assert_abs_diff_eq!(got, 1.0 / (t.size() as f64 + 1.0), epsilon = 1e-12);
                // The collapse agrees with the raw superset sum.
                let as_table = AggregationScheme::DerivativeForm {
                    order: 1,
                    beta: subsets_of(&s.complement())
                        .map(|u| {
                            (
                                (s.bits(), u.bits()),
                                1.0 / (d as f64 * binomial(d - 1, u.size())),
                            )
                        })
                        .collect(),
                };
                let reference = as_table.component_weight(&s, &t).unwrap();
                assert_abs_diff_eq!(got, reference, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn banzhaf_component_weights_halve_per_interaction_order() {
        let scheme = AggregationScheme::Preset(PresetAggregation::Banzhaf);
        let s = c(&[2], 5);
        for t in subsets_of(&s.complement()) {
            assert_abs_diff_eq!(
                scheme.component_weight(&s, &t).unwrap(),
                (0.5f64).powi(t.size() as i32),
                epsilon = 1e-12
            );
        }
    }
}
