//! Additive decomposition engine: for a removal family {P_T}, the component
//! g_S(f) isolates the part of f attributable to exactly the coordinates S.
//!
//! Components satisfy the summation property P_{T̄}(f) = Σ_{S⊆T} g_S(f) and
//! come in two equivalent forms:
//!
//!   g_S(f) = P_{S̄}(f) − Σ_{T⊂S} g_T(f)                 (recursive)
//!          = Σ_{T⊆S} (−1)^{|S|−|T|} P_{T̄}(f)            (closed form)
//!
//! This module also computes minimal dependency structures (the maximal
//! coalitions a function fundamentally couples) and checks structural
//! properties of a family: idempotence, separability, and preservation of
//! independence, additivity, symmetry, and anonymity.

use crate::coalition::{all_coalitions, apply_permutation, subsets_of, Coalition, Permutation, SetFamily};
use crate::distributions::rng_stream;
use crate::exprfn::FunctionModel;
use crate::game::moebius_in_place;
use crate::removal::{draw_in, probe_points, remove, RemovalFamily};
use crate::{Error, Result};
use std::collections::BTreeMap;

/// Enumerating all 2^d components is capped here.
pub const MAX_DECOMPOSITION_PLAYERS: usize = 10;
/// Threshold below which a probed component counts as zero.
pub const DEFAULT_COMPONENT_EPS: f64 = 1e-6;
/// Default probe count for dependency-structure detection.
pub const DEFAULT_PROBE_COUNT: usize = 64;
/// The summation property of a full decomposition must hold this tightly.
pub const SUMMATION_TOLERANCE: f64 = 1e-8;

fn check_dims(family: &RemovalFamily, f: &FunctionModel) -> Result<usize> {
    let d = family.d();
    if f.d() != d {
        return Err(Error::DimensionMismatch(format!(
            "removal family over [{d}] decomposing a {}-variable function",
            f.d()
        )));
    }
    Ok(d)
}

fn check_cap(d: usize) -> Result<()> {
    if d > MAX_DECOMPOSITION_PLAYERS {
        return Err(Error::PlayerCount(d));
    }
    Ok(())
}

/// The component g_S(f) in closed form: the inclusion–exclusion
/// Σ_{T⊆S} (−1)^{|S|−|T|} P_{T̄}(f), with T enumerated in increasing
/// bitmask order.
pub fn cad_component(
    family: &RemovalFamily,
    f: &FunctionModel,
    s: &Coalition,
) -> Result<FunctionModel> {
    let d = check_dims(family, f)?;
    if s.d() != d {
        return Err(Error::DimensionMismatch(format!(
            "component index over [{}] for a family over [{d}]",
            s.d()
        )));
    }
    let mut parts = Vec::new();
    for t in subsets_of(s) {
        let sign = if (s.size() - t.size()) % 2 == 0 { 1.0 } else { -1.0 };
        parts.push((sign, remove(family, f, &t.complement())?));
    }
    FunctionModel::linear_combination(parts)
}

/// The component g_S(f) in recursive form: P_{S̄}(f) − Σ_{T⊂S} g_T(f).
/// Used to cross-check the closed form; both compute the same function.
pub fn cad_component_recursive(
    family: &RemovalFamily,
    f: &FunctionModel,
    s: &Coalition,
) -> Result<FunctionModel> {
    let d = check_dims(family, f)?;
    if s.d() != d {
        return Err(Error::DimensionMismatch(format!(
            "component index over [{}] for a family over [{d}]",
            s.d()
        )));
    }
    let mut built: BTreeMap<u32, FunctionModel> = BTreeMap::new();
    for t in subsets_of(s) {
        let mut parts = vec![(1.0, remove(family, f, &t.complement())?)];
        for sub in subsets_of(&t) {
            if sub != t {
                parts.push((-1.0, built[&sub.bits()].clone()));
            }
        }
        let g_t = FunctionModel::linear_combination(parts)?;
        built.insert(t.bits(), g_t);
    }
    Ok(built.remove(&s.bits()).expect("s was enumerated last"))
}

// ---------------------------------------------------------------------------
// DecompositionTable
// ---------------------------------------------------------------------------

/// All 2^d components of f under one removal family, with provenance.
#[derive(Clone)]
pub struct DecompositionTable {
    d: usize,
    family: RemovalFamily,
    model: FunctionModel,
    components: Vec<FunctionModel>,
}

impl DecompositionTable {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn family(&self) -> &RemovalFamily {
        &self.family
    }

    pub fn model(&self) -> &FunctionModel {
        &self.model
    }

    pub fn component(&self, s: &Coalition) -> Result<&FunctionModel> {
        if s.d() != self.d {
            return Err(Error::DimensionMismatch(format!(
                "coalition over [{}] indexing a decomposition over [{}]",
                s.d(),
                self.d
            )));
        }
        Ok(&self.components[s.bits() as usize])
    }

    /// (coalition, component) pairs in increasing bitmask order.
    pub fn components(&self) -> impl Iterator<Item = (Coalition, &FunctionModel)> {
        let d = self.d;
        self.components
            .iter()
            .enumerate()
            .map(move |(bits, g)| (Coalition::from_bits(bits as u32, d).unwrap(), g))
    }

    /// Σ_S g_S(f)(x), summed in increasing bitmask order; equals f(x) up to
    /// the summation tolerance.
    pub fn sum_at(&self, x: &[f64]) -> Result<f64> {
        let mut acc = 0.0;
        for g in &self.components {
            acc += g.evaluate(x)?;
        }
        Ok(acc)
    }

    /// JSON of component values on an evaluation grid:
    /// `{"grid": [[…]…], "components": {"<coalition label>": [values]}}`,
    /// with the empty coalition keyed by the empty string.
    pub fn export_grid_json(&self, grid: &[Vec<f64>]) -> Result<String> {
        let mut components = BTreeMap::new();
        for (s, g) in self.components() {
            let values = grid
                .iter()
                .map(|x| g.evaluate(x))
                .collect::<Result<Vec<f64>>>()?;
            components.insert(s.label(), values);
        }
        let doc = serde_json::json!({ "grid": grid, "components": components });
        Ok(serde_json::to_string_pretty(&doc)?)
    }
}

/// Computes all 2^d components and verifies the summation property
/// P_{T̄}(f) = Σ_{S⊆T} g_S(f) on seeded probe points before returning.
pub fn full_decomposition(family: &RemovalFamily, f: &FunctionModel) -> Result<DecompositionTable> {
    let d = check_dims(family, f)?;
    check_cap(d)?;
    let components = all_coalitions(d)?
        .map(|s| cad_component(family, f, &s))
        .collect::<Result<Vec<_>>>()?;
    let table = DecompositionTable {
        d,
        family: family.clone(),
        model: f.clone(),
        components,
    };

    let probes = probe_points(f.domain(), 8, 113);
    for x in &probes {
        let comp_vals = table
            .components
            .iter()
            .map(|g| g.evaluate(x))
            .collect::<Result<Vec<f64>>>()?;
        for t in all_coalitions(d)? {
            let removed = remove(family, f, &t.complement())?.evaluate(x)?;
            let summed: f64 = subsets_of(&t).map(|s| comp_vals[s.bits() as usize]).sum();
            if (removed - summed).abs() > SUMMATION_TOLERANCE {
                return Err(Error::Numeric(format!(
                    "summation property violated at T={t}: removal gives {removed}, \
                     components sum to {summed}"
                )));
            }
        }
    }
    Ok(table)
}

// ---------------------------------------------------------------------------
// Dependency structures
// ---------------------------------------------------------------------------

/// An antichain of coalitions over which f decomposes.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DependencyStructure {
    family: SetFamily,
}

impl DependencyStructure {
    pub fn new(family: SetFamily) -> Result<Self> {
        if !family.is_antichain() {
            return Err(Error::Coalition(format!(
                "a dependency structure must be an antichain, got {}",
                family.label()
            )));
        }
        Ok(DependencyStructure { family })
    }

    pub fn family(&self) -> &SetFamily {
        &self.family
    }

    pub fn members(&self) -> &[Coalition] {
        self.family.members()
    }

    pub fn label(&self) -> String {
        self.family.label()
    }
}

/// Per-coalition peak |g_S(f)| over probe points, for a substitution family
/// anchored at `baseline`. Computed per probe with one 2^d evaluation table
/// and a Möbius transform.
fn anchored_component_peaks(
    f: &FunctionModel,
    baseline: &[f64],
    probes: &[Vec<f64>],
) -> Result<Vec<f64>> {
    let d = f.d();
    let mut peaks = vec![0.0f64; 1 << d];
    for x in probes {
        // vals[T] = P_{T̄}(f)(x): keep exactly the coordinates in T.
        let mut vals = vec![0.0f64; 1 << d];
        for (bits, slot) in vals.iter_mut().enumerate() {
            let y: Vec<f64> = (0..d)
                .map(|j| {
                    if bits & (1 << j) != 0 {
                        x[j]
                    } else {
                        baseline[j]
                    }
                })
                .collect();
            *slot = f.evaluate(&y)?;
        }
        moebius_in_place(&mut vals, d);
        for (peak, v) in peaks.iter_mut().zip(&vals) {
            *peak = peak.max(v.abs());
        }
    }
    Ok(peaks)
}

/// The minimal dependency structure of f: the maximal coalitions with a
/// nonzero component under a minimal (substitution) decomposition, probed
/// numerically. The anchor point is drawn at random from the seeded stream
/// so that structure is not hidden by coincidental cancellation at a fixed
/// baseline.
pub fn minimal_dependency_structure(
    f: &FunctionModel,
    probe_count: usize,
    seed: u64,
    eps: f64,
) -> Result<DependencyStructure> {
    let d = f.d();
    check_cap(d)?;
    if probe_count == 0 {
        return Err(Error::Config("dependency probing needs probes >= 1".into()));
    }
    let mut baseline_rng = rng_stream(seed, 1);
    let baseline: Vec<f64> = f
        .domain()
        .iter()
        .map(|iv| draw_in(&mut baseline_rng, iv))
        .collect();
    let probes = probe_points(f.domain(), probe_count, seed);
    let peaks = anchored_component_peaks(f, &baseline, &probes)?;
    let members = (0..1u32 << d)
        .filter(|&bits| peaks[bits as usize] > eps)
        .map(|bits| Coalition::from_bits(bits, d).unwrap());
    let family = SetFamily::new(d, members)?;
    DependencyStructure::new(family.ceiling())
}

// ---------------------------------------------------------------------------
// Property checkers
// ---------------------------------------------------------------------------

/// Largest deviation seen by a checker, with where it occurred.
#[derive(Clone, Debug, PartialEq)]
pub struct DeviationWitness {
    /// Outer coalition of the failing comparison.
    pub outer: Coalition,
    /// Inner coalition of the failing comparison.
    pub inner: Coalition,
    pub x: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PropertyReport {
    pub holds: bool,
    pub max_deviation: f64,
    /// Present exactly when `holds` is false.
    pub witness: Option<DeviationWitness>,
}

struct DeviationTracker {
    tolerance: f64,
    max_deviation: f64,
    witness: Option<DeviationWitness>,
}

impl DeviationTracker {
    fn new(tolerance: f64) -> Result<Self> {
        if !(tolerance >= 0.0) {
            return Err(Error::Config(format!("bad tolerance {tolerance}")));
        }
        Ok(DeviationTracker {
            tolerance,
            max_deviation: 0.0,
            witness: None,
        })
    }

    fn observe(&mut self, outer: &Coalition, inner: &Coalition, x: &[f64], lhs: f64, rhs: f64) {
        let dev = (lhs - rhs).abs();
        if dev > self.max_deviation {
            self.max_deviation = dev;
            self.witness = Some(DeviationWitness {
                outer: *outer,
                inner: *inner,
                x: x.to_vec(),
                lhs,
                rhs,
            });
        }
    }

    fn finish(self) -> PropertyReport {
        let holds = self.max_deviation <= self.tolerance;
        PropertyReport {
            holds,
            max_deviation: self.max_deviation,
            witness: if holds { None } else { self.witness },
        }
    }
}

/// Checks the semi-trivial redecomposition pattern: decomposing a component
/// g_S(f) again must return g_S(f) for the S-component and 0 elsewhere.
pub fn check_idempotence(
    family: &RemovalFamily,
    f: &FunctionModel,
    tolerance: f64,
    probe_count: usize,
    seed: u64,
) -> Result<PropertyReport> {
    let d = check_dims(family, f)?;
    check_cap(d)?;
    let probes = probe_points(f.domain(), probe_count, seed);
    let mut tracker = DeviationTracker::new(tolerance)?;
    for s in all_coalitions(d)? {
        let g_s = cad_component(family, f, &s)?;
        for t in all_coalitions(d)? {
            let redecomposed = cad_component(family, &g_s, &t)?;
            for x in &probes {
                let lhs = redecomposed.evaluate(x)?;
                let rhs = if t == s { g_s.evaluate(x)? } else { 0.0 };
                tracker.observe(&t, &s, x, lhs, rhs);
            }
        }
    }
    Ok(tracker.finish())
}

/// All 4^d ordered coalition pairs, for exhaustive separability checks.
pub fn all_coalition_pairs(d: usize) -> Result<Vec<(Coalition, Coalition)>> {
    let mut pairs = Vec::new();
    for t in all_coalitions(d)? {
        for u in all_coalitions(d)? {
            pairs.push((t, u));
        }
    }
    Ok(pairs)
}

/// Checks P_{T′}(P_T(f)) == P_{T∪T′}(f) on probes for the given pairs.
pub fn check_separability(
    family: &RemovalFamily,
    f: &FunctionModel,
    pairs: &[(Coalition, Coalition)],
    tolerance: f64,
    probe_count: usize,
    seed: u64,
) -> Result<PropertyReport> {
    check_dims(family, f)?;
    let probes = probe_points(f.domain(), probe_count, seed);
    let mut tracker = DeviationTracker::new(tolerance)?;
    for (t, u) in pairs {
        let composed = remove(family, &remove(family, f, t)?, u)?;
        let joint = remove(family, f, &t.union(u)?)?;
        for x in &probes {
            tracker.observe(t, u, x, composed.evaluate(x)?, joint.evaluate(x)?);
        }
    }
    Ok(tracker.finish())
}

/// A declared structural premise about f. The premise is asserted by the
/// caller, not inferred: the checker tests the family's removal-operator
/// condition given that structure.
#[derive(Clone, Debug)]
pub enum PreservationCase {
    /// f does not depend on coordinate i.
    IndependentVariable(usize),
    /// f = h(x_{−i}) + g(x_i) for some h, g.
    AdditiveVariable(usize),
    /// f is unchanged by swapping coordinates i and j.
    SymmetricPair(usize, usize),
    /// Tests equivariance under this permutation.
    Permutation(Permutation),
}

impl PreservationCase {
    pub fn kind(&self) -> &'static str {
        match self {
            PreservationCase::IndependentVariable(_) => "independence",
            PreservationCase::AdditiveVariable(_) => "additivity",
            PreservationCase::SymmetricPair(_, _) => "symmetry",
            PreservationCase::Permutation(_) => "anonymity",
        }
    }
}

fn check_player(i: usize, d: usize) -> Result<()> {
    if i == 0 || i > d {
        return Err(Error::Coalition(format!("player {i} out of range 1..={d}")));
    }
    Ok(())
}

/// Checks the removal-operator condition matching the declared case:
///
/// - independent variable i:  P_T(f) == P_{T∪i}(f) for all T ∌ i
/// - additive variable i:     P_{T∪i}(f) − P_T(f) is the same function for
///   all T ∌ i (compared against the T = ∅ difference)
/// - symmetric pair (i, j):   P_{S∪i}(f)(x) == P_{S∪j}(f)(x) whenever
///   x_i = x_j, for all S disjoint from {i, j}
/// - permutation π:           P_S(πf)(πx) == P_{πS}(f)(x) for all S
pub fn check_preservation(
    family: &RemovalFamily,
    f: &FunctionModel,
    case: &PreservationCase,
    tolerance: f64,
    probe_count: usize,
    seed: u64,
) -> Result<PropertyReport> {
    let d = check_dims(family, f)?;
    check_cap(d)?;
    let probes = probe_points(f.domain(), probe_count, seed);
    let mut tracker = DeviationTracker::new(tolerance)?;
    match case {
        PreservationCase::IndependentVariable(i) => {
            check_player(*i, d)?;
            let single = Coalition::from_players([*i], d)?;
            for t in all_coalitions(d)? {
                if t.contains(*i) {
                    continue;
                }
                let without = remove(family, f, &t)?;
                let with = remove(family, f, &t.union(&single)?)?;
                for x in &probes {
                    tracker.observe(&t, &single, x, without.evaluate(x)?, with.evaluate(x)?);
                }
            }
        }
        PreservationCase::AdditiveVariable(i) => {
            check_player(*i, d)?;
            let single = Coalition::from_players([*i], d)?;
            let base_diff = |x: &[f64]| -> Result<f64> {
                Ok(remove(family, f, &single)?.evaluate(x)? - f.evaluate(x)?)
            };
            for t in all_coalitions(d)? {
                if t.contains(*i) || t.is_empty() {
                    continue;
                }
                let without = remove(family, f, &t)?;
                let with = remove(family, f, &t.union(&single)?)?;
                for x in &probes {
                    let diff_t = with.evaluate(x)? - without.evaluate(x)?;
                    tracker.observe(&t, &single, x, diff_t, base_diff(x)?);
                }
            }
        }
        PreservationCase::SymmetricPair(i, j) => {
            check_player(*i, d)?;
            check_player(*j, d)?;
            if i == j {
                return Err(Error::Coalition("symmetric pair needs i != j".into()));
            }
            let si = Coalition::from_players([*i], d)?;
            let sj = Coalition::from_players([*j], d)?;
            let pair = si.union(&sj)?;
            for s in all_coalitions(d)? {
                if !s.is_disjoint_from(&pair) {
                    continue;
                }
                let with_i = remove(family, f, &s.union(&si)?)?;
                let with_j = remove(family, f, &s.union(&sj)?)?;
                for x in &probes {
                    let mut tied = x.clone();
                    tied[*j - 1] = tied[*i - 1];
                    tracker.observe(
                        &s.union(&si)?,
                        &s.union(&sj)?,
                        &tied,
                        with_i.evaluate(&tied)?,
                        with_j.evaluate(&tied)?,
                    );
                }
            }
        }
        PreservationCase::Permutation(pi) => {
            if pi.d() != d {
                return Err(Error::DimensionMismatch(format!(
                    "permutation of [{}] for a family over [{d}]",
                    pi.d()
                )));
            }
            let pf = f.permuted(pi)?;
            for s in all_coalitions(d)? {
                let lhs_fn = remove(family, &pf, &s)?;
                let rhs_fn = remove(family, f, &apply_permutation(pi, &s)?)?;
                for x in &probes {
                    let px = pi.permute_point(x)?;
                    tracker.observe(
                        &s,
                        &apply_permutation(pi, &s)?,
                        x,
                        lhs_fn.evaluate(&px)?,
                        rhs_fn.evaluate(x)?,
                    );
                }
            }
        }
    }
    Ok(tracker.finish())
}
