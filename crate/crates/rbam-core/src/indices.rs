//! Values and interaction indices on cooperative games: Shapley, Banzhaf,
//! probabilistic and random-order values, the Shapley/Banzhaf/Shapley-Taylor
//! interaction indices, and a coefficient-taxonomy classifier.

use crate::coalition::{all_coalitions, subsets_of, Coalition, Permutation};
use crate::game::CooperativeGame;
use crate::{exec, Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Exact binomial coefficient as a float; n ≤ 24 keeps this integral.
pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut num: u64 = 1;
    for i in 0..k {
        num = num * (n - i) as u64 / (i + 1) as u64;
    }
    num as f64
}

/// A per-player attribution vector, 1-indexed through [`ValueVector::get`].
#[derive(Clone, PartialEq, Debug)]
pub struct ValueVector {
    values: Vec<f64>,
}

impl ValueVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite value {bad}")));
        }
        Ok(ValueVector { values })
    }

    pub fn d(&self) -> usize {
        self.values.len()
    }

    /// Value of 1-indexed player `i`.
    pub fn get(&self, i: usize) -> f64 {
        self.values[i - 1]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Interaction values for every coalition with 1 ≤ |S| ≤ order.
#[derive(Clone, PartialEq, Debug)]
pub struct InteractionTable {
    d: usize,
    order: usize,
    values: BTreeMap<u32, f64>,
}

impl InteractionTable {
    pub fn new(d: usize, order: usize, values: BTreeMap<u32, f64>) -> Result<Self> {
        let _ = Coalition::empty(d)?;
        if order == 0 || order > d {
            return Err(Error::Config(format!("order {order} outside 1..={d}")));
        }
        for &bits in values.keys() {
            let c = Coalition::from_bits(bits, d)?;
            if c.is_empty() || c.size() > order {
                return Err(Error::Config(format!(
                    "entry {c} violates the order-{order} bound"
                )));
            }
        }
        Ok(InteractionTable { d, order, values })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, s: &Coalition) -> Option<f64> {
        self.values.get(&s.bits()).copied()
    }

    /// Entries in increasing bitmask order.
    pub fn entries(&self) -> impl Iterator<Item = (Coalition, f64)> + '_ {
        self.values
            .iter()
            .map(|(&bits, &v)| (Coalition::from_bits(bits, self.d).expect("valid key"), v))
    }

    /// Sum of all entries, in increasing bitmask order (interaction
    /// efficiency compares this against v(N)).
    pub fn sum(&self) -> f64 {
        self.values.values().sum()
    }

    /// The singleton slice as a per-player vector.
    pub fn singleton_values(&self) -> Result<ValueVector> {
        let mut out = Vec::with_capacity(self.d);
        for i in 1..=self.d {
            let c = Coalition::from_players([i], self.d)?;
            out.push(self.get(&c).ok_or_else(|| {
                Error::Config(format!("missing singleton entry for player {i}"))
            })?);
        }
        ValueVector::new(out)
    }

    pub fn to_json(&self) -> Result<String> {
        let values: BTreeMap<String, f64> = self
            .entries()
            .map(|(c, v)| (c.label(), v))
            .collect();
        Ok(serde_json::to_string_pretty(&InteractionJson {
            order: self.order,
            d: self.d,
            values,
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let parsed: InteractionJson = serde_json::from_str(text)?;
        let mut values = BTreeMap::new();
        for (label, v) in &parsed.values {
            values.insert(Coalition::parse_label(label, parsed.d)?.bits(), *v);
        }
        InteractionTable::new(parsed.d, parsed.order, values)
    }
}

#[derive(Serialize, Deserialize)]
struct InteractionJson {
    order: usize,
    d: usize,
    values: BTreeMap<String, f64>,
}

/// Per-player subset weights α_S^i over S ⊆ N∖i; probabilistic values
/// require each player's weights to be nonnegative and sum to 1.
#[derive(Clone, Debug)]
pub struct SubsetWeights {
    d: usize,
    per_player: Vec<BTreeMap<u32, f64>>,
}

impl SubsetWeights {
    /// Builds dense weights from a rule; `weight(i, s)` is queried for every
    /// S ⊆ N∖i in increasing bitmask order.
    pub fn from_fn<F: Fn(usize, &Coalition) -> f64>(d: usize, weight: F) -> Result<Self> {
        let _ = Coalition::empty(d)?;
        let mut per_player = Vec::with_capacity(d);
        for i in 1..=d {
            let others = Coalition::from_players([i], d)?.complement();
            let mut map = BTreeMap::new();
            for s in subsets_of(&others) {
                map.insert(s.bits(), weight(i, &s));
            }
            per_player.push(map);
        }
        Ok(SubsetWeights { d, per_player })
    }

    /// Uniform weights 1/2^{d−1}; turns the probabilistic value into the
    /// Banzhaf value.
    pub fn uniform(d: usize) -> Result<Self> {
        let w = 1.0 / (1u64 << (d - 1)) as f64;
        Self::from_fn(d, |_, _| w)
    }

    /// Shapley weights (1/d)·C(d−1,|S|)^{-1}.
    pub fn shapley(d: usize) -> Result<Self> {
        Self::from_fn(d, move |_, s| 1.0 / (d as f64 * binomial(d - 1, s.size())))
    }

    /// All weight on S = N∖i, giving φ_i = v(N) − v(N∖i).
    pub fn grand_complement(d: usize) -> Result<Self> {
        Self::from_fn(d, |i, s| if s.size() == d - 1 && !s.contains(i) { 1.0 } else { 0.0 })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn get(&self, i: usize, s: &Coalition) -> f64 {
        self.per_player[i - 1].get(&s.bits()).copied().unwrap_or(0.0)
    }

    /// Checks nonnegativity and per-player normalization (tolerance 1e-9).
    pub fn validate_probabilistic(&self) -> Result<()> {
        for (idx, map) in self.per_player.iter().enumerate() {
            let mut total = 0.0;
            for (&bits, &w) in map {
                if w < 0.0 {
                    return Err(Error::Weights(format!(
                        "negative weight {w} for player {} at subset bitmask {bits}",
                        idx + 1
                    )));
                }
                total += w;
            }
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::Weights(format!(
                    "weights of player {} sum to {total}, expected 1",
                    idx + 1
                )));
            }
        }
        Ok(())
    }
}

/// The Shapley value φ_i = (1/d) Σ_{S⊆N∖i} C(d−1,|S|)^{-1} (v(S∪i) − v(S)).
pub fn shapley_value(v: &CooperativeGame) -> Result<ValueVector> {
    let d = v.d();
    let mut out = Vec::with_capacity(d);
    for i in 1..=d {
        let others = Coalition::from_players([i], d)?.complement();
        let mut acc = 0.0;
        for s in subsets_of(&others) {
            let w = 1.0 / (d as f64 * binomial(d - 1, s.size()));
            acc += w * (v.value(&s.insert(i)?) - v.value(&s));
        }
        out.push(acc);
    }
    ValueVector::new(out)
}

/// The Banzhaf value: the plain average marginal contribution over the
/// 2^{d−1} coalitions not containing the player.
pub fn banzhaf_value(v: &CooperativeGame) -> Result<ValueVector> {
    let d = v.d();
    let w = 1.0 / (1u64 << (d - 1)) as f64;
    let mut out = Vec::with_capacity(d);
    for i in 1..=d {
        let others = Coalition::from_players([i], d)?.complement();
        let mut acc = 0.0;
        for s in subsets_of(&others) {
            acc += w * (v.value(&s.insert(i)?) - v.value(&s));
        }
        out.push(acc);
    }
    ValueVector::new(out)
}

/// Probabilistic value φ_i = Σ_{S⊆N∖i} α_S^i (v(S∪i) − v(S)) for validated
/// per-player weight distributions.
pub fn probabilistic_value(v: &CooperativeGame, weights: &SubsetWeights) -> Result<ValueVector> {
    if weights.d() != v.d() {
        return Err(Error::DimensionMismatch(format!(
            "weights over [{}] on a game over [{}]",
            weights.d(),
            v.d()
        )));
    }
    weights.validate_probabilistic()?;
    let d = v.d();
    let mut out = Vec::with_capacity(d);
    for i in 1..=d {
        let others = Coalition::from_players([i], d)?.complement();
        let mut acc = 0.0;
        for s in subsets_of(&others) {
            acc += weights.get(i, &s) * (v.value(&s.insert(i)?) - v.value(&s));
        }
        out.push(acc);
    }
    ValueVector::new(out)
}

/// Random-order value: φ_i = Σ_π w(π)·(v(pred_π(i)∪i) − v(pred_π(i))), where
/// pred_π(i) are the players listed before i when π is read as an ordering
/// (π(1) first). Enumeration-based; capped at d ≤ 8.
pub fn random_order_value(
    v: &CooperativeGame,
    perm_weights: &[(Permutation, f64)],
) -> Result<ValueVector> {
    let d = v.d();
    if d > 8 {
        return Err(Error::Config(format!(
            "random-order value capped at d <= 8, got {d}"
        )));
    }
    let mut total = 0.0;
    for (pi, w) in perm_weights {
        if pi.d() != d {
            return Err(Error::DimensionMismatch(format!(
                "permutation of [{}] on a game over [{d}]",
                pi.d()
            )));
        }
        if *w < 0.0 {
            return Err(Error::Weights(format!("negative permutation weight {w}")));
        }
        total += w;
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Weights(format!(
            "permutation weights sum to {total}, expected 1"
        )));
    }
    let mut out = vec![0.0; d];
    for (pi, w) in perm_weights {
        let mut pred = Coalition::empty(d)?;
        for pos in 1..=d {
            let player = pi.apply(pos);
            let with = pred.insert(player)?;
            out[player - 1] += w * (v.value(&with) - v.value(&pred));
            pred = with;
        }
    }
    ValueVector::new(out)
}

/// Shared driver: builds a full interaction table from a per-(S,T) weight.
fn interaction_table<W>(v: &CooperativeGame, order: usize, weight: W) -> Result<InteractionTable>
where
    W: Fn(usize, usize) -> f64 + Sync + Send,
{
    let d = v.d();
    let n_masks = 1usize << d;
    let rows = exec::try_map_indexed(n_masks, |mask| {
        let s = Coalition::from_bits(mask as u32, d)?;
        if s.is_empty() || s.size() > order {
            return Ok(None);
        }
        let mut acc = 0.0;
        for t in subsets_of(&s.complement()) {
            acc += weight(s.size(), t.size()) * v.discrete_derivative(&s, &t)?;
        }
        Ok(Some((mask as u32, acc)))
    })?;
    let values: BTreeMap<u32, f64> = rows.into_iter().flatten().collect();
    InteractionTable::new(d, order, values)
}

/// Shapley interaction index
/// φ_S = Σ_{T⊆N∖S} (|S|/(|S|+|T|))·C(d,|S|+|T|)^{-1}·Δ_S v(T); the singleton
/// slice coincides with the Shapley value.
pub fn shapley_interaction_index(v: &CooperativeGame) -> Result<InteractionTable> {
    let d = v.d();
    interaction_table(v, d, move |s, t| {
        s as f64 / (s + t) as f64 / binomial(d, s + t)
    })
}

/// Banzhaf interaction index φ_S = Σ_{T⊆N∖S} 2^{-(d−|S|)}·Δ_S v(T).
pub fn banzhaf_interaction_index(v: &CooperativeGame) -> Result<InteractionTable> {
    let d = v.d();
    interaction_table(v, d, move |s, _| 1.0 / (1u64 << (d - s)) as f64)
}

/// Shapley-Taylor interaction index of order k: Δ_S v(∅) below the order,
/// (k/d)·Σ_{T⊆N∖S} C(d−1,|T|)^{-1}·Δ_S v(T) at the order; satisfies
/// interaction efficiency (entries sum to v(N)).
pub fn shapley_taylor_index(v: &CooperativeGame, k: usize) -> Result<InteractionTable> {
    let d = v.d();
    if k == 0 || k > d {
        return Err(Error::Config(format!("order {k} outside 1..={d}")));
    }
    let n_masks = 1usize << d;
    let empty = Coalition::empty(d)?;
    let rows = exec::try_map_indexed(n_masks, |mask| {
        let s = Coalition::from_bits(mask as u32, d)?;
        if s.is_empty() || s.size() > k {
            return Ok(None);
        }
        let phi = if s.size() < k {
            v.discrete_derivative(&s, &empty)?
        } else {
            let mut acc = 0.0;
            for t in subsets_of(&s.complement()) {
                acc += v.discrete_derivative(&s, &t)? / binomial(d - 1, t.size());
            }
            acc * k as f64 / d as f64
        };
        Ok(Some((mask as u32, phi)))
    })?;
    let values: BTreeMap<u32, f64> = rows.into_iter().flatten().collect();
    InteractionTable::new(d, k, values)
}

/// Absolute tolerance for every identity test in [`classify_aggregation`].
pub const CLASSIFY_TOLERANCE: f64 = 1e-9;

/// Places an aggregation scheme in the taxonomy of values. Labels are a set
/// (families overlap), from general to specific:
///
/// - `mc`: a weighted sum of marginal contributions — either stored in
///   derivative form, or an explicit table satisfying the alternating-sign
///   identity α_T^S = −α_{T∪i}^S.
/// - `probabilistic`: order 1, and each player's marginal-contribution
///   weights form a probability distribution (β ≥ 0, Σ β = 1).
/// - `cardinal-probabilistic`: probabilistic with weights depending only on
///   |T| (the semivalues).
/// - `random-order`: probabilistic and efficient — Σ_i m_i recovers v([d])
///   on every game.
/// - `shapley` / `banzhaf`: the weights match those formulas exactly.
///
/// Non-mc schemes get the empty set; schemes of order > 1 get at most `mc`
/// (the finer labels describe per-player values).
pub fn classify_aggregation(
    scheme: &crate::rbam::AggregationScheme,
    d: usize,
) -> Result<std::collections::BTreeSet<String>> {
    scheme.validate(d)?;
    let tol = CLASSIFY_TOLERANCE;
    let mut labels = std::collections::BTreeSet::new();
    let mc = scheme.has_derivative_form()
        || crate::rbam::sign_flip_witness(scheme, d, tol)?.is_none();
    if !mc {
        return Ok(labels);
    }
    labels.insert("mc".to_string());
    if scheme.order() != 1 {
        return Ok(labels);
    }

    // β_T^i for every player and every T ⊆ [d]∖i. Explicit tables that
    // passed the alternating-sign test recover β through the complement
    // identity β_T^i = α_{comp(T∪i)}^i.
    let mut beta: Vec<BTreeMap<u32, f64>> = Vec::with_capacity(d);
    for i in 1..=d {
        let si = Coalition::from_players([i], d)?;
        let mut per_player = BTreeMap::new();
        for t in subsets_of(&si.complement()) {
            let w = match scheme.derivative_weight(&si, &t)? {
                Some(w) => w,
                None => scheme.alpha(&si, &t.union(&si)?.complement())?,
            };
            per_player.insert(t.bits(), w);
        }
        beta.push(per_player);
    }

    let probabilistic = beta.iter().all(|per| {
        per.values().all(|&w| w >= -tol)
            && (per.values().sum::<f64>() - 1.0).abs() <= tol
    });
    if !probabilistic {
        return Ok(labels);
    }
    labels.insert("probabilistic".to_string());

    let cardinal = beta.iter().all(|per| {
        per.iter().all(|(&bits, &w)| {
            let t = bits.count_ones() as usize;
            (w - beta[0][&lowest_mask_of_size(t, d, 0)]).abs() <= tol
        })
    });
    if cardinal {
        labels.insert("cardinal-probabilistic".to_string());
    }

    // Efficiency: expanding Σ_i Σ_T β_T^i [v(T∪i) − v(T)] and matching the
    // coefficient of each v(U) (the empty coalition is pinned to worth 0).
    let mut efficient = true;
    'outer: for u in all_coalitions(d)? {
        if u.is_empty() {
            continue;
        }
        let mut coefficient = 0.0;
        for i in 1..=d {
            if u.contains(i) {
                coefficient += beta[i - 1][&u.remove(i)?.bits()];
            } else {
                coefficient -= beta[i - 1][&u.bits()];
            }
        }
        let target = if u.size() == d { 1.0 } else { 0.0 };
        if (coefficient - target).abs() > tol {
            efficient = false;
            break 'outer;
        }
    }
    if efficient {
        labels.insert("random-order".to_string());
    }

    let matches_formula = |formula: &dyn Fn(usize) -> f64| {
        beta.iter().all(|per| {
            per.iter()
                .all(|(&bits, &w)| (w - formula(bits.count_ones() as usize)).abs() <= tol)
        })
    };
    if matches_formula(&|t| 1.0 / (d as f64 * binomial(d - 1, t))) {
        labels.insert("shapley".to_string());
    }
    if matches_formula(&|t| {
        let _ = t;
        1.0 / (1u64 << (d - 1)) as f64
    }) {
        labels.insert("banzhaf".to_string());
    }
    Ok(labels)
}

/// Bitmask of the size-`t` subset of [d]∖{player+1} with the smallest bits,
/// used as the per-size reference key in the cardinal test.
fn lowest_mask_of_size(t: usize, d: usize, skip_bit: usize) -> u32 {
    let mut mask = 0u32;
    let mut placed = 0;
    for b in 0..d {
        if b == skip_bit {
            continue;
        }
        if placed == t {
            break;
        }
        mask |= 1 << b;
        placed += 1;
    }
    mask
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::fixtures::{game_a, game_ex};
    use crate::game::{permuted_game, reduced_game, unanimity_game};

    fn c(players: &[usize], d: usize) -> Coalition {
        Coalition::from_players(players.iter().copied(), d).unwrap()
    }

    /// Permutation brute-force oracle for the Shapley value.
    fn shapley_oracle(v: &CooperativeGame) -> Vec<f64> {
        let d = v.d();
        let perms = Permutation::all(d).unwrap();
        let mut out = vec![0.0; d];
        for pi in &perms {
            let mut pred = Coalition::empty(d).unwrap();
            for pos in 1..=d {
                let player = pi.apply(pos);
                let with = pred.insert(player).unwrap();
                out[player - 1] += v.value(&with) - v.value(&pred);
                pred = with;
            }
        }
        for x in &mut out {
            *x /= perms.len() as f64;
        }
        out
    }

    #[test]
    fn shapley_of_game_a() {
        let v = game_a();
        let oracle = shapley_oracle(&v);
        for (a, b) in oracle.iter().zip([3.0, 14.0, 10.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        let phi = shapley_value(&v).unwrap();
        for (i, expect) in [(1, 3.0), (2, 14.0), (3, 10.0)] {
            assert!((phi.get(i) - expect).abs() < 1e-12);
        }
        assert!((phi.sum() - v.grand_value()).abs() < 1e-10);
    }

    #[test]
    fn shapley_of_unanimity_splits_evenly() {
        for d in 2..=5 {
            for r in all_coalitions(d).unwrap() {
                if r.is_empty() {
                    continue;
                }
                let v = unanimity_game(&r, d).unwrap();
                let phi = shapley_value(&v).unwrap();
                for i in 1..=d {
                    let expect = if r.contains(i) { 1.0 / r.size() as f64 } else { 0.0 };
                    assert!((phi.get(i) - expect).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn shapley_of_zero_game() {
        let phi = shapley_value(&CooperativeGame::zero(4).unwrap()).unwrap();
        assert_eq!(phi.as_slice(), &[0.0; 4]);
    }

    /// Direct-average oracle for the Banzhaf value.
    fn banzhaf_oracle(v: &CooperativeGame, i: usize) -> f64 {
        let others = c(&[i], v.d()).complement();
        let contributions: Vec<f64> = subsets_of(&others)
            .map(|s| v.value(&s.insert(i).unwrap()) - v.value(&s))
            .collect();
        contributions.iter().sum::<f64>() / contributions.len() as f64
    }

    #[test]
    fn banzhaf_of_game_a() {
        let v = game_a();
        let phi = banzhaf_value(&v).unwrap();
        for (i, expect) in [(1, 3.0), (2, 14.0), (3, 10.0)] {
            assert!((banzhaf_oracle(&v, i) - expect).abs() < 1e-12);
            assert!((phi.get(i) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn banzhaf_of_pair_unanimity() {
        let v = unanimity_game(&c(&[1, 2], 2), 2).unwrap();
        let phi = banzhaf_value(&v).unwrap();
        assert_eq!(phi.as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn banzhaf_of_additive_game_returns_dividends() {
        // Dividends only on singletons make every player dummy.
        let dividends = vec![0.0, 2.5, -1.0, 0.0, 4.0, 0.0, 0.0, 0.0];
        let v = CooperativeGame::inverse_moebius(3, &dividends).unwrap();
        let phi = banzhaf_value(&v).unwrap();
        for (i, expect) in [(1, 2.5), (2, -1.0), (3, 4.0)] {
            assert!((phi.get(i) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn probabilistic_value_special_cases() {
        let v = game_a();
        let uni = probabilistic_value(&v, &SubsetWeights::uniform(3).unwrap()).unwrap();
        let bz = banzhaf_value(&v).unwrap();
        assert_eq!(uni.as_slice(), bz.as_slice());

        let grand = probabilistic_value(&v, &SubsetWeights::grand_complement(3).unwrap()).unwrap();
        for i in 1..=3 {
            let rest = c(&[i], 3).complement();
            let expect = v.grand_value() - v.value(&rest);
            assert!((grand.get(i) - expect).abs() < 1e-12);
        }

        let sh = probabilistic_value(&v, &SubsetWeights::shapley(3).unwrap()).unwrap();
        let phi = shapley_value(&v).unwrap();
        for i in 1..=3 {
            assert!((sh.get(i) - phi.get(i)).abs() < 1e-12);
        }
    }

    #[test]
    fn probabilistic_value_rejects_bad_weights() {
        let v = game_a();
        let negative = SubsetWeights::from_fn(3, |_, s| if s.is_empty() { -1.0 } else { 0.5 }).unwrap();
        assert!(matches!(
            probabilistic_value(&v, &negative),
            Err(Error::Weights(_))
        ));
        let unnormalized = SubsetWeights::from_fn(3, |_, _| 2.0).unwrap();
        assert!(matches!(
            probabilistic_value(&v, &unnormalized),
            Err(Error::Weights(_))
        ));
    }

    #[test]
    fn random_order_uniform_is_shapley() {
        let v = game_ex();
        let perms = Permutation::all(3).unwrap();
        let w = 1.0 / perms.len() as f64;
        let weighted: Vec<_> = perms.into_iter().map(|p| (p, w)).collect();
        let ro = random_order_value(&v, &weighted).unwrap();
        let phi = shapley_value(&v).unwrap();
        for i in 1..=3 {
            assert!((ro.get(i) - phi.get(i)).abs() < 1e-12);
        }
    }

    #[test]
    fn random_order_point_mass_telescopes() {
        let v = game_a();
        let order = Permutation::new(vec![1, 2, 3]).unwrap();
        let ro = random_order_value(&v, &[(order, 1.0)]).unwrap();
        assert_eq!(ro.get(1), v.value(&c(&[1], 3)));
        assert_eq!(ro.get(2), v.value(&c(&[1, 2], 3)) - v.value(&c(&[1], 3)));
        assert_eq!(ro.get(3), v.grand_value() - v.value(&c(&[1, 2], 3)));
        assert!((ro.sum() - v.grand_value()).abs() < 1e-12);
    }

    #[test]
    fn random_order_two_order_mixture() {
        // Hand evaluation for player 3: 0.5·(v3−v∅) + 0.5·(v123−v12).
        let v = game_a();
        let a = Permutation::new(vec![3, 1, 2]).unwrap();
        let b = Permutation::new(vec![1, 2, 3]).unwrap();
        let oracle = 0.5 * (v.value(&c(&[3], 3)) - 0.0)
            + 0.5 * (v.grand_value() - v.value(&c(&[1, 2], 3)));
        assert_eq!(oracle, 10.0);
        let ro = random_order_value(&v, &[(a, 0.5), (b, 0.5)]).unwrap();
        assert!((ro.get(3) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn random_order_validation() {
        let v = game_a();
        let order = Permutation::new(vec![1, 2, 3]).unwrap();
        assert!(random_order_value(&v, &[(order.clone(), 0.5)]).is_err());
        assert!(random_order_value(&v, &[(order, -1.0)]).is_err());
    }

    #[test]
    fn shapley_interaction_of_game_a() {
        let v = game_a();
        // Two-term oracle: (2/2)·C(3,2)^{-1}·Δ_{23}v(∅) + (2/3)·C(3,3)^{-1}·Δ_{23}v({1}).
        let d0 = v.discrete_derivative(&c(&[2, 3], 3), &c(&[], 3)).unwrap();
        let d1 = v.discrete_derivative(&c(&[2, 3], 3), &c(&[1], 3)).unwrap();
        let oracle = (2.0 / 2.0) / binomial(3, 2) * d0 + (2.0 / 3.0) / binomial(3, 3) * d1;
        assert!((oracle - 20.0).abs() < 1e-12);

        let table = shapley_interaction_index(&v).unwrap();
        assert!((table.get(&c(&[2, 3], 3)).unwrap() - 20.0).abs() < 1e-12);
        assert!(table.get(&c(&[1, 2], 3)).unwrap().abs() < 1e-12);
        // Singleton slice is the Shapley value.
        let phi = shapley_value(&v).unwrap();
        let singles = table.singleton_values().unwrap();
        for i in 1..=3 {
            assert!((singles.get(i) - phi.get(i)).abs() < 1e-12);
        }
    }

    #[test]
    fn shapley_interaction_of_conditional_game_fixture() {
        // Verbatim conditional game for f = x1 + x2 under correlation σ:
        // v({1}) = x1 − σ/2, v({2}) = x2 − σ/2, v({1,2}) = x1 + x2.
        // Dyadic inputs keep the identity exact in floating point.
        let (x1, x2, sigma) = (0.25, 0.5, 0.5);
        let v = CooperativeGame::new(
            2,
            vec![0.0, x1 - sigma / 2.0, x2 - sigma / 2.0, x1 + x2],
        )
        .unwrap();
        let table = shapley_interaction_index(&v).unwrap();
        assert_eq!(table.get(&c(&[1, 2], 2)).unwrap(), sigma);
    }

    #[test]
    fn banzhaf_interaction_of_game_a() {
        let v = game_a();
        let table = banzhaf_interaction_index(&v).unwrap();
        // Oracle: (1/2)(Δ_{23}v(∅) + Δ_{23}v({1})) = (1/2)(20 + 20).
        assert!((table.get(&c(&[2, 3], 3)).unwrap() - 20.0).abs() < 1e-12);
        let bz = banzhaf_value(&v).unwrap();
        let singles = table.singleton_values().unwrap();
        for i in 1..=3 {
            assert!((singles.get(i) - bz.get(i)).abs() < 1e-12);
        }
    }

    #[test]
    fn banzhaf_interaction_of_unanimity_base() {
        for d in 2..=4 {
            let r = Coalition::from_players(1..=d.min(3), d).unwrap();
            let v = unanimity_game(&r, d).unwrap();
            let table = banzhaf_interaction_index(&v).unwrap();
            assert!((table.get(&r).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn shapley_taylor_on_game_a() {
        let v = game_a();
        let table = shapley_taylor_index(&v, 2).unwrap();
        let expect = [
            (c(&[1], 3), 3.0),
            (c(&[2], 3), 4.0),
            (c(&[3], 3), 0.0),
            (c(&[1, 2], 3), 0.0),
            (c(&[1, 3], 3), 0.0),
            (c(&[2, 3], 3), 20.0),
        ];
        for (s, val) in expect {
            assert!((table.get(&s).unwrap() - val).abs() < 1e-12);
        }
        // Interaction efficiency: all entries sum to v(N).
        assert!((table.sum() - 27.0).abs() < 1e-10);
    }

    #[test]
    fn shapley_taylor_order_one_is_shapley() {
        let v = game_ex();
        let table = shapley_taylor_index(&v, 1).unwrap();
        let phi = shapley_value(&v).unwrap();
        let singles = table.singleton_values().unwrap();
        for i in 1..=3 {
            assert!((singles.get(i) - phi.get(i)).abs() < 1e-12);
        }
    }

    #[test]
    fn shapley_taylor_interaction_distribution_on_unanimity() {
        let full = Coalition::full(3).unwrap();
        let v = unanimity_game(&full, 3).unwrap();
        let table = shapley_taylor_index(&v, 3).unwrap();
        assert!((table.get(&full).unwrap() - 1.0).abs() < 1e-12);
        for s in all_coalitions(3).unwrap() {
            if !s.is_empty() && s != full {
                assert!(table.get(&s).unwrap().abs() < 1e-12);
            }
        }
        assert!(shapley_taylor_index(&v, 0).is_err());
        assert!(shapley_taylor_index(&v, 4).is_err());
    }

    #[test]
    fn reduced_partnership_consistency_of_interaction_indices() {
        // For a partnership P, φ_P(v) equals the merged player's singleton
        // value in the reduced game, for both interaction indices.
        let r = c(&[1, 3], 3);
        let base = unanimity_game(&r, 3).unwrap();
        let noise = unanimity_game(&c(&[2], 3), 3).unwrap();
        let v = CooperativeGame::linear_combination(&[(2.0, &base), (0.7, &noise)]).unwrap();
        assert!(v.is_partnership(&r, 1e-12).unwrap());
        let reduced = reduced_game(&v, &r).unwrap();
        let merged = c(&[reduced.d()], reduced.d());

        let sii = shapley_interaction_index(&v).unwrap();
        let sii_red = shapley_interaction_index(&reduced).unwrap();
        assert!((sii.get(&r).unwrap() - sii_red.get(&merged).unwrap()).abs() < 1e-12);

        let bii = banzhaf_interaction_index(&v).unwrap();
        let bii_red = banzhaf_interaction_index(&reduced).unwrap();
        assert!((bii.get(&r).unwrap() - bii_red.get(&merged).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn anonymity_of_values() {
        let v = game_a();
        let pi = Permutation::new(vec![2, 3, 1]).unwrap();
        let pv = permuted_game(&pi, &v).unwrap();
        let phi = shapley_value(&v).unwrap();
        let phi_p = shapley_value(&pv).unwrap();
        for i in 1..=3 {
            assert!((phi_p.get(pi.apply(i)) - phi.get(i)).abs() < 1e-12);
        }
    }

    #[test]
    fn interaction_table_json_round_trip() {
        let v = game_a();
        let table = shapley_taylor_index(&v, 2).unwrap();
        let text = table.to_json().unwrap();
        let back = InteractionTable::from_json(&text).unwrap();
        assert_eq!(back, table);
    }

    use crate::rbam::{AggregationScheme, PresetAggregation};
    use std::collections::BTreeSet;

    fn labels_of(scheme: &AggregationScheme, d: usize) -> BTreeSet<String> {
        classify_aggregation(scheme, d).unwrap()
    }

    fn label_set(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn classify_places_the_named_families() {
        // d = 3 keeps Shapley and Banzhaf distinct (they coincide at d ≤ 2).
        assert_eq!(
            labels_of(&AggregationScheme::Preset(PresetAggregation::Shapley), 3),
            label_set(&[
                "mc",
                "probabilistic",
                "cardinal-probabilistic",
                "random-order",
                "shapley"
            ])
        );
        assert_eq!(
            labels_of(&AggregationScheme::Preset(PresetAggregation::Banzhaf), 3),
            label_set(&["mc", "probabilistic", "cardinal-probabilistic", "banzhaf"])
        );
        assert_eq!(
            labels_of(&AggregationScheme::Preset(PresetAggregation::Pfi), 3),
            label_set(&["mc", "probabilistic", "cardinal-probabilistic"])
        );
        assert_eq!(
            labels_of(&AggregationScheme::Preset(PresetAggregation::Univariate), 3),
            label_set(&["mc", "probabilistic", "cardinal-probabilistic"])
        );
    }

    #[test]
    fn classify_checks_the_probability_normalization() {
        // Doubling a valid distribution keeps the derivative form but breaks
        // the normalization, so only the broadest label survives.
        let beta = (1..=2u32)
            .map(|i| ((1 << (i - 1), 0), 2.0))
            .collect::<BTreeMap<(u32, u32), f64>>();
        let scheme = AggregationScheme::DerivativeForm { order: 1, beta };
        assert_eq!(labels_of(&scheme, 2), label_set(&["mc"]));
    }

    #[test]
    fn classify_rejects_tables_without_the_alternating_sign_structure() {
        let alpha = BTreeMap::from([((1u32, 0u32), 2.0)]);
        let scheme = AggregationScheme::Explicit { order: 1, alpha };
        assert_eq!(labels_of(&scheme, 2), BTreeSet::new());
    }

    #[test]
    fn classify_recovers_weights_from_explicit_tables() {
        // The Shapley coefficients written out removal-set by removal-set.
        let d = 3;
        let preset = AggregationScheme::Preset(PresetAggregation::Shapley);
        let mut alpha = BTreeMap::new();
        for i in 1..=d {
            let s = c(&[i], d);
            for t in all_coalitions(d).unwrap() {
                let a = preset.alpha(&s, &t).unwrap();
                if a != 0.0 {
                    alpha.insert((s.bits(), t.bits()), a);
                }
            }
        }
        let scheme = AggregationScheme::Explicit { order: 1, alpha };
        assert_eq!(
            labels_of(&scheme, d),
            label_set(&[
                "mc",
                "probabilistic",
                "cardinal-probabilistic",
                "random-order",
                "shapley"
            ])
        );
    }

    #[test]
    fn classify_separates_order_weights_from_semivalues() {
        // A lopsided distribution over the two orderings of [2]: efficient
        // and probabilistic but not cardinal.
        let p = 0.3;
        let beta = BTreeMap::from([
            ((c(&[1], 2).bits(), 0u32), p),
            ((c(&[1], 2).bits(), c(&[2], 2).bits()), 1.0 - p),
            ((c(&[2], 2).bits(), 0u32), 1.0 - p),
            ((c(&[2], 2).bits(), c(&[1], 2).bits()), p),
        ]);
        let scheme = AggregationScheme::DerivativeForm { order: 1, beta };
        assert_eq!(
            labels_of(&scheme, 2),
            label_set(&["mc", "probabilistic", "random-order"])
        );

        // Breaking the ordering coupling loses efficiency too.
        let beta = BTreeMap::from([
            ((c(&[1], 2).bits(), 0u32), 0.3),
            ((c(&[1], 2).bits(), c(&[2], 2).bits()), 0.7),
            ((c(&[2], 2).bits(), 0u32), 0.5),
            ((c(&[2], 2).bits(), c(&[1], 2).bits()), 0.5),
        ]);
        let scheme = AggregationScheme::DerivativeForm { order: 1, beta };
        assert_eq!(labels_of(&scheme, 2), label_set(&["mc", "probabilistic"]));
    }

    #[test]
    fn classify_caps_interaction_schemes_at_the_broadest_label() {
        let scheme = AggregationScheme::Preset(PresetAggregation::Stii { k: 2 });
        assert_eq!(labels_of(&scheme, 3), label_set(&["mc"]));
    }
}
