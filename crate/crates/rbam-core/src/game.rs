//! Cooperative games in characteristic form: discrete derivatives, the
//! Möbius/dividend transform, unanimity basis, permuted and reduced games,
//! and the classical player/coalition predicates.

use crate::coalition::{all_coalitions, apply_permutation, subsets_of, Coalition, Permutation};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Default absolute tolerance for the predicate checks.
pub const DEFAULT_EPS: f64 = 1e-9;

/// A transferable-utility game: a worth for every coalition over `[d]`,
/// stored densely and indexed by coalition bitmask, with `v(∅) = 0` exactly.
#[derive(Clone, PartialEq, Debug)]
pub struct CooperativeGame {
    d: usize,
    values: Vec<f64>,
}

impl CooperativeGame {
    pub fn new(d: usize, values: Vec<f64>) -> Result<Self> {
        let _ = Coalition::empty(d)?;
        if values.len() != 1 << d {
            return Err(Error::Game(format!(
                "expected {} values for d={d}, got {}",
                1 << d,
                values.len()
            )));
        }
        if values[0] != 0.0 {
            return Err(Error::Game(format!(
                "v(∅) must be exactly 0, got {}",
                values[0]
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Game(format!(
                "non-finite worth {} at bitmask {bad}",
                values[bad]
            )));
        }
        Ok(CooperativeGame { d, values })
    }

    /// Builds the table by evaluating `worth` on every coalition in
    /// increasing bitmask order; the worth of ∅ is forced to 0.
    pub fn from_fn<F: FnMut(&Coalition) -> f64>(d: usize, mut worth: F) -> Result<Self> {
        let mut values = Vec::with_capacity(1 << d);
        for c in all_coalitions(d)? {
            values.push(if c.is_empty() { 0.0 } else { worth(&c) });
        }
        CooperativeGame::new(d, values)
    }

    pub fn zero(d: usize) -> Result<Self> {
        CooperativeGame::new(d, vec![0.0; 1 << d])
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n_players(&self) -> usize {
        self.d
    }

    /// Worth of a coalition.
    pub fn value(&self, s: &Coalition) -> f64 {
        debug_assert_eq!(s.d(), self.d);
        self.values[s.bits() as usize]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grand_value(&self) -> f64 {
        self.values[(1usize << self.d) - 1]
    }

    /// Pointwise linear combination of games over the same player set,
    /// summed in argument order.
    pub fn linear_combination(parts: &[(f64, &CooperativeGame)]) -> Result<Self> {
        let d = parts
            .first()
            .ok_or_else(|| Error::Game("empty linear combination".into()))?
            .1
            .d;
        let mut values = vec![0.0; 1 << d];
        for (coef, g) in parts {
            if g.d != d {
                return Err(Error::DimensionMismatch(format!(
                    "combining games over [{d}] and [{}]",
                    g.d
                )));
            }
            for (acc, v) in values.iter_mut().zip(&g.values) {
                *acc += coef * v;
            }
        }
        CooperativeGame::new(d, values)
    }

    /// The discrete derivative Δ_S v(T), via the closed form
    /// Σ_{L⊆S} (−1)^{|S|−|L|} v((T∖S) ∪ L), summed in increasing bitmask
    /// order of L.
    pub fn discrete_derivative(&self, s: &Coalition, t: &Coalition) -> Result<f64> {
        if s.d() != self.d || t.d() != self.d {
            return Err(Error::DimensionMismatch(format!(
                "derivative over [{}]/[{}] on a game over [{}]",
                s.d(),
                t.d(),
                self.d
            )));
        }
        let base = t.difference(s)?;
        let mut acc = 0.0;
        for l in subsets_of(s) {
            let sign = if (s.size() - l.size()) % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * self.value(&base.union(&l)?);
        }
        Ok(acc)
    }

    /// Harsanyi dividends d(v,S) = Δ_S v(∅) for every coalition, indexed by
    /// bitmask. Computed with the in-place subset Möbius transform.
    pub fn moebius_transform(&self) -> Vec<f64> {
        let mut m = self.values.clone();
        moebius_in_place(&mut m, self.d);
        m
    }

    /// Reconstructs the game from dividends (the inverse Möbius / zeta
    /// transform): v(S) = Σ_{T⊆S} d(v,T).
    pub fn inverse_moebius(d: usize, dividends: &[f64]) -> Result<Self> {
        let _ = Coalition::empty(d)?;
        if dividends.len() != 1 << d {
            return Err(Error::Game(format!(
                "expected {} dividends for d={d}, got {}",
                1 << d,
                dividends.len()
            )));
        }
        if dividends[0] != 0.0 {
            return Err(Error::Game(format!(
                "dividend of ∅ must be 0, got {}",
                dividends[0]
            )));
        }
        let mut v = dividends.to_vec();
        for b in 0..d {
            let bit = 1usize << b;
            for mask in 0..v.len() {
                if mask & bit != 0 {
                    v[mask] += v[mask ^ bit];
                }
            }
        }
        CooperativeGame::new(d, v)
    }

    /// JSON form `{"d": .., "values": {"1": .., "2,3": ..}}` with every
    /// nonempty coalition listed; ∅ is implicit.
    pub fn to_json(&self) -> Result<String> {
        let mut values = BTreeMap::new();
        for c in all_coalitions(self.d)? {
            if !c.is_empty() {
                values.insert(c.label(), self.value(&c));
            }
        }
        Ok(serde_json::to_string_pretty(&GameJson { d: self.d, values })?)
    }

    /// Parses the JSON form; absent coalitions default to worth 0, and an
    /// explicit nonzero worth for ∅ is rejected.
    pub fn from_json(text: &str) -> Result<Self> {
        let parsed: GameJson = serde_json::from_str(text)?;
        let _ = Coalition::empty(parsed.d)?;
        let mut values = vec![0.0; 1 << parsed.d];
        for (label, worth) in &parsed.values {
            let c = Coalition::parse_label(label, parsed.d)?;
            if c.is_empty() && *worth != 0.0 {
                return Err(Error::Game(format!(
                    "the empty coalition must have worth 0, got {worth}"
                )));
            }
            values[c.bits() as usize] = *worth;
        }
        CooperativeGame::new(parsed.d, values)
    }
}

#[derive(Serialize, Deserialize)]
struct GameJson {
    d: usize,
    values: BTreeMap<String, f64>,
}

/// In-place subset Möbius transform over a 2^d-length table indexed by
/// coalition bits: values[S] ← Σ_{T⊆S} (−1)^{|S|−|T|} values[T].
pub(crate) fn moebius_in_place(values: &mut [f64], d: usize) {
    debug_assert_eq!(values.len(), 1 << d);
    for b in 0..d {
        let bit = 1usize << b;
        for mask in 0..values.len() {
            if mask & bit != 0 {
                values[mask] -= values[mask ^ bit];
            }
        }
    }
}

/// The unanimity game v_R: worth 1 for coalitions containing R, else 0.
pub fn unanimity_game(r: &Coalition, d: usize) -> Result<CooperativeGame> {
    if r.d() != d {
        return Err(Error::DimensionMismatch(format!(
            "unanimity base over [{}] for a game over [{d}]",
            r.d()
        )));
    }
    if r.is_empty() {
        return Err(Error::Game("unanimity game requires a nonempty base".into()));
    }
    CooperativeGame::from_fn(d, |t| if r.is_subset_of(t) { 1.0 } else { 0.0 })
}

/// The permuted game (πv)(S) = v(π⁻¹S), i.e. (πv)(πS) = v(S).
pub fn permuted_game(pi: &Permutation, v: &CooperativeGame) -> Result<CooperativeGame> {
    if pi.d() != v.d() {
        return Err(Error::DimensionMismatch(format!(
            "permutation of [{}] on a game over [{}]",
            pi.d(),
            v.d()
        )));
    }
    let inv = pi.inverse();
    CooperativeGame::from_fn(v.d(), |s| {
        v.value(&apply_permutation(&inv, s).expect("same d"))
    })
}

/// The reduced game with respect to a nonempty T: players are (N∖T) ∪ {[T]},
/// relabeled so the survivors keep their relative order and the merged
/// player [T] comes last.
pub fn reduced_game(v: &CooperativeGame, t: &Coalition) -> Result<CooperativeGame> {
    if t.d() != v.d() {
        return Err(Error::DimensionMismatch(format!(
            "reducing a game over [{}] by a coalition over [{}]",
            v.d(),
            t.d()
        )));
    }
    if t.is_empty() {
        return Err(Error::Game("reduced game requires a nonempty coalition".into()));
    }
    let survivors: Vec<usize> = t.complement().players().collect();
    let d_new = survivors.len() + 1;
    let merged = d_new;
    CooperativeGame::from_fn(d_new, |s| {
        let mut back: Vec<usize> = s
            .players()
            .filter(|&p| p != merged)
            .map(|p| survivors[p - 1])
            .collect();
        if s.contains(merged) {
            back.extend(t.players());
        }
        v.value(&Coalition::from_players(back, v.d()).expect("players in range"))
    })
}

/// Report label for the merged player of `reduced_game`, e.g. `[2,3]`.
pub fn reduced_player_label(t: &Coalition) -> String {
    format!("[{}]", t.label())
}

impl CooperativeGame {
    /// Null player: v(S∪i) = v(S) for all S ⊆ N∖i, within eps.
    pub fn is_null_player(&self, i: usize, eps: f64) -> Result<bool> {
        let s = Coalition::from_players([i], self.d)?;
        self.is_null_coalition(&s, eps)
    }

    /// Dummy player: v(S∪i) = v(S) + v({i}) for all S ⊆ N∖i, within eps.
    pub fn is_dummy_player(&self, i: usize, eps: f64) -> Result<bool> {
        let s = Coalition::from_players([i], self.d)?;
        self.is_dummy_coalition(&s, eps)
    }

    /// Dummy coalition: v(T∪S) = v(T) + v(S) for all T ⊆ N∖S, within eps.
    pub fn is_dummy_coalition(&self, s: &Coalition, eps: f64) -> Result<bool> {
        if s.d() != self.d {
            return Err(Error::DimensionMismatch("dummy check".into()));
        }
        let vs = self.value(s);
        for t in subsets_of(&s.complement()) {
            if (self.value(&t.union(s)?) - self.value(&t) - vs).abs() > eps {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Null coalition: a dummy coalition with v(S) = 0.
    pub fn is_null_coalition(&self, s: &Coalition, eps: f64) -> Result<bool> {
        Ok(self.value(s).abs() <= eps && self.is_dummy_coalition(s, eps)?)
    }

    /// Symmetric pair: v(S∪i) = v(S∪j) for all S ⊆ N∖{i,j}, within eps.
    pub fn is_symmetric_pair(&self, i: usize, j: usize, eps: f64) -> Result<bool> {
        let pair = Coalition::from_players([i, j], self.d)?;
        if i == j {
            return Ok(true);
        }
        for s in subsets_of(&pair.complement()) {
            let si = self.value(&s.insert(i)?);
            let sj = self.value(&s.insert(j)?);
            if (si - sj).abs() > eps {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Partnership: v(T∪S) = v(T) for all T ⊆ N∖P and every strict subset
    /// S ⊂ P, within eps.
    pub fn is_partnership(&self, p: &Coalition, eps: f64) -> Result<bool> {
        if p.d() != self.d {
            return Err(Error::DimensionMismatch("partnership check".into()));
        }
        if p.is_empty() {
            return Err(Error::Game("partnership must be nonempty".into()));
        }
        for t in subsets_of(&p.complement()) {
            let vt = self.value(&t);
            for s in subsets_of(p) {
                if s == *p {
                    continue;
                }
                if (self.value(&t.union(&s)?) - vt).abs() > eps {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Monotonic: every single-player marginal contribution is ≥ −eps.
    pub fn is_monotonic(&self, eps: f64) -> Result<bool> {
        self.is_k_monotonic(1, eps)
    }

    /// k-monotonic: Δ_S v(T) ≥ −eps for all |S| ≤ k and T ⊆ N∖S.
    pub fn is_k_monotonic(&self, k: usize, eps: f64) -> Result<bool> {
        let full = Coalition::full(self.d)?;
        for s in subsets_of(&full) {
            if s.size() > k {
                continue;
            }
            for t in subsets_of(&s.complement()) {
                if self.discrete_derivative(&s, &t)? < -eps {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// d=3 game with worths (∅,1,2,12,3,13,23,123) = (0,3,4,7,0,3,24,27) in
    /// bitmask order; reappears as the anchored pointwise game of
    /// x1+x2+x2*x3 at (3,4,5).
    pub fn game_a() -> CooperativeGame {
        CooperativeGame::new(3, vec![0.0, 3.0, 4.0, 7.0, 0.0, 3.0, 24.0, 27.0]).unwrap()
    }

    /// d=3 example game with worths (0,1,2,3,4,5,7,8) in bitmask order;
    /// player 1 is dummy but not null.
    pub fn game_ex() -> CooperativeGame {
        CooperativeGame::new(3, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 7.0, 8.0]).unwrap()
    }
}
