//! Subset-lattice primitives: coalitions as bitmasks, subset enumeration,
//! permutations, antichain utilities.
//!
//! Players are 1-indexed (1..=d); player `i` occupies bit `i-1`. Dimension is
//! capped at 24 so every dense 2^d table stays desk-scale and exact.

use crate::{Error, Result};
use std::fmt;

/// Largest supported player count.
pub const MAX_PLAYERS: usize = 24;

pub(crate) fn check_d(d: usize) -> Result<()> {
    if d == 0 || d > MAX_PLAYERS {
        return Err(Error::PlayerCount(d));
    }
    Ok(())
}

/// A subset of the player set `[d]`, stored as a bitmask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coalition {
    bits: u32,
    d: u8,
}

impl Coalition {
    /// The empty coalition over `[d]`.
    pub fn empty(d: usize) -> Result<Self> {
        check_d(d)?;
        Ok(Coalition { bits: 0, d: d as u8 })
    }

    /// The grand coalition `[d]`.
    pub fn full(d: usize) -> Result<Self> {
        check_d(d)?;
        Ok(Coalition {
            bits: (1u32 << d) - 1,
            d: d as u8,
        })
    }

    /// Builds a coalition from a raw bitmask.
    pub fn from_bits(bits: u32, d: usize) -> Result<Self> {
        check_d(d)?;
        if bits >= (1u32 << d) {
            return Err(Error::Coalition(format!(
                "bitmask {bits:#b} has members above player {d}"
            )));
        }
        Ok(Coalition { bits, d: d as u8 })
    }

    /// Builds a coalition from 1-indexed player numbers.
    pub fn from_players<I: IntoIterator<Item = usize>>(players: I, d: usize) -> Result<Self> {
        check_d(d)?;
        let mut bits = 0u32;
        for i in players {
            if i == 0 || i > d {
                return Err(Error::Coalition(format!("player {i} outside 1..={d}")));
            }
            bits |= 1 << (i - 1);
        }
        Ok(Coalition { bits, d: d as u8 })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn d(&self) -> usize {
        self.d as usize
    }

    /// Number of members.
    pub fn size(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    pub fn is_full(&self) -> bool {
        self.bits == (1u32 << self.d) - 1
    }

    /// Membership of 1-indexed player `i`.
    pub fn contains(&self, i: usize) -> bool {
        i >= 1 && i <= self.d() && self.bits & (1 << (i - 1)) != 0
    }

    pub fn insert(&self, i: usize) -> Result<Self> {
        if i == 0 || i > self.d() {
            return Err(Error::Coalition(format!("player {i} outside 1..={}", self.d)));
        }
        Ok(Coalition {
            bits: self.bits | (1 << (i - 1)),
            d: self.d,
        })
    }

    pub fn remove(&self, i: usize) -> Result<Self> {
        if i == 0 || i > self.d() {
            return Err(Error::Coalition(format!("player {i} outside 1..={}", self.d)));
        }
        Ok(Coalition {
            bits: self.bits & !(1 << (i - 1)),
            d: self.d,
        })
    }

    fn check_same_d(&self, other: &Coalition) -> Result<()> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch(format!(
                "coalitions over [{}] and [{}]",
                self.d, other.d
            )));
        }
        Ok(())
    }

    pub fn union(&self, other: &Coalition) -> Result<Self> {
        self.check_same_d(other)?;
        Ok(Coalition {
            bits: self.bits | other.bits,
            d: self.d,
        })
    }

    pub fn intersection(&self, other: &Coalition) -> Result<Self> {
        self.check_same_d(other)?;
        Ok(Coalition {
            bits: self.bits & other.bits,
            d: self.d,
        })
    }

    /// Set difference `self \ other`.
    pub fn difference(&self, other: &Coalition) -> Result<Self> {
        self.check_same_d(other)?;
        Ok(Coalition {
            bits: self.bits & !other.bits,
            d: self.d,
        })
    }

    /// Complement within `[d]`.
    pub fn complement(&self) -> Self {
        Coalition {
            bits: !self.bits & ((1u32 << self.d) - 1),
            d: self.d,
        }
    }

    pub fn is_subset_of(&self, other: &Coalition) -> bool {
        self.d == other.d && self.bits & !other.bits == 0
    }

    pub fn is_disjoint_from(&self, other: &Coalition) -> bool {
        self.d == other.d && self.bits & other.bits == 0
    }

    /// Members in ascending order, 1-indexed.
    pub fn players(&self) -> impl Iterator<Item = usize> + '_ {
        let d = self.d();
        (1..=d).filter(move |i| self.contains(*i))
    }

    /// Text form: comma-joined ascending indices, the empty set as "".
    pub fn label(&self) -> String {
        self.players()
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Parses the text form produced by [`Coalition::label`].
    pub fn parse_label(s: &str, d: usize) -> Result<Self> {
        check_d(d)?;
        let s = s.trim();
        if s.is_empty() {
            return Coalition::empty(d);
        }
        let mut players = Vec::new();
        for part in s.split(',') {
            let i: usize = part.trim().parse().map_err(|_| {
                Error::Coalition(format!("bad player index {:?} in {s:?}", part.trim()))
            })?;
            players.push(i);
        }
        Coalition::from_players(players, d)
    }
}

impl fmt::Debug for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.label())
    }
}

impl fmt::Display for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Iterates all subsets of `c`, each exactly once, in increasing bitmask
/// value. This order is relied on for reproducible summation everywhere.
pub fn subsets_of(c: &Coalition) -> SubsetIter {
    SubsetIter {
        mask: c.bits,
        d: c.d,
        next: Some(0),
    }
}

pub struct SubsetIter {
    mask: u32,
    d: u8,
    next: Option<u32>,
}

impl Iterator for SubsetIter {
    type Item = Coalition;

    fn next(&mut self) -> Option<Coalition> {
        let cur = self.next?;
        // Steps through subsets of `mask` in increasing numeric order via
        // (cur - mask) & mask, borrowing through the cleared positions.
        self.next = if cur == self.mask {
            None
        } else {
            Some(cur.wrapping_sub(self.mask) & self.mask)
        };
        Some(Coalition { bits: cur, d: self.d })
    }
}

/// All coalitions over `[d]` in increasing bitmask order.
pub fn all_coalitions(d: usize) -> Result<impl Iterator<Item = Coalition>> {
    check_d(d)?;
    let d8 = d as u8;
    Ok((0u32..(1u32 << d)).map(move |bits| Coalition { bits, d: d8 }))
}

/// A permutation of `[d]`; `mapping[i-1]` is `π(i)`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Permutation {
    mapping: Vec<usize>,
}

impl Permutation {
    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        check_d(mapping.len())?;
        let d = mapping.len();
        let mut seen = vec![false; d];
        for &v in &mapping {
            if v == 0 || v > d || seen[v - 1] {
                return Err(Error::Permutation(format!(
                    "{mapping:?} is not a bijection on 1..={d}"
                )));
            }
            seen[v - 1] = true;
        }
        Ok(Permutation { mapping })
    }

    pub fn identity(d: usize) -> Result<Self> {
        check_d(d)?;
        Ok(Permutation {
            mapping: (1..=d).collect(),
        })
    }

    pub fn d(&self) -> usize {
        self.mapping.len()
    }

    /// `π(i)` for 1-indexed `i`.
    pub fn apply(&self, i: usize) -> usize {
        self.mapping[i - 1]
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.d()];
        for (i, &v) in self.mapping.iter().enumerate() {
            inv[v - 1] = i + 1;
        }
        Permutation { mapping: inv }
    }

    /// Composition `(self ∘ other)(i) = self(other(i))`.
    pub fn compose(&self, other: &Permutation) -> Result<Permutation> {
        if self.d() != other.d() {
            return Err(Error::DimensionMismatch(format!(
                "composing permutations of [{}] and [{}]",
                self.d(),
                other.d()
            )));
        }
        Ok(Permutation {
            mapping: (1..=self.d()).map(|i| self.apply(other.apply(i))).collect(),
        })
    }

    /// The permuted point `πx`, whose i-th coordinate is `x[π(i)]`.
    pub fn permute_point(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.d() {
            return Err(Error::DimensionMismatch(format!(
                "point of length {} under a permutation of [{}]",
                x.len(),
                self.d()
            )));
        }
        Ok((1..=self.d()).map(|i| x[self.apply(i) - 1]).collect())
    }

    /// Every permutation of `[d]` in lexicographic order. Exposed for the
    /// permutation-form values; capped at d ≤ 8 because of factorial growth.
    pub fn all(d: usize) -> Result<Vec<Permutation>> {
        check_d(d)?;
        if d > 8 {
            return Err(Error::Config(format!(
                "permutation enumeration capped at d <= 8, got {d}"
            )));
        }
        let mut out = Vec::new();
        let mut current: Vec<usize> = (1..=d).collect();
        loop {
            out.push(Permutation {
                mapping: current.clone(),
            });
            // next_permutation in lexicographic order
            let Some(i) = (0..d - 1).rev().find(|&i| current[i] < current[i + 1]) else {
                break;
            };
            let j = (i + 1..d).rev().find(|&j| current[j] > current[i]).unwrap();
            current.swap(i, j);
            current[i + 1..].reverse();
        }
        Ok(out)
    }
}

/// The permuted subset `πS = {π(i) : i ∈ S}`.
pub fn apply_permutation(pi: &Permutation, c: &Coalition) -> Result<Coalition> {
    if pi.d() != c.d() {
        return Err(Error::DimensionMismatch(format!(
            "permutation of [{}] applied to coalition over [{}]",
            pi.d(),
            c.d()
        )));
    }
    Coalition::from_players(c.players().map(|i| pi.apply(i)), c.d())
}

/// A duplicate-free collection of coalitions over a common `[d]`, kept sorted
/// by bitmask.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SetFamily {
    d: usize,
    members: Vec<Coalition>,
}

impl SetFamily {
    pub fn new<I: IntoIterator<Item = Coalition>>(d: usize, members: I) -> Result<Self> {
        check_d(d)?;
        let mut v: Vec<Coalition> = Vec::new();
        for m in members {
            if m.d() != d {
                return Err(Error::DimensionMismatch(format!(
                    "family over [{d}] given a member over [{}]",
                    m.d()
                )));
            }
            v.push(m);
        }
        v.sort_by_key(|c| c.bits());
        v.dedup();
        Ok(SetFamily { d, members: v })
    }

    pub fn empty(d: usize) -> Result<Self> {
        Self::new(d, [])
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn members(&self) -> &[Coalition] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, c: &Coalition) -> bool {
        self.members.binary_search_by_key(&c.bits(), |m| m.bits()).is_ok()
    }

    /// Maximal members with respect to inclusion; always an antichain.
    pub fn ceiling(&self) -> SetFamily {
        let members = self
            .members
            .iter()
            .filter(|c| {
                !self
                    .members
                    .iter()
                    .any(|other| *c != other && c.is_subset_of(other))
            })
            .copied()
            .collect();
        SetFamily {
            d: self.d,
            members,
        }
    }

    /// True iff no member strictly contains another.
    pub fn is_antichain(&self) -> bool {
        self.members.iter().all(|a| {
            self.members
                .iter()
                .all(|b| a == b || !a.is_subset_of(b))
        })
    }

    /// Text form: member labels in bitmask order, e.g. `{{1},{2,3}}`.
    pub fn label(&self) -> String {
        let inner = self
            .members
            .iter()
            .map(|c| format!("{{{}}}", c.label()))
            .collect::<Vec<_>>()
            .join(",");
        format!("{{{inner}}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(players: &[usize], d: usize) -> Coalition {
        Coalition::from_players(players.iter().copied(), d).unwrap()
    }

    #[test]
    fn subsets_of_empty_set() {
        let subs: Vec<_> = subsets_of(&Coalition::empty(3).unwrap()).collect();
        assert_eq!(subs, vec![Coalition::empty(3).unwrap()]);
    }

    #[test]
    fn subsets_of_two_element_set_in_increasing_bitmask_order() {
        let subs: Vec<_> = subsets_of(&c(&[1, 3], 3)).collect();
        assert_eq!(
            subs,
            vec![c(&[], 3), c(&[1], 3), c(&[3], 3), c(&[1, 3], 3)]
        );
        let bits: Vec<u32> = subs.iter().map(|s| s.bits()).collect();
        let mut sorted = bits.clone();
        sorted.sort();
        assert_eq!(bits, sorted);
    }

    #[test]
    fn subsets_of_three_element_set_has_eight_members() {
        assert_eq!(subsets_of(&c(&[1, 2, 3], 3)).count(), 8);
    }

    #[test]
    fn permutation_moves_singleton() {
        let pi = Permutation::new(vec![2, 3, 1]).unwrap();
        assert_eq!(apply_permutation(&pi, &c(&[1], 3)).unwrap(), c(&[2], 3));
    }

    #[test]
    fn identity_permutation_fixes_coalitions() {
        let pi = Permutation::identity(4).unwrap();
        for co in all_coalitions(4).unwrap() {
            assert_eq!(apply_permutation(&pi, &co).unwrap(), co);
        }
    }

    #[test]
    fn permutation_of_pair() {
        let pi = Permutation::new(vec![2, 1, 3]).unwrap();
        assert_eq!(
            apply_permutation(&pi, &c(&[1, 3], 3)).unwrap(),
            c(&[2, 3], 3)
        );
    }

    #[test]
    fn ceiling_drops_dominated_member() {
        let fam = SetFamily::new(3, [c(&[1], 3), c(&[2, 3], 3), c(&[2], 3)]).unwrap();
        let expect = SetFamily::new(3, [c(&[1], 3), c(&[2, 3], 3)]).unwrap();
        assert_eq!(fam.ceiling(), expect);
    }

    #[test]
    fn ceiling_of_singleton_family() {
        let fam = SetFamily::new(3, [c(&[1, 2, 3], 3)]).unwrap();
        assert_eq!(fam.ceiling(), fam);
    }

    /// Brute-force oracle: a member is maximal iff no other member strictly
    /// contains it.
    fn ceiling_oracle(fam: &SetFamily) -> Vec<Coalition> {
        fam.members()
            .iter()
            .filter(|a| {
                !fam.members()
                    .iter()
                    .any(|b| *a != b && a.is_subset_of(b) && a.size() < b.size())
            })
            .copied()
            .collect()
    }

    #[test]
    fn ceiling_collapses_chain_to_top() {
        let fam = SetFamily::new(3, [c(&[1], 3), c(&[1, 2], 3), c(&[1, 2, 3], 3)]).unwrap();
        let expect = SetFamily::new(3, [c(&[1, 2, 3], 3)]).unwrap();
        assert_eq!(ceiling_oracle(&fam), expect.members());
        assert_eq!(fam.ceiling(), expect);
    }

    #[test]
    fn antichain_examples() {
        assert!(SetFamily::new(3, [c(&[1], 3), c(&[2, 3], 3)])
            .unwrap()
            .is_antichain());
        assert!(!SetFamily::new(3, [c(&[1], 3), c(&[1, 2, 3], 3)])
            .unwrap()
            .is_antichain());
        assert!(SetFamily::empty(3).unwrap().is_antichain());
    }

    #[test]
    fn labels_round_trip() {
        for co in all_coalitions(5).unwrap() {
            let back = Coalition::parse_label(&co.label(), 5).unwrap();
            assert_eq!(back, co);
        }
        assert_eq!(c(&[], 3).label(), "");
        assert_eq!(c(&[2, 3], 3).label(), "2,3");
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(Coalition::empty(0).is_err());
        assert!(Coalition::empty(25).is_err());
        assert!(Coalition::from_players([4], 3).is_err());
        assert!(Coalition::from_bits(0b1000, 3).is_err());
        assert!(Permutation::new(vec![1, 1, 3]).is_err());
        assert!(Coalition::parse_label("2,x", 3).is_err());
    }

    #[test]
    fn complement_and_difference() {
        let s = c(&[1, 3], 3);
        assert_eq!(s.complement(), c(&[2], 3));
        assert_eq!(
            Coalition::full(3).unwrap().difference(&s).unwrap(),
            c(&[2], 3)
        );
    }

    #[test]
    fn permutation_enumeration_counts_and_order() {
        let all = Permutation::all(3).unwrap();
        assert_eq!(all.len(), 6);
        assert_eq!(all[0], Permutation::identity(3).unwrap());
        assert!(Permutation::all(9).is_err());
    }

    #[test]
    fn inverse_and_compose() {
        let pi = Permutation::new(vec![2, 3, 1]).unwrap();
        let id = pi.compose(&pi.inverse()).unwrap();
        assert_eq!(id, Permutation::identity(3).unwrap());
    }

    #[test]
    fn permute_point_places_pi_i_th_coordinate() {
        // (πx)_i = x_{π(i)}: π=(2,3,1) sends (10,20,30) to (20,30,10).
        let pi = Permutation::new(vec![2, 3, 1]).unwrap();
        assert_eq!(
            pi.permute_point(&[10.0, 20.0, 30.0]).unwrap(),
            vec![20.0, 30.0, 10.0]
        );
    }
}
