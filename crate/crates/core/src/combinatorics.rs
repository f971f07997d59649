//! Subsets of `{1, …, n}` and the order, weight and partition data attached
//! to them. Everything here is exact integer arithmetic on bitmasks.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

/// Largest ambient size accepted by arithmetic-only operations.
pub const MAX_N: usize = 64;
/// Largest ambient size accepted by routines that enumerate all `2^n` subsets.
pub const MAX_POSET_N: usize = 16;
/// Largest ambient size accepted by [`mobius_table`].
pub const MAX_MOBIUS_N: usize = 12;

/// A subset `I ⊆ {1, …, n}` stored as a bitmask: bit `i - 1` is set iff `i ∈ I`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "SubsetRepr", into = "SubsetRepr")]
pub struct SubsetIndex {
    n: u8,
    bits: u64,
}

#[derive(Serialize, Deserialize)]
struct SubsetRepr {
    n: usize,
    members: Vec<usize>,
}

impl TryFrom<SubsetRepr> for SubsetIndex {
    type Error = Error;

    fn try_from(r: SubsetRepr) -> Result<Self> {
        SubsetIndex::new(r.n, &r.members)
    }
}

impl From<SubsetIndex> for SubsetRepr {
    fn from(s: SubsetIndex) -> Self {
        SubsetRepr {
            n: s.n(),
            members: s.members(),
        }
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 || n > MAX_N {
        return Err(Error::OutOfRange {
            what: "n",
            value: n,
            min: 1,
            max: MAX_N,
        });
    }
    Ok(())
}

fn full_mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

impl SubsetIndex {
    /// Builds a subset from its members. Duplicates are rejected.
    pub fn new(n: usize, members: &[usize]) -> Result<Self> {
        check_n(n)?;
        let mut bits = 0u64;
        for &i in members {
            if i == 0 || i > n {
                return Err(Error::InvalidSubset(format!("element {i} not in 1..={n}")));
            }
            let b = 1u64 << (i - 1);
            if bits & b != 0 {
                return Err(Error::InvalidSubset(format!("duplicate element {i}")));
            }
            bits |= b;
        }
        Ok(SubsetIndex { n: n as u8, bits })
    }

    pub fn from_bits(n: usize, bits: u64) -> Result<Self> {
        check_n(n)?;
        if bits & !full_mask(n) != 0 {
            return Err(Error::InvalidSubset(format!(
                "bits {bits:#x} exceed n = {n}"
            )));
        }
        Ok(SubsetIndex { n: n as u8, bits })
    }

    pub(crate) fn from_bits_unchecked(n: usize, bits: u64) -> Self {
        debug_assert!((1..=MAX_N).contains(&n) && bits & !full_mask(n) == 0);
        SubsetIndex { n: n as u8, bits }
    }

    pub fn empty(n: usize) -> Result<Self> {
        Self::from_bits(n, 0)
    }

    pub fn full(n: usize) -> Result<Self> {
        check_n(n)?;
        Ok(SubsetIndex {
            n: n as u8,
            bits: full_mask(n),
        })
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    pub fn contains(&self, i: usize) -> bool {
        i >= 1 && i <= self.n() && self.bits & (1u64 << (i - 1)) != 0
    }

    /// Members in ascending order.
    pub fn members(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        let bits = self.bits;
        (1..=self.n()).filter(move |i| bits & (1u64 << (i - 1)) != 0)
    }

    /// `Σ_{i∈I} (2i − 1)`; zero for the empty set.
    pub fn weight(&self) -> u64 {
        self.iter().map(|i| 2 * i as u64 - 1).sum()
    }

    /// The members listed in strictly decreasing order, `[ν(1), …, ν(k)]`.
    pub fn nu_sequence(&self) -> Result<Vec<usize>> {
        if self.is_empty() {
            return Err(Error::NuUndefinedForEmpty);
        }
        let mut v = self.members();
        v.reverse();
        Ok(v)
    }

    /// `#(I ∩ [ℓ, n])`.
    pub fn tail_count(&self, l: usize) -> usize {
        if l == 0 || l > self.n() {
            return if l == 0 { self.len() } else { 0 };
        }
        (self.bits >> (l - 1)).count_ones() as usize
    }

    /// Complement `I^c` in `{1, …, n}`.
    pub fn complement(&self) -> Self {
        SubsetIndex {
            n: self.n,
            bits: !self.bits & full_mask(self.n()),
        }
    }

    pub fn with(&self, i: usize) -> Result<Self> {
        if i == 0 || i > self.n() {
            return Err(Error::InvalidSubset(format!(
                "element {i} not in 1..={}",
                self.n
            )));
        }
        Ok(SubsetIndex {
            n: self.n,
            bits: self.bits | (1u64 << (i - 1)),
        })
    }

    pub fn without(&self, i: usize) -> Self {
        if i == 0 || i > self.n() {
            return *self;
        }
        SubsetIndex {
            n: self.n,
            bits: self.bits & !(1u64 << (i - 1)),
        }
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        same_n(self, other)?;
        Ok(SubsetIndex {
            n: self.n,
            bits: self.bits | other.bits,
        })
    }

    pub fn intersection(&self, other: &Self) -> Result<Self> {
        same_n(self, other)?;
        Ok(SubsetIndex {
            n: self.n,
            bits: self.bits & other.bits,
        })
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.bits & other.bits == 0
    }
}

impl fmt::Display for SubsetIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Debug for SubsetIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}/{}", self.n)
    }
}

fn same_n(a: &SubsetIndex, b: &SubsetIndex) -> Result<()> {
    if a.n != b.n {
        return Err(Error::AmbientMismatch {
            left: a.n(),
            right: b.n(),
        });
    }
    Ok(())
}

/// All `2^n` subsets in increasing bitmask order.
pub fn all_subsets(n: usize) -> Result<impl Iterator<Item = SubsetIndex>> {
    check_poset_n(n, MAX_POSET_N)?;
    Ok((0u64..(1u64 << n)).map(move |b| SubsetIndex::from_bits_unchecked(n, b)))
}

fn check_poset_n(n: usize, max: usize) -> Result<()> {
    if n == 0 || n > max {
        return Err(Error::OutOfRange {
            what: "n",
            value: n,
            min: 1,
            max,
        });
    }
    Ok(())
}

pub fn weight(i: &SubsetIndex) -> u64 {
    i.weight()
}

pub fn nu_sequence(i: &SubsetIndex) -> Result<Vec<usize>> {
    i.nu_sequence()
}

pub fn dual_subset(i: &SubsetIndex) -> SubsetIndex {
    i.complement()
}

// ---------------------------------------------------------------------------
// The order J ⊴ K

/// Evaluation strategy for [`order_leq_with`]. All three are equivalent.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrderStrategy {
    /// `K = ∅`, or `#J ≥ #K` and `ν_K(ℓ) ≤ ν_J(ℓ)` for `ℓ ≤ #K`.
    Nu,
    /// `#(J ∩ [ℓ,n]) ≥ #(K ∩ [ℓ,n])` for every `ℓ`.
    TailCount,
    /// `K^c ⊴ J^c` evaluated with [`OrderStrategy::Nu`].
    Complement,
}

fn nu_leq(j: &SubsetIndex, k: &SubsetIndex) -> bool {
    if k.is_empty() {
        return true;
    }
    if j.len() < k.len() {
        return false;
    }
    // Walk both sets from the top; the ℓ-th largest of K must not exceed the
    // ℓ-th largest of J.
    let mut jv = j.members();
    let mut kv = k.members();
    jv.reverse();
    kv.reverse();
    kv.iter().zip(jv.iter()).all(|(a, b)| a <= b)
}

#[inline]
pub(crate) fn tail_dominates(j_bits: u64, k_bits: u64, n: usize) -> bool {
    (0..n).all(|s| (j_bits >> s).count_ones() >= (k_bits >> s).count_ones())
}

/// `J ⊴ K` using the chosen strategy.
pub fn order_leq_with(j: &SubsetIndex, k: &SubsetIndex, strategy: OrderStrategy) -> Result<bool> {
    same_n(j, k)?;
    Ok(match strategy {
        OrderStrategy::Nu => nu_leq(j, k),
        OrderStrategy::TailCount => tail_dominates(j.bits, k.bits, j.n()),
        OrderStrategy::Complement => nu_leq(&k.complement(), &j.complement()),
    })
}

/// `J ⊴ K`. Reflexive; `J ⊴ ∅` for every `J`.
pub fn order_leq(j: &SubsetIndex, k: &SubsetIndex) -> Result<bool> {
    order_leq_with(j, k, OrderStrategy::TailCount)
}

/// `true` iff `1 ∈ K` and `M = K ∖ {1}`.
pub fn codim1_related(k: &SubsetIndex, m: &SubsetIndex) -> Result<bool> {
    same_n(k, m)?;
    Ok(k.contains(1) && *m == k.without(1))
}

/// `true` iff `K = C ∪ {i+1}` and `M = C ∪ {i}` for `C = K ∩ M` and some `i`.
pub fn codim2_related(k: &SubsetIndex, m: &SubsetIndex) -> Result<bool> {
    same_n(k, m)?;
    if k.len() != m.len() {
        return Ok(false);
    }
    let common = k.bits & m.bits;
    if common.count_ones() as usize + 1 != k.len() {
        return Ok(false);
    }
    let k_extra = k.bits & !common;
    let m_extra = m.bits & !common;
    Ok(k_extra == m_extra << 1)
}

/// Covering pairs `(K, M)` of `⊴`: `K ⊴ M`, `K ≠ M`, nothing strictly between.
///
/// In tail-count coordinates the order is the pointwise order on the
/// sequences `ℓ ↦ #(I ∩ [ℓ,n])`, whose covers are unit increments of one
/// coordinate. Concretely `K = M ∪ {1}` when `1 ∉ M`, or
/// `K = M ∖ {i} ∪ {i+1}` when `i ∈ M` and `i+1 ∉ M`. The test suite checks
/// this against brute-force enumeration.
pub fn hasse_covers(n: usize) -> Result<Vec<(SubsetIndex, SubsetIndex)>> {
    check_poset_n(n, MAX_POSET_N)?;
    let mut out = Vec::new();
    for mb in 0u64..(1u64 << n) {
        let m = SubsetIndex::from_bits_unchecked(n, mb);
        if mb & 1 == 0 {
            out.push((SubsetIndex::from_bits_unchecked(n, mb | 1), m));
        }
        for i in 1..n {
            let bi = 1u64 << (i - 1);
            let bnext = 1u64 << i;
            if mb & bi != 0 && mb & bnext == 0 {
                out.push((SubsetIndex::from_bits_unchecked(n, (mb & !bi) | bnext), m));
            }
        }
    }
    out.sort_by_key(|(k, m)| (m.bits, k.bits));
    Ok(out)
}

/// Graphviz rendering of the Hasse diagram, nodes grouped by weight.
pub fn hasse_dot(n: usize) -> Result<String> {
    use std::fmt::Write;
    let covers = hasse_covers(n)?;
    let mut by_weight: BTreeMap<u64, Vec<SubsetIndex>> = BTreeMap::new();
    for s in all_subsets(n)? {
        by_weight.entry(s.weight()).or_default().push(s);
    }
    let mut s = String::new();
    let _ = writeln!(s, "digraph hasse_n{n} {{");
    let _ = writeln!(s, "  rankdir=BT;");
    let _ = writeln!(s, "  node [shape=box, fontname=\"monospace\"];");
    for (w, nodes) in &by_weight {
        let _ = write!(s, "  {{ rank=same;");
        for v in nodes {
            let _ = write!(s, " s{};", v.bits);
        }
        let _ = writeln!(s, " }}  // weight {w}");
        for v in nodes {
            let _ = writeln!(s, "  s{} [label=\"{}\", weight={}];", v.bits, v, w);
        }
    }
    for (k, m) in &covers {
        let _ = writeln!(s, "  s{} -> s{};", k.bits, m.bits);
    }
    let _ = writeln!(s, "}}");
    Ok(s)
}

/// CSV of every subset with its weight, depth and partition.
pub fn weight_table_csv(n: usize) -> Result<String> {
    use std::fmt::Write;
    let mut s = String::from("subset,weight,depth,partition\n");
    let mut subsets: Vec<_> = all_subsets(n)?.collect();
    subsets.sort_by_key(|x| (x.weight(), x.bits));
    for x in subsets {
        let p = partition_of(&x);
        let parts: Vec<String> = p.mu().iter().map(|v| v.to_string()).collect();
        let _ = writeln!(
            s,
            "\"{}\",{},{},\"({})\"",
            x,
            x.weight(),
            p.depth(),
            parts.join(",")
        );
    }
    Ok(s)
}

// ---------------------------------------------------------------------------
// Depth / partition correspondence

/// A depth `m` together with a partition whose Ferrers diagram fits the
/// `m × (n − m)` box. Trailing zero parts are dropped.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DepthPartition {
    n: usize,
    m: usize,
    mu: Vec<usize>,
}

impl DepthPartition {
    pub fn new(n: usize, m: usize, mut mu: Vec<usize>) -> Result<Self> {
        check_n(n)?;
        if m > n {
            return Err(Error::OutOfRange {
                what: "depth",
                value: m,
                min: 0,
                max: n,
            });
        }
        while mu.last() == Some(&0) {
            mu.pop();
        }
        let fits =
            mu.len() <= m && mu.iter().all(|&p| p <= n - m) && mu.windows(2).all(|w| w[0] >= w[1]);
        if !fits {
            return Err(Error::BoxViolation {
                rows: m,
                cols: n - m,
            });
        }
        Ok(DepthPartition { n, m, mu })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn depth(&self) -> usize {
        self.m
    }

    pub fn mu(&self) -> &[usize] {
        &self.mu
    }

    /// `|μ|`.
    pub fn size(&self) -> usize {
        self.mu.iter().sum()
    }

    /// Complement in the `m × (n−m)` box, transposed into the `(n−m) × m` box.
    pub fn dual(&self) -> DepthPartition {
        let (m, c) = (self.m, self.n - self.m);
        let part = |i: usize| self.mu.get(i).copied().unwrap_or(0);
        // complement rows, read bottom-up so the result is weakly decreasing
        let comp: Vec<usize> = (0..m).map(|i| c - part(m - 1 - i)).collect();
        let transposed: Vec<usize> = (1..=c)
            .map(|j| comp.iter().filter(|&&r| r >= j).count())
            .collect();
        DepthPartition::new(self.n, c, transposed)
            .expect("dual of a boxed partition fits the dual box")
    }
}

/// `(#I, μ)` with `μ_i = ν_I(i) − (k + 1 − i)`.
pub fn partition_of(i: &SubsetIndex) -> DepthPartition {
    let k = i.len();
    let mu: Vec<usize> = i
        .iter()
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .enumerate()
        .map(|(idx, nu)| nu - (k - idx))
        .collect();
    DepthPartition::new(i.n(), k, mu).expect("subset partitions fit their box")
}

/// Inverse of [`partition_of`]: `I = {μ_i + k + 1 − i}`.
pub fn subset_of_partition(p: &DepthPartition) -> Result<SubsetIndex> {
    let p = DepthPartition::new(p.n, p.m, p.mu.clone())?;
    let k = p.m;
    let members: Vec<usize> = (0..k)
        .map(|idx| p.mu.get(idx).copied().unwrap_or(0) + (k - idx))
        .collect();
    SubsetIndex::new(p.n, &members)
}

// ---------------------------------------------------------------------------
// Shuffle signs

/// Signature of the permutation listing `I` ascending then `J` ascending.
pub fn epsilon_sign(i: &SubsetIndex, j: &SubsetIndex) -> Result<i8> {
    same_n(i, j)?;
    if !i.is_disjoint(j) {
        return Err(Error::EpsilonOverlap);
    }
    Ok(shuffle_sign(i.bits, j.bits))
}

#[inline]
pub(crate) fn shuffle_sign(i_bits: u64, j_bits: u64) -> i8 {
    // inversions: pairs (a ∈ I, b ∈ J) with a > b
    let mut inv = 0u32;
    let mut rest = i_bits;
    while rest != 0 {
        let a = rest.trailing_zeros();
        rest &= rest - 1;
        let below = if a == 0 {
            0
        } else {
            j_bits & ((1u64 << a) - 1)
        };
        inv += below.count_ones();
    }
    if inv.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

// ---------------------------------------------------------------------------
// Möbius function

/// Möbius function of `({subsets}, ⊴)`, one entry per comparable pair.
#[derive(Clone, Debug)]
pub struct MobiusTable {
    n: usize,
    /// `(J, K, μ(J, K))` sorted by `(J, K)` bitmasks.
    entries: Vec<(SubsetIndex, SubsetIndex, i64)>,
}

impl MobiusTable {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[(SubsetIndex, SubsetIndex, i64)] {
        &self.entries
    }

    /// `μ(J, K)` if `J ⊴ K`, else `None`.
    pub fn get(&self, j: &SubsetIndex, k: &SubsetIndex) -> Option<i64> {
        self.entries
            .binary_search_by_key(&(j.bits, k.bits), |(a, b, _)| (a.bits, b.bits))
            .ok()
            .map(|idx| self.entries[idx].2)
    }

    pub fn to_csv(&self) -> String {
        use std::fmt::Write;
        let mut s = String::from("J,K,mu\n");
        for (j, k, mu) in &self.entries {
            let _ = writeln!(s, "\"{j}\",\"{k}\",{mu}");
        }
        s
    }
}

/// Möbius function by the defining recursion
/// `μ(J,J) = 1`, `μ(J,K) = −Σ_{J ⊴ L ⊲ K} μ(J,L)`, memoized per lower endpoint.
///
/// Within a row the upper endpoints are visited by decreasing weight, which
/// is a linear extension since `J ⊲ K` forces `w(J) > w(K)`. Terms with
/// `μ(J, L) = 0` are skipped.
pub fn mobius_table(n: usize) -> Result<MobiusTable> {
    check_poset_n(n, MAX_MOBIUS_N)?;
    let size = 1usize << n;
    let weights: Vec<u64> = (0..size as u64)
        .map(|b| SubsetIndex::from_bits_unchecked(n, b).weight())
        .collect();
    let rows = par::map_indexed(size, |jb| {
        let jb = jb as u64;
        let mut up: Vec<u64> = (0..size as u64)
            .filter(|&kb| tail_dominates(jb, kb, n))
            .collect();
        up.sort_by_key(|&kb| (std::cmp::Reverse(weights[kb as usize]), kb));
        let mut nonzero: Vec<(u64, i64)> = Vec::new();
        let mut row: Vec<(u64, i64)> = Vec::with_capacity(up.len());
        for kb in up {
            let mu = if kb == jb {
                1
            } else {
                -nonzero
                    .iter()
                    .filter(|(lb, _)| tail_dominates(*lb, kb, n))
                    .map(|(_, v)| *v)
                    .sum::<i64>()
            };
            if mu != 0 {
                nonzero.push((kb, mu));
            }
            row.push((kb, mu));
        }
        row.sort_by_key(|(kb, _)| *kb);
        (jb, row)
    });
    let entries = rows
        .into_iter()
        .flat_map(|(jb, row)| {
            row.into_iter().map(move |(kb, mu)| {
                (
                    SubsetIndex::from_bits_unchecked(n, jb),
                    SubsetIndex::from_bits_unchecked(n, kb),
                    mu,
                )
            })
        })
        .collect();
    Ok(MobiusTable { n, entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(n: usize, m: &[usize]) -> SubsetIndex {
        SubsetIndex::new(n, m).unwrap()
    }

    #[test]
    fn weight_examples() {
        assert_eq!(s(3, &[]).weight(), 0);
        assert_eq!(s(4, &[1, 3]).weight(), 6);
        for n in 1..=10 {
            assert_eq!(SubsetIndex::full(n).unwrap().weight(), (n * n) as u64);
        }
    }

    #[test]
    fn nu_examples() {
        assert_eq!(s(7, &[2, 5, 7]).nu_sequence().unwrap(), vec![7, 5, 2]);
        assert_eq!(s(3, &[3]).nu_sequence().unwrap(), vec![3]);
        assert_eq!(s(3, &[1, 2, 3]).nu_sequence().unwrap(), vec![3, 2, 1]);
        let err = s(3, &[]).nu_sequence().unwrap_err();
        assert_eq!(err.to_string(), "nu undefined for empty set");
    }

    #[test]
    fn invalid_subsets_rejected() {
        assert!(SubsetIndex::new(3, &[4]).is_err());
        assert!(SubsetIndex::new(3, &[0]).is_err());
        assert!(SubsetIndex::new(3, &[1, 1]).is_err());
        assert!(SubsetIndex::new(0, &[]).is_err());
        assert!(SubsetIndex::from_bits(2, 0b100).is_err());
    }

    #[test]
    fn order_examples() {
        for b in 0..8 {
            let j = SubsetIndex::from_bits(3, b).unwrap();
            assert!(order_leq(&j, &s(3, &[])).unwrap());
        }
        assert!(order_leq(&s(2, &[2]), &s(2, &[1])).unwrap());
        assert!(!order_leq(&s(2, &[1]), &s(2, &[2])).unwrap());
        assert!(order_leq(&s(2, &[1]), &s(3, &[1])).is_err());
    }

    #[test]
    fn codim_examples() {
        assert!(codim1_related(&s(3, &[1, 3]), &s(3, &[3])).unwrap());
        assert!(!codim1_related(&s(2, &[2]), &s(2, &[1])).unwrap());
        assert!(codim1_related(&s(1, &[1]), &s(1, &[])).unwrap());
        assert!(codim2_related(&s(2, &[2]), &s(2, &[1])).unwrap());
        assert!(codim2_related(&s(3, &[1, 3]), &s(3, &[1, 2])).unwrap());
        assert!(!codim2_related(&s(1, &[1]), &s(1, &[])).unwrap());
    }

    #[test]
    fn partition_examples() {
        for n in 1..=8 {
            for k in 1..=n {
                let p = partition_of(&s(n, &[k]));
                assert_eq!(
                    (p.depth(), p.mu().to_vec()),
                    (1, if k > 1 { vec![k - 1] } else { vec![] })
                );
                assert_eq!(subset_of_partition(&p).unwrap(), s(n, &[k]));
                let missing = s(n, &[k]).complement();
                let q = partition_of(&missing);
                assert_eq!(q.depth(), n - 1);
                assert_eq!(q.mu().to_vec(), vec![1; n - k]);
            }
            let e = partition_of(&s(n, &[]));
            assert_eq!((e.depth(), e.mu().len()), (0, 0));
        }
        let p = DepthPartition::new(3, 2, vec![1, 1]).unwrap();
        assert_eq!(subset_of_partition(&p).unwrap(), s(3, &[2, 3]));
    }

    #[test]
    fn box_violations() {
        assert!(DepthPartition::new(3, 1, vec![3]).is_err());
        assert!(DepthPartition::new(3, 1, vec![1, 1]).is_err());
        assert!(DepthPartition::new(4, 2, vec![1, 2]).is_err());
        assert!(DepthPartition::new(3, 4, vec![]).is_err());
    }

    #[test]
    fn dual_examples() {
        assert_eq!(dual_subset(&s(3, &[])), s(3, &[1, 2, 3]));
        assert_eq!(dual_subset(&s(2, &[1])), s(2, &[2]));
    }

    #[test]
    fn epsilon_examples() {
        assert_eq!(epsilon_sign(&s(2, &[1]), &s(2, &[2])).unwrap(), 1);
        assert_eq!(epsilon_sign(&s(2, &[2]), &s(2, &[1])).unwrap(), -1);
        assert_eq!(epsilon_sign(&s(3, &[1, 3]), &s(3, &[2])).unwrap(), -1);
        let err = epsilon_sign(&s(3, &[1, 2]), &s(3, &[2])).unwrap_err();
        assert_eq!(err.to_string(), "epsilon undefined on overlapping subsets");
    }

    #[test]
    fn hasse_small_cases() {
        assert_eq!(hasse_covers(1).unwrap(), vec![(s(1, &[1]), s(1, &[]))]);
        let mut got = hasse_covers(2).unwrap();
        got.sort();
        let mut want = vec![
            (s(2, &[1]), s(2, &[])),
            (s(2, &[2]), s(2, &[1])),
            (s(2, &[1, 2]), s(2, &[2])),
        ];
        want.sort();
        assert_eq!(got, want);
        assert!(hasse_covers(0).is_err());
        assert!(hasse_covers(17).is_err());
    }

    #[test]
    fn hasse_dot_shape() {
        let dot = hasse_dot(2).unwrap();
        assert!(dot.starts_with("digraph hasse_n2 {"));
        assert_eq!(dot.matches("->").count(), 3);
        assert!(dot.contains("label=\"{1,2}\", weight=4"));
    }

    #[test]
    fn serde_shape() {
        let x = s(4, &[3, 1]);
        let js = serde_json::to_string(&x).unwrap();
        assert_eq!(js, r#"{"n":4,"members":[1,3]}"#);
        let back: SubsetIndex = serde_json::from_str(&js).unwrap();
        assert_eq!(back, x);
        assert!(serde_json::from_str::<SubsetIndex>(r#"{"n":2,"members":[3]}"#).is_err());
    }

    #[test]
    fn mobius_range() {
        assert!(mobius_table(13).is_err());
        let t = mobius_table(1).unwrap();
        assert_eq!(t.get(&s(1, &[1]), &s(1, &[])), Some(-1));
        assert_eq!(t.get(&s(1, &[]), &s(1, &[1])), None);
    }
}
