//! The integral cohomology of `U(n)` on the stratum basis `α_I`: an exterior
//! algebra on odd generators `α_{{i}}` of degree `2i − 1`, with shuffle signs.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::combinatorics::{all_subsets, epsilon_sign, SubsetIndex, MAX_POSET_N};
use crate::error::{Error, Result};

/// Integer combination `Σ c_I α_I` with nonzero coefficients only.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ClassRepr", into = "ClassRepr")]
pub struct ExteriorClass {
    n: usize,
    terms: BTreeMap<SubsetIndex, i64>,
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    #[serde(rename = "I")]
    members: Vec<usize>,
    c: i64,
}

#[derive(Serialize, Deserialize)]
struct ClassRepr {
    n: usize,
    terms: Vec<TermRepr>,
}

impl TryFrom<ClassRepr> for ExteriorClass {
    type Error = Error;

    fn try_from(r: ClassRepr) -> Result<Self> {
        let terms = r
            .terms
            .into_iter()
            .map(|t| Ok((SubsetIndex::new(r.n, &t.members)?, t.c)))
            .collect::<Result<Vec<_>>>()?;
        ExteriorClass::from_terms(r.n, terms)
    }
}

impl From<ExteriorClass> for ClassRepr {
    fn from(c: ExteriorClass) -> Self {
        ClassRepr {
            n: c.n,
            terms: c
                .terms
                .into_iter()
                .map(|(i, c)| TermRepr {
                    members: i.members(),
                    c,
                })
                .collect(),
        }
    }
}

fn same_n(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::AmbientMismatch { left: a, right: b });
    }
    Ok(())
}

impl ExteriorClass {
    pub fn zero(n: usize) -> Self {
        ExteriorClass {
            n,
            terms: BTreeMap::new(),
        }
    }

    /// Sums repeated keys; drops zero coefficients.
    pub fn from_terms(
        n: usize,
        terms: impl IntoIterator<Item = (SubsetIndex, i64)>,
    ) -> Result<Self> {
        let mut out = ExteriorClass::zero(n);
        for (i, c) in terms {
            same_n(n, i.n())?;
            out.add_term(i, c)?;
        }
        Ok(out)
    }

    fn add_term(&mut self, i: SubsetIndex, c: i64) -> Result<()> {
        if c == 0 {
            return Ok(());
        }
        let entry = self.terms.entry(i).or_insert(0);
        *entry = entry.checked_add(c).ok_or(Error::Overflow)?;
        if *entry == 0 {
            self.terms.remove(&i);
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &BTreeMap<SubsetIndex, i64> {
        &self.terms
    }

    pub fn coefficient(&self, i: &SubsetIndex) -> i64 {
        self.terms.get(i).copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Common degree of all terms; `None` for the zero class or mixed degrees.
    pub fn degree(&self) -> Option<u64> {
        let mut weights = self.terms.keys().map(|i| i.weight());
        let first = weights.next()?;
        weights.all(|w| w == first).then_some(first)
    }

    pub fn add(&self, other: &ExteriorClass) -> Result<ExteriorClass> {
        same_n(self.n, other.n)?;
        let mut out = self.clone();
        for (&i, &c) in &other.terms {
            out.add_term(i, c)?;
        }
        Ok(out)
    }

    pub fn scale(&self, k: i64) -> Result<ExteriorClass> {
        let mut out = ExteriorClass::zero(self.n);
        for (&i, &c) in &self.terms {
            out.add_term(i, c.checked_mul(k).ok_or(Error::Overflow)?)?;
        }
        Ok(out)
    }

    pub fn neg(&self) -> Result<ExteriorClass> {
        self.scale(-1)
    }
}

/// `α_I` with coefficient 1, of degree `w(I)`.
pub fn basis_class(i: SubsetIndex) -> ExteriorClass {
    let mut terms = BTreeMap::new();
    terms.insert(i, 1);
    ExteriorClass { n: i.n(), terms }
}

/// The unit `α_∅`.
pub fn unit(n: usize) -> Result<ExteriorClass> {
    Ok(basis_class(SubsetIndex::empty(n)?))
}

/// Sign rule `ε(I, J)` used by products and the pairing; the default is the
/// shuffle sign. Replaceable so verification can run against a deliberately
/// wrong rule.
pub trait SignRule: Sync {
    fn sign(&self, i: &SubsetIndex, j: &SubsetIndex) -> i64;
}

pub struct ShuffleSign;

impl SignRule for ShuffleSign {
    fn sign(&self, i: &SubsetIndex, j: &SubsetIndex) -> i64 {
        epsilon_sign(i, j).expect("disjoint subsets of the same n") as i64
    }
}

pub fn cup(x: &ExteriorClass, y: &ExteriorClass) -> Result<ExteriorClass> {
    cup_with(x, y, &ShuffleSign)
}

/// `α_I ∪ α_J = ε(I, J) α_{I∪J}` for disjoint `I, J`, else 0; extended bilinearly.
pub fn cup_with(
    x: &ExteriorClass,
    y: &ExteriorClass,
    rule: &dyn SignRule,
) -> Result<ExteriorClass> {
    same_n(x.n, y.n)?;
    let mut out = ExteriorClass::zero(x.n);
    for (i, &a) in &x.terms {
        for (j, &b) in &y.terms {
            if !i.is_disjoint(j) {
                continue;
            }
            let c = a.checked_mul(b).ok_or(Error::Overflow)?;
            let c = c.checked_mul(rule.sign(i, j)).ok_or(Error::Overflow)?;
            out.add_term(i.union(j)?, c)?;
        }
    }
    Ok(out)
}

pub fn pairing(x: &ExteriorClass, y: &ExteriorClass) -> Result<i64> {
    pairing_with(x, y, &ShuffleSign)
}

/// `α_I • α_J = ε(I, J)` when `J = I^c`, else 0; extended bilinearly. Classes
/// whose degrees do not add up to `n²` pair to 0.
pub fn pairing_with(x: &ExteriorClass, y: &ExteriorClass, rule: &dyn SignRule) -> Result<i64> {
    same_n(x.n, y.n)?;
    let mut total: i64 = 0;
    for (i, &a) in &x.terms {
        let j = i.complement();
        if let Some(&b) = y.terms.get(&j) {
            let term = a
                .checked_mul(b)
                .and_then(|v| v.checked_mul(rule.sign(i, &j)))
                .ok_or(Error::Overflow)?;
            total = total.checked_add(term).ok_or(Error::Overflow)?;
        }
    }
    Ok(total)
}

/// `c = Σ_I ε(I, I^c) (c • α_{I^c}) α_I` from the pairings of a degree-`k`
/// class against all complements, given as `I ↦ c • α_{I^c}`.
pub fn decompose(values: &BTreeMap<SubsetIndex, i64>, n: usize, k: u64) -> Result<ExteriorClass> {
    decompose_with(values, n, k, &ShuffleSign)
}

pub fn decompose_with(
    values: &BTreeMap<SubsetIndex, i64>,
    n: usize,
    k: u64,
    rule: &dyn SignRule,
) -> Result<ExteriorClass> {
    let mut out = ExteriorClass::zero(n);
    for (i, &v) in values {
        same_n(n, i.n())?;
        if i.weight() != k {
            return Err(Error::InvalidSubset(format!(
                "{i} has weight {}, expected {k}",
                i.weight()
            )));
        }
        let c = v
            .checked_mul(rule.sign(i, &i.complement()))
            .ok_or(Error::Overflow)?;
        out.add_term(*i, c)?;
    }
    Ok(out)
}

/// Pairing values `I ↦ c • α_{I^c}` for every `I` of weight `k`.
pub fn pairing_values(c: &ExteriorClass, k: u64) -> Result<BTreeMap<SubsetIndex, i64>> {
    pairing_values_with(c, k, &ShuffleSign)
}

pub fn pairing_values_with(
    c: &ExteriorClass,
    k: u64,
    rule: &dyn SignRule,
) -> Result<BTreeMap<SubsetIndex, i64>> {
    let mut out = BTreeMap::new();
    for i in all_subsets(c.n)?.filter(|i| i.weight() == k) {
        out.insert(i, pairing_with(c, &basis_class(i.complement()), rule)?);
    }
    Ok(out)
}

fn check_betti_n(n: usize) -> Result<()> {
    if n == 0 || n > MAX_POSET_N {
        return Err(Error::OutOfRange {
            what: "n",
            value: n,
            min: 1,
            max: MAX_POSET_N,
        });
    }
    Ok(())
}

/// `rank_k = #{I : w(I) = k}` for `k = 0..=n²`.
pub fn betti_ranks(n: usize) -> Result<Vec<u64>> {
    check_betti_n(n)?;
    let mut ranks = vec![0u64; n * n + 1];
    for i in all_subsets(n)? {
        ranks[i.weight() as usize] += 1;
    }
    Ok(ranks)
}

/// Coefficients of `∏_{i=1}^n (1 + t^{2i−1})`.
pub fn poincare_polynomial(n: usize) -> Result<Vec<u64>> {
    check_betti_n(n)?;
    let mut poly = vec![1u64];
    for i in 1..=n {
        let d = 2 * i - 1;
        let mut next = vec![0u64; poly.len() + d];
        for (k, &c) in poly.iter().enumerate() {
            next[k] += c;
            next[k + d] += c;
        }
        poly = next;
    }
    Ok(poly)
}

/// `I,J,sign,product` for all ordered pairs of basis classes; `product` is
/// `I ∪ J` or empty when the product vanishes.
pub fn products_csv(n: usize) -> Result<String> {
    if n == 0 || n > 5 {
        return Err(Error::OutOfRange {
            what: "n",
            value: n,
            min: 1,
            max: 5,
        });
    }
    let mut out = String::from("I,J,sign,product\n");
    let subsets: Vec<SubsetIndex> = all_subsets(n)?.collect();
    for i in &subsets {
        for j in &subsets {
            let p = cup(&basis_class(*i), &basis_class(*j))?;
            match p.terms.iter().next() {
                Some((k, c)) => writeln!(out, "\"{i}\",\"{j}\",{c},\"{k}\""),
                None => writeln!(out, "\"{i}\",\"{j}\",0,"),
            }
            .expect("write to string");
        }
    }
    Ok(out)
}
