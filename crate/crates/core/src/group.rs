//! Arithmetic over `Z_n`: moduli, residues, sequences, weight sets and
//! coefficient vectors shared by every other module.
//!
//! All values are reduced eagerly and immutable after construction.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Above this modulus a units weight set is kept as a gcd predicate instead of
/// an explicit member list.
pub const UNITS_MATERIALIZE_LIMIT: u64 = 1_000_000;

/// The order `n >= 2` of the cyclic group `Z_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct Modulus(u64);

impl Modulus {
    pub fn new(n: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidModulus(n));
        }
        Ok(Modulus(n))
    }

    #[inline]
    pub fn get(self) -> u64 {
        self.0
    }

    /// Index form for bit-vector kernels.
    #[inline]
    pub fn size(self) -> usize {
        self.0 as usize
    }

    /// Reduces any integer into `[0, n)`.
    pub fn normalize(self, x: i64) -> Residue {
        Residue(x.rem_euclid(self.0 as i64) as u64)
    }

    pub fn reduce(self, x: u64) -> Residue {
        Residue(x % self.0)
    }

    #[inline]
    pub fn add(self, a: u64, b: u64) -> u64 {
        ((a as u128 + b as u128) % self.0 as u128) as u64
    }

    #[inline]
    pub fn sub(self, a: u64, b: u64) -> u64 {
        self.add(a, self.0 - b % self.0)
    }

    #[inline]
    pub fn mul(self, a: u64, b: u64) -> u64 {
        mul_mod(a, b, self.0)
    }

    #[inline]
    pub fn neg(self, a: u64) -> u64 {
        (self.0 - a % self.0) % self.0
    }

    pub fn is_unit(self, x: u64) -> bool {
        gcd(x % self.0, self.0) == 1
    }

    /// Multiplicative inverse of a unit.
    pub fn inverse(self, x: u64) -> Option<u64> {
        mod_inverse(x % self.0, self.0)
    }
}

impl TryFrom<u64> for Modulus {
    type Error = Error;
    fn try_from(n: u64) -> Result<Self> {
        Modulus::new(n)
    }
}

impl From<Modulus> for u64 {
    fn from(m: Modulus) -> u64 {
        m.0
    }
}

impl fmt::Display for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A reduced element of `Z_n`. The modulus travels with the container
/// ([`ZnSequence`], [`WeightSet`]) rather than with each value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Residue(u64);

impl Residue {
    #[inline]
    pub fn value(self) -> u64 {
        self.0
    }
}

/// `x mod n` in `[0, n)`.
pub fn normalize(x: i64, n: Modulus) -> Residue {
    n.normalize(x)
}

/// True iff `gcd(x, n) = 1`.
pub fn is_unit(x: Residue, n: Modulus) -> bool {
    n.is_unit(x.value())
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

#[inline]
pub fn mul_mod(a: u64, b: u64, n: u64) -> u64 {
    ((a as u128 * b as u128) % n as u128) as u64
}

pub fn mod_inverse(x: u64, n: u64) -> Option<u64> {
    let (mut old_r, mut r) = (x as i128, n as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(n as i128) as u64)
}

/// Deterministic trial division.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n.is_multiple_of(2) {
        return false;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Prime factors with multiplicity, ascending.
pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        while n.is_multiple_of(d) {
            out.push(d);
            n /= d;
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Positive divisors, ascending.
pub fn divisors(n: u64) -> Vec<u64> {
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = 1u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            small.push(d);
            if d * d != n {
                large.push(n / d);
            }
        }
        d += 1;
    }
    small.extend(large.into_iter().rev());
    small
}

/// An ordered sequence of residues modulo `n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ZnSequence {
    modulus: Modulus,
    entries: Vec<u64>,
}

impl ZnSequence {
    /// Entries are reduced modulo `n`.
    pub fn new(modulus: Modulus, entries: impl IntoIterator<Item = u64>) -> Self {
        let entries = entries.into_iter().map(|x| x % modulus.get()).collect();
        ZnSequence { modulus, entries }
    }

    pub fn from_signed(modulus: Modulus, entries: impl IntoIterator<Item = i64>) -> Self {
        let entries = entries.into_iter().map(|x| modulus.normalize(x).value()).collect();
        ZnSequence { modulus, entries }
    }

    pub fn empty(modulus: Modulus) -> Self {
        ZnSequence {
            modulus,
            entries: Vec::new(),
        }
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn multiplicity(&self, v: u64) -> usize {
        let v = v % self.modulus.get();
        self.entries.iter().filter(|&&x| x == v).count()
    }

    pub fn multiplicities(&self) -> BTreeMap<u64, usize> {
        let mut counts = BTreeMap::new();
        for &x in &self.entries {
            *counts.entry(x).or_insert(0) += 1;
        }
        counts
    }

    pub fn max_multiplicity(&self) -> usize {
        self.multiplicities().values().copied().max().unwrap_or(0)
    }

    pub fn sum(&self) -> u64 {
        self.entries.iter().fold(0, |acc, &x| self.modulus.add(acc, x))
    }

    pub fn pushed(&self, x: u64) -> ZnSequence {
        let mut entries = self.entries.clone();
        entries.push(x % self.modulus.get());
        ZnSequence {
            modulus: self.modulus,
            entries,
        }
    }

    pub fn scaled(&self, u: u64) -> ZnSequence {
        let n = self.modulus;
        ZnSequence {
            modulus: n,
            entries: self.entries.iter().map(|&x| n.mul(x, u)).collect(),
        }
    }

    pub fn translated(&self, c: u64) -> ZnSequence {
        let n = self.modulus;
        ZnSequence {
            modulus: n,
            entries: self.entries.iter().map(|&x| n.add(x, c)).collect(),
        }
    }

    pub fn sorted(&self) -> ZnSequence {
        let mut entries = self.entries.clone();
        entries.sort_unstable();
        ZnSequence {
            modulus: self.modulus,
            entries,
        }
    }
}

impl fmt::Display for ZnSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ") mod {}", self.modulus)
    }
}

/// True iff no residue occurs more than `k` times.
pub fn is_k_restricted(x: &ZnSequence, k: usize) -> bool {
    x.max_multiplicity() <= k
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum WeightKind {
    Singleton(u64),
    PlusMinusOne,
    Units,
    Explicit(Vec<u64>),
}

/// The coefficient set `A ⊆ [1, n-1]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightSet {
    modulus: Modulus,
    kind: WeightKind,
    /// Sorted ascending; `None` only for large units sets.
    members: Option<Vec<u64>>,
}

impl WeightSet {
    pub fn singleton(n: Modulus, a: u64) -> Result<Self> {
        make_weight_set(WeightKind::Singleton(a), n)
    }

    pub fn ones(n: Modulus) -> Self {
        make_weight_set(WeightKind::Singleton(1), n).expect("1 is a valid weight")
    }

    pub fn plus_minus_one(n: Modulus) -> Self {
        make_weight_set(WeightKind::PlusMinusOne, n).expect("±1 is a valid weight set")
    }

    pub fn units(n: Modulus) -> Self {
        make_weight_set(WeightKind::Units, n).expect("units are a valid weight set")
    }

    pub fn explicit(n: Modulus, members: impl IntoIterator<Item = u64>) -> Result<Self> {
        make_weight_set(WeightKind::Explicit(members.into_iter().collect()), n)
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    pub fn kind(&self) -> &WeightKind {
        &self.kind
    }

    pub fn is_materialized(&self) -> bool {
        self.members.is_some()
    }

    pub fn members(&self) -> Result<&[u64]> {
        self.members
            .as_deref()
            .ok_or(Error::NotMaterialized(self.modulus.get()))
    }

    pub fn len(&self) -> u64 {
        match &self.members {
            Some(m) => m.len() as u64,
            None => euler_phi(self.modulus.get()),
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, x: u64) -> bool {
        let x = x % self.modulus.get();
        match &self.members {
            Some(m) => m.binary_search(&x).is_ok(),
            None => x != 0 && self.modulus.is_unit(x),
        }
    }

    /// True when the set is exactly `{1}`.
    pub fn is_ones(&self) -> bool {
        matches!(self.members.as_deref(), Some([1]))
    }
}

/// Validates and materializes a weight set.
pub fn make_weight_set(kind: WeightKind, n: Modulus) -> Result<WeightSet> {
    let nv = n.get();
    let members = match &kind {
        WeightKind::Singleton(a) => {
            check_member(*a, nv)?;
            Some(vec![*a])
        }
        WeightKind::PlusMinusOne => {
            let mut m = vec![1, nv - 1];
            m.dedup();
            Some(m)
        }
        WeightKind::Units => {
            if nv > UNITS_MATERIALIZE_LIMIT {
                None
            } else {
                Some((1..nv).filter(|&x| gcd(x, nv) == 1).collect())
            }
        }
        WeightKind::Explicit(set) => {
            if set.is_empty() {
                return Err(Error::InvalidWeightSet("weight set is empty".into()));
            }
            for &a in set {
                check_member(a, nv)?;
            }
            let mut m = set.clone();
            m.sort_unstable();
            m.dedup();
            Some(m)
        }
    };
    Ok(WeightSet {
        modulus: n,
        kind,
        members,
    })
}

fn check_member(a: u64, n: u64) -> Result<()> {
    if a == 0 {
        return Err(Error::InvalidWeightSet("0 is not an admissible weight".into()));
    }
    if a >= n {
        return Err(Error::InvalidWeightSet(format!("weight {a} outside [1, {}]", n - 1)));
    }
    Ok(())
}

/// Euler's totient from the prime factorization.
pub fn euler_phi(n: u64) -> u64 {
    let mut ps = prime_factors(n);
    ps.dedup();
    ps.iter().fold(n, |acc, &p| acc / p * (p - 1))
}

/// A coefficient vector `a ∈ (A ∪ {0})^m`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WitnessVector {
    coefficients: Vec<u64>,
}

impl WitnessVector {
    pub fn new(coefficients: Vec<u64>) -> Self {
        WitnessVector { coefficients }
    }

    pub fn coefficients(&self) -> &[u64] {
        &self.coefficients
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Indices with a nonzero coefficient.
    pub fn support(&self) -> Vec<usize> {
        self.coefficients
            .iter()
            .enumerate()
            .filter(|(_, &a)| a != 0)
            .map(|(i, _)| i)
            .collect()
    }

    /// `Σ a_i x_i mod n`.
    pub fn evaluate(&self, x: &ZnSequence) -> u64 {
        let n = x.modulus();
        self.coefficients
            .iter()
            .zip(x.entries())
            .fold(0, |acc, (&a, &xi)| n.add(acc, n.mul(a, xi)))
    }
}
