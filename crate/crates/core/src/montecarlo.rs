//! Seeded random-sequence experiments.
//!
//! Trial `t` of an experiment with seed `s` draws from the ChaCha8 stream
//! `(s, t)`, so every trial can be replayed on its own and the aggregate
//! does not depend on how trials are scheduled.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decision::{brute_force_decide, is_davenport_z, is_erdos_z, UnitsDavenportKernel, ZKind};
use crate::error::{Error, Result};
use crate::group::{is_prime, mod_inverse, Modulus, WeightSet, ZnSequence};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959963984540054;

/// Default largest `n` for which the units scenario runs the exact check.
pub const DEFAULT_EXACT_THRESHOLD: u64 = 100_000;

/// Largest `r·m` for which chain probabilities are enumerated exactly.
pub const CHAIN_EXACT_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    #[serde(rename = "erdos-unweighted@n+2")]
    ErdosUnweighted,
    #[serde(rename = "erdos-ab@n")]
    ErdosAb,
    #[serde(rename = "erdos-pm1@n+1")]
    ErdosPm1,
    #[serde(rename = "davenport-unweighted")]
    DavenportUnweighted,
    #[serde(rename = "davenport-pm1")]
    DavenportPm1,
    #[serde(rename = "davenport-units-squarefree")]
    DavenportUnitsSquarefree,
    #[serde(rename = "primorial-chain")]
    PrimorialChain,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::ErdosUnweighted,
        Scenario::ErdosAb,
        Scenario::ErdosPm1,
        Scenario::DavenportUnweighted,
        Scenario::DavenportPm1,
        Scenario::DavenportUnitsSquarefree,
        Scenario::PrimorialChain,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::ErdosUnweighted => "erdos-unweighted@n+2",
            Scenario::ErdosAb => "erdos-ab@n",
            Scenario::ErdosPm1 => "erdos-pm1@n+1",
            Scenario::DavenportUnweighted => "davenport-unweighted",
            Scenario::DavenportPm1 => "davenport-pm1",
            Scenario::DavenportUnitsSquarefree => "davenport-units-squarefree",
            Scenario::PrimorialChain => "primorial-chain",
        }
    }

    /// Whether the scenario is parameterised by a prime list.
    pub fn uses_primes(self) -> bool {
        matches!(self, Scenario::DavenportUnitsSquarefree | Scenario::PrimorialChain)
    }

    /// Length implied by the scenario name, if any.
    pub fn default_length(self, n: u64) -> Option<usize> {
        match self {
            Scenario::ErdosUnweighted => Some(n as usize + 2),
            Scenario::ErdosAb => Some(n as usize),
            Scenario::ErdosPm1 => Some(n as usize + 1),
            _ => None,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown scenario '{s}'")))
    }
}

/// Sequence length, either fixed or relative to `⌊log₂ n⌋`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum LengthSpec {
    Fixed(usize),
    /// `⌊log₂ n⌋ + offset`.
    Log2Offset(i64),
    /// `⌊½ log₂ n⌋ + offset`.
    HalfLog2Offset(i64),
}

impl LengthSpec {
    pub fn resolve(self, n: u64) -> Result<usize> {
        let base = |v: i64, off: i64| {
            let m = v + off;
            if m < 0 {
                Err(Error::InvalidInput(format!("length {v} + {off} is negative")))
            } else {
                Ok(m as usize)
            }
        };
        match self {
            LengthSpec::Fixed(m) => Ok(m),
            LengthSpec::Log2Offset(off) => base(n.ilog2() as i64, off),
            LengthSpec::HalfLog2Offset(off) => base(n.ilog2() as i64 / 2, off),
        }
    }
}

/// How each trial decides the scenario's property.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    Auto,
    ExactDp,
    Lemma1Certificate,
    BruteForce,
    ChainCheck,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Auto => "auto",
            Method::ExactDp => "exact-dp",
            Method::Lemma1Certificate => "lemma1-certificate",
            Method::BruteForce => "brute-force",
            Method::ChainCheck => "chain-check",
        }
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        [
            Method::Auto,
            Method::ExactDp,
            Method::Lemma1Certificate,
            Method::BruteForce,
            Method::ChainCheck,
        ]
        .into_iter()
        .find(|m| m.name() == s)
        .ok_or_else(|| Error::InvalidInput(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub scenario: Scenario,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub primes: Option<Vec<u64>>,
    /// Falls back to the length implied by the scenario name.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub length: Option<LengthSpec>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub a: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub b: Option<u64>,
    pub trials: u64,
    pub seed: u64,
    #[serde(default)]
    pub method: Method,
    #[serde(default = "default_exact_threshold")]
    pub exact_threshold: u64,
}

fn default_exact_threshold() -> u64 {
    DEFAULT_EXACT_THRESHOLD
}

impl TrialConfig {
    /// A config over `Z_n` with the scenario's default length.
    pub fn new(scenario: Scenario, n: u64, trials: u64, seed: u64) -> Self {
        TrialConfig {
            scenario,
            n: Some(n),
            primes: None,
            length: None,
            a: None,
            b: None,
            trials,
            seed,
            method: Method::Auto,
            exact_threshold: DEFAULT_EXACT_THRESHOLD,
        }
    }

    /// A config over the squarefree product of `primes`.
    pub fn with_primes(scenario: Scenario, primes: Vec<u64>, trials: u64, seed: u64) -> Self {
        TrialConfig {
            n: None,
            primes: Some(primes),
            ..TrialConfig::new(scenario, 0, trials, seed)
        }
    }

    pub fn length(mut self, m: usize) -> Self {
        self.length = Some(LengthSpec::Fixed(m));
        self
    }

    pub fn length_spec(mut self, spec: LengthSpec) -> Self {
        self.length = Some(spec);
        self
    }

    pub fn weights(mut self, a: u64, b: u64) -> Self {
        self.a = Some(a);
        self.b = Some(b);
        self
    }

    pub fn method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }
}

/// Aggregate outcome of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub scenario: Scenario,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub primes: Option<Vec<u64>>,
    pub m: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub a: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub b: Option<u64>,
    pub trials: u64,
    pub seed: u64,
    pub successes: u64,
    pub estimate: f64,
    pub ci95: [f64; 2],
    pub method_counts: BTreeMap<String, u64>,
    /// `"exact"`, or `"lower-bound"` when a sound but incomplete
    /// certificate decided some trials.
    pub estimate_kind: String,
}

/// Wilson score interval for `successes` out of `trials` at quantile `z`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> [f64; 2] {
    if trials == 0 {
        return [0.0, 1.0];
    }
    let t = trials as f64;
    let p = successes as f64 / t;
    let z2 = z * z;
    let denom = 1.0 + z2 / t;
    let center = (p + z2 / (2.0 * t)) / denom;
    let half = z / denom * (p * (1.0 - p) / t + z2 / (4.0 * t * t)).sqrt();
    [(center - half).max(0.0).min(p), (center + half).min(1.0).max(p)]
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// `m` i.i.d. uniform residues from the stream `(seed, trial)`. Longer
/// draws from the same stream extend shorter ones.
pub fn sample_sequence(n: Modulus, m: usize, seed: u64, trial: u64) -> ZnSequence {
    let mut rng = trial_rng(seed, trial);
    let entries: Vec<u64> = (0..m).map(|_| rng.random_range(0..n.get())).collect();
    ZnSequence::new(n, entries)
}

/// `m` random subsets of `0..r` (as bitmasks), index `i` present with
/// probability `1/primes[i]`, from the stream `(seed, trial)`.
pub fn sample_prime_sets(primes: &[u64], m: usize, seed: u64, trial: u64) -> Vec<u128> {
    let mut rng = trial_rng(seed, trial);
    (0..m)
        .map(|_| {
            primes.iter().enumerate().fold(
                0u128,
                |acc, (i, &p)| if rng.random_range(0..p) == 0 { acc | 1 << i } else { acc },
            )
        })
        .collect()
}

/// Whether some ordering of `sets` is an inclusion chain.
pub fn is_chain(sets: &[u128]) -> bool {
    let mut sorted = sets.to_vec();
    sorted.sort_by_key(|s| s.count_ones());
    sorted.windows(2).all(|w| w[0] & !w[1] == 0)
}

fn validate_primes(primes: &[u64], odd: bool) -> Result<()> {
    if primes.is_empty() {
        return Err(Error::InvalidInput("prime list is empty".into()));
    }
    if primes.len() > 128 {
        return Err(Error::InvalidInput("at most 128 primes are supported".into()));
    }
    for (i, &p) in primes.iter().enumerate() {
        if !is_prime(p) {
            return Err(Error::InvalidInput(format!("{p} is not prime")));
        }
        if odd && p == 2 {
            return Err(Error::InvalidInput("primes must be odd".into()));
        }
        if primes[..i].contains(&p) {
            return Err(Error::InvalidInput(format!(
                "prime {p} repeats, so n is not squarefree"
            )));
        }
    }
    Ok(())
}

fn product(primes: &[u64]) -> Result<u64> {
    primes
        .iter()
        .try_fold(1u64, |acc, &p| acc.checked_mul(p))
        .ok_or_else(|| Error::InvalidInput("product of primes overflows u64".into()))
}

/// Prime-support decomposition of a nonzero residue over squarefree `n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorizationProfile {
    pub x: u64,
    /// Indices `i` with `p_i | x`.
    pub prime_index_set: Vec<usize>,
    /// Unit `u` with `x ≡ u · ∏_{i∈A} p_i (mod n)`.
    pub unit_part: u64,
    /// No `p_i²` divides the representative in `[0, n)`.
    pub integer_squarefree: bool,
}

/// Combines residues modulo pairwise coprime `primes` into one residue.
fn crt(residues: &[u64], primes: &[u64]) -> u64 {
    let n: u128 = primes.iter().map(|&p| p as u128).product();
    let mut acc = 0u128;
    for (&r, &p) in residues.iter().zip(primes) {
        let rest = n / p as u128;
        let inv = mod_inverse((rest % p as u128) as u64, p).expect("coprime moduli") as u128;
        acc = (acc + r as u128 * inv % n * rest) % n;
    }
    acc as u64
}

pub fn decompose_element(x: u64, primes: &[u64]) -> Result<FactorizationProfile> {
    validate_primes(primes, false)?;
    let n = product(primes)?;
    let x = x % n;
    if x == 0 {
        return Err(Error::InvalidInput("cannot decompose 0".into()));
    }
    let set: Vec<usize> = (0..primes.len()).filter(|&i| x.is_multiple_of(primes[i])).collect();
    let p_a: u64 = set.iter().map(|&i| primes[i]).product();
    let coords: Vec<u64> = primes
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            if set.contains(&i) {
                1
            } else {
                let inv = mod_inverse(p_a % p, p).expect("p_A is invertible off A");
                (x % p) * inv % p
            }
        })
        .collect();
    let unit_part = crt(&coords, primes);
    let integer_squarefree = primes.iter().all(|&p| !x.is_multiple_of(p * p));
    Ok(FactorizationProfile {
        x,
        prime_index_set: set,
        unit_part,
        integer_squarefree,
    })
}

/// Unit coefficients `a` with `Σ aᵢxᵢ ≡ 0`, justified by the prime-support
/// condition on the entries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lemma1Certificate {
    pub coefficients: Vec<u64>,
    pub profiles: Vec<FactorizationProfile>,
}

impl Lemma1Certificate {
    /// Every coefficient is a unit and the weighted sum vanishes.
    pub fn check(&self, x: &ZnSequence) -> bool {
        let n = x.modulus();
        self.coefficients.len() == x.len()
            && self.coefficients.iter().all(|&a| n.is_unit(a))
            && x.entries()
                .iter()
                .zip(&self.coefficients)
                .fold(0, |acc, (&v, &a)| n.add(acc, n.mul(v, a)))
                == 0
    }
}

/// Units `c_i mod p` with `Σ c_i y_i ≡ 0` over `y` (at least two nonzero
/// entries, `p` odd); zero entries get coefficient 1.
fn solve_prime_coordinate(ys: &[u64], p: u64) -> Vec<u64> {
    let mut c = vec![1u64; ys.len()];
    let nz: Vec<usize> = (0..ys.len()).filter(|&i| ys[i] != 0).collect();
    debug_assert!(nz.len() >= 2 && p % 2 == 1);
    let mut rest = &nz[..];
    if nz.len() % 2 == 1 {
        // y₁⁻¹·y₁ + y₂⁻¹·y₂ + (-2·y₃⁻¹)·y₃ = 0
        let (i, j, k) = (nz[0], nz[1], nz[2]);
        c[i] = mod_inverse(ys[i], p).expect("nonzero mod p");
        c[j] = mod_inverse(ys[j], p).expect("nonzero mod p");
        c[k] = (p - 2) * mod_inverse(ys[k], p).expect("nonzero mod p") % p;
        rest = &nz[3..];
    }
    for pair in rest.chunks(2) {
        let (i, j) = (pair[0], pair[1]);
        c[i] = ys[j];
        c[j] = p - ys[i];
    }
    c
}

/// Applies the squarefree-support lemma to `x`.
///
/// Requires odd distinct primes with product `n` and nonzero entries. Returns a
/// certificate iff the entries are pairwise distinct and, for every `i`, the
/// prime-support sets of the other entries have empty intersection.
/// A certificate proves `x` is a unit-weighted Davenport Z-sequence; `None`
/// proves nothing.
pub fn lemma1_certify(x: &ZnSequence, primes: &[u64]) -> Result<Option<Lemma1Certificate>> {
    validate_primes(primes, true)?;
    let n = x.modulus();
    if product(primes)? != n.get() {
        return Err(Error::InvalidInput(format!("primes {primes:?} do not multiply to {n}")));
    }
    if x.entries().contains(&0) {
        return Err(Error::InvalidInput("zero entry".into()));
    }
    if x.len() < 2 || x.max_multiplicity() > 1 {
        return Ok(None);
    }
    let profiles: Vec<FactorizationProfile> = x
        .entries()
        .iter()
        .map(|&v| decompose_element(v, primes))
        .collect::<Result<_>>()?;
    // ∩_{j≠i} A_j = ∅ for all i ⟺ every prime misses at least two entries
    for (pi, _) in primes.iter().enumerate() {
        let missing = profiles.iter().filter(|f| !f.prime_index_set.contains(&pi)).count();
        if missing < 2 {
            return Ok(None);
        }
    }
    let per_prime: Vec<Vec<u64>> = primes
        .iter()
        .map(|&p| solve_prime_coordinate(&x.entries().iter().map(|&v| v % p).collect::<Vec<_>>(), p))
        .collect();
    let coefficients: Vec<u64> = (0..x.len())
        .map(|i| crt(&per_prime.iter().map(|c| c[i]).collect::<Vec<_>>(), primes))
        .collect();
    let cert = Lemma1Certificate { coefficients, profiles };
    if !cert.check(x) {
        return Err(Error::VerificationFailed(format!("certificate for {x} does not check")));
    }
    Ok(Some(cert))
}

/// Certificate path for arbitrary random sequences: a zero entry or a
/// repeated value is already a unit-weighted zero sum; otherwise the lemma.
pub fn certify_units_davenport(x: &ZnSequence, primes: &[u64]) -> Result<bool> {
    if x.entries().contains(&0) || x.max_multiplicity() > 1 {
        return Ok(true);
    }
    Ok(lemma1_certify(x, primes)?.is_some())
}

struct Plan {
    /// Absent for primorial-chain, which samples index sets only.
    n: Option<Modulus>,
    m: usize,
    primes: Vec<u64>,
    weights: Option<WeightSet>,
    kind: ZKind,
    method: Method,
    kernel: Option<UnitsDavenportKernel>,
}

fn plan(config: &TrialConfig) -> Result<Plan> {
    if config.trials == 0 {
        return Err(Error::InvalidInput("trials must be at least 1".into()));
    }
    let sc = config.scenario;
    let primes = match (&config.primes, sc.uses_primes()) {
        (Some(ps), true) => {
            validate_primes(ps, sc == Scenario::PrimorialChain)?;
            ps.clone()
        }
        (None, true) => return Err(Error::InvalidInput(format!("{sc} needs a prime list"))),
        (_, false) => Vec::new(),
    };
    if sc == Scenario::PrimorialChain {
        let m = match config.length {
            Some(LengthSpec::Fixed(m)) => m,
            _ => return Err(Error::InvalidInput("primorial-chain needs a fixed length".into())),
        };
        if !matches!(config.method, Method::Auto | Method::ChainCheck) {
            return Err(Error::InvalidInput(format!(
                "primorial-chain does not support {}",
                config.method.name()
            )));
        }
        return Ok(Plan {
            n: None,
            m,
            primes,
            weights: None,
            kind: ZKind::Davenport,
            method: Method::ChainCheck,
            kernel: None,
        });
    }
    let n = if sc.uses_primes() {
        let prod = product(&primes)?;
        if config.n.is_some_and(|n| n != prod) {
            return Err(Error::InvalidInput(format!(
                "n does not equal the product {prod} of the primes"
            )));
        }
        Modulus::new(prod)?
    } else {
        Modulus::new(config.n.ok_or_else(|| Error::InvalidInput(format!("{sc} needs n")))?)?
    };
    let m = match config.length {
        Some(spec) => spec.resolve(n.get())?,
        None => sc
            .default_length(n.get())
            .ok_or_else(|| Error::InvalidInput(format!("{sc} needs a sequence length")))?,
    };
    let (weights, kind) = match sc {
        Scenario::ErdosUnweighted => (Some(WeightSet::ones(n)), ZKind::Erdos),
        Scenario::ErdosPm1 => (Some(WeightSet::plus_minus_one(n)), ZKind::Erdos),
        Scenario::ErdosAb => {
            let (a, b) = match (config.a, config.b) {
                (Some(a), Some(b)) => (a % n.get(), b % n.get()),
                _ => return Err(Error::InvalidInput("erdos-ab needs a and b".into())),
            };
            for (label, v) in [("a", a), ("a+b", n.add(a, b)), ("a-b", n.sub(a, b))] {
                if !n.is_unit(v) {
                    return Err(Error::InvalidInput(format!("{label} = {v} is not a unit mod {n}")));
                }
            }
            (Some(WeightSet::explicit(n, [a, b])?), ZKind::Erdos)
        }
        Scenario::DavenportUnweighted => (Some(WeightSet::ones(n)), ZKind::Davenport),
        Scenario::DavenportPm1 => (Some(WeightSet::plus_minus_one(n)), ZKind::Davenport),
        Scenario::DavenportUnitsSquarefree => (Some(WeightSet::units(n)), ZKind::Davenport),
        Scenario::PrimorialChain => unreachable!("handled above"),
    };
    let method = match (sc, config.method) {
        (_, Method::ChainCheck) => return Err(Error::InvalidInput("chain-check is for primorial-chain only".into())),
        (Scenario::DavenportUnitsSquarefree, Method::Auto) => {
            if n.get() <= config.exact_threshold {
                Method::ExactDp
            } else {
                Method::Lemma1Certificate
            }
        }
        (Scenario::DavenportUnitsSquarefree, Method::Lemma1Certificate) => Method::Lemma1Certificate,
        (_, Method::Lemma1Certificate) => {
            return Err(Error::InvalidInput(
                "lemma1-certificate is for davenport-units-squarefree only".into(),
            ))
        }
        (_, Method::Auto) => Method::ExactDp,
        (_, other) => other,
    };
    if method == Method::Lemma1Certificate {
        validate_primes(&primes, true)?;
    }
    let kernel = if sc == Scenario::DavenportUnitsSquarefree && method == Method::ExactDp {
        Some(UnitsDavenportKernel::new(n)?)
    } else {
        None
    };
    if sc == Scenario::DavenportUnitsSquarefree
        && method == Method::BruteForce
        && !weights.as_ref().unwrap().is_materialized()
    {
        return Err(Error::GuardExceeded(format!("brute force over the units of {n}")));
    }
    Ok(Plan {
        n: Some(n),
        m,
        primes,
        weights,
        kind,
        method,
        kernel,
    })
}

fn run_trial(plan: &Plan, seed: u64, trial: u64) -> Result<bool> {
    if plan.method == Method::ChainCheck {
        return Ok(is_chain(&sample_prime_sets(&plan.primes, plan.m, seed, trial)));
    }
    let x = sample_sequence(plan.n.expect("sequence scenarios carry n"), plan.m, seed, trial);
    let weights = plan.weights.as_ref().expect("sequence scenarios carry weights");
    match plan.method {
        Method::ExactDp => match &plan.kernel {
            Some(kernel) => kernel.is_z(&x),
            None => match plan.kind {
                ZKind::Davenport => is_davenport_z(&x, weights),
                ZKind::Erdos => is_erdos_z(&x, weights),
            },
        },
        Method::BruteForce => brute_force_decide(&x, weights, plan.kind),
        Method::Lemma1Certificate => certify_units_davenport(&x, &plan.primes),
        Method::Auto | Method::ChainCheck => unreachable!("resolved by plan"),
    }
}

/// Runs `config.trials` independent trials in parallel.
pub fn run_experiment(config: &TrialConfig) -> Result<TrialReport> {
    let plan = plan(config)?;
    let successes = (0..config.trials)
        .into_par_iter()
        .map(|t| run_trial(&plan, config.seed, t).map(u64::from))
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    let estimate = successes as f64 / config.trials as f64;
    let mut method_counts = BTreeMap::new();
    method_counts.insert(plan.method.name().to_string(), config.trials);
    let estimate_kind = if plan.method == Method::Lemma1Certificate {
        "lower-bound"
    } else {
        "exact"
    };
    let uses_primes = config.scenario.uses_primes();
    Ok(TrialReport {
        scenario: config.scenario,
        n: plan.n.map(Modulus::get),
        primes: uses_primes.then(|| plan.primes.clone()),
        m: plan.m,
        a: config.a.filter(|_| config.scenario == Scenario::ErdosAb),
        b: config.b.filter(|_| config.scenario == Scenario::ErdosAb),
        trials: config.trials,
        seed: config.seed,
        successes,
        estimate,
        ci95: wilson_interval(successes, config.trials, Z95),
        method_counts,
        estimate_kind: estimate_kind.into(),
    })
}

fn ratio(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn check_odd_prime(p: u64) -> Result<()> {
    if p < 3 || !is_prime(p) {
        return Err(Error::InvalidInput(format!("{p} is not an odd prime")));
    }
    Ok(())
}

/// Probability that a Bernoulli(1/p) 0-1 column of length `m` is
/// non-decreasing: `Σ_{j=0}^{m} (1/p)^j (1-1/p)^{m-j}`.
pub fn column_increasing_probability(p: u64, m: u32) -> Result<BigRational> {
    check_odd_prime(p)?;
    let q = ratio(1, p);
    let q_bar = ratio(p - 1, p);
    Ok((0..=m).fold(BigRational::zero(), |acc, j| {
        acc + q.pow(j as i32) * q_bar.pow((m - j) as i32)
    }))
}

/// `((p-1)^{m+1} - 1) / ((p-2) p^{m+1})`, the printed closed form. It
/// differs from [`column_increasing_probability`] by a factor of `p`.
pub fn column_increasing_probability_printed(p: u64, m: u32) -> Result<BigRational> {
    check_odd_prime(p)?;
    let num = BigInt::from(p - 1).pow(m + 1) - BigInt::one();
    let den = BigInt::from(p - 2) * BigInt::from(p).pow(m + 1);
    Ok(BigRational::new(num, den))
}

/// `m! ∏ ((1-1/p)^{m+1} - 1/p^{m+1}) · p/(p-2)`, evaluated as printed.
pub fn chain_closed_form(primes: &[u64], m: u32) -> Result<BigRational> {
    if m == 0 {
        return Err(Error::InvalidInput("m must be at least 1".into()));
    }
    validate_primes(primes, true)?;
    let fact: BigInt = (1..=m as u64).map(BigInt::from).product();
    let mut acc = BigRational::from_integer(fact);
    for &p in primes {
        let term = ratio(p - 1, p).pow(m as i32 + 1) - ratio(1, p).pow(m as i32 + 1);
        acc = acc * term * ratio(p, p - 2);
    }
    Ok(acc)
}

/// Exact `P(∃σ: A_σ(1) ⊆ ⋯ ⊆ A_σ(m))` by enumerating all `2^{r·m}`
/// membership patterns. Limited to `r·m ≤ 20`.
pub fn chain_exact_probability(primes: &[u64], m: u32) -> Result<BigRational> {
    validate_primes(primes, true)?;
    let r = primes.len();
    let cells = r * m as usize;
    if cells > CHAIN_EXACT_LIMIT {
        return Err(Error::GuardExceeded(format!(
            "r·m = {cells} exceeds {CHAIN_EXACT_LIMIT}"
        )));
    }
    // integer weights over the common denominator ∏ p_i^m
    let total = (0u64..1 << cells)
        .into_par_iter()
        .map(|bits| {
            let sets: Vec<u128> = (0..m as usize)
                .map(|j| ((bits >> (j * r)) & ((1 << r) - 1)) as u128)
                .collect();
            if !is_chain(&sets) {
                return BigInt::zero();
            }
            let mut w = BigInt::one();
            for j in 0..m as usize {
                for (i, &p) in primes.iter().enumerate() {
                    if bits >> (j * r + i) & 1 == 0 {
                        w *= p - 1;
                    }
                }
            }
            w
        })
        .reduce(BigInt::zero, |a, b| a + b);
    let den = primes
        .iter()
        .fold(BigInt::one(), |acc, &p| acc * BigInt::from(p).pow(m));
    Ok(BigRational::new(total, den))
}

/// Printed closed form, exact value when small, and a simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub primes: Vec<u64>,
    pub m: u32,
    /// Closed form as printed, `"num/den"`.
    pub closed_form: String,
    pub closed_form_value: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub exact: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub exact_value: Option<f64>,
    pub simulated: TrialReport,
    pub closed_form_in_ci: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub exact_in_ci: Option<bool>,
}

fn to_f64(q: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    q.to_f64().unwrap_or(f64::NAN)
}

pub fn chain_probability(primes: &[u64], m: u32, trials: u64, seed: u64) -> Result<ChainReport> {
    let closed = chain_closed_form(primes, m)?;
    let exact = (primes.len() * m as usize <= CHAIN_EXACT_LIMIT)
        .then(|| chain_exact_probability(primes, m))
        .transpose()?;
    let config = TrialConfig::with_primes(Scenario::PrimorialChain, primes.to_vec(), trials, seed).length(m as usize);
    let simulated = run_experiment(&config)?;
    let [lo, hi] = simulated.ci95;
    let inside = |v: f64| lo <= v && v <= hi;
    let closed_value = to_f64(&closed);
    Ok(ChainReport {
        primes: primes.to_vec(),
        m,
        closed_form: closed.to_string(),
        closed_form_value: closed_value,
        exact_value: exact.as_ref().map(to_f64),
        exact_in_ci: exact.as_ref().map(|e| inside(to_f64(e))),
        exact: exact.map(|e| e.to_string()),
        closed_form_in_ci: inside(closed_value),
        simulated,
    })
}

/// Exact distribution of the prime-support set of a uniform `X ∈ Z_n`
/// (with `0` mapping to the full set), keyed by bitmask.
pub fn support_distribution(primes: &[u64]) -> Result<BTreeMap<u128, BigRational>> {
    validate_primes(primes, false)?;
    let n = product(primes)?;
    if n > 10_000_000 {
        return Err(Error::GuardExceeded(format!("enumerating Z_{n}")));
    }
    let mut counts: BTreeMap<u128, u64> = BTreeMap::new();
    for x in 0..n {
        let set = primes
            .iter()
            .enumerate()
            .fold(0u128, |acc, (i, &p)| if x % p == 0 { acc | 1 << i } else { acc });
        *counts.entry(set).or_default() += 1;
    }
    Ok(counts.into_iter().map(|(k, c)| (k, ratio(c, n))).collect())
}

/// `∏_{i∈S} 1/p_i · ∏_{i∉S} (1 - 1/p_i)`.
pub fn product_measure(primes: &[u64], set: u128) -> BigRational {
    primes.iter().enumerate().fold(BigRational::one(), |acc, (i, &p)| {
        acc * if set >> i & 1 == 1 {
            ratio(1, p)
        } else {
            ratio(p - 1, p)
        }
    })
}

pub fn is_squarefree(n: u64) -> bool {
    n >= 1 && crate::group::prime_factors(n).windows(2).all(|w| w[0] != w[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(n: u64) -> Modulus {
        Modulus::new(n).unwrap()
    }

    #[test]
    fn sampling_is_deterministic() {
        assert!(sample_sequence(m(7), 0, 1, 0).is_empty());
        assert_eq!(sample_sequence(m(97), 20, 5, 3), sample_sequence(m(97), 20, 5, 3));
        assert_ne!(sample_sequence(m(97), 20, 5, 3), sample_sequence(m(97), 20, 5, 4));
        let long = sample_sequence(m(97), 30, 5, 3);
        assert_eq!(&long.entries()[..20], sample_sequence(m(97), 20, 5, 3).entries());
    }

    #[test]
    fn sampling_is_uniform() {
        let x = sample_sequence(m(5), 100_000, 42, 0);
        let sigma = (100_000f64 * 0.2 * 0.8).sqrt();
        for v in 0..5 {
            let c = x.multiplicity(v) as f64;
            assert!((c - 20_000.0).abs() < 5.0 * sigma, "residue {v}: {c}");
        }
    }

    #[test]
    fn decomposition_examples() {
        let f = decompose_element(6, &[2, 3, 5]).unwrap();
        assert_eq!(
            (f.prime_index_set.clone(), f.unit_part, f.integer_squarefree),
            (vec![0, 1], 1, true)
        );
        let f = decompose_element(12, &[2, 3, 5]).unwrap();
        assert_eq!(
            (f.prime_index_set.clone(), f.unit_part, f.integer_squarefree),
            (vec![0, 1], 7, false)
        );
        let f = decompose_element(7, &[2, 3, 5]).unwrap();
        assert_eq!((f.prime_index_set.len(), f.unit_part), (0, 7));
        assert!(decompose_element(0, &[2, 3, 5]).is_err());
    }

    #[test]
    fn lemma1_examples() {
        let n = m(15);
        let ps = [3, 5];
        assert!(lemma1_certify(&ZnSequence::new(n, [7, 11]), &ps).unwrap().is_some());
        assert!(lemma1_certify(&ZnSequence::new(n, [3, 5]), &ps).unwrap().is_none());
        let cert = lemma1_certify(&ZnSequence::new(n, [3, 5, 1]), &ps).unwrap().unwrap();
        assert!(cert.check(&ZnSequence::new(n, [3, 5, 1])));
        assert!(lemma1_certify(&ZnSequence::new(n, [0, 1]), &ps).is_err());
        assert!(lemma1_certify(&ZnSequence::new(m(12), [1, 5]), &[2, 2, 3]).is_err());
    }

    #[test]
    fn wilson_contains_estimate() {
        for (s, t) in [(0, 10), (10, 10), (3, 7), (199, 200)] {
            let [lo, hi] = wilson_interval(s, t, Z95);
            let p = s as f64 / t as f64;
            assert!(lo <= p && p <= hi && lo >= 0.0 && hi <= 1.0);
        }
    }

    #[test]
    fn column_probability_examples() {
        assert_eq!(column_increasing_probability(3, 1).unwrap(), BigRational::one());
        assert_eq!(column_increasing_probability(3, 2).unwrap(), ratio(7, 9));
        assert_eq!(column_increasing_probability(5, 2).unwrap(), ratio(21, 25));
        assert_eq!(column_increasing_probability_printed(3, 1).unwrap(), ratio(1, 3));
        assert!(column_increasing_probability(2, 1).is_err());
    }

    #[test]
    fn chain_examples() {
        assert_eq!(chain_closed_form(&[3, 5], 2).unwrap(), ratio(294, 225));
        assert_eq!(chain_exact_probability(&[3, 5], 2).unwrap(), ratio(209, 225));
        assert_eq!(chain_exact_probability(&[3], 1).unwrap(), BigRational::one());
        assert!(chain_closed_form(&[2, 3], 2).is_err());
    }

    #[test]
    fn config_validation() {
        let bad_ab = TrialConfig::new(Scenario::ErdosAb, 9, 10, 1).weights(1, 2);
        assert!(run_experiment(&bad_ab).is_err());
        let no_len = TrialConfig::new(Scenario::DavenportUnweighted, 9, 10, 1);
        assert!(run_experiment(&no_len).is_err());
        let repeated = TrialConfig::with_primes(Scenario::DavenportUnitsSquarefree, vec![3, 3], 10, 1).length(3);
        assert!(run_experiment(&repeated).is_err());
        let zero = TrialConfig::new(Scenario::DavenportUnweighted, 9, 0, 1).length(3);
        assert!(run_experiment(&zero).is_err());
    }

    #[test]
    fn trivial_scenario_is_certain() {
        let r = run_experiment(&TrialConfig::new(Scenario::DavenportUnweighted, 4, 50, 9).length(10)).unwrap();
        assert_eq!(r.estimate, 1.0);
        assert_eq!(r.method_counts["exact-dp"], 50);
    }
}
