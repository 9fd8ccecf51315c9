//! Permutationally invariant two-setting Bell expressions and their classical
//! side.
//!
//! A PI expression on `N` parties is a linear combination of basis
//! polynomials `e_S`, one per multiset `S` of settings from `{1, 2}`. `e_S` is
//! the sum over every distinct monomial obtained by placing the settings of
//! `S` on distinct parties; for `S = {1, 2}` on three parties that is
//! `A₁A₂ + A₂A₁ + A₁C₂ + …`, six terms in all. The empty multiset is the
//! constant term.
//!
//! Under a deterministic strategy every party fixes `(A₁, A₂) ∈ {±1}²`, so a
//! strategy is characterized, up to relabeling parties, by how many parties
//! chose each of the four sign pairs. [`StrategyClass`] holds those counts and
//! [`classical_value`] evaluates an expression on a class exactly, reading
//! `e_S` off as the `u^p v^q` coefficient of `∏_t (1 + u x_t + v y_t)^{n_t}`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{float::FloatCore, ToPrimitive};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{capacity, domain, Error, Result};
use crate::math::binomial_checked;

/// Largest party count for class enumeration.
pub const LOCAL_BOUND_MAX_PARTIES: usize = 2000;

/// Largest party count for exhaustive strategy enumeration.
pub const BRUTE_FORCE_MAX_PARTIES: usize = 10;

/// A multiset of measurement settings, stored as multiplicities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SettingMultiset {
    ones: usize,
    twos: usize,
}

impl SettingMultiset {
    /// The constant term.
    pub const EMPTY: SettingMultiset = SettingMultiset { ones: 0, twos: 0 };

    pub const fn new(ones: usize, twos: usize) -> Self {
        SettingMultiset { ones, twos }
    }

    /// From a list of settings, each 1 or 2, in any order.
    pub fn from_settings(settings: &[u8]) -> Result<Self> {
        let mut s = Self::EMPTY;
        for &x in settings {
            match x {
                1 => s.ones += 1,
                2 => s.twos += 1,
                other => return domain(format!("setting {other} is not 1 or 2")),
            }
        }
        Ok(s)
    }

    pub fn ones(&self) -> usize {
        self.ones
    }

    pub fn twos(&self) -> usize {
        self.twos
    }

    /// Number of parties the monomials act on.
    pub fn order(&self) -> usize {
        self.ones + self.twos
    }

    pub fn is_constant(&self) -> bool {
        self.order() == 0
    }

    /// Sorted settings, e.g. `[1, 1, 2]`.
    pub fn settings(&self) -> Vec<u8> {
        let mut v = vec![1u8; self.ones];
        v.extend(std::iter::repeat_n(2u8, self.twos));
        v
    }

    /// Every multiset of order `1..=max_order`, in canonical order.
    pub fn all_up_to(max_order: usize) -> Vec<SettingMultiset> {
        (1..=max_order)
            .flat_map(|k| (0..=k).rev().map(move |p| SettingMultiset::new(p, k - p)))
            .collect()
    }
}

impl Ord for SettingMultiset {
    /// By order, then with more 1-settings first: `{} < {1} < {2} < {1,1} < {1,2} < …`.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.order()
            .cmp(&other.order())
            .then_with(|| other.ones.cmp(&self.ones))
    }
}

impl PartialOrd for SettingMultiset {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for SettingMultiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.settings().iter().map(u8::to_string).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// Number of monomials in `e_S` on `n` parties: `C(n, |S|) · C(|S|, m₁)`.
pub fn monomial_count(n: usize, s: SettingMultiset) -> Result<u128> {
    if s.order() > n {
        return domain(format!("multiset {s} does not fit on {n} parties"));
    }
    let k = s.order() as u64;
    let a = binomial_checked(n as u64, k)?;
    let b = binomial_checked(k, s.ones as u64)?;
    a.checked_mul(b)
        .ok_or_else(|| Error::Capacity(format!("monomial count of {s} on {n} parties overflows")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundDirection {
    /// `⟨I⟩ ≤ L` for local models.
    Max,
    /// `⟨I⟩ ≥ L` for local models.
    Min,
}

/// A PI Bell expression with optional local-bound metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct PIBellExpression {
    n_parties: usize,
    coefficients: BTreeMap<SettingMultiset, f64>,
    direction: BoundDirection,
    local_bound: Option<f64>,
}

impl PIBellExpression {
    /// The zero expression on `n_parties`, bounded from above.
    pub fn new(n_parties: usize) -> Self {
        PIBellExpression {
            n_parties,
            coefficients: BTreeMap::new(),
            direction: BoundDirection::Max,
            local_bound: None,
        }
    }

    /// Builds from `(settings, coefficient)` pairs.
    pub fn from_terms(n_parties: usize, terms: &[(&[u8], f64)]) -> Result<Self> {
        let mut e = Self::new(n_parties);
        for (settings, c) in terms {
            e.add(SettingMultiset::from_settings(settings)?, *c)?;
        }
        Ok(e)
    }

    pub fn with_bound(mut self, direction: BoundDirection, value: Option<f64>) -> Self {
        self.direction = direction;
        self.local_bound = value;
        self
    }

    pub fn n_parties(&self) -> usize {
        self.n_parties
    }

    pub fn direction(&self) -> BoundDirection {
        self.direction
    }

    /// The stated local bound, if any.
    pub fn stated_bound(&self) -> Option<f64> {
        self.local_bound
    }

    /// Sets a coefficient; zero removes the term.
    pub fn set(&mut self, s: SettingMultiset, value: f64) -> Result<()> {
        if s.order() > self.n_parties {
            return domain(format!(
                "multiset {s} does not fit on {} parties",
                self.n_parties
            ));
        }
        if !value.is_finite() {
            return domain(format!("coefficient of {s} is not finite"));
        }
        if value == 0.0 {
            self.coefficients.remove(&s);
        } else {
            self.coefficients.insert(s, value);
        }
        Ok(())
    }

    /// Adds to a coefficient.
    pub fn add(&mut self, s: SettingMultiset, value: f64) -> Result<()> {
        let cur = self.coefficient(s);
        self.set(s, cur + value)
    }

    pub fn coefficient(&self, s: SettingMultiset) -> f64 {
        self.coefficients.get(&s).copied().unwrap_or(0.0)
    }

    pub fn constant(&self) -> f64 {
        self.coefficient(SettingMultiset::EMPTY)
    }

    /// Nonzero terms in canonical multiset order.
    pub fn terms(&self) -> impl Iterator<Item = (SettingMultiset, f64)> + '_ {
        self.coefficients.iter().map(|(s, c)| (*s, *c))
    }

    pub fn max_order(&self) -> usize {
        self.coefficients
            .keys()
            .map(|s| s.order())
            .max()
            .unwrap_or(0)
    }

    /// Multiplies every coefficient and the stated bound by `factor`; a
    /// negative factor flips the bound direction.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor != 0.0) {
            return domain("scale factor must be finite and nonzero");
        }
        let mut out = Self::new(self.n_parties);
        for (s, c) in self.terms() {
            out.set(s, c * factor)?;
        }
        out.direction = match (self.direction, factor > 0.0) {
            (d, true) => d,
            (BoundDirection::Max, false) => BoundDirection::Min,
            (BoundDirection::Min, false) => BoundDirection::Max,
        };
        out.local_bound = self.local_bound.map(|b| b * factor);
        Ok(out)
    }

    /// The expression with the constant term replaced.
    pub fn with_constant(&self, constant: f64) -> Result<Self> {
        let mut out = self.clone();
        out.set(SettingMultiset::EMPTY, constant)?;
        Ok(out)
    }

    /// Recomputes the local bound and checks it against the stated one.
    pub fn verify_local_bound(&self) -> Result<BigRational> {
        let exact = local_bound(self)?;
        if let Some(stated) = self.local_bound {
            let got = exact.to_f64().unwrap_or(f64::NAN);
            if !((got - stated).abs() <= 1e-9 * stated.abs().max(1.0)) {
                return domain(format!(
                    "stated local bound {stated} but enumeration gives {got}"
                ));
            }
        }
        Ok(exact)
    }

    pub fn to_json(&self) -> InequalityJson {
        InequalityJson {
            parties: self.n_parties,
            coefficients: self
                .terms()
                .map(|(s, value)| CoefficientJson {
                    multiset: s.settings(),
                    value,
                })
                .collect(),
            bound: BoundJson {
                direction: self.direction,
                value: self.local_bound,
            },
            meta: None,
        }
    }

    pub fn from_json(doc: &InequalityJson) -> Result<Self> {
        let mut e = Self::new(doc.parties);
        for c in &doc.coefficients {
            e.add(SettingMultiset::from_settings(&c.multiset)?, c.value)?;
        }
        Ok(e.with_bound(doc.bound.direction, doc.bound.value))
    }
}

/// File form of an inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityJson {
    pub parties: usize,
    pub coefficients: Vec<CoefficientJson>,
    pub bound: BoundJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientJson {
    pub multiset: Vec<u8>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundJson {
    pub direction: BoundDirection,
    #[serde(default)]
    pub value: Option<f64>,
}

/// CHSH: `A₁B₁ + A₁B₂ + A₂B₁ − A₂B₂ ≤ 2`.
pub fn chsh_expression() -> PIBellExpression {
    PIBellExpression::from_terms(2, &[(&[1, 1], 1.0), (&[1, 2], 1.0), (&[2, 2], -1.0)])
        .expect("valid terms")
        .with_bound(BoundDirection::Max, Some(2.0))
}

/// The three-party polygamous inequality with local bound 6.
pub fn four_party_expression() -> PIBellExpression {
    PIBellExpression::from_terms(
        3,
        &[
            (&[1], 2.0),
            (&[1, 1], -1.0),
            // −sym[A₁B₂] − sym[A₂B₁] is a single e_{1,2}
            (&[1, 2], -1.0),
            (&[2, 2], 1.0),
            (&[1, 1, 1], 2.0),
            (&[1, 1, 2], 1.0),
            (&[1, 2, 2], -2.0),
            (&[2, 2, 2], -1.0),
        ],
    )
    .expect("valid terms")
    .with_bound(BoundDirection::Max, Some(6.0))
}

/// The `n`-party two-body inequality `I_n ≥ 0` with `L = 3((n−3)² + n − 1)`
/// and one-body weight `α = −3(n − 3)`.
pub fn two_body_expression(n: usize) -> Result<PIBellExpression> {
    if n < 4 {
        return domain(format!("two-body inequality needs n ≥ 4, got {n}"));
    }
    let (constant, alpha) = two_body_parameters(n);
    Ok(PIBellExpression::from_terms(
        n,
        &[
            (&[], constant),
            (&[1], alpha),
            (&[2], alpha),
            (&[1, 1], 1.0),
            // 4·Σ_{i<j} A₁⁽ⁱ⁾A₂⁽ʲ⁾ symmetrized is 2·e_{1,2}
            (&[1, 2], 2.0),
            (&[2, 2], 1.0),
        ],
    )?
    .with_bound(BoundDirection::Min, Some(0.0)))
}

/// `(L, α)` of the two-body inequality.
pub fn two_body_parameters(n: usize) -> (f64, f64) {
    let n = n as f64;
    (3.0 * ((n - 3.0).powi(2) + n - 1.0), -3.0 * (n - 3.0))
}

/// The five-party inequality without five-body terms, local bound 6.
pub fn five_party_expression() -> PIBellExpression {
    PIBellExpression::from_terms(
        5,
        &[
            (&[1, 1], -1.0),
            (&[2, 2], -1.0),
            (&[1, 1, 1, 1], 1.0),
            (&[1, 1, 1, 2], 1.0),
            (&[1, 2, 2, 2], -1.0),
            (&[2, 2, 2, 2], 1.0),
        ],
    )
    .expect("valid terms")
    .with_bound(BoundDirection::Max, Some(6.0))
}

/// Sign pairs `(A₁, A₂)` in the order `++, +−, −+, −−`.
pub const SIGN_PAIRS: [(i8, i8); 4] = [(1, 1), (1, -1), (-1, 1), (-1, -1)];

/// How many parties use each deterministic sign pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StrategyClass {
    counts: [usize; 4],
}

impl StrategyClass {
    pub fn new(counts: [usize; 4]) -> Self {
        StrategyClass { counts }
    }

    pub fn counts(&self) -> [usize; 4] {
        self.counts
    }

    pub fn n_parties(&self) -> usize {
        self.counts.iter().sum()
    }

    /// One concrete strategy in the class, parties sorted by sign pair.
    pub fn representative(&self) -> Vec<(i8, i8)> {
        self.counts
            .iter()
            .zip(SIGN_PAIRS)
            .flat_map(|(&c, pair)| std::iter::repeat_n(pair, c))
            .collect()
    }
}

impl fmt::Display for StrategyClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.counts;
        write!(f, "({a},{b},{c},{d})")
    }
}

/// All `C(n + 3, 3)` classes on `n` parties, lexicographic in the counts.
pub fn enumerate_strategy_classes(n: usize) -> Vec<StrategyClass> {
    let mut out = Vec::new();
    for a in 0..=n {
        for b in 0..=n - a {
            for c in 0..=n - a - b {
                out.push(StrategyClass::new([a, b, c, n - a - b - c]));
            }
        }
    }
    out
}

/// Coefficients of an expression in a form suited to exact accumulation.
enum ExactCoefficients {
    /// All coefficients are integers of magnitude below 2^53.
    Integer(Vec<i128>),
    /// Dyadic numerators over the common denominator `2^shift`.
    Dyadic { numerators: Vec<BigInt>, shift: u32 },
}

/// Evaluates `e_S` on strategy classes of a fixed expression.
struct ClassEvaluator {
    n: usize,
    max_ones: usize,
    max_twos: usize,
    /// `(p, q)` of each term, in term order
    monomials: Vec<(usize, usize)>,
    coefficients: ExactCoefficients,
    /// `binom[n][k]` for `k ≤ max_ones + max_twos`
    binom: Vec<Vec<i128>>,
}

impl ClassEvaluator {
    fn new(expr: &PIBellExpression) -> Result<Self> {
        let n = expr.n_parties;
        let terms: Vec<(SettingMultiset, f64)> = expr.terms().collect();
        let max_ones = terms.iter().map(|(s, _)| s.ones).max().unwrap_or(0);
        let max_twos = terms.iter().map(|(s, _)| s.twos).max().unwrap_or(0);
        let kmax = (max_ones + max_twos).min(n);
        // every intermediate sum is bounded by a monomial count; make sure
        // those fit with plenty of headroom
        for p in 0..=max_ones {
            for q in 0..=max_twos {
                if p + q > n {
                    continue;
                }
                let c = monomial_count(n, SettingMultiset::new(p, q))?;
                if c >= 1u128 << 100 {
                    return capacity(format!("symmetric sums on {n} parties overflow 100 bits"));
                }
            }
        }
        let binom = (0..=n)
            .map(|m| {
                (0..=kmax)
                    .map(|k| binomial_checked(m as u64, k as u64).map(|v| v as i128))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let values: Vec<f64> = terms.iter().map(|(_, c)| *c).collect();
        Ok(ClassEvaluator {
            n,
            max_ones,
            max_twos,
            monomials: terms.iter().map(|(s, _)| (s.ones, s.twos)).collect(),
            coefficients: exact_coefficients(&values),
            binom,
        })
    }

    fn width(&self) -> usize {
        self.max_twos + 1
    }

    fn zero_poly(&self) -> Vec<i128> {
        vec![0; (self.max_ones + 1) * (self.max_twos + 1)]
    }

    /// Truncated `(1 + u x + v y)^count`.
    fn factor(&self, count: usize, (x, y): (i8, i8)) -> Vec<i128> {
        let w = self.width();
        let mut f = self.zero_poly();
        for i in 0..=self.max_ones {
            for j in 0..=self.max_twos {
                if i + j > count {
                    continue;
                }
                let sign = if (x < 0 && i % 2 == 1) ^ (y < 0 && j % 2 == 1) {
                    -1
                } else {
                    1
                };
                let c = self.binom[count][i + j] * small_binomial(i + j, i);
                f[i * w + j] = sign * c;
            }
        }
        f
    }

    fn class_term_values(&self, class: &StrategyClass) -> Vec<i128> {
        let [a, b, c, d] = class.counts;
        let mut left = self.zero_poly();
        let mut right = self.zero_poly();
        self.mul_into(
            &self.factor(a, SIGN_PAIRS[0]),
            &self.factor(b, SIGN_PAIRS[1]),
            &mut left,
        );
        self.mul_into(
            &self.factor(c, SIGN_PAIRS[2]),
            &self.factor(d, SIGN_PAIRS[3]),
            &mut right,
        );
        let mut sums = vec![0; self.monomials.len()];
        self.term_values_into(&left, &right, &mut sums);
        sums
    }

    /// `(1 + u x + v y)^count` for every `count ≤ n`.
    fn factor_table(&self, sign: (i8, i8)) -> Vec<Vec<i128>> {
        (0..=self.n).map(|count| self.factor(count, sign)).collect()
    }

    fn mul_into(&self, a: &[i128], b: &[i128], out: &mut [i128]) {
        let w = self.width();
        out.iter_mut().for_each(|v| *v = 0);
        for i in 0..=self.max_ones {
            for j in 0..=self.max_twos {
                let x = a[i * w + j];
                if x == 0 {
                    continue;
                }
                for k in 0..=self.max_ones - i {
                    for l in 0..=self.max_twos - j {
                        out[(i + k) * w + j + l] += x * b[k * w + l];
                    }
                }
            }
        }
    }

    fn term_values_into(&self, left: &[i128], right: &[i128], out: &mut [i128]) {
        let w = self.width();
        for (slot, &(p, q)) in out.iter_mut().zip(&self.monomials) {
            let mut acc = 0i128;
            for i in 0..=p {
                for j in 0..=q {
                    acc += left[i * w + j] * right[(p - i) * w + q - j];
                }
            }
            *slot = acc;
        }
    }

    /// Best value over all classes with `c + d = rest`; `None` if the slice
    /// is empty.
    fn best_with_rest(
        &self,
        rest: usize,
        factors: &[Vec<Vec<i128>>; 4],
        direction: BoundDirection,
    ) -> Result<Option<ExactValue>> {
        let n = self.n;
        let size = self.zero_poly().len();
        let mut rights = vec![0i128; (rest + 1) * size];
        for c in 0..=rest {
            self.mul_into(
                &factors[2][c],
                &factors[3][rest - c],
                &mut rights[c * size..(c + 1) * size],
            );
        }
        let mut left = self.zero_poly();
        let mut sums = vec![0i128; self.monomials.len()];
        let mut best: Option<ExactValue> = None;
        for a in 0..=n - rest {
            self.mul_into(&factors[0][a], &factors[1][n - rest - a], &mut left);
            for right in rights.chunks_exact(size) {
                self.term_values_into(&left, right, &mut sums);
                let v = combine(&self.coefficients, &sums)?;
                best = Some(match best {
                    None => v,
                    Some(cur) => pick(cur, v, direction),
                });
            }
        }
        Ok(best)
    }
}

fn small_binomial(n: usize, k: usize) -> i128 {
    let k = k.min(n - k);
    (1..=k as i128).fold(1i128, |acc, i| acc * (n as i128 - k as i128 + i) / i)
}

/// An exact value, kept in the cheapest representation available.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum ExactValue {
    Integer(i128),
    /// numerator over `2^shift`; all values from one expression share the shift
    Dyadic(BigInt, u32),
}

impl ExactValue {
    fn into_rational(self) -> BigRational {
        match self {
            ExactValue::Integer(v) => BigRational::from_integer(BigInt::from(v)),
            ExactValue::Dyadic(num, shift) => {
                BigRational::new(num, BigInt::from(1) << shift as usize)
            }
        }
    }
}

fn pick(a: ExactValue, b: ExactValue, direction: BoundDirection) -> ExactValue {
    match direction {
        BoundDirection::Max => a.max(b),
        BoundDirection::Min => a.min(b),
    }
}

fn exact_coefficients(values: &[f64]) -> ExactCoefficients {
    let integral = values.iter().all(|c| c.fract() == 0.0 && c.abs() < 9.0e15);
    if integral {
        return ExactCoefficients::Integer(values.iter().map(|c| *c as i128).collect());
    }
    let decoded: Vec<(u64, i16, i8)> = values.iter().map(|c| c.integer_decode()).collect();
    let min_exp = decoded.iter().map(|d| d.1).min().unwrap_or(0).min(0);
    let shift = (-(min_exp as i32)) as u32;
    let numerators = decoded
        .iter()
        .map(|&(mant, exp, sign)| {
            let v = BigInt::from(mant) << (exp as i32 - min_exp as i32) as usize;
            if sign < 0 {
                -v
            } else {
                v
            }
        })
        .collect();
    ExactCoefficients::Dyadic { numerators, shift }
}

fn combine(coefficients: &ExactCoefficients, sums: &[i128]) -> Result<ExactValue> {
    match coefficients {
        ExactCoefficients::Integer(cs) => {
            let mut acc: i128 = 0;
            for (c, s) in cs.iter().zip(sums) {
                acc = c
                    .checked_mul(*s)
                    .and_then(|t| acc.checked_add(t))
                    .ok_or_else(|| Error::Capacity("classical value overflows 128 bits".into()))?;
            }
            Ok(ExactValue::Integer(acc))
        }
        ExactCoefficients::Dyadic { numerators, shift } => {
            let acc: BigInt = numerators
                .iter()
                .zip(sums)
                .map(|(c, s)| c * BigInt::from(*s))
                .sum();
            Ok(ExactValue::Dyadic(acc, *shift))
        }
    }
}

/// Exact value of `expr` under any deterministic strategy in `class`.
pub fn classical_value(expr: &PIBellExpression, class: &StrategyClass) -> Result<BigRational> {
    if class.n_parties() != expr.n_parties {
        return domain(format!(
            "class {class} covers {} parties, expression has {}",
            class.n_parties(),
            expr.n_parties
        ));
    }
    let eval = ClassEvaluator::new(expr)?;
    let sums = eval.class_term_values(class);
    Ok(combine(&eval.coefficients, &sums)?.into_rational())
}

/// Exact `e_S` values for every multiset in `support` on one class.
pub fn symmetric_sums(
    n: usize,
    support: &[SettingMultiset],
    class: &StrategyClass,
) -> Result<Vec<i128>> {
    if class.n_parties() != n {
        return domain(format!("class {class} does not cover {n} parties"));
    }
    let mut probe = PIBellExpression::new(n);
    for s in support {
        probe.set(*s, 1.0)?;
    }
    let eval = ClassEvaluator::new(&probe)?;
    let sums = eval.class_term_values(class);
    // `probe.terms()` is sorted and deduplicated; map back to the caller's order
    let order: Vec<SettingMultiset> = probe.terms().map(|(s, _)| s).collect();
    Ok(support
        .iter()
        .map(|s| sums[order.binary_search(s).expect("term present")])
        .collect())
}

/// Exact local bound: the extremum of [`classical_value`] over all classes in
/// the expression's bound direction.
pub fn local_bound(expr: &PIBellExpression) -> Result<BigRational> {
    let n = expr.n_parties;
    if n > LOCAL_BOUND_MAX_PARTIES {
        return capacity(format!(
            "local bound on {n} parties exceeds the {LOCAL_BOUND_MAX_PARTIES}-party guard"
        ));
    }
    let eval = ClassEvaluator::new(expr)?;
    let direction = expr.direction;
    let factors = SIGN_PAIRS.map(|sign| eval.factor_table(sign));
    let partial: Vec<Option<ExactValue>> = (0..=n)
        .into_par_iter()
        .map(|rest| eval.best_with_rest(rest, &factors, direction))
        .collect::<Result<_>>()?;
    partial
        .into_iter()
        .flatten()
        .reduce(|x, y| pick(x, y, direction))
        .map(ExactValue::into_rational)
        .ok_or_else(|| Error::Internal("no strategy classes".into()))
}

/// Value of `expr` on an explicit per-party strategy, party by party.
pub fn strategy_value(expr: &PIBellExpression, strategy: &[(i8, i8)]) -> Result<BigRational> {
    if strategy.len() != expr.n_parties {
        return domain("strategy length differs from the party count");
    }
    let terms: Vec<(SettingMultiset, f64)> = expr.terms().collect();
    let values: Vec<f64> = terms.iter().map(|t| t.1).collect();
    let coefficients = exact_coefficients(&values);
    let probe = PartyProduct::new(&terms);
    Ok(combine(&coefficients, &probe.sums(strategy))?.into_rational())
}

/// `∏_i (1 + u a_i + v b_i)` expanded party by party.
struct PartyProduct {
    max_ones: usize,
    max_twos: usize,
    monomials: Vec<(usize, usize)>,
}

impl PartyProduct {
    fn new(terms: &[(SettingMultiset, f64)]) -> Self {
        PartyProduct {
            max_ones: terms.iter().map(|(s, _)| s.ones).max().unwrap_or(0),
            max_twos: terms.iter().map(|(s, _)| s.twos).max().unwrap_or(0),
            monomials: terms.iter().map(|(s, _)| (s.ones, s.twos)).collect(),
        }
    }

    fn sums(&self, strategy: &[(i8, i8)]) -> Vec<i128> {
        let w = self.max_twos + 1;
        let mut poly = vec![0i128; (self.max_ones + 1) * w];
        poly[0] = 1;
        for &(a, b) in strategy {
            for i in (0..=self.max_ones).rev() {
                for j in (0..=self.max_twos).rev() {
                    let mut v = poly[i * w + j];
                    if i > 0 {
                        v += a as i128 * poly[(i - 1) * w + j];
                    }
                    if j > 0 {
                        v += b as i128 * poly[i * w + j - 1];
                    }
                    poly[i * w + j] = v;
                }
            }
        }
        self.monomials
            .iter()
            .map(|&(p, q)| poly[p * w + q])
            .collect()
    }
}

/// Local bound by exhaustive enumeration of all `4^n` deterministic strategies.
pub fn brute_force_bound(expr: &PIBellExpression) -> Result<BigRational> {
    let n = expr.n_parties;
    if n > BRUTE_FORCE_MAX_PARTIES {
        return capacity(format!(
            "brute force on {n} parties exceeds the {BRUTE_FORCE_MAX_PARTIES}-party guard"
        ));
    }
    let terms: Vec<(SettingMultiset, f64)> = expr.terms().collect();
    let values: Vec<f64> = terms.iter().map(|t| t.1).collect();
    let coefficients = exact_coefficients(&values);
    let probe = PartyProduct::new(&terms);
    let direction = expr.direction;
    let total = 1usize << (2 * n);
    let chunk = 1usize << (2 * n).min(8);
    let best = (0..total.div_ceil(chunk))
        .into_par_iter()
        .map(|block| -> Result<Option<ExactValue>> {
            let mut best: Option<ExactValue> = None;
            let mut strategy = vec![(1i8, 1i8); n];
            for code in block * chunk..((block + 1) * chunk).min(total) {
                for (i, slot) in strategy.iter_mut().enumerate() {
                    *slot = SIGN_PAIRS[(code >> (2 * i)) & 3];
                }
                let v = combine(&coefficients, &probe.sums(&strategy))?;
                best = Some(match best {
                    None => v,
                    Some(cur) => pick(cur, v, direction),
                });
            }
            Ok(best)
        })
        .collect::<Result<Vec<_>>>()?;
    best.into_iter()
        .flatten()
        .reduce(|x, y| pick(x, y, direction))
        .map(ExactValue::into_rational)
        .ok_or_else(|| Error::Internal("no strategies".into()))
}

/// Converts an exact value for display.
pub fn exact_to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
