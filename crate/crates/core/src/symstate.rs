//! Permutation-symmetric qubit states in the Dicke basis.
//!
//! An `N`-qubit symmetric pure state is stored as its `N + 1` amplitudes over
//! `|D_N^0⟩, …, |D_N^N⟩`, where `|D_N^e⟩` is the uniform superposition of all
//! computational basis strings of Hamming weight `e`. Reduced states of such a
//! state stay inside the symmetric subspace, so they are kept as
//! `(m + 1) × (m + 1)` matrices in the Dicke basis as well.
//!
//! Qubit 0 is the most significant bit of a dense basis index, so `|01⟩` is
//! index 1.

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};

use crate::error::{capacity, domain, Result};
use crate::math::{binomial_checked, binomial_f64, norm_sqr, CMatrix, C64, ZERO};

/// Tolerance on the unit-norm invariant.
pub const NORM_TOL: f64 = 1e-12;

/// Largest party count accepted by [`SymmetricState::to_dense`].
pub const DENSE_STATE_MAX_PARTIES: usize = 14;

/// Largest party count accepted by [`reduce_dense`].
pub const DENSE_TRACE_MAX_PARTIES: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricState {
    n_parties: usize,
    amplitudes: Vec<C64>,
}

impl SymmetricState {
    /// Wraps Dicke-basis amplitudes `d_0..d_N`. The norm must already be one.
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() < 2 {
            return domain("a symmetric state needs at least one party (two amplitudes)");
        }
        if amplitudes
            .iter()
            .any(|a| !a.re.is_finite() || !a.im.is_finite())
        {
            return domain("amplitudes must be finite");
        }
        let norm = norm_sqr(&amplitudes);
        if (norm - 1.0).abs() > NORM_TOL {
            return domain(format!("amplitudes have squared norm {norm}, expected 1"));
        }
        Ok(SymmetricState {
            n_parties: amplitudes.len() - 1,
            amplitudes,
        })
    }

    /// Normalizes the given amplitudes first.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let norm = norm_sqr(&amplitudes).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return domain("cannot normalize a zero or non-finite amplitude vector");
        }
        Self::new(amplitudes.into_iter().map(|a| a / norm).collect())
    }

    /// Real amplitudes, normalized.
    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::normalized(amplitudes.iter().map(|&a| C64::new(a, 0.0)).collect())
    }

    pub fn n_parties(&self) -> usize {
        self.n_parties
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, excitations: usize) -> C64 {
        self.amplitudes[excitations]
    }

    /// `|ψ⟩⟨ψ|` in the Dicke basis.
    pub fn density(&self) -> ReducedSymmetricState {
        ReducedSymmetricState {
            n_parties: self.n_parties,
            dicke_matrix: CMatrix::outer(&self.amplitudes, &self.amplitudes),
        }
    }

    /// Expands into the `2^N` computational basis.
    pub fn to_dense(&self) -> Result<DenseState> {
        let n = self.n_parties;
        if n > DENSE_STATE_MAX_PARTIES {
            return capacity(format!(
                "dense expansion of {n} parties exceeds the {DENSE_STATE_MAX_PARTIES}-party guard"
            ));
        }
        let weights: Vec<C64> = (0..=n)
            .map(|e| self.amplitudes[e] / binomial_f64(n as u64, e as u64).sqrt())
            .collect();
        let amplitudes = (0..1usize << n)
            .map(|i| weights[i.count_ones() as usize])
            .collect();
        Ok(DenseState {
            n_parties: n,
            amplitudes,
        })
    }
}

/// `|D_n^e⟩`.
pub fn make_dicke(n: usize, e: usize) -> Result<SymmetricState> {
    if n == 0 {
        return domain("Dicke state needs at least one party");
    }
    if e > n {
        return domain(format!("excitation count {e} exceeds party count {n}"));
    }
    let mut amplitudes = vec![ZERO; n + 1];
    amplitudes[e] = C64::new(1.0, 0.0);
    SymmetricState::new(amplitudes)
}

/// Normalized linear combination of symmetric states on the same party count.
pub fn superpose(terms: &[(C64, &SymmetricState)]) -> Result<SymmetricState> {
    let Some((_, first)) = terms.first() else {
        return domain("superposition of zero terms");
    };
    let n = first.n_parties;
    let mut amplitudes = vec![ZERO; n + 1];
    for (c, s) in terms {
        if s.n_parties != n {
            return domain(format!(
                "cannot superpose states on {} and {} parties",
                n, s.n_parties
            ));
        }
        for (a, b) in amplitudes.iter_mut().zip(&s.amplitudes) {
            *a += c * b;
        }
    }
    if norm_sqr(&amplitudes) == 0.0 {
        return domain("superposition has zero norm");
    }
    SymmetricState::normalized(amplitudes)
}

/// A pure state on `n` qubits in the computational basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    n_parties: usize,
    amplitudes: Vec<C64>,
}

impl DenseState {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return domain(format!(
                "dense state length {len} is not a power of two ≥ 2"
            ));
        }
        let norm = norm_sqr(&amplitudes);
        if (norm - 1.0).abs() > NORM_TOL {
            return domain(format!("dense state has squared norm {norm}, expected 1"));
        }
        Ok(DenseState {
            n_parties: len.trailing_zeros() as usize,
            amplitudes,
        })
    }

    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let norm = norm_sqr(&amplitudes).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return domain("cannot normalize a zero or non-finite amplitude vector");
        }
        Self::new(amplitudes.into_iter().map(|a| a / norm).collect())
    }

    /// Basis state from a bit string such as `"011"`.
    pub fn basis(bits: &str) -> Result<Self> {
        let n = bits.len();
        let Ok(index) = usize::from_str_radix(bits, 2) else {
            return domain(format!("'{bits}' is not a bit string"));
        };
        let mut amplitudes = vec![ZERO; 1 << n];
        amplitudes[index] = C64::new(1.0, 0.0);
        Self::new(amplitudes)
    }

    pub fn n_parties(&self) -> usize {
        self.n_parties
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.amplitudes)
    }
}

/// A state on `m` qubits supported on the symmetric subspace, stored in the
/// Dicke basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSymmetricState {
    n_parties: usize,
    dicke_matrix: CMatrix,
}

impl ReducedSymmetricState {
    pub fn n_parties(&self) -> usize {
        self.n_parties
    }

    pub fn dicke_matrix(&self) -> &CMatrix {
        &self.dicke_matrix
    }

    pub fn entry(&self, e: usize, f: usize) -> C64 {
        self.dicke_matrix[(e, f)]
    }

    /// Embeds into the `2^m × 2^m` computational basis.
    pub fn to_dense_matrix(&self) -> Result<CMatrix> {
        let m = self.n_parties;
        if m > DENSE_TRACE_MAX_PARTIES {
            return capacity(format!("dense embedding of {m} parties exceeds the guard"));
        }
        let dim = 1usize << m;
        let norms: Vec<f64> = (0..=m)
            .map(|e| binomial_f64(m as u64, e as u64).sqrt())
            .collect();
        let mut out = CMatrix::zeros(dim);
        for i in 0..dim {
            let e = i.count_ones() as usize;
            for j in 0..dim {
                let f = j.count_ones() as usize;
                let v = self.dicke_matrix[(e, f)];
                if v != ZERO {
                    out[(i, j)] = v / (norms[e] * norms[f]);
                }
            }
        }
        Ok(out)
    }

    /// The trace, Hermiticity defect and smallest eigenvalue.
    pub fn diagnostics(&self) -> (C64, f64, f64) {
        let h = crate::qoperators::HermitianMatrix::symmetrized(self.dicke_matrix.clone());
        (
            self.dicke_matrix.trace(),
            self.dicke_matrix.hermiticity_defect(),
            crate::qoperators::eigenvalues(&h)
                .first()
                .copied()
                .unwrap_or(0.0),
        )
    }
}

/// Coefficients `(c0, c1)` with `|D_n^e⟩ = c0 |D_{n-1}^e⟩|0⟩ + c1 |D_{n-1}^{e-1}⟩|1⟩`.
pub fn dicke_split(n: usize, e: usize) -> Result<(f64, f64)> {
    let (c0, c1) = dicke_split_squared(n, e)?;
    Ok((ratio_sqrt(c0), ratio_sqrt(c1)))
}

/// The squares of [`dicke_split`], exactly: `((n - e)/n, e/n)`.
pub fn dicke_split_squared(n: usize, e: usize) -> Result<(Ratio<u64>, Ratio<u64>)> {
    if n < 2 {
        return domain(format!("dicke_split needs n ≥ 2, got {n}"));
    }
    if e > n {
        return domain(format!("excitation count {e} exceeds party count {n}"));
    }
    let (n, e) = (n as u64, e as u64);
    Ok((Ratio::new(n - e, n), Ratio::new(e, n)))
}

fn ratio_sqrt(r: Ratio<u64>) -> f64 {
    (*r.numer() as f64 / *r.denom() as f64).sqrt()
}

/// Traces one party out of a Dicke-basis operator on `n` qubits. Linear in
/// the input, so it applies to non-Hermitian operators too.
fn trace_one_party(rho: &CMatrix, n: usize) -> CMatrix {
    debug_assert_eq!(rho.dim(), n + 1);
    let mut out = CMatrix::zeros(n);
    let nf = n as f64;
    for e in 0..=n {
        for f in 0..=n {
            let v = rho[(e, f)];
            if v == ZERO {
                continue;
            }
            if e < n && f < n {
                let w = (((n - e) * (n - f)) as f64).sqrt() / nf;
                out[(e, f)] += v * w;
            }
            if e > 0 && f > 0 {
                let w = ((e * f) as f64).sqrt() / nf;
                out[(e - 1, f - 1)] += v * w;
            }
        }
    }
    out
}

/// Partial trace of a Dicke-basis operator on `n` qubits down to `m` qubits.
pub(crate) fn reduce_dicke_matrix(rho: &CMatrix, n: usize, m: usize) -> CMatrix {
    let mut cur = rho.clone();
    for k in (m + 1..=n).rev() {
        cur = trace_one_party(&cur, k);
    }
    cur
}

/// Reduced state of `|s⟩⟨s|` on any `m` of its parties.
pub fn reduce_symmetric(s: &SymmetricState, m: usize) -> Result<ReducedSymmetricState> {
    let n = s.n_parties;
    if m == 0 || m > n {
        return domain(format!("cannot keep {m} of {n} parties"));
    }
    let rho = CMatrix::outer(&s.amplitudes, &s.amplitudes);
    Ok(ReducedSymmetricState {
        n_parties: m,
        dicke_matrix: reduce_dicke_matrix(&rho, n, m),
    })
}

/// Exact Dicke-basis diagonal of the `m`-party marginal of `|D_n^e⟩`.
///
/// The marginal of a single Dicke state is diagonal, so this is the whole
/// matrix. Computed with the same one-party recursion as [`reduce_symmetric`],
/// in rational arithmetic.
pub fn dicke_marginal_exact(n: usize, e: usize, m: usize) -> Result<Vec<BigRational>> {
    if e > n {
        return domain(format!("excitation count {e} exceeds party count {n}"));
    }
    if m == 0 || m > n {
        return domain(format!("cannot keep {m} of {n} parties"));
    }
    // guard against absurd sizes; the denominators are bounded by C(n, e)
    binomial_checked(n as u64, e as u64)?;
    let zero = BigRational::from_integer(BigInt::from(0));
    let mut diag = vec![zero.clone(); n + 1];
    diag[e] = BigRational::from_integer(BigInt::from(1));
    for k in (m + 1..=n).rev() {
        let mut next = vec![zero.clone(); k];
        for (j, w) in diag.iter().enumerate() {
            if *w == zero {
                continue;
            }
            let (c0, c1) = dicke_split_squared(k, j)?;
            if j < k {
                next[j] += w * to_big(c0);
            }
            if j > 0 {
                next[j - 1] += w * to_big(c1);
            }
        }
        diag = next;
    }
    Ok(diag)
}

fn to_big(r: Ratio<u64>) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

/// Brute-force partial trace keeping the listed parties, in the listed order.
pub fn reduce_dense(s: &DenseState, keep: &[usize]) -> Result<CMatrix> {
    let n = s.n_parties;
    if n > DENSE_TRACE_MAX_PARTIES {
        return capacity(format!(
            "dense partial trace of {n} parties exceeds the {DENSE_TRACE_MAX_PARTIES}-party guard"
        ));
    }
    let mut seen = vec![false; n];
    for &p in keep {
        if p >= n || seen[p] {
            return domain(format!(
                "invalid or repeated party index {p} for {n} parties"
            ));
        }
        seen[p] = true;
    }
    let traced: Vec<usize> = (0..n).filter(|p| !seen[*p]).collect();
    let m = keep.len();
    let bit = |i: usize, p: usize| (i >> (n - 1 - p)) & 1;
    // group amplitudes by the configuration of the traced parties
    let mut groups = vec![vec![ZERO; 1 << m]; 1 << traced.len()];
    for (i, a) in s.amplitudes.iter().enumerate() {
        let k = keep.iter().fold(0, |acc, &p| (acc << 1) | bit(i, p));
        let t = traced.iter().fold(0, |acc, &p| (acc << 1) | bit(i, p));
        groups[t][k] = *a;
    }
    let mut rho = CMatrix::zeros(1 << m);
    for g in &groups {
        for (i, a) in g.iter().enumerate() {
            if *a == ZERO {
                continue;
            }
            for (j, b) in g.iter().enumerate() {
                rho[(i, j)] += a * b.conj();
            }
        }
    }
    Ok(rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::{One, Zero};

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn dicke_basis_indicator() {
        let d = make_dicke(4, 1).unwrap();
        assert_eq!(d.amplitudes(), &[c(0.0), c(1.0), c(0.0), c(0.0), c(0.0)]);
        assert!(matches!(make_dicke(3, 4), Err(crate::Error::Domain(_))));
    }

    #[test]
    fn dense_expansion() {
        let d = make_dicke(2, 1).unwrap().to_dense().unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((d.amplitudes()[0b01] - c(h)).norm() < 1e-15);
        assert!((d.amplitudes()[0b10] - c(h)).norm() < 1e-15);
        assert_eq!(d.amplitudes()[0b00], ZERO);

        let d = make_dicke(3, 1).unwrap().to_dense().unwrap();
        let t = 1.0 / 3f64.sqrt();
        for (i, a) in d.amplitudes().iter().enumerate() {
            let want = if [0b001, 0b010, 0b100].contains(&i) {
                t
            } else {
                0.0
            };
            assert!((a - c(want)).norm() < 1e-15);
        }

        let d = make_dicke(2, 2).unwrap().to_dense().unwrap();
        assert_eq!(d.amplitudes()[0b11], c(1.0));

        let big = make_dicke(15, 3).unwrap();
        assert!(matches!(big.to_dense(), Err(crate::Error::Capacity(_))));
    }

    #[test]
    fn superpositions() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let n = 5;
        let s = superpose(&[
            (c(h), &make_dicke(n, 1).unwrap()),
            (c(h), &make_dicke(n, n).unwrap()),
        ])
        .unwrap();
        assert!((s.amplitude(1) - c(h)).norm() < 1e-15);
        assert!((s.amplitude(n) - c(h)).norm() < 1e-15);
        assert!((s.to_dense().unwrap().norm_sqr() - 1.0).abs() < 1e-12);

        let t: f64 = 0.144;
        let s = superpose(&[
            (c(t.cos()), &make_dicke(4, 1).unwrap()),
            (c(t.sin()), &make_dicke(4, 4).unwrap()),
        ])
        .unwrap();
        assert!((s.amplitude(1).re - t.cos()).abs() < 1e-15);
        assert!((s.amplitude(4).re - t.sin()).abs() < 1e-15);

        let d0 = make_dicke(3, 0).unwrap();
        let s = superpose(&[(c(1.0), &d0), (c(0.0), &make_dicke(3, 1).unwrap())]).unwrap();
        assert_eq!(s, d0);

        let err = superpose(&[(c(1.0), &d0), (c(1.0), &make_dicke(4, 1).unwrap())]);
        assert!(matches!(err, Err(crate::Error::Domain(_))));
        let err = superpose(&[(c(1.0), &d0), (c(-1.0), &d0)]);
        assert!(matches!(err, Err(crate::Error::Domain(_))));
    }

    #[test]
    fn split_coefficients() {
        let (c0, c1) = dicke_split(4, 1).unwrap();
        assert!((c0 - 0.75f64.sqrt()).abs() < 1e-15 && (c1 - 0.5).abs() < 1e-15);
        assert_eq!(dicke_split(7, 0).unwrap(), (1.0, 0.0));
        let (c0, c1) = dicke_split(18, 1).unwrap();
        assert!((c0 - (17.0f64 / 18.0).sqrt()).abs() < 1e-15);
        assert!((c1 - (1.0f64 / 18.0).sqrt()).abs() < 1e-15);
        for n in 2..30 {
            for e in 0..=n {
                let (a, b) = dicke_split_squared(n, e).unwrap();
                assert!((a + b).is_one());
            }
        }
        assert!(dicke_split(1, 0).is_err());
        assert!(dicke_split(3, 4).is_err());
    }

    #[test]
    fn split_recursion_matches_dense_expansion() {
        // |D_5^2⟩ = c0 |D_4^2⟩|0⟩ + c1 |D_4^1⟩|1⟩ with the last qubit peeled off
        let n = 5;
        let e = 2;
        let (c0, c1) = dicke_split(n, e).unwrap();
        let full = make_dicke(n, e).unwrap().to_dense().unwrap();
        let with0 = make_dicke(n - 1, e).unwrap().to_dense().unwrap();
        let with1 = make_dicke(n - 1, e - 1).unwrap().to_dense().unwrap();
        for i in 0..1usize << (n - 1) {
            assert!((full.amplitudes()[i << 1] - with0.amplitudes()[i] * c0).norm() < 1e-15);
            assert!((full.amplitudes()[(i << 1) | 1] - with1.amplitudes()[i] * c1).norm() < 1e-15);
        }
    }

    #[test]
    fn two_qubit_marginal_of_w18() {
        let r = reduce_symmetric(&make_dicke(18, 1).unwrap(), 2).unwrap();
        assert!((r.entry(0, 0).re - 8.0 / 9.0).abs() < 1e-15);
        assert!((r.entry(1, 1).re - 1.0 / 9.0).abs() < 1e-15);
        assert!(r.entry(2, 2).norm() < 1e-15);
        let exact = dicke_marginal_exact(18, 1, 2).unwrap();
        assert_eq!(exact[0], BigRational::new(8.into(), 9.into()));
        assert_eq!(exact[1], BigRational::new(1.into(), 9.into()));
        assert!(exact[2].is_zero());
    }

    #[test]
    fn five_qubit_marginal_of_d63() {
        let r = reduce_symmetric(&make_dicke(6, 3).unwrap(), 5).unwrap();
        for e in 0..=5 {
            for f in 0..=5 {
                let want = if e == f && (e == 2 || e == 3) {
                    0.5
                } else {
                    0.0
                };
                assert!((r.entry(e, f) - c(want)).norm() < 1e-15, "({e},{f})");
            }
        }
    }

    #[test]
    fn product_state_marginal() {
        let r = reduce_symmetric(&make_dicke(7, 0).unwrap(), 3).unwrap();
        assert!((r.entry(0, 0) - c(1.0)).norm() < 1e-15);
        let (tr, _, _) = r.diagnostics();
        assert!((tr - c(1.0)).norm() < 1e-15);
        assert!(reduce_symmetric(&make_dicke(7, 0).unwrap(), 8).is_err());
        assert!(reduce_symmetric(&make_dicke(7, 0).unwrap(), 0).is_err());
    }

    #[test]
    fn full_reduction_is_identity() {
        let s = SymmetricState::from_real(&[0.3, -0.2, 0.5, 0.1]).unwrap();
        let r = reduce_symmetric(&s, 3).unwrap();
        assert!(r.dicke_matrix().max_abs_diff(s.density().dicke_matrix()) < 1e-15);
    }

    #[test]
    fn dense_trace_of_product_state() {
        let s = DenseState::basis("00").unwrap();
        let rho = reduce_dense(&s, &[0]).unwrap();
        assert_eq!(rho, CMatrix::from_real(2, &[1.0, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn dense_and_symmetric_traces_agree_for_w4() {
        let s = make_dicke(4, 1).unwrap();
        let dense = reduce_dense(&s.to_dense().unwrap(), &[1, 2, 3]).unwrap();
        let sym = reduce_symmetric(&s, 3).unwrap().to_dense_matrix().unwrap();
        assert!(dense.max_abs_diff(&sym) <= 1e-12);
        assert!((dense.trace() - c(1.0)).norm() <= 1e-12);
    }
}
