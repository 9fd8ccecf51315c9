//! Quantum values of PI expressions, CHSH monogamy, Mermin operators,
//! visibilities and maximal quantum values.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::bellexpr::{exact_to_f64, monomial_count, BoundDirection, PIBellExpression};
use crate::error::{capacity, domain, Result};
use crate::math::{apply_local_ops, binomial_f64, CMatrix, C64, ONE, ZERO};
use crate::optimize::{maximize, Coordinate};
use crate::qoperators::{bell_operator, eigen_max, BlochObservable, HermitianMatrix, XZObservable};
use crate::symstate::{
    make_dicke, reduce_dense, reduce_dicke_matrix, superpose, DenseState, SymmetricState,
};

/// Highest correlator order evaluated through the Dicke-basis fast path.
pub const DICKE_BLOCK_MAX_ORDER: usize = 14;

/// Default angle grid spacing for [`max_quantum_value`], in radians.
pub const DEFAULT_GRID_STEP: f64 = 0.02;

/// Largest party count for [`max_quantum_value`].
pub const MAX_QUANTUM_MAX_PARTIES: usize = 10;

/// Setting angles shared by every party.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnglePair {
    pub phi1: f64,
    pub phi2: f64,
}

impl AnglePair {
    pub fn new(phi1: f64, phi2: f64) -> Result<Self> {
        let a = XZObservable::new(phi1)?;
        let b = XZObservable::new(phi2)?;
        Ok(AnglePair {
            phi1: a.angle(),
            phi2: b.angle(),
        })
    }

    pub fn observables(&self) -> [HermitianMatrix; 2] {
        [
            XZObservable::new(self.phi1).expect("finite").matrix(),
            XZObservable::new(self.phi2).expect("finite").matrix(),
        ]
    }
}

/// `⟨D_k^a| A₁^{⊗p} ⊗ A₂^{⊗q} |D_k^b⟩` for `k = p + q`.
fn dicke_block(a1: &CMatrix, a2: &CMatrix, p: usize, q: usize) -> Result<CMatrix> {
    let k = p + q;
    if k > DICKE_BLOCK_MAX_ORDER {
        return capacity(format!(
            "correlators of order {k} exceed the {DICKE_BLOCK_MAX_ORDER}-body fast path"
        ));
    }
    let ops: Vec<&CMatrix> = std::iter::repeat_n(a1, p)
        .chain(std::iter::repeat_n(a2, q))
        .collect();
    let dim = 1usize << k;
    let norms: Vec<f64> = (0..=k)
        .map(|e| binomial_f64(k as u64, e as u64).sqrt())
        .collect();
    let mut block = CMatrix::zeros(k + 1);
    for b in 0..=k {
        let ket: Vec<C64> = (0..dim)
            .map(|i| {
                if i.count_ones() as usize == b {
                    C64::new(1.0 / norms[b], 0.0)
                } else {
                    ZERO
                }
            })
            .collect();
        let image = apply_local_ops(&ops, &ket);
        for (i, v) in image.iter().enumerate() {
            let a = i.count_ones() as usize;
            block[(a, b)] += v / norms[a];
        }
    }
    Ok(block)
}

/// Per-term data for evaluating an expression on symmetric operators.
struct SymmetricEvaluator {
    constant: f64,
    /// (order, weight = coefficient · monomial count, Dicke block)
    terms: Vec<(usize, f64, CMatrix)>,
}

impl SymmetricEvaluator {
    fn new(expr: &PIBellExpression, angles: &AnglePair) -> Result<Self> {
        let [a1, a2] = angles.observables();
        let m = expr.n_parties();
        let mut constant = 0.0;
        let mut terms = Vec::new();
        for (s, c) in expr.terms() {
            if s.is_constant() {
                constant += c;
                continue;
            }
            let count = monomial_count(m, s)? as f64;
            terms.push((
                s.order(),
                c * count,
                dicke_block(a1.matrix(), a2.matrix(), s.ones(), s.twos())?,
            ));
        }
        Ok(SymmetricEvaluator { constant, terms })
    }

    /// Applies the expression functional to a Dicke-basis operator on
    /// `n_host` qubits; `trace_scale` multiplies the constant term.
    fn apply(&self, host: &CMatrix, n_host: usize, trace_scale: C64) -> C64 {
        let mut reduced: Vec<Option<CMatrix>> = vec![None; n_host + 1];
        let mut acc = trace_scale * self.constant;
        for (k, w, block) in &self.terms {
            let rho = reduced[*k].get_or_insert_with(|| reduce_dicke_matrix(host, n_host, *k));
            acc += rho.trace_product(block) * *w;
        }
        acc
    }
}

/// `⟨I⟩` on the `m`-party marginal of a symmetric state, with every party
/// measuring the same two xz-plane observables.
///
/// All monomials of one multiset have the same expectation on a symmetric
/// state, so each term reduces to its monomial count times one correlator on
/// the `|S|`-party marginal.
pub fn expectation(
    expr: &PIBellExpression,
    state: &SymmetricState,
    angles: &AnglePair,
) -> Result<f64> {
    let m = expr.n_parties();
    let n = state.n_parties();
    if m > n {
        return domain(format!(
            "expression on {m} parties cannot act on a {n}-party state"
        ));
    }
    let eval = SymmetricEvaluator::new(expr, angles)?;
    let rho = state.density();
    Ok(eval.apply(rho.dicke_matrix(), n, ONE).re)
}

/// `P (I ⊗ 1) P` on the symmetric subspace of `n_host` qubits, where `I` acts
/// on the first `m` parties, as an `(n_host + 1)`-dimensional Dicke-basis
/// matrix. Its largest eigenvalue is the best value over symmetric
/// `n_host`-qubit states.
pub fn symmetric_bell_matrix(
    expr: &PIBellExpression,
    n_host: usize,
    angles: &AnglePair,
) -> Result<HermitianMatrix> {
    let m = expr.n_parties();
    if m > n_host {
        return domain(format!(
            "expression on {m} parties cannot act on {n_host} qubits"
        ));
    }
    let eval = SymmetricEvaluator::new(expr, angles)?;
    let d = n_host + 1;
    let mut out = CMatrix::zeros(d);
    let mut unit = CMatrix::zeros(d);
    for e in 0..d {
        for f in 0..d {
            // ⟨ψ|M|ψ⟩ = Σ d_f* M_fe d_e with ρ_ef = d_e d_f*
            unit[(e, f)] = ONE;
            let scale = if e == f { ONE } else { ZERO };
            out[(f, e)] = eval.apply(&unit, n_host, scale);
            unit[(e, f)] = ZERO;
        }
    }
    HermitianMatrix::new(out)
}

/// Expectation of the expression on every `m`-subset of the parties of a
/// dense state, in lexicographic subset order.
pub fn per_subset_values(
    expr: &PIBellExpression,
    state: &DenseState,
    angles: &AnglePair,
) -> Result<Vec<f64>> {
    let m = expr.n_parties();
    let n = state.n_parties();
    if m > n {
        return domain(format!(
            "expression on {m} parties cannot act on a {n}-party state"
        ));
    }
    let [a1, a2] = angles.observables();
    let h = bell_operator(expr, [&a1, &a2])?;
    let mut out = Vec::new();
    for keep in combinations(n, m) {
        let rho = reduce_dense(state, &keep)?;
        out.push(h.expectation(&rho));
    }
    Ok(out)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Settings `a₁, a₂` for party A and `b_k`, `c_k` for B and C.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshSettings {
    pub a: [BlochObservable; 2],
    pub b: [BlochObservable; 2],
    pub c: [BlochObservable; 2],
}

impl ChshSettings {
    /// `a₁ = x`, `a₂ = y`, `b₁ = c₁ = (x + y)/√2`, `b₂ = c₂ = (x − y)/√2`.
    pub fn circle() -> Self {
        let x = BlochObservable::new([1.0, 0.0, 0.0]).expect("unit");
        let y = BlochObservable::new([0.0, 1.0, 0.0]).expect("unit");
        let plus = BlochObservable::new([FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0]).expect("unit");
        let minus = BlochObservable::new([FRAC_1_SQRT_2, -FRAC_1_SQRT_2, 0.0]).expect("unit");
        ChshSettings {
            a: [x, y],
            b: [plus, minus],
            c: [plus, minus],
        }
    }
}

/// `(cos θ |110⟩ + sin θ |101⟩ + |011⟩) / √2`.
pub fn circle_state(theta: f64) -> DenseState {
    let mut amps = vec![ZERO; 8];
    amps[0b110] = C64::new(theta.cos() * FRAC_1_SQRT_2, 0.0);
    amps[0b101] = C64::new(theta.sin() * FRAC_1_SQRT_2, 0.0);
    amps[0b011] = C64::new(FRAC_1_SQRT_2, 0.0);
    DenseState::new(amps).expect("unit norm")
}

/// `(B_AB, B_AC)`: the CHSH parameters of pairs AB and AC, A's settings shared.
pub fn chsh_pair_values(state: &DenseState, settings: &ChshSettings) -> Result<(f64, f64)> {
    if state.n_parties() != 3 {
        return domain(format!(
            "CHSH pair values need 3 qubits, got {}",
            state.n_parties()
        ));
    }
    let id = CMatrix::identity(2);
    let psi = state.amplitudes();
    let corr = |ops: [&CMatrix; 3]| -> f64 {
        let image = apply_local_ops(&ops, psi);
        psi.iter()
            .zip(&image)
            .map(|(a, b)| a.conj() * b)
            .sum::<C64>()
            .re
    };
    let a = settings.a.map(|o| o.matrix());
    let b = settings.b.map(|o| o.matrix());
    let c = settings.c.map(|o| o.matrix());
    let (a1, a2) = (a[0].matrix(), a[1].matrix());
    let (b1, b2) = (b[0].matrix(), b[1].matrix());
    let (c1, c2) = (c[0].matrix(), c[1].matrix());
    let bab = corr([a1, b1, &id]) + corr([a1, b2, &id]) + corr([a2, b1, &id]) - corr([a2, b2, &id]);
    let bac = corr([a1, &id, c1]) + corr([a1, &id, c2]) + corr([a2, &id, c1]) - corr([a2, &id, c2]);
    Ok((bab, bac))
}

/// Largest `B_AB² + B_AC²` over `trials` random pure states and settings.
///
/// States have independent standard complex normal amplitudes, normalized;
/// settings are normalized Gaussian 3-vectors.
pub fn monogamy_sample_check(trials: usize, seed: u64) -> Result<f64> {
    if trials == 0 {
        return domain("need at least one trial");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let amps: Vec<C64> = (0..8).map(|_| C64::new(normal(), normal())).collect();
        let state = DenseState::normalized(amps)?;
        let mut dir = || BlochObservable::along([normal(), normal(), normal()]);
        let settings = ChshSettings {
            a: [dir()?, dir()?],
            b: [dir()?, dir()?],
            c: [dir()?, dir()?],
        };
        let (x, y) = chsh_pair_values(&state, &settings)?;
        worst = worst.max(x * x + y * y);
    }
    Ok(worst)
}

/// `2^{(N−2)/2}`, the Mermin normalization for `N − 1` measured parties.
fn mermin_scale(n: usize) -> f64 {
    2f64.powf((n as f64 - 2.0) / 2.0)
}

/// Expectation of the `(N−1)`-party Mermin operator on the marginal of a
/// symmetric `N`-qubit state:
/// `(2^{(N−2)/2 + 1} / √N) · Re(d₀* d_{N−1} + d₁* d_N)`.
///
/// For real amplitudes this is the plain product form; complex amplitudes use
/// the Hermitian pairing.
pub fn mermin_expectation(state: &SymmetricState) -> Result<f64> {
    let n = state.n_parties();
    if n < 3 {
        return domain(format!("Mermin expectation needs N ≥ 3, got {n}"));
    }
    let d = state.amplitudes();
    let pairing = d[0].conj() * d[n - 1] + d[1].conj() * d[n];
    Ok(2.0 * mermin_scale(n) / (n as f64).sqrt() * pairing.re)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MerminForm {
    /// `|GHZ⁺⟩⟨GHZ⁺| − |GHZ⁻⟩⟨GHZ⁻|`
    Ghz,
    /// `|0…0⟩⟨1…1| + |1…1⟩⟨0…0|`
    Dicke,
}

/// The Mermin operator on `n_minus_1` qubits, scaled by `2^{(N−2)/2}`.
pub fn mermin_operator(n_minus_1: usize, form: MerminForm) -> Result<HermitianMatrix> {
    if n_minus_1 < 2 {
        return domain("Mermin operator needs at least two parties");
    }
    if n_minus_1 > 10 {
        return capacity(format!(
            "Mermin operator on {n_minus_1} parties exceeds the guard"
        ));
    }
    let dim = 1usize << n_minus_1;
    let scale = C64::new(mermin_scale(n_minus_1 + 1), 0.0);
    let m = match form {
        MerminForm::Ghz => {
            let mut plus = vec![ZERO; dim];
            let mut minus = vec![ZERO; dim];
            plus[0] = C64::new(FRAC_1_SQRT_2, 0.0);
            plus[dim - 1] = C64::new(FRAC_1_SQRT_2, 0.0);
            minus[0] = C64::new(FRAC_1_SQRT_2, 0.0);
            minus[dim - 1] = C64::new(-FRAC_1_SQRT_2, 0.0);
            let mut m = CMatrix::outer(&plus, &plus);
            m.add_scaled(&CMatrix::outer(&minus, &minus), C64::new(-1.0, 0.0));
            m
        }
        MerminForm::Dicke => {
            let mut m = CMatrix::zeros(dim);
            m[(0, dim - 1)] = ONE;
            m[(dim - 1, 0)] = ONE;
            m
        }
    };
    HermitianMatrix::new(m.scale(scale))
}

/// `Tr(M ρ_{N−1})` by dense partial trace of the last party, for checking
/// [`mermin_expectation`].
pub fn mermin_operator_value(state: &SymmetricState, form: MerminForm) -> Result<f64> {
    let n = state.n_parties();
    if n < 3 {
        return domain(format!("Mermin expectation needs N ≥ 3, got {n}"));
    }
    let op = mermin_operator(n - 1, form)?;
    let keep: Vec<usize> = (0..n - 1).collect();
    let rho = reduce_dense(&state.to_dense()?, &keep)?;
    Ok(op.expectation(&rho))
}

/// Local bound of the Mermin expression in this normalization.
pub const MERMIN_LOCAL_BOUND: f64 = 1.0;

/// Margin above the local bound required to call a value a violation.
pub const VIOLATION_TOL: f64 = 1e-12;

pub fn mermin_violates(value: f64) -> bool {
    value > MERMIN_LOCAL_BOUND + VIOLATION_TOL
}

/// Closed-form value `2^{(N−2)/2} / √N` at [`mermin_optimal_state`].
pub fn mermin_optimal_value(n: usize) -> Result<f64> {
    if n < 3 {
        return domain(format!("Mermin optimum needs n ≥ 3, got {n}"));
    }
    Ok(mermin_scale(n) / (n as f64).sqrt())
}

/// `(|D_n^1⟩ + |1…1⟩) / √2`.
pub fn mermin_optimal_state(n: usize) -> Result<SymmetricState> {
    if n < 3 {
        return domain(format!("Mermin optimum needs n ≥ 3, got {n}"));
    }
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    superpose(&[(h, &make_dicke(n, 1)?), (h, &make_dicke(n, n)?)])
}

/// Critical white-noise visibility `(L − I₀) / (Q − I₀)`, where `I₀` is the
/// value on the maximally mixed state (the constant term) and `L` the exact
/// local bound.
pub fn visibility(expr: &PIBellExpression, q_value: f64) -> Result<f64> {
    let bound = exact_to_f64(&expr.verify_local_bound()?);
    let violates = match expr.direction() {
        BoundDirection::Max => q_value > bound,
        BoundDirection::Min => q_value < bound,
    };
    if !violates {
        return domain(format!(
            "value {q_value} does not violate the local bound {bound}"
        ));
    }
    let noise = expr.constant();
    Ok((bound - noise) / (q_value - noise))
}

/// Where the quantum state is allowed to live in [`max_quantum_value`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuantumHost {
    /// Any state of the expression's parties.
    AnyState,
    /// Marginals of symmetric states on this many qubits.
    Symmetric(usize),
}

/// Largest quantum value over identical xz-plane observables on all parties,
/// optimizing the two angles on a grid followed by coordinate search to
/// `1e-8`.
pub fn max_quantum_value(
    expr: &PIBellExpression,
    host: QuantumHost,
    grid_step: f64,
) -> Result<(f64, AnglePair)> {
    let m = expr.n_parties();
    if m > MAX_QUANTUM_MAX_PARTIES {
        return capacity(format!(
            "maximal quantum value on {m} parties exceeds the guard"
        ));
    }
    if !(grid_step > 0.0) {
        return domain("grid step must be positive");
    }
    if let QuantumHost::Symmetric(n) = host {
        if n < m {
            return domain(format!(
                "symmetric host of {n} qubits is smaller than {m} parties"
            ));
        }
    }
    let objective = |x: &[f64]| -> f64 {
        let Ok(angles) = AnglePair::new(x[0], x[1]) else {
            return f64::NAN;
        };
        let op = match host {
            QuantumHost::AnyState => {
                let [a1, a2] = angles.observables();
                bell_operator(expr, [&a1, &a2])
            }
            QuantumHost::Symmetric(n) => symmetric_bell_matrix(expr, n, &angles),
        };
        op.map(|h| eigen_max(&h)).unwrap_or(f64::NAN)
    };
    let coords = [
        Coordinate::periodic(0.0, TAU, grid_step),
        Coordinate::periodic(0.0, TAU, grid_step),
    ];
    let best = maximize(objective, &coords, 1e-8);
    Ok((best.value, AnglePair::new(best.point[0], best.point[1])?))
}

/// A parametrized family of symmetric states.
#[derive(Debug, Clone, PartialEq)]
pub enum StateFamily {
    Fixed(SymmetricState),
    /// `cos θ |D_n^first⟩ + sin θ |D_n^second⟩`, `θ ∈ [0, π)`.
    DickePair {
        n: usize,
        first: usize,
        second: usize,
    },
}

impl StateFamily {
    pub fn n_parties(&self) -> usize {
        match self {
            StateFamily::Fixed(s) => s.n_parties(),
            StateFamily::DickePair { n, .. } => *n,
        }
    }

    pub fn n_params(&self) -> usize {
        match self {
            StateFamily::Fixed(_) => 0,
            StateFamily::DickePair { .. } => 1,
        }
    }

    pub(crate) fn coordinates(&self, grid_step: f64) -> Vec<Coordinate> {
        match self {
            StateFamily::Fixed(_) => vec![],
            StateFamily::DickePair { .. } => vec![Coordinate::periodic(0.0, PI, grid_step)],
        }
    }

    pub fn state(&self, params: &[f64]) -> Result<SymmetricState> {
        match self {
            StateFamily::Fixed(s) => Ok(s.clone()),
            StateFamily::DickePair { n, first, second } => {
                let theta = params.first().copied().unwrap_or(0.0);
                superpose(&[
                    (C64::new(theta.cos(), 0.0), &make_dicke(*n, *first)?),
                    (C64::new(theta.sin(), 0.0), &make_dicke(*n, *second)?),
                ])
            }
        }
    }
}

/// Best expectation over a state family and both setting angles. Returns
/// `(value, state parameters, angles)`.
pub fn optimize_expectation(
    expr: &PIBellExpression,
    family: &StateFamily,
    grid_step: f64,
) -> Result<(f64, Vec<f64>, AnglePair)> {
    if expr.n_parties() > family.n_parties() {
        return domain("expression has more parties than the state family");
    }
    let k = family.n_params();
    let sign = match expr.direction() {
        BoundDirection::Max => 1.0,
        BoundDirection::Min => -1.0,
    };
    let objective = |x: &[f64]| -> f64 {
        let value = family
            .state(&x[..k])
            .and_then(|s| expectation(expr, &s, &AnglePair::new(x[k], x[k + 1])?));
        value.map(|v| sign * v).unwrap_or(f64::NAN)
    };
    let mut coords = family.coordinates(grid_step);
    coords.push(Coordinate::periodic(0.0, TAU, grid_step));
    coords.push(Coordinate::periodic(0.0, TAU, grid_step));
    let best = maximize(objective, &coords, 1e-8);
    let angles = AnglePair::new(best.point[k], best.point[k + 1])?;
    Ok((sign * best.value, best.point[..k].to_vec(), angles))
}
