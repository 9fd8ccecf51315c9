//! Independent oracles: brute-force partial traces, explicit monomial sums,
//! dense Bell operators, closed-form eigenvalues and LP vertex enumeration.

use num_bigint::BigInt;
use num_rational::BigRational;
use polybell_core::bellexpr::{
    brute_force_bound, classical_value, local_bound, strategy_value, PIBellExpression,
    SettingMultiset, StrategyClass, SIGN_PAIRS,
};
use polybell_core::bellexpr::{
    chsh_expression, five_party_expression, four_party_expression, two_body_expression,
};
use polybell_core::lpsolver::{check_feasible, solve, LPStatus, LinearProgram};
use polybell_core::math::{CMatrix, C64};
use polybell_core::qoperators::{bell_operator, eigen_max, eigenvalues, HermitianMatrix};
use polybell_core::quantumeval::{
    expectation, max_quantum_value, mermin_expectation, mermin_operator_value,
    mermin_optimal_state, symmetric_bell_matrix, visibility, AnglePair, MerminForm, QuantumHost,
};
use polybell_core::symstate::make_dicke;
use polybell_core::symstate::{reduce_dense, reduce_symmetric, SymmetricState};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

fn symmetric_state(max_n: usize) -> impl Strategy<Value = SymmetricState> {
    (1..=max_n).prop_flat_map(|n| {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n + 1).prop_filter_map(
            "zero vector",
            |v| {
                SymmetricState::normalized(v.into_iter().map(|(a, b)| C64::new(a, b)).collect())
                    .ok()
            },
        )
    })
}

fn expression(max_n: usize, max_order: usize) -> impl Strategy<Value = PIBellExpression> {
    (1..=max_n).prop_flat_map(move |n| {
        let terms = SettingMultiset::all_up_to(max_order.min(n));
        let len = terms.len() + 1;
        prop::collection::vec(prop::option::weighted(0.6, -8i32..=8), len).prop_map(move |cs| {
            let mut e = PIBellExpression::new(n);
            for (s, c) in std::iter::once(SettingMultiset::EMPTY)
                .chain(terms.iter().copied())
                .zip(cs)
            {
                if let Some(c) = c {
                    e.set(s, c as f64 / 4.0).unwrap();
                }
            }
            e
        })
    })
}

fn strategy(n: usize) -> impl Strategy<Value = Vec<(i8, i8)>> {
    prop::collection::vec(prop::sample::select(SIGN_PAIRS.to_vec()), n)
}

/// `Σ_S c_S e_S` by visiting every assignment of {absent, 1, 2} to parties.
fn explicit_value(expr: &PIBellExpression, strat: &[(i8, i8)]) -> BigRational {
    let n = strat.len();
    let mut total = BigRational::from_integer(BigInt::from(0));
    let mut assign = vec![0u8; n];
    loop {
        let ones = assign.iter().filter(|&&a| a == 1).count();
        let twos = assign.iter().filter(|&&a| a == 2).count();
        let c = expr.coefficient(SettingMultiset::new(ones, twos));
        if c != 0.0 {
            let sign: i64 = assign
                .iter()
                .zip(strat)
                .map(|(&a, &(x, y))| match a {
                    1 => x as i64,
                    2 => y as i64,
                    _ => 1,
                })
                .product();
            total += BigRational::from_float(c).unwrap() * BigInt::from(sign);
        }
        let mut i = 0;
        while i < n && assign[i] == 2 {
            assign[i] = 0;
            i += 1;
        }
        if i == n {
            return total;
        }
        assign[i] += 1;
    }
}

fn class_of(strat: &[(i8, i8)]) -> StrategyClass {
    let mut counts = [0usize; 4];
    for s in strat {
        counts[SIGN_PAIRS.iter().position(|p| p == s).unwrap()] += 1;
    }
    StrategyClass::new(counts)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn symmetric_trace_matches_dense(s in symmetric_state(8), frac in 0.0f64..1.0) {
        let n = s.n_parties();
        let m = 1 + ((n - 1) as f64 * frac) as usize;
        let fast = reduce_symmetric(&s, m).unwrap().to_dense_matrix().unwrap();
        let keep: Vec<usize> = (n - m..n).rev().collect();
        let slow = reduce_dense(&s.to_dense().unwrap(), &keep).unwrap();
        prop_assert!(fast.max_abs_diff(&slow) <= 1e-12);
    }

    #[test]
    fn reduced_states_are_states(s in symmetric_state(10), m in 1usize..=10) {
        prop_assume!(m <= s.n_parties());
        let (trace, defect, min_eig) = reduce_symmetric(&s, m).unwrap().diagnostics();
        prop_assert!((trace - C64::new(1.0, 0.0)).norm() <= 1e-12);
        prop_assert!(defect <= 1e-12 && min_eig >= -1e-12);
    }

    #[test]
    fn class_value_is_well_defined(
        (expr, strat, perm) in expression(6, 4).prop_flat_map(|e| {
            let n = e.n_parties();
            (Just(e), strategy(n), Just((0..n).collect::<Vec<_>>()).prop_shuffle())
        })
    ) {
        let direct = strategy_value(&expr, &strat).unwrap();
        let permuted: Vec<(i8, i8)> = perm.iter().map(|&i| strat[i]).collect();
        prop_assert_eq!(&direct, &strategy_value(&expr, &permuted).unwrap());
        prop_assert_eq!(&direct, &classical_value(&expr, &class_of(&strat)).unwrap());
        prop_assert_eq!(&direct, &explicit_value(&expr, &strat));
    }

    #[test]
    fn class_bound_equals_brute_force(expr in expression(7, 4)) {
        prop_assert_eq!(local_bound(&expr).unwrap(), brute_force_bound(&expr).unwrap());
    }

    #[test]
    fn symmetric_path_matches_bell_operator(
        expr in expression(4, 4),
        s in symmetric_state(6),
        phi1 in 0.0f64..7.0,
        phi2 in 0.0f64..7.0,
    ) {
        prop_assume!(expr.n_parties() <= s.n_parties());
        let angles = AnglePair::new(phi1, phi2).unwrap();
        let fast = expectation(&expr, &s, &angles).unwrap();
        let [a1, a2] = angles.observables();
        let h = bell_operator(&expr, [&a1, &a2]).unwrap();
        let keep: Vec<usize> = (0..expr.n_parties()).collect();
        let rho = reduce_dense(&s.to_dense().unwrap(), &keep).unwrap();
        prop_assert!((fast - h.expectation(&rho)).abs() <= 1e-10 * (1.0 + fast.abs()));
    }

    #[test]
    fn mermin_closed_form_matches_operator(s in symmetric_state(8)) {
        prop_assume!(s.n_parties() >= 3);
        let a = mermin_expectation(&s).unwrap();
        let b = mermin_operator_value(&s, MerminForm::Ghz).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn eigen_max_matches_cubic_roots(v in prop::collection::vec(-3.0f64..3.0, 6)) {
        let m = CMatrix::from_real(3, &[v[0], v[1], v[2], v[1], v[3], v[4], v[2], v[4], v[5]]);
        let h = HermitianMatrix::new(m).unwrap();
        prop_assert!((eigen_max(&h) - symmetric_3x3_max(&v)).abs() <= 1e-9);
    }

    #[test]
    fn eigenvalues_preserve_traces(
        re in prop::collection::vec(-1.0f64..1.0, 16),
        im in prop::collection::vec(-1.0f64..1.0, 16),
    ) {
        let raw = CMatrix::from_vec(4, re.iter().zip(&im).map(|(a, b)| C64::new(*a, *b)).collect());
        let mut m = raw.clone();
        m.add_scaled(&raw.adjoint(), C64::new(1.0, 0.0));
        let h = HermitianMatrix::new(m.clone()).unwrap();
        let ev = eigenvalues(&h);
        let t1: f64 = ev.iter().sum();
        let t2: f64 = ev.iter().map(|x| x * x).sum();
        prop_assert!((t1 - m.trace().re).abs() <= 1e-10);
        prop_assert!((t2 - m.trace_product(&m).re).abs() <= 1e-9);
    }

    #[test]
    fn json_round_trip(expr in expression(8, 4)) {
        let text = serde_json::to_string(&expr.to_json()).unwrap();
        let back = PIBellExpression::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        prop_assert_eq!(back, expr);
    }
}

fn real_symmetric_state(n: usize) -> impl Strategy<Value = SymmetricState> {
    prop::collection::vec(-1.0f64..1.0, n + 1).prop_filter_map("zero vector", |v| {
        SymmetricState::from_real(&v).ok().or_else(|| {
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            (norm > 1e-6).then(|| {
                SymmetricState::from_real(&v.iter().map(|x| x / norm).collect::<Vec<_>>()).unwrap()
            })
        })
    })
}

fn six_qubit_maximum() -> f64 {
    static MAX: OnceLock<f64> = OnceLock::new();
    *MAX.get_or_init(|| {
        max_quantum_value(&five_party_expression(), QuantumHost::Symmetric(6), 0.05)
            .unwrap()
            .0
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mermin_optimum_is_not_beaten(n in 3usize..=9, s in real_symmetric_state(9)) {
        let amps: Vec<f64> = s.amplitudes()[..=n].iter().map(|c| c.re).collect();
        prop_assume!(amps.iter().any(|a| a.abs() > 1e-3));
        let s = SymmetricState::normalized(amps.iter().map(|&a| C64::new(a, 0.0)).collect()).unwrap();
        let best = mermin_expectation(&mermin_optimal_state(n).unwrap()).unwrap();
        prop_assert!(mermin_expectation(&s).unwrap() <= best + 1e-9);
    }

    #[test]
    fn six_qubit_maximum_dominates(s in symmetric_state(6), phi1 in 0.0f64..7.0, phi2 in 0.0f64..7.0) {
        prop_assume!(s.n_parties() == 6);
        let v = expectation(&five_party_expression(), &s, &AnglePair::new(phi1, phi2).unwrap()).unwrap();
        prop_assert!(v <= six_qubit_maximum() + 1e-9);
    }

    #[test]
    fn visibility_in_unit_interval(excess in 1e-6f64..50.0) {
        let expr = five_party_expression();
        let v = visibility(&expr, 6.0 + excess).unwrap();
        prop_assert!(v > 0.0 && v <= 1.0);
        prop_assert!(visibility(&expr, 6.0 - excess).is_err());
    }

    #[test]
    fn built_in_path_equivalence(which in 0usize..7, s in symmetric_state(8), phi1 in 0.0f64..7.0, phi2 in 0.0f64..7.0) {
        let expr = match which {
            0 => chsh_expression(),
            1 => four_party_expression(),
            2 => five_party_expression(),
            k => two_body_expression(k + 1).unwrap(),
        };
        prop_assume!(expr.n_parties() <= s.n_parties());
        let angles = AnglePair::new(phi1, phi2).unwrap();
        let [a1, a2] = angles.observables();
        let h = bell_operator(&expr, [&a1, &a2]).unwrap();
        let keep: Vec<usize> = (0..expr.n_parties()).collect();
        let rho = reduce_dense(&s.to_dense().unwrap(), &keep).unwrap();
        let fast = expectation(&expr, &s, &angles).unwrap();
        prop_assert!((fast - h.expectation(&rho)).abs() <= 1e-10 * (1.0 + fast.abs()));
    }
}

#[test]
fn chsh_maximum_dominates_dicke_values() {
    let (max, _) = max_quantum_value(&chsh_expression(), QuantumHost::AnyState, 0.05).unwrap();
    for e in 0..=3 {
        for k in 0..20 {
            let angles = AnglePair::new(0.3 * k as f64, 1.1 + 0.7 * k as f64).unwrap();
            assert!(
                expectation(&chsh_expression(), &make_dicke(3, e).unwrap(), &angles).unwrap()
                    <= max + 1e-9
            );
        }
    }
}

/// `(1/6) Σ_d H ⊗ 1_d` with the identity on party `d`, as a dense 64×64
/// matrix.
fn subset_average(h5: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(64);
    let drop_bit = |i: usize, d: usize| -> usize {
        // qubit 0 is the most significant of six bits
        let pos = 5 - d;
        let high = i >> (pos + 1);
        let low = i & ((1 << pos) - 1);
        (high << pos) | low
    };
    for d in 0..6 {
        let pos = 5 - d;
        for i in 0..64 {
            for j in 0..64 {
                if (i >> pos) & 1 == (j >> pos) & 1 {
                    out[(i, j)] += h5[(drop_bit(i, d), drop_bit(j, d))] / 6.0;
                }
            }
        }
    }
    out
}

#[test]
fn symmetric_host_matches_subset_average() {
    let expr = five_party_expression();
    for (p1, p2) in [(2.76081, 4.43812), (0.4, 1.3), (10.6852, 5.92112)] {
        let angles = AnglePair::new(p1, p2).unwrap();
        let [a1, a2] = angles.observables();
        let h5 = bell_operator(&expr, [&a1, &a2]).unwrap();
        let avg = HermitianMatrix::new(subset_average(h5.matrix())).unwrap();
        let sym = symmetric_bell_matrix(&expr, 6, &angles).unwrap();
        // the compression sits inside the averaged operator
        assert!(eigen_max(&sym) <= eigen_max(&avg) + 1e-9);
        let d = make_dicke(6, 3).unwrap().to_dense().unwrap();
        let via_avg = avg.matrix().sandwich(d.amplitudes(), d.amplitudes()).re;
        let via_sym = expectation(&expr, &make_dicke(6, 3).unwrap(), &angles).unwrap();
        assert!((via_avg - via_sym).abs() < 1e-10);
    }
    let angles = AnglePair::new(2.76081, 4.43812).unwrap();
    let [a1, a2] = angles.observables();
    let avg = HermitianMatrix::new(subset_average(
        bell_operator(&expr, [&a1, &a2]).unwrap().matrix(),
    ))
    .unwrap();
    let sym = symmetric_bell_matrix(&expr, 6, &angles).unwrap();
    assert!((eigen_max(&sym) - eigen_max(&avg)).abs() < 1e-9);
}

fn symmetric_3x3_max(v: &[f64]) -> f64 {
    let (a, b, c, d, e, f) = (v[0], v[1], v[2], v[3], v[4], v[5]);
    let p1 = b * b + c * c + e * e;
    let q = (a + d + f) / 3.0;
    let p2 = (a - q).powi(2) + (d - q).powi(2) + (f - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    if p == 0.0 {
        return q;
    }
    let (ba, bd, bf) = ((a - q) / p, (d - q) / p, (f - q) / p);
    let (bb, bc, be) = (b / p, c / p, e / p);
    let det = ba * (bd * bf - be * be) - bb * (bb * bf - be * bc) + bc * (bb * be - bd * bc);
    let phi = (det / 2.0).clamp(-1.0, 1.0).acos() / 3.0;
    q + 2.0 * p * phi.cos()
}

/// Best objective over all vertices of `{A x ≤ b, lo ≤ x ≤ hi}`, or `None`
/// if no vertex is feasible.
fn vertex_enumeration(c: &[f64], a: &[Vec<f64>], b: &[f64], lo: f64, hi: f64) -> Option<f64> {
    let n = c.len();
    let mut rows: Vec<(Vec<f64>, f64)> = a.iter().cloned().zip(b.iter().copied()).collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        rows.push((e.clone(), hi));
        e[j] = -1.0;
        rows.push((e, -lo));
    }
    let mut best: Option<f64> = None;
    let mut pick = vec![0usize; n];
    fn next(pick: &mut [usize], total: usize) -> bool {
        let n = pick.len();
        let mut i = n;
        while i > 0 {
            i -= 1;
            if pick[i] < total - (n - i) {
                pick[i] += 1;
                for j in i + 1..n {
                    pick[j] = pick[j - 1] + 1;
                }
                return true;
            }
        }
        false
    }
    for (i, p) in pick.iter_mut().enumerate() {
        *p = i;
    }
    loop {
        let system: Vec<(Vec<f64>, f64)> = pick.iter().map(|&i| rows[i].clone()).collect();
        if let Some(x) = solve_square(system) {
            let feasible = rows
                .iter()
                .all(|(r, rhs)| r.iter().zip(&x).map(|(u, v)| u * v).sum::<f64>() <= rhs + 1e-9);
            if feasible {
                let val: f64 = c.iter().zip(&x).map(|(u, v)| u * v).sum();
                best = Some(best.map_or(val, |b: f64| b.max(val)));
            }
        }
        if !next(&mut pick, rows.len()) {
            return best;
        }
    }
}

fn solve_square(mut sys: Vec<(Vec<f64>, f64)>) -> Option<Vec<f64>> {
    let n = sys.len();
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| sys[i].0[col].abs().total_cmp(&sys[j].0[col].abs()))?;
        if sys[p].0[col].abs() < 1e-9 {
            return None;
        }
        sys.swap(col, p);
        for i in 0..n {
            if i != col {
                let f = sys[i].0[col] / sys[col].0[col];
                let (pr, pb) = (sys[col].0.clone(), sys[col].1);
                for (x, y) in sys[i].0.iter_mut().zip(&pr) {
                    *x -= f * y;
                }
                sys[i].1 -= f * pb;
            }
        }
    }
    Some((0..n).map(|i| sys[i].1 / sys[i].0[i]).collect())
}

#[test]
fn simplex_matches_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut optimal, mut infeasible) = (0, 0);
    for case in 0..200 {
        let n = rng.random_range(1..=6usize);
        let m = rng.random_range(0..=12usize);
        let c: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let a: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..n).map(|_| rng.random_range(-5.0..5.0)).collect())
            .collect();
        let b: Vec<f64> = (0..m).map(|_| rng.random_range(-4.0..10.0)).collect();
        let (lo, hi) = if case % 2 == 0 {
            (0.0, 10.0)
        } else {
            (-3.0, 4.0)
        };
        let mut lp = LinearProgram::new(c.clone());
        for j in 0..n {
            lp.set_bounds(j, lo, hi).unwrap();
        }
        for (row, rhs) in a.iter().zip(&b) {
            lp.add_constraint(row.clone(), *rhs).unwrap();
        }
        let sol = solve(&lp).unwrap();
        assert_eq!(
            format!("{sol:?}"),
            format!("{:?}", solve(&lp).unwrap()),
            "case {case} not deterministic"
        );
        match vertex_enumeration(&c, &a, &b, lo, hi) {
            Some(best) => {
                optimal += 1;
                assert_eq!(sol.status, LPStatus::Optimal, "case {case}");
                assert!(
                    (sol.objective_value - best).abs() <= 1e-7,
                    "case {case}: {} vs {best}",
                    sol.objective_value
                );
                assert!(check_feasible(&lp, &sol.x).unwrap().0, "case {case}");
            }
            None => {
                infeasible += 1;
                assert_eq!(sol.status, LPStatus::Infeasible, "case {case}");
            }
        }
    }
    assert!(
        optimal > 50 && infeasible > 5,
        "{optimal} optimal, {infeasible} infeasible"
    );
}
