//! One function per subcommand, each producing a [`RunReport`].

use std::f64::consts::{PI, SQRT_2};

use num_bigint::BigInt;
use num_rational::BigRational;
use polybell_core::bellexpr::{
    brute_force_bound, five_party_expression, four_party_expression, local_bound,
    two_body_expression, two_body_parameters, SettingMultiset,
};
use polybell_core::discovery::{optimize_scenario, DiscoveryProblem, DiscoveryResult};
use polybell_core::quantumeval::{
    chsh_pair_values, circle_state, expectation, max_quantum_value, mermin_expectation,
    mermin_operator_value, mermin_optimal_state, mermin_violates, monogamy_sample_check,
    optimize_expectation, per_subset_values, visibility, AnglePair, ChshSettings, MerminForm,
    QuantumHost, StateFamily, DEFAULT_GRID_STEP,
};
use polybell_core::symstate::{dicke_marginal_exact, make_dicke, superpose};
use polybell_core::{Error as CoreError, C64};

use crate::report::{Row, RunReport};
use crate::CliError;

fn int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

pub fn chsh_circle(steps: usize, samples: Option<usize>, seed: u64) -> Result<RunReport, CliError> {
    if steps < 2 {
        return Err(CliError::Usage(format!(
            "need at least 2 steps, got {steps}"
        )));
    }
    let mut report = RunReport::new("chsh-circle");
    report.input("steps", steps);
    let settings = ChshSettings::circle();
    for i in 0..steps {
        let theta = PI / 2.0 * i as f64 / (steps - 1) as f64;
        let (ab, ac) = chsh_pair_values(&circle_state(theta), &settings)?;
        report.push(
            Row::check(format!("theta[{i}]"), ab * ab + ac * ac, 8.0, 1e-12)
                .with("theta", theta)
                .with("B_AB", ab)
                .with("B_AC", ac)
                .with("B_AB_expected", 2.0 * SQRT_2 * theta.sin())
                .with("B_AC_expected", 2.0 * SQRT_2 * theta.cos()),
        );
    }
    if let Some(trials) = samples {
        report.input("samples", trials);
        report.input("seed", seed);
        let worst = monogamy_sample_check(trials, seed)?;
        report.push(Row::at_most(
            "max B_AB^2+B_AC^2 over random samples",
            worst,
            8.0 + 1e-9,
        ));
    }
    Ok(report)
}

pub fn mermin_scan(n_min: usize, n_max: usize) -> Result<RunReport, CliError> {
    if !(3 <= n_min && n_min <= n_max && n_max <= 12) {
        return Err(CliError::Usage(format!(
            "need 3 ≤ n-min ≤ n-max ≤ 12, got {n_min}..{n_max}"
        )));
    }
    let mut report = RunReport::new("mermin-scan");
    report.input("n_min", n_min);
    report.input("n_max", n_max);
    let mut first = None;
    for n in n_min..=n_max {
        let state = mermin_optimal_state(n)?;
        let closed = mermin_expectation(&state)?;
        let oracle = mermin_operator_value(&state, MerminForm::Ghz)?;
        let violates = mermin_violates(closed);
        if violates && first.is_none() {
            first = Some(n);
        }
        report.push(
            Row::check(
                format!("N={n} closed form vs operator"),
                closed,
                oracle,
                1e-12,
            )
            .with("N", n as f64)
            .with("violation", if violates { 1.0 } else { 0.0 }),
        );
    }
    let anchors = [
        (4, 1.0, 4.0 * f64::EPSILON),
        (5, 1.264911, 1e-6),
        (10, 16.0 / 10f64.sqrt(), 1e-9),
    ];
    for (n, want, tol) in anchors {
        if (n_min..=n_max).contains(&n) {
            let v = mermin_expectation(&mermin_optimal_state(n)?)?;
            report.push(Row::check(format!("N={n} value"), v, want, tol));
        }
    }
    if n_min <= 5 && n_max >= 5 {
        let first = first.map_or(f64::NAN, |n| n as f64);
        report.push(Row::check("first violating N", first, 5.0, 0.0));
    }
    Ok(report)
}

fn theta_state(theta: f64) -> Result<polybell_core::SymmetricState, CoreError> {
    superpose(&[
        (C64::new(theta.cos(), 0.0), &make_dicke(4, 1)?),
        (C64::new(theta.sin(), 0.0), &make_dicke(4, 4)?),
    ])
}

pub fn verify_four_party() -> Result<RunReport, CliError> {
    let mut report = RunReport::new("verify four-party");
    let expr = four_party_expression();
    report.push(Row::exact(
        "local bound (classes)",
        &local_bound(&expr)?,
        &int(6),
    ));
    report.push(Row::exact(
        "local bound (brute force)",
        &brute_force_bound(&expr)?,
        &int(6),
    ));
    let angles = AnglePair::new(2.739, 0.847)?;
    let state = theta_state(0.144)?;
    let q = expectation(&expr, &state, &angles)?;
    report.push(Row::check("value at theta=0.144", q, 6.154, 2e-3));
    for (i, v) in per_subset_values(&expr, &state.to_dense()?, &angles)?
        .into_iter()
        .enumerate()
    {
        report.push(Row::check(format!("value on subset {i}"), v, 6.154, 2e-3));
    }
    let dicke = expectation(&expr, &make_dicke(4, 1)?, &AnglePair::new(2.640, 0.986)?)?;
    report.push(Row::check("value on Dicke D(4,1)", dicke, 6.064, 2e-3));
    report.push(Row::check(
        "critical visibility",
        visibility(&expr, q)?,
        0.975,
        1e-3,
    ));
    let family = StateFamily::DickePair {
        n: 4,
        first: 1,
        second: 4,
    };
    let (best, params, at) = optimize_expectation(&expr, &family, 0.1)?;
    report.push(
        Row::at_least("optimized value", best, 6.152)
            .with("theta", params[0])
            .with("phi1", at.phi1)
            .with("phi2", at.phi2),
    );
    Ok(report)
}

fn two_body_angles() -> Result<AnglePair, CoreError> {
    let s = (21.0f64 / 22.0).asin();
    AnglePair::new(PI - s, s)
}

pub fn verify_two_body(n: Option<usize>, max_n: usize) -> Result<RunReport, CliError> {
    let mut report = RunReport::new("verify two-body");
    match n {
        Some(n) => {
            if !(4..=1000).contains(&n) {
                return Err(CliError::Usage(format!(
                    "two-body needs 4 ≤ N ≤ 1000, got {n}"
                )));
            }
            report.input("n", n);
            two_body_single(&mut report, n)?;
        }
        None => {
            if !(4..=1000).contains(&max_n) {
                return Err(CliError::Usage(format!(
                    "--max-n must be in 4..=1000, got {max_n}"
                )));
            }
            report.input("max_n", max_n);
            for n in 4..=max_n {
                let expr = two_body_expression(n)?;
                report.push(Row::exact(
                    format!("N={n} minimum (classes)"),
                    &local_bound(&expr)?,
                    &int(0),
                ));
                if n <= 10 {
                    report.push(Row::exact(
                        format!("N={n} minimum (brute force)"),
                        &brute_force_bound(&expr)?,
                        &int(0),
                    ));
                }
            }
            if max_n >= 17 {
                two_body_single(&mut report, 17)?;
            }
        }
    }
    Ok(report)
}

fn two_body_single(report: &mut RunReport, n: usize) -> Result<(), CliError> {
    let (l, alpha) = two_body_parameters(n);
    let expected_l = 3 * ((n as i64 - 3).pow(2) + n as i64 - 1);
    let expected_alpha = -3 * (n as i64 - 3);
    report.push(Row::check(format!("N={n} L"), l, expected_l as f64, 0.0));
    report.push(Row::check(
        format!("N={n} alpha"),
        alpha,
        expected_alpha as f64,
        0.0,
    ));
    let expr = two_body_expression(n)?;
    report.push(Row::exact(
        format!("N={n} minimum"),
        &local_bound(&expr)?,
        &int(0),
    ));
    let q = expectation(&expr, &make_dicke(n + 1, 1)?, &two_body_angles()?)?;
    if n == 17 {
        report.push(Row::check("N=17 value on D(18,1)", q, -4.0 / 99.0, 1e-12));
        let diag = dicke_marginal_exact(18, 1, 2)?;
        let want = [
            BigRational::new(8.into(), 9.into()),
            BigRational::new(1.into(), 9.into()),
            int(0),
        ];
        for (label, (got, want)) in ["rho2 |00><00|", "rho2 |psi+><psi+|", "rho2 |11><11|"]
            .iter()
            .zip(diag.iter().zip(&want))
        {
            report.push(Row::exact(*label, got, want));
        }
    } else {
        report.push(Row::info(format!("N={n} value on D({},1)", n + 1), q));
    }
    Ok(())
}

pub fn verify_six_qubit() -> Result<RunReport, CliError> {
    let mut report = RunReport::new("verify six-qubit");
    let expr = five_party_expression();
    report.push(Row::exact("local bound", &local_bound(&expr)?, &int(6)));
    let q = expectation(
        &expr,
        &make_dicke(6, 3)?,
        &AnglePair::new(10.6852, 5.92112)?,
    )?;
    report.push(Row::check("value on D(6,3) marginal", q, 7.8215, 1e-3));
    report.push(Row::check(
        "critical visibility",
        visibility(&expr, q)?,
        0.7671,
        2e-4,
    ));
    let (max, at) = max_quantum_value(&expr, QuantumHost::Symmetric(6), DEFAULT_GRID_STEP)?;
    report.push(
        Row::check("maximum over symmetric six-qubit states", max, 7.8771, 5e-3)
            .with("phi1", at.phi1)
            .with("phi2", at.phi2),
    );
    Ok(report)
}

pub enum DiscoverSource {
    State(polybell_core::SymmetricState),
    Family(StateFamily),
}

pub struct DiscoverArgs {
    pub source: DiscoverSource,
    pub parties: usize,
    pub angles: Option<AnglePair>,
    pub grid_step: f64,
    pub support: Vec<SettingMultiset>,
}

pub fn discover(args: &DiscoverArgs) -> Result<(RunReport, DiscoveryResult), CliError> {
    let mut report = RunReport::new("discover");
    report.input("parties", args.parties);
    let family = match &args.source {
        DiscoverSource::State(s) => StateFamily::Fixed(s.clone()),
        DiscoverSource::Family(f) => f.clone(),
    };
    if args.parties > family.n_parties() {
        return Err(CliError::Usage(format!(
            "{} parties exceed the {}-qubit state",
            args.parties,
            family.n_parties()
        )));
    }
    let mut support = vec![SettingMultiset::EMPTY];
    support.extend(args.support.iter().copied());
    let result = match (args.angles, &args.source) {
        (Some(angles), DiscoverSource::State(state)) => {
            DiscoveryProblem::build(state, args.parties, &angles, &support)?.solve()?
        }
        (Some(_), DiscoverSource::Family(_)) => {
            return Err(CliError::Usage("a state family needs --optimize".into()));
        }
        (None, _) => optimize_scenario(&family, args.parties, &support, args.grid_step)?,
    };
    let angles = result.angles.expect("built from a state");
    let state = family.state(&result.state_params)?;
    let recheck = expectation(&result.expression, &state, &angles)?;
    report.push(Row::info("q", result.q));
    report.push(
        Row::info("ratio Q/L", result.ratio)
            .with("phi1", angles.phi1)
            .with("phi2", angles.phi2),
    );
    for (i, p) in result.state_params.iter().enumerate() {
        report.push(Row::info(format!("state parameter {i}"), *p));
    }
    report.push(Row::at_most(
        "local maximum by enumeration",
        result.local_max,
        1e-9,
    ));
    report.push(Row::check("quantum recheck", recheck, result.q, 1e-8));
    report.push(Row::check(
        "coefficient box reached",
        if result.box_hit { 1.0 } else { 0.0 },
        0.0,
        0.0,
    ));
    Ok((report, result))
}
