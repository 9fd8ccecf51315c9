//! LP search for PI Bell expressions maximizing the quantum-to-local ratio
//! at a given state and settings.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde_json::json;

use crate::bellexpr::{
    enumerate_strategy_classes, exact_to_f64, local_bound, symmetric_sums, BoundDirection,
    InequalityJson, PIBellExpression, SettingMultiset,
};
use crate::error::{domain, Error, Result};
use crate::lpsolver::{solve, LPStatus, LinearProgram};
use crate::optimize::{maximize, Coordinate};
use crate::quantumeval::{expectation, AnglePair, StateFamily};
use crate::symstate::SymmetricState;

/// Half-width of the coefficient box.
pub const COEFFICIENT_BOX: f64 = 1e6;

/// Tolerance for the post-solve rechecks.
pub const RECHECK_TOL: f64 = 1e-8;

/// Local-bound slack accepted for the raw expression.
pub const LOCAL_RECHECK_TOL: f64 = 1e-9;

/// Every multiset up to order `m`, constant included.
pub fn full_support(m: usize) -> Vec<SettingMultiset> {
    let mut out = vec![SettingMultiset::EMPTY];
    out.extend(SettingMultiset::all_up_to(m));
    out
}

/// Sorts, deduplicates, and puts the constant first.
fn normalize_support(m: usize, support: &[SettingMultiset]) -> Result<Vec<SettingMultiset>> {
    let mut out: Vec<SettingMultiset> = support.to_vec();
    out.push(SettingMultiset::EMPTY);
    out.sort();
    out.dedup();
    if let Some(s) = out.iter().find(|s| s.order() > m) {
        return domain(format!("multiset {s} does not fit on {m} parties"));
    }
    Ok(out)
}

/// `E_Q(S)` for each support element: the summed correlator of all monomials
/// in the class of `S`, with the constant component 1.
pub fn quantum_point(
    state: &SymmetricState,
    m: usize,
    angles: &AnglePair,
    support: &[SettingMultiset],
) -> Result<Vec<f64>> {
    if m > state.n_parties() {
        return domain(format!(
            "{m} parties requested from a {}-party state",
            state.n_parties()
        ));
    }
    support
        .iter()
        .map(|s| {
            if s.is_constant() {
                return Ok(1.0);
            }
            let mut probe = PIBellExpression::new(m);
            probe.set(*s, 1.0)?;
            expectation(&probe, state, angles)
        })
        .collect()
}

/// Rows `E_λ` for every strategy class on `m` parties.
pub fn strategy_matrix(m: usize, support: &[SettingMultiset]) -> Result<Vec<Vec<f64>>> {
    enumerate_strategy_classes(m)
        .par_iter()
        .map(|class| {
            Ok(symmetric_sums(m, support, class)?
                .into_iter()
                .map(|v| v as f64)
                .collect())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
struct Origin {
    state: SymmetricState,
    angles: AnglePair,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscoveryProblem {
    n_parties: usize,
    support: Vec<SettingMultiset>,
    quantum_point: Vec<f64>,
    strategy_matrix: Vec<Vec<f64>>,
    origin: Option<Origin>,
}

impl DiscoveryProblem {
    /// The problem for `m`-party marginals of `state` at `angles`.
    pub fn build(
        state: &SymmetricState,
        m: usize,
        angles: &AnglePair,
        support: &[SettingMultiset],
    ) -> Result<Self> {
        let support = normalize_support(m, support)?;
        let matrix = strategy_matrix(m, &support)?;
        Self::with_matrix(state, m, angles, support, matrix)
    }

    fn with_matrix(
        state: &SymmetricState,
        m: usize,
        angles: &AnglePair,
        support: Vec<SettingMultiset>,
        strategy_matrix: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let quantum_point = quantum_point(state, m, angles, &support)?;
        Ok(DiscoveryProblem {
            n_parties: m,
            support,
            quantum_point,
            strategy_matrix,
            origin: Some(Origin {
                state: state.clone(),
                angles: *angles,
            }),
        })
    }

    /// A problem from explicit vectors; the support must start with the
    /// constant and every row must have constant component 1.
    pub fn from_parts(
        m: usize,
        support: Vec<SettingMultiset>,
        quantum_point: Vec<f64>,
        strategy_matrix: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if support.first() != Some(&SettingMultiset::EMPTY) {
            return domain("support must start with the constant");
        }
        if quantum_point.len() != support.len() || quantum_point[0] != 1.0 {
            return domain("quantum point must match the support with constant component 1");
        }
        if strategy_matrix
            .iter()
            .any(|r| r.len() != support.len() || r[0] != 1.0)
        {
            return domain("strategy rows must match the support with constant component 1");
        }
        Ok(DiscoveryProblem {
            n_parties: m,
            support,
            quantum_point,
            strategy_matrix,
            origin: None,
        })
    }

    pub fn n_parties(&self) -> usize {
        self.n_parties
    }

    pub fn support(&self) -> &[SettingMultiset] {
        &self.support
    }

    pub fn quantum_point(&self) -> &[f64] {
        &self.quantum_point
    }

    pub fn strategy_matrix(&self) -> &[Vec<f64>] {
        &self.strategy_matrix
    }

    /// `maximize Σ α_S E_Q(S)` subject to `Σ α_S E_λ(S) ≤ 1` for every class,
    /// over the non-constant support inside the coefficient box.
    fn linear_program(&self) -> Result<LinearProgram> {
        let mut lp = LinearProgram::new(self.quantum_point[1..].to_vec());
        for j in 0..lp.n_variables() {
            lp.set_bounds(j, -COEFFICIENT_BOX, COEFFICIENT_BOX)?;
        }
        for row in &self.strategy_matrix {
            lp.add_constraint(row[1..].to_vec(), 1.0)?;
        }
        Ok(lp)
    }

    /// LP optimum `Q/L` without building or checking the expression.
    pub fn ratio(&self) -> Result<f64> {
        let sol = solve(&self.linear_program()?)?;
        match sol.status {
            LPStatus::Optimal => Ok(sol.objective_value),
            LPStatus::Infeasible => Err(Error::Internal("discovery LP infeasible".into())),
            LPStatus::Unbounded => Err(Error::Internal(
                "discovery LP unbounded inside the box".into(),
            )),
        }
    }

    /// Solves the LP and rechecks the result by exact enumeration and, when
    /// the problem came from a state, by direct quantum evaluation.
    pub fn solve(&self) -> Result<DiscoveryResult> {
        let lp = self.linear_program()?;
        let sol = solve(&lp)?;
        match sol.status {
            LPStatus::Optimal => {}
            LPStatus::Infeasible => return Err(Error::Internal("discovery LP infeasible".into())),
            LPStatus::Unbounded => {
                return Err(Error::Internal(
                    "discovery LP unbounded inside the box".into(),
                ))
            }
        }
        let box_hit = sol
            .x
            .iter()
            .any(|a| a.abs() >= COEFFICIENT_BOX * (1.0 - 1e-9));

        let mut expression = PIBellExpression::new(self.n_parties);
        expression.set(SettingMultiset::EMPTY, -1.0)?;
        for (s, &a) in self.support[1..].iter().zip(&sol.x) {
            expression.set(*s, a)?;
        }
        let expression = expression.with_bound(BoundDirection::Max, Some(0.0));
        let ratio = sol.objective_value;
        let q = ratio - 1.0;

        let local_max = exact_to_f64(&local_bound(&expression)?);
        if local_max > LOCAL_RECHECK_TOL * (1.0 + max_abs(&sol.x)) {
            return Err(Error::Internal(format!(
                "discovered expression has local maximum {local_max}"
            )));
        }
        if let Some(origin) = &self.origin {
            let value = expectation(&expression, &origin.state, &origin.angles)?;
            if (value - q).abs() > RECHECK_TOL * (1.0 + max_abs(&sol.x)) {
                return Err(Error::Internal(format!(
                    "quantum recheck {value} differs from LP value {q}"
                )));
            }
        }
        let (rescaled, integer_form) = rescale(&expression)?;
        Ok(DiscoveryResult {
            expression,
            q,
            ratio,
            local_max,
            box_hit,
            rescaled,
            integer_form,
            angles: self.origin.as_ref().map(|o| o.angles),
            state_params: Vec::new(),
        })
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Scales the non-constant part so its smallest coefficient is ±1, snapping
/// to integers when a small common multiplier makes them integral, then sets
/// the constant to the negated exact local bound.
fn rescale(expr: &PIBellExpression) -> Result<(PIBellExpression, bool)> {
    let terms: Vec<(SettingMultiset, f64)> =
        expr.terms().filter(|(s, _)| !s.is_constant()).collect();
    let largest = terms.iter().fold(0.0f64, |m, (_, c)| m.max(c.abs()));
    let mut out = PIBellExpression::new(expr.n_parties());
    if largest == 0.0 {
        return Ok((out.with_bound(BoundDirection::Max, Some(0.0)), true));
    }
    let smallest = terms
        .iter()
        .map(|(_, c)| c.abs())
        .filter(|c| *c > 1e-9 * largest)
        .fold(f64::INFINITY, f64::min);
    let mut integer_form = false;
    let mut scale = 1.0 / smallest;
    for k in 1..=12 {
        let f = k as f64 / smallest;
        if terms.iter().all(|(_, c)| {
            let v = c * f;
            (v - v.round()).abs() <= 1e-6 * v.abs().max(1.0)
        }) {
            scale = f;
            integer_form = true;
            break;
        }
    }
    for (s, c) in &terms {
        let v = c * scale;
        out.set(*s, if integer_form { v.round() } else { v })?;
    }
    let bound = exact_to_f64(&local_bound(&out)?);
    out.set(SettingMultiset::EMPTY, -bound)?;
    Ok((out.with_bound(BoundDirection::Max, Some(0.0)), integer_form))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscoveryResult {
    /// Constant −1, local bound 0.
    pub expression: PIBellExpression,
    pub q: f64,
    /// `Q/L = q + 1`.
    pub ratio: f64,
    /// Exact classical maximum of `expression`.
    pub local_max: f64,
    /// Whether a coefficient reached the safety box.
    pub box_hit: bool,
    /// Same inequality with the smallest coefficient rescaled to ±1 (or
    /// integers) and the constant set to the negated local bound.
    pub rescaled: PIBellExpression,
    pub integer_form: bool,
    pub angles: Option<AnglePair>,
    pub state_params: Vec<f64>,
}

impl DiscoveryResult {
    /// The raw expression in the shared schema with a `meta` block.
    pub fn to_json(&self) -> InequalityJson {
        let mut doc = self.expression.to_json();
        doc.meta = Some(json!({
            "q": self.q,
            "ratio": self.ratio,
            "angles": self.angles.map(|a| [a.phi1, a.phi2]),
            "state_params": self.state_params,
            "box_hit": self.box_hit,
            "rescaled": self.rescaled.to_json(),
        }));
        doc
    }
}

/// Solves the problem for `m`-party marginals of `state` at `angles`.
pub fn solve_discovery(problem: &DiscoveryProblem) -> Result<DiscoveryResult> {
    problem.solve()
}

/// Best discovery over a state family and both setting angles.
///
/// The outer grid-plus-coordinate search maximizes the LP ratio; the
/// strategy matrix is built once.
pub fn optimize_scenario(
    family: &StateFamily,
    m: usize,
    support: &[SettingMultiset],
    grid_step: f64,
) -> Result<DiscoveryResult> {
    if !(grid_step > 0.0) {
        return domain("grid step must be positive");
    }
    if family.n_params() > 3 {
        return domain("state families may have at most 3 parameters");
    }
    if m > family.n_parties() {
        return domain(format!(
            "{m} parties requested from a {}-party family",
            family.n_parties()
        ));
    }
    let support = normalize_support(m, support)?;
    let matrix = strategy_matrix(m, &support)?;
    let k = family.n_params();
    let problem_at = |x: &[f64]| -> Result<DiscoveryProblem> {
        let state = family.state(&x[..k])?;
        let angles = AnglePair::new(x[k], x[k + 1])?;
        DiscoveryProblem::with_matrix(&state, m, &angles, support.clone(), matrix.clone())
    };
    let objective = |x: &[f64]| problem_at(x).and_then(|p| p.ratio()).unwrap_or(f64::NAN);
    let mut coords = family.coordinates(grid_step);
    coords.push(Coordinate::periodic(0.0, TAU, grid_step));
    coords.push(Coordinate::periodic(0.0, TAU, grid_step));
    let best = maximize(objective, &coords, 1e-8);
    let point = canonical_point(family, best.point);
    let mut result = problem_at(&point)?.solve()?;
    result.state_params = point[..k].to_vec();
    Ok(result)
}

/// `Z^{⊗n}` maps `(θ, φ₁, φ₂)` to `(π − θ, π − φ₁, π − φ₂)` for a Dicke pair
/// of opposite excitation parity; report the representative with `θ ≤ π/2`.
fn canonical_point(family: &StateFamily, mut x: Vec<f64>) -> Vec<f64> {
    if let StateFamily::DickePair { first, second, .. } = family {
        if (first + second) % 2 == 1 && x[0] > PI / 2.0 {
            x[0] = PI - x[0];
            x[1] = (PI - x[1]).rem_euclid(TAU);
            x[2] = (PI - x[2]).rem_euclid(TAU);
        }
    }
    x
}

/// Certifies that the origin lies in the interior of the convex hull of the
/// non-constant strategy rows: returns the largest `t` such that some convex
/// combination with every weight `≥ t` hits the origin, and the rank of the
/// rows. Interior means `t > 0` and full rank.
pub fn origin_interior_certificate(problem: &DiscoveryProblem) -> Result<(f64, usize)> {
    let rows: Vec<&[f64]> = problem.strategy_matrix.iter().map(|r| &r[1..]).collect();
    let n_rows = rows.len();
    let dim = problem.support.len() - 1;
    // variables: weights w_λ ≥ 0 and free t (last)
    let mut objective = vec![0.0; n_rows + 1];
    objective[n_rows] = 1.0;
    let mut lp = LinearProgram::new(objective);
    lp.set_free(n_rows)?;
    for d in 0..dim {
        let mut row: Vec<f64> = rows.iter().map(|r| r[d]).collect();
        row.push(0.0);
        lp.add_constraint(row.clone(), 0.0)?;
        lp.add_constraint(row.iter().map(|v| -v).collect(), 0.0)?;
    }
    let mut sum = vec![1.0; n_rows];
    sum.push(0.0);
    lp.add_constraint(sum.clone(), 1.0)?;
    lp.add_constraint(sum.iter().map(|v| -v).collect(), -1.0)?;
    for i in 0..n_rows {
        let mut row = vec![0.0; n_rows + 1];
        row[i] = -1.0;
        row[n_rows] = 1.0;
        lp.add_constraint(row, 0.0)?;
    }
    let sol = solve(&lp)?;
    let t = match sol.status {
        LPStatus::Optimal => sol.objective_value,
        _ => f64::NEG_INFINITY,
    };
    Ok((t, rank(&rows)))
}

fn rank(rows: &[&[f64]]) -> usize {
    let mut a: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
    let cols = a.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..a.len()).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())) else {
            break;
        };
        if a[p][c].abs() < 1e-9 {
            continue;
        }
        a.swap(r, p);
        for i in 0..a.len() {
            if i != r {
                let f = a[i][c] / a[r][c];
                let pivot = a[r].clone();
                for (x, y) in a[i].iter_mut().zip(&pivot) {
                    *x -= f * y;
                }
            }
        }
        r += 1;
    }
    r
}
