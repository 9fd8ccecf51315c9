//! Dense two-phase primal simplex for small linear programs
//! `maximize c·x subject to A·x ≤ b, lo ≤ x ≤ hi`.

use crate::error::{capacity, domain, Error, Result};

pub const LP_MAX_CONSTRAINTS: usize = 10_000;
pub const LP_MAX_VARIABLES: usize = 1_000;
pub const PIVOT_TOL: f64 = 1e-10;
pub const FEASIBILITY_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl LinearProgram {
    /// A program over `objective.len()` variables, each defaulting to `x ≥ 0`.
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram {
            objective,
            rows: Vec::new(),
            rhs: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn n_variables(&self) -> usize {
        self.objective.len()
    }

    pub fn n_constraints(&self) -> usize {
        self.rows.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    /// Adds `row · x ≤ rhs`.
    pub fn add_constraint(&mut self, row: Vec<f64>, rhs: f64) -> Result<()> {
        if row.len() != self.n_variables() {
            return domain(format!(
                "constraint has {} entries, expected {}",
                row.len(),
                self.n_variables()
            ));
        }
        if !rhs.is_finite() || row.iter().any(|v| !v.is_finite()) {
            return domain("constraint data must be finite");
        }
        self.rows.push(row);
        self.rhs.push(rhs);
        Ok(())
    }

    /// Sets `lo ≤ x_j ≤ hi`; infinite ends mean unbounded.
    pub fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) -> Result<()> {
        if j >= self.n_variables() {
            return domain(format!("variable {j} out of range"));
        }
        if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
            return domain(format!("invalid bounds [{lo}, {hi}] for variable {j}"));
        }
        self.lower[j] = lo;
        self.upper[j] = hi;
        Ok(())
    }

    pub fn set_free(&mut self, j: usize) -> Result<()> {
        self.set_bounds(j, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lower[j], self.upper[j])
    }

    fn validate(&self) -> Result<()> {
        if self.rows.len() > LP_MAX_CONSTRAINTS {
            return capacity(format!(
                "{} constraints exceed {LP_MAX_CONSTRAINTS}",
                self.rows.len()
            ));
        }
        if self.n_variables() > LP_MAX_VARIABLES {
            return capacity(format!(
                "{} variables exceed {LP_MAX_VARIABLES}",
                self.n_variables()
            ));
        }
        if self.objective.iter().any(|v| !v.is_finite()) {
            return domain("objective must be finite");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LPStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// `x` is empty unless optimal; `objective_value` is `+∞` when unbounded and
/// NaN when infeasible.
#[derive(Debug, Clone, PartialEq)]
pub struct LPSolution {
    pub status: LPStatus,
    pub x: Vec<f64>,
    pub objective_value: f64,
}

/// How an original variable maps to nonnegative tableau columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// `x = offset + x'`
    Shift { col: usize, offset: f64 },
    /// `x = offset − x'`
    Reflect { col: usize, offset: f64 },
    /// `x = p − n`
    Split { pos: usize, neg: usize },
}

struct Tableau {
    /// rows × (cols + 1), last column is the right-hand side
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.t[i][self.cols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pr) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pr;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    /// Maximizes `cost · x` over columns flagged in `allowed`, Bland's rule.
    fn run(&mut self, cost: &[f64], allowed: &[bool]) -> Result<Outcome> {
        for _ in 0..MAX_PIVOTS {
            let mut entering = None;
            for j in 0..self.cols {
                if !allowed[j] || self.basis.contains(&j) {
                    continue;
                }
                let mut reduced = cost[j];
                for (i, &b) in self.basis.iter().enumerate() {
                    reduced -= cost[b] * self.t[i][j];
                }
                if reduced > PIVOT_TOL {
                    entering = Some(j);
                    break;
                }
            }
            let Some(c) = entering else {
                return Ok(Outcome::Optimal);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.t.len() {
                let a = self.t[i][c];
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i) / a;
                    let better = match leave {
                        None => true,
                        Some((r, best)) => {
                            ratio < best - PIVOT_TOL
                                || (ratio <= best + PIVOT_TOL && self.basis[i] < self.basis[r])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else {
                return Ok(Outcome::Unbounded);
            };
            self.pivot(r, c);
        }
        Err(Error::Internal("simplex pivot limit reached".into()))
    }
}

/// Solves the program by two-phase primal simplex.
pub fn solve(lp: &LinearProgram) -> Result<LPSolution> {
    lp.validate()?;
    let n = lp.n_variables();

    let mut maps = Vec::with_capacity(n);
    let mut cols = 0;
    // (column, cap) rows `x' ≤ cap`
    let mut caps: Vec<(usize, f64)> = Vec::new();
    for j in 0..n {
        let (lo, hi) = (lp.lower[j], lp.upper[j]);
        let map = if lo.is_finite() && hi.is_finite() && lo < 0.0 && hi > 0.0 {
            caps.push((cols, hi));
            caps.push((cols + 1, -lo));
            cols += 2;
            VarMap::Split {
                pos: cols - 2,
                neg: cols - 1,
            }
        } else if lo.is_finite() {
            if hi.is_finite() {
                caps.push((cols, hi - lo));
            }
            cols += 1;
            VarMap::Shift {
                col: cols - 1,
                offset: lo,
            }
        } else if hi.is_finite() {
            cols += 1;
            VarMap::Reflect {
                col: cols - 1,
                offset: hi,
            }
        } else {
            cols += 2;
            VarMap::Split {
                pos: cols - 2,
                neg: cols - 1,
            }
        };
        maps.push(map);
    }

    // Rows in terms of the structural columns.
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::with_capacity(lp.rows.len() + caps.len());
    for (a, &b) in lp.rows.iter().zip(&lp.rhs) {
        let mut row = vec![0.0; cols];
        let mut rhs = b;
        for (j, &aj) in a.iter().enumerate() {
            if aj == 0.0 {
                continue;
            }
            match maps[j] {
                VarMap::Shift { col, offset } => {
                    row[col] += aj;
                    rhs -= aj * offset;
                }
                VarMap::Reflect { col, offset } => {
                    row[col] -= aj;
                    rhs -= aj * offset;
                }
                VarMap::Split { pos, neg } => {
                    row[pos] += aj;
                    row[neg] -= aj;
                }
            }
        }
        rows.push((row, rhs));
    }
    for &(col, cap) in &caps {
        let mut row = vec![0.0; cols];
        row[col] = 1.0;
        rows.push((row, cap));
    }

    let m = rows.len();
    let n_art = rows.iter().filter(|(_, b)| *b < 0.0).count();
    let total = cols + m + n_art;
    let mut t = vec![vec![0.0; total + 1]; m];
    let mut basis = vec![0; m];
    let mut next_art = cols + m;
    for (i, (row, b)) in rows.into_iter().enumerate() {
        let sign = if b < 0.0 { -1.0 } else { 1.0 };
        for (v, a) in t[i].iter_mut().zip(&row) {
            *v = sign * a;
        }
        t[i][cols + i] = sign;
        t[i][total] = sign * b;
        if b < 0.0 {
            t[i][next_art] = 1.0;
            basis[i] = next_art;
            next_art += 1;
        } else {
            basis[i] = cols + i;
        }
    }
    let mut tab = Tableau {
        t,
        basis,
        cols: total,
    };

    let b_scale = 1.0 + tab.t.iter().map(|r| r[total].abs()).fold(0.0, f64::max);
    if n_art > 0 {
        let mut cost = vec![0.0; total];
        for c in cost.iter_mut().skip(cols + m) {
            *c = -1.0;
        }
        let allowed = vec![true; total];
        tab.run(&cost, &allowed)?;
        let infeasibility: f64 = tab
            .basis
            .iter()
            .enumerate()
            .filter(|(_, &b)| b >= cols + m)
            .map(|(i, _)| tab.rhs(i))
            .sum();
        if infeasibility > FEASIBILITY_TOL * b_scale {
            return Ok(LPSolution {
                status: LPStatus::Infeasible,
                x: vec![],
                objective_value: f64::NAN,
            });
        }
        // Drive remaining artificials out of the basis; drop redundant rows.
        let mut i = 0;
        while i < tab.t.len() {
            if tab.basis[i] >= cols + m {
                let col = (0..cols + m).find(|&j| tab.t[i][j].abs() > PIVOT_TOL);
                match col {
                    Some(j) => tab.pivot(i, j),
                    None => {
                        tab.t.remove(i);
                        tab.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }

    let mut cost = vec![0.0; total];
    for (j, map) in maps.iter().enumerate() {
        let c = lp.objective[j];
        match *map {
            VarMap::Shift { col, .. } => cost[col] += c,
            VarMap::Reflect { col, .. } => cost[col] -= c,
            VarMap::Split { pos, neg } => {
                cost[pos] += c;
                cost[neg] -= c;
            }
        }
    }
    let allowed: Vec<bool> = (0..total).map(|j| j < cols + m).collect();
    if let Outcome::Unbounded = tab.run(&cost, &allowed)? {
        return Ok(LPSolution {
            status: LPStatus::Unbounded,
            x: vec![],
            objective_value: f64::INFINITY,
        });
    }

    let mut values = vec![0.0; total];
    for (i, &b) in tab.basis.iter().enumerate() {
        values[b] = tab.rhs(i).max(0.0);
    }
    let x: Vec<f64> = maps
        .iter()
        .map(|map| match *map {
            VarMap::Shift { col, offset } => offset + values[col],
            VarMap::Reflect { col, offset } => offset - values[col],
            VarMap::Split { pos, neg } => values[pos] - values[neg],
        })
        .zip(lp.lower.iter().zip(&lp.upper))
        .map(|(v, (&lo, &hi))| v.clamp(lo, hi))
        .collect();
    let objective_value = x.iter().zip(&lp.objective).map(|(a, b)| a * b).sum();
    Ok(LPSolution {
        status: LPStatus::Optimal,
        x,
        objective_value,
    })
}

/// Whether `x` satisfies every row and bound within `1e-9`, with the worst
/// violation.
pub fn check_feasible(lp: &LinearProgram, x: &[f64]) -> Result<(bool, f64)> {
    if x.len() != lp.n_variables() {
        return domain(format!(
            "point has {} entries, expected {}",
            x.len(),
            lp.n_variables()
        ));
    }
    let mut worst: f64 = 0.0;
    for (row, &b) in lp.rows.iter().zip(&lp.rhs) {
        let lhs: f64 = row.iter().zip(x).map(|(a, v)| a * v).sum();
        worst = worst.max(lhs - b);
    }
    for (j, &v) in x.iter().enumerate() {
        worst = worst.max(lp.lower[j] - v).max(v - lp.upper[j]);
    }
    Ok((worst <= FEASIBILITY_TOL, worst))
}
