//! Deterministic box-constrained maximization: a full grid followed by
//! coordinate search with step halving.

use rayon::prelude::*;

/// One search coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coordinate {
    pub lo: f64,
    pub hi: f64,
    pub grid_step: f64,
    /// Wraps around at `hi` instead of clamping.
    pub periodic: bool,
}

impl Coordinate {
    pub fn periodic(lo: f64, hi: f64, grid_step: f64) -> Self {
        Coordinate {
            lo,
            hi,
            grid_step,
            periodic: true,
        }
    }

    pub fn bounded(lo: f64, hi: f64, grid_step: f64) -> Self {
        Coordinate {
            lo,
            hi,
            grid_step,
            periodic: false,
        }
    }

    fn grid(&self) -> Vec<f64> {
        let span = self.hi - self.lo;
        if !(span > 0.0) {
            return vec![self.lo];
        }
        let mut count = (span / self.grid_step).ceil().max(1.0) as usize;
        if !self.periodic {
            count += 1;
        }
        let step = if self.periodic {
            span / count as f64
        } else {
            span / (count - 1) as f64
        };
        (0..count).map(|i| self.lo + i as f64 * step).collect()
    }

    fn clamp(&self, x: f64) -> f64 {
        if self.periodic {
            let span = self.hi - self.lo;
            self.lo + (x - self.lo).rem_euclid(span)
        } else {
            x.clamp(self.lo, self.hi)
        }
    }
}

/// Result of [`maximize`].
#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub point: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

fn score(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// Maximizes `f` over the box. Grid ties resolve to the lexicographically
/// lowest point, so the result does not depend on thread scheduling.
pub fn maximize<F>(f: F, coords: &[Coordinate], min_step: f64) -> Optimum
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let grids: Vec<Vec<f64>> = coords.iter().map(Coordinate::grid).collect();
    let total: usize = grids.iter().map(Vec::len).product();
    let point_at = |mut idx: usize| -> Vec<f64> {
        let mut p = vec![0.0; grids.len()];
        for d in (0..grids.len()).rev() {
            p[d] = grids[d][idx % grids[d].len()];
            idx /= grids[d].len();
        }
        p
    };
    let (best_idx, best_val) = (0..total)
        .into_par_iter()
        .map(|i| (i, score(f(&point_at(i)))))
        .reduce(
            || (usize::MAX, f64::NEG_INFINITY),
            |a, b| {
                if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
                    b
                } else {
                    a
                }
            },
        );
    let mut x = point_at(best_idx.min(total.saturating_sub(1)));
    let mut fx = best_val;
    let mut evaluations = total;

    let mut steps: Vec<f64> = coords.iter().map(|c| c.grid_step).collect();
    let mut rounds = 0;
    while steps.iter().cloned().fold(0.0, f64::max) >= min_step && rounds < 100_000 {
        rounds += 1;
        let mut improved = false;
        for d in 0..coords.len() {
            loop {
                let mut best_move: Option<(Vec<f64>, f64)> = None;
                for dir in [1.0, -1.0] {
                    let mut y = x.clone();
                    y[d] = coords[d].clamp(x[d] + dir * steps[d]);
                    if y[d] == x[d] {
                        continue;
                    }
                    let fy = score(f(&y));
                    evaluations += 1;
                    if fy > fx && best_move.as_ref().is_none_or(|(_, v)| fy > *v) {
                        best_move = Some((y, fy));
                    }
                }
                match best_move {
                    Some((y, fy)) => {
                        x = y;
                        fx = fy;
                        improved = true;
                    }
                    None => break,
                }
            }
        }
        if !improved {
            for s in &mut steps {
                *s *= 0.5;
            }
        }
    }
    Optimum {
        point: x,
        value: fx,
        evaluations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_smooth_maximum() {
        let f = |x: &[f64]| -(x[0] - 0.3).powi(2) - 2.0 * (x[1] + 1.1).powi(2);
        let o = maximize(
            f,
            &[
                Coordinate::bounded(-2.0, 2.0, 0.25),
                Coordinate::bounded(-2.0, 2.0, 0.25),
            ],
            1e-9,
        );
        assert!((o.point[0] - 0.3).abs() < 1e-7 && (o.point[1] + 1.1).abs() < 1e-7);
    }

    #[test]
    fn periodic_wraps() {
        let f = |x: &[f64]| x[0].cos();
        let o = maximize(
            f,
            &[Coordinate::periodic(0.5, 0.5 + std::f64::consts::TAU, 0.3)],
            1e-10,
        );
        assert!((o.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic() {
        let f = |x: &[f64]| (3.0 * x[0]).sin() * (2.0 * x[1]).cos();
        let c = [
            Coordinate::periodic(0.0, 6.0, 0.1),
            Coordinate::periodic(0.0, 6.0, 0.1),
        ];
        assert_eq!(maximize(f, &c, 1e-8), maximize(f, &c, 1e-8));
    }
}
