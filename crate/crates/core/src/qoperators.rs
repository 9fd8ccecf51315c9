//! Qubit observables, full Bell operators and a Hermitian eigensolver.

use std::f64::consts::TAU;

use crate::bellexpr::PIBellExpression;
use crate::error::{capacity, domain, Result};
use crate::math::{CMatrix, C64, ONE, ZERO};

/// Largest party count for which [`bell_operator`] materializes a matrix.
pub const BELL_OPERATOR_MAX_PARTIES: usize = 12;

const HERMITIAN_TOL: f64 = 1e-12;

/// A complex matrix known to equal its conjugate transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    /// Checks Hermiticity to `1e-12` relative to the largest entry.
    pub fn new(m: CMatrix) -> Result<Self> {
        let scale = m.as_slice().iter().map(|x| x.norm()).fold(1.0, f64::max);
        let defect = m.hermiticity_defect();
        if !(defect <= HERMITIAN_TOL * scale) {
            return domain(format!("matrix is not Hermitian (defect {defect:e})"));
        }
        Ok(Self::symmetrized(m))
    }

    /// `(M + M†) / 2`, with no check.
    pub(crate) fn symmetrized(m: CMatrix) -> Self {
        let mut h = m.adjoint();
        h.add_scaled(&m, ONE);
        HermitianMatrix(h.scale(C64::new(0.5, 0.0)))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    /// `Tr(H ρ)`, real part.
    pub fn expectation(&self, rho: &CMatrix) -> f64 {
        self.0.trace_product(rho).re
    }

    fn is_real(&self) -> bool {
        self.0.as_slice().iter().all(|x| x.im == 0.0)
    }
}

/// An observable `cos φ σx + sin φ σz` in the xz plane of the Bloch sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XZObservable {
    angle: f64,
}

impl XZObservable {
    pub fn new(angle: f64) -> Result<Self> {
        if !angle.is_finite() {
            return domain("observable angle must be finite");
        }
        Ok(XZObservable {
            angle: reduce_angle(angle),
        })
    }

    /// The angle reduced to `[0, 2π)`.
    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn matrix(&self) -> HermitianMatrix {
        let (s, c) = self.angle.sin_cos();
        HermitianMatrix(CMatrix::from_real(2, &[s, c, c, -s]))
    }
}

pub(crate) fn reduce_angle(angle: f64) -> f64 {
    let r = angle.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// An observable `v · σ` for a unit Bloch vector `v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochObservable {
    direction: [f64; 3],
}

impl BlochObservable {
    pub fn new(direction: [f64; 3]) -> Result<Self> {
        let norm = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !((norm - 1.0).abs() <= 1e-9) {
            return domain(format!("Bloch vector has norm {norm}, expected 1"));
        }
        Ok(BlochObservable {
            direction: direction.map(|x| x / norm),
        })
    }

    /// Normalizes a nonzero vector.
    pub fn along(v: [f64; 3]) -> Result<Self> {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return domain("cannot normalize a zero Bloch vector");
        }
        Self::new(v.map(|x| x / norm))
    }

    pub fn direction(&self) -> [f64; 3] {
        self.direction
    }

    pub fn matrix(&self) -> HermitianMatrix {
        let [x, y, z] = self.direction;
        HermitianMatrix(CMatrix::from_vec(
            2,
            vec![
                C64::new(z, 0.0),
                C64::new(x, -y),
                C64::new(x, y),
                C64::new(-z, 0.0),
            ],
        ))
    }
}

/// `cos φ σx + sin φ σz`.
pub fn xz_observable(angle: f64) -> Result<HermitianMatrix> {
    Ok(XZObservable::new(angle)?.matrix())
}

/// `v · (σx, σy, σz)`.
pub fn bloch_observable(v: [f64; 3]) -> Result<HermitianMatrix> {
    Ok(BlochObservable::new(v)?.matrix())
}

/// The `2^m`-dimensional operator of a PI expression when every party
/// measures `settings[0]` for setting 1 and `settings[1]` for setting 2.
///
/// Each multiset term becomes the sum of tensor products over all distinct
/// assignments of its settings to parties, padded with identities. The
/// products are generated by expanding `⊗_i (I + u A₁ + v A₂)` and reading off
/// the `u^p v^q` coefficient.
pub fn bell_operator(
    expr: &PIBellExpression,
    settings: [&HermitianMatrix; 2],
) -> Result<HermitianMatrix> {
    let m = expr.n_parties();
    if m > BELL_OPERATOR_MAX_PARTIES {
        return capacity(format!(
            "Bell operator on {m} parties exceeds the {BELL_OPERATOR_MAX_PARTIES}-party guard"
        ));
    }
    for s in settings {
        if s.dim() != 2 {
            return domain("setting observables must be 2×2");
        }
    }
    let max_ones = expr.terms().map(|(s, _)| s.ones()).max().unwrap_or(0);
    let max_twos = expr.terms().map(|(s, _)| s.twos()).max().unwrap_or(0);
    let (a1, a2) = (settings[0].matrix(), settings[1].matrix());
    let id2 = CMatrix::identity(2);

    // table[p][q] holds the symmetrized operator on the parties seen so far
    let mut table: Vec<Vec<Option<CMatrix>>> = vec![vec![None; max_twos + 1]; max_ones + 1];
    table[0][0] = Some(CMatrix::identity(1));
    for _ in 0..m {
        let mut next: Vec<Vec<Option<CMatrix>>> = vec![vec![None; max_twos + 1]; max_ones + 1];
        for p in 0..=max_ones {
            for q in 0..=max_twos {
                let mut acc: Option<CMatrix> = None;
                let mut push = |src: &Option<CMatrix>, factor: &CMatrix| {
                    if let Some(op) = src {
                        let term = op.kron(factor);
                        match acc.as_mut() {
                            Some(a) => a.add_scaled(&term, ONE),
                            None => acc = Some(term),
                        }
                    }
                };
                push(&table[p][q], &id2);
                if p > 0 {
                    push(&table[p - 1][q], a1);
                }
                if q > 0 {
                    push(&table[p][q - 1], a2);
                }
                next[p][q] = acc;
            }
        }
        table = next;
    }

    let dim = 1usize << m;
    let mut out = CMatrix::zeros(dim);
    for (s, c) in expr.terms() {
        match &table[s.ones()][s.twos()] {
            Some(op) => out.add_scaled(op, C64::new(c, 0.0)),
            None => {
                return Err(crate::Error::Internal(format!(
                    "no operator for multiset {s} on {m} parties"
                )))
            }
        }
    }
    HermitianMatrix::new(out)
}

/// All eigenvalues, ascending.
pub fn eigenvalues(h: &HermitianMatrix) -> Vec<f64> {
    let d = h.dim();
    let m = h.matrix();
    if h.is_real() {
        let a: Vec<f64> = m.as_slice().iter().map(|x| x.re).collect();
        return jacobi_eigenvalues(a, d);
    }
    // [[Re, -Im], [Im, Re]] carries each eigenvalue twice
    let n = 2 * d;
    let mut a = vec![0.0; n * n];
    for i in 0..d {
        for j in 0..d {
            let z = m[(i, j)];
            a[i * n + j] = z.re;
            a[(i + d) * n + j + d] = z.re;
            a[i * n + j + d] = -z.im;
            a[(i + d) * n + j] = z.im;
        }
    }
    jacobi_eigenvalues(a, n).into_iter().step_by(2).collect()
}

/// Largest eigenvalue.
pub fn eigen_max(h: &HermitianMatrix) -> f64 {
    eigenvalues(h).last().copied().unwrap_or(f64::NAN)
}

/// Cyclic Jacobi rotations on a dense real symmetric matrix.
fn jacobi_eigenvalues(mut a: Vec<f64>, n: usize) -> Vec<f64> {
    let frob: f64 = a.iter().map(|x| x * x).sum();
    for _sweep in 0..64 {
        let off: f64 = (0..n)
            .flat_map(|p| (0..n).filter(move |&q| q != p).map(move |q| (p, q)))
            .map(|(p, q)| a[p * n + q] * a[p * n + q])
            .sum();
        if off <= 1e-32 * frob || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    let new_kp = c * akp - s * akq;
                    let new_kq = s * akp + c * akq;
                    a[k * n + p] = new_kp;
                    a[p * n + k] = new_kp;
                    a[k * n + q] = new_kq;
                    a[q * n + k] = new_kq;
                }
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    eig.sort_by(f64::total_cmp);
    eig
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_real(2, &[0.0, 1.0, 1.0, 0.0])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_real(2, &[1.0, 0.0, 0.0, -1.0])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_vec(2, vec![ZERO, C64::new(0.0, -1.0), C64::new(0.0, 1.0), ZERO])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bellexpr::{chsh_expression, PIBellExpression, SettingMultiset};
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI, SQRT_2};

    #[test]
    fn xz_plane_observables() {
        assert!(
            xz_observable(0.0)
                .unwrap()
                .matrix()
                .max_abs_diff(&pauli_x())
                < 1e-15
        );
        assert!(
            xz_observable(FRAC_PI_2)
                .unwrap()
                .matrix()
                .max_abs_diff(&pauli_z())
                < 1e-15
        );
        let a = xz_observable(10.6852).unwrap();
        let b = xz_observable(10.6852 - 2.0 * PI).unwrap();
        assert!(a.matrix().max_abs_diff(b.matrix()) < 1e-14);
        assert!(xz_observable(f64::NAN).is_err());
        assert!(XZObservable::new(-1.0).unwrap().angle() >= 0.0);
    }

    #[test]
    fn xz_observables_are_involutions() {
        let mut phi = -7.3f64;
        for _ in 0..100 {
            let a = xz_observable(phi).unwrap();
            let sq = a.matrix().mul(a.matrix());
            assert!(sq.max_abs_diff(&CMatrix::identity(2)) < 1e-12);
            let ev = eigenvalues(&a);
            assert!((ev[0] + 1.0).abs() < 1e-12 && (ev[1] - 1.0).abs() < 1e-12);
            phi += 0.1537;
        }
    }

    #[test]
    fn bloch_settings() {
        assert!(
            bloch_observable([1.0, 0.0, 0.0])
                .unwrap()
                .matrix()
                .max_abs_diff(&pauli_x())
                < 1e-15
        );
        let b1 = bloch_observable([FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0]).unwrap();
        let mut want = pauli_x().scale(C64::new(FRAC_1_SQRT_2, 0.0));
        want.add_scaled(&pauli_y(), C64::new(FRAC_1_SQRT_2, 0.0));
        assert!(b1.matrix().max_abs_diff(&want) < 1e-15);
        let ev = eigenvalues(&b1);
        assert!((ev[0] + 1.0).abs() < 1e-12 && (ev[1] - 1.0).abs() < 1e-12);
        assert!(bloch_observable([0.0, 0.0, 2.0]).is_err());
    }

    #[test]
    fn eigen_basics() {
        let h = HermitianMatrix::new(CMatrix::from_real(
            3,
            &[1., 0., 0., 0., 3., 0., 0., 0., -2.],
        ))
        .unwrap();
        assert_eq!(eigen_max(&h), 3.0);
        let x = HermitianMatrix::new(pauli_x()).unwrap();
        assert!((eigen_max(&x) - 1.0).abs() < 1e-15);
        let y = HermitianMatrix::new(pauli_y()).unwrap();
        let ev = eigenvalues(&y);
        assert!((ev[0] + 1.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);
        let bad = CMatrix::from_real(2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(
            HermitianMatrix::new(bad),
            Err(crate::Error::Domain(_))
        ));
    }

    #[test]
    fn chsh_operator_reaches_tsirelson() {
        let x = HermitianMatrix::new(pauli_x()).unwrap();
        let z = HermitianMatrix::new(pauli_z()).unwrap();
        let h = bell_operator(&chsh_expression(), [&x, &z]).unwrap();
        assert!((eigen_max(&h) - 2.0 * SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn constant_expression_is_scaled_identity() {
        let mut e = PIBellExpression::new(3);
        e.set(SettingMultiset::EMPTY, 2.5).unwrap();
        let a = xz_observable(0.3).unwrap();
        let h = bell_operator(&e, [&a, &a]).unwrap();
        assert!(
            h.matrix()
                .max_abs_diff(&CMatrix::identity(8).scale(C64::new(2.5, 0.0)))
                < 1e-15
        );
    }

    #[test]
    fn operator_matches_explicit_monomial_sum() {
        // e_{1,2} on three parties: six ordered placements of A1, A2
        let mut e = PIBellExpression::new(3);
        e.set(SettingMultiset::new(1, 1), 1.0).unwrap();
        let a1 = xz_observable(0.4).unwrap();
        let a2 = xz_observable(1.9).unwrap();
        let h = bell_operator(&e, [&a1, &a2]).unwrap();
        let i2 = CMatrix::identity(2);
        let ops = [&i2, a1.matrix(), a2.matrix()];
        let mut want = CMatrix::zeros(8);
        for labels in [
            [1, 2, 0],
            [2, 1, 0],
            [1, 0, 2],
            [2, 0, 1],
            [0, 1, 2],
            [0, 2, 1],
        ] {
            let t = ops[labels[0]].kron(ops[labels[1]]).kron(ops[labels[2]]);
            want.add_scaled(&t, ONE);
        }
        assert!(h.matrix().max_abs_diff(&want) < 1e-14);
    }

    #[test]
    fn capacity_guard() {
        let e = PIBellExpression::new(13);
        let a = xz_observable(0.0).unwrap();
        assert!(matches!(
            bell_operator(&e, [&a, &a]),
            Err(crate::Error::Capacity(_))
        ));
    }
}
