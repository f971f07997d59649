//! Small dense complex matrices: validated hermitian and unitary wrappers,
//! Cayley transforms, unitary eigendecomposition and the maps built on it.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Numerical thresholds used across the crate. Defaults live here and only here.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Max-entry residual accepted for `M = M*`.
    pub herm: f64,
    /// Max-entry residual accepted for `S*S = 𝟙`.
    pub unit: f64,
    /// Relative singular-value threshold for rank decisions.
    pub rank: f64,
    /// Eigenphases below this (in absolute value) count as exact kernel.
    pub phase_kernel: f64,
    /// Eigenphases in `[phase_kernel, phase_guard)` are too close to call.
    pub phase_guard: f64,
    /// Residual accepted for the lagrangian condition `F*JF = 0`.
    pub lagrangian: f64,
    /// Largest principal angle at which two subspaces count as equal.
    pub angle: f64,
    /// Eigenphases closer than this are clustered into one eigenspace.
    pub cluster: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            herm: 1e-9,
            unit: 1e-9,
            rank: 1e-6,
            phase_kernel: 1e-9,
            phase_guard: 1e-7,
            lagrangian: 1e-8,
            angle: 1e-7,
            cluster: 1e-7,
        }
    }
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn diag_real(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        values.len(),
        values.iter().map(|&v| Complex64::new(v, 0.0)),
    ))
}

pub fn diag_complex(values: &[Complex64]) -> CMatrix {
    CMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(values))
}

/// Singular values, largest first.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    sv
}

/// `true` when the smallest singular value exceeds `rel_tol` times the largest.
pub fn is_well_conditioned(m: &CMatrix, rel_tol: f64) -> bool {
    let sv = singular_values(m);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) => hi > 0.0 && lo > rel_tol * hi,
        _ => false,
    }
}

fn check_finite(m: &CMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

fn check_square(m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::Shape {
            expected: "non-empty square".into(),
            got: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    Ok(())
}

/// Orthonormal basis of the column span by Gram–Schmidt with one
/// reorthogonalization pass. Rank is assumed full. Columns that are already
/// orthogonal with disjoint supports come back with their zeros intact,
/// which keeps exactly structured frames exact.
pub fn orthonormalize(m: &CMatrix) -> CMatrix {
    let mut q = m.clone();
    for c in 0..q.ncols() {
        for _pass in 0..2 {
            for prev in 0..c {
                let coef = q.column(prev).dotc(&q.column(c));
                if coef != ZERO {
                    let p = q.column(prev).into_owned();
                    q.column_mut(c).axpy(-coef, &p, ONE);
                }
            }
        }
        let norm = q.column(c).norm();
        if norm > 0.0 {
            q.column_mut(c).unscale_mut(norm);
        }
    }
    q
}

// ---------------------------------------------------------------------------
// JSON

/// `{"rows": r, "cols": c, "data": [[re, im], …]}` in row-major order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl From<&CMatrix> for MatrixJson {
    fn from(m: &CMatrix) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let z = m[(r, c)];
                data.push([z.re, z.im]);
            }
        }
        MatrixJson {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }
}

impl TryFrom<MatrixJson> for CMatrix {
    type Error = Error;

    fn try_from(j: MatrixJson) -> Result<Self> {
        if j.data.len() != j.rows * j.cols {
            return Err(Error::Shape {
                expected: format!("{} entries", j.rows * j.cols),
                got: format!("{} entries", j.data.len()),
            });
        }
        let m = CMatrix::from_row_iterator(
            j.rows,
            j.cols,
            j.data.iter().map(|[re, im]| Complex64::new(*re, *im)),
        );
        check_finite(&m)?;
        Ok(m)
    }
}

pub fn matrix_to_json(m: &CMatrix) -> String {
    serde_json::to_string(&MatrixJson::from(m)).expect("matrix serialization cannot fail")
}

pub fn matrix_from_json(s: &str) -> Result<CMatrix> {
    let j: MatrixJson = serde_json::from_str(s)?;
    CMatrix::try_from(j)
}

// ---------------------------------------------------------------------------
// Hermitian

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tol(m, Tolerances::default().herm)
    }

    /// Accepts `m` when `‖M − M*‖_max ≤ 10·tol`, storing the symmetrized
    /// `(M + M*)/2`.
    pub fn with_tol(m: CMatrix, tol: f64) -> Result<Self> {
        check_square(&m)?;
        check_finite(&m)?;
        let residual = max_abs(&(&m - m.adjoint()));
        if residual > 10.0 * tol {
            return Err(Error::NotHermitian { residual });
        }
        let sym = (&m + m.adjoint()).scale(0.5);
        Ok(HermitianMatrix(sym))
    }

    pub fn zeros(n: usize) -> Self {
        HermitianMatrix(CMatrix::zeros(n, n))
    }

    pub fn from_real_diagonal(values: &[f64]) -> Self {
        HermitianMatrix(diag_real(values))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }
}

impl TryFrom<MatrixJson> for HermitianMatrix {
    type Error = Error;

    fn try_from(j: MatrixJson) -> Result<Self> {
        HermitianMatrix::new(CMatrix::try_from(j)?)
    }
}

impl From<HermitianMatrix> for MatrixJson {
    fn from(h: HermitianMatrix) -> Self {
        MatrixJson::from(&h.0)
    }
}

// ---------------------------------------------------------------------------
// Unitary

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct UnitaryMatrix(CMatrix);

pub fn unitarity_residual(m: &CMatrix) -> f64 {
    max_abs(&(m.adjoint() * m - identity(m.nrows())))
}

impl UnitaryMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tol(m, Tolerances::default().unit)
    }

    pub fn with_tol(m: CMatrix, tol: f64) -> Result<Self> {
        check_square(&m)?;
        check_finite(&m)?;
        let residual = unitarity_residual(&m);
        if residual > tol {
            return Err(Error::NotUnitary { residual });
        }
        Ok(UnitaryMatrix(m))
    }

    /// Wraps a matrix that is unitary by construction (products, exact
    /// formulas). Only debug builds check it.
    pub(crate) fn from_trusted(m: CMatrix) -> Self {
        debug_assert!(
            unitarity_residual(&m) < 1e-6,
            "trusted unitary off by {}",
            unitarity_residual(&m)
        );
        UnitaryMatrix(m)
    }

    pub fn identity(n: usize) -> Self {
        UnitaryMatrix(identity(n))
    }

    pub fn diagonal_phases(phases: &[f64]) -> Self {
        UnitaryMatrix(diag_complex(
            &phases
                .iter()
                .map(|&t| Complex64::from_polar(1.0, t))
                .collect::<Vec<_>>(),
        ))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        UnitaryMatrix(self.0.adjoint())
    }

    pub fn neg(&self) -> Self {
        UnitaryMatrix(-&self.0)
    }

    pub fn mul(&self, other: &UnitaryMatrix) -> Result<Self> {
        if self.n() != other.n() {
            return Err(Error::Shape {
                expected: format!("{0}x{0}", self.n()),
                got: format!("{0}x{0}", other.n()),
            });
        }
        Ok(UnitaryMatrix(&self.0 * &other.0))
    }

    pub fn residual(&self) -> f64 {
        unitarity_residual(&self.0)
    }
}

impl TryFrom<MatrixJson> for UnitaryMatrix {
    type Error = Error;

    fn try_from(j: MatrixJson) -> Result<Self> {
        UnitaryMatrix::new(CMatrix::try_from(j)?)
    }
}

impl From<UnitaryMatrix> for MatrixJson {
    fn from(u: UnitaryMatrix) -> Self {
        MatrixJson::from(&u.0)
    }
}

// ---------------------------------------------------------------------------
// Cayley transform

/// `S = (𝟙 − iA)(𝟙 + iA)^{-1}`.
pub fn cayley(a: &HermitianMatrix) -> UnitaryMatrix {
    let n = a.n();
    let ia = a.as_matrix() * I;
    let num = identity(n) - &ia;
    let den = identity(n) + &ia;
    // (𝟙 + iA) has spectrum 1 + iℝ, so it is always invertible.
    let inv = den
        .lu()
        .try_inverse()
        .expect("1 + iA is invertible for hermitian A");
    UnitaryMatrix::from_trusted(num * inv)
}

/// `A = −i(𝟙 − S)(𝟙 + S)^{-1}`; fails when `−1` is an eigenvalue of `S`.
pub fn inverse_cayley(s: &UnitaryMatrix) -> Result<HermitianMatrix> {
    inverse_cayley_tol(s, &Tolerances::default())
}

pub fn inverse_cayley_tol(s: &UnitaryMatrix, tol: &Tolerances) -> Result<HermitianMatrix> {
    let n = s.n();
    let plus = identity(n) + s.as_matrix();
    if !is_well_conditioned(&plus, tol.rank) {
        return Err(Error::CayleyPole);
    }
    let inv = plus.lu().try_inverse().ok_or(Error::CayleyPole)?;
    let a = (identity(n) - s.as_matrix()) * inv * (-I);
    // conditioning of 𝟙 + S bounds how far the result may drift from hermitian
    let scale = max_abs(&a).max(1.0);
    HermitianMatrix::with_tol(a, tol.herm * scale * 1e3)
}

// ---------------------------------------------------------------------------
// Eigendecomposition of unitaries

/// `S = frame · diag(e^{iθ_k}) · frame*` with phases ascending in `(−π, π]`.
#[derive(Clone, Debug)]
pub struct UnitaryEig {
    pub phases: Vec<f64>,
    pub frame: UnitaryMatrix,
    /// Index ranges (into `phases`) of clusters closer than the cluster
    /// tolerance, wrapping across `±π`.
    pub clusters: Vec<Vec<usize>>,
}

impl UnitaryEig {
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.phases
            .iter()
            .map(|&t| Complex64::from_polar(1.0, t))
            .collect()
    }

    /// `max |S·frame − frame·diag|`.
    pub fn residual(&self, s: &UnitaryMatrix) -> f64 {
        let f = self.frame.as_matrix();
        max_abs(&(s.as_matrix() * f - f * diag_complex(&self.eigenvalues())))
    }

    /// Columns of the frame spanning the eigenspaces whose phase satisfies `pred`.
    pub fn columns_where(&self, pred: impl Fn(f64) -> bool) -> CMatrix {
        let idx: Vec<usize> = (0..self.phases.len())
            .filter(|&k| pred(self.phases[k]))
            .collect();
        self.frame.as_matrix().select_columns(&idx)
    }
}

pub fn wrap_phase(t: f64) -> f64 {
    let mut x = t % (2.0 * PI);
    if x <= -PI {
        x += 2.0 * PI;
    } else if x > PI {
        x -= 2.0 * PI;
    }
    x
}

/// Distance between two phases on the circle.
pub fn circle_distance(a: f64, b: f64) -> f64 {
    wrap_phase(a - b).abs()
}

pub fn unitary_eig(s: &UnitaryMatrix) -> UnitaryEig {
    unitary_eig_tol(s, &Tolerances::default())
}

/// Complex Schur factorization. For a normal matrix the triangular factor is
/// diagonal up to rounding, so the Schur vectors are an orthonormal
/// eigenbasis, degenerate eigenspaces included.
pub fn unitary_eig_tol(s: &UnitaryMatrix, tol: &Tolerances) -> UnitaryEig {
    let n = s.n();
    let (q, t) = s.as_matrix().clone().schur().unpack();
    let mut pairs: Vec<(f64, usize)> = (0..n).map(|k| (wrap_phase(t[(k, k)].arg()), k)).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    let phases: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let order: Vec<usize> = pairs.iter().map(|p| p.1).collect();
    let frame = q.select_columns(&order);

    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for k in 0..n {
        match clusters.last_mut() {
            Some(c) if phases[k] - phases[*c.last().unwrap()] < tol.cluster => c.push(k),
            _ => clusters.push(vec![k]),
        }
    }
    if clusters.len() > 1 && circle_distance(phases[n - 1], phases[0]) < tol.cluster {
        let last = clusters.pop().unwrap();
        let mut merged = last;
        merged.extend(clusters[0].iter().copied());
        clusters[0] = merged;
    }
    UnitaryEig {
        phases,
        frame: UnitaryMatrix::from_trusted(frame),
        clusters,
    }
}

/// `Ξ(S) = frame · diag(ξ(λ_k)) · frame*`, with `ξ` evaluated once per
/// eigenvalue cluster (at the cluster's circular mean). Values of `ξ` are
/// projected onto the unit circle.
pub fn spectral_map(s: &UnitaryMatrix, xi: impl Fn(Complex64) -> Complex64) -> UnitaryMatrix {
    let eig = unitary_eig(s);
    let n = s.n();
    let lambdas = eig.eigenvalues();
    let mut values = vec![ONE; n];
    for cluster in &eig.clusters {
        let mean: Complex64 = cluster.iter().map(|&k| lambdas[k]).sum();
        let center = if mean.norm() > 0.0 {
            mean / mean.norm()
        } else {
            lambdas[cluster[0]]
        };
        let v = xi(center);
        let v = if v.norm() > 0.0 { v / v.norm() } else { ONE };
        for &k in cluster {
            values[k] = v;
        }
    }
    let f = eig.frame.as_matrix();
    UnitaryMatrix::from_trusted(f * diag_complex(&values) * f.adjoint())
}

/// Orthogonal projector of `Ê = E ⊕ E` onto the lagrangian of `S`:
/// `½ [[𝟙 + ½(S+S*), (i/2)(S−S*)], [(i/2)(S−S*), 𝟙 − ½(S+S*)]]`.
pub fn projector_of_unitary(s: &UnitaryMatrix) -> HermitianMatrix {
    let n = s.n();
    let m = s.as_matrix();
    let sym = (m + m.adjoint()).scale(0.5);
    let skew = (m - m.adjoint()) * (I * 0.5);
    let mut p = CMatrix::zeros(2 * n, 2 * n);
    p.view_mut((0, 0), (n, n)).copy_from(&(identity(n) + &sym));
    p.view_mut((0, n), (n, n)).copy_from(&skew);
    p.view_mut((n, 0), (n, n)).copy_from(&skew);
    p.view_mut((n, n), (n, n)).copy_from(&(identity(n) - &sym));
    HermitianMatrix(p.scale(0.5))
}

/// Left action `(U₊, U₋) ∗ S = U₋ S U₊*`.
pub fn act(
    u_plus: &UnitaryMatrix,
    u_minus: &UnitaryMatrix,
    s: &UnitaryMatrix,
) -> Result<UnitaryMatrix> {
    let n = s.n();
    if u_plus.n() != n || u_minus.n() != n {
        return Err(Error::Shape {
            expected: format!("{n}x{n}"),
            got: format!("{0}x{0} and {1}x{1}", u_plus.n(), u_minus.n()),
        });
    }
    Ok(UnitaryMatrix::from_trusted(
        u_minus.as_matrix() * s.as_matrix() * u_plus.as_matrix().adjoint(),
    ))
}

/// `e^{itZ}` for hermitian `Z`.
pub fn exp_i_hermitian(z: &HermitianMatrix, t: f64) -> UnitaryMatrix {
    let eig = z.as_matrix().clone().symmetric_eigen();
    let phases: Vec<Complex64> = eig
        .eigenvalues
        .iter()
        .map(|&l| Complex64::from_polar(1.0, t * l))
        .collect();
    let v = &eig.eigenvectors;
    UnitaryMatrix::from_trusted(v * diag_complex(&phases) * v.adjoint())
}

/// Reduced column echelon form with pivots at the smallest row index.
///
/// Rows are scanned top to bottom; a row becomes a pivot when some
/// not-yet-pivoted column has an entry above `thresh` there. Entries below
/// `thresh` in rows that do not become pivots are set to exactly zero, so the
/// output columns are `e_p + Σ_{j>p, j not a pivot} x_j e_j`. Returns the
/// 0-based pivot rows (ascending) and the columns in pivot order, or `None`
/// when fewer than `cols` pivots are found.
pub fn column_echelon(m: &CMatrix, thresh: f64) -> Option<(Vec<usize>, CMatrix)> {
    let (rows, cols) = m.shape();
    let mut work = m.clone();
    let mut remaining: Vec<usize> = (0..cols).collect();
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    for r in 0..rows {
        if remaining.is_empty() {
            break;
        }
        let (pos, best) = remaining
            .iter()
            .enumerate()
            .map(|(pos, &c)| (pos, work[(r, c)].norm()))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= thresh {
            for &c in &remaining {
                work[(r, c)] = ZERO;
            }
            continue;
        }
        let c = remaining.remove(pos);
        let inv = ONE / work[(r, c)];
        for row in 0..rows {
            work[(row, c)] *= inv;
        }
        work[(r, c)] = ONE;
        for other in 0..cols {
            if other == c {
                continue;
            }
            let coef = work[(r, other)];
            if coef != ZERO {
                for row in 0..rows {
                    let v = work[(row, c)];
                    work[(row, other)] -= coef * v;
                }
                work[(r, other)] = ZERO;
            }
        }
        pivots.push((r, c));
    }
    if !remaining.is_empty() {
        return None;
    }
    let rows_out: Vec<usize> = pivots.iter().map(|p| p.0).collect();
    let order: Vec<usize> = pivots.iter().map(|p| p.1).collect();
    Some((rows_out, work.select_columns(&order)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_hermitian, random_unitary, rng_for};
    use approx::assert_abs_diff_eq;

    #[test]
    fn cayley_examples() {
        let s = cayley(&HermitianMatrix::zeros(3));
        assert!(max_abs(&(s.as_matrix() - identity(3))) < 1e-15);
        let s = cayley(&HermitianMatrix::from_real_diagonal(&[1.0]));
        // (1 − i)/(1 + i) = −i
        assert_abs_diff_eq!(s.as_matrix()[(0, 0)].re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.as_matrix()[(0, 0)].im, -1.0, epsilon = 1e-15);
        let back = inverse_cayley(&s).unwrap();
        assert_abs_diff_eq!(back.as_matrix()[(0, 0)].re, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn inverse_cayley_pole() {
        let err = inverse_cayley(&UnitaryMatrix::identity(2).neg()).unwrap_err();
        assert!(matches!(err, Error::CayleyPole));
        let a = inverse_cayley(&UnitaryMatrix::identity(2)).unwrap();
        assert!(max_abs(a.as_matrix()) < 1e-15);
    }

    #[test]
    fn cayley_roundtrip_random() {
        for k in 0..200 {
            let mut rng = rng_for(11, k);
            let n = 1 + (k as usize % 5);
            let a = random_hermitian(&mut rng, n, 10.0);
            let s = cayley(&a);
            assert!(s.residual() < 1e-9);
            let back = inverse_cayley(&s).unwrap();
            assert!(max_abs(&(back.as_matrix() - a.as_matrix())) < 1e-9);
        }
    }

    #[test]
    fn hermitian_validation() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(matches!(
            HermitianMatrix::new(m.clone()),
            Err(Error::NotHermitian { .. })
        ));
        m[(1, 0)] = Complex64::new(1.0, 5e-9);
        let h = HermitianMatrix::new(m).unwrap();
        assert_eq!(h.as_matrix()[(1, 0)], h.as_matrix()[(0, 1)].conj());
        let mut bad = CMatrix::zeros(1, 1);
        bad[(0, 0)] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(HermitianMatrix::new(bad), Err(Error::NonFinite)));
    }

    #[test]
    fn eig_examples() {
        let e = unitary_eig(&UnitaryMatrix::identity(3));
        assert!(e.phases.iter().all(|&p| p == 0.0));
        assert_eq!(e.clusters.len(), 1);

        let s = UnitaryMatrix::new(diag_complex(&[Complex64::new(-1.0, 0.0), I])).unwrap();
        let e = unitary_eig(&s);
        assert_abs_diff_eq!(e.phases[0], PI / 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.phases[1], PI, epsilon = 1e-14);
        // standard basis up to phase: |frame| is a permutation matrix
        let f = e.frame.as_matrix();
        assert_abs_diff_eq!(f[(1, 0)].norm(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(f[(0, 1)].norm(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn eig_residual_random() {
        for k in 0..200 {
            let mut rng = rng_for(12, k);
            let n = 1 + (k as usize % 6);
            let s = random_unitary(&mut rng, n);
            let e = unitary_eig(&s);
            assert!(e.residual(&s) < 1e-8, "residual {}", e.residual(&s));
            assert!(e.frame.residual() < 1e-10);
            assert!(e.phases.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn eig_degenerate_cluster() {
        let mut rng = rng_for(13, 0);
        let u = random_unitary(&mut rng, 4);
        let d = UnitaryMatrix::diagonal_phases(&[0.3, 0.3, -2.0, PI]);
        let s =
            UnitaryMatrix::new(u.as_matrix() * d.as_matrix() * u.as_matrix().adjoint()).unwrap();
        let e = unitary_eig(&s);
        assert!(e.residual(&s) < 1e-8);
        assert_eq!(e.clusters.len(), 3);
        assert!(e.frame.residual() < 1e-10);
    }

    #[test]
    fn spectral_map_examples() {
        let mut rng = rng_for(14, 0);
        let s = random_unitary(&mut rng, 4);
        let same = spectral_map(&s, |z| z);
        assert!(max_abs(&(same.as_matrix() - s.as_matrix())) < 1e-12);
        let one = spectral_map(&s, |_| ONE);
        assert!(max_abs(&(one.as_matrix() - identity(4))) < 1e-12);

        let rho = Complex64::from_polar(1.0, 2.0);
        let other = Complex64::from_polar(1.0, PI / 3.0);
        let d = UnitaryMatrix::new(diag_complex(&[rho, other])).unwrap();
        let collapse = |z: Complex64| if (z - rho).norm() < 1e-6 { ONE } else { z * z };
        let out = spectral_map(&d, collapse);
        let want = diag_complex(&[ONE, other * other]);
        assert!(max_abs(&(out.as_matrix() - want)) < 1e-12);
    }

    #[test]
    fn spectral_map_commutes_and_composes() {
        for k in 0..50 {
            let mut rng = rng_for(15, k);
            let s = random_unitary(&mut rng, 3);
            let eta = |z: Complex64| z * z * z;
            let xi = |z: Complex64| z.conj() * Complex64::from_polar(1.0, 0.4);
            let m = spectral_map(&s, eta);
            let comm = m.as_matrix() * s.as_matrix() - s.as_matrix() * m.as_matrix();
            assert!(max_abs(&comm) < 1e-7);
            let e = unitary_eig(&s);
            let gap = (0..3)
                .flat_map(|a| (0..3).filter(move |&b| b != a).map(move |b| (a, b)))
                .map(|(a, b)| circle_distance(e.phases[a], e.phases[b]))
                .fold(f64::INFINITY, f64::min);
            if gap > 1e-3 {
                let lhs = spectral_map(&s, |z| xi(eta(z)));
                let rhs = spectral_map(&m, xi);
                assert!(max_abs(&(lhs.as_matrix() - rhs.as_matrix())) < 1e-7);
            }
        }
    }

    #[test]
    fn projector_examples() {
        let p = projector_of_unitary(&UnitaryMatrix::identity(2));
        let mut want = CMatrix::zeros(4, 4);
        want[(0, 0)] = ONE;
        want[(1, 1)] = ONE;
        assert!(max_abs(&(p.as_matrix() - &want)) < 1e-15);
        let p = projector_of_unitary(&UnitaryMatrix::identity(2).neg());
        let mut want = CMatrix::zeros(4, 4);
        want[(2, 2)] = ONE;
        want[(3, 3)] = ONE;
        assert!(max_abs(&(p.as_matrix() - &want)) < 1e-15);
    }

    #[test]
    fn projector_random() {
        for k in 0..100 {
            let mut rng = rng_for(16, k);
            let n = 1 + k as usize % 5;
            let s = random_unitary(&mut rng, n);
            let p = projector_of_unitary(&s);
            let pm = p.as_matrix();
            assert!(max_abs(&(pm * pm - pm)) < 1e-9);
            assert!(max_abs(&(pm - pm.adjoint())) < 1e-15);
            assert_abs_diff_eq!(pm.trace().re, n as f64, epsilon = 1e-9);
            let frame = crate::lagrangian::frame_from_unitary(&s);
            assert!(max_abs(&(pm * frame.as_matrix() - frame.as_matrix())) < 1e-9);
        }
    }

    #[test]
    fn action_laws() {
        let mut rng = rng_for(17, 0);
        let s = random_unitary(&mut rng, 3);
        let id = UnitaryMatrix::identity(3);
        let same = act(&id, &id, &s).unwrap();
        assert!(max_abs(&(same.as_matrix() - s.as_matrix())) < 1e-15);
        let u = random_unitary(&mut rng, 3);
        assert!(max_abs(&(act(&u, &u, &id).unwrap().as_matrix() - identity(3))) < 1e-12);
        for _ in 0..20 {
            let (u1, v1, u2, v2) = (
                random_unitary(&mut rng, 3),
                random_unitary(&mut rng, 3),
                random_unitary(&mut rng, 3),
                random_unitary(&mut rng, 3),
            );
            let lhs = act(&u1, &v1, &act(&u2, &v2, &s).unwrap()).unwrap();
            let rhs = act(&u1.mul(&u2).unwrap(), &v1.mul(&v2).unwrap(), &s).unwrap();
            assert!(max_abs(&(lhs.as_matrix() - rhs.as_matrix())) < 1e-10);
        }
        assert!(act(&UnitaryMatrix::identity(2), &id, &s).is_err());
    }

    #[test]
    fn echelon_shape() {
        let mut rng = rng_for(18, 0);
        // span{e_2 + 3e_4, e_3 − e_4} mixed by a random unitary
        let mut b = CMatrix::zeros(4, 2);
        b[(1, 0)] = ONE;
        b[(3, 0)] = Complex64::new(3.0, 0.0);
        b[(2, 1)] = ONE;
        b[(3, 1)] = -ONE;
        let mixed = orthonormalize(&b) * random_unitary(&mut rng, 2).as_matrix();
        let (piv, e) = column_echelon(&mixed, 1e-6).unwrap();
        assert_eq!(piv, vec![1, 2]);
        assert!(max_abs(&(e - b)) < 1e-12);
        assert!(column_echelon(&CMatrix::zeros(3, 1), 1e-6).is_none());
    }

    #[test]
    fn exp_of_hermitian() {
        let mut rng = rng_for(19, 0);
        let z = random_hermitian(&mut rng, 3, 2.0);
        let u = exp_i_hermitian(&z, 0.7);
        assert!(u.residual() < 1e-12);
        // d/dt at 0 is iZ
        let h = 1e-6;
        let d = (exp_i_hermitian(&z, h).into_inner() - exp_i_hermitian(&z, -h).into_inner())
            / Complex64::new(2.0 * h, 0.0);
        assert!(max_abs(&(d - z.as_matrix() * I)) < 1e-8);
    }

    #[test]
    fn json_format() {
        let s = UnitaryMatrix::new(diag_complex(&[I, ONE])).unwrap();
        let js = serde_json::to_string(&s).unwrap();
        assert_eq!(
            js,
            r#"{"rows":2,"cols":2,"data":[[0.0,1.0],[0.0,0.0],[0.0,0.0],[1.0,0.0]]}"#
        );
        let back: UnitaryMatrix = serde_json::from_str(&js).unwrap();
        assert_eq!(back, s);
        let bad = r#"{"rows":1,"cols":1,"data":[[2.0,0.0]]}"#;
        assert!(serde_json::from_str::<UnitaryMatrix>(bad).is_err());
        assert!(matrix_from_json(r#"{"rows":2,"cols":1,"data":[[1.0,0.0]]}"#).is_err());
    }
}
