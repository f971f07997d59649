//! Hermitian lagrangian subspaces of `Ê = E ⊕ E`, represented by 2n×n frames
//! `[X; Y]`, together with the Arnold correspondence `S ↦ L_S` and the
//! Arnold charts centred at the critical lagrangians `Λ_I`.
//!
//! Chart coordinates use the natural index order: row/column `k` of a chart-`I`
//! coordinate matrix refers to `e_k` when `k ∈ I` and to `f_k` otherwise.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::combinatorics::SubsetIndex;
use crate::error::{Error, Result};
use crate::matrix::{
    self, diag_complex, identity, inverse_cayley_tol, max_abs, orthonormalize, singular_values,
    CMatrix, HermitianMatrix, MatrixJson, Tolerances, UnitaryMatrix, I, ONE, ZERO,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FrameRepr", into = "FrameRepr")]
pub struct LagrangianFrame {
    n: usize,
    frame: CMatrix,
}

#[derive(Serialize, Deserialize)]
struct FrameRepr {
    n: usize,
    #[serde(flatten)]
    matrix: MatrixJson,
}

impl TryFrom<FrameRepr> for LagrangianFrame {
    type Error = Error;

    fn try_from(r: FrameRepr) -> Result<Self> {
        let m = CMatrix::try_from(r.matrix)?;
        if m.nrows() != 2 * r.n {
            return Err(Error::Shape {
                expected: format!("{}x{}", 2 * r.n, r.n),
                got: format!("{}x{}", m.nrows(), m.ncols()),
            });
        }
        LagrangianFrame::new(m)
    }
}

impl From<LagrangianFrame> for FrameRepr {
    fn from(f: LagrangianFrame) -> Self {
        FrameRepr {
            n: f.n,
            matrix: MatrixJson::from(&f.frame),
        }
    }
}

/// `max |Q* J Q|` for an orthonormal basis `Q` of the column span.
pub fn lagrangian_residual(frame: &CMatrix) -> f64 {
    let q = orthonormalize(frame);
    max_abs(&(q.adjoint() * j_apply(&q)))
}

/// `J(x, y) = (−y, x)` applied column-wise to a 2n-row matrix.
pub fn j_apply(m: &CMatrix) -> CMatrix {
    let n = m.nrows() / 2;
    let mut out = CMatrix::zeros(m.nrows(), m.ncols());
    out.rows_mut(0, n).copy_from(&(-m.rows(n, n)));
    out.rows_mut(n, n).copy_from(&m.rows(0, n));
    out
}

impl LagrangianFrame {
    pub fn new(frame: CMatrix) -> Result<Self> {
        Self::with_tol(frame, &Tolerances::default())
    }

    pub fn with_tol(frame: CMatrix, tol: &Tolerances) -> Result<Self> {
        let (rows, cols) = frame.shape();
        if cols == 0 || rows != 2 * cols {
            return Err(Error::Shape {
                expected: format!("{}x{}", 2 * cols, cols),
                got: format!("{rows}x{cols}"),
            });
        }
        if !frame.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        if !matrix::is_well_conditioned(&frame, tol.rank) {
            return Err(Error::NotLagrangian);
        }
        if lagrangian_residual(&frame) > tol.lagrangian {
            return Err(Error::NotLagrangian);
        }
        Ok(LagrangianFrame { n: cols, frame })
    }

    /// For frames that are lagrangian by construction.
    pub(crate) fn from_trusted(frame: CMatrix) -> Self {
        debug_assert!(lagrangian_residual(&frame) < 1e-6);
        LagrangianFrame {
            n: frame.ncols(),
            frame,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.frame
    }

    pub fn top(&self) -> CMatrix {
        self.frame.rows(0, self.n).into_owned()
    }

    pub fn bottom(&self) -> CMatrix {
        self.frame.rows(self.n, self.n).into_owned()
    }

    /// Same subspace, orthonormal columns.
    pub fn orthonormal(&self) -> LagrangianFrame {
        LagrangianFrame {
            n: self.n,
            frame: orthonormalize(&self.frame),
        }
    }

    /// Orthogonal projector onto the span.
    pub fn projector(&self) -> CMatrix {
        let q = orthonormalize(&self.frame);
        &q * q.adjoint()
    }

    /// Apply a 2n×2n linear map to every column. The caller is responsible
    /// for the map preserving lagrangians; the result is re-validated.
    pub fn transform(&self, m: &CMatrix) -> Result<LagrangianFrame> {
        LagrangianFrame::new(m * &self.frame)
    }
}

/// Sine of the largest principal angle between two equidimensional column spans.
pub fn subspace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let qa = orthonormalize(a);
    let qb = orthonormalize(b);
    let resid = &qb - &qa * (qa.adjoint() * &qb);
    singular_values(&resid)
        .first()
        .copied()
        .unwrap_or(0.0)
        .min(1.0)
}

pub fn same_subspace(a: &LagrangianFrame, b: &LagrangianFrame, tol: &Tolerances) -> bool {
    a.n == b.n && subspace_distance(&a.frame, &b.frame) < tol.angle
}

/// Columns `((𝟙+S)e_k, −i(𝟙−S)e_k)`.
pub fn frame_from_unitary(s: &UnitaryMatrix) -> LagrangianFrame {
    let n = s.n();
    let mut f = CMatrix::zeros(2 * n, n);
    f.rows_mut(0, n).copy_from(&(identity(n) + s.as_matrix()));
    f.rows_mut(n, n)
        .copy_from(&((identity(n) - s.as_matrix()) * (-I)));
    LagrangianFrame { n, frame: f }
}

/// Writes `L` as a graph from `F⁺ = {(e, −ie)}` to `F⁻ = {(e, ie)}`: with
/// `a = (X+iY)/2` and `b = (X−iY)/2` for an orthonormal frame, `S = b a⁻¹`.
pub fn unitary_from_frame(f: &LagrangianFrame) -> Result<UnitaryMatrix> {
    unitary_from_frame_tol(f, &Tolerances::default())
}

pub fn unitary_from_frame_tol(f: &LagrangianFrame, tol: &Tolerances) -> Result<UnitaryMatrix> {
    let q = orthonormalize(&f.frame);
    let n = f.n;
    let x = q.rows(0, n);
    let y = q.rows(n, n);
    let iy = y * I;
    let a = (x + &iy).scale(0.5);
    let b = (x - &iy).scale(0.5);
    if !matrix::is_well_conditioned(&a, tol.rank) {
        return Err(Error::NotLagrangian);
    }
    let ainv = a.lu().try_inverse().ok_or(Error::NotLagrangian)?;
    let s = b * ainv;
    if matrix::unitarity_residual(&s) > 1e3 * tol.unit.max(tol.lagrangian) {
        return Err(Error::NotLagrangian);
    }
    Ok(UnitaryMatrix::from_trusted(polar_unitary(&s)))
}

/// Nearest unitary in Frobenius norm (`U V*` from the SVD).
pub(crate) fn polar_unitary(m: &CMatrix) -> CMatrix {
    let svd = m.clone().svd(true, true);
    svd.u.expect("u requested") * svd.v_t.expect("v_t requested")
}

/// Frame of `J L`.
pub fn j_map(f: &LagrangianFrame) -> LagrangianFrame {
    LagrangianFrame {
        n: f.n,
        frame: j_apply(&f.frame),
    }
}

/// Orthonormal frame of `Λ_I`: column `k` is `e_k` for `k ∈ I`, `f_k` otherwise.
pub fn critical_lagrangian(subset: SubsetIndex) -> LagrangianFrame {
    let n = subset.n();
    let mut f = CMatrix::zeros(2 * n, n);
    for k in 0..n {
        let row = if subset.contains(k + 1) { k } else { n + k };
        f[(row, k)] = ONE;
    }
    LagrangianFrame { n, frame: f }
}

fn check_n(subset: SubsetIndex, n: usize) -> Result<()> {
    if subset.n() != n {
        return Err(Error::AmbientMismatch {
            left: subset.n(),
            right: n,
        });
    }
    Ok(())
}

/// Smallest singular value of `Λ_I* Q` for an orthonormal basis `Q` of `L`.
pub fn chart_margin(f: &LagrangianFrame, subset: SubsetIndex) -> Result<f64> {
    check_n(subset, f.n)?;
    let q = orthonormalize(&f.frame);
    let overlap = critical_lagrangian(subset).frame.adjoint() * q;
    Ok(singular_values(&overlap).last().copied().unwrap_or(0.0))
}

/// `L ∩ Λ_I^⊥ = 0`.
pub fn in_chart(f: &LagrangianFrame, subset: SubsetIndex) -> Result<bool> {
    Ok(chart_margin(f, subset)? > Tolerances::default().rank)
}

/// Diagonal with `1` on `I` and `i` off `I`.
fn chart_twist(subset: SubsetIndex) -> CMatrix {
    let d: Vec<_> = (1..=subset.n())
        .map(|k| if subset.contains(k) { ONE } else { I })
        .collect();
    diag_complex(&d)
}

/// Arnold coordinates: `inverse_cayley(𝒯_I S 𝒯_I)` with `𝒯_I = diag(1 on I, i off I)`.
pub fn arnold_coords(f: &LagrangianFrame, subset: SubsetIndex) -> Result<HermitianMatrix> {
    arnold_coords_tol(f, subset, &Tolerances::default())
}

pub fn arnold_coords_tol(
    f: &LagrangianFrame,
    subset: SubsetIndex,
    tol: &Tolerances,
) -> Result<HermitianMatrix> {
    if chart_margin(f, subset)? <= tol.rank {
        return Err(Error::OutsideChart);
    }
    let s = unitary_from_frame_tol(f, tol)?;
    arnold_coords_of_unitary(&s, subset, tol)
}

pub fn arnold_coords_of_unitary(
    s: &UnitaryMatrix,
    subset: SubsetIndex,
    tol: &Tolerances,
) -> Result<HermitianMatrix> {
    check_n(subset, s.n())?;
    let d = chart_twist(subset);
    let twisted = UnitaryMatrix::from_trusted(&d * s.as_matrix() * &d);
    inverse_cayley_tol(&twisted, tol).map_err(|e| match e {
        Error::CayleyPole => Error::OutsideChart,
        other => other,
    })
}

/// Frame with columns `e_k(T)` (`k ∈ I`) and `f_k(T)` (`k ∉ I`):
/// `X = P − QT`, `Y = Q + PT` where `P` projects onto `span{e_k : k ∈ I}` and `Q = 𝟙 − P`.
pub fn frame_from_arnold(subset: SubsetIndex, t: &HermitianMatrix) -> Result<LagrangianFrame> {
    let n = subset.n();
    check_n(subset, t.n())?;
    let p = diag_complex(
        &(1..=n)
            .map(|k| if subset.contains(k) { ONE } else { ZERO })
            .collect::<Vec<_>>(),
    );
    let q = identity(n) - &p;
    let tm = t.as_matrix();
    let mut f = CMatrix::zeros(2 * n, n);
    f.rows_mut(0, n).copy_from(&(&p - &q * tm));
    f.rows_mut(n, n).copy_from(&(&q + &p * tm));
    Ok(LagrangianFrame { n, frame: f })
}

/// `L ∩ Ê⁺`: its dimension (the depth) and an orthonormal basis of the
/// `E`-components (n×depth).
pub fn plus_part(f: &LagrangianFrame) -> (usize, CMatrix) {
    intersect_summand(f, true, Tolerances::default().rank)
}

/// `L ∩ Ê⁻` in the same format.
pub fn minus_part(f: &LagrangianFrame) -> (usize, CMatrix) {
    intersect_summand(f, false, Tolerances::default().rank)
}

fn intersect_summand(f: &LagrangianFrame, plus: bool, rank_tol: f64) -> (usize, CMatrix) {
    let n = f.n;
    let q = orthonormalize(&f.frame);
    // kill the other block: v = Qc lies in the summand iff (other block)·c = 0
    let (keep, kill) = if plus { (0, n) } else { (n, 0) };
    let null = null_space(&q.rows(kill, n).into_owned(), rank_tol);
    let basis = q.rows(keep, n) * null;
    let k = basis.ncols();
    (
        k,
        if k > 0 {
            orthonormalize(&basis)
        } else {
            CMatrix::zeros(n, 0)
        },
    )
}

/// Orthonormal basis of `{c : M c ≈ 0}` using absolute singular-value
/// threshold `tol` (M is assumed to have entries of order one).
pub(crate) fn null_space(m: &CMatrix, tol: f64) -> CMatrix {
    let cols = m.ncols();
    // pad to square so the SVD returns a full right basis
    let mut sq = CMatrix::zeros(cols.max(m.nrows()), cols);
    sq.rows_mut(0, m.nrows()).copy_from(m);
    let svd = sq.svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    let idx: Vec<usize> = (0..cols)
        .filter(|&k| svd.singular_values[k] <= tol)
        .collect();
    let mut out = CMatrix::zeros(cols, idx.len());
    for (c, &k) in idx.iter().enumerate() {
        let row: DVector<_> = vt.row(k).adjoint();
        out.set_column(c, &row);
    }
    out
}

/// `(U₊, U₋)` acting on `Ê = F⁺ ⊕ F⁻` blockwise; matches `act` on unitaries.
pub fn symplectic_act(
    u_plus: &UnitaryMatrix,
    u_minus: &UnitaryMatrix,
    f: &LagrangianFrame,
) -> Result<LagrangianFrame> {
    let n = f.n;
    if u_plus.n() != n || u_minus.n() != n {
        return Err(Error::Shape {
            expected: format!("{n}x{n}"),
            got: format!("{0}x{0} and {1}x{1}", u_plus.n(), u_minus.n()),
        });
    }
    let x = f.frame.rows(0, n);
    let y = f.frame.rows(n, n);
    let iy = y * I;
    let a = (x + &iy).scale(0.5);
    let b = (x - &iy).scale(0.5);
    let pa = u_plus.as_matrix() * a;
    let mb = u_minus.as_matrix() * b;
    let mut out = CMatrix::zeros(2 * n, n);
    out.rows_mut(0, n).copy_from(&(&pa + &mb));
    out.rows_mut(n, n).copy_from(&((&mb - &pa) * I));
    Ok(LagrangianFrame::from_trusted(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::all_subsets;
    use crate::matrix::{act, cayley};
    use crate::morse::critical_unitary;
    use crate::sampling::{random_hermitian, random_unitary, rng_for};

    fn s_of(n: usize, members: &[usize]) -> SubsetIndex {
        SubsetIndex::new(n, members).unwrap()
    }

    #[test]
    fn frame_examples() {
        let n = 3;
        let plus = frame_from_unitary(&UnitaryMatrix::identity(n));
        assert!(max_abs(&plus.bottom()) == 0.0);
        assert!(same_subspace(
            &plus,
            &critical_lagrangian(SubsetIndex::full(3).unwrap()),
            &Tolerances::default()
        ));
        let minus = frame_from_unitary(&UnitaryMatrix::identity(n).neg());
        assert!(max_abs(&minus.top()) == 0.0);
        for i in all_subsets(3).unwrap() {
            let f = frame_from_unitary(&critical_unitary(i));
            assert!(same_subspace(
                &f,
                &critical_lagrangian(i),
                &Tolerances::default()
            ));
            let s = unitary_from_frame(&critical_lagrangian(i)).unwrap();
            assert!(max_abs(&(s.as_matrix() - critical_unitary(i).as_matrix())) < 1e-12);
        }
    }

    #[test]
    fn unitary_roundtrip() {
        for k in 0..500 {
            let mut rng = rng_for(21, k);
            let n = 1 + k as usize % 5;
            let s = random_unitary(&mut rng, n);
            let f = frame_from_unitary(&s);
            let checked = LagrangianFrame::new(f.as_matrix().clone()).unwrap();
            let back = unitary_from_frame(&checked).unwrap();
            assert!(max_abs(&(back.as_matrix() - s.as_matrix())) < 1e-8);
            // L ∩ F± = 0: stacking with either graph frame has full rank
            for sign in [-1.0, 1.0] {
                let mut stacked = CMatrix::zeros(2 * n, 2 * n);
                stacked
                    .view_mut((0, 0), (2 * n, n))
                    .copy_from(f.as_matrix());
                stacked.view_mut((0, n), (n, n)).copy_from(&identity(n));
                stacked
                    .view_mut((n, n), (n, n))
                    .copy_from(&(identity(n) * (I * sign)));
                assert!(matrix::is_well_conditioned(&stacked, 1e-8));
            }
        }
    }

    #[test]
    fn rejects_non_lagrangian() {
        let mut m = CMatrix::zeros(2, 1);
        m[(0, 0)] = ONE;
        assert!(LagrangianFrame::new(m).is_ok());
        let mut m = CMatrix::zeros(4, 2);
        m[(0, 0)] = ONE;
        m[(2, 1)] = ONE; // e_1 and f_1 together are not isotropic
        assert!(matches!(LagrangianFrame::new(m), Err(Error::NotLagrangian)));
    }

    #[test]
    fn j_map_properties() {
        for i in all_subsets(3).unwrap() {
            let jf = j_map(&critical_lagrangian(i));
            assert!(same_subspace(
                &jf,
                &critical_lagrangian(i.complement()),
                &Tolerances::default()
            ));
        }
        for k in 0..50 {
            let mut rng = rng_for(22, k);
            let s = random_unitary(&mut rng, 3);
            let f = frame_from_unitary(&s);
            let minus = unitary_from_frame(&j_map(&f)).unwrap();
            assert!(max_abs(&(minus.as_matrix() + s.as_matrix())) < 1e-8);
            assert!(subspace_distance(j_map(&j_map(&f)).as_matrix(), f.as_matrix()) < 1e-8);
        }
    }

    #[test]
    fn chart_membership() {
        for i in all_subsets(3).unwrap() {
            assert!(in_chart(&critical_lagrangian(i), i).unwrap());
            assert!(!in_chart(&critical_lagrangian(i.complement()), i).unwrap());
            let t = arnold_coords(&critical_lagrangian(i), i).unwrap();
            assert!(max_abs(t.as_matrix()) < 1e-12);
        }
        let mut rng = rng_for(23, 0);
        let s = random_unitary(&mut rng, 4);
        assert!(in_chart(&frame_from_unitary(&s), SubsetIndex::full(4).unwrap()).unwrap());
        let err = arnold_coords(
            &critical_lagrangian(SubsetIndex::empty(2).unwrap()),
            SubsetIndex::full(2).unwrap(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::OutsideChart));
    }

    #[test]
    fn graph_chart_is_cayley() {
        let mut rng = rng_for(24, 0);
        let a = random_hermitian(&mut rng, 3, 4.0);
        let full = SubsetIndex::full(3).unwrap();
        let t = arnold_coords(&frame_from_unitary(&cayley(&a)), full).unwrap();
        assert!(max_abs(&(t.as_matrix() - a.as_matrix())) < 1e-9);
        let f = frame_from_arnold(full, &a).unwrap();
        assert!(max_abs(&(f.top() - identity(3))) == 0.0);
        assert!(max_abs(&(f.bottom() - a.as_matrix())) == 0.0);
    }

    #[test]
    fn arnold_roundtrips() {
        for n in 1..=4usize {
            for i in all_subsets(n).unwrap() {
                for k in 0..20 {
                    let mut rng = rng_for(25, (n as u64) << 32 | i.bits() << 8 | k);
                    let t = random_hermitian(&mut rng, n, 5.0);
                    let f = frame_from_arnold(i, &t).unwrap();
                    assert!(lagrangian_residual(f.as_matrix()) < 1e-8);
                    let back = arnold_coords(&f, i).unwrap();
                    assert!(max_abs(&(back.as_matrix() - t.as_matrix())) < 1e-8);

                    let s = random_unitary(&mut rng, n);
                    let g = frame_from_unitary(&s);
                    if chart_margin(&g, i).unwrap() > 1e-3 {
                        let t = arnold_coords(&g, i).unwrap();
                        let h = frame_from_arnold(i, &t).unwrap();
                        assert!(subspace_distance(h.as_matrix(), g.as_matrix()) < 1e-8);
                    }
                }
            }
        }
    }

    #[test]
    fn plus_part_examples() {
        for i in all_subsets(4).unwrap() {
            let (depth, basis) = plus_part(&critical_lagrangian(i));
            assert_eq!(depth, i.len());
            for c in 0..depth {
                let hits: Vec<usize> = (0..4).filter(|&r| basis[(r, c)].norm() > 1e-12).collect();
                assert!(hits.iter().all(|&r| i.contains(r + 1)));
            }
        }
        let mut rng = rng_for(26, 0);
        let s = random_unitary(&mut rng, 4);
        assert_eq!(plus_part(&frame_from_unitary(&s)).0, 0);
        // eigenphase 0 with multiplicity two
        let u = random_unitary(&mut rng, 4);
        let d = UnitaryMatrix::diagonal_phases(&[0.0, 0.0, 1.0, -2.5]);
        let s =
            UnitaryMatrix::new(u.as_matrix() * d.as_matrix() * u.as_matrix().adjoint()).unwrap();
        assert_eq!(plus_part(&frame_from_unitary(&s)).0, 2);
        assert_eq!(minus_part(&frame_from_unitary(&s)).0, 0);
    }

    #[test]
    fn symplectic_action_matches_act() {
        for k in 0..50 {
            let mut rng = rng_for(27, k);
            let s = random_unitary(&mut rng, 3);
            let (up, um) = (random_unitary(&mut rng, 3), random_unitary(&mut rng, 3));
            let f = symplectic_act(&up, &um, &frame_from_unitary(&s)).unwrap();
            let via = frame_from_unitary(&act(&up, &um, &s).unwrap());
            assert!(subspace_distance(f.as_matrix(), via.as_matrix()) < 1e-8);
        }
    }

    #[test]
    fn serde_roundtrip() {
        let f = critical_lagrangian(s_of(2, &[1]));
        let js = serde_json::to_string(&f).unwrap();
        assert!(js.starts_with(r#"{"n":2,"rows":4,"cols":2"#));
        let back: LagrangianFrame = serde_json::from_str(&js).unwrap();
        assert_eq!(back, f);
    }
}
