//! The Morse function `f_A(S) = Re tr(AS)` on `U(n)`, its gradient flow, the
//! unstable/stable strata of the critical points `S_I`, and tunnelling
//! trajectories between them.
//!
//! On lagrangians the flow is linear: `L_{Φ_t(S)} = e^{tÂ} L_S` with
//! `Â = diag(A, −A)`. Everything that has to survive long horizons is
//! computed on frames and only converted back to unitaries at the end.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{order_leq, SubsetIndex};
use crate::error::{Error, Result};
use crate::lagrangian::{
    critical_lagrangian, frame_from_arnold, frame_from_unitary, j_map, null_space,
    subspace_distance, unitary_from_frame, LagrangianFrame,
};
use crate::matrix::{
    column_echelon, diag_complex, diag_real, exp_i_hermitian, identity, max_abs, orthonormalize,
    singular_values, unitary_eig_tol, CMatrix, HermitianMatrix, Tolerances, UnitaryMatrix, ONE,
    ZERO,
};
use crate::sampling::{random_hermitian, random_hermitian_pattern, rng_for, SampleRng};

/// Largest `|t|·α_n` accepted by the flow.
pub const FLOW_HORIZON: f64 = 350.0;
/// Longest single frame-flow step, measured in `|h|·α_n`.
const FLOW_STEP: f64 = 4.0;
/// Distance (sine of the largest principal angle) at which a limit is accepted.
pub const LIMIT_DISTANCE: f64 = 1e-6;
/// Default number of random restarts for the tunnelling witness search.
pub const DEFAULT_WITNESS_BUDGET: usize = 64;

/// Eigenvalues `0 < α_1 < ⋯ < α_n` of `A`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FlowSpec {
    alpha: Vec<f64>,
}

impl TryFrom<Vec<f64>> for FlowSpec {
    type Error = Error;

    fn try_from(alpha: Vec<f64>) -> Result<Self> {
        FlowSpec::new(alpha)
    }
}

impl From<FlowSpec> for Vec<f64> {
    fn from(s: FlowSpec) -> Self {
        s.alpha
    }
}

impl FlowSpec {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::InvalidFlowSpec("empty".into()));
        }
        if alpha.iter().any(|a| !a.is_finite() || *a <= 0.0) {
            return Err(Error::InvalidFlowSpec(
                "entries must be positive and finite".into(),
            ));
        }
        if alpha.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidFlowSpec(
                "entries must be strictly increasing".into(),
            ));
        }
        Ok(FlowSpec { alpha })
    }

    /// `α_i = (2i − 1)/2`, the self-indexing choice.
    pub fn default_for(n: usize) -> Self {
        FlowSpec {
            alpha: (1..=n).map(|i| (2 * i - 1) as f64 / 2.0).collect(),
        }
    }

    /// `"default"` or a comma-separated list of reals.
    pub fn parse(text: &str, n: usize) -> Result<Self> {
        let text = text.trim();
        if text == "default" {
            return Ok(Self::default_for(n));
        }
        let alpha = text
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidFlowSpec(format!("{s:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if alpha.len() != n {
            return Err(Error::InvalidFlowSpec(format!(
                "expected {n} values, got {}",
                alpha.len()
            )));
        }
        Self::new(alpha)
    }

    pub fn n(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn a_matrix(&self) -> CMatrix {
        diag_real(&self.alpha)
    }

    fn alpha_max(&self) -> f64 {
        *self.alpha.last().expect("non-empty")
    }

    fn alpha_min(&self) -> f64 {
        self.alpha[0]
    }

    fn check(&self, n: usize) -> Result<()> {
        if self.n() != n {
            return Err(Error::Shape {
                expected: format!("{}x{}", self.n(), self.n()),
                got: format!("{n}x{n}"),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

// ---------------------------------------------------------------------------
// Morse function and critical points

pub fn morse_value(spec: &FlowSpec, s: &UnitaryMatrix) -> Result<f64> {
    spec.check(s.n())?;
    Ok(spec
        .alpha
        .iter()
        .enumerate()
        .map(|(k, a)| a * s.as_matrix()[(k, k)].re)
        .sum())
}

/// `Re tr(Â P_L)`.
pub fn phi_value(spec: &FlowSpec, f: &LagrangianFrame) -> Result<f64> {
    let n = f.n();
    spec.check(n)?;
    let p = f.projector();
    Ok(spec
        .alpha
        .iter()
        .enumerate()
        .map(|(k, a)| a * (p[(k, k)].re - p[(n + k, n + k)].re))
        .sum())
}

/// `S_I`: `+1` on `I`, `−1` off `I`.
pub fn critical_unitary(subset: SubsetIndex) -> UnitaryMatrix {
    let d: Vec<f64> = (1..=subset.n())
        .map(|k| if subset.contains(k) { 1.0 } else { -1.0 })
        .collect();
    UnitaryMatrix::from_trusted(diag_real(&d))
}

/// `S = S*`, `S² = 𝟙` and `SA = AS`, each within `1e−8`.
pub fn is_critical(s: &UnitaryMatrix, spec: &FlowSpec) -> Result<bool> {
    spec.check(s.n())?;
    let m = s.as_matrix();
    let a = spec.a_matrix();
    let tol = 1e-8;
    Ok(max_abs(&(m - m.adjoint())) <= tol
        && max_abs(&(m * m - identity(s.n()))) <= tol
        && max_abs(&(m * &a - &a * m)) <= tol)
}

fn signs(subset: SubsetIndex) -> Vec<f64> {
    (1..=subset.n())
        .map(|k| if subset.contains(k) { 1.0 } else { -1.0 })
        .collect()
}

/// Second derivative of `t ↦ f_A(S_I e^{itZ})` at `t = 0`:
/// `−Σ_i ε_iα_i z_ii² − Σ_{i<j} (ε_iα_i + ε_jα_j)|z_ij|²`.
pub fn hessian_form(subset: SubsetIndex, spec: &FlowSpec, z: &HermitianMatrix) -> Result<f64> {
    let n = subset.n();
    spec.check(n)?;
    spec.check(z.n())?;
    let eps = signs(subset);
    let w: Vec<f64> = eps.iter().zip(&spec.alpha).map(|(e, a)| e * a).collect();
    let zm = z.as_matrix();
    let mut q = 0.0;
    for i in 0..n {
        q -= w[i] * zm[(i, i)].re * zm[(i, i)].re;
        for j in i + 1..n {
            q -= (w[i] + w[j]) * zm[(i, j)].norm_sqr();
        }
    }
    Ok(q)
}

/// Fourth-order central second difference of `f_A` along `S_I e^{itZ}`.
pub fn hessian_finite_difference(
    subset: SubsetIndex,
    spec: &FlowSpec,
    z: &HermitianMatrix,
    h: f64,
) -> Result<f64> {
    let s = critical_unitary(subset);
    let f = |t: f64| -> Result<f64> {
        let moved = UnitaryMatrix::from_trusted(s.as_matrix() * exp_i_hermitian(z, t).as_matrix());
        morse_value(spec, &moved)
    };
    let sum = -f(2.0 * h)? + 16.0 * f(h)? - 30.0 * f(0.0)? + 16.0 * f(-h)? - f(-2.0 * h)?;
    Ok(sum / (12.0 * h * h))
}

/// Orthonormal basis (Frobenius inner product) of the real vector space of
/// n×n hermitian matrices.
pub fn hermitian_basis(n: usize) -> Vec<HermitianMatrix> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in i..n {
            if i == j {
                let mut m = CMatrix::zeros(n, n);
                m[(i, i)] = ONE;
                out.push(HermitianMatrix::new(m).expect("hermitian"));
            } else {
                let mut re = CMatrix::zeros(n, n);
                re[(i, j)] = Complex64::new(r, 0.0);
                re[(j, i)] = Complex64::new(r, 0.0);
                out.push(HermitianMatrix::new(re).expect("hermitian"));
                let mut im = CMatrix::zeros(n, n);
                im[(i, j)] = Complex64::new(0.0, r);
                im[(j, i)] = Complex64::new(0.0, -r);
                out.push(HermitianMatrix::new(im).expect("hermitian"));
            }
        }
    }
    out
}

/// Number of negative eigenvalues of [`hessian_form`] on the `n²`-dimensional
/// real space of hermitian matrices, via its Gram matrix by polarization.
pub fn hessian_negative_count(subset: SubsetIndex, spec: &FlowSpec) -> Result<usize> {
    let basis = hermitian_basis(subset.n());
    let d = basis.len();
    let q = |z: &HermitianMatrix| hessian_form(subset, spec, z);
    let diag: Vec<f64> = basis.iter().map(q).collect::<Result<_>>()?;
    let mut gram = DMatrix::<f64>::zeros(d, d);
    for a in 0..d {
        gram[(a, a)] = diag[a];
        for b in a + 1..d {
            let sum = HermitianMatrix::new(basis[a].as_matrix() + basis[b].as_matrix())?;
            let v = (q(&sum)? - diag[a] - diag[b]) / 2.0;
            gram[(a, b)] = v;
            gram[(b, a)] = v;
        }
    }
    let eig = gram.symmetric_eigen();
    let scale = eig
        .eigenvalues
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1.0);
    Ok(eig
        .eigenvalues
        .iter()
        .filter(|&&v| v < -1e-12 * scale)
        .count())
}

/// `ind(S_I) = w(I)`.
pub fn morse_index(subset: SubsetIndex, spec: &FlowSpec) -> Result<u64> {
    spec.check(subset.n())?;
    Ok(subset.weight())
}

// ---------------------------------------------------------------------------
// Flow

fn check_horizon(spec: &FlowSpec, t: f64) -> Result<()> {
    if !t.is_finite() || t.abs() * spec.alpha_max() > FLOW_HORIZON {
        return Err(Error::FlowHorizon);
    }
    Ok(())
}

/// `e^{tÂ}` applied to the span of `f`, re-orthonormalized after every step
/// of length at most `4/α_n`.
pub fn flow_frame(f: &LagrangianFrame, t: f64, spec: &FlowSpec) -> Result<LagrangianFrame> {
    let n = f.n();
    spec.check(n)?;
    check_horizon(spec, t)?;
    let steps = ((t.abs() * spec.alpha_max() / FLOW_STEP).ceil() as usize).max(1);
    let h = t / steps as f64;
    let grow: Vec<f64> = spec.alpha.iter().map(|a| (h * a).exp()).collect();
    let mut q = orthonormalize(f.as_matrix());
    for _ in 0..steps {
        for k in 0..n {
            let (up, down) = (grow[k], 1.0 / grow[k]);
            for c in 0..n {
                q[(k, c)] *= up;
                q[(n + k, c)] *= down;
            }
        }
        q = orthonormalize(&q);
    }
    Ok(LagrangianFrame::from_trusted(q))
}

/// `Φ_t(S)`, computed through `L_{Φ_t(S)} = e^{tÂ} L_S`.
pub fn flow(s: &UnitaryMatrix, t: f64, spec: &FlowSpec) -> Result<UnitaryMatrix> {
    let f = flow_frame(&frame_from_unitary(s), t, spec)?;
    unitary_from_frame(&f)
}

/// `(sinh tA + cosh tA·S)(cosh tA + sinh tA·S)^{-1}` evaluated literally.
/// Accurate for moderate `|t|`; [`flow`] is the stable version.
pub fn flow_closed_form(s: &UnitaryMatrix, t: f64, spec: &FlowSpec) -> Result<UnitaryMatrix> {
    spec.check(s.n())?;
    check_horizon(spec, t)?;
    let sh = diag_real(
        &spec
            .alpha
            .iter()
            .map(|a| (t * a).sinh())
            .collect::<Vec<_>>(),
    );
    let ch = diag_real(
        &spec
            .alpha
            .iter()
            .map(|a| (t * a).cosh())
            .collect::<Vec<_>>(),
    );
    let num = &sh + &ch * s.as_matrix();
    let den = &ch + &sh * s.as_matrix();
    let inv = den.lu().try_inverse().ok_or(Error::FlowHorizon)?;
    let out = num * inv;
    if !out.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::FlowHorizon);
    }
    Ok(UnitaryMatrix::from_trusted(
        crate::lagrangian::polar_unitary(&out),
    ))
}

/// Flow in chart-`I` Arnold coordinates: `e^{−tA_I} T e^{−tA_I}` where
/// `A_I = diag(±α_k)`, `+` on `I`.
pub fn flow_arnold(
    t_coords: &HermitianMatrix,
    t: f64,
    subset: SubsetIndex,
    spec: &FlowSpec,
) -> Result<HermitianMatrix> {
    let n = subset.n();
    spec.check(n)?;
    spec.check(t_coords.n())?;
    check_horizon(spec, t)?;
    let d: Vec<f64> = signs(subset)
        .iter()
        .zip(&spec.alpha)
        .map(|(e, a)| (-t * e * a).exp())
        .collect();
    let dm = diag_real(&d);
    HermitianMatrix::new(&dm * t_coords.as_matrix() * &dm)
}

/// `V(S) = A − SAS`, the derivative of `Φ_t(S)` at `t = 0`.
pub fn flow_vector_field(s: &UnitaryMatrix, spec: &FlowSpec) -> Result<CMatrix> {
    spec.check(s.n())?;
    let a = spec.a_matrix();
    Ok(&a - s.as_matrix() * &a * s.as_matrix())
}

// ---------------------------------------------------------------------------
// Strata

/// Rows `0..n` of a 2n-row frame, or rows `n..2n`.
fn block(m: &CMatrix, top: bool) -> CMatrix {
    let n = m.nrows() / 2;
    m.rows(if top { 0 } else { n }, n).into_owned()
}

/// `I = {p : rank(first p rows of K) > rank(first p−1 rows)}` for a basis `K`
/// of a subspace of `E`: the smallest-index pivots of its echelon form.
pub fn jump_positions(kernel: &CMatrix, rank_tol: f64) -> Vec<usize> {
    let n = kernel.nrows();
    let mut out = Vec::new();
    let mut prev = 0;
    for p in 1..=n {
        let sv = singular_values(&kernel.rows(0, p).into_owned());
        let rank = sv.iter().filter(|&&s| s > rank_tol).count();
        if rank > prev {
            out.push(p);
        }
        prev = rank;
    }
    out
}

fn subset_from_positions(n: usize, positions: &[usize]) -> SubsetIndex {
    SubsetIndex::new(n, positions).expect("positions lie in 1..=n")
}

/// The `I` with `S ∈ W_I^-`: pivots of `ker(𝟙 − S)` against the standard flag.
pub fn classify_unstable(s: &UnitaryMatrix) -> Result<SubsetIndex> {
    classify_unstable_tol(s, &Tolerances::default())
}

pub fn classify_unstable_tol(s: &UnitaryMatrix, tol: &Tolerances) -> Result<SubsetIndex> {
    let eig = unitary_eig_tol(s, tol);
    if eig
        .phases
        .iter()
        .any(|p| (tol.phase_kernel..tol.phase_guard).contains(&p.abs()))
    {
        return Err(Error::SpectralGap);
    }
    let kernel = eig.columns_where(|p| p.abs() < tol.phase_kernel);
    Ok(subset_from_positions(
        s.n(),
        &jump_positions(&kernel, tol.rank),
    ))
}

/// The `K` with `S ∈ W_K^+`: the complement of `classify_unstable(−S)`.
pub fn classify_stable(s: &UnitaryMatrix) -> Result<SubsetIndex> {
    classify_stable_tol(s, &Tolerances::default())
}

pub fn classify_stable_tol(s: &UnitaryMatrix, tol: &Tolerances) -> Result<SubsetIndex> {
    Ok(classify_unstable_tol(&s.neg(), tol)?.complement())
}

/// Singular-value bands matching the eigenphase bands: for an orthonormal
/// frame of `L_S`, the singular values of the bottom block are `|sin(θ/2)|`.
fn sigma_bands(tol: &Tolerances) -> (f64, f64) {
    (
        (tol.phase_kernel / 2.0).sin(),
        (tol.phase_guard / 2.0).sin(),
    )
}

/// Orthonormal basis (n×k) of the `E`-components of `L ∩ Ê⁺`, with the
/// guard band reported as [`Error::SpectralGap`].
fn stay_kernel(q: &CMatrix, tol: &Tolerances) -> Result<CMatrix> {
    let (kernel, guard) = sigma_bands(tol);
    let y = block(q, false);
    let sv = singular_values(&y);
    if sv.iter().any(|s| (kernel..guard).contains(s)) {
        return Err(Error::SpectralGap);
    }
    let null = null_space(&y, kernel);
    Ok(orthonormalize_or_empty(&(block(q, true) * null)))
}

fn orthonormalize_or_empty(m: &CMatrix) -> CMatrix {
    if m.ncols() == 0 {
        m.clone()
    } else {
        orthonormalize(m)
    }
}

/// Frame-level version of [`classify_unstable`], reading `L ∩ Ê⁺` from the
/// frame instead of from eigenvectors.
pub fn classify_unstable_frame(f: &LagrangianFrame) -> Result<SubsetIndex> {
    let tol = Tolerances::default();
    let q = orthonormalize(f.as_matrix());
    let k = stay_kernel(&q, &tol)?;
    Ok(subset_from_positions(f.n(), &jump_positions(&k, tol.rank)))
}

pub fn classify_stable_frame(f: &LagrangianFrame) -> Result<SubsetIndex> {
    Ok(classify_unstable_frame(&j_map(f))?.complement())
}

/// Outcome of a limit computation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowLimit {
    pub limit: SubsetIndex,
    /// Horizon at which convergence was declared.
    pub horizon: f64,
    /// Sine of the largest principal angle to `Λ_limit` at that horizon.
    pub distance: f64,
}

/// Nearest critical lagrangian to the span of an orthonormal frame, and the
/// sine of the largest principal angle to it.
pub fn nearest_critical(q: &CMatrix) -> (SubsetIndex, f64) {
    let n = q.ncols();
    let q = orthonormalize(q);
    let members: Vec<usize> = (0..n)
        .filter(|&k| q.row(k).norm() > q.row(n + k).norm())
        .map(|k| k + 1)
        .collect();
    let k = subset_from_positions(n, &members);
    // rows outside Λ_K: top rows off K, bottom rows on K
    let outside: Vec<usize> = (0..n)
        .map(|r| if k.contains(r + 1) { n + r } else { r })
        .collect();
    let dist = singular_values(&q.select_rows(&outside))
        .first()
        .copied()
        .unwrap_or(0.0);
    (k, dist.min(1.0))
}

/// Backward limit (`t → ∞` under `e^{−tÂ}`) of the span of `f`.
///
/// A frame sitting on a lower stratum cannot be followed naively: rounding
/// errors of order `1e−16` in the decaying block are amplified by
/// `e^{2tα_n}` long before the surviving directions separate. The frame is
/// therefore first regularized onto its stratum. `L ∩ Ê⁺` is computed with
/// the same spectral bands as [`classify_unstable`] and snapped to reduced
/// echelon form `v_p = e_p + Σ x_j e_j` (`p ∈ P`, exact zeros elsewhere).
/// The remaining columns are the vectors of `L` whose bottom block is the
/// echelon basis `w_j = e_j − Σ_{p<j} conj(v_p[j]) e_p` (`j ∉ P`) of
/// `(L∩Ê⁺)^⊥`. That frame is flowed exactly, row scaling with per-column
/// normalization in log space, over doubling horizons.
fn backward_limit(f: &LagrangianFrame, spec: &FlowSpec, tol: &Tolerances) -> Result<FlowLimit> {
    let n = f.n();
    spec.check(n)?;
    let q = orthonormalize(f.as_matrix());
    let kernel = stay_kernel(&q, tol)?;
    let (pivots, v) = if kernel.ncols() == 0 {
        (Vec::new(), CMatrix::zeros(n, 0))
    } else {
        column_echelon(&kernel, tol.rank).ok_or(Error::LimitNotResolved)?
    };

    let mut cols = CMatrix::zeros(2 * n, n);
    for (c, _) in pivots.iter().enumerate() {
        cols.view_mut((0, c), (n, 1)).copy_from(&v.column(c));
    }
    let x = block(&q, true);
    let y = block(&q, false);
    let y_pinv = y
        .clone()
        .pseudo_inverse(tol.rank)
        .map_err(|_| Error::LimitNotResolved)?;
    let proj_v = if v.ncols() > 0 {
        let ov = orthonormalize(&v);
        Some(&ov * ov.adjoint())
    } else {
        None
    };
    let rest: Vec<usize> = (0..n).filter(|j| !pivots.contains(j)).collect();
    for (slot, &j) in rest.iter().enumerate() {
        let mut w = CMatrix::zeros(n, 1);
        w[(j, 0)] = ONE;
        for (c, &p) in pivots.iter().enumerate() {
            if p < j {
                w[(p, 0)] -= v[(j, c)].conj();
            }
        }
        let coeff = &y_pinv * &w;
        let mut z = &x * coeff;
        if let Some(pv) = &proj_v {
            z -= pv * &z;
        }
        let col = pivots.len() + slot;
        cols.view_mut((0, col), (n, 1)).copy_from(&z);
        cols.view_mut((n, col), (n, 1)).copy_from(&w);
    }
    if !crate::matrix::is_well_conditioned(&cols, tol.rank) {
        return Err(Error::LimitNotResolved);
    }

    let t_max = 60.0 / spec.alpha_min();
    let mut horizon = 1.0;
    let mut previous: Option<SubsetIndex> = None;
    while horizon <= t_max {
        let flowed = scale_backward(&cols, horizon, spec);
        let (k, dist) = nearest_critical(&flowed);
        if dist < LIMIT_DISTANCE {
            if previous == Some(k) {
                return Ok(FlowLimit {
                    limit: k,
                    horizon,
                    distance: dist,
                });
            }
            previous = Some(k);
        } else {
            previous = None;
        }
        horizon *= 2.0;
    }
    Err(Error::LimitNotResolved)
}

/// `e^{−tÂ}` on each column, every column rescaled so its largest
/// log-magnitude entry is 0. Exact zeros stay zero.
fn scale_backward(cols: &CMatrix, t: f64, spec: &FlowSpec) -> CMatrix {
    let n = cols.ncols();
    let mut out = CMatrix::zeros(2 * n, n);
    for c in 0..n {
        let exps: Vec<Option<f64>> = (0..2 * n)
            .map(|r| {
                let z = cols[(r, c)];
                (z != ZERO).then(|| {
                    let a = spec.alpha[r % n];
                    z.norm().ln() + if r < n { -t * a } else { t * a }
                })
            })
            .collect();
        let top = exps
            .iter()
            .flatten()
            .fold(f64::NEG_INFINITY, |m, &e| m.max(e));
        for r in 0..2 * n {
            if let Some(e) = exps[r] {
                let z = cols[(r, c)];
                out[(r, c)] = z / z.norm() * (e - top).exp();
            }
        }
    }
    out
}

pub fn flow_limit_frame(
    f: &LagrangianFrame,
    spec: &FlowSpec,
    direction: Direction,
) -> Result<FlowLimit> {
    flow_limit_frame_tol(f, spec, direction, &Tolerances::default())
}

/// Forward limits use `J e^{tÂ} = e^{−tÂ} J`: the forward limit of `L` is the
/// complement of the backward limit of `JL`.
pub fn flow_limit_frame_tol(
    f: &LagrangianFrame,
    spec: &FlowSpec,
    direction: Direction,
    tol: &Tolerances,
) -> Result<FlowLimit> {
    let result = match direction {
        Direction::Backward => backward_limit(f, spec, tol),
        Direction::Forward => backward_limit(&j_map(f), spec, tol).map(|mut r| {
            r.limit = r.limit.complement();
            r
        }),
    };
    result.map_err(|e| match e {
        Error::SpectralGap => Error::LimitNotResolved,
        other => other,
    })
}

/// `lim_{t→±∞} Φ_t(S)` as the index `K` of the critical point `S_K`.
pub fn flow_limit(s: &UnitaryMatrix, spec: &FlowSpec, direction: Direction) -> Result<SubsetIndex> {
    Ok(flow_limit_frame(&frame_from_unitary(s), spec, direction)?.limit)
}

// ---------------------------------------------------------------------------
// Stratum samples and tunnelling

fn random_phase_away_from_real<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // |θ| ∈ [0.2, π − 0.2] keeps eigenvalues away from ±1
    let mag = 0.2 + (std::f64::consts::PI - 0.4) * rng.random::<f64>();
    if rng.random::<bool>() {
        mag
    } else {
        -mag
    }
}

/// `P_V − P_W + Σ λ_j u_j u_j*` for orthogonal subspaces `V`, `W` and an
/// orthonormal basis `u_j` of `(V ⊕ W)^⊥`, with random `λ_j` away from `±1`.
fn unitary_with_eigenspaces<R: Rng + ?Sized>(
    rng: &mut R,
    v: &CMatrix,
    w: &CMatrix,
) -> UnitaryMatrix {
    let n = v.nrows();
    let mut both = CMatrix::zeros(n, v.ncols() + w.ncols());
    both.columns_mut(0, v.ncols()).copy_from(v);
    both.columns_mut(v.ncols(), w.ncols()).copy_from(w);
    let mut s = CMatrix::zeros(n, n);
    if v.ncols() > 0 {
        let ov = orthonormalize(v);
        s += &ov * ov.adjoint();
    }
    if w.ncols() > 0 {
        let ow = orthonormalize(w);
        s -= &ow * ow.adjoint();
    }
    let u = if both.ncols() == 0 {
        identity(n)
    } else {
        null_space(&both.adjoint(), 1e-10)
    };
    if u.ncols() > 0 {
        let lambdas: Vec<Complex64> = (0..u.ncols())
            .map(|_| Complex64::from_polar(1.0, random_phase_away_from_real(rng)))
            .collect();
        s += &u * diag_complex(&lambdas) * u.adjoint();
    }
    UnitaryMatrix::from_trusted(crate::lagrangian::polar_unitary(&s))
}

/// Echelon basis `v_p = e_p + Σ_{j>p, j∉I} z_j e_j` (`p ∈ I`) with random
/// `z_j` of modulus at most 1.
fn random_echelon<R: Rng + ?Sized>(rng: &mut R, subset: SubsetIndex) -> CMatrix {
    let n = subset.n();
    let members = subset.members();
    let mut v = CMatrix::zeros(n, members.len());
    for (c, &p) in members.iter().enumerate() {
        v[(p - 1, c)] = ONE;
        for j in p + 1..=n {
            if !subset.contains(j) {
                v[(j - 1, c)] = Complex64::from_polar(
                    rng.random::<f64>(),
                    rng.random::<f64>() * std::f64::consts::TAU,
                );
            }
        }
    }
    v
}

/// A random unitary on the unstable stratum `W_I^-`: `ker(𝟙 − S)` is spanned
/// by random echelon vectors with pivots `I`, and no other eigenvalue lies
/// near `±1`.
pub fn stratum_sample<R: Rng + ?Sized>(rng: &mut R, subset: SubsetIndex) -> UnitaryMatrix {
    let v = random_echelon(rng, subset);
    let n = subset.n();
    unitary_with_eigenspaces(rng, &v, &CMatrix::zeros(n, 0))
}

/// `K ⊴ M`, which decides whether some trajectory runs from `S_M` to `S_K`.
pub fn tunnelling_exists(m: SubsetIndex, k: SubsetIndex) -> Result<bool> {
    order_leq(&k, &m)
}

/// Deterministic candidate for `K ⊴ M`. Pair the ℓ-th largest element `p` of
/// `M` with the ℓ-th largest element `k ≥ p` of `K`, take
/// `V = span{e_p + c e_k}` (or `e_p` when `k = p`) as `ker(𝟙 − S)`, and as
/// `ker(𝟙 + S)` the echelon vectors of `V^⊥` whose pivots lie in `K^c`.
fn seeded_witness<R: Rng + ?Sized>(
    rng: &mut R,
    m: SubsetIndex,
    k: SubsetIndex,
) -> Option<LagrangianFrame> {
    let n = m.n();
    let mv: Vec<usize> = m.members().into_iter().rev().collect();
    let kv: Vec<usize> = k.members().into_iter().rev().collect();
    let mut v = CMatrix::zeros(n, mv.len());
    for (c, &p) in mv.iter().enumerate() {
        let q = *kv.get(c)?;
        v[(p - 1, c)] = ONE;
        if q != p {
            v[(q - 1, c)] = Complex64::from_polar(
                0.5 + rng.random::<f64>(),
                rng.random::<f64>() * std::f64::consts::TAU,
            );
        }
    }
    let perp = if v.ncols() == 0 {
        identity(n)
    } else {
        null_space(&v.adjoint(), 1e-10)
    };
    let (pivots, echelon) = column_echelon(&perp, 1e-8)?;
    let keep: Vec<usize> = (0..pivots.len())
        .filter(|&c| !k.contains(pivots[c] + 1))
        .collect();
    let w = echelon.select_columns(&keep);
    Some(frame_from_unitary(&unitary_with_eigenspaces(rng, &v, &w)))
}

/// Chart-`M` coordinate pattern of `W_M^-`: `t_ji = 0` for `j ≤ i`, `i ∈ M`
/// (and the hermitian mirror).
pub fn unstable_pattern(m: SubsetIndex) -> impl Fn(usize, usize) -> bool {
    move |a: usize, b: usize| {
        // entry (j, i) with j ≤ i is forced to zero when i ∈ M
        !m.contains(a.max(b) + 1)
    }
}

fn limits_match(f: &LagrangianFrame, spec: &FlowSpec, m: SubsetIndex, k: SubsetIndex) -> bool {
    matches!(flow_limit_frame(f, spec, Direction::Backward), Ok(r) if r.limit == m)
        && matches!(flow_limit_frame(f, spec, Direction::Forward), Ok(r) if r.limit == k)
}

/// Search for a lagrangian whose backward limit is `Λ_M` and forward limit
/// is `Λ_K`. The seeded construction is tried first when `K ⊴ M`, then
/// `budget` random chart-`M` coordinates in the `W_M^-` pattern.
pub fn tunnelling_witness(
    m: SubsetIndex,
    k: SubsetIndex,
    spec: &FlowSpec,
    seed: u64,
    budget: usize,
) -> Result<Option<LagrangianFrame>> {
    let n = m.n();
    spec.check(n)?;
    if k.n() != n {
        return Err(Error::AmbientMismatch {
            left: n,
            right: k.n(),
        });
    }
    if k == m {
        return Ok(Some(critical_lagrangian(m)));
    }
    let stream_base = (m.bits() << 32) ^ k.bits();
    if tunnelling_exists(m, k)? {
        let mut rng = rng_for(seed, stream_base);
        if let Some(f) = seeded_witness(&mut rng, m, k) {
            if limits_match(&f, spec, m, k) {
                return Ok(Some(f));
            }
        }
    }
    let pattern = unstable_pattern(m);
    for attempt in 0..budget {
        let mut rng: SampleRng = rng_for(seed, stream_base.wrapping_add(1 + attempt as u64));
        let t = random_hermitian_pattern(&mut rng, n, 2.0, &pattern);
        let f = frame_from_arnold(m, &t)?;
        if limits_match(&f, spec, m, k) {
            return Ok(Some(f));
        }
    }
    Ok(None)
}

/// Random element `[[A, A·H], [0, (A*)^{-1}]]` of the Borel group: `A` lower
/// triangular with `|A_kk| ∈ [0.5, 2]`, `H` hermitian.
pub fn borel_sample(n: usize, seed: u64) -> CMatrix {
    let mut rng = rng_for(seed, 0xB0_4E1);
    borel_sample_with(&mut rng, n)
}

pub fn borel_sample_with<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let mut a = CMatrix::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = Complex64::from_polar(
            0.5 + 1.5 * rng.random::<f64>(),
            rng.random::<f64>() * std::f64::consts::TAU,
        );
        for j in 0..i {
            a[(i, j)] = Complex64::new(
                2.0 * rng.random::<f64>() - 1.0,
                2.0 * rng.random::<f64>() - 1.0,
            );
        }
    }
    let h = random_hermitian(rng, n, 2.0);
    borel_element(&a, &h)
}

pub fn borel_element(a: &CMatrix, h: &HermitianMatrix) -> CMatrix {
    let n = a.nrows();
    let a_inv_adj = a
        .adjoint()
        .try_inverse()
        .expect("triangular with nonzero diagonal");
    let mut t = CMatrix::zeros(2 * n, 2 * n);
    t.view_mut((0, 0), (n, n)).copy_from(a);
    t.view_mut((0, n), (n, n)).copy_from(&(a * h.as_matrix()));
    t.view_mut((n, n), (n, n)).copy_from(&a_inv_adj);
    t
}

/// `[[0, −𝟙], [𝟙, 0]]`.
pub fn j_matrix(n: usize) -> CMatrix {
    let mut j = CMatrix::zeros(2 * n, 2 * n);
    j.view_mut((0, n), (n, n)).copy_from(&(-identity(n)));
    j.view_mut((n, 0), (n, n)).copy_from(&identity(n));
    j
}

// ---------------------------------------------------------------------------
// Trajectories

/// One row per time: `t`, the Morse value, and the distance to each `Λ_K`.
pub fn trajectory_csv(
    s: &UnitaryMatrix,
    spec: &FlowSpec,
    times: &[f64],
    targets: &[SubsetIndex],
) -> Result<String> {
    let mut out = String::from("t,morse_value");
    for k in targets {
        write!(out, ",\"dist_{k}\"").expect("write to string");
    }
    out.push('\n');
    let f0 = frame_from_unitary(s);
    for &t in times {
        let f = flow_frame(&f0, t, spec)?;
        let value = phi_value(spec, &f)?;
        write!(out, "{t},{value}").expect("write to string");
        for k in targets {
            let d = subspace_distance(f.as_matrix(), critical_lagrangian(*k).as_matrix());
            write!(out, ",{d}").expect("write to string");
        }
        out.push('\n');
    }
    Ok(out)
}

/// `Φ_t(S)` at each requested time.
pub fn trajectory_snapshots(
    s: &UnitaryMatrix,
    spec: &FlowSpec,
    times: &[f64],
) -> Result<Vec<(f64, UnitaryMatrix)>> {
    times.iter().map(|&t| Ok((t, flow(s, t, spec)?))).collect()
}
