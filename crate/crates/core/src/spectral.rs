//! Spectral flow of closed loops of unitaries: signed eigenvalue crossings
//! through a point of the circle, and the winding number of the determinant.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{max_abs, unitary_eig, wrap_phase, UnitaryMatrix, ONE};
use crate::sampling::random_unitary;

/// Largest `‖S_{k+1} − S_k‖_max` accepted between consecutive samples.
pub const MAX_SAMPLE_GAP: f64 = 0.5;
/// Closing tolerance `‖S(π) − S(−π)‖_max`.
pub const CLOSE_TOL: f64 = 1e-8;
/// Phases this close to `ρ`, or to each other at a crossing, are non-generic.
pub const CROSSING_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LoopSample {
    pub theta: f64,
    #[serde(rename = "S")]
    pub s: UnitaryMatrix,
}

/// Samples `θ_0 = −π < θ_1 < ⋯ < θ_N = π` of a loop `θ ↦ S(θ)`.
#[derive(Clone, Debug)]
pub struct UnitaryLoop {
    samples: Vec<LoopSample>,
    closed: bool,
}

impl Serialize for UnitaryLoop {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        self.samples.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for UnitaryLoop {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let samples = Vec::<LoopSample>::deserialize(deserializer)?;
        UnitaryLoop::new(samples).map_err(serde::de::Error::custom)
    }
}

impl UnitaryLoop {
    pub fn new(samples: Vec<LoopSample>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidLoop("need at least two samples".into()));
        }
        let n = samples[0].s.n();
        if samples.iter().any(|p| p.s.n() != n) {
            return Err(Error::InvalidLoop("samples have different sizes".into()));
        }
        let first = samples[0].theta;
        let last = samples[samples.len() - 1].theta;
        if (first + PI).abs() > 1e-12 || (last - PI).abs() > 1e-12 {
            return Err(Error::InvalidLoop("theta must run from -pi to pi".into()));
        }
        if samples
            .windows(2)
            .any(|w| w[1].theta.partial_cmp(&w[0].theta) != Some(std::cmp::Ordering::Greater))
        {
            return Err(Error::InvalidLoop(
                "theta must be strictly increasing".into(),
            ));
        }
        if samples
            .windows(2)
            .any(|w| max_abs(&(w[1].s.as_matrix() - w[0].s.as_matrix())) > MAX_SAMPLE_GAP)
        {
            return Err(Error::LoopUndersampled);
        }
        let closed =
            max_abs(&(samples[samples.len() - 1].s.as_matrix() - samples[0].s.as_matrix()))
                <= CLOSE_TOL;
        Ok(UnitaryLoop { samples, closed })
    }

    /// `count + 1` equally spaced samples of `f` on `[−π, π]`.
    pub fn from_fn(count: usize, f: impl Fn(f64) -> UnitaryMatrix) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidLoop("need at least one interval".into()));
        }
        let samples = (0..=count)
            .map(|k| {
                let theta = if k == count {
                    PI
                } else {
                    -PI + 2.0 * PI * k as f64 / count as f64
                };
                LoopSample { theta, s: f(theta) }
            })
            .collect();
        Self::new(samples)
    }

    pub fn n(&self) -> usize {
        self.samples[0].s.n()
    }

    pub fn samples(&self) -> &[LoopSample] {
        &self.samples
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// `θ ↦ U S(θ) U*`.
    pub fn conjugate(&self, u: &UnitaryMatrix) -> Result<Self> {
        let samples = self
            .samples
            .iter()
            .map(|p| LoopSample {
                theta: p.theta,
                s: UnitaryMatrix::from_trusted(
                    u.as_matrix() * p.s.as_matrix() * u.as_matrix().adjoint(),
                ),
            })
            .collect();
        Self::new(samples)
    }

    /// The loop run twice, reparametrized onto `[−π, π]`.
    pub fn traverse_twice(&self) -> Result<Self> {
        let mut samples = Vec::with_capacity(2 * self.samples.len() - 1);
        for (lap, offset) in [(0, -PI), (1, 0.0)] {
            for (k, p) in self.samples.iter().enumerate() {
                if lap == 1 && k == 0 {
                    continue;
                }
                samples.push(LoopSample {
                    theta: if lap == 1 && k + 1 == self.samples.len() {
                        PI
                    } else {
                        offset + (p.theta + PI) / 2.0
                    },
                    s: p.s.clone(),
                });
            }
        }
        Self::new(samples)
    }

    fn require_closed(&self) -> Result<()> {
        if !self.closed {
            return Err(Error::InvalidLoop("loop is not closed".into()));
        }
        Ok(())
    }
}

fn det_arg(s: &UnitaryMatrix) -> f64 {
    s.as_matrix().clone().determinant().arg()
}

/// Winding number of `θ ↦ det S(θ)`.
pub fn det_winding(lp: &UnitaryLoop) -> Result<i64> {
    lp.require_closed()?;
    let args: Vec<f64> = lp.samples.iter().map(|p| det_arg(&p.s)).collect();
    let total: f64 = args
        .windows(2)
        .map(|w| wrap_phase(w[1] - w[0]))
        .sum::<f64>()
        / (2.0 * PI);
    let rounded = total.round();
    if (total - rounded).abs() > 1e-3 {
        return Err(Error::LoopUndersampled);
    }
    Ok(rounded as i64)
}

/// Cyclic shift `s` matching `prev[k]` to `next[(k + s) mod n]` with the least
/// total circular displacement. Both inputs are sorted ascending.
fn best_shift(prev: &[f64], next: &[f64]) -> usize {
    let n = prev.len();
    (0..n)
        .map(|s| {
            let cost: f64 = (0..n)
                .map(|k| wrap_phase(next[(k + s) % n] - prev[k]).abs())
                .sum();
            (s, cost)
        })
        .fold(
            (0, f64::INFINITY),
            |best, x| if x.1 < best.1 { x } else { best },
        )
        .0
}

/// Signed count of eigenphase branches crossing `arg ρ`: `+1` for increasing
/// phase, `−1` for decreasing.
pub fn crossings_through(lp: &UnitaryLoop, rho: Complex64) -> Result<i64> {
    lp.require_closed()?;
    if (rho.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidLoop("rho must lie on the unit circle".into()));
    }
    let target = rho.arg();
    let phases: Vec<Vec<f64>> = crate::par::map_slice(&lp.samples, |p| unitary_eig(&p.s).phases);
    for ph in &phases {
        if ph
            .iter()
            .any(|&t| wrap_phase(t - target).abs() < CROSSING_TOL)
        {
            return Err(Error::NonGenericLoop);
        }
    }
    let n = lp.n();
    let mut count = 0i64;
    for w in phases.windows(2) {
        let (prev, next) = (&w[0], &w[1]);
        let shift = best_shift(prev, next);
        for k in 0..n {
            let a = prev[k];
            let d = wrap_phase(next[(k + shift) % n] - a);
            let x = wrap_phase(a - target);
            let y = x + d;
            let sign = if x < 0.0 && y > 0.0 {
                1
            } else if x > 0.0 && y < 0.0 {
                -1
            } else {
                0
            };
            if sign != 0 {
                let crowded = (0..n).any(|j| {
                    j != k
                        && (wrap_phase(prev[j] - a).abs() < CROSSING_TOL
                            || wrap_phase(next[(j + shift) % n] - next[(k + shift) % n]).abs()
                                < CROSSING_TOL)
                });
                if crowded {
                    return Err(Error::NonGenericLoop);
                }
                count += sign;
            }
        }
    }
    Ok(count)
}

/// Signed crossings through eigenvalue 1.
pub fn maslov_index(lp: &UnitaryLoop) -> Result<i64> {
    crossings_through(lp, ONE)
}

/// `θ ↦ diag(e^{i m_k θ})`.
pub fn diagonal_loop(windings: &[i32], count: usize) -> Result<UnitaryLoop> {
    if windings.is_empty() {
        return Err(Error::InvalidLoop("empty winding vector".into()));
    }
    let windings = windings.to_vec();
    UnitaryLoop::from_fn(count, move |theta| {
        UnitaryMatrix::diagonal_phases(
            &windings
                .iter()
                .map(|&m| m as f64 * theta)
                .collect::<Vec<_>>(),
        )
    })
}

/// `θ ↦ diag(e^{i(m_k θ + 0.3 + 0.4k)})`, k = 0, 1, …: the fixed offsets keep
/// non-winding branches away from `±1` and separate from each other (n ≤ 7).
pub fn shifted_diagonal_loop(windings: &[i32], count: usize) -> Result<UnitaryLoop> {
    if windings.is_empty() {
        return Err(Error::InvalidLoop("empty winding vector".into()));
    }
    let windings = windings.to_vec();
    UnitaryLoop::from_fn(count, move |theta| {
        let phases: Vec<f64> = windings
            .iter()
            .enumerate()
            .map(|(k, &m)| m as f64 * theta + 0.3 + 0.4 * k as f64)
            .collect();
        UnitaryMatrix::diagonal_phases(&phases)
    })
}

/// `θ ↦ U diag(e^{i(m_k θ + φ_k)}) V` for Haar `U, V`, random phases `φ_k` and
/// windings `m_k ∈ [−2, 2]`. Returns the loop and `Σ m_k`.
pub fn random_loop<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    count: usize,
) -> Result<(UnitaryLoop, i64)> {
    let u = random_unitary(rng, n);
    let v = random_unitary(rng, n);
    let m: Vec<i32> = (0..n).map(|_| rng.random_range(-2..=2)).collect();
    let phi: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 * PI).collect();
    let lp = UnitaryLoop::from_fn(count, |theta| {
        let d = UnitaryMatrix::diagonal_phases(
            &(0..n)
                .map(|k| m[k] as f64 * theta + phi[k])
                .collect::<Vec<_>>(),
        );
        UnitaryMatrix::from_trusted(u.as_matrix() * d.as_matrix() * v.as_matrix())
    })?;
    Ok((lp, m.iter().map(|&x| x as i64).sum()))
}
