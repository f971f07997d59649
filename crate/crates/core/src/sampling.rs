//! Seeded random matrices. Every sample index gets its own ChaCha stream so
//! results do not depend on how samples are distributed across threads.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matrix::{max_abs, singular_values, CMatrix, HermitianMatrix, UnitaryMatrix};

pub type SampleRng = ChaCha8Rng;

/// Generator for sample `stream` of a run seeded with `seed`.
pub fn rng_for(seed: u64, stream: u64) -> SampleRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the phases of
/// `diag(R)` moved into `Q`.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> UnitaryMatrix {
    let qr = ginibre(rng, n, n).qr();
    let r = qr.r();
    let mut q = qr.q();
    for k in 0..n {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for row in 0..n {
            q[(row, k)] *= phase;
        }
    }
    UnitaryMatrix::from_trusted(q)
}

/// Random hermitian matrix with spectral norm uniform in `(0, max_norm]`.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize, max_norm: f64) -> HermitianMatrix {
    let g = ginibre(rng, n, n);
    let h = (&g + g.adjoint()).scale(0.5);
    let norm = singular_values(&h).first().copied().unwrap_or(0.0);
    let target = max_norm * (1.0 - rng.random::<f64>());
    let h = if norm > 0.0 {
        h.scale(target / norm)
    } else {
        h
    };
    HermitianMatrix::new(h).expect("symmetrized matrix is hermitian")
}

/// Hermitian matrix with entries `t_{ij}` forced to zero wherever `mask(i, j)`
/// (0-based) is false. Entries have modulus at most `bound`.
pub fn random_hermitian_pattern<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    bound: f64,
    mask: impl Fn(usize, usize) -> bool,
) -> HermitianMatrix {
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            if !mask(i, j) {
                continue;
            }
            let r = bound * rng.random::<f64>();
            let z = if i == j {
                Complex64::new(if rng.random::<bool>() { r } else { -r }, 0.0)
            } else {
                Complex64::from_polar(r, rng.random::<f64>() * std::f64::consts::TAU)
            };
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    debug_assert!(max_abs(&(&m - m.adjoint())) == 0.0);
    HermitianMatrix::new(m).expect("pattern matrix is hermitian")
}
