#![allow(dead_code)]

use hybrid_qf::linalg::expm;
use hybrid_qf::{make_phase_space, GeneratorParams, HybridGaussianState, LevyAtom, PhaseSpace};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gauss_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

pub fn gauss_vector(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Antisymmetric part `½(σZ − Zᵀσᵀ)`, computed independently of the crate.
pub fn b_matrix(space: &PhaseSpace, z: &DMatrix<f64>) -> DMatrix<f64> {
    let sigma = space.sigma.matrix();
    (sigma * z - z.transpose() * sigma.transpose()) * 0.5
}

/// `Z` with spectrum in the open left half plane.
pub fn stable_z(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    let m = gauss_matrix(rng, d, d, 0.6);
    let shift = spectral_norm(&m) + 0.1;
    m - DMatrix::identity(d, d) * shift
}

/// `A = XXᵀ + ‖B‖₂·I`, which makes `A ± iB ⪰ 0`.
pub fn admissible_a(rng: &mut ChaCha8Rng, space: &PhaseSpace, z: &DMatrix<f64>) -> DMatrix<f64> {
    let d = space.d();
    let x = gauss_matrix(rng, d, d, 0.4);
    let b = b_matrix(space, z);
    &x * x.transpose() + DMatrix::identity(d, d) * spectral_norm(&b)
}

/// A random validated generator; `jumps` atoms are drawn when requested.
pub fn random_generator(rng: &mut ChaCha8Rng, n: usize, s: usize, jumps: usize) -> GeneratorParams {
    let space = make_phase_space(n, s).unwrap();
    let d = space.d();
    let z = stable_z(rng, d);
    let a = admissible_a(rng, &space, &z);
    let alpha = gauss_vector(rng, d, 0.3);
    let atoms = (0..jumps)
        .map(|_| {
            let eta = gauss_vector(rng, d, 0.7);
            let w = rng.random_range(0.2..1.5);
            LevyAtom::new(eta, w)
        })
        .collect();
    GeneratorParams::from_parts(n, s, z, alpha, a, atoms).unwrap()
}

/// Random `(n, s)` with `n, s ∈ {0, 1, 2}` and `d ≥ 1`.
pub fn random_dims(rng: &mut ChaCha8Rng) -> (usize, usize) {
    loop {
        let n = rng.random_range(0..3);
        let s = rng.random_range(0..3);
        if n + s > 0 {
            return (n, s);
        }
    }
}

/// `½SSᵀ` on the quantum sector with `S = e^{σH}` symplectic, plus a random
/// PSD part and a classical floor.
pub fn admissible_state(rng: &mut ChaCha8Rng, space: &PhaseSpace) -> HybridGaussianState {
    let d = space.d();
    let q = space.dim.quantum_len();
    let mut cov = DMatrix::zeros(d, d);
    if q > 0 {
        let h = gauss_matrix(rng, q, q, 0.4);
        let h = (&h + h.transpose()) * 0.5;
        let s = expm(&(space.sigma.quantum_block() * h)).unwrap();
        cov.view_mut((0, 0), (q, q)).copy_from(&(&s * s.transpose() * 0.5));
    }
    let x = gauss_matrix(rng, d, d, 0.3);
    cov += &x * x.transpose();
    for i in q..d {
        cov[(i, i)] += 0.1;
    }
    let cov = (&cov + cov.transpose()) * 0.5;
    let mean = gauss_vector(rng, d, 0.5);
    HybridGaussianState::new(space.clone(), mean, cov).unwrap()
}

/// Uniform points in `[−r, r]^d`.
pub fn random_points(rng: &mut ChaCha8Rng, d: usize, count: usize, r: f64) -> Vec<DVector<f64>> {
    (0..count)
        .map(|_| DVector::from_fn(d, |_, _| rng.random_range(-r..r)))
        .collect()
}

pub fn normal_density(mean: &DVector<f64>, cov: &DMatrix<f64>, z: &DVector<f64>) -> f64 {
    let d = mean.len() as i32;
    let inv = cov.clone().try_inverse().unwrap();
    let r = z - mean;
    let q = (r.transpose() * inv * &r)[(0, 0)];
    (-0.5 * q).exp() / ((2.0 * std::f64::consts::PI).powi(d) * cov.determinant()).sqrt()
}
