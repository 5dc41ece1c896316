//! Hybrid states: Gaussian states, admissibility of characteristic
//! functions, marginals and the conditional decomposition
//! `π̂(x) = p(x)·ρ(x)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, Error, Result};
use crate::linalg::{
    asymmetry, hermitian_eigen, min_hermitian_eigenvalue, min_symmetric_eigenvalue, symmetrize,
};
use crate::phase_space::{PhaseSpace, SymplecticForm};
use crate::C64;

/// Slack on `cov + (i/2)σ ⪰ 0` when constructing a state.
pub const STATE_ADMISSIBILITY_TOL: f64 = 1e-10;

/// Anything that can be evaluated as a characteristic function on `Ξ`.
pub trait CharacteristicFunction: Sync {
    fn eval(&self, xi: &DVector<f64>) -> C64;
}

impl<F> CharacteristicFunction for F
where
    F: Fn(&DVector<f64>) -> C64 + Sync,
{
    fn eval(&self, xi: &DVector<f64>) -> C64 {
        self(xi)
    }
}

/// `cov + (i/2)σ` as a complex Hermitian matrix.
pub fn quantum_covariance_matrix(cov: &DMatrix<f64>, sigma: &DMatrix<f64>) -> DMatrix<C64> {
    cov.zip_map(sigma, |c, s| C64::new(c, 0.5 * s))
}

/// Minimum eigenvalue of `cov + (i/2)σ`.
pub fn uncertainty_min_eigenvalue(cov: &DMatrix<f64>, sigma: &SymplecticForm) -> f64 {
    min_hermitian_eigenvalue(&quantum_covariance_matrix(cov, sigma.matrix()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridGaussianState {
    pub space: PhaseSpace,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl HybridGaussianState {
    pub fn new(space: PhaseSpace, mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let d = space.d();
        check_len("state mean", d, mean.len())?;
        check_len("state covariance rows", d, cov.nrows())?;
        check_len("state covariance columns", d, cov.ncols())?;
        if mean.iter().chain(cov.iter()).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("Gaussian state"));
        }
        if asymmetry(&cov) > 1e-12 {
            return Err(Error::InvalidParameter(
                "state covariance must be symmetric".into(),
            ));
        }
        let cov = symmetrize(&cov);
        let min = uncertainty_min_eigenvalue(&cov, &space.sigma);
        if min < -STATE_ADMISSIBILITY_TOL {
            return Err(Error::NotPositive {
                what: "state covariance + (i/2)σ",
                min_eigenvalue: min,
            });
        }
        Ok(Self { space, mean, cov })
    }

    /// Minimal-uncertainty vacuum on the quantum sector, product with a
    /// classical Gaussian.
    pub fn vacuum(space: PhaseSpace, classical_cov: DMatrix<f64>) -> Result<Self> {
        let d = space.d();
        let q = space.dim.quantum_len();
        check_len("classical covariance", space.dim.s(), classical_cov.nrows())?;
        let mut cov = DMatrix::zeros(d, d);
        cov.view_mut((0, 0), (q, q))
            .copy_from(&(DMatrix::identity(q, q) * 0.5));
        cov.view_mut((q, q), (d - q, d - q)).copy_from(&classical_cov);
        Self::new(space, DVector::zeros(d), cov)
    }

    pub fn min_uncertainty_eigenvalue(&self) -> f64 {
        uncertainty_min_eigenvalue(&self.cov, &self.space.sigma)
    }
}

/// `exp(i·meanᵀξ − ½ξᵀ·cov·ξ)`.
pub fn gaussian_charfn(state: &HybridGaussianState, xi: &DVector<f64>) -> Result<C64> {
    check_len("frequency", state.space.d(), xi.len())?;
    Ok(gaussian_charfn_raw(&state.mean, &state.cov, xi))
}

pub(crate) fn gaussian_charfn_raw(mean: &DVector<f64>, cov: &DMatrix<f64>, xi: &DVector<f64>) -> C64 {
    let quad = xi.dot(&(cov * xi));
    C64::new(-0.5 * quad, mean.dot(xi)).exp()
}

impl CharacteristicFunction for HybridGaussianState {
    fn eval(&self, xi: &DVector<f64>) -> C64 {
        gaussian_charfn_raw(&self.mean, &self.cov, xi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    /// Smallest eigenvalue of the Hermitized twisted matrix.
    pub min_eigenvalue: f64,
    /// `|χ(0) − 1|`.
    pub normalization_error: f64,
    pub pass: bool,
    /// Heuristic continuity/integrability findings and sampling caveats.
    pub warnings: Vec<String>,
}

/// Maximum sample size for the twisted positivity matrix.
pub const MAX_ADMISSIBILITY_SAMPLE: usize = 64;

/// Twisted positive-definiteness test on a finite sample: the matrix
/// `M_kl = χ(ξ_k − ξ_l)·exp((i/2)ξ_kᵀσξ_l)` must be PSD, and `χ(0) = 1`.
pub fn admissibility_check(
    chi: &dyn CharacteristicFunction,
    sigma: &SymplecticForm,
    sample: &[DVector<f64>],
    tol: f64,
) -> AdmissibilityReport {
    let mut warnings = Vec::new();
    let n = sample.len();
    if n > MAX_ADMISSIBILITY_SAMPLE {
        warnings.push(format!(
            "sample of {n} points exceeds the recommended {MAX_ADMISSIBILITY_SAMPLE}"
        ));
    }
    if !sample.iter().any(|x| x.iter().all(|v| *v == 0.0)) {
        warnings.push("sample does not contain the origin".into());
    }
    let d = sigma.dim();
    let origin = chi.eval(&DVector::zeros(d));
    let normalization_error = (origin - C64::new(1.0, 0.0)).norm();

    let mut m = DMatrix::<C64>::zeros(n, n);
    for k in 0..n {
        for l in 0..=k {
            let diff = &sample[k] - &sample[l];
            let phase = C64::from_polar(1.0, 0.5 * sigma.form(&sample[k], &sample[l]));
            let v = chi.eval(&diff) * phase;
            m[(k, l)] = v;
            if k != l {
                // χ(−ξ) = conj χ(ξ) and ξ_lᵀσξ_k = −ξ_kᵀσξ_l, so M is Hermitian.
                let diff_rev = &sample[l] - &sample[k];
                let phase_rev = C64::from_polar(1.0, 0.5 * sigma.form(&sample[l], &sample[k]));
                m[(l, k)] = chi.eval(&diff_rev) * phase_rev;
            }
        }
    }
    let (values, _) = hermitian_eigen(&m);
    let min_eigenvalue = values.iter().copied().fold(f64::INFINITY, f64::min);

    // Continuity: compare each sample value with a nearby point.
    let h = 1e-6;
    for x in sample {
        let base = chi.eval(x);
        let mut shifted = x.clone();
        for v in shifted.iter_mut() {
            *v += h;
        }
        if (chi.eval(&shifted) - base).norm() > 1e-3 {
            warnings.push(format!("possible discontinuity near ξ = {:?}", x.as_slice()));
            break;
        }
    }
    // Integrability: decay along the sample directions far out.
    let far = sample
        .iter()
        .filter(|x| x.norm() > 0.0)
        .map(|x| chi.eval(&(x * (50.0 / x.norm()))).norm())
        .fold(0.0, f64::max);
    if far > 1e-3 {
        warnings.push(format!(
            "slow decay (|χ| = {far:.3e} at radius 50); χ may not be integrable"
        ));
    }

    let pass = min_eigenvalue >= -tol && normalization_error <= tol.max(1e-12);
    AdmissibilityReport {
        min_eigenvalue,
        normalization_error,
        pass,
        warnings,
    }
}

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as f64;
    let mut inv = 1.0 / b;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base as u64) as f64 * inv;
        i /= base as u64;
        inv /= b;
    }
    out
}

/// The origin followed by `count − 1` Halton points in `[−radius, radius]^d`.
pub fn twisted_sample(d: usize, count: usize, radius: f64) -> Vec<DVector<f64>> {
    assert!(d <= PRIMES.len(), "Halton sampling supports d ≤ {}", PRIMES.len());
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    out.push(DVector::zeros(d));
    for i in 1..count as u64 {
        out.push(DVector::from_fn(d, |k, _| {
            radius * (2.0 * radical_inverse(i, PRIMES[k]) - 1.0)
        }));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMarginal {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

/// Quantum (`2n`) and classical (`s`) marginals of a Gaussian state.
pub fn marginals(state: &HybridGaussianState) -> (GaussianMarginal, GaussianMarginal) {
    let dim = state.space.dim;
    let pick = |r: std::ops::Range<usize>| GaussianMarginal {
        mean: state.mean.rows_range(r.clone()).into_owned(),
        cov: state
            .cov
            .view((r.start, r.start), (r.len(), r.len()))
            .into_owned(),
    };
    (pick(dim.quantum_range()), pick(dim.classical_range()))
}

/// Gaussian specialization of `π̂(x) = p(x)ρ(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalDecomposition {
    pub classical: GaussianMarginal,
    pub quantum_mean: DVector<f64>,
    /// `V_{q,cl} V_cl⁻¹`.
    pub gain: DMatrix<f64>,
    /// `V_q − V_{q,cl} V_cl⁻¹ V_{cl,q}`.
    pub conditional_cov: DMatrix<f64>,
    pub condition_number: f64,
    pub warnings: Vec<String>,
}

impl ConditionalDecomposition {
    /// Conditional quantum mean at classical point `x`.
    pub fn conditional_mean(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.quantum_mean + &self.gain * (x - &self.classical.mean)
    }

    /// Classical density `p(x)`.
    pub fn density(&self, x: &DVector<f64>) -> f64 {
        let s = x.len();
        if s == 0 {
            return 1.0;
        }
        let chol = self
            .classical
            .cov
            .clone()
            .cholesky()
            .expect("classical block checked nonsingular");
        let diff = x - &self.classical.mean;
        let y = chol.solve(&diff);
        let det = chol.l().diagonal().iter().map(|v| v * v).product::<f64>();
        let norm = (2.0 * std::f64::consts::PI).powi(s as i32) * det;
        (-0.5 * diff.dot(&y)).exp() / norm.sqrt()
    }

    /// Characteristic function of the conditional quantum state at `x`.
    pub fn conditional_charfn(&self, x: &DVector<f64>, zeta: &DVector<f64>) -> C64 {
        gaussian_charfn_raw(&self.conditional_mean(x), &self.conditional_cov, zeta)
    }
}

const CONDITION_WARN: f64 = 1e8;
const CONDITION_FAIL: f64 = 1e14;

pub fn conditional_decomposition(state: &HybridGaussianState) -> Result<ConditionalDecomposition> {
    let (quantum, classical) = marginals(state);
    let dim = state.space.dim;
    let (q, s) = (dim.quantum_len(), dim.s());
    let mut warnings = Vec::new();

    let (gain, condition_number) = if s == 0 {
        (DMatrix::zeros(q, 0), 1.0)
    } else {
        let eig = nalgebra::SymmetricEigen::new(classical.cov.clone());
        let max = eig.eigenvalues.amax();
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let cond = if min > 0.0 { max / min } else { f64::INFINITY };
        if cond.is_nan() || cond >= CONDITION_FAIL {
            return Err(Error::SingularClassicalBlock { condition: cond });
        }
        if cond > CONDITION_WARN {
            warnings.push(format!(
                "classical block is ill-conditioned (condition number {cond:.3e}); \
                 the conditional state is close to a deterministic linear relation"
            ));
        }
        let v_qc = state
            .cov
            .view((0, q), (q, s))
            .into_owned();
        let inv = classical
            .cov
            .clone()
            .cholesky()
            .ok_or(Error::SingularClassicalBlock { condition: cond })?
            .inverse();
        (v_qc * inv, cond)
    };
    let v_cq = state.cov.view((q, 0), (s, q)).into_owned();
    let conditional_cov = symmetrize(&(&quantum.cov - &gain * v_cq));
    let sq = state.space.sigma.quantum_block();
    let min = min_hermitian_eigenvalue(&quantum_covariance_matrix(&conditional_cov, &sq));
    if min < -1e-9 {
        return Err(Error::Inconsistent(format!(
            "conditional covariance violates the uncertainty relation (min eigenvalue {min:e})"
        )));
    }
    if q > 0 && min_symmetric_eigenvalue(&conditional_cov) < -1e-9 {
        return Err(Error::Inconsistent("conditional covariance not PSD".into()));
    }
    Ok(ConditionalDecomposition {
        classical,
        quantum_mean: quantum.mean,
        gain,
        conditional_cov,
        condition_number,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_space::make_phase_space;

    fn state(n: usize, s: usize, mean: &[f64], cov: &[f64]) -> HybridGaussianState {
        let ps = make_phase_space(n, s).unwrap();
        let d = ps.d();
        HybridGaussianState::new(
            ps,
            DVector::from_column_slice(mean),
            DMatrix::from_row_slice(d, d, cov),
        )
        .unwrap()
    }

    #[test]
    fn vacuum_passes() {
        let ps = make_phase_space(1, 0).unwrap();
        let vac = HybridGaussianState::vacuum(ps.clone(), DMatrix::zeros(0, 0)).unwrap();
        let sample = twisted_sample(2, 16, 2.0);
        let r = admissibility_check(&vac, &ps.sigma, &sample, 1e-10);
        assert!(r.pass, "{r:?}");
        assert!(r.min_eigenvalue > -1e-12);
    }

    #[test]
    fn classical_point_in_quantum_sector_fails() {
        // cov = 0: χ ≡ 1. Oracle: explicit 3-point twisted matrix
        // [[1, e^{iθ/2}...]] with ξ₁ = 0, ξ₂ = (1,0), ξ₃ = (0,1):
        // θ₂₃ = ξ₂ᵀσξ₃ = 1, so M₂₃ = e^{i/2}; the Gram structure needs
        // all phases consistent, which fails.
        let ps = make_phase_space(1, 0).unwrap();
        let chi = |_: &DVector<f64>| C64::new(1.0, 0.0);
        let sample = vec![
            DVector::from_column_slice(&[0.0, 0.0]),
            DVector::from_column_slice(&[1.0, 0.0]),
            DVector::from_column_slice(&[0.0, 1.0]),
        ];
        let r = admissibility_check(&chi, &ps.sigma, &sample, 1e-10);
        // Frozen from an independent 3×3 eigensolve:
        // M = [[1,1,1],[1,1,e^{i/2}],[1,e^{-i/2},1]], λ_min = 1 − √(1+2cos(1/4)·... )
        assert!(!r.pass);
        let expected = oracle_three_point_min_eig();
        assert!((r.min_eigenvalue - expected).abs() < 1e-12, "{} vs {}", r.min_eigenvalue, expected);
        assert!(expected < 0.0);
    }

    // Characteristic polynomial of the 3×3 Hermitian matrix with unit diagonal
    // and off-diagonal (1, 1, e^{i/2}) solved by the trigonometric formula.
    fn oracle_three_point_min_eig() -> f64 {
        let (a, b) = (1.0f64, 1.0f64);
        let c = C64::from_polar(1.0, 0.5);
        // M = I + N with N off-diagonal; eigenvalues 1 + μ where μ solves
        // μ³ − (|a|²+|b|²+|c|²)μ − 2Re(a·c·conj(b)) = 0.
        let p = a * a + b * b + c.norm_sqr();
        let q = 2.0 * (C64::new(a, 0.0) * c * C64::new(b, 0.0).conj()).re;
        let r = (p / 3.0).sqrt();
        let phi = ((q / 2.0) / r.powi(3)).clamp(-1.0, 1.0).acos() / 3.0;
        let roots = [0.0, 1.0, 2.0].map(|k| 2.0 * r * (phi - 2.0 * std::f64::consts::PI * k / 3.0).cos());
        1.0 + roots.iter().copied().fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn classical_gaussian_bochner() {
        let st = state(0, 2, &[0.3, -1.0], &[2.0, 0.5, 0.5, 1.0]);
        let sample = twisted_sample(2, 20, 3.0);
        let r = admissibility_check(&st, &st.space.sigma, &sample, 1e-10);
        assert!(r.pass);
    }

    #[test]
    fn charfn_basics() {
        let st = state(1, 1, &[0.0, 0.0, 0.0], &[0.6, 0.0, 0.1, 0.0, 0.6, 0.0, 0.1, 0.0, 2.0]);
        assert_eq!(gaussian_charfn(&st, &DVector::zeros(3)).unwrap(), C64::new(1.0, 0.0));
        let v = gaussian_charfn(&st, &DVector::from_column_slice(&[0.4, -1.0, 0.3])).unwrap();
        assert!(v.im == 0.0 && v.re > 0.0 && v.re <= 1.0);
        assert!(gaussian_charfn(&st, &DVector::zeros(2)).is_err());
    }

    #[test]
    fn inadmissible_state_rejected() {
        let ps = make_phase_space(1, 0).unwrap();
        let cov = DMatrix::identity(2, 2) * 0.2;
        assert!(HybridGaussianState::new(ps, DVector::zeros(2), cov).is_err());
    }

    #[test]
    fn product_marginals() {
        let st = state(1, 1, &[1.0, 2.0, 3.0], &[0.5, 0.0, 0.0, 0.0, 0.7, 0.0, 0.0, 0.0, 2.0]);
        let (q, c) = marginals(&st);
        assert_eq!(q.mean.as_slice(), &[1.0, 2.0]);
        assert_eq!(q.cov, DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.7]));
        assert_eq!(c.mean.as_slice(), &[3.0]);
        assert_eq!(c.cov, DMatrix::from_row_slice(1, 1, &[2.0]));
    }

    #[test]
    fn coupled_marginals_match_charfn_restriction() {
        let cov = [0.8, 0.0, 0.3, 0.0, 0.6, 0.0, 0.3, 0.0, 1.5];
        let st = state(1, 1, &[0.1, 0.2, -0.4], &cov);
        let (q, c) = marginals(&st);
        assert_eq!(c.cov[(0, 0)], 1.5);
        assert_eq!(q.cov, DMatrix::from_row_slice(2, 2, &[0.8, 0.0, 0.0, 0.6]));
        // χ(0, k) is the classical marginal characteristic function
        for k in [-1.0, 0.3, 2.0] {
            let full = gaussian_charfn(&st, &DVector::from_column_slice(&[0.0, 0.0, k])).unwrap();
            let marg = gaussian_charfn_raw(&c.mean, &c.cov, &DVector::from_column_slice(&[k]));
            assert!((full - marg).norm() < 1e-15);
        }
        let sq = st.space.sigma.quantum_block();
        assert!(min_hermitian_eigenvalue(&quantum_covariance_matrix(&q.cov, &sq)) > -1e-12);
    }

    #[test]
    fn block_diagonal_conditional_is_marginal() {
        let st = state(1, 1, &[1.0, 2.0, 3.0], &[0.5, 0.0, 0.0, 0.0, 0.7, 0.0, 0.0, 0.0, 2.0]);
        let cd = conditional_decomposition(&st).unwrap();
        let (q, _) = marginals(&st);
        assert_eq!(cd.conditional_cov, q.cov);
        let x = DVector::from_column_slice(&[10.0]);
        assert_eq!(cd.conditional_mean(&x), q.mean);
    }

    #[test]
    fn coupled_conditional_schur_complement() {
        // Oracle: scalar Schur complement by hand for a 3×3 covariance with
        // V_q = diag(0.8, 0.6), V_{q,cl} = (0.3, −0.2)ᵀ, V_cl = 1.5.
        let cov = [0.8, 0.0, 0.3, 0.0, 0.6, -0.2, 0.3, -0.2, 1.5];
        let st = state(1, 1, &[0.1, 0.2, -0.4], &cov);
        let cd = conditional_decomposition(&st).unwrap();
        let expected = DMatrix::from_row_slice(
            2,
            2,
            &[
                0.8 - 0.3 * 0.3 / 1.5,
                0.0 - 0.3 * -0.2 / 1.5,
                0.0 - 0.3 * -0.2 / 1.5,
                0.6 - 0.2 * 0.2 / 1.5,
            ],
        );
        assert!((&cd.conditional_cov - expected).amax() < 1e-15);
        assert!((cd.gain[(0, 0)] - 0.2).abs() < 1e-15);
        assert!((cd.gain[(1, 0)] + 0.2 / 1.5).abs() < 1e-15);
    }

    #[test]
    fn singular_classical_block_errors() {
        let st = state(1, 1, &[0.0; 3], &[0.5, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            conditional_decomposition(&st),
            Err(Error::SingularClassicalBlock { .. })
        ));
    }

    #[test]
    fn near_deterministic_relation_warns() {
        let cov = [0.5, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 1e-9];
        let st = state(1, 1, &[0.0; 3], &cov);
        assert!(conditional_decomposition(&st).unwrap().warnings.is_empty());
        let two = state(1, 2, &[0.0; 4], &[
            0.5, 0.0, 0.0, 0.0,
            0.0, 0.5, 0.0, 0.0,
            0.0, 0.0, 1.0, 1.0 - 1e-10,
            0.0, 0.0, 1.0 - 1e-10, 1.0,
        ]);
        let cd = conditional_decomposition(&two).unwrap();
        assert!(!cd.warnings.is_empty());
    }
}
