//! The dynamical maps `𝓣_t[W(ξ)] = f_t(ξ)·W(S_tξ)`:
//! flow `S_t = e^{Zt}`, noise function `f_t(ξ) = exp ∫₀ᵗ ψ(S_τξ) dτ`,
//! characteristic-function and Gaussian-moment propagation, and the
//! multi-time classical statistics obtained by nesting the maps.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, Error, Result};
use crate::exec::Backend;
use crate::generator::GeneratorParams;
use crate::linalg::{self, max_abs, one_norm, symmetrize};
use crate::phase_space::{weyl_compose, WeylDescriptor};
use crate::quadrature::QuadratureRule;
use crate::states::CharacteristicFunction;
use crate::C64;

#[derive(Debug, Clone, PartialEq)]
pub struct FlowOperator {
    pub t: f64,
    pub matrix: DMatrix<f64>,
}

impl FlowOperator {
    pub fn apply(&self, xi: &DVector<f64>) -> DVector<f64> {
        &self.matrix * xi
    }
}

fn check_time(t: f64) -> Result<()> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "time must be finite and nonnegative, got {t}"
        )));
    }
    Ok(())
}

fn flow_matrix(z: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    let zt = z * t;
    linalg::expm(&zt).map_err(|e| match e {
        Error::Overflow { norm, .. } => Error::Overflow { t, norm },
        other => other,
    })
}

pub fn flow(params: &GeneratorParams, t: f64) -> Result<FlowOperator> {
    check_time(t)?;
    Ok(FlowOperator {
        t,
        matrix: flow_matrix(&params.z_matrix, t)?,
    })
}

/// A warning when `e^{Zt}` grows, i.e. `Z` has an eigenvalue with positive
/// real part.
pub fn stability_warning(params: &GeneratorParams) -> Option<String> {
    let eig = params.z_matrix.clone().complex_eigenvalues();
    let max_re = eig.iter().map(|c| c.re).fold(f64::NEG_INFINITY, f64::max);
    (max_re > 1e-12).then(|| {
        format!("Z has an eigenvalue with real part {max_re:.3e} > 0; e^{{Zt}} grows with t")
    })
}

/// Evaluates `f_t(ξ)` by adaptive quadrature of `τ ↦ ψ(S_τξ)`.
#[derive(Debug, Clone)]
pub struct NoiseFunctionEvaluator {
    pub params: GeneratorParams,
    pub quadrature: QuadratureRule,
    z_is_zero: bool,
}

impl NoiseFunctionEvaluator {
    pub fn new(params: GeneratorParams) -> Self {
        Self::with_quadrature(params, QuadratureRule::default())
    }

    pub fn with_quadrature(params: GeneratorParams, quadrature: QuadratureRule) -> Self {
        let z_is_zero = params.z_matrix.iter().all(|x| *x == 0.0);
        Self {
            params,
            quadrature,
            z_is_zero,
        }
    }

    pub fn d(&self) -> usize {
        self.params.d()
    }

    /// `∫₀ᵗ ψ(S_τξ) dτ`.
    pub fn log_noise(&self, xi: &DVector<f64>, t: f64) -> Result<C64> {
        check_len("frequency", self.d(), xi.len())?;
        check_time(t)?;
        if xi.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("frequency"));
        }
        if t == 0.0 || xi.iter().all(|x| *x == 0.0) {
            return Ok(C64::new(0.0, 0.0));
        }
        let exponent = &self.params.exponent;
        if self.z_is_zero {
            return Ok(exponent.psi(xi) * t);
        }
        let z = &self.params.z_matrix;
        let r = self.quadrature.integrate(
            |tau| {
                let s = flow_matrix(z, tau)?;
                Ok(exponent.psi(&(s * xi)))
            },
            0.0,
            t,
        )?;
        Ok(r.value)
    }

    pub fn noise_function(&self, xi: &DVector<f64>, t: f64) -> Result<C64> {
        Ok(self.log_noise(xi, t)?.exp())
    }

    /// `f_t` on many frequencies.
    pub fn noise_batch(&self, xis: &[DVector<f64>], t: f64, backend: Backend) -> Result<Vec<C64>> {
        backend.try_map_indexed(xis.len(), |i| self.noise_function(&xis[i], t))
    }
}

pub fn noise_function(evaluator: &NoiseFunctionEvaluator, xi: &DVector<f64>, t: f64) -> Result<C64> {
    evaluator.noise_function(xi, t)
}

/// `χ_t(ξ) = f_t(ξ)·χ₀(S_tξ)`.
pub fn evolve_charfn(
    evaluator: &NoiseFunctionEvaluator,
    chi0: &dyn CharacteristicFunction,
    xi: &DVector<f64>,
    t: f64,
) -> Result<C64> {
    let f = evaluator.noise_function(xi, t)?;
    let s = flow_matrix(&evaluator.params.z_matrix, t)?;
    Ok(f * chi0.eval(&(s * xi)))
}

/// `χ_t` on many frequencies; results are independent of the backend.
pub fn evolve_charfn_batch(
    evaluator: &NoiseFunctionEvaluator,
    chi0: &dyn CharacteristicFunction,
    xis: &[DVector<f64>],
    t: f64,
    backend: Backend,
) -> Result<Vec<C64>> {
    let s = flow_matrix(&evaluator.params.z_matrix, t)?;
    backend.try_map_indexed(xis.len(), |i| {
        let f = evaluator.noise_function(&xis[i], t)?;
        Ok(f * chi0.eval(&(&s * &xis[i])))
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagatedGaussian {
    pub t: f64,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    /// `true` when `ν = 0`: the moments then determine the evolved state.
    /// With jumps only the first two moments are exact.
    pub exact_state: bool,
}

/// Propagates the first two moments with the moment ODEs
/// `ṁ = Zᵀm + α_eff`, `V̇ = ZᵀV + VZ + A_eff`, where the effective drift and
/// diffusion absorb the jump atoms.
pub fn gaussian_propagate(
    params: &GeneratorParams,
    mean0: &DVector<f64>,
    cov0: &DMatrix<f64>,
    t: f64,
) -> Result<PropagatedGaussian> {
    let d = params.d();
    check_len("initial mean", d, mean0.len())?;
    check_len("initial covariance", d, cov0.nrows())?;
    check_len("initial covariance", d, cov0.ncols())?;
    check_time(t)?;
    let zt = params.z_matrix.transpose();
    let alpha = params.exponent.effective_drift();
    let diff = params.exponent.effective_diffusion();
    let rhs = |m: &DVector<f64>, v: &DMatrix<f64>| -> (DVector<f64>, DMatrix<f64>) {
        (&zt * m + &alpha, &zt * v + v * &params.z_matrix + &diff)
    };
    let rk4 = |m: &DVector<f64>, v: &DMatrix<f64>, h: f64| {
        let (k1m, k1v) = rhs(m, v);
        let (k2m, k2v) = rhs(&(m + &k1m * (0.5 * h)), &(v + &k1v * (0.5 * h)));
        let (k3m, k3v) = rhs(&(m + &k2m * (0.5 * h)), &(v + &k2v * (0.5 * h)));
        let (k4m, k4v) = rhs(&(m + &k3m * h), &(v + &k3v * h));
        (
            m + (k1m + &k2m * 2.0 + &k3m * 2.0 + k4m) * (h / 6.0),
            v + (k1v + &k2v * 2.0 + &k3v * 2.0 + k4v) * (h / 6.0),
        )
    };

    let mut m = mean0.clone();
    let mut v = cov0.clone();
    let mut now = 0.0;
    let rate = one_norm(&params.z_matrix).max(1e-3);
    let mut h = (0.05 / rate).min(t);
    let rtol = 1e-13;
    while now < t {
        h = h.min(t - now);
        if h <= 1e-14 * t.max(1.0) {
            return Err(Error::StepUnderflow { t: now });
        }
        let (m_big, v_big) = rk4(&m, &v, h);
        let (m_mid, v_mid) = rk4(&m, &v, 0.5 * h);
        let (m_fine, v_fine) = rk4(&m_mid, &v_mid, 0.5 * h);
        let scale = 1.0 + m_fine.amax().max(v_fine.amax());
        if !scale.is_finite() {
            return Err(Error::NonFinite("moment ODE state"));
        }
        let err = (&m_fine - &m_big).amax().max(max_abs(&(&v_fine - &v_big))) / 15.0;
        if err <= rtol * scale {
            // Richardson-extrapolated step.
            m = &m_fine + (&m_fine - &m_big) / 15.0;
            v = &v_fine + (&v_fine - &v_big) / 15.0;
            now += h;
            let grow = if err == 0.0 { 2.0 } else { (0.9 * (rtol * scale / err).powf(0.2)).min(2.0) };
            h *= grow;
        } else {
            h *= (0.9 * (rtol * scale / err).powf(0.2)).max(0.1);
        }
    }
    Ok(PropagatedGaussian {
        t,
        mean: m,
        cov: symmetrize(&v),
        exact_state: params.nu().is_empty(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemigroupResidual {
    /// `max |S_{t+s} − S_t S_s|`.
    pub flow: f64,
    /// `|f_{t+s}(ξ) − f_s(ξ)·f_t(S_sξ)|`.
    pub cocycle: f64,
}

pub fn check_semigroup_law(
    evaluator: &NoiseFunctionEvaluator,
    xi: &DVector<f64>,
    t: f64,
    s: f64,
) -> Result<SemigroupResidual> {
    let z = &evaluator.params.z_matrix;
    let st = flow_matrix(z, t)?;
    let ss = flow_matrix(z, s)?;
    let sts = flow_matrix(z, t + s)?;
    let flow = max_abs(&(&sts - &st * &ss));
    let whole = evaluator.noise_function(xi, t + s)?;
    let split = evaluator.noise_function(xi, s)? * evaluator.noise_function(&(&ss * xi), t)?;
    Ok(SemigroupResidual {
        flow,
        cocycle: (whole - split).norm(),
    })
}

/// `E[exp(i Σ_j k_j·X(t_j))]` for the classical component, by backward
/// nesting of the quasi-free maps.
///
/// The recursion carries the full hybrid frequency: `S_t` moves classical
/// frequencies into the quantum sector when `Z¹⁰ ≠ 0`, which is how quantum
/// moments reach the classical signal.
pub fn multi_time_charfn(
    evaluator: &NoiseFunctionEvaluator,
    chi0: &dyn CharacteristicFunction,
    times: &[f64],
    kvecs: &[DVector<f64>],
) -> Result<C64> {
    let space = &evaluator.params.space;
    check_len("number of classical frequencies", times.len(), kvecs.len())?;
    if times.is_empty() {
        return Ok(C64::new(1.0, 0.0));
    }
    if times[0] < 0.0 || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonAscendingTimes);
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::NonAscendingTimes);
    }
    let z = &evaluator.params.z_matrix;
    let m = times.len();
    let mut acc = WeylDescriptor::unit(space.embed_classical(&kvecs[m - 1])?);
    for j in (1..m).rev() {
        let dt = times[j] - times[j - 1];
        acc.amplitude *= evaluator.noise_function(&acc.xi, dt)?;
        acc.xi = flow_matrix(z, dt)? * &acc.xi;
        let k = WeylDescriptor::unit(space.embed_classical(&kvecs[j - 1])?);
        acc = weyl_compose(&k, &acc, &space.sigma)?;
    }
    acc.amplitude *= evaluator.noise_function(&acc.xi, times[0])?;
    acc.xi = flow_matrix(z, times[0])? * &acc.xi;
    Ok(acc.amplitude * chi0.eval(&acc.xi))
}
