//! Monte Carlo oracle for the classical component.
//!
//! Paths of the Lévy-driven linear process are generated by Euler-Maruyama
//! for the drift and diffusion, with exact compound-Poisson jump times. In
//! the Gaussian hybrid case (`ν = 0`) a `d`-dimensional linear surrogate with
//! drift `Zᵀ` and noise covariance `A` is simulated and only the classical
//! coordinates are kept; its multi-time classical law coincides with the
//! quasi-free one.
//!
//! Path `p` draws from ChaCha8 stream `p` under the run seed, so ensembles do
//! not depend on the number of worker threads.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use crate::error::{check_len, Error, Result};
use crate::exec::Backend;
use crate::generator::GeneratorParams;
use crate::levy::{levy_marginal, LevyMeasure, Sector};
use crate::linalg::{asymmetry, psd_factor};
use crate::states::HybridGaussianState;
use crate::C64;

/// Sample-path form of the classical Kolmogorov-Fokker-Planck coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalSdeModel {
    /// `α⁰`.
    pub drift_const: DVector<f64>,
    /// `Z⁰⁰ᵀ`.
    pub drift_linear: DMatrix<f64>,
    /// `Z¹⁰ᵀ`; only the Gaussian hybrid simulation can honour it.
    pub quantum_feed: DMatrix<f64>,
    /// `C`, the infinitesimal covariance.
    pub diffusion: DMatrix<f64>,
    /// Classical marginal of `ν`, atoms as `s`-vectors.
    pub jumps: LevyMeasure,
}

impl ClassicalSdeModel {
    pub fn new(
        drift_const: DVector<f64>,
        drift_linear: DMatrix<f64>,
        quantum_feed: DMatrix<f64>,
        diffusion: DMatrix<f64>,
        jumps: LevyMeasure,
    ) -> Result<Self> {
        let s = drift_const.len();
        check_len("drift_linear rows", s, drift_linear.nrows())?;
        check_len("drift_linear columns", s, drift_linear.ncols())?;
        check_len("quantum_feed rows", s, quantum_feed.nrows())?;
        check_len("diffusion rows", s, diffusion.nrows())?;
        check_len("diffusion columns", s, diffusion.ncols())?;
        if asymmetry(&diffusion) > 1e-12 {
            return Err(Error::InvalidParameter("diffusion must be symmetric".into()));
        }
        psd_factor(&diffusion, 1e-10, "diffusion")?;
        for a in &jumps.atoms {
            check_len("jump size", s, a.eta.len())?;
            if !(a.weight > 0.0 && a.weight.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "jump weights must be positive, got {}",
                    a.weight
                )));
            }
        }
        Ok(Self {
            drift_const,
            drift_linear,
            quantum_feed,
            diffusion,
            jumps,
        })
    }

    /// Classical block of a generator.
    pub fn from_params(params: &GeneratorParams) -> Result<Self> {
        let dim = params.space.dim;
        let (cl, q) = (dim.classical_range(), dim.quantum_range());
        let z = &params.z_matrix;
        let s = dim.s();
        let jumps = levy_marginal(params.nu(), Sector::Classical, &params.space);
        let jumps = LevyMeasure::new(
            jumps
                .atoms
                .into_iter()
                .map(|mut a| {
                    a.eta = a.eta.rows_range(cl.clone()).into_owned();
                    a
                })
                .collect(),
        );
        Self::new(
            params.alpha().rows_range(cl.clone()).into_owned(),
            z.view((cl.start, cl.start), (s, s)).transpose(),
            z.view((q.start, cl.start), (q.len(), s)).transpose(),
            params.a_matrix().view((cl.start, cl.start), (s, s)).into_owned(),
            jumps,
        )
    }

    pub fn s(&self) -> usize {
        self.drift_const.len()
    }

    pub fn has_quantum_feed(&self) -> bool {
        self.quantum_feed.iter().any(|x| *x != 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    Point(DVector<f64>),
    Gaussian { mean: DVector<f64>, cov: DMatrix<f64> },
}

impl InitialCondition {
    fn dim(&self) -> usize {
        match self {
            Self::Point(x) => x.len(),
            Self::Gaussian { mean, .. } => mean.len(),
        }
    }
}

/// Run parameters shared by both simulators.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub horizon: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// Instants at which states are recorded; always hit exactly.
    pub record_times: Vec<f64>,
    pub backend: Backend,
}

impl SimulationConfig {
    /// Defaults: `dt = 10⁻³·horizon`, `10⁵` paths, recording at `0` and the
    /// horizon.
    pub fn new(horizon: f64, seed: u64) -> Self {
        Self {
            horizon,
            dt: 1e-3 * horizon,
            n_paths: 100_000,
            seed,
            record_times: vec![0.0, horizon],
            backend: Backend::default(),
        }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_paths(mut self, n_paths: usize) -> Self {
        self.n_paths = n_paths;
        self
    }

    pub fn with_record_times(mut self, times: Vec<f64>) -> Self {
        self.record_times = times;
        self
    }

    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }

    fn check(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "horizon must be nonnegative, got {}",
                self.horizon
            )));
        }
        if self.n_paths == 0 {
            return Err(Error::InvalidParameter("n_paths must be at least 1".into()));
        }
        if self.record_times.is_empty() {
            return Err(Error::InvalidParameter("no record times".into()));
        }
        if self.record_times[0] < 0.0
            || self.record_times.windows(2).any(|w| w[1] <= w[0])
            || self.record_times.last().is_some_and(|t| *t > self.horizon)
        {
            return Err(Error::InvalidParameter(
                "record times must be ascending within [0, horizon]".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryEnsemble {
    pub seed: u64,
    pub n_paths: usize,
    pub dt: f64,
    pub times: Vec<f64>,
    /// Recorded dimension.
    pub s: usize,
    /// Path-major `[n_paths × |times| × s]`.
    pub samples: Vec<f64>,
}

impl TrajectoryEnsemble {
    pub fn sample(&self, path: usize, time_index: usize) -> &[f64] {
        let start = (path * self.times.len() + time_index) * self.s;
        &self.samples[start..start + self.s]
    }

    pub fn time_index(&self, t: f64) -> Result<usize> {
        self.times
            .iter()
            .position(|r| (r - t).abs() <= 1e-12 * t.abs().max(1.0))
            .ok_or(Error::UnknownTime(t))
    }

    /// Mean of component `j` at time `t`.
    pub fn mean(&self, t: f64, j: usize) -> Result<ScalarEstimate> {
        let ti = self.time_index(t)?;
        Ok(mean_estimate(
            (0..self.n_paths).map(|p| self.sample(p, ti)[j]),
            self.n_paths,
        ))
    }

    /// Variance of component `j` at time `t`.
    pub fn variance(&self, t: f64, j: usize) -> Result<ScalarEstimate> {
        let ti = self.time_index(t)?;
        let mu = self.mean(t, j)?.value;
        let n = self.n_paths as f64;
        let unbiased = n / (n - 1.0).max(1.0);
        Ok(mean_estimate(
            (0..self.n_paths).map(|p| (self.sample(p, ti)[j] - mu).powi(2) * unbiased),
            self.n_paths,
        ))
    }

    /// CSV rows `path_id,time,x0,…`.
    pub fn write_csv<W: Write>(&self, mut out: W, metadata: &[(String, String)]) -> Result<()> {
        writeln!(out, "# seed={} n_paths={} dt={:.16e}", self.seed, self.n_paths, self.dt)?;
        for (k, v) in metadata {
            writeln!(out, "# {k}={v}")?;
        }
        let cols: Vec<String> = (0..self.s).map(|j| format!("x{j}")).collect();
        writeln!(out, "path_id,time,{}", cols.join(","))?;
        for p in 0..self.n_paths {
            for (ti, t) in self.times.iter().enumerate() {
                write!(out, "{p},{t:.16e}")?;
                for x in self.sample(p, ti) {
                    write!(out, ",{x:.16e}")?;
                }
                writeln!(out)?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarEstimate {
    pub value: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalEstimate {
    pub value: C64,
    /// `sqrt(SE_re² + SE_im²)`.
    pub std_error: f64,
}

/// Sample mean with its jackknife standard error (`s/√n` for a mean).
fn mean_estimate(xs: impl Iterator<Item = f64> + Clone, n: usize) -> ScalarEstimate {
    let nf = n as f64;
    let value = xs.clone().sum::<f64>() / nf;
    let ss: f64 = xs.map(|x| (x - value).powi(2)).sum();
    let std_error = if n > 1 { (ss / (nf * (nf - 1.0))).sqrt() } else { f64::INFINITY };
    ScalarEstimate { value, std_error }
}

/// Linear jump-diffusion `dY = (MY + b)dt + L dW + jumps` in `m` dimensions.
struct LinearSde {
    m: usize,
    drift: Vec<f64>,
    offset: Vec<f64>,
    noise: Vec<f64>,
    jump_sizes: Vec<Vec<f64>>,
    jump_cdf: Vec<f64>,
    rate: f64,
    record: std::ops::Range<usize>,
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

impl LinearSde {
    fn new(
        drift: &DMatrix<f64>,
        offset: &DVector<f64>,
        diffusion: &DMatrix<f64>,
        jumps: &LevyMeasure,
        record: std::ops::Range<usize>,
    ) -> Result<Self> {
        let noise = psd_factor(diffusion, 1e-10, "diffusion")?;
        let rate = jumps.total_rate();
        let mut acc = 0.0;
        let jump_cdf = jumps
            .atoms
            .iter()
            .map(|a| {
                acc += a.weight / rate;
                acc
            })
            .collect();
        Ok(Self {
            m: offset.len(),
            drift: row_major(drift),
            offset: offset.as_slice().to_vec(),
            noise: row_major(&noise),
            jump_sizes: jumps.atoms.iter().map(|a| a.eta.as_slice().to_vec()).collect(),
            jump_cdf,
            rate,
            record,
        })
    }

    fn euler(&self, x: &mut [f64], h: f64, rng: &mut ChaCha8Rng, scratch: &mut [f64], gauss: &mut [f64]) {
        let m = self.m;
        let sq = h.sqrt();
        for g in gauss.iter_mut() {
            *g = rng.sample::<f64, _>(StandardNormal);
        }
        for i in 0..m {
            let row = &self.drift[i * m..(i + 1) * m];
            let lrow = &self.noise[i * m..(i + 1) * m];
            let mut a = self.offset[i];
            let mut w = 0.0;
            for k in 0..m {
                a += row[k] * x[k];
                w += lrow[k] * gauss[k];
            }
            scratch[i] = x[i] + a * h + sq * w;
        }
        x.copy_from_slice(scratch);
    }

    fn jump(&self, x: &mut [f64], rng: &mut ChaCha8Rng) {
        let u: f64 = rng.random();
        let k = self
            .jump_cdf
            .iter()
            .position(|c| u < *c)
            .unwrap_or(self.jump_sizes.len() - 1);
        for (xi, e) in x.iter_mut().zip(&self.jump_sizes[k]) {
            *xi += e;
        }
    }

    fn path(&self, x0: &InitialSampler, cfg: &SimulationConfig, path: usize, out: &mut [f64]) {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(path as u64);
        let mut x = x0.draw(&mut rng);
        let mut scratch = vec![0.0; self.m];
        let mut gauss = vec![0.0; self.m];
        let exp = (self.rate > 0.0).then(|| Exp::new(self.rate).expect("positive rate"));
        let mut next_jump = exp.as_ref().map_or(f64::INFINITY, |e| e.sample(&mut rng));
        let width = self.record.len();
        let mut t = 0.0;
        for (ti, target) in cfg.record_times.iter().enumerate() {
            while t < *target {
                let step_end = (t + cfg.dt).min(*target);
                // Split the step at jump times so jumps land where they occur.
                while next_jump <= step_end {
                    if next_jump > t {
                        self.euler(&mut x, next_jump - t, &mut rng, &mut scratch, &mut gauss);
                        t = next_jump;
                    }
                    self.jump(&mut x, &mut rng);
                    next_jump += exp.as_ref().expect("jumps imply a rate").sample(&mut rng);
                }
                if step_end > t {
                    self.euler(&mut x, step_end - t, &mut rng, &mut scratch, &mut gauss);
                }
                t = if step_end >= *target { *target } else { step_end };
            }
            out[ti * width..(ti + 1) * width].copy_from_slice(&x[self.record.clone()]);
        }
    }

    fn run(&self, x0: &InitialCondition, cfg: &SimulationConfig) -> Result<TrajectoryEnsemble> {
        cfg.check()?;
        check_len("initial condition", self.m, x0.dim())?;
        let sampler = InitialSampler::new(x0)?;
        let width = self.record.len() * cfg.record_times.len();
        let rows = cfg.backend.map_indexed(cfg.n_paths, |p| {
            let mut out = vec![0.0; width];
            self.path(&sampler, cfg, p, &mut out);
            out
        });
        let samples = rows.concat();
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("simulated trajectories"));
        }
        Ok(TrajectoryEnsemble {
            seed: cfg.seed,
            n_paths: cfg.n_paths,
            dt: cfg.dt,
            times: cfg.record_times.clone(),
            s: self.record.len(),
            samples,
        })
    }
}

enum InitialSampler {
    Point(Vec<f64>),
    Gaussian { mean: Vec<f64>, factor: DMatrix<f64> },
}

impl InitialSampler {
    fn new(x0: &InitialCondition) -> Result<Self> {
        Ok(match x0 {
            InitialCondition::Point(x) => Self::Point(x.as_slice().to_vec()),
            InitialCondition::Gaussian { mean, cov } => {
                check_len("initial covariance", mean.len(), cov.nrows())?;
                check_len("initial covariance", mean.len(), cov.ncols())?;
                Self::Gaussian {
                    mean: mean.as_slice().to_vec(),
                    factor: psd_factor(cov, 1e-10, "initial covariance")?,
                }
            }
        })
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match self {
            Self::Point(x) => x.clone(),
            Self::Gaussian { mean, factor } => {
                let g = DVector::from_fn(mean.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
                let y = factor * g;
                mean.iter().zip(y.iter()).map(|(m, v)| m + v).collect()
            }
        }
    }
}

/// Simulates the classical process of `model` from `x0`.
pub fn simulate_classical(
    model: &ClassicalSdeModel,
    x0: &InitialCondition,
    cfg: &SimulationConfig,
) -> Result<TrajectoryEnsemble> {
    if model.has_quantum_feed() {
        return Err(Error::Unsupported(
            "the model feeds quantum coordinates into the classical drift; \
             use simulate_hybrid_gaussian"
                .into(),
        ));
    }
    let s = model.s();
    let offset = &model.drift_const - model.jumps.compensator_drift(s);
    let sde = LinearSde::new(&model.drift_linear, &offset, &model.diffusion, &model.jumps, 0..s)?;
    sde.run(x0, cfg)
}

/// Simulates the linear Gaussian surrogate of a `ν = 0` hybrid generator and
/// records the classical coordinates.
pub fn simulate_hybrid_gaussian(
    params: &GeneratorParams,
    state0: &HybridGaussianState,
    cfg: &SimulationConfig,
) -> Result<TrajectoryEnsemble> {
    if !params.nu().is_empty() {
        return Err(Error::Unsupported(
            "path-wise hybrid simulation requires an empty Lévy measure".into(),
        ));
    }
    check_len("initial state dimension", params.d(), state0.space.d())?;
    let sde = LinearSde::new(
        &params.z_matrix.transpose(),
        params.alpha(),
        params.a_matrix(),
        params.nu(),
        params.space.dim.classical_range(),
    )?;
    let x0 = InitialCondition::Gaussian {
        mean: state0.mean.clone(),
        cov: state0.cov.clone(),
    };
    sde.run(&x0, cfg)
}

/// `(1/N) Σ_paths exp(i Σ_j k_j·X(t_j))` with its standard error.
pub fn empirical_charfn(
    ensemble: &TrajectoryEnsemble,
    times: &[f64],
    kvecs: &[DVector<f64>],
) -> Result<EmpiricalEstimate> {
    check_len("number of frequency vectors", times.len(), kvecs.len())?;
    let idx: Vec<usize> = times
        .iter()
        .map(|t| ensemble.time_index(*t))
        .collect::<Result<_>>()?;
    for k in kvecs {
        check_len("classical frequency", ensemble.s, k.len())?;
    }
    let phase = |p: usize| -> f64 {
        idx.iter()
            .zip(kvecs)
            .map(|(ti, k)| {
                ensemble
                    .sample(p, *ti)
                    .iter()
                    .zip(k.iter())
                    .map(|(x, kk)| x * kk)
                    .sum::<f64>()
            })
            .sum()
    };
    let phases: Vec<f64> = (0..ensemble.n_paths).map(phase).collect();
    let n = ensemble.n_paths;
    let re = mean_estimate(phases.iter().map(|p| p.cos()), n);
    let im = mean_estimate(phases.iter().map(|p| p.sin()), n);
    Ok(EmpiricalEstimate {
        value: C64::new(re.value, im.value),
        std_error: re.std_error.hypot(im.std_error),
    })
}
