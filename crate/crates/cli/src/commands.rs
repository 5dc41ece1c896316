use std::path::{Path, PathBuf};

use hybrid_qf::generator::{check_no_information_flow, classify, validate_positivity};
use hybrid_qf::levy::{validate_levy, LevyReport};
use hybrid_qf::quadrature::QuadratureRule;
use hybrid_qf::semigroup::{evolve_charfn_batch, stability_warning};
use hybrid_qf::states::{admissibility_check, twisted_sample, uncertainty_min_eigenvalue};
use hybrid_qf::{
    gaussian_propagate, multi_time_charfn, simulate_classical, simulate_hybrid_gaussian,
    wigner_from_charfn, Backend, CharFnGrid, CharacteristicFunction, ClassicalSdeModel,
    GeneratorParams, GridSpec, HybridGaussianState, InitialCondition, NoiseFunctionEvaluator,
    PositivityReport, SimulationConfig, TrajectoryEnsemble, DEFAULT_POSITIVITY_TOL,
};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::config::{check_times, vector, ConfigError, Experiment, InitialState};
use crate::output::{complex, indexed, num, nums, Meta, Table};

/// Outcome of a failed command, mapped to the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Invalid(_) => 1,
            Self::Config(_) => 2,
            Self::Runtime(_) => 3,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Self::Config(e.0)
    }
}

impl From<hybrid_qf::Error> for Failure {
    fn from(e: hybrid_qf::Error) -> Self {
        Self::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::Runtime(format!("I/O error: {e}"))
    }
}

type Outcome = Result<(), Failure>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Validate,
    Evolve,
    Correlate,
    Sample,
    Wigner,
}

impl CommandKind {
    fn name(self) -> &'static str {
        match self {
            Self::Validate => "validate",
            Self::Evolve => "evolve",
            Self::Correlate => "correlate",
            Self::Sample => "sample",
            Self::Wigner => "wigner",
        }
    }
}

/// Flags shared by every command.
#[derive(Debug, Clone)]
pub struct Options {
    pub config: PathBuf,
    pub out: PathBuf,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub times: Option<Vec<f64>>,
    pub grid: Option<(f64, usize)>,
    pub force: bool,
}

struct Context {
    kind: CommandKind,
    exp: Experiment,
    opts: Options,
    tol: f64,
    seed: u64,
    meta: Meta,
}

impl Context {
    fn new(kind: CommandKind, opts: Options) -> Result<Self, Failure> {
        let exp = Experiment::load(&opts.config)?;
        let tol = opts.tol.or(exp.run.tol).unwrap_or(DEFAULT_POSITIVITY_TOL);
        if !(tol.is_finite() && tol > 0.0) {
            return Err(Failure::Config(format!("--tol: must be positive, got {tol}")));
        }
        let seed = opts.seed.or(exp.run.seed).unwrap_or(0);
        if let Some(t) = &opts.times {
            check_times(t, "--times")?;
        }
        // Paths are left out so outputs do not depend on where they are written.
        let mut command = format!("{} --tol {tol:e} --seed {seed}", kind.name());
        if let Some(t) = &opts.times {
            command += &format!(" --times {}", t.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","));
        }
        if let Some((h, p)) = opts.grid {
            command += &format!(" --grid {h}:{p}");
        }
        if opts.force {
            command += " --force";
        }
        let meta = Meta::new(&exp.hash, &command, seed);
        std::fs::create_dir_all(&opts.out)
            .map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", opts.out.display())))?;
        Ok(Self {
            kind,
            exp,
            opts,
            tol,
            seed,
            meta,
        })
    }

    fn out(&self) -> &Path {
        &self.opts.out
    }

    fn times(&self, default: &[f64]) -> Vec<f64> {
        self.opts
            .times
            .clone()
            .or_else(|| self.exp.run.times.clone())
            .unwrap_or_else(|| default.to_vec())
    }

    fn evaluator(&self, params: GeneratorParams) -> NoiseFunctionEvaluator {
        let mut rule = QuadratureRule::default();
        if let Some(q) = self.exp.run.quad_tol {
            rule.rel_tol = q;
        }
        NoiseFunctionEvaluator::with_quadrature(params, rule)
    }

    fn gaussian(&self) -> Option<HybridGaussianState> {
        match &self.exp.state {
            Some(InitialState::Gaussian { mean, cov }) => Some(HybridGaussianState {
                space: self.exp.params().space,
                mean: mean.clone(),
                cov: cov.clone(),
            }),
            _ => None,
        }
    }

    /// Refuses invalid models unless `--force` was given.
    fn require_valid(&self) -> Outcome {
        let check = ModelCheck::run(&self.exp, self.tol);
        if check.valid() {
            return Ok(());
        }
        let reasons = check.reasons().join("; ");
        if self.opts.force {
            eprintln!("warning: running an invalid model because of --force: {reasons}");
            Ok(())
        } else {
            Err(Failure::Invalid(format!(
                "{reasons} (run `validate` for the full certificate, or pass --force)"
            )))
        }
    }
}

pub fn run(kind: CommandKind, opts: Options) -> Outcome {
    let ctx = Context::new(kind, opts)?;
    match ctx.kind {
        CommandKind::Validate => validate(&ctx),
        CommandKind::Evolve => evolve(&ctx),
        CommandKind::Correlate => correlate(&ctx),
        CommandKind::Sample => sample(&ctx),
        CommandKind::Wigner => wigner(&ctx),
    }
}

struct StateCheck {
    kind: &'static str,
    valid: bool,
    min_eigenvalue: f64,
    warnings: Vec<String>,
}

struct ModelCheck {
    positivity: PositivityReport,
    levy: LevyReport,
    state: Option<StateCheck>,
}

impl ModelCheck {
    fn run(exp: &Experiment, tol: f64) -> Self {
        let params = exp.params();
        let positivity = validate_positivity(&params, tol);
        let levy = validate_levy(params.nu());
        let state = exp.state.as_ref().map(|s| match s {
            InitialState::Gaussian { cov, .. } => {
                let min = uncertainty_min_eigenvalue(cov, &params.space.sigma);
                StateCheck {
                    kind: "gaussian",
                    valid: min >= -tol,
                    min_eigenvalue: min,
                    warnings: Vec::new(),
                }
            }
            InitialState::Grid(g) => grid_state_check(g, &params, tol),
        });
        Self {
            positivity,
            levy,
            state,
        }
    }

    fn valid(&self) -> bool {
        self.positivity.is_valid() && self.levy.is_valid() && self.state.as_ref().is_none_or(|s| s.valid)
    }

    fn reasons(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(v) = &self.positivity.violation {
            out.push(format!("{} has eigenvalue {:e} < -{:e}", v.form, v.eigenvalue, self.positivity.tol));
        } else if !self.positivity.is_valid() {
            out.push("positivity forms disagree".into());
        }
        out.extend(self.levy.violations.iter().map(|v| v.to_string()));
        if let Some(s) = &self.state {
            if !s.valid {
                out.push(format!("initial state is not admissible (minimum eigenvalue {:e})", s.min_eigenvalue));
            }
        }
        out
    }
}

const GRID_SAMPLE: usize = 16;

/// Twisted-PSD test on grid nodes, so no interpolation enters the matrix.
fn grid_state_check(g: &CharFnGrid, params: &GeneratorParams, tol: f64) -> StateCheck {
    let d = g.spec.dim();
    let mut warnings = Vec::new();
    if d > 16 {
        warnings.push(format!("admissibility sample skipped for d = {d}"));
        return StateCheck {
            kind: "charfn_grid",
            valid: false,
            min_eigenvalue: f64::NAN,
            warnings,
        };
    }
    let sample: Vec<DVector<f64>> = twisted_sample(d, GRID_SAMPLE, 1.0)
        .into_iter()
        .map(|p| {
            DVector::from_fn(d, |k, _| {
                let ax = &g.spec.axes[k];
                let reach = ((ax.points - 1) / 4) as f64;
                (p[k] * reach).round() * ax.spacing()
            })
        })
        .collect();
    let report = admissibility_check(g, &params.space.sigma, &sample, tol);
    warnings.extend(report.warnings);
    let herm = g.hermitian_error();
    if herm > tol {
        warnings.push(format!("grid violates χ(−ξ) = conj χ(ξ) by {herm:e}"));
    }
    StateCheck {
        kind: "charfn_grid",
        valid: report.pass,
        min_eigenvalue: report.min_eigenvalue,
        warnings,
    }
}

#[derive(Serialize)]
struct Certificate {
    valid: bool,
    version: String,
    config_sha256: String,
    tol: f64,
    n: usize,
    s: usize,
    positivity: PositivitySection,
    levy: LevySection,
    flags: FlagsSection,
    information_flow: InfoSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    state: Option<StateSection>,
    stability: StabilitySection,
}

#[derive(Serialize)]
struct PositivitySection {
    valid: bool,
    forms_agree: bool,
    a_pm_ib_valid: bool,
    block_valid: bool,
    min_a_pm_ib: f64,
    min_block: f64,
    eigenvalues_a_plus_ib: Vec<f64>,
    eigenvalues_a_minus_ib: Vec<f64>,
    eigenvalues_block: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    violation_form: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    violation_eigenvalue: Option<f64>,
}

#[derive(Serialize)]
struct LevySection {
    valid: bool,
    atoms: usize,
    violations: Vec<String>,
}

#[derive(Serialize)]
struct FlagsSection {
    translation_invariant: bool,
    quantum_dissipationless: bool,
    classical_dissipationless: bool,
    autonomous_quantum_reduction: bool,
    autonomous_classical_reduction: bool,
}

#[derive(Serialize)]
struct InfoSection {
    checked: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    possible: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    e_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    e_bound: Option<f64>,
    forced_zero: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

#[derive(Serialize)]
struct StateSection {
    kind: String,
    valid: bool,
    min_eigenvalue: f64,
    warnings: Vec<String>,
}

#[derive(Serialize)]
struct StabilitySection {
    #[serde(skip_serializing_if = "Option::is_none")]
    warning: Option<String>,
}

fn validate(ctx: &Context) -> Outcome {
    let params = ctx.exp.params();
    let check = ModelCheck::run(&ctx.exp, ctx.tol);
    let p = &check.positivity;
    let flags = classify(&params);
    let information_flow = if p.is_valid() {
        match check_no_information_flow(&params, ctx.tol) {
            Ok(r) => InfoSection {
                checked: true,
                possible: Some(r.information_flow_possible()),
                e_norm: Some(r.e_norm),
                e_bound: r.e_bound,
                forced_zero: r.forced_zero.iter().map(|t| t.to_string()).collect(),
                note: None,
            },
            Err(e) => return Err(Failure::Runtime(format!("validator inconsistency: {e}"))),
        }
    } else {
        InfoSection {
            checked: false,
            possible: None,
            e_norm: None,
            e_bound: None,
            forced_zero: Vec::new(),
            note: Some("skipped: positivity failed".into()),
        }
    };
    let cert = Certificate {
        valid: check.valid(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_sha256: ctx.exp.hash.clone(),
        tol: ctx.tol,
        n: ctx.exp.n,
        s: ctx.exp.s,
        positivity: PositivitySection {
            valid: p.is_valid(),
            forms_agree: p.forms_agree(),
            a_pm_ib_valid: p.ab_valid,
            block_valid: p.block_valid,
            min_a_pm_ib: p.min_ab(),
            min_block: p.min_block(),
            eigenvalues_a_plus_ib: p.eigenvalues_plus.iter().copied().collect(),
            eigenvalues_a_minus_ib: p.eigenvalues_minus.iter().copied().collect(),
            eigenvalues_block: p.eigenvalues_block.iter().copied().collect(),
            violation_form: p.violation.as_ref().map(|v| v.form.to_string()),
            violation_eigenvalue: p.violation.as_ref().map(|v| v.eigenvalue),
        },
        levy: LevySection {
            valid: check.levy.is_valid(),
            atoms: params.nu().atoms.len(),
            violations: check.levy.violations.iter().map(|v| v.to_string()).collect(),
        },
        flags: FlagsSection {
            translation_invariant: flags.translation_invariant,
            quantum_dissipationless: flags.quantum_dissipationless,
            classical_dissipationless: flags.classical_dissipationless,
            autonomous_quantum_reduction: flags.autonomous_quantum_reduction,
            autonomous_classical_reduction: flags.autonomous_classical_reduction,
        },
        information_flow,
        state: check.state.as_ref().map(|s| StateSection {
            kind: s.kind.into(),
            valid: s.valid,
            min_eigenvalue: s.min_eigenvalue,
            warnings: s.warnings.clone(),
        }),
        stability: StabilitySection {
            warning: stability_warning(&params),
        },
    };
    let body = toml::to_string(&cert).map_err(|e| Failure::Runtime(format!("certificate: {e}")))?;
    let path = ctx.out().join("certificate.toml");
    let mut text = String::new();
    for (k, v) in &ctx.meta.pairs {
        text += &format!("# {k}={v}\n");
    }
    text += &body;
    std::fs::write(&path, text)?;

    if check.valid() {
        println!("valid model; certificate written to {}", path.display());
        Ok(())
    } else {
        println!("certificate written to {}", path.display());
        Err(Failure::Invalid(check.reasons().join("; ")))
    }
}

fn default_xis(d: usize) -> Vec<DVector<f64>> {
    let mut out = vec![DVector::zeros(d)];
    out.extend((0..d).map(|i| {
        let mut e = DVector::zeros(d);
        e[i] = 1.0;
        e
    }));
    out
}

fn initial_charfn(ctx: &Context) -> Result<Box<dyn CharacteristicFunction>, Failure> {
    match &ctx.exp.state {
        Some(InitialState::Gaussian { .. }) => Ok(Box::new(ctx.gaussian().expect("gaussian state"))),
        Some(InitialState::Grid(g)) => Ok(Box::new(g.clone())),
        None => Err(Failure::Config(format!(
            "`{}` needs a [state] section",
            ctx.kind.name()
        ))),
    }
}

fn grid_spec(ctx: &Context, required: bool) -> Result<Option<GridSpec>, Failure> {
    let spec = ctx.exp.grid(ctx.opts.grid)?;
    let d = ctx.exp.d();
    match &spec {
        None if required => Err(Failure::Config(
            "no grid: pass --grid HALF_WIDTH:POINTS or set run.grid".into(),
        )),
        Some(_) if d > hybrid_qf::grid::MAX_WIGNER_DIM => Err(Failure::Config(format!(
            "Wigner grids need d ≤ {}, the model has d = {d}",
            hybrid_qf::grid::MAX_WIGNER_DIM
        ))),
        _ => Ok(spec),
    }
}

/// `χ_t` on the grid and its Wigner transform, written as `<stem>_t<i>.csv`.
fn write_grids(
    ctx: &Context,
    ev: &NoiseFunctionEvaluator,
    chi0: &dyn CharacteristicFunction,
    spec: &GridSpec,
    times: &[f64],
    write_charfn: bool,
) -> Outcome {
    let points: Vec<DVector<f64>> = (0..spec.len()).map(|i| spec.point(i)).collect();
    for (i, &t) in times.iter().enumerate() {
        let values = evolve_charfn_batch(ev, chi0, &points, t, Backend::default())?;
        let grid = CharFnGrid::new(spec.clone(), values)?;
        let mut meta = ctx.meta.pairs.clone();
        meta.push(("t".into(), num(t)));
        if write_charfn {
            let (_, f) = crate::output::create(ctx.out(), &format!("charfn_t{i}.csv"))?;
            grid.write_csv(f, &meta)?;
        }
        let w = wigner_from_charfn(&grid)?;
        let (path, f) = crate::output::create(ctx.out(), &format!("wigner_t{i}.csv"))?;
        w.write_csv(f, &meta)?;
        println!("t = {t}: {} (integral {:.12})", path.display(), w.integral());
        for msg in &w.warnings {
            eprintln!("warning (t = {t}): {msg}");
        }
    }
    Ok(())
}

fn moment_columns(d: usize) -> Vec<String> {
    let mut cols = vec!["t".to_string()];
    cols.extend(indexed("mean", d));
    for i in 0..d {
        for j in i..d {
            cols.push(format!("cov{i}_{j}"));
        }
    }
    cols
}

fn moment_row(t: f64, mean: &DVector<f64>, cov: &DMatrix<f64>) -> Vec<String> {
    let d = mean.len();
    let mut row = vec![num(t)];
    row.extend(mean.iter().map(|x| num(*x)));
    for i in 0..d {
        for j in i..d {
            row.push(num(cov[(i, j)]));
        }
    }
    row
}

/// Fixed point of the moment ODEs when `Z` is stable:
/// `Zᵀm + α_eff = 0` and `ZᵀV + VZ + A_eff = 0`.
fn stationary_moments(params: &GeneratorParams) -> Option<(DVector<f64>, DMatrix<f64>)> {
    let z = &params.z_matrix;
    let d = z.nrows();
    let max_re = z
        .clone()
        .complex_eigenvalues()
        .iter()
        .map(|c| c.re)
        .fold(f64::NEG_INFINITY, f64::max);
    if d == 0 || max_re >= -1e-12 {
        return None;
    }
    let zt = z.transpose();
    let mean = zt.clone().lu().solve(&(-params.exponent.effective_drift()))?;
    let eye = DMatrix::<f64>::identity(d, d);
    let op = eye.kronecker(&zt) + zt.kronecker(&eye);
    let rhs = -DVector::from_column_slice(params.exponent.effective_diffusion().as_slice());
    let vec_v = op.lu().solve(&rhs)?;
    let v = DMatrix::from_column_slice(d, d, vec_v.as_slice());
    Some((mean, (&v + v.transpose()) * 0.5))
}

const FIXED_POINT_TOL: f64 = 1e-6;

fn evolve(ctx: &Context) -> Outcome {
    ctx.require_valid()?;
    let params = ctx.exp.params();
    let d = params.d();
    let times = ctx.times(&[0.0, 1.0]);
    let chi0 = initial_charfn(ctx)?;
    let spec = grid_spec(ctx, false)?;
    let xis = ctx.exp.run.xi.as_ref().map_or_else(
        || Ok(default_xis(d)),
        |v| v.iter().map(|x| vector(x, d, "run.xi")).collect::<Result<Vec<_>, _>>(),
    )?;
    let ev = ctx.evaluator(params.clone());

    let mut cols = indexed("xi", d);
    cols.extend(["t", "re", "im"].map(String::from));
    let mut charfn = Table::create(ctx.out(), "charfn.csv", &ctx.meta, &cols)?;
    let mut noise = Table::create(ctx.out(), "noise.csv", &ctx.meta, &cols)?;
    for &t in &times {
        let chi = evolve_charfn_batch(&ev, chi0.as_ref(), &xis, t, Backend::default())?;
        let f = ev.noise_batch(&xis, t, Backend::default())?;
        for ((xi, c), fv) in xis.iter().zip(&chi).zip(&f) {
            let lead = format!("{},{}", nums(xi.iter().copied()), num(t));
            charfn.row(&[lead.clone(), complex(*c)])?;
            noise.row(&[lead, complex(*fv)])?;
        }
    }
    println!("{}", charfn.finish()?.display());
    println!("{}", noise.finish()?.display());

    if let Some(state) = ctx.gaussian() {
        let mut moments = Table::create(ctx.out(), "moments.csv", &ctx.meta, &moment_columns(d))?;
        let mut last = None;
        for &t in &times {
            let g = gaussian_propagate(&params, &state.mean, &state.cov, t)?;
            moments.row(&moment_row(t, &g.mean, &g.cov))?;
            last = Some(g);
        }
        println!("{}", moments.finish()?.display());

        let mut summary = String::new();
        for (k, v) in &ctx.meta.pairs {
            summary += &format!("# {k}={v}\n");
        }
        match (stationary_moments(&params), last) {
            (Some((m_inf, v_inf)), Some(g)) => {
                let dist = (&g.cov - &v_inf).amax().max((&g.mean - &m_inf).amax());
                let reached = dist <= FIXED_POINT_TOL;
                summary += &format!(
                    "fixed_point = true\nlast_time = {}\ndistance = {}\nreached = {reached}\n",
                    num(g.t),
                    num(dist)
                );
                let mut fp = Table::create(ctx.out(), "fixed_point.csv", &ctx.meta, &moment_columns(d))?;
                fp.row(&moment_row(f64::INFINITY, &m_inf, &v_inf))?;
                fp.finish()?;
                println!(
                    "moment fixed point: distance {dist:.3e} at t = {} ({})",
                    g.t,
                    if reached { "reached" } else { "not reached" }
                );
            }
            _ => {
                summary += "fixed_point = false\n";
                println!("no moment fixed point (Z is not strictly stable)");
            }
        }
        std::fs::write(ctx.out().join("summary.toml"), summary)?;
    }

    if let Some(spec) = spec {
        write_grids(ctx, &ev, chi0.as_ref(), &spec, &times, false)?;
    }
    Ok(())
}

fn correlate(ctx: &Context) -> Outcome {
    ctx.require_valid()?;
    let params = ctx.exp.params();
    let s = ctx.exp.s;
    if s == 0 {
        return Err(Failure::Config("correlate needs classical coordinates (s ≥ 1)".into()));
    }
    let probes = &ctx.exp.run.correlate;
    if probes.is_empty() {
        return Err(Failure::Config("no probes: add [[run.correlate]] entries".into()));
    }
    let m = probes[0].k.len();
    let chi0 = initial_charfn(ctx)?;
    let ev = ctx.evaluator(params);

    let mut cols = indexed("t", m);
    for j in 0..m {
        cols.extend(indexed(&format!("k{j}_"), s));
    }
    cols.extend(["re", "im"].map(String::from));
    let mut table = Table::create(ctx.out(), "correlate.csv", &ctx.meta, &cols)?;
    for (i, p) in probes.iter().enumerate() {
        if p.k.len() != m {
            return Err(Failure::Config(format!(
                "run.correlate[{i}]: {} times, but the first probe has {m}",
                p.k.len()
            )));
        }
        let times = ctx.opts.times.clone().unwrap_or_else(|| p.times.clone());
        if times.len() != m {
            return Err(Failure::Config(format!(
                "--times has {} entries, probes have {m}",
                times.len()
            )));
        }
        check_times(&times, &format!("run.correlate[{i}].times"))?;
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Failure::Config(format!(
                "run.correlate[{i}].times: must be strictly ascending"
            )));
        }
        let kvecs: Vec<DVector<f64>> = p.k.iter().map(|k| DVector::from_column_slice(k)).collect();
        let phi = multi_time_charfn(&ev, chi0.as_ref(), &times, &kvecs)?;
        let mut row = vec![nums(times.iter().copied())];
        row.extend(kvecs.iter().map(|k| nums(k.iter().copied())));
        row.push(complex(phi));
        table.row(&row)?;
    }
    println!("{}", table.finish()?.display());
    Ok(())
}

fn sample(ctx: &Context) -> Outcome {
    ctx.require_valid()?;
    let params = ctx.exp.params();
    let space = &params.space;
    let (q, s) = (space.dim.quantum_len(), space.dim.s());
    if s == 0 {
        return Err(Failure::Config("sample needs classical coordinates (s ≥ 1)".into()));
    }
    let state = ctx.gaussian().ok_or_else(|| {
        Failure::Config("sample needs a Gaussian initial state (state.mean and state.cov)".into())
    })?;
    let run = &ctx.exp.run;
    let requested = ctx.opts.times.clone().or_else(|| run.times.clone());
    let horizon = run
        .horizon
        .or_else(|| requested.as_ref().map(|t| t.iter().copied().fold(0.0, f64::max)))
        .unwrap_or(1.0);
    if horizon <= 0.0 {
        return Err(Failure::Config("sample needs a positive horizon".into()));
    }
    let mut record = requested.unwrap_or_else(|| vec![0.0, horizon]);
    record.sort_by(f64::total_cmp);
    record.dedup();
    if record.iter().any(|t| *t > horizon) {
        return Err(Failure::Config(format!("record times exceed the horizon {horizon}")));
    }
    let mut cfg = SimulationConfig::new(horizon, ctx.seed).with_record_times(record.clone());
    if let Some(dt) = run.dt {
        cfg = cfg.with_dt(dt);
    }
    if let Some(n) = run.n_paths {
        cfg = cfg.with_paths(n);
    }

    let ens: TrajectoryEnsemble = if params.nu().is_empty() {
        simulate_hybrid_gaussian(&params, &state, &cfg)?
    } else {
        let model = ClassicalSdeModel::from_params(&params)?;
        if model.has_quantum_feed() {
            return Err(Failure::Runtime(
                "path-wise sampling of a hybrid model with jumps is not supported: \
                 the classical drift depends on quantum coordinates (Z¹⁰ ≠ 0) and the \
                 Lévy measure is nonzero, so there is no classical Markov process to \
                 simulate. Use `correlate` for multi-time statistics instead."
                    .into(),
            ));
        }
        let cl = space.dim.classical_range();
        let x0 = InitialCondition::Gaussian {
            mean: state.mean.rows_range(cl.clone()).into_owned(),
            cov: state.cov.view((cl.start, cl.start), (s, s)).into_owned(),
        };
        simulate_classical(&model, &x0, &cfg)?
    };

    let (path, f) = crate::output::create(ctx.out(), "trajectories.csv")?;
    ens.write_csv(f, &ctx.meta.pairs)?;
    println!("{}", path.display());

    let cols: Vec<String> = [
        "t", "coord", "mean", "mean_se", "exact_mean", "mean_z", "var", "var_se", "exact_var", "var_z",
    ]
    .map(String::from)
    .to_vec();
    let mut table = Table::create(ctx.out(), "sample_summary.csv", &ctx.meta, &cols)?;
    let mut worst: f64 = 0.0;
    for &t in &record {
        let exact = gaussian_propagate(&params, &state.mean, &state.cov, t)?;
        for j in 0..s {
            let m = ens.mean(t, j)?;
            let v = ens.variance(t, j)?;
            let (em, ev) = (exact.mean[q + j], exact.cov[(q + j, q + j)]);
            let z = |est: f64, se: f64, ex: f64| if se > 0.0 { (est - ex) / se } else { 0.0 };
            let (zm, zv) = (z(m.value, m.std_error, em), z(v.value, v.std_error, ev));
            worst = worst.max(zm.abs()).max(zv.abs());
            table.row(&[
                num(t),
                j.to_string(),
                num(m.value),
                num(m.std_error),
                num(em),
                num(zm),
                num(v.value),
                num(v.std_error),
                num(ev),
                num(zv),
            ])?;
        }
    }
    println!("{}", table.finish()?.display());
    println!("largest deviation from the moment ODEs: {worst:.2} standard errors");
    Ok(())
}

fn wigner(ctx: &Context) -> Outcome {
    ctx.require_valid()?;
    let params = ctx.exp.params();
    let spec = grid_spec(ctx, true)?.expect("required grid");
    let times = ctx.times(&[0.0]);
    let chi0 = initial_charfn(ctx)?;
    let ev = ctx.evaluator(params);
    write_grids(ctx, &ev, chi0.as_ref(), &spec, &times, true)
}
