//! TOML experiment files: one model, one initial state, one run block.

use std::path::{Path, PathBuf};

use hybrid_qf::levy::LevyExponentParams;
use hybrid_qf::{
    make_phase_space, CharFnGrid, GeneratorParams, GridAxis, GridSpec, LevyAtom, LevyMeasure,
};
use nalgebra::{DMatrix, DVector};
use serde::Deserialize;
use sha2::{Digest, Sha256};

/// A problem with the configuration itself (exit code 2).
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub model: ModelSection,
    pub state: Option<StateSection>,
    #[serde(default)]
    pub run: RunSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub n: usize,
    pub s: usize,
    pub z: Vec<Vec<f64>>,
    pub a: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
    #[serde(default)]
    pub jumps: Vec<JumpEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpEntry {
    pub eta: Vec<f64>,
    pub weight: f64,
    /// Defaults to `|η| < 1`.
    pub compensated: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSection {
    pub mean: Option<Vec<f64>>,
    pub cov: Option<Vec<Vec<f64>>>,
    /// CSV written by `CharFnGrid::write_csv`, relative to the config file.
    pub charfn_grid: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub times: Option<Vec<f64>>,
    pub xi: Option<Vec<Vec<f64>>>,
    pub tol: Option<f64>,
    pub quad_tol: Option<f64>,
    pub seed: Option<u64>,
    pub n_paths: Option<usize>,
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub grid: Option<GridSection>,
    #[serde(default)]
    pub correlate: Vec<CorrelateEntry>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn expand(&self, d: usize, field: &str) -> Result<Vec<T>, ConfigError> {
        match self {
            Self::One(x) => Ok(vec![x.clone(); d]),
            Self::Many(xs) if xs.len() == d => Ok(xs.clone()),
            Self::Many(xs) => Err(bad(format!(
                "{field}: {} entries given, expected 1 or {d}",
                xs.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub half_width: OneOrMany<f64>,
    pub points: OneOrMany<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelateEntry {
    pub times: Vec<f64>,
    pub k: Vec<Vec<f64>>,
}

pub enum InitialState {
    Gaussian {
        mean: DVector<f64>,
        cov: DMatrix<f64>,
    },
    Grid(CharFnGrid),
}

/// Parsed and shape-checked configuration.
pub struct Experiment {
    pub hash: String,
    pub n: usize,
    pub s: usize,
    pub z: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub alpha: DVector<f64>,
    pub atoms: Vec<LevyAtom>,
    pub state: Option<InitialState>,
    pub run: RunSection,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn matrix(rows: &[Vec<f64>], d: usize, field: &str) -> Result<DMatrix<f64>, ConfigError> {
    if rows.len() != d {
        return Err(bad(format!("{field}: {} rows given, expected {d}", rows.len())));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != d {
            return Err(bad(format!(
                "{field}: row {} has {} entries, expected {d}",
                i + 1,
                r.len()
            )));
        }
        if let Some(j) = r.iter().position(|x| !x.is_finite()) {
            return Err(bad(format!("{field}: entry ({}, {}) is not finite", i + 1, j + 1)));
        }
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

pub fn vector(xs: &[f64], d: usize, field: &str) -> Result<DVector<f64>, ConfigError> {
    if xs.len() != d {
        return Err(bad(format!("{field}: {} entries given, expected {d}", xs.len())));
    }
    if let Some(j) = xs.iter().position(|x| !x.is_finite()) {
        return Err(bad(format!("{field}: entry {} is not finite", j + 1)));
    }
    Ok(DVector::from_column_slice(xs))
}

fn symmetric(m: &DMatrix<f64>, field: &str) -> Result<(), ConfigError> {
    let defect = (m - m.transpose()).amax();
    if defect > 1e-12 {
        return Err(bad(format!("{field}: matrix is not symmetric (defect {defect:e})")));
    }
    Ok(())
}

impl Experiment {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let bytes = std::fs::read(path)
            .map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes)
            .map_err(|_| bad(format!("{} is not valid UTF-8", path.display())))?;
        let file: ConfigFile = toml::from_str(text)
            .map_err(|e| bad(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_file(file, sha256_hex(&bytes), base)
    }

    fn from_file(file: ConfigFile, hash: String, base: &Path) -> Result<Self, ConfigError> {
        let m = file.model;
        if m.n + m.s == 0 {
            return Err(bad("model: n + s must be at least 1"));
        }
        let d = 2 * m.n + m.s;
        let z = matrix(&m.z, d, "model.z")?;
        let a = matrix(&m.a, d, "model.a")?;
        symmetric(&a, "model.a")?;
        let alpha = vector(&m.alpha, d, "model.alpha")?;
        let mut atoms = Vec::with_capacity(m.jumps.len());
        for (i, j) in m.jumps.iter().enumerate() {
            let field = format!("model.jumps[{i}].eta");
            let eta = vector(&j.eta, d, &field)?;
            let mut atom = LevyAtom::new(eta, j.weight);
            if let Some(c) = j.compensated {
                atom.compensated = c;
            }
            atoms.push(atom);
        }

        let state = match file.state {
            None => None,
            Some(st) => Some(match (st.mean, st.cov, st.charfn_grid) {
                (Some(mean), Some(cov), None) => {
                    let cov = matrix(&cov, d, "state.cov")?;
                    symmetric(&cov, "state.cov")?;
                    InitialState::Gaussian {
                        mean: vector(&mean, d, "state.mean")?,
                        cov,
                    }
                }
                (None, None, Some(p)) => {
                    let full = base.join(&p);
                    let f = std::fs::File::open(&full)
                        .map_err(|e| bad(format!("state.charfn_grid: cannot open {}: {e}", full.display())))?;
                    let g = CharFnGrid::read_csv(std::io::BufReader::new(f))
                        .map_err(|e| bad(format!("state.charfn_grid: {e}")))?;
                    if g.spec.dim() != d {
                        return Err(bad(format!(
                            "state.charfn_grid: grid has dimension {}, model has {d}",
                            g.spec.dim()
                        )));
                    }
                    InitialState::Grid(g)
                }
                _ => {
                    return Err(bad(
                        "state: give either `mean` and `cov`, or `charfn_grid`",
                    ))
                }
            }),
        };

        let run = file.run;
        if let Some(t) = &run.times {
            check_times(t, "run.times")?;
        }
        for (i, c) in run.correlate.iter().enumerate() {
            if c.times.len() != c.k.len() {
                return Err(bad(format!(
                    "run.correlate[{i}]: {} times but {} frequency vectors",
                    c.times.len(),
                    c.k.len()
                )));
            }
            for (j, k) in c.k.iter().enumerate() {
                vector(k, m.s, &format!("run.correlate[{i}].k[{j}]"))?;
            }
        }
        if let Some(xi) = &run.xi {
            for (i, x) in xi.iter().enumerate() {
                vector(x, d, &format!("run.xi[{i}]"))?;
            }
        }
        for (field, v) in [("run.tol", run.tol), ("run.quad_tol", run.quad_tol), ("run.dt", run.dt), ("run.horizon", run.horizon)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(bad(format!("{field}: must be positive, got {v}")));
                }
            }
        }
        Ok(Self {
            hash,
            n: m.n,
            s: m.s,
            z,
            a,
            alpha,
            atoms,
            state,
            run,
        })
    }

    pub fn d(&self) -> usize {
        2 * self.n + self.s
    }

    /// Generator built without the PSD gate on `A`, so `--force` can run
    /// models that fail validation.
    pub fn params(&self) -> GeneratorParams {
        let space = make_phase_space(self.n, self.s).expect("dimensions checked on load");
        let exponent = LevyExponentParams {
            alpha: self.alpha.clone(),
            a_matrix: self.a.clone(),
            nu: LevyMeasure::new(self.atoms.clone()),
        };
        GeneratorParams::new(space, self.z.clone(), exponent).expect("shapes checked on load")
    }

    pub fn grid(&self, cli: Option<(f64, usize)>) -> Result<Option<GridSpec>, ConfigError> {
        let d = self.d();
        let (hw, pts) = match (cli, &self.run.grid) {
            (Some((h, p)), _) => (vec![h; d], vec![p; d]),
            (None, Some(g)) => (
                g.half_width.expand(d, "run.grid.half_width")?,
                g.points.expand(d, "run.grid.points")?,
            ),
            (None, None) => return Ok(None),
        };
        let axes = hw
            .into_iter()
            .zip(pts)
            .map(|(h, p)| GridAxis::new(h, p))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| bad(format!("grid: {e}")))?;
        Ok(Some(GridSpec::new(axes).map_err(|e| bad(format!("grid: {e}")))?))
    }
}

pub fn check_times(t: &[f64], field: &str) -> Result<(), ConfigError> {
    if t.is_empty() {
        return Err(bad(format!("{field}: no times given")));
    }
    if t.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(bad(format!("{field}: times must be finite and nonnegative")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Experiment, ConfigError> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
        Experiment::from_file(file, String::new(), Path::new("."))
    }

    const DAMPED: &str = r#"
[model]
n = 1
s = 0
z = [[-0.5, 0.0], [0.0, -0.5]]
a = [[0.5, 0.0], [0.0, 0.5]]
alpha = [0.0, 0.0]
"#;

    #[test]
    fn parses_minimal_model() {
        let e = parse(DAMPED).unwrap();
        assert_eq!(e.d(), 2);
        assert!(e.state.is_none());
        assert_eq!(e.params().z_matrix[(0, 0)], -0.5);
    }

    #[test]
    fn field_addressed_shape_errors() {
        let bad_row = DAMPED.replace("[0.0, -0.5]]", "[0.0]]");
        let msg = parse(&bad_row).err().unwrap().0;
        assert!(msg.contains("model.z: row 2"), "{msg}");
        let asym = DAMPED.replace("a = [[0.5, 0.0]", "a = [[0.5, 0.1]");
        assert!(parse(&asym).err().unwrap().0.contains("model.a"));
        let unknown = format!("{DAMPED}bogus = 1\n");
        assert!(parse(&unknown).is_err());
    }

    #[test]
    fn jump_compensation_override() {
        let text = format!("{DAMPED}[[model.jumps]]\neta = [0.2, 0.0]\nweight = 1.0\ncompensated = false\n");
        let e = parse(&text).unwrap();
        assert!(!e.atoms[0].compensated);
    }

    #[test]
    fn grid_expansion() {
        let text = format!("{DAMPED}[run]\ngrid = {{ half_width = [4.0, 6.0], points = 33 }}\n");
        let g = parse(&text).unwrap().grid(None).unwrap().unwrap();
        assert_eq!(g.axes[1].half_width, 6.0);
        assert_eq!(g.axes[0].points, 33);
    }

    #[test]
    fn hash_is_hex_sha256() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
