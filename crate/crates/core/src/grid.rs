//! Sampled characteristic functions and Wigner densities on rectangular
//! grids, the FFT transform between them, and their CSV form.
//!
//! Grids are symmetric about the origin with an odd number of points per
//! axis, so `ξ = 0` is always a grid point. Values are stored row-major with
//! the last axis varying fastest.

use std::io::{BufRead, Write};

use nalgebra::DVector;
use rustfft::{FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::exec::Backend;
use crate::states::CharacteristicFunction;
use crate::C64;

/// Largest dimension accepted by the Wigner transform.
pub const MAX_WIGNER_DIM: usize = 4;

/// Boundary magnitude above which a transform warns about aliasing.
pub const DECAY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridAxis {
    pub half_width: f64,
    pub points: usize,
}

impl GridAxis {
    pub fn new(half_width: f64, points: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::Grid(format!("half width must be positive, got {half_width}")));
        }
        if points < 3 || points.is_multiple_of(2) {
            return Err(Error::Grid(format!(
                "point count must be odd and at least 3, got {points}"
            )));
        }
        Ok(Self { half_width, points })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.points - 1) as f64
    }

    fn center(&self) -> usize {
        (self.points - 1) / 2
    }

    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 - self.center() as f64) * self.spacing()
    }

    /// Axis of the Fourier-conjugate variable: spacing `2π/(NΔ)`.
    pub fn dual(&self) -> GridAxis {
        let dz = 2.0 * std::f64::consts::PI / (self.points as f64 * self.spacing());
        GridAxis {
            half_width: dz * self.center() as f64,
            points: self.points,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub axes: Vec<GridAxis>,
}

impl GridSpec {
    pub fn new(axes: Vec<GridAxis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::Grid("grid needs at least one axis".into()));
        }
        let total = axes
            .iter()
            .try_fold(1usize, |acc, a| acc.checked_mul(a.points))
            .ok_or_else(|| Error::Grid("grid size overflows".into()))?;
        if total > 1 << 28 {
            return Err(Error::Grid(format!("grid of {total} points is too large")));
        }
        Ok(Self { axes })
    }

    /// Same half width and point count on every axis.
    pub fn uniform(d: usize, half_width: f64, points: usize) -> Result<Self> {
        Self::new(vec![GridAxis::new(half_width, points)?; d])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(GridAxis::spacing).product()
    }

    pub fn dual(&self) -> GridSpec {
        GridSpec {
            axes: self.axes.iter().map(GridAxis::dual).collect(),
        }
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for (k, a) in self.axes.iter().enumerate().rev() {
            idx[k] = flat % a.points;
            flat /= a.points;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.axes)
            .fold(0, |acc, (i, a)| acc * a.points + i)
    }

    pub fn point(&self, flat: usize) -> DVector<f64> {
        let idx = self.multi_index(flat);
        DVector::from_fn(self.dim(), |k, _| self.axes[k].coord(idx[k]))
    }

    pub fn origin_index(&self) -> usize {
        let idx: Vec<usize> = self.axes.iter().map(GridAxis::center).collect();
        self.flat_index(&idx)
    }

    /// Flat index of the point reflected through the origin.
    pub fn mirror_index(&self, flat: usize) -> usize {
        let idx: Vec<usize> = self
            .multi_index(flat)
            .iter()
            .zip(&self.axes)
            .map(|(i, a)| a.points - 1 - i)
            .collect();
        self.flat_index(&idx)
    }

    pub fn on_boundary(&self, flat: usize) -> bool {
        self.multi_index(flat)
            .iter()
            .zip(&self.axes)
            .any(|(i, a)| *i == 0 || *i == a.points - 1)
    }

    fn header(&self, kind: &str) -> String {
        let hw: Vec<String> = self.axes.iter().map(|a| format!("{:.16e}", a.half_width)).collect();
        let pts: Vec<String> = self.axes.iter().map(|a| a.points.to_string()).collect();
        format!(
            "# hybrid-qf grid kind={kind} half_widths={} points={}",
            hw.join(","),
            pts.join(",")
        )
    }

    fn parse_header(line: &str) -> Result<(String, GridSpec)> {
        let rest = line
            .strip_prefix("# hybrid-qf grid")
            .ok_or_else(|| Error::Grid("missing grid header line".into()))?;
        let (mut kind, mut hw, mut pts) = (None, None, None);
        for field in rest.split_whitespace() {
            match field.split_once('=') {
                Some(("kind", v)) => kind = Some(v.to_string()),
                Some(("half_widths", v)) => hw = Some(v.to_string()),
                Some(("points", v)) => pts = Some(v.to_string()),
                _ => return Err(Error::Grid(format!("unexpected header field `{field}`"))),
            }
        }
        let missing = |f: &str| Error::Grid(format!("grid header lacks `{f}`"));
        let kind = kind.ok_or_else(|| missing("kind"))?;
        let hw: Vec<f64> = hw
            .ok_or_else(|| missing("half_widths"))?
            .split(',')
            .map(|v| v.parse().map_err(|_| Error::Grid(format!("bad half width `{v}`"))))
            .collect::<Result<_>>()?;
        let pts: Vec<usize> = pts
            .ok_or_else(|| missing("points"))?
            .split(',')
            .map(|v| v.parse().map_err(|_| Error::Grid(format!("bad point count `{v}`"))))
            .collect::<Result<_>>()?;
        if hw.len() != pts.len() {
            return Err(Error::Grid("half_widths and points differ in length".into()));
        }
        let axes = hw
            .into_iter()
            .zip(pts)
            .map(|(h, p)| GridAxis::new(h, p))
            .collect::<Result<_>>()?;
        Ok((kind, GridSpec::new(axes)?))
    }
}

/// A characteristic function sampled on a symmetric `ξ`-grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CharFnGrid {
    pub spec: GridSpec,
    pub values: Vec<C64>,
}

impl CharFnGrid {
    pub fn new(spec: GridSpec, values: Vec<C64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::DimensionMismatch {
                what: "characteristic-function grid",
                expected: spec.len(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite("characteristic-function grid"));
        }
        Ok(Self { spec, values })
    }

    pub fn sample(spec: GridSpec, chi: &dyn CharacteristicFunction, backend: Backend) -> Self {
        let values = backend.map_indexed(spec.len(), |i| chi.eval(&spec.point(i)));
        Self { spec, values }
    }

    /// `|χ(0) − 1|`.
    pub fn normalization_error(&self) -> f64 {
        (self.values[self.spec.origin_index()] - C64::new(1.0, 0.0)).norm()
    }

    /// `max |χ(−ξ) − conj χ(ξ)|` over the grid.
    pub fn hermitian_error(&self) -> f64 {
        (0..self.values.len())
            .map(|i| (self.values[self.spec.mirror_index(i)] - self.values[i].conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Checks `χ(0) = 1` and Hermitian symmetry within `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let n = self.normalization_error();
        if n > tol {
            return Err(Error::Grid(format!("|χ(0) − 1| = {n:.3e} exceeds {tol:.1e}")));
        }
        let h = self.hermitian_error();
        if h > tol {
            return Err(Error::Grid(format!(
                "Hermitian symmetry broken by {h:.3e} (tolerance {tol:.1e})"
            )));
        }
        Ok(())
    }

    /// Largest `|χ|` on the outer faces of the grid.
    pub fn boundary_magnitude(&self) -> f64 {
        (0..self.values.len())
            .filter(|i| self.spec.on_boundary(*i))
            .map(|i| self.values[i].norm())
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, out: W, metadata: &[(String, String)]) -> Result<()> {
        write_grid(out, &self.spec, "charfn", metadata, &["re", "im"], |i| {
            vec![self.values[i].re, self.values[i].im]
        })
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let (spec, rows) = read_grid(input, "charfn", 2)?;
        Self::new(spec, rows.into_iter().map(|r| C64::new(r[0], r[1])).collect())
    }
}

/// Multilinear interpolation; zero outside the grid.
impl CharacteristicFunction for CharFnGrid {
    fn eval(&self, xi: &DVector<f64>) -> C64 {
        let d = self.spec.dim();
        if xi.len() != d {
            return C64::new(f64::NAN, f64::NAN);
        }
        let mut base = vec![0usize; d];
        let mut frac = vec![0.0; d];
        for (k, a) in self.spec.axes.iter().enumerate() {
            let u = xi[k] / a.spacing() + a.center() as f64;
            if !(u >= 0.0 && u <= (a.points - 1) as f64) {
                return C64::new(0.0, 0.0);
            }
            let b = (u.floor() as usize).min(a.points - 2);
            base[k] = b;
            frac[k] = u - b as f64;
        }
        let mut acc = C64::new(0.0, 0.0);
        let mut idx = vec![0usize; d];
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            for k in 0..d {
                let up = (corner >> k) & 1 == 1;
                idx[k] = base[k] + up as usize;
                w *= if up { frac[k] } else { 1.0 - frac[k] };
            }
            if w != 0.0 {
                acc += self.values[self.spec.flat_index(&idx)] * w;
            }
        }
        acc
    }
}

/// A real phase-space density on a `z`-grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub spec: GridSpec,
    pub values: Vec<f64>,
    pub warnings: Vec<String>,
}

impl WignerGrid {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::DimensionMismatch {
                what: "Wigner grid",
                expected: spec.len(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Wigner grid"));
        }
        Ok(Self {
            spec,
            values,
            warnings: Vec::new(),
        })
    }

    /// Trapezoid-rule integral over the grid.
    pub fn integral(&self) -> f64 {
        let mut sum = 0.0;
        for (i, v) in self.values.iter().enumerate() {
            let w: f64 = self
                .spec
                .multi_index(i)
                .iter()
                .zip(&self.spec.axes)
                .map(|(j, a)| if *j == 0 || *j == a.points - 1 { 0.5 } else { 1.0 })
                .product();
            sum += w * v;
        }
        sum * self.spec.cell_volume()
    }

    pub fn write_csv<W: Write>(&self, out: W, metadata: &[(String, String)]) -> Result<()> {
        write_grid(out, &self.spec, "wigner", metadata, &["value"], |i| {
            vec![self.values[i]]
        })
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let (spec, rows) = read_grid(input, "wigner", 1)?;
        Self::new(spec, rows.into_iter().map(|r| r[0]).collect())
    }
}

fn check_transform_dim(spec: &GridSpec) -> Result<()> {
    if spec.dim() > MAX_WIGNER_DIM {
        return Err(Error::Unsupported(format!(
            "grid transforms are limited to d ≤ {MAX_WIGNER_DIM}, got d = {}",
            spec.dim()
        )));
    }
    Ok(())
}

/// Continuous Fourier transform on a centred grid by per-axis FFT.
///
/// With `x_k = (k − c)Δx` and `y_j = (j − c)Δy`, `ΔxΔy = 2π/N`, the sum
/// `Σ_k e^{∓i y_j x_k} g_k` is an ordinary DFT after rotating the origin to
/// index 0 on both sides.
fn centred_fft(spec: &GridSpec, data: &mut [C64], direction: FftDirection, scale: impl Fn(&GridAxis) -> f64) {
    let mut planner = FftPlanner::<f64>::new();
    let mut stride = 1;
    for axis in spec.axes.iter().rev() {
        let n = axis.points;
        let c = axis.center();
        let fft = planner.plan_fft(n, direction);
        let factor = scale(axis);
        let block = n * stride;
        let mut line = vec![C64::new(0.0, 0.0); n];
        for outer in (0..data.len()).step_by(block) {
            for inner in 0..stride {
                let start = outer + inner;
                for (k, v) in line.iter_mut().enumerate() {
                    *v = data[start + k * stride];
                }
                line.rotate_left(c);
                fft.process(&mut line);
                line.rotate_right(c);
                for (k, v) in line.iter().enumerate() {
                    data[start + k * stride] = v * factor;
                }
            }
        }
        stride = block;
    }
}

/// `W(z) = (2π)^{−d} ∫ e^{−iz·ξ} χ(ξ) dξ` on the dual grid
/// `Δz_i = 2π/(N_iΔξ_i)`.
pub fn wigner_from_charfn(chi: &CharFnGrid) -> Result<WignerGrid> {
    check_transform_dim(&chi.spec)?;
    let mut warnings = Vec::new();
    let edge = chi.boundary_magnitude();
    if edge >= DECAY_TOL {
        warnings.push(format!(
            "|χ| reaches {edge:.3e} on the grid boundary; the Wigner grid may be aliased"
        ));
    }
    let mut data = chi.values.clone();
    centred_fft(&chi.spec, &mut data, FftDirection::Forward, |a| {
        a.spacing() / (2.0 * std::f64::consts::PI)
    });
    let peak = data.iter().map(|v| v.re.abs()).fold(0.0, f64::max);
    let imag = data.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    if imag > 1e-8 * peak.max(1e-300) {
        warnings.push(format!(
            "transform has imaginary part up to {imag:.3e}; χ is not Hermitian on this grid"
        ));
    }
    Ok(WignerGrid {
        spec: chi.spec.dual(),
        values: data.into_iter().map(|v| v.re).collect(),
        warnings,
    })
}

/// `χ(ξ) = ∫ e^{iz·ξ} W(z) dz` on the dual grid; the inverse of
/// [`wigner_from_charfn`].
pub fn charfn_from_wigner(w: &WignerGrid) -> Result<CharFnGrid> {
    check_transform_dim(&w.spec)?;
    let mut data: Vec<C64> = w.values.iter().map(|v| C64::new(*v, 0.0)).collect();
    centred_fft(&w.spec, &mut data, FftDirection::Inverse, GridAxis::spacing);
    Ok(CharFnGrid {
        spec: w.spec.dual(),
        values: data,
    })
}

fn write_grid<W: Write>(
    mut out: W,
    spec: &GridSpec,
    kind: &str,
    metadata: &[(String, String)],
    value_cols: &[&str],
    row: impl Fn(usize) -> Vec<f64>,
) -> Result<()> {
    writeln!(out, "{}", spec.header(kind))?;
    for (k, v) in metadata {
        writeln!(out, "# {k}={v}")?;
    }
    let axis_prefix = if kind == "charfn" { "xi" } else { "z" };
    let mut cols: Vec<String> = (0..spec.dim()).map(|k| format!("{axis_prefix}{k}")).collect();
    cols.extend(value_cols.iter().map(|c| c.to_string()));
    writeln!(out, "{}", cols.join(","))?;
    let mut line = String::new();
    for i in 0..spec.len() {
        line.clear();
        let p = spec.point(i);
        for x in p.iter().copied().chain(row(i)) {
            if !line.is_empty() {
                line.push(',');
            }
            line.push_str(&format!("{x:.16e}"));
        }
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

fn read_grid<R: BufRead>(input: R, kind: &str, value_cols: usize) -> Result<(GridSpec, Vec<Vec<f64>>)> {
    let mut lines = input.lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::Grid("empty grid file".into()))??;
    let (found, spec) = GridSpec::parse_header(first.trim_end())?;
    if found != kind {
        return Err(Error::Grid(format!("expected a {kind} grid, found kind={found}")));
    }
    let width = spec.dim() + value_cols;
    let mut rows = Vec::with_capacity(spec.len());
    let mut seen_columns = false;
    for line in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !seen_columns {
            seen_columns = true;
            continue;
        }
        let fields: Vec<f64> = line
            .split(',')
            .map(|v| v.trim().parse().map_err(|_| Error::Grid(format!("bad number `{v}`"))))
            .collect::<Result<_>>()?;
        if fields.len() != width {
            return Err(Error::Grid(format!(
                "row {} has {} fields, expected {width}",
                rows.len() + 1,
                fields.len()
            )));
        }
        rows.push(fields[spec.dim()..].to_vec());
    }
    if rows.len() != spec.len() {
        return Err(Error::Grid(format!(
            "grid has {} rows, header announces {}",
            rows.len(),
            spec.len()
        )));
    }
    Ok((spec, rows))
}
