//! Generator parameters `(Z, A, α, ν)`, their block algebra and the
//! structural checks built on it.
//!
//! With `Ξ = Ξ₁ ⊕ Ξ₀` the matrices split as
//!
//! ```text
//! Z = | Z¹¹ Z¹⁰ |    A = | A¹¹ A¹⁰ |    α = | β  |
//!     | Z⁰¹ Z⁰⁰ |        | A⁰¹ A⁰⁰ |        | α⁰ |
//! ```
//!
//! and complete positivity is `A ± iB ⪰ 0` with
//! `B = ½(σP₁Z − ZᵀP₁σᵀ)`, equivalently `(G E; E† C) ⪰ 0`.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, Error, Result};
use crate::levy::{levy_marginal, LevyAtom, LevyExponentParams, LevyMeasure, Sector};
use crate::linalg::{all_finite, hermitian_eigen, max_abs, max_abs_c, to_complex};
use crate::phase_space::{make_phase_space, PhaseSpace};
use crate::C64;

/// Default slack on minimum eigenvalues in the positivity checks.
pub const DEFAULT_POSITIVITY_TOL: f64 = 1e-10;

/// Threshold for "this block is zero" in the classifiers.
pub const CLASSIFY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    pub space: PhaseSpace,
    pub z_matrix: DMatrix<f64>,
    pub exponent: LevyExponentParams,
}

impl GeneratorParams {
    pub fn new(space: PhaseSpace, z_matrix: DMatrix<f64>, exponent: LevyExponentParams) -> Result<Self> {
        let d = space.d();
        check_len("Z rows", d, z_matrix.nrows())?;
        check_len("Z columns", d, z_matrix.ncols())?;
        check_len("exponent dimension", d, exponent.dim())?;
        if !all_finite(&z_matrix) {
            return Err(Error::NonFinite("flow generator Z"));
        }
        Ok(Self {
            space,
            z_matrix,
            exponent,
        })
    }

    /// Build from raw pieces on a fresh `(n, s)` phase space.
    pub fn from_parts(
        n: usize,
        s: usize,
        z_matrix: DMatrix<f64>,
        alpha: DVector<f64>,
        a_matrix: DMatrix<f64>,
        atoms: Vec<LevyAtom>,
    ) -> Result<Self> {
        let space = make_phase_space(n, s)?;
        let exponent = LevyExponentParams::new(alpha, a_matrix, LevyMeasure::new(atoms))?;
        Self::new(space, z_matrix, exponent)
    }

    pub fn d(&self) -> usize {
        self.space.d()
    }

    pub fn alpha(&self) -> &DVector<f64> {
        &self.exponent.alpha
    }

    pub fn a_matrix(&self) -> &DMatrix<f64> {
        &self.exponent.a_matrix
    }

    pub fn nu(&self) -> &LevyMeasure {
        &self.exponent.nu
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockView {
    pub z11: DMatrix<f64>,
    pub z10: DMatrix<f64>,
    pub z01: DMatrix<f64>,
    pub z00: DMatrix<f64>,
    pub a11: DMatrix<f64>,
    pub a10: DMatrix<f64>,
    pub a00: DMatrix<f64>,
    pub beta: DVector<f64>,
    pub alpha0: DVector<f64>,
}

fn block(m: &DMatrix<f64>, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> DMatrix<f64> {
    m.view((rows.start, cols.start), (rows.len(), cols.len()))
        .into_owned()
}

fn assemble(q: usize, tl: &DMatrix<f64>, tr: &DMatrix<f64>, bl: &DMatrix<f64>, br: &DMatrix<f64>) -> DMatrix<f64> {
    let d = q + br.nrows();
    let mut m = DMatrix::zeros(d, d);
    m.view_mut((0, 0), (q, q)).copy_from(tl);
    m.view_mut((0, q), (q, d - q)).copy_from(tr);
    m.view_mut((q, 0), (d - q, q)).copy_from(bl);
    m.view_mut((q, q), (d - q, d - q)).copy_from(br);
    m
}

impl BlockView {
    pub fn new(params: &GeneratorParams) -> Self {
        let dim = params.space.dim;
        let (q, c) = (dim.quantum_range(), dim.classical_range());
        let z = &params.z_matrix;
        let a = params.a_matrix();
        let alpha = params.alpha();
        Self {
            z11: block(z, q.clone(), q.clone()),
            z10: block(z, q.clone(), c.clone()),
            z01: block(z, c.clone(), q.clone()),
            z00: block(z, c.clone(), c.clone()),
            a11: block(a, q.clone(), q.clone()),
            a10: block(a, q.clone(), c.clone()),
            a00: block(a, c.clone(), c.clone()),
            beta: alpha.rows_range(q).into_owned(),
            alpha0: alpha.rows_range(c).into_owned(),
        }
    }

    /// `(Z, A, α)` rebuilt from the blocks, with `A⁰¹ = (A¹⁰)ᵀ`.
    pub fn reassemble(&self) -> (DMatrix<f64>, DMatrix<f64>, DVector<f64>) {
        let q = self.z11.nrows();
        let z = assemble(q, &self.z11, &self.z10, &self.z01, &self.z00);
        let a = assemble(q, &self.a11, &self.a10, &self.a10.transpose(), &self.a00);
        let alpha = DVector::from_iterator(
            q + self.alpha0.len(),
            self.beta.iter().chain(self.alpha0.iter()).copied(),
        );
        (z, a, alpha)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivedMatrices {
    /// `½(σP₁Z − ZᵀP₁σᵀ)`, `d × d`.
    pub b_matrix: DMatrix<f64>,
    /// `½(Z¹¹σ + σᵀZ¹¹ᵀ)`, the quadratic part of `H_q`.
    pub d_matrix: DMatrix<f64>,
    /// `σᵀA¹¹σ + (i/2)(σᵀZ¹¹ᵀ − Z¹¹σ)`.
    pub g_matrix: DMatrix<C64>,
    /// `A⁰⁰`.
    pub c_matrix: DMatrix<f64>,
    /// `σᵀA¹⁰ − (i/2)Z¹⁰`.
    pub e_matrix: DMatrix<C64>,
}

fn complex_from_parts(re: &DMatrix<f64>, im: &DMatrix<f64>) -> DMatrix<C64> {
    re.zip_map(im, C64::new)
}

pub fn derive_blocks(params: &GeneratorParams) -> (BlockView, DerivedMatrices) {
    let blocks = BlockView::new(params);
    let sigma = params.space.sigma.matrix();
    let sq = params.space.sigma.quantum_block();
    let sqt = sq.transpose();
    let z = &params.z_matrix;

    let b_matrix = (sigma * z - z.transpose() * sigma.transpose()) * 0.5;
    let d_matrix = (&blocks.z11 * &sq + &sqt * blocks.z11.transpose()) * 0.5;
    let g_re = &sqt * &blocks.a11 * &sq;
    let g_im = (&sqt * blocks.z11.transpose() - &blocks.z11 * &sq) * 0.5;
    let e_re = &sqt * &blocks.a10;
    let e_im = &blocks.z10 * -0.5;
    let derived = DerivedMatrices {
        b_matrix,
        d_matrix,
        g_matrix: complex_from_parts(&g_re, &g_im),
        c_matrix: blocks.a00.clone(),
        e_matrix: complex_from_parts(&e_re, &e_im),
    };
    (blocks, derived)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PositivityForm {
    /// `A + iB`
    APlusIB,
    /// `A − iB`
    AMinusIB,
    /// `(G E; E† C)`
    GecBlock,
}

impl fmt::Display for PositivityForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::APlusIB => "A+iB",
            Self::AMinusIB => "A-iB",
            Self::GecBlock => "(G,E;E†,C)",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositivityViolation {
    pub form: PositivityForm,
    pub eigenvalue: f64,
    pub eigenvector: DVector<C64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositivityReport {
    pub tol: f64,
    pub eigenvalues_plus: DVector<f64>,
    pub eigenvalues_minus: DVector<f64>,
    pub eigenvalues_block: DVector<f64>,
    /// Both `A ± iB ⪰ −tol`.
    pub ab_valid: bool,
    /// `(G E; E† C) ⪰ −tol`.
    pub block_valid: bool,
    pub violation: Option<PositivityViolation>,
}

impl PositivityReport {
    pub fn is_valid(&self) -> bool {
        self.ab_valid && self.block_valid
    }

    pub fn forms_agree(&self) -> bool {
        self.ab_valid == self.block_valid
    }

    pub fn min_ab(&self) -> f64 {
        min_of(&self.eigenvalues_plus).min(min_of(&self.eigenvalues_minus))
    }

    pub fn min_block(&self) -> f64 {
        min_of(&self.eigenvalues_block)
    }
}

fn min_of(v: &DVector<f64>) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

/// The `(G E; E† C)` matrix assembled from derived blocks.
pub fn gec_matrix(derived: &DerivedMatrices) -> DMatrix<C64> {
    let q = derived.g_matrix.nrows();
    let s = derived.c_matrix.nrows();
    let mut m = DMatrix::zeros(q + s, q + s);
    m.view_mut((0, 0), (q, q)).copy_from(&derived.g_matrix);
    m.view_mut((0, q), (q, s)).copy_from(&derived.e_matrix);
    m.view_mut((q, 0), (s, q))
        .copy_from(&derived.e_matrix.adjoint());
    m.view_mut((q, q), (s, s))
        .copy_from(&to_complex(&derived.c_matrix));
    m
}

/// Positivity of a raw `(Z, A)` pair; `A` is not required to be PSD here.
pub fn check_positivity(
    space: &PhaseSpace,
    z_matrix: &DMatrix<f64>,
    a_matrix: &DMatrix<f64>,
    tol: f64,
) -> Result<PositivityReport> {
    let d = space.d();
    check_len("Z rows", d, z_matrix.nrows())?;
    check_len("A rows", d, a_matrix.nrows())?;
    let alpha = DVector::zeros(d);
    // Bypass the PSD check on A: this entry point classifies arbitrary draws.
    let exponent = LevyExponentParams {
        alpha,
        a_matrix: a_matrix.clone(),
        nu: LevyMeasure::empty(),
    };
    let params = GeneratorParams::new(space.clone(), z_matrix.clone(), exponent)?;
    Ok(validate_positivity(&params, tol))
}

pub fn validate_positivity(params: &GeneratorParams, tol: f64) -> PositivityReport {
    let (_, derived) = derive_blocks(params);
    let a = params.a_matrix();
    let b = &derived.b_matrix;
    let plus = complex_from_parts(a, b);
    let minus = complex_from_parts(a, &-b);
    let block = gec_matrix(&derived);

    let (ev_plus, vec_plus) = hermitian_eigen(&plus);
    let (ev_minus, vec_minus) = hermitian_eigen(&minus);
    let (ev_block, vec_block) = hermitian_eigen(&block);

    let ok = |ev: &DVector<f64>| min_of(ev) >= -tol;
    let ab_valid = ok(&ev_plus) && ok(&ev_minus);
    let block_valid = ok(&ev_block);

    let candidates = [
        (PositivityForm::APlusIB, &ev_plus, &vec_plus),
        (PositivityForm::AMinusIB, &ev_minus, &vec_minus),
        (PositivityForm::GecBlock, &ev_block, &vec_block),
    ];
    let violation = candidates
        .iter()
        .filter(|(_, ev, _)| !ev.is_empty() && ev[0] < -tol)
        .min_by(|x, y| x.1[0].total_cmp(&y.1[0]))
        .map(|(form, ev, vecs)| PositivityViolation {
            form: *form,
            eigenvalue: ev[0],
            eigenvector: vecs.column(0).into_owned(),
        });

    PositivityReport {
        tol,
        eigenvalues_plus: ev_plus,
        eigenvalues_minus: ev_minus,
        eigenvalues_block: ev_block,
        ab_valid,
        block_valid,
        violation,
    }
}

/// Coefficients of `𝓛_q¹`: dissipator matrix `G` and `H_q = βᵀσR + ½RᵀDR`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumDiffusiveTerm {
    pub g_matrix: DMatrix<C64>,
    pub beta: DVector<f64>,
    pub d_matrix: DMatrix<f64>,
}

/// Coefficients of `𝓚_cl¹`: drift `α⁰`, linear drift `Z⁰⁰`, diffusion `C`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalDiffusiveTerm {
    pub alpha0: DVector<f64>,
    pub z00: DMatrix<f64>,
    pub c_matrix: DMatrix<f64>,
}

/// A Lévy atom tagged with its position in the original measure.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpTerm {
    pub index: usize,
    pub atom: LevyAtom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorTermDecomposition {
    pub space: PhaseSpace,
    pub lq1: QuantumDiffusiveTerm,
    /// Atoms with a quantum component.
    pub lq2: Vec<JumpTerm>,
    pub kcl1: ClassicalDiffusiveTerm,
    /// Atoms with a classical component.
    pub kcl2: Vec<JumpTerm>,
    /// `Z⁰¹`, the coupling in `H_x = xᵀZ⁰¹σR`.
    pub kint1: DMatrix<f64>,
    /// `Im E = −½Z¹⁰`.
    pub kint2: DMatrix<f64>,
    /// `Re E = σᵀA¹⁰`.
    pub kint3: DMatrix<f64>,
    /// Joint atoms.
    pub kint4: Vec<JumpTerm>,
}

pub fn decompose_terms(params: &GeneratorParams) -> GeneratorTermDecomposition {
    let (blocks, derived) = derive_blocks(params);
    let space = &params.space;
    let mut lq2 = Vec::new();
    let mut kcl2 = Vec::new();
    let mut kint4 = Vec::new();
    for (index, atom) in params.nu().atoms.iter().enumerate() {
        let term = JumpTerm {
            index,
            atom: atom.clone(),
        };
        let quantum = space.has_quantum_part(&atom.eta);
        let classical = space.has_classical_part(&atom.eta);
        if quantum {
            lq2.push(term.clone());
        }
        if classical {
            kcl2.push(term.clone());
        }
        if quantum && classical {
            kint4.push(term);
        }
    }
    GeneratorTermDecomposition {
        space: space.clone(),
        lq1: QuantumDiffusiveTerm {
            g_matrix: derived.g_matrix.clone(),
            beta: blocks.beta.clone(),
            d_matrix: derived.d_matrix.clone(),
        },
        lq2,
        kcl1: ClassicalDiffusiveTerm {
            alpha0: blocks.alpha0.clone(),
            z00: blocks.z00.clone(),
            c_matrix: derived.c_matrix.clone(),
        },
        kcl2,
        kint1: blocks.z01.clone(),
        kint2: derived.e_matrix.map(|c| c.im),
        kint3: derived.e_matrix.map(|c| c.re),
        kint4,
    }
}

impl GeneratorTermDecomposition {
    /// Rebuild `(Z, A, α, ν)` from the term coefficients.
    ///
    /// `Z¹¹ = (D − Im G)σᵀ`, `A¹¹ = σ Re G σᵀ`, `A¹⁰ = σ Re E`,
    /// `Z¹⁰ = −2 Im E`.
    pub fn reassemble(&self) -> Result<GeneratorParams> {
        let sq = self.space.sigma.quantum_block();
        let sqt = sq.transpose();
        let g_re = self.lq1.g_matrix.map(|c| c.re);
        let g_im = self.lq1.g_matrix.map(|c| c.im);
        let blocks = BlockView {
            z11: (&self.lq1.d_matrix - &g_im) * &sqt,
            z10: &self.kint2 * -2.0,
            z01: self.kint1.clone(),
            z00: self.kcl1.z00.clone(),
            a11: &sq * g_re * &sqt,
            a10: &sq * &self.kint3,
            a00: self.kcl1.c_matrix.clone(),
            beta: self.lq1.beta.clone(),
            alpha0: self.kcl1.alpha0.clone(),
        };
        let (z, a, alpha) = blocks.reassemble();
        let mut jumps: Vec<&JumpTerm> = self
            .lq2
            .iter()
            .chain(self.kcl2.iter())
            .chain(self.kint4.iter())
            .collect();
        jumps.sort_by_key(|j| j.index);
        jumps.dedup_by_key(|j| j.index);
        let atoms = jumps.into_iter().map(|j| j.atom.clone()).collect();
        let a = crate::linalg::symmetrize(&a);
        let exponent = LevyExponentParams::new(alpha, a, LevyMeasure::new(atoms))?;
        GeneratorParams::new(self.space.clone(), z, exponent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GeneratorFlags {
    /// `Z⁰⁰ = 0` and `Z⁰¹ = 0`.
    pub translation_invariant: bool,
    /// `G = 0` and no atom with a quantum component.
    pub quantum_dissipationless: bool,
    /// `C = 0` and no atom with a classical component.
    pub classical_dissipationless: bool,
    /// `Z⁰¹ = 0`.
    pub autonomous_quantum_reduction: bool,
    /// `Z¹⁰ = 0`.
    pub autonomous_classical_reduction: bool,
}

fn is_zero(m: &DMatrix<f64>) -> bool {
    max_abs(m) <= CLASSIFY_TOL
}

pub fn classify(params: &GeneratorParams) -> GeneratorFlags {
    let (blocks, derived) = derive_blocks(params);
    let space = &params.space;
    let z01_zero = is_zero(&blocks.z01);
    GeneratorFlags {
        translation_invariant: is_zero(&blocks.z00) && z01_zero,
        quantum_dissipationless: max_abs_c(&derived.g_matrix) <= CLASSIFY_TOL
            && levy_marginal(params.nu(), Sector::Quantum, space).is_empty(),
        classical_dissipationless: is_zero(&derived.c_matrix)
            && levy_marginal(params.nu(), Sector::Classical, space).is_empty(),
        autonomous_quantum_reduction: z01_zero,
        autonomous_classical_reduction: is_zero(&blocks.z10),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum GeneratorTerm {
    Lq2,
    Kcl2,
    Kint2,
    Kint3,
    Kint4,
}

impl fmt::Display for GeneratorTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Lq2 => "L_q^2",
            Self::Kcl2 => "K_cl^2",
            Self::Kint2 => "K_int^2",
            Self::Kint3 => "K_int^3",
            Self::Kint4 => "K_int^4",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InformationFlowReport {
    pub flags: GeneratorFlags,
    /// `‖E‖_F`.
    pub e_norm: f64,
    /// Bound on `‖E‖_F` implied by the PSD block lemma, when it applies.
    pub e_bound: Option<f64>,
    /// Terms forced to vanish, sorted.
    pub forced_zero: Vec<GeneratorTerm>,
}

impl InformationFlowReport {
    /// Whether the parameters leave room for quantum → classical information
    /// transfer.
    pub fn information_flow_possible(&self) -> bool {
        self.e_bound.is_none()
    }
}

/// Applies the no-dissipation ⇒ no-information-flow lemma.
///
/// A zero diagonal block in a PSD matrix forces the adjacent off-diagonal
/// block to vanish. With slack `tol` on the eigenvalues, `2×2` principal
/// minors give `|E_ij|² ≤ (|G_ii| + tol)(C_jj + tol)`, which is the bound
/// reported here.
pub fn check_no_information_flow(params: &GeneratorParams, tol: f64) -> Result<InformationFlowReport> {
    let positivity = validate_positivity(params, tol);
    if !positivity.is_valid() {
        return Err(Error::InvalidParameter(
            "no-information-flow check needs parameters that pass the positivity check".into(),
        ));
    }
    let flags = classify(params);
    let (_, derived) = derive_blocks(params);
    let e_norm = derived.e_matrix.norm();
    let g_max = max_abs_c(&derived.g_matrix);
    let c_max = max_abs(&derived.c_matrix);
    let entries = (derived.e_matrix.nrows() * derived.e_matrix.ncols()) as f64;
    let lemma = |diag_zero: f64, other: f64| entries.sqrt() * ((diag_zero + tol) * (other + tol)).sqrt();

    let mut forced = Vec::new();
    let mut bound: Option<f64> = None;
    if flags.quantum_dissipationless {
        forced.extend([GeneratorTerm::Lq2, GeneratorTerm::Kint2, GeneratorTerm::Kint3, GeneratorTerm::Kint4]);
        bound = Some(lemma(g_max, c_max));
    }
    if flags.classical_dissipationless {
        forced.extend([GeneratorTerm::Kcl2, GeneratorTerm::Kint2, GeneratorTerm::Kint3, GeneratorTerm::Kint4]);
        let b = lemma(c_max, g_max);
        bound = Some(bound.map_or(b, |x| x.min(b)));
    }
    forced.sort();
    forced.dedup();
    if let Some(b) = bound {
        if e_norm > b {
            return Err(Error::Inconsistent(format!(
                "‖E‖_F = {e_norm:e} exceeds the PSD-lemma bound {b:e} on validated parameters"
            )));
        }
    }
    Ok(InformationFlowReport {
        flags,
        e_norm,
        e_bound: bound,
        forced_zero: forced,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: usize, cols: usize, xs: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, cols, xs)
    }

    fn damped_mode(gamma: f64, a_scale: f64) -> GeneratorParams {
        GeneratorParams::from_parts(
            1,
            0,
            DMatrix::identity(2, 2) * (-gamma / 2.0),
            DVector::zeros(2),
            DMatrix::identity(2, 2) * (a_scale * gamma / 2.0),
            vec![],
        )
        .unwrap()
    }

    fn trivial(n: usize, s: usize) -> GeneratorParams {
        let d = 2 * n + s;
        GeneratorParams::from_parts(n, s, DMatrix::zeros(d, d), DVector::zeros(d), DMatrix::zeros(d, d), vec![]).unwrap()
    }

    #[test]
    fn zero_params_have_zero_blocks() {
        let (_, der) = derive_blocks(&trivial(1, 1));
        assert_eq!(der.b_matrix, DMatrix::zeros(3, 3));
        assert_eq!(der.d_matrix, DMatrix::zeros(2, 2));
        assert!(max_abs_c(&der.g_matrix) == 0.0);
        assert_eq!(der.c_matrix, DMatrix::zeros(1, 1));
        assert!(max_abs_c(&der.e_matrix) == 0.0);
    }

    #[test]
    fn harmonic_rotation_d_matrix() {
        // Z¹¹ = ωσ: D = ½ω(σσ + σᵀσᵀ) = −ω·I, G imaginary part
        // ½(σᵀZᵀ − Zσ) = ½ω(σᵀσᵀ − σσ) = 0.
        let omega = 1.7;
        let sigma = m(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let p = GeneratorParams::from_parts(1, 0, &sigma * omega, DVector::zeros(2), DMatrix::zeros(2, 2), vec![]).unwrap();
        let (_, der) = derive_blocks(&p);
        assert!(max_abs(&(&der.d_matrix + DMatrix::identity(2, 2) * omega)) < 1e-15);
        assert!(max_abs_c(&der.g_matrix) < 1e-15);
        // Hamiltonian flow: B = ½(σZ − Zᵀσᵀ) = ½ω(σσ − σᵀσᵀ) = 0
        assert!(max_abs(&der.b_matrix) < 1e-15);
    }

    #[test]
    fn e_matrix_from_a10() {
        let (a, b) = (0.3, -0.8);
        let mut amat = DMatrix::identity(3, 3) * 5.0;
        amat[(0, 2)] = a;
        amat[(2, 0)] = a;
        amat[(1, 2)] = b;
        amat[(2, 1)] = b;
        let p = GeneratorParams::from_parts(1, 1, DMatrix::zeros(3, 3), DVector::zeros(3), amat, vec![]).unwrap();
        let (_, der) = derive_blocks(&p);
        assert_eq!(der.e_matrix[(0, 0)], C64::new(-b, 0.0));
        assert_eq!(der.e_matrix[(1, 0)], C64::new(a, 0.0));
    }

    #[test]
    fn trivial_params_are_positive() {
        let r = validate_positivity(&trivial(1, 1), DEFAULT_POSITIVITY_TOL);
        assert!(r.is_valid());
        assert!(r.violation.is_none());
    }

    #[test]
    fn damped_mode_is_positive() {
        // A + iB = (γ/2)(1 −i; i 1), eigenvalues {0, γ}.
        let gamma = 0.8;
        let p = damped_mode(gamma, 1.0);
        let (_, der) = derive_blocks(&p);
        let sigma = m(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!(max_abs(&(&der.b_matrix + &sigma * (gamma / 2.0))) < 1e-15);
        let r = validate_positivity(&p, DEFAULT_POSITIVITY_TOL);
        assert!(r.is_valid());
        assert!((r.eigenvalues_plus[0] - 0.0).abs() < 1e-14);
        assert!((r.eigenvalues_plus[1] - gamma).abs() < 1e-14);
        assert!(r.forms_agree());
    }

    #[test]
    fn dissipation_without_diffusion_is_rejected() {
        let gamma = 0.8;
        let p = damped_mode(gamma, 0.0);
        let r = validate_positivity(&p, DEFAULT_POSITIVITY_TOL);
        assert!(!r.is_valid());
        assert!(r.forms_agree());
        let v = r.violation.unwrap();
        assert!((v.eigenvalue + gamma / 2.0).abs() < 1e-14);
        assert_eq!(v.eigenvector.len(), 2);
    }

    #[test]
    fn decomposition_interaction_blocks() {
        let p = damped_mode(1.0, 1.0);
        let t = decompose_terms(&p);
        assert_eq!(t.kint2.len(), 0);
        let mut z = DMatrix::zeros(3, 3);
        z[(2, 0)] = 0.4; // Z⁰¹
        let p = GeneratorParams::from_parts(1, 1, z, DVector::zeros(3), DMatrix::identity(3, 3), vec![]).unwrap();
        let t = decompose_terms(&p);
        assert_eq!(t.kint2, DMatrix::zeros(2, 1));
        assert_eq!(t.kint3, DMatrix::zeros(2, 1));
        assert_eq!(t.kint1, m(1, 2, &[0.4, 0.0]));
        let flags = classify(&p);
        assert!(!flags.translation_invariant);
        assert!(!flags.autonomous_quantum_reduction);
        assert!(flags.autonomous_classical_reduction);
    }

    #[test]
    fn joint_atoms_appear_in_every_jump_term() {
        let atoms = vec![
            LevyAtom::new(DVector::from_column_slice(&[0.1, 0.2, 0.3]), 1.0),
            LevyAtom::new(DVector::from_column_slice(&[1.0, 0.0, -2.0]), 0.5),
        ];
        let p = GeneratorParams::from_parts(1, 1, DMatrix::zeros(3, 3), DVector::zeros(3), DMatrix::identity(3, 3), atoms).unwrap();
        let t = decompose_terms(&p);
        assert_eq!(t.lq2.len(), 2);
        assert_eq!(t.kcl2.len(), 2);
        assert_eq!(t.kint4.len(), 2);
    }

    #[test]
    fn atoms_partition_by_support() {
        let atoms = vec![
            LevyAtom::new(DVector::from_column_slice(&[0.5, 0.0, 0.0]), 1.0),
            LevyAtom::new(DVector::from_column_slice(&[0.0, 0.0, 2.0]), 2.0),
            LevyAtom::new(DVector::from_column_slice(&[0.0, 0.3, 0.3]), 3.0),
        ];
        let p = GeneratorParams::from_parts(1, 1, DMatrix::zeros(3, 3), DVector::zeros(3), DMatrix::identity(3, 3), atoms).unwrap();
        let t = decompose_terms(&p);
        let idx = |v: &Vec<JumpTerm>| v.iter().map(|j| j.index).collect::<Vec<_>>();
        assert_eq!(idx(&t.lq2), vec![0, 2]);
        assert_eq!(idx(&t.kcl2), vec![1, 2]);
        assert_eq!(idx(&t.kint4), vec![2]);
        assert_eq!(t.reassemble().unwrap().nu(), p.nu());
    }

    #[test]
    fn trivial_flags() {
        let f = classify(&trivial(1, 1));
        assert!(f.translation_invariant);
        assert!(f.quantum_dissipationless);
        assert!(f.classical_dissipationless);
        assert!(f.autonomous_quantum_reduction);
        assert!(f.autonomous_classical_reduction);
    }

    #[test]
    fn damped_mode_flags() {
        // G = (γ/2)I + (iγ/2)σ ≠ 0.
        let gamma = 1.0;
        let p = damped_mode(gamma, 1.0);
        let (_, der) = derive_blocks(&p);
        let expected = DMatrix::from_row_slice(
            2,
            2,
            &[C64::new(0.5, 0.0), C64::new(0.0, 0.5), C64::new(0.0, -0.5), C64::new(0.5, 0.0)],
        );
        assert!(max_abs_c(&(&der.g_matrix - expected)) < 1e-15);
        let f = classify(&p);
        assert!(!f.quantum_dissipationless);
        assert!(f.classical_dissipationless);
        assert!(f.translation_invariant);
    }

    #[test]
    fn hamiltonian_quantum_with_classical_noise_has_no_flow() {
        // G = 0 (Hamiltonian Z¹¹, A¹¹ = 0), E = 0, C ≻ 0.
        let sigma = m(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let mut z = DMatrix::zeros(3, 3);
        z.view_mut((0, 0), (2, 2)).copy_from(&(&sigma * 0.7));
        z[(2, 0)] = 0.2;
        let a = DMatrix::from_diagonal(&DVector::from_column_slice(&[0.0, 0.0, 1.5]));
        let p = GeneratorParams::from_parts(1, 1, z, DVector::zeros(3), a, vec![]).unwrap();
        let r = check_no_information_flow(&p, DEFAULT_POSITIVITY_TOL).unwrap();
        assert!(r.flags.quantum_dissipationless);
        assert!(!r.information_flow_possible());
        assert_eq!(
            r.forced_zero,
            vec![GeneratorTerm::Lq2, GeneratorTerm::Kint2, GeneratorTerm::Kint3, GeneratorTerm::Kint4]
        );
    }

    #[test]
    fn g_zero_with_coupling_is_rejected() {
        let sigma = m(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let mut z = DMatrix::zeros(3, 3);
        z.view_mut((0, 0), (2, 2)).copy_from(&sigma);
        z[(0, 2)] = 0.5; // Z¹⁰ ⇒ Im E ≠ 0
        let a = DMatrix::from_diagonal(&DVector::from_column_slice(&[0.0, 0.0, 3.0]));
        let p = GeneratorParams::from_parts(1, 1, z, DVector::zeros(3), a, vec![]).unwrap();
        assert!(!validate_positivity(&p, DEFAULT_POSITIVITY_TOL).is_valid());
        assert!(check_no_information_flow(&p, DEFAULT_POSITIVITY_TOL).is_err());
    }

    #[test]
    fn classical_dissipationless_quantum_jumps() {
        // C = 0, ν on Ξ₁, E = 0.
        let p = GeneratorParams::from_parts(
            1,
            1,
            {
                let mut z = DMatrix::zeros(3, 3);
                z[(0, 0)] = -0.5;
                z[(1, 1)] = -0.5;
                z
            },
            DVector::zeros(3),
            DMatrix::from_diagonal(&DVector::from_column_slice(&[0.5, 0.5, 0.0])),
            vec![LevyAtom::new(DVector::from_column_slice(&[0.4, -0.2, 0.0]), 1.0)],
        )
        .unwrap();
        let r = check_no_information_flow(&p, DEFAULT_POSITIVITY_TOL).unwrap();
        assert!(r.flags.classical_dissipationless);
        assert!(!r.flags.quantum_dissipationless);
        assert!(r.forced_zero.contains(&GeneratorTerm::Kcl2));
        assert!(r.forced_zero.contains(&GeneratorTerm::Kint4));
        assert!(r.e_norm == 0.0);
    }
}
