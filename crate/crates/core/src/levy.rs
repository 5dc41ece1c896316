//! Finite atomic Lévy measures and the Lévy-Khintchine exponent
//!
//! `ψ(ξ) = iα·ξ − ½ξᵀAξ + Σ w (e^{iη·ξ} − 1 − i·1{|η|<1}·η·ξ)`.
//!
//! Atoms live on the full hybrid phase space so joint quantum-classical jumps
//! are representable. Each atom records whether it carries the compensating
//! term; by default this is the unit-ball indicator on the hybrid norm.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, Error, Result};
use crate::linalg::{all_finite, asymmetry, min_symmetric_eigenvalue};
use crate::phase_space::PhaseSpace;
use crate::C64;

/// Radius of the compensating indicator.
pub const CUTOFF_RADIUS: f64 = 1.0;

/// Atoms closer than this to the origin violate `ν({0}) = 0`.
pub const ORIGIN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LevyAtom {
    pub eta: DVector<f64>,
    pub weight: f64,
    /// Whether the `−i η·ξ` compensator is attached to this atom.
    pub compensated: bool,
}

impl LevyAtom {
    /// Atom with the standard unit-ball compensator convention.
    pub fn new(eta: DVector<f64>, weight: f64) -> Self {
        let compensated = eta.norm() < CUTOFF_RADIUS;
        Self {
            eta,
            weight,
            compensated,
        }
    }

    /// Atom whose compensator has been removed (to be balanced by a drift
    /// shift `α → α − w·η`).
    pub fn uncompensated(eta: DVector<f64>, weight: f64) -> Self {
        Self {
            eta,
            weight,
            compensated: false,
        }
    }

    fn exponent(&self, xi: &DVector<f64>) -> C64 {
        let phase = self.eta.dot(xi);
        let mut term = C64::from_polar(1.0, phase) - 1.0;
        if self.compensated {
            term -= C64::new(0.0, phase);
        }
        term * self.weight
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LevyMeasure {
    pub atoms: Vec<LevyAtom>,
}

impl LevyMeasure {
    pub fn new(atoms: Vec<LevyAtom>) -> Self {
        Self { atoms }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_rate(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    /// `Σ w·η` over compensated atoms: the drift removed by the compensator.
    pub fn compensator_drift(&self, d: usize) -> DVector<f64> {
        self.atoms
            .iter()
            .filter(|a| a.compensated)
            .fold(DVector::zeros(d), |acc, a| acc + &a.eta * a.weight)
    }

    /// `Σ w·η` over uncompensated atoms: their contribution to the mean drift.
    pub fn uncompensated_drift(&self, d: usize) -> DVector<f64> {
        self.atoms
            .iter()
            .filter(|a| !a.compensated)
            .fold(DVector::zeros(d), |acc, a| acc + &a.eta * a.weight)
    }

    /// `Σ w·ηηᵀ`, the jump contribution to the infinitesimal covariance.
    pub fn second_moment(&self, d: usize) -> DMatrix<f64> {
        self.atoms.iter().fold(DMatrix::zeros(d, d), |acc, a| {
            acc + &a.eta * a.eta.transpose() * a.weight
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevyExponentParams {
    pub alpha: DVector<f64>,
    pub a_matrix: DMatrix<f64>,
    pub nu: LevyMeasure,
}

impl LevyExponentParams {
    pub fn new(alpha: DVector<f64>, a_matrix: DMatrix<f64>, nu: LevyMeasure) -> Result<Self> {
        let d = alpha.len();
        check_len("diffusion matrix rows", d, a_matrix.nrows())?;
        check_len("diffusion matrix columns", d, a_matrix.ncols())?;
        if alpha.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("drift vector alpha"));
        }
        if !all_finite(&a_matrix) {
            return Err(Error::NonFinite("diffusion matrix A"));
        }
        if asymmetry(&a_matrix) > 1e-12 {
            return Err(Error::InvalidParameter(
                "diffusion matrix A must be symmetric".into(),
            ));
        }
        let min = min_symmetric_eigenvalue(&a_matrix);
        if min < -1e-10 {
            return Err(Error::NotPositive {
                what: "diffusion matrix A",
                min_eigenvalue: min,
            });
        }
        for atom in &nu.atoms {
            check_len("Lévy atom", d, atom.eta.len())?;
        }
        Ok(Self {
            alpha,
            a_matrix,
            nu,
        })
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    /// Unchecked evaluation of `ψ(ξ)`.
    pub fn psi(&self, xi: &DVector<f64>) -> C64 {
        let drift = C64::new(0.0, self.alpha.dot(xi));
        let gauss = -0.5 * xi.dot(&(&self.a_matrix * xi));
        let jumps: C64 = self.nu.atoms.iter().map(|a| a.exponent(xi)).sum();
        drift + gauss + jumps
    }

    /// Drift absorbing the mean of uncompensated jumps, `α + Σ_{uncomp} w·η`.
    pub fn effective_drift(&self) -> DVector<f64> {
        &self.alpha + self.nu.uncompensated_drift(self.dim())
    }

    /// `A + Σ w·ηηᵀ`.
    pub fn effective_diffusion(&self) -> DMatrix<f64> {
        &self.a_matrix + self.nu.second_moment(self.dim())
    }
}

pub fn psi_eval(params: &LevyExponentParams, xi: &DVector<f64>) -> Result<C64> {
    check_len("frequency", params.dim(), xi.len())?;
    if xi.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("frequency"));
    }
    Ok(params.psi(xi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sector {
    Quantum,
    Classical,
}

/// Pushforward of `nu` under a sector projection, dropping atoms that project
/// to the origin. Atoms keep their full `d`-dimensional embedding (the other
/// sector is zeroed) and their compensator flag, so the hybrid-norm
/// convention survives the projection.
pub fn levy_marginal(nu: &LevyMeasure, sector: Sector, space: &PhaseSpace) -> LevyMeasure {
    let proj = match sector {
        Sector::Quantum => &space.projections.p1,
        Sector::Classical => &space.projections.p0,
    };
    let atoms = nu
        .atoms
        .iter()
        .filter_map(|a| {
            let eta = proj * &a.eta;
            (eta.amax() > ORIGIN_TOL).then_some(LevyAtom {
                eta,
                weight: a.weight,
                compensated: a.compensated,
            })
        })
        .collect();
    LevyMeasure { atoms }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LevyViolationKind {
    AtomAtOrigin,
    NonPositiveWeight(f64),
    NonFinite,
    CompensatedOutsideUnitBall,
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevyViolation {
    pub index: usize,
    pub kind: LevyViolationKind,
}

impl fmt::Display for LevyViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            LevyViolationKind::AtomAtOrigin => {
                write!(f, "atom {}: ν({{0}})=0 broken", self.index)
            }
            LevyViolationKind::NonPositiveWeight(w) if *w < 0.0 => {
                write!(f, "atom {}: negative weight {w}", self.index)
            }
            LevyViolationKind::NonPositiveWeight(w) => {
                write!(f, "atom {}: non-positive weight {w}", self.index)
            }
            LevyViolationKind::NonFinite => write!(f, "atom {}: non-finite entry", self.index),
            LevyViolationKind::CompensatedOutsideUnitBall => write!(
                f,
                "atom {}: compensator attached outside the unit ball",
                self.index
            ),
            LevyViolationKind::DimensionMismatch { expected, got } => write!(
                f,
                "atom {}: dimension {got}, expected {expected}",
                self.index
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LevyReport {
    pub violations: Vec<LevyViolation>,
}

impl LevyReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_levy(nu: &LevyMeasure) -> LevyReport {
    let mut violations = Vec::new();
    let d = nu.atoms.first().map(|a| a.eta.len());
    for (index, atom) in nu.atoms.iter().enumerate() {
        let mut push = |kind| violations.push(LevyViolation { index, kind });
        if let Some(d) = d {
            if atom.eta.len() != d {
                push(LevyViolationKind::DimensionMismatch {
                    expected: d,
                    got: atom.eta.len(),
                });
            }
        }
        if !atom.weight.is_finite() || atom.eta.iter().any(|x| !x.is_finite()) {
            push(LevyViolationKind::NonFinite);
            continue;
        }
        if atom.eta.norm() <= ORIGIN_TOL {
            push(LevyViolationKind::AtomAtOrigin);
        }
        if atom.weight <= 0.0 {
            push(LevyViolationKind::NonPositiveWeight(atom.weight));
        }
        if atom.compensated && atom.eta.norm() >= CUTOFF_RADIUS {
            push(LevyViolationKind::CompensatedOutsideUnitBall);
        }
    }
    LevyReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_space::make_phase_space;
    use proptest::prelude::*;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn params(alpha: &[f64], a: DMatrix<f64>, atoms: Vec<LevyAtom>) -> LevyExponentParams {
        LevyExponentParams::new(v(alpha), a, LevyMeasure::new(atoms)).unwrap()
    }

    #[test]
    fn psi_vanishes_at_origin() {
        let p = params(
            &[0.3, -1.0],
            DMatrix::identity(2, 2),
            vec![LevyAtom::new(v(&[0.2, 0.1]), 2.0)],
        );
        assert_eq!(psi_eval(&p, &v(&[0.0, 0.0])).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn pure_drift() {
        let p = params(&[1.0, 0.0], DMatrix::zeros(2, 2), vec![]);
        assert_eq!(psi_eval(&p, &v(&[2.0, 0.0])).unwrap(), C64::new(0.0, 2.0));
    }

    #[test]
    fn single_large_atom_matches_scalar_transcription() {
        // |η| ≥ 1: no compensator.
        let eta = [1.2, -0.4];
        let w = 0.7;
        let alpha = [0.5, -0.25];
        let a = [[0.8, 0.1], [0.1, 0.3]];
        let p = params(
            &alpha,
            DMatrix::from_row_slice(2, 2, &[a[0][0], a[0][1], a[1][0], a[1][1]]),
            vec![LevyAtom::new(v(&eta), w)],
        );
        for xi in [[0.3, 0.9], [-1.7, 2.2], [4.0, -0.5]] {
            let dot_alpha = alpha[0] * xi[0] + alpha[1] * xi[1];
            let quad = xi[0] * (a[0][0] * xi[0] + a[0][1] * xi[1])
                + xi[1] * (a[1][0] * xi[0] + a[1][1] * xi[1]);
            let th = eta[0] * xi[0] + eta[1] * xi[1];
            let re = -0.5 * quad + w * (th.cos() - 1.0);
            let im = dot_alpha + w * th.sin();
            let got = psi_eval(&p, &v(&xi)).unwrap();
            assert!((got.re - re).abs() < 1e-14 && (got.im - im).abs() < 1e-14);
        }
    }

    #[test]
    fn psi_rejects_bad_input() {
        let p = params(&[0.0, 0.0], DMatrix::zeros(2, 2), vec![]);
        assert!(psi_eval(&p, &v(&[1.0])).is_err());
        assert!(psi_eval(&p, &v(&[f64::NAN, 0.0])).is_err());
    }

    #[test]
    fn exponent_params_reject_non_psd() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.5]);
        assert!(LevyExponentParams::new(v(&[0.0, 0.0]), a, LevyMeasure::empty()).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(LevyExponentParams::new(v(&[0.0, 0.0]), asym, LevyMeasure::empty()).is_err());
    }

    #[test]
    fn marginals() {
        let ps = make_phase_space(1, 1).unwrap();
        let classical_only = LevyMeasure::new(vec![LevyAtom::new(v(&[0.0, 0.0, 2.0]), 1.0)]);
        assert!(levy_marginal(&classical_only, Sector::Quantum, &ps).is_empty());
        assert!(levy_marginal(&LevyMeasure::empty(), Sector::Classical, &ps).is_empty());

        let mixed = LevyMeasure::new(vec![LevyAtom::new(v(&[0.3, 0.0, 0.5]), 2.5)]);
        let q = levy_marginal(&mixed, Sector::Quantum, &ps);
        let c = levy_marginal(&mixed, Sector::Classical, &ps);
        assert_eq!(q.atoms[0].eta, v(&[0.3, 0.0, 0.0]));
        assert_eq!(c.atoms[0].eta, v(&[0.0, 0.0, 0.5]));
        assert_eq!(q.atoms[0].weight, 2.5);
        assert_eq!(c.atoms[0].weight, 2.5);
    }

    #[test]
    fn validation_reports() {
        let origin = LevyMeasure::new(vec![LevyAtom::new(v(&[0.0, 0.0]), 1.0)]);
        let r = validate_levy(&origin);
        assert!(!r.is_valid());
        assert!(r.violations[0].to_string().contains("ν({0})=0 broken"));

        assert!(validate_levy(&LevyMeasure::empty()).is_valid());

        let neg = LevyMeasure::new(vec![LevyAtom::new(v(&[1.0, 0.0]), -1.0)]);
        let r = validate_levy(&neg);
        assert!(r.violations[0].to_string().contains("negative weight"));
    }

    fn random_params() -> impl Strategy<Value = LevyExponentParams> {
        (
            proptest::collection::vec(-2.0f64..2.0, 3),
            proptest::collection::vec(-1.0f64..1.0, 9),
            proptest::collection::vec(
                (proptest::collection::vec(-1.5f64..1.5, 3), 0.01f64..3.0),
                0..4,
            ),
        )
            .prop_map(|(alpha, x, atoms)| {
                let x = DMatrix::from_vec(3, 3, x);
                let a = &x * x.transpose();
                let atoms = atoms
                    .into_iter()
                    .map(|(eta, w)| LevyAtom::new(DVector::from_vec(eta), w))
                    .filter(|a| a.eta.norm() > 1e-6)
                    .collect();
                LevyExponentParams::new(DVector::from_vec(alpha), a, LevyMeasure::new(atoms))
                    .unwrap()
            })
    }

    fn xi3() -> impl Strategy<Value = DVector<f64>> {
        proptest::collection::vec(-5.0f64..5.0, 3).prop_map(DVector::from_vec)
    }

    proptest! {
        #[test]
        fn real_part_nonpositive(p in random_params(), xi in xi3()) {
            prop_assert!(p.psi(&xi).re <= 1e-12);
        }

        #[test]
        fn hermitian_exponent(p in random_params(), xi in xi3()) {
            let a = p.psi(&xi);
            let b = p.psi(&-&xi);
            prop_assert!((a - b.conj()).norm() < 1e-12);
        }

        #[test]
        fn continuity(p in random_params(), xi in xi3(), dir in xi3()) {
            let base = p.psi(&xi);
            let near = (p.psi(&(&xi + &dir * 1e-8)) - base).norm();
            let nearer = (p.psi(&(&xi + &dir * 1e-10)) - base).norm();
            prop_assert!(near < 1e-5);
            prop_assert!(nearer < 1e-7);
        }

        #[test]
        fn compensator_shift_invariance(p in random_params(), xi in xi3()) {
            for (i, atom) in p.nu.atoms.iter().enumerate() {
                if !atom.compensated {
                    continue;
                }
                let mut shifted = p.clone();
                shifted.nu.atoms[i] = LevyAtom::uncompensated(atom.eta.clone(), atom.weight);
                shifted.alpha -= &atom.eta * atom.weight;
                prop_assert!((shifted.psi(&xi) - p.psi(&xi)).norm() < 1e-12 * (1.0 + p.psi(&xi).norm()));
            }
        }
    }
}
