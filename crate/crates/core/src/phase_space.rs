//! Hybrid phase space `Ξ = Ξ₁ ⊕ Ξ₀`, the embedded symplectic form and the
//! Weyl composition law.
//!
//! Coordinates are ordered `(q₁..qₙ, p₁..pₙ, x₁..x_s)`. The symplectic form
//! lives on the first `2n` coordinates and vanishes on the classical sector,
//! so the same `d × d` matrix serves hybrid, purely quantum and purely
//! classical spaces.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, Error, Result};
use crate::C64;

/// Threshold under which a sector component counts as zero.
pub const SECTOR_ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PhaseSpaceDim {
    n: usize,
    s: usize,
}

impl PhaseSpaceDim {
    pub fn new(n: usize, s: usize) -> Result<Self> {
        if n + s == 0 {
            return Err(Error::InvalidDimensions(
                "need at least one quantum mode or one classical coordinate".into(),
            ));
        }
        Ok(Self { n, s })
    }

    /// Number of quantum modes.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Classical dimension.
    pub fn s(&self) -> usize {
        self.s
    }

    /// Total dimension `2n + s`.
    pub fn d(&self) -> usize {
        2 * self.n + self.s
    }

    pub fn quantum_len(&self) -> usize {
        2 * self.n
    }

    pub fn quantum_range(&self) -> Range<usize> {
        0..2 * self.n
    }

    pub fn classical_range(&self) -> Range<usize> {
        2 * self.n..self.d()
    }
}

/// The CCR form `σ` embedded as `P₁σP₁` on the full phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticForm {
    matrix: DMatrix<f64>,
    n: usize,
}

impl SymplecticForm {
    pub fn new(dim: PhaseSpaceDim) -> Self {
        let n = dim.n();
        let mut matrix = DMatrix::zeros(dim.d(), dim.d());
        for i in 0..n {
            matrix[(i, i + n)] = 1.0;
            matrix[(i + n, i)] = -1.0;
        }
        Self { matrix, n }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// The quantum `2n × 2n` block.
    pub fn quantum_block(&self) -> DMatrix<f64> {
        let q = 2 * self.n;
        self.matrix.view((0, 0), (q, q)).into_owned()
    }

    /// Number of quantum modes the form acts on.
    pub fn modes(&self) -> usize {
        self.n
    }

    /// `xᵀσy = Σᵢ (xᵢ y_{i+n} − x_{i+n} yᵢ)`.
    pub fn form(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        let n = self.n;
        (0..n).map(|i| x[i] * y[i + n] - x[i + n] * y[i]).sum()
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectorProjections {
    pub p1: DMatrix<f64>,
    pub p0: DMatrix<f64>,
}

impl SectorProjections {
    pub fn new(dim: PhaseSpaceDim) -> Self {
        let d = dim.d();
        let p1 = DMatrix::from_fn(d, d, |i, j| {
            if i == j && i < dim.quantum_len() {
                1.0
            } else {
                0.0
            }
        });
        let p0 = DMatrix::identity(d, d) - &p1;
        Self { p1, p0 }
    }
}

/// Dimension record, symplectic form and sector projectors bundled together.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpace {
    pub dim: PhaseSpaceDim,
    pub sigma: SymplecticForm,
    pub projections: SectorProjections,
}

impl PhaseSpace {
    pub fn d(&self) -> usize {
        self.dim.d()
    }

    /// Quantum component `P₁ξ` as a `2n`-vector.
    pub fn quantum_part(&self, xi: &DVector<f64>) -> DVector<f64> {
        xi.rows_range(self.dim.quantum_range()).into_owned()
    }

    /// Classical component `P₀ξ` as an `s`-vector.
    pub fn classical_part(&self, xi: &DVector<f64>) -> DVector<f64> {
        xi.rows_range(self.dim.classical_range()).into_owned()
    }

    /// Assemble `(ζ, k)` into a phase-space vector.
    pub fn join(&self, zeta: &DVector<f64>, k: &DVector<f64>) -> Result<DVector<f64>> {
        check_len("quantum component", self.dim.quantum_len(), zeta.len())?;
        check_len("classical component", self.dim.s(), k.len())?;
        Ok(DVector::from_iterator(
            self.d(),
            zeta.iter().chain(k.iter()).copied(),
        ))
    }

    /// Embed a classical `s`-vector as `(0, k)`.
    pub fn embed_classical(&self, k: &DVector<f64>) -> Result<DVector<f64>> {
        self.join(&DVector::zeros(self.dim.quantum_len()), k)
    }

    pub fn has_quantum_part(&self, xi: &DVector<f64>) -> bool {
        xi.rows_range(self.dim.quantum_range())
            .iter()
            .any(|x| x.abs() > SECTOR_ZERO_TOL)
    }

    pub fn has_classical_part(&self, xi: &DVector<f64>) -> bool {
        xi.rows_range(self.dim.classical_range())
            .iter()
            .any(|x| x.abs() > SECTOR_ZERO_TOL)
    }
}

pub fn make_phase_space(n: usize, s: usize) -> Result<PhaseSpace> {
    let dim = PhaseSpaceDim::new(n, s)?;
    Ok(PhaseSpace {
        dim,
        sigma: SymplecticForm::new(dim),
        projections: SectorProjections::new(dim),
    })
}

/// `amplitude · W(xi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeylDescriptor {
    pub xi: DVector<f64>,
    pub amplitude: C64,
}

impl WeylDescriptor {
    pub fn new(xi: DVector<f64>, amplitude: C64) -> Self {
        Self { xi, amplitude }
    }

    pub fn unit(xi: DVector<f64>) -> Self {
        Self::new(xi, C64::new(1.0, 0.0))
    }

    pub fn identity(d: usize) -> Self {
        Self::unit(DVector::zeros(d))
    }
}

/// Phase factor picked up by the product `W(a)W(b) = W(a+b)·exp(−(i/2)aᵀσb)`.
pub fn composition_phase(a: &DVector<f64>, b: &DVector<f64>, sigma: &SymplecticForm) -> C64 {
    C64::from_polar(1.0, -0.5 * sigma.form(a, b))
}

/// Product of two Weyl descriptors.
pub fn weyl_compose(
    a: &WeylDescriptor,
    b: &WeylDescriptor,
    sigma: &SymplecticForm,
) -> Result<WeylDescriptor> {
    check_len("left Weyl frequency", sigma.dim(), a.xi.len())?;
    check_len("right Weyl frequency", sigma.dim(), b.xi.len())?;
    let phase = composition_phase(&a.xi, &b.xi, sigma);
    Ok(WeylDescriptor {
        xi: &a.xi + &b.xi,
        amplitude: a.amplitude * b.amplitude * phase,
    })
}

/// `W₁(σζ)† · a · W₁(σζ)` for a quantum-sector `zeta` (given as a full
/// `d`-vector with vanishing classical part).
///
/// The frequency is unchanged and the amplitude picks up `exp(i ζ·P₁ξ)`.
pub fn weyl_adjoint_conjugate(
    zeta: &DVector<f64>,
    a: &WeylDescriptor,
    sigma: &SymplecticForm,
) -> Result<WeylDescriptor> {
    let d = sigma.dim();
    check_len("conjugating vector", d, zeta.len())?;
    check_len("Weyl frequency", d, a.xi.len())?;
    let q = 2 * sigma.modes();
    if zeta.rows_range(q..d).iter().any(|x| *x != 0.0) {
        return Err(Error::InvalidParameter(
            "conjugating vector must lie in the quantum sector".into(),
        ));
    }
    // ζ·P₁ξ; the exact value of the double composition phase.
    let theta: f64 = zeta
        .rows_range(0..q)
        .iter()
        .zip(a.xi.rows_range(0..q).iter())
        .map(|(z, x)| z * x)
        .sum();
    Ok(WeylDescriptor {
        xi: a.xi.clone(),
        amplitude: a.amplitude * C64::from_polar(1.0, theta),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn one_mode_sigma() {
        let ps = make_phase_space(1, 0).unwrap();
        assert_eq!(ps.d(), 2);
        assert_eq!(
            ps.sigma.matrix(),
            &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])
        );
    }

    #[test]
    fn classical_sigma_is_zero() {
        let ps = make_phase_space(0, 2).unwrap();
        assert_eq!(ps.d(), 2);
        assert_eq!(ps.sigma.matrix(), &DMatrix::zeros(2, 2));
    }

    #[test]
    fn hybrid_embedding() {
        let ps = make_phase_space(1, 1).unwrap();
        let s = ps.sigma.matrix();
        for i in 0..3 {
            for j in 0..3 {
                let expected = match (i, j) {
                    (0, 1) => 1.0,
                    (1, 0) => -1.0,
                    _ => 0.0,
                };
                assert_eq!(s[(i, j)], expected);
            }
        }
    }

    #[test]
    fn rejects_empty_space() {
        assert!(make_phase_space(0, 0).is_err());
    }

    #[test]
    fn projections_partition_identity() {
        let ps = make_phase_space(2, 3).unwrap();
        let p = &ps.projections;
        assert_eq!(&p.p1 + &p.p0, DMatrix::identity(7, 7));
        assert_eq!(&p.p1 * &p.p0, DMatrix::zeros(7, 7));
        assert_eq!(p.p1.trace(), 4.0);
        assert_eq!(p.p0.trace(), 3.0);
        let s = ps.sigma.matrix();
        assert_eq!(s * s, -&p.p1);
    }

    #[test]
    fn compose_identity_element() {
        let ps = make_phase_space(1, 1).unwrap();
        let a = WeylDescriptor::unit(v(&[0.3, -1.1, 2.0]));
        let e = WeylDescriptor::identity(3);
        assert_eq!(weyl_compose(&a, &e, &ps.sigma).unwrap(), a);
    }

    #[test]
    fn compose_one_mode_phase() {
        let ps = make_phase_space(1, 0).unwrap();
        let a = WeylDescriptor::unit(v(&[1.0, 0.0]));
        let b = WeylDescriptor::unit(v(&[0.0, 1.0]));
        let c = weyl_compose(&a, &b, &ps.sigma).unwrap();
        assert_eq!(c.xi, v(&[1.0, 1.0]));
        let expected = C64::from_polar(1.0, -0.5);
        assert!((c.amplitude - expected).norm() < 1e-15);
    }

    #[test]
    fn compose_classical_is_transparent() {
        let ps = make_phase_space(1, 1).unwrap();
        let a = WeylDescriptor::unit(v(&[0.0, 0.0, 0.7]));
        let amp = C64::new(0.2, -0.4);
        let b = WeylDescriptor::new(v(&[1.5, -2.5, 0.3]), amp);
        let c = weyl_compose(&a, &b, &ps.sigma).unwrap();
        assert_eq!(c.xi, v(&[1.5, -2.5, 1.0]));
        assert_eq!(c.amplitude, amp);
    }

    #[test]
    fn compose_dimension_mismatch() {
        let ps = make_phase_space(1, 0).unwrap();
        let a = WeylDescriptor::unit(v(&[1.0, 0.0, 0.0]));
        let b = WeylDescriptor::unit(v(&[0.0, 1.0]));
        assert!(weyl_compose(&a, &b, &ps.sigma).is_err());
    }

    #[test]
    fn conjugation_trivial_cases() {
        let ps = make_phase_space(1, 1).unwrap();
        let a = WeylDescriptor::new(v(&[0.4, 0.9, -1.0]), C64::new(0.5, 0.1));
        let zero = DVector::zeros(3);
        assert_eq!(weyl_adjoint_conjugate(&zero, &a, &ps.sigma).unwrap(), a);
        let classical = WeylDescriptor::new(v(&[0.0, 0.0, 2.0]), C64::new(0.5, 0.1));
        let zeta = v(&[1.0, -0.3, 0.0]);
        assert_eq!(
            weyl_adjoint_conjugate(&zeta, &classical, &ps.sigma).unwrap(),
            classical
        );
        assert!(weyl_adjoint_conjugate(&v(&[1.0, 0.0, 1.0]), &a, &ps.sigma).is_err());
    }

    // Oracle: W(−σζ)·W(ξ)·W(σζ) assembled with the explicit composition law.
    fn conjugate_by_composition(
        zeta: &DVector<f64>,
        a: &WeylDescriptor,
        ps: &PhaseSpace,
    ) -> WeylDescriptor {
        let s = ps.sigma.matrix();
        let shift = s * zeta;
        let left = WeylDescriptor::unit(-&shift);
        let right = WeylDescriptor::unit(shift);
        let tmp = weyl_compose(&left, a, &ps.sigma).unwrap();
        weyl_compose(&tmp, &right, &ps.sigma).unwrap()
    }

    #[test]
    fn conjugation_one_mode_matches_double_composition() {
        let ps = make_phase_space(1, 0).unwrap();
        let zeta = v(&[1.0, 0.0]);
        let a = WeylDescriptor::unit(v(&[1.0, 0.0]));
        let got = weyl_adjoint_conjugate(&zeta, &a, &ps.sigma).unwrap();
        let oracle = conjugate_by_composition(&zeta, &a, &ps);
        assert_eq!(got.xi, oracle.xi);
        assert!((got.amplitude - oracle.amplitude).norm() < 1e-14);
        // θ = ζ·ξ = 1
        assert!((got.amplitude - C64::from_polar(1.0, 1.0)).norm() < 1e-14);
    }

    fn vec_strategy(d: usize) -> impl Strategy<Value = DVector<f64>> {
        proptest::collection::vec(-3.0f64..3.0, d).prop_map(DVector::from_vec)
    }

    proptest! {
        #[test]
        fn compose_associative(a in vec_strategy(5), b in vec_strategy(5), c in vec_strategy(5)) {
            let ps = make_phase_space(2, 1).unwrap();
            let (a, b, c) = (WeylDescriptor::unit(a), WeylDescriptor::unit(b), WeylDescriptor::unit(c));
            let left = weyl_compose(&weyl_compose(&a, &b, &ps.sigma).unwrap(), &c, &ps.sigma).unwrap();
            let right = weyl_compose(&a, &weyl_compose(&b, &c, &ps.sigma).unwrap(), &ps.sigma).unwrap();
            prop_assert!((&left.xi - &right.xi).amax() < 1e-12);
            prop_assert!((left.amplitude - right.amplitude).norm() < 1e-12);
        }

        #[test]
        fn phase_antisymmetry(a in vec_strategy(5), b in vec_strategy(5)) {
            let ps = make_phase_space(2, 1).unwrap();
            let p = composition_phase(&a, &b, &ps.sigma) * composition_phase(&b, &a, &ps.sigma);
            prop_assert!((p - C64::new(1.0, 0.0)).norm() < 1e-15);
        }

        #[test]
        fn classical_operand_gives_unit_phase(a in vec_strategy(5), k in -3.0f64..3.0) {
            let ps = make_phase_space(2, 1).unwrap();
            let b = v(&[0.0, 0.0, 0.0, 0.0, k]);
            prop_assert_eq!(composition_phase(&a, &b, &ps.sigma), C64::new(1.0, 0.0));
            prop_assert_eq!(composition_phase(&b, &a, &ps.sigma), C64::new(1.0, 0.0));
        }

        #[test]
        fn conjugation_matches_oracle(z in vec_strategy(4), xi in vec_strategy(5)) {
            let ps = make_phase_space(2, 1).unwrap();
            let zeta = v(&[z[0], z[1], z[2], z[3], 0.0]);
            let a = WeylDescriptor::unit(xi);
            let got = weyl_adjoint_conjugate(&zeta, &a, &ps.sigma).unwrap();
            let oracle = conjugate_by_composition(&zeta, &a, &ps);
            prop_assert!((got.amplitude - oracle.amplitude).norm() < 1e-10);
            prop_assert!((&got.xi - &oracle.xi).amax() < 1e-12);
        }
    }
}
