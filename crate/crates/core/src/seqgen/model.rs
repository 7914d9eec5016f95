use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{self, kron, pauli, sigma_minus, sigma_plus, ComplexMatrix, C64, ONE, ZERO};

/// Family of Hermitian ancilla-qubit couplings `H = sum_c h_c G_c`.
///
/// Operators act on `ancilla (x) qubit` with the ancilla as the most
/// significant index. Couplings are dimensionless (the interaction time is
/// absorbed), so the step entangler is `exp(-i H)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// `h1 (X X + Y Y)`
    Xy,
    /// `h1 (X X + Y Y) + h2 Z Z`
    Xxz,
    /// `h1 (s+ s+ + s- s-)`
    IonXy,
    /// `sum_{a,b} h_ab lambda_a (x) sigma_b` over a complete Hermitian
    /// basis of the ancilla (Pauli matrices for a qubit ancilla).
    FullPauli,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorModel {
    pub kind: ModelKind,
    pub d_ancilla: usize,
}

impl GeneratorModel {
    pub fn new(kind: ModelKind, d_ancilla: usize) -> Result<Self> {
        if d_ancilla < 2 {
            return invalid(format!("ancilla dimension must be >= 2, got {d_ancilla}"));
        }
        if kind != ModelKind::FullPauli && d_ancilla != 2 {
            return invalid(format!("{kind:?} couplings are defined for a qubit ancilla only"));
        }
        Ok(Self { kind, d_ancilla })
    }

    pub fn xy() -> Self {
        Self { kind: ModelKind::Xy, d_ancilla: 2 }
    }

    pub fn xxz() -> Self {
        Self { kind: ModelKind::Xxz, d_ancilla: 2 }
    }

    pub fn ion_xy() -> Self {
        Self { kind: ModelKind::IonXy, d_ancilla: 2 }
    }

    pub fn full_pauli(d_ancilla: usize) -> Result<Self> {
        Self::new(ModelKind::FullPauli, d_ancilla)
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ModelKind::Xy => "xy",
            ModelKind::Xxz => "xxz",
            ModelKind::IonXy => "ion_xy",
            ModelKind::FullPauli => "full_pauli",
        }
    }

    pub fn param_count(&self) -> usize {
        match self.kind {
            ModelKind::Xy | ModelKind::IonXy => 1,
            ModelKind::Xxz => 2,
            ModelKind::FullPauli => 4 * self.d_ancilla * self.d_ancilla,
        }
    }

    /// Dimension of the joint ancilla-qubit space.
    pub fn joint_dim(&self) -> usize {
        2 * self.d_ancilla
    }

    /// The generators `G_c`, one per coupling.
    pub fn generators(&self) -> Vec<ComplexMatrix> {
        let xy = || kron(&pauli(1), &pauli(1)) + kron(&pauli(2), &pauli(2));
        match self.kind {
            ModelKind::Xy => vec![xy()],
            ModelKind::Xxz => vec![xy(), kron(&pauli(3), &pauli(3))],
            ModelKind::IonXy => {
                let (sp, sm) = (sigma_plus(), sigma_minus());
                vec![kron(&sp, &sp) + kron(&sm, &sm)]
            }
            ModelKind::FullPauli => {
                let anc = linalg::hermitian_basis(self.d_ancilla);
                anc.iter().flat_map(|a| (0..4).map(move |b| kron(a, &pauli(b)))).collect()
            }
        }
    }

    pub fn hamiltonian(&self, params: &[f64]) -> Result<ComplexMatrix> {
        if params.len() != self.param_count() {
            return invalid(format!("{} expects {} couplings, got {}", self.name(), self.param_count(), params.len()));
        }
        if params.iter().any(|h| !h.is_finite()) {
            return invalid("couplings must be finite");
        }
        let dim = self.joint_dim();
        Ok(self
            .generators()
            .iter()
            .zip(params)
            .fold(ComplexMatrix::zeros(dim, dim), |acc, (g, &h)| acc + g * C64::from(h)))
    }

    pub fn entangler(&self, params: &[f64]) -> Result<ComplexMatrix> {
        linalg::expm_hermitian(&self.hamiltonian(params)?, 1.0)
    }

    /// Search interval for coupling `c` with all others fixed.
    ///
    /// `X X + Y Y` has spectrum `{-2, 0, 0, 2}`, so its rotation is exactly
    /// `pi`-periodic; `Z Z` repeats up to a global sign after `pi`. The ion
    /// coupling has spectrum `{-1, 0, 0, 1}` and needs the full `2 pi`.
    /// General Pauli products are searched over `[-pi, pi)`.
    pub fn search_interval(&self, _coupling: usize) -> (f64, f64) {
        match self.kind {
            ModelKind::Xy | ModelKind::Xxz => (0.0, PI),
            ModelKind::IonXy => (0.0, 2.0 * PI),
            ModelKind::FullPauli => (-PI, PI),
        }
    }
}

/// Controlled NOT on `ancilla (x) qubit`. With `ancilla_controls` the
/// ancilla is the control.
pub fn cnot(ancilla_controls: bool) -> ComplexMatrix {
    let mut m = ComplexMatrix::from_element(4, 4, ZERO);
    for a in 0..2 {
        for q in 0..2 {
            let (a2, q2) = if ancilla_controls { (a, q ^ a) } else { (a ^ q, q) };
            m[(2 * a2 + q2, 2 * a + q)] = ONE;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{basis_vector, hermiticity_error, unitarity_error, I};

    #[test]
    fn generators_are_hermitian() {
        for m in [GeneratorModel::xy(), GeneratorModel::xxz(), GeneratorModel::ion_xy()] {
            for g in m.generators() {
                assert!(hermiticity_error(&g) < 1e-15);
            }
        }
        let fp = GeneratorModel::full_pauli(3).unwrap();
        assert_eq!(fp.param_count(), 36);
        let h = fp.hamiltonian(&(0..36).map(|x| (x as f64).sin()).collect::<Vec<_>>()).unwrap();
        assert!(hermiticity_error(&h) < 1e-12);
    }

    #[test]
    fn ion_generator_couples_00_and_11() {
        let g = &GeneratorModel::ion_xy().generators()[0];
        let out = g * basis_vector(4, 3);
        assert_eq!(out, basis_vector(4, 0));
        assert!((g * basis_vector(4, 1)).norm() == 0.0);
    }

    #[test]
    fn xy_quarter_turn_hops() {
        let u = GeneratorModel::xy().entangler(&[std::f64::consts::FRAC_PI_4]).unwrap();
        let out = &u * basis_vector(4, 1);
        assert!((out[2] + I).norm() < 1e-12);
        assert!(unitarity_error(&u) < 1e-12);
    }

    #[test]
    fn coupling_count_checked() {
        assert!(GeneratorModel::xy().hamiltonian(&[1.0, 2.0]).is_err());
        assert!(GeneratorModel::xy().hamiltonian(&[f64::NAN]).is_err());
        assert!(GeneratorModel::new(ModelKind::Xy, 3).is_err());
    }

    #[test]
    fn cnot_conventions() {
        let c = cnot(true);
        // |1_A 0_B> -> |1_A 1_B>
        assert_eq!(&c * basis_vector(4, 2), basis_vector(4, 3));
        assert_eq!(&c * basis_vector(4, 1), basis_vector(4, 1));
        let c = cnot(false);
        // |0_A 1_B> -> |1_A 1_B>
        assert_eq!(&c * basis_vector(4, 1), basis_vector(4, 3));
        assert!(unitarity_error(&c) == 0.0);
    }
}
