use crate::error::{invalid, Result};
use crate::linalg::{self, basis_vector, kron, ComplexMatrix, ComplexVector, C64};
use crate::mps::SiteTensor;
use crate::tolerance;

use super::model::GeneratorModel;

/// One ancilla-qubit interaction.
///
/// The step unitary is `(U_A (x) 1) (1 (x) U_after) X (1 (x) U_before)`
/// where `X` is either `exp(-i H(couplings))` or the protocol's fixed gate.
/// Absent local unitaries are the identity and are not optimized.
#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub couplings: Vec<f64>,
    pub ancilla: Option<ComplexMatrix>,
    pub qubit_after: Option<ComplexMatrix>,
    pub qubit_before: Option<ComplexMatrix>,
    /// Initial state of the qubit emitted at this step.
    pub qubit_init: ComplexVector,
}

/// A sequential-generation protocol: `n` steps, step `k` (index `k - 1`)
/// producing qubit `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Protocol {
    pub model: GeneratorModel,
    pub steps: Vec<Step>,
    pub phi_i: ComplexVector,
    pub fixed_gate: Option<ComplexMatrix>,
}

impl Protocol {
    /// Zero couplings, no local unitaries, every qubit and the ancilla
    /// starting in `|0>`.
    pub fn new(model: GeneratorModel, n: usize) -> Result<Self> {
        if n == 0 {
            return invalid("a protocol needs at least one step");
        }
        let step = Step {
            couplings: vec![0.0; model.param_count()],
            ancilla: None,
            qubit_after: None,
            qubit_before: None,
            qubit_init: basis_vector(2, 0),
        };
        Ok(Self { model, steps: vec![step; n], phi_i: basis_vector(model.d_ancilla, 0), fixed_gate: None })
    }

    pub fn n(&self) -> usize {
        self.steps.len()
    }

    pub fn d_ancilla(&self) -> usize {
        self.model.d_ancilla
    }

    /// Enable the local ancilla unitary at every step (identity where unset).
    pub fn with_ancilla_locals(mut self) -> Self {
        let d = self.d_ancilla();
        for s in &mut self.steps {
            s.ancilla.get_or_insert_with(|| linalg::identity(d));
        }
        self
    }

    /// Enable both local qubit unitaries at every step.
    pub fn with_qubit_locals(mut self) -> Self {
        for s in &mut self.steps {
            s.qubit_after.get_or_insert_with(|| linalg::identity(2));
            s.qubit_before.get_or_insert_with(|| linalg::identity(2));
        }
        self
    }

    pub fn with_all_locals(self) -> Self {
        self.with_ancilla_locals().with_qubit_locals()
    }

    /// Initial qubit states in emission order (`inits[0]` is qubit 1).
    pub fn with_qubit_inits(mut self, inits: &[ComplexVector]) -> Result<Self> {
        if inits.len() != self.n() {
            return invalid(format!("{} qubit inits for {} steps", inits.len(), self.n()));
        }
        for (s, v) in self.steps.iter_mut().zip(inits) {
            s.qubit_init = v.clone();
        }
        self.validate()?;
        Ok(self)
    }

    pub fn with_phi_i(mut self, phi_i: ComplexVector) -> Result<Self> {
        self.phi_i = phi_i;
        self.validate()?;
        Ok(self)
    }

    pub fn with_fixed_gate(mut self, gate: ComplexMatrix) -> Result<Self> {
        self.fixed_gate = Some(gate);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.d_ancilla();
        let dim = self.model.joint_dim();
        if self.steps.is_empty() {
            return invalid("a protocol needs at least one step");
        }
        check_state(&self.phi_i, d, "phi_i")?;
        if let Some(g) = &self.fixed_gate {
            check_unitary(g, dim, "fixed gate")?;
        }
        for (k, s) in self.steps.iter().enumerate() {
            if s.couplings.len() != self.model.param_count() {
                return invalid(format!(
                    "step {}: {} couplings, model {} expects {}",
                    k + 1,
                    s.couplings.len(),
                    self.model.name(),
                    self.model.param_count()
                ));
            }
            if s.couplings.iter().any(|h| !h.is_finite()) {
                return invalid(format!("step {}: non-finite coupling", k + 1));
            }
            check_state(&s.qubit_init, 2, "qubit init")?;
            if let Some(u) = &s.ancilla {
                check_unitary(u, d, "ancilla unitary")?;
            }
            if let Some(u) = &s.qubit_after {
                check_unitary(u, 2, "qubit unitary")?;
            }
            if let Some(u) = &s.qubit_before {
                check_unitary(u, 2, "qubit unitary")?;
            }
        }
        Ok(())
    }

    /// The entangling factor of step `k` (0-based).
    pub fn entangler(&self, k: usize) -> Result<ComplexMatrix> {
        match &self.fixed_gate {
            Some(g) => Ok(g.clone()),
            None => self.model.entangler(&self.steps[k].couplings),
        }
    }

    pub fn step_unitary(&self, k: usize) -> Result<ComplexMatrix> {
        build_step_unitary(&self.model, &self.steps[k], self.fixed_gate.as_ref())
    }

    /// The isometry `V^i[a, b] = sum_j U[(a, i), (b, j)] psi_init(j)` of step `k`.
    pub fn step_isometry(&self, k: usize) -> Result<SiteTensor> {
        Ok(isometry_from_unitary(&self.step_unitary(k)?, &self.steps[k].qubit_init, self.d_ancilla()))
    }
}

fn check_state(v: &ComplexVector, dim: usize, what: &str) -> Result<()> {
    if v.len() != dim {
        return invalid(format!("{what} has length {}, expected {dim}", v.len()));
    }
    if !v.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return invalid(format!("{what} has non-finite entries"));
    }
    if (v.norm() - 1.0).abs() > tolerance::STATE_NORM {
        return invalid(format!("{what} is not normalized (norm {})", v.norm()));
    }
    Ok(())
}

fn check_unitary(u: &ComplexMatrix, dim: usize, what: &str) -> Result<()> {
    if u.shape() != (dim, dim) {
        return invalid(format!("{what} has shape {:?}, expected {dim}x{dim}", u.shape()));
    }
    if !linalg::all_finite(u) || linalg::unitarity_error(u) > tolerance::ISOMETRY {
        return invalid(format!("{what} is not unitary"));
    }
    Ok(())
}

/// `(U_A (x) 1) (1 (x) U_after) X (1 (x) U_before)` for one step.
pub fn build_step_unitary(
    model: &GeneratorModel,
    step: &Step,
    fixed_gate: Option<&ComplexMatrix>,
) -> Result<ComplexMatrix> {
    let d = model.d_ancilla;
    let x = match fixed_gate {
        Some(g) => {
            if g.shape() != (2 * d, 2 * d) {
                return invalid(format!("fixed gate has shape {:?}, expected {}x{}", g.shape(), 2 * d, 2 * d));
            }
            g.clone()
        }
        None => model.entangler(&step.couplings)?,
    };
    Ok(dress(&x, step, d))
}

pub(crate) fn dress(x: &ComplexMatrix, step: &Step, d: usize) -> ComplexMatrix {
    let id2 = linalg::identity(2);
    let mut u = x.clone();
    if let Some(b) = &step.qubit_before {
        u *= kron(&linalg::identity(d), b);
    }
    if let Some(b) = &step.qubit_after {
        u = kron(&linalg::identity(d), b) * u;
    }
    if let Some(a) = &step.ancilla {
        u = kron(a, &id2) * u;
    }
    u
}

pub(crate) fn isometry_from_unitary(u: &ComplexMatrix, init: &ComplexVector, d: usize) -> SiteTensor {
    let mut mats = [ComplexMatrix::zeros(d, d), ComplexMatrix::zeros(d, d)];
    for (i, m) in mats.iter_mut().enumerate() {
        for a in 0..d {
            for b in 0..d {
                m[(a, b)] = (0..2).map(|j| u[(2 * a + i, 2 * b + j)] * init[j]).sum::<C64>();
            }
        }
    }
    let [a0, a1] = mats;
    SiteTensor::new(a0, a1).expect("step isometry from a finite unitary")
}
