use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{basis_vector, ComplexMatrix, ComplexVector, C64};
use crate::mps::{Mps, SiteTensor};
use crate::tolerance;

use super::protocol::Protocol;

/// The joint ancilla-qubit state produced by a protocol, before the ancilla
/// is projected: amplitude `(V[n]^{i_n} ... V[1]^{i_1} phi_i)_b` for final
/// ancilla level `b`.
#[derive(Clone, Debug)]
pub struct GeneratedState {
    sites: Vec<SiteTensor>,
    phi_i: ComplexVector,
}

impl GeneratedState {
    pub fn from_isometries(sites: Vec<SiteTensor>, phi_i: ComplexVector) -> Result<Self> {
        if sites.is_empty() {
            return invalid("a generated state needs at least one site");
        }
        let d = phi_i.len();
        if (phi_i.norm() - 1.0).abs() > tolerance::STATE_NORM {
            return invalid("initial ancilla state is not normalized");
        }
        for (k, s) in sites.iter().enumerate() {
            if s.left_dim() != d || s.right_dim() != d {
                return invalid(format!(
                    "site {} is {}x{}, ancilla dimension is {d}",
                    k + 1,
                    s.left_dim(),
                    s.right_dim()
                ));
            }
            if s.isometry_error() > tolerance::ISOMETRY {
                return invalid(format!("site {} violates the isometry condition", k + 1));
            }
        }
        Ok(Self { sites, phi_i })
    }

    pub(crate) fn from_parts(sites: Vec<SiteTensor>, phi_i: ComplexVector) -> Self {
        Self { sites, phi_i }
    }

    pub fn n(&self) -> usize {
        self.sites.len()
    }

    pub fn d_ancilla(&self) -> usize {
        self.phi_i.len()
    }

    pub fn sites(&self) -> &[SiteTensor] {
        &self.sites
    }

    pub fn phi_i(&self) -> &ComplexVector {
        &self.phi_i
    }

    /// Largest isometry residual over all steps.
    pub fn isometry_residual(&self) -> f64 {
        self.sites.iter().map(SiteTensor::isometry_error).fold(0.0, f64::max)
    }

    /// The qubit state left after projecting the ancilla onto `phi_f`.
    pub fn project(&self, phi_f: &ComplexVector) -> Result<Mps> {
        Mps::new(self.sites.clone(), self.phi_i.clone(), phi_f.clone())
    }

    /// Dense joint vector, index `b * 2^n + x` with `x` in the MPS bit order.
    pub fn to_dense(&self) -> Result<Vec<C64>> {
        let d = self.d_ancilla();
        let mut out = Vec::with_capacity(d << self.n());
        for b in 0..d {
            out.extend(self.project(&basis_vector(d, b))?.to_state_vector()?);
        }
        Ok(out)
    }

    /// `v_b = sum_x conj(target(x)) generated_b(x)`, the ancilla vector left
    /// after contracting every qubit against `target`.
    pub fn ancilla_overlap(&self, target: &Mps) -> Result<ComplexVector> {
        if target.n() != self.n() {
            return invalid(format!("target has {} qubits, protocol {}", target.n(), self.n()));
        }
        let mut low = lowest_env(target, &self.phi_i);
        for (k, v) in self.sites.iter().enumerate() {
            low = extend_low(&low, target.site(k + 1), v);
        }
        Ok(low.transpose() * target.phi_f())
    }

    pub fn fidelity(&self, target: &Mps) -> Result<FidelityReport> {
        let nrm = target.norm();
        if !(nrm > 0.0) {
            return Err(Error::DegenerateState("target has zero norm".into()));
        }
        let v = self.ancilla_overlap(target)? / C64::from(nrm);
        Ok(FidelityReport::from_overlap(&v))
    }
}

/// Outcome of evaluating or optimizing a protocol against a target.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FidelityReport {
    /// `|<generated|target>|` with the final ancilla state optimized.
    pub fidelity: f64,
    /// `2 (1 - fidelity)`
    pub cost: f64,
    /// The maximizing final ancilla state.
    pub phi_f_optimal: Vec<C64>,
    /// Cost before optimization and after every step update.
    pub history: Vec<f64>,
    pub converged: bool,
    pub restarts_used: usize,
    /// Full sweeps of the returned run.
    pub sweeps: usize,
}

impl FidelityReport {
    fn from_overlap(v: &ComplexVector) -> Self {
        let f = v.norm();
        let phi = if f > 0.0 { v / C64::from(f) } else { basis_vector(v.len(), 0) };
        Self {
            fidelity: f,
            cost: cost_from_fidelity(f),
            phi_f_optimal: phi.iter().copied().collect(),
            history: vec![],
            converged: true,
            restarts_used: 0,
            sweeps: 0,
        }
    }

    pub fn one_minus_f(&self) -> f64 {
        1.0 - self.fidelity
    }
}

pub(crate) fn cost_from_fidelity(f: f64) -> f64 {
    2.0 * (1.0 - f)
}

pub fn simulate(p: &Protocol) -> Result<GeneratedState> {
    p.validate()?;
    let sites = (0..p.n()).map(|k| p.step_isometry(k)).collect::<Result<Vec<_>>>()?;
    Ok(GeneratedState::from_parts(sites, p.phi_i.clone()))
}

pub fn fidelity(p: &Protocol, target: &Mps) -> Result<FidelityReport> {
    if target.n() != p.n() {
        return invalid(format!("target has {} qubits, protocol {}", target.n(), p.n()));
    }
    simulate(p)?.fidelity(target)
}

/// `conj(target phi_i) phi_i^T`: rows target bond, columns ancilla.
pub(crate) fn lowest_env(target: &Mps, phi_i: &ComplexVector) -> ComplexMatrix {
    target.phi_i().conjugate() * phi_i.transpose()
}

pub(crate) fn extend_low(low: &ComplexMatrix, a: &SiteTensor, v: &SiteTensor) -> ComplexMatrix {
    a.mat(0).conjugate() * low * v.mat(0).transpose() + a.mat(1).conjugate() * low * v.mat(1).transpose()
}

/// Environments of the sites above the last one, one matrix per open final
/// ancilla level `b`: `up[b][a, c] = target_phi_f[a] delta(b, c)`.
pub(crate) fn highest_env(target: &Mps, d: usize) -> Vec<ComplexMatrix> {
    let pf = target.phi_f();
    (0..d)
        .map(|b| {
            let mut m = ComplexMatrix::zeros(pf.len(), d);
            m.set_column(b, pf);
            m
        })
        .collect()
}

pub(crate) fn extend_up(up: &[ComplexMatrix], a: &SiteTensor, v: &SiteTensor) -> Vec<ComplexMatrix> {
    up.iter().map(|u| a.mat(0).adjoint() * u * v.mat(0) + a.mat(1).adjoint() * u * v.mat(1)).collect()
}
