//! Reduction of the bond dimension of an MPS.
//!
//! Two schemes are provided:
//!
//! * [`compress_truncation`]: a single sweep of per-site SVD truncations.
//! * [`compress_variational`]: single-site sweeping that maximizes the
//!   overlap with the target under a unit-norm constraint.
//!
//! Both report the squared distance `|psi - psi'|^2 = 2 (1 - |<psi|psi'>|)`
//! between the normalized target and the normalized approximation, with the
//! global phase of the approximation aligned to the target.

use serde::{Deserialize, Serialize};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{InitStrategy, OptimizationConfig};
use crate::error::{invalid, Result};
use crate::linalg::{self, ComplexMatrix, ComplexVector, C64, ONE};
use crate::mps::{self, Gauge, Mps, SiteTensor};
use crate::states;
use crate::tolerance;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Truncation,
    Variational,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Truncation => "truncation",
            Method::Variational => "variational",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompressionReport {
    pub method: Method,
    pub target_bond: usize,
    /// `|psi - psi'|^2` between normalized, phase-aligned states.
    pub error: f64,
    /// `|<psi|psi'>|`
    pub fidelity: f64,
    /// Error of the starting point followed by the error after every
    /// half-sweep (variational only).
    pub sweep_history: Vec<f64>,
    /// Full sweeps performed.
    pub sweeps: usize,
    pub converged: bool,
}

fn prepare_target(target: &Mps) -> Result<Mps> {
    match target.gauge() {
        Gauge::LeftCanonical => target.normalize(),
        Gauge::None => target.canonicalize_left()?.normalize(),
    }
}

/// Multiply `approx` by a phase so that `<target|approx>` is real and
/// non-negative.
fn align_phase(target: &Mps, approx: Mps) -> Result<(Mps, f64)> {
    let ov = mps::overlap(target, &approx)?;
    let f = ov.norm();
    if f == 0.0 {
        return Ok((approx, 0.0));
    }
    Ok((approx.scaled(ov.conj() / f), f))
}

fn error_from_fidelity(f: f64) -> f64 {
    (2.0 * (1.0 - f)).max(0.0)
}

pub fn compress_truncation(target: &Mps, d_prime: usize) -> Result<(Mps, CompressionReport)> {
    if d_prime == 0 {
        return invalid("target bond dimension must be at least 1");
    }
    let target = prepare_target(target)?;
    let approx = target.truncate_per_matrix(d_prime)?;
    let (approx, f) = align_phase(&target, approx)?;
    let error = error_from_fidelity(f);
    Ok((
        approx,
        CompressionReport {
            method: Method::Truncation,
            target_bond: d_prime,
            error,
            fidelity: f,
            sweep_history: vec![],
            sweeps: 0,
            converged: true,
        },
    ))
}

/// Variational compression to bond `d_prime`.
///
/// The first run starts from `cfg.init`. With `cfg.restarts > 1` further
/// runs start from random MPS drawn from streams of `cfg.seed`, and the
/// best result is returned. Extra starts matter for symmetric targets,
/// where the truncation can land on a stationary point of the sweep.
pub fn compress_variational(
    target: &Mps,
    d_prime: usize,
    cfg: &OptimizationConfig,
) -> Result<(Mps, CompressionReport)> {
    if d_prime == 0 {
        return invalid("target bond dimension must be at least 1");
    }
    if cfg.restarts == 0 {
        return invalid("restarts must be at least 1");
    }
    let target = prepare_target(target)?;
    let random_init = |stream: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(stream);
        states::random_mps(target.n(), d_prime, &mut rng)
    };
    let init = match cfg.init {
        InitStrategy::Truncation => target.truncate_per_matrix(d_prime)?,
        InitStrategy::Random => random_init(0)?,
    };
    let mut best = compress_variational_from(&target, init, cfg)?;
    for r in 1..cfg.restarts {
        if best.1.error < tolerance::EXACT_ERROR {
            break;
        }
        let run = compress_variational_from(&target, random_init(r as u64)?, cfg)?;
        if run.1.error < best.1.error {
            best = run;
        }
    }
    Ok(best)
}

/// Variational compression starting from `init`; the bond dimensions of
/// `init` (after canonicalization) bound those of the result.
pub fn compress_variational_from(
    target: &Mps,
    init: Mps,
    cfg: &OptimizationConfig,
) -> Result<(Mps, CompressionReport)> {
    if target.n() != init.n() {
        return invalid(format!("target has {} sites, initial guess {}", target.n(), init.n()));
    }
    let target = prepare_target(target)?;
    let init = init.canonicalize_left()?;
    let d_prime = init.max_bond();
    let mut fit = VariationalFit::new(&target, &init);

    let mut history = vec![error_from_fidelity(fit.initial_overlap())];
    let mut sweeps = 0;
    let mut converged = history[0] < tolerance::EXACT_ERROR;
    while !converged && sweeps < cfg.max_sweeps {
        let before = *history.last().expect("history starts nonempty");
        history.push(error_from_fidelity(fit.forward()));
        let after = error_from_fidelity(fit.backward());
        history.push(after);
        sweeps += 1;
        converged = after < tolerance::EXACT_ERROR || (before - after).abs() <= cfg.tol * before;
    }

    let approx = fit.into_mps();
    let (approx, f) = align_phase(&target, approx)?;
    Ok((
        approx,
        CompressionReport {
            method: Method::Variational,
            target_bond: d_prime,
            error: error_from_fidelity(f),
            fidelity: f,
            sweep_history: history,
            sweeps,
            converged,
        },
    ))
}

/// Single-site overlap maximization in mixed-canonical gauge.
///
/// With every trial site except `k` isometric towards `k`, the trial norm
/// equals the Frobenius norm of site `k`, so the unit-norm maximizer of
/// `Re <trial|target>` is the local environment tensor `M` divided by its
/// norm, and the resulting overlap is `|M|`.
struct VariationalFit<'a> {
    target: &'a Mps,
    trial: Vec<SiteTensor>,
    /// `low[k]`: contraction of trial and target over sites `0..k`.
    low: Vec<ComplexMatrix>,
    /// `high[k]`: contraction over sites `k+1..n`.
    high: Vec<ComplexMatrix>,
}

impl<'a> VariationalFit<'a> {
    /// `init` must be left-canonical with `phi_f = (1)`.
    fn new(target: &'a Mps, init: &Mps) -> Self {
        let n = target.n();
        let mut trial = init.sites().to_vec();
        let phi_i = mps::column(init.phi_i());
        trial[0] = trial[0].map(|m| m * &phi_i);

        let mut low = vec![ComplexMatrix::zeros(0, 0); n];
        low[0] = ComplexVector::from_element(1, ONE) * target.phi_i().transpose();
        let mut high = vec![ComplexMatrix::zeros(0, 0); n];
        high[n - 1] = init.phi_f() * target.phi_f().adjoint();
        let mut fit = Self { target, trial, low, high };
        for k in (1..n).rev() {
            fit.high[k - 1] = fit.extend_high(k);
        }
        fit
    }

    fn initial_overlap(&self) -> f64 {
        let m = self.local(0);
        let ov: C64 = (0..2).map(|i| self.trial[0].mat(i).conjugate().component_mul(m.mat(i)).sum()).sum();
        ov.norm()
    }

    fn extend_low(&self, k: usize) -> ComplexMatrix {
        let (b, a) = (&self.trial[k], self.target.site(k + 1));
        b.mat(0).conjugate() * &self.low[k] * a.mat(0).transpose()
            + b.mat(1).conjugate() * &self.low[k] * a.mat(1).transpose()
    }

    fn extend_high(&self, k: usize) -> ComplexMatrix {
        let (b, a) = (&self.trial[k], self.target.site(k + 1));
        b.mat(0).adjoint() * &self.high[k] * a.mat(0) + b.mat(1).adjoint() * &self.high[k] * a.mat(1)
    }

    fn local(&self, k: usize) -> SiteTensor {
        let lt = self.low[k].transpose();
        self.target.site(k + 1).map(|a| &self.high[k] * a * &lt)
    }

    /// Replace site `k` by the normalized environment; returns the overlap.
    fn update(&mut self, k: usize) -> f64 {
        let m = self.local(k);
        let nrm = m.frobenius_norm_sqr().sqrt();
        if nrm > 0.0 {
            self.trial[k] = m.map(|x| x / C64::from(nrm));
        }
        nrm
    }

    fn forward(&mut self) -> f64 {
        let n = self.trial.len();
        let mut ov = 0.0;
        for k in 0..n {
            ov = self.update(k);
            if k + 1 < n {
                let right = self.trial[k].right_dim();
                let dec = linalg::svd(&self.trial[k].grouped()).expect("finite site tensor");
                self.trial[k] = SiteTensor::from_grouped(&dec.vdag, right);
                let us = dec.u_s();
                self.trial[k + 1] = self.trial[k + 1].map(|m| m * &us);
                self.low[k + 1] = self.extend_low(k);
            }
        }
        ov
    }

    fn backward(&mut self) -> f64 {
        let n = self.trial.len();
        let mut ov = self.update(n - 1);
        for k in (0..n).rev() {
            if k + 1 < n {
                ov = self.update(k);
            }
            if k > 0 {
                let left = self.trial[k].left_dim();
                let dec = linalg::svd(&self.trial[k].stacked()).expect("finite site tensor");
                self.trial[k] = SiteTensor::from_stacked(&dec.u, left);
                let sv = dec.s_vdag();
                self.trial[k - 1] = self.trial[k - 1].map(|m| &sv * m);
                self.high[k - 1] = self.extend_high(k);
            }
        }
        ov
    }

    fn into_mps(self) -> Mps {
        let one = ComplexVector::from_element(1, ONE);
        Mps::from_parts(self.trial, one.clone(), one, Gauge::LeftCanonical)
    }
}
