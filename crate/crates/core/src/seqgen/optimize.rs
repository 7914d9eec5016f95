use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::OptimizationConfig;
use crate::error::{invalid, Result};
use crate::linalg::{self, basis_vector, kron, ComplexMatrix, ComplexVector, C64};
use crate::mps::{Mps, SiteTensor};

use super::polish::{self, Layout};
use super::protocol::{dress, isometry_from_unitary, Protocol, Step};
use super::simulate::{self, cost_from_fidelity, extend_low, extend_up, highest_env, lowest_env, FidelityReport};

const GRID_POINTS: usize = 32;
const GOLDEN_WIDTH: f64 = 1e-10;
const NEWTON_STEPS: usize = 3;
const INNER_ITERATIONS: usize = 50;
const INNER_TOL: f64 = 1e-15;
const POLISH_ITERATIONS: usize = 50;

/// Maximize the fidelity of `p0` against `target` by sweeping over the
/// steps, forward then backward, until the cost changes by less than
/// `cfg.tol` over a full sweep.
///
/// At each step the enabled local unitaries are replaced by their
/// closed-form optimum for the current environment, then every coupling is
/// maximized by a bounded scalar search over its period. Only the structure
/// of `p0` is optimized: absent local unitaries stay absent, and a fixed
/// gate stays fixed.
///
/// The first run starts from `p0`; further restarts draw couplings
/// uniformly over their search intervals and Haar-random local unitaries
/// from a stream derived from `cfg.seed`. The best run is returned.
pub fn optimize(p0: &Protocol, target: &Mps, cfg: &OptimizationConfig) -> Result<(Protocol, FidelityReport)> {
    p0.validate()?;
    if target.n() != p0.n() {
        return invalid(format!("target has {} qubits, protocol {}", target.n(), p0.n()));
    }
    if !(cfg.tol >= 0.0) || cfg.restarts == 0 {
        return invalid("tolerance must be non-negative and restarts at least 1");
    }
    let target = target.normalize()?;

    let mut best: Option<Outcome> = None;
    let mut used = 0;
    for r in 0..cfg.restarts {
        let start = if r == 0 { p0.clone() } else { randomized(p0, cfg, r as u64) };
        let out = Run::new(&target, start, cfg.optimize_phi_i)?.execute(cfg)?;
        used += 1;
        log::debug!("restart {r}: 1-F = {:.3e} after {} sweeps", 1.0 - out.fidelity, out.sweeps);
        if best.as_ref().is_none_or(|b| out.fidelity > b.fidelity) {
            best = Some(out);
        }
        if best.as_ref().is_some_and(|b| 1.0 - b.fidelity < cfg.stop_below) {
            break;
        }
    }
    let best = best.expect("at least one restart");
    let mut report = simulate::fidelity(&best.protocol, &target)?;
    report.history = best.history;
    report.converged = best.converged;
    report.sweeps = best.sweeps;
    report.restarts_used = used;
    Ok((best.protocol, report))
}

/// [`optimize`] with the ancilla unitary and both qubit unitaries enabled
/// at every step.
pub fn optimize_full_local(
    p0: &Protocol,
    target: &Mps,
    cfg: &OptimizationConfig,
) -> Result<(Protocol, FidelityReport)> {
    optimize(&p0.clone().with_all_locals(), target, cfg)
}

fn randomized(p0: &Protocol, cfg: &OptimizationConfig, stream: u64) -> Protocol {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    let mut p = p0.clone();
    let d = p.d_ancilla();
    let model = p.model;
    let free_couplings = p.fixed_gate.is_none();
    for s in &mut p.steps {
        if free_couplings {
            for (c, h) in s.couplings.iter_mut().enumerate() {
                let (lo, hi) = model.search_interval(c);
                *h = rng.random_range(lo..hi);
            }
        }
        if let Some(u) = &mut s.ancilla {
            *u = linalg::haar_unitary(d, &mut rng);
        }
        if let Some(u) = &mut s.qubit_after {
            *u = linalg::haar_unitary(2, &mut rng);
        }
        if let Some(u) = &mut s.qubit_before {
            *u = linalg::haar_unitary(2, &mut rng);
        }
    }
    if cfg.optimize_phi_i {
        let v = linalg::gaussian_vector(d, &mut rng);
        p.phi_i = &v / C64::from(v.norm());
    }
    p
}

struct Outcome {
    protocol: Protocol,
    fidelity: f64,
    history: Vec<f64>,
    sweeps: usize,
    converged: bool,
}

#[derive(Clone, Copy)]
enum Local {
    Ancilla,
    QubitAfter,
    QubitBefore,
}

/// One optimization run. `low[k]` contracts steps `0..k` with the target,
/// `up[k]` steps `k+1..n` (one matrix per final ancilla level).
struct Run<'a> {
    target: &'a Mps,
    p: Protocol,
    phi_i_free: bool,
    generators: Vec<ComplexMatrix>,
    entanglers: Vec<ComplexMatrix>,
    isos: Vec<SiteTensor>,
    low: Vec<ComplexMatrix>,
    up: Vec<Vec<ComplexMatrix>>,
    history: Vec<f64>,
}

impl<'a> Run<'a> {
    fn new(target: &'a Mps, p: Protocol, phi_i_free: bool) -> Result<Self> {
        let n = p.n();
        let d = p.d_ancilla();
        let entanglers = (0..n).map(|k| p.entangler(k)).collect::<Result<Vec<_>>>()?;
        let isos = (0..n)
            .map(|k| isometry_from_unitary(&dress(&entanglers[k], &p.steps[k], d), &p.steps[k].qubit_init, d))
            .collect::<Vec<_>>();
        let mut low = vec![ComplexMatrix::zeros(0, 0); n + 1];
        low[0] = lowest_env(target, &p.phi_i);
        let mut up = vec![Vec::new(); n];
        up[n - 1] = highest_env(target, d);
        for k in (1..n).rev() {
            up[k - 1] = extend_up(&up[k], target.site(k + 1), &isos[k]);
        }
        Ok(Self {
            target,
            generators: p.model.generators(),
            p,
            phi_i_free,
            entanglers,
            isos,
            low,
            up,
            history: Vec::new(),
        })
    }

    fn execute(mut self, cfg: &OptimizationConfig) -> Result<Outcome> {
        let envs = self.step_envs(0);
        let f0 = overlap_vector(&envs, &self.unitary(0)).norm();
        self.history.push(cost_from_fidelity(f0));
        let mut before = self.history[0];
        let mut sweeps = 0;
        let mut converged = false;
        while sweeps < cfg.max_sweeps {
            self.forward()?;
            self.backward()?;
            self.polish()?;
            sweeps += 1;
            let after = *self.history.last().expect("history starts nonempty");
            if (before - after).abs() < cfg.tol {
                converged = true;
                break;
            }
            before = after;
        }
        let cost = *self.history.last().expect("history starts nonempty");
        Ok(Outcome { protocol: self.p, fidelity: 1.0 - cost / 2.0, history: self.history, sweeps, converged })
    }

    fn polish(&mut self) -> Result<()> {
        let layout = Layout::new(&self.p, self.phi_i_free);
        let mut history = std::mem::take(&mut self.history);
        let p = polish::polish(self.p.clone(), self.target, &layout, POLISH_ITERATIONS, &mut |f| {
            history.push(cost_from_fidelity(f))
        })?;
        *self = Run::new(self.target, p, self.phi_i_free)?;
        self.history = history;
        Ok(())
    }

    fn forward(&mut self) -> Result<()> {
        for k in 0..self.p.n() {
            self.optimize_step(k)?;
            self.low[k + 1] = extend_low(&self.low[k], self.target.site(k + 1), &self.isos[k]);
        }
        Ok(())
    }

    fn backward(&mut self) -> Result<()> {
        let n = self.p.n();
        for k in (0..n).rev() {
            if k + 1 < n {
                self.up[k] = extend_up(&self.up[k + 1], self.target.site(k + 2), &self.isos[k + 1]);
            }
            self.optimize_step(k)?;
        }
        Ok(())
    }

    fn unitary(&self, k: usize) -> ComplexMatrix {
        dress(&self.entanglers[k], &self.p.steps[k], self.p.d_ancilla())
    }

    /// `env[b][(c', i), (c, j)]` such that the overlap vector is
    /// `v_b = sum env[b] .* U` for the step unitary `U`.
    fn step_envs(&self, k: usize) -> Vec<ComplexMatrix> {
        let d = self.p.d_ancilla();
        let a = self.target.site(k + 1);
        let init = &self.p.steps[k].qubit_init;
        let conj_a = [a.mat(0).conjugate(), a.mat(1).conjugate()];
        self.up[k]
            .iter()
            .map(|u| {
                let ut = u.transpose();
                let mut env = ComplexMatrix::zeros(2 * d, 2 * d);
                for (i, ca) in conj_a.iter().enumerate() {
                    let e = &ut * ca * &self.low[k];
                    for c2 in 0..d {
                        for c in 0..d {
                            for j in 0..2 {
                                env[(2 * c2 + i, 2 * c + j)] = e[(c2, c)] * init[j];
                            }
                        }
                    }
                }
                env
            })
            .collect()
    }

    fn optimize_step(&mut self, k: usize) -> Result<()> {
        let envs = self.step_envs(k);
        let mut f = overlap_vector(&envs, &self.unitary(k)).norm();
        let step = &self.p.steps[k];
        let locals = [
            (step.ancilla.is_some(), Local::Ancilla),
            (step.qubit_after.is_some(), Local::QubitAfter),
            (step.qubit_before.is_some(), Local::QubitBefore),
        ];
        // Alternate the factors of this step until they stop improving, so
        // each step is brought to (a local) optimum before moving on.
        for _ in 0..INNER_ITERATIONS {
            let start = f;
            for (enabled, which) in locals {
                if enabled {
                    f = self.update_local(k, &envs, f, which)?;
                }
            }
            if self.p.fixed_gate.is_none() {
                for c in 0..self.p.model.param_count() {
                    f = self.update_coupling(k, c, &envs, f)?;
                }
            }
            if f - start <= INNER_TOL {
                break;
            }
        }
        let d = self.p.d_ancilla();
        self.isos[k] = isometry_from_unitary(&self.unitary(k), &self.p.steps[k].qubit_init, d);
        if k == 0 && self.phi_i_free {
            f = self.update_phi_i(f)?;
        }
        self.history.push(cost_from_fidelity(f));
        Ok(())
    }

    /// Closed-form update of one local unitary with the final ancilla state
    /// held at its current optimum. Kept only if the fidelity does not drop.
    fn update_local(&mut self, k: usize, envs: &[ComplexMatrix], f: f64, which: Local) -> Result<f64> {
        let d = self.p.d_ancilla();
        let x = &self.entanglers[k];
        let step = &self.p.steps[k];
        let mut rest = step.clone();
        match which {
            Local::Ancilla => rest.ancilla = None,
            Local::QubitAfter => rest.qubit_after = None,
            Local::QubitBefore => rest.qubit_before = None,
        }
        let r = dress(x, &rest, d);
        let mut best: Option<(Step, f64)> = None;
        for phi in phi_candidates(&overlap_vector(envs, &self.unitary(k))) {
            let env = contract_phi(envs, &phi).transpose();
            let k_env = match which {
                Local::Ancilla => trace_qubit(&(&r * &env), d),
                Local::QubitAfter => trace_ancilla(&(&r * &env), d),
                Local::QubitBefore => trace_ancilla(&(&env * &r), d),
            };
            let u = linalg::procrustes_unitary(&k_env)?;
            let mut trial = step.clone();
            match which {
                Local::Ancilla => trial.ancilla = Some(u),
                Local::QubitAfter => trial.qubit_after = Some(u),
                Local::QubitBefore => trial.qubit_before = Some(u),
            }
            let ft = overlap_vector(envs, &dress(x, &trial, d)).norm();
            if best.as_ref().is_none_or(|b| ft > b.1) {
                best = Some((trial, ft));
            }
        }
        match best {
            Some((trial, ft)) if ft >= f => {
                self.p.steps[k] = trial;
                Ok(ft)
            }
            _ => Ok(f),
        }
    }

    fn update_coupling(&mut self, k: usize, c: usize, envs: &[ComplexMatrix], f: f64) -> Result<f64> {
        let model = self.p.model;
        let d = model.d_ancilla;
        let step = &self.p.steps[k];
        let id_a = linalg::identity(d);
        let id_q = linalg::identity(2);
        let left = kron(step.ancilla.as_ref().unwrap_or(&id_a), step.qubit_after.as_ref().unwrap_or(&id_q)).transpose();
        let right = kron(&id_a, step.qubit_before.as_ref().unwrap_or(&id_q)).transpose();
        // v_b = sum g[b] .* X for the bare entangler X.
        let g: Vec<ComplexMatrix> = envs.iter().map(|e| &left * e * &right).collect();

        let couplings = step.couplings.clone();
        let dim = model.joint_dim();
        let h_rest = self
            .generators
            .iter()
            .zip(&couplings)
            .enumerate()
            .filter(|(c2, _)| *c2 != c)
            .fold(ComplexMatrix::zeros(dim, dim), |acc, (_, (gen, &h))| acc + gen * C64::from(h));
        let gen = &self.generators[c];
        let commutator = (gen * &h_rest - &h_rest * gen).norm();
        let (lo, hi) = model.search_interval(c);
        let h0 = couplings[c];

        let (h_best, f_best) = if commutator < 1e-12 * (1.0 + h_rest.norm()) {
            // exp(-i (h G + H_rest)) = exp(-i h G) exp(-i H_rest): the overlap
            // vector is a trigonometric sum over the eigenvalues of G.
            let w = linalg::expm_hermitian(&h_rest, 1.0)?.transpose();
            let (vals, vecs) = linalg::eigh(gen)?;
            let weights: Vec<Vec<C64>> = g
                .iter()
                .map(|gb| {
                    let gw = gb * &w;
                    (0..vals.len())
                        .map(|e| {
                            let ve = vecs.column(e);
                            (ve.transpose() * &gw * ve.conjugate())[(0, 0)]
                        })
                        .collect()
                })
                .collect();
            let spectral = SpectralSum { vals, weights };
            maximize_scalar(&|h| spectral.eval(h).0, &|h| spectral.derivatives(h), lo, hi, h0)
        } else {
            let value = |h: f64| {
                let mut params = couplings.clone();
                params[c] = h;
                match model.entangler(&params) {
                    Ok(x) => overlap_vector(&g, &x).norm(),
                    Err(_) => f64::NEG_INFINITY,
                }
            };
            maximize_scalar(&value, &|h| finite_difference(&value, h), lo, hi, h0)
        };

        if !(f_best > f) {
            return Ok(f);
        }
        let mut params = couplings;
        params[c] = h_best;
        let x = model.entangler(&params)?;
        let mut trial = self.p.steps[k].clone();
        trial.couplings = params;
        let ft = overlap_vector(envs, &dress(&x, &trial, d)).norm();
        if ft >= f {
            self.p.steps[k] = trial;
            self.entanglers[k] = x;
            Ok(ft)
        } else {
            Ok(f)
        }
    }

    /// `v_b = g_b^T phi_i`; with the final state fixed the optimum is the
    /// normalized conjugate of `sum_b conj(phi_f[b]) g_b`.
    fn update_phi_i(&mut self, f: f64) -> Result<f64> {
        let a = self.target.site(1);
        let pit = self.target.phi_i().conjugate();
        let v0 = &self.isos[0];
        let gs: Vec<ComplexVector> = self.up[0]
            .iter()
            .map(|u| {
                let ut = u.transpose();
                (0..2)
                    .map(|i| v0.mat(i).transpose() * (&ut * a.mat(i).conjugate() * &pit))
                    .fold(ComplexVector::zeros(self.p.d_ancilla()), |acc, x| acc + x)
            })
            .collect();
        let value = |phi: &ComplexVector| -> ComplexVector {
            ComplexVector::from_iterator(gs.len(), gs.iter().map(|g| (g.transpose() * phi)[(0, 0)]))
        };
        let mut best: Option<(ComplexVector, f64)> = None;
        for phi_f in phi_candidates(&value(&self.p.phi_i)) {
            let h = gs
                .iter()
                .zip(phi_f.iter())
                .fold(ComplexVector::zeros(self.p.d_ancilla()), |acc, (g, p)| acc + g * p.conj());
            let nrm = h.norm();
            if !(nrm > 0.0) {
                continue;
            }
            let cand = h.conjugate() / C64::from(nrm);
            let ft = value(&cand).norm();
            if best.as_ref().is_none_or(|b| ft > b.1) {
                best = Some((cand, ft));
            }
        }
        match best {
            Some((phi, ft)) if ft >= f => {
                self.low[0] = lowest_env(self.target, &phi);
                self.p.phi_i = phi;
                Ok(ft)
            }
            _ => Ok(f),
        }
    }
}

fn overlap_vector(envs: &[ComplexMatrix], u: &ComplexMatrix) -> ComplexVector {
    ComplexVector::from_iterator(
        envs.len(),
        envs.iter().map(|e| e.iter().zip(u.iter()).map(|(a, b)| a * b).sum::<C64>()),
    )
}

/// The current optimal final ancilla state, or every basis state when the
/// overlap vanishes and no direction is preferred.
fn phi_candidates(v: &ComplexVector) -> Vec<ComplexVector> {
    let nrm = v.norm();
    if nrm > 1e-150 {
        vec![v / C64::from(nrm)]
    } else {
        (0..v.len()).map(|b| basis_vector(v.len(), b)).collect()
    }
}

fn contract_phi(envs: &[ComplexMatrix], phi: &ComplexVector) -> ComplexMatrix {
    let (r, c) = envs[0].shape();
    envs.iter().zip(phi.iter()).fold(ComplexMatrix::zeros(r, c), |acc, (e, p)| acc + e * p.conj())
}

/// `K[b, a] = sum_i M[(b, i), (a, i)]`
fn trace_qubit(m: &ComplexMatrix, d: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d, d, |b, a| m[(2 * b, 2 * a)] + m[(2 * b + 1, 2 * a + 1)])
}

/// `K[j, i] = sum_a M[(a, j), (a, i)]`
fn trace_ancilla(m: &ComplexMatrix, d: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(2, 2, |j, i| (0..d).map(|a| m[(2 * a + j, 2 * a + i)]).sum::<C64>())
}

struct SpectralSum {
    vals: Vec<f64>,
    weights: Vec<Vec<C64>>,
}

impl SpectralSum {
    /// Overlap vector and its first two derivatives in `h`.
    fn terms(&self, h: f64) -> (ComplexVector, ComplexVector, ComplexVector) {
        let nb = self.weights.len();
        let (mut v, mut d1, mut d2) = (ComplexVector::zeros(nb), ComplexVector::zeros(nb), ComplexVector::zeros(nb));
        for (b, w) in self.weights.iter().enumerate() {
            for (&lam, &wt) in self.vals.iter().zip(w) {
                let ph = C64::from_polar(1.0, -h * lam) * wt;
                v[b] += ph;
                d1[b] += ph * C64::new(0.0, -lam);
                d2[b] += ph * (-lam * lam);
            }
        }
        (v, d1, d2)
    }

    fn eval(&self, h: f64) -> (f64, ComplexVector) {
        let (v, _, _) = self.terms(h);
        (v.norm(), v)
    }

    fn derivatives(&self, h: f64) -> (f64, f64) {
        let (v, d1, d2) = self.terms(h);
        let f = v.norm();
        if f == 0.0 {
            return (0.0, 0.0);
        }
        let a = v.dotc(&d1).re;
        let fp = a / f;
        let fpp = (d1.norm_squared() + v.dotc(&d2).re) / f - a * a / (f * f * f);
        (fp, fpp)
    }
}

fn finite_difference(f: &dyn Fn(f64) -> f64, h: f64) -> (f64, f64) {
    let dh = 1e-4;
    let (fm, f0, fp) = (f(h - dh), f(h), f(h + dh));
    ((fp - fm) / (2.0 * dh), (fp - 2.0 * f0 + fm) / (dh * dh))
}

/// Maximize `f` over `[lo, hi]`: a uniform grid locates the best bracket,
/// golden-section search narrows it, and a few Newton steps polish the
/// result. The starting point `h0` is returned unless something beats it.
fn maximize_scalar(
    f: &dyn Fn(f64) -> f64,
    derivs: &dyn Fn(f64) -> (f64, f64),
    lo: f64,
    hi: f64,
    h0: f64,
) -> (f64, f64) {
    let spacing = (hi - lo) / GRID_POINTS as f64;
    let mut grid_best = (lo, f(lo));
    for j in 1..GRID_POINTS {
        let h = lo + j as f64 * spacing;
        let v = f(h);
        if v > grid_best.1 {
            grid_best = (h, v);
        }
    }

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (grid_best.0 - spacing, grid_best.0 + spacing);
    let mut c = b - inv_phi * (b - a);
    let mut e = a + inv_phi * (b - a);
    let (mut fc, mut fe) = (f(c), f(e));
    while b - a > GOLDEN_WIDTH {
        if fc > fe {
            b = e;
            e = c;
            fe = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + inv_phi * (b - a);
            fe = f(e);
        }
    }
    let mut best = if fc > fe { (c, fc) } else { (e, fe) };
    if grid_best.1 > best.1 {
        best = grid_best;
    }

    for _ in 0..NEWTON_STEPS {
        let (d1, d2) = derivs(best.0);
        if !(d2 < 0.0) {
            break;
        }
        let h = best.0 - d1 / d2;
        if !h.is_finite() || (h - best.0).abs() > spacing {
            break;
        }
        let v = f(h);
        if v > best.1 {
            best = (h, v);
        } else {
            break;
        }
    }

    let start = (h0, f(h0));
    if best.1 > start.1 {
        best
    } else {
        start
    }
}
