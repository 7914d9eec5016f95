//! Joint quasi-Newton refinement of every protocol parameter.
//!
//! Step-by-step sweeps move one step at a time, but the ancilla basis passed
//! from step `k` to step `k + 1` is fixed by the local unitary of step `k`,
//! so progress along directions that need neighbouring steps to move
//! together is slow. This pass takes L-BFGS steps in all parameters at once,
//! with exact gradients from the same environments the sweeps use.
//!
//! Unitaries move along one-parameter subgroups, `U -> exp(i K) U` with `K`
//! traceless Hermitian, so tangent coordinates at different points are
//! directly comparable. Couplings move additively.

use crate::error::Result;
use crate::linalg::{self, ComplexMatrix, ComplexVector, C64, I};
use crate::mps::{Mps, SiteTensor};

use super::protocol::{dress, isometry_from_unitary, Protocol, Step};
use super::simulate::{extend_low, lowest_env};

const MEMORY: usize = 12;
const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACK: usize = 40;

#[derive(Clone, Copy)]
enum Slot {
    Coupling(usize),
    Ancilla,
    QubitAfter,
    QubitBefore,
}

/// Parameter layout of one protocol structure.
pub(crate) struct Layout {
    per_step: Vec<Vec<(Slot, usize)>>,
    phi_i_free: bool,
    generators_d: Vec<ComplexMatrix>,
    generators_2: Vec<ComplexMatrix>,
    model_generators: Vec<ComplexMatrix>,
}

impl Layout {
    pub(crate) fn new(p: &Protocol, phi_i_free: bool) -> Self {
        let d = p.d_ancilla();
        let per_step = p
            .steps
            .iter()
            .map(|s| {
                let mut slots = Vec::new();
                if p.fixed_gate.is_none() {
                    slots.extend((0..p.model.param_count()).map(|c| (Slot::Coupling(c), 1)));
                }
                if s.ancilla.is_some() {
                    slots.push((Slot::Ancilla, d * d - 1));
                }
                if s.qubit_after.is_some() {
                    slots.push((Slot::QubitAfter, 3));
                }
                if s.qubit_before.is_some() {
                    slots.push((Slot::QubitBefore, 3));
                }
                slots
            })
            .collect();
        Self {
            per_step,
            phi_i_free,
            generators_d: linalg::hermitian_basis(d).split_off(1),
            generators_2: linalg::hermitian_basis(2).split_off(1),
            model_generators: p.model.generators(),
        }
    }

    fn len(&self) -> usize {
        let steps: usize = self.per_step.iter().flatten().map(|(_, m)| m).sum();
        steps + if self.phi_i_free { self.generators_d.len() } else { 0 }
    }

    fn rotation(gens: &[ComplexMatrix], theta: &[f64]) -> Result<ComplexMatrix> {
        let d = gens[0].nrows();
        let k = gens.iter().zip(theta).fold(ComplexMatrix::zeros(d, d), |acc, (g, &t)| acc + g * C64::from(t));
        linalg::expm_hermitian(&k, -1.0)
    }

    /// The protocol displaced by `theta` from `p`.
    fn retract(&self, p: &Protocol, theta: &[f64]) -> Result<Protocol> {
        let mut q = p.clone();
        let mut at = 0;
        for (step, slots) in q.steps.iter_mut().zip(&self.per_step) {
            for &(slot, m) in slots {
                let t = &theta[at..at + m];
                match slot {
                    Slot::Coupling(c) => step.couplings[c] += t[0],
                    Slot::Ancilla => rotate(&mut step.ancilla, Self::rotation(&self.generators_d, t)?),
                    Slot::QubitAfter => rotate(&mut step.qubit_after, Self::rotation(&self.generators_2, t)?),
                    Slot::QubitBefore => rotate(&mut step.qubit_before, Self::rotation(&self.generators_2, t)?),
                }
                at += m;
            }
        }
        if self.phi_i_free {
            let m = self.generators_d.len();
            q.phi_i = Self::rotation(&self.generators_d, &theta[at..at + m])? * &q.phi_i;
        }
        Ok(q)
    }
}

fn rotate(u: &mut Option<ComplexMatrix>, r: ComplexMatrix) {
    if let Some(u) = u {
        *u = r * &*u;
    }
}

/// `d/dt exp(-i (h + t g))` at `t = 0`.
fn expm_derivative(h: &ComplexMatrix, g: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (vals, vecs) = linalg::eigh(h)?;
    let b = vecs.adjoint() * g * &vecs;
    let n = vals.len();
    let phases: Vec<C64> = vals.iter().map(|&l| C64::from_polar(1.0, -l)).collect();
    let mut m = ComplexMatrix::zeros(n, n);
    for a in 0..n {
        for c in 0..n {
            let gap = vals[a] - vals[c];
            let phi = if gap.abs() > 1e-9 {
                (phases[a] - phases[c]) / C64::new(0.0, -gap)
            } else {
                phases[a] * C64::from_polar(1.0, -gap / 2.0)
            };
            m[(a, c)] = phi * b[(a, c)] * -I;
        }
    }
    Ok(&vecs * m * vecs.adjoint())
}

fn real_overlap(env: &ComplexMatrix, u: &ComplexMatrix) -> f64 {
    env.iter().zip(u.iter()).map(|(a, b)| (a * b).re).sum()
}

/// Fidelity and its gradient in the tangent coordinates of `layout`.
pub(crate) fn value_and_gradient(p: &Protocol, target: &Mps, layout: &Layout) -> Result<(f64, Vec<f64>)> {
    let n = p.n();
    let d = p.d_ancilla();
    let xs = (0..n).map(|k| p.entangler(k)).collect::<Result<Vec<_>>>()?;
    let us: Vec<ComplexMatrix> = (0..n).map(|k| dress(&xs[k], &p.steps[k], d)).collect();
    let isos: Vec<SiteTensor> = (0..n).map(|k| isometry_from_unitary(&us[k], &p.steps[k].qubit_init, d)).collect();
    let mut low = Vec::with_capacity(n + 1);
    low.push(lowest_env(target, &p.phi_i));
    for k in 0..n {
        let next = extend_low(&low[k], target.site(k + 1), &isos[k]);
        low.push(next);
    }
    let v: ComplexVector = low[n].transpose() * target.phi_f();
    let f = v.norm();
    let mut grad = vec![0.0; layout.len()];
    if !(f > 0.0) {
        return Ok((f, grad));
    }
    let phi = &v / C64::from(f);

    // up[a, c] contracted with conj(phi) on the open ancilla index.
    let mut ups = vec![ComplexMatrix::zeros(0, 0); n];
    ups[n - 1] = target.phi_f() * phi.adjoint();
    for k in (1..n).rev() {
        let (a, vk) = (target.site(k + 1), &isos[k]);
        ups[k - 1] = a.mat(0).adjoint() * &ups[k] * vk.mat(0) + a.mat(1).adjoint() * &ups[k] * vk.mat(1);
    }

    let mut at = 0;
    for k in 0..n {
        let step = &p.steps[k];
        let a = target.site(k + 1);
        let ut = ups[k].transpose();
        let mut env = ComplexMatrix::zeros(2 * d, 2 * d);
        for i in 0..2 {
            let e = &ut * a.mat(i).conjugate() * &low[k];
            for c2 in 0..d {
                for c in 0..d {
                    for j in 0..2 {
                        env[(2 * c2 + i, 2 * c + j)] = e[(c2, c)] * step.qubit_init[j];
                    }
                }
            }
        }
        for &(slot, m) in &layout.per_step[k] {
            match slot {
                Slot::Coupling(c) => {
                    let h = p.model.hamiltonian(&step.couplings)?;
                    let dx = expm_derivative(&h, &layout.model_generators[c])?;
                    grad[at] = real_overlap(&env, &dress(&dx, step, d));
                }
                Slot::Ancilla | Slot::QubitAfter | Slot::QubitBefore => {
                    let gens = if matches!(slot, Slot::Ancilla) { &layout.generators_d } else { &layout.generators_2 };
                    for (j, g) in gens.iter().enumerate() {
                        let mut ds: Step = step.clone();
                        let field = match slot {
                            Slot::Ancilla => &mut ds.ancilla,
                            Slot::QubitAfter => &mut ds.qubit_after,
                            _ => &mut ds.qubit_before,
                        };
                        let u = field.as_ref().expect("slot present in layout");
                        *field = Some(g * I * u);
                        grad[at + j] = real_overlap(&env, &dress(&xs[k], &ds, d));
                    }
                }
            }
            at += m;
        }
    }
    if layout.phi_i_free {
        // v = sum_c phi_i[c] g[c] with g read off the lowest environment.
        let a = target.site(1);
        let ut = ups[0].transpose();
        let pit = target.phi_i().conjugate();
        let g = (0..2)
            .map(|i| isos[0].mat(i).transpose() * (&ut * a.mat(i).conjugate() * &pit))
            .fold(ComplexVector::zeros(d), |acc, x| acc + x);
        for (j, gen) in layout.generators_d.iter().enumerate() {
            let dphi = gen * &p.phi_i * I;
            grad[at + j] = dphi.iter().zip(g.iter()).map(|(x, y)| (x * y).re).sum();
        }
    }
    Ok((f, grad))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Run up to `max_iter` L-BFGS iterations maximizing the fidelity. Every
/// accepted step strictly increases it; the fidelity after each step is
/// passed to `record`.
pub(crate) fn polish(
    p: Protocol,
    target: &Mps,
    layout: &Layout,
    max_iter: usize,
    record: &mut dyn FnMut(f64),
) -> Result<Protocol> {
    let mut p = p;
    let (mut f, mut g) = value_and_gradient(&p, target, layout)?;
    let mut mem: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
    for _ in 0..max_iter {
        // Ascent direction from the two-loop recursion on -F.
        let mut q: Vec<f64> = g.iter().map(|x| -x).collect();
        let mut alphas = Vec::with_capacity(mem.len());
        for (s, y, rho) in mem.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        let gamma = mem.last().map_or_else(|| 0.1 / dot(&g, &g).sqrt().max(1e-300), |(s, y, _)| dot(s, y) / dot(y, y));
        q.iter_mut().for_each(|x| *x *= gamma);
        for ((s, y, rho), a) in mem.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        let mut dir: Vec<f64> = q.iter().map(|x| -x).collect();
        let mut slope = dot(&dir, &g);
        if !(slope > 0.0) {
            mem.clear();
            dir = g.iter().map(|x| x * 0.1 / dot(&g, &g).sqrt().max(1e-300)).collect();
            slope = dot(&dir, &g);
            if !(slope > 0.0) {
                break;
            }
        }

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACK {
            let theta: Vec<f64> = dir.iter().map(|x| x * t).collect();
            let trial = layout.retract(&p, &theta)?;
            let (ft, gt) = value_and_gradient(&trial, target, layout)?;
            if ft > f && ft - f >= ARMIJO * t * slope {
                accepted = Some((trial, ft, gt, theta));
                break;
            }
            t *= 0.5;
        }
        let Some((trial, ft, gt, s)) = accepted else { break };
        let y: Vec<f64> = g.iter().zip(&gt).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            mem.push((s, y, 1.0 / sy));
            if mem.len() > MEMORY {
                mem.remove(0);
            }
        }
        p = trial;
        f = ft;
        g = gt;
        record(f);
    }
    reunitarize(&mut p)?;
    Ok(p)
}

/// Remove the rounding drift accumulated by repeated rotations.
fn reunitarize(p: &mut Protocol) -> Result<()> {
    for s in &mut p.steps {
        for u in [&mut s.ancilla, &mut s.qubit_after, &mut s.qubit_before].into_iter().flatten() {
            *u = linalg::nearest_unitary(u)?;
        }
    }
    let nrm = p.phi_i.norm();
    p.phi_i /= C64::from(nrm);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqgen::model::GeneratorModel;
    use crate::states::{make_target, TargetSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_protocol(model: GeneratorModel, n: usize, seed: u64) -> Protocol {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = Protocol::new(model, n).unwrap().with_all_locals();
        for s in &mut p.steps {
            for h in &mut s.couplings {
                *h = rand::Rng::random_range(&mut rng, -1.0..1.0);
            }
            s.ancilla = Some(linalg::haar_unitary(model.d_ancilla, &mut rng));
            s.qubit_after = Some(linalg::haar_unitary(2, &mut rng));
            s.qubit_before = Some(linalg::haar_unitary(2, &mut rng));
        }
        let v = linalg::gaussian_vector(model.d_ancilla, &mut rng);
        p.phi_i = &v / C64::from(v.norm());
        p
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for model in [GeneratorModel::xy(), GeneratorModel::xxz(), GeneratorModel::full_pauli(2).unwrap()] {
            let p = random_protocol(model, 3, 5);
            let t = make_target(&TargetSpec::random_mps(3, 2, 6)).unwrap();
            let layout = Layout::new(&p, true);
            let (_, g) = value_and_gradient(&p, &t, &layout).unwrap();
            let eps = 1e-6;
            for j in 0..g.len() {
                let mut e = vec![0.0; g.len()];
                e[j] = eps;
                let fp = value_and_gradient(&layout.retract(&p, &e).unwrap(), &t, &layout).unwrap().0;
                e[j] = -eps;
                let fm = value_and_gradient(&layout.retract(&p, &e).unwrap(), &t, &layout).unwrap().0;
                let fd = (fp - fm) / (2.0 * eps);
                assert!((fd - g[j]).abs() < 1e-7, "{:?} param {j}: {fd} vs {}", model.kind, g[j]);
            }
        }
    }

    #[test]
    fn polish_increases_fidelity() {
        let p = random_protocol(GeneratorModel::xy(), 4, 1);
        let t = make_target(&TargetSpec::random_mps(4, 2, 2)).unwrap();
        let layout = Layout::new(&p, false);
        let f0 = value_and_gradient(&p, &t, &layout).unwrap().0;
        let mut seen = vec![f0];
        let q = polish(p, &t, &layout, 200, &mut |f| seen.push(f)).unwrap();
        assert!(seen.windows(2).all(|w| w[1] > w[0]));
        let f1 = value_and_gradient(&q, &t, &layout).unwrap().0;
        assert!(f1 > f0);
    }
}
