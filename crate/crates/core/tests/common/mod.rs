//! Independent reference implementations used by the integration tests.
//!
//! Nothing here calls the library's contraction, decomposition or
//! exponentiation code: states are built amplitude by amplitude, the matrix
//! exponential is a Taylor series with scaling and squaring, and singular
//! values come from one-sided Jacobi rotations on a real embedding.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use seqmps::linalg::ComplexVector;
use seqmps::mps::Mps;
use seqmps::seqgen::{GeneratorModel, ModelKind, Protocol, Step};

pub type Mat = DMatrix<C64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut impl Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn gaussian_matrix(r: usize, c: usize, rng: &mut impl Rng) -> Mat {
    Mat::from_fn(r, c, |_, _| gaussian(rng))
}

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `|<a|b>| / (|a| |b|)`
pub fn overlap_modulus(a: &[C64], b: &[C64]) -> f64 {
    inner(a, b).norm() / (norm(a) * norm(b))
}

/// Amplitudes `<phi_f| A[n]^{i_n} ... A[1]^{i_1} |phi_i>`, one basis state
/// at a time, with bit `k - 1` of the index holding `i_k`.
pub fn mps_dense(m: &Mps) -> Vec<C64> {
    let n = m.n();
    (0..1usize << n)
        .map(|x| {
            let mut v: Vec<C64> = m.phi_i().iter().copied().collect();
            for k in 0..n {
                let a = m.site(k + 1).mat((x >> k) & 1);
                v = (0..a.nrows()).map(|r| (0..a.ncols()).map(|c| a[(r, c)] * v[c]).sum()).collect();
            }
            m.phi_f().iter().zip(&v).map(|(f, y)| f.conj() * y).sum()
        })
        .collect()
}

pub fn pauli(j: usize) -> Mat {
    let (o, z, i) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 1.0));
    let e = match j {
        0 => [o, z, z, o],
        1 => [z, o, o, z],
        2 => [z, -i, i, z],
        _ => [o, z, z, -o],
    };
    Mat::from_row_slice(2, 2, &e)
}

pub fn kron(a: &Mat, b: &Mat) -> Mat {
    Mat::from_fn(a.nrows() * b.nrows(), a.ncols() * b.ncols(), |r, c| {
        a[(r / b.nrows(), c / b.ncols())] * b[(r % b.nrows(), c % b.ncols())]
    })
}

/// `exp(a)` by a 30-term Taylor series after scaling `a` below norm 1/2.
pub fn expm(a: &Mat) -> Mat {
    let nrm = a.norm();
    let mut squarings = 0;
    while nrm / f64::powi(2.0, squarings) > 0.5 {
        squarings += 1;
    }
    let a = a / C64::from(f64::powi(2.0, squarings));
    let dim = a.nrows();
    let mut term = Mat::identity(dim, dim);
    let mut sum = term.clone();
    for k in 1..30 {
        term = &term * &a / C64::from(k as f64);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// The coupling Hamiltonian written out from its definition (qubit ancilla
/// only).
pub fn hamiltonian(model: &GeneratorModel, h: &[f64]) -> Mat {
    assert_eq!(model.d_ancilla, 2, "oracle covers qubit ancillas");
    let pp = |a: usize, b: usize| kron(&pauli(a), &pauli(b));
    let c = |x: f64| C64::from(x);
    match model.kind {
        ModelKind::Xy => (pp(1, 1) + pp(2, 2)) * c(h[0]),
        ModelKind::Xxz => (pp(1, 1) + pp(2, 2)) * c(h[0]) + pp(3, 3) * c(h[1]),
        ModelKind::IonXy => {
            // s+ s+ + s- s- = (XX - YY) / 2
            (pp(1, 1) - pp(2, 2)) * c(h[0] / 2.0)
        }
        ModelKind::FullPauli => {
            let mut m = Mat::zeros(4, 4);
            for a in 0..4 {
                for b in 0..4 {
                    m += pp(a, b) * c(h[4 * a + b]);
                }
            }
            m
        }
    }
}

pub fn step_unitary(p: &Protocol, step: &Step) -> Mat {
    let x = match &p.fixed_gate {
        Some(g) => g.clone(),
        None => expm(&(hamiltonian(&p.model, &step.couplings) * C64::new(0.0, -1.0))),
    };
    let id = Mat::identity(2, 2);
    let or_id = |u: &Option<Mat>| u.clone().unwrap_or_else(|| id.clone());
    kron(&or_id(&step.ancilla), &id) * kron(&id, &or_id(&step.qubit_after)) * x * kron(&id, &or_id(&step.qubit_before))
}

/// The joint ancilla-qubit state after all steps, index `b * 2^n + x`, by
/// dense multiplication of each step unitary on its ancilla-qubit pair.
pub fn dense_generated(p: &Protocol) -> Vec<C64> {
    let n = p.n();
    let d = p.d_ancilla();
    let dim = 1usize << n;
    let mut psi = vec![C64::new(0.0, 0.0); d * dim];
    for a in 0..d {
        for x in 0..dim {
            let mut amp = p.phi_i[a];
            for (k, s) in p.steps.iter().enumerate() {
                amp *= s.qubit_init[(x >> k) & 1];
            }
            psi[a * dim + x] = amp;
        }
    }
    for (k, s) in p.steps.iter().enumerate() {
        let u = step_unitary(p, s);
        let mut out = vec![C64::new(0.0, 0.0); d * dim];
        for a in 0..d {
            for x in 0..dim {
                let i = (x >> k) & 1;
                let rest = x & !(1 << k);
                for a2 in 0..d {
                    for i2 in 0..2 {
                        out[a2 * dim + (rest | (i2 << k))] += u[(2 * a2 + i2, 2 * a + i)] * psi[a * dim + x];
                    }
                }
            }
        }
        psi = out;
    }
    psi
}

/// `max over phi_f` of `|<target| (phi_f-projected generated state)>|`: the
/// norm of the ancilla vector left by the dense contraction.
pub fn dense_fidelity(p: &Protocol, target: &[C64]) -> f64 {
    let psi = dense_generated(p);
    let dim = target.len();
    let t = norm(target);
    (0..p.d_ancilla()).map(|b| inner(target, &psi[b * dim..(b + 1) * dim]).norm_sqr()).sum::<f64>().sqrt() / t
}

pub fn random_unitary(d: usize, rng: &mut impl Rng) -> Mat {
    let g = gaussian_matrix(d, d, rng);
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let phases = Mat::from_diagonal(&nalgebra::DVector::from_fn(d, |i, _| {
        let z = r[(i, i)];
        if z.norm() > 0.0 {
            z / z.norm()
        } else {
            C64::new(1.0, 0.0)
        }
    }));
    q * phases
}

pub fn random_state(d: usize, rng: &mut impl Rng) -> ComplexVector {
    let v = ComplexVector::from_fn(d, |_, _| gaussian(rng));
    let n = v.norm();
    v / C64::from(n)
}

/// A protocol with random couplings, every local unitary, random qubit
/// inits and a random initial ancilla state.
pub fn random_protocol(model: GeneratorModel, n: usize, rng: &mut impl Rng) -> Protocol {
    let mut p = Protocol::new(model, n).unwrap().with_all_locals();
    let d = model.d_ancilla;
    for s in &mut p.steps {
        s.couplings = (0..model.param_count()).map(|_| rng.random_range(-4.0..4.0)).collect();
        s.ancilla = Some(random_unitary(d, rng));
        s.qubit_after = Some(random_unitary(2, rng));
        s.qubit_before = Some(random_unitary(2, rng));
        s.qubit_init = random_state(2, rng);
    }
    p.phi_i = random_state(d, rng);
    p.validate().unwrap();
    p
}

/// Singular values, descending, by one-sided Jacobi on the real embedding
/// `[[Re, -Im], [Im, Re]]`, whose singular values are those of `a`, each
/// twice.
pub fn jacobi_singular_values(a: &Mat) -> Vec<f64> {
    let (m, n) = a.shape();
    let mut b = DMatrix::<f64>::from_fn(2 * m, 2 * n, |r, c| {
        let z = a[(r % m, c % n)];
        match (r < m, c < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    if b.nrows() < b.ncols() {
        b = b.transpose();
    }
    let cols = b.ncols();
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let alpha = b.column(p).norm_squared();
                let beta = b.column(q).norm_squared();
                let gamma = b.column(p).dot(&b.column(q));
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..b.nrows() {
                    let (x, y) = (b[(r, p)], b[(r, q)]);
                    b[(r, p)] = c * x - s * y;
                    b[(r, q)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut s: Vec<f64> = (0..cols).map(|j| b.column(j).norm()).collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s.into_iter().step_by(2).take(m.min(n)).collect()
}

/// Best fidelity `max |<psi|phi>| / |phi|` over all open-boundary MPS with
/// bonds `min(d, 2^k, 2^{n-k})`, by alternating dense least squares from
/// `restarts` random starting points.
pub fn dense_best_mps_fidelity(psi: &[C64], d: usize, restarts: usize, seed: u64) -> f64 {
    let dim = psi.len();
    let n = dim.trailing_zeros() as usize;
    let dims: Vec<usize> = (0..=n).map(|k| d.min(1 << k.min(n - k))).collect();
    let target = nalgebra::DVector::from_column_slice(psi) / C64::from(norm(psi));
    let mut rng = rng(seed);
    let mut best = 0.0f64;
    for _ in 0..restarts {
        let mut sites: Vec<[Mat; 2]> = (0..n)
            .map(|k| [gaussian_matrix(dims[k + 1], dims[k], &mut rng), gaussian_matrix(dims[k + 1], dims[k], &mut rng)])
            .collect();
        let mut f_prev = 0.0;
        for sweep in 0..400 {
            let order: Vec<usize> = if sweep % 2 == 0 { (0..n).collect() } else { (0..n).rev().collect() };
            let mut f = 0.0;
            for &k in &order {
                let (l, r) = (dims[k + 1], dims[k]);
                let params = 2 * l * r;
                // Column j: the dense state with site k replaced by a unit tensor.
                let mut m = Mat::zeros(dim, params);
                for j in 0..params {
                    let (i, a, b) = (j / (l * r), (j / r) % l, j % r);
                    let mut unit = [Mat::zeros(l, r), Mat::zeros(l, r)];
                    unit[i][(a, b)] = C64::new(1.0, 0.0);
                    for x in 0..dim {
                        let mut v = vec![C64::new(1.0, 0.0)];
                        for (s, site) in sites.iter().enumerate() {
                            let bit = (x >> s) & 1;
                            let mat = if s == k { &unit[bit] } else { &site[bit] };
                            v = (0..mat.nrows())
                                .map(|rr| (0..mat.ncols()).map(|cc| mat[(rr, cc)] * v[cc]).sum())
                                .collect();
                        }
                        m[(x, j)] = v[0];
                    }
                }
                let svd = m.clone().svd(true, true);
                let coef = svd.solve(&target, 1e-13).expect("least squares");
                let phi = &m * &coef;
                f = phi.norm();
                for j in 0..params {
                    let (i, a, b) = (j / (l * r), (j / r) % l, j % r);
                    sites[k][i][(a, b)] = coef[j];
                }
            }
            if (f - f_prev).abs() < 1e-15 {
                break;
            }
            f_prev = f;
        }
        best = best.max(f_prev);
    }
    best
}

pub fn assert_non_increasing(history: &[f64], slack: f64) {
    for w in history.windows(2) {
        assert!(w[1] <= w[0] + slack, "history increased: {} -> {}", w[0], w[1]);
    }
}

/// The same state with a random invertible matrix inserted on every inner
/// bond: `A[k] -> G_k A[k]`, `A[k+1] -> A[k+1] G_k^{-1}`.
pub fn gauge_transform(m: &Mps, rng: &mut impl Rng) -> Mps {
    use seqmps::mps::SiteTensor;
    let n = m.n();
    let gs: Vec<Mat> = (0..n - 1)
        .map(|k| {
            let d = m.site(k + 1).left_dim();
            gaussian_matrix(d, d, rng) + Mat::identity(d, d) * C64::from(2.0)
        })
        .collect();
    let sites = (0..n)
        .map(|k| {
            let s = m.site(k + 1);
            let f = |a: &Mat| {
                let mut out = a.clone();
                if k + 1 < n {
                    out = &gs[k] * out;
                }
                if k > 0 {
                    out *= gs[k - 1].clone().try_inverse().expect("invertible gauge");
                }
                out
            };
            SiteTensor::new(f(s.mat(0)), f(s.mat(1))).unwrap()
        })
        .collect();
    Mps::new(sites, m.phi_i().clone(), m.phi_f().clone()).unwrap()
}

/// A random MPS without any gauge fixing: Gaussian tensors and boundaries.
pub fn raw_random_mps(n: usize, d: usize, rng: &mut impl Rng) -> Mps {
    use seqmps::mps::SiteTensor;
    let dims: Vec<usize> =
        (0..=n).map(|k| if k == 0 || k == n { 1 + (rng.random::<u8>() as usize % 2) } else { d }).collect();
    let sites = (0..n)
        .map(|k| {
            SiteTensor::new(gaussian_matrix(dims[k + 1], dims[k], rng), gaussian_matrix(dims[k + 1], dims[k], rng))
                .unwrap()
        })
        .collect();
    let phi_i = ComplexVector::from_fn(dims[0], |_, _| gaussian(rng));
    let phi_f = ComplexVector::from_fn(dims[n], |_, _| gaussian(rng));
    Mps::new(sites, phi_i, phi_f).unwrap()
}
