//! Open-boundary matrix-product states of qubit chains.
//!
//! A state on `n` qubits is stored as
//!
//! ```text
//! psi(i_n, ..., i_1) = <phi_f| A[n]^{i_n} ... A[2]^{i_2} A[1]^{i_1} |phi_i>
//! ```
//!
//! Site `k` (stored at index `k - 1`) holds the two matrices `A[k]^0` and
//! `A[k]^1`, each of shape `D_k x D_{k-1}`. Site 1 is the rightmost factor
//! and is the first qubit emitted in a sequential generation; `phi_i` has
//! length `D_0` and `phi_f` length `D_n`. The boundary vectors are kept
//! explicitly rather than folded into the edge tensors.
//!
//! Dense vectors use the ket `|i_n ... i_1>`: bit `k - 1` of the basis index
//! is `i_k`.
//!
//! The left-canonical gauge is the isometry condition
//! `sum_i A^{i†} A^i = 1` at every site, so that each site maps the incoming
//! ancilla space isometrically into (outgoing ancilla) x (qubit).

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, ComplexMatrix, ComplexVector, C64, ONE};
use crate::tolerance;

/// The pair of matrices `(A^0, A^1)` at one site, each `left x right`.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteTensor {
    mats: [ComplexMatrix; 2],
}

impl SiteTensor {
    pub fn new(a0: ComplexMatrix, a1: ComplexMatrix) -> Result<Self> {
        if a0.shape() != a1.shape() {
            return invalid(format!("site matrices differ in shape: {:?} vs {:?}", a0.shape(), a1.shape()));
        }
        if a0.is_empty() {
            return invalid("site matrices must be nonempty");
        }
        if !linalg::all_finite(&a0) || !linalg::all_finite(&a1) {
            return invalid("site matrices have non-finite entries");
        }
        Ok(Self { mats: [a0, a1] })
    }

    pub fn mat(&self, i: usize) -> &ComplexMatrix {
        &self.mats[i]
    }

    pub fn mats(&self) -> &[ComplexMatrix; 2] {
        &self.mats
    }

    /// Bond dimension towards site `k + 1` (rows).
    pub fn left_dim(&self) -> usize {
        self.mats[0].nrows()
    }

    /// Bond dimension towards site `k - 1` (columns).
    pub fn right_dim(&self) -> usize {
        self.mats[0].ncols()
    }

    /// `[A^0; A^1]`, shape `2 D_left x D_right`, row index `i * D_left + a`.
    pub fn stacked(&self) -> ComplexMatrix {
        let (l, r) = (self.left_dim(), self.right_dim());
        let mut out = ComplexMatrix::zeros(2 * l, r);
        for i in 0..2 {
            out.view_mut((i * l, 0), (l, r)).copy_from(&self.mats[i]);
        }
        out
    }

    pub fn from_stacked(m: &ComplexMatrix, left: usize) -> Self {
        debug_assert_eq!(m.nrows(), 2 * left);
        let r = m.ncols();
        Self { mats: [m.view((0, 0), (left, r)).into_owned(), m.view((left, 0), (left, r)).into_owned()] }
    }

    /// `[A^0, A^1]`, shape `D_left x 2 D_right`, column index `i * D_right + b`.
    pub fn grouped(&self) -> ComplexMatrix {
        let (l, r) = (self.left_dim(), self.right_dim());
        let mut out = ComplexMatrix::zeros(l, 2 * r);
        for i in 0..2 {
            out.view_mut((0, i * r), (l, r)).copy_from(&self.mats[i]);
        }
        out
    }

    pub fn from_grouped(m: &ComplexMatrix, right: usize) -> Self {
        debug_assert_eq!(m.ncols(), 2 * right);
        let l = m.nrows();
        Self { mats: [m.view((0, 0), (l, right)).into_owned(), m.view((0, right), (l, right)).into_owned()] }
    }

    pub fn map(&self, f: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> Self {
        Self { mats: [f(&self.mats[0]), f(&self.mats[1])] }
    }

    /// Frobenius norm of `sum_i A^{i†} A^i - 1`.
    pub fn isometry_error(&self) -> f64 {
        let r = self.right_dim();
        let gram = self.mats[0].adjoint() * &self.mats[0] + self.mats[1].adjoint() * &self.mats[1];
        (gram - linalg::identity(r)).norm()
    }

    pub fn frobenius_norm_sqr(&self) -> f64 {
        self.mats[0].norm_squared() + self.mats[1].norm_squared()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Gauge {
    None,
    LeftCanonical,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mps {
    sites: Vec<SiteTensor>,
    phi_i: ComplexVector,
    phi_f: ComplexVector,
    gauge: Gauge,
}

impl Mps {
    pub fn new(sites: Vec<SiteTensor>, phi_i: ComplexVector, phi_f: ComplexVector) -> Result<Self> {
        if sites.is_empty() {
            return invalid("an MPS needs at least one site");
        }
        if phi_i.len() != sites[0].right_dim() {
            return invalid(format!("phi_i has length {} but site 1 expects {}", phi_i.len(), sites[0].right_dim()));
        }
        if phi_f.len() != sites[sites.len() - 1].left_dim() {
            return invalid(format!(
                "phi_f has length {} but site {} expects {}",
                phi_f.len(),
                sites.len(),
                sites[sites.len() - 1].left_dim()
            ));
        }
        for (k, w) in sites.windows(2).enumerate() {
            if w[1].right_dim() != w[0].left_dim() {
                return invalid(format!(
                    "bond {} mismatch: site {} has {} rows, site {} has {} columns",
                    k + 1,
                    k + 1,
                    w[0].left_dim(),
                    k + 2,
                    w[1].right_dim()
                ));
            }
        }
        Ok(Self { sites, phi_i, phi_f, gauge: Gauge::None })
    }

    /// Tag the gauge after checking the isometry condition at every site.
    pub fn assume_left_canonical(mut self) -> Result<Self> {
        let res = self.isometry_residual();
        if res > tolerance::ISOMETRY {
            return invalid(format!("isometry condition violated (residual {res:.3e})"));
        }
        self.gauge = Gauge::LeftCanonical;
        Ok(self)
    }

    /// Product state `|s_n> ... |s_1>` with all bonds of dimension 1.
    pub fn product(states: &[[C64; 2]]) -> Result<Self> {
        let sites = states
            .iter()
            .map(|s| SiteTensor::new(ComplexMatrix::from_element(1, 1, s[0]), ComplexMatrix::from_element(1, 1, s[1])))
            .collect::<Result<Vec<_>>>()?;
        let one = ComplexVector::from_element(1, ONE);
        Mps::new(sites, one.clone(), one)
    }

    pub fn n(&self) -> usize {
        self.sites.len()
    }

    pub fn sites(&self) -> &[SiteTensor] {
        &self.sites
    }

    /// Site `k` in 1-based numbering.
    pub fn site(&self, k: usize) -> &SiteTensor {
        &self.sites[k - 1]
    }

    pub fn phi_i(&self) -> &ComplexVector {
        &self.phi_i
    }

    pub fn phi_f(&self) -> &ComplexVector {
        &self.phi_f
    }

    pub fn gauge(&self) -> Gauge {
        self.gauge
    }

    /// `[D_0, D_1, ..., D_n]`
    pub fn bond_dims(&self) -> Vec<usize> {
        std::iter::once(self.sites[0].right_dim()).chain(self.sites.iter().map(|s| s.left_dim())).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Largest isometry residual over all sites.
    pub fn isometry_residual(&self) -> f64 {
        self.sites.iter().map(SiteTensor::isometry_error).fold(0.0, f64::max)
    }

    /// Multiply the state by `c` (folded into `phi_i`; the gauge is kept).
    pub fn scaled(&self, c: C64) -> Mps {
        let mut out = self.clone();
        out.phi_i *= c;
        out
    }

    pub fn from_state_vector(psi: &[C64], max_bond: Option<usize>) -> Result<Mps> {
        let len = psi.len();
        if len < 2 || !len.is_power_of_two() {
            return invalid(format!("state vector length {len} is not a power of two >= 2"));
        }
        let n = len.trailing_zeros() as usize;
        if n > tolerance::MAX_DENSE_QUBITS {
            return Err(Error::Capacity(format!("{n} qubits exceed the dense limit")));
        }
        if max_bond == Some(0) {
            return invalid("max_bond must be positive");
        }
        if psi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return invalid("state vector has non-finite entries");
        }
        if psi.iter().all(|z| z.norm_sqr() == 0.0) {
            return invalid("cannot decompose the zero vector");
        }

        // rem: D_k x 2^k, column index runs over (i_k, ..., i_1) with i_k most significant.
        let mut rem = ComplexMatrix::from_row_slice(1, len, psi);
        let mut sites = Vec::with_capacity(n);
        for k in (1..=n).rev() {
            let dk = rem.nrows();
            let half = 1usize << (k - 1);
            let x = ComplexMatrix::from_fn(2 * dk, half, |row, col| {
                let (i, b) = (row / dk, row % dk);
                rem[(b, i * half + col)]
            });
            let dec = linalg::svd(&x)?;
            let mut r = dec.rank(tolerance::RANK).max(1);
            if let Some(m) = max_bond {
                r = r.min(m);
            }
            let dec = dec.truncated(r);
            sites.push(SiteTensor::from_stacked(&dec.u, dk));
            rem = dec.s_vdag();
        }
        sites.reverse();
        let phi_i = rem.column(0).into_owned();
        Ok(Mps { sites, phi_i, phi_f: ComplexVector::from_element(1, ONE), gauge: Gauge::LeftCanonical })
    }

    pub fn to_state_vector(&self) -> Result<Vec<C64>> {
        let n = self.n();
        if n > tolerance::MAX_DENSE_QUBITS {
            return Err(Error::Capacity(format!("{n} qubits exceed the dense limit")));
        }
        // t: D_k x 2^k holding A[k]..A[1] phi_i for every (i_k..i_1).
        let mut t = ComplexMatrix::from_column_slice(self.phi_i.len(), 1, self.phi_i.as_slice());
        for site in &self.sites {
            let cols = t.ncols();
            let mut next = ComplexMatrix::zeros(site.left_dim(), 2 * cols);
            for i in 0..2 {
                next.view_mut((0, i * cols), (site.left_dim(), cols)).copy_from(&(site.mat(i) * &t));
            }
            t = next;
        }
        let amps = self.phi_f.adjoint() * t;
        Ok(amps.iter().copied().collect())
    }

    /// Bring every site into the isometric gauge by a sweep of SVDs from
    /// site `n` down to site 1. Boundary vectors are absorbed, so the result
    /// has `D_0 = D_n = 1`, `phi_f = (1)`, and the norm and global phase of
    /// the state sit in `phi_i`. Bonds are trimmed to their numerical rank.
    pub fn canonicalize_left(&self) -> Result<Mps> {
        let n = self.n();
        let mut sites = self.sites.clone();
        let phi_i = column(&self.phi_i);
        sites[0] = sites[0].map(|m| m * &phi_i);
        let phi_f_dag = column(&self.phi_f).adjoint();
        sites[n - 1] = sites[n - 1].map(|m| &phi_f_dag * m);

        let mut carry = ComplexMatrix::identity(1, 1);
        for k in (0..n).rev() {
            let x = sites[k].stacked();
            let dec = linalg::svd(&x)?;
            let r = dec.rank(tolerance::RANK).max(1);
            let dec = dec.truncated(r);
            let left = sites[k].left_dim();
            sites[k] = SiteTensor::from_stacked(&dec.u, left);
            let rem = dec.s_vdag();
            if k > 0 {
                sites[k - 1] = sites[k - 1].map(|m| &rem * m);
            } else {
                carry = rem;
            }
        }
        Ok(Mps {
            sites,
            phi_i: carry.column(0).into_owned(),
            phi_f: ComplexVector::from_element(1, ONE),
            gauge: Gauge::LeftCanonical,
        })
    }

    pub fn norm(&self) -> f64 {
        overlap_unchecked(self, self).re.max(0.0).sqrt()
    }

    pub fn normalize(&self) -> Result<Mps> {
        let nrm = self.norm();
        if !(nrm > 0.0) || !nrm.is_finite() {
            return Err(Error::DegenerateState(format!("cannot normalize a state with norm {nrm}")));
        }
        Ok(self.scaled(C64::from(1.0 / nrm)))
    }

    /// One-shot bond reduction: a single sweep from site 1 to site `n` that
    /// SVD-truncates each site matrix (with the weight carried from the
    /// previous site) to its `keep` largest singular values, followed by
    /// re-canonicalization and normalization.
    ///
    /// On a left-canonical input the truncated spectra are the Schmidt
    /// coefficients across each bond, so every individual cut is the optimal
    /// rank-`keep` approximation of that matrix.
    pub fn truncate_per_matrix(&self, keep: usize) -> Result<Mps> {
        if keep == 0 {
            return invalid("keep must be at least 1");
        }
        let base = match self.gauge {
            Gauge::LeftCanonical => self.clone(),
            Gauge::None => self.canonicalize_left()?,
        };
        let n = base.n();
        let mut sites = base.sites.clone();
        let phi_i = column(&base.phi_i);
        sites[0] = sites[0].map(|m| m * &phi_i);
        let mut phi_f = base.phi_f.clone();
        for k in 0..n {
            let y = sites[k].grouped();
            let dec = linalg::svd(&y)?;
            let r = dec.rank(tolerance::RANK).max(1).min(keep);
            let dec = dec.truncated(r);
            let right = sites[k].right_dim();
            sites[k] = SiteTensor::from_grouped(&dec.vdag, right);
            let us = dec.u_s();
            if k + 1 < n {
                sites[k + 1] = sites[k + 1].map(|m| m * &us);
            } else {
                phi_f = us.adjoint() * phi_f;
            }
        }
        let out = Mps::new(sites, ComplexVector::from_element(1, ONE), phi_f)?;
        out.canonicalize_left()?.normalize()
    }

    /// Replace site tensors and boundaries without validation; used by
    /// optimizers that maintain the chain invariants themselves.
    pub(crate) fn from_parts(sites: Vec<SiteTensor>, phi_i: ComplexVector, phi_f: ComplexVector, gauge: Gauge) -> Mps {
        Mps { sites, phi_i, phi_f, gauge }
    }
}

/// A vector as an `len x 1` dynamic matrix.
pub fn column(v: &ComplexVector) -> ComplexMatrix {
    ComplexMatrix::from_column_slice(v.len(), 1, v.as_slice())
}

/// `<a|b>` by the transfer-matrix contraction, `O(n D^3)`.
pub fn overlap(a: &Mps, b: &Mps) -> Result<C64> {
    if a.n() != b.n() {
        return invalid(format!("overlap of MPS with {} and {} sites", a.n(), b.n()));
    }
    Ok(overlap_unchecked(a, b))
}

fn overlap_unchecked(a: &Mps, b: &Mps) -> C64 {
    let mut env = a.phi_i.conjugate() * b.phi_i.transpose();
    for (sa, sb) in a.sites.iter().zip(&b.sites) {
        env =
            sa.mat(0).conjugate() * &env * sb.mat(0).transpose() + sa.mat(1).conjugate() * &env * sb.mat(1).transpose();
    }
    (a.phi_f.transpose() * env * b.phi_f.conjugate())[(0, 0)]
}

/// `|<a|b>| / (|a| |b|)`
pub fn fidelity(a: &Mps, b: &Mps) -> Result<f64> {
    let ov = overlap(a, b)?;
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::DegenerateState("fidelity with a zero state".into()));
    }
    Ok(ov.norm() / (na * nb))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ZERO;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dense_inner(a: &[C64], b: &[C64]) -> C64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
    }

    fn phase_free_distance(a: &[C64], b: &[C64]) -> f64 {
        let ov = dense_inner(b, a);
        let ph = if ov.norm() > 0.0 { ov / ov.norm() } else { ONE };
        a.iter().zip(b).map(|(x, y)| (x - y * ph).norm_sqr()).sum::<f64>().sqrt()
    }

    fn random_vector(n: usize, seed: u64) -> Vec<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = linalg::gaussian_vector(1 << n, &mut rng);
        let v = &v / C64::from(v.norm());
        v.iter().copied().collect()
    }

    fn random_mps(n: usize, d: usize, seed: u64) -> Mps {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dims: Vec<usize> = (0..=n).map(|k| if k == 0 || k == n { 1 } else { d }).collect();
        let sites = (0..n)
            .map(|k| {
                SiteTensor::new(
                    linalg::gaussian_matrix(dims[k + 1], dims[k], &mut rng),
                    linalg::gaussian_matrix(dims[k + 1], dims[k], &mut rng),
                )
                .unwrap()
            })
            .collect();
        Mps::new(sites, ComplexVector::from_element(1, ONE), ComplexVector::from_element(1, ONE)).unwrap()
    }

    #[test]
    fn two_site_worked_example() {
        // psi(i2, i1) = <phi_f| A2^{i2} A1^{i1} |phi_i>, index = 2*i2 + i1
        let a1 = SiteTensor::new(
            ComplexMatrix::from_row_slice(2, 1, &[ONE, ZERO]),
            ComplexMatrix::from_row_slice(2, 1, &[ZERO, C64::from(2.0)]),
        )
        .unwrap();
        let a2 = SiteTensor::new(
            ComplexMatrix::from_row_slice(1, 2, &[C64::from(3.0), ZERO]),
            ComplexMatrix::from_row_slice(1, 2, &[ZERO, C64::from(5.0)]),
        )
        .unwrap();
        let one = ComplexVector::from_element(1, ONE);
        let m = Mps::new(vec![a1, a2], one.clone(), one).unwrap();
        let v = m.to_state_vector().unwrap();
        assert_eq!(v, vec![C64::from(3.0), ZERO, ZERO, C64::from(10.0)]);
    }

    #[test]
    fn product_zero_state() {
        let m = Mps::product(&[[ONE, ZERO]; 4]).unwrap();
        let v = m.to_state_vector().unwrap();
        assert_eq!(v[0], ONE);
        assert!(v[1..].iter().all(|z| *z == ZERO));
        let c = Mps::from_state_vector(&v, None).unwrap();
        assert!(c.bond_dims().iter().all(|&d| d == 1));
        assert!(phase_free_distance(&c.to_state_vector().unwrap(), &v) < 1e-14);
    }

    #[test]
    fn ghz_round_trip() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut v = vec![ZERO; 8];
        v[0] = C64::from(s);
        v[7] = C64::from(s);
        let m = Mps::from_state_vector(&v, None).unwrap();
        assert_eq!(m.max_bond(), 2);
        assert!(m.isometry_residual() < 1e-12);
        assert!(phase_free_distance(&m.to_state_vector().unwrap(), &v) < 1e-12);
    }

    #[test]
    fn random_vector_generic_ranks() {
        let n = 8;
        let v = random_vector(n, 5);
        let m = Mps::from_state_vector(&v, None).unwrap();
        let dims = m.bond_dims();
        for (k, &d) in dims.iter().enumerate() {
            assert_eq!(d, (1 << k).min(1 << (n - k)), "bond {k}");
        }
        assert!(phase_free_distance(&m.to_state_vector().unwrap(), &v) < 1e-10);
        assert!(m.isometry_residual() < 1e-10);
    }

    #[test]
    fn from_state_vector_max_bond() {
        let v = random_vector(8, 6);
        let m = Mps::from_state_vector(&v, Some(3)).unwrap();
        assert!(m.max_bond() <= 3);
    }

    #[test]
    fn from_state_vector_errors() {
        assert!(matches!(Mps::from_state_vector(&[ONE; 3], None), Err(Error::InvalidInput(_))));
        assert!(matches!(Mps::from_state_vector(&[ZERO; 4], None), Err(Error::InvalidInput(_))));
        assert!(matches!(Mps::from_state_vector(&[ONE; 4], Some(0)), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn canonicalize_preserves_state() {
        let m = random_mps(6, 4, 9);
        let c = m.canonicalize_left().unwrap();
        assert_eq!(c.gauge(), Gauge::LeftCanonical);
        assert!(c.isometry_residual() < 1e-10);
        let (a, b) = (m.to_state_vector().unwrap(), c.to_state_vector().unwrap());
        let f = dense_inner(&a, &b).norm() / (m.norm() * c.norm());
        assert!((f - 1.0).abs() < 1e-10);
        // canonicalization keeps the state exactly, norm included
        assert!(a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) < 1e-10 * m.norm());
    }

    #[test]
    fn canonicalize_idempotent_and_scale_free() {
        let c = random_mps(5, 3, 10).canonicalize_left().unwrap().normalize().unwrap();
        let cc = c.canonicalize_left().unwrap();
        assert!(cc.isometry_residual() < 1e-12);
        assert!((fidelity(&c, &cc).unwrap() - 1.0).abs() < 1e-12);
        assert!((cc.norm() - 1.0).abs() < 1e-12);

        let scaled = Mps::new(
            c.sites().iter().map(|s| s.map(|m| m * C64::from(3.0))).collect(),
            c.phi_i().clone(),
            c.phi_f().clone(),
        )
        .unwrap();
        let back = scaled.canonicalize_left().unwrap().normalize().unwrap();
        assert!((fidelity(&back, &c).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn overlap_matches_dense() {
        let (a, b) = (random_mps(8, 4, 1), random_mps(8, 4, 2));
        let dense = dense_inner(&a.to_state_vector().unwrap(), &b.to_state_vector().unwrap());
        let ov = overlap(&a, &b).unwrap();
        assert!((ov - dense).norm() < 1e-10 * dense.norm().max(1.0));
    }

    #[test]
    fn overlap_rejects_length_mismatch() {
        assert!(matches!(overlap(&random_mps(3, 2, 1), &random_mps(4, 2, 1)), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn norm_properties() {
        let c = random_mps(6, 3, 4).canonicalize_left().unwrap().normalize().unwrap();
        assert!((c.norm() - 1.0).abs() < 1e-12);
        assert!((c.scaled(C64::from(2.0)).norm() - 2.0).abs() < 1e-12);
        let m = random_mps(6, 3, 4);
        let dense: f64 = m.to_state_vector().unwrap().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!((m.norm() - dense).abs() < 1e-10 * dense);
        assert!(matches!(m.scaled(ZERO).normalize(), Err(Error::DegenerateState(_))));
    }

    #[test]
    fn truncation_edge_cases() {
        let c = random_mps(6, 4, 3).canonicalize_left().unwrap().normalize().unwrap();
        let same = c.truncate_per_matrix(c.max_bond()).unwrap();
        assert!((fidelity(&same, &c).unwrap() - 1.0).abs() < 1e-12);
        let t = c.truncate_per_matrix(2).unwrap();
        assert!(t.max_bond() <= 2);
        assert!(t.isometry_residual() < 1e-10);
        assert!((t.norm() - 1.0).abs() < 1e-12);
        assert!(matches!(c.truncate_per_matrix(0), Err(Error::InvalidInput(_))));

        let p = Mps::product(&[[ONE, ZERO], [ZERO, ONE], [ONE, ONE]]).unwrap().normalize().unwrap();
        let tp = p.truncate_per_matrix(1).unwrap();
        assert!((fidelity(&tp, &p).unwrap() - 1.0).abs() < 1e-12);
    }
}
