//! Dense complex linear algebra for the small matrices that appear in site
//! tensors and ancilla-qubit unitaries.
//!
//! The decompositions are thin wrappers over `nalgebra` that add input
//! validation, a deterministic ordering of spectra, and the two derived
//! operations the optimizers need: the exponential of a Hermitian generator
//! and the unitary Procrustes solve.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::tolerance;

pub type C64 = Complex<f64>;
pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Thin singular value decomposition `a = u * diag(s) * vdag`.
#[derive(Clone, Debug)]
pub struct Svd {
    /// `rows x k` with orthonormal columns.
    pub u: ComplexMatrix,
    /// `k = min(rows, cols)` non-negative values, descending.
    pub s: Vec<f64>,
    /// `k x cols` with orthonormal rows.
    pub vdag: ComplexMatrix,
}

impl Svd {
    pub fn rank(&self, rel_tol: f64) -> usize {
        match self.s.first() {
            Some(&s0) if s0 > 0.0 => self.s.iter().take_while(|&&x| x > rel_tol * s0).count(),
            _ => 0,
        }
    }

    /// Keep the leading `r` singular triplets.
    pub fn truncated(&self, r: usize) -> Svd {
        let r = r.min(self.s.len());
        Svd { u: self.u.columns(0, r).into_owned(), s: self.s[..r].to_vec(), vdag: self.vdag.rows(0, r).into_owned() }
    }

    /// `diag(s) * vdag`
    pub fn s_vdag(&self) -> ComplexMatrix {
        let mut out = self.vdag.clone();
        for (mut row, &s) in out.row_iter_mut().zip(&self.s) {
            row *= C64::from(s);
        }
        out
    }

    /// `u * diag(s)`
    pub fn u_s(&self) -> ComplexMatrix {
        let mut out = self.u.clone();
        for (mut col, &s) in out.column_iter_mut().zip(&self.s) {
            col *= C64::from(s);
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        &self.u_s() * &self.vdag
    }
}

pub fn all_finite(a: &ComplexMatrix) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn svd(a: &ComplexMatrix) -> Result<Svd> {
    if a.is_empty() {
        return invalid("svd of an empty matrix");
    }
    if !all_finite(a) {
        return invalid("svd input has non-finite entries");
    }
    let dec = SVD::try_new(a.clone(), true, true, f64::EPSILON, tolerance::KERNEL_MAX_ITER)
        .ok_or(Error::NumericalFailure { what: "svd", iterations: tolerance::KERNEL_MAX_ITER })?;
    let u = dec.u.expect("u requested");
    let vt = dec.v_t.expect("v_t requested");
    let k = dec.singular_values.len();

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| dec.singular_values[j].total_cmp(&dec.singular_values[i]));

    let mut su = ComplexMatrix::zeros(u.nrows(), k);
    let mut svt = ComplexMatrix::zeros(k, vt.ncols());
    let mut s = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        su.set_column(dst, &u.column(src));
        svt.set_row(dst, &vt.row(src));
        s.push(dec.singular_values[src].max(0.0));
    }
    Ok(Svd { u: su, s, vdag: svt })
}

/// Largest absolute entry of `h - h†`.
pub fn hermiticity_error(h: &ComplexMatrix) -> f64 {
    let d = h - h.adjoint();
    d.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigendecomposition of a Hermitian matrix: eigenvalues ascending, with the
/// matching eigenvectors as the columns of a unitary matrix.
pub fn eigh(h: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    if !h.is_square() || h.is_empty() {
        return invalid(format!("eigh needs a nonempty square matrix, got {}x{}", h.nrows(), h.ncols()));
    }
    if !all_finite(h) {
        return invalid("eigh input has non-finite entries");
    }
    let scale = h.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let herr = hermiticity_error(h);
    if herr > tolerance::HERMITIAN * scale {
        return invalid(format!("matrix is not Hermitian (|h - h†|max = {herr:.3e})"));
    }
    // Symmetrize so tiny anti-Hermitian noise cannot leak into the kernel.
    let sym = (h + h.adjoint()) * C64::from(0.5);
    let dec = SymmetricEigen::try_new(sym, f64::EPSILON, tolerance::KERNEL_MAX_ITER)
        .ok_or(Error::NumericalFailure { what: "eigh", iterations: tolerance::KERNEL_MAX_ITER })?;
    let n = dec.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| dec.eigenvalues[i].total_cmp(&dec.eigenvalues[j]));
    let mut vecs = ComplexMatrix::zeros(n, n);
    let mut vals = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &dec.eigenvectors.column(src));
        vals.push(dec.eigenvalues[src]);
    }
    Ok((vals, vecs))
}

/// `exp(-i * scale * h)` for Hermitian `h`, evaluated through its spectrum.
pub fn expm_hermitian(h: &ComplexMatrix, scale: f64) -> Result<ComplexMatrix> {
    if !scale.is_finite() {
        return invalid("expm_hermitian scale must be finite");
    }
    let (vals, vecs) = eigh(h)?;
    Ok(apply_phases(&vecs, &vals, scale))
}

/// `V diag(exp(-i scale lambda)) V†` from a precomputed spectrum.
pub fn apply_phases(vecs: &ComplexMatrix, vals: &[f64], scale: f64) -> ComplexMatrix {
    let mut left = vecs.clone();
    for (mut col, &lam) in left.column_iter_mut().zip(vals) {
        col *= C64::from_polar(1.0, -scale * lam);
    }
    &left * vecs.adjoint()
}

/// The unitary maximizing `Re tr(U * env)`.
///
/// With `env† = u s vdag` the maximizer is `u * vdag` and the maximum equals
/// the sum of singular values.
pub fn procrustes_unitary(env: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !env.is_square() {
        return invalid("procrustes_unitary needs a square environment");
    }
    let dec = svd(&env.adjoint())?;
    Ok(&dec.u * &dec.vdag)
}

/// The unitary closest to `m` in Frobenius norm (the unitary polar factor).
pub fn nearest_unitary(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let dec = svd(m)?;
    Ok(&dec.u * &dec.vdag)
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Frobenius norm of `u† u - 1`.
pub fn unitarity_error(u: &ComplexMatrix) -> f64 {
    let n = u.ncols();
    (u.adjoint() * u - ComplexMatrix::identity(n, n)).norm()
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

/// Entries with independent standard normal real and imaginary parts.
pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

pub fn gaussian_vector<R: Rng + ?Sized>(len: usize, rng: &mut R) -> ComplexVector {
    ComplexVector::from_fn(len, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the phases of
/// `diag(R)` moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    let qr = gaussian_matrix(d, d, rng).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { ONE };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// Pauli matrices with `sigma_0 = 1`.
pub fn pauli(j: usize) -> ComplexMatrix {
    let (a, b, c, d) = match j {
        0 => (ONE, ZERO, ZERO, ONE),
        1 => (ZERO, ONE, ONE, ZERO),
        2 => (ZERO, -I, I, ZERO),
        3 => (ONE, ZERO, ZERO, -ONE),
        _ => panic!("pauli index {j} out of range"),
    };
    ComplexMatrix::from_row_slice(2, 2, &[a, b, c, d])
}

/// `sigma^+ = (sigma_1 + i sigma_2) / 2 = |0><1|`.
pub fn sigma_plus() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO])
}

pub fn sigma_minus() -> ComplexMatrix {
    sigma_plus().adjoint()
}

/// Hermitian operator basis of a `d`-level system: the identity followed by
/// the `d^2 - 1` generalized Gell-Mann matrices. For `d = 2` this is exactly
/// `(sigma_0, sigma_1, sigma_2, sigma_3)`.
pub fn hermitian_basis(d: usize) -> Vec<ComplexMatrix> {
    if d == 2 {
        return (0..4).map(pauli).collect();
    }
    let mut out = vec![identity(d)];
    for j in 0..d {
        for k in (j + 1)..d {
            let mut sym = ComplexMatrix::zeros(d, d);
            sym[(j, k)] = ONE;
            sym[(k, j)] = ONE;
            out.push(sym);
            let mut anti = ComplexMatrix::zeros(d, d);
            anti[(j, k)] = -I;
            anti[(k, j)] = I;
            out.push(anti);
        }
    }
    for l in 1..d {
        let norm = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut diag = ComplexMatrix::zeros(d, d);
        for j in 0..l {
            diag[(j, j)] = C64::from(norm);
        }
        diag[(l, l)] = C64::from(-(l as f64) * norm);
        out.push(diag);
    }
    out
}

pub fn basis_vector(d: usize, k: usize) -> ComplexVector {
    let mut v = ComplexVector::zeros(d);
    v[k] = ONE;
    v
}
