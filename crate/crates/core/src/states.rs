//! Target states: GHZ, W and 1-D cluster states as explicit bond-2 MPS,
//! seeded random MPS, and ground states of the open XXZ chain.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, ComplexMatrix, ComplexVector, C64, ONE, ZERO};
use crate::mps::{Mps, SiteTensor};
use crate::tolerance;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    Ghz,
    W,
    Cluster,
    RandomMps,
    XxzGround,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub kind: TargetKind,
    pub n: usize,
    /// Bond dimension of `random_mps`; the cap passed to `from_state_vector`
    /// for `xxz_ground` (0 means uncapped).
    #[serde(default)]
    pub bond: usize,
    #[serde(default)]
    pub seed: u64,
    /// Anisotropy of `xxz_ground`.
    #[serde(default = "default_delta")]
    pub delta: f64,
}

fn default_delta() -> f64 {
    1.0
}

impl TargetSpec {
    fn new(kind: TargetKind, n: usize) -> Self {
        Self { kind, n, bond: 0, seed: 0, delta: 1.0 }
    }

    pub fn ghz(n: usize) -> Self {
        Self::new(TargetKind::Ghz, n)
    }

    pub fn w(n: usize) -> Self {
        Self::new(TargetKind::W, n)
    }

    pub fn cluster(n: usize) -> Self {
        Self::new(TargetKind::Cluster, n)
    }

    pub fn random_mps(n: usize, bond: usize, seed: u64) -> Self {
        Self { bond, seed, ..Self::new(TargetKind::RandomMps, n) }
    }

    pub fn xxz_ground(n: usize, delta: f64) -> Self {
        Self { delta, ..Self::new(TargetKind::XxzGround, n) }
    }

    pub fn with_bond(mut self, bond: usize) -> Self {
        self.bond = bond;
        self
    }
}

/// Build the requested target as a normalized left-canonical MPS.
pub fn make_target(spec: &TargetSpec) -> Result<Mps> {
    if spec.n < 2 {
        return invalid(format!("targets need n >= 2, got {}", spec.n));
    }
    let raw = match spec.kind {
        TargetKind::Ghz => ghz_raw(spec.n)?,
        TargetKind::W => w_raw(spec.n)?,
        TargetKind::Cluster => cluster_raw(spec.n)?,
        TargetKind::RandomMps => {
            if spec.bond == 0 {
                return invalid("random_mps needs bond >= 1");
            }
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            return random_mps(spec.n, spec.bond, &mut rng);
        }
        TargetKind::XxzGround => {
            let (_, psi) = xxz_ground_state(spec.n, spec.delta)?;
            let cap = (spec.bond > 0).then_some(spec.bond);
            return Mps::from_state_vector(&psi, cap)?.normalize();
        }
    };
    raw.canonicalize_left()?.normalize()
}

fn unit_boundaries(sites: Vec<SiteTensor>) -> Result<Mps> {
    let one = ComplexVector::from_element(1, ONE);
    Mps::new(sites, one.clone(), one)
}

fn mat(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |r, c| C64::from(f(r, c)))
}

fn delta(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

/// Bond index carries the (shared) bit value.
fn ghz_raw(n: usize) -> Result<Mps> {
    let sites = (1..=n)
        .map(|k| {
            let (l, r) = (if k == n { 1 } else { 2 }, if k == 1 { 1 } else { 2 });
            let a = |i: usize| {
                mat(l, r, move |al, be| {
                    let left_ok = k == n || al == i;
                    let right_ok = k == 1 || be == i;
                    if left_ok && right_ok {
                        1.0
                    } else {
                        0.0
                    }
                })
            };
            SiteTensor::new(a(0), a(1))
        })
        .collect::<Result<Vec<_>>>()?;
    unit_boundaries(sites)
}

/// Bond index counts excitations seen so far (0 or 1).
fn w_raw(n: usize) -> Result<Mps> {
    let sites = (1..=n)
        .map(|k| {
            let (l, r) = (if k == n { 1 } else { 2 }, if k == 1 { 1 } else { 2 });
            let out = |al: usize, be: usize, i: usize| -> f64 {
                let before = if k == 1 { 0 } else { be };
                let after = before + i;
                if after > 1 {
                    return 0.0;
                }
                if k == n {
                    delta(after, 1)
                } else {
                    delta(al, after)
                }
            };
            SiteTensor::new(mat(l, r, |a, b| out(a, b, 0)), mat(l, r, |a, b| out(a, b, 1)))
        })
        .collect::<Result<Vec<_>>>()?;
    unit_boundaries(sites)
}

/// `prod_k CZ_{k,k+1} |+>^n`: bond index carries the previous bit, and each
/// site picks up `(-1)^{i_k i_{k-1}}`.
fn cluster_raw(n: usize) -> Result<Mps> {
    let sites = (1..=n)
        .map(|k| {
            let (l, r) = (if k == n { 1 } else { 2 }, if k == 1 { 1 } else { 2 });
            let a = |i: usize| {
                mat(l, r, move |al, be| {
                    let left_ok = k == n || al == i;
                    let prev = if k == 1 { 0 } else { be };
                    if left_ok {
                        if i * prev == 1 {
                            -1.0
                        } else {
                            1.0
                        }
                    } else {
                        0.0
                    }
                })
            };
            SiteTensor::new(a(0), a(1))
        })
        .collect::<Result<Vec<_>>>()?;
    unit_boundaries(sites)
}

/// Generic bond dimensions `min(bond, 2^k, 2^{n-k})`.
pub fn generic_bond_dims(n: usize, bond: usize) -> Vec<usize> {
    let pow = |e: usize| if e >= 63 { usize::MAX } else { 1usize << e };
    (0..=n).map(|k| bond.min(pow(k)).min(pow(n - k))).collect()
}

/// Complex Gaussian site tensors with generic bond dimensions, canonicalized
/// and normalized.
pub fn random_mps<R: Rng + ?Sized>(n: usize, bond: usize, rng: &mut R) -> Result<Mps> {
    if n == 0 || bond == 0 {
        return invalid("random_mps needs n >= 1 and bond >= 1");
    }
    let dims = generic_bond_dims(n, bond);
    let sites = (0..n)
        .map(|k| {
            SiteTensor::new(
                linalg::gaussian_matrix(dims[k + 1], dims[k], rng),
                linalg::gaussian_matrix(dims[k + 1], dims[k], rng),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    unit_boundaries(sites)?.canonicalize_left()?.normalize()
}

/// Sequential-generation isometries producing GHZ_n from ancilla `|0>` with
/// a qubit ancilla that ends decoupled in `|0>`.
pub fn ghz_isometries(n: usize) -> Result<Vec<SiteTensor>> {
    if n < 2 {
        return invalid("GHZ isometries need n >= 2");
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let m = |v: [f64; 4]| ComplexMatrix::from_row_slice(2, 2, &v.map(C64::from));
    (1..=n)
        .map(|k| {
            if k == 1 {
                // |0> -> (|0>|0> + |1>|1>)/sqrt2, completed on |1>
                SiteTensor::new(m([h, 0.0, 0.0, h]), m([0.0, h, h, 0.0]))
            } else if k < n {
                // copy the ancilla bit onto the qubit
                SiteTensor::new(m([1.0, 0.0, 0.0, 0.0]), m([0.0, 0.0, 0.0, 1.0]))
            } else {
                // move the bit onto the last qubit and reset the ancilla
                SiteTensor::new(m([1.0, 0.0, 0.0, 0.0]), m([0.0, 1.0, 0.0, 0.0]))
            }
        })
        .collect()
}

/// Lowest eigenpair of `H = sum_k (X_k X_{k+1} + Y_k Y_{k+1} + delta Z_k Z_{k+1})`
/// on an open chain, in Pauli units.
///
/// `H` conserves the number of up spins, so each magnetization sector is
/// diagonalized densely. Degenerate ground states are resolved towards the
/// sector with fewer excitations and, within it, the lowest eigenvector
/// index; the sign is fixed so the largest-magnitude amplitude is positive.
pub fn xxz_ground_state(n: usize, delta: f64) -> Result<(f64, Vec<C64>)> {
    if n < 2 {
        return invalid("the XXZ chain needs n >= 2");
    }
    if n > tolerance::MAX_XXZ_SITES {
        return Err(Error::Capacity(format!(
            "exact diagonalization limited to n <= {}, got {n}",
            tolerance::MAX_XXZ_SITES
        )));
    }
    if !delta.is_finite() {
        return invalid("anisotropy must be finite");
    }
    let dim = 1usize << n;
    // (energy, sector, vector over sector basis, sector basis)
    let mut candidates: Vec<(f64, usize, Vec<f64>, Vec<usize>)> = Vec::new();
    for m in 0..=n {
        let basis: Vec<usize> = (0..dim).filter(|x| x.count_ones() as usize == m).collect();
        let index = |x: usize| basis.binary_search(&x).expect("state in sector");
        let mut h = DMatrix::<f64>::zeros(basis.len(), basis.len());
        for (col, &x) in basis.iter().enumerate() {
            for k in 0..n - 1 {
                let (b0, b1) = ((x >> k) & 1, (x >> (k + 1)) & 1);
                if b0 == b1 {
                    h[(col, col)] += delta;
                } else {
                    h[(col, col)] -= delta;
                    let y = x ^ (0b11 << k);
                    h[(index(y), col)] += 2.0;
                }
            }
        }
        let dec =
            SymmetricEigen::try_new(h, f64::EPSILON, tolerance::KERNEL_MAX_ITER).ok_or(Error::NumericalFailure {
                what: "xxz sector eigensolver",
                iterations: tolerance::KERNEL_MAX_ITER,
            })?;
        let (best, &e) = dec.eigenvalues.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("nonempty sector");
        candidates.push((e, m, dec.eigenvectors.column(best).iter().copied().collect(), basis));
    }
    let e_min = candidates.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    let scale = e_min.abs().max(1.0);
    let tied: Vec<_> = candidates.iter().filter(|c| c.0 - e_min <= 1e-10 * scale).collect();
    if tied.len() > 1 {
        log::warn!(
            "XXZ ground state (n={n}, delta={delta}) is degenerate across {} magnetization sectors; taking sector m={}",
            tied.len(),
            tied[0].1
        );
    }
    let (e, _, vec, basis) = tied[0];
    let mut psi = vec![ZERO; dim];
    for (&x, &a) in basis.iter().zip(vec) {
        psi[x] = C64::from(a);
    }
    let pivot = psi.iter().map(|z| z.re).max_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap_or(1.0);
    if pivot < 0.0 {
        psi.iter_mut().for_each(|z| *z = -*z);
    }
    Ok((*e, psi))
}
