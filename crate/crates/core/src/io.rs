//! JSON and CSV formats.
//!
//! Every JSON document carries `"schema": "seqmps/1"`. Complex numbers are
//! `[re, im]` pairs and matrices are arrays of rows. JSON floats use the
//! shortest representation that parses back to the same `f64`; CSV floats
//! are written with 17 significant digits.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{ComplexMatrix, ComplexVector, C64};
use crate::mps::{Gauge, Mps, SiteTensor};
use crate::seqgen::{GeneratorModel, Protocol, Step};

pub const SCHEMA: &str = "seqmps/1";

#[derive(Serialize, Deserialize)]
struct Versioned<T> {
    schema: String,
    #[serde(flatten)]
    body: T,
}

/// Serialize `value` with the schema tag added at the top level.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(&Versioned { schema: SCHEMA.to_string(), body: value })?)
}

/// Parse a document written by [`to_json`], checking the schema tag.
pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let doc: Versioned<T> = serde_json::from_str(text)?;
    if doc.schema != SCHEMA {
        return invalid(format!("unsupported schema {:?}, expected {SCHEMA:?}", doc.schema));
    }
    Ok(doc.body)
}

pub type MatrixRows = Vec<Vec<C64>>;

pub fn matrix_to_rows(m: &ComplexMatrix) -> MatrixRows {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn matrix_from_rows(rows: &MatrixRows) -> Result<ComplexMatrix> {
    let nr = rows.len();
    let nc = rows.first().map_or(0, Vec::len);
    if nr == 0 || nc == 0 || rows.iter().any(|r| r.len() != nc) {
        return invalid("matrix rows must be nonempty and of equal length");
    }
    Ok(ComplexMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
}

fn vector_from(v: &[C64]) -> ComplexVector {
    ComplexVector::from_column_slice(v)
}

#[derive(Serialize, Deserialize)]
struct SiteFile {
    a0: MatrixRows,
    a1: MatrixRows,
}

#[derive(Serialize, Deserialize)]
struct MpsFile {
    n: usize,
    bond_dims: Vec<usize>,
    tensors: Vec<SiteFile>,
    phi_i: Vec<C64>,
    phi_f: Vec<C64>,
    gauge_tag: Gauge,
}

pub fn mps_to_json(m: &Mps) -> Result<String> {
    let file = MpsFile {
        n: m.n(),
        bond_dims: m.bond_dims(),
        tensors: m
            .sites()
            .iter()
            .map(|s| SiteFile { a0: matrix_to_rows(s.mat(0)), a1: matrix_to_rows(s.mat(1)) })
            .collect(),
        phi_i: m.phi_i().iter().copied().collect(),
        phi_f: m.phi_f().iter().copied().collect(),
        gauge_tag: m.gauge(),
    };
    to_json(&file)
}

pub fn mps_from_json(text: &str) -> Result<Mps> {
    let file: MpsFile = from_json(text)?;
    if file.tensors.len() != file.n {
        return invalid(format!("n = {} but {} tensors given", file.n, file.tensors.len()));
    }
    let sites = file
        .tensors
        .iter()
        .map(|s| SiteTensor::new(matrix_from_rows(&s.a0)?, matrix_from_rows(&s.a1)?))
        .collect::<Result<Vec<_>>>()?;
    let m = Mps::new(sites, vector_from(&file.phi_i), vector_from(&file.phi_f))?;
    if m.bond_dims() != file.bond_dims {
        return invalid(format!("bond_dims {:?} disagree with the tensors {:?}", file.bond_dims, m.bond_dims()));
    }
    match file.gauge_tag {
        Gauge::LeftCanonical => m.assume_left_canonical(),
        Gauge::None => Ok(m),
    }
}

/// A local unitary with ZYZ Euler angles for a qubit unitary. The angles are
/// informational and ignored when reading.
#[derive(Serialize, Deserialize)]
struct LocalFile {
    matrix: MatrixRows,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    euler_zyz: Option<[f64; 4]>,
}

impl LocalFile {
    fn from_matrix(u: &ComplexMatrix) -> Self {
        let euler_zyz = (u.shape() == (2, 2)).then(|| zyz_angles(u));
        Self { matrix: matrix_to_rows(u), euler_zyz }
    }
}

#[derive(Serialize, Deserialize)]
struct ProtocolFile {
    n: usize,
    model: GeneratorModel,
    couplings: Vec<Vec<f64>>,
    local_ancilla: Vec<Option<LocalFile>>,
    /// Acts on the fresh qubit before the entangler.
    local_qubit_pre: Vec<Option<LocalFile>>,
    /// Acts on the qubit after the entangler.
    local_qubit_post: Vec<Option<LocalFile>>,
    qubit_inits: Vec<Vec<C64>>,
    phi_i: Vec<C64>,
    fixed_gate: Option<MatrixRows>,
}

pub fn protocol_to_json(p: &Protocol) -> Result<String> {
    let locals = |f: fn(&Step) -> &Option<ComplexMatrix>| -> Vec<Option<LocalFile>> {
        p.steps.iter().map(|s| f(s).as_ref().map(LocalFile::from_matrix)).collect()
    };
    let file = ProtocolFile {
        n: p.n(),
        model: p.model,
        couplings: p.steps.iter().map(|s| s.couplings.clone()).collect(),
        local_ancilla: locals(|s| &s.ancilla),
        local_qubit_pre: locals(|s| &s.qubit_before),
        local_qubit_post: locals(|s| &s.qubit_after),
        qubit_inits: p.steps.iter().map(|s| s.qubit_init.iter().copied().collect()).collect(),
        phi_i: p.phi_i.iter().copied().collect(),
        fixed_gate: p.fixed_gate.as_ref().map(matrix_to_rows),
    };
    to_json(&file)
}

pub fn protocol_from_json(text: &str) -> Result<Protocol> {
    let file: ProtocolFile = from_json(text)?;
    let model = GeneratorModel::new(file.model.kind, file.model.d_ancilla)?;
    let n = file.n;
    let lens = [
        file.couplings.len(),
        file.local_ancilla.len(),
        file.local_qubit_pre.len(),
        file.local_qubit_post.len(),
        file.qubit_inits.len(),
    ];
    if lens.iter().any(|&l| l != n) {
        return invalid(format!("per-step arrays must all have length n = {n}"));
    }
    let local = |l: &Option<LocalFile>| l.as_ref().map(|l| matrix_from_rows(&l.matrix)).transpose();
    let steps = (0..n)
        .map(|k| {
            Ok(Step {
                couplings: file.couplings[k].clone(),
                ancilla: local(&file.local_ancilla[k])?,
                qubit_after: local(&file.local_qubit_post[k])?,
                qubit_before: local(&file.local_qubit_pre[k])?,
                qubit_init: vector_from(&file.qubit_inits[k]),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let p = Protocol {
        model,
        steps,
        phi_i: vector_from(&file.phi_i),
        fixed_gate: file.fixed_gate.as_ref().map(matrix_from_rows).transpose()?,
    };
    p.validate()?;
    Ok(p)
}

/// `(phase, alpha, beta, gamma)` with
/// `U = exp(i phase) Rz(alpha) Ry(beta) Rz(gamma)` and
/// `Rz(t) = diag(exp(-i t/2), exp(i t/2))`.
pub fn zyz_angles(u: &ComplexMatrix) -> [f64; 4] {
    let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
    let phase = det.arg() / 2.0;
    let v = u * C64::from_polar(1.0, -phase);
    let beta = 2.0 * v[(1, 0)].norm().atan2(v[(0, 0)].norm());
    let sum = if v[(1, 1)].norm() > 1e-12 { 2.0 * v[(1, 1)].arg() } else { 0.0 };
    let diff = if v[(1, 0)].norm() > 1e-12 { 2.0 * v[(1, 0)].arg() } else { 0.0 };
    [phase, (sum + diff) / 2.0, beta, (sum - diff) / 2.0]
}

/// A float for CSV output: 17 significant digits, exponent form.
pub fn csv_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write rows of already-formatted fields as CSV.
pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

/// Two-column data blocks for gnuplot, separated by two blank lines so each
/// block is addressable with `index`.
pub fn gnuplot(blocks: &[(String, Vec<(f64, f64)>)]) -> String {
    let mut out = String::new();
    for (i, (title, points)) in blocks.iter().enumerate() {
        if i > 0 {
            out.push_str("\n\n");
        }
        out.push_str(&format!("# {title}\n"));
        for (x, y) in points {
            out.push_str(&format!("{} {}\n", csv_float(*x), csv_float(*y)));
        }
    }
    out
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::InvalidInput(format!("i/o: {e}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use crate::states::{make_target, TargetSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mps_round_trip_is_exact() {
        let m = make_target(&TargetSpec::random_mps(5, 3, 4)).unwrap();
        let text = mps_to_json(&m).unwrap();
        assert!(text.contains("\"schema\": \"seqmps/1\""));
        let back = mps_from_json(&text).unwrap();
        assert_eq!(back.sites(), m.sites());
        assert_eq!(back.phi_i(), m.phi_i());
        assert_eq!(back.gauge(), m.gauge());
        assert_eq!(mps_to_json(&back).unwrap(), text);
    }

    #[test]
    fn wrong_schema_rejected() {
        let m = make_target(&TargetSpec::ghz(2)).unwrap();
        let text = mps_to_json(&m).unwrap().replace("seqmps/1", "seqmps/0");
        assert!(mps_from_json(&text).is_err());
    }

    #[test]
    fn zyz_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rz = |t: f64| {
            ComplexMatrix::from_row_slice(
                2,
                2,
                &[C64::from_polar(1.0, -t / 2.0), C64::from(0.0), C64::from(0.0), C64::from_polar(1.0, t / 2.0)],
            )
        };
        let ry = |t: f64| {
            let (s, c) = (t / 2.0).sin_cos();
            ComplexMatrix::from_row_slice(2, 2, &[C64::from(c), C64::from(-s), C64::from(s), C64::from(c)])
        };
        let mut cases: Vec<ComplexMatrix> = (0..50).map(|_| linalg::haar_unitary(2, &mut rng)).collect();
        cases.push(linalg::identity(2));
        cases.push(linalg::pauli(1));
        for u in cases {
            let [ph, a, b, g] = zyz_angles(&u);
            let rebuilt = rz(a) * ry(b) * rz(g) * C64::from_polar(1.0, ph);
            assert!((rebuilt - &u).norm() < 1e-10, "{u}");
        }
    }

    #[test]
    fn csv_floats_have_17_digits() {
        assert_eq!(csv_float(0.1), "1.0000000000000001e-1");
        assert_eq!(csv_float(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn gnuplot_blocks() {
        let text = gnuplot(&[("a".into(), vec![(1.0, 0.5)]), ("b".into(), vec![(2.0, 0.25), (3.0, 0.0)])]);
        let blocks: Vec<&str> = text.split("\n\n\n").collect();
        assert_eq!(blocks.len(), 2);
        assert_eq!(blocks[1].lines().count(), 3);
        assert!(blocks[0].starts_with("# a\n1.0"));
    }
}
