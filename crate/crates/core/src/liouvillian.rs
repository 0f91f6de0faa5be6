//! Superoperator form of the squeezed-reservoir master equation.
//!
//! Density matrices are vectorised by stacking columns, so
//! `vec(A rho B) = (B^T ⊗ A) vec(rho)`.

use nalgebra::SymmetricEigen;
use nalgebra_sparse::CsrMatrix;

use crate::coefficients::{CoefficientSet, EmitterArray, SqueezingSpec};
use crate::error::{Error, Result};
use crate::operators::{add_kron, hilbert_dim, lowering, raising, unvectorize, vectorize};
use crate::{CMatrix, C64};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Resonant coherent drive `V = (Omega/2) e^{-i alpha} sum_i e^{-i k r_i} S_i^- + h.c.`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSpec {
    pub rabi: f64,
    pub phase: f64,
}

impl DriveSpec {
    pub fn new(rabi: f64, phase: f64) -> Result<Self> {
        if !(rabi.is_finite() && rabi >= 0.0) {
            return Err(Error::invalid("rabi", format!("Rabi frequency must be >= 0, got {rabi}")));
        }
        if !phase.is_finite() {
            return Err(Error::invalid("phase", "drive phase must be finite"));
        }
        Ok(Self { rabi, phase })
    }
}

#[derive(Debug, Clone)]
pub struct Liouvillian {
    matrix: CMatrix,
    n_emitters: usize,
    coeffs: CoefficientSet,
    theta: f64,
    drive: Option<DriveSpec>,
}

impl Liouvillian {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn n_emitters(&self) -> usize {
        self.n_emitters
    }

    /// Hilbert-space dimension `2^n`.
    pub fn hilbert_dim(&self) -> usize {
        hilbert_dim(self.n_emitters)
    }

    pub fn coefficients(&self) -> &CoefficientSet {
        &self.coeffs
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn drive(&self) -> Option<DriveSpec> {
        self.drive
    }

    /// `L(rho)` for an arbitrary operator `rho`.
    /// Compressed-row copy of the generator for repeated products.
    pub fn to_sparse(&self) -> CsrMatrix<C64> {
        CsrMatrix::from(&self.matrix)
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        unvectorize(&(&self.matrix * vectorize(rho)))
    }

    /// Wrap a raw superoperator, e.g. one read back from a dump.
    pub fn from_parts(matrix: CMatrix, coeffs: CoefficientSet, theta: f64) -> Result<Self> {
        coeffs.check_consistent()?;
        let n = coeffs.n_emitters();
        let d2 = hilbert_dim(n).pow(2);
        if matrix.nrows() != d2 || matrix.ncols() != d2 {
            return Err(Error::DimensionMismatch {
                expected: d2,
                found: matrix.nrows(),
            });
        }
        Ok(Self {
            matrix,
            n_emitters: n,
            coeffs,
            theta,
            drive: None,
        })
    }
}

/// Superoperator of `-c/2 (rho A B + A B rho - 2 B rho A)`.
fn add_dissipator_term(out: &mut CMatrix, c: C64, a: &CMatrix, b: &CMatrix, id: &CMatrix) {
    let ab = a * b;
    add_kron(out, -0.5 * c, &ab.transpose(), id);
    add_kron(out, -0.5 * c, id, &ab);
    add_kron(out, c, &a.transpose(), b);
}

/// Superoperator of `-i [h, rho]`.
fn add_commutator(out: &mut CMatrix, h: &CMatrix, id: &CMatrix) {
    add_kron(out, -I, id, h);
    add_kron(out, I, &h.transpose(), id);
}

/// Phase multiplying `M gamma'_ij` on the `S+ S+` branch.
fn two_photon_phase(coeffs: &CoefficientSet, theta: f64) -> C64 {
    coeffs.global_phase * C64::from_polar(1.0, -theta)
}

/// Assemble the generator term by term from the collective master equation.
pub fn build_generator(coeffs: &CoefficientSet, spec: &SqueezingSpec) -> Result<Liouvillian> {
    coeffs.check_consistent()?;
    spec.validate()?;
    let n = coeffs.n_emitters();
    let d = hilbert_dim(n);
    let id = CMatrix::identity(d, d);
    let up: Vec<CMatrix> = (0..n).map(|i| raising(n, i)).collect();
    let down: Vec<CMatrix> = (0..n).map(|i| lowering(n, i)).collect();
    let (np, m) = (coeffs.n_photon, coeffs.m_mag);
    let phase = two_photon_phase(coeffs, spec.theta);

    let mut out = CMatrix::zeros(d * d, d * d);
    for i in 0..n {
        for j in 0..n {
            if i != j && coeffs.lambda[(i, j)] != 0.0 {
                let h = &up[i] * &down[j] * C64::new(coeffs.lambda[(i, j)], 0.0);
                add_commutator(&mut out, &h, &id);
            }
            let g = coeffs.gamma[(i, j)];
            add_dissipator_term(&mut out, C64::new(g * (1.0 + np), 0.0), &up[i], &down[j], &id);
            add_dissipator_term(&mut out, C64::new(g * np, 0.0), &down[i], &up[j], &id);
            let gp = coeffs.gamma_prime[(i, j)] * m;
            add_dissipator_term(&mut out, phase * gp, &up[i], &up[j], &id);
            add_dissipator_term(&mut out, phase.conj() * gp, &down[i], &down[j], &id);
        }
    }
    Ok(Liouvillian {
        matrix: out,
        n_emitters: n,
        coeffs: coeffs.clone(),
        theta: spec.theta,
        drive: None,
    })
}

/// Drive Hamiltonian for the given emitter positions.
pub fn drive_hamiltonian(drive: &DriveSpec, emitters: &EmitterArray, k0z: f64) -> CMatrix {
    let n = emitters.len();
    let d = hilbert_dim(n);
    let mut v = CMatrix::zeros(d, d);
    for (i, &r) in emitters.positions().iter().enumerate() {
        let amp = C64::from_polar(0.5 * drive.rabi, -drive.phase - k0z * r);
        v += lowering(n, i) * amp;
    }
    &v + v.adjoint()
}

/// Add `-i [V, rho]` for a resonant coherent drive.
pub fn add_drive(gen: Liouvillian, drive: &DriveSpec, emitters: &EmitterArray, k0z: f64) -> Result<Liouvillian> {
    if emitters.len() != gen.n_emitters {
        return Err(Error::DimensionMismatch {
            expected: gen.n_emitters,
            found: emitters.len(),
        });
    }
    let mut gen = gen;
    gen.drive = Some(*drive);
    if drive.rabi == 0.0 {
        return Ok(gen);
    }
    let d = gen.hilbert_dim();
    let v = drive_hamiltonian(drive, emitters, k0z);
    add_commutator(&mut gen.matrix, &v, &CMatrix::identity(d, d));
    Ok(gen)
}

/// Coherent part `H = sum_{i != j} Lambda_ij S_i^+ S_j^-`.
pub fn dipole_hamiltonian(coeffs: &CoefficientSet) -> CMatrix {
    let n = coeffs.n_emitters();
    let d = hilbert_dim(n);
    let mut h = CMatrix::zeros(d, d);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                h += raising(n, i) * lowering(n, j) * C64::new(coeffs.lambda[(i, j)], 0.0);
            }
        }
    }
    h
}

/// Kossakowski matrix of the dissipator over the jump operators
/// `(S_1^+, ..., S_n^+, S_1^-, ..., S_n^-)`.
#[derive(Debug, Clone)]
pub struct HMatrix {
    n_emitters: usize,
    entries: CMatrix,
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
}

impl HMatrix {
    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn n_emitters(&self) -> usize {
        self.n_emitters
    }

    /// Jump operator basis in the order used by the matrix.
    pub fn jump_basis(&self) -> Vec<CMatrix> {
        let n = self.n_emitters;
        (0..n).map(|i| raising(n, i)).chain((0..n).map(|i| lowering(n, i))).collect()
    }
}

pub fn h_matrix(coeffs: &CoefficientSet, spec: &SqueezingSpec) -> Result<HMatrix> {
    coeffs.check_consistent()?;
    let n = coeffs.n_emitters();
    let (np, m) = (coeffs.n_photon, coeffs.m_mag);
    let phase = two_photon_phase(coeffs, spec.theta);
    let mut h = CMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            h[(j, i)] = C64::new(np * coeffs.gamma[(i, j)], 0.0);
            h[(n + j, n + i)] = C64::new((1.0 + np) * coeffs.gamma[(i, j)], 0.0);
            h[(j, n + i)] = phase * (m * coeffs.gamma_prime[(i, j)]);
            h[(n + j, i)] = phase.conj() * (m * coeffs.gamma_prime[(i, j)]);
        }
    }
    let eig = SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = CMatrix::from_fn(2 * n, 2 * n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(HMatrix {
        n_emitters: n,
        entries: h,
        eigenvalues,
        eigenvectors,
    })
}

/// One decay channel `rate * D[operator]`.
#[derive(Debug, Clone)]
pub struct LindbladChannel {
    pub rate: f64,
    pub operator: CMatrix,
}

/// Diagonalise `h` into independent channels `L_k = sum_n u_nk L_n`.
pub fn lindblad_diagonalize(h: &HMatrix, tolerance: f64) -> Result<Vec<LindbladChannel>> {
    if let Some((index, &rate)) = h.eigenvalues.iter().enumerate().find(|(_, &z)| z < -tolerance) {
        return Err(Error::NegativeRate { index, rate });
    }
    let basis = h.jump_basis();
    let d = hilbert_dim(h.n_emitters);
    Ok(h.eigenvalues
        .iter()
        .enumerate()
        .map(|(k, &rate)| {
            let operator = basis
                .iter()
                .enumerate()
                .fold(CMatrix::zeros(d, d), |acc, (nidx, op)| acc + op * h.eigenvectors[(nidx, k)]);
            LindbladChannel { rate, operator }
        })
        .collect())
}

/// Generator `-i[H, .] + sum_k rate_k (L rho L^† - {L^† L, rho}/2)`.
pub fn generator_from_channels(hamiltonian: &CMatrix, channels: &[LindbladChannel]) -> CMatrix {
    let d = hamiltonian.nrows();
    let id = CMatrix::identity(d, d);
    let mut out = CMatrix::zeros(d * d, d * d);
    add_commutator(&mut out, hamiltonian, &id);
    for ch in channels {
        let l = &ch.operator;
        let ldl = l.adjoint() * l;
        let r = C64::new(ch.rate, 0.0);
        add_kron(&mut out, r, &l.conjugate(), l);
        add_kron(&mut out, -0.5 * r, &id, &ldl);
        add_kron(&mut out, -0.5 * r, &ldl.transpose(), &id);
    }
    out
}

/// Leading bytes of a generator dump.
pub const DUMP_MAGIC: [u8; 8] = *b"WGSQZLV1";
/// Largest superoperator dimension accepted when reading a dump (six emitters).
pub const DUMP_MAX_DIM: u64 = 4096;

/// Serialise a square matrix: 8-byte magic, little-endian `u64` dimension,
/// then column-major `(re, im)` pairs of little-endian `f64`.
pub fn write_dump(matrix: &CMatrix) -> Vec<u8> {
    assert_eq!(matrix.nrows(), matrix.ncols(), "dump requires a square matrix");
    let mut out = Vec::with_capacity(16 + 16 * matrix.len());
    out.extend_from_slice(&DUMP_MAGIC);
    out.extend_from_slice(&(matrix.nrows() as u64).to_le_bytes());
    for z in matrix.iter() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

pub fn read_dump(bytes: &[u8]) -> Result<CMatrix> {
    if bytes.len() < 16 {
        return Err(Error::MalformedDump(format!("header needs 16 bytes, got {}", bytes.len())));
    }
    if bytes[..8] != DUMP_MAGIC {
        return Err(Error::MalformedDump("bad magic".into()));
    }
    let dim = u64::from_le_bytes(bytes[8..16].try_into().expect("slice of 8"));
    if dim == 0 || dim > DUMP_MAX_DIM {
        return Err(Error::MalformedDump(format!("dimension {dim} out of range")));
    }
    let dim = dim as usize;
    let expected = 16 + dim * dim * 16;
    if bytes.len() != expected {
        return Err(Error::MalformedDump(format!(
            "expected {expected} bytes for dimension {dim}, got {}",
            bytes.len()
        )));
    }
    let f = |k: usize| f64::from_le_bytes(bytes[k..k + 8].try_into().expect("slice of 8"));
    let data: Vec<C64> = (0..dim * dim)
        .map(|e| {
            let k = 16 + 16 * e;
            C64::new(f(k), f(k + 8))
        })
        .collect();
    Ok(CMatrix::from_column_slice(dim, dim, &data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{coeffs_1d, Direction};
    use std::f64::consts::PI;

    const K: f64 = 2.0 * PI;

    fn single(delta: f64, r: f64) -> Liouvillian {
        let e = EmitterArray::new(vec![delta], 1.0).unwrap();
        let spec = SqueezingSpec::with_degree(r).unwrap();
        build_generator(&coeffs_1d(&e, &spec, K, 1.0).unwrap(), &spec).unwrap()
    }

    #[test]
    fn vacuum_single_emitter_matches_textbook_decay() {
        let gen = single(0.3, 0.0);
        let lo = lowering(1, 0);
        let id = CMatrix::identity(2, 2);
        let mut expected = CMatrix::zeros(4, 4);
        // L rho = S rho S^† - {S^† S, rho}/2
        add_kron(&mut expected, C64::new(1.0, 0.0), &lo.conjugate(), &lo);
        let n = lo.adjoint() * &lo;
        add_kron(&mut expected, C64::new(-0.5, 0.0), &id, &n);
        add_kron(&mut expected, C64::new(-0.5, 0.0), &n.transpose(), &id);
        assert!((gen.matrix() - expected).camax() < 1e-15);
    }

    #[test]
    fn population_block_ignores_two_photon_terms() {
        // indices of |g><g| and |e><e| in vec(rho)
        let diag = [0usize, 3];
        let a = single(0.11, 0.5);
        let e = EmitterArray::new(vec![0.11], 1.0).unwrap();
        let spec = SqueezingSpec::with_degree(0.5).unwrap();
        let thermal = coeffs_1d(&e, &spec, K, 1.0).unwrap().with_thermal_photons(0.5f64.sinh().powi(2)).unwrap();
        let b = build_generator(&thermal, &spec).unwrap();
        for &r in &diag {
            for c in 0..4 {
                assert!((a.matrix()[(r, c)] - b.matrix()[(r, c)]).norm() < 1e-15);
                assert!((a.matrix()[(c, r)] - b.matrix()[(c, r)]).norm() < 1e-15 || !diag.contains(&c));
            }
        }
    }

    #[test]
    fn zero_drive_is_bitwise_identity() {
        let gen = single(0.2, 0.5);
        let e = EmitterArray::new(vec![0.2], 1.0).unwrap();
        let driven = add_drive(gen.clone(), &DriveSpec::new(0.0, 0.3).unwrap(), &e, K).unwrap();
        assert_eq!(gen.matrix(), driven.matrix());
    }

    #[test]
    fn drive_count_mismatch() {
        let gen = single(0.2, 0.5);
        let e = EmitterArray::new(vec![0.2, 0.4], 1.0).unwrap();
        assert!(matches!(
            add_drive(gen, &DriveSpec::new(1.0, 0.0).unwrap(), &e, K),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn h_matrix_without_squeezing() {
        let e = EmitterArray::new(vec![0.0, 0.17], 1.0).unwrap();
        let spec = SqueezingSpec::with_degree(0.0).unwrap();
        let c = coeffs_1d(&e, &spec, K, 1.0).unwrap();
        let h = h_matrix(&c, &spec).unwrap();
        let g12 = (K * 0.17).cos();
        let mut expect = vec![0.0, 0.0, 1.0 - g12, 1.0 + g12];
        expect.sort_by(f64::total_cmp);
        for (a, b) in h.eigenvalues().iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn dump_round_trip_and_rejections() {
        let e = EmitterArray::new(vec![0.0, 0.3], 1.0).unwrap();
        let spec = SqueezingSpec::new(0.4, 0.2, 0.1, Direction::Bidirectional).unwrap();
        let gen = build_generator(&coeffs_1d(&e, &spec, K, 1.0).unwrap(), &spec).unwrap();
        let bytes = write_dump(gen.matrix());
        assert_eq!(bytes.len(), 16 + 16 * 256);
        assert_eq!(&read_dump(&bytes).unwrap(), gen.matrix());
        assert!(read_dump(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(read_dump(&bad).is_err());
        let mut huge = bytes[..16].to_vec();
        huge[8..16].copy_from_slice(&u64::MAX.to_le_bytes());
        assert!(read_dump(&huge).is_err());
    }
}
