//! Collective spin operators on the `2^n` dimensional emitter space.
//!
//! Emitter `i` (zero based) occupies bit `n - 1 - i` of the basis index, with
//! the bit set for the excited state. For two emitters the basis reads
//! `|gg>, |ge>, |eg>, |ee>`.

use crate::{CMatrix, C64};

pub fn hilbert_dim(n_emitters: usize) -> usize {
    1 << n_emitters
}

fn bit(n_emitters: usize, i: usize) -> usize {
    1 << (n_emitters - 1 - i)
}

/// Lowering operator `S_i^- = |g><e|` of emitter `i`.
pub fn lowering(n_emitters: usize, i: usize) -> CMatrix {
    assert!(i < n_emitters, "emitter index {i} out of range");
    let d = hilbert_dim(n_emitters);
    let b = bit(n_emitters, i);
    let mut m = CMatrix::zeros(d, d);
    for k in (0..d).filter(|k| k & b != 0) {
        m[(k ^ b, k)] = C64::new(1.0, 0.0);
    }
    m
}

/// Raising operator `S_i^+ = |e><g|` of emitter `i`.
pub fn raising(n_emitters: usize, i: usize) -> CMatrix {
    lowering(n_emitters, i).adjoint()
}

/// Pauli operators of emitter `i` with `sigma_z = |e><e| - |g><g|`.
pub fn sigma_x(n_emitters: usize, i: usize) -> CMatrix {
    let lo = lowering(n_emitters, i);
    &lo + lo.adjoint()
}

pub fn sigma_y(n_emitters: usize, i: usize) -> CMatrix {
    let lo = lowering(n_emitters, i);
    let j = C64::new(0.0, 1.0);
    lo.adjoint() * (-j) + lo * j
}

pub fn sigma_z(n_emitters: usize, i: usize) -> CMatrix {
    let d = hilbert_dim(n_emitters);
    let b = bit(n_emitters, i);
    CMatrix::from_diagonal(&crate::CVector::from_fn(d, |k, _| {
        C64::new(if k & b != 0 { 1.0 } else { -1.0 }, 0.0)
    }))
}

/// Collective lowering operator `sum_i S_i^-`.
pub fn collective_lowering(n_emitters: usize) -> CMatrix {
    (0..n_emitters).fold(CMatrix::zeros(hilbert_dim(n_emitters), hilbert_dim(n_emitters)), |acc, i| {
        acc + lowering(n_emitters, i)
    })
}

/// Add `c * (a ⊗ b)` into `out`, visiting only nonzero entries of the factors.
pub fn add_kron(out: &mut CMatrix, c: C64, a: &CMatrix, b: &CMatrix) {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    assert_eq!(out.shape(), (ar * br, ac * bc), "kron target has wrong shape");
    if c == C64::new(0.0, 0.0) {
        return;
    }
    let nz = |m: &CMatrix| {
        let mut v = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let x = m[(i, j)];
                if x.re != 0.0 || x.im != 0.0 {
                    v.push((i, j, x));
                }
            }
        }
        v
    };
    let bnz = nz(b);
    for (ia, ja, xa) in nz(a) {
        let s = c * xa;
        for &(ib, jb, xb) in &bnz {
            out[(ia * br + ib, ja * bc + jb)] += s * xb;
        }
    }
}

/// Column-stacking vectorisation of a square matrix.
pub fn vectorize(m: &CMatrix) -> crate::CVector {
    crate::CVector::from_column_slice(m.as_slice())
}

pub fn unvectorize(v: &crate::CVector) -> CMatrix {
    let d = (v.len() as f64).sqrt().round() as usize;
    assert_eq!(d * d, v.len(), "vector length is not a perfect square");
    CMatrix::from_column_slice(d, d, v.as_slice())
}
