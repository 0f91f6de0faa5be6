#![allow(dead_code)]

use std::f64::consts::PI;

use rand::Rng;
use wgsqz::coefficients::{coeffs_1d, CoefficientSet, Direction, EmitterArray, SqueezingSpec};
use wgsqz::dynamics::DensityMatrix;
use wgsqz::liouvillian::{add_drive, build_generator, DriveSpec, Liouvillian};
use wgsqz::{CMatrix, C64};

pub const K: f64 = 2.0 * PI;

pub fn spec(r: f64, theta: f64) -> SqueezingSpec {
    SqueezingSpec::new(r, theta, 0.0, Direction::Bidirectional).unwrap()
}

pub fn coeffs(pos: &[f64], spec: &SqueezingSpec) -> CoefficientSet {
    let e = EmitterArray::new(pos.to_vec(), 1.0).unwrap();
    coeffs_1d(&e, spec, K, 1.0).unwrap()
}

pub fn generator(pos: &[f64], r: f64, theta: f64) -> Liouvillian {
    let s = spec(r, theta);
    build_generator(&coeffs(pos, &s), &s).unwrap()
}

pub fn driven(pos: &[f64], r: f64, theta: f64, rabi: f64) -> Liouvillian {
    let e = EmitterArray::new(pos.to_vec(), 1.0).unwrap();
    add_drive(generator(pos, r, theta), &DriveSpec::new(rabi, 0.0).unwrap(), &e, K).unwrap()
}

/// Same generator with the off-diagonal couplings removed.
pub fn driven_uncoupled(pos: &[f64], r: f64, theta: f64, rabi: f64) -> Liouvillian {
    let s = spec(r, theta);
    let e = EmitterArray::new(pos.to_vec(), 1.0).unwrap();
    let g = build_generator(&coeffs(pos, &s).without_dipole_dipole(), &s).unwrap();
    add_drive(g, &DriveSpec::new(rabi, 0.0).unwrap(), &e, K).unwrap()
}

/// Emitter pair with separation `r12` centred on `rc`.
pub fn pair(rc: f64, r12: f64) -> [f64; 2] {
    [rc + 0.5 * r12, rc - 0.5 * r12]
}

pub fn random_state<R: Rng>(rng: &mut R, dim: usize) -> DensityMatrix {
    let a = CMatrix::from_fn(dim, dim, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let m = &a * a.adjoint();
    let tr = m.trace();
    let mut m = m / tr;
    for i in 0..dim {
        for j in 0..i {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)].conj());
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
        m[(i, i)] = C64::new(m[(i, i)].re, 0.0);
    }
    DensityMatrix::new(m).unwrap()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

pub fn photons_to_degree(n: f64) -> f64 {
    n.sqrt().asinh()
}
