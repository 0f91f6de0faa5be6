//! Steady states, two-emitter closed forms and entanglement measures.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{SymmetricEigen, SVD};
use rayon::prelude::*;

use crate::dynamics::{hermitize, DensityMatrix, StateTolerance};
use crate::error::{Error, Result};
use crate::liouvillian::Liouvillian;
use crate::operators::{unvectorize, vectorize};
use crate::{CMatrix, CVector, C64};

/// Singular values below this fraction of the largest count as kernel.
pub const KERNEL_THRESHOLD: f64 = 1e-10;
/// Largest accepted `max |L(rho_ss)|`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

const STEADY_TOLERANCE: StateTolerance = StateTolerance {
    hermitian: 1e-12,
    trace: 1e-12,
    eigenvalue: 1e-9,
};

/// Kernel of the generator, normalised to a density matrix when unique.
pub fn numeric_steady_state(gen: &Liouvillian) -> Result<DensityMatrix> {
    let l = gen.matrix();
    let svd = SVD::new(l.clone(), false, true);
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let smax = svd.singular_values.max().max(1.0);
    let kernel: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] <= KERNEL_THRESHOLD * smax)
        .collect();
    let vectors: Vec<CVector> = kernel.iter().map(|&k| v_t.row(k).adjoint()).collect();
    match vectors.len() {
        0 => Err(Error::ToleranceFailure {
            t: f64::INFINITY,
            reason: format!(
                "no kernel found; smallest singular value {:.3e}",
                svd.singular_values.min()
            ),
        }),
        1 => {
            let rho = unvectorize(&vectors[0]);
            let tr = rho.trace();
            if tr.norm() < 1e-8 {
                return Err(Error::ToleranceFailure {
                    t: f64::INFINITY,
                    reason: "kernel element is traceless".into(),
                });
            }
            let rho = hermitize(&(rho / tr));
            let residual = (l * vectorize(&rho)).camax();
            if residual > RESIDUAL_TOLERANCE {
                return Err(Error::ToleranceFailure {
                    t: f64::INFINITY,
                    reason: format!("steady-state residual {residual:.3e}"),
                });
            }
            DensityMatrix::with_tolerance(rho, STEADY_TOLERANCE)
        }
        dimension => {
            let basis = vectors
                .iter()
                .map(|v| {
                    let m = unvectorize(v);
                    let n = m.norm();
                    m / C64::new(n, 0.0)
                })
                .collect();
            Err(Error::DegenerateKernel {
                dimension,
                basis,
                dark_modes: dark_modes(&gen.coefficients().gamma),
            })
        }
    }
}

/// Spectral projector onto the generator kernel, `P = K (Y^† K)^{-1} Y^†`
/// with right and left null vectors `K` and `Y`. `exp(L t) -> P` as
/// `t -> inf`, also when the kernel is degenerate.
#[derive(Debug, Clone)]
pub struct KernelProjector {
    right: CMatrix,
    left_adj: CMatrix,
}

impl KernelProjector {
    pub fn new(gen: &Liouvillian) -> Result<Self> {
        let l = gen.matrix();
        let svd = SVD::new(l.clone(), true, true);
        let u = svd.u.as_ref().expect("left singular vectors requested");
        let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
        let smax = svd.singular_values.max().max(1.0);
        let kernel: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&k| svd.singular_values[k] <= KERNEL_THRESHOLD * smax)
            .collect();
        if kernel.is_empty() {
            return Err(Error::ToleranceFailure {
                t: f64::INFINITY,
                reason: "generator has no kernel".into(),
            });
        }
        let dim = l.nrows();
        let right = CMatrix::from_fn(dim, kernel.len(), |r, c| v_t[(kernel[c], r)].conj());
        let left = CMatrix::from_fn(dim, kernel.len(), |r, c| u[(r, kernel[c])]);
        let overlap = left.adjoint() * &right;
        let inv = overlap.try_inverse().ok_or_else(|| Error::ToleranceFailure {
            t: f64::INFINITY,
            reason: "kernel is not semisimple".into(),
        })?;
        Ok(Self {
            right,
            left_adj: inv * left.adjoint(),
        })
    }

    pub fn dimension(&self) -> usize {
        self.right.ncols()
    }

    pub fn matrix(&self) -> CMatrix {
        &self.right * &self.left_adj
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        &self.right * (&self.left_adj * v)
    }
}

/// Long-time limit of the evolution started from `rho0`.
pub fn steady_state_from(gen: &Liouvillian, rho0: &DensityMatrix) -> Result<DensityMatrix> {
    if rho0.dim() != gen.hilbert_dim() {
        return Err(Error::DimensionMismatch {
            expected: gen.hilbert_dim(),
            found: rho0.dim(),
        });
    }
    let p = KernelProjector::new(gen)?;
    let rho = hermitize(&unvectorize(&p.apply(&vectorize(rho0.matrix()))));
    DensityMatrix::with_tolerance(rho, StateTolerance { hermitian: 1e-10, trace: 1e-10, eigenvalue: 1e-9 })
}

/// Null eigenvectors of the collective decay matrix.
pub fn dark_modes(gamma: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    let eig = SymmetricEigen::new(gamma.clone());
    let scale = eig.eigenvalues.amax().max(1e-300);
    (0..eig.eigenvalues.len())
        .filter(|&k| eig.eigenvalues[k].abs() <= 1e-10 * scale)
        .map(|k| eig.eigenvectors.column(k).iter().copied().collect())
        .collect()
}

/// Reduced two-emitter description in the `{|gg>, |ee>, |+>, |->}` basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoEmitterSteady {
    pub rho_gg: f64,
    pub rho_ee: f64,
    pub rho_pp: f64,
    pub rho_mm: f64,
    /// `2 Re(conj(phase) <ee|rho|gg>)`.
    pub rho_u: f64,
}

impl TwoEmitterSteady {
    /// Project a two-emitter state; `phase` is the two-photon phase of the
    /// reservoir (`e^{2 i k0z R}` for an unrotated source).
    pub fn project(rho: &DensityMatrix, phase: C64) -> Result<Self> {
        if rho.dim() != 4 {
            return Err(Error::DimensionMismatch { expected: 4, found: rho.dim() });
        }
        let m = rho.matrix();
        // |ge> = 1, |eg> = 2
        let sym = 0.5 * (m[(1, 1)].re + m[(2, 2)].re);
        let cross = m[(1, 2)].re;
        Ok(Self {
            rho_gg: m[(0, 0)].re,
            rho_ee: m[(3, 3)].re,
            rho_pp: sym + cross,
            rho_mm: sym - cross,
            rho_u: 2.0 * (phase.conj() * m[(3, 0)]).re,
        })
    }

    /// X-state density matrix with a real `|ee><gg|` coherence `rho_u / 2`.
    pub fn to_density_matrix(&self) -> Result<DensityMatrix> {
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = C64::new(self.rho_gg, 0.0);
        m[(3, 3)] = C64::new(self.rho_ee, 0.0);
        let sym = 0.5 * (self.rho_pp + self.rho_mm);
        let cross = 0.5 * (self.rho_pp - self.rho_mm);
        m[(1, 1)] = C64::new(sym, 0.0);
        m[(2, 2)] = C64::new(sym, 0.0);
        m[(1, 2)] = C64::new(cross, 0.0);
        m[(2, 1)] = C64::new(cross, 0.0);
        m[(3, 0)] = C64::new(0.5 * self.rho_u, 0.0);
        m[(0, 3)] = C64::new(0.5 * self.rho_u, 0.0);
        DensityMatrix::with_tolerance(m, StateTolerance { trace: 1e-10, ..Default::default() })
    }

    /// `|rho_u| - (rho_++ + rho_--)`, unclamped; positive means entangled.
    pub fn entanglement_margin(&self) -> f64 {
        self.rho_u.abs() - (self.rho_pp + self.rho_mm)
    }

    /// Concurrence of the X state without a `|+><-|` coherence.
    pub fn concurrence(&self) -> f64 {
        self.entanglement_margin().max(0.0)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        [
            self.rho_gg - other.rho_gg,
            self.rho_ee - other.rho_ee,
            self.rho_pp - other.rho_pp,
            self.rho_mm - other.rho_mm,
            self.rho_u - other.rho_u,
        ]
        .iter()
        .fold(0.0, |a, x| a.max(x.abs()))
    }
}

fn check_photons(n: f64) -> Result<()> {
    if !(n.is_finite() && n >= 0.0) {
        return Err(Error::invalid("N", format!("photon number must be >= 0, got {n}")));
    }
    Ok(())
}

/// Boltzmann populations `(gg, ee, ++, --)` of a thermal reservoir.
pub fn thermal_populations(n: f64) -> (f64, f64, f64, f64) {
    let z = (1.0 + 2.0 * n).powi(2);
    let mid = n * (n + 1.0) / z;
    ((1.0 + n).powi(2) / z, n * n / z, mid, mid)
}

/// Pure-squeezing (`M^2 = N(N+1)`) steady state of two emitters with centre of
/// mass `r_c`; independent of their separation.
pub fn analytic_two_emitter_steady(n: f64, k0z: f64, r_c: f64) -> Result<TwoEmitterSteady> {
    check_photons(n)?;
    let c2 = (2.0 * k0z * r_c).cos();
    let c4 = (4.0 * k0z * r_c).cos();
    let s2 = (2.0 * k0z * r_c).sin();
    let nn = n * (1.0 + n);
    let den = -1.0 - 2.0 * n - 2.0 * n * n + 2.0 * nn * c4;
    let rho_ee = n * (-1.0 - n - 2.0 * n * n + (-1.0 + n + 2.0 * n * n) * c4) / (2.0 * (1.0 + 2.0 * n) * den);
    let rho_pm = -nn * s2 * s2 / den;
    let rho_u = 2.0 * nn.sqrt() * c2 / ((1.0 + 2.0 * n) * den);
    Ok(TwoEmitterSteady {
        rho_gg: 1.0 - rho_ee - 2.0 * rho_pm,
        rho_ee,
        rho_pp: rho_pm,
        rho_mm: rho_pm,
        rho_u,
    })
}

/// Shift of the `|ee>`/`|gg>` populations away from the thermal values.
pub fn delta_rho(n: f64, k0z: f64, r_c: f64) -> Result<f64> {
    check_photons(n)?;
    let c2 = (2.0 * k0z * r_c).cos();
    let c4 = (4.0 * k0z * r_c).cos();
    let nn = n * (n + 1.0);
    Ok(nn * c2 * c2 / ((1.0 + 2.0 * n).powi(2) * (1.0 + 2.0 * n + 2.0 * n * n - 2.0 * nn * c4)))
}

/// `(sqrt(N+1)|gg> + (-1)^(n+1) sqrt(N)|ee>) / sqrt(2N+1)`.
pub fn noon_state_vector(n: f64, parity: u32) -> Result<CVector> {
    check_photons(n)?;
    let sign = if parity.is_multiple_of(2) { -1.0 } else { 1.0 };
    let norm = (2.0 * n + 1.0).sqrt();
    let mut psi = CVector::zeros(4);
    psi[0] = C64::new((n + 1.0).sqrt() / norm, 0.0);
    psi[3] = C64::new(sign * n.sqrt() / norm, 0.0);
    Ok(psi)
}

pub fn noon_limit_state(n: f64, parity: u32) -> Result<DensityMatrix> {
    DensityMatrix::pure(&noon_state_vector(n, parity)?)
}

/// Wootters concurrence of a two-qubit state.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: rho.dim() });
    }
    let m = rho.matrix();
    // sigma_y (x) sigma_y is real and antidiagonal with signs (-1, 1, 1, -1)
    let mut yy = CMatrix::zeros(4, 4);
    for (k, s) in [-1.0, 1.0, 1.0, -1.0].into_iter().enumerate() {
        yy[(k, 3 - k)] = C64::new(s, 0.0);
    }
    let tilde = &yy * m.conjugate() * &yy;
    let prod = m * tilde;
    let eig = prod
        .eigenvalues()
        .ok_or_else(|| Error::ToleranceFailure { t: 0.0, reason: "Schur decomposition did not converge".into() })?;
    let mut lam: Vec<f64> = eig.iter().map(|z| z.re.max(0.0).sqrt()).collect();
    lam.sort_by(|a, b| b.total_cmp(a));
    Ok((lam[0] - lam[1] - lam[2] - lam[3]).clamp(0.0, 1.0))
}

/// `<psi|rho|psi>` for a normalised copy of `psi`.
pub fn fidelity(rho: &DensityMatrix, psi: &CVector) -> Result<f64> {
    if psi.len() != rho.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: psi.len() });
    }
    let nrm = psi.norm_squared();
    if !(nrm > 0.0) {
        return Err(Error::NonPhysicalState("zero target vector".into()));
    }
    Ok(((psi.adjoint() * rho.matrix() * psi)[(0, 0)].re / nrm).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseMapPoint {
    pub n_photon: f64,
    pub rc_over_lambda: f64,
    pub concurrence: f64,
}

/// Steady concurrence over an `N x r_c` grid, `r_c` in units of `lambda_0z`.
/// Rows come out `N`-major in grid order.
pub fn entanglement_phase_map(n_grid: &[f64], rc_grid: &[f64]) -> Result<Vec<PhaseMapPoint>> {
    for &n in n_grid {
        check_photons(n)?;
    }
    if rc_grid.iter().any(|r| !r.is_finite()) {
        return Err(Error::invalid("rc", "grid must be finite"));
    }
    let k = 2.0 * PI;
    let pairs: Vec<(f64, f64)> = n_grid.iter().flat_map(|&n| rc_grid.iter().map(move |&r| (n, r))).collect();
    pairs
        .par_iter()
        .map(|&(n, rc)| {
            Ok(PhaseMapPoint {
                n_photon: n,
                rc_over_lambda: rc,
                concurrence: analytic_two_emitter_steady(n, k, rc)?.concurrence(),
            })
        })
        .collect()
}

pub fn phase_map_csv(points: &[PhaseMapPoint]) -> String {
    let mut s = String::from("N,rc_over_lambda0z,concurrence\n");
    for p in points {
        let _ = writeln!(s, "{:.16e},{:.16e},{:.16e}", p.n_photon, p.rc_over_lambda, p.concurrence);
    }
    s
}

/// Distance from a standing-wave antinode (`r_c = n lambda_0z / 4`) at which
/// the steady concurrence vanishes, in units of `lambda_0z`.
pub fn vanishing_width(n: f64) -> Result<f64> {
    check_photons(n)?;
    if n == 0.0 {
        return Err(Error::invalid("N", "no entanglement forms without squeezing"));
    }
    let k = 2.0 * PI;
    let f = |rc: f64| analytic_two_emitter_steady(n, k, rc).map(|s| s.entanglement_margin());
    let (mut lo, mut hi) = (0.0, 0.125);
    if f(lo)? <= 0.0 || f(hi)? >= 0.0 {
        return Err(Error::ToleranceFailure { t: 0.0, reason: "no sign change in (0, 1/8)".into() });
    }
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{coeffs_1d, EmitterArray, SqueezingSpec};
    use crate::dynamics::InitialState;
    use crate::liouvillian::build_generator;
    use approx::assert_relative_eq;

    const K: f64 = 2.0 * PI;

    fn generator(pos: Vec<f64>, r: f64) -> Liouvillian {
        let e = EmitterArray::new(pos, 1.0).unwrap();
        let spec = SqueezingSpec::with_degree(r).unwrap();
        build_generator(&coeffs_1d(&e, &spec, K, 1.0).unwrap(), &spec).unwrap()
    }

    #[test]
    fn vacuum_single_emitter_relaxes_to_ground() {
        let rho = numeric_steady_state(&generator(vec![0.2], 0.0)).unwrap();
        assert!((rho.matrix()[(0, 0)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn antiphase_pair_has_degenerate_kernel() {
        // cos(k r12) = -1
        match numeric_steady_state(&generator(vec![0.0, 0.5], 0.5)) {
            Err(Error::DegenerateKernel { dimension, dark_modes, basis }) => {
                assert!(dimension >= 2);
                assert_eq!(basis.len(), dimension);
                assert_eq!(dark_modes.len(), 1);
                let v = &dark_modes[0];
                assert!((v[0] - v[1]).abs() < 1e-12);
            }
            other => panic!("expected degenerate kernel, got {other:?}"),
        }
    }

    #[test]
    fn closed_form_limits() {
        let s = analytic_two_emitter_steady(0.0, K, 0.3).unwrap();
        assert_eq!((s.rho_gg, s.rho_ee, s.rho_pp, s.rho_u), (1.0, 0.0, 0.0, 0.0));
        let s = analytic_two_emitter_steady(1.3, K, 0.125).unwrap();
        assert!(s.rho_u.abs() < 1e-15);
        assert_eq!(s.concurrence(), 0.0);
        let s = analytic_two_emitter_steady(1.0, K, 0.0).unwrap();
        assert_relative_eq!(s.rho_gg, 2.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(s.rho_u, -2.0 * 2f64.sqrt() / 3.0, epsilon = 1e-15);
        assert_relative_eq!(s.concurrence(), 2.0 * 2f64.sqrt() / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn thermal_shift_reproduces_closed_form() {
        for &(n, rc) in &[(1.0, 0.0), (0.4, 0.07), (2.5, 0.31)] {
            let s = analytic_two_emitter_steady(n, K, rc).unwrap();
            let (gg, ee, pp, _) = thermal_populations(n);
            let d = delta_rho(n, K, rc).unwrap();
            assert!((ee + d - s.rho_ee).abs() < 1e-12);
            assert!((gg + d - s.rho_gg).abs() < 1e-12);
            assert!((pp - d - s.rho_pp).abs() < 1e-12);
        }
        assert_eq!(delta_rho(0.0, K, 0.1).unwrap(), 0.0);
        assert!(delta_rho(1.0, K, 0.125).unwrap().abs() < 1e-30);
    }

    #[test]
    fn noon_state_properties() {
        let s = noon_limit_state(1.0, 0).unwrap();
        let p = TwoEmitterSteady::project(&s, C64::new(1.0, 0.0)).unwrap();
        assert_relative_eq!(p.rho_u, -2.0 * 2f64.sqrt() / 3.0, epsilon = 1e-15);
        assert_relative_eq!(p.rho_ee, 1.0 / 3.0, epsilon = 1e-15);
        let ground = noon_limit_state(0.0, 1).unwrap();
        assert_eq!(ground.matrix()[(0, 0)].re, 1.0);
        let mut bell = CVector::zeros(4);
        bell[0] = C64::new(1.0, 0.0);
        bell[3] = C64::new(-1.0, 0.0);
        let f = fidelity(&noon_limit_state(1e6, 0).unwrap(), &bell).unwrap();
        assert!(f >= 1.0 - 1e-6);
    }

    #[test]
    fn concurrence_reference_states() {
        let mut bell = CVector::zeros(4);
        bell[0] = C64::new(1.0, 0.0);
        bell[3] = C64::new(-1.0, 0.0);
        let rho = DensityMatrix::pure(&bell).unwrap();
        assert_relative_eq!(concurrence(&rho).unwrap(), 1.0, epsilon = 1e-10);
        let mut ge = CVector::zeros(4);
        ge[1] = C64::new(1.0, 0.0);
        assert!(concurrence(&DensityMatrix::pure(&ge).unwrap()).unwrap() < 1e-10);
        for p in [InitialState::PlusX, InitialState::PlusY, InitialState::FullyMixed, InitialState::Excited] {
            assert!(concurrence(&DensityMatrix::preset(p, 2).unwrap()).unwrap() < 1e-7);
        }
        let s = analytic_two_emitter_steady(1.0, K, 0.25).unwrap();
        let w = concurrence(&s.to_density_matrix().unwrap()).unwrap();
        assert_relative_eq!(w, 2.0 * 2f64.sqrt() / 3.0, epsilon = 1e-8);
    }

    #[test]
    fn fidelity_limits() {
        let psi = noon_state_vector(0.7, 1).unwrap();
        let rho = DensityMatrix::pure(&psi).unwrap();
        assert_relative_eq!(fidelity(&rho, &psi).unwrap(), 1.0, epsilon = 1e-14);
        let mixed = DensityMatrix::preset(InitialState::FullyMixed, 2).unwrap();
        assert_relative_eq!(fidelity(&mixed, &psi).unwrap(), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn width_at_one_photon() {
        let w = vanishing_width(1.0).unwrap();
        assert!((w - 0.04).abs() < 0.005, "{w}");
        assert!(vanishing_width(0.0).is_err());
    }

    #[test]
    fn phase_map_layout() {
        let pts = entanglement_phase_map(&[0.5, 1.0], &[0.0, 0.125, 0.25]).unwrap();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[3].n_photon, 1.0);
        assert_eq!(pts[1].concurrence, 0.0);
        assert!(pts[3].concurrence > pts[0].concurrence);
        assert!(phase_map_csv(&pts).starts_with("N,rc_over_lambda0z,concurrence\n"));
    }

    #[test]
    fn projector_is_idempotent_and_recovers_unique_state() {
        let gen = generator(vec![0.0, 0.21], 0.6);
        let p = KernelProjector::new(&gen).unwrap();
        assert_eq!(p.dimension(), 1);
        let m = p.matrix();
        assert!((&m * &m - &m).iter().all(|z| z.norm() < 1e-10));
        let start = DensityMatrix::preset(InitialState::Excited, 2).unwrap();
        let a = steady_state_from(&gen, &start).unwrap();
        let b = numeric_steady_state(&gen).unwrap();
        assert!((a.matrix() - b.matrix()).iter().all(|z| z.norm() < 1e-10));
    }

    #[test]
    fn degenerate_kernel_limit_depends_on_start() {
        let gen = generator(vec![0.0, 0.5], 0.5);
        assert!(KernelProjector::new(&gen).unwrap().dimension() >= 2);
        let a = steady_state_from(&gen, &DensityMatrix::preset(InitialState::Ground, 2).unwrap()).unwrap();
        let differs = [InitialState::BellPlus, InitialState::BellMinus].iter().any(|&s| {
            let b = steady_state_from(&gen, &DensityMatrix::preset(s, 2).unwrap()).unwrap();
            (a.matrix() - b.matrix()).iter().any(|z| z.norm() > 1e-3)
        });
        assert!(differs);
    }
}
