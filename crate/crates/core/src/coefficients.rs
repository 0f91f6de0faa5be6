//! Squeezing moments and the collective rate matrices entering the master
//! equation.
//!
//! Axial coordinates are measured from the midpoint of the two squeezing
//! sources, which sit at `-R` and `+R`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest emitter count supported by the dense superoperator path.
pub const MAX_EMITTERS: usize = 6;

/// Below this argument the free-space kernels switch to their Taylor series.
pub const SERIES_SWITCH: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Direction {
    /// Squeezed light injected from both ends of the guide.
    #[default]
    Bidirectional,
    /// Only the forward-propagating branch is squeezed and coupled.
    Unidirectional,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezingSpec {
    /// Degree of squeezing `r >= 0`.
    pub r: f64,
    /// Squeezing phase `theta` in radians.
    pub theta: f64,
    /// Half-separation `R` of the two sources.
    pub source_half_separation: f64,
    pub direction: Direction,
}

impl SqueezingSpec {
    pub fn new(r: f64, theta: f64, source_half_separation: f64, direction: Direction) -> Result<Self> {
        let spec = Self {
            r,
            theta,
            source_half_separation,
            direction,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Bidirectional squeezing with `theta = R = 0`.
    pub fn with_degree(r: f64) -> Result<Self> {
        Self::new(r, 0.0, 0.0, Direction::Bidirectional)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r.is_finite() && self.r >= 0.0) {
            return Err(Error::invalid("r", format!("squeezing degree must be >= 0, got {}", self.r)));
        }
        if !(self.r.sinh() * self.r.cosh()).is_finite() {
            return Err(Error::invalid("r", format!("squeezing degree {} overflows the photon number", self.r)));
        }
        if !self.theta.is_finite() {
            return Err(Error::invalid("theta", "squeezing phase must be finite"));
        }
        if !self.source_half_separation.is_finite() {
            return Err(Error::invalid("R", "source half-separation must be finite"));
        }
        Ok(())
    }
}

/// Reservoir moments `N = sinh^2 r`, `M = sinh r cosh r` and the phase that
/// multiplies `M` on the `S+ S+` branch of the two-photon dissipator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezingMoments {
    pub n_photon: f64,
    pub m_mag: f64,
    pub phase: Complex64,
}

pub fn squeezing_moments(spec: &SqueezingSpec, k0z: f64) -> Result<SqueezingMoments> {
    spec.validate()?;
    let (s, c) = (spec.r.sinh(), spec.r.cosh());
    let phase = Complex64::from_polar(1.0, 2.0 * k0z * spec.source_half_separation - spec.theta);
    Ok(SqueezingMoments {
        n_photon: s * s,
        m_mag: s * c,
        phase,
    })
}

/// Emitters on the axis of a guide, sharing one transition frequency and a
/// dipole along `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmitterArray {
    positions: Vec<f64>,
    omega0: f64,
}

impl EmitterArray {
    pub fn new(positions: Vec<f64>, omega0: f64) -> Result<Self> {
        if positions.is_empty() || positions.len() > MAX_EMITTERS {
            return Err(Error::invalid(
                "positions",
                format!("need between 1 and {MAX_EMITTERS} emitters, got {}", positions.len()),
            ));
        }
        if let Some(p) = positions.iter().find(|p| !p.is_finite()) {
            return Err(Error::invalid("positions", format!("non-finite position {p}")));
        }
        if !(omega0.is_finite() && omega0 > 0.0) {
            return Err(Error::invalid("omega0", "transition frequency must be positive"));
        }
        Ok(Self { positions, omega0 })
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Centre of mass `(r_1 + ... + r_n) / n`.
    pub fn center_of_mass(&self) -> f64 {
        self.positions.iter().sum::<f64>() / self.len() as f64
    }
}

/// Collective coefficients of the master equation.
///
/// `gamma`, `lambda` and `gamma_prime` are real symmetric. The propagation
/// phase `e^{2 i k R}` is stored once in `global_phase`; the squeezing phase
/// is folded in at generator assembly.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    pub gamma: DMatrix<f64>,
    pub lambda: DMatrix<f64>,
    pub gamma_prime: DMatrix<f64>,
    pub n_photon: f64,
    pub m_mag: f64,
    pub global_phase: Complex64,
}

impl CoefficientSet {
    pub fn n_emitters(&self) -> usize {
        self.gamma.nrows()
    }

    /// Replace the squeezed reservoir by a thermal one with mean occupation `n`
    /// (no two-photon correlations).
    pub fn with_thermal_photons(mut self, n: f64) -> Result<Self> {
        if !(n.is_finite() && n >= 0.0) {
            return Err(Error::invalid("thermal_photons", "occupation must be >= 0"));
        }
        self.n_photon = n;
        self.m_mag = 0.0;
        Ok(self)
    }

    /// Copy with all pairwise couplings removed and diagonals untouched.
    pub fn without_dipole_dipole(&self) -> Self {
        let mut out = self.clone();
        for m in [&mut out.gamma, &mut out.lambda, &mut out.gamma_prime] {
            let n = m.nrows();
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        m[(i, j)] = 0.0;
                    }
                }
            }
        }
        out
    }

    pub fn check_consistent(&self) -> Result<()> {
        let n = self.gamma.nrows();
        for (m, _name) in [(&self.gamma, "gamma"), (&self.lambda, "lambda"), (&self.gamma_prime, "gamma_prime")] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: m.nrows().max(m.ncols()),
                });
            }
            for i in 0..n {
                for j in 0..i {
                    let scale = m[(i, j)].abs().max(m[(j, i)].abs()).max(1.0);
                    if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                        return Err(Error::invalid("coefficients", "matrices must be symmetric"));
                    }
                }
            }
        }
        if n == 0 || n > MAX_EMITTERS {
            return Err(Error::invalid("coefficients", format!("unsupported emitter count {n}")));
        }
        Ok(())
    }
}

/// Which propagating branch of the guide contributes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Forward,
    Backward,
}

/// Real, pair-symmetrised contribution of one propagating branch. Each branch
/// carries half the bidirectional weight.
pub fn branch_coefficients(positions: &[f64], k0z: f64, gamma1d: f64, branch: Branch) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let n = positions.len();
    let half = 0.5 * gamma1d;
    let s = match branch {
        Branch::Forward => 1.0,
        Branch::Backward => -1.0,
    };
    // Summing over the (i, j) and (j, i) orderings keeps only the real part of
    // the branch phase e^{i s k (r_i -+ r_j)}.
    let gamma = DMatrix::from_fn(n, n, |i, j| half * (s * k0z * (positions[i] - positions[j])).cos());
    let lambda = DMatrix::from_fn(n, n, |i, j| 0.5 * half * (k0z * (positions[i] - positions[j]).abs()).sin());
    let gamma_prime = DMatrix::from_fn(n, n, |i, j| half * (s * k0z * (positions[i] + positions[j])).cos());
    (gamma, lambda, gamma_prime)
}

/// Coefficients for emitters coupled to the TE10 mode of a guide.
pub fn coeffs_1d(emitters: &EmitterArray, spec: &SqueezingSpec, k0z: f64, gamma1d: f64) -> Result<CoefficientSet> {
    if !(k0z.is_finite() && k0z > 0.0) {
        return Err(Error::invalid("k0z", "axial wavenumber must be positive"));
    }
    if !(gamma1d.is_finite() && gamma1d >= 0.0) {
        return Err(Error::invalid("gamma1d", "decay rate must be >= 0"));
    }
    let moments = squeezing_moments(spec, k0z)?;
    let pos = emitters.positions();
    let fwd = branch_coefficients(pos, k0z, gamma1d, Branch::Forward);
    let (gamma, lambda, gamma_prime) = match spec.direction {
        Direction::Unidirectional => fwd,
        Direction::Bidirectional => {
            let bwd = branch_coefficients(pos, k0z, gamma1d, Branch::Backward);
            (fwd.0 + bwd.0, fwd.1 + bwd.1, fwd.2 + bwd.2)
        }
    };
    Ok(CoefficientSet {
        gamma,
        lambda,
        gamma_prime,
        n_photon: moments.n_photon,
        m_mag: moments.m_mag,
        global_phase: Complex64::from_polar(1.0, 2.0 * k0z * spec.source_half_separation),
    })
}

/// Angular factor of the free-space dipole kernel,
/// `F(x) = 3/2 {(1 - cos^2 a) sin x / x + (1 - 3 cos^2 a)(cos x / x^2 - sin x / x^3)}`.
pub fn vacuum_f(x: f64, alpha: f64) -> f64 {
    let c2 = alpha.cos().powi(2);
    let (sinc, tail) = if x.abs() < SERIES_SWITCH {
        let x2 = x * x;
        (
            1.0 - x2 / 6.0 + x2 * x2 / 120.0,
            -1.0 / 3.0 + x2 / 30.0 - x2 * x2 / 840.0,
        )
    } else {
        let (s, c) = x.sin_cos();
        (s / x, c / (x * x) - s / (x * x * x))
    };
    1.5 * ((1.0 - c2) * sinc + (1.0 - 3.0 * c2) * tail)
}

/// Free-space dipole-dipole shift in units of the single-emitter rate.
/// Diverges as `x -> 0`.
pub fn vacuum_shift(x: f64, alpha: f64) -> f64 {
    let c2 = alpha.cos().powi(2);
    let (s, c) = x.sin_cos();
    0.75 * (-(1.0 - c2) * c / x + (1.0 - 3.0 * c2) * (s / (x * x) + c / (x * x * x)))
}

/// Emitters in free space, all with dipoles along `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeSpaceEmitters {
    positions: Vec<[f64; 3]>,
}

impl FreeSpaceEmitters {
    pub const DIPOLE: [f64; 3] = [0.0, 1.0, 0.0];

    pub fn new(positions: Vec<[f64; 3]>) -> Result<Self> {
        if positions.is_empty() || positions.len() > MAX_EMITTERS {
            return Err(Error::invalid(
                "positions",
                format!("need between 1 and {MAX_EMITTERS} emitters, got {}", positions.len()),
            ));
        }
        if positions.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("positions", "non-finite coordinate"));
        }
        Ok(Self { positions })
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Angle between `v` and the dipole axis; zero for a null vector.
fn dipole_angle(v: [f64; 3]) -> f64 {
    let len = norm3(v);
    if len == 0.0 {
        return 0.0;
    }
    let d = FreeSpaceEmitters::DIPOLE;
    let cos = (v[0] * d[0] + v[1] * d[1] + v[2] * d[2]) / len;
    cos.clamp(-1.0, 1.0).acos()
}

/// Coefficients for emitters in an isotropically squeezed free-space vacuum.
pub fn coeffs_3d(emitters: &FreeSpaceEmitters, spec: &SqueezingSpec, k0: f64, gamma0: f64) -> Result<CoefficientSet> {
    if !(k0.is_finite() && k0 > 0.0) {
        return Err(Error::invalid("k0", "wavenumber must be positive"));
    }
    let moments = squeezing_moments(spec, k0)?;
    let pos = emitters.positions();
    let n = pos.len();
    let mut gamma = DMatrix::zeros(n, n);
    let mut lambda = DMatrix::zeros(n, n);
    let mut gamma_prime = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let diff = [pos[i][0] - pos[j][0], pos[i][1] - pos[j][1], pos[i][2] - pos[j][2]];
            let sum = [pos[i][0] + pos[j][0], pos[i][1] + pos[j][1], pos[i][2] + pos[j][2]];
            let rij = norm3(diff);
            if i != j && rij == 0.0 {
                return Err(Error::CoincidentEmitters(i.min(j), i.max(j)));
            }
            gamma[(i, j)] = gamma0 * vacuum_f(k0 * rij, dipole_angle(diff));
            if i != j {
                lambda[(i, j)] = gamma0 * vacuum_shift(k0 * rij, dipole_angle(diff));
            }
            gamma_prime[(i, j)] = gamma0 * vacuum_f(k0 * norm3(sum), dipole_angle(sum));
        }
    }
    Ok(CoefficientSet {
        gamma,
        lambda,
        gamma_prime,
        n_photon: moments.n_photon,
        m_mag: moments.m_mag,
        global_phase: Complex64::from_polar(1.0, 2.0 * k0 * spec.source_half_separation),
    })
}
