//! Density matrices, time evolution and dephasing analysis.

use std::fmt::Write as _;
use std::str::FromStr;

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::liouvillian::Liouvillian;
use crate::operators::{hilbert_dim, lowering, sigma_x, sigma_y, unvectorize, vectorize};
use crate::{CMatrix, CVector, C64};

pub const HERMITIAN_TOLERANCE: f64 = 1e-12;
pub const TRACE_TOLERANCE: f64 = 1e-12;
pub const EIGENVALUE_TOLERANCE: f64 = 1e-9;

/// Default observation window for dephasing-rate extraction, in `1/gamma_1d`.
pub const DEFAULT_DEPHASING_WINDOW: f64 = 20.0;

/// Validation thresholds for [`DensityMatrix`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateTolerance {
    pub hermitian: f64,
    pub trace: f64,
    pub eigenvalue: f64,
}

impl Default for StateTolerance {
    fn default() -> Self {
        Self {
            hermitian: HERMITIAN_TOLERANCE,
            trace: TRACE_TOLERANCE,
            eigenvalue: EIGENVALUE_TOLERANCE,
        }
    }
}

/// Named initial states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialState {
    /// Every emitter in `(|g> + |e>)/sqrt 2`.
    PlusX,
    /// Every emitter in `(|g> + i|e>)/sqrt 2`.
    PlusY,
    Excited,
    Ground,
    /// `(|eg> + |ge>)/sqrt 2`, two emitters only.
    BellPlus,
    /// `(|eg> - |ge>)/sqrt 2`, two emitters only.
    BellMinus,
    FullyMixed,
}

impl InitialState {
    pub const ALL: [InitialState; 7] = [
        InitialState::PlusX,
        InitialState::PlusY,
        InitialState::Excited,
        InitialState::Ground,
        InitialState::BellPlus,
        InitialState::BellMinus,
        InitialState::FullyMixed,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            InitialState::PlusX => "plus-x",
            InitialState::PlusY => "plus-y",
            InitialState::Excited => "excited",
            InitialState::Ground => "ground",
            InitialState::BellPlus => "bell-plus",
            InitialState::BellMinus => "bell-minus",
            InitialState::FullyMixed => "fully-mixed",
        }
    }
}

impl FromStr for InitialState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::invalid("initial_state", format!("unknown preset `{s}`")))
    }
}

/// Validated density matrix of `n` emitters.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerance(m, StateTolerance::default())
    }

    pub fn with_tolerance(m: CMatrix, tol: StateTolerance) -> Result<Self> {
        let d = m.nrows();
        if d != m.ncols() {
            return Err(Error::NonPhysicalState(format!("{}x{} matrix is not square", d, m.ncols())));
        }
        if d < 2 || !d.is_power_of_two() || d > hilbert_dim(crate::coefficients::MAX_EMITTERS) {
            return Err(Error::NonPhysicalState(format!("dimension {d} is not 2^n with 1 <= n <= 6")));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonPhysicalState("non-finite entry".into()));
        }
        let herm = (&m - m.adjoint()).camax();
        if herm > tol.hermitian {
            return Err(Error::NonPhysicalState(format!("not Hermitian (deviation {herm:.3e})")));
        }
        let tr = m.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > tol.trace {
            return Err(Error::NonPhysicalState(format!("trace {tr} differs from 1")));
        }
        let rho = Self(m);
        let min = rho.min_eigenvalue();
        if min < -tol.eigenvalue {
            return Err(Error::NonPhysicalState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(rho)
    }

    /// `|psi><psi|` after normalising `psi`.
    pub fn pure(psi: &CVector) -> Result<Self> {
        let norm = psi.norm();
        if !(norm > 0.0) {
            return Err(Error::NonPhysicalState("zero state vector".into()));
        }
        let v = psi / C64::new(norm, 0.0);
        Self::new(&v * v.adjoint())
    }

    /// Product state from per-emitter Bloch vectors `(x, y, z)` with `|r| <= 1`.
    pub fn product(bloch: &[[f64; 3]]) -> Result<Self> {
        if bloch.is_empty() {
            return Err(Error::NonPhysicalState("no emitters".into()));
        }
        let mut out = CMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        for &[x, y, z] in bloch {
            if x * x + y * y + z * z > 1.0 + 1e-12 {
                return Err(Error::NonPhysicalState(format!("Bloch vector ({x}, {y}, {z}) is outside the ball")));
            }
            // basis order (|g>, |e>), sigma_z = |e><e| - |g><g|
            let q = CMatrix::from_row_slice(
                2,
                2,
                &[
                    C64::new(0.5 * (1.0 - z), 0.0),
                    C64::new(0.5 * x, 0.5 * y),
                    C64::new(0.5 * x, -0.5 * y),
                    C64::new(0.5 * (1.0 + z), 0.0),
                ],
            );
            out = out.kronecker(&q);
        }
        Self::new(out)
    }

    pub fn preset(state: InitialState, n_emitters: usize) -> Result<Self> {
        let bloch = |v: [f64; 3]| Self::product(&vec![v; n_emitters]);
        match state {
            InitialState::PlusX => bloch([1.0, 0.0, 0.0]),
            InitialState::PlusY => bloch([0.0, 1.0, 0.0]),
            InitialState::Excited => bloch([0.0, 0.0, 1.0]),
            InitialState::Ground => bloch([0.0, 0.0, -1.0]),
            InitialState::BellPlus | InitialState::BellMinus => {
                if n_emitters != 2 {
                    return Err(Error::invalid("initial_state", "Bell presets need exactly two emitters"));
                }
                let s = if state == InitialState::BellPlus { 1.0 } else { -1.0 };
                let mut psi = CVector::zeros(4);
                psi[2] = C64::new(1.0, 0.0);
                psi[1] = C64::new(s, 0.0);
                Self::pure(&psi)
            }
            InitialState::FullyMixed => {
                let d = hilbert_dim(n_emitters);
                Self::new(CMatrix::identity(d, d) / C64::new(d as f64, 0.0))
            }
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_emitters(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    /// `Tr[op rho]`.
    pub fn expect(&self, op: &CMatrix) -> C64 {
        (op * &self.0).trace()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(hermitize(&self.0)).eigenvalues.min()
    }

    /// Populations in the computational basis.
    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.0[(k, k)].re).collect()
    }
}

pub(crate) fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// In-place Hermitian part of a column-stacked `d x d` operator. Explicit
/// steps near the stability boundary otherwise let rounding noise in the
/// anti-Hermitian sector grow to the tolerance level.
fn hermitize_vec(v: &mut CVector, d: usize) {
    for j in 0..d {
        v[j * d + j].im = 0.0;
        for i in 0..j {
            let avg = 0.5 * (v[j * d + i] + v[i * d + j].conj());
            v[j * d + i] = avg;
            v[i * d + j] = avg.conj();
        }
    }
}

/// Step control for the embedded Runge-Kutta integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub atol: f64,
    pub rtol: f64,
    pub max_steps: usize,
    pub min_step: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            atol: 1e-10,
            rtol: 1e-8,
            max_steps: 10_000_000,
            min_step: 1e-14,
        }
    }
}

impl IntegratorOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.atol > 0.0 && self.rtol >= 0.0 && self.atol.is_finite() && self.rtol.is_finite()) {
            return Err(Error::invalid("tolerance", "atol must be > 0 and rtol >= 0"));
        }
        if !(self.min_step > 0.0) {
            return Err(Error::invalid("min_step", "must be positive"));
        }
        Ok(())
    }
}

// Dormand-Prince 5(4) tableau.
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0];
const B: [f64; 6] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn combo(y: &CVector, h: f64, coeffs: &[f64], ks: &[CVector]) -> CVector {
    let mut out = y.clone();
    for (a, k) in coeffs.iter().zip(ks) {
        if *a != 0.0 {
            out.axpy(C64::new(h * a, 0.0), k, C64::new(1.0, 0.0));
        }
    }
    out
}

fn error_norm(err: &CVector, y0: &CVector, y1: &CVector, opts: &IntegratorOptions) -> f64 {
    let n = err.len().max(1) as f64;
    let sum: f64 = err
        .iter()
        .zip(y0.iter().zip(y1.iter()))
        .map(|(e, (a, b))| {
            let sc = opts.atol + opts.rtol * a.norm().max(b.norm());
            (e.norm() / sc).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

/// Integrate `y' = f(y)` from `t = 0` and return `y` at each entry of `times`
/// (strictly increasing, non-negative).
pub fn integrate<F>(f: F, y0: &CVector, times: &[f64], opts: &IntegratorOptions) -> Result<Vec<CVector>>
where
    F: Fn(&CVector) -> CVector,
{
    integrate_projected(f, |_| {}, y0, times, opts)
}

/// [`integrate`] with `project` applied to the state and to the reused stage
/// after every accepted step. `project` must be a linear map commuting with `f`.
pub fn integrate_projected<F, P>(f: F, project: P, y0: &CVector, times: &[f64], opts: &IntegratorOptions) -> Result<Vec<CVector>>
where
    F: Fn(&CVector) -> CVector,
    P: Fn(&mut CVector),
{
    opts.validate()?;
    check_grid(times)?;
    let mut out = Vec::with_capacity(times.len());
    let mut t = 0.0;
    let mut y = y0.clone();
    let mut k1 = f(&y);
    let mut h = initial_step(&y, &k1, opts);
    let mut steps = 0usize;
    for &target in times {
        while target - t > 1e-15 * target.abs().max(1.0) {
            if steps >= opts.max_steps {
                return Err(Error::ToleranceFailure {
                    t,
                    reason: format!("exceeded {} steps", opts.max_steps),
                });
            }
            steps += 1;
            let last = h >= target - t;
            let step = if last { target - t } else { h };
            let mut ks = Vec::with_capacity(7);
            ks.push(k1.clone());
            for a in [&A2[..], &A3, &A4, &A5, &A6] {
                let k = f(&combo(&y, step, a, &ks));
                ks.push(k);
            }
            let y_new = combo(&y, step, &B, &ks);
            ks.push(f(&y_new));
            let mut err = CVector::zeros(y.len());
            for (e, k) in E.iter().zip(&ks) {
                if *e != 0.0 {
                    err.axpy(C64::new(step * e, 0.0), k, C64::new(1.0, 0.0));
                }
            }
            let en = error_norm(&err, &y, &y_new, opts);
            if !en.is_finite() {
                return Err(Error::ToleranceFailure {
                    t,
                    reason: "non-finite error estimate".into(),
                });
            }
            let factor = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
            if en <= 1.0 {
                t = if last { target } else { t + step };
                y = y_new;
                k1 = ks.pop().expect("seven stages");
                project(&mut y);
                project(&mut k1);
                if !last || factor < 1.0 {
                    h = step * factor;
                }
            } else {
                h = step * factor.min(1.0);
                if h < opts.min_step {
                    return Err(Error::ToleranceFailure {
                        t,
                        reason: format!("step size fell below {:.1e}", opts.min_step),
                    });
                }
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

fn initial_step(y: &CVector, f0: &CVector, opts: &IntegratorOptions) -> f64 {
    let scale = |v: &CVector| {
        let n = v.len().max(1) as f64;
        (v.iter()
            .zip(y.iter())
            .map(|(a, b)| (a.norm() / (opts.atol + opts.rtol * b.norm())).powi(2))
            .sum::<f64>()
            / n)
            .sqrt()
    };
    let d0 = scale(y);
    let d1 = scale(f0);
    if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        (0.01 * d0 / d1).min(1.0)
    }
}

fn check_grid(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::invalid("times", "grid must be finite and non-negative"));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("times", "grid must be strictly increasing"));
    }
    Ok(())
}

/// Evenly spaced grid `0, dt, ..., t_max` with `n` points.
pub fn uniform_grid(t_max: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![t_max];
    }
    (0..n).map(|k| t_max * k as f64 / (n - 1) as f64).collect()
}

/// Sampled density-matrix evolution with named observables.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<DensityMatrix>,
    observables: Vec<(String, Vec<f64>)>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: Vec<DensityMatrix>) -> Result<Self> {
        if times.len() != states.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                found: states.len(),
            });
        }
        check_grid(&times)?;
        Ok(Self {
            times,
            states,
            observables: Vec::new(),
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn observables(&self) -> &[(String, Vec<f64>)] {
        &self.observables
    }

    pub fn observable(&self, name: &str) -> Option<&[f64]> {
        self.observables.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn add_observable(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        if values.len() != self.times.len() {
            return Err(Error::DimensionMismatch {
                expected: self.times.len(),
                found: values.len(),
            });
        }
        self.observables.push((name.into(), values));
        Ok(())
    }

    /// Record the real part of `Tr[op rho(t)]`.
    pub fn record(&mut self, name: impl Into<String>, op: &CMatrix) -> Result<()> {
        let values = self.states.iter().map(|s| s.expect(op).re).collect();
        self.add_observable(name, values)
    }

    /// CSV with a `t,<observables>` header and 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t");
        for (name, _) in &self.observables {
            s.push(',');
            s.push_str(name);
        }
        s.push('\n');
        for (k, t) in self.times.iter().enumerate() {
            let _ = write!(s, "{t:.16e}");
            for (_, v) in &self.observables {
                let _ = write!(s, ",{:.16e}", v[k]);
            }
            s.push('\n');
        }
        s
    }
}

fn check_state_dim(gen: &Liouvillian, rho0: &DensityMatrix) -> Result<()> {
    if rho0.dim() != gen.hilbert_dim() {
        return Err(Error::DimensionMismatch {
            expected: gen.hilbert_dim(),
            found: rho0.dim(),
        });
    }
    Ok(())
}

fn to_states(vs: Vec<CVector>) -> Result<Vec<DensityMatrix>> {
    vs.into_iter()
        .map(|v| DensityMatrix::with_tolerance(unvectorize(&v), TRAJECTORY_TOLERANCE))
        .collect()
}

/// Checks applied to every evolved state.
pub const TRAJECTORY_TOLERANCE: StateTolerance = StateTolerance {
    hermitian: 1e-10,
    trace: 1e-10,
    eigenvalue: EIGENVALUE_TOLERANCE,
};

/// Adaptive evolution of `rho0` under `gen`, sampled at `times` (starting from `t = 0`).
pub fn evolve(gen: &Liouvillian, rho0: &DensityMatrix, times: &[f64], opts: &IntegratorOptions) -> Result<Trajectory> {
    check_state_dim(gen, rho0)?;
    let l = gen.to_sparse();
    let d = rho0.dim();
    let vs = integrate_projected(|v| &l * v, |v| hermitize_vec(v, d), &vectorize(rho0.matrix()), times, opts)?;
    Trajectory::new(times.to_vec(), to_states(vs)?)
}

/// Propagate a vectorised operator exactly with `exp(L dt)` between samples.
pub fn propagate_exact(matrix: &CMatrix, v0: &CVector, times: &[f64]) -> Result<Vec<CVector>> {
    check_grid(times)?;
    let mut out = Vec::with_capacity(times.len());
    let mut v = v0.clone();
    let mut t = 0.0;
    let mut cache: Option<(f64, CMatrix)> = None;
    for &target in times {
        let dt = target - t;
        if dt > 0.0 {
            let reuse = matches!(&cache, Some((h, _)) if (h - dt).abs() <= 1e-12 * dt);
            if !reuse {
                cache = Some((dt, (matrix * C64::new(dt, 0.0)).exp()));
            }
            v = &cache.as_ref().expect("cached propagator").1 * v;
        }
        t = target;
        out.push(v.clone());
    }
    Ok(out)
}

/// Matrix-exponential counterpart of [`evolve`].
pub fn evolve_exact(gen: &Liouvillian, rho0: &DensityMatrix, times: &[f64]) -> Result<Trajectory> {
    check_state_dim(gen, rho0)?;
    let vs = propagate_exact(gen.matrix(), &vectorize(rho0.matrix()), times)?;
    Trajectory::new(times.to_vec(), to_states(vs)?)
}

/// Summed `<sigma_x>` and `<sigma_y>` over `subset` along a trajectory.
pub fn transverse_polarizations(traj: &Trajectory, subset: &[usize]) -> Result<(Vec<f64>, Vec<f64>)> {
    let Some(first) = traj.states.first() else {
        return Ok((Vec::new(), Vec::new()));
    };
    let n = first.n_emitters();
    if let Some(&bad) = subset.iter().find(|&&i| i >= n) {
        return Err(Error::DimensionMismatch { expected: n, found: bad + 1 });
    }
    let d = first.dim();
    let mut sx = CMatrix::zeros(d, d);
    let mut sy = CMatrix::zeros(d, d);
    for &i in subset {
        sx += sigma_x(n, i);
        sy += sigma_y(n, i);
    }
    let x = traj.states.iter().map(|s| s.expect(&sx).re).collect();
    let y = traj.states.iter().map(|s| s.expect(&sy).re).collect();
    Ok((x, y))
}

/// Summed `<sigma^->` over `subset` for a single state.
pub fn coherence(rho: &DensityMatrix, subset: &[usize]) -> C64 {
    let n = rho.n_emitters();
    subset.iter().map(|&i| rho.expect(&lowering(n, i))).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DephasingRate {
    Rate(f64),
    /// The signal never fell below `1/e` of its start inside the window.
    NoDecay,
}

impl DephasingRate {
    pub fn value(&self) -> Option<f64> {
        match self {
            DephasingRate::Rate(r) => Some(*r),
            DephasingRate::NoDecay => None,
        }
    }
}

/// Inverse of the first time `|value|` drops to `1/e` of its initial magnitude.
pub fn dephasing_rate(times: &[f64], values: &[f64]) -> Result<DephasingRate> {
    if times.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            found: values.len(),
        });
    }
    let (Some(&t0), Some(&v0)) = (times.first(), values.first()) else {
        return Err(Error::ZeroInitial);
    };
    if v0 == 0.0 {
        return Err(Error::ZeroInitial);
    }
    let threshold = v0.abs() * (-1.0f64).exp();
    for k in 1..values.len() {
        let (a, b) = (values[k - 1].abs(), values[k].abs());
        if b <= threshold {
            let frac = if a == b { 0.0 } else { (a - threshold) / (a - b) };
            let t = times[k - 1] + frac * (times[k] - times[k - 1]) - t0;
            return Ok(DephasingRate::Rate(1.0 / t));
        }
    }
    Ok(DephasingRate::NoDecay)
}

/// Eigenvalues `N + 1/2 +- M cos(2 k0z delta)` of the single-emitter coherence
/// equations, in units of `gamma_1d`.
pub fn single_emitter_dephasing_eigenvalues(n: f64, m: f64, k0z: f64, delta: f64) -> (f64, f64) {
    let s = m * (2.0 * k0z * delta).cos();
    (n + 0.5 + s, n + 0.5 - s)
}

/// Variance `(N + 1/2 - M cos(2 k0z delta + alpha + beta)) / 2` of the field
/// quadrature selected by `alpha + beta`.
pub fn quadrature_variance(delta: f64, alpha_plus_beta: f64, n: f64, m: f64, k0z: f64) -> f64 {
    0.5 * (n + 0.5 - m * (2.0 * k0z * delta + alpha_plus_beta).cos())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{coeffs_1d, EmitterArray, SqueezingSpec};
    use crate::liouvillian::build_generator;
    use approx::assert_relative_eq;
    use std::f64::consts::{E as EULER, PI};

    const K: f64 = 2.0 * PI;

    fn gen(pos: Vec<f64>, r: f64) -> Liouvillian {
        let e = EmitterArray::new(pos, 1.0).unwrap();
        let spec = SqueezingSpec::with_degree(r).unwrap();
        build_generator(&coeffs_1d(&e, &spec, K, 1.0).unwrap(), &spec).unwrap()
    }

    #[test]
    fn presets_are_valid() {
        for p in InitialState::ALL {
            let rho = DensityMatrix::preset(p, 2).unwrap();
            assert_eq!(rho.dim(), 4);
            assert_eq!(p.name().parse::<InitialState>().unwrap(), p);
        }
        assert!(DensityMatrix::preset(InitialState::BellPlus, 3).is_err());
        let plus = DensityMatrix::preset(InitialState::BellPlus, 2).unwrap();
        assert_relative_eq!(plus.matrix()[(1, 2)].re, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn product_state_expectations() {
        let rho = DensityMatrix::preset(InitialState::PlusX, 1).unwrap();
        assert_relative_eq!(rho.expect(&sigma_x(1, 0)).re, 1.0, epsilon = 1e-15);
        let rho = DensityMatrix::preset(InitialState::PlusY, 1).unwrap();
        assert_relative_eq!(rho.expect(&sigma_y(1, 0)).re, 1.0, epsilon = 1e-15);
        assert!(DensityMatrix::product(&[[1.0, 1.0, 0.0]]).is_err());
    }

    #[test]
    fn validation_rejects_bad_matrices() {
        let mut m = CMatrix::identity(2, 2);
        assert!(DensityMatrix::new(m.clone()).is_err());
        m[(0, 0)] = C64::new(1.5, 0.0);
        m[(1, 1)] = C64::new(-0.5, 0.0);
        assert!(matches!(DensityMatrix::new(m), Err(Error::NonPhysicalState(_))));
        assert!(DensityMatrix::new(CMatrix::identity(3, 3) / C64::new(3.0, 0.0)).is_err());
    }

    #[test]
    fn zero_generator_is_identity_flow() {
        let g = gen(vec![0.0], 0.0);
        let zero = Liouvillian::from_parts(CMatrix::zeros(4, 4), g.coefficients().clone(), 0.0).unwrap();
        let rho = DensityMatrix::preset(InitialState::PlusX, 1).unwrap();
        let tr = evolve(&zero, &rho, &[0.5, 1.0, 3.0], &IntegratorOptions::default()).unwrap();
        for s in tr.states() {
            assert_eq!(s, &rho);
        }
    }

    #[test]
    fn excited_state_decays_exponentially() {
        let g = gen(vec![0.13], 0.0);
        let rho = DensityMatrix::preset(InitialState::Excited, 1).unwrap();
        let times = uniform_grid(5.0, 51);
        let tr = evolve(&g, &rho, &times, &IntegratorOptions::default()).unwrap();
        for (t, s) in times.iter().zip(tr.states()) {
            assert!((s.matrix()[(1, 1)].re - (-t).exp()).abs() < 1e-8);
        }
    }

    #[test]
    fn adaptive_matches_exponential() {
        let g = gen(vec![0.0, 0.37], 0.6);
        let rho = DensityMatrix::preset(InitialState::PlusX, 2).unwrap();
        let times = uniform_grid(4.0, 9);
        let opts = IntegratorOptions::default();
        let a = evolve(&g, &rho, &times, &opts).unwrap();
        let b = evolve_exact(&g, &rho, &times).unwrap();
        for (x, y) in a.states().iter().zip(b.states()) {
            assert!((x.matrix() - y.matrix()).camax() < 1e-8);
        }
    }

    #[test]
    fn rate_of_pure_exponential() {
        let times = uniform_grid(3.0, 3001);
        let v: Vec<f64> = times.iter().map(|t| (-2.0 * t).exp()).collect();
        let r = dephasing_rate(&times, &v).unwrap().value().unwrap();
        assert!((r - 2.0).abs() < 1e-3);
        let flat = vec![1.0; times.len()];
        assert_eq!(dephasing_rate(&times, &flat).unwrap(), DephasingRate::NoDecay);
        assert!(matches!(dephasing_rate(&times, &vec![0.0; times.len()]), Err(Error::ZeroInitial)));
        assert!(dephasing_rate(&[0.0, 1.0], &[1.0, 1.0 / EULER]).unwrap().value().unwrap() > 0.99);
    }

    #[test]
    fn dephasing_eigenvalue_limits() {
        assert_eq!(single_emitter_dephasing_eigenvalues(0.3, 0.0, K, 0.2), (0.8, 0.8));
        let (p, m) = single_emitter_dephasing_eigenvalues(0.3, 0.5, K, 1.0 / 8.0);
        assert!((p - 0.8).abs() < 1e-15 && (m - 0.8).abs() < 1e-15);
    }

    #[test]
    fn quadrature_variance_identities() {
        let r: f64 = 1.0;
        let (n, m) = (r.sinh().powi(2), r.sinh() * r.cosh());
        for k in 0..100 {
            let delta = 0.013 * k as f64;
            let (gp, gm) = single_emitter_dephasing_eigenvalues(n, m, K, delta);
            assert!((2.0 * quadrature_variance(delta, 0.0, n, m, K) - gm).abs() < 1e-12);
            assert!((2.0 * quadrature_variance(delta, PI, n, m, K) - gp).abs() < 1e-12);
        }
        assert!((quadrature_variance(0.0, 0.0, n, m, K) - 0.5 * (n + 0.5 - m)).abs() < 1e-15);
        assert_eq!(quadrature_variance(0.3, 0.0, 0.2, 0.0, K), 0.5 * 0.7);
    }

    #[test]
    fn csv_layout() {
        let rho = DensityMatrix::preset(InitialState::Ground, 1).unwrap();
        let mut tr = Trajectory::new(vec![0.0, 0.5], vec![rho.clone(), rho]).unwrap();
        tr.add_observable("sx", vec![0.0, 1.0 / 3.0]).unwrap();
        let csv = tr.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "t,sx");
        assert_eq!(lines[2], "5.0000000000000000e-1,3.3333333333333331e-1");
    }

    #[test]
    fn projected_evolution_stays_hermitian_under_stiff_squeezing() {
        let e = EmitterArray::new(vec![0.881, -0.881], 1.0).unwrap();
        let spec = SqueezingSpec::with_degree(1.44).unwrap();
        let gen = build_generator(&coeffs_1d(&e, &spec, K, 1.0).unwrap(), &spec).unwrap();
        let traj = evolve(&gen, &DensityMatrix::preset(InitialState::PlusX, 2).unwrap(), &uniform_grid(10.0, 11), &IntegratorOptions::default()).unwrap();
        for s in traj.states() {
            let m = s.matrix();
            assert!((m - m.adjoint()).iter().all(|z| z.norm() < 1e-15));
        }
    }
}
