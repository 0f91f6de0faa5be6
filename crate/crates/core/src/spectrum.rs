//! Resonance fluorescence through the quantum regression theorem.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::coefficients::CoefficientSet;
use crate::dynamics::{integrate, propagate_exact, DensityMatrix, IntegratorOptions};
use crate::error::{Error, Result};
use crate::liouvillian::Liouvillian;
use crate::operators::{collective_lowering, vectorize};
use crate::steady::{numeric_steady_state, steady_state_from, KernelProjector};
use crate::{CMatrix, CVector, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumOptions {
    /// Correlation horizon in `1/gamma_1d`.
    pub horizon: f64,
    /// Number of uniformly spaced delay samples including `tau = 0`.
    pub samples: usize,
    /// Half-width of the detuning grid.
    pub omega_max: f64,
    pub omega_points: usize,
    /// Largest `|g - g_inf|` tolerated at the end of the horizon, relative to `|g(0)|`.
    pub floor_cutoff: f64,
    pub integrator: IntegratorOptions,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            horizon: 100.0,
            samples: 20_000,
            omega_max: 12.0,
            omega_points: 1600,
            floor_cutoff: 1e-6,
            integrator: IntegratorOptions {
                atol: 1e-12,
                rtol: 1e-10,
                ..IntegratorOptions::default()
            },
        }
    }
}

impl SpectrumOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::invalid("horizon", "must be positive"));
        }
        if self.samples < 3 {
            return Err(Error::invalid("samples", "need at least three delay samples"));
        }
        if !(self.omega_max.is_finite() && self.omega_max > 0.0) || self.omega_points < 2 {
            return Err(Error::invalid("omega_grid", "need omega_max > 0 and at least two points"));
        }
        if !(self.floor_cutoff > 0.0) {
            return Err(Error::invalid("floor_cutoff", "must be positive"));
        }
        self.integrator.validate()
    }

    pub fn tau_grid(&self) -> Vec<f64> {
        crate::dynamics::uniform_grid(self.horizon, self.samples)
    }

    /// Symmetric detuning grid.
    pub fn omega_grid(&self) -> Vec<f64> {
        let n = self.omega_points;
        (0..n)
            .map(|k| {
                let j = k as f64 - 0.5 * (n - 1) as f64;
                self.omega_max * j / (0.5 * (n - 1) as f64)
            })
            .collect()
    }
}

/// Steady state of the driven generator.
pub fn driven_steady_state(gen: &Liouvillian) -> Result<DensityMatrix> {
    numeric_steady_state(gen)
}

/// Zero off-diagonal couplings while keeping the single-emitter terms.
pub fn toggle_dipole_dipole(coeffs: &CoefficientSet) -> CoefficientSet {
    coeffs.without_dipole_dipole()
}

fn regression_setup(gen: &Liouvillian, rho_ss: &DensityMatrix) -> Result<(CVector, CVector)> {
    if rho_ss.dim() != gen.hilbert_dim() {
        return Err(Error::DimensionMismatch {
            expected: gen.hilbert_dim(),
            found: rho_ss.dim(),
        });
    }
    let lower = collective_lowering(gen.n_emitters());
    let c0 = vectorize(&(&lower * rho_ss.matrix()));
    // Tr[S^+ X] = sum_k vec(S^+^T)_k vec(X)_k with S^+^T = conj(S^-)
    let weights = vectorize(&lower.conjugate());
    Ok((c0, weights))
}

fn contract(weights: &CVector, v: &CVector) -> C64 {
    weights.iter().zip(v.iter()).map(|(a, b)| a * b).sum()
}

/// `g(tau) = Tr[S^+ c(tau)]` with `c(0) = S^- rho_ss`, propagated adaptively.
pub fn regression_correlation(
    gen: &Liouvillian,
    rho_ss: &DensityMatrix,
    tau: &[f64],
    opts: &IntegratorOptions,
) -> Result<Vec<C64>> {
    let (c0, w) = regression_setup(gen, rho_ss)?;
    let l = gen.to_sparse();
    let vs = integrate(|v| &l * v, &c0, tau, opts)?;
    Ok(vs.iter().map(|v| contract(&w, v)).collect())
}

/// Same correlation propagated with `exp(L dtau)`.
pub fn regression_correlation_exact(gen: &Liouvillian, rho_ss: &DensityMatrix, tau: &[f64]) -> Result<Vec<C64>> {
    let (c0, w) = regression_setup(gen, rho_ss)?;
    let vs = propagate_exact(gen.matrix(), &c0, tau)?;
    Ok(vs.iter().map(|v| contract(&w, v)).collect())
}

/// Steady state reached from `rho0`; resolves degenerate kernels.
pub fn driven_steady_state_from(gen: &Liouvillian, rho0: &DensityMatrix) -> Result<DensityMatrix> {
    steady_state_from(gen, rho0)
}

/// `lim g(tau)` computed with the kernel projector; equals
/// [`coherent_floor`] when the steady state is unique.
pub fn asymptotic_floor(projector: &KernelProjector, gen: &Liouvillian, rho_ss: &DensityMatrix) -> Result<C64> {
    let (c0, w) = regression_setup(gen, rho_ss)?;
    Ok(contract(&w, &projector.apply(&c0)))
}

/// Infinite-horizon spectrum `Re[-w^T (L - i omega - P)^{-1} (1 - P) c(0)]`,
/// normalised at zero detuning. Independent of any delay grid.
pub fn resolvent_spectrum(gen: &Liouvillian, rho_ss: &DensityMatrix, omega: &[f64]) -> Result<Vec<f64>> {
    let (c0, w) = regression_setup(gen, rho_ss)?;
    let projector = KernelProjector::new(gen)?;
    let p = projector.matrix();
    let dc = &c0 - &p * &c0;
    let base = gen.matrix() - &p;
    let n = base.nrows();
    let eval = |om: f64| -> Result<f64> {
        let mut a = base.clone();
        for k in 0..n {
            a[(k, k)] -= C64::new(0.0, om);
        }
        let x = a.lu().solve(&dc).ok_or_else(|| Error::ToleranceFailure {
            t: 0.0,
            reason: format!("singular resolvent at omega = {om}"),
        })?;
        Ok(-contract(&w, &x).re)
    };
    let s0 = eval(0.0)?;
    omega.par_iter().map(|&om| eval(om).map(|v| v / s0)).collect()
}

/// `Tr[S^+ rho] Tr[S^- rho]`, the elastic part of the correlation.
pub fn coherent_floor(rho_ss: &DensityMatrix) -> C64 {
    let lower: CMatrix = collective_lowering(rho_ss.n_emitters());
    let minus = rho_ss.expect(&lower);
    minus.conj() * minus
}

#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub omega: Vec<f64>,
    /// Normalised so that the zero-detuning value is 1.
    pub intensity: Vec<f64>,
    pub tau: Vec<f64>,
    pub raw_correlation: Vec<C64>,
    /// Removed coherent floor `g(inf)`.
    pub elastic_weight: C64,
    /// Unnormalised zero-detuning intensity.
    pub norm: f64,
}

impl SpectrumResult {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("omega_minus_omega0,intensity\n");
        for (w, i) in self.omega.iter().zip(&self.intensity) {
            let _ = writeln!(s, "{w:.16e},{i:.16e}");
        }
        s
    }
}

fn transform(tau: &[f64], f: &[C64], omega: f64) -> f64 {
    let term = |k: usize| (f[k] * C64::from_polar(1.0, -omega * tau[k])).re;
    let mut acc = 0.0;
    for k in 1..tau.len() {
        acc += 0.5 * (tau[k] - tau[k - 1]) * (term(k - 1) + term(k));
    }
    acc
}

/// `Re int_0^T (g - g_inf) e^{-i omega tau} dtau` by the trapezoid rule,
/// normalised to its value at `omega = 0`.
pub fn power_spectrum(
    tau: &[f64],
    g: &[C64],
    floor: C64,
    omega: &[f64],
    floor_cutoff: f64,
) -> Result<SpectrumResult> {
    if tau.len() != g.len() {
        return Err(Error::DimensionMismatch {
            expected: tau.len(),
            found: g.len(),
        });
    }
    if tau.len() < 2 {
        return Err(Error::invalid("tau", "need at least two delay samples"));
    }
    let inelastic: Vec<C64> = g.iter().map(|z| z - floor).collect();
    let scale = g[0].norm().max(f64::MIN_POSITIVE);
    let tail_start = tau.len() - (tau.len() / 20).max(1);
    let residual = inelastic[tail_start..].iter().fold(0.0f64, |a, z| a.max(z.norm())) / scale;
    if residual > floor_cutoff {
        return Err(Error::HorizonTooShort {
            residual,
            cutoff: floor_cutoff,
        });
    }
    let norm = transform(tau, &inelastic, 0.0);
    if !(norm.abs() > 0.0) {
        return Err(Error::ToleranceFailure {
            t: 0.0,
            reason: "zero-detuning intensity vanishes".into(),
        });
    }
    let intensity = omega.par_iter().map(|&w| transform(tau, &inelastic, w) / norm).collect();
    Ok(SpectrumResult {
        omega: omega.to_vec(),
        intensity,
        tau: tau.to_vec(),
        raw_correlation: g.to_vec(),
        elastic_weight: floor,
        norm,
    })
}

/// Steady state, regression and transform in one go. With `initial` the
/// steady state is the long-time limit from that state, which stays defined
/// when a dark state makes the kernel degenerate.
pub fn resonance_fluorescence(
    gen: &Liouvillian,
    initial: Option<&DensityMatrix>,
    opts: &SpectrumOptions,
) -> Result<SpectrumResult> {
    opts.validate()?;
    let (rho, floor) = match initial {
        None => {
            let rho = driven_steady_state(gen)?;
            let floor = coherent_floor(&rho);
            (rho, floor)
        }
        Some(rho0) => {
            let projector = KernelProjector::new(gen)?;
            let rho = driven_steady_state_from(gen, rho0)?;
            let floor = asymptotic_floor(&projector, gen, &rho)?;
            (rho, floor)
        }
    };
    let tau = opts.tau_grid();
    let g = regression_correlation(gen, &rho, &tau, &opts.integrator)?;
    power_spectrum(&tau, &g, floor, &opts.omega_grid(), opts.floor_cutoff)
}

/// Indices of strict local maxima.
pub fn local_maxima(values: &[f64]) -> Vec<usize> {
    (1..values.len().saturating_sub(1))
        .filter(|&k| values[k] > values[k - 1] && values[k] >= values[k + 1])
        .collect()
}

/// Full width at half maximum of the peak at `index`, linearly interpolated.
/// `None` if the half level is not reached on both sides.
pub fn full_width_half_max(x: &[f64], y: &[f64], index: usize) -> Option<f64> {
    let half = 0.5 * y[index];
    let mut left = None;
    for k in (0..index).rev() {
        if y[k] <= half {
            let f = (half - y[k]) / (y[k + 1] - y[k]);
            left = Some(x[k] + f * (x[k + 1] - x[k]));
            break;
        }
    }
    let mut right = None;
    for k in index + 1..y.len() {
        if y[k] <= half {
            let f = (y[k - 1] - half) / (y[k - 1] - y[k]);
            right = Some(x[k - 1] + f * (x[k] - x[k - 1]));
            break;
        }
    }
    Some(right? - left?)
}

/// `max_k |y_k - y_{n-1-k}|` for a grid symmetric about zero.
pub fn mirror_asymmetry(y: &[f64]) -> f64 {
    let n = y.len();
    (0..n).fold(0.0, |a, k| a.max((y[k] - y[n - 1 - k]).abs()))
}
