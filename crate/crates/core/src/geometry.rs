//! Rectangular waveguide mode bookkeeping.
//!
//! Natural units throughout: `hbar = eps0 = c = 1`, so angular frequencies and
//! wavenumbers share a unit and rates follow from `mu^2 omega^2 / (S k_z)`.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};

/// Relative guard band applied to every cutoff comparison.
pub const DEFAULT_CUTOFF_GUARD: f64 = 1e-9;

/// Transverse cross section `a x b` of a hollow rectangular guide.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveguideGeometry {
    a: f64,
    b: f64,
}

impl WaveguideGeometry {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::invalid("a", format!("width must be positive, got {a}")));
        }
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::invalid("b", format!("height must be positive, got {b}")));
        }
        Ok(Self { a, b })
    }

    pub fn square(a: f64) -> Result<Self> {
        Self::new(a, a)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Cross-sectional area `S = a b`.
    pub fn area(&self) -> f64 {
        self.a * self.b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeFamily {
    TE,
    TM,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModeIndex {
    family: ModeFamily,
    m: u32,
    n: u32,
}

impl ModeIndex {
    /// The fundamental mode, the only one wired into the emitter coupling.
    pub const TE10: ModeIndex = ModeIndex {
        family: ModeFamily::TE,
        m: 1,
        n: 0,
    };

    pub fn new(family: ModeFamily, m: u32, n: u32) -> Result<Self> {
        let mode = Self { family, m, n };
        if m == 0 && n == 0 {
            return Err(Error::UnsupportedMode(mode.to_string()));
        }
        if family == ModeFamily::TM && (m == 0 || n == 0) {
            return Err(Error::UnsupportedMode(mode.to_string()));
        }
        Ok(mode)
    }

    pub fn family(&self) -> ModeFamily {
        self.family
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Transverse wavenumber `h_mn = sqrt((m pi / a)^2 + (n pi / b)^2)`.
    pub fn transverse_wavenumber(&self, geom: &WaveguideGeometry) -> f64 {
        let kx = self.m as f64 * PI / geom.a;
        let ky = self.n as f64 * PI / geom.b;
        kx.hypot(ky)
    }

    /// Cutoff angular frequency `c h_mn`.
    pub fn cutoff(&self, geom: &WaveguideGeometry) -> f64 {
        self.transverse_wavenumber(geom)
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let family = match self.family {
            ModeFamily::TE => "TE",
            ModeFamily::TM => "TM",
        };
        write!(f, "{family}{}{}", self.m, self.n)
    }
}

fn check_above_cutoff(omega: f64, cutoff: f64, guard: f64) -> Result<()> {
    if !omega.is_finite() || omega <= cutoff * (1.0 + guard) {
        return Err(Error::BelowCutoff { omega, cutoff });
    }
    Ok(())
}

/// Positive axial root of `omega^2 = h_mn^2 + k_z^2`.
pub fn axial_wavenumber(omega0: f64, geom: &WaveguideGeometry, mode: ModeIndex) -> Result<f64> {
    axial_wavenumber_guarded(omega0, geom, mode, DEFAULT_CUTOFF_GUARD)
}

pub fn axial_wavenumber_guarded(
    omega0: f64,
    geom: &WaveguideGeometry,
    mode: ModeIndex,
    guard: f64,
) -> Result<f64> {
    let h = mode.transverse_wavenumber(geom);
    check_above_cutoff(omega0, h, guard)?;
    // (omega - h)(omega + h) keeps precision close to cutoff
    Ok(((omega0 - h) * (omega0 + h)).sqrt())
}

/// Frequency of a guided mode with axial wavenumber `kz`.
pub fn mode_frequency(kz: f64, geom: &WaveguideGeometry, mode: ModeIndex) -> f64 {
    mode.transverse_wavenumber(geom).hypot(kz)
}

/// Purcell-type enhancement `eta = 3 lambda0 lambda0z / (2 pi S)`.
pub fn enhancement_factor(lambda0: f64, lambda0z: f64, geom: &WaveguideGeometry) -> Result<f64> {
    if !(lambda0 > 0.0) {
        return Err(Error::invalid("lambda0", "wavelength must be positive"));
    }
    if !(lambda0z > 0.0) {
        return Err(Error::invalid("lambda0z", "wavelength must be positive"));
    }
    Ok(3.0 * lambda0 * lambda0z / (2.0 * PI * geom.area()))
}

/// Free-space spontaneous emission rate `omega0^3 mu^2 / (3 pi)`.
pub fn free_space_rate(mu: f64, omega0: f64) -> f64 {
    omega0.powi(3) * mu * mu / (3.0 * PI)
}

/// Emission rate into the TE10 mode, `2 mu^2 omega0^2 / (S k0z)`.
pub fn gamma_1d(mu: f64, omega0: f64, geom: &WaveguideGeometry) -> Result<f64> {
    let k0z = axial_wavenumber(omega0, geom, ModeIndex::TE10)?;
    Ok(2.0 * mu * mu * omega0 * omega0 / (geom.area() * k0z))
}

/// TE10 density of states per unit angular frequency for a guide of length `len`.
pub fn density_of_states(nu: f64, geom: &WaveguideGeometry, len: f64) -> Result<f64> {
    if !(len > 0.0) {
        return Err(Error::invalid("L", "quantization length must be positive"));
    }
    let h = ModeIndex::TE10.transverse_wavenumber(geom);
    check_above_cutoff(nu, h, DEFAULT_CUTOFF_GUARD)?;
    Ok(len / PI * nu / ((nu - h) * (nu + h)).sqrt())
}

/// Derived single-mode figures of merit at a transition frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub omega0: f64,
    pub k0z: f64,
    pub lambda0: f64,
    pub lambda0z: f64,
    pub eta: f64,
    pub gamma0: f64,
    pub gamma_1d: f64,
}

impl OperatingPoint {
    pub fn new(mu: f64, omega0: f64, geom: &WaveguideGeometry) -> Result<Self> {
        let k0z = axial_wavenumber(omega0, geom, ModeIndex::TE10)?;
        let lambda0 = 2.0 * PI / omega0;
        let lambda0z = 2.0 * PI / k0z;
        Ok(Self {
            omega0,
            k0z,
            lambda0,
            lambda0z,
            eta: enhancement_factor(lambda0, lambda0z, geom)?,
            gamma0: free_space_rate(mu, omega0),
            gamma_1d: gamma_1d(mu, omega0, geom)?,
        })
    }
}

/// Guided modes open at `omega`, in order of increasing cutoff. Degenerate
/// partners are listed separately.
pub fn propagating_modes(omega: f64, geom: &WaveguideGeometry, max_index: u32) -> Vec<(ModeIndex, f64)> {
    let mut out = Vec::new();
    for family in [ModeFamily::TE, ModeFamily::TM] {
        for m in 0..=max_index {
            for n in 0..=max_index {
                let Ok(mode) = ModeIndex::new(family, m, n) else {
                    continue;
                };
                let cutoff = mode.cutoff(geom);
                if omega > cutoff * (1.0 + DEFAULT_CUTOFF_GUARD) {
                    out.push((mode, cutoff));
                }
            }
        }
    }
    out.sort_by(|x, y| x.1.total_cmp(&y.1).then((x.0.n, x.0.m).cmp(&(y.0.n, y.0.m))));
    out
}
