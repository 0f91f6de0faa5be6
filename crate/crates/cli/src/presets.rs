//! Named parameter sets, one per reference plot.
//!
//! Values that had to be chosen rather than read off are listed in
//! [`describe`].

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use crate::config::{
    EvolveConfig, PhaseMapConfig, Scenario, ScenarioConfig, SpectrumConfig, SweepConfig, SweepParameter, SystemConfig,
};
use crate::error::ConfigError;

pub const NAMES: [&str; 14] = [
    "fig2a", "fig2b", "fig3a", "fig3b", "fig3c", "fig3d", "fig4a", "fig4b", "fig5a", "fig5b", "fig6a", "fig6b", "fig6c",
    "fig6d",
];

/// Pair with separation `r12` centred on `rc`.
fn pair(rc: f64, r12: f64) -> Vec<f64> {
    vec![rc + 0.5 * r12, rc - 0.5 * r12]
}

const DIAGONAL: [f64; 3] = [FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0];

fn base(scenario: Scenario, name: &str, positions: Vec<f64>, r: f64) -> ScenarioConfig {
    ScenarioConfig {
        scenario: Some(scenario),
        preset: Some(name.to_string()),
        system: SystemConfig {
            positions,
            r,
            ..SystemConfig::default()
        },
        ..ScenarioConfig::default()
    }
}

fn spectrum(name: &str, positions: Vec<f64>, r: f64, theta: f64) -> ScenarioConfig {
    let mut c = base(Scenario::Spectrum, name, positions, r);
    c.system.theta = theta;
    c.system.rabi = 4.0;
    c
}

pub fn preset(name: &str) -> Result<ScenarioConfig, ConfigError> {
    let cfg = match name {
        "fig2a" => {
            let mut c = base(Scenario::Evolve, name, vec![0.0], 0.5);
            c.evolve = EvolveConfig {
                bloch: Some(vec![DIAGONAL]),
                t_max: 10.0,
                samples: 1001,
                compare_thermal: true,
                ..EvolveConfig::default()
            };
            c
        }
        "fig2b" => {
            let mut c = base(Scenario::Sweep, name, vec![0.0], 0.5);
            c.sweep = SweepConfig::default();
            c
        }
        "fig3a" => {
            let mut c = base(Scenario::Evolve, name, pair(0.0, 0.5), 0.5);
            c.evolve = EvolveConfig {
                bloch: Some(vec![DIAGONAL; 2]),
                t_max: 20.0,
                samples: 2001,
                compare_thermal: true,
                ..EvolveConfig::default()
            };
            c
        }
        "fig3b" => {
            let mut c = base(Scenario::Evolve, name, pair(0.0, 0.5), 0.5);
            c.evolve = EvolveConfig {
                initial: "excited".into(),
                t_max: 20.0,
                samples: 2001,
                populations: true,
                compare_thermal: true,
                ..EvolveConfig::default()
            };
            c
        }
        "fig3c" => {
            let mut c = base(Scenario::Sweep, name, pair(0.0, 0.5), 0.5);
            c.sweep = SweepConfig {
                parameter: SweepParameter::Separation,
                start: 0.01,
                stop: 1.0,
                points: 100,
                ..SweepConfig::default()
            };
            c
        }
        "fig3d" => {
            let mut c = base(Scenario::Sweep, name, pair(0.0, 1.0), 0.5);
            c.sweep = SweepConfig {
                parameter: SweepParameter::Shift,
                start: 0.0,
                stop: 0.5,
                points: 51,
                ..SweepConfig::default()
            };
            c
        }
        "fig4a" | "fig4b" => {
            let mut c = base(Scenario::Evolve, name, pair(0.0, 0.25), 1.0);
            c.evolve = EvolveConfig {
                initial: "ground".into(),
                t_max: 50.0,
                samples: 501,
                entanglement: true,
                ..EvolveConfig::default()
            };
            c
        }
        "fig5a" => {
            let mut c = base(Scenario::Steady, name, pair(0.0, 0.3), 0.5);
            c.phase_map = Some(PhaseMapConfig::default());
            c
        }
        "fig5b" => {
            let mut c = base(Scenario::PhaseMap, name, pair(0.0, 0.3), 0.5);
            c.phase_map = Some(PhaseMapConfig {
                n_min: 0.5,
                n_max: 4.0,
                n_points: 8,
                rc_min: 0.0,
                rc_max: 0.125,
                rc_points: 126,
                widths: vec![0.5, 1.0, 2.0, 4.0],
            });
            c
        }
        "fig6a" => {
            let mut c = spectrum(name, vec![0.0, 0.01], 0.5, 0.0);
            c.spectrum = SpectrumConfig {
                horizon: 2500.0,
                samples: 50_001,
                omega_max: 6.0,
                omega_points: 1201,
                compare_uncoupled: true,
                ..SpectrumConfig::default()
            };
            c
        }
        "fig6b" => {
            let mut c = spectrum(name, vec![0.0, 0.25], 0.5, 0.0);
            c.spectrum.compare_uncoupled = true;
            c
        }
        "fig6c" => {
            let mut c = spectrum(name, vec![0.0, 1.0], 0.5, FRAC_PI_2);
            c.spectrum.initial = Some("ground".into());
            c
        }
        "fig6d" => {
            let mut c = spectrum(name, pair(0.0, 0.25), 0.5, 0.0);
            c.spectrum.initial = Some("ground".into());
            c
        }
        other => return Err(ConfigError::UnknownPreset(other.to_string(), NAMES.join(", "))),
    };
    Ok(cfg)
}

/// What the preset reproduces and which unstated parameters it fixes.
pub fn describe(name: &str) -> Option<&'static str> {
    Some(match name {
        "fig2a" => "single-emitter dephasing at r = 0.5 with thermal comparison; chosen: position 0, start state with Bloch vector (1, 1, 0)/sqrt 2",
        "fig2b" => "single-emitter dephasing rates versus position over one wavelength, r = 0.5",
        "fig3a" => "pair with r12 = 0.5, r = 0.5, rc = 0; first-emitter polarisation; chosen: start state with Bloch vectors (1, 1, 0)/sqrt 2. The r12 = 1.0 curves: set positions = [0.5, -0.5]",
        "fig3b" => "pair with r12 = 0.5, r = 0.5, rc = 0; populations with thermal comparison; chosen: start state |ee>",
        "fig3c" => "pair dephasing rates versus separation at rc = 0, r = 0.5; chosen: separation range 0.01..1",
        "fig3d" => "pair with r12 = 1 dephasing rates versus centre position, r = 0.5. Five emitters: positions = [-2, -1, 0, 1, 2]",
        "fig4a" | "fig4b" => "pair with r = 1, rc = 0, r12 = 0.25; concurrence and NOON fidelity; other start states via evolve.initial",
        "fig5a" => "steady concurrence over N in [0, 4] and rc in [0, 0.5]; separation 0.3 (the steady state does not depend on it)",
        "fig5b" => "width of the entangled region around rc = 0 for N = 0.5, 1, 2, 4",
        "fig6a" => "drive 4, pair r1 = 0, r2 = 0.01, r = 0.5, theta = 0; coupled and uncoupled; long horizon and an odd 1201-point grid over |omega| <= 6 resolve the narrow central peak",
        "fig6b" => "drive 4, pair r1 = 0, r2 = 0.25, r = 0.5, theta = 0; coupled and uncoupled",
        "fig6c" => "drive 4, pair r1 = 0, r2 = 1, theta = pi/2, r = 0.5 (set r = 1 for the second curve); steady state reached from |gg> because a dark state exists",
        "fig6d" => "drive 4, pair at +-0.125, theta = 0, r = 0.5 (set positions = [0.25, -0.25] for the second curve); steady state reached from |gg>",
        _ => return None,
    })
}
