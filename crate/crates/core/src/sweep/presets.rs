//! Parameter grids of the published figure set.

use std::f64::consts::{PI, TAU};

use super::{Axis, Engine, Observable, OverlayKind, Parameter, ScanSpec};
use crate::model::SystemConfig;
use crate::{Error, Result};

pub const FIGURE_IDS: [&str; 13] = [
    "fig2", "fig3a", "fig3b", "fig3c", "fig3d", "fig4a", "fig4b", "fig4c", "fig4d", "fig5a", "fig5b", "fig6",
    "fig6b",
];

pub const DEFAULT_GRID: usize = 101;

const QD_MIN: f64 = 0.02;
const QD_MAX: f64 = PI - 0.02;
const MARGIN: f64 = 10.0;

fn omega_axis(c: &SystemConfig, n: usize) -> Axis {
    let w = 2.0 * c.omega0;
    Axis::linspace(Parameter::Omega, w - MARGIN, w + c.anharmonicity + MARGIN, n)
}

fn qd_axis(n: usize) -> Axis {
    Axis::linspace(Parameter::Qd, QD_MIN, QD_MAX, n)
}

fn pair(u: f64, gamma: f64, phi: f64) -> SystemConfig {
    let mut c = SystemConfig::uniform(2, 0.1, u, gamma, 0.0);
    c.drive_phases[1] = phi;
    c
}

/// Scan of a figure. `grid` overrides the default 101×101 resolution.
pub fn figure_preset(id: &str, grid: Option<(usize, usize)>) -> Result<ScanSpec> {
    let (n1, n2) = grid.unwrap_or((DEFAULT_GRID, DEFAULT_GRID));
    if n1 == 0 || n2 == 0 {
        return Err(Error::invalid("grid dimensions must be positive"));
    }
    let spec = match id {
        "fig2" => {
            let c = SystemConfig::single(0.1, 10.0, 0.0);
            let w = Axis::linspace(
                Parameter::OmegaScan,
                c.omega0 - MARGIN,
                c.omega0 + c.anharmonicity + MARGIN,
                n2,
            );
            ScanSpec::new(c.clone(), omega_axis(&c, n1), w, vec![Observable::Spectrum], Engine::Master)
        }
        "fig3a" | "fig3b" | "fig3c" | "fig3d" => {
            let (u, phi) = match id {
                "fig3a" => (1.0, 0.0),
                "fig3b" => (4.0, 0.0),
                "fig3c" => (10.0, 0.0),
                _ => (10.0, PI),
            };
            let c = pair(u, 0.1, phi);
            let mut s = ScanSpec::new(c.clone(), qd_axis(n1), omega_axis(&c, n2), vec![Observable::IMinus], Engine::Master);
            s.overlays = vec![OverlayKind::PairEnergies, OverlayKind::SingleExcitationDoubled];
            s
        }
        "fig4a" | "fig4b" | "fig4c" | "fig4d" => {
            let u = match id {
                "fig4a" => 1.0,
                "fig4b" => 4.0,
                "fig4c" => 10.0,
                _ => 100.0,
            };
            let mut c = pair(u, 0.05, 0.0);
            c.drive_freq = 2.0 * c.omega0 + u;
            ScanSpec::new(
                c,
                qd_axis(n1),
                Axis::linspace(Parameter::Phi(1), 0.0, TAU, n2),
                vec![Observable::IMinus, Observable::Directivity],
                Engine::Master,
            )
        }
        "fig5a" | "fig5b" => {
            let c = pair(10.0, 0.1, if id == "fig5a" { 0.0 } else { PI });
            let mut s = ScanSpec::new(c.clone(), qd_axis(n1), omega_axis(&c, n2), vec![Observable::G2mm], Engine::Master);
            s.overlays = vec![OverlayKind::PairEnergies];
            if id == "fig5a" {
                s.overlays.push(OverlayKind::G2Zero);
            }
            s
        }
        "fig6" | "fig6b" => {
            let mut c = SystemConfig::uniform(4, 0.1, 10.0, 0.0, 0.0);
            c.drive_amps = vec![0.1, 0.0, 0.0, 0.0];
            let (qd, om) = if id == "fig6" {
                (qd_axis(n1), omega_axis(&c, n2))
            } else {
                let w = 2.0 * c.omega0;
                (
                    Axis::linspace(Parameter::Qd, QD_MIN, 0.2, n1),
                    Axis::linspace(Parameter::Omega, w - 1.5, w + 0.5, n2),
                )
            };
            let mut s = ScanSpec::new(c, qd, om, vec![Observable::G2mm], Engine::Master);
            // the pair-truncated basis is exact at second order in the drive
            s.total_cutoff = Some(2);
            s.overlays = vec![OverlayKind::PairEnergies, OverlayKind::SubradiantN4];
            s
        }
        _ => {
            return Err(Error::invalid(format!(
                "unknown figure '{id}'; known: {}",
                FIGURE_IDS.join(", ")
            )))
        }
    };
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates() {
        for id in FIGURE_IDS {
            let s = figure_preset(id, None).unwrap();
            s.validate().unwrap();
            assert_eq!((s.axis1.len(), s.axis2.len()), (DEFAULT_GRID, DEFAULT_GRID), "{id}");
        }
        assert!(figure_preset("fig7", None).is_err());
    }

    #[test]
    fn single_qubit_spectrum_figure() {
        let s = figure_preset("fig2", Some((5, 7))).unwrap();
        assert_eq!(s.base.n_qubits, 1);
        assert_eq!((s.base.drive_amps[0], s.base.anharmonicity, s.base.gamma_nr), (0.1, 10.0, 0.0));
        assert_eq!(s.axis2.parameter, Parameter::OmegaScan);
        assert_eq!(s.observables, vec![Observable::Spectrum]);
        assert_eq!((s.axis1.len(), s.axis2.len()), (5, 7));
    }

    #[test]
    fn phase_maps_sit_on_the_single_qubit_resonance() {
        for id in ["fig4a", "fig4b", "fig4c", "fig4d"] {
            let s = figure_preset(id, None).unwrap();
            assert_eq!(s.base.drive_freq, 2.0 * s.base.omega0 + s.base.anharmonicity);
            assert_eq!(s.base.gamma_nr, 0.05);
            assert_eq!((s.axis1.parameter, s.axis2.parameter), (Parameter::Qd, Parameter::Phi(1)));
            assert_eq!(s.observables, vec![Observable::IMinus, Observable::Directivity]);
        }
    }

    #[test]
    fn four_qubit_figure_drives_first_qubit() {
        let s = figure_preset("fig6", None).unwrap();
        assert_eq!(s.base.n_qubits, 4);
        assert_eq!(s.base.drive_amps, vec![0.1, 0.0, 0.0, 0.0]);
        assert_eq!(s.base.gamma_nr, 0.0);
        assert_eq!(s.observables, vec![Observable::G2mm]);
    }

    #[test]
    fn regrid_keeps_range() {
        let mut s = figure_preset("fig3c", None).unwrap();
        s.regrid(3, 4);
        assert_eq!(s.axis1.values, vec![QD_MIN, PI / 2.0, QD_MAX]);
        assert_eq!(s.axis2.len(), 4);
        assert_eq!(s.axis2.values[3], 2.0 * s.base.omega0 + 20.0);
    }
}
