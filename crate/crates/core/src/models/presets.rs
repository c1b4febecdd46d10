//! Published path-loss fits for the four indoor scenarios, embedded as
//! data. Every value is stored exactly as printed; each table carries a
//! `source` tag naming which published table it mirrors.

use serde::{Deserialize, Serialize};

use super::{AbgModel, CiModel, CifModel};
use crate::types::{FrequencyMode, PathLossKind, Scenario};

pub const SOURCE_CI: &str = "ci_ple";
pub const SOURCE_MULTIBAND_BEST: &str = "multiband_best";
pub const SOURCE_MULTIBAND_OMNI: &str = "multiband_omni";
pub const SOURCE_BEAM_COMBINATION: &str = "nlos_beam_combination";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NominalBand {
    #[serde(rename = "140GHz")]
    G140,
    #[serde(rename = "220GHz")]
    G220,
}

impl NominalBand {
    pub const ALL: [NominalBand; 2] = [NominalBand::G140, NominalBand::G220];

    pub fn nominal_ghz(self) -> f64 {
        match self {
            NominalBand::G140 => 140.0,
            NominalBand::G220 => 220.0,
        }
    }

    /// Centre of the measured sweep (130-143 and 201-209 GHz).
    pub fn center_ghz(self) -> f64 {
        match self {
            NominalBand::G140 => 136.5,
            NominalBand::G220 => 205.0,
        }
    }

    pub fn frequency_ghz(self, mode: FrequencyMode) -> f64 {
        match mode {
            FrequencyMode::Nominal => self.nominal_ghz(),
            FrequencyMode::Center => self.center_ghz(),
        }
    }

    /// Accepts "140", "140GHz", "220", "220 GHz".
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().trim_end_matches("GHz").trim() {
            "140" => Some(NominalBand::G140),
            "220" => Some(NominalBand::G220),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandPair<T> {
    #[serde(rename = "140GHz")]
    pub ghz140: T,
    #[serde(rename = "220GHz")]
    pub ghz220: T,
}

impl<T: Copy> BandPair<T> {
    pub fn get(&self, band: NominalBand) -> T {
        match band {
            NominalBand::G140 => self.ghz140,
            NominalBand::G220 => self.ghz220,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiTable {
    pub source: String,
    pub best_direction: BandPair<f64>,
    pub omni: BandPair<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbgParams {
    pub alpha: f64,
    pub beta_db: f64,
    pub gamma: f64,
    pub sigma_sf_db: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CifParams {
    pub n: f64,
    pub b: f64,
    pub f0_ghz: f64,
    pub sigma_sf_db: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultibandTable {
    pub source: String,
    pub abg: AbgParams,
    pub cif: CifParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiFit {
    pub ple: f64,
    pub sigma_sf_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamRow {
    pub beams: usize,
    #[serde(flatten)]
    pub fits: BandPair<CiFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamCombinationTable {
    pub source: String,
    pub best_direction: BandPair<CiFit>,
    pub coherent: Vec<BeamRow>,
    pub noncoherent: Vec<BeamRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioPreset {
    pub scenario: Scenario,
    pub ci: CiTable,
    pub multiband_best: MultibandTable,
    pub multiband_omni: MultibandTable,
    pub beam_combination: Option<BeamCombinationTable>,
}

impl ScenarioPreset {
    fn multiband(&self, kind: PathLossKind) -> Option<&MultibandTable> {
        match kind {
            PathLossKind::BestDirection => Some(&self.multiband_best),
            PathLossKind::Omni => Some(&self.multiband_omni),
            _ => None,
        }
    }

    /// CI model for `kind` at `band`. Best/omni come from the CI table;
    /// N-beam combinations exist only where a beam table was published.
    pub fn ci_model(&self, kind: PathLossKind, band: NominalBand, mode: FrequencyMode) -> Option<CiModel> {
        let beams = self.beam_combination.as_ref();
        let (ple, sigma) = match kind {
            PathLossKind::BestDirection => (
                self.ci.best_direction.get(band),
                beams.map(|t| t.best_direction.get(band).sigma_sf_db),
            ),
            PathLossKind::Omni => (self.ci.omni.get(band), None),
            PathLossKind::Coherent(n) => {
                let fit = beams?.coherent.iter().find(|r| r.beams == n)?.fits.get(band);
                (fit.ple, Some(fit.sigma_sf_db))
            }
            PathLossKind::NonCoherent(n) => {
                let fit = beams?.noncoherent.iter().find(|r| r.beams == n)?.fits.get(band);
                (fit.ple, Some(fit.sigma_sf_db))
            }
        };
        Some(CiModel {
            ple,
            sigma_sf_db: sigma,
            frequency_ghz: band.frequency_ghz(mode),
            kind,
            scenario: Some(self.scenario),
        })
    }

    pub fn abg_model(&self, kind: PathLossKind) -> Option<AbgModel> {
        let p = self.multiband(kind)?.abg;
        Some(AbgModel {
            alpha: p.alpha,
            beta_db: p.beta_db,
            gamma: p.gamma,
            sigma_sf_db: Some(p.sigma_sf_db),
            r_squared: Some(p.r_squared),
            kind,
            scenario: Some(self.scenario),
        })
    }

    pub fn cif_model(&self, kind: PathLossKind) -> Option<CifModel> {
        let p = self.multiband(kind)?.cif;
        Some(CifModel {
            n: p.n,
            b: p.b,
            f_avg_ghz: p.f0_ghz,
            sigma_sf_db: Some(p.sigma_sf_db),
            r_squared: Some(p.r_squared),
            kind,
            scenario: Some(self.scenario),
        })
    }
}

fn pair(ghz140: f64, ghz220: f64) -> BandPair<f64> {
    BandPair { ghz140, ghz220 }
}

fn ci_table(best: (f64, f64), omni: (f64, f64)) -> CiTable {
    CiTable {
        source: SOURCE_CI.into(),
        best_direction: pair(best.0, best.1),
        omni: pair(omni.0, omni.1),
    }
}

fn multiband(source: &str, abg: [f64; 5], cif: [f64; 5]) -> MultibandTable {
    MultibandTable {
        source: source.into(),
        abg: AbgParams {
            alpha: abg[0],
            beta_db: abg[1],
            gamma: abg[2],
            sigma_sf_db: abg[3],
            r_squared: abg[4],
        },
        cif: CifParams {
            n: cif[0],
            b: cif[1],
            f0_ghz: cif[2],
            sigma_sf_db: cif[3],
            r_squared: cif[4],
        },
    }
}

fn beam_pair(v: [f64; 4]) -> BandPair<CiFit> {
    BandPair {
        ghz140: CiFit { ple: v[0], sigma_sf_db: v[1] },
        ghz220: CiFit { ple: v[2], sigma_sf_db: v[3] },
    }
}

fn beam_rows(rows: [[f64; 4]; 5]) -> Vec<BeamRow> {
    rows.iter()
        .enumerate()
        .map(|(k, v)| BeamRow {
            beams: k + 1,
            fits: beam_pair(*v),
        })
        .collect()
}

fn nlos_beam_table() -> BeamCombinationTable {
    // columns: PLE 140, σ 140, PLE 220, σ 220
    BeamCombinationTable {
        source: SOURCE_BEAM_COMBINATION.into(),
        best_direction: beam_pair([2.59, 5.72, 2.78, 5.52]),
        coherent: beam_rows([
            [2.59, 5.72, 2.78, 5.52],
            [2.05, 4.60, 2.53, 4.54],
            [1.75, 3.93, 1.95, 3.93],
            [1.53, 3.46, 1.74, 3.50],
            [1.36, 3.10, 1.57, 3.18],
        ]),
        noncoherent: beam_rows([
            [2.59, 5.72, 2.78, 5.21],
            [2.34, 5.16, 2.53, 5.03],
            [2.19, 4.83, 2.39, 4.74],
            [2.09, 4.60, 2.29, 4.54],
            [2.01, 4.43, 2.22, 4.40],
        ]),
    }
}

/// All published scenario presets, in table row order.
pub fn load_presets() -> Vec<ScenarioPreset> {
    // abg: α, β, γ, σ, R²   cif: n, b, f0, σ, R²
    vec![
        ScenarioPreset {
            scenario: Scenario::MeetingRoom,
            ci: ci_table((1.94, 2.05), (1.44, 1.61)),
            multiband_best: multiband(
                SOURCE_MULTIBAND_BEST,
                [2.21, 21.65, 2.41, 2.80, 0.82],
                [2.00, 0.12, 184.14, 2.81, 0.69],
            ),
            multiband_omni: multiband(
                SOURCE_MULTIBAND_OMNI,
                [2.08, 16.73, 2.52, 2.91, 0.80],
                [1.53, 0.25, 184.14, 3.13, 0.54],
            ),
            beam_combination: None,
        },
        ScenarioPreset {
            scenario: Scenario::OfficeArea,
            ci: ci_table((2.11, 2.15), (1.67, 1.72)),
            multiband_best: multiband(
                SOURCE_MULTIBAND_BEST,
                [2.17, 28.31, 2.17, 1.74, 0.91],
                [2.13, 0.044, 182.18, 1.72, 0.89],
            ),
            multiband_omni: multiband(
                SOURCE_MULTIBAND_OMNI,
                [1.70, 27.58, 2.22, 1.39, 0.91],
                [1.70, 0.06, 182.18, 1.38, 0.89],
            ),
            beam_combination: None,
        },
        ScenarioPreset {
            scenario: Scenario::Hallway,
            ci: ci_table((1.79, 1.93), (1.25, 1.36)),
            multiband_best: multiband(
                SOURCE_MULTIBAND_BEST,
                [1.74, 13.90, 2.89, 1.51, 0.94],
                [1.86, 0.16, 178.00, 1.64, 0.93],
            ),
            multiband_omni: multiband(
                SOURCE_MULTIBAND_OMNI,
                [1.29, 11.54, 2.94, 1.67, 0.90],
                [1.30, 0.19, 178.00, 1.80, 0.84],
            ),
            beam_combination: None,
        },
        ScenarioPreset {
            scenario: Scenario::NLoS,
            ci: ci_table((2.59, 2.78), (1.78, 1.99)),
            multiband_best: multiband(
                SOURCE_MULTIBAND_BEST,
                [0.29, 38.05, 2.88, 2.78, 0.54],
                [2.68, 0.16, 180.00, 5.71, 0.50],
            ),
            multiband_omni: multiband(
                SOURCE_MULTIBAND_OMNI,
                [0.067, 27.27, 3.09, 1.19, 0.88],
                [1.88, 0.25, 180.00, 3.98, 0.52],
            ),
            beam_combination: Some(nlos_beam_table()),
        },
    ]
}

pub fn preset(scenario: Scenario) -> ScenarioPreset {
    load_presets()
        .into_iter()
        .find(|p| p.scenario == scenario)
        .expect("every scenario has a preset")
}

/// Pretty JSON document with one object per scenario.
pub fn presets_json() -> String {
    serde_json::to_string_pretty(&load_presets()).expect("presets serialize")
}
