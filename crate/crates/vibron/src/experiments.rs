// Copyright 2026 vibron-lab contributors
// SPDX-License-Identifier: Apache-2.0

//! Named scenarios that wire the chain, laser, correlator and Fock modules
//! into complete runs producing datasets and a manifest.
//!
//! Parameters are in laboratory units: frequencies in Hz, laser detunings and
//! Rabi frequencies in units of the cooling linewidth, lengths in um, times in
//! us or ms as the field name says. Every scenario has a preset:
//!
//! ```
//! use vibron::experiments::{preset, run};
//! let cfg = preset("tqd").unwrap();
//! let out = run(&cfg).unwrap();
//! assert!(out.manifest.comparisons.iter().all(|c| c.pass));
//! ```

use crate::bessel::{first_max_j1, spin_current_coupling};
use crate::chain::{equilibrium_positions, tunneling_matrix, ChainGeometry, IonSpecies, TightBinding, TrapConfig};
use crate::constants::{hz, to_hz, TRANSVERSE_HZ};
use crate::error::{invalid, Error, Result};
use crate::fock::{self, FockSystem, ModeSpec, Operator, RamseyOptions, RamseyWindow};
use crate::gaussian::{
    self, build_bulk_generator, build_edge_generator, dephasing_matrix, disorder_average, site_currents,
    theory_predictions, CorrelatorState, DisorderMode, DisorderModel, GaussianGenerator, NoiseModel, Reservoirs,
};
use crate::io::{typed, ComparisonReport, Dataset, DatasetInfo, RunManifest, RunOutput};
use crate::laser::{doppler_coefficients, lamb_dicke, CoolingSpec, ReservoirParams};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioName {
    TqwBallistic,
    TqwDephasing,
    TqwDisorder,
    Tqd,
    DtqdSweep,
    LeadsStep,
    Switch,
    RamseyNumber,
    RamseyCurrent,
    FanoSweep,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 10] = [
        ScenarioName::TqwBallistic,
        ScenarioName::TqwDephasing,
        ScenarioName::TqwDisorder,
        ScenarioName::Tqd,
        ScenarioName::DtqdSweep,
        ScenarioName::LeadsStep,
        ScenarioName::Switch,
        ScenarioName::RamseyNumber,
        ScenarioName::RamseyCurrent,
        ScenarioName::FanoSweep,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioName::TqwBallistic => "tqw_ballistic",
            ScenarioName::TqwDephasing => "tqw_dephasing",
            ScenarioName::TqwDisorder => "tqw_disorder",
            ScenarioName::Tqd => "tqd",
            ScenarioName::DtqdSweep => "dtqd_sweep",
            ScenarioName::LeadsStep => "leads_step",
            ScenarioName::Switch => "switch",
            ScenarioName::RamseyNumber => "ramsey_number",
            ScenarioName::RamseyCurrent => "ramsey_current",
            ScenarioName::FanoSweep => "fano_sweep",
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ScenarioName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| invalid(format!("unknown scenario `{s}`")))
    }
}

fn schema(path: &str, msg: impl Into<String>) -> Error {
    Error::Schema { path: path.to_string(), msg: msg.into() }
}

fn check(ok: bool, path: &str, msg: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(schema(path, msg))
    }
}

fn positive(v: f64, path: &str) -> Result<()> {
    check(v.is_finite() && v > 0.0, path, "must be a positive finite number")
}

fn default_transverse_hz() -> f64 {
    TRANSVERSE_HZ
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpeciesName {
    Mg24,
    Mg25,
    Be9,
}

impl SpeciesName {
    pub fn species(self, transverse_hz: f64) -> IonSpecies {
        let mut s = match self {
            SpeciesName::Mg24 => IonSpecies::mg24(),
            SpeciesName::Mg25 => IonSpecies::mg25(),
            SpeciesName::Be9 => IonSpecies::be9(),
        };
        s.transverse_freq = hz(transverse_hz);
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrapSpec {
    Paul { axial_freq_hz: f64 },
    Lattice { spacing_um: f64 },
}

/// Ion species per site and the trap holding them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub species: Vec<SpeciesName>,
    pub trap: TrapSpec,
    #[serde(default = "default_transverse_hz")]
    pub transverse_freq_hz: f64,
}

impl ChainSpec {
    pub fn n_sites(&self) -> usize {
        self.species.len()
    }

    fn validate(&self, path: &str) -> Result<()> {
        check(self.species.len() >= 2, &format!("{path}.species"), "a chain needs at least 2 ions")?;
        positive(self.transverse_freq_hz, &format!("{path}.transverse_freq_hz"))?;
        match self.trap {
            TrapSpec::Paul { axial_freq_hz } => positive(axial_freq_hz, &format!("{path}.trap.axial_freq_hz"))?,
            TrapSpec::Lattice { spacing_um } => positive(spacing_um, &format!("{path}.trap.spacing_um"))?,
        }
        check(
            self.transverse_freq_hz > 2.0 * self.axial_hz().unwrap_or(0.0),
            &format!("{path}.transverse_freq_hz"),
            "must be well above the axial frequency",
        )
    }

    fn axial_hz(&self) -> Option<f64> {
        match self.trap {
            TrapSpec::Paul { axial_freq_hz } => Some(axial_freq_hz),
            TrapSpec::Lattice { .. } => None,
        }
    }

    pub fn geometry(&self) -> Result<ChainGeometry> {
        let mut names: Vec<SpeciesName> = Vec::new();
        let species_of: Vec<usize> = self
            .species
            .iter()
            .map(|s| {
                names.iter().position(|n| n == s).unwrap_or_else(|| {
                    names.push(*s);
                    names.len() - 1
                })
            })
            .collect();
        let species: Vec<IonSpecies> = names.iter().map(|s| s.species(self.transverse_freq_hz)).collect();
        let n_sites = self.n_sites();
        let trap = match self.trap {
            TrapSpec::Paul { axial_freq_hz } => TrapConfig::PaulTrap { axial_freq: hz(axial_freq_hz), n_sites },
            TrapSpec::Lattice { spacing_um } => TrapConfig::UniformLattice { spacing: spacing_um * 1e-6, n_sites },
        };
        equilibrium_positions(&trap, &species, &species_of)
    }

    pub fn build(&self) -> Result<(ChainGeometry, TightBinding)> {
        let g = self.geometry()?;
        let tb = tunneling_matrix(&g)?;
        Ok((g, tb))
    }
}

/// Standing-wave Doppler beam, detuning and Rabi frequency in linewidths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoolingBeam {
    pub detuning_gamma: f64,
    pub rabi_gamma: f64,
}

impl CoolingBeam {
    fn validate(&self, path: &str) -> Result<()> {
        check(
            self.detuning_gamma.is_finite() && self.detuning_gamma < 0.0,
            &format!("{path}.detuning_gamma"),
            "cooling needs a red (negative) detuning",
        )?;
        positive(self.rabi_gamma, &format!("{path}.rabi_gamma"))
    }

    pub fn reservoir(&self, species: &IonSpecies) -> Result<ReservoirParams> {
        let g = species.linewidth;
        let w = species.transverse_freq;
        doppler_coefficients(&CoolingSpec {
            rabi: self.rabi_gamma * g,
            detuning: self.detuning_gamma * g,
            linewidth: g,
            lamb_dicke: lamb_dicke(species.cooling_wavelength, species.mass, w),
            mode_freq: w,
        })
    }
}

fn edge_reservoirs(geom: &ChainGeometry, left: &CoolingBeam, right: &CoolingBeam) -> Result<Reservoirs> {
    let n = geom.n_sites();
    let mut r = Reservoirs::new();
    r.insert(0, left.reservoir(geom.species_at(0))?);
    r.insert(n - 1, right.reservoir(geom.species_at(n - 1))?);
    Ok(r)
}

/// Two-reservoir chain with a thermal initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TqdParams {
    pub chain: ChainSpec,
    pub left: CoolingBeam,
    pub right: CoolingBeam,
    /// Initial occupation of every site.
    pub initial_occupations: Vec<f64>,
    pub t_final_us: f64,
    pub n_times: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RabiSweep {
    pub min_gamma: f64,
    pub max_gamma: f64,
    pub points: usize,
    pub log_spaced: bool,
}

impl RabiSweep {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min_gamma];
        }
        (0..self.points)
            .map(|k| {
                let s = k as f64 / (self.points - 1) as f64;
                if self.log_spaced {
                    self.min_gamma * (self.max_gamma / self.min_gamma).powf(s)
                } else {
                    self.min_gamma + s * (self.max_gamma - self.min_gamma)
                }
            })
            .collect()
    }
}

/// Double dot with the right Rabi frequency swept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DtqdParams {
    #[serde(flatten)]
    pub base: TqdParams,
    pub sweep: RabiSweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TqwParams {
    pub chain: ChainSpec,
    pub left: CoolingBeam,
    pub right: CoolingBeam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TqwDephasingParams {
    pub chain: ChainSpec,
    pub left: CoolingBeam,
    pub right: CoolingBeam,
    /// Dephasing rate in units of the right reservoir's cooling rate.
    pub gamma_d_over_gamma_right: f64,
    /// Correlation lengths in units of the central nearest-neighbour spacing.
    pub xi_c_over_spacing: Vec<f64>,
    /// Sites dropped at each end of the bulk before the linear fit.
    pub fit_margin: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TqwDisorderParams {
    pub chain: ChainSpec,
    pub left: CoolingBeam,
    pub right: CoolingBeam,
    /// Spin-vibron splitting in units of the right reservoir's cooling rate.
    pub dw_minus_over_gamma_right: f64,
    pub mode: DisorderMode,
    pub n_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeadsParams {
    pub chain: ChainSpec,
    pub left: CoolingBeam,
    pub right: CoolingBeam,
    pub dot_site: usize,
    /// Lead splittings in units of the reservoir-lead tunneling.
    pub offset_over_j: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwitchConfig {
    /// Modulation index; the optimum `x*/2` when absent.
    #[serde(default)]
    pub zeta: Option<f64>,
    pub r: f64,
    pub axial_freq_hz: f64,
    pub offset_ratio: f64,
    pub n_points: usize,
    #[serde(default)]
    pub t_final_us: Option<f64>,
    #[serde(default)]
    pub pulse_times_us: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RamseyNumberParams {
    pub chain: ChainSpec,
    pub left: CoolingBeam,
    pub right: CoolingBeam,
    pub n_max: usize,
    /// Probe couplings in units of the effective damping of the dot.
    pub lambda_over_gamma: Vec<f64>,
    pub points: usize,
    pub max_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RamseyCurrentParams {
    pub zeta2: f64,
    pub axial_freq_hz: f64,
    pub offset_ratio: f64,
    pub t_final_us: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FanoParams {
    pub chain: ChainSpec,
    pub left: CoolingBeam,
    pub right: CoolingBeam,
    /// Left reservoir occupations; the right one keeps its Doppler value.
    pub nbar_left: Vec<f64>,
}

/// Typed parameters of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ScenarioParams {
    TqwBallistic(TqwParams),
    TqwDephasing(TqwDephasingParams),
    TqwDisorder(TqwDisorderParams),
    Tqd(TqdParams),
    DtqdSweep(DtqdParams),
    LeadsStep(LeadsParams),
    Switch(SwitchConfig),
    RamseyNumber(RamseyNumberParams),
    RamseyCurrent(RamseyCurrentParams),
    FanoSweep(FanoParams),
}

impl ScenarioParams {
    pub fn from_value(name: ScenarioName, v: Value) -> Result<Self> {
        let p = "params";
        Ok(match name {
            ScenarioName::TqwBallistic => ScenarioParams::TqwBallistic(typed(v, p)?),
            ScenarioName::TqwDephasing => ScenarioParams::TqwDephasing(typed(v, p)?),
            ScenarioName::TqwDisorder => ScenarioParams::TqwDisorder(typed(v, p)?),
            ScenarioName::Tqd => ScenarioParams::Tqd(typed(v, p)?),
            ScenarioName::DtqdSweep => ScenarioParams::DtqdSweep(typed(v, p)?),
            ScenarioName::LeadsStep => ScenarioParams::LeadsStep(typed(v, p)?),
            ScenarioName::Switch => ScenarioParams::Switch(typed(v, p)?),
            ScenarioName::RamseyNumber => ScenarioParams::RamseyNumber(typed(v, p)?),
            ScenarioName::RamseyCurrent => ScenarioParams::RamseyCurrent(typed(v, p)?),
            ScenarioName::FanoSweep => ScenarioParams::FanoSweep(typed(v, p)?),
        })
    }

    fn name(&self) -> ScenarioName {
        match self {
            ScenarioParams::TqwBallistic(_) => ScenarioName::TqwBallistic,
            ScenarioParams::TqwDephasing(_) => ScenarioName::TqwDephasing,
            ScenarioParams::TqwDisorder(_) => ScenarioName::TqwDisorder,
            ScenarioParams::Tqd(_) => ScenarioName::Tqd,
            ScenarioParams::DtqdSweep(_) => ScenarioName::DtqdSweep,
            ScenarioParams::LeadsStep(_) => ScenarioName::LeadsStep,
            ScenarioParams::Switch(_) => ScenarioName::Switch,
            ScenarioParams::RamseyNumber(_) => ScenarioName::RamseyNumber,
            ScenarioParams::RamseyCurrent(_) => ScenarioName::RamseyCurrent,
            ScenarioParams::FanoSweep(_) => ScenarioName::FanoSweep,
        }
    }
}

fn validate_two_bath(chain: &ChainSpec, left: &CoolingBeam, right: &CoolingBeam, min_sites: usize) -> Result<()> {
    chain.validate("params.chain")?;
    check(
        chain.n_sites() >= min_sites,
        "params.chain.species",
        &format!("this scenario needs at least {min_sites} ions"),
    )?;
    left.validate("params.left")?;
    right.validate("params.right")
}

fn validate_tqd(p: &TqdParams) -> Result<()> {
    validate_two_bath(&p.chain, &p.left, &p.right, 3)?;
    check(
        p.initial_occupations.len() == p.chain.n_sites(),
        "params.initial_occupations",
        "needs one entry per ion",
    )?;
    check(
        p.initial_occupations.iter().all(|n| n.is_finite() && *n >= 0.0),
        "params.initial_occupations",
        "occupations must be non-negative",
    )?;
    positive(p.t_final_us, "params.t_final_us")?;
    check(p.n_times >= 2, "params.n_times", "needs at least 2 samples")
}

/// A validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub schema_version: u32,
    pub scenario: ScenarioName,
    /// Seed of every stochastic element of the run.
    pub seed: u64,
    pub params: ScenarioParams,
}

impl Config {
    pub fn to_value(&self) -> Value {
        serde_json::json!({
            "schema_version": self.schema_version,
            "scenario": self.scenario,
            "seed": self.seed,
            "params": serde_json::to_value(&self.params).expect("parameters serialise"),
        })
    }

    pub fn validate(&self) -> Result<()> {
        check(self.params.name() == self.scenario, "params", "parameters do not match the scenario")?;
        match &self.params {
            ScenarioParams::TqwBallistic(p) => validate_two_bath(&p.chain, &p.left, &p.right, 3),
            ScenarioParams::TqwDephasing(p) => {
                validate_two_bath(&p.chain, &p.left, &p.right, 3)?;
                positive(p.gamma_d_over_gamma_right, "params.gamma_d_over_gamma_right")?;
                check(!p.xi_c_over_spacing.is_empty(), "params.xi_c_over_spacing", "needs at least one value")?;
                for (k, x) in p.xi_c_over_spacing.iter().enumerate() {
                    positive(*x, &format!("params.xi_c_over_spacing.{k}"))?;
                }
                check(
                    p.chain.n_sites() >= 2 * p.fit_margin + 5,
                    "params.fit_margin",
                    "leaves fewer than 3 interior sites",
                )
            }
            ScenarioParams::TqwDisorder(p) => {
                validate_two_bath(&p.chain, &p.left, &p.right, 3)?;
                check(
                    p.dw_minus_over_gamma_right.is_finite() && p.dw_minus_over_gamma_right >= 0.0,
                    "params.dw_minus_over_gamma_right",
                    "must be non-negative",
                )?;
                check(p.n_samples >= 1, "params.n_samples", "must be at least 1")
            }
            ScenarioParams::Tqd(p) => validate_tqd(p),
            ScenarioParams::DtqdSweep(p) => {
                validate_tqd(&p.base)?;
                positive(p.sweep.min_gamma, "params.sweep.min_gamma")?;
                positive(p.sweep.max_gamma, "params.sweep.max_gamma")?;
                check(p.sweep.max_gamma >= p.sweep.min_gamma, "params.sweep.max_gamma", "below min_gamma")?;
                check(p.sweep.points >= 1, "params.sweep.points", "must be at least 1")
            }
            ScenarioParams::LeadsStep(p) => {
                validate_two_bath(&p.chain, &p.left, &p.right, 5)?;
                check(
                    p.dot_site >= 2 && p.dot_site + 2 < p.chain.n_sites(),
                    "params.dot_site",
                    "needs a lead ion on each side",
                )?;
                check(!p.offset_over_j.is_empty(), "params.offset_over_j", "needs at least one value")?;
                check(
                    p.offset_over_j.iter().all(|x| x.is_finite() && *x >= 0.0),
                    "params.offset_over_j",
                    "offsets must be non-negative",
                )
            }
            ScenarioParams::Switch(p) => {
                if let Some(z) = p.zeta {
                    check(z.is_finite() && z >= 0.0, "params.zeta", "must be non-negative")?;
                }
                check(p.r.is_finite(), "params.r", "must be finite")?;
                positive(p.axial_freq_hz, "params.axial_freq_hz")?;
                positive(p.offset_ratio, "params.offset_ratio")?;
                check(p.n_points >= 2, "params.n_points", "needs at least 2 samples")?;
                if let Some(t) = p.t_final_us {
                    positive(t, "params.t_final_us")?;
                }
                for (k, t) in p.pulse_times_us.iter().enumerate() {
                    positive(*t, &format!("params.pulse_times_us.{k}"))?;
                }
                Ok(())
            }
            ScenarioParams::RamseyNumber(p) => {
                validate_two_bath(&p.chain, &p.left, &p.right, 3)?;
                check(p.chain.n_sites() == 3, "params.chain.species", "the number probe uses a single dot")?;
                check(p.n_max >= 2, "params.n_max", "must be at least 2")?;
                check(!p.lambda_over_gamma.is_empty(), "params.lambda_over_gamma", "needs at least one value")?;
                for (k, x) in p.lambda_over_gamma.iter().enumerate() {
                    positive(*x, &format!("params.lambda_over_gamma.{k}"))?;
                }
                check(p.points >= 8, "params.points", "needs at least 8 samples")?;
                positive(p.max_time_ms, "params.max_time_ms")
            }
            ScenarioParams::RamseyCurrent(p) => {
                check(
                    p.zeta2.is_finite() && (0.0..=0.3).contains(&p.zeta2),
                    "params.zeta2",
                    "must lie in [0, 0.3]",
                )?;
                positive(p.axial_freq_hz, "params.axial_freq_hz")?;
                positive(p.offset_ratio, "params.offset_ratio")?;
                positive(p.t_final_us, "params.t_final_us")?;
                check(p.n_points >= 2, "params.n_points", "needs at least 2 samples")
            }
            ScenarioParams::FanoSweep(p) => {
                validate_two_bath(&p.chain, &p.left, &p.right, 3)?;
                check(p.nbar_left.len() >= 2, "params.nbar_left", "needs at least 2 values")?;
                for (k, x) in p.nbar_left.iter().enumerate() {
                    check(x.is_finite() && *x >= 0.0, &format!("params.nbar_left.{k}"), "must be non-negative")?;
                }
                Ok(())
            }
        }
    }
}

const PRESETS: [(&str, &str); 11] = [
    ("tqd", include_str!("../presets/tqd.json")),
    ("dtqd_sweep", include_str!("../presets/dtqd_sweep.json")),
    ("tqw_ballistic", include_str!("../presets/tqw_ballistic.json")),
    ("tqw_ballistic_paul", include_str!("../presets/tqw_ballistic_paul.json")),
    ("tqw_dephasing", include_str!("../presets/tqw_dephasing.json")),
    ("tqw_disorder", include_str!("../presets/tqw_disorder.json")),
    ("leads_step", include_str!("../presets/leads_step.json")),
    ("switch", include_str!("../presets/switch.json")),
    ("ramsey_number", include_str!("../presets/ramsey_number.json")),
    ("ramsey_current", include_str!("../presets/ramsey_current.json")),
    ("fano_sweep", include_str!("../presets/fano_sweep.json")),
];

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

/// Raw JSON of a named preset.
pub fn preset_text(name: &str) -> Result<&'static str> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| invalid(format!("unknown preset `{name}` (available: {})", preset_names().join(", "))))
}

pub fn preset(name: &str) -> Result<Config> {
    crate::io::parse_config(preset_text(name)?)
}

/// Expected values for one dataset column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub name: String,
    pub column: String,
    pub expected: Vec<f64>,
    pub rel_tol: f64,
    /// Smallest denominator of the relative error; makes a zero expectation
    /// an absolute check.
    pub abs_floor: f64,
}

/// Relative-error table of a dataset column against predictions.
pub fn compare_to_theory(ds: &Dataset, pred: &Prediction) -> Result<ComparisonReport> {
    let values = ds
        .column(&pred.column)
        .ok_or_else(|| invalid(format!("dataset {} has no column {}", ds.name, pred.column)))?;
    if values.len() != pred.expected.len() {
        return Err(invalid(format!(
            "column {} has {} rows, prediction has {}",
            pred.column,
            values.len(),
            pred.expected.len()
        )));
    }
    let rel_errors: Vec<f64> = values
        .iter()
        .zip(&pred.expected)
        .map(|(x, y)| (x - y).abs() / y.abs().max(pred.abs_floor).max(f64::MIN_POSITIVE))
        .collect();
    let max_rel_error = rel_errors.iter().cloned().fold(0.0, f64::max);
    Ok(ComparisonReport {
        name: pred.name.clone(),
        column: pred.column.clone(),
        rel_tol: pred.rel_tol,
        abs_floor: pred.abs_floor,
        pass: rel_errors.iter().all(|e| *e <= pred.rel_tol),
        values,
        expected: pred.expected.clone(),
        rel_errors,
        max_rel_error,
    })
}

/// Least-squares line `y = a + b x`; returns `(b, a, R^2)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

fn linspace(t_final: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| t_final * k as f64 / (n - 1) as f64).collect()
}

fn steady_residual(gen: &GaussianGenerator, c: &CorrelatorState) -> f64 {
    gaussian::rhs(gen, &c.cmat).norm() / gen.kmat.norm().max(f64::MIN_POSITIVE)
}

struct Ctx {
    manifest: RunManifest,
    datasets: Vec<Dataset>,
}

impl Ctx {
    fn derived(&mut self, key: impl Into<String>, v: f64) {
        self.manifest.derived.insert(key.into(), v);
    }

    fn residual(&mut self, key: impl Into<String>, v: f64) {
        let key = key.into();
        let old = self.manifest.residuals.get(&key).cloned().unwrap_or(0.0);
        self.manifest.residuals.insert(key, old.max(v));
    }

    fn compare(&mut self, ds: &Dataset, name: &str, column: &str, expected: Vec<f64>, rel_tol: f64, abs_floor: f64) -> Result<()> {
        let pred = Prediction { name: name.into(), column: column.into(), expected, rel_tol, abs_floor };
        let r = compare_to_theory(ds, &pred)?;
        self.manifest.comparisons.push(r);
        Ok(())
    }

    fn reservoirs(&mut self, res: &Reservoirs) {
        let n = res.keys().max().cloned().unwrap_or(0);
        for (&site, r) in res {
            let side = if site == 0 { "left" } else if site == n { "right" } else { "site" };
            self.derived(format!("{side}.gamma"), r.gamma);
            self.derived(format!("{side}.delta"), r.delta);
            self.derived(format!("{side}.nbar"), r.nbar);
        }
    }

    fn warn(&mut self, w: &[String]) {
        for s in w {
            if !self.manifest.warnings.contains(s) {
                self.manifest.warnings.push(s.clone());
            }
        }
    }

    fn push(&mut self, ds: Dataset) {
        self.datasets.push(ds);
    }
}

/// Run a validated scenario.
pub fn run(cfg: &Config) -> Result<RunOutput> {
    cfg.validate()?;
    let start = Instant::now();
    let mut ctx = Ctx { manifest: RunManifest::new(cfg), datasets: Vec::new() };
    match &cfg.params {
        ScenarioParams::Tqd(p) => run_tqd(&mut ctx, p)?,
        ScenarioParams::DtqdSweep(p) => run_dtqd(&mut ctx, p)?,
        ScenarioParams::TqwBallistic(p) => run_ballistic(&mut ctx, p)?,
        ScenarioParams::TqwDephasing(p) => run_dephasing(&mut ctx, p)?,
        ScenarioParams::TqwDisorder(p) => run_disorder(&mut ctx, p, cfg.seed)?,
        ScenarioParams::LeadsStep(p) => run_leads(&mut ctx, p)?,
        ScenarioParams::Switch(p) => run_switch(&mut ctx, p)?,
        ScenarioParams::RamseyNumber(p) => run_ramsey_number(&mut ctx, p)?,
        ScenarioParams::RamseyCurrent(p) => run_ramsey_current(&mut ctx, p)?,
        ScenarioParams::FanoSweep(p) => run_fano(&mut ctx, p)?,
    }
    ctx.manifest.timings.insert("wall_time".into(), start.elapsed().as_secs_f64());
    ctx.manifest.datasets = ctx
        .datasets
        .iter()
        .map(|d| DatasetInfo { name: d.name.clone(), columns: d.columns.clone(), n_rows: d.rows.len() })
        .collect();
    for d in &ctx.datasets {
        d.check_finite()?;
    }
    Ok(RunOutput { datasets: ctx.datasets, manifest: ctx.manifest })
}

/// Edge and bulk steady states of a two-reservoir chain.
struct TwoBath {
    geom: ChainGeometry,
    tb: TightBinding,
    res: Reservoirs,
    edge: GaussianGenerator,
    bulk: GaussianGenerator,
    edge_ss: CorrelatorState,
    bulk_ss: CorrelatorState,
}

fn solve_two_bath(chain: &ChainSpec, left: &CoolingBeam, right: &CoolingBeam) -> Result<TwoBath> {
    let (geom, tb) = chain.build()?;
    let res = edge_reservoirs(&geom, left, right)?;
    let edge = build_edge_generator(&tb, &res)?;
    let bulk = build_bulk_generator(&tb, &res)?;
    let edge_ss = gaussian::steady_state(&edge)?;
    let bulk_ss = gaussian::steady_state(&bulk)?;
    Ok(TwoBath { geom, tb, res, edge, bulk, edge_ss, bulk_ss })
}

fn record_two_bath(ctx: &mut Ctx, s: &TwoBath, prefix: &str) -> Result<()> {
    ctx.reservoirs(&s.res);
    let th = theory_predictions(&s.tb, &s.res)?;
    ctx.derived(format!("{prefix}coupling_left"), th.gamma_l);
    ctx.derived(format!("{prefix}coupling_right"), th.gamma_r);
    ctx.derived(format!("{prefix}n_theory"), th.n_ss);
    ctx.derived(format!("{prefix}current_theory"), th.i_ss);
    ctx.derived("tunneling_01", s.tb.j(0, 1));
    ctx.derived("chain_length", s.geom.distance(0, s.geom.n_sites() - 1));
    ctx.residual("edge_steady_state", steady_residual(&s.edge, &s.edge_ss));
    ctx.residual("bulk_steady_state", steady_residual(&s.bulk, &s.bulk_ss));
    ctx.residual("equilibrium_force", s.geom.force_residual);
    ctx.warn(&s.edge.warnings);
    ctx.warn(&s.bulk.warnings);
    Ok(())
}

fn trajectory(name: &str, s: &TwoBath, init: &[f64], t_final: f64, n_times: usize) -> Result<Dataset> {
    let n = s.tb.n_sites();
    let mut cols = vec!["t_us".to_string()];
    cols.extend((0..n).map(|i| format!("edge_n{i}")));
    cols.extend(s.bulk.sites.iter().map(|i| format!("bulk_n{i}")));
    let mut ds = Dataset::new(name, cols);
    let times = linspace(t_final, n_times);
    let e = gaussian::evolve_at(&s.edge, &CorrelatorState::diagonal(init), &times)?;
    let b0: Vec<f64> = s.bulk.sites.iter().map(|&i| init[i]).collect();
    let b = gaussian::evolve_at(&s.bulk, &CorrelatorState::diagonal(&b0), &times)?;
    for (k, t) in times.iter().enumerate() {
        let mut row = vec![t * 1e6];
        row.extend(e[k].occupations());
        row.extend(b[k].occupations());
        ds.push(row)?;
    }
    Ok(ds)
}

fn run_tqd(ctx: &mut Ctx, p: &TqdParams) -> Result<()> {
    let s = solve_two_bath(&p.chain, &p.left, &p.right)?;
    record_two_bath(ctx, &s, "")?;
    let th = theory_predictions(&s.tb, &s.res)?;
    let mut prof = Dataset::with_columns("profile", &["site", "n_edge", "n_bulk", "n_theory"]);
    let bulk_occ = s.bulk_ss.occupations();
    for (row, &site) in s.bulk.sites.iter().enumerate() {
        prof.push(vec![site as f64, s.edge_ss.cmat[(site, site)].re, bulk_occ[row], th.n_ss])?;
    }
    let nb = s.bulk.sites.len();
    ctx.compare(&prof, "bulk generator vs closed form", "n_bulk", vec![th.n_ss; nb], 0.01, 0.0)?;
    ctx.compare(&prof, "edge generator vs closed form", "n_edge", vec![th.n_ss; nb], 0.03, 0.0)?;
    let mut cur = Dataset::with_columns("current", &["site", "inflow_edge", "outflow_edge", "current_theory"]);
    let sc = site_currents(&s.edge, &s.edge_ss);
    ctx.residual("continuity", sc.continuity_residual / th.i_ss.abs().max(1.0));
    for &site in &s.bulk.sites {
        cur.push(vec![site as f64, sc.inflow[site], sc.outflow[site], th.i_ss])?;
    }
    ctx.derived("current_edge", sc.outflow[s.bulk.sites[0]]);
    ctx.push(prof);
    ctx.push(cur);
    ctx.push(trajectory("trajectory", &s, &p.initial_occupations, p.t_final_us * 1e-6, p.n_times)?);
    Ok(())
}

fn run_dtqd(ctx: &mut Ctx, p: &DtqdParams) -> Result<()> {
    let b = &p.base;
    let nominal = solve_two_bath(&b.chain, &b.left, &b.right)?;
    record_two_bath(ctx, &nominal, "nominal.")?;
    let first = nominal.bulk.sites[0];
    let rows: Vec<Result<Vec<f64>>> = p
        .sweep
        .values()
        .par_iter()
        .map(|&om| {
            let right = CoolingBeam { rabi_gamma: om, ..b.right };
            let s = solve_two_bath(&b.chain, &b.left, &right)?;
            let th = theory_predictions(&s.tb, &s.res)?;
            let ne = s.bulk.sites.iter().map(|&i| s.edge_ss.cmat[(i, i)].re).sum::<f64>() / s.bulk.sites.len() as f64;
            let nb = s.bulk_ss.occupations().iter().sum::<f64>() / s.bulk.sites.len() as f64;
            let ie = site_currents(&s.edge, &s.edge_ss).outflow[first];
            let ib = site_currents(&s.bulk, &s.bulk_ss).outflow[0];
            Ok(vec![
                om,
                th.gamma_l / th.gamma_r,
                ne,
                nb,
                th.n_ss,
                ie,
                ib,
                th.i_ss,
                steady_residual(&s.edge, &s.edge_ss),
            ])
        })
        .collect();
    let mut ds = Dataset::with_columns(
        "sweep",
        &["rabi_right_gamma", "coupling_ratio", "n_edge", "n_bulk", "n_theory", "current_edge", "current_bulk", "current_theory"],
    );
    for r in rows {
        let mut r = r?;
        let res = r.pop().expect("residual column");
        ctx.residual("edge_steady_state", res);
        ds.push(r)?;
    }
    let nt = ds.column("n_theory").expect("column");
    let it = ds.column("current_theory").expect("column");
    ctx.compare(&ds, "edge occupation vs closed form", "n_edge", nt.clone(), 0.03, 0.0)?;
    ctx.compare(&ds, "bulk occupation vs closed form", "n_bulk", nt, 0.03, 0.0)?;
    ctx.compare(&ds, "edge current vs closed form", "current_edge", it, 0.03, 0.0)?;
    ctx.push(ds);
    ctx.push(trajectory("trajectory", &nominal, &b.initial_occupations, b.t_final_us * 1e-6, b.n_times)?);
    Ok(())
}

fn bulk_flatness(occ: &[f64], nbar_l: f64, nbar_r: f64) -> f64 {
    let bulk = &occ[1..occ.len() - 1];
    let m = bulk.iter().sum::<f64>() / bulk.len() as f64;
    let var = bulk.iter().map(|x| (x - m).powi(2)).sum::<f64>() / bulk.len() as f64;
    var.sqrt() / (nbar_l - nbar_r).abs()
}

fn run_ballistic(ctx: &mut Ctx, p: &TqwParams) -> Result<()> {
    let s = solve_two_bath(&p.chain, &p.left, &p.right)?;
    record_two_bath(ctx, &s, "")?;
    let th = theory_predictions(&s.tb, &s.res)?;
    let n = s.tb.n_sites();
    let occ = s.edge_ss.occupations();
    let mut prof = Dataset::with_columns("profile", &["site", "position_um", "n_edge"]);
    for i in 0..n {
        prof.push(vec![i as f64, s.geom.positions[i] * 1e6, occ[i]])?;
    }
    let mut bulk = Dataset::with_columns("bulk_profile", &["site", "n_edge", "n_bulk", "n_theory"]);
    for (row, &i) in s.bulk.sites.iter().enumerate() {
        bulk.push(vec![i as f64, occ[i], s.bulk_ss.cmat[(row, row)].re, th.n_ss])?;
    }
    let (nl, nr) = (s.res[&0].nbar, s.res[&(n - 1)].nbar);
    ctx.derived("flatness", bulk_flatness(&occ, nl, nr));
    let nb = s.bulk.sites.len();
    ctx.compare(&bulk, "edge generator vs closed form", "n_edge", vec![th.n_ss; nb], 0.02, 0.0)?;
    ctx.compare(&bulk, "bulk generator vs closed form", "n_bulk", vec![th.n_ss; nb], 0.02, 0.0)?;
    ctx.push(prof);
    ctx.push(bulk);
    Ok(())
}

/// Nearest-neighbour distance at the centre of the chain.
fn central_spacing(geom: &ChainGeometry) -> f64 {
    let n = geom.n_sites();
    geom.distance(n / 2 - 1, n / 2)
}

fn run_dephasing(ctx: &mut Ctx, p: &TqwDephasingParams) -> Result<()> {
    let (geom, tb) = p.chain.build()?;
    let res = edge_reservoirs(&geom, &p.left, &p.right)?;
    ctx.reservoirs(&res);
    let n = tb.n_sites();
    let edge = build_edge_generator(&tb, &res)?;
    ctx.warn(&edge.warnings);
    let spacing = central_spacing(&geom);
    let gamma_d = p.gamma_d_over_gamma_right * res[&(n - 1)].gamma;
    ctx.derived("spacing", spacing);
    ctx.derived("gamma_d", gamma_d);
    let mut cols = vec!["site".to_string(), "position_um".to_string(), "n_ballistic".to_string()];
    cols.extend(p.xi_c_over_spacing.iter().map(|x| format!("n_xi_{x}")));
    let ballistic = gaussian::steady_state(&edge)?;
    let profiles: Vec<Result<(Vec<f64>, f64)>> = p
        .xi_c_over_spacing
        .par_iter()
        .map(|&x| {
            let noise = NoiseModel { gamma_d, xi_c: x * spacing, tau_c: 0.0 };
            let gen = edge.clone().with_dephasing(&dephasing_matrix(&geom, &noise)?)?;
            let c = gaussian::steady_state(&gen)?;
            Ok((c.occupations(), steady_residual(&gen, &c)))
        })
        .collect();
    let mut occs = Vec::new();
    for r in profiles {
        let (o, res) = r?;
        ctx.residual("edge_steady_state", res);
        occs.push(o);
    }
    let lo = 1 + p.fit_margin;
    let hi = n - 1 - p.fit_margin;
    let xs: Vec<f64> = (lo..hi).map(|i| i as f64).collect();
    for (x, o) in p.xi_c_over_spacing.iter().zip(&occs) {
        let (slope, _, r2) = linear_fit(&xs, &o[lo..hi]);
        ctx.derived(format!("r2.xi_{x}"), r2);
        ctx.derived(format!("slope.xi_{x}"), slope);
    }
    let bo = ballistic.occupations();
    ctx.derived("flatness", bulk_flatness(&bo, res[&0].nbar, res[&(n - 1)].nbar));
    let mut ds = Dataset::new("profiles", cols);
    for i in 0..n {
        let mut row = vec![i as f64, geom.positions[i] * 1e6, bo[i]];
        row.extend(occs.iter().map(|o| o[i]));
        ds.push(row)?;
    }
    ctx.push(ds);
    Ok(())
}

/// Whether `v` never increases (`sign = -1`) or never decreases (`+1`).
pub fn is_monotone(v: &[f64], sign: f64) -> bool {
    v.windows(2).all(|w| sign * (w[1] - w[0]) >= 0.0)
}

fn run_disorder(ctx: &mut Ctx, p: &TqwDisorderParams, seed: u64) -> Result<()> {
    let (geom, tb) = p.chain.build()?;
    let res = edge_reservoirs(&geom, &p.left, &p.right)?;
    ctx.reservoirs(&res);
    let n = tb.n_sites();
    let dw = p.dw_minus_over_gamma_right * res[&(n - 1)].gamma;
    ctx.derived("dw_minus", dw);
    let model = DisorderModel { dw_minus: dw, affected_sites: (1..n - 1).collect(), mode: p.mode, n_samples: p.n_samples, seed };
    ctx.manifest.seeds.insert("disorder".into(), seed);
    let avg = disorder_average(|eps| build_edge_generator(&tb.apply_offsets(eps)?, &res), n, &model)?;
    let clean = gaussian::steady_state(&build_edge_generator(&tb, &res)?)?.occupations();
    ctx.derived("n_configs", avg.n_configs as f64);
    let interior = &avg.mean[1..n - 1];
    let sign = (res[&(n - 1)].nbar - res[&0].nbar).signum();
    ctx.derived("monotone", if is_monotone(interior, sign) { 1.0 } else { 0.0 });
    let xs: Vec<f64> = (1..n - 1).map(|i| i as f64).collect();
    let (slope, _, r2) = linear_fit(&xs, interior);
    ctx.derived("interior_slope", slope);
    ctx.derived("interior_r2", r2);
    let mut ds = Dataset::with_columns("profile", &["site", "position_um", "n_mean", "n_std", "n_clean"]);
    for i in 0..n {
        ds.push(vec![i as f64, geom.positions[i] * 1e6, avg.mean[i], avg.std[i], clean[i]])?;
    }
    ctx.push(ds);
    Ok(())
}

/// Steady profile and dot outflow with the lead splitting `dw`.
pub fn leads_profile(tb: &TightBinding, res: &Reservoirs, dot: usize, dw: f64) -> Result<(Vec<f64>, f64, f64)> {
    let n = tb.n_sites();
    let offsets: Vec<f64> = (0..n)
        .map(|i| {
            if i == 0 || i == n - 1 || i == dot {
                0.0
            } else if i < dot {
                -0.5 * dw
            } else {
                0.5 * dw
            }
        })
        .collect();
    let gen = build_edge_generator(&tb.apply_offsets(&offsets)?, res)?;
    let c = gaussian::steady_state(&gen)?;
    let cur = site_currents(&gen, &c).outflow[dot];
    Ok((c.occupations(), cur, steady_residual(&gen, &c)))
}

fn run_leads(ctx: &mut Ctx, p: &LeadsParams) -> Result<()> {
    let (geom, tb) = p.chain.build()?;
    let res = edge_reservoirs(&geom, &p.left, &p.right)?;
    ctx.reservoirs(&res);
    let n = tb.n_sites();
    let j = tb.j(0, 1).abs();
    ctx.derived("tunneling_01", j);
    let runs: Vec<Result<(Vec<f64>, f64, f64)>> =
        p.offset_over_j.par_iter().map(|&x| leads_profile(&tb, &res, p.dot_site, x * j)).collect();
    let mut cols = vec!["site".to_string(), "position_um".to_string()];
    cols.extend(p.offset_over_j.iter().map(|x| format!("n_offset_{x}")));
    let mut prof = Dataset::new("profiles", cols);
    let mut cur = Dataset::with_columns("currents", &["offset_over_j", "offset_hz", "current", "n_dot"]);
    let mut occs = Vec::new();
    for (x, r) in p.offset_over_j.iter().zip(runs) {
        let (o, c, resid) = r?;
        ctx.residual("edge_steady_state", resid);
        ctx.derived(format!("current.offset_{x}"), c);
        cur.push(vec![*x, to_hz(x * j), c, o[p.dot_site]])?;
        occs.push(o);
    }
    for i in 0..n {
        let mut row = vec![i as f64, geom.positions[i] * 1e6];
        row.extend(occs.iter().map(|o| o[i]));
        prof.push(row)?;
    }
    let c = cur.column("current").expect("column");
    let (cmin, cmax) = c.iter().fold((f64::INFINITY, 0.0f64), |(a, b), x| (a.min(x.abs()), b.max(x.abs())));
    if cmin > 0.0 {
        ctx.derived("current_ratio", cmax / cmin);
    }
    ctx.push(prof);
    ctx.push(cur);
    Ok(())
}

fn run_switch(ctx: &mut Ctx, p: &SwitchConfig) -> Result<()> {
    let base = fock::SwitchParams {
        zeta: p.zeta.unwrap_or(first_max_j1() / 2.0),
        r: p.r,
        spin_up: true,
        pulse_times: p.pulse_times_us.iter().map(|t| t * 1e-6).collect(),
        axial_freq: hz(p.axial_freq_hz),
        offset_ratio: p.offset_ratio,
        n_points: p.n_points,
        t_final: p.t_final_us.map(|t| t * 1e-6),
    };
    let runs: Vec<Result<fock::SwitchResult>> = [true, false]
        .par_iter()
        .map(|&up| fock::switch_scenario(&fock::SwitchParams { spin_up: up, ..base.clone() }))
        .collect();
    let mut maxima = Vec::new();
    for (label, r) in ["on", "off"].iter().zip(runs) {
        let r = r?;
        let mut ds = Dataset::with_columns(
            format!("switch_{label}"),
            &["t_us", "n_left", "n_dot", "n_right", "n_left_pat", "n_dot_pat", "n_right_pat"],
        );
        for (k, t) in r.times.iter().enumerate() {
            let (e, q) = (r.exact[k], r.pat[k]);
            ds.push(vec![t * 1e6, e[0], e[1], e[2], q[0], q[1], q[2]])?;
        }
        ctx.derived(format!("{label}.max_right_population"), r.max_right_population);
        ctx.derived(format!("{label}.max_population_diff"), r.max_population_diff);
        ctx.residual("norm_drift", r.norm_drift);
        ctx.derived("tunneling", r.j);
        ctx.derived("drive_freq", r.drive_freq);
        ctx.derived("window", r.window);
        maxima.push(r.max_right_population);
        let ex: Vec<f64> = ds.column("n_right").expect("column");
        ctx.compare(&ds, &format!("{label}: exact vs effective right population"), "n_right_pat", ex, 0.05, 1.0)?;
        ctx.push(ds);
    }
    if maxima[1] > 0.0 {
        ctx.derived("on_off_ratio", maxima[0] / maxima[1]);
    }
    Ok(())
}

/// Single-mode dot with the effective bulk damping of a three-ion chain, and
/// the closed-form `(n, S_nn(0))`.
pub fn reduced_dot(tb: &TightBinding, res: &Reservoirs, n_max: usize) -> Result<(FockSystem, f64, f64, f64)> {
    let bulk = build_bulk_generator(tb, res)?;
    if bulk.dim() != 1 {
        return Err(invalid("reduced dot needs exactly one bulk site"));
    }
    let w = bulk.wmat[(0, 0)].re;
    let k = bulk.kmat[(0, 0)].re;
    let lp = crate::C64::new(0.5 * k, 0.0);
    let lm = crate::C64::new(w + 0.5 * k, 0.0);
    let mut sys = FockSystem::new(vec![ModeSpec { site: bulk.sites[0], n_max }], Vec::new());
    sys.add_cooling(0, &ReservoirParams::from_lambdas(lp, lm));
    let nbar = k / (2.0 * w);
    Ok((sys, w, nbar, (nbar * nbar + nbar) / (2.0 * w)))
}

fn run_ramsey_number(ctx: &mut Ctx, p: &RamseyNumberParams) -> Result<()> {
    let (geom, tb) = p.chain.build()?;
    let res = edge_reservoirs(&geom, &p.left, &p.right)?;
    ctx.reservoirs(&res);
    let (sys, gamma, nbar, s0) = reduced_dot(&tb, &res, p.n_max)?;
    ctx.derived("gamma_eff", gamma);
    ctx.derived("n_theory", nbar);
    ctx.derived("noise_theory", s0);
    ctx.derived("tunneling_01", tb.j(0, 1));
    let n_op = Operator::n(0);
    let opts = RamseyOptions {
        probe_site: sys.modes[0].site,
        window: RamseyWindow::Auto { points: p.points, max_time: p.max_time_ms * 1e-3 },
    };
    let fits: Vec<Result<fock::RamseyResult>> = p
        .lambda_over_gamma
        .par_iter()
        .map(|&x| fock::ramsey_probe(&sys, x * gamma, &n_op, &opts))
        .collect();
    let mut ds = Dataset::with_columns(
        "fits",
        &["lambda_over_gamma", "lambda_hz", "mean", "noise0", "mean_theory", "noise_theory", "fit_rms"],
    );
    let mut smallest: Option<(f64, fock::RamseyResult)> = None;
    for (&x, r) in p.lambda_over_gamma.iter().zip(fits) {
        let r = r?;
        ctx.warn(&r.warnings);
        let (Some(mean), Some(noise), Some(fit)) = (r.mean, r.noise0, r.fit.as_ref()) else {
            ctx.warn(&[format!("fit failed at lambda = {x} gamma: {}", r.fit_error.clone().unwrap_or_default())]);
            continue;
        };
        ds.push(vec![x, to_hz(x * gamma), mean, noise, nbar, s0, fit.rms_residual])?;
        if smallest.as_ref().map_or(true, |(s, _)| x < *s) {
            smallest = Some((x, r));
        }
    }
    let (xmin, best) = smallest.ok_or_else(|| Error::FitFailed("no probe coupling produced a fit".into()))?;
    let mut limit = Dataset::with_columns("weak_probe_limit", &["lambda_over_gamma", "mean", "noise0"]);
    limit.push(vec![xmin, best.mean.unwrap_or(0.0), best.noise0.unwrap_or(0.0)])?;
    ctx.compare(&limit, "weak-probe mean vs closed form", "mean", vec![nbar], 0.10, 0.0)?;
    ctx.compare(&limit, "weak-probe noise vs closed form", "noise0", vec![s0], 0.10, 0.0)?;
    let mut coh = Dataset::with_columns("coherence", &["t_ms", "sx", "sy", "sx_fit"]);
    let fit = best.fit.as_ref().expect("fit present");
    for (k, t) in best.times.iter().enumerate() {
        coh.push(vec![t * 1e3, best.sx[k], best.sy[k], (fit.a * t).cos() * (-fit.b * t).exp()])?;
    }
    ctx.push(ds);
    ctx.push(limit);
    ctx.push(coh);
    Ok(())
}

fn run_ramsey_current(ctx: &mut Ctx, p: &RamseyCurrentParams) -> Result<()> {
    let mut cp = fock::CurrentProbeParams::new(p.zeta2);
    cp.axial_freq = hz(p.axial_freq_hz);
    cp.offset_ratio = p.offset_ratio;
    let setup = fock::current_probe_setup(&cp)?;
    let lam = spin_current_coupling(p.zeta2)?;
    ctx.derived("coupling", lam);
    if p.zeta2 > 0.0 {
        let exact = 4.0 * p.zeta2 / std::f64::consts::PI;
        ctx.derived("coupling_identity_error", (lam - exact).abs() / exact);
    }
    ctx.derived("tunneling_left", setup.tunneling[0].norm());
    ctx.derived("tunneling_right", setup.tunneling[1].norm());
    ctx.derived("drive_freq", setup.drive_freq);
    let (times, ex, ef) = fock::current_probe_exact(&cp, p.t_final_us * 1e-6, p.n_points)?;
    let names = ["n_left", "n_dot", "n_right", "sx", "sy"];
    let mut cols = vec!["t_us".to_string()];
    cols.extend(names.iter().map(|s| s.to_string()));
    cols.extend(names.iter().map(|s| format!("{s}_eff")));
    let mut ds = Dataset::new("dynamics", cols);
    for (k, t) in times.iter().enumerate() {
        let mut row = vec![t * 1e6];
        row.extend(ex[k]);
        row.extend(ef[k]);
        ds.push(row)?;
    }
    for (k, s) in names.iter().enumerate() {
        let expected: Vec<f64> = ex.iter().map(|r| r[k]).collect();
        ctx.compare(&ds, &format!("effective vs exact {s}"), &format!("{s}_eff"), expected, 0.05, 1.0)?;
    }
    ctx.push(ds);
    Ok(())
}

/// Fano factor of the symmetrised dot current for each left occupation,
/// evaluated exactly on the correlator level.
pub fn fano_curve(tb: &TightBinding, left: ReservoirParams, right: ReservoirParams, nbar_left: &[f64]) -> Result<Vec<[f64; 4]>> {
    let n = tb.n_sites();
    let dot = n / 2;
    nbar_left
        .par_iter()
        .map(|&nl| {
            let mut res = Reservoirs::new();
            res.insert(0, ReservoirParams::from_rates(left.gamma, nl)?);
            res.insert(n - 1, ReservoirParams::from_rates(right.gamma, right.nbar)?);
            let gen = build_edge_generator(tb, &res)?;
            let c = gaussian::steady_state(&gen)?;
            let (noise, f) = gaussian::fano_factor(&gen, &c, dot)?;
            Ok([nl, noise.mean, noise.s0.re, f])
        })
        .collect()
}

fn run_fano(ctx: &mut Ctx, p: &FanoParams) -> Result<()> {
    let (geom, tb) = p.chain.build()?;
    let res = edge_reservoirs(&geom, &p.left, &p.right)?;
    ctx.reservoirs(&res);
    let n = tb.n_sites();
    let rows = fano_curve(&tb, res[&0], res[&(n - 1)], &p.nbar_left)?;
    let mut ds = Dataset::with_columns("fano", &["nbar_left", "current", "noise0", "fano"]);
    for r in &rows {
        ds.push(r.to_vec())?;
    }
    let x: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let f: Vec<f64> = rows.iter().map(|r| r[3]).collect();
    let (slope, icpt, r2) = linear_fit(&x, &f);
    ctx.derived("fano_slope", slope);
    ctx.derived("fano_intercept", icpt);
    ctx.derived("fano_r2", r2);
    ctx.derived("fano_min", f.iter().cloned().fold(f64::INFINITY, f64::min));
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let sorted: Vec<f64> = order.iter().map(|&k| f[k]).collect();
    ctx.derived("fano_monotone", if is_monotone(&sorted, 1.0) { 1.0 } else { 0.0 });
    ctx.push(ds);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_parses_and_matches_its_scenario() {
        for name in preset_names() {
            let cfg = preset(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(name.starts_with(cfg.scenario.as_str()), "{name}");
        }
        for s in ScenarioName::ALL {
            assert!(preset_names().contains(&s.as_str()));
            assert_eq!(s.as_str().parse::<ScenarioName>().unwrap(), s);
        }
    }

    #[test]
    fn compare_handles_zero_expectation_with_floor() {
        let mut d = Dataset::with_columns("z", &["i"]);
        d.push(vec![1e-13]).unwrap();
        let pred = Prediction { name: "zero".into(), column: "i".into(), expected: vec![0.0], rel_tol: 1e-10, abs_floor: 1e-3 };
        let r = compare_to_theory(&d, &pred).unwrap();
        assert!(r.pass);
        let bad = Prediction { expected: vec![0.0, 1.0], ..pred };
        assert!(compare_to_theory(&d, &bad).is_err());
    }

    #[test]
    fn linear_fit_recovers_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let (b, a, r2) = linear_fit(&x, &y);
        assert!((b + 0.5).abs() < 1e-14 && (a - 2.0).abs() < 1e-14 && (r2 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn tqd_preset_has_documented_reservoirs() {
        let cfg = preset("tqd").unwrap();
        let ScenarioParams::Tqd(p) = &cfg.params else { panic!("wrong params") };
        let g = p.chain.geometry().unwrap();
        let res = edge_reservoirs(&g, &p.left, &p.right).unwrap();
        let (l, r) = (res[&0], res[&2]);
        assert!((to_hz(l.gamma) / 86e3 - 1.0).abs() < 0.05, "{}", to_hz(l.gamma));
        assert!((to_hz(r.gamma) / 106e3 - 1.0).abs() < 0.05, "{}", to_hz(r.gamma));
        assert!((l.nbar / 1.65 - 1.0).abs() < 0.05 && (r.nbar / 1.63 - 1.0).abs() < 0.05);
    }

    fn tqd_value() -> Value {
        serde_json::from_str(preset_text("tqd").unwrap()).unwrap()
    }

    #[test]
    fn negative_trap_frequency_names_its_path() {
        let mut v = tqd_value();
        v["params"]["chain"]["trap"]["axial_freq_hz"] = serde_json::json!(-5e5);
        match crate::io::config_from_value(v) {
            Err(Error::Schema { path, .. }) => assert_eq!(path, "params.chain.trap.axial_freq_hz"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected_with_path() {
        let mut v = tqd_value();
        v["params"]["left"]["power"] = serde_json::json!(1.0);
        match crate::io::config_from_value(v) {
            Err(Error::Schema { path, .. }) => assert!(path.starts_with("params.left"), "{path}"),
            other => panic!("{other:?}"),
        }
        let mut v = tqd_value();
        v["extra"] = serde_json::json!(true);
        assert!(matches!(crate::io::config_from_value(v), Err(Error::Schema { .. })));
    }

    #[test]
    fn config_value_round_trips() {
        for name in preset_names() {
            let cfg = preset(name).unwrap();
            assert_eq!(crate::io::config_from_value(cfg.to_value()).unwrap(), cfg);
        }
    }

    #[test]
    fn run_manifest_round_trips() {
        let out = run(&preset("tqd").unwrap()).unwrap();
        let text = out.manifest.to_json().unwrap();
        assert_eq!(RunManifest::from_json(&text).unwrap(), out.manifest);
        assert!(out.manifest.derived["left.gamma"] > 0.0);
    }

    #[test]
    fn zero_bias_carries_no_current() {
        let cfg = preset("tqd").unwrap();
        let ScenarioParams::Tqd(p) = &cfg.params else { panic!("wrong params") };
        let (g, tb) = p.chain.build().unwrap();
        let mut res = edge_reservoirs(&g, &p.left, &p.left).unwrap();
        let r0 = res[&0];
        res.insert(2, ReservoirParams::from_rates(res[&2].gamma, r0.nbar).unwrap());
        res.insert(0, ReservoirParams::from_rates(r0.gamma, r0.nbar).unwrap());
        let gen = build_edge_generator(&tb, &res).unwrap();
        let c = gaussian::steady_state(&gen).unwrap();
        let cur = site_currents(&gen, &c);
        assert!(cur.outflow[1].abs() < 1e-9 * tb.j(0, 1).abs(), "{}", cur.outflow[1]);
        assert!(theory_predictions(&tb, &res).unwrap().i_ss.abs() < 1e-12);
    }

    #[test]
    fn monotone_check() {
        assert!(is_monotone(&[3.0, 2.0, 2.0, 1.0], -1.0));
        assert!(!is_monotone(&[3.0, 2.0, 2.5], -1.0));
    }
}
