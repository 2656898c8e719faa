//! JSON scenario files for `mdiew simulate`.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "state": { "name": "werner", "p": 0.9 },
//!   "witness": { "name": "werner" },
//!   "basis": "default",
//!   "measurement": { "kind": "ideal" },
//!   "scheme": "all-outcome",
//!   "shots": 100000,
//!   "trials": 10,
//!   "seed": 42,
//!   "output": "report.json"
//! }
//! ```
//!
//! States: `werner` (p), `w-noise` (p), `maximally-mixed` (parties),
//! `random-separable` (parties; drawn from the scenario seed), `file` (path).
//! Witnesses: `werner`, `w-state` (alpha), `ghz` (parties), `file` (path,
//! parties). Measurements: `ideal`, `noisy` (v), `random` (seed). Scheme:
//! `all-outcome`, `single-outcome` or `both`; `both` also accepts a
//! `shot_grid` list and produces a comparison report.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use mdiew_core::io::{read_basis, read_matrix};
use mdiew_core::states::{
    noisy_bsm, random_party_povms, random_separable, w_state_noise, werner, Povm,
};
use mdiew_core::{AncillaBasis, DensityMatrix, MeasurementModel, Seed, SeparableClass, Witness};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub state: StateSpec,
    pub witness: WitnessSpec,
    #[serde(default)]
    pub basis: BasisSpec,
    #[serde(default)]
    pub measurement: MeasurementSpec,
    #[serde(default)]
    pub scheme: SchemeSpec,
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default)]
    pub shot_grid: Option<Vec<u64>>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_shots() -> u64 {
    100_000
}

fn default_trials() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StateSpec {
    Werner { p: f64 },
    WNoise { p: f64 },
    MaximallyMixed { parties: usize },
    RandomSeparable { parties: usize },
    File { path: PathBuf },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WitnessSpec {
    Werner,
    WState { alpha: f64 },
    Ghz { parties: usize },
    File { path: PathBuf },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(untagged)]
pub enum BasisSpec {
    #[default]
    Default,
    File {
        file: PathBuf,
    },
    Named(String),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeasurementSpec {
    #[default]
    Ideal,
    Noisy {
        v: f64,
    },
    Random {
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeSpec {
    #[default]
    AllOutcome,
    SingleOutcome,
    Both,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading scenario {}", path.display()))?;
        let scenario: Scenario = serde_json::from_str(&text)
            .with_context(|| format!("parsing scenario {}", path.display()))?;
        if scenario.schema_version != SCHEMA_VERSION {
            bail!(
                "scenario schema_version {} is not supported (expected {SCHEMA_VERSION})",
                scenario.schema_version
            );
        }
        // relative file references resolve against the scenario's directory
        let base = path.parent().unwrap_or(Path::new("."));
        Ok(scenario.rebase(base))
    }

    fn rebase(mut self, base: &Path) -> Self {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let StateSpec::File { path } = &mut self.state {
            fix(path);
        }
        if let WitnessSpec::File { path } = &mut self.witness {
            fix(path);
        }
        if let BasisSpec::File { file } = &mut self.basis {
            fix(file);
        }
        self
    }

    pub fn state_label(&self) -> String {
        match &self.state {
            StateSpec::Werner { p } => format!("werner(p={p})"),
            StateSpec::WNoise { p } => format!("w-noise(p={p})"),
            StateSpec::MaximallyMixed { parties } => format!("maximally-mixed({parties})"),
            StateSpec::RandomSeparable { parties } => {
                format!("random-separable({parties}, seed={})", self.seed)
            }
            StateSpec::File { path } => format!("file({})", path.display()),
        }
    }

    pub fn build_state(&self) -> Result<DensityMatrix> {
        Ok(match &self.state {
            StateSpec::Werner { p } => werner(*p)?,
            StateSpec::WNoise { p } => w_state_noise(*p)?,
            StateSpec::MaximallyMixed { parties } => DensityMatrix::maximally_mixed(1 << parties),
            StateSpec::RandomSeparable { parties } => {
                random_separable(&vec![1; *parties], 3, Seed(self.seed))?
                    .state()
                    .clone()
            }
            StateSpec::File { path } => DensityMatrix::new(read_matrix(path)?)?,
        })
    }

    pub fn build_witness(&self) -> Result<Witness> {
        witness_from_spec(&self.witness)
    }

    pub fn build_basis(&self, parties: usize) -> Result<AncillaBasis> {
        match &self.basis {
            BasisSpec::Default => Ok(AncillaBasis::default_basis(parties)),
            BasisSpec::Named(n) if n == "default" => Ok(AncillaBasis::default_basis(parties)),
            BasisSpec::Named(n) => {
                bail!("unknown basis {n:?}; use \"default\" or {{\"file\": path}}")
            }
            BasisSpec::File { file } => Ok(read_basis(file, parties)?),
        }
    }

    pub fn build_model(&self, parties: usize) -> Result<MeasurementModel> {
        let povms: Vec<Povm> = match &self.measurement {
            MeasurementSpec::Ideal => return Ok(MeasurementModel::IdealBsm),
            MeasurementSpec::Noisy { v } => vec![noisy_bsm(*v)?; parties],
            MeasurementSpec::Random { seed } => {
                random_party_povms(parties, &mut Seed(*seed).rng())?
            }
        };
        Ok(MeasurementModel::PerPartyPovm(povms))
    }

    pub fn measurement_label(&self) -> String {
        match &self.measurement {
            MeasurementSpec::Ideal => "ideal-bsm".into(),
            MeasurementSpec::Noisy { v } => format!("noisy-bsm(v={v})"),
            MeasurementSpec::Random { seed } => format!("random-povm(seed={seed})"),
        }
    }
}

/// Builds a witness from a spec; matrix files are declared fully separable,
/// which only matters for the sampling harness.
pub fn witness_from_spec(spec: &WitnessSpec) -> Result<Witness> {
    Ok(match spec {
        WitnessSpec::Werner => Witness::werner(),
        WitnessSpec::WState { alpha } => Witness::w_state(*alpha)?,
        WitnessSpec::Ghz { parties } => {
            Witness::ghz(*parties, SeparableClass::KProducible(parties - 1))?
        }
        WitnessSpec::File { path } => {
            let m = read_matrix(path)?;
            let d = m.nrows();
            if !d.is_power_of_two() || d < 2 {
                bail!("witness matrix has dimension {d}, which is not a qubit register");
            }
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            Witness::new(
                name,
                d.trailing_zeros() as usize,
                m,
                SeparableClass::FullySeparable,
            )?
        }
    })
}
