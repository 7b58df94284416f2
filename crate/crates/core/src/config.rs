//! Run configuration as read from TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{PhantomMode, SolverConfig};
use crate::flux::{CubicTable, FluxModel, FluxRule, Tail};
use crate::measure::{Grid, InitialSpec, MeasureState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub x_lo: f64,
    pub x_hi: f64,
    pub cells: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FluxSection {
    InversePower {
        p: f64,
    },
    Bump,
    MonotoneTanh,
    Equilibrium {
        #[serde(default = "half")]
        level: f64,
        #[serde(default = "one")]
        knee: f64,
    },
    /// Knots interpolated by cubic Hermite pieces, constant past the last knot.
    Table {
        u: Vec<f64>,
        phi: Vec<f64>,
        lipschitz: f64,
        sup: f64,
        tail: Tail,
        #[serde(default)]
        search_resolution: Option<f64>,
    },
}

fn half() -> f64 {
    0.5
}

fn one() -> f64 {
    1.0
}

impl FluxSection {
    pub fn build(&self) -> Result<FluxModel> {
        match self {
            FluxSection::InversePower { p } => FluxModel::inverse_power(*p),
            FluxSection::Bump => Ok(FluxModel::bump()),
            FluxSection::MonotoneTanh => Ok(FluxModel::monotone_tanh()),
            FluxSection::Equilibrium { level, knee } => FluxModel::equilibrium(*level, *knee),
            FluxSection::Table { u, phi, lipschitz, sup, tail, search_resolution } => {
                let table = CubicTable::new(u.clone(), phi.clone())?;
                FluxModel::new(FluxRule::Table(table), *lipschitz, *sup, *tail, *search_resolution)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub end_time: f64,
    pub cfl: f64,
    pub u_cap: f64,
    pub phantom_mode: PhantomMode,
    pub snapshot_times: Vec<f64>,
    pub history_stride: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            end_time: d.end_time,
            cfl: d.cfl,
            u_cap: d.u_cap,
            phantom_mode: d.phantom_mode,
            snapshot_times: d.snapshot_times,
            history_stride: d.history_stride,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    /// Spatial x temporal bumps in the test-function family.
    pub family: [usize; 2],
    /// Levels for the entropy checks; the default grid when absent.
    pub k_grid: Option<Vec<f64>>,
    /// Repeat the checks on a grid twice as fine and require the residuals to drop.
    pub refine: bool,
    /// Extra time pairs for the contraction check.
    pub sampled_pairs: usize,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self { family: [5, 5], k_grid: None, refine: true, sampled_pairs: 10 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSection,
    pub flux: FluxSection,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub output: OutputSection,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        self.solver_config().validate()?;
        self.initial_state()?;
        if self.verify.family[0] == 0 || self.verify.family[1] == 0 {
            return Err(Error::InvalidConfig("verify.family needs at least one bump per direction".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.x_lo, self.grid.x_hi, self.grid.cells)
    }

    pub fn flux(&self) -> Result<FluxModel> {
        self.flux.build()
    }

    pub fn solver_config(&self) -> SolverConfig {
        let s = &self.solver;
        SolverConfig {
            cfl: s.cfl,
            phantom_mode: s.phantom_mode,
            u_cap: s.u_cap,
            snapshot_times: s.snapshot_times.clone(),
            end_time: s.end_time,
            history_stride: s.history_stride,
        }
    }

    /// Discretised initial data plus any warnings (dropped atoms and the like).
    pub fn initial_state(&self) -> Result<(MeasureState, Vec<String>)> {
        MeasureState::from_config(self.grid()?, &self.initial, self.solver.u_cap)
    }

    /// Same run on a grid `factor` times finer.
    pub fn refined(&self, factor: usize) -> Self {
        let mut c = self.clone();
        c.grid.cells *= factor;
        c
    }
}
