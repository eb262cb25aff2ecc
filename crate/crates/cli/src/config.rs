use std::path::{Path, PathBuf};

use gamma_core::materials::MaterialParams;
use gamma_core::spectral::{Grid, SolveConfig};
use gamma_core::symbols::{PhysicsId, SymbolTolerances};
use gamma_core::willis::Lattice;
use gamma_core::Complex64;
use serde::{Deserialize, Serialize};

use crate::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Verify,
    Solve,
    Effective,
    Willis,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Solve => "solve",
            Command::Effective => "effective",
            Command::Willis => "willis",
        }
    }
}

/// A number or a `[re, im]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexValue {
    Real(f64),
    Pair([f64; 2]),
}

impl ComplexValue {
    pub fn value(self) -> Complex64 {
        match self {
            ComplexValue::Real(x) => Complex64::new(x, 0.0),
            ComplexValue::Pair([a, b]) => Complex64::new(a, b),
        }
    }
}

pub fn complex_vec(v: &[ComplexValue]) -> Vec<Complex64> {
    v.iter().map(|z| z.value()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PhysicsList {
    One(PhysicsId),
    Many(Vec<PhysicsId>),
}

impl Default for PhysicsList {
    fn default() -> Self {
        PhysicsList::Many(Vec::new())
    }
}

impl PhysicsList {
    pub fn to_vec(&self) -> Vec<PhysicsId> {
        match self {
            PhysicsList::One(p) => vec![*p],
            PhysicsList::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Microstructure {
    Homogeneous,
    /// `tiles` squares per axis; tile phase `(sum of tile coordinates) mod phases`.
    Checkerboard {
        #[serde(default = "two")]
        tiles: usize,
    },
    /// Slabs normal to `axis`, one per phase, with the given volume fractions.
    Laminate {
        #[serde(default)]
        axis: usize,
        fractions: Vec<f64>,
    },
    Explicit { phase_of_cell: Vec<usize> },
}

impl Default for Microstructure {
    fn default() -> Self {
        Microstructure::Homogeneous
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialsSpec {
    pub phases: Vec<MaterialParams>,
    #[serde(default)]
    pub microstructure: Microstructure,
}

fn two() -> usize {
    2
}

fn one() -> f64 {
    1.0
}

/// The source `s` in `J = L E - s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSpec {
    Zero,
    Constant {
        values: Vec<ComplexValue>,
    },
    /// `scale` in one component everywhere.
    Unit {
        component: usize,
        #[serde(default = "one")]
        scale: f64,
    },
    PerPhase {
        values: Vec<Vec<ComplexValue>>,
    },
    /// `values * exp(2 pi i sum_a mode_a x_a / n_a)` over cell coordinates.
    PlaneWave {
        values: Vec<ComplexValue>,
        mode: Vec<i64>,
    },
    /// CSV files as written for `E` and `J`; paths relative to the config.
    File {
        path: PathBuf,
        #[serde(default)]
        imag_path: Option<PathBuf>,
    },
}

impl Default for SourceSpec {
    fn default() -> Self {
        SourceSpec::Zero
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModuliSpec {
    Constant {
        c: ComplexValue,
        s: ComplexValue,
        rho: ComplexValue,
    },
    Samples {
        c: Vec<ComplexValue>,
        s: Vec<ComplexValue>,
        rho: Vec<ComplexValue>,
    },
    /// Random modes and moduli; ignores the lattice.
    Random { count: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForcingSpec {
    Constant { value: ComplexValue },
    Random,
}

impl Default for ForcingSpec {
    fn default() -> Self {
        ForcingSpec::Constant {
            value: ComplexValue::Real(1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WillisSpec {
    #[serde(default)]
    pub lattice: Option<Lattice>,
    pub moduli: ModuliSpec,
    #[serde(default)]
    pub forcing: ForcingSpec,
    /// Prescribed `u0` for the eigenstrain solve.
    #[serde(default)]
    pub u0: Option<ComplexValue>,
}

fn s_report() -> String {
    "report.json".into()
}
fn s_e() -> String {
    "E.csv".into()
}
fn s_j() -> String {
    "J.csv".into()
}
fn s_eff() -> String {
    "effective.csv".into()
}
fn s_kernels() -> String {
    "kernels.csv".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default = "s_report")]
    pub report: String,
    #[serde(default = "s_e")]
    pub e: String,
    #[serde(default = "s_j")]
    pub j: String,
    #[serde(default = "s_eff")]
    pub effective: String,
    #[serde(default = "s_kernels")]
    pub kernels: String,
}

impl Default for OutputPaths {
    fn default() -> Self {
        OutputPaths {
            dir: None,
            report: s_report(),
            e: s_e(),
            j: s_j(),
            effective: s_eff(),
            kernels: s_kernels(),
        }
    }
}

fn default_samples() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Must match the subcommand when present.
    #[serde(default)]
    pub command: Option<Command>,
    /// Empty means every physics (verify only).
    #[serde(default)]
    pub physics: PhysicsList,
    #[serde(default = "default_samples")]
    pub sample_count: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: SymbolTolerances,
    #[serde(default)]
    pub grid: Option<Grid>,
    #[serde(default)]
    pub materials: Option<MaterialsSpec>,
    #[serde(default)]
    pub source: SourceSpec,
    #[serde(default)]
    pub mean_e: Option<Vec<ComplexValue>>,
    #[serde(default)]
    pub solver: SolveConfig,
    #[serde(default)]
    pub willis: Option<WillisSpec>,
    #[serde(default)]
    pub outputs: OutputPaths,
}

impl RunConfig {
    pub fn from_value(v: serde_json::Value) -> Result<Self, RunError> {
        serde_json::from_value(v).map_err(|e| RunError::Config(e.to_string()))
    }

    pub fn single_physics(&self) -> Result<PhysicsId, RunError> {
        match self.physics.to_vec().as_slice() {
            [p] => Ok(*p),
            other => Err(RunError::Config(format!(
                "this command needs exactly one physics, got {}",
                other.len()
            ))),
        }
    }
}

/// Reads a config file into JSON without interpreting it.
pub fn read_config_value(path: &Path) -> Result<serde_json::Value, RunError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))
}

/// Applies `key.path=value` overrides. The value is parsed as JSON and kept
/// as a string when that fails; numeric path segments index arrays.
pub fn apply_overrides(v: &mut serde_json::Value, sets: &[String]) -> Result<(), RunError> {
    for s in sets {
        let (key, raw) = s
            .split_once('=')
            .ok_or_else(|| RunError::Usage(format!("--set expects key=value, got `{s}`")))?;
        if key.is_empty() {
            return Err(RunError::Usage(format!("empty key in `{s}`")));
        }
        let value = serde_json::from_str(raw).unwrap_or_else(|_| serde_json::Value::String(raw.into()));
        let mut cur = &mut *v;
        for seg in key.split('.') {
            if cur.is_null() {
                *cur = serde_json::Value::Object(Default::default());
            }
            cur = match cur {
                serde_json::Value::Object(m) => m.entry(seg.to_string()).or_insert(serde_json::Value::Null),
                serde_json::Value::Array(a) => {
                    let i: usize = seg
                        .parse()
                        .map_err(|_| RunError::Usage(format!("`{seg}` is not an array index in `{key}`")))?;
                    let len = a.len();
                    a.get_mut(i)
                        .ok_or_else(|| RunError::Usage(format!("index {i} out of range ({len}) in `{key}`")))?
                }
                _ => return Err(RunError::Usage(format!("`{key}` descends into a scalar"))),
            };
        }
        *cur = value;
    }
    Ok(())
}
