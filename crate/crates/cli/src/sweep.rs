//! Parameter sweeps over the Cartesian product of manifest axes.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use fqco::{ControlArgument, ControllerKind, ControllerSpec, Mode};
use rayon::prelude::*;
use serde::Deserialize;

use crate::input::{self, LoadedProblem};
use crate::{build_config, output, CliResult, Failure, RunSettings};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepManifest {
    /// Problem file, relative to the manifest's directory.
    pub problem: PathBuf,
    /// Output directory, relative to the manifest's directory.
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub base: BaseConfig,
    #[serde(default)]
    pub axes: Axes,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("sweep")
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseConfig {
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default = "default_controller")]
    pub controller: ControllerChoice,
    #[serde(rename = "K")]
    pub k: Option<f64>,
    #[serde(rename = "K1")]
    pub k1: Option<f64>,
    #[serde(rename = "K2")]
    pub k2: Option<f64>,
    pub c1: Option<f64>,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_depth")]
    pub depth: usize,
    pub gamma: Option<GammaValue>,
    #[serde(default = "default_zeta")]
    pub zeta_init: Vec<f64>,
    #[serde(default)]
    pub monitor_dt_bound: bool,
    #[serde(default)]
    pub control_arg: ControlArgument,
}

impl Default for BaseConfig {
    fn default() -> Self {
        Self {
            mode: default_mode(),
            controller: default_controller(),
            k: None,
            k1: None,
            k2: None,
            c1: None,
            dt: default_dt(),
            depth: default_depth(),
            gamma: None,
            zeta_init: default_zeta(),
            monitor_dt_bound: false,
            control_arg: ControlArgument::Raw,
        }
    }
}

fn default_mode() -> Mode {
    Mode::FalqonC
}
fn default_controller() -> ControllerChoice {
    ControllerChoice::Name("standard".into())
}
fn default_dt() -> f64 {
    0.02
}
fn default_depth() -> usize {
    200
}
fn default_zeta() -> Vec<f64> {
    vec![0.0]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum GammaValue {
    One(f64),
    Each(Vec<f64>),
}

impl GammaValue {
    fn values(&self) -> Vec<f64> {
        match self {
            GammaValue::One(g) => vec![*g],
            GammaValue::Each(v) => v.clone(),
        }
    }

    fn label(&self) -> String {
        self.values().iter().map(|g| g.to_string()).collect::<Vec<_>>().join("+")
    }
}

/// A controller given by name or as a full spec object.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ControllerChoice {
    Name(String),
    Spec(ControllerSpec),
}

impl ControllerChoice {
    fn kind(&self) -> CliResult<ControllerKind> {
        match self {
            ControllerChoice::Name(s) => s.parse().map_err(Failure::input),
            ControllerChoice::Spec(s) => Ok(s.kind),
        }
    }

    fn label(&self) -> CliResult<String> {
        Ok(match self {
            ControllerChoice::Name(_) => self.kind()?.cli_name().to_string(),
            ControllerChoice::Spec(s) => format!("{}-K{}", s.kind.cli_name(), s.k),
        })
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axes {
    #[serde(default)]
    pub gamma: Vec<GammaValue>,
    #[serde(default)]
    pub controller: Vec<ControllerChoice>,
    #[serde(rename = "K", default)]
    pub k: Vec<f64>,
    #[serde(default)]
    pub c1: Vec<f64>,
    #[serde(default)]
    pub dt: Vec<f64>,
}

/// One point of the sweep grid.
#[derive(Debug, Clone)]
pub struct Coordinate {
    pub index: usize,
    pub name: String,
    pub gamma: Option<GammaValue>,
    pub controller: ControllerChoice,
    /// Axis values for `K` and `c1`; `None` when that axis is not swept.
    pub k: Option<f64>,
    pub c1: Option<f64>,
    pub dt: f64,
}

fn axis<T: Clone>(values: &[T], base: T) -> Vec<(T, bool)> {
    if values.is_empty() {
        vec![(base, false)]
    } else {
        values.iter().map(|v| (v.clone(), true)).collect()
    }
}

/// Enumerates the grid in the fixed axis order gamma, controller, K, c1, dt;
/// names encode the varied coordinates.
pub fn expand(manifest: &SweepManifest) -> CliResult<Vec<Coordinate>> {
    let base = &manifest.base;
    let axes = &manifest.axes;
    let mut out = Vec::new();
    for (gamma, g_var) in axis(&axes.gamma.iter().cloned().map(Some).collect::<Vec<_>>(), base.gamma.clone()) {
        for (controller, c_var) in axis(&axes.controller, base.controller.clone()) {
            for (k, k_var) in axis(&axes.k.iter().copied().map(Some).collect::<Vec<_>>(), None) {
                for (c1, c1_var) in axis(&axes.c1.iter().copied().map(Some).collect::<Vec<_>>(), None) {
                    for (dt, dt_var) in axis(&axes.dt, base.dt) {
                        let index = out.len();
                        let mut parts = vec![format!("run{index:03}")];
                        if g_var {
                            parts.push(format!("gamma-{}", gamma.as_ref().map(GammaValue::label).unwrap_or_default()));
                        }
                        if c_var {
                            parts.push(format!("controller-{}", controller.label()?));
                        }
                        if k_var {
                            parts.push(format!("K-{}", k.unwrap_or_default()));
                        }
                        if c1_var {
                            parts.push(format!("c1-{}", c1.unwrap_or_default()));
                        }
                        if dt_var {
                            parts.push(format!("dt-{dt}"));
                        }
                        out.push(Coordinate {
                            index,
                            name: parts.join("_"),
                            gamma: gamma.clone(),
                            controller: controller.clone(),
                            k,
                            c1,
                            dt,
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}

fn settings(base: &BaseConfig, c: &Coordinate) -> CliResult<RunSettings> {
    let mut spec = match &c.controller {
        ControllerChoice::Name(_) => {
            let mut s = ControllerSpec::new(c.controller.kind()?);
            if let Some(k) = base.k {
                s.k = k;
            }
            if let Some(k1) = base.k1 {
                s.k1 = k1;
            }
            if let Some(k2) = base.k2 {
                s.k2 = k2;
            }
            if let Some(c1) = base.c1 {
                s.c1 = c1;
            }
            s
        }
        ControllerChoice::Spec(s) => *s,
    };
    if let Some(k) = c.k {
        spec.k = k;
    }
    if let Some(c1) = c.c1 {
        spec.c1 = c1;
    }
    Ok(RunSettings {
        mode: base.mode,
        controller: spec,
        dt: c.dt,
        depth: base.depth,
        gamma: c.gamma.as_ref().map(GammaValue::values),
        zeta_init: base.zeta_init.clone(),
        monitor_dt_bound: base.monitor_dt_bound,
        control_arg: base.control_arg,
    })
}

struct Outcome {
    coordinate: Coordinate,
    settings: Option<RunSettings>,
    result: std::result::Result<fqco::LayerRecord, String>,
}

fn run_one(
    base: &BaseConfig,
    c: &Coordinate,
    loaded: &LoadedProblem,
    problem_path: &Path,
    out_dir: &Path,
) -> Outcome {
    let settings = match settings(base, c) {
        Ok(s) => s,
        Err(f) => {
            return Outcome {
                coordinate: c.clone(),
                settings: None,
                result: Err(format!("{:#}", f.error)),
            }
        }
    };
    let result = (|| -> anyhow::Result<fqco::LayerRecord> {
        let (config, source) = build_config(loaded, &settings).map_err(|f| f.error)?;
        let trace = fqco::run(&loaded.canonical, &config)?;
        output::write_run(out_dir, &c.name, problem_path, loaded, &trace, source)?;
        Ok(trace.last().clone())
    })()
    .map_err(|e| format!("{e:#}"));
    if let Err(e) = &result {
        log::warn!("sweep run {} failed: {e}", c.name);
    }
    Outcome {
        coordinate: c.clone(),
        settings: Some(settings),
        result,
    }
}

fn write_summary(path: &Path, outcomes: &[Outcome]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))?;
    w.write_record([
        "run", "status", "gamma", "controller", "K", "K1", "K2", "c1", "dt", "k", "V", "r_a", "P_s", "error",
    ])?;
    for o in outcomes {
        let c = &o.coordinate;
        let gamma = c.gamma.as_ref().map(GammaValue::label).unwrap_or_else(|| "default".into());
        let (controller, k, k1, k2, c1) = match &o.settings {
            Some(s) => (
                s.controller.kind.cli_name().to_string(),
                s.controller.k.to_string(),
                s.controller.k1.to_string(),
                s.controller.k2.to_string(),
                s.controller.c1.to_string(),
            ),
            None => Default::default(),
        };
        let mut row = vec![c.name.clone()];
        match &o.result {
            Ok(r) => row.extend([
                "ok".into(),
                gamma,
                controller,
                k,
                k1,
                k2,
                c1,
                c.dt.to_string(),
                r.k.to_string(),
                r.lyapunov.to_string(),
                r.approx_ratio.to_string(),
                r.success_prob.to_string(),
                String::new(),
            ]),
            Err(e) => row.extend([
                "failed".into(),
                gamma,
                controller,
                k,
                k1,
                k2,
                c1,
                c.dt.to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                e.clone(),
            ]),
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_manifest(path: &Path) -> CliResult<SweepManifest> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(Failure::input)?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::input(anyhow!("{}:{}:{}: {}", path.display(), e.line(), e.column(), e)))
}

pub fn cmd_sweep(manifest_path: &Path, jobs: usize, out_override: Option<&Path>) -> CliResult<u8> {
    let manifest = load_manifest(manifest_path)?;
    let root = manifest_path.parent().unwrap_or(Path::new("."));
    let problem_path = root.join(&manifest.problem);
    let out_dir = match out_override {
        Some(p) => p.to_path_buf(),
        None => root.join(&manifest.out_dir),
    };
    let loaded = input::load_problem(&problem_path)?;
    let grid = expand(&manifest)?;
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("cannot create {}", out_dir.display()))
        .map_err(Failure::domain)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(Failure::domain)?;
    let mut outcomes: Vec<Outcome> = pool.install(|| {
        grid.par_iter()
            .map(|c| run_one(&manifest.base, c, &loaded, &problem_path, &out_dir))
            .collect()
    });
    outcomes.sort_by_key(|o| o.coordinate.index);

    let summary = out_dir.join("summary.csv");
    write_summary(&summary, &outcomes).map_err(Failure::domain)?;
    let failed = outcomes.iter().filter(|o| o.result.is_err()).count();
    println!(
        "{} runs, {} failed, summary in {}",
        outcomes.len(),
        failed,
        summary.display()
    );
    Ok(if failed == 0 { 0 } else { 1 })
}
