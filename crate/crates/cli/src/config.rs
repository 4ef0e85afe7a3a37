//! Scenario files and their command-line overrides.
//!
//! A scenario file is TOML with the sections `scenario`, `catalog`,
//! `geometry`, `links`, `sweep`, `optimize` and `simulate`. Every key can be
//! overridden on the command line by the flag of the same name with `_`
//! spelled `-` (`q_s` becomes `--q-s`).
//!
//! `q_u`/`p_h` are either given in `[scenario]` or derived from `[catalog]`,
//! never both; the five link probabilities are either given in `[links]` or
//! derived from `[geometry]`, never both.

use std::fmt;
use std::path::Path;

use clap::Args;
use edgecache::analysis::ScenarioParams;
use edgecache::catalog::{self, CacheConfig, CachePolicy, ZipfCatalog};
use edgecache::phy::{db_to_linear, mw_to_watts, Geometry, LinkProbabilities};
use edgecache::simulator::{RequestModel, SimConfig};
use serde::Deserialize;

use crate::error::CliError;

/// The reference deployment, shipped with the binary.
pub const DEFAULT_SCENARIO: &str = include_str!("../scenarios/default.toml");

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub scenario: ScenarioSection,
    pub catalog: Option<CatalogSection>,
    pub geometry: Option<GeometrySection>,
    pub links: Option<LinksSection>,
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub optimize: OptimizeSection,
    #[serde(default)]
    pub simulate: SimulateSection,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub lambda: Option<f64>,
    pub q_s: Option<f64>,
    pub q_c: Option<f64>,
    pub q_u: Option<f64>,
    pub p_h: Option<f64>,
    pub alpha: Option<f64>,
    pub weight: Option<f64>,
    pub helper_retry_uses_su_link: Option<bool>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CatalogSection {
    pub library_size: u64,
    pub zipf_shape: f64,
    pub user_capacity: u64,
    pub helper_capacity: u64,
    #[serde(default = "default_policy")]
    pub policy: String,
}

fn default_policy() -> String {
    "mpc".into()
}

/// Powers and noise in mW, distances in m, thresholds in dB.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub helper_power_mw: f64,
    pub dc_power_mw: f64,
    pub r_sd: f64,
    pub r_su: f64,
    pub r_dc_d: f64,
    pub r_dc_u: f64,
    pub pathloss_exponent: f64,
    pub noise_d_mw: f64,
    pub noise_u_mw: f64,
    pub threshold_d_db: f64,
    pub threshold_u_db: f64,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LinksSection {
    pub p_sd_s: Option<f64>,
    pub p_sd_s_dc: Option<f64>,
    pub p_su_s: Option<f64>,
    pub p_dc_dc: Option<f64>,
    pub p_dc_s_dc: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: Option<String>,
    pub from: Option<f64>,
    pub to: Option<f64>,
    pub step: Option<f64>,
    pub values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OptimizeSection {
    /// Step of the grid oracle run next to the optimizer; 0 disables it.
    pub grid_step: Option<f64>,
    /// `auto`, `stable` or `unstable`.
    pub regime: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    /// Post-warmup slots per replication.
    pub slots: Option<u64>,
    pub warmup: Option<u64>,
    pub replications: Option<usize>,
    pub seed: Option<u64>,
    /// `memoryless` or `persistent`.
    pub model: Option<String>,
    pub saturated: Option<bool>,
}

/// Command-line flags shared by every verb.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Scenario file (TOML); the built-in reference scenario when omitted.
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,
    /// Output path.
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
    /// Master seed of the simulator.
    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long, help_heading = "Scenario")]
    pub lambda: Option<f64>,
    #[arg(long, help_heading = "Scenario")]
    pub q_s: Option<f64>,
    #[arg(long, help_heading = "Scenario")]
    pub q_c: Option<f64>,
    #[arg(long, help_heading = "Scenario")]
    pub q_u: Option<f64>,
    #[arg(long, help_heading = "Scenario")]
    pub p_h: Option<f64>,
    #[arg(long, help_heading = "Scenario")]
    pub alpha: Option<f64>,
    #[arg(long, help_heading = "Scenario")]
    pub weight: Option<f64>,
    #[arg(long, help_heading = "Scenario")]
    pub helper_retry_uses_su_link: Option<bool>,

    #[arg(long, help_heading = "Catalog")]
    pub library_size: Option<u64>,
    #[arg(long, help_heading = "Catalog")]
    pub zipf_shape: Option<f64>,
    #[arg(long, help_heading = "Catalog")]
    pub user_capacity: Option<u64>,
    #[arg(long, help_heading = "Catalog")]
    pub helper_capacity: Option<u64>,
    #[arg(long, help_heading = "Catalog")]
    pub policy: Option<String>,

    #[arg(long, help_heading = "Geometry")]
    pub helper_power_mw: Option<f64>,
    #[arg(long, help_heading = "Geometry")]
    pub dc_power_mw: Option<f64>,
    #[arg(long, help_heading = "Geometry")]
    pub r_sd: Option<f64>,
    #[arg(long, help_heading = "Geometry")]
    pub r_su: Option<f64>,
    #[arg(long, help_heading = "Geometry")]
    pub r_dc_d: Option<f64>,
    #[arg(long, help_heading = "Geometry")]
    pub r_dc_u: Option<f64>,
    #[arg(long, help_heading = "Geometry")]
    pub pathloss_exponent: Option<f64>,
    #[arg(long, help_heading = "Geometry")]
    pub noise_d_mw: Option<f64>,
    #[arg(long, help_heading = "Geometry")]
    pub noise_u_mw: Option<f64>,
    #[arg(long, help_heading = "Geometry")]
    pub threshold_d_db: Option<f64>,
    #[arg(long, help_heading = "Geometry")]
    pub threshold_u_db: Option<f64>,

    #[arg(long, help_heading = "Links")]
    pub p_sd_s: Option<f64>,
    #[arg(long, help_heading = "Links")]
    pub p_sd_s_dc: Option<f64>,
    #[arg(long, help_heading = "Links")]
    pub p_su_s: Option<f64>,
    #[arg(long, help_heading = "Links")]
    pub p_dc_dc: Option<f64>,
    #[arg(long, help_heading = "Links")]
    pub p_dc_s_dc: Option<f64>,

    /// One of lambda, alpha, q_s, user_capacity, weight.
    #[arg(long, help_heading = "Sweep")]
    pub axis: Option<String>,
    #[arg(long, help_heading = "Sweep")]
    pub from: Option<f64>,
    #[arg(long, help_heading = "Sweep")]
    pub to: Option<f64>,
    #[arg(long, help_heading = "Sweep")]
    pub step: Option<f64>,
    #[arg(long, value_delimiter = ',', help_heading = "Sweep")]
    pub values: Option<Vec<f64>>,

    #[arg(long, help_heading = "Optimize")]
    pub grid_step: Option<f64>,
    #[arg(long, help_heading = "Optimize")]
    pub regime: Option<String>,

    #[arg(long, help_heading = "Simulate")]
    pub slots: Option<u64>,
    #[arg(long, help_heading = "Simulate")]
    pub warmup: Option<u64>,
    #[arg(long, help_heading = "Simulate")]
    pub replications: Option<usize>,
    #[arg(long, help_heading = "Simulate")]
    pub model: Option<String>,
    #[arg(long, help_heading = "Simulate")]
    pub saturated: Option<bool>,
}

fn set<T>(slot: &mut Option<T>, value: &Option<T>)
where
    T: Clone,
{
    if let Some(v) = value {
        *slot = Some(v.clone());
    }
}

fn set_field<T: Clone>(slot: &mut T, value: &Option<T>) {
    if let Some(v) = value {
        *slot = v.clone();
    }
}

impl Overrides {
    fn touches_catalog(&self) -> bool {
        self.library_size.is_some()
            || self.zipf_shape.is_some()
            || self.user_capacity.is_some()
            || self.helper_capacity.is_some()
            || self.policy.is_some()
    }

    fn touches_geometry(&self) -> bool {
        [
            self.helper_power_mw,
            self.dc_power_mw,
            self.r_sd,
            self.r_su,
            self.r_dc_d,
            self.r_dc_u,
            self.pathloss_exponent,
            self.noise_d_mw,
            self.noise_u_mw,
            self.threshold_d_db,
            self.threshold_u_db,
        ]
        .iter()
        .any(Option::is_some)
    }

    fn touches_links(&self) -> bool {
        [self.p_sd_s, self.p_sd_s_dc, self.p_su_s, self.p_dc_dc, self.p_dc_s_dc]
            .iter()
            .any(Option::is_some)
    }

    /// Applies the flags on top of `file`.
    ///
    /// With the built-in scenario, explicit `q_u`/`p_h` or link flags replace
    /// the built-in catalog or geometry instead of conflicting with it.
    pub fn apply(&self, mut file: ConfigFile, built_in: bool) -> Result<ConfigFile, CliError> {
        let s = &mut file.scenario;
        set(&mut s.lambda, &self.lambda);
        set(&mut s.q_s, &self.q_s);
        set(&mut s.q_c, &self.q_c);
        set(&mut s.q_u, &self.q_u);
        set(&mut s.p_h, &self.p_h);
        set(&mut s.alpha, &self.alpha);
        set(&mut s.weight, &self.weight);
        set(&mut s.helper_retry_uses_su_link, &self.helper_retry_uses_su_link);

        if built_in && (self.q_u.is_some() || self.p_h.is_some()) && !self.touches_catalog() {
            file.catalog = None;
        }
        if built_in && self.touches_links() && !self.touches_geometry() {
            file.geometry = None;
        }

        if self.touches_catalog() {
            let c = file.catalog.get_or_insert_with(|| CatalogSection {
                library_size: edgecache::presets::LIBRARY_SIZE,
                zipf_shape: edgecache::presets::ZIPF_SHAPE,
                user_capacity: edgecache::presets::USER_CAPACITY,
                helper_capacity: edgecache::presets::HELPER_CAPACITY,
                policy: default_policy(),
            });
            set_field(&mut c.library_size, &self.library_size);
            set_field(&mut c.zipf_shape, &self.zipf_shape);
            set_field(&mut c.user_capacity, &self.user_capacity);
            set_field(&mut c.helper_capacity, &self.helper_capacity);
            set_field(&mut c.policy, &self.policy);
        }

        if self.touches_geometry() {
            let g = file.geometry.get_or_insert_with(reference_geometry_section);
            set_field(&mut g.helper_power_mw, &self.helper_power_mw);
            set_field(&mut g.dc_power_mw, &self.dc_power_mw);
            set_field(&mut g.r_sd, &self.r_sd);
            set_field(&mut g.r_su, &self.r_su);
            set_field(&mut g.r_dc_d, &self.r_dc_d);
            set_field(&mut g.r_dc_u, &self.r_dc_u);
            set_field(&mut g.pathloss_exponent, &self.pathloss_exponent);
            set_field(&mut g.noise_d_mw, &self.noise_d_mw);
            set_field(&mut g.noise_u_mw, &self.noise_u_mw);
            set_field(&mut g.threshold_d_db, &self.threshold_d_db);
            set_field(&mut g.threshold_u_db, &self.threshold_u_db);
        }

        if self.touches_links() {
            let l = file.links.get_or_insert_with(LinksSection::default);
            set(&mut l.p_sd_s, &self.p_sd_s);
            set(&mut l.p_sd_s_dc, &self.p_sd_s_dc);
            set(&mut l.p_su_s, &self.p_su_s);
            set(&mut l.p_dc_dc, &self.p_dc_dc);
            set(&mut l.p_dc_s_dc, &self.p_dc_s_dc);
        }

        if self.axis.is_some()
            || self.from.is_some()
            || self.to.is_some()
            || self.step.is_some()
            || self.values.is_some()
        {
            let sw = file.sweep.get_or_insert_with(SweepSection::default);
            set(&mut sw.axis, &self.axis);
            set(&mut sw.from, &self.from);
            set(&mut sw.to, &self.to);
            set(&mut sw.step, &self.step);
            set(&mut sw.values, &self.values);
        }

        set(&mut file.optimize.grid_step, &self.grid_step);
        set(&mut file.optimize.regime, &self.regime);

        let sim = &mut file.simulate;
        set(&mut sim.slots, &self.slots);
        set(&mut sim.warmup, &self.warmup);
        set(&mut sim.replications, &self.replications);
        set(&mut sim.seed, &self.seed);
        set(&mut sim.model, &self.model);
        set(&mut sim.saturated, &self.saturated);
        Ok(file)
    }

    /// Reads the scenario file (or the built-in one), applies the flags and resolves it.
    pub fn load(&self) -> Result<Experiment, CliError> {
        let (file, built_in) = match &self.config {
            Some(path) => (read_config(path)?, false),
            None => (parse_config(DEFAULT_SCENARIO, "built-in scenario")?, true),
        };
        Experiment::resolve(&self.apply(file, built_in)?)
    }
}

fn reference_geometry_section() -> GeometrySection {
    GeometrySection {
        helper_power_mw: 1.0,
        dc_power_mw: 10.0,
        r_sd: 50.0,
        r_su: 40.0,
        r_dc_d: 100.0,
        r_dc_u: 80.0,
        pathloss_exponent: 4.0,
        noise_d_mw: 1e-8,
        noise_u_mw: 1e-8,
        threshold_d_db: 0.0,
        threshold_u_db: 0.0,
    }
}

pub fn read_config(path: &Path) -> Result<ConfigFile, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text, &path.display().to_string())
}

/// Parses TOML; errors carry the line and column of the offending key.
pub fn parse_config(text: &str, origin: &str) -> Result<ConfigFile, CliError> {
    toml::from_str(text).map_err(|e| CliError::Config(format!("{origin}: {e}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Lambda,
    Alpha,
    TxProb,
    UserCapacity,
    Weight,
}

impl SweepAxis {
    pub fn parse(name: &str) -> Result<Self, CliError> {
        Ok(match name {
            "lambda" => SweepAxis::Lambda,
            "alpha" => SweepAxis::Alpha,
            "q_s" => SweepAxis::TxProb,
            "user_capacity" => SweepAxis::UserCapacity,
            "weight" => SweepAxis::Weight,
            other => {
                return Err(CliError::Config(format!(
                    "unknown sweep axis '{other}' (expected lambda, alpha, q_s, user_capacity or weight)"
                )))
            }
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Lambda => "lambda",
            SweepAxis::Alpha => "alpha",
            SweepAxis::TxProb => "q_s",
            SweepAxis::UserCapacity => "user_capacity",
            SweepAxis::Weight => "weight",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeChoice {
    Auto,
    Stable,
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatalogModel {
    pub catalog_size: u64,
    pub shape: f64,
    pub cache: CacheConfig,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationSettings {
    pub measured_slots: u64,
    pub warmup_slots: Option<u64>,
    pub replications: usize,
    pub seed: u64,
    pub model: RequestModel,
    pub saturated: bool,
}

impl SimulationSettings {
    pub fn config(&self, params: ScenarioParams) -> SimConfig {
        let mut c =
            SimConfig::with_measured_slots(params, self.measured_slots, self.replications, self.seed, self.model);
        if let Some(w) = self.warmup_slots {
            c.warmup_slots = w;
            c.num_slots = self.measured_slots + w;
        }
        c
    }
}

/// A fully resolved run: base operating point plus what to vary and how.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub params: ScenarioParams,
    pub weight: f64,
    pub catalog: Option<CatalogModel>,
    pub sweep: Option<Sweep>,
    pub grid_step: f64,
    pub regime: RegimeChoice,
    pub simulation: SimulationSettings,
}

fn required(value: Option<f64>, key: &str) -> Result<f64, CliError> {
    value.ok_or_else(|| CliError::Config(format!("missing [scenario] key '{key}'")))
}

fn probability(value: f64, key: &str) -> Result<f64, CliError> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(CliError::Config(format!("'{key}' = {value} is not a probability")))
    }
}

impl Experiment {
    pub fn resolve(file: &ConfigFile) -> Result<Self, CliError> {
        let s = &file.scenario;
        let catalog = match &file.catalog {
            Some(c) => {
                if s.q_u.is_some() || s.p_h.is_some() {
                    return Err(CliError::Config(
                        "q_u/p_h given explicitly and also derived from [catalog]; keep one".into(),
                    ));
                }
                let policy = match c.policy.as_str() {
                    "mpc" => CachePolicy::Mpc,
                    "cmpc" => CachePolicy::Cmpc,
                    other => {
                        return Err(CliError::Config(format!(
                            "unknown cache policy '{other}' (mpc or cmpc)"
                        )))
                    }
                };
                Some(CatalogModel {
                    catalog_size: c.library_size,
                    shape: c.zipf_shape,
                    cache: CacheConfig::new(c.user_capacity, c.helper_capacity, policy),
                })
            }
            None => None,
        };
        let (q_u, p_h) = match (&catalog, s.q_u, s.p_h) {
            (Some(m), _, _) => cache_probabilities(m, m.cache.user_capacity)?,
            (None, Some(q_u), Some(p_h)) => (probability(q_u, "q_u")?, probability(p_h, "p_h")?),
            _ => {
                return Err(CliError::Config(
                    "give both q_u and p_h in [scenario], or a [catalog] section".into(),
                ))
            }
        };

        let links = match (&file.geometry, &file.links) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "link probabilities given in [links] and also derived from [geometry]; keep one".into(),
                ))
            }
            (Some(g), None) => geometry(g)
                .link_probabilities()
                .map_err(|e| CliError::Config(e.to_string()))?,
            (None, Some(l)) => {
                let get =
                    |v: Option<f64>, k: &str| v.ok_or_else(|| CliError::Config(format!("missing [links] key '{k}'")));
                let links = LinkProbabilities {
                    p_sd_s: get(l.p_sd_s, "p_sd_s")?,
                    p_sd_s_dc: get(l.p_sd_s_dc, "p_sd_s_dc")?,
                    p_su_s: get(l.p_su_s, "p_su_s")?,
                    p_dc_dc: get(l.p_dc_dc, "p_dc_dc")?,
                    p_dc_s_dc: get(l.p_dc_s_dc, "p_dc_s_dc")?,
                };
                links.validate().map_err(|e| CliError::Config(e.to_string()))?;
                links
            }
            (None, None) => return Err(CliError::Config("need a [geometry] or a [links] section".into())),
        };

        let params = ScenarioParams {
            arrival_rate: probability(required(s.lambda, "lambda")?, "lambda")?,
            tx_prob: probability(required(s.q_s, "q_s")?, "q_s")?,
            external_request_prob: q_u,
            helper_assist_prob: probability(required(s.q_c, "q_c")?, "q_c")?,
            helper_hit_prob: p_h,
            dc_availability: probability(required(s.alpha, "alpha")?, "alpha")?,
            links,
            helper_retry_uses_su_link: s.helper_retry_uses_su_link.unwrap_or(false),
        };
        params.validate().map_err(|e| CliError::Config(e.to_string()))?;

        let sweep = match &file.sweep {
            Some(sw) => Some(resolve_sweep(sw, catalog.is_some())?),
            None => None,
        };

        let grid_step = file
            .optimize
            .grid_step
            .unwrap_or(edgecache::optimizer::DEFAULT_GRID_STEP);
        if grid_step != 0.0 {
            edgecache::optimizer::grid_points(grid_step).map_err(|e| CliError::Config(e.to_string()))?;
        }
        let regime = match file.optimize.regime.as_deref().unwrap_or("auto") {
            "auto" => RegimeChoice::Auto,
            "stable" => RegimeChoice::Stable,
            "unstable" => RegimeChoice::Unstable,
            other => {
                return Err(CliError::Config(format!(
                    "unknown regime '{other}' (auto, stable or unstable)"
                )))
            }
        };

        let sim = &file.simulate;
        let model = match sim.model.as_deref().unwrap_or("memoryless") {
            "memoryless" => RequestModel::Memoryless,
            "persistent" => RequestModel::Persistent,
            other => {
                return Err(CliError::Config(format!(
                    "unknown request model '{other}' (memoryless or persistent)"
                )))
            }
        };
        let simulation = SimulationSettings {
            measured_slots: sim.slots.unwrap_or(100_000),
            warmup_slots: sim.warmup,
            replications: sim.replications.unwrap_or(20),
            seed: sim.seed.unwrap_or(2024),
            model,
            saturated: sim.saturated.unwrap_or(false),
        };
        if simulation.measured_slots == 0 || simulation.replications == 0 {
            return Err(CliError::Config("slots and replications must be positive".into()));
        }

        Ok(Self {
            params,
            weight: probability(s.weight.unwrap_or(0.5), "weight")?,
            catalog,
            sweep,
            grid_step,
            regime,
            simulation,
        })
    }

    /// Operating point and weight at one sweep value.
    pub fn point(&self, axis: SweepAxis, value: f64) -> Result<(ScenarioParams, f64), CliError> {
        let mut p = self.params;
        let mut w = self.weight;
        match axis {
            SweepAxis::Lambda => p.arrival_rate = value,
            SweepAxis::Alpha => p.dc_availability = value,
            SweepAxis::TxProb => p.tx_prob = value,
            SweepAxis::Weight => w = value,
            SweepAxis::UserCapacity => {
                let m = self.catalog.as_ref().expect("checked when resolving the sweep");
                let (q_u, p_h) = cache_probabilities(m, value as u64)?;
                p.external_request_prob = q_u;
                p.helper_hit_prob = p_h;
            }
        }
        p.validate()
            .map_err(|e| CliError::Config(format!("{axis} = {value}: {e}")))?;
        Ok((p, w))
    }

    /// `(axis value, params, weight)` for every point; a single unnamed point without a sweep.
    pub fn points(&self) -> Result<Vec<(Option<f64>, ScenarioParams, f64)>, CliError> {
        match &self.sweep {
            None => Ok(vec![(None, self.params, self.weight)]),
            Some(sw) => sw
                .values
                .iter()
                .map(|&v| self.point(sw.axis, v).map(|(p, w)| (Some(v), p, w)))
                .collect(),
        }
    }
}

fn cache_probabilities(m: &CatalogModel, user_capacity: u64) -> Result<(f64, f64), CliError> {
    let cat = ZipfCatalog::new(m.catalog_size, m.shape).map_err(|e| CliError::Config(e.to_string()))?;
    let cache = CacheConfig {
        user_capacity,
        ..m.cache
    };
    let q_u = catalog::external_request_prob(&cat, &cache).map_err(|e| CliError::Config(e.to_string()))?;
    let p_h = catalog::helper_hit_prob(&cat, &cache).map_err(|e| CliError::Config(e.to_string()))?;
    Ok((q_u, p_h))
}

fn geometry(g: &GeometrySection) -> Geometry {
    Geometry {
        helper_power: mw_to_watts(g.helper_power_mw),
        dc_power: mw_to_watts(g.dc_power_mw),
        r_sd: g.r_sd,
        r_su: g.r_su,
        r_dc_d: g.r_dc_d,
        r_dc_u: g.r_dc_u,
        pathloss_exponent: g.pathloss_exponent,
        noise_d: mw_to_watts(g.noise_d_mw),
        noise_u: mw_to_watts(g.noise_u_mw),
        threshold_d: db_to_linear(g.threshold_d_db),
        threshold_u: db_to_linear(g.threshold_u_db),
    }
}

fn resolve_sweep(sw: &SweepSection, has_catalog: bool) -> Result<Sweep, CliError> {
    let axis = SweepAxis::parse(
        sw.axis
            .as_deref()
            .ok_or_else(|| CliError::Config("[sweep] needs an 'axis'".into()))?,
    )?;
    if axis == SweepAxis::UserCapacity && !has_catalog {
        return Err(CliError::Config(
            "sweeping user_capacity needs a [catalog] section".into(),
        ));
    }
    let values = match (&sw.values, sw.from, sw.to, sw.step) {
        (Some(v), None, None, None) => v.clone(),
        (None, Some(from), Some(to), Some(step)) => range(from, to, step)?,
        _ => {
            return Err(CliError::Config(
                "[sweep] needs either 'values' or all of 'from', 'to', 'step'".into(),
            ))
        }
    };
    if values.is_empty() {
        return Err(CliError::Config("[sweep] has no points".into()));
    }
    if axis == SweepAxis::UserCapacity && values.iter().any(|v| v.fract() != 0.0 || *v < 0.0) {
        return Err(CliError::Config(
            "user_capacity sweep values must be non-negative integers".into(),
        ));
    }
    Ok(Sweep { axis, values })
}

/// `from, from + step, ...` up to `to` inclusive, computed as `from + i step`.
// negated comparisons so that NaN bounds are rejected too
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn range(from: f64, to: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !(step > 0.0) || !(to >= from) {
        return Err(CliError::Config(format!("bad sweep range {from}..{to} step {step}")));
    }
    let n = ((to - from) / step + 1e-9).floor() as usize;
    if n > 1_000_000 {
        return Err(CliError::Config("sweep has more than a million points".into()));
    }
    Ok((0..=n).map(|i| from + i as f64 * step).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn built_in() -> ConfigFile {
        parse_config(DEFAULT_SCENARIO, "built-in").unwrap()
    }

    #[test]
    fn built_in_scenario_resolves_to_reference() {
        let e = Experiment::resolve(&built_in()).unwrap();
        let reference = edgecache::presets::reference_scenario();
        assert_eq!(e.params.links, reference.links);
        assert_eq!(e.params.external_request_prob, reference.external_request_prob);
        assert_eq!(e.params.helper_hit_prob, reference.helper_hit_prob);
        assert!(e.sweep.is_none());
    }

    #[test]
    fn explicit_and_derived_conflict() {
        let mut f = built_in();
        f.scenario.p_h = Some(0.3);
        assert!(matches!(Experiment::resolve(&f), Err(CliError::Config(_))));

        let mut f = built_in();
        f.links = Some(LinksSection {
            p_sd_s: Some(0.9),
            ..LinksSection::default()
        });
        assert!(Experiment::resolve(&f).is_err());
    }

    #[test]
    fn flags_replace_built_in_derivations() {
        let o = Overrides {
            q_u: Some(0.5),
            p_h: Some(0.2),
            ..Overrides::default()
        };
        let e = Experiment::resolve(&o.apply(built_in(), true).unwrap()).unwrap();
        assert_eq!(e.params.external_request_prob, 0.5);
        assert!(e.catalog.is_none());

        // with a user file the same flags conflict with its catalog
        assert!(Experiment::resolve(&o.apply(built_in(), false).unwrap()).is_err());
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let err = parse_config("[scenario]\nlambda = 0.2\nlamda = 0.3\n", "test.toml").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("lamda") && msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn sweep_ranges() {
        let v = range(0.1, 0.4, 0.1).unwrap();
        assert_eq!(v.len(), 4);
        assert!((v[3] - 0.4).abs() < 1e-12);
        assert!(range(0.5, 0.1, 0.1).is_err());
        let sw = SweepSection {
            axis: Some("user_capacity".into()),
            values: Some(vec![100.0, 200.0]),
            ..SweepSection::default()
        };
        assert!(resolve_sweep(&sw, false).is_err());
        assert_eq!(resolve_sweep(&sw, true).unwrap().axis, SweepAxis::UserCapacity);
    }

    #[test]
    fn user_capacity_sweep_rederives_cache_probabilities() {
        let o = Overrides {
            axis: Some("user_capacity".into()),
            values: Some(vec![100.0, 2000.0]),
            ..Overrides::default()
        };
        let e = Experiment::resolve(&o.apply(built_in(), true).unwrap()).unwrap();
        let pts = e.points().unwrap();
        let (q_u, p_h) = edgecache::presets::cache_probabilities(100);
        assert_eq!(pts[0].1.external_request_prob, q_u);
        assert_eq!(pts[0].1.helper_hit_prob, p_h);
        assert_eq!(pts[1].1.helper_hit_prob, 0.0);
    }
}
