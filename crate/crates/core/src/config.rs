//! TOML run configuration.
//!
//! ```toml
//! seed = 7
//!
//! [shift]
//! p = 0.6
//! q = 0.8            # or [re, im]
//!
//! [coins]
//! model = "one_defect"
//! bulk = "hadamard"
//! origin = "identity"
//!
//! [initial]
//! sites = [{ x = 0, up = 0.0, down = 1.0 }]
//! ```
//!
//! Semantic errors carry the line of the offending key when it can be found.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bound_states::BoundStateOptions;
use crate::coin::{ShiftParams, Spinor};
use crate::error::{ConfigError, Error};
use crate::evolution::{WalkerState, Window};
use crate::field::CoinField;
use crate::registry::{invalid, CoinModelRegistry};
use crate::scattering::{ScatteringOptions, DEFAULT_SCHEDULE};

/// Initial amplitudes off by at most this much in squared norm are rescaled.
pub const NORM_TOL: f64 = 1e-6;

#[derive(Deserialize)]
#[serde(untagged)]
enum Amplitude {
    Real(f64),
    Complex([f64; 2]),
}

impl Amplitude {
    fn value(&self) -> Complex64 {
        match *self {
            Amplitude::Real(re) => Complex64::new(re, 0.0),
            Amplitude::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawShift {
    p: f64,
    q: Amplitude,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSite {
    x: i64,
    up: Amplitude,
    down: Amplitude,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    #[serde(default)]
    kind: Option<String>,
    #[serde(default)]
    sites: Vec<RawSite>,
    #[serde(default)]
    normalize: bool,
    #[serde(default)]
    index: Option<usize>,
    #[serde(default)]
    radius: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateOptions {
    pub times: Vec<usize>,
    /// also dump amplitudes at each requested time
    pub trajectory: bool,
}

impl Default for SimulateOptions {
    fn default() -> Self {
        Self {
            times: vec![0],
            trajectory: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumOptions {
    pub k_points: usize,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self { k_points: 4096 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct DensityOptions {
    pub k_points: usize,
    pub v_points: usize,
}

impl Default for DensityOptions {
    fn default() -> Self {
        Self {
            k_points: 4096,
            v_points: 2001,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
struct RawScattering {
    schedule: Vec<usize>,
    tol: f64,
    sites: usize,
    gap_tol: f64,
    localization_tol: f64,
    window_tol: f64,
    band_samples: usize,
    require_convergence: bool,
}

impl Default for RawScattering {
    fn default() -> Self {
        let s = ScatteringOptions::default();
        Self {
            schedule: DEFAULT_SCHEDULE.to_vec(),
            tol: s.tol,
            sites: s.bound.sites,
            gap_tol: s.bound.gap_tol,
            localization_tol: s.bound.localization_tol,
            window_tol: s.bound.window_tol,
            band_samples: s.bound.band_samples,
            require_convergence: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareOptions {
    pub times: Vec<usize>,
    /// uniform evaluation points on [−1, 1]
    pub grid_points: usize,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self {
            times: vec![500, 1000, 2000, 4000],
            grid_points: 2001,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputOptions {
    pub dir: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    seed: u64,
    shift: RawShift,
    coins: toml::Table,
    initial: RawInitial,
    #[serde(default)]
    simulate: SimulateOptions,
    #[serde(default)]
    spectrum: SpectrumOptions,
    #[serde(default)]
    density: DensityOptions,
    #[serde(default)]
    scattering: RawScattering,
    #[serde(default)]
    compare: CompareOptions,
    #[serde(default)]
    output: OutputOptions,
}

#[derive(Debug, Clone)]
pub enum InitialState {
    State(WalkerState),
    /// the `index`-th bound state (by ascending eigenphase), normalized
    BoundState { index: usize },
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub name: Option<String>,
    pub seed: u64,
    pub shift: ShiftParams,
    pub model: String,
    pub field: CoinField,
    pub initial: InitialState,
    pub simulate: SimulateOptions,
    pub spectrum: SpectrumOptions,
    pub density: DensityOptions,
    pub scattering: ScatteringOptions,
    pub require_convergence: bool,
    pub compare: CompareOptions,
    pub output: OutputOptions,
}

fn line_of_offset(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

/// Line of `key` inside `[section]`, or of the section header itself.
fn locate(src: &str, dotted: &str) -> Option<usize> {
    let (section, key) = match dotted.split_once('.') {
        Some((s, k)) => (Some(s), k),
        None => (None, dotted),
    };
    let key = key.split(['[', '.']).next().unwrap_or(key).trim();
    let mut in_section = section.is_none();
    let mut header = None;
    for (i, raw) in src.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            let name = line.trim_matches(|c| c == '[' || c == ']').trim();
            in_section = Some(name) == section;
            if in_section {
                header = Some(i + 1);
            }
            continue;
        }
        if in_section {
            if let Some(rest) = line.strip_prefix(key) {
                if rest.trim_start().starts_with('=') {
                    return Some(i + 1);
                }
            }
        }
    }
    header
}

fn anchor(src: &str, err: ConfigError) -> ConfigError {
    match err {
        ConfigError::Invalid { key, line: None, message } => ConfigError::Invalid {
            line: locate(src, &key),
            key,
            message,
        },
        ConfigError::UnknownModel(name) => ConfigError::Invalid {
            key: "coins.model".into(),
            line: locate(src, "coins.model"),
            message: format!("unknown coin model `{name}`"),
        },
        other => other,
    }
}

fn spinor(site: &RawSite) -> Spinor {
    [site.up.value(), site.down.value()]
}

fn random_state(radius: i64, seed: u64) -> WalkerState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let window = Window::new(-radius, (2 * radius + 1) as usize);
    let sites: Vec<(i64, Spinor)> = window
        .sites()
        .map(|x| {
            let mut c = || Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            (x, [c(), c()])
        })
        .collect();
    let mut state = WalkerState::from_sites(window, &sites);
    state.scale(Complex64::new(1.0 / state.norm(), 0.0));
    state
}

fn build_initial(raw: &RawInitial, seed: u64) -> Result<InitialState, ConfigError> {
    let kind = raw.kind.as_deref().unwrap_or("sites");
    let unused = |key: &str, present: bool| {
        if present {
            Err(invalid(&format!("initial.{key}"), format!("not used by kind = \"{kind}\"")))
        } else {
            Ok(())
        }
    };
    match kind {
        "sites" => {
            unused("index", raw.index.is_some())?;
            unused("radius", raw.radius.is_some())?;
            if raw.sites.is_empty() {
                return Err(invalid("initial.sites", "at least one site is required"));
            }
            let mut xs: Vec<i64> = raw.sites.iter().map(|s| s.x).collect();
            xs.sort_unstable();
            if xs.windows(2).any(|w| w[0] == w[1]) {
                return Err(invalid("initial.sites", "a site is listed twice"));
            }
            let (lo, hi) = (xs[0], xs[xs.len() - 1]);
            let window = Window::new(lo, (hi - lo + 1) as usize);
            let sites: Vec<(i64, Spinor)> = raw.sites.iter().map(|s| (s.x, spinor(s))).collect();
            let mut state = WalkerState::from_sites(window, &sites);
            let n2 = state.norm_sqr();
            if !(n2 > 0.0) || !n2.is_finite() {
                return Err(invalid("initial.sites", "initial state has zero norm"));
            }
            if !raw.normalize && (n2 - 1.0).abs() > NORM_TOL {
                return Err(invalid(
                    "initial.sites",
                    format!("squared norm is {n2}, not 1 (set normalize = true to rescale)"),
                ));
            }
            state.scale(Complex64::new(1.0 / n2.sqrt(), 0.0));
            Ok(InitialState::State(state))
        }
        "bound_state" => {
            unused("sites", !raw.sites.is_empty())?;
            unused("radius", raw.radius.is_some())?;
            Ok(InitialState::BoundState {
                index: raw.index.unwrap_or(0),
            })
        }
        "random" => {
            unused("sites", !raw.sites.is_empty())?;
            unused("index", raw.index.is_some())?;
            let radius = raw.radius.unwrap_or(0);
            if radius < 0 {
                return Err(invalid("initial.radius", "must be non-negative"));
            }
            Ok(InitialState::State(random_state(radius, seed)))
        }
        other => Err(invalid(
            "initial.kind",
            format!("unknown kind `{other}` (sites, bound_state, random)"),
        )),
    }
}

impl RunConfig {
    pub fn from_toml_str(src: &str) -> Result<Self, ConfigError> {
        Self::from_toml_str_with(src, &CoinModelRegistry::with_builtins())
    }

    pub fn from_toml_str_with(src: &str, registry: &CoinModelRegistry) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(src).map_err(|e| ConfigError::Parse {
            line: e.span().map(|s| line_of_offset(src, s.start)),
            message: e.message().to_string(),
        })?;
        Self::validate(raw, registry).map_err(|e| anchor(src, e))
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let src = std::fs::read_to_string(path)?;
        Ok(Self::from_toml_str(&src)?)
    }

    fn validate(raw: RawConfig, registry: &CoinModelRegistry) -> Result<Self, ConfigError> {
        let shift = ShiftParams::new(raw.shift.p, raw.shift.q.value()).map_err(|e| invalid("shift.p", e.to_string()))?;
        let model = match raw.coins.get("model") {
            Some(toml::Value::String(s)) => s.clone(),
            Some(_) => return Err(invalid("coins.model", "expected a string")),
            None => return Err(invalid("coins.model", format!("missing (one of: {})", registry.names().join(", ")))),
        };
        let field = registry.build(&model, &raw.coins)?;
        let initial = build_initial(&raw.initial, raw.seed)?;

        if raw.spectrum.k_points == 0 {
            return Err(invalid("spectrum.k_points", "must be positive"));
        }
        if raw.density.k_points < 2 {
            return Err(invalid("density.k_points", "must be at least 2"));
        }
        if raw.density.v_points == 0 {
            return Err(invalid("density.v_points", "must be positive"));
        }
        if raw.compare.grid_points < 2 {
            return Err(invalid("compare.grid_points", "must be at least 2"));
        }
        let s = &raw.scattering;
        if s.schedule.is_empty() || s.schedule.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("scattering.schedule", "must be a non-empty increasing list"));
        }
        if !(s.tol > 0.0) {
            return Err(invalid("scattering.tol", "must be positive"));
        }
        if s.sites < 8 || !s.sites.is_multiple_of(2) {
            return Err(invalid("scattering.sites", "must be an even number of at least 8"));
        }
        if s.band_samples < 16 {
            return Err(invalid("scattering.band_samples", "must be at least 16"));
        }
        let scattering = ScatteringOptions {
            schedule: s.schedule.clone(),
            tol: s.tol,
            bound: BoundStateOptions {
                sites: s.sites,
                gap_tol: s.gap_tol,
                localization_tol: s.localization_tol,
                cluster_tol: BoundStateOptions::default().cluster_tol,
                window_tol: s.window_tol,
                band_samples: s.band_samples,
            },
        };
        Ok(Self {
            name: raw.name,
            seed: raw.seed,
            shift,
            model,
            field,
            initial,
            simulate: raw.simulate,
            spectrum: raw.spectrum,
            density: raw.density,
            scattering,
            require_convergence: raw.scattering.require_convergence,
            compare: raw.compare,
            output: raw.output,
        })
    }
}
