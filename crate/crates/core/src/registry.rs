//! Named coin-field models, selected by `model = "..."` in a run config.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::Deserialize;

use crate::coin::CoinMatrix;
use crate::error::{CoinError, ConfigError};
use crate::field::{CoinField, Decay};

/// The `[coins]` table of a config, minus the `model` key.
#[derive(Debug, Clone, Copy)]
pub struct ModelParams<'a> {
    table: &'a toml::Table,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ReflectionSpec {
    a: f64,
    b: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EntriesSpec {
    entries: [[[f64; 2]; 2]; 2],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RotationSpec {
    theta: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SiteCoinSpec {
    x: i64,
    coin: toml::Value,
}

pub fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        line: None,
        message: message.into(),
    }
}

fn coin_error(key: &str, e: CoinError) -> ConfigError {
    invalid(key, e.to_string())
}

/// Parses a coin value: `"identity"`, `"hadamard"`, `"pauli_x"`,
/// `{ a, b }` (reflection form), `{ theta }` (rotation) or
/// `{ entries = [[[re, im], [re, im]], [[re, im], [re, im]]] }`.
pub fn parse_coin(key: &str, value: &toml::Value) -> Result<CoinMatrix, ConfigError> {
    if let Some(name) = value.as_str() {
        return match name {
            "identity" => Ok(CoinMatrix::identity()),
            "hadamard" => CoinMatrix::reflection(FRAC_1_SQRT_2, FRAC_1_SQRT_2).map_err(|e| coin_error(key, e)),
            "pauli_x" => Ok(CoinMatrix::pauli_x()),
            other => Err(invalid(key, format!("unknown named coin `{other}` (identity, hadamard, pauli_x)"))),
        };
    }
    let table = value
        .as_table()
        .ok_or_else(|| invalid(key, "expected a coin name or table"))?;
    let coin = if table.contains_key("entries") {
        let spec: EntriesSpec = value.clone().try_into().map_err(|e: toml::de::Error| invalid(key, e.message()))?;
        let c = |z: [f64; 2]| Complex64::new(z[0], z[1]);
        let [r0, r1] = spec.entries;
        CoinMatrix::new([[c(r0[0]), c(r0[1])], [c(r1[0]), c(r1[1])]])
    } else if table.contains_key("theta") {
        let spec: RotationSpec = value.clone().try_into().map_err(|e: toml::de::Error| invalid(key, e.message()))?;
        CoinMatrix::rotation(spec.theta)
    } else {
        let spec: ReflectionSpec = value.clone().try_into().map_err(|e: toml::de::Error| invalid(key, e.message()))?;
        return CoinMatrix::reflection(spec.a, spec.b).map_err(|e| coin_error(key, e));
    };
    coin.ensure_unitary().map_err(|e| coin_error(key, e))
}

impl<'a> ModelParams<'a> {
    pub fn new(table: &'a toml::Table) -> Self {
        Self { table }
    }

    fn key(name: &str) -> String {
        format!("coins.{name}")
    }

    pub fn contains(&self, name: &str) -> bool {
        self.table.contains_key(name)
    }

    /// Rejects keys the model does not use.
    pub fn check_known(&self, known: &[&str]) -> Result<(), ConfigError> {
        for k in self.table.keys() {
            if k != "model" && !known.contains(&k.as_str()) {
                return Err(invalid(&Self::key(k), format!("not a parameter of this model (expected one of: {})", known.join(", "))));
            }
        }
        Ok(())
    }

    pub fn coin(&self, name: &str) -> Result<CoinMatrix, ConfigError> {
        let v = self
            .table
            .get(name)
            .ok_or_else(|| invalid(&Self::key(name), "missing coin"))?;
        parse_coin(&Self::key(name), v)
    }

    pub fn coin_or(&self, name: &str, default: CoinMatrix) -> Result<CoinMatrix, ConfigError> {
        if self.contains(name) {
            self.coin(name)
        } else {
            Ok(default)
        }
    }

    pub fn f64(&self, name: &str) -> Result<f64, ConfigError> {
        match self.table.get(name) {
            Some(toml::Value::Float(x)) => Ok(*x),
            Some(toml::Value::Integer(i)) => Ok(*i as f64),
            Some(_) => Err(invalid(&Self::key(name), "expected a number")),
            None => Err(invalid(&Self::key(name), "missing number")),
        }
    }

    pub fn f64_or(&self, name: &str, default: f64) -> Result<f64, ConfigError> {
        if self.contains(name) {
            self.f64(name)
        } else {
            Ok(default)
        }
    }

    fn decay(&self) -> Result<Decay, ConfigError> {
        let kappa = self.f64_or("kappa", 1.0)?;
        let epsilon = self.f64_or("epsilon", 1.0)?;
        Decay::new(kappa, epsilon).map_err(|e| coin_error(&Self::key("kappa"), e))
    }

    fn site_overrides(&self) -> Result<BTreeMap<i64, CoinMatrix>, ConfigError> {
        let mut out = BTreeMap::new();
        let Some(v) = self.table.get("sites") else {
            return Ok(out);
        };
        let key = Self::key("sites");
        let arr = v.as_array().ok_or_else(|| invalid(&key, "expected an array of { x, coin }"))?;
        for item in arr {
            let spec: SiteCoinSpec = item.clone().try_into().map_err(|e: toml::de::Error| invalid(&key, e.message()))?;
            let coin = parse_coin(&format!("{key}[x = {}]", spec.x), &spec.coin)?;
            if out.insert(spec.x, coin).is_some() {
                return Err(invalid(&key, format!("site {} listed twice", spec.x)));
            }
        }
        Ok(out)
    }
}

/// A named family of coin fields.
pub trait CoinModelBuilder: Send + Sync {
    fn name(&self) -> &'static str;
    /// Parameter keys accepted in `[coins]`.
    fn parameters(&self) -> &'static [&'static str];
    fn build(&self, params: &ModelParams) -> Result<CoinField, ConfigError>;
}

struct Homogeneous;
struct OneDefect;
struct TwoPhase;
struct ShortRange;
struct Anisotropic;
struct Custom;

impl CoinModelBuilder for Homogeneous {
    fn name(&self) -> &'static str {
        "homogeneous"
    }
    fn parameters(&self) -> &'static [&'static str] {
        &["coin"]
    }
    fn build(&self, p: &ModelParams) -> Result<CoinField, ConfigError> {
        CoinField::homogeneous(p.coin("coin")?).map_err(|e| coin_error("coins.coin", e))
    }
}

impl CoinModelBuilder for OneDefect {
    fn name(&self) -> &'static str {
        "one_defect"
    }
    fn parameters(&self) -> &'static [&'static str] {
        &["bulk", "origin"]
    }
    fn build(&self, p: &ModelParams) -> Result<CoinField, ConfigError> {
        CoinField::one_defect(p.coin("bulk")?, p.coin("origin")?).map_err(|e| coin_error("coins", e))
    }
}

impl CoinModelBuilder for TwoPhase {
    fn name(&self) -> &'static str {
        "two_phase"
    }
    fn parameters(&self) -> &'static [&'static str] {
        &["left", "right", "origin"]
    }
    /// `origin` defaults to the right coin, so `C(x) = C₊` for all `x ≥ 0`.
    fn build(&self, p: &ModelParams) -> Result<CoinField, ConfigError> {
        let right = p.coin("right")?;
        CoinField::two_phase(p.coin("left")?, right, p.coin_or("origin", right)?).map_err(|e| coin_error("coins", e))
    }
}

impl CoinModelBuilder for ShortRange {
    fn name(&self) -> &'static str {
        "short_range"
    }
    fn parameters(&self) -> &'static [&'static str] {
        &["coin", "theta0", "epsilon"]
    }
    fn build(&self, p: &ModelParams) -> Result<CoinField, ConfigError> {
        let eps = p.f64_or("epsilon", 1.0)?;
        CoinField::short_range_rotation(p.coin("coin")?, p.f64("theta0")?, eps).map_err(|e| coin_error("coins", e))
    }
}

impl CoinModelBuilder for Anisotropic {
    fn name(&self) -> &'static str {
        "anisotropic"
    }
    fn parameters(&self) -> &'static [&'static str] {
        &["left", "right", "theta0", "epsilon"]
    }
    fn build(&self, p: &ModelParams) -> Result<CoinField, ConfigError> {
        let eps = p.f64_or("epsilon", 1.0)?;
        CoinField::anisotropic(p.coin("left")?, p.coin("right")?, p.f64_or("theta0", 0.0)?, eps)
            .map_err(|e| coin_error("coins", e))
    }
}

impl CoinModelBuilder for Custom {
    fn name(&self) -> &'static str {
        "custom"
    }
    fn parameters(&self) -> &'static [&'static str] {
        &["limit", "sites", "kappa", "epsilon"]
    }
    /// Finitely many site overrides on top of a homogeneous limit.
    fn build(&self, p: &ModelParams) -> Result<CoinField, ConfigError> {
        CoinField::custom(p.coin("limit")?, p.site_overrides()?, p.decay()?).map_err(|e| coin_error("coins.sites", e))
    }
}

/// Model builders keyed by name.
pub struct CoinModelRegistry {
    builders: BTreeMap<&'static str, Box<dyn CoinModelBuilder>>,
}

impl Default for CoinModelRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl CoinModelRegistry {
    pub fn empty() -> Self {
        Self {
            builders: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(Homogeneous));
        r.register(Box::new(OneDefect));
        r.register(Box::new(TwoPhase));
        r.register(Box::new(ShortRange));
        r.register(Box::new(Anisotropic));
        r.register(Box::new(Custom));
        r
    }

    /// Adds a builder, replacing any previous one with the same name.
    pub fn register(&mut self, builder: Box<dyn CoinModelBuilder>) {
        self.builders.insert(builder.name(), builder);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.builders.keys().copied().collect()
    }

    pub fn get(&self, name: &str) -> Option<&dyn CoinModelBuilder> {
        self.builders.get(name).map(|b| b.as_ref())
    }

    pub fn build(&self, name: &str, params: &toml::Table) -> Result<CoinField, ConfigError> {
        let builder = self
            .get(name)
            .ok_or_else(|| ConfigError::UnknownModel(name.to_string()))?;
        let params = ModelParams::new(params);
        params.check_known(builder.parameters())?;
        builder.build(&params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ModelTag;

    fn table(src: &str) -> toml::Table {
        src.parse().unwrap()
    }

    #[test]
    fn builds_every_builtin() {
        let r = CoinModelRegistry::with_builtins();
        assert_eq!(r.names(), vec!["anisotropic", "custom", "homogeneous", "one_defect", "short_range", "two_phase"]);
        let cases = [
            ("homogeneous", "coin = { a = 0.8, b = 0.6 }", ModelTag::Homogeneous),
            ("one_defect", "bulk = \"hadamard\"\norigin = \"identity\"", ModelTag::OneDefect),
            ("two_phase", "left = { a = 0.6, b = 0.8 }\nright = { a = 0.8, b = 0.6 }", ModelTag::TwoPhase),
            ("short_range", "coin = \"hadamard\"\ntheta0 = 0.3\nepsilon = 1.0", ModelTag::ShortRange),
            ("anisotropic", "left = { a = 0.6, b = 0.8 }\nright = { a = 0.8, b = 0.6 }\ntheta0 = 0.2", ModelTag::Anisotropic),
            (
                "custom",
                "limit = \"hadamard\"\nsites = [{ x = 0, coin = \"identity\" }, { x = 2, coin = { theta = 0.4 } }]\nkappa = 10.0",
                ModelTag::Custom,
            ),
        ];
        for (name, src, tag) in cases {
            let f = r.build(name, &table(src)).unwrap();
            assert_eq!(f.tag(), tag, "{name}");
        }
    }

    #[test]
    fn rejects_unknown_models_and_keys() {
        let r = CoinModelRegistry::with_builtins();
        assert!(matches!(r.build("spiral", &table("")), Err(ConfigError::UnknownModel(_))));
        let err = r.build("homogeneous", &table("coin = \"identity\"\nbulk = \"identity\"")).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { ref key, .. } if key == "coins.bulk"));
    }

    #[test]
    fn rejects_bad_coins() {
        let r = CoinModelRegistry::with_builtins();
        let err = r.build("homogeneous", &table("coin = { a = 0.5, b = 0.5 }")).unwrap_err();
        assert!(err.to_string().contains("coins.coin"));
        let err = r
            .build("homogeneous", &table("coin = { entries = [[[1.0, 0.0], [1.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]] }"))
            .unwrap_err();
        assert!(err.to_string().contains("not unitary"));
        // a constant offset at every site violates the decay bound
        let err = r
            .build("custom", &table("limit = \"hadamard\"\nkappa = 0.01\nsites = [{ x = 50, coin = \"identity\" }]"))
            .unwrap_err();
        assert!(err.to_string().contains("short-range"), "{err}");
    }

    #[test]
    fn complex_entries_parse() {
        let v: toml::Value = toml::Value::Table(table("entries = [[[0.0, 0.0], [0.0, 1.0]], [[0.0, 1.0], [0.0, 0.0]]]"));
        let c = parse_coin("coins.coin", &v).unwrap();
        assert_eq!(c.entry(0, 1), Complex64::new(0.0, 1.0));
    }
}
