//! Flat `key = value` run configuration.
//!
//! One file describes a whole run: the impact model, the trading strategy,
//! noise level, simulation grid, and output destination. Lines starting with
//! `#` and blank lines are skipped. Keys are checked against a whitelist so
//! typos fail loudly instead of silently using defaults, and relative file
//! paths are resolved against the config file's directory so a config stays
//! self-contained wherever it is invoked from.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use tradetherm::impact::{ImpactModel, PermanentImpact, TemporaryImpact};
use tradetherm::strategy::Strategy;
use tradetherm::thermo::Volatility;
use tradetherm::{SimConfig, SquareMatrix};

use crate::error::CliError;

const ALLOWED_KEYS: &[&str] = &[
    "assets",
    "calibrate.works",
    "ensemble.beta",
    "ensemble.beta_grid",
    "ensemble.works",
    "format",
    "out",
    "perm.lambda",
    "perm.matrix",
    "pipeline.bins",
    "pipeline.dt",
    "pipeline.n_tapes",
    "pipeline.seed",
    "sigma",
    "sim.antithetic",
    "sim.dt",
    "sim.dump_paths",
    "sim.n_paths",
    "sim.seed",
    "strategy.builder",
    "strategy.csv",
    "strategy.cycles",
    "strategy.horizon",
    "strategy.n_segments",
    "strategy.peak_rate",
    "strategy.rate_bound",
    "strategy.seed",
    "sweep.grid",
    "sweep.parameter",
    "temp.eta",
    "temp.gamma",
    "temp.kind",
];

#[derive(Debug, Clone)]
pub struct Config {
    entries: BTreeMap<String, String>,
    dir: PathBuf,
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        let dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Self::parse(&text, dir)
    }

    fn parse(text: &str, dir: PathBuf) -> Result<Config, CliError> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::config(format!("line {}: expected `key = value`, got `{line}`", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            if !ALLOWED_KEYS.contains(&key) {
                return Err(CliError::config(format!("line {}: unknown key `{key}`", lineno + 1)));
            }
            if entries.insert(key.to_string(), value.to_string()).is_some() {
                return Err(CliError::config(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
        }
        Ok(Config { entries, dir })
    }

    /// Flag overrides land in the map itself so the echoed config always
    /// shows the values the run actually used.
    pub fn override_entry(&mut self, key: &str, value: String) {
        debug_assert!(ALLOWED_KEYS.contains(&key));
        self.entries.insert(key.to_string(), value);
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    fn require(&self, key: &str) -> Result<&str, CliError> {
        self.get(key).ok_or_else(|| CliError::config(format!("missing required key `{key}`")))
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(s) => s
                .parse::<f64>()
                .map(Some)
                .map_err(|_| CliError::config(format!("`{key}` must be a number, got `{s}`"))),
        }
    }

    pub fn require_f64(&self, key: &str) -> Result<f64, CliError> {
        self.get_f64(key)?.ok_or_else(|| CliError::config(format!("missing required key `{key}`")))
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(s) => s
                .parse::<u64>()
                .map(Some)
                .map_err(|_| CliError::config(format!("`{key}` must be a nonnegative integer, got `{s}`"))),
        }
    }

    pub fn require_u64(&self, key: &str) -> Result<u64, CliError> {
        self.get_u64(key)?.ok_or_else(|| CliError::config(format!("missing required key `{key}`")))
    }

    pub fn get_bool(&self, key: &str) -> Result<bool, CliError> {
        match self.get(key) {
            None => Ok(false),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(s) => Err(CliError::config(format!("`{key}` must be true or false, got `{s}`"))),
        }
    }

    /// Paths in the config are taken relative to the config file itself.
    pub fn resolve_path(&self, value: &str) -> PathBuf {
        let p = Path::new(value);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.dir.join(p)
        }
    }

    pub fn model(&self) -> Result<ImpactModel, CliError> {
        let assets = self.get_u64("assets")?.unwrap_or(1) as usize;
        let eta = self.require_f64("temp.eta")?;
        let temporary = match self.require("temp.kind")? {
            "linear" => {
                if self.get("temp.gamma").is_some() {
                    return Err(CliError::config(
                        "`temp.gamma` only applies to temp.kind = power_law".into(),
                    ));
                }
                TemporaryImpact::linear(eta)?
            }
            "power_law" => TemporaryImpact::power_law(eta, self.require_f64("temp.gamma")?)?,
            other => {
                return Err(CliError::config(format!(
                    "`temp.kind` must be linear or power_law, got `{other}`"
                )))
            }
        };
        let permanent = match (self.get("perm.lambda"), self.get("perm.matrix")) {
            (Some(_), Some(_)) => {
                return Err(CliError::config(
                    "give `perm.lambda` or `perm.matrix`, not both".into(),
                ))
            }
            (None, None) => PermanentImpact::linear(0.0)?,
            (Some(_), None) => PermanentImpact::linear(self.require_f64("perm.lambda")?)?,
            (None, Some(list)) => {
                let data = parse_f64_list("perm.matrix", list)?;
                if data.len() != assets * assets {
                    return Err(CliError::config(format!(
                        "`perm.matrix` needs {} entries for {assets} assets, got {}",
                        assets * assets,
                        data.len()
                    )));
                }
                PermanentImpact::Matrix(SquareMatrix::from_row_major(assets, data)?)
            }
        };
        Ok(ImpactModel::new(temporary, permanent, assets)?)
    }

    pub fn strategy(&self) -> Result<Strategy, CliError> {
        match (self.get("strategy.csv"), self.get("strategy.builder")) {
            (Some(_), Some(_)) => Err(CliError::config(
                "give `strategy.csv` or `strategy.builder`, not both".into(),
            )),
            (None, None) => Err(CliError::config(
                "missing strategy: set `strategy.builder` or `strategy.csv`".into(),
            )),
            (Some(path), None) => {
                let full = self.resolve_path(path);
                let file = std::fs::File::open(&full).map_err(|e| {
                    CliError::config(format!("cannot open strategy csv {}: {e}", full.display()))
                })?;
                Ok(Strategy::from_csv(file)?)
            }
            (None, Some(builder)) => {
                let horizon = self.require_f64("strategy.horizon")?;
                match builder {
                    "triangular" => {
                        Ok(Strategy::triangular(self.require_f64("strategy.peak_rate")?, horizon)?)
                    }
                    "square_wave" => Ok(Strategy::square_wave(
                        self.require_f64("strategy.peak_rate")?,
                        horizon,
                        self.require_u64("strategy.cycles")? as usize,
                    )?),
                    "ramp" => Ok(Strategy::ramp(self.require_f64("strategy.peak_rate")?, horizon)?),
                    "zero" => Ok(Strategy::zero(horizon)?),
                    "random_round_trip" => Ok(Strategy::random_round_trip(
                        self.require_u64("strategy.seed")?,
                        self.require_u64("strategy.n_segments")? as usize,
                        self.require_f64("strategy.rate_bound")?,
                        horizon,
                    )?),
                    other => Err(CliError::config(format!(
                        "unknown strategy builder `{other}`; expected triangular, square_wave, \
                         ramp, zero, or random_round_trip"
                    ))),
                }
            }
        }
    }

    pub fn sigma(&self) -> Result<f64, CliError> {
        self.require_f64("sigma")
    }

    pub fn sim(&self) -> Result<SimConfig, CliError> {
        Ok(SimConfig {
            sigma: Volatility::scalar(self.sigma()?)?,
            dt: self.require_f64("sim.dt")?,
            n_paths: self.require_u64("sim.n_paths")? as usize,
            seed: self.require_u64("sim.seed")?,
            antithetic: self.get_bool("sim.antithetic")?,
        })
    }

    /// The resolved entries as sorted `(key, value)` pairs for echo blocks.
    pub fn echo_entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn echo_json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for (k, v) in &self.entries {
            map.insert(k.clone(), serde_json::Value::String(v.clone()));
        }
        serde_json::Value::Object(map)
    }

    pub fn echo_comment_block(&self, command: &str) -> String {
        let mut block = String::new();
        let _ = writeln!(block, "# command = {command}");
        for (k, v) in self.echo_entries() {
            let _ = writeln!(block, "# {k} = {v}");
        }
        block
    }
}

pub fn parse_f64_list(key: &str, list: &str) -> Result<Vec<f64>, CliError> {
    list.split(',')
        .map(|tok| {
            let tok = tok.trim();
            tok.parse::<f64>()
                .map_err(|_| CliError::config(format!("`{key}`: `{tok}` is not a number")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> Result<Config, CliError> {
        Config::parse(text, PathBuf::from("."))
    }

    #[test]
    fn parses_model_and_strategy() {
        let c = cfg("temp.kind = linear\ntemp.eta = 0.5\nperm.lambda = 0.1\n\
                     strategy.builder = triangular\nstrategy.peak_rate = 1\nstrategy.horizon = 2\n")
            .unwrap();
        let model = c.model().unwrap();
        assert_eq!(model.assets(), 1);
        let s = c.strategy().unwrap();
        assert_eq!(s.horizon(), 2.0);
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        assert!(cfg("temp.kindd = linear\n").is_err());
        assert!(cfg("sigma = 1\nsigma = 2\n").is_err());
        assert!(cfg("sigma\n").is_err());
    }

    #[test]
    fn comments_and_blanks_are_skipped() {
        let c = cfg("# a comment\n\n  sigma = 0.25  \n").unwrap();
        assert_eq!(c.sigma().unwrap(), 0.25);
    }

    #[test]
    fn model_validation_errors() {
        assert!(cfg("temp.kind = cubic\ntemp.eta = 1\n").unwrap().model().is_err());
        assert!(cfg("temp.kind = linear\ntemp.eta = 1\ntemp.gamma = 2\n")
            .unwrap()
            .model()
            .is_err());
        assert!(cfg("temp.kind = linear\ntemp.eta = 1\nperm.lambda = 1\nperm.matrix = 1\n")
            .unwrap()
            .model()
            .is_err());
        // matrix size must match assets
        assert!(cfg("temp.kind = linear\ntemp.eta = 1\nassets = 2\nperm.matrix = 1,0,0\n")
            .unwrap()
            .model()
            .is_err());
    }

    #[test]
    fn overrides_show_up_in_echo() {
        let mut c = cfg("sigma = 1\nsim.seed = 3\n").unwrap();
        c.override_entry("sim.seed", "9".to_string());
        let echoed: Vec<_> = c.echo_entries().collect();
        assert!(echoed.contains(&("sim.seed", "9")));
    }
}
