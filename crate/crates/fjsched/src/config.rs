//! Key-value configuration files and flag overrides.
//!
//! A config file is TOML with the same keys as the command-line flags
//! (dashes or underscores), e.g.
//!
//! ```toml
//! seed = 7
//! episodes = 20000
//! epsilon-decay = 0.9995
//! divide-strategy = "duration"
//! ```

use fjsched_core::division::SplitStrategy;
use fjsched_core::instance::DurationEstimate;
use serde::Deserialize;
use thiserror::Error;

use crate::bench::Settings;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config file: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("unknown {what} `{value}`")]
    Unknown { what: &'static str, value: String },
    #[error(transparent)]
    Learner(#[from] fjsched_core::qlearning::LearnError),
    #[error(transparent)]
    Baseline(#[from] fjsched_core::baselines::BaselineError),
    #[error("budget-seconds must be positive")]
    Budget,
}

/// Optional settings; unset keys keep their defaults.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Overrides {
    pub seed: Option<u64>,
    pub episodes: Option<usize>,
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub epsilon_start: Option<f64>,
    pub epsilon_min: Option<f64>,
    pub epsilon_decay: Option<f64>,
    pub test_interval: Option<usize>,
    pub prepopulate: Option<bool>,
    pub include_immediate_reward: Option<bool>,
    pub divide: Option<usize>,
    /// `ops` or `duration`.
    pub divide_strategy: Option<String>,
    /// `mean`, `min` or `max`; used by duration splits and MWKR.
    pub duration_estimate: Option<String>,
    pub budget_seconds: Option<f64>,
    pub population: Option<usize>,
    pub generations: Option<usize>,
    pub crossover_rate: Option<f64>,
    pub mutation_rate: Option<f64>,
    pub node_budget: Option<u64>,
    pub jobs: Option<usize>,
}

impl Overrides {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        // accept snake_case keys as well
        let table: toml::Table = toml::from_str(text)?;
        let table: toml::Table = table
            .into_iter()
            .map(|(k, v)| (k.replace('_', "-"), v))
            .collect();
        Ok(table.try_into()?)
    }

    /// `self` with every key set in `flags` replaced.
    pub fn merged_with(self, flags: Overrides) -> Overrides {
        macro_rules! pick {
            ($($f:ident),*) => { Overrides { $($f: flags.$f.or(self.$f)),* } };
        }
        pick!(
            seed,
            episodes,
            alpha,
            gamma,
            epsilon_start,
            epsilon_min,
            epsilon_decay,
            test_interval,
            prepopulate,
            include_immediate_reward,
            divide,
            divide_strategy,
            duration_estimate,
            budget_seconds,
            population,
            generations,
            crossover_rate,
            mutation_rate,
            node_budget,
            jobs
        )
    }

    /// Applies the overrides to the defaults and validates the result.
    pub fn settings(&self) -> Result<Settings, ConfigError> {
        let mut s = Settings::default();
        let estimate = match self.duration_estimate.as_deref() {
            None | Some("mean") => DurationEstimate::Mean,
            Some("min") => DurationEstimate::Min,
            Some("max") => DurationEstimate::Max,
            Some(v) => {
                return Err(ConfigError::Unknown {
                    what: "duration estimate",
                    value: v.into(),
                })
            }
        };
        s.divide_strategy = match self.divide_strategy.as_deref() {
            None | Some("ops") => SplitStrategy::ByOpCount,
            Some("duration") => SplitStrategy::ByDuration(estimate),
            Some(v) => {
                return Err(ConfigError::Unknown {
                    what: "divide strategy",
                    value: v.into(),
                })
            }
        };
        s.baseline.remaining_work = estimate;
        if let Some(parts) = self.divide {
            s.divide_parts = parts;
        }

        let l = &mut s.learner;
        macro_rules! set {
            ($dst:expr, $src:expr) => {
                if let Some(v) = $src {
                    $dst = v;
                }
            };
        }
        set!(l.seed, self.seed);
        set!(l.episodes, self.episodes);
        set!(l.alpha, self.alpha);
        set!(l.gamma, self.gamma);
        set!(l.epsilon_start, self.epsilon_start);
        set!(l.epsilon_min, self.epsilon_min);
        set!(l.epsilon_decay, self.epsilon_decay);
        set!(l.test_interval, self.test_interval);
        set!(l.prepopulate, self.prepopulate);
        set!(l.include_immediate_reward, self.include_immediate_reward);
        if let Some(b) = self.budget_seconds {
            if b.is_nan() || b <= 0.0 {
                return Err(ConfigError::Budget);
            }
            l.time_limit = Some(b);
        }
        l.validate()?;

        let b = &mut s.baseline;
        set!(b.seed, self.seed);
        set!(b.episodes, self.episodes);
        set!(b.population, self.population);
        set!(b.generations, self.generations);
        set!(b.crossover_rate, self.crossover_rate);
        set!(b.mutation_rate, self.mutation_rate);
        set!(b.node_budget, self.node_budget);
        b.validate()?;
        Ok(s)
    }
}
