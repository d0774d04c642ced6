use std::fmt;
use std::path::{Path, PathBuf};

use mirrorlab_core::random::{JumpFamily, JumpLaw};
use mirrorlab_core::{CouplerKind, SubordinatorSpec};
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    CoupleTime,
    TvIdentity,
    Characterization,
    Generator,
    Levy,
    Concavity,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::CoupleTime,
        Experiment::TvIdentity,
        Experiment::Characterization,
        Experiment::Generator,
        Experiment::Levy,
        Experiment::Concavity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::CoupleTime => "couple-time",
            Experiment::TvIdentity => "tv-identity",
            Experiment::Characterization => "characterization",
            Experiment::Generator => "generator",
            Experiment::Levy => "levy",
            Experiment::Concavity => "concavity",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubordinatorKind {
    Drift,
    Stable,
    Gamma,
    CompoundPoisson,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JumpKind {
    Exponential,
    Gamma,
    Fixed,
}

fn one() -> f64 {
    1.0
}

/// `[subordinator]` table. Which optional fields are required depends on `kind`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubordinatorConfig {
    pub kind: SubordinatorKind,
    #[serde(default)]
    pub drift: f64,
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jump: Option<JumpKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jump_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jump_shape: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jump_size: Option<f64>,
}

impl SubordinatorConfig {
    pub fn stable(alpha: f64) -> Self {
        SubordinatorConfig {
            kind: SubordinatorKind::Stable,
            drift: 0.0,
            scale: 1.0,
            alpha: Some(alpha),
            shape: None,
            rate: None,
            jump: None,
            jump_rate: None,
            jump_shape: None,
            jump_size: None,
        }
    }

    /// Driftless compound Poisson with Exp(1) jumps.
    pub fn compound_poisson(rate: f64) -> Self {
        SubordinatorConfig {
            kind: SubordinatorKind::CompoundPoisson,
            alpha: None,
            rate: Some(rate),
            jump: Some(JumpKind::Exponential),
            jump_rate: Some(1.0),
            ..Self::stable(0.5)
        }
    }

    fn family(&self) -> Result<JumpFamily, Vec<String>> {
        let mut missing = Vec::new();
        let mut need = |v: Option<f64>, field: &str| {
            v.unwrap_or_else(|| {
                missing.push(format!("subordinator.{field} is required for this kind"));
                f64::NAN
            })
        };
        let family = match self.kind {
            SubordinatorKind::Drift => JumpFamily::None,
            SubordinatorKind::Stable => JumpFamily::Stable {
                alpha: need(self.alpha, "alpha"),
            },
            SubordinatorKind::Gamma => JumpFamily::Gamma {
                shape: need(self.shape, "shape"),
                rate: need(self.rate, "rate"),
            },
            SubordinatorKind::CompoundPoisson => {
                let rate = need(self.rate, "rate");
                let jump = match self.jump.unwrap_or(JumpKind::Exponential) {
                    JumpKind::Exponential => JumpLaw::Exponential {
                        rate: need(self.jump_rate, "jump_rate"),
                    },
                    JumpKind::Gamma => JumpLaw::Gamma {
                        shape: need(self.jump_shape, "jump_shape"),
                        rate: need(self.jump_rate, "jump_rate"),
                    },
                    JumpKind::Fixed => JumpLaw::Fixed {
                        size: need(self.jump_size, "jump_size"),
                    },
                };
                JumpFamily::CompoundPoisson { rate, jump }
            }
        };
        if missing.is_empty() {
            Ok(family)
        } else {
            Err(missing)
        }
    }

    pub fn diagnostics(&self) -> Vec<String> {
        match self.family() {
            Ok(family) => SubordinatorSpec::diagnose(self.drift, family, self.scale),
            Err(missing) => missing,
        }
    }

    pub fn to_spec(&self) -> Result<SubordinatorSpec, HarnessError> {
        let family = self.family().map_err(HarnessError::Config)?;
        SubordinatorSpec::new(self.drift, family, self.scale)
            .map_err(|_| HarnessError::Config(self.diagnostics()))
    }
}

/// Everything one run needs. Missing file keys fall back to the defaults of
/// the chosen experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub dim: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub t: f64,
    pub s: f64,
    pub t_list: Vec<f64>,
    pub grid: Vec<f64>,
    pub coupler: String,
    pub replicas: u64,
    pub seed: u64,
    pub out: PathBuf,
    /// Worker threads; 0 uses every available core. Never changes results.
    pub threads: usize,
    /// Reject couplers that are only defined componentwise when `dim > 1`.
    pub strict_1d: bool,
    /// Random evaluation points for the generator experiment.
    pub points: usize,
    /// Width of the test functions.
    pub width: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subordinator: Option<SubordinatorConfig>,
}

impl ExperimentConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        let mut c = ExperimentConfig {
            experiment,
            dim: 1,
            x: vec![1.0],
            y: vec![-1.0],
            t: 1.0,
            s: 1.0,
            t_list: vec![0.04, 0.02, 0.01],
            grid: vec![0.25, 0.5, 1.0, 2.0, 4.0],
            coupler: "reflection".into(),
            replicas: 1_000_000,
            seed: 20240917,
            out: PathBuf::from("out").join(experiment.name()),
            threads: 0,
            strict_1d: false,
            points: 5,
            width: 1.0,
            subordinator: None,
        };
        match experiment {
            Experiment::CoupleTime => {}
            Experiment::TvIdentity => {
                c.coupler = "subordinated-reflection".into();
                c.subordinator = Some(SubordinatorConfig::stable(0.5));
            }
            Experiment::Characterization => {
                c.t = 0.5;
                c.s = 0.5;
            }
            Experiment::Generator => {
                c.coupler = "synchronized".into();
                c.width = 1.5;
            }
            Experiment::Levy => {
                c.coupler = "subordinated-reflection".into();
                c.subordinator = Some(SubordinatorConfig::stable(0.5));
            }
            Experiment::Concavity => {
                c.grid = vec![0.5, 1.0, 1.5, 2.0];
            }
        }
        c
    }

    /// Reads a TOML file and overlays it on the defaults. `experiment` comes
    /// from the subcommand, the file, or both when they agree.
    pub fn load(path: &Path, experiment: Option<Experiment>) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
        Self::from_toml(&text, experiment)
    }

    pub fn from_toml(text: &str, experiment: Option<Experiment>) -> Result<Self, HarnessError> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| HarnessError::Config(vec![format!("config is not valid TOML: {e}")]))?;
        let from_file = match table.get("experiment") {
            None => None,
            Some(v) => Some(
                Experiment::deserialize(v.clone())
                    .map_err(|e| HarnessError::Config(vec![format!("experiment: {e}")]))?,
            ),
        };
        let kind = match (experiment, from_file) {
            (Some(a), Some(b)) if a != b => {
                return Err(HarnessError::Config(vec![format!(
                    "experiment: config file declares '{b}' but the subcommand is '{a}'"
                )]))
            }
            (Some(a), _) | (None, Some(a)) => a,
            (None, None) => {
                return Err(HarnessError::Config(vec![
                    "experiment: missing; set it in the file or use an experiment subcommand".into(),
                ]))
            }
        };
        let mut merged = toml::Table::try_from(Self::defaults(kind)).expect("defaults serialize");
        for (k, v) in table {
            merged.insert(k, v);
        }
        merged.insert("experiment".into(), toml::Value::String(kind.name().into()));
        ExperimentConfig::deserialize(merged).map_err(|e| HarnessError::Config(vec![e.message().to_string()]))
    }

    /// Canonical TOML of the fields that determine results. Output path and
    /// thread count are excluded.
    pub fn canonical(&self) -> String {
        let mut c = self.clone();
        c.out = PathBuf::new();
        c.threads = 0;
        toml::to_string(&c).expect("config serializes")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Field-level problems with `config`; empty iff the config is runnable.
pub fn validate(config: &ExperimentConfig) -> Vec<String> {
    let mut out = Vec::new();
    let mut push = |s: String| out.push(s);
    if config.replicas == 0 {
        push("replicas must be positive".into());
    }
    if config.dim == 0 {
        push("dim must be positive".into());
    }
    for (name, v) in [("x", &config.x), ("y", &config.y)] {
        if v.len() != config.dim {
            push(format!("{name} has {} coordinates but dim is {}", v.len(), config.dim));
        }
        if v.iter().any(|c| !c.is_finite()) {
            push(format!("{name} coordinates must be finite"));
        }
    }
    let kind = match config.coupler.parse::<CouplerKind>() {
        Ok(k) => Some(k),
        Err(_) => {
            push(format!(
                "coupler: unknown kind '{}'; expected reflection, synchronized, antithetic, switch or subordinated-reflection",
                config.coupler
            ));
            None
        }
    };
    if kind == Some(CouplerKind::Antithetic) && config.strict_1d && config.dim > 1 {
        push(format!(
            "coupler: antithetic is one-dimensional under strict_1d but dim is {}",
            config.dim
        ));
    }
    match &config.subordinator {
        Some(sub) => out.extend(sub.diagnostics()),
        None => {
            if kind == Some(CouplerKind::SubordinatedReflection) {
                out.push("subordinator: the subordinated-reflection coupler needs a [subordinator] table".into());
            }
        }
    }
    let mut push = |s: String| out.push(s);
    let positive = |v: f64| v > 0.0 && v.is_finite();
    let distinct = config.x != config.y;
    match config.experiment {
        Experiment::CoupleTime => {
            check_increasing(&config.grid, "grid", &mut push);
            if !matches!(kind, None | Some(CouplerKind::Reflection | CouplerKind::SubordinatedReflection)) {
                push("coupler: couple-time needs reflection or subordinated-reflection".into());
            }
            if !distinct {
                push("x and y must differ for couple-time".into());
            }
        }
        Experiment::TvIdentity => {
            if !positive(config.t) {
                push("t must be positive and finite".into());
            }
            if !matches!(kind, None | Some(CouplerKind::Reflection | CouplerKind::SubordinatedReflection)) {
                push("coupler: tv-identity needs reflection or subordinated-reflection".into());
            }
            if !distinct {
                push("x and y must differ for tv-identity".into());
            }
        }
        Experiment::Characterization => {
            if !positive(config.t) {
                push("t must be positive and finite".into());
            }
            if !positive(config.s) {
                push("s must be positive and finite".into());
            }
        }
        Experiment::Generator => {
            check_t_list(&config.t_list, &mut push);
            if kind == Some(CouplerKind::SubordinatedReflection) {
                push("coupler: generator needs a Brownian coupler".into());
            }
            if kind == Some(CouplerKind::Switch) && config.t_list.first().is_some_and(|&t| t >= 1.0) {
                push("t_list: switch coupler quotients need times below the switch time 1".into());
            }
            if config.points == 0 {
                push("points must be positive".into());
            }
            if !positive(config.width) {
                push("width must be positive and finite".into());
            }
        }
        Experiment::Levy => {
            check_t_list(&config.t_list, &mut push);
            if config.subordinator.is_none() {
                push("subordinator: levy needs a [subordinator] table".into());
            }
            if config.dim > 3 {
                push(format!("dim: levy quadrature supports dim up to 3, got {}", config.dim));
            }
            if !distinct {
                push("x and y must differ for levy".into());
            }
            if !positive(config.width) {
                push("width must be positive and finite".into());
            }
        }
        Experiment::Concavity => {
            if !positive(config.t) {
                push("t must be positive and finite".into());
            }
            check_increasing(&config.grid, "grid", &mut push);
            if config.grid.len() < 3 {
                push("grid needs at least three distances".into());
            }
        }
    }
    out
}

fn check_increasing(v: &[f64], name: &str, push: &mut impl FnMut(String)) {
    if v.is_empty() {
        push(format!("{name} must not be empty"));
    }
    if v.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        push(format!("{name} entries must be positive and finite"));
    }
    if v.windows(2).any(|w| w[1] <= w[0]) {
        push(format!("{name} must be strictly increasing"));
    }
}

fn check_t_list(v: &[f64], push: &mut impl FnMut(String)) {
    if v.len() < 2 {
        push("t_list needs at least two times".into());
    }
    if v.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        push("t_list entries must be positive and finite".into());
    }
    if v.windows(2).any(|w| w[1] >= w[0]) {
        push("t_list must be strictly decreasing".into());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        for e in Experiment::ALL {
            assert!(validate(&ExperimentConfig::defaults(e)).is_empty(), "{e}");
        }
    }

    #[test]
    fn zero_replicas() {
        let mut c = ExperimentConfig::defaults(Experiment::CoupleTime);
        c.replicas = 0;
        assert_eq!(validate(&c), vec!["replicas must be positive".to_string()]);
    }

    #[test]
    fn antithetic_strict_in_three_dimensions() {
        let mut c = ExperimentConfig::defaults(Experiment::Characterization);
        c.coupler = "antithetic".into();
        c.dim = 3;
        c.x = vec![1.0, 0.0, 0.0];
        c.y = vec![-1.0, 0.0, 0.0];
        assert!(validate(&c).is_empty());
        c.strict_1d = true;
        let d = validate(&c);
        assert_eq!(d.len(), 1);
        assert!(d[0].contains("antithetic"));
    }

    #[test]
    fn stable_index_out_of_range() {
        let mut c = ExperimentConfig::defaults(Experiment::TvIdentity);
        c.subordinator = Some(SubordinatorConfig::stable(1.5));
        assert_eq!(validate(&c), vec!["subordinator stable index must lie in (0,1)".to_string()]);
    }

    #[test]
    fn missing_subordinator_field() {
        let c = ExperimentConfig::from_toml(
            "[subordinator]\nkind = \"gamma\"\nshape = 1.0\n",
            Some(Experiment::Levy),
        )
        .unwrap();
        assert_eq!(validate(&c), vec!["subordinator.rate is required for this kind".to_string()]);
    }

    #[test]
    fn file_overlays_defaults() {
        let c = ExperimentConfig::from_toml("replicas = 10\nx = [2.0]\n", Some(Experiment::CoupleTime)).unwrap();
        assert_eq!(c.replicas, 10);
        assert_eq!(c.x, vec![2.0]);
        assert_eq!(c.grid, ExperimentConfig::defaults(Experiment::CoupleTime).grid);
    }

    #[test]
    fn unknown_keys_and_mismatched_experiment_rejected() {
        assert!(ExperimentConfig::from_toml("replicaz = 3\n", Some(Experiment::Levy)).is_err());
        assert!(ExperimentConfig::from_toml("experiment = \"levy\"\n", Some(Experiment::Concavity)).is_err());
        assert!(ExperimentConfig::from_toml("dim = 1\n", None).is_err());
        let c = ExperimentConfig::from_toml("experiment = \"concavity\"\n", None).unwrap();
        assert_eq!(c.experiment, Experiment::Concavity);
    }

    #[test]
    fn toml_round_trip() {
        for e in Experiment::ALL {
            let c = ExperimentConfig::defaults(e);
            assert_eq!(ExperimentConfig::from_toml(&c.to_toml(), None).unwrap(), c);
        }
    }

    #[test]
    fn unknown_coupler() {
        let mut c = ExperimentConfig::defaults(Experiment::Characterization);
        c.coupler = "mirror".into();
        assert_eq!(validate(&c).len(), 1);
    }
}
