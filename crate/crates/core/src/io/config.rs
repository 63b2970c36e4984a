use std::fmt::Display;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coalescent::{HeightKind, OnlineConfig, OrderingKind, ProposalConfig};
use crate::error::{Error, Result};
use crate::gmm::{GmmRunConfig, McmcScheme, MoveKind, WeightMode};
use crate::smc::SmcConfig;

/// Which application a run performs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    GmmEvidence,
    CoalescentOnline,
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "gmm-evidence" => Ok(Self::GmmEvidence),
            "coalescent-online" => Ok(Self::CoalescentOnline),
            other => Err(format!("unknown command `{other}`")),
        }
    }
}

impl Display for Command {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::GmmEvidence => "gmm-evidence",
            Self::CoalescentOnline => "coalescent-online",
        })
    }
}

/// Proposal covariance rule for mixture MCMC, by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeName {
    /// Weighted particle covariance over the component count.
    Covariance,
    /// Rescaled towards 20% acceptance.
    Acceptance,
}

impl FromStr for SchemeName {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "covariance" => Ok(Self::Covariance),
            "acceptance" => Ok(Self::Acceptance),
            other => Err(format!("unknown scheme `{other}`")),
        }
    }
}

impl Display for SchemeName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Covariance => "covariance",
            Self::Acceptance => "acceptance",
        })
    }
}

/// A fully resolved run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub data_path: PathBuf,
    pub particles: usize,
    /// Resample when ESS falls below this fraction of the particle count.
    pub resample_threshold: f64,
    /// CESS fraction used to place intermediate distributions.
    pub cess_target: f64,
    pub seed: u64,
    pub deterministic: bool,
    pub output_dir: PathBuf,
    pub t_max: usize,
    pub move_kind: MoveKind,
    pub weight_mode: WeightMode,
    pub mcmc_scheme: SchemeName,
    pub ordering: OrderingKind,
    pub lineage_power: f64,
    pub height_kind: HeightKind,
    pub spr_moves: usize,
}

/// Keys accepted in configuration files, in serialisation order.
pub const CONFIG_KEYS: [&str; 16] = [
    "command",
    "data_path",
    "particles",
    "resample_threshold",
    "cess_target",
    "seed",
    "deterministic",
    "output_dir",
    "t_max",
    "move",
    "weight_mode",
    "mcmc_scheme",
    "ordering",
    "lineage_power",
    "height_kind",
    "spr_moves",
];

fn value<T: FromStr>(key: &str, raw: &str) -> Result<T>
where
    T::Err: Display,
{
    raw.parse::<T>()
        .map_err(|e| Error::config(key, format!("cannot parse `{raw}`: {e}")))
}

impl RunConfig {
    /// Defaults for `command`; `particles` and `cess_target` differ between
    /// the two applications.
    pub fn defaults(command: Command, data_path: PathBuf) -> Self {
        let (particles, cess_target) = match command {
            Command::GmmEvidence => (500, 0.99),
            Command::CoalescentOnline => (250, 0.95),
        };
        Self {
            command,
            data_path,
            particles,
            resample_threshold: 0.5,
            cess_target,
            seed: 0,
            deterministic: true,
            output_dir: PathBuf::from("tsmc-out"),
            t_max: 5,
            move_kind: MoveKind::Split,
            weight_mode: WeightMode::Marginal,
            mcmc_scheme: SchemeName::Covariance,
            ordering: OrderingKind::Nearest,
            lineage_power: 1.0,
            height_kind: HeightKind::Laplace,
            spr_moves: 20,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.smc().validate()?;
        if self.t_max == 0 {
            return Err(Error::config("t_max", "must be at least 1"));
        }
        self.proposal().validate()
    }

    pub fn smc(&self) -> SmcConfig {
        SmcConfig {
            particle_count: self.particles,
            resample_threshold: self.resample_threshold,
            cess_target: self.cess_target,
            mcmc_sweeps_per_step: 1,
            seed: self.seed,
            deterministic_reduction: self.deterministic,
        }
    }

    pub fn proposal(&self) -> ProposalConfig {
        ProposalConfig {
            lineage_power: self.lineage_power,
            height_kind: self.height_kind,
            spr_moves_per_sweep: self.spr_moves,
        }
    }

    pub fn gmm(&self) -> GmmRunConfig {
        GmmRunConfig {
            smc: self.smc(),
            move_kind: self.move_kind,
            weight_mode: self.weight_mode,
            scheme: match self.mcmc_scheme {
                SchemeName::Covariance => McmcScheme::CovarianceScaled,
                SchemeName::Acceptance => McmcScheme::acceptance_tuned(),
            },
            t_max: self.t_max,
        }
    }

    pub fn online(&self) -> OnlineConfig {
        OnlineConfig {
            smc: self.smc(),
            proposal: self.proposal(),
        }
    }

    fn set(&mut self, key: &str, raw: &str) -> Result<()> {
        match key {
            "command" => self.command = value(key, raw)?,
            "data_path" => self.data_path = PathBuf::from(raw),
            "particles" => self.particles = value(key, raw)?,
            "resample_threshold" => self.resample_threshold = value(key, raw)?,
            "cess_target" => self.cess_target = value(key, raw)?,
            "seed" => self.seed = value(key, raw)?,
            "deterministic" => self.deterministic = value(key, raw)?,
            "output_dir" => self.output_dir = PathBuf::from(raw),
            "t_max" => self.t_max = value(key, raw)?,
            "move" => self.move_kind = value(key, raw)?,
            "weight_mode" => self.weight_mode = value(key, raw)?,
            "mcmc_scheme" => self.mcmc_scheme = value(key, raw)?,
            "ordering" => self.ordering = value(key, raw)?,
            "lineage_power" => self.lineage_power = value(key, raw)?,
            "height_kind" => self.height_kind = value(key, raw)?,
            "spr_moves" => self.spr_moves = value(key, raw)?,
            other => return Err(Error::config(other, "unknown key")),
        }
        Ok(())
    }

    /// `key = value` lines that [`parse_config`] turns back into `self`.
    pub fn to_config_text(&self) -> String {
        let lines = [
            ("command", self.command.to_string()),
            ("data_path", self.data_path.display().to_string()),
            ("particles", self.particles.to_string()),
            ("resample_threshold", self.resample_threshold.to_string()),
            ("cess_target", self.cess_target.to_string()),
            ("seed", self.seed.to_string()),
            ("deterministic", self.deterministic.to_string()),
            ("output_dir", self.output_dir.display().to_string()),
            ("t_max", self.t_max.to_string()),
            ("move", self.move_kind.to_string()),
            ("weight_mode", self.weight_mode.to_string()),
            ("mcmc_scheme", self.mcmc_scheme.to_string()),
            ("ordering", self.ordering.to_string()),
            ("lineage_power", self.lineage_power.to_string()),
            ("height_kind", self.height_kind.to_string()),
            ("spr_moves", self.spr_moves.to_string()),
        ];
        lines.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

/// Split `key = value` lines. Blank lines and `#` comments are skipped.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::config(
                format!("line {}", i + 1),
                format!("expected `key = value`, found `{line}`"),
            ));
        };
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Resolve a configuration from file text and command-line overrides.
///
/// Overrides win over file values, which win over the defaults of the
/// selected command. The command and data path must be given somewhere.
pub fn parse_config(text: &str, overrides: &[(String, String)]) -> Result<RunConfig> {
    let mut pairs = parse_pairs(text)?;
    pairs.extend(overrides.iter().cloned());
    for (k, _) in &pairs {
        if !CONFIG_KEYS.contains(&k.as_str()) {
            return Err(Error::config(k.clone(), "unknown key"));
        }
    }
    let last = |key: &str| pairs.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
    let command: Command = value(
        "command",
        last("command").ok_or_else(|| Error::config("command", "no command given"))?,
    )?;
    let data_path = last("data_path").ok_or_else(|| Error::config("data_path", "missing data path"))?;
    let mut config = RunConfig::defaults(command, PathBuf::from(data_path));
    for (k, v) in &pairs {
        config.set(k, v)?;
    }
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with(cmd: &str) -> Vec<(String, String)> {
        vec![
            ("command".into(), cmd.into()),
            ("data_path".into(), "x.txt".into()),
        ]
    }

    #[test]
    fn command_defaults() {
        let g = parse_config("", &with("gmm-evidence")).unwrap();
        assert_eq!((g.particles, g.cess_target, g.resample_threshold), (500, 0.99, 0.5));
        let c = parse_config("", &with("coalescent-online")).unwrap();
        assert_eq!((c.particles, c.cess_target), (250, 0.95));
    }

    #[test]
    fn overrides_win() {
        let mut o = with("gmm-evidence");
        o.push(("particles".into(), "64".into()));
        let c = parse_config("particles = 10\nseed = 4 # comment\n", &o).unwrap();
        assert_eq!((c.particles, c.seed), (64, 4));
    }

    #[test]
    fn errors_name_the_key() {
        let e = parse_config("cess_target = 1.5", &with("gmm-evidence")).unwrap_err();
        assert!(e.to_string().contains("cess_target out of range"), "{e}");
        let e = parse_config("colour = red", &with("gmm-evidence")).unwrap_err();
        assert!(e.to_string().contains("colour"));
        let e = parse_config("lineage_power = 3", &with("coalescent-online")).unwrap_err();
        assert!(e.to_string().contains("lineage_power"));
        let e = parse_config("command = gmm-evidence", &[]).unwrap_err();
        assert!(e.to_string().contains("data_path"));
    }

    #[test]
    fn text_round_trip() {
        let mut c = RunConfig::defaults(Command::CoalescentOnline, "data/aln.fa".into());
        c.cess_target = 0.1 + 0.2;
        c.lineage_power = 4.0;
        c.deterministic = false;
        assert_eq!(parse_config(&c.to_config_text(), &[]).unwrap(), c);
    }
}
