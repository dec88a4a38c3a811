//! Run configuration: one TOML document per experiment.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::continuation::ContinuationConfig;
use crate::error::{Error, Result};
use crate::nonlinearity::{NonlinearityKind, NonlinearitySpec};
use crate::spectral::{SymbolFamily, SymbolSpec};
use crate::steady::{SteadyProblem, PADDING};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Kernel,
    Branch,
    Homotopy,
    VerifyAsymptotics,
    Regularity,
    Audit,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Kernel,
        Command::Branch,
        Command::Homotopy,
        Command::VerifyAsymptotics,
        Command::Regularity,
        Command::Audit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Kernel => "kernel",
            Command::Branch => "branch",
            Command::Homotopy => "homotopy",
            Command::VerifyAsymptotics => "verify-asymptotics",
            Command::Regularity => "regularity",
            Command::Audit => "audit",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::config("command", format!("unknown command `{s}`")))
    }
}

/// Every experiment parameter. Missing keys take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub alpha: f64,
    pub symbol_family: SymbolFamily,
    pub kind: NonlinearityKind,
    pub p: f64,
    /// Regularisation for single-`ε` commands; the homotopy uses
    /// `continuation.eps_schedule`.
    pub eps: f64,
    /// Branch index.
    pub k: usize,
    /// Retained cosine modes.
    pub m: usize,
    /// Grid nodes; `0` selects `4m`.
    pub n: usize,
    /// Kernel table size.
    pub nodes: usize,
    /// Random points in the kernel cross-check.
    pub checks: usize,
    /// Fourier terms in the kernel cross-check.
    pub fourier_terms: usize,
    /// Amplitudes for `verify-asymptotics`.
    pub s_list: Vec<f64>,
    /// Fit window for `regularity`; automatic when absent.
    pub window: Option<(f64, f64)>,
    /// Floor for the one-sided `|x|^α` bound.
    pub lower_bound_floor: f64,
    /// Wave CSV to audit instead of computing a branch.
    pub wave: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub continuation: ContinuationConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: None,
            alpha: 0.5,
            symbol_family: SymbolFamily::NegOrder,
            kind: NonlinearityKind::Abs,
            p: 2.0,
            eps: 1e-2,
            k: 1,
            m: 512,
            n: 0,
            nodes: 513,
            checks: 20,
            fourier_terms: 1_000_000,
            s_list: vec![0.005, 0.01, 0.015, 0.02],
            window: None,
            lower_bound_floor: 0.0,
            wave: None,
            output_dir: PathBuf::from("out"),
            seed: 0,
            continuation: ContinuationConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.message().to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::from_toml_str(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    /// Grid size, resolving `n = 0` to `4m`.
    pub fn grid_size(&self) -> usize {
        if self.n == 0 {
            PADDING * self.m
        } else {
            self.n
        }
    }

    pub fn symbol(&self) -> SymbolSpec {
        SymbolSpec {
            family: self.symbol_family,
            alpha: self.alpha,
        }
    }

    pub fn nonlinearity(&self) -> NonlinearitySpec {
        NonlinearitySpec::new(self.kind, self.p, self.eps)
    }

    /// Continuation controls with the branch index applied.
    pub fn continuation_config(&self) -> ContinuationConfig {
        ContinuationConfig {
            mode: self.k,
            ..self.continuation.clone()
        }
    }

    pub fn problem(&self) -> Result<SteadyProblem> {
        SteadyProblem::new(self.symbol(), self.nonlinearity(), self.grid_size(), self.m)
    }

    /// Field-level validation of everything the command will use.
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::config(field, msg));
        let command = match self.command {
            Some(c) => c,
            None => return bad("command", "no command given".into()),
        };
        let alpha_max = if self.symbol_family == SymbolFamily::NegOrder {
            1.0
        } else {
            f64::INFINITY
        };
        if !(self.alpha > 0.0 && self.alpha <= alpha_max) {
            return bad("alpha", format!("must lie in (0, {alpha_max}], got {}", self.alpha));
        }
        if command == Command::Kernel {
            if self.symbol_family != SymbolFamily::NegOrder {
                return bad("symbol_family", "the kernel command needs neg_order".into());
            }
            if self.nodes < 2 {
                return bad("nodes", format!("must be at least 2, got {}", self.nodes));
            }
            if self.fourier_terms < 1000 {
                return bad(
                    "fourier_terms",
                    format!("must be at least 1000, got {}", self.fourier_terms),
                );
            }
            return Ok(());
        }
        if !(self.p > 1.0 && self.p.is_finite()) {
            return bad("p", format!("must satisfy p > 1, got {}", self.p));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return bad("eps", format!("must be positive, got {}", self.eps));
        }
        if self.k == 0 {
            return bad("k", "must be at least 1".into());
        }
        if self.m < 2 {
            return bad("m", format!("must be at least 2, got {}", self.m));
        }
        let n = self.grid_size();
        if !n.is_power_of_two() || n < 4 {
            return bad("n", format!("must be a power of two, got {n}"));
        }
        if n < PADDING * self.m {
            return bad(
                "n",
                format!("must be at least {} (= {PADDING} m), got {n}", PADDING * self.m),
            );
        }
        if self.k > self.m {
            return bad("k", format!("must not exceed m = {}", self.m));
        }
        self.continuation_config().validate()?;
        if command == Command::VerifyAsymptotics
            && (self.s_list.is_empty() || self.s_list.iter().any(|s| !(*s > 0.0 && s.is_finite())))
        {
            return bad("s_list", "must be a non-empty list of positive amplitudes".into());
        }
        if let Some((lo, hi)) = self.window {
            if !(lo > 0.0 && lo < hi && hi <= std::f64::consts::FRAC_PI_4) {
                return bad("window", format!("need 0 < lo < hi <= pi/4, got ({lo}, {hi})"));
            }
        }
        if !self.lower_bound_floor.is_finite() {
            return bad("lower_bound_floor", "must be finite".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig> {
        RunConfig::from_toml_str(text, Path::new("test.toml"))
    }

    #[test]
    fn defaults_validate_for_every_command() {
        for c in Command::ALL {
            let config = RunConfig {
                command: Some(c),
                ..RunConfig::default()
            };
            config.validate().unwrap();
        }
    }

    #[test]
    fn round_trips_through_toml() {
        let config = RunConfig {
            command: Some(Command::Homotopy),
            window: Some((0.01, 0.3)),
            ..RunConfig::default()
        };
        assert_eq!(parse(&config.to_toml()).unwrap(), config);
    }

    #[test]
    fn nested_tables_parse() {
        let config = parse(
            "command = \"branch\"\nalpha = 0.3\nkind = \"sgn\"\np = 2.5\n[continuation]\nds = 1e-3\neps_schedule = [0.1, 0.01]\n",
        )
        .unwrap();
        assert_eq!(config.command, Some(Command::Branch));
        assert_eq!(config.kind, NonlinearityKind::Sgn);
        assert_eq!(config.continuation.ds, 1e-3);
        assert_eq!(config.continuation.eps_schedule, vec![0.1, 0.01]);
        config.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(parse("alpah = 0.5\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn invalid_p_names_the_field() {
        let config = RunConfig {
            command: Some(Command::Branch),
            p: 0.5,
            ..RunConfig::default()
        };
        match config.validate() {
            Err(Error::Config { field, message }) => {
                assert_eq!(field, "p");
                assert!(message.contains("p > 1"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn grid_constraints() {
        let mut config = RunConfig {
            command: Some(Command::Branch),
            n: 1000,
            ..RunConfig::default()
        };
        assert!(matches!(config.validate(), Err(Error::Config { field, .. }) if field == "n"));
        config.n = 1024;
        assert!(matches!(config.validate(), Err(Error::Config { field, .. }) if field == "n"));
        config.n = 2048;
        config.validate().unwrap();
    }

    #[test]
    fn command_names_parse() {
        for c in Command::ALL {
            assert_eq!(c.name().parse::<Command>().unwrap(), c);
        }
        assert!("plot".parse::<Command>().is_err());
    }
}
