//! Run configuration: a line-oriented `key = value` format with
//! `[section]` headers, strict about unknown keys so a misspelling can
//! never silently fall back to a default.
//!
//! ```text
//! # comments and blank lines are ignored
//! [problem]
//! kind = logistic          # quadratic | logistic | rosenbrock | mlp
//! dim = 20
//! samples = 1000
//! data_seed = 7
//! shift_scale = 0.0        # rosenbrock only
//! hidden = 16              # mlp only
//!
//! [optimizer]
//! precond = adam_max       # identity | adam_max | ams_grad
//! eps = 1e-8
//!
//! [schedule]
//! regime = constant        # constant | diminishing
//! alpha0 = 1e-3
//! beta0 = 0.9
//! gamma0 = 0.1
//! delta0 = 1e-3
//! zeta = 0.9
//! theta = 0.999
//! eta = 0.5                # diminishing only
//! decay_base = 0.5         # diminishing only
//! cosine_period = 0        # constant only; 0 disables
//!
//! [run]
//! steps = 10000
//! trials = 10
//! batch_size = 10
//! sampling = epoch         # uniform | epoch
//! seed = 42
//! checks =                 # comma list, see CheckName
//! reference_steps = 0      # designate x_ref by a long run when no optimum
//! ```
//!
//! Every value above is also the default, so an empty file is a valid
//! configuration. Overrides of the form `section.key=value` go through the
//! same validation.

use crate::optimizer::{PrecondKind, PrecondVariant, ScgOptimizer};
use crate::problems::{ProblemKind, ProblemSpec, Sampling};
use crate::schedules::{HyperSchedule, Regime};
use crate::{Error, Result};

/// Which conformance checks a run should evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckName {
    MomentumBound,
    DirectionBound,
    PrecondMonotone,
    Reductions,
    Unbiasedness,
    ConvexLinks,
}

impl CheckName {
    pub const ALL: [CheckName; 6] = [
        CheckName::MomentumBound,
        CheckName::DirectionBound,
        CheckName::PrecondMonotone,
        CheckName::Reductions,
        CheckName::Unbiasedness,
        CheckName::ConvexLinks,
    ];

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "momentum_bound" => Ok(CheckName::MomentumBound),
            "direction_bound" => Ok(CheckName::DirectionBound),
            "precond_monotone" => Ok(CheckName::PrecondMonotone),
            "reductions" => Ok(CheckName::Reductions),
            "unbiasedness" => Ok(CheckName::Unbiasedness),
            "convex_links" => Ok(CheckName::ConvexLinks),
            other => Err(Error::config(format!(
                "unknown check '{other}' (expected momentum_bound | direction_bound | \
                 precond_monotone | reductions | unbiasedness | convex_links)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CheckName::MomentumBound => "momentum_bound",
            CheckName::DirectionBound => "direction_bound",
            CheckName::PrecondMonotone => "precond_monotone",
            CheckName::Reductions => "reductions",
            CheckName::Unbiasedness => "unbiasedness",
            CheckName::ConvexLinks => "convex_links",
        }
    }
}

/// Fully validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub problem_kind: ProblemKind,
    pub dim: usize,
    pub samples: usize,
    pub data_seed: u64,
    pub shift_scale: f64,
    pub hidden: usize,

    pub precond: PrecondVariant,
    pub eps: f64,

    pub regime: Regime,
    pub alpha0: f64,
    pub beta0: f64,
    pub gamma0: f64,
    pub delta0: f64,
    pub zeta: f64,
    pub theta: f64,
    pub eta: f64,
    pub decay_base: f64,
    pub cosine_period: u64,

    pub steps: u64,
    pub trials: usize,
    pub batch_size: usize,
    pub sampling: Sampling,
    pub seed: u64,
    pub checks: Vec<CheckName>,
    pub reference_steps: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem_kind: ProblemKind::Logistic,
            dim: 20,
            samples: 1000,
            data_seed: 7,
            shift_scale: 0.0,
            hidden: 16,
            precond: PrecondVariant::AdamMax,
            eps: 1e-8,
            regime: Regime::Constant,
            alpha0: 1e-3,
            beta0: 0.9,
            gamma0: 0.1,
            delta0: 1e-3,
            zeta: 0.9,
            theta: 0.999,
            eta: 0.5,
            decay_base: 0.5,
            cosine_period: 0,
            steps: 10_000,
            trials: 10,
            batch_size: 10,
            sampling: Sampling::EpochPartition,
            seed: 42,
            checks: Vec::new(),
            reference_steps: 0,
        }
    }
}

fn parse_num<T: std::str::FromStr>(value: &str, key: &str, at: &str) -> Result<T> {
    value
        .trim()
        .parse::<T>()
        .map_err(|_| Error::config(format!("{at}: invalid value '{value}' for key '{key}'")))
}

impl RunConfig {
    /// Parses the documented config format, starting from the defaults.
    /// Errors name the offending line and key; unknown keys are errors.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        let mut section: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let at = format!("line {}", idx + 1);
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| Error::config(format!("{at}: malformed section header")))?
                    .trim();
                match name {
                    "problem" | "optimizer" | "schedule" | "run" => {
                        section = Some(name.to_string())
                    }
                    other => {
                        return Err(Error::config(format!("{at}: unknown section [{other}]")))
                    }
                }
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("{at}: expected 'key = value'")))?;
            let sec = section
                .as_deref()
                .ok_or_else(|| Error::config(format!("{at}: key before any [section]")))?;
            cfg.set(sec, key.trim(), value.trim(), &at)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies one `section.key=value` override.
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        let (path, value) = spec
            .split_once('=')
            .ok_or_else(|| Error::config(format!("override '{spec}' must be section.key=value")))?;
        let (section, key) = path
            .trim()
            .split_once('.')
            .ok_or_else(|| Error::config(format!("override '{spec}' must be section.key=value")))?;
        let at = format!("override '{spec}'");
        self.set(section, key, value.trim(), &at)?;
        self.validate()
    }

    fn set(&mut self, section: &str, key: &str, value: &str, at: &str) -> Result<()> {
        match (section, key) {
            ("problem", "kind") => self.problem_kind = ProblemKind::parse(value)?,
            ("problem", "dim") => self.dim = parse_num(value, key, at)?,
            ("problem", "samples") => self.samples = parse_num(value, key, at)?,
            ("problem", "data_seed") => self.data_seed = parse_num(value, key, at)?,
            ("problem", "shift_scale") => self.shift_scale = parse_num(value, key, at)?,
            ("problem", "hidden") => self.hidden = parse_num(value, key, at)?,
            ("optimizer", "precond") => {
                self.precond = match value {
                    "identity" => PrecondVariant::Identity,
                    "adam_max" => PrecondVariant::AdamMax,
                    "ams_grad" => PrecondVariant::AmsGrad,
                    other => {
                        return Err(Error::config(format!(
                            "{at}: unknown preconditioner '{other}' \
                             (expected identity | adam_max | ams_grad)"
                        )))
                    }
                }
            }
            ("optimizer", "eps") => self.eps = parse_num(value, key, at)?,
            ("schedule", "regime") => {
                self.regime = match value {
                    "constant" => Regime::Constant,
                    "diminishing" => Regime::Diminishing,
                    other => {
                        return Err(Error::config(format!(
                            "{at}: unknown regime '{other}' (expected constant | diminishing)"
                        )))
                    }
                }
            }
            ("schedule", "alpha0") => self.alpha0 = parse_num(value, key, at)?,
            ("schedule", "beta0") => self.beta0 = parse_num(value, key, at)?,
            ("schedule", "gamma0") => self.gamma0 = parse_num(value, key, at)?,
            ("schedule", "delta0") => self.delta0 = parse_num(value, key, at)?,
            ("schedule", "zeta") => self.zeta = parse_num(value, key, at)?,
            ("schedule", "theta") => self.theta = parse_num(value, key, at)?,
            ("schedule", "eta") => self.eta = parse_num(value, key, at)?,
            ("schedule", "decay_base") => self.decay_base = parse_num(value, key, at)?,
            ("schedule", "cosine_period") => self.cosine_period = parse_num(value, key, at)?,
            ("run", "steps") => self.steps = parse_num(value, key, at)?,
            ("run", "trials") => self.trials = parse_num(value, key, at)?,
            ("run", "batch_size") => self.batch_size = parse_num(value, key, at)?,
            ("run", "sampling") => self.sampling = Sampling::parse(value)?,
            ("run", "seed") => self.seed = parse_num(value, key, at)?,
            ("run", "checks") => {
                self.checks = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(CheckName::parse)
                    .collect::<Result<Vec<_>>>()?
            }
            ("run", "reference_steps") => self.reference_steps = parse_num(value, key, at)?,
            ("problem" | "optimizer" | "schedule" | "run", _) => {
                return Err(Error::config(format!(
                    "{at}: unknown key '{key}' in [{section}]"
                )))
            }
            _ => return Err(Error::config(format!("{at}: unknown section [{section}]"))),
        }
        Ok(())
    }

    /// Validates every admissible range; the schedule and preconditioner
    /// constructors carry the range checks themselves.
    pub fn validate(&self) -> Result<()> {
        self.schedule()?;
        self.precond_kind()?;
        if self.steps == 0 {
            return Err(Error::config("steps must be >= 1"));
        }
        if self.trials == 0 {
            return Err(Error::config("trials must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be >= 1"));
        }
        Ok(())
    }

    pub fn schedule(&self) -> Result<HyperSchedule<f64>> {
        let s = match self.regime {
            Regime::Constant => HyperSchedule::constant(
                self.alpha0,
                self.beta0,
                self.gamma0,
                self.delta0,
                self.zeta,
                self.theta,
            )?,
            Regime::Diminishing => HyperSchedule::diminishing(
                self.alpha0,
                self.eta,
                self.beta0,
                self.gamma0,
                self.delta0,
                self.decay_base,
                self.zeta,
                self.theta,
            )?,
        };
        if self.cosine_period > 0 {
            s.with_cosine(self.cosine_period)
        } else {
            Ok(s)
        }
    }

    pub fn precond_kind(&self) -> Result<PrecondKind<f64>> {
        PrecondKind::new(self.precond, self.theta, self.eps)
    }

    pub fn optimizer(&self) -> Result<ScgOptimizer<f64>> {
        ScgOptimizer::new(self.precond_kind()?, self.zeta)
    }

    pub fn problem_spec(&self) -> ProblemSpec {
        ProblemSpec {
            kind: self.problem_kind,
            dim: self.dim,
            samples: self.samples,
            data_seed: self.data_seed,
            shift_scale: self.shift_scale,
            hidden: self.hidden,
        }
    }

    /// Stable rendering of the effective configuration (defaults plus file
    /// plus overrides); hashed into every trace.
    pub fn canonical_string(&self) -> String {
        let checks: Vec<&str> = self.checks.iter().map(|c| c.name()).collect();
        format!(
            "problem.kind={:?};problem.dim={};problem.samples={};problem.data_seed={};\
             problem.shift_scale={:e};problem.hidden={};optimizer.precond={};\
             optimizer.eps={:e};schedule.regime={:?};schedule.alpha0={:e};\
             schedule.beta0={:e};schedule.gamma0={:e};schedule.delta0={:e};\
             schedule.zeta={:e};schedule.theta={:e};schedule.eta={:e};\
             schedule.decay_base={:e};schedule.cosine_period={};run.steps={};\
             run.trials={};run.batch_size={};run.sampling={:?};run.seed={};\
             run.checks={};run.reference_steps={}",
            self.problem_kind,
            self.dim,
            self.samples,
            self.data_seed,
            self.shift_scale,
            self.hidden,
            self.precond.name(),
            self.eps,
            self.regime,
            self.alpha0,
            self.beta0,
            self.gamma0,
            self.delta0,
            self.zeta,
            self.theta,
            self.eta,
            self.decay_base,
            self.cosine_period,
            self.steps,
            self.trials,
            self.batch_size,
            self.sampling,
            self.seed,
            checks.join("+"),
            self.reference_steps,
        )
    }

    /// FNV-1a hash of the canonical configuration string.
    pub fn hash(&self) -> u64 {
        fnv1a(self.canonical_string().as_bytes())
    }
}

/// FNV-1a, 64-bit: stable across builds and platforms.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_yields_documented_defaults() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg.problem_kind, ProblemKind::Logistic);
        assert_eq!(cfg.dim, 20);
        assert_eq!(cfg.samples, 1000);
        assert_eq!(cfg.precond, PrecondVariant::AdamMax);
        assert_eq!(cfg.alpha0, 1e-3);
        assert_eq!(cfg.beta0, 0.9);
        assert_eq!(cfg.gamma0, 0.1);
        assert_eq!(cfg.delta0, 1e-3);
        assert_eq!(cfg.zeta, 0.9);
        assert_eq!(cfg.theta, 0.999);
        assert_eq!(cfg.trials, 10);
        assert_eq!(cfg.seed, 42);
        assert!(cfg.checks.is_empty());
    }

    #[test]
    fn range_violation_cites_the_constraint() {
        let err = RunConfig::parse("[schedule]\ndelta0 = 0.6\n").unwrap_err();
        assert!(
            err.to_string().contains("delta0 must lie in [0, 1/2]"),
            "got: {err}"
        );
    }

    #[test]
    fn constant_adam_reference_setting_is_accepted() {
        let text = "\
[problem]
kind = logistic
dim = 20
samples = 1000

[optimizer]
precond = adam_max

[schedule]
regime = constant
alpha0 = 1e-3
beta0 = 0.9
gamma0 = 1e-1
delta0 = 1e-3
zeta = 0.9
theta = 0.999

[run]
steps = 1000
trials = 2
";
        let cfg = RunConfig::parse(text).unwrap();
        let h = cfg.schedule().unwrap().eval(123);
        assert_eq!(h.alpha, 1e-3);
        assert_eq!(h.beta, 0.9);
        assert_eq!(h.gamma, 1e-1);
        assert_eq!(h.delta, 1e-3);
    }

    #[test]
    fn unknown_keys_and_sections_are_errors() {
        let err = RunConfig::parse("[schedule]\nalpa0 = 0.1\n").unwrap_err();
        assert!(err.to_string().contains("unknown key 'alpa0'"), "{err}");
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(RunConfig::parse("[sched]\n").is_err());
        assert!(RunConfig::parse("alpha0 = 0.1\n").is_err());
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let cfg = RunConfig::parse("# top\n\n[run]\nseed = 7 # inline\n").unwrap();
        assert_eq!(cfg.seed, 7);
    }

    #[test]
    fn overrides_follow_the_same_validation() {
        let mut cfg = RunConfig::parse("").unwrap();
        cfg.apply_override("schedule.alpha0=5e-2").unwrap();
        assert_eq!(cfg.alpha0, 5e-2);
        assert!(cfg.apply_override("schedule.delta0=0.7").is_err());
        assert!(cfg.apply_override("schedule.nope=1").is_err());
        assert!(cfg.apply_override("alpha0=1").is_err());
    }

    #[test]
    fn hash_tracks_effective_config() {
        let a = RunConfig::parse("").unwrap();
        let mut b = RunConfig::parse("").unwrap();
        assert_eq!(a.hash(), b.hash());
        b.apply_override("run.seed=43").unwrap();
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn check_list_parses() {
        let cfg =
            RunConfig::parse("[run]\nchecks = momentum_bound, precond_monotone\n").unwrap();
        assert_eq!(
            cfg.checks,
            vec![CheckName::MomentumBound, CheckName::PrecondMonotone]
        );
        assert!(RunConfig::parse("[run]\nchecks = bogus\n").is_err());
    }
}
