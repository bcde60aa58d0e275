//! Run configuration: a strict JSON schema, command-line overrides and
//! per-command defaults.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use specaug::analysis::ProfileMode;
use specaug::linalg::Spectrum;
use specaug::ops::AugmentSpec;

use crate::error::CliError;

/// Version of the config and sidecar layout.
pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_PROFILE_TRIALS: u64 = 100_000;
pub const DEFAULT_VERIFY_TRIALS: u64 = 1_000_000;
pub const DEFAULT_TAIL: [f64; 4] = [1.5, 0.9, 0.2, 0.01];
pub const DEFAULT_VERIFY_K: [u32; 4] = [1, 2, 4, 8];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Augment,
    Profile,
    Verify,
    Align,
    Bound,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Augment => "augment",
            CommandKind::Profile => "profile",
            CommandKind::Verify => "verify",
            CommandKind::Align => "align",
            CommandKind::Bound => "bound",
        }
    }
}

/// Pass/fail thresholds of the `verify` suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// `|λ_analytic - λ_quadrature|`.
    pub lambda_quadrature: f64,
    /// `|ω²_analytic - ω²_quadrature|`.
    pub variance_quadrature: f64,
    /// Standard errors allowed between `λ_analytic` and Monte Carlo.
    pub monte_carlo_se: f64,
    /// Relative conservation residual of SFA.
    pub conservation: f64,
    /// `‖H̃ r̂‖ / ‖H‖_F`.
    pub annihilation: f64,
    /// Newton-Schulz residuals against the eigendecomposition.
    pub newton_schulz: f64,
    /// Relative gradient error against central differences.
    pub gradient: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            lambda_quadrature: 1e-8,
            variance_quadrature: 1e-7,
            monte_carlo_se: 4.0,
            conservation: 1e-10,
            annihilation: 1e-12,
            newton_schulz: 1e-5,
            gradient: 1e-5,
        }
    }
}

/// Case counts of the `verify` suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySettings {
    pub spectra: usize,
    pub conservation_cases: usize,
    pub newton_schulz_cases: usize,
    pub gradient_cases: usize,
    pub perturbation_cases: usize,
    /// Flip the sign of the projector in the `k = 1` closed form.
    pub inject_fault: bool,
}

impl Default for VerifySettings {
    fn default() -> Self {
        VerifySettings {
            spectra: 50,
            conservation_cases: 10_000,
            newton_schulz_cases: 200,
            gradient_cases: 100,
            perturbation_cases: 200,
            inject_fault: false,
        }
    }
}

/// Inputs of the `bound` command. `n` and `gap` go together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundParams {
    pub eps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alignment: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
}

/// Everything that determines a run. After [`RunConfig::resolve`] every
/// field the command reads is filled in, so a persisted copy replays the
/// run exactly.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<CommandKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_b: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<AugmentSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile_mode: Option<ProfileMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<BoundParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifySettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

/// Flags shared by every command. Each one overrides the matching config
/// file entry.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// JSON config file; flags take precedence over its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// 64-bit seed of the random streams.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Input matrix CSV.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Second input matrix CSV (`align`).
    #[arg(long)]
    pub input_b: Option<PathBuf>,
    /// Output file; the run record is written next to it.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Operator name (`sfa`, `precondition`) or a JSON operator object.
    #[arg(long)]
    pub op: Option<String>,
    /// Power-iteration steps, comma separated where a set is accepted.
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<u32>>,
    /// Monte Carlo trials.
    #[arg(long)]
    pub trials: Option<u64>,
    /// Leading singular values: `a,b,c` or `start:stop:step`.
    #[arg(long)]
    pub grid: Option<String>,
    /// Fixed trailing singular values, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub tail: Option<Vec<f64>>,
    /// Profile sampling mode: `matrix` or `synthetic`.
    #[arg(long)]
    pub profile_mode: Option<String>,
    /// Temperature of the alignment metrics.
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Radius ε of the generalization and noise bounds.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Alignment `L_a` for the generalization bound.
    #[arg(long)]
    pub alignment: Option<f64>,
    /// Sample count `n` for the noise bound.
    #[arg(long)]
    pub n: Option<u64>,
    /// Singular gap `Δσ₁₂` for the noise bound.
    #[arg(long)]
    pub gap: Option<f64>,
    /// Run `verify` with the sign of the `k = 1` projector flipped.
    #[arg(long)]
    pub inject_fault: bool,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }

    /// The config file named by `--config` (if any) with every given flag
    /// applied on top.
    pub fn from_args(args: &RunArgs) -> Result<RunConfig, CliError> {
        let mut cfg = match &args.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default_versioned(),
        };
        cfg.apply(args)?;
        Ok(cfg)
    }

    pub fn default_versioned() -> RunConfig {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            ..RunConfig::default()
        }
    }

    pub fn apply(&mut self, args: &RunArgs) -> Result<(), CliError> {
        if let Some(seed) = args.seed {
            self.seed = Some(seed);
        }
        if let Some(p) = &args.input {
            self.input = Some(p.clone());
        }
        if let Some(p) = &args.input_b {
            self.input_b = Some(p.clone());
        }
        if let Some(p) = &args.output {
            self.output = Some(p.clone());
        }
        if let Some(op) = &args.op {
            self.operator = Some(parse_operator(op)?);
        }
        if let Some(k) = &args.k {
            self.k = Some(k.clone());
        }
        if let Some(t) = args.trials {
            self.trials = Some(t);
        }
        if let Some(g) = &args.grid {
            self.grid = Some(parse_grid(g)?);
        }
        if let Some(t) = &args.tail {
            self.tail = Some(t.clone());
        }
        if let Some(m) = &args.profile_mode {
            let quoted = serde_json::Value::String(m.clone());
            self.profile_mode = Some(
                serde_json::from_value(quoted)
                    .map_err(|_| CliError::Validation(format!("unknown profile mode {m:?}")))?,
            );
        }
        if let Some(t) = args.temperature {
            self.temperature = Some(t);
        }
        if args.eps.is_some() || args.alignment.is_some() || args.n.is_some() || args.gap.is_some() {
            let mut b = self.bound.clone().unwrap_or(BoundParams {
                eps: f64::NAN,
                alignment: None,
                n: None,
                gap: None,
            });
            if let Some(e) = args.eps {
                b.eps = e;
            }
            if args.alignment.is_some() {
                b.alignment = args.alignment;
            }
            if args.n.is_some() {
                b.n = args.n;
            }
            if args.gap.is_some() {
                b.gap = args.gap;
            }
            self.bound = Some(b);
        }
        if args.inject_fault {
            self.verify.get_or_insert_with(VerifySettings::default).inject_fault = true;
        }
        Ok(())
    }

    /// Check the config against `command` and fill in its defaults.
    pub fn resolve(mut self, command: CommandKind) -> Result<RunConfig, CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return invalid(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if let Some(c) = self.command {
            if c != command {
                return invalid(format!("config is for `{}`, not `{}`", c.name(), command.name()));
            }
        }
        self.command = Some(command);
        self.seed.get_or_insert(DEFAULT_SEED);
        match command {
            CommandKind::Augment => self.resolve_augment()?,
            CommandKind::Profile => self.resolve_profile()?,
            CommandKind::Verify => self.resolve_verify()?,
            CommandKind::Align => self.resolve_align()?,
            CommandKind::Bound => self.resolve_bound()?,
        }
        Ok(self)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    fn resolve_augment(&mut self) -> Result<(), CliError> {
        require(&self.input, "augment needs --input")?;
        require(&self.output, "augment needs --output")?;
        let mut op = self.operator.take().unwrap_or_default();
        if let Some(ks) = self.k.take() {
            match (&mut op, ks.as_slice()) {
                (AugmentSpec::Sfa { k }, [only]) => *k = *only,
                (AugmentSpec::Sfa { .. }, _) => return invalid("augment takes a single --k value".into()),
                (other, _) => return invalid(format!("--k does not apply to operator {}", other.name())),
            }
        }
        op.validate()?;
        self.operator = Some(op);
        Ok(())
    }

    fn resolve_profile(&mut self) -> Result<(), CliError> {
        require(&self.output, "profile needs --output")?;
        let grid = self.grid.get_or_insert_with(default_grid);
        if grid.is_empty() {
            return invalid("grid is empty".into());
        }
        if let Some(s) = grid.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
            return invalid(format!("grid values must be finite and non-negative, got {s}"));
        }
        let tail = self.tail.get_or_insert_with(|| DEFAULT_TAIL.to_vec());
        Spectrum::new(tail.clone())?;
        match self.operator.take() {
            None => {}
            Some(AugmentSpec::Sfa { k }) => {
                self.k.get_or_insert_with(|| vec![k]);
            }
            Some(op @ AugmentSpec::MaxExpF { noise_scale, .. }) => {
                op.validate()?;
                if noise_scale != 0.0 {
                    return invalid("the max_exp_f profile is noise-free; noise_scale must be 0".into());
                }
                if self.k.is_some() || self.trials.is_some() || self.profile_mode.is_some() {
                    return invalid("--k, --trials and --profile-mode do not apply to the max_exp_f profile".into());
                }
                self.operator = Some(op);
                return Ok(());
            }
            Some(other) => return invalid(format!("profile supports sfa and max_exp_f, not {}", other.name())),
        }
        let ks = self.k.get_or_insert_with(|| vec![1]);
        check_ks(ks)?;
        let mut seen = ks.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != ks.len() {
            return invalid("repeated k values".into());
        }
        check_trials(*self.trials.get_or_insert(DEFAULT_PROFILE_TRIALS))?;
        self.profile_mode.get_or_insert(ProfileMode::default());
        Ok(())
    }

    fn resolve_verify(&mut self) -> Result<(), CliError> {
        check_ks(self.k.get_or_insert_with(|| DEFAULT_VERIFY_K.to_vec()))?;
        check_trials(*self.trials.get_or_insert(DEFAULT_VERIFY_TRIALS))?;
        self.verify.get_or_insert_with(VerifySettings::default);
        let tol = self.tolerances.get_or_insert_with(Tolerances::default);
        let all = [
            tol.lambda_quadrature,
            tol.variance_quadrature,
            tol.monte_carlo_se,
            tol.conservation,
            tol.annihilation,
            tol.newton_schulz,
            tol.gradient,
        ];
        if all.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return invalid("tolerances must be positive and finite".into());
        }
        Ok(())
    }

    fn resolve_align(&mut self) -> Result<(), CliError> {
        require(&self.input, "align needs --input")?;
        require(&self.input_b, "align needs --input-b")?;
        let t = *self.temperature.get_or_insert(1.0);
        if !(t.is_finite() && t > 0.0) {
            return invalid(format!("temperature must be positive, got {t}"));
        }
        let ks = self.k.get_or_insert_with(|| vec![1]);
        if ks.len() != 1 {
            return invalid("align takes a single --k value".into());
        }
        check_ks(ks)
    }

    fn resolve_bound(&mut self) -> Result<(), CliError> {
        let b = self
            .bound
            .as_ref()
            .ok_or_else(|| CliError::Validation("bound needs --eps".into()))?;
        if !(b.eps.is_finite() && b.eps > 0.0) {
            return invalid(format!("eps must be positive, got {}", b.eps));
        }
        if b.n.is_some() != b.gap.is_some() {
            return invalid("--n and --gap must be given together".into());
        }
        if b.alignment.is_none() && b.n.is_none() {
            return invalid("bound needs --alignment, or --n with --gap".into());
        }
        Ok(())
    }
}

fn invalid<T>(msg: String) -> Result<T, CliError> {
    Err(CliError::Validation(msg))
}

fn require<T>(value: &Option<T>, msg: &str) -> Result<(), CliError> {
    match value {
        Some(_) => Ok(()),
        None => invalid(msg.into()),
    }
}

fn check_ks(ks: &[u32]) -> Result<(), CliError> {
    if ks.is_empty() || ks.contains(&0) {
        return invalid(format!("k values must be at least 1, got {ks:?}"));
    }
    Ok(())
}

fn check_trials(trials: u64) -> Result<(), CliError> {
    if trials == 0 {
        return invalid("trials must be at least 1".into());
    }
    Ok(())
}

/// `0, 0.1, …, 3`.
pub fn default_grid() -> Vec<f64> {
    linspace(0.0, 3.0, 30)
}

/// `steps + 1` points from `start` to `stop`, each computed directly so
/// the endpoints are exact.
fn linspace(start: f64, stop: f64, steps: usize) -> Vec<f64> {
    (0..=steps)
        .map(|j| start + (stop - start) * j as f64 / steps as f64)
        .collect()
}

/// `a,b,c` or `start:stop:step`.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let number = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| CliError::Validation(format!("grid: invalid number {s:?}")))
    };
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [a, b, step] = parts.as_slice() else {
            return invalid(format!("grid range must be start:stop:step, got {text:?}"));
        };
        let (a, b, step) = (number(a)?, number(b)?, number(step)?);
        if !(step > 0.0 && b >= a && a.is_finite() && b.is_finite()) {
            return invalid(format!("grid range {text:?} is empty or reversed"));
        }
        let steps = ((b - a) / step).round();
        if (a + steps * step - b).abs() > 1e-9 * step.max(b.abs()) {
            return invalid(format!("grid step does not divide {a}..{b}"));
        }
        return Ok(linspace(a, b, steps as usize));
    }
    text.split(',').map(number).collect()
}

/// A bare operator name or a JSON operator object.
pub fn parse_operator(text: &str) -> Result<AugmentSpec, CliError> {
    let trimmed = text.trim();
    let json = if trimmed.starts_with('{') {
        trimmed.to_string()
    } else {
        serde_json::json!({ "op": trimmed }).to_string()
    };
    serde_json::from_str(&json).map_err(|e| CliError::Validation(format!("operator {trimmed:?}: {e}")))
}
