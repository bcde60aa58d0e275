//! Command implementations. Each command computes its outputs in memory;
//! [`execute`] then writes them together with the sidecar.

use std::path::{Path, PathBuf};

use specaug::analysis::{
    alignment_report, generalization_bound, info_nce, maxexp_profile, noise_bound, push_forward_profile,
    sfa_alignment_terms,
};
use specaug::linalg::{format_f64, format_matrix_csv, read_matrix_csv, FeatureMap, RngStream, Spectrum};
use specaug::ops::{augment, AugmentSpec};

use crate::config::{CommandKind, RunConfig};
use crate::error::{CliError, ExitStatus};
use crate::sidecar::{sidecar_path, RunRecord, Sidecar};
use crate::verify::run_verify;

pub const ALIGN_CSV_HEADER: &str =
    "trace_alignment,diagonal_form,cross_term_gap,frobenius_gap,info_nce,sfa_k,sfa_diagonal_form,temperature";
pub const BOUND_CSV_HEADER: &str = "alignment,eps,generalization_bound,n,gap,noise_bound";

/// What a finished command reports back to the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub status: ExitStatus,
    pub stdout: String,
    /// Files written, sidecar last.
    pub written: Vec<PathBuf>,
}

struct Produced {
    files: Vec<(PathBuf, String)>,
    stdout: String,
    record: RunRecord,
}

/// Resolve `config` for `command`, run it and write its outputs.
pub fn execute(command: CommandKind, config: RunConfig) -> Result<Outcome, CliError> {
    let cfg = config.resolve(command)?;
    let produced = match command {
        CommandKind::Augment => cmd_augment(&cfg)?,
        CommandKind::Profile => cmd_profile(&cfg)?,
        CommandKind::Verify => cmd_verify(&cfg)?,
        CommandKind::Align => cmd_align(&cfg)?,
        CommandKind::Bound => cmd_bound(&cfg)?,
    };
    let status = match produced.record.passed {
        Some(false) => ExitStatus::VerifyFailed,
        _ => ExitStatus::Success,
    };
    let mut written = Vec::new();
    for (path, text) in &produced.files {
        write_file(path, text)?;
        written.push(path.clone());
    }
    if let Some(output) = &cfg.output {
        let sidecar = Sidecar::new(cfg.clone(), written.clone(), produced.record);
        let path = sidecar_path(output);
        write_file(&path, &sidecar.to_json())?;
        written.push(path);
    }
    Ok(Outcome {
        status,
        stdout: produced.stdout,
        written,
    })
}

/// Re-run the configuration stored in a sidecar, optionally writing to a
/// different output path.
pub fn replay(sidecar: &Path, output: Option<PathBuf>) -> Result<Outcome, CliError> {
    let record = Sidecar::load(sidecar)?;
    let mut cfg = record.config;
    let command = cfg
        .command
        .ok_or_else(|| CliError::Validation(format!("{}: config has no command", sidecar.display())))?;
    if output.is_some() {
        cfg.output = output;
    }
    execute(command, cfg)
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn read_matrix(path: &Path) -> Result<FeatureMap, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    read_matrix_csv(std::io::BufReader::new(file)).map_err(|e| CliError::matrix_file(path, e))
}

fn required<'a, T>(value: &'a Option<T>, what: &str) -> &'a T {
    value.as_ref().unwrap_or_else(|| panic!("resolve guarantees {what}"))
}

fn cmd_augment(cfg: &RunConfig) -> Result<Produced, CliError> {
    let input = required(&cfg.input, "input");
    let output = required(&cfg.output, "output");
    let spec = required(&cfg.operator, "operator");
    let h = read_matrix(input)?;
    let out = augment(&h, spec, RngStream::new(cfg.seed(), 0))?;
    let mut stdout = format!(
        "{}: {}x{} via {}, {} draws",
        output.display(),
        h.rows(),
        h.cols(),
        spec.name(),
        out.draws
    );
    if let Some(r) = out.conservation_residual {
        stdout.push_str(&format!(", conservation residual {r:e}"));
    }
    if let Some(r) = out.ns_residual {
        stdout.push_str(&format!(", Newton-Schulz residual {r:e}"));
    }
    stdout.push('\n');
    Ok(Produced {
        files: vec![(output.clone(), format_matrix_csv(&out.augmented))],
        stdout,
        record: RunRecord {
            seed: cfg.seed(),
            operator: Some(spec.name().to_string()),
            draws: Some(out.draws),
            conservation_residual: out.conservation_residual,
            ns_residual: out.ns_residual,
            notes: out.notes,
            ..RunRecord::default()
        },
    })
}

/// `out.csv` with `k = 8` → `out_k8.csv`.
pub fn profile_path(output: &Path, k: u32) -> PathBuf {
    let stem = output
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ext = output
        .extension()
        .map(|e| e.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into());
    output.with_file_name(format!("{stem}_k{k}.{ext}"))
}

fn cmd_profile(cfg: &RunConfig) -> Result<Produced, CliError> {
    let output = required(&cfg.output, "output");
    let tail = Spectrum::new(required(&cfg.tail, "tail").clone())?;
    let grid = required(&cfg.grid, "grid");
    if let Some(AugmentSpec::MaxExpF { eta, .. }) = cfg.operator {
        let profile = maxexp_profile(&tail, grid, eta)?;
        return Ok(Produced {
            files: vec![(output.clone(), profile.to_csv())],
            stdout: format!(
                "{}: {} grid points, max_exp_f exponent {}\n",
                output.display(),
                grid.len(),
                profile.exponent
            ),
            record: RunRecord {
                seed: cfg.seed(),
                operator: Some("max_exp_f".into()),
                ..RunRecord::default()
            },
        });
    }
    let trials = *required(&cfg.trials, "trials");
    let mode = *required(&cfg.profile_mode, "profile_mode");
    let mut files = Vec::new();
    let mut stdout = String::new();
    for &k in required(&cfg.k, "k") {
        let stream = RngStream::new(cfg.seed(), u64::from(k));
        let profile = push_forward_profile(&tail, grid, k, trials, stream, mode)?;
        let path = profile_path(output, k);
        stdout.push_str(&format!("{}: {} grid points, k = {k}\n", path.display(), grid.len()));
        files.push((path, profile.to_csv()));
    }
    Ok(Produced {
        files,
        stdout,
        record: RunRecord {
            seed: cfg.seed(),
            operator: Some("sfa".into()),
            ..RunRecord::default()
        },
    })
}

fn cmd_verify(cfg: &RunConfig) -> Result<Produced, CliError> {
    let report = run_verify(cfg)?;
    let text = report.to_text();
    let files = cfg.output.iter().map(|o| (o.clone(), text.clone())).collect();
    let mut notes = Vec::new();
    if let Some(first) = report.rows.iter().find(|r| !r.status.passed()) {
        notes.push(format!("first failure: {}", first.name));
    }
    Ok(Produced {
        files,
        stdout: text,
        record: RunRecord {
            seed: cfg.seed(),
            passed: Some(report.passed()),
            notes,
            ..RunRecord::default()
        },
    })
}

fn cmd_align(cfg: &RunConfig) -> Result<Produced, CliError> {
    let a = read_matrix(required(&cfg.input, "input"))?;
    let b = read_matrix(required(&cfg.input_b, "input_b"))?;
    let tau = *required(&cfg.temperature, "temperature");
    let k = required(&cfg.k, "k")[0];
    let report = alignment_report(&a, &b, tau)?;
    let loss = info_nce(&a, &b, tau)?;
    let sfa: f64 = sfa_alignment_terms(&a, &b, k, tau)?.iter().sum();
    let row = [
        format_f64(report.trace_alignment),
        format_f64(report.diagonal_form),
        format_f64(report.cross_term_gap()),
        format_f64(report.frobenius_gap),
        format_f64(loss),
        k.to_string(),
        format_f64(sfa),
        format_f64(tau),
    ];
    let text = format!("{ALIGN_CSV_HEADER}\n{}\n", row.join(","));
    Ok(Produced {
        files: cfg.output.iter().map(|o| (o.clone(), text.clone())).collect(),
        stdout: text,
        record: RunRecord {
            seed: cfg.seed(),
            ..RunRecord::default()
        },
    })
}

fn cmd_bound(cfg: &RunConfig) -> Result<Produced, CliError> {
    let b = required(&cfg.bound, "bound");
    let opt = |v: Option<f64>| v.map(format_f64).unwrap_or_default();
    let generalization = b.alignment.map(|l| generalization_bound(l, b.eps)).transpose()?;
    let noise = match (b.n, b.gap) {
        (Some(n), Some(gap)) => Some(noise_bound(b.eps, n, gap)?),
        _ => None,
    };
    let row = [
        opt(b.alignment),
        format_f64(b.eps),
        opt(generalization),
        b.n.map(|n| n.to_string()).unwrap_or_default(),
        opt(b.gap),
        opt(noise),
    ];
    let text = format!("{BOUND_CSV_HEADER}\n{}\n", row.join(","));
    Ok(Produced {
        files: cfg.output.iter().map(|o| (o.clone(), text.clone())).collect(),
        stdout: text,
        record: RunRecord {
            seed: cfg.seed(),
            ..RunRecord::default()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_paths() {
        assert_eq!(profile_path(Path::new("d/fig.csv"), 8), PathBuf::from("d/fig_k8.csv"));
        assert_eq!(profile_path(Path::new("fig"), 1), PathBuf::from("fig_k1.csv"));
    }
}
