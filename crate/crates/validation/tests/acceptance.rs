//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.
//!
//! Every criterion runs at its full size and tolerance. Reference values come
//! from independent oracles: mpmath (frozen in `fixtures/oracle.json`),
//! nalgebra for decompositions, and direct re-evaluation for closed forms.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use serde_json::Value;
use specaug::analysis::{
    analytic_params, lambda_analytic, lambda_monte_carlo, lambda_quadrature, noise_bound, phi_analytic,
    phi_upper_bound, push_forward_profile, subspace_perturbation_check, variance_analytic, variance_quadrature,
    ProfileMode, PushForwardProfile, Verdict,
};
use specaug::linalg::{dot, format_matrix_csv, norm2, orthonormalize, Matrix, RngStream, Spectrum};
use specaug::ops::{augment, newton_schulz, sfa_forward, AugmentSpec, PowerNormVariant, SvdMode};
use specaug_cli::config::{default_grid, DEFAULT_PROFILE_TRIALS, DEFAULT_TAIL};
use specaug_cli::verify::{
    gradient_error, perturbation_case, spd_case, sweep_indices, sweep_spectrum, SWEEP_K, VERIFY_NS_CONDITION,
    VERIFY_NS_ITERS,
};
use specaug_cli::{execute, replay, CommandKind, RunConfig};

const SEED: u64 = 0;
const PROFILE_TOL: f64 = 0.02;
const PROFILE_BUDGET: Duration = Duration::from_secs(120);
const CONSERVATION_PAIRS: usize = 10_000;
const CONSERVATION_KS: [u32; 4] = [1, 2, 4, 8];
const CONSERVATION_BUDGET: Duration = Duration::from_secs(60);
const RANK_ONE_CASES: usize = 1_000;
const SWEEP_SPECTRA: usize = 50;
const SWEEP_TRIALS: u64 = 1_000_000;
const SWEEP_BUDGET: Duration = Duration::from_secs(600);
const SE_LIMIT: f64 = 4.0;
const NS_CASES: usize = 200;
const NS_TOL: f64 = 1e-5;
const GRADIENT_CASES: usize = 100;
const GRADIENT_TOL: f64 = 1e-5;
const PERTURBATION_CASES: usize = 200;
const SHAPE_CASES: usize = 20;

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: String) -> Outcome {
        Outcome { passed, detail }
    }
}

type Check = (u32, &'static str, fn() -> Outcome);

/// Shared between the first two criteria.
struct Profiles {
    k1: PushForwardProfile,
    k8: PushForwardProfile,
    k1_elapsed: Duration,
}

fn oracle() -> Value {
    serde_json::from_str(include_str!("fixtures/oracle.json")).expect("oracle fixture is valid JSON")
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

fn oracle_sigma(m: &Matrix) -> Vec<f64> {
    let mut s: Vec<f64> = to_na(m).singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn profile(k: u32) -> (PushForwardProfile, Duration) {
    let tail = Spectrum::new(DEFAULT_TAIL.to_vec()).unwrap();
    let start = Instant::now();
    let p = push_forward_profile(
        &tail,
        &default_grid(),
        k,
        DEFAULT_PROFILE_TRIALS,
        RngStream::new(SEED, u64::from(k)),
        ProfileMode::Matrix,
    )
    .unwrap();
    (p, start.elapsed())
}

fn profiles() -> Profiles {
    let (k1, k1_elapsed) = profile(1);
    let (k8, _) = profile(8);
    Profiles { k1, k8, k1_elapsed }
}

fn criterion_1(p: &Profiles) -> Outcome {
    let prof = &p.k1;
    let (mut worst, mut at) = (0.0, 0.0);
    for (j, s) in prof.sigma_grid.iter().enumerate() {
        let gap = (prof.mean[j] - prof.analytic_mean[j]).abs();
        if gap > worst {
            (worst, at) = (gap, *s);
        }
    }
    let j2 = prof.index_of(2.0).expect("grid contains 2");
    let band = |v: f64| (0.7..=0.9).contains(&v);
    let oracle = oracle();
    let phi = floats(&oracle["fig3"]["profiles"]["1"]["phi"]);
    let mpmath_err = max_abs_diff(&prof.analytic_mean, &phi);
    let passed = worst <= PROFILE_TOL
        && band(prof.mean[j2])
        && band(prof.analytic_mean[j2])
        && p.k1_elapsed <= PROFILE_BUDGET
        && mpmath_err <= 1e-9;
    Outcome::new(
        passed,
        format!(
            "max |emp - analytic| {worst:.4} at sigma1 = {at:.1} (limit {PROFILE_TOL}); at sigma1 = 2 emp {:.4}, analytic {:.4}; analytic vs mpmath {mpmath_err:.1e}; {:.1} s",
            prof.mean[j2],
            prof.analytic_mean[j2],
            p.k1_elapsed.as_secs_f64()
        ),
    )
}

fn criterion_2(p: &Profiles) -> Outcome {
    let j = p.k1.index_of(2.0).expect("grid contains 2");
    let mean_drop = p.k1.mean[j] - p.k8.mean[j];
    let mean_se = p.k1.mean_std_error[j].hypot(p.k8.mean_std_error[j]);
    let std_drop = p.k1.std[j] - p.k8.std[j];
    let std_se = p.k1.std_std_error[j].hypot(p.k8.std_std_error[j]);
    let passed = mean_drop > SE_LIMIT * mean_se && std_drop > SE_LIMIT * std_se;
    Outcome::new(
        passed,
        format!(
            "mean {:.4} -> {:.4} ({:.1} SE), std {:.4} -> {:.4} ({:.1} SE)",
            p.k1.mean[j],
            p.k8.mean[j],
            mean_drop / mean_se,
            p.k1.std[j],
            p.k8.std[j],
            std_drop / std_se
        ),
    )
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let base = RngStream::new(SEED, 3);
    let (mut worst_cons, mut worst_annihilate) = (0.0f64, 0.0f64);
    for c in 0..CONSERVATION_PAIRS {
        let stream = base.substream(c as u64);
        let mut g = stream.substream(0).sampler();
        let n = 1 + (g.normal().abs() * 1e6) as usize % 128;
        let d = 1 + (g.normal().abs() * 1e6) as usize % 32;
        let h = g.matrix(n, d).scale(10f64.powf(g.normal()));
        let total = h.frobenius_norm().powi(2);
        for (slot, k) in CONSERVATION_KS.into_iter().enumerate() {
            let out = sfa_forward(&h, k, stream.substream(1 + slot as u64)).unwrap();
            let r_hat = out.direction();
            let hr = h.matvec(&r_hat).unwrap();
            let kept = out.augmented.frobenius_norm().powi(2);
            worst_cons = worst_cons.max((kept + dot(&hr, &hr) - total).abs() / total);
            worst_annihilate = worst_annihilate.max(norm2(&out.augmented.matvec(&r_hat).unwrap()) / total.sqrt());
        }
    }
    let elapsed = start.elapsed();
    let passed = worst_cons <= 1e-10 && worst_annihilate <= 1e-12 && elapsed <= CONSERVATION_BUDGET;
    Outcome::new(
        passed,
        format!(
            "{CONSERVATION_PAIRS} pairs x k in {CONSERVATION_KS:?}: worst energy residual {worst_cons:.1e}, worst |H~ r^|/|H| {worst_annihilate:.1e}; {:.1} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_4() -> Outcome {
    let base = RngStream::new(SEED, 4);
    let mut worst = 0.0f64;
    for c in 0..RANK_ONE_CASES {
        let mut g = base.substream(c as u64).sampler();
        let n = 1 + c % 64;
        let d = 1 + (c * 7) % 32;
        let u = g.vector(n);
        let v = g.vector(d);
        let h = Matrix::from_fn(n, d, |i, j| u[i] * v[j]);
        let out = sfa_forward(&h, 1, base.substream(c as u64).substream(1)).unwrap();
        worst = worst.max(out.augmented.frobenius_norm() / h.frobenius_norm());
    }
    Outcome::new(
        worst <= 1e-12,
        format!("{RANK_ONE_CASES} inputs: worst |H~|/|H| {worst:.1e}"),
    )
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mc_base = RngStream::new(SEED, 5);
    let (mut lam_err, mut var_err, mut worst_se) = (0.0f64, 0.0f64, 0.0f64);
    let (mut beyond, mut cases) = (0usize, 0usize);
    for j in 0..SWEEP_SPECTRA {
        let sigma = sweep_spectrum(SEED, j);
        for k in SWEEP_K {
            for i in sweep_indices(sigma.len()) {
                let p = analytic_params(&sigma, i, k).unwrap();
                let lam = lambda_analytic(&p).unwrap();
                lam_err = lam_err.max((lam - lambda_quadrature(&p).unwrap()).abs());
                var_err = var_err.max((variance_analytic(&p).unwrap() - variance_quadrature(&p).unwrap()).abs());
                let est = lambda_monte_carlo(&sigma, i, k, SWEEP_TRIALS, mc_base.substream(cases as u64)).unwrap();
                let se = (lam - est.mean).abs() / est.std_error;
                worst_se = worst_se.max(se);
                if se.is_nan() || se > SE_LIMIT {
                    beyond += 1;
                }
                cases += 1;
            }
        }
    }
    let mut mpmath_err = 0.0f64;
    for case in oracle()["spectra"].as_array().unwrap() {
        let sigma = floats(&case["sigma"]);
        let i = case["i"].as_u64().unwrap() as usize;
        let k = case["k"].as_u64().unwrap() as u32;
        let p = analytic_params(&sigma, i, k).unwrap();
        mpmath_err = mpmath_err.max((lambda_analytic(&p).unwrap() - case["lambda"].as_f64().unwrap()).abs());
        mpmath_err = mpmath_err.max((variance_analytic(&p).unwrap() - case["variance"].as_f64().unwrap()).abs());
    }
    let elapsed = start.elapsed();
    let passed = lam_err <= 1e-8 && var_err <= 1e-7 && beyond == 0 && mpmath_err <= 1e-10 && elapsed <= SWEEP_BUDGET;
    Outcome::new(
        passed,
        format!(
            "{cases} cases: lambda vs quadrature {lam_err:.1e}, variance vs quadrature {var_err:.1e}, vs mpmath {mpmath_err:.1e}; Monte Carlo {beyond}/{cases} beyond {SE_LIMIT} SE (worst {worst_se:.3e} SE); {:.1} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut violations = 0;
    let mut checked = 0;
    for j in 0..SWEEP_SPECTRA {
        let sigma = sweep_spectrum(SEED, j);
        for k in SWEEP_K {
            let lambdas: Vec<f64> = (0..sigma.len())
                .map(|i| lambda_analytic(&analytic_params(&sigma, i, k).unwrap()).unwrap())
                .collect();
            violations += lambdas.windows(2).filter(|w| w[1] > w[0]).count();
            checked += lambdas.len() - 1;
        }
    }
    Outcome::new(
        violations == 0,
        format!("{violations} increases over {checked} adjacent pairs"),
    )
}

fn criterion_7() -> Outcome {
    let tail = DEFAULT_TAIL.to_vec();
    let mut worst = f64::NEG_INFINITY;
    let mut points = 0;
    for k in CONSERVATION_KS {
        for s1 in default_grid() {
            let mut sigma = vec![s1];
            sigma.extend(&tail);
            let (phi, _) = phi_analytic(&sigma, 0, k).unwrap();
            worst = worst.max(phi - phi_upper_bound(&sigma, 0).unwrap());
            points += 1;
        }
    }
    Outcome::new(
        worst <= 1e-9,
        format!("{points} points: max phi - min(sigma1, max tail) = {worst:.3e}"),
    )
}

fn criterion_8() -> Outcome {
    let base = RngStream::new(SEED, 8);
    let (mut root, mut inverse, mut vs_oracle) = (0.0f64, 0.0f64, 0.0f64);
    for c in 0..NS_CASES {
        let dim = 1 + (c * 11) % 64;
        let m = spd_case(base.substream(c as u64), dim, VERIFY_NS_CONDITION).unwrap();
        let ns = newton_schulz(&m, VERIFY_NS_ITERS).unwrap();
        let aa = ns.sqrt.matmul(&ns.sqrt).unwrap();
        root = root.max(aa.sub(&m).unwrap().frobenius_norm() / m.frobenius_norm());
        let ab = ns.sqrt.matmul(&ns.inv_sqrt).unwrap();
        inverse = inverse.max(ab.sub(&Matrix::identity(dim)).unwrap().frobenius_norm());
        let eig = to_na(&m).symmetric_eigen();
        let exact =
            &eig.eigenvectors * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt)) * eig.eigenvectors.transpose();
        vs_oracle = vs_oracle.max((to_na(&ns.sqrt) - &exact).norm() / exact.norm());
    }
    let passed = root <= NS_TOL && inverse <= NS_TOL && vs_oracle <= NS_TOL;
    Outcome::new(
        passed,
        format!(
            "{NS_CASES} matrices, {VERIFY_NS_ITERS} steps: |AA-M|/|M| {root:.1e}, |AB-I| {inverse:.1e}, vs eigendecomposition {vs_oracle:.1e}"
        ),
    )
}

fn criterion_9() -> Outcome {
    let base = RngStream::new(SEED, 9);
    let mut worst = 0.0f64;
    for c in 0..GRADIENT_CASES {
        let mut g = base.substream(c as u64).sampler();
        let (n, d) = (2 + c % 12, 2 + (c * 5) % 8);
        let h = g.matrix(n, d);
        let r0 = g.vector(d);
        let grad_out = g.matrix(n, d);
        worst = worst.max(gradient_error(&h, &r0, &grad_out).unwrap());
    }
    Outcome::new(
        worst <= GRADIENT_TOL,
        format!("{GRADIENT_CASES} cases: worst relative error {worst:.1e}"),
    )
}

fn criterion_10() -> Outcome {
    let base = RngStream::new(SEED, 10);
    let (mut held, mut outside, mut worst_ratio) = (0, 0, 0.0f64);
    for c in 0..PERTURBATION_CASES {
        let (h, e) = perturbation_case(base.substream(c as u64), c).unwrap();
        let check = subspace_perturbation_check(&h, &e).unwrap();
        match check.verdict {
            Verdict::Holds => {
                held += 1;
                if check.rhs > 0.0 {
                    worst_ratio = worst_ratio.max(check.lhs / check.rhs);
                }
            }
            Verdict::NotApplicable => outside += 1,
            Verdict::Violated => {}
        }
    }
    let mut g = base.substream(u64::MAX).sampler();
    let mut mismatches = 0;
    for _ in 0..PERTURBATION_CASES {
        let eps = g.normal().exp();
        let n = 1 + (g.normal().abs() * 1e4) as u64;
        let gap = g.normal().exp();
        let direct = 2.0 * eps * gap / (n as f64 * PI + 2.0 * eps);
        if noise_bound(eps, n, gap).unwrap().to_bits() != direct.to_bits() {
            mismatches += 1;
        }
    }
    let passed = held == PERTURBATION_CASES && mismatches == 0;
    Outcome::new(
        passed,
        format!(
            "{held}/{PERTURBATION_CASES} pairs hold ({outside} outside the validity region), worst lhs/rhs {worst_ratio:.3}; noise bound mismatches {mismatches}"
        ),
    )
}

fn with_spectrum(sigma: &[f64], n: usize, stream: RngStream) -> Matrix {
    let mut g = stream.sampler();
    let u = orthonormalize(&g.matrix(n, sigma.len())).unwrap();
    let v = orthonormalize(&g.matrix(sigma.len(), sigma.len())).unwrap();
    u.matmul(&Matrix::from_diag(sigma))
        .unwrap()
        .matmul(&v.transpose())
        .unwrap()
}

fn criterion_11() -> Outcome {
    let base = RngStream::new(SEED, 11);
    let (mut maxexp, mut grassman, mut power) = (0.0f64, 0.0f64, 0.0f64);
    for c in 0..SHAPE_CASES {
        let stream = base.substream(c as u64);
        let mut g = stream.substream(0).sampler();
        let d = 2 + c % 7;
        let n = d + c % 5;
        let mut sigma: Vec<f64> = (0..d).map(|_| g.normal().exp()).collect();
        sigma.sort_by(|a, b| b.total_cmp(a));
        let h = with_spectrum(&sigma, n, stream.substream(1));
        let total: f64 = sigma.iter().sum();

        let eta = (1 + c % 6) as f64;
        let spec = AugmentSpec::MaxExpF {
            eta,
            noise_scale: 0.0,
            ns_iters: VERIFY_NS_ITERS,
        };
        let out = augment(&h, &spec, stream.substream(2)).unwrap();
        let mut want: Vec<f64> = sigma.iter().map(|s| 1.0 - (1.0 - s / total).powf(eta)).collect();
        want.sort_by(|a, b| b.total_cmp(a));
        maxexp = maxexp.max(max_abs_diff(&oracle_sigma(&out.augmented), &want));

        let spec = AugmentSpec::Grassman {
            kappa: d,
            noise_scale: 0.0,
            svd_mode: SvdMode::Exact,
            ns_iters: VERIFY_NS_ITERS,
        };
        let out = augment(&h, &spec, stream.substream(3)).unwrap();
        grassman = grassman.max(max_abs_diff(&oracle_sigma(&out.augmented), &vec![1.0; d]));

        let spec = AugmentSpec::PowerNorm {
            beta: 0.0,
            noise_scale: 0.0,
            variant: PowerNormVariant::Plain,
            ns_iters: VERIFY_NS_ITERS,
        };
        let out = augment(&h, &spec, stream.substream(4)).unwrap();
        let want: Vec<f64> = sigma.iter().map(|s| s.sqrt()).collect();
        power = power.max(max_abs_diff(&oracle_sigma(&out.augmented), &want));
    }
    let passed = maxexp <= 1e-6 && grassman <= 1e-8 && power <= 1e-6;
    Outcome::new(
        passed,
        format!("{SHAPE_CASES} inputs: MaxExp(F) {maxexp:.1e}, Grassman kappa = d {grassman:.1e}, Power Norm beta = 0 {power:.1e}"),
    )
}

fn read_all(paths: &[PathBuf]) -> BTreeMap<PathBuf, Vec<u8>> {
    paths.iter().map(|p| (p.clone(), fs::read(p).unwrap())).collect()
}

fn run_and_replay(command: CommandKind, json: &str) -> Result<usize, String> {
    let config = RunConfig::from_json(json).map_err(|e| format!("{command:?}: {e}"))?;
    let first = execute(command, config).map_err(|e| format!("{command:?}: {e}"))?;
    let sidecar = first.written.last().cloned().ok_or("no sidecar written")?;
    let before = read_all(&first.written);
    let second = replay(&sidecar, None).map_err(|e| format!("{command:?} replay: {e}"))?;
    if second.written != first.written {
        return Err(format!("{command:?}: replay wrote {:?}", second.written));
    }
    if read_all(&second.written) != before || second.stdout != first.stdout {
        return Err(format!("{command:?}: replay differs"));
    }
    Ok(before.len())
}

fn criterion_12() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name);
    let p = |name: &str| serde_json::to_string(&path(name)).unwrap();
    let write = |name: &str, m: &Matrix| fs::write(path(name), format_matrix_csv(m)).unwrap();
    let mut g = RngStream::new(SEED, 12).sampler();
    write("h.csv", &g.matrix(24, 6));
    write("h_b.csv", &g.matrix(24, 6));

    let operators = [
        r#"{"op": "sfa", "k": 2}"#,
        r#"{"op": "max_exp_f", "eta": 3.0, "noise_scale": 0.5}"#,
        r#"{"op": "power_norm", "beta": 0.3, "noise_scale": 0.2, "variant": "star"}"#,
        r#"{"op": "grassman", "kappa": 3, "noise_scale": 0.1, "svd_mode": "randomized"}"#,
        r#"{"op": "precondition"}"#,
    ];
    let mut runs: Vec<(CommandKind, String)> = operators
        .iter()
        .enumerate()
        .map(|(j, op)| {
            (
                CommandKind::Augment,
                format!(
                    r#"{{"seed": 7, "input": {}, "output": {}, "operator": {op}}}"#,
                    p("h.csv"),
                    p(&format!("aug{j}.csv"))
                ),
            )
        })
        .collect();
    runs.push((
        CommandKind::Profile,
        format!(
            r#"{{"seed": 7, "output": {}, "k": [1, 8], "trials": 2000}}"#,
            p("profile.csv")
        ),
    ));
    runs.push((
        CommandKind::Verify,
        format!(
            r#"{{"seed": 7, "output": {}, "trials": 20000, "verify": {{"spectra": 3, "conservation_cases": 50, "newton_schulz_cases": 5, "gradient_cases": 3, "perturbation_cases": 10}}}}"#,
            p("verify.txt")
        ),
    ));
    runs.push((
        CommandKind::Align,
        format!(
            r#"{{"input": {}, "input_b": {}, "output": {}}}"#,
            p("h.csv"),
            p("h_b.csv"),
            p("align.csv")
        ),
    ));
    runs.push((
        CommandKind::Bound,
        format!(
            r#"{{"output": {}, "bound": {{"eps": 0.5, "alignment": 0.8, "n": 100, "gap": 0.3}}}}"#,
            p("bound.csv")
        ),
    ));

    let mut files = 0;
    let mut failures = Vec::new();
    for (command, json) in &runs {
        match run_and_replay(*command, json) {
            Ok(n) => files += n,
            Err(e) => failures.push(e),
        }
    }
    let detail = if failures.is_empty() {
        format!("{} runs, {files} files byte-identical after replay", runs.len())
    } else {
        failures.join("; ")
    };
    Outcome::new(failures.is_empty(), detail)
}

fn report(id: u32, title: &str, outcome: &Outcome, elapsed: Duration) {
    let verdict = if outcome.passed { "PASS" } else { "FAIL" };
    println!(
        "criterion {id:>2} {verdict} {title}: {} [{:.1} s]",
        outcome.detail,
        elapsed.as_secs_f64()
    );
}

fn main() -> ExitCode {
    let start = Instant::now();
    let profiles = profiles();
    let profile_elapsed = start.elapsed();

    let mut all_passed = true;
    let mut record = |id: u32, title: &str, outcome: Outcome, elapsed: Duration| {
        report(id, title, &outcome, elapsed);
        all_passed &= outcome.passed;
    };
    record(
        1,
        "push-forward profile, k = 1",
        criterion_1(&profiles),
        profile_elapsed,
    );
    record(2, "profile declines with k", criterion_2(&profiles), Duration::ZERO);

    let checks: [Check; 10] = [
        (3, "sfa conservation identity", criterion_3),
        (4, "rank-1 annihilation", criterion_4),
        (5, "analytic vs quadrature vs Monte Carlo", criterion_5),
        (6, "monotone rebalancing", criterion_6),
        (7, "push-forward upper envelope", criterion_7),
        (8, "newton-schulz roots", criterion_8),
        (9, "sfa backward vs finite differences", criterion_9),
        (10, "perturbation bound sweep", criterion_10),
        (11, "operator push-forward shapes", criterion_11),
        (12, "sidecar replay determinism", criterion_12),
    ];
    for (id, title, check) in checks {
        let t = Instant::now();
        let outcome = check();
        record(id, title, outcome, t.elapsed());
    }

    println!(
        "acceptance: {} [{:.1} s]",
        if all_passed { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
    if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
