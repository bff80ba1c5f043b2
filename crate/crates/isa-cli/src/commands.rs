//! Command implementations. Each command resolves its flags into a serde
//! config struct, runs against that struct alone, and writes a manifest; the
//! rerun command replays a stored config byte-for-byte.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use isa_core::inference::InferenceOptions;
use isa_core::io;
use isa_core::simulation::{BenchmarkConfig, CoverageConfig, GeneratorSpec};
use isa_core::strings::AdmmConfig;
use isa_core::{
    all_edges, bonferroni_select, default_lambda_grid, default_lambda_prime,
    generate_model_detailed, run_benchmark, run_coverage_study, run_untangle_and_chord,
    sample_gaussian, select_lambda, fit_strings, GroupPartition, InterBlockIndex, LambdaRule,
};

use crate::manifest::{read_manifest, ManifestBuilder};
use crate::{
    BenchmarkArgs, CliError, CoverageArgs, EstimateArgs, InferArgs, RerunArgs, SimulateArgs,
};

fn ensure_out_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::usage(format!("cannot create {}: {e}", dir.display())))
}

fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let grid: Result<Vec<f64>, _> = text.split(',').map(|v| v.trim().parse::<f64>()).collect();
    let grid = grid.map_err(|e| CliError::usage(format!("bad lambda grid: {e}")))?;
    if grid.is_empty() {
        return Err(CliError::usage("lambda grid is empty"));
    }
    Ok(grid)
}

fn parse_tracked(text: &str) -> Result<Vec<(usize, usize)>, CliError> {
    text.split(',')
        .map(|pair| {
            let (j, k) = pair
                .trim()
                .split_once(':')
                .ok_or_else(|| CliError::usage(format!("bad tracked entry '{pair}'")))?;
            let j: usize = j
                .parse()
                .map_err(|e| CliError::usage(format!("bad tracked row: {e}")))?;
            let k: usize = k
                .parse()
                .map_err(|e| CliError::usage(format!("bad tracked column: {e}")))?;
            if j == 0 || k == 0 {
                return Err(CliError::usage("tracked entries are 1-based"));
            }
            Ok((j, k))
        })
        .collect()
}

fn read_data(path: &Path) -> Result<nalgebra::DMatrix<f64>, CliError> {
    io::read_data_csv(path)
        .map_err(|e| CliError::usage(format!("cannot read data {}: {e}", path.display())))
}

fn read_partition(path: &Path) -> Result<GroupPartition, CliError> {
    io::read_partition_json(path)
        .map_err(|e| CliError::usage(format!("cannot read partition {}: {e}", path.display())))
}

fn validate_solver_flags(rho: f64, tol: f64, max_iters: usize) -> Result<(), CliError> {
    if !(rho > 0.0) {
        return Err(CliError::usage(format!("--rho must be positive, got {rho}")));
    }
    if !(tol > 0.0) {
        return Err(CliError::usage(format!("--tol must be positive, got {tol}")));
    }
    if max_iters == 0 {
        return Err(CliError::usage("--max-iters must be at least 1"));
    }
    Ok(())
}

fn validate_alpha(alpha: f64) -> Result<(), CliError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CliError::usage(format!(
            "--alpha must lie strictly between 0 and 1, got {alpha}"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub d: usize,
    pub s: usize,
    pub l: usize,
    pub value: f64,
    pub cond: f64,
    pub n: usize,
    pub seed: u64,
}

pub fn run_simulate(cfg: &SimulateConfig, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    ensure_out_dir(out_dir)?;
    let spec = GeneratorSpec {
        d: cfg.d,
        s: cfg.s,
        value: cfg.value,
        condition_number_target: Some(cfg.cond),
        l: cfg.l,
        seed: cfg.seed,
    };
    let (model, info) = generate_model_detailed(&spec)?;
    let data = sample_gaussian(&model, cfg.n, cfg.seed)?;

    let mut outputs = Vec::new();
    let mut emit = |name: &str| -> PathBuf {
        let p = out_dir.join(name);
        outputs.push(p.clone());
        p
    };
    io::write_matrix_csv(&emit("sigma.csv"), model.sigma.inner()).map_err(CliError::internal)?;
    io::write_matrix_csv(&emit("omega.csv"), model.omega.inner()).map_err(CliError::internal)?;
    io::write_matrix_csv(&emit("theta_star.csv"), model.theta.inner())
        .map_err(CliError::internal)?;
    io::write_support_json(&emit("support.json"), &model.support, model.s)
        .map_err(CliError::internal)?;
    io::write_partition_json(&emit("partition.json"), &model.partition)
        .map_err(CliError::internal)?;
    io::write_data_csv(&emit("data.csv"), &data).map_err(CliError::internal)?;

    let gen_info = out_dir.join("generator_info.json");
    let text = serde_json::to_string_pretty(&info).map_err(CliError::internal)?;
    std::fs::write(&gen_info, text + "\n").map_err(CliError::internal)?;
    outputs.push(gen_info);
    Ok(outputs)
}

pub fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let cfg = SimulateConfig {
        d: args.d,
        s: args.s,
        l: args.l,
        value: args.value,
        cond: args.cond.unwrap_or(args.d as f64),
        n: args.n,
        seed: args.seed,
    };
    let builder = ManifestBuilder::start("simulate", cfg.seed, vec![]);
    let outputs = run_simulate(&cfg, &args.out_dir)?;
    builder.finish(&cfg, &args.out_dir, outputs)?;
    Ok(())
}

// ---------------------------------------------------------------- estimate

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateConfig {
    pub data: PathBuf,
    pub partition: PathBuf,
    /// Exactly one of `lambda` and `grid` is set after resolution.
    pub lambda: Option<f64>,
    pub grid: Option<Vec<f64>>,
    pub val_data: Option<PathBuf>,
    pub rho: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub center: bool,
}

pub fn run_estimate(cfg: &EstimateConfig, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    ensure_out_dir(out_dir)?;
    let data = read_data(&cfg.data)?;
    let partition = read_partition(&cfg.partition)?;
    if data.ncols() != partition.d() {
        return Err(CliError::usage(format!(
            "data has {} columns but the partition covers {}",
            data.ncols(),
            partition.d()
        )));
    }
    let admm = AdmmConfig {
        rho: cfg.rho,
        tol: cfg.tol,
        max_iters: cfg.max_iters,
        symmetrize_each_iter: true,
    };
    let cov = isa_core::covariance_from_data(&data, &partition, cfg.center)?;

    let mut outputs = Vec::new();
    match (&cfg.lambda, &cfg.grid) {
        (Some(lambda), None) => {
            let fit = fit_strings(&cov, *lambda, &admm, None)?;
            let theta_path = out_dir.join("theta_hat.csv");
            io::write_matrix_csv(&theta_path, fit.theta_hat.inner())
                .map_err(CliError::internal)?;
            let fit_path = out_dir.join("fit.json");
            io::write_fit_json(&fit_path, &fit).map_err(CliError::internal)?;
            outputs.push(theta_path);
            outputs.push(fit_path);
        }
        (None, Some(grid)) => {
            let val_path = cfg
                .val_data
                .as_ref()
                .ok_or_else(|| CliError::usage("a lambda grid requires --val-data"))?;
            let val = read_data(val_path)?;
            let cov_val = isa_core::covariance_from_data(&val, &partition, cfg.center)?;
            let sel = select_lambda(&cov, &cov_val, grid, &admm)?;
            let chosen = sel.chosen().clone();
            let summary = isa_core::inference::SelectionSummary {
                grid: sel.grid.clone(),
                val_losses: sel.val_losses.clone(),
                chosen_index: sel.chosen_index,
            };
            let theta_path = out_dir.join("theta_hat.csv");
            io::write_matrix_csv(&theta_path, chosen.theta_hat.inner())
                .map_err(CliError::internal)?;
            let fit_path = out_dir.join("fit.json");
            io::write_fit_json(&fit_path, &chosen).map_err(CliError::internal)?;
            let sel_path = out_dir.join("selection.json");
            io::write_selection_json(&sel_path, &summary).map_err(CliError::internal)?;
            outputs.push(theta_path);
            outputs.push(fit_path);
            outputs.push(sel_path);
        }
        _ => {
            return Err(CliError::usage(
                "exactly one of a single lambda or a grid must be resolved",
            ))
        }
    }
    Ok(outputs)
}

pub fn cmd_estimate(args: EstimateArgs) -> Result<(), CliError> {
    validate_solver_flags(args.rho, args.tol, args.max_iters)?;
    // resolve the penalty specification up front so the manifest carries
    // concrete values
    let (lambda, grid) = match (&args.lambda, &args.lambda_grid) {
        (Some(l), None) => (Some(*l), None),
        (None, Some(text)) => (None, Some(parse_grid(text)?)),
        (None, None) => {
            let data = read_data(&args.data)?;
            (None, Some(default_lambda_grid(data.ncols(), data.nrows())))
        }
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };
    if grid.is_some() && args.val_data.is_none() {
        return Err(CliError::usage(
            "grid selection needs --val-data (or pass a single --lambda)",
        ));
    }
    let cfg = EstimateConfig {
        data: args.data,
        partition: args.partition,
        lambda,
        grid,
        val_data: args.val_data,
        rho: args.rho,
        tol: args.tol,
        max_iters: args.max_iters,
        center: args.center,
    };
    let mut inputs = vec![cfg.data.clone(), cfg.partition.clone()];
    if let Some(v) = &cfg.val_data {
        inputs.push(v.clone());
    }
    let builder = ManifestBuilder::start("estimate", 0, inputs);
    let outputs = run_estimate(&cfg, &args.out_dir)?;
    builder.finish(&cfg, &args.out_dir, outputs)?;
    Ok(())
}

// ------------------------------------------------------------------- infer

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InferConfig {
    pub data: PathBuf,
    pub partition: PathBuf,
    pub lambda: Option<f64>,
    pub grid: Option<Vec<f64>>,
    pub lambda_prime: f64,
    pub alpha: f64,
    pub shuffle: bool,
    pub seed: u64,
    pub center: bool,
    pub rho: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub bonferroni: bool,
}

pub fn run_infer(cfg: &InferConfig, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    ensure_out_dir(out_dir)?;
    let data = read_data(&cfg.data)?;
    let partition = read_partition(&cfg.partition)?;
    let admm = AdmmConfig {
        rho: cfg.rho,
        tol: cfg.tol,
        max_iters: cfg.max_iters,
        symmetrize_each_iter: true,
    };
    let rule = match (&cfg.lambda, &cfg.grid) {
        (Some(l), None) => LambdaRule::Fixed(*l),
        (None, Some(g)) => LambdaRule::Grid(g.clone()),
        _ => return Err(CliError::usage("exactly one penalty specification")),
    };
    let opts = InferenceOptions {
        alpha: cfg.alpha,
        lambda_prime: Some(cfg.lambda_prime),
        seed: cfg.seed,
        shuffle: cfg.shuffle,
        center: cfg.center,
    };
    let result = match run_untangle_and_chord(&data, &partition, &rule, &admm, &opts, None) {
        Ok(r) => r,
        Err(isa_core::IsaError::ClimeRowInfeasible { row, lambda_prime }) => {
            let suggestion = suggest_lambda_prime(&data, &partition, cfg)?;
            return Err(CliError::Run(format!(
                "row {row} of the correction program is infeasible at lambda_prime = \
                 {lambda_prime}; retry with --lambda-prime {suggestion:.6}"
            )));
        }
        Err(e) => return Err(e.into()),
    };

    let mut outputs = Vec::new();
    let theta_path = out_dir.join("theta_u.csv");
    io::write_matrix_csv(&theta_path, &result.theta_u).map_err(CliError::internal)?;
    outputs.push(theta_path);
    let edges = all_edges(&result, cfg.alpha)?;
    let edges_path = out_dir.join("edges.csv");
    io::write_edges_csv(&edges_path, &edges).map_err(CliError::internal)?;
    outputs.push(edges_path);
    let inf_path = out_dir.join("inference.json");
    io::write_inference_json(&inf_path, &result).map_err(CliError::internal)?;
    outputs.push(inf_path);
    if cfg.bonferroni {
        let selected = bonferroni_select(&result, cfg.alpha)?;
        let sel_path = out_dir.join("selected_edges.csv");
        io::write_selected_edges_csv(&sel_path, &selected).map_err(CliError::internal)?;
        outputs.push(sel_path);
    }
    Ok(outputs)
}

/// Smallest workable row-program budget over both targets of the second
/// half, padded by 5 percent.
fn suggest_lambda_prime(
    data: &nalgebra::DMatrix<f64>,
    partition: &GroupPartition,
    cfg: &InferConfig,
) -> Result<f64, CliError> {
    let (_, half2) = isa_core::split_sample(data, cfg.seed, cfg.shuffle)?;
    let cov2 = isa_core::covariance_from_data(&half2, partition, cfg.center)?;
    let blocked = isa_core::block_diagonal(&cov2.full, partition)?;
    let mut needed = 0.0f64;
    for row in 0..partition.d() {
        needed = needed.max(isa_core::clime::min_feasible_lambda(&cov2.full, row)?);
        needed = needed.max(isa_core::clime::min_feasible_lambda(&blocked, row)?);
    }
    Ok(needed * 1.05)
}

pub fn cmd_infer(args: InferArgs) -> Result<(), CliError> {
    validate_solver_flags(args.rho, args.tol, args.max_iters)?;
    validate_alpha(args.alpha)?;
    if let Some(lp) = args.lambda_prime {
        if !(lp > 0.0) {
            return Err(CliError::usage(format!(
                "--lambda-prime must be positive, got {lp}"
            )));
        }
    }
    let data = read_data(&args.data)?;
    if data.nrows() % 2 != 0 {
        return Err(CliError::usage(format!(
            "--data must have an even row count, got {}",
            data.nrows()
        )));
    }
    let n_half = data.nrows() / 2;
    let d = data.ncols();
    let (lambda, grid) = match (&args.lambda, &args.lambda_grid) {
        (Some(l), None) => (Some(*l), None),
        (None, Some(text)) => (None, Some(parse_grid(text)?)),
        (None, None) => (None, Some(default_lambda_grid(d, n_half))),
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };
    let cfg = InferConfig {
        data: args.data,
        partition: args.partition,
        lambda,
        grid,
        lambda_prime: args
            .lambda_prime
            .unwrap_or_else(|| default_lambda_prime(d, n_half)),
        alpha: args.alpha,
        shuffle: args.shuffle,
        seed: args.seed,
        center: args.center,
        rho: args.rho,
        tol: args.tol,
        max_iters: args.max_iters,
        bonferroni: args.bonferroni,
    };
    let inputs = vec![cfg.data.clone(), cfg.partition.clone()];
    let builder = ManifestBuilder::start("infer", cfg.seed, inputs);
    let outputs = run_infer(&cfg, &args.out_dir)?;
    builder.finish(&cfg, &args.out_dir, outputs)?;
    Ok(())
}

// --------------------------------------------------------------- benchmark

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkCliConfig {
    pub d: usize,
    pub s: usize,
    pub l: usize,
    pub value: f64,
    pub cond: f64,
    pub n_train: usize,
    pub n_val: usize,
    pub grid: Vec<f64>,
    pub rho: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub threshold: f64,
    pub reps: usize,
    pub seed: u64,
    pub jobs: Option<usize>,
}

pub fn run_benchmark_cmd(
    cfg: &BenchmarkCliConfig,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    ensure_out_dir(out_dir)?;
    let spec = GeneratorSpec {
        d: cfg.d,
        s: cfg.s,
        value: cfg.value,
        condition_number_target: Some(cfg.cond),
        l: cfg.l,
        seed: cfg.seed,
    };
    let bench = BenchmarkConfig {
        n_train: cfg.n_train,
        n_val: cfg.n_val,
        grid: Some(cfg.grid.clone()),
        admm: AdmmConfig {
            rho: cfg.rho,
            tol: cfg.tol,
            max_iters: cfg.max_iters,
            symmetrize_each_iter: true,
        },
        replications: cfg.reps,
        seed: cfg.seed,
        threshold: cfg.threshold,
        jobs: cfg.jobs,
    };
    let report = run_benchmark(&spec, &bench)?;

    let metrics_path = out_dir.join("metrics.csv");
    let mut f = std::fs::File::create(&metrics_path).map_err(CliError::internal)?;
    writeln!(f, "rep,status,tp,fp,fn,precision,recall,f_score").map_err(CliError::internal)?;
    for (r, m) in report.per_replication.iter().enumerate() {
        match m {
            Some(m) => writeln!(
                f,
                "{},ok,{},{},{},{:.4},{:.4},{:.4}",
                r + 1,
                m.true_positives,
                m.false_positives,
                m.false_negatives,
                m.precision,
                m.recall,
                m.f_score
            )
            .map_err(CliError::internal)?,
            None => writeln!(f, "{},failed,,,,,,", r + 1).map_err(CliError::internal)?,
        }
    }

    let summary_path = out_dir.join("summary.csv");
    let s = &report.summary;
    let mut f = std::fs::File::create(&summary_path).map_err(CliError::internal)?;
    writeln!(
        f,
        "d,s,precision,recall,f_score,replications,failed,chosen_not_converged,path_not_converged"
    )
    .map_err(CliError::internal)?;
    writeln!(
        f,
        "{},{},{},{},{},{},{},{},{}",
        cfg.d,
        cfg.s,
        io::fmt_mean_sd(s.mean_precision, s.sd_precision),
        io::fmt_mean_sd(s.mean_recall, s.sd_recall),
        io::fmt_mean_sd(s.mean_f_score, s.sd_f_score),
        cfg.reps,
        report.failed,
        report.chosen_not_converged,
        report.path_not_converged
    )
    .map_err(CliError::internal)?;
    Ok(vec![metrics_path, summary_path])
}

pub fn cmd_benchmark(args: BenchmarkArgs) -> Result<(), CliError> {
    validate_solver_flags(args.rho, args.tol, args.max_iters)?;
    if args.reps == 0 {
        return Err(CliError::usage("--reps must be at least 1"));
    }
    if !(args.threshold > 0.0) {
        return Err(CliError::usage("--threshold must be positive"));
    }
    let grid = match &args.lambda_grid {
        Some(text) => parse_grid(text)?,
        None => default_lambda_grid(args.d, args.n_train),
    };
    let cfg = BenchmarkCliConfig {
        d: args.d,
        s: args.s,
        l: args.l,
        value: args.value,
        cond: args.cond.unwrap_or(args.d as f64),
        n_train: args.n_train,
        n_val: args.n_val,
        grid,
        rho: args.rho,
        tol: args.tol,
        max_iters: args.max_iters,
        threshold: args.threshold,
        reps: args.reps,
        seed: args.seed,
        jobs: args.jobs,
    };
    let builder = ManifestBuilder::start("benchmark", cfg.seed, vec![]);
    let outputs = run_benchmark_cmd(&cfg, &args.out_dir)?;
    builder.finish(&cfg, &args.out_dir, outputs)?;
    Ok(())
}

// ---------------------------------------------------------------- coverage

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageCliConfig {
    pub d: usize,
    pub s: usize,
    pub l: usize,
    pub value: f64,
    pub cond: f64,
    pub n: usize,
    pub alpha: f64,
    pub lambda: Option<f64>,
    pub grid: Option<Vec<f64>>,
    pub lambda_prime: Option<f64>,
    pub rho: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub reps: usize,
    pub seed: u64,
    pub jobs: Option<usize>,
    pub tracked: Option<Vec<(usize, usize)>>,
}

pub fn run_coverage_cmd(
    cfg: &CoverageCliConfig,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    ensure_out_dir(out_dir)?;
    let spec = GeneratorSpec {
        d: cfg.d,
        s: cfg.s,
        value: cfg.value,
        condition_number_target: Some(cfg.cond),
        l: cfg.l,
        seed: cfg.seed,
    };
    let lambda = match (&cfg.lambda, &cfg.grid) {
        (Some(l), None) => LambdaRule::Fixed(*l),
        (None, Some(g)) => LambdaRule::Grid(g.clone()),
        _ => return Err(CliError::usage("exactly one penalty specification")),
    };
    let tracked = cfg.tracked.as_ref().map(|list| {
        list.iter()
            .map(|&(j, k)| InterBlockIndex { j: j - 1, k: k - 1 })
            .collect()
    });
    let coverage = CoverageConfig {
        n_per_half: cfg.n,
        alpha: cfg.alpha,
        lambda,
        lambda_prime: cfg.lambda_prime,
        admm: AdmmConfig {
            rho: cfg.rho,
            tol: cfg.tol,
            max_iters: cfg.max_iters,
            symmetrize_each_iter: true,
        },
        replications: cfg.reps,
        seed: cfg.seed,
        jobs: cfg.jobs,
        tracked,
    };
    let report = run_coverage_study(&spec, &coverage)?;

    let mut outputs = Vec::new();
    let cov_path = out_dir.join("coverage.csv");
    let mut f = std::fs::File::create(&cov_path).map_err(CliError::internal)?;
    writeln!(
        f,
        "d,s,avgcov_s,avgcov_sc,avglen_s,avglen_sc,replications,failed"
    )
    .map_err(CliError::internal)?;
    writeln!(
        f,
        "{},{},{:.4},{:.4},{:.4},{:.4},{},{}",
        cfg.d,
        cfg.s,
        report.avgcov_s,
        report.avgcov_sc,
        report.avglen_s,
        report.avglen_sc,
        report.replications_completed,
        report.failed
    )
    .map_err(CliError::internal)?;
    outputs.push(cov_path);

    let per_entry_path = out_dir.join("per_entry.csv");
    let mut f = std::fs::File::create(&per_entry_path).map_err(CliError::internal)?;
    writeln!(f, "j,k,coverage,avg_length").map_err(CliError::internal)?;
    for (ix, cov) in &report.per_entry_cov {
        writeln!(
            f,
            "{},{},{:.4},{:.4}",
            ix.j + 1,
            ix.k + 1,
            cov,
            report.per_entry_len[ix]
        )
        .map_err(CliError::internal)?;
    }
    outputs.push(per_entry_path);

    for (ix, zs) in &report.z_samples {
        let qq_path = out_dir.join(format!("qq_{}_{}.csv", ix.j + 1, ix.k + 1));
        let mut f = std::fs::File::create(&qq_path).map_err(CliError::internal)?;
        writeln!(f, "replication,z").map_err(CliError::internal)?;
        for (rep, z) in zs {
            writeln!(f, "{},{z:.4e}", rep + 1).map_err(CliError::internal)?;
        }
        outputs.push(qq_path);
    }
    Ok(outputs)
}

pub fn cmd_coverage(args: CoverageArgs) -> Result<(), CliError> {
    validate_solver_flags(args.rho, args.tol, args.max_iters)?;
    validate_alpha(args.alpha)?;
    if args.reps < 2 {
        return Err(CliError::usage("--reps must be at least 2 for coverage"));
    }
    let (lambda, grid) = match (&args.lambda, &args.lambda_grid) {
        (Some(l), None) => (Some(*l), None),
        (None, Some(text)) => (None, Some(parse_grid(text)?)),
        (None, None) => (None, Some(default_lambda_grid(args.d, args.n))),
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };
    let cfg = CoverageCliConfig {
        d: args.d,
        s: args.s,
        l: args.l,
        value: args.value,
        cond: args.cond.unwrap_or(args.d as f64),
        n: args.n,
        alpha: args.alpha,
        lambda,
        grid,
        lambda_prime: args.lambda_prime,
        rho: args.rho,
        tol: args.tol,
        max_iters: args.max_iters,
        reps: args.reps,
        seed: args.seed,
        jobs: args.jobs,
        tracked: match &args.tracked {
            Some(text) => Some(parse_tracked(text)?),
            None => None,
        },
    };
    let builder = ManifestBuilder::start("coverage", cfg.seed, vec![]);
    let outputs = run_coverage_cmd(&cfg, &args.out_dir)?;
    builder.finish(&cfg, &args.out_dir, outputs)?;
    Ok(())
}

// ------------------------------------------------------------------- rerun

pub fn cmd_rerun(args: RerunArgs) -> Result<(), CliError> {
    let manifest = read_manifest(&args.manifest)?;
    match manifest.command.as_str() {
        "simulate" => {
            let cfg: SimulateConfig =
                serde_json::from_value(manifest.config).map_err(CliError::internal)?;
            let builder = ManifestBuilder::start("simulate", cfg.seed, vec![]);
            let outputs = run_simulate(&cfg, &args.out_dir)?;
            builder.finish(&cfg, &args.out_dir, outputs)?;
        }
        "estimate" => {
            let cfg: EstimateConfig =
                serde_json::from_value(manifest.config).map_err(CliError::internal)?;
            let builder = ManifestBuilder::start("estimate", 0, vec![cfg.data.clone()]);
            let outputs = run_estimate(&cfg, &args.out_dir)?;
            builder.finish(&cfg, &args.out_dir, outputs)?;
        }
        "infer" => {
            let cfg: InferConfig =
                serde_json::from_value(manifest.config).map_err(CliError::internal)?;
            let builder = ManifestBuilder::start("infer", cfg.seed, vec![cfg.data.clone()]);
            let outputs = run_infer(&cfg, &args.out_dir)?;
            builder.finish(&cfg, &args.out_dir, outputs)?;
        }
        "benchmark" => {
            let cfg: BenchmarkCliConfig =
                serde_json::from_value(manifest.config).map_err(CliError::internal)?;
            let builder = ManifestBuilder::start("benchmark", cfg.seed, vec![]);
            let outputs = run_benchmark_cmd(&cfg, &args.out_dir)?;
            builder.finish(&cfg, &args.out_dir, outputs)?;
        }
        "coverage" => {
            let cfg: CoverageCliConfig =
                serde_json::from_value(manifest.config).map_err(CliError::internal)?;
            let builder = ManifestBuilder::start("coverage", cfg.seed, vec![]);
            let outputs = run_coverage_cmd(&cfg, &args.out_dir)?;
            builder.finish(&cfg, &args.out_dir, outputs)?;
        }
        other => {
            return Err(CliError::usage(format!(
                "manifest command '{other}' is not recognized"
            )))
        }
    }
    Ok(())
}
