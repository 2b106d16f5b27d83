//! Subcommand bodies. Each one resolves its settings into the config,
//! runs, and leaves its outputs plus a manifest in a fresh run directory.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, ensure, Context, Result};
use aomp_core::experiments::{
    phase_transition, recover_image, sparsify_blocks, sweep_k, synthetic_image, write_jsonl,
    write_records_csv, write_sweep_csv, BatchSetup, Image, ImageSetup, PhaseSetup, SolverSpec,
    TrialRecord,
};
use aomp_core::rip::{RicTable, RipReport};
use aomp_core::signal::{gen_instance, gen_matrix, gen_matrix_with_std, InstanceRecord};
use aomp_core::{Ensemble, Matrix, TerminationReason};
use serde::Serialize;

use crate::config::{parse_grid, pick, pick_opt, FileConfig, SolverName};
use crate::manifest::Run;
use crate::solvers::build_all;
use crate::{Cli, Command, ProblemArgs, SearchArgs};

pub const DEFAULT_SEED: u64 = 20_240_917;

const TABLE_SOLVERS: [SolverName; 5] = [
    SolverName::AmulE,
    SolverName::MulE,
    SolverName::MulK,
    SolverName::Omp,
    SolverName::Sp,
];

pub fn run(cli: Cli) -> Result<ExitCode> {
    let mut cfg = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let seed = pick(cli.seed, &mut cfg.seed, DEFAULT_SEED);
    let out_dir = pick(cli.out_dir, &mut cfg.out_dir, PathBuf::from("runs"));
    if let Some(jobs) = pick_opt(cli.jobs, &mut cfg.jobs) {
        ensure!(jobs > 0, "--jobs must be at least 1");
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("starting the worker pool")?;
    }
    let ctx = Ctx { cfg, seed, out_dir };
    match cli.command {
        Command::Recover {
            search,
            problem,
            instance,
        } => recover(ctx, search, problem, instance),
        Command::Sweep {
            search,
            problem,
            k_min,
            k_max,
            k_step,
        } => sweep(ctx, search, problem, [k_min, k_max, k_step]).map(|_| ExitCode::SUCCESS),
        Command::Phase {
            search,
            n,
            lambdas,
            rhos,
            trials,
            ensemble,
        } => phase(ctx, search, n, lambdas, rhos, trials, ensemble).map(|_| ExitCode::SUCCESS),
        Command::Image {
            search,
            input,
            width,
            height,
            k,
            m,
            redraw_per_block,
        } => image(ctx, search, input, [width, height, k, m], redraw_per_block)
            .map(|_| ExitCode::SUCCESS),
        Command::Rip {
            m,
            n,
            identity,
            matrix,
            matrix_std,
            lmax,
            k,
            b,
            kmax,
        } => rip(ctx, [m, n, lmax, k, b, kmax], identity, matrix, matrix_std)
            .map(|_| ExitCode::SUCCESS),
        Command::Bench { search, problem } => {
            bench(ctx, search, problem).map(|_| ExitCode::SUCCESS)
        }
    }
}

struct Ctx {
    cfg: FileConfig,
    seed: u64,
    out_dir: PathBuf,
}

impl Ctx {
    fn start(&self, command: &str) -> Result<Run> {
        Run::create(&self.out_dir, command, self.seed)
    }

    /// Resolves solver names and search overrides, then builds the solvers.
    fn solvers(
        &mut self,
        args: SearchArgs,
        default_names: &[SolverName],
        default_kmax: &str,
        default_alpha: Option<f64>,
    ) -> Result<(Vec<SolverName>, Vec<SolverSpec>)> {
        let cfg = &mut self.cfg;
        let names = pick(args.solvers, &mut cfg.solvers, default_names.to_vec());
        let s = &mut cfg.search;
        pick(args.kmax, &mut s.kmax, default_kmax.to_string());
        match default_alpha {
            Some(a) => {
                pick(args.alpha, &mut s.alpha, a);
            }
            None => {
                pick_opt(args.alpha, &mut s.alpha);
            }
        }
        pick_opt(args.initial_paths, &mut s.initial_paths);
        pick_opt(args.branching, &mut s.branching);
        pick_opt(args.max_paths, &mut s.max_paths);
        pick_opt(args.epsilon, &mut s.epsilon);
        pick_opt(args.audit, &mut s.audit);
        let specs = build_all(&names, s)?;
        Ok((names, specs))
    }

    fn batch(&mut self, args: ProblemArgs, default_k: usize, default_trials: usize) -> BatchSetup {
        let p = &mut self.cfg.problem;
        let mut setup = BatchSetup::new(
            pick(args.n, &mut p.n, 256),
            pick(args.m, &mut p.m, 100),
            pick(args.k, &mut p.k, default_k),
            pick(args.ensemble, &mut p.ensemble, Ensemble::Gaussian),
            pick(args.trials, &mut p.trials, default_trials),
            self.seed,
        );
        setup.matrix_std = pick_opt(args.matrix_std, &mut p.matrix_std);
        setup.jobs = self.cfg.jobs;
        setup
    }
}

fn recover(
    mut ctx: Ctx,
    search: SearchArgs,
    problem: ProblemArgs,
    instance: Option<PathBuf>,
) -> Result<ExitCode> {
    let (_, specs) = ctx.solvers(search, &[SolverName::AmulE], "55", None)?;
    ensure!(
        specs.len() == 1,
        "recover takes exactly one solver, got {}",
        specs.len()
    );
    let spec = &specs[0];
    let instance_path = pick_opt(instance, &mut ctx.cfg.recover.instance);
    let p = &mut ctx.cfg.problem;
    let matrix_std = pick_opt(problem.matrix_std, &mut p.matrix_std);
    let draw = |m, n, seed| match matrix_std {
        Some(s) => gen_matrix_with_std(m, n, seed, s),
        None => gen_matrix(m, n, seed),
    };
    let inst = match &instance_path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let record: InstanceRecord = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", path.display()))?;
            let phi = draw(record.m, record.n, record.seed)?.phi;
            let inst = record.to_instance(&phi)?;
            (p.n, p.m, p.k, p.ensemble) = (
                Some(record.n),
                Some(record.m),
                Some(record.k),
                Some(record.ensemble),
            );
            (inst, phi)
        }
        None => {
            let n = pick(problem.n, &mut p.n, 256);
            let m = pick(problem.m, &mut p.m, 100);
            let k = pick(problem.k, &mut p.k, 10);
            let ensemble = pick(problem.ensemble, &mut p.ensemble, Ensemble::Gaussian);
            let phi = draw(m, n, ctx.seed)?.phi;
            (gen_instance(n, k, ensemble, ctx.seed, &phi)?, phi)
        }
    };
    let (inst, phi) = inst;
    let out = spec.solve(&phi, &inst.y, inst.k())?;

    let mut run = ctx.start("recover")?;
    run.write_json("instance.json", &inst.record())?;
    run.write_json("output.json", &out)?;
    run.finish(&ctx.cfg, specs.clone())?;

    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(match out.reason {
        TerminationReason::ResidueMet => ExitCode::SUCCESS,
        TerminationReason::AllComplete => ExitCode::from(2),
    })
}

fn sweep(
    mut ctx: Ctx,
    search: SearchArgs,
    problem: ProblemArgs,
    range: [Option<usize>; 3],
) -> Result<()> {
    let (_, specs) = ctx.solvers(search, &TABLE_SOLVERS, "55", None)?;
    let [mut k_min, mut k_max, k_step] = range;
    // a single -K pins the range
    if let Some(k) = problem.k {
        (k_min, k_max) = (Some(k), Some(k));
    }
    let sw = &mut ctx.cfg.sweep;
    let k_min = pick(k_min, &mut sw.k_min, 10);
    let k_max = pick(k_max, &mut sw.k_max, 50);
    let k_step = pick(k_step, &mut sw.k_step, 5);
    ensure!(k_step > 0, "k_step must be at least 1");
    ensure!(
        k_min >= 1 && k_min <= k_max,
        "need 1 <= k_min <= k_max, got {k_min}..{k_max}"
    );
    let template = ctx.batch(ProblemArgs { k: None, ..problem }, k_min, 50);
    ctx.cfg.problem.k = None;

    let batches = sweep_k(&specs, &template, (k_min..=k_max).step_by(k_step))?;
    let records: Vec<TrialRecord> = batches
        .iter()
        .flat_map(|b| b.records.iter().cloned())
        .collect();

    let mut run = ctx.start("sweep")?;
    write_sweep_csv(&batches, run.file("sweep.csv")?)?;
    write_records_csv(&records, run.file("records.csv")?)?;
    write_jsonl(&records, run.file("records.jsonl")?)?;
    let dir = run.finish(&ctx.cfg, specs)?;

    let mut out = std::io::stdout().lock();
    writeln!(
        out,
        "{:>4}  {:<16} {:>6} {:>10} {:>10}",
        "K", "solver", "exact", "anmse", "ms"
    )?;
    for b in &batches {
        for a in &b.aggregates {
            writeln!(
                out,
                "{:>4}  {:<16} {:>6.2} {:>10.3e} {:>10.3}",
                b.setup.k, a.solver, a.exact_rate, a.anmse, a.mean_time_ms
            )?;
        }
    }
    writeln!(out, "run: {}", dir.display())?;
    Ok(())
}

fn phase(
    mut ctx: Ctx,
    search: SearchArgs,
    n: Option<usize>,
    lambdas: Option<String>,
    rhos: Option<String>,
    trials: Option<usize>,
    ensemble: Option<Ensemble>,
) -> Result<()> {
    let (names, specs) = ctx.solvers(
        search,
        &[SolverName::AmulE, SolverName::Omp],
        "rho-max",
        None,
    )?;
    let lambdas = lambdas.as_deref().map(parse_grid).transpose()?;
    let rhos = rhos.as_deref().map(parse_grid).transpose()?;
    let ph = &mut ctx.cfg.phase;
    let setup = PhaseSetup {
        n: pick(n, &mut ph.n, 64),
        lambdas: pick(lambdas, &mut ph.lambdas, parse_grid("0.1:0.9:0.1")?),
        rhos: pick(rhos, &mut ph.rhos, parse_grid("0.05:1:0.05")?),
        trials: pick(trials, &mut ph.trials, 50),
        ensemble: pick(ensemble, &mut ph.ensemble, Ensemble::Gaussian),
        base_seed: ctx.seed,
        jobs: ctx.cfg.jobs,
    };

    let curves = specs
        .iter()
        .map(|s| phase_transition(s, &setup))
        .collect::<aomp_core::Result<Vec<_>>>()?;

    let mut run = ctx.start("phase")?;
    for (name, curve) in names.iter().zip(&curves) {
        curve.write_csv(run.file(&format!("phase-{}.csv", name.slug()))?)?;
        curve.write_cells_csv(run.file(&format!("cells-{}.csv", name.slug()))?)?;
    }
    run.write_json("phase.json", &curves)?;
    let dir = run.finish(&ctx.cfg, specs)?;

    let mut out = std::io::stdout().lock();
    for curve in &curves {
        writeln!(out, "{}", curve.solver)?;
        for p in &curve.points {
            let rho = match (p.crossing.rho_star, p.crossing.censored) {
                (Some(r), None) => format!("{r:.3}"),
                (_, Some(c)) => format!("censored ({c:?})").to_lowercase(),
                (None, None) => "-".into(),
            };
            writeln!(out, "  lambda {:.2}  M {:>3}  rho* {rho}", p.lambda, p.m)?;
        }
    }
    writeln!(out, "run: {}", dir.display())?;
    Ok(())
}

#[derive(Serialize)]
struct ImageSummary<'a> {
    solver: &'a str,
    setup: &'a ImageSetup,
    psnr: f64,
    blocks: usize,
    failed_blocks: usize,
    unconverged_blocks: usize,
    reconstruction: String,
}

fn image(
    mut ctx: Ctx,
    search: SearchArgs,
    input: Option<PathBuf>,
    dims: [Option<usize>; 4],
    redraw: Option<bool>,
) -> Result<()> {
    let (names, specs) = ctx.solvers(
        search,
        &[SolverName::AmulE, SolverName::Omp],
        "20",
        Some(0.85),
    )?;
    let [width, height, k, m] = dims;
    let im = &mut ctx.cfg.image;
    let source = match pick_opt(input, &mut im.input) {
        Some(path) => {
            Image::read_pgm(&path).with_context(|| format!("reading {}", path.display()))?
        }
        None => synthetic_image(
            pick(width, &mut im.width, 64),
            pick(height, &mut im.height, 64),
            ctx.seed,
        ),
    };
    let setup = ImageSetup {
        k: pick(k, &mut im.k, 12),
        m: pick(m, &mut im.m, 32),
        seed: ctx.seed,
        redraw_per_block: pick(redraw, &mut im.redraw_per_block, false),
    };
    let reference = sparsify_blocks(&source, setup.k)?;
    let results = specs
        .iter()
        .map(|s| recover_image(&reference, s, &setup))
        .collect::<aomp_core::Result<Vec<_>>>()?;

    let mut run = ctx.start("image")?;
    reference.clamped().write_pgm(&run.path("reference.pgm"))?;
    let mut summary = Vec::new();
    for (name, r) in names.iter().zip(&results) {
        let file = format!("recon-{}.pgm", name.slug());
        r.reconstruction.write_pgm(&run.path(&file))?;
        summary.push(ImageSummary {
            solver: &r.solver,
            setup: &r.setup,
            psnr: r.psnr,
            blocks: r.blocks,
            failed_blocks: r.failed_blocks,
            unconverged_blocks: r.unconverged_blocks,
            reconstruction: file,
        });
    }
    run.write_json("image.json", &summary)?;
    let dir = run.finish(&ctx.cfg, specs.clone())?;

    let mut out = std::io::stdout().lock();
    for s in &summary {
        writeln!(
            out,
            "{:<16} psnr {:>7.2} dB  failed {}  unconverged {}/{}",
            s.solver, s.psnr, s.failed_blocks, s.unconverged_blocks, s.blocks
        )?;
    }
    writeln!(out, "run: {}", dir.display())?;
    Ok(())
}

/// Reads a dense matrix: one row per line, entries separated by commas
/// and/or whitespace. Blank lines and `#` comments are skipped.
pub fn parse_matrix(text: &str) -> Result<Matrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>()
                    .with_context(|| format!("line {}: bad number `{t}`", i + 1))
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            ensure!(
                row.len() == first.len(),
                "line {}: {} entries, expected {}",
                i + 1,
                row.len(),
                first.len()
            );
        }
        rows.push(row);
    }
    if rows.is_empty() || rows[0].is_empty() {
        bail!("matrix file is empty");
    }
    let (m, n) = (rows.len(), rows[0].len());
    Ok(Matrix::from_row_slice(m, n, &rows.concat()))
}

fn rip(
    mut ctx: Ctx,
    sizes: [Option<usize>; 6],
    identity: Option<bool>,
    matrix: Option<PathBuf>,
    matrix_std: Option<f64>,
) -> Result<()> {
    let [m, n, lmax, k, b, kmax] = sizes;
    let r = &mut ctx.cfg.rip;
    let identity = pick(identity, &mut r.identity, false);
    let file = pick_opt(matrix, &mut r.matrix);
    let phi = if identity {
        ensure!(file.is_none(), "--identity and --matrix are exclusive");
        let n = pick(n, &mut r.n, 6);
        r.m = Some(n);
        Matrix::identity(n, n)
    } else if let Some(path) = &file {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let phi = parse_matrix(&text).with_context(|| format!("parsing {}", path.display()))?;
        (r.m, r.n) = (Some(phi.nrows()), Some(phi.ncols()));
        phi
    } else {
        let m = pick(m, &mut r.m, 8);
        let n = pick(n, &mut r.n, 12);
        ensure!(m > 0, "M must be at least 1");
        let std = pick(matrix_std, &mut r.matrix_std, 1.0 / (m as f64).sqrt());
        gen_matrix_with_std(m, n, ctx.seed, std)?.phi
    };
    let lmax = pick(lmax, &mut r.lmax, 4);
    let k = pick(k, &mut r.k, 2);
    let b = pick(b, &mut r.b, 2);
    let kmax = pick(kmax, &mut r.kmax, k);
    let table = RicTable::compute(&phi, lmax)?;
    let report = RipReport::evaluate(table, k, b, kmax);

    let mut run = ctx.start("rip")?;
    run.write_json("rip.json", &report)?;
    run.finish(&ctx.cfg, Vec::new())?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn bench(mut ctx: Ctx, search: SearchArgs, problem: ProblemArgs) -> Result<()> {
    let (_, specs) = ctx.solvers(search, &TABLE_SOLVERS, "55", None)?;
    let mut setup = ctx.batch(problem, 30, 10);
    // timing needs one trial at a time
    setup.jobs = Some(1);
    let result = aomp_core::experiments::run_batch(&specs, &setup)?;

    let mut run = ctx.start("bench")?;
    write_sweep_csv(std::slice::from_ref(&result), run.file("bench.csv")?)?;
    write_jsonl(&result.records, run.file("records.jsonl")?)?;
    run.write_json("bench.json", &result.aggregates)?;
    let dir = run.finish(&ctx.cfg, specs)?;

    let mut out = std::io::stdout().lock();
    writeln!(out, "{:<16} {:>10} {:>6}", "solver", "mean ms", "exact")?;
    for a in &result.aggregates {
        writeln!(
            out,
            "{:<16} {:>10.3} {:>6.2}",
            a.solver, a.mean_time_ms, a.exact_rate
        )?;
    }
    writeln!(out, "run: {}", dir.display())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_text() {
        let phi = parse_matrix("# two rows\n1, 2 3\n\n4 5,6\n").unwrap();
        assert_eq!(phi.shape(), (2, 3));
        assert_eq!(phi[(1, 0)], 4.0);
        assert!(parse_matrix("1 2\n3\n").is_err());
        assert!(parse_matrix("").is_err());
        assert!(parse_matrix("1 x").is_err());
    }
}
