use std::fs;
use std::path::{Path, PathBuf};

use qga::analysis::{
    balance_condition_check, bloch_decompose, ensemble_stats_with, fit_exponential, prepared_state,
    FitResult, PreparedState,
};
use qga::ga::{run, GaConfig, RunRecord, Termination};
use qga::tasks::{deutsch_decision, Slot, TaskSpec};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::output::{
    fit_points, fit_row, fmt_f64, read_csv, run_rows, stats_doc, write_atomic, CsvDoc, PointSource,
    FIT_HEADER, RUN_HEADER,
};

/// Tolerance of the per-run balance check reported in the outputs.
pub const BALANCE_TOL: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success,
    Failure,
    /// Completed, but a run hit the generation cap or a fit did not converge.
    Flagged,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Success => 0,
            ExitStatus::Failure => 1,
            ExitStatus::Flagged => 2,
        }
    }

    fn worst(self, other: ExitStatus) -> ExitStatus {
        if self.code() >= other.code() {
            self
        } else {
            other
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn echo_config(cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    let text = cfg.to_toml();
    eprintln!("effective configuration:\n{text}");
    write_atomic(&dir.join("effective_config.toml"), &text)
}

/// Index of the trainable unitary that acts first on the input state.
fn first_trainable(task: &TaskSpec) -> Option<usize> {
    task.template().slots().iter().find_map(|s| match s {
        Slot::Trainable(j) => Some(*j),
        Slot::Oracle(_) => None,
    })
}

fn prepared_of(task: &TaskSpec, rec: &RunRecord) -> Result<Option<PreparedState>> {
    if task.dim() != 2 {
        return Ok(None);
    }
    let Some(j) = first_trainable(task) else {
        return Ok(None);
    };
    let unitaries = task.trainable_unitaries(&rec.best_genome, &rec.config.codec)?;
    Ok(Some(prepared_state(&unitaries[j], task.initial_state())?))
}

fn analysis_doc(cfg: &ExperimentConfig, task: &TaskSpec, rec: &RunRecord) -> Result<CsvDoc> {
    let mut doc = CsvDoc::new(cfg.metadata(), &["quantity", "key", "value"]);
    let mut put = |q: &str, k: String, v: String| doc.push(vec![q.to_string(), k, v]);
    let codec = &rec.config.codec;
    let unitaries = task.trainable_unitaries(&rec.best_genome, codec)?;
    if task.dim() == 2 {
        for (j, u) in unitaries.iter().enumerate() {
            let b = bloch_decompose(u)?;
            let k = || j.to_string();
            put("bloch_theta", k(), fmt_f64(b.theta));
            put("bloch_axis_x", k(), fmt_f64(b.axis[0]));
            put("bloch_axis_y", k(), fmt_f64(b.axis[1]));
            put("bloch_axis_z", k(), fmt_f64(b.axis[2]));
            put("bloch_phase_re", k(), fmt_f64(b.phase[0]));
            put("bloch_phase_im", k(), fmt_f64(b.phase[1]));
            put("bloch_residual", k(), fmt_f64(b.residual));
            put("bloch_degenerate", k(), b.degenerate.to_string());
        }
    }
    if let Some(ps) = prepared_of(task, rec)? {
        put("prepared_alpha", String::new(), fmt_f64(ps.alpha));
        put("prepared_phi", String::new(), fmt_f64(ps.phi));
        put(
            "prepared_degenerate",
            String::new(),
            ps.degenerate.to_string(),
        );
        put(
            "balance_check",
            fmt_f64(BALANCE_TOL),
            balance_condition_check(&ps, BALANCE_TOL).to_string(),
        );
    }
    if task.name().starts_with("deutsch") {
        let d = deutsch_decision(&rec.best_genome, codec)?;
        put(
            "decision_success_constant",
            String::new(),
            fmt_f64(d.success_constant),
        );
        put(
            "decision_success_balanced",
            String::new(),
            fmt_f64(d.success_balanced),
        );
        put(
            "decision_orthogonality_defect",
            String::new(),
            fmt_f64(d.orthogonality_defect),
        );
    }
    let fids = task.pair_fidelities(&rec.best_genome, codec)?;
    for ((label, _), f) in task.pairs().iter().zip(fids) {
        put("pair_fidelity", label.clone(), fmt_f64(f));
    }
    Ok(doc)
}

/// One GA run with seed `base_seed`.
pub fn cmd_run(cfg: &ExperimentConfig) -> Result<ExitStatus> {
    cfg.validate()?;
    let task = cfg.load_task()?;
    let ga = cfg.ga_config(task.dim())?;
    let rec = run(&ga, &task, cfg.base_seed)?;
    let analysis = analysis_doc(cfg, &task, &rec)?;

    create_dir(&cfg.out)?;
    echo_config(cfg, &cfg.out)?;
    let mut doc = CsvDoc::new(cfg.metadata(), &RUN_HEADER);
    run_rows(0, &rec).into_iter().for_each(|r| doc.push(r));
    doc.write(&cfg.out.join("run.csv"))?;
    let mut genome = String::new();
    for (k, v) in cfg.metadata() {
        genome.push_str(&format!("# {k} = {v}\n"));
    }
    genome.push_str(&format!("# fitness = {}\n", fmt_f64(rec.best_fitness)));
    genome.push_str(&rec.best_genome.to_listing());
    write_atomic(&cfg.out.join("genome.txt"), &genome)?;
    analysis.write(&cfg.out.join("analysis.csv"))?;

    eprintln!(
        "run seed {}: {} after {} generations, best fitness {}",
        rec.seed,
        rec.termination.as_str(),
        rec.generations_run(),
        rec.best_fitness
    );
    Ok(match rec.termination {
        Termination::Converged => ExitStatus::Success,
        Termination::GenerationCap => ExitStatus::Flagged,
    })
}

/// Results of an ensemble, indexed by run.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub records: Vec<(usize, RunRecord)>,
    pub failures: Vec<(usize, u64, String)>,
    /// Prepared state of every successful run on a qubit task.
    pub states: Vec<(usize, PreparedState)>,
}

impl Sweep {
    /// `(epsilon_opt, Q_c)` of converged runs.
    pub fn converged_points(&self) -> Vec<(f64, f64)> {
        self.records
            .iter()
            .filter(|(_, r)| r.converged())
            .map(|(_, r)| (r.epsilon_opt(), r.generations_run() as f64))
            .collect()
    }
}

fn run_ensemble(
    ga: &GaConfig,
    task: &TaskSpec,
    base_seed: u64,
    n: usize,
    workers: usize,
) -> Result<Sweep> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    let results: Vec<_> = pool.install(|| {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let seed = base_seed.wrapping_add(i as u64);
                let rec = run(ga, task, seed)?;
                let ps = prepared_of(task, &rec)?;
                Ok::<_, CliError>((rec, ps))
            })
            .collect()
    });
    let mut sweep = Sweep {
        records: Vec::new(),
        failures: Vec::new(),
        states: Vec::new(),
    };
    for (i, res) in results.into_iter().enumerate() {
        match res {
            Ok((rec, ps)) => {
                if let Some(ps) = ps {
                    sweep.states.push((i, ps));
                }
                sweep.records.push((i, rec));
            }
            Err(e) => sweep
                .failures
                .push((i, base_seed.wrapping_add(i as u64), e.to_string())),
        }
    }
    Ok(sweep)
}

fn write_sweep(cfg: &ExperimentConfig, sweep: &Sweep, dir: &Path) -> Result<()> {
    let meta = cfg.metadata();
    let records: Vec<RunRecord> = sweep.records.iter().map(|(_, r)| r.clone()).collect();

    let mut runs = CsvDoc::new(meta.clone(), &RUN_HEADER);
    for (i, rec) in &sweep.records {
        run_rows(*i, rec).into_iter().for_each(|r| runs.push(r));
    }

    let record_of = |i: usize| {
        let k = sweep
            .records
            .binary_search_by_key(&i, |(j, _)| *j)
            .expect("state of a recorded run");
        &sweep.records[k].1
    };
    let mut alpha_phi = CsvDoc::new(meta.clone(), &["run_id", "alpha", "phi", "epsilon_opt"]);
    let mut selected = Vec::new();
    let mut balance_pass = 0usize;
    for (i, ps) in &sweep.states {
        let rec = record_of(*i);
        if !rec.converged() {
            continue;
        }
        alpha_phi.push(vec![
            i.to_string(),
            fmt_f64(ps.alpha),
            fmt_f64(ps.phi),
            fmt_f64(rec.epsilon_opt()),
        ]);
        if rec.epsilon_opt() < cfg.alpha_max_error {
            selected.push(*ps);
            balance_pass += balance_condition_check(ps, BALANCE_TOL) as usize;
        }
    }

    let mut qc_eps = CsvDoc::new(
        meta.clone(),
        &["run_id", "epsilon_opt", "q_c", "termination_reason"],
    );
    for (i, rec) in &sweep.records {
        qc_eps.push(vec![
            i.to_string(),
            fmt_f64(rec.epsilon_opt()),
            rec.generations_run().to_string(),
            rec.termination.as_str().into(),
        ]);
    }

    let stats = ensemble_stats_with(&records, &selected, cfg.padding, Some(cfg.horizon))?;
    let mut hist = CsvDoc::new(meta.clone(), &["q_c", "count"]);
    for (q, c) in &stats.qc_histogram {
        hist.push(vec![q.to_string(), c.to_string()]);
    }

    let converged = records.iter().filter(|r| r.converged()).count();
    let mut ens = CsvDoc::new(meta.clone(), &["quantity", "value"]);
    let mut put = |k: &str, v: String| ens.push(vec![k.to_string(), v]);
    put("runs", stats.runs.to_string());
    put("failures", sweep.failures.len().to_string());
    put("converged", converged.to_string());
    put("generation_cap", (records.len() - converged).to_string());
    put(
        "q_c_max",
        records
            .iter()
            .map(|r| r.generations_run())
            .max()
            .unwrap_or(0)
            .to_string(),
    );
    match stats.alpha {
        Some(a) => {
            put("alpha_mean", fmt_f64(a.mean));
            put("alpha_std", fmt_f64(a.std));
            put("alpha_n", a.n.to_string());
        }
        None => put("alpha_n", "0".into()),
    }
    put("balance_tol", fmt_f64(BALANCE_TOL));
    put("balance_pass", balance_pass.to_string());

    runs.write(&dir.join("runs.csv"))?;
    stats_doc(meta.clone(), &stats).write(&dir.join("stats.csv"))?;
    alpha_phi.write(&dir.join("alpha_phi.csv"))?;
    qc_eps.write(&dir.join("qc_eps.csv"))?;
    hist.write(&dir.join("qc_histogram.csv"))?;
    ens.write(&dir.join("ensemble.csv"))?;
    let failures_path = dir.join("failures.csv");
    if sweep.failures.is_empty() {
        if failures_path.exists() {
            fs::remove_file(&failures_path).map_err(|e| CliError::io(&failures_path, e))?;
        }
    } else {
        let mut doc = CsvDoc::new(meta, &["run_id", "seed", "error"]);
        for (i, seed, msg) in &sweep.failures {
            doc.push(vec![i.to_string(), seed.to_string(), msg.clone()]);
        }
        doc.write(&failures_path)?;
    }
    Ok(())
}

fn sweep_into(cfg: &ExperimentConfig, task: &TaskSpec, dir: &Path) -> Result<Sweep> {
    let ga = cfg.ga_config(task.dim())?;
    let sweep = run_ensemble(&ga, task, cfg.base_seed, cfg.seeds, cfg.workers)?;
    if sweep.records.is_empty() {
        return Err(CliError::Config(format!(
            "all {} runs failed; first error: {}",
            sweep.failures.len(),
            sweep.failures.first().map_or("", |f| f.2.as_str())
        )));
    }
    create_dir(dir)?;
    echo_config(cfg, dir)?;
    write_sweep(cfg, &sweep, dir)?;
    eprintln!(
        "{}: {} runs, {} failed, {} converged",
        dir.display(),
        cfg.seeds,
        sweep.failures.len(),
        sweep.records.iter().filter(|(_, r)| r.converged()).count()
    );
    Ok(sweep)
}

/// Ensemble of `seeds` runs with seeds `base_seed + i`.
pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<ExitStatus> {
    cfg.validate()?;
    if cfg.seeds == 0 {
        return Err(CliError::Config("seeds must be at least 1".into()));
    }
    let task = cfg.load_task()?;
    sweep_into(cfg, &task, &cfg.out)?;
    Ok(ExitStatus::Success)
}

/// Fits `Q = a exp(-b eps) + c` to the points in `input` and writes
/// `fit.csv` into `out`.
pub fn cmd_fit(input: &Path, out: &Path, bins: usize) -> Result<ExitStatus> {
    let (header, rows) = read_csv(input)?;
    let (points, source) = fit_points(&header, &rows, bins)?;
    let fit = fit_exponential(&points)?;
    let mut meta = vec![("input".to_string(), input.display().to_string())];
    if let PointSource::Runs { runs } = source {
        meta.push(("converged_runs".into(), runs.to_string()));
        meta.push(("bins".into(), bins.to_string()));
    }
    let mut doc = CsvDoc::new(meta, &FIT_HEADER);
    doc.push(fit_row("fit", &fit, points.len()));
    create_dir(out)?;
    doc.write(&out.join("fit.csv"))?;
    report_fit("fit", &fit);
    Ok(if fit.converged {
        ExitStatus::Success
    } else {
        ExitStatus::Flagged
    })
}

fn report_fit(label: &str, fit: &FitResult) {
    eprintln!(
        "{label}: a = {:.4} +- {:.4}, b = {:.4} +- {:.4}, c = {:.4} +- {:.4}, converged = {}",
        fit.a, fit.std_errors[0], fit.b, fit.std_errors[1], fit.c, fit.std_errors[2], fit.converged
    );
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Fig5,
    Fig6,
    Fig7,
}

impl std::str::FromStr for Figure {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig5" => Ok(Figure::Fig5),
            "fig6" => Ok(Figure::Fig6),
            "fig7" => Ok(Figure::Fig7),
            _ => Err(CliError::Config(format!(
                "unknown figure `{s}` (fig5, fig6, fig7)"
            ))),
        }
    }
}

impl Figure {
    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
            Figure::Fig7 => "fig7",
        }
    }

    pub fn populations(self) -> &'static [usize] {
        match self {
            Figure::Fig5 => &[10, 50, 100],
            Figure::Fig6 => &[100],
            Figure::Fig7 => &[100, 200, 300, 400],
        }
    }
}

/// Defaults for figure reproduction; file and flag values still override.
pub fn reproduce_defaults() -> ExperimentConfig {
    ExperimentConfig {
        threshold: Some(1e-4),
        seeds: 1000,
        ..Default::default()
    }
}

/// Sweeps every population size of a figure into `out/<fig>/npop<N>/`;
/// for fig7 also fits each ensemble into `out/fig7/fit.csv`.
pub fn cmd_reproduce(cfg: &ExperimentConfig, figure: Figure) -> Result<ExitStatus> {
    cfg.validate()?;
    if cfg.seeds == 0 {
        return Err(CliError::Config("seeds must be at least 1".into()));
    }
    let task = cfg.load_task()?;
    let root: PathBuf = cfg.out.join(figure.name());
    let mut status = ExitStatus::Success;
    let mut fits = CsvDoc::new(cfg.metadata(), &FIT_HEADER);
    for &npop in figure.populations() {
        let sub = ExperimentConfig {
            npop,
            out: root.join(format!("npop{npop}")),
            ..cfg.clone()
        };
        let sweep = sweep_into(&sub, &task, &sub.out)?;
        if figure == Figure::Fig7 {
            let points = qga::analysis::quantile_bins(&sweep.converged_points(), cfg.bins);
            let label = npop.to_string();
            match fit_exponential(&points) {
                Ok(fit) => {
                    report_fit(&format!("npop {npop}"), &fit);
                    if !fit.converged {
                        status = status.worst(ExitStatus::Flagged);
                    }
                    fits.push(fit_row(&label, &fit, points.len()));
                }
                Err(e) => {
                    eprintln!("npop {npop}: fit failed: {e}");
                    status = status.worst(ExitStatus::Flagged);
                    let nan = FitResult {
                        a: f64::NAN,
                        b: f64::NAN,
                        c: f64::NAN,
                        std_errors: [f64::NAN; 3],
                        rss: f64::NAN,
                        iterations: 0,
                        converged: false,
                    };
                    fits.push(fit_row(&label, &nan, points.len()));
                }
            }
        }
    }
    if figure == Figure::Fig7 {
        fits.write(&root.join("fit.csv"))?;
    }
    Ok(status)
}
