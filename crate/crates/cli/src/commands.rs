use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;
use superpose::experiments::{
    emit_csv, emit_gnuplot, presets, run_sweep, summarize, Curve, PlotKind, Sweep,
};
use superpose::geometry::{
    gaussian_width_cone_mc, gaussian_width_subspace, geometry_report, width_upper_bound_l1_cone,
};
use superpose::{
    apg_solve, LowRankSparseConfig, McaConfig, McaNorm, QKind, SolverConfig, SuperpositionProblem,
};

use crate::error::{classify, CliError, CliResult};
use crate::spec::{matrix, read_json, ComponentJson, Context};

/// Flags shared by every subcommand. Each command returns its stdout text.
pub struct RunOptions<'a> {
    pub config: &'a Path,
    pub out: &'a Path,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub timing: bool,
}

fn context(opts: &RunOptions, file_seed: Option<u64>) -> Context {
    Context {
        base_dir: opts.config.parent().map(Path::to_path_buf).unwrap_or_default(),
        seed: opts.seed.or(file_seed).unwrap_or(0),
    }
}

fn create_out(out: &Path) -> CliResult<()> {
    fs::create_dir_all(out).map_err(|e| CliError::Config(format!("{}: {e}", out.display())))
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn json_line(value: &serde_json::Value) -> String {
    format!("{value}\n")
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    y: Vec<f64>,
    #[serde(rename = "X")]
    x: Vec<Vec<f64>>,
    components: Vec<ComponentJson>,
    #[serde(default)]
    solver: SolverConfig,
    #[serde(default)]
    ground_truth: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    seed: Option<u64>,
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    estimates: &'a [Vec<f64>],
    objective: f64,
    iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    componentwise_error: Option<&'a [f64]>,
}

pub fn solve(opts: &RunOptions) -> CliResult<String> {
    let file: ProblemFile = read_json(opts.config)?;
    let ctx = context(opts, file.seed);
    let design = matrix(&file.x, "X")?;
    let components = file
        .components
        .iter()
        .enumerate()
        .map(|(i, c)| c.build(design.cols(), i, &ctx))
        .collect::<CliResult<Vec<_>>>()?;
    let mut problem = SuperpositionProblem::new(file.y, design, components).map_err(classify)?;
    if let Some(truth) = file.ground_truth {
        problem = problem.with_ground_truth(truth).map_err(classify)?;
    }
    file.solver.validate().map_err(CliError::config)?;
    create_out(opts.out)?;
    let result = apg_solve(&problem, &file.solver).map_err(CliError::runtime)?;
    let output = SolveOutput {
        estimates: &result.estimates,
        objective: result.objective,
        iterations: result.iterations,
        componentwise_error: result.componentwise_error.as_deref(),
    };
    let text = serde_json::to_string_pretty(&output).map_err(CliError::runtime)?;
    write_file(&opts.out.join("result.json"), &(text + "\n"))?;
    Ok(json_line(&json!({"objective": result.objective, "iterations": result.iterations})))
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
enum ExperimentKind {
    ErrorVsN,
    Phase,
    #[serde(rename = "ksupport")]
    KSupport,
    LowrankSparse,
}

/// Either a preset with overrides or a full description of one sweep.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentFile {
    preset: Option<String>,
    kind: Option<ExperimentKind>,
    p: Option<usize>,
    s1: Option<usize>,
    s2: Option<usize>,
    q_kind: Option<QKind>,
    /// One error-vs-n curve per entry, instead of `q_kind`.
    q_kinds: Option<Vec<QKind>>,
    noise_sigma: Option<f64>,
    n_grid: Option<Vec<usize>>,
    trials: Option<usize>,
    base_seed: Option<u64>,
    norm_kind: Option<McaNorm>,
    fresh_q_per_trial: Option<bool>,
    ps: Option<Vec<usize>>,
    sparsities: Option<Vec<(usize, usize)>>,
    d1: Option<usize>,
    d2: Option<usize>,
    rank: Option<usize>,
    sparsity: Option<usize>,
    solver: Option<SolverConfig>,
}

fn q_label(q: QKind) -> &'static str {
    match q {
        QKind::Identity => "identity",
        QKind::NegativeIdentity => "negative_identity",
        QKind::RandomOrthogonal => "random",
        QKind::Dct => "dct",
    }
}

fn missing(field: &str) -> CliError {
    CliError::Config(format!("missing field `{field}`"))
}

impl ExperimentFile {
    fn mca_base(&self) -> CliResult<McaConfig> {
        Ok(McaConfig {
            p: self.p.ok_or_else(|| missing("p"))?,
            s1: self.s1.unwrap_or(1),
            s2: self.s2.unwrap_or(1),
            q_kind: self.q_kind.unwrap_or(QKind::RandomOrthogonal),
            noise_sigma: self.noise_sigma.ok_or_else(|| missing("noise_sigma"))?,
            n_grid: self.n_grid.clone().ok_or_else(|| missing("n_grid"))?,
            trials: self.trials.ok_or_else(|| missing("trials"))?,
            base_seed: self.base_seed.unwrap_or(0),
            norm_kind: self.norm_kind.unwrap_or(McaNorm::L1),
            fresh_q_per_trial: self.fresh_q_per_trial.unwrap_or(false),
            record_wall_time: false,
        })
    }

    fn build(&self) -> CliResult<(Sweep, SolverConfig)> {
        if let Some(name) = &self.preset {
            let (mut sweep, solver) = presets::by_name(name).ok_or_else(|| {
                CliError::Config(format!("unknown preset {name:?}; known: {}", presets::NAMES.join(", ")))
            })?;
            sweep.map_mca(|c| self.apply_overrides(c));
            return Ok((sweep, self.solver.unwrap_or(solver)));
        }
        let kind = self.kind.ok_or_else(|| missing("kind"))?;
        let sweep = match kind {
            ExperimentKind::ErrorVsN => {
                let base = self.mca_base()?;
                match &self.q_kinds {
                    Some(kinds) => Sweep::ErrorVsN(
                        kinds
                            .iter()
                            .map(|&q| (q_label(q).to_string(), McaConfig { q_kind: q, ..base.clone() }))
                            .collect(),
                    ),
                    None => Sweep::ErrorVsN(vec![(q_label(base.q_kind).to_string(), base)]),
                }
            }
            ExperimentKind::Phase => {
                let base = McaConfig {
                    fresh_q_per_trial: true,
                    ..self.mca_base()?
                };
                let ps = self.ps.clone().unwrap_or_else(|| vec![base.p]);
                Sweep::Phase(ps.into_iter().map(|p| McaConfig { p, ..base.clone() }).collect())
            }
            ExperimentKind::KSupport => {
                let base = McaConfig {
                    norm_kind: McaNorm::KSupport,
                    ..self.mca_base()?
                };
                Sweep::KSupport {
                    ps: self.ps.clone().unwrap_or_else(|| vec![base.p]),
                    sparsities: self.sparsities.clone().unwrap_or_else(|| vec![(base.s1, base.s2)]),
                    base,
                }
            }
            ExperimentKind::LowrankSparse => Sweep::LowRankSparse(LowRankSparseConfig {
                d1: self.d1.ok_or_else(|| missing("d1"))?,
                d2: self.d2.ok_or_else(|| missing("d2"))?,
                rank: self.rank.ok_or_else(|| missing("rank"))?,
                sparsity: self.sparsity.ok_or_else(|| missing("sparsity"))?,
                n_grid: self.n_grid.clone().ok_or_else(|| missing("n_grid"))?,
                trials: self.trials.ok_or_else(|| missing("trials"))?,
                noise_sigma: self.noise_sigma.unwrap_or(0.0),
                base_seed: self.base_seed.unwrap_or(0),
                record_wall_time: false,
            }),
        };
        let solver = match (kind, self.solver) {
            (_, Some(s)) => s,
            (ExperimentKind::Phase, None) => presets::noiseless_solver(),
            (_, None) => SolverConfig::default(),
        };
        Ok((sweep, solver))
    }

    fn apply_overrides(&self, c: &mut McaConfig) {
        if let Some(v) = self.noise_sigma {
            c.noise_sigma = v;
        }
        if let Some(v) = &self.n_grid {
            c.n_grid = v.clone();
        }
        if let Some(v) = self.trials {
            c.trials = v;
        }
        if let Some(v) = self.base_seed {
            c.base_seed = v;
        }
    }
}

fn set_seed_and_timing(sweep: &mut Sweep, seed: Option<u64>, timing: bool) {
    sweep.map_mca(|c| {
        if let Some(s) = seed {
            c.base_seed = s;
        }
        c.record_wall_time = timing;
    });
    if let Sweep::LowRankSparse(c) = sweep {
        if let Some(s) = seed {
            c.base_seed = s;
        }
        c.record_wall_time = timing;
    }
}

fn validate(sweep: &Sweep) -> CliResult<()> {
    match sweep {
        Sweep::ErrorVsN(curves) => curves.iter().try_for_each(|(_, c)| c.validate()),
        Sweep::Phase(configs) => configs.iter().try_for_each(McaConfig::validate),
        Sweep::KSupport { base, ps, sparsities } => ps.iter().try_for_each(|&p| {
            sparsities
                .iter()
                .try_for_each(|&(s1, s2)| McaConfig { p, s1, s2, ..base.clone() }.validate())
        }),
        Sweep::LowRankSparse(c) => c.validate(),
    }
    .map_err(CliError::config)
}

fn summary_table(curves: &[Curve]) -> String {
    let mut s = String::from("curve\tn\ttrials\tfailures\tmean_error\trecovery_fraction\n");
    for curve in curves {
        for row in summarize(&curve.records) {
            s.push_str(&format!(
                "{}\t{}\t{}\t{}\t{:.6e}\t{:.4}\n",
                curve.label, row.n, row.trials, row.failures, row.mean_error, row.recovery_fraction
            ));
        }
    }
    s
}

pub fn experiment(opts: &RunOptions) -> CliResult<String> {
    let file: ExperimentFile = read_json(opts.config)?;
    let (mut sweep, solver) = file.build()?;
    set_seed_and_timing(&mut sweep, opts.seed, opts.timing);
    validate(&sweep)?;
    solver.validate().map_err(CliError::config)?;
    create_out(opts.out)?;

    let run = || run_sweep(&sweep, &solver);
    let curves = match opts.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(CliError::runtime)?
            .install(run),
        None => run(),
    }
    .map_err(classify)?;

    let single = curves.len() == 1;
    let mut files = Vec::new();
    for curve in &curves {
        let name = if single {
            "records.csv".to_string()
        } else {
            format!("records_{}.csv", curve.label)
        };
        emit_csv(&curve.records, &opts.out.join(&name)).map_err(CliError::runtime)?;
        files.push((curve.label.clone(), name));
    }
    let kind = match sweep {
        Sweep::Phase(_) => PlotKind::RecoveryFraction,
        _ => PlotKind::MeanError,
    };
    emit_gnuplot(&files, kind, &opts.out.join("plot.gp")).map_err(CliError::runtime)?;
    Ok(summary_table(&curves))
}

#[derive(Debug, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
enum WidthFile {
    Subspace {
        dim: usize,
        ambient: usize,
    },
    ConeMc {
        component: ComponentJson,
        anchor: Vec<f64>,
        draws: usize,
        directions: usize,
        #[serde(default)]
        seed: Option<u64>,
    },
    L1ConeBound {
        sparsity: usize,
        p: usize,
        /// Defaults to `sparsity` leading ones.
        #[serde(default)]
        anchor: Option<Vec<f64>>,
        draws: usize,
        #[serde(default)]
        seed: Option<u64>,
    },
}

pub fn width(opts: &RunOptions) -> CliResult<String> {
    let file: WidthFile = read_json(opts.config)?;
    let estimate = match file {
        WidthFile::Subspace { dim, ambient } => gaussian_width_subspace(dim, ambient),
        WidthFile::ConeMc {
            component,
            anchor,
            draws,
            directions,
            seed,
        } => {
            let ctx = context(opts, seed);
            let spec = component.build(anchor.len(), 0, &ctx)?;
            gaussian_width_cone_mc(&spec, &anchor, draws, directions, ctx.seed)
        }
        WidthFile::L1ConeBound {
            sparsity,
            p,
            anchor,
            draws,
            seed,
        } => {
            let ctx = context(opts, seed);
            let anchor = anchor.unwrap_or_else(|| (0..p).map(|i| if i < sparsity { 1.0 } else { 0.0 }).collect());
            width_upper_bound_l1_cone(sparsity, p, &anchor, draws, ctx.seed)
        }
    }
    .map_err(classify)?;
    Ok(json_line(&serde_json::to_value(estimate).map_err(CliError::runtime)?))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConeJson {
    component: ComponentJson,
    anchor: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScFile {
    cones: Vec<ConeJson>,
    samples: usize,
    #[serde(default)]
    design: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    seed: Option<u64>,
}

pub fn sc_estimate(opts: &RunOptions) -> CliResult<String> {
    let file: ScFile = read_json(opts.config)?;
    let ctx = context(opts, file.seed);
    let cones = file
        .cones
        .iter()
        .enumerate()
        .map(|(i, c)| Ok((c.component.build(c.anchor.len(), i, &ctx)?, c.anchor.clone())))
        .collect::<CliResult<Vec<_>>>()?;
    let design = file.design.as_deref().map(|rows| matrix(rows, "design")).transpose()?;
    let report = geometry_report(&cones, design.as_ref(), file.samples, ctx.seed).map_err(classify)?;
    let bias: BTreeMap<&str, &str> = [("rho_hat", "upper"), ("delta_hat", "lower"), ("kappa_hat", "upper")].into();
    Ok(json_line(&json!({
        "rho_hat": report.rho_hat,
        "delta_hat": report.delta_hat,
        "kappa_hat": report.kappa_hat,
        "bias_direction": bias,
        "method": "SampledExtremum",
        "draws": report.num_samples,
        "seed": report.seed,
    })))
}
