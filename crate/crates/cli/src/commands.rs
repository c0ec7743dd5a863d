//! One function per subcommand. Each writes its files into the output
//! directory, then a manifest, and returns the written paths.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use fs_ddrom::ddrom::{
    block_assemble, block_project, indicator_grassmannian, indicator_variance, local_pod, reconstruction_scan, repartition, solve_reduced,
    IndicatorField, LocalBases,
};
use fs_ddrom::dg::{assemble_monolithic, convergence_study, DGSpace, EXACT_TOL};
use fs_ddrom::fs_models::{check_axioms, FriedrichsSystem};
use fs_ddrom::mesh::{build_cartesian_mesh, partition_from_labels, partition_stripes, Partition};
use fs_ddrom::rom::{
    generate_snapshots, online_solve, pod, project, train_test_split, Estimate, Estimator, ReducedBasis, SnapshotSet, Truncation,
};
use serde::Serialize;

use crate::config::{IndicatorName, RunConfig};
use crate::output::{fmt_f64, fmt_opt, unix_now, Csv, OutputDir};
use crate::CliError;

/// Resolved inputs of one invocation.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub config: RunConfig,
    pub out: PathBuf,
    /// Snapshot file for the evaluation commands; defaults to `<out>/snapshots.bin`.
    pub snapshots: Option<PathBuf>,
}

impl RunContext {
    fn snapshot_path(&self) -> PathBuf {
        self.snapshots.clone().unwrap_or_else(|| self.out.join("snapshots.bin"))
    }

    fn config_hash(&self) -> String {
        crate::output::sha256_hex(self.config.canonical_json().as_bytes())
    }

    fn finish(&self, out: OutputDir, command: &str, started: f64) -> Result<Vec<PathBuf>, CliError> {
        out.finish(command, self.config_hash(), self.config.seed, started)
    }
}

fn space(cfg: &RunConfig) -> Result<DGSpace, CliError> {
    let mesh = build_cartesian_mesh(cfg.mesh.nx, cfg.mesh.ny, cfg.mesh.bounds())?;
    Ok(DGSpace::new(Arc::new(mesh), cfg.degree, cfg.system.components())?)
}

fn family(cfg: &RunConfig) -> impl Fn(&[f64]) -> fs_ddrom::Result<Box<dyn FriedrichsSystem>> + Sync + '_ {
    move |p: &[f64]| cfg.system.build(p).map_err(|e| fs_ddrom::Error::InvalidArgument(e.to_string()))
}

fn build(cfg: &RunConfig, p: &[f64]) -> Result<Box<dyn FriedrichsSystem>, CliError> {
    cfg.system.build(p)
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

pub fn cmd_converge(ctx: &RunContext) -> Result<Vec<PathBuf>, CliError> {
    let started = unix_now();
    let cfg = &ctx.config;
    let spec = cfg.converge.as_ref().ok_or_else(|| CliError::Config("converge needs a `converge` section".into()))?;
    let (exact, sys) = cfg.system.manufactured()?;
    let studies = convergence_study(&sys, exact.as_ref(), &spec.degrees, &spec.sizes, cfg.mesh.bounds())?;

    let mut csv = Csv::new(&["degree", "n", "h", "dofs", "l2", "energy", "triple", "slope_so_far"]);
    #[derive(Serialize)]
    struct DegreeSummary {
        degree: usize,
        slope: Option<f64>,
        threshold: f64,
        status: &'static str,
        monotone: bool,
    }
    let mut summary = Vec::new();
    for st in &studies {
        for l in &st.levels {
            csv.row(vec![
                st.degree.to_string(),
                l.n.to_string(),
                fmt_f64(l.h),
                l.dofs.to_string(),
                fmt_f64(l.l2),
                fmt_f64(l.energy),
                fmt_f64(l.triple),
                fmt_opt(l.slope_so_far),
            ]);
        }
        let threshold = st.degree as f64 + 0.3;
        let status = if st.exact {
            "exact"
        } else if st.slope.is_some_and(|s| s >= threshold) {
            "pass"
        } else {
            "fail"
        };
        log::info!("degree {}: slope {:?} ({status})", st.degree, st.slope);
        summary.push(DegreeSummary { degree: st.degree, slope: st.slope, threshold, status, monotone: st.monotone });
    }
    let mut out = OutputDir::create(&ctx.out)?;
    out.write("convergence.csv", &csv.into_bytes())?;
    #[derive(Serialize)]
    struct Summary {
        exact_tolerance: f64,
        degrees: Vec<DegreeSummary>,
    }
    out.write_json("convergence_summary.json", &Summary { exact_tolerance: EXACT_TOL, degrees: summary })?;
    ctx.finish(out, "converge", started)
}

pub fn cmd_snapshots(ctx: &RunContext) -> Result<Vec<PathBuf>, CliError> {
    let started = unix_now();
    let cfg = &ctx.config;
    let params = cfg.sample_list()?;
    let sp = space(cfg)?;
    // surface configuration problems before the parallel solves
    build(cfg, &params[0])?;
    let snaps = generate_snapshots(&family(cfg), &sp, &params)?;
    let (train, _) = train_test_split(params.len(), cfg.split.stride);

    let mut out = OutputDir::create(&ctx.out)?;
    let mut bytes = Vec::new();
    snaps.write_to(&mut bytes)?;
    out.write("snapshots.bin", &bytes)?;
    let p = snaps.param_dim();
    let mut header = vec!["index".to_string(), "is_train".to_string()];
    header.extend((0..p).map(|i| format!("p{i}")));
    let mut csv = Csv::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
    for (i, q) in params.iter().enumerate() {
        let mut row = vec![i.to_string(), train.contains(&i).to_string()];
        row.extend(q.iter().map(|v| fmt_f64(*v)));
        csv.row(row);
    }
    out.write("samples.csv", &csv.into_bytes())?;
    log::info!("{} snapshots with {} dofs, {} for training", params.len(), sp.num_dofs(), train.len());
    ctx.finish(out, "snapshots", started)
}

/// Loads the snapshot file and checks it against the configuration.
fn load_snapshots(ctx: &RunContext, sp: &DGSpace) -> Result<SnapshotSet, CliError> {
    let path = ctx.snapshot_path();
    let snaps = SnapshotSet::load(&path).map_err(|e| match e {
        fs_ddrom::Error::Io(io) => CliError::Io(format!("{}: {io}", path.display())),
        other => CliError::Io(format!("{}: {other}", path.display())),
    })?;
    if snaps.num_dofs() != sp.num_dofs() {
        return Err(CliError::Config(format!("snapshot file has {} rows but the configured space has {} dofs", snaps.num_dofs(), sp.num_dofs())));
    }
    if ctx.config.samples.is_some() && ctx.config.sample_list()? != snaps.params {
        return Err(CliError::Config("snapshot parameters differ from the configured samples".into()));
    }
    if snaps.is_empty() {
        return Err(CliError::Config("snapshot file has no columns".into()));
    }
    Ok(snaps)
}

const ESTIMATOR_COLUMNS: [&str; 9] = ["param_index", "is_train", "err_l2", "err_r", "err_energy", "eta_r", "eta_r_energy", "eta_l", "eta_l_energy"];

fn estimator_cells(index: usize, is_train: bool, e: &Estimate) -> Vec<String> {
    vec![
        index.to_string(),
        is_train.to_string(),
        fmt_opt(e.err_l2),
        fmt_opt(e.err_r),
        fmt_opt(e.err_energy),
        fmt_f64(e.eta_r),
        fmt_f64(e.eta_r_energy),
        fmt_f64(e.eta_l),
        fmt_f64(e.eta_l_energy),
    ]
}

/// Aggregates of one reduced model over all parameters.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ModelSummary {
    pub label: String,
    pub subdomains: usize,
    pub ranks: Vec<usize>,
    pub mean_train_l2: Option<f64>,
    pub mean_test_l2: Option<f64>,
    pub violations: usize,
    pub min_effectivity_l2: Option<f64>,
    pub max_effectivity_l2: Option<f64>,
}

#[derive(Default)]
struct Accumulator {
    train: Vec<f64>,
    test: Vec<f64>,
    eff: Vec<f64>,
    violations: usize,
}

impl Accumulator {
    fn add(&mut self, is_train: bool, e: &Estimate) {
        let err = e.err_l2.unwrap_or(0.0);
        if is_train {
            self.train.push(err);
        } else {
            self.test.push(err);
        }
        if err > 0.0 {
            self.eff.push(e.eta_l / err);
        }
        self.violations += e.violations();
    }

    fn summary(&self, label: String, subdomains: usize, ranks: Vec<usize>) -> ModelSummary {
        ModelSummary {
            label,
            subdomains,
            ranks,
            mean_train_l2: mean(&self.train),
            mean_test_l2: mean(&self.test),
            violations: self.violations,
            min_effectivity_l2: self.eff.iter().copied().reduce(f64::min),
            max_effectivity_l2: self.eff.iter().copied().reduce(f64::max),
        }
    }
}

fn column(snaps: &SnapshotSet, j: usize) -> Vec<f64> {
    snaps.matrix.column(j).iter().copied().collect()
}

pub fn cmd_rom_eval(ctx: &RunContext) -> Result<Vec<PathBuf>, CliError> {
    let started = unix_now();
    let cfg = &ctx.config;
    let sp = space(cfg)?;
    let snaps = load_snapshots(ctx, &sp)?;
    let n = snaps.len();
    let (train, _) = train_test_split(n, cfg.split.stride);
    let training = snaps.select(&train);
    let bases: Vec<ReducedBasis> = match cfg.rom.tolerance {
        Some(tol) => vec![pod(&training.matrix, Truncation::Energy(tol))?],
        None => cfg.rom.ranks.iter().map(|&r| pod(&training.matrix, Truncation::Rank(r))).collect::<Result<_, _>>()?,
    };
    let mut header = vec!["r"];
    header.extend(ESTIMATOR_COLUMNS);
    let mut csv = Csv::new(&header);
    let mut acc: Vec<Accumulator> = bases.iter().map(|_| Accumulator::default()).collect();
    let mut rows: Vec<Vec<Vec<String>>> = vec![Vec::new(); bases.len()];
    for j in 0..n {
        let asm = assemble_monolithic(build(cfg, &snaps.params[j])?.as_ref(), &sp)?;
        let zh = column(&snaps, j);
        let est = Estimator::new(&asm)?;
        let is_train = j % cfg.split.stride == 0;
        for (b, basis) in bases.iter().enumerate() {
            let (_, z) = online_solve(&project(&asm, basis)?, basis)?;
            let e = est.estimate(&z, Some(&zh))?;
            acc[b].add(is_train, &e);
            let mut cells = vec![basis.r().to_string()];
            cells.extend(estimator_cells(j, is_train, &e));
            rows[b].push(cells);
        }
    }
    for r in rows.into_iter().flatten() {
        csv.row(r);
    }
    let summary: Vec<ModelSummary> = bases.iter().zip(&acc).map(|(b, a)| a.summary(format!("rom r={}", b.r()), 1, vec![b.r()])).collect();
    let violations: usize = summary.iter().map(|s| s.violations).sum();
    let mut out = OutputDir::create(&ctx.out)?;
    out.write("rom_estimators.csv", &csv.into_bytes())?;
    out.write_json("rom_summary.json", &serde_json::json!({ "train": train.len(), "test": n - train.len(), "violations": violations, "models": summary }))?;
    let paths = ctx.finish(out, "rom-eval", started)?;
    if violations > 0 {
        return Err(CliError::Numeric(format!("{violations} estimator bound violations")));
    }
    Ok(paths)
}

fn indicator(cfg: &RunConfig, name: IndicatorName, snaps: &SnapshotSet, sp: &DGSpace) -> Result<IndicatorField, CliError> {
    let (n_neigh, r_t) = cfg.repartition.as_ref().map_or((3, 1), |r| (r.n_neigh, r.r_t));
    Ok(match name {
        IndicatorName::Variance => indicator_variance(snaps, sp)?,
        IndicatorName::Grassmannian => indicator_grassmannian(snaps, sp, n_neigh, r_t)?,
    })
}

/// A partition and the local rank vectors evaluated on it.
struct Variant {
    name: &'static str,
    partition: Partition,
    bases: Vec<LocalBases>,
}

pub fn cmd_ddrom_eval(ctx: &RunContext) -> Result<Vec<PathBuf>, CliError> {
    let started = unix_now();
    let cfg = &ctx.config;
    let sp = space(cfg)?;
    let snaps = load_snapshots(ctx, &sp)?;
    let n = snaps.len();
    let (train, _) = train_test_split(n, cfg.split.stride);
    let training = snaps.select(&train);

    let k = cfg.partition.subdomains;
    let stripe_ranks: Vec<Vec<usize>> = match &cfg.rom.local_ranks {
        Some(r) => vec![r.clone()],
        None => cfg.rom.ranks.iter().map(|&r| vec![r; k]).collect(),
    };
    let stripes = partition_stripes(&sp.mesh, k)?;
    let bases = stripe_ranks.iter().map(|r| local_pod(&training, &sp, &stripes, r)).collect::<Result<_, _>>()?;
    let mut variants = vec![Variant { name: "stripes", partition: stripes, bases }];
    if let Some(rp) = &cfg.repartition {
        let ind = indicator(cfg, rp.indicator, &training, &sp)?;
        let labels = repartition(&ind, rp.p_l, rp.k)?;
        let partition = partition_from_labels(&sp.mesh, &labels)?;
        let ranks: Vec<Vec<usize>> = match rp.local_ranks {
            Some(r) => vec![r.to_vec()],
            None => cfg.rom.ranks.iter().map(|&r| vec![r; 2]).collect(),
        };
        let bases = ranks.iter().map(|r| local_pod(&training, &sp, &partition, r)).collect::<Result<_, _>>()?;
        variants.push(Variant { name: "repartitioned", partition, bases });
    }
    // monodomain comparison at the same total dimension
    let mut totals: Vec<usize> = variants.iter().flat_map(|v| v.bases.iter().map(LocalBases::total_dim)).collect();
    totals.sort_unstable();
    totals.dedup();
    let max_rank = train.len().min(sp.num_dofs());
    let mono: Vec<(usize, ReducedBasis)> = totals
        .iter()
        .filter(|&&r| r <= max_rank)
        .map(|&r| pod(&training.matrix, Truncation::Rank(r)).map(|b| (r, b)))
        .collect::<Result<_, _>>()?;

    let mut header = vec!["variant", "subdomains", "ranks"];
    header.extend(ESTIMATOR_COLUMNS);
    let mut csv = Csv::new(&header);
    let model_count: usize = variants.iter().map(|v| v.bases.len()).sum();
    let mut acc: Vec<Accumulator> = (0..model_count).map(|_| Accumulator::default()).collect();
    let mut mono_acc: Vec<Accumulator> = mono.iter().map(|_| Accumulator::default()).collect();
    let mut rows: Vec<Vec<Vec<String>>> = vec![Vec::new(); model_count];
    for j in 0..n {
        let asm = assemble_monolithic(build(cfg, &snaps.params[j])?.as_ref(), &sp)?;
        let zh = column(&snaps, j);
        let est = Estimator::new(&asm)?;
        let is_train = j % cfg.split.stride == 0;
        let mut m = 0;
        for v in &variants {
            let blocks = block_assemble(&asm, &sp, &v.partition)?;
            for b in &v.bases {
                let z = solve_reduced(&block_project(&blocks, b)?, b)?;
                let e = est.estimate(&z, Some(&zh))?;
                acc[m].add(is_train, &e);
                let ranks = b.ranks().iter().map(usize::to_string).collect::<Vec<_>>().join(";");
                let mut cells = vec![v.name.to_string(), v.partition.num_subdomains.to_string(), ranks];
                cells.extend(estimator_cells(j, is_train, &e));
                rows[m].push(cells);
                m += 1;
            }
        }
        for ((_, basis), a) in mono.iter().zip(mono_acc.iter_mut()) {
            let (_, z) = online_solve(&project(&asm, basis)?, basis)?;
            a.add(is_train, &est.estimate(&z, Some(&zh))?);
        }
    }
    for r in rows.into_iter().flatten() {
        csv.row(r);
    }
    let mut summary = Vec::new();
    let mut m = 0;
    for v in &variants {
        for b in &v.bases {
            summary.push(acc[m].summary(v.name.to_string(), v.partition.num_subdomains, b.ranks()));
            m += 1;
        }
    }
    let monodomain: Vec<ModelSummary> = mono.iter().zip(&mono_acc).map(|((r, _), a)| a.summary(format!("monodomain r={r}"), 1, vec![*r])).collect();
    let violations: usize = summary.iter().map(|s| s.violations).sum();
    let mut out = OutputDir::create(&ctx.out)?;
    out.write("ddrom_estimators.csv", &csv.into_bytes())?;
    out.write_json(
        "ddrom_summary.json",
        &serde_json::json!({ "train": train.len(), "test": n - train.len(), "violations": violations, "models": summary, "monodomain": monodomain }),
    )?;
    let paths = ctx.finish(out, "ddrom-eval", started)?;
    if violations > 0 {
        return Err(CliError::Numeric(format!("{violations} estimator bound violations")));
    }
    Ok(paths)
}

fn indicator_csv(sp: &DGSpace, ind: &IndicatorField, labels: &[usize]) -> Csv {
    let mut csv = Csv::new(&["cell_id", "barycenter_x", "barycenter_y", "value", "label"]);
    for (c, cell) in sp.mesh.cells.iter().enumerate() {
        csv.row(vec![c.to_string(), fmt_f64(cell.barycenter[0]), fmt_f64(cell.barycenter[1]), fmt_f64(ind.values[c]), labels[c].to_string()]);
    }
    csv
}

/// Indicators and scans use the training columns, as the repartitioned
/// variant of `ddrom-eval` does.
pub fn cmd_indicators(ctx: &RunContext) -> Result<Vec<PathBuf>, CliError> {
    let started = unix_now();
    let cfg = &ctx.config;
    let sp = space(cfg)?;
    let snaps = load_snapshots(ctx, &sp)?;
    let (train, _) = train_test_split(snaps.len(), cfg.split.stride);
    let training = snaps.select(&train);
    let rp = cfg.repartition.clone().unwrap_or_else(|| serde_json::from_str("{}").expect("defaults"));

    let mut out = OutputDir::create(&ctx.out)?;
    let mut scan = Csv::new(&["P_l", "err_low", "err_high", "err_global", "indicator_kind"]);
    for name in [IndicatorName::Variance, IndicatorName::Grassmannian] {
        let ind = indicator(cfg, name, &training, &sp)?;
        let labels = repartition(&ind, rp.p_l, rp.k)?;
        let file = format!("indicator_{}.csv", ind.kind.name());
        out.write(&file, &indicator_csv(&sp, &ind, &labels).into_bytes())?;
        let s = rp.scan_ranks;
        for row in reconstruction_scan(&training, &sp, &ind, &rp.grid, s.low, s.high, s.global)? {
            scan.row(vec![fmt_f64(row.p_l), fmt_f64(row.err_low), fmt_f64(row.err_high), fmt_f64(row.err_global), row.kind.name().to_string()]);
        }
    }
    out.write("reconstruction_scan.csv", &scan.into_bytes())?;
    ctx.finish(out, "indicators", started)
}

pub fn cmd_check_axioms(ctx: &RunContext) -> Result<Vec<PathBuf>, CliError> {
    let started = unix_now();
    let cfg = &ctx.config;
    let params = match &cfg.samples {
        Some(_) => cfg.sample_list()?,
        None => vec![Vec::new()],
    };
    let mesh = build_cartesian_mesh(cfg.mesh.nx, cfg.mesh.ny, cfg.mesh.bounds())?;
    #[derive(Serialize)]
    struct Row {
        param_index: usize,
        params: Vec<f64>,
        mu0: f64,
        symmetric: bool,
        max_asymmetry: f64,
        positive: bool,
        min_positivity_eigenvalue: f64,
        monotone: bool,
        strictly_adjoint: bool,
        boundary_points: usize,
        passed: bool,
    }
    let mut rows = Vec::new();
    for (i, p) in params.iter().enumerate() {
        let sys = build(cfg, p)?;
        let r = check_axioms(sys.as_ref(), &mesh)?;
        rows.push(Row {
            param_index: i,
            params: p.clone(),
            mu0: sys.mu0(),
            symmetric: r.symmetric,
            max_asymmetry: r.max_asymmetry,
            positive: r.positive,
            min_positivity_eigenvalue: r.min_positivity_eigenvalue,
            monotone: r.monotone,
            strictly_adjoint: r.strictly_adjoint,
            boundary_points: r.points.len(),
            passed: r.all_passed(),
        });
    }
    let failed = rows.iter().filter(|r| !r.passed).count();
    let mut out = OutputDir::create(&ctx.out)?;
    out.write_json("axioms.json", &serde_json::json!({ "all_passed": failed == 0, "systems": rows }))?;
    let paths = ctx.finish(out, "check-axioms", started)?;
    if failed > 0 {
        return Err(CliError::Numeric(format!("{failed} parameter samples violate the system axioms")));
    }
    Ok(paths)
}

/// Reads a configuration and applies the command-line overrides.
pub fn resolve(config: &Path, out: Option<PathBuf>, seed: Option<u64>, snapshots: Option<PathBuf>) -> Result<RunContext, CliError> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
        cfg.validate()?;
    }
    let out = out.or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("out"));
    Ok(RunContext { config: cfg, out, snapshots })
}
