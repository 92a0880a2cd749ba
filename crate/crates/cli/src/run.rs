//! Experiment dispatch.

use crate::config::{ConfigError, ExperimentConfig, ExperimentKind};
use crate::output::{Manifest, Table};
use ctqrw::engine::{ensemble_average, run_realization, split_seed, EnsembleOptions, Observable, RealizationOptions};
use ctqrw::kernels::{classify_kernel, waiting_from_kernel, Certificate, MemoryKernel, Verdict};
use ctqrw::linalg::{hermitian_eigen, min_hermitian_eigenvalue, CMat};
use ctqrw::models::{
    intrinsic_decoherence, qubit_closed_solution, qubit_kraus, wigner_ctrw, QubitModel, WignerWalkConfig,
};
use ctqrw::quantum::{bloch_vector, linear_entropy, DensityMatrix, KrausMap};
use ctqrw::solvers::{cp_defect_over_time, propagate, short_time_entropy};
use ctqrw::{StateTrajectory, TimeGrid};
use serde_json::{json, Value};
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numeric failure in {operation}: {message}")]
    Numeric { operation: &'static str, message: String },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Numeric { .. } => 3,
        }
    }
}

trait Numeric<T> {
    fn during(self, operation: &'static str) -> Result<T, RunError>;
}

impl<T, E: Display> Numeric<T> for Result<T, E> {
    fn during(self, operation: &'static str) -> Result<T, RunError> {
        self.map_err(|e| RunError::Numeric { operation, message: e.to_string() })
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub results: Value,
}

/// What an experiment produced before it is written out.
struct Produced {
    table: Option<Table>,
    extra_files: Vec<(String, Extra)>,
    results: Value,
}

enum Extra {
    Csv(Table),
    Json(Value),
}

impl Produced {
    fn table(table: Table, results: Value) -> Self {
        Self { table: Some(table), extra_files: Vec::new(), results }
    }
}

/// Runs `cfg`, writing `<stem>.csv` (when tabular), any side files and
/// `<stem>.manifest.json` into `out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path, threads: usize) -> Result<RunReport, RunError> {
    let start = Instant::now();
    if let Some(g) = &cfg.grid {
        g.build(1.0)?;
    }
    let produced = match cfg.experiment {
        ExperimentKind::Realizations => realizations(cfg)?,
        ExperimentKind::Ensemble => ensemble(cfg)?,
        ExperimentKind::Solve => solve(cfg)?,
        ExperimentKind::Classify => classify(cfg)?,
        ExperimentKind::CpAudit => cp_audit(cfg)?,
        ExperimentKind::Entropy => entropy(cfg)?,
        ExperimentKind::Wigner => wigner(cfg)?,
        ExperimentKind::Intrinsic => intrinsic(cfg)?,
        ExperimentKind::Figure1 => figure1(cfg)?,
        ExperimentKind::Figure2 => figure2(cfg)?,
        ExperimentKind::Figure3 | ExperimentKind::Figure4 => entropy_comparison(cfg)?,
    };

    std::fs::create_dir_all(out_dir).map_err(|e| ConfigError::new("out-dir", e))?;
    let stem = cfg.stem();
    let io_err = |e: std::io::Error| ConfigError::new("out-dir", e);
    let mut files = Vec::new();
    let mut columns = Vec::new();
    if let Some(t) = &produced.table {
        let p = out_dir.join(format!("{stem}.csv"));
        t.write_csv(&p).map_err(io_err)?;
        columns = t.columns.clone();
        files.push(p);
    }
    for (suffix, extra) in &produced.extra_files {
        let p = out_dir.join(format!("{stem}.{suffix}"));
        match extra {
            Extra::Csv(t) => t.write_csv(&p).map_err(io_err)?,
            Extra::Json(v) => write_json(&p, v).map_err(io_err)?,
        }
        files.push(p);
    }
    let manifest = Manifest {
        schema_version: 1,
        experiment: cfg.experiment.name().to_string(),
        config: serde_json::to_value(cfg).expect("config serializes"),
        seeds: vec![cfg.run.seed],
        seed_derivation: "stream k uses split_seed(seed, k) (SplitMix64), ChaCha8 generator".into(),
        library_version: ctqrw::VERSION.to_string(),
        cli_version: env!("CARGO_PKG_VERSION").to_string(),
        threads,
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs: files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect(),
        columns,
        results: produced.results.clone(),
    };
    let mp = out_dir.join(format!("{stem}.manifest.json"));
    write_json(&mp, &serde_json::to_value(&manifest).expect("manifest serializes")).map_err(io_err)?;
    files.push(mp);
    Ok(RunReport { files, results: produced.results })
}

fn write_json(path: &Path, v: &Value) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(v).expect("json");
    text.push('\n');
    std::fs::write(path, text)
}

fn kernel_and_grid(cfg: &ExperimentConfig) -> Result<(MemoryKernel, TimeGrid), RunError> {
    let k = cfg.kernel()?;
    let grid = cfg.grid_spec()?.build(k.time_scale())?;
    Ok((k, grid))
}

fn qubit_setup(cfg: &ExperimentConfig) -> Result<(QubitModel, KrausMap, DensityMatrix), RunError> {
    let model = cfg.model()?;
    let e = qubit_kraus(&model).map_err(|e| ConfigError::new("model", e))?;
    Ok((model, e, cfg.initial_state()?))
}

fn bloch_columns(table: &mut Table, states: &[CMat], suffix: &str) {
    let b: Vec<[f64; 3]> = states.iter().map(bloch_vector).collect();
    for (j, name) in ["Mx", "My", "Mz"].iter().enumerate() {
        table.push(format!("{name}{suffix}"), "1", b.iter().map(|v| v[j]).collect());
    }
}

fn time_table(grid: &[f64]) -> Table {
    let mut t = Table::default();
    t.push("t", "s", grid.to_vec());
    t
}

fn realizations(cfg: &ExperimentConfig) -> Result<Produced, RunError> {
    let (_, e, rho0) = qubit_setup(cfg)?;
    let (k, grid) = kernel_and_grid(cfg)?;
    let w = waiting_from_kernel(&k).during("waiting_from_kernel")?;
    let n = cfg.realizations()?;
    let opts = RealizationOptions { observables: Vec::new(), store_states: true };
    let mut table = time_table(grid.points());
    let mut totals = Vec::with_capacity(n);
    for r in 0..n {
        let tr = run_realization(&rho0, &e, &w, &grid, split_seed(cfg.run.seed, r as u64), &opts)
            .during("run_realization")?;
        bloch_columns(&mut table, tr.states.as_deref().expect("stored"), &format!("_{r}"));
        table.push(format!("events_{r}"), "1", tr.event_counts.iter().map(|&c| c as f64).collect());
        totals.push(*tr.event_counts.last().expect("non-empty grid"));
    }
    Ok(Produced::table(table, json!({ "events_at_end": totals })))
}

fn ensemble(cfg: &ExperimentConfig) -> Result<Produced, RunError> {
    let (_, e, rho0) = qubit_setup(cfg)?;
    let (k, grid) = kernel_and_grid(cfg)?;
    let w = waiting_from_kernel(&k).during("waiting_from_kernel")?;
    let mut observables = Observable::bloch();
    observables.push(Observable::LinearEntropy);
    let opts = EnsembleOptions { observables, threads: None };
    let st = ensemble_average(&rho0, &e, &w, &grid, cfg.realizations()?, cfg.run.seed, &opts)
        .during("ensemble_average")?;
    let mut table = time_table(grid.points());
    for o in &st.observables {
        table.push(format!("mean_{}", o.name), "1", o.mean.clone());
        table.push(format!("stderr_{}", o.name), "1", o.stderr.clone());
    }
    table.push("mean_events", "1", st.mean_events.clone());
    Ok(Produced::table(table, json!({ "realizations": st.n_realizations })))
}

fn solve_states(cfg: &ExperimentConfig) -> Result<(StateTrajectory, KrausMap, DensityMatrix, MemoryKernel, TimeGrid), RunError> {
    let (_, e, rho0) = qubit_setup(cfg)?;
    let (k, grid) = kernel_and_grid(cfg)?;
    let traj = propagate(cfg.run.route.route(), &e, &k, rho0.matrix(), &grid).during("propagate")?;
    Ok((traj, e, rho0, k, grid))
}

fn solve(cfg: &ExperimentConfig) -> Result<Produced, RunError> {
    let (traj, ..) = solve_states(cfg)?;
    let mut table = time_table(&traj.grid);
    bloch_columns(&mut table, &traj.states, "");
    table.push("linear_entropy", "1", traj.map(linear_entropy));
    table.push("min_eigenvalue", "1", traj.map(min_hermitian_eigenvalue));
    Ok(Produced::table(table, json!({ "trace_drift": traj.trace_drift() })))
}

fn verdict_json(k: &MemoryKernel) -> Result<Value, RunError> {
    let v = classify_kernel(k).during("classify_kernel")?;
    let (verdict, condition) = match &v.verdict {
        Verdict::Safe => ("Safe", None),
        Verdict::Dangerous => ("Dangerous", None),
        Verdict::SafeConditional { condition } => ("SafeConditional", Some(condition.clone())),
    };
    let witness = match v.certificate {
        Certificate::NegativeWaiting { t, scaled_pdf, log_abs_pdf } => {
            json!({ "t": t, "scaled_pdf": scaled_pdf, "log_abs_pdf": log_abs_pdf })
        }
        _ => Value::Null,
    };
    Ok(json!({
        "kernel": k.name(),
        "verdict": verdict,
        "condition": condition,
        "certificate": v.certificate.to_string(),
        "witness": witness,
    }))
}

fn classify(cfg: &ExperimentConfig) -> Result<Produced, RunError> {
    let v = verdict_json(&cfg.kernel()?)?;
    Ok(Produced { table: None, extra_files: vec![("verdict.json".into(), Extra::Json(v.clone()))], results: v })
}

fn cp_audit(cfg: &ExperimentConfig) -> Result<Produced, RunError> {
    let (traj, e, _, k, grid) = solve_states(cfg)?;
    let defects = cp_defect_over_time(cfg.run.route.route(), &e, &k, &grid).during("cp_defect_over_time")?;
    let min = defects.iter().copied().fold(f64::INFINITY, f64::min);
    let mut table = time_table(grid.points());
    table.push("cp_defect", "1", defects);
    table.push("min_eigenvalue", "1", traj.map(min_hermitian_eigenvalue));
    Ok(Produced::table(table, json!({ "min_cp_defect": min, "completely_positive": min >= -1e-9, "tolerance": 1e-9 })))
}

fn pure_vector(rho: &DensityMatrix) -> Result<ctqrw::CVec, RunError> {
    let (vals, vecs) = hermitian_eigen(rho.matrix());
    let top = *vals.last().expect("non-empty");
    if (top - 1.0).abs() > 1e-10 {
        return Err(ConfigError::new("initial.bloch", "the short-time entropy law needs a pure initial state").into());
    }
    Ok(vecs.column(vals.len() - 1).into_owned())
}

fn entropy(cfg: &ExperimentConfig) -> Result<Produced, RunError> {
    let (traj, e, rho0, k, _) = solve_states(cfg)?;
    let st = short_time_entropy(&e, &pure_vector(&rho0)?, &k).during("short_time_entropy")?;
    let pred = traj.grid.iter().map(|&t| st.predict(t)).collect::<Result<Vec<_>, _>>().during("short_time_entropy")?;
    let mut table = time_table(&traj.grid);
    table.push("linear_entropy", "1", traj.map(linear_entropy));
    table.push("short_time_prediction", "1", pred);
    Ok(Produced::table(table, json!({ "coefficient": st.coefficient, "exponent": st.exponent() })))
}

fn kernel_label(k: &MemoryKernel) -> Result<String, RunError> {
    Ok(match k {
        MemoryKernel::Exponential { .. } => match classify_kernel(k).during("classify_kernel")?.verdict {
            Verdict::Dangerous => "exponential_dangerous".into(),
            _ => "exponential_safe".into(),
        },
        other => other.name().to_string(),
    })
}

fn entropy_comparison(cfg: &ExperimentConfig) -> Result<Produced, RunError> {
    let (model, _, rho0) = qubit_setup(cfg)?;
    let specs = match (&cfg.kernel, cfg.kernels.is_empty()) {
        (_, false) => cfg.kernels.clone(),
        (Some(k), true) => vec![k.clone()],
        (None, true) => return Err(ConfigError::new("kernels", "at least one kernel is required").into()),
    };
    let grid = cfg.grid_spec()?.build(specs[0].build()?.time_scale())?;
    let mut table = time_table(grid.points());
    let mut summary = serde_json::Map::new();
    for spec in &specs {
        let k = spec.build()?;
        let label = kernel_label(&k)?;
        let sol = qubit_closed_solution(&model, &k, &rho0, &grid).during("qubit_closed_solution")?;
        let delta = sol.trajectory.map(linear_entropy);
        let min = delta.iter().copied().fold(f64::INFINITY, f64::min);
        summary.insert(label.clone(), json!({ "kernel": spec, "min_linear_entropy": min }));
        table.push(format!("delta_{label}"), "1", delta);
    }
    Ok(Produced::table(table, Value::Object(summary)))
}

fn figure1(cfg: &ExperimentConfig) -> Result<Produced, RunError> {
    let (_, e, rho0) = qubit_setup(cfg)?;
    let (k, grid) = kernel_and_grid(cfg)?;
    let w = waiting_from_kernel(&k).during("waiting_from_kernel")?;
    let opts = RealizationOptions { observables: Observable::bloch(), store_states: false };
    let tr = run_realization(&rho0, &e, &w, &grid, split_seed(cfg.run.seed, 0), &opts).during("run_realization")?;
    let mx = tr.observable("Mx").expect("bloch").to_vec();
    let my = tr.observable("My").expect("bloch").to_vec();
    let mz = tr.observable("Mz").expect("bloch").to_vec();
    let nx: Vec<f64> = mx.iter().map(|v| v / mx[0]).collect();
    let ny: Vec<f64> = my.iter().map(|v| v / my[0]).collect();
    let same = nx.iter().zip(&ny).all(|(a, b)| (a - b).abs() < 1e-12);
    let mut table = time_table(grid.points());
    table.push("Mx", "1", mx);
    table.push("My", "1", my);
    table.push("Mz", "1", mz);
    table.push("events", "1", tr.event_counts.iter().map(|&c| c as f64).collect());
    Ok(Produced::table(table, json!({ "normalized_my_equals_mx": same, "events": tr.event_times.len() })))
}

fn figure2(cfg: &ExperimentConfig) -> Result<Produced, RunError> {
    let (model, e, rho0) = qubit_setup(cfg)?;
    let (k, grid) = kernel_and_grid(cfg)?;
    let w = waiting_from_kernel(&k).during("waiting_from_kernel")?;
    let opts = EnsembleOptions { observables: vec![Observable::bloch().remove(0)], threads: None };
    let st = ensemble_average(&rho0, &e, &w, &grid, cfg.realizations()?, cfg.run.seed, &opts)
        .during("ensemble_average")?;
    let exact = qubit_closed_solution(&model, &k, &rho0, &grid).during("qubit_closed_solution")?;
    let analytic: Vec<f64> = exact.trajectory.states.iter().map(|s| bloch_vector(s)[0]).collect();
    let mx = st.observable("Mx").expect("requested");
    let mut outside = 0;
    let mut max_z: f64 = 0.0;
    for ((m, s), a) in mx.mean.iter().zip(&mx.stderr).zip(&analytic) {
        let d = (m - a).abs();
        if d > 3.0 * s + 1e-14 {
            outside += 1;
        }
        if *s > 0.0 {
            max_z = max_z.max(d / s);
        }
    }
    let mut table = time_table(grid.points());
    table.push("mc_mean_Mx", "1", mx.mean.clone());
    table.push("mc_stderr", "1", mx.stderr.clone());
    table.push("analytic_Mx", "1", analytic);
    Ok(Produced::table(
        table,
        json!({ "realizations": st.n_realizations, "points_outside_3_stderr": outside, "max_abs_z": max_z }),
    ))
}

fn wigner(cfg: &ExperimentConfig) -> Result<Produced, RunError> {
    let spec = cfg.wigner.as_ref().ok_or_else(|| ConfigError::new("wigner", "missing section"))?;
    let (k, grid) = kernel_and_grid(cfg)?;
    if spec.walkers == 0 {
        return Err(ConfigError::new("wigner.walkers", "must be at least 1").into());
    }
    if spec.bins == 0 {
        return Err(ConfigError::new("wigner.bins", "must be at least 1").into());
    }
    let wc = WignerWalkConfig {
        jump: spec.jump.build()?,
        kernel: k,
        n_walkers: spec.walkers,
        initial: spec.initial(),
        histogram_bins: spec.bins,
        histogram_radius: spec.radius,
    };
    let r = wigner_ctrw(&wc, &grid, cfg.run.seed).during("wigner_ctrw")?;
    let mut table = time_table(&r.grid);
    table.push("mean_count", "1", r.mean_count.clone());
    table.push("count_stderr", "1", r.count_stderr.clone());
    if let (Some(n), Some(s)) = (&r.n_estimate, &r.n_estimate_stderr) {
        table.push("n_estimate", "1", n.clone());
        table.push("n_estimate_stderr", "1", s.clone());
    }
    table.push("n_positions", "1", r.n_positions.clone());
    table.push("n_positions_stderr", "1", r.n_positions_stderr.clone());

    let edges = &r.histogram.edges;
    let mut hist = Table::default();
    let (mut t, mut lo, mut hi, mut count) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (i, row) in r.histogram.counts.iter().enumerate() {
        for (b, &c) in row.iter().enumerate() {
            t.push(r.grid[i]);
            lo.push(edges[b]);
            hi.push(edges[b + 1]);
            count.push(c as f64);
        }
    }
    hist.push("t", "s", t);
    hist.push("r_lo", "1", lo);
    hist.push("r_hi", "1", hi);
    hist.push("count", "1", count);
    Ok(Produced {
        table: Some(table),
        extra_files: vec![("histogram.csv".into(), Extra::Csv(hist))],
        results: json!({ "walkers": spec.walkers, "n0": wc.initial.n0() }),
    })
}

fn intrinsic(cfg: &ExperimentConfig) -> Result<Produced, RunError> {
    let spec = cfg.intrinsic.as_ref().ok_or_else(|| ConfigError::new("intrinsic", "missing section"))?;
    let (k, grid) = kernel_and_grid(cfg)?;
    let model = spec.spectrum()?;
    let rho0 = spec.state()?;
    let sol = intrinsic_decoherence(&model, &k, &rho0, &grid).during("intrinsic_decoherence")?;
    let d = model.levels.len();
    let mut table = time_table(&sol.trajectory.grid);
    let mut rates = Vec::new();
    for n in 0..d {
        for m in n..d {
            table.push(format!("re_rho_{n}{m}"), "1", sol.trajectory.map(|s| s[(n, m)].re));
            if n != m {
                table.push(format!("im_rho_{n}{m}"), "1", sol.trajectory.map(|s| s[(n, m)].im));
                let g = sol.rates[(n, m)];
                rates.push(json!({ "n": n, "m": m, "re": g.re, "im": g.im }));
            }
        }
    }
    Ok(Produced::table(table, json!({ "rates": rates })))
}
