//! Subcommand implementations. Domain failures bubble up as errors (exit
//! 1 with a JSON payload on stderr); several commands signal pass/fail
//! through the exit code after printing a machine-readable report.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use wildlab::diagrams::{
    build_two_point_forests, power_count, power_count_time_diff, EvalContext,
    TimeDifferenceQuery, TwoPointKind,
};
use wildlab::exponent::{rat_from_f64, Exponent};
use wildlab::fields::{mollify, sample_gff, CovarianceSpec, GridSpec, Mollifier};
use wildlab::heat::TimeGrid;
use wildlab::params::{check_ci, kappa_guard, paper_parameters, solver_exponents};
use wildlab::picard::{
    admissible_horizon, picard_terms, solve_remainder, theta_norm, Nonlinearity,
    RemainderOptions,
};
use wildlab::study::{
    covariance_decay_study, heat_bound_spotcheck, saturated_mean_check, scaling_study_eps,
    scaling_study_lambda, scaling_study_time, solution_convergence_study, SeriesPoint,
    StudyConfig,
};
use wildlab::trees::{enumerate_trees, symmetry_factor, tree_stats, LabelledTree};
use wildlab::Field64;

use crate::manifest::RunDir;

// ---------------------------------------------------------------- trees --

#[derive(Args)]
pub struct TreesEnumerateArgs {
    /// Maximal leaf count.
    #[arg(long)]
    pub n_max: usize,
    /// Dimension used for the homogeneity column.
    #[arg(long, default_value_t = 3.0)]
    pub d: f64,
}

pub fn trees_enumerate(args: TreesEnumerateArgs) -> Result<i32> {
    let enumeration = enumerate_trees(args.n_max)?;
    let mut out = String::from("canonical,noise,deriv_edges,homogeneity,symmetry_factor\n");
    for tree in enumeration.all() {
        let stats = tree_stats(tree, args.d)?;
        let c = symmetry_factor(tree)?;
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            tree.canonical_form(),
            stats.noise,
            stats.deriv_edges,
            stats.homogeneity,
            c
        ));
    }
    print!("{out}");
    Ok(0)
}

// --------------------------------------------------------------- params --

#[derive(Args)]
pub struct ParamsCheckArgs {
    #[arg(long)]
    pub d: f64,
    #[arg(long)]
    pub kappa: f64,
}

pub fn params_check(args: ParamsCheckArgs) -> Result<i32> {
    let p = paper_parameters(args.d, args.kappa)?;
    let report = check_ci(&p);
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(if report.pass { 0 } else { 1 })
}

// ------------------------------------------------------------- diagrams --

#[derive(Args)]
pub struct DiagramsCertifyArgs {
    /// Tree in canonical syntax, e.g. "I(X)I'(X)".
    #[arg(long)]
    pub tree: String,
    #[arg(long)]
    pub d: f64,
    /// plain, eps-diff, or time-diff.
    #[arg(long, default_value = "plain")]
    pub kind: String,
    /// Exponent parameter for the difference variants.
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    /// Spatial exponent; defaults to each pairing's maximal admissible
    /// value.
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long, default_value_t = 2)]
    pub n_dim: usize,
}

pub fn diagrams_certify(args: DiagramsCertifyArgs) -> Result<i32> {
    let tree = LabelledTree::parse(&args.tree)?;
    if !tree.is_singular() {
        bail!("{} is not a singular tree", args.tree);
    }
    let kappa_eff = args.kappa.min(1.0).max(0.0);
    let kind = match args.kind.as_str() {
        "plain" => TwoPointKind::Plain,
        "eps-diff" => TwoPointKind::EpsDiff {
            kappa: rat_from_f64(kappa_eff).ok_or_else(|| anyhow!("bad kappa"))?,
        },
        "time-diff" => TwoPointKind::TimeDiff,
        other => bail!("unknown kind {other}; expected plain|eps-diff|time-diff"),
    };
    let ctx = EvalContext::from_f64(args.d, kappa_eff, args.n_dim)
        .ok_or_else(|| anyhow!("non-finite d or kappa"))?;
    let family = build_two_point_forests(&tree, kind.clone(), args.n_dim)?;
    let mut certificates = Vec::new();
    for forest in &family {
        let theta = match args.theta {
            Some(t) => Exponent::constant(rat_from_f64(t).ok_or_else(|| anyhow!("bad theta"))?),
            None => forest.theta_max(&ctx),
        };
        let cert = if matches!(kind, TwoPointKind::TimeDiff) {
            let pick = |root: usize| -> usize {
                let cs = forest.children(root);
                cs.iter()
                    .copied()
                    .find(|&c| forest.k_abs(c) == 1)
                    .unwrap_or(cs[0])
            };
            let kq =
                rat_from_f64((kappa_eff / 4.0).min(1.0)).ok_or_else(|| anyhow!("bad kappa"))?;
            let query = TimeDifferenceQuery {
                u: vec![pick(forest.rho()), pick(forest.rho_bar())],
                w: vec![pick(forest.rho()), pick(forest.rho_bar())],
                kappa: kq.clone(),
                kappa_bar: kq,
            };
            power_count_time_diff(forest, &query, &theta, &ctx)?
        } else {
            power_count(forest, &theta, &ctx)?
        };
        certificates.push(cert);
    }
    println!("{}", serde_json::to_string_pretty(&certificates)?);
    Ok(0)
}

// --------------------------------------------------------------- fields --

#[derive(Args)]
pub struct FieldsSampleArgs {
    #[arg(long)]
    pub d: f64,
    /// Spatial dimension of the torus.
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    /// Points per axis (power of two).
    #[arg(long)]
    pub m: usize,
    /// Mollification scale; 0 writes the raw band-limited field.
    #[arg(long)]
    pub eps: f64,
    #[arg(long)]
    pub seed: u64,
    /// Output path for the little-endian f64 row-major field; a JSON
    /// sidecar is written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct FieldSidecar {
    n: usize,
    m: usize,
    d: f64,
    eps: f64,
    seed: u64,
    layout: &'static str,
}

pub fn field_bytes(field: &Field64) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(field.values().len() * 8);
    for v in field.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    bytes
}

pub fn fields_sample(args: FieldsSampleArgs) -> Result<i32> {
    let grid = GridSpec::new(args.n, args.m)?;
    let cov = CovarianceSpec::new(args.d);
    let mut field: Field64 = sample_gff(grid, &cov, args.seed)?;
    if args.eps > 0.0 {
        field = mollify(&field, &Mollifier::new(args.eps)?)?;
    }
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(&args.out, field_bytes(&field))
        .with_context(|| format!("writing {}", args.out.display()))?;
    let sidecar = FieldSidecar {
        n: args.n,
        m: args.m,
        d: args.d,
        eps: args.eps,
        seed: args.seed,
        layout: "little-endian f64, row-major",
    };
    let sidecar_path = args.out.with_extension(
        args.out
            .extension()
            .map(|e| format!("{}.json", e.to_string_lossy()))
            .unwrap_or_else(|| "json".into()),
    );
    fs::write(&sidecar_path, serde_json::to_vec_pretty(&sidecar)?)?;
    Ok(0)
}

// ---------------------------------------------------------------- solve --

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveConfig {
    pub d: f64,
    /// Margin exponent; defaults to half the admissibility guard.
    pub kappa: Option<f64>,
    pub n_dim: usize,
    pub grid_m: usize,
    pub eps: f64,
    pub seed: u64,
    /// Horizon; defaults to 90% of the admissible bound, capped.
    pub t_horizon: Option<f64>,
    pub horizon_cap: f64,
    pub j_nodes: usize,
    pub q_grading: f64,
    pub snapshots: usize,
    pub nonlinearity: NlConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct NlConfig {
    pub b: f64,
    pub p: f64,
    pub q1: f64,
    pub q2: Vec<f64>,
    pub linear: f64,
    pub constant: f64,
}

impl Default for NlConfig {
    fn default() -> Self {
        NlConfig { b: 1.0, p: -1.0, q1: 0.0, q2: Vec::new(), linear: 0.0, constant: 0.0 }
    }
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            d: 3.0,
            kappa: None,
            n_dim: 2,
            grid_m: 128,
            eps: 1.0 / 16.0,
            seed: 1,
            t_horizon: None,
            horizon_cap: 0.05,
            j_nodes: 48,
            q_grading: 2.0,
            snapshots: 8,
            nonlinearity: NlConfig::default(),
        }
    }
}

#[derive(Args)]
pub struct SolveArgs {
    /// JSON configuration file; omitted fields take defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub eps: Option<f64>,
}

fn load_config<T: serde::de::DeserializeOwned + Default>(path: &Option<PathBuf>) -> Result<T> {
    match path {
        Some(p) => {
            let bytes = fs::read(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(serde_json::from_slice(&bytes)
                .with_context(|| format!("parsing {}", p.display()))?)
        }
        None => Ok(T::default()),
    }
}

pub fn solve(args: SolveArgs) -> Result<i32> {
    let mut cfg: SolveConfig = load_config(&args.config)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(e) = args.eps {
        cfg.eps = e;
    }
    if cfg.nonlinearity.q2.is_empty() {
        cfg.nonlinearity.q2 = vec![0.0; cfg.n_dim];
    }

    let kappa = match cfg.kappa {
        Some(k) => k,
        None => kappa_guard(cfg.d)? / 2.0,
    };
    let params = paper_parameters(cfg.d, kappa)?;
    let report = check_ci(&params);
    if !report.pass {
        bail!("admissibility check failed at d = {}, kappa = {kappa}", cfg.d);
    }
    let exps = solver_exponents(&report)?;
    let nl = Nonlinearity {
        dim_e: 1,
        b: cfg.nonlinearity.b,
        p: cfg.nonlinearity.p,
        q1: cfg.nonlinearity.q1,
        q2: cfg.nonlinearity.q2.clone(),
        linear: cfg.nonlinearity.linear,
        constant: cfg.nonlinearity.constant,
    };

    let grid = GridSpec::new(cfg.n_dim, cfg.grid_m)?;
    let cov = CovarianceSpec::new(cfg.d);
    let x: Field64 = sample_gff(grid, &cov, cfg.seed)?;
    let xeps = mollify(&x, &Mollifier::new(cfg.eps)?)?;

    // Data size on a fixed probe grid sets the admissible horizon.
    let probe_grid = TimeGrid::graded(1.0, 16, cfg.q_grading)?;
    let probe = picard_terms(&xeps, &params, &nl, &probe_grid)?;
    let k = theta_norm(&probe)?.max(1.0);
    let opts = RemainderOptions { ball_radius: Some(k), ..Default::default() };
    let horizon = match cfg.t_horizon {
        Some(t) => t,
        None => (0.9 * admissible_horizon(&exps, k, opts.eps_c)).min(cfg.horizon_cap),
    };

    let solve_grid = TimeGrid::graded(horizon, cfg.j_nodes, cfg.q_grading)?;
    let bundle = picard_terms(&xeps, &params, &nl, &solve_grid)?;
    let solution = solve_remainder(&bundle, &exps, &nl, &opts)?;

    let resolved = serde_json::to_value(&cfg)?;
    let mut run = RunDir::create(&args.out, "solve", resolved)?;
    let count = cfg.snapshots.max(1).min(cfg.j_nodes);
    for i in 0..count {
        let node = ((i + 1) * cfg.j_nodes / count - 1).min(cfg.j_nodes - 1);
        let name = format!("a_{node:03}.f64");
        run.write_output(&name, &field_bytes(&solution.solution.fields[node]))?;
        let sidecar = serde_json::json!({
            "n": cfg.n_dim,
            "m": cfg.grid_m,
            "d": cfg.d,
            "eps": cfg.eps,
            "seed": cfg.seed,
            "time": solve_grid.nodes[node],
            "layout": "little-endian f64, row-major",
        });
        run.write_output(&format!("a_{node:03}.f64.json"), &serde_json::to_vec_pretty(&sidecar)?)?;
    }
    let summary = serde_json::json!({
        "params": params,
        "ci_report": report,
        "theta_remainder": exps.theta_remainder,
        "kappa_hat": exps.kappa_hat,
        "theta_norm": k,
        "horizon": horizon,
        "bt_norm": solution.bt_norm,
        "iterations": solution.iterations,
    });
    run.write_output("solve.json", &serde_json::to_vec_pretty(&summary)?)?;
    run.finish()?;
    Ok(0)
}

// ---------------------------------------------------------------- study --

#[derive(Args)]
pub struct StudyArgs {
    /// lambda, eps, time, covariance, heat-bound, convergence, or
    /// vanishing.
    pub kind: String,
    /// JSON configuration file; omitted fields take defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub d: Option<f64>,
    #[arg(long)]
    pub grid_m: Option<usize>,
}

fn series_csv(rows: &[(String, Vec<SeriesPoint>)]) -> String {
    let mut out = String::from("series,scale,estimate,stderr\n");
    for (name, points) in rows {
        for p in points {
            out.push_str(&format!("{name},{},{},{}\n", p.scale, p.estimate, p.stderr));
        }
    }
    out
}

pub fn study(args: StudyArgs) -> Result<i32> {
    let mut cfg: StudyConfig = load_config(&args.config)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(s) = args.samples {
        cfg.samples = s;
    }
    if let Some(d) = args.d {
        cfg.d = d;
    }
    if let Some(m) = args.grid_m {
        cfg.grid_m = m;
    }

    let resolved = serde_json::to_value(&cfg)?;
    let mut run = RunDir::create(&args.out, &format!("study {}", args.kind), resolved)?;
    let pass = match args.kind.as_str() {
        "lambda" => {
            let rep = scaling_study_lambda(&cfg)?;
            run.write_output(
                "series.csv",
                series_csv(&[(rep.study.clone(), rep.series.clone())]).as_bytes(),
            )?;
            run.write_output("report.json", &serde_json::to_vec_pretty(&rep)?)?;
            rep.pass
        }
        "eps" => {
            let rep = scaling_study_eps(&cfg)?;
            run.write_output(
                "series.csv",
                series_csv(&[(rep.study.clone(), rep.series.clone())]).as_bytes(),
            )?;
            run.write_output("report.json", &serde_json::to_vec_pretty(&rep)?)?;
            rep.pass
        }
        "time" => {
            let rep = scaling_study_time(&cfg)?;
            run.write_output(
                "series.csv",
                series_csv(&[(rep.study.clone(), rep.series.clone())]).as_bytes(),
            )?;
            run.write_output("report.json", &serde_json::to_vec_pretty(&rep)?)?;
            rep.pass
        }
        "covariance" => {
            let rep = covariance_decay_study(&cfg)?;
            run.write_output(
                "series.csv",
                series_csv(&[
                    (rep.spatial.study.clone(), rep.spatial.series.clone()),
                    (rep.derivative.study.clone(), rep.derivative.series.clone()),
                    (rep.eps_diff.study.clone(), rep.eps_diff.series.clone()),
                ])
                .as_bytes(),
            )?;
            run.write_output("report.json", &serde_json::to_vec_pretty(&rep)?)?;
            rep.pass
        }
        "heat-bound" => {
            let rep = heat_bound_spotcheck(&cfg)?;
            let rows: Vec<SeriesPoint> = rep
                .cases
                .iter()
                .map(|c| SeriesPoint {
                    scale: c.alpha + c.k_abs as f64 * 10.0,
                    estimate: c.spread,
                    stderr: 0.0,
                })
                .collect();
            run.write_output(
                "series.csv",
                series_csv(&[("heat-bound-spread".into(), rows)]).as_bytes(),
            )?;
            run.write_output("report.json", &serde_json::to_vec_pretty(&rep)?)?;
            rep.pass
        }
        "convergence" => {
            let rep = solution_convergence_study(&cfg)?;
            let rows: Vec<SeriesPoint> = rep
                .pairs
                .iter()
                .map(|p| SeriesPoint {
                    scale: p.eps,
                    estimate: p.median_increment,
                    stderr: 0.0,
                })
                .collect();
            run.write_output(
                "series.csv",
                series_csv(&[("cauchy-increment".into(), rows)]).as_bytes(),
            )?;
            run.write_output("report.json", &serde_json::to_vec_pretty(&rep)?)?;
            rep.pass
        }
        "vanishing" => {
            let rep = saturated_mean_check(&cfg)?;
            let rows: Vec<SeriesPoint> = rep
                .probes
                .iter()
                .enumerate()
                .map(|(i, p)| SeriesPoint {
                    scale: i as f64 + 1.0,
                    estimate: p.mean.abs().max(f64::MIN_POSITIVE),
                    stderr: p.stderr,
                })
                .collect();
            run.write_output(
                "series.csv",
                series_csv(&[("saturated-mean".into(), rows)]).as_bytes(),
            )?;
            run.write_output("report.json", &serde_json::to_vec_pretty(&rep)?)?;
            rep.pass
        }
        other => bail!(
            "unknown study {other}; expected lambda|eps|time|covariance|heat-bound|convergence|vanishing"
        ),
    };
    run.finish()?;
    let mut stdout = std::io::stdout();
    writeln!(stdout, "{}", serde_json::json!({ "study": args.kind, "pass": pass }))?;
    Ok(if pass { 0 } else { 1 })
}

