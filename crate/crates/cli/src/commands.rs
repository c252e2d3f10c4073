use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use ridgenet::data::Dataset;
use ridgenet::estimators::{fit_pp, fit_smooth, FittedEstimator, ModelConfig};
use ridgenet::features::{cube_feature_count, projection_feature_count};
use ridgenet::netblocks::{bound_suite, BoundCheck};
use ridgenet::simbench::{rate_experiment, run_benchmark};

use crate::config::{EstimatorKind, RunConfig};
use crate::table::{read_table_file, write_predictions};

/// How a command ended when it did not hit a hard error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// The work ran but an audit or check did not pass.
    Failed(String),
}

fn write_output(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn required<'a>(p: &'a Option<PathBuf>, name: &str) -> Result<&'a Path> {
    p.as_deref().with_context(|| format!("missing --{name}"))
}

pub fn fit(cfg: &RunConfig) -> Result<Outcome> {
    let input = required(&cfg.input, "input")?;
    let model_path = required(&cfg.model, "model")?;
    let table = read_table_file(input, true)?;
    let y = table.y.unwrap_or_default();
    let data = Dataset::new(table.x, y)?;
    if data.is_empty() {
        bail!("{} has no data rows", input.display());
    }
    let (n, d) = (data.len(), table.dim);

    let j = match cfg.estimator {
        EstimatorKind::Smooth => {
            let c = cfg.smooth.resolve(n, d)?;
            cube_feature_count(d, c.max_degree, c.resolution)?
        }
        EstimatorKind::Projection => {
            let c = cfg.projection_config().resolve(n, d)?;
            projection_feature_count(d, c.max_degree, c.resolution, c.directions)?
        }
    };
    if j > cfg.max_features {
        bail!(
            "refusing to fit: J = {j} features exceeds max_features = {}",
            cfg.max_features
        );
    }

    let start = Instant::now();
    let est = match cfg.estimator {
        EstimatorKind::Smooth => fit_smooth(&data, &cfg.smooth)?,
        EstimatorKind::Projection => fit_pp(&data, &cfg.projection_config())?,
    };
    let elapsed = start.elapsed();
    write_output(model_path, &est.to_json()?)?;

    println!("estimator           {:?}", cfg.estimator);
    println!("samples             {n}");
    println!("dimension           {d}");
    println!("features J          {}", est.coefficients().len());
    println!("training objective  {:.10e}", est.training_objective());
    println!(
        "coefficient audit   {}",
        if est.audit_passed() {
            "passed"
        } else {
            "FAILED"
        }
    );
    if let Some(k) = est.selected_trial() {
        println!("selected trial      {k}");
    }
    println!("wall time           {:.3} s", elapsed.as_secs_f64());
    println!("model               {}", model_path.display());

    Ok(if est.audit_passed() {
        Outcome::Success
    } else {
        Outcome::Failed("coefficient bound audit failed".into())
    })
}

fn model_seed(est: &FittedEstimator) -> String {
    match est.config() {
        ModelConfig::Projection(c) => c.seed.to_string(),
        ModelConfig::Smooth(_) => "none".into(),
    }
}

pub fn predict(cfg: &RunConfig) -> Result<Outcome> {
    let input = required(&cfg.input, "input")?;
    let model_path = required(&cfg.model, "model")?;
    let text = std::fs::read_to_string(model_path)
        .with_context(|| format!("reading {}", model_path.display()))?;
    let est = FittedEstimator::from_json(&text)
        .with_context(|| format!("loading model {}", model_path.display()))?;
    let table = read_table_file(input, false)?;
    if table.dim != est.dim() {
        bail!(
            "dimension mismatch: model expects d = {}, {} has {} input columns",
            est.dim(),
            input.display(),
            table.dim
        );
    }
    let pred = est.predict_many(&table.x)?;
    let header = vec![
        format!("model={}", model_path.display()),
        format!(
            "model_config={}",
            serde_json::to_string(est.config()).unwrap_or_default()
        ),
        format!("seed={}", model_seed(&est)),
    ];
    let out = write_predictions(&header, &pred);
    match &cfg.output {
        Some(p) => write_output(p, &out)?,
        None => print!("{out}"),
    }
    Ok(Outcome::Success)
}

pub fn bench(cfg: &RunConfig) -> Result<Outcome> {
    let bc = cfg.bench_config();
    let start = Instant::now();
    let report = run_benchmark(&bc)?;
    let csv = report.to_csv();
    let md = report.to_markdown();
    match &cfg.output {
        Some(p) => {
            write_output(p, &csv)?;
            write_output(&p.with_extension("md"), &md)?;
            print!("{md}");
        }
        None => print!("{csv}"),
    }
    eprintln!("bench finished in {:.1} s", start.elapsed().as_secs_f64());
    let failures = report.failure_count();
    Ok(if failures == 0 {
        Outcome::Success
    } else {
        Outcome::Failed(format!("{failures} repetition(s) failed"))
    })
}

pub fn rate(cfg: &RunConfig) -> Result<Outcome> {
    let rc = cfg.rate_config();
    let report = rate_experiment(&rc)?;
    let mut s = String::new();
    let _ = writeln!(s, "# seed={}", rc.seed);
    let _ = writeln!(s, "# config={}", serde_json::to_string(&rc)?);
    let _ = writeln!(s, "n,resolution,mean_error");
    for p in &report.points {
        let _ = writeln!(s, "{},{},{:.16e}", p.n, p.resolution, p.mean_error);
    }
    match report.slope {
        Some(b) => {
            let _ = writeln!(s, "# slope={b:.6}");
        }
        None => {
            let _ = writeln!(s, "# slope=none (errors are numerically zero)");
        }
    }
    match &cfg.output {
        Some(p) => {
            write_output(p, &serde_json::to_string_pretty(&report)?)?;
            print!("{s}");
        }
        None => print!("{s}"),
    }
    Ok(Outcome::Success)
}

/// Scales and grid step of the two approximation-check modes.
pub fn approx_plan(quick: bool) -> (Vec<f64>, f64, Vec<usize>) {
    if quick {
        (vec![1e3, 1e4, 1e5], 2e-3, vec![4])
    } else {
        (vec![1e3, 1e4, 1e5, 1e6, 1e7], 1e-3, vec![4, 8])
    }
}

pub fn approx_check(cfg: &RunConfig) -> Result<Outcome> {
    let (scales, step, resolutions) = approx_plan(cfg.quick);
    let mut rows: Vec<(usize, BoundCheck)> = Vec::new();
    for &m in &resolutions {
        rows.extend(
            bound_suite(1.0, m, &scales, step)?
                .into_iter()
                .map(|r| (m, r)),
        );
    }
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# mode={} a=1 step={step:e} M={resolutions:?} R={scales:?}",
        if cfg.quick { "quick" } else { "full" }
    );
    let _ = writeln!(s, "block,M,R,max_error,bound,status");
    for (m, r) in &rows {
        let _ = writeln!(
            s,
            "{},{m},{:e},{:.6e},{:.6e},{}",
            r.block,
            r.scale,
            r.max_error,
            r.bound,
            if r.passed() { "pass" } else { "FAIL" }
        );
    }
    if let Some(p) = &cfg.output {
        write_output(p, &s)?;
    }
    print!("{s}");
    let failed = rows.iter().filter(|(_, r)| !r.passed()).count();
    Ok(if failed == 0 {
        Outcome::Success
    } else {
        Outcome::Failed(format!("{failed} bound(s) violated"))
    })
}
