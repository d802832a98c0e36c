use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use invariant_forge::linalg::vector::{line_angle, normalize};
use invariant_forge::{run_iras_empirical, GaussianRng, IrasConfig, IrasStatus, IrasTrace};
use serde::{Deserialize, Serialize};

use crate::error::{exit, CmdResult, Failure};
use crate::io::{ensure_dir, parse_vector, read_dataset, read_json, write_json, RunManifest};

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Dataset CSV with header `k,z1,...,zn`.
    data: PathBuf,
    /// JSON file with any of the options below; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    sigma_bar2: Option<f64>,
    /// Initial direction, comma separated. Normalized before use.
    #[arg(long, conflicts_with = "random_theta0", allow_hyphen_values = true)]
    theta0: Option<String>,
    /// Draw the initial direction uniformly on the sphere from the seed (the default).
    #[arg(long)]
    random_theta0: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Report the angle between the last iterate and this direction.
    #[arg(long, allow_hyphen_values = true)]
    reference: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    #[serde(default)]
    pub sigma_bar2: Option<f64>,
    #[serde(default)]
    pub theta0: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub reference: Option<Vec<f64>>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub max_iters: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct Angle {
    pub radians: f64,
    pub degrees: f64,
}

#[derive(Debug, Serialize)]
struct TraceReport<'a> {
    #[serde(flatten)]
    trace: &'a IrasTrace,
    #[serde(skip_serializing_if = "Option::is_none")]
    angle_to_reference: Option<Angle>,
}

pub fn run(args: FitArgs) -> CmdResult {
    let started = Instant::now();
    let file: FitConfig = match &args.config {
        Some(p) => read_json(p)?,
        None => FitConfig::default(),
    };
    let samples = read_dataset(&args.data)?;
    let n = samples[0].len();

    let sigma_bar2 = args
        .sigma_bar2
        .or(file.sigma_bar2)
        .ok_or_else(|| Failure::validation("sigma_bar2 is required (--sigma-bar2)"))?;
    let seed = crate::seed::resolve_seed(args.seed, file.seed)?;
    let theta0 = match (&args.theta0, args.random_theta0) {
        (Some(t), _) => parse_vector(t, "theta0")?,
        (None, true) => GaussianRng::new(seed).unit_vector(n),
        (None, false) => file
            .theta0
            .clone()
            .unwrap_or_else(|| GaussianRng::new(seed).unit_vector(n)),
    };
    if theta0.len() != n {
        return Err(Failure::validation(format!(
            "theta0 has {} entries but the dataset has {n} columns",
            theta0.len()
        )));
    }
    let reference = match &args.reference {
        Some(r) => Some(parse_vector(r, "reference")?),
        None => file.reference.clone(),
    };
    let mut config = IrasConfig::new(&theta0, sigma_bar2)?;
    if let Some(tol) = args.tol.or(file.tol) {
        config = config.conv_tol(tol);
    }
    if let Some(m) = args.max_iters.or(file.max_iters) {
        config = config.max_iters(m);
    }
    config.validate()?;

    let trace = run_iras_empirical(&samples, &config)?;
    let angle_to_reference = match &reference {
        Some(r) if r.len() != n => {
            return Err(Failure::validation(format!(
                "reference has {} entries but the dataset has {n} columns",
                r.len()
            )))
        }
        Some(r) => {
            let radians = line_angle(trace.last(), &normalize(r)?);
            Some(Angle {
                radians,
                degrees: radians.to_degrees(),
            })
        }
        None => None,
    };
    let report = TraceReport {
        trace: &trace,
        angle_to_reference,
    };

    if let Some(dir) = &args.out {
        ensure_dir(dir)?;
        let path = dir.join("trace.json");
        write_json(&path, &report)?;
        let resolved = FitConfig {
            sigma_bar2: Some(sigma_bar2),
            theta0: Some(config.theta0.clone()),
            seed: Some(seed),
            reference,
            tol: Some(config.conv_tol),
            max_iters: Some(config.max_iters),
        };
        let mut manifest = RunManifest::new("fit", resolved, started);
        manifest.seeds.push(seed);
        manifest.inputs.push(args.data.clone());
        manifest.inputs.extend(args.config.clone());
        manifest.outputs.push(path);
        manifest.write(dir)?;
    }
    if args.json {
        outln!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        let last = trace.last();
        outln!(
            "{:?} after {} iterations: theta = [{}]",
            trace.status,
            trace.iterations,
            last.iter()
                .map(|v| format!("{v:.6}"))
                .collect::<Vec<_>>()
                .join(", ")
        );
        if let Some(a) = &report.angle_to_reference {
            outln!(
                "angle to reference: {:.6e} rad ({:.6} deg)",
                a.radians,
                a.degrees
            );
        }
    }
    if trace.status == IrasStatus::Degenerate {
        return Err(Failure::new(
            exit::DEGENERATE,
            anyhow::anyhow!(
                "repeated dominant eigenvalue after {} iterations",
                trace.iterations
            ),
        ));
    }
    Ok(())
}
