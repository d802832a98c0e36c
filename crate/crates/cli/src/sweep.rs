use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use invariant_forge::gaussmodel::perturbed_direction;
use invariant_forge::linalg::vector::{line_angle, normalize};
use invariant_forge::{run_iras, IrasConfig, IrasStatus, Matrix, MeasurementModel};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CmdResult, Failure};
use crate::io::{ensure_dir, fmt_f64, read_json, write_json, RunManifest};

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// JSON grid: `sigma2`, `epsilon` and one of `sigma_bar2` / `sigma_bar2_ratio`.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

fn default_n() -> usize {
    3
}
fn default_k() -> usize {
    2
}
fn default_max_iters() -> usize {
    200
}
fn default_tol() -> f64 {
    IrasConfig::DEFAULT_CONV_TOL
}
fn default_angle_tol() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    pub sigma2: Vec<f64>,
    /// Absolute surrogate variances.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_bar2: Option<Vec<f64>>,
    /// Surrogate variances as multiples of `sigma2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_bar2_ratio: Option<Vec<f64>>,
    pub epsilon: Vec<f64>,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// A cell counts as converged when the final angle to `v1` is below this.
    #[serde(default = "default_angle_tol")]
    pub angle_tol: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Cell {
    pub sigma2: f64,
    pub sigma_bar2: f64,
    pub epsilon: f64,
    pub converged: bool,
    pub iters: usize,
    pub final_angle: f64,
}

impl SweepConfig {
    fn validate(&self) -> CmdResult {
        if self.n < 2 {
            return Err(Failure::validation("n must be at least 2"));
        }
        if self.k < 2 || self.k > self.n {
            return Err(Failure::validation(format!("k must lie in 2..={}", self.n)));
        }
        match (&self.sigma_bar2, &self.sigma_bar2_ratio) {
            (Some(_), Some(_)) | (None, None) => {
                return Err(Failure::validation(
                    "give exactly one of sigma_bar2 and sigma_bar2_ratio",
                ))
            }
            _ => {}
        }
        let positive = |name: &str, v: &[f64]| -> CmdResult {
            if v.is_empty() {
                return Err(Failure::validation(format!("{name} must not be empty")));
            }
            if let Some(x) = v.iter().find(|x| !(**x > 0.0) || !x.is_finite()) {
                return Err(Failure::validation(format!(
                    "{name} entries must be positive, got {x}"
                )));
            }
            Ok(())
        };
        positive("sigma2", &self.sigma2)?;
        positive(
            "sigma_bar2",
            self.sigma_bar2
                .as_deref()
                .or(self.sigma_bar2_ratio.as_deref())
                .unwrap_or(&[]),
        )?;
        if self.epsilon.is_empty() || self.epsilon.iter().any(|e| !e.is_finite()) {
            return Err(Failure::validation(
                "epsilon must be a non-empty list of finite values",
            ));
        }
        if self.max_iters == 0 {
            return Err(Failure::validation("max_iters must be at least 1"));
        }
        if !(self.tol > 0.0) {
            return Err(Failure::validation("tol must be positive"));
        }
        Ok(())
    }

    /// Cells in grid order: `sigma2` outermost, then `sigma_bar2`, then `epsilon`.
    fn cells(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        for &s2 in &self.sigma2 {
            let bars: Vec<f64> = match (&self.sigma_bar2, &self.sigma_bar2_ratio) {
                (Some(b), _) => b.clone(),
                (None, Some(r)) => r.iter().map(|x| x * s2).collect(),
                (None, None) => Vec::new(),
            };
            for &sb2 in &bars {
                for &eps in &self.epsilon {
                    out.push((s2, sb2, eps));
                }
            }
        }
        out
    }
}

fn evaluate(cfg: &SweepConfig, sigma2: f64, sigma_bar2: f64, epsilon: f64) -> Cell {
    let run = || -> invariant_forge::Result<(bool, usize, f64)> {
        let v1 = normalize(&vec![1.0; cfg.n])?;
        let model = MeasurementModel::new(&v1, sigma2)?;
        let theta0 = perturbed_direction(&model, epsilon, cfg.k)?;
        let config = IrasConfig::new(&theta0, sigma_bar2)?
            .max_iters(cfg.max_iters)
            .conv_tol(cfg.tol);
        let trace = run_iras(
            &model.signal_covariance(),
            &Matrix::scaled_identity(cfg.n, sigma_bar2),
            &config,
        )?;
        let angle = line_angle(trace.last(), &v1);
        Ok((
            trace.status == IrasStatus::Converged && angle < cfg.angle_tol,
            trace.iterations,
            angle,
        ))
    };
    let (converged, iters, final_angle) = run().unwrap_or_else(|e| {
        log::warn!("cell sigma2={sigma2} sigma_bar2={sigma_bar2} epsilon={epsilon}: {e}");
        (false, 0, f64::NAN)
    });
    Cell {
        sigma2,
        sigma_bar2,
        epsilon,
        converged,
        iters,
        final_angle,
    }
}

pub fn sweep(cfg: &SweepConfig) -> CmdResult<Vec<Cell>> {
    cfg.validate()?;
    // `collect` on an indexed parallel iterator keeps grid order.
    Ok(cfg
        .cells()
        .into_par_iter()
        .map(|(s2, sb2, eps)| evaluate(cfg, s2, sb2, eps))
        .collect())
}

fn write_cells<W: std::io::Write>(w: W, cells: &[Cell]) -> CmdResult {
    let mut w = csv::Writer::from_writer(w);
    w.write_record([
        "sigma2",
        "sigma_bar2",
        "epsilon",
        "converged",
        "iters",
        "final_angle",
    ])?;
    for c in cells {
        w.write_record([
            fmt_f64(c.sigma2),
            fmt_f64(c.sigma_bar2),
            fmt_f64(c.epsilon),
            c.converged.to_string(),
            c.iters.to_string(),
            fmt_f64(c.final_angle),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn run(args: SweepArgs) -> CmdResult {
    let started = Instant::now();
    let cfg: SweepConfig = read_json(&args.config)?;
    let cells = sweep(&cfg)?;
    if let Some(dir) = &args.out {
        ensure_dir(dir)?;
        let path = dir.join("results.csv");
        write_cells(std::fs::File::create(&path)?, &cells)?;
        let json_path = dir.join("results.json");
        write_json(&json_path, &cells)?;
        let mut manifest = RunManifest::new("sweep", cfg, started);
        manifest.inputs.push(args.config.clone());
        manifest.outputs = vec![path, json_path];
        manifest.write(dir)?;
    }
    if args.json {
        outln!("{}", serde_json::to_string_pretty(&cells)?);
    } else if args.out.is_none() {
        write_cells(std::io::stdout().lock(), &cells)?;
    } else {
        let ok = cells.iter().filter(|c| c.converged).count();
        outln!("{ok}/{} cells converged", cells.len());
    }
    Ok(())
}
