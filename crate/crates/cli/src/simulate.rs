use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use invariant_forge::{add_noise, integrate_rk4, RfmrSystem};
use serde::{Deserialize, Serialize};

use crate::error::{CmdResult, Failure};
use crate::io::{ensure_dir, read_json, write_dataset, write_trajectory, RunManifest};

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON file with `rates`, `x0`, `dt`, `steps`, `sigma2` and optionally `n`, `seed`.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Print the manifest as JSON instead of a summary.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub rates: Vec<f64>,
    pub x0: Vec<f64>,
    pub dt: f64,
    pub steps: usize,
    pub sigma2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl SimulateConfig {
    pub fn validate(&self) -> CmdResult {
        if let Some(n) = self.n {
            if n != self.rates.len() || n != self.x0.len() {
                return Err(Failure::validation(format!(
                    "n = {n} but rates has {} entries and x0 has {}",
                    self.rates.len(),
                    self.x0.len()
                )));
            }
        }
        if self.rates.len() != self.x0.len() {
            return Err(Failure::validation(format!(
                "rates has {} entries but x0 has {}",
                self.rates.len(),
                self.x0.len()
            )));
        }
        if self.steps == 0 {
            return Err(Failure::validation("steps must be at least 1"));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Failure::validation(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.sigma2 >= 0.0) || !self.sigma2.is_finite() {
            return Err(Failure::validation(format!(
                "sigma2 must be non-negative, got {}",
                self.sigma2
            )));
        }
        Ok(())
    }
}

pub fn run(args: SimulateArgs) -> CmdResult {
    let started = Instant::now();
    let mut config: SimulateConfig = read_json(&args.config)?;
    config.validate()?;
    let seed = crate::seed::resolve_seed(args.seed, config.seed)?;
    config.seed = Some(seed);
    config.n = Some(config.rates.len());

    let system = RfmrSystem::new(config.rates.clone())?;
    let traj = integrate_rk4(&system, &config.x0, config.dt, config.steps)?;
    let data = add_noise(&traj, config.sigma2, seed)?;

    ensure_dir(&args.out)?;
    let traj_path = args.out.join("trajectory.csv");
    let data_path = args.out.join("dataset.csv");
    write_trajectory(&traj_path, &traj)?;
    write_dataset(&data_path, &data)?;

    let mut manifest = RunManifest::new("simulate", config, started);
    manifest.seeds.push(seed);
    manifest.inputs.push(args.config);
    manifest.outputs = vec![traj_path, data_path];
    manifest.write(&args.out)?;

    if args.json {
        outln!("{}", serde_json::to_string_pretty(&manifest)?);
    } else {
        outln!(
            "simulated {} steps of {} sites (drift {:.2e}); wrote {}",
            traj.states.len() - 1,
            system.n(),
            traj.conservation_drift(),
            args.out.display()
        );
    }
    Ok(())
}
