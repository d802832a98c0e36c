use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use invariant_forge::linalg::vector::sign_invariant_distance;
use invariant_forge::spectral::{
    equilibrium_spectrum, numerical_perturbed_spectrum, perturbed_spectrum_along,
    EquilibriumSpectrum,
};
use invariant_forge::{check_conditions, ConditionReport, MeasurementModel, PerturbedSpectrum};
use serde::{Deserialize, Serialize};

use crate::error::{CmdResult, Failure};
use crate::io::{ensure_dir, read_json, write_json, RunManifest};

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    sigma2: Option<f64>,
    #[arg(long)]
    sigma_bar2: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    /// Perturbation size of the initial direction `v1 + epsilon v^k`.
    #[arg(long, allow_hyphen_values = true)]
    epsilon: Option<f64>,
    /// Index of the perturbing basis vector, 2..=n.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeConfig {
    pub sigma2: Option<f64>,
    pub sigma_bar2: Option<f64>,
    pub n: Option<usize>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub k: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct CrossCheck {
    pub closed_form: PerturbedSpectrum,
    pub numerical_eigenvalues: Vec<f64>,
    pub numerical_w: Vec<f64>,
    pub eigenvalue_residual: f64,
    pub eigenvector_residual: f64,
}

#[derive(Debug, Serialize)]
pub struct AnalysisReport {
    pub n: usize,
    pub conditions: ConditionReport,
    /// `sigma_bar2 = 1`: the fixed point sits on the boundary of the stable region.
    pub boundary: bool,
    pub equilibrium_spectrum: EquilibriumSpectrum,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perturbed: Option<CrossCheck>,
}

pub fn analyze(p: &AnalyzeConfig) -> CmdResult<AnalysisReport> {
    let need = |v: Option<f64>, name: &str| {
        v.ok_or_else(|| Failure::validation(format!("{name} is required")))
    };
    let sigma2 = need(p.sigma2, "sigma2")?;
    let sigma_bar2 = need(p.sigma_bar2, "sigma_bar2")?;
    let n = p.n.ok_or_else(|| Failure::validation("n is required"))?;
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Failure::validation(format!(
            "sigma2 must be positive, got {sigma2}"
        )));
    }
    if !(sigma_bar2 > 0.0) || !sigma_bar2.is_finite() {
        return Err(Failure::validation(format!(
            "sigma_bar2 must be positive, got {sigma_bar2}"
        )));
    }
    if n < 2 {
        return Err(Failure::validation(format!(
            "n must be at least 2, got {n}"
        )));
    }
    let model = MeasurementModel::axis_aligned(n, sigma2)?;
    let perturbed = match p.epsilon {
        Some(eps) => {
            let k = p.k.unwrap_or(2);
            let closed = perturbed_spectrum_along(eps, sigma2, sigma_bar2, n, k)?;
            let num = numerical_perturbed_spectrum(&model, sigma_bar2, eps, k)?;
            let eigenvalue_residual = closed
                .eigenvalues()
                .iter()
                .zip(&num.eigenvalues)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let numerical_w = num.eigenvectors[0].clone();
            Some(CrossCheck {
                eigenvector_residual: sign_invariant_distance(
                    &closed.ambient_w(&model),
                    &numerical_w,
                ),
                eigenvalue_residual,
                numerical_eigenvalues: num.eigenvalues,
                numerical_w,
                closed_form: closed,
            })
        }
        None => None,
    };
    Ok(AnalysisReport {
        n,
        conditions: check_conditions(sigma2, sigma_bar2),
        boundary: sigma_bar2 == 1.0,
        equilibrium_spectrum: equilibrium_spectrum(&model, sigma_bar2)?,
        perturbed,
    })
}

pub fn run(args: AnalyzeArgs) -> CmdResult {
    let started = Instant::now();
    let file: AnalyzeConfig = match &args.config {
        Some(p) => read_json(p)?,
        None => AnalyzeConfig::default(),
    };
    let params = AnalyzeConfig {
        sigma2: args.sigma2.or(file.sigma2),
        sigma_bar2: args.sigma_bar2.or(file.sigma_bar2),
        n: args.n.or(file.n),
        epsilon: args.epsilon.or(file.epsilon),
        k: args.k.or(file.k),
    };
    let report = analyze(&params)?;

    if let Some(dir) = &args.out {
        ensure_dir(dir)?;
        let path = dir.join("analysis.json");
        write_json(&path, &report)?;
        let mut manifest = RunManifest::new("analyze", params, started);
        manifest.inputs.extend(args.config.clone());
        manifest.outputs.push(path);
        manifest.write(dir)?;
    }
    if args.json || args.out.is_none() {
        outln!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        let c = &report.conditions;
        outln!(
            "cond_a={} cond_b={} equilibrium={} r={}",
            c.cond_a,
            c.cond_b,
            c.equilibrium,
            c.r
        );
    }
    Ok(())
}
