use clap::Args;
use invariant_forge::verify::{criterion_name, run_criterion, VerifyOptions, CRITERIA};
use serde::Serialize;

use crate::error::{exit, CmdResult, Failure};

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Run only these criteria (repeatable). Defaults to all.
    #[arg(long = "criterion")]
    criteria: Vec<u8>,
    #[arg(long)]
    json: bool,
    /// Test hook: force the named criterion to fail.
    #[arg(long, hide = true)]
    tamper: Vec<u8>,
}

#[derive(Serialize)]
struct Report<'a> {
    passed: bool,
    criteria: &'a [invariant_forge::verify::CriterionOutcome],
}

pub fn run(args: VerifyArgs) -> CmdResult {
    let ids: Vec<u8> = if args.criteria.is_empty() {
        CRITERIA.iter().map(|(id, _)| *id).collect()
    } else {
        args.criteria.clone()
    };
    if let Some(bad) = ids
        .iter()
        .chain(&args.tamper)
        .find(|id| criterion_name(**id).is_none())
    {
        return Err(Failure::validation(format!(
            "unknown criterion {bad}; valid ids are 1..={}",
            CRITERIA.len()
        )));
    }
    let opts = VerifyOptions {
        tamper: args.tamper.clone(),
    };
    let mut outcomes = Vec::new();
    for id in ids {
        let outcome = run_criterion(id, &opts).expect("id checked above");
        if !args.json {
            outln!("{outcome}");
        }
        outcomes.push(outcome);
    }
    let failed: Vec<String> = outcomes
        .iter()
        .filter(|o| !o.passed)
        .map(|o| format!("{} ({})", o.id, o.name))
        .collect();
    if args.json {
        let report = Report {
            passed: failed.is_empty(),
            criteria: &outcomes,
        };
        outln!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        outln!(
            "{}/{} criteria passed",
            outcomes.len() - failed.len(),
            outcomes.len()
        );
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::new(
            exit::VERIFY_FAILED,
            anyhow::anyhow!("failed criteria: {}", failed.join(", ")),
        ))
    }
}
