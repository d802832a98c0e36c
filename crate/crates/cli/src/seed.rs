pub const SEED_ENV: &str = "INVARIANT_FORGE_SEED";

/// Flag, then config, then `INVARIANT_FORGE_SEED`, then 0.
pub fn resolve_seed(flag: Option<u64>, config: Option<u64>) -> crate::error::CmdResult<u64> {
    if let Some(s) = flag.or(config) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|e| crate::error::Failure::validation(format!("{SEED_ENV}={v}: {e}"))),
        Err(_) => Ok(0),
    }
}
