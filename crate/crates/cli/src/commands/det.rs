use soficlab_core::group::text::parse_ring;
use soficlab_core::spectral::{deninger_check, fk_det_estimate, DetOptions};

use super::DetArgs;
use crate::config::{parse_group, parse_range, CliError, CliResult, Outcome};

pub fn run(args: &DetArgs) -> CliResult<Outcome> {
    let g = parse_group(args.group.as_deref().unwrap_or("Z"))?;
    let f = parse_ring(&g, args.ring.as_deref().ok_or_else(|| CliError::config("det needs --ring"))?)?;
    let sizes = parse_range(args.moduli.as_deref().ok_or_else(|| CliError::config("det needs --moduli"))?)?;
    if sizes.contains(&0) {
        return Err(CliError::config("moduli must be positive"));
    }
    let levels: Vec<Vec<u64>> = sizes.iter().map(|&n| vec![n; g.rank()]).collect();
    let defaults = DetOptions::default();
    let opts = DetOptions {
        exact_cap: args.exact_cap.unwrap_or(defaults.exact_cap),
        window: args.average.unwrap_or(defaults.window),
    };
    if args.deninger.unwrap_or(false) {
        return Outcome::ok(deninger_check(&f, &levels, &opts, args.tol.unwrap_or(1e-9))?);
    }
    Outcome::ok(fk_det_estimate(&f, &levels, &opts)?)
}
