use serde::Serialize;
use soficlab_core::group::GroupSpec;
use soficlab_core::quasitiling::{
    commuting_bijection, quasitile, rf_mixing_check, right_action_table, BijectionConfig, BijectionReport, TileSystem,
};
use soficlab_core::sofic::quotient_sofic;

use super::{random_subset, BijectionArgs, RfArgs, TileArgs};
use crate::config::{parse_range, parse_usizes, CliError, CliResult, Outcome, Status};

fn moduli(s: Option<&str>) -> CliResult<Vec<u64>> {
    let m = parse_range(s.ok_or_else(|| CliError::config("missing --moduli"))?)?;
    if m.is_empty() || m.contains(&0) {
        return Err(CliError::config("moduli must be positive"));
    }
    Ok(m)
}

pub fn tile(args: &TileArgs) -> CliResult<Outcome> {
    let m = moduli(args.moduli.as_deref())?;
    let g = GroupSpec::lattice(m.len())?;
    let radii = parse_usizes(args.shapes.as_deref().unwrap_or("1,3"))?;
    let top = *radii.iter().max().ok_or_else(|| CliError::config("need at least one shape"))?;
    let sigma = quotient_sofic(&g, &m, 2 * top)?;
    let shapes: Vec<_> = radii.iter().map(|&r| g.ball(r)).collect();
    let v = match &args.centers {
        Some(s) => parse_usizes(s)?,
        None => (0..sigma.d()).collect(),
    };
    let ts: TileSystem =
        quasitile(&sigma, &shapes, &v, args.tau.unwrap_or(0.0), args.eta.unwrap_or(0.2), args.lambda.unwrap_or(false))?;
    Outcome::ok(ts)
}

#[derive(Serialize)]
struct BijectionOutput {
    y: Vec<usize>,
    z: Vec<usize>,
    #[serde(flatten)]
    report: BijectionReport,
}

pub fn bijection(args: &BijectionArgs) -> CliResult<Outcome> {
    let n = args.n.unwrap_or(240);
    let g = GroupSpec::lattice(1)?;
    let density = args.density.unwrap_or(0.5);
    let seed = args.seed.unwrap_or(0);
    let y = match &args.y {
        Some(s) => parse_usizes(s)?,
        None => random_subset(n as usize, density, seed),
    };
    let z = match &args.z {
        Some(s) => parse_usizes(s)?,
        None => random_subset(n as usize, density, seed.wrapping_add(1)),
    };
    let big = parse_usizes(args.big.as_deref().unwrap_or("4"))?;
    let small = parse_usizes(args.small.as_deref().unwrap_or("0,5"))?;
    let f_radius = args.f_radius.unwrap_or(1);
    let reach = big.iter().chain(&small).copied().max().unwrap_or(0).max(f_radius);
    let sigma = quotient_sofic(&g, &[n], reach)?;
    let config = BijectionConfig {
        big: big.iter().map(|&r| g.ball(r)).collect(),
        small: small.iter().map(|&r| g.ball(r)).collect(),
        eta: args.eta.unwrap_or(0.1),
    };
    let f = g.ball(f_radius);
    let report = commuting_bijection(&sigma, &y, &z, &f, args.epsilon.unwrap_or(0.2), &config)?;
    let status = if report.partial { Status::Partial } else { Status::Ok };
    Outcome::with_status(status, BijectionOutput { y, z, report })
}

pub fn rf(args: &RfArgs) -> CliResult<Outcome> {
    let m = moduli(args.moduli.as_deref())?;
    let q = GroupSpec::quotient(m)?;
    let table = right_action_table(&q)?;
    let y = match &args.y {
        Some(s) => parse_usizes(s)?,
        None => random_subset(table.len(), args.density.unwrap_or(0.5), args.seed.unwrap_or(0)),
    };
    Outcome::ok(rf_mixing_check(&q, &table, &y)?)
}
