use std::sync::Arc;

use soficlab_core::actions::ActionSpec;
use soficlab_core::entropy::{estimate, EntropySchedule, FamilyPolicy};
use soficlab_core::microstates::{CountMode, MetricKind, SeparationOptions};
use soficlab_core::sofic::quotient_sofic;

use super::EntropyArgs;
use crate::config::{parse_floats, parse_range, CliError, CliResult, Outcome, Status};

pub fn metric(s: Option<&str>) -> CliResult<MetricKind> {
    match s.unwrap_or("rhoinf") {
        "rhoinf" => Ok(MetricKind::RhoInf),
        "rho2" => Ok(MetricKind::Rho2),
        other => Err(CliError::config(format!("unknown metric {other:?}; use rho2 or rhoinf"))),
    }
}

pub fn run(args: &EntropyArgs) -> CliResult<Outcome> {
    let action = args.action.build()?;
    let g = action.group().clone();
    let levels = parse_range(args.levels.as_deref().ok_or_else(|| CliError::config("entropy needs --levels"))?)?;
    let f_radii: Vec<usize> = parse_range(args.f_radii.as_deref().unwrap_or("1"))?.into_iter().map(|r| r as usize).collect();
    let window = args.window.unwrap_or(1);
    let family = match &action {
        ActionSpec::Symbolic(_) => FamilyPolicy::FullShift { radius: window },
        ActionSpec::Algebraic(_) => {
            FamilyPolicy::Algebraic { radius: window, low: args.low.unwrap_or(0), high: args.high.unwrap_or(1) }
        }
    };
    let reach = match &action {
        ActionSpec::Symbolic(_) => window,
        ActionSpec::Algebraic(a) => window + a.radius(),
    };
    let support = reach.max(f_radii.iter().copied().max().unwrap_or(0));
    let levels = levels
        .iter()
        .map(|&n| Ok(Arc::new(quotient_sofic(&g, &vec![n; g.rank()], support)?)))
        .collect::<CliResult<Vec<_>>>()?;
    let mode = match args.count.as_deref().unwrap_or("exact") {
        "exact" => CountMode::Exact,
        "greedy" => CountMode::Greedy,
        other => return Err(CliError::config(format!("unknown count mode {other:?}; use exact or greedy"))),
    };
    let schedule = EntropySchedule {
        action,
        levels,
        f_chain: f_radii.iter().map(|&r| g.ball(r)).collect(),
        deltas: parse_floats(args.deltas.as_deref().unwrap_or("0.1"))?,
        epsilons: parse_floats(args.epsilons.as_deref().unwrap_or("0.5"))?,
        metric: metric(args.metric.as_deref())?,
        family,
        budget: args.budget.unwrap_or(1 << 20),
        separation: SeparationOptions { mode, seed: args.seed.unwrap_or(0), ..SeparationOptions::default() },
    };
    schedule.validate()?;
    let report = estimate(&schedule)?;
    let status = if report.partial { Status::Partial } else { Status::Ok };
    Outcome::with_status(status, report)
}
