//! Subcommand arguments and dispatch. Every field doubles as a config-file key.

mod det;
mod entropy;
mod independence;
mod tiling;

use std::path::PathBuf;

use clap::{Args, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use soficlab_core::actions::{ActionSpec, AlgebraicAction, SymbolicAction};
use soficlab_core::group::text::parse_ring;
use soficlab_core::group::{GroupSpec, RingMatrix};

use crate::config::{decode, merge, parse_count, parse_group, read_file, CliError, CliResult, Outcome};

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-level sofic entropy values over a parameter grid.
    Entropy(EntropyArgs),
    /// Maximum independence subset of a window for an orbit set tuple.
    Density(DensityArgs),
    /// Sofic independence sets and their witnesses.
    Indep(IndepArgs),
    /// Shattered coordinate sets of a tuple family.
    Km(KmArgs),
    /// Quasitiling of a finite quotient by nested balls.
    Tile(TileArgs),
    /// Approximately commuting permutation between two subsets.
    Bijection(BijectionArgs),
    /// Symmetric-difference identity for right translates on a quotient.
    Rf(RfArgs),
    /// Fuglede–Kadison determinant estimates from finite quotients.
    Det(DetArgs),
    /// Distance profile of two points on spheres of growing radius.
    Liyorke(LiyorkeArgs),
    /// Replay a stored report and compare the results.
    Validate(ValidateArgs),
}

/// Where the action comes from: a preset, an SFT file or a ring element.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ActionArgs {
    /// Z for the integers, Z^r for a lattice, Fr for a free group.
    #[arg(long)]
    pub group: Option<String>,
    /// fullshift<k> or goldenmean.
    #[arg(long)]
    pub preset: Option<String>,
    /// A preset name or an SFT file.
    #[arg(long)]
    pub action: Option<String>,
    /// Forbidden patterns, one per line as `offset=symbol;...`.
    #[arg(long)]
    pub sft: Option<PathBuf>,
    /// Alphabet size for --sft.
    #[arg(long)]
    pub alphabet: Option<u32>,
    /// Group ring element defining an algebraic action, e.g. "2-t".
    #[arg(long)]
    pub ring: Option<String>,
    /// Tolerance of the l1 inverse for algebraic actions.
    #[arg(long)]
    pub tol: Option<f64>,
}

impl ActionArgs {
    pub fn group(&self) -> CliResult<GroupSpec> {
        parse_group(self.group.as_deref().unwrap_or("Z"))
    }

    pub fn build(&self) -> CliResult<ActionSpec> {
        if let Some(a) = &self.action {
            if self.preset.is_some() || self.sft.is_some() {
                return Err(CliError::config("--action replaces --preset and --sft"));
            }
            let mut resolved = self.clone();
            resolved.action = None;
            if a == "goldenmean" || a.starts_with("fullshift") {
                resolved.preset = Some(a.clone());
            } else {
                resolved.sft = Some(PathBuf::from(a));
            }
            return resolved.build();
        }
        let g = self.group()?;
        let sources = [self.preset.is_some(), self.sft.is_some(), self.ring.is_some()];
        if sources.iter().filter(|&&b| b).count() != 1 {
            return Err(CliError::config("give exactly one of --preset, --sft, --ring"));
        }
        if let Some(p) = &self.preset {
            if p == "goldenmean" {
                if g.rank() != 1 || !matches!(g.kind(), soficlab_core::group::GroupKind::Lattice { .. }) {
                    return Err(CliError::config("the goldenmean preset lives on Z"));
                }
                return Ok(ActionSpec::Symbolic(SymbolicAction::golden_mean()));
            }
            let k: u32 = p
                .strip_prefix("fullshift")
                .and_then(|k| k.parse().ok())
                .ok_or_else(|| CliError::config(format!("unknown preset {p:?}; use fullshift<k> or goldenmean")))?;
            return Ok(ActionSpec::Symbolic(SymbolicAction::full_shift(g, k)?));
        }
        if let Some(path) = &self.sft {
            let k = self.alphabet.ok_or_else(|| CliError::config("--sft needs --alphabet"))?;
            return Ok(ActionSpec::Symbolic(SymbolicAction::parse_sft(g, k, &read_file(path)?)?));
        }
        let f = parse_ring(&g, self.ring.as_deref().unwrap())?;
        Ok(ActionSpec::Algebraic(AlgebraicAction::new(RingMatrix::scalar(f), self.tol.unwrap_or(1e-9))?))
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct EntropyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub action: ActionArgs,
    /// Quotient sizes, e.g. 4..10; rank-r lattices use n^r points.
    #[arg(long)]
    pub levels: Option<String>,
    /// Radius of the balls F_1 ⊆ … ⊆ F_m, e.g. 1 or 1,2.
    #[arg(long)]
    pub f_radii: Option<String>,
    /// Strictly decreasing, e.g. 0.2,0.1.
    #[arg(long, visible_alias = "delta")]
    pub deltas: Option<String>,
    /// Strictly decreasing, e.g. 0.5,0.25.
    #[arg(long, visible_alias = "eps")]
    pub epsilons: Option<String>,
    /// rho2 or rhoinf.
    #[arg(long)]
    pub metric: Option<String>,
    /// Window radius of the constructed microstates.
    #[arg(long)]
    pub window: Option<usize>,
    /// Coordinate range of the algebraic family.
    #[arg(long, allow_hyphen_values = true)]
    pub low: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    pub high: Option<i64>,
    /// Largest family enumerated at one level; accepts 1e6.
    #[arg(long, value_parser = parse_count)]
    pub budget: Option<u64>,
    /// exact or greedy separated counting.
    #[arg(long)]
    pub count: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct DensityArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub action: ActionArgs,
    /// Window F: 0..9, ball:r or `;`-separated elements.
    #[arg(long)]
    pub window: Option<String>,
    /// Tuple of identity cylinders {x_e = 0}, …, {x_e = k-1}.
    #[arg(long)]
    pub k: Option<u32>,
    /// Explicit tuple: `;`-separated sets, each `whole` or `cyl:pos=sym|sym&...`.
    #[arg(long)]
    pub sets: Option<String>,
    /// exact or greedy.
    #[arg(long)]
    pub mode: Option<String>,
    /// Second factor preset for the product certificate.
    #[arg(long)]
    pub product: Option<String>,
    #[arg(long, value_parser = parse_count)]
    pub node_budget: Option<u64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct IndepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub action: ActionArgs,
    /// Quotient size n of the sofic approximation Z/n.
    #[arg(long)]
    pub n: Option<u64>,
    /// Radius of the ball K (algebraic actions).
    #[arg(long)]
    pub k_radius: Option<usize>,
    /// Radius of the ball F over which equivariance is checked.
    #[arg(long)]
    pub f_radius: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Radius of the balls around the base points (algebraic actions).
    #[arg(long)]
    pub ball_radius: Option<f64>,
    /// Tuple length for identity cylinders (symbolic actions).
    #[arg(long)]
    pub k: Option<u32>,
    /// Index set J for symbolic actions, e.g. 0..7; defaults to every point.
    #[arg(long)]
    pub j: Option<String>,
    /// Window radius of the witnesses.
    #[arg(long)]
    pub window: Option<usize>,
    /// Check this many random patterns instead of all of them.
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct KmArgs {
    /// Tuples over {1..k}, one per line.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<u32>,
    /// exact or greedy.
    #[arg(long)]
    pub mode: Option<String>,
    /// Largest tuple length for the exact search.
    #[arg(long)]
    pub cap: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct TileArgs {
    /// Quotient moduli, e.g. 60 or 12,12.
    #[arg(long)]
    pub moduli: Option<String>,
    /// Ball radii of the nested shapes, smallest first.
    #[arg(long)]
    pub shapes: Option<String>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    /// Allowed centers; defaults to every point.
    #[arg(long)]
    pub centers: Option<String>,
    /// Also report the occupancies of each shape.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub lambda: Option<bool>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct BijectionArgs {
    /// Size of the cyclic quotient Z/n.
    #[arg(long)]
    pub n: Option<u64>,
    /// Density of the random sets Y and Z.
    #[arg(long)]
    pub density: Option<f64>,
    /// Explicit Y (overrides the random choice).
    #[arg(long)]
    pub y: Option<String>,
    /// Explicit Z (overrides the random choice).
    #[arg(long)]
    pub z: Option<String>,
    /// Radius of the ball F.
    #[arg(long)]
    pub f_radius: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Ball radii of the big shapes.
    #[arg(long)]
    pub big: Option<String>,
    /// Ball radii of the small shapes.
    #[arg(long)]
    pub small: Option<String>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct RfArgs {
    /// Quotient moduli, e.g. 10 or 3,4.
    #[arg(long)]
    pub moduli: Option<String>,
    /// Explicit subset; otherwise a random one of the given density.
    #[arg(long)]
    pub y: Option<String>,
    #[arg(long)]
    pub density: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct DetArgs {
    #[arg(long)]
    pub ring: Option<String>,
    #[arg(long)]
    pub group: Option<String>,
    /// Quotient sizes n, each giving (Z/n)^r.
    #[arg(long)]
    pub moduli: Option<String>,
    /// Largest size handled by exact integer elimination.
    #[arg(long)]
    pub exact_cap: Option<usize>,
    /// Number of final levels averaged into the estimate.
    #[arg(long)]
    pub average: Option<usize>,
    /// Also screen for units and compare the estimate with 0.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub deninger: Option<bool>,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct LiyorkeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub action: ActionArgs,
    /// const:v, periodic:0110, pow2 (1 at ±2^i) or random:seed.
    #[arg(long)]
    pub x: Option<String>,
    #[arg(long)]
    pub y: Option<String>,
    #[arg(long)]
    pub radius: Option<usize>,
    /// Upper threshold a for the limsup witness.
    #[arg(long)]
    pub above: Option<f64>,
    /// Lower threshold b for the liminf witness.
    #[arg(long)]
    pub below: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ValidateArgs {
    /// A report written by a previous run.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Entropy(_) => "entropy",
            Command::Density(_) => "density",
            Command::Indep(_) => "indep",
            Command::Km(_) => "km",
            Command::Tile(_) => "tile",
            Command::Bijection(_) => "bijection",
            Command::Rf(_) => "rf",
            Command::Det(_) => "det",
            Command::Liyorke(_) => "liyorke",
            Command::Validate(_) => "validate",
        }
    }

    pub fn flags(&self) -> Value {
        use crate::config::flags_to_value as v;
        match self {
            Command::Entropy(a) => v(a),
            Command::Density(a) => v(a),
            Command::Indep(a) => v(a),
            Command::Km(a) => v(a),
            Command::Tile(a) => v(a),
            Command::Bijection(a) => v(a),
            Command::Rf(a) => v(a),
            Command::Det(a) => v(a),
            Command::Liyorke(a) => v(a),
            Command::Validate(a) => v(a),
        }
    }
}

fn typed<T: DeserializeOwned + Serialize + Default>(command: &str, config: &Value) -> CliResult<T> {
    let known = serde_json::to_value(T::default()).unwrap();
    if let (Value::Object(cfg), Value::Object(known)) = (config, &known) {
        if let Some(k) = cfg.keys().find(|k| !known.contains_key(*k)) {
            let mut keys: Vec<&String> = known.keys().collect();
            keys.sort();
            return Err(CliError::config(format!("{command}: unknown key {k:?}; expected one of {keys:?}")));
        }
    }
    decode(command, config)
}

/// Run `command` on a merged config.
pub fn run(command: &str, config: &Value) -> CliResult<Outcome> {
    match command {
        "entropy" => entropy::run(&typed(command, config)?),
        "density" => independence::density(&typed(command, config)?),
        "indep" => independence::indep(&typed(command, config)?),
        "km" => independence::km(&typed(command, config)?),
        "liyorke" => independence::liyorke(&typed(command, config)?),
        "tile" => tiling::tile(&typed(command, config)?),
        "bijection" => tiling::bijection(&typed(command, config)?),
        "rf" => tiling::rf(&typed(command, config)?),
        "det" => det::run(&typed(command, config)?),
        "validate" => validate(&typed(command, config)?),
        other => Err(CliError::config(format!("unknown command {other:?}"))),
    }
}

#[derive(Debug, Serialize)]
struct ValidateReport {
    command: String,
    config_hash_ok: bool,
    result_matches: bool,
    /// First differing path of the result, if any.
    first_difference: Option<String>,
}

fn first_difference(a: &Value, b: &Value, path: &str) -> Option<String> {
    match (a, b) {
        (Value::Object(x), Value::Object(y)) => {
            let keys: std::collections::BTreeSet<&String> = x.keys().chain(y.keys()).collect();
            keys.into_iter().find_map(|k| match (x.get(k), y.get(k)) {
                (Some(p), Some(q)) => first_difference(p, q, &format!("{path}.{k}")),
                _ => Some(format!("{path}.{k}")),
            })
        }
        (Value::Array(x), Value::Array(y)) if x.len() == y.len() => {
            x.iter().zip(y).enumerate().find_map(|(i, (p, q))| first_difference(p, q, &format!("{path}.{i}")))
        }
        _ if a == b => None,
        _ => Some(path.to_string()),
    }
}

fn validate(args: &ValidateArgs) -> CliResult<Outcome> {
    let path = args.report.as_ref().ok_or_else(|| CliError::config("validate needs --report"))?;
    let stored: Value = serde_json::from_str(&read_file(path)?)
        .map_err(|e| CliError::config(format!("{} is not JSON: {e}", path.display())))?;
    let field = |k: &str| stored.get(k).cloned().ok_or_else(|| CliError::config(format!("report lacks {k:?}")));
    let command = field("command")?.as_str().map(str::to_string).ok_or_else(|| CliError::config("bad command"))?;
    if command == "validate" {
        return Err(CliError::config("cannot replay a validate report"));
    }
    let config = merge(Some(field("config")?), Value::Null)?;
    let hash_ok = field("config-hash")?.as_str() == Some(&crate::config::config_hash(&command, &config));
    let replay = run(&command, &config)?;
    let diff = first_difference(&field("result")?, &replay.result, "result");
    let report = ValidateReport {
        command,
        config_hash_ok: hash_ok,
        result_matches: diff.is_none(),
        first_difference: diff,
    };
    let status = if report.config_hash_ok && report.result_matches {
        crate::config::Status::Ok
    } else {
        crate::config::Status::ValidationFailed
    };
    Outcome::with_status(status, report)
}

pub(crate) fn random_subset(n: usize, density: f64, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).filter(|_| rng.gen_bool(density.clamp(0.0, 1.0))).collect()
}
