//! Command-line front end. Every command is a plain function from a
//! [`Scenario`] to JSON (or CSV); [`run`] adds file IO and exit codes.
//!
//! Exit codes: 0 success or obedient, 1 verification or dominance failure,
//! 2 usage or configuration error, 3 internal solver error.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::fixed_price::{self, Rationality};
use crate::obedience::{self, ObedienceMode, Verdict};
use crate::oracle::{self, LpStatus, DEFAULT_GRID_M, DEFAULT_PRICE_STEPS};
use crate::quality_dist::{Family, QualityDistribution};
use crate::signaling::{self, SignalingMechanism};
use crate::simulate::{outcomes_csv, Behavior, Mechanism, QualityObservation, Simulator};
use crate::valuation::{Market, ValuationFunction};

pub const SCHEMA: &str = "fps/1";
pub const SIGNIFICANT_DIGITS: usize = 12;
pub const DEFAULT_TRIALS: usize = 100_000;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED_CHECK: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

/// Tolerance for the "equal revenue" comparison with a single buyer.
const EQUALITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSpec {
    #[serde(flatten)]
    pub family: Family,
    pub support: (f64, f64),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub grid_m: Option<usize>,
    pub price_steps: Option<usize>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub distribution: DistributionSpec,
    pub buyers: Vec<ValuationFunction>,
    pub rationality: Rationality,
    #[serde(default)]
    pub overrides: Overrides,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Domain(format!("scenario: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read(path)?)
    }

    pub fn market(&self) -> Result<Market> {
        let (lo, hi) = self.distribution.support;
        let dist = QualityDistribution::new(self.distribution.family.clone(), lo, hi)?;
        Market::new(dist, self.buyers.clone())
    }

    fn grid_m(&self, flag: Option<usize>) -> usize {
        flag.or(self.overrides.grid_m).unwrap_or(DEFAULT_GRID_M)
    }

    fn price_steps(&self, flag: Option<usize>) -> usize {
        flag.or(self.overrides.price_steps).unwrap_or(DEFAULT_PRICE_STEPS)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Space {
    Fixed,
    Signaling,
}

/// Parses a snake_case serde enum from a command-line word (`-` or `_`).
fn serde_arg<T: DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(Value::String(s.replace('-', "_"))).map_err(|e| e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "fps", version, about = "Optimal fixed-price selling with and without quality signaling")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal mechanism in one mechanism space.
    Solve {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "signaling")]
        space: Space,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Obedience slack report for a mechanism file.
    Verify {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        mechanism: PathBuf,
        /// per-buyer, recommended-only or aggregated; defaults to the mode
        /// recorded in the mechanism file.
        #[arg(long, value_parser = serde_arg::<ObedienceMode>)]
        mode: Option<ObedienceMode>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fixed price vs signaling vs LP oracle for one scenario.
    Compare {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        grid_m: Option<usize>,
        #[arg(long)]
        price_steps: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Discretized LP oracle.
    Oracle {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        grid_m: Option<usize>,
        #[arg(long)]
        price_steps: Option<usize>,
        #[arg(long, value_parser = serde_arg::<ObedienceMode>)]
        mode: Option<ObedienceMode>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo revenue estimate.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        /// Mechanism file; defaults to the optimum in `--space`.
        #[arg(long)]
        mechanism: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "signaling")]
        space: Space,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// per-buyer-obedience or follow-recommendation.
        #[arg(long, value_parser = serde_arg::<Behavior>)]
        behavior: Option<Behavior>,
        /// common or independent-per-buyer (fixed price, ex-post only).
        #[arg(long, value_parser = serde_arg::<QualityObservation>, default_value = "common")]
        observation: QualityObservation,
        /// Per-trial CSV output.
        #[arg(long)]
        trials_csv: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Revenue curves over a price range as CSV.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        price_min: Option<f64>,
        #[arg(long)]
        price_max: Option<f64>,
        #[arg(long)]
        price_steps: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Rounds every float in `v` to [`SIGNIFICANT_DIGITS`].
pub fn round_numbers(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            serde_json::Number::from_f64(round_sig(x)).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_numbers).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_numbers(v))).collect()),
        other => other,
    }
}

pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap_or(x)
}

/// Wraps a payload as a schema-tagged, rounded document.
fn document(command: &str, body: Value) -> Value {
    let mut out = Map::new();
    out.insert("schema".into(), json!(SCHEMA));
    out.insert("command".into(), json!(command));
    if let Value::Object(o) = body {
        out.extend(o);
    }
    round_numbers(Value::Object(out))
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).unwrap_or(Value::Null)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Domain(format!("{}: {e}", path.display())))
}

/// Best fixed price, ex-post revenue under both readings of the protocol.
fn fixed_summary(market: &Market, rationality: Rationality) -> Result<Value> {
    let sol = fixed_price::optimize(market, rationality)?;
    let mut v = json!({
        "mechanism": Mechanism::FixedPrice { price: sol.price },
        "price": sol.price,
        "revenue": sol.revenue,
    });
    if rationality == Rationality::ExPost {
        v["revenue_common_quality"] = json!(fixed_price::revenue_ex_post_common_quality(market, sol.price));
    }
    Ok(v)
}

/// The closed-form optimal signaling mechanism and the obedience mode it is
/// designed for.
pub fn optimal_signaling(market: &Market, rationality: Rationality) -> Result<(SignalingMechanism, ObedienceMode, &'static str)> {
    Ok(match (rationality, market.buyers()) {
        (Rationality::ExPost, 1) => (signaling::optimal_ex_post_single(market)?, ObedienceMode::PerBuyer, "threshold"),
        (Rationality::ExInterim, 1) => {
            (signaling::optimal_ex_interim_single(market)?, ObedienceMode::PerBuyer, "always_recommend")
        }
        (Rationality::ExPost, _) => {
            (signaling::optimal_ex_post_restricted(market)?, ObedienceMode::RecommendedOnly, "restricted_partition")
        }
        (Rationality::ExInterim, _) => {
            (signaling::optimal_ex_interim_multi(market)?, ObedienceMode::Aggregated, "argmax_recipient")
        }
    })
}

/// For several ex-post buyers: whether full obedience is impossible, the
/// price range where two buyers are forced, and the check at `price`.
fn nonexistence(market: &Market, price: f64) -> Result<Value> {
    let (_, hi) = market.support();
    let mut tops: Vec<f64> = (0..market.buyers()).map(|i| market.profile().value(i, hi)).collect();
    tops.sort_by(|a, b| b.total_cmp(a));
    let second = tops.get(1).copied().unwrap_or(f64::NEG_INFINITY);
    let at_price = obedience::check_expost_multi(market, price, None)?;
    Ok(json!({
        "no_obedient_mechanism": market.buyers() >= 2 && second > 0.0,
        "infeasible_below_price": second.max(0.0),
        "at_price": { "verdict": at_price.verdict, "witness": at_price.witness },
    }))
}

fn signaling_summary(market: &Market, rationality: Rationality) -> Result<Value> {
    let (mech, mode, construction) = optimal_signaling(market, rationality)?;
    let revenue = signaling::revenue_sig(&mech, market)?;
    let report = obedience::check(&mech, market, rationality, mode)?;
    let mut v = json!({
        "construction": construction,
        "mechanism": Mechanism::Signaling(mech.clone()),
        "price": mech.price,
        "revenue": revenue,
        "obedience_mode": mode,
        "verdict": report.verdict_in(mode),
    });
    if rationality == Rationality::ExPost && market.buyers() >= 2 {
        v["full_obedience"] = nonexistence(market, mech.price)?;
    }
    if mode == ObedienceMode::Aggregated {
        v["per_buyer_verdict"] = to_value(&report.verdict);
    }
    Ok(v)
}

pub fn cmd_solve(scenario: &Scenario, space: Space) -> Result<Value> {
    let market = scenario.market()?;
    let mut body = match space {
        Space::Fixed => fixed_summary(&market, scenario.rationality)?,
        Space::Signaling => signaling_summary(&market, scenario.rationality)?,
    };
    body["space"] = to_value(&space);
    body["rationality"] = to_value(&scenario.rationality);
    body["buyers"] = json!(market.buyers());
    Ok(document("solve", body))
}

/// Accepts a bare mechanism, a bare signaling mechanism, or any `fps/1`
/// document with a `mechanism` field.
pub fn parse_mechanism(v: &Value) -> Result<(Mechanism, Option<ObedienceMode>)> {
    if let Some(s) = v.get("schema") {
        if s != SCHEMA {
            return Err(Error::Domain(format!("unsupported schema {s}")));
        }
    }
    let mode = match v.get("obedience_mode") {
        Some(m) => Some(serde_json::from_value(m.clone()).map_err(|e| Error::Domain(format!("obedience_mode: {e}")))?),
        None => None,
    };
    let inner = v.get("mechanism").unwrap_or(v);
    if let Ok(m) = serde_json::from_value::<Mechanism>(inner.clone()) {
        return Ok((m, mode));
    }
    serde_json::from_value::<SignalingMechanism>(inner.clone())
        .map(|m| (Mechanism::Signaling(m), mode))
        .map_err(|e| Error::Domain(format!("mechanism: {e}")))
}

/// Returns the report and whether it counts as obedient.
pub fn cmd_verify(scenario: &Scenario, mechanism: &Value, mode: Option<ObedienceMode>) -> Result<(Value, bool)> {
    let market = scenario.market()?;
    let (mech, file_mode) = parse_mechanism(mechanism)?;
    let mode = mode.or(file_mode).unwrap_or_default();
    let body = match mech {
        Mechanism::FixedPrice { price } => {
            if !(price.is_finite() && price >= 0.0) {
                return Err(Error::Domain(format!("price {price} must be finite and nonnegative")));
            }
            // Nothing is disclosed, so there is no recommendation to obey.
            json!({ "mechanism_kind": "fixed_price", "verdict": Verdict::Obedient, "constraints": [] })
        }
        Mechanism::Signaling(m) => {
            let report = obedience::check(&m, &market, scenario.rationality, mode)?;
            let mut v = to_value(&report);
            v["mechanism_kind"] = json!("signaling");
            v["verdict"] = to_value(&report.verdict_in(mode));
            v["per_buyer_verdict"] = to_value(&report.verdict);
            v["min_slack"] = json!(report.min_slack());
            v
        }
    };
    let ok = body["verdict"] == json!(Verdict::Obedient);
    let mut body = body;
    body["obedience_mode"] = to_value(&mode);
    body["rationality"] = to_value(&scenario.rationality);
    Ok((document("verify", body), ok))
}

/// Oracle payload; ex-interim scenarios solve the LP in `mode`, ex-post
/// scenarios run the restricted brute force plus the full-obedience
/// feasibility LP at its best price.
pub fn cmd_oracle(scenario: &Scenario, grid_m: Option<usize>, price_steps: Option<usize>, mode: Option<ObedienceMode>) -> Result<Value> {
    let market = scenario.market()?;
    let m = scenario.grid_m(grid_m);
    let steps = scenario.price_steps(price_steps);
    if m < 2 || steps < 1 {
        return Err(Error::Domain("grid-m must be at least 2 and price-steps at least 1".into()));
    }
    let prices = oracle::price_grid(&market, steps);
    let body = match scenario.rationality {
        Rationality::ExInterim => {
            let mode = mode.unwrap_or_default();
            let sol = oracle::oracle_exinterim(&market, m, &prices, mode)?;
            json!({
                "price": sol.price,
                "objective": sol.objective,
                "status": LpStatus::Optimal,
                "obedience_mode": mode,
                "lps_solved": sol.lps_solved,
                "mechanism": Mechanism::Signaling(SignalingMechanism::new(sol.scheme, sol.price)?),
            })
        }
        Rationality::ExPost => {
            let best = oracle::oracle_expost_restricted(&market, m, &prices)?;
            let mut v = json!({
                "price": best.price,
                "objective": best.objective,
                "status": LpStatus::Optimal,
                "obedience_mode": ObedienceMode::RecommendedOnly,
            });
            if market.buyers() >= 2 {
                let full = oracle::oracle_expost_full_infeasible(&market, m, best.price)?;
                v["full_obedience"] = json!({
                    "status": full.status,
                    "phase_one_objective": full.phase_one_objective,
                });
            }
            v
        }
    };
    let mut body = body;
    body["grid_m"] = json!(m);
    body["price_steps"] = json!(steps);
    body["rationality"] = to_value(&scenario.rationality);
    Ok(document("oracle", body))
}

/// One row of the revenue summary table. The flag is false when the
/// expected ordering between the two spaces fails.
pub fn cmd_compare(scenario: &Scenario, grid_m: Option<usize>, price_steps: Option<usize>) -> Result<(Value, bool)> {
    let market = scenario.market()?;
    let n = market.buyers();
    let fixed = fixed_summary(&market, scenario.rationality)?;
    let sig = signaling_summary(&market, scenario.rationality)?;
    let (rf, rs) = (fixed["revenue"].as_f64().unwrap_or(f64::NAN), sig["revenue"].as_f64().unwrap_or(f64::NAN));

    let (expected, holds) = match (scenario.rationality, n) {
        (_, 1) => ("equal", (rf - rs).abs() <= EQUALITY_TOL),
        (Rationality::ExInterim, _) => ("signaling_at_least_fixed", rs >= rf - EQUALITY_TOL),
        // Full obedience is impossible; the restricted revenue is reported
        // for reference only.
        (Rationality::ExPost, _) => ("no_obedient_signaling_mechanism", true),
    };

    let oracle_doc = cmd_oracle(scenario, grid_m, price_steps, None)?;
    let mut oracle_body = json!({
        "price": oracle_doc["price"],
        "objective": oracle_doc["objective"],
        "grid_m": oracle_doc["grid_m"],
        "obedience_mode": oracle_doc["obedience_mode"],
    });
    if scenario.rationality == Rationality::ExInterim && n >= 2 {
        let agg = cmd_oracle(scenario, grid_m, price_steps, Some(ObedienceMode::Aggregated))?;
        oracle_body["aggregated_objective"] = agg["objective"].clone();
    }
    let oracle_obj = oracle_body["objective"].as_f64().unwrap_or(f64::NAN);

    let body = json!({
        "rationality": scenario.rationality,
        "buyers": n,
        "fixed": { "price": fixed["price"], "revenue": rf, "revenue_common_quality": fixed["revenue_common_quality"] },
        "signaling": {
            "construction": sig["construction"],
            "price": sig["price"],
            "revenue": rs,
            "obedience_mode": sig["obedience_mode"],
            "verdict": sig["verdict"],
            "full_obedience": sig["full_obedience"],
        },
        "oracle": oracle_body,
        "deltas": { "signaling_minus_fixed": rs - rf, "oracle_minus_signaling": oracle_obj - rs },
        "dominance": { "expected": expected, "holds": holds },
    });
    Ok((document("compare", strip_nulls(body)), holds))
}

fn strip_nulls(v: Value) -> Value {
    match v {
        Value::Object(o) => Value::Object(o.into_iter().filter(|(_, v)| !v.is_null()).map(|(k, v)| (k, strip_nulls(v))).collect()),
        other => other,
    }
}

pub struct SimulationRequest {
    pub mechanism: Option<Value>,
    pub space: Space,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub behavior: Option<Behavior>,
    pub observation: QualityObservation,
    pub want_trials_csv: bool,
}

/// Estimate JSON and, on request, the per-trial CSV.
pub fn cmd_simulate(scenario: &Scenario, req: &SimulationRequest) -> Result<(Value, Option<String>)> {
    let market = scenario.market()?;
    let (mechanism, mode) = match &req.mechanism {
        Some(v) => parse_mechanism(v)?,
        None => match req.space {
            Space::Fixed => (Mechanism::FixedPrice { price: fixed_price::optimize(&market, scenario.rationality)?.price }, None),
            Space::Signaling => {
                let (m, mode, _) = optimal_signaling(&market, scenario.rationality)?;
                (Mechanism::Signaling(m), Some(mode))
            }
        },
    };
    // Mechanisms built for relaxed obedience are simulated with buyers
    // following their recommendation unless told otherwise.
    let behavior = req.behavior.unwrap_or(match mode {
        Some(ObedienceMode::Aggregated | ObedienceMode::RecommendedOnly) => Behavior::FollowRecommendation,
        _ => Behavior::PerBuyerObedience,
    });
    let trials = req.trials.or(scenario.overrides.trials).unwrap_or(DEFAULT_TRIALS);
    let seed = req.seed.or(scenario.overrides.seed).unwrap_or(0);
    let sim = Simulator::new(&market, &mechanism, scenario.rationality, behavior)?.with_observation(req.observation);
    let est = sim.run(trials, seed)?;
    let csv = req.want_trials_csv.then(|| outcomes_csv(&sim.outcomes(trials, seed)));
    let body = json!({
        "mean": est.mean,
        "stderr": est.stderr,
        "trials": est.trials,
        "seed": est.seed,
        "behavior": behavior,
        "observation": req.observation,
        "price": mechanism.price(),
        "mechanism_kind": match mechanism { Mechanism::FixedPrice { .. } => "fixed_price", Mechanism::Signaling(_) => "signaling" },
        "rationality": scenario.rationality,
    });
    Ok((document("simulate", body), csv))
}

/// CSV with columns `price, rev_fixed_expost, rev_fixed_exinterim_indicator,
/// rev_sig_restricted` over `steps` equally spaced prices.
pub fn cmd_sweep(scenario: &Scenario, price_min: Option<f64>, price_max: Option<f64>, steps: Option<usize>) -> Result<String> {
    let market = scenario.market()?;
    let lo = price_min.unwrap_or(0.0);
    let hi = price_max.unwrap_or_else(|| market.top_valuation());
    let steps = scenario.price_steps(steps);
    if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi > lo) {
        return Err(Error::Domain(format!("price range [{lo}, {hi}] must satisfy 0 <= min < max")));
    }
    if steps < 2 {
        return Err(Error::Domain("price-steps must be at least 2".into()));
    }
    let mut out = String::from("price,rev_fixed_expost,rev_fixed_exinterim_indicator,rev_sig_restricted\n");
    for k in 0..steps {
        let p = lo + (hi - lo) * k as f64 / (steps - 1) as f64;
        let row = [
            p,
            fixed_price::revenue_ex_post(&market, p),
            fixed_price::revenue_ex_interim(&market, p)?,
            signaling::revenue_restricted(&market, p),
        ];
        let cells: Vec<String> = row.iter().map(|x| round_sig(*x).to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    Ok(out)
}

/// Exit code for a library error: bad input is a usage error, numerical
/// trouble is internal.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::QuadratureDidNotConverge { .. } | Error::Lp(_) => EXIT_INTERNAL,
        _ => EXIT_USAGE,
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Domain(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).unwrap_or_default();
    s.push('\n');
    s
}

fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Solve { scenario, space, out } => {
            let doc = cmd_solve(&Scenario::load(&scenario)?, space)?;
            emit(&pretty(&doc), out.as_deref())?;
            Ok(EXIT_OK)
        }
        Command::Verify { scenario, mechanism, mode, out } => {
            let mech: Value = serde_json::from_str(&read(&mechanism)?)
                .map_err(|e| Error::Domain(format!("{}: {e}", mechanism.display())))?;
            let (doc, ok) = cmd_verify(&Scenario::load(&scenario)?, &mech, mode)?;
            emit(&pretty(&doc), out.as_deref())?;
            Ok(if ok { EXIT_OK } else { EXIT_FAILED_CHECK })
        }
        Command::Compare { scenario, grid_m, price_steps, out } => {
            let (doc, holds) = cmd_compare(&Scenario::load(&scenario)?, grid_m, price_steps)?;
            emit(&pretty(&doc), out.as_deref())?;
            Ok(if holds { EXIT_OK } else { EXIT_FAILED_CHECK })
        }
        Command::Oracle { scenario, grid_m, price_steps, mode, out } => {
            let doc = cmd_oracle(&Scenario::load(&scenario)?, grid_m, price_steps, mode)?;
            emit(&pretty(&doc), out.as_deref())?;
            Ok(EXIT_OK)
        }
        Command::Simulate { scenario, mechanism, space, trials, seed, behavior, observation, trials_csv, out } => {
            let mechanism = match mechanism {
                Some(p) => Some(serde_json::from_str(&read(&p)?).map_err(|e| Error::Domain(format!("{}: {e}", p.display())))?),
                None => None,
            };
            let req = SimulationRequest {
                mechanism,
                space,
                trials,
                seed,
                behavior,
                observation,
                want_trials_csv: trials_csv.is_some(),
            };
            let (doc, csv) = cmd_simulate(&Scenario::load(&scenario)?, &req)?;
            if let (Some(path), Some(csv)) = (trials_csv.as_deref(), csv) {
                emit(&csv, Some(path))?;
            }
            emit(&pretty(&doc), out.as_deref())?;
            Ok(EXIT_OK)
        }
        Command::Sweep { scenario, price_min, price_max, price_steps, out } => {
            let csv = cmd_sweep(&Scenario::load(&scenario)?, price_min, price_max, price_steps)?;
            emit(&csv, out.as_deref())?;
            Ok(EXIT_OK)
        }
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(buyers: &str, rationality: &str) -> Scenario {
        Scenario::from_json(&format!(
            r#"{{"distribution": {{"family": "Uniform", "support": [0, 1]}}, "buyers": {buyers}, "rationality": "{rationality}"}}"#
        ))
        .unwrap()
    }

    const Q: &str = r#"[{"form": "Linear", "params": {"a": 0, "b": 1}}]"#;
    const CROSSING: &str =
        r#"[{"form": "Linear", "params": {"a": 0.3, "b": 0.4}}, {"form": "Linear", "params": {"a": 0, "b": 1}}]"#;
    const HALF: &str =
        r#"[{"form": "Linear", "params": {"a": 0, "b": 1}}, {"form": "Linear", "params": {"a": 0, "b": 0.5}}]"#;

    #[test]
    fn rounding_keeps_twelve_digits() {
        assert_eq!(round_sig(1.0 / 3.0), 0.333333333333);
        assert_eq!(round_sig(0.575), 0.575);
        assert!(round_sig(-0.0).is_sign_positive());
        assert_eq!(round_sig(-2.0 / 3.0 * 1e-5), -6.66666666667e-6);
        assert_eq!(round_numbers(json!({"a": [1.0 / 7.0], "b": 3})), json!({"a": [0.142857142857], "b": 3}));
    }

    #[test]
    fn scenario_parsing() {
        let s = scenario(Q, "ExPost");
        assert_eq!(s.rationality, Rationality::ExPost);
        assert_eq!(scenario(Q, "ex_interim").rationality, Rationality::ExInterim);
        let beta = Scenario::from_json(
            r#"{"distribution": {"family": "ScaledBeta", "params": {"alpha": 2, "beta": 2}, "support": [0, 1]},
                "buyers": [{"form": "Power", "params": {"scale": 1, "exponent": 2}}],
                "rationality": "ex_post", "overrides": {"grid_m": 51}}"#,
        )
        .unwrap();
        assert_eq!(beta.overrides.grid_m, Some(51));
        assert!(beta.market().is_ok());
        assert!(Scenario::from_json(r#"{"distribution": {"family": "Uniform", "support": [0, 1]}, "buyers": []}"#).is_err());
        let empty = Scenario::from_json(
            r#"{"distribution": {"family": "Uniform", "support": [0, 1]}, "buyers": [], "rationality": "ex_post"}"#,
        )
        .unwrap();
        assert!(empty.market().is_err());
    }

    #[test]
    fn solve_examples() {
        let doc = cmd_solve(&scenario(Q, "ex_post"), Space::Fixed).unwrap();
        assert_eq!(doc["schema"], "fps/1");
        assert!((doc["price"].as_f64().unwrap() - 0.5).abs() < 1e-6);
        assert!((doc["revenue"].as_f64().unwrap() - 0.25).abs() < 1e-9);

        let doc = cmd_solve(&scenario(CROSSING, "ex_interim"), Space::Signaling).unwrap();
        assert_eq!(doc["price"].as_f64().unwrap(), 0.575);
        assert_eq!(doc["revenue"].as_f64().unwrap(), 0.575);
        assert_eq!(doc["obedience_mode"], "aggregated");

        let doc = cmd_solve(&scenario(HALF, "ex_post"), Space::Signaling).unwrap();
        assert_eq!(doc["full_obedience"]["no_obedient_mechanism"], true);
        assert_eq!(doc["construction"], "restricted_partition");
        assert!((doc["revenue"].as_f64().unwrap() - 0.25).abs() < 1e-6);
    }

    #[test]
    fn solve_then_verify_round_trips() {
        for (buyers, rationality) in [(Q, "ex_post"), (Q, "ex_interim"), (CROSSING, "ex_interim"), (HALF, "ex_post")] {
            let s = scenario(buyers, rationality);
            for space in [Space::Fixed, Space::Signaling] {
                let doc = cmd_solve(&s, space).unwrap();
                let (report, ok) = cmd_verify(&s, &doc, None).unwrap();
                assert!(ok, "{buyers} {rationality} {space:?}: {report}");
            }
        }
    }

    #[test]
    fn verify_detects_tampering_and_bad_dimension() {
        let s = scenario(Q, "ex_interim");
        let mut doc = cmd_solve(&s, Space::Signaling).unwrap();
        doc["mechanism"]["price"] = json!(0.6);
        let (report, ok) = cmd_verify(&s, &doc, None).unwrap();
        assert!(!ok);
        assert_eq!(report["verdict"], "violated");

        let two = cmd_solve(&scenario(CROSSING, "ex_interim"), Space::Signaling).unwrap();
        let single = cmd_solve(&s, Space::Signaling).unwrap();
        // A single-buyer recipient index is fine for two buyers, the reverse is not.
        assert!(cmd_verify(&scenario(CROSSING, "ex_interim"), &single, None).is_ok());
        let mut bad = two.clone();
        bad["mechanism"]["scheme"] = json!({"representation": "always_recommend", "recipient": {"Buyer": 1}});
        let e = cmd_verify(&s, &bad, None).unwrap_err();
        assert_eq!(exit_code(&e), EXIT_USAGE);
    }

    #[test]
    fn compare_rows() {
        let (doc, holds) = cmd_compare(&scenario(Q, "ex_post"), Some(101), Some(101)).unwrap();
        assert!(holds, "{doc}");
        assert_eq!(doc["dominance"]["expected"], "equal");

        let (doc, holds) = cmd_compare(&scenario(CROSSING, "ex_interim"), Some(101), Some(101)).unwrap();
        assert!(holds);
        assert!((doc["signaling"]["revenue"].as_f64().unwrap() - 0.575).abs() < 1e-9);
        assert!((doc["fixed"]["revenue"].as_f64().unwrap() - 0.5).abs() < 1e-9);

        let (doc, _) = cmd_compare(&scenario(HALF, "ex_post"), Some(101), Some(101)).unwrap();
        assert_eq!(doc["signaling"]["full_obedience"]["no_obedient_mechanism"], true);
        assert!(doc["fixed"]["revenue"].as_f64().unwrap() > 0.0);
    }

    #[test]
    fn sweep_examples() {
        let s = scenario(Q, "ex_post");
        let csv = cmd_sweep(&s, Some(0.0), Some(1.0), Some(11)).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "price,rev_fixed_expost,rev_fixed_exinterim_indicator,rev_sig_restricted");
        let row: Vec<f64> = csv.lines().nth(6).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(row[0], 0.5);
        assert_eq!(row[1], 0.25);
        assert_eq!(cmd_sweep(&s, Some(0.0), Some(1.0), Some(2)).unwrap().lines().count(), 3);
        assert!(cmd_sweep(&s, Some(0.0), Some(0.0), Some(5)).is_err());
        assert_eq!(csv, cmd_sweep(&s, Some(0.0), Some(1.0), Some(11)).unwrap());
    }

    #[test]
    fn simulate_follows_recorded_mode() {
        let s = scenario(CROSSING, "ex_interim");
        let req = SimulationRequest {
            mechanism: None,
            space: Space::Signaling,
            trials: Some(2_000),
            seed: Some(4),
            behavior: None,
            observation: QualityObservation::Common,
            want_trials_csv: true,
        };
        let (doc, csv) = cmd_simulate(&s, &req).unwrap();
        assert_eq!(doc["behavior"], "follow_recommendation");
        assert_eq!(doc["mean"].as_f64().unwrap(), 0.575);
        assert_eq!(doc["stderr"].as_f64().unwrap(), 0.0);
        assert_eq!(csv.unwrap().lines().count(), 2_001);
    }
}
