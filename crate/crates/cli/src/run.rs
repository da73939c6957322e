//! The end-to-end pipeline: clearing, prices and audit, stand-alone
//! markets, allocations.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use log::{info, warn};
use serde::Serialize;

use fcas_core::allocation::{allocate_hourly, Rule, GROUP_TOL};
use fcas_core::pricing::{
    as_prices_from_duals, duality_audit, standalone_markets_with, AUDIT_TOL, PRICE_TOL, ZERO_SNAP,
};
use fcas_core::scenario::parse_scenario;
use fcas_core::uc::{build_uc, solve_mip_with, solve_relaxed_with, LossRule, SolveOptions, SolveStats};

use crate::exit::{CliError, ExitCode};
use crate::report::{sha256_hex, write_manifest, RunManifest, StageStatus, Tolerances, Writer};

/// Loss rule as given on the command line: `endogenous` or `fixed:<MW>`.
#[derive(Clone, Debug, PartialEq)]
pub enum LossArg {
    Endogenous,
    Fixed(f64),
}

impl FromStr for LossArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "endogenous" => Ok(Self::Endogenous),
            _ => match s.strip_prefix("fixed:").map(str::parse::<f64>) {
                Some(Ok(v)) if v.is_finite() && v >= 0.0 => Ok(Self::Fixed(v)),
                _ => Err(format!("expected `endogenous` or `fixed:<MW>`, got `{s}`")),
            },
        }
    }
}

impl std::fmt::Display for LossArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Endogenous => f.write_str("endogenous"),
            Self::Fixed(v) => write!(f, "fixed:{v}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub scenario: PathBuf,
    pub out_dir: PathBuf,
    pub rules: Vec<Rule>,
    pub loss: LossArg,
    pub gap: f64,
    pub hours: Option<usize>,
    pub node_limit: usize,
    pub time_limit: Option<Duration>,
    pub int_tol: f64,
    pub cone_tol: f64,
}

impl RunConfig {
    pub fn new(scenario: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            scenario: scenario.into(),
            out_dir: out_dir.into(),
            rules: Rule::ALL.to_vec(),
            loss: LossArg::Endogenous,
            gap: 1e-6,
            hours: None,
            node_limit: 500,
            time_limit: None,
            int_tol: 1e-6,
            cone_tol: 1e-9,
        }
    }

    fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            rel_gap: self.gap,
            int_tol: self.int_tol,
            cone_tol: self.cone_tol,
            node_limit: self.node_limit,
            time_limit: self.time_limit,
            ..SolveOptions::default()
        }
    }

    /// Every input that can change numeric outputs, in a stable order.
    fn fingerprint(&self, scenario_sha: &str) -> String {
        let rules: Vec<&str> = self.rules.iter().map(|r| r.name()).collect();
        format!(
            "{}|{scenario_sha}|{}|{}|{:e}|{:?}|{}|{:?}|{:e}|{:e}",
            env!("CARGO_PKG_VERSION"),
            rules.join(","),
            self.loss,
            self.gap,
            self.hours,
            self.node_limit,
            self.time_limit.map(|d| d.as_millis()),
            self.int_tol,
            self.cone_tol,
        )
    }
}

/// Solver statistics without wall time, so reruns stay byte-identical.
#[derive(Serialize)]
struct StatsView {
    nodes: usize,
    iterations: usize,
    cut_rounds: usize,
    cuts: usize,
    mip_gap: f64,
    duality_gap: f64,
    cs_residual: f64,
    cone_violation: f64,
    gap_reached: bool,
}

impl From<&SolveStats> for StatsView {
    fn from(s: &SolveStats) -> Self {
        Self {
            nodes: s.nodes,
            iterations: s.iterations,
            cut_rounds: s.cut_rounds,
            cuts: s.cuts,
            mip_gap: s.mip_gap,
            duality_gap: s.duality_gap,
            cs_residual: s.cs_residual,
            cone_violation: s.cone_violation,
            gap_reached: s.gap_reached,
        }
    }
}

#[derive(Serialize)]
struct AuditReport<'a> {
    price_check_tolerance: f64,
    audit_tolerance: f64,
    /// Largest hourly `|P^Loss*omega - services| / max(1, P^Loss*omega)`.
    omega_identity_error: f64,
    relaxed: StatsView,
    breakdown: &'a fcas_core::pricing::MarketBreakdown,
}

#[derive(Serialize)]
struct MipReport {
    loss_rule: String,
    stats: StatsView,
    objective: f64,
}

struct Stages {
    list: Vec<StageStatus>,
    clock: Instant,
}

impl Stages {
    fn new() -> Self {
        Self { list: Vec::new(), clock: Instant::now() }
    }

    fn done(&mut self, stage: &str, warning: Option<String>) {
        if let Some(w) = &warning {
            warn!("{stage}: {w}");
        } else {
            info!("{stage}: ok");
        }
        self.list.push(StageStatus {
            stage: stage.into(),
            status: if warning.is_some() { "warning" } else { "ok" }.into(),
            message: warning,
            elapsed_s: self.clock.elapsed().as_secs_f64(),
        });
        self.clock = Instant::now();
    }

    fn failed(&mut self, stage: &str, e: &CliError) {
        self.list.push(StageStatus {
            stage: stage.into(),
            status: "failed".into(),
            message: Some(e.message.clone()),
            elapsed_s: self.clock.elapsed().as_secs_f64(),
        });
    }
}

/// Runs the pipeline and writes the manifest, also when a stage fails.
/// Returns the manifest on success.
pub fn run(cfg: &RunConfig) -> Result<RunManifest, CliError> {
    let started_at = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    let bytes = std::fs::read(&cfg.scenario).map_err(|e| CliError::io(&cfg.scenario, e))?;
    let scenario_sha = sha256_hex(&bytes);
    let run_id = sha256_hex(cfg.fingerprint(&scenario_sha).as_bytes())[..16].to_string();
    let mut out = Writer::new(&cfg.out_dir, &run_id)?;
    let mut stages = Stages::new();

    let result = pipeline(cfg, &bytes, &mut out, &mut stages);
    let hours = match &result {
        Ok(h) => *h,
        Err((_, h)) => *h,
    };
    let manifest = RunManifest {
        run_id,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        scenario_file: cfg.scenario.display().to_string(),
        scenario_sha256: scenario_sha,
        hours,
        loss_rule: cfg.loss.to_string(),
        rules: cfg.rules.iter().map(|r| r.name().to_string()).collect(),
        node_limit: cfg.node_limit,
        tolerances: Tolerances {
            mip_gap: cfg.gap,
            integrality: cfg.int_tol,
            cone: cfg.cone_tol,
            price_check: PRICE_TOL,
            audit: AUDIT_TOL,
            zero_snap: ZERO_SNAP,
            type_grouping: GROUP_TOL,
        },
        started_at,
        finished_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        status: if result.is_ok() { "ok" } else { "failed" }.into(),
        stages: stages.list,
        files: out.files().to_vec(),
    };
    write_manifest(out.dir(), &manifest)?;
    match result {
        Ok(_) => Ok(manifest),
        Err((e, _)) => Err(e),
    }
}

type StageResult<T> = Result<T, (CliError, usize)>;

fn pipeline(cfg: &RunConfig, bytes: &[u8], out: &mut Writer, stages: &mut Stages) -> StageResult<usize> {
    let mut hours = 0;
    macro_rules! stage {
        ($name:expr, $body:expr) => {
            match (|| -> Result<_, CliError> { $body })() {
                Ok(v) => v,
                Err(e) => {
                    stages.failed($name, &e);
                    return Err((e, hours));
                }
            }
        };
    }

    let scenario = stage!("scenario", {
        let text = std::str::from_utf8(bytes).map_err(|e| CliError::new(ExitCode::Validation, e.to_string()))?;
        let s = parse_scenario(text)?;
        match cfg.hours {
            Some(0) => Err(CliError::new(ExitCode::Validation, "--hours must be at least 1")),
            Some(h) => Ok(s.truncated(h)),
            None => Ok(s),
        }
    });
    hours = scenario.horizon;
    stages.done("scenario", None);

    let opts = cfg.solve_options();
    let loss_rule = match cfg.loss {
        LossArg::Endogenous => LossRule::EndogenousMax,
        LossArg::Fixed(v) => LossRule::FixedProfile(vec![v; hours]),
    };

    let (schedule, dispatch, stats) = stage!("commitment", {
        let model = build_uc(&scenario, loss_rule.clone(), false)?;
        let r = solve_mip_with(&model, &opts)?;
        out.commitment(&scenario, &r.0)?;
        out.dispatch(&scenario, &r.1)?;
        out.json("commitment.json", &MipReport { loss_rule: cfg.loss.to_string(), stats: (&r.2).into(), objective: r.1.objective })?;
        Ok(r)
    });
    let gap_note = (!stats.gap_reached)
        .then(|| format!("gap {:.3e} above target {:.1e} after {} nodes", stats.mip_gap, cfg.gap, stats.nodes));
    stages.done("commitment", gap_note);

    stage!("prices", {
        let model = build_uc(&scenario, loss_rule.clone(), true)?;
        let (primal, duals, rstats) = solve_relaxed_with(&model, &opts)?;
        let prices = as_prices_from_duals(&duals, &scenario.params)?;
        let breakdown = duality_audit(&primal, &duals, &scenario)?;
        let omega_identity_error = breakdown
            .hours
            .iter()
            .map(|h| (h.omega - h.services()).abs() / h.omega.abs().max(1.0))
            .fold(0.0, f64::max);
        out.prices(&prices)?;
        out.json(
            "audit.json",
            &AuditReport {
                price_check_tolerance: PRICE_TOL,
                audit_tolerance: AUDIT_TOL,
                omega_identity_error,
                relaxed: (&rstats).into(),
                breakdown: &breakdown,
            },
        )?;
        Ok(())
    });
    stages.done("prices", None);

    let standalone = stage!("standalone", {
        let sa = standalone_markets_with(&scenario, &schedule, &dispatch, &opts)?;
        out.standalone(&sa)?;
        Ok(sa)
    });
    stages.done("standalone", None);

    for rule in &cfg.rules {
        let name = format!("allocation:{}", rule.name());
        stage!(&name, {
            let series = allocate_hourly(&standalone, *rule)?;
            let gap = series.worst_efficiency_gap();
            let scale = standalone.hours.iter().flatten().fold(1.0f64, |m, e| m.max(e.omega));
            if gap > 1e-9 * scale {
                return Err(CliError::new(ExitCode::Internal, format!("{} allocation misses efficiency by {gap:e}", rule.name())));
            }
            out.allocation(&standalone, &series)
        });
        stages.done(&name, None);
    }
    Ok(hours)
}

/// Loads and validates a scenario file.
pub fn validate(path: &Path) -> Result<fcas_core::Scenario, CliError> {
    Ok(fcas_core::load_scenario(path)?)
}
