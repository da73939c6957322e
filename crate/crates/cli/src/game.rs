//! Cost-sharing game on a file of `(player, stand-alone cost)` rows.

use std::io::Write;
use std::path::Path;

use fcas_core::allocation::{
    group_by_type, nucleolus_airport, nucleolus_lp_oracle, proportional, shapley_airport, shapley_bruteforce,
    AirportGame, Allocation, Rule, GROUP_TOL, NUCLEOLUS_ORACLE_MAX, SHAPLEY_ORACLE_MAX,
};

use crate::exit::{CliError, ExitCode};

/// Reads `id,cost` rows. A first row whose cost column is not a number is
/// taken as a header; blank lines and `#` comments are skipped.
pub fn read_costs(path: &Path) -> Result<Vec<(String, f64)>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows: Vec<(String, f64)> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::new(ExitCode::Validation, format!("{}: {e}", path.display())))?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let bad = |msg: String| CliError::new(ExitCode::Validation, format!("{} row {}: {msg}", path.display(), i + 1));
        if rec.len() != 2 {
            return Err(bad(format!("expected 2 columns, found {}", rec.len())));
        }
        let cost = match rec[1].parse::<f64>() {
            Ok(v) => v,
            Err(_) if i == 0 && rows.is_empty() => continue,
            Err(_) => return Err(bad(format!("cost `{}` is not a number", &rec[1]))),
        };
        if rows.iter().any(|r| r.0 == rec[0]) {
            return Err(bad(format!("duplicate player `{}`", &rec[0])));
        }
        rows.push((rec[0].to_string(), cost));
    }
    if rows.is_empty() {
        return Err(CliError::new(ExitCode::Validation, format!("{}: no players", path.display())));
    }
    Ok(rows)
}

pub fn allocate(game: &AirportGame, rule: Rule) -> Result<Allocation, CliError> {
    Ok(match rule {
        Rule::Proportional => proportional(game),
        Rule::Shapley => shapley_airport(game),
        Rule::Nucleolus => nucleolus_airport(&group_by_type(game, GROUP_TOL))?,
    })
}

/// Brute-force counterpart of `rule`, if it has one.
pub fn oracle(game: &AirportGame, rule: Rule) -> Result<Option<Allocation>, CliError> {
    Ok(match rule {
        Rule::Proportional => None,
        Rule::Shapley => Some(shapley_bruteforce(game, SHAPLEY_ORACLE_MAX)?),
        Rule::Nucleolus => Some(nucleolus_lp_oracle(game, NUCLEOLUS_ORACLE_MAX)?),
    })
}

pub fn max_deviation(a: &Allocation, b: &Allocation) -> f64 {
    a.shares.iter().map(|(id, v)| (v - b.get(id).unwrap_or(f64::NAN)).abs()).fold(0.0, f64::max)
}

/// Prints `player,cost,<rule>...` in input order to `out`, and the oracle
/// deviations to `log`.
pub fn run_game(
    path: &Path,
    rules: &[Rule],
    with_oracle: bool,
    out: &mut impl Write,
    log: &mut impl Write,
) -> Result<(), CliError> {
    let players = read_costs(path)?;
    let game = AirportGame::new(0, players.iter().cloned())?;
    let mut columns = Vec::new();
    for &rule in rules {
        let a = allocate(&game, rule)?;
        if with_oracle {
            match oracle(&game, rule)? {
                Some(o) => {
                    let _ = writeln!(log, "oracle {}: max deviation {:.3e}", rule.name(), max_deviation(&a, &o));
                }
                None if rules.len() == 1 => {
                    return Err(CliError::new(ExitCode::Validation, "proportional has no oracle"));
                }
                None => {}
            }
        }
        columns.push(a);
    }
    let io = |e: std::io::Error| CliError::new(ExitCode::Io, e.to_string());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["player".to_string(), "cost".to_string()];
    header.extend(columns.iter().map(|a| a.rule.clone()));
    w.write_record(&header).map_err(|e| CliError::new(ExitCode::Io, e.to_string()))?;
    for (id, cost) in &players {
        let mut rec = vec![id.clone(), cost.to_string()];
        rec.extend(columns.iter().map(|a| a.get(id).unwrap_or(0.0).to_string()));
        w.write_record(&rec).map_err(|e| CliError::new(ExitCode::Io, e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::new(ExitCode::Io, e.error().to_string()))?;
    out.write_all(&bytes).map_err(io)
}
