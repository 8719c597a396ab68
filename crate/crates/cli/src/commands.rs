use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use gagt::experiments::{noise_control, run_batch, tau_sweep, ExperimentPlan};
use gagt::game::{fmt_payoff, validate_ordering, OrderingReport};
use gagt::stats::{linear_regression, mann_whitney, median, MannWhitneyResult, RegressionResult};
use gagt::{GaConfig, GameModel, NoiseKind, PayoffMatrix};
use serde::Serialize;
use serde_json::Map;

use crate::args::{
    BatchArgs, Cli, Command, NoiseArgs, ReportArgs, ReportFormat, RunArgs, StatsCommand, SweepArgs,
    ValidateArgs,
};
use crate::config::{read_file, Resolved};
use crate::error::CliError;
use crate::output::{deliver, json_bytes, render, to_value, InstanceInfo, Manifest};

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    let verbose = cli.verbose;
    match cli.command {
        Command::Run(a) => run(&a, verbose),
        Command::Batch(a) => batch(&a, verbose),
        Command::Sweep(a) => sweep(&a, verbose),
        Command::Noise(a) => noise(&a, verbose),
        Command::Stats { command } => stats(&command),
        Command::Validate(a) => validate(&a),
    }
}

/// Warns on standard error when the active payoffs break their game's ordering.
fn warn_ordering(config: &GaConfig) {
    if let (Some(game), Some(matrix)) = (config.game, config.matrix()) {
        let report = validate_ordering(game, &matrix);
        if !report.satisfied {
            eprintln!(
                "warning: {} payoffs violate the {} ordering: {}",
                game.tag(),
                game.name(),
                report.violations.join("; ")
            );
        }
    }
}

fn progress(verbose: u8, msg: impl FnOnce() -> String) {
    if verbose > 0 {
        eprintln!("{}", msg());
    }
}

fn run(a: &RunArgs, verbose: u8) -> Result<(), CliError> {
    let r = Resolved::new(&a.ga)?;
    let config = r.ga_config(&a.ga)?;
    let format = r.format(&a.ga.output)?;
    let (path, inst) = r.instance(&a.ga)?;
    warn_ordering(&config);
    progress(verbose, || {
        format!(
            "running {} on {} ({} items, {} sacks), N={} G={}",
            config.game.map_or("control", |g| g.tag()),
            inst.name,
            inst.n_items(),
            inst.n_sacks(),
            config.population_size,
            config.generations
        )
    });
    let result = gagt::ga::run(&config, &inst)?;

    let mut manifest = Manifest::new("run", &config, InstanceInfo::new(&path, &inst));
    manifest.set(
        "effective_mutation_rate",
        config.mutation_rate_for(inst.n_items()),
    );
    let mut summary = Map::new();
    summary.insert("best_value".into(), to_value(result.best_value)?);
    summary.insert(
        "best_solution".into(),
        to_value(result.best_solution.as_ref().map(|s| s.to_string()))?,
    );
    summary.insert(
        "final_cheater_fraction".into(),
        to_value(gagt::ga::cheater_fraction(&result.final_population))?,
    );
    let bytes = render(&manifest, &summary, &result.generations, format)?;
    deliver(&bytes, a.ga.output.out.as_ref())
}

fn experiment_plan(
    r: &Resolved,
    config: &GaConfig,
    games: Vec<GameModel>,
    replica_args: &crate::args::ReplicaArgs,
    instance: &Path,
) -> Result<ExperimentPlan, CliError> {
    let (replicas, control, workers) = r.replicas(replica_args);
    if replicas < 1 {
        return Err(CliError::Usage("--replicas: must be at least 1".into()));
    }
    if control < 1 {
        return Err(CliError::Usage(
            "--control-replicas: must be at least 1".into(),
        ));
    }
    if workers < 1 {
        return Err(CliError::Usage("--workers: must be at least 1".into()));
    }
    let mut plan = ExperimentPlan::new(games, replicas, control, config.clone());
    plan.workers = workers;
    plan.instance = Some(instance.display().to_string());
    Ok(plan)
}

fn batch(a: &BatchArgs, verbose: u8) -> Result<(), CliError> {
    let r = Resolved::new(&a.ga)?;
    let config = r.ga_config(&a.ga)?;
    let format = r.format(&a.ga.output)?;
    let games = match config.game {
        None => Vec::new(),
        Some(g) => {
            if let Some(list) = &a.games {
                list.clone()
            } else if a.ga.game.is_some() {
                vec![g]
            } else if let Some(list) = r.plan.games(&r.plan_path)? {
                list
            } else if r.plan.game.is_some() {
                vec![g]
            } else {
                GameModel::ALL.to_vec()
            }
        }
    };
    let (path, inst) = r.instance(&a.ga)?;
    for &g in &games {
        warn_ordering(&GaConfig {
            game: Some(g),
            ..config.clone()
        });
    }
    let plan = experiment_plan(&r, &config, games, &a.replicas, &path)?;
    progress(verbose, || {
        format!(
            "batch on {}: {} game(s) x {} replicas, {} control replicas, {} worker(s)",
            inst.name,
            plan.games.len(),
            plan.replicas_per_game,
            plan.control_replicas,
            plan.workers
        )
    });
    let runs = run_batch(&plan, &inst)?;

    let mut manifest = Manifest::new("batch", &config, InstanceInfo::new(&path, &inst));
    manifest.set(
        "games",
        plan.games.iter().map(|g| g.tag()).collect::<Vec<_>>(),
    );
    manifest.set("replicas_per_game", plan.replicas_per_game);
    manifest.set("control_replicas", plan.control_replicas);
    let bytes = render(&manifest, &Map::new(), &runs, format)?;
    deliver(&bytes, a.ga.output.out.as_ref())
}

fn sweep(a: &SweepArgs, verbose: u8) -> Result<(), CliError> {
    let r = Resolved::new(&a.ga)?;
    let config = r.ga_config(&a.ga)?;
    let format = r.format(&a.ga.output)?;
    let Some(game) = config.game else {
        return Err(CliError::Usage(
            "--control: a cheating-degree sweep needs a game model".into(),
        ));
    };
    let taus = a
        .tau_list
        .clone()
        .or_else(|| r.plan.tau_list.clone())
        .ok_or_else(|| {
            CliError::Usage("--tau-list: a list of cheating degrees is required".into())
        })?;
    if let Some(t) = taus.iter().find(|t| !(0.0..=100.0).contains(*t)) {
        return Err(CliError::Usage(format!(
            "--tau-list: {t} lies outside [0, 100]"
        )));
    }
    let (path, inst) = r.instance(&a.ga)?;
    warn_ordering(&config);
    let plan = experiment_plan(&r, &config, vec![game], &a.replicas, &path)?;
    progress(verbose, || {
        format!(
            "sweep of {} on {}: {} degree(s) x {} replicas",
            game.tag(),
            inst.name,
            taus.len(),
            plan.replicas_per_game
        )
    });
    let result = tau_sweep(&plan, &taus, &inst)?;

    let mut manifest = Manifest::new("sweep", &config, InstanceInfo::new(&path, &inst));
    manifest.set("game", game.tag());
    manifest.set(
        "tau_list",
        result.rows.iter().map(|row| row.tau).collect::<Vec<_>>(),
    );
    manifest.set("replicas_per_tau", plan.replicas_per_game);
    manifest.set("aggregate", a.aggregate);
    let bytes = if a.aggregate {
        render(&manifest, &Map::new(), &result.rows, format)?
    } else {
        render(&manifest, &Map::new(), &result.runs, format)?
    };
    deliver(&bytes, a.ga.output.out.as_ref())
}

fn noise(a: &NoiseArgs, verbose: u8) -> Result<(), CliError> {
    let r = Resolved::new(&a.ga)?;
    let config = r.ga_config(&a.ga)?;
    let format = r.format(&a.ga.output)?;
    let Some(game) = config.game else {
        return Err(CliError::Usage(
            "--control: noise replaces game payoffs and needs a game model".into(),
        ));
    };
    let kind = match a.kind {
        Some(k) => k,
        None => r
            .plan
            .kind(&r.plan_path)?
            .ok_or_else(|| CliError::Usage("--kind: uniform or gaussian is required".into()))?,
    };
    if kind == NoiseKind::Off {
        return Err(CliError::Usage(
            "--kind: must be uniform or gaussian".into(),
        ));
    }
    let (path, inst) = r.instance(&a.ga)?;
    let plan = experiment_plan(&r, &config, vec![game], &a.replicas, &path)?;
    progress(verbose, || {
        format!(
            "{kind} noise anchored to {} on {}: {} replicas",
            game.tag(),
            inst.name,
            plan.replicas_per_game
        )
    });
    let runs = noise_control(&plan, kind, &inst)?;

    let mut manifest = Manifest::new("noise", &config, InstanceInfo::new(&path, &inst));
    manifest.set("kind", kind);
    manifest.set("replicas", plan.replicas_per_game);
    let bytes = render(&manifest, &Map::new(), &runs, format)?;
    deliver(&bytes, a.ga.output.out.as_ref())
}

// ---------------------------------------------------------------------------
// stats

struct Table {
    headers: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

fn read_table(path: &Path) -> Result<Table, CliError> {
    let text = read_file(path)?;
    let at = |e: csv::Error| CliError::Data(format!("{}: {e}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(at)?
        .iter()
        .map(String::from)
        .collect();
    let rows = reader
        .records()
        .collect::<Result<Vec<_>, _>>()
        .map_err(at)?;
    Ok(Table { headers, rows })
}

impl Table {
    fn column(&self, flag: &str, name: &str, path: &Path) -> Result<usize, CliError> {
        self.headers.iter().position(|h| h == name).ok_or_else(|| {
            CliError::Usage(format!(
                "{flag}: no column {name:?} in {} (columns: {})",
                path.display(),
                self.headers.join(", ")
            ))
        })
    }
}

/// Parses a numeric cell; empty cells read as absent.
fn number(cell: &str, row: usize, column: &str, path: &Path) -> Result<Option<f64>, CliError> {
    if cell.is_empty() {
        return Ok(None);
    }
    cell.parse().map(Some).map_err(|_| {
        CliError::Data(format!(
            "{}: data row {row}, column {column:?}: {cell:?} is not a number",
            path.display()
        ))
    })
}

fn note_skipped(skipped: usize) {
    if skipped > 0 {
        eprintln!("note: skipped {skipped} row(s) with empty cells");
    }
}

fn stats(command: &StatsCommand) -> Result<(), CliError> {
    match command {
        StatsCommand::Regress { x, y, file, output } => regress(x, y, file, output),
        StatsCommand::Mwu {
            group,
            value,
            groups,
            fill_empty,
            file,
            output,
        } => mwu(group, value, groups.as_deref(), *fill_empty, file, output),
    }
}

#[derive(Serialize)]
struct RegressionReport<'a> {
    file: String,
    x: &'a str,
    y: &'a str,
    skipped_rows: usize,
    #[serde(flatten)]
    result: RegressionResult,
}

fn regress(x: &str, y: &str, file: &Path, output: &ReportArgs) -> Result<(), CliError> {
    let table = read_table(file)?;
    let (xi, yi) = (table.column("--x", x, file)?, table.column("--y", y, file)?);
    let (mut xs, mut ys, mut skipped) = (Vec::new(), Vec::new(), 0);
    for (i, row) in table.rows.iter().enumerate() {
        let xv = number(&row[xi], i + 1, x, file)?;
        let yv = number(&row[yi], i + 1, y, file)?;
        match (xv, yv) {
            (Some(a), Some(b)) => {
                xs.push(a);
                ys.push(b);
            }
            _ => skipped += 1,
        }
    }
    note_skipped(skipped);
    let result = linear_regression(&xs, &ys)
        .map_err(|e| CliError::Data(format!("{}: {e}", file.display())))?;
    let report = RegressionReport {
        file: file.display().to_string(),
        x,
        y,
        skipped_rows: skipped,
        result,
    };
    let bytes = match output.format {
        ReportFormat::Json => json_bytes(&report)?,
        ReportFormat::Text => regression_text(&report).into_bytes(),
    };
    deliver(&bytes, output.out.as_ref())
}

/// Fixed-point for ordinary magnitudes, scientific otherwise.
fn num(v: f64) -> String {
    let a = v.abs();
    if !v.is_finite() || v == 0.0 {
        format!("{v}")
    } else if !(1e-4..1e9).contains(&a) {
        format!("{v:.6e}")
    } else {
        format!("{v:.6}")
    }
}

fn p_value(p: f64) -> String {
    if p < 1e-4 {
        format!("{p:.4e}")
    } else {
        format!("{p:.6}")
    }
}

fn regression_text(rep: &RegressionReport) -> String {
    let r = &rep.result;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "Regression of {} on {} ({} observations)",
        rep.y, rep.x, r.n
    );
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:<10} {:>18} {:>6} {:>18} {:>14} {:>12}",
        "Source", "SS", "DF", "MSS", "F-rate", "P-Value"
    );
    let _ = writeln!(
        s,
        "{:<10} {:>18} {:>6} {:>18} {:>14} {:>12}",
        "Model",
        num(r.ss_model),
        r.df_model,
        num(r.ms_model),
        num(r.f_ratio),
        p_value(r.p_value)
    );
    let _ = writeln!(
        s,
        "{:<10} {:>18} {:>6} {:>18}",
        "Residual",
        num(r.ss_residual),
        r.df_residual,
        num(r.ms_residual)
    );
    let _ = writeln!(
        s,
        "{:<10} {:>18} {:>6}",
        "Total",
        num(r.ss_total),
        r.df_model + r.df_residual
    );
    let _ = writeln!(s);
    let sign = if r.slope < 0.0 { '-' } else { '+' };
    let _ = writeln!(
        s,
        "{} = {} {sign} {} {}",
        rep.y,
        num(r.intercept),
        num(r.slope.abs()),
        rep.x
    );
    let _ = writeln!(
        s,
        "{:<26}{}",
        "Correlation coefficient",
        num(r.correlation_coefficient)
    );
    let _ = writeln!(s, "{:<26}{}%", "R-square", num(r.r_square_percent));
    s
}

#[derive(Serialize)]
struct MwuReport<'a> {
    file: String,
    group_column: &'a str,
    value_column: &'a str,
    group_a: String,
    group_b: String,
    median_a: f64,
    median_b: f64,
    fill_empty: Option<f64>,
    skipped_rows: usize,
    #[serde(flatten)]
    result: MannWhitneyResult,
}

fn mwu(
    group: &str,
    value: &str,
    chosen: Option<&[String]>,
    fill_empty: Option<f64>,
    file: &Path,
    output: &ReportArgs,
) -> Result<(), CliError> {
    let table = read_table(file)?;
    let (gi, vi) = (
        table.column("--group", group, file)?,
        table.column("--value", value, file)?,
    );
    let mut order: Vec<String> = Vec::new();
    let mut samples: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut skipped = 0;
    for (i, row) in table.rows.iter().enumerate() {
        let label = row[gi].to_string();
        if !samples.contains_key(&label) {
            order.push(label.clone());
        }
        let sample = samples.entry(label).or_default();
        match number(&row[vi], i + 1, value, file)?.or(fill_empty) {
            Some(v) => sample.push(v),
            None => skipped += 1,
        }
    }
    note_skipped(skipped);
    let (a, b) = match chosen {
        Some([a, b]) => (a.clone(), b.clone()),
        Some(other) => {
            return Err(CliError::Usage(format!(
                "--groups: expected exactly two labels, got {}",
                other.len()
            )))
        }
        None if order.len() == 2 => (order[0].clone(), order[1].clone()),
        None => {
            return Err(CliError::Usage(format!(
                "--groups: {} holds {} groups ({}); name the two to compare",
                file.display(),
                order.len(),
                order.join(", ")
            )))
        }
    };
    let sample = |label: &str| match samples.get(label) {
        None => Err(CliError::Usage(format!(
            "--groups: no rows labelled {label:?} in column {group:?} of {}",
            file.display()
        ))),
        Some(s) if s.is_empty() => Err(CliError::Data(format!(
            "{}: every {value:?} cell of group {label:?} is empty; see --fill-empty",
            file.display()
        ))),
        Some(s) => Ok(s),
    };
    let (sa, sb) = (sample(&a)?, sample(&b)?);
    let result =
        mann_whitney(sa, sb).map_err(|e| CliError::Data(format!("{}: {e}", file.display())))?;
    let report = MwuReport {
        file: file.display().to_string(),
        group_column: group,
        value_column: value,
        median_a: median(sa)?,
        median_b: median(sb)?,
        group_a: a,
        group_b: b,
        fill_empty,
        skipped_rows: skipped,
        result,
    };
    let bytes = match output.format {
        ReportFormat::Json => json_bytes(&report)?,
        ReportFormat::Text => mwu_text(&report).into_bytes(),
    };
    deliver(&bytes, output.out.as_ref())
}

fn mwu_text(rep: &MwuReport) -> String {
    let r = &rep.result;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "Mann-Whitney test of {} by {}",
        rep.value_column, rep.group_column
    );
    let _ = writeln!(s);
    let _ = writeln!(s, "{:<16} {:>6} {:>18}", "Group", "N", "Median");
    let _ = writeln!(
        s,
        "{:<16} {:>6} {:>18}",
        rep.group_a,
        r.n_a,
        num(rep.median_a)
    );
    let _ = writeln!(
        s,
        "{:<16} {:>6} {:>18}",
        rep.group_b,
        r.n_b,
        num(rep.median_b)
    );
    let _ = writeln!(s);
    let method = if r.exact {
        "exact"
    } else {
        "normal approximation"
    };
    let _ = writeln!(s, "{:<26}{}", "U", num(r.u_statistic));
    let _ = writeln!(s, "{:<26}{}", "z", num(r.z_score));
    let _ = writeln!(s, "{:<26}{}", "Method", method);
    let _ = writeln!(s, "{:<26}{}", "P-Value (two-sided)", p_value(r.p_value));
    let _ = writeln!(
        s,
        "{:<26}{}",
        format!("P-Value ({} > {})", rep.group_a, rep.group_b),
        p_value(r.p_greater)
    );
    let _ = writeln!(
        s,
        "{:<26}{}",
        format!("P-Value ({} < {})", rep.group_a, rep.group_b),
        p_value(r.p_less)
    );
    s
}

// ---------------------------------------------------------------------------
// validate

#[derive(Serialize)]
struct GameCheck {
    tag: &'static str,
    name: &'static str,
    params: gagt::GameParams,
    matrix: PayoffMatrix,
    #[serde(flatten)]
    report: OrderingReport,
}

fn validate(a: &ValidateArgs) -> Result<(), CliError> {
    let games = match a.game {
        Some(g) => vec![g],
        None => GameModel::ALL.to_vec(),
    };
    if let Some(p) = a.game_params {
        p.validate()
            .map_err(|e| CliError::Usage(format!("--game-params: {e}")))?;
    }
    let checks: Vec<GameCheck> = games
        .into_iter()
        .map(|g| {
            let params = a.game_params.unwrap_or_else(|| g.default_params());
            let matrix = PayoffMatrix::from_params(params);
            GameCheck {
                tag: g.tag(),
                name: g.name(),
                params,
                matrix,
                report: validate_ordering(g, &matrix),
            }
        })
        .collect();
    let bytes = match a.output.format {
        ReportFormat::Json => json_bytes(&checks)?,
        ReportFormat::Text => {
            let mut s = String::new();
            for c in &checks {
                let m = &c.matrix;
                let _ = writeln!(
                    s,
                    "{:<4} {:<22} R={} S={} T={} P={}  [{}]  {}",
                    c.tag,
                    c.name,
                    fmt_payoff(m.r),
                    fmt_payoff(m.s),
                    fmt_payoff(m.t),
                    fmt_payoff(m.p),
                    c.report.chain,
                    if c.report.satisfied { "ok" } else { "VIOLATED" }
                );
                for v in &c.report.violations {
                    let _ = writeln!(s, "     warning: {} ordering violated: {v}", c.tag);
                }
            }
            s.into_bytes()
        }
    };
    deliver(&bytes, a.output.out.as_ref())
}
