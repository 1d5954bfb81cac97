//! Argument parsing and subcommand dispatch.
//!
//! Exit codes: 0 success, 1 usage error (bad flags, missing inputs,
//! unreadable files), 2 a value outside its domain.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use chbell_core::inequality::ch_terms;
use chbell_core::montecarlo::DEFAULT_BOOTSTRAP_REPLICATES;
use chbell_core::{
    canonical_quad, ch_probability_sum, ch_with_efficiency, visibility_scan, ChExperiment, FringeMode,
    OptimizerConfig, SettingsQuad,
};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::config::{RunConfig, ScanMode};
use crate::error::{CliError, Result};
use crate::mixture::load_mixture;
use crate::output::{append_csv, csv_string, full, sig6, write_all, Table};
use crate::parallel;

#[derive(Debug, Parser)]
#[command(
    name = "chbell",
    version,
    about = "Clauser-Horne Bell test with non-maximally entangled photon pairs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    options: Options,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
enum Command {
    /// Six CH probabilities and the CH sum at one quad.
    Predict,
    /// Analyzer angles that maximize the CH sum.
    Optimize,
    /// Critical detection efficiency as a function of f, as CSV.
    Threshold,
    /// Simulated counts and CH significance, quantum or local source.
    Simulate,
    /// Fringe visibility of a scan of arm 2.
    Visibility,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Predict => "predict",
            Command::Optimize => "optimize",
            Command::Threshold => "threshold",
            Command::Simulate => "simulate",
            Command::Visibility => "visibility",
        }
    }
}

/// Numeric flags are taken as text and parsed like config-file values, so a
/// flag and the equivalent config line behave the same.
#[derive(Debug, Args)]
struct Options {
    /// Config file: `key = value` lines, or a JSON document written by --json.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Emit a JSON document instead of a table.
    #[arg(long, global = true)]
    json: bool,
    /// Append CSV rows to PATH.
    #[arg(long, global = true, value_name = "PATH")]
    csv: Option<PathBuf>,
    /// Master seed for randomized commands.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<String>,
    /// Amplitude ratio of the |VV> component.
    #[arg(long, global = true, allow_hyphen_values = true)]
    f: Option<String>,
    /// Relative phase, degrees.
    #[arg(long, global = true, allow_hyphen_values = true)]
    phi: Option<String>,
    /// Visibility (weight of the pure state against white noise).
    #[arg(long, global = true, allow_hyphen_values = true)]
    v: Option<String>,
    /// Analyzer angles in degrees.
    #[arg(long, global = true, value_name = "θ1,θ1p,θ2,θ2p", allow_hyphen_values = true)]
    quad: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    eta1: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    eta2: Option<String>,
    /// Pair emission rate, pairs per second per cell.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pair_rate: Option<String>,
    /// Counting time per cell, seconds.
    #[arg(long, global = true, allow_hyphen_values = true)]
    duration: Option<String>,
    /// Simulate a local hidden-variable source from this mixture file.
    #[arg(long, global = true, value_name = "PATH")]
    lhv_mixture: Option<PathBuf>,
    /// Comma-separated ratios for `threshold`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    f_list: Option<String>,
    /// Fixed arm-1 angle for `visibility`, degrees.
    #[arg(long, global = true, allow_hyphen_values = true)]
    theta1: Option<String>,
    /// Arm-2 scan for `visibility`: `start:stop:step` or a comma list.
    #[arg(long, global = true, allow_hyphen_values = true)]
    theta2_grid: Option<String>,
    #[arg(long, global = true, value_enum)]
    mode: Option<ScanMode>,
    /// Bootstrap replicates for simulated visibility.
    #[arg(long, global = true)]
    replicates: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    dark_rate1: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    dark_rate2: Option<String>,
    /// Coincidence window τ, seconds.
    #[arg(long, global = true, allow_hyphen_values = true)]
    window: Option<String>,
    /// Worker threads (0: one per core). Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

impl Options {
    fn overrides(&self) -> Result<RunConfig> {
        let mut c = RunConfig::default();
        let text_flags = [
            ("seed", &self.seed),
            ("f", &self.f),
            ("phi", &self.phi),
            ("v", &self.v),
            ("quad", &self.quad),
            ("eta1", &self.eta1),
            ("eta2", &self.eta2),
            ("pair_rate", &self.pair_rate),
            ("duration", &self.duration),
            ("f_list", &self.f_list),
            ("theta1", &self.theta1),
            ("theta2_grid", &self.theta2_grid),
            ("replicates", &self.replicates),
            ("dark_rate1", &self.dark_rate1),
            ("dark_rate2", &self.dark_rate2),
            ("coincidence_window", &self.window),
        ];
        for (key, value) in text_flags {
            if let Some(value) = value {
                c.set(key, value)?;
            }
        }
        c.mode = self.mode;
        c.lhv_mixture.clone_from(&self.lhv_mixture);
        c.csv.clone_from(&self.csv);
        Ok(c)
    }
}

/// Run the command line `args` (program name first), writing results to
/// `out` and diagnostics to `err`. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = err.write_all(text.as_bytes());
                1
            } else {
                let _ = out.write_all(text.as_bytes());
                0
            };
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "chbell: error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let mut config = match &cli.options.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    config.merge(cli.options.overrides()?);
    let ctx = Context {
        command: cli.command,
        json: cli.options.json,
        threads: cli.options.threads,
    };
    match cli.command {
        Command::Predict => predict(&ctx, &config, out),
        Command::Optimize => optimize(&ctx, &config, out),
        Command::Threshold => threshold(&ctx, &config, out),
        Command::Simulate => simulate(&ctx, config, out),
        Command::Visibility => visibility(&ctx, config, out),
    }
}

struct Context {
    command: Command,
    json: bool,
    threads: usize,
}

impl Context {
    /// Fixed envelope of every JSON document: the command, the effective
    /// configuration, and the command's own fields.
    fn emit_json(&self, out: &mut dyn Write, config: &RunConfig, fields: Value) -> Result<()> {
        let mut doc = json!({ "command": self.command.name(), "config": config });
        if let (Some(doc), Value::Object(fields)) = (doc.as_object_mut(), fields) {
            doc.extend(fields);
        }
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        write_all(out, &text)
    }
}

/// A seed for randomized commands that were not given one. It is recorded in
/// the effective config so the run can be repeated.
fn fresh_seed() -> u64 {
    let nanos = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0);
    chbell_core::seed::mix64(nanos ^ (u64::from(std::process::id()) << 32))
}

fn quad_json(q: &SettingsQuad) -> Value {
    json!(q.to_array())
}

fn quad_cells(q: &SettingsQuad) -> Vec<String> {
    q.to_array().iter().map(|&x| full(x)).collect()
}

const TERM_LABELS: [&str; 6] = [
    "P(θ1,θ2)",
    "P(θ1,θ2')",
    "P(θ1',θ2)",
    "P(θ1',θ2')",
    "P1(θ1')",
    "P2(θ2)",
];
const TERM_SIGNS: [i32; 6] = [1, -1, 1, 1, -1, -1];

fn predict(ctx: &Context, config: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let state = config.state()?;
    let quad = config.quad()?;
    let (eta1, eta2) = config.efficiencies();
    let terms = ch_terms(&state, &quad);
    let ch = ch_probability_sum(&state, &quad);
    let ch_eta = ch_with_efficiency(&state, &quad, eta1, eta2)?;
    let cells = quad.cells();
    let setting = |s: chbell_core::AnalyzerSetting| s.degrees().map_or("inf".to_string(), full);

    if ctx.json {
        let term_docs: Vec<Value> = (0..6)
            .map(|k| {
                json!({
                    "term": TERM_LABELS[k],
                    "setting1": cells[k].0.degrees(),
                    "setting2": cells[k].1.degrees(),
                    "sign": TERM_SIGNS[k],
                    "probability": terms[k],
                })
            })
            .collect();
        ctx.emit_json(
            out,
            config,
            json!({ "terms": term_docs, "ch": ch, "eta1": eta1, "eta2": eta2, "ch_efficiency": ch_eta }),
        )?;
    } else {
        let mut table = Table::new(&["term", "setting1", "setting2", "sign", "probability"]);
        for k in 0..6 {
            table.row(vec![
                TERM_LABELS[k].into(),
                cells[k].0.degrees().map_or("∞".into(), sig6),
                cells[k].1.degrees().map_or("∞".into(), sig6),
                if TERM_SIGNS[k] > 0 { "+" } else { "-" }.into(),
                sig6(terms[k]),
            ]);
        }
        table.row(vec!["CH".into(), String::new(), String::new(), String::new(), sig6(ch)]);
        let mut text = table.render();
        if (eta1, eta2) != (1.0, 1.0) {
            text.push_str(&format!(
                "CH at eta1={}, eta2={}: {}\n",
                sig6(eta1),
                sig6(eta2),
                sig6(ch_eta)
            ));
        }
        write_all(out, &text)?;
    }
    if let Some(path) = &config.csv {
        let mut rows: Vec<Vec<String>> = (0..6)
            .map(|k| {
                vec![
                    TERM_LABELS[k].into(),
                    setting(cells[k].0),
                    setting(cells[k].1),
                    TERM_SIGNS[k].to_string(),
                    full(terms[k]),
                ]
            })
            .collect();
        rows.push(vec!["CH".into(), String::new(), String::new(), String::new(), full(ch)]);
        append_csv(path, &["term", "setting1", "setting2", "sign", "probability"], &rows)?;
    }
    Ok(())
}

fn optimize(ctx: &Context, config: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let state = config.state()?;
    let (eta1, eta2) = config.efficiencies();
    let report = parallel::with_threads(ctx.threads, || {
        parallel::optimize(&state, eta1, eta2, &OptimizerConfig::default())
    })??;
    let canonical = canonical_quad(&report.best_quad, &state, eta1 == eta2);
    if ctx.json {
        ctx.emit_json(
            out,
            config,
            json!({
                "value": report.best_value,
                "quad": quad_json(&report.best_quad),
                "canonical_quad": quad_json(&canonical),
                "starts": report.starts,
                "converged": report.converged,
                "iterations": report.iterations,
                "evaluations": report.evaluations,
            }),
        )?;
    } else {
        let mut table = Table::new(&["quantity", "value"]);
        let q = report.best_quad.to_array();
        for (name, x) in ["θ1", "θ1'", "θ2", "θ2'"].iter().zip(q) {
            table.row(vec![(*name).into(), sig6(x)]);
        }
        let c = canonical.to_array().map(sig6);
        table.row(vec!["canonical".into(), format!("({}, {}, {}, {})", c[0], c[1], c[2], c[3])]);
        table.row(vec!["CH".into(), sig6(report.best_value)]);
        table.row(vec!["starts".into(), report.starts.to_string()]);
        table.row(vec!["converged".into(), report.converged.to_string()]);
        write_all(out, &table.render())?;
    }
    if let Some(path) = &config.csv {
        let mut row = vec![
            full(state.f()),
            full(config.phi.unwrap_or(0.0)),
            full(state.v()),
            full(eta1),
            full(eta2),
        ];
        row.extend(quad_cells(&canonical));
        row.push(full(report.best_value));
        append_csv(
            path,
            &[
                "f", "phi", "v", "eta1", "eta2", "theta1", "theta1_prime", "theta2", "theta2_prime", "value",
            ],
            &[row],
        )?;
    }
    Ok(())
}

const CURVE_HEADER: [&str; 6] = ["f", "eta_crit", "theta1", "theta1_prime", "theta2", "theta2_prime"];

fn threshold(ctx: &Context, config: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let f_values = match (&config.f_list, config.f) {
        (Some(list), _) => list.clone(),
        (None, Some(f)) => vec![f],
        (None, None) => return Err(CliError::usage("missing f values (use --f-list or --f)")),
    };
    let curve = parallel::with_threads(ctx.threads, || {
        parallel::efficiency_curve(&f_values, &OptimizerConfig::default())
    })??;
    let rows: Vec<Vec<String>> = curve
        .iter()
        .map(|p| {
            let mut row = vec![full(p.f), full(p.eta_crit)];
            row.extend(quad_cells(&p.quad_at_crit));
            row
        })
        .collect();
    if ctx.json {
        let points: Vec<Value> = curve
            .iter()
            .map(|p| json!({ "f": p.f, "eta_crit": p.eta_crit, "quad": quad_json(&p.quad_at_crit) }))
            .collect();
        ctx.emit_json(out, config, json!({ "curve": points }))?;
    } else {
        write_all(out, &csv_string(&CURVE_HEADER, &rows)?)?;
    }
    if let Some(path) = &config.csv {
        append_csv(path, &CURVE_HEADER, &rows)?;
    }
    Ok(())
}

const COUNT_LABELS: [&str; 6] = [
    "N(θ1,θ2)",
    "N(θ1,θ2')",
    "N(θ1',θ2)",
    "N(θ1',θ2')",
    "N(θ1',∞)",
    "N(∞,θ2)",
];
const COUNT_KEYS: [&str; 6] = [
    "n_ab",
    "n_ab_prime",
    "n_a_prime_b",
    "n_a_prime_b_prime",
    "n_a_prime_inf",
    "n_inf_b",
];

fn simulate(ctx: &Context, mut config: RunConfig, out: &mut dyn Write) -> Result<()> {
    let seed = *config.seed.get_or_insert_with(fresh_seed);
    let model = config.detection_model()?;
    let quad = config.quad()?;
    let (source, run): (&str, ChExperiment) = match &config.lhv_mixture {
        Some(path) => {
            let mixture = load_mixture(path)?;
            let run = parallel::with_threads(ctx.threads, || parallel::simulate_local(&mixture, &quad, &model, seed))??;
            ("lhv", run)
        }
        None => {
            let state = config.state()?;
            let run = parallel::with_threads(ctx.threads, || parallel::simulate_quantum(&state, &quad, &model, seed))??;
            ("quantum", run)
        }
    };
    let counts = run.counts.to_array();
    let rate = if model.duration > 0.0 {
        Some(run.result.per_second(model.duration)?)
    } else {
        None
    };
    if ctx.json {
        let count_doc: serde_json::Map<String, Value> =
            COUNT_KEYS.iter().zip(counts).map(|(k, n)| ((*k).to_string(), json!(n))).collect();
        ctx.emit_json(
            out,
            &config,
            json!({
                "source": source,
                "counts": count_doc,
                "pairs_emitted": run.records.map(|r| r.pairs_emitted),
                "accidentals": run.records.map(|r| r.accidentals),
                "ch": run.result.value,
                "sigma": run.result.sigma,
                "z": run.result.z,
                "ch_per_second": rate.map(|r| r.value),
                "sigma_per_second": rate.map(|r| r.sigma),
            }),
        )?;
    } else {
        let mut table = Table::new(&["cell", "counts", "pairs", "accidentals"]);
        for (k, record) in run.records.iter().enumerate() {
            table.row(vec![
                COUNT_LABELS[k].into(),
                record.counts.to_string(),
                record.pairs_emitted.to_string(),
                record.accidentals.to_string(),
            ]);
        }
        let mut text = format!("source: {source}, seed: {seed}\n");
        text.push_str(&table.render());
        text.push_str(&format!(
            "CH = {} ± {} counts (z = {})\n",
            sig6(run.result.value),
            sig6(run.result.sigma),
            sig6(run.result.z)
        ));
        if let Some(r) = rate {
            text.push_str(&format!("CH = {} ± {} per second\n", sig6(r.value), sig6(r.sigma)));
        }
        write_all(out, &text)?;
    }
    if let Some(path) = &config.csv {
        let mut header = vec!["seed", "source"];
        header.extend(COUNT_KEYS);
        header.extend(["ch", "sigma", "z"]);
        let mut row = vec![seed.to_string(), source.to_string()];
        row.extend(counts.iter().map(u64::to_string));
        row.extend([full(run.result.value), full(run.result.sigma), full(run.result.z)]);
        append_csv(path, &header, &[row])?;
    }
    Ok(())
}

fn visibility(ctx: &Context, mut config: RunConfig, out: &mut dyn Write) -> Result<()> {
    let state = config.state()?;
    let theta1 = config.theta1_or_default();
    let grid = config.theta2_grid_or_default();
    let mode = match config.mode.unwrap_or(ScanMode::Analytic) {
        ScanMode::Analytic => FringeMode::Analytic,
        ScanMode::Simulated => FringeMode::Simulated {
            model: config.detection_model()?,
            seed: *config.seed.get_or_insert_with(fresh_seed),
            replicates: config.replicates.unwrap_or(DEFAULT_BOOTSTRAP_REPLICATES),
        },
    };
    let scan = parallel::with_threads(ctx.threads, || visibility_scan(&state, theta1, &grid, &mode))??;
    if ctx.json {
        ctx.emit_json(
            out,
            &config,
            json!({
                "theta1": theta1,
                "theta2_grid": grid,
                "fringe": scan.fringe,
                "v": scan.v,
                "sigma_v": scan.sigma_v,
            }),
        )?;
    } else {
        let text = match mode {
            FringeMode::Analytic => format!("V = {} (θ1 = {}, {} points)\n", sig6(scan.v), sig6(theta1), grid.len()),
            FringeMode::Simulated { seed, .. } => format!(
                "V = {} ± {} (θ1 = {}, {} points, seed {seed})\n",
                sig6(scan.v),
                sig6(scan.sigma_v),
                sig6(theta1),
                grid.len()
            ),
        };
        write_all(out, &text)?;
    }
    if let Some(path) = &config.csv {
        let rows: Vec<Vec<String>> = grid
            .iter()
            .zip(&scan.fringe)
            .map(|(&t, &y)| vec![full(theta1), full(t), full(y)])
            .collect();
        append_csv(path, &["theta1", "theta2", "fringe"], &rows)?;
    }
    Ok(())
}
