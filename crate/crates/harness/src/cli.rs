//! Subcommand dispatch. Every subcommand prints a short summary, writes a
//! JSON report and maps errors to exit codes (1 domain, 2 usage or budget).

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use mixfree_core::engine::{
    build_selfless_map, certify_simultaneous_with, complexity, find_nonsolution_random, find_simultaneous_random,
    mif_growth, nonsolution_rate, verify_union_bound, LengthConstant, SearchSettings, StrictThresholds,
};
use mixfree_core::geom::HypParams;
use mixfree_core::mixed::{parse_element_expr, parse_mixed_expr};
use mixfree_core::rng::derive_seed;
use mixfree_core::walk::{estimate_speed, estimate_tail, sample_walk, translate_overlap_stats, WalkSpec};
use serde::Serialize;

use crate::calibration::{self, CalibrationSettings};
use crate::config::{ConfigOverrides, ExperimentConfig};
use crate::plot::{emit_plot_data, PlotKind};
use crate::report::Report;
use crate::HarnessError;

pub const GRAMMAR: &str = "\
Grammar:
  element   term*, term := (symbol | '(' element ')') ('^' integer)?
            ab, a^3B, (ab)^6, e or 1 for the identity; whitespace is ignored
  word      as element, and may also use x and X: xaXA, x^2 b X^-1, (xa)^-2
  measure   uniform(symbols) | elem:p/q, elem:p/q ...  uniform(aAbB), a:1/2, A:1/4, b:1/8, B:1/8
  symbols   rank k uses a A b B c C ... (x is skipped); uppercase is the inverse

Config file (--config): flat `key = value` lines with keys rank, alphabet,
measure, admissibility_override, seed, trials, budget, budget.<name>,
lambda_hat, c1_hat, c_delta, output_dir. Flags override the file.
MIF_OUTPUT_DIR sets the default output directory.

Exit codes: 0 success, 1 domain error, 2 usage or budget error.";

#[derive(Debug, Parser)]
#[command(name = "mixfree", version, about = "Non-solutions of mixed identities in free groups", after_help = GRAMMAR)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Flat key = value config file.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    /// Default limit for every budgeted enumeration.
    #[arg(long, global = true)]
    pub budget: Option<u64>,
    #[arg(long, global = true)]
    pub rank: Option<usize>,
    #[arg(long, global = true, value_name = "MEASURE")]
    pub measure: Option<String>,
    /// Use the measure even if its support does not generate symmetrically.
    #[arg(long, global = true)]
    pub allow_inadmissible: bool,
    #[arg(long, global = true)]
    pub c_delta: Option<f64>,
    #[arg(long, global = true, value_name = "DIR")]
    pub output_dir: Option<PathBuf>,
    /// Report path; defaults to <output-dir>/<command>.json.
    #[arg(long, global = true, value_name = "FILE")]
    pub report: Option<PathBuf>,
    /// Leave the wall-clock duration out of the report.
    #[arg(long, global = true)]
    pub no_timing: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate lambda and C1, validate C_delta, and cache the result.
    Calibrate {
        /// Ignore the cache.
        #[arg(long)]
        refresh: bool,
    },
    /// Sample one walk and estimate the speed over --trials walks.
    Walk {
        #[arg(long, default_value_t = 1000)]
        length: usize,
    },
    /// Minimal length of a non-solution of WORD.
    Complexity { word: String },
    /// The growth function for 1..=N by double brute force.
    Growth { n: usize },
    /// Simultaneous certificate for the candidate G against W_N.
    Certify {
        g: String,
        n: usize,
        /// Also require overlaps <= lambda m / 10 and |g| > lambda m.
        #[arg(long, requires = "strict_walk_length")]
        strict_lambda: Option<f64>,
        #[arg(long, requires = "strict_lambda")]
        strict_walk_length: Option<usize>,
    },
    /// Random-walk non-solutions for each WORD.
    FindSingle {
        #[arg(required = true)]
        words: Vec<String>,
        #[command(flatten)]
        search: SearchArgs,
        /// Walks used to estimate the per-attempt success frequency.
        #[arg(long, default_value_t = 0)]
        rate_trials: u64,
    },
    /// A certified simultaneous non-solution for W_N.
    FindSimul {
        n: usize,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Bad-event frequency against 2 C1 / n for each N.
    UnionBound {
        #[arg(required = true)]
        ns: Vec<usize>,
    },
    /// Retractions x -> g_{2n} checked on the n-ball, for each N.
    Selfless {
        #[arg(required = true)]
        ns: Vec<usize>,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Monte Carlo statistics of the walk.
    #[command(subcommand)]
    Stats(StatsCommand),
    /// Plot-ready CSV from a report.
    Plot {
        report: PathBuf,
        #[arg(value_enum)]
        kind: PlotKind,
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Length constant C to use instead of the calibrated one.
    #[arg(long)]
    pub c_override: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub max_attempts: u64,
}

#[derive(Debug, Subcommand)]
pub enum StatsCommand {
    /// Survival function of D(probe, x_n).
    Tail {
        #[arg(long, default_value = "a")]
        probe: String,
        #[arg(long, default_value_t = 1000)]
        length: usize,
        /// Use x_n^-1 instead of x_n.
        #[arg(long)]
        inverse: bool,
    },
    /// Translate overlaps of x_n, maximised over a ball.
    Overlap {
        #[arg(long, default_value_t = 1000)]
        length: usize,
        #[arg(long, default_value_t = 2)]
        radius: usize,
    },
}

/// Parses `argv` (program name first), runs it and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprint!("{e}");
            eprintln!("\n{GRAMMAR}");
            return 2;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, HarnessError::Usage(_)) {
                eprintln!("\n{GRAMMAR}");
            }
            e.exit_code()
        }
    }
}

pub fn load_config(g: &GlobalArgs) -> Result<ExperimentConfig, HarnessError> {
    let file = match &g.config {
        Some(p) => ConfigOverrides::load(p)?,
        None => ConfigOverrides::default(),
    };
    let flags = ConfigOverrides {
        rank: g.rank,
        measure: g.measure.clone(),
        admissibility_override: g.allow_inadmissible.then_some(true),
        seed: g.seed,
        trials: g.trials,
        budget: g.budget,
        c_delta: g.c_delta,
        output_dir: g.output_dir.clone(),
        ..ConfigOverrides::default()
    };
    file.merge(flags).resolve()
}

struct Outcome {
    command: &'static str,
    args: Vec<String>,
    kind: &'static str,
    result: serde_json::Value,
    summary: String,
}

fn outcome<T: Serialize>(
    command: &'static str,
    args: Vec<String>,
    kind: &'static str,
    result: &T,
    summary: String,
) -> Result<Outcome, HarnessError> {
    Ok(Outcome {
        command,
        args,
        kind,
        result: serde_json::to_value(result)?,
        summary,
    })
}

fn strings<T: ToString>(xs: &[T]) -> Vec<String> {
    xs.iter().map(T::to_string).collect()
}

fn settings(s: &SearchArgs) -> SearchSettings {
    SearchSettings {
        max_attempts: s.max_attempts,
        ..SearchSettings::default()
    }
}

fn search_args(s: &SearchArgs) -> Vec<String> {
    let mut v = vec!["--max-attempts".to_string(), s.max_attempts.to_string()];
    if let Some(c) = s.c_override {
        v.push("--c-override".into());
        v.push(format!("{c:?}"));
    }
    v
}

fn execute(cli: &Cli) -> Result<(), HarnessError> {
    if let Command::Plot { report, kind, out } = &cli.command {
        let r = Report::read(report)?;
        let rows = emit_plot_data(&r, *kind, out)?;
        println!("{rows} rows written to {}", out.display());
        return Ok(());
    }
    let config = load_config(&cli.global)?;
    let started = Instant::now();
    let out = dispatch(&cli.command, &config)?;
    let duration = (!cli.global.no_timing).then(|| started.elapsed());
    let report = Report::new(out.command, out.args, out.kind, &config, &out.result, duration)?;
    let path = cli
        .global
        .report
        .clone()
        .unwrap_or_else(|| config.output_dir.join(format!("{}.json", out.command)));
    report.write(&path)?;
    println!("{}", out.summary);
    eprintln!("report: {}", path.display());
    Ok(())
}

fn dispatch(command: &Command, config: &ExperimentConfig) -> Result<Outcome, HarnessError> {
    let backend = &config.backend;
    let seed = config.master_seed;
    let params = HypParams::tree(config.c_delta);
    match command {
        Command::Calibrate { refresh } => {
            let s = CalibrationSettings::standard(&config.measure);
            let r = calibration::calibrate_cached(config, &s, *refresh)?;
            let summary = format!(
                "lambda_hat = {:.4} (mean {:.4})\nc1_hat = {}\nsingle-word C = {:.3}\nsimultaneous C = {:.3}\nc_delta = {} {}{}",
                r.calibration.lambda_hat,
                r.speed.mean,
                r.calibration.c1_hat,
                r.single_word_constant,
                r.simultaneous_constant,
                r.calibration.c_delta,
                if r.c_delta_validated { "validated" } else { "REJECTED" },
                if r.from_cache { " (cached)" } else { "" }
            );
            let args = vec!["calibrate".to_string()];
            if !r.c_delta_validated {
                return Err(HarnessError::Domain(format!(
                    "{summary}\nc_delta failed the soundness sweep with {} failures",
                    r.soundness.failures
                )));
            }
            outcome("calibrate", args, "calibration", &r, summary)
        }
        Command::Walk { length } => {
            let trials = config.trials_or(1000);
            let spec = WalkSpec::new(config.measure.clone(), seed, *length)?;
            let path = sample_walk(&spec);
            let lengths: Vec<usize> = path.iter().map(|g| g.len()).collect();
            let speed = estimate_speed(&config.measure, *length, trials as usize, derive_seed(seed, 1))?;
            let summary = format!(
                "endpoint length {} after {length} steps\nspeed mean {:.4} +- {:.4}, 5th percentile {:.4} over {trials} walks",
                lengths[*length], speed.lambda_hat, speed.stderr, speed.p05
            );
            #[derive(Serialize)]
            struct WalkResult {
                length: usize,
                endpoint: mixfree_core::GroupElement,
                path_lengths: Vec<usize>,
                speed: mixfree_core::walk::SpeedEstimate,
            }
            let result = WalkResult {
                length: *length,
                endpoint: path[*length].clone(),
                path_lengths: lengths,
                speed,
            };
            outcome(
                "walk",
                vec!["walk".into(), "--length".into(), length.to_string()],
                "speed",
                &result,
                summary,
            )
        }
        Command::Complexity { word } => {
            let w = parse_mixed_expr(word, backend)?;
            let r = complexity(&w, config.budget("complexity"))?;
            let summary = format!("{}\nwitness: {}", r.value, r.witness);
            #[derive(Serialize)]
            struct ComplexityReport {
                word: mixfree_core::MixedWord,
                #[serde(flatten)]
                result: mixfree_core::engine::ComplexityResult,
            }
            let result = ComplexityReport { word: w, result: r };
            outcome(
                "complexity",
                vec!["complexity".into(), word.clone()],
                "complexity",
                &result,
                summary,
            )
        }
        Command::Growth { n } => {
            let mut records = Vec::new();
            let mut lines = Vec::new();
            for k in 1..=*n {
                let r = mif_growth(k, backend, config.budget("growth"))?;
                lines.push(format!(
                    "M({k}) = {}  witness word {}, non-solution {} ({} words)",
                    r.value, r.witness_word, r.witness_nonsolution, r.words_examined
                ));
                records.push(r);
            }
            let result = serde_json::json!({ "records": records });
            outcome(
                "growth",
                vec!["growth".into(), n.to_string()],
                "growth",
                &result,
                lines.join("\n"),
            )
        }
        Command::Certify {
            g,
            n,
            strict_lambda,
            strict_walk_length,
        } => {
            let elem = parse_element_expr(g, backend)?;
            let strict = match (strict_lambda, strict_walk_length) {
                (Some(l), Some(m)) => Some(StrictThresholds {
                    lambda_hat: *l,
                    walk_length: *m,
                }),
                _ => None,
            };
            let cert = certify_simultaneous_with(&elem, *n, &params, config.budget("certify"), strict)?;
            let summary = format!(
                "verdict {}\n|g| = {}, threshold {}, margin {}, ball of {} elements",
                if cert.verdict.passed() { "pass" } else { "fail" },
                cert.bullet_maxima.displacement,
                cert.threshold,
                cert.margin,
                cert.ball_size
            );
            let mut args = vec!["certify".to_string(), g.clone(), n.to_string()];
            if let Some(s) = strict {
                args.extend([
                    "--strict-lambda".into(),
                    format!("{:?}", s.lambda_hat),
                    "--strict-walk-length".into(),
                    s.walk_length.to_string(),
                ]);
            }
            let result = serde_json::json!({ "certificate": cert, "calibration": config.calibration });
            outcome("certify", args, "certificate", &result, summary)
        }
        Command::FindSingle {
            words,
            search,
            rate_trials,
        } => {
            let constant = match search.c_override {
                Some(value) => LengthConstant::Override { value },
                None => {
                    let calibration = calibration::resolve(config)?;
                    let value = calibration.single_word_constant();
                    LengthConstant::Calibrated { calibration, value }
                }
            };
            let mut searches = Vec::new();
            let mut lines = Vec::new();
            for (i, text) in words.iter().enumerate() {
                let w = parse_mixed_expr(text, backend)?;
                let word_seed = derive_seed(seed, i as u64);
                let s = find_nonsolution_random(&w, &config.measure, constant.clone(), word_seed, &settings(search))?;
                let rate = (*rate_trials > 0).then(|| {
                    nonsolution_rate(
                        &w,
                        &config.measure,
                        s.walk_length,
                        *rate_trials,
                        derive_seed(word_seed, 1),
                    )
                });
                lines.push(format!(
                    "|w| = {}: non-solution of length {} after {} attempt(s), walk length {}{}",
                    w.mixed_length(),
                    s.nonsolution.len(),
                    s.attempts,
                    s.walk_length,
                    rate.map_or(String::new(), |r| format!(", success frequency {r:.3}"))
                ));
                searches.push(serde_json::json!({
                    "word": w,
                    "word_length": w.mixed_length(),
                    "nonsolution": s.nonsolution,
                    "nonsolution_length": s.nonsolution.len(),
                    "attempts": s.attempts,
                    "walk_length": s.walk_length,
                    "success_frequency": rate,
                }));
            }
            let mut args = vec!["find-single".to_string()];
            args.extend(words.iter().cloned());
            args.extend(search_args(search));
            args.extend(["--rate-trials".into(), rate_trials.to_string()]);
            let result = serde_json::json!({ "constant": constant, "searches": searches });
            outcome("find-single", args, "scaling", &result, lines.join("\n"))
        }
        Command::FindSimul { n, search } => {
            let constant = simultaneous_constant(config, search)?;
            let s = find_simultaneous_random(
                *n,
                &config.measure,
                constant,
                seed,
                &params,
                config.budget("certify"),
                &settings(search),
            )?;
            let summary = format!(
                "non-solution {} (length {}) after {} attempt(s), walk length {}, threshold {}",
                s.nonsolution,
                s.nonsolution.len(),
                s.attempts,
                s.walk_length,
                s.certificate.threshold
            );
            let mut args = vec!["find-simul".to_string(), n.to_string()];
            args.extend(search_args(search));
            outcome("find-simul", args, "simultaneous", &s, summary)
        }
        Command::UnionBound { ns } => {
            let calibration = calibration::resolve(config)?;
            let trials = config.trials_or(10_000);
            let mut reports = Vec::new();
            for &n in ns {
                reports.push(verify_union_bound(
                    n,
                    &config.measure,
                    &calibration,
                    None,
                    trials,
                    seed,
                )?);
            }
            let summary = reports
                .iter()
                .map(|r| {
                    format!(
                        "n = {}: frequency {:.5} vs bound {:.5} ({})",
                        r.n,
                        r.frequency,
                        r.bound,
                        if r.within_bound { "within" } else { "EXCEEDED" }
                    )
                })
                .collect::<Vec<_>>()
                .join("\n");
            let mut args = vec!["union-bound".to_string()];
            args.extend(strings(ns));
            let result = serde_json::json!({ "calibration": calibration, "reports": reports });
            outcome("union-bound", args, "union-bound", &result, summary)
        }
        Command::Selfless { ns, search } => {
            let constant = simultaneous_constant(config, search)?;
            let mut maps = Vec::new();
            let mut lines = Vec::new();
            for &n in ns {
                let m = build_selfless_map(
                    n,
                    &config.measure,
                    constant.clone(),
                    derive_seed(seed, n as u64),
                    &params,
                    config.budget("selfless"),
                    &settings(search),
                )?;
                lines.push(format!(
                    "n = {n}: x -> {} ({} letters), injective on {} elements, f(n) = {}, f(n)/n^2 = {:.2}, containment {}",
                    m.image_of_x,
                    m.image_of_x.len(),
                    m.ball_size,
                    m.f_value,
                    m.f_value as f64 / (n * n) as f64,
                    if m.containment_holds { "holds" } else { "FAILS" }
                ));
                maps.push(m);
            }
            let mut args = vec!["selfless".to_string()];
            args.extend(strings(ns));
            args.extend(search_args(search));
            let result = serde_json::json!({ "maps": maps });
            outcome("selfless", args, "selfless", &result, lines.join("\n"))
        }
        Command::Stats(StatsCommand::Tail { probe, length, inverse }) => {
            let g = parse_element_expr(probe, backend)?;
            let trials = config.trials_or(10_000) as usize;
            let t = estimate_tail(&config.measure, &g, *length, trials, seed, *inverse)?;
            let slope = t.log2_slope(3..=10);
            let summary = format!(
                "fitted C1 = {} over {trials} walks of length {length}\nP[D >= t]: {}\nlog2 slope on t in [3, 10]: {}",
                t.fitted_c1,
                t.survival
                    .iter()
                    .take(12)
                    .map(|(k, p)| format!("{k}:{p:.4}"))
                    .collect::<Vec<_>>()
                    .join(" "),
                slope.map_or("undefined (fewer than two positive points)".to_string(), |(s, k)| {
                    format!("{s:.4} from {k} points")
                })
            );
            let mut args = vec![
                "stats".to_string(),
                "tail".into(),
                "--probe".into(),
                probe.clone(),
                "--length".into(),
                length.to_string(),
            ];
            if *inverse {
                args.push("--inverse".into());
            }
            let result = serde_json::json!({
                "survival": t.survival,
                "fitted_c1": t.fitted_c1,
                "trials": t.trials,
                "n": t.n,
                "probe": t.probe,
                "inverse": t.inverse,
                "log2_slope_3_10": slope.map(|s| s.0),
            });
            outcome("stats-tail", args, "tail", &result, summary)
        }
        Command::Stats(StatsCommand::Overlap { length, radius }) => {
            let trials = config.trials_or(200) as usize;
            let s = translate_overlap_stats(
                &config.measure,
                *length,
                trials,
                *radius,
                seed,
                config.budget("overlap"),
            )?;
            let summary = format!(
                "over the ball of radius {radius}: reversed median {:.4} (p90 {:.4}), translated median {:.4} (p90 {:.4})",
                s.reversed_median, s.reversed_p90, s.translated_median, s.translated_p90
            );
            let args = vec![
                "stats".to_string(),
                "overlap".into(),
                "--length".into(),
                length.to_string(),
                "--radius".into(),
                radius.to_string(),
            ];
            outcome("stats-overlap", args, "overlap", &s, summary)
        }
        Command::Plot { .. } => unreachable!("handled before configuration"),
    }
}

fn simultaneous_constant(config: &ExperimentConfig, search: &SearchArgs) -> Result<LengthConstant, HarnessError> {
    Ok(match search.c_override {
        Some(value) => LengthConstant::Override { value },
        None => {
            let calibration = calibration::resolve(config)?;
            let value = calibration.simultaneous_constant(&config.backend);
            LengthConstant::Calibrated { calibration, value }
        }
    })
}
