//! Acceptance suite. Runs every criterion in order, prints one line each and
//! exits nonzero if any criterion fails.
//!
//! Randomized criteria use fixed seeds, so the numbers below are fixtures:
//! a change that moves them is a change in behaviour.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use mixfree::calibration::{calibrate, long_probe, CalibrationSettings};
use mixfree::report::Report;
use mixfree_core::engine::{
    build_selfless_map, commutator_lower_bound, complexity, find_simultaneous_random, mif_growth,
    single_certificate_sweep, verify_union_bound, Calibration, LengthConstant, SearchSettings,
};
use mixfree_core::geom::{overlap_diameter, HypParams};
use mixfree_core::group::enumerate_ball;
use mixfree_core::mixed::{enumerate_mixed_ball, enumerate_w_n, parse_mixed, random_w_n, MixedWord};
use mixfree_core::rng::{derive_seed, trial_rng};
use mixfree_core::walk::{estimate_speed, estimate_tail, Measure};
use mixfree_core::{BackendSpec, GroupElement, DEFAULT_BUDGET};
use rand::seq::SliceRandom;
use rand::Rng;

const SEED: u64 = 0x5EED_2024;
/// |g_n| <= K n for the simultaneous non-solutions of criterion 8.
const LINEAR_K: f64 = 60.0;
/// Expected log2-slope of P[D((ab)^5 a, x_n) >= t]: each agreeing letter costs a factor 3.
const PROBE_SLOPE: f64 = -1.584_962_500_721_156;
const PROBE_SLOPE_TOLERANCE: f64 = 0.35;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn f2() -> Arc<BackendSpec> {
    BackendSpec::free(2).unwrap()
}

fn uniform() -> Measure {
    Measure::uniform_generators(&f2())
}

/// Shared calibration, computed once with the standard settings.
fn calibration() -> &'static Calibration {
    static CAL: std::sync::OnceLock<Calibration> = std::sync::OnceLock::new();
    CAL.get_or_init(|| {
        let m = uniform();
        let r = calibrate(&m, SEED, 1.0, &CalibrationSettings::standard(&m)).unwrap();
        assert!(r.c_delta_validated, "c_delta = 1 failed its soundness sweep");
        r.calibration
    })
}

fn naive_reduce(text: &str) -> String {
    let mut v: Vec<char> = text.chars().collect();
    'outer: loop {
        for i in 0..v.len().saturating_sub(1) {
            if v[i] != v[i + 1] && v[i].eq_ignore_ascii_case(&v[i + 1]) {
                v.drain(i..i + 2);
                continue 'outer;
            }
        }
        return v.into_iter().collect();
    }
}

fn expand(w: &MixedWord) -> String {
    let mut s = String::new();
    for (i, c) in w.constants().iter().enumerate() {
        if !c.is_identity() {
            s.push_str(&c.to_text());
        }
        if let Some(&e) = w.exponents().get(i) {
            s.extend(std::iter::repeat_n(
                if e > 0 { 'x' } else { 'X' },
                e.unsigned_abs() as usize,
            ));
        }
    }
    s
}

fn well_formed(w: &MixedWord) -> bool {
    let m = w.exponents().len();
    w.constants().len() == m + 1
        && w.exponents().iter().all(|&e| e != 0)
        && (1..m).all(|i| !w.constants()[i].is_identity())
}

fn word_agrees(text: &str) -> bool {
    let b = f2();
    let expected = naive_reduce(text);
    let w = parse_mixed(text, &b).unwrap();
    if expand(&w) != expected || !well_formed(&w) {
        return false;
    }
    if text.chars().all(|c| c != 'x' && c != 'X') {
        let g = GroupElement::parse(text, &b).unwrap();
        return g.len() == expected.len() && (expected.is_empty() || g.to_text() == expected);
    }
    true
}

fn c01_word_algebra() -> Outcome {
    let symbols = ['a', 'A', 'b', 'B', 'x', 'X'];
    let mut exhaustive = 0u64;
    let mut bad = Vec::new();
    for len in 0..=6u32 {
        for code in 0..6usize.pow(len) {
            let mut c = code;
            let text: String = (0..len)
                .map(|_| {
                    let s = symbols[c % 6];
                    c /= 6;
                    s
                })
                .collect();
            exhaustive += 1;
            if !word_agrees(&text) {
                bad.push(text);
            }
        }
    }
    let mut rng = trial_rng(SEED, 1);
    for _ in 0..10_000 {
        let len = rng.gen_range(0..=64);
        // half the inputs stay in F_2 so the group reducer is exercised at full length
        let k = if rng.gen_bool(0.5) { 4 } else { 6 };
        let text: String = (0..len).map(|_| symbols[rng.gen_range(0..k)]).collect();
        if !word_agrees(&text) {
            bad.push(text);
        }
    }
    outcome(
        bad.is_empty(),
        format!(
            "{exhaustive} exhaustive + 10000 random inputs, {} disagreements{}",
            bad.len(),
            bad.first().map(|w| format!(", first {w:?}")).unwrap_or_default()
        ),
    )
}

fn c02_tree_geometry() -> Outcome {
    let ball = enumerate_ball(6, &f2(), DEFAULT_BUDGET).unwrap();
    let tree = HypParams::tree(1.0);
    let mut mismatches = 0u64;
    for g in &ball {
        let gi = g.inverse();
        for h in &ball {
            let gromov2 = g.len() + h.len() - gi.mul(h).len();
            if 2 * overlap_diameter(g, h, &tree).unwrap() != gromov2 {
                mismatches += 1;
            }
        }
    }
    let pairs = ball.len() * ball.len();
    outcome(
        mismatches == 0,
        format!("{pairs} pairs over the radius-6 ball, {mismatches} mismatches"),
    )
}

fn c03_single_soundness() -> Outcome {
    let s = single_certificate_sweep(&f2(), 1000, 12, 24, 8, &HypParams::tree(1.0), derive_seed(SEED, 3)).unwrap();
    outcome(
        s.failures == 0 && s.certified > 0,
        format!(
            "{} words, {} certified, {} failures of w^k(g) != e for k <= {}",
            s.samples, s.certified, s.failures, s.max_power
        ),
    )
}

fn certified_candidates(n: usize, count: u64) -> Vec<GroupElement> {
    let cal = calibration();
    let constant = LengthConstant::Calibrated {
        calibration: cal.clone(),
        value: cal.simultaneous_constant(&f2()),
    };
    (0..count)
        .map(|i| {
            find_simultaneous_random(
                n,
                &uniform(),
                constant.clone(),
                derive_seed(SEED, 400 + 10 * n as u64 + i),
                &HypParams::tree(1.0),
                DEFAULT_BUDGET,
                &SearchSettings::default(),
            )
            .unwrap()
            .nonsolution
        })
        .collect()
}

fn c04_simultaneous_soundness() -> Outcome {
    let b = f2();
    let mut details = Vec::new();
    let mut pass = true;
    for n in [1usize, 2] {
        let candidates = certified_candidates(n, 10);
        let exhaustive = enumerate_w_n(&b, n, 4, &[1, -1, 2, -2], 10_000_000).unwrap();
        let mut rng = trial_rng(SEED, 40 + n as u64);
        let random: Vec<MixedWord> = (0..1000).map(|_| random_w_n(&b, n, 20, 2, &mut rng)).collect();
        let mut evaluations = 0u64;
        let mut trivial = 0u64;
        for g in &candidates {
            for w in exhaustive.iter().chain(&random) {
                evaluations += 1;
                trivial += u64::from(w.evaluate(g).unwrap().is_identity());
            }
        }
        pass &= trivial == 0;
        details.push(format!(
            "n={n}: {} exhaustive + 1000 random words x 10 candidates, {trivial}/{evaluations} trivial",
            exhaustive.len()
        ));
    }
    outcome(pass, details.join("; "))
}

fn c05_speed() -> Outcome {
    let s = estimate_speed(&uniform(), 10_000, 1000, derive_seed(SEED, 5)).unwrap();
    outcome(
        (s.lambda_hat - 0.5).abs() <= 0.02,
        format!(
            "lambda_hat = {:.4} +- {:.4} (target 0.500 +- 0.02)",
            s.lambda_hat, s.stderr
        ),
    )
}

/// Returns the literal outcome and, separately, the long-probe slope check.
fn c06_tail() -> (Outcome, bool) {
    let b = f2();
    let a = GroupElement::parse("a", &b).unwrap();
    let t = estimate_tail(&uniform(), &a, 1000, 10_000, derive_seed(SEED, 6), false).unwrap();
    let dominated = t.dominated_by(t.fitted_c1);
    let literal_slope = t.log2_slope(3..=10);
    let decreasing = (3..10).all(|k| t.survival_at(k + 1) < t.survival_at(k));
    let literal = dominated && decreasing && literal_slope.is_some_and(|(s, _)| s < 0.0);

    let probe = long_probe(&uniform());
    let p = estimate_tail(&uniform(), &probe, 1000, 10_000, derive_seed(SEED, 60), false).unwrap();
    let probe_slope = p.log2_slope(3..=10);
    let probe_ok = p.dominated_by(p.fitted_c1)
        && (3..10).all(|k| p.survival_at(k + 1) <= p.survival_at(k))
        && probe_slope.is_some_and(|(s, _)| (s - PROBE_SLOPE).abs() <= PROBE_SLOPE_TOLERANCE);
    let detail = format!(
        "D(a, x_n): C1 = {} dominates {}, P[D>=1] = {:.4}, P[D>=3] = {}, slope on [3,10] {}; \
         probe {}: C1 = {}, slope {} (expect {PROBE_SLOPE:.3} +- {PROBE_SLOPE_TOLERANCE}) {}",
        t.fitted_c1,
        if dominated { "yes" } else { "NO" },
        t.survival_at(1),
        t.survival_at(3),
        literal_slope.map_or("undefined: D(a, x_n) <= |a| = 1".to_string(), |(s, _)| format!(
            "{s:.3}"
        )),
        probe,
        p.fitted_c1,
        probe_slope.map_or("undefined".to_string(), |(s, k)| format!("{s:.3} from {k} points")),
        if probe_ok { "ok" } else { "FAILED" },
    );
    (outcome(literal, detail), probe_ok)
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_mixfree")
}

fn run_cli(args: &[&str], out_dir: &Path) -> std::process::Output {
    Command::new(bin())
        .args(args)
        .env("MIF_OUTPUT_DIR", out_dir)
        .output()
        .expect("spawn mixfree")
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    (sxy / sxx, sxy * sxy / (sxx * syy))
}

fn c07_log_scaling(dir: &Path) -> Outcome {
    let b = f2();
    let mut rng = trial_rng(SEED, 7);
    let mut words = Vec::new();
    let mut js = Vec::new();
    for j in 4..=10u32 {
        for _ in 0..5 {
            let h = GroupElement::random_reduced(&b, 1 << j, &mut rng);
            let e = GroupElement::identity(&b);
            let w = MixedWord::from_parts(vec![e, h.clone(), h.inverse()], vec![1, -1]).unwrap();
            words.push(w.to_text());
            js.push(f64::from(j));
        }
    }
    let seed = SEED.to_string();
    let mut args = vec![
        "--seed",
        seed.as_str(),
        "--no-timing",
        "find-single",
        "--rate-trials",
        "200",
    ];
    args.extend(words.iter().map(String::as_str));
    let report = dir.join("scaling.json");
    let report_s = report.to_string_lossy().to_string();
    args.extend(["--report", report_s.as_str()]);
    let o = run_cli(&args, dir);
    if !o.status.success() {
        return outcome(
            false,
            format!("find-single failed: {}", String::from_utf8_lossy(&o.stderr)),
        );
    }
    let csv_path = dir.join("scaling.csv");
    let o = run_cli(&["plot", &report_s, "scaling", &csv_path.to_string_lossy()], dir);
    if !o.status.success() {
        return outcome(false, format!("plot failed: {}", String::from_utf8_lossy(&o.stderr)));
    }
    let mut reader = csv::Reader::from_path(&csv_path).unwrap();
    let rows: Vec<(f64, f64, f64)> = reader.deserialize::<(f64, f64, f64)>().map(|r| r.unwrap()).collect();
    let lengths: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let (_, row_r2) = linear_fit(&js, &lengths);
    // one point per j: the mean over its words
    let levels: Vec<f64> = (4..=10).map(f64::from).collect();
    let means: Vec<f64> = levels
        .iter()
        .map(|&j| {
            let ys: Vec<f64> = js
                .iter()
                .zip(&lengths)
                .filter(|(x, _)| **x == j)
                .map(|(_, y)| *y)
                .collect();
            ys.iter().sum::<f64>() / ys.len() as f64
        })
        .collect();
    let (slope, r2) = linear_fit(&levels, &means);
    let r = Report::read(&report).unwrap();
    let frequencies: Vec<f64> = r.result["searches"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["success_frequency"].as_f64().unwrap())
        .collect();
    let min_freq = frequencies.iter().copied().fold(f64::INFINITY, f64::min);
    let c = r.result["constant"]["value"].as_f64().unwrap();
    // |g| ~ lambda C log2|w| and log2|w| ~ j + 1: the slope in j is about lambda C
    let expected = 0.5 * c;
    let pass = min_freq >= 0.5 && slope > 0.0 && r2 >= 0.9 && (slope / expected - 1.0).abs() <= 0.3;
    outcome(
        pass,
        format!(
            "{} words, |h| = 2^4..2^10: min success frequency {min_freq:.3}, mean |g| = {slope:.2} j + c with R^2 = {r2:.3} \
             over the 7 levels ({row_r2:.3} over single rows; expected slope ~ lambda C = {expected:.1})",
            rows.len()
        ),
    )
}

fn c08_linear_simultaneous() -> Outcome {
    let mut lens = Vec::new();
    let mut pass = true;
    for n in 1..=4usize {
        let g = &certified_candidates(n, 1)[0];
        pass &= g.len() as f64 <= LINEAR_K * n as f64;
        lens.push(g.len());
    }
    let mut minima = Vec::new();
    for n in 1..=6usize {
        let r = commutator_lower_bound(n, &f2(), DEFAULT_BUDGET).unwrap();
        pass &= r.min_length > n;
        minima.push(r.min_length);
    }
    pass &= minima == vec![2, 3, 4, 5, 6, 7];
    outcome(
        pass,
        format!(
            "|g_n| for n = 1..4: {lens:?} (K = {LINEAR_K}); minimal commutator non-solution for n = 1..6: {minima:?} (>= n + 1)"
        ),
    )
}

fn c09_growth() -> Outcome {
    let b = f2();
    let mut values = Vec::new();
    let mut pass = true;
    for n in 1..=3usize {
        let r = mif_growth(n, &b, DEFAULT_BUDGET).unwrap();
        // independent re-run over a shuffled enumeration order
        let mut words = enumerate_mixed_ball(n, &b, DEFAULT_BUDGET).unwrap();
        words.shuffle(&mut trial_rng(SEED, 90 + n as u64));
        let shuffled = words
            .iter()
            .map(|w| complexity(w, DEFAULT_BUDGET).unwrap().value)
            .max()
            .unwrap();
        pass &= shuffled == r.value;
        values.push(r.value);
    }
    pass &= values[0] == 1 && values.windows(2).all(|w| w[0] <= w[1]);
    outcome(pass, format!("M(1..3) = {values:?}, shuffled re-run agrees, M(1) = 1"))
}

fn c10_selfless() -> Outcome {
    let cal = calibration();
    let constant = LengthConstant::Calibrated {
        calibration: cal.clone(),
        value: cal.simultaneous_constant(&f2()),
    };
    let mut pass = true;
    let mut parts = Vec::new();
    let mut ratios = Vec::new();
    for n in 1..=3usize {
        match build_selfless_map(
            n,
            &uniform(),
            constant.clone(),
            derive_seed(SEED, 100 + n as u64),
            &HypParams::tree(1.0),
            DEFAULT_BUDGET,
            &SearchSettings::default(),
        ) {
            Ok(m) => {
                pass &= m.containment_holds && m.f_value >= n;
                let ratio = m.f_value as f64 / (n * n) as f64;
                ratios.push(ratio);
                parts.push(format!(
                    "n={n}: injective on {}, f = {}, f/n^2 = {ratio:.1}",
                    m.ball_size, m.f_value
                ));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("n={n}: {e}"));
            }
        }
    }
    // quadratic trend: f(n) / n^2 stays within a factor 2 of its value at n = 1
    if let Some(&first) = ratios.first() {
        pass &= ratios.iter().all(|&r| r <= 2.0 * first && r >= first / 2.0);
    }
    outcome(pass, parts.join("; "))
}

fn c11_union_bound() -> Outcome {
    let cal = calibration();
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [64usize, 128, 256] {
        let r = verify_union_bound(n, &uniform(), cal, None, 10_000, derive_seed(SEED, 11)).unwrap();
        pass &= r.within_bound;
        parts.push(format!(
            "n={n}: {}/{} bad (freq {:.5} <= {:.5})",
            r.bad_events, r.trials, r.frequency, r.bound
        ));
    }
    outcome(pass, parts.join("; "))
}

fn c12_determinism(dir: &Path) -> Outcome {
    let runs: &[&[&str]] = &[
        &["calibrate"],
        &["walk", "--length", "500", "--trials", "300"],
        &["stats", "tail", "--probe", "a", "--length", "400", "--trials", "2000"],
        &["stats", "overlap", "--length", "300", "--trials", "30"],
        &["find-single", "xaXA", "x(ab)^8X(BA)^8", "--rate-trials", "50"],
        &["find-simul", "2"],
        &["union-bound", "64", "--trials", "2000"],
        &["selfless", "1", "2"],
        &["growth", "2"],
    ];
    let seed = SEED.to_string();
    let mut failures = Vec::new();
    let mut compared = 0;
    for (i, args) in runs.iter().enumerate() {
        let mut reports = Vec::new();
        for rep in 0..2 {
            // fresh directories: the second run must not lean on the first run's cache
            let d = dir.join(format!("det-{i}-{rep}"));
            let path = d.join("report.json");
            let mut full = vec!["--seed", seed.as_str(), "--no-timing", "--report"];
            let p = path.to_string_lossy().to_string();
            full.push(&p);
            full.extend_from_slice(args);
            let o = run_cli(&full, &d);
            if !o.status.success() {
                failures.push(format!("{args:?} exited {:?}", o.status.code()));
                break;
            }
            reports.push(std::fs::read(&path).unwrap());
        }
        if reports.len() == 2 {
            compared += 1;
            if reports[0] != reports[1] {
                failures.push(format!("{args:?} differs"));
            }
            // provenance: re-running from the embedded config reproduces the payload
            let r: Report = serde_json::from_slice(&reports[0]).unwrap();
            let d = dir.join(format!("det-{i}-rerun"));
            std::fs::create_dir_all(&d).unwrap();
            let cfg = d.join("config.txt");
            std::fs::write(&cfg, &r.config.text).unwrap();
            let path = d.join("report.json");
            let mut full: Vec<String> = vec![
                "--config".into(),
                cfg.to_string_lossy().into(),
                "--report".into(),
                path.to_string_lossy().into(),
            ];
            full.extend(r.args.iter().cloned());
            let refs: Vec<&str> = full.iter().map(String::as_str).collect();
            let o = run_cli(&refs, &d);
            let again = o.status.success().then(|| Report::read(&path).unwrap());
            if again.map(|a| a.payload_bytes().unwrap()) != Some(r.payload_bytes().unwrap()) {
                failures.push(format!("{args:?} not reproduced from its config snapshot"));
            }
        }
    }
    // in-process: a reduced version of each Monte Carlo criterion, serialized twice
    let twice = |f: &dyn Fn() -> Vec<u8>| f() == f();
    let lib_ok = twice(&|| serde_json::to_vec(&estimate_speed(&uniform(), 300, 200, SEED).unwrap()).unwrap())
        && twice(&|| {
            let a = GroupElement::parse("a", &f2()).unwrap();
            serde_json::to_vec(&estimate_tail(&uniform(), &a, 300, 2000, SEED, true).unwrap()).unwrap()
        })
        && twice(&|| {
            serde_json::to_vec(&single_certificate_sweep(&f2(), 100, 12, 24, 8, &HypParams::tree(1.0), SEED).unwrap())
                .unwrap()
        })
        && twice(&|| {
            serde_json::to_vec(&verify_union_bound(64, &uniform(), calibration(), None, 500, SEED).unwrap()).unwrap()
        });
    if !lib_ok {
        failures.push("library results differ between identical runs".into());
    }
    outcome(
        failures.is_empty(),
        format!(
            "{compared} CLI commands run twice and from their config snapshots, 4 library runs: {}",
            if failures.is_empty() {
                "byte-identical".to_string()
            } else {
                failures.join("; ")
            }
        ),
    )
}

fn main() {
    // `cargo test` passes filter arguments; this suite always runs whole
    let work = tempfile::tempdir().unwrap();
    let dir: PathBuf = work.path().to_path_buf();
    let mut failed = Vec::new();
    let mut report = |id: u32, name: &str, elapsed: Duration, o: &Outcome| {
        println!(
            "criterion {id:>2} {name:<34} {} [{:.1}s] {}",
            if o.pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            o.detail
        );
        if !o.pass {
            failed.push(id);
        }
    };
    macro_rules! criterion {
        ($id:expr, $name:expr, $e:expr) => {{
            let t = Instant::now();
            let o = $e;
            report($id, $name, t.elapsed(), &o);
        }};
    }
    criterion!(1, "word-algebra oracle equivalence", c01_word_algebra());
    criterion!(2, "tree-geometry exactness", c02_tree_geometry());
    criterion!(3, "single certificate soundness", c03_single_soundness());
    criterion!(4, "simultaneous certificate soundness", c04_simultaneous_soundness());
    criterion!(5, "speed fixture", c05_speed());
    let t = Instant::now();
    let (tail, probe_ok) = c06_tail();
    report(6, "tail decay", t.elapsed(), &tail);
    criterion!(7, "log-scaling of single searches", c07_log_scaling(&dir));
    criterion!(8, "linear simultaneous scaling", c08_linear_simultaneous());
    criterion!(9, "exact growth table", c09_growth());
    criterion!(10, "selflessness", c10_selfless());
    criterion!(11, "union bound", c11_union_bound());
    criterion!(12, "determinism", c12_determinism(&dir));

    // Criterion 6 cannot hold as written: D(a, x_n) never exceeds |a| = 1, so
    // its survival function is 0 on [3, 10]. It is reported, not waived
    // silently; the suite still fails if the long-probe check fails too.
    let known: HashSet<u32> = [6].into();
    let unexpected: Vec<u32> = failed.iter().copied().filter(|id| !known.contains(id)).collect();
    let tail_failed = failed.contains(&6);
    println!(
        "summary: {} of 12 criteria pass{}",
        12 - failed.len(),
        if tail_failed {
            format!(
                "; criterion 6 fails as written (see README), its long-probe check {}",
                if probe_ok { "passes" } else { "FAILS" }
            )
        } else {
            String::new()
        }
    );
    if !unexpected.is_empty() || !probe_ok {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
