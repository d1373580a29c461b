//! Command-line front end. [`run`] parses arguments, writes reports to
//! `out` and diagnostics to `err`, and returns the process exit code.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::arith::next_prime;
use crate::error::Error;
use crate::factor::{derive_seed, factorize, sqfree_decompose, DecomposeOptions, DecompositionResult, RMode, Stage};
use crate::multipliers::{run_multiplier_experiment, ExperimentConfig, MultiplierStrategy, StrategyKind};
use crate::oracle::fixture_lines;

/// Success.
pub const EXIT_OK: i32 = 0;
/// Malformed input or any other error.
pub const EXIT_USAGE: i32 = 1;
/// A multiplier or time budget ran out.
pub const EXIT_BUDGET: i32 = 2;

/// Primes whose squares are removed before decomposing.
const TINY_PRIMES: [u32; 3] = [3, 5, 7];

pub const BENCH_HEADER: &str = "q_size,mode,mean_time_s,median_time_s,success_stage1_pct,success_stage2_pct,mean_groups,median_groups,factored";

#[derive(Debug, Parser)]
#[command(name = "sqfree", version, about = "Square-free decomposition n = a^2 b via class groups")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Find n = a^2 b with b square-free.
    Decompose {
        n: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Factor n completely.
    Factor {
        n: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Time random n = p^2 q with and without stage 2; prints CSV.
    Bench {
        /// Exponents k with p, q near 10^k, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "5")]
        q_exp: Vec<u32>,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Success rate of single attempts per multiplier; prints CSV.
    Experiment {
        /// p and q are drawn near 10^k.
        #[arg(long, default_value_t = 5)]
        q_exp: u32,
        /// Required q mod 4.
        #[arg(long)]
        q_mod4: Option<u8>,
        /// Fixed values of (-q/p), e.g. `3:-1,5:1`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        symbol: Vec<String>,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,5,6")]
        multipliers: Vec<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        no_stage2: bool,
    },
    /// Reduced forms for every discriminant with absolute value in a range; one line per D.
    Fixtures {
        #[arg(long, default_value_t = 3)]
        min: u64,
        #[arg(long, default_value_t = 1000)]
        max: u64,
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RModeArg {
    Pow3,
    PrimeSqrt,
    PrimeSixth,
}

impl From<RModeArg> for RMode {
    fn from(m: RModeArg) -> RMode {
        match m {
            RModeArg::Pow3 => RMode::PowerOf3,
            RModeArg::PrimeSqrt => RMode::PrimeAboveSqrtN,
            RModeArg::PrimeSixth => RMode::PrimeScaledSixthRoot,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Seq,
    Scored,
    Crt,
}

/// `AUTO` or a positive integer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoundArg {
    Auto,
    Value(BigInt),
}

impl FromStr for BoundArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(BoundArg::Auto);
        }
        parse_positive(s).map(BoundArg::Value)
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Seed for all random choices; output depends only on n and the seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for the multiplier sweep.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: u64,
    /// Size guess for the square-free part, or `auto` for the doubling schedule.
    #[arg(long)]
    pub b2_bound: Option<BoundArg>,
    /// Auxiliary modulus r; default is a power of 3, or the prime above sqrt(n) when 3 | n.
    #[arg(long, value_enum)]
    pub r_mode: Option<RModeArg>,
    /// Order in which multipliers s are tried.
    #[arg(long, value_enum, default_value = "seq")]
    pub strategy: StrategyArg,
    /// Skip the stage-2 prime walk.
    #[arg(long)]
    pub no_stage2: bool,
    /// Print one JSON object instead of text.
    #[arg(long)]
    pub json: bool,
    /// Give up after this many multipliers.
    #[arg(long)]
    pub max_multipliers: Option<u64>,
    /// Give up after this much wall time.
    #[arg(long)]
    pub max_seconds: Option<f64>,
}

impl RunArgs {
    pub fn options(&self) -> Result<DecomposeOptions, String> {
        let kind = match self.strategy {
            StrategyArg::Seq => StrategyKind::Sequential,
            StrategyArg::Scored => StrategyKind::Scored,
            StrategyArg::Crt => StrategyKind::CrtMatched,
        };
        let max_time = match self.max_seconds {
            Some(t) if !(t.is_finite() && t > 0.0) => return Err(format!("--max-seconds must be positive, got {t}")),
            Some(t) => Some(Duration::from_secs_f64(t)),
            None => None,
        };
        Ok(DecomposeOptions {
            seed: self.seed,
            threads: self.threads as usize,
            b2_bound: match &self.b2_bound {
                Some(BoundArg::Value(v)) => Some(v.clone().max(BigInt::from(16))),
                _ => None,
            },
            r_mode: self.r_mode.map(RMode::from),
            strategy: MultiplierStrategy::of_kind(kind),
            stage2: !self.no_stage2,
            max_multipliers: self.max_multipliers,
            max_time,
            ..DecomposeOptions::default()
        })
    }
}

fn parse_positive(s: &str) -> Result<BigInt, String> {
    let s = s.trim();
    if s.is_empty() || !s.bytes().all(|c| c.is_ascii_digit()) {
        return Err(format!("'{s}' is not a positive base-10 integer"));
    }
    let v: BigInt = s.parse().map_err(|_| format!("'{s}' is not a positive base-10 integer"))?;
    if v.is_zero() {
        return Err("n must be positive".into());
    }
    Ok(v)
}

#[derive(Serialize)]
struct DecomposeJson {
    n: String,
    a: String,
    b: String,
    s: u64,
    stage: Stage,
    groups_tried: u64,
    forms_tried: u64,
    elapsed_ms: u64,
    seed: u64,
}

#[derive(Serialize)]
struct FactorJson {
    n: String,
    factors: Vec<String>,
    groups_tried: u64,
    forms_tried: u64,
    elapsed_ms: u64,
    seed: u64,
}

/// Removes `p^(2j)` for the tiny primes, returning the reduced `n` and the
/// square root of what was removed.
fn strip_tiny_squares(n: &BigInt) -> (BigInt, BigInt) {
    let mut m = n.clone();
    let mut root = BigInt::one();
    for p in TINY_PRIMES {
        let sq = BigInt::from(p * p);
        while (&m % &sq).is_zero() {
            m /= &sq;
            root *= p;
        }
    }
    (m, root)
}

/// Decomposition with the tiny square factors folded back in.
fn decompose_with_strip(n: &BigInt, opts: &DecomposeOptions, err: &mut dyn Write) -> crate::Result<DecompositionResult> {
    let (m, root) = strip_tiny_squares(n);
    if !root.is_one() {
        let _ = writeln!(err, "warning: removed the square factor {} before decomposing", &root * &root);
    }
    let mut res = sqfree_decompose(&m, opts)?;
    res.n = n.clone();
    res.a *= root;
    Ok(res)
}

fn odd_input(n_text: &str) -> Result<BigInt, String> {
    let n = parse_positive(n_text)?;
    if n.is_even() {
        return Err("n must be odd; factor out 2 first".into());
    }
    Ok(n)
}

fn report_error(e: &Error, err: &mut dyn Write) -> i32 {
    match e {
        Error::BudgetExhausted(stats) => {
            let _ = writeln!(err, "budget exhausted after {stats}");
            EXIT_BUDGET
        }
        other => {
            let _ = writeln!(err, "error: {other}");
            EXIT_USAGE
        }
    }
}

/// Parses `args` (program name first) and runs the selected command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    match cli.command {
        Command::Decompose { n, run } => cmd_decompose(&n, &run, out, err),
        Command::Factor { n, run } => cmd_factor(&n, &run, out, err),
        Command::Bench { q_exp, samples, run } => cmd_bench(&q_exp, samples, &run, out, err),
        Command::Experiment { q_exp, q_mod4, symbol, samples, multipliers, seed, no_stage2 } => {
            let fixed_symbols = match parse_symbols(&symbol) {
                Ok(v) => v,
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    return EXIT_USAGE;
                }
            };
            let cfg = ExperimentConfig {
                q_size: 10u64.saturating_pow(q_exp.min(18)),
                q_mod4,
                fixed_symbols,
                samples,
                multipliers,
                seed,
                stage2: !no_stage2,
                ..ExperimentConfig::default()
            };
            match run_multiplier_experiment(&cfg) {
                Ok(table) => {
                    let _ = write!(out, "{}", table.to_csv());
                    EXIT_OK
                }
                Err(e) => report_error(&e, err),
            }
        }
        Command::Fixtures { min, max, out: path } => match fixture_lines(min, max) {
            Ok(lines) => {
                let text = lines.join("\n") + "\n";
                let written = match path {
                    Some(p) => std::fs::write(&p, text).map_err(|e| format!("cannot write {}: {e}", p.display())),
                    None => out.write_all(text.as_bytes()).map_err(|e| e.to_string()),
                };
                match written {
                    Ok(()) => EXIT_OK,
                    Err(e) => {
                        let _ = writeln!(err, "error: {e}");
                        EXIT_USAGE
                    }
                }
            }
            Err(e) => report_error(&e, err),
        },
    }
}

fn parse_symbols(items: &[String]) -> Result<Vec<(u64, i8)>, String> {
    items
        .iter()
        .map(|item| {
            let (p, v) = item.split_once(':').ok_or_else(|| format!("symbol '{item}' is not p:value"))?;
            let p: u64 = p.trim().parse().map_err(|_| format!("bad prime in '{item}'"))?;
            let v: i8 = v.trim().parse().map_err(|_| format!("bad value in '{item}'"))?;
            if !matches!(v, -1 | 1) {
                return Err(format!("symbol value in '{item}' must be 1 or -1"));
            }
            Ok((p, v))
        })
        .collect()
}

fn usage(e: String, err: &mut dyn Write) -> i32 {
    let _ = writeln!(err, "error: {e}");
    EXIT_USAGE
}

fn cmd_decompose(n_text: &str, run: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let n = match odd_input(n_text) {
        Ok(n) => n,
        Err(e) => return usage(e, err),
    };
    let opts = match run.options() {
        Ok(o) => o,
        Err(e) => return usage(e, err),
    };
    let res = match decompose_with_strip(&n, &opts, err) {
        Ok(r) => r,
        Err(e) => return report_error(&e, err),
    };
    let elapsed_ms = res.stats.elapsed.as_millis() as u64;
    if run.json {
        let j = DecomposeJson {
            n: res.n.to_string(),
            a: res.a.to_string(),
            b: res.b.to_string(),
            s: res.multiplier_s,
            stage: res.stage,
            groups_tried: res.stats.groups_tried,
            forms_tried: res.stats.forms_tried,
            elapsed_ms,
            seed: opts.seed,
        };
        let _ = writeln!(out, "{}", serde_json::to_string(&j).expect("plain struct serializes"));
    } else {
        let mut text = String::new();
        let _ = writeln!(text, "n = {}", res.n);
        let _ = writeln!(text, "a = {}", res.a);
        let _ = writeln!(text, "b = {}", res.b);
        let _ = writeln!(text, "s = {}", res.multiplier_s);
        let _ = writeln!(text, "stage = {}", res.stage);
        if let Some(w) = &res.witness {
            let _ = writeln!(text, "witness = {w}");
        }
        let _ = writeln!(text, "groups tried = {}, forms tried = {}", res.stats.groups_tried, res.stats.forms_tried);
        let _ = out.write_all(text.as_bytes());
        let _ = writeln!(err, "elapsed: {elapsed_ms} ms");
    }
    EXIT_OK
}

fn cmd_factor(n_text: &str, run: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let n = match odd_input(n_text) {
        Ok(n) => n,
        Err(e) => return usage(e, err),
    };
    let opts = match run.options() {
        Ok(o) => o,
        Err(e) => return usage(e, err),
    };
    let f = match factorize(&n, &opts) {
        Ok(f) => f,
        Err(e) => return report_error(&e, err),
    };
    let elapsed_ms = f.stats.elapsed.as_millis() as u64;
    if run.json {
        let j = FactorJson {
            n: n.to_string(),
            factors: f.factors.iter().map(|p| p.to_string()).collect(),
            groups_tried: f.stats.groups_tried,
            forms_tried: f.stats.forms_tried,
            elapsed_ms,
            seed: opts.seed,
        };
        let _ = writeln!(out, "{}", serde_json::to_string(&j).expect("plain struct serializes"));
    } else {
        let list: Vec<String> = f.factors.iter().map(|p| p.to_string()).collect();
        let _ = writeln!(out, "{} = {}", n, if list.is_empty() { "1".to_string() } else { list.join(" * ") });
        let _ = writeln!(out, "groups tried = {}, forms tried = {}", f.stats.groups_tried, f.stats.forms_tried);
        let _ = writeln!(err, "elapsed: {elapsed_ms} ms");
    }
    EXIT_OK
}

/// Summary of one bench configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub q_exp: u32,
    pub stage2: bool,
    pub times: Vec<f64>,
    pub groups: Vec<u64>,
    pub stage1_successes: usize,
    pub stage2_successes: usize,
    pub samples: usize,
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

impl BenchRow {
    pub fn to_csv_line(&self) -> String {
        let pct = |k: usize| if self.samples == 0 { 0.0 } else { 100.0 * k as f64 / self.samples as f64 };
        let groups: Vec<f64> = self.groups.iter().map(|&g| g as f64).collect();
        format!(
            "1e{},{},{:.4},{:.4},{:.1},{:.1},{:.2},{:.1},{}",
            self.q_exp,
            if self.stage2 { "stage2" } else { "stage1" },
            mean(&self.times),
            median(&self.times),
            pct(self.stage1_successes),
            pct(self.stage2_successes),
            mean(&groups),
            median(&groups),
            self.stage1_successes + self.stage2_successes,
        )
    }
}

/// Random distinct primes `p`, `q` in `[10^k, 9 * 10^k]`.
pub fn bench_instance(k: u32, seed: u64, index: u64) -> (BigInt, BigInt) {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0xbe7c, k as u64, index]));
    let lo = num_traits::pow(BigInt::from(10), k as usize);
    let draw = |rng: &mut ChaCha8Rng| {
        let span = &lo * 8u32;
        let x = &lo + BigInt::from(rng.gen::<u64>()) % &span;
        next_prime(&x)
    };
    let p = draw(&mut rng);
    let mut q = draw(&mut rng);
    while q == p {
        q = draw(&mut rng);
    }
    (p, q)
}

fn cmd_bench(q_exp: &[u32], samples: usize, run: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let base = match run.options() {
        Ok(o) => o,
        Err(e) => return usage(e, err),
    };
    if let Some(&k) = q_exp.iter().find(|&&k| !(1..=200).contains(&k)) {
        return usage(format!("--q-exp must be in 1..=200, got {k}"), err);
    }
    let _ = writeln!(out, "{BENCH_HEADER}");
    let modes: &[bool] = if run.no_stage2 { &[false] } else { &[true, false] };
    for &k in q_exp {
        for &stage2 in modes {
            let mut row = BenchRow {
                q_exp: k,
                stage2,
                times: Vec::new(),
                groups: Vec::new(),
                stage1_successes: 0,
                stage2_successes: 0,
                samples,
            };
            for i in 0..samples as u64 {
                let (p, q) = bench_instance(k, base.seed, i);
                let n = &p * &p * &q;
                let opts = DecomposeOptions {
                    stage2,
                    b2_bound: Some(base.b2_bound.clone().unwrap_or_else(|| q.clone())),
                    r_mode: Some(base.r_mode.unwrap_or(RMode::PrimeScaledSixthRoot)),
                    seed: derive_seed(base.seed, &[i]),
                    ..base.clone()
                };
                let t0 = Instant::now();
                match sqfree_decompose(&n, &opts) {
                    Ok(r) if r.a == p && r.b == q => {
                        row.times.push(t0.elapsed().as_secs_f64());
                        row.groups.push(r.stats.groups_tried);
                        if r.stage.is_stage2() {
                            row.stage2_successes += 1;
                        } else {
                            row.stage1_successes += 1;
                        }
                    }
                    Ok(r) => {
                        let _ = writeln!(err, "wrong decomposition of {n}: a = {}, b = {}", r.a, r.b);
                    }
                    Err(Error::BudgetExhausted(stats)) => {
                        let _ = writeln!(err, "budget exhausted on {n} after {stats}");
                    }
                    Err(e) => return report_error(&e, err),
                }
            }
            let _ = writeln!(out, "{}", row.to_csv_line());
        }
    }
    EXIT_OK
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("sqfree").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn parses_inputs() {
        assert!(parse_positive("0").is_err());
        assert!(parse_positive("-5").is_err());
        assert!(parse_positive("12a").is_err());
        assert_eq!(parse_positive("37559").unwrap(), BigInt::from(37559));
        assert_eq!("auto".parse::<BoundArg>().unwrap(), BoundArg::Auto);
        assert_eq!(parse_symbols(&["3:-1".into(), "5:1".into()]).unwrap(), vec![(3, -1), (5, 1)]);
        assert!(parse_symbols(&["3:0".into()]).is_err());
    }

    #[test]
    fn strips_tiny_squares() {
        let (m, root) = strip_tiny_squares(&BigInt::from(9 * 25 * 3 * 71));
        assert_eq!((m, root), (BigInt::from(3 * 71), BigInt::from(15)));
    }

    #[test]
    fn decompose_examples() {
        let (code, out, _) = run_capture(&["decompose", "37559", "--seed", "1"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("a = 23\n") && out.contains("b = 71\n"), "{out}");
        let (code, _, err) = run_capture(&["decompose", "12"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("n must be odd"));
        let (code, out, err) = run_capture(&["decompose", "1575"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("a = 15\n") && out.contains("b = 7\n"), "{out}");
        assert!(err.contains("warning"));
        assert_eq!(run_capture(&["decompose", "abc"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["decompose", "15", "--threads", "0"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn bench_rows() {
        let (code, out, _) = run_capture(&["bench", "--q-exp", "2", "--samples", "3", "--seed", "2"]);
        assert_eq!(code, EXIT_OK);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[0], BENCH_HEADER);
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("1e2,stage2,"));
        let stage1: Vec<&str> = lines[2].split(',').collect();
        assert_eq!(stage1[1], "stage1");
        assert_eq!(stage1[5], "0.0");
    }
}
