//! Choosing the multipliers `s` that twist `C(-4n)` into `C(-4ns)`.
//!
//! Three streams are offered: plain ascending square-free integers, a
//! scored stream that favours small expected class number per order-two
//! class, and a stream restricted to residue classes with prescribed
//! Kronecker symbols.

use std::collections::VecDeque;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::arith::{distinct_prime_factors_u64, is_prime_u64, is_squarefree_u64, next_prime, primes_up_to};
use crate::error::{Error, Result};
use crate::factor::{attempt_multiplier, build_params, derive_seed, resolve_r, ParamOverrides, RMode};
use crate::forms::{assigned_characters_with_primes, kronecker, kronecker_i64, Discriminant};
use crate::oracle::trial_factor;

/// Smallest square-free integer strictly above `s`.
pub fn next_squarefree(s: u64) -> u64 {
    let mut t = s + 1;
    while !is_squarefree_u64(t) {
        t += 1;
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyKind {
    Sequential,
    Scored,
    CrtMatched,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierStrategy {
    pub kind: StrategyKind,
    /// Primes up to this bound enter the truncated Euler product.
    pub score_prime_bound: u64,
    /// Candidates scored per refill of the scored stream.
    pub pool_size: usize,
    /// Primes whose symbols the CRT stream prescribes.
    pub crt_primes: Vec<u64>,
    /// Include a factor for the prime 2 in scores.
    pub include_two: bool,
}

impl Default for MultiplierStrategy {
    fn default() -> Self {
        MultiplierStrategy {
            kind: StrategyKind::Sequential,
            score_prime_bound: 50,
            pool_size: 16,
            crt_primes: vec![3, 5, 7],
            include_two: false,
        }
    }
}

impl MultiplierStrategy {
    pub fn of_kind(kind: StrategyKind) -> Self {
        MultiplierStrategy { kind, ..Self::default() }
    }

    /// The infinite multiplier stream for `n`.
    pub fn stream(&self, n: &BigInt) -> MultiplierStream {
        let state = match self.kind {
            StrategyKind::Sequential => State::Sequential,
            StrategyKind::Scored => State::Scored { buffer: VecDeque::new() },
            StrategyKind::CrtMatched => {
                let primes: Vec<u64> = self
                    .crt_primes
                    .iter()
                    .copied()
                    .filter(|&p| p % 2 == 1 && !(n % p).is_zero())
                    .collect();
                State::Crt(CrtFilter::new(n, &primes))
            }
        };
        MultiplierStream { n: n.clone(), last: 0, strategy: self.clone(), state }
    }
}

enum State {
    Sequential,
    Scored { buffer: VecDeque<u64> },
    Crt(CrtFilter),
}

pub struct MultiplierStream {
    n: BigInt,
    last: u64,
    strategy: MultiplierStrategy,
    state: State,
}

impl Iterator for MultiplierStream {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        match &mut self.state {
            State::Sequential => {
                self.last = next_squarefree(self.last);
                Some(self.last)
            }
            State::Scored { buffer } => {
                if buffer.is_empty() {
                    let mut pool = Vec::with_capacity(self.strategy.pool_size);
                    for _ in 0..self.strategy.pool_size.max(1) {
                        self.last = next_squarefree(self.last);
                        pool.push(self.last);
                    }
                    let n = &self.n;
                    let bound = self.strategy.score_prime_bound;
                    let two = self.strategy.include_two;
                    let mut scored: Vec<(f64, u64)> = pool
                        .into_iter()
                        .map(|s| {
                            // shared factors split n at once, so try them first
                            let score = if n.gcd(&BigInt::from(s)).is_one() {
                                score_multiplier_with(s, n, bound, two)
                            } else {
                                f64::NEG_INFINITY
                            };
                            (score, s)
                        })
                        .collect();
                    scored.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
                    buffer.extend(scored.into_iter().map(|(_, s)| s));
                }
                buffer.pop_front()
            }
            State::Crt(filter) => loop {
                self.last = next_squarefree(self.last);
                if filter.accepts(&self.n, self.last) {
                    return Some(self.last);
                }
            },
        }
    }
}

/// Residues modulo the product of the chosen primes at which
/// `(s/p) = -(-4n/p)` holds for every chosen `p`.
struct CrtFilter {
    modulus: u64,
    allowed: Vec<bool>,
}

impl CrtFilter {
    fn new(n: &BigInt, primes: &[u64]) -> Self {
        let targets: Vec<i8> = primes
            .iter()
            .map(|&p| -kronecker(&(BigInt::from(-4) * n), &BigInt::from(p)))
            .collect();
        let modulus: u64 = primes.iter().product();
        // each residue class mod the product is a CRT combination of one
        // residue per prime; keep the combinations hitting every target
        let allowed = (0..modulus)
            .map(|x| {
                primes
                    .iter()
                    .zip(&targets)
                    .all(|(&p, &t)| kronecker_i64((x % p) as i64, p as i64) == t)
            })
            .collect();
        CrtFilter { modulus, allowed }
    }

    fn accepts(&self, n: &BigInt, s: u64) -> bool {
        self.allowed[(s % self.modulus) as usize] && n.gcd(&BigInt::from(s)).is_one()
    }
}

/// The `count` smallest square-free `s` coprime to `n` with
/// `(s/p) = -(-4n/p)` for every listed prime.
pub fn crt_matched_multipliers(n: &BigInt, primes: &[u64], count: usize) -> Result<Vec<u64>> {
    let mut seen = primes.to_vec();
    seen.sort_unstable();
    seen.dedup();
    if seen.len() != primes.len() {
        return Err(Error::Precondition("repeated prime".into()));
    }
    for &p in primes {
        if p % 2 == 0 || !is_prime_u64(p) {
            return Err(Error::Precondition(format!("{p} is not an odd prime")));
        }
        if (n % p).is_zero() {
            return Err(Error::Precondition(format!("{p} divides {n}")));
        }
    }
    let filter = CrtFilter::new(n, primes);
    let mut out = Vec::with_capacity(count);
    let mut s = 0;
    while out.len() < count {
        s = next_squarefree(s);
        if filter.accepts(n, s) {
            out.push(s);
        }
    }
    Ok(out)
}

/// Number of odd primes dividing `D` and the rank `mu` of the assigned
/// characters; `2^(mu - 1)` classes have order at most two.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MuProfile {
    pub r: u32,
    pub mu: u32,
}

impl MuProfile {
    pub fn two_part_lower_bound(&self) -> BigInt {
        BigInt::one() << (self.mu.max(1) - 1)
    }
}

/// `mu` given the distinct odd primes dividing `D`.
pub fn mu_from_primes(d: &Discriminant, odd_primes: &[BigInt]) -> MuProfile {
    let mu = assigned_characters_with_primes(d, odd_primes).len() as u32;
    MuProfile { r: odd_primes.len() as u32, mu }
}

/// `mu` for a discriminant small enough to trial-factor.
pub fn mu_of(d: &Discriminant) -> Result<MuProfile> {
    let abs = -d.value();
    let factors = trial_factor(&abs)
        .map_err(|e| Error::Domain(format!("factorization of {d} unavailable: {e}")))?;
    let mut odd: Vec<BigInt> = factors.into_iter().filter(|p| p.is_odd()).collect();
    odd.dedup();
    Ok(mu_from_primes(d, &odd))
}

/// Extra characters contributed by the 2-part, keyed on `m` with `D = -4m`.
fn extra_characters(m_mod8: u64) -> u32 {
    match m_mod8 {
        3 | 7 => 0,
        0 => 2,
        _ => 1,
    }
}

/// Heuristic rank of multiplier `s` for `n`; lower is better. Only the order
/// matters. The odd primes of `n` shift every candidate's `mu` equally and
/// are left out.
pub fn score_multiplier(s: u64, n: &BigInt, bound: u64) -> f64 {
    score_multiplier_with(s, n, bound, false)
}

pub fn score_multiplier_with(s: u64, n: &BigInt, bound: u64, include_two: bool) -> f64 {
    let m = n * s;
    let d = BigInt::from(-4) * &m;
    let mut product = 1.0f64;
    for &p in primes_up_to(bound).iter().filter(|&&p| p > 2) {
        let chi = kronecker(&d, &BigInt::from(p)) as f64;
        product *= p as f64 / (p as f64 - chi);
    }
    if include_two && (&m % 4u32).to_u64() == Some(3) {
        let chi = kronecker(&(-&m), &BigInt::from(2)) as f64;
        product *= 2.0 / (2.0 - chi);
    }
    let odd_s = distinct_prime_factors_u64(s).into_iter().filter(|&p| p != 2).count() as i32;
    let mu = odd_s + extra_characters((&m % 8u32).to_u64().unwrap()) as i32;
    product / 2f64.powi(mu - 1) * (s as f64).sqrt()
}

/// `prod_{p <= bound} p / (p - (D/p))`, the truncated value of `L(1, (D/.))`.
pub fn euler_product(d: &Discriminant, bound: u64) -> f64 {
    primes_up_to(bound)
        .into_iter()
        .map(|p| {
            let chi = kronecker(d.value(), &BigInt::from(p)) as f64;
            p as f64 / (p as f64 - chi)
        })
        .product()
}

/// Parameters of a multiplier experiment over random `n = p^2 q`.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// `p` and `q` are drawn near this size.
    pub q_size: u64,
    /// Required residue of `q` modulo 4, if any.
    pub q_mod4: Option<u8>,
    /// Required values of `(-q/p)` for small odd primes `p`.
    pub fixed_symbols: Vec<(u64, i8)>,
    pub samples: usize,
    pub multipliers: Vec<u64>,
    pub seed: u64,
    pub stage2: bool,
    /// Rejection-sampling draws allowed per requested sample.
    pub draws_per_sample: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            q_size: 100_000,
            q_mod4: None,
            fixed_symbols: Vec::new(),
            samples: 100,
            multipliers: vec![1, 2, 3, 5, 6],
            seed: 0,
            stage2: true,
            draws_per_sample: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub s: u64,
    pub successes: usize,
    pub samples: usize,
    /// `(-4 q s / p)` for `p = 3, 5, 7`, when fixed by the configuration.
    pub symbols: [Option<i8>; 3],
}

impl ExperimentRow {
    pub fn success_prob(&self) -> f64 {
        if self.samples == 0 {
            0.0
        } else {
            self.successes as f64 / self.samples as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentTable {
    pub rows: Vec<ExperimentRow>,
    /// Fewer samples than requested satisfied the constraints.
    pub incomplete: bool,
}

pub const EXPERIMENT_HEADER: &str = "s,success_prob,ratio_to_s1,sym3,sym5,sym7,samples";

impl ExperimentTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(EXPERIMENT_HEADER);
        out.push('\n');
        if self.rows.iter().all(|r| r.samples == 0) {
            return out;
        }
        let base = self.rows.iter().find(|r| r.s == 1).map(|r| r.success_prob());
        for row in &self.rows {
            let p = row.success_prob();
            let ratio = match base {
                Some(b) if b > 0.0 => format!("{:.4}", p / b),
                _ => "na".to_string(),
            };
            let sym = |v: Option<i8>| v.map_or("na".to_string(), |x| x.to_string());
            writeln!(
                out,
                "{},{:.4},{},{},{},{},{}",
                row.s,
                p,
                ratio,
                sym(row.symbols[0]),
                sym(row.symbols[1]),
                sym(row.symbols[2]),
                row.samples
            )
            .unwrap();
        }
        if self.incomplete {
            out.push_str("# incomplete: constraints rejected too many draws\n");
        }
        out
    }
}

fn random_prime_near<R: Rng>(size: u64, rng: &mut R) -> BigInt {
    let lo = size.max(11);
    next_prime(&BigInt::from(rng.gen_range(lo..2 * lo)))
}

fn draw_sample(cfg: &ExperimentConfig, index: usize) -> Option<(BigInt, BigInt)> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[0x5a, index as u64]));
    for _ in 0..cfg.draws_per_sample.max(1) {
        let q = random_prime_near(cfg.q_size, &mut rng);
        if let Some(r) = cfg.q_mod4 {
            if (&q % 4u32).to_u64() != Some(r as u64) {
                continue;
            }
        }
        if !cfg.fixed_symbols.iter().all(|&(p, v)| kronecker(&(-&q), &BigInt::from(p)) == v) {
            continue;
        }
        let p = random_prime_near(cfg.q_size, &mut rng);
        if p == q {
            continue;
        }
        return Some((p, q));
    }
    None
}

fn fixed_symbol(cfg: &ExperimentConfig, s: u64, p: u64) -> Option<i8> {
    // (-4qs/p) = (-q/p)(s/p)
    let s_part = kronecker_i64(s as i64, p as i64);
    if s_part == 0 {
        return Some(0);
    }
    cfg.fixed_symbols.iter().find(|(q, _)| *q == p).map(|&(_, v)| v * s_part)
}

/// Runs one full attempt (stage 1, then stage 2 when enabled) per sample and
/// multiplier and tabulates success rates.
pub fn run_multiplier_experiment(cfg: &ExperimentConfig) -> Result<ExperimentTable> {
    let draws: Vec<Option<(BigInt, BigInt)>> = (0..cfg.samples).map(|i| draw_sample(cfg, i)).collect();
    let incomplete = draws.iter().any(Option::is_none);
    let samples: Vec<(BigInt, BigInt)> = draws.into_iter().flatten().collect();
    let cells: Vec<(usize, usize)> = (0..samples.len())
        .flat_map(|i| (0..cfg.multipliers.len()).map(move |j| (i, j)))
        .collect();
    let outcomes: Vec<Result<bool>> = cells
        .par_iter()
        .map(|&(i, j)| {
            let (p, q) = &samples[i];
            let n = p * p * q;
            let s = cfg.multipliers[j];
            let params = build_params(q, &ParamOverrides::default())?;
            let r = resolve_r(&n, Some(RMode::PrimeScaledSixthRoot))?;
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[0xce11, i as u64, s]));
            let report = attempt_multiplier(&n, s, &params, &r, cfg.stage2, 2, &mut rng)?;
            Ok(report.outcome.is_success())
        })
        .collect();
    let mut rows: Vec<ExperimentRow> = cfg
        .multipliers
        .iter()
        .map(|&s| ExperimentRow {
            s,
            successes: 0,
            samples: samples.len(),
            symbols: [fixed_symbol(cfg, s, 3), fixed_symbol(cfg, s, 5), fixed_symbol(cfg, s, 7)],
        })
        .collect();
    for (&(_, j), ok) in cells.iter().zip(outcomes) {
        if ok? {
            rows[j].successes += 1;
        }
    }
    Ok(ExperimentTable { rows, incomplete })
}
