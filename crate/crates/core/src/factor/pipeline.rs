use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::completion::completion_inner;
use super::params::{build_params, squaring_cap, ParamOverrides, StageParams};
use super::stage1::{
    extract_ambiguous_factor, pow_cost, squaring_loop_counted, stage1_power_counted, try_read_square, ReadOff,
    SquaringOutcome,
};
use super::stage2::stage2_counted;
use super::{check_decomposition, derive_seed, digest, resolve_r, DecompositionResult, RChoice, RMode, RunStats, Stage};
use crate::arith::{coprime_base, exact_sqrt, is_probable_prime, perfect_power};
use crate::error::{Error, Result};
use crate::forms::{random_prime_form_avoiding, Discriminant, QuadForm, PRIME_FORM_SEARCH_CAP};
use crate::lift::{lift_to, phi};
use crate::multipliers::MultiplierStrategy;

/// Everything that steers [`sqfree_decompose`].
#[derive(Debug, Clone)]
pub struct DecomposeOptions {
    pub seed: u64,
    /// Worker threads for the multiplier sweep.
    pub threads: usize,
    /// Upper bound guess for the square-free part; `None` runs the doubling
    /// schedule.
    pub b2_bound: Option<BigInt>,
    pub overrides: ParamOverrides,
    /// `None` picks [`RMode::auto`].
    pub r_mode: Option<RMode>,
    pub strategy: MultiplierStrategy,
    pub stage2: bool,
    pub max_multipliers: Option<u64>,
    pub max_time: Option<Duration>,
    /// New random forms drawn per multiplier when a form is useless
    /// (trivial power, trivial ambiguous form, failed lift).
    pub identity_retries: u32,
    /// Multipliers per doubling level are `factor * L_b2[1/2, 1/2]`.
    pub level_budget_factor: f64,
    /// First `b2` of the doubling schedule.
    pub initial_b2: u64,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        DecomposeOptions {
            seed: 0,
            threads: 1,
            b2_bound: None,
            overrides: ParamOverrides::default(),
            r_mode: None,
            strategy: MultiplierStrategy::default(),
            stage2: true,
            max_multipliers: None,
            max_time: None,
            identity_retries: 2,
            level_budget_factor: 2.0,
            initial_b2: 64,
        }
    }
}

/// What one multiplier produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AttemptOutcome {
    /// A reduced form of order two split `n`.
    Ambiguous { divisor: BigInt, witness: QuadForm },
    /// The lifted form (or one of its stage-2 powers) revealed a divisor.
    Readoff { readoff: ReadOff, stage2: bool, witness: QuadForm },
    /// `s` or `r` already shares a factor with `n`.
    Shortcut { divisor: BigInt },
    Failed,
}

impl AttemptOutcome {
    pub fn is_success(&self) -> bool {
        !matches!(self, AttemptOutcome::Failed)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttemptReport {
    pub outcome: AttemptOutcome,
    pub forms_tried: u64,
    pub compositions: u64,
}

enum FormResult {
    Done(AttemptOutcome),
    /// The form carried no information; draw another.
    Retry,
}

fn nontrivial_gcd(x: &BigInt, n: &BigInt) -> Option<BigInt> {
    let d = x.gcd(n);
    (d > BigInt::one() && &d < n).then_some(d)
}

/// One pass of stage 1, lift, readoff and optionally stage 2 in `C(-4ns)`,
/// drawing up to `1 + retries` random prime forms.
pub fn attempt_multiplier<R: Rng + ?Sized>(
    n: &BigInt,
    s: u64,
    params: &StageParams,
    rchoice: &RChoice,
    stage2: bool,
    retries: u32,
    rng: &mut R,
) -> Result<AttemptReport> {
    let sb = BigInt::from(s);
    if let Some(d) = nontrivial_gcd(&(&sb * &rchoice.r), n) {
        return Ok(AttemptReport { outcome: AttemptOutcome::Shortcut { divisor: d }, forms_tried: 0, compositions: 0 });
    }
    let d = Discriminant::from_minus_four(&(n * &sb))?;
    let mut ops = 0;
    let mut forms = 0;
    for _ in 0..=retries {
        let f = random_prime_form_avoiding(&d, &rchoice.r, PRIME_FORM_SEARCH_CAP, rng)?;
        forms += 1;
        if let FormResult::Done(outcome) = run_form(n, s, &f, params, rchoice, stage2, &mut ops)? {
            return Ok(AttemptReport { outcome, forms_tried: forms, compositions: ops });
        }
    }
    Ok(AttemptReport { outcome: AttemptOutcome::Failed, forms_tried: forms, compositions: ops })
}

/// [`attempt_multiplier`] with a caller-supplied starting form `f` in
/// `C(-4ns)`. A useless form reports failure.
pub fn attempt_with_form(
    n: &BigInt,
    s: u64,
    f: &QuadForm,
    params: &StageParams,
    rchoice: &RChoice,
    stage2: bool,
) -> Result<AttemptReport> {
    let expected = Discriminant::from_minus_four(&(n * s))?;
    if f.discriminant() != expected {
        return Err(Error::Domain(format!("{f} is not in C({expected})")));
    }
    let mut ops = 0;
    let outcome = match run_form(n, s, f, params, rchoice, stage2, &mut ops)? {
        FormResult::Done(o) => o,
        FormResult::Retry => AttemptOutcome::Failed,
    };
    Ok(AttemptReport { outcome, forms_tried: 1, compositions: ops })
}

fn run_form(
    n: &BigInt,
    s: u64,
    f: &QuadForm,
    params: &StageParams,
    rchoice: &RChoice,
    stage2: bool,
    ops: &mut u64,
) -> Result<FormResult> {
    let ns = n * s;
    let g = stage1_power_counted(f, params, ops);
    if g.is_identity() {
        return Ok(FormResult::Retry);
    }
    let form = match squaring_loop_counted(&g, squaring_cap(&ns), ops) {
        SquaringOutcome::ReachedIdentity { predecessor, .. } => {
            return Ok(match extract_ambiguous_factor(&predecessor, n)? {
                Some(divisor) => FormResult::Done(AttemptOutcome::Ambiguous { divisor, witness: predecessor }),
                None => FormResult::Retry,
            });
        }
        SquaringOutcome::Exhausted { form } => form,
    };
    let h = match lift_to(&form, &rchoice.plan()?) {
        Ok(h) => h,
        Err(Error::LiftFailed(_)) => return Ok(FormResult::Retry),
        Err(e) => return Err(e),
    };
    let d = Discriminant::from_minus_four(&ns)?;
    let k = phi(&d, &rchoice.factors)?;
    *ops += pow_cost(&k);
    let l = h.pow(&k);
    if let Some(readoff) = try_read_square(&l, n) {
        return Ok(FormResult::Done(AttemptOutcome::Readoff { readoff, stage2: false, witness: l }));
    }
    if stage2 {
        if let Some(hit) = stage2_counted(&l, n, params, ops) {
            return Ok(FormResult::Done(AttemptOutcome::Readoff {
                readoff: hit.readoff,
                stage2: true,
                witness: hit.form,
            }));
        }
    }
    Ok(FormResult::Done(AttemptOutcome::Failed))
}

/// Shared bookkeeping for one top-level call.
pub(crate) struct Ctx<'a> {
    pub opts: &'a DecomposeOptions,
    pub start: Instant,
    pub stats: RunStats,
}

impl<'a> Ctx<'a> {
    pub fn new(opts: &'a DecomposeOptions) -> Result<Self> {
        if opts.threads == 0 {
            return Err(Error::Domain("threads must be positive".into()));
        }
        Ok(Ctx { opts, start: Instant::now(), stats: RunStats::default() })
    }

    fn exhausted(&self) -> Error {
        let mut stats = self.stats.clone();
        stats.elapsed = self.start.elapsed();
        Error::BudgetExhausted(stats)
    }

    pub fn check_time(&self) -> Result<()> {
        match self.opts.max_time {
            Some(t) if self.start.elapsed() >= t => Err(self.exhausted()),
            _ => Ok(()),
        }
    }

    /// Multipliers still allowed by the global budget.
    pub fn remaining(&self) -> Result<u64> {
        match self.opts.max_multipliers {
            Some(m) if self.stats.groups_tried >= m => Err(self.exhausted()),
            Some(m) => Ok(m - self.stats.groups_tried),
            None => Ok(u64::MAX),
        }
    }

    pub fn attempt_rng(&self, n: &BigInt, tag: u64, index: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(derive_seed(self.opts.seed, &[digest(n), tag, index]))
    }
}

/// A divisor or square found by the search, before recursion.
pub(crate) enum FoundKind {
    Split(BigInt),
    Square(BigInt),
}

pub(crate) struct Found {
    pub kind: FoundKind,
    pub stage: Stage,
    pub s: u64,
    pub witness: Option<QuadForm>,
    pub params: StageParams,
}

/// Decomposition of a sub-problem, before statistics are attached.
pub(crate) struct Partial {
    pub a: BigInt,
    pub b: BigInt,
    pub stage: Stage,
    pub s: u64,
    pub witness: Option<QuadForm>,
    pub b_factors: Option<Vec<BigInt>>,
}

impl Partial {
    fn precheck(a: BigInt, b: BigInt, b_factors: Vec<BigInt>) -> Self {
        Partial { a, b, stage: Stage::Precheck, s: 1, witness: None, b_factors: Some(b_factors) }
    }
}

/// Finds `n = a^2 b` with `b` square-free.
///
/// Runs stage 1 over a stream of multipliers `s`, lifting each surviving
/// form to `C(-4nsr^2)` and reading `gcd(a_l, n)`; stage 2 extends the
/// search past the stage-1 bound. Without a `b2_bound` the bound doubles
/// from `initial_b2`, with a per-level multiplier budget, until it passes
/// `n`. Divisors that are not squares split `n`, and the parts are
/// decomposed recursively.
pub fn sqfree_decompose(n: &BigInt, opts: &DecomposeOptions) -> Result<DecompositionResult> {
    if *n < BigInt::one() {
        return Err(Error::Domain(format!("n = {n} is not positive")));
    }
    if n.is_even() {
        return Err(Error::Domain("n must be odd; factor out 2 first".into()));
    }
    let mut ctx = Ctx::new(opts)?;
    let part = decompose_inner(n, &mut ctx)?;
    check_decomposition(n, &part.a, &part.b)?;
    let mut stats = ctx.stats.clone();
    stats.elapsed = ctx.start.elapsed();
    Ok(DecompositionResult {
        n: n.clone(),
        a: part.a,
        b: part.b,
        multiplier_s: part.s,
        stage: part.stage,
        stats,
        witness: part.witness,
        extra_factors: part.b_factors,
    })
}

pub(crate) fn decompose_inner(n: &BigInt, ctx: &mut Ctx) -> Result<Partial> {
    if n.is_one() {
        return Ok(Partial::precheck(BigInt::one(), BigInt::one(), vec![]));
    }
    if is_probable_prime(n) {
        return Ok(Partial::precheck(BigInt::one(), n.clone(), vec![n.clone()]));
    }
    if let Some((root, k)) = perfect_power(n) {
        let inner = decompose_inner(&root, ctx)?;
        return Ok(raise(inner, k));
    }
    let found = search(n, ctx)?;
    match found.kind {
        FoundKind::Split(d) => {
            let other = n / &d;
            let mut out = combine_parts(&[d, other], ctx)?;
            out.stage = found.stage;
            out.s = found.s;
            out.witness = found.witness;
            Ok(out)
        }
        FoundKind::Square(d) => {
            let a2 = exact_sqrt(&d).ok_or_else(|| Error::Inconsistency(format!("{d} is not a square")))?;
            let mut out = completion_inner(n, &a2, found.s, &found.params, ctx)?;
            if out.stage != Stage::CompositeCompletion {
                out.stage = found.stage;
            }
            out.s = found.s;
            out.witness = found.witness;
            Ok(out)
        }
    }
}

/// Decomposition of `c^k` from that of `c`.
fn raise(inner: Partial, k: u32) -> Partial {
    let a = num_traits::pow(inner.a.clone(), k as usize) * num_traits::pow(inner.b.clone(), (k / 2) as usize);
    let (b, b_factors) = if k % 2 == 1 { (inner.b, inner.b_factors) } else { (BigInt::one(), Some(vec![])) };
    Partial { a, b, b_factors, ..inner }
}

/// Decomposes a product by refining its parts into a coprime base.
fn combine_parts(parts: &[BigInt], ctx: &mut Ctx) -> Result<Partial> {
    let mut a = BigInt::one();
    let mut b = BigInt::one();
    let mut b_factors = Some(Vec::new());
    for (c, e) in coprime_base(parts) {
        let part = raise(decompose_inner(&c, ctx)?, e);
        a *= part.a;
        b *= part.b;
        match (&mut b_factors, part.b_factors) {
            (Some(acc), Some(more)) => acc.extend(more),
            _ => b_factors = None,
        }
    }
    if let Some(fs) = &mut b_factors {
        fs.sort();
    }
    Ok(Partial { a, b, stage: Stage::Precheck, s: 1, witness: None, b_factors })
}

fn level_budget(b2: &BigInt, factor: f64) -> u64 {
    let ln = b2.bits() as f64 * std::f64::consts::LN_2;
    let l = (0.5 * (ln * ln.ln()).sqrt()).exp();
    (factor * l).ceil().max(1.0) as u64
}

fn search(n: &BigInt, ctx: &mut Ctx) -> Result<Found> {
    let opts = ctx.opts;
    let rchoice = resolve_r(n, opts.r_mode)?;
    if let Some(d) = nontrivial_gcd(&rchoice.r, n) {
        let params = build_params(&BigInt::from(opts.initial_b2.max(16)), &opts.overrides)?;
        return Ok(Found { kind: FoundKind::Split(d), stage: Stage::GcdShortcut, s: 1, witness: None, params });
    }
    if let Some(b2) = &opts.b2_bound {
        let params = build_params(b2, &opts.overrides)?;
        return match run_level(n, &rchoice, &params, 0, None, ctx)? {
            Some(found) => Ok(found),
            None => Err(ctx.exhausted()),
        };
    }
    let mut b2 = BigInt::from(opts.initial_b2.max(16));
    for level in 0u64.. {
        let params = build_params(&b2, &opts.overrides)?;
        let budget = if &b2 >= n { None } else { Some(level_budget(&b2, opts.level_budget_factor)) };
        if let Some(found) = run_level(n, &rchoice, &params, level, budget, ctx)? {
            return Ok(found);
        }
        b2 <<= 1;
    }
    unreachable!()
}

fn to_found(outcome: AttemptOutcome, s: u64, params: &StageParams) -> Found {
    let params = params.clone();
    match outcome {
        AttemptOutcome::Ambiguous { divisor, witness } => {
            Found { kind: FoundKind::Split(divisor), stage: Stage::Stage1Ambiguous, s, witness: Some(witness), params }
        }
        AttemptOutcome::Readoff { readoff, stage2, witness } => {
            let stage = if stage2 { Stage::Stage2Readoff } else { Stage::Stage1Readoff };
            let kind = match readoff {
                ReadOff::Square(d) => FoundKind::Square(d),
                ReadOff::Divisor(d) => FoundKind::Split(d),
            };
            Found { kind, stage, s, witness: Some(witness), params }
        }
        AttemptOutcome::Shortcut { divisor } => {
            Found { kind: FoundKind::Split(divisor), stage: Stage::GcdShortcut, s, witness: None, params }
        }
        AttemptOutcome::Failed => unreachable!("failed attempts are not successes"),
    }
}

/// Runs multipliers from the configured stream at fixed bounds until one
/// succeeds, the level budget runs out (`Ok(None)`) or the global budget
/// does (`Err`).
fn run_level(
    n: &BigInt,
    rchoice: &RChoice,
    params: &StageParams,
    level: u64,
    budget: Option<u64>,
    ctx: &mut Ctx,
) -> Result<Option<Found>> {
    let opts = ctx.opts;
    let mut stream = opts.strategy.stream(n);
    let mut index = 0u64;
    loop {
        let level_left = budget.map_or(u64::MAX, |b| b.saturating_sub(index));
        if level_left == 0 {
            return Ok(None);
        }
        ctx.check_time()?;
        let global_left = ctx.remaining()?;
        let width = if opts.threads == 1 { 1 } else { 4 * opts.threads as u64 };
        let width = width.min(level_left).min(global_left);
        let batch: Vec<(u64, u64)> = (0..width).map(|i| (index + i, stream.next().unwrap())).collect();
        let reports = run_batch(n, &batch, params, rchoice, level, ctx)?;
        for ((_, s), report) in batch.iter().zip(reports) {
            ctx.stats.groups_tried += 1;
            ctx.stats.forms_tried += report.forms_tried;
            ctx.stats.compositions += report.compositions;
            if report.outcome.is_success() {
                return Ok(Some(to_found(report.outcome, *s, params)));
            }
        }
        index += width;
    }
}

/// Runs a batch of `(index, s)` attempts and returns the reports of the
/// prefix ending at the first success. With several threads, work past the
/// earliest known success is skipped, so the outcome does not depend on the
/// thread count.
fn run_batch(
    n: &BigInt,
    batch: &[(u64, u64)],
    params: &StageParams,
    rchoice: &RChoice,
    level: u64,
    ctx: &Ctx,
) -> Result<Vec<AttemptReport>> {
    let opts = ctx.opts;
    let one = |&(index, s): &(u64, u64)| -> Result<AttemptReport> {
        let mut rng = ctx.attempt_rng(n, level, index);
        attempt_multiplier(n, s, params, rchoice, opts.stage2, opts.identity_retries, &mut rng)
    };
    if opts.threads == 1 || batch.len() == 1 {
        let mut out = Vec::new();
        for item in batch {
            let report = one(item)?;
            let done = report.outcome.is_success();
            out.push(report);
            if done {
                break;
            }
        }
        return Ok(out);
    }
    let next = AtomicUsize::new(0);
    let best = AtomicUsize::new(usize::MAX);
    let slots: Mutex<Vec<Option<Result<AttemptReport>>>> = Mutex::new((0..batch.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..opts.threads.min(batch.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= batch.len() || i > best.load(Ordering::SeqCst) {
                    break;
                }
                let result = one(&batch[i]);
                let stop = match &result {
                    Ok(r) => r.outcome.is_success(),
                    Err(_) => true,
                };
                if stop {
                    best.fetch_min(i, Ordering::SeqCst);
                }
                slots.lock().unwrap()[i] = Some(result);
            });
        }
    });
    let slots = slots.into_inner().unwrap();
    let end = best.load(Ordering::SeqCst).min(batch.len() - 1);
    let mut out = Vec::with_capacity(end + 1);
    for slot in slots.into_iter().take(end + 1) {
        let report = slot.ok_or_else(|| Error::Inconsistency("batch slot left empty".into()))??;
        out.push(report);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::trial_factor;

    #[test]
    fn level_budgets_grow() {
        let at = |b2: u64| level_budget(&BigInt::from(b2), 2.0);
        assert!(at(64) >= 2);
        assert!(at(1 << 20) > at(64));
    }

    #[test]
    fn decomposes_worked_example() {
        let n = BigInt::from(37559);
        let r = sqfree_decompose(&n, &DecomposeOptions { seed: 1, ..Default::default() }).unwrap();
        assert_eq!((r.a, r.b), (BigInt::from(23), BigInt::from(71)));
    }

    #[test]
    fn small_instances() {
        for (n, a, b) in [(1775u64, 5u64, 71u64), (15, 1, 15), (49, 7, 1), (7, 1, 7), (1, 1, 1), (225 * 7, 15, 7)] {
            let opts = DecomposeOptions { seed: 3, ..Default::default() };
            let r = sqfree_decompose(&BigInt::from(n), &opts).unwrap();
            assert_eq!((r.a.clone(), r.b.clone()), (BigInt::from(a), BigInt::from(b)), "n = {n}");
            let fs = trial_factor(&r.b).unwrap();
            assert!(fs.windows(2).all(|w| w[0] != w[1]));
        }
        assert!(sqfree_decompose(&BigInt::from(12), &DecomposeOptions::default()).is_err());
    }

    #[test]
    fn fixed_bound_run() {
        let n = BigInt::from(25 * 71);
        let opts = DecomposeOptions { b2_bound: Some(BigInt::from(128)), seed: 5, ..Default::default() };
        let r = sqfree_decompose(&n, &opts).unwrap();
        assert_eq!((r.a, r.b), (BigInt::from(5), BigInt::from(71)));
    }

    #[test]
    fn thread_count_does_not_change_the_answer() {
        let n = BigInt::from(10007u64) * BigInt::from(10007u64) * BigInt::from(10009u64);
        let run = |threads| {
            let opts = DecomposeOptions { seed: 11, threads, ..Default::default() };
            let r = sqfree_decompose(&n, &opts).unwrap();
            (r.a, r.b, r.multiplier_s, r.stage, r.stats.groups_tried, r.stats.forms_tried)
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let n = BigInt::from(1000003u64) * BigInt::from(1000003u64) * BigInt::from(1000033u64);
        let opts = DecomposeOptions { max_multipliers: Some(1), initial_b2: 16, ..Default::default() };
        match sqfree_decompose(&n, &opts) {
            Err(Error::BudgetExhausted(stats)) => assert_eq!(stats.groups_tried, 1),
            Ok(r) => assert_eq!(r.stats.groups_tried, 1),
            Err(e) => panic!("unexpected error {e}"),
        }
    }
}
