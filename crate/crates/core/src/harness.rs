//! Randomized verification of the dominance characterization, the class
//! equalities, the root-convexity equivalence and the Jensen-type chain.
//!
//! Every trial draws from its own generator seeded by `(seed, stream, index)`,
//! so serial and parallel runs produce identical records.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{theta_lottery, DiscreteDistribution, Interval};
use crate::dominance::{check_bsd, expected_utility_gap, DominanceVerdict};
use crate::error::{Error, Result};
use crate::generator::{build_kink_approximant, check_root_convexity, check_jensen_chain, from_node_values};
use crate::utility::{self, check_ap, check_g, check_lp, check_u, Descriptor, UtilitySpec};

/// Cells of the base grid for randomly sampled integrated utilities.
pub const SAMPLE_CELLS: usize = 32;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic per-trial seed.
pub fn sub_seed(seed: u64, stream: u64, index: u64) -> u64 {
    splitmix(splitmix(splitmix(seed) ^ stream) ^ index)
}

/// Runs `f(0..count)` serially (`Some(0)`), on a dedicated pool (`Some(k)`),
/// or on the global pool (`None`); results keep index order.
pub fn run_indexed<T, F>(count: usize, threads: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match threads {
        Some(0) => Ok((0..count).map(f).collect()),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::NumericalFailure(format!("thread pool: {e}")))?;
            Ok(pool.install(|| (0..count).into_par_iter().map(&f).collect()))
        }
        None => Ok((0..count).into_par_iter().map(f).collect()),
    }
}

/// A nonnegative base: a constant, up to five smooth bumps and an optional
/// shifted cosine.
#[derive(Debug, Clone)]
pub struct RandomBase {
    constant: f64,
    bumps: Vec<(f64, f64, f64)>,
    wave: Option<(f64, f64, f64)>,
}

impl RandomBase {
    pub fn sample(rng: &mut impl Rng, interval: Interval) -> Self {
        let (a, w) = (interval.a(), interval.width());
        let constant = if rng.gen_bool(0.5) { rng.gen_range(0.0..1.0) } else { 0.0 };
        let count = rng.gen_range(1..=5);
        let bumps = (0..count)
            .map(|_| {
                let amp = rng.gen_range(0.1..2.0);
                let centre = a + rng.gen_range(-0.1..1.1) * w;
                let spread = rng.gen_range(0.05..0.5) * w;
                (amp, centre, spread)
            })
            .collect();
        let wave = rng
            .gen_bool(0.3)
            .then(|| (rng.gen_range(0.1..1.0), rng.gen_range(1.0..12.0) / w, rng.gen_range(0.0..6.3)));
        Self { constant, bumps, wave }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut v = self.constant;
        for &(amp, centre, spread) in &self.bumps {
            let t = (x - centre) / spread;
            if t.abs() < 1.0 {
                v += amp * (1.0 - t * t).powi(2);
            }
        }
        if let Some((amp, freq, phase)) = self.wave {
            v += amp * (1.0 + (freq * x + phase).cos());
        }
        v.max(0.0)
    }
}

/// A random member of `G(n)` built by backward integration.
pub fn random_generator_utility(rng: &mut impl Rng, n: u32, interval: Interval) -> Result<UtilitySpec> {
    random_integrated(rng, n, interval, false)
}

/// A random member of `U(n)`; with `lower_boundary` some of `u^(k)(b)`,
/// `k < n`, are nonzero so the utility leaves `G(n)`.
pub fn random_integrated(rng: &mut impl Rng, n: u32, interval: Interval, lower_boundary: bool) -> Result<UtilitySpec> {
    let base = RandomBase::sample(rng, interval);
    let nodes = interval.grid(SAMPLE_CELLS + 1);
    let w: Vec<f64> = nodes.iter().map(|&x| base.eval(x)).collect();
    let mut boundary = vec![0.0; n as usize];
    if rng.gen_bool(0.7) {
        boundary[n as usize - 1] = rng.gen_range(0.0..2.0);
    }
    if lower_boundary && n >= 2 {
        let first = rng.gen_range(1..n as usize);
        for (k, s) in boundary.iter_mut().enumerate().take(n as usize - 1) {
            if k + 1 == first || rng.gen_bool(0.3) {
                *s = rng.gen_range(0.1..1.0) / interval.width().powi(k as i32);
            }
        }
    }
    let value_at_b = if lower_boundary { rng.gen_range(-1.0..1.0) } else { 0.0 };
    from_node_values(n, interval, w, boundary, value_at_b, None)
}

/// Random distribution with `1..=max_atoms` atoms, some snapped to the endpoints.
pub fn random_distribution(rng: &mut impl Rng, interval: Interval, max_atoms: usize) -> Result<DiscreteDistribution> {
    let k = rng.gen_range(1..=max_atoms.max(1));
    let (a, b) = (interval.a(), interval.b());
    let atoms: Vec<f64> = (0..k)
        .map(|_| match rng.gen_range(0..10) {
            0 => a,
            1 => b,
            _ => rng.gen_range(a..=b),
        })
        .collect();
    let probs: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
    DiscreteDistribution::new(&atoms, &probs, interval, true)
}

fn random_interval(rng: &mut impl Rng) -> Interval {
    let a = rng.gen_range(-1.0..1.0);
    let w = rng.gen_range(0.5..2.0);
    Interval::new(a, a + w).expect("positive width")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKind {
    Independent,
    /// `F` obtained from `G` by downward shifts and a spread, so `F` dominates.
    Derived,
    ThetaLottery,
    Equal,
}

fn derived_pair(
    rng: &mut impl Rng,
    interval: Interval,
    budget: usize,
) -> Result<(DiscreteDistribution, DiscreteDistribution)> {
    let g = random_distribution(rng, interval, budget.saturating_sub(1).max(1))?;
    let (a, b, w) = (interval.a(), interval.b(), interval.width());
    let mut atoms: Vec<f64> = g
        .atoms()
        .iter()
        .map(|&x| if rng.gen_bool(0.6) { (x - rng.gen_range(0.0..0.3) * w).max(a) } else { x })
        .collect();
    let mut probs = g.probs().to_vec();
    if atoms.len() < budget && rng.gen_bool(0.7) {
        let i = rng.gen_range(0..atoms.len());
        let room = (atoms[i] - a).min(b - atoms[i]);
        if room > 0.0 {
            let d = rng.gen_range(0.0..room);
            let p = probs[i] / 2.0;
            probs[i] = p;
            atoms.push((atoms[i] + d).min(b));
            probs.push(p);
            atoms[i] = (atoms[i] - d).max(a);
        }
    }
    let f = DiscreteDistribution::new(&atoms, &probs, interval, true)?;
    Ok((f, g))
}

/// Draws an `(F, G)` pair for one trial.
pub fn random_pair(
    rng: &mut impl Rng,
    n: u32,
    budget: usize,
) -> Result<(PairKind, Interval, DiscreteDistribution, DiscreteDistribution)> {
    let interval = random_interval(rng);
    let roll = rng.gen_range(0..10);
    let (kind, f, g) = match roll {
        0..=3 => {
            let f = random_distribution(rng, interval, budget)?;
            let g = random_distribution(rng, interval, budget)?;
            (PairKind::Independent, f, g)
        }
        4..=7 => {
            let (f, g) = derived_pair(rng, interval, budget)?;
            (PairKind::Derived, f, g)
        }
        8 => {
            let theta = rng.gen_range(0.05..0.95);
            let (f, g) = theta_lottery(theta, n, interval)?;
            (PairKind::ThetaLottery, f, g)
        }
        _ => {
            let f = random_distribution(rng, interval, budget)?;
            (PairKind::Equal, f.clone(), f)
        }
    };
    Ok((kind, interval, f, g))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnessConfig {
    /// Trials per order.
    pub trials: usize,
    pub n_set: Vec<u32>,
    pub atom_budget: usize,
    pub seed: u64,
    pub utilities: usize,
    pub tolerance: Option<f64>,
    #[serde(skip)]
    pub threads: Option<usize>,
    /// Use `G = F` in every trial.
    #[serde(default)]
    pub force_equal: bool,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            trials: 500,
            n_set: vec![1, 2, 3],
            atom_budget: 8,
            seed: 42,
            utilities: 200,
            tolerance: None,
            threads: None,
            force_equal: false,
        }
    }
}

/// One line of the harness report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub n: u32,
    pub interval: Interval,
    pub pair_kind: PairKind,
    #[serde(rename = "bsd_FG")]
    pub bsd_fg: bool,
    #[serde(rename = "bsd_GF")]
    pub bsd_gf: bool,
    pub margin_fg: Option<f64>,
    pub margin_gf: Option<f64>,
    pub utilities_tested: usize,
    pub min_gap: Option<f64>,
    pub refuted_by_approximant: Option<bool>,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnessReport {
    pub trials: usize,
    pub forward_violations: usize,
    pub converse_failures: usize,
    pub numerical_failures: usize,
    pub records: Vec<TrialRecord>,
}

impl HarnessReport {
    pub fn counterexamples(&self) -> usize {
        self.forward_violations + self.converse_failures
    }

    pub fn write_jsonl(&self, mut out: impl std::io::Write) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Utilities tested against a holding direction: named members of `G(n)` plus
/// random integrated ones.
pub fn generator_battery(rng: &mut impl Rng, n: u32, interval: Interval, total: usize) -> Result<Vec<UtilitySpec>> {
    let b = interval.b();
    let mut named = Vec::new();
    for m in n..n + 3 {
        named.push(UtilitySpec::closed_form(Descriptor::NegPower { n: m, b }, interval)?);
    }
    named.push(UtilitySpec::combination(
        vec![
            (rng.gen_range(0.1..2.0), UtilitySpec::closed_form(Descriptor::NegPower { n, b }, interval)?),
            (rng.gen_range(0.1..2.0), UtilitySpec::closed_form(Descriptor::NegPower { n: n + 1, b }, interval)?),
        ],
        rng.gen_range(-1.0..1.0),
    )?);
    if interval.a() > 0.0 {
        let gamma = rng.gen_range(0.3..3.0);
        named.push(UtilitySpec::closed_form(Descriptor::PowerCrraVariant { gamma, b }, interval)?);
    }
    let mut out = Vec::with_capacity(total);
    for u in named {
        if out.len() < total && check_g(&u, n, utility::DEFAULT_GRID, utility::DEFAULT_TOLERANCE)?.member {
            out.push(u);
        }
    }
    while out.len() < total {
        out.push(random_generator_utility(rng, n, interval)?);
    }
    Ok(out)
}

/// Searches for a smoothing width at which the approximant built at the
/// witness makes `X` strictly worse than `Y`. Returns the best gap seen.
pub fn refute_with_approximant(
    x: &DiscreteDistribution,
    y: &DiscreteDistribution,
    n: u32,
    interval: Interval,
    verdict: &DominanceVerdict,
) -> Result<(bool, f64)> {
    let c = verdict.witness_c.ok_or_else(|| Error::NumericalFailure("failed verdict without witness".into()))?;
    let margin = verdict.min_margin;
    let w = interval.width();
    let mut width = 0.1 * w;
    let mut best = f64::INFINITY;
    while width >= 1e-5 * w {
        let u = build_kink_approximant(c, n, interval, width, None)?;
        let gap = expected_utility_gap(x, y, &u)?;
        best = best.min(gap);
        if gap < 0.0 && gap <= 0.5 * margin {
            return Ok((true, best));
        }
        width /= 2.0;
    }
    Ok((false, best))
}

fn run_trial(config: &HarnessConfig, n: u32, index: usize) -> TrialRecord {
    let seed = sub_seed(config.seed, n as u64, index as u64);
    let mut record = TrialRecord {
        trial: index,
        seed,
        n,
        interval: Interval::unit(),
        pair_kind: PairKind::Equal,
        bsd_fg: false,
        bsd_gf: false,
        margin_fg: None,
        margin_gf: None,
        utilities_tested: 0,
        min_gap: None,
        refuted_by_approximant: None,
        ok: false,
        error: None,
    };
    match trial_body(config, n, seed, &mut record) {
        Ok(ok) => record.ok = ok,
        Err(e) => record.error = Some(e.to_string()),
    }
    record
}

fn trial_body(config: &HarnessConfig, n: u32, seed: u64, record: &mut TrialRecord) -> Result<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (kind, interval, f, g) = if config.force_equal {
        let interval = random_interval(&mut rng);
        let f = random_distribution(&mut rng, interval, config.atom_budget)?;
        (PairKind::Equal, interval, f.clone(), f)
    } else {
        random_pair(&mut rng, n, config.atom_budget)?
    };
    record.interval = interval;
    record.pair_kind = kind;

    let fg = check_bsd(&f, &g, n, interval, config.tolerance)?;
    let gf = check_bsd(&g, &f, n, interval, config.tolerance)?;
    record.bsd_fg = fg.holds;
    record.bsd_gf = gf.holds;
    record.margin_fg = Some(fg.min_margin);
    record.margin_gf = Some(gf.min_margin);

    let utilities = generator_battery(&mut rng, n, interval, config.utilities)?;
    let mut ok = true;
    let mut min_gap: Option<f64> = None;
    let mut refuted: Option<bool> = None;
    for (x, y, v) in [(&f, &g, &fg), (&g, &f, &gf)] {
        if v.holds {
            for u in &utilities {
                let gap = expected_utility_gap(x, y, u)?;
                let scale = expected_abs(x, u)? + expected_abs(y, u)?;
                if gap < -1e-9 * (1.0 + scale) {
                    ok = false;
                }
                min_gap = Some(min_gap.map_or(gap, |m: f64| m.min(gap)));
            }
            record.utilities_tested += utilities.len();
        } else {
            let (done, _) = refute_with_approximant(x, y, n, interval, v)?;
            refuted = Some(refuted.unwrap_or(true) && done);
            ok &= done;
        }
    }
    record.min_gap = min_gap;
    record.refuted_by_approximant = refuted;
    Ok(ok)
}

/// `E |u|`, used only to scale comparison tolerances.
fn expected_abs(d: &DiscreteDistribution, u: &UtilitySpec) -> Result<f64> {
    d.iter().try_fold(0.0, |acc, (x, p)| Ok(acc + p * u.value(x)?.abs()))
}

pub fn run_characterization_harness(config: &HarnessConfig) -> Result<HarnessReport> {
    if config.trials == 0 {
        return Err(Error::PreconditionViolated("trials must be at least 1".into()));
    }
    let jobs: Vec<(u32, usize)> = config
        .n_set
        .iter()
        .flat_map(|&n| (0..config.trials).map(move |i| (n, i)))
        .collect();
    if let Some(&n) = config.n_set.iter().find(|&&n| n == 0 || n > crate::polyseg::MAX_EXPONENT) {
        return Err(Error::BadOrder { n, min: 1 });
    }
    let records = run_indexed(jobs.len(), config.threads, |j| {
        let (n, i) = jobs[j];
        run_trial(config, n, i)
    })?;
    let forward_violations = records
        .iter()
        .filter(|r| r.error.is_none() && !r.ok && r.refuted_by_approximant != Some(false))
        .count();
    let converse_failures = records
        .iter()
        .filter(|r| r.error.is_none() && r.refuted_by_approximant == Some(false))
        .count();
    let numerical_failures = records.iter().filter(|r| r.error.is_some()).count();
    Ok(HarnessReport { trials: records.len(), forward_violations, converse_failures, numerical_failures, records })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub samples: usize,
    pub n_set: Vec<u32>,
    pub seed: u64,
    pub grid: usize,
    pub tolerance: f64,
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            samples: 2000,
            n_set: vec![2, 3, 4],
            seed: 42,
            grid: utility::DEFAULT_GRID,
            tolerance: utility::DEFAULT_TOLERANCE,
            threads: None,
        }
    }
}

/// A random member of `U(n)`: integrated constructions inside and outside
/// `G(n)` and closed-form families.
pub fn random_u_member(rng: &mut impl Rng, n: u32) -> Result<(String, UtilitySpec)> {
    let roll = rng.gen_range(0..10);
    if roll < 4 {
        let iv = random_interval(rng);
        return Ok(("integrated_g".into(), random_integrated(rng, n, iv, false)?));
    }
    if roll < 7 {
        let iv = random_interval(rng);
        return Ok(("integrated_u".into(), random_integrated(rng, n, iv, true)?));
    }
    let a = rng.gen_range(0.1..0.5);
    let iv = Interval::new(a, a + rng.gen_range(0.5..1.5))?;
    let b = iv.b();
    Ok(match rng.gen_range(0..3) {
        0 => {
            let gamma = rng.gen_range(0.3..3.0);
            ("power_crra_variant".into(), UtilitySpec::closed_form(Descriptor::PowerCrraVariant { gamma, b }, iv)?)
        }
        1 => {
            let m = rng.gen_range(1..=n + 2);
            ("neg_power".into(), UtilitySpec::closed_form(Descriptor::NegPower { n: m, b }, iv)?)
        }
        _ => {
            let m1 = rng.gen_range(1..=n + 1);
            let m2 = rng.gen_range(n..=n + 2);
            let slope = if rng.gen_bool(0.5) { rng.gen_range(0.0..1.0) } else { 0.0 };
            let u = UtilitySpec::combination(
                vec![
                    (rng.gen_range(0.1..2.0), UtilitySpec::closed_form(Descriptor::NegPower { n: m1, b }, iv)?),
                    (rng.gen_range(0.1..2.0), UtilitySpec::closed_form(Descriptor::NegPower { n: m2, b }, iv)?),
                    (slope, UtilitySpec::closed_form(Descriptor::Affine { alpha: 0.0, beta: 1.0 }, iv)?),
                ],
                rng.gen_range(-1.0..1.0),
            )?;
            ("combination".into(), u)
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetEqualityRecord {
    pub index: usize,
    pub n: u32,
    pub source: String,
    pub in_g: bool,
    pub in_ap: bool,
    pub in_lp: bool,
    pub excluded: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetEqualityReport {
    pub sampled: usize,
    pub rejected_outside_u: usize,
    pub excluded: usize,
    pub excluded_fraction: f64,
    pub g_ap_disagreements: usize,
    pub ap_lp_disagreements: usize,
    pub lp_diagnostics: usize,
    pub members_of_g: usize,
    /// Disagreeing samples only.
    pub disagreements: Vec<SetEqualityRecord>,
}

fn classify(config: &SweepConfig, index: usize) -> Result<Option<SetEqualityRecord>> {
    let n = config.n_set[index % config.n_set.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(config.seed, 1000 + n as u64, index as u64));
    let (source, u) = random_u_member(&mut rng, n)?;
    let (grid, tol) = (config.grid, config.tolerance);
    if !check_u(&u, n, grid, tol)?.member {
        return Ok(None);
    }
    let g = check_g(&u, n, grid, tol)?;
    let ap = check_ap(&u, n, grid, tol)?;
    let lp = check_lp(&u, n, grid, tol)?;
    let excluded = [&g, &ap, &lp].iter().any(|r| r.near_boundary(10.0));
    Ok(Some(SetEqualityRecord {
        index,
        n,
        source,
        in_g: g.member,
        in_ap: ap.member,
        in_lp: lp.member,
        excluded,
        diagnostic: lp.diagnostic,
    }))
}

/// Membership agreement `G = U ∩ AP` and `U ∩ AP = U ∩ LP` over random members of `U`.
pub fn run_set_equality_sweep(config: &SweepConfig) -> Result<SetEqualityReport> {
    if config.n_set.is_empty() {
        return Err(Error::PreconditionViolated("empty order set".into()));
    }
    let mut kept = Vec::new();
    let mut rejected = 0;
    let mut start = 0;
    while kept.len() < config.samples {
        let batch = (config.samples - kept.len()).max(16);
        let results = run_indexed(batch, config.threads, |j| classify(config, start + j))?;
        for r in results {
            match r? {
                Some(rec) if kept.len() < config.samples => kept.push(rec),
                Some(_) => {}
                None => rejected += 1,
            }
        }
        start += batch;
        if start > 20 * config.samples.max(1) {
            return Err(Error::NumericalFailure("sampler rarely produces members of U".into()));
        }
    }
    let excluded = kept.iter().filter(|r| r.excluded).count();
    let counted: Vec<&SetEqualityRecord> = kept.iter().filter(|r| !r.excluded).collect();
    let g_ap = counted.iter().filter(|r| r.in_g != r.in_ap).count();
    let ap_lp = counted.iter().filter(|r| r.in_ap != r.in_lp).count();
    Ok(SetEqualityReport {
        sampled: kept.len(),
        rejected_outside_u: rejected,
        excluded,
        excluded_fraction: excluded as f64 / kept.len().max(1) as f64,
        g_ap_disagreements: g_ap,
        ap_lp_disagreements: ap_lp,
        lp_diagnostics: kept.iter().filter(|r| r.diagnostic.is_some()).count(),
        members_of_g: counted.iter().filter(|r| r.in_g).count(),
        disagreements: counted
            .into_iter()
            .filter(|r| r.in_g != r.in_ap || r.in_ap != r.in_lp)
            .cloned()
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsequenceReport {
    pub convexity_checked: usize,
    pub convexity_disagreements: usize,
    pub chain_checked: usize,
    pub chain_violations: usize,
    /// Instances where the middle bound beats the plain Jensen bound by more than 0.01.
    pub strictly_tighter: usize,
    pub worst_chain_excess: f64,
}

struct ConsequenceTrial {
    convexity_agree: Option<bool>,
    chain: Option<(f64, f64, f64)>,
}

fn consequence_trial(config: &SweepConfig, index: usize) -> Result<ConsequenceTrial> {
    let n = config.n_set[index % config.n_set.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(config.seed, 2000 + n as u64, index as u64));
    let (_, u) = random_u_member(&mut rng, n)?;
    let agree = match check_root_convexity(&u, n, config.grid) {
        Ok(r) => Some(r.agree),
        Err(Error::PreconditionViolated(_)) => None,
        Err(e) => return Err(e),
    };
    // the chain needs a member of U and LP: use a generator utility
    let iv = random_interval(&mut rng);
    let f = if rng.gen_bool(0.7) {
        random_generator_utility(&mut rng, n, iv)?
    } else {
        UtilitySpec::closed_form(Descriptor::NegPower { n: rng.gen_range(n..=n + 2), b: iv.b() }, iv)?
    };
    let x = random_distribution(&mut rng, iv, 8)?;
    let chain = match check_jensen_chain(&f, n, &x) {
        Ok(c) => Some(c),
        Err(Error::PreconditionViolated(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(ConsequenceTrial { convexity_agree: agree, chain })
}

/// Root-convexity agreement and the Jensen-type chain over `config.samples` random instances.
pub fn run_consequence_sweep(config: &SweepConfig) -> Result<ConsequenceReport> {
    if config.n_set.is_empty() {
        return Err(Error::PreconditionViolated("empty order set".into()));
    }
    let trials = run_indexed(config.samples, config.threads, |j| consequence_trial(config, j))?;
    let mut report = ConsequenceReport {
        convexity_checked: 0,
        convexity_disagreements: 0,
        chain_checked: 0,
        chain_violations: 0,
        strictly_tighter: 0,
        worst_chain_excess: f64::NEG_INFINITY,
    };
    for t in trials {
        let t = t?;
        if let Some(agree) = t.convexity_agree {
            report.convexity_checked += 1;
            if !agree {
                report.convexity_disagreements += 1;
            }
        }
        if let Some((lhs, mid, rhs)) = t.chain {
            report.chain_checked += 1;
            let excess = (lhs - mid).max(mid - rhs);
            report.worst_chain_excess = report.worst_chain_excess.max(excess);
            if excess > 1e-9 {
                report.chain_violations += 1;
            }
            if mid < rhs - 0.01 {
                report.strictly_tighter += 1;
            }
        }
    }
    Ok(report)
}
