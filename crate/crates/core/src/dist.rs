//! Finitely supported distributions on a bounded interval and scenario tables.
//!
//! Every distribution lives on an [`Interval`] `[a, b]`; atoms are kept sorted
//! and unique, probabilities strictly positive and summing to one.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative distance (in units of `b - a`) below which two atoms are merged.
pub const MERGE_TOLERANCE: f64 = 1e-12;

/// Absolute tolerance on the probability total before renormalization is required.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// A closed bounded interval `[a, b]` with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInterval")]
pub struct Interval {
    a: f64,
    b: f64,
}

#[derive(Deserialize)]
struct RawInterval {
    a: f64,
    b: f64,
}

impl TryFrom<RawInterval> for Interval {
    type Error = Error;

    fn try_from(raw: RawInterval) -> Result<Self> {
        Interval::new(raw.a, raw.b)
    }
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidInterval { a, b });
        }
        Ok(Self { a, b })
    }

    pub fn unit() -> Self {
        Self { a: 0.0, b: 1.0 }
    }

    #[inline]
    pub fn a(&self) -> f64 {
        self.a
    }

    #[inline]
    pub fn b(&self) -> f64 {
        self.b
    }

    #[inline]
    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    /// Closed-interval membership with a slack of `MERGE_TOLERANCE * width`.
    pub fn contains(&self, x: f64) -> bool {
        let slack = MERGE_TOLERANCE * self.width();
        x >= self.a - slack && x <= self.b + slack
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.a, self.b)
    }

    /// `size` equally spaced points including both endpoints.
    pub fn grid(&self, size: usize) -> Vec<f64> {
        assert!(size >= 2, "grid needs at least two points");
        let h = self.width() / (size - 1) as f64;
        (0..size)
            .map(|i| {
                if i == size - 1 {
                    self.b
                } else {
                    self.a + h * i as f64
                }
            })
            .collect()
    }

    pub fn same_as(&self, other: &Interval) -> bool {
        let slack = MERGE_TOLERANCE * self.width().max(other.width());
        (self.a - other.a).abs() <= slack && (self.b - other.b).abs() <= slack
    }
}

/// A probability distribution with finitely many atoms in `[a, b]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteDistribution {
    atoms: Vec<f64>,
    probs: Vec<f64>,
    interval: Interval,
}

impl DiscreteDistribution {
    /// Builds a distribution, merging duplicate atoms and dropping zero weights.
    ///
    /// With `normalize` set the weights are rescaled to sum to one; otherwise
    /// their total must already be within [`WEIGHT_SUM_TOLERANCE`] of one.
    pub fn new(atoms: &[f64], probs: &[f64], interval: Interval, normalize: bool) -> Result<Self> {
        if atoms.len() != probs.len() {
            return Err(Error::LengthMismatch(format!(
                "{} atoms but {} probabilities",
                atoms.len(),
                probs.len()
            )));
        }
        if atoms.is_empty() {
            return Err(Error::EmptySupport);
        }
        let mut pairs = Vec::with_capacity(atoms.len());
        for (&x, &p) in atoms.iter().zip(probs) {
            if !x.is_finite() {
                return Err(Error::Parse(format!("non-finite atom {x}")));
            }
            if !p.is_finite() || p < 0.0 {
                return Err(Error::BadWeights(format!("probability {p} is negative or non-finite")));
            }
            if !interval.contains(x) {
                return Err(Error::OutOfInterval { value: x, a: interval.a(), b: interval.b() });
            }
            if p > 0.0 {
                pairs.push((interval.clamp(x), p));
            }
        }
        if pairs.is_empty() {
            return Err(Error::EmptySupport);
        }
        pairs.sort_by(|l, r| l.0.total_cmp(&r.0));

        let merge_gap = MERGE_TOLERANCE * interval.width();
        let mut merged_atoms: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut merged_probs: Vec<f64> = Vec::with_capacity(pairs.len());
        for (x, p) in pairs {
            match merged_atoms.last() {
                Some(&last) if x - last <= merge_gap => {
                    *merged_probs.last_mut().unwrap() += p;
                }
                _ => {
                    merged_atoms.push(x);
                    merged_probs.push(p);
                }
            }
        }

        let total: f64 = merged_probs.iter().sum();
        if !normalize && (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::BadWeights(format!("probabilities sum to {total}, not 1")));
        }
        merged_probs.iter_mut().for_each(|p| *p /= total);

        Ok(Self { atoms: merged_atoms, probs: merged_probs, interval })
    }

    pub fn point_mass(x: f64, interval: Interval) -> Result<Self> {
        Self::new(&[x], &[1.0], interval, false)
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.atoms.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(x, p)| x * p).sum()
    }

    /// `E f(X)`.
    pub fn expect(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.iter().map(|(x, p)| p * f(x)).sum()
    }

    /// Lower partial moment `sum_{x_i < c} p_i (c - x_i)^n`, for any real `c`.
    ///
    /// For `n = 0` this is `P(X < c)`.
    pub fn lpm(&self, n: u32, c: f64) -> f64 {
        self.iter()
            .take_while(|&(x, _)| x < c)
            .fold(0.0, |acc, (x, p)| acc + p * (c - x).powi(n as i32))
    }

    /// Same distribution re-homed on a wider (or equal) interval.
    pub fn with_interval(&self, interval: Interval) -> Result<Self> {
        Self::new(&self.atoms, &self.probs, interval, false)
    }

    /// Re-checks every type invariant; used by property tests.
    pub fn validate(&self) -> Result<()> {
        let total: f64 = self.probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::BadWeights(format!("total {total}")));
        }
        if self.probs.iter().any(|&p| p <= 0.0) {
            return Err(Error::BadWeights("non-positive probability".into()));
        }
        if self.atoms.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Parse("atoms not strictly increasing".into()));
        }
        if let Some(&x) = self.atoms.iter().find(|&&x| x < self.interval.a() || x > self.interval.b()) {
            return Err(Error::OutOfInterval { value: x, a: self.interval.a(), b: self.interval.b() });
        }
        Ok(())
    }
}

/// The two-point lottery and its certainty counterpart.
///
/// Returns `(F, G)` where `G` pays `a` with probability `theta^n` and `b`
/// otherwise, and `F` is the point mass at `theta * a + (1 - theta) * b`.
pub fn theta_lottery(
    theta: f64,
    n: u32,
    interval: Interval,
) -> Result<(DiscreteDistribution, DiscreteDistribution)> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::PreconditionViolated(format!("theta = {theta} not in (0, 1)")));
    }
    let (a, b) = (interval.a(), interval.b());
    let low = theta.powi(n as i32);
    let g = DiscreteDistribution::new(&[a, b], &[low, 1.0 - low], interval, false)?;
    let f = DiscreteDistribution::point_mass(theta * a + (1.0 - theta) * b, interval)?;
    Ok((f, g))
}

/// Joint return scenarios for a set of assets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioTable {
    /// `returns[i][s]`: return of asset `i` in scenario `s`.
    returns: Vec<Vec<f64>>,
    scenario_probs: Vec<f64>,
    asset_names: Option<Vec<String>>,
}

impl ScenarioTable {
    pub fn new(
        returns: Vec<Vec<f64>>,
        scenario_probs: Vec<f64>,
        asset_names: Option<Vec<String>>,
    ) -> Result<Self> {
        if returns.is_empty() {
            return Err(Error::LengthMismatch("no assets".into()));
        }
        let scenarios = scenario_probs.len();
        if scenarios == 0 {
            return Err(Error::EmptySupport);
        }
        if let Some(row) = returns.iter().find(|r| r.len() != scenarios) {
            return Err(Error::LengthMismatch(format!(
                "asset row has {} scenarios, expected {scenarios}",
                row.len()
            )));
        }
        if returns.iter().flatten().any(|r| !r.is_finite()) {
            return Err(Error::Parse("non-finite return".into()));
        }
        if scenario_probs.iter().any(|&p| !(p.is_finite() && p > 0.0)) {
            return Err(Error::BadWeights("scenario probabilities must be positive".into()));
        }
        let total: f64 = scenario_probs.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::BadWeights(format!("scenario probabilities sum to {total}")));
        }
        if let Some(names) = &asset_names {
            if names.len() != returns.len() {
                return Err(Error::LengthMismatch("asset name count".into()));
            }
        }
        let scenario_probs = scenario_probs.iter().map(|p| p / total).collect();
        Ok(Self { returns, scenario_probs, asset_names })
    }

    pub fn n_assets(&self) -> usize {
        self.returns.len()
    }

    pub fn n_scenarios(&self) -> usize {
        self.scenario_probs.len()
    }

    pub fn returns(&self) -> &[Vec<f64>] {
        &self.returns
    }

    pub fn scenario_probs(&self) -> &[f64] {
        &self.scenario_probs
    }

    pub fn asset_names(&self) -> Option<&[String]> {
        self.asset_names.as_deref()
    }

    pub fn expected_returns(&self) -> Vec<f64> {
        self.returns
            .iter()
            .map(|row| row.iter().zip(&self.scenario_probs).map(|(r, p)| r * p).sum())
            .collect()
    }

    /// Scenario-wise portfolio returns `sum_i w_i R_i(s)`.
    pub fn portfolio_returns(&self, weights: &[f64]) -> Vec<f64> {
        (0..self.n_scenarios())
            .map(|s| weights.iter().zip(&self.returns).map(|(w, row)| w * row[s]).sum())
            .collect()
    }

    /// Smallest and largest return over all assets and scenarios.
    pub fn return_range(&self) -> (f64, f64) {
        self.returns
            .iter()
            .flatten()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| (lo.min(r), hi.max(r)))
    }
}

/// Checks `weights` against the simplex `{w >= 0, sum w = 1}` within 1e-9.
pub fn check_simplex(weights: &[f64], n_assets: usize) -> Result<()> {
    if weights.len() != n_assets {
        return Err(Error::LengthMismatch(format!(
            "{} weights for {n_assets} assets",
            weights.len()
        )));
    }
    if weights.iter().any(|&w| !w.is_finite() || w < -1e-9) {
        return Err(Error::BadWeights("weights must be nonnegative".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::BadWeights(format!("weights sum to {total}")));
    }
    Ok(())
}

/// Distribution of the portfolio `sum_i w_i R_i` under the scenario probabilities.
pub fn portfolio_distribution(
    table: &ScenarioTable,
    weights: &[f64],
    interval: Interval,
) -> Result<DiscreteDistribution> {
    check_simplex(weights, table.n_assets())?;
    let returns = table.portfolio_returns(weights);
    DiscreteDistribution::new(&returns, table.scenario_probs(), interval, false)
}

#[derive(Debug, Deserialize, Serialize)]
struct AtomRecord {
    atom: f64,
    prob: f64,
}

/// Reads an `atom,prob` CSV (header required).
pub fn parse_distribution_csv<R: Read>(reader: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "atom" || &headers[1] != "prob" {
        return Err(Error::Parse(format!("expected header `atom,prob`, found {headers:?}")));
    }
    let mut atoms = Vec::new();
    let mut probs = Vec::new();
    for record in rdr.deserialize() {
        let rec: AtomRecord = record?;
        atoms.push(rec.atom);
        probs.push(rec.prob);
    }
    if atoms.is_empty() {
        return Err(Error::EmptySupport);
    }
    Ok((atoms, probs))
}

pub fn write_distribution_csv<W: std::io::Write>(dist: &DiscreteDistribution, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for (atom, prob) in dist.iter() {
        wtr.serialize(AtomRecord { atom, prob })?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a scenario CSV: first column `prob`, one further column per asset.
pub fn parse_scenario_csv<R: Read>(reader: R) -> Result<ScenarioTable> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() < 2 || &headers[0] != "prob" {
        return Err(Error::Parse("scenario header must be `prob,<asset>,...`".into()));
    }
    let names: Vec<String> = headers.iter().skip(1).map(str::to_owned).collect();
    let mut returns = vec![Vec::new(); names.len()];
    let mut probs = Vec::new();
    for record in rdr.records() {
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::Parse(format!("row has {} fields", record.len())));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|e| Error::Parse(format!("`{s}`: {e}")))
        };
        probs.push(parse(&record[0])?);
        for (i, field) in record.iter().skip(1).enumerate() {
            returns[i].push(parse(field)?);
        }
    }
    ScenarioTable::new(returns, probs, Some(names))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Interval {
        Interval::unit()
    }

    #[test]
    fn interval_rejects_bad_endpoints() {
        assert!(Interval::new(1.0, 1.0).is_err());
        assert!(Interval::new(2.0, 1.0).is_err());
        assert!(Interval::new(f64::NEG_INFINITY, 1.0).is_err());
        assert_eq!(unit().grid(3), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn lpm_below_support_is_positive_zero() {
        let d = DiscreteDistribution::new(&[0.0, 1.0], &[0.5, 0.5], unit(), false).unwrap();
        assert_eq!(d.lpm(2, 1.0), 0.5);
        let below = d.lpm(2, -1.0);
        assert!(below == 0.0 && below.is_sign_positive());
    }

    #[test]
    fn duplicate_atoms_merge() {
        let d = DiscreteDistribution::new(&[0.0, 1.0, 0.0], &[0.25, 0.5, 0.25], unit(), false).unwrap();
        assert_eq!(d.atoms(), &[0.0, 1.0]);
        assert_eq!(d.probs(), &[0.5, 0.5]);
    }

    #[test]
    fn point_mass_and_renormalization() {
        let d = DiscreteDistribution::new(&[0.5], &[1.0], unit(), false).unwrap();
        assert_eq!(d.atoms(), &[0.5]);
        let d = DiscreteDistribution::new(&[0.0, 1.0], &[0.3, 0.6], unit(), true).unwrap();
        assert!((d.probs()[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((d.probs()[1] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn constructor_errors() {
        assert_eq!(
            DiscreteDistribution::new(&[0.2, 0.4], &[0.0, 0.0], unit(), false),
            Err(Error::EmptySupport)
        );
        assert!(matches!(
            DiscreteDistribution::new(&[1.5], &[1.0], unit(), false),
            Err(Error::OutOfInterval { .. })
        ));
        assert!(matches!(
            DiscreteDistribution::new(&[0.0, 1.0], &[0.3, 0.6], unit(), false),
            Err(Error::BadWeights(_))
        ));
        assert!(matches!(
            DiscreteDistribution::new(&[0.0], &[-1.0], unit(), false),
            Err(Error::BadWeights(_))
        ));
    }

    #[test]
    fn zero_weight_atoms_are_dropped() {
        let d = DiscreteDistribution::new(&[0.1, 0.2, 0.3], &[0.5, 0.0, 0.5], unit(), false).unwrap();
        assert_eq!(d.atoms(), &[0.1, 0.3]);
    }

    #[test]
    fn theta_lottery_values() {
        let (f, g) = theta_lottery(0.5, 2, unit()).unwrap();
        assert_eq!(g.atoms(), &[0.0, 1.0]);
        assert_eq!(g.probs(), &[0.25, 0.75]);
        assert_eq!(f.atoms(), &[0.5]);

        let (f, g) = theta_lottery(0.5, 1, unit()).unwrap();
        assert_eq!(g.probs(), &[0.5, 0.5]);
        assert!((f.mean() - g.mean()).abs() < 1e-15);

        let (f, g) = theta_lottery(0.9, 3, Interval::new(0.0, 2.0).unwrap()).unwrap();
        assert!((g.probs()[0] - 0.729).abs() < 1e-12);
        assert!((g.probs()[1] - 0.271).abs() < 1e-12);
        assert!((f.atoms()[0] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn theta_lottery_mean_gap() {
        for n in 1..=4 {
            for &theta in &[0.1, 0.5, 0.9] {
                let iv = Interval::new(-1.0, 2.0).unwrap();
                let (f, g) = theta_lottery(theta, n, iv).unwrap();
                let expected = iv.width() * (theta - theta.powi(n as i32));
                assert!((g.mean() - f.mean() - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn portfolio_examples() {
        let table = ScenarioTable::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![0.5, 0.5], None).unwrap();
        let d = portfolio_distribution(&table, &[0.5, 0.5], unit()).unwrap();
        assert_eq!(d.atoms(), &[0.5]);
        assert_eq!(d.probs(), &[1.0]);

        let single = ScenarioTable::new(vec![vec![0.2, 0.7, 0.2]], vec![0.25, 0.5, 0.25], None).unwrap();
        let d = portfolio_distribution(&single, &[1.0], unit()).unwrap();
        assert_eq!(d.atoms(), &[0.2, 0.7]);
        assert_eq!(d.probs(), &[0.5, 0.5]);

        let twins = ScenarioTable::new(vec![vec![0.1, 0.9], vec![0.1, 0.9]], vec![0.3, 0.7], None).unwrap();
        let d = portfolio_distribution(&twins, &[0.37, 0.63], unit()).unwrap();
        assert_eq!(d.len(), 2);
        assert!((d.atoms()[0] - 0.1).abs() < 1e-15 && (d.atoms()[1] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn portfolio_out_of_interval() {
        let table = ScenarioTable::new(vec![vec![-0.5, 1.0]], vec![0.5, 0.5], None).unwrap();
        assert!(matches!(
            portfolio_distribution(&table, &[1.0], unit()),
            Err(Error::OutOfInterval { .. })
        ));
    }

    #[test]
    fn csv_round_trip() {
        let text = "atom,prob\n0.0,0.5\n1.0,0.5\n";
        let (atoms, probs) = parse_distribution_csv(text.as_bytes()).unwrap();
        let d = DiscreteDistribution::new(&atoms, &probs, unit(), false).unwrap();
        let mut out = Vec::new();
        write_distribution_csv(&d, &mut out).unwrap();
        let (atoms2, probs2) = parse_distribution_csv(out.as_slice()).unwrap();
        assert_eq!(atoms, atoms2);
        assert_eq!(probs, probs2);

        assert!(parse_distribution_csv("x,y\n1,1\n".as_bytes()).is_err());
        assert!(parse_distribution_csv("atom,prob\n1,abc\n".as_bytes()).is_err());
    }

    #[test]
    fn scenario_csv() {
        let text = "prob,stock,bond\n0.5,0.1,0.02\n0.5,-0.05,0.03\n";
        let t = parse_scenario_csv(text.as_bytes()).unwrap();
        assert_eq!(t.n_assets(), 2);
        assert_eq!(t.n_scenarios(), 2);
        assert_eq!(t.asset_names().unwrap(), &["stock".to_string(), "bond".to_string()]);
        assert_eq!(t.returns()[0], vec![0.1, -0.05]);
        let mu = t.expected_returns();
        assert!((mu[0] - 0.025).abs() < 1e-15);
    }
}
