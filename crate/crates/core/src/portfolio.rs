//! Expected-return maximization over the simplex under a bounded-dominance
//! constraint against a benchmark.
//!
//! The constraint `LPM_{n,c}(portfolio) <= LPM_{n,c}(benchmark)` for every `c`
//! in `[a, b]` is convex in the weights, so the solver combines an exact
//! violation oracle with a cutting-plane exchange over a finite threshold set.

use serde::{Deserialize, Serialize};

use crate::dist::{DiscreteDistribution, Interval, ScenarioTable};
use crate::error::{Error, Result};
use crate::polyseg::{self, MAX_EXPONENT};

pub const DEFAULT_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_MAX_ITERATIONS: usize = 50;

const PHASE1_STEPS: usize = 4000;
const INNER_ROUNDS: usize = 8;
const INNER_STEPS: usize = 400;
const RADIUS_SHRINK: f64 = 0.3;
const MAX_DOUBLINGS: usize = 24;
const BISECTION_STEPS: usize = 60;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintDirection {
    /// `LPM(portfolio) <= LPM(benchmark)`: the portfolio carries less downside risk.
    #[default]
    PortfolioAtMostBenchmark,
    /// `LPM(portfolio) >= LPM(benchmark)`; its feasible set is not convex.
    PortfolioAtLeastBenchmark,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PortfolioProblem {
    pub table: ScenarioTable,
    pub benchmark: DiscreteDistribution,
    pub exponent: u32,
    pub interval: Interval,
    pub direction: ConstraintDirection,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioSolution {
    pub weights: Vec<f64>,
    pub expected_return: f64,
    /// Thresholds where the dominance constraint is tight at the solution.
    pub active_thresholds: Vec<f64>,
    pub iterations: usize,
    pub max_violation: f64,
    pub worst_c: f64,
    /// False when the iteration limit stopped the exchange loop; the weights
    /// are then the best feasible point found.
    pub converged: bool,
}

impl PortfolioProblem {
    pub fn new(
        table: ScenarioTable,
        benchmark: DiscreteDistribution,
        exponent: u32,
        interval: Interval,
        tolerance: f64,
    ) -> Result<Self> {
        let problem = Self {
            benchmark: benchmark.with_interval(interval)?,
            table,
            exponent,
            interval,
            direction: ConstraintDirection::default(),
            tolerance,
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn validate(&self) -> Result<()> {
        if self.exponent == 0 {
            return Err(Error::BadOrder { n: 0, min: 1 });
        }
        if self.exponent > MAX_EXPONENT {
            return Err(Error::DegreeCapExceeded { n: self.exponent, cap: MAX_EXPONENT });
        }
        if self.tolerance.is_nan() || self.tolerance.is_infinite() {
            return Err(Error::NumericalFailure(format!("tolerance {} is not finite", self.tolerance)));
        }
        if self.tolerance < 0.0 {
            return Err(Error::PreconditionViolated(format!("tolerance {} is negative", self.tolerance)));
        }
        if !self.benchmark.interval().same_as(&self.interval) {
            return Err(Error::IntervalMismatch("benchmark interval differs from the problem interval".into()));
        }
        self.benchmark.validate()?;
        let (lo, hi) = self.table.return_range();
        let (a, b) = (self.interval.a(), self.interval.b());
        // portfolio returns are convex combinations, so the extreme asset returns bound them
        for value in [lo, hi] {
            if !self.interval.contains(value) {
                return Err(Error::OutOfInterval { value, a, b });
            }
        }
        Ok(())
    }

    pub fn expected_return(&self, weights: &[f64]) -> f64 {
        self.table.expected_returns().iter().zip(weights).map(|(m, w)| m * w).sum()
    }
}

/// Portfolio distribution with roundoff-level excursions past `[a, b]` clamped.
fn portfolio_dist(problem: &PortfolioProblem, weights: &[f64]) -> Result<DiscreteDistribution> {
    crate::dist::check_simplex(weights, problem.table.n_assets())?;
    let iv = problem.interval;
    let slack = 1e-12 * iv.width().max(iv.a().abs()).max(iv.b().abs());
    let returns = problem
        .table
        .portfolio_returns(weights)
        .into_iter()
        .map(|r| {
            if r < iv.a() - slack || r > iv.b() + slack {
                Err(Error::OutOfInterval { value: r, a: iv.a(), b: iv.b() })
            } else {
                Ok(iv.clamp(r))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    DiscreteDistribution::new(&returns, problem.table.scenario_probs(), iv, false)
}

/// Largest value of `LPM_{n,c}(portfolio) - LPM_{n,c}(benchmark)` over `c` in
/// `[a, b]` and the threshold attaining it.
pub fn constraint_violation(problem: &PortfolioProblem, weights: &[f64]) -> Result<(f64, f64)> {
    problem.validate()?;
    violation(problem, weights)
}

fn violation(problem: &PortfolioProblem, weights: &[f64]) -> Result<(f64, f64)> {
    let p = portfolio_dist(problem, weights)?;
    let n = problem.exponent;
    let diff = polyseg::lpm_curve_on(&p, n, problem.interval)?
        .subtract(&polyseg::lpm_curve_on(&problem.benchmark, n, problem.interval)?)?;
    let e = diff.extrema();
    if !e.max.is_finite() {
        return Err(Error::NumericalFailure("non-finite LPM difference".into()));
    }
    Ok((e.max, e.argmax))
}

/// Euclidean projection onto the probability simplex (sorted-threshold method).
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|x, y| y.total_cmp(x));
    let mut cumulative = 0.0;
    let mut shift = 0.0;
    for (j, &s) in sorted.iter().enumerate() {
        cumulative += s;
        let candidate = (cumulative - 1.0) / (j + 1) as f64;
        if s - candidate > 0.0 {
            shift = candidate;
        }
    }
    let mut w: Vec<f64> = v.iter().map(|&x| (x - shift).max(0.0)).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w
}

/// The finite constraint family `g_c(w) = LPM_c(portfolio) - LPM_c(benchmark)`.
struct Cuts<'a> {
    problem: &'a PortfolioProblem,
    thresholds: Vec<f64>,
    benchmark_lpm: Vec<f64>,
}

impl<'a> Cuts<'a> {
    fn new(problem: &'a PortfolioProblem, mut thresholds: Vec<f64>) -> Self {
        thresholds.sort_by(f64::total_cmp);
        thresholds.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * problem.interval.width());
        let benchmark_lpm = thresholds.iter().map(|&c| problem.benchmark.lpm(problem.exponent, c)).collect();
        Self { problem, thresholds, benchmark_lpm }
    }

    fn add(&mut self, c: f64) {
        let mut t = std::mem::take(&mut self.thresholds);
        t.push(c);
        *self = Cuts::new(self.problem, t);
    }

    /// Largest cut value at `w` and a subgradient of that cut.
    fn worst(&self, w: &[f64]) -> (f64, Vec<f64>) {
        let table = &self.problem.table;
        let n = self.problem.exponent as i32;
        let returns = table.portfolio_returns(w);
        let mut best = (f64::NEG_INFINITY, 0);
        for (j, (&c, &y)) in self.thresholds.iter().zip(&self.benchmark_lpm).enumerate() {
            let lpm: f64 = returns
                .iter()
                .zip(table.scenario_probs())
                .filter(|(&r, _)| r < c)
                .map(|(&r, &p)| p * (c - r).powi(n))
                .sum();
            if lpm - y > best.0 {
                best = (lpm - y, j);
            }
        }
        let c = self.thresholds[best.1];
        let mut grad = vec![0.0; w.len()];
        for (s, (&r, &p)) in returns.iter().zip(table.scenario_probs()).enumerate() {
            if r < c {
                let factor = -p * n as f64 * (c - r).powi(n - 1);
                for (g, row) in grad.iter_mut().zip(table.returns()) {
                    *g += factor * row[s];
                }
            }
        }
        (best.0, grad)
    }
}

fn tangent_direction(g: &[f64]) -> Option<Vec<f64>> {
    let mean = g.iter().sum::<f64>() / g.len() as f64;
    let d: Vec<f64> = g.iter().map(|x| x - mean).collect();
    let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt();
    (norm > 0.0 && norm.is_finite()).then(|| d.into_iter().map(|x| x / norm).collect())
}

fn step(w: &[f64], d: &[f64], length: f64) -> Vec<f64> {
    project_to_simplex(&w.iter().zip(d).map(|(x, g)| x - length * g).collect::<Vec<_>>())
}

/// Minimizes the exact violation to find a feasible starting point.
fn feasible_anchor(problem: &PortfolioProblem, mu: &[f64]) -> Result<Vec<f64>> {
    let k = mu.len();
    let mut candidates: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    candidates.push(vec![1.0 / k as f64; k]);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for w in candidates {
        let (v, _) = violation(problem, &w)?;
        if v <= problem.tolerance {
            let better = best.as_ref().is_none_or(|(bv, bw)| *bv > problem.tolerance || dot(mu, &w) > dot(mu, bw));
            if better {
                best = Some((v, w));
            }
        } else if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
            best = Some((v, w));
        }
    }
    let (mut best_v, mut best_w) = best.expect("at least one candidate");
    if best_v <= problem.tolerance {
        return Ok(best_w);
    }
    let mut w = best_w.clone();
    for _ in 0..PHASE1_STEPS {
        let (v, c) = violation(problem, &w)?;
        if v < best_v {
            best_v = v;
            best_w = w.clone();
        }
        if v <= problem.tolerance {
            return Ok(w);
        }
        let cut = Cuts::new(problem, vec![c]);
        let (_, g) = cut.worst(&w);
        let Some(d) = tangent_direction(&g) else { break };
        let slope: f64 = g.iter().zip(&d).map(|(x, y)| x * y).sum();
        if slope <= 0.0 {
            break;
        }
        // Polyak step toward the known target value zero
        w = step(&w, &d, v / slope);
    }
    Err(Error::Infeasible(format!(
        "smallest dominance violation found is {best_v:e} at weights {best_w:?}"
    )))
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Projected subgradient on `-mu.w + penalty * max(0, max_c g_c(w))` with
/// restarts from the best iterate at shrinking radii.
fn penalized_ascent(cuts: &Cuts, mu: &[f64], start: &[f64], penalty: f64) -> (Vec<f64>, f64) {
    let objective = |w: &[f64]| {
        let (v, g) = cuts.worst(w);
        let value = -dot(mu, w) + penalty * v.max(0.0);
        let grad: Vec<f64> = if v > 0.0 {
            mu.iter().zip(&g).map(|(m, gi)| -m + penalty * gi).collect()
        } else {
            mu.iter().map(|m| -m).collect()
        };
        (value, grad, v)
    };
    let (mut best_value, _, mut best_violation) = objective(start);
    let mut best = start.to_vec();
    let mut radius = std::f64::consts::SQRT_2;
    for _ in 0..INNER_ROUNDS {
        let mut w = best.clone();
        for t in 1..=INNER_STEPS {
            let (_, grad, _) = objective(&w);
            let Some(d) = tangent_direction(&grad) else { break };
            w = step(&w, &d, radius / (t as f64).sqrt());
            let (value, _, v) = objective(&w);
            if value < best_value {
                best_value = value;
                best_violation = v;
                best = w.clone();
            }
        }
        radius *= RADIUS_SHRINK;
    }
    (best, best_violation)
}

/// Furthest point on the segment from `anchor` toward `target` whose exact
/// violation stays within tolerance.
fn pull_back(problem: &PortfolioProblem, anchor: &[f64], target: &[f64]) -> Result<Vec<f64>> {
    let at = |t: f64| -> Vec<f64> { anchor.iter().zip(target).map(|(a, b)| a + t * (b - a)).collect() };
    if violation(problem, target)?.0 <= problem.tolerance {
        return Ok(target.to_vec());
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if violation(problem, &at(mid))?.0 <= problem.tolerance {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(at(lo))
}

fn finish(problem: &PortfolioProblem, weights: Vec<f64>, iterations: usize, converged: bool) -> Result<PortfolioSolution> {
    let (max_violation, worst_c) = violation(problem, &weights)?;
    let n = problem.exponent;
    let p = portfolio_dist(problem, &weights)?;
    let scale = problem.interval.width().powi(n as i32);
    let tight = 1e-7 * scale + problem.tolerance;
    let mut candidates: Vec<f64> = problem.benchmark.atoms().to_vec();
    candidates.extend([problem.interval.b(), worst_c]);
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    let active_thresholds = candidates
        .into_iter()
        .filter(|&c| {
            let y = problem.benchmark.lpm(n, c);
            y > 0.0 && (p.lpm(n, c) - y).abs() <= tight
        })
        .collect();
    Ok(PortfolioSolution {
        expected_return: problem.expected_return(&weights),
        weights,
        active_thresholds,
        iterations,
        max_violation,
        worst_c,
        converged,
    })
}

/// Maximizes expected return subject to `LPM_{n,c}(portfolio) <= LPM_{n,c}(benchmark)`
/// for all `c` in `[a, b]`.
///
/// The returned weights always pass [`constraint_violation`] within the
/// problem tolerance. When `max_iterations` exchange steps do not settle the
/// threshold set, the best feasible point found is returned with
/// `converged = false`.
pub fn solve(problem: &PortfolioProblem, max_iterations: usize) -> Result<PortfolioSolution> {
    problem.validate()?;
    if problem.direction == ConstraintDirection::PortfolioAtLeastBenchmark {
        return Err(Error::UnsupportedDirection);
    }
    let mu = problem.table.expected_returns();
    let anchor = feasible_anchor(problem, &mu)?;
    if mu.len() == 1 {
        return finish(problem, anchor, 0, true);
    }

    let mut initial: Vec<f64> = problem.benchmark.atoms().to_vec();
    initial.extend([problem.interval.a(), problem.interval.b()]);
    let mut cuts = Cuts::new(problem, initial);
    let mu_spread = mu.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - mu.iter().cloned().fold(f64::INFINITY, f64::min);
    let cut_scale = problem.interval.width().powi(problem.exponent as i32).max(f64::MIN_POSITIVE);
    let inner_tolerance = problem.tolerance.max(1e-9 * cut_scale);

    let mut incumbent = anchor.clone();
    let mut penalty = (mu_spread / cut_scale).max(1e-3);
    let mut start = anchor.clone();
    for iteration in 1..=max_iterations {
        let mut relaxed = penalized_ascent(&cuts, &mu, &start, penalty);
        let mut doublings = 0;
        while relaxed.1 > inner_tolerance && doublings < MAX_DOUBLINGS {
            penalty *= 2.0;
            doublings += 1;
            relaxed = penalized_ascent(&cuts, &mu, &relaxed.0, penalty);
        }
        let candidate = relaxed.0;
        let (v, c) = violation(problem, &candidate)?;
        let feasible = pull_back(problem, &anchor, &candidate)?;
        if dot(&mu, &feasible) >= dot(&mu, &incumbent) {
            incumbent = feasible;
        }
        if v <= problem.tolerance {
            return finish(problem, incumbent, iteration, true);
        }
        let before = cuts.thresholds.len();
        cuts.add(c);
        if cuts.thresholds.len() == before {
            // the worst threshold is already a cut; only the inner accuracy limits progress
            return finish(problem, incumbent, iteration, true);
        }
        start = candidate;
    }
    finish(problem, incumbent, max_iterations, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::theta_lottery;

    fn unit() -> Interval {
        Interval::unit()
    }

    fn problem(returns: Vec<Vec<f64>>, probs: Vec<f64>, benchmark: DiscreteDistribution, n: u32) -> PortfolioProblem {
        let table = ScenarioTable::new(returns, probs, None).unwrap();
        PortfolioProblem::new(table, benchmark, n, unit(), DEFAULT_TOLERANCE).unwrap()
    }

    #[test]
    fn projection() {
        let w = project_to_simplex(&[0.5, 0.5]);
        assert_eq!(w, vec![0.5, 0.5]);
        let w = project_to_simplex(&[2.0, 0.0, -1.0]);
        assert_eq!(w, vec![1.0, 0.0, 0.0]);
        let w = project_to_simplex(&[0.4, 0.3, 0.1]);
        for (x, y) in w.iter().zip([0.4 + 0.2 / 3.0, 0.3 + 0.2 / 3.0, 0.1 + 0.2 / 3.0]) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn single_asset() {
        let d = DiscreteDistribution::new(&[0.2, 0.6], &[0.5, 0.5], unit(), false).unwrap();
        let p = problem(vec![vec![0.2, 0.6]], vec![0.5, 0.5], d, 2);
        let s = solve(&p, 10).unwrap();
        assert_eq!(s.weights, vec![1.0]);
        assert!((s.expected_return - 0.4).abs() < 1e-15);

        let safe = DiscreteDistribution::point_mass(0.0, unit()).unwrap();
        let p = problem(vec![vec![0.2, 0.6]], vec![0.5, 0.5], safe, 2);
        assert!(solve(&p, 10).unwrap().max_violation <= 0.0);

        let tight = DiscreteDistribution::point_mass(0.5, unit()).unwrap();
        let p = problem(vec![vec![0.2, 0.6]], vec![0.5, 0.5], tight, 2);
        assert!(matches!(solve(&p, 10), Err(Error::Infeasible(_))));
    }

    #[test]
    fn dominated_second_asset() {
        let r1 = vec![0.3, 0.5, 0.9];
        let r2 = vec![0.1, 0.5, 0.6];
        let bench = DiscreteDistribution::new(&r2, &[0.3, 0.3, 0.4], unit(), false).unwrap();
        let p = problem(vec![r1, r2], vec![0.3, 0.3, 0.4], bench, 2);
        let s = solve(&p, 20).unwrap();
        assert!((s.weights[0] - 1.0).abs() < 1e-12, "{:?}", s.weights);
        assert!((s.expected_return - p.table.expected_returns()[0]).abs() < 1e-12);
        assert!(s.max_violation <= p.tolerance);
    }

    #[test]
    fn unreachable_benchmark() {
        let bench = DiscreteDistribution::point_mass(0.95, unit()).unwrap();
        let p = problem(vec![vec![0.1, 0.8], vec![0.4, 0.5]], vec![0.5, 0.5], bench, 1);
        assert!(matches!(solve(&p, 20), Err(Error::Infeasible(_))));
    }

    #[test]
    fn literal_direction_rejected() {
        let bench = DiscreteDistribution::point_mass(0.0, unit()).unwrap();
        let mut p = problem(vec![vec![0.1, 0.8]], vec![0.5, 0.5], bench, 1);
        p.direction = ConstraintDirection::PortfolioAtLeastBenchmark;
        assert_eq!(solve(&p, 20), Err(Error::UnsupportedDirection));
    }

    #[test]
    fn violation_examples() {
        let (f, g) = theta_lottery(0.5, 2, unit()).unwrap();
        // portfolio pays G, benchmark F
        let p = problem(vec![vec![0.0, 1.0]], vec![0.25, 0.75], f.clone(), 2);
        let (v, c) = constraint_violation(&p, &[1.0]).unwrap();
        assert!((v - 1.0 / 12.0).abs() < 1e-12);
        assert!((c - 2.0 / 3.0).abs() < 1e-9);

        // portfolio pays F, benchmark G
        let p = problem(vec![vec![0.5]], vec![1.0], g.clone(), 2);
        let (v, _) = constraint_violation(&p, &[1.0]).unwrap();
        assert!(v.abs() < 1e-15);

        let p = problem(vec![vec![0.0, 1.0]], vec![0.25, 0.75], g, 2);
        assert_eq!(constraint_violation(&p, &[1.0]).unwrap().0, 0.0);
    }

    #[test]
    fn returns_outside_interval_rejected() {
        let table = ScenarioTable::new(vec![vec![0.0, 1.5]], vec![0.5, 0.5], None).unwrap();
        let bench = DiscreteDistribution::point_mass(0.5, unit()).unwrap();
        assert!(matches!(
            PortfolioProblem::new(table, bench, 1, unit(), 1e-9),
            Err(Error::OutOfInterval { .. })
        ));
    }
}
