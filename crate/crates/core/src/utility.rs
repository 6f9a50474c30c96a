//! Utility functions with exact derivatives and grid-based class membership.
//!
//! Four classes are decided on a uniform grid, each condition reporting its
//! worst normalized slack (negative means violated):
//!
//! * `U(n)`: `(-1)^k u^(k) <= 0` for `k = 1..=n+1`.
//! * `AP(n)`: `u' >= 0`, `u'' <= 0` and `(n-1) u' + u'' (b - x) <= 0`.
//! * `LP(n)`: `u` nondecreasing and `(u(b) - u(x))^(1/n)` convex.
//! * `G(n)`: `U(n)` plus `u^(k)(b) = 0` for `1 <= k < n`.

use serde::{Deserialize, Serialize};

use crate::dist::Interval;
use crate::error::{Error, Result};
use crate::generator::IntegratedTableUtility;

pub const DEFAULT_GRID: usize = 2049;
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Derivative order reported for closed forms that are smooth to every order.
const SMOOTH_ORDER: usize = 64;

/// `m (m-1) ... (m-k+1)` as a float.
fn falling(m: f64, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (m - j as f64))
}

/// k-th derivative of `x -> (b - x)^m` for integer `m >= 0`.
fn reflected_power(m: u32, b: f64, k: usize, x: f64) -> f64 {
    if k > m as usize {
        return 0.0;
    }
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * falling(m as f64, k) * (b - x).powi((m as usize - k) as i32)
}

/// Named utility families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Descriptor {
    /// `x^(1-gamma) / (1-gamma) - x / b^gamma`, or `ln x - x / b` at `gamma = 1`.
    PowerCrraVariant { gamma: f64, b: f64 },
    /// `-(b - x)^n`.
    NegPower { n: u32, b: f64 },
    /// `-(b - x)^(n+1) (1 - gamma (b - x))`; `gamma` defaults to `(n+1) / (2 b (n+2))`.
    ApNotLpCounterexample {
        n: u32,
        b: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma: Option<f64>,
    },
    /// `-max(c - x, 0)^n`, only `n` times differentiable (one-sided at the kink).
    LpmKink { n: u32, c: f64 },
    Affine { alpha: f64, beta: f64 },
    Constant { kappa: f64 },
    /// `sum_k coeffs[k] x^k`.
    Polynomial { coeffs: Vec<f64> },
}

impl Descriptor {
    pub fn validate(&self) -> Result<()> {
        let finite = |v: f64, what: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::Parse(format!("{what} must be finite")))
            }
        };
        match self {
            Descriptor::PowerCrraVariant { gamma, b } => {
                finite(*gamma, "gamma")?;
                finite(*b, "b")?;
                if *gamma <= 0.0 || *b <= 0.0 {
                    return Err(Error::Parse("power_crra_variant needs gamma > 0 and b > 0".into()));
                }
            }
            Descriptor::NegPower { b, .. } => finite(*b, "b")?,
            Descriptor::ApNotLpCounterexample { n, b, gamma } => {
                finite(*b, "b")?;
                if let Some(g) = gamma {
                    finite(*g, "gamma")?;
                }
                if *b <= 0.0 {
                    return Err(Error::Parse("ap_not_lp_counterexample needs b > 0".into()));
                }
                if *n < 2 {
                    return Err(Error::BadOrder { n: *n, min: 2 });
                }
            }
            Descriptor::LpmKink { c, .. } => finite(*c, "c")?,
            Descriptor::Affine { alpha, beta } => {
                finite(*alpha, "alpha")?;
                finite(*beta, "beta")?;
            }
            Descriptor::Constant { kappa } => finite(*kappa, "kappa")?,
            Descriptor::Polynomial { coeffs } => {
                if coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::Parse("polynomial coefficients must be finite".into()));
                }
            }
        }
        Ok(())
    }

    pub fn max_derivative_order(&self) -> usize {
        match self {
            Descriptor::LpmKink { n, .. } => *n as usize,
            _ => SMOOTH_ORDER,
        }
    }

    fn derivative(&self, k: usize, x: f64) -> Result<f64> {
        let value = match self {
            Descriptor::PowerCrraVariant { gamma, b } => {
                if x <= 0.0 {
                    return Err(Error::EvaluationDomain { x });
                }
                let g = *gamma;
                match k {
                    0 if g == 1.0 => x.ln() - x / b,
                    0 => x.powf(1.0 - g) / (1.0 - g) - x / b.powf(g),
                    1 => x.powf(-g) - b.powf(-g),
                    _ => falling(-g, k - 1) * x.powf(-g - (k as f64 - 1.0)),
                }
            }
            Descriptor::NegPower { n, b } => -reflected_power(*n, *b, k, x),
            Descriptor::ApNotLpCounterexample { n, b, gamma } => {
                let g = gamma.unwrap_or_else(|| counterexample_gamma(*n, *b));
                -reflected_power(n + 1, *b, k, x) + g * reflected_power(n + 2, *b, k, x)
            }
            Descriptor::LpmKink { n, c } => {
                if x < *c {
                    -reflected_power(*n, *c, k, x)
                } else {
                    0.0
                }
            }
            Descriptor::Affine { alpha, beta } => match k {
                0 => alpha + beta * x,
                1 => *beta,
                _ => 0.0,
            },
            Descriptor::Constant { kappa } => {
                if k == 0 {
                    *kappa
                } else {
                    0.0
                }
            }
            Descriptor::Polynomial { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(k)
                .rev()
                .fold(0.0, |acc, (j, &c)| acc * x + c * falling(j as f64, k)),
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::EvaluationDomain { x })
        }
    }
}

fn counterexample_gamma(n: u32, b: f64) -> f64 {
    (n as f64 + 1.0) / (2.0 * b * (n as f64 + 2.0))
}

/// A nonnegative multiple of a utility inside a [`UtilitySpec::Combination`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedTerm {
    pub weight: f64,
    pub utility: UtilitySpec,
}

/// A utility on a bounded interval with derivatives available up to some order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum UtilitySpec {
    ClosedForm { descriptor: Descriptor, interval: Interval },
    Integrated(IntegratedTableUtility),
    /// `sum weight_i * u_i + constant`, all terms on the same interval.
    Combination { terms: Vec<WeightedTerm>, constant: f64 },
}

impl UtilitySpec {
    pub fn closed_form(descriptor: Descriptor, interval: Interval) -> Result<Self> {
        descriptor.validate()?;
        Ok(UtilitySpec::ClosedForm { descriptor, interval })
    }

    pub fn combination(terms: Vec<(f64, UtilitySpec)>, constant: f64) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::PreconditionViolated("empty combination".into()))?
            .1
            .interval();
        if terms.iter().any(|(_, u)| !u.interval().same_as(&first)) {
            return Err(Error::IntervalMismatch("combination terms live on different intervals".into()));
        }
        if terms.iter().any(|(w, _)| !w.is_finite()) || !constant.is_finite() {
            return Err(Error::Parse("combination weights must be finite".into()));
        }
        Ok(UtilitySpec::Combination {
            terms: terms.into_iter().map(|(weight, utility)| WeightedTerm { weight, utility }).collect(),
            constant,
        })
    }

    pub fn interval(&self) -> Interval {
        match self {
            UtilitySpec::ClosedForm { interval, .. } => *interval,
            UtilitySpec::Integrated(t) => t.interval(),
            UtilitySpec::Combination { terms, .. } => terms[0].utility.interval(),
        }
    }

    pub fn max_derivative_order(&self) -> usize {
        match self {
            UtilitySpec::ClosedForm { descriptor, .. } => descriptor.max_derivative_order(),
            UtilitySpec::Integrated(t) => t.max_derivative_order(),
            UtilitySpec::Combination { terms, .. } => terms
                .iter()
                .map(|t| t.utility.max_derivative_order())
                .min()
                .unwrap_or(SMOOTH_ORDER),
        }
    }

    /// `u^(k)(x)`; `k = 0` is the value.
    pub fn derivative(&self, k: usize, x: f64) -> Result<f64> {
        let available = self.max_derivative_order();
        if k > available {
            return Err(Error::DerivativeOrderUnavailable { requested: k, available });
        }
        match self {
            UtilitySpec::ClosedForm { descriptor, .. } => descriptor.derivative(k, x),
            UtilitySpec::Integrated(t) => t.derivative(k, x),
            UtilitySpec::Combination { terms, constant } => {
                let mut total = if k == 0 { *constant } else { 0.0 };
                for t in terms {
                    total += t.weight * t.utility.derivative(k, x)?;
                }
                Ok(total)
            }
        }
    }

    pub fn value(&self, x: f64) -> Result<f64> {
        self.derivative(0, x)
    }

    /// `u(y) - u(x)`, with additive constants cancelled exactly.
    pub fn rise(&self, x: f64, y: f64) -> Result<f64> {
        match self {
            UtilitySpec::ClosedForm { descriptor: Descriptor::Constant { .. }, .. } => Ok(0.0),
            UtilitySpec::ClosedForm { descriptor: Descriptor::Affine { beta, .. }, .. } => Ok(beta * (y - x)),
            UtilitySpec::ClosedForm { .. } => Ok(self.value(y)? - self.value(x)?),
            UtilitySpec::Integrated(t) => Ok(t.rise(x, y)),
            UtilitySpec::Combination { terms, .. } => {
                terms.iter().try_fold(0.0, |acc, t| Ok(acc + t.weight * t.utility.rise(x, y)?))
            }
        }
    }

    fn require_order(&self, order: usize) -> Result<()> {
        let available = self.max_derivative_order();
        if available < order {
            Err(Error::DerivativeOrderUnavailable { requested: order, available })
        } else {
            Ok(())
        }
    }
}

/// The counterexample utility on `[0, b]` that is in `AP(n)` but not in `LP(n)`.
pub fn ap_not_lp_counterexample(n: u32, b: f64) -> Result<UtilitySpec> {
    if n < 2 {
        return Err(Error::BadOrder { n, min: 2 });
    }
    let interval = Interval::new(0.0, b)?;
    UtilitySpec::closed_form(Descriptor::ApNotLpCounterexample { n, b, gamma: Some(counterexample_gamma(n, b)) }, interval)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSlack {
    pub label: String,
    pub slack: f64,
    pub location: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipReport {
    pub class_id: String,
    pub member: bool,
    pub worst_slack: f64,
    pub worst_location: f64,
    pub tolerance: f64,
    pub per_condition: Vec<ConditionSlack>,
    /// For LP: which of the two criteria produced the worst slack.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub binding: Option<String>,
    /// Set when independent criteria disagree on membership.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl MembershipReport {
    fn new(class_id: String, per_condition: Vec<ConditionSlack>, tolerance: f64, fallback: f64) -> Self {
        let worst = per_condition.iter().min_by(|x, y| x.slack.total_cmp(&y.slack));
        let (worst_slack, worst_location) = worst.map_or((0.0, fallback), |c| (c.slack, c.location));
        Self {
            class_id,
            member: worst_slack >= -tolerance,
            worst_slack,
            worst_location,
            tolerance,
            per_condition,
            binding: None,
            diagnostic: None,
        }
    }

    /// True when the verdict is within `factor * tolerance` of flipping on the failing side.
    pub fn near_boundary(&self, factor: f64) -> bool {
        !self.member && self.worst_slack >= -factor * self.tolerance
    }
}

/// Derivative values on a grid: `rows[k][i] = u^(k)(grid[i])`.
struct DerivativeTable {
    grid: Vec<f64>,
    rows: Vec<Vec<f64>>,
    scales: Vec<f64>,
}

impl DerivativeTable {
    fn build(u: &UtilitySpec, max_k: usize, grid_size: usize) -> Result<Self> {
        u.require_order(max_k)?;
        let iv = u.interval();
        let grid = iv.grid(grid_size.max(3));
        let rows = (0..=max_k)
            .map(|k| grid.iter().map(|&x| u.derivative(k, x)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let raw: Vec<f64> = rows
            .iter()
            .map(|r| r.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
            .collect();
        // Floor each scale by the overall magnitude so derivatives that vanish
        // identically do not turn roundoff into large relative slacks.
        let w = iv.width();
        let overall = raw
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, s)| s * w.powi(j as i32))
            .fold(0.0_f64, f64::max);
        let scales = raw
            .iter()
            .enumerate()
            .map(|(k, &s)| {
                let floor = 1e-9 * overall / w.powi(k as i32);
                let s = s.max(floor);
                if s > 0.0 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { grid, rows, scales })
    }

    fn worst(&self, label: String, slack: impl Fn(usize) -> f64) -> ConditionSlack {
        let (mut best, mut loc) = (f64::INFINITY, self.grid[0]);
        for (i, &x) in self.grid.iter().enumerate() {
            let s = slack(i);
            if s < best {
                best = s;
                loc = x;
            }
        }
        ConditionSlack { label, slack: best, location: loc }
    }
}

fn sign(k: usize) -> f64 {
    if k.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn u_conditions(t: &DerivativeTable, n: u32) -> Vec<ConditionSlack> {
    (1..=n as usize + 1)
        .map(|k| t.worst(format!("(-1)^{k} u^({k}) <= 0"), |i| -sign(k) * t.rows[k][i] / t.scales[k]))
        .collect()
}

pub fn check_u(u: &UtilitySpec, n: u32, grid_size: usize, tolerance: f64) -> Result<MembershipReport> {
    let t = DerivativeTable::build(u, n as usize + 1, grid_size)?;
    Ok(MembershipReport::new(format!("U({n})"), u_conditions(&t, n), tolerance, u.interval().a()))
}

pub fn check_g(u: &UtilitySpec, n: u32, grid_size: usize, tolerance: f64) -> Result<MembershipReport> {
    let t = DerivativeTable::build(u, n as usize + 1, grid_size)?;
    let mut conds = u_conditions(&t, n);
    let last = t.grid.len() - 1;
    let b = t.grid[last];
    for k in 1..n as usize {
        conds.push(ConditionSlack {
            label: format!("u^({k})(b) = 0"),
            slack: -t.rows[k][last].abs() / t.scales[k],
            location: b,
        });
    }
    Ok(MembershipReport::new(format!("G({n})"), conds, tolerance, u.interval().a()))
}

/// `(n-1) u'(x) + u''(x) (b - x)`; nonpositive inside the class.
pub fn ap_slack(u: &UtilitySpec, n: u32, x: f64) -> Result<f64> {
    u.require_order(2)?;
    let b = u.interval().b();
    Ok((n as f64 - 1.0) * u.derivative(1, x)? + u.derivative(2, x)? * (b - x))
}

pub fn check_ap(u: &UtilitySpec, n: u32, grid_size: usize, tolerance: f64) -> Result<MembershipReport> {
    let t = DerivativeTable::build(u, 2, grid_size)?;
    let b = u.interval().b();
    let m = n as f64 - 1.0;
    // z is compared with the size of its own two terms at the same point,
    // floored by a small fraction of their largest size on the grid
    let z = |i: usize| m * t.rows[1][i] + t.rows[2][i] * (b - t.grid[i]);
    let size = |i: usize| (m * t.rows[1][i]).abs() + t.rows[2][i].abs() * (b - t.grid[i]);
    let largest = (0..t.grid.len()).map(size).fold(0.0_f64, f64::max);
    let floor = if largest > 0.0 { 1e-6 * largest } else { 1.0 };
    let conds = vec![
        t.worst("u' >= 0".into(), |i| t.rows[1][i] / t.scales[1]),
        t.worst("u'' <= 0".into(), |i| -t.rows[2][i] / t.scales[2]),
        t.worst("(n-1) u' + u'' (b - x) <= 0".into(), |i| -z(i) / size(i).max(floor)),
    ];
    Ok(MembershipReport::new(format!("AP({n})"), conds, tolerance, u.interval().a()))
}

/// `(u(x) - u(b)) u''(x) / u'(x)^2`; at least `(n-1)/n` inside the class.
pub fn lp_ratio(u: &UtilitySpec, _n: u32, x: f64) -> Result<f64> {
    u.require_order(2)?;
    let d1 = u.derivative(1, x)?;
    if d1 == 0.0 {
        return Err(Error::VanishingFirstDerivative { x });
    }
    let b = u.interval().b();
    let ratio = -u.rise(x, b)? * u.derivative(2, x)? / (d1 * d1);
    if !ratio.is_finite() {
        return Err(Error::VanishingFirstDerivative { x });
    }
    Ok(ratio)
}

pub fn check_lp(u: &UtilitySpec, n: u32, grid_size: usize, tolerance: f64) -> Result<MembershipReport> {
    if n == 0 {
        return Err(Error::BadOrder { n, min: 1 });
    }
    let t = DerivativeTable::build(u, 2, grid_size)?;
    let m = t.grid.len();
    let last = m - 1;
    let steps = (m - 1) as f64;
    let target = (n as f64 - 1.0) / n as f64;

    let monotone = t.worst("u' >= 0".into(), |i| t.rows[1][i] / t.scales[1]);

    // Convexity of phi by second differences, normalized to a dimensionless
    // curvature and rescaled so that roundoff of the differences stays inside
    // the common tolerance.
    let b = t.grid[last];
    let drop = t.grid.iter().map(|&x| u.rise(x, b)).collect::<Result<Vec<_>>>()?;
    let phi: Vec<f64> = drop.iter().map(|&d| d.max(0.0).powf(1.0 / n as f64)).collect();
    let phi_scale = phi.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let floor = tolerance.max(64.0 * f64::EPSILON * steps * steps);
    let rescale = tolerance / floor;
    let convex = if phi_scale > 0.0 {
        let mut c = ConditionSlack { label: "phi convex".into(), slack: f64::INFINITY, location: t.grid[0] };
        for i in 1..last {
            let d2 = (phi[i - 1] - 2.0 * phi[i] + phi[i + 1]) * steps * steps / phi_scale;
            let s = d2 * rescale;
            if s < c.slack {
                c.slack = s;
                c.location = t.grid[i];
            }
        }
        c
    } else {
        ConditionSlack { label: "phi convex".into(), slack: 0.0, location: t.grid[0] }
    };

    let flat = 1e-10 * t.scales[1];
    let ratio = {
        let mut c = ConditionSlack { label: "ratio >= (n-1)/n".into(), slack: f64::INFINITY, location: t.grid[0] };
        for i in 0..m {
            let d1 = t.rows[1][i];
            if d1 <= flat {
                continue;
            }
            let r = -drop[i] * t.rows[2][i] / (d1 * d1);
            let s = r - target;
            if s < c.slack {
                c.slack = s;
                c.location = t.grid[i];
            }
        }
        if c.slack == f64::INFINITY {
            c.slack = 0.0;
        }
        c
    };

    let convex_ok = convex.slack >= -tolerance;
    let ratio_ok = ratio.slack >= -tolerance;
    let binding = if convex.slack <= ratio.slack { "convexity" } else { "ratio" };
    let diagnostic = (convex_ok != ratio_ok).then(|| {
        format!(
            "criteria disagree: convexity slack {:e} at {}, ratio slack {:e} at {}",
            convex.slack, convex.location, ratio.slack, ratio.location
        )
    });
    let mut report = MembershipReport::new(format!("LP({n})"), vec![monotone, convex, ratio], tolerance, t.grid[0]);
    report.binding = Some(binding.into());
    report.diagnostic = diagnostic;
    Ok(report)
}
