//! Generator utilities built by backward integration, mollification and the
//! smooth approximants of lower-partial-moment utilities.
//!
//! A utility of order `n` is fixed by a nonnegative base `w` (piecewise linear
//! on a uniform grid) and boundary magnitudes `s_1..s_n`:
//!
//! * `u^(n+1) = (-1)^n w`,
//! * `u^(k)(b) = (-1)^(k+1) s_k` for `k = 1..=n`,
//! * each lower derivative is recovered by integrating from `b` leftwards.
//!
//! Since `(-1)^k u^(k)(x) = -s_k - int_x^b (-1)^(k+1) u^(k+1)`, the alternating
//! sign pattern propagates down from the base, so the result always lies in
//! `U(n)`. With `s_1 = .. = s_{n-1} = 0` it lies in `G(n)`.

use serde::{Deserialize, Serialize};

use crate::dist::{DiscreteDistribution, Interval};
use crate::error::{Error, Result};
use crate::polyseg::poly;
use crate::utility::{self, UtilitySpec};

/// Recipe of an [`IntegratedTableUtility`]; the tables are rebuilt from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionLog {
    pub n: u32,
    pub interval: Interval,
    /// Base values at the uniform grid nodes.
    pub base_w: Vec<f64>,
    /// `s_1..s_n`, the magnitudes of `u^(k)(b)`.
    pub boundary: Vec<f64>,
    pub value_at_b: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothing_width: Option<f64>,
}

/// A utility whose derivatives of order `0..=n+1` are exact piecewise
/// polynomials on a uniform grid.
///
/// Pieces are anchored at the right end of their cell (`r = x - t_{i+1}`),
/// which keeps values near `b` accurate to full relative precision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConstructionLog", into = "ConstructionLog")]
pub struct IntegratedTableUtility {
    log: ConstructionLog,
    nodes: Vec<f64>,
    /// `levels[k][i]`: coefficients of `u^(k)` on cell `i`.
    levels: Vec<Vec<Vec<f64>>>,
}

impl From<IntegratedTableUtility> for ConstructionLog {
    fn from(u: IntegratedTableUtility) -> Self {
        u.log
    }
}

impl TryFrom<ConstructionLog> for IntegratedTableUtility {
    type Error = Error;

    fn try_from(log: ConstructionLog) -> Result<Self> {
        IntegratedTableUtility::build(log)
    }
}

impl IntegratedTableUtility {
    pub fn build(log: ConstructionLog) -> Result<Self> {
        let n = log.n as usize;
        if log.base_w.len() < 2 {
            return Err(Error::Parse("base needs at least two nodes".into()));
        }
        if log.boundary.len() != n {
            return Err(Error::LengthMismatch(format!("{} boundary values for order {}", log.boundary.len(), n)));
        }
        let nodes = log.interval.grid(log.base_w.len());
        for (&x, &w) in nodes.iter().zip(&log.base_w) {
            if !w.is_finite() {
                return Err(Error::Parse("non-finite base value".into()));
            }
            if w < 0.0 {
                return Err(Error::NegativeBase { x });
            }
        }
        if log.boundary.iter().any(|s| !s.is_finite() || *s < 0.0) || !log.value_at_b.is_finite() {
            return Err(Error::PreconditionViolated("boundary magnitudes must be finite and nonnegative".into()));
        }

        let cells = nodes.len() - 1;
        let top = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
        let mut levels = vec![Vec::new(); n + 2];
        levels[n + 1] = (0..cells)
            .map(|i| {
                let h = nodes[i + 1] - nodes[i];
                let (wl, wr) = (log.base_w[i], log.base_w[i + 1]);
                vec![top * wr, top * (wr - wl) / h]
            })
            .collect();
        for k in (0..=n).rev() {
            // the value at b is added on evaluation so differences u(y) - u(x) stay exact
            let mut value = if k == 0 {
                0.0
            } else {
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                sign * log.boundary[k - 1]
            };
            let mut level = vec![Vec::new(); cells];
            for i in (0..cells).rev() {
                let h = nodes[i + 1] - nodes[i];
                let mut coeffs = poly::antiderivative(&levels[k + 1][i]);
                coeffs[0] = value;
                value = poly::eval(&coeffs, -h);
                level[i] = coeffs;
            }
            levels[k] = level;
        }
        Ok(Self { log, nodes, levels })
    }

    pub fn log(&self) -> &ConstructionLog {
        &self.log
    }

    pub fn interval(&self) -> Interval {
        self.log.interval
    }

    pub fn order(&self) -> u32 {
        self.log.n
    }

    pub fn max_derivative_order(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    fn cell(&self, x: f64) -> usize {
        let cells = self.nodes.len() - 1;
        let a = self.nodes[0];
        let h = (self.nodes[cells] - a) / cells as f64;
        let raw = ((x - a) / h).floor();
        if raw.is_nan() || raw < 0.0 {
            0
        } else {
            (raw as usize).min(cells - 1)
        }
    }

    pub fn derivative(&self, k: usize, x: f64) -> Result<f64> {
        let level = self.levels.get(k).ok_or(Error::DerivativeOrderUnavailable {
            requested: k,
            available: self.max_derivative_order(),
        })?;
        let i = self.cell(x);
        let v = poly::eval(&level[i], x - self.nodes[i + 1]);
        Ok(if k == 0 { v + self.log.value_at_b } else { v })
    }

    /// `u(y) - u(x)` without the constant offset.
    pub fn rise(&self, x: f64, y: f64) -> f64 {
        let at = |t: f64| {
            let i = self.cell(t);
            poly::eval(&self.levels[0][i], t - self.nodes[i + 1])
        };
        at(y) - at(x)
    }

    /// `tables[k][j] = u^(k)(grid[j])` on a uniform grid of `grid_size` points.
    pub fn derivative_tables(&self, grid_size: usize) -> Vec<Vec<f64>> {
        let grid = self.interval().grid(grid_size.max(2));
        (0..self.levels.len())
            .map(|k| grid.iter().map(|&x| self.derivative(k, x).unwrap_or(f64::NAN)).collect())
            .collect()
    }
}

/// A general member of `U(n)` from a base function sampled on `cells` cells.
pub fn sample_u_utility(
    n: u32,
    interval: Interval,
    base_w: &dyn Fn(f64) -> f64,
    boundary: &[f64],
    value_at_b: f64,
    cells: usize,
) -> Result<UtilitySpec> {
    let nodes = interval.grid(cells.max(1) + 1);
    let base = nodes.iter().map(|&x| base_w(x)).collect();
    from_node_values(n, interval, base, boundary.to_vec(), value_at_b, None)
}

/// A member of `G(n)`: `u^(n+1) = (-1)^n w`, `u^(n)(b) = (-1)^(n+1) s`, all
/// lower derivatives and `u` itself vanish at `b`.
pub fn sample_generator_utility(
    n: u32,
    interval: Interval,
    base_w: &dyn Fn(f64) -> f64,
    boundary_s: f64,
    cells: usize,
) -> Result<UtilitySpec> {
    if n == 0 {
        return Err(Error::BadOrder { n, min: 1 });
    }
    let mut boundary = vec![0.0; n as usize];
    boundary[n as usize - 1] = boundary_s;
    sample_u_utility(n, interval, base_w, &boundary, 0.0, cells)
}

pub fn from_node_values(
    n: u32,
    interval: Interval,
    base_w: Vec<f64>,
    boundary: Vec<f64>,
    value_at_b: f64,
    smoothing_width: Option<f64>,
) -> Result<UtilitySpec> {
    let log = ConstructionLog { n, interval, base_w, boundary, value_at_b, smoothing_width };
    Ok(UtilitySpec::Integrated(IntegratedTableUtility::build(log)?))
}

/// Smoothing by discrete convolution with the bump `exp(-1 / (1 - t^2))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MollifierConfig {
    /// Half-width of the kernel support.
    pub width: f64,
    /// The kernel is sampled on a grid this many times finer than the table.
    pub refinement: usize,
}

impl MollifierConfig {
    pub fn new(width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::PreconditionViolated(format!("mollifier width {width} must be positive")));
        }
        Ok(Self { width, refinement: 8 })
    }

    /// Normalized kernel weights at offsets `-m..=m` fine steps.
    pub fn kernel_weights(&self, fine_step: f64) -> Vec<f64> {
        let m = (self.width / fine_step).ceil() as usize;
        let raw: Vec<f64> = (0..=2 * m)
            .map(|j| {
                let t = (j as f64 - m as f64) * fine_step / self.width;
                bump(t)
            })
            .collect();
        let total: f64 = raw.iter().sum();
        if total > 0.0 {
            raw.iter().map(|w| w / total).collect()
        } else {
            vec![1.0]
        }
    }
}

pub fn bump(t: f64) -> f64 {
    if t.abs() < 1.0 {
        (-1.0 / (1.0 - t * t)).exp()
    } else {
        0.0
    }
}

/// A convex decreasing table on a uniform grid, extended affinely to the left
/// (with its slope at `a`) and by its value at `b` to the right.
struct Extension<'a> {
    values: &'a [f64],
    refinement: usize,
    left_slope_fine: f64,
}

impl Extension<'_> {
    /// Value at fine-grid index `k` (fine step `h / refinement` from `a`).
    fn at(&self, k: i64) -> f64 {
        let r = self.refinement as i64;
        let last = (self.values.len() as i64 - 1) * r;
        if k <= 0 {
            self.values[0] + self.left_slope_fine * k as f64
        } else if k >= last {
            self.values[self.values.len() - 1]
        } else {
            let q = (k / r) as usize;
            let frac = (k % r) as f64 / r as f64;
            self.values[q] + frac * (self.values[q + 1] - self.values[q])
        }
    }
}

fn validate_convex_decreasing(values: &[f64], nodes: &[f64]) -> Result<()> {
    let scale = values.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let tol = 1e-10 * scale;
    for i in 0..values.len() - 1 {
        let d = values[i + 1] - values[i];
        if d > tol {
            return Err(Error::NotDecreasing { x: nodes[i], value: d });
        }
    }
    for i in 1..values.len() - 1 {
        let d2 = values[i - 1] - 2.0 * values[i] + values[i + 1];
        if d2 < -tol {
            return Err(Error::NotConvex { x: nodes[i], value: d2 });
        }
    }
    Ok(())
}

/// Convolution sampled at table indices `from..=to` (may extend past the table).
fn convolve(values: &[f64], interval: Interval, config: &MollifierConfig, from: i64, to: i64) -> Vec<f64> {
    let cells = values.len() - 1;
    let h = interval.width() / cells as f64;
    let r = config.refinement.max(1);
    let fine = h / r as f64;
    let weights = config.kernel_weights(fine);
    let m = (weights.len() / 2) as i64;
    let ext = Extension { values, refinement: r, left_slope_fine: (values[1] - values[0]) / r as f64 };
    (from..=to)
        .map(|i| {
            let centre = i * r as i64;
            weights
                .iter()
                .enumerate()
                .map(|(j, w)| w * ext.at(centre - (j as i64 - m)))
                .sum()
        })
        .collect()
}

/// Smooths a convex decreasing table; the output is convex, decreasing and
/// within `Lipschitz * width` of the input.
pub fn mollify(values: &[f64], interval: Interval, config: &MollifierConfig) -> Result<Vec<f64>> {
    if values.len() < 2 {
        return Err(Error::Parse("need at least two table values".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Parse("non-finite table value".into()));
    }
    MollifierConfig::new(config.width)?;
    let nodes = interval.grid(values.len());
    validate_convex_decreasing(values, &nodes)?;
    Ok(convolve(values, interval, config, 0, values.len() as i64 - 1))
}

/// Grid size used by [`build_kink_approximant`] when none is given.
pub fn default_approximant_cells(interval: Interval, width: f64) -> usize {
    let wanted = (16.0 * interval.width() / width).ceil();
    (wanted.max(256.0) as usize).min(1 << 18)
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// A smooth member of `G(n)` converging to `x -> -max(c - x, 0)^n` as the
/// smoothing width shrinks.
///
/// The `(n-1)`-th derivative of the target is `(-1)^n n! max(c - x, 0)`; that
/// kink is mollified, its mollified curvature becomes the base and its slope
/// at `b` the top boundary value, and the remaining levels are integrated
/// back from `b` with zero boundary values.
pub fn build_kink_approximant(
    c: f64,
    n: u32,
    interval: Interval,
    width: f64,
    cells: Option<usize>,
) -> Result<UtilitySpec> {
    if n == 0 {
        return Err(Error::BadOrder { n, min: 1 });
    }
    let config = MollifierConfig::new(width)?;
    if !interval.contains(c) {
        return Err(Error::OutOfInterval { value: c, a: interval.a(), b: interval.b() });
    }
    let cells = cells.unwrap_or_else(|| default_approximant_cells(interval, width)).max(2);
    let boundary_zero = vec![0.0; n as usize];
    if c <= interval.a() {
        return from_node_values(n, interval, vec![0.0; cells + 1], boundary_zero, 0.0, Some(width));
    }
    let nodes = interval.grid(cells + 1);
    let scale = factorial(n);
    let kink: Vec<f64> = nodes.iter().map(|&x| scale * (c - x).max(0.0)).collect();
    let smooth = convolve(&kink, interval, &config, -1, cells as i64 + 1);
    let h = interval.width() / cells as f64;
    let base: Vec<f64> = (1..=cells + 1)
        .map(|i| ((smooth[i - 1] - 2.0 * smooth[i] + smooth[i + 1]) / (h * h)).max(0.0))
        .collect();
    let slope_b = (smooth[cells + 2] - smooth[cells]) / (2.0 * h);
    let mut boundary = boundary_zero;
    boundary[n as usize - 1] = (-slope_b).max(0.0);
    from_node_values(n, interval, base, boundary, 0.0, Some(width))
}

/// `(1/j!) sum_{x_i < c} p_i (c - x_i)^j`, the `j`-fold iterated integral of the CDF.
pub fn iterated_integral(w: &DiscreteDistribution, j: u32, c: f64) -> f64 {
    w.lpm(j, c) / factorial(j)
}

/// Worst normalized second difference of a table (negative means concave
/// somewhere), rescaled so roundoff stays inside `tolerance`.
pub(crate) fn convexity_slack(values: &[f64], tolerance: f64) -> (f64, usize) {
    let steps = (values.len() - 1) as f64;
    let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || values.len() < 3 {
        return (0.0, 0);
    }
    let floor = tolerance.max(64.0 * f64::EPSILON * steps * steps);
    let mut worst = (f64::INFINITY, 0);
    for i in 1..values.len() - 1 {
        let d2 = (values[i - 1] - 2.0 * values[i] + values[i + 1]) * steps * steps / scale;
        let s = d2 * tolerance / floor;
        if s < worst.0 {
            worst = (s, i);
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootConvexityReport {
    /// `x -> (f(b) - f(x))^(1/n)` convex on `[a, b]`.
    pub root_convex: bool,
    pub root_slack: f64,
    pub root_location: f64,
    /// `y -> -f(b - y^(1/n))` convex on `[0, (b - a)^n]` (tested up to the constant `f(b)`).
    pub transformed_convex: bool,
    pub transformed_slack: f64,
    pub transformed_location: f64,
    pub agree: bool,
}

/// Compares the two convexity characterizations of the class on a grid.
pub fn check_root_convexity(f: &UtilitySpec, n: u32, grid_size: usize) -> Result<RootConvexityReport> {
    if n == 0 {
        return Err(Error::BadOrder { n, min: 1 });
    }
    let tol = utility::DEFAULT_TOLERANCE;
    let u = utility::check_u(f, n, grid_size, tol)?;
    if !u.member {
        return Err(Error::PreconditionViolated(format!(
            "utility is not in U({n}): slack {:e} at {}",
            u.worst_slack, u.worst_location
        )));
    }
    let iv = f.interval();
    let (a, b) = (iv.a(), iv.b());
    let inv = 1.0 / n as f64;
    let grid = iv.grid(grid_size.max(3));
    let root = grid
        .iter()
        .map(|&x| Ok(f.rise(x, b)?.max(0.0).powf(inv)))
        .collect::<Result<Vec<_>>>()?;
    let top = (b - a).powi(n as i32);
    let ys: Vec<f64> = (0..grid.len()).map(|i| top * i as f64 / (grid.len() - 1) as f64).collect();
    let transformed = ys
        .iter()
        .map(|&y| f.rise((b - y.powf(inv)).max(a), b))
        .collect::<Result<Vec<_>>>()?;
    let (rs, ri) = convexity_slack(&root, tol);
    let (ts, ti) = convexity_slack(&transformed, tol);
    let (root_convex, transformed_convex) = (rs >= -tol, ts >= -tol);
    Ok(RootConvexityReport {
        root_convex,
        root_slack: rs,
        root_location: grid[ri],
        transformed_convex,
        transformed_slack: ts,
        transformed_location: ys[ti],
        agree: root_convex == transformed_convex,
    })
}

/// `(E f(X), f(b - (E (b - X)^n)^(1/n)), f(E X))`, ordered for class members.
pub fn check_jensen_chain(f: &UtilitySpec, n: u32, x: &DiscreteDistribution) -> Result<(f64, f64, f64)> {
    if n == 0 {
        return Err(Error::BadOrder { n, min: 1 });
    }
    let tol = utility::DEFAULT_TOLERANCE;
    let grid = utility::DEFAULT_GRID;
    let u = utility::check_u(f, n, grid, tol)?;
    let lp = utility::check_lp(f, n, grid, tol)?;
    if !u.member || !lp.member {
        return Err(Error::PreconditionViolated(format!("utility must be in U({n}) and LP({n})")));
    }
    let iv = f.interval();
    if x.atoms().iter().any(|&v| !iv.contains(v)) {
        return Err(Error::IntervalMismatch("distribution leaves the utility's interval".into()));
    }
    let b = iv.b();
    let lhs = x.expect(|v| f.value(v).unwrap_or(f64::NAN));
    let moment = x.expect(|v| (b - v).powi(n as i32));
    let mid = f.value(iv.clamp(b - moment.powf(1.0 / n as f64)))?;
    let rhs = f.value(iv.clamp(x.mean()))?;
    if !lhs.is_finite() {
        return Err(Error::EvaluationDomain { x: x.atoms()[0] });
    }
    Ok((lhs, mid, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::utility::{check_g, Descriptor, DEFAULT_GRID, DEFAULT_TOLERANCE};

    fn unit() -> Interval {
        Interval::unit()
    }

    #[test]
    fn zero_base_gives_zero_utility() {
        let u = sample_generator_utility(3, unit(), &|_| 0.0, 0.0, 16).unwrap();
        for &x in &[0.0, 0.4, 1.0] {
            for k in 0..=4 {
                assert_eq!(u.derivative(k, x).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn first_order_boundary_only() {
        let u = sample_generator_utility(1, unit(), &|_| 0.0, 1.0, 8).unwrap();
        for &x in &[0.0, 0.3, 1.0] {
            assert!((u.value(x).unwrap() - (x - 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_base_reproduces_cube() {
        let u = sample_generator_utility(2, unit(), &|_| 6.0, 0.0, 8).unwrap();
        for &x in &[0.0, 0.25, 0.6, 1.0] {
            assert!((u.value(x).unwrap() + (1.0 - x).powi(3)).abs() < 1e-14);
        }
        assert!(check_g(&u, 2, DEFAULT_GRID, DEFAULT_TOLERANCE).unwrap().member);
    }

    #[test]
    fn negative_base_rejected() {
        let err = sample_generator_utility(2, unit(), &|x| x - 0.5, 0.0, 8).unwrap_err();
        assert!(matches!(err, Error::NegativeBase { .. }));
    }

    #[test]
    fn tables_are_consistent() {
        let u = sample_generator_utility(3, unit(), &|x| 1.0 + (7.0 * x).sin(), 0.4, 32).unwrap();
        let UtilitySpec::Integrated(t) = &u else { unreachable!() };
        let tables = t.derivative_tables(1025);
        let h = 1.0 / 1024.0;
        for k in 0..4 {
            let scale = tables[k].iter().fold(1e-300_f64, |m, v| m.max(v.abs()));
            let mut acc = tables[k][1024];
            for j in (0..1024).rev() {
                acc -= 0.5 * h * (tables[k + 1][j] + tables[k + 1][j + 1]);
                assert!((acc - tables[k][j]).abs() <= 1e-6 * scale, "k = {k}");
            }
        }
        for k in 1..3 {
            assert_eq!(tables[k][1024], 0.0);
        }
    }

    #[test]
    fn json_round_trip() {
        let u = sample_generator_utility(2, unit(), &|x| x * x, 0.3, 4).unwrap();
        let s = serde_json::to_string(&u).unwrap();
        let back: UtilitySpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, u);
    }

    #[test]
    fn mollify_affine_is_identity() {
        let grid = unit().grid(101);
        let f: Vec<f64> = grid.iter().map(|x| 2.0 - 3.0 * x).collect();
        let out = mollify(&f, unit(), &MollifierConfig::new(0.05).unwrap()).unwrap();
        // the continuation past b is constant, so only points a full width away from b are untouched
        for ((o, v), x) in out.iter().zip(&f).zip(&grid) {
            if *x <= 0.95 {
                assert!((o - v).abs() < 1e-10);
            } else {
                assert!(*o >= *v - 1e-12);
            }
        }
    }

    #[test]
    fn mollify_kink() {
        let grid = unit().grid(1001);
        let f: Vec<f64> = grid.iter().map(|x| (0.5 - x).max(0.0)).collect();
        let mut last = f64::INFINITY;
        for width in [0.1, 0.05, 0.025] {
            let out = mollify(&f, unit(), &MollifierConfig::new(width).unwrap()).unwrap();
            let dist = out.iter().zip(&f).map(|(o, v)| (o - v).abs()).fold(0.0, f64::max);
            assert!(dist <= width + 1e-12);
            assert!(dist <= last);
            last = dist;
            assert!(validate_convex_decreasing(&out, &grid).is_ok());
        }
        let bad: Vec<f64> = grid.iter().map(|x| x * x).collect();
        assert!(matches!(
            mollify(&bad, unit(), &MollifierConfig::new(0.1).unwrap()),
            Err(Error::NotDecreasing { .. })
        ));
        let concave: Vec<f64> = grid.iter().map(|x| -x * x).collect();
        assert!(matches!(
            mollify(&concave, unit(), &MollifierConfig::new(0.1).unwrap()),
            Err(Error::NotConvex { .. })
        ));
    }

    #[test]
    fn kernel_weights_sum_to_one() {
        let cfg = MollifierConfig::new(0.3).unwrap();
        let w = cfg.kernel_weights(0.001);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(w.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn approximant_examples() {
        let zero = build_kink_approximant(0.0, 2, unit(), 0.05, None).unwrap();
        assert_eq!(zero.value(0.3).unwrap(), 0.0);

        let f = DiscreteDistribution::new(&[0.0, 1.0], &[0.5, 0.5], unit(), false).unwrap();
        let u = build_kink_approximant(0.6, 2, unit(), 0.02, None).unwrap();
        let eu = crate::dominance::expected_utility(&f, &u).unwrap();
        assert!((eu + 0.18).abs() <= 0.01, "{eu}");
        assert!(check_g(&u, 2, DEFAULT_GRID, DEFAULT_TOLERANCE).unwrap().member);

        let mut last = f64::INFINITY;
        for step in 0..5 {
            let width = 0.1 / 2f64.powi(step);
            let u = build_kink_approximant(0.6, 2, unit(), width, None).unwrap();
            let err = (crate::dominance::expected_utility(&f, &u).unwrap() + 0.18).abs();
            assert!(err < last, "width {width}: {err} vs {last}");
            last = err;
        }
    }

    #[test]
    fn iterated_integral_examples() {
        let d0 = DiscreteDistribution::point_mass(0.0, unit()).unwrap();
        assert_eq!(iterated_integral(&d0, 2, 1.0), 0.5);
        assert_eq!(iterated_integral(&d0, 3, 0.0), 0.0);
        let two = DiscreteDistribution::new(&[0.0, 1.0], &[0.5, 0.5], unit(), false).unwrap();
        assert_eq!(iterated_integral(&two, 1, 0.5), 0.25);
    }

    #[test]
    fn root_convexity_examples() {
        let np = UtilitySpec::closed_form(Descriptor::NegPower { n: 2, b: 1.0 }, unit()).unwrap();
        let r = check_root_convexity(&np, 2, DEFAULT_GRID).unwrap();
        assert!(r.agree && r.root_convex);
        let v = UtilitySpec::closed_form(
            Descriptor::PowerCrraVariant { gamma: 2.0, b: 1.0 },
            Interval::new(0.1, 1.0).unwrap(),
        )
        .unwrap();
        let r = check_root_convexity(&v, 2, DEFAULT_GRID).unwrap();
        assert!(r.agree && r.root_convex, "{r:?}");
        let g = crate::utility::ap_not_lp_counterexample(2, 1.0).unwrap();
        assert!(matches!(check_root_convexity(&g, 2, DEFAULT_GRID), Err(Error::PreconditionViolated(_))));
    }

    #[test]
    fn jensen_chain_examples() {
        let two = DiscreteDistribution::new(&[0.0, 1.0], &[0.5, 0.5], unit(), false).unwrap();
        let sq = UtilitySpec::closed_form(Descriptor::NegPower { n: 2, b: 1.0 }, unit()).unwrap();
        let (l, m, r) = check_jensen_chain(&sq, 2, &two).unwrap();
        assert!((l + 0.5).abs() < 1e-12 && (m + 0.5).abs() < 1e-12 && (r + 0.25).abs() < 1e-12);

        let cube = UtilitySpec::closed_form(Descriptor::NegPower { n: 3, b: 1.0 }, unit()).unwrap();
        let (l, m, r) = check_jensen_chain(&cube, 3, &two).unwrap();
        assert!((l + 0.5).abs() < 1e-12 && (m + 0.5).abs() < 1e-12 && (r + 0.125).abs() < 1e-12);

        let point = DiscreteDistribution::point_mass(0.3, unit()).unwrap();
        let (l, m, r) = check_jensen_chain(&cube, 3, &point).unwrap();
        assert!((l - m).abs() < 1e-12 && (m - r).abs() < 1e-12);
    }
}
