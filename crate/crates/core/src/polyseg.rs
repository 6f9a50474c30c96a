//! Piecewise polynomials on a bounded interval and exact sign certification.
//!
//! Each piece is stored in the shifted variable `s = c - t_i` of its own left
//! breakpoint. Lower-partial-moment curves of finitely supported distributions
//! are exactly of this form, which lets dominance questions over a continuum of
//! thresholds be decided by enumerating critical points instead of sampling.

use serde::{Deserialize, Serialize};

use crate::dist::{DiscreteDistribution, Interval};
use crate::error::{Error, Result};

/// Largest LPM exponent accepted by the curve builders.
pub const MAX_EXPONENT: u32 = 8;

/// Relative width at which root bisection stops.
const ROOT_WIDTH: f64 = 1e-13;

pub(crate) mod poly {
    //! Dense power-basis helpers (`coeffs[k]` multiplies `s^k`).

    pub fn eval(coeffs: &[f64], s: f64) -> f64 {
        coeffs.iter().rev().fold(0.0, |acc, &c| acc * s + c)
    }

    pub fn derivative(coeffs: &[f64]) -> Vec<f64> {
        if coeffs.len() <= 1 {
            return vec![0.0];
        }
        coeffs.iter().enumerate().skip(1).map(|(k, &c)| c * k as f64).collect()
    }

    /// Antiderivative vanishing at `s = 0`.
    pub fn antiderivative(coeffs: &[f64]) -> Vec<f64> {
        std::iter::once(0.0)
            .chain(coeffs.iter().enumerate().map(|(k, &c)| c / (k + 1) as f64))
            .collect()
    }

    /// Coefficients of `s -> p(s + delta)`.
    pub fn shift(coeffs: &[f64], delta: f64) -> Vec<f64> {
        let mut c = coeffs.to_vec();
        if delta == 0.0 {
            return c;
        }
        let d = c.len();
        for k in 0..d {
            for j in (k..d.saturating_sub(1)).rev() {
                c[j] += delta * c[j + 1];
            }
        }
        c
    }

    pub fn binomial(n: u32, k: u32) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    /// Real roots of `coeffs` strictly inside `(0, h)`, sorted.
    ///
    /// Roots are isolated by subdividing the Bernstein form until the number of
    /// coefficient sign variations (a Descartes bound) is 0 or 1, then refined
    /// by bisection. Clusters that never separate are reported by their midpoint.
    pub fn roots_in(coeffs: &[f64], h: f64) -> Vec<f64> {
        let mut scaled: Vec<f64> = coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| c * h.powi(k as i32))
            .collect();
        let scale = scaled.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        if scale == 0.0 || !scale.is_finite() {
            return Vec::new();
        }
        while scaled.len() > 1 && scaled.last().unwrap().abs() <= 1e-14 * scale {
            scaled.pop();
        }
        let d = scaled.len() - 1;
        let mut out = Vec::new();
        match d {
            0 => {}
            1 => {
                let t = -scaled[0] / scaled[1];
                if t > 0.0 && t < 1.0 {
                    out.push(t);
                }
            }
            _ => {
                let bern: Vec<f64> = (0..=d)
                    .map(|i| {
                        (0..=i)
                            .map(|k| binomial(i as u32, k as u32) / binomial(d as u32, k as u32) * scaled[k])
                            .sum()
                    })
                    .collect();
                isolate(&scaled, &bern, 0.0, 1.0, 1e-15 * scale, 0, &mut out);
            }
        }
        out.sort_by(f64::total_cmp);
        out.into_iter().map(|t| t * h).collect()
    }

    fn sign_variations(bern: &[f64], zero: f64) -> usize {
        let mut last = 0.0_f64;
        let mut count = 0;
        for &b in bern {
            if b.abs() <= zero {
                continue;
            }
            if last != 0.0 && (b > 0.0) != (last > 0.0) {
                count += 1;
            }
            last = b;
        }
        count
    }

    fn split(bern: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let d = bern.len();
        let mut work = bern.to_vec();
        let mut left = Vec::with_capacity(d);
        let mut right = vec![0.0; d];
        for level in 0..d {
            left.push(work[0]);
            right[d - 1 - level] = work[d - 1 - level];
            for j in 0..d - 1 - level {
                work[j] = 0.5 * (work[j] + work[j + 1]);
            }
        }
        (left, right)
    }

    fn isolate(power: &[f64], bern: &[f64], lo: f64, hi: f64, zero: f64, depth: u32, out: &mut Vec<f64>) {
        let variations = sign_variations(bern, zero);
        if variations == 0 {
            return;
        }
        if hi - lo <= super::ROOT_WIDTH || depth > 64 {
            out.push(0.5 * (lo + hi));
            return;
        }
        if variations == 1 {
            let (flo, fhi) = (eval(power, lo), eval(power, hi));
            if flo.signum() * fhi.signum() < 0.0 {
                out.push(bisect(power, lo, hi, flo));
                return;
            }
        }
        let mid = 0.5 * (lo + hi);
        let (left, right) = split(bern);
        if right[0].abs() <= zero {
            out.push(mid);
        }
        isolate(power, &left, lo, mid, zero, depth + 1, out);
        isolate(power, &right, mid, hi, zero, depth + 1, out);
    }

    fn bisect(power: &[f64], mut lo: f64, mut hi: f64, mut flo: f64) -> f64 {
        while hi - lo > super::ROOT_WIDTH * lo.abs().max(1e-3) {
            let mid = 0.5 * (lo + hi);
            let fm = eval(power, mid);
            if fm == 0.0 {
                return mid;
            }
            if (fm > 0.0) == (flo > 0.0) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// A function on `[t_0, t_m]` given by one polynomial per breakpoint interval.
///
/// Piece `i` is `sum_k pieces[i][k] * (c - t_i)^k` and is used on `(t_i, t_{i+1}]`
/// (the first piece also at `t_0`). For continuous curves the convention is
/// irrelevant; for step functions (exponent 0) it yields left limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPiecewise")]
pub struct PiecewisePolynomial {
    breakpoints: Vec<f64>,
    pieces: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawPiecewise {
    breakpoints: Vec<f64>,
    pieces: Vec<Vec<f64>>,
}

impl TryFrom<RawPiecewise> for PiecewisePolynomial {
    type Error = Error;

    fn try_from(raw: RawPiecewise) -> Result<Self> {
        PiecewisePolynomial::new(raw.breakpoints, raw.pieces)
    }
}

/// Location of the smallest and largest value of a piecewise polynomial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrema {
    pub min: f64,
    pub argmin: f64,
    pub max: f64,
    pub argmax: f64,
}

impl PiecewisePolynomial {
    pub fn new(breakpoints: Vec<f64>, pieces: Vec<Vec<f64>>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::Parse("need at least two breakpoints".into()));
        }
        if pieces.len() != breakpoints.len() - 1 {
            return Err(Error::LengthMismatch(format!(
                "{} pieces for {} breakpoints",
                pieces.len(),
                breakpoints.len()
            )));
        }
        if breakpoints.iter().any(|t| !t.is_finite()) || breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Parse("breakpoints must be finite and strictly increasing".into()));
        }
        if pieces.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::Parse("non-finite coefficient".into()));
        }
        let pieces = pieces
            .into_iter()
            .map(|p| if p.is_empty() { vec![0.0] } else { p })
            .collect();
        Ok(Self { breakpoints, pieces })
    }

    pub fn constant(interval: Interval, value: f64) -> Self {
        Self { breakpoints: vec![interval.a(), interval.b()], pieces: vec![vec![value]] }
    }

    /// Piecewise-linear interpolant of `values` at `nodes`.
    pub fn linear_interpolant(nodes: &[f64], values: &[f64]) -> Result<Self> {
        if nodes.len() != values.len() {
            return Err(Error::LengthMismatch("nodes/values".into()));
        }
        let pieces = nodes
            .windows(2)
            .zip(values.windows(2))
            .map(|(t, v)| vec![v[0], (v[1] - v[0]) / (t[1] - t[0])])
            .collect();
        Self::new(nodes.to_vec(), pieces)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[Vec<f64>] {
        &self.pieces
    }

    pub fn interval(&self) -> Interval {
        Interval::new(self.breakpoints[0], *self.breakpoints.last().unwrap())
            .expect("breakpoints are validated")
    }

    pub fn degree(&self) -> usize {
        self.pieces
            .iter()
            .map(|p| p.iter().rposition(|&c| c != 0.0).unwrap_or(0))
            .max()
            .unwrap_or(0)
    }

    pub fn piece_index(&self, c: f64) -> usize {
        let last = self.pieces.len() - 1;
        // first breakpoint >= c, minus one
        let idx = self.breakpoints.partition_point(|&t| t < c);
        idx.saturating_sub(1).min(last)
    }

    pub fn eval(&self, c: f64) -> f64 {
        let i = self.piece_index(c);
        poly::eval(&self.pieces[i], c - self.breakpoints[i])
    }

    pub fn derivative(&self) -> Self {
        Self {
            breakpoints: self.breakpoints.clone(),
            pieces: self.pieces.iter().map(|p| poly::derivative(p)).collect(),
        }
    }

    /// The antiderivative `P` with `P(t_m) = value_at_end`, i.e.
    /// `P(x) = value_at_end - int_x^{t_m} self`.
    pub fn integrate_from_right(&self, value_at_end: f64) -> Self {
        let anti: Vec<Vec<f64>> = self.pieces.iter().map(|p| poly::antiderivative(p)).collect();
        let mut pieces = vec![Vec::new(); anti.len()];
        let mut tail = 0.0; // integral of self over [t_{i+1}, t_m]
        for i in (0..anti.len()).rev() {
            let h = self.breakpoints[i + 1] - self.breakpoints[i];
            let full = poly::eval(&anti[i], h);
            let mut piece = anti[i].clone();
            piece[0] = value_at_end - (tail + full);
            pieces[i] = piece;
            tail += full;
        }
        Self { breakpoints: self.breakpoints.clone(), pieces }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            breakpoints: self.breakpoints.clone(),
            pieces: self.pieces.iter().map(|p| p.iter().map(|c| c * factor).collect()).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, 1.0)
    }

    /// Exact difference on the merged breakpoint grid.
    pub fn subtract(&self, other: &Self) -> Result<Self> {
        self.combine(other, -1.0)
    }

    fn combine(&self, other: &Self, sign: f64) -> Result<Self> {
        let (iv, jv) = (self.interval(), other.interval());
        if !iv.same_as(&jv) {
            return Err(Error::IntervalMismatch(format!(
                "[{}, {}] vs [{}, {}]",
                iv.a(),
                iv.b(),
                jv.a(),
                jv.b()
            )));
        }
        let merge = 1e-14 * iv.width();
        let mut merged: Vec<f64> = self.breakpoints.iter().chain(&other.breakpoints).copied().collect();
        merged.sort_by(f64::total_cmp);
        let mut grid: Vec<f64> = Vec::with_capacity(merged.len());
        for t in merged {
            match grid.last() {
                Some(&last) if t - last <= merge => {}
                _ => grid.push(t),
            }
        }
        // keep the left endpoint's exact value and make the right one exact too
        *grid.last_mut().unwrap() = iv.b();
        if grid.len() < 2 {
            return Err(Error::IntervalMismatch("degenerate merged grid".into()));
        }
        let pieces = grid
            .windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                let i = self.piece_index(mid);
                let j = other.piece_index(mid);
                let p = poly::shift(&self.pieces[i], w[0] - self.breakpoints[i]);
                let q = poly::shift(&other.pieces[j], w[0] - other.breakpoints[j]);
                let len = p.len().max(q.len());
                (0..len)
                    .map(|k| p.get(k).copied().unwrap_or(0.0) + sign * q.get(k).copied().unwrap_or(0.0))
                    .collect()
            })
            .collect();
        Self::new(grid, pieces)
    }

    /// Largest jump between the left and right piece at an interior breakpoint.
    pub fn max_jump(&self) -> f64 {
        (1..self.pieces.len())
            .map(|i| {
                let h = self.breakpoints[i] - self.breakpoints[i - 1];
                let left = poly::eval(&self.pieces[i - 1], h);
                (left - self.pieces[i][0]).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Exact extrema over the closure of every piece: endpoints plus the
    /// real critical points of each piece.
    pub fn extrema(&self) -> Extrema {
        let mut ext = Extrema {
            min: f64::INFINITY,
            argmin: self.breakpoints[0],
            max: f64::NEG_INFINITY,
            argmax: self.breakpoints[0],
        };
        for (i, piece) in self.pieces.iter().enumerate() {
            let t = self.breakpoints[i];
            let h = self.breakpoints[i + 1] - t;
            let crit = poly::roots_in(&poly::derivative(piece), h);
            let candidates = std::iter::once(0.0).chain(crit).chain(std::iter::once(h));
            for s in candidates {
                let v = poly::eval(piece, s);
                let c = if s == h { self.breakpoints[i + 1] } else { t + s };
                if v < ext.min {
                    ext.min = v;
                    ext.argmin = c;
                }
                if v > ext.max {
                    ext.max = v;
                    ext.argmax = c;
                }
            }
        }
        ext
    }

    pub fn sup_abs(&self) -> f64 {
        let e = self.extrema();
        e.min.abs().max(e.max.abs())
    }
}

/// Builds `c -> sum_{x_i < c} p_i (c - x_i)^n` on the distribution's own interval.
pub fn lpm_curve(dist: &DiscreteDistribution, n: u32) -> Result<PiecewisePolynomial> {
    lpm_curve_on(dist, n, dist.interval())
}

/// Same as [`lpm_curve`] on an explicit interval that must contain every atom.
pub fn lpm_curve_on(dist: &DiscreteDistribution, n: u32, interval: Interval) -> Result<PiecewisePolynomial> {
    if n > MAX_EXPONENT {
        return Err(Error::DegreeCapExceeded { n, cap: MAX_EXPONENT });
    }
    if let Some(&x) = dist.atoms().iter().find(|&&x| !interval.contains(x)) {
        return Err(Error::IntervalMismatch(format!(
            "atom {x} outside [{}, {}]",
            interval.a(),
            interval.b()
        )));
    }
    let (a, b) = (interval.a(), interval.b());
    let mut breakpoints = vec![a];
    breakpoints.extend(dist.atoms().iter().copied().filter(|&x| x > a && x < b));
    breakpoints.push(b);

    let binom: Vec<f64> = (0..=n).map(|k| poly::binomial(n, k)).collect();
    let pieces = breakpoints[..breakpoints.len() - 1]
        .iter()
        .map(|&t| {
            let mut coeffs = vec![0.0; n as usize + 1];
            for (x, p) in dist.iter().take_while(|&(x, _)| x <= t) {
                let gap = t - x;
                for k in 0..=n as usize {
                    coeffs[k] += p * gap.powi((n as usize - k) as i32);
                }
            }
            coeffs.iter_mut().zip(&binom).for_each(|(c, b)| *c *= b);
            coeffs
        })
        .collect();
    PiecewisePolynomial::new(breakpoints, pieces)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignVerdict {
    NonnegativeEverywhere,
    ViolatedAt,
}

/// Outcome of a nonnegativity check over an interval or a ray.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignCertificate {
    pub verdict: SignVerdict,
    pub min_value: f64,
    pub argmin: f64,
    pub witness: Option<f64>,
    pub tolerance: f64,
}

impl SignCertificate {
    fn from_min(min_value: f64, argmin: f64, tolerance: f64) -> Self {
        if min_value >= -tolerance {
            Self { verdict: SignVerdict::NonnegativeEverywhere, min_value, argmin, witness: None, tolerance }
        } else {
            Self { verdict: SignVerdict::ViolatedAt, min_value, argmin, witness: Some(argmin), tolerance }
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.verdict == SignVerdict::NonnegativeEverywhere
    }
}

/// `1e-9 * max(1, sup |p|)`.
pub fn default_tolerance(p: &PiecewisePolynomial) -> f64 {
    1e-9 * p.sup_abs().max(1.0)
}

/// Decides `p >= -tolerance` on the whole interval of `p`.
pub fn certify_nonnegative(p: &PiecewisePolynomial, tolerance: f64) -> SignCertificate {
    let ext = p.extrema();
    SignCertificate::from_min(ext.min, ext.argmin, tolerance.max(0.0))
}

/// Decides the sign of `LPM_{n,c}(F) - LPM_{n,c}(G)` for `c` in `[b, inf)`.
///
/// Past `b` every atom lies below the threshold, so the difference is one
/// polynomial in `t = c - b`. Its sign on the ray follows from the leading
/// coefficient and the critical points below a Cauchy bound.
pub fn tail_nonnegative(
    f: &DiscreteDistribution,
    g: &DiscreteDistribution,
    n: u32,
    tolerance: Option<f64>,
) -> Result<SignCertificate> {
    if n > MAX_EXPONENT {
        return Err(Error::DegreeCapExceeded { n, cap: MAX_EXPONENT });
    }
    let iv = f.interval();
    if !iv.same_as(&g.interval()) {
        return Err(Error::IntervalMismatch("distributions live on different intervals".into()));
    }
    let b = iv.b();
    if n == 0 {
        return Ok(SignCertificate::from_min(0.0, b, tolerance.unwrap_or(1e-9)));
    }
    let nn = n as usize;
    let mut coeffs = vec![0.0; nn + 1];
    let mut mags = vec![0.0; nn + 1];
    for k in 0..=nn {
        let binom = poly::binomial(n, k as u32);
        let pw = |x: f64| (b - x).powi((nn - k) as i32);
        let sf: f64 = f.iter().map(|(x, p)| p * pw(x)).sum();
        let sg: f64 = g.iter().map(|(x, p)| p * pw(x)).sum();
        coeffs[k] = binom * (sf - sg);
        mags[k] = binom * (sf + sg);
    }
    for (c, m) in coeffs.iter_mut().zip(&mags) {
        if c.abs() <= 1e-13 * m {
            *c = 0.0;
        }
    }
    let Some(lead) = coeffs.iter().rposition(|&c| c != 0.0) else {
        return Ok(SignCertificate::from_min(0.0, b, tolerance.unwrap_or(1e-9)));
    };
    let coeffs = &coeffs[..=lead];
    let at_zero = coeffs[0];
    if coeffs[lead] < 0.0 && lead > 0 {
        let tol = tolerance.unwrap_or(1e-9 * at_zero.abs().max(1.0));
        let bound = 1.0 + coeffs[..lead].iter().map(|c| (c / coeffs[lead]).abs()).fold(0.0, f64::max);
        let mut t = bound;
        let mut value = poly::eval(coeffs, t);
        for _ in 0..256 {
            if value < -tol {
                break;
            }
            t *= 2.0;
            value = poly::eval(coeffs, t);
        }
        let (min_value, argmin) = if at_zero < value { (at_zero, b) } else { (value, b + t) };
        let mut cert = SignCertificate::from_min(min_value, argmin, tol);
        if value < -tol {
            cert = SignCertificate {
                verdict: SignVerdict::ViolatedAt,
                min_value: value,
                argmin: b + t,
                witness: Some(b + t),
                tolerance: tol,
            };
        }
        return Ok(cert);
    }
    let deriv = poly::derivative(coeffs);
    let mut candidates = vec![0.0];
    if let Some(dlead) = deriv.iter().rposition(|&c| c != 0.0) {
        if dlead > 0 {
            let bound = 1.0 + deriv[..dlead].iter().map(|c| (c / deriv[dlead]).abs()).fold(0.0, f64::max);
            candidates.extend(poly::roots_in(&deriv, bound));
        }
    }
    let (mut min_value, mut argmin, mut sup) = (f64::INFINITY, b, 0.0_f64);
    for t in candidates {
        let v = poly::eval(coeffs, t);
        sup = sup.max(v.abs());
        if v < min_value {
            min_value = v;
            argmin = b + t;
        }
    }
    let tol = tolerance.unwrap_or(1e-9 * sup.max(1.0));
    Ok(SignCertificate::from_min(min_value, argmin, tol))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Interval {
        Interval::unit()
    }

    fn dist(atoms: &[f64], probs: &[f64]) -> DiscreteDistribution {
        DiscreteDistribution::new(atoms, probs, unit(), false).unwrap()
    }

    #[test]
    fn shift_matches_direct_evaluation() {
        let p = [1.0, -2.0, 0.5, 3.0];
        let q = poly::shift(&p, 0.7);
        for &s in &[0.0, 0.3, 1.1] {
            assert!((poly::eval(&q, s) - poly::eval(&p, s + 0.7)).abs() < 1e-12);
        }
    }

    #[test]
    fn roots_of_known_polynomials() {
        // (s - 0.2)(s - 0.5)(s - 0.9)
        let p = [-0.09, 0.73, -1.6, 1.0];
        let r = poly::roots_in(&p, 1.0);
        assert_eq!(r.len(), 3);
        for (got, want) in r.iter().zip([0.2, 0.5, 0.9]) {
            assert!((got - want).abs() < 1e-10, "{r:?}");
        }
        // no real roots
        assert!(poly::roots_in(&[1.0, 0.0, 1.0], 5.0).is_empty());
        // double root is reported once or as a close cluster
        let r = poly::roots_in(&[0.25, -1.0, 1.0], 1.0);
        assert!(!r.is_empty() && r.iter().all(|x| (x - 0.5).abs() < 1e-6), "{r:?}");
    }

    #[test]
    fn point_mass_at_left_endpoint() {
        let d = dist(&[0.0], &[1.0]);
        let curve = lpm_curve(&d, 1).unwrap();
        assert_eq!(curve.pieces().len(), 1);
        for &c in &[0.0, 0.25, 1.0] {
            assert!((curve.eval(c) - c).abs() < 1e-15);
        }
    }

    #[test]
    fn two_point_value_at_one() {
        let d = dist(&[0.0, 1.0], &[0.5, 0.5]);
        let curve = lpm_curve(&d, 2).unwrap();
        assert!((curve.eval(1.0) - 0.5).abs() < 1e-15);
        assert_eq!(curve.eval(0.0), 0.0);
    }

    #[test]
    fn degree_cap() {
        let d = dist(&[0.5], &[1.0]);
        assert!(matches!(lpm_curve(&d, 9), Err(Error::DegreeCapExceeded { .. })));
    }

    #[test]
    fn subtraction_examples() {
        let d = dist(&[0.1, 0.6], &[0.3, 0.7]);
        let p = lpm_curve(&d, 3).unwrap();
        let z = p.subtract(&p).unwrap();
        assert!(z.pieces().iter().flatten().all(|c| c.abs() < 1e-14));

        let low = lpm_curve(&dist(&[0.0], &[1.0]), 1).unwrap();
        let high = lpm_curve(&dist(&[1.0], &[1.0]), 1).unwrap();
        let diff = low.subtract(&high).unwrap();
        for &c in &[0.0, 0.3, 0.99] {
            assert!((diff.eval(c) - c).abs() < 1e-15);
        }

        let three = PiecewisePolynomial::constant(unit(), 3.0);
        let one = PiecewisePolynomial::constant(unit(), 1.0);
        assert_eq!(three.subtract(&one).unwrap().eval(0.4), 2.0);

        let other = PiecewisePolynomial::constant(Interval::new(0.0, 2.0).unwrap(), 1.0);
        assert!(matches!(three.subtract(&other), Err(Error::IntervalMismatch(_))));
    }

    #[test]
    fn certify_examples() {
        let zero = PiecewisePolynomial::constant(unit(), 0.0);
        let cert = certify_nonnegative(&zero, 1e-9);
        assert!(cert.is_nonnegative());
        assert_eq!(cert.min_value, 0.0);

        // (c - 0.5)^2 - 0.25 c^2 = 0.75 c^2 - c + 0.25, minimum -1/12 at c = 2/3
        let p = PiecewisePolynomial::new(vec![0.0, 1.0], vec![vec![0.25, -1.0, 0.75]]).unwrap();
        let cert = certify_nonnegative(&p, 1e-9);
        assert_eq!(cert.verdict, SignVerdict::ViolatedAt);
        let w = cert.witness.unwrap();
        assert!((w - 2.0 / 3.0).abs() < 1e-9);
        assert!((cert.min_value + 1.0 / 12.0).abs() < 1e-12);
        assert!(poly::eval(&p.pieces()[0], 0.75) < -0.078);
    }

    #[test]
    fn certify_theta_lottery_difference() {
        let (f, g) = crate::dist::theta_lottery(0.5, 2, unit()).unwrap();
        let d = lpm_curve(&g, 2).unwrap().subtract(&lpm_curve(&f, 2).unwrap()).unwrap();
        let cert = certify_nonnegative(&d, default_tolerance(&d));
        assert!(cert.is_nonnegative());
        assert!(cert.min_value.abs() < 1e-15);
        assert!(d.eval(1.0).abs() < 1e-15);
    }

    #[test]
    fn tail_examples() {
        let d0 = dist(&[0.0], &[1.0]);
        let d1 = dist(&[1.0], &[1.0]);
        let same = tail_nonnegative(&d0, &d0, 2, None).unwrap();
        assert!(same.is_nonnegative());
        assert_eq!(same.min_value, 0.0);

        let cert = tail_nonnegative(&d0, &d1, 1, None).unwrap();
        assert!(cert.is_nonnegative());
        assert!((cert.min_value - 1.0).abs() < 1e-15);

        let cert = tail_nonnegative(&d1, &d0, 1, None).unwrap();
        assert_eq!(cert.verdict, SignVerdict::ViolatedAt);
        assert!((cert.min_value + 1.0).abs() < 1e-15);
    }

    #[test]
    fn tail_detects_negative_leading_term() {
        // F has smaller mean-square spread below the ray: F = delta_0.5, G = {0, 1}
        let f = dist(&[0.5], &[1.0]);
        let g = dist(&[0.0, 1.0], &[0.5, 0.5]);
        // exponent 2: D(t) = (0.5 + t)^2 - 0.5 (1 + t)^2 - 0.5 t^2 = -0.25
        let cert = tail_nonnegative(&f, &g, 2, None).unwrap();
        assert_eq!(cert.verdict, SignVerdict::ViolatedAt);
        assert!((cert.min_value + 0.25).abs() < 1e-12);
        // exponent 3 grows negative without bound
        let cert = tail_nonnegative(&f, &g, 3, None).unwrap();
        assert_eq!(cert.verdict, SignVerdict::ViolatedAt);
    }

    #[test]
    fn integrate_from_right_inverts_derivative() {
        let p = PiecewisePolynomial::new(vec![0.0, 0.4, 1.0], vec![vec![1.0, 2.0], vec![1.8, -1.0]]).unwrap();
        let anti = p.integrate_from_right(0.5);
        assert!((anti.eval(1.0) - 0.5).abs() < 1e-15);
        assert!(anti.max_jump() < 1e-15);
        let back = anti.derivative();
        for &c in &[0.1, 0.5, 0.9] {
            assert!((back.eval(c) - p.eval(c)).abs() < 1e-14);
        }
    }

    #[test]
    fn json_shape() {
        let p = PiecewisePolynomial::new(vec![0.0, 1.0], vec![vec![1.0, 2.0]]).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"breakpoints":[0.0,1.0],"pieces":[[1.0,2.0]]}"#);
        let back: PiecewisePolynomial = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<PiecewisePolynomial>(r#"{"breakpoints":[1.0,0.0],"pieces":[[1.0]]}"#).is_err());
    }
}
