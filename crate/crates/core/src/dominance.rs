//! Dominance verdicts from exact LPM-curve certificates.
//!
//! Every entry point takes the LPM exponent explicitly. The degree labels in
//! reports follow the usual conventions: bounded dominance of degree `n`
//! compares exponent-`n` moments on `[a, b]`, while unbounded dominance of
//! degree `n` compares exponent-`(n-1)` moments at every real threshold.

use serde::{Deserialize, Serialize};

use crate::dist::{DiscreteDistribution, Interval};
use crate::error::{Error, Result};
use crate::polyseg::{self, SignCertificate, SignVerdict};
use crate::utility::UtilitySpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderKind {
    /// Unbounded dominance over all real thresholds.
    Sd,
    /// Bounded dominance over thresholds in `[a, b]`.
    Bsd,
    /// A single threshold.
    LpmAt,
}

/// Whether `LPM(F) >= LPM(G)` holds over the order's threshold set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceVerdict {
    /// Human-readable label in degree terms, e.g. `BSD(2,[0,1])`.
    pub order: String,
    pub kind: OrderKind,
    pub exponent: u32,
    pub interval: Interval,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    pub holds: bool,
    pub min_margin: f64,
    pub witness_c: Option<f64>,
    pub tolerance: f64,
    pub certificate: SignCertificate,
}

fn check_tolerance(tolerance: Option<f64>) -> Result<()> {
    match tolerance {
        Some(t) if !t.is_finite() => Err(Error::NumericalFailure(format!("tolerance {t} is not finite"))),
        Some(t) if t < 0.0 => Err(Error::PreconditionViolated(format!("tolerance {t} is negative"))),
        _ => Ok(()),
    }
}

fn verdict(
    kind: OrderKind,
    order: String,
    exponent: u32,
    interval: Interval,
    threshold: Option<f64>,
    certificate: SignCertificate,
) -> Result<DominanceVerdict> {
    if !certificate.min_value.is_finite() {
        return Err(Error::NumericalFailure("non-finite LPM difference".into()));
    }
    Ok(DominanceVerdict {
        order,
        kind,
        exponent,
        interval,
        threshold,
        holds: certificate.is_nonnegative(),
        min_margin: certificate.min_value,
        witness_c: certificate.witness,
        tolerance: certificate.tolerance,
        certificate,
    })
}

/// `LPM_{n,c}(F) - LPM_{n,c}(G)` on `interval`, exactly.
pub fn lpm_difference(
    f: &DiscreteDistribution,
    g: &DiscreteDistribution,
    exponent: u32,
    interval: Interval,
) -> Result<polyseg::PiecewisePolynomial> {
    polyseg::lpm_curve_on(f, exponent, interval)?.subtract(&polyseg::lpm_curve_on(g, exponent, interval)?)
}

/// Bounded dominance: `LPM_{n,c}(F) >= LPM_{n,c}(G)` for every `c` in `interval`.
pub fn check_bsd(
    f: &DiscreteDistribution,
    g: &DiscreteDistribution,
    exponent: u32,
    interval: Interval,
    tolerance: Option<f64>,
) -> Result<DominanceVerdict> {
    check_tolerance(tolerance)?;
    let diff = lpm_difference(f, g, exponent, interval)?;
    let tol = tolerance.unwrap_or_else(|| polyseg::default_tolerance(&diff));
    let cert = polyseg::certify_nonnegative(&diff, tol);
    let label = format!("BSD({exponent},[{},{}])", interval.a(), interval.b());
    verdict(OrderKind::Bsd, label, exponent, interval, None, cert)
}

/// Unbounded dominance: `LPM_{n,c}(F) >= LPM_{n,c}(G)` for every real `c`.
///
/// Below the common support both sides vanish; the interval part is certified
/// piecewise and the ray past the support by [`polyseg::tail_nonnegative`].
pub fn check_sd(
    f: &DiscreteDistribution,
    g: &DiscreteDistribution,
    exponent: u32,
    tolerance: Option<f64>,
) -> Result<DominanceVerdict> {
    check_tolerance(tolerance)?;
    let (fi, gi) = (f.interval(), g.interval());
    let hull = Interval::new(fi.a().min(gi.a()), fi.b().max(gi.b()))?;
    let (f, g) = (f.with_interval(hull)?, g.with_interval(hull)?);
    let diff = lpm_difference(&f, &g, exponent, hull)?;
    let tol = tolerance.unwrap_or_else(|| polyseg::default_tolerance(&diff));
    let inner = polyseg::certify_nonnegative(&diff, tol);
    let tail = polyseg::tail_nonnegative(&f, &g, exponent, Some(tol))?;
    let cert = match (inner.verdict, tail.verdict) {
        (SignVerdict::ViolatedAt, _) => inner,
        (_, SignVerdict::ViolatedAt) => tail,
        _ if tail.min_value < inner.min_value => tail,
        _ => inner,
    };
    verdict(OrderKind::Sd, format!("SD({})", exponent + 1), exponent, hull, None, cert)
}

/// Single threshold: `LPM_{n,c}(F) >= LPM_{n,c}(G)` at `c` only.
pub fn check_lpm_at(
    f: &DiscreteDistribution,
    g: &DiscreteDistribution,
    exponent: u32,
    c: f64,
    tolerance: Option<f64>,
) -> Result<DominanceVerdict> {
    check_tolerance(tolerance)?;
    if !c.is_finite() {
        return Err(Error::Parse(format!("threshold {c} is not finite")));
    }
    let (lf, lg) = (f.lpm(exponent, c), g.lpm(exponent, c));
    let margin = lf - lg;
    let tol = tolerance.unwrap_or(1e-9 * lf.abs().max(lg.abs()).max(1.0));
    let holds = margin >= -tol;
    let cert = SignCertificate {
        verdict: if holds { SignVerdict::NonnegativeEverywhere } else { SignVerdict::ViolatedAt },
        min_value: margin,
        argmin: c,
        witness: (!holds).then_some(c),
        tolerance: tol,
    };
    verdict(OrderKind::LpmAt, format!("LPM({exponent},{c})"), exponent, f.interval(), Some(c), cert)
}

/// `E_G u - E_F u`; positive when `G` is preferred.
pub fn expected_utility_gap(f: &DiscreteDistribution, g: &DiscreteDistribution, u: &UtilitySpec) -> Result<f64> {
    Ok(expected_utility(g, u)? - expected_utility(f, u)?)
}

pub fn expected_utility(d: &DiscreteDistribution, u: &UtilitySpec) -> Result<f64> {
    d.iter().try_fold(0.0, |acc, (x, p)| Ok(acc + p * u.value(x)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::theta_lottery;
    use crate::utility::Descriptor;

    fn unit() -> Interval {
        Interval::unit()
    }

    fn dist(atoms: &[f64], probs: &[f64]) -> DiscreteDistribution {
        DiscreteDistribution::new(atoms, probs, unit(), false).unwrap()
    }

    #[test]
    fn reflexive() {
        let d = dist(&[0.1, 0.4, 0.8], &[0.2, 0.5, 0.3]);
        let v = check_bsd(&d, &d, 3, unit(), None).unwrap();
        assert!(v.holds);
        assert_eq!(v.min_margin, 0.0);
    }

    #[test]
    fn theta_lottery_directions() {
        let (f, g) = theta_lottery(0.5, 2, unit()).unwrap();
        let v = check_bsd(&g, &f, 2, unit(), None).unwrap();
        assert!(v.holds);
        assert!(v.min_margin.abs() < 1e-15);

        let v = check_bsd(&f, &g, 2, unit(), None).unwrap();
        assert!(!v.holds);
        let w = v.witness_c.unwrap();
        assert!(w > 0.5 && w < 1.0);
        assert!((w - 2.0 / 3.0).abs() < 1e-9);
        assert!((v.min_margin + 1.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn sd_examples() {
        let low = dist(&[0.0], &[1.0]);
        let high = dist(&[1.0], &[1.0]);
        assert!(check_sd(&low, &high, 1, None).unwrap().holds);
        assert!(!check_sd(&high, &low, 1, None).unwrap().holds);
        assert!(check_sd(&low, &low, 1, None).unwrap().holds);

        let (f, g) = theta_lottery(0.5, 1, unit()).unwrap();
        assert!(!check_sd(&f, &g, 0, None).unwrap().holds);
        assert!(!check_sd(&g, &f, 0, None).unwrap().holds);
    }

    #[test]
    fn lpm_at_examples() {
        let (f, g) = theta_lottery(0.5, 2, unit()).unwrap();
        let v = check_lpm_at(&f, &g, 1, 1.0, None).unwrap();
        assert!(v.holds);
        assert!((v.min_margin - 0.25).abs() < 1e-15);
        let v = check_lpm_at(&f, &g, 1, 0.25, None).unwrap();
        assert!(!v.holds);
        assert!((v.min_margin + 0.0625).abs() < 1e-15);
        let v = check_lpm_at(&f, &g, 3, 0.0, None).unwrap();
        assert!(v.holds && v.min_margin == 0.0);
    }

    #[test]
    fn utility_gaps() {
        let (f, g) = theta_lottery(0.5, 2, unit()).unwrap();
        let id = UtilitySpec::closed_form(Descriptor::Affine { alpha: 0.0, beta: 1.0 }, unit()).unwrap();
        assert!((expected_utility_gap(&f, &g, &id).unwrap() - 0.25).abs() < 1e-15);
        let sq = UtilitySpec::closed_form(Descriptor::NegPower { n: 2, b: 1.0 }, unit()).unwrap();
        assert!(expected_utility_gap(&f, &g, &sq).unwrap().abs() < 1e-15);
        assert_eq!(expected_utility_gap(&f, &f, &sq).unwrap(), 0.0);
    }

    #[test]
    fn interval_mismatch_and_bad_tolerance() {
        let d = dist(&[0.5], &[1.0]);
        let narrow = Interval::new(0.0, 0.4).unwrap();
        assert!(matches!(check_bsd(&d, &d, 1, narrow, None), Err(Error::IntervalMismatch(_))));
        assert!(matches!(check_bsd(&d, &d, 1, unit(), Some(f64::NAN)), Err(Error::NumericalFailure(_))));
    }

    #[test]
    fn json_fields() {
        let d = dist(&[0.5], &[1.0]);
        let v = check_bsd(&d, &d, 2, unit(), None).unwrap();
        let json = serde_json::to_value(&v).unwrap();
        for key in ["order", "exponent", "interval", "holds", "min_margin", "witness_c"] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }
}
