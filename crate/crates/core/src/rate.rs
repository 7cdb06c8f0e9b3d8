//! Closed-form rates for a primary/secondary pair sharing an interference region.
//!
//! All powers are linear SNRs with unit noise and unit direct gain; rates are in
//! bits per channel use. The secondary transmitter spends a fraction `alpha` of its
//! power relaying the primary's (known) message and the rest on its own message.

use crate::error::{domain, Error, Result};

/// Iteration cap for the balancing bisection.
pub const BISECTION_MAX_ITER: usize = 200;
/// Default rate tolerance for [`balance_alpha`].
pub const DEFAULT_RATE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateParams {
    /// Primary transmit SNR.
    pub p_primary: f64,
    /// Secondary transmit SNR.
    pub p_secondary: f64,
    /// Amplitude gain from the secondary transmitter to the primary receiver.
    pub cross_gain: f64,
}

impl RateParams {
    pub fn new(p_primary: f64, p_secondary: f64, cross_gain: f64) -> Result<Self> {
        let params = RateParams {
            p_primary,
            p_secondary,
            cross_gain,
        };
        params.validate()?;
        Ok(params)
    }

    /// Equal primary and secondary power.
    pub fn symmetric(power: f64, cross_gain: f64) -> Result<Self> {
        Self::new(power, power, cross_gain)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_primary > 0.0 && self.p_primary.is_finite()) {
            return domain(format!(
                "primary power must be positive, got {}",
                self.p_primary
            ));
        }
        if !(self.p_secondary > 0.0 && self.p_secondary.is_finite()) {
            return domain(format!(
                "secondary power must be positive, got {}",
                self.p_secondary
            ));
        }
        if !(0.0..=1.0).contains(&self.cross_gain) {
            return domain(format!(
                "cross gain must lie in [0,1], got {}",
                self.cross_gain
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePair {
    pub alpha: f64,
    pub rate_primary: f64,
    pub rate_secondary: f64,
}

impl RatePair {
    pub fn min_rate(&self) -> f64 {
        self.rate_primary.min(self.rate_secondary)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaResult {
    /// `balanced_rate / base_rate`.
    pub gamma: f64,
    pub alpha_hat: f64,
    pub balanced_rate: f64,
    /// Point-to-point rate of the primary link alone.
    pub base_rate: f64,
}

/// Gaussian point-to-point rate `½·log2(1 + p)`.
pub fn point_to_point_rate(p: f64) -> Result<f64> {
    if !(p > 0.0 && p.is_finite()) {
        return domain(format!("SNR must be positive, got {p}"));
    }
    Ok(0.5 * (1.0 + p).log2())
}

/// Two-switch interweave bound `Pr·log2(1 + P_S/Pr)`, where `Pr` is the
/// probability that both secondary endpoints sense no primary activity.
pub fn two_switch_capacity(p_secondary: f64, prob_both_free: f64) -> Result<f64> {
    if !(p_secondary > 0.0 && p_secondary.is_finite()) {
        return domain(format!(
            "secondary power must be positive, got {p_secondary}"
        ));
    }
    if !(0.0..=1.0).contains(&prob_both_free) {
        return domain(format!(
            "probability must lie in [0,1], got {prob_both_free}"
        ));
    }
    if prob_both_free == 0.0 {
        return Ok(0.0);
    }
    Ok(prob_both_free * (1.0 + p_secondary / prob_both_free).log2())
}

/// Power split that leaves the primary's rate unchanged while the secondary
/// transmits. Zero cross gain needs no assistance, so the split is 0.
pub fn overlay_alpha_star(params: &RateParams) -> Result<f64> {
    params.validate()?;
    let RateParams {
        p_primary: pp,
        p_secondary: ps,
        cross_gain: a,
    } = *params;
    if a == 0.0 {
        return Ok(0.0);
    }
    let root = (1.0 + a * a * ps * (1.0 + pp)).sqrt();
    let ratio = pp.sqrt() * (root - 1.0) / (a * ps.sqrt() * (1.0 + pp));
    let alpha = ratio * ratio;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Numeric(format!("alpha* = {alpha} outside [0,1]")));
    }
    Ok(alpha)
}

/// Largest secondary rate compatible with an unaffected primary.
pub fn overlay_secondary_capacity(params: &RateParams) -> Result<f64> {
    let alpha = overlay_alpha_star(params)?;
    Ok(0.5 * (1.0 + (1.0 - alpha) * params.p_secondary).log2())
}

/// Primary and secondary rates for a given power split.
pub fn achievable_rates(alpha: f64, params: &RateParams) -> Result<RatePair> {
    params.validate()?;
    if !(0.0..=1.0).contains(&alpha) {
        return domain(format!("alpha must lie in [0,1], got {alpha}"));
    }
    Ok(rates_unchecked(alpha, params))
}

fn rates_unchecked(alpha: f64, params: &RateParams) -> RatePair {
    let RateParams {
        p_primary: pp,
        p_secondary: ps,
        cross_gain: a,
    } = *params;
    let coherent = pp.sqrt() + a * (alpha * ps).sqrt();
    let interference = 1.0 + a * a * (1.0 - alpha) * ps;
    RatePair {
        alpha,
        rate_primary: 0.5 * (1.0 + coherent * coherent / interference).log2(),
        rate_secondary: 0.5 * (1.0 + (1.0 - alpha) * ps).log2(),
    }
}

/// Finds the split that equalises the two rates and reports the resulting
/// fraction of the point-to-point rate.
///
/// `R_P` increases and `R_S` decreases in `alpha`, with `R_S(1) = 0`, so the
/// difference has at most one root in `[0,1]`. When the primary already runs
/// slower at `alpha = 0` the boundary is the best balance.
pub fn balance_alpha(params: &RateParams, tol: f64) -> Result<GammaResult> {
    params.validate()?;
    if tol.is_nan() || tol <= 0.0 {
        return domain(format!("tolerance must be positive, got {tol}"));
    }
    let base_rate = point_to_point_rate(params.p_primary)?;
    let finish = |pair: RatePair| {
        let balanced_rate = pair.min_rate();
        GammaResult {
            gamma: balanced_rate / base_rate,
            alpha_hat: pair.alpha,
            balanced_rate,
            base_rate,
        }
    };

    if params.cross_gain == 0.0 {
        let pair = rates_unchecked(0.0, params);
        return Ok(GammaResult {
            gamma: 1.0,
            alpha_hat: 0.0,
            balanced_rate: pair.min_rate(),
            base_rate,
        });
    }

    let gap = |alpha: f64| {
        let p = rates_unchecked(alpha, params);
        p.rate_primary - p.rate_secondary
    };
    if gap(0.0) >= 0.0 {
        return Ok(finish(rates_unchecked(0.0, params)));
    }

    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..BISECTION_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        let g = gap(mid);
        if g.abs() <= tol || hi - lo <= f64::EPSILON {
            return Ok(finish(rates_unchecked(mid, params)));
        }
        if g < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Numeric(format!(
        "bisection did not reach tolerance {tol} in {BISECTION_MAX_ITER} iterations"
    )))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaRow {
    pub cross_gain: f64,
    pub power: f64,
    pub alpha_hat: f64,
    pub gamma: f64,
}

/// Evaluates [`balance_alpha`] with `P_P = P_S = power` over a grid, a-major.
pub fn gamma_sweep(a_grid: &[f64], power_list: &[f64]) -> Result<Vec<GammaRow>> {
    if a_grid.is_empty() || power_list.is_empty() {
        return domain("gamma sweep grids must be non-empty");
    }
    let mut rows = Vec::with_capacity(a_grid.len() * power_list.len());
    for &a in a_grid {
        for &p in power_list {
            let g = balance_alpha(&RateParams::symmetric(p, a)?, DEFAULT_RATE_TOL)?;
            rows.push(GammaRow {
                cross_gain: a,
                power: p,
                alpha_hat: g.alpha_hat,
                gamma: g.gamma,
            });
        }
    }
    Ok(rows)
}

/// Renders sweep rows as CSV with header `a,power,alpha_hat,gamma`.
pub fn gamma_csv(rows: &[GammaRow]) -> String {
    let mut out = String::from("a,power,alpha_hat,gamma\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_sig(r.cross_gain, 6),
            fmt_sig(r.power, 6),
            fmt_sig(r.alpha_hat, 6),
            fmt_sig(r.gamma, 6)
        ));
    }
    out
}

/// `%g`-style formatting with `digits` significant digits.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let digits = digits.max(1);
    // Round first so that e.g. 9.9999999 moves to the next decade.
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        return format!(
            "{mantissa}e{}{:02}",
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        );
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{:.*}", decimals, x)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
