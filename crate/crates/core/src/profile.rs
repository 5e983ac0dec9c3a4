//! Closed-form frequency power profiles for continuous-domain networks.
//!
//! Continuous-domain filters are described directly by the squared modulus of
//! their frequency response ("power profiles") rather than by taps. The three
//! shapes below are smooth, compactly supported (except `Const`), and have
//! known suprema, which makes networks built from them useful as analytically
//! checkable references.

use serde::{Deserialize, Serialize};

/// Squared-modulus frequency response of a continuous-domain filter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Profile {
    /// Low-pass gate: identically 1 on `|ω| ≤ flat`, then a smooth
    /// `exp(t²/(t² - 1/4))` roll-off over `flat < |ω| < flat + 1/2`
    /// (with `t = |ω| - flat`), and 0 beyond.
    Gate { flat: f64 },
    /// Band-pass pair `F(ω - center) + F(ω + center)` where `F` is the unit
    /// gate of half-width 1/2 (a `Gate` with `flat = 1/2`). For
    /// `center ≥ 1` the two parts have disjoint supports and the peak value
    /// is 1.
    BumpPair { center: f64 },
    /// Constant all-pass response.
    Const { value: f64 },
}

/// The unit gate `F`: 1 on `|ω| ≤ 1/2`, smooth roll-off to 0 at `|ω| = 1`.
fn unit_gate(omega: f64) -> f64 {
    gate(omega, 0.5)
}

/// General gate with flat half-width `flat` and roll-off width 1/2.
fn gate(omega: f64, flat: f64) -> f64 {
    let t = omega.abs() - flat;
    if t <= 0.0 {
        1.0
    } else if t >= 0.5 {
        0.0
    } else {
        // Smooth bump factor: equals 1 at t = 0, decays to 0 at t = 1/2 with
        // all derivatives vanishing at the right endpoint.
        (t * t / (t * t - 0.25)).exp()
    }
}

impl Profile {
    /// Evaluates the power profile at angular frequency `omega`.
    pub fn eval(&self, omega: f64) -> f64 {
        match *self {
            Profile::Gate { flat } => gate(omega, flat),
            Profile::BumpPair { center } => unit_gate(omega - center) + unit_gate(omega + center),
            Profile::Const { value } => value,
        }
    }

    /// End of the support on the positive half-axis, or `None` when the
    /// profile has unbounded support.
    pub fn band_limit(&self) -> Option<f64> {
        match *self {
            Profile::Gate { flat } => Some(flat + 0.5),
            Profile::BumpPair { center } => Some(center.abs() + 1.0),
            Profile::Const { .. } => None,
        }
    }

    /// True when the parameters define a valid profile.
    pub fn is_valid(&self) -> bool {
        match *self {
            Profile::Gate { flat } => flat.is_finite() && flat >= 0.0,
            Profile::BumpPair { center } => center.is_finite() && center >= 0.0,
            Profile::Const { value } => value.is_finite() && value >= 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gate_is_flat_then_decays() {
        let g = Profile::Gate { flat: 0.5 };
        assert_eq!(g.eval(0.0), 1.0);
        assert_eq!(g.eval(0.5), 1.0);
        assert_eq!(g.eval(-0.5), 1.0);
        assert_eq!(g.eval(1.0), 0.0);
        assert_eq!(g.eval(37.0), 0.0);
        // Hand value at |ω| = 3/4: t = 1/4, t²/(t² - 1/4) = -1/3.
        assert_abs_diff_eq!(g.eval(0.75), (-1.0f64 / 3.0).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(g.eval(-0.75), (-1.0f64 / 3.0).exp(), epsilon = 1e-15);
    }

    #[test]
    fn gate_is_monotone_on_the_rolloff() {
        let g = Profile::Gate { flat: 1.5 };
        let mut prev = g.eval(1.5);
        for i in 1..=500 {
            let w = 1.5 + 0.5 * i as f64 / 500.0;
            let v = g.eval(w);
            assert!(v <= prev + 1e-15, "gate must decay on the roll-off");
            prev = v;
        }
        assert_eq!(g.eval(2.0), 0.0);
    }

    #[test]
    fn bump_pair_peaks_at_one_for_separated_centers() {
        let b = Profile::BumpPair { center: 3.5 };
        assert_eq!(b.eval(3.5), 1.0);
        assert_eq!(b.eval(-3.5), 1.0);
        assert_eq!(b.eval(0.0), 0.0);
        assert_eq!(b.band_limit(), Some(4.5));
        // Crossing with the centered unit gate at ω = 3/4 for center 3/2:
        // F(3/4 - 3/2) = F(-3/4) = e^{-1/3}, the other branch is 0.
        let b = Profile::BumpPair { center: 1.5 };
        assert_abs_diff_eq!(b.eval(0.75), (-1.0f64 / 3.0).exp(), epsilon = 1e-15);
    }

    #[test]
    fn adjacent_bump_pairs_meet_at_zero() {
        // Centers 1.5 and 3.5: supports end/start at 2.5 where both vanish.
        let b1 = Profile::BumpPair { center: 1.5 };
        let b2 = Profile::BumpPair { center: 3.5 };
        assert_eq!(b1.eval(2.5), 0.0);
        assert_eq!(b2.eval(2.5), 0.0);
        assert!(b1.eval(2.4) > 0.0);
        assert!(b2.eval(2.6) > 0.0);
    }

    #[test]
    fn validity_rules() {
        assert!(Profile::Gate { flat: 0.0 }.is_valid());
        assert!(!Profile::Gate { flat: -1.0 }.is_valid());
        assert!(!Profile::Const { value: -0.5 }.is_valid());
        assert!(Profile::Const { value: 1.0 }.is_valid());
    }
}
