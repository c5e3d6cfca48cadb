//! Scalar helpers over `libm` so results do not depend on the platform libm.

pub const LN_2: f64 = core::f64::consts::LN_2;
pub const LOG2_E: f64 = core::f64::consts::LOG2_E;

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn ln_1p(x: f64) -> f64 {
    libm::log1p(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn exp_m1(x: f64) -> f64 {
    libm::expm1(x)
}

#[inline]
pub fn log10(x: f64) -> f64 {
    libm::log10(x)
}

#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

#[inline]
pub fn round(x: f64) -> f64 {
    libm::round(x)
}

/// `ln Γ(x)` for `x > 0`.
#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma_r(x).0
}

/// `10^(db/10)`.
#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    powf(10.0, db / 10.0)
}

/// Bits carried in one slot: `W·Δ·log2(1 + g·p)`.
#[inline]
pub fn slot_bits(gain: f64, bandwidth_hz: f64, power_w: f64, slot_s: f64) -> f64 {
    if power_w <= 0.0 || bandwidth_hz <= 0.0 {
        return 0.0;
    }
    bandwidth_hz * slot_s * ln_1p(gain * power_w) / LN_2
}

/// Power needed to carry exactly `bits` in one slot; inverse of [`slot_bits`].
#[inline]
pub fn power_for_bits(gain: f64, bandwidth_hz: f64, bits: f64, slot_s: f64) -> f64 {
    if bits <= 0.0 {
        return 0.0;
    }
    exp_m1(bits * LN_2 / (bandwidth_hz * slot_s)) / gain
}

/// Indicator used by the power model: 1 for strictly positive power, else 0.
#[inline]
pub fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Relative difference `|a - b| / max(|a|, |b|)`, zero when both are zero.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bits_and_power_are_inverse() {
        let p = power_for_bits(2.5, 1e7, 3.3e7, 1.0);
        assert!(rel_diff(slot_bits(2.5, 1e7, p, 1.0), 3.3e7) < 1e-13);
    }

    #[test]
    fn sign_of_zero_is_zero() {
        assert_eq!(sign(0.0), 0.0);
        assert_eq!(sign(-1.0), 0.0);
        assert_eq!(sign(1e-300), 1.0);
    }

    #[test]
    fn small_power_rate_uses_log1p() {
        // log2(1 + 1e-12) computed naively would lose all digits.
        let bits = slot_bits(1.0, 1.0, 1e-12, 1.0);
        assert!(rel_diff(bits, 1e-12 / LN_2) < 1e-9);
    }
}
