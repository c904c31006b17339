use num_rational::Ratio;
use num_traits::ToPrimitive;

/// Exact rational used for every ratio statistic the crate reports.
pub type Rational = Ratio<i64>;

/// Renders `value` with `places` fixed decimals, rounding half away from zero
/// in exact arithmetic.
pub fn render_fixed(value: &Rational, places: u32) -> String {
    let scale = 10i64.pow(places);
    let scaled = (*value * Rational::from_integer(scale))
        .round()
        .to_integer();
    let sign = if scaled < 0 { "-" } else { "" };
    let abs = scaled.unsigned_abs();
    let scale = scale as u64;
    if places == 0 {
        format!("{sign}{abs}")
    } else {
        format!(
            "{sign}{}.{:0width$}",
            abs / scale,
            abs % scale,
            width = places as usize
        )
    }
}

pub(crate) fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// Builds `num / den`, reporting `None` when either side does not fit `i64`
/// or the denominator is zero.
pub(crate) fn ratio_u64(num: u64, den: u64) -> Option<Rational> {
    if den == 0 {
        return None;
    }
    Some(Rational::new(
        i64::try_from(num).ok()?,
        i64::try_from(den).ok()?,
    ))
}
