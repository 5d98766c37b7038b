use crate::error::ChannelError;

/// Accumulates `(delay, power)` pairs into bins of `bin_width_s`.
///
/// Bins are half-open, `[k·w, (k+1)·w)`, so a delay of exactly one bin width
/// lands in bin 1. Powers in the same bin add in linear scale.
pub fn bin_delays(raw_pdp: &[(f64, f64)], bin_width_s: f64) -> Result<Vec<f64>, ChannelError> {
    if !(bin_width_s > 0.0 && bin_width_s.is_finite()) {
        return Err(ChannelError::domain("bin_width_s", bin_width_s, "> 0"));
    }
    let mut bins: Vec<f64> = Vec::new();
    for &(delay, power) in raw_pdp {
        if !(delay >= 0.0 && delay.is_finite()) {
            return Err(ChannelError::domain("delay", delay, "finite and >= 0"));
        }
        if !(power >= 0.0 && power.is_finite()) {
            return Err(ChannelError::domain("power", power, "finite and >= 0"));
        }
        let k = (delay / bin_width_s).floor() as usize;
        if bins.len() <= k {
            bins.resize(k + 1, 0.0);
        }
        bins[k] += power;
    }
    Ok(bins)
}
