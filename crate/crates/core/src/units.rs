//! Power unit conversions. Gains are stored in dB and converted to linear
//! scale only when SINR is evaluated.

/// dBm to watts.
pub fn dbm_to_watts(p_dbm: f64) -> f64 {
    10f64.powf((p_dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(p_watts: f64) -> f64 {
    10.0 * p_watts.log10() + 30.0
}

/// dB to a dimensionless power ratio.
pub fn db_to_linear(g_db: f64) -> f64 {
    10f64.powf(g_db / 10.0)
}

pub fn linear_to_db(g: f64) -> f64 {
    10.0 * g.log10()
}
