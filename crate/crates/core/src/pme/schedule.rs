use crate::error::{Error, Result};

/// `per_decade` logarithmically spaced times per decade from `t_min` to `t_max`, both included.
pub fn log_schedule(t_min: f64, t_max: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(t_min > 0.0 && t_max >= t_min && per_decade > 0) {
        return Err(Error::InvalidParameter(format!(
            "log schedule needs 0 < t_min <= t_max and a positive density, got [{t_min}, {t_max}], {per_decade}"
        )));
    }
    let decades = (t_max / t_min).log10();
    let count = (decades * per_decade as f64).ceil().max(1.0) as usize;
    let mut times: Vec<f64> = (0..count)
        .map(|k| t_min * (t_max / t_min).powf(k as f64 / count as f64))
        .collect();
    times.push(t_max);
    Ok(times)
}

/// `t0, 2t0, 4t0, …` with `count` entries.
pub fn dyadic_schedule(t0: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| t0 * 2f64.powi(k as i32)).collect()
}
