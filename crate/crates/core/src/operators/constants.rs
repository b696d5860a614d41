use statrs::function::gamma::gamma;
use std::f64::consts::PI;

/// Normalization of the singular-integral form of `(-Δ)^s` consistent with
/// the Fourier multiplier `|ξ|^{2s}`.
pub fn frac_laplacian_constant(d: usize, s: f64) -> f64 {
    let d = d as f64;
    4f64.powf(s) * gamma(d / 2.0 + s) / (PI.powf(d / 2.0) * gamma(-s).abs())
}

/// Normalization of the Riesz kernel `k / |x|^{d-2s}` realizing `(-Δ)^{-s}`.
pub fn riesz_constant(d: usize, s: f64) -> f64 {
    let d = d as f64;
    gamma(d / 2.0 - s) / (4f64.powf(s) * PI.powf(d / 2.0) * gamma(s))
}

/// Composite Simpson rule on `[a, b]` with `panels` (rounded up to even) panels.
pub(crate) fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let panels = panels.max(2) + panels % 2;
    let h = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for k in 1..panels {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

/// `∫ |z|^{-q}` over the cell `[-h/2, h/2]^d`, for `q < d`.
pub(crate) fn cell_integral(d: usize, h: f64, q: f64) -> f64 {
    let a = 0.5 * h;
    match d {
        1 => 2.0 * a.powf(1.0 - q) / (1.0 - q),
        _ => {
            // Polar coordinates over the eight congruent triangles of the square.
            let p = 2.0 - q;
            8.0 * simpson(|t| (a / t.cos()).powf(p) / p, 0.0, PI / 4.0, 512)
        }
    }
}
