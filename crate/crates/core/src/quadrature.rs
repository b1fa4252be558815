//! Uniform-grid quadrature: composite Simpson and its cumulative (prefix) form.

/// Composite Simpson over samples `f[0..=N]` with spacing `h`.
///
/// With an odd number of intervals the last one is closed by the backward
/// parabolic half-panel rule.
pub fn simpson(f: &[f64], h: f64) -> f64 {
    let n = f.len().saturating_sub(1);
    if n == 0 {
        return 0.0;
    }
    if n == 1 {
        return 0.5 * h * (f[0] + f[1]);
    }
    let even = n - n % 2;
    let mut odd_sum = 0.0;
    let mut even_sum = 0.0;
    for i in (1..even).step_by(2) {
        odd_sum += f[i];
    }
    for i in (2..even).step_by(2) {
        even_sum += f[i];
    }
    let mut s = h / 3.0 * (f[0] + 4.0 * odd_sum + 2.0 * even_sum + f[even]);
    if n % 2 == 1 {
        s += h / 12.0 * (-f[n - 2] + 8.0 * f[n - 1] + 5.0 * f[n]);
    }
    s
}

/// Running integral `F[i] = ∫₀^{x_i} f`. Even nodes use composite Simpson;
/// odd nodes add the parabolic half-panel `h/12 (5f₀ + 8f₁ − f₂)` to the
/// preceding even node (or its backward mirror at the final node).
pub fn cumulative(f: &[f64], h: f64) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    cumulative_into(f, h, &mut out);
    out
}

pub fn cumulative_into(f: &[f64], h: f64, out: &mut [f64]) {
    let n = f.len();
    debug_assert_eq!(out.len(), n);
    if n == 0 {
        return;
    }
    out[0] = 0.0;
    if n == 2 {
        out[1] = 0.5 * h * (f[0] + f[1]);
        return;
    }
    let third = h / 3.0;
    let twelfth = h / 12.0;
    let mut acc = 0.0;
    let mut i = 0;
    while i + 2 < n {
        out[i + 1] = acc + twelfth * (5.0 * f[i] + 8.0 * f[i + 1] - f[i + 2]);
        acc += third * (f[i] + 4.0 * f[i + 1] + f[i + 2]);
        out[i + 2] = acc;
        i += 2;
    }
    if i + 1 < n {
        out[i + 1] = acc + twelfth * (-f[i - 1] + 8.0 * f[i] + 5.0 * f[i + 1]);
    }
}
