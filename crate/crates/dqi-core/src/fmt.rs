//! Deterministic CSV number formatting: 6 significant digits, plain
//! decimal where readable, scientific for extreme magnitudes.

/// Format `x` with 6 significant digits.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-4..10).contains(&exp) {
        return format!("{x:.5e}");
    }
    // decimals so that total significant digits = 6
    let decimals = (5 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        let t = s.trim_end_matches('0').trim_end_matches('.');
        t.to_string()
    } else {
        s
    }
}
