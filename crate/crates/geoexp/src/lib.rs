//! File formats, replicated Monte Carlo studies and the `geoexp` command-line
//! tool, built on [`geoexp_core`].

pub mod config;
pub mod io;
pub mod study;

pub use geoexp_core as core;

/// Formats `x` with 6 significant digits, in the style of C's `%g`.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').unwrap_or((&sci, "0"));
    let exp: i32 = exp.parse().unwrap_or(0);
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::sig6;

    #[test]
    fn six_significant_digits() {
        for (x, want) in [
            (0.0, "0"),
            (1.0, "1"),
            (3.14159265, "3.14159"),
            (-2.5, "-2.5"),
            (123456.7, "123457"),
            (1234567.0, "1.23457e6"),
            (0.000123456789, "0.000123457"),
            (1.5e-7, "1.5e-7"),
            (9.9999996, "10"),
            (999999.6, "1e6"),
            (f64::INFINITY, "inf"),
        ] {
            assert_eq!(sig6(x), want, "{x}");
        }
    }
}
