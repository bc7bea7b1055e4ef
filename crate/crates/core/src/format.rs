//! Text serialization helpers shared by the CSV writers.

/// Seventeen significant digits in scientific notation; parses back to the same bits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for x in [
            0.0,
            -0.0,
            1.0 / 3.0,
            2.4265707367386806,
            1e-300,
            f64::MAX,
            f64::INFINITY,
        ] {
            let back: f64 = fmt_f64(x).parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x}");
        }
    }
}
