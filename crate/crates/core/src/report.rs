//! Shared CSV formatting.

use std::io::{self, Write};

/// 17 significant digits in scientific notation; round-trips any `f64`.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes the leading `# params: key=value ...` comment line.
pub fn write_meta<W: Write>(out: &mut W, pairs: &[(&str, String)]) -> io::Result<()> {
    write!(out, "# params:")?;
    for (k, v) in pairs {
        write!(out, " {k}={v}")?;
    }
    writeln!(out)
}
