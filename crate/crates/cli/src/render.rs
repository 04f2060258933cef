//! Plain-text tables and number formatting for terminal output.

/// Six significant digits, switching to exponent notation for very large or small values.
pub fn sig(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{v:.5e}")
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map(sig).unwrap_or_else(|| "-".into())
}

pub fn vector(v: &[f64]) -> String {
    format!("({})", v.iter().map(|x| sig(*x)).collect::<Vec<_>>().join(", "))
}

/// Left-aligned columns separated by two spaces.
pub fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            s.push_str(cell);
            s.extend(std::iter::repeat_n(' ', w - cell.chars().count()));
        }
        out.push_str(s.trim_end());
        out.push('\n');
    };
    line(header.to_vec());
    for row in rows {
        line(row.iter().map(String::as_str).collect());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(sig(17f64.sqrt()), "4.12311");
        assert_eq!(sig(1.0), "1");
        assert_eq!(sig(-0.25), "-0.25");
        assert_eq!(sig(123456.0), "123456");
        assert_eq!(sig(1234567.0), "1.23457e6");
        assert_eq!(sig(1e-7), "1.00000e-7");
        assert_eq!(sig(0.0), "0");
    }

    #[test]
    fn aligned_columns() {
        let t = table(&["a", "bb"], &[vec!["xyz".into(), "1".into()]]);
        assert_eq!(t, "a    bb\nxyz  1\n");
    }
}
