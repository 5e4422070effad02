//! MPS text export for debugging problems against external tools.

use super::{LpProblem, Sense};
use std::io::{self, Write};

/// Write `p` in MPS format. `binary_cols`, when nonempty, marks integer
/// columns with INTORG/INTEND markers so the file round-trips through MILP
/// tools as well.
pub fn write_mps(
    w: &mut impl Write,
    name: &str,
    p: &LpProblem,
    binary_cols: &[bool],
) -> io::Result<()> {
    writeln!(w, "NAME          {name}")?;
    writeln!(w, "ROWS")?;
    writeln!(w, " N  COST")?;
    for (r, row) in p.rows.iter().enumerate() {
        let tag = match row.sense {
            Sense::Le => 'L',
            Sense::Eq => 'E',
            Sense::Ge => 'G',
        };
        writeln!(w, " {}  {}", tag, row_name(p, r))?;
    }

    // Column-major entries.
    let n = p.n_vars();
    let mut entries: Vec<Vec<(String, f64)>> = vec![Vec::new(); n];
    for (j, &c) in p.objective.iter().enumerate() {
        if c != 0.0 {
            entries[j].push(("COST".to_string(), c));
        }
    }
    for (r, row) in p.rows.iter().enumerate() {
        for &(j, v) in &row.coeffs {
            entries[j].push((row_name(p, r), v));
        }
    }

    writeln!(w, "COLUMNS")?;
    let mut in_int = false;
    let mut marker = 0usize;
    for j in 0..n {
        let is_int = binary_cols.get(j).copied().unwrap_or(false);
        if is_int != in_int {
            let kind = if is_int { "'INTORG'" } else { "'INTEND'" };
            writeln!(w, "    MARKER                 'MARKER'                 {kind}")?;
            marker += 1;
            in_int = is_int;
        }
        for (rname, v) in &entries[j] {
            writeln!(w, "    {:<10}{:<10}{}", col_name(p, j), rname, fmt(*v))?;
        }
    }
    if in_int {
        writeln!(w, "    MARKER                 'MARKER'                 'INTEND'")?;
        marker += 1;
    }
    let _ = marker;

    writeln!(w, "RHS")?;
    for (r, row) in p.rows.iter().enumerate() {
        if row.rhs != 0.0 {
            writeln!(w, "    RHS       {:<10}{}", row_name(p, r), fmt(row.rhs))?;
        }
    }

    writeln!(w, "BOUNDS")?;
    for j in 0..n {
        let (lo, hi) = (p.lower[j], p.upper[j]);
        let cn = col_name(p, j);
        if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
            writeln!(w, " FR BND       {cn}")?;
        } else {
            if lo != 0.0 {
                if lo == f64::NEG_INFINITY {
                    writeln!(w, " MI BND       {cn}")?;
                } else {
                    writeln!(w, " LO BND       {:<10}{}", cn, fmt(lo))?;
                }
            }
            if hi != f64::INFINITY {
                writeln!(w, " UP BND       {:<10}{}", cn, fmt(hi))?;
            }
        }
    }
    writeln!(w, "ENDATA")?;
    Ok(())
}

fn row_name(p: &LpProblem, r: usize) -> String {
    p.row_names.get(r).cloned().unwrap_or_else(|| format!("R{r}"))
}

fn col_name(p: &LpProblem, j: usize) -> String {
    p.col_names.get(j).cloned().unwrap_or_else(|| format!("C{j}"))
}

fn fmt(v: f64) -> String {
    format!("{v}")
}
