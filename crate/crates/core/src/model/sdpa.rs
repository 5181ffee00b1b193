//! Sparse SDPA (`.dat-s`) writer.
//!
//! SDPA solves `min c^T x  s.t.  sum_i x_i F_i - F_0 >= 0 (PSD)`. Our models
//! maximize, so `c` is the negated linear objective and the objective
//! constant is recorded in a comment. Each PSD block `C + sum x_i A_i`
//! becomes `F_0 = -C`, `F_i = A_i`; linear rows and finite variable bounds
//! share one trailing diagonal block, one diagonal entry per inequality.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{fmt_num, ExportError, Model, Relation};

type Entries = BTreeMap<(usize, usize, usize, usize), f64>;

fn push(entries: &mut Entries, mat: usize, block: usize, i: usize, j: usize, v: f64) {
    if v != 0.0 {
        *entries.entry((mat, block, i, j)).or_insert(0.0) += v;
    }
}

/// Writes the continuous relaxation of `m` (integrality and two-point
/// domains dropped, bounds kept) in sparse SDPA format.
pub fn export_sdpa_format(m: &Model) -> Result<String, ExportError> {
    if !m.objective().quadratic.is_empty() {
        return Err(ExportError::HasQuadraticObjective);
    }
    if m.psd_blocks().is_empty() {
        return Err(ExportError::NoPsdBlock);
    }
    let nvars = m.num_vars();
    let mut entries = Entries::new();

    for (b, block) in m.psd_blocks().iter().enumerate() {
        let blk = b + 1;
        for &(i, j, c) in &block.constant {
            push(&mut entries, 0, blk, i + 1, j + 1, -c);
        }
        for (var, coefs) in &block.terms {
            for &(i, j, c) in coefs {
                push(&mut entries, var + 1, blk, i + 1, j + 1, c);
            }
        }
    }

    // Diagonal block rows: each is `a^T x - b >= 0`, i.e. F_i = a_i, F_0 = b.
    let diag_blk = m.psd_blocks().len() + 1;
    let mut diag = 0usize;
    let mut add_row = |entries: &mut Entries, terms: &[(usize, f64)], rhs: f64, sign: f64| {
        diag += 1;
        for &(i, c) in terms {
            push(entries, i + 1, diag_blk, diag, diag, sign * c);
        }
        push(entries, 0, diag_blk, diag, diag, sign * rhs);
    };
    for c in m.constraints() {
        match c.relation {
            Relation::Ge => add_row(&mut entries, &c.terms, c.rhs, 1.0),
            Relation::Le => add_row(&mut entries, &c.terms, c.rhs, -1.0),
            Relation::Eq => {
                add_row(&mut entries, &c.terms, c.rhs, 1.0);
                add_row(&mut entries, &c.terms, c.rhs, -1.0);
            }
        }
    }
    for (i, v) in m.variables().iter().enumerate() {
        if v.lower.is_finite() {
            add_row(&mut entries, &[(i, 1.0)], v.lower, 1.0);
        }
        if v.upper.is_finite() {
            add_row(&mut entries, &[(i, 1.0)], v.upper, -1.0);
        }
    }

    let mut cost = vec![0.0; nvars];
    for &(i, c) in &m.objective().linear {
        cost[i] -= c;
    }

    let mut out = String::new();
    let _ = writeln!(out, "\"Model {}: maximize {} + sum_i (-c_i) x_i", m.name, fmt_num(m.objective().constant));
    let _ = writeln!(out, "* variables: {}", m.variables().iter().map(|v| v.name.as_str()).collect::<Vec<_>>().join(" "));
    let _ = writeln!(out, "{nvars} = mDIM");
    let nblocks = m.psd_blocks().len() + usize::from(diag > 0);
    let _ = writeln!(out, "{nblocks} = nBLOCK");
    let mut structure: Vec<String> = m.psd_blocks().iter().map(|b| b.order.to_string()).collect();
    if diag > 0 {
        structure.push(format!("-{diag}"));
    }
    let _ = writeln!(out, "{} = bLOCKsTRUCT", structure.join(" "));
    let _ = writeln!(out, "{}", cost.iter().map(|&c| fmt_num(c)).collect::<Vec<_>>().join(" "));
    for ((mat, blk, i, j), v) in entries {
        if v != 0.0 {
            let _ = writeln!(out, "{mat} {blk} {i} {j} {}", fmt_num(v));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Domain, PsdBlock};

    #[test]
    fn one_variable_psd() {
        // max x  s.t.  [[1, x], [x, 1]] >= 0, 0 <= x <= 1
        let mut m = Model::new("toy");
        let x = m.add_var("x", 0.0, 1.0, Domain::Continuous);
        m.add_linear_objective(x, 1.0);
        m.add_psd_block(PsdBlock {
            name: "p".into(),
            order: 2,
            constant: vec![(0, 0, 1.0), (1, 1, 1.0)],
            terms: vec![(x, vec![(0, 1, 1.0)])],
        });
        let text = export_sdpa_format(&m).unwrap();
        assert_eq!(
            text,
            "\"Model toy: maximize 0 + sum_i (-c_i) x_i\n* variables: x\n1 = mDIM\n2 = nBLOCK\n2 -2 = bLOCKsTRUCT\n-1\n\
             0 1 1 1 -1\n0 1 2 2 -1\n0 2 2 2 -1\n1 1 1 2 1\n1 2 1 1 1\n1 2 2 2 -1\n"
        );
    }

    #[test]
    fn rejects_quadratic_and_missing_psd() {
        let mut m = Model::new("q");
        let x = m.add_binary("x");
        assert_eq!(export_sdpa_format(&m), Err(ExportError::NoPsdBlock));
        m.add_quadratic_objective(x, x, 1.0);
        assert_eq!(export_sdpa_format(&m), Err(ExportError::HasQuadraticObjective));
    }
}
