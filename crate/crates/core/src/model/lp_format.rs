//! CPLEX-style LP text writer.

use std::fmt::Write as _;

use super::{fmt_num, Domain, ExportError, Model};

const TERMS_PER_LINE: usize = 6;

struct TermWriter {
    out: String,
    written: usize,
}

impl TermWriter {
    fn new(prefix: &str) -> Self {
        Self {
            out: prefix.to_string(),
            written: 0,
        }
    }

    fn push(&mut self, coef: f64, body: &str) {
        if self.written > 0 && self.written.is_multiple_of(TERMS_PER_LINE) {
            self.out.push_str("\n  ");
        }
        let sign = if coef < 0.0 { "-" } else { "+" };
        if self.written == 0 && sign == "+" {
            let _ = write!(self.out, " {} {body}", fmt_num(coef.abs()));
        } else {
            let _ = write!(self.out, " {sign} {} {body}", fmt_num(coef.abs()));
        }
        self.written += 1;
    }

    fn push_constant(&mut self, c: f64) {
        if self.written == 0 {
            let _ = write!(self.out, " {}", fmt_num(c));
        } else {
            let sign = if c < 0.0 { "-" } else { "+" };
            let _ = write!(self.out, " {sign} {}", fmt_num(c.abs()));
        }
        self.written += 1;
    }
}

/// Writes `m` in LP format. Variables appear in declaration order; the
/// quadratic objective is written as `[ ... ] / 2` with doubled coefficients.
pub fn export_lp_format(m: &Model) -> Result<String, ExportError> {
    if !m.psd_blocks().is_empty() {
        return Err(ExportError::HasPsdBlock);
    }
    if let Some(v) = m.variables().iter().find(|v| v.domain == Domain::TwoPoint) {
        return Err(ExportError::UnsupportedDomain(v.name.clone()));
    }
    let vars = m.variables();
    let obj = m.objective();
    let mut out = String::new();
    let _ = writeln!(out, "\\ Model {}", m.name);
    let _ = writeln!(
        out,
        "\\ {} variables, {} constraints",
        m.num_vars(),
        m.num_constraints()
    );
    out.push_str("Maximize\n");

    let mut w = TermWriter::new(" obj:");
    for &(i, c) in &obj.linear {
        w.push(c, &vars[i].name);
    }
    if obj.constant != 0.0 || (obj.linear.is_empty() && obj.quadratic.is_empty()) {
        w.push_constant(obj.constant);
    }
    if !obj.quadratic.is_empty() {
        w.out.push_str(if w.written == 0 { " [" } else { " + [" });
        let mut q = TermWriter::new("");
        for &(i, j, c) in &obj.quadratic {
            let body = if i == j {
                format!("{} ^ 2", vars[i].name)
            } else {
                format!("{} * {}", vars[i].name, vars[j].name)
            };
            q.push(2.0 * c, &body);
        }
        w.out.push_str(&q.out);
        w.out.push_str(" ] / 2");
    }
    out.push_str(&w.out);
    out.push('\n');

    out.push_str("Subject To\n");
    for c in m.constraints() {
        let mut w = TermWriter::new(&format!(" {}:", c.name));
        for &(i, coef) in &c.terms {
            w.push(coef, &vars[i].name);
        }
        if c.terms.is_empty() {
            w.push(0.0, &vars.first().map(|v| v.name.clone()).unwrap_or_default());
        }
        let _ = writeln!(out, "{} {} {}", w.out, c.relation.symbol(), fmt_num(c.rhs));
    }

    let bounded: Vec<_> = vars.iter().filter(|v| !v.is_binary()).collect();
    if !bounded.is_empty() {
        out.push_str("Bounds\n");
        for v in bounded {
            let _ = writeln!(out, " {} <= {} <= {}", fmt_num(v.lower), v.name, fmt_num(v.upper));
        }
    }
    let binaries: Vec<_> = vars.iter().filter(|v| v.is_binary()).collect();
    if !binaries.is_empty() {
        out.push_str("Binary\n");
        write_name_list(&mut out, binaries.iter().map(|v| v.name.as_str()));
    }
    let generals: Vec<_> = vars
        .iter()
        .filter(|v| v.domain == Domain::Integer && !v.is_binary())
        .collect();
    if !generals.is_empty() {
        out.push_str("General\n");
        write_name_list(&mut out, generals.iter().map(|v| v.name.as_str()));
    }
    out.push_str("End\n");
    Ok(out)
}

fn write_name_list<'a>(out: &mut String, names: impl Iterator<Item = &'a str>) {
    let names: Vec<_> = names.collect();
    for chunk in names.chunks(8) {
        let _ = writeln!(out, " {}", chunk.join(" "));
    }
}
