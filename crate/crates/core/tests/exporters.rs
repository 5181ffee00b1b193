use std::collections::BTreeMap;
use std::path::PathBuf;

use kcut_core::formulations::{build_bqo, build_emilo, build_misdo, build_vmilo, EmiloOptions, MisdoVariant};
use kcut_core::graph::Graph;
use kcut_core::model::{export_lp_format, export_sdpa_format, ExportError, Model};

fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

/// Compares against the stored golden; `KCUT_UPDATE_GOLDENS=1` rewrites it.
fn assert_golden(name: &str, actual: &str) {
    let path = golden_path(name);
    if std::env::var_os("KCUT_UPDATE_GOLDENS").is_some() {
        std::fs::write(&path, actual).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "{name} differs from its golden");
}

fn k3() -> Graph {
    Graph::complete(3).unwrap()
}

#[test]
fn lp_goldens() {
    let bqo = export_lp_format(&build_bqo(&k3(), 2).unwrap()).unwrap();
    assert_golden("bqo_k3_k2.lp", &bqo);
    let vmilo = export_lp_format(&build_vmilo(&k3(), 2).unwrap()).unwrap();
    assert_golden("vmilo_k3_k2.lp", &vmilo);
    // Re-export is byte-identical.
    assert_eq!(bqo, export_lp_format(&build_bqo(&k3(), 2).unwrap()).unwrap());
}

#[test]
fn sdpa_goldens() {
    let m1 = export_sdpa_format(&build_misdo(&k3(), 2, MisdoVariant::I).unwrap()).unwrap();
    assert_golden("misdo1_k3_k2.dat-s", &m1);
    let m2 = export_sdpa_format(&build_misdo(&k3(), 2, MisdoVariant::II).unwrap()).unwrap();
    assert_golden("misdo2_k3_k2.dat-s", &m2);
    assert_eq!(m1, export_sdpa_format(&build_misdo(&k3(), 2, MisdoVariant::I).unwrap()).unwrap());
}

#[test]
fn export_preconditions() {
    let misdo = build_misdo(&k3(), 2, MisdoVariant::I).unwrap();
    assert_eq!(export_lp_format(&misdo), Err(ExportError::HasPsdBlock));
    let bqo = build_bqo(&k3(), 2).unwrap();
    assert_eq!(export_sdpa_format(&bqo), Err(ExportError::HasQuadraticObjective));
    let vmilo = build_vmilo(&k3(), 2).unwrap();
    assert_eq!(export_sdpa_format(&vmilo), Err(ExportError::NoPsdBlock));
}

/// What a minimal reader recovers from LP text.
#[derive(Debug, Default, PartialEq)]
struct ParsedLp {
    variables: usize,
    constraints: usize,
    constant: f64,
    linear: BTreeMap<String, f64>,
    /// Keyed by the name pair in file order, coefficient already halved.
    quadratic: BTreeMap<(String, String), f64>,
}

fn parse_terms(text: &str, lp: &mut ParsedLp) {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let mut i = 0;
    let mut sign = 1.0;
    let mut in_quad = false;
    while i < tokens.len() {
        match tokens[i] {
            "+" => sign = 1.0,
            "-" => sign = -1.0,
            "[" => in_quad = true,
            "]" => {
                in_quad = false;
                i += 2; // "/ 2"
            }
            tok => {
                let (coef, next) = match tok.parse::<f64>() {
                    Ok(c) if i + 1 < tokens.len() && !["+", "-", "]"].contains(&tokens[i + 1]) => (c, i + 1),
                    Ok(c) => {
                        lp.constant += sign * c;
                        i += 1;
                        continue;
                    }
                    Err(_) => (1.0, i),
                };
                if in_quad {
                    // a * b
                    let (a, b) = (tokens[next], tokens[next + 2]);
                    *lp.quadratic.entry((a.into(), b.into())).or_default() += sign * coef / 2.0;
                    i = next + 3;
                } else {
                    *lp.linear.entry(tokens[next].into()).or_default() += sign * coef;
                    i = next + 1;
                }
                sign = 1.0;
                continue;
            }
        }
        i += 1;
    }
}

fn read_lp(text: &str) -> ParsedLp {
    let mut lp = ParsedLp::default();
    let mut section = "";
    let mut objective = String::new();
    let mut names = std::collections::BTreeSet::new();
    for line in text.lines() {
        let t = line.trim();
        if t.starts_with('\\') || t.is_empty() {
            continue;
        }
        match t {
            "Maximize" | "Subject To" | "Bounds" | "Binary" | "General" | "End" => {
                section = match t {
                    "Maximize" => "obj",
                    "Subject To" => "rows",
                    "Bounds" => "bounds",
                    "Binary" | "General" => "names",
                    _ => "end",
                };
                continue;
            }
            _ => {}
        }
        match section {
            "obj" => objective.push_str(&format!(" {}", t.strip_prefix("obj:").unwrap_or(t))),
            "rows" => {
                if t.contains(':') {
                    lp.constraints += 1;
                }
                for tok in t.split_whitespace() {
                    if tok.chars().next().is_some_and(char::is_alphabetic) && !tok.ends_with(':') {
                        names.insert(tok.to_string());
                    }
                }
            }
            "bounds" => {
                for tok in t.split_whitespace().filter(|s| s.chars().next().is_some_and(char::is_alphabetic)) {
                    names.insert(tok.to_string());
                }
            }
            "names" => names.extend(t.split_whitespace().map(String::from)),
            _ => {}
        }
    }
    parse_terms(&objective, &mut lp);
    names.extend(lp.linear.keys().cloned());
    for (a, b) in lp.quadratic.keys() {
        names.insert(a.clone());
        names.insert(b.clone());
    }
    lp.variables = names.len();
    lp
}

fn expected(m: &Model) -> ParsedLp {
    let name = |i: usize| m.variables()[i].name.clone();
    let mut linear = BTreeMap::new();
    for &(j, c) in &m.objective().linear {
        *linear.entry(name(j)).or_default() += c;
    }
    let mut quadratic = BTreeMap::new();
    for &(i, j, c) in &m.objective().quadratic {
        *quadratic.entry((name(i), name(j))).or_default() += c;
    }
    ParsedLp {
        variables: m.num_vars(),
        constraints: m.num_constraints(),
        constant: m.objective().constant,
        linear,
        quadratic,
    }
}

#[test]
fn lp_round_trip() {
    let g = Graph::new(5, [(0, 1, 2.0), (1, 2, -1.5), (2, 3, 0.25), (3, 4, 3.0), (0, 4, 1.0), (1, 3, -2.0)]).unwrap();
    for k in [2, 3] {
        for m in [
            build_bqo(&g, k).unwrap(),
            build_vmilo(&g, k).unwrap(),
            build_emilo(&g, k, EmiloOptions::default()).unwrap(),
        ] {
            let parsed = read_lp(&export_lp_format(&m).unwrap());
            assert_eq!(parsed, expected(&m), "{}", m.name);
        }
    }
}

#[test]
fn documented_counts() {
    let bqo = read_lp(&export_lp_format(&build_bqo(&k3(), 2).unwrap()).unwrap());
    assert_eq!((bqo.variables, bqo.constraints, bqo.quadratic.len()), (6, 3, 6));
    let edge = Graph::new(2, [(0, 1, 1.0)]).unwrap();
    let vmilo = read_lp(&export_lp_format(&build_vmilo(&edge, 2).unwrap()).unwrap());
    assert_eq!((vmilo.variables, vmilo.constraints), (5, 2 + 3 * 2));
}
