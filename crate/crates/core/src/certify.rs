//! Sampling-based certification of the relaxation-strength results.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exact::brute_force_opt;
use crate::formulations::{cut_value, MisdoVariant};
use crate::graph::{gen_instance, Graph, InstanceSpec};
use crate::linalg::{is_psd, SymMatrix};
use crate::polytopes::{
    bilinear_inequality_check, counterexample_emilo_point, counterexample_vmilo_point, lift_y, lift_z, lift_zbar,
    lift_zmatrix, member_emilo, member_misdo, member_vmilo, outer_sum, preimage_search, random_assignment,
    sample_fractional_x, CliqueCheck, FractionalAssignment, Membership, PreimageOutcome,
};
use crate::relaxations::{bqo_objective, multistart_round, round_fractional, DEFAULT_STARTS};

/// Absolute tolerance for linear membership checks.
pub const LINEAR_TOL: f64 = 1e-9;
/// Relative tolerance for PSD checks.
pub const PSD_TOL: f64 = 1e-8;
/// Rounded cut values may fall this far below the fractional objective.
pub const ROUNDING_TOL: f64 = 1e-9;
/// Floor for the bilinear inequality.
pub const BILINEAR_TOL: f64 = 1e-12;
/// Required share of the multistart corpus where rounding finds the optimum.
pub const MULTISTART_SHARE: f64 = 0.95;
pub const MULTISTART_CORPUS: usize = 50;
pub const PREIMAGE_STEP: f64 = 0.02;
pub const PREIMAGE_TOL: f64 = 0.01;

const MAX_WITNESSES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Theorem {
    /// Rounding of fractional BQO points.
    Rounding,
    /// The bilinear inequality on the unit cube.
    Lemma1,
    /// BQO lift inside the V-MILO relaxation, strictly.
    Vmilo,
    /// BQO lift inside the E-MILO relaxation, strictly.
    Emilo,
    /// BQO lift inside both MISDO relaxations.
    Misdo,
}

impl Theorem {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "1" | "rounding" => Some(Theorem::Rounding),
            "lemma1" => Some(Theorem::Lemma1),
            "2" | "vmilo" => Some(Theorem::Vmilo),
            "3" | "emilo" => Some(Theorem::Emilo),
            "4" | "misdo" => Some(Theorem::Misdo),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Theorem::Rounding => "1",
            Theorem::Lemma1 => "lemma1",
            Theorem::Vmilo => "2",
            Theorem::Emilo => "3",
            Theorem::Misdo => "4",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertReport {
    pub theorem: String,
    pub seed: u64,
    /// Sampled points checked.
    pub samples: usize,
    pub passed: usize,
    pub failed: usize,
    /// Largest violation among sampled points (0 when all pass).
    pub worst_violation: f64,
    /// Deterministic checks beyond the sampled ones.
    pub checks: Vec<Check>,
    pub witnesses: Vec<serde_json::Value>,
    pub seconds: f64,
}

impl CertReport {
    fn new(theorem: Theorem, seed: u64) -> Self {
        Self {
            theorem: theorem.name().into(),
            seed,
            samples: 0,
            passed: 0,
            failed: 0,
            worst_violation: 0.0,
            checks: Vec::new(),
            witnesses: Vec::new(),
            seconds: 0.0,
        }
    }

    pub fn ok(&self) -> bool {
        self.failed == 0 && self.checks.iter().all(|c| c.passed)
    }

    fn record(&mut self, violation: f64, witness: impl FnOnce() -> serde_json::Value) {
        self.samples += 1;
        if violation > 0.0 {
            self.failed += 1;
            self.worst_violation = self.worst_violation.max(violation);
            if self.witnesses.len() < MAX_WITNESSES {
                self.witnesses.push(witness());
            }
        } else {
            self.passed += 1;
        }
    }

    fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }
}

/// Splits `total` as evenly as possible over `parts`.
fn share(total: usize, parts: usize, i: usize) -> usize {
    total / parts + usize::from(i < total % parts)
}

fn grid_cases() -> Vec<(usize, usize)> {
    (3..=8).flat_map(|n| (2..=4).map(move |k| (n, k))).collect()
}

pub fn certify(theorem: Theorem, samples: usize, seed: u64) -> CertReport {
    let start = Instant::now();
    let mut r = CertReport::new(theorem, seed);
    match theorem {
        Theorem::Rounding => rounding(&mut r, samples, seed),
        Theorem::Lemma1 => lemma1(&mut r, samples, seed),
        Theorem::Vmilo => vmilo(&mut r, samples, seed),
        Theorem::Emilo => emilo(&mut r, samples, seed),
        Theorem::Misdo => misdo(&mut r, samples, seed),
    }
    r.seconds = start.elapsed().as_secs_f64();
    r
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize) -> Graph {
    let spec = InstanceSpec::Random {
        n,
        p: rng.random_range(0.3..=1.0),
        weight_min: -2,
        weight_max: 4,
    };
    gen_instance(&spec, rng.random()).expect("valid generator parameters")
}

fn rounding(r: &mut CertReport, samples: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let n = rng.random_range(2..=8);
        let k = rng.random_range(2..=4);
        let g = random_graph(&mut rng, n);
        let x = random_assignment(n, k, &mut rng);
        let p = round_fractional(&g, &x).expect("sampled rows lie on the simplex");
        let frac = bqo_objective(&g, &x);
        let cut = cut_value(&g, &p).expect("partition matches graph");
        r.record(frac - cut - ROUNDING_TOL, || {
            serde_json::json!({ "graph": g.to_edge_list(), "x": x.rows(), "fractional": frac, "rounded": cut })
        });
    }

    let mut hits = 0;
    let mut misses = Vec::new();
    for i in 0..MULTISTART_CORPUS {
        let n = rng.random_range(4..=8);
        let k = rng.random_range(2..=4);
        let g = random_graph(&mut rng, n);
        let (best, _) = multistart_round(&g, k, DEFAULT_STARTS, seed.wrapping_add(i as u64)).expect("valid instance");
        let opt = brute_force_opt(&g, k).expect("small instance").0;
        if (best - opt).abs() <= 1e-9 {
            hits += 1;
        } else {
            misses.push(format!("#{i} n={n} k={k}: {best} < {opt}"));
        }
    }
    let share = hits as f64 / MULTISTART_CORPUS as f64;
    r.check(
        "multistart-rounding-finds-optimum",
        share >= MULTISTART_SHARE,
        format!("{hits}/{MULTISTART_CORPUS} optimal; misses: [{}]", misses.join("; ")),
    );
}

fn lemma1(r: &mut CertReport, samples: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for s in 2..=8 {
        for _ in 0..samples {
            let a: Vec<f64> = (0..s).map(|_| rng.random::<f64>()).collect();
            let value = bilinear_inequality_check(&a);
            r.record(-value - BILINEAR_TOL, || serde_json::json!({ "a": a, "value": value }));
        }
        let mut tight = vec![0.0; s];
        tight[0] = 1.0;
        tight[1] = 1.0;
        let value = bilinear_inequality_check(&tight);
        r.check(format!("two-ones-tight-s{s}"), value == 0.0, format!("value {value}"));
    }
    let v = bilinear_inequality_check(&[1.0, 1.0, 1.0]);
    r.check("three-ones", v == 1.0, format!("value {v}"));
}

fn vmilo(r: &mut CertReport, samples: usize, seed: u64) {
    let cases = grid_cases();
    for (i, &(n, k)) in cases.iter().enumerate() {
        let g = Graph::complete(n).expect("n >= 3");
        for x in sample_fractional_x(n, k, seed.wrapping_add(i as u64), share(samples, cases.len(), i)) {
            let y = lift_y(&x, &g);
            let m = member_vmilo(&g, k, &x, &y, LINEAR_TOL);
            // The implied box must hold far tighter than the membership tolerance.
            let outside = y.iter().map(|&v| (-v).max(v - 1.0)).fold(0.0, f64::max);
            let violation = m.witness.as_ref().map_or(0.0, |w| w.amount).max(outside - 1e-12);
            r.record(violation, || {
                serde_json::json!({ "n": n, "k": k, "x": x.rows(), "witness": m.witness })
            });
        }
    }
    for (n, k) in [(3, 2), (3, 4), (5, 3)] {
        let g = Graph::complete(n).expect("n >= 3");
        let (x, y) = counterexample_vmilo_point(&g, k);
        let m = member_vmilo(&g, k, &x, &y, LINEAR_TOL);
        let gaps: Vec<f64> = y.iter().zip(lift_y(&x, &g)).map(|(a, b)| a - b).collect();
        let exact_gap = gaps.iter().all(|&d| d == 0.5);
        r.check(
            format!("counterexample-K{n}-k{k}"),
            m.member && exact_gap,
            format!("member {}, per-edge gap to true lift {:?}", m.member, gaps),
        );
    }
}

fn emilo(r: &mut CertReport, samples: usize, seed: u64) {
    let cases = grid_cases();
    for (i, &(n, k)) in cases.iter().enumerate() {
        for x in sample_fractional_x(n, k, seed.wrapping_add(i as u64), share(samples, cases.len(), i)) {
            let z = lift_z(&x);
            let m = member_emilo(&z, n, k, LINEAR_TOL, CliqueCheck::Enumerate);
            let outside = z.iter().map(|&v| (-v).max(v - 1.0)).fold(0.0, f64::max);
            let violation = m.witness.as_ref().map_or(0.0, |w| w.amount).max(outside - 1e-12);
            r.record(violation, || {
                serde_json::json!({ "n": n, "k": k, "x": x.rows(), "witness": m.witness })
            });
        }
    }
    // At integral points the lifts agree: z = 1 - y on every edge.
    let g = Graph::complete(5).expect("n >= 3");
    let x = &sample_fractional_x(5, 3, seed, 1)[0];
    let consistent = lift_y(x, &g).iter().zip(lift_z(x)).all(|(y, z)| y + z == 1.0);
    r.check("integral-z-equals-one-minus-y", consistent, "K5, k=3");

    for (n, k) in [(3, 2), (4, 2), (4, 3)] {
        let z = counterexample_emilo_point(n, k).expect("n > k");
        let member = member_emilo(&z, n, k, LINEAR_TOL, CliqueCheck::Enumerate).member;
        let outcome = preimage_search(&z, n, k, PREIMAGE_STEP, PREIMAGE_TOL);
        let (passed, detail) = match &outcome {
            Ok(PreimageOutcome::Exhausted { nodes }) => (member, format!("member {member}, grid exhausted after {nodes} nodes")),
            Ok(PreimageOutcome::Found { x, max_error }) => (false, format!("preimage found {:?} (error {max_error})", x.rows())),
            Err(e) => (false, e.to_string()),
        };
        r.check(format!("counterexample-n{n}-k{k}"), passed, detail);
    }
}

fn psd_violation(m: &SymMatrix) -> f64 {
    match is_psd(m, PSD_TOL) {
        Ok(c) if c.psd => 0.0,
        Ok(c) => -c.min_eigenvalue,
        Err(_) => f64::INFINITY,
    }
}

fn misdo(r: &mut CertReport, samples: usize, seed: u64) {
    let cases = grid_cases();
    for (i, &(n, k)) in cases.iter().enumerate() {
        for x in sample_fractional_x(n, k, seed.wrapping_add(i as u64), share(samples, cases.len(), i)) {
            let m1 = member_misdo(&lift_zmatrix(&x), k, MisdoVariant::I, PSD_TOL);
            let m2 = member_misdo(&lift_zbar(&x), k, MisdoVariant::II, PSD_TOL);
            let core = outer_sum(&x).scaled(k as f64).add_scaled(&SymMatrix::ones(n), -1.0);
            let core_violation = psd_violation(&core);
            let violation = [&m1, &m2]
                .iter()
                .filter_map(|m| m.witness.as_ref().map(|w| w.amount))
                .fold(core_violation, f64::max);
            r.record(violation, || point_dump(n, k, &x, &m1, &m2, core_violation));
        }
    }
    let m = member_misdo(&SymMatrix::identity(3), 2, MisdoVariant::I, PSD_TOL);
    r.check("identity-rejected-k2", !m.member, format!("{:?}", m.witness));
}

fn point_dump(n: usize, k: usize, x: &FractionalAssignment, m1: &Membership, m2: &Membership, core: f64) -> serde_json::Value {
    serde_json::json!({
        "n": n,
        "k": k,
        "x": x.rows(),
        "variant_i": m1.witness,
        "variant_ii": m2.witness,
        "uncorrected_psd_violation": core,
    })
}
