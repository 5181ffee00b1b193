//! Liftings of fractional assignments into the auxiliary spaces of the
//! formulations, and membership predicates for their relaxations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::combinatorics::{all_pairs, binomial, for_each_combination, pair_index};
use crate::formulations::{MisdoVariant, Partitioning};
use crate::graph::Graph;
use crate::linalg::{is_psd, SymMatrix};
use crate::lp::{separate_clique_cuts, PairValues, SeparationMode};

/// Row sums must be within this of 1.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Largest simplex grid (points per row) or search-node count for
/// [`preimage_search`].
pub const GRID_LIMIT: u64 = 100_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolytopeError {
    #[error("row {vertex} sums to {sum}, not 1")]
    NotOnSimplex { vertex: usize, sum: f64 },
    #[error("entry ({vertex}, {part}) = {value} is outside [0, 1]")]
    EntryOutOfRange { vertex: usize, part: usize, value: f64 },
    #[error("rows must have k >= 2 entries and agree in length")]
    BadShape,
    #[error("need n > k, got n = {n}, k = {k}")]
    BadDims { n: usize, k: usize },
    #[error("grid step {0} must be in (0, 0.5] and divide 1")]
    BadGridStep(f64),
    #[error("preimage grid exceeds {limit} ({what})")]
    GridTooLarge { what: String, limit: u64 },
}

/// Fractional assignment: `n` rows on the unit simplex of dimension `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionalAssignment {
    n: usize,
    k: usize,
    data: Vec<f64>,
}

impl FractionalAssignment {
    pub fn new(rows: &[Vec<f64>]) -> Result<Self, PolytopeError> {
        let k = rows.first().map_or(2, Vec::len);
        if k < 2 || rows.iter().any(|r| r.len() != k) {
            return Err(PolytopeError::BadShape);
        }
        for (vertex, r) in rows.iter().enumerate() {
            if let Some((part, &value)) = r.iter().enumerate().find(|(_, v)| !(-SIMPLEX_TOL..=1.0 + SIMPLEX_TOL).contains(*v)) {
                return Err(PolytopeError::EntryOutOfRange { vertex, part, value });
            }
            let sum: f64 = r.iter().sum();
            if (sum - 1.0).abs() > SIMPLEX_TOL {
                return Err(PolytopeError::NotOnSimplex { vertex, sum });
            }
        }
        Ok(Self {
            n: rows.len(),
            k,
            data: rows.concat(),
        })
    }

    /// Re-checks the row invariants, e.g. after deserialization.
    pub fn validate(&self) -> Result<(), PolytopeError> {
        if self.k < 2 || self.data.len() != self.n * self.k {
            return Err(PolytopeError::BadShape);
        }
        Self::new(&self.rows()).map(|_| ())
    }

    pub fn integral(p: &Partitioning) -> Self {
        let (n, k) = (p.assignment().len(), p.k());
        let mut data = vec![0.0; n * k];
        for (v, &j) in p.assignment().iter().enumerate() {
            data[v * k + j] = 1.0;
        }
        Self { n, k, data }
    }

    pub fn uniform(n: usize, k: usize) -> Self {
        Self {
            n,
            k,
            data: vec![1.0 / k as f64; n * k],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn get(&self, v: usize, j: usize) -> f64 {
        self.data[v * self.k + j]
    }

    pub fn row(&self, v: usize) -> &[f64] {
        &self.data[v * self.k..(v + 1) * self.k]
    }

    pub(crate) fn set_row_to_vertex(&mut self, v: usize, part: usize) {
        let row = &mut self.data[v * self.k..(v + 1) * self.k];
        row.iter_mut().for_each(|x| *x = 0.0);
        row[part] = 1.0;
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.k).map(<[f64]>::to_vec).collect()
    }

    /// `sum_j x_uj x_vj`.
    pub fn overlap(&self, u: usize, v: usize) -> f64 {
        self.row(u).iter().zip(self.row(v)).map(|(a, b)| a * b).sum()
    }

    /// The integral assignment, when every row is a unit vector.
    pub fn as_partitioning(&self) -> Option<Partitioning> {
        let assignment = (0..self.n)
            .map(|v| {
                let row = self.row(v);
                let j = row.iter().position(|&x| x == 1.0)?;
                row.iter().enumerate().all(|(i, &x)| i == j || x == 0.0).then_some(j)
            })
            .collect::<Option<Vec<_>>>()?;
        Partitioning::new(assignment, self.k).ok()
    }
}

/// `count` assignments: integral, uniform and one-uniform-row corners first,
/// then rows drawn uniformly from the simplex.
pub fn sample_fractional_x(n: usize, k: usize, seed: u64, count: usize) -> Vec<FractionalAssignment> {
    let integral = |v: usize| v % k;
    let mut out = Vec::with_capacity(count);
    let mut corner = FractionalAssignment::uniform(n, k);
    for v in 0..n {
        corner.set_row_to_vertex(v, integral(v));
    }
    out.push(corner.clone());
    out.push(FractionalAssignment::uniform(n, k));
    if n > 0 {
        corner.data[..k].iter_mut().for_each(|x| *x = 1.0 / k as f64);
    }
    out.push(corner);
    out.truncate(count);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while out.len() < count {
        out.push(random_assignment(n, k, &mut rng));
    }
    out
}

/// Rows uniform on the simplex: normalized exponential draws.
pub fn random_assignment(n: usize, k: usize, rng: &mut impl Rng) -> FractionalAssignment {
    let mut data = Vec::with_capacity(n * k);
    for _ in 0..n {
        let draws: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
        let total: f64 = draws.iter().sum();
        data.extend(draws.iter().map(|d| d / total));
    }
    FractionalAssignment { n, k, data }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LiftVariant {
    /// Cut indicators on edges.
    Y,
    /// Same-part indicators on all pairs.
    Z,
    /// Same-part matrix with unit diagonal.
    ZMatrix,
    /// Rescaled same-part matrix `(k Z - e e^T) / (k - 1)`.
    ZbarMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LiftedPoint {
    Y(Vec<f64>),
    Z(Vec<f64>),
    ZMatrix(SymMatrix),
    ZbarMatrix(SymMatrix),
}

pub fn lift_y(x: &FractionalAssignment, g: &Graph) -> Vec<f64> {
    g.edges().iter().map(|e| 1.0 - x.overlap(e.u, e.v)).collect()
}

/// Pair values in [`pair_index`] order.
pub fn lift_z(x: &FractionalAssignment) -> Vec<f64> {
    all_pairs(x.n).map(|(u, v)| x.overlap(u, v)).collect()
}

/// `sum_j x_j x_j^T`, the same-part matrix before the diagonal correction.
pub fn outer_sum(x: &FractionalAssignment) -> SymMatrix {
    SymMatrix::from_fn(x.n, |u, v| x.overlap(u, v))
}

pub fn lift_zmatrix(x: &FractionalAssignment) -> SymMatrix {
    // Off-diagonal overlaps; the diagonal correction makes every diagonal 1.
    SymMatrix::from_fn(x.n, |u, v| if u == v { 1.0 } else { x.overlap(u, v) })
}

pub fn lift_zbar(x: &FractionalAssignment) -> SymMatrix {
    let kf = x.k as f64;
    let z = lift_zmatrix(x);
    SymMatrix::from_fn(x.n, |u, v| (kf * z.get(u, v) - 1.0) / (kf - 1.0))
}

pub fn lift(x: &FractionalAssignment, g: &Graph, variant: LiftVariant) -> LiftedPoint {
    match variant {
        LiftVariant::Y => LiftedPoint::Y(lift_y(x, g)),
        LiftVariant::Z => LiftedPoint::Z(lift_z(x)),
        LiftVariant::ZMatrix => LiftedPoint::ZMatrix(lift_zmatrix(x)),
        LiftVariant::ZbarMatrix => LiftedPoint::ZbarMatrix(lift_zbar(x)),
    }
}

/// A constraint of one of the relaxations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violated {
    Shape { detail: String },
    RowSum { vertex: usize },
    Bound { label: String },
    /// `x_uj - x_vj <= y_uv`.
    Difference { u: usize, v: usize, part: usize },
    /// `x_uj + x_vj + y_uv <= 2`.
    SamePart { u: usize, v: usize, part: usize },
    /// `z_ab + z_bc - z_ac <= 1` with `b` the middle vertex.
    Triangle { a: usize, b: usize, c: usize },
    Clique { members: Vec<usize> },
    Diagonal { vertex: usize },
    Psd { min_eigenvalue: f64, threshold: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub constraint: Violated,
    pub amount: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub member: bool,
    /// Most violated constraint, if any exceeds the tolerance.
    pub witness: Option<Witness>,
}

/// Tracks the largest violation seen.
struct Worst {
    tol: f64,
    best: Option<Witness>,
}

impl Worst {
    fn new(tol: f64) -> Self {
        Self { tol, best: None }
    }

    fn note(&mut self, amount: f64, constraint: impl FnOnce() -> Violated) {
        if amount > self.tol && self.best.as_ref().is_none_or(|w| amount > w.amount) {
            self.best = Some(Witness {
                constraint: constraint(),
                amount,
            });
        }
    }

    fn finish(self) -> Membership {
        Membership {
            member: self.best.is_none(),
            witness: self.best,
        }
    }
}

fn shape_failure(detail: impl Into<String>) -> Membership {
    Membership {
        member: false,
        witness: Some(Witness {
            constraint: Violated::Shape { detail: detail.into() },
            amount: f64::INFINITY,
        }),
    }
}

fn note_box(worst: &mut Worst, value: f64, lo: f64, hi: f64, label: impl FnOnce() -> String) {
    let amount = (lo - value).max(value - hi);
    worst.note(amount, || Violated::Bound { label: label() });
}

/// Membership of `(x, y)` in the continuous V-MILO relaxation.
pub fn member_vmilo(g: &Graph, k: usize, x: &FractionalAssignment, y: &[f64], tol: f64) -> Membership {
    if x.n != g.n() || x.k != k || y.len() != g.m() {
        return shape_failure(format!(
            "x is {}x{}, y has {} entries; expected {}x{k} and {}",
            x.n,
            x.k,
            y.len(),
            g.n(),
            g.m()
        ));
    }
    let mut worst = Worst::new(tol);
    for v in 0..x.n {
        worst.note((x.row(v).iter().sum::<f64>() - 1.0).abs(), || Violated::RowSum { vertex: v });
        for j in 0..k {
            note_box(&mut worst, x.get(v, j), 0.0, 1.0, || format!("x_{v}_{j}"));
        }
    }
    for (e, &yv) in g.edges().iter().zip(y) {
        let (u, v) = (e.u, e.v);
        note_box(&mut worst, yv, 0.0, 1.0, || format!("y_{u}_{v}"));
        for j in 0..k {
            let (a, b) = (x.get(u, j), x.get(v, j));
            worst.note(a - b - yv, || Violated::Difference { u, v, part: j });
            worst.note(b - a - yv, || Violated::Difference { u: v, v: u, part: j });
            worst.note(a + b + yv - 2.0, || Violated::SamePart { u, v, part: j });
        }
    }
    worst.finish()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CliqueCheck {
    /// Every `(k + 1)`-subset.
    Enumerate,
    /// Exact separation oracle with pruning.
    Separate,
}

/// Membership of pair values `z` (in [`pair_index`] order) in the
/// continuous E-MILO relaxation.
pub fn member_emilo(z: &[f64], n: usize, k: usize, tol: f64, cliques: CliqueCheck) -> Membership {
    if z.len() != binomial(n, 2) as usize {
        return shape_failure(format!("z has {} entries, expected C({n}, 2)", z.len()));
    }
    let mut worst = Worst::new(tol);
    for (u, v) in all_pairs(n) {
        note_box(&mut worst, z[pair_index(n, u, v)], 0.0, 1.0, || format!("z_{u}_{v}"));
    }
    let get = |a: usize, b: usize| z[pair_index(n, a.min(b), a.max(b))];
    let vertices: Vec<usize> = (0..n).collect();
    for_each_combination(&vertices, 3, |t| {
        let [u, v, w] = [t[0], t[1], t[2]];
        for (a, b, c) in [(u, v, w), (v, u, w), (u, w, v)] {
            worst.note(get(a, b) + get(b, c) - get(a, c) - 1.0, || Violated::Triangle { a, b, c });
        }
    });
    match cliques {
        CliqueCheck::Enumerate => for_each_combination(&vertices, k + 1, |q| {
            let mass: f64 = q
                .iter()
                .enumerate()
                .flat_map(|(i, &a)| q[i + 1..].iter().map(move |&b| (a, b)))
                .map(|(a, b)| get(a, b))
                .sum();
            worst.note(1.0 - mass, || Violated::Clique { members: q.to_vec() });
        }),
        CliqueCheck::Separate => {
            let values = PairValues::from_pair_vector(n, z);
            let cut = separate_clique_cuts(&values, k, &vertices, SeparationMode::Exact, 1);
            if let Some(c) = cut.into_iter().next() {
                worst.note(1.0 - c.mass, || Violated::Clique { members: c.members });
            }
        }
    }
    worst.finish()
}

/// Membership of a matrix in the MISDO-I (`Z`) or MISDO-II (`Zbar`)
/// relaxation. `tol` bounds linear violations and is the relative PSD
/// tolerance.
pub fn member_misdo(m: &SymMatrix, k: usize, variant: MisdoVariant, tol: f64) -> Membership {
    if k < 2 {
        return shape_failure(format!("k = {k} < 2"));
    }
    let n = m.order();
    let kf = k as f64;
    let lo = match variant {
        MisdoVariant::I => 0.0,
        MisdoVariant::II => -1.0 / (kf - 1.0),
    };
    let mut worst = Worst::new(tol);
    for u in 0..n {
        worst.note((m.get(u, u) - 1.0).abs(), || Violated::Diagonal { vertex: u });
        for v in u + 1..n {
            note_box(&mut worst, m.get(u, v), lo, 1.0, || format!("entry_{u}_{v}"));
        }
    }
    let target = match variant {
        MisdoVariant::I => m.scaled(kf).add_scaled(&SymMatrix::ones(n), -1.0),
        MisdoVariant::II => m.clone(),
    };
    match is_psd(&target, tol) {
        Ok(check) if !check.psd => worst.note(-check.min_eigenvalue, || Violated::Psd {
            min_eigenvalue: check.min_eigenvalue,
            threshold: check.threshold,
        }),
        Ok(_) => {}
        Err(e) => return shape_failure(format!("eigenvalue computation failed: {e}")),
    }
    worst.finish()
}

/// `1 - sum a_i + sum_{i<j} a_i a_j`, nonnegative on `[0, 1]^s`.
pub fn bilinear_inequality_check(a: &[f64]) -> f64 {
    let mut value = 1.0;
    for (i, &ai) in a.iter().enumerate() {
        value -= ai;
        for &aj in &a[i + 1..] {
            value += ai * aj;
        }
    }
    value
}

/// Every row `(0.5, 0.5, 0, ...)` and `y = 1` on every edge: feasible for
/// the V-MILO relaxation while the true lift has `y = 0.5`.
pub fn counterexample_vmilo_point(g: &Graph, k: usize) -> (FractionalAssignment, Vec<f64>) {
    assert!(k >= 2, "k must be at least 2");
    let mut data = vec![0.0; g.n() * k];
    for v in 0..g.n() {
        data[v * k] = 0.5;
        data[v * k + 1] = 0.5;
    }
    (FractionalAssignment { n: g.n(), k, data }, vec![1.0; g.m()])
}

/// Constant pair values `2 / (k (k + 1))`, which make every clique row tight
/// but admit no fractional preimage.
pub fn counterexample_emilo_point(n: usize, k: usize) -> Result<Vec<f64>, PolytopeError> {
    if k < 2 || n <= k {
        return Err(PolytopeError::BadDims { n, k });
    }
    let value = 2.0 / (k * (k + 1)) as f64;
    Ok(vec![value; binomial(n, 2) as usize])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "lowercase")]
pub enum PreimageOutcome {
    Found { x: FractionalAssignment, max_error: f64 },
    Exhausted { nodes: u64 },
}

/// Searches grid points `x` (entries multiples of `grid_step`, rows summing
/// to 1) whose pair overlaps are all within `tol` of `z_target`. Vertex 0's
/// row is taken non-increasing, which loses nothing since parts can be
/// relabeled.
pub fn preimage_search(
    z_target: &[f64],
    n: usize,
    k: usize,
    grid_step: f64,
    tol: f64,
) -> Result<PreimageOutcome, PolytopeError> {
    if k < 2 || z_target.len() != binomial(n, 2) as usize {
        return Err(PolytopeError::BadShape);
    }
    if !(grid_step > 0.0 && grid_step <= 0.5) {
        return Err(PolytopeError::BadGridStep(grid_step));
    }
    let steps = (1.0 / grid_step).round();
    if (steps * grid_step - 1.0).abs() > 1e-9 {
        return Err(PolytopeError::BadGridStep(grid_step));
    }
    let steps = steps as u32;
    let points = binomial(steps as usize + k - 1, k - 1);
    if points > GRID_LIMIT {
        return Err(PolytopeError::GridTooLarge {
            what: format!("{points} grid points per row"),
            limit: GRID_LIMIT,
        });
    }
    let mut grid = Vec::with_capacity(points as usize);
    compositions(steps, k, &mut Vec::with_capacity(k), &mut grid);
    let first: Vec<usize> = (0..grid.len())
        .filter(|&i| grid[i].windows(2).all(|w| w[0] >= w[1]))
        .collect();

    let mut s = Preimage {
        grid: &grid,
        z: z_target,
        n,
        scale: f64::from(steps) * f64::from(steps),
        tol,
        chosen: Vec::with_capacity(n),
        nodes: 0,
    };
    if n == 0 {
        return Ok(PreimageOutcome::Found {
            x: FractionalAssignment { n: 0, k, data: Vec::new() },
            max_error: 0.0,
        });
    }
    for &i in &first {
        s.chosen.push(i);
        if s.extend()? {
            let x = FractionalAssignment {
                n,
                k,
                data: s
                    .chosen
                    .iter()
                    .flat_map(|&i| grid[i].iter().map(|&c| f64::from(c) / f64::from(steps)))
                    .collect(),
            };
            let max_error = lift_z(&x)
                .iter()
                .zip(z_target)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            return Ok(PreimageOutcome::Found { x, max_error });
        }
        s.chosen.pop();
    }
    Ok(PreimageOutcome::Exhausted { nodes: s.nodes })
}

fn compositions(total: u32, parts: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if parts == 1 {
        prefix.push(total);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for c in (0..=total).rev() {
        prefix.push(c);
        compositions(total - c, parts - 1, prefix, out);
        prefix.pop();
    }
}

struct Preimage<'a> {
    grid: &'a [Vec<u32>],
    z: &'a [f64],
    n: usize,
    scale: f64,
    tol: f64,
    chosen: Vec<usize>,
    nodes: u64,
}

impl Preimage<'_> {
    /// Extends `chosen` to a full assignment; on success `chosen` holds it.
    fn extend(&mut self) -> Result<bool, PolytopeError> {
        let v = self.chosen.len();
        if v == self.n {
            return Ok(true);
        }
        for i in 0..self.grid.len() {
            self.nodes += 1;
            if self.nodes > GRID_LIMIT {
                return Err(PolytopeError::GridTooLarge {
                    what: "search nodes".into(),
                    limit: GRID_LIMIT,
                });
            }
            let row = &self.grid[i];
            let fits = self.chosen.iter().enumerate().all(|(u, &r)| {
                let dot: u32 = self.grid[r].iter().zip(row).map(|(a, b)| a * b).sum();
                (f64::from(dot) / self.scale - self.z[pair_index(self.n, u, v)]).abs() <= self.tol
            });
            if fits {
                self.chosen.push(i);
                if self.extend()? {
                    return Ok(true);
                }
                self.chosen.pop();
            }
        }
        Ok(false)
    }
}
