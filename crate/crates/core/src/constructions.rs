//! Randomized algebraic constructions with retry loops and direct
//! verification.
//!
//! Each construction is driven by a single `seed`. Attempt `i` of a retry
//! loop draws from its own stream ([`rng::trial`]), so an instance can be
//! replayed from the seed alone, independent of thread count. Targets are
//! halved expectations; every report says so in `bound_kind`.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bigraph::{contains_kss_capped, BipartiteGraph, KssWitness};
use crate::geometry::{self, phi_embed, unit_distance_graph, BilinearForm};
use crate::linalg::Vector;
use crate::gf::{find_prime, solve_unit_alpha, FieldCtx};
use crate::mpoly::{domain_size, point_at, point_into, MultiPoly, Point};
use crate::{checked_pow_cap, par, rng, Error, Result, DEFAULT_ENUM_CAP, DEFAULT_SEARCH_CAP};

pub const POLY_RETRIES: u32 = 20;
pub const SUBSAMPLE_RETRIES: u32 = 20;
pub const SHIFT_RETRIES: u32 = 50;

/// Stream offsets keep the retry loops of one construction independent.
const SUBSAMPLE_STREAM: u64 = 1 << 20;
const SHIFT_STREAM: u64 = 2 << 20;
const POINT_STREAM: u64 = 3 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verification {
    VerifiedFree,
    WitnessFound,
    SearchCapped,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Params {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d1: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d2: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_prescribed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_verified: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strategy: Option<String>,
    pub seed: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Retries {
    pub polynomial: u32,
    pub subsample: u32,
    pub shift: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionReport {
    pub construction: String,
    pub params: Params,
    /// What `achieved` counts: edges, incidences or unit distances.
    pub achieved_kind: String,
    pub achieved: u64,
    pub target: f64,
    pub bound_kind: String,
    pub verification: Verification,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<KssWitness>,
    pub retries: Retries,
    pub metrics: BTreeMap<String, u64>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub wall_time_ms: u128,
}

impl ConstructionReport {
    fn new(construction: &str, params: Params, achieved_kind: &str) -> Self {
        Self {
            construction: construction.to_string(),
            params,
            achieved_kind: achieved_kind.to_string(),
            achieved: 0,
            target: 0.0,
            bound_kind: "halved-expectation".to_string(),
            verification: Verification::SearchCapped,
            witness: None,
            retries: Retries::default(),
            metrics: BTreeMap::new(),
            warnings: Vec::new(),
            wall_time_ms: 0,
        }
    }

    pub fn meets_target(&self) -> bool {
        self.achieved as f64 >= self.target
    }
}

/// `K_{s,s}` check folded into a verification outcome.
pub fn verify_kss(g: &BipartiteGraph, s: usize, cap: u64) -> Result<(Verification, Option<KssWitness>)> {
    match contains_kss_capped(g, s, cap) {
        Ok(None) => Ok((Verification::VerifiedFree, None)),
        Ok(Some(w)) => Ok((Verification::WitnessFound, Some(w))),
        Err(Error::Resource(_)) => Ok((Verification::SearchCapped, None)),
        Err(e) => Err(e),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ZeroCountResult {
    pub p: u64,
    #[serde(rename = "D")]
    pub dim: usize,
    pub delta: u32,
    pub trials: usize,
    pub threshold: f64,
    pub successes: usize,
    pub fraction: f64,
    pub mean_zeros: f64,
    /// Zero count of each trial, by trial index.
    pub counts: Vec<u64>,
}

/// Fraction of uniform degree-≤Δ polynomials on `F_p^D` with at least
/// `p^{D−1}/2` zeros.
pub fn zero_count_experiment(p: u64, dim: usize, delta: u32, trials: usize, seed: u64) -> Result<ZeroCountResult> {
    if p < 5 || dim < 3 || delta < 3 {
        return Err(Error::domain(format!("need p ≥ 5, D ≥ 3, Δ ≥ 3 (got p={p}, D={dim}, Δ={delta})")));
    }
    let ctx = FieldCtx::prime(p)?;
    domain_size(p, dim, DEFAULT_ENUM_CAP)?;
    let threshold = (p as f64).powi(dim as i32 - 1) / 2.0;
    let counts = par::map_range(trials, |i| -> Result<u64> {
        let mut r = rng::trial(seed, i as u64);
        let f = MultiPoly::sample_uniform(ctx, dim, delta, &mut r)?;
        f.count_zeros(DEFAULT_ENUM_CAP)
    })
    .into_iter()
    .collect::<Result<Vec<u64>>>()?;
    let successes = counts.iter().filter(|&&c| c as f64 >= threshold).count();
    let mean_zeros = counts.iter().sum::<u64>() as f64 / trials.max(1) as f64;
    Ok(ZeroCountResult {
        p,
        dim,
        delta,
        trials,
        threshold,
        successes,
        fraction: successes as f64 / trials.max(1) as f64,
        mean_zeros,
        counts,
    })
}

/// `G_0` on `F_p^{D1} × F_p^{D2}`: `x ~ y` iff `f(x, y) = 0`, with `x` the
/// first `d1` variables. Vertices are indexed lexicographically.
pub fn algebraic_graph(f: &MultiPoly, d1: usize, cap: u64) -> Result<BipartiteGraph> {
    let d2 = f.nvars().checked_sub(d1).filter(|&d2| d2 > 0 && d1 > 0).ok_or_else(|| {
        Error::domain(format!("cannot split {} variables as {d1} + rest", f.nvars()))
    })?;
    let p = f.ctx().p();
    let na = domain_size(p, d1, cap)?;
    let nb = domain_size(p, d2, cap)?;
    if (na as u64).saturating_mul(nb as u64) > cap {
        return Err(Error::resource(format!("{na}×{nb} graph exceeds cap {cap}")));
    }
    let cols = par::map_range(nb, |j| -> Result<fixedbitset::FixedBitSet> {
        let q = point_at(p, d2, j as u64);
        let ev = f.bivariate_section(&q)?.evaluator();
        let mut s = ev.scratch();
        let mut x = vec![0u32; d1];
        let mut col = fixedbitset::FixedBitSet::with_capacity(na);
        for i in 0..na {
            point_into(p, i as u64, &mut x);
            if ev.eval(&x, &mut s) == 0 {
                col.insert(i);
            }
        }
        Ok(col)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(BipartiteGraph::from_rows(na, cols).transpose())
}

#[derive(Clone, Debug)]
pub struct AlgebraicGraphInstance {
    pub poly: MultiPoly,
    pub d1: usize,
    /// Lexicographic indices (into `F_p^{D1}` / `F_p^{D2}`) of the kept vertices.
    pub a_index: Vec<usize>,
    pub b_index: Vec<usize>,
    pub base_edges: usize,
    pub graph: BipartiteGraph,
    pub report: ConstructionReport,
}

impl AlgebraicGraphInstance {
    pub fn a_points(&self) -> Vec<Point> {
        let p = self.poly.ctx().p();
        self.a_index.iter().map(|&i| point_at(p, self.d1, i as u64)).collect()
    }

    pub fn b_points(&self) -> Vec<Point> {
        let p = self.poly.ctx().p();
        let d2 = self.poly.nvars() - self.d1;
        self.b_index.iter().map(|&i| point_at(p, d2, i as u64)).collect()
    }

    /// Rebuilds the graph from the polynomial and point lists and re-runs
    /// the `K_{s,s}` check; true iff both agree with the report.
    pub fn verify(&self) -> Result<bool> {
        let a = self.a_points();
        let b = self.b_points();
        let mut g = BipartiteGraph::new(a.len(), b.len());
        let mut xy = vec![0u32; self.poly.nvars()];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                xy[..self.d1].copy_from_slice(x);
                xy[self.d1..].copy_from_slice(y);
                if self.poly.eval_res(&xy) == 0 {
                    g.add_edge(i, j)?;
                }
            }
        }
        let s = self.report.params.s_verified.unwrap_or(1);
        let (v, _) = verify_kss(&g, s, DEFAULT_SEARCH_CAP)?;
        Ok(g == self.graph && g.edge_count() as u64 == self.report.achieved && v == self.report.verification)
    }
}

/// Random algebraic `K_{s,s}`-free graph with `m × n` vertices.
///
/// Samples `f` of degree ≤ `(D1+D2)²` until `G_0` has at least
/// `p^{D1+D2−1}/2` edges and no `K_{s,s}`, then samples `m`- and
/// `n`-subsets until the induced graph has at least `mn/(2p)` edges.
/// `s` defaults to `D1 + D2`.
pub fn random_algebraic_graph(
    p: u64,
    d1: usize,
    d2: usize,
    m: usize,
    n: usize,
    s: Option<usize>,
    seed: u64,
) -> Result<AlgebraicGraphInstance> {
    random_algebraic_graph_capped(p, d1, d2, m, n, s, seed, DEFAULT_SEARCH_CAP)
}

#[allow(clippy::too_many_arguments)]
pub fn random_algebraic_graph_capped(
    p: u64,
    d1: usize,
    d2: usize,
    m: usize,
    n: usize,
    s: Option<usize>,
    seed: u64,
    cap: u64,
) -> Result<AlgebraicGraphInstance> {
    let start = Instant::now();
    let ctx = FieldCtx::prime(p)?;
    if d1 == 0 || d2 == 0 {
        return Err(Error::domain("D1 and D2 must be positive"));
    }
    let dsum = d1 + d2;
    let delta = (dsum * dsum) as u32;
    let s_prescribed = dsum;
    let s = s.unwrap_or(s_prescribed);
    if s == 0 {
        return Err(Error::domain("s must be positive"));
    }
    let na = domain_size(p, d1, DEFAULT_ENUM_CAP)?;
    let nb = domain_size(p, d2, DEFAULT_ENUM_CAP)?;
    if m == 0 || n == 0 || m > na || n > nb {
        return Err(Error::domain(format!("need 1 ≤ m ≤ p^D1 = {na} and 1 ≤ n ≤ p^D2 = {nb}")));
    }
    let params = Params {
        p: Some(p),
        d1: Some(d1),
        d2: Some(d2),
        delta: Some(delta),
        s_prescribed: Some(s_prescribed as u64),
        s_verified: Some(s),
        m: Some(m),
        n: Some(n),
        seed,
        ..Params::default()
    };
    let mut report = ConstructionReport::new("random-algebraic-graph", params, "edges");
    if (s * s) as f64 > (delta as f64).min((p as f64).sqrt()) {
        report.warnings.push(format!(
            "s² = {} exceeds min(Δ, √p) = {:.3}; the independence heuristic behind the K_{{s,s}} bound does not apply at this scale",
            s * s,
            (delta as f64).min((p as f64).sqrt())
        ));
    }
    let base_target = (p as f64).powi(dsum as i32 - 1) / 2.0;
    report.metrics.insert("base_vertices_a".into(), na as u64);
    report.metrics.insert("base_vertices_b".into(), nb as u64);

    // polynomial retries
    let mut best: Option<(usize, ConstructionReport)> = None;
    let mut chosen = None;
    for attempt in 1..=POLY_RETRIES {
        let mut r = rng::trial(seed, attempt as u64);
        let f = MultiPoly::sample_uniform(ctx, dsum, delta, &mut r)?;
        let g0 = algebraic_graph(&f, d1, cap)?;
        let e0 = g0.edge_count();
        let dense = e0 as f64 >= base_target;
        let (v, w) = if dense { verify_kss(&g0, s, cap)? } else { (Verification::SearchCapped, None) };
        if v == Verification::SearchCapped && dense {
            return Err(Error::resource(format!("K_{{{s},{s}}} check on G_0 exceeded the search cap")));
        }
        let mut attempt_report = report.clone();
        attempt_report.retries.polynomial = attempt;
        attempt_report.achieved = e0 as u64;
        attempt_report.target = base_target;
        attempt_report.verification = v;
        attempt_report.witness = w;
        if dense && v == Verification::VerifiedFree {
            report.retries.polynomial = attempt;
            chosen = Some((f, g0));
            break;
        }
        if best.as_ref().is_none_or(|(b, _)| e0 > *b) {
            best = Some((e0, attempt_report));
        }
    }
    let Some((f, g0)) = chosen else {
        return Err(Error::Construction {
            attempts: POLY_RETRIES,
            reason: format!("no polynomial gave e(G_0) ≥ {base_target} with G_0 K_{{{s},{s}}}-free"),
            best: best.map(|(_, r)| Box::new(r)),
        });
    };
    let base_edges = g0.edge_count();
    report.metrics.insert("base_edges".into(), base_edges as u64);
    report.target = (m * n) as f64 / (2.0 * p as f64);

    // subsample retries
    let (a_index, b_index, graph) = if m == na && n == nb {
        ((0..na).collect(), (0..nb).collect(), g0)
    } else {
        let mut found = None;
        let mut best_e = 0;
        for attempt in 1..=SUBSAMPLE_RETRIES {
            let mut r = rng::trial(seed, SUBSAMPLE_STREAM + attempt as u64);
            let mut a = index::sample(&mut r, na, m).into_vec();
            let mut b = index::sample(&mut r, nb, n).into_vec();
            a.sort_unstable();
            b.sort_unstable();
            let g = g0.induced(&a, &b);
            let e = g.edge_count();
            best_e = best_e.max(e);
            if e as f64 >= report.target {
                report.retries.subsample = attempt;
                found = Some((a, b, g));
                break;
            }
        }
        match found {
            Some(x) => x,
            None => {
                let mut r = report.clone();
                r.retries.subsample = SUBSAMPLE_RETRIES;
                r.achieved = best_e as u64;
                return Err(Error::Construction {
                    attempts: SUBSAMPLE_RETRIES,
                    reason: format!("no subsample reached mn/(2p) = {}", report.target),
                    best: Some(Box::new(r)),
                });
            }
        }
    };
    let (v, w) = verify_kss(&graph, s, cap)?;
    report.achieved = graph.edge_count() as u64;
    report.verification = v;
    report.witness = w;
    report.wall_time_ms = start.elapsed().as_millis();
    Ok(AlgebraicGraphInstance { poly: f, d1, a_index, b_index, base_edges, graph, report })
}

#[derive(Clone, Debug)]
pub struct PointVarietyInstance {
    pub graph: AlgebraicGraphInstance,
    pub points: Vec<Point>,
    /// `f_q` for each `q ∈ Q`; `V(f_q)` is the emitted hypersurface.
    pub varieties: Vec<MultiPoly>,
    pub incidences: u64,
    /// Sections with `f_q ≡ 0`, whose zero set is all of `F_p^D`.
    pub degenerate_sections: usize,
    /// Nonzero sections violating `|V(f_q)| ≤ deg(f_q) · p^{D−1}`.
    pub point_bound_violations: usize,
    pub report: ConstructionReport,
}

impl PointVarietyInstance {
    /// Recounts incidences from the emitted points and polynomials.
    pub fn verify(&self) -> bool {
        count_incidences(&self.points, &self.varieties) == self.incidences && self.incidences >= self.graph.report.achieved
    }
}

fn count_incidences(points: &[Point], varieties: &[MultiPoly]) -> u64 {
    par::map_range(varieties.len(), |j| {
        let ev = varieties[j].evaluator();
        let mut s = ev.scratch();
        points.iter().filter(|x| ev.eval(x, &mut s) == 0).count() as u64
    })
    .into_iter()
    .sum()
}

/// Largest `r` with `r^k ≤ x`.
fn int_root(x: u64, k: u32) -> u64 {
    let mut r = (x as f64).powf(1.0 / k as f64).round() as u64;
    while r > 0 && r.checked_pow(k).is_none_or(|v| v > x) {
        r -= 1;
    }
    while (r + 1).checked_pow(k).is_some_and(|v| v <= x) {
        r += 1;
    }
    r
}

/// Points of `F_p^D` against hypersurfaces `V(f_q)` from a random algebraic
/// graph on `F_p^D × F_p^{D'}`, `D' = ⌈αD⌉`, `n = ⌊m^α⌋`.
///
/// `p` is the least prime above `⌊m^{1/D}⌋`. The incidence graph is checked
/// for `K_{s,s}` with `s = (D + D')²` unless `s` is given. The graph itself
/// is checked at `D + D'`.
pub fn point_variety_instance(m: usize, alpha: f64, dim: usize, s: Option<usize>, seed: u64) -> Result<PointVarietyInstance> {
    let start = Instant::now();
    if m < 2 || dim == 0 || !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::domain("need m ≥ 2, D ≥ 1 and α > 0"));
    }
    let root = int_root(m as u64, dim as u32);
    let p = find_prime(root.max(2), None)?;
    let d2 = ((alpha * dim as f64) - 1e-9).ceil().max(1.0) as usize;
    let n = ((m as f64).powf(alpha) + 1e-9).floor() as usize;
    let s_inc = s.unwrap_or((dim + d2) * (dim + d2));

    let inst = random_algebraic_graph(p, dim, d2, m, n, None, seed)?;
    let points = inst.a_points();
    let varieties: Vec<MultiPoly> =
        inst.b_points().iter().map(|q| inst.poly.bivariate_section(q)).collect::<Result<_>>()?;
    let incidences = count_incidences(&points, &varieties);

    let pd1 = checked_pow_cap(p, dim - 1, DEFAULT_ENUM_CAP).ok_or_else(|| Error::resource("p^(D−1) too large"))?;
    let mut degenerate = 0;
    let mut violations = 0;
    for f in &varieties {
        match f.degree() {
            None => degenerate += 1,
            Some(deg) => {
                if f.count_zeros(DEFAULT_ENUM_CAP)? > deg as u64 * pd1 {
                    violations += 1;
                }
            }
        }
    }

    let mut report = ConstructionReport::new(
        "point-variety",
        Params {
            p: Some(p),
            d1: Some(dim),
            d2: Some(d2),
            delta: inst.report.params.delta,
            s_prescribed: Some(((dim + d2) * (dim + d2)) as u64),
            s_verified: Some(s_inc),
            m: Some(m),
            n: Some(n),
            alpha: Some(alpha),
            seed,
            ..Params::default()
        },
        "incidences",
    );
    report.achieved = incidences;
    report.target = (m * n) as f64 / (2.0 * p as f64);
    report.retries = inst.report.retries.clone();
    report.warnings = inst.report.warnings.clone();
    if p as f64 > 2.0 * (m as f64).powf(1.0 / dim as f64) {
        report.warnings.push(format!("p = {p} lies above 2·m^(1/D)"));
    }
    if degenerate > 0 {
        report.warnings.push(format!("{degenerate} sections vanish identically"));
    }
    report.metrics.insert("graph_edges".into(), inst.report.achieved);
    report.metrics.insert("degenerate_sections".into(), degenerate as u64);
    report.metrics.insert("point_bound_violations".into(), violations as u64);
    let (v, w) = verify_kss(&inst.graph, s_inc, DEFAULT_SEARCH_CAP)?;
    report.verification = v;
    report.witness = w;
    report.wall_time_ms = start.elapsed().as_millis();
    Ok(PointVarietyInstance {
        graph: inst,
        points,
        varieties,
        incidences,
        degenerate_sections: degenerate,
        point_bound_violations: violations,
        report,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvasiveStrategy {
    MapImage,
    Random,
}

impl EvasiveStrategy {
    pub fn name(self) -> &'static str {
        match self {
            EvasiveStrategy::MapImage => "map-image",
            EvasiveStrategy::Random => "random",
        }
    }
}

/// `p^{d−k}` points of `F_p^d`.
///
/// `MapImage` takes the graph `{(y, g_1(y), …, g_k(y))}` over
/// `y ∈ F_p^{d−k}` with `g_i(y) = Σ_j y_j^{2i+1}`; `Random` takes a uniform
/// subset. Neither is certified evasive.
pub fn evasive_set_generate<R: Rng + ?Sized>(
    p: u64,
    d: usize,
    k: usize,
    strategy: EvasiveStrategy,
    rng: &mut R,
) -> Result<Vec<Point>> {
    let ctx = FieldCtx::prime(p)?;
    if k >= d {
        return Err(Error::domain(format!("need k < d (k={k}, d={d})")));
    }
    let size = domain_size(p, d - k, DEFAULT_ENUM_CAP)?;
    match strategy {
        EvasiveStrategy::MapImage => Ok((0..size as u64)
            .map(|i| {
                let mut x = point_at(p, d - k, i);
                for e in 1..=k {
                    let g = x[..d - k]
                        .iter()
                        .fold(0u32, |acc, &y| ctx.add_res(acc, ctx.pow_res(y, 2 * e as u64 + 1)));
                    x.push(g);
                }
                x
            })
            .collect()),
        EvasiveStrategy::Random => {
            let total = domain_size(p, d, DEFAULT_ENUM_CAP)?;
            let mut idx = index::sample(rng, total, size).into_vec();
            idx.sort_unstable();
            Ok(idx.into_iter().map(|i| point_at(p, d, i as u64)).collect())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineAudit {
    pub max_points_on_line: usize,
    pub lines_checked: u64,
    pub direction: Point,
    pub through: Point,
}

/// Exhaustive maximum of `|L ∩ U|` over all lines `L ⊂ F_p^d`.
pub fn line_intersection_audit(points: &[Point], p: u64, d: usize) -> Result<LineAudit> {
    let total = domain_size(p, d, DEFAULT_ENUM_CAP)?;
    let ctx = FieldCtx::prime(p)?;
    // directions normalized to leading coordinate 1
    let dirs: Vec<Point> = (1..total as u64)
        .map(|i| point_at(p, d, i))
        .filter(|v| v.iter().find(|&&c| c != 0) == Some(&1))
        .collect();
    let best = par::map_range(dirs.len(), |di| {
        let v = &dirs[di];
        let pc = v.iter().position(|&c| c != 0).expect("nonzero");
        let mut groups: BTreeMap<Point, (usize, Point)> = BTreeMap::new();
        for x in points {
            let t = x[pc];
            let rep: Point = x.iter().zip(v).map(|(&a, &b)| ctx.sub_res(a, ctx.mul_res(t, b))).collect();
            groups.entry(rep).or_insert((0, x.clone())).0 += 1;
        }
        let (cnt, x) = groups.into_values().max_by_key(|(c, _)| *c).unwrap_or((0, vec![0; d]));
        (cnt, v.clone(), x)
    });
    let lines_checked = dirs.len() as u64 * (total as u64 / p);
    let (max, direction, through) = best
        .into_iter()
        .fold((0, vec![0; d], vec![0; d]), |acc, b| if b.0 > acc.0 { b } else { acc });
    Ok(LineAudit { max_points_on_line: max, lines_checked, direction, through })
}

#[derive(Clone, Debug)]
pub struct UnitDistanceOptions {
    pub strategy: EvasiveStrategy,
    /// `K_{s,s}` order checked on the final graph.
    pub s: usize,
    /// Biclique scan runs `s = 1, 2, …` up to this bound.
    pub scan_max: usize,
    pub cap: u64,
}

impl Default for UnitDistanceOptions {
    fn default() -> Self {
        Self { strategy: EvasiveStrategy::MapImage, s: 4, scan_max: 8, cap: DEFAULT_SEARCH_CAP }
    }
}

#[derive(Clone, Debug)]
pub struct UnitDistanceInstance {
    pub p: u64,
    pub d: usize,
    /// `⟨·,·⟩_d` over `F_p`.
    pub form: BilinearForm,
    pub u: Vec<Vector>,
    pub shift: Vector,
    /// Final point set over `F_p` (before any embedding).
    pub points: Vec<Vector>,
    /// `φ`-images in `F_{p^2}^d` when `d ≡ 1 (mod 4)`.
    pub embedded: Option<Vec<Vector>>,
    pub unit_distances: u64,
    /// Ordered `(u, v) ∈ U × U` with `‖u − (v + x)‖_d = 1`.
    pub cross_pairs: u64,
    pub report: ConstructionReport,
}

impl UnitDistanceInstance {
    /// Recounts unit distances, on the embedded points under the standard
    /// form when present.
    pub fn verify(&self) -> Result<bool> {
        let direct = unit_distance_graph(&self.points, &self.form)?.edge_count() as u64;
        let ok_embedded = match &self.embedded {
            None => true,
            Some(e) => {
                let std = BilinearForm::standard(e[0][0].ctx(), self.d)?;
                unit_distance_graph(e, &std)?.edge_count() as u64 == direct
            }
        };
        Ok(direct == self.unit_distances && ok_embedded)
    }
}

/// `n`-point unit-distance instance in dimension `d`; `p` is the least
/// prime `≡ 3 (mod 4)` above `n^{1/(⌈d/2⌉+1)}`, which must be ≥ 7.
pub fn unit_distance_instance(n: usize, d: usize, seed: u64, opts: &UnitDistanceOptions) -> Result<UnitDistanceInstance> {
    let e = (d.div_ceil(2) + 1) as u32;
    let root = int_root(n as u64, e);
    if root < 7 {
        return Err(Error::domain(format!("n^(1/{e}) ≥ 7 required; n = {n} gives {:.3}", (n as f64).powf(1.0 / e as f64))));
    }
    let p = find_prime(root, Some((3, 4)))?;
    unit_distance_instance_for_prime(p, d, Some(n), seed, opts)
}

/// As [`unit_distance_instance`] with `p` chosen by the caller. `n = None`
/// keeps all of `U ∪ (U + x)`.
pub fn unit_distance_instance_for_prime(
    p: u64,
    d: usize,
    n: Option<usize>,
    seed: u64,
    opts: &UnitDistanceOptions,
) -> Result<UnitDistanceInstance> {
    let start = Instant::now();
    if d < 2 {
        return Err(Error::domain("unit-distance construction needs d ≥ 2"));
    }
    if p % 4 != 3 {
        return Err(Error::domain(format!("p = {p} is not ≡ 3 (mod 4)")));
    }
    let ctx = FieldCtx::prime(p)?;
    let form = BilinearForm::unit_distance(ctx, d)?;
    let k = d / 2;
    let mut r = rng::seeded(seed);
    let u_raw = evasive_set_generate(p, d, k - 1, opts.strategy, &mut r)?;
    let u: Vec<Vector> = u_raw.iter().map(|x| to_vector(ctx, x)).collect();
    let target = (u.len() * u.len()) as f64 / (2.0 * p as f64);

    let mut report = ConstructionReport::new(
        "unit-distance",
        Params {
            p: Some(p),
            d: Some(d),
            s_verified: Some(opts.s),
            n,
            strategy: Some(opts.strategy.name().into()),
            seed,
            ..Params::default()
        },
        "unit-distances",
    );
    report.target = target;
    report.metrics.insert("evasive_size".into(), u.len() as u64);

    let total = domain_size(p, d, DEFAULT_ENUM_CAP)? as u64;
    let mut best = 0u64;
    let mut chosen = None;
    for attempt in 1..=SHIFT_RETRIES {
        let mut r = rng::trial(seed, SHIFT_STREAM + attempt as u64);
        let x = geometry::vector_at(ctx, d, r.random_range(1..total));
        let shifted: Vec<Vector> = u.iter().map(|v| geometry::add(v, &x)).collect();
        let cross = geometry::cross_unit_pairs(&u, &shifted, &form);
        best = best.max(cross);
        if cross as f64 >= target {
            report.retries.shift = attempt;
            chosen = Some((x, shifted, cross));
            break;
        }
    }
    let Some((shift, shifted, cross_pairs)) = chosen else {
        let mut b = report.clone();
        b.retries.shift = SHIFT_RETRIES;
        b.achieved = best;
        return Err(Error::Construction {
            attempts: SHIFT_RETRIES,
            reason: format!("no shift gave |U|²/(2p) = {target} unit pairs"),
            best: Some(Box::new(b)),
        });
    };
    report.metrics.insert("cross_pairs".into(), cross_pairs);

    let mut all: Vec<Vector> = u.iter().cloned().chain(shifted).collect();
    all.sort_by_key(|v| geometry::vector_index(v));
    all.dedup();
    report.metrics.insert("union_size".into(), all.len() as u64);
    let points = match n {
        Some(n) if n < all.len() => {
            let mut r = rng::trial(seed, POINT_STREAM);
            let mut idx = index::sample(&mut r, all.len(), n).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| all[i].clone()).collect()
        }
        Some(n) if n > all.len() => {
            report.warnings.push(format!("n = {n} exceeds |U ∪ (U+x)| = {}; using all points", all.len()));
            all
        }
        _ => all,
    };
    report.params.m = Some(points.len());

    let graph = unit_distance_graph(&points, &form)?;
    let unit_distances = graph.edge_count() as u64;
    report.achieved = unit_distances;

    let embedded = if d % 4 == 1 {
        let ext = FieldCtx::quadratic(p)?;
        let alpha = solve_unit_alpha(ext)?;
        let e = phi_embed(&points, alpha)?;
        let std = BilinearForm::standard(ext, d)?;
        let after = unit_distance_graph(&e, &std)?.edge_count() as u64;
        if after != unit_distances {
            return Err(Error::domain(format!("φ changed the unit-distance count ({unit_distances} → {after})")));
        }
        Some(e)
    } else {
        None
    };

    let bip = graph.to_bipartite();
    let (v, w) = verify_kss(&bip, opts.s, opts.cap)?;
    report.verification = v;
    report.witness = w;
    if v == Verification::WitnessFound {
        report.warnings.push(format!(
            "K_{{{0},{0}}} found; the {1} evasive-set generator does not avoid it at this scale",
            opts.s,
            opts.strategy.name()
        ));
    }
    let mut largest = 0u64;
    let mut capped = false;
    for s in 1..=opts.scan_max {
        match contains_kss_capped(&bip, s, opts.cap) {
            Ok(Some(_)) => largest = s as u64,
            Ok(None) => break,
            Err(Error::Resource(_)) => {
                capped = true;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    report.metrics.insert("largest_biclique".into(), largest);
    if !capped && (largest as usize) < opts.scan_max {
        report.metrics.insert("smallest_free_s".into(), largest + 1);
    }
    report.wall_time_ms = start.elapsed().as_millis();
    Ok(UnitDistanceInstance { p, d, form, u, shift, points, embedded, unit_distances, cross_pairs, report })
}

fn to_vector(ctx: FieldCtx, x: &[u32]) -> Vector {
    x.iter().map(|&c| ctx.elem(c as i64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bigraph::contains_kss;

    #[test]
    fn zero_count_small() {
        let r = zero_count_experiment(5, 3, 3, 400, 7).unwrap();
        assert!(r.fraction >= 0.70, "fraction {}", r.fraction);
        assert!((r.mean_zeros - 25.0).abs() <= 2.5, "mean {}", r.mean_zeros);
        assert_eq!(r.counts.len(), 400);
        assert!(zero_count_experiment(5, 3, 0, 10, 1).is_err());
        assert!(zero_count_experiment(3, 3, 3, 10, 1).is_err());
        let again = par::sequential(|| zero_count_experiment(5, 3, 3, 50, 7).unwrap());
        assert_eq!(again.counts, r.counts[..50]);
    }

    #[test]
    fn algebraic_graph_matches_direct_evaluation() {
        let mut r = rng::seeded(4);
        let ctx = FieldCtx::prime(5).unwrap();
        let f = MultiPoly::sample_uniform(ctx, 3, 3, &mut r).unwrap();
        let g = algebraic_graph(&f, 1, DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(g.sizes(), (5, 25));
        for a in 0..5u32 {
            for b in 0..25u64 {
                let y = point_at(5, 2, b);
                let v = f.eval_res(&[a, y[0], y[1]]);
                assert_eq!(g.has_edge(a as usize, b as usize), v == 0);
            }
        }
    }

    fn brute_kss(g: &BipartiteGraph, s: usize) -> bool {
        let (m, n) = g.sizes();
        let combos = |n: usize| -> Vec<Vec<usize>> {
            (0u32..1 << n).filter(|mask| mask.count_ones() as usize == s).map(|mask| (0..n).filter(|i| mask >> i & 1 == 1).collect()).collect()
        };
        let cb = combos(n);
        combos(m).iter().any(|a| cb.iter().any(|b| a.iter().all(|&i| b.iter().all(|&j| g.has_edge(i, j)))))
    }

    #[test]
    fn minimum_scale_pipeline() {
        let inst = random_algebraic_graph(7, 1, 1, 7, 7, Some(2), 42).unwrap();
        assert!(inst.report.achieved >= 4);
        assert_eq!(inst.report.verification, Verification::VerifiedFree);
        assert!(!brute_kss(&inst.graph, 2));
        assert_eq!(inst.report.retries.subsample, 0);
        assert_eq!(inst.graph.edge_count(), inst.base_edges);
        assert!(inst.verify().unwrap());
        let again = random_algebraic_graph(7, 1, 1, 7, 7, Some(2), 42).unwrap();
        assert_eq!(again.report, inst.report);
    }

    #[test]
    fn subsampled_pipeline() {
        let inst = random_algebraic_graph(5, 1, 2, 5, 10, Some(3), 3).unwrap();
        assert_eq!(inst.graph.sizes(), (5, 10));
        assert!(inst.report.achieved as f64 >= 50.0 / 10.0);
        assert!(inst.report.retries.subsample >= 1);
        assert!(inst.verify().unwrap());
        assert!(contains_kss(&inst.graph, 3).unwrap().is_none());
    }

    #[test]
    fn edge_density_near_one_over_p() {
        let ctx = FieldCtx::prime(7).unwrap();
        let mut total = 0.0;
        for i in 0..200 {
            let mut r = rng::trial(99, i);
            let f = MultiPoly::sample_uniform(ctx, 2, 4, &mut r).unwrap();
            total += algebraic_graph(&f, 1, DEFAULT_ENUM_CAP).unwrap().edge_count() as f64 / 49.0;
        }
        let mean = total / 200.0;
        assert!((mean - 1.0 / 7.0).abs() <= 0.15 / 7.0, "mean density {mean}");
    }

    #[test]
    fn point_variety_pipeline() {
        let inst = point_variety_instance(49, 1.0, 2, None, 5).unwrap();
        let p = inst.report.params.p.unwrap();
        assert!(p > 7 && p <= 14);
        assert!(inst.incidences >= inst.graph.report.achieved);
        assert!(inst.report.meets_target());
        assert_eq!(inst.point_bound_violations, 0);
        assert!(inst.verify());
        assert_eq!(inst.varieties.len(), 49);
    }

    #[test]
    fn evasive_generators() {
        let mut r = rng::seeded(1);
        let u = evasive_set_generate(7, 3, 1, EvasiveStrategy::MapImage, &mut r).unwrap();
        assert_eq!(u.len(), 49);
        let mut firsts: Vec<_> = u.iter().map(|x| (x[0], x[1])).collect();
        firsts.dedup();
        assert_eq!(firsts.len(), 49);
        let rnd = evasive_set_generate(7, 3, 1, EvasiveStrategy::Random, &mut r).unwrap();
        assert_eq!(rnd.len(), 49);
        assert_eq!(evasive_set_generate(5, 2, 0, EvasiveStrategy::MapImage, &mut r).unwrap().len(), 25);

        let audit = line_intersection_audit(&u, 7, 3).unwrap();
        assert_eq!(audit.lines_checked, 57 * 49);
        // brute force: count points on the reported line
        let ctx = FieldCtx::prime(7).unwrap();
        let on_line = (0..7u32)
            .filter(|&t| {
                let y: Point = audit.through.iter().zip(&audit.direction).map(|(&a, &b)| ctx.add_res(a, ctx.mul_res(t, b))).collect();
                u.contains(&y)
            })
            .count();
        assert_eq!(on_line, audit.max_points_on_line);
        // a full plane meets some line in p points
        let plane: Vec<Point> = (0..49).map(|i| {
            let mut x = point_at(7, 2, i);
            x.push(0);
            x
        }).collect();
        assert_eq!(line_intersection_audit(&plane, 7, 3).unwrap().max_points_on_line, 7);
    }

    #[test]
    fn unit_distance_small_primes() {
        let opts = UnitDistanceOptions::default();
        for p in [7u64, 11] {
            let inst = unit_distance_instance_for_prime(p, 2, None, 1, &opts).unwrap();
            let u = inst.u.len() as f64;
            assert!(inst.unit_distances as f64 >= u * u / (2.0 * p as f64));
            assert!(inst.cross_pairs as f64 >= u * u / (2.0 * p as f64));
            assert_eq!(inst.report.verification, Verification::VerifiedFree);
            assert!(inst.verify().unwrap());
        }
        assert!(unit_distance_instance_for_prime(5, 2, None, 1, &opts).is_err());
        assert!(unit_distance_instance(40, 2, 1, &opts).is_err());
    }

    #[test]
    fn unit_distance_breusch_sized() {
        let inst = unit_distance_instance(343, 2, 9, &UnitDistanceOptions::default()).unwrap();
        assert_eq!(inst.p, 19);
        assert_eq!(inst.points.len(), 343);
        assert!(inst.verify().unwrap());
    }

    #[test]
    fn unit_distance_embedding_branch() {
        let opts = UnitDistanceOptions { scan_max: 2, ..UnitDistanceOptions::default() };
        let inst = unit_distance_instance_for_prime(3, 5, Some(60), 2, &opts).unwrap();
        let e = inst.embedded.as_ref().unwrap();
        assert_eq!(e.len(), 60);
        assert_eq!(e[0][0].ctx().order(), 9);
        let std = BilinearForm::standard(e[0][0].ctx(), 5).unwrap();
        for i in 0..e.len() {
            for j in 0..e.len() {
                assert_eq!(
                    inst.form.is_unit_distance(&inst.points[i], &inst.points[j]),
                    std.is_unit_distance(&e[i], &e[j])
                );
            }
        }
        assert!(inst.verify().unwrap());
    }

    #[test]
    fn reports_replay() {
        let opts = UnitDistanceOptions::default();
        let a = unit_distance_instance_for_prime(7, 3, Some(200), 11, &opts).unwrap();
        let mut b = par::sequential(|| unit_distance_instance_for_prime(7, 3, Some(200), 11, &opts).unwrap());
        b.report.wall_time_ms = a.report.wall_time_ms;
        assert_eq!(a.report, b.report);
        assert_eq!(a.points, b.points);
    }

    #[test]
    fn int_roots() {
        assert_eq!(int_root(49, 2), 7);
        assert_eq!(int_root(48, 2), 6);
        assert_eq!(int_root(343, 3), 7);
        assert_eq!(int_root(1, 5), 1);
    }
}
