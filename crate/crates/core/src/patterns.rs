//! Zero-patterns, containment patterns and shatter functions.
//!
//! All families are enumerated over the `F_p`-rational points only, in
//! lexicographic point order; the stored witness of each pattern is the
//! first point realizing it.

use std::collections::BTreeMap;

use fixedbitset::FixedBitSet;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::gf::FieldCtx;
use crate::linalg;
use crate::mpoly::{domain_size, point_at, point_into, MultiPoly, Point};
use crate::{binomial, par, Error, Result, DEFAULT_ENUM_CAP};

/// Realized index subsets of `[k]` (0-based, sorted) with one witness each.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternFamily {
    pub k: usize,
    pub patterns: BTreeMap<Vec<usize>, Point>,
}

impl PatternFamily {
    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// The family as a set system over `[k]`.
    pub fn to_set_system(&self) -> SetSystem {
        let members = self
            .patterns
            .keys()
            .map(|s| {
                let mut b = FixedBitSet::with_capacity(self.k);
                s.iter().for_each(|&i| b.insert(i));
                b
            })
            .collect();
        SetSystem { ground: self.k, members }
    }

    /// Re-evaluates every witness against `fs`.
    pub fn verify_zero(&self, fs: &[MultiPoly]) -> bool {
        self.patterns.iter().all(|(s, x)| zero_subset(fs, x) == *s)
    }

    pub fn verify_containment(&self, vs: &[Vec<MultiPoly>]) -> bool {
        self.patterns.iter().all(|(s, x)| containment_subset(vs, x) == *s)
    }
}

fn zero_subset(fs: &[MultiPoly], x: &[u32]) -> Vec<usize> {
    (0..fs.len()).filter(|&i| fs[i].eval_res(x) == 0).collect()
}

fn containment_subset(vs: &[Vec<MultiPoly>], x: &[u32]) -> Vec<usize> {
    (0..vs.len()).filter(|&i| vs[i].iter().all(|f| f.eval_res(x) == 0)).collect()
}

/// Shared ring of a polynomial list, checked.
fn common_ring<'a, I: IntoIterator<Item = &'a MultiPoly>>(polys: I) -> Result<Option<(FieldCtx, usize)>> {
    let mut ring = None;
    for f in polys {
        let r = (f.ctx(), f.nvars());
        match ring {
            None => ring = Some(r),
            Some(q) if q != r => return Err(Error::domain("polynomials live in different rings")),
            _ => {}
        }
    }
    Ok(ring)
}

/// Scans `F_p^dim` in parallel chunks; `classify` writes the subset realized
/// at a point. Chunks are merged in order so the first witness wins.
fn enumerate<F>(p: u64, dim: usize, k: usize, cap: u64, classify: F) -> Result<PatternFamily>
where
    F: Fn(&[u32], &mut Vec<usize>) + Sync + Send,
{
    let total = domain_size(p, dim, cap)?;
    let parts = par::map_chunks(total, |range| {
        let mut seen: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
        let mut x = vec![0u32; dim];
        let mut subset = Vec::with_capacity(k);
        for i in range {
            point_into(p, i as u64, &mut x);
            subset.clear();
            classify(&x, &mut subset);
            if !seen.contains_key(&subset) {
                seen.insert(subset.clone(), i as u64);
            }
        }
        seen
    });
    let mut merged: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
    for part in parts {
        for (s, i) in part {
            merged.entry(s).or_insert(i);
        }
    }
    let patterns = merged.into_iter().map(|(s, i)| (s, point_at(p, dim, i))).collect();
    Ok(PatternFamily { k, patterns })
}

pub fn zero_patterns(fs: &[MultiPoly]) -> Result<PatternFamily> {
    zero_patterns_capped(fs, DEFAULT_ENUM_CAP)
}

/// Every `{i : f_i(x) = 0}` over `x ∈ F_p^D`.
pub fn zero_patterns_capped(fs: &[MultiPoly], cap: u64) -> Result<PatternFamily> {
    let (ctx, dim) = common_ring(fs)?.ok_or_else(|| Error::domain("empty polynomial list"))?;
    let evs: Vec<_> = fs.iter().map(|f| f.evaluator()).collect();
    enumerate(ctx.p(), dim, fs.len(), cap, |x, out| {
        for (i, ev) in evs.iter().enumerate() {
            if ev.eval(x, &mut ev.scratch()) == 0 {
                out.push(i);
            }
        }
    })
}

pub fn containment_patterns(vs: &[Vec<MultiPoly>]) -> Result<PatternFamily> {
    containment_patterns_capped(vs, DEFAULT_ENUM_CAP)
}

/// Every `{i : x ∈ V_i}` over `x ∈ F_p^D`, where `V_i` is the common zero
/// set of its defining polynomials.
pub fn containment_patterns_capped(vs: &[Vec<MultiPoly>], cap: u64) -> Result<PatternFamily> {
    let (ctx, dim) = common_ring(vs.iter().flatten())?
        .ok_or_else(|| Error::domain("no defining polynomials"))?;
    let evs: Vec<Vec<_>> = vs.iter().map(|sys| sys.iter().map(|f| f.evaluator()).collect()).collect();
    enumerate(ctx.p(), dim, vs.len(), cap, |x, out| {
        for (i, sys) in evs.iter().enumerate() {
            if sys.iter().all(|ev| ev.eval(x, &mut ev.scratch()) == 0) {
                out.push(i);
            }
        }
    })
}

/// Largest total degree in the list (0 for an all-zero list).
pub fn max_degree(fs: &[MultiPoly]) -> u32 {
    fs.iter().filter_map(|f| f.degree()).max().unwrap_or(0)
}

/// `C(kΔ + D, D)`.
pub fn bound_rbg(k: usize, delta: u32, dim: usize) -> u128 {
    binomial(k as u64 * delta as u64 + dim as u64, dim as u64)
}

/// `C(kΔ, D)`.
pub fn bound_kdelta(k: usize, delta: u32, dim: usize) -> u128 {
    binomial(k as u64 * delta as u64, dim as u64)
}

/// Member sets over a ground set `0..ground`.
#[derive(Clone, Debug)]
pub struct SetSystem {
    pub ground: usize,
    pub members: Vec<FixedBitSet>,
}

impl SetSystem {
    pub fn new(ground: usize, members: Vec<FixedBitSet>) -> Result<Self> {
        for m in &members {
            if m.ones().any(|i| i >= ground) {
                return Err(Error::domain(format!("member exceeds ground set of size {ground}")));
            }
        }
        let members = members
            .into_iter()
            .map(|mut m| {
                m.grow(ground);
                m
            })
            .collect();
        Ok(Self { ground, members })
    }

    pub fn from_lists(ground: usize, lists: &[Vec<usize>]) -> Result<Self> {
        let members = lists
            .iter()
            .map(|l| {
                let mut b = FixedBitSet::with_capacity(ground.max(l.iter().max().map_or(0, |&m| m + 1)));
                l.iter().for_each(|&i| b.insert(i));
                b
            })
            .collect();
        Self::new(ground, members)
    }
}

/// The incidence system `{N(x) : x ∈ points}` where `N(x) = {i : x ∈ V_i}`.
pub fn incidence_set_system(points: &[Point], vs: &[Vec<MultiPoly>]) -> SetSystem {
    let members = points
        .iter()
        .map(|x| {
            let mut b = FixedBitSet::with_capacity(vs.len());
            containment_subset(vs, x).into_iter().for_each(|i| b.insert(i));
            b
        })
        .collect();
    SetSystem { ground: vs.len(), members }
}

pub fn shatter_function(f: &SetSystem, k: usize) -> Result<u64> {
    shatter_function_capped(f, k, DEFAULT_ENUM_CAP)
}

/// `π_F(k)`: the maximum over `k`-subsets `A` of the number of distinct
/// traces `A ∩ B`, `B ∈ F`.
pub fn shatter_function_capped(f: &SetSystem, k: usize, cap: u64) -> Result<u64> {
    let n = f.ground;
    if k > n {
        return Err(Error::domain(format!("k = {k} exceeds ground size {n}")));
    }
    if k > 64 {
        return Err(Error::domain("traces are packed into 64-bit masks; k ≤ 64"));
    }
    if binomial(n as u64, k as u64) > cap as u128 {
        return Err(Error::resource(format!("C({n}, {k}) subsets exceed cap {cap}")));
    }
    if k == 0 {
        return Ok(u64::from(!f.members.is_empty()));
    }
    // no subset can beat min(2^k, |F|)
    let ceiling = (f.members.len() as u128).min(1u128 << k) as u64;
    let per_first = par::map_range(n - k + 1, |first| {
        let mut best = 0u64;
        let mut a = vec![first];
        let mut traces = Vec::with_capacity(f.members.len());
        trace_max(f, n, k, &mut a, &mut traces, &mut best, ceiling);
        best
    });
    Ok(per_first.into_iter().max().unwrap_or(0))
}

fn trace_max(
    f: &SetSystem,
    n: usize,
    k: usize,
    a: &mut Vec<usize>,
    traces: &mut Vec<u64>,
    best: &mut u64,
    ceiling: u64,
) {
    if *best >= ceiling {
        return;
    }
    if a.len() == k {
        traces.clear();
        traces.extend(f.members.iter().map(|m| {
            a.iter().enumerate().fold(0u64, |acc, (t, &x)| acc | ((m.contains(x) as u64) << t))
        }));
        traces.sort_unstable();
        traces.dedup();
        *best = (*best).max(traces.len() as u64);
        return;
    }
    let last = *a.last().expect("seeded with a first element");
    let need = k - a.len();
    for x in last + 1..=n - need {
        a.push(x);
        trace_max(f, n, k, a, traces, best, ceiling);
        a.pop();
    }
}

/// Rank test for the product polynomials `g_j = ∏_{i ∈ S_j} f_i`, where
/// `S_j` is the set of `f_i` not vanishing at the `j`-th point. Returns
/// whether the evaluation matrix `M[j][ℓ] = g_j(x_ℓ)` has full rank.
pub fn witness_rank_check(fs: &[MultiPoly], points: &[Point]) -> Result<bool> {
    let Some((ctx, dim)) = common_ring(fs)? else {
        return Err(Error::domain("empty polynomial list"));
    };
    if points.is_empty() {
        return Ok(true);
    }
    if points.iter().any(|x| x.len() != dim) {
        return Err(Error::domain("witness dimension does not match the polynomials"));
    }
    let nonvanishing: Vec<Vec<usize>> =
        points.iter().map(|x| (0..fs.len()).filter(|&i| fs[i].eval_res(x) != 0).collect()).collect();
    let mut sorted = nonvanishing.clone();
    sorted.sort();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::domain("witness points realize a repeated pattern"));
    }
    let gs: Vec<MultiPoly> = nonvanishing
        .iter()
        .map(|s| {
            s.iter().try_fold(MultiPoly::constant(ctx, dim, 1)?, |g, &i| g.mul(&fs[i]))
        })
        .collect::<Result<_>>()?;
    let m: Vec<linalg::Vector> =
        gs.iter().map(|g| points.iter().map(|x| g.evaluate(x)).collect::<Result<_>>()).collect::<Result<_>>()?;
    Ok(linalg::rank(&m) == points.len())
}

/// `k` random varieties in `F_p^nvars`, each cut out by `per` uniform
/// polynomials of degree ≤ `degree`.
pub fn random_variety_systems<R: Rng + ?Sized>(
    ctx: FieldCtx,
    nvars: usize,
    k: usize,
    per: usize,
    degree: u32,
    rng: &mut R,
) -> Result<Vec<Vec<MultiPoly>>> {
    (0..k)
        .map(|_| (0..per).map(|_| MultiPoly::sample_uniform(ctx, nvars, degree, rng)).collect())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternEntry {
    pub subset: Vec<usize>,
    pub witness: Point,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternFamilyReport {
    pub k: usize,
    #[serde(rename = "D")]
    pub dim: usize,
    pub p: u64,
    pub delta: u32,
    pub pattern_count: usize,
    pub bound_rbg: u128,
    pub bound_kdelta: u128,
    pub patterns: Vec<PatternEntry>,
}

impl PatternFamilyReport {
    pub fn new(family: &PatternFamily, p: u64, dim: usize, delta: u32) -> Self {
        Self {
            k: family.k,
            dim,
            p,
            delta,
            pattern_count: family.len(),
            bound_rbg: bound_rbg(family.k, delta, dim),
            bound_kdelta: bound_kdelta(family.k, delta, dim),
            patterns: family
                .patterns
                .iter()
                .map(|(s, x)| PatternEntry { subset: s.clone(), witness: x.clone() })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn poly(s: &str) -> MultiPoly {
        MultiPoly::parse(s).unwrap()
    }

    #[test]
    fn zero_pattern_examples() {
        let fs = vec![poly("p=3; vars=1; x0"), poly("p=3; vars=1; x0 + 2")];
        let fam = zero_patterns(&fs).unwrap();
        let subsets: Vec<_> = fam.patterns.keys().cloned().collect();
        assert_eq!(subsets, vec![vec![], vec![0], vec![1]]);
        assert_eq!(fam.patterns[&vec![]], vec![2]);
        assert_eq!(bound_rbg(2, 1, 1), 3);
        assert_eq!(bound_kdelta(2, 1, 1), 2);
        assert!(fam.verify_zero(&fs));

        let single = vec![poly("p=5; vars=3; x0")];
        assert_eq!(zero_patterns(&single).unwrap().len(), 2);
    }

    #[test]
    fn generic_lines_in_f7_squared() {
        let fs: Vec<_> = ["x0", "x1", "x0 + x1 + 1", "x0 + 3*x1 + 2"]
            .iter()
            .map(|b| poly(&format!("p=7; vars=2; {b}")))
            .collect();
        let fam = zero_patterns(&fs).unwrap();
        assert!(fam.len() <= 11);
        // exhaustive oracle
        let mut seen = std::collections::BTreeSet::new();
        for a in 0..7 {
            for b in 0..7 {
                seen.insert(zero_subset(&fs, &[a, b]));
            }
        }
        assert_eq!(fam.len(), seen.len());
    }

    #[test]
    fn zero_patterns_respect_bound_and_witnesses() {
        let mut r = rng::seeded(3);
        for _ in 0..60 {
            let p = [2u64, 3, 5, 7][r.random_range(0..4)];
            let ctx = FieldCtx::prime(p).unwrap();
            let (dim, k, delta) = (r.random_range(1..=2), r.random_range(1..=5), r.random_range(1..=2));
            let fs: Vec<_> =
                (0..k).map(|_| MultiPoly::sample_uniform(ctx, dim, delta, &mut r).unwrap()).collect();
            let fam = zero_patterns(&fs).unwrap();
            assert!(fam.len() as u128 <= bound_rbg(k, max_degree(&fs), dim));
            assert!(fam.verify_zero(&fs));
            let seq = par::sequential(|| zero_patterns(&fs).unwrap());
            assert_eq!(seq, fam);
            let witnesses: Vec<Point> = fam.patterns.values().cloned().collect();
            assert!(witness_rank_check(&fs, &witnesses).unwrap());
        }
    }

    #[test]
    fn containment_examples() {
        let k = 4;
        let lines: Vec<Vec<MultiPoly>> = [(1, 0), (0, 1), (1, 1), (1, 3)]
            .iter()
            .map(|(a, b)| vec![poly(&format!("p=7; vars=2; {a}*x0 + {b}*x1"))])
            .collect();
        let fam = containment_patterns(&lines).unwrap();
        assert_eq!(fam.len(), k + 2);
        assert!(fam.patterns.contains_key(&vec![0, 1, 2, 3]));
        assert_eq!(fam.patterns[&vec![0, 1, 2, 3]], vec![0, 0]);

        let parallel = vec![vec![poly("p=5; vars=2; x0")], vec![poly("p=5; vars=2; x0 + 4")]];
        assert_eq!(containment_patterns(&parallel).unwrap().len(), 3);
    }

    #[test]
    fn containment_bounded_by_zero_patterns() {
        let mut r = rng::seeded(5);
        let ctx = FieldCtx::prime(7).unwrap();
        for k in 1..=5 {
            let vs = random_variety_systems(ctx, 2, k, 1, 2, &mut r).unwrap();
            let cont = containment_patterns(&vs).unwrap();
            let all: Vec<MultiPoly> = vs.iter().flatten().cloned().collect();
            assert!(cont.len() <= zero_patterns(&all).unwrap().len());
            assert!(cont.verify_containment(&vs));
        }
        for _ in 0..10 {
            let vs = random_variety_systems(ctx, 3, 4, 2, 2, &mut r).unwrap();
            let cont = containment_patterns(&vs).unwrap();
            let all: Vec<MultiPoly> = vs.iter().flatten().cloned().collect();
            assert!(cont.len() <= zero_patterns(&all).unwrap().len());
        }
    }

    fn brute_shatter(f: &SetSystem, k: usize) -> u64 {
        let n = f.ground;
        let mut best = 0;
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != k {
                continue;
            }
            let mut traces: Vec<u32> =
                f.members.iter().map(|m| m.ones().fold(0, |acc, i| acc | (1 << i)) & mask).collect();
            traces.sort_unstable();
            traces.dedup();
            best = best.max(traces.len() as u64);
        }
        best
    }

    #[test]
    fn shatter_examples() {
        let singletons = SetSystem::from_lists(5, &(0..5).map(|i| vec![i]).collect::<Vec<_>>()).unwrap();
        assert_eq!(shatter_function(&singletons, 2).unwrap(), 3);
        let whole = SetSystem::from_lists(5, &[vec![0, 1, 2, 3, 4]]).unwrap();
        for k in 0..=5 {
            assert_eq!(shatter_function(&whole, k).unwrap(), 1);
        }
        let mut r = rng::seeded(9);
        for _ in 0..100 {
            let n = r.random_range(1..=9);
            let lists: Vec<Vec<usize>> = (0..r.random_range(0..12))
                .map(|_| (0..n).filter(|_| r.random_bool(0.4)).collect())
                .collect();
            let f = SetSystem::from_lists(n, &lists).unwrap();
            for k in 0..=n {
                assert_eq!(shatter_function(&f, k).unwrap(), brute_shatter(&f, k));
            }
            // trace dichotomy at k = 1
            let split = (0..n).any(|x| {
                f.members.iter().any(|m| m.contains(x)) && f.members.iter().any(|m| !m.contains(x))
            });
            assert_eq!(shatter_function(&f, 1).unwrap() == 2, split);
        }
        assert!(matches!(shatter_function_capped(&singletons, 2, 3), Err(Error::Resource(_))));
    }

    #[test]
    fn incidence_shatter_below_pattern_family() {
        let mut r = rng::seeded(21);
        let ctx = FieldCtx::prime(5).unwrap();
        let vs = random_variety_systems(ctx, 2, 6, 1, 2, &mut r).unwrap();
        let fam = containment_patterns(&vs).unwrap();
        let pts = crate::mpoly::all_points(5, 2, 1000).unwrap();
        let f1 = incidence_set_system(&pts, &vs);
        let f = fam.to_set_system();
        for k in 1..=6 {
            assert!(shatter_function(&f1, k).unwrap() <= shatter_function(&f, k).unwrap());
        }
    }

    #[test]
    fn witness_rank_examples() {
        let fs = vec![poly("p=3; vars=1; x0"), poly("p=3; vars=1; x0 + 2")];
        assert!(witness_rank_check(&fs, &[vec![0], vec![1], vec![2]]).unwrap());
        assert!(witness_rank_check(&fs, &[vec![1]]).unwrap());
        assert!(matches!(witness_rank_check(&fs, &[vec![2], vec![2]]), Err(Error::Domain(_))));
        assert!(witness_rank_check(&fs, &[]).unwrap());

        let mut r = rng::seeded(50);
        let ctx = FieldCtx::prime(7).unwrap();
        for _ in 0..50 {
            let k = r.random_range(1..=4);
            let delta = r.random_range(1..=2);
            let fs: Vec<_> = (0..k).map(|_| MultiPoly::sample_uniform(ctx, 2, delta, &mut r).unwrap()).collect();
            let w: Vec<Point> = zero_patterns(&fs).unwrap().patterns.into_values().collect();
            assert!(witness_rank_check(&fs, &w).unwrap());
        }
    }

    #[test]
    fn report_shape() {
        let fs = vec![poly("p=3; vars=1; x0"), poly("p=3; vars=1; x0 + 2")];
        let fam = zero_patterns(&fs).unwrap();
        let rep = PatternFamilyReport::new(&fam, 3, 1, 1);
        let v = serde_json::to_value(&rep).unwrap();
        for key in ["k", "D", "p", "delta", "pattern_count", "bound_rbg", "bound_kdelta", "patterns"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["pattern_count"], 3);
    }
}
