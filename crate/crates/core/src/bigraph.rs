//! Bipartite graphs and exact search kernels.
//!
//! Adjacency is stored in both directions as bitsets, which makes the two
//! hot operations cheap: common-neighbourhood intersection for `K_{s,s}`
//! detection and candidate filtering in induced-pattern backtracking.
//! Every search is exact; when a cap would be exceeded the caller gets
//! [`Error::Resource`], never an approximate verdict.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use fixedbitset::FixedBitSet;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{par, Error, Result, DEFAULT_SEARCH_CAP};

#[derive(Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    m: usize,
    n: usize,
    /// A-vertex → neighbours in B
    adj_a: Vec<FixedBitSet>,
    /// B-vertex → neighbours in A
    adj_b: Vec<FixedBitSet>,
}

impl BipartiteGraph {
    pub fn new(m: usize, n: usize) -> Self {
        Self {
            m,
            n,
            adj_a: vec![FixedBitSet::with_capacity(n); m],
            adj_b: vec![FixedBitSet::with_capacity(m); n],
        }
    }

    pub fn from_edges<I: IntoIterator<Item = (usize, usize)>>(m: usize, n: usize, edges: I) -> Result<Self> {
        let mut g = Self::new(m, n);
        for (a, b) in edges {
            g.add_edge(a, b)?;
        }
        Ok(g)
    }

    /// Builds the graph from per-A-vertex neighbour rows (bitsets over B).
    pub fn from_rows(n: usize, rows: Vec<FixedBitSet>) -> Self {
        let m = rows.len();
        let mut adj_b = vec![FixedBitSet::with_capacity(m); n];
        for (a, row) in rows.iter().enumerate() {
            debug_assert_eq!(row.len(), n);
            for b in row.ones() {
                adj_b[b].insert(a);
            }
        }
        Self { m, n, adj_a: rows, adj_b }
    }

    pub fn add_edge(&mut self, a: usize, b: usize) -> Result<()> {
        if a >= self.m || b >= self.n {
            return Err(Error::domain(format!("edge ({a}, {b}) outside {}×{}", self.m, self.n)));
        }
        self.adj_a[a].insert(b);
        self.adj_b[b].insert(a);
        Ok(())
    }

    pub fn sizes(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj_a[a].contains(b)
    }

    pub fn neighbors_a(&self, a: usize) -> &FixedBitSet {
        &self.adj_a[a]
    }

    pub fn neighbors_b(&self, b: usize) -> &FixedBitSet {
        &self.adj_b[b]
    }

    pub fn edge_count(&self) -> usize {
        self.adj_a.iter().map(|r| r.count_ones(..)).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj_a.iter().enumerate().flat_map(|(a, r)| r.ones().map(move |b| (a, b)))
    }

    /// Swaps the roles of the two classes.
    pub fn transpose(&self) -> Self {
        Self { m: self.n, n: self.m, adj_a: self.adj_b.clone(), adj_b: self.adj_a.clone() }
    }

    /// The subgraph induced on the listed A- and B-vertices, relabelled in
    /// list order.
    pub fn induced(&self, rows: &[usize], cols: &[usize]) -> Self {
        let new_rows = rows
            .iter()
            .map(|&a| {
                let mut r = FixedBitSet::with_capacity(cols.len());
                for (j, &b) in cols.iter().enumerate() {
                    r.set(j, self.adj_a[a].contains(b));
                }
                r
            })
            .collect();
        Self::from_rows(cols.len(), new_rows)
    }

    /// Fixture text: `m n`, then one line of neighbour indices per A-vertex.
    pub fn to_fixture(&self) -> String {
        let mut s = format!("{} {}\n", self.m, self.n);
        for r in &self.adj_a {
            let line: Vec<String> = r.ones().map(|b| b.to_string()).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn parse_fixture(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::parse(1, "empty graph fixture"))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::parse(1, format!("bad size `{t}`"))))
            .collect::<Result<_>>()?;
        let [m, n] = dims[..] else {
            return Err(Error::parse(1, "header must be `m n`"));
        };
        let mut g = Self::new(m, n);
        for a in 0..m {
            let line = lines.next().unwrap_or("");
            for t in line.split_whitespace() {
                let b: usize = t.parse().map_err(|_| Error::parse(a + 2, format!("bad index `{t}`")))?;
                g.add_edge(a, b).map_err(|e| Error::parse(a + 2, e.to_string()))?;
            }
        }
        if lines.any(|l| !l.trim().is_empty()) {
            return Err(Error::parse(m + 2, "more rows than declared"));
        }
        Ok(g)
    }
}

impl fmt::Debug for BipartiteGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BipartiteGraph({}×{}, {} edges)", self.m, self.n, self.edge_count())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Zero,
    One,
    Any,
}

impl Label {
    fn as_char(self) -> char {
        match self {
            Label::Zero => '0',
            Label::One => '1',
            Label::Any => '*',
        }
    }
}

/// Edge-labelled complete bipartite template over `{0, 1, *}`.
#[derive(Clone, PartialEq, Eq)]
pub struct Pattern {
    a: usize,
    b: usize,
    labels: Vec<Label>,
}

impl Pattern {
    pub fn new(a: usize, b: usize, labels: Vec<Label>) -> Result<Self> {
        if labels.len() != a * b {
            return Err(Error::domain(format!("{} labels for a {a}×{b} pattern", labels.len())));
        }
        Ok(Self { a, b, labels })
    }

    /// The fully labelled pattern of a graph: edges → 1, non-edges → 0.
    pub fn from_graph(g: &BipartiteGraph) -> Self {
        let (a, b) = g.sizes();
        let labels = (0..a)
            .flat_map(|i| (0..b).map(move |j| (i, j)))
            .map(|(i, j)| if g.has_edge(i, j) { Label::One } else { Label::Zero })
            .collect();
        Self { a, b, labels }
    }

    pub fn sizes(&self) -> (usize, usize) {
        (self.a, self.b)
    }

    pub fn label(&self, i: usize, j: usize) -> Label {
        self.labels[i * self.b + j]
    }

    pub fn count(&self, l: Label) -> usize {
        self.labels.iter().filter(|&&x| x == l).count()
    }

    pub fn parse_fixture(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<Label>> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let row: Vec<Label> = line
                .chars()
                .filter(|c| !c.is_whitespace())
                .map(|c| match c {
                    '0' => Ok(Label::Zero),
                    '1' => Ok(Label::One),
                    '*' => Ok(Label::Any),
                    _ => Err(Error::parse(i + 1, format!("bad label `{c}`"))),
                })
                .collect::<Result<_>>()?;
            if row.is_empty() {
                continue;
            }
            if let Some(first) = rows.first() {
                if first.len() != row.len() {
                    return Err(Error::parse(i + 1, "ragged pattern rows"));
                }
            }
            rows.push(row);
        }
        let b = rows.first().map_or(0, |r| r.len());
        Self::new(rows.len(), b, rows.concat())
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.a {
            let row: String = (0..self.b).map(|j| self.label(i, j).as_char()).collect();
            writeln!(f, "{row}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pattern {}×{}\n{self}", self.a, self.b)
    }
}

/// A copy of `K_{s,s}`: every `(a, b)` in `a_side × b_side` is an edge.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KssWitness {
    pub a_side: Vec<usize>,
    pub b_side: Vec<usize>,
}

impl KssWitness {
    pub fn is_valid(&self, g: &BipartiteGraph) -> bool {
        self.a_side.iter().all(|&a| self.b_side.iter().all(|&b| g.has_edge(a, b)))
    }
}

pub fn contains_kss(g: &BipartiteGraph, s: usize) -> Result<Option<KssWitness>> {
    contains_kss_capped(g, s, DEFAULT_SEARCH_CAP)
}

/// Exact `K_{s,s}` search.
///
/// Walks `s`-subsets of the smaller class in lexicographic order, carrying
/// the common neighbourhood as a bitset and abandoning a branch as soon as
/// it drops below `s`. Each extension attempt counts as one probe. The
/// witness is the lexicographically least subset, completed by its `s`
/// smallest common neighbours.
pub fn contains_kss_capped(g: &BipartiteGraph, s: usize, cap: u64) -> Result<Option<KssWitness>> {
    if s == 0 {
        return Err(Error::domain("K_{s,s} search needs s ≥ 1"));
    }
    if s > g.m.min(g.n) {
        return Ok(None);
    }
    let a_small = g.m <= g.n;
    let rows = if a_small { &g.adj_a } else { &g.adj_b };
    let cands: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].count_ones(..) >= s).collect();
    if cands.len() < s {
        return Ok(None);
    }
    let probes = AtomicU64::new(0);
    let search = KssSearch { rows, cands: &cands, s, probes: &probes, cap };

    let hit = par::try_find_first(cands.len() - (s - 1), |ci| {
        search.tick()?;
        let mut chosen = vec![cands[ci]];
        search.extend(ci + 1, &rows[cands[ci]], &mut chosen)
    })?;

    Ok(hit.map(|(chosen, common)| {
        let other: Vec<usize> = common.ones().take(s).collect();
        if a_small {
            KssWitness { a_side: chosen, b_side: other }
        } else {
            KssWitness { a_side: other, b_side: chosen }
        }
    }))
}

struct KssSearch<'a> {
    rows: &'a [FixedBitSet],
    cands: &'a [usize],
    s: usize,
    probes: &'a AtomicU64,
    cap: u64,
}

impl KssSearch<'_> {
    fn tick(&self) -> Result<()> {
        if self.probes.fetch_add(1, Ordering::Relaxed) >= self.cap {
            return Err(Error::resource(format!("K_{{s,s}} search exceeded {} probes", self.cap)));
        }
        Ok(())
    }

    fn extend(
        &self,
        start: usize,
        common: &FixedBitSet,
        chosen: &mut Vec<usize>,
    ) -> Result<Option<(Vec<usize>, FixedBitSet)>> {
        if chosen.len() == self.s {
            return Ok(Some((chosen.clone(), common.clone())));
        }
        let need = self.s - chosen.len();
        for ci in start..=(self.cands.len().saturating_sub(need)) {
            if ci >= self.cands.len() {
                break;
            }
            self.tick()?;
            let v = self.cands[ci];
            if common.intersection_count(&self.rows[v]) < self.s {
                continue;
            }
            let mut next = common.clone();
            next.intersect_with(&self.rows[v]);
            chosen.push(v);
            if let Some(w) = self.extend(ci + 1, &next, chosen)? {
                return Ok(Some(w));
            }
            chosen.pop();
        }
        Ok(None)
    }
}

/// Largest `s ≤ s_max` with a `K_{s,s}`, or 0 for an edgeless graph; the
/// graph is then certified `K_{s+1,s+1}`-free (when `s < s_max`).
pub fn max_biclique_up_to(g: &BipartiteGraph, s_max: usize, cap: u64) -> Result<usize> {
    let mut best = 0;
    for s in 1..=s_max {
        if contains_kss_capped(g, s, cap)?.is_none() {
            break;
        }
        best = s;
    }
    Ok(best)
}

/// Host vertices assigned to pattern vertices, class by class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Embedding {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
}

impl Embedding {
    /// Injective, class-preserving, and every non-`*` label honoured.
    pub fn is_valid(&self, g: &BipartiteGraph, pat: &Pattern) -> bool {
        let (pa, pb) = pat.sizes();
        let distinct = |v: &[usize]| {
            let mut s = v.to_vec();
            s.sort_unstable();
            s.windows(2).all(|w| w[0] != w[1])
        };
        self.a.len() == pa
            && self.b.len() == pb
            && distinct(&self.a)
            && distinct(&self.b)
            && (0..pa).all(|i| {
                (0..pb).all(|j| match pat.label(i, j) {
                    Label::One => g.has_edge(self.a[i], self.b[j]),
                    Label::Zero => !g.has_edge(self.a[i], self.b[j]),
                    Label::Any => true,
                })
            })
    }
}

pub fn find_induced_pattern(g: &BipartiteGraph, pat: &Pattern) -> Result<Option<Embedding>> {
    find_induced_pattern_capped(g, pat, DEFAULT_SEARCH_CAP)
}

#[derive(Clone, Copy, Debug)]
enum Side {
    A(usize),
    B(usize),
}

/// Backtracking search for an induced copy of `pat` (A → A, B → B).
///
/// Pattern vertices are placed in order of descending constraint count; the
/// candidate set for each is the unused host vertices filtered through the
/// neighbourhoods of already-placed opposite-class vertices. `budget` bounds
/// the number of placements tried.
pub fn find_induced_pattern_capped(
    g: &BipartiteGraph,
    pat: &Pattern,
    budget: u64,
) -> Result<Option<Embedding>> {
    let (pa, pb) = pat.sizes();
    if pa > g.m || pb > g.n {
        return Ok(None);
    }
    if pa + pb == 0 {
        return Ok(Some(Embedding { a: vec![], b: vec![] }));
    }
    let weight = |v: Side| match v {
        Side::A(i) => (0..pb).filter(|&j| pat.label(i, j) != Label::Any).count(),
        Side::B(j) => (0..pa).filter(|&i| pat.label(i, j) != Label::Any).count(),
    };
    let mut order: Vec<Side> = (0..pa).map(Side::A).chain((0..pb).map(Side::B)).collect();
    // stable sort keeps A-before-B and index order among ties
    order.sort_by_key(|&v| std::cmp::Reverse(weight(v)));

    let nodes = AtomicU64::new(0);
    let search = PatternSearch { g, pat, order: &order, nodes: &nodes, budget };
    let first_class_size = match order[0] {
        Side::A(_) => g.m,
        Side::B(_) => g.n,
    };
    par::try_find_first(first_class_size, |h| {
        let mut st = search.fresh_state();
        if !search.place(0, h, &mut st)? {
            return Ok(None);
        }
        search.descend(1, &mut st)
    })
}

struct PatternSearch<'a> {
    g: &'a BipartiteGraph,
    pat: &'a Pattern,
    order: &'a [Side],
    nodes: &'a AtomicU64,
    budget: u64,
}

struct PatternState {
    host_a: Vec<Option<usize>>,
    host_b: Vec<Option<usize>>,
    used_a: FixedBitSet,
    used_b: FixedBitSet,
}

impl PatternSearch<'_> {
    fn fresh_state(&self) -> PatternState {
        let (pa, pb) = self.pat.sizes();
        PatternState {
            host_a: vec![None; pa],
            host_b: vec![None; pb],
            used_a: FixedBitSet::with_capacity(self.g.m),
            used_b: FixedBitSet::with_capacity(self.g.n),
        }
    }

    fn candidates(&self, v: Side, st: &PatternState) -> FixedBitSet {
        match v {
            Side::A(i) => {
                let mut c = FixedBitSet::with_capacity(self.g.m);
                c.insert_range(..);
                c.difference_with(&st.used_a);
                for (j, hb) in st.host_b.iter().enumerate() {
                    if let Some(hb) = *hb {
                        match self.pat.label(i, j) {
                            Label::One => c.intersect_with(&self.g.adj_b[hb]),
                            Label::Zero => c.difference_with(&self.g.adj_b[hb]),
                            Label::Any => {}
                        }
                    }
                }
                c
            }
            Side::B(j) => {
                let mut c = FixedBitSet::with_capacity(self.g.n);
                c.insert_range(..);
                c.difference_with(&st.used_b);
                for (i, ha) in st.host_a.iter().enumerate() {
                    if let Some(ha) = *ha {
                        match self.pat.label(i, j) {
                            Label::One => c.intersect_with(&self.g.adj_a[ha]),
                            Label::Zero => c.difference_with(&self.g.adj_a[ha]),
                            Label::Any => {}
                        }
                    }
                }
                c
            }
        }
    }

    /// Assigns `order[depth]` to host vertex `h` if consistent.
    fn place(&self, depth: usize, h: usize, st: &mut PatternState) -> Result<bool> {
        let v = self.order[depth];
        if !self.candidates(v, st).contains(h) {
            return Ok(false);
        }
        self.assign(v, h, st);
        Ok(true)
    }

    fn assign(&self, v: Side, h: usize, st: &mut PatternState) {
        match v {
            Side::A(i) => {
                st.host_a[i] = Some(h);
                st.used_a.insert(h);
            }
            Side::B(j) => {
                st.host_b[j] = Some(h);
                st.used_b.insert(h);
            }
        }
    }

    fn unassign(&self, v: Side, h: usize, st: &mut PatternState) {
        match v {
            Side::A(i) => {
                st.host_a[i] = None;
                st.used_a.remove(h);
            }
            Side::B(j) => {
                st.host_b[j] = None;
                st.used_b.remove(h);
            }
        }
    }

    /// Picks the unplaced vertex with the fewest candidates. Returns `None`
    /// when some vertex, or some group of vertices sharing one candidate
    /// set, cannot be placed injectively.
    fn choose(&self, st: &PatternState) -> Option<(Side, FixedBitSet)> {
        let mut best: Option<(Side, FixedBitSet)> = None;
        let mut groups: Vec<(bool, FixedBitSet, usize)> = Vec::new();
        for &v in self.order {
            let placed = match v {
                Side::A(i) => st.host_a[i].is_some(),
                Side::B(j) => st.host_b[j].is_some(),
            };
            if placed {
                continue;
            }
            let c = self.candidates(v, st);
            let size = c.count_ones(..);
            let is_a = matches!(v, Side::A(_));
            match groups.iter_mut().find(|(a, g, _)| *a == is_a && *g == c) {
                Some(entry) => {
                    entry.2 += 1;
                    if entry.2 > size {
                        return None;
                    }
                }
                None => {
                    if size == 0 {
                        return None;
                    }
                    groups.push((is_a, c.clone(), 1));
                }
            }
            if best.as_ref().is_none_or(|(_, b)| size < b.count_ones(..)) {
                best = Some((v, c));
            }
        }
        best
    }

    fn descend(&self, depth: usize, st: &mut PatternState) -> Result<Option<Embedding>> {
        if depth == self.order.len() {
            return Ok(Some(Embedding {
                a: st.host_a.iter().map(|h| h.expect("all placed")).collect(),
                b: st.host_b.iter().map(|h| h.expect("all placed")).collect(),
            }));
        }
        let Some((v, cands)) = self.choose(st) else {
            return Ok(None);
        };
        for h in cands.ones() {
            if self.nodes.fetch_add(1, Ordering::Relaxed) >= self.budget {
                return Err(Error::resource(format!(
                    "pattern search exceeded {} nodes",
                    self.budget
                )));
            }
            self.assign(v, h, st);
            if let Some(e) = self.descend(depth + 1, st)? {
                return Ok(Some(e));
            }
            self.unassign(v, h, st);
        }
        Ok(None)
    }
}

/// Role of a B-vertex in the forbidden graph `H_{d,Δ}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HVertex {
    V1,
    V2,
    /// `v_ℓ^{(i_3..i_ℓ)}`; the sequence has length `ℓ − 2`, entries in `0..k`.
    Layer(Vec<u32>),
}

#[derive(Clone, Debug)]
pub struct ForbiddenH {
    pub k: u64,
    pub pattern: Pattern,
    pub b_vertices: Vec<HVertex>,
    /// For each A-vertex, the index sequence whose prefixes it is joined to.
    pub a_vertices: Vec<Vec<u32>>,
}

/// Cap on `|A|·|B|` for generated patterns.
pub const PATTERN_CELL_CAP: u64 = 20_000_000;

/// The forbidden induced bipartite graph `H_{d,Δ}` as a fully labelled
/// pattern.
///
/// With `k = 2^{Δ^d} + 1`, part B holds `v1`, `v2` and, for each layer
/// `3 ≤ ℓ ≤ d+1`, one vertex per sequence in `[k]^{ℓ−2}`. For each such
/// sequence, part A gets `k` vertices joined to `v1`, `v2` and the vertices
/// of every prefix of the sequence.
pub fn gen_forbidden_h(d: usize, delta: u32) -> Result<ForbiddenH> {
    if d < 2 {
        return Err(Error::domain(format!("H_{{d,Δ}} needs d ≥ 2 (part A is empty for d = {d})")));
    }
    let exp = (delta as u64)
        .checked_pow(d as u32)
        .filter(|&e| e < 40)
        .ok_or_else(|| Error::resource(format!("k = 2^(Δ^d) + 1 too large for d={d}, Δ={delta}")))?;
    let k = (1u64 << exp) + 1;

    let too_big = || Error::resource(format!("H_{{{d},{delta}}} exceeds the pattern size cap"));
    let mut layer_sizes = Vec::new(); // k^{ℓ−2} for ℓ = 3..=d+1
    let mut size = 1u64;
    for _ in 3..=d + 1 {
        size = size.checked_mul(k).ok_or_else(too_big)?;
        layer_sizes.push(size);
    }
    let nb = 2 + layer_sizes.iter().sum::<u64>();
    let na = layer_sizes.iter().map(|s| s.saturating_mul(k)).fold(0u64, u64::saturating_add);
    if na.saturating_mul(nb) > PATTERN_CELL_CAP {
        return Err(too_big());
    }

    let mut b_vertices = vec![HVertex::V1, HVertex::V2];
    let mut layer_offset = Vec::new();
    for (li, &sz) in layer_sizes.iter().enumerate() {
        layer_offset.push(b_vertices.len());
        let len = li + 1;
        for v in 0..sz {
            b_vertices.push(HVertex::Layer(digits(v, k, len)));
        }
    }
    let b_index = |seq: &[u32]| -> usize {
        let li = seq.len() - 1;
        layer_offset[li] + seq.iter().fold(0u64, |acc, &x| acc * k + x as u64) as usize
    };

    let mut labels = Vec::with_capacity((na * nb) as usize);
    let mut a_vertices = Vec::with_capacity(na as usize);
    for (li, &sz) in layer_sizes.iter().enumerate() {
        for v in 0..sz {
            let seq = digits(v, k, li + 1);
            let mut row = vec![Label::Zero; nb as usize];
            row[0] = Label::One;
            row[1] = Label::One;
            for t in 1..=seq.len() {
                row[b_index(&seq[..t])] = Label::One;
            }
            for _ in 0..k {
                labels.extend_from_slice(&row);
                a_vertices.push(seq.clone());
            }
        }
    }
    let pattern = Pattern::new(na as usize, nb as usize, labels)?;
    Ok(ForbiddenH { k, pattern, b_vertices, a_vertices })
}

fn digits(mut v: u64, base: u64, len: usize) -> Vec<u32> {
    let mut out = vec![0u32; len];
    for slot in out.iter_mut().rev() {
        *slot = (v % base) as u32;
        v /= base;
    }
    out
}

/// The `d × d` pattern `Π_d`: `a_i b_j` is 1 for `i ≥ j − 1`, `a_i b_{i+2}`
/// is 0, everything else `*` (1-based indices).
pub fn gen_pattern_pi(d: usize) -> Result<Pattern> {
    if d < 2 {
        return Err(Error::domain(format!("Π_d needs d ≥ 2, got {d}")));
    }
    let mut labels = Vec::with_capacity(d * d);
    for i in 1..=d {
        for j in 1..=d {
            labels.push(if i + 1 >= j {
                Label::One
            } else if j == i + 2 {
                Label::Zero
            } else {
                Label::Any
            });
        }
    }
    Pattern::new(d, d, labels)
}

/// `k`-uniform hypergraph on vertices `0..n`.
#[derive(Clone, Debug)]
pub struct Hypergraph {
    n: usize,
    k: usize,
    edges: Vec<Vec<usize>>,
}

impl Hypergraph {
    pub fn new(n: usize, k: usize, edges: Vec<Vec<usize>>) -> Result<Self> {
        if k < 2 || n == 0 {
            return Err(Error::domain(format!("need k ≥ 2 and N ≥ 1 (k={k}, N={n})")));
        }
        for e in &edges {
            let mut s = e.clone();
            s.sort_unstable();
            s.dedup();
            if s.len() != k || e.len() != k || s.iter().any(|&v| v >= n) {
                return Err(Error::domain(format!("edge {e:?} is not a {k}-set of vertices < {n}")));
            }
        }
        Ok(Self { n, k, edges })
    }

    /// `m` edges drawn uniformly (with replacement) among all `k`-sets.
    pub fn random<R: Rng + ?Sized>(n: usize, k: usize, m: usize, rng: &mut R) -> Result<Self> {
        if k > n {
            return Err(Error::domain(format!("no {k}-sets on {n} vertices")));
        }
        let edges = (0..m)
            .map(|_| {
                let mut e = rand::seq::index::sample(rng, n, k).into_vec();
                e.sort_unstable();
                e
            })
            .collect();
        Self::new(n, k, edges)
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn uniformity(&self) -> usize {
        self.k
    }

    pub fn edges(&self) -> &[Vec<usize>] {
        &self.edges
    }

    /// True if no edge lies entirely inside `set`.
    pub fn is_independent(&self, set: &[usize]) -> bool {
        let mut mark = FixedBitSet::with_capacity(self.n);
        for &v in set {
            mark.insert(v);
        }
        !self.edges.iter().any(|e| e.iter().all(|&v| mark.contains(v)))
    }
}

/// `⌈N^{k/(k−1)} / (4 (M+N)^{1/(k−1)})⌉`.
pub fn independent_set_bound(n: usize, m: usize, k: usize) -> usize {
    let (n, m, k) = (n as f64, m as f64, k as f64);
    let v = n.powf(k / (k - 1.0)) / (4.0 * (m + n).powf(1.0 / (k - 1.0)));
    // absorb rounding noise when the bound is an exact integer
    (v - 1e-9).ceil().max(0.0) as usize
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IndependentSet {
    pub vertices: Vec<usize>,
    pub bound: usize,
    pub sample_probability: f64,
    pub attempts: u32,
}

pub const INDEPENDENT_SET_RETRIES: u32 = 200;

/// Random independent set meeting [`independent_set_bound`].
///
/// Each attempt keeps every vertex with probability
/// `q = (N / (2(M+N)))^{1/(k−1)}` and then drops the largest vertex of each
/// edge that survived whole. Retries until the size bound is met.
pub fn hypergraph_independent_set<R: Rng + ?Sized>(h: &Hypergraph, rng: &mut R) -> Result<IndependentSet> {
    let (n, m, k) = (h.n, h.edges.len(), h.k);
    let q = (n as f64 / (2.0 * (m + n) as f64)).powf(1.0 / (k as f64 - 1.0));
    let bound = independent_set_bound(n, m, k);
    for attempt in 1..=INDEPENDENT_SET_RETRIES {
        let mut keep = FixedBitSet::with_capacity(n);
        for v in 0..n {
            keep.set(v, rng.random_bool(q));
        }
        for e in &h.edges {
            if e.iter().all(|&v| keep.contains(v)) {
                keep.remove(*e.iter().max().expect("k ≥ 2"));
            }
        }
        if keep.count_ones(..) >= bound {
            let vertices: Vec<usize> = keep.ones().collect();
            debug_assert!(h.is_independent(&vertices));
            return Ok(IndependentSet { vertices, bound, sample_probability: q, attempts: attempt });
        }
    }
    Err(Error::resource(format!(
        "no independent set of size {bound} after {INDEPENDENT_SET_RETRIES} attempts"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn random_graph<R: Rng>(m: usize, n: usize, p: f64, rng: &mut R) -> BipartiteGraph {
        let mut g = BipartiteGraph::new(m, n);
        for a in 0..m {
            for b in 0..n {
                if rng.random_bool(p) {
                    g.add_edge(a, b).unwrap();
                }
            }
        }
        g
    }

    fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
        fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for v in start..n {
                cur.push(v);
                rec(v + 1, n, k, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(0, n, k, &mut Vec::new(), &mut out);
        out
    }

    fn brute_kss(g: &BipartiteGraph, s: usize) -> bool {
        let (m, n) = g.sizes();
        subsets(m, s)
            .iter()
            .any(|sa| subsets(n, s).iter().any(|sb| sa.iter().all(|&a| sb.iter().all(|&b| g.has_edge(a, b)))))
    }

    #[test]
    fn kss_examples() {
        let c4 = BipartiteGraph::from_edges(2, 2, [(0, 0), (0, 1), (1, 0), (1, 1)]).unwrap();
        let w = contains_kss(&c4, 2).unwrap().unwrap();
        assert_eq!(w, KssWitness { a_side: vec![0, 1], b_side: vec![0, 1] });
        // P3 as a 1×2 / 2×1 bipartite graph
        let p3 = BipartiteGraph::from_edges(2, 1, [(0, 0), (1, 0)]).unwrap();
        assert!(contains_kss(&p3, 2).unwrap().is_none());
        assert!(matches!(contains_kss(&c4, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn kss_matches_brute_force() {
        let mut rng = rng::seeded(4);
        for _ in 0..60 {
            let g = random_graph(10, 10, 0.5, &mut rng);
            for s in 1..=3 {
                let got = contains_kss(&g, s).unwrap();
                assert_eq!(got.is_some(), brute_kss(&g, s));
                if let Some(w) = got {
                    assert!(w.is_valid(&g));
                    assert_eq!((w.a_side.len(), w.b_side.len()), (s, s));
                }
            }
        }
    }

    #[test]
    fn kss_one_iff_edge_and_monotone() {
        let mut rng = rng::seeded(12);
        for _ in 0..100 {
            let (m, n) = (rng.random_range(1..8), rng.random_range(1..8));
            let g = random_graph(m, n, rng.random_range(0.0..0.8), &mut rng);
            assert_eq!(contains_kss(&g, 1).unwrap().is_some(), g.edge_count() >= 1);
            for s in 2..5 {
                if contains_kss(&g, s).unwrap().is_some() {
                    assert!(contains_kss(&g, s - 1).unwrap().is_some());
                }
            }
        }
    }

    #[test]
    fn kss_witness_is_deterministic_and_uses_smaller_class() {
        let mut rng = rng::seeded(77);
        let g = random_graph(14, 30, 0.6, &mut rng);
        let a = contains_kss(&g, 3).unwrap();
        let b = par::sequential(|| contains_kss(&g, 3).unwrap());
        assert_eq!(a, b);
        let t = contains_kss(&g.transpose(), 3).unwrap().unwrap();
        assert!(t.is_valid(&g.transpose()));
    }

    #[test]
    fn kss_cap_is_a_resource_error() {
        let full = BipartiteGraph::from_edges(20, 20, (0..20).flat_map(|a| (0..20).map(move |b| (a, b)))).unwrap();
        assert!(contains_kss_capped(&full, 10, 1_000_000).unwrap().is_some());
        let mut sparse = full.clone();
        for i in 0..20 {
            sparse.adj_a[i].set(i, false);
            sparse.adj_b[i].set(i, false);
        }
        // K_{10,10} exists in the complement of a matching, but a tiny cap trips first
        assert!(matches!(contains_kss_capped(&sparse, 10, 5), Err(Error::Resource(_))));
    }

    fn brute_pattern(g: &BipartiteGraph, pat: &Pattern) -> bool {
        fn injections(n: usize, k: usize) -> Vec<Vec<usize>> {
            if k == 0 {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for prefix in injections(n, k - 1) {
                for v in 0..n {
                    if !prefix.contains(&v) {
                        let mut p = prefix.clone();
                        p.push(v);
                        out.push(p);
                    }
                }
            }
            out
        }
        let (pa, pb) = pat.sizes();
        let (m, n) = g.sizes();
        let ib = injections(n, pb);
        injections(m, pa).iter().any(|fa| {
            ib.iter().any(|fb| Embedding { a: fa.clone(), b: fb.clone() }.is_valid(g, pat))
        })
    }

    fn random_pattern<R: Rng>(rng: &mut R) -> Pattern {
        let (a, b) = (rng.random_range(1..=3), rng.random_range(1..=3));
        let labels = (0..a * b)
            .map(|_| match rng.random_range(0..3) {
                0 => Label::Zero,
                1 => Label::One,
                _ => Label::Any,
            })
            .collect();
        Pattern::new(a, b, labels).unwrap()
    }

    #[test]
    fn pattern_examples() {
        let single = Pattern::parse_fixture("1\n").unwrap();
        let g = BipartiteGraph::from_edges(3, 3, [(2, 1)]).unwrap();
        let e = find_induced_pattern(&g, &single).unwrap().unwrap();
        assert_eq!(e, Embedding { a: vec![2], b: vec![1] });

        let k22 = Pattern::parse_fixture("11\n11\n").unwrap();
        let c4 = BipartiteGraph::from_edges(2, 2, [(0, 0), (0, 1), (1, 0), (1, 1)]).unwrap();
        assert!(find_induced_pattern(&c4, &k22).unwrap().is_some());
        let p3 = BipartiteGraph::from_edges(2, 1, [(0, 0), (1, 0)]).unwrap();
        assert!(find_induced_pattern(&p3, &k22).unwrap().is_none());
        let p3b = BipartiteGraph::from_edges(2, 2, [(0, 0), (1, 0), (1, 1)]).unwrap();
        assert!(find_induced_pattern(&p3b, &k22).unwrap().is_none());
    }

    #[test]
    fn pattern_search_matches_brute_force() {
        let mut rng = rng::seeded(31);
        for _ in 0..300 {
            let (m, n) = (rng.random_range(1..=6), rng.random_range(1..=6));
            let g = random_graph(m, n, rng.random_range(0.1..0.9), &mut rng);
            let pat = random_pattern(&mut rng);
            let got = find_induced_pattern(&g, &pat).unwrap();
            assert_eq!(got.is_some(), brute_pattern(&g, &pat), "{g:?}\n{pat:?}");
            if let Some(e) = got {
                assert!(e.is_valid(&g, &pat));
            }
        }
    }

    #[test]
    fn pattern_search_budget() {
        let h = gen_forbidden_h(2, 1).unwrap();
        let mut rng = rng::seeded(2);
        let g = random_graph(30, 12, 0.5, &mut rng);
        assert!(matches!(find_induced_pattern_capped(&g, &h.pattern, 10), Err(Error::Resource(_))));
    }

    #[test]
    fn forbidden_h_sizes() {
        let h = gen_forbidden_h(2, 1).unwrap();
        assert_eq!(h.k, 3);
        assert_eq!(h.pattern.sizes(), (9, 5));
        for i in 0..9 {
            let deg = (0..5).filter(|&j| h.pattern.label(i, j) == Label::One).count();
            assert_eq!(deg, 3);
        }
        // v3^(1) and v3^(2) (indices 2 and 3 here, 0-based sequences) share no neighbour
        assert!((0..9).all(|i| !(h.pattern.label(i, 3) == Label::One && h.pattern.label(i, 4) == Label::One)));

        let h3 = gen_forbidden_h(3, 1).unwrap();
        assert_eq!(h3.pattern.sizes(), (36, 14));
        assert!(matches!(gen_forbidden_h(1, 1), Err(Error::Domain(_))));
        assert!(matches!(gen_forbidden_h(3, 3), Err(Error::Resource(_))));
        assert_eq!(gen_forbidden_h(2, 2).unwrap().k, 17);
    }

    #[test]
    fn forbidden_h_prefix_rule() {
        fn is_prefix(a: &[u32], b: &[u32]) -> bool {
            a.len() <= b.len() && b[..a.len()] == *a
        }
        for d in 2..=3 {
            let h = gen_forbidden_h(d, 1).unwrap();
            let (na, nb) = h.pattern.sizes();
            for i in 0..na {
                let deg = (0..nb).filter(|&j| h.pattern.label(i, j) == Label::One).count();
                assert!(deg <= d + 1);
            }
            for x in 0..nb {
                for y in x + 1..nb {
                    let common = (0..na)
                        .any(|i| h.pattern.label(i, x) == Label::One && h.pattern.label(i, y) == Label::One);
                    let expected = match (&h.b_vertices[x], &h.b_vertices[y]) {
                        (HVertex::Layer(s), HVertex::Layer(t)) => is_prefix(s, t) || is_prefix(t, s),
                        _ => true,
                    };
                    assert_eq!(common, expected, "d={d} pair ({x},{y})");
                }
            }
        }
    }

    #[test]
    fn pi_pattern_counts() {
        let p5 = gen_pattern_pi(5).unwrap();
        let ones: usize = (1..=5).map(|i| (i + 1).min(5)).sum();
        assert_eq!(ones, 19);
        assert_eq!(p5.count(Label::One), 19);
        assert_eq!(p5.count(Label::Zero), 3);
        assert_eq!(p5.count(Label::Any), 3);
        // Π_2: every pair satisfies i ≥ j − 1
        let p2 = gen_pattern_pi(2).unwrap();
        assert_eq!((p2.count(Label::One), p2.count(Label::Zero), p2.count(Label::Any)), (4, 0, 0));
        for d in 3..9 {
            let p = gen_pattern_pi(d).unwrap();
            assert_eq!(p.label(0, 2), Label::Zero);
            assert_eq!(p.count(Label::Zero), d - 2);
            assert_eq!(p.count(Label::One), (1..=d).map(|i| (i + 1).min(d)).sum::<usize>());
        }
        assert!(gen_pattern_pi(1).is_err());
    }

    #[test]
    fn fixtures_roundtrip() {
        let mut rng = rng::seeded(8);
        let g = random_graph(5, 7, 0.4, &mut rng);
        assert_eq!(BipartiteGraph::parse_fixture(&g.to_fixture()).unwrap(), g);
        let p = gen_pattern_pi(4).unwrap();
        assert_eq!(Pattern::parse_fixture(&p.to_string()).unwrap(), p);
        assert!(BipartiteGraph::parse_fixture("2 2\n0 5\n").is_err());
        assert!(Pattern::parse_fixture("01\n1\n").is_err());
        assert!(Pattern::parse_fixture("0x\n").is_err());
    }

    #[test]
    fn independent_set_examples() {
        let mut rng = rng::seeded(1);
        let empty = Hypergraph::new(4, 2, vec![]).unwrap();
        assert_eq!(independent_set_bound(4, 0, 2), 1);
        let r = hypergraph_independent_set(&empty, &mut rng).unwrap();
        assert!(!r.vertices.is_empty());

        let k4: Vec<Vec<usize>> = subsets(4, 2);
        let h = Hypergraph::new(4, 2, k4).unwrap();
        assert_eq!(independent_set_bound(4, 6, 2), 1);
        let r = hypergraph_independent_set(&h, &mut rng).unwrap();
        assert!(h.is_independent(&r.vertices) && !r.vertices.is_empty());

        assert_eq!(independent_set_bound(30, 40, 3), 5);
        for _ in 0..20 {
            let h = Hypergraph::random(30, 3, 40, &mut rng).unwrap();
            let r = hypergraph_independent_set(&h, &mut rng).unwrap();
            assert!(h.is_independent(&r.vertices));
            assert!(r.vertices.len() >= 5);
        }
    }

    #[test]
    fn hypergraph_validation() {
        assert!(Hypergraph::new(3, 2, vec![vec![0, 0]]).is_err());
        assert!(Hypergraph::new(3, 2, vec![vec![0, 3]]).is_err());
        assert!(Hypergraph::new(3, 1, vec![]).is_err());
        assert!(Hypergraph::new(0, 2, vec![]).is_err());
    }

    #[test]
    fn induced_subgraph_relabels() {
        let g = BipartiteGraph::from_edges(3, 3, [(0, 2), (2, 0), (1, 1)]).unwrap();
        let s = g.induced(&[2, 0], &[0, 2]);
        assert!(s.has_edge(0, 0) && s.has_edge(1, 1) && !s.has_edge(0, 1));
        assert_eq!(s.transpose().transpose(), s);
    }

    #[test]
    fn max_biclique() {
        let full = BipartiteGraph::from_edges(3, 4, (0..3).flat_map(|a| (0..4).map(move |b| (a, b)))).unwrap();
        assert_eq!(max_biclique_up_to(&full, 5, DEFAULT_SEARCH_CAP).unwrap(), 3);
        assert_eq!(max_biclique_up_to(&BipartiteGraph::new(3, 3), 5, DEFAULT_SEARCH_CAP).unwrap(), 0);
    }
}
