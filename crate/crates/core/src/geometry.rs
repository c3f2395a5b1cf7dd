//! Diagonal bilinear forms, unit spheres and affine flats over `F_q^d`.
//!
//! Points are coordinate vectors of [`FieldElement`]s, so everything here
//! works over both `F_p` and `F_{p^2}`. Exhaustive scans enumerate `F_q^d`
//! in lexicographic order (first coordinate most significant, field
//! elements by [`FieldCtx::element_at`]).

use std::fmt;
use std::ops::ControlFlow;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::bigraph::BipartiteGraph;
use crate::gf::{FieldCtx, FieldElement, FieldKind};
use crate::linalg::{self, Vector};
use crate::{checked_pow_cap, par, Error, Result, DEFAULT_ENUM_CAP, DEFAULT_SEARCH_CAP};

/// `⟨u, v⟩ = Σ σ_i u_i v_i` with `σ_i ∈ {+1, −1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BilinearForm {
    ctx: FieldCtx,
    signature: Vec<i8>,
}

impl BilinearForm {
    pub fn new(ctx: FieldCtx, signature: Vec<i8>) -> Result<Self> {
        if signature.is_empty() {
            return Err(Error::domain("form needs dimension ≥ 1"));
        }
        if signature.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::domain("signature entries must be ±1"));
        }
        Ok(Self { ctx, signature })
    }

    pub fn standard(ctx: FieldCtx, d: usize) -> Result<Self> {
        Self::new(ctx, vec![1; d])
    }

    /// `⟨·,·⟩_d`: standard except the last entry is −1 when `d ≡ 1 (mod 4)`.
    pub fn unit_distance(ctx: FieldCtx, d: usize) -> Result<Self> {
        let mut sig = vec![1; d];
        if d % 4 == 1 {
            sig[d - 1] = -1;
        }
        Self::new(ctx, sig)
    }

    pub fn ctx(&self) -> FieldCtx {
        self.ctx
    }

    pub fn dim(&self) -> usize {
        self.signature.len()
    }

    pub fn signature(&self) -> &[i8] {
        &self.signature
    }

    pub fn is_standard(&self) -> bool {
        self.signature.iter().all(|&s| s == 1)
    }

    /// Signature as a `+`/`-` string, e.g. `++-`.
    pub fn signature_string(&self) -> String {
        self.signature.iter().map(|&s| if s > 0 { '+' } else { '-' }).collect()
    }

    /// Same signature over another field.
    pub fn over(&self, ctx: FieldCtx) -> Self {
        Self { ctx, signature: self.signature.clone() }
    }

    fn check(&self, v: &[FieldElement]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::domain(format!("vector of length {} for a form of dimension {}", v.len(), self.dim())));
        }
        if v.iter().any(|x| x.ctx() != self.ctx) {
            return Err(Error::domain("vector lives over a different field than the form"));
        }
        Ok(())
    }

    pub fn inner(&self, u: &[FieldElement], v: &[FieldElement]) -> Result<FieldElement> {
        self.check(u)?;
        self.check(v)?;
        Ok(self.dot(u, v))
    }

    pub fn norm_sq(&self, v: &[FieldElement]) -> Result<FieldElement> {
        self.inner(v, v)
    }

    /// Unchecked inner product; callers guarantee shapes.
    pub(crate) fn dot(&self, u: &[FieldElement], v: &[FieldElement]) -> FieldElement {
        let mut acc = self.ctx.zero();
        for ((&a, &b), &s) in u.iter().zip(v).zip(&self.signature) {
            let t = a * b;
            acc = if s > 0 { acc + t } else { acc - t };
        }
        acc
    }

    pub(crate) fn dist_sq(&self, u: &[FieldElement], v: &[FieldElement]) -> FieldElement {
        let mut acc = self.ctx.zero();
        for ((&a, &b), &s) in u.iter().zip(v).zip(&self.signature) {
            let t = (a - b).square();
            acc = if s > 0 { acc + t } else { acc - t };
        }
        acc
    }

    pub fn is_unit_distance(&self, u: &[FieldElement], v: &[FieldElement]) -> bool {
        self.dist_sq(u, v).is_one()
    }
}

pub fn sub(u: &[FieldElement], v: &[FieldElement]) -> Vector {
    u.iter().zip(v).map(|(&a, &b)| a - b).collect()
}

pub fn add(u: &[FieldElement], v: &[FieldElement]) -> Vector {
    u.iter().zip(v).map(|(&a, &b)| a + b).collect()
}

fn scale(c: FieldElement, v: &[FieldElement]) -> Vector {
    v.iter().map(|&a| c * a).collect()
}

/// Lifts integer coordinates into `ctx`.
pub fn vector(ctx: FieldCtx, coords: &[i64]) -> Vector {
    coords.iter().map(|&c| ctx.elem(c)).collect()
}

/// The point of `F_q^d` with lexicographic index `idx`.
pub fn vector_at(ctx: FieldCtx, d: usize, mut idx: u64) -> Vector {
    let q = ctx.order();
    let mut out = vec![ctx.zero(); d];
    for slot in out.iter_mut().rev() {
        *slot = ctx.element_at(idx % q);
        idx /= q;
    }
    out
}

pub fn vector_index(v: &[FieldElement]) -> u64 {
    v.iter().fold(0u64, |acc, x| acc * x.ctx().order() + x.index())
}

fn domain(ctx: FieldCtx, d: usize, cap: u64) -> Result<usize> {
    checked_pow_cap(ctx.order(), d, cap)
        .map(|n| n as usize)
        .ok_or_else(|| Error::resource(format!("enumerating {}^{d} points exceeds cap {cap}", ctx.order())))
}

pub fn all_vectors(ctx: FieldCtx, d: usize, cap: u64) -> Result<Vec<Vector>> {
    let n = domain(ctx, d, cap)?;
    Ok((0..n as u64).map(|i| vector_at(ctx, d, i)).collect())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sphere {
    pub form: BilinearForm,
    pub center: Vector,
}

impl Sphere {
    pub fn new(form: BilinearForm, center: Vector) -> Result<Self> {
        form.check(&center)?;
        Ok(Self { form, center })
    }

    pub fn unit(form: BilinearForm) -> Self {
        let center = vec![form.ctx.zero(); form.dim()];
        Self { form, center }
    }

    /// `‖x − w‖² = 1`.
    pub fn contains(&self, x: &[FieldElement]) -> bool {
        x.len() == self.center.len() && self.form.is_unit_distance(x, &self.center)
    }
}

pub fn sphere_points(s: &Sphere) -> Result<Vec<Vector>> {
    sphere_points_capped(s, DEFAULT_ENUM_CAP)
}

/// All rational points of `s`, lexicographic.
pub fn sphere_points_capped(s: &Sphere, cap: u64) -> Result<Vec<Vector>> {
    let ctx = s.form.ctx;
    let d = s.form.dim();
    let total = domain(ctx, d, cap)?;
    let parts = par::map_chunks(total, |range| {
        range
            .map(|i| vector_at(ctx, d, i as u64))
            .filter(|x| s.contains(x))
            .collect::<Vec<_>>()
    });
    Ok(parts.into_iter().flatten().collect())
}

/// `base + span(basis)`, or the empty flat.
#[derive(Clone, PartialEq, Eq)]
pub struct AffineFlat {
    ctx: FieldCtx,
    ambient: usize,
    base: Option<Vector>,
    basis: Vec<Vector>,
}

impl AffineFlat {
    pub fn empty(ctx: FieldCtx, ambient: usize) -> Self {
        Self { ctx, ambient, base: None, basis: Vec::new() }
    }

    pub fn full(ctx: FieldCtx, ambient: usize) -> Self {
        let basis = (0..ambient)
            .map(|i| {
                let mut e = vec![ctx.zero(); ambient];
                e[i] = ctx.one();
                e
            })
            .collect();
        Self { ctx, ambient, base: Some(vec![ctx.zero(); ambient]), basis }
    }

    pub fn new(base: Vector, basis: Vec<Vector>) -> Result<Self> {
        let ctx = base.first().map(|x| x.ctx()).ok_or_else(|| Error::domain("flat in F^0"))?;
        let ambient = base.len();
        if basis.iter().any(|b| b.len() != ambient) {
            return Err(Error::domain("basis vector has the wrong length"));
        }
        if linalg::rank(&basis) != basis.len() {
            return Err(Error::domain("basis vectors are linearly dependent"));
        }
        Ok(Self { ctx, ambient, base: Some(base), basis })
    }

    /// The smallest flat containing all `points`.
    pub fn affine_span(points: &[Vector]) -> Result<Self> {
        let first = points.first().ok_or_else(|| Error::domain("affine span of no points"))?;
        let mut diffs: Vec<Vector> = points[1..].iter().map(|x| sub(x, first)).collect();
        if diffs.is_empty() {
            return Self::new(first.clone(), Vec::new());
        }
        linalg::rref(&mut diffs);
        Self::new(first.clone(), diffs)
    }

    /// Solution set of `A x = b`.
    pub fn from_equations(ctx: FieldCtx, ambient: usize, a: &[Vector], b: &[FieldElement]) -> Self {
        if a.is_empty() {
            return Self::full(ctx, ambient);
        }
        match linalg::solve_affine(ctx, a, b, ambient) {
            Some((x, hom)) => Self { ctx, ambient, base: Some(x), basis: hom },
            None => Self::empty(ctx, ambient),
        }
    }

    /// Equations `A x = b` cutting out the flat (a single inconsistent
    /// equation for the empty flat).
    pub fn to_equations(&self) -> (Vec<Vector>, Vector) {
        let Some(base) = &self.base else {
            return (vec![vec![self.ctx.zero(); self.ambient]], vec![self.ctx.one()]);
        };
        let normals = linalg::nullspace(self.ctx, &self.basis, self.ambient);
        let rhs = normals
            .iter()
            .map(|n| n.iter().zip(base).fold(self.ctx.zero(), |s, (&u, &v)| s + u * v))
            .collect();
        (normals, rhs)
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_none()
    }

    /// `None` for the empty flat.
    pub fn dim(&self) -> Option<usize> {
        self.base.as_ref().map(|_| self.basis.len())
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn base(&self) -> Option<&Vector> {
        self.base.as_ref()
    }

    pub fn basis(&self) -> &[Vector] {
        &self.basis
    }

    pub fn contains(&self, x: &[FieldElement]) -> bool {
        let Some(base) = &self.base else {
            return false;
        };
        if x.len() != self.ambient {
            return false;
        }
        let mut rows = self.basis.clone();
        rows.push(sub(x, base));
        linalg::rank(&rows) == self.basis.len()
    }

    /// All points, in lexicographic order of their coordinates in the basis.
    pub fn points(&self, cap: u64) -> Result<Vec<Vector>> {
        let Some(base) = &self.base else {
            return Ok(Vec::new());
        };
        let n = domain(self.ctx, self.basis.len(), cap)?;
        Ok((0..n as u64)
            .map(|i| {
                let c = vector_at(self.ctx, self.basis.len(), i);
                c.iter().zip(&self.basis).fold(base.clone(), |acc, (&ci, b)| add(&acc, &scale(ci, b)))
            })
            .collect())
    }

    /// Every direction of `self` is orthogonal to every direction of `other`.
    pub fn is_orthogonal(&self, form: &BilinearForm, other: &AffineFlat) -> bool {
        self.basis.iter().all(|u| other.basis.iter().all(|v| form.dot(u, v).is_zero()))
    }
}

impl fmt::Debug for AffineFlat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.base {
            None => write!(f, "∅ ⊂ F^{}", self.ambient),
            Some(b) => write!(f, "{b:?} + span{:?}", self.basis),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SphereIntersection {
    pub flat: AffineFlat,
    /// Distinct centers, in first-occurrence order.
    pub centers: Vec<Vector>,
    /// How many repeated spheres were dropped.
    pub duplicates_removed: usize,
}

/// Reduces `S_1 ∩ … ∩ S_k` to `S_1 ∩ U`, where `U` solves
/// `2⟨x, w_j − w_1⟩ = ⟨w_j, w_j⟩ − ⟨w_1, w_1⟩` for `j ≥ 2`.
///
/// Identical spheres are collapsed first. An inconsistent system yields the
/// empty flat.
pub fn intersect_spheres_to_flat(ss: &[Sphere]) -> Result<SphereIntersection> {
    let first = ss.first().ok_or_else(|| Error::domain("need at least one sphere"))?;
    let form = &first.form;
    if ss.iter().any(|s| s.form != *form) {
        return Err(Error::domain("spheres use different forms"));
    }
    let ctx = form.ctx;
    if ctx.p() == 2 {
        return Err(Error::domain("sphere reduction divides by 2; characteristic 2 unsupported"));
    }
    let mut centers: Vec<Vector> = Vec::new();
    for s in ss {
        if !centers.contains(&s.center) {
            centers.push(s.center.clone());
        }
    }
    let duplicates_removed = ss.len() - centers.len();
    let d = form.dim();
    let w1 = &centers[0];
    let n1 = form.dot(w1, w1);
    let two = ctx.elem(2);
    let mut a = Vec::new();
    let mut b = Vec::new();
    for wj in &centers[1..] {
        let diff = sub(wj, w1);
        a.push(
            diff.iter()
                .zip(form.signature())
                .map(|(&c, &s)| if s > 0 { two * c } else { -(two * c) })
                .collect(),
        );
        b.push(form.dot(wj, wj) - n1);
    }
    let flat = AffineFlat::from_equations(ctx, d, &a, &b);
    Ok(SphereIntersection { flat, centers, duplicates_removed })
}

/// `⟨x − y, x − y⟩ = 0` on the flat, decided on basis pairs.
pub fn is_totally_isotropic(form: &BilinearForm, v: &AffineFlat) -> bool {
    v.basis.iter().all(|a| v.basis.iter().all(|b| form.dot(a, b).is_zero()))
}

/// Visits every `k`-dimensional linear subspace of `F_q^d` once, as its
/// reduced row-echelon basis.
///
/// Rows are generated one at a time; `accept(rows_so_far, candidate)` may
/// reject a partial basis, pruning everything below it. `visit` returning
/// `Break` stops the walk. More than `cap` candidate rows is a resource
/// error.
pub fn for_each_subspace<A, V>(ctx: FieldCtx, d: usize, k: usize, cap: u64, accept: A, mut visit: V) -> Result<()>
where
    A: Fn(&[Vector], &Vector) -> bool,
    V: FnMut(&[Vector]) -> ControlFlow<()>,
{
    if k > d {
        return Ok(());
    }
    let mut walk = SubspaceWalk { ctx, d, k, cap, nodes: 0 };
    let mut rows = Vec::with_capacity(k);
    walk.rec(&mut rows, 0, &accept, &mut visit).map(|_| ())
}

struct SubspaceWalk {
    ctx: FieldCtx,
    d: usize,
    k: usize,
    cap: u64,
    nodes: u64,
}

impl SubspaceWalk {
    fn rec<A, V>(&mut self, rows: &mut Vec<Vector>, min_pivot: usize, accept: &A, visit: &mut V) -> Result<ControlFlow<()>>
    where
        A: Fn(&[Vector], &Vector) -> bool,
        V: FnMut(&[Vector]) -> ControlFlow<()>,
    {
        if rows.len() == self.k {
            return Ok(visit(rows));
        }
        let remaining = self.k - rows.len();
        let q = self.ctx.order();
        for c in min_pivot..=(self.d - remaining) {
            // later pivots must sit in columns where earlier rows vanish
            if rows.iter().any(|r| !r[c].is_zero()) {
                continue;
            }
            let free = self.d - c - 1;
            let count = checked_pow_cap(q, free, self.cap)
                .ok_or_else(|| Error::resource("subspace enumeration exceeds cap"))?;
            for idx in 0..count {
                self.nodes += 1;
                if self.nodes > self.cap {
                    return Err(Error::resource(format!("subspace enumeration exceeded {} rows", self.cap)));
                }
                let tail = vector_at(self.ctx, free, idx);
                let mut row = vec![self.ctx.zero(); self.d];
                row[c] = self.ctx.one();
                row[c + 1..].copy_from_slice(&tail);
                // entries under earlier pivots must be zero
                if rows.iter().any(|r| {
                    let pc = r.iter().position(|x| !x.is_zero()).expect("nonzero row");
                    !row[pc].is_zero()
                }) {
                    continue;
                }
                if !accept(rows, &row) {
                    continue;
                }
                rows.push(row);
                let flow = self.rec(rows, c + 1, accept, visit)?;
                rows.pop();
                if flow.is_break() {
                    return Ok(flow);
                }
            }
        }
        Ok(ControlFlow::Continue(()))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlatRecord {
    pub dim: usize,
    pub base: Vec<String>,
    pub basis: Vec<Vec<String>>,
    pub totally_isotropic: bool,
    pub center_orthogonal: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlatsInSphereReport {
    pub sphere_points: usize,
    /// 0-dimensional flats (single points) pass both identities vacuously.
    pub point_flats: usize,
    pub flats: Vec<FlatRecord>,
    pub all_pass: bool,
}

fn render(v: &[FieldElement]) -> Vec<String> {
    v.iter().map(|x| x.to_string()).collect()
}

/// Finds every flat of dimension `1..=dim_cap` contained in `s` and checks,
/// pair by pair, that `⟨x − y, x − y⟩ = 0` and `⟨x − w, x − y⟩ = 0`.
pub fn flats_in_sphere_check(s: &Sphere, dim_cap: usize) -> Result<FlatsInSphereReport> {
    flats_in_sphere_check_capped(s, dim_cap, DEFAULT_SEARCH_CAP)
}

pub fn flats_in_sphere_check_capped(s: &Sphere, dim_cap: usize, cap: u64) -> Result<FlatsInSphereReport> {
    let form = &s.form;
    let ctx = form.ctx;
    let d = form.dim();
    let pts = sphere_points_capped(s, cap)?;
    let mut flats = Vec::new();
    for k in 1..=dim_cap.min(d) {
        let mut err = None;
        for_each_subspace(ctx, d, k, cap, |_, _| true, |basis| {
            let pivots: Vec<usize> =
                basis.iter().map(|r| r.iter().position(|x| !x.is_zero()).expect("nonzero")).collect();
            for x in &pts {
                // canonical coset representative: clear the pivot coordinates
                let rep = basis.iter().zip(&pivots).fold(x.clone(), |acc, (b, &pc)| sub(&acc, &scale(acc[pc], b)));
                if rep != *x && pts.binary_search_by(|y| vector_index(y).cmp(&vector_index(&rep))).is_ok() {
                    // the coset was (or will be) handled from its representative
                    continue;
                }
                let flat = AffineFlat { ctx, ambient: d, base: Some(rep.clone()), basis: basis.to_vec() };
                let members = match flat.points(cap) {
                    Ok(m) => m,
                    Err(e) => {
                        err = Some(e);
                        return ControlFlow::Break(());
                    }
                };
                if members.iter().all(|y| s.contains(y)) {
                    flats.push(check_flat(form, &s.center, &flat, &members));
                }
            }
            ControlFlow::Continue(())
        })?;
        if let Some(e) = err {
            return Err(e);
        }
    }
    flats.sort_by(|a, b| (a.dim, &a.base, &a.basis).cmp(&(b.dim, &b.base, &b.basis)));
    flats.dedup_by(|a, b| a.dim == b.dim && a.base == b.base && a.basis == b.basis);
    let all_pass = flats.iter().all(|f| f.totally_isotropic && f.center_orthogonal);
    Ok(FlatsInSphereReport { sphere_points: pts.len(), point_flats: pts.len(), flats, all_pass })
}

fn check_flat(form: &BilinearForm, w: &[FieldElement], flat: &AffineFlat, members: &[Vector]) -> FlatRecord {
    let mut iso = true;
    let mut orth = true;
    for x in members {
        let xw = sub(x, w);
        for y in members {
            let xy = sub(x, y);
            iso &= form.dot(&xy, &xy).is_zero();
            orth &= form.dot(&xw, &xy).is_zero();
        }
    }
    FlatRecord {
        dim: flat.basis.len(),
        base: render(flat.base.as_ref().expect("nonempty")),
        basis: flat.basis.iter().map(|b| render(b)).collect(),
        totally_isotropic: iso,
        center_orthogonal: orth,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IsotropicUnitPair {
    pub v_basis: Vec<Vector>,
    pub w: Vector,
}

pub fn isotropic_unit_pair_search(form: &BilinearForm) -> Result<Option<IsotropicUnitPair>> {
    isotropic_unit_pair_search_capped(form, DEFAULT_SEARCH_CAP)
}

/// Exhaustive search, for odd `d = 2k + 1`, for a totally isotropic
/// `k`-dimensional subspace `V` and a vector `w` with `⟨w, w⟩ = 1` and
/// `w ⟂ V`. Translating `V` to the origin loses nothing.
pub fn isotropic_unit_pair_search_capped(form: &BilinearForm, cap: u64) -> Result<Option<IsotropicUnitPair>> {
    let d = form.dim();
    if d.is_multiple_of(2) {
        return Err(Error::domain(format!("d = {d} is even")));
    }
    let k = (d - 1) / 2;
    let ctx = form.ctx;
    let mut found = None;
    let mut err = None;
    let accept = |rows: &[Vector], r: &Vector| {
        form.dot(r, r).is_zero() && rows.iter().all(|b| form.dot(b, r).is_zero())
    };
    for_each_subspace(ctx, d, k, cap, accept, |basis| {
        // V^⊥ = {w : ⟨w, b⟩ = 0 for all b}
        let rows: Vec<Vector> = basis
            .iter()
            .map(|b| b.iter().zip(form.signature()).map(|(&x, &s)| if s > 0 { x } else { -x }).collect())
            .collect();
        let perp = if rows.is_empty() {
            AffineFlat::full(ctx, d)
        } else {
            let zero = vec![ctx.zero(); rows.len()];
            AffineFlat::from_equations(ctx, d, &rows, &zero)
        };
        match perp.points(cap) {
            Ok(ws) => {
                if let Some(w) = ws.into_iter().find(|w| form.dot(w, w).is_one()) {
                    found = Some(IsotropicUnitPair { v_basis: basis.to_vec(), w });
                    return ControlFlow::Break(());
                }
                ControlFlow::Continue(())
            }
            Err(e) => {
                err = Some(e);
                ControlFlow::Break(())
            }
        }
    })?;
    match err {
        Some(e) => Err(e),
        None => Ok(found),
    }
}

/// Graph on a point list with `a ~ b` iff `‖a − b‖² = 1`.
#[derive(Clone, Debug)]
pub struct UnitDistanceGraph {
    pub adj: Vec<FixedBitSet>,
}

impl UnitDistanceGraph {
    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|r| r.count_ones(..)).sum::<usize>() / 2
    }

    pub fn is_symmetric(&self) -> bool {
        self.adj.iter().enumerate().all(|(i, r)| r.ones().all(|j| self.adj[j].contains(i)))
    }

    pub fn is_loop_free(&self) -> bool {
        self.adj.iter().enumerate().all(|(i, r)| !r.contains(i))
    }

    /// Two copies of the point set; `(a, b)` is an edge iff `a ~ b`.
    pub fn to_bipartite(&self) -> BipartiteGraph {
        BipartiteGraph::from_rows(self.adj.len(), self.adj.clone())
    }
}

pub fn unit_distance_graph(points: &[Vector], form: &BilinearForm) -> Result<UnitDistanceGraph> {
    for x in points {
        form.check(x)?;
    }
    let n = points.len();
    let adj = par::map_range(n, |i| {
        let mut row = FixedBitSet::with_capacity(n);
        for (j, y) in points.iter().enumerate() {
            if form.is_unit_distance(&points[i], y) {
                row.insert(j);
            }
        }
        row
    });
    Ok(UnitDistanceGraph { adj })
}

/// Ordered pairs `(u, v) ∈ us × vs` at unit distance.
pub fn cross_unit_pairs(us: &[Vector], vs: &[Vector], form: &BilinearForm) -> u64 {
    par::map_range(us.len(), |i| vs.iter().filter(|v| form.is_unit_distance(&us[i], v)).count() as u64)
        .into_iter()
        .sum()
}

/// All points of `F_q^d` against all unit spheres (indexed by center).
pub fn point_sphere_incidence(form: &BilinearForm, cap: u64) -> Result<BipartiteGraph> {
    let pts = all_vectors(form.ctx, form.dim(), cap)?;
    Ok(unit_distance_graph(&pts, form)?.to_bipartite())
}

/// `(x_1, …, x_{d−1}, α x_d)` lifted into `F_{p^2}`.
pub fn phi_embed(points: &[Vector], alpha: FieldElement) -> Result<Vec<Vector>> {
    let ext = alpha.ctx();
    if ext.kind() != FieldKind::QuadraticExt {
        return Err(Error::domain("α must live in the quadratic extension"));
    }
    if !(alpha.square() + ext.one()).is_zero() {
        return Err(Error::domain("α² ≠ −1"));
    }
    points
        .iter()
        .map(|x| {
            if x.iter().any(|c| c.ctx() != ext.base()) {
                return Err(Error::domain("φ takes points over the prime field"));
            }
            let mut y: Vector = x.iter().map(|c| c.lift(ext)).collect();
            if let Some(last) = y.last_mut() {
                *last = *last * alpha;
            }
            Ok(y)
        })
        .collect()
}

/// Point-set fixture: `p d signature`, then `d` integers per line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointSet {
    pub form: BilinearForm,
    pub points: Vec<Vector>,
}

impl PointSet {
    pub fn to_fixture(&self) -> String {
        let mut s = format!("{} {} {}\n", self.form.ctx.p(), self.form.dim(), self.form.signature_string());
        for x in &self.points {
            let line: Vec<String> = x
                .iter()
                .map(|c| c.residue().map_or_else(|| c.index().to_string(), |r| r.to_string()))
                .collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn parse_fixture(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "empty point-set fixture"))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        let [p, d, sig] = parts[..] else {
            return Err(Error::parse(1, "header must be `p d signature`"));
        };
        let p: u64 = p.parse().map_err(|_| Error::parse(1, format!("bad prime `{p}`")))?;
        let d: usize = d.parse().map_err(|_| Error::parse(1, format!("bad dimension `{d}`")))?;
        let signature: Vec<i8> = sig
            .chars()
            .map(|c| match c {
                '+' => Ok(1),
                '-' => Ok(-1),
                _ => Err(Error::parse(1, format!("bad signature character `{c}`"))),
            })
            .collect::<Result<_>>()?;
        if signature.len() != d {
            return Err(Error::parse(1, "signature length differs from d"));
        }
        let ctx = FieldCtx::prime(p).map_err(|e| Error::parse(1, e.to_string()))?;
        let form = BilinearForm::new(ctx, signature).map_err(|e| Error::parse(1, e.to_string()))?;
        let points = lines
            .map(|(i, l)| {
                let coords: Vec<i64> = l
                    .split_whitespace()
                    .map(|t| t.parse().map_err(|_| Error::parse(i + 1, format!("bad coordinate `{t}`"))))
                    .collect::<Result<_>>()?;
                if coords.len() != d {
                    return Err(Error::parse(i + 1, format!("expected {d} coordinates")));
                }
                Ok(vector(ctx, &coords))
            })
            .collect::<Result<_>>()?;
        Ok(Self { form, points })
    }
}
