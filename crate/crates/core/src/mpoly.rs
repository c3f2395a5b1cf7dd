//! Sparse multivariate polynomials over a prime field.
//!
//! Points of `F_p^D` are residue vectors (`Vec<u32>`). The point domain is
//! always enumerated in lexicographic order with `x0` most significant, so
//! point index `i` is the base-`p` expansion of `i`.
//!
//! Textual form (used by fixtures): `p=7; vars=2; 3*x0^2*x1 + 1`. Integer
//! coefficients are reduced mod `p`; the printer emits residues and
//! [`MultiPoly::parse`] reads back exactly what it prints.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;

use crate::gf::{FieldCtx, FieldElement};
use crate::{checked_pow_cap, par, Error, Result, DEFAULT_ENUM_CAP};

pub type Point = Vec<u32>;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MultiPoly {
    ctx: FieldCtx,
    nvars: usize,
    /// exponent vector → nonzero coefficient
    terms: BTreeMap<Vec<u32>, u32>,
}

impl MultiPoly {
    pub fn zero(ctx: FieldCtx, nvars: usize) -> Result<Self> {
        if !ctx.is_prime_field() {
            return Err(Error::domain("polynomials are defined over prime fields only"));
        }
        Ok(Self { ctx, nvars, terms: BTreeMap::new() })
    }

    pub fn constant(ctx: FieldCtx, nvars: usize, c: i64) -> Result<Self> {
        let mut f = Self::zero(ctx, nvars)?;
        f.add_term(vec![0; nvars], ctx.reduce(c));
        Ok(f)
    }

    /// The coordinate function `x_i`.
    pub fn var(ctx: FieldCtx, nvars: usize, i: usize) -> Result<Self> {
        if i >= nvars {
            return Err(Error::domain(format!("variable x{i} out of range for {nvars} vars")));
        }
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self::from_terms(ctx, nvars, [(e, 1)])
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs; repeated
    /// exponents are summed.
    pub fn from_terms<I>(ctx: FieldCtx, nvars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, i64)>,
    {
        let mut f = Self::zero(ctx, nvars)?;
        for (e, c) in terms {
            if e.len() != nvars {
                return Err(Error::domain(format!(
                    "exponent vector has length {}, expected {nvars}",
                    e.len()
                )));
            }
            f.add_term(e, ctx.reduce(c));
        }
        Ok(f)
    }

    fn add_term(&mut self, e: Vec<u32>, c: u32) {
        if c == 0 {
            return;
        }
        let v = self.ctx.add_res(self.terms.get(&e).copied().unwrap_or(0), c);
        if v == 0 {
            self.terms.remove(&e);
        } else {
            self.terms.insert(e, v);
        }
    }

    pub fn ctx(&self) -> FieldCtx {
        self.ctx
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in ascending exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (&[u32], u32)> {
        self.terms.iter().map(|(e, &c)| (e.as_slice(), c))
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.ctx != other.ctx || self.nvars != other.nvars {
            return Err(Error::domain("polynomials live in different rings"));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (e, &c) in &other.terms {
            out.add_term(e.clone(), c);
        }
        Ok(out)
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = self.ctx.neg_res(*c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let ctx = self.ctx;
        let mut acc: BTreeMap<Vec<u32>, u32> = BTreeMap::new();
        for (e1, &c1) in &self.terms {
            for (e2, &c2) in &other.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                let slot = acc.entry(e).or_insert(0);
                *slot = ctx.add_res(*slot, ctx.mul_res(c1, c2));
            }
        }
        acc.retain(|_, c| *c != 0);
        Ok(Self { ctx, nvars: self.nvars, terms: acc })
    }

    /// Evaluates at a point of `F_p^nvars`.
    pub fn evaluate(&self, x: &[u32]) -> Result<FieldElement> {
        if x.len() != self.nvars {
            return Err(Error::domain(format!(
                "point has dimension {}, polynomial has {} variables",
                x.len(),
                self.nvars
            )));
        }
        Ok(self.ctx.elem(self.eval_res(x) as i64))
    }

    /// Term-by-term evaluation on raw residues; `x.len()` must equal `nvars`.
    pub fn eval_res(&self, x: &[u32]) -> u32 {
        let ctx = self.ctx;
        let mut sum = 0u32;
        for (e, &c) in &self.terms {
            let mut t = c;
            for (&xi, &ei) in x.iter().zip(e) {
                if ei > 0 {
                    t = ctx.mul_res(t, ctx.pow_res(xi % ctx.p() as u32, ei as u64));
                }
            }
            sum = ctx.add_res(sum, t);
        }
        sum
    }

    /// A precompiled evaluator for repeated evaluation.
    pub fn evaluator(&self) -> Evaluator {
        Evaluator::new(self)
    }

    /// `f_q(x) = f(x, q)`: substitutes the trailing `q.len()` variables.
    pub fn bivariate_section(&self, q: &[u32]) -> Result<Self> {
        if q.is_empty() || q.len() >= self.nvars {
            return Err(Error::domain(format!(
                "section point of dimension {} does not split {} variables",
                q.len(),
                self.nvars
            )));
        }
        let ctx = self.ctx;
        let d1 = self.nvars - q.len();
        let mut out = Self::zero(ctx, d1)?;
        for (e, &c) in &self.terms {
            let mut t = c;
            for (&qi, &ei) in q.iter().zip(&e[d1..]) {
                t = ctx.mul_res(t, ctx.pow_res(qi % ctx.p() as u32, ei as u64));
            }
            out.add_term(e[..d1].to_vec(), t);
        }
        Ok(out)
    }

    /// Coefficients of all `C(D+Δ, D)` monomials of degree ≤ Δ drawn i.i.d.
    /// uniform from `F_p`.
    pub fn sample_uniform<R: Rng + ?Sized>(
        ctx: FieldCtx,
        nvars: usize,
        degree: u32,
        rng: &mut R,
    ) -> Result<Self> {
        if nvars == 0 {
            return Err(Error::domain("need at least one variable"));
        }
        let mut f = Self::zero(ctx, nvars)?;
        let p = ctx.p() as u32;
        for e in monomials(nvars, degree) {
            let c = rng.random_range(0..p);
            if c != 0 {
                f.terms.insert(e, c);
            }
        }
        Ok(f)
    }

    /// All points of `F_p^D` where `f` vanishes, in lexicographic order.
    pub fn zero_set(&self) -> Result<Vec<Point>> {
        self.zero_set_capped(DEFAULT_ENUM_CAP)
    }

    pub fn zero_set_capped(&self, cap: u64) -> Result<Vec<Point>> {
        let total = domain_size(self.ctx.p(), self.nvars, cap)?;
        let ev = self.evaluator();
        let p = self.ctx.p();
        let d = self.nvars;
        let parts = par::map_chunks(total, |range| {
            let mut scratch = ev.scratch();
            let mut x = vec![0u32; d];
            let mut out = Vec::new();
            for i in range {
                point_into(p, i as u64, &mut x);
                if ev.eval(&x, &mut scratch) == 0 {
                    out.push(x.clone());
                }
            }
            out
        });
        Ok(parts.into_iter().flatten().collect())
    }

    /// `|zero_set(f)|` without materializing the points.
    pub fn count_zeros(&self, cap: u64) -> Result<u64> {
        let total = domain_size(self.ctx.p(), self.nvars, cap)?;
        let ev = self.evaluator();
        let p = self.ctx.p();
        let d = self.nvars;
        let parts = par::map_chunks(total, |range| {
            let mut scratch = ev.scratch();
            let mut x = vec![0u32; d];
            let mut n = 0u64;
            for i in range {
                point_into(p, i as u64, &mut x);
                n += (ev.eval(&x, &mut scratch) == 0) as u64;
            }
            n
        });
        Ok(parts.into_iter().sum())
    }

    /// Parses `p=<prime>; vars=<n>; <expression>`.
    pub fn parse(text: &str) -> Result<Self> {
        let (ctx, nvars, body) = parse_header(text, 1)?;
        parse_expr(ctx, nvars, body, 1)
    }

    /// The expression part only (no header), e.g. `3*x0^2*x1 + 1`.
    pub fn body(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        // descending total degree, then descending exponents
        let mut ts: Vec<(&Vec<u32>, &u32)> = self.terms.iter().collect();
        ts.sort_by(|a, b| {
            let da: u32 = a.0.iter().sum();
            let db: u32 = b.0.iter().sum();
            db.cmp(&da).then_with(|| b.0.cmp(a.0))
        });
        let parts: Vec<String> = ts
            .into_iter()
            .map(|(e, &c)| {
                let mono: Vec<String> = e
                    .iter()
                    .enumerate()
                    .filter(|(_, &k)| k > 0)
                    .map(|(i, &k)| if k == 1 { format!("x{i}") } else { format!("x{i}^{k}") })
                    .collect();
                match (mono.is_empty(), c) {
                    (true, _) => c.to_string(),
                    (false, 1) => mono.join("*"),
                    (false, _) => format!("{c}*{}", mono.join("*")),
                }
            })
            .collect();
        parts.join(" + ")
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p={}; vars={}; {}", self.ctx.p(), self.nvars, self.body())
    }
}

impl fmt::Debug for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Compiled polynomial: sparse factor lists and per-variable power tables.
pub struct Evaluator {
    ctx: FieldCtx,
    max_exp: Vec<u32>,
    terms: Vec<(u32, Vec<(usize, u32)>)>,
}

pub struct EvalScratch {
    powers: Vec<Vec<u32>>,
}

impl Evaluator {
    fn new(f: &MultiPoly) -> Self {
        let mut max_exp = vec![0u32; f.nvars];
        let terms = f
            .terms
            .iter()
            .map(|(e, &c)| {
                let factors = e
                    .iter()
                    .enumerate()
                    .filter(|(_, &k)| k > 0)
                    .map(|(i, &k)| {
                        max_exp[i] = max_exp[i].max(k);
                        (i, k)
                    })
                    .collect();
                (c, factors)
            })
            .collect();
        Self { ctx: f.ctx, max_exp, terms }
    }

    pub fn scratch(&self) -> EvalScratch {
        EvalScratch { powers: self.max_exp.iter().map(|&m| vec![0; m as usize + 1]).collect() }
    }

    pub fn eval(&self, x: &[u32], s: &mut EvalScratch) -> u32 {
        let ctx = self.ctx;
        for (i, pw) in s.powers.iter_mut().enumerate() {
            pw[0] = 1;
            for k in 1..pw.len() {
                pw[k] = ctx.mul_res(pw[k - 1], x[i]);
            }
        }
        let p = ctx.p();
        let mut sum: u64 = 0;
        for (c, factors) in &self.terms {
            let mut t = *c as u64;
            for &(i, k) in factors {
                t = t * s.powers[i][k as usize] as u64 % p;
            }
            sum += t;
            if sum >= 1 << 62 {
                sum %= p;
            }
        }
        (sum % p) as u32
    }
}

/// All exponent vectors in `nvars` variables with total degree ≤ `degree`,
/// in lexicographic order.
pub fn monomials(nvars: usize, degree: u32) -> Vec<Vec<u32>> {
    fn rec(i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for k in 0..=left {
            cur[i] = k;
            rec(i + 1, left - k, cur, out);
        }
        cur[i] = 0;
    }
    let mut out = Vec::new();
    rec(0, degree, &mut vec![0; nvars], &mut out);
    out
}

/// `p^dim` as a `usize`, or a resource error above `cap`.
pub fn domain_size(p: u64, dim: usize, cap: u64) -> Result<usize> {
    checked_pow_cap(p, dim, cap)
        .map(|n| n as usize)
        .ok_or_else(|| Error::resource(format!("enumerating {p}^{dim} points exceeds cap {cap}")))
}

/// Writes the point with lexicographic index `idx` into `out`.
pub fn point_into(p: u64, mut idx: u64, out: &mut [u32]) {
    for slot in out.iter_mut().rev() {
        *slot = (idx % p) as u32;
        idx /= p;
    }
}

pub fn point_at(p: u64, dim: usize, idx: u64) -> Point {
    let mut x = vec![0; dim];
    point_into(p, idx, &mut x);
    x
}

/// Inverse of [`point_at`].
pub fn point_index(p: u64, x: &[u32]) -> u64 {
    x.iter().fold(0u64, |acc, &c| acc * p + c as u64)
}

/// All points of `F_p^dim` in lexicographic order.
pub fn all_points(p: u64, dim: usize, cap: u64) -> Result<Vec<Point>> {
    let n = domain_size(p, dim, cap)?;
    Ok((0..n as u64).map(|i| point_at(p, dim, i)).collect())
}

fn parse_header(text: &str, line: usize) -> Result<(FieldCtx, usize, &str)> {
    let mut parts = text.splitn(3, ';');
    let mut field = |name: &str| -> Result<u64> {
        let part = parts
            .next()
            .ok_or_else(|| Error::parse(line, format!("missing `{name}=` header field")))?;
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::parse(line, format!("expected `{name}=<int>`")))?;
        if k.trim() != name {
            return Err(Error::parse(line, format!("expected `{name}`, found `{}`", k.trim())));
        }
        v.trim()
            .parse()
            .map_err(|_| Error::parse(line, format!("bad integer for `{name}`: `{}`", v.trim())))
    };
    let p = field("p")?;
    let nvars = field("vars")? as usize;
    let body = parts.next().ok_or_else(|| Error::parse(line, "missing polynomial body"))?;
    let ctx = FieldCtx::prime(p).map_err(|e| Error::parse(line, e.to_string()))?;
    Ok((ctx, nvars, body))
}

fn parse_expr(ctx: FieldCtx, nvars: usize, body: &str, line: usize) -> Result<MultiPoly> {
    let s: String = body.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err(Error::parse(line, "empty polynomial"));
    }
    // split into signed terms at top-level + and −
    let mut terms: Vec<(bool, String)> = Vec::new();
    let mut cur = String::new();
    let mut neg = false;
    for (i, ch) in s.char_indices() {
        if (ch == '+' || ch == '-') && !(i > 0 && s[..i].ends_with('^')) {
            if !cur.is_empty() {
                terms.push((neg, std::mem::take(&mut cur)));
            } else if i > 0 {
                return Err(Error::parse(line, "dangling sign"));
            }
            neg = ch == '-';
        } else {
            cur.push(ch);
        }
    }
    if cur.is_empty() {
        return Err(Error::parse(line, "expression ends with a sign"));
    }
    terms.push((neg, cur));

    let mut f = MultiPoly::zero(ctx, nvars)?;
    for (neg, t) in terms {
        let mut coef: u32 = 1;
        let mut e = vec![0u32; nvars];
        for factor in t.split('*') {
            if factor.is_empty() {
                return Err(Error::parse(line, format!("empty factor in `{t}`")));
            }
            if let Some(rest) = factor.strip_prefix('x') {
                let (idx, pow) = match rest.split_once('^') {
                    Some((i, k)) => (i, k),
                    None => (rest, "1"),
                };
                let idx: usize =
                    idx.parse().map_err(|_| Error::parse(line, format!("bad variable `{factor}`")))?;
                let pow: u32 =
                    pow.parse().map_err(|_| Error::parse(line, format!("bad exponent `{factor}`")))?;
                if idx >= nvars {
                    return Err(Error::parse(line, format!("x{idx} out of range (vars={nvars})")));
                }
                e[idx] += pow;
            } else {
                let v: i64 = factor
                    .parse()
                    .map_err(|_| Error::parse(line, format!("bad coefficient `{factor}`")))?;
                coef = ctx.mul_res(coef, ctx.reduce(v));
            }
        }
        if neg {
            coef = ctx.neg_res(coef);
        }
        f.add_term(e, coef);
    }
    Ok(f)
}

/// Parses a defining system on one line: `p=7; vars=3; f1, f2, ...`.
pub fn parse_system(text: &str, line: usize) -> Result<Vec<MultiPoly>> {
    let (ctx, nvars, body) = parse_header(text, line)?;
    body.split(',').map(|b| parse_expr(ctx, nvars, b, line)).collect()
}

/// One polynomial per non-blank line; `#` starts a comment.
pub fn parse_poly_list(text: &str) -> Result<Vec<MultiPoly>> {
    fixture_lines(text)
        .map(|(ln, l)| {
            let (ctx, nvars, body) = parse_header(l, ln)?;
            parse_expr(ctx, nvars, body, ln)
        })
        .collect()
}

/// One defining system per non-blank line.
pub fn parse_system_list(text: &str) -> Result<Vec<Vec<MultiPoly>>> {
    fixture_lines(text).map(|(ln, l)| parse_system(l, ln)).collect()
}

fn fixture_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}
