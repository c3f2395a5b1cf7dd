//! Exact arithmetic in `F_p` and in `F_{p^2} = F_p[α]/(α² + 1)` for
//! `p ≡ 3 (mod 4)`, plus prime search.
//!
//! Moduli are capped below 2³¹ so every product of two residues fits in a
//! `u64`. [`FieldCtx`] is a small `Copy` value; [`FieldElement`] carries its
//! context so mixed-field arithmetic is caught in debug builds.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest accepted modulus (exclusive).
pub const MODULUS_CAP: u64 = 1 << 31;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FieldKind {
    Prime,
    /// Degree-2 extension with reduction rule `α² = −1`.
    QuadraticExt,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldCtx {
    p: u32,
    kind: FieldKind,
}

impl FieldCtx {
    pub fn prime(p: u64) -> Result<Self> {
        check_modulus(p)?;
        Ok(Self { p: p as u32, kind: FieldKind::Prime })
    }

    /// `F_{p^2}` with `α² = −1`; requires `p ≡ 3 (mod 4)` so that `α² + 1`
    /// is irreducible over `F_p`.
    pub fn quadratic(p: u64) -> Result<Self> {
        check_modulus(p)?;
        if p % 4 != 3 {
            return Err(Error::domain(format!(
                "quadratic extension needs p ≡ 3 mod 4, got p = {p}"
            )));
        }
        Ok(Self { p: p as u32, kind: FieldKind::QuadraticExt })
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.p as u64
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn is_prime_field(&self) -> bool {
        self.kind == FieldKind::Prime
    }

    /// The prime subfield of this context.
    pub fn base(&self) -> FieldCtx {
        FieldCtx { p: self.p, kind: FieldKind::Prime }
    }

    /// Number of field elements (`p` or `p²`).
    pub fn order(&self) -> u64 {
        match self.kind {
            FieldKind::Prime => self.p(),
            FieldKind::QuadraticExt => self.p() * self.p(),
        }
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement { ctx: *self, c0: 0, c1: 0 }
    }

    pub fn one(&self) -> FieldElement {
        FieldElement { ctx: *self, c0: 1, c1: 0 }
    }

    /// Embeds an integer (reduced mod p) into this field.
    pub fn elem(&self, v: i64) -> FieldElement {
        FieldElement { ctx: *self, c0: self.reduce(v), c1: 0 }
    }

    /// `a + bα`. Fails on a prime-field context when `b ≢ 0`.
    pub fn elem2(&self, a: i64, b: i64) -> Result<FieldElement> {
        let c1 = self.reduce(b);
        if c1 != 0 && self.kind == FieldKind::Prime {
            return Err(Error::domain("prime field has no α component"));
        }
        Ok(FieldElement { ctx: *self, c0: self.reduce(a), c1 })
    }

    /// The element with enumeration index `i` in `0..order()`
    /// (`i = c0 + p·c1`).
    pub fn element_at(&self, i: u64) -> FieldElement {
        let p = self.p();
        FieldElement { ctx: *self, c0: (i % p) as u32, c1: ((i / p) % p) as u32 }
    }

    /// All elements in enumeration order.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        (0..self.order()).map(move |i| self.element_at(i))
    }

    // Raw residue arithmetic for prime-field kernels.

    #[inline]
    pub fn reduce(&self, v: i64) -> u32 {
        v.rem_euclid(self.p as i64) as u32
    }

    #[inline]
    pub fn add_res(&self, a: u32, b: u32) -> u32 {
        let s = a as u64 + b as u64;
        let p = self.p as u64;
        (if s >= p { s - p } else { s }) as u32
    }

    #[inline]
    pub fn sub_res(&self, a: u32, b: u32) -> u32 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    #[inline]
    pub fn neg_res(&self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline]
    pub fn mul_res(&self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.p as u64) as u32
    }

    pub fn pow_res(&self, mut base: u32, mut exp: u64) -> u32 {
        let mut acc = 1 % self.p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul_res(acc, base);
            }
            base = self.mul_res(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Inverse of a nonzero residue by the extended Euclidean algorithm.
    pub fn inv_res(&self, a: u32) -> Result<u32> {
        if a.is_multiple_of(self.p) {
            return Err(Error::domain("no inverse of zero"));
        }
        let (mut r0, mut r1) = (self.p as i64, a as i64);
        let (mut t0, mut t1) = (0i64, 1i64);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (t0, t1) = (t1, t0 - q * t1);
        }
        debug_assert_eq!(r0, 1);
        Ok(self.reduce(t0))
    }
}

fn check_modulus(p: u64) -> Result<()> {
    if p >= MODULUS_CAP {
        return Err(Error::domain(format!("modulus {p} exceeds 2^31 cap")));
    }
    if !is_prime(p) {
        return Err(Error::domain(format!("modulus {p} is not prime")));
    }
    Ok(())
}

/// Trial-division primality; exact for the moduli used here.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n.is_multiple_of(2) || n.is_multiple_of(3) {
        return false;
    }
    let mut i = 5u64;
    while i * i <= n {
        if n.is_multiple_of(i) || n.is_multiple_of(i + 2) {
            return false;
        }
        i += 6;
    }
    true
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Smallest prime strictly greater than `lower`, optionally restricted to
/// the residue class `r mod m`.
///
/// The search stops at `4·lower + 100`; every class used by the
/// constructions has a prime well inside that window.
pub fn find_prime(lower: u64, residue_class: Option<(u64, u64)>) -> Result<u64> {
    if lower < 2 {
        return Err(Error::domain(format!("find_prime needs lower ≥ 2, got {lower}")));
    }
    if let Some((r, m)) = residue_class {
        if m == 0 || gcd(r % m, m) != 1 {
            return Err(Error::domain(format!("residue class {r} mod {m} is not coprime")));
        }
    }
    let cap = lower.saturating_mul(4).saturating_add(100).min(MODULUS_CAP);
    let mut c = lower + 1;
    while c < cap {
        let in_class = residue_class.is_none_or(|(r, m)| c % m == r % m);
        if in_class && is_prime(c) {
            return Ok(c);
        }
        c += 1;
    }
    Err(Error::resource(format!("no prime found in ({lower}, {cap})")))
}

/// A square root of −1: `α` itself in `F_{p^2}`, or a residue root in `F_p`
/// when `p ≡ 1 (mod 4)`.
pub fn solve_unit_alpha(ctx: FieldCtx) -> Result<FieldElement> {
    match ctx.kind {
        FieldKind::QuadraticExt => Ok(FieldElement { ctx, c0: 0, c1: 1 }),
        FieldKind::Prime => {
            let p = ctx.p();
            if p == 2 {
                return Ok(ctx.one());
            }
            if p % 4 == 3 {
                return Err(Error::domain(format!("no square root of −1 in F_{p}")));
            }
            let minus_one = ctx.p - 1;
            for c in 2..p as u32 {
                let r = ctx.pow_res(c, (p - 1) / 4);
                if ctx.mul_res(r, r) == minus_one {
                    return Ok(ctx.elem(r as i64));
                }
            }
            unreachable!("F_p with p ≡ 1 mod 4 has a quadratic non-residue")
        }
    }
}

/// `a + bα` in an [`FieldCtx`]; `b` is always 0 in a prime field.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldElement {
    ctx: FieldCtx,
    c0: u32,
    c1: u32,
}

impl PartialOrd for FieldCtx {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for FieldCtx {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.p, self.kind as u8).cmp(&(other.p, other.kind as u8))
    }
}

impl FieldElement {
    pub fn ctx(&self) -> FieldCtx {
        self.ctx
    }

    /// `(a, b)` for `a + bα`.
    pub fn coords(&self) -> (u32, u32) {
        (self.c0, self.c1)
    }

    /// The residue of a prime-subfield element.
    pub fn residue(&self) -> Option<u32> {
        (self.c1 == 0).then_some(self.c0)
    }

    /// Index in [`FieldCtx::elements`] order.
    pub fn index(&self) -> u64 {
        self.c0 as u64 + self.ctx.p() * self.c1 as u64
    }

    pub fn is_zero(&self) -> bool {
        self.c0 == 0 && self.c1 == 0
    }

    pub fn is_one(&self) -> bool {
        self.c0 == 1 && self.c1 == 0
    }

    /// Reinterprets a prime-field element inside `ctx` (same characteristic).
    pub fn lift(&self, ctx: FieldCtx) -> FieldElement {
        debug_assert_eq!(self.ctx.p, ctx.p);
        FieldElement { ctx, c0: self.c0, c1: self.c1 }
    }

    pub fn square(&self) -> FieldElement {
        *self * *self
    }

    pub fn pow(&self, mut exp: u64) -> FieldElement {
        let mut base = *self;
        let mut acc = self.ctx.one();
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse: extended Euclid in `F_p`, conjugate over norm
    /// in `F_{p^2}`.
    pub fn inverse(&self) -> Result<FieldElement> {
        let ctx = self.ctx;
        match ctx.kind {
            FieldKind::Prime => Ok(FieldElement { ctx, c0: ctx.inv_res(self.c0)?, c1: 0 }),
            FieldKind::QuadraticExt => {
                if self.is_zero() {
                    return Err(Error::domain("no inverse of zero"));
                }
                // (a + bα)(a − bα) = a² + b², nonzero since −1 is a non-square
                let norm = ctx.add_res(ctx.mul_res(self.c0, self.c0), ctx.mul_res(self.c1, self.c1));
                let ninv = ctx.inv_res(norm)?;
                Ok(FieldElement {
                    ctx,
                    c0: ctx.mul_res(self.c0, ninv),
                    c1: ctx.mul_res(ctx.neg_res(self.c1), ninv),
                })
            }
        }
    }
}

/// Free-function form of [`FieldElement::inverse`].
pub fn field_inverse(x: FieldElement) -> Result<FieldElement> {
    x.inverse()
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.ctx.kind, self.c1) {
            (FieldKind::Prime, _) | (_, 0) => write!(f, "{}", self.c0),
            _ => write!(f, "{}+{}a", self.c0, self.c1),
        }
    }
}

impl Add for FieldElement {
    type Output = FieldElement;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        debug_assert_eq!(self.ctx, rhs.ctx, "mixed field contexts");
        let c = self.ctx;
        FieldElement { ctx: c, c0: c.add_res(self.c0, rhs.c0), c1: c.add_res(self.c1, rhs.c1) }
    }
}

impl Sub for FieldElement {
    type Output = FieldElement;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        debug_assert_eq!(self.ctx, rhs.ctx, "mixed field contexts");
        let c = self.ctx;
        FieldElement { ctx: c, c0: c.sub_res(self.c0, rhs.c0), c1: c.sub_res(self.c1, rhs.c1) }
    }
}

impl Neg for FieldElement {
    type Output = FieldElement;
    #[inline]
    fn neg(self) -> Self {
        let c = self.ctx;
        FieldElement { ctx: c, c0: c.neg_res(self.c0), c1: c.neg_res(self.c1) }
    }
}

impl Mul for FieldElement {
    type Output = FieldElement;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        debug_assert_eq!(self.ctx, rhs.ctx, "mixed field contexts");
        let c = self.ctx;
        match c.kind {
            FieldKind::Prime => FieldElement { ctx: c, c0: c.mul_res(self.c0, rhs.c0), c1: 0 },
            FieldKind::QuadraticExt => {
                // (a + bα)(c + dα) = (ac − bd) + (ad + bc)α
                let p = c.p as u64;
                let (a, b, x, y) = (self.c0 as u64, self.c1 as u64, rhs.c0 as u64, rhs.c1 as u64);
                let re = (a * x % p + p * p - b * y % p) % p;
                let im = (a * y + b * x) % p;
                FieldElement { ctx: c, c0: re as u32, c1: im as u32 }
            }
        }
    }
}

impl Div for FieldElement {
    type Output = FieldElement;
    /// Panics on division by zero; use [`FieldElement::inverse`] to handle it.
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Self) -> Self {
        self * rhs.inverse().expect("division by zero")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sieve(limit: usize) -> Vec<bool> {
        let mut is = vec![true; limit + 1];
        is[0] = false;
        is[1] = false;
        let mut i = 2;
        while i * i <= limit {
            if is[i] {
                let mut j = i * i;
                while j <= limit {
                    is[j] = false;
                    j += i;
                }
            }
            i += 1;
        }
        is
    }

    #[test]
    fn inverse_examples() {
        let f7 = FieldCtx::prime(7).unwrap();
        // exhaustive oracle: the unique y with 3y = 1
        let y = (0..7).find(|y| (3 * y) % 7 == 1).unwrap();
        assert_eq!(y, 5);
        assert_eq!(field_inverse(f7.elem(3)).unwrap(), f7.elem(5));
        assert_eq!(field_inverse(f7.elem(1)).unwrap(), f7.one());

        let f49 = FieldCtx::quadratic(7).unwrap();
        let alpha = f49.elem2(0, 1).unwrap();
        assert_eq!(field_inverse(alpha).unwrap(), f49.elem2(0, 6).unwrap());
    }

    #[test]
    fn inverse_of_zero_is_domain_error() {
        let f7 = FieldCtx::prime(7).unwrap();
        let err = field_inverse(f7.zero()).unwrap_err();
        assert!(err.to_string().contains("no inverse of zero"));
        let f9 = FieldCtx::quadratic(3).unwrap();
        assert!(field_inverse(f9.zero()).is_err());
    }

    #[test]
    fn find_prime_examples() {
        let sieve = sieve(1000);
        let oracle = |lower: usize, class: Option<(usize, usize)>| {
            (lower + 1..)
                .find(|&c| sieve[c] && class.is_none_or(|(r, m)| c % m == r))
                .unwrap() as u64
        };
        assert_eq!(oracle(50, None), 53);
        assert_eq!(oracle(50, Some((3, 4))), 59);
        assert_eq!(find_prime(50, None).unwrap(), 53);
        assert_eq!(find_prime(50, Some((3, 4))).unwrap(), 59);
        assert_eq!(find_prime(2, None).unwrap(), 3);
        for lower in 2..500 {
            let got = find_prime(lower as u64, Some((3, 4))).unwrap();
            assert_eq!(got, oracle(lower, Some((3, 4))));
            assert!(sieve[got as usize]);
            assert!(got < 4 * lower as u64 + 100);
        }
    }

    #[test]
    fn find_prime_rejects_bad_input() {
        assert!(matches!(find_prime(1, None), Err(Error::Domain(_))));
        assert!(matches!(find_prime(10, Some((2, 4))), Err(Error::Domain(_))));
    }

    #[test]
    fn unit_alpha() {
        let f49 = FieldCtx::quadratic(7).unwrap();
        let a = solve_unit_alpha(f49).unwrap();
        assert_eq!(a.coords(), (0, 1));
        assert_eq!(a * a, -f49.one());
        let f9 = FieldCtx::quadratic(3).unwrap();
        assert_eq!(solve_unit_alpha(f9).unwrap().coords(), (0, 1));

        // exhaustive oracle: no y in F_7 squares to −1
        assert!((0..7).all(|y| (y * y) % 7 != 6));
        let f7 = FieldCtx::prime(7).unwrap();
        let err = solve_unit_alpha(f7).unwrap_err();
        assert!(err.to_string().contains("no square root of −1"));

        let f13 = FieldCtx::prime(13).unwrap();
        let r = solve_unit_alpha(f13).unwrap();
        assert_eq!(r * r, -f13.one());
    }

    #[test]
    fn extension_requires_3_mod_4() {
        assert!(FieldCtx::quadratic(5).is_err());
        assert!(FieldCtx::prime(9).is_err());
        assert!(FieldCtx::prime(MODULUS_CAP + 11).is_err());
    }

    #[test]
    fn frobenius_fixes_prime_field() {
        for p in (2..=101u64).filter(|&p| is_prime(p)) {
            let ctx = FieldCtx::prime(p).unwrap();
            for x in ctx.elements() {
                assert_eq!(x.pow(p), x, "p = {p}");
            }
        }
    }

    #[test]
    fn extension_frobenius_is_conjugation() {
        let ctx = FieldCtx::quadratic(11).unwrap();
        for x in ctx.elements() {
            let (a, b) = x.coords();
            let conj = ctx.elem2(a as i64, -(b as i64)).unwrap();
            assert_eq!(x.pow(11), conj);
            assert_eq!(x.pow(121), x);
        }
    }

    #[test]
    fn element_enumeration_roundtrip() {
        let ctx = FieldCtx::quadratic(7).unwrap();
        let all: Vec<_> = ctx.elements().collect();
        assert_eq!(all.len(), 49);
        for (i, e) in all.iter().enumerate() {
            assert_eq!(e.index(), i as u64);
        }
    }

    fn ctx_strategy() -> impl Strategy<Value = FieldCtx> {
        prop_oneof![
            prop::sample::select(vec![2u64, 3, 5, 7, 13, 101, 65_521, 2_147_483_647])
                .prop_map(|p| FieldCtx::prime(p).unwrap()),
            prop::sample::select(vec![3u64, 7, 11, 19, 2_147_483_647])
                .prop_map(|p| FieldCtx::quadratic(p).unwrap()),
        ]
    }

    fn triple() -> impl Strategy<Value = (FieldElement, FieldElement, FieldElement)> {
        ctx_strategy().prop_flat_map(|ctx| {
            let e = move || {
                (any::<i64>(), any::<i64>()).prop_map(move |(a, b)| {
                    let b = if ctx.is_prime_field() { 0 } else { b };
                    ctx.elem2(a, b).unwrap()
                })
            };
            (e(), e(), e())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn field_axioms((x, y, z) in triple()) {
            prop_assert_eq!((x + y) + z, x + (y + z));
            prop_assert_eq!((x * y) * z, x * (y * z));
            prop_assert_eq!(x * (y + z), x * y + x * z);
            prop_assert_eq!(x + (-x), x.ctx().zero());
            prop_assert_eq!(x - y, x + (-y));
            if !x.is_zero() {
                prop_assert!((x * x.inverse().unwrap()).is_one());
            }
        }
    }
}
