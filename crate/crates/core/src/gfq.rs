//! Finite fields `F_{p^k} = F_p[x]/(m(x))` with a user-supplied irreducible modulus.
//!
//! Elements carry a shared handle to their [`GfContext`]. The fallible `checked_*`
//! methods report [`Error::ContextMismatch`]; the operator impls panic on mismatch,
//! which inside this crate can only happen through a bug since every q-expansion
//! draws all of its coefficients from one model.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest extension degree accepted by [`GfContext::new`].
pub const MAX_DEGREE: usize = 8;

/// JSON fragment `{"p": 3, "degree": 2, "modulus": [1, 0, 1]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldConfig {
    pub p: u64,
    pub degree: usize,
    /// Low-to-high coefficients; the last entry must be 1.
    pub modulus: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GfContext {
    p: u64,
    /// Monic, length `degree + 1`, reduced mod p.
    modulus: Vec<u64>,
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

impl GfContext {
    pub fn new(p: u64, modulus: &[i64]) -> Result<Arc<Self>> {
        if !is_prime(p) {
            return Err(Error::InvalidField(format!("{p} is not prime")));
        }
        if p >= 1 << 31 {
            return Err(Error::InvalidField(format!("characteristic {p} too large")));
        }
        let degree = modulus.len().saturating_sub(1);
        if degree == 0 || degree > MAX_DEGREE {
            return Err(Error::InvalidField(format!(
                "degree must be between 1 and {MAX_DEGREE}, got {degree}"
            )));
        }
        let modulus: Vec<u64> = modulus.iter().map(|&c| reduce_signed(c, p)).collect();
        if modulus[degree] != 1 {
            return Err(Error::InvalidField("modulus must be monic".into()));
        }
        if !poly::is_irreducible(&modulus, p) {
            return Err(Error::InvalidField(format!(
                "modulus {modulus:?} is reducible over F_{p}"
            )));
        }
        Ok(Arc::new(GfContext { p, modulus }))
    }

    pub fn from_config(cfg: &FieldConfig) -> Result<Arc<Self>> {
        if cfg.modulus.len() != cfg.degree + 1 {
            return Err(Error::InvalidField(format!(
                "degree {} needs {} modulus coefficients, got {}",
                cfg.degree,
                cfg.degree + 1,
                cfg.modulus.len()
            )));
        }
        Self::new(cfg.p, &cfg.modulus)
    }

    /// `F_p` presented as `F_p[x]/(x)`.
    pub fn prime_field(p: u64) -> Result<Arc<Self>> {
        Self::new(p, &[0, 1])
    }

    pub fn to_config(&self) -> FieldConfig {
        FieldConfig {
            p: self.p,
            degree: self.degree(),
            modulus: self.modulus.iter().map(|&c| c as i64).collect(),
        }
    }

    pub fn characteristic(&self) -> u64 {
        self.p
    }

    pub fn degree(&self) -> usize {
        self.modulus.len() - 1
    }

    pub fn modulus(&self) -> &[u64] {
        &self.modulus
    }

    pub fn order(&self) -> u128 {
        (self.p as u128).pow(self.degree() as u32)
    }
}

fn reduce_signed(c: i64, p: u64) -> u64 {
    c.rem_euclid(p as i64) as u64
}

#[derive(Clone)]
pub struct GfElement {
    ctx: Arc<GfContext>,
    coeffs: Vec<u64>,
}

impl GfElement {
    pub fn zero(ctx: &Arc<GfContext>) -> Self {
        GfElement {
            ctx: ctx.clone(),
            coeffs: vec![0; ctx.degree()],
        }
    }

    pub fn one(ctx: &Arc<GfContext>) -> Self {
        Self::from_int(ctx, 1)
    }

    pub fn from_int(ctx: &Arc<GfContext>, n: i64) -> Self {
        let mut e = Self::zero(ctx);
        e.coeffs[0] = reduce_signed(n, ctx.p);
        e
    }

    /// Builds `c0 + c1 x + ...`; at most `degree` coefficients, missing ones are zero.
    pub fn from_coeffs(ctx: &Arc<GfContext>, coeffs: &[i64]) -> Result<Self> {
        if coeffs.len() > ctx.degree() {
            return Err(Error::InvalidField(format!(
                "element has {} coefficients, field degree is {}",
                coeffs.len(),
                ctx.degree()
            )));
        }
        let mut e = Self::zero(ctx);
        for (slot, &c) in e.coeffs.iter_mut().zip(coeffs) {
            *slot = reduce_signed(c, ctx.p);
        }
        Ok(e)
    }

    /// The class of `x`.
    pub fn generator(ctx: &Arc<GfContext>) -> Self {
        if ctx.degree() == 1 {
            // x = -m_0 when the modulus is linear
            return Self::from_int(ctx, -(ctx.modulus[0] as i64));
        }
        let mut e = Self::zero(ctx);
        e.coeffs[1] = 1;
        e
    }

    pub fn random<R: Rng + ?Sized>(ctx: &Arc<GfContext>, rng: &mut R) -> Self {
        GfElement {
            ctx: ctx.clone(),
            coeffs: (0..ctx.degree()).map(|_| rng.gen_range(0..ctx.p)).collect(),
        }
    }

    pub fn random_nonzero<R: Rng + ?Sized>(ctx: &Arc<GfContext>, rng: &mut R) -> Self {
        loop {
            let e = Self::random(ctx, rng);
            if !e.is_zero() {
                return e;
            }
        }
    }

    /// Every element of the field, in lexicographic coefficient order.
    pub fn all(ctx: &Arc<GfContext>) -> impl Iterator<Item = GfElement> + '_ {
        let q = ctx.order();
        (0..q).map(move |mut idx| {
            let mut coeffs = vec![0u64; ctx.degree()];
            for c in coeffs.iter_mut() {
                *c = (idx % ctx.p as u128) as u64;
                idx /= ctx.p as u128;
            }
            GfElement {
                ctx: ctx.clone(),
                coeffs,
            }
        })
    }

    pub fn context(&self) -> &Arc<GfContext> {
        &self.ctx
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn coeffs_i64(&self) -> Vec<i64> {
        self.coeffs.iter().map(|&c| c as i64).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    pub fn is_one(&self) -> bool {
        self.coeffs[0] == 1 && self.coeffs[1..].iter().all(|&c| c == 0)
    }

    pub fn same_context(&self, other: &GfElement) -> bool {
        Arc::ptr_eq(&self.ctx, &other.ctx) || self.ctx == other.ctx
    }

    fn check(&self, other: &GfElement) -> Result<()> {
        if self.same_context(other) {
            Ok(())
        } else {
            Err(Error::ContextMismatch)
        }
    }

    pub fn checked_add(&self, other: &GfElement) -> Result<GfElement> {
        self.check(other)?;
        let p = self.ctx.p;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&a, &b)| (a + b) % p)
            .collect();
        Ok(GfElement {
            ctx: self.ctx.clone(),
            coeffs,
        })
    }

    pub fn checked_sub(&self, other: &GfElement) -> Result<GfElement> {
        self.check(other)?;
        let p = self.ctx.p;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&a, &b)| (a + p - b) % p)
            .collect();
        Ok(GfElement {
            ctx: self.ctx.clone(),
            coeffs,
        })
    }

    pub fn checked_mul(&self, other: &GfElement) -> Result<GfElement> {
        self.check(other)?;
        let p = self.ctx.p;
        let k = self.ctx.degree();
        let mut prod = vec![0u64; 2 * k - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                prod[i + j] = (prod[i + j] + a * b) % p;
            }
        }
        let m = &self.ctx.modulus;
        for deg in (k..prod.len()).rev() {
            let c = prod[deg];
            if c == 0 {
                continue;
            }
            prod[deg] = 0;
            for t in 0..k {
                let off = deg - k + t;
                prod[off] = (prod[off] + p - (c * m[t]) % p) % p;
            }
        }
        prod.truncate(k);
        Ok(GfElement {
            ctx: self.ctx.clone(),
            coeffs: prod,
        })
    }

    pub fn inv(&self) -> Result<GfElement> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(self.pow(self.ctx.order() - 2))
    }

    pub fn checked_div(&self, other: &GfElement) -> Result<GfElement> {
        self.check(other)?;
        self.checked_mul(&other.inv()?)
    }

    pub fn pow(&self, mut exp: u128) -> GfElement {
        let mut base = self.clone();
        let mut acc = GfElement::one(&self.ctx);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            exp >>= 1;
        }
        acc
    }

    /// Integer power allowing negative exponents (which require a nonzero base).
    pub fn powi(&self, exp: i64) -> Result<GfElement> {
        if exp >= 0 {
            Ok(self.pow(exp as u128))
        } else {
            Ok(self.inv()?.pow(exp.unsigned_abs() as u128))
        }
    }

    /// `a^(p^i)`.
    pub fn frobenius(&self, i: u32) -> GfElement {
        let i = i as usize % self.ctx.degree();
        let mut out = self.clone();
        for _ in 0..i {
            out = out.pow(self.ctx.p as u128);
        }
        out
    }

    /// True when the element lies in the subfield `F_{p^f}`.
    pub fn in_subfield(&self, f: u32) -> bool {
        let mut out = self.clone();
        for _ in 0..f {
            out = out.pow(self.ctx.p as u128);
        }
        out == *self
    }
}

impl PartialEq for GfElement {
    fn eq(&self, other: &Self) -> bool {
        self.same_context(other) && self.coeffs == other.coeffs
    }
}

impl Eq for GfElement {}

impl std::hash::Hash for GfElement {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.coeffs.hash(state);
    }
}

impl fmt::Debug for GfElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for GfElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == 0 {
                continue;
            }
            if !first {
                write!(f, "+")?;
            }
            first = false;
            match (i, c) {
                (0, c) => write!(f, "{c}")?,
                (1, 1) => write!(f, "g")?,
                (1, c) => write!(f, "{c}g")?,
                (i, 1) => write!(f, "g^{i}")?,
                (i, c) => write!(f, "{c}g^{i}")?,
            }
        }
        Ok(())
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $checked:ident) => {
        impl $tr<&GfElement> for &GfElement {
            type Output = GfElement;
            fn $method(self, rhs: &GfElement) -> GfElement {
                self.$checked(rhs).expect("finite field context mismatch")
            }
        }
        impl $tr<GfElement> for GfElement {
            type Output = GfElement;
            fn $method(self, rhs: GfElement) -> GfElement {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&GfElement> for GfElement {
            type Output = GfElement;
            fn $method(self, rhs: &GfElement) -> GfElement {
                (&self).$method(rhs)
            }
        }
    };
}

forward_binop!(Add, add, checked_add);
forward_binop!(Sub, sub, checked_sub);
forward_binop!(Mul, mul, checked_mul);

impl AddAssign<&GfElement> for GfElement {
    fn add_assign(&mut self, rhs: &GfElement) {
        *self = &*self + rhs;
    }
}

impl SubAssign<&GfElement> for GfElement {
    fn sub_assign(&mut self, rhs: &GfElement) {
        *self = &*self - rhs;
    }
}

impl Neg for &GfElement {
    type Output = GfElement;
    fn neg(self) -> GfElement {
        let p = self.ctx.p;
        GfElement {
            ctx: self.ctx.clone(),
            coeffs: self.coeffs.iter().map(|&c| (p - c) % p).collect(),
        }
    }
}

impl Neg for GfElement {
    type Output = GfElement;
    fn neg(self) -> GfElement {
        -&self
    }
}

/// Dense polynomials over `F_p` (low-to-high, no trailing zeros), used for the
/// irreducibility test.
pub(crate) mod poly {
    pub fn trim(mut a: Vec<u64>) -> Vec<u64> {
        while a.last() == Some(&0) {
            a.pop();
        }
        a
    }

    fn inv_mod(a: u64, p: u64) -> u64 {
        let mut r = 1u64;
        let mut b = a % p;
        let mut e = p - 2;
        while e > 0 {
            if e & 1 == 1 {
                r = r * b % p;
            }
            b = b * b % p;
            e >>= 1;
        }
        r
    }

    pub fn rem(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        let b = trim(b.to_vec());
        let mut r = trim(a.to_vec());
        let db = b.len() - 1;
        let lead_inv = inv_mod(b[db], p);
        while r.len() > db {
            let dr = r.len() - 1;
            let c = r[dr] * lead_inv % p;
            for (t, &bt) in b.iter().enumerate() {
                let idx = dr - db + t;
                r[idx] = (r[idx] + p - c * bt % p) % p;
            }
            r = trim(r);
        }
        r
    }

    pub fn mul_mod(a: &[u64], b: &[u64], m: &[u64], p: u64) -> Vec<u64> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut prod = vec![0u64; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x * y) % p;
            }
        }
        rem(&prod, m, p)
    }

    pub fn pow_mod(base: &[u64], mut exp: u64, m: &[u64], p: u64) -> Vec<u64> {
        let mut acc = vec![1u64];
        let mut b = rem(base, m, p);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = mul_mod(&acc, &b, m, p);
            }
            b = mul_mod(&b, &b, m, p);
            exp >>= 1;
        }
        rem(&acc, m, p)
    }

    pub fn gcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        let mut a = trim(a.to_vec());
        let mut b = trim(b.to_vec());
        while !b.is_empty() {
            let r = rem(&a, &b, p);
            a = b;
            b = r;
        }
        a
    }

    fn sub(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        let n = a.len().max(b.len());
        let out = (0..n)
            .map(|i| {
                let x = a.get(i).copied().unwrap_or(0);
                let y = b.get(i).copied().unwrap_or(0);
                (x + p - y) % p
            })
            .collect();
        trim(out)
    }

    fn prime_divisors(mut n: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut d = 2;
        while d * d <= n {
            if n.is_multiple_of(d) {
                out.push(d);
                while n.is_multiple_of(d) {
                    n /= d;
                }
            }
            d += 1;
        }
        if n > 1 {
            out.push(n);
        }
        out
    }

    /// `x^(p^j) mod m` for j = 0..=k.
    fn frobenius_orbit_of_x(m: &[u64], p: u64) -> Vec<Vec<u64>> {
        let k = m.len() - 1;
        let mut out = Vec::with_capacity(k + 1);
        let mut cur = rem(&[0, 1], m, p);
        out.push(cur.clone());
        for _ in 0..k {
            cur = pow_mod(&cur, p, m, p);
            out.push(cur.clone());
        }
        out
    }

    /// Rabin's test: `m` of degree k is irreducible iff `x^(p^k) = x (mod m)` and
    /// `gcd(x^(p^(k/q)) - x, m) = 1` for every prime q dividing k.
    pub fn is_irreducible(m: &[u64], p: u64) -> bool {
        let m = trim(m.to_vec());
        let k = m.len() - 1;
        if k == 1 {
            return true;
        }
        let orbit = frobenius_orbit_of_x(&m, p);
        let x = rem(&[0, 1], &m, p);
        if orbit[k] != x {
            return false;
        }
        prime_divisors(k).into_iter().all(|q| {
            let diff = sub(&orbit[k / q], &x, p);
            gcd(&m, &diff, p).len() == 1
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f9() -> Arc<GfContext> {
        // x^2 + 1 = x^2 - 2 over F_3
        GfContext::new(3, &[1, 0, 1]).unwrap()
    }

    /// Brute-force irreducibility: no monic factor of degree 1..=k/2.
    fn irreducible_by_search(m: &[u64], p: u64) -> bool {
        let k = m.len() - 1;
        for d in 1..=k / 2 {
            let count = p.pow(d as u32);
            for idx in 0..count {
                let mut cand = vec![0u64; d + 1];
                let mut t = idx;
                for c in cand.iter_mut().take(d) {
                    *c = t % p;
                    t /= p;
                }
                cand[d] = 1;
                if poly::rem(m, &cand, p).is_empty() {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn modulus_squares_generator() {
        let ctx = f9();
        let g = GfElement::generator(&ctx);
        assert_eq!(&g * &g, GfElement::from_int(&ctx, 2));
    }

    #[test]
    fn cube_of_one_plus_g() {
        let ctx = f9();
        let g = GfElement::generator(&ctx);
        let a = GfElement::one(&ctx) + g.clone();
        let by_mult = &(&a * &a) * &a;
        let expected = GfElement::from_coeffs(&ctx, &[1, 2]).unwrap();
        assert_eq!(by_mult, expected);
        assert_eq!(a.pow(3), expected);
    }

    #[test]
    fn frobenius_on_generator() {
        let ctx = f9();
        let g = GfElement::generator(&ctx);
        assert_eq!(g.frobenius(1), GfElement::from_coeffs(&ctx, &[0, 2]).unwrap());
        assert_eq!(g.frobenius(0), g);
        assert_eq!(g.frobenius(2), g);
    }

    #[test]
    fn inverse_and_errors() {
        let ctx = f9();
        for a in GfElement::all(&ctx).filter(|a| !a.is_zero()) {
            assert!((&a * &a.inv().unwrap()).is_one());
        }
        assert_eq!(GfElement::zero(&ctx).inv(), Err(Error::DivisionByZero));
        let other = GfContext::new(3, &[2, 2, 1]).unwrap();
        let a = GfElement::one(&ctx);
        let b = GfElement::one(&other);
        assert_eq!(a.checked_add(&b), Err(Error::ContextMismatch));
        assert_eq!(a.checked_mul(&b), Err(Error::ContextMismatch));
    }

    #[test]
    fn rejects_bad_moduli() {
        assert!(GfContext::new(4, &[1, 1]).is_err());
        // x^2 - 1 = (x-1)(x+1)
        assert!(GfContext::new(3, &[2, 0, 1]).is_err());
        // not monic
        assert!(GfContext::new(3, &[1, 0, 2]).is_err());
        assert!(GfContext::new(2, &[1; 10]).is_err());
        let cfg = FieldConfig {
            p: 3,
            degree: 3,
            modulus: vec![1, 0, 1],
        };
        assert!(GfContext::from_config(&cfg).is_err());
    }

    #[test]
    fn rabin_agrees_with_factor_search() {
        for &p in &[2u64, 3, 5] {
            for k in 1..=4usize {
                let count = p.pow(k as u32);
                for idx in 0..count {
                    let mut m = vec![0u64; k + 1];
                    let mut t = idx;
                    for c in m.iter_mut().take(k) {
                        *c = t % p;
                        t /= p;
                    }
                    m[k] = 1;
                    assert_eq!(
                        poly::is_irreducible(&m, p),
                        irreducible_by_search(&m, p),
                        "p={p} m={m:?}"
                    );
                }
            }
        }
    }

    fn small_fields() -> Vec<Arc<GfContext>> {
        vec![
            GfContext::prime_field(2).unwrap(),
            GfContext::new(2, &[1, 1, 1]).unwrap(),
            GfContext::new(2, &[1, 1, 0, 1]).unwrap(),
            GfContext::new(2, &[1, 1, 0, 0, 1]).unwrap(),
            f9(),
            GfContext::new(3, &[1, 2, 0, 1]).unwrap(),
            GfContext::new(3, &[2, 0, 0, 1, 1]).unwrap(),
            GfContext::new(5, &[2, 0, 1]).unwrap(),
            GfContext::prime_field(7).unwrap(),
        ]
    }

    #[test]
    fn frobenius_is_an_automorphism_exhaustively() {
        for ctx in small_fields() {
            assert!(ctx.order() <= 81);
            let p = ctx.characteristic() as u128;
            let elems: Vec<_> = GfElement::all(&ctx).collect();
            for a in &elems {
                assert_eq!(a.frobenius(1), a.pow(p));
                assert_eq!(a.frobenius(ctx.degree() as u32), *a);
                for b in &elems {
                    let s = a + b;
                    assert_eq!(s.pow(p), a.pow(p) + b.pow(p), "freshman's dream");
                    assert_eq!((a * b).frobenius(1), a.frobenius(1) * b.frobenius(1));
                }
            }
        }
    }

    #[test]
    fn field_axioms_exhaustively_in_f9() {
        let ctx = f9();
        let elems: Vec<_> = GfElement::all(&ctx).collect();
        assert_eq!(elems.len(), 9);
        for a in &elems {
            assert_eq!(a - a, GfElement::zero(&ctx));
            assert_eq!(a + &(-a), GfElement::zero(&ctx));
            for b in &elems {
                assert_eq!(a * b, b * a);
                for c in &elems {
                    assert_eq!(a * &(b + c), a * b + a * c);
                    assert_eq!((a * b) * c.clone(), a * &(b * c));
                }
            }
        }
    }

    #[test]
    fn subfield_membership() {
        let ctx = f9();
        let g = GfElement::generator(&ctx);
        assert!(!g.in_subfield(1));
        assert!(g.in_subfield(2));
        assert!(GfElement::from_int(&ctx, 2).in_subfield(1));
    }

    #[test]
    fn negative_powers() {
        let ctx = f9();
        let g = GfElement::generator(&ctx);
        assert!((g.powi(-3).unwrap() * g.pow(3)).is_one());
        assert!(GfElement::zero(&ctx).powi(-1).is_err());
    }
}
