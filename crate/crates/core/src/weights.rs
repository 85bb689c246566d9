//! The weight lattice `Z^Sigma`: Hasse weights, the minimal cone, theta and
//! Frobenius weight shifts, the character map `rho`, the lattice spanned by the
//! Hasse weights, and the exhaustive positivity search.

use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::sync::Arc;

use num_integer::Integer;
use num_rational::Ratio;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::intmat::IntMatrix;
use crate::shape::{FieldShape, ResidueIndex, ThetaIndex};

pub type Rational = Ratio<i64>;

/// An integer vector indexed by `Sigma` in canonical order.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct WeightVector {
    shape: Arc<FieldShape>,
    entries: Vec<i64>,
}

impl WeightVector {
    pub fn zero(shape: &Arc<FieldShape>) -> Self {
        WeightVector {
            shape: shape.clone(),
            entries: vec![0; shape.degree()],
        }
    }

    pub fn from_vec(shape: &Arc<FieldShape>, entries: Vec<i64>) -> Result<Self> {
        if entries.len() != shape.degree() {
            return Err(Error::WeightLength {
                expected: shape.degree(),
                found: entries.len(),
            });
        }
        Ok(WeightVector {
            shape: shape.clone(),
            entries,
        })
    }

    /// The unit vector `e_t`.
    pub fn unit(shape: &Arc<FieldShape>, t: ThetaIndex) -> Self {
        let mut w = Self::zero(shape);
        w.entries[shape.position(t)] = 1;
        w
    }

    pub fn shape(&self) -> &Arc<FieldShape> {
        &self.shape
    }

    pub fn entries(&self) -> &[i64] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<i64> {
        self.entries
    }

    pub fn get(&self, t: ThetaIndex) -> i64 {
        self.entries[self.shape.position(t)]
    }

    pub fn set(&mut self, t: ThetaIndex, v: i64) {
        let pos = self.shape.position(t);
        self.entries[pos] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&v| v == 0)
    }

    pub fn scale(&self, c: i64) -> Self {
        WeightVector {
            shape: self.shape.clone(),
            entries: self.entries.iter().map(|v| v * c).collect(),
        }
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, other: &WeightVector, c: i64) -> Self {
        assert_eq!(self.shape, other.shape, "weights on different shapes");
        WeightVector {
            shape: self.shape.clone(),
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + c * b)
                .collect(),
        }
    }
}

impl fmt::Debug for WeightVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.entries)
    }
}

impl fmt::Display for WeightVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.entries)
    }
}

impl Serialize for WeightVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.entries.serialize(s)
    }
}

impl Add for &WeightVector {
    type Output = WeightVector;
    fn add(self, rhs: &WeightVector) -> WeightVector {
        self.add_scaled(rhs, 1)
    }
}

impl Sub for &WeightVector {
    type Output = WeightVector;
    fn sub(self, rhs: &WeightVector) -> WeightVector {
        self.add_scaled(rhs, -1)
    }
}

impl Add for WeightVector {
    type Output = WeightVector;
    fn add(self, rhs: WeightVector) -> WeightVector {
        &self + &rhs
    }
}

impl Sub for WeightVector {
    type Output = WeightVector;
    fn sub(self, rhs: WeightVector) -> WeightVector {
        &self - &rhs
    }
}

impl Neg for &WeightVector {
    type Output = WeightVector;
    fn neg(self) -> WeightVector {
        self.scale(-1)
    }
}

/// A character of `prod_P (F_{p^f_P})^*`, stored as one exponent class per prime.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct PsiCharacter {
    classes: Vec<u64>,
}

impl PsiCharacter {
    pub fn classes(&self) -> &[u64] {
        &self.classes
    }

    pub fn is_trivial(&self) -> bool {
        self.classes.iter().all(|&c| c == 0)
    }
}

impl fmt::Display for PsiCharacter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.classes)
    }
}

/// `p^f - 1` for one prime.
pub fn residue_unit_order(shape: &FieldShape, prime: usize) -> i64 {
    (shape.p() as i64).pow(shape.prime(prime).f) - 1
}

/// `lcm_P (p^f_P - 1)`: every h-basis coordinate has a denominator dividing this.
pub fn denominator_bound(shape: &FieldShape) -> i64 {
    (0..shape.primes().len())
        .map(|pr| residue_unit_order(shape, pr))
        .fold(1, |a, b| a.lcm(&b))
}

/// `h_t = n_t e_{shift^-1 t} - e_t`.
pub fn hasse_weight(shape: &Arc<FieldShape>, t: ThetaIndex) -> WeightVector {
    let mut w = WeightVector::zero(shape);
    w.entries[shape.position(shape.sigma_inv(t))] += shape.multiplier(t);
    w.entries[shape.position(t)] -= 1;
    w
}

/// Rows are `h_t` in canonical order.
pub fn hasse_matrix(shape: &Arc<FieldShape>) -> IntMatrix {
    let rows: Vec<Vec<i64>> = shape
        .enumerate_sigma()
        .into_iter()
        .map(|t| hasse_weight(shape, t).entries)
        .collect();
    IntMatrix::from_rows(&rows)
}

/// `n_t k_t >= k_{shift^-1 t}` for every index.
pub fn in_min_cone(k: &WeightVector) -> bool {
    let s = &k.shape;
    s.enumerate_sigma()
        .into_iter()
        .all(|t| s.multiplier(t) * k.get(t) >= k.get(s.sigma_inv(t)))
}

/// Weight of `Theta_tau f` for `f` of weight `(k, l)`:
/// `(k + h_0 + 2 e_0, l - e_0)` with `t_0 = (P, i, e)`.
pub fn theta_weight_shift(
    tau: ResidueIndex,
    k: &WeightVector,
    l: &WeightVector,
) -> (WeightVector, WeightVector) {
    let s = &k.shape;
    let t0 = s.theta0(tau);
    let e0 = WeightVector::unit(s, t0);
    let k1 = &(k + &hasse_weight(s, t0)) + &e0.scale(2);
    (k1, l - &e0)
}

fn check_prime(shape: &FieldShape, prime: usize) {
    assert!(prime < shape.primes().len(), "prime position {prime} out of range");
}

/// Pointwise form: `k''_t = n_{shift t} k_{shift t}` on the block of `prime`.
fn frob_pointwise(prime: usize, k: &WeightVector) -> WeightVector {
    let s = &k.shape;
    let mut out = k.clone();
    for t in s.thetas_over(prime) {
        let st = s.sigma(t);
        out.set(t, s.multiplier(st) * k.get(st));
    }
    out
}

/// Hasse-sum form: `k + sum_{t over prime} k_t h_t`.
pub fn frob_weight_shift_hsum(prime: usize, k: &WeightVector) -> WeightVector {
    let s = &k.shape;
    let mut out = k.clone();
    for t in s.thetas_over(prime) {
        out = out.add_scaled(&hasse_weight(s, t), k.get(t));
    }
    out
}

/// Weight of `V_P f`. Both closed forms are computed and compared.
pub fn frob_weight_shift(
    prime: usize,
    k: &WeightVector,
    l: &WeightVector,
) -> (WeightVector, WeightVector) {
    check_prime(&k.shape, prime);
    let out = (frob_pointwise(prime, k), frob_pointwise(prime, l));
    debug_assert_eq!(out.0, frob_weight_shift_hsum(prime, k));
    debug_assert_eq!(out.1, frob_weight_shift_hsum(prime, l));
    out
}

/// Inverse of the Frobenius shift on one vector: `k0_{shift t} = k''_t / n_{shift t}`.
pub fn frob_weight_unshift(prime: usize, k2: &WeightVector) -> Result<WeightVector> {
    check_prime(&k2.shape, prime);
    let s = &k2.shape;
    let mut out = k2.clone();
    for t in s.thetas_over(prime) {
        let st = s.sigma(t);
        let n = s.multiplier(st);
        let v = k2.get(t);
        if v % n != 0 {
            return Err(Error::NonDivisibleWeight {
                prime: s.prime(prime).id.clone(),
                index: s.theta_label(t),
            });
        }
        out.set(st, v / n);
    }
    Ok(out)
}

/// `(k^phi)_{(P,i,j)} = k_{(P,i+1,j)}`.
pub fn phi_twist(k: &WeightVector) -> WeightVector {
    let s = &k.shape;
    let mut out = k.clone();
    for t in s.enumerate_sigma() {
        out.set(t, k.get(s.theta(t.prime, t.i as i64 + 1, t.j)));
    }
    out
}

/// Inverse of [`phi_twist`].
pub fn phi_untwist(k: &WeightVector) -> WeightVector {
    let s = &k.shape;
    let mut out = k.clone();
    for t in s.enumerate_sigma() {
        out.set(s.theta(t.prime, t.i as i64 + 1, t.j), k.get(t));
    }
    out
}

/// `rho(k)_P = sum k_{(P,i,j)} p^i mod (p^f - 1)`.
pub fn rho(k: &WeightVector) -> PsiCharacter {
    let s = &k.shape;
    let p = s.p() as i64;
    let classes = (0..s.primes().len())
        .map(|prime| {
            let modulus = residue_unit_order(s, prime);
            if modulus == 1 {
                return 0;
            }
            let mut acc = 0i64;
            for t in s.thetas_over(prime) {
                let pi = p.pow(t.i) % modulus;
                acc = (acc + k.get(t).rem_euclid(modulus) * pi) % modulus;
            }
            acc as u64
        })
        .collect();
    PsiCharacter { classes }
}

/// `prod_P (p^f_P - 1)`.
pub fn lambda_index_formula(shape: &FieldShape) -> i128 {
    (0..shape.primes().len())
        .map(|pr| residue_unit_order(shape, pr) as i128)
        .product()
}

/// Index of the Hasse-weight lattice from its Smith normal form.
pub fn lambda_index_snf(shape: &Arc<FieldShape>) -> Result<i128> {
    let inv = hasse_matrix(shape).smith_invariants()?;
    if inv.len() < shape.degree() {
        return Ok(0);
    }
    Ok(inv.iter().product())
}

/// Index of the Hasse-weight lattice; panics if the Smith form disagrees with
/// the product formula.
pub fn lambda_index(shape: &Arc<FieldShape>) -> Result<i128> {
    let snf = lambda_index_snf(shape)?;
    assert_eq!(snf, lambda_index_formula(shape), "lattice index for {shape}");
    Ok(snf)
}

pub fn lambda_contains(k: &WeightVector) -> bool {
    rho(k).is_trivial()
}

/// Span membership by Hermite reduction, independent of `rho`.
pub fn lambda_contains_hnf(k: &WeightVector) -> Result<bool> {
    hasse_matrix(&k.shape).hermite_rows()?.hermite_contains(&k.entries)
}

/// Coordinates `s` with `k = sum s_t h_t`.
///
/// Per prime block `k_t = n_{shift t} s_{shift t} - s_t`. Unrolling once around
/// the cycle gives `(p^f - 1) s_t = sum_u (prod n) k_{shift^u t}`; the remaining
/// coordinates follow from `s_{shift^-1 t} = n_t s_t - k_{shift^-1 t}`.
pub fn hbasis_decompose(k: &WeightVector) -> Result<Vec<Rational>> {
    let s = &k.shape;
    let mut out = vec![Rational::from_integer(0); s.degree()];
    let ovf = || Error::Overflow("h-basis decomposition");
    for prime in 0..s.primes().len() {
        let block = s.thetas_over(prime);
        let len = block.len() as i64;
        let start = block[0];
        let mut num: i128 = 0;
        let mut prod: i128 = 1;
        let mut t = start;
        for u in 0..len {
            if u > 0 {
                prod = prod.checked_mul(s.multiplier(t) as i128).ok_or_else(ovf)?;
            }
            num = num
                .checked_add(prod.checked_mul(k.get(t) as i128).ok_or_else(ovf)?)
                .ok_or_else(ovf)?;
            t = s.sigma(t);
        }
        let den = residue_unit_order(s, prime);
        let num = i64::try_from(num).map_err(|_| ovf())?;
        let mut cur = Rational::new(num, den);
        out[s.position(start)] = cur;
        let mut t = start;
        for _ in 1..len {
            let prev = s.sigma_inv(t);
            cur = cur * s.multiplier(t) - k.get(prev);
            out[s.position(prev)] = cur;
            t = prev;
        }
    }
    let bound = denominator_bound(s);
    for v in &out {
        assert_eq!(bound % v.denom(), 0, "denominator {} exceeds lcm bound", v.denom());
    }
    Ok(out)
}

/// `sum s_t h_t` for rational `s`; `None` if the result is not integral.
pub fn hbasis_compose(shape: &Arc<FieldShape>, coords: &[Rational]) -> Option<WeightVector> {
    let mut acc = vec![Rational::from_integer(0); shape.degree()];
    for (pos, c) in coords.iter().enumerate() {
        let t = shape.theta_at(pos);
        acc[shape.position(shape.sigma_inv(t))] += c * shape.multiplier(t);
        acc[pos] -= c;
    }
    let entries = acc
        .into_iter()
        .map(|v| v.is_integer().then(|| v.to_integer()))
        .collect::<Option<Vec<_>>>()?;
    Some(WeightVector {
        shape: shape.clone(),
        entries,
    })
}

/// `m >= 0` with `k' = k + sum m_t h_t`, if it exists.
pub fn leq_hasse(k: &WeightVector, k2: &WeightVector) -> Result<Option<Vec<u64>>> {
    let s = hbasis_decompose(&(k2 - k))?;
    Ok(s.iter()
        .map(|v| {
            (v.is_integer() && *v.numer() >= 0).then(|| *v.numer() as u64)
        })
        .collect())
}

/// Draws a random point of the minimal cone. Entries are nonnegative.
///
/// Each block is built by walking the cycle forward from a slot with `n = p`,
/// keeping `n_t k_t >= k_{shift^-1 t}` at every step, and retrying until the
/// closing inequality holds.
pub fn random_cone_point<R: Rng + ?Sized>(
    shape: &Arc<FieldShape>,
    max_start: i64,
    max_slack: i64,
    rng: &mut R,
) -> WeightVector {
    let mut k = WeightVector::zero(shape);
    for prime in 0..shape.primes().len() {
        let start = shape.theta(prime, 0, 1);
        loop {
            let first = rng.gen_range(0..=max_start);
            k.set(start, first);
            let mut prev = first;
            let mut t = shape.sigma(start);
            while t != start {
                let n = shape.multiplier(t);
                let v = Integer::div_ceil(&prev, &n).max(0) + rng.gen_range(0..=max_slack);
                k.set(t, v);
                prev = v;
                t = shape.sigma(t);
            }
            if shape.multiplier(start) * first >= prev {
                break;
            }
        }
    }
    debug_assert!(in_min_cone(&k));
    k
}

/// Result of the exhaustive positivity search for one single-prime shape.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Ptwt0Search {
    pub p: u64,
    pub e: u32,
    pub f: u32,
    /// Per-coordinate search bounds `ceil(s_t)`.
    pub bounds: Vec<i64>,
    pub points_searched: u64,
    pub feasible: Vec<Vec<i64>>,
}

/// All `m >= 0` with `2 e_0 - sum m_t h_t` in the minimal cone, where
/// `t_0 = (P, 0, e)`.
///
/// The cone sits inside the nonnegative h-span, so any feasible `m` satisfies
/// `m <= s` coordinatewise for `s` the h-coordinates of `2 e_0`.
pub fn ptwt0_feasible(p: u64, e: u32, f: u32) -> Result<Ptwt0Search> {
    let shape = Arc::new(FieldShape::single(p, e, f)?);
    let t0 = shape.theta(0, 0, e);
    let target = WeightVector::unit(&shape, t0).scale(2);
    let s = hbasis_decompose(&target)?;
    let bounds: Vec<i64> = s.iter().map(|v| v.ceil().to_integer()).collect();
    let d = shape.degree();
    let hs: Vec<Vec<i64>> = shape
        .enumerate_sigma()
        .into_iter()
        .map(|t| hasse_weight(&shape, t).entries)
        .collect();
    let mults: Vec<i64> = (0..d).map(|pos| shape.multiplier(shape.theta_at(pos))).collect();
    let prev: Vec<usize> = (0..d)
        .map(|pos| shape.position(shape.sigma_inv(shape.theta_at(pos))))
        .collect();
    let in_cone = |v: &[i64]| (0..d).all(|x| mults[x] * v[x] >= v[prev[x]]);

    // split on the first coordinate, odometer over the rest
    let outer = bounds[0];
    let found: Vec<(u64, Vec<Vec<i64>>)> = (0..=outer)
        .into_par_iter()
        .map(|m0| {
            let mut m = vec![0i64; d];
            m[0] = m0;
            let mut v = target.entries.clone();
            for x in 0..d {
                v[x] -= m0 * hs[0][x];
            }
            let mut count = 0u64;
            let mut hits = Vec::new();
            loop {
                count += 1;
                if in_cone(&v) {
                    hits.push(m.clone());
                }
                let mut c = 1;
                loop {
                    if c == d {
                        return (count, hits);
                    }
                    if m[c] < bounds[c] {
                        m[c] += 1;
                        for x in 0..d {
                            v[x] -= hs[c][x];
                        }
                        break;
                    }
                    for x in 0..d {
                        v[x] += m[c] * hs[c][x];
                    }
                    m[c] = 0;
                    c += 1;
                }
            }
        })
        .collect();
    let points_searched = found.iter().map(|(c, _)| c).sum();
    let feasible = found.into_iter().flat_map(|(_, h)| h).collect();
    Ok(Ptwt0Search {
        p,
        e,
        f,
        bounds,
        points_searched,
        feasible,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shape::PrimeShape;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single(p: u64, e: u32, f: u32) -> Arc<FieldShape> {
        Arc::new(FieldShape::single(p, e, f).unwrap())
    }

    fn wv(s: &Arc<FieldShape>, v: &[i64]) -> WeightVector {
        WeightVector::from_vec(s, v.to_vec()).unwrap()
    }

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn shapes() -> Vec<Arc<FieldShape>> {
        let mut out = Vec::new();
        for p in [2u64, 3, 5] {
            for e in 1..=3 {
                for f in 1..=3 {
                    if e * f <= 6 {
                        out.push(single(p, e, f));
                    }
                }
            }
        }
        out.push(Arc::new(
            FieldShape::new(
                3,
                vec![
                    PrimeShape { id: "P".into(), e: 2, f: 1 },
                    PrimeShape { id: "Q".into(), e: 1, f: 2 },
                ],
            )
            .unwrap(),
        ));
        out
    }

    /// Dense rational Gaussian elimination, used as an independent oracle for
    /// the closed-form decomposition.
    fn solve_oracle(shape: &Arc<FieldShape>, k: &WeightVector) -> Vec<Rational> {
        let d = shape.degree();
        // columns are h_t, so the system is H^T s = k
        let h = hasse_matrix(shape);
        let mut a: Vec<Vec<Rational>> = (0..d)
            .map(|row| {
                let mut v: Vec<Rational> =
                    (0..d).map(|col| Rational::from_integer(h[(col, row)] as i64)).collect();
                v.push(Rational::from_integer(k.entries[row]));
                v
            })
            .collect();
        for c in 0..d {
            let piv = (c..d).find(|&r| a[r][c] != Rational::from_integer(0)).unwrap();
            a.swap(c, piv);
            let lead = a[c][c];
            for x in a[c].iter_mut() {
                *x /= lead;
            }
            for r in 0..d {
                if r != c {
                    let fac = a[r][c];
                    let row_c = a[c].clone();
                    for (x, y) in a[r].iter_mut().zip(row_c) {
                        *x -= fac * y;
                    }
                }
            }
        }
        a.into_iter().map(|row| row[d]).collect()
    }

    #[test]
    fn hasse_weight_examples() {
        let s = single(5, 2, 1);
        assert_eq!(hasse_weight(&s, s.theta(0, 0, 2)).entries, vec![1, -1]);
        assert_eq!(hasse_weight(&s, s.theta(0, 0, 1)).entries, vec![-1, 5]);
        let s = single(3, 1, 3);
        let h = hasse_weight(&s, s.theta(0, 1, 1));
        assert_eq!(h.entries, vec![3, -1, 0]);
    }

    #[test]
    fn cone_examples() {
        let s = single(5, 2, 1);
        assert!(in_min_cone(&WeightVector::zero(&s)));
        assert!(in_min_cone(&wv(&s, &[1, 3])));
        assert!(!in_min_cone(&wv(&s, &[1, 6])));
    }

    #[test]
    fn theta_shift_examples() {
        let s = single(5, 1, 1);
        let z = WeightVector::zero(&s);
        let tau = ResidueIndex { prime: 0, i: 0 };
        let (k, l) = theta_weight_shift(tau, &z, &z);
        assert_eq!(k.entries, vec![6]);
        assert_eq!(l.entries, vec![-1]);

        let s = single(3, 1, 2);
        let z = WeightVector::zero(&s);
        let (k, _) = theta_weight_shift(ResidueIndex { prime: 0, i: 1 }, &z, &z);
        assert_eq!(k.entries, vec![3, 1]);

        let s = single(5, 2, 1);
        let z = WeightVector::zero(&s);
        let (k, _) = theta_weight_shift(ResidueIndex { prime: 0, i: 0 }, &z, &z);
        assert_eq!(k.entries, vec![1, 1]);
    }

    #[test]
    fn frob_shift_examples() {
        let s = single(5, 2, 1);
        let k = wv(&s, &[2, 3]);
        let (k2, l2) = frob_weight_shift(0, &k, &k);
        assert_eq!(k2.entries, vec![3, 10]);
        assert_eq!(l2, k2);
        assert_eq!(frob_weight_unshift(0, &wv(&s, &[3, 10])).unwrap().entries, vec![2, 3]);
        assert!(matches!(
            frob_weight_unshift(0, &wv(&s, &[3, 7])),
            Err(Error::NonDivisibleWeight { .. })
        ));
        assert!(frob_weight_unshift(0, &WeightVector::zero(&s)).unwrap().is_zero());
    }

    #[test]
    fn frob_shift_leaves_other_primes() {
        let s = shapes().pop().unwrap();
        let k = wv(&s, &[1, 2, 3, 4]);
        let (k2, _) = frob_weight_shift(0, &k, &k);
        assert_eq!(&k2.entries[2..], &[3, 4]);
        let (k2, _) = frob_weight_shift(1, &k, &k);
        assert_eq!(&k2.entries[..2], &[1, 2]);
    }

    #[test]
    fn rho_examples() {
        let s = single(2, 1, 2);
        assert_eq!(rho(&WeightVector::unit(&s, s.theta(0, 1, 1))).classes, vec![2]);
        assert!(rho(&WeightVector::zero(&s)).is_trivial());
        for s in shapes() {
            for t in s.enumerate_sigma() {
                assert!(rho(&hasse_weight(&s, t)).is_trivial(), "{s} {t:?}");
            }
        }
    }

    #[test]
    fn lambda_index_examples() {
        assert_eq!(lambda_index(&single(2, 1, 2)).unwrap(), 3);
        assert_eq!(lambda_index(&single(5, 2, 1)).unwrap(), 4);
        assert_eq!(lambda_index(&single(2, 1, 1)).unwrap(), 1);
        for s in shapes() {
            lambda_index(&s).unwrap();
        }
    }

    #[test]
    fn decompose_examples() {
        let s = single(2, 1, 1);
        assert_eq!(hbasis_decompose(&wv(&s, &[3])).unwrap(), vec![r(3, 1)]);
        let s = single(5, 2, 1);
        assert_eq!(hbasis_decompose(&wv(&s, &[1, 3])).unwrap(), vec![r(1, 1), r(2, 1)]);
        for s in shapes() {
            for (pos, t) in s.enumerate_sigma().into_iter().enumerate() {
                let c = hbasis_decompose(&hasse_weight(&s, t)).unwrap();
                for (q, v) in c.iter().enumerate() {
                    assert_eq!(*v, r((q == pos) as i64, 1));
                }
            }
        }
    }

    #[test]
    fn leq_hasse_examples() {
        let s = single(5, 2, 1);
        let k = wv(&s, &[1, 1]);
        assert_eq!(leq_hasse(&k, &k).unwrap(), Some(vec![0, 0]));
        assert_eq!(leq_hasse(&k, &wv(&s, &[2, 0])).unwrap(), Some(vec![0, 1]));
        let z = WeightVector::zero(&s);
        assert_eq!(
            hbasis_decompose(&wv(&s, &[1, 0])).unwrap(),
            vec![r(1, 4), r(5, 4)]
        );
        assert_eq!(leq_hasse(&z, &wv(&s, &[1, 0])).unwrap(), None);
        // negative coordinates are rejected too
        assert_eq!(leq_hasse(&wv(&s, &[1, -1]), &z).unwrap(), None);
    }

    #[test]
    fn ptwt0_examples() {
        assert!(ptwt0_feasible(5, 1, 2).unwrap().feasible.is_empty());
        assert!(ptwt0_feasible(5, 2, 1).unwrap().feasible.is_empty());
        let r = ptwt0_feasible(2, 1, 1).unwrap();
        assert!(r.feasible.contains(&vec![0]));
        let r = ptwt0_feasible(7, 1, 1).unwrap();
        assert!(r.feasible.contains(&vec![0]));
    }

    #[test]
    fn ptwt0_matches_brute_force_on_small_grids() {
        // wider box than the bound, so this also tests the bound's soundness
        for (p, e, f) in [(2, 1, 2), (3, 2, 1), (2, 2, 1), (3, 1, 1), (2, 1, 1)] {
            let s = single(p, e, f);
            let target = WeightVector::unit(&s, s.theta(0, 0, e)).scale(2);
            let d = s.degree();
            let mut hits = Vec::new();
            let total = 5i64.pow(d as u32);
            for code in 0..total {
                let m: Vec<i64> = (0..d).map(|x| (code / 5i64.pow(x as u32)) % 5).collect();
                let mut v = target.clone();
                for (pos, &c) in m.iter().enumerate() {
                    v = v.add_scaled(&hasse_weight(&s, s.theta_at(pos)), -c);
                }
                if in_min_cone(&v) {
                    hits.push(m);
                }
            }
            let mut got = ptwt0_feasible(p, e, f).unwrap().feasible;
            got.sort();
            hits.sort();
            assert_eq!(got, hits, "p={p} e={e} f={f}");
        }
    }

    #[test]
    fn cone_points_have_nonnegative_coordinates() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for s in shapes() {
            for _ in 0..200 {
                let k = random_cone_point(&s, 40, 4, &mut rng);
                assert!(in_min_cone(&k));
                let c = hbasis_decompose(&k).unwrap();
                assert!(c.iter().all(|v| *v.numer() >= 0), "{k:?} -> {c:?}");
            }
        }
    }

    fn shape_and_vec() -> impl Strategy<Value = (Arc<FieldShape>, Vec<i64>, Vec<i64>)> {
        (0..shapes().len()).prop_flat_map(|idx| {
            let s = shapes()[idx].clone();
            let d = s.degree();
            (
                Just(s),
                proptest::collection::vec(-30i64..=30, d),
                proptest::collection::vec(-30i64..=30, d),
            )
        })
    }

    proptest! {
        #[test]
        fn frob_forms_agree((s, k, l) in shape_and_vec()) {
            let k = wv(&s, &k);
            let l = wv(&s, &l);
            for prime in 0..s.primes().len() {
                let (k2, l2) = frob_weight_shift(prime, &k, &l);
                prop_assert_eq!(&k2, &frob_weight_shift_hsum(prime, &k));
                prop_assert_eq!(&l2, &frob_weight_shift_hsum(prime, &l));
                prop_assert_eq!(&frob_weight_unshift(prime, &k2).unwrap(), &k);
                prop_assert_eq!(rho(&k2), rho(&k));
            }
        }

        #[test]
        fn frob_power_is_p_times_twist((s, k, _l) in shape_and_vec()) {
            let k = wv(&s, &k);
            let mut acc = k.clone();
            for prime in 0..s.primes().len() {
                for _ in 0..s.prime(prime).e {
                    acc = frob_weight_shift(prime, &acc, &acc).0;
                }
            }
            prop_assert_eq!(&acc, &phi_twist(&k).scale(s.p() as i64));
            prop_assert_eq!(&phi_untwist(&phi_twist(&k)), &k);
        }

        #[test]
        fn frob_of_hasse_weight((s, k, _l) in shape_and_vec()) {
            let _ = k;
            for t in s.enumerate_sigma() {
                let h = hasse_weight(&s, t);
                let (h2, _) = frob_weight_shift(t.prime, &h, &h);
                prop_assert_eq!(h2, hasse_weight(&s, s.sigma_inv(t)).scale(s.multiplier(t)));
            }
        }

        #[test]
        fn theta_shift_character((s, k, l) in shape_and_vec()) {
            let k = wv(&s, &k);
            let l = wv(&s, &l);
            for tau in s.residue_indices() {
                let t0 = s.theta0(tau);
                let (k1, l1) = theta_weight_shift(tau, &k, &l);
                let delta = &hasse_weight(&s, t0) + &WeightVector::unit(&s, t0).scale(2);
                prop_assert_eq!(&k1 - &k, delta.clone());
                prop_assert_eq!(rho(&(&k1 - &delta)), rho(&k));
                prop_assert_eq!(&l - &l1, WeightVector::unit(&s, t0));
            }
        }

        #[test]
        fn lambda_membership_two_ways((s, k, c) in shape_and_vec()) {
            let k = wv(&s, &k);
            prop_assert_eq!(lambda_contains(&k), lambda_contains_hnf(&k).unwrap());
            let mut moved = k.clone();
            for (pos, &ci) in c.iter().enumerate() {
                moved = moved.add_scaled(&hasse_weight(&s, s.theta_at(pos)), ci);
            }
            prop_assert_eq!(lambda_contains(&moved), lambda_contains(&k));
            prop_assert_eq!(rho(&moved), rho(&k));
        }

        #[test]
        fn decompose_matches_oracle_and_round_trips((s, k, _l) in shape_and_vec()) {
            let k = wv(&s, &k);
            let c = hbasis_decompose(&k).unwrap();
            prop_assert_eq!(&c, &solve_oracle(&s, &k));
            prop_assert_eq!(hbasis_compose(&s, &c).unwrap(), k);
        }

        #[test]
        fn compose_then_decompose((s, num, den) in shape_and_vec()) {
            let coords: Vec<Rational> = num
                .iter()
                .zip(&den)
                .map(|(&n, &d)| Rational::new(n, d.abs() % 5 + 1))
                .collect();
            // only integral images are weight vectors; scale to clear denominators
            let scaled: Vec<Rational> = coords.iter().map(|c| c * 60).collect();
            let k = hbasis_compose(&s, &scaled).unwrap();
            prop_assert_eq!(hbasis_decompose(&k).unwrap(), scaled);
        }
    }
}
