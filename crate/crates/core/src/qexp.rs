//! Truncated q-expansions `c_0 + sum r_m q^m` with weights, and the operators
//! acting on them.
//!
//! An expansion is known on the window `{m totally positive, trace(m) <= B}`;
//! coefficients there that are not stored are zero. Hasse invariants and their
//! `l`-counterparts are normalized to the constant 1, so multiplying by them only
//! relabels the weight.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exponents::{presets, Exponent, ExponentModel, ModelConfig};
use crate::gfq::GfElement;
use crate::shape::{ResidueIndex, ThetaIndex};
use crate::weights::{
    frob_weight_shift, frob_weight_unshift, hasse_weight, phi_untwist, theta_weight_shift,
    Rational, WeightVector,
};

#[derive(Clone, PartialEq, Eq)]
pub struct QExpansion {
    model: Arc<ExponentModel>,
    k: WeightVector,
    l: WeightVector,
    bound: Rational,
    constant: GfElement,
    terms: BTreeMap<Exponent, GfElement>,
}

fn same_model(a: &Arc<ExponentModel>, b: &Arc<ExponentModel>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// Bound used internally when intermediate images may leave the window.
fn unbounded() -> Rational {
    Rational::from_integer(i64::MAX / 4)
}

impl QExpansion {
    pub fn zero(
        model: &Arc<ExponentModel>,
        k: WeightVector,
        l: WeightVector,
        bound: Rational,
    ) -> Result<Self> {
        if k.shape() != model.shape() || l.shape() != model.shape() {
            return Err(Error::WeightMismatch("weights are not on the model's shape".into()));
        }
        if bound <= Rational::from_integer(0) {
            return Err(Error::Config(format!("truncation bound {bound} must be positive")));
        }
        Ok(QExpansion {
            constant: GfElement::zero(model.field()),
            model: model.clone(),
            k,
            l,
            bound,
            terms: BTreeMap::new(),
        })
    }

    /// The constant 1 at weight `(0, 0)`.
    pub fn one(model: &Arc<ExponentModel>, bound: Rational) -> Result<Self> {
        let z = WeightVector::zero(model.shape());
        let mut f = Self::zero(model, z.clone(), z, bound)?;
        f.constant = GfElement::one(model.field());
        Ok(f)
    }

    /// The constant `c` at weight `(k, l)`.
    pub fn constant_at(
        model: &Arc<ExponentModel>,
        k: WeightVector,
        l: WeightVector,
        bound: Rational,
        c: GfElement,
    ) -> Result<Self> {
        let mut f = Self::zero(model, k, l, bound)?;
        f.set_constant(c)?;
        Ok(f)
    }

    pub fn model(&self) -> &Arc<ExponentModel> {
        &self.model
    }

    pub fn k(&self) -> &WeightVector {
        &self.k
    }

    pub fn l(&self) -> &WeightVector {
        &self.l
    }

    pub fn bound(&self) -> Rational {
        self.bound
    }

    pub fn constant(&self) -> &GfElement {
        &self.constant
    }

    pub fn terms(&self) -> &BTreeMap<Exponent, GfElement> {
        &self.terms
    }

    pub fn coeff(&self, m: &Exponent) -> GfElement {
        self.terms
            .get(m)
            .cloned()
            .unwrap_or_else(|| GfElement::zero(self.model.field()))
    }

    pub fn is_zero(&self) -> bool {
        self.constant.is_zero() && self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest trace in the support, 0 if there are no terms.
    pub fn max_trace(&self) -> i64 {
        self.terms.keys().map(|m| self.model.trace(m.coords())).max().unwrap_or(0)
    }

    fn in_window(&self, m: &Exponent) -> bool {
        Rational::from_integer(self.model.trace(m.coords())) <= self.bound
    }

    fn check_coeff(&self, c: &GfElement) -> Result<()> {
        if c.context() != self.model.field() && **c.context() != **self.model.field() {
            return Err(Error::ContextMismatch);
        }
        Ok(())
    }

    pub fn set_constant(&mut self, c: GfElement) -> Result<()> {
        self.check_coeff(&c)?;
        self.constant = c;
        Ok(())
    }

    /// Adds `c q^m`, checking rank, total positivity and the window.
    pub fn add_term(&mut self, m: Exponent, c: GfElement) -> Result<()> {
        self.model.check_rank(m.coords())?;
        self.check_coeff(&c)?;
        if !self.model.is_totally_positive(m.coords()) {
            return Err(Error::NotTotallyPositive(m.to_string()));
        }
        if !self.in_window(&m) {
            return Err(Error::OutsideWindow {
                trace: self.model.trace(m.coords()),
                exponent: m.to_string(),
                bound: self.bound.to_string(),
            });
        }
        self.accumulate(m, c);
        Ok(())
    }

    fn accumulate(&mut self, m: Exponent, c: GfElement) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(v) => {
                *v += &c;
                if v.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    fn with_terms(&self, k: WeightVector, l: WeightVector, constant: GfElement) -> Self {
        QExpansion {
            model: self.model.clone(),
            k,
            l,
            bound: self.bound,
            constant,
            terms: BTreeMap::new(),
        }
    }

    fn check_frame(&self, other: &QExpansion) -> Result<()> {
        if !same_model(&self.model, &other.model) || self.bound != other.bound {
            return Err(Error::ModelMismatch);
        }
        Ok(())
    }

    fn check_weights(&self, other: &QExpansion) -> Result<()> {
        self.check_frame(other)?;
        if self.k != other.k || self.l != other.l {
            return Err(Error::WeightMismatch(format!(
                "({}, {}) vs ({}, {})",
                self.k, self.l, other.k, other.l
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &QExpansion) -> Result<QExpansion> {
        self.check_weights(other)?;
        let mut out = self.clone();
        out.constant += &other.constant;
        for (m, c) in &other.terms {
            out.accumulate(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &QExpansion) -> Result<QExpansion> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> QExpansion {
        let mut out = self.clone();
        out.constant = -&out.constant;
        for v in out.terms.values_mut() {
            *v = -&*v;
        }
        out
    }

    pub fn scalar_mul(&self, c: &GfElement) -> Result<QExpansion> {
        self.check_coeff(c)?;
        let mut out = self.with_terms(self.k.clone(), self.l.clone(), &self.constant * c);
        if !c.is_zero() {
            out.terms = self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect();
        }
        Ok(out)
    }

    /// Cauchy product; terms beyond the window are dropped. Since the trace is
    /// additive and positive, the result is exact on the window.
    pub fn mul(&self, other: &QExpansion) -> Result<QExpansion> {
        self.check_frame(other)?;
        let mut out = self.with_terms(
            &self.k + &other.k,
            &self.l + &other.l,
            &self.constant * &other.constant,
        );
        if !self.constant.is_zero() {
            for (m, c) in &other.terms {
                out.accumulate(m.clone(), &self.constant * c);
            }
        }
        if !other.constant.is_zero() {
            for (m, c) in &self.terms {
                out.accumulate(m.clone(), c * &other.constant);
            }
        }
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let m = a.add(b);
                if out.in_window(&m) {
                    out.accumulate(m, ca * cb);
                }
            }
        }
        Ok(out)
    }

    pub fn pow(&self, n: u32) -> Result<QExpansion> {
        let mut acc = QExpansion::one(&self.model, self.bound)?;
        for _ in 0..n {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// Same coefficients, weight moved by `(dk, dl)`.
    pub fn relabel(&self, dk: &WeightVector, dl: &WeightVector) -> QExpansion {
        let mut out = self.clone();
        out.k = &out.k + dk;
        out.l = &out.l + dl;
        out
    }

    /// Multiplication by the normalized Hasse invariant `H'_t` (or its inverse).
    pub fn mul_hasse(&self, t: ThetaIndex, power: i64) -> QExpansion {
        let h = hasse_weight(self.model.shape(), t).scale(power);
        self.relabel(&h, &WeightVector::zero(self.model.shape()))
    }

    /// Multiplication by `G'_t` (or its inverse).
    pub fn mul_g(&self, t: ThetaIndex, power: i64) -> QExpansion {
        let h = hasse_weight(self.model.shape(), t).scale(power);
        self.relabel(&WeightVector::zero(self.model.shape()), &h)
    }

    /// `Theta_tau`: `r_m -> tau(m) r_m`, constant term killed.
    pub fn apply_theta(&self, tau: ResidueIndex) -> QExpansion {
        let (k, l) = theta_weight_shift(tau, &self.k, &self.l);
        let mut out = self.with_terms(k, l, GfElement::zero(self.model.field()));
        for (m, c) in &self.terms {
            out.accumulate(m.clone(), &self.model.tau_reduce(tau, m.coords()) * c);
        }
        out
    }

    fn v_terms(&self, prime: usize, k: WeightVector, l: WeightVector) -> Result<QExpansion> {
        let mut out = self.with_terms(k, l, self.constant.clone());
        for (m, c) in &self.terms {
            let image = Exponent(self.model.scale(prime, m.coords())?);
            if out.in_window(&image) {
                out.terms.insert(image, c.clone());
            }
        }
        Ok(out)
    }

    /// `V_P`: `q^m -> q^{pi m}`. Images beyond the window are dropped.
    pub fn apply_v(&self, prime: usize) -> Result<QExpansion> {
        let (k, l) = frob_weight_shift(prime, &self.k, &self.l);
        self.v_terms(prime, k, l)
    }

    /// `V_P` followed by the `G'` relabel that restores `l`.
    pub fn apply_v0(&self, prime: usize) -> Result<QExpansion> {
        let (k, _) = frob_weight_shift(prime, &self.k, &self.l);
        self.v_terms(prime, k, self.l.clone())
    }

    /// Raises coefficients to the `p`-th power; weight index relabel
    /// `out_{(P,i,j)} = in_{(P,i-1,j)}`.
    pub fn frob_coeffs(&self) -> QExpansion {
        let mut out = self.with_terms(
            phi_untwist(&self.k),
            phi_untwist(&self.l),
            self.constant.frobenius(1),
        );
        out.terms = self
            .terms
            .iter()
            .map(|(m, c)| (m.clone(), c.frobenius(1)))
            .collect();
        out
    }

    /// `q^m -> q^{nu^{-1} m}`.
    pub fn reindex_by_nu_inv(&self) -> Result<QExpansion> {
        let mut out = self.with_terms(self.k.clone(), self.l.clone(), self.constant.clone());
        for (m, c) in &self.terms {
            let image = Exponent(self.model.apply_nu_inv(m.coords())?);
            if out.in_window(&image) {
                out.terms.insert(image, c.clone());
            }
        }
        Ok(out)
    }

    fn with_bound(&self, bound: Rational) -> QExpansion {
        let mut out = self.clone();
        out.bound = bound;
        out.terms.retain(|m, _| {
            Rational::from_integer(self.model.trace(m.coords())) <= bound
        });
        out
    }

    fn support_in_scaled(&self, prime: usize) -> Result<Option<Exponent>> {
        for m in self.terms.keys() {
            if !self.model.in_scaled(prime, 1, m.coords())? {
                return Ok(Some(m.clone()));
            }
        }
        Ok(None)
    }

    /// `(prod_P V_P^{e_P})` followed by coefficient Frobenius and `nu^{-1}`
    /// reindexing, compared with `f^p`.
    ///
    /// Intermediate images are carried without truncation, so the comparison is
    /// exact as long as `p * trace(m) <= B` on the support.
    pub fn ppower_check(&self) -> Result<bool> {
        let p = self.model.shape().p() as i64;
        if Rational::from_integer(p * self.max_trace()) > self.bound {
            return Err(Error::TruncationTooSmall(format!(
                "p * max trace = {} exceeds the bound {}",
                p * self.max_trace(),
                self.bound
            )));
        }
        let mut lhs = self.with_bound(unbounded());
        for (prime, pr) in self.model.shape().primes().iter().enumerate() {
            for _ in 0..pr.e {
                lhs = lhs.apply_v(prime)?;
            }
        }
        let lhs = lhs.frob_coeffs().reindex_by_nu_inv()?.with_bound(self.bound);
        let rhs = self.pow(p as u32)?;
        let weight_ok = lhs.k == rhs.k && lhs.l == rhs.l;
        debug_assert!(weight_ok, "p-power weights disagree");
        Ok(weight_ok && lhs == rhs)
    }

    /// Kernel test for `Theta_tau`, computed from the operator and from the
    /// support condition; the two must agree.
    pub fn in_theta_kernel(&self, tau: ResidueIndex) -> Result<bool> {
        let by_operator = self.apply_theta(tau).is_zero();
        let by_support = self.support_in_scaled(tau.prime)?.is_none();
        assert_eq!(by_operator, by_support, "theta kernel and support test disagree");
        Ok(by_operator)
    }

    /// `g` with `V0_P g = f`: `c_g(m) = c_f(pi m)` at weight `(k0, l)`.
    pub fn v0_preimage(&self, prime: usize) -> Result<QExpansion> {
        if let Some(m) = self.support_in_scaled(prime)? {
            return Err(Error::NotInKernel(m.to_string()));
        }
        let k0 = frob_weight_unshift(prime, &self.k)?;
        let mut out = self.with_terms(k0, self.l.clone(), self.constant.clone());
        for (n, c) in &self.terms {
            let m = Exponent(
                self.model
                    .unscale(prime, n.coords())?
                    .expect("support lies in the scaled lattice"),
            );
            if !out.in_window(&m) {
                return Err(Error::TruncationTooSmall(format!(
                    "preimage {m} of {n} lies beyond the bound {}",
                    self.bound
                )));
            }
            out.terms.insert(m, c.clone());
        }
        Ok(out)
    }

    /// `Theta_{tau_0}^p f` against `Theta_{tau_1} f` times the Hasse and `G'`
    /// factors of [`theta_p_relabel`].
    pub fn theta_p_relation_check(&self, tau0: ResidueIndex) -> Result<bool> {
        let shape = self.model.shape();
        let p = shape.p() as u32;
        let mut lhs = self.clone();
        for _ in 0..p {
            lhs = lhs.apply_theta(tau0);
        }
        let tau1 = ResidueIndex {
            prime: tau0.prime,
            i: (tau0.i + 1) % shape.prime(tau0.prime).f,
        };
        let (dk, dl) = theta_p_relabel(self.model.shape(), tau0);
        let rhs = self.apply_theta(tau1).relabel(&dk, &dl);
        assert!(
            lhs.k == rhs.k && lhs.l == rhs.l,
            "theta^p weight relabel is unbalanced"
        );
        Ok(lhs == rhs)
    }

    /// Checks `r_{u^{-1} m} = chi_l(u) r_m` for every listed unit `u`, at every
    /// `m` where both sides lie in the window (including `m = 0`).
    pub fn validate_unit_invariance(&self, units: &[Vec<i64>], l: &WeightVector) -> Result<bool> {
        for u in units {
            let u_inv = self.model.unit_inverse(u)?;
            let chi = self.model.chi(l, u)?;
            if self.constant != &chi * &self.constant {
                return Ok(false);
            }
            let mut candidates: Vec<Exponent> = self.terms.keys().cloned().collect();
            for m in self.terms.keys() {
                candidates.push(Exponent(self.model.mul_elements(u, m.coords())?));
            }
            for m in candidates {
                let moved = Exponent(self.model.mul_elements(&u_inv, m.coords())?);
                if !self.in_window(&m) || !self.in_window(&moved) {
                    continue;
                }
                if self.coeff(&moved) != &chi * &self.coeff(&m) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// Weight factor relating `Theta_{tau_0}^p` and `Theta_{tau_1}`, with
/// `t_0 = (P, i, e)`, `t_1 = (P, i+1, e)` and `s^j t_0` the indices in between:
///
/// `H'_{t_0}^p H'_{t_1} prod_{j<e} H'_{s^j t_0}^2` on the `k` side and
/// `prod_{j<=e} G'^{-1}_{s^j t_0}` on the `l` side.
pub fn theta_p_relabel(
    shape: &Arc<crate::shape::FieldShape>,
    tau0: ResidueIndex,
) -> (WeightVector, WeightVector) {
    let t0 = shape.theta0(tau0);
    let e = shape.prime(tau0.prime).e as i64;
    let p = shape.p() as i64;
    let mut dk = hasse_weight(shape, t0).scale(p);
    let mut dl = WeightVector::zero(shape);
    for j in 1..=e {
        let t = shape.sigma_pow(t0, j);
        let h = hasse_weight(shape, t);
        dk = dk.add_scaled(&h, if j == e { 1 } else { 2 });
        dl = dl.add_scaled(&h, -1);
    }
    (dk, dl)
}

impl fmt::Debug for QExpansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "QExpansion(k={}, l={}, B={}, c0={}", self.k, self.l, self.bound, self.constant)?;
        for (m, c) in &self.terms {
            write!(f, ", {m}:{c}")?;
        }
        write!(f, ")")
    }
}

/// An integer that reads from a JSON number or a decimal string and writes as a
/// number.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Int(pub i64);

impl Serialize for Int {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i64(self.0)
    }
}

impl<'de> Deserialize<'de> for Int {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Int;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "an integer or a decimal string")
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Int, E> {
                Ok(Int(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Int, E> {
                i64::try_from(v).map(Int).map_err(E::custom)
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Int, E> {
                v.trim().parse().map(Int).map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

fn ints(v: &[i64]) -> Vec<Int> {
    v.iter().map(|&x| Int(x)).collect()
}

fn plain(v: &[Int]) -> Vec<i64> {
    v.iter().map(|x| x.0).collect()
}

/// A preset name or an inline model configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelRef {
    Preset(String),
    Inline(ModelConfig),
}

impl ModelRef {
    pub fn load(&self) -> Result<Arc<ExponentModel>> {
        match self {
            ModelRef::Preset(name) => presets::load(name),
            ModelRef::Inline(cfg) => ExponentModel::from_config(cfg),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermRecord {
    pub m: Vec<Int>,
    pub c: Vec<Int>,
}

/// File form of a q-expansion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QExpansionRecord {
    pub model: ModelRef,
    pub k: Vec<Int>,
    pub l: Vec<Int>,
    pub bound: String,
    pub constant: Vec<Int>,
    pub terms: Vec<TermRecord>,
}

pub fn parse_bound(s: &str) -> Result<Rational> {
    Rational::from_str(s.trim()).map_err(|_| Error::Config(format!("bad rational bound `{s}`")))
}

impl QExpansionRecord {
    pub fn into_expansion(&self, model: &Arc<ExponentModel>) -> Result<QExpansion> {
        let shape = model.shape();
        let k = WeightVector::from_vec(shape, plain(&self.k))?;
        let l = WeightVector::from_vec(shape, plain(&self.l))?;
        let mut f = QExpansion::zero(model, k, l, parse_bound(&self.bound)?)?;
        f.set_constant(GfElement::from_coeffs(model.field(), &plain(&self.constant))?)?;
        for t in &self.terms {
            let c = GfElement::from_coeffs(model.field(), &plain(&t.c))?;
            f.add_term(Exponent(plain(&t.m)), c)?;
        }
        Ok(f)
    }

    pub fn from_expansion(f: &QExpansion, model: ModelRef) -> Self {
        QExpansionRecord {
            model,
            k: ints(f.k.entries()),
            l: ints(f.l.entries()),
            bound: f.bound.to_string(),
            constant: ints(&f.constant.coeffs_i64()),
            terms: f
                .terms
                .iter()
                .map(|(m, c)| TermRecord {
                    m: ints(m.coords()),
                    c: ints(&c.coeffs_i64()),
                })
                .collect(),
        }
    }
}

impl QExpansion {
    pub fn from_json(text: &str) -> Result<(QExpansion, ModelRef)> {
        let rec: QExpansionRecord =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let model = rec.model.load()?;
        Ok((rec.into_expansion(&model)?, rec.model))
    }

    pub fn to_json(&self, model: ModelRef) -> String {
        serde_json::to_string_pretty(&QExpansionRecord::from_expansion(self, model))
            .expect("records always serialize")
    }
}
