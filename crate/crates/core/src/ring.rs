//! The total algebra over all weights, its collapse onto character buckets, and
//! the exactness probe for `V_P` followed by `Theta_tau`.
//!
//! Collapsing adds every weight component into the bucket of its characters
//! `(rho(k), rho(l))`. This identifies `H'_t` and `G'_t` with 1, so the ideal
//! they generate lies in the kernel. Only that inclusion is checked here. The
//! reverse inclusion is not visible at the level of formal expansions.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exponents::{Exponent, ExponentModel};
use crate::gfq::GfElement;
use crate::qexp::{ModelRef, QExpansion, QExpansionRecord};
use crate::shape::{ResidueIndex, ThetaIndex};
use crate::weights::{
    frob_weight_unshift, hasse_weight, leq_hasse, rho, PsiCharacter, Rational, WeightVector,
};

type WeightKey = (Vec<i64>, Vec<i64>);

/// A finite sum of q-expansions of distinct weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradedElement {
    model: Arc<ExponentModel>,
    bound: Rational,
    components: BTreeMap<WeightKey, QExpansion>,
}

fn key(f: &QExpansion) -> WeightKey {
    (f.k().entries().to_vec(), f.l().entries().to_vec())
}

impl GradedElement {
    pub fn zero(model: &Arc<ExponentModel>, bound: Rational) -> Self {
        GradedElement {
            model: model.clone(),
            bound,
            components: BTreeMap::new(),
        }
    }

    pub fn from_expansion(f: QExpansion) -> Self {
        let mut x = Self::zero(f.model(), f.bound());
        x.push(f).expect("frame matches");
        x
    }

    pub fn from_expansions(
        model: &Arc<ExponentModel>,
        bound: Rational,
        parts: impl IntoIterator<Item = QExpansion>,
    ) -> Result<Self> {
        let mut x = Self::zero(model, bound);
        for f in parts {
            x.push(f)?;
        }
        Ok(x)
    }

    pub fn model(&self) -> &Arc<ExponentModel> {
        &self.model
    }

    pub fn bound(&self) -> Rational {
        self.bound
    }

    pub fn components(&self) -> impl Iterator<Item = &QExpansion> {
        self.components.values()
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.components.is_empty()
    }

    /// Adds `f` into the component of its weight.
    pub fn push(&mut self, f: QExpansion) -> Result<()> {
        if f.bound() != self.bound || !(**f.model() == *self.model) {
            return Err(Error::ModelMismatch);
        }
        let kk = key(&f);
        let sum = match self.components.remove(&kk) {
            Some(g) => g.add(&f)?,
            None => f,
        };
        if !sum.is_zero() {
            self.components.insert(kk, sum);
        }
        Ok(())
    }

    pub fn add(&self, other: &GradedElement) -> Result<GradedElement> {
        let mut out = self.clone();
        for f in other.components.values() {
            out.push(f.clone())?;
        }
        Ok(out)
    }

    pub fn neg(&self) -> GradedElement {
        GradedElement {
            model: self.model.clone(),
            bound: self.bound,
            components: self
                .components
                .iter()
                .map(|(k, f)| (k.clone(), f.neg()))
                .collect(),
        }
    }

    pub fn sub(&self, other: &GradedElement) -> Result<GradedElement> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &GradedElement) -> Result<GradedElement> {
        let mut out = Self::zero(&self.model, self.bound);
        for a in self.components.values() {
            for b in other.components.values() {
                out.push(a.mul(b)?)?;
            }
        }
        Ok(out)
    }

    fn map(&self, op: impl Fn(&QExpansion) -> Result<QExpansion>) -> Result<GradedElement> {
        let mut out = Self::zero(&self.model, self.bound);
        for f in self.components.values() {
            out.push(op(f)?)?;
        }
        Ok(out)
    }

    pub fn ring_v(&self, prime: usize) -> Result<GradedElement> {
        self.map(|f| f.apply_v(prime))
    }

    pub fn ring_theta(&self, tau: ResidueIndex) -> Result<GradedElement> {
        self.map(|f| Ok(f.apply_theta(tau)))
    }

    pub fn to_records(&self, model: &ModelRef) -> Vec<QExpansionRecord> {
        self.components
            .values()
            .map(|f| QExpansionRecord::from_expansion(f, model.clone()))
            .collect()
    }

    /// Reads a JSON array of q-expansion records; weights must be distinct.
    pub fn from_json(text: &str) -> Result<(GradedElement, ModelRef)> {
        let recs: Vec<QExpansionRecord> =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let first = recs
            .first()
            .ok_or_else(|| Error::Config("graded element file is empty".into()))?;
        let model = first.model.load()?;
        let bound = crate::qexp::parse_bound(&first.bound)?;
        let mut x = Self::zero(&model, bound);
        for r in &recs {
            if r.model != first.model {
                return Err(Error::ModelMismatch);
            }
            let f = r.into_expansion(&model)?;
            if x.components.contains_key(&key(&f)) {
                return Err(Error::Config(format!(
                    "weight ({}, {}) appears twice",
                    f.k(),
                    f.l()
                )));
            }
            x.push(f)?;
        }
        Ok((x, first.model.clone()))
    }
}

/// The normalized generator `H'_t - 1` of the collapse ideal.
pub fn hasse_generator(model: &Arc<ExponentModel>, bound: Rational, t: ThetaIndex) -> Result<GradedElement> {
    let s = model.shape();
    let z = WeightVector::zero(s);
    let one = GfElement::one(model.field());
    GradedElement::from_expansions(
        model,
        bound,
        [
            QExpansion::constant_at(model, hasse_weight(s, t), z.clone(), bound, one.clone())?,
            QExpansion::constant_at(model, z.clone(), z, bound, -&one)?,
        ],
    )
}

/// The normalized generator `G'_t - 1`.
pub fn g_generator(model: &Arc<ExponentModel>, bound: Rational, t: ThetaIndex) -> Result<GradedElement> {
    let s = model.shape();
    let z = WeightVector::zero(s);
    let one = GfElement::one(model.field());
    GradedElement::from_expansions(
        model,
        bound,
        [
            QExpansion::constant_at(model, z.clone(), hasse_weight(s, t), bound, one.clone())?,
            QExpansion::constant_at(model, z.clone(), z, bound, -&one)?,
        ],
    )
}

/// Coefficients of one bucket, without weight.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BareCoefficients {
    pub constant: GfElement,
    pub terms: BTreeMap<Exponent, GfElement>,
}

impl BareCoefficients {
    pub fn is_zero(&self) -> bool {
        self.constant.is_zero() && self.terms.is_empty()
    }
}

pub type BucketKey = (PsiCharacter, PsiCharacter);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharacterBucketSum {
    pub buckets: BTreeMap<BucketKey, BareCoefficients>,
}

impl CharacterBucketSum {
    pub fn is_zero(&self) -> bool {
        self.buckets.is_empty()
    }
}

pub fn qbar_collapse(x: &GradedElement) -> CharacterBucketSum {
    let mut buckets: BTreeMap<BucketKey, BareCoefficients> = BTreeMap::new();
    for f in x.components.values() {
        let entry = buckets
            .entry((rho(f.k()), rho(f.l())))
            .or_insert_with(|| BareCoefficients {
                constant: GfElement::zero(x.model.field()),
                terms: BTreeMap::new(),
            });
        entry.constant += f.constant();
        for (m, c) in f.terms() {
            let slot = entry
                .terms
                .entry(m.clone())
                .or_insert_with(|| GfElement::zero(x.model.field()));
            *slot += c;
            if slot.is_zero() {
                entry.terms.remove(m);
            }
        }
    }
    buckets.retain(|_, v| !v.is_zero());
    CharacterBucketSum { buckets }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProbeVerdict {
    /// `y` with `collapse(V y - x) = 0`.
    Exact(GradedElement),
    /// The theta image has a nonzero bucket; the certificate names one
    /// exponent where it survives.
    NotInKernel { bucket: BucketKey, exponent: Exponent },
    /// `collapse(V x) = 0` but `collapse(x) != 0`.
    NotInjective,
}

/// `collapse(V x) = 0` implies `collapse(x) = 0`, tested on the part of `x`
/// whose image under `V_P` stays inside the window.
pub fn injectivity_holds(prime: usize, x: &GradedElement) -> Result<bool> {
    let model = &x.model;
    let mut kept = GradedElement::zero(model, x.bound);
    for f in x.components.values() {
        let mut g = QExpansion::zero(model, f.k().clone(), f.l().clone(), x.bound)?;
        g.set_constant(f.constant().clone())?;
        for (m, c) in f.terms() {
            let img = model.scale(prime, m.coords())?;
            if Rational::from_integer(model.trace(&img)) <= x.bound {
                g.add_term(m.clone(), c.clone())?;
            }
        }
        kept.push(g)?;
    }
    let vx = qbar_collapse(&kept.ring_v(prime)?);
    Ok(!vx.is_zero() || qbar_collapse(&kept).is_zero())
}

/// Tests exactness at `x`: if `Theta_tau x` collapses to zero, builds a
/// preimage under `V_P` bucket by bucket.
///
/// Each bucket is represented at a weight whose `(P, i, e)` entries are made
/// divisible by `p` by adding `sum_i m_i h_{(P, i, e)}` with `0 <= m_i < p`;
/// that weight is then un-shifted and the bucket's coefficients pulled back.
pub fn exactness_probe(prime: usize, tau: ResidueIndex, x: &GradedElement) -> Result<ProbeVerdict> {
    assert_eq!(tau.prime, prime, "theta index must lie over the prime");
    if !injectivity_holds(prime, x)? {
        return Ok(ProbeVerdict::NotInjective);
    }
    let th = qbar_collapse(&x.ring_theta(tau)?);
    if let Some((bucket, coeffs)) = th.buckets.iter().next() {
        let exponent = coeffs.terms.keys().next().cloned().unwrap_or(Exponent(vec![]));
        return Ok(ProbeVerdict::NotInKernel {
            bucket: bucket.clone(),
            exponent,
        });
    }
    let model = &x.model;
    let s = model.shape();
    let p = s.p() as i64;
    let mut reps: BTreeMap<BucketKey, (WeightVector, WeightVector)> = BTreeMap::new();
    for f in x.components.values() {
        reps.entry((rho(f.k()), rho(f.l())))
            .or_insert_with(|| (f.k().clone(), f.l().clone()));
    }
    let collapsed = qbar_collapse(x);
    let mut y = GradedElement::zero(model, x.bound);
    for (bucket, coeffs) in &collapsed.buckets {
        let (k, l) = &reps[bucket];
        let mut adjusted = k.clone();
        let mut expected = vec![0u64; s.degree()];
        for tau_i in s.residues_over(prime) {
            let t = s.theta0(tau_i);
            let m = k.get(t).rem_euclid(p);
            adjusted = adjusted.add_scaled(&hasse_weight(s, t), m);
            expected[s.position(t)] = m as u64;
        }
        if leq_hasse(k, &adjusted)?.as_deref() != Some(&expected[..]) {
            return Err(Error::NotApplicable(format!("{k}")));
        }
        frob_weight_unshift(prime, &adjusted)
            .map_err(|_| Error::NotApplicable(format!("{adjusted}")))?;
        let mut rep = QExpansion::zero(model, adjusted, l.clone(), x.bound)?;
        rep.set_constant(coeffs.constant.clone())?;
        for (m, c) in &coeffs.terms {
            rep.add_term(m.clone(), c.clone())?;
        }
        y.push(rep.v0_preimage(prime)?)?;
    }
    let residual = qbar_collapse(&y.ring_v(prime)?.sub(x)?);
    if !residual.is_zero() {
        return Err(Error::TruncationTooSmall(
            "pulled-back element does not reproduce the input on the window".into(),
        ));
    }
    Ok(ProbeVerdict::Exact(y))
}
