//! Seeded random inputs for property suites, benches and the command line.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::Result;
use crate::exponents::ExponentModel;
use crate::gfq::GfElement;
use crate::qexp::QExpansion;
use crate::shape::FieldShape;
use crate::weights::{Rational, WeightVector};

pub fn random_weight<R: Rng + ?Sized>(
    shape: &Arc<FieldShape>,
    max_abs: i64,
    rng: &mut R,
) -> WeightVector {
    let entries = (0..shape.degree())
        .map(|_| rng.gen_range(-max_abs..=max_abs))
        .collect();
    WeightVector::from_vec(shape, entries).expect("length matches")
}

/// Largest support `s` such that `pi_P m` stays inside the window `bound` for
/// every `m` in the window `s`. Zero if there is none.
pub fn v_safe_support(model: &ExponentModel, prime: usize, bound: i64) -> Result<i64> {
    let window = model.window(Rational::from_integer(bound));
    // scaled trace per exponent; the answer is one below the smallest trace
    // whose image escapes
    let mut s = bound;
    for m in &window {
        let img = model.scale(prime, m.coords())?;
        if model.trace(&img) > bound {
            s = s.min(model.trace(m.coords()) - 1);
        }
    }
    Ok(s.max(0))
}

/// An expansion with truncation `bound`, up to `nterms` nonzero terms drawn
/// from the window of `support`, and a constant term that is zero half the time.
pub fn random_expansion<R: Rng + ?Sized>(
    model: &Arc<ExponentModel>,
    k: WeightVector,
    l: WeightVector,
    bound: Rational,
    support: Rational,
    nterms: usize,
    rng: &mut R,
) -> Result<QExpansion> {
    let mut f = QExpansion::zero(model, k, l, bound)?;
    if rng.gen_bool(0.5) {
        f.set_constant(GfElement::random_nonzero(model.field(), rng))?;
    }
    let window = model.window(support.min(bound));
    for m in window.choose_multiple(rng, nterms) {
        f.add_term(m.clone(), GfElement::random_nonzero(model.field(), rng))?;
    }
    Ok(f)
}

/// An expansion satisfying `r_{u^{-1} m} = chi_l(u) r_m` for the unit `u`: each
/// chosen exponent contributes its whole orbit under `u` inside the window.
pub fn random_unit_invariant<R: Rng + ?Sized>(
    model: &Arc<ExponentModel>,
    k: WeightVector,
    l: WeightVector,
    bound: Rational,
    unit: &[i64],
    orbits: usize,
    rng: &mut R,
) -> Result<QExpansion> {
    let u_inv = model.unit_inverse(unit)?;
    let chi = model.chi(&l, unit)?;
    let mut f = QExpansion::zero(model, k, l, bound)?;
    if chi.is_one() && rng.gen_bool(0.5) {
        f.set_constant(GfElement::random_nonzero(model.field(), rng))?;
    }
    let inside = |m: &[i64]| Rational::from_integer(model.trace(m)) <= bound;
    let window = model.window(bound);
    for m in window.choose_multiple(rng, orbits) {
        if f.terms().contains_key(m) {
            continue;
        }
        let c = GfElement::random_nonzero(model.field(), rng);
        // walk down with u^{-1} (coefficient times chi), then up with u
        let (mut cur, mut cc) = (m.coords().to_vec(), c.clone());
        while inside(&cur) {
            f.add_term(crate::exponents::Exponent(cur.clone()), cc.clone())?;
            cur = model.mul_elements(&u_inv, &cur)?;
            cc = &cc * &chi;
        }
        let (mut cur, mut cc) = (model.mul_elements(unit, m.coords())?, c.checked_div(&chi)?);
        while inside(&cur) {
            f.add_term(crate::exponents::Exponent(cur.clone()), cc.clone())?;
            cur = model.mul_elements(unit, &cur)?;
            cc = cc.checked_div(&chi)?;
        }
    }
    Ok(f)
}
