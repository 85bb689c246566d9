//! Cusp exponent lattices.
//!
//! A model fixes a lattice `M` (coordinates in `Z^r`), total positivity, a trace
//! functional used for truncation, and per prime over `p`: the scaling element
//! `pi` as an integer matrix and the residue reduction `tau_{P,0}` as the images
//! of the basis vectors in the coefficient field. `tau_{P,i}` is `tau_{P,0}`
//! followed by `i` Frobenius steps.
//!
//! Two kinds are supported. A quadratic model is `O_F` for a real quadratic field
//! with basis `(1, w)`, where `w = sqrt(D)` or `(1 + sqrt(D))/2`. A synthetic
//! model is `Z^r` with positivity given by an invertible integer functional
//! matrix `L` (`m > 0` iff `L m > 0`), used for shapes no quadratic field has.

use std::fmt;
use std::sync::Arc;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gfq::{FieldConfig, GfContext, GfElement};
use crate::intmat::IntMatrix;
use crate::shape::{FieldShape, PrimeShape, ResidueIndex};
use crate::weights::{Rational, WeightVector};

/// Integer coordinates of a lattice element.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Exponent(pub Vec<i64>);

impl Exponent {
    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn add(&self, other: &Exponent) -> Exponent {
        Exponent(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadraticPrimeConfig {
    pub pi: [i64; 2],
    pub e: u32,
    pub f: u32,
    /// Coefficient-field image of `w`, low-to-high.
    pub residue_gen_image: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadraticConfig {
    #[serde(rename = "D")]
    pub d: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<u64>,
    pub primes: IndexMap<String, QuadraticPrimeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldConfig>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticPrimeConfig {
    /// Matrix of multiplication by `pi`, acting on column vectors.
    pub pi: Vec<Vec<i64>>,
    pub e: u32,
    pub f: u32,
    /// Coefficient-field image of each basis vector under `tau_{P,0}`.
    pub tau0: Vec<Vec<i64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub p: u64,
    /// Rows are the positivity functionals.
    pub positivity: Vec<Vec<i64>>,
    pub primes: IndexMap<String, SyntheticPrimeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldConfig>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelConfig {
    Quadratic(QuadraticConfig),
    Synthetic(SyntheticConfig),
}

/// Which generator the quadratic basis uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Omega {
    /// `w = sqrt(D)`, `w^2 = D`.
    Sqrt,
    /// `w = (1 + sqrt(D))/2`, `w^2 = w + (D - 1)/4`.
    Half,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelKind {
    Quadratic { d: i64, omega: Omega },
    Synthetic { functionals: IntMatrix },
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct PrimeData {
    pi: IntMatrix,
    pi_adj: IntMatrix,
    pi_det: i128,
    tau0: Vec<GfElement>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExponentModel {
    config: ModelConfig,
    shape: Arc<FieldShape>,
    field: Arc<GfContext>,
    kind: ModelKind,
    primes: Vec<PrimeData>,
    nu: IntMatrix,
    nu_inv: IntMatrix,
    /// `cross[q][p] = tau_{q,0}(pi_p)`, the scalar by which `pi_p` acts on the
    /// residue field at `q`.
    cross: Vec<Vec<GfElement>>,
}

fn inconsistent(msg: impl Into<String>) -> Error {
    Error::ModelInconsistent(msg.into())
}

fn is_squarefree(n: i64) -> bool {
    let mut d = 2i64;
    while d * d <= n {
        if n % (d * d) == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn inv_mod(a: u64, p: u64) -> u64 {
    let (mut base, mut exp, mut acc) = (a as u128 % p as u128, p - 2, 1u128);
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % p as u128;
        }
        base = base * base % p as u128;
        exp >>= 1;
    }
    acc as u64
}

/// Rank over `F_p` of coefficient vectors.
fn fp_rank(vectors: &[Vec<u64>], p: u64) -> usize {
    let mut rows: Vec<Vec<u64>> = vectors.to_vec();
    let cols = rows.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..rows.len()).find(|&r| rows[r][c] != 0) else {
            continue;
        };
        rows.swap(rank, piv);
        let inv = inv_mod(rows[rank][c], p);
        for x in rows[rank].iter_mut() {
            *x = *x * inv % p;
        }
        for r in 0..rows.len() {
            if r != rank && rows[r][c] != 0 {
                let fac = rows[r][c];
                for x in 0..cols {
                    rows[r][x] = (rows[r][x] + p * p - fac * rows[rank][x] % p) % p;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Sign-corrected `L A L^{-1}` scaled by `|det L|`; `A` preserves positivity iff
/// this is entrywise nonnegative with no zero row.
fn preserves_positivity(l: &IntMatrix, a: &IntMatrix) -> Result<bool> {
    let det = l.det()?;
    let conj = l.mul(a)?.mul(&l.adjugate()?)?.scale(det.signum())?;
    for i in 0..conj.rows() {
        let row = conj.row(i);
        if row.iter().any(|&v| v < 0) || row.iter().all(|&v| v == 0) {
            return Ok(false);
        }
    }
    Ok(true)
}

impl ExponentModel {
    pub fn from_config(cfg: &ModelConfig) -> Result<Arc<Self>> {
        match cfg {
            ModelConfig::Quadratic(q) => Self::from_quadratic(q, cfg),
            ModelConfig::Synthetic(s) => Self::from_synthetic(s, cfg),
        }
    }

    pub fn from_json(text: &str) -> Result<Arc<Self>> {
        let cfg: ModelConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_config(&cfg)
    }

    fn field_for(p: u64, field: &Option<FieldConfig>) -> Result<Arc<GfContext>> {
        match field {
            Some(fc) => {
                if fc.p != p {
                    return Err(inconsistent(format!(
                        "coefficient field has characteristic {}, model has p = {p}",
                        fc.p
                    )));
                }
                GfContext::from_config(fc)
            }
            None => GfContext::prime_field(p),
        }
    }

    fn check_field_degree(field: &GfContext, shape: &FieldShape) -> Result<()> {
        for pr in shape.primes() {
            if !field.degree().is_multiple_of(pr.f as usize) {
                return Err(inconsistent(format!(
                    "coefficient field degree {} is not a multiple of f = {} at {}",
                    field.degree(),
                    pr.f,
                    pr.id
                )));
            }
        }
        Ok(())
    }

    fn from_quadratic(q: &QuadraticConfig, cfg: &ModelConfig) -> Result<Arc<Self>> {
        if q.d <= 1 || !is_squarefree(q.d) {
            return Err(inconsistent(format!("D = {} is not a squarefree integer > 1", q.d)));
        }
        let omega = if q.d % 4 == 1 { Omega::Half } else { Omega::Sqrt };
        let p = q
            .field
            .as_ref()
            .map(|f| f.p)
            .or(q.p)
            .ok_or_else(|| Error::Config("quadratic model needs `p` or `field`".into()))?;
        let shape = Arc::new(FieldShape::new(
            p,
            q.primes
                .iter()
                .map(|(id, pc)| PrimeShape {
                    id: id.clone(),
                    e: pc.e,
                    f: pc.f,
                })
                .collect(),
        )?);
        if shape.degree() != 2 {
            return Err(inconsistent(format!(
                "sum of e f over the primes is {}, a quadratic field needs 2",
                shape.degree()
            )));
        }
        let field = Self::field_for(p, &q.field)?;
        Self::check_field_degree(&field, &shape)?;
        let kind = ModelKind::Quadratic { d: q.d, omega };
        let mut primes = Vec::new();
        for (id, pc) in &q.primes {
            let pi = mul_matrix(q.d, omega, pc.pi);
            if !quad_totally_positive(q.d, omega, pc.pi) {
                return Err(inconsistent(format!("pi at {id} is not totally positive")));
            }
            let norm = quad_norm(q.d, omega, pc.pi);
            if norm.unsigned_abs() != p.pow(pc.f) {
                return Err(inconsistent(format!(
                    "pi at {id} has norm {norm}, expected p^f = {}",
                    p.pow(pc.f)
                )));
            }
            let w = GfElement::from_coeffs(&field, &pc.residue_gen_image)?;
            // minimal relation of w must hold in the residue field
            let rel = match omega {
                Omega::Sqrt => &w * &w - GfElement::from_int(&field, q.d),
                Omega::Half => &w * &w - &w - GfElement::from_int(&field, (q.d - 1) / 4),
            };
            if !rel.is_zero() {
                return Err(inconsistent(format!(
                    "residue image {w} at {id} does not satisfy the minimal relation of w"
                )));
            }
            let tau0 = vec![GfElement::one(&field), w];
            primes.push(Self::prime_data(id, pi, tau0, pc.f, p, &field)?);
        }
        Self::finish(cfg.clone(), shape, field, kind, primes)
    }

    fn from_synthetic(s: &SyntheticConfig, cfg: &ModelConfig) -> Result<Arc<Self>> {
        let shape = Arc::new(FieldShape::new(
            s.p,
            s.primes
                .iter()
                .map(|(id, pc)| PrimeShape {
                    id: id.clone(),
                    e: pc.e,
                    f: pc.f,
                })
                .collect(),
        )?);
        let r = shape.degree();
        if s.positivity.len() != r || s.positivity.iter().any(|row| row.len() != r) {
            return Err(inconsistent(format!("positivity must be a {r} x {r} matrix")));
        }
        let functionals = IntMatrix::from_rows(&s.positivity);
        if functionals.det()? == 0 {
            return Err(inconsistent("positivity functionals are linearly dependent"));
        }
        let field = Self::field_for(s.p, &s.field)?;
        Self::check_field_degree(&field, &shape)?;
        let mut primes = Vec::new();
        for (id, pc) in &s.primes {
            if pc.pi.len() != r || pc.pi.iter().any(|row| row.len() != r) {
                return Err(inconsistent(format!("pi at {id} must be a {r} x {r} matrix")));
            }
            if pc.tau0.len() != r {
                return Err(inconsistent(format!("tau0 at {id} needs {r} images")));
            }
            let pi = IntMatrix::from_rows(&pc.pi);
            if !preserves_positivity(&functionals, &pi)? {
                return Err(inconsistent(format!("pi at {id} does not preserve positivity")));
            }
            let tau0 = pc
                .tau0
                .iter()
                .map(|c| GfElement::from_coeffs(&field, c))
                .collect::<Result<Vec<_>>>()?;
            primes.push(Self::prime_data(id, pi, tau0, pc.f, s.p, &field)?);
        }
        for a in 0..primes.len() {
            for b in a + 1..primes.len() {
                if primes[a].pi.mul(&primes[b].pi)? != primes[b].pi.mul(&primes[a].pi)? {
                    return Err(inconsistent("scaling matrices do not commute"));
                }
            }
        }
        let kind = ModelKind::Synthetic { functionals };
        Self::finish(cfg.clone(), shape, field, kind, primes)
    }

    fn prime_data(
        id: &str,
        pi: IntMatrix,
        tau0: Vec<GfElement>,
        f: u32,
        p: u64,
        field: &Arc<GfContext>,
    ) -> Result<PrimeData> {
        let pi_det = pi.det()?;
        if pi_det.unsigned_abs() != (p as u128).pow(f) {
            return Err(inconsistent(format!(
                "pi at {id} has determinant {pi_det}, expected +-p^f"
            )));
        }
        for t in &tau0 {
            if !t.in_subfield(f) {
                return Err(inconsistent(format!(
                    "residue image {t} at {id} is not in the subfield of degree {f}"
                )));
            }
        }
        let coeffs: Vec<Vec<u64>> = tau0.iter().map(|t| t.coeffs().to_vec()).collect();
        if fp_rank(&coeffs, p) != f as usize {
            return Err(inconsistent(format!(
                "residue map at {id} is not onto the residue field of degree {f}"
            )));
        }
        let data = PrimeData {
            pi_adj: pi.adjugate()?,
            pi,
            pi_det,
            tau0,
        };
        for c in 0..data.pi.cols() {
            let col: Vec<i64> = (0..data.pi.rows()).map(|r| data.pi[(r, c)] as i64).collect();
            if !reduce(&data.tau0, field, &col).is_zero() {
                return Err(inconsistent(format!("pi at {id} does not reduce to 0")));
            }
        }
        Ok(data)
    }

    fn finish(
        config: ModelConfig,
        shape: Arc<FieldShape>,
        field: Arc<GfContext>,
        kind: ModelKind,
        primes: Vec<PrimeData>,
    ) -> Result<Arc<Self>> {
        let r = primes[0].pi.rows();
        let p = shape.p() as i128;
        let mut prod = IntMatrix::identity(r);
        for (data, pr) in primes.iter().zip(shape.primes()) {
            prod = prod.mul(&data.pi.pow(pr.e)?)?;
        }
        let nu = prod
            .div_exact(p)
            .ok_or_else(|| inconsistent("product of pi^e is not divisible by p"))?;
        let det = nu.det()?;
        if det.abs() != 1 {
            return Err(inconsistent(format!(
                "product of pi^e over p has determinant {det}, not a unit"
            )));
        }
        let nu_inv = nu.adjugate()?.scale(det)?;
        let mut model = ExponentModel {
            config,
            shape,
            field,
            kind,
            primes,
            nu,
            nu_inv,
            cross: Vec::new(),
        };
        match &model.kind {
            ModelKind::Quadratic { d, omega } => {
                let col = [model.nu[(0, 0)] as i64, model.nu[(1, 0)] as i64];
                if !quad_totally_positive(*d, *omega, col) {
                    return Err(inconsistent("nu is not totally positive"));
                }
            }
            ModelKind::Synthetic { functionals } => {
                if !preserves_positivity(functionals, &model.nu)?
                    || !preserves_positivity(functionals, &model.nu_inv)?
                {
                    return Err(inconsistent("nu is not a totally positive unit"));
                }
            }
        }
        model.cross = model.compute_cross()?;
        Ok(Arc::new(model))
    }

    /// Finds `c` with `tau_{q,0}(pi_p m) = c tau_{q,0}(m)` for all `m` and checks it.
    fn compute_cross(&self) -> Result<Vec<Vec<GfElement>>> {
        let r = self.rank();
        let n = self.primes.len();
        let mut out = Vec::with_capacity(n);
        for q in 0..n {
            let mut row = Vec::with_capacity(n);
            let basis = (0..r)
                .find(|&c| !self.primes[q].tau0[c].is_zero())
                .expect("residue map is onto");
            for pp in 0..n {
                let mut e = vec![0i64; r];
                e[basis] = 1;
                let image = self.tau0_reduce(q, &self.scale(pp, &e)?);
                let c = image.checked_div(&self.primes[q].tau0[basis])?;
                for b in 0..r {
                    let mut e = vec![0i64; r];
                    e[b] = 1;
                    let lhs = self.tau0_reduce(q, &self.scale(pp, &e)?);
                    if lhs != &c * &self.primes[q].tau0[b] {
                        return Err(inconsistent(format!(
                            "pi at {} does not act on the residue field at {} by a scalar",
                            self.shape.prime(pp).id,
                            self.shape.prime(q).id
                        )));
                    }
                }
                row.push(c);
            }
            out.push(row);
        }
        Ok(out)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn shape(&self) -> &Arc<FieldShape> {
        &self.shape
    }

    pub fn field(&self) -> &Arc<GfContext> {
        &self.field
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn rank(&self) -> usize {
        self.primes[0].pi.rows()
    }

    pub fn is_quadratic(&self) -> bool {
        matches!(self.kind, ModelKind::Quadratic { .. })
    }

    pub fn check_rank(&self, m: &[i64]) -> Result<()> {
        if m.len() != self.rank() {
            return Err(Error::ExponentRank {
                expected: self.rank(),
                found: m.len(),
            });
        }
        Ok(())
    }

    pub fn is_totally_positive(&self, m: &[i64]) -> bool {
        match &self.kind {
            ModelKind::Quadratic { d, omega } => quad_totally_positive(*d, *omega, [m[0], m[1]]),
            ModelKind::Synthetic { functionals } => (0..functionals.rows()).all(|i| {
                functionals
                    .row(i)
                    .iter()
                    .zip(m)
                    .map(|(&a, &x)| a * x as i128)
                    .sum::<i128>()
                    > 0
            }),
        }
    }

    /// The truncation functional: the field trace for quadratic models, the sum
    /// of the positivity functionals for synthetic ones. Positive on totally
    /// positive elements and additive.
    pub fn trace(&self, m: &[i64]) -> i64 {
        match &self.kind {
            ModelKind::Quadratic { omega, .. } => match omega {
                Omega::Sqrt => 2 * m[0],
                Omega::Half => 2 * m[0] + m[1],
            },
            ModelKind::Synthetic { functionals } => (0..functionals.rows())
                .map(|i| {
                    functionals
                        .row(i)
                        .iter()
                        .zip(m)
                        .map(|(&a, &x)| a as i64 * x)
                        .sum::<i64>()
                })
                .sum(),
        }
    }

    /// `pi_P m`.
    pub fn scale(&self, prime: usize, m: &[i64]) -> Result<Vec<i64>> {
        self.primes[prime].pi.apply(m)
    }

    /// `pi_P^{-1} m` when it lies in the lattice.
    pub fn unscale(&self, prime: usize, m: &[i64]) -> Result<Option<Vec<i64>>> {
        let data = &self.primes[prime];
        let v = data.pi_adj.apply(m)?;
        if v.iter().any(|&x| x as i128 % data.pi_det != 0) {
            return Ok(None);
        }
        Ok(Some(v.into_iter().map(|x| (x as i128 / data.pi_det) as i64).collect()))
    }

    /// Whether `m` lies in `pi_P^n M`.
    pub fn in_scaled(&self, prime: usize, n: u32, m: &[i64]) -> Result<bool> {
        let pn = self.primes[prime].pi.pow(n)?;
        let det = pn.det()?;
        let v = pn.adjugate()?;
        for i in 0..v.rows() {
            let mut acc = 0i128;
            for (j, &x) in m.iter().enumerate() {
                acc += v[(i, j)] * x as i128;
            }
            if acc % det != 0 {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn tau0_reduce(&self, prime: usize, m: &[i64]) -> GfElement {
        reduce(&self.primes[prime].tau0, &self.field, m)
    }

    pub fn tau_reduce(&self, tau: ResidueIndex, m: &[i64]) -> GfElement {
        self.tau0_reduce(tau.prime, m).frobenius(tau.i)
    }

    /// `tau(pi_P)`: zero when `tau` lies over `P`, otherwise the nonzero scalar
    /// relating the reductions of `pi_P m` and `m`.
    pub fn cross_scalar(&self, tau: ResidueIndex, prime: usize) -> GfElement {
        self.cross[tau.prime][prime].frobenius(tau.i)
    }

    /// `nu` with `prod_P pi_P^{e_P} = p nu`, as a matrix.
    pub fn unit_nu_matrix(&self) -> &IntMatrix {
        &self.nu
    }

    /// `nu` as an element; quadratic models only.
    pub fn unit_nu(&self) -> Result<Exponent> {
        match self.kind {
            ModelKind::Quadratic { .. } => Ok(Exponent(vec![
                self.nu[(0, 0)] as i64,
                self.nu[(1, 0)] as i64,
            ])),
            ModelKind::Synthetic { .. } => Err(Error::Unsupported(
                "nu is only an element for quadratic models".into(),
            )),
        }
    }

    pub fn apply_nu(&self, m: &[i64]) -> Result<Vec<i64>> {
        self.nu.apply(m)
    }

    pub fn apply_nu_inv(&self, m: &[i64]) -> Result<Vec<i64>> {
        self.nu_inv.apply(m)
    }

    /// Product in `O_F`; quadratic models only.
    pub fn mul_elements(&self, a: &[i64], b: &[i64]) -> Result<Vec<i64>> {
        match self.kind {
            ModelKind::Quadratic { d, omega } => {
                mul_matrix(d, omega, [a[0], a[1]]).apply(b)
            }
            ModelKind::Synthetic { .. } => Err(Error::Unsupported(
                "synthetic lattices have no multiplication".into(),
            )),
        }
    }

    pub fn norm(&self, a: &[i64]) -> Result<i64> {
        match self.kind {
            ModelKind::Quadratic { d, omega } => Ok(quad_norm(d, omega, [a[0], a[1]])),
            ModelKind::Synthetic { .. } => Err(Error::Unsupported("norm".into())),
        }
    }

    /// Checks that `u` is a totally positive unit and returns `u^{-1}`.
    pub fn unit_inverse(&self, u: &[i64]) -> Result<Vec<i64>> {
        let ModelKind::Quadratic { d, omega } = self.kind else {
            return Err(Error::Unsupported(
                "unit invariance needs a quadratic model".into(),
            ));
        };
        if u.len() != 2
            || !quad_totally_positive(d, omega, [u[0], u[1]])
            || quad_norm(d, omega, [u[0], u[1]]) != 1
        {
            return Err(Error::NotAUnit(format!("{u:?}")));
        }
        Ok(match omega {
            Omega::Sqrt => vec![u[0], -u[1]],
            Omega::Half => vec![u[0] + u[1], -u[1]],
        })
    }

    /// `chi_l(u) = prod_t tau_t(u)^{l_t}` over all indices `t = (P, i, j)`.
    pub fn chi(&self, l: &WeightVector, u: &[i64]) -> Result<GfElement> {
        let mut acc = GfElement::one(&self.field);
        for t in self.shape.enumerate_sigma() {
            let red = self.tau_reduce(self.shape.residue_of(t), u);
            acc = &acc * &red.powi(l.get(t))?;
        }
        Ok(acc)
    }

    /// All totally positive `m` with trace at most `bound`, in sorted order.
    pub fn window(&self, bound: Rational) -> Vec<Exponent> {
        let t = bound.floor().to_integer();
        let mut out = Vec::new();
        if t <= 0 {
            return out;
        }
        match &self.kind {
            ModelKind::Quadratic { d, omega } => match omega {
                Omega::Sqrt => {
                    for x in 1..=t / 2 {
                        for y in -x..=x {
                            if x * x > d * y * y {
                                out.push(Exponent(vec![x, y]));
                            }
                        }
                    }
                }
                Omega::Half => {
                    // s = 2x + y is the trace
                    for s in 1..=t {
                        for y in -s..=s {
                            if (s - y) % 2 == 0 && s * s > d * y * y {
                                out.push(Exponent(vec![(s - y) / 2, y]));
                            }
                        }
                    }
                }
            },
            ModelKind::Synthetic { functionals } => {
                let r = functionals.rows();
                let mut v = vec![1i64; r];
                let budget = t - r as i64;
                let det = functionals.det().expect("checked at load") as i64;
                let adj = functionals.adjugate().expect("checked at load");
                if budget >= 0 {
                    compositions(&mut v, 0, budget, &mut |v| {
                        let w = adj.apply(v).expect("small entries");
                        if w.iter().all(|x| x % det == 0) {
                            out.push(Exponent(w.iter().map(|x| x / det).collect()));
                        }
                    });
                }
            }
        }
        out.sort();
        out
    }
}

fn compositions(v: &mut Vec<i64>, pos: usize, budget: i64, visit: &mut impl FnMut(&[i64])) {
    if pos == v.len() {
        visit(v);
        return;
    }
    for extra in 0..=budget {
        v[pos] = 1 + extra;
        compositions(v, pos + 1, budget - extra, visit);
    }
    v[pos] = 1;
}

fn reduce(tau0: &[GfElement], field: &Arc<GfContext>, m: &[i64]) -> GfElement {
    let mut acc = GfElement::zero(field);
    for (img, &c) in tau0.iter().zip(m) {
        if c != 0 {
            acc += &(&GfElement::from_int(field, c) * img);
        }
    }
    acc
}

/// Matrix of multiplication by `a + b w` on coordinates `(x, y)`.
fn mul_matrix(d: i64, omega: Omega, [a, b]: [i64; 2]) -> IntMatrix {
    match omega {
        Omega::Sqrt => IntMatrix::from_rows(&[[a, b * d], [b, a]]),
        Omega::Half => IntMatrix::from_rows(&[[a, b * ((d - 1) / 4)], [b, a + b]]),
    }
}

fn quad_norm(d: i64, omega: Omega, [x, y]: [i64; 2]) -> i64 {
    match omega {
        Omega::Sqrt => x * x - d * y * y,
        Omega::Half => x * x + x * y - ((d - 1) / 4) * y * y,
    }
}

/// Both real embeddings positive, decided with integer comparisons.
fn quad_totally_positive(d: i64, omega: Omega, [x, y]: [i64; 2]) -> bool {
    // write the element as (u + v sqrt(D)) / den with den in {1, 2}
    let (u, v) = match omega {
        Omega::Sqrt => (x as i128, y as i128),
        Omega::Half => (2 * x as i128 + y as i128, y as i128),
    };
    u > 0 && u * u > d as i128 * v * v
}

/// Named models used by tests, benches and the command line.
pub mod presets {
    use super::*;

    pub const NAMES: &[&str] = &[
        "d2-inert3",
        "d2-ram2",
        "d5-ram5",
        "d2-split7",
        "synthetic-two-prime",
        "synthetic-e2f2",
    ];

    /// id, pi, e, f, image of the residue generator
    type QuadPrime<'a> = (&'a str, [i64; 2], u32, u32, &'a [i64]);

    fn quad(d: i64, field: FieldConfig, primes: &[QuadPrime]) -> ModelConfig {
        ModelConfig::Quadratic(QuadraticConfig {
            d,
            p: None,
            primes: primes
                .iter()
                .map(|&(id, pi, e, f, img)| {
                    (
                        id.to_string(),
                        QuadraticPrimeConfig {
                            pi,
                            e,
                            f,
                            residue_gen_image: img.to_vec(),
                        },
                    )
                })
                .collect(),
            field: Some(field),
        })
    }

    fn fc(p: u64, modulus: &[i64]) -> FieldConfig {
        FieldConfig {
            p,
            degree: modulus.len() - 1,
            modulus: modulus.to_vec(),
        }
    }

    pub fn config(name: &str) -> Result<ModelConfig> {
        Ok(match name {
            // 3 is inert in Q(sqrt 2); F_9 = F_3[g]/(g^2 + 1) and sqrt 2 -> g
            "d2-inert3" => quad(2, fc(3, &[1, 0, 1]), &[("P", [3, 0], 1, 2, &[0, 1])]),
            // (2) = (2 + sqrt 2)^2 up to the unit 3 + 2 sqrt 2
            "d2-ram2" => quad(2, fc(2, &[1, 1, 1]), &[("P", [2, 1], 2, 1, &[0])]),
            // (5) = ((5 + sqrt 5)/2)^2 up to w^2; w -> 3 = 1/2 mod 5
            "d5-ram5" => quad(5, fc(5, &[0, 1]), &[("P", [2, 1], 2, 1, &[3])]),
            // 7 = (3 + sqrt 2)(3 - sqrt 2); sqrt 2 -> 4 resp. 3
            "d2-split7" => quad(
                2,
                fc(7, &[0, 1]),
                &[("P1", [3, 1], 1, 1, &[4]), ("P2", [3, -1], 1, 1, &[3])],
            ),
            "synthetic-two-prime" => {
                let mut primes = IndexMap::new();
                primes.insert(
                    "P1".to_string(),
                    SyntheticPrimeConfig {
                        pi: vec![vec![5, 0], vec![0, 1]],
                        e: 1,
                        f: 1,
                        tau0: vec![vec![1], vec![0]],
                    },
                );
                primes.insert(
                    "P2".to_string(),
                    SyntheticPrimeConfig {
                        pi: vec![vec![1, 0], vec![0, 5]],
                        e: 1,
                        f: 1,
                        tau0: vec![vec![0], vec![1]],
                    },
                );
                ModelConfig::Synthetic(SyntheticConfig {
                    p: 5,
                    positivity: vec![vec![1, 0], vec![0, 1]],
                    primes,
                    field: Some(fc(5, &[0, 1])),
                })
            }
            // Z^4 = Z^2 + Z^2 with pi(a, b) = (3b, a), so pi^2 = 3
            "synthetic-e2f2" => {
                let mut primes = IndexMap::new();
                primes.insert(
                    "P".to_string(),
                    SyntheticPrimeConfig {
                        pi: vec![
                            vec![0, 0, 3, 0],
                            vec![0, 0, 0, 3],
                            vec![1, 0, 0, 0],
                            vec![0, 1, 0, 0],
                        ],
                        e: 2,
                        f: 2,
                        tau0: vec![vec![1, 0], vec![0, 1], vec![0, 0], vec![0, 0]],
                    },
                );
                let id: Vec<Vec<i64>> = (0..4)
                    .map(|i| (0..4).map(|j| (i == j) as i64).collect())
                    .collect();
                ModelConfig::Synthetic(SyntheticConfig {
                    p: 3,
                    positivity: id,
                    primes,
                    field: Some(fc(3, &[1, 0, 1])),
                })
            }
            other => return Err(Error::Config(format!("unknown model preset `{other}`"))),
        })
    }

    pub fn load(name: &str) -> Result<Arc<ExponentModel>> {
        ExponentModel::from_config(&config(name)?)
    }

    /// A totally positive fundamental unit, for the quadratic presets.
    pub fn fundamental_unit(name: &str) -> Option<Vec<i64>> {
        match name {
            "d2-inert3" | "d2-ram2" | "d2-split7" => Some(vec![3, 2]),
            "d5-ram5" => Some(vec![1, 1]),
            _ => None,
        }
    }
}
