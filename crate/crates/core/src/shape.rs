//! The embedding index set: primes over p, indices `(prime, i, j)`, the shift
//! permutation and the multipliers `n`.
//!
//! Shift convention: `shift` increments `j` and rolls over into the next Frobenius
//! index, `(i, j) -> (i, j+1)` and `(i, e) -> (i+1, 1)`. Its inverse decrements.
//! This is the direction under which the Hasse weight `n e_{shift^-1 t} - e_t`
//! has trivial character, and under which the theta weight-shift table comes out
//! right.

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gfq::is_prime;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrimeShape {
    pub id: String,
    pub e: u32,
    pub f: u32,
}

/// JSON form: `{"p": 5, "primes": [{"id": "P", "e": 2, "f": 1}]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShapeConfig {
    pub p: u64,
    pub primes: Vec<PrimeShape>,
}

/// An embedding `(prime, i, j)` with `i` in `Z/f` and `j` in `1..=e`.
/// `prime` is the position of the prime in its [`FieldShape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ThetaIndex {
    pub prime: usize,
    pub i: u32,
    pub j: u32,
}

/// A residue embedding `(prime, i)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ResidueIndex {
    pub prime: usize,
    pub i: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FieldShape {
    p: u64,
    primes: Vec<PrimeShape>,
    offsets: Vec<usize>,
}

impl FieldShape {
    pub fn new(p: u64, primes: Vec<PrimeShape>) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::InvalidShape(format!("{p} is not prime")));
        }
        if primes.is_empty() {
            return Err(Error::InvalidShape("no primes over p".into()));
        }
        let mut offsets = Vec::with_capacity(primes.len() + 1);
        let mut total = 0usize;
        for (idx, pr) in primes.iter().enumerate() {
            if pr.e == 0 || pr.f == 0 {
                return Err(Error::InvalidShape(format!(
                    "prime {} needs e, f >= 1",
                    pr.id
                )));
            }
            if primes[..idx].iter().any(|q| q.id == pr.id) {
                return Err(Error::InvalidShape(format!("duplicate prime id {}", pr.id)));
            }
            offsets.push(total);
            total += (pr.e * pr.f) as usize;
        }
        offsets.push(total);
        Ok(FieldShape { p, primes, offsets })
    }

    pub fn from_config(cfg: &ShapeConfig) -> Result<Self> {
        Self::new(cfg.p, cfg.primes.clone())
    }

    pub fn to_config(&self) -> ShapeConfig {
        ShapeConfig {
            p: self.p,
            primes: self.primes.clone(),
        }
    }

    /// Single-prime shape with id `P`.
    pub fn single(p: u64, e: u32, f: u32) -> Result<Self> {
        Self::new(
            p,
            vec![PrimeShape {
                id: "P".into(),
                e,
                f,
            }],
        )
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn primes(&self) -> &[PrimeShape] {
        &self.primes
    }

    pub fn prime(&self, idx: usize) -> &PrimeShape {
        &self.primes[idx]
    }

    /// Total degree `sum e f`.
    pub fn degree(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn prime_position(&self, id: &str) -> Result<usize> {
        self.primes
            .iter()
            .position(|pr| pr.id == id)
            .ok_or_else(|| Error::UnknownIndex(id.to_string()))
    }

    /// Positions of the block belonging to one prime.
    pub fn block(&self, prime: usize) -> Range<usize> {
        self.offsets[prime]..self.offsets[prime + 1]
    }

    /// All indices in canonical order: prime order, then `i`, then `j`.
    pub fn enumerate_sigma(&self) -> Vec<ThetaIndex> {
        let mut out = Vec::with_capacity(self.degree());
        for (prime, pr) in self.primes.iter().enumerate() {
            for i in 0..pr.f {
                for j in 1..=pr.e {
                    out.push(ThetaIndex { prime, i, j });
                }
            }
        }
        out
    }

    pub fn residue_indices(&self) -> Vec<ResidueIndex> {
        self.primes
            .iter()
            .enumerate()
            .flat_map(|(prime, pr)| (0..pr.f).map(move |i| ResidueIndex { prime, i }))
            .collect()
    }

    pub fn residues_over(&self, prime: usize) -> Vec<ResidueIndex> {
        (0..self.primes[prime].f)
            .map(|i| ResidueIndex { prime, i })
            .collect()
    }

    pub fn thetas_over(&self, prime: usize) -> Vec<ThetaIndex> {
        self.block(prime).map(|pos| self.theta_at(pos)).collect()
    }

    pub fn position(&self, t: ThetaIndex) -> usize {
        let pr = &self.primes[t.prime];
        debug_assert!(t.i < pr.f && t.j >= 1 && t.j <= pr.e);
        self.offsets[t.prime] + (t.i * pr.e + (t.j - 1)) as usize
    }

    pub fn theta_at(&self, pos: usize) -> ThetaIndex {
        let prime = self.offsets.partition_point(|&o| o <= pos) - 1;
        let pr = &self.primes[prime];
        let local = (pos - self.offsets[prime]) as u32;
        ThetaIndex {
            prime,
            i: local / pr.e,
            j: local % pr.e + 1,
        }
    }

    pub fn theta(&self, prime: usize, i: i64, j: u32) -> ThetaIndex {
        let pr = &self.primes[prime];
        assert!(j >= 1 && j <= pr.e, "slot {j} out of range for {}", pr.id);
        ThetaIndex {
            prime,
            i: i.rem_euclid(pr.f as i64) as u32,
            j,
        }
    }

    pub fn sigma(&self, t: ThetaIndex) -> ThetaIndex {
        let pr = &self.primes[t.prime];
        if t.j < pr.e {
            ThetaIndex { j: t.j + 1, ..t }
        } else {
            ThetaIndex {
                prime: t.prime,
                i: (t.i + 1) % pr.f,
                j: 1,
            }
        }
    }

    pub fn sigma_inv(&self, t: ThetaIndex) -> ThetaIndex {
        let pr = &self.primes[t.prime];
        if t.j > 1 {
            ThetaIndex { j: t.j - 1, ..t }
        } else {
            ThetaIndex {
                prime: t.prime,
                i: (t.i + pr.f - 1) % pr.f,
                j: pr.e,
            }
        }
    }

    pub fn sigma_pow(&self, t: ThetaIndex, n: i64) -> ThetaIndex {
        let pr = &self.primes[t.prime];
        let len = (pr.e * pr.f) as i64;
        let local = (t.i * pr.e + t.j - 1) as i64;
        let moved = (local + n).rem_euclid(len) as u32;
        ThetaIndex {
            prime: t.prime,
            i: moved / pr.e,
            j: moved % pr.e + 1,
        }
    }

    /// `p` on the first slot of each residue block, `1` elsewhere.
    pub fn multiplier(&self, t: ThetaIndex) -> i64 {
        if t.j == 1 {
            self.p as i64
        } else {
            1
        }
    }

    /// The index `(prime, i, e)` attached to a residue embedding.
    pub fn theta0(&self, tau: ResidueIndex) -> ThetaIndex {
        ThetaIndex {
            prime: tau.prime,
            i: tau.i,
            j: self.primes[tau.prime].e,
        }
    }

    pub fn residue_of(&self, t: ThetaIndex) -> ResidueIndex {
        ResidueIndex {
            prime: t.prime,
            i: t.i,
        }
    }

    /// Parses `P:i` (residue index); `i` is reduced mod f.
    pub fn parse_residue(&self, s: &str) -> Result<ResidueIndex> {
        let (id, i) = s
            .rsplit_once(':')
            .ok_or_else(|| Error::UnknownIndex(s.to_string()))?;
        let prime = self.prime_position(id)?;
        let i: i64 = i.parse().map_err(|_| Error::UnknownIndex(s.to_string()))?;
        Ok(ResidueIndex {
            prime,
            i: i.rem_euclid(self.primes[prime].f as i64) as u32,
        })
    }

    /// Parses `P:i:j`.
    pub fn parse_theta(&self, s: &str) -> Result<ThetaIndex> {
        let bad = || Error::UnknownIndex(s.to_string());
        let mut parts = s.rsplitn(3, ':');
        let j: u32 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let i: i64 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let prime = self.prime_position(parts.next().ok_or_else(bad)?)?;
        if j == 0 || j > self.primes[prime].e {
            return Err(bad());
        }
        Ok(self.theta(prime, i, j))
    }

    pub fn theta_label(&self, t: ThetaIndex) -> String {
        format!("{}:{}:{}", self.primes[t.prime].id, t.i, t.j)
    }

    pub fn residue_label(&self, tau: ResidueIndex) -> String {
        format!("{}:{}", self.primes[tau.prime].id, tau.i)
    }
}

impl fmt::Display for FieldShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p={} [", self.p)?;
        for (n, pr) in self.primes.iter().enumerate() {
            if n > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}(e={},f={})", pr.id, pr.e, pr.f)?;
        }
        write!(f, "]")
    }
}
