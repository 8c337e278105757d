//! Finite field arithmetic for F_p and F_{p^2}.
//!
//! Degree-2 extensions of odd primes are represented as F_p[w]/(w^2 - s)
//! with `s` the smallest quadratic non-residue mod p, so that results are
//! reproducible across runs. For p = 2 the polynomial x^2 - s is never
//! separable, so F_4 uses F_2[w]/(w^2 + w + 1) instead.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FieldError {
    #[error("division by zero in F_{0}")]
    DivisionByZero(u64),
    #[error("mixed fields: F_{0} vs F_{1}")]
    FieldMismatch(u64, u64),
    #[error("{0} has no square root in this field")]
    NoSquareRoot(u64),
}

/// Field descriptor: the prime, whether we work in the degree-2 extension,
/// and (for odd p) the non-residue s with w^2 = s.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Field {
    pub p: u64,
    pub ext: bool,
    s: u64,
}

/// Element a + b*w, coordinates always reduced mod p.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Fe {
    pub a: u64,
    pub b: u64,
}

fn mod_inv(a: u64, p: u64) -> Option<u64> {
    // extended Euclid
    let (mut t, mut new_t): (i128, i128) = (0, 1);
    let (mut r, mut new_r): (i128, i128) = (p as i128, (a % p) as i128);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    if r != 1 {
        return None;
    }
    Some(t.rem_euclid(p as i128) as u64)
}

fn smallest_nonresidue(p: u64) -> u64 {
    let residues: std::collections::HashSet<u64> = (1..p).map(|x| x * x % p).collect();
    (2..p).find(|x| !residues.contains(x)).expect("odd prime has a non-residue")
}

impl Field {
    pub fn prime(p: u64) -> Field {
        Field { p, ext: false, s: 0 }
    }

    pub fn quadratic(p: u64) -> Field {
        let s = if p == 2 { 0 } else { smallest_nonresidue(p) };
        Field { p, ext: true, s }
    }

    pub fn of_degree(p: u64, degree: u32) -> Field {
        match degree {
            1 => Field::prime(p),
            2 => Field::quadratic(p),
            _ => panic!("only degrees 1 and 2 are supported"),
        }
    }

    pub fn size(&self) -> u64 {
        if self.ext {
            self.p * self.p
        } else {
            self.p
        }
    }

    pub fn degree(&self) -> u32 {
        if self.ext {
            2
        } else {
            1
        }
    }

    /// The s with w^2 = s (odd p only).
    pub fn nonresidue(&self) -> u64 {
        debug_assert!(self.ext && self.p != 2);
        self.s
    }

    pub fn zero(&self) -> Fe {
        Fe { a: 0, b: 0 }
    }

    pub fn one(&self) -> Fe {
        Fe { a: 1, b: 0 }
    }

    pub fn el(&self, a: i64) -> Fe {
        Fe { a: a.rem_euclid(self.p as i64) as u64, b: 0 }
    }

    pub fn make(&self, a: i64, b: i64) -> Fe {
        let p = self.p as i64;
        Fe { a: a.rem_euclid(p) as u64, b: b.rem_euclid(p) as u64 }
    }

    /// w itself (only meaningful in the extension).
    pub fn omega(&self) -> Fe {
        debug_assert!(self.ext);
        Fe { a: 0, b: 1 }
    }

    pub fn add(&self, x: Fe, y: Fe) -> Fe {
        Fe { a: (x.a + y.a) % self.p, b: (x.b + y.b) % self.p }
    }

    pub fn sub(&self, x: Fe, y: Fe) -> Fe {
        Fe { a: (x.a + self.p - y.a) % self.p, b: (x.b + self.p - y.b) % self.p }
    }

    pub fn neg(&self, x: Fe) -> Fe {
        Fe { a: (self.p - x.a) % self.p, b: (self.p - x.b) % self.p }
    }

    pub fn mul(&self, x: Fe, y: Fe) -> Fe {
        let p = self.p;
        if !self.ext {
            return Fe { a: x.a * y.a % p, b: 0 };
        }
        let (a, b, c, d) = (x.a, x.b, y.a, y.b);
        if p == 2 {
            // w^2 = w + 1
            Fe { a: (a * c + b * d) % 2, b: (a * d + b * c + b * d) % 2 }
        } else {
            Fe { a: (a * c + b * d % p * self.s) % p, b: (a * d + b * c) % p }
        }
    }

    pub fn is_zero(&self, x: Fe) -> bool {
        x.a == 0 && x.b == 0
    }

    pub fn inv(&self, x: Fe) -> Result<Fe, FieldError> {
        if self.is_zero(x) {
            return Err(FieldError::DivisionByZero(self.size()));
        }
        if x.b == 0 {
            return Ok(Fe { a: mod_inv(x.a, self.p).unwrap(), b: 0 });
        }
        if self.p == 2 {
            // tiny field: x^-1 = x^(|F|-2)
            let mut acc = self.one();
            for _ in 0..self.size() - 2 {
                acc = self.mul(acc, x);
            }
            return Ok(acc);
        }
        // (a + bw)^-1 = (a - bw) / (a^2 - s b^2); the norm is nonzero since
        // s is a non-residue.
        let p = self.p;
        let norm = (x.a * x.a % p + p * p - self.s * (x.b * x.b % p) % p) % p;
        let ninv = mod_inv(norm, p).ok_or(FieldError::DivisionByZero(self.size()))?;
        Ok(Fe { a: x.a * ninv % p, b: (p - x.b) % p * ninv % p })
    }

    pub fn div(&self, x: Fe, y: Fe) -> Result<Fe, FieldError> {
        Ok(self.mul(x, self.inv(y)?))
    }

    /// Is x an element of the prime subfield?
    pub fn in_base(&self, x: Fe) -> bool {
        x.b == 0
    }

    /// Deterministic square root in this field, if one exists. Returns the
    /// root whose (a, b) pair is lexicographically smallest.
    pub fn sqrt(&self, x: Fe) -> Option<Fe> {
        // fields here are tiny (p <= a few dozen), brute force is fine
        let p = self.p;
        let mut best: Option<Fe> = None;
        let bs = if self.ext { p } else { 1 };
        for a in 0..p {
            for b in 0..bs {
                let c = Fe { a, b };
                if self.mul(c, c) == x {
                    match best {
                        Some(r) if (r.a, r.b) <= (a, b) => {}
                        _ => best = Some(c),
                    }
                }
            }
        }
        best
    }

    /// Both square roots (deduplicated), deterministic order.
    pub fn sqrts(&self, x: Fe) -> Vec<Fe> {
        match self.sqrt(x) {
            None => vec![],
            Some(r) => {
                let n = self.neg(r);
                if n == r {
                    vec![r]
                } else {
                    vec![r, n]
                }
            }
        }
    }

    /// Roots of x^2 + bx + c (monic quadratic), deterministic order.
    pub fn quadratic_roots(&self, b: Fe, c: Fe) -> Vec<Fe> {
        let p = self.p;
        let mut out = vec![];
        let bs = if self.ext { p } else { 1 };
        for ra in 0..p {
            for rb in 0..bs {
                let r = Fe { a: ra, b: rb };
                let v = self.add(self.add(self.mul(r, r), self.mul(b, r)), c);
                if self.is_zero(v) {
                    out.push(r);
                }
            }
        }
        out
    }
}

/// A field element bundled with its field, for checked scalar arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    pub field: Field,
    pub value: Fe,
}

impl FieldElement {
    pub fn new(field: Field, value: Fe) -> FieldElement {
        FieldElement { field, value }
    }

    fn check(&self, other: &FieldElement) -> Result<(), FieldError> {
        if self.field != other.field {
            return Err(FieldError::FieldMismatch(self.field.size(), other.field.size()));
        }
        Ok(())
    }

    pub fn add(&self, other: &FieldElement) -> Result<FieldElement, FieldError> {
        self.check(other)?;
        Ok(FieldElement::new(self.field, self.field.add(self.value, other.value)))
    }

    pub fn sub(&self, other: &FieldElement) -> Result<FieldElement, FieldError> {
        self.check(other)?;
        Ok(FieldElement::new(self.field, self.field.sub(self.value, other.value)))
    }

    pub fn mul(&self, other: &FieldElement) -> Result<FieldElement, FieldError> {
        self.check(other)?;
        Ok(FieldElement::new(self.field, self.field.mul(self.value, other.value)))
    }

    pub fn inv(&self) -> Result<FieldElement, FieldError> {
        Ok(FieldElement::new(self.field, self.field.inv(self.value)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_in_f7() {
        let f = Field::prime(7);
        assert_eq!(f.inv(f.el(2)).unwrap(), f.el(4));
    }

    #[test]
    fn addition_in_f5() {
        let f = Field::prime(5);
        assert_eq!(f.add(f.el(3), f.el(4)), f.el(2));
    }

    #[test]
    fn square_in_f9() {
        // F_9 with w^2 = 2: (1 + w)^2 = 1 + 2w + 2 = 2w
        let f = Field::quadratic(3);
        assert_eq!(f.nonresidue(), 2);
        let x = f.make(1, 1);
        assert_eq!(f.mul(x, x), f.make(0, 2));
    }

    #[test]
    fn f4_is_a_field() {
        let f = Field::quadratic(2);
        // multiplicative group of F_4 is cyclic of order 3
        let w = f.omega();
        assert_eq!(f.mul(w, f.mul(w, w)), f.one());
        for a in 0..2 {
            for b in 0..2 {
                let x = Fe { a, b };
                if !f.is_zero(x) {
                    assert_eq!(f.mul(x, f.inv(x).unwrap()), f.one());
                }
            }
        }
    }

    #[test]
    fn inv_zero_fails() {
        let f = Field::prime(5);
        assert_eq!(f.inv(f.zero()), Err(FieldError::DivisionByZero(5)));
    }

    #[test]
    fn mismatch_detected() {
        let x = FieldElement::new(Field::prime(5), Fe { a: 1, b: 0 });
        let y = FieldElement::new(Field::prime(7), Fe { a: 1, b: 0 });
        assert!(matches!(x.add(&y), Err(FieldError::FieldMismatch(5, 7))));
    }

    #[test]
    fn quadratics_split_in_extension() {
        // x^2 - 2 has no root mod 3 but two roots in F_9
        assert!(Field::prime(3).quadratic_roots(Fe::default(), Field::prime(3).el(-2)).is_empty());
        let f = Field::quadratic(3);
        assert_eq!(f.quadratic_roots(f.zero(), f.el(-2)).len(), 2);
    }
}
