//! 4x4 matrices over f64 and over finite fields, plus the Minkowski form
//! diag(1,1,1,-1) and quantized-key maps for deduplicating real matrices.

use crate::field::{Fe, Field, FieldError};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MatError {
    #[error("matrix is singular")]
    Singular,
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("ambiguous match: entries agree within the safety band but not within tolerance")]
    PrecisionAmbiguity,
}

/// Real 4x4 matrix, row major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat4(pub [[f64; 4]; 4]);

/// Real 4-vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec4(pub [f64; 4]);

pub const MINKOWSKI_FORM: Mat4 = Mat4([
    [1.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0, -1.0],
]);

impl Vec4 {
    pub fn zero() -> Vec4 {
        Vec4([0.0; 4])
    }

    /// Minkowski inner product x0*y0 + x1*y1 + x2*y2 - x3*y3.
    pub fn mdot(&self, o: &Vec4) -> f64 {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2] - self.0[3] * o.0[3]
    }

    pub fn dot(&self, o: &Vec4) -> f64 {
        (0..4).map(|i| self.0[i] * o.0[i]).sum()
    }

    pub fn scale(&self, s: f64) -> Vec4 {
        Vec4([self.0[0] * s, self.0[1] * s, self.0[2] * s, self.0[3] * s])
    }

    pub fn sub(&self, o: &Vec4) -> Vec4 {
        Vec4([
            self.0[0] - o.0[0],
            self.0[1] - o.0[1],
            self.0[2] - o.0[2],
            self.0[3] - o.0[3],
        ])
    }

    pub fn approx_eq(&self, o: &Vec4, eps: f64) -> bool {
        (0..4).all(|i| (self.0[i] - o.0[i]).abs() <= eps)
    }

    /// Normalize a timelike vector to the upper hyperboloid (<v,v> = -1, x3 > 0).
    pub fn hyperboloid_normalize(&self) -> Vec4 {
        let q = -self.mdot(self);
        assert!(q > 0.0, "vector is not timelike: {:?}", self);
        let v = self.scale(1.0 / q.sqrt());
        if v.0[3] < 0.0 {
            v.scale(-1.0)
        } else {
            v
        }
    }
}

impl Mat4 {
    pub fn identity() -> Mat4 {
        let mut m = [[0.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Mat4(m)
    }

    pub fn mul(&self, o: &Mat4) -> Mat4 {
        let mut r = [[0.0; 4]; 4];
        for i in 0..4 {
            for k in 0..4 {
                let a = self.0[i][k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..4 {
                    r[i][j] += a * o.0[k][j];
                }
            }
        }
        Mat4(r)
    }

    pub fn apply(&self, v: &Vec4) -> Vec4 {
        let mut r = [0.0; 4];
        for (i, ri) in r.iter_mut().enumerate() {
            *ri = (0..4).map(|j| self.0[i][j] * v.0[j]).sum();
        }
        Vec4(r)
    }

    pub fn transpose(&self) -> Mat4 {
        let mut r = [[0.0; 4]; 4];
        for (i, row) in self.0.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                r[j][i] = x;
            }
        }
        Mat4(r)
    }

    pub fn inv(&self) -> Result<Mat4, MatError> {
        // Gauss-Jordan with partial pivoting
        let mut a = self.0;
        let mut b = Mat4::identity().0;
        for col in 0..4 {
            let piv = (col..4)
                .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
                .unwrap();
            if a[piv][col].abs() < 1e-12 {
                return Err(MatError::Singular);
            }
            a.swap(col, piv);
            b.swap(col, piv);
            let d = a[col][col];
            for j in 0..4 {
                a[col][j] /= d;
                b[col][j] /= d;
            }
            for i in 0..4 {
                if i != col {
                    let f = a[i][col];
                    if f != 0.0 {
                        for j in 0..4 {
                            a[i][j] -= f * a[col][j];
                            b[i][j] -= f * b[col][j];
                        }
                    }
                }
            }
        }
        Ok(Mat4(b))
    }

    pub fn det(&self) -> f64 {
        let mut a = self.0;
        let mut det = 1.0;
        for col in 0..4 {
            let piv = (col..4)
                .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
                .unwrap();
            if a[piv][col].abs() < 1e-14 {
                return 0.0;
            }
            if piv != col {
                a.swap(col, piv);
                det = -det;
            }
            det *= a[col][col];
            for i in col + 1..4 {
                let f = a[i][col] / a[col][col];
                for j in col..4 {
                    a[i][j] -= f * a[col][j];
                }
            }
        }
        det
    }

    pub fn eq_within(&self, o: &Mat4, eps: f64) -> bool {
        self.max_diff(o) <= eps
    }

    pub fn max_diff(&self, o: &Mat4) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                m = m.max((self.0[i][j] - o.0[i][j]).abs());
            }
        }
        m
    }

    /// M^-1 = A M^T A within eps (hyperbolic isometry check).
    pub fn is_minkowski_isometry(&self, eps: f64) -> Result<bool, MatError> {
        let inv = self.inv()?;
        let a = &MINKOWSKI_FORM;
        let rhs = a.mul(&self.transpose()).mul(a);
        Ok(inv.eq_within(&rhs, eps))
    }

    /// Rigid motion in homogeneous form: orthogonal linear part, last row (0,0,0,1).
    pub fn is_rigid_motion(&self, eps: f64) -> bool {
        if (self.0[3][0]).abs() > eps
            || (self.0[3][1]).abs() > eps
            || (self.0[3][2]).abs() > eps
            || (self.0[3][3] - 1.0).abs() > eps
        {
            return false;
        }
        for i in 0..3 {
            for j in 0..3 {
                let mut d: f64 = (0..3).map(|k| self.0[k][i] * self.0[k][j]).sum();
                if i == j {
                    d -= 1.0;
                }
                if d.abs() > eps {
                    return false;
                }
            }
        }
        true
    }

    /// Smallest k <= cap with M^k = I within eps.
    pub fn order(&self, cap: usize, eps: f64) -> Option<usize> {
        let id = Mat4::identity();
        let mut acc = *self;
        for k in 1..=cap {
            if acc.eq_within(&id, eps) {
                return Some(k);
            }
            acc = acc.mul(self);
        }
        None
    }
}

/// Quantized key map for real matrices. Keys are coarse (step = band); a
/// lookup probes neighboring keys when an entry sits near a cell boundary,
/// then verifies candidates entrywise. Two distinct stored matrices are
/// assumed to differ by at least `band` in some entry; a candidate that
/// matches within `band` but not within `tol` raises PrecisionAmbiguity.
#[derive(Debug, Clone)]
pub struct QuantMap<V> {
    pub tol: f64,
    pub band: f64,
    buckets: HashMap<[i64; 16], Vec<(Mat4, V)>>,
}

fn quant_key(m: &Mat4, step: f64) -> [i64; 16] {
    let mut k = [0i64; 16];
    for i in 0..4 {
        for j in 0..4 {
            k[i * 4 + j] = (m.0[i][j] / step).round() as i64;
        }
    }
    k
}

impl<V: Clone> QuantMap<V> {
    pub fn new(tol: f64, band: f64) -> QuantMap<V> {
        QuantMap { tol, band, buckets: HashMap::new() }
    }

    fn probe_keys(&self, m: &Mat4) -> Result<Vec<[i64; 16]>, MatError> {
        let step = self.band;
        let base = quant_key(m, step);
        // entries whose rounding could flip under a perturbation of size tol
        let margin = 2.0 * self.tol / step;
        let mut wobble = vec![];
        for i in 0..4 {
            for j in 0..4 {
                let x = m.0[i][j] / step;
                let frac = x - x.round();
                if 0.5 - frac.abs() <= margin {
                    wobble.push((i * 4 + j, if frac > 0.0 { 1i64 } else { -1i64 }));
                }
            }
        }
        if wobble.len() > 12 {
            return Err(MatError::PrecisionAmbiguity);
        }
        let mut keys = vec![base];
        for &(idx, dir) in &wobble {
            let mut extra = vec![];
            for k in &keys {
                let mut k2 = *k;
                k2[idx] += dir;
                extra.push(k2);
            }
            keys.extend(extra);
        }
        Ok(keys)
    }

    pub fn get(&self, m: &Mat4) -> Result<Option<&V>, MatError> {
        let mut hit: Option<&V> = None;
        for key in self.probe_keys(m)? {
            if let Some(bucket) = self.buckets.get(&key) {
                for (stored, v) in bucket {
                    let d = stored.max_diff(m);
                    if d <= self.tol {
                        hit = Some(v);
                    } else if d <= self.band {
                        return Err(MatError::PrecisionAmbiguity);
                    }
                }
            }
        }
        Ok(hit)
    }

    /// Insert without checking for an existing entry (caller does `get` first).
    pub fn insert(&mut self, m: Mat4, v: V) {
        let key = quant_key(&m, self.band);
        // most buckets hold exactly one entry; avoid Vec's default
        // growth policy which would allocate four slots up front
        self.buckets
            .entry(key)
            .or_insert_with(|| Vec::with_capacity(1))
            .push((m, v));
    }

    pub fn len(&self) -> usize {
        self.buckets.values().map(|b| b.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.buckets.is_empty()
    }
}

/// 4x4 matrix over a finite field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FMat4 {
    pub field: Field,
    pub m: [[Fe; 4]; 4],
}

impl FMat4 {
    pub fn identity(field: Field) -> FMat4 {
        let mut m = [[field.zero(); 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = field.one();
        }
        FMat4 { field, m }
    }

    pub fn minkowski_form(field: Field) -> FMat4 {
        let mut a = FMat4::identity(field);
        a.m[3][3] = field.el(-1);
        a
    }

    pub fn mul(&self, o: &FMat4) -> FMat4 {
        debug_assert_eq!(self.field, o.field);
        let f = self.field;
        let mut r = [[f.zero(); 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                let mut acc = f.zero();
                for k in 0..4 {
                    acc = f.add(acc, f.mul(self.m[i][k], o.m[k][j]));
                }
                r[i][j] = acc;
            }
        }
        FMat4 { field: f, m: r }
    }

    pub fn apply(&self, v: &[Fe; 4]) -> [Fe; 4] {
        let f = self.field;
        let mut r = [f.zero(); 4];
        for (i, ri) in r.iter_mut().enumerate() {
            for j in 0..4 {
                *ri = f.add(*ri, f.mul(self.m[i][j], v[j]));
            }
        }
        r
    }

    pub fn transpose(&self) -> FMat4 {
        let mut r = [[self.field.zero(); 4]; 4];
        for (i, row) in self.m.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                r[j][i] = x;
            }
        }
        FMat4 { field: self.field, m: r }
    }

    pub fn inv(&self) -> Result<FMat4, MatError> {
        let f = self.field;
        let mut a = self.m;
        let mut b = FMat4::identity(f).m;
        for col in 0..4 {
            let piv = (col..4).find(|&i| !f.is_zero(a[i][col])).ok_or(MatError::Singular)?;
            a.swap(col, piv);
            b.swap(col, piv);
            let d = f.inv(a[col][col])?;
            for j in 0..4 {
                a[col][j] = f.mul(a[col][j], d);
                b[col][j] = f.mul(b[col][j], d);
            }
            for i in 0..4 {
                if i != col && !f.is_zero(a[i][col]) {
                    let fac = a[i][col];
                    for j in 0..4 {
                        a[i][j] = f.sub(a[i][j], f.mul(fac, a[col][j]));
                        b[i][j] = f.sub(b[i][j], f.mul(fac, b[col][j]));
                    }
                }
            }
        }
        Ok(FMat4 { field: f, m: b })
    }

    /// M^-1 = A M^T A, checked exactly (equivalent to M^T A M = A).
    pub fn is_minkowski_isometry(&self) -> bool {
        let a = FMat4::minkowski_form(self.field);
        self.transpose().mul(&a).mul(self) == a
    }

    /// Row/column 3 zero except entry (3,3) = 1: fixes the cell center.
    pub fn fixes_center(&self) -> bool {
        let f = self.field;
        for i in 0..3 {
            if !f.is_zero(self.m[i][3]) || !f.is_zero(self.m[3][i]) {
                return false;
            }
        }
        self.m[3][3] == f.one()
    }

    /// Are all entries in the prime subfield?
    pub fn in_base_field(&self) -> bool {
        self.m.iter().flatten().all(|&x| self.field.in_base(x))
    }

    /// Reinterpret a base-field-valued matrix in F_p.
    pub fn reduce_to_base(&self) -> FMat4 {
        debug_assert!(self.in_base_field());
        FMat4 { field: Field::prime(self.field.p), m: self.m }
    }

    pub fn order(&self, cap: usize) -> Option<usize> {
        let id = FMat4::identity(self.field);
        let mut acc = *self;
        for k in 1..=cap {
            if acc == id {
                return Some(k);
            }
            acc = acc.mul(self);
        }
        None
    }
}
