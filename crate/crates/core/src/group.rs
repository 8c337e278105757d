//! Bounded breadth-first closure of matrix groups, with canonical
//! shortest-lexicographic generator words and a multiplication table.

use crate::field::Field;
use crate::mat::{FMat4, Mat4, MatError, QuantMap};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GroupError {
    #[error("group enumeration exceeded cap of {0} elements")]
    CapExceeded(usize),
    #[error(transparent)]
    Mat(#[from] MatError),
}

/// Closure of a generating set: elements in BFS order (identity first),
/// canonical words over generator indices, and the right-multiplication
/// table `mul_gen[e][g] = index of elements[e] * generators[g]`.
#[derive(Debug, Clone)]
pub struct GroupData<T> {
    pub elements: Vec<T>,
    pub words: Vec<Vec<usize>>,
    pub mul_gen: Vec<Vec<usize>>,
}

impl<T> GroupData<T> {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Evaluate a generator word starting from the identity.
    pub fn eval_word(&self, word: &[usize]) -> usize {
        let mut e = 0;
        for &g in word {
            e = self.mul_gen[e][g];
        }
        e
    }
}

/// BFS closure over real matrices, deduplicated by quantized key.
pub fn generate_group_real(
    generators: &[Mat4],
    cap: usize,
    tol: f64,
    band: f64,
) -> Result<GroupData<Mat4>, GroupError> {
    let mut index: QuantMap<usize> = QuantMap::new(tol, band);
    let mut elements = vec![Mat4::identity()];
    let mut words: Vec<Vec<usize>> = vec![vec![]];
    let mut mul_gen: Vec<Vec<usize>> = vec![];
    index.insert(Mat4::identity(), 0);
    let mut head = 0;
    while head < elements.len() {
        let mut row = Vec::with_capacity(generators.len());
        for (gi, g) in generators.iter().enumerate() {
            let prod = elements[head].mul(g);
            let id = match index.get(&prod)? {
                Some(&i) => i,
                None => {
                    if elements.len() >= cap {
                        return Err(GroupError::CapExceeded(cap));
                    }
                    let i = elements.len();
                    let mut w = words[head].clone();
                    w.push(gi);
                    elements.push(prod);
                    words.push(w);
                    index.insert(prod, i);
                    i
                }
            };
            row.push(id);
        }
        mul_gen.push(row);
        head += 1;
    }
    Ok(GroupData { elements, words, mul_gen })
}

/// BFS closure over finite-field matrices (exact keys).
pub fn generate_group_field(
    field: Field,
    generators: &[FMat4],
    cap: usize,
) -> Result<GroupData<FMat4>, GroupError> {
    let id = FMat4::identity(field);
    let mut index: HashMap<FMat4, usize> = HashMap::new();
    let mut elements = vec![id];
    let mut words: Vec<Vec<usize>> = vec![vec![]];
    let mut mul_gen: Vec<Vec<usize>> = vec![];
    index.insert(id, 0);
    let mut head = 0;
    while head < elements.len() {
        let mut row = Vec::with_capacity(generators.len());
        for (gi, g) in generators.iter().enumerate() {
            let prod = elements[head].mul(g);
            let idx = match index.get(&prod) {
                Some(&i) => i,
                None => {
                    if elements.len() >= cap {
                        return Err(GroupError::CapExceeded(cap));
                    }
                    let i = elements.len();
                    let mut w = words[head].clone();
                    w.push(gi);
                    elements.push(prod);
                    words.push(w);
                    index.insert(prod, i);
                    i
                }
            };
            row.push(idx);
        }
        mul_gen.push(row);
        head += 1;
    }
    Ok(GroupData { elements, words, mul_gen })
}

impl GroupData<FMat4> {
    pub fn index_of(&self, m: &FMat4) -> Option<usize> {
        self.elements.iter().position(|e| e == m)
    }

    /// Full multiplication table index lookup via element product.
    pub fn mul_elems(&self, a: usize, b: usize) -> usize {
        let prod = self.elements[a].mul(&self.elements[b]);
        self.index_of(&prod).expect("closure is closed")
    }

    pub fn inverse_of(&self, a: usize) -> usize {
        let inv = self.elements[a].inv().expect("group elements are invertible");
        self.index_of(&inv).expect("closure contains inverses")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::MINKOWSKI_FORM;

    #[test]
    fn group_generated_by_involution() {
        let g = generate_group_real(&[MINKOWSKI_FORM], 10, 1e-6, 1e-3).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.words[1], vec![0]);
    }

    #[test]
    fn closure_is_closed_and_words_remultiply() {
        let t = 2.0 * std::f64::consts::PI / 6.0;
        let mut rot = Mat4::identity();
        rot.0[0][0] = t.cos();
        rot.0[0][1] = -t.sin();
        rot.0[1][0] = t.sin();
        rot.0[1][1] = t.cos();
        let mut flip = Mat4::identity();
        flip.0[1][1] = -1.0;
        flip.0[2][2] = -1.0;
        let g = generate_group_real(&[rot, flip], 100, 1e-6, 1e-3).unwrap();
        assert_eq!(g.len(), 12); // dihedral group of the hexagon
        for e in 0..g.len() {
            for gi in 0..2 {
                assert!(g.mul_gen[e][gi] < g.len());
            }
        }
        for (i, w) in g.words.iter().enumerate() {
            let mut acc = Mat4::identity();
            for &gi in w {
                acc = acc.mul(if gi == 0 { &rot } else { &flip });
            }
            assert!(acc.eq_within(&g.elements[i], 1e-9));
        }
    }

    #[test]
    fn cap_exceeded() {
        let t: f64 = 1.0; // irrational multiple of pi: infinite group
        let mut rot = Mat4::identity();
        rot.0[0][0] = t.cos();
        rot.0[0][1] = -t.sin();
        rot.0[1][0] = t.sin();
        rot.0[1][1] = t.cos();
        assert!(matches!(
            generate_group_real(&[rot], 50, 1e-6, 1e-3),
            Err(GroupError::CapExceeded(50))
        ));
    }

    #[test]
    fn field_group_sl2_like() {
        let f = Field::prime(3);
        let mut a = FMat4::minkowski_form(f);
        a.m[3][3] = f.el(-1);
        let g = generate_group_field(f, &[a], 10).unwrap();
        assert_eq!(g.len(), 2);
    }
}
