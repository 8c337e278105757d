//! Real generator matrices P, R, X for the {p,q,r} symmetry group, built
//! from Coxeter mirror data in the Minkowski hyperboloid model, and the
//! combinatorics of the cell (faces, edges, rotation group).
//!
//! The cell center is kept at (0,0,0,1), so the cell-rotation generators X
//! and R automatically have zero row/column 3 apart from entry (3,3) = 1.

use crate::group::{generate_group_real, GroupData, GroupError};
use crate::mat::{Mat4, Vec4};
use thiserror::Error;

pub const GEOM_EPS: f64 = 1e-7;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("unsupported Schläfli symbol {{{0},{1},{2}}}")]
    UnsupportedSymbol(usize, usize, usize),
    #[error("Gram matrix is degenerate (Euclidean symbol); use the affine construction")]
    DegenerateForm,
    #[error("no product of at most 4 reflections satisfies the generator constraints")]
    SearchFailed,
    #[error(transparent)]
    Group(#[from] GroupError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SchlafliSymbol {
    pub p: usize,
    pub q: usize,
    pub r: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeometryKind {
    Hyperbolic,
    Euclidean,
}

impl SchlafliSymbol {
    pub fn new(p: usize, q: usize, r: usize) -> Result<SchlafliSymbol, GeometryError> {
        let platonic = [(3, 3), (3, 4), (3, 5), (4, 3), (5, 3)];
        if !platonic.contains(&(p, q)) {
            return Err(GeometryError::UnsupportedSymbol(p, q, r));
        }
        let sym = SchlafliSymbol { p, q, r };
        // reject spherical symbols: the Gram form must not be positive definite
        if gram_det(&sym) > 1e-9 {
            return Err(GeometryError::UnsupportedSymbol(p, q, r));
        }
        Ok(sym)
    }

    pub fn kind(&self) -> GeometryKind {
        if gram_det(self).abs() < 1e-9 {
            GeometryKind::Euclidean
        } else {
            GeometryKind::Hyperbolic
        }
    }
}

/// Gram matrix of the four Coxeter mirrors: diagonal 1, consecutive
/// off-diagonals -cos(pi/p), -cos(pi/q), -cos(pi/r).
pub fn gram_matrix(sym: &SchlafliSymbol) -> Mat4 {
    let mut g = Mat4::identity();
    let vals = [
        -(std::f64::consts::PI / sym.p as f64).cos(),
        -(std::f64::consts::PI / sym.q as f64).cos(),
        -(std::f64::consts::PI / sym.r as f64).cos(),
    ];
    for (i, &v) in vals.iter().enumerate() {
        g.0[i][i + 1] = v;
        g.0[i + 1][i] = v;
    }
    g
}

fn gram_det(sym: &SchlafliSymbol) -> f64 {
    gram_matrix(sym).det()
}

/// Four mirror normals in Minkowski 4-space whose pairwise Minkowski inner
/// products reproduce the Gram matrix. The first three mirrors span the
/// spatial coordinates only, so the cell center sits at (0,0,0,1).
#[derive(Debug, Clone)]
pub struct MirrorSet {
    pub normals: [Vec4; 4],
    pub gram: Mat4,
}

pub fn mirrors_from_gram(g: &Mat4) -> Result<MirrorSet, GeometryError> {
    if g.det().abs() < 1e-9 {
        return Err(GeometryError::DegenerateForm);
    }
    let g01 = g.0[0][1];
    let g12 = g.0[1][2];
    let g23 = g.0[2][3];
    let n0 = Vec4([1.0, 0.0, 0.0, 0.0]);
    let b1 = (1.0 - g01 * g01).sqrt();
    let n1 = Vec4([g01, b1, 0.0, 0.0]);
    let c1 = g12 / b1;
    let c2 = (1.0 - c1 * c1).sqrt();
    let n2 = Vec4([0.0, c1, c2, 0.0]);
    let d2 = g23 / c2;
    let d3sq = d2 * d2 - 1.0;
    if d3sq <= 0.0 {
        // not signature (3,1)
        return Err(GeometryError::DegenerateForm);
    }
    let n3 = Vec4([0.0, 0.0, d2, d3sq.sqrt()]);
    let normals = [n0, n1, n2, n3];
    for (i, a) in normals.iter().enumerate() {
        for (j, b) in normals.iter().enumerate() {
            debug_assert!((a.mdot(b) - g.0[i][j]).abs() < 1e-9);
        }
    }
    Ok(MirrorSet { normals, gram: *g })
}

/// Reflection matrix x -> x - 2<x,n>n for a unit-norm Minkowski normal.
pub fn reflection(n: &Vec4) -> Mat4 {
    let mut m = Mat4::identity();
    let sign = [1.0, 1.0, 1.0, -1.0];
    for i in 0..4 {
        for j in 0..4 {
            m.0[i][j] -= 2.0 * n.0[i] * n.0[j] * sign[j];
        }
    }
    m
}

/// The generators P, R, X together with the geometric anchors used to find
/// them and the recorded composition convention.
#[derive(Debug, Clone)]
pub struct GeneratorTriple {
    pub sym: SchlafliSymbol,
    pub kind: GeometryKind,
    pub p_mat: Mat4,
    pub r_mat: Mat4,
    pub x_mat: Mat4,
    /// apply the left factor of a juxtaposed word first (true) or last (false)
    pub apply_left_first: bool,
    /// orders of the edge-fixing (XP) and face-fixing (RX) products; one is
    /// r and the other p, recorded as observed
    pub order_xp: usize,
    pub order_rx: usize,
    /// reflection-index words for P, R, X (hyperbolic case only)
    pub refl_words: Option<[Vec<usize>; 3]>,
    pub mirrors: Option<MirrorSet>,
    // geometric anchors (cell center is always (0,0,0,1))
    pub cell_center: Vec4,
    pub neighbor_center: Vec4,
    pub f0_center: Vec4,
    pub f1_center: Vec4,
    pub f2_center: Vec4,
    pub edge_mid: Vec4,
}

impl GeneratorTriple {
    /// Evaluate a juxtaposed word of matrices under the recorded convention.
    pub fn compose(&self, word: &[&Mat4]) -> Mat4 {
        compose_word(word, self.apply_left_first)
    }
}

pub fn compose_word(word: &[&Mat4], apply_left_first: bool) -> Mat4 {
    let mut acc = Mat4::identity();
    if apply_left_first {
        for m in word {
            acc = m.mul(&acc);
        }
    } else {
        for m in word {
            acc = acc.mul(m);
        }
    }
    acc
}

fn order_cap(sym: &SchlafliSymbol) -> usize {
    2 * sym.p.max(sym.q).max(sym.r) + 2
}

/// All reflection words of length 1..=4 without immediate repeats, in
/// (length, lexicographic) order.
fn reflection_words() -> Vec<Vec<usize>> {
    let mut out = vec![];
    let mut level: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..4 {
        let mut next = vec![];
        for w in &level {
            for g in 0..4 {
                if w.last() == Some(&g) {
                    continue;
                }
                let mut w2 = w.clone();
                w2.push(g);
                next.push(w2);
            }
        }
        out.extend(next.iter().cloned());
        level = next;
    }
    out
}

fn eval_refl_word(mirrors: &MirrorSet, w: &[usize]) -> Mat4 {
    // reflections are involutions, so the application order inside the word
    // does not matter for the candidate search as long as it is fixed
    let mut acc = Mat4::identity();
    for &i in w {
        acc = acc.mul(&reflection(&mirrors.normals[i]));
    }
    acc
}

fn fixes_center_real(m: &Mat4, eps: f64) -> bool {
    (0..3).all(|i| m.0[i][3].abs() <= eps && m.0[3][i].abs() <= eps)
        && (m.0[3][3] - 1.0).abs() <= eps
}

/// Intersection point of three mirrors: the vector Minkowski-orthogonal to
/// all normals except `skip`, normalized to the hyperboloid.
fn simplex_vertex(mirrors: &MirrorSet, skip: usize) -> Vec4 {
    // solve <v, n_j> = 0 for the three j != skip by Gaussian elimination
    let mut rows = vec![];
    for (j, n) in mirrors.normals.iter().enumerate() {
        if j != skip {
            rows.push([n.0[0], n.0[1], n.0[2], -n.0[3]]);
        }
    }
    // 3x4 system; null space is 1-dimensional
    let mut a = [rows[0], rows[1], rows[2]];
    let mut pivots = [usize::MAX; 3];
    let mut col = 0;
    for row in 0..3 {
        let mut piv = None;
        while col < 4 {
            let best = (row..3).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()).unwrap();
            if a[best][col].abs() > 1e-12 {
                piv = Some(best);
                break;
            }
            col += 1;
        }
        let piv = piv.expect("mirror normals are independent");
        a.swap(row, piv);
        pivots[row] = col;
        let d = a[row][col];
        for j in 0..4 {
            a[row][j] /= d;
        }
        for i in 0..3 {
            if i != row {
                let f = a[i][col];
                for j in 0..4 {
                    a[i][j] -= f * a[row][j];
                }
            }
        }
        col += 1;
    }
    let free = (0..4).find(|c| !pivots.contains(c)).unwrap();
    let mut v = [0.0; 4];
    v[free] = 1.0;
    for (row, &pc) in pivots.iter().enumerate() {
        v[pc] = -a[row][free];
    }
    Vec4(v).hyperboloid_normalize()
}

pub fn generator_triple(sym: &SchlafliSymbol) -> Result<GeneratorTriple, GeometryError> {
    match sym.kind() {
        GeometryKind::Euclidean => euclidean_triple(sym),
        GeometryKind::Hyperbolic => hyperbolic_triple(sym),
    }
}

fn euclidean_triple(sym: &SchlafliSymbol) -> Result<GeneratorTriple, GeometryError> {
    if (sym.p, sym.q, sym.r) != (4, 3, 4) {
        return Err(GeometryError::UnsupportedSymbol(sym.p, sym.q, sym.r));
    }
    // Unit cube centered at the origin, homogeneous coordinates (x,y,z,1).
    // X: (x,y,z) -> (y,x,-z)   half turn swapping the +x and +y faces
    // R: (x,y,z) -> (y,z,x)    third turn about the (1,1,1) diagonal
    // P: (x,y,z) -> (1-x,y,-z) half turn through the +x edge midpoint,
    //                          composed with the unit translation
    let x_mat = Mat4([
        [0.0, 1.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, -1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]);
    let r_mat = Mat4([
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]);
    let p_mat = Mat4([
        [-1.0, 0.0, 0.0, 1.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, -1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]);
    let anchors = Anchors {
        cell_center: Vec4([0.0, 0.0, 0.0, 1.0]),
        neighbor_center: Vec4([1.0, 0.0, 0.0, 1.0]),
        f0_center: Vec4([0.5, 0.0, 0.0, 1.0]),
        f1_center: Vec4([0.0, 0.5, 0.0, 1.0]),
        f2_center: Vec4([0.0, 0.0, 0.5, 1.0]),
        edge_mid: Vec4([0.5, 0.5, 0.0, 1.0]),
    };
    let (alf, oxp, orx) =
        validate_triple(sym, &p_mat, &r_mat, &x_mat).ok_or(GeometryError::SearchFailed)?;
    Ok(GeneratorTriple {
        sym: *sym,
        kind: GeometryKind::Euclidean,
        p_mat,
        r_mat,
        x_mat,
        apply_left_first: alf,
        order_xp: oxp,
        order_rx: orx,
        refl_words: None,
        mirrors: None,
        cell_center: anchors.cell_center,
        neighbor_center: anchors.neighbor_center,
        f0_center: anchors.f0_center,
        f1_center: anchors.f1_center,
        f2_center: anchors.f2_center,
        edge_mid: anchors.edge_mid,
    })
}

struct Anchors {
    cell_center: Vec4,
    neighbor_center: Vec4,
    f0_center: Vec4,
    f1_center: Vec4,
    f2_center: Vec4,
    edge_mid: Vec4,
}

/// Check orders and the relation XP = RPXR under both composition
/// conventions; returns the convention and the (XP, RX) orders on success.
fn validate_triple(
    sym: &SchlafliSymbol,
    p_mat: &Mat4,
    r_mat: &Mat4,
    x_mat: &Mat4,
) -> Option<(bool, usize, usize)> {
    let cap = order_cap(sym);
    let eps = GEOM_EPS;
    if p_mat.order(cap, eps) != Some(2) || x_mat.order(cap, eps) != Some(2) {
        return None;
    }
    if r_mat.order(cap, eps) != Some(sym.q) {
        return None;
    }
    for alf in [true, false] {
        let xp = compose_word(&[x_mat, p_mat], alf);
        let rx = compose_word(&[r_mat, x_mat], alf);
        let oxp = xp.order(cap, eps);
        let orx = rx.order(cap, eps);
        let orders_ok = matches!(
            (oxp, orx),
            (Some(a), Some(b)) if (a == sym.p && b == sym.r) || (a == sym.r && b == sym.p)
        );
        if !orders_ok {
            continue;
        }
        let rpxr = compose_word(&[r_mat, p_mat, x_mat, r_mat], alf);
        if rpxr.eq_within(&xp, 1e-6) {
            return Some((alf, oxp.unwrap(), orx.unwrap()));
        }
    }
    None
}

fn hyperbolic_triple(sym: &SchlafliSymbol) -> Result<GeneratorTriple, GeometryError> {
    let gram = gram_matrix(sym);
    let mirrors = mirrors_from_gram(&gram)?;
    let eps = GEOM_EPS;

    let v3 = Vec4([0.0, 0.0, 0.0, 1.0]); // cell center
    let v2 = simplex_vertex(&mirrors, 2); // face center of f0
    let v1 = simplex_vertex(&mirrors, 1); // edge midpoint
    let r2 = reflection(&mirrors.normals[2]);
    let r1 = reflection(&mirrors.normals[1]);
    let r3 = reflection(&mirrors.normals[3]);
    let f1c = r2.apply(&v2);
    let f2c = r1.apply(&f1c);
    let c1c = r3.apply(&v3);
    debug_assert!(v3.approx_eq(&Vec4([0.0, 0.0, 0.0, 1.0]), 1e-9));

    let words = reflection_words();
    let mats: Vec<Mat4> = words.iter().map(|w| eval_refl_word(&mirrors, w)).collect();

    let mut p_cands = vec![];
    let mut x_cands = vec![];
    let mut r_cands = vec![];
    for (i, m) in mats.iter().enumerate() {
        if m.det() < 0.0 {
            continue;
        }
        if m.apply(&v3).approx_eq(&c1c, eps)
            && m.apply(&c1c).approx_eq(&v3, eps)
            && m.apply(&v1).approx_eq(&v1, eps)
        {
            p_cands.push(i);
        }
        if fixes_center_real(m, eps) {
            if m.apply(&v2).approx_eq(&f1c, eps) && m.apply(&f1c).approx_eq(&v2, eps) {
                x_cands.push(i);
            }
            if m.apply(&f1c).approx_eq(&v2, eps) && m.apply(&v2).approx_eq(&f2c, eps) {
                r_cands.push(i);
            }
        }
    }

    for &pi in &p_cands {
        for &xi in &x_cands {
            for &ri in &r_cands {
                if let Some((alf, oxp, orx)) = validate_triple(sym, &mats[pi], &mats[ri], &mats[xi])
                {
                    return Ok(GeneratorTriple {
                        sym: *sym,
                        kind: GeometryKind::Hyperbolic,
                        p_mat: mats[pi],
                        r_mat: mats[ri],
                        x_mat: mats[xi],
                        apply_left_first: alf,
                        order_xp: oxp,
                        order_rx: orx,
                        refl_words: Some([
                            words[pi].clone(),
                            words[ri].clone(),
                            words[xi].clone(),
                        ]),
                        mirrors: Some(mirrors),
                        cell_center: v3,
                        neighbor_center: c1c,
                        f0_center: v2,
                        f1_center: f1c,
                        f2_center: f2c,
                        edge_mid: v1,
                    });
                }
            }
        }
    }
    Err(GeometryError::SearchFailed)
}

/// Face-level combinatorics of the cell: ordered faces with representative
/// rotations, the rotation group H = <X, R>, edges and edge midpoints.
#[derive(Debug, Clone)]
pub struct CellCombinatorics {
    pub kind: GeometryKind,
    pub rot_group: GroupData<Mat4>,
    pub face_centers: Vec<Vec4>,
    /// index into rot_group of the first element taking face 0 to face i
    pub face_rep: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
    pub edge_mids: Vec<Vec4>,
    /// proximity value identifying face/edge incidence
    pub face_edge_val: f64,
}

/// Geometry-appropriate proximity metric between two anchor points.
pub fn anchor_metric(kind: GeometryKind, a: &Vec4, b: &Vec4) -> f64 {
    match kind {
        GeometryKind::Hyperbolic => a.mdot(b),
        GeometryKind::Euclidean => {
            let d = a.sub(b);
            d.0[0] * d.0[0] + d.0[1] * d.0[1] + d.0[2] * d.0[2]
        }
    }
}

pub fn cell_combinatorics(triple: &GeneratorTriple) -> Result<CellCombinatorics, GeometryError> {
    let eps = 1e-6;
    let h = generate_group_real(&[triple.x_mat, triple.r_mat], 1000, 1e-6, 1e-3)?;

    let mut face_centers: Vec<Vec4> = vec![];
    let mut face_rep: Vec<usize> = vec![];
    for (i, m) in h.elements.iter().enumerate() {
        let c = m.apply(&triple.f0_center);
        if !face_centers.iter().any(|x| x.approx_eq(&c, eps)) {
            face_centers.push(c);
            face_rep.push(i);
        }
    }

    let mut edge_mids: Vec<Vec4> = vec![];
    for m in &h.elements {
        let e = m.apply(&triple.edge_mid);
        if !edge_mids.iter().any(|x| x.approx_eq(&e, eps)) {
            edge_mids.push(e);
        }
    }

    let val = anchor_metric(triple.kind, &triple.f0_center, &triple.edge_mid);
    let mut edges = vec![];
    for em in &edge_mids {
        let inc: Vec<usize> = face_centers
            .iter()
            .enumerate()
            .filter(|(_, fc)| (anchor_metric(triple.kind, fc, em) - val).abs() < 1e-5)
            .map(|(i, _)| i)
            .collect();
        assert_eq!(inc.len(), 2, "edge midpoint must touch exactly two faces");
        edges.push((inc[0].min(inc[1]), inc[0].max(inc[1])));
    }
    // deterministic edge order
    let mut order: Vec<usize> = (0..edges.len()).collect();
    order.sort_by_key(|&i| edges[i]);
    let edges2: Vec<_> = order.iter().map(|&i| edges[i]).collect();
    let mids2: Vec<_> = order.iter().map(|&i| edge_mids[i]).collect();

    Ok(CellCombinatorics {
        kind: triple.kind,
        rot_group: h,
        face_centers,
        face_rep,
        edges: edges2,
        edge_mids: mids2,
        face_edge_val: val,
    })
}

impl CellCombinatorics {
    pub fn face_count(&self) -> usize {
        self.face_centers.len()
    }

    /// Local face index whose center matches the given point, if any.
    pub fn face_at(&self, pt: &Vec4, eps: f64) -> Option<usize> {
        self.face_centers.iter().position(|c| c.approx_eq(pt, eps))
    }

    /// The two faces incident to the edge with the given midpoint.
    pub fn faces_of_edge_mid(&self, em: &Vec4) -> Option<(usize, usize)> {
        let inc: Vec<usize> = self
            .face_centers
            .iter()
            .enumerate()
            .filter(|(_, fc)| (anchor_metric(self.kind, fc, em) - self.face_edge_val).abs() < 1e-5)
            .map(|(i, _)| i)
            .collect();
        if inc.len() == 2 {
            Some((inc[0], inc[1]))
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(p: usize, q: usize, r: usize) -> SchlafliSymbol {
        SchlafliSymbol::new(p, q, r).unwrap()
    }

    #[test]
    fn gram_435_offdiagonals() {
        let g = gram_matrix(&sym(4, 3, 5));
        assert!((g.0[0][1] + 0.70711).abs() < 1e-5);
        assert!((g.0[1][2] + 0.5).abs() < 1e-9);
        assert!((g.0[2][3] + 0.80902).abs() < 1e-5);
    }

    #[test]
    fn gram_434_degenerate() {
        assert!(gram_det(&sym(4, 3, 4)).abs() < 1e-9);
        assert_eq!(
            mirrors_from_gram(&gram_matrix(&sym(4, 3, 4))),
            Err(GeometryError::DegenerateForm)
        );
    }

    impl PartialEq for MirrorSet {
        fn eq(&self, _: &MirrorSet) -> bool {
            false
        }
    }

    #[test]
    fn mirrors_reproduce_gram() {
        for s in [sym(4, 3, 5), sym(3, 3, 6), sym(5, 3, 5)] {
            let g = gram_matrix(&s);
            let m = mirrors_from_gram(&g).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    assert!((m.normals[i].mdot(&m.normals[j]) - g.0[i][j]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn gram_535_signature() {
        // three positive and one negative eigenvalue: check via principal
        // minors of the triangular decomposition succeeding
        let g = gram_matrix(&sym(5, 3, 5));
        assert!(mirrors_from_gram(&g).is_ok());
        assert!(g.det() < -1e-9);
    }

    #[test]
    fn triple_435_orders() {
        let t = generator_triple(&sym(4, 3, 5)).unwrap();
        assert_eq!(t.r_mat.order(20, GEOM_EPS), Some(3));
        // edge-fixing product XP has order r = 5
        let xp = t.compose(&[&t.x_mat, &t.p_mat]);
        assert_eq!(xp.order(20, GEOM_EPS), Some(5));
        assert!(t.p_mat.is_minkowski_isometry(GEOM_EPS).unwrap());
        assert!(t.x_mat.is_minkowski_isometry(GEOM_EPS).unwrap());
        assert!(t.r_mat.is_minkowski_isometry(GEOM_EPS).unwrap());
    }

    #[test]
    fn triple_336_face_product_order() {
        let t = generator_triple(&sym(3, 3, 6)).unwrap();
        // face-fixing product RX has order p = 3
        let rx = t.compose(&[&t.r_mat, &t.x_mat]);
        assert_eq!(rx.order(20, GEOM_EPS), Some(3));
    }

    #[test]
    fn triple_434_relation() {
        let t = generator_triple(&sym(4, 3, 4)).unwrap();
        assert_eq!(t.p_mat.order(10, GEOM_EPS), Some(2));
        let xp = t.compose(&[&t.x_mat, &t.p_mat]);
        let rpxr = t.compose(&[&t.r_mat, &t.p_mat, &t.x_mat, &t.r_mat]);
        assert!(xp.eq_within(&rpxr, 1e-9));
    }

    #[test]
    fn cube_combinatorics() {
        let t = generator_triple(&sym(4, 3, 4)).unwrap();
        let c = cell_combinatorics(&t).unwrap();
        assert_eq!(c.face_count(), 6);
        assert_eq!(c.edges.len(), 12);
        assert_eq!(c.rot_group.len(), 24);
    }

    #[test]
    fn tetrahedron_combinatorics() {
        let t = generator_triple(&sym(3, 3, 6)).unwrap();
        let c = cell_combinatorics(&t).unwrap();
        assert_eq!(c.face_count(), 4);
        assert_eq!(c.rot_group.len(), 12);
        assert_eq!(c.edges.len(), 6);
    }

    #[test]
    fn face_reps_map_f0() {
        let t = generator_triple(&sym(4, 3, 5)).unwrap();
        let c = cell_combinatorics(&t).unwrap();
        for (i, &rep) in c.face_rep.iter().enumerate() {
            let img = c.rot_group.elements[rep].apply(&t.f0_center);
            assert!(img.approx_eq(&c.face_centers[i], 1e-6));
        }
    }

    #[test]
    fn determinism() {
        let t1 = generator_triple(&sym(5, 3, 5)).unwrap();
        let t2 = generator_triple(&sym(5, 3, 5)).unwrap();
        assert!(t1.p_mat.eq_within(&t2.p_mat, 0.0));
        let c1 = cell_combinatorics(&t1).unwrap();
        let c2 = cell_combinatorics(&t2).unwrap();
        assert_eq!(c1.face_rep, c2.face_rep);
        assert_eq!(c1.edges, c2.edges);
    }
}
