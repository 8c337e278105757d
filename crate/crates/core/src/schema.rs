//! The fixed periodic honeycomb data model: cell types, face pairings,
//! gluing isometries, validation, edge cycles, canonical serialization,
//! and the two built-in one-cell manifolds (cubic torus, Seifert–Weber).

use crate::geometry::{
    cell_combinatorics, generator_triple, CellCombinatorics, GeneratorTriple, GeometryError,
    GeometryKind, SchlafliSymbol,
};
use crate::mat::{Mat4, Vec4};
use thiserror::Error;

pub const SCHEMA_EPS: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("edge cycle around edge {edge} of type {t} does not close")]
    CycleOpen { t: usize, edge: usize },
    #[error("schema parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// One invariant violation found by `validate`.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    PairingOutOfRange { t: usize, f: usize },
    PairingNotInvolutive { t: usize, f: usize },
    GluingNotInverse { t: usize, f: usize },
    NotOrientationPreservingIsometry { t: usize, f: usize },
    CycleOpen { t: usize, edge: usize },
}

#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// A fixed periodic description: |T| cell types sharing the regular
/// {p,q,r} cell shape, a face pairing, and gluing isometries. The cell
/// combinatorics and generators are derived from the symbol, never stored.
#[derive(Debug, Clone)]
pub struct HoneycombSchema {
    pub symbol: SchlafliSymbol,
    pub kind: GeometryKind,
    /// pairing[t][f] = (t', f')
    pub pairing: Vec<Vec<(usize, usize)>>,
    /// gluing[t][f] = C_{t,f}
    pub gluing: Vec<Vec<Mat4>>,
    pub shape: CellCombinatorics,
    pub triple: GeneratorTriple,
}

impl HoneycombSchema {
    pub fn from_parts(
        symbol: SchlafliSymbol,
        pairing: Vec<Vec<(usize, usize)>>,
        gluing: Vec<Vec<Mat4>>,
    ) -> Result<HoneycombSchema, SchemaError> {
        let triple = generator_triple(&symbol)?;
        let shape = cell_combinatorics(&triple)?;
        let nf = shape.face_count();
        if pairing.len() != gluing.len() || pairing.is_empty() {
            return Err(SchemaError::Parse("type count mismatch".into()));
        }
        for t in 0..pairing.len() {
            if pairing[t].len() != nf || gluing[t].len() != nf {
                return Err(SchemaError::Parse(format!(
                    "type {t} must have exactly {nf} faces"
                )));
            }
        }
        Ok(HoneycombSchema {
            symbol,
            kind: triple.kind,
            pairing,
            gluing,
            shape,
            triple,
        })
    }

    pub fn num_types(&self) -> usize {
        self.pairing.len()
    }

    pub fn num_faces(&self) -> usize {
        self.shape.face_count()
    }

    /// Neighbor type across face f of type t.
    pub fn nu(&self, t: usize, f: usize) -> usize {
        self.pairing[t][f].0
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let nt = self.num_types();
        let nf = self.num_faces();
        for t in 0..nt {
            for f in 0..nf {
                let (t2, f2) = self.pairing[t][f];
                if t2 >= nt || f2 >= nf {
                    report.violations.push(Violation::PairingOutOfRange { t, f });
                    continue;
                }
                if self.pairing[t2][f2] != (t, f) {
                    report.violations.push(Violation::PairingNotInvolutive { t, f });
                }
                let c = &self.gluing[t][f];
                match c.inv() {
                    Ok(ci) => {
                        if !self.gluing[t2][f2].eq_within(&ci, SCHEMA_EPS) {
                            report.violations.push(Violation::GluingNotInverse { t, f });
                        }
                    }
                    Err(_) => {
                        report.violations.push(Violation::GluingNotInverse { t, f });
                    }
                }
                let iso_ok = match self.kind {
                    GeometryKind::Hyperbolic => c.is_minkowski_isometry(SCHEMA_EPS).unwrap_or(false),
                    GeometryKind::Euclidean => c.is_rigid_motion(SCHEMA_EPS),
                };
                if !iso_ok || c.det() < 0.0 {
                    report
                        .violations
                        .push(Violation::NotOrientationPreservingIsometry { t, f });
                }
            }
        }
        for t in 0..nt {
            if let Err(SchemaError::CycleOpen { t, edge }) = self.edge_cycles_for(t) {
                report.violations.push(Violation::CycleOpen { t, edge });
            }
        }
        report
    }

    /// For each edge of the type-t cell, the face-index word of length r
    /// obtained by walking around the edge through successive glued cells.
    /// Starts at the lower incident face index.
    pub fn edge_cycles_for(&self, t: usize) -> Result<Vec<Vec<usize>>, SchemaError> {
        let mut out = vec![];
        for ei in 0..self.shape.edge_mids.len() {
            out.push(self.edge_cycle(t, ei)?);
        }
        Ok(out)
    }

    fn edge_cycle(&self, t: usize, ei: usize) -> Result<Vec<usize>, SchemaError> {
        let open = || SchemaError::CycleOpen { t, edge: ei };
        let mut word = vec![];
        let mut u = t;
        let mut m = self.shape.edge_mids[ei];
        let mut came: Option<usize> = None;
        let mut acc = Mat4::identity();
        for _ in 0..self.symbol.r {
            let (x, y) = self.shape.faces_of_edge_mid(&m).ok_or_else(open)?;
            let g = match came {
                None => x.min(y),
                Some(cf) if cf == x => y,
                Some(cf) if cf == y => x,
                Some(_) => return Err(open()),
            };
            word.push(g);
            let (u2, f2) = self.pairing[u][g];
            let c = &self.gluing[u][g];
            m = c.inv().map_err(|_| open())?.apply(&m);
            acc = acc.mul(c);
            came = Some(f2);
            u = u2;
        }
        if u != t || !acc.eq_within(&Mat4::identity(), SCHEMA_EPS) {
            return Err(open());
        }
        Ok(word)
    }

    /// Canonical serialization: sorted keys, matrices and pairings in
    /// (t, f) order, reals with 17 significant digits.
    pub fn canonical_json(&self) -> String {
        let mut s = String::from("{\"geometry\":");
        s.push_str(match self.kind {
            GeometryKind::Hyperbolic => "\"hyperbolic\"",
            GeometryKind::Euclidean => "\"euclidean\"",
        });
        s.push_str(",\"matrices\":[");
        let mut first = true;
        for (t, row) in self.gluing.iter().enumerate() {
            for (f, m) in row.iter().enumerate() {
                if !first {
                    s.push(',');
                }
                first = false;
                s.push_str(&format!("[{t},{f},["));
                let mut ff = true;
                for i in 0..4 {
                    for j in 0..4 {
                        if !ff {
                            s.push(',');
                        }
                        ff = false;
                        s.push_str(&fmt_real(m.0[i][j]));
                    }
                }
                s.push_str("]]");
            }
        }
        s.push_str("],\"pairings\":[");
        let mut first = true;
        for (t, row) in self.pairing.iter().enumerate() {
            for (f, &(t2, f2)) in row.iter().enumerate() {
                if !first {
                    s.push(',');
                }
                first = false;
                s.push_str(&format!("[{t},{f},{t2},{f2}]"));
            }
        }
        s.push_str(&format!(
            "],\"symbol\":[{},{},{}],\"types\":[",
            self.symbol.p, self.symbol.q, self.symbol.r
        ));
        let nf = self.num_faces();
        let types: Vec<String> = (0..self.num_types())
            .map(|_| format!("{{\"faces\":{nf}}}"))
            .collect();
        s.push_str(&types.join(","));
        s.push_str("]}");
        s
    }

    /// FNV-1a 64-bit digest of the canonical serialization.
    pub fn canonical_hash(&self) -> u64 {
        fnv1a(self.canonical_json().as_bytes())
    }

    pub fn from_json(text: &str) -> Result<HoneycombSchema, SchemaError> {
        let v: serde_json::Value =
            serde_json::from_str(text).map_err(|e| SchemaError::Parse(e.to_string()))?;
        let err = |m: &str| SchemaError::Parse(m.to_string());
        let sym = v["symbol"].as_array().ok_or_else(|| err("missing symbol"))?;
        if sym.len() != 3 {
            return Err(err("symbol must have three entries"));
        }
        let g = |i: usize| sym[i].as_u64().map(|x| x as usize);
        let symbol = SchlafliSymbol::new(
            g(0).ok_or_else(|| err("bad symbol"))?,
            g(1).ok_or_else(|| err("bad symbol"))?,
            g(2).ok_or_else(|| err("bad symbol"))?,
        )?;
        let types = v["types"].as_array().ok_or_else(|| err("missing types"))?;
        let nt = types.len();
        let nf = types
            .first()
            .and_then(|t| t["faces"].as_u64())
            .ok_or_else(|| err("missing face count"))? as usize;
        let geom = v["geometry"].as_str().ok_or_else(|| err("missing geometry"))?;
        if !matches!(geom, "hyperbolic" | "euclidean") {
            return Err(err("bad geometry kind"));
        }
        let mut pairing = vec![vec![(usize::MAX, usize::MAX); nf]; nt];
        for p in v["pairings"].as_array().ok_or_else(|| err("missing pairings"))? {
            let a = p.as_array().filter(|a| a.len() == 4).ok_or_else(|| err("bad pairing"))?;
            let n: Vec<usize> = a
                .iter()
                .map(|x| x.as_u64().map(|u| u as usize))
                .collect::<Option<_>>()
                .ok_or_else(|| err("bad pairing"))?;
            if n[0] >= nt || n[1] >= nf {
                return Err(err("pairing index out of range"));
            }
            pairing[n[0]][n[1]] = (n[2], n[3]);
        }
        if pairing.iter().flatten().any(|&(t, _)| t == usize::MAX) {
            return Err(err("incomplete pairing"));
        }
        let mut gluing = vec![vec![Mat4::identity(); nf]; nt];
        let mut seen = vec![vec![false; nf]; nt];
        for p in v["matrices"].as_array().ok_or_else(|| err("missing matrices"))? {
            let a = p.as_array().filter(|a| a.len() == 3).ok_or_else(|| err("bad matrix entry"))?;
            let t = a[0].as_u64().ok_or_else(|| err("bad matrix entry"))? as usize;
            let f = a[1].as_u64().ok_or_else(|| err("bad matrix entry"))? as usize;
            let vals = a[2].as_array().filter(|v| v.len() == 16).ok_or_else(|| err("matrix must have 16 entries"))?;
            if t >= nt || f >= nf {
                return Err(err("matrix index out of range"));
            }
            let mut m = Mat4::identity();
            for i in 0..4 {
                for j in 0..4 {
                    m.0[i][j] = vals[4 * i + j].as_f64().ok_or_else(|| err("bad real"))?;
                }
            }
            gluing[t][f] = m;
            seen[t][f] = true;
        }
        if seen.iter().flatten().any(|&s| !s) {
            return Err(err("incomplete matrices"));
        }
        let schema = HoneycombSchema::from_parts(symbol, pairing, gluing)?;
        let expect = match schema.kind {
            GeometryKind::Hyperbolic => "hyperbolic",
            GeometryKind::Euclidean => "euclidean",
        };
        if geom != expect {
            return Err(err("geometry kind does not match symbol"));
        }
        Ok(schema)
    }
}

pub(crate) fn fmt_real(x: f64) -> String {
    // 17 significant digits; -0.0 normalized so canonical hashes agree
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{:.16e}", x)
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// The 3-torus: unit cube with opposite faces glued by unit translations.
pub fn builtin_torus_434() -> HoneycombSchema {
    let symbol = SchlafliSymbol::new(4, 3, 4).unwrap();
    let triple = generator_triple(&symbol).unwrap();
    let shape = cell_combinatorics(&triple).unwrap();
    let nf = shape.face_count();
    let mut pairing = vec![vec![(0usize, 0usize); nf]];
    let mut gluing = vec![vec![Mat4::identity(); nf]];
    for f in 0..nf {
        let c = shape.face_centers[f];
        let opp = Vec4([-c.0[0], -c.0[1], -c.0[2], c.0[3]]);
        let f2 = shape.face_at(&opp, 1e-6).expect("cube has opposite faces");
        pairing[0][f] = (0, f2);
        let mut m = Mat4::identity();
        for i in 0..3 {
            m.0[i][3] = 2.0 * c.0[i];
        }
        gluing[0][f] = m;
    }
    HoneycombSchema::from_parts(symbol, pairing, gluing).unwrap()
}

/// Point reflection of H^3 through x (on the hyperboloid): v -> -2<v,x>x - v.
fn point_reflection(x: &Vec4) -> Mat4 {
    let sign = [1.0, 1.0, 1.0, -1.0];
    let mut m = Mat4::identity();
    for i in 0..4 {
        for j in 0..4 {
            m.0[i][j] = -2.0 * x.0[i] * x.0[j] * sign[j] - if i == j { 1.0 } else { 0.0 };
        }
    }
    m
}

/// Rotation of H^3 about the axis through the origin with spatial direction
/// `a` (unit), by angle theta.
fn axis_rotation(a: [f64; 3], theta: f64) -> Mat4 {
    let (s, c) = theta.sin_cos();
    let t = 1.0 - c;
    let mut m = Mat4::identity();
    let r3 = [
        [c + a[0] * a[0] * t, a[0] * a[1] * t - a[2] * s, a[0] * a[2] * t + a[1] * s],
        [a[1] * a[0] * t + a[2] * s, c + a[1] * a[1] * t, a[1] * a[2] * t - a[0] * s],
        [a[2] * a[0] * t - a[1] * s, a[2] * a[1] * t + a[0] * s, c + a[2] * a[2] * t],
    ];
    for i in 0..3 {
        for j in 0..3 {
            m.0[i][j] = r3[i][j];
        }
    }
    m
}

/// The Seifert–Weber dodecahedral space: opposite faces of the {5,3,5} cell
/// glued with a 3/10 turn. The twist multiple is selected by validation.
pub fn builtin_seifert_weber_535() -> HoneycombSchema {
    let symbol = SchlafliSymbol::new(5, 3, 5).unwrap();
    let triple = generator_triple(&symbol).unwrap();
    let shape = cell_combinatorics(&triple).unwrap();
    let nf = shape.face_count();

    // translation along the f0 axis taking the cell center to the
    // neighbor center: product of point reflections through f0-center
    // and the origin
    let origin = Vec4([0.0, 0.0, 0.0, 1.0]);
    let tau = point_reflection(&triple.f0_center).mul(&point_reflection(&origin));

    let axis = {
        let c = triple.f0_center;
        let n = (c.0[0] * c.0[0] + c.0[1] * c.0[1] + c.0[2] * c.0[2]).sqrt();
        [c.0[0] / n, c.0[1] / n, c.0[2] / n]
    };

    for k in [1usize, 3, 5, 7, 9] {
        let theta = k as f64 * std::f64::consts::PI / 5.0;
        let c0 = tau.mul(&axis_rotation(axis, theta));
        let mut pairing = vec![vec![(0usize, 0usize); nf]];
        let mut gluing = vec![vec![Mat4::identity(); nf]];
        for f in 0..nf {
            let c = shape.face_centers[f];
            let opp = Vec4([-c.0[0], -c.0[1], -c.0[2], c.0[3]]);
            let f2 = shape.face_at(&opp, 1e-6).expect("dodecahedron has opposite faces");
            pairing[0][f] = (0, f2);
            let rep = &shape.rot_group.elements[shape.face_rep[f]];
            gluing[0][f] = rep.mul(&c0).mul(&rep.inv().unwrap());
        }
        let schema = HoneycombSchema::from_parts(symbol, pairing, gluing).unwrap();
        if schema.validate().is_valid() {
            return schema;
        }
    }
    unreachable!("a twist multiple must validate for the Seifert–Weber space")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_validates() {
        let s = builtin_torus_434();
        assert_eq!(s.num_types(), 1);
        assert_eq!(s.num_faces(), 6);
        let rep = s.validate();
        assert!(rep.is_valid(), "violations: {:?}", rep.violations);
    }

    #[test]
    fn torus_edge_cycles() {
        let s = builtin_torus_434();
        let cycles = s.edge_cycles_for(0).unwrap();
        assert_eq!(cycles.len(), 12);
        assert!(cycles.iter().all(|c| c.len() == 4));
    }

    #[test]
    fn seifert_weber_validates() {
        let s = builtin_seifert_weber_535();
        assert_eq!(s.num_types(), 1);
        assert_eq!(s.num_faces(), 12);
        let rep = s.validate();
        assert!(rep.is_valid(), "violations: {:?}", rep.violations);
        let cycles = s.edge_cycles_for(0).unwrap();
        assert_eq!(cycles.len(), 30);
        assert!(cycles.iter().all(|c| c.len() == 5));
    }

    #[test]
    fn broken_pairing_detected() {
        let mut s = builtin_torus_434();
        // redirect one pairing to a wrong face
        let (t2, f2) = s.pairing[0][0];
        let wrong = (f2 + 1) % 6;
        s.pairing[0][0] = (t2, wrong);
        let rep = s.validate();
        assert!(rep
            .violations
            .iter()
            .any(|v| matches!(v, Violation::PairingNotInvolutive { .. })));
    }

    #[test]
    fn canonical_roundtrip() {
        for s in [builtin_torus_434(), builtin_seifert_weber_535()] {
            let text = s.canonical_json();
            let s2 = HoneycombSchema::from_json(&text).unwrap();
            assert_eq!(s.pairing, s2.pairing);
            for t in 0..s.num_types() {
                for f in 0..s.num_faces() {
                    assert!(s.gluing[t][f].eq_within(&s2.gluing[t][f], 1e-12));
                }
            }
            assert_eq!(text, s2.canonical_json());
            assert_eq!(s.canonical_hash(), s2.canonical_hash());
        }
    }

    #[test]
    fn hash_distinguishes_schemas() {
        assert_ne!(
            builtin_torus_434().canonical_hash(),
            builtin_seifert_weber_535().canonical_hash()
        );
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(HoneycombSchema::from_json("{\"symbol\": [4,3]}").is_err());
        assert!(HoneycombSchema::from_json("not json").is_err());
    }
}
