//! Geodesic regular tree structures: the rule system itself, lazy
//! generation, word-level navigation, exact coordination counting,
//! canonical serialization, and static geometry export.

use crate::geometry::{GeometryKind, SchlafliSymbol};
use crate::graph::GraphError;
use crate::mat::{Mat4, Vec4};
use crate::schema::{fnv1a, HoneycombSchema};
use num_bigint::BigUint;
use std::collections::VecDeque;
use thiserror::Error;

/// Default budget for one side-connection recursion.
pub const SIDE_BUDGET: usize = 10_000;

#[derive(Debug, Error)]
pub enum RtsError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("structural violation: {0}")]
    Structural(String),
    #[error("side connection procedure exceeded its budget (invalid RTS)")]
    BudgetExceeded,
    #[error("child target state {0} has no Parent rule on the paired face")]
    ParentRuleViolation(usize),
    #[error("relative distance violated at step {step}; witness word of length {}", witness.path.len())]
    DistanceViolation { step: usize, witness: Word },
    #[error("word does not follow child rules at position {0}")]
    NotInTree(usize),
    #[error("face {0} has no applicable rule here")]
    NoRule(usize),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// One rule e(q, f).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rule {
    Parent,
    Child(usize),
    /// side path with per-step cumulative distance offsets
    Side { path: Vec<usize>, dist: Vec<i64> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RtsState {
    pub cell_type: usize,
    /// one rule per face of the cell shape
    pub rules: Vec<Rule>,
}

/// An extended GRTS: states, typing, rules (side rules carry distance
/// annotations), and one root state per tile type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rts {
    pub symbol: SchlafliSymbol,
    pub schema_hash: u64,
    pub states: Vec<RtsState>,
    /// roots[t] = root state for tile type t
    pub roots: Vec<usize>,
}

/// A tree path from a root: root type plus the face-index word.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word {
    pub root_type: usize,
    pub path: Vec<usize>,
}

impl Rts {
    pub fn num_faces(&self) -> usize {
        self.states.first().map_or(0, |s| s.rules.len())
    }

    /// Structural invariants: rule shapes, parent uniqueness, reachability.
    pub fn structural_check(&self, schema: &HoneycombSchema) -> Result<(), RtsError> {
        let err = |m: String| Err(RtsError::Structural(m));
        if self.schema_hash != schema.canonical_hash() {
            return err("schema hash mismatch".into());
        }
        if self.roots.len() != schema.num_types() {
            return err("one root state per tile type required".into());
        }
        let nf = schema.num_faces();
        for (qi, s) in self.states.iter().enumerate() {
            if s.cell_type >= schema.num_types() {
                return err(format!("state {qi}: type out of range"));
            }
            if s.rules.len() != nf {
                return err(format!("state {qi}: expected {nf} rules"));
            }
            let mut parents = 0;
            for (f, r) in s.rules.iter().enumerate() {
                match r {
                    Rule::Parent => parents += 1,
                    Rule::Child(q2) => {
                        let Some(s2) = self.states.get(*q2) else {
                            return err(format!("state {qi}: child state {q2} out of range"));
                        };
                        let (t2, f2) = schema.pairing[s.cell_type][f];
                        if s2.cell_type != t2 {
                            return err(format!("state {qi} face {f}: child type mismatch"));
                        }
                        if s2.rules[f2] != Rule::Parent {
                            return Err(RtsError::ParentRuleViolation(*q2));
                        }
                    }
                    Rule::Side { path, dist } => {
                        if path.len() != dist.len() || path.is_empty() {
                            return err(format!("state {qi} face {f}: bad side shape"));
                        }
                        if dist[0] != -1 {
                            return err(format!("state {qi} face {f}: side must start with a parent move"));
                        }
                        if path.iter().any(|&l| l >= nf) {
                            return err(format!("state {qi} face {f}: side letter out of range"));
                        }
                    }
                }
            }
            if parents > 1 {
                return err(format!("state {qi}: more than one Parent face"));
            }
        }
        for (t, &r) in self.roots.iter().enumerate() {
            let Some(s) = self.states.get(r) else {
                return err(format!("root state for type {t} out of range"));
            };
            if s.cell_type != t {
                return err(format!("root state for type {t} has wrong type"));
            }
            if s.rules.iter().any(|x| *x == Rule::Parent) {
                return err(format!("root state {r} has a Parent face"));
            }
        }
        // every state reachable from some root by child rules
        let mut reach = vec![false; self.states.len()];
        let mut queue: VecDeque<usize> = self.roots.iter().copied().collect();
        for &r in &self.roots {
            reach[r] = true;
        }
        while let Some(q) = queue.pop_front() {
            for r in &self.states[q].rules {
                if let Rule::Child(q2) = r {
                    if !reach[*q2] {
                        reach[*q2] = true;
                        queue.push_back(*q2);
                    }
                }
            }
        }
        if let Some(q) = reach.iter().position(|&b| !b) {
            return err(format!("state {q} unreachable from any root"));
        }
        Ok(())
    }

    /// State reached by a tree word, following Child rules only.
    pub fn state_of(&self, w: &Word) -> Result<usize, RtsError> {
        let mut q = self.roots[w.root_type];
        for (i, &f) in w.path.iter().enumerate() {
            match &self.states[q].rules[f] {
                Rule::Child(q2) => q = *q2,
                _ => return Err(RtsError::NotInTree(i)),
            }
        }
        Ok(q)
    }

    /// The word of the neighbor cell across face f, via the extended side
    /// paths (Proposition 1 distances checked at every step).
    pub fn word_neighbor(&self, w: &Word, f: usize) -> Result<Word, RtsError> {
        self.word_neighbor_budgeted(w, f, &mut SIDE_BUDGET.clone())
    }

    fn word_neighbor_budgeted(
        &self,
        w: &Word,
        f: usize,
        budget: &mut usize,
    ) -> Result<Word, RtsError> {
        if *budget == 0 {
            return Err(RtsError::BudgetExceeded);
        }
        *budget -= 1;
        let q = self.state_of(w)?;
        match &self.states[q].rules[f] {
            Rule::Parent => {
                let mut p = w.clone();
                p.path.pop().ok_or(RtsError::NoRule(f))?;
                Ok(p)
            }
            Rule::Child(_) => {
                let mut c = w.clone();
                c.path.push(f);
                Ok(c)
            }
            Rule::Side { path, dist } => {
                let base = w.path.len() as i64;
                let mut cur = w.clone();
                for (i, (&letter, &d)) in path.iter().zip(dist).enumerate() {
                    cur = self.word_neighbor_budgeted(&cur, letter, budget)?;
                    if cur.path.len() as i64 - base != d {
                        return Err(RtsError::DistanceViolation { step: i, witness: cur });
                    }
                }
                Ok(cur)
            }
        }
    }

    /// Exact shell counts c_0..c_k by dynamic programming over state counts
    /// per tree level (branches are geodesic, so levels are shells).
    pub fn coordination(&self, root_type: usize, k: usize) -> Vec<BigUint> {
        let mut cur = vec![BigUint::from(0u32); self.states.len()];
        cur[self.roots[root_type]] = BigUint::from(1u32);
        let mut out = Vec::with_capacity(k + 1);
        for _ in 0..=k {
            out.push(cur.iter().sum());
            let mut next = vec![BigUint::from(0u32); self.states.len()];
            for (q, n) in cur.iter().enumerate() {
                if n == &BigUint::from(0u32) {
                    continue;
                }
                for r in &self.states[q].rules {
                    if let Rule::Child(q2) = r {
                        next[*q2] += n;
                    }
                }
            }
            cur = next;
        }
        out
    }

    /// Canonical serialization: sorted keys, states and rules in index order.
    pub fn serialize(&self) -> String {
        let mut s = String::from("{\"roots\":[");
        for (i, r) in self.roots.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push_str(&r.to_string());
        }
        s.push_str(&format!("],\"schema_hash\":\"{:016x}\",\"states\":[", self.schema_hash));
        for (i, st) in self.states.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push_str("{\"rules\":[");
            for (j, r) in st.rules.iter().enumerate() {
                if j > 0 {
                    s.push(',');
                }
                match r {
                    Rule::Parent => s.push_str("\"parent\""),
                    Rule::Child(q) => s.push_str(&format!("{{\"child\":{q}}}")),
                    Rule::Side { path, dist } => {
                        s.push_str("{\"dist\":[");
                        for (k, d) in dist.iter().enumerate() {
                            if k > 0 {
                                s.push(',');
                            }
                            s.push_str(&d.to_string());
                        }
                        s.push_str("],\"side\":[");
                        for (k, p) in path.iter().enumerate() {
                            if k > 0 {
                                s.push(',');
                            }
                            s.push_str(&p.to_string());
                        }
                        s.push_str("]}");
                    }
                }
            }
            s.push_str(&format!("],\"type\":{}}}", st.cell_type));
        }
        s.push_str(&format!(
            "],\"symbol\":[{},{},{}]}}",
            self.symbol.p, self.symbol.q, self.symbol.r
        ));
        s
    }

    pub fn deserialize(text: &str) -> Result<Rts, RtsError> {
        let parse = |m: &str| RtsError::Parse(m.to_string());
        let v: serde_json::Value =
            serde_json::from_str(text).map_err(|e| RtsError::Parse(e.to_string()))?;
        let sym = v["symbol"].as_array().ok_or_else(|| parse("missing symbol"))?;
        if sym.len() != 3 {
            return Err(parse("symbol must have three entries"));
        }
        let nums: Vec<usize> = sym
            .iter()
            .map(|x| x.as_u64().map(|u| u as usize).ok_or_else(|| parse("bad symbol entry")))
            .collect::<Result<_, _>>()?;
        let symbol = SchlafliSymbol::new(nums[0], nums[1], nums[2])
            .map_err(|e| RtsError::Parse(e.to_string()))?;
        let schema_hash = u64::from_str_radix(
            v["schema_hash"].as_str().ok_or_else(|| parse("missing schema_hash"))?,
            16,
        )
        .map_err(|_| parse("bad schema_hash"))?;
        let mut states = vec![];
        for (qi, sv) in
            v["states"].as_array().ok_or_else(|| parse("missing states"))?.iter().enumerate()
        {
            let cell_type = sv["type"].as_u64().ok_or_else(|| parse("missing state type"))?
                as usize;
            let mut rules = vec![];
            for rv in sv["rules"].as_array().ok_or_else(|| parse("missing rules"))? {
                let rule = if rv == "parent" {
                    Rule::Parent
                } else if let Some(q) = rv.get("child") {
                    Rule::Child(
                        q.as_u64().ok_or_else(|| parse("bad child target"))? as usize
                    )
                } else if let Some(p) = rv.get("side") {
                    let path: Vec<usize> = p
                        .as_array()
                        .ok_or_else(|| parse("bad side path"))?
                        .iter()
                        .map(|x| {
                            x.as_u64().map(|u| u as usize).ok_or_else(|| parse("bad side letter"))
                        })
                        .collect::<Result<_, _>>()?;
                    let dist: Vec<i64> = rv["dist"]
                        .as_array()
                        .ok_or_else(|| parse("missing side dist"))?
                        .iter()
                        .map(|x| x.as_i64().ok_or_else(|| parse("bad dist entry")))
                        .collect::<Result<_, _>>()?;
                    Rule::Side { path, dist }
                } else {
                    return Err(parse(&format!("unrecognized rule in state {qi}")));
                };
                rules.push(rule);
            }
            states.push(RtsState { cell_type, rules });
        }
        let roots: Vec<usize> = v["roots"]
            .as_array()
            .ok_or_else(|| parse("missing roots"))?
            .iter()
            .map(|x| x.as_u64().map(|u| u as usize).ok_or_else(|| parse("bad root entry")))
            .collect::<Result<_, _>>()?;
        let rts = Rts { symbol, schema_hash, states, roots };
        let n = rts.states.len();
        for (qi, s) in rts.states.iter().enumerate() {
            for r in &s.rules {
                if let Rule::Child(q2) = r {
                    if *q2 >= n {
                        return Err(parse(&format!("state {qi}: child target out of range")));
                    }
                }
            }
        }
        if rts.roots.iter().any(|&r| r >= n) {
            return Err(parse("root state out of range"));
        }
        Ok(rts)
    }
}

/// A node generated lazily from the GRTS rules.
#[derive(Debug, Clone)]
pub struct GenNode {
    pub state: usize,
    pub neighbors: Vec<Option<usize>>,
}

/// Lazy generation state: the tree built so far plus side links.
#[derive(Debug)]
pub struct RtsGen<'a> {
    pub rts: &'a Rts,
    pub schema: &'a HoneycombSchema,
    pub nodes: Vec<GenNode>,
}

impl<'a> RtsGen<'a> {
    pub fn new(rts: &'a Rts, schema: &'a HoneycombSchema, root_type: usize) -> RtsGen<'a> {
        let nf = schema.num_faces();
        RtsGen {
            rts,
            schema,
            nodes: vec![GenNode { state: rts.roots[root_type], neighbors: vec![None; nf] }],
        }
    }

    /// nu(c, f) under the lazy semantics, creating nodes as needed.
    pub fn query(&mut self, c: usize, f: usize, budget: usize) -> Result<usize, RtsError> {
        let mut budget = budget;
        self.nu(c, f, &mut budget)
    }

    fn nu(&mut self, c: usize, f: usize, budget: &mut usize) -> Result<usize, RtsError> {
        if *budget == 0 {
            return Err(RtsError::BudgetExceeded);
        }
        *budget -= 1;
        if let Some(n) = self.nodes[c].neighbors[f] {
            return Ok(n);
        }
        let q = self.nodes[c].state;
        let t = self.rts.states[q].cell_type;
        let (_, f2) = self.schema.pairing[t][f];
        match self.rts.states[q].rules[f].clone() {
            Rule::Parent => Err(RtsError::NoRule(f)), // parents are linked at creation
            Rule::Child(q2) => {
                if self.rts.states[q2].rules[f2] != Rule::Parent {
                    return Err(RtsError::ParentRuleViolation(q2));
                }
                let id = self.nodes.len();
                self.nodes.push(GenNode {
                    state: q2,
                    neighbors: vec![None; self.schema.num_faces()],
                });
                self.nodes[c].neighbors[f] = Some(id);
                self.nodes[id].neighbors[f2] = Some(c);
                Ok(id)
            }
            Rule::Side { path, .. } => {
                let mut x = c;
                for &letter in &path {
                    x = self.nu(x, letter, budget)?;
                }
                self.nodes[c].neighbors[f] = Some(x);
                self.nodes[x].neighbors[f2] = Some(c);
                Ok(x)
            }
        }
    }
}

/// Map a hyperboloid point to the requested model's coordinates.
fn model_point(kind: GeometryKind, model: &str, v: &Vec4) -> [f64; 3] {
    match (kind, model) {
        (GeometryKind::Hyperbolic, "poincare_ball") => {
            let w = 1.0 + v.0[3];
            [v.0[0] / w, v.0[1] / w, v.0[2] / w]
        }
        _ => [v.0[0], v.0[1], v.0[2]],
    }
}

/// Static geometry export: tree nodes to the given radius as model points,
/// plus parent-child edges.
pub fn export_geometry(
    schema: &HoneycombSchema,
    rts: &Rts,
    root_type: usize,
    radius: usize,
    model: &str,
) -> String {
    let center = Vec4([0.0, 0.0, 0.0, 1.0]);
    let mut points = vec![];
    let mut edges: Vec<(usize, usize)> = vec![];
    // BFS over the tree: (state, isometry, node index)
    let mut frontier = vec![(rts.roots[root_type], Mat4::identity(), 0usize)];
    points.push(model_point(schema.kind, model, &center));
    for _ in 0..radius {
        let mut next = vec![];
        for &(q, iso, id) in &frontier {
            let t = rts.states[q].cell_type;
            for (f, r) in rts.states[q].rules.iter().enumerate() {
                if let Rule::Child(q2) = r {
                    let iso2 = iso.mul(&schema.gluing[t][f]);
                    let nid = points.len();
                    points.push(model_point(schema.kind, model, &iso2.apply(&center)));
                    edges.push((id, nid));
                    next.push((*q2, iso2, nid));
                }
            }
        }
        frontier = next;
    }
    let mut s = String::from("{\"edges\":[");
    for (i, (a, b)) in edges.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        s.push_str(&format!("[{a},{b}]"));
    }
    s.push_str("],\"points\":[");
    for (i, p) in points.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        s.push_str(&format!(
            "[{},{},{}]",
            crate::schema::fmt_real(p[0]),
            crate::schema::fmt_real(p[1]),
            crate::schema::fmt_real(p[2])
        ));
    }
    s.push_str("]}");
    s
}

/// Canonical content hash of a serialized GRTS.
pub fn rts_hash(rts: &Rts) -> u64 {
    fnv1a(rts.serialize().as_bytes())
}
