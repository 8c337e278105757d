//! Lazy generation of the honeycomb (the universal cover of a schema) with
//! isometry-keyed deduplication, distance upper bounds, and a BFS oracle
//! for coordination sequences.

use crate::mat::{Mat4, MatError, QuantMap};
use crate::schema::HoneycombSchema;
use num_bigint::BigUint;
use std::collections::VecDeque;
use thiserror::Error;

/// Quantization step for isometry keys.
pub const QUANT_STEP: f64 = 1e-6;
/// Safety band: distinct cells must differ by at least this much in some
/// matrix entry; matches inside the band but outside the step abort.
pub const SAFETY_BAND: f64 = 1e-3;
/// Default cap on the distance of any generated cell from the root.
pub const DEFAULT_DEPTH_CAP: usize = 30;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("isometry lookup ambiguous: honeycomb too deep for double precision at current settings")]
    PrecisionAmbiguity,
    #[error("resolve chain exceeded the depth cap of {0}")]
    DepthCapExceeded(usize),
    #[error("root type {0} out of range")]
    BadRootType(usize),
}

impl From<MatError> for GraphError {
    fn from(_: MatError) -> GraphError {
        GraphError::PrecisionAmbiguity
    }
}

/// One lazily generated cell of the universal cover.
#[derive(Debug, Clone)]
pub struct Cell {
    pub cell_type: usize,
    pub isometry: Mat4,
    /// neighbor slots, one per face; never change once set
    pub neighbors: Vec<Option<usize>>,
    /// best known upper bound on the distance to the root
    pub dist: usize,
}

/// The explored part of the universal cover of a schema, rooted at one cell
/// of a chosen type with the identity isometry.
#[derive(Debug, Clone)]
pub struct CellGraph {
    pub schema: HoneycombSchema,
    pub cells: Vec<Cell>,
    /// per cell type, (quantized isometry) -> cell id
    stores: Vec<QuantMap<usize>>,
    pub root: usize,
    pub depth_cap: usize,
}

impl CellGraph {
    pub fn new(schema: HoneycombSchema, root_type: usize) -> Result<CellGraph, GraphError> {
        if root_type >= schema.num_types() {
            return Err(GraphError::BadRootType(root_type));
        }
        let nf = schema.num_faces();
        let mut stores: Vec<QuantMap<usize>> =
            (0..schema.num_types()).map(|_| QuantMap::new(QUANT_STEP, SAFETY_BAND)).collect();
        let root = Cell {
            cell_type: root_type,
            isometry: Mat4::identity(),
            neighbors: vec![None; nf],
            dist: 0,
        };
        stores[root_type].insert(Mat4::identity(), 0);
        Ok(CellGraph {
            schema,
            cells: vec![root],
            stores,
            root: 0,
            depth_cap: DEFAULT_DEPTH_CAP,
        })
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    /// The neighbor of cell c across face f, generating it if needed.
    pub fn resolve(&mut self, c: usize, f: usize) -> Result<usize, GraphError> {
        if let Some(n) = self.cells[c].neighbors[f] {
            return Ok(n);
        }
        let t = self.cells[c].cell_type;
        let (t2, f2) = self.schema.pairing[t][f];
        let iso = self.cells[c].isometry.mul(&self.schema.gluing[t][f]);
        let id = match self.stores[t2].get(&iso)? {
            Some(&i) => i,
            None => {
                let d = self.cells[c].dist + 1;
                if d > self.depth_cap {
                    return Err(GraphError::DepthCapExceeded(self.depth_cap));
                }
                let i = self.cells.len();
                self.cells.push(Cell {
                    cell_type: t2,
                    isometry: iso,
                    neighbors: vec![None; self.schema.num_faces()],
                    dist: d,
                });
                self.stores[t2].insert(iso, i);
                i
            }
        };
        self.cells[c].neighbors[f] = Some(id);
        self.cells[id].neighbors[f2] = Some(c);
        self.relax(c, id);
        Ok(id)
    }

    /// Propagate distance-bound decreases through all known edges after
    /// linking a and b.
    fn relax(&mut self, a: usize, b: usize) {
        let mut queue = VecDeque::new();
        if self.cells[a].dist + 1 < self.cells[b].dist {
            self.cells[b].dist = self.cells[a].dist + 1;
            queue.push_back(b);
        } else if self.cells[b].dist + 1 < self.cells[a].dist {
            self.cells[a].dist = self.cells[b].dist + 1;
            queue.push_back(a);
        }
        while let Some(c) = queue.pop_front() {
            let d = self.cells[c].dist;
            for f in 0..self.schema.num_faces() {
                if let Some(n) = self.cells[c].neighbors[f] {
                    if d + 1 < self.cells[n].dist {
                        self.cells[n].dist = d + 1;
                        queue.push_back(n);
                    }
                }
            }
        }
    }

    /// Generate and fully inter-link every cell within graph distance rho
    /// of c.
    pub fn ensure_ball(&mut self, c: usize, rho: usize) -> Result<(), GraphError> {
        let mut level = vec![c];
        let mut seen = std::collections::HashSet::new();
        seen.insert(c);
        for _ in 0..rho {
            let mut next = vec![];
            for &x in &level {
                for f in 0..self.schema.num_faces() {
                    let n = self.resolve(x, f)?;
                    if seen.insert(n) {
                        next.push(n);
                    }
                }
            }
            level = next;
        }
        // inter-link the outermost shell (without creating cells) so
        // distances inside the ball are exact relative to the explored graph
        for &x in &level {
            for f in 0..self.schema.num_faces() {
                self.link_existing(x, f)?;
            }
        }
        Ok(())
    }

    /// Like resolve, but a no-op when the neighbor cell does not exist yet.
    fn link_existing(&mut self, c: usize, f: usize) -> Result<(), GraphError> {
        if self.cells[c].neighbors[f].is_some() {
            return Ok(());
        }
        let t = self.cells[c].cell_type;
        let (t2, f2) = self.schema.pairing[t][f];
        let iso = self.cells[c].isometry.mul(&self.schema.gluing[t][f]);
        if let Some(&id) = self.stores[t2].get(&iso)? {
            self.cells[c].neighbors[f] = Some(id);
            self.cells[id].neighbors[f2] = Some(c);
            self.relax(c, id);
        }
        Ok(())
    }

    /// Exact BFS distances from cell c over the explored adjacency.
    pub fn bfs_dist_from(&self, c: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.cells.len()];
        dist[c] = Some(0);
        let mut queue = VecDeque::from([c]);
        while let Some(x) = queue.pop_front() {
            let d = dist[x].unwrap();
            for f in 0..self.schema.num_faces() {
                if let Some(n) = self.cells[x].neighbors[f] {
                    if dist[n].is_none() {
                        dist[n] = Some(d + 1);
                        queue.push_back(n);
                    }
                }
            }
        }
        dist
    }

    /// Graph dump: cells with distances plus each undirected link once.
    pub fn dump_json(&self) -> String {
        let mut s = String::from("{\"cells\":[");
        for (i, c) in self.cells.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push_str(&format!(
                "{{\"id\":{i},\"type\":{},\"dist\":{}}}",
                c.cell_type, c.dist
            ));
        }
        s.push_str("],\"edges\":[");
        let mut first = true;
        for (i, c) in self.cells.iter().enumerate() {
            for f in 0..self.schema.num_faces() {
                if let Some(n) = c.neighbors[f] {
                    let (_, f2) = self.schema.pairing[c.cell_type][f];
                    if i < n || (i == n && f <= f2) {
                        if !first {
                            s.push(',');
                        }
                        first = false;
                        s.push_str(&format!("[{i},{f},{n}]"));
                    }
                }
            }
        }
        s.push_str("]}");
        s
    }
}

/// Exact ball-shell counts c_0..c_k from a root of the given type, computed
/// by brute-force generation (oracle use; k small).
pub fn coordination_by_bfs(
    schema: &HoneycombSchema,
    root_type: usize,
    k: usize,
) -> Result<Vec<BigUint>, GraphError> {
    let mut g = CellGraph::new(schema.clone(), root_type)?;
    g.ensure_ball(0, k)?;
    let dist = g.bfs_dist_from(0);
    let mut counts = vec![BigUint::from(0u32); k + 1];
    for d in dist.into_iter().flatten() {
        if d <= k {
            counts[d] += 1u32;
        }
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quotient::{enumerate_cells, find_good_triples, find_quotients, schema_from_manifold};
    use crate::schema::builtin_torus_434;

    fn quotient_schema(p: usize, q: usize, r: usize, field: (u64, u32)) -> HoneycombSchema {
        let sym = crate::geometry::SchlafliSymbol::new(p, q, r).unwrap();
        let ts = find_good_triples(&sym, field, 16).unwrap();
        for t in &ts {
            let m = enumerate_cells(t, 100_000).unwrap();
            let qs = find_quotients(&m, 100_000).unwrap();
            if let Some(one) = qs.iter().find(|q| q.cells == 1) {
                return schema_from_manifold(&m, Some(one)).unwrap().0;
            }
        }
        panic!("no one-cell quotient for {{{p},{q},{r}}}");
    }

    fn seq(schema: &HoneycombSchema, k: usize) -> Vec<u64> {
        coordination_by_bfs(schema, 0, k)
            .unwrap()
            .into_iter()
            .map(|b| u64::try_from(b).unwrap())
            .collect()
    }

    #[test]
    fn torus_root_and_shells() {
        let schema = builtin_torus_434();
        let mut g = CellGraph::new(schema, 0).unwrap();
        assert_eq!(g.cells[0].dist, 0);
        let mut ids = vec![];
        for f in 0..6 {
            ids.push(g.resolve(0, f).unwrap());
        }
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), 6);
        assert!(ids.iter().all(|&i| g.cells[i].dist == 1));
    }

    #[test]
    fn resolve_round_trip() {
        let schema = builtin_torus_434();
        let mut g = CellGraph::new(schema, 0).unwrap();
        for f in 0..6 {
            let n = g.resolve(0, f).unwrap();
            let (_, f2) = g.schema.pairing[0][f];
            assert_eq!(g.resolve(n, f2).unwrap(), 0);
        }
    }

    #[test]
    fn torus_edge_cycle_closes() {
        let schema = builtin_torus_434();
        let cycles = schema.edge_cycles_for(0).unwrap();
        let mut g = CellGraph::new(schema, 0).unwrap();
        for cycle in cycles {
            let mut c = 0;
            for &f in &cycle {
                c = g.resolve(c, f).unwrap();
            }
            assert_eq!(c, 0, "walking around an edge returns to the start");
        }
    }

    #[test]
    fn torus_ball_sizes() {
        let schema = builtin_torus_434();
        let mut g = CellGraph::new(schema, 0).unwrap();
        g.ensure_ball(0, 0).unwrap();
        assert_eq!(g.num_cells(), 1);
        g.ensure_ball(0, 1).unwrap();
        assert_eq!(g.num_cells(), 7);
    }

    #[test]
    fn torus_coordination() {
        let schema = builtin_torus_434();
        assert_eq!(seq(&schema, 3), vec![1, 6, 18, 38]);
    }

    #[test]
    fn hyperbolic_336_ball_and_coordination() {
        let schema = quotient_schema(3, 3, 6, (3, 1));
        let mut g = CellGraph::new(schema.clone(), 0).unwrap();
        g.ensure_ball(0, 3).unwrap();
        assert_eq!(g.num_cells(), 1 + 4 + 12 + 30);
        assert_eq!(seq(&schema, 4), vec![1, 4, 12, 30, 72]);
    }

    #[test]
    fn hyperbolic_344_coordination() {
        let schema = quotient_schema(3, 4, 4, (3, 1));
        assert_eq!(seq(&schema, 3), vec![1, 8, 44, 224]);
    }

    #[test]
    fn dist_bounds_match_true_bfs() {
        let schema = quotient_schema(3, 3, 6, (3, 1));
        let mut g = CellGraph::new(schema, 0).unwrap();
        g.ensure_ball(0, 4).unwrap();
        let exact = g.bfs_dist_from(0);
        for (i, d) in exact.into_iter().enumerate() {
            let d = d.unwrap();
            if d <= 3 {
                assert_eq!(g.cells[i].dist, d, "cell {i}");
            }
        }
    }

    #[test]
    fn multi_type_roots_agree() {
        let sym = crate::geometry::SchlafliSymbol::new(3, 4, 5).unwrap();
        let ts = find_good_triples(&sym, (3, 1), 16).unwrap();
        let m = enumerate_cells(&ts[0], 100_000).unwrap();
        let qs = find_quotients(&m, 100_000).unwrap();
        let three = qs.iter().find(|q| q.cells == 3).unwrap();
        let (schema, _) = schema_from_manifold(&m, Some(three)).unwrap();
        assert_eq!(schema.num_types(), 3);
        let s0 = coordination_by_bfs(&schema, 0, 2).unwrap();
        for t in 1..3 {
            assert_eq!(coordination_by_bfs(&schema, t, 2).unwrap(), s0);
        }
        assert_eq!(
            s0,
            vec![BigUint::from(1u32), BigUint::from(8u32), BigUint::from(56u32)]
        );
    }

    #[test]
    fn graph_dump_shape() {
        let schema = builtin_torus_434();
        let mut g = CellGraph::new(schema, 0).unwrap();
        g.ensure_ball(0, 1).unwrap();
        let dump = g.dump_json();
        let v: serde_json::Value = serde_json::from_str(&dump).unwrap();
        assert_eq!(v["cells"].as_array().unwrap().len(), g.num_cells());
        assert!(!v["edges"].as_array().unwrap().is_empty());
    }
}
