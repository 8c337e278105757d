//! Angluin-style learning of an extended GRTS from the lazily generated
//! graph: face classification, extended side paths, Moore-style state
//! refinement, candidate construction, and preverification.

use crate::graph::{CellGraph, GraphError};
use crate::rts::{Rts, RtsError, RtsState, Rule, Word};
use crate::schema::HoneycombSchema;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("learning did not converge within {0} iterations")]
    IterationCapExceeded(usize),
    #[error("no side path found for cell {cell} face {face} at the current ball radius")]
    PathNotFound { cell: usize, face: usize },
    #[error("state refinement did not stabilize at ball radius {0}")]
    NotConverged(usize),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Rts(#[from] RtsError),
}

#[derive(Debug, Clone)]
pub struct LearnConfig {
    pub max_iterations: usize,
    /// initial ball radius; grows by one per failed iteration
    pub ball_radius: usize,
    /// suffix length for preverification (paper uses l <= 3)
    pub suffix_check_l: usize,
    /// cap on transducer states during verification
    pub state_cap: usize,
}

impl Default for LearnConfig {
    fn default() -> LearnConfig {
        LearnConfig {
            max_iterations: 12,
            ball_radius: 4,
            suffix_check_l: 3,
            state_cap: 100_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LearnStats {
    pub iterations: usize,
    pub final_radius: usize,
    pub samples: usize,
    pub states: usize,
    /// one progress line per iteration
    pub log: Vec<String>,
}

/// Classification of one face of a sample cell.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FaceTag {
    Parent,
    Child,
    Side(Vec<usize>, Vec<i64>),
}

#[derive(Debug, Clone)]
struct Sample {
    graph: usize,
    cell: usize,
    dist: usize,
    /// tree path from the root of its graph
    word: Vec<usize>,
    tags: Vec<FaceTag>,
}

/// Smallest face index whose neighbor is one step closer to the root.
pub fn parent_face(g: &CellGraph, c: usize) -> Option<usize> {
    let d = g.cells[c].dist;
    if d == 0 {
        return None;
    }
    (0..g.schema.num_faces())
        .find(|&f| matches!(g.cells[c].neighbors[f], Some(n) if g.cells[n].dist + 1 == d))
}

/// Deterministic extended side path for face f of cell c: a parent move,
/// a middle sequence strictly below delta(c), and at most two final child
/// moves, found by BFS in (length, lexicographic) order.
pub fn extended_side_path(g: &CellGraph, c: usize, f: usize) -> Option<(Vec<usize>, Vec<i64>)> {
    let target = g.cells[c].neighbors[f]?;
    let d = g.cells[c].dist as i64;
    let pf = parent_face(g, c)?;
    let start = g.cells[c].neighbors[pf]?;
    // BFS state: (cell, child moves taken after leaving the below-delta zone)
    let mut seen = std::collections::HashSet::new();
    let mut queue = std::collections::VecDeque::new();
    seen.insert((start, 0usize));
    queue.push_back((start, 0usize, vec![pf], vec![-1i64]));
    while let Some((x, k, path, dist)) = queue.pop_front() {
        if x == target {
            return Some((path, dist));
        }
        for nf in 0..g.schema.num_faces() {
            let Some(y) = g.cells[x].neighbors[nf] else { continue };
            let dy = g.cells[y].dist as i64;
            let next = if k == 0 && dy < d {
                Some((y, 0))
            } else if dy == g.cells[x].dist as i64 + 1 && is_tree_edge(g, x, nf, y) && k < 2 {
                Some((y, k + 1))
            } else {
                None
            };
            if let Some((y, k2)) = next {
                if seen.insert((y, k2)) {
                    let mut p = path.clone();
                    p.push(nf);
                    let mut dd = dist.clone();
                    dd.push(dy - d);
                    queue.push_back((y, k2, p, dd));
                }
            }
        }
    }
    None
}

/// Whether the edge from x across face nf to y is a tree edge (y's parent
/// face points back through it).
fn is_tree_edge(g: &CellGraph, x: usize, nf: usize, y: usize) -> bool {
    let t = g.cells[x].cell_type;
    let (_, f2) = g.schema.pairing[t][nf];
    g.cells[y].dist == g.cells[x].dist + 1 && parent_face(g, y) == Some(f2)
}

/// Classify every face of cell c. Requires the ball around the root to be
/// ensured deep enough that c and its neighbors are fully resolved.
fn classify(g: &CellGraph, c: usize) -> Result<Vec<FaceTag>, LearnError> {
    let pf = parent_face(g, c);
    let mut tags = vec![];
    for f in 0..g.schema.num_faces() {
        if Some(f) == pf {
            tags.push(FaceTag::Parent);
            continue;
        }
        let n = g.cells[c].neighbors[f].expect("classified cells are fully resolved");
        if is_tree_edge(g, c, f, n) {
            tags.push(FaceTag::Child);
        } else {
            let (p, d) = extended_side_path(g, c, f)
                .ok_or(LearnError::PathNotFound { cell: c, face: f })?;
            tags.push(FaceTag::Side(p, d));
        }
    }
    Ok(tags)
}

/// Tree word of one cell, read off its parent chain.
fn tree_word(g: &CellGraph, c: usize) -> Vec<usize> {
    let mut w = vec![];
    let mut x = c;
    while let Some(pf) = parent_face(g, x) {
        let t = g.cells[x].cell_type;
        let (_, back) = g.schema.pairing[t][pf];
        w.push(back);
        x = g.cells[x].neighbors[pf].expect("parent neighbors are resolved");
    }
    w.reverse();
    w
}

/// One learning pass at a fixed radius: classify, refine, read off a
/// candidate. Returns the candidate and per-class samples.
fn candidate_at_radius(
    graphs: &mut [CellGraph],
    schema: &HoneycombSchema,
    rho: usize,
) -> Result<(Rts, Vec<Sample>, Vec<usize>), LearnError> {
    for g in graphs.iter_mut() {
        g.ensure_ball(0, rho)?;
    }
    let mut samples: Vec<Sample> = vec![];
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    for (gi, g) in graphs.iter().enumerate() {
        let exact = g.bfs_dist_from(0);
        for c in 0..g.cells.len() {
            let Some(d) = exact[c] else { continue };
            if d + 2 > rho {
                continue;
            }
            let tags = classify(g, c)?;
            index.insert((gi, c), samples.len());
            samples.push(Sample {
                graph: gi,
                cell: c,
                dist: d,
                word: tree_word(g, c),
                tags,
            });
        }
    }

    // initial partition by signature (type + face tags)
    let mut class: Vec<usize> = vec![0; samples.len()];
    {
        let mut sig_ids: HashMap<(usize, &[FaceTag]), usize> = HashMap::new();
        for (i, s) in samples.iter().enumerate() {
            let t = graphs[s.graph].cells[s.cell].cell_type;
            let n = sig_ids.len();
            class[i] = *sig_ids.entry((t, &s.tags)).or_insert(n);
        }
    }
    // Layered Moore refinement: a step only refines samples whose child
    // classes are still defined at the current depth, and stops as soon
    // as one step causes no split. Boundary cells never act as splitters,
    // which keeps class boundaries meaningful inside the ball.
    let mut depth = 0usize;
    let rep_limit = loop {
        let Some(limit) = (rho as i64 - 3 - depth as i64).try_into().ok() else {
            return Err(LearnError::NotConverged(rho));
        };
        let limit: usize = limit;
        let mut key_ids: HashMap<(usize, Vec<usize>), usize> = HashMap::new();
        let mut next = class.clone();
        let mut first_of: HashMap<usize, usize> = HashMap::new();
        let mut split = false;
        for (i, s) in samples.iter().enumerate() {
            if s.dist > limit {
                continue;
            }
            let mut children = vec![];
            for (f, tag) in s.tags.iter().enumerate() {
                if *tag == FaceTag::Child {
                    let n = graphs[s.graph].cells[s.cell].neighbors[f]
                        .expect("classified cells are fully resolved");
                    children.push(class[index[&(s.graph, n)]]);
                }
            }
            let n = key_ids.len();
            let id = *key_ids.entry((class[i], children)).or_insert(n);
            next[i] = id;
            match first_of.entry(class[i]) {
                std::collections::hash_map::Entry::Occupied(e) => {
                    if *e.get() != id {
                        split = true;
                    }
                }
                std::collections::hash_map::Entry::Vacant(e) => {
                    e.insert(id);
                }
            }
        }
        if std::env::var("GRTS_DEBUG").is_ok() {
            let kinds: std::collections::HashSet<usize> =
                next.iter().zip(&samples).filter(|(_, s)| s.dist <= limit).map(|(&c, _)| c).collect();
            eprintln!("  refine depth {depth}: limit {limit}, {} classes, split {split}", kinds.len());
        }
        if !split {
            break limit;
        }
        class = next;
        depth += 1;
    };

    // the final classes are only meaningful up to depth rep_limit + 1;
    // renumber over that domain and forget stale deeper assignments
    let domain_limit = rep_limit + 1;
    let mut remap: HashMap<usize, usize> = HashMap::new();
    for (i, s) in samples.iter().enumerate() {
        if s.dist <= domain_limit {
            let n = remap.len();
            class[i] = *remap.entry(class[i]).or_insert(n);
        }
    }
    let num_classes = remap.len();
    // representative: closest to a root, then first root, then lex path,
    // restricted to depths where child classes are defined
    let mut rep: Vec<Option<usize>> = vec![None; num_classes];
    for (i, s) in samples.iter().enumerate() {
        if s.dist > rep_limit {
            continue;
        }
        let better = match rep[class[i]] {
            None => true,
            Some(j) => {
                let r = &samples[j];
                (s.dist, s.graph, &s.word) < (r.dist, r.graph, &r.word)
            }
        };
        if better {
            rep[class[i]] = Some(i);
        }
    }

    let mut states = vec![];
    for q in 0..num_classes {
        let s = &samples[rep[q].ok_or(LearnError::NotConverged(rho))?];
        let g = &graphs[s.graph];
        let mut rules = vec![];
        for (f, tag) in s.tags.iter().enumerate() {
            rules.push(match tag {
                FaceTag::Parent => Rule::Parent,
                FaceTag::Child => {
                    let n = g.cells[s.cell].neighbors[f].expect("resolved");
                    let j = index
                        .get(&(s.graph, n))
                        .ok_or(LearnError::PathNotFound { cell: s.cell, face: f })?;
                    Rule::Child(class[*j])
                }
                FaceTag::Side(p, d) => Rule::Side { path: p.clone(), dist: d.clone() },
            });
        }
        states.push(RtsState { cell_type: g.cells[s.cell].cell_type, rules });
    }
    let roots = (0..graphs.len())
        .map(|gi| class[index[&(gi, 0)]])
        .collect();
    let rts = Rts {
        symbol: schema.symbol,
        schema_hash: schema.canonical_hash(),
        states,
        roots,
    };
    Ok((rts, samples, class))
}

fn cell_of_word(g: &mut CellGraph, w: &Word) -> Result<usize, GraphError> {
    let mut c = 0;
    for &f in &w.path {
        c = g.resolve(c, f)?;
    }
    Ok(c)
}

/// Preverification: closest-representative reclassification, reachability,
/// and word/graph agreement on all state witnesses extended by suffixes of
/// length at most l. Returns a witness word on failure.
pub fn preverify(
    rts: &Rts,
    graphs: &mut [CellGraph],
    l: usize,
) -> Result<Option<Word>, LearnError> {
    // shortest witness word per state, BFS over child rules
    let mut witness: Vec<Option<Word>> = vec![None; rts.states.len()];
    let mut queue = std::collections::VecDeque::new();
    for (t, &r) in rts.roots.iter().enumerate() {
        if witness[r].is_none() {
            witness[r] = Some(Word { root_type: t, path: vec![] });
            queue.push_back(r);
        }
    }
    while let Some(q) = queue.pop_front() {
        let w = witness[q].clone().unwrap();
        for (f, rule) in rts.states[q].rules.iter().enumerate() {
            if let Rule::Child(q2) = rule {
                if witness[*q2].is_none() {
                    let mut w2 = w.clone();
                    w2.path.push(f);
                    witness[*q2] = Some(w2);
                    queue.push_back(*q2);
                }
            }
        }
    }
    if witness.iter().any(|w| w.is_none()) {
        // unreachable state: report the empty word as a generic witness
        return Ok(Some(Word { root_type: 0, path: vec![] }));
    }

    // agreement between word-level and graph-level neighbors for every
    // witness extended by suffixes of length <= l
    for w0 in witness.into_iter().flatten() {
        let limit = w0.path.len() + l;
        let mut stack = vec![w0];
        while let Some(w) = stack.pop() {
            let q = rts.state_of(&w)?;
            let c = cell_of_word(&mut graphs[w.root_type], &w)?;
            for (f, _) in rts.states[q].rules.iter().enumerate() {
                let wn = match rts.word_neighbor(&w, f) {
                    Ok(wn) => wn,
                    Err(RtsError::DistanceViolation { .. } | RtsError::BudgetExceeded) => {
                        return Ok(Some(w));
                    }
                    Err(e) => return Err(e.into()),
                };
                let g = &mut graphs[w.root_type];
                let expect = g.resolve(c, f)?;
                if cell_of_word(g, &wn)? != expect {
                    return Ok(Some(w));
                }
            }
            // extend by child letters while within the suffix budget
            if w.path.len() < limit {
                for (f, rule) in rts.states[q].rules.iter().enumerate() {
                    if matches!(rule, Rule::Child(_)) {
                        let mut w2 = w.clone();
                        w2.path.push(f);
                        stack.push(w2);
                    }
                }
            }
        }
    }
    Ok(None)
}

/// The full learning loop: expand, classify, refine, preverify, verify.
pub fn learn_loop(
    schema: &HoneycombSchema,
    config: &LearnConfig,
) -> Result<(Rts, LearnStats), LearnError> {
    let mut stats = LearnStats {
        iterations: 0,
        final_radius: config.ball_radius,
        samples: 0,
        states: 0,
        log: vec![],
    };
    let mut graphs: Vec<CellGraph> = (0..schema.num_types())
        .map(|t| CellGraph::new(schema.clone(), t))
        .collect::<Result<_, _>>()?;
    for iter in 0..config.max_iterations {
        let rho = config.ball_radius + iter;
        stats.iterations = iter + 1;
        stats.final_radius = rho;
        let (rts, samples, class) = match candidate_at_radius(&mut graphs, schema, rho) {
            Ok(out) => out,
            Err(e @ (LearnError::PathNotFound { .. } | LearnError::NotConverged(_))) => {
                stats.log.push(format!("iteration {}: radius {rho}, {e}", iter + 1));
                if std::env::var("GRTS_DEBUG").is_ok() {
                    eprintln!("{}", stats.log.last().unwrap());
                }
                continue;
            }
            Err(e) => return Err(e),
        };
        stats.samples = samples.len();
        stats.states = rts.states.len();
        let structural = rts.structural_check(schema);
        let pre = if structural.is_ok() {
            preverify(&rts, &mut graphs, config.suffix_check_l)?
        } else {
            Some(Word { root_type: 0, path: vec![] })
        };
        let verified = if structural.is_ok() && pre.is_none() {
            crate::verifier::verify(&rts, schema, config.state_cap, false)
                .map(|r| r.ok())
                .unwrap_or(false)
        } else {
            false
        };
        stats.log.push(format!(
            "iteration {}: radius {rho}, {} samples, {} states ({} classes), structural {}, preverify {}, verified {verified}",
            iter + 1,
            samples.len(),
            rts.states.len(),
            class.iter().max().map_or(0, |m| m + 1),
            if structural.is_ok() { "ok" } else { "failed" },
            if pre.is_none() { "ok" } else { "counterexample" },
        ));
        if std::env::var("GRTS_DEBUG").is_ok() {
            eprintln!("{}", stats.log.last().unwrap());
            if let Some(w) = &pre {
                eprintln!("  preverify witness: {:?}", w);
            }
        }
        if verified {
            return Ok((rts, stats));
        }
    }
    Err(LearnError::IterationCapExceeded(config.max_iterations))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::builtin_torus_434;

    fn torus_graph(rho: usize) -> CellGraph {
        let mut g = CellGraph::new(builtin_torus_434(), 0).unwrap();
        g.ensure_ball(0, rho).unwrap();
        g
    }

    #[test]
    fn parent_faces() {
        let g = torus_graph(3);
        assert_eq!(parent_face(&g, 0), None);
        for c in 1..g.num_cells() {
            if g.cells[c].dist == 1 {
                let pf = parent_face(&g, c).unwrap();
                assert_eq!(g.cells[c].neighbors[pf], Some(0));
            }
        }
    }

    #[test]
    fn side_paths_replay() {
        let g = torus_graph(4);
        for c in 0..g.num_cells() {
            if g.cells[c].dist != 2 {
                continue;
            }
            for f in 0..6 {
                let n = g.cells[c].neighbors[f].unwrap();
                if Some(f) == parent_face(&g, c) || is_tree_edge(&g, c, f, n) {
                    continue;
                }
                let (p, d) = extended_side_path(&g, c, f).unwrap();
                assert_eq!(d[0], -1);
                assert_eq!(p.len(), d.len());
                // replaying the path reaches the face neighbor
                let mut x = c;
                for &letter in &p {
                    x = g.cells[x].neighbors[letter].unwrap();
                }
                assert_eq!(x, n);
            }
        }
    }

    #[test]
    fn torus_candidate_counts() {
        let schema = builtin_torus_434();
        let mut graphs = vec![CellGraph::new(schema.clone(), 0).unwrap()];
        let (rts, samples, _) = candidate_at_radius(&mut graphs, &schema, 8).unwrap();
        assert!(!samples.is_empty());
        rts.structural_check(&schema).unwrap();
        let seq: Vec<u64> = rts
            .coordination(0, 3)
            .into_iter()
            .map(|b| u64::try_from(b).unwrap())
            .collect();
        assert_eq!(seq, vec![1, 6, 18, 38]);
    }

    #[test]
    fn torus_preverify_ok() {
        let schema = builtin_torus_434();
        let mut graphs = vec![CellGraph::new(schema.clone(), 0).unwrap()];
        let (rts, _, _) = candidate_at_radius(&mut graphs, &schema, 8).unwrap();
        assert_eq!(preverify(&rts, &mut graphs, 3).unwrap(), None);
    }
}
