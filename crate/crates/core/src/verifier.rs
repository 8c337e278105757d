//! Transducer-based verification of an extended GRTS: per-face neighbor
//! transducers built from Myhill-Nerode keys, composition along edge
//! cycles, and equivalence with the identity relation.

use crate::mat::{Mat4, MatError, QuantMap};
use crate::rts::{Rts, RtsError, Rule, Word};
use crate::schema::{HoneycombSchema, SchemaError};
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use thiserror::Error;

/// Padding letter for the shorter side of an aligned word pair.
pub const PAD: u8 = u8::MAX;

/// Quantization of relative isometries in Myhill-Nerode keys. Every
/// intermediate product is snapped back to a registered representative,
/// so float error never accumulates along a word; the tolerance only has
/// to absorb one multiplication step, and the band only has to stay
/// below the gap between genuinely distinct isometries.
pub const MN_QUANT: f64 = 1e-8;
const MN_BAND: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("transducer state cap {0} exceeded")]
    StateCapExceeded(usize),
    #[error("subset search cap exceeded during verification")]
    SearchCapExceeded,
    #[error("precision ambiguity while quantizing a relative isometry")]
    Precision,
    #[error("relative distance annotation violated at word {0:?}")]
    DistanceViolation(Word),
    #[error("transducer accepts two different neighbors for word {0:?}")]
    FunctionalityViolation(Word),
    #[error(transparent)]
    Rts(RtsError),
    #[error(transparent)]
    Schema(#[from] SchemaError),
}

impl From<MatError> for VerifyError {
    fn from(_: MatError) -> VerifyError {
        VerifyError::Precision
    }
}

impl From<RtsError> for VerifyError {
    fn from(e: RtsError) -> VerifyError {
        VerifyError::Rts(e)
    }
}

/// A transducer over aligned letter pairs; one start state set per root
/// type. Nondeterministic: end-of-word flags live in the states, so one
/// letter pair may have several successors.
#[derive(Debug, Clone)]
pub struct Transducer {
    pub starts: Vec<Vec<usize>>,
    pub trans: Vec<BTreeMap<(u8, u8), Vec<usize>>>,
    pub accepting: Vec<bool>,
}

impl Transducer {
    pub fn num_states(&self) -> usize {
        self.trans.len()
    }
}

/// Builder state: states are identified by their Myhill-Nerode key
/// (the two automaton states, end-of-word flags, and the quantized
/// relative isometry between the two current cells).
struct Builder<'a> {
    rts: &'a Rts,
    schema: &'a HoneycombSchema,
    face: usize,
    cap: usize,
    registry: QuantMap<usize>,
    reg_vals: Vec<Mat4>,
    keys: HashMap<(usize, usize, bool, bool, usize), usize>,
    trans: Vec<BTreeMap<(u8, u8), Vec<usize>>>,
    accepting: Vec<bool>,
    starts: Vec<Vec<usize>>,
}

impl<'a> Builder<'a> {
    fn new(rts: &'a Rts, schema: &'a HoneycombSchema, face: usize, cap: usize) -> Builder<'a> {
        Builder {
            rts,
            schema,
            face,
            cap,
            registry: QuantMap::new(MN_QUANT, MN_BAND),
            reg_vals: vec![],
            keys: HashMap::new(),
            trans: vec![],
            accepting: vec![],
            starts: vec![vec![]; rts.roots.len()],
        }
    }

    /// Snap a freshly computed relative isometry onto its registered
    /// representative (registering it on first sight), so that float
    /// error does not accumulate along long words.
    fn snap(&mut self, j: &Mat4) -> Result<(usize, Mat4), VerifyError> {
        if let Some(&id) = self.registry.get(j)? {
            return Ok((id, self.reg_vals[id]));
        }
        let id = self.reg_vals.len();
        self.registry.insert(*j, id);
        self.reg_vals.push(*j);
        Ok((id, *j))
    }

    fn state_for(
        &mut self,
        qw: usize,
        qu: usize,
        wd: bool,
        ud: bool,
        jid: usize,
    ) -> Result<usize, VerifyError> {
        if let Some(&s) = self.keys.get(&(qw, qu, wd, ud, jid)) {
            return Ok(s);
        }
        let s = self.trans.len();
        if s >= self.cap {
            return Err(VerifyError::StateCapExceeded(self.cap));
        }
        self.keys.insert((qw, qu, wd, ud, jid), s);
        self.trans.push(BTreeMap::new());
        self.accepting.push(false);
        Ok(s)
    }

    /// Thread the aligned pair (w, nu(w, face)) into the transducer.
    fn thread(&mut self, w: &Word) -> Result<(), VerifyError> {
        let u = match self.rts.word_neighbor(w, self.face) {
            Ok(u) => u,
            Err(RtsError::DistanceViolation { .. } | RtsError::BudgetExceeded) => {
                return Err(VerifyError::DistanceViolation(w.clone()));
            }
            Err(e) => return Err(e.into()),
        };
        let m = w.path.len().max(u.path.len());
        let mut qw = self.rts.roots[w.root_type];
        let mut qu = qw;
        let mut j = Mat4::identity();
        let (mut jid, snapped) = self.snap(&j)?;
        j = snapped;
        let mut cur = self.state_for(qw, qu, w.path.is_empty(), u.path.is_empty(), jid)?;
        if !self.starts[w.root_type].contains(&cur) {
            self.starts[w.root_type].push(cur);
        }
        for i in 0..m {
            let a = w.path.get(i).copied();
            let b = u.path.get(i).copied();
            let cw = match a {
                Some(f) => {
                    let t = self.rts.states[qw].cell_type;
                    let c = self.schema.gluing[t][f];
                    qw = match self.rts.states[qw].rules[f] {
                        Rule::Child(q2) => q2,
                        _ => return Err(RtsError::NotInTree(i).into()),
                    };
                    c
                }
                None => Mat4::identity(),
            };
            let cu = match b {
                Some(f) => {
                    let t = self.rts.states[qu].cell_type;
                    let c = self.schema.gluing[t][f];
                    qu = match self.rts.states[qu].rules[f] {
                        Rule::Child(q2) => q2,
                        _ => return Err(RtsError::NotInTree(i).into()),
                    };
                    c
                }
                None => Mat4::identity(),
            };
            let (njid, snapped) = self.snap(&cw.inv()?.mul(&j).mul(&cu))?;
            jid = njid;
            j = snapped;
            let next = self.state_for(qw, qu, i + 1 >= w.path.len(), i + 1 >= u.path.len(), jid)?;
            let letter = (a.map_or(PAD, |x| x as u8), b.map_or(PAD, |x| x as u8));
            let e = self.trans[cur].entry(letter).or_default();
            if !e.contains(&next) {
                e.push(next);
            }
            cur = next;
        }
        self.accepting[cur] = true;
        Ok(())
    }

    fn finish(self) -> Transducer {
        Transducer { starts: self.starts, trans: self.trans, accepting: self.accepting }
    }
}

/// States from which an accepting state is reachable consuming only
/// PAD input letters (i.e. completions of an already-exhausted w).
fn pad_tail_accepting(t: &Transducer) -> Vec<bool> {
    let mut ok = t.accepting.clone();
    loop {
        let mut changed = false;
        for s in 0..t.trans.len() {
            if ok[s] {
                continue;
            }
            if t.trans[s].iter().any(|(&(a, _), ds)| a == PAD && ds.iter().any(|&d| ok[d])) {
                ok[s] = true;
                changed = true;
            }
        }
        if !changed {
            return ok;
        }
    }
}

/// Shortest tree words of type `t` not in the domain of the transducer
/// (up to `max_hits` of them), via subset search over the input
/// projection; None means the whole language is covered.
fn uncovered_words(
    rts: &Rts,
    t: usize,
    trans: &Transducer,
    max_hits: usize,
    cap: usize,
) -> Result<Vec<Word>, VerifyError> {
    let tail = pad_tail_accepting(trans);
    let mut hits = vec![];
    let mut seen: HashSet<(usize, Vec<usize>)> = HashSet::new();
    let mut queue: VecDeque<(usize, Vec<usize>, Word)> = VecDeque::new();
    for (rt, &rq) in rts.roots.iter().enumerate() {
        let mut s: Vec<usize> = trans.starts[rt].clone();
        s.sort_unstable();
        if seen.insert((rq, s.clone())) {
            queue.push_back((rq, s, Word { root_type: rt, path: vec![] }));
        }
    }
    while let Some((q, set, w)) = queue.pop_front() {
        if rts.states[q].cell_type == t && !set.iter().any(|&s| tail[s]) {
            hits.push(w.clone());
            if hits.len() >= max_hits {
                return Ok(hits);
            }
            continue; // descendants are threaded after this word is
        }
        for (f, rule) in rts.states[q].rules.iter().enumerate() {
            let Rule::Child(q2) = rule else { continue };
            let mut set2: BTreeSet<usize> = BTreeSet::new();
            for &s in &set {
                for (&(a, _), ds) in &trans.trans[s] {
                    if a == f as u8 {
                        set2.extend(ds);
                    }
                }
            }
            let set2: Vec<usize> = set2.into_iter().collect();
            if seen.insert((*q2, set2.clone())) {
                if seen.len() > cap {
                    return Err(VerifyError::SearchCapExceeded);
                }
                let mut w2 = w.clone();
                w2.path.push(f);
                queue.push_back((*q2, set2, w2));
            }
        }
    }
    Ok(hits)
}

/// Single-valuedness check: search the self-product for two accepted
/// pairs with the same input projection but different outputs.
fn check_functional(t: &Transducer) -> Result<(), VerifyError> {
    let tail = pad_tail_accepting(t);
    // a strict pad tail: at least one further PAD-input step to acceptance
    let pad_plus: Vec<bool> = (0..t.trans.len())
        .map(|s| t.trans[s].iter().any(|(&(a, _), ds)| a == PAD && ds.iter().any(|&d| tail[d])))
        .collect();
    let mut seen = HashSet::new();
    let mut queue = VecDeque::new();
    for starts in &t.starts {
        for &s1 in starts {
            for &s2 in starts {
                if seen.insert((s1, s2, false)) {
                    queue.push_back((s1, s2, false, vec![]));
                }
            }
        }
    }
    while let Some((s1, s2, diff, w)) = queue.pop_front() {
        let both = t.accepting[s1] && t.accepting[s2] && diff;
        let skew = (t.accepting[s1] && pad_plus[s2]) || (t.accepting[s2] && pad_plus[s1]);
        if both || skew {
            return Err(VerifyError::FunctionalityViolation(Word {
                root_type: 0,
                path: w.iter().filter(|&&a| a != PAD).map(|&a| a as usize).collect(),
            }));
        }
        for (&(a1, b1), d1s) in &t.trans[s1] {
            for (&(a2, b2), d2s) in &t.trans[s2] {
                if a1 != a2 {
                    continue;
                }
                let diff2 = diff || b1 != b2;
                for &d1 in d1s {
                    for &d2 in d2s {
                        if seen.insert((d1, d2, diff2)) {
                            let mut w2 = w.clone();
                            w2.push(a1);
                            queue.push_back((d1, d2, diff2, w2));
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

/// Build the transducer recognizing {(w, nu(w, f)) : t(w) = t}: thread a
/// seed set of short words, then iterate uncovered-word search until the
/// input projection covers the whole type-t language.
pub fn build_transducer(
    rts: &Rts,
    schema: &HoneycombSchema,
    t: usize,
    f: usize,
    cap: usize,
) -> Result<Transducer, VerifyError> {
    let mut b = Builder::new(rts, schema, f, cap);
    for w in seed_words(rts, t, 4000) {
        b.thread(&w)?;
    }
    loop {
        let t2 = b.finish_view();
        let missing = uncovered_words(rts, t, &t2, 64, 1_000_000)?;
        if std::env::var("GRTS_DEBUG").is_ok() {
            eprintln!("  build ({t},{f}): {} states, {} uncovered", b.trans.len(), missing.len());
        }
        if missing.is_empty() {
            break;
        }
        for w in missing {
            b.thread(&w)?;
        }
    }
    let out = b.finish();
    check_functional(&out)?;
    Ok(out)
}

impl<'a> Builder<'a> {
    fn finish_view(&self) -> Transducer {
        Transducer {
            starts: self.starts.clone(),
            trans: self.trans.clone(),
            accepting: self.accepting.clone(),
        }
    }
}

/// All tree words of type t, breadth-first, up to a count budget.
fn seed_words(rts: &Rts, t: usize, budget: usize) -> Vec<Word> {
    let mut out = vec![];
    let mut queue: VecDeque<(usize, Word)> = rts
        .roots
        .iter()
        .enumerate()
        .map(|(rt, &q)| (q, Word { root_type: rt, path: vec![] }))
        .collect();
    let mut total = 0;
    while let Some((q, w)) = queue.pop_front() {
        if rts.states[q].cell_type == t {
            out.push(w.clone());
        }
        total += 1;
        if total >= budget {
            break;
        }
        for (f, rule) in rts.states[q].rules.iter().enumerate() {
            if let Rule::Child(q2) = rule {
                let mut w2 = w.clone();
                w2.path.push(f);
                queue.push_back((*q2, w2));
            }
        }
    }
    out
}

/// A pair-letter NFA (composition results are nondeterministic).
#[derive(Debug, Clone)]
pub struct PairNfa {
    pub starts: Vec<Vec<usize>>,
    pub trans: Vec<HashMap<(u8, u8), Vec<usize>>>,
    pub accepting: Vec<bool>,
}

impl PairNfa {
    pub fn from_transducer(t: &Transducer) -> PairNfa {
        PairNfa {
            starts: t.starts.clone(),
            trans: t
                .trans
                .iter()
                .map(|m| m.iter().map(|(&l, ds)| (l, ds.clone())).collect())
                .collect(),
            accepting: t.accepting.clone(),
        }
    }
}

/// The identity relation on type-t tree words, read off the GRTS itself.
pub fn identity_nfa(rts: &Rts, t: usize) -> PairNfa {
    let mut trans: Vec<HashMap<(u8, u8), Vec<usize>>> = vec![HashMap::new(); rts.states.len()];
    for (q, s) in rts.states.iter().enumerate() {
        for (f, rule) in s.rules.iter().enumerate() {
            if let Rule::Child(q2) = rule {
                trans[q].insert((f as u8, f as u8), vec![*q2]);
            }
        }
    }
    PairNfa {
        starts: rts.roots.iter().map(|&r| vec![r]).collect(),
        trans,
        accepting: rts.states.iter().map(|s| s.cell_type == t).collect(),
    }
}

/// Relational composition: pairs (w, v) such that (w, u) in A and
/// (u, v) in B for some u. The two factors consume the shared middle
/// tape synchronously; trailing-pad steps on either side are buffered
/// (the skew is bounded for neighbor relations) and re-paired into a
/// canonically padded output word. Buffered-only steps become epsilon
/// moves, eliminated at the end.
pub fn compose(a: &PairNfa, b: &PairNfa) -> PairNfa {
    type PState = (usize, usize, Vec<u8>, Vec<u8>);
    const SKEW_CAP: usize = 16;
    let mut index: HashMap<PState, usize> = HashMap::new();
    let mut trans: Vec<HashMap<(u8, u8), Vec<usize>>> = vec![];
    let mut eps: Vec<Vec<usize>> = vec![];
    let mut accepting = vec![];
    let mut queue: VecDeque<PState> = VecDeque::new();
    let mut starts = vec![vec![]; a.starts.len()];
    let state = |index: &mut HashMap<PState, usize>,
                     trans: &mut Vec<HashMap<(u8, u8), Vec<usize>>>,
                     eps: &mut Vec<Vec<usize>>,
                     accepting: &mut Vec<bool>,
                     queue: &mut VecDeque<PState>,
                     p: PState|
     -> usize {
        *index.entry(p.clone()).or_insert_with(|| {
            trans.push(HashMap::new());
            eps.push(vec![]);
            accepting.push(a.accepting[p.0] && b.accepting[p.1] && p.2.is_empty() && p.3.is_empty());
            queue.push_back(p);
            trans.len() - 1
        })
    };
    for (rt, sa) in a.starts.iter().enumerate() {
        for &s1 in sa {
            for &s2 in &b.starts[rt] {
                let id = state(
                    &mut index,
                    &mut trans,
                    &mut eps,
                    &mut accepting,
                    &mut queue,
                    (s1, s2, vec![], vec![]),
                );
                starts[rt].push(id);
            }
        }
    }
    while let Some(st) = queue.pop_front() {
        let id = index[&st];
        let (s1, s2, xq, yq) = st;
        // moves: (letter or epsilon, successor)
        let mut moves: Vec<(Option<(u8, u8)>, PState)> = vec![];
        for (&(x, m), d1s) in &a.trans[s1] {
            if m != PAD {
                // synchronized middle-tape step
                if xq.is_empty() && yq.is_empty() {
                    for (&(m2, y), d2s) in &b.trans[s2] {
                        if m2 != m {
                            continue;
                        }
                        for &d1 in d1s {
                            for &d2 in d2s {
                                let l = if x == PAD && y == PAD { None } else { Some((x, y)) };
                                moves.push((l, (d1, d2, vec![], vec![])));
                            }
                        }
                    }
                }
            } else {
                // left tail: A continues while the middle tape is done
                for &d1 in d1s {
                    if let Some((&y0, yrest)) = yq.split_first() {
                        moves.push((Some((x, y0)), (d1, s2, xq.clone(), yrest.to_vec())));
                    } else if xq.len() < SKEW_CAP {
                        let mut xq2 = xq.clone();
                        xq2.push(x);
                        moves.push((None, (d1, s2, xq2, vec![])));
                    }
                }
            }
        }
        for (&(m, y), d2s) in &b.trans[s2] {
            if m != PAD {
                continue;
            }
            // right tail: B continues while the middle tape is done
            for &d2 in d2s {
                if let Some((&x0, xrest)) = xq.split_first() {
                    moves.push((Some((x0, y)), (s1, d2, xrest.to_vec(), yq.clone())));
                } else if yq.len() < SKEW_CAP {
                    let mut yq2 = yq.clone();
                    yq2.push(y);
                    moves.push((None, (s1, d2, vec![], yq2)));
                }
            }
        }
        // flush leftover buffered letters once both factors accepted
        if a.accepting[s1] && b.accepting[s2] {
            if let Some((&x0, xrest)) = xq.split_first() {
                moves.push((Some((x0, PAD)), (s1, s2, xrest.to_vec(), yq.clone())));
            }
            if let Some((&y0, yrest)) = yq.split_first() {
                if xq.is_empty() {
                    moves.push((Some((PAD, y0)), (s1, s2, vec![], yrest.to_vec())));
                }
            }
        }
        for (letter, p) in moves {
            let d = state(&mut index, &mut trans, &mut eps, &mut accepting, &mut queue, p);
            match letter {
                Some(l) => {
                    let e = trans[id].entry(l).or_default();
                    if !e.contains(&d) {
                        e.push(d);
                    }
                }
                None => {
                    if !eps[id].contains(&d) {
                        eps[id].push(d);
                    }
                }
            }
        }
    }
    // epsilon elimination
    let n = trans.len();
    let closure: Vec<Vec<usize>> = (0..n)
        .map(|s| {
            let mut cl = vec![s];
            let mut stack = vec![s];
            while let Some(x) = stack.pop() {
                for &y in &eps[x] {
                    if !cl.contains(&y) {
                        cl.push(y);
                        stack.push(y);
                    }
                }
            }
            cl
        })
        .collect();
    let mut out_trans: Vec<HashMap<(u8, u8), Vec<usize>>> = vec![HashMap::new(); n];
    let mut out_acc = vec![false; n];
    for s in 0..n {
        for &c in &closure[s] {
            out_acc[s] |= accepting[c];
            for (&l, ds) in &trans[c] {
                let e = out_trans[s].entry(l).or_default();
                for &d in ds {
                    if !e.contains(&d) {
                        e.push(d);
                    }
                }
            }
        }
    }
    trim(PairNfa { starts, trans: out_trans, accepting: out_acc })
}

/// Drop states that are unreachable from a start or cannot reach an
/// accepting state, then merge states with identical outgoing behavior
/// (a one-pass backward-bisimulation reduction, iterated to a fixpoint).
/// Composition products are dominated by such dead and duplicate states.
pub fn trim(nfa: PairNfa) -> PairNfa {
    let n = nfa.trans.len();
    let mut fwd = vec![false; n];
    let mut stack: Vec<usize> = nfa.starts.iter().flatten().copied().collect();
    for &s in &stack {
        fwd[s] = true;
    }
    while let Some(s) = stack.pop() {
        for ds in nfa.trans[s].values() {
            for &d in ds {
                if !fwd[d] {
                    fwd[d] = true;
                    stack.push(d);
                }
            }
        }
    }
    let mut preds: Vec<Vec<usize>> = vec![vec![]; n];
    for (s, m) in nfa.trans.iter().enumerate() {
        for ds in m.values() {
            for &d in ds {
                preds[d].push(s);
            }
        }
    }
    let mut bwd = vec![false; n];
    let mut stack: Vec<usize> = (0..n).filter(|&s| nfa.accepting[s]).collect();
    for &s in &stack {
        bwd[s] = true;
    }
    while let Some(s) = stack.pop() {
        for &p in &preds[s] {
            if !bwd[p] {
                bwd[p] = true;
                stack.push(p);
            }
        }
    }
    // class id per state; dead states map to None
    let mut class: Vec<Option<usize>> = (0..n)
        .map(|s| if fwd[s] && bwd[s] { Some(0) } else { None })
        .collect();
    let mut num_classes = 1;
    loop {
        type Sig = (bool, Vec<((u8, u8), Vec<usize>)>);
        let mut sig_ids: HashMap<Sig, usize> = HashMap::new();
        let mut next: Vec<Option<usize>> = vec![None; n];
        for s in 0..n {
            if class[s].is_none() {
                continue;
            }
            let mut edges: BTreeMap<(u8, u8), BTreeSet<usize>> = BTreeMap::new();
            for (&l, ds) in &nfa.trans[s] {
                for &d in ds {
                    if let Some(c) = class[d] {
                        edges.entry(l).or_default().insert(c);
                    }
                }
            }
            let sig: Sig = (
                nfa.accepting[s],
                edges.into_iter().map(|(l, cs)| (l, cs.into_iter().collect())).collect(),
            );
            let nid = sig_ids.len();
            next[s] = Some(*sig_ids.entry(sig).or_insert(nid));
        }
        let nc = sig_ids.len();
        if nc == num_classes {
            class = next;
            break;
        }
        num_classes = nc;
        class = next;
    }
    let mut trans: Vec<HashMap<(u8, u8), Vec<usize>>> = vec![HashMap::new(); num_classes];
    let mut accepting = vec![false; num_classes];
    for s in 0..n {
        let Some(c) = class[s] else { continue };
        accepting[c] |= nfa.accepting[s];
        for (&l, ds) in &nfa.trans[s] {
            let e = trans[c].entry(l).or_default();
            for &d in ds {
                if let Some(cd) = class[d] {
                    if !e.contains(&cd) {
                        e.push(cd);
                    }
                }
            }
        }
    }
    let starts = nfa
        .starts
        .iter()
        .map(|sa| {
            let mut v: Vec<usize> = sa.iter().filter_map(|&s| class[s]).collect();
            v.sort_unstable();
            v.dedup();
            v
        })
        .collect();
    PairNfa { starts, trans, accepting }
}

/// Language equivalence of two pair NFAs; returns the shortest (then
/// lexicographically first) pair word in the symmetric difference.
pub fn equivalent(
    a: &PairNfa,
    b: &PairNfa,
    cap: usize,
) -> Result<Option<Vec<(u8, u8)>>, VerifyError> {
    let start_a: Vec<usize> = {
        let mut v: Vec<usize> = a.starts.iter().flatten().copied().collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let start_b: Vec<usize> = {
        let mut v: Vec<usize> = b.starts.iter().flatten().copied().collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let mut seen = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert((start_a.clone(), start_b.clone()));
    queue.push_back((start_a, start_b, vec![]));
    while let Some((sa, sb, w)) = queue.pop_front() {
        let acc_a = sa.iter().any(|&s| a.accepting[s]);
        let acc_b = sb.iter().any(|&s| b.accepting[s]);
        if acc_a != acc_b {
            return Ok(Some(w));
        }
        let mut letters: BTreeSet<(u8, u8)> = BTreeSet::new();
        for &s in &sa {
            letters.extend(a.trans[s].keys());
        }
        for &s in &sb {
            letters.extend(b.trans[s].keys());
        }
        for l in letters {
            let step = |nfa: &PairNfa, set: &[usize]| -> Vec<usize> {
                let mut out: BTreeSet<usize> = BTreeSet::new();
                for &s in set {
                    if let Some(ds) = nfa.trans[s].get(&l) {
                        out.extend(ds);
                    }
                }
                out.into_iter().collect()
            };
            let na = step(a, &sa);
            let nb = step(b, &sb);
            if seen.insert((na.clone(), nb.clone())) {
                if seen.len() > cap {
                    return Err(VerifyError::SearchCapExceeded);
                }
                let mut w2 = w.clone();
                w2.push(l);
                queue.push_back((na, nb, w2));
            }
        }
    }
    Ok(None)
}

#[derive(Debug, Clone)]
pub struct CycleCheck {
    pub cell_type: usize,
    pub cycle: Vec<usize>,
    pub ok: bool,
    pub witness: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    /// ((type, face), transducer states)
    pub transducer_sizes: Vec<((usize, usize), usize)>,
    pub cycles: Vec<CycleCheck>,
    pub failures: Vec<String>,
    /// words exercised by the optional exhaustive distance pass
    pub dist_checked: usize,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty() && self.cycles.iter().all(|c| c.ok)
    }

    pub fn to_json(&self) -> String {
        let mut s = String::from("{\"cycles\":[");
        for (i, c) in self.cycles.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push_str(&format!(
                "{{\"cycle\":{:?},\"ok\":{},\"type\":{}{}}}",
                c.cycle,
                c.ok,
                c.cell_type,
                c.witness
                    .as_ref()
                    .map_or(String::new(), |w| format!(",\"witness\":{}", json_str(w)))
            ));
        }
        s.push_str(&format!("],\"dist_checked\":{},\"failures\":[", self.dist_checked));
        for (i, f) in self.failures.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push_str(&json_str(f));
        }
        s.push_str(&format!("],\"ok\":{},\"transducers\":[", self.ok()));
        for (i, ((t, f), n)) in self.transducer_sizes.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push_str(&format!("{{\"face\":{f},\"states\":{n},\"type\":{t}}}"));
        }
        s.push_str("]}");
        s
    }
}

fn json_str(s: &str) -> String {
    serde_json::Value::String(s.to_string()).to_string()
}

fn fmt_pair_word(w: &[(u8, u8)]) -> String {
    let side = |v: Vec<u8>| -> String {
        v.iter()
            .map(|&x| if x == PAD { "_".into() } else { x.to_string() })
            .collect::<Vec<_>>()
            .join(".")
    };
    format!(
        "{}|{}",
        side(w.iter().map(|p| p.0).collect()),
        side(w.iter().map(|p| p.1).collect())
    )
}

/// Full verification: structural invariants, neighbor transducers for
/// every (type, face), and edge-cycle compositions against the identity.
pub fn verify(
    rts: &Rts,
    schema: &HoneycombSchema,
    state_cap: usize,
    full_dist_check: bool,
) -> Result<VerifyReport, VerifyError> {
    let mut report = VerifyReport::default();
    if let Err(e) = rts.structural_check(schema) {
        report.failures.push(e.to_string());
        return Ok(report);
    }
    let mut transducers: HashMap<(usize, usize), Transducer> = HashMap::new();
    for t in 0..schema.num_types() {
        for f in 0..schema.num_faces() {
            match build_transducer(rts, schema, t, f, state_cap) {
                Ok(tr) => {
                    if std::env::var("GRTS_DEBUG").is_ok() {
                        eprintln!("transducer ({t},{f}): {} states", tr.num_states());
                    }
                    report.transducer_sizes.push(((t, f), tr.num_states()));
                    transducers.insert((t, f), tr);
                }
                Err(VerifyError::DistanceViolation(w)) => {
                    report.failures.push(format!(
                        "distance annotation violated near word {:?} (type {t}, face {f})",
                        w.path
                    ));
                    return Ok(report);
                }
                Err(VerifyError::FunctionalityViolation(w)) => {
                    report.failures.push(format!(
                        "neighbor relation not functional near word {:?} (type {t}, face {f})",
                        w.path
                    ));
                    return Ok(report);
                }
                Err(e) => return Err(e),
            }
        }
    }
    for t in 0..schema.num_types() {
        for cycle in schema.edge_cycles_for(t)? {
            let mut nfa = trim(PairNfa::from_transducer(&transducers[&(t, cycle[0])]));
            let mut ti = schema.nu(t, cycle[0]);
            for &f in &cycle[1..] {
                nfa = compose(&nfa, &trim(PairNfa::from_transducer(&transducers[&(ti, f)])));
                ti = schema.nu(ti, f);
                if std::env::var("GRTS_DEBUG").is_ok() {
                    eprintln!("cycle {cycle:?}: composed through face {f}, {} states", nfa.trans.len());
                }
            }
            debug_assert_eq!(ti, t);
            let witness = equivalent(&nfa, &identity_nfa(rts, t), 2_000_000)?;
            report.cycles.push(CycleCheck {
                cell_type: t,
                cycle: cycle.clone(),
                ok: witness.is_none(),
                witness: witness.map(|w| fmt_pair_word(&w)),
            });
        }
    }
    if full_dist_check {
        for t in 0..schema.num_types() {
            for w in seed_words(rts, t, 10_000) {
                for f in 0..schema.num_faces() {
                    match rts.word_neighbor(&w, f) {
                        Ok(_) => report.dist_checked += 1,
                        Err(RtsError::DistanceViolation { .. } | RtsError::BudgetExceeded) => {
                            report
                                .failures
                                .push(format!("distance violation at word {:?} face {f}", w.path));
                            return Ok(report);
                        }
                        Err(e) => return Err(e.into()),
                    }
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::CellGraph;
    use crate::learner;
    use crate::schema::builtin_torus_434;

    fn torus_rts() -> (Rts, HoneycombSchema) {
        let schema = builtin_torus_434();
        let (rts, _) = learner::learn_loop(&schema, &learner::LearnConfig::default()).unwrap();
        (rts, schema)
    }

    #[test]
    fn torus_learn_and_verify() {
        let (rts, schema) = torus_rts();
        let report = verify(&rts, &schema, 100_000, true).unwrap();
        assert!(report.ok(), "failures: {:?}", report.failures);
        assert!(report.dist_checked > 0);
    }

    #[test]
    fn torus_coordination_matches_bfs() {
        let (rts, schema) = torus_rts();
        let seq = rts.coordination(0, 6);
        let mut g = CellGraph::new(schema, 0).unwrap();
        g.ensure_ball(0, 7).unwrap();
        let exact = g.bfs_dist_from(0);
        for (k, n) in seq.iter().enumerate() {
            let count = exact.iter().filter(|d| **d == Some(k)).count();
            assert_eq!(n, &num_bigint::BigUint::from(count));
        }
    }

    #[test]
    fn fault_injection_detected() {
        let (rts, schema) = torus_rts();
        // tamper: swap a side rule's distance annotation
        let mut bad = rts.clone();
        let mut tampered = false;
        'outer: for s in &mut bad.states {
            for r in &mut s.rules {
                if let Rule::Side { dist, .. } = r {
                    if dist.len() >= 2 {
                        dist[1] -= 1;
                        tampered = true;
                        break 'outer;
                    }
                }
            }
        }
        assert!(tampered);
        let report = verify(&bad, &schema, 100_000, false).unwrap();
        assert!(!report.ok());
    }

    #[test]
    fn identity_equivalence_of_identity() {
        let (rts, _) = torus_rts();
        let a = identity_nfa(&rts, 0);
        assert_eq!(equivalent(&a, &a, 100_000).unwrap(), None);
    }
}
