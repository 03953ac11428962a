//! Path words in the fundamental groupoid of a graph of groups, in coset
//! normal form.
//!
//! A word `g_1 t_{e_1} g_2 t_{e_2} ... g_n t_{e_n} g` alternates vertex-group
//! elements and edge symbols subject to `t_{e-} = t_e^{-1}` and
//! `t_e rho_e(a) t_e^{-1} = rho_{e-}(a)`. In normal form every `g_i` is the
//! minimal representative of its coset of the edge-image subgroup, and no
//! trivial-coset backtrack `t_e .. t_{e-}` remains. Normal forms are unique,
//! which settles the word problem; Bass-Serre tree vertices are exactly the
//! normal words with trivial tail, so all tree geometry is prefix arithmetic
//! on words.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::gog::{EId, Quotient, VId};
use crate::group::Elt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Step {
    pub rep: Elt,
    pub e: EId,
}

/// A groupoid element from `start` to the terminal vertex of its last step.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word {
    pub start: VId,
    pub steps: Vec<Step>,
    pub tail: Elt,
}

impl Word {
    pub fn vertex(start: VId) -> Self {
        Word { start, steps: Vec::new(), tail: 0 }
    }

    pub fn is_vertex_word(&self) -> bool {
        self.tail == 0
    }

    /// The underlying tree vertex (drops the tail).
    pub fn to_vertex(&self) -> Word {
        Word { start: self.start, steps: self.steps.clone(), tail: 0 }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// A directed edge of the Bass-Serre tree: at the vertex `origin`, the lift
/// of the quotient edge `e` selected by the coset representative `rep`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TreeEdge {
    pub origin: Word,
    pub rep: Elt,
    pub e: EId,
}

impl TreeEdge {
    /// The edge frame: the groupoid word from the basepoint to the origin of
    /// the covered quotient edge, ending with the selecting representative.
    pub fn frame(&self) -> Word {
        Word { start: self.origin.start, steps: self.origin.steps.clone(), tail: self.rep }
    }
}

struct EdgeTable {
    /// Sorted canonical (minimal) representatives of the left cosets of the
    /// edge-image subgroup at the origin.
    reps: Vec<Elt>,
    /// decomp[g] = (rep, a) with g = rep * rho_rev(a).
    decomp: Vec<(Elt, Elt)>,
    /// Sorted image of rho_rev inside the origin group.
    image: Vec<Elt>,
}

/// Word arithmetic context over an expanded quotient.
pub struct Frames<'q> {
    pub q: &'q Quotient,
    tables: Vec<Option<EdgeTable>>,
    parent_paths: Vec<Vec<Step>>,
    /// Edge id of the canonical orientation of each edge pair (the smaller id).
    canonical: Vec<EId>,
}

impl<'q> Frames<'q> {
    pub fn new(q: &'q Quotient) -> Result<Frames<'q>> {
        let mut tables = Vec::with_capacity(q.edges.len());
        for e in 0..q.edges.len() {
            tables.push(Self::build_table(q, e)?);
        }
        // Deterministic BFS spanning tree from the basepoint.
        let mut parent: Vec<Option<EId>> = vec![None; q.verts.len()];
        let mut order = vec![q.basepoint];
        let mut seen = vec![false; q.verts.len()];
        seen[q.basepoint] = true;
        let mut i = 0;
        while i < order.len() {
            let v = order[i];
            i += 1;
            for (eid, e) in q.edges.iter().enumerate() {
                if e.from == v && !seen[e.to] {
                    seen[e.to] = true;
                    parent[e.to] = Some(eid);
                    order.push(e.to);
                }
            }
        }
        let mut parent_paths: Vec<Vec<Step>> = vec![Vec::new(); q.verts.len()];
        for &v in &order {
            if let Some(eid) = parent[v] {
                let mut path = parent_paths[q.edges[eid].from].clone();
                path.push(Step { rep: 0, e: eid });
                parent_paths[v] = path;
            }
        }
        let canonical = (0..q.edges.len()).map(|e| e.min(q.edges[e].rev)).collect();
        Ok(Frames { q, tables, parent_paths, canonical })
    }

    fn build_table(q: &Quotient, e: EId) -> Result<Option<EdgeTable>> {
        let from = q.edges[e].from;
        let g = match q.vertex_group(from) {
            Some(g) => g,
            None => return Ok(None),
        };
        let rev = q.rev(e);
        let rho_rev = match &q.edges[rev].rho {
            Some(h) => h,
            None => return Ok(None),
        };
        let image = rho_rev.image();
        let n = g.order();
        let mut coset_rep = vec![Elt::MAX; n];
        let mut reps = Vec::new();
        for x in 0..n as Elt {
            if coset_rep[x as usize] != Elt::MAX {
                continue;
            }
            // x is minimal in its coset since we scan in increasing order.
            reps.push(x);
            for &j in &image {
                let y = g.mul(x, j);
                coset_rep[y as usize] = x;
            }
        }
        let mut decomp = Vec::with_capacity(n);
        for x in 0..n as Elt {
            let rep = coset_rep[x as usize];
            let j = g.mul(g.inv(rep), x);
            let a = rho_rev
                .preimage(j)
                .ok_or_else(|| Error::invalid("edge image decomposition failed"))?;
            decomp.push((rep, a));
        }
        Ok(Some(EdgeTable { reps, decomp, image }))
    }

    fn table(&self, e: EId) -> Result<&EdgeTable> {
        self.tables[e].as_ref().ok_or_else(|| {
            Error::Unsupported(format!(
                "edge {} lies over an index-only ray; coset words unavailable",
                self.q.edges[e].name
            ))
        })
    }

    /// Coset representatives parametrizing the lifts of `e` at a tree vertex
    /// over its origin.
    pub fn lift_reps(&self, e: EId) -> Result<&[Elt]> {
        Ok(&self.table(e)?.reps)
    }

    pub(crate) fn decomp(&self, e: EId, g: Elt) -> Result<(Elt, Elt)> {
        Ok(self.table(e)?.decomp[g as usize])
    }

    pub(crate) fn edge_image_at_origin(&self, e: EId) -> Result<&[Elt]> {
        Ok(&self.table(e)?.image)
    }

    fn rho(&self, e: EId, a: Elt) -> Elt {
        self.q.edges[e].rho.as_ref().expect("group-backed edge").apply(a)
    }

    /// Normalizes an alternating raw word from `start`.
    pub fn normalize(
        &self,
        start: VId,
        raw: impl IntoIterator<Item = (Elt, EId)>,
        tail: Elt,
    ) -> Result<Word> {
        let mut at = start;
        let mut carry: Elt = 0;
        let mut out: Vec<Step> = Vec::new();
        for (g, e) in raw {
            if self.q.edges[e].from != at {
                return Err(Error::invalid(format!(
                    "word step {} does not start at the current vertex",
                    self.q.edges[e].name
                )));
            }
            let group = self
                .q
                .vertex_group(at)
                .ok_or_else(|| Error::Unsupported("index-only ray vertex in word".into()))?;
            let gt = group.mul(carry, g);
            let (rep, a) = self.decomp(e, gt)?;
            if rep == 0 {
                if let Some(last) = out.last().copied() {
                    if e == self.q.rev(last.e) {
                        // t_d rho_d(a) t_{d-} = rho_{d-}(a): splice into the
                        // previous vertex and cascade.
                        out.pop();
                        at = self.q.edges[last.e].from;
                        let pg = self
                            .q
                            .vertex_group(at)
                            .ok_or_else(|| Error::Unsupported("index-only ray vertex in word".into()))?;
                        carry = pg.mul(last.rep, self.rho(self.q.rev(last.e), a));
                        continue;
                    }
                }
            }
            out.push(Step { rep, e });
            at = self.q.edges[e].to;
            carry = self.rho(e, a);
        }
        let group = self
            .q
            .vertex_group(at)
            .ok_or_else(|| Error::Unsupported("index-only ray vertex in word".into()))?;
        Ok(Word { start, steps: out, tail: group.mul(carry, tail) })
    }

    pub fn end(&self, w: &Word) -> VId {
        w.steps.last().map(|s| self.q.edges[s.e].to).unwrap_or(w.start)
    }

    pub fn mul(&self, a: &Word, b: &Word) -> Result<Word> {
        if self.end(a) != b.start {
            return Err(Error::invalid("word composition endpoint mismatch"));
        }
        let mut raw: Vec<(Elt, EId)> = a.steps.iter().map(|s| (s.rep, s.e)).collect();
        let tail;
        if let Some(first) = b.steps.first() {
            let g = self.q.vertex_group(b.start).expect("group-backed").mul(a.tail, first.rep);
            raw.push((g, first.e));
            raw.extend(b.steps[1..].iter().map(|s| (s.rep, s.e)));
            tail = b.tail;
        } else {
            tail = self.q.vertex_group(b.start).expect("group-backed").mul(a.tail, b.tail);
        }
        self.normalize(a.start, raw, tail)
    }

    pub fn inv(&self, w: &Word) -> Result<Word> {
        let end = self.end(w);
        let mut raw: Vec<(Elt, EId)> = Vec::with_capacity(w.steps.len());
        let mut upcoming = self.q.vertex_group(end).expect("group-backed").inv(w.tail);
        for s in w.steps.iter().rev() {
            raw.push((upcoming, self.q.rev(s.e)));
            upcoming = self.q.vertex_group(self.q.edges[s.e].from).expect("group-backed").inv(s.rep);
        }
        self.normalize(end, raw, upcoming)
    }

    /// Spanning-tree word from the basepoint to `v`.
    pub fn parent_word(&self, v: VId) -> Word {
        Word { start: self.q.basepoint, steps: self.parent_paths[v].clone(), tail: 0 }
    }

    pub fn canonical_orientation(&self, e: EId) -> EId {
        self.canonical[e]
    }

    /// The chosen lift of quotient edge `e`, reversal-consistent across each
    /// edge pair: the canonical orientation lifts at the spanning-tree vertex
    /// lift of its origin, the other orientation is its reverse.
    pub fn edge_lift(&self, e: EId) -> Result<TreeEdge> {
        if self.canonical[e] == e {
            Ok(TreeEdge { origin: self.parent_word(self.q.edges[e].from), rep: 0, e })
        } else {
            let r = self.q.rev(e);
            let lift = TreeEdge { origin: self.parent_word(self.q.edges[r].from), rep: 0, e: r };
            self.reverse_edge(&lift)
        }
    }

    /// Word from the basepoint to the origin of `edge_lift(e)`, with trivial tail.
    pub fn edge_frame(&self, e: EId) -> Result<Word> {
        Ok(self.edge_lift(e)?.origin)
    }

    /// The element g_e with g_e * (tree lift of t(e)) = t(edge lift of e).
    pub fn g_edge(&self, e: EId) -> Result<Word> {
        let lift = self.edge_lift(e)?;
        let to_terminal = self.append_edge(&lift.frame(), lift.e)?;
        let back = self.inv(&self.parent_word(self.q.edges[e].to))?;
        self.mul(&to_terminal.to_vertex_word(), &back)
    }

    fn append_edge(&self, u: &Word, e: EId) -> Result<WordAndTail> {
        let mut raw: Vec<(Elt, EId)> = u.steps.iter().map(|s| (s.rep, s.e)).collect();
        raw.push((u.tail, e));
        let w = self.normalize(u.start, raw, 0)?;
        Ok(WordAndTail(w))
    }

    /// Terminal tree vertex of a tree edge.
    pub fn edge_target(&self, edge: &TreeEdge) -> Result<Word> {
        Ok(self.append_edge(&edge.frame(), edge.e)?.0.to_vertex())
    }

    pub fn reverse_edge(&self, edge: &TreeEdge) -> Result<TreeEdge> {
        let z = self.append_edge(&edge.frame(), edge.e)?.0;
        let rev = self.q.rev(edge.e);
        let (rep, _) = self.decomp(rev, z.tail)?;
        Ok(TreeEdge { origin: z.to_vertex(), rep, e: rev })
    }

    /// Left action of a groupoid element ending at the word's start vertex.
    pub fn act_vertex(&self, g: &Word, v: &Word) -> Result<Word> {
        Ok(self.mul(g, v)?.to_vertex())
    }

    pub fn act_edge(&self, g: &Word, edge: &TreeEdge) -> Result<TreeEdge> {
        let u = self.mul(g, &edge.frame())?;
        let (rep, _) = self.decomp(edge.e, u.tail)?;
        Ok(TreeEdge { origin: u.to_vertex(), rep, e: edge.e })
    }

    /// The basepoint loop p_v * g * p_v^{-1} for g in the group of `v`.
    pub fn elt_loop(&self, v: VId, g: Elt) -> Result<Word> {
        let p = self.parent_word(v);
        let with_tail = Word { start: p.start, steps: p.steps.clone(), tail: g };
        self.mul(&with_tail, &self.inv(&p)?)
    }

    /// Tree distance between two vertex words based at the basepoint.
    pub fn dist(&self, a: &Word, b: &Word) -> usize {
        let lcp = a
            .steps
            .iter()
            .zip(b.steps.iter())
            .take_while(|(x, y)| x == y)
            .count();
        a.steps.len() + b.steps.len() - 2 * lcp
    }

    /// Number of shared initial steps of two vertex words.
    pub fn common_prefix(&self, a: &Word, b: &Word) -> usize {
        a.steps.iter().zip(b.steps.iter()).take_while(|(x, y)| x == y).count()
    }

    /// All directed tree edges at a vertex: every quotient edge at the
    /// covered vertex with each lift representative.
    pub fn edges_at_vertex(&self, v: &Word) -> Result<Vec<TreeEdge>> {
        let qv = self.end(v);
        let mut out = Vec::new();
        for e in self.q.edges_at(qv) {
            for &rep in self.lift_reps(e)? {
                out.push(TreeEdge { origin: v.clone(), rep, e });
            }
        }
        Ok(out)
    }

    /// Pointwise stabilizer transported across one tree step: starting from a
    /// subgroup H of the origin's vertex group, the subgroup of the terminal
    /// vertex group fixing both the edge and everything H fixed.
    pub fn push_stabilizer(&self, h: &[Elt], step_rep: Elt, e: EId) -> Result<Vec<Elt>> {
        let from = self.q.edges[e].from;
        let g = self.q.vertex_group(from).expect("group-backed");
        let table = self.table(e)?;
        let mut out = Vec::new();
        for &x in h {
            let cx = g.conj(x, step_rep);
            if table.image.binary_search(&cx).is_ok() {
                let rev = self.q.rev(e);
                let a = self.q.edges[rev].rho.as_ref().unwrap().preimage(cx).unwrap();
                out.push(self.rho(e, a));
            }
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// Pulls one element of a pushed stabilizer back across the step.
    pub fn pull_stabilizer_elt(&self, h_after: Elt, step_rep: Elt, e: EId) -> Result<Elt> {
        let a = self.q.edges[e].rho.as_ref().unwrap().preimage(h_after).ok_or_else(|| {
            Error::invalid("stabilizer element does not come from the edge group")
        })?;
        let rev = self.q.rev(e);
        let from = self.q.edges[e].from;
        let g = self.q.vertex_group(from).expect("group-backed");
        let cx = self.q.edges[rev].rho.as_ref().unwrap().apply(a);
        Ok(g.conj(cx, g.inv(step_rep)))
    }
}

struct WordAndTail(Word);

impl WordAndTail {
    fn to_vertex_word(&self) -> Word {
        self.0.to_vertex()
    }
}

/// A finite geodesic window: consecutive, locally injective tree edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Window {
    pub edges: Vec<TreeEdge>,
}

impl Window {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Validates incidence and local injectivity.
    pub fn check(&self, fr: &Frames) -> Result<()> {
        for i in 1..self.edges.len() {
            let target = fr.edge_target(&self.edges[i - 1])?;
            if target != self.edges[i].origin {
                return Err(Error::invalid(format!("window edges {} and {} not consecutive", i - 1, i)));
            }
            let back = fr.reverse_edge(&self.edges[i - 1])?;
            if back == self.edges[i] {
                return Err(Error::invalid(format!("window backtracks at position {i}")));
            }
        }
        Ok(())
    }

    pub fn translate(&self, fr: &Frames, g: &Word) -> Result<Window> {
        let edges = self
            .edges
            .iter()
            .map(|e| fr.act_edge(g, e))
            .collect::<Result<Vec<_>>>()?;
        Ok(Window { edges })
    }

    pub fn reverse(&self, fr: &Frames) -> Result<Window> {
        let mut edges = Vec::with_capacity(self.edges.len());
        for e in self.edges.iter().rev() {
            edges.push(fr.reverse_edge(e)?);
        }
        Ok(Window { edges })
    }

    /// Key used for deterministic comparisons of windows.
    pub fn sort_key(&self) -> Vec<(Vec<Step>, Elt, EId)> {
        self.edges
            .iter()
            .map(|e| (e.origin.steps.clone(), e.rep, e.e))
            .collect()
    }
}

/// Deterministic map with subgroup keys, used by the acylindricity automaton.
pub type SubgroupKey = Vec<Elt>;
pub type StateMap<T> = BTreeMap<(EId, SubgroupKey), T>;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gog::expand;
    use crate::parse::parse_gog;

    fn z2_loop() -> crate::gog::Gog {
        parse_gog(
            "group Z2 order 2 table 0 1 1 0\n\
             hom id2 : Z2 -> Z2 map 0 1\n\
             vertex v group Z2\n\
             edge a reverse a- from v to v group Z2 rho id2\n\
             edge a- reverse a from v to v group Z2 rho id2\n\
             basepoint v\n",
        )
        .unwrap()
    }

    #[test]
    fn z2_loop_words_commute() {
        let gog = z2_loop();
        let q = expand(&gog).unwrap();
        let fr = Frames::new(&q).unwrap();
        // x = the involution at the basepoint, t = the loop edge.
        let x = fr.elt_loop(0, 1).unwrap();
        let t = fr.normalize(0, vec![(0, 0)], 0).unwrap();
        let xt = fr.mul(&x, &t).unwrap();
        let tx = fr.mul(&t, &x).unwrap();
        assert_eq!(xt, tx, "Z/2 x Z structure");
        let x2 = fr.mul(&x, &x).unwrap();
        assert!(x2.steps.is_empty() && x2.tail == 0);
    }

    #[test]
    fn inverse_cancels() {
        let gog = z2_loop();
        let q = expand(&gog).unwrap();
        let fr = Frames::new(&q).unwrap();
        let w = fr.normalize(0, vec![(1, 0), (0, 0), (1, 1)], 1).unwrap();
        let wi = fr.inv(&w).unwrap();
        let prod = fr.mul(&w, &wi).unwrap();
        assert!(prod.steps.is_empty() && prod.tail == 0);
        let prod2 = fr.mul(&wi, &w).unwrap();
        assert!(prod2.steps.is_empty() && prod2.tail == 0);
    }

    #[test]
    fn tree_over_z2_loop_is_a_line() {
        let gog = z2_loop();
        let q = expand(&gog).unwrap();
        let fr = Frames::new(&q).unwrap();
        let v0 = Word::vertex(0);
        let at = fr.edges_at_vertex(&v0).unwrap();
        assert_eq!(at.len(), 2, "line: valence two");
        let targets: Vec<Word> = at.iter().map(|e| fr.edge_target(e).unwrap()).collect();
        assert_ne!(targets[0], targets[1]);
        for (edge, t) in at.iter().zip(&targets) {
            assert_eq!(fr.dist(&v0, t), 1);
            let back = fr.reverse_edge(edge).unwrap();
            assert_eq!(fr.edge_target(&back).unwrap(), v0);
            assert_eq!(fr.reverse_edge(&back).unwrap(), *edge);
        }
    }

    #[test]
    fn stabilizer_push_survives_on_z2_line() {
        let gog = z2_loop();
        let q = expand(&gog).unwrap();
        let fr = Frames::new(&q).unwrap();
        let h = vec![0, 1];
        let pushed = fr.push_stabilizer(&h[1..], 0, 0).unwrap();
        assert_eq!(pushed, vec![1], "the involution fixes the whole line");
        let back = fr.pull_stabilizer_elt(pushed[0], 0, 0).unwrap();
        assert_eq!(back, 1);
    }
}
