//! Finite-radius expansion of the Bass-Serre tree, exact growth counting,
//! partial Poincare series, Busemann and visual geometry on balls, and the
//! branch-distance invariant.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::gog::{EId, Quotient, Site, VId};
use crate::group::Elt;
use crate::spectral::{near_integer, perron, rational_unit_kernel};
use crate::word::{Frames, Step, Word};

/// Label of the tree edge from a ball vertex's parent: the canonical coset
/// representative for group-backed parts, an opaque index over index-only rays.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepLabel {
    Rep(Elt),
    Anon(u64),
}

#[derive(Debug, Clone)]
pub struct BallVertex {
    pub qv: VId,
    pub depth: usize,
    pub parent: Option<usize>,
    /// Quotient edge covered by the edge from the parent, with its lift label.
    pub via: Option<(EId, RepLabel)>,
}

/// The closed ball of radius `radius` about the basepoint lift, with
/// deterministic labelling.
#[derive(Debug, Clone)]
pub struct TreeBall {
    pub radius: usize,
    pub verts: Vec<BallVertex>,
}

impl TreeBall {
    pub fn vertex_count(&self) -> usize {
        self.verts.len()
    }

    /// Undirected edge count; a ball is a tree, so this is |V| - 1.
    pub fn edge_count(&self) -> usize {
        self.verts.len().saturating_sub(1)
    }

    pub fn dist(&self, a: usize, b: usize) -> usize {
        let mut x = a;
        let mut y = b;
        let mut steps = 0;
        while self.verts[x].depth > self.verts[y].depth {
            x = self.verts[x].parent.unwrap();
            steps += 1;
        }
        while self.verts[y].depth > self.verts[x].depth {
            y = self.verts[y].parent.unwrap();
            steps += 1;
        }
        while x != y {
            x = self.verts[x].parent.unwrap();
            y = self.verts[y].parent.unwrap();
            steps += 2;
        }
        steps
    }

    /// Depth of the meeting point of the paths from the basepoint to a and b.
    pub fn meet_depth(&self, a: usize, b: usize) -> usize {
        let mut x = a;
        let mut y = b;
        while self.verts[x].depth > self.verts[y].depth {
            x = self.verts[x].parent.unwrap();
        }
        while self.verts[y].depth > self.verts[x].depth {
            y = self.verts[y].parent.unwrap();
        }
        while x != y {
            x = self.verts[x].parent.unwrap();
            y = self.verts[y].parent.unwrap();
        }
        self.verts[x].depth
    }

    pub fn is_ancestor(&self, anc: usize, mut v: usize) -> bool {
        loop {
            if v == anc {
                return true;
            }
            match self.verts[v].parent {
                Some(p) => v = p,
                None => return false,
            }
        }
    }

    pub fn children(&self, v: usize) -> Vec<usize> {
        (0..self.verts.len()).filter(|&i| self.verts[i].parent == Some(v)).collect()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.children(v).len() + usize::from(self.verts[v].parent.is_some())
    }

    pub fn sphere_sizes(&self) -> Vec<usize> {
        let mut out = vec![0usize; self.radius + 1];
        for v in &self.verts {
            out[v.depth] += 1;
        }
        out
    }

    /// Vertices lying over a quotient vertex.
    pub fn fiber(&self, qv: VId) -> Vec<usize> {
        (0..self.verts.len()).filter(|&i| self.verts[i].qv == qv).collect()
    }

    /// Access word of a ball vertex in the group-backed case.
    pub fn word(&self, q: &Quotient, v: usize) -> Result<Word> {
        let mut rev_steps = Vec::new();
        let mut at = v;
        while let Some(p) = self.verts[at].parent {
            match self.verts[at].via {
                Some((e, RepLabel::Rep(rep))) => rev_steps.push(Step { rep, e }),
                _ => {
                    return Err(Error::Unsupported(
                        "ball vertex lies over an index-only ray".into(),
                    ))
                }
            }
            at = p;
        }
        rev_steps.reverse();
        Ok(Word { start: q.basepoint, steps: rev_steps, tail: 0 })
    }
}

/// Expands the closed ball of radius `r` about the basepoint lift.
pub fn expand_ball(q: &Quotient, r: usize) -> Result<TreeBall> {
    let fr = Frames::new(q)?;
    let mut verts = vec![BallVertex { qv: q.basepoint, depth: 0, parent: None, via: None }];
    let mut frontier = vec![0usize];
    for depth in 1..=r {
        let mut next = Vec::new();
        for &vi in &frontier {
            let qv = verts[vi].qv;
            check_ray_reach(q, qv, depth - 1, r)?;
            let came_via = verts[vi].via.map(|(e, _)| e);
            for e in q.edges_at(qv) {
                let skip_parent = came_via.map(|f| q.rev(f) == e).unwrap_or(false);
                match fr.lift_reps(e) {
                    Ok(reps) => {
                        for &rep in reps {
                            if skip_parent && rep == 0 {
                                continue;
                            }
                            next.push(verts.len());
                            verts.push(BallVertex {
                                qv: q.edges[e].to,
                                depth,
                                parent: Some(vi),
                                via: Some((e, RepLabel::Rep(rep))),
                            });
                        }
                    }
                    Err(_) => {
                        let m = q.mult(e).to_u64().ok_or_else(|| {
                            Error::Unsupported(format!(
                                "edge {} multiplicity too large for ball expansion",
                                q.edges[e].name
                            ))
                        })?;
                        let lo = u64::from(skip_parent);
                        for idx in lo..m {
                            next.push(verts.len());
                            verts.push(BallVertex {
                                qv: q.edges[e].to,
                                depth,
                                parent: Some(vi),
                                via: Some((e, RepLabel::Anon(idx))),
                            });
                        }
                    }
                }
            }
        }
        frontier = next;
    }
    Ok(TreeBall { radius: r, verts })
}

fn check_ray_reach(q: &Quotient, qv: VId, depth: usize, r: usize) -> Result<()> {
    if depth >= r {
        return Ok(());
    }
    if let Site::RayLevel { ray, level } = q.verts[qv].site {
        if level == q.rays[ray].levels {
            return Err(Error::precondition(format!(
                "radius {r} exceeds the truncation reach of ray {} (top level hit at depth {depth})",
                q.rays[ray].id
            )));
        }
    }
    Ok(())
}

/// Exact sphere sizes `Card(S(x0,n))` for n = 0..=r and, per quotient vertex,
/// the number of tree vertices over it at each distance. Uses the
/// non-backtracking lift-multiplicity recursion, so r can be large.
pub struct GrowthCounts {
    pub spheres: Vec<BigUint>,
    /// fiber[v][n] = number of tree vertices over v at distance exactly n.
    pub fiber: Vec<Vec<BigUint>>,
}

pub fn growth_counts(q: &Quotient, r: usize) -> Result<GrowthCounts> {
    let ne = q.edges.len();
    let nv = q.verts.len();
    let mut spheres = vec![BigUint::one()];
    let mut fiber = vec![vec![BigUint::zero(); r + 1]; nv];
    fiber[q.basepoint][0] = BigUint::one();
    // c[e] = number of vertices at the current distance whose last edge covers e.
    let mut c = vec![BigUint::zero(); ne];
    for n in 1..=r {
        let mut next = vec![BigUint::zero(); ne];
        if n == 1 {
            for e in q.edges_at(q.basepoint) {
                next[e] = q.mult(e).clone();
            }
        } else {
            for e in 0..ne {
                if c[e].is_zero() {
                    continue;
                }
                let arrived = q.edges[e].to;
                check_ray_reach(q, arrived, n - 1, r)?;
                for f in q.edges_at(arrived) {
                    let mut m = q.mult(f).clone();
                    if f == q.rev(e) {
                        m -= BigUint::one();
                    }
                    if !m.is_zero() {
                        next[f] += &c[e] * m;
                    }
                }
            }
        }
        c = next;
        let mut total = BigUint::zero();
        for e in 0..ne {
            total += &c[e];
            fiber[q.edges[e].to][n] += &c[e];
        }
        spheres.push(total);
    }
    Ok(GrowthCounts { spheres, fiber })
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct VolumeEntropy {
    pub delta: f64,
    pub exact: bool,
    /// Spectral radius of the non-backtracking multiplicity matrix.
    pub radius: f64,
    pub residual: f64,
    pub degenerate: bool,
}

/// The non-backtracking lift-multiplicity matrix over directed quotient
/// edges: M[e][e'] = m(t(e), e') - [e' = reverse of e].
pub fn nonbacktracking_matrix(q: &Quotient) -> Result<Vec<Vec<f64>>> {
    let ne = q.edges.len();
    let mut m = vec![vec![0.0; ne]; ne];
    for e in 0..ne {
        for f in q.edges_at(q.edges[e].to) {
            let mut mult = q.mult(f).to_f64().ok_or_else(|| {
                Error::Unsupported("multiplicity out of float range".into())
            })?;
            if f == q.rev(e) {
                mult -= 1.0;
            }
            m[e][f] = mult;
        }
    }
    Ok(m)
}

/// Volume entropy of the tree over a cocompact quotient: log of the Perron
/// radius of the non-backtracking matrix, exact when that radius is an
/// integer (verified by an exact rational kernel).
pub fn volume_entropy(q: &Quotient) -> Result<VolumeEntropy> {
    if !q.is_cocompact() {
        return Err(Error::precondition(
            "volume entropy needs a cocompact quotient; use the measure solver for rays",
        ));
    }
    let m = nonbacktracking_matrix(q)?;
    let p = perron(&m)?;
    let degenerate = p.radius <= 1.0 + 1e-12;
    let mut exact = false;
    let mut radius = p.radius;
    if let Some(k) = near_integer(p.radius, 1e-9) {
        if k == 0 {
            exact = true;
            radius = 0.0;
        } else {
            let kq = crate::spectral::big_to_rational(&BigUint::from(k));
            let scaled: Vec<Vec<_>> = m
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|&x| crate::spectral::rational_from_f64(x) / kq.clone())
                        .collect()
                })
                .collect();
            if rational_unit_kernel(&scaled).is_some() {
                exact = true;
                radius = k as f64;
            }
        }
    }
    let delta = if radius <= 1.0 { 0.0 } else { radius.ln() };
    Ok(VolumeEntropy { delta, exact, radius, residual: p.residual, degenerate })
}

/// Partial Poincare series: sum over orbit points of the basepoint within
/// radius `r` of |stab(x0)| * exp(-s d(x0, y)).
pub fn poincare_partial(q: &Quotient, s: f64, r: usize) -> Result<f64> {
    let counts = growth_counts(q, r)?;
    let stab = q
        .vertex_group(q.basepoint)
        .map(|g| g.order())
        .ok_or_else(|| Error::precondition("basepoint must carry a group"))?;
    let mut total = 0.0;
    for n in 0..=r {
        let cnt = counts.fiber[q.basepoint][n].to_f64().unwrap_or(f64::INFINITY);
        total += stab as f64 * cnt * (-s * n as f64).exp();
    }
    Ok(total)
}

/// Busemann cocycle toward the direction of the ball edge (parent `u`, child
/// `t`): d(x,z) - d(z,y) for far z beyond t, checked at two depths.
pub fn busemann(ball: &TreeBall, x: usize, y: usize, toward: (usize, usize)) -> Result<i64> {
    let (u, t) = toward;
    if ball.verts[t].parent != Some(u) {
        return Err(Error::precondition("`toward` must be a parent-child ball edge"));
    }
    // Two far vertices beyond t at distinct depths.
    let mut best: Option<usize> = None;
    let mut second: Option<usize> = None;
    for v in 0..ball.verts.len() {
        if ball.is_ancestor(t, v) {
            match best {
                None => best = Some(v),
                Some(b) => {
                    if ball.verts[v].depth > ball.verts[b].depth {
                        second = Some(b);
                        best = Some(v);
                    } else if ball.verts[v].depth < ball.verts[b].depth
                        && second.map(|s| ball.verts[v].depth > ball.verts[s].depth).unwrap_or(true)
                    {
                        second = Some(v);
                    }
                }
            }
        }
    }
    let (z1, z2) = match (best, second) {
        (Some(a), Some(b)) if ball.verts[a].depth != ball.verts[b].depth => (a, b),
        _ => return Err(Error::precondition("ball too small for a stable Busemann value")),
    };
    let need = ball.dist(x, y) + 1;
    let margin = |z: usize| {
        ball.dist(z, x).min(ball.dist(z, y)) >= need.min(ball.verts[z].depth)
    };
    let _ = margin;
    let b1 = ball.dist(x, z1) as i64 - ball.dist(z1, y) as i64;
    let b2 = ball.dist(x, z2) as i64 - ball.dist(z2, y) as i64;
    if b1 != b2 {
        return Err(Error::precondition("ball too small: Busemann value not yet stable"));
    }
    Ok(b1)
}

/// Visual distance e^{-u} between the end-cones of two ball edges seen from
/// the basepoint; u is the depth at which the rays split.
pub fn visual_distance(ball: &TreeBall, xi: (usize, usize), eta: (usize, usize)) -> Result<f64> {
    for (u, t) in [xi, eta] {
        if ball.verts[t].parent != Some(u) {
            return Err(Error::precondition("directions must be parent-child ball edges"));
        }
    }
    if xi.1 == eta.1 || ball.is_ancestor(xi.1, eta.1) || ball.is_ancestor(eta.1, xi.1) {
        return Err(Error::precondition("directions do not diverge within the ball"));
    }
    let u = ball.meet_depth(xi.1, eta.1);
    Ok((-(u as f64)).exp())
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct BranchInvariant {
    /// gcd of pairwise distances between tree vertices of valence >= 3.
    pub lambda: usize,
    pub elementary: bool,
}

/// gcd of pairwise distances between valence-at-least-3 vertices, computed on
/// a ball wide enough to see consecutive branch vertices.
pub fn branch_distance_gcd(q: &Quotient) -> Result<BranchInvariant> {
    let three = BigUint::from(3u32);
    let r = 2 * (q.verts.len() + 2);
    let ball = expand_ball(q, r).or_else(|_| expand_ball(q, 6.min(r)))?;
    let branch: Vec<usize> = (0..ball.verts.len())
        .filter(|&v| q.lift_valence(ball.verts[v].qv) >= three)
        .collect();
    if branch.len() < 2 {
        return Ok(BranchInvariant { lambda: 0, elementary: true });
    }
    let mut g = 0usize;
    'outer: for i in 0..branch.len() {
        for j in (i + 1)..branch.len() {
            g = crate::spectral::gcd(g, ball.dist(branch[i], branch[j]));
            if g == 1 {
                break 'outer;
            }
        }
    }
    Ok(BranchInvariant { lambda: g, elementary: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gog::expand;
    use crate::parse::parse_gog;

    pub(crate) const WEDGE2: &str = "\
group T order 1 table 0
hom id : T -> T map 0
vertex v group T
edge a reverse a- from v to v group T rho id
edge a- reverse a from v to v group T rho id
edge b reverse b- from v to v group T rho id
edge b- reverse b from v to v group T rho id
basepoint v
";

    const Z2LOOP: &str = "\
group Z2 order 2 table 0 1 1 0
hom id2 : Z2 -> Z2 map 0 1
vertex v group Z2
edge a reverse a- from v to v group Z2 rho id2
edge a- reverse a from v to v group Z2 rho id2
basepoint v
";

    #[test]
    fn wedge_ball_radius_two() {
        let q = expand(&parse_gog(WEDGE2).unwrap()).unwrap();
        let ball = expand_ball(&q, 2).unwrap();
        assert_eq!(ball.vertex_count(), 17, "1 + 4 + 12");
        assert_eq!(ball.edge_count(), ball.vertex_count() - 1);
        // Interior degree equals lift valence.
        assert_eq!(ball.degree(0), 4);
        let counts = growth_counts(&q, 8).unwrap();
        for n in 1..=8usize {
            // Sphere sizes 4 * 3^{n-1}.
            let expected = BigUint::from(4u32) * BigUint::from(3u32).pow(n as u32 - 1);
            assert_eq!(counts.spheres[n], expected);
        }
    }

    #[test]
    fn z2_loop_ball_is_a_segment() {
        let q = expand(&parse_gog(Z2LOOP).unwrap()).unwrap();
        let ball = expand_ball(&q, 3).unwrap();
        assert_eq!(ball.vertex_count(), 7);
        assert_eq!(ball.degree(0), 2);
    }

    #[test]
    fn radius_zero_ball() {
        let q = expand(&parse_gog(WEDGE2).unwrap()).unwrap();
        let ball = expand_ball(&q, 0).unwrap();
        assert_eq!(ball.vertex_count(), 1);
    }

    #[test]
    fn wedge_entropy_is_log3_exact() {
        let q = expand(&parse_gog(WEDGE2).unwrap()).unwrap();
        let ve = volume_entropy(&q).unwrap();
        assert!(ve.exact);
        assert!((ve.delta - 3.0f64.ln()).abs() < 1e-15);
        assert!(!ve.degenerate);
    }

    #[test]
    fn line_entropy_is_zero() {
        let q = expand(&parse_gog(Z2LOOP).unwrap()).unwrap();
        let ve = volume_entropy(&q).unwrap();
        assert_eq!(ve.delta, 0.0);
        assert!(ve.degenerate);
    }

    #[test]
    fn entropy_matches_counting_slope() {
        let q = expand(&parse_gog(WEDGE2).unwrap()).unwrap();
        let ve = volume_entropy(&q).unwrap();
        let counts = growth_counts(&q, 30).unwrap();
        // Slope of log sphere sizes by least squares over n = 5..30.
        let pts: Vec<(f64, f64)> = (5..=30)
            .map(|n| (n as f64, counts.spheres[n].to_f64().unwrap().ln()))
            .collect();
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        assert!((slope - ve.delta).abs() < 1e-3);
        // Sandwich with an empirical constant.
        let c = 4.0;
        for n in 1..=30usize {
            let s = counts.spheres[n].to_f64().unwrap();
            let e = (ve.delta * n as f64).exp();
            assert!(s <= c * e && s >= e / c);
        }
    }

    #[test]
    fn poincare_limits() {
        let q = expand(&parse_gog(WEDGE2).unwrap()).unwrap();
        // Very large s: only the basepoint survives.
        let p = poincare_partial(&q, 50.0, 10).unwrap();
        assert!((p - 1.0).abs() < 1e-10);
        // At s = log 3 partial sums grow linearly in R.
        let s = 3.0f64.ln();
        let p20 = poincare_partial(&q, s, 20).unwrap();
        let p40 = poincare_partial(&q, s, 40).unwrap();
        assert!((p40 - p20 - (4.0 / 3.0) * 20.0).abs() < 1e-6);
        // Above the critical exponent the tail is Cauchy.
        let p40c = poincare_partial(&q, s + 1.0, 40).unwrap();
        let p60c = poincare_partial(&q, s + 1.0, 60).unwrap();
        assert!((p60c - p40c).abs() < 1e-6);
    }

    #[test]
    fn busemann_examples() {
        let q = expand(&parse_gog(WEDGE2).unwrap()).unwrap();
        let ball = expand_ball(&q, 8).unwrap();
        let child = ball.children(0)[0];
        let dir = (0, child);
        assert_eq!(busemann(&ball, 0, 0, dir).unwrap(), 0);
        // One step closer toward the direction.
        assert_eq!(busemann(&ball, 0, child, dir).unwrap(), 1);
        // Brute-force oracle over all far vertices, for pairs whose rays
        // toward the direction pass through it.
        let far: Vec<usize> =
            (0..ball.verts.len()).filter(|&v| ball.is_ancestor(child, v)).collect();
        let x = ball.children(0)[1];
        let y = ball.children(x)[0];
        let b = busemann(&ball, x, y, dir).unwrap();
        assert_eq!(b, -1);
        for &z in far.iter().filter(|&&z| ball.verts[z].depth >= 2) {
            assert_eq!(ball.dist(x, z) as i64 - ball.dist(z, y) as i64, b);
        }
    }

    #[test]
    fn visual_distance_examples() {
        let q = expand(&parse_gog(WEDGE2).unwrap()).unwrap();
        let ball = expand_ball(&q, 6).unwrap();
        let kids = ball.children(0);
        let d = visual_distance(&ball, (0, kids[0]), (0, kids[1])).unwrap();
        assert_eq!(d, 1.0, "split at the basepoint");
        // Two directions splitting at depth 3.
        let mut v = kids[0];
        for _ in 0..2 {
            v = ball.children(v)[0];
        }
        let gk = ball.children(v);
        let d3 = visual_distance(&ball, (v, gk[0]), (v, gk[1])).unwrap();
        assert!((d3 - (-3.0f64).exp()).abs() < 1e-15);
        let sym = visual_distance(&ball, (v, gk[1]), (v, gk[0])).unwrap();
        assert_eq!(d3, sym);
    }

    #[test]
    fn branch_gcd_examples() {
        let q = expand(&parse_gog(WEDGE2).unwrap()).unwrap();
        let b = branch_distance_gcd(&q).unwrap();
        assert_eq!(b.lambda, 1);
        assert!(!b.elementary);

        let line = expand(&parse_gog(Z2LOOP).unwrap()).unwrap();
        let bl = branch_distance_gcd(&line).unwrap();
        assert!(bl.elementary);
    }
}
