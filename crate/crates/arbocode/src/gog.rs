//! Finite graphs of finite groups with optional cuspidal rays: the data
//! model, the validator, and the expanded computational view in which
//! declared rays are materialized up to their truncation level.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::group::{
    check_monomorphism, subgroup_index, CosetSide, Elt, FiniteGroup, Homomorphism, Subgroup,
};

pub type GroupId = usize;
pub type SubgroupId = usize;
pub type HomId = usize;
pub type VId = usize;
pub type EId = usize;

#[derive(Debug, Clone)]
pub struct NamedGroup {
    pub name: String,
    pub group: FiniteGroup,
}

#[derive(Debug, Clone)]
pub struct NamedSubgroup {
    pub name: String,
    pub of: GroupId,
    pub sub: Subgroup,
}

#[derive(Debug, Clone)]
pub struct NamedHom {
    pub name: String,
    pub src: GroupId,
    pub dst: GroupId,
    pub hom: Homomorphism,
}

#[derive(Debug, Clone)]
pub struct VertexDecl {
    pub name: String,
    pub group: GroupId,
}

#[derive(Debug, Clone)]
pub struct EdgeDecl {
    pub name: String,
    pub reverse: String,
    pub from: String,
    pub to: String,
    pub group: GroupId,
    /// Monomorphism of the edge group into the group of `to`.
    pub rho: HomId,
}

/// Level data of a declared cuspidal ray: either an explicit nested chain of
/// subgroups, or an index-only profile for rays whose level groups are too
/// large to tabulate (counting and growth diagnostics still work; operations
/// needing coset representatives reject such rays).
#[derive(Debug, Clone)]
pub enum RayLevels {
    Chain(Vec<String>),
    Indices(Vec<BigUint>),
}

#[derive(Debug, Clone)]
pub struct RayDecl {
    pub id: u32,
    pub attach: String,
    pub levels: usize,
    pub data: RayLevels,
    pub tail_index: BigUint,
    pub attach_group: GroupId,
    /// Monomorphism of the attach-edge group into the attach vertex group.
    pub attach_rho: HomId,
    /// Monomorphism of the attach-edge group into the chain parent, with
    /// image inside the level-0 subgroup. May be omitted when the attach
    /// group is trivial.
    pub attach_rho_up: Option<HomId>,
}

/// The parsed, serializable object. `Quotient` below is the expanded view
/// used by everything downstream.
#[derive(Debug, Clone)]
pub struct Gog {
    pub groups: Vec<NamedGroup>,
    pub subgroups: Vec<NamedSubgroup>,
    pub homs: Vec<NamedHom>,
    pub vertices: Vec<VertexDecl>,
    pub edges: Vec<EdgeDecl>,
    pub rays: Vec<RayDecl>,
    pub basepoint: String,
}

impl Gog {
    pub fn group_by_name(&self, name: &str) -> Option<GroupId> {
        self.groups.iter().position(|g| g.name == name)
    }

    pub fn subgroup_by_name(&self, name: &str) -> Option<SubgroupId> {
        self.subgroups.iter().position(|s| s.name == name)
    }

    pub fn hom_by_name(&self, name: &str) -> Option<HomId> {
        self.homs.iter().position(|h| h.name == name)
    }

    pub fn vertex_by_name(&self, name: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Site {
    Core,
    /// Materialized ray vertex at the given level (0-based from the attach side).
    RayLevel { ray: usize, level: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Core,
    /// Attach vertex -> ray level 0.
    AttachUp { ray: usize },
    AttachDown { ray: usize },
    /// level -> level + 1
    RayUp { ray: usize, level: usize },
    RayDown { ray: usize, level: usize },
}

#[derive(Debug, Clone)]
pub struct QVertex {
    pub name: String,
    pub group: Option<GroupId>,
    pub site: Site,
}

#[derive(Debug, Clone)]
pub struct QEdge {
    pub name: String,
    pub from: VId,
    pub to: VId,
    pub rev: EId,
    pub group: Option<GroupId>,
    /// Monomorphism of the edge group into the group of `to`.
    pub rho: Option<Homomorphism>,
    /// Number of lifts of this edge at any tree vertex over `from`:
    /// `[G_from : rho_rev(G_e)]`.
    pub mult_at_origin: BigUint,
    pub kind: EdgeKind,
}

/// Per-ray view over the expanded graph.
#[derive(Debug, Clone)]
pub struct RayView {
    pub id: u32,
    pub attach_vertex: VId,
    pub attach_up: EId,
    pub levels: usize,
    pub level_verts: Vec<VId>,
    /// up_edges[n]: level n -> level n+1, length `levels`.
    pub up_edges: Vec<EId>,
    /// q(0) = lifts of the reversed attach edge at level 0, q(n) = index of
    /// level n-1 in level n for 1 <= n <= levels, q(n) = tail index beyond.
    q: Vec<BigUint>,
    pub tail_index: BigUint,
    /// Element sets of the chain subgroups inside the chain parent group,
    /// present for chain-backed rays.
    pub chain_sets: Option<Vec<Vec<Elt>>>,
    pub chain_parent: Option<GroupId>,
}

impl RayView {
    /// The index profile q(n); constant `tail_index` beyond the declared levels.
    pub fn q(&self, n: usize) -> &BigUint {
        if n < self.q.len() {
            &self.q[n]
        } else {
            &self.tail_index
        }
    }

    pub fn q_f64(&self, n: usize) -> f64 {
        self.q(n).to_f64().unwrap_or(f64::INFINITY)
    }

    pub fn declared_len(&self) -> usize {
        self.q.len()
    }

    pub fn is_chain_backed(&self) -> bool {
        self.chain_sets.is_some()
    }
}

/// Expanded computational view: rays are materialized as ordinary vertices
/// and edges up to their truncation level.
#[derive(Debug, Clone)]
pub struct Quotient {
    pub groups: Vec<FiniteGroup>,
    pub verts: Vec<QVertex>,
    pub edges: Vec<QEdge>,
    pub rays: Vec<RayView>,
    pub basepoint: VId,
}

impl Quotient {
    pub fn group(&self, id: GroupId) -> &FiniteGroup {
        &self.groups[id]
    }

    pub fn vertex_group(&self, v: VId) -> Option<&FiniteGroup> {
        self.verts[v].group.map(|g| &self.groups[g])
    }

    pub fn edges_at(&self, v: VId) -> impl Iterator<Item = EId> + '_ {
        self.edges
            .iter()
            .enumerate()
            .filter(move |(_, e)| e.from == v)
            .map(|(i, _)| i)
    }

    pub fn rev(&self, e: EId) -> EId {
        self.edges[e].rev
    }

    pub fn mult(&self, e: EId) -> &BigUint {
        &self.edges[e].mult_at_origin
    }

    pub fn mult_usize(&self, e: EId) -> Result<usize> {
        self.edges[e].mult_at_origin.to_usize().ok_or_else(|| {
            Error::Unsupported(format!(
                "edge {} has a lift multiplicity too large to enumerate",
                self.edges[e].name
            ))
        })
    }

    /// Valence of any Bass-Serre tree vertex above `v`. At the truncation top
    /// of a ray this includes the virtual upward edge.
    pub fn lift_valence(&self, v: VId) -> BigUint {
        let mut total = BigUint::zero();
        for e in self.edges_at(v) {
            total += self.mult(e).clone();
        }
        if let Site::RayLevel { ray, level } = self.verts[v].site {
            if level == self.rays[ray].levels {
                total += BigUint::one();
            }
        }
        total
    }

    /// Image of the reversed edge's monomorphism inside the group of `from`,
    /// i.e. the subgroup whose cosets parametrize the lifts of `e`.
    pub fn edge_image_at_origin(&self, e: EId) -> Option<Vec<Elt>> {
        let rev = self.rev(e);
        self.edges[rev].rho.as_ref().map(|h| h.image())
    }

    pub fn is_cocompact(&self) -> bool {
        self.rays.is_empty()
    }

    /// Every lift-multiplicity in the expanded graph is small enough for
    /// explicit enumeration (false only for index-only rays).
    pub fn fully_enumerable(&self) -> bool {
        self.edges.iter().all(|e| e.mult_at_origin.to_usize().is_some())
            && self.verts.iter().all(|v| v.group.is_some())
    }

    pub fn max_edge_group_order(&self) -> usize {
        self.edges
            .iter()
            .filter_map(|e| e.group.map(|g| self.groups[g].order()))
            .max()
            .unwrap_or(1)
    }

    /// Vertices of quotient valence 2 whose lift valence is also 2 induce the
    /// paper's subdivision caveat; we only report, never repair.
    pub fn valence_two_vertices(&self) -> Vec<VId> {
        (0..self.verts.len())
            .filter(|&v| self.lift_valence(v) == BigUint::from(2u32))
            .collect()
    }
}

/// One finding of `validate`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Finding {
    pub check: String,
    pub ok: bool,
    pub detail: String,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub findings: Vec<Finding>,
    pub ray_count: usize,
    pub detected_candidate_rays: Vec<String>,
    pub geometrically_finite: bool,
    pub selberg_structural: bool,
    pub valence_two_warning: Vec<String>,
}

/// Builds the expanded view, checking every structural invariant on the way.
pub fn expand(gog: &Gog) -> Result<Quotient> {
    let mut groups: Vec<FiniteGroup> = gog.groups.iter().map(|g| g.group.clone()).collect();
    let mut verts: Vec<QVertex> = Vec::new();
    let mut edges: Vec<QEdge> = Vec::new();
    let mut rays: Vec<RayView> = Vec::new();

    let mut vertex_ids: BTreeMap<&str, VId> = BTreeMap::new();
    for v in &gog.vertices {
        if vertex_ids.contains_key(v.name.as_str()) {
            return Err(Error::invalid(format!("duplicate vertex {}", v.name)));
        }
        vertex_ids.insert(&v.name, verts.len());
        verts.push(QVertex { name: v.name.clone(), group: Some(v.group), site: Site::Core });
    }

    // Core edges: pair up by declared reverse names.
    let edge_pos: BTreeMap<&str, usize> =
        gog.edges.iter().enumerate().map(|(i, e)| (e.name.as_str(), i)).collect();
    if edge_pos.len() != gog.edges.len() {
        return Err(Error::invalid("duplicate edge name"));
    }
    for e in &gog.edges {
        let r = edge_pos
            .get(e.reverse.as_str())
            .ok_or_else(|| Error::invalid(format!("edge {}: unknown reverse {}", e.name, e.reverse)))?;
        let rev = &gog.edges[*r];
        if rev.name == e.name {
            return Err(Error::invalid(format!("edge {} is its own reverse", e.name)));
        }
        if rev.reverse != e.name {
            return Err(Error::invalid(format!(
                "edge reversal is not an involution at {}",
                e.name
            )));
        }
        if rev.group != e.group {
            return Err(Error::invalid(format!(
                "edge {} and its reverse carry different edge groups",
                e.name
            )));
        }
        if rev.from != e.to || rev.to != e.from {
            return Err(Error::invalid(format!(
                "edge {} endpoints do not mirror its reverse",
                e.name
            )));
        }
    }
    for e in &gog.edges {
        let from = *vertex_ids
            .get(e.from.as_str())
            .ok_or_else(|| Error::invalid(format!("edge {}: unknown vertex {}", e.name, e.from)))?;
        let to = *vertex_ids
            .get(e.to.as_str())
            .ok_or_else(|| Error::invalid(format!("edge {}: unknown vertex {}", e.name, e.to)))?;
        let hom = &gog.homs[e.rho];
        if hom.src != e.group {
            return Err(Error::invalid(format!("edge {}: rho source is not the edge group", e.name)));
        }
        if hom.dst != gog.vertices[to].group {
            return Err(Error::invalid(format!(
                "edge {}: rho target is not the terminal vertex group",
                e.name
            )));
        }
        if !check_monomorphism(&hom.hom) {
            return Err(Error::invalid(format!("edge {}: rho not injective", e.name)));
        }
        edges.push(QEdge {
            name: e.name.clone(),
            from,
            to,
            rev: usize::MAX, // fixed below
            group: Some(e.group),
            rho: Some(hom.hom.clone()),
            mult_at_origin: BigUint::zero(),
            kind: EdgeKind::Core,
        });
    }
    let rev_of: Vec<usize> = gog.edges.iter().map(|e| edge_pos[e.reverse.as_str()]).collect();
    for (i, r) in rev_of.iter().enumerate() {
        edges[i].rev = *r;
    }

    // Rays.
    for (ri, ray) in gog.rays.iter().enumerate() {
        let attach = *vertex_ids
            .get(ray.attach.as_str())
            .ok_or_else(|| Error::invalid(format!("ray {}: unknown attach vertex {}", ray.id, ray.attach)))?;
        if ray.tail_index < BigUint::from(2u32) {
            return Err(Error::invalid(format!("ray {}: tail index must be at least 2", ray.id)));
        }
        let attach_hom = &gog.homs[ray.attach_rho];
        if attach_hom.src != ray.attach_group
            || attach_hom.dst != gog.vertices[attach].group
            || !check_monomorphism(&attach_hom.hom)
        {
            return Err(Error::invalid(format!(
                "ray {}: attach_rho must be a monomorphism of the attach group into the attach vertex group",
                ray.id
            )));
        }
        let bgroup = &gog.groups[ray.attach_group].group;

        match &ray.data {
            RayLevels::Chain(names) => {
                if names.len() != ray.levels + 1 {
                    return Err(Error::invalid(format!(
                        "ray {}: chain must list levels+1 subgroups",
                        ray.id
                    )));
                }
                let subs: Vec<&NamedSubgroup> = names
                    .iter()
                    .map(|n| {
                        gog.subgroup_by_name(n)
                            .map(|i| &gog.subgroups[i])
                            .ok_or_else(|| Error::invalid(format!("ray {}: unknown subgroup {}", ray.id, n)))
                    })
                    .collect::<Result<_>>()?;
                let parent_id = subs[0].of;
                if subs.iter().any(|s| s.of != parent_id) {
                    return Err(Error::invalid(format!(
                        "ray {}: chain subgroups must share one parent group",
                        ray.id
                    )));
                }
                let parent = &gog.groups[parent_id].group;
                for w in subs.windows(2) {
                    if !w[0].sub.is_subgroup_of(&w[1].sub) {
                        return Err(Error::invalid(format!(
                            "ray {}: chain is not nested",
                            ray.id
                        )));
                    }
                    if w[0].sub.order() == w[1].sub.order() {
                        return Err(Error::invalid(format!("ray {}: ray not strictly increasing", ray.id)));
                    }
                }
                if subs.last().unwrap().sub.order() != parent.order() {
                    return Err(Error::invalid(format!(
                        "ray {}: top of the chain must be the whole parent group",
                        ray.id
                    )));
                }

                // Upward embedding of the attach group into level 0.
                let up_image: Vec<Elt> = match ray.attach_rho_up {
                    Some(h) => {
                        let hom = &gog.homs[h];
                        if hom.src != ray.attach_group || hom.dst != parent_id
                            || !check_monomorphism(&hom.hom)
                        {
                            return Err(Error::invalid(format!(
                                "ray {}: attach_rho_up must embed the attach group into the chain parent",
                                ray.id
                            )));
                        }
                        let im = hom.hom.image();
                        if !im.iter().all(|&x| subs[0].sub.contains(x)) {
                            return Err(Error::invalid(format!(
                                "ray {}: attach_rho_up image must lie in the level-0 subgroup",
                                ray.id
                            )));
                        }
                        (0..bgroup.order() as Elt).map(|a| hom.hom.apply(a)).collect()
                    }
                    None => {
                        if bgroup.order() != 1 {
                            return Err(Error::invalid(format!(
                                "ray {}: attach_rho_up required for a nontrivial attach group",
                                ray.id
                            )));
                        }
                        vec![0]
                    }
                };

                // Materialize level groups and ray edges.
                let mut level_groups: Vec<GroupId> = Vec::new();
                let mut level_maps: Vec<Vec<Elt>> = Vec::new(); // new index -> parent elt
                for s in &subs {
                    let (g, map) = s.sub.as_group(parent);
                    level_groups.push(groups.len());
                    groups.push(g);
                    level_maps.push(map);
                }
                let to_level = |lvl: usize, parent_elt: Elt| -> Elt {
                    level_maps[lvl].binary_search(&parent_elt).expect("element in level") as Elt
                };

                let mut level_verts = Vec::new();
                for n in 0..=ray.levels {
                    level_verts.push(verts.len());
                    verts.push(QVertex {
                        name: format!("ray{}:v{}", ray.id, n),
                        group: Some(level_groups[n]),
                        site: Site::RayLevel { ray: ri, level: n },
                    });
                }

                // Attach edge pair.
                let rho_up = Homomorphism::new(
                    bgroup,
                    &groups[level_groups[0]],
                    up_image.iter().map(|&x| to_level(0, x)).collect(),
                )?;
                let b = edges.len();
                let bdown = b + 1;
                edges.push(QEdge {
                    name: format!("ray{}:b", ray.id),
                    from: attach,
                    to: level_verts[0],
                    rev: bdown,
                    group: Some(ray.attach_group),
                    rho: Some(rho_up),
                    mult_at_origin: BigUint::zero(),
                    kind: EdgeKind::AttachUp { ray: ri },
                });
                edges.push(QEdge {
                    name: format!("ray{}:b-", ray.id),
                    from: level_verts[0],
                    to: attach,
                    rev: b,
                    group: Some(ray.attach_group),
                    rho: Some(attach_hom.hom.clone()),
                    mult_at_origin: BigUint::zero(),
                    kind: EdgeKind::AttachDown { ray: ri },
                });

                let mut up_edges = Vec::new();
                for n in 0..ray.levels {
                    // Edge group = level-n group; identity downward, inclusion upward.
                    let lower = &groups[level_groups[n]];
                    let incl = Homomorphism::new(
                        lower,
                        &groups[level_groups[n + 1]],
                        level_maps[n].iter().map(|&x| to_level(n + 1, x)).collect(),
                    )?;
                    let ident = Homomorphism::identity(lower);
                    let up = edges.len();
                    let down = up + 1;
                    up_edges.push(up);
                    edges.push(QEdge {
                        name: format!("ray{}:a{}", ray.id, n),
                        from: level_verts[n],
                        to: level_verts[n + 1],
                        rev: down,
                        group: Some(level_groups[n]),
                        rho: Some(incl),
                        mult_at_origin: BigUint::zero(),
                        kind: EdgeKind::RayUp { ray: ri, level: n },
                    });
                    edges.push(QEdge {
                        name: format!("ray{}:a{}-", ray.id, n),
                        from: level_verts[n + 1],
                        to: level_verts[n],
                        rev: up,
                        group: Some(level_groups[n]),
                        rho: Some(ident),
                        mult_at_origin: BigUint::zero(),
                        kind: EdgeKind::RayDown { ray: ri, level: n },
                    });
                }

                let mut q = Vec::new();
                q.push(BigUint::from(subs[0].sub.order() / bgroup.order()));
                for n in 0..ray.levels {
                    q.push(BigUint::from(
                        subs[n + 1].sub.order() / subs[n].sub.order(),
                    ));
                }
                rays.push(RayView {
                    id: ray.id,
                    attach_vertex: attach,
                    attach_up: b,
                    levels: ray.levels,
                    level_verts,
                    up_edges,
                    q,
                    tail_index: ray.tail_index.clone(),
                    chain_sets: Some(subs.iter().map(|s| s.sub.elements().to_vec()).collect()),
                    chain_parent: Some(parent_id),
                });
            }
            RayLevels::Indices(qs) => {
                if qs.len() != ray.levels + 1 {
                    return Err(Error::invalid(format!(
                        "ray {}: indices must list levels+1 values",
                        ray.id
                    )));
                }
                if qs.iter().any(|q| q < &BigUint::from(2u32)) {
                    return Err(Error::invalid(format!("ray {}: ray not strictly increasing", ray.id)));
                }
                if bgroup.order() != 1 {
                    return Err(Error::invalid(format!(
                        "ray {}: index-only rays require a trivial attach group",
                        ray.id
                    )));
                }
                let mut level_verts = Vec::new();
                for n in 0..=ray.levels {
                    level_verts.push(verts.len());
                    verts.push(QVertex {
                        name: format!("ray{}:v{}", ray.id, n),
                        group: None,
                        site: Site::RayLevel { ray: ri, level: n },
                    });
                }
                let b = edges.len();
                edges.push(QEdge {
                    name: format!("ray{}:b", ray.id),
                    from: attach,
                    to: level_verts[0],
                    rev: b + 1,
                    group: Some(ray.attach_group),
                    rho: None,
                    mult_at_origin: BigUint::zero(),
                    kind: EdgeKind::AttachUp { ray: ri },
                });
                edges.push(QEdge {
                    name: format!("ray{}:b-", ray.id),
                    from: level_verts[0],
                    to: attach,
                    rev: b,
                    group: Some(ray.attach_group),
                    rho: Some(attach_hom.hom.clone()),
                    mult_at_origin: BigUint::zero(),
                    kind: EdgeKind::AttachDown { ray: ri },
                });
                let mut up_edges = Vec::new();
                for n in 0..ray.levels {
                    let up = edges.len();
                    up_edges.push(up);
                    edges.push(QEdge {
                        name: format!("ray{}:a{}", ray.id, n),
                        from: level_verts[n],
                        to: level_verts[n + 1],
                        rev: up + 1,
                        group: None,
                        rho: None,
                        mult_at_origin: BigUint::zero(),
                        kind: EdgeKind::RayUp { ray: ri, level: n },
                    });
                    edges.push(QEdge {
                        name: format!("ray{}:a{}-", ray.id, n),
                        from: level_verts[n + 1],
                        to: level_verts[n],
                        rev: up,
                        group: None,
                        rho: None,
                        mult_at_origin: BigUint::zero(),
                        kind: EdgeKind::RayDown { ray: ri, level: n },
                    });
                }
                rays.push(RayView {
                    id: ray.id,
                    attach_vertex: attach,
                    attach_up: b,
                    levels: ray.levels,
                    level_verts,
                    up_edges,
                    q: qs.clone(),
                    tail_index: ray.tail_index.clone(),
                    chain_sets: None,
                    chain_parent: None,
                });
            }
        }
    }

    // Multiplicities.
    for i in 0..edges.len() {
        let m = edge_mult(&groups, &verts, &edges, &rays, i)?;
        edges[i].mult_at_origin = m;
    }

    // Connectivity of the underlying graph.
    let basepoint = *vertex_ids
        .get(gog.basepoint.as_str())
        .ok_or_else(|| Error::invalid(format!("unknown basepoint {}", gog.basepoint)))?;
    let mut seen = vec![false; verts.len()];
    let mut stack = vec![basepoint];
    seen[basepoint] = true;
    while let Some(v) = stack.pop() {
        for (i, e) in edges.iter().enumerate() {
            let _ = i;
            if e.from == v && !seen[e.to] {
                seen[e.to] = true;
                stack.push(e.to);
            }
        }
    }
    if !seen.iter().all(|&s| s) {
        return Err(Error::invalid("graph is not connected"));
    }

    Ok(Quotient { groups, verts, edges, rays, basepoint })
}

fn edge_mult(
    groups: &[FiniteGroup],
    verts: &[QVertex],
    edges: &[QEdge],
    rays: &[RayView],
    e: EId,
) -> Result<BigUint> {
    let edge = &edges[e];
    let rev = &edges[edge.rev];
    match verts[edge.from].group {
        Some(g) => {
            let order = groups[g].order();
            let im = rev
                .rho
                .as_ref()
                .map(|h| h.image().len())
                .unwrap_or(1);
            Ok(BigUint::from(order / im))
        }
        None => {
            // Index-only ray vertex: multiplicities come from the declared profile.
            match edge.kind {
                EdgeKind::RayUp { .. } | EdgeKind::AttachUp { .. } => Ok(BigUint::one()),
                EdgeKind::RayDown { ray, level } => Ok(rays[ray].q(level + 1).clone()),
                EdgeKind::AttachDown { ray } => Ok(rays[ray].q(0).clone()),
                EdgeKind::Core => unreachable!("core vertices always carry groups"),
            }
        }
    }
}

/// Wait-free structural report; failures are findings, not errors.
pub fn validate(gog: &Gog) -> ValidationReport {
    let mut findings = Vec::new();
    let mut push = |check: &str, ok: bool, detail: String| {
        findings.push(Finding { check: check.to_string(), ok, detail });
    };

    let expanded = expand(gog);
    match &expanded {
        Ok(_) => {
            push("involution", true, "edge reversal is a fixed-point-free involution".into());
            push("rho_injective", true, "all edge monomorphisms are injective".into());
            push("connected", true, "underlying graph is connected".into());
        }
        Err(e) => {
            let msg = e.to_string();
            let check = if msg.contains("involution") || msg.contains("its own reverse") {
                "involution"
            } else if msg.contains("injective") {
                "rho_injective"
            } else if msg.contains("connected") {
                "connected"
            } else {
                "structure"
            };
            push(check, false, msg);
        }
    }

    let mut detected = Vec::new();
    let mut valence_two = Vec::new();
    let mut geometrically_finite = false;
    let mut selberg = false;
    if let Ok(q) = &expanded {
        // Rays declared plus a scan for undeclared ray-like tails among core
        // edges: a chain of valence-<=2 core vertices whose edge-to-origin
        // morphism is onto.
        for (vi, v) in q.verts.iter().enumerate() {
            if v.site != Site::Core {
                continue;
            }
            let at: Vec<EId> = q.edges_at(vi).collect();
            if at.len() == 1 && matches!(q.edges[at[0]].kind, EdgeKind::Core) {
                let e = at[0];
                let toward_origin = &q.edges[q.rev(e)];
                let onto = toward_origin
                    .rho
                    .as_ref()
                    .map(|h| h.image().len() == q.vertex_group(vi).map(|g| g.order()).unwrap_or(1))
                    .unwrap_or(false);
                if onto {
                    detected.push(v.name.clone());
                }
            }
        }
        for v in q.valence_two_vertices() {
            valence_two.push(q.verts[v].name.clone());
        }
        // Finite core with declared rays (or none) is the geometric
        // finiteness structure in this model.
        geometrically_finite = true;
        push(
            "geometric_finiteness",
            true,
            format!("finite core with {} declared cuspidal rays", q.rays.len()),
        );
        // Structural Selberg note: torsion can be pushed into ray groups when
        // all core vertex groups are trivial, or there are no rays at all.
        let core_trivial = q
            .verts
            .iter()
            .filter(|v| v.site == Site::Core)
            .all(|v| v.group.map(|g| q.groups[g].order() == 1).unwrap_or(false));
        selberg = q.rays.is_empty() || core_trivial;
        push(
            "selberg_structural",
            selberg,
            if q.rays.is_empty() {
                "no cuspidal rays".into()
            } else if core_trivial {
                "core vertex groups are trivial".into()
            } else {
                "nontrivial core vertex groups alongside rays; Selberg reduction not verified".into()
            },
        );
        // Chain index bookkeeping.
        for ray in &q.rays {
            if let (Some(sets), Some(parent)) = (&ray.chain_sets, ray.chain_parent) {
                let parent = &q.groups[parent];
                let mut ok = true;
                for n in 0..ray.levels {
                    let lo = Subgroup::new(parent, sets[n].clone()).unwrap();
                    let hi = Subgroup::new(parent, sets[n + 1].clone()).unwrap();
                    let hi_group = hi.as_group(parent).0;
                    let lo_in_hi = Subgroup::new(
                        &hi_group,
                        lo.elements()
                            .iter()
                            .map(|&x| hi.elements().binary_search(&x).unwrap() as Elt)
                            .collect(),
                    )
                    .unwrap();
                    let idx = subgroup_index(&hi_group, &lo_in_hi).unwrap();
                    if BigUint::from(idx) != *ray.q(n + 1) {
                        ok = false;
                    }
                }
                push(
                    "ray_indices",
                    ok,
                    format!("ray {}: declared chain indices match subgroup indices", ray.id),
                );
            }
        }
    }

    let valid = findings.iter().all(|f| f.ok);
    ValidationReport {
        valid,
        findings,
        ray_count: gog.rays.len(),
        detected_candidate_rays: detected,
        geometrically_finite,
        selberg_structural: selberg,
        valence_two_warning: valence_two,
    }
}

/// Left-coset representatives (minimal element per coset, sorted) of the
/// edge-image subgroup at the origin of `e`; the lifts of `e` at a tree
/// vertex over its origin. Requires group-backed data.
pub fn lift_reps(q: &Quotient, e: EId) -> Result<Vec<Elt>> {
    let from = q.edges[e].from;
    let g = q
        .vertex_group(from)
        .ok_or_else(|| Error::Unsupported(format!("edge {} lies over an index-only ray", q.edges[e].name)))?;
    let im = q
        .edge_image_at_origin(e)
        .ok_or_else(|| Error::Unsupported(format!("edge {} lies over an index-only ray", q.edges[e].name)))?;
    let sub = Subgroup::new(g, im)?;
    Ok(crate::group::cosets(g, &sub, CosetSide::Left)?
        .into_iter()
        .map(|c| c[0])
        .collect())
}
