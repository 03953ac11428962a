//! A small zoo of graphs of groups used by the tests, the acceptance suite,
//! and the shipped example files.

use num_bigint::BigUint;

use crate::gog::{EdgeDecl, Gog, NamedGroup, NamedHom, NamedSubgroup, RayDecl, RayLevels, VertexDecl};
use crate::group::{Elt, FiniteGroup, Homomorphism, Subgroup};

fn trivial_gog_base() -> Gog {
    Gog {
        groups: vec![NamedGroup { name: "T".into(), group: FiniteGroup::trivial() }],
        subgroups: Vec::new(),
        homs: vec![NamedHom {
            name: "id".into(),
            src: 0,
            dst: 0,
            hom: Homomorphism::identity(&FiniteGroup::trivial()),
        }],
        vertices: Vec::new(),
        edges: Vec::new(),
        rays: Vec::new(),
        basepoint: String::new(),
    }
}

/// Wedge of `m` circles: one trivial vertex, m loop pairs. Free group F_m.
pub fn wedge(m: usize) -> Gog {
    let mut g = trivial_gog_base();
    g.vertices.push(VertexDecl { name: "v".into(), group: 0 });
    for i in 0..m {
        let a = format!("a{i}");
        let ar = format!("a{i}-");
        g.edges.push(EdgeDecl {
            name: a.clone(),
            reverse: ar.clone(),
            from: "v".into(),
            to: "v".into(),
            group: 0,
            rho: 0,
        });
        g.edges.push(EdgeDecl {
            name: ar,
            reverse: a,
            from: "v".into(),
            to: "v".into(),
            group: 0,
            rho: 0,
        });
    }
    g.basepoint = "v".into();
    g
}

/// Barycentric subdivision of the wedge of `m` circles: each loop becomes
/// two edges through a midpoint vertex.
pub fn subdivided_wedge(m: usize) -> Gog {
    let mut g = trivial_gog_base();
    g.vertices.push(VertexDecl { name: "v".into(), group: 0 });
    for i in 0..m {
        let mid = format!("m{i}");
        g.vertices.push(VertexDecl { name: mid.clone(), group: 0 });
        for (half, from, to) in [("h", "v", mid.as_str()), ("k", mid.as_str(), "v")] {
            let e = format!("{half}{i}");
            let er = format!("{half}{i}-");
            g.edges.push(EdgeDecl {
                name: e.clone(),
                reverse: er.clone(),
                from: from.to_string(),
                to: to.to_string(),
                group: 0,
                rho: 0,
            });
            g.edges.push(EdgeDecl {
                name: er,
                reverse: e,
                from: to.to_string(),
                to: from.to_string(),
                group: 0,
                rho: 0,
            });
        }
    }
    g.basepoint = "v".into();
    g
}

/// Loop with vertex group = edge group = Z/2 and identity embeddings;
/// the tree is a line and the group is Z/2 x Z.
pub fn z2_loop() -> Gog {
    let z2 = FiniteGroup::cyclic(2);
    Gog {
        groups: vec![NamedGroup { name: "Z2".into(), group: z2.clone() }],
        subgroups: Vec::new(),
        homs: vec![NamedHom { name: "id2".into(), src: 0, dst: 0, hom: Homomorphism::identity(&z2) }],
        vertices: vec![VertexDecl { name: "v".into(), group: 0 }],
        edges: vec![
            EdgeDecl {
                name: "a".into(),
                reverse: "a-".into(),
                from: "v".into(),
                to: "v".into(),
                group: 0,
                rho: 0,
            },
            EdgeDecl {
                name: "a-".into(),
                reverse: "a".into(),
                from: "v".into(),
                to: "v".into(),
                group: 0,
                rho: 0,
            },
        ],
        rays: Vec::new(),
        basepoint: "v".into(),
    }
}

/// Loop with vertex group Z/2 and trivial edge group: the tree is 4-regular
/// and vertex stabilizers have order 2 (Z/2 * Z).
pub fn z2_vertex_loop() -> Gog {
    let z2 = FiniteGroup::cyclic(2);
    let t = FiniteGroup::trivial();
    Gog {
        groups: vec![
            NamedGroup { name: "T".into(), group: t.clone() },
            NamedGroup { name: "Z2".into(), group: z2.clone() },
        ],
        subgroups: Vec::new(),
        homs: vec![NamedHom {
            name: "triv2".into(),
            src: 0,
            dst: 1,
            hom: Homomorphism::new(&t, &z2, vec![0]).unwrap(),
        }],
        vertices: vec![VertexDecl { name: "v".into(), group: 1 }],
        edges: vec![
            EdgeDecl {
                name: "a".into(),
                reverse: "a-".into(),
                from: "v".into(),
                to: "v".into(),
                group: 0,
                rho: 0,
            },
            EdgeDecl {
                name: "a-".into(),
                reverse: "a".into(),
                from: "v".into(),
                to: "v".into(),
                group: 0,
                rho: 0,
            },
        ],
        rays: Vec::new(),
        basepoint: "v".into(),
    }
}

/// Amalgam of two copies of S3 over the order-2 subgroup generated by a
/// transposition. The subgroup is self-normalizing, so path stabilizers die
/// after two steps: the action is 2-acylindrical on a 3-regular tree.
pub fn sym3_amalgam() -> Gog {
    let s3 = crate::group::sym3();
    let z2 = FiniteGroup::cyclic(2);
    // <(12)> = {0, 1} in the fixed element order of sym3().
    let incl = Homomorphism::new(&z2, &s3, vec![0, 1]).unwrap();
    Gog {
        groups: vec![
            NamedGroup { name: "C".into(), group: z2 },
            NamedGroup { name: "S3a".into(), group: s3.clone() },
            NamedGroup { name: "S3b".into(), group: s3.clone() },
        ],
        subgroups: Vec::new(),
        homs: vec![
            NamedHom { name: "inclA".into(), src: 0, dst: 1, hom: incl.clone() },
            NamedHom { name: "inclB".into(), src: 0, dst: 2, hom: incl },
        ],
        vertices: vec![
            VertexDecl { name: "u".into(), group: 1 },
            VertexDecl { name: "w".into(), group: 2 },
        ],
        edges: vec![
            EdgeDecl {
                name: "e".into(),
                reverse: "e-".into(),
                from: "u".into(),
                to: "w".into(),
                group: 0,
                rho: 1,
            },
            EdgeDecl {
                name: "e-".into(),
                reverse: "e".into(),
                from: "w".into(),
                to: "u".into(),
                group: 0,
                rho: 0,
            },
        ],
        rays: Vec::new(),
        basepoint: "u".into(),
    }
}

/// Two loop pairs joined by a bridge: the order-1 subshift splits into two
/// recurrent classes with the bridge letters transient.
pub fn dumbbell() -> Gog {
    let mut g = trivial_gog_base();
    g.vertices.push(VertexDecl { name: "u".into(), group: 0 });
    g.vertices.push(VertexDecl { name: "w".into(), group: 0 });
    for (name, at) in [("a", "u"), ("b", "w")] {
        let e = name.to_string();
        let er = format!("{name}-");
        g.edges.push(EdgeDecl {
            name: e.clone(),
            reverse: er.clone(),
            from: at.into(),
            to: at.into(),
            group: 0,
            rho: 0,
        });
        g.edges.push(EdgeDecl {
            name: er,
            reverse: e,
            from: at.into(),
            to: at.into(),
            group: 0,
            rho: 0,
        });
    }
    g.edges.push(EdgeDecl {
        name: "c".into(),
        reverse: "c-".into(),
        from: "u".into(),
        to: "w".into(),
        group: 0,
        rho: 0,
    });
    g.edges.push(EdgeDecl {
        name: "c-".into(),
        reverse: "c".into(),
        from: "w".into(),
        to: "u".into(),
        group: 0,
        rho: 0,
    });
    g.basepoint = "u".into();
    g
}

/// Nagao-type model with constant index q: one core vertex with a cyclic
/// group of order q+1, one cuspidal ray with chain Z_q <= Z_{q^2} <= ... so
/// the tree is (q+1)-regular and the exponent is log q.
pub fn nagao(q: usize, levels: usize) -> Gog {
    let parent_order = q.pow(levels as u32 + 1);
    assert!(parent_order <= 1 << 14, "chain parent too large to tabulate");
    let core = FiniteGroup::cyclic(q + 1);
    let parent = FiniteGroup::cyclic(parent_order);
    let t = FiniteGroup::trivial();
    let mut subgroups = Vec::new();
    let mut chain_names = Vec::new();
    for n in 0..=levels {
        // Multiples of q^{levels - n}: a cyclic subgroup of order q^{n+1}.
        let step = q.pow((levels - n) as u32);
        let elements: Vec<Elt> =
            (0..parent_order).step_by(step).map(|x| x as Elt).collect();
        let name = format!("c{n}");
        chain_names.push(name.clone());
        subgroups.push(NamedSubgroup {
            name,
            of: 2,
            sub: Subgroup::new(&parent, elements).unwrap(),
        });
    }
    Gog {
        groups: vec![
            NamedGroup { name: "K".into(), group: core.clone() },
            NamedGroup { name: "T".into(), group: t.clone() },
            NamedGroup { name: "P".into(), group: parent.clone() },
        ],
        subgroups,
        homs: vec![NamedHom {
            name: "trivK".into(),
            src: 1,
            dst: 0,
            hom: Homomorphism::new(&t, &core, vec![0]).unwrap(),
        }],
        vertices: vec![VertexDecl { name: "w".into(), group: 0 }],
        edges: Vec::new(),
        rays: vec![RayDecl {
            id: 0,
            attach: "w".into(),
            levels,
            data: RayLevels::Chain(chain_names),
            tail_index: BigUint::from(q),
            attach_group: 1,
            attach_rho: 0,
            attach_rho_up: None,
        }],
        basepoint: "w".into(),
    }
}

/// Index-only ray with the doubly exponential profile q(n) = 2^{2^n}: the
/// critical exponent of the full object is infinite.
pub fn superexponential(levels: usize) -> Gog {
    let klein = FiniteGroup::cyclic(2).direct_product(&FiniteGroup::cyclic(2));
    let t = FiniteGroup::trivial();
    let qs: Vec<BigUint> =
        (0..=levels as u32).map(|n| BigUint::from(2u32).pow(2u32.pow(n))).collect();
    Gog {
        groups: vec![
            NamedGroup { name: "G4".into(), group: klein.clone() },
            NamedGroup { name: "T".into(), group: t.clone() },
        ],
        subgroups: Vec::new(),
        homs: vec![NamedHom {
            name: "triv4".into(),
            src: 1,
            dst: 0,
            hom: Homomorphism::new(&t, &klein, vec![0]).unwrap(),
        }],
        vertices: vec![VertexDecl { name: "w".into(), group: 0 }],
        edges: Vec::new(),
        rays: vec![RayDecl {
            id: 0,
            attach: "w".into(),
            levels,
            data: RayLevels::Indices(qs),
            tail_index: BigUint::from(2u32),
            attach_group: 1,
            attach_rho: 0,
            attach_rho_up: None,
        }],
        basepoint: "w".into(),
    }
}

/// Trivial-core star with `rays` cuspidal rays whose chains are elementary
/// abelian 2-groups, the shape of the congruence-kernel quotient over F_2.
pub fn multicusp(rays: usize, levels: usize) -> Gog {
    let t = FiniteGroup::trivial();
    let mut parent = FiniteGroup::cyclic(2);
    for _ in 1..=levels {
        parent = parent.direct_product(&FiniteGroup::cyclic(2));
    }
    let parent_order = parent.order();
    let mut g = Gog {
        groups: vec![
            NamedGroup { name: "T".into(), group: t.clone() },
            NamedGroup { name: "P".into(), group: parent.clone() },
        ],
        subgroups: Vec::new(),
        homs: vec![NamedHom { name: "id".into(), src: 0, dst: 0, hom: Homomorphism::identity(&t) }],
        vertices: vec![VertexDecl { name: "w".into(), group: 0 }],
        edges: Vec::new(),
        rays: Vec::new(),
        basepoint: "w".into(),
    };
    // Chain: spans of the first n+1 coordinates.
    let mut chain_names = Vec::new();
    for n in 0..=levels {
        let block = 1usize << (levels - n);
        let elements: Vec<Elt> = (0..parent_order)
            .filter(|x| x % block == 0)
            .map(|x| x as Elt)
            .collect();
        let name = format!("c{n}");
        chain_names.push(name.clone());
        g.subgroups.push(NamedSubgroup {
            name,
            of: 1,
            sub: Subgroup::new(&parent, elements).unwrap(),
        });
    }
    let trivhom = NamedHom {
        name: "trivT".into(),
        src: 0,
        dst: 0,
        hom: Homomorphism::identity(&t),
    };
    g.homs.push(trivhom);
    for i in 0..rays {
        g.rays.push(RayDecl {
            id: i as u32,
            attach: "w".into(),
            levels,
            data: RayLevels::Chain(chain_names.clone()),
            tail_index: BigUint::from(2u32),
            attach_group: 0,
            attach_rho: 1,
            attach_rho_up: None,
        });
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gog::expand;
    use crate::parse::{parse_gog, serialize};

    #[test]
    fn zoo_members_expand_and_round_trip() {
        for gog in [
            wedge(2),
            wedge(3),
            subdivided_wedge(2),
            z2_loop(),
            z2_vertex_loop(),
            sym3_amalgam(),
            dumbbell(),
            nagao(2, 6),
            nagao(3, 5),
            superexponential(8),
            multicusp(3, 3),
        ] {
            expand(&gog).expect("zoo member expands");
            let text = serialize(&gog);
            let re = parse_gog(&text).expect("zoo member parses");
            assert_eq!(serialize(&re), text, "canonical round trip");
        }
    }

    #[test]
    fn multicusp_is_three_regular() {
        let q = expand(&multicusp(3, 3)).unwrap();
        for v in 0..q.verts.len() {
            assert_eq!(q.lift_valence(v), 3u32.into(), "{}", q.verts[v].name);
        }
    }
}
