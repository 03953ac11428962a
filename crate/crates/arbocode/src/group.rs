//! Finite groups given by explicit multiplication tables, plus subgroups,
//! homomorphisms and coset partitions.
//!
//! Element 0 is always the identity. All partitions use the minimal element
//! index as canonical representative and are sorted, so every consumer of
//! this module is deterministic.

use crate::error::{Error, Result};

/// Index of a group element in its multiplication table.
pub type Elt = u16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteGroup {
    order: usize,
    /// Row-major: `table[a * order + b] = a * b`.
    table: Vec<Elt>,
    inverse: Vec<Elt>,
    pub element_names: Option<Vec<String>>,
}

impl FiniteGroup {
    /// Validates identity, invertibility and associativity on construction.
    /// Associativity is checked exhaustively up to order 64 and on a
    /// deterministic sample above that.
    pub fn from_table(order: usize, table: Vec<Elt>) -> Result<Self> {
        if order == 0 {
            return Err(Error::invalid("group order must be positive"));
        }
        if order > Elt::MAX as usize {
            return Err(Error::invalid(format!("group order {order} too large")));
        }
        if table.len() != order * order {
            return Err(Error::invalid(format!(
                "group table has {} entries, expected {}",
                table.len(),
                order * order
            )));
        }
        if table.iter().any(|&x| (x as usize) >= order) {
            return Err(Error::invalid("group table entry out of range"));
        }
        let at = |a: usize, b: usize| table[a * order + b] as usize;
        for a in 0..order {
            if at(0, a) != a || at(a, 0) != a {
                return Err(Error::invalid("element 0 is not a two-sided identity"));
            }
        }
        let mut inverse = vec![Elt::MAX; order];
        for a in 0..order {
            match (0..order).find(|&b| at(a, b) == 0) {
                Some(b) => {
                    if at(b, a) != 0 {
                        return Err(Error::invalid(format!("element {a} has no two-sided inverse")));
                    }
                    inverse[a] = b as Elt;
                }
                None => return Err(Error::invalid(format!("element {a} is not invertible"))),
            }
        }
        let assoc = |a: usize, b: usize, c: usize| at(at(a, b), c) == at(a, at(b, c));
        if order <= 64 {
            for a in 0..order {
                for b in 0..order {
                    for c in 0..order {
                        if !assoc(a, b, c) {
                            return Err(Error::invalid(format!(
                                "associativity fails at ({a},{b},{c})"
                            )));
                        }
                    }
                }
            }
        } else {
            // Deterministic LCG sample of triples.
            let mut s: u64 = 0x9e3779b97f4a7c15;
            for _ in 0..200_000 {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let a = (s >> 33) as usize % order;
                let b = (s >> 13) as usize % order;
                let c = s as usize % order;
                if !assoc(a, b, c) {
                    return Err(Error::invalid(format!("associativity fails at ({a},{b},{c})")));
                }
            }
        }
        Ok(FiniteGroup { order, table, inverse, element_names: None })
    }

    pub fn trivial() -> Self {
        FiniteGroup { order: 1, table: vec![0], inverse: vec![0], element_names: None }
    }

    pub fn cyclic(n: usize) -> Self {
        let mut table = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                table.push(((a + b) % n) as Elt);
            }
        }
        FiniteGroup::from_table(n, table).expect("cyclic table is a group")
    }

    pub fn direct_product(&self, other: &FiniteGroup) -> Self {
        let n = self.order * other.order;
        let idx = |a: usize, b: usize| a * other.order + b;
        let mut table = vec![0 as Elt; n * n];
        for a1 in 0..self.order {
            for a2 in 0..other.order {
                for b1 in 0..self.order {
                    for b2 in 0..other.order {
                        let p = idx(
                            self.mul(a1 as Elt, b1 as Elt) as usize,
                            other.mul(a2 as Elt, b2 as Elt) as usize,
                        );
                        table[idx(a1, a2) * n + idx(b1, b2)] = p as Elt;
                    }
                }
            }
        }
        FiniteGroup::from_table(n, table).expect("product table is a group")
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn mul(&self, a: Elt, b: Elt) -> Elt {
        self.table[a as usize * self.order + b as usize]
    }

    #[inline]
    pub fn inv(&self, a: Elt) -> Elt {
        self.inverse[a as usize]
    }

    pub fn conj(&self, g: Elt, by: Elt) -> Elt {
        self.mul(self.inv(by), self.mul(g, by))
    }

    pub fn elements(&self) -> impl Iterator<Item = Elt> + '_ {
        (0..self.order as Elt).map(|e| e)
    }

    pub fn is_abelian(&self) -> bool {
        (0..self.order as Elt)
            .all(|a| (0..self.order as Elt).all(|b| self.mul(a, b) == self.mul(b, a)))
    }

    /// Smallest subgroup containing `gens`.
    pub fn generated_subgroup(&self, gens: &[Elt]) -> Subgroup {
        let mut seen = vec![false; self.order];
        seen[0] = true;
        let mut queue = vec![0 as Elt];
        while let Some(g) = queue.pop() {
            for &h in gens {
                let p = self.mul(g, h);
                if !seen[p as usize] {
                    seen[p as usize] = true;
                    queue.push(p);
                }
                let q = self.mul(g, self.inv(h));
                if !seen[q as usize] {
                    seen[q as usize] = true;
                    queue.push(q);
                }
            }
        }
        let elements =
            (0..self.order as Elt).filter(|&e| seen[e as usize]).collect::<Vec<_>>();
        Subgroup { elements }
    }
}

/// A subgroup stored as a sorted element set of its parent group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subgroup {
    elements: Vec<Elt>,
}

impl Subgroup {
    pub fn new(parent: &FiniteGroup, mut elements: Vec<Elt>) -> Result<Self> {
        elements.sort_unstable();
        elements.dedup();
        if elements.first() != Some(&0) {
            return Err(Error::invalid("subgroup must contain the identity 0"));
        }
        if elements.iter().any(|&e| e as usize >= parent.order()) {
            return Err(Error::invalid("subgroup element out of range"));
        }
        for &a in &elements {
            if elements.binary_search(&parent.inv(a)).is_err() {
                return Err(Error::invalid(format!("subgroup not closed under inverse at {a}")));
            }
            for &b in &elements {
                if elements.binary_search(&parent.mul(a, b)).is_err() {
                    return Err(Error::invalid(format!(
                        "subgroup not closed under product at ({a},{b})"
                    )));
                }
            }
        }
        Ok(Subgroup { elements })
    }

    pub fn whole(parent: &FiniteGroup) -> Self {
        Subgroup { elements: parent.elements().collect() }
    }

    pub fn trivial() -> Self {
        Subgroup { elements: vec![0] }
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[Elt] {
        &self.elements
    }

    pub fn contains(&self, e: Elt) -> bool {
        self.elements.binary_search(&e).is_ok()
    }

    pub fn is_subgroup_of(&self, other: &Subgroup) -> bool {
        self.elements.iter().all(|&e| other.contains(e))
    }

    /// Reindexed multiplication table of this subgroup as a standalone group,
    /// together with the map from new indices to parent elements.
    ///
    /// Requires the identity-first property, which holds since elements are
    /// sorted and contain 0.
    pub fn as_group(&self, parent: &FiniteGroup) -> (FiniteGroup, Vec<Elt>) {
        let n = self.elements.len();
        let pos = |e: Elt| self.elements.binary_search(&e).expect("closed") as Elt;
        let mut table = Vec::with_capacity(n * n);
        for &a in &self.elements {
            for &b in &self.elements {
                table.push(pos(parent.mul(a, b)));
            }
        }
        let g = FiniteGroup::from_table(n, table).expect("subgroup table is a group");
        (g, self.elements.clone())
    }
}

/// A homomorphism between table groups, stored one image per source element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Homomorphism {
    image_of: Vec<Elt>,
}

impl Homomorphism {
    pub fn new(src: &FiniteGroup, dst: &FiniteGroup, image_of: Vec<Elt>) -> Result<Self> {
        if image_of.len() != src.order() {
            return Err(Error::invalid(format!(
                "hom map has {} entries, expected {}",
                image_of.len(),
                src.order()
            )));
        }
        if image_of.iter().any(|&e| e as usize >= dst.order()) {
            return Err(Error::invalid("hom image out of range"));
        }
        if image_of[0] != 0 {
            return Err(Error::invalid("hom must send identity to identity"));
        }
        for a in 0..src.order() as Elt {
            for b in 0..src.order() as Elt {
                let lhs = image_of[src.mul(a, b) as usize];
                let rhs = dst.mul(image_of[a as usize], image_of[b as usize]);
                if lhs != rhs {
                    return Err(Error::invalid(format!("hom not multiplicative at ({a},{b})")));
                }
            }
        }
        Ok(Homomorphism { image_of })
    }

    pub fn identity(g: &FiniteGroup) -> Self {
        Homomorphism { image_of: g.elements().collect() }
    }

    #[inline]
    pub fn apply(&self, a: Elt) -> Elt {
        self.image_of[a as usize]
    }

    pub fn src_order(&self) -> usize {
        self.image_of.len()
    }

    pub fn image(&self) -> Vec<Elt> {
        let mut im: Vec<Elt> = self.image_of.clone();
        im.sort_unstable();
        im.dedup();
        im
    }

    /// Unique preimage of `e`; only meaningful for injective maps.
    pub fn preimage(&self, e: Elt) -> Option<Elt> {
        self.image_of.iter().position(|&x| x == e).map(|i| i as Elt)
    }
}

/// True iff `h` is injective.
pub fn check_monomorphism(h: &Homomorphism) -> bool {
    h.image().len() == h.src_order()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CosetSide {
    Left,
    Right,
}

/// Partition of `g` into cosets of `h` (`Left` = gH, `Right` = Hg),
/// each coset sorted, the list sorted by its minimal representative.
pub fn cosets(g: &FiniteGroup, h: &Subgroup, side: CosetSide) -> Result<Vec<Vec<Elt>>> {
    check_subgroup(g, h)?;
    let mut seen = vec![false; g.order()];
    let mut out = Vec::new();
    for x in 0..g.order() as Elt {
        if seen[x as usize] {
            continue;
        }
        let mut class: Vec<Elt> = h
            .elements()
            .iter()
            .map(|&k| match side {
                CosetSide::Left => g.mul(x, k),
                CosetSide::Right => g.mul(k, x),
            })
            .collect();
        class.sort_unstable();
        class.dedup();
        for &y in &class {
            seen[y as usize] = true;
        }
        out.push(class);
    }
    Ok(out)
}

/// Partition of `g` into double cosets H·x·K, canonical representative the
/// minimal element; the identity class comes first.
pub fn double_cosets(h: &Subgroup, g: &FiniteGroup, k: &Subgroup) -> Result<Vec<Vec<Elt>>> {
    check_subgroup(g, h)?;
    check_subgroup(g, k)?;
    let mut seen = vec![false; g.order()];
    let mut out = Vec::new();
    for x in 0..g.order() as Elt {
        if seen[x as usize] {
            continue;
        }
        let mut class = Vec::new();
        for &a in h.elements() {
            let ax = g.mul(a, x);
            for &b in k.elements() {
                let y = g.mul(ax, b);
                if !seen[y as usize] {
                    seen[y as usize] = true;
                    class.push(y);
                }
            }
        }
        class.sort_unstable();
        out.push(class);
    }
    Ok(out)
}

/// `[G : H]` as an exact integer.
pub fn subgroup_index(g: &FiniteGroup, h: &Subgroup) -> Result<usize> {
    check_subgroup(g, h)?;
    debug_assert_eq!(g.order() % h.order(), 0);
    Ok(g.order() / h.order())
}

fn check_subgroup(g: &FiniteGroup, h: &Subgroup) -> Result<()> {
    if h.elements().iter().any(|&e| e as usize >= g.order()) {
        return Err(Error::invalid("not a subgroup: element out of range"));
    }
    for &a in h.elements() {
        if !h.contains(g.inv(a)) {
            return Err(Error::invalid("not a subgroup: missing inverse"));
        }
        for &b in h.elements() {
            if !h.contains(g.mul(a, b)) {
                return Err(Error::invalid("not a subgroup: not closed"));
            }
        }
    }
    Ok(())
}

/// The symmetric group S3 with a fixed element order, used by tests and
/// shipped example files. Elements: 0=id, 1=(12), 2=(13), 3=(23), 4=(123), 5=(132).
pub fn sym3() -> FiniteGroup {
    // Permutations as images of (1,2,3).
    let perms: [[u8; 3]; 6] =
        [[1, 2, 3], [2, 1, 3], [3, 2, 1], [1, 3, 2], [2, 3, 1], [3, 1, 2]];
    let compose = |p: [u8; 3], q: [u8; 3]| {
        // (p*q)(i) = p(q(i))
        [p[q[0] as usize - 1], p[q[1] as usize - 1], p[q[2] as usize - 1]]
    };
    let mut table = Vec::with_capacity(36);
    for a in 0..6 {
        for b in 0..6 {
            let c = compose(perms[a], perms[b]);
            let idx = perms.iter().position(|&p| p == c).unwrap();
            table.push(idx as Elt);
        }
    }
    FiniteGroup::from_table(6, table).expect("S3 table is a group")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_broken_identity() {
        // Swap rows so 0 is not the identity.
        let table = vec![1, 0, 0, 1];
        assert!(FiniteGroup::from_table(2, table).is_err());
    }

    #[test]
    fn rejects_non_associative() {
        // A quasigroup table with identity but failing associativity.
        // Rows/cols are latin, 0 is two-sided identity.
        let table = vec![
            0, 1, 2, 3, 4, //
            1, 0, 3, 4, 2, //
            2, 4, 0, 1, 3, //
            3, 2, 4, 0, 1, //
            4, 3, 1, 2, 0,
        ];
        assert!(FiniteGroup::from_table(5, table).is_err());
    }

    #[test]
    fn monomorphism_examples() {
        let s3 = sym3();
        let id = Homomorphism::identity(&s3);
        assert!(check_monomorphism(&id));

        let z2 = FiniteGroup::cyclic(2);
        let constant = Homomorphism::new(&z2, &s3, vec![0, 0]).unwrap();
        assert!(!check_monomorphism(&constant));

        // Inclusion of <(12)> = {0,1} into S3.
        let incl = Homomorphism::new(&z2, &s3, vec![0, 1]).unwrap();
        assert!(check_monomorphism(&incl));

        // Oracle: injectivity == trivial kernel, by brute force.
        for h in [&id, &incl] {
            let kernel = (0..h.src_order() as Elt).filter(|&a| h.apply(a) == 0).count();
            assert_eq!(check_monomorphism(h), kernel == 1);
        }
    }

    #[test]
    fn coset_examples() {
        let s3 = sym3();
        let whole = Subgroup::whole(&s3);
        let one = cosets(&s3, &whole, CosetSide::Left).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0][0], 0);

        let triv = Subgroup::trivial();
        let singletons = cosets(&s3, &triv, CosetSide::Left).unwrap();
        assert_eq!(singletons.len(), 6);
        assert!(singletons.iter().all(|c| c.len() == 1));

        let h = Subgroup::new(&s3, vec![0, 1]).unwrap();
        let left = cosets(&s3, &h, CosetSide::Left).unwrap();
        assert_eq!(left.len(), 3);
        assert!(left.iter().all(|c| c.len() == 2));

        // Partition oracle: disjoint union covering G, constant size |H|.
        let mut all: Vec<Elt> = left.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..6).collect::<Vec<_>>());

        // Brute-force oracle: left cosets by the relation x^{-1}y in H.
        let mut oracle: Vec<Vec<Elt>> = Vec::new();
        let mut seen = [false; 6];
        for x in 0..6 as Elt {
            if seen[x as usize] {
                continue;
            }
            let mut c: Vec<Elt> = (0..6 as Elt)
                .filter(|&y| h.contains(s3.mul(s3.inv(x), y)))
                .collect();
            c.sort_unstable();
            for &y in &c {
                seen[y as usize] = true;
            }
            oracle.push(c);
        }
        assert_eq!(left, oracle);
    }

    #[test]
    fn double_coset_examples() {
        let s3 = sym3();
        let triv = Subgroup::trivial();
        let whole = Subgroup::whole(&s3);

        let singles = double_cosets(&triv, &s3, &triv).unwrap();
        assert_eq!(singles.len(), 6);

        let one = double_cosets(&whole, &s3, &triv).unwrap();
        assert_eq!(one.len(), 1);

        let h = Subgroup::new(&s3, vec![0, 1]).unwrap();
        let classes = double_cosets(&h, &s3, &h).unwrap();
        assert_eq!(classes.len(), 2);
        let mut sizes: Vec<usize> = classes.iter().map(|c| c.len()).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![2, 4]);

        // |HxK| = |H||K| / |H ∩ xKx^{-1}| for each representative x.
        for class in &classes {
            let x = class[0];
            let inter = h
                .elements()
                .iter()
                .filter(|&&a| h.contains(s3.conj(a, s3.inv(x))))
                .count();
            assert_eq!(class.len(), h.order() * h.order() / inter);
        }
        let total: usize = classes.iter().map(|c| c.len()).sum();
        assert_eq!(total, 6);
    }

    #[test]
    fn index_examples() {
        let s3 = sym3();
        assert_eq!(subgroup_index(&s3, &Subgroup::whole(&s3)).unwrap(), 1);
        assert_eq!(subgroup_index(&s3, &Subgroup::trivial()).unwrap(), 6);
        let rot = Subgroup::new(&s3, vec![0, 4, 5]).unwrap();
        assert_eq!(subgroup_index(&s3, &rot).unwrap(), 2);
    }

    #[test]
    fn generated_subgroup_matches_closure() {
        let s3 = sym3();
        let h = s3.generated_subgroup(&[1]);
        assert_eq!(h.elements(), &[0, 1]);
        let whole = s3.generated_subgroup(&[1, 4]);
        assert_eq!(whole.order(), 6);
    }
}
