//! Dual exact/float scalar, Perron eigendata for nonnegative matrices, exact
//! rational kernels, and transition-graph period machinery.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// A number that is either an exact rational or a float. The two variants
/// never mix inside one pipeline: `solve_ps` decides the mode once.
#[derive(Debug, Clone, PartialEq)]
pub enum Num {
    Q(BigRational),
    F(f64),
}

impl Num {
    pub fn zero_like(exact: bool) -> Num {
        if exact {
            Num::Q(BigRational::zero())
        } else {
            Num::F(0.0)
        }
    }

    pub fn from_usize(n: usize, exact: bool) -> Num {
        if exact {
            Num::Q(BigRational::from_integer(BigInt::from(n)))
        } else {
            Num::F(n as f64)
        }
    }

    pub fn ratio(p: i64, q: i64) -> Num {
        Num::Q(BigRational::new(BigInt::from(p), BigInt::from(q)))
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Num::Q(_))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Num::Q(r) => r.to_f64().unwrap_or(f64::NAN),
            Num::F(x) => *x,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Num::Q(r) => r.is_zero(),
            Num::F(x) => *x == 0.0,
        }
    }

    pub fn is_positive(&self) -> bool {
        match self {
            Num::Q(r) => r.is_positive(),
            Num::F(x) => *x > 0.0,
        }
    }

    pub fn add(&self, o: &Num) -> Num {
        match (self, o) {
            (Num::Q(a), Num::Q(b)) => Num::Q(a + b),
            (Num::F(a), Num::F(b)) => Num::F(a + b),
            _ => panic!("mixed exact/float arithmetic"),
        }
    }

    pub fn sub(&self, o: &Num) -> Num {
        match (self, o) {
            (Num::Q(a), Num::Q(b)) => Num::Q(a - b),
            (Num::F(a), Num::F(b)) => Num::F(a - b),
            _ => panic!("mixed exact/float arithmetic"),
        }
    }

    pub fn mul(&self, o: &Num) -> Num {
        match (self, o) {
            (Num::Q(a), Num::Q(b)) => Num::Q(a * b),
            (Num::F(a), Num::F(b)) => Num::F(a * b),
            _ => panic!("mixed exact/float arithmetic"),
        }
    }

    pub fn div(&self, o: &Num) -> Num {
        match (self, o) {
            (Num::Q(a), Num::Q(b)) => Num::Q(a / b),
            (Num::F(a), Num::F(b)) => Num::F(a / b),
            _ => panic!("mixed exact/float arithmetic"),
        }
    }

    pub fn scale_usize(&self, n: usize) -> Num {
        match self {
            Num::Q(a) => Num::Q(a * BigRational::from_integer(BigInt::from(n))),
            Num::F(a) => Num::F(a * n as f64),
        }
    }

    pub fn pow(&self, k: usize) -> Num {
        let mut out = match self {
            Num::Q(_) => Num::Q(BigRational::one()),
            Num::F(_) => Num::F(1.0),
        };
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// Exact string for rationals ("p/q"), shortest float repr otherwise.
    pub fn display(&self) -> String {
        match self {
            Num::Q(r) => {
                if r.denom().is_one() {
                    format!("{}", r.numer())
                } else {
                    format!("{}/{}", r.numer(), r.denom())
                }
            }
            Num::F(x) => format!("{x}"),
        }
    }

    pub fn approx_eq(&self, o: &Num, tol: f64) -> bool {
        match (self, o) {
            (Num::Q(a), Num::Q(b)) => a == b,
            _ => (self.to_f64() - o.to_f64()).abs() <= tol,
        }
    }
}

impl serde::Serialize for Num {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Num::Q(_) => s.serialize_str(&self.display()),
            Num::F(x) => s.serialize_f64(*x),
        }
    }
}

/// Arithmetic shared by the float and exact solver paths.
pub trait Field: Clone + PartialEq {
    fn f_zero() -> Self;
    fn f_one() -> Self;
    fn f_add(&self, o: &Self) -> Self;
    fn f_sub(&self, o: &Self) -> Self;
    fn f_mul(&self, o: &Self) -> Self;
    fn f_div(&self, o: &Self) -> Self;
    fn f_from_big(n: &num_bigint::BigUint) -> Self;
    fn f_pos(&self) -> bool;
}

impl Field for f64 {
    fn f_zero() -> Self {
        0.0
    }
    fn f_one() -> Self {
        1.0
    }
    fn f_add(&self, o: &Self) -> Self {
        self + o
    }
    fn f_sub(&self, o: &Self) -> Self {
        self - o
    }
    fn f_mul(&self, o: &Self) -> Self {
        self * o
    }
    fn f_div(&self, o: &Self) -> Self {
        self / o
    }
    fn f_from_big(n: &num_bigint::BigUint) -> Self {
        n.to_f64().unwrap_or(f64::INFINITY)
    }
    fn f_pos(&self) -> bool {
        *self > 0.0
    }
}

impl Field for BigRational {
    fn f_zero() -> Self {
        Zero::zero()
    }
    fn f_one() -> Self {
        One::one()
    }
    fn f_add(&self, o: &Self) -> Self {
        self + o
    }
    fn f_sub(&self, o: &Self) -> Self {
        self - o
    }
    fn f_mul(&self, o: &Self) -> Self {
        self * o
    }
    fn f_div(&self, o: &Self) -> Self {
        self / o
    }
    fn f_from_big(n: &num_bigint::BigUint) -> Self {
        big_to_rational(n)
    }
    fn f_pos(&self) -> bool {
        Signed::is_positive(self)
    }
}

/// Perron data of a nonnegative square matrix.
#[derive(Debug, Clone)]
pub struct Perron {
    pub radius: f64,
    pub residual: f64,
    /// Right eigenvector, positive on the recurrent part, normalized to sum 1.
    pub vector: Vec<f64>,
}

/// Spectral radius and eigenvector of a nonnegative matrix via shifted power
/// iteration on the recurrent part (the shift makes periodic matrices
/// converge); rows/columns outside the recurrent part are kept at zero.
pub fn perron(mat: &[Vec<f64>]) -> Result<Perron> {
    let n = mat.len();
    if n == 0 {
        return Ok(Perron { radius: 0.0, residual: 0.0, vector: Vec::new() });
    }
    let sccs = strongly_connected_components(&adjacency(mat));
    // Recurrent classes: SCCs with an internal edge.
    let mut recurrent = vec![false; n];
    for scc in &sccs {
        let has_edge = scc
            .iter()
            .any(|&i| scc.iter().any(|&j| mat[i][j] > 0.0));
        if has_edge {
            for &i in scc {
                recurrent[i] = true;
            }
        }
    }
    if !recurrent.iter().any(|&r| r) {
        // Nilpotent: finite tree case.
        return Ok(Perron { radius: 0.0, residual: 0.0, vector: vec![0.0; n] });
    }

    // Power iteration per recurrent class on (A + I); overall radius is the max.
    let mut best_radius = 0.0f64;
    let mut best_resid = 0.0f64;
    let mut vector = vec![0.0; n];
    for scc in &sccs {
        if !recurrent[scc[0]] {
            continue;
        }
        let idx = scc;
        let m = idx.len();
        let block: Vec<Vec<f64>> =
            idx.iter().map(|&gi| idx.iter().map(|&gj| mat[gi][gj]).collect()).collect();
        // Radius by scaled repeated squaring: rho(A) = prod scale_k^{2^-k},
        // entirely cancellation-free.
        let mut a = block.clone();
        let mut log_rho = 0.0f64;
        for k in 0..64 {
            let scale: f64 = a
                .iter()
                .map(|row| row.iter().sum::<f64>())
                .fold(0.0f64, f64::max);
            if scale == 0.0 {
                return Err(Error::Numeric("recurrent block collapsed".into()));
            }
            log_rho += scale.ln() / (1u64 << k) as f64;
            let mut sq = vec![vec![0.0; m]; m];
            for i in 0..m {
                for l in 0..m {
                    let x = a[i][l] / scale;
                    if x != 0.0 {
                        for j in 0..m {
                            sq[i][j] += x * (a[l][j] / scale);
                        }
                    }
                }
            }
            a = sq;
        }
        // Correction from the final normalized block.
        let tail: f64 = a
            .iter()
            .map(|row| row.iter().sum::<f64>())
            .fold(0.0f64, f64::max);
        if tail > 0.0 {
            log_rho += tail.ln() / ((1u64 << 63) as f64 * 2.0);
        }
        let lambda = log_rho.exp();
        // Vector by power iteration with the optimal shift rho, which kills
        // the opposite-sign mode of periodic blocks.
        let mut v = vec![1.0 / m as f64; m];
        let mut resid = f64::INFINITY;
        for _ in 0..100_000 {
            let mut w = vec![0.0; m];
            for i in 0..m {
                let mut acc = lambda * v[i];
                for j in 0..m {
                    acc += block[i][j] * v[j];
                }
                w[i] = acc;
            }
            let norm: f64 = w.iter().sum();
            if norm == 0.0 {
                return Err(Error::Numeric("power iteration collapsed".into()));
            }
            for x in w.iter_mut() {
                *x /= norm;
            }
            resid = 0.0;
            for i in 0..m {
                let mut acc = 0.0;
                for j in 0..m {
                    acc += block[i][j] * w[j];
                }
                resid = resid.max((acc - lambda * w[i]).abs());
            }
            let delta: f64 = w.iter().zip(&v).map(|(x, y)| (x - y).abs()).sum();
            v = w;
            if delta < 1e-16 && resid <= 2e-13 * lambda.max(1.0) {
                break;
            }
        }
        if resid > 1e-10 * lambda.max(1.0) {
            return Err(Error::Numeric(format!(
                "eigenvector residual {resid:e} at radius {lambda:e} (block size {m})"
            )));
        }
        if lambda > best_radius {
            best_radius = lambda;
            best_resid = resid;
        }
        for (i, &gi) in idx.iter().enumerate() {
            vector[gi] = v[i];
        }
    }
    let total: f64 = vector.iter().sum();
    if total > 0.0 {
        for x in vector.iter_mut() {
            *x /= total;
        }
    }
    Ok(Perron { radius: best_radius, residual: best_resid, vector })
}

fn adjacency(mat: &[Vec<f64>]) -> Vec<Vec<usize>> {
    mat.iter()
        .map(|row| row.iter().enumerate().filter(|(_, &x)| x > 0.0).map(|(j, _)| j).collect())
        .collect()
}

/// Tarjan, iterative, deterministic order.
pub fn strongly_connected_components(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut next = 0usize;
    let mut out: Vec<Vec<usize>> = Vec::new();

    #[derive(Clone, Copy)]
    struct Frame {
        v: usize,
        child: usize,
    }

    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call = vec![Frame { v: root, child: 0 }];
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(frame) = call.last_mut() {
            let v = frame.v;
            if frame.child < adj[v].len() {
                let w = adj[v][frame.child];
                frame.child += 1;
                if index[w] == usize::MAX {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push(Frame { v: w, child: 0 });
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(parent) = call.last() {
                    low[parent.v] = low[parent.v].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    out.push(comp);
                }
            }
        }
    }
    out.sort_by_key(|c| c[0]);
    out
}

/// gcd of cycle lengths within one strongly connected component, via BFS
/// depth differences over non-tree edges. 0 for a single vertex without loops.
pub fn component_period(adj: &[Vec<usize>], comp: &[usize]) -> usize {
    let inside: std::collections::BTreeMap<usize, usize> =
        comp.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut depth = vec![usize::MAX; comp.len()];
    let mut queue = std::collections::VecDeque::new();
    depth[0] = 0;
    queue.push_back(0usize);
    let mut g: usize = 0;
    while let Some(i) = queue.pop_front() {
        let v = comp[i];
        for &w in &adj[v] {
            if let Some(&j) = inside.get(&w) {
                if depth[j] == usize::MAX {
                    depth[j] = depth[i] + 1;
                    queue.push_back(j);
                } else {
                    let diff = (depth[i] + 1).abs_diff(depth[j]);
                    g = gcd(g, diff);
                }
            }
        }
    }
    g
}

pub fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Solves (A - I) x = 0 over the rationals; returns a kernel vector with all
/// entries nonnegative and not all zero when the kernel supports one.
pub fn rational_unit_kernel(a: &[Vec<BigRational>]) -> Option<Vec<BigRational>> {
    let n = a.len();
    // M = A - I.
    let mut m: Vec<Vec<BigRational>> = a.to_vec();
    for i in 0..n {
        m[i][i] = &m[i][i] - BigRational::one();
    }
    // Row echelon with full pivoting on rows.
    let mut pivot_col = vec![usize::MAX; n];
    let mut rank = 0usize;
    for col in 0..n {
        let mut piv = None;
        for row in rank..n {
            if !m[row][col].is_zero() {
                piv = Some(row);
                break;
            }
        }
        let Some(p) = piv else { continue };
        m.swap(rank, p);
        let inv = m[rank][col].clone();
        for x in m[rank].iter_mut() {
            *x = &*x / &inv;
        }
        for row in 0..n {
            if row != rank && !m[row][col].is_zero() {
                let f = m[row][col].clone();
                for c2 in 0..n {
                    let delta = &m[rank][c2] * &f;
                    m[row][c2] = &m[row][c2] - delta;
                }
            }
        }
        pivot_col[rank] = col;
        rank += 1;
    }
    if rank == n {
        return None;
    }
    // Free column: pick the first non-pivot column, set it to 1.
    let pivots: Vec<usize> = pivot_col[..rank].to_vec();
    let free = (0..n).find(|c| !pivots.contains(c))?;
    let mut x = vec![BigRational::zero(); n];
    x[free] = BigRational::one();
    for (r, &pc) in pivots.iter().enumerate() {
        x[pc] = -m[r][free].clone();
    }
    // Positivity on the support; flip sign if needed.
    if x.iter().any(|v| v.is_negative()) {
        if x.iter().any(|v| v.is_positive()) {
            return None;
        }
        for v in x.iter_mut() {
            *v = -v.clone();
        }
    }
    Some(x)
}

/// Detects an integer arbitrarily close to `x` (within `tol`).
pub fn near_integer(x: f64, tol: f64) -> Option<u64> {
    let r = x.round();
    if r >= 0.0 && (x - r).abs() <= tol {
        Some(r as u64)
    } else {
        None
    }
}

pub fn big_to_rational(n: &num_bigint::BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from(n.clone()))
}

pub fn rational_from_f64(x: f64) -> BigRational {
    BigRational::from_f64(x).unwrap_or_else(BigRational::zero)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perron_of_three_regular_nonbacktracking() {
        // Wedge of two circles: 4 directed edges, each with 3 successors.
        let mat = vec![vec![1.0, 1.0, 1.0, 0.0]; 1];
        let _ = mat;
        let mut m = vec![vec![0.0; 4]; 4];
        // edges 0=a,1=a-,2=b,3=b-; successors: everything but the reverse.
        let rev = [1, 0, 3, 2];
        for e in 0..4 {
            for f in 0..4 {
                if f != rev[e] {
                    m[e][f] = 1.0;
                }
            }
        }
        let p = perron(&m).unwrap();
        assert!((p.radius - 3.0).abs() < 1e-12);
    }

    #[test]
    fn perron_of_bipartite_matrix_converges() {
        // Period-2 matrix; the +I shift must still converge.
        let m = vec![vec![0.0, 2.0], vec![3.0, 0.0]];
        let p = perron(&m).unwrap();
        assert!((p.radius - 6.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn nilpotent_has_radius_zero() {
        let m = vec![vec![0.0, 1.0], vec![0.0, 0.0]];
        let p = perron(&m).unwrap();
        assert_eq!(p.radius, 0.0);
    }

    #[test]
    fn exact_kernel_matches_power_iteration() {
        // A/3 has eigenvalue 1 with positive kernel for the wedge matrix.
        let rev = [1usize, 0, 3, 2];
        let third = BigRational::new(BigInt::from(1), BigInt::from(3));
        let mut m = vec![vec![BigRational::zero(); 4]; 4];
        for e in 0..4 {
            for f in 0..4 {
                if f != rev[e] {
                    m[e][f] = third.clone();
                }
            }
        }
        let x = rational_unit_kernel(&m).unwrap();
        assert!(x.iter().all(|v| v.is_positive()));
        assert!(x.windows(2).all(|w| w[0] == w[1]), "symmetry forces equality");
    }

    #[test]
    fn period_detection() {
        // 2-cycle has period 2; adding a self loop makes it 1.
        let adj = vec![vec![1], vec![0]];
        let sccs = strongly_connected_components(&adj);
        assert_eq!(sccs.len(), 1);
        assert_eq!(component_period(&adj, &sccs[0]), 2);
        let adj2 = vec![vec![0, 1], vec![0]];
        let sccs2 = strongly_connected_components(&adj2);
        assert_eq!(component_period(&adj2, &sccs2[0]), 1);
    }
}
