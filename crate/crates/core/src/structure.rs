//! Graph structure of a system matrix: strongly connected components, their
//! periods, the phase blow-up that makes every component aperiodic, and the
//! matching lift of targets to the blown-up coordinates.

use std::fmt;

use num_integer::Integer;
use num_rational::BigRational;
use num_traits::Zero;

use crate::fpnum::FpNumber;
use crate::graph;
use crate::lds::Lds;
use crate::predicates::{Polynomial, Relation, SemialgebraicSet};

/// How the period of a component is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PeriodMode {
    /// gcd of all cycle lengths (the usual period of an irreducible matrix).
    #[default]
    Gcd,
    /// lcm of the lengths of all simple cycles. Exponential to compute and
    /// possibly huge; only for experiments on tiny graphs.
    SimpleCycleLcm,
}

/// Components in topological order (feeders before the components they feed).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SccDecomposition {
    components: Vec<Vec<usize>>,
    component_of: Vec<usize>,
    feeders: Vec<Vec<usize>>,
    periods: Vec<u64>,
    cyclic: Vec<bool>,
}

impl SccDecomposition {
    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn component(&self, c: usize) -> &[usize] {
        &self.components[c]
    }

    /// Index of the component containing vertex `v`.
    pub fn component_of(&self, v: usize) -> usize {
        self.component_of[v]
    }

    /// Components with an edge into `c`, ascending.
    pub fn feeders(&self, c: usize) -> &[usize] {
        &self.feeders[c]
    }

    /// Period of `c`; 1 for a vertex without a self-loop.
    pub fn period(&self, c: usize) -> u64 {
        self.periods[c]
    }

    pub fn periods(&self) -> &[u64] {
        &self.periods
    }

    /// Whether `c` carries at least one cycle.
    pub fn is_cyclic(&self, c: usize) -> bool {
        self.cyclic[c]
    }

    /// lcm of all component periods.
    pub fn common_period(&self) -> u64 {
        self.periods.iter().fold(1, |acc, &p| acc.lcm(&p))
    }
}

impl fmt::Display for SccDecomposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (c, comp) in self.components.iter().enumerate() {
            let names: Vec<String> = comp.iter().map(|v| format!("x{}", v + 1)).collect();
            let feeders: Vec<String> = self.feeders[c].iter().map(|f| format!("S{}", f + 1)).collect();
            write!(f, "S{} = {{{}}} period={}", c + 1, names.join(","), self.periods[c])?;
            if !self.cyclic[c] {
                f.write_str(" acyclic")?;
            }
            if !feeders.is_empty() {
                write!(f, " fed-by={}", feeders.join(","))?;
            }
            writeln!(f)?;
        }
        write!(f, "P={}", self.common_period())
    }
}

pub fn scc_decompose(lds: &Lds) -> SccDecomposition {
    scc_decompose_with(lds, PeriodMode::Gcd)
}

pub fn scc_decompose_with(lds: &Lds, mode: PeriodMode) -> SccDecomposition {
    let succ = lds.successors();
    let components = graph::strongly_connected_components(&succ);
    let mut component_of = vec![0; lds.dim()];
    for (c, comp) in components.iter().enumerate() {
        for &v in comp {
            component_of[v] = c;
        }
    }
    let mut feeders = vec![Vec::new(); components.len()];
    for (u, targets) in succ.iter().enumerate() {
        for &v in targets {
            let (cu, cv) = (component_of[u], component_of[v]);
            if cu != cv {
                feeders[cv].push(cu);
            }
        }
    }
    for list in &mut feeders {
        list.sort_unstable();
        list.dedup();
    }
    let mut periods = Vec::with_capacity(components.len());
    let mut cyclic = Vec::with_capacity(components.len());
    for comp in &components {
        let p = component_period(&succ, comp, mode);
        cyclic.push(p.is_some());
        periods.push(p.unwrap_or(1));
    }
    SccDecomposition {
        components,
        component_of,
        feeders,
        periods,
        cyclic,
    }
}

/// Period of a strongly connected vertex set of `lds`; 1 when it has no cycle.
pub fn scc_period(lds: &Lds, component: &[usize], mode: PeriodMode) -> u64 {
    component_period(&lds.successors(), component, mode).unwrap_or(1)
}

fn component_period(succ: &[Vec<usize>], comp: &[usize], mode: PeriodMode) -> Option<u64> {
    match mode {
        PeriodMode::Gcd => graph::period(succ, comp),
        PeriodMode::SimpleCycleLcm => {
            let lengths = graph::simple_cycle_lengths(succ, comp);
            (!lengths.is_empty()).then(|| lengths.iter().fold(1u64, |a, l| a.lcm(l)))
        }
    }
}

/// A system with every state annotated by a phase `i ∈ [0, P)`.
///
/// State `(q, i)` has index `q·P + i`. The blown-up matrix moves phase `i`
/// to phase `i + 1 mod P`, so at step `t` only phase `t mod P` is nonzero and
/// it carries the original orbit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhasedLds {
    original: Lds,
    factor: u64,
    lds: Lds,
}

impl PhasedLds {
    pub fn original(&self) -> &Lds {
        &self.original
    }

    /// The blow-up factor `P`.
    pub fn factor(&self) -> u64 {
        self.factor
    }

    /// The blown-up system of dimension `d·P`.
    pub fn lds(&self) -> &Lds {
        &self.lds
    }

    pub fn index(&self, q: usize, phase: u64) -> usize {
        q * self.factor as usize + phase as usize
    }

    /// `(q, i)` of a blown-up index.
    pub fn state(&self, index: usize) -> (usize, u64) {
        let p = self.factor as usize;
        (index / p, (index % p) as u64)
    }

    /// Reads the original vector at step `t` off a blown-up vector.
    pub fn project(&self, v: &[FpNumber], t: u64) -> Vec<FpNumber> {
        let phase = t % self.factor;
        (0..self.original.dim())
            .map(|q| v[self.index(q, phase)].clone())
            .collect()
    }

    /// Places an original vector at `phase`, zero elsewhere.
    pub fn lift_vector<T: Clone>(&self, v: &[T], phase: u64, zero: T) -> Vec<T> {
        let mut out = vec![zero; self.lds.dim()];
        for (q, x) in v.iter().enumerate() {
            out[self.index(q, phase)] = x.clone();
        }
        out
    }
}

/// Blow-up by the lcm of the component periods.
pub fn blowup(lds: &Lds) -> PhasedLds {
    blowup_with(lds, PeriodMode::Gcd)
}

pub fn blowup_with(lds: &Lds, mode: PeriodMode) -> PhasedLds {
    let factor = scc_decompose_with(lds, mode).common_period();
    blowup_by(lds, factor)
}

/// Blow-up by an explicit factor `P ≥ 1`.
pub fn blowup_by(lds: &Lds, factor: u64) -> PhasedLds {
    assert!(factor >= 1, "blow-up factor must be positive");
    let d = lds.dim();
    let p = factor as usize;
    let n = d * p;
    let mut matrix = vec![vec![BigRational::zero(); n]; n];
    for q in 0..d {
        for q2 in lds.row_support(q) {
            for i in 0..p {
                matrix[q * p + (i + 1) % p][q2 * p + i] = lds.entry(q, q2).clone();
            }
        }
    }
    let mut init = vec![BigRational::zero(); n];
    for (q, x) in lds.init().iter().enumerate() {
        init[q * p] = x.clone();
    }
    let blown = Lds::new(matrix, init, *lds.format()).expect("square by construction");
    PhasedLds {
        original: lds.clone(),
        factor,
        lds: blown,
    }
}

/// `Y/i`: the target over blown-up coordinates that holds exactly when the
/// phase-`i` coordinates satisfy `Y` and every other phase is zero.
pub fn lift_target(y: &SemialgebraicSet, phase: u64, dim: usize, factor: u64) -> SemialgebraicSet {
    assert!(phase < factor, "phase out of range");
    let p = factor as usize;
    let index = |q: usize| q * p + phase as usize;
    let mut out = y.map_variables(&index);
    for q in 0..dim {
        for j in 0..p {
            if j as u64 != phase {
                let v = Polynomial::variable(q * p + j);
                out = out.and(SemialgebraicSet::atom(v, Relation::Eq));
            }
        }
    }
    out
}

/// Smallest multiple `C` of the blow-up factor such that `M'^C` is positive
/// on every pair of same-phase states of `component`. `None` when the
/// component has no cycle.
pub fn positivity_index(phased: &PhasedLds, component: &[usize]) -> Option<u64> {
    let n = component.len();
    let p = phased.factor();
    let mut local = vec![usize::MAX; phased.lds().dim()];
    for (k, &v) in component.iter().enumerate() {
        local[v] = k;
    }
    // adjacency: adj[u][v] iff edge u -> v inside the component
    let mut adj = vec![vec![false; n]; n];
    for (k, &v) in component.iter().enumerate() {
        for u in phased.lds().row_support(v) {
            if local[u] != usize::MAX {
                adj[local[u]][k] = true;
            }
        }
    }
    if !adj.iter().flatten().any(|&e| e) {
        return None;
    }
    let mul = |a: &[Vec<bool>], b: &[Vec<bool>]| -> Vec<Vec<bool>> {
        (0..n)
            .map(|i| (0..n).map(|j| (0..n).any(|k| a[i][k] && b[k][j])).collect())
            .collect()
    };
    let mut step = adj.clone();
    for _ in 1..p {
        step = mul(&step, &adj);
    }
    let phase = |k: usize| component[k] as u64 % p;
    let positive = |m: &[Vec<bool>]| (0..n).all(|i| (0..n).all(|j| phase(i) != phase(j) || m[i][j]));
    let mut power = step.clone();
    // Wielandt: a primitive n×n boolean matrix is positive by power (n−1)²+1
    for k in 1..=(n * n + 1) as u64 {
        if positive(&power) {
            return Some(k * p);
        }
        power = mul(&power, &step);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fpnum::FpFormat;

    fn sys(m: &[Vec<i64>], x: &[i64]) -> Lds {
        Lds::from_integers(m, x, FpFormat::decimal(1).unwrap()).unwrap()
    }

    #[test]
    fn identity_is_three_singletons() {
        let lds = sys(&[vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]], &[1, 1, 1]);
        let dec = scc_decompose(&lds);
        assert_eq!(dec.len(), 3);
        assert!((0..3).all(|c| dec.feeders(c).is_empty() && dec.period(c) == 1));
    }

    #[test]
    fn swap_is_one_component_of_period_two() {
        let lds = sys(&[vec![0, 1], vec![1, 0]], &[1, 0]);
        let dec = scc_decompose(&lds);
        assert_eq!(dec.components(), &[vec![0, 1]]);
        assert_eq!(dec.period(0), 2);
    }

    #[test]
    fn lower_triangular_feeds_downward() {
        let lds = sys(&[vec![1, 0], vec![1, 1]], &[1, 1]);
        let dec = scc_decompose(&lds);
        assert_eq!(dec.components(), &[vec![0], vec![1]]);
        assert_eq!(dec.feeders(1), &[0]);
        assert!(dec.feeders(0).is_empty());
    }

    #[test]
    fn periods_two_and_three_give_six() {
        let m = vec![
            vec![0, 1, 0, 0, 0],
            vec![1, 0, 0, 0, 0],
            vec![0, 0, 0, 0, 1],
            vec![0, 0, 1, 0, 0],
            vec![0, 0, 0, 1, 0],
        ];
        let lds = sys(&m, &[1, 0, 1, 0, 0]);
        assert_eq!(blowup(&lds).factor(), 6);
        assert_eq!(blowup(&lds).lds().dim(), 30);
    }

    #[test]
    fn lcm_mode_differs_from_gcd_on_mixed_cycles() {
        // cycles of length 2 and 3 through vertex 0
        let m = vec![vec![0, 1, 0, 1], vec![1, 0, 0, 0], vec![1, 0, 0, 0], vec![0, 0, 1, 0]];
        let lds = sys(&m, &[1, 0, 0, 0]);
        let comp = [0, 1, 2, 3];
        assert_eq!(scc_period(&lds, &comp, PeriodMode::Gcd), 1);
        assert_eq!(scc_period(&lds, &comp, PeriodMode::SimpleCycleLcm), 6);
    }

    #[test]
    fn all_period_one_keeps_system() {
        let lds = sys(&[vec![2, 1], vec![1, 3]], &[1, 2]);
        let phased = blowup(&lds);
        assert_eq!(phased.factor(), 1);
        assert_eq!(phased.lds(), &lds);
    }

    #[test]
    fn swap_blowup_alternates_phases() {
        let lds = sys(&[vec![0, 1], vec![1, 0]], &[1, 0]);
        let phased = blowup(&lds);
        let orig = lds.orbit_prefix(10);
        let blown = phased.lds().orbit_prefix(10);
        for (a, b) in orig.iter().zip(&blown) {
            assert_eq!(phased.project(&b.v, a.t), a.v);
            let live = a.t % 2;
            for (k, x) in b.v.iter().enumerate() {
                if phased.state(k).1 != live {
                    assert!(x.is_zero());
                }
            }
        }
    }

    #[test]
    fn positivity_indices() {
        let lds = sys(&[vec![1]], &[1]);
        let phased = blowup(&lds);
        assert_eq!(positivity_index(&phased, &[0]), Some(1));

        let lds = sys(&[vec![0, 1], vec![1, 0]], &[1, 0]);
        let phased = blowup(&lds);
        let dec = scc_decompose(phased.lds());
        for comp in dec.components() {
            assert_eq!(positivity_index(&phased, comp), Some(2));
        }

        let lds = sys(&[vec![1, 1], vec![1, 1]], &[1, 0]);
        assert_eq!(positivity_index(&blowup(&lds), &[0, 1]), Some(1));

        let lds = sys(&[vec![0, 0], vec![1, 0]], &[1, 0]);
        assert_eq!(positivity_index(&blowup(&lds), &[1]), None);
    }
}
