//! Classical jump chain on computational basis states.
//!
//! With no Hamiltonian and jumps that send basis states to basis states, the
//! diagonal of ρ evolves as a continuous-time Markov chain with rate
//! `Σ_k rate_k |⟨s′|L_k|s⟩|²` from `s` to `s′`. Bit-flip channels are left
//! out. Absorbing classes are the closed strongly connected components;
//! absorption probabilities solve the embedded jump chain.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::models::{ChannelKind, LindbladModel, Profile};

/// Tolerance on "absorbed with probability 1".
pub const ABSORPTION_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassKind {
    /// `|0…0⟩` (`0`) or `|1…1⟩` (`1`).
    Codeword(u8),
    Trapped,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AbsorbingClass {
    /// Basis-state indices, ascending.
    pub members: Vec<usize>,
    pub kind: ClassKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BasinReport {
    pub labels: Vec<String>,
    pub n_states: usize,
    /// Ordered by smallest member.
    pub classes: Vec<AbsorbingClass>,
    /// `absorption[s][c]`: probability that basis state `s` ends in class `c`.
    pub absorption: Vec<Vec<f64>>,
    /// Flip patterns from `|0…0⟩` (qubit positions) not absorbed into
    /// `|0…0⟩` with probability 1, by weight then lexicographically.
    pub failure_patterns: Vec<Vec<usize>>,
}

/// Sparse out-edges `(target, rate)` per state.
fn transition_rates(model: &LindbladModel) -> Result<Vec<Vec<(usize, f64)>>> {
    let space = model.space();
    if !space.is_all_qubits() {
        return Err(Error::Precondition("basin analysis needs an all-qubit space".into()));
    }
    if model.has_hamiltonian() {
        return Err(Error::Precondition("basin analysis needs a model without Hamiltonian".into()));
    }
    let n = space.total_dim();
    let mut out: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for ch in model.channels().iter().filter(|c| c.kind != ChannelKind::BitFlip) {
        if ch.profile != Profile::Constant {
            return Err(Error::Precondition(format!("channel `{}` is switched in time", ch.label)));
        }
        if !ch.jump.maps_basis_to_basis() {
            return Err(Error::Precondition(format!("jump `{}` does not map basis states to basis states", ch.label)));
        }
        if ch.rate == 0.0 {
            continue;
        }
        for (to, from, v) in ch.jump.csr().iter() {
            if to != from {
                out[from].push((to, ch.rate * v.norm_sqr()));
            }
        }
    }
    for edges in &mut out {
        edges.sort_by_key(|e| e.0);
        edges.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
    }
    Ok(out)
}

/// Tarjan's strongly connected components, iterative.
fn strongly_connected(edges: &[Vec<(usize, f64)>]) -> Vec<usize> {
    const UNSEEN: usize = usize::MAX;
    let n = edges.len();
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comp = vec![UNSEEN; n];
    let mut next_index = 0;
    let mut n_comp = 0;
    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if let Some(&(w, _)) = edges[v].get(*pos) {
                *pos += 1;
                if index[w] == UNSEEN {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                loop {
                    let w = stack.pop().expect("component on stack");
                    on_stack[w] = false;
                    comp[w] = n_comp;
                    if w == v {
                        break;
                    }
                }
                n_comp += 1;
            }
        }
    }
    comp
}

/// Absorbing classes and absorption probabilities of the jump chain.
pub fn classify_basins(model: &LindbladModel) -> Result<BasinReport> {
    let edges = transition_rates(model)?;
    let n = edges.len();
    let comp = strongly_connected(&edges);
    let n_comp = comp.iter().max().map_or(0, |m| m + 1);
    let mut closed = vec![true; n_comp];
    for (s, e) in edges.iter().enumerate() {
        if e.iter().any(|&(t, _)| comp[t] != comp[s]) {
            closed[comp[s]] = false;
        }
    }
    let mut classes: Vec<AbsorbingClass> = Vec::new();
    let mut class_of = vec![None; n];
    let mut comp_class = vec![None; n_comp];
    for s in 0..n {
        let c = comp[s];
        if !closed[c] {
            continue;
        }
        let k = *comp_class[c].get_or_insert_with(|| {
            classes.push(AbsorbingClass { members: Vec::new(), kind: ClassKind::Trapped });
            classes.len() - 1
        });
        classes[k].members.push(s);
        class_of[s] = Some(k);
    }
    for cl in &mut classes {
        if cl.members == [0] {
            cl.kind = ClassKind::Codeword(0);
        } else if cl.members == [n - 1] {
            cl.kind = ClassKind::Codeword(1);
        }
    }

    // embedded chain on transient states: (I − P_TT) X = P_TC
    let transient: Vec<usize> = (0..n).filter(|&s| class_of[s].is_none()).collect();
    let mut pos = vec![usize::MAX; n];
    for (i, &s) in transient.iter().enumerate() {
        pos[s] = i;
    }
    let nt = transient.len();
    let nc = classes.len();
    let mut absorption = vec![vec![0.0; nc]; n];
    for s in 0..n {
        if let Some(k) = class_of[s] {
            absorption[s][k] = 1.0;
        }
    }
    if nt > 0 {
        let mut a = DMatrix::<f64>::identity(nt, nt);
        let mut b = DMatrix::<f64>::zeros(nt, nc);
        for (i, &s) in transient.iter().enumerate() {
            let total: f64 = edges[s].iter().map(|e| e.1).sum();
            for &(t, r) in &edges[s] {
                let p = r / total;
                match class_of[t] {
                    Some(k) => b[(i, k)] += p,
                    None => a[(i, pos[t])] -= p,
                }
            }
        }
        let x = a
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::Precondition("singular transient system".into()))?;
        for (i, &s) in transient.iter().enumerate() {
            for k in 0..nc {
                absorption[s][k] = x[(i, k)];
            }
        }
    }

    let labels: Vec<String> = model.space().factors().iter().map(|f| f.label.clone()).collect();
    let mut report = BasinReport { labels, n_states: n, classes, absorption, failure_patterns: Vec::new() };
    let mut fails: Vec<Vec<usize>> = (0..n).filter(|&s| !report.state_corrected(s)).map(|s| report.pattern_of(s)).collect();
    fails.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
    report.failure_patterns = fails;
    Ok(report)
}

impl BasinReport {
    pub fn n_qubits(&self) -> usize {
        self.labels.len()
    }

    /// Basis state reached from `|0…0⟩` by flipping the listed positions.
    pub fn pattern_state(&self, pattern: &[usize]) -> usize {
        let n = self.n_qubits();
        pattern.iter().fold(0, |s, &p| s | 1 << (n - 1 - p))
    }

    pub fn pattern_of(&self, state: usize) -> Vec<usize> {
        let n = self.n_qubits();
        (0..n).filter(|&p| state >> (n - 1 - p) & 1 == 1).collect()
    }

    pub fn bitstring(&self, state: usize) -> String {
        let n = self.n_qubits();
        (0..n).map(|p| if state >> (n - 1 - p) & 1 == 1 { '1' } else { '0' }).collect()
    }

    pub fn codeword_class(&self, bit: u8) -> Option<usize> {
        self.classes.iter().position(|c| c.kind == ClassKind::Codeword(bit))
    }

    pub fn class_name(&self, k: usize) -> String {
        match self.classes[k].kind {
            ClassKind::Codeword(b) => format!("codeword{b}"),
            ClassKind::Trapped => format!("trapped{k}"),
        }
    }

    /// Probability that `state` is absorbed into `|0…0⟩`.
    pub fn prob_codeword0(&self, state: usize) -> f64 {
        self.codeword_class(0).map_or(0.0, |k| self.absorption[state][k])
    }

    fn state_corrected(&self, state: usize) -> bool {
        (self.prob_codeword0(state) - 1.0).abs() <= ABSORPTION_TOL
    }

    pub fn corrected(&self, pattern: &[usize]) -> bool {
        self.state_corrected(self.pattern_state(pattern))
    }

    /// Classes reached from `state` with nonzero probability.
    pub fn destinations(&self, state: usize) -> Vec<(String, f64)> {
        self.absorption[state]
            .iter()
            .enumerate()
            .filter(|(_, &p)| p.abs() > 1e-15)
            .map(|(k, &p)| (self.class_name(k), p))
            .collect()
    }

    fn pattern_labels(&self, pattern: &[usize]) -> String {
        let names: Vec<&str> = pattern.iter().map(|&p| self.labels[p].as_str()).collect();
        format!("{{{}}}", names.join(","))
    }

    /// `initial_pattern,weight,absorbed_class,probability`, one row per
    /// reachable class, for all patterns up to weight `k_max`.
    pub fn to_csv(&self, k_max: usize) -> String {
        let mut s = String::from("initial_pattern,weight,absorbed_class,probability\n");
        for pattern in patterns_up_to(self.n_qubits(), k_max) {
            let state = self.pattern_state(&pattern);
            for (name, p) in self.destinations(state) {
                let _ = writeln!(s, "{},{},{},{:.16e}", self.bitstring(state), pattern.len(), name, p);
            }
        }
        s
    }
}

/// All subsets of `0..n` of size `w`, lexicographic.
fn combinations(n: usize, w: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(w);
    fn rec(start: usize, n: usize, w: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == w {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, w, cur, out);
            cur.pop();
        }
    }
    rec(0, n, w, &mut cur, &mut out);
    out
}

fn patterns_up_to(n: usize, k_max: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..=k_max.min(n)).flat_map(move |w| combinations(n, w))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PatternFailure {
    pub pattern: Vec<usize>,
    pub bitstring: String,
    pub destinations: Vec<(String, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightRow {
    pub weight: usize,
    pub n_patterns: usize,
    pub n_corrected: usize,
    pub failures: Vec<PatternFailure>,
}

impl WeightRow {
    pub fn n_failed(&self) -> usize {
        self.n_patterns - self.n_corrected
    }
}

/// Per-weight correction verdicts for all flip patterns up to `k_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderSweep {
    pub labels: Vec<String>,
    pub k_max: usize,
    pub rows: Vec<WeightRow>,
}

impl OrderSweep {
    pub fn from_report(report: &BasinReport, k_max: usize) -> Self {
        let n = report.n_qubits();
        let rows = (0..=k_max.min(n))
            .map(|w| {
                let pats = combinations(n, w);
                let failures: Vec<PatternFailure> = pats
                    .iter()
                    .filter(|p| !report.corrected(p))
                    .map(|p| {
                        let s = report.pattern_state(p);
                        PatternFailure {
                            pattern: p.clone(),
                            bitstring: report.bitstring(s),
                            destinations: report.destinations(s),
                        }
                    })
                    .collect();
                WeightRow { weight: w, n_patterns: pats.len(), n_corrected: pats.len() - failures.len(), failures }
            })
            .collect();
        Self { labels: report.labels.clone(), k_max, rows }
    }

    /// True if every pattern of weight ≤ `w` is corrected.
    pub fn all_corrected_up_to(&self, w: usize) -> bool {
        self.rows.iter().filter(|r| r.weight <= w).all(|r| r.n_failed() == 0)
    }

    pub fn row(&self, w: usize) -> Option<&WeightRow> {
        self.rows.iter().find(|r| r.weight == w)
    }

    /// Human-readable table with failures listed verbatim and an overall
    /// verdict for "all patterns of weight ≤ k_max are corrected".
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "weight  patterns  corrected  failed");
        for r in &self.rows {
            let _ = writeln!(s, "{:>6}  {:>8}  {:>9}  {:>6}", r.weight, r.n_patterns, r.n_corrected, r.n_failed());
        }
        for r in self.rows.iter().filter(|r| r.n_failed() > 0) {
            let _ = writeln!(s, "\nweight {} failures:", r.weight);
            for f in &r.failures {
                let names: Vec<&str> = f.pattern.iter().map(|&p| self.labels[p].as_str()).collect();
                let dest: Vec<String> = f.destinations.iter().map(|(c, p)| format!("{c} {p:.12}")).collect();
                let _ = writeln!(s, "  {{{}}} ({}) -> {}", names.join(","), f.bitstring, dest.join(", "));
            }
        }
        let n_fail: usize = self.rows.iter().map(|r| r.n_failed()).sum();
        let _ = writeln!(s);
        if n_fail == 0 {
            let _ = writeln!(s, "verdict: PASS, all patterns of weight <= {} are corrected", self.k_max);
        } else {
            let _ = writeln!(
                s,
                "verdict: FAIL, {n_fail} pattern(s) of weight <= {} are not corrected (listed above)",
                self.k_max
            );
        }
        s
    }
}

/// Exhaustive correction verdict per pattern weight.
pub fn correction_order_sweep(model: &LindbladModel, k_max: usize) -> Result<OrderSweep> {
    Ok(OrderSweep::from_report(&classify_basins(model)?, k_max))
}

impl BasinReport {
    /// One line per failure pattern of weight ≤ `k_max`, for reports.
    pub fn describe_failures(&self, k_max: usize) -> Vec<String> {
        self.failure_patterns
            .iter()
            .filter(|p| p.len() <= k_max)
            .map(|p| {
                let dest: Vec<String> =
                    self.destinations(self.pattern_state(p)).iter().map(|(c, q)| format!("{c} {q:.12}")).collect();
                format!("{} -> {}", self.pattern_labels(p), dest.join(", "))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_effective_3q, build_star_effective, build_tier_b_3q, Params};

    #[test]
    fn effective_single_flip_is_corrected() {
        let r = classify_basins(&build_effective_3q(&Params::default()).unwrap()).unwrap();
        assert_eq!(r.n_states, 8);
        assert_eq!(r.classes.len(), 2);
        assert!((r.absorption[0b100][r.codeword_class(0).unwrap()] - 1.0).abs() < 1e-14);
        // two flips decode to the other codeword
        assert!((r.absorption[0b110][r.codeword_class(1).unwrap()] - 1.0).abs() < 1e-14);
        assert_eq!(r.failure_patterns.iter().filter(|p| p.len() == 2).count(), 3);
    }

    #[test]
    fn probabilities_sum_to_one() {
        let r = classify_basins(&build_star_effective(&Params::default()).unwrap()).unwrap();
        for row in &r.absorption {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn star_codewords_absorbing_and_shared_flips_corrected() {
        let r = classify_basins(&build_star_effective(&Params::default()).unwrap()).unwrap();
        assert_eq!(r.n_states, 512);
        assert!(r.codeword_class(0).is_some() && r.codeword_class(1).is_some());
        let shared: Vec<usize> = ["q11", "q21", "q31"].iter().map(|l| r.labels.iter().position(|x| x == l).unwrap()).collect();
        assert!(r.corrected(&shared));
        let sweep = OrderSweep::from_report(&r, 1);
        assert_eq!(sweep.row(1).unwrap().n_corrected, 9);
    }

    #[test]
    fn hamiltonian_models_rejected() {
        let m = build_tier_b_3q(&Params::default()).unwrap();
        assert!(matches!(classify_basins(&m), Err(Error::Precondition(_))));
    }

    #[test]
    fn combinations_count() {
        assert_eq!(combinations(9, 3).len(), 84);
        assert_eq!(combinations(9, 0), vec![Vec::<usize>::new()]);
    }
}
