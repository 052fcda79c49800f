//! Stopping-time selection of cells, its recursion over doubling cells, the
//! resulting sparse families and the pointwise domination certificate.

mod certify;

use std::collections::BTreeMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::measure::AtomicMeasure;
use crate::numeric::CompensatedSum;
use crate::operators::{cell_average, cell_averages, FunctionSample, Kernel};

pub use certify::{certify, CertificateRow, DominationCertificate, RecursionCheck, VIOLATION_TOLERANCE};

/// Thresholds `K` are tried on the grid `2, 4, 8, ...` up to this cap.
pub const DEFAULT_THRESHOLD_CAP: f64 = 1099511627776.0; // 2^40

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectConfig {
    pub threshold_cap: f64,
}

impl Default for SelectConfig {
    fn default() -> Self {
        SelectConfig {
            threshold_cap: DEFAULT_THRESHOLD_CAP,
        }
    }
}

/// Result of one selection step below a doubling root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionOutcome {
    pub root: usize,
    /// `A(f, Q0)`.
    pub average: f64,
    /// Chosen `K`; `None` when the root has no descendants.
    pub threshold: Option<f64>,
    /// `mu(Omega)`, the mass of the maximal bad cells.
    pub bad_mass: f64,
    /// `mu(Omega)` at `K/2`, when `K/2` is on the grid.
    pub bad_mass_at_half: Option<f64>,
    pub root_mass: f64,
    /// `C_0(Q0)`: maximal cells of `D(Q0)` inside the atom-level bad set.
    pub bad_cells: Vec<usize>,
    /// `C_n(Q0)` for `n = 1, 2, ...` (index `n - 1`).
    pub chains: Vec<Vec<usize>>,
    /// `F(Q0)`: stopped doubling cells.
    pub stopped: Vec<usize>,
    /// `N_{Q0}(f 1_{30B(Q0)})` at the atoms of `Q0`, in atom order.
    pub grand_maximal: Vec<f64>,
}

impl SelectionOutcome {
    pub fn atoms(&self, lattice: &Lattice) -> Range<usize> {
        lattice.cell(self.root).atoms.clone()
    }

    /// `N_{Q0}` at an atom of `Q0`.
    pub fn grand_maximal_at(&self, lattice: &Lattice, atom: usize) -> f64 {
        self.grand_maximal[atom - lattice.cell(self.root).atoms.start]
    }
}

/// Sum of `K(x,y) f(y) mu({y})` over atoms of `outer` outside `inner`.
fn local_tail(
    kernel: &Kernel,
    measure: &AtomicMeasure,
    values: &[f64],
    x: f64,
    outer: &Range<usize>,
    inner: &Range<usize>,
) -> f64 {
    let mut acc = CompensatedSum::new();
    for a in (outer.start..inner.start.max(outer.start)).chain(inner.end.min(outer.end)..outer.end) {
        if values[a] != 0.0 {
            acc.add(kernel.eval(x, measure.position(a)) * values[a] * measure.mass(a));
        }
    }
    acc.value()
}

/// Stopping-time cell selection below the doubling cell `q0`.
///
/// `N_{Q0}` and `M_mu` are evaluated on `f 1_{30B(Q0)}` with suprema over
/// `D(Q0)`; `K` is the first grid value whose maximal bad cells carry at most
/// half the mass of `Q0`.
pub fn select(
    kernel: &Kernel,
    lattice: &Lattice,
    f: &FunctionSample,
    q0: usize,
    config: &SelectConfig,
) -> Result<SelectionOutcome> {
    let root = lattice.cell(q0);
    if !root.doubling {
        return Err(Error::Contract(format!("selection root {q0} is not doubling")));
    }
    let m = lattice.measure();
    let alpha = lattice.params().alpha;
    let outer_ball = root.ball().scale(30.0);
    let f_loc = f.restricted(m, outer_ball);
    let outer = m.ball_range(outer_ball);
    let average = cell_average(m, &f_loc, root, alpha);

    let desc = lattice.descendants(q0);
    let mut sup = BTreeMap::new();
    let mut avg = BTreeMap::new();
    for &p in &desc {
        let cell = lattice.cell(p);
        let inner = m.ball_range(cell.ball().scale(30.0));
        let s = cell
            .atoms
            .clone()
            .map(|y| local_tail(kernel, m, f_loc.values(), m.position(y), &outer, &inner).abs())
            .fold(0.0, f64::max);
        sup.insert(p, s);
        avg.insert(p, cell_average(m, &f_loc, cell, alpha));
    }
    let atoms = root.atoms.clone();
    let chain_max = |table: &BTreeMap<usize, f64>| -> Vec<f64> {
        atoms
            .clone()
            .map(|x| lattice.chain_within(q0, x).iter().map(|p| table[p]).fold(0.0, f64::max))
            .collect()
    };
    let n_vals = chain_max(&sup);
    let m_vals = chain_max(&avg);

    let mut outcome = SelectionOutcome {
        root: q0,
        average,
        threshold: None,
        bad_mass: 0.0,
        bad_mass_at_half: None,
        root_mass: root.mass,
        bad_cells: Vec::new(),
        chains: Vec::new(),
        stopped: Vec::new(),
        grand_maximal: n_vals.clone(),
    };
    if desc.len() == 1 {
        return Ok(outcome);
    }

    let mut k = 2.0;
    let mut previous = None;
    let (bad_cells, bad_mass) = loop {
        if k > config.threshold_cap {
            return Err(Error::NoThreshold {
                cell: q0,
                cap: config.threshold_cap,
            });
        }
        let level = k * average;
        let bad: Vec<bool> = n_vals
            .iter()
            .zip(&m_vals)
            .map(|(&n, &mm)| n > level || mm > level)
            .collect();
        let (cells, mass) = maximal_bad_cells(lattice, q0, &bad);
        if mass <= 0.5 * root.mass {
            break (cells, mass);
        }
        previous = Some(mass);
        k *= 2.0;
    };
    outcome.threshold = Some(k);
    outcome.bad_mass = bad_mass;
    outcome.bad_mass_at_half = previous;

    let mut stopped = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    for &q in &bad_cells {
        if lattice.cell(q).doubling {
            stopped.push(q);
        } else {
            current.push(q);
        }
    }
    let mut chains = Vec::new();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &q in &current {
            for &c in &lattice.cell(q).children {
                if lattice.cell(c).doubling {
                    stopped.push(c);
                } else {
                    next.push(c);
                }
            }
        }
        chains.push(current);
        current = next;
    }
    stopped.sort_by_key(|&c| (lattice.cell(c).atoms.start, lattice.cell(c).level));
    outcome.bad_cells = bad_cells;
    outcome.chains = chains;
    outcome.stopped = stopped;
    Ok(outcome)
}

/// Maximal cells of `D(q0)` all of whose atoms are flagged; `bad` is indexed
/// from the first atom of `q0`.
fn maximal_bad_cells(lattice: &Lattice, q0: usize, bad: &[bool]) -> (Vec<usize>, f64) {
    let offset = lattice.cell(q0).atoms.start;
    let mut prefix = vec![0usize; bad.len() + 1];
    for (i, &b) in bad.iter().enumerate() {
        prefix[i + 1] = prefix[i] + b as usize;
    }
    let mut cells = Vec::new();
    let mut stack = vec![q0];
    while let Some(c) = stack.pop() {
        let cell = lattice.cell(c);
        let r = cell.atoms.start - offset..cell.atoms.end - offset;
        let count = prefix[r.end] - prefix[r.start];
        if count == 0 {
            continue;
        }
        if count == r.len() {
            cells.push(c);
        } else {
            stack.extend(cell.children.iter().rev());
        }
    }
    let mass = cells.iter().map(|&c| lattice.cell(c).mass).sum();
    (cells, mass)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyMember {
    #[serde(rename = "cell_id")]
    pub cell: usize,
    pub generation: usize,
    /// `E(Q)`: atoms of `Q` outside every smaller member of the same family.
    #[serde(rename = "witness_atom_ids")]
    pub witness: Vec<usize>,
    pub witness_mass: f64,
}

/// The families `F_n = ∪_k F_n^k` produced by recursive selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseFamilies {
    pub root: usize,
    pub decay_base: f64,
    /// Number of selection generations run.
    pub depth: usize,
    pub families: BTreeMap<usize, Vec<FamilyMember>>,
    pub selections: Vec<SelectionOutcome>,
}

impl SparseFamilies {
    pub fn is_empty(&self) -> bool {
        self.families.values().all(|v| v.is_empty())
    }

    pub fn members(&self) -> impl Iterator<Item = (usize, &FamilyMember)> {
        self.families.iter().flat_map(|(&n, v)| v.iter().map(move |m| (n, m)))
    }

    pub fn selection(&self, root: usize) -> Option<&SelectionOutcome> {
        self.selections.iter().find(|s| s.root == root)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Runs [`select`] on `q0`, then on every stopped doubling cell, generation
/// by generation, until no new cells appear.
pub fn recurse(
    kernel: &Kernel,
    lattice: &Lattice,
    f: &FunctionSample,
    q0: usize,
    config: &SelectConfig,
) -> Result<SparseFamilies> {
    let mut raw: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    raw.entry(0).or_default().push((q0, 0));
    let mut selections = Vec::new();
    let mut current = vec![q0];
    let mut depth = 0;
    while !current.is_empty() {
        let mut next = Vec::new();
        for &p in &current {
            let outcome = select(kernel, lattice, f, p, config)?;
            for (i, chain) in outcome.chains.iter().enumerate() {
                raw.entry(i + 1)
                    .or_default()
                    .extend(chain.iter().map(|&q| (q, depth + 1)));
            }
            raw.entry(0)
                .or_default()
                .extend(outcome.stopped.iter().map(|&q| (q, depth + 1)));
            next.extend_from_slice(&outcome.stopped);
            selections.push(outcome);
        }
        if next.is_empty() {
            break;
        }
        depth += 1;
        current = next;
    }

    let families = raw
        .into_iter()
        .map(|(n, members)| (n, with_witnesses(lattice, members)))
        .collect();
    Ok(SparseFamilies {
        root: q0,
        decay_base: lattice.decay_base(),
        depth: depth + 1,
        families,
        selections,
    })
}

fn with_witnesses(lattice: &Lattice, members: Vec<(usize, usize)>) -> Vec<FamilyMember> {
    let m = lattice.measure();
    members
        .iter()
        .map(|&(q, generation)| {
            let cell = lattice.cell(q);
            let mut covered = vec![false; cell.len()];
            for &(r, _) in &members {
                if r != q && lattice.is_subset(r, q) {
                    for a in lattice.cell(r).atoms.clone() {
                        covered[a - cell.atoms.start] = true;
                    }
                }
            }
            let witness: Vec<usize> = cell.atoms.clone().filter(|a| !covered[a - cell.atoms.start]).collect();
            FamilyMember {
                cell: q,
                generation,
                witness_mass: m.mass_of_set(&witness),
                witness,
            }
        })
        .collect()
}

/// Exact set-algebra checks on a [`recurse`] output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsityReport {
    /// `(n, R)` with `sum_{Q ∈ F_n^{k+1}, Q ⊆ R} mu(Q) > mu(R)/2`.
    pub child_mass_failures: Vec<(usize, usize)>,
    /// `(n, Q)` with `mu(E(Q)) < mu(Q)/2`.
    pub witness_mass_failures: Vec<(usize, usize)>,
    /// `(n, atom)` covered by two witness sets of `F_n`.
    pub witness_overlaps: Vec<(usize, usize)>,
    /// `(root, n)` whose `C_n` cells overlap.
    pub chain_overlaps: Vec<(usize, usize)>,
    /// `(root, P, Q)` with `P ∈ F`, `Q ∈ C_n`, neither `P ⊆ Q` nor disjoint.
    pub dichotomy_failures: Vec<(usize, usize, usize)>,
    /// Roots with `mu(Omega) > mu(Q0)/2`, or with `K` not minimal on the grid.
    pub threshold_failures: Vec<usize>,
    /// `max sum mu(Q) / mu(R)` over parents with at least one child.
    pub max_child_ratio: f64,
    /// `min mu(E(Q)) / mu(Q)`.
    pub min_witness_ratio: f64,
    pub pass: bool,
}

fn overlaps(a: &Range<usize>, b: &Range<usize>) -> bool {
    a.start < b.end && b.start < a.end
}

pub fn check_families(lattice: &Lattice, families: &SparseFamilies) -> SparsityReport {
    let m = lattice.measure();
    let mut r = SparsityReport {
        child_mass_failures: Vec::new(),
        witness_mass_failures: Vec::new(),
        witness_overlaps: Vec::new(),
        chain_overlaps: Vec::new(),
        dichotomy_failures: Vec::new(),
        threshold_failures: Vec::new(),
        max_child_ratio: 0.0,
        min_witness_ratio: f64::INFINITY,
        pass: false,
    };
    for (&n, members) in &families.families {
        for parent in members {
            let outer = lattice.cell(parent.cell);
            let children: Vec<f64> = members
                .iter()
                .filter(|q| q.generation == parent.generation + 1 && lattice.is_subset(q.cell, parent.cell))
                .map(|q| lattice.cell(q.cell).mass)
                .collect();
            if !children.is_empty() {
                let total: f64 = children.iter().sum();
                r.max_child_ratio = r.max_child_ratio.max(total / outer.mass);
                if total > 0.5 * outer.mass {
                    r.child_mass_failures.push((n, parent.cell));
                }
            }
            let we = m.mass_of_set(&parent.witness);
            r.min_witness_ratio = r.min_witness_ratio.min(we / outer.mass);
            if we < 0.5 * outer.mass {
                r.witness_mass_failures.push((n, parent.cell));
            }
        }
        let mut seen = vec![false; m.len()];
        for member in members {
            for &a in &member.witness {
                if std::mem::replace(&mut seen[a], true) {
                    r.witness_overlaps.push((n, a));
                }
            }
        }
    }
    for sel in &families.selections {
        for (i, chain) in sel.chains.iter().enumerate() {
            let bad = chain.iter().enumerate().any(|(j, &a)| {
                chain[j + 1..]
                    .iter()
                    .any(|&b| overlaps(&lattice.cell(a).atoms, &lattice.cell(b).atoms))
            });
            if bad {
                r.chain_overlaps.push((sel.root, i + 1));
            }
            for &p in &sel.stopped {
                for &q in chain {
                    let (pa, qa) = (&lattice.cell(p).atoms, &lattice.cell(q).atoms);
                    if overlaps(pa, qa) && !lattice.is_subset(p, q) {
                        r.dichotomy_failures.push((sel.root, p, q));
                    }
                }
            }
        }
        let half = 0.5 * sel.root_mass;
        let not_minimal = matches!(sel.bad_mass_at_half, Some(prev) if prev <= half);
        if sel.bad_mass > half || not_minimal {
            r.threshold_failures.push(sel.root);
        }
    }
    if r.min_witness_ratio == f64::INFINITY {
        r.min_witness_ratio = 1.0;
    }
    r.pass = r.child_mass_failures.is_empty()
        && r.witness_mass_failures.is_empty()
        && r.witness_overlaps.is_empty()
        && r.chain_overlaps.is_empty()
        && r.dichotomy_failures.is_empty()
        && r.threshold_failures.is_empty();
    r
}

/// `S(x) = sum_n rho^n sum_{Q ∈ F_n} A(f,Q) 1_Q(x)` at the atom `x`.
pub fn sparse_eval(families: &SparseFamilies, lattice: &Lattice, f: &FunctionSample, x: usize) -> f64 {
    let alpha = lattice.params().alpha;
    let mut acc = CompensatedSum::new();
    for (n, member) in families.members() {
        let cell = lattice.cell(member.cell);
        if cell.contains(x) {
            acc.add(families.decay_base.powi(n as i32) * cell_average(lattice.measure(), f, cell, alpha));
        }
    }
    acc.value()
}

/// [`sparse_eval`] at every atom.
pub fn sparse_eval_all(families: &SparseFamilies, lattice: &Lattice, f: &FunctionSample) -> Vec<f64> {
    let averages = cell_averages(lattice, f);
    let mut acc = vec![CompensatedSum::new(); lattice.measure().len()];
    for (n, member) in families.members() {
        let w = families.decay_base.powi(n as i32) * averages[member.cell];
        for a in lattice.cell(member.cell).atoms.clone() {
            acc[a].add(w);
        }
    }
    acc.iter().map(|s| s.value()).collect()
}
