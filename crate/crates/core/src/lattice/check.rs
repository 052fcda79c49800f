//! Invariant suite of a built lattice. Set checks are exact; checks that only
//! hold in paper-constants mode are asserted in that regime and reported
//! otherwise.

use serde::{Deserialize, Serialize};

use super::{is_doubling_ball, Lattice};
use crate::measure::{distance, Ball};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// Whether a failure fails the suite.
    pub asserted: bool,
    pub ok: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeCheck {
    pub mode: String,
    pub levels: usize,
    pub cells: usize,
    pub non_doubling_cells: usize,
    pub checks: Vec<Check>,
    /// Smallest `d` with `Q ⊆ W ∩ d B(Q)` for every cell.
    pub sandwich_dilate: f64,
    /// Worst `(|z_Q - z_parent| + 30 r(Q)) / (30 r(parent))`; at most 1 means
    /// nested `30B`.
    pub nested_dilate_ratio: f64,
    pub growth_in_window: usize,
    pub growth_beyond_window: usize,
    pub root_doubling: bool,
    pub dropped_net_points: usize,
    pub pass: bool,
}

impl LatticeCheck {
    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

struct Recorder {
    checks: Vec<Check>,
}

impl Recorder {
    fn push(&mut self, name: &str, asserted: bool, failures: Vec<String>) {
        let detail = match failures.len() {
            0 => String::new(),
            n => format!("{n} failure(s); first: {}", failures[0]),
        };
        self.checks.push(Check {
            name: name.to_string(),
            asserted,
            ok: failures.is_empty(),
            detail,
        });
    }
}

pub fn check_lattice(lattice: &Lattice) -> LatticeCheck {
    let m = lattice.measure();
    let params = lattice.params();
    let paper = !params.relaxed;
    let n = m.len();
    let mut rec = Recorder { checks: Vec::new() };

    // per-level partition
    let mut fails = Vec::new();
    for level in lattice.levels() {
        let mut hits = vec![0u32; n];
        for &id in &level.cells {
            for a in lattice.cell(id).atoms.clone() {
                hits[a] += 1;
            }
        }
        if let Some(a) = hits.iter().position(|&h| h != 1) {
            fails.push(format!("level {}: atom {a} covered {} times", level.k, hits[a]));
        }
    }
    rec.push("partition", true, fails);

    // nesting: children exactly tile their parent
    let mut fails = Vec::new();
    let finest = lattice.num_levels() - 1;
    for cell in lattice.cells() {
        if cell.level == finest {
            if !cell.children.is_empty() {
                fails.push(format!("finest cell {} has children", cell.id));
            }
            continue;
        }
        let mut next = cell.atoms.start;
        for &c in &cell.children {
            let child = lattice.cell(c);
            if child.level != cell.level + 1 || child.parent != Some(cell.id) || child.atoms.start != next {
                fails.push(format!("cell {} child {c} breaks the tiling", cell.id));
            }
            next = child.atoms.end;
        }
        if next != cell.atoms.end {
            fails.push(format!("children of cell {} do not cover it", cell.id));
        }
    }
    rec.push("nesting", true, fails);

    // 5B(Q) pairwise disjoint per level
    let mut fails = Vec::new();
    for level in lattice.levels() {
        let mut balls: Vec<(f64, f64)> = level
            .cells
            .iter()
            .map(|&id| {
                let c = lattice.cell(id);
                (c.center - 5.0 * c.radius, c.center + 5.0 * c.radius)
            })
            .collect();
        balls.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut reach = f64::NEG_INFINITY;
        for (lo, hi) in balls {
            if lo <= reach {
                fails.push(format!("level {}: 5B balls meet near {lo}", level.k));
            }
            reach = reach.max(hi);
        }
    }
    rec.push("disjoint_5b", true, fails);

    // extent: members inside, and every atom in (lo, hi] a member
    let mut fails = Vec::new();
    for cell in lattice.cells() {
        let e = cell.extent;
        let inside = m.interval_range(e);
        let strict_start = inside.start + m.positions()[inside.clone()].iter().take_while(|&&p| p == e.lo).count();
        if !(inside.start <= cell.atoms.start && cell.atoms.end <= inside.end)
            || cell.atoms.start > strict_start
            || cell.atoms.end != inside.end
        {
            fails.push(format!(
                "cell {} members disagree with extent [{}, {}]",
                cell.id, e.lo, e.hi
            ));
        }
        if !(cell.mass > 0.0) {
            fails.push(format!("cell {} has no mass", cell.id));
        }
    }
    rec.push("extent", true, fails);

    // radius window and doubling flags
    let mut fails = Vec::new();
    let mut radius_fails = Vec::new();
    let mut non_doubling_fails = Vec::new();
    for cell in lattice.cells() {
        if cell.doubling != is_doubling_ball(m, params.c0, cell.ball()) {
            fails.push(format!("cell {} flag disagrees with mu(100B) <= C0 mu(B)", cell.id));
        }
        if !(cell.base_radius <= cell.radius && cell.radius <= params.c0 * cell.base_radius) {
            radius_fails.push(format!("cell {} radius {} outside the window", cell.id, cell.radius));
        }
        if !cell.doubling && cell.radius != cell.base_radius {
            non_doubling_fails.push(format!("non-doubling cell {} has an enlarged radius", cell.id));
        }
    }
    rec.push("doubling_flag", true, fails);
    rec.push("radius_window", true, radius_fails);
    rec.push("non_doubling_radius", true, non_doubling_fails);

    // sandwich
    let mut lower_fails = Vec::new();
    let mut upper_fails = Vec::new();
    let mut sandwich_dilate: f64 = 0.0;
    for cell in lattice.cells() {
        let inner = m.ball_range(cell.ball());
        if inner.start < cell.atoms.start || inner.end > cell.atoms.end {
            lower_fails.push(format!("cell {}: W ∩ B(Q) leaves Q", cell.id));
        }
        for a in cell.atoms.clone() {
            let d = distance(m.position(a), cell.center);
            sandwich_dilate = sandwich_dilate.max(d / cell.radius);
            if d > 28.0 * cell.radius {
                upper_fails.push(format!("cell {}: atom {a} outside 28B(Q)", cell.id));
            }
        }
    }
    rec.push("sandwich_lower", paper, lower_fails);
    rec.push("sandwich_upper", paper, upper_fails);

    // nested 30B
    let mut fails = Vec::new();
    let mut nested_dilate_ratio: f64 = 0.0;
    for cell in lattice.cells() {
        let Some(p) = cell.parent else { continue };
        let parent = lattice.cell(p);
        let (c, r) = (
            Ball::new(cell.center, 30.0 * cell.radius),
            Ball::new(parent.center, 30.0 * parent.radius),
        );
        let ratio = (distance(c.center, r.center) + c.radius) / r.radius;
        nested_dilate_ratio = nested_dilate_ratio.max(ratio);
        let (ci, ri) = (c.as_interval(), r.as_interval());
        if !ri.contains_interval(&ci) {
            fails.push(format!("30B of cell {} leaves 30B of its parent {p}", cell.id));
        }
    }
    rec.push("nested_dilate", paper, fails);

    // theta
    if lattice.lambda().is_some() {
        let fails = lattice
            .cells()
            .iter()
            .filter(|c| !matches!(c.theta, Some(t) if t > 0.0 && t <= 1.0))
            .map(|c| format!("cell {}: theta = {:?}", c.id, c.theta))
            .collect();
        rec.push("theta_range", true, fails);
    }

    // growth samples on non-doubling cells
    let (mut in_window, mut beyond) = (0, 0);
    let mut fails = Vec::new();
    for cell in lattice.cells() {
        for v in &cell.growth_violations {
            if v.in_window {
                in_window += 1;
                fails.push(format!("cell {}: doubling at multiplier {}", cell.id, v.multiplier));
            } else {
                beyond += 1;
            }
        }
    }
    rec.push("growth_in_window", true, fails);

    let root = lattice.cell(lattice.root());
    let pass = rec.checks.iter().all(|c| c.ok || !c.asserted);
    LatticeCheck {
        mode: params.mode().to_string(),
        levels: lattice.num_levels(),
        cells: lattice.cells().len(),
        non_doubling_cells: lattice.cells().iter().filter(|c| !c.doubling).count(),
        checks: rec.checks,
        sandwich_dilate,
        nested_dilate_ratio,
        growth_in_window: in_window,
        growth_beyond_window: beyond,
        root_doubling: root.doubling,
        dropped_net_points: lattice.dropped_net_points(),
        pass,
    }
}
