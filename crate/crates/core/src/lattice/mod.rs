//! Interval lattice of David–Mattila type on the line.
//!
//! Level `k` starts from a greedy net `I^k` whose balls `5B(x)` are disjoint,
//! extends each `5B(x)` to an interval `B4(x) ⊆ 25B(x)`, and links every net
//! point to the coarser point whose interval holds it. Cells are assembled
//! from the finest level upward, so nesting and the per-level partition are
//! exact by construction.

mod check;
mod classify;
mod construct;
mod params;
mod theta;

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{AtomicMeasure, DominatingFunction, Interval};

pub use check::{check_lattice, Check, LatticeCheck};
pub use classify::{classify_doubling, is_doubling_ball, Classification, GrowthViolation, Neighbors};
pub use construct::{
    base_radius, build_net, build_net_with_radius, extend_intervals, first_containing, supervise, NetPoint,
};
pub use params::LatticeParams;
pub use theta::{theta, theta_decay_check, DecayReport};

type Span = (Range<usize>, Interval);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub id: usize,
    #[serde(rename = "k")]
    pub level: usize,
    #[serde(rename = "z_Q")]
    pub center: f64,
    pub center_atom: usize,
    #[serde(rename = "r_Q")]
    pub radius: f64,
    pub base_radius: f64,
    /// Hull of the constituent extended intervals.
    pub extent: Interval,
    /// Member atoms; cells are contiguous in atom order.
    pub atoms: Range<usize>,
    pub doubling: bool,
    /// `mu(100B(Q)) / mu(B(Q))` at the stored radius.
    pub doubling_ratio: f64,
    /// Largest admissible radius multiplier in the doubling scan.
    pub scan_window: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub growth_violations: Vec<GrowthViolation>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub mass: f64,
    pub theta: Option<f64>,
}

impl Cell {
    pub fn contains(&self, atom: usize) -> bool {
        self.atoms.contains(&atom)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn ball(&self) -> crate::measure::Ball {
        crate::measure::Ball::new(self.center, self.radius)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub k: usize,
    pub base_radius: f64,
    pub net: Vec<NetPoint>,
    pub extended: Vec<Interval>,
    /// `h(y)` as an index into the previous level's net; empty at level 0.
    pub supervisor: Vec<usize>,
    /// Cell ids, left to right.
    pub cells: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LatticeRepr", into = "LatticeRepr")]
pub struct Lattice {
    params: LatticeParams,
    measure: AtomicMeasure,
    lambda: Option<DominatingFunction>,
    scale: f64,
    decay_base: f64,
    dropped_net_points: usize,
    levels: Vec<Level>,
    cells: Vec<Cell>,
    atom_to_cell: Vec<Vec<usize>>,
}

impl Lattice {
    pub fn build(
        measure: &AtomicMeasure,
        params: &LatticeParams,
        lambda: Option<&DominatingFunction>,
    ) -> Result<Lattice> {
        params.validate()?;
        let h = measure.floor();
        let scale = params
            .scale
            .unwrap_or(if measure.len() > 1 { measure.diameter() } else { h });
        if scale < h {
            return Err(Error::BelowResolutionFloor { scale, floor: h });
        }
        let mut top = 0;
        while top < params.max_level && base_radius(scale, params, top + 1) >= h {
            top += 1;
        }

        let nets: Vec<Vec<NetPoint>> = (0..=top)
            .map(|k| build_net(measure, k, params, scale))
            .collect::<Result<_>>()?;
        let extended: Vec<Vec<Interval>> = nets.iter().map(|n| extend_intervals(n)).collect();
        let mut supervisors = vec![Vec::new()];
        for k in 1..=top {
            supervisors.push(supervise(&nets[k], &extended[k - 1])?);
        }

        // bottom-up atom ranges and extents per net point
        let mut ranges: Vec<Vec<Option<Span>>> = nets.iter().map(|n| vec![None; n.len()]).collect();
        for (atom, &p) in measure.positions().iter().enumerate() {
            let i = first_containing(&extended[top], p)
                .ok_or_else(|| Error::Construction(format!("atom {p} is covered by no extended interval")))?;
            let slot = &mut ranges[top][i];
            match slot {
                Some((r, _)) if r.end == atom => r.end = atom + 1,
                Some(_) => return Err(Error::Construction(format!("finest cell {i} is not contiguous"))),
                None => *slot = Some((atom..atom + 1, extended[top][i])),
            }
        }
        for k in (0..top).rev() {
            for j in 0..nets[k + 1].len() {
                let Some((r, e)) = ranges[k + 1][j].clone() else {
                    continue;
                };
                let slot = &mut ranges[k][supervisors[k + 1][j]];
                match slot {
                    Some((pr, pe)) if pr.end == r.start => {
                        pr.end = r.end;
                        pe.lo = pe.lo.min(e.lo);
                        pe.hi = pe.hi.max(e.hi);
                    }
                    Some(_) => return Err(Error::Construction(format!("cell at level {k} is not contiguous"))),
                    None => *slot = Some((r, e)),
                }
            }
        }
        let dropped_net_points = ranges.iter().flatten().filter(|r| r.is_none()).count();

        // ids top-down, left to right
        let mut ids: Vec<Vec<Option<usize>>> = nets.iter().map(|n| vec![None; n.len()]).collect();
        let mut cells: Vec<Cell> = Vec::new();
        let mut levels = Vec::with_capacity(top + 1);
        for k in 0..=top {
            let b = base_radius(scale, params, k);
            let mut level_cells = Vec::new();
            for (i, slot) in ranges[k].iter().enumerate() {
                let Some((atoms, extent)) = slot.clone() else {
                    continue;
                };
                let id = cells.len();
                ids[k][i] = Some(id);
                let parent = if k == 0 {
                    None
                } else {
                    let p = ids[k - 1][supervisors[k][i]]
                        .ok_or_else(|| Error::Construction("non-empty cell under an empty parent".into()))?;
                    cells[p].children.push(id);
                    Some(p)
                };
                let net = nets[k][i];
                cells.push(Cell {
                    id,
                    level: k,
                    center: net.x,
                    center_atom: net.atom,
                    radius: b,
                    base_radius: b,
                    extent,
                    mass: measure.mass_of(atoms.clone()),
                    atoms,
                    doubling: false,
                    doubling_ratio: f64::NAN,
                    scan_window: 1.0,
                    growth_violations: Vec::new(),
                    parent,
                    children: Vec::new(),
                    theta: None,
                });
                level_cells.push(id);
            }
            levels.push(Level {
                k,
                base_radius: b,
                net: nets[k].clone(),
                extended: extended[k].clone(),
                supervisor: supervisors[k].clone(),
                cells: level_cells,
            });
        }
        if levels[0].cells.len() != 1 {
            return Err(Error::Construction(format!(
                "level 0 has {} cells; the scale {scale} does not wrap the support in one root",
                levels[0].cells.len()
            )));
        }

        for level in &levels {
            let mut left: Option<(f64, f64)> = None;
            for (pos, &id) in level.cells.iter().enumerate() {
                let right = level
                    .cells
                    .get(pos + 1)
                    .map(|&r| (cells[r].center, cells[r].base_radius));
                let cell = &cells[id];
                let c = classify_doubling(
                    measure,
                    params,
                    cell.atoms.clone(),
                    cell.center,
                    cell.base_radius,
                    Neighbors { left, right },
                );
                let cell = &mut cells[id];
                cell.doubling = c.doubling;
                cell.radius = c.radius;
                cell.doubling_ratio = c.ratio;
                cell.scan_window = c.window;
                cell.growth_violations = c.violations;
                left = Some((cell.center, cell.radius));
            }
        }

        if let Some(lambda) = lambda {
            for cell in &mut cells {
                cell.theta = Some(theta(measure, lambda, params.alpha, cell.center, cell.radius)?);
            }
        }

        let mut lattice = Lattice {
            params: params.clone(),
            measure: measure.clone(),
            lambda: lambda.cloned(),
            scale,
            decay_base: params.formula_decay_base(),
            dropped_net_points,
            levels,
            cells,
            atom_to_cell: Vec::new(),
        };
        lattice.index_atoms();
        if params.relaxed {
            if let Some(rho) = lattice.measured_decay_base() {
                lattice.decay_base = rho;
            }
        }
        Ok(lattice)
    }

    fn index_atoms(&mut self) {
        self.atom_to_cell = self
            .levels
            .iter()
            .map(|level| {
                let mut map = vec![usize::MAX; self.measure.len()];
                for &id in &level.cells {
                    for a in self.cells[id].atoms.clone() {
                        map[a] = id;
                    }
                }
                map
            })
            .collect();
    }

    /// Largest `(Theta(Q_m) / Theta(Q_j))^(1/(m-j))` over the non-doubling
    /// chains, capped at 1.
    fn measured_decay_base(&self) -> Option<f64> {
        self.lambda.as_ref()?;
        let mut best: Option<f64> = None;
        for chain in self.non_doubling_chains() {
            let thetas: Vec<f64> = chain.iter().map(|&id| self.cells[id].theta.unwrap()).collect();
            for j in 0..thetas.len() {
                for m in j + 1..thetas.len() {
                    let r = (thetas[m] / thetas[j]).powf(1.0 / (m - j) as f64);
                    best = Some(best.map_or(r, |b: f64| b.max(r)));
                }
            }
        }
        best.map(|b| b.min(1.0))
    }

    pub fn params(&self) -> &LatticeParams {
        &self.params
    }

    pub fn measure(&self) -> &AtomicMeasure {
        &self.measure
    }

    pub fn lambda(&self) -> Option<&DominatingFunction> {
        self.lambda.as_ref()
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `rho` used for the chain coefficients: `C0^(-l0/2)` in paper-constants mode,
    /// measured along non-doubling chains in relaxed mode.
    pub fn decay_base(&self) -> f64 {
        self.decay_base
    }

    pub fn dropped_net_points(&self) -> usize {
        self.dropped_net_points
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cell(&self, id: usize) -> &Cell {
        &self.cells[id]
    }

    pub fn root(&self) -> usize {
        self.levels[0].cells[0]
    }

    /// The level-`k` cell holding `atom`.
    pub fn cell_of(&self, k: usize, atom: usize) -> usize {
        self.atom_to_cell[k][atom]
    }

    /// Cells containing `atom`, from the root down.
    pub fn chain(&self, atom: usize) -> Vec<usize> {
        self.atom_to_cell.iter().map(|m| m[atom]).collect()
    }

    /// Cells of `D(Q)` containing `atom`, from `Q` down; empty if `atom ∉ Q`.
    pub fn chain_within(&self, q: usize, atom: usize) -> Vec<usize> {
        if !self.cells[q].contains(atom) {
            return Vec::new();
        }
        self.atom_to_cell[self.cells[q].level..]
            .iter()
            .map(|m| m[atom])
            .collect()
    }

    pub fn is_subset(&self, inner: usize, outer: usize) -> bool {
        let (a, b) = (&self.cells[inner].atoms, &self.cells[outer].atoms);
        b.start <= a.start && a.end <= b.end
    }

    /// `D(Q)`: `Q` and all its descendants, level by level.
    pub fn descendants(&self, q: usize) -> Vec<usize> {
        let mut out = vec![q];
        let mut i = 0;
        while i < out.len() {
            out.extend_from_slice(&self.cells[out[i]].children);
            i += 1;
        }
        out
    }

    pub fn theta_of(&self, id: usize) -> Result<f64> {
        self.cells[id]
            .theta
            .ok_or_else(|| Error::Contract("lattice was built without a dominating function".into()))
    }

    /// Maximal chains `Q_0 ⊃ Q_1 ⊃ ... ⊃ Q_k` with `Q_1, ..., Q_k` non-doubling
    /// and `Q_k` without non-doubling children.
    pub fn non_doubling_chains(&self) -> Vec<Vec<usize>> {
        let mut chains = Vec::new();
        for cell in &self.cells {
            if cell.doubling || cell.children.iter().any(|&c| !self.cells[c].doubling) {
                continue;
            }
            let mut path = vec![cell.id];
            let mut cur = cell.id;
            while let Some(p) = self.cells[cur].parent {
                path.push(p);
                if self.cells[p].doubling {
                    break;
                }
                cur = p;
            }
            path.reverse();
            chains.push(path);
        }
        chains
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Lattice> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Serialize, Deserialize)]
struct LevelRepr {
    k: usize,
    base_radius: f64,
    net: Vec<NetPoint>,
    extended: Vec<Interval>,
    supervisor: Vec<usize>,
    cells: Vec<Cell>,
}

#[derive(Serialize, Deserialize)]
struct LatticeRepr {
    mode: String,
    params: LatticeParams,
    l0: i32,
    decay_base: f64,
    scale: f64,
    dropped_net_points: usize,
    lambda: Option<DominatingFunction>,
    measure: AtomicMeasure,
    levels: Vec<LevelRepr>,
}

impl From<Lattice> for LatticeRepr {
    fn from(l: Lattice) -> Self {
        let mut cells: Vec<Option<Cell>> = l.cells.into_iter().map(Some).collect();
        let levels = l
            .levels
            .into_iter()
            .map(|lv| LevelRepr {
                k: lv.k,
                base_radius: lv.base_radius,
                net: lv.net,
                extended: lv.extended,
                supervisor: lv.supervisor,
                cells: lv.cells.iter().map(|&id| cells[id].take().unwrap()).collect(),
            })
            .collect();
        LatticeRepr {
            mode: l.params.mode().to_string(),
            l0: l.params.l0(),
            params: l.params,
            decay_base: l.decay_base,
            scale: l.scale,
            dropped_net_points: l.dropped_net_points,
            lambda: l.lambda,
            measure: l.measure,
            levels,
        }
    }
}

impl TryFrom<LatticeRepr> for Lattice {
    type Error = Error;

    fn try_from(repr: LatticeRepr) -> Result<Self> {
        repr.params.validate()?;
        let mut cells = Vec::new();
        let mut levels = Vec::new();
        for lv in repr.levels {
            let ids = lv.cells.iter().map(|c| c.id).collect();
            for c in lv.cells {
                if c.id != cells.len() || c.level != lv.k {
                    return Err(Error::Construction(format!("cell {} is out of order", c.id)));
                }
                if c.atoms.end > repr.measure.len() || c.atoms.is_empty() {
                    return Err(Error::Construction(format!("cell {} has a bad atom range", c.id)));
                }
                cells.push(c);
            }
            levels.push(Level {
                k: lv.k,
                base_radius: lv.base_radius,
                net: lv.net,
                extended: lv.extended,
                supervisor: lv.supervisor,
                cells: ids,
            });
        }
        if levels.first().map(|l| l.cells.len()) != Some(1) {
            return Err(Error::Construction("level 0 must hold exactly one root cell".into()));
        }
        let mut lattice = Lattice {
            params: repr.params,
            measure: repr.measure,
            lambda: repr.lambda,
            scale: repr.scale,
            decay_base: repr.decay_base,
            dropped_net_points: repr.dropped_net_points,
            levels,
            cells,
            atom_to_cell: Vec::new(),
        };
        lattice.index_atoms();
        if lattice.atom_to_cell.iter().flatten().any(|&c| c == usize::MAX) {
            return Err(Error::Construction("some level does not cover every atom".into()));
        }
        Ok(lattice)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> AtomicMeasure {
        AtomicMeasure::new(vec![(0.0, 1.0), (0.08, 1.0), (0.3, 1.0)], Some(0.001)).unwrap()
    }

    #[test]
    fn single_level_cells_are_extended_intervals_intersected_with_support() {
        let m = toy();
        let p = LatticeParams::relaxed(2.0, 20.0, 4.0, 0).unwrap();
        let l = Lattice::build(&m, &p, None).unwrap();
        assert_eq!(l.num_levels(), 1);
        assert_eq!(l.cells().len(), 1);
        assert_eq!(l.cell(0).atoms, 0..3);
    }

    #[test]
    fn two_level_toy_follows_supervision() {
        // coarse net {0, 0.3} at base 0.01 and fine net {0, 0.08, 0.3} at base 0.002
        let m = toy();
        let p = LatticeParams::relaxed(2.0, 5.0, 4.0, 2).unwrap().with_scale(0.05);
        let l = Lattice::build(&m, &p, None).unwrap();
        assert_eq!(l.num_levels(), 3);
        let xs = |k: usize| l.levels()[k].net.iter().map(|n| n.x).collect::<Vec<_>>();
        assert_eq!(xs(0), vec![0.0]);
        assert_eq!(xs(1), vec![0.0, 0.3]);
        assert_eq!(xs(2), vec![0.0, 0.08, 0.3]);
        assert_eq!(l.levels()[2].supervisor, vec![0, 0, 1]);
        let coarse_left = l.levels()[1].cells[0];
        assert_eq!(l.cell(coarse_left).atoms, 0..2);
        let fine: Vec<usize> = l.cell(coarse_left).children.clone();
        assert_eq!(fine.len(), 2);
        assert_eq!(l.cell(fine[0]).atoms, 0..1);
        assert_eq!(l.cell(fine[1]).atoms, 1..2);
    }

    #[test]
    fn json_roundtrip_is_lossless() {
        let m = toy();
        let p = LatticeParams::relaxed(2.0, 5.0, 4.0, 2).unwrap().with_scale(0.05);
        let lam = DominatingFunction::constant(3.0).unwrap();
        let l = Lattice::build(&m, &p, Some(&lam)).unwrap();
        let text = l.to_json().unwrap();
        let back = Lattice::from_json(&text).unwrap();
        assert_eq!(l, back);
        assert_eq!(text, back.to_json().unwrap());
    }

    #[test]
    fn small_scale_without_single_root_is_refused() {
        let m = toy();
        let p = LatticeParams::relaxed(2.0, 5.0, 4.0, 1).unwrap().with_scale(0.01);
        assert!(matches!(Lattice::build(&m, &p, None), Err(Error::Construction(_))));
    }
}
