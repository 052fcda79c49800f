//! Direct enumeration over atoms and cells, summing naively in atom order.

use nhsl::lattice::Lattice;
use nhsl::operators::Kernel;
use nhsl::sparse::SparseFamilies;
use nhsl::weights::Weight;

use super::Instance;

pub fn positions(inst: &Instance) -> Vec<f64> {
    inst.measure.positions().to_vec()
}

pub fn naive_truncation(k: &Kernel, xs: &[f64], ms: &[f64], f: &[f64], x: f64, eps: f64) -> (f64, f64) {
    let mut s = 0.0;
    let mut abs = 0.0;
    for i in 0..xs.len() {
        if (x - xs[i]).abs() > eps {
            let t = k.eval(x, xs[i]) * f[i] * ms[i];
            s += t;
            abs += t.abs();
        }
    }
    (s, abs)
}

pub fn oracle_max_truncation(inst: &Instance, x: f64) -> (f64, f64) {
    let (xs, ms, f) = (positions(inst), inst.measure.masses(), inst.f.values());
    let h = inst.measure.floor();
    let mut radii = vec![h];
    radii.extend(xs.iter().map(|y| (x - y).abs()).filter(|&d| d >= h));
    let mut best: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for eps in radii {
        let (s, abs) = naive_truncation(&inst.kernel, &xs, ms, f, x, eps);
        best = best.max(s.abs());
        scale = scale.max(abs);
    }
    (best, scale)
}

pub fn oracle_maximal_lambda(inst: &Instance, x: f64) -> f64 {
    let (xs, ms, f) = (positions(inst), inst.measure.masses(), inst.f.values());
    let h = inst.measure.floor();
    let mut radii = vec![h];
    radii.extend(xs.iter().map(|y| (x - y).abs()).filter(|&d| d >= h));
    radii
        .into_iter()
        .map(|r| {
            let s: f64 = (0..xs.len())
                .filter(|&i| (x - xs[i]).abs() <= r)
                .map(|i| f[i].abs() * ms[i])
                .sum();
            s / inst.lambda.eval(x, r)
        })
        .fold(0.0, f64::max)
}

pub fn ball_sum(xs: &[f64], ms: &[f64], vals: Option<&[f64]>, c: f64, r: f64) -> f64 {
    (0..xs.len())
        .filter(|&i| (xs[i] - c).abs() <= r)
        .map(|i| vals.map_or(1.0, |v| v[i].abs()) * ms[i])
        .sum()
}

pub fn oracle_average(lattice: &Lattice, f: &[f64], q: usize) -> f64 {
    let m = lattice.measure();
    let (xs, ms) = (m.positions(), m.masses());
    let c = lattice.cell(q);
    ball_sum(xs, ms, Some(f), c.center, 30.0 * c.radius)
        / ball_sum(xs, ms, None, c.center, lattice.params().alpha * c.radius)
}

pub fn cells_containing(lattice: &Lattice, x: usize) -> Vec<usize> {
    lattice
        .cells()
        .iter()
        .filter(|c| c.atoms.clone().any(|a| a == x))
        .map(|c| c.id)
        .collect()
}

pub fn oracle_maximal_mu(inst: &Instance, x: usize) -> f64 {
    cells_containing(&inst.lattice, x)
        .into_iter()
        .map(|q| oracle_average(&inst.lattice, inst.f.values(), q))
        .fold(0.0, f64::max)
}

pub fn oracle_grand_maximal(inst: &Instance, q0: usize, x: usize) -> (f64, f64) {
    let l = &inst.lattice;
    let (xs, ms, f) = (positions(inst), inst.measure.masses(), inst.f.values());
    let root_atoms: Vec<usize> = l.cell(q0).atoms.clone().collect();
    let mut best: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for p in cells_containing(l, x) {
        let cell = l.cell(p);
        // D(Q0): cells of Q0's level or finer inside Q0. A coarser cell with
        // the same atoms is a different cell with a larger ball.
        if cell.level < l.cell(q0).level || !cell.atoms.clone().all(|a| root_atoms.contains(&a)) {
            continue;
        }
        let r = 30.0 * cell.radius;
        for y in cell.atoms.clone() {
            let (mut s, mut abs) = (0.0, 0.0);
            for z in 0..xs.len() {
                if (xs[z] - cell.center).abs() > r {
                    let t = inst.kernel.eval(xs[y], xs[z]) * f[z] * ms[z];
                    s += t;
                    abs += t.abs();
                }
            }
            best = best.max(s.abs());
            scale = scale.max(abs);
        }
    }
    (best, scale)
}

pub fn oracle_sparse_eval(lattice: &Lattice, fam: &SparseFamilies, f: &[f64], x: usize) -> f64 {
    let mut want = 0.0;
    for (&n, members) in &fam.families {
        for member in members {
            if lattice.cell(member.cell).atoms.clone().any(|a| a == x) {
                want += fam.decay_base.powi(n as i32) * oracle_average(lattice, f, member.cell);
            }
        }
    }
    want
}

pub fn oracle_cell_characteristic(lattice: &Lattice, weight: &Weight) -> f64 {
    let m = lattice.measure();
    let (xs, ms) = (m.positions(), m.masses());
    let p = weight.p();
    let values = weight.values();
    let sigma: Vec<f64> = values.iter().map(|v| v.powf(-1.0 / (p - 1.0))).collect();
    let pp = p / (p - 1.0);
    let mut want: f64 = 0.0;
    for c in lattice.cells() {
        let inside: Vec<usize> = c.atoms.clone().collect();
        let w_q: f64 = inside.iter().map(|&i| values[i] * ms[i]).sum();
        let s_q: f64 = inside.iter().map(|&i| sigma[i] * ms[i]).sum();
        let mu_q: f64 = inside.iter().map(|&i| ms[i]).sum();
        let s_200 = ball_sum(xs, ms, Some(&sigma), c.center, 200.0 * c.radius);
        let mu_a = ball_sum(xs, ms, None, c.center, lattice.params().alpha * c.radius);
        let term = s_200 * w_q * s_q.powf((p - 2.0f64).max(0.0)) * w_q.powf((pp - 2.0).max(0.0))
            / (mu_a * mu_q.powf(p.max(pp) - 1.0));
        want = want.max(term);
    }
    want
}
