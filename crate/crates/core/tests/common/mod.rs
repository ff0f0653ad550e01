//! Shared test helpers: random instances and independent re-implementations
//! used as oracles. Nothing here calls into the solver under test.

#![allow(dead_code)]

use std::collections::BTreeMap;

use gridcomm_core::control::ControlOutcome;
use gridcomm_core::grid::{
    validate_case, FrequencyBand, GridCase, IslandNode, IslandNodeKind, IslandState, Line, Node, NodeId, NodeSet,
};
use gridcomm_core::milp::{MilpModel, Relation};
use rand::seq::IteratorRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// A small valid grid: a few buses in a tree (plus maybe one chord) with
/// generators and loads hanging off them. At least one of each device kind.
pub fn random_case(rng: &mut ChaCha8Rng, max_nodes: usize) -> GridCase {
    assert!(max_nodes >= 4);
    let nb = rng.random_range(2..=4.min(max_nodes - 2));
    let nd = rng.random_range(2..=(max_nodes - nb).min(6));
    let mut nodes: Vec<Node> = (1..=nb as u32).map(Node::bus).collect();
    let mut lines = Vec::new();
    let mut next_line = 1u32;
    let mut add = |lines: &mut Vec<Line>, a: u32, b: u32, rng: &mut ChaCha8Rng| {
        let x = round2(rng.random_range(0.05..0.2));
        let f_max = round2(rng.random_range(0.3..2.0));
        lines.push(Line::new(next_line, a, b, x, f_max));
        next_line += 1;
    };
    for b in 2..=nb as u32 {
        let parent = rng.random_range(1..b);
        add(&mut lines, parent, b, rng);
    }
    if nb >= 3 && rng.random_bool(0.3) {
        add(&mut lines, 1, nb as u32, rng);
    }
    for k in 0..nd {
        let id = (nb + k + 1) as u32;
        let is_gen = match k {
            0 => true,
            1 => false,
            _ => rng.random_bool(0.5),
        };
        if is_gen {
            let pg = round2(rng.random_range(0.2..1.2));
            // droop inside a band of +-0.5 Hz moves output by at most pg/6,
            // so 20% headroom keeps uncontrollable droop within pg_max
            let pg_max = round2(pg * rng.random_range(1.2..1.5) + 0.01);
            nodes.push(Node::generator(id, pg, 0.0, pg_max));
        } else {
            let pl = -round2(rng.random_range(0.2..1.2));
            nodes.push(Node::load(id, pl, pl));
        }
        let bus = rng.random_range(1..=nb as u32);
        add(&mut lines, id, bus, rng);
    }
    let case = GridCase::new(nodes, lines, FrequencyBand::default());
    assert!(validate_case(&case).is_clean(), "generator produced an invalid case");
    case
}

/// Random failure set (generators only) and uncontrollable set.
pub fn random_sets(rng: &mut ChaCha8Rng, case: &GridCase, max_failed: usize, max_unc: usize) -> (NodeSet, NodeSet) {
    let gens: Vec<NodeId> = case.generators().map(|(id, _)| id).collect();
    let nf = rng.random_range(0..=max_failed.min(gens.len()));
    let failed: NodeSet = gens.into_iter().choose_multiple(rng, nf).into_iter().collect();
    let nu = rng.random_range(0..=max_unc.min(case.nodes().len()));
    let unc: NodeSet = case
        .nodes()
        .iter()
        .map(|n| n.id)
        .choose_multiple(rng, nu)
        .into_iter()
        .collect();
    (failed, unc)
}

/// A connected island of up to `max_nodes` nodes with random injections.
pub fn random_island(rng: &mut ChaCha8Rng, max_nodes: usize) -> IslandState {
    let n = rng.random_range(1..=max_nodes);
    let mut nodes = Vec::with_capacity(n);
    for i in 0..n {
        let id = NodeId(i as u32 + 1);
        let kind = match rng.random_range(0..3) {
            0 => {
                let pg = round2(rng.random_range(0.0..1.5));
                let alpha = if rng.random_bool(0.1) {
                    0.0
                } else {
                    pg / 3.0 + 0.02 / 60.0
                };
                IslandNodeKind::Generator { pg, alpha }
            }
            1 => IslandNodeKind::Load {
                pl: -round2(rng.random_range(0.0..1.5)),
            },
            _ => IslandNodeKind::Bus,
        };
        nodes.push(IslandNode { id, kind });
    }
    let mut lines = Vec::new();
    let mut lid = 1;
    for i in 2..=n as u32 {
        let j = rng.random_range(1..i);
        lines.push(Line::new(
            lid,
            j,
            i,
            round2(rng.random_range(0.05..0.3)),
            round2(rng.random_range(0.1..1.5)),
        ));
        lid += 1;
    }
    let extra = if n >= 3 { rng.random_range(0..=2) } else { 0 };
    for _ in 0..extra {
        let a = rng.random_range(1..=n as u32);
        let b = rng.random_range(1..=n as u32);
        if a != b {
            lines.push(Line::new(
                lid,
                a,
                b,
                round2(rng.random_range(0.05..0.3)),
                round2(rng.random_range(0.1..1.5)),
            ));
            lid += 1;
        }
    }
    IslandState::new(60.0, nodes, lines).unwrap()
}

// ---------------------------------------------------------------------------
// Dense two-phase tableau simplex with Bland's rule.

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleLp {
    Optimal(f64),
    Infeasible,
    Unbounded,
}

const EPS: f64 = 1e-9;

struct Tableau {
    /// `rows` constraint rows followed by the objective row; last column is
    /// the right-hand side.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    rows: usize,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        for i in 0..=self.rows {
            if i != r {
                let f = self.t[i][c];
                if f != 0.0 {
                    for j in 0..=self.cols {
                        let d = f * self.t[r][j];
                        self.t[i][j] -= d;
                    }
                }
            }
        }
        self.basis[r] = c;
    }

    /// Minimizes the objective row; `allowed` limits entering columns.
    /// Returns false when unbounded.
    fn run(&mut self, allowed: &dyn Fn(usize) -> bool) -> bool {
        loop {
            let obj = self.rows;
            let Some(c) = (0..self.cols).find(|&j| allowed(j) && self.t[obj][j] < -EPS) else {
                return true;
            };
            let mut best: Option<(f64, usize, usize)> = None;
            for i in 0..self.rows {
                let a = self.t[i][c];
                if a > EPS {
                    let ratio = self.t[i][self.cols] / a;
                    let better = match best {
                        None => true,
                        Some((r, _, b)) => ratio < r - EPS || (ratio <= r + EPS && self.basis[i] < b),
                    };
                    if better {
                        best = Some((ratio, i, self.basis[i]));
                    }
                }
            }
            let Some((_, r, _)) = best else { return false };
            self.pivot(r, c);
        }
    }
}

/// Solves `model` as an LP (binaries relaxed to their bounds) with a
/// textbook tableau method. Every variable needs a finite lower bound.
pub fn tableau_lp(model: &MilpModel) -> OracleLp {
    let n = model.vars().len();
    let lower: Vec<f64> = model.vars().iter().map(|v| v.lower).collect();
    assert!(lower.iter().all(|l| l.is_finite()), "oracle needs finite lower bounds");

    // rows in terms of y = x - lower >= 0
    let mut rows: Vec<(Vec<f64>, Relation, f64)> = Vec::new();
    for c in model.constraints() {
        let mut a = vec![0.0; n];
        let mut rhs = c.rhs;
        for &(v, coef) in &c.terms {
            a[v.0] += coef;
            rhs -= coef * lower[v.0];
        }
        rows.push((a, c.relation, rhs));
    }
    for (j, v) in model.vars().iter().enumerate() {
        if v.upper.is_finite() {
            let mut a = vec![0.0; n];
            a[j] = 1.0;
            rows.push((a, Relation::Le, v.upper - v.lower));
        }
    }
    for row in rows.iter_mut() {
        if row.2 < 0.0 {
            row.0.iter_mut().for_each(|x| *x = -*x);
            row.2 = -row.2;
            row.1 = match row.1 {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
    }
    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let cols = n + n_slack + n_art;
    let art_start = n + n_slack;
    let mut t = vec![vec![0.0; cols + 1]; m + 1];
    let mut basis = vec![0; m];
    let (mut s, mut a) = (n, art_start);
    for (i, (coef, rel, rhs)) in rows.iter().enumerate() {
        t[i][..n].copy_from_slice(coef);
        t[i][cols] = *rhs;
        match rel {
            Relation::Le => {
                t[i][s] = 1.0;
                basis[i] = s;
                s += 1;
            }
            Relation::Ge => {
                t[i][s] = -1.0;
                s += 1;
                t[i][a] = 1.0;
                basis[i] = a;
                a += 1;
            }
            Relation::Eq => {
                t[i][a] = 1.0;
                basis[i] = a;
                a += 1;
            }
        }
    }
    // phase one: minimize the artificial sum, written in reduced form
    for i in 0..m {
        if basis[i] >= art_start {
            for j in 0..=cols {
                t[m][j] -= t[i][j];
            }
        }
    }
    for j in art_start..cols {
        t[m][j] = 0.0;
    }
    let mut tab = Tableau {
        t,
        basis,
        rows: m,
        cols,
    };
    tab.run(&|_| true);
    if -tab.t[m][cols] > 1e-7 {
        return OracleLp::Infeasible;
    }
    // push zero-valued artificials out of the basis where possible
    for i in 0..m {
        if tab.basis[i] >= art_start {
            if let Some(j) = (0..art_start).find(|&j| tab.t[i][j].abs() > EPS) {
                tab.pivot(i, j);
            }
        }
    }
    // phase two
    let mut cost = vec![0.0; n];
    let mut offset = 0.0;
    for &(v, c) in model.objective() {
        cost[v.0] += c;
        offset += c * lower[v.0];
    }
    for j in 0..=cols {
        tab.t[m][j] = if j < n { cost[j] } else { 0.0 };
    }
    for i in 0..m {
        let b = tab.basis[i];
        let cb = tab.t[m][b];
        if cb != 0.0 {
            for j in 0..=cols {
                let d = cb * tab.t[i][j];
                tab.t[m][j] -= d;
            }
        }
    }
    if !tab.run(&|j| j < art_start) {
        return OracleLp::Unbounded;
    }
    OracleLp::Optimal(-tab.t[m][cols] + offset)
}

/// A random LP with at most `max_vars` variables and `max_rows` rows.
pub fn random_lp(rng: &mut ChaCha8Rng, max_vars: usize, max_rows: usize) -> MilpModel {
    let mut m = MilpModel::new();
    let n = rng.random_range(1..=max_vars);
    let vars: Vec<_> = (0..n)
        .map(|j| {
            let lo = round2(rng.random_range(-5.0..1.0));
            let hi = if rng.random_bool(0.15) {
                f64::INFINITY
            } else {
                lo + round2(rng.random_range(0.5..10.0))
            };
            m.add_var(format!("x{j}"), lo, hi).unwrap()
        })
        .collect();
    for i in 0..rng.random_range(0..=max_rows) {
        let mut terms = Vec::new();
        for &v in &vars {
            if rng.random_bool(0.6) {
                terms.push((v, round2(rng.random_range(-3.0..3.0))));
            }
        }
        let rel = match rng.random_range(0..3) {
            0 => Relation::Le,
            1 => Relation::Ge,
            _ => Relation::Eq,
        };
        m.add_constraint(format!("r{i}"), terms, rel, round2(rng.random_range(-5.0..10.0)))
            .unwrap();
    }
    let obj: Vec<_> = vars.iter().map(|&v| (v, round2(rng.random_range(-2.0..2.0)))).collect();
    m.set_objective(obj).unwrap();
    m
}

/// A random mixed-binary model with a box on every continuous variable.
pub fn random_milp(rng: &mut ChaCha8Rng, max_binaries: usize, max_continuous: usize) -> MilpModel {
    let mut m = MilpModel::new();
    let nc = rng.random_range(0..=max_continuous);
    let nb = rng.random_range(0..=max_binaries);
    let mut vars = Vec::new();
    for j in 0..nc {
        let lo = round2(rng.random_range(-3.0..1.0));
        vars.push(
            m.add_var(format!("x{j}"), lo, lo + round2(rng.random_range(0.5..6.0)))
                .unwrap(),
        );
    }
    let bins: Vec<_> = (0..nb).map(|j| m.add_binary(format!("z{j}"))).collect();
    // big-M style links between some continuous variables and binaries
    for (k, &z) in bins.iter().enumerate() {
        if let Some(&x) = vars.get(k % vars.len().max(1)) {
            if rng.random_bool(0.7) {
                m.add_constraint(
                    format!("link{k}"),
                    [(x, 1.0), (z, -round2(rng.random_range(1.0..5.0)))],
                    Relation::Le,
                    0.5,
                )
                .unwrap();
            }
        }
    }
    let all: Vec<_> = vars.iter().chain(&bins).copied().collect();
    for i in 0..rng.random_range(1..=6) {
        let mut terms = Vec::new();
        for &v in &all {
            if rng.random_bool(0.5) {
                terms.push((v, round2(rng.random_range(-3.0..3.0))));
            }
        }
        let rel = if rng.random_bool(0.5) {
            Relation::Le
        } else {
            Relation::Ge
        };
        m.add_constraint(format!("r{i}"), terms, rel, round2(rng.random_range(-3.0..6.0)))
            .unwrap();
    }
    let obj: Vec<_> = all.iter().map(|&v| (v, round2(rng.random_range(-2.0..2.0)))).collect();
    m.set_objective(obj).unwrap();
    m
}

// ---------------------------------------------------------------------------
// Physics residuals recomputed from the case, independent of the library's
// own checker.

#[derive(Debug, Default, Clone, Copy)]
pub struct Residuals {
    pub balance: f64,
    pub flow_law: f64,
    pub open_flow: f64,
    pub frequency_spread: f64,
    pub generator_bounds: f64,
}

impl Residuals {
    pub fn worst(&self) -> f64 {
        [
            self.balance,
            self.flow_law,
            self.open_flow,
            self.frequency_spread,
            self.generator_bounds,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn residuals(case: &GridCase, o: &ControlOutcome) -> Residuals {
    let mut r = Residuals::default();
    let omega_s = case.band().omega_s;
    let theta: BTreeMap<NodeId, f64> = o.nodes.iter().map(|n| (n.id, n.theta)).collect();
    let omega: BTreeMap<NodeId, Option<f64>> = o.nodes.iter().map(|n| (n.id, n.omega)).collect();
    let mut net: BTreeMap<NodeId, f64> = theta.keys().map(|&k| (k, 0.0)).collect();

    for g in &o.generators {
        let Some(out) = g.output else { continue };
        *net.get_mut(&g.id).unwrap() += out;
        if g.area.is_none() {
            let node = case.node(g.id).unwrap();
            let spec = node.as_generator().unwrap();
            r.generator_bounds = r.generator_bounds.max(spec.pg_min - out).max(out - spec.pg_max);
            // droop law, with alpha recomputed from its definition
            let alpha = spec.pg_init / (omega_s * 0.05) + spec.damping_d / omega_s;
            let w = omega[&g.id].unwrap();
            r.balance = r.balance.max((g.pg - alpha * (w - omega_s) - out).abs());
        }
    }
    for l in &o.loads {
        *net.get_mut(&l.id).unwrap() += l.served;
    }

    // union-find over closed lines for the frequency check
    let ids: Vec<NodeId> = theta.keys().copied().collect();
    let pos: BTreeMap<NodeId, usize> = ids.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let mut parent: Vec<usize> = (0..ids.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for ls in &o.lines {
        let line = case.line(ls.id).unwrap();
        *net.get_mut(&line.from).unwrap() -= ls.flow;
        *net.get_mut(&line.to).unwrap() += ls.flow;
        if ls.closed {
            r.flow_law = r
                .flow_law
                .max((line.reactance_x * ls.flow - (theta[&line.from] - theta[&line.to])).abs());
            let (a, b) = (find(&mut parent, pos[&line.from]), find(&mut parent, pos[&line.to]));
            parent[a] = b;
        } else {
            r.open_flow = r.open_flow.max(ls.flow.abs());
        }
    }
    for v in net.values() {
        r.balance = r.balance.max(v.abs());
    }
    let mut range: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
    for (i, id) in ids.iter().enumerate() {
        if let Some(w) = omega[id] {
            let root = find(&mut parent, i);
            let e = range.entry(root).or_insert((w, w));
            e.0 = e.0.min(w);
            e.1 = e.1.max(w);
        }
    }
    for (lo, hi) in range.values() {
        r.frequency_spread = r.frequency_spread.max(hi - lo);
    }
    r
}
