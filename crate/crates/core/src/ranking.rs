//! Ranking functions, their score values, and the per-bag scoring plan used
//! by the engine.
//!
//! Scores are compared as values of [`ScoreValue`]. Sums and products are
//! plain integers. `max` is kept as the descending list of every contribution
//! (leximax), which orders outputs by their maximum first and stays
//! cancellative, so partial scores of sibling cells compare the same way the
//! completed outputs do. Lexicographic rankings keep one slot per declared
//! variable.

use std::collections::{BTreeSet, HashMap};

use crate::decomp::TreeDecomposition;
use crate::error::RankingError;
use crate::query::{ConjunctiveQuery, VarId};
use crate::relation::{ConstantId, Database, Dictionary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MonoidOp {
    Sum,
    Max,
    Product,
}

impl MonoidOp {
    pub fn name(self) -> &'static str {
        match self {
            MonoidOp::Sum => "sum",
            MonoidOp::Max => "max",
            MonoidOp::Product => "product",
        }
    }

    pub fn identity(self) -> ScoreValue {
        match self {
            MonoidOp::Sum => ScoreValue::Scalar(0),
            MonoidOp::Product => ScoreValue::Scalar(1),
            MonoidOp::Max => ScoreValue::Leximax(Vec::new()),
        }
    }

    /// Score of a single contribution. Missing weights contribute the
    /// identity (for `max`, negative infinity).
    pub fn element(self, weight: Option<i64>) -> ScoreValue {
        match self {
            MonoidOp::Sum => ScoreValue::Scalar(weight.unwrap_or(0)),
            MonoidOp::Product => ScoreValue::Scalar(weight.unwrap_or(1)),
            MonoidOp::Max => ScoreValue::Leximax(vec![weight.unwrap_or(NEG_INF)]),
        }
    }
}

/// Stand-in for negative infinity inside `max` scores.
pub const NEG_INF: i64 = i64::MIN;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ScoreValue {
    Scalar(i64),
    /// All contributions, sorted descending.
    Leximax(Vec<i64>),
    /// One slot per declared variable; `None` while not yet bound.
    Lex(Vec<Option<ConstantId>>),
}

impl ScoreValue {
    /// `self ⊕ other`. `op` only matters for scalars.
    pub fn combine(&self, other: &ScoreValue, op: MonoidOp) -> Result<ScoreValue, RankingError> {
        match (self, other) {
            (ScoreValue::Scalar(a), ScoreValue::Scalar(b)) => {
                let r = match op {
                    MonoidOp::Sum => a.checked_add(*b),
                    MonoidOp::Product => a.checked_mul(*b),
                    MonoidOp::Max => Some(*a.max(b)),
                };
                r.map(ScoreValue::Scalar).ok_or(RankingError::Overflow)
            }
            (ScoreValue::Leximax(a), ScoreValue::Leximax(b)) => {
                let mut out = Vec::with_capacity(a.len() + b.len());
                let (mut i, mut j) = (0, 0);
                while i < a.len() && j < b.len() {
                    if a[i] >= b[j] {
                        out.push(a[i]);
                        i += 1;
                    } else {
                        out.push(b[j]);
                        j += 1;
                    }
                }
                out.extend_from_slice(&a[i..]);
                out.extend_from_slice(&b[j..]);
                Ok(ScoreValue::Leximax(out))
            }
            (ScoreValue::Lex(a), ScoreValue::Lex(b)) => {
                assert_eq!(a.len(), b.len(), "lex scores of different shapes");
                let slots = a
                    .iter()
                    .zip(b)
                    .map(|(x, y)| {
                        assert!(x.is_none() || y.is_none(), "lex slot bound twice");
                        x.or(*y)
                    })
                    .collect();
                Ok(ScoreValue::Lex(slots))
            }
            _ => panic!("combining scores of different kinds"),
        }
    }

    /// Output form: the integer, the maximum, or the comma-joined lex values.
    pub fn render(&self, dict: &Dictionary) -> String {
        match self {
            ScoreValue::Scalar(v) => v.to_string(),
            ScoreValue::Leximax(v) => match v.first() {
                Some(&m) if m != NEG_INF => m.to_string(),
                _ => "-inf".to_owned(),
            },
            ScoreValue::Lex(slots) => slots
                .iter()
                .map(|s| s.map_or_else(|| "_".to_owned(), |c| dict.value(c).to_string()))
                .collect::<Vec<_>>()
                .join(","),
        }
    }
}

/// Total order key of an output: score first, then the values in head order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Score {
    pub primary: ScoreValue,
    pub tie_key: Vec<ConstantId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RankingFunction {
    /// ⊕ over the weights of the tuples joined into the output.
    Tuple(MonoidOp),
    /// ⊕ over the weights of the constants bound to each variable.
    Vertex(MonoidOp),
    /// Lexicographic over the listed variables.
    Lex(Vec<VarId>),
    /// `inner` restricted to the atoms and variables inside `vars`.
    Bounded { inner: Box<RankingFunction>, vars: BTreeSet<VarId> },
}

/// Failing nodes from [`RankingFunction::check_compatible`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Compatibility {
    pub failing_nodes: Vec<u32>,
}

impl Compatibility {
    pub fn is_compatible(&self) -> bool {
        self.failing_nodes.is_empty()
    }
}

impl RankingFunction {
    /// Parses `tuple_sum`, `vertex_max`, `lex(z,x,y)`, `bounded(tuple_sum; x,y)`
    /// and friends against the head variable names.
    pub fn parse(spec: &str, head: &[String]) -> Result<Self, RankingError> {
        let perr = |m: &str| RankingError::Parse { spec: spec.to_owned(), message: m.to_owned() };
        let s = spec.trim();
        let var = |name: &str| {
            head.iter()
                .position(|h| h == name)
                .ok_or_else(|| RankingError::UnknownVariable { var: name.to_owned() })
        };
        let args = |body: &str| -> Result<Vec<VarId>, RankingError> {
            body.split(',').map(str::trim).filter(|v| !v.is_empty()).map(var).collect()
        };
        if let Some(body) = s.strip_prefix("lex(").and_then(|r| r.strip_suffix(')')) {
            let vars = args(body)?;
            if vars.is_empty() {
                return Err(perr("lex needs at least one variable"));
            }
            if vars.iter().collect::<BTreeSet<_>>().len() != vars.len() {
                return Err(perr("lex repeats a variable"));
            }
            return Ok(RankingFunction::Lex(vars));
        }
        if let Some(body) = s.strip_prefix("bounded(").and_then(|r| r.strip_suffix(')')) {
            let (inner, vars) = body.split_once(';').ok_or_else(|| perr("expected `bounded(<ranking>; <vars>)`"))?;
            let inner = RankingFunction::parse(inner, head)?;
            if matches!(inner, RankingFunction::Bounded { .. }) {
                return Err(perr("bounded rankings cannot nest"));
            }
            let vars: BTreeSet<VarId> = args(vars)?.into_iter().collect();
            return Ok(RankingFunction::Bounded { inner: Box::new(inner), vars });
        }
        let (family, op) = s.split_once('_').ok_or_else(|| perr("unknown ranking"))?;
        let op = match op {
            "sum" => MonoidOp::Sum,
            "max" => MonoidOp::Max,
            "product" => MonoidOp::Product,
            _ => return Err(perr("unknown monoid; expected sum, max or product")),
        };
        match family {
            "tuple" => Ok(RankingFunction::Tuple(op)),
            "vertex" => Ok(RankingFunction::Vertex(op)),
            _ => Err(perr("unknown ranking family; expected tuple, vertex, lex or bounded")),
        }
    }

    pub fn render(&self, head: &[String]) -> String {
        let names = |vs: &mut dyn Iterator<Item = &VarId>| vs.map(|&v| head[v].as_str()).collect::<Vec<_>>().join(",");
        match self {
            RankingFunction::Tuple(op) => format!("tuple_{}", op.name()),
            RankingFunction::Vertex(op) => format!("vertex_{}", op.name()),
            RankingFunction::Lex(vars) => format!("lex({})", names(&mut vars.iter())),
            RankingFunction::Bounded { inner, vars } => {
                format!("bounded({}; {})", inner.render(head), names(&mut vars.iter()))
            }
        }
    }

    /// Monoid of the scalar part; lexicographic rankings have none.
    pub fn op(&self) -> Option<MonoidOp> {
        match self {
            RankingFunction::Tuple(op) | RankingFunction::Vertex(op) => Some(*op),
            RankingFunction::Lex(_) => None,
            RankingFunction::Bounded { inner, .. } => inner.op(),
        }
    }

    pub fn bound_vars(&self) -> Option<&BTreeSet<VarId>> {
        match self {
            RankingFunction::Bounded { vars, .. } => Some(vars),
            _ => None,
        }
    }

    fn base(&self) -> &RankingFunction {
        match self {
            RankingFunction::Bounded { inner, .. } => inner,
            other => other,
        }
    }

    pub fn identity(&self) -> ScoreValue {
        match self.base() {
            RankingFunction::Lex(vars) => ScoreValue::Lex(vec![None; vars.len()]),
            _ => self.op().expect("monoid ranking").identity(),
        }
    }

    pub fn combine(&self, a: &ScoreValue, b: &ScoreValue) -> Result<ScoreValue, RankingError> {
        a.combine(b, self.op().unwrap_or(MonoidOp::Sum))
    }

    /// Atoms whose tuple weights enter the score.
    pub fn charged_atoms(&self, q: &ConjunctiveQuery) -> Vec<usize> {
        match self {
            RankingFunction::Tuple(_) => (0..q.atoms.len()).collect(),
            RankingFunction::Bounded { inner, vars } if matches!(**inner, RankingFunction::Tuple(_)) => {
                (0..q.atoms.len()).filter(|&a| q.atoms[a].vars.iter().all(|v| vars.contains(v))).collect()
            }
            _ => Vec::new(),
        }
    }

    /// Variables whose values enter the score, as (variable, lex slot).
    pub fn charged_vars(&self, q: &ConjunctiveQuery) -> Vec<(VarId, usize)> {
        let inside = |v: &VarId| self.bound_vars().is_none_or(|s| s.contains(v));
        match self.base() {
            RankingFunction::Vertex(_) => (0..q.num_vars()).filter(inside).map(|v| (v, 0)).collect(),
            RankingFunction::Lex(vars) => {
                vars.iter().enumerate().filter(|(_, v)| inside(v)).map(|(slot, &v)| (v, slot)).collect()
            }
            _ => Vec::new(),
        }
    }

    /// Monoid rankings and lexicographic orders fit any decomposition;
    /// bounded ones need their variables in every bag.
    pub fn check_compatible(&self, d: &TreeDecomposition) -> Compatibility {
        let failing_nodes = match self.bound_vars() {
            Some(vars) => d
                .nodes()
                .iter()
                .filter(|n| !vars.iter().all(|v| n.bag.contains(v)))
                .map(|n| n.id)
                .collect(),
            None => Vec::new(),
        };
        Compatibility { failing_nodes }
    }

    /// Rejects non-positive weights under `product` and any instance whose
    /// worst-case score does not fit in 64 bits.
    pub fn check_weights(&self, q: &ConjunctiveQuery, db: &Database) -> Result<(), RankingError> {
        let Some(op) = self.op() else { return Ok(()) };
        let mut magnitudes: Vec<i64> = Vec::new();
        for a in self.charged_atoms(q) {
            let rel = db.relation(&q.atoms[a].relation);
            let mut worst = 0i64;
            for t in rel.into_iter().flat_map(|r| r.tuples()) {
                if let Some(w) = t.weight {
                    if op == MonoidOp::Product && w <= 0 {
                        return Err(RankingError::NonPositiveWeight {
                            source_desc: format!("a tuple of `{}`", q.atoms[a].relation),
                            weight: w,
                        });
                    }
                    worst = worst.max(w.checked_abs().ok_or(RankingError::Overflow)?);
                }
            }
            magnitudes.push(worst);
        }
        let vars = self.charged_vars(q);
        if !vars.is_empty() {
            let mut worst = 0i64;
            for (&c, &w) in db.vertex_weights().into_iter().flatten() {
                if op == MonoidOp::Product && w <= 0 {
                    return Err(RankingError::NonPositiveWeight {
                        source_desc: format!("constant `{}`", db.dictionary().value(c)),
                        weight: w,
                    });
                }
                worst = worst.max(w.checked_abs().ok_or(RankingError::Overflow)?);
            }
            magnitudes.extend(std::iter::repeat_n(worst, vars.len()));
        }
        match op {
            MonoidOp::Sum => magnitudes
                .iter()
                .try_fold(0i64, |acc, &m| acc.checked_add(m))
                .map(|_| ())
                .ok_or(RankingError::Overflow),
            MonoidOp::Product => magnitudes
                .iter()
                .try_fold(1i64, |acc, &m| acc.checked_mul(m.max(1)))
                .map(|_| ())
                .ok_or(RankingError::Overflow),
            MonoidOp::Max => Ok(()),
        }
    }

    /// Score of a full valuation straight from the definition. `atom_weight`
    /// gives the weight of the tuple atom `i` matched, `vertex_weight` the
    /// weight of a constant.
    pub fn score_valuation(
        &self,
        q: &ConjunctiveQuery,
        values: &[ConstantId],
        atom_weight: impl Fn(usize) -> Option<i64>,
        vertex_weight: impl Fn(ConstantId) -> Option<i64>,
    ) -> Result<ScoreValue, RankingError> {
        let mut acc = self.identity();
        match self.base() {
            RankingFunction::Tuple(op) => {
                for a in self.charged_atoms(q) {
                    acc = acc.combine(&op.element(atom_weight(a)), *op)?;
                }
            }
            RankingFunction::Vertex(op) => {
                for (v, _) in self.charged_vars(q) {
                    acc = acc.combine(&op.element(vertex_weight(values[v])), *op)?;
                }
            }
            RankingFunction::Lex(_) => {
                if let ScoreValue::Lex(slots) = &mut acc {
                    for (v, slot) in self.charged_vars(q) {
                        slots[slot] = Some(values[v]);
                    }
                }
            }
            RankingFunction::Bounded { .. } => unreachable!("bounded rankings do not nest"),
        }
        Ok(acc)
    }
}

struct NodeCharge {
    /// (atom, positions of its variables in the bag)
    atoms: Vec<(usize, Vec<usize>)>,
    /// (position in the bag, lex slot)
    vars: Vec<(usize, usize)>,
}

/// Per-node scoring for one (ranking, query, decomposition) triple.
///
/// Each charged atom is scored at exactly one node: the first node in
/// pre-order that lists it in its cover, otherwise the first whose bag holds
/// its variables. Each charged variable is scored at the node whose `val`
/// set contains it. Bounded rankings score everything at the root.
pub struct ScorePlan {
    rf: RankingFunction,
    nodes: Vec<NodeCharge>,
    atom_weights: Vec<Option<HashMap<Vec<ConstantId>, i64>>>,
    vertex_weights: HashMap<ConstantId, i64>,
}

impl ScorePlan {
    pub fn new(rf: &RankingFunction, q: &ConjunctiveQuery, d: &TreeDecomposition, db: &Database) -> Self {
        let mut nodes: Vec<NodeCharge> =
            d.nodes().iter().map(|_| NodeCharge { atoms: Vec::new(), vars: Vec::new() }).collect();
        let pre = d.pre_order();
        let bounded = rf.bound_vars().is_some();
        let pos = |node: usize, v: VarId| d.node(node).bag.iter().position(|&b| b == v).expect("variable in bag");
        for a in rf.charged_atoms(q) {
            let vars = &q.atoms[a].vars;
            let home = if bounded {
                d.root()
            } else {
                pre.iter()
                    .copied()
                    .find(|&t| d.node(t).cover.contains(&a))
                    .filter(|&t| vars.iter().all(|v| d.node(t).bag.contains(v)))
                    .or_else(|| pre.iter().copied().find(|&t| vars.iter().all(|v| d.node(t).bag.contains(v))))
                    .expect("decomposition covers every atom")
            };
            nodes[home].atoms.push((a, vars.iter().map(|&v| pos(home, v)).collect()));
        }
        for (v, slot) in rf.charged_vars(q) {
            let home = if bounded {
                d.root()
            } else {
                (0..d.len()).find(|&t| d.node(t).val_vars.contains(&v)).expect("every variable has a home")
            };
            nodes[home].vars.push((pos(home, v), slot));
        }
        let atom_weights = (0..q.atoms.len())
            .map(|a| {
                db.relation(&q.atoms[a].relation).filter(|r| r.has_weights()).map(|r| {
                    r.tuples().iter().filter_map(|t| t.weight.map(|w| (t.values.clone(), w))).collect()
                })
            })
            .collect();
        ScorePlan {
            rf: rf.clone(),
            nodes,
            atom_weights,
            vertex_weights: db.vertex_weights().cloned().unwrap_or_default(),
        }
    }

    pub fn ranking(&self) -> &RankingFunction {
        &self.rf
    }

    /// Contribution of node `node` for one bag valuation (in bag order).
    pub fn bag_score(&self, node: usize, row: &[ConstantId]) -> Result<ScoreValue, RankingError> {
        let charge = &self.nodes[node];
        let mut acc = self.rf.identity();
        match self.rf.base() {
            RankingFunction::Tuple(op) => {
                for (a, positions) in &charge.atoms {
                    let w = self.atom_weights[*a].as_ref().and_then(|m| {
                        let key: Vec<ConstantId> = positions.iter().map(|&p| row[p]).collect();
                        m.get(&key).copied()
                    });
                    acc = acc.combine(&op.element(w), *op)?;
                }
            }
            RankingFunction::Vertex(op) => {
                for &(p, _) in &charge.vars {
                    acc = acc.combine(&op.element(self.vertex_weights.get(&row[p]).copied()), *op)?;
                }
            }
            RankingFunction::Lex(_) => {
                if let ScoreValue::Lex(slots) = &mut acc {
                    for &(p, slot) in &charge.vars {
                        slots[slot] = Some(row[p]);
                    }
                }
            }
            RankingFunction::Bounded { .. } => unreachable!("bounded rankings do not nest"),
        }
        Ok(acc)
    }
}

/// Result of [`decomposability_probe`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProbeOutcome {
    Pass,
    /// `theta1` scores below `theta2` under `phi_low` and above it under
    /// `phi_high`.
    Reversal { theta1: Vec<i64>, theta2: Vec<i64>, phi_low: Vec<i64>, phi_high: Vec<i64> },
}

pub const DEFAULT_PROBE_CAP: usize = 10_000;

/// Checks whether valuations over the variables `s` can be totally ordered
/// consistently with `scorer` for every extension to the remaining
/// variables. Variable `i` ranges over `domains[i]`; valuations are passed
/// to `scorer` as full vectors. `theta` lists values of `s` in the given
/// order, `phi` the rest in index order.
pub fn decomposability_probe<F>(
    domains: &[Vec<i64>],
    s: &[usize],
    scorer: F,
    cap: usize,
) -> Result<ProbeOutcome, RankingError>
where
    F: Fn(&[i64]) -> i64,
{
    let needed = domains.iter().try_fold(1u128, |acc, d| acc.checked_mul(d.len() as u128)).unwrap_or(u128::MAX);
    if needed > cap as u128 {
        return Err(RankingError::ProbeTooLarge { needed, cap });
    }
    if s.is_empty() || needed == 0 {
        return Ok(ProbeOutcome::Pass);
    }
    let rest: Vec<usize> = (0..domains.len()).filter(|i| !s.contains(i)).collect();
    let thetas = cartesian(s.iter().map(|&i| &domains[i]));
    let phis = cartesian(rest.iter().map(|&i| &domains[i]));
    let mut full = vec![0i64; domains.len()];
    let scores: Vec<Vec<i64>> = thetas
        .iter()
        .map(|theta| {
            phis.iter()
                .map(|phi| {
                    for (k, &i) in s.iter().enumerate() {
                        full[i] = theta[k];
                    }
                    for (k, &i) in rest.iter().enumerate() {
                        full[i] = phi[k];
                    }
                    scorer(&full)
                })
                .collect()
        })
        .collect();
    // Each extension induces a weak order on the thetas. If no pair is ever
    // reversed, their union is acyclic (a shortest cycle would force a flip
    // between two of its members), so a consistent total order exists.
    for a in 0..thetas.len() {
        for b in a + 1..thetas.len() {
            let low = (0..phis.len()).find(|&e| scores[a][e] < scores[b][e]);
            let high = (0..phis.len()).find(|&e| scores[a][e] > scores[b][e]);
            if let (Some(l), Some(h)) = (low, high) {
                return Ok(ProbeOutcome::Reversal {
                    theta1: thetas[a].clone(),
                    theta2: thetas[b].clone(),
                    phi_low: phis[l].clone(),
                    phi_high: phis[h].clone(),
                });
            }
        }
    }
    Ok(ProbeOutcome::Pass)
}

fn cartesian<'a>(domains: impl Iterator<Item = &'a Vec<i64>>) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for d in domains {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                d.iter().map(move |&x| {
                    let mut p = prefix.clone();
                    p.push(x);
                    p
                })
            })
            .collect();
    }
    out
}
