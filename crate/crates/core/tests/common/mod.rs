#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

use rankjoin::decomp::{gyo_join_tree, parse_decomposition};
use rankjoin::query::parse_query;
use rankjoin::relation::{RawRelation, RawVertexWeights};
use rankjoin::{ConjunctiveQuery, Database, RawValue, TreeDecomposition};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Path2,
    Path3,
    Path4,
    Star,
    Triangle,
    TriangleTail,
}

pub const SHAPES: [Shape; 6] = [Shape::Path2, Shape::Path3, Shape::Path4, Shape::Star, Shape::Triangle, Shape::TriangleTail];

impl Shape {
    pub fn query(self) -> &'static str {
        match self {
            Shape::Path2 => "Q(x,y,z) :- R(x,y), S(y,z)",
            Shape::Path3 => "Q(x,y,z,w) :- R(x,y), S(y,z), T(z,w)",
            Shape::Path4 => "Q(x,y,z,w,v) :- R(x,y), S(y,z), T(z,w), U(w,v)",
            Shape::Star => "Q(x,a,b,c) :- R(x,a), S(x,b), T(x,c)",
            Shape::Triangle => "Q(x,y,z) :- R(x,y), S(y,z), T(z,x)",
            Shape::TriangleTail => "Q(x,y,z,w) :- R(x,y), S(y,z), T(z,x), U(z,w)",
        }
    }

    /// Hand-written width-2 decompositions for the cyclic shapes.
    pub fn decomposition(self) -> Option<&'static str> {
        match self {
            Shape::Triangle => Some("node 0: {x,y,z} cover R,S\n"),
            Shape::TriangleTail => Some("node 0: {x,y,z} cover R,S\nnode 1: {z,w} cover U\nroot 0\nedge 0 1\n"),
            _ => None,
        }
    }

    fn atoms(self) -> usize {
        match self {
            Shape::Path2 => 2,
            Shape::Path3 | Shape::Star | Shape::Triangle => 3,
            Shape::Path4 | Shape::TriangleTail => 4,
        }
    }
}

/// Reference ranking, evaluated on raw integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RefRank {
    TupleSum,
    TupleMax,
    VertexSum,
    /// Variable ids in priority order.
    Lex(Vec<usize>),
}

impl RefRank {
    pub fn spec(&self, head: &[String]) -> String {
        match self {
            RefRank::TupleSum => "tuple_sum".into(),
            RefRank::TupleMax => "tuple_max".into(),
            RefRank::VertexSum => "vertex_sum".into(),
            RefRank::Lex(vs) => format!("lex({})", vs.iter().map(|&v| head[v].as_str()).collect::<Vec<_>>().join(",")),
        }
    }
}

pub type RawRows = Vec<(Vec<i64>, i64)>;

/// A weighted database over integer constants, kept in raw form so the
/// reference evaluator never touches the library's data structures.
#[derive(Debug, Clone)]
pub struct RawInstance {
    pub query: String,
    pub decomp: Option<String>,
    /// (relation, rows as (values, weight))
    pub rels: Vec<(String, RawRows)>,
    pub vertex_weights: BTreeMap<i64, i64>,
}

impl RawInstance {
    pub fn cq(&self) -> ConjunctiveQuery {
        parse_query(&self.query).unwrap().disjuncts.remove(0)
    }

    pub fn database(&self) -> Database {
        let mut b = Database::builder();
        for (name, rows) in &self.rels {
            let arity = rows.first().map_or(2, |r| r.0.len());
            let cols: Vec<String> = (0..arity).map(|i| format!("c{i}")).collect();
            let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
            let mut r = RawRelation::new(name.as_str(), &cols);
            for (vals, w) in rows {
                r.push(vals.iter().map(|&v| RawValue::Int(v)).collect(), Some(*w));
            }
            b.add_relation(r).unwrap();
        }
        if !self.vertex_weights.is_empty() {
            let w: RawVertexWeights = self.vertex_weights.iter().map(|(&c, &w)| (RawValue::Int(c), w)).collect();
            b.vertex_weights(w);
        }
        b.build().unwrap()
    }

    pub fn decomposition(&self, q: &ConjunctiveQuery) -> TreeDecomposition {
        match &self.decomp {
            Some(text) => parse_decomposition(text, q).unwrap(),
            None => gyo_join_tree(q).unwrap(),
        }
    }

    fn rows(&self, name: &str) -> &[(Vec<i64>, i64)] {
        &self.rels.iter().find(|(n, _)| n == name).unwrap().1
    }
}

/// Minimal query reader for the reference side: head names and atoms as
/// (relation, variable ids).
pub fn ref_parse(text: &str) -> (Vec<String>, Vec<(String, Vec<usize>)>) {
    let (head, body) = text.split_once(":-").unwrap();
    let head: Vec<String> =
        head.trim().trim_start_matches(|c| c != '(').trim_matches(|c| c == '(' || c == ')').split(',').map(|s| s.trim().to_owned()).collect();
    let atoms = body
        .split("),")
        .map(|a| {
            let (rel, args) = a.trim().split_once('(').unwrap();
            let vars = args
                .trim_end_matches(')')
                .split(',')
                .map(|v| head.iter().position(|h| h == v.trim()).unwrap())
                .collect();
            (rel.trim().to_owned(), vars)
        })
        .collect();
    (head, atoms)
}

/// One join result: variable values plus the weight of each matched tuple.
pub type RefRow = (Vec<i64>, Vec<i64>);

/// Nested-loop join over raw rows, no indexes.
pub fn reference_join(inst: &RawInstance, query: &str) -> Vec<RefRow> {
    let (head, atoms) = ref_parse(query);
    let mut out = Vec::new();
    let mut vals: Vec<Option<i64>> = vec![None; head.len()];
    let mut weights = Vec::new();
    fn go(
        inst: &RawInstance,
        atoms: &[(String, Vec<usize>)],
        i: usize,
        vals: &mut Vec<Option<i64>>,
        weights: &mut Vec<i64>,
        out: &mut Vec<RefRow>,
    ) {
        if i == atoms.len() {
            out.push((vals.iter().map(|v| v.unwrap()).collect(), weights.clone()));
            return;
        }
        let (rel, vars) = &atoms[i];
        for (row, w) in inst.rows(rel) {
            if vars.iter().zip(row).any(|(&v, &c)| vals[v].is_some_and(|b| b != c)) {
                continue;
            }
            let saved = vals.clone();
            for (&v, &c) in vars.iter().zip(row) {
                vals[v] = Some(c);
            }
            weights.push(*w);
            go(inst, atoms, i + 1, vals, weights, out);
            weights.pop();
            *vals = saved;
        }
    }
    go(inst, &atoms, 0, &mut vals, &mut weights, &mut out);
    out
}

/// Sort key and rendered score of one join result.
pub fn reference_score(inst: &RawInstance, rank: &RefRank, row: &RefRow) -> (Vec<i64>, String) {
    let (vals, ws) = row;
    match rank {
        RefRank::TupleSum => {
            let s: i64 = ws.iter().sum();
            (vec![s], s.to_string())
        }
        RefRank::TupleMax => {
            // ties on the maximum are broken by the next largest weight, and so on
            let mut v = ws.clone();
            v.sort_unstable_by(|a, b| b.cmp(a));
            let shown = v[0].to_string();
            (v, shown)
        }
        RefRank::VertexSum => {
            let s: i64 = vals.iter().map(|c| inst.vertex_weights.get(c).copied().unwrap_or(0)).sum();
            (vec![s], s.to_string())
        }
        RefRank::Lex(order) => {
            let v: Vec<i64> = order.iter().map(|&i| vals[i]).collect();
            let shown = v.iter().map(i64::to_string).collect::<Vec<_>>().join(",");
            (v, shown)
        }
    }
}

/// Ranked records `score<TAB>values` for a union of queries over one
/// instance, deduplicated on values (keeping the smallest key).
pub fn reference_records(inst: &RawInstance, queries: &[&str], rank: &RefRank) -> Vec<String> {
    let mut best: BTreeMap<Vec<i64>, (Vec<i64>, String)> = BTreeMap::new();
    for q in queries {
        for row in reference_join(inst, q) {
            let scored = reference_score(inst, rank, &row);
            match best.get(&row.0) {
                Some(b) if b.0 <= scored.0 => {}
                _ => {
                    best.insert(row.0, scored);
                }
            }
        }
    }
    let mut v: Vec<(Vec<i64>, Vec<i64>, String)> = best.into_iter().map(|(vals, (k, s))| (k, vals, s)).collect();
    v.sort();
    v.into_iter()
        .map(|(_, vals, s)| format!("{s}\t{}", vals.iter().map(i64::to_string).collect::<Vec<_>>().join(",")))
        .collect()
}

fn estimate(shape: Shape, m: usize, d: usize) -> f64 {
    let (m, d) = (m as f64, d as f64);
    match shape {
        Shape::Triangle => m * m / d,
        Shape::TriangleTail => m * m * m / (d * d),
        s => m.powi(s.atoms() as i32) / d.powi(s.atoms() as i32 - 1),
    }
}

/// Random instance of `shape`: relations of at most 200 distinct rows over
/// `1..=d`, weights in `-20..=20`, vertex weights on a random subset of the
/// domain. Sizes are chosen so the output stays small enough for the
/// reference join.
pub fn random_instance(rng: &mut StdRng, shape: Shape) -> RawInstance {
    let (d, m) = loop {
        let d = rng.gen_range(2..=30usize);
        let m = rng.gen_range(0..=200usize.min(d * d));
        if estimate(shape, m, d) <= 5_000.0 {
            break (d, m);
        }
    };
    let (_, atoms) = ref_parse(shape.query());
    let rels = atoms
        .iter()
        .map(|(name, vars)| {
            // occasionally much smaller or empty, to exercise dangling tuples
            let size = match rng.gen_range(0..10) {
                0 => 0,
                1 => rng.gen_range(1..=3).min(m),
                _ => m,
            };
            let mut seen = BTreeSet::new();
            let mut rows = Vec::new();
            while rows.len() < size {
                let vals: Vec<i64> = (0..vars.len()).map(|_| rng.gen_range(1..=d as i64)).collect();
                if seen.insert(vals.clone()) {
                    rows.push((vals, rng.gen_range(-20..=20)));
                }
            }
            (name.clone(), rows)
        })
        .collect();
    let mut vertex_weights = BTreeMap::new();
    for c in 1..=d as i64 {
        if rng.gen_bool(0.8) {
            vertex_weights.insert(c, rng.gen_range(-20..=20));
        }
    }
    RawInstance { query: shape.query().into(), decomp: shape.decomposition().map(str::to_owned), rels, vertex_weights }
}

pub fn random_rank(rng: &mut StdRng, num_vars: usize) -> RefRank {
    match rng.gen_range(0..4) {
        0 => RefRank::TupleSum,
        1 => RefRank::TupleMax,
        2 => RefRank::VertexSum,
        _ => {
            let mut vars: Vec<usize> = (0..num_vars).collect();
            vars.shuffle(rng);
            vars.truncate(rng.gen_range(1..=num_vars));
            RefRank::Lex(vars)
        }
    }
}

/// The running example: four binary relations over `{1,2,3}`.
pub fn running_example() -> RawInstance {
    RawInstance {
        query: "Q(x,y,z,w,u) :- R1(x,y), R2(y,z), R3(z,w), R4(z,u)".into(),
        decomp: Some(
            "node 1: {x,y} cover R1\nnode 2: {y,z} cover R2\nnode 3: {z,w} cover R3\nnode 4: {z,u} cover R4\nroot 1\nedge 1 2\nedge 2 3\nedge 2 4\n"
                .into(),
        ),
        rels: vec![
            ("R1".into(), vec![(vec![1, 1], 1), (vec![2, 1], 2)]),
            ("R2".into(), vec![(vec![1, 1], 1), (vec![3, 1], 1)]),
            ("R3".into(), vec![(vec![1, 1], 1), (vec![1, 2], 4)]),
            ("R4".into(), vec![(vec![1, 1], 1), (vec![1, 2], 5)]),
        ],
        vertex_weights: BTreeMap::new(),
    }
}
