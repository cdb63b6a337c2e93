//! Structural feasibility checks for logarithmic-delay ranked enumeration,
//! and generators for the adversarial instances behind them.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::fs;
use std::path::Path;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::decomp::{gyo_join_tree, AcyclicityFailure};
use crate::error::{Error, LoadError};
use crate::query::{parse_query, ConjunctiveQuery, VarId};
use crate::relation::{Database, RawRelation, RawValue, RawVertexWeights};

/// Alternating vertex/edge path: `vertices[i]` and `vertices[i + 1]` both lie
/// in atom `edges[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HyperPath {
    pub vertices: Vec<VarId>,
    pub edges: Vec<usize>,
}

impl HyperPath {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn render(&self, q: &ConjunctiveQuery) -> String {
        let mut s = q.var_name(self.vertices[0]).to_owned();
        for (i, &e) in self.edges.iter().enumerate() {
            s.push_str(&format!(" -{}- {}", q.atoms[e].relation, q.var_name(self.vertices[i + 1])));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict<W> {
    Feasible,
    Infeasible(W),
    /// The query is cyclic; the dichotomies only cover acyclic queries.
    NotApplicable,
}

impl<W> Verdict<W> {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Verdict::Feasible)
    }
}

/// BFS predecessor of a variable: (previous variable, atom between them).
type Step = Option<(VarId, usize)>;

/// Shortest alternating path lengths from `source`, plus BFS parents for
/// path recovery.
fn bfs(q: &ConjunctiveQuery, source: VarId) -> (Vec<Option<usize>>, Vec<Step>) {
    let n = q.num_vars();
    let mut dist = vec![None; n];
    let mut parent = vec![None; n];
    let mut edge_seen = vec![false; q.atoms.len()];
    dist[source] = Some(0);
    let mut queue = VecDeque::from([source]);
    while let Some(v) = queue.pop_front() {
        let dv = dist[v].expect("queued vertices have a distance");
        for (e, atom) in q.atoms.iter().enumerate() {
            if edge_seen[e] || !atom.vars.contains(&v) {
                continue;
            }
            edge_seen[e] = true;
            for &u in &atom.vars {
                if dist[u].is_none() {
                    dist[u] = Some(dv + 1);
                    parent[u] = Some((v, e));
                    queue.push_back(u);
                }
            }
        }
    }
    (dist, parent)
}

/// Longest shortest path inside each connected component, with the path
/// that realizes it. Components follow [`ConjunctiveQuery::component_atoms`].
pub fn diameter_paths(q: &ConjunctiveQuery) -> Vec<(usize, HyperPath)> {
    q.component_atoms()
        .iter()
        .map(|atoms| {
            let vars: BTreeSet<VarId> = atoms.iter().flat_map(|&a| q.atoms[a].vars.iter().copied()).collect();
            let mut best = (0, HyperPath { vertices: vec![*vars.iter().next().expect("atoms are not nullary")], edges: Vec::new() });
            for &s in &vars {
                let (dist, parent) = bfs(q, s);
                for &t in &vars {
                    let d = dist[t].expect("same component");
                    if d > best.0 {
                        let mut vertices = vec![t];
                        let mut edges = Vec::new();
                        let mut cur = t;
                        while let Some((p, e)) = parent[cur] {
                            vertices.push(p);
                            edges.push(e);
                            cur = p;
                        }
                        vertices.reverse();
                        edges.reverse();
                        best = (d, HyperPath { vertices, edges });
                    }
                }
            }
            best
        })
        .collect()
}

/// Diameter of each connected component.
///
/// A shortest walk never repeats a vertex or an edge, so breadth-first
/// distances coincide with the distinct-vertex, distinct-edge definition.
pub fn diameter(q: &ConjunctiveQuery) -> Vec<usize> {
    diameter_paths(q).into_iter().map(|(d, _)| d).collect()
}

/// First pair of atoms (in query order) where each has at least two
/// variables the other lacks.
pub fn private_variable_pair(q: &ConjunctiveQuery) -> Option<(usize, usize)> {
    let private = |a: usize, b: usize| q.atoms[a].vars.iter().filter(|v| !q.atoms[b].vars.contains(v)).count();
    (0..q.atoms.len())
        .flat_map(|a| (a + 1..q.atoms.len()).map(move |b| (a, b)))
        .find(|&(a, b)| private(a, b) >= 2 && private(b, a) >= 2)
}

/// Coordinate-decomposable rankings: feasible iff no two atoms each have two or
/// more private variables.
pub fn check_coordinate_dichotomy(q: &ConjunctiveQuery) -> Verdict<(usize, usize)> {
    if gyo_join_tree(q).is_err() {
        return Verdict::NotApplicable;
    }
    match private_variable_pair(q) {
        Some(pair) => Verdict::Infeasible(pair),
        None => Verdict::Feasible,
    }
}

/// Edge-decomposable rankings: feasible iff every component has diameter ≤ 3.
pub fn check_edge_dichotomy(q: &ConjunctiveQuery) -> Verdict<HyperPath> {
    if gyo_join_tree(q).is_err() {
        return Verdict::NotApplicable;
    }
    match diameter_paths(q).into_iter().find(|(d, _)| *d > 3) {
        Some((_, path)) => Verdict::Infeasible(path),
        None => Verdict::Feasible,
    }
}

#[derive(Debug, Clone)]
pub struct FeasibilityReport {
    pub query: String,
    pub acyclic: Result<(), AcyclicityFailure>,
    pub coordinate: Verdict<(usize, usize)>,
    pub edge: Verdict<HyperPath>,
    pub diameters: Vec<usize>,
    labels: Vec<String>,
    edge_path: Option<String>,
}

pub fn feasibility_report(q: &ConjunctiveQuery) -> FeasibilityReport {
    let edge = check_edge_dichotomy(q);
    FeasibilityReport {
        query: q.name.clone(),
        acyclic: gyo_join_tree(q).map(|_| ()),
        coordinate: check_coordinate_dichotomy(q),
        edge_path: match &edge {
            Verdict::Infeasible(p) => Some(p.render(q)),
            _ => None,
        },
        edge,
        diameters: diameter(q),
        labels: (0..q.atoms.len()).map(|a| q.atom_label(a)).collect(),
    }
}

impl fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.acyclic {
            Ok(()) => writeln!(f, "acyclic: yes")?,
            Err(e) => {
                let residue: Vec<&str> = e.residue.iter().map(|&a| self.labels[a].as_str()).collect();
                writeln!(f, "acyclic: no (residue {})", residue.join(", "))?
            }
        }
        let diam: Vec<String> = self.diameters.iter().map(usize::to_string).collect();
        writeln!(f, "diameter: {}", diam.join(","))?;
        match &self.coordinate {
            Verdict::Feasible => writeln!(f, "coordinate-decomposable rankings: feasible")?,
            Verdict::Infeasible((a, b)) => writeln!(
                f,
                "coordinate-decomposable rankings: infeasible ({} and {} each have two or more private variables)",
                self.labels[*a], self.labels[*b]
            )?,
            Verdict::NotApplicable => writeln!(f, "coordinate-decomposable rankings: not applicable (cyclic)")?,
        }
        match &self.edge {
            Verdict::Feasible => writeln!(f, "edge-decomposable rankings: feasible")?,
            Verdict::Infeasible(p) => writeln!(
                f,
                "edge-decomposable rankings: infeasible (path of length {}: {}); enumeration still runs, but no \
                 preprocessing/delay guarantee of this kind holds for such rankings",
                p.len(),
                self.edge_path.as_deref().unwrap_or("")
            )?,
            Verdict::NotApplicable => writeln!(f, "edge-decomposable rankings: not applicable (cyclic)")?,
        }
        Ok(())
    }
}

/// A generated database plus the query it targets.
#[derive(Debug, Clone)]
pub struct GeneratedInstance {
    pub query: String,
    pub relations: Vec<RawRelation>,
    pub vertex_weights: Option<RawVertexWeights>,
    /// Ranking the instance is meant to be run with.
    pub rank: String,
}

impl GeneratedInstance {
    pub fn query(&self) -> ConjunctiveQuery {
        parse_query(&self.query).expect("generated query parses").disjuncts.remove(0)
    }

    pub fn database(&self) -> Result<Database, LoadError> {
        let mut b = Database::builder();
        for r in &self.relations {
            b.add_relation(r.clone())?;
        }
        if let Some(w) = &self.vertex_weights {
            b.vertex_weights(w.clone());
        }
        b.build()
    }

    /// Writes `<Rel>.csv` files (weights in a `w` column), `query.txt` and a
    /// `job.conf` into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<(), Error> {
        let io = |path: &Path| {
            let path = path.to_owned();
            move |source| Error::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        for r in &self.relations {
            let weighted = r.rows.iter().any(|(_, w)| w.is_some());
            let mut s = r.schema.join(",");
            if weighted {
                s.push_str(",w");
            }
            s.push('\n');
            for (values, w) in &r.rows {
                let vals: Vec<String> = values.iter().map(RawValue::to_string).collect();
                s.push_str(&vals.join(","));
                if weighted {
                    s.push_str(&format!(",{}", w.unwrap_or(0)));
                }
                s.push('\n');
            }
            let path = dir.join(format!("{}.csv", r.name));
            fs::write(&path, s).map_err(io(&path))?;
        }
        if let Some(w) = &self.vertex_weights {
            let body: String = w.iter().map(|(c, w)| format!("{c},{w}\n")).collect();
            let path = dir.join("vertex_weights.txt");
            fs::write(&path, body).map_err(io(&path))?;
        }
        let path = dir.join("query.txt");
        fs::write(&path, format!("{}\n", self.query)).map_err(io(&path))?;
        let path = dir.join("job.conf");
        fs::write(&path, format!("query=query.txt\ndata=.\nrank={}\nweight_col=w\n", self.rank)).map_err(io(&path))?;
        Ok(())
    }
}

fn int_rows(rows: impl IntoIterator<Item = (i64, i64, Option<i64>)>) -> Vec<(Vec<RawValue>, Option<i64>)> {
    rows.into_iter().map(|(a, b, w)| (vec![RawValue::Int(a), RawValue::Int(b)], w)).collect()
}

fn binary(name: &str, cols: [&str; 2], rows: Vec<(Vec<RawValue>, Option<i64>)>) -> RawRelation {
    let mut r = RawRelation::new(name, &cols);
    r.rows = rows;
    r
}

/// Cartesian product whose outputs are pairwise incomparable coordinatewise:
/// `R = S = {(i, n-i+1)}` over the domain `1 < ... < n`.
pub fn gen_antichain_product(n: usize) -> GeneratedInstance {
    let n = n as i64;
    let rows = || int_rows((1..=n).map(|i| (i, n - i + 1, None)));
    GeneratedInstance {
        query: "Q(x1,y1,x2,y2) :- R(x1,y1), S(x2,y2)".into(),
        relations: vec![binary("R", ["x", "y"], rows()), binary("S", ["x", "y"], rows())],
        vertex_weights: None,
        rank: "lex(x1,y1,x2,y2)".into(),
    }
}

/// Weighted 4-path through a shared centre `z = 0`: `R1`/`R2` rows `(i, i)`
/// weigh `i`, `S1`/`S2` rows `(i, 0)` weigh `n - i + 1`.
pub fn gen_diameter4_instance(n: usize) -> GeneratedInstance {
    let n = n as i64;
    let up = || int_rows((1..=n).map(|i| (i, i, Some(i))));
    let down = || int_rows((1..=n).map(|i| (i, 0, Some(n - i + 1))));
    GeneratedInstance {
        query: "Q(x1,y1,z,y2,x2) :- R1(x1,y1), S1(y1,z), S2(y2,z), R2(x2,y2)".into(),
        relations: vec![
            binary("R1", ["x", "y"], up()),
            binary("S1", ["y", "z"], down()),
            binary("S2", ["y", "z"], down()),
            binary("R2", ["x", "y"], up()),
        ],
        vertex_weights: None,
        rank: "tuple_sum".into(),
    }
}

/// 3-path whose output is the `n × n` product of the end relations:
/// `R = {(i, 0)}`, `S = {(0, 0)}`, `T = {(0, j)}` with weights drawn from
/// `1..=1000`.
pub fn gen_path3_product(n: usize, seed: u64) -> GeneratedInstance {
    let mut rng = StdRng::seed_from_u64(seed);
    let n = n as i64;
    let r = int_rows((1..=n).map(|i| (i, 0, Some(rng.gen_range(1..=1000)))));
    let t = int_rows((1..=n).map(|j| (0, j, Some(rng.gen_range(1..=1000)))));
    GeneratedInstance {
        query: "Q(x,y,z,w) :- R(x,y), S(y,z), T(z,w)".into(),
        relations: vec![
            binary("R", ["x", "y"], r),
            binary("S", ["y", "z"], int_rows([(0, 0, Some(1))])),
            binary("T", ["z", "w"], t),
        ],
        vertex_weights: None,
        rank: "tuple_sum".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cq(s: &str) -> ConjunctiveQuery {
        parse_query(s).unwrap().disjuncts.remove(0)
    }

    #[test]
    fn diameters() {
        assert_eq!(diameter(&cq("Q(x,y,z,w) :- R(x,y), S(y,z), T(z,w)")), vec![3]);
        assert_eq!(diameter(&cq("Q(x,y,z,w,t) :- R(x,y), S(y,z), T(z,w), U(w,t)")), vec![4]);
        assert_eq!(diameter(&cq("Q(x,y) :- R(x,y)")), vec![1]);
        assert_eq!(diameter(&cq("Q(x) :- R(x)")), vec![0]);
        assert_eq!(diameter(&cq("Q(x,y,p,r) :- R(x,y), S(p,r)")), vec![1, 1]);
    }

    #[test]
    fn coordinate_verdicts() {
        assert!(check_coordinate_dichotomy(&cq("Q(x,y,z) :- R(x,y), S(y,z)")).is_feasible());
        assert_eq!(check_coordinate_dichotomy(&cq("Q(x1,y1,x2,y2) :- R(x1,y1), S(x2,y2)")), Verdict::Infeasible((0, 1)));
        assert!(check_coordinate_dichotomy(&cq("Q(x,y,z,w) :- R(x,y,z), S(z,w)")).is_feasible());
        assert_eq!(check_coordinate_dichotomy(&cq("Q(x,y,z) :- R(x,y), S(y,z), T(z,x)")), Verdict::NotApplicable);
    }

    #[test]
    fn edge_verdicts() {
        assert!(check_edge_dichotomy(&cq("Q(x,y,z,w) :- R(x,y), S(y,z), T(z,w)")).is_feasible());
        let q = cq("Q(x,y,z,w,t) :- R(x,y), S(y,z), T(z,w), U(w,t)");
        match check_edge_dichotomy(&q) {
            Verdict::Infeasible(p) => {
                assert_eq!(p.len(), 4);
                assert_eq!(p.render(&q), "x -R- y -S- z -T- w -U- t");
            }
            other => panic!("{other:?}"),
        }
        assert!(check_edge_dichotomy(&cq("Q(x,y,p,r) :- R(x,y), S(p,r)")).is_feasible());
    }

    #[test]
    fn generators_match_construction() {
        let g = gen_antichain_product(3);
        let rows: Vec<String> = g.relations[0].rows.iter().map(|(v, _)| format!("{},{}", v[0], v[1])).collect();
        assert_eq!(rows, vec!["1,3", "2,2", "3,1"]);
        assert_eq!(gen_antichain_product(1).relations[1].rows.len(), 1);
        let g = gen_diameter4_instance(2);
        let w = |r: usize| g.relations[r].rows.iter().map(|(_, w)| w.unwrap()).collect::<Vec<_>>();
        assert_eq!(w(0), vec![1, 2]);
        assert_eq!(w(1), vec![2, 1]);
        assert_eq!(gen_path3_product(5, 7).database().unwrap().relation("R").unwrap().len(), 5);
    }

    #[test]
    fn report_mentions_witness() {
        let r = feasibility_report(&cq("Q(x,y,z,w,t) :- R(x,y), S(y,z), T(z,w), U(w,t)"));
        let text = r.to_string();
        assert!(text.contains("edge-decomposable rankings: infeasible"), "{text}");
        assert!(text.contains("coordinate-decomposable rankings: infeasible (R(x,y) and T(z,w)"), "{text}");
    }
}
