//! One query job: load the data, parse the query and ranking, choose a
//! decomposition per disjunct, and open a cursor. Shared by the command-line
//! tool and the C interface.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::analysis::feasibility_report;
use crate::decomp::{augment_for_bounded, gyo_join_tree, load_decomposition, TreeDecomposition};
use crate::engine::{prepare, OutputTuple, PrepareStats, PullStats, RankedCursor};
use crate::error::{Error, Result};
use crate::query::{parse_query, ConjunctiveQuery, UnionQuery};
use crate::ranking::RankingFunction;
use crate::relation::Database;
use crate::union::UnionCursor;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct JobSpec {
    pub query_text: String,
    pub data_dir: PathBuf,
    pub rank: String,
    /// One decomposition file per disjunct; empty means join trees.
    pub decomps: Vec<PathBuf>,
    pub weight_cols: Vec<String>,
    pub vertex_weights: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlanSource {
    JoinTree,
    /// A join tree with the bounded ranking's variables added to every bag.
    AugmentedJoinTree,
    File(PathBuf),
}

#[derive(Debug)]
pub struct Job {
    pub query: UnionQuery,
    pub db: Database,
    pub rank: RankingFunction,
    pub plans: Vec<(TreeDecomposition, PlanSource)>,
}

/// Join tree per disjunct unless a file is given. Bounded rankings get their
/// variables added to generated trees; supplied files are used as written.
pub fn plan_disjuncts(
    uq: &UnionQuery,
    rf: &RankingFunction,
    decomps: &[PathBuf],
) -> Result<Vec<(TreeDecomposition, PlanSource)>> {
    if !decomps.is_empty() && decomps.len() != uq.disjuncts.len() {
        return Err(Error::Usage(format!(
            "{} decomposition file(s) given for {} disjunct(s)",
            decomps.len(),
            uq.disjuncts.len()
        )));
    }
    uq.disjuncts
        .iter()
        .enumerate()
        .map(|(i, q)| match decomps.get(i) {
            Some(path) => Ok((load_decomposition(path, q)?, PlanSource::File(path.clone()))),
            None => {
                let tree = gyo_join_tree(q).map_err(|f| Error::Cyclic {
                    residue: f.residue.iter().map(|&a| q.atom_label(a)).collect::<Vec<_>>().join(", "),
                })?;
                match rf.bound_vars() {
                    Some(vars) if !vars.is_empty() => {
                        Ok((augment_for_bounded(&tree, q, vars)?, PlanSource::AugmentedJoinTree))
                    }
                    _ => Ok((tree, PlanSource::JoinTree)),
                }
            }
        })
        .collect()
}

impl Job {
    pub fn load(spec: &JobSpec) -> Result<Job> {
        let query = parse_query(&spec.query_text)?;
        let db = Database::load_dir(&spec.data_dir, &spec.weight_cols, spec.vertex_weights.as_deref())?;
        for q in &query.disjuncts {
            q.validate_against(&db)?;
        }
        Job::from_parts(query, db, &spec.rank, &spec.decomps)
    }

    pub fn from_parts(query: UnionQuery, db: Database, rank: &str, decomps: &[PathBuf]) -> Result<Job> {
        let rank = RankingFunction::parse(rank, query.head())?;
        let plans = plan_disjuncts(&query, &rank, decomps)?;
        Ok(Job { query, db, rank, plans })
    }

    /// Prepares every disjunct and returns a cursor over the union.
    pub fn cursor(&self) -> Result<JobCursor> {
        let mut cursors = Vec::with_capacity(self.plans.len());
        for (q, (d, _)) in self.query.disjuncts.iter().zip(&self.plans) {
            let prepared =
                prepare(&self.db, q, d, &self.rank).map_err(|e| e.context(format!("disjunct `{}`", render_cq(q))))?;
            cursors.push(prepared.into_cursor());
        }
        Ok(if cursors.len() == 1 {
            JobCursor::Single(Box::new(cursors.pop().expect("one cursor")))
        } else {
            JobCursor::Union(Box::new(UnionCursor::new(cursors)))
        })
    }

    pub fn oracle(&self, cap: usize) -> Result<Vec<OutputTuple>> {
        crate::oracle::brute_force_ranked(&self.db, &self.query, &self.rank, cap)
    }

    pub fn record(&self, t: &OutputTuple) -> String {
        t.render(self.db.dictionary())
    }

    /// Human-readable plan: the tree, widths, ranking compatibility and
    /// structural feasibility, per disjunct.
    pub fn plan_report(&self) -> String {
        let head = self.query.head();
        let mut s = String::new();
        for (i, (q, (d, source))) in self.query.disjuncts.iter().zip(&self.plans).enumerate() {
            if self.query.disjuncts.len() > 1 {
                let _ = writeln!(s, "== disjunct {} ==", i + 1);
            }
            let _ = writeln!(s, "query: {}", render_cq(q));
            let source = match source {
                PlanSource::JoinTree => "join tree".to_owned(),
                PlanSource::AugmentedJoinTree => "join tree with bounded variables added".to_owned(),
                PlanSource::File(p) => p.display().to_string(),
            };
            let _ = writeln!(s, "decomposition: {source}");
            render_tree(&mut s, q, d, d.root(), 1);
            let _ = writeln!(s, "width: {}", d.width());
            let _ = writeln!(s, "depth: {}", d.depth());
            let compat = self.rank.check_compatible(d);
            let verdict = if compat.is_compatible() {
                "compatible".to_owned()
            } else {
                let nodes: Vec<String> = compat.failing_nodes.iter().map(u32::to_string).collect();
                format!("incompatible at node(s) {}", nodes.join(","))
            };
            let _ = writeln!(s, "ranking: {} ({verdict})", self.rank.render(head));
            s.push_str(&feasibility_report(q).to_string());
        }
        s
    }
}

fn render_cq(q: &ConjunctiveQuery) -> String {
    let atoms: Vec<String> = (0..q.atoms.len()).map(|a| q.atom_label(a)).collect();
    format!("{}({}) :- {}", q.name, q.head.join(","), atoms.join(", "))
}

fn render_tree(s: &mut String, q: &ConjunctiveQuery, d: &TreeDecomposition, t: usize, depth: usize) {
    let n = d.node(t);
    let names = |vs: &[usize]| vs.iter().map(|&v| q.var_name(v)).collect::<Vec<_>>().join(",");
    let cover: Vec<String> = n.cover.iter().map(|&a| q.atom_label(a)).collect();
    let _ = writeln!(
        s,
        "{}node {}: bag {{{}}} key {{{}}} val {{{}}} cover [{}]",
        "  ".repeat(depth),
        n.id,
        names(&n.bag),
        names(&n.key_vars),
        names(&n.val_vars),
        cover.join(", ")
    );
    for &c in &n.children {
        render_tree(s, q, d, c, depth + 1);
    }
}

/// Either a single disjunct's cursor or the union merge.
#[derive(Debug)]
pub enum JobCursor {
    Single(Box<RankedCursor>),
    Union(Box<UnionCursor>),
}

impl JobCursor {
    pub fn last_pull(&self) -> Option<PullStats> {
        match self {
            JobCursor::Single(c) => Some(c.last_pull()),
            JobCursor::Union(_) => None,
        }
    }

    pub fn totals(&self) -> PullStats {
        match self {
            JobCursor::Single(c) => c.totals(),
            JobCursor::Union(u) => u.totals(),
        }
    }

    pub fn prepare_stats(&self) -> Vec<&PrepareStats> {
        match self {
            JobCursor::Single(c) => vec![c.prepared().stats()],
            JobCursor::Union(u) => u.cursors().iter().map(|c| c.prepared().stats()).collect(),
        }
    }

    pub fn total_cells(&self) -> usize {
        match self {
            JobCursor::Single(c) => c.prepared().total_cells(),
            JobCursor::Union(u) => u.cursors().iter().map(|c| c.prepared().total_cells()).sum(),
        }
    }
}

impl Iterator for JobCursor {
    type Item = OutputTuple;

    fn next(&mut self) -> Option<OutputTuple> {
        match self {
            JobCursor::Single(c) => c.next(),
            JobCursor::Union(u) => u.next(),
        }
    }
}

/// Reads a query file, attaching the path to any error.
pub fn read_query_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_owned(), source })
}
