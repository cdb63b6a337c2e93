//! Ranked enumeration over a tree decomposition.
//!
//! [`prepare`] materializes and fully reduces the bags, then builds, bottom
//! up, one priority queue of cells per (node, key valuation). A cell stands
//! for one valuation of its node's subtree: a bag row plus a handle to a cell
//! in each child. [`RankedCursor`] pops the root queue and replaces each
//! consumed cell by its successors, chaining every non-root cell to the cell
//! that followed it so later visits reuse the chain instead of recomputing.

mod preprocess;

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::time::{Duration, Instant};

pub use preprocess::{full_reducer, materialize_bags};

use crate::decomp::TreeDecomposition;
use crate::error::{Error, RankingError};
use crate::heap::MinHeap;
use crate::query::{ConjunctiveQuery, VarId};
use crate::ranking::{RankingFunction, Score, ScorePlan, ScoreValue};
use crate::relation::{ConstantId, Database, Dictionary, Relation};

type Handle = u32;

#[derive(Debug, Clone)]
struct Cell {
    row: u32,
    children: Box<[Handle]>,
    next: Option<Handle>,
    /// Set once the cell has been popped; `next` is final from then on.
    consumed: bool,
    score: ScoreValue,
}

#[derive(Debug, Default)]
struct NodeQueue {
    heap: MinHeap<Handle>,
    seen: HashSet<(u32, Box<[Handle]>)>,
    /// Top right after preprocessing; the start of this key's chain.
    head: Option<Handle>,
}

/// Cell storage for one node. Append-only; after creation a cell changes
/// once, when it is popped and gets its `next` and `consumed` fields.
#[derive(Debug)]
struct NodeStore {
    bag: Relation,
    row_score: Vec<ScoreValue>,
    cells: Vec<Cell>,
}

#[derive(Debug, Default)]
struct NodeQueues {
    by_key: HashMap<Box<[ConstantId]>, u32>,
    queues: Vec<NodeQueue>,
    row_queue: Vec<u32>,
}

#[derive(Debug)]
struct NodeLayout {
    id: u32,
    bag: Vec<VarId>,
    children: Vec<usize>,
    subtree: Vec<VarId>,
    key_pos: Vec<usize>,
    /// Positions in this bag of each child's key variables.
    child_key_pos: Vec<Vec<usize>>,
}

/// Operation counts, per pull or accumulated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PullStats {
    pub pops: u64,
    pub inserts: u64,
    pub cells_created: u64,
    pub comparisons: u64,
    /// Visits answered by an existing `next` handle.
    pub memo_hits: u64,
}

impl PullStats {
    fn add(&mut self, o: &PullStats) {
        self.pops += o.pops;
        self.inserts += o.inserts;
        self.cells_created += o.cells_created;
        self.comparisons += o.comparisons;
        self.memo_hits += o.memo_hits;
    }

    fn max_with(&mut self, o: &PullStats) {
        self.pops = self.pops.max(o.pops);
        self.inserts = self.inserts.max(o.inserts);
        self.cells_created = self.cells_created.max(o.cells_created);
        self.comparisons = self.comparisons.max(o.comparisons);
        self.memo_hits = self.memo_hits.max(o.memo_hits);
    }
}

/// Counts gathered while preparing.
#[derive(Debug, Clone, Default)]
pub struct PrepareStats {
    /// Bag sizes before the full reducer, by node index.
    pub materialized: Vec<usize>,
    /// Bag sizes after it.
    pub reduced: Vec<usize>,
    pub inserts: u64,
    pub comparisons: u64,
    pub elapsed: Duration,
}

/// One result: the valuation in head-variable order and its score.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OutputTuple {
    pub values: Vec<ConstantId>,
    pub score: ScoreValue,
}

impl OutputTuple {
    pub fn rank_key(&self) -> Score {
        Score { primary: self.score.clone(), tie_key: self.values.clone() }
    }

    /// `score<TAB>v1,...,vn`
    pub fn render(&self, dict: &Dictionary) -> String {
        let values: Vec<String> = self.values.iter().map(|&c| dict.value(c).to_string()).collect();
        format!("{}\t{}", self.score.render(dict), values.join(","))
    }
}

impl Ord for OutputTuple {
    fn cmp(&self, other: &Self) -> Ordering {
        self.score.cmp(&other.score).then_with(|| self.values.cmp(&other.values))
    }
}

impl PartialOrd for OutputTuple {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Reduced bags plus initialized queues, ready for one cursor.
#[derive(Debug)]
pub struct PreparedQuery {
    num_vars: usize,
    root: usize,
    layout: Vec<NodeLayout>,
    stores: Vec<NodeStore>,
    queues: Vec<NodeQueues>,
    plan_rf: RankingFunction,
    stats: PrepareStats,
}

/// Builds the bags, runs the full reducer and initializes all queues.
pub fn prepare(
    db: &Database,
    q: &ConjunctiveQuery,
    d: &TreeDecomposition,
    rf: &RankingFunction,
) -> Result<PreparedQuery, Error> {
    let started = Instant::now();
    q.validate_against(db)?;
    d.validate(q)?;
    let compat = rf.check_compatible(d);
    if !compat.is_compatible() {
        return Err(RankingError::Incompatible { nodes: compat.failing_nodes }.into());
    }
    rf.check_weights(q, db)?;
    let bags = materialize_bags(db, q, d)?;
    let materialized = bags.iter().map(Relation::len).collect();
    let bags = full_reducer(bags, q, d);
    let plan = ScorePlan::new(rf, q, d, db);

    let pos_in = |bag: &[VarId], vars: &[VarId]| -> Vec<usize> {
        vars.iter().map(|v| bag.iter().position(|b| b == v).expect("key variable in bag")).collect()
    };
    let layout: Vec<NodeLayout> = d
        .nodes()
        .iter()
        .map(|n| NodeLayout {
            id: n.id,
            bag: n.bag.clone(),
            children: n.children.clone(),
            subtree: n.subtree_vars.clone(),
            key_pos: pos_in(&n.bag, &n.key_vars),
            child_key_pos: n.children.iter().map(|&c| pos_in(&n.bag, &d.node(c).key_vars)).collect(),
        })
        .collect();

    let mut stores = Vec::with_capacity(d.len());
    for (t, bag) in bags.into_iter().enumerate() {
        let row_score = bag
            .tuples()
            .iter()
            .map(|tu| plan.bag_score(t, &tu.values))
            .collect::<Result<Vec<_>, _>>()?;
        stores.push(NodeStore { bag, row_score, cells: Vec::new() });
    }
    let mut prepared = PreparedQuery {
        num_vars: q.num_vars(),
        root: d.root(),
        layout,
        queues: (0..d.len()).map(|_| NodeQueues::default()).collect(),
        stores,
        plan_rf: rf.clone(),
        stats: PrepareStats { materialized, ..PrepareStats::default() },
    };
    prepared.initialize_queues(rf)?;
    prepared.stats.reduced = prepared.stores.iter().map(|s| s.bag.len()).collect();
    prepared.stats.elapsed = started.elapsed();
    Ok(prepared)
}

/// Score order, then the subtree valuation in variable order.
fn compare_cells(layout: &[NodeLayout], stores: &[NodeStore], num_vars: usize, t: usize, a: Handle, b: Handle) -> Ordering {
    let (ca, cb) = (&stores[t].cells[a as usize], &stores[t].cells[b as usize]);
    ca.score.cmp(&cb.score).then_with(|| {
        if a == b {
            return Ordering::Equal;
        }
        let mut va = vec![ConstantId(0); num_vars];
        let mut vb = vec![ConstantId(0); num_vars];
        fill_valuation(layout, stores, t, a, &mut va);
        fill_valuation(layout, stores, t, b, &mut vb);
        layout[t].subtree.iter().map(|&v| va[v].cmp(&vb[v])).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
    })
}

fn fill_valuation(layout: &[NodeLayout], stores: &[NodeStore], t: usize, h: Handle, out: &mut [ConstantId]) {
    let cell = &stores[t].cells[h as usize];
    let row = &stores[t].bag.tuples()[cell.row as usize].values;
    for (i, &v) in layout[t].bag.iter().enumerate() {
        out[v] = row[i];
    }
    for (i, &c) in layout[t].children.iter().enumerate() {
        fill_valuation(layout, stores, c, cell.children[i], out);
    }
}

impl PreparedQuery {
    fn initialize_queues(&mut self, rf: &RankingFunction) -> Result<(), Error> {
        let order = post_order(&self.layout, self.root);
        for t in order {
            let nrows = self.stores[t].bag.len();
            let mut row_queue = Vec::with_capacity(nrows);
            for row in 0..nrows {
                let values = self.stores[t].bag.tuples()[row].values.clone();
                let mut children = Vec::with_capacity(self.layout[t].children.len());
                let mut score = self.stores[t].row_score[row].clone();
                for (i, &c) in self.layout[t].children.iter().enumerate() {
                    let key: Box<[ConstantId]> = self.layout[t].child_key_pos[i].iter().map(|&p| values[p]).collect();
                    let top = self.queues[c]
                        .by_key
                        .get(&key)
                        .and_then(|&qi| self.queues[c].queues[qi as usize].heap.peek().copied())
                        .expect("full reducer leaves a matching child cell");
                    score = rf.combine(&score, &self.stores[c].cells[top as usize].score)?;
                    children.push(top);
                }
                let key: Box<[ConstantId]> = self.layout[t].key_pos.iter().map(|&p| values[p]).collect();
                let nq = &mut self.queues[t];
                let qi = *nq.by_key.entry(key).or_insert_with(|| {
                    nq.queues.push(NodeQueue::default());
                    (nq.queues.len() - 1) as u32
                });
                row_queue.push(qi);
                let handle = self.stores[t].cells.len() as Handle;
                let children: Box<[Handle]> = children.into();
                self.stores[t].cells.push(Cell { row: row as u32, children: children.clone(), next: None, consumed: false, score });
                let queue = &mut self.queues[t].queues[qi as usize];
                queue.seen.insert((row as u32, children));
                let (layout, stores, n) = (&self.layout, &self.stores, self.num_vars);
                let comparisons = &mut self.stats.comparisons;
                queue.heap.push(handle, &mut |a: &Handle, b: &Handle| {
                    *comparisons += 1;
                    compare_cells(layout, stores, n, t, *a, *b)
                });
                self.stats.inserts += 1;
            }
            self.queues[t].row_queue = row_queue;
            for queue in &mut self.queues[t].queues {
                queue.head = queue.heap.peek().copied();
            }
        }
        Ok(())
    }

    pub fn stats(&self) -> &PrepareStats {
        &self.stats
    }

    pub fn ranking(&self) -> &RankingFunction {
        &self.plan_rf
    }

    /// Index of the root node.
    pub fn root(&self) -> usize {
        self.root
    }

    pub fn num_nodes(&self) -> usize {
        self.layout.len()
    }

    /// Σ over nodes of the child count, plus one.
    pub fn insert_bound(&self) -> u64 {
        self.layout.iter().map(|l| l.children.len() as u64).sum::<u64>() + 1
    }

    /// Reduced bag of the node at index `t`, columns in variable-id order.
    pub fn bag(&self, t: usize) -> &Relation {
        &self.stores[t].bag
    }

    pub fn node_index(&self, id: u32) -> Option<usize> {
        self.layout.iter().position(|l| l.id == id)
    }

    pub fn total_cells(&self) -> usize {
        self.stores.iter().map(|s| s.cells.len()).sum()
    }

    /// Key valuations that have a queue at node `t`.
    pub fn queue_keys(&self, t: usize) -> Vec<Vec<ConstantId>> {
        let mut keys: Vec<Vec<ConstantId>> = self.queues[t].by_key.keys().map(|k| k.to_vec()).collect();
        keys.sort();
        keys
    }

    fn queue(&self, t: usize, key: &[ConstantId]) -> Option<&NodeQueue> {
        self.queues[t].by_key.get(key).map(|&qi| &self.queues[t].queues[qi as usize])
    }

    /// Partial scores currently in the queue of node `t` under `key`, sorted.
    pub fn queue_scores(&self, t: usize, key: &[ConstantId]) -> Option<Vec<ScoreValue>> {
        self.queue(t, key).map(|q| {
            let mut s: Vec<ScoreValue> = q.heap.iter().map(|&h| self.stores[t].cells[h as usize].score.clone()).collect();
            s.sort();
            s
        })
    }

    pub fn top_score(&self, t: usize, key: &[ConstantId]) -> Option<ScoreValue> {
        let q = self.queue(t, key)?;
        q.heap.peek().map(|&h| self.stores[t].cells[h as usize].score.clone())
    }

    /// Scores along the `next` chain from the queue's initial top.
    pub fn chain_scores(&self, t: usize, key: &[ConstantId]) -> Vec<ScoreValue> {
        let mut out = Vec::new();
        let mut cur = self.queue(t, key).and_then(|q| q.head);
        while let Some(h) = cur {
            let cell = &self.stores[t].cells[h as usize];
            out.push(cell.score.clone());
            cur = cell.next;
        }
        out
    }

    pub fn into_cursor(self) -> RankedCursor {
        RankedCursor::new(self)
    }
}

fn post_order(layout: &[NodeLayout], root: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(layout.len());
    let mut stack = vec![(root, false)];
    while let Some((i, expanded)) = stack.pop() {
        if expanded {
            out.push(i);
        } else {
            stack.push((i, true));
            stack.extend(layout[i].children.iter().rev().map(|&c| (c, false)));
        }
    }
    out
}

/// Pull-based cursor emitting results in (score, values) order.
#[derive(Debug)]
pub struct RankedCursor {
    prepared: PreparedQuery,
    emitted: u64,
    current: PullStats,
    last: PullStats,
    max: PullStats,
    total: PullStats,
}

impl RankedCursor {
    pub fn new(prepared: PreparedQuery) -> Self {
        RankedCursor {
            prepared,
            emitted: 0,
            current: PullStats::default(),
            last: PullStats::default(),
            max: PullStats::default(),
            total: PullStats::default(),
        }
    }

    pub fn prepared(&self) -> &PreparedQuery {
        &self.prepared
    }

    pub fn emitted(&self) -> u64 {
        self.emitted
    }

    /// Counts of the most recent pull.
    pub fn last_pull(&self) -> PullStats {
        self.last
    }

    /// Per-field maximum over all pulls so far.
    pub fn max_pull(&self) -> PullStats {
        self.max
    }

    pub fn totals(&self) -> PullStats {
        self.total
    }

    /// Up to `k` further results.
    pub fn drain_topk(&mut self, k: usize) -> Vec<OutputTuple> {
        self.by_ref().take(k).collect()
    }

    fn pull(&mut self) -> Option<OutputTuple> {
        let root = self.prepared.root;
        let top = {
            let nq = &self.prepared.queues[root];
            let q = nq.by_key.get(&[][..]).map(|&qi| &nq.queues[qi as usize])?;
            *q.heap.peek()?
        };
        self.current = PullStats::default();
        let mut values = vec![ConstantId(0); self.prepared.num_vars];
        fill_valuation(&self.prepared.layout, &self.prepared.stores, root, top, &mut values);
        let score = self.prepared.stores[root].cells[top as usize].score.clone();
        self.topdown(root, top);
        self.emitted += 1;
        self.last = self.current;
        self.max.max_with(&self.current);
        self.total.add(&self.current);
        Some(OutputTuple { values, score })
    }

    fn topdown(&mut self, t: usize, h: Handle) -> Option<Handle> {
        let is_root = t == self.prepared.root;
        if !is_root {
            let cell = &self.prepared.stores[t].cells[h as usize];
            if cell.consumed {
                self.current.memo_hits += 1;
                return cell.next;
            }
        }
        let (row, children) = {
            let c = &self.prepared.stores[t].cells[h as usize];
            (c.row, c.children.clone())
        };
        let qi = self.prepared.queues[t].row_queue[row as usize] as usize;
        let popped = self.heap_op(t, qi, None);
        assert_eq!(popped, Some(h), "consumed cell must be the top of its queue");
        self.current.pops += 1;

        let child_nodes = self.prepared.layout[t].children.clone();
        for (i, &c) in child_nodes.iter().enumerate() {
            let Some(succ) = self.topdown(c, children[i]) else { continue };
            let mut next_children = children.clone();
            next_children[i] = succ;
            if !self.prepared.queues[t].queues[qi].seen.insert((row, next_children.clone())) {
                continue;
            }
            let p = &self.prepared;
            let mut score = p.stores[t].row_score[row as usize].clone();
            for (j, &cj) in child_nodes.iter().enumerate() {
                score = p
                    .plan_rf
                    .combine(&score, &p.stores[cj].cells[next_children[j] as usize].score)
                    .expect("scores were bounds-checked while preparing");
            }
            let handle = self.prepared.stores[t].cells.len() as Handle;
            self.prepared.stores[t].cells.push(Cell { row, children: next_children, next: None, consumed: false, score });
            self.current.cells_created += 1;
            self.heap_op(t, qi, Some(handle));
            self.current.inserts += 1;
        }
        if is_root {
            return None;
        }
        let next = self.prepared.queues[t].queues[qi].heap.peek().copied();
        let cell = &mut self.prepared.stores[t].cells[h as usize];
        cell.next = next;
        cell.consumed = true;
        next
    }

    /// Pushes `insert` if given, otherwise pops, counting comparisons.
    fn heap_op(&mut self, t: usize, qi: usize, insert: Option<Handle>) -> Option<Handle> {
        let p = &mut self.prepared;
        let (layout, stores, n) = (&p.layout, &p.stores, p.num_vars);
        let comparisons = &mut self.current.comparisons;
        let mut cmp = |a: &Handle, b: &Handle| {
            *comparisons += 1;
            compare_cells(layout, stores, n, t, *a, *b)
        };
        let heap = &mut p.queues[t].queues[qi].heap;
        match insert {
            Some(h) => {
                heap.push(h, &mut cmp);
                None
            }
            None => heap.pop(&mut cmp),
        }
    }
}

impl Iterator for RankedCursor {
    type Item = OutputTuple;

    fn next(&mut self) -> Option<OutputTuple> {
        self.pull()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::{gyo_join_tree, parse_decomposition};
    use crate::query::parse_query;
    use crate::relation::RawRelation;

    pub(crate) fn running_example() -> (Database, ConjunctiveQuery) {
        let mut b = Database::builder();
        let rel = |name: &str, cols: [&str; 2], rows: &[(i64, i64, i64)]| {
            let mut r = RawRelation::new(name, &cols);
            for &(a, c, w) in rows {
                r.push(vec![a.into(), c.into()], Some(w));
            }
            r
        };
        b.add_relation(rel("R1", ["x", "y"], &[(1, 1, 1), (2, 1, 2)])).unwrap();
        b.add_relation(rel("R2", ["y", "z"], &[(1, 1, 1), (3, 1, 1)])).unwrap();
        b.add_relation(rel("R3", ["z", "w"], &[(1, 1, 1), (1, 2, 4)])).unwrap();
        b.add_relation(rel("R4", ["z", "u"], &[(1, 1, 1), (1, 2, 5)])).unwrap();
        let q = parse_query("Q(x,y,z,w,u) :- R1(x,y), R2(y,z), R3(z,w), R4(z,u)").unwrap().disjuncts.remove(0);
        (b.build().unwrap(), q)
    }

    fn scalars(v: &[ScoreValue]) -> Vec<i64> {
        v.iter()
            .map(|s| match s {
                ScoreValue::Scalar(x) => *x,
                other => panic!("not a scalar: {other:?}"),
            })
            .collect()
    }

    #[test]
    fn running_example_queues_and_output() {
        let (db, q) = running_example();
        let d = gyo_join_tree(&q).unwrap();
        let p = prepare(&db, &q, &d, &RankingFunction::Tuple(crate::MonoidOp::Sum)).unwrap();
        let one = [db.dictionary().lookup("1").unwrap()];
        let (b2, b3, b4) = (p.node_index(1).unwrap(), p.node_index(2).unwrap(), p.node_index(3).unwrap());
        assert_eq!(scalars(&p.queue_scores(b3, &one).unwrap()), vec![1, 4]);
        assert_eq!(scalars(&p.queue_scores(b4, &one).unwrap()), vec![1, 5]);
        assert_eq!(scalars(&[p.top_score(b2, &one).unwrap()]), vec![3]);
        assert_eq!(scalars(&p.queue_scores(p.root, &[]).unwrap()), vec![4, 5]);
        assert_eq!(p.bag(b2).len(), 1);

        let mut cur = p.into_cursor();
        let first = cur.next().unwrap();
        assert_eq!(first.render(db.dictionary()), "4\t1,1,1,1,1");
        assert_eq!(scalars(&cur.prepared().queue_scores(b2, &one).unwrap()), vec![6, 7]);
        let rest: Vec<ScoreValue> = cur.by_ref().map(|o| o.score).collect();
        assert_eq!(scalars(&rest), vec![5, 7, 8, 8, 9, 11, 12]);
        assert_eq!(scalars(&cur.prepared().chain_scores(b2, &one)), vec![3, 6, 7, 10]);
        assert!(cur.max_pull().pops <= 4);
    }

    #[test]
    fn topk_edges() {
        let (db, q) = running_example();
        let d = gyo_join_tree(&q).unwrap();
        let rf = RankingFunction::Tuple(crate::MonoidOp::Sum);
        let mut c = prepare(&db, &q, &d, &rf).unwrap().into_cursor();
        assert!(c.drain_topk(0).is_empty());
        assert_eq!(c.drain_topk(1).len(), 1);
        assert_eq!(c.drain_topk(100).len(), 7);
        assert!(c.next().is_none());
    }

    #[test]
    fn reducer_drops_dangling_tuple() {
        let (db, q) = running_example();
        let d = gyo_join_tree(&q).unwrap();
        let bags = materialize_bags(&db, &q, &d).unwrap();
        let reduced = full_reducer(bags.clone(), &q, &d);
        let b2 = d.index_of(1).unwrap();
        let raw = |r: &Relation| -> Vec<String> {
            r.tuples()
                .iter()
                .map(|t| t.values.iter().map(|&c| db.dictionary().value(c).to_string()).collect::<Vec<_>>().join(","))
                .collect()
        };
        assert_eq!(raw(&bags[b2]), vec!["1,1", "3,1"]);
        assert_eq!(raw(&reduced[b2]), vec!["1,1"]);
        for t in 0..d.len() {
            if t != b2 {
                assert_eq!(reduced[t], bags[t]);
            }
        }
        assert_eq!(full_reducer(reduced.clone(), &q, &d), reduced);
    }

    #[test]
    fn triangle_bag_is_filtered_by_third_atom() {
        let mut b = Database::builder();
        let mut r = RawRelation::new("R", &["a", "b"]);
        r.push(vec![1.into(), 2.into()], None).push(vec![1.into(), 3.into()], None);
        let mut s = RawRelation::new("S", &["a", "b"]);
        s.push(vec![2.into(), 5.into()], None).push(vec![3.into(), 6.into()], None);
        let mut t = RawRelation::new("T", &["a", "b"]);
        t.push(vec![5.into(), 1.into()], None);
        b.add_relation(r).unwrap();
        b.add_relation(s).unwrap();
        b.add_relation(t).unwrap();
        let db = b.build().unwrap();
        let q = parse_query("Q(x,y,z) :- R(x,y), S(y,z), T(z,x)").unwrap().disjuncts.remove(0);
        let d = parse_decomposition("node 0: {x,y,z} cover R,S\n", &q).unwrap();
        let bags = materialize_bags(&db, &q, &d).unwrap();
        assert_eq!(bags[0].len(), 1);
        let out: Vec<_> = prepare(&db, &q, &d, &RankingFunction::Lex(vec![0, 1, 2])).unwrap().into_cursor().collect();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].render(db.dictionary()), "1,2,5\t1,2,5");
    }

    #[test]
    fn empty_relation_yields_nothing() {
        let (db, _) = running_example();
        let mut b = Database::builder();
        for r in db.relations() {
            let mut raw = RawRelation::new(r.name(), &r.schema().iter().map(String::as_str).collect::<Vec<_>>());
            if r.name() != "R3" {
                for t in r.tuples() {
                    raw.push(t.values.iter().map(|&c| db.dictionary().value(c).clone()).collect(), t.weight);
                }
            }
            b.add_relation(raw).unwrap();
        }
        let db = b.build().unwrap();
        let q = parse_query("Q(x,y,z,w,u) :- R1(x,y), R2(y,z), R3(z,w), R4(z,u)").unwrap().disjuncts.remove(0);
        let d = gyo_join_tree(&q).unwrap();
        let p = prepare(&db, &q, &d, &RankingFunction::Tuple(crate::MonoidOp::Sum)).unwrap();
        assert!(p.stats().reduced.iter().all(|&n| n == 0));
        assert_eq!(p.into_cursor().count(), 0);
    }

    #[test]
    fn bounded_needs_variables_in_every_bag() {
        let (db, q) = running_example();
        let d = gyo_join_tree(&q).unwrap();
        let rf = RankingFunction::parse("bounded(tuple_sum; w)", &q.head).unwrap();
        let err = prepare(&db, &q, &d, &rf).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }
}
