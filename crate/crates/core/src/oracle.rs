//! Reference evaluation: join naively, score each result from the ranking's
//! definition, sort. Shares nothing with the engine except score values.

use std::collections::{BTreeMap, HashMap};

use crate::engine::OutputTuple;
use crate::error::{Error, OracleError};
use crate::query::{ConjunctiveQuery, UnionQuery};
use crate::ranking::RankingFunction;
use crate::relation::{ConstantId, Database, Relation};

pub const DEFAULT_ORACLE_CAP: usize = 1_000_000;

/// Column of an atom bound by an earlier atom, and an index on it.
type Probe = (usize, HashMap<ConstantId, Vec<usize>>);

/// One join result with the weight of the tuple each atom matched.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinRow {
    pub values: Vec<ConstantId>,
    pub atom_weights: Vec<Option<i64>>,
}

/// All valuations satisfying `q`, by nested loops in atom order. Each atom
/// after the first probes a hash index on one variable bound earlier.
pub fn brute_force_join(db: &Database, q: &ConjunctiveQuery, cap: usize) -> Result<Vec<JoinRow>, Error> {
    q.validate_against(db)?;
    let rels: Vec<&Relation> =
        q.atoms.iter().map(|a| db.relation(&a.relation).expect("validated against the database")).collect();
    let mut bound = vec![false; q.num_vars()];
    let mut probes: Vec<Option<Probe>> = Vec::new();
    for (i, atom) in q.atoms.iter().enumerate() {
        let probe = atom.vars.iter().position(|&v| bound[v]).map(|col| {
            let mut index: HashMap<ConstantId, Vec<usize>> = HashMap::new();
            for (k, t) in rels[i].tuples().iter().enumerate() {
                index.entry(t.values[col]).or_default().push(k);
            }
            (col, index)
        });
        probes.push(probe);
        for &v in &atom.vars {
            bound[v] = true;
        }
    }
    let mut out = Vec::new();
    let mut values: Vec<Option<ConstantId>> = vec![None; q.num_vars()];
    let mut weights = vec![None; q.atoms.len()];
    search(q, &rels, &probes, 0, &mut values, &mut weights, &mut out, cap)?;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn search(
    q: &ConjunctiveQuery,
    rels: &[&Relation],
    probes: &[Option<Probe>],
    i: usize,
    values: &mut Vec<Option<ConstantId>>,
    weights: &mut Vec<Option<i64>>,
    out: &mut Vec<JoinRow>,
    cap: usize,
) -> Result<(), Error> {
    if i == q.atoms.len() {
        if out.len() >= cap {
            return Err(OracleError::TooLarge { cap }.into());
        }
        out.push(JoinRow { values: values.iter().map(|v| v.expect("full query binds every variable")).collect(), atom_weights: weights.clone() });
        return Ok(());
    }
    let atom = &q.atoms[i];
    let tuples = rels[i].tuples();
    let candidates: Box<dyn Iterator<Item = usize>> = match &probes[i] {
        Some((col, index)) => {
            let key = values[atom.vars[*col]].expect("probe variable is bound");
            Box::new(index.get(&key).into_iter().flatten().copied())
        }
        None => Box::new(0..tuples.len()),
    };
    for k in candidates {
        let t = &tuples[k];
        let consistent = atom.vars.iter().zip(&t.values).all(|(&v, &c)| values[v].is_none_or(|b| b == c));
        if !consistent {
            continue;
        }
        let fresh: Vec<usize> = atom.vars.iter().copied().filter(|&v| values[v].is_none()).collect();
        for (&v, &c) in atom.vars.iter().zip(&t.values) {
            values[v] = Some(c);
        }
        weights[i] = t.weight;
        search(q, rels, probes, i + 1, values, weights, out, cap)?;
        for v in fresh {
            values[v] = None;
        }
    }
    weights[i] = None;
    Ok(())
}

/// The ranked, deduplicated answer of `uq`. A tuple produced by several
/// disjuncts keeps its smallest score.
pub fn brute_force_ranked(
    db: &Database,
    uq: &UnionQuery,
    rf: &RankingFunction,
    cap: usize,
) -> Result<Vec<OutputTuple>, Error> {
    let mut best: BTreeMap<Vec<ConstantId>, crate::ranking::ScoreValue> = BTreeMap::new();
    for q in &uq.disjuncts {
        rf.check_weights(q, db)?;
        for row in brute_force_join(db, q, cap)? {
            let score = rf
                .score_valuation(q, &row.values, |a| row.atom_weights[a], |c| db.vertex_weight(c))
                .map_err(OracleError::from)?;
            match best.get_mut(&row.values) {
                Some(s) if *s <= score => {}
                Some(s) => *s = score,
                None => {
                    best.insert(row.values, score);
                }
            }
        }
        if best.len() > cap {
            return Err(OracleError::TooLarge { cap }.into());
        }
    }
    let mut out: Vec<OutputTuple> = best.into_iter().map(|(values, score)| OutputTuple { values, score }).collect();
    out.sort();
    Ok(out)
}
