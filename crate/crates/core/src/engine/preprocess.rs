use crate::decomp::TreeDecomposition;
use crate::error::{Error, QueryError};
use crate::query::ConjunctiveQuery;
use crate::relation::{semijoin, Database, Relation, Tuple};

/// Relation of atom `a` with its columns renamed to the atom's variables.
fn atom_relation(db: &Database, q: &ConjunctiveQuery, a: usize) -> Result<Relation, Error> {
    let atom = &q.atoms[a];
    let rel = db.relation(&atom.relation).ok_or_else(|| QueryError::UnknownRelation {
        atom: q.atom_label(a),
        relation: atom.relation.clone(),
    })?;
    let schema = atom.vars.iter().map(|&v| q.var_name(v).to_owned()).collect();
    Ok(rel.renamed(q.atom_label(a), schema))
}

/// Per node (by index): the join of the cover atoms projected onto the bag
/// (columns in variable-id order), then filtered by every atom that fits
/// inside the bag.
pub fn materialize_bags(db: &Database, q: &ConjunctiveQuery, d: &TreeDecomposition) -> Result<Vec<Relation>, Error> {
    let atoms: Vec<Relation> = (0..q.atoms.len()).map(|a| atom_relation(db, q, a)).collect::<Result<_, _>>()?;
    let mut bags = Vec::with_capacity(d.len());
    for node in d.nodes() {
        let names: Vec<&str> = node.bag.iter().map(|&v| q.var_name(v)).collect();
        let mut rel = match node.cover.split_first() {
            None => Relation::from_tuples(format!("B{}", node.id), Vec::new(), [Tuple::new(Vec::new())])?,
            Some((&first, rest)) => {
                let mut joined = atoms[first].clone();
                for &a in rest {
                    joined = joined.natural_join(&atoms[a]);
                }
                joined.project(&names)?
            }
        };
        for (a, atom) in q.atoms.iter().enumerate() {
            if atom.vars.iter().all(|v| node.bag.contains(v)) {
                let on: Vec<&str> = atom.vars.iter().map(|&v| q.var_name(v)).collect();
                rel = semijoin(&rel, &atoms[a], &on)?;
            }
        }
        bags.push(rel.renamed(format!("B{}", node.id), names.iter().map(|s| s.to_string()).collect()));
    }
    Ok(bags)
}

/// Semijoin pass bottom-up (parent ⋉ child) and then top-down
/// (child ⋉ parent) on each node's key variables.
pub fn full_reducer(mut bags: Vec<Relation>, q: &ConjunctiveQuery, d: &TreeDecomposition) -> Vec<Relation> {
    let key_names = |t: usize| -> Vec<&str> { d.node(t).key_vars.iter().map(|&v| q.var_name(v)).collect() };
    for t in d.post_order() {
        if let Some(p) = d.node(t).parent {
            bags[p] = semijoin(&bags[p], &bags[t], &key_names(t)).expect("key columns exist in both bags");
        }
    }
    for t in d.pre_order() {
        if let Some(p) = d.node(t).parent {
            bags[t] = semijoin(&bags[t], &bags[p], &key_names(t)).expect("key columns exist in both bags");
        }
    }
    bags
}
