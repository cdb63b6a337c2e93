//! Full conjunctive queries and unions of them, viewed as hypergraphs.
//!
//! Text grammar (one query per file, `#` starts a comment line):
//!
//! ```text
//! Q(x,y,z) :- R(x,y), S(y,z) | R(x,y), T(y,z)
//! ```
//!
//! `|` separates disjuncts; every disjunct must use exactly the head variables.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::QueryError;
use crate::relation::Database;

/// Index of a variable in the head. Variable order is head order.
pub type VarId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub relation: String,
    pub vars: Vec<VarId>,
}

/// A full CQ: variables are the head, hyperedges are the atoms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConjunctiveQuery {
    pub name: String,
    pub head: Vec<String>,
    pub atoms: Vec<Atom>,
}

pub type QueryHypergraph = ConjunctiveQuery;

impl ConjunctiveQuery {
    pub fn num_vars(&self) -> usize {
        self.head.len()
    }

    pub fn var_name(&self, v: VarId) -> &str {
        &self.head[v]
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.head.iter().position(|h| h == name)
    }

    pub fn atom_label(&self, i: usize) -> String {
        let a = &self.atoms[i];
        let vars: Vec<&str> = a.vars.iter().map(|&v| self.var_name(v)).collect();
        format!("{}({})", a.relation, vars.join(","))
    }

    pub fn atom_vars(&self, i: usize) -> BTreeSet<VarId> {
        self.atoms[i].vars.iter().copied().collect()
    }

    /// Checks every atom against the database schema.
    pub fn validate_against(&self, db: &Database) -> Result<(), QueryError> {
        for (i, atom) in self.atoms.iter().enumerate() {
            let rel = db.relation(&atom.relation).ok_or_else(|| QueryError::UnknownRelation {
                atom: self.atom_label(i),
                relation: atom.relation.clone(),
            })?;
            if rel.arity() != atom.vars.len() {
                return Err(QueryError::ArityMismatch {
                    atom: self.atom_label(i),
                    relation: atom.relation.clone(),
                    expected: rel.arity(),
                    found: atom.vars.len(),
                });
            }
        }
        Ok(())
    }

    /// Atom indices grouped by variable connectivity, each group in query
    /// order, groups ordered by their first atom.
    pub fn component_atoms(&self) -> Vec<Vec<usize>> {
        let n = self.atoms.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut c = x;
            while p[c] != r {
                let next = p[c];
                p[c] = r;
                c = next;
            }
            r
        }
        let mut owner: Vec<Option<usize>> = vec![None; self.num_vars()];
        for (i, atom) in self.atoms.iter().enumerate() {
            for &v in &atom.vars {
                match owner[v] {
                    Some(j) => {
                        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                        parent[a.max(b)] = a.min(b);
                    }
                    None => owner[v] = Some(i),
                }
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut group_of = vec![usize::MAX; n];
        for i in 0..n {
            let r = find(&mut parent, i);
            if group_of[r] == usize::MAX {
                group_of[r] = groups.len();
                groups.push(Vec::new());
            }
            groups[group_of[r]].push(i);
        }
        groups
    }

    /// Sub-query over the given atoms, keeping only their variables (in head order).
    pub fn subquery(&self, atoms: &[usize]) -> ConjunctiveQuery {
        let used: BTreeSet<VarId> = atoms.iter().flat_map(|&i| self.atoms[i].vars.iter().copied()).collect();
        let remap: Vec<Option<VarId>> =
            (0..self.num_vars()).map(|v| used.iter().position(|&u| u == v)).collect();
        ConjunctiveQuery {
            name: self.name.clone(),
            head: used.iter().map(|&v| self.head[v].clone()).collect(),
            atoms: atoms
                .iter()
                .map(|&i| Atom {
                    relation: self.atoms[i].relation.clone(),
                    vars: self.atoms[i].vars.iter().map(|&v| remap[v].unwrap()).collect(),
                })
                .collect(),
        }
    }
}

/// Splits a query into maximal variable-connected sub-queries.
pub fn connected_components(q: &QueryHypergraph) -> Vec<QueryHypergraph> {
    q.component_atoms().iter().map(|atoms| q.subquery(atoms)).collect()
}

/// A nonempty union of CQs sharing one head.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnionQuery {
    pub disjuncts: Vec<ConjunctiveQuery>,
}

impl UnionQuery {
    pub fn head(&self) -> &[String] {
        &self.disjuncts[0].head
    }

    /// Canonical text form; `parse_query(render())` reproduces the query.
    pub fn render(&self) -> String {
        let q = &self.disjuncts[0];
        let bodies: Vec<String> = self
            .disjuncts
            .iter()
            .map(|d| (0..d.atoms.len()).map(|i| d.atom_label(i)).collect::<Vec<_>>().join(", "))
            .collect();
        format!("{}({}) :- {}", q.name, q.head.join(","), bodies.join(" | "))
    }
}

impl fmt::Display for UnionQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

struct Lexer<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.text[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn err(&self, message: impl Into<String>) -> QueryError {
        QueryError::Syntax { offset: self.pos, message: message.into() }
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.text.len()
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.text[self.pos..].starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<(), QueryError> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{tok}`")))
        }
    }

    /// An argument or name token: anything up to a delimiter.
    fn word(&mut self) -> Result<&'a str, QueryError> {
        self.skip_ws();
        let rest = &self.text[self.pos..];
        let len = rest.find(|c: char| c.is_whitespace() || "(),|:".contains(c)).unwrap_or(rest.len());
        if len == 0 {
            return Err(self.err("expected a name"));
        }
        self.pos += len;
        Ok(&rest[..len])
    }

    fn ident(&mut self) -> Result<&'a str, QueryError> {
        let start = self.pos;
        let w = self.word()?;
        if is_ident(w) {
            Ok(w)
        } else {
            self.pos = start;
            Err(self.err(format!("`{w}` is not an identifier")))
        }
    }

    fn args(&mut self) -> Result<Vec<&'a str>, QueryError> {
        self.expect("(")?;
        let mut out = Vec::new();
        if self.eat(")") {
            return Ok(out);
        }
        loop {
            out.push(self.word()?);
            if self.eat(")") {
                return Ok(out);
            }
            self.expect(",")?;
        }
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_')
}

/// Parses query text (comment lines starting with `#` are ignored).
pub fn parse_query(text: &str) -> Result<UnionQuery, QueryError> {
    let body: String = text
        .lines()
        .map(|l| if l.trim_start().starts_with('#') { "" } else { l })
        .collect::<Vec<_>>()
        .join("\n");
    let mut lx = Lexer { text: &body, pos: 0 };
    let name = lx.ident()?.to_owned();
    let head_args = lx.args()?;
    let mut head: Vec<String> = Vec::new();
    for a in head_args {
        if !is_ident(a) {
            return Err(lx.err(format!("head argument `{a}` is not a variable")));
        }
        if head.iter().any(|h| h == a) {
            return Err(QueryError::RepeatedHeadVariable { var: a.to_owned() });
        }
        head.push(a.to_owned());
    }
    lx.expect(":-")?;
    let mut disjuncts = Vec::new();
    let mut arities: Vec<(String, usize)> = Vec::new();
    loop {
        let mut atoms = Vec::new();
        loop {
            let rel = lx.ident()?.to_owned();
            let args = lx.args()?;
            let label = format!("{}({})", rel, args.join(","));
            if args.is_empty() {
                return Err(QueryError::NullaryAtom { atom: label });
            }
            let mut vars = Vec::with_capacity(args.len());
            for a in &args {
                if !is_ident(a) {
                    return Err(QueryError::ConstantArgument { atom: label, arg: a.to_string() });
                }
                let v = match head.iter().position(|h| h == a) {
                    Some(v) => v,
                    None => return Err(QueryError::NonFullHead { var: a.to_string() }),
                };
                if vars.contains(&v) {
                    return Err(QueryError::RepeatedVariable { atom: label });
                }
                vars.push(v);
            }
            match arities.iter().find(|(r, _)| *r == rel) {
                Some(&(_, n)) if n != vars.len() => {
                    return Err(QueryError::ArityMismatch {
                        atom: label,
                        relation: rel,
                        expected: n,
                        found: vars.len(),
                    })
                }
                Some(_) => {}
                None => arities.push((rel.clone(), vars.len())),
            }
            atoms.push(Atom { relation: rel, vars });
            if !lx.eat(",") {
                break;
            }
        }
        let d = disjuncts.len();
        for (v, h) in head.iter().enumerate() {
            if !atoms.iter().any(|a| a.vars.contains(&v)) {
                return Err(QueryError::UnboundHeadVariable { var: h.clone(), disjunct: d });
            }
        }
        disjuncts.push(ConjunctiveQuery { name: name.clone(), head: head.clone(), atoms });
        if !lx.eat("|") {
            break;
        }
    }
    if !lx.at_end() {
        return Err(lx.err("unexpected trailing input"));
    }
    Ok(UnionQuery { disjuncts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn running_example_parses() {
        let q = parse_query("Q(x,y,z,w,u) :- R1(x,y), R2(y,z), R3(z,w), R4(z,u)").unwrap();
        assert_eq!(q.disjuncts.len(), 1);
        assert_eq!(q.disjuncts[0].atoms.len(), 4);
        assert_eq!(q.disjuncts[0].atoms[3], Atom { relation: "R4".into(), vars: vec![2, 4] });
    }

    #[test]
    fn smallest_query_and_comments() {
        let q = parse_query("# a comment\nQ(x) :- R(x)\n").unwrap();
        assert_eq!(q.disjuncts[0].atoms.len(), 1);
    }

    #[test]
    fn validation_errors_name_the_atom() {
        assert_eq!(
            parse_query("Q(x,y) :- R(x,x)"),
            Err(QueryError::RepeatedVariable { atom: "R(x,x)".into() })
        );
        assert_eq!(
            parse_query("Q(x,y,z) :- R(x,y), R(x,y,z)"),
            Err(QueryError::ArityMismatch {
                atom: "R(x,y,z)".into(),
                relation: "R".into(),
                expected: 2,
                found: 3
            })
        );
        assert_eq!(parse_query("Q(x) :- R(x,y)"), Err(QueryError::NonFullHead { var: "y".into() }));
        assert_eq!(
            parse_query("Q(x,y) :- R(x)"),
            Err(QueryError::UnboundHeadVariable { var: "y".into(), disjunct: 0 })
        );
        assert!(matches!(parse_query("Q(x) :- R(x, 3)"), Err(QueryError::ConstantArgument { .. })));
        assert!(matches!(parse_query("Q(x) :- R(x) junk"), Err(QueryError::Syntax { .. })));
        assert!(matches!(parse_query("Q(x) :- R()"), Err(QueryError::NullaryAtom { .. })));
    }

    #[test]
    fn union_disjuncts_share_head() {
        let q = parse_query("Q(x,y,z) :- R(x,y), S(y,z) | R(x,y), T(y,z)").unwrap();
        assert_eq!(q.disjuncts.len(), 2);
        assert_eq!(q.disjuncts[1].atoms[1].relation, "T");
        assert!(matches!(
            parse_query("Q(x,y,z) :- R(x,y), S(y,z) | R(x,y)"),
            Err(QueryError::UnboundHeadVariable { disjunct: 1, .. })
        ));
    }

    #[test]
    fn components() {
        let q = |s| parse_query(s).unwrap().disjuncts.remove(0);
        assert_eq!(connected_components(&q("Q(x,y,z) :- R(x,y), S(y,z)")).len(), 1);
        let parts = connected_components(&q("Q(x1,y1,x2,y2) :- R(x1,y1), S(x2,y2)"));
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[1].head, vec!["x2", "y2"]);
        assert_eq!(parts[1].atoms[0].vars, vec![0, 1]);
        assert_eq!(connected_components(&q("Q(x) :- R(x)")).len(), 1);
    }

    fn arb_query() -> impl Strategy<Value = UnionQuery> {
        (1usize..6, 1usize..4).prop_flat_map(|(nvars, ndisj)| {
            let atom = proptest::sample::subsequence((0..nvars).collect::<Vec<_>>(), 1..=nvars)
                .prop_shuffle()
                .prop_map(|vars| vars);
            let body = proptest::collection::vec(atom, 1..5);
            proptest::collection::vec(body, ndisj).prop_map(move |bodies| {
                let head: Vec<String> = (0..nvars).map(|i| format!("v{i}")).collect();
                let disjuncts = bodies
                    .into_iter()
                    .map(|atoms| {
                        let mut atoms: Vec<Atom> = atoms
                            .into_iter()
                            .enumerate()
                            .map(|(i, vars)| Atom { relation: format!("R{}_{}", vars.len(), i), vars })
                            .collect();
                        for v in 0..nvars {
                            if !atoms.iter().any(|a| a.vars.contains(&v)) {
                                atoms.push(Atom { relation: format!("U{v}"), vars: vec![v] });
                            }
                        }
                        ConjunctiveQuery { name: "Q".into(), head: head.clone(), atoms }
                    })
                    .collect();
                UnionQuery { disjuncts }
            })
        })
    }

    proptest! {
        #[test]
        fn render_round_trips(q in arb_query()) {
            let text = q.render();
            prop_assert_eq!(parse_query(&text).unwrap(), q);
        }

        #[test]
        fn components_are_maximal(q in arb_query()) {
            let cq = &q.disjuncts[0];
            let groups = cq.component_atoms();
            for (i, g) in groups.iter().enumerate() {
                for h in &groups[i + 1..] {
                    let gv: BTreeSet<_> = g.iter().flat_map(|&a| cq.atom_vars(a)).collect();
                    let hv: BTreeSet<_> = h.iter().flat_map(|&a| cq.atom_vars(a)).collect();
                    prop_assert!(gv.is_disjoint(&hv));
                }
            }
            prop_assert_eq!(groups.iter().map(Vec::len).sum::<usize>(), cq.atoms.len());
        }
    }
}
