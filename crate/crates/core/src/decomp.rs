//! Rooted tree decompositions: construction (GYO join trees, depth-one
//! trees, text files), validation, and the derived key/val/subtree sets.
//!
//! File format, one directive per line, `#` comments:
//!
//! ```text
//! node 1: {x,y} cover R1
//! node 2: {y,z} cover R2
//! root 1
//! edge 1 2
//! ```
//!
//! A cover atom is named by its relation, or by `@<index>` into the query
//! body when a relation occurs twice. Omitting `cover` picks a minimum cover.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::DecompError;
use crate::query::{ConjunctiveQuery, VarId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecompNode {
    pub id: u32,
    /// Sorted variable ids.
    pub bag: Vec<VarId>,
    /// Index (not id) of the parent node.
    pub parent: Option<usize>,
    /// Indices of child nodes, ordered by node id.
    pub children: Vec<usize>,
    /// Atom indices joined to materialize the bag.
    pub cover: Vec<usize>,
    pub key_vars: Vec<VarId>,
    pub val_vars: Vec<VarId>,
    pub subtree_vars: Vec<VarId>,
    /// Size of a minimum set of atoms covering the bag.
    pub cover_width: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeDecomposition {
    nodes: Vec<DecompNode>,
    root: usize,
    width: usize,
}

/// A node as declared before validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSpec {
    pub id: u32,
    pub bag: BTreeSet<VarId>,
    pub cover: Option<Vec<usize>>,
}

/// GYO reduction got stuck: the query is cyclic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AcyclicityFailure {
    /// Atom indices left after no further ear could be removed.
    pub residue: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DepthOneFailure {
    Cyclic(AcyclicityFailure),
    /// Both atoms have at least two variables the other lacks.
    PrivateVariables { left: usize, right: usize },
    NoValidRoot,
}

impl TreeDecomposition {
    /// Validates the declared structure against `q` and derives all sets.
    pub fn build(
        q: &ConjunctiveQuery,
        specs: Vec<NodeSpec>,
        edges: &[(u32, u32)],
        root: Option<u32>,
    ) -> Result<Self, DecompError> {
        if specs.is_empty() {
            return Err(DecompError::Empty);
        }
        let mut index: HashMap<u32, usize> = HashMap::new();
        for (i, s) in specs.iter().enumerate() {
            if index.insert(s.id, i).is_some() {
                return Err(DecompError::DuplicateNode { node: s.id });
            }
            if let Some(&v) = s.bag.iter().find(|&&v| v >= q.num_vars()) {
                return Err(DecompError::UnknownVariable { node: s.id, var: format!("#{v}") });
            }
        }
        let lookup = |id: u32| index.get(&id).copied().ok_or(DecompError::UnknownNode { node: id });
        let n = specs.len();
        let mut parent: Vec<Option<usize>> = vec![None; n];
        for &(p, c) in edges {
            let (pi, ci) = (lookup(p)?, lookup(c)?);
            if pi == ci || parent[ci].is_some() {
                return Err(DecompError::Cycle { node: c });
            }
            parent[ci] = Some(pi);
        }
        for (start, spec) in specs.iter().enumerate() {
            let mut cur = start;
            let mut steps = 0;
            while let Some(p) = parent[cur] {
                cur = p;
                steps += 1;
                if steps > n {
                    return Err(DecompError::Cycle { node: spec.id });
                }
            }
        }
        let tops: Vec<usize> = (0..n).filter(|&i| parent[i].is_none()).collect();
        let root = match root {
            Some(r) => {
                let ri = lookup(r)?;
                if let Some(&other) = tops.iter().find(|&&t| t != ri) {
                    return Err(DecompError::Forest { node: specs[other].id });
                }
                if parent[ri].is_some() {
                    return Err(DecompError::Forest { node: specs[tops[0]].id });
                }
                ri
            }
            None => {
                if tops.len() > 1 {
                    return Err(DecompError::Forest { node: specs[tops[1]].id });
                }
                tops[0]
            }
        };

        let mut nodes: Vec<DecompNode> = Vec::with_capacity(n);
        for (i, s) in specs.into_iter().enumerate() {
            let bag: Vec<VarId> = s.bag.iter().copied().collect();
            let cover = match s.cover {
                Some(c) => {
                    if let Some(&a) = c.iter().find(|&&a| a >= q.atoms.len()) {
                        return Err(DecompError::UnknownAtom { node: s.id, atom: format!("@{a}") });
                    }
                    let covered: BTreeSet<VarId> = c.iter().flat_map(|&a| q.atom_vars(a)).collect();
                    if let Some(&v) = bag.iter().find(|v| !covered.contains(v)) {
                        return Err(DecompError::InsufficientCover { node: s.id, var: q.head[v].clone() });
                    }
                    c
                }
                None => min_cover(q, &s.bag),
            };
            nodes.push(DecompNode {
                id: s.id,
                cover_width: min_cover(q, &s.bag).len(),
                bag,
                parent: parent[i],
                children: Vec::new(),
                cover,
                key_vars: Vec::new(),
                val_vars: Vec::new(),
                subtree_vars: Vec::new(),
            });
        }
        for i in 0..n {
            if let Some(p) = nodes[i].parent {
                nodes[p].children.push(i);
            }
        }
        for i in 0..n {
            let mut ch = std::mem::take(&mut nodes[i].children);
            ch.sort_by_key(|&c| nodes[c].id);
            nodes[i].children = ch;
        }
        let mut d = TreeDecomposition { width: 0, nodes, root };
        d.derive();
        d.validate(q)?;
        Ok(d)
    }

    fn derive(&mut self) {
        for i in 0..self.nodes.len() {
            let key: Vec<VarId> = match self.nodes[i].parent {
                Some(p) => {
                    let pb = &self.nodes[p].bag;
                    self.nodes[i].bag.iter().copied().filter(|v| pb.contains(v)).collect()
                }
                None => Vec::new(),
            };
            let node = &mut self.nodes[i];
            node.val_vars = node.bag.iter().copied().filter(|v| !key.contains(v)).collect();
            node.key_vars = key;
        }
        for i in self.post_order() {
            let mut sub: BTreeSet<VarId> = self.nodes[i].bag.iter().copied().collect();
            for &c in &self.nodes[i].children {
                sub.extend(self.nodes[c].subtree_vars.iter().copied());
            }
            self.nodes[i].subtree_vars = sub.into_iter().collect();
        }
        self.width = self.nodes.iter().map(|n| n.cover_width).max().unwrap_or(0);
    }

    /// Edge coverage and running intersection. Idempotent.
    pub fn validate(&self, q: &ConjunctiveQuery) -> Result<(), DecompError> {
        for i in 0..q.atoms.len() {
            let vars = q.atom_vars(i);
            if !self.nodes.iter().any(|n| vars.iter().all(|v| n.bag.contains(v))) {
                return Err(DecompError::Coverage { atom: q.atom_label(i) });
            }
        }
        for v in 0..q.num_vars() {
            let tops = self
                .nodes
                .iter()
                .filter(|n| n.bag.contains(&v))
                .filter(|n| n.parent.is_none_or(|p| !self.nodes[p].bag.contains(&v)))
                .count();
            if tops > 1 {
                return Err(DecompError::RunningIntersection { var: q.head[v].clone() });
            }
        }
        for n in &self.nodes {
            let expect_key: Vec<VarId> = match n.parent {
                Some(p) => n.bag.iter().copied().filter(|v| self.nodes[p].bag.contains(v)).collect(),
                None => Vec::new(),
            };
            debug_assert_eq!(n.key_vars, expect_key);
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[DecompNode] {
        &self.nodes
    }

    pub fn node(&self, idx: usize) -> &DecompNode {
        &self.nodes[idx]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    /// Maximum over bags of the minimum number of atoms covering the bag.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn index_of(&self, id: u32) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    /// Children before parents; siblings by ascending node id.
    pub fn post_order(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![(self.root, false)];
        while let Some((i, expanded)) = stack.pop() {
            if expanded {
                out.push(i);
            } else {
                stack.push((i, true));
                for &c in self.nodes[i].children.iter().rev() {
                    stack.push((c, false));
                }
            }
        }
        out
    }

    pub fn pre_order(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        while let Some(i) = stack.pop() {
            out.push(i);
            stack.extend(self.nodes[i].children.iter().rev());
        }
        out
    }

    /// Longest root-to-leaf edge count.
    pub fn depth(&self) -> usize {
        let mut depth = vec![0usize; self.nodes.len()];
        let mut best = 0;
        for i in self.pre_order() {
            if let Some(p) = self.nodes[i].parent {
                depth[i] = depth[p] + 1;
                best = best.max(depth[i]);
            }
        }
        best
    }

    pub fn specs(&self) -> (Vec<NodeSpec>, Vec<(u32, u32)>, u32) {
        let specs = self
            .nodes
            .iter()
            .map(|n| NodeSpec { id: n.id, bag: n.bag.iter().copied().collect(), cover: Some(n.cover.clone()) })
            .collect();
        let edges = self
            .nodes
            .iter()
            .filter_map(|n| n.parent.map(|p| (self.nodes[p].id, n.id)))
            .collect();
        (specs, edges, self.nodes[self.root].id)
    }

    /// Text in the decomposition file format.
    pub fn render(&self, q: &ConjunctiveQuery) -> String {
        let mut s = String::new();
        let relation_count = |r: &str| q.atoms.iter().filter(|a| a.relation == r).count();
        for i in self.pre_order() {
            let n = &self.nodes[i];
            let bag: Vec<&str> = n.bag.iter().map(|&v| q.var_name(v)).collect();
            let cover: Vec<String> = n
                .cover
                .iter()
                .map(|&a| {
                    let r = &q.atoms[a].relation;
                    if relation_count(r) == 1 { r.clone() } else { format!("@{a}") }
                })
                .collect();
            let _ = write!(s, "node {}: {{{}}}", n.id, bag.join(","));
            if !cover.is_empty() {
                let _ = write!(s, " cover {}", cover.join(","));
            }
            s.push('\n');
        }
        let _ = writeln!(s, "root {}", self.nodes[self.root].id);
        for i in self.pre_order() {
            for &c in &self.nodes[i].children {
                let _ = writeln!(s, "edge {} {}", self.nodes[i].id, self.nodes[c].id);
            }
        }
        s
    }
}

/// Smallest set of atoms whose variables contain `bag`; among equal sizes the
/// lexicographically first by atom index.
pub fn min_cover(q: &ConjunctiveQuery, bag: &BTreeSet<VarId>) -> Vec<usize> {
    if bag.is_empty() {
        return Vec::new();
    }
    let candidates: Vec<usize> =
        (0..q.atoms.len()).filter(|&a| q.atoms[a].vars.iter().any(|v| bag.contains(v))).collect();
    for size in 1..=candidates.len() {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            let covered = bag
                .iter()
                .all(|v| idx.iter().any(|&i| q.atoms[candidates[i]].vars.contains(v)));
            if covered {
                return idx.iter().map(|&i| candidates[i]).collect();
            }
            // next combination in lexicographic order
            let mut k = size;
            while k > 0 && idx[k - 1] == candidates.len() - size + k - 1 {
                k -= 1;
            }
            if k == 0 {
                break;
            }
            idx[k - 1] += 1;
            for j in k..size {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    // bag has a variable no atom mentions; callers validate bags first
    candidates
}

/// Join tree by GYO ear removal, one node per atom (node id = atom index).
///
/// Each connected component keeps its atom with the most variables (first in
/// query order on ties) as root. Several components hang under a synthetic
/// root with an empty bag, whose id is the atom count.
pub fn gyo_join_tree(q: &ConjunctiveQuery) -> Result<TreeDecomposition, AcyclicityFailure> {
    let components = q.component_atoms();
    let mut edges: Vec<(u32, u32)> = Vec::new();
    let mut roots = Vec::new();
    let mut residue = Vec::new();
    for comp in &components {
        let root = *comp.iter().max_by_key(|&&a| (q.atoms[a].vars.len(), std::cmp::Reverse(a))).unwrap();
        roots.push(root);
        let mut remaining: Vec<usize> = comp.clone();
        while remaining.len() > 1 {
            let mut removed = None;
            'ears: for &e in &remaining {
                if e == root {
                    continue;
                }
                let shared: Vec<VarId> = q.atoms[e]
                    .vars
                    .iter()
                    .copied()
                    .filter(|v| remaining.iter().any(|&o| o != e && q.atoms[o].vars.contains(v)))
                    .collect();
                for &f in &remaining {
                    if f != e && shared.iter().all(|v| q.atoms[f].vars.contains(v)) {
                        removed = Some((e, f));
                        break 'ears;
                    }
                }
            }
            match removed {
                Some((e, f)) => {
                    edges.push((f as u32, e as u32));
                    remaining.retain(|&a| a != e);
                }
                None => {
                    residue.extend(remaining.iter().copied());
                    break;
                }
            }
        }
    }
    if !residue.is_empty() {
        return Err(AcyclicityFailure { residue });
    }
    let mut specs: Vec<NodeSpec> = (0..q.atoms.len())
        .map(|a| NodeSpec { id: a as u32, bag: q.atom_vars(a), cover: Some(vec![a]) })
        .collect();
    let root = if roots.len() == 1 {
        roots[0] as u32
    } else {
        let top = q.atoms.len() as u32;
        specs.push(NodeSpec { id: top, bag: BTreeSet::new(), cover: Some(Vec::new()) });
        edges.extend(roots.iter().map(|&r| (top, r as u32)));
        top
    };
    Ok(TreeDecomposition::build(q, specs, &edges, Some(root)).expect("GYO join tree is a valid decomposition"))
}

/// Width-1 decomposition of depth at most one: the atom with the most
/// variables is the root bag and every other atom is a child bag.
pub fn depth_one_decomposition(q: &ConjunctiveQuery) -> Result<TreeDecomposition, DepthOneFailure> {
    gyo_join_tree(q).map_err(DepthOneFailure::Cyclic)?;
    if let Some((left, right)) = crate::analysis::private_variable_pair(q) {
        return Err(DepthOneFailure::PrivateVariables { left, right });
    }
    let mut order: Vec<usize> = (0..q.atoms.len()).collect();
    order.sort_by_key(|&a| (std::cmp::Reverse(q.atoms[a].vars.len()), a));
    for &root in &order {
        let specs = (0..q.atoms.len())
            .map(|a| NodeSpec { id: a as u32, bag: q.atom_vars(a), cover: Some(vec![a]) })
            .collect();
        let edges: Vec<(u32, u32)> =
            (0..q.atoms.len()).filter(|&a| a != root).map(|a| (root as u32, a as u32)).collect();
        if let Ok(d) = TreeDecomposition::build(q, specs, &edges, Some(root as u32)) {
            return Ok(d);
        }
    }
    Err(DepthOneFailure::NoValidRoot)
}

/// Adds `extra` to every bag, extending covers with the first atom (in query
/// order) containing each variable they lack.
pub fn augment_for_bounded(
    d: &TreeDecomposition,
    q: &ConjunctiveQuery,
    extra: &BTreeSet<VarId>,
) -> Result<TreeDecomposition, DecompError> {
    if extra.is_empty() {
        return Ok(d.clone());
    }
    let (mut specs, edges, root) = d.specs();
    for s in &mut specs {
        s.bag.extend(extra.iter().copied());
        let cover = s.cover.get_or_insert_with(Vec::new);
        for &v in extra {
            if !cover.iter().any(|&a| q.atoms[a].vars.contains(&v)) {
                if let Some(a) = (0..q.atoms.len()).find(|&a| q.atoms[a].vars.contains(&v)) {
                    cover.push(a);
                }
            }
        }
    }
    TreeDecomposition::build(q, specs, &edges, Some(root))
}

/// Parses the decomposition file format against `q`.
pub fn parse_decomposition(text: &str, q: &ConjunctiveQuery) -> Result<TreeDecomposition, DecompError> {
    let mut specs = Vec::new();
    let mut edges = Vec::new();
    let mut root = None;
    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let perr = |m: &str| DecompError::Parse { line: line_no, message: m.to_owned() };
        let num = |s: &str| s.trim().parse::<u32>().map_err(|_| perr(&format!("`{s}` is not a node id")));
        let (kw, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        match kw {
            "root" => root = Some(num(rest)?),
            "edge" => {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                if parts.len() != 2 {
                    return Err(perr("expected `edge <parent> <child>`"));
                }
                edges.push((num(parts[0])?, num(parts[1])?));
            }
            "node" => {
                let (id, rest) = rest.split_once(':').ok_or_else(|| perr("expected `node <id>: {...}`"))?;
                let id = num(id)?;
                let rest = rest.trim();
                let close = rest.find('}').filter(|_| rest.starts_with('{')).ok_or_else(|| perr("expected `{`...`}`"))?;
                let mut bag = BTreeSet::new();
                for v in rest[1..close].split(',').map(str::trim).filter(|v| !v.is_empty()) {
                    let vid = q
                        .var_id(v)
                        .ok_or_else(|| DecompError::UnknownVariable { node: id, var: v.to_owned() })?;
                    bag.insert(vid);
                }
                let tail = rest[close + 1..].trim();
                let cover = if tail.is_empty() {
                    None
                } else {
                    let names = tail.strip_prefix("cover").ok_or_else(|| perr("expected `cover`"))?;
                    let mut cover = Vec::new();
                    for name in names.split(',').map(str::trim).filter(|n| !n.is_empty()) {
                        cover.push(resolve_atom(q, id, name)?);
                    }
                    Some(cover)
                };
                specs.push(NodeSpec { id, bag, cover });
            }
            other => return Err(perr(&format!("unknown directive `{other}`"))),
        }
    }
    TreeDecomposition::build(q, specs, &edges, root)
}

fn resolve_atom(q: &ConjunctiveQuery, node: u32, name: &str) -> Result<usize, DecompError> {
    if let Some(idx) = name.strip_prefix('@') {
        return idx
            .parse::<usize>()
            .ok()
            .filter(|&i| i < q.atoms.len())
            .ok_or_else(|| DecompError::UnknownAtom { node, atom: name.to_owned() });
    }
    let mut hits = (0..q.atoms.len()).filter(|&a| q.atoms[a].relation == name);
    match (hits.next(), hits.next()) {
        (Some(a), None) => Ok(a),
        (Some(_), Some(_)) => Err(DecompError::AmbiguousAtom { node, atom: name.to_owned() }),
        _ => Err(DecompError::UnknownAtom { node, atom: name.to_owned() }),
    }
}

pub fn load_decomposition(path: &Path, q: &ConjunctiveQuery) -> crate::error::Result<TreeDecomposition> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| crate::error::Error::Io { path: path.to_owned(), source })?;
    parse_decomposition(&text, q).map_err(|e| crate::error::Error::from(e).context(path.display().to_string()))
}
