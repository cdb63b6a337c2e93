//! Relational data model: dictionary-encoded constants, weighted tuples,
//! relations with set semantics, and CSV ingestion.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use crate::error::{LoadError, SchemaError};

/// Dense identifier of a constant. Id order equals raw-value order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConstantId(pub u32);

/// A constant as it appeared in the input.
///
/// Integers compare numerically and sort before all text values; text
/// compares bytewise. Fields that parse as `i64` are stored as integers, so
/// `007` and `7` are the same constant.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RawValue {
    Int(i64),
    Text(String),
}

impl RawValue {
    pub fn parse(field: &str) -> Self {
        match field.parse::<i64>() {
            Ok(v) => RawValue::Int(v),
            Err(_) => RawValue::Text(field.to_owned()),
        }
    }
}

impl fmt::Display for RawValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RawValue::Int(v) => write!(f, "{v}"),
            RawValue::Text(s) => f.write_str(s),
        }
    }
}

impl From<i64> for RawValue {
    fn from(v: i64) -> Self {
        RawValue::Int(v)
    }
}

impl From<&str> for RawValue {
    fn from(s: &str) -> Self {
        RawValue::parse(s)
    }
}

/// Bijection between raw values and [`ConstantId`]s, frozen at build time.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dictionary {
    values: Vec<RawValue>,
    ids: HashMap<RawValue, ConstantId>,
}

impl Dictionary {
    pub fn from_values<I: IntoIterator<Item = RawValue>>(values: I) -> Self {
        let mut values: Vec<RawValue> = values.into_iter().collect();
        values.sort();
        values.dedup();
        let ids = values
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), ConstantId(i as u32)))
            .collect();
        Dictionary { values, ids }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn id(&self, raw: &RawValue) -> Option<ConstantId> {
        self.ids.get(raw).copied()
    }

    /// Looks up a value given in its textual form.
    pub fn lookup(&self, field: &str) -> Option<ConstantId> {
        self.id(&RawValue::parse(field))
    }

    pub fn value(&self, id: ConstantId) -> &RawValue {
        &self.values[id.0 as usize]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Tuple {
    pub values: Vec<ConstantId>,
    pub weight: Option<i64>,
}

impl Tuple {
    pub fn new(values: Vec<ConstantId>) -> Self {
        Tuple { values, weight: None }
    }

    pub fn weighted(values: Vec<ConstantId>, weight: i64) -> Self {
        Tuple { values, weight: Some(weight) }
    }
}

/// A named relation with set semantics. Tuples keep first-insertion order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    name: String,
    schema: Vec<String>,
    tuples: Vec<Tuple>,
    has_weights: bool,
}

impl Relation {
    pub fn empty(name: impl Into<String>, schema: Vec<String>) -> Self {
        Relation { name: name.into(), schema, tuples: Vec::new(), has_weights: false }
    }

    /// Builds a relation, dropping duplicate tuples. The same values with two
    /// different weights is an error.
    pub fn from_tuples(
        name: impl Into<String>,
        schema: Vec<String>,
        tuples: impl IntoIterator<Item = Tuple>,
    ) -> Result<Self, LoadError> {
        let name = name.into();
        let mut seen: HashMap<Vec<ConstantId>, Option<i64>> = HashMap::new();
        let mut out = Vec::new();
        let mut has_weights = false;
        for t in tuples {
            if t.values.len() != schema.len() {
                return Err(LoadError::ArityMismatch {
                    relation: name,
                    expected: schema.len(),
                    found: t.values.len(),
                });
            }
            has_weights |= t.weight.is_some();
            match seen.get(&t.values) {
                Some(&w) if w == t.weight => continue,
                Some(&w) => {
                    return Err(LoadError::ConflictingTupleWeight {
                        relation: name,
                        tuple: format!("{:?}", t.values.iter().map(|c| c.0).collect::<Vec<_>>()),
                        first: w.unwrap_or(0),
                        second: t.weight.unwrap_or(0),
                    })
                }
                None => {
                    seen.insert(t.values.clone(), t.weight);
                    out.push(t);
                }
            }
        }
        Ok(Relation { name, schema, tuples: out, has_weights })
    }

    /// Internal constructor for tuples already known to be distinct.
    pub(crate) fn from_distinct(name: String, schema: Vec<String>, tuples: Vec<Tuple>) -> Self {
        let has_weights = tuples.iter().any(|t| t.weight.is_some());
        Relation { name, schema, tuples, has_weights }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn schema(&self) -> &[String] {
        &self.schema
    }

    pub fn arity(&self) -> usize {
        self.schema.len()
    }

    pub fn tuples(&self) -> &[Tuple] {
        &self.tuples
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn has_weights(&self) -> bool {
        self.has_weights
    }

    pub fn column(&self, name: &str) -> Result<usize, SchemaError> {
        self.schema.iter().position(|c| c == name).ok_or_else(|| SchemaError::UnknownColumn {
            relation: self.name.clone(),
            column: name.to_owned(),
        })
    }

    /// Same tuples under a new schema of equal arity.
    pub fn renamed(&self, name: impl Into<String>, schema: Vec<String>) -> Self {
        assert_eq!(schema.len(), self.schema.len(), "rename must keep the arity");
        Relation { name: name.into(), schema, tuples: self.tuples.clone(), has_weights: self.has_weights }
    }

    /// Projection onto `columns` (in that order), deduplicated, weights dropped.
    pub fn project(&self, columns: &[&str]) -> Result<Relation, SchemaError> {
        let idx = columns.iter().map(|c| self.column(c)).collect::<Result<Vec<_>, _>>()?;
        let mut seen = HashSet::new();
        let tuples = self
            .tuples
            .iter()
            .map(|t| idx.iter().map(|&i| t.values[i]).collect::<Vec<_>>())
            .filter(|v| seen.insert(v.clone()))
            .map(Tuple::new)
            .collect();
        Ok(Relation::from_distinct(
            self.name.clone(),
            columns.iter().map(|c| c.to_string()).collect(),
            tuples,
        ))
    }

    /// Natural join on equally named columns (hash join, weights dropped).
    /// The result schema is `self`'s columns followed by `other`'s new ones.
    pub fn natural_join(&self, other: &Relation) -> Relation {
        let shared: Vec<(usize, usize)> = self
            .schema
            .iter()
            .enumerate()
            .filter_map(|(i, c)| other.schema.iter().position(|o| o == c).map(|j| (i, j)))
            .collect();
        let extra: Vec<usize> =
            (0..other.arity()).filter(|j| !shared.iter().any(|&(_, s)| s == *j)).collect();
        let mut index: HashMap<Vec<ConstantId>, Vec<usize>> = HashMap::new();
        for (k, t) in other.tuples.iter().enumerate() {
            let key = shared.iter().map(|&(_, j)| t.values[j]).collect();
            index.entry(key).or_default().push(k);
        }
        let mut schema = self.schema.clone();
        schema.extend(extra.iter().map(|&j| other.schema[j].clone()));
        let mut tuples = Vec::new();
        let mut seen = HashSet::new();
        for t in &self.tuples {
            let key: Vec<ConstantId> = shared.iter().map(|&(i, _)| t.values[i]).collect();
            if let Some(matches) = index.get(&key) {
                for &k in matches {
                    let mut values = t.values.clone();
                    values.extend(extra.iter().map(|&j| other.tuples[k].values[j]));
                    if seen.insert(values.clone()) {
                        tuples.push(Tuple::new(values));
                    }
                }
            }
        }
        Relation::from_distinct(format!("{}⋈{}", self.name, other.name), schema, tuples)
    }
}

/// Tuples of `left` whose projection on `on` occurs in `right`'s projection on `on`.
pub fn semijoin(left: &Relation, right: &Relation, on: &[&str]) -> Result<Relation, SchemaError> {
    let li = on.iter().map(|c| left.column(c)).collect::<Result<Vec<_>, _>>()?;
    let ri = on.iter().map(|c| right.column(c)).collect::<Result<Vec<_>, _>>()?;
    let keys: HashSet<Vec<ConstantId>> =
        right.tuples.iter().map(|t| ri.iter().map(|&i| t.values[i]).collect()).collect();
    let tuples = left
        .tuples
        .iter()
        .filter(|t| keys.contains(&li.iter().map(|&i| t.values[i]).collect::<Vec<_>>()))
        .cloned()
        .collect();
    Ok(Relation { tuples, ..left.clone_shape() })
}

impl Relation {
    fn clone_shape(&self) -> Relation {
        Relation {
            name: self.name.clone(),
            schema: self.schema.clone(),
            tuples: Vec::new(),
            has_weights: self.has_weights,
        }
    }
}

/// A relation before dictionary encoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRelation {
    pub name: String,
    pub schema: Vec<String>,
    pub rows: Vec<(Vec<RawValue>, Option<i64>)>,
}

impl RawRelation {
    pub fn new(name: impl Into<String>, schema: &[&str]) -> Self {
        RawRelation {
            name: name.into(),
            schema: schema.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, values: Vec<RawValue>, weight: Option<i64>) -> &mut Self {
        self.rows.push((values, weight));
        self
    }
}

/// Reads a CSV relation with a mandatory header. `weight_column`, when given,
/// is parsed as `i64` on every row and removed from the schema.
pub fn load_csv(path: &Path, name: &str, weight_column: Option<&str>) -> Result<RawRelation, LoadError> {
    let file = File::open(path).map_err(|source| LoadError::Io { path: path.to_owned(), source })?;
    read_csv(file, path, name, weight_column)
}

pub fn read_csv<R: Read>(
    reader: R,
    path: &Path,
    name: &str,
    weight_column: Option<&str>,
) -> Result<RawRelation, LoadError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(LoadError::MissingHeader { path: path.to_owned() });
    }
    let weight_idx = match weight_column {
        Some(col) => Some(header.iter().position(|h| h == col).ok_or_else(|| {
            LoadError::MissingWeightColumn { path: path.to_owned(), column: col.to_owned() }
        })?),
        None => None,
    };
    let schema: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != weight_idx)
        .map(|(_, h)| h.to_owned())
        .collect();
    let mut rel = RawRelation { name: name.to_owned(), schema, rows: Vec::new() };
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let mut values = Vec::with_capacity(rel.schema.len());
        let mut weight = None;
        for (i, field) in record.iter().enumerate() {
            if Some(i) == weight_idx {
                weight = Some(field.parse::<i64>().map_err(|_| LoadError::BadWeight {
                    path: path.to_owned(),
                    line,
                    value: field.to_owned(),
                })?);
            } else {
                values.push(RawValue::parse(field));
            }
        }
        rel.rows.push((values, weight));
    }
    Ok(rel)
}

fn csv_error(path: &Path, e: csv::Error) -> LoadError {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(source) => LoadError::Io { path: path.to_owned(), source },
        kind => LoadError::Malformed { path: path.to_owned(), line, message: format!("{kind:?}") },
    }
}

/// Raw vertex weights as read from a `constant,weight` file.
pub type RawVertexWeights = BTreeMap<RawValue, i64>;

/// Reads a headerless two-column `constant,weight` file.
pub fn load_vertex_weights(path: &Path) -> Result<RawVertexWeights, LoadError> {
    let file = File::open(path).map_err(|source| LoadError::Io { path: path.to_owned(), source })?;
    read_vertex_weights(file, path)
}

pub fn read_vertex_weights<R: Read>(reader: R, path: &Path) -> Result<RawVertexWeights, LoadError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut out = RawVertexWeights::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(LoadError::Malformed {
                path: path.to_owned(),
                line,
                message: format!("expected `constant,weight`, found {} fields", record.len()),
            });
        }
        let constant = RawValue::parse(&record[0]);
        let weight = record[1].parse::<i64>().map_err(|_| LoadError::BadWeight {
            path: path.to_owned(),
            line,
            value: record[1].to_owned(),
        })?;
        match out.get(&constant) {
            Some(&w) if w != weight => {
                return Err(LoadError::ConflictingVertexWeight {
                    path: path.to_owned(),
                    constant: constant.to_string(),
                    first: w,
                    second: weight,
                })
            }
            _ => {
                out.insert(constant, weight);
            }
        }
    }
    Ok(out)
}

/// An immutable, dictionary-encoded database.
#[derive(Debug, Clone, Default)]
pub struct Database {
    dictionary: Dictionary,
    relations: BTreeMap<String, Relation>,
    vertex_weights: Option<HashMap<ConstantId, i64>>,
}

impl Database {
    pub fn builder() -> DatabaseBuilder {
        DatabaseBuilder::default()
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.dictionary
    }

    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.relations.get(name)
    }

    pub fn relations(&self) -> impl Iterator<Item = &Relation> {
        self.relations.values()
    }

    /// Explicit vertex weight of `c`, if the database has one.
    pub fn vertex_weight(&self, c: ConstantId) -> Option<i64> {
        self.vertex_weights.as_ref().and_then(|m| m.get(&c).copied())
    }

    pub fn vertex_weights(&self) -> Option<&HashMap<ConstantId, i64>> {
        self.vertex_weights.as_ref()
    }

    /// Loads every `*.csv` in `dir` as a relation named after the file stem.
    /// A CSV whose header contains one of `weight_columns` uses that column as
    /// its tuple weight. `vertex_weights` names a separate weight file; when
    /// `None`, `vertex_weights.txt` in `dir` is used if present.
    pub fn load_dir(
        dir: &Path,
        weight_columns: &[String],
        vertex_weights: Option<&Path>,
    ) -> Result<Database, LoadError> {
        let entries = std::fs::read_dir(dir).map_err(|source| LoadError::Io { path: dir.to_owned(), source })?;
        let mut paths: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "csv"))
            .collect();
        paths.sort();
        let mut builder = Database::builder();
        for path in paths {
            let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_owned();
            let header = first_line(&path)?;
            let columns: Vec<&str> = header.split(',').map(str::trim).collect();
            let weight = weight_columns.iter().find(|w| columns.contains(&w.as_str()));
            builder.add_relation(load_csv(&path, &name, weight.map(String::as_str))?)?;
        }
        let default_vw = dir.join("vertex_weights.txt");
        let vw_path = vertex_weights.map(Path::to_owned).or_else(|| default_vw.exists().then_some(default_vw));
        if let Some(p) = vw_path {
            builder.vertex_weights(load_vertex_weights(&p)?);
        }
        builder.build()
    }
}

fn first_line(path: &Path) -> Result<String, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io { path: path.to_owned(), source })?;
    Ok(text.lines().find(|l| !l.trim_start().starts_with('#')).unwrap_or("").to_owned())
}

/// Collects raw relations, then assigns constant ids in raw-value order.
#[derive(Debug, Default)]
pub struct DatabaseBuilder {
    relations: Vec<RawRelation>,
    vertex_weights: Option<RawVertexWeights>,
}

impl DatabaseBuilder {
    pub fn add_relation(&mut self, rel: RawRelation) -> Result<&mut Self, LoadError> {
        if self.relations.iter().any(|r| r.name == rel.name) {
            return Err(LoadError::DuplicateRelation(rel.name));
        }
        self.relations.push(rel);
        Ok(self)
    }

    pub fn vertex_weights(&mut self, weights: RawVertexWeights) -> &mut Self {
        self.vertex_weights = Some(weights);
        self
    }

    pub fn build(&mut self) -> Result<Database, LoadError> {
        let dictionary = Dictionary::from_values(
            self.relations
                .iter()
                .flat_map(|r| r.rows.iter().flat_map(|(v, _)| v.iter().cloned()))
                .chain(self.vertex_weights.iter().flat_map(|m| m.keys().cloned())),
        );
        let mut relations = BTreeMap::new();
        for raw in self.relations.drain(..) {
            let tuples = raw.rows.iter().map(|(values, weight)| Tuple {
                values: values.iter().map(|v| dictionary.id(v).expect("value is in dictionary")).collect(),
                weight: *weight,
            });
            let rel = Relation::from_tuples(raw.name.clone(), raw.schema.clone(), tuples)?;
            relations.insert(raw.name, rel);
        }
        let vertex_weights = self.vertex_weights.take().map(|m| {
            m.into_iter().map(|(k, w)| (dictionary.id(&k).expect("value is in dictionary"), w)).collect()
        });
        Ok(Database { dictionary, relations, vertex_weights })
    }
}
