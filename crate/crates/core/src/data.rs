//! Relational data: an object domain, valuations of input relations and one
//! or more observation samples of probabilistic relations.
//!
//! Boolean input relations are closed-world (absent atoms are false).
//! Probabilistic atoms are stored explicitly as true, false or unknown; the
//! likelihood ranges over exactly the stored atoms. Undirected binary
//! relations are stored as their symmetric closure.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use hashbrown::HashMap;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::formula::{Interval, RelationKind};

pub type ObjectId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Truth {
    True,
    False,
    Unknown,
}

impl Truth {
    pub fn from_bool(b: bool) -> Truth {
        if b {
            Truth::True
        } else {
            Truth::False
        }
    }

    pub fn known(self) -> Option<bool> {
        match self {
            Truth::True => Some(true),
            Truth::False => Some(false),
            Truth::Unknown => None,
        }
    }
}

/// Result of [`DataSet::get_value`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Value {
    Bool(bool),
    Real(f64),
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundAtom {
    pub relation: String,
    pub args: Vec<ObjectId>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelationSchema {
    pub name: String,
    pub arity: usize,
    pub kind: RelationKind,
    /// Only meaningful for binary relations; undirected ones are stored
    /// symmetrically.
    pub directed: bool,
    /// Absent atoms read as false instead of unknown.
    pub closed_world: bool,
}

impl RelationSchema {
    pub fn new(name: impl Into<String>, arity: usize, kind: RelationKind) -> RelationSchema {
        RelationSchema {
            name: name.into(),
            arity,
            kind,
            directed: true,
            closed_world: matches!(kind, RelationKind::BooleanInput),
        }
    }

    pub fn undirected(mut self) -> RelationSchema {
        self.directed = false;
        self
    }

    pub fn closed_world(mut self, closed: bool) -> RelationSchema {
        self.closed_world = closed;
        self
    }

    /// Binary and undirected.
    pub fn symmetric(&self) -> bool {
        self.arity == 2 && !self.directed
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum DataError {
    #[error("the object domain is empty")]
    EmptyDomain,
    #[error("duplicate object label `{0}`")]
    DuplicateObject(String),
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("object id {0} is outside the domain")]
    DanglingObject(ObjectId),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("relation `{0}` is declared twice")]
    DuplicateRelation(String),
    #[error("`{name}` expects {expected} arguments, found {found}")]
    ArityMismatch { name: String, expected: usize, found: usize },
    #[error("value {value} of `{relation}` lies outside its range {range}")]
    OutOfRange { relation: String, value: f64, range: Interval },
    #[error("relation `{0}` is not an input relation")]
    NotInput(String),
    #[error("relation `{0}` is not probabilistic")]
    NotProbabilistic(String),
    #[error("Boolean relation `{0}` takes values 0 or 1")]
    NotBoolean(String),
    #[error("sample index {0} out of range")]
    NoSuchSample(usize),
    #[error("a data set needs at least one sample")]
    NoSamples,
    #[error("sub-sampling percentage {0} is not in (0, 100]")]
    BadPercentage(f64),
}

/// Truth values of probabilistic atoms in one joint observation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Sample {
    atoms: Vec<BTreeMap<Vec<ObjectId>, Truth>>,
}

impl Sample {
    pub fn get(&self, relation: usize, args: &[ObjectId]) -> Option<Truth> {
        self.atoms.get(relation)?.get(args).copied()
    }

    /// Stored atoms of one relation, in argument order.
    pub fn atoms(&self, relation: usize) -> impl Iterator<Item = (&[ObjectId], Truth)> + '_ {
        self.atoms.get(relation).into_iter().flatten().map(|(k, v)| (k.as_slice(), *v))
    }

    pub fn len(&self) -> usize {
        self.atoms.iter().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn slot(&mut self, relation: usize) -> &mut BTreeMap<Vec<ObjectId>, Truth> {
        if self.atoms.len() <= relation {
            self.atoms.resize_with(relation + 1, BTreeMap::new);
        }
        &mut self.atoms[relation]
    }
}

/// Objects, input valuations and observation samples. Cheap to share
/// read-only; the mutating methods are for construction and loaders.
#[derive(Clone, Debug, PartialEq)]
pub struct DataSet {
    labels: Vec<String>,
    index: HashMap<String, ObjectId>,
    relations: Vec<RelationSchema>,
    input: Vec<BTreeMap<Vec<ObjectId>, f64>>,
    samples: Vec<Sample>,
}

impl DataSet {
    /// A data set over `labels` with no relations and one empty sample.
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<DataSet, DataError> {
        let mut d = DataSet {
            labels: Vec::new(),
            index: HashMap::new(),
            relations: Vec::new(),
            input: Vec::new(),
            samples: alloc::vec![Sample::default()],
        };
        for l in labels {
            d.add_object(l)?;
        }
        if d.labels.is_empty() {
            return Err(DataError::EmptyDomain);
        }
        Ok(d)
    }

    pub fn add_object(&mut self, label: impl Into<String>) -> Result<ObjectId, DataError> {
        let label = label.into();
        if self.index.contains_key(&label) {
            return Err(DataError::DuplicateObject(label));
        }
        let id = self.labels.len() as ObjectId;
        self.index.insert(label.clone(), id);
        self.labels.push(label);
        Ok(id)
    }

    pub fn num_objects(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, id: ObjectId) -> &str {
        &self.labels[id as usize]
    }

    pub fn object(&self, label: &str) -> Result<ObjectId, DataError> {
        self.index.get(label).copied().ok_or_else(|| DataError::UnknownObject(String::from(label)))
    }

    pub fn add_relation(&mut self, schema: RelationSchema) -> Result<usize, DataError> {
        if self.relation_index(&schema.name).is_some() {
            return Err(DataError::DuplicateRelation(schema.name));
        }
        self.relations.push(schema);
        self.input.push(BTreeMap::new());
        Ok(self.relations.len() - 1)
    }

    pub fn relations(&self) -> &[RelationSchema] {
        &self.relations
    }

    pub fn relation_index(&self, name: &str) -> Option<usize> {
        self.relations.iter().position(|r| r.name == name)
    }

    fn relation_checked(&self, name: &str, args: &[ObjectId]) -> Result<usize, DataError> {
        let r = self.relation_index(name).ok_or_else(|| DataError::UnknownRelation(String::from(name)))?;
        let schema = &self.relations[r];
        if schema.arity != args.len() {
            return Err(DataError::ArityMismatch {
                name: schema.name.clone(),
                expected: schema.arity,
                found: args.len(),
            });
        }
        if let Some(&o) = args.iter().find(|&&o| o as usize >= self.labels.len()) {
            return Err(DataError::DanglingObject(o));
        }
        Ok(r)
    }

    /// Sets an input atom. Boolean relations take 0 or 1; numeric values
    /// must lie in the declared range.
    pub fn set_input(&mut self, relation: &str, args: &[ObjectId], value: f64) -> Result<(), DataError> {
        let r = self.relation_checked(relation, args)?;
        let schema = &self.relations[r];
        match schema.kind {
            RelationKind::BooleanInput => {
                if value != 0.0 && value != 1.0 {
                    return Err(DataError::NotBoolean(schema.name.clone()));
                }
            }
            RelationKind::NumericInput { range, .. } => {
                if !range.contains(value) {
                    return Err(DataError::OutOfRange { relation: schema.name.clone(), value, range });
                }
            }
            RelationKind::Probabilistic => return Err(DataError::NotInput(schema.name.clone())),
        }
        let symmetric = schema.symmetric();
        self.input[r].insert(args.to_vec(), value);
        if symmetric {
            self.input[r].insert(alloc::vec![args[1], args[0]], value);
        }
        Ok(())
    }

    pub fn set_sample_count(&mut self, n: usize) -> Result<(), DataError> {
        if n == 0 {
            return Err(DataError::NoSamples);
        }
        self.samples.resize_with(n, Sample::default);
        Ok(())
    }

    pub fn set_observation(
        &mut self,
        sample: usize,
        relation: &str,
        args: &[ObjectId],
        value: Truth,
    ) -> Result<(), DataError> {
        let r = self.relation_checked(relation, args)?;
        if !self.relations[r].is_probabilistic() {
            return Err(DataError::NotProbabilistic(String::from(relation)));
        }
        let symmetric = self.relations[r].symmetric();
        let s = self.samples.get_mut(sample).ok_or(DataError::NoSuchSample(sample))?;
        s.slot(r).insert(args.to_vec(), value);
        if symmetric {
            s.slot(r).insert(alloc::vec![args[1], args[0]], value);
        }
        Ok(())
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn sample(&self, i: usize) -> &Sample {
        &self.samples[i]
    }

    /// Stored input value, without closed-world completion.
    pub fn input_value(&self, relation: usize, args: &[ObjectId]) -> Option<f64> {
        self.input.get(relation)?.get(args).copied()
    }

    /// Stored input atoms of one relation, in argument order.
    pub fn input_atoms(&self, relation: usize) -> impl Iterator<Item = (&[ObjectId], f64)> + '_ {
        self.input[relation].iter().map(|(k, v)| (k.as_slice(), *v))
    }

    /// Stored value, or the closed-world default.
    pub fn get_value(&self, atom: &GroundAtom, sample: usize) -> Result<Value, DataError> {
        let r = self.relation_checked(&atom.relation, &atom.args)?;
        let schema = &self.relations[r];
        Ok(match schema.kind {
            RelationKind::BooleanInput => Value::Bool(self.input_value(r, &atom.args).is_some_and(|v| v != 0.0)),
            RelationKind::NumericInput { .. } => {
                self.input_value(r, &atom.args).map_or(Value::Unknown, Value::Real)
            }
            RelationKind::Probabilistic => {
                let s = self.samples.get(sample).ok_or(DataError::NoSuchSample(sample))?;
                match s.get(r, &atom.args) {
                    Some(Truth::True) => Value::Bool(true),
                    Some(Truth::False) => Value::Bool(false),
                    Some(Truth::Unknown) => Value::Unknown,
                    None if schema.closed_world => Value::Bool(false),
                    None => Value::Unknown,
                }
            }
        })
    }

    /// Replaces all samples.
    pub fn with_samples(&self, samples: Vec<Sample>) -> Result<DataSet, DataError> {
        if samples.is_empty() {
            return Err(DataError::NoSamples);
        }
        let mut d = self.clone();
        d.samples = samples;
        Ok(d)
    }

    /// Keeps every true atom and a uniform random `ceil(q%)` share of the
    /// false atoms of each listed relation (independently per relation and
    /// sample); the other false atoms become unknown. Undirected relations
    /// are sampled by unordered pair so that both directions agree.
    pub fn subsample_false_links(&self, relations: &[&str], q: f64, seed: u64) -> Result<DataSet, DataError> {
        if !(q > 0.0 && q <= 100.0) {
            return Err(DataError::BadPercentage(q));
        }
        let mut rel_ids = Vec::new();
        for name in relations {
            let r = self.relation_index(name).ok_or_else(|| DataError::UnknownRelation(String::from(*name)))?;
            if !self.relations[r].is_probabilistic() {
                return Err(DataError::NotProbabilistic(String::from(*name)));
            }
            rel_ids.push(r);
        }
        let mut out = self.clone();
        if q == 100.0 {
            return Ok(out);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for sample in &mut out.samples {
            for &r in &rel_ids {
                let symmetric = self.relations[r].symmetric();
                let falses: Vec<Vec<ObjectId>> = sample
                    .atoms(r)
                    .filter(|(a, t)| *t == Truth::False && (!symmetric || a[0] <= a[1]))
                    .map(|(a, _)| a.to_vec())
                    .collect();
                let keep = libm::ceil(q / 100.0 * falses.len() as f64) as usize;
                let mut kept = alloc::vec![false; falses.len()];
                for i in rand::seq::index::sample(&mut rng, falses.len(), keep.min(falses.len())) {
                    kept[i] = true;
                }
                let slot = sample.slot(r);
                for (args, k) in falses.into_iter().zip(kept) {
                    if !k {
                        if symmetric {
                            slot.insert(alloc::vec![args[1], args[0]], Truth::Unknown);
                        }
                        slot.insert(args, Truth::Unknown);
                    }
                }
            }
        }
        Ok(out)
    }
}

impl RelationSchema {
    pub fn is_probabilistic(&self) -> bool {
        matches!(self.kind, RelationKind::Probabilistic)
    }
}
