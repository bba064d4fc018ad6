//! Data set files: the native JSON format and plain edge lists.

use std::fmt;
use std::fs;
use std::path::Path;

use rbn_core::data::{DataError, DataSet, ObjectId, RelationSchema, Truth};
use rbn_core::formula::{Interval, RelationKind};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{path}: {source}")]
    Data { path: String, source: DataError },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    NativeJson,
    EdgeList,
}

impl Format {
    /// `.json` files are native JSON, anything else an edge list.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::NativeJson,
            _ => Format::EdgeList,
        }
    }
}

pub fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::File { path: path.display().to_string(), source })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    fs::write(path, text).map_err(|source| IoError::File { path: path.display().to_string(), source })
}

pub fn load_dataset(path: &Path) -> Result<DataSet, IoError> {
    load_dataset_as(path, Format::from_path(path))
}

pub fn load_dataset_as(path: &Path, format: Format) -> Result<DataSet, IoError> {
    let text = read_text(path)?;
    let p = path.display().to_string();
    match format {
        Format::NativeJson => parse_native(&text, &p),
        Format::EdgeList => parse_edge_list(&text, &p),
    }
}

pub fn save_dataset(path: &Path, data: &DataSet) -> Result<(), IoError> {
    write_text(path, &to_native_json(data))
}

/// A range bound: a number or one of the strings `inf` and `-inf`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum Bound {
    Num(f64),
    Inf(InfBound),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
enum InfBound {
    #[serde(rename = "inf")]
    Pos,
    #[serde(rename = "-inf")]
    Neg,
}

impl Bound {
    fn value(self) -> f64 {
        match self {
            Bound::Num(x) => x,
            Bound::Inf(InfBound::Pos) => f64::INFINITY,
            Bound::Inf(InfBound::Neg) => f64::NEG_INFINITY,
        }
    }

    fn from_value(x: f64) -> Bound {
        if x == f64::INFINITY {
            Bound::Inf(InfBound::Pos)
        } else if x == f64::NEG_INFINITY {
            Bound::Inf(InfBound::Neg)
        } else {
            Bound::Num(x)
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonRelation {
    name: String,
    arity: usize,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    range: Option<[Bound; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    learnable: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    directed: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    closed_world: Option<bool>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum InputValue {
    Bool(bool),
    Num(f64),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonInput {
    rel: String,
    args: Vec<String>,
    value: InputValue,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum ObsValue {
    Bool(bool),
    Unknown(UnknownTag),
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
enum UnknownTag {
    #[serde(rename = "unknown")]
    Unknown,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonObservation {
    rel: String,
    args: Vec<String>,
    value: ObsValue,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonDataSet {
    objects: Vec<String>,
    relations: Vec<JsonRelation>,
    #[serde(default)]
    input: Vec<JsonInput>,
    #[serde(default)]
    samples: Vec<Vec<JsonObservation>>,
}

fn kind_name(kind: RelationKind) -> &'static str {
    match kind {
        RelationKind::BooleanInput => "boolean-input",
        RelationKind::NumericInput { .. } => "numeric-input",
        RelationKind::Probabilistic => "probabilistic",
    }
}

fn parse_error(path: &str, message: impl fmt::Display) -> IoError {
    IoError::Parse { path: path.to_string(), message: message.to_string() }
}

pub fn parse_native(text: &str, path: &str) -> Result<DataSet, IoError> {
    let j: JsonDataSet = serde_json::from_str(text).map_err(|e| parse_error(path, e))?;
    let data_err = |source| IoError::Data { path: path.to_string(), source };
    let mut d = DataSet::new(j.objects.iter().cloned()).map_err(data_err)?;
    for r in &j.relations {
        let kind = match r.kind.as_str() {
            "boolean-input" => RelationKind::BooleanInput,
            "numeric-input" => {
                let range = match r.range {
                    Some([a, b]) => Interval::new(a.value(), b.value())
                        .ok_or_else(|| parse_error(path, format!("empty range for `{}`", r.name)))?,
                    None => Interval::UNBOUNDED,
                };
                RelationKind::NumericInput { range, learnable: r.learnable.unwrap_or(false) }
            }
            "probabilistic" => RelationKind::Probabilistic,
            other => return Err(parse_error(path, format!("unknown relation kind `{other}`"))),
        };
        if kind_name(kind) != "numeric-input" && (r.range.is_some() || r.learnable.is_some()) {
            return Err(parse_error(path, format!("`{}`: range and learnable apply to numeric-input relations", r.name)));
        }
        let mut schema = RelationSchema::new(r.name.clone(), r.arity, kind);
        if let Some(dir) = r.directed {
            schema.directed = dir;
        }
        if let Some(cw) = r.closed_world {
            schema.closed_world = cw;
        }
        d.add_relation(schema).map_err(data_err)?;
    }
    let ids = |d: &DataSet, args: &[String]| -> Result<Vec<ObjectId>, IoError> {
        args.iter().map(|a| d.object(a).map_err(data_err)).collect()
    };
    for i in &j.input {
        let args = ids(&d, &i.args)?;
        let v = match i.value {
            InputValue::Bool(b) => f64::from(u8::from(b)),
            InputValue::Num(x) => x,
        };
        d.set_input(&i.rel, &args, v).map_err(data_err)?;
    }
    d.set_sample_count(j.samples.len().max(1)).map_err(data_err)?;
    for (s, obs) in j.samples.iter().enumerate() {
        for o in obs {
            let args = ids(&d, &o.args)?;
            let t = match o.value {
                ObsValue::Bool(b) => Truth::from_bool(b),
                ObsValue::Unknown(_) => Truth::Unknown,
            };
            d.set_observation(s, &o.rel, &args, t).map_err(data_err)?;
        }
    }
    Ok(d)
}

pub fn to_native_json(d: &DataSet) -> String {
    let labels = |args: &[ObjectId]| args.iter().map(|&a| d.label(a).to_string()).collect::<Vec<_>>();
    let relations = d
        .relations()
        .iter()
        .map(|r| {
            let (range, learnable) = match r.kind {
                RelationKind::NumericInput { range, learnable } => {
                    (Some([Bound::from_value(range.min), Bound::from_value(range.max)]), Some(learnable))
                }
                _ => (None, None),
            };
            JsonRelation {
                name: r.name.clone(),
                arity: r.arity,
                kind: kind_name(r.kind).into(),
                range,
                learnable,
                directed: Some(r.directed),
                closed_world: Some(r.closed_world),
            }
        })
        .collect();
    let mut input = Vec::new();
    for (ri, r) in d.relations().iter().enumerate() {
        for (args, v) in d.input_atoms(ri) {
            let value = match r.kind {
                RelationKind::BooleanInput => InputValue::Bool(v != 0.0),
                _ => InputValue::Num(v),
            };
            input.push(JsonInput { rel: r.name.clone(), args: labels(args), value });
        }
    }
    let samples = d
        .samples()
        .iter()
        .map(|s| {
            let mut obs = Vec::new();
            for (ri, r) in d.relations().iter().enumerate() {
                for (args, t) in s.atoms(ri) {
                    let value = match t.known() {
                        Some(b) => ObsValue::Bool(b),
                        None => ObsValue::Unknown(UnknownTag::Unknown),
                    };
                    obs.push(JsonObservation { rel: r.name.clone(), args: labels(args), value });
                }
            }
            obs
        })
        .collect();
    let j = JsonDataSet { objects: d.labels().to_vec(), relations, input, samples };
    serde_json::to_string_pretty(&j).expect("plain data serializes")
}

/// Name of link relation `i` (zero-based) among `k`.
pub fn link_name(i: usize, k: usize) -> String {
    if k == 1 {
        "link".into()
    } else {
        format!("link{}", i + 1)
    }
}

/// Edge list: a header `#nodes N #relations K directed:d1,...,dK`, then
/// lines `rel src dst` with one-based relation and node numbers. Other
/// lines starting with `#` are comments, except `# nodes: l1 l2 ...`,
/// which names the nodes. Every ordered pair of distinct nodes is stored,
/// false unless listed.
pub fn parse_edge_list(text: &str, path: &str) -> Result<DataSet, IoError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| parse_error(path, "empty file"))?;
    let (n, directed) = parse_header(header).map_err(|m| parse_error(path, format!("line 1: {m}")))?;
    let k = directed.len();
    let mut labels: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
    let mut edges = Vec::new();
    for (no, line) in lines {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(names) = rest.trim().strip_prefix("nodes:") {
                let names: Vec<String> = names.split_whitespace().map(String::from).collect();
                if names.len() != n {
                    return Err(parse_error(path, format!("line {}: {} node names for {n} nodes", no + 1, names.len())));
                }
                labels = names;
            }
            continue;
        }
        let at = |m: String| parse_error(path, format!("line {}: {m}", no + 1));
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 {
            return Err(at(format!("expected `rel src dst`, found `{line}`")));
        }
        let num = |s: &str, max: usize, what: &str| -> Result<usize, IoError> {
            match s.parse::<usize>() {
                Ok(v) if (1..=max).contains(&v) => Ok(v - 1),
                _ => Err(at(format!("{what} `{s}` is not in 1..={max}"))),
            }
        };
        let (r, a, b) = (num(f[0], k, "relation")?, num(f[1], n, "node")?, num(f[2], n, "node")?);
        if a == b {
            return Err(at(format!("self-loop on node {}", a + 1)));
        }
        edges.push((r, a as ObjectId, b as ObjectId));
    }
    let data_err = |source| IoError::Data { path: path.to_string(), source };
    let mut d = DataSet::new(labels).map_err(data_err)?;
    for (i, &dir) in directed.iter().enumerate() {
        let s = RelationSchema::new(link_name(i, k), 2, RelationKind::Probabilistic).closed_world(true);
        d.add_relation(if dir { s } else { s.undirected() }).map_err(data_err)?;
        for a in 0..n as ObjectId {
            for b in 0..n as ObjectId {
                if a != b && (dir || a < b) {
                    d.set_observation(0, &link_name(i, k), &[a, b], Truth::False).map_err(data_err)?;
                }
            }
        }
    }
    for (r, a, b) in edges {
        d.set_observation(0, &link_name(r, k), &[a, b], Truth::True).map_err(data_err)?;
    }
    Ok(d)
}

fn parse_header(line: &str) -> Result<(usize, Vec<bool>), String> {
    let mut nodes = None;
    let mut relations = None;
    let mut directed = None;
    let mut tokens = line.split_whitespace();
    while let Some(t) = tokens.next() {
        match t {
            "#nodes" => nodes = tokens.next().and_then(|v| v.parse::<usize>().ok()),
            "#relations" => relations = tokens.next().and_then(|v| v.parse::<usize>().ok()),
            _ => {
                if let Some(flags) = t.strip_prefix("directed:") {
                    let parsed: Result<Vec<bool>, String> = flags
                        .split(',')
                        .map(|f| match f {
                            "0" => Ok(false),
                            "1" => Ok(true),
                            _ => Err(format!("bad directed flag `{f}`")),
                        })
                        .collect();
                    directed = Some(parsed?);
                } else {
                    return Err(format!("unexpected header token `{t}`"));
                }
            }
        }
    }
    let n = nodes.ok_or("missing `#nodes N`")?;
    let k = relations.ok_or("missing `#relations K`")?;
    let directed = directed.ok_or("missing `directed:` flags")?;
    if n == 0 {
        return Err("the node list is empty".into());
    }
    if k == 0 || directed.len() != k {
        return Err(format!("{} directed flags for {k} relations", directed.len()));
    }
    Ok((n, directed))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = "#nodes 4 #relations 2 directed:0,1\n# nodes: a b c d\n1 1 2\n1 3 4\n2 2 1\n";

    #[test]
    fn edge_list_stores_all_ordered_pairs() {
        let d = parse_edge_list(TOY, "toy").unwrap();
        assert_eq!(d.labels(), ["a", "b", "c", "d"]);
        let s = d.sample(0);
        let (l1, l2) = (d.relation_index("link1").unwrap(), d.relation_index("link2").unwrap());
        assert_eq!(s.atoms(l1).count(), 12);
        assert_eq!(s.atoms(l1).filter(|(_, t)| *t == Truth::True).count(), 4);
        assert_eq!(s.get(l1, &[1, 0]), Some(Truth::True));
        assert_eq!(s.get(l2, &[1, 0]), Some(Truth::True));
        assert_eq!(s.get(l2, &[0, 1]), Some(Truth::False));
        assert!(!d.relations()[l1].directed && d.relations()[l2].directed);
    }

    #[test]
    fn edge_list_errors() {
        for bad in [
            "",
            "#nodes 0 #relations 1 directed:0\n",
            "#nodes 3 #relations 2 directed:0\n",
            "#nodes 3 #relations 1 directed:0\n1 1 4\n",
            "#nodes 3 #relations 1 directed:0\n2 1 2\n",
            "#nodes 3 #relations 1 directed:0\n1 2 2\n",
            "#nodes 3 #relations 1 directed:0\n1 2\n",
            "#nodes 3 #relations 1 directed:0\n# nodes: a b\n",
        ] {
            assert!(parse_edge_list(bad, "bad").is_err(), "{bad:?}");
        }
    }

    #[test]
    fn native_json_round_trip() {
        let text = r#"{
            "objects": ["s1", "s2", "s3"],
            "relations": [
                {"name": "upstream", "arity": 2, "kind": "boolean-input"},
                {"name": "invdistance", "arity": 2, "kind": "numeric-input", "range": [0, "inf"], "learnable": true},
                {"name": "polluted", "arity": 1, "kind": "probabilistic"}
            ],
            "input": [
                {"rel": "upstream", "args": ["s1", "s2"], "value": true},
                {"rel": "invdistance", "args": ["s1", "s2"], "value": 0.5}
            ],
            "samples": [
                [{"rel": "polluted", "args": ["s1"], "value": true}, {"rel": "polluted", "args": ["s2"], "value": "unknown"}],
                [{"rel": "polluted", "args": ["s3"], "value": false}]
            ]
        }"#;
        let d = parse_native(text, "t").unwrap();
        assert_eq!(d.samples().len(), 2);
        let inv = d.relation_index("invdistance").unwrap();
        assert_eq!(d.input_value(inv, &[0, 1]), Some(0.5));
        assert!(matches!(d.relations()[inv].kind, RelationKind::NumericInput { learnable: true, range } if range == Interval::NON_NEGATIVE));
        let again = parse_native(&to_native_json(&d), "t").unwrap();
        assert_eq!(again, d);
    }

    #[test]
    fn native_json_errors() {
        let base = |rel: &str, input: &str| {
            format!(r#"{{"objects": ["a"], "relations": [{rel}], "input": [{input}], "samples": []}}"#)
        };
        let num = r#"{"name": "x", "arity": 1, "kind": "numeric-input", "range": [0, 1]}"#;
        assert!(parse_native(&base(num, r#"{"rel": "x", "args": ["a"], "value": 0.5}"#), "t").is_ok());
        assert!(parse_native(&base(num, r#"{"rel": "x", "args": ["a"], "value": 2}"#), "t").is_err());
        assert!(parse_native(&base(num, r#"{"rel": "x", "args": ["b"], "value": 0.5}"#), "t").is_err());
        assert!(parse_native(&base(r#"{"name": "x", "arity": 1, "kind": "weird"}"#, ""), "t").is_err());
        assert!(parse_native(r#"{"objects": [], "relations": []}"#, "t").is_err());
        assert!(parse_native("{", "t").is_err());
    }
}
