//! Edge-list and label-CSV ingestion.
//!
//! Edge files hold one edge per line, two integer ids separated by whitespace
//! or a comma. Label files are CSV `id,group`. A leading non-numeric line in
//! either file is treated as a header; blank lines and lines starting with `#`
//! or `%` are ignored. Only labeled nodes end up in the graph; edges are
//! treated as undirected.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};

use crate::error::GraphError;
use crate::graph::{Color, LabeledGraph, NodeId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSpec {
    /// Group token mapped to [`Color::Red`].
    pub minority: String,
    /// When set, only nodes carrying this token (or the minority token) are
    /// kept; everything else counts as unlabeled.
    #[serde(default)]
    pub majority: Option<String>,
    /// Zero-based CSV column holding the group token.
    #[serde(default = "default_label_column")]
    pub label_column: usize,
}

fn default_label_column() -> usize {
    1
}

impl LabelSpec {
    pub fn new(minority: impl Into<String>) -> Self {
        Self {
            minority: minority.into(),
            majority: None,
            label_column: 1,
        }
    }

    pub fn with_majority(mut self, majority: impl Into<String>) -> Self {
        self.majority = Some(majority.into());
        self
    }

    fn classify(&self, token: &str) -> Option<Color> {
        if token == self.minority {
            Some(Color::Red)
        } else {
            match &self.majority {
                Some(m) if token != m => None,
                _ => Some(Color::Blue),
            }
        }
    }
}

/// Loader diagnostics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct LoadReport {
    pub nodes: usize,
    pub edges: usize,
    pub duplicates_dropped: usize,
    pub self_loops_dropped: usize,
    /// Edges with at least one unlabeled endpoint.
    pub skipped_edges: usize,
    /// Label rows whose token was neither the minority nor the majority.
    pub excluded_labels: usize,
}

/// A parsed label table: original ids, in file order, with their colors.
#[derive(Debug, Clone, Default)]
pub struct Labels {
    ids: Vec<u64>,
    colors: Vec<Color>,
    excluded: usize,
}

impl Labels {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

pub fn load_edge_list(
    edge_path: impl AsRef<Path>,
    label_path: impl AsRef<Path>,
    spec: &LabelSpec,
) -> Result<(LabeledGraph, LoadReport), GraphError> {
    let edge_path = edge_path.as_ref();
    let label_path = label_path.as_ref();
    let labels = parse_labels(open(label_path)?, spec).map_err(|e| with_path(e, label_path))?;
    let (graph, report) =
        build_graph(&labels, BufReader::new(open(edge_path)?)).map_err(|e| with_path(e, edge_path))?;
    info!(
        "loaded {}: nodes={} edges={} duplicates_dropped={} self_loops_dropped={} skipped_edges={}",
        edge_path.display(),
        report.nodes,
        report.edges,
        report.duplicates_dropped,
        report.self_loops_dropped,
        report.skipped_edges
    );
    Ok((graph, report))
}

fn open(path: &Path) -> Result<File, GraphError> {
    File::open(path).map_err(|source| GraphError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn with_path(e: GraphError, path: &Path) -> GraphError {
    match e {
        GraphError::EmptyFile(p) if p.as_os_str().is_empty() => GraphError::EmptyFile(path.to_path_buf()),
        other => other,
    }
}

fn is_comment(line: &str) -> bool {
    line.is_empty() || line.starts_with('#') || line.starts_with('%')
}

fn parse_id(token: &str, line: usize) -> Result<u64, GraphError> {
    let token = token.trim().trim_matches('"');
    if !token.is_empty() && token.bytes().all(|b| b.is_ascii_digit()) {
        token
            .parse::<u64>()
            .map_err(|_| GraphError::IdOverflow { id: u64::MAX })
    } else {
        Err(GraphError::Parse {
            line,
            message: format!("invalid node id `{token}`"),
        })
    }
}

pub fn parse_labels<R: Read>(reader: R, spec: &LabelSpec) -> Result<Labels, GraphError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut labels = Labels::default();
    let mut seen = HashSet::new();
    let mut first = true;
    for (idx, record) in rdr.records().enumerate() {
        let line = idx + 1;
        let record = record.map_err(|e| GraphError::Parse {
            line,
            message: e.to_string(),
        })?;
        let id_field = record.get(0).unwrap_or("");
        if id_field.is_empty() {
            continue;
        }
        let id = match parse_id(id_field, line) {
            Ok(id) => id,
            Err(GraphError::Parse { .. }) if first => {
                first = false;
                continue;
            }
            Err(e) => return Err(e),
        };
        first = false;
        let token = record.get(spec.label_column).ok_or_else(|| GraphError::Parse {
            line,
            message: format!("missing label column {}", spec.label_column),
        })?;
        if !seen.insert(id) {
            return Err(GraphError::Parse {
                line,
                message: format!("node {id} labeled twice"),
            });
        }
        match spec.classify(token) {
            Some(color) => {
                labels.ids.push(id);
                labels.colors.push(color);
            }
            None => labels.excluded += 1,
        }
    }
    if labels.is_empty() && labels.excluded == 0 {
        return Err(GraphError::EmptyFile(PathBuf::new()));
    }
    if labels.ids.len() > NodeId::MAX as usize {
        return Err(GraphError::IdOverflow {
            id: labels.ids.len() as u64,
        });
    }
    Ok(labels)
}

/// Builds the label-induced graph from an edge-list reader.
pub fn build_graph<R: BufRead>(labels: &Labels, reader: R) -> Result<(LabeledGraph, LoadReport), GraphError> {
    let mut graph = LabeledGraph::with_capacity(labels.len());
    let mut dense: HashMap<u64, NodeId> = HashMap::with_capacity(labels.len());
    for (&id, &color) in labels.ids.iter().zip(&labels.colors) {
        let node = graph.add_node(color)?;
        dense.insert(id, node);
    }

    let mut report = LoadReport {
        excluded_labels: labels.excluded,
        ..LoadReport::default()
    };
    let mut seen_edges: HashSet<u64> = HashSet::new();
    let mut records = 0usize;
    let mut first = true;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| GraphError::Io {
            path: PathBuf::new(),
            source,
        })?;
        let line = line.trim();
        if is_comment(line) {
            continue;
        }
        let mut fields = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty());
        let (a, b) = match (fields.next(), fields.next()) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(GraphError::Parse {
                    line: line_no,
                    message: "expected two node ids".into(),
                })
            }
        };
        let ids = parse_id(a, line_no).and_then(|a| parse_id(b, line_no).map(|b| (a, b)));
        let (a, b) = match ids {
            Ok(pair) => pair,
            Err(GraphError::Parse { .. }) if first => {
                first = false;
                continue;
            }
            Err(e) => return Err(e),
        };
        first = false;
        records += 1;
        let (Some(&u), Some(&v)) = (dense.get(&a), dense.get(&b)) else {
            report.skipped_edges += 1;
            continue;
        };
        if u == v {
            report.self_loops_dropped += 1;
            continue;
        }
        let key = (u.min(v) as u64) << 32 | u.max(v) as u64;
        if !seen_edges.insert(key) {
            report.duplicates_dropped += 1;
            continue;
        }
        graph.push_edge(u, v);
    }
    if records == 0 {
        return Err(GraphError::EmptyFile(PathBuf::new()));
    }
    report.nodes = graph.node_count();
    report.edges = graph.edge_count();
    Ok((graph, report))
}
