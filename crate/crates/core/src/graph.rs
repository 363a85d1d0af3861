//! Undirected simple graphs and their text formats.
//!
//! Node tokens from input files are mapped to dense indices `0..n` in
//! first-seen order. Every algorithm downstream works on dense indices;
//! the token table maps results back for output.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("line {line}: expected 2 node tokens, found {found}")]
    EdgeListLine { line: usize, found: usize },
    #[error("gml line {line}: {message}")]
    Gml { line: usize, message: String },
    #[error("gml: no `graph [ ... ]` block found")]
    MissingGraphBlock,
    #[error("gml: edge references undeclared node id `{0}`")]
    UndeclaredNode(String),
    #[error("edge endpoint {endpoint} out of range for {node_count} nodes")]
    EndpointOutOfRange { endpoint: usize, node_count: usize },
}

/// Immutable undirected simple graph.
///
/// Edges are stored once as `(u, v)` with `u < v`, sorted; adjacency lists are
/// sorted as well so neighborhood intersections are linear merges.
#[derive(Debug, Clone)]
pub struct Graph {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
    self_loops_dropped: usize,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.tokens == other.tokens && self.edges == other.edges
    }
}

impl Eq for Graph {}

/// Accumulates tokens and edges, applying the normalization rules
/// (duplicate collapse, self-loop removal).
#[derive(Debug, Default)]
pub struct GraphBuilder {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    edges: BTreeSet<(usize, usize)>,
    self_loops_dropped: usize,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the dense index for `token`, registering it if unseen.
    pub fn add_node(&mut self, token: &str) -> usize {
        if let Some(&i) = self.index.get(token) {
            return i;
        }
        let i = self.tokens.len();
        self.tokens.push(token.to_owned());
        self.index.insert(token.to_owned(), i);
        i
    }

    pub fn add_edge(&mut self, a: &str, b: &str) {
        let u = self.add_node(a);
        let v = self.add_node(b);
        self.add_index_edge(u, v);
    }

    fn add_index_edge(&mut self, u: usize, v: usize) {
        if u == v {
            self.self_loops_dropped += 1;
            return;
        }
        self.edges.insert((u.min(v), u.max(v)));
    }

    pub fn build(self) -> Graph {
        let n = self.tokens.len();
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in &self.edges {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Graph {
            tokens: self.tokens,
            index: self.index,
            edges: self.edges.into_iter().collect(),
            adjacency,
            self_loops_dropped: self.self_loops_dropped,
        }
    }
}

impl Graph {
    /// Builds a graph on nodes `0..node_count` whose tokens are the decimal
    /// indices themselves.
    pub fn from_edges(node_count: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut b = GraphBuilder::new();
        for i in 0..node_count {
            b.add_node(&i.to_string());
        }
        for &(u, v) in edges {
            for endpoint in [u, v] {
                if endpoint >= node_count {
                    return Err(GraphError::EndpointOutOfRange { endpoint, node_count });
                }
            }
            b.add_index_edge(u, v);
        }
        Ok(b.build())
    }

    pub fn node_count(&self) -> usize {
        self.tokens.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Sorted neighbor list of `v` (excluding `v` itself).
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.node_count() && self.adjacency[u].binary_search(&v).is_ok()
    }

    pub fn token(&self, v: usize) -> &str {
        &self.tokens[v]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Number of self-loops discarded while loading.
    pub fn self_loops_dropped(&self) -> usize {
        self.self_loops_dropped
    }

    /// Edges expressed as token pairs, order-independent. Used to compare
    /// graphs whose dense numbering may differ.
    pub fn token_edge_set(&self) -> BTreeSet<(String, String)> {
        self.edges
            .iter()
            .map(|&(u, v)| {
                let (a, b) = (self.token(u).to_owned(), self.token(v).to_owned());
                if a <= b {
                    (a, b)
                } else {
                    (b, a)
                }
            })
            .collect()
    }

    /// Number of edges with both endpoints inside each label class.
    pub fn induced_edge_counts(&self, labels: &[usize], k: usize) -> Vec<usize> {
        let mut counts = vec![0; k];
        for &(u, v) in &self.edges {
            if labels[u] == labels[v] {
                counts[labels[u]] += 1;
            }
        }
        counts
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for &(u, v) in &self.edges {
            let _ = writeln!(out, "{} {}", self.token(u), self.token(v));
        }
        out
    }

    pub fn to_gml(&self) -> String {
        let mut out = String::from("graph\n[\n  directed 0\n");
        for t in &self.tokens {
            let _ = writeln!(out, "  node\n  [\n    id {}\n  ]", gml_token(t));
        }
        for &(u, v) in &self.edges {
            let _ = writeln!(
                out,
                "  edge\n  [\n    source {}\n    target {}\n  ]",
                gml_token(self.token(u)),
                gml_token(self.token(v))
            );
        }
        out.push_str("]\n");
        out
    }

    /// Canonical JSON form: `{"nodes":[tokens...],"edges":[[u,v],...]}`.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Canonical<'a> {
            nodes: &'a [String],
            edges: &'a [(usize, usize)],
        }
        serde_json::to_string(&Canonical { nodes: &self.tokens, edges: &self.edges })
            .expect("graph serialization cannot fail")
    }
}

fn gml_token(t: &str) -> String {
    if !t.is_empty() && t.parse::<i64>().is_ok() {
        t.to_owned()
    } else {
        format!("\"{}\"", t.replace('"', "'"))
    }
}

/// Parses a whitespace-separated edge list. Blank lines and lines starting
/// with `#` or `%` are skipped.
pub fn load_edge_list(text: &str) -> Result<Graph, GraphError> {
    let mut b = GraphBuilder::new();
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(GraphError::EdgeListLine { line: lineno + 1, found: fields.len() });
        }
        b.add_edge(fields[0], fields[1]);
    }
    Ok(b.build())
}

#[derive(Debug, Clone, PartialEq)]
enum GmlToken {
    Open,
    Close,
    Word(String),
    Quoted(String),
}

fn tokenize_gml(text: &str) -> Result<Vec<(GmlToken, usize)>, GraphError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let mut line = 1;
    while let Some(&c) = chars.peek() {
        match c {
            '\n' => {
                line += 1;
                chars.next();
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '[' => {
                out.push((GmlToken::Open, line));
                chars.next();
            }
            ']' => {
                out.push((GmlToken::Close, line));
                chars.next();
            }
            '"' => {
                let start = line;
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some('"') => break,
                        Some(c) => {
                            if c == '\n' {
                                line += 1;
                            }
                            s.push(c);
                        }
                        None => {
                            return Err(GraphError::Gml {
                                line: start,
                                message: "unterminated string".into(),
                            })
                        }
                    }
                }
                out.push((GmlToken::Quoted(s), start));
            }
            _ => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '[' || c == ']' || c == '"' {
                        break;
                    }
                    s.push(c);
                    chars.next();
                }
                out.push((GmlToken::Word(s), line));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
enum GmlValue {
    Scalar(String),
    List(Vec<(String, GmlValue, usize)>),
}

struct GmlParser {
    tokens: Vec<(GmlToken, usize)>,
    pos: usize,
}

impl GmlParser {
    fn last_line(&self) -> usize {
        self.tokens.last().map_or(1, |t| t.1)
    }

    /// Parses `key value` pairs until a closing bracket (when `nested`) or EOF.
    fn parse_list(&mut self, nested: bool) -> Result<Vec<(String, GmlValue, usize)>, GraphError> {
        let mut items = Vec::new();
        loop {
            let Some((tok, line)) = self.tokens.get(self.pos).cloned() else {
                if nested {
                    return Err(GraphError::Gml {
                        line: self.last_line(),
                        message: "unbalanced `[`".into(),
                    });
                }
                return Ok(items);
            };
            self.pos += 1;
            let key = match tok {
                GmlToken::Close if nested => return Ok(items),
                GmlToken::Word(w) => w,
                other => {
                    return Err(GraphError::Gml {
                        line,
                        message: format!("expected a key, found {other:?}"),
                    })
                }
            };
            let Some((tok, vline)) = self.tokens.get(self.pos).cloned() else {
                return Err(GraphError::Gml { line, message: format!("key `{key}` has no value") });
            };
            self.pos += 1;
            let value = match tok {
                GmlToken::Open => GmlValue::List(self.parse_list(true)?),
                GmlToken::Word(w) | GmlToken::Quoted(w) => GmlValue::Scalar(w),
                GmlToken::Close => {
                    return Err(GraphError::Gml {
                        line: vline,
                        message: format!("key `{key}` has no value"),
                    })
                }
            };
            items.push((key, value, line));
        }
    }
}

fn scalar<'a>(items: &'a [(String, GmlValue, usize)], key: &str) -> Option<&'a str> {
    items.iter().find_map(|(k, v, _)| match v {
        GmlValue::Scalar(s) if k == key => Some(s.as_str()),
        _ => None,
    })
}

/// Parses the `graph [ node [ id .. ] edge [ source .. target .. ] ]` subset
/// of GML. Other keys are ignored.
pub fn load_gml(text: &str) -> Result<Graph, GraphError> {
    let mut parser = GmlParser { tokens: tokenize_gml(text)?, pos: 0 };
    let top = parser.parse_list(false)?;
    let graph = top
        .iter()
        .find_map(|(k, v, _)| match v {
            GmlValue::List(items) if k == "graph" => Some(items),
            _ => None,
        })
        .ok_or(GraphError::MissingGraphBlock)?;

    let mut b = GraphBuilder::new();
    for (key, value, line) in graph {
        if key != "node" {
            continue;
        }
        let GmlValue::List(items) = value else {
            return Err(GraphError::Gml { line: *line, message: "`node` must be a list".into() });
        };
        let id = scalar(items, "id")
            .ok_or_else(|| GraphError::Gml { line: *line, message: "node without `id`".into() })?;
        b.add_node(id);
    }
    for (key, value, line) in graph {
        if key != "edge" {
            continue;
        }
        let GmlValue::List(items) = value else {
            return Err(GraphError::Gml { line: *line, message: "`edge` must be a list".into() });
        };
        let mut ends = [0usize; 2];
        for (slot, field) in ["source", "target"].into_iter().enumerate() {
            let id = scalar(items, field).ok_or_else(|| GraphError::Gml {
                line: *line,
                message: format!("edge without `{field}`"),
            })?;
            ends[slot] = b.index.get(id).copied().ok_or_else(|| GraphError::UndeclaredNode(id.into()))?;
        }
        b.add_index_edge(ends[0], ends[1]);
    }
    Ok(b.build())
}

/// Connected-component label per node. Labels are contiguous from 0 and
/// numbered in order of each component's smallest node index.
pub fn connected_components(g: &Graph) -> Vec<usize> {
    let n = g.node_count();
    let mut labels = vec![usize::MAX; n];
    let mut next = 0;
    let mut queue = VecDeque::new();
    for start in 0..n {
        if labels[start] != usize::MAX {
            continue;
        }
        labels[start] = next;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            for &w in g.neighbors(v) {
                if labels[w] == usize::MAX {
                    labels[w] = next;
                    queue.push_back(w);
                }
            }
        }
        next += 1;
    }
    labels
}
