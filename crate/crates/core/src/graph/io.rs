//! JSON and Pajek encodings of an [`InteractionGraph`].
//!
//! Both writers are deterministic: vertices in id order, edges sorted by
//! `(low id, high id)`. Only the undirected structure and the aggregated
//! amounts are persisted; directed counters live with the raw transactions.

use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{canonicalize_address, looks_like_ethereum, Chain, InteractionGraph, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    Json,
    Pajek,
}

impl GraphFormat {
    pub fn extension(self) -> &'static str {
        match self {
            GraphFormat::Json => "json",
            GraphFormat::Pajek => "pajek",
        }
    }

    /// Guesses the format from a file extension (`.json`, `.net`, `.pajek`).
    pub fn from_path(path: &Path) -> Option<GraphFormat> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "json" => Some(GraphFormat::Json),
            "net" | "pajek" | "paj" => Some(GraphFormat::Pajek),
            _ => None,
        }
    }
}

impl fmt::Display for GraphFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

impl FromStr for GraphFormat {
    type Err = ImportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(GraphFormat::Json),
            "pajek" | "net" => Ok(GraphFormat::Pajek),
            other => Err(ImportError::UnknownFormat(other.to_string())),
        }
    }
}

#[derive(Debug, Error)]
#[error("cannot write {path}: {source}")]
pub struct ExportError {
    pub path: PathBuf,
    #[source]
    pub source: io::Error,
}

#[derive(Debug, Error)]
pub enum ImportError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown graph format {0:?} (expected json or pajek)")]
    UnknownFormat(String),
}

#[derive(Serialize)]
struct JsonGraphOut<'a> {
    chain: Chain,
    vertices: Vec<&'a str>,
    edges: Vec<(&'a str, &'a str, u128)>,
}

#[derive(Deserialize)]
struct JsonGraphIn {
    #[serde(default)]
    chain: Option<Chain>,
    vertices: Vec<String>,
    edges: Vec<(String, String, u128)>,
}

pub fn write_json<W: Write>(graph: &InteractionGraph, mut out: W) -> io::Result<()> {
    let doc = JsonGraphOut {
        chain: graph.chain(),
        vertices: graph.keys().map(|k| k.as_str()).collect(),
        edges: graph
            .edges()
            .map(|(a, b, d)| (graph.key(a).as_str(), graph.key(b).as_str(), d.aggregated_amount))
            .collect(),
    };
    serde_json::to_writer(&mut out, &doc)?;
    out.write_all(b"\n")?;
    out.flush()
}

pub fn write_pajek<W: Write>(graph: &InteractionGraph, mut out: W) -> io::Result<()> {
    writeln!(out, "*Vertices {}", graph.node_count())?;
    for (id, key) in graph.node_ids().zip(graph.keys()) {
        writeln!(out, "{} \"{}\"", id, key)?;
    }
    writeln!(out, "*Edges")?;
    for (a, b, d) in graph.edges() {
        writeln!(out, "{} {} {}", a, b, d.aggregated_amount)?;
    }
    out.flush()
}

pub fn export_json(graph: &InteractionGraph, path: &Path) -> Result<(), ExportError> {
    export_with(path, |w| write_json(graph, w))
}

pub fn export_pajek(graph: &InteractionGraph, path: &Path) -> Result<(), ExportError> {
    export_with(path, |w| write_pajek(graph, w))
}

fn export_with<F>(path: &Path, write: F) -> Result<(), ExportError>
where
    F: FnOnce(&mut BufWriter<File>) -> io::Result<()>,
{
    let wrap = |source| ExportError {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(wrap)?;
    let mut out = BufWriter::new(file);
    write(&mut out).map_err(wrap)?;
    out.into_inner()
        .map_err(|e| wrap(e.into_error()))?
        .sync_all()
        .map_err(wrap)
}

pub fn import_graph(path: &Path, format: GraphFormat) -> Result<InteractionGraph, ImportError> {
    let file = File::open(path).map_err(|source| ImportError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = BufReader::new(file);
    match format {
        GraphFormat::Json => read_json(reader, path),
        GraphFormat::Pajek => read_pajek(reader, path),
    }
}

fn parse_error(path: &Path, line: usize, column: usize, message: impl Into<String>) -> ImportError {
    ImportError::Parse {
        path: path.to_path_buf(),
        line,
        column,
        message: message.into(),
    }
}

/// Chain implied by the key shapes: ethereum when every key is a canonical
/// hex address, bitcoin otherwise.
fn infer_chain<'a>(mut keys: impl Iterator<Item = &'a str>) -> Chain {
    let mut any = false;
    let all_hex = keys.all(|k| {
        any = true;
        looks_like_ethereum(k)
    });
    if any && all_hex {
        Chain::Ethereum
    } else {
        Chain::Bitcoin
    }
}

pub fn read_json<R: io::Read>(reader: R, path: &Path) -> Result<InteractionGraph, ImportError> {
    let doc: JsonGraphIn =
        serde_json::from_reader(reader).map_err(|e| parse_error(path, e.line(), e.column(), e.to_string()))?;
    let chain = doc
        .chain
        .unwrap_or_else(|| infer_chain(doc.vertices.iter().map(String::as_str)));
    let mut graph = InteractionGraph::new(chain);
    for (i, raw) in doc.vertices.iter().enumerate() {
        let key =
            canonicalize_address(raw, chain).map_err(|e| parse_error(path, 0, 0, format!("vertex {}: {e}", i + 1)))?;
        let before = graph.node_count();
        graph.add_node(key);
        if graph.node_count() == before {
            return Err(parse_error(path, 0, 0, format!("duplicate vertex {raw:?}")));
        }
    }
    for (i, (a, b, amount)) in doc.edges.iter().enumerate() {
        let lookup = |raw: &str| {
            canonicalize_address(raw, chain)
                .ok()
                .and_then(|k| graph.node_id(k.as_str()))
                .ok_or_else(|| parse_error(path, 0, 0, format!("edge {} names unlisted vertex {raw:?}", i + 1)))
        };
        let (ia, ib) = (lookup(a)?, lookup(b)?);
        insert_checked(&mut graph, ia, ib, *amount)
            .map_err(|m| parse_error(path, 0, 0, format!("edge {}: {m}", i + 1)))?;
    }
    Ok(graph)
}

fn insert_checked(graph: &mut InteractionGraph, a: NodeId, b: NodeId, amount: u128) -> Result<(), String> {
    if a == b {
        return Err(format!("self-loop on vertex {a}"));
    }
    if graph.edge(a, b).is_some() {
        return Err(format!("duplicate edge {a} {b}"));
    }
    graph.bump_edge(a, b, amount, 1);
    Ok(())
}

pub fn read_pajek<R: BufRead>(reader: R, path: &Path) -> Result<InteractionGraph, ImportError> {
    let mut lines = reader
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !matches!(l, Ok(s) if s.trim().is_empty()));

    let mut next_line = |expect: &str| -> Result<Option<(usize, String)>, ImportError> {
        match lines.next() {
            None => Ok(None),
            Some((n, Ok(s))) => Ok(Some((n, s.trim_end_matches('\r').to_string()))),
            Some((n, Err(e))) => Err(parse_error(path, n, 1, format!("{expect}: {e}"))),
        }
    };

    let (n, header) = next_line("header")?.ok_or_else(|| parse_error(path, 1, 1, "empty file, expected *Vertices"))?;
    let mut parts = header.split_whitespace();
    let tag = parts.next().unwrap_or_default();
    if !tag.eq_ignore_ascii_case("*vertices") {
        return Err(parse_error(path, n, 1, format!("expected *Vertices, found {tag:?}")));
    }
    let count: usize = parts
        .next()
        .and_then(|c| c.parse().ok())
        .ok_or_else(|| parse_error(path, n, tag.len() + 2, "missing or invalid vertex count"))?;

    let mut keys = Vec::with_capacity(count);
    for expected in 1..=count {
        let (n, line) =
            next_line("vertex")?.ok_or_else(|| parse_error(path, n, 1, format!("expected {count} vertices")))?;
        let (id, rest) = line
            .trim_start()
            .split_once(char::is_whitespace)
            .ok_or_else(|| parse_error(path, n, 1, "expected `<id> \"<key>\"`"))?;
        if id.parse::<usize>().ok() != Some(expected) {
            return Err(parse_error(
                path,
                n,
                1,
                format!("expected vertex id {expected}, found {id:?}"),
            ));
        }
        let rest = rest.trim();
        let key = rest.strip_prefix('"').and_then(|r| r.strip_suffix('"')).unwrap_or(rest);
        keys.push((n, key.to_string()));
    }

    let chain = infer_chain(keys.iter().map(|(_, k)| k.as_str()));
    let mut graph = InteractionGraph::new(chain);
    for (n, raw) in &keys {
        let key = canonicalize_address(raw, chain).map_err(|e| parse_error(path, *n, 1, e.to_string()))?;
        let before = graph.node_count();
        graph.add_node(key);
        if graph.node_count() == before {
            return Err(parse_error(path, *n, 1, format!("duplicate vertex {raw:?}")));
        }
    }

    match next_line("edges header")? {
        None => return Ok(graph),
        Some((n, line)) => {
            let tag = line.split_whitespace().next().unwrap_or_default();
            if !(tag.eq_ignore_ascii_case("*edges") || tag.eq_ignore_ascii_case("*arcs")) {
                return Err(parse_error(path, n, 1, format!("expected *Edges, found {tag:?}")));
            }
        }
    }

    while let Some((n, line)) = next_line("edge")? {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if !(2..=3).contains(&fields.len()) {
            return Err(parse_error(path, n, 1, "expected `<i> <j> <amount>`"));
        }
        let endpoint = |pos: usize| -> Result<NodeId, ImportError> {
            fields[pos]
                .parse::<u32>()
                .ok()
                .and_then(NodeId::new)
                .filter(|id| graph.contains(*id))
                .ok_or_else(|| parse_error(path, n, 1, format!("unknown vertex id {:?}", fields[pos])))
        };
        let (a, b) = (endpoint(0)?, endpoint(1)?);
        let amount = match fields.get(2) {
            Some(w) => w
                .parse::<u128>()
                .map_err(|_| parse_error(path, n, 1, format!("invalid amount {w:?}")))?,
            None => 0,
        };
        insert_checked(&mut graph, a, b, amount).map_err(|m| parse_error(path, n, 1, m))?;
    }
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Transaction;

    fn btc(s: &str) -> crate::graph::AddressKey {
        canonicalize_address(s, Chain::Bitcoin).unwrap()
    }

    fn two_node() -> InteractionGraph {
        let mut g = InteractionGraph::new(Chain::Bitcoin);
        g.add_transaction(&Transaction {
            sender: Some(btc("A")),
            recipient: btc("B"),
            amount: 8,
            block_height: 1,
            timestamp: 1,
        });
        g
    }

    fn pajek_string(g: &InteractionGraph) -> String {
        let mut buf = Vec::new();
        write_pajek(g, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    fn json_string(g: &InteractionGraph) -> String {
        let mut buf = Vec::new();
        write_json(g, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn pajek_golden() {
        assert_eq!(
            pajek_string(&two_node()),
            "*Vertices 2\n1 \"A\"\n2 \"B\"\n*Edges\n1 2 8\n"
        );
        assert_eq!(
            pajek_string(&InteractionGraph::new(Chain::Bitcoin)),
            "*Vertices 0\n*Edges\n"
        );
    }

    #[test]
    fn pajek_path_edges() {
        let mut g = InteractionGraph::new(Chain::Bitcoin);
        for (s, r, v) in [("A", "B", 4), ("C", "B", 7)] {
            g.add_transaction(&Transaction {
                sender: Some(btc(s)),
                recipient: btc(r),
                amount: v,
                block_height: 0,
                timestamp: 0,
            });
        }
        let text = pajek_string(&g);
        let edges: Vec<&str> = text.split("*Edges\n").nth(1).unwrap().lines().collect();
        assert_eq!(edges, ["1 2 4", "2 3 7"]);
    }

    #[test]
    fn json_golden() {
        assert_eq!(
            json_string(&InteractionGraph::new(Chain::Ethereum)),
            "{\"chain\":\"ethereum\",\"vertices\":[],\"edges\":[]}\n"
        );
        assert_eq!(
            json_string(&two_node()),
            "{\"chain\":\"bitcoin\",\"vertices\":[\"A\",\"B\"],\"edges\":[[\"A\",\"B\",8]]}\n"
        );
    }

    #[test]
    fn json_amounts_beyond_u64() {
        let mut g = two_node();
        let (a, b) = (NodeId::new(1).unwrap(), NodeId::new(2).unwrap());
        g.bump_edge(a, b, u128::from(u64::MAX) * 1000, 1);
        let text = json_string(&g);
        let back = read_json(text.as_bytes(), Path::new("mem")).unwrap();
        assert!(back.same_structure(&g));
    }

    #[test]
    fn pajek_reads_back() {
        let g = read_pajek(
            "*Vertices 2\n1 \"A\"\n2 \"B\"\n*Edges\n1 2 8\n".as_bytes(),
            Path::new("mem"),
        )
        .unwrap();
        assert!(g.same_structure(&two_node()));
        assert_eq!(g.chain(), Chain::Bitcoin);
    }

    #[test]
    fn pajek_tolerates_crlf_and_blank_lines() {
        let g = read_pajek(
            "*vertices 2\r\n1 \"A\"\r\n\r\n2 \"B\"\r\n*edges\r\n1 2 8\r\n".as_bytes(),
            Path::new("mem"),
        )
        .unwrap();
        assert!(g.same_structure(&two_node()));
    }

    #[test]
    fn ethereum_inferred_from_keys() {
        let text = format!(
            "*Vertices 2\n1 \"0x{}\"\n2 \"0x{}\"\n*Edges\n1 2 1\n",
            "a".repeat(40),
            "b".repeat(40)
        );
        let g = read_pajek(text.as_bytes(), Path::new("mem")).unwrap();
        assert_eq!(g.chain(), Chain::Ethereum);
    }

    #[test]
    fn pajek_errors_carry_line() {
        let cases = [
            ("", 1),
            ("*Vertices x\n", 1),
            ("*Vertices 2\n1 \"A\"\n", 1),
            ("*Vertices 1\n2 \"A\"\n", 2),
            ("*Vertices 2\n1 \"A\"\n2 \"B\"\n*Edges\n1 3 5\n", 5),
            ("*Vertices 2\n1 \"A\"\n2 \"B\"\n*Edges\n1 1 5\n", 5),
            ("*Vertices 2\n1 \"A\"\n2 \"B\"\n*Edges\n1 2 5\n2 1 5\n", 6),
            ("*Vertices 2\n1 \"A\"\n2 \"B\"\n*Edges\n1 2 -5\n", 5),
            ("*Vertices 2\n1 \"A\"\n2 \"A\"\n", 3),
            ("*Vertices 1\n1 \"A\"\n*Matrix\n", 3),
        ];
        for (text, want) in cases {
            match read_pajek(text.as_bytes(), Path::new("mem")) {
                Err(ImportError::Parse { line, .. }) => assert_eq!(line, want, "{text:?}"),
                other => panic!("{text:?}: expected parse error, got {other:?}"),
            }
        }
    }

    #[test]
    fn json_rejects_unlisted_vertex() {
        let text = r#"{"chain":"bitcoin","vertices":["A"],"edges":[["A","B",1]]}"#;
        let err = read_json(text.as_bytes(), Path::new("g.json")).unwrap_err();
        assert!(matches!(err, ImportError::Parse { .. }));
        assert!(err.to_string().contains("unlisted vertex"), "{err}");
    }

    #[test]
    fn json_syntax_error_has_position() {
        let err = read_json("{\"vertices\":[\n}".as_bytes(), Path::new("g.json")).unwrap_err();
        match err {
            ImportError::Parse { line, column, .. } => assert_eq!((line, column), (2, 1)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn format_names() {
        assert_eq!("JSON".parse::<GraphFormat>().unwrap(), GraphFormat::Json);
        assert_eq!("net".parse::<GraphFormat>().unwrap(), GraphFormat::Pajek);
        assert!(matches!(
            "gml".parse::<GraphFormat>(),
            Err(ImportError::UnknownFormat(_))
        ));
        assert_eq!(GraphFormat::from_path(Path::new("x.NET")), Some(GraphFormat::Pajek));
    }
}
