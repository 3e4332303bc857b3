//! Line-oriented file formats.
//!
//! * paths: one path per line, whitespace-separated node tokens, `#` starts a
//!   comment. A `# nodes: a b c` line before the first path fixes the node
//!   universe and its order, so nodes that never occur still exist.
//! * labels: CSV `node,label`.
//! * graph: CSV `src,dst`.
//! * contacts: CSV `t,i,j` with integer seconds.
//!
//! CSV headers are optional and `#` lines are ignored.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use pathgroups_core::{GraphConstraint, NodeTable, Partition, PathCorpus};

use crate::contacts::ContactEvent;
use crate::error::{CliError, Result};

const NODES_DIRECTIVE: &str = "nodes:";

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn source_name(path: &Path) -> String {
    path.display().to_string()
}

pub fn parse_paths(text: &str, source: &str) -> Result<PathCorpus> {
    let mut corpus = PathCorpus::default();
    let mut closed_universe = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let (body, comment) = match raw.find('#') {
            Some(at) => (&raw[..at], Some(raw[at + 1..].trim())),
            None => (raw, None),
        };
        if let Some(names) = comment.and_then(|c| c.strip_prefix(NODES_DIRECTIVE)) {
            if !corpus.paths.is_empty() || closed_universe {
                return Err(CliError::parse(source, line, "the nodes line must come once, before any path"));
            }
            for name in names.split_whitespace() {
                corpus.nodes.intern(name);
            }
            closed_universe = true;
        }
        let tokens: Vec<&str> = body.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        let mut path = Vec::with_capacity(tokens.len());
        for token in tokens {
            let id = match corpus.nodes.get(token) {
                Some(id) => id,
                None if closed_universe => {
                    return Err(CliError::parse(source, line, format!("node {token:?} is not listed on the nodes line")))
                }
                None => corpus.nodes.intern(token),
            };
            path.push(id);
        }
        corpus.paths.push(path);
    }
    Ok(corpus)
}

pub fn read_paths(path: &Path) -> Result<PathCorpus> {
    parse_paths(&read_text(path)?, &source_name(path))
}

/// Canonical text of a corpus; parsing it back yields an identical corpus.
pub fn write_paths(corpus: &PathCorpus) -> Result<String> {
    for name in corpus.nodes.names() {
        if name.is_empty() || name.contains(char::is_whitespace) || name.contains('#') {
            return Err(CliError::Input(format!("node name {name:?} cannot be written to a paths file")));
        }
    }
    let mut out = format!("# {NODES_DIRECTIVE} {}\n", corpus.nodes.names().join(" "));
    for path in &corpus.paths {
        let tokens: Vec<&str> = path.iter().map(|&v| corpus.nodes.name(v)).collect();
        out.push_str(&tokens.join(" "));
        out.push('\n');
    }
    Ok(out)
}

/// Rows of a headerless-or-headed CSV, each with its line number.
fn csv_rows(text: &str, source: &str, header: &[&str]) -> Result<Vec<(usize, Vec<String>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            CliError::parse(source, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let fields: Vec<String> = record.iter().map(str::to_owned).collect();
        if rows.is_empty() && fields.iter().map(String::as_str).eq(header.iter().copied()) {
            continue;
        }
        if fields.len() != header.len() {
            return Err(CliError::parse(source, line, format!("expected {} columns ({}), found {}", header.len(), header.join(","), fields.len())));
        }
        rows.push((line, fields));
    }
    Ok(rows)
}

/// `node,label` pairs as written in a labels file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelFile {
    pub entries: Vec<(String, String)>,
}

impl LabelFile {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut seen: HashMap<String, (usize, String)> = HashMap::new();
        let mut entries = Vec::new();
        for (line, mut fields) in csv_rows(text, source, &["node", "label"])? {
            let label = fields.pop().unwrap_or_default();
            let node = fields.pop().unwrap_or_default();
            if node.is_empty() || label.is_empty() {
                return Err(CliError::parse(source, line, "empty node or label"));
            }
            if let Some((first, previous)) = seen.get(&node) {
                if *previous != label {
                    return Err(CliError::parse(source, line, format!("node {node:?} already labelled {previous:?} on line {first}")));
                }
                continue;
            }
            seen.insert(node.clone(), (line, label.clone()));
            entries.push((node, label));
        }
        Ok(Self { entries })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&read_text(path)?, &source_name(path))
    }

    /// Partition over `nodes`; label names are numbered by first appearance.
    pub fn to_partition(&self, nodes: &NodeTable) -> Result<Partition> {
        let mut labels = vec![None; nodes.len()];
        let mut names: BTreeMap<&str, u32> = BTreeMap::new();
        let mut next = 0u32;
        for (node, label) in &self.entries {
            let id = nodes
                .get(node)
                .ok_or_else(|| CliError::Input(format!("labels name node {node:?}, which the corpus does not contain")))?;
            let l = *names.entry(label.as_str()).or_insert_with(|| {
                next += 1;
                next - 1
            });
            labels[id as usize] = Some(l);
        }
        let missing: Vec<&str> = labels.iter().enumerate().filter(|(_, l)| l.is_none()).map(|(v, _)| nodes.name(v as u32)).collect();
        if !missing.is_empty() {
            let shown: Vec<&str> = missing.iter().take(5).copied().collect();
            return Err(CliError::Input(format!("{} corpus node(s) have no label, e.g. {}", missing.len(), shown.join(", "))));
        }
        let labels = labels.into_iter().map(|l| l.unwrap_or(0)).collect();
        Ok(Partition::new(labels, next.max(1))?)
    }

    /// Node table in file order, for comparing label files without a corpus.
    pub fn nodes(&self) -> NodeTable {
        let mut table = NodeTable::new();
        for (node, _) in &self.entries {
            table.intern(node);
        }
        table
    }
}

pub fn write_labels(nodes: &NodeTable, partition: &Partition) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["node", "label"])?;
    for (v, &l) in partition.labels().iter().enumerate() {
        writer.write_record([nodes.name(v as u32), &l.to_string()])?;
    }
    Ok(String::from_utf8(writer.into_inner().map_err(|e| CliError::Input(e.to_string()))?).expect("csv output is utf-8"))
}

pub fn parse_graph(text: &str, source: &str, nodes: &NodeTable) -> Result<GraphConstraint> {
    let mut graph = GraphConstraint::new();
    for (line, fields) in csv_rows(text, source, &["src", "dst"])? {
        let mut ids = [0u32; 2];
        for (slot, name) in ids.iter_mut().zip(&fields) {
            *slot = nodes
                .get(name)
                .ok_or_else(|| CliError::parse(source, line, format!("edge endpoint {name:?} is not a corpus node")))?;
        }
        graph.insert(ids[0], ids[1]);
    }
    Ok(graph)
}

pub fn read_graph(path: &Path, nodes: &NodeTable) -> Result<GraphConstraint> {
    parse_graph(&read_text(path)?, &source_name(path), nodes)
}

pub fn parse_contacts(text: &str, source: &str) -> Result<Vec<ContactEvent>> {
    csv_rows(text, source, &["t", "i", "j"])?
        .into_iter()
        .map(|(line, f)| {
            let timestamp = f[0]
                .parse::<i64>()
                .map_err(|_| CliError::parse(source, line, format!("timestamp {:?} is not an integer", f[0])))?;
            if f[1].is_empty() || f[2].is_empty() {
                return Err(CliError::parse(source, line, "empty node name"));
            }
            if f[1] == f[2] {
                return Err(CliError::parse(source, line, format!("contact of {:?} with itself", f[1])));
            }
            Ok(ContactEvent { timestamp, i: f[1].clone(), j: f[2].clone() })
        })
        .collect()
}

pub fn read_contacts(path: &Path) -> Result<Vec<ContactEvent>> {
    parse_contacts(&read_text(path)?, &source_name(path))
}
