//! File formats. Every `parse_*` / `decode_*` function is pure (no
//! filesystem) so untrusted bytes can be thrown at it directly; `read_*`
//! and `write_*` wrap them with paths for diagnostics.
//!
//! Text formats:
//! - edge list: one `u<TAB>v` per line, `#` starts a comment
//! - ratings: `user,item,rating[,timestamp]` CSV, header optional,
//!   timestamp ignored
//! - item features: `item,tag,relevance` CSV triples, header optional
//! - id map: `external<TAB>internal`
//! - labeled edges: `u<TAB>v<TAB>pos|neg<TAB>train|test`
//! - walk corpus: `# key = value` header comments, then one
//!   space-separated walk per line
//! - embeddings: `count dimension` line, then `id v1 .. vd` rows
//! - classifier: one text header line, then little-endian f64 parameters
//!
//! The binary embedding format is `D2VB`, u32 row count, u32 dimension,
//! then per row a u32 node id and `dimension` little-endian f32 values.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::edgeops::EdgeFeature;
use crate::embed::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::predictor::{Activation, MlpModel, HIDDEN_WIDTH};
use crate::ratings::{IdMap, Label, LabeledEdge, LabeledEdgeSet, RatingRecord, Split};
use crate::walker::{FrequencyProfile, WalkCorpus, WalkStrategy};

pub const EMBEDDING_BINARY_MAGIC: &[u8; 4] = b"D2VB";

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(&path.display().to_string(), e))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(&path.display().to_string(), e))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let display = path.display().to_string();
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&display, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(&display, e))
}

/// Lines with content: strips comments, skips blanks, keeps 1-based line
/// numbers for diagnostics.
fn content_lines(input: &str) -> impl Iterator<Item = (usize, &str)> {
    input
        .lines()
        .enumerate()
        .map(|(i, line)| (i + 1, line.trim_end_matches('\r')))
        .filter(|(_, line)| {
            let t = line.trim();
            !t.is_empty() && !t.starts_with('#')
        })
}

// ---------------------------------------------------------------- edges

pub fn parse_edge_list(input: &str, origin: &str) -> Result<Vec<(NodeId, NodeId)>> {
    let mut edges = Vec::new();
    for (line_no, line) in content_lines(input) {
        let mut fields = line.split('\t');
        let parse = |field: Option<&str>| -> Result<NodeId> {
            field
                .map(str::trim)
                .and_then(|f| f.parse().ok())
                .ok_or_else(|| Error::parse(origin, line_no, "expected `u<TAB>v`"))
        };
        let u = parse(fields.next())?;
        let v = parse(fields.next())?;
        if fields.next().is_some() {
            return Err(Error::parse(origin, line_no, "trailing fields after `u<TAB>v`"));
        }
        edges.push((u, v));
    }
    Ok(edges)
}

pub fn read_edge_list(path: &Path) -> Result<Vec<(NodeId, NodeId)>> {
    parse_edge_list(&read_to_string(path)?, &path.display().to_string())
}

pub fn write_edge_list(path: &Path, graph: &Graph) -> Result<()> {
    let mut out = String::new();
    for (u, v) in graph.edges() {
        writeln!(out, "{u}\t{v}").unwrap();
    }
    write_atomic(path, out.as_bytes())
}

// -------------------------------------------------------------- ratings

pub fn parse_ratings(input: &str, origin: &str) -> Result<Vec<RatingRecord>> {
    let mut records = Vec::new();
    let mut first_content = true;
    for (line_no, line) in content_lines(input) {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 && fields.len() != 4 {
            return Err(Error::parse(
                origin,
                line_no,
                format!("expected 3 or 4 comma-separated fields, got {}", fields.len()),
            ));
        }
        let rating: std::result::Result<f64, _> = fields[2].parse();
        if first_content && rating.is_err() {
            // Header row (e.g. `userId,movieId,rating,timestamp`).
            first_content = false;
            continue;
        }
        first_content = false;
        let rating = rating
            .map_err(|_| Error::parse(origin, line_no, format!("bad rating '{}'", fields[2])))?;
        if fields[0].is_empty() || fields[1].is_empty() {
            return Err(Error::parse(origin, line_no, "empty user or item id"));
        }
        let record = RatingRecord::new(fields[0], fields[1], rating)
            .map_err(|e| Error::parse(origin, line_no, e.to_string()))?;
        records.push(record);
    }
    Ok(records)
}

pub fn read_ratings(path: &Path) -> Result<Vec<RatingRecord>> {
    parse_ratings(&read_to_string(path)?, &path.display().to_string())
}

// -------------------------------------------------------- item features

/// Raw `(item, tag, relevance)` triples; items and tags are external keys
/// at this level.
pub fn parse_item_features(input: &str, origin: &str) -> Result<Vec<(String, String, f64)>> {
    let mut triples = Vec::new();
    let mut first_content = true;
    for (line_no, line) in content_lines(input) {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                origin,
                line_no,
                format!("expected `item,tag,relevance`, got {} fields", fields.len()),
            ));
        }
        let relevance: std::result::Result<f64, _> = fields[2].parse();
        if first_content && relevance.is_err() {
            first_content = false;
            continue;
        }
        first_content = false;
        let relevance = relevance
            .map_err(|_| Error::parse(origin, line_no, format!("bad relevance '{}'", fields[2])))?;
        if !(0.0..=1.0).contains(&relevance) {
            return Err(Error::parse(
                origin,
                line_no,
                format!("relevance {relevance} outside [0, 1]"),
            ));
        }
        if fields[0].is_empty() || fields[1].is_empty() {
            return Err(Error::parse(origin, line_no, "empty item or tag id"));
        }
        triples.push((fields[0].to_string(), fields[1].to_string(), relevance));
    }
    Ok(triples)
}

pub fn read_item_features(path: &Path) -> Result<Vec<(String, String, f64)>> {
    parse_item_features(&read_to_string(path)?, &path.display().to_string())
}

// --------------------------------------------------------------- id map

pub fn parse_id_map(input: &str, origin: &str) -> Result<IdMap> {
    let mut entries = Vec::new();
    for (line_no, line) in content_lines(input) {
        let mut fields = line.split('\t');
        let external = fields
            .next()
            .map(str::trim)
            .filter(|f| !f.is_empty())
            .ok_or_else(|| Error::parse(origin, line_no, "missing external id"))?;
        let internal: NodeId = fields
            .next()
            .map(str::trim)
            .and_then(|f| f.parse().ok())
            .ok_or_else(|| Error::parse(origin, line_no, "missing or bad internal id"))?;
        entries.push((external.to_string(), internal));
    }
    IdMap::from_entries(entries)
        .map_err(|e| Error::format(origin, e.to_string()))
}

pub fn read_id_map(path: &Path) -> Result<IdMap> {
    parse_id_map(&read_to_string(path)?, &path.display().to_string())
}

pub fn write_id_map(path: &Path, map: &IdMap) -> Result<()> {
    let mut out = String::new();
    for (external, internal) in map.entries() {
        writeln!(out, "{external}\t{internal}").unwrap();
    }
    write_atomic(path, out.as_bytes())
}

// -------------------------------------------------------- labeled edges

fn label_name(label: Label) -> &'static str {
    match label {
        Label::Positive => "pos",
        Label::Negative => "neg",
    }
}

fn split_name(split: Split) -> &'static str {
    match split {
        Split::Train => "train",
        Split::Test => "test",
    }
}

pub fn parse_labeled_edges(input: &str, origin: &str) -> Result<LabeledEdgeSet> {
    let mut edges = Vec::new();
    for (line_no, line) in content_lines(input) {
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                origin,
                line_no,
                "expected `u<TAB>v<TAB>pos|neg<TAB>train|test`",
            ));
        }
        let user: NodeId = fields[0]
            .parse()
            .map_err(|_| Error::parse(origin, line_no, format!("bad node id '{}'", fields[0])))?;
        let item: NodeId = fields[1]
            .parse()
            .map_err(|_| Error::parse(origin, line_no, format!("bad node id '{}'", fields[1])))?;
        let label = match fields[2] {
            "pos" => Label::Positive,
            "neg" => Label::Negative,
            other => return Err(Error::parse(origin, line_no, format!("bad label '{other}'"))),
        };
        let split = match fields[3] {
            "train" => Split::Train,
            "test" => Split::Test,
            other => return Err(Error::parse(origin, line_no, format!("bad split '{other}'"))),
        };
        edges.push(LabeledEdge {
            user,
            item,
            label,
            split,
        });
    }
    let set = LabeledEdgeSet { edges };
    set.check_unique_pairs()
        .map_err(|e| Error::format(origin, e.to_string()))?;
    Ok(set)
}

pub fn read_labeled_edges(path: &Path) -> Result<LabeledEdgeSet> {
    parse_labeled_edges(&read_to_string(path)?, &path.display().to_string())
}

pub fn write_labeled_edges(path: &Path, set: &LabeledEdgeSet) -> Result<()> {
    let mut out = String::new();
    for e in &set.edges {
        writeln!(
            out,
            "{}\t{}\t{}\t{}",
            e.user,
            e.item,
            label_name(e.label),
            split_name(e.split)
        )
        .unwrap();
    }
    write_atomic(path, out.as_bytes())
}

// --------------------------------------------------------------- corpus

pub fn parse_corpus(input: &str, origin: &str) -> Result<WalkCorpus> {
    let mut header: HashMap<String, String> = HashMap::new();
    for line in input.lines() {
        let line = line.trim_end_matches('\r');
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((key, value)) = rest.split_once('=') {
                header.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
    }
    let field = |key: &str| {
        header
            .get(key)
            .ok_or_else(|| Error::format(origin, format!("missing `# {key} = ...` header")))
    };
    let strategy: WalkStrategy = field("strategy")?
        .parse()
        .map_err(|e: Error| Error::format(origin, e.to_string()))?;
    let parse_num = |key: &str| -> Result<u64> {
        field(key)?
            .parse()
            .map_err(|_| Error::format(origin, format!("bad `{key}` header")))
    };
    let seed = parse_num("seed")?;
    let walk_length = parse_num("walk_length")? as usize;
    let walks_per_node = parse_num("walks_per_node")? as usize;

    let mut walks = Vec::new();
    for (line_no, line) in content_lines(input) {
        let walk: Vec<NodeId> = line
            .split_whitespace()
            .map(|tok| {
                tok.parse().map_err(|_| {
                    Error::parse(origin, line_no, format!("bad node id '{tok}'"))
                })
            })
            .collect::<Result<_>>()?;
        if walk.len() < 2 {
            return Err(Error::parse(origin, line_no, "walk shorter than 2 nodes"));
        }
        walks.push(walk);
    }
    Ok(WalkCorpus {
        walks,
        walk_length,
        walks_per_node,
        strategy,
        seed,
    })
}

pub fn read_corpus(path: &Path) -> Result<WalkCorpus> {
    parse_corpus(&read_to_string(path)?, &path.display().to_string())
}

pub fn write_corpus(path: &Path, corpus: &WalkCorpus) -> Result<()> {
    let mut out = String::new();
    writeln!(out, "# strategy = {}", corpus.strategy).unwrap();
    writeln!(out, "# seed = {}", corpus.seed).unwrap();
    writeln!(out, "# walk_length = {}", corpus.walk_length).unwrap();
    writeln!(out, "# walks_per_node = {}", corpus.walks_per_node).unwrap();
    for walk in &corpus.walks {
        let mut first = true;
        for node in walk {
            if !first {
                out.push(' ');
            }
            write!(out, "{node}").unwrap();
            first = false;
        }
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

// ----------------------------------------------------------- embeddings

pub fn parse_embedding_text(input: &str, origin: &str) -> Result<EmbeddingMatrix> {
    let mut lines = content_lines(input);
    let (line_no, first) = lines
        .next()
        .ok_or_else(|| Error::format(origin, "empty embedding file"))?;
    let mut head = first.split_whitespace();
    let count: usize = head
        .next()
        .and_then(|f| f.parse().ok())
        .ok_or_else(|| Error::parse(origin, line_no, "bad row count"))?;
    let dimension: usize = head
        .next()
        .and_then(|f| f.parse().ok())
        .filter(|&d| d > 0)
        .ok_or_else(|| Error::parse(origin, line_no, "bad dimension"))?;
    if head.next().is_some() {
        return Err(Error::parse(origin, line_no, "trailing fields on header line"));
    }

    let mut rows = Vec::with_capacity(count.min(1 << 20));
    for (line_no, line) in lines {
        let mut fields = line.split_whitespace();
        let id: NodeId = fields
            .next()
            .and_then(|f| f.parse().ok())
            .ok_or_else(|| Error::parse(origin, line_no, "bad node id"))?;
        let vector: Vec<f64> = fields
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::parse(origin, line_no, format!("bad value '{f}'")))
            })
            .collect::<Result<_>>()?;
        if vector.len() != dimension {
            return Err(Error::parse(
                origin,
                line_no,
                format!("expected {dimension} values, got {}", vector.len()),
            ));
        }
        rows.push((id, vector));
    }
    if rows.len() != count {
        return Err(Error::format(
            origin,
            format!("header promised {count} rows, found {}", rows.len()),
        ));
    }
    EmbeddingMatrix::from_rows(dimension, rows).map_err(|e| Error::format(origin, e.to_string()))
}

pub fn read_embedding_text(path: &Path) -> Result<EmbeddingMatrix> {
    parse_embedding_text(&read_to_string(path)?, &path.display().to_string())
}

pub fn write_embedding_text(path: &Path, matrix: &EmbeddingMatrix) -> Result<()> {
    let mut out = String::new();
    let present: Vec<NodeId> = matrix.present_nodes().collect();
    writeln!(out, "{} {}", present.len(), matrix.dimension()).unwrap();
    for node in present {
        write!(out, "{node}").unwrap();
        for v in matrix.vector(node).expect("present") {
            write!(out, " {v}").unwrap();
        }
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Binary embedding layout: magic, u32 row count, u32 dimension, then per
/// row u32 node id + dimension little-endian f32 values. The f32 payload
/// loses precision relative to the text format; the text format is the
/// canonical one.
pub fn decode_embedding_binary(bytes: &[u8]) -> Result<EmbeddingMatrix> {
    let origin = "<embedding binary>";
    let take = |bytes: &[u8], at: usize, len: usize| -> Result<Vec<u8>> {
        bytes
            .get(at..at + len)
            .map(|s| s.to_vec())
            .ok_or_else(|| Error::format(origin, "truncated input"))
    };
    let magic = take(bytes, 0, 4)?;
    if magic != EMBEDDING_BINARY_MAGIC {
        return Err(Error::format(origin, "bad magic"));
    }
    let u32_at = |at: usize| -> Result<u32> {
        let b = take(bytes, at, 4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    };
    let count = u32_at(4)? as usize;
    let dimension = u32_at(8)? as usize;
    if dimension == 0 {
        return Err(Error::format(origin, "zero dimension"));
    }
    let row_bytes = 4usize
        .checked_add(dimension.checked_mul(4).ok_or_else(|| Error::format(origin, "dimension overflow"))?)
        .ok_or_else(|| Error::format(origin, "dimension overflow"))?;
    let need = 12usize
        .checked_add(count.checked_mul(row_bytes).ok_or_else(|| Error::format(origin, "size overflow"))?)
        .ok_or_else(|| Error::format(origin, "size overflow"))?;
    if bytes.len() != need {
        return Err(Error::format(
            origin,
            format!("expected {need} bytes, got {}", bytes.len()),
        ));
    }
    let mut rows = Vec::with_capacity(count);
    let mut at = 12;
    for _ in 0..count {
        let id = u32_at(at)?;
        at += 4;
        let mut vector = Vec::with_capacity(dimension);
        for _ in 0..dimension {
            let b = take(bytes, at, 4)?;
            vector.push(f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64);
            at += 4;
        }
        rows.push((id, vector));
    }
    EmbeddingMatrix::from_rows(dimension, rows).map_err(|e| Error::format(origin, e.to_string()))
}

pub fn encode_embedding_binary(matrix: &EmbeddingMatrix) -> Vec<u8> {
    let present: Vec<NodeId> = matrix.present_nodes().collect();
    let mut out = Vec::with_capacity(12 + present.len() * (4 + 4 * matrix.dimension()));
    out.extend_from_slice(EMBEDDING_BINARY_MAGIC);
    out.extend_from_slice(&(present.len() as u32).to_le_bytes());
    out.extend_from_slice(&(matrix.dimension() as u32).to_le_bytes());
    for node in present {
        out.extend_from_slice(&node.to_le_bytes());
        for &v in matrix.vector(node).expect("present") {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

pub fn read_embedding_binary(path: &Path) -> Result<EmbeddingMatrix> {
    decode_embedding_binary(&read_bytes(path)?)
        .map_err(|e| Error::format(&path.display().to_string(), e.to_string()))
}

pub fn write_embedding_binary(path: &Path, matrix: &EmbeddingMatrix) -> Result<()> {
    write_atomic(path, &encode_embedding_binary(matrix))
}

// ------------------------------------------------------------ model

/// Model file: `mlp <input_dim> <hidden> <activation>` on the first line,
/// then W1 (row-major), b1, W2, b2 as little-endian f64.
pub fn decode_model(bytes: &[u8]) -> Result<MlpModel> {
    let origin = "<model>";
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::format(origin, "missing header line"))?;
    let header = std::str::from_utf8(&bytes[..newline])
        .map_err(|_| Error::format(origin, "header is not utf-8"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 || fields[0] != "mlp" {
        return Err(Error::format(origin, "expected `mlp <input> <hidden> <activation>`"));
    }
    let input_dim: usize = fields[1]
        .parse()
        .ok()
        .filter(|&d| d > 0)
        .ok_or_else(|| Error::format(origin, "bad input dimension"))?;
    let hidden: usize = fields[2]
        .parse()
        .map_err(|_| Error::format(origin, "bad hidden width"))?;
    if hidden != HIDDEN_WIDTH {
        return Err(Error::format(
            origin,
            format!("hidden width {hidden} is not {HIDDEN_WIDTH}"),
        ));
    }
    let activation = Activation::parse(fields[3]).map_err(|e| Error::format(origin, e.to_string()))?;

    let payload = &bytes[newline + 1..];
    let param_count = HIDDEN_WIDTH
        .checked_mul(input_dim)
        .and_then(|n| n.checked_add(2 * HIDDEN_WIDTH + 1))
        .ok_or_else(|| Error::format(origin, "parameter count overflow"))?;
    if payload.len() != param_count * 8 {
        return Err(Error::format(
            origin,
            format!("expected {} parameter bytes, got {}", param_count * 8, payload.len()),
        ));
    }
    let mut values = payload.chunks_exact(8).map(|c| {
        f64::from_le_bytes([c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]])
    });
    let mut model = MlpModel::zeros(input_dim);
    model.activation = activation;
    for w in &mut model.w1 {
        *w = values.next().unwrap();
    }
    for b in &mut model.b1 {
        *b = values.next().unwrap();
    }
    for w in &mut model.w2 {
        *w = values.next().unwrap();
    }
    model.b2 = values.next().unwrap();
    if !model.all_finite() {
        return Err(Error::format(origin, "non-finite parameter"));
    }
    Ok(model)
}

pub fn encode_model(model: &MlpModel) -> Vec<u8> {
    let mut out = format!(
        "mlp {} {} {}\n",
        model.input_dim(),
        HIDDEN_WIDTH,
        model.activation.name()
    )
    .into_bytes();
    for &v in model.w1.iter().chain(&model.b1).chain(&model.w2).chain(std::iter::once(&model.b2)) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn read_model(path: &Path) -> Result<MlpModel> {
    decode_model(&read_bytes(path)?).map_err(|e| Error::format(&path.display().to_string(), e.to_string()))
}

pub fn write_model(path: &Path, model: &MlpModel) -> Result<()> {
    write_atomic(path, &encode_model(model))
}

// -------------------------------------------------------- output tables

/// `u,v,label,f1..fD` rows for offline inspection and classifier reuse.
pub fn write_edge_features(
    path: &Path,
    rows: &[(NodeId, NodeId, Label, EdgeFeature)],
) -> Result<()> {
    let mut out = String::from("u,v,label");
    let dim = rows.first().map(|(_, _, _, f)| f.dimension()).unwrap_or(0);
    for i in 1..=dim {
        write!(out, ",f{i}").unwrap();
    }
    out.push('\n');
    for (u, v, label, feature) in rows {
        write!(out, "{u},{v},{}", label_name(*label)).unwrap();
        for value in &feature.vector {
            write!(out, ",{value}").unwrap();
        }
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// `u,v,label,score` rows.
pub fn write_scores(path: &Path, rows: &[(NodeId, NodeId, Label, f64)]) -> Result<()> {
    let mut out = String::from("u,v,label,score\n");
    for (u, v, label, score) in rows {
        writeln!(out, "{u},{v},{},{score}", label_name(*label)).unwrap();
    }
    write_atomic(path, out.as_bytes())
}

/// `user,rank,item,score` rows, rank starting at 1.
pub fn write_recommendations(
    path: &Path,
    table: &crate::diversity::RecommendationTable,
) -> Result<()> {
    let mut out = String::from("user,rank,item,score\n");
    for (user, items) in &table.lists {
        for (rank, (item, score)) in items.iter().enumerate() {
            writeln!(out, "{user},{},{item},{score}", rank + 1).unwrap();
        }
    }
    write_atomic(path, out.as_bytes())
}

/// `node,degree,occurrences` rows sorted by degree, with the rank
/// correlation appended as a comment line.
pub fn write_frequency_profile(path: &Path, profile: &FrequencyProfile) -> Result<()> {
    let mut out = String::from("node,degree,occurrences\n");
    for row in &profile.rows {
        writeln!(out, "{},{},{}", row.node, row.degree, row.occurrences).unwrap();
    }
    writeln!(out, "# spearman_degree_occurrences = {}", profile.spearman).unwrap();
    write_atomic(path, out.as_bytes())
}

/// The comparison grid, one row per (method, operator): `auc`, then
/// `co_k,ed_k[,ils_k]` for each k (no ILS column at k = 1).
pub fn render_metric_report(reports: &[crate::diversity::MetricReport], ks: &[usize]) -> String {
    let mut out = String::from("method,operator,auc");
    for &k in ks {
        write!(out, ",co_{k},ed_{k}").unwrap();
        if k > 1 {
            write!(out, ",ils_{k}").unwrap();
        }
    }
    out.push('\n');
    for report in reports {
        write!(out, "{},{},{:.6}", report.method, report.operator.name(), report.auc).unwrap();
        for &k in ks {
            let at_k = report
                .at_k
                .iter()
                .find(|m| m.k == k)
                .expect("report covers every configured k");
            write!(out, ",{},{:.6}", at_k.coverage, at_k.entropy_diversity).unwrap();
            if k > 1 {
                match at_k.avg_ils {
                    Some(ils) => write!(out, ",{ils:.6}").unwrap(),
                    None => write!(out, ",").unwrap(),
                }
            }
        }
        out.push('\n');
    }
    out
}

pub fn write_metric_report(
    path: &Path,
    reports: &[crate::diversity::MetricReport],
    ks: &[usize],
) -> Result<()> {
    write_atomic(path, render_metric_report(reports, ks).as_bytes())
}
