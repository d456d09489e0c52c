//! On-disk graph format.
//!
//! ```text
//! magic        4 bytes  "NAVG"
//! version      u32 LE
//! node_count   u64 LE
//! records_len  u64 LE
//! offsets      node_count x u64 LE, byte offset of each record in the record section
//! records      per node: varint article_id, varint para_index,
//!              varint title_len, title bytes, varint text_len, text bytes,
//!              varint edge_count, then per edge: u8 edge type and a zigzag
//!              varint delta from the previous target (the first delta is
//!              taken from the node's own id)
//! ```
//!
//! Every record must end exactly where the next one starts, so a file that
//! loads is fully consumed and a truncated one never yields a partial graph.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::{Edge, EdgeType, Graph, Node, NodeId};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"NAVG";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 + 8;

fn put_varint(out: &mut Vec<u8>, mut v: u64) {
    while v >= 0x80 {
        out.push((v as u8) | 0x80);
        v >>= 7;
    }
    out.push(v as u8);
}

fn zigzag(v: i64) -> u64 {
    ((v << 1) ^ (v >> 63)) as u64
}

fn unzigzag(v: u64) -> i64 {
    ((v >> 1) as i64) ^ -((v & 1) as i64)
}

fn encode_record(node: &Node, out: &mut Vec<u8>) {
    put_varint(out, node.article_id as u64);
    put_varint(out, node.para_index as u64);
    put_varint(out, node.title.len() as u64);
    out.extend_from_slice(node.title.as_bytes());
    put_varint(out, node.text.len() as u64);
    out.extend_from_slice(node.text.as_bytes());
    put_varint(out, node.out_edges.len() as u64);
    let mut prev = node.id.0 as i64;
    for e in &node.out_edges {
        out.push(e.kind.index() as u8);
        let t = e.target.0 as i64;
        put_varint(out, zigzag(t - prev));
        prev = t;
    }
}

/// Serializes a graph into the binary format.
pub fn write_graph(g: &Graph) -> Vec<u8> {
    let mut records = Vec::new();
    let mut offsets = Vec::with_capacity(g.len());
    for node in g.nodes() {
        offsets.push(records.len() as u64);
        encode_record(node, &mut records);
    }
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * offsets.len() + records.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(g.len() as u64).to_le_bytes());
    out.extend_from_slice(&(records.len() as u64).to_le_bytes());
    for o in offsets {
        out.extend_from_slice(&o.to_le_bytes());
    }
    out.extend_from_slice(&records);
    out
}

pub fn save(g: &Graph, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, write_graph(g))?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<Graph> {
    read_graph(&fs::read(path)?)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
    base: usize,
}

impl<'a> Cursor<'a> {
    fn offset(&self) -> u64 {
        (self.base + self.pos) as u64
    }

    fn byte(&mut self) -> Result<u8> {
        let b = *self
            .buf
            .get(self.pos)
            .ok_or_else(|| Error::corrupt(self.offset(), "unexpected end of record"))?;
        self.pos += 1;
        Ok(b)
    }

    fn varint(&mut self) -> Result<u64> {
        let start = self.offset();
        let mut v = 0u64;
        for shift in (0..64).step_by(7) {
            let b = self.byte()?;
            v |= ((b & 0x7f) as u64) << shift;
            if b & 0x80 == 0 {
                return Ok(v);
            }
        }
        Err(Error::corrupt(start, "varint too long"))
    }

    fn string(&mut self) -> Result<String> {
        let len = self.varint()? as usize;
        let start = self.offset();
        let end = self
            .pos
            .checked_add(len)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::corrupt(start, "string runs past end of record"))?;
        let s = std::str::from_utf8(&self.buf[self.pos..end])
            .map_err(|_| Error::corrupt(start, "invalid utf-8"))?
            .to_owned();
        self.pos = end;
        Ok(s)
    }
}

fn u64_at(bytes: &[u8], at: usize) -> Result<u64> {
    bytes
        .get(at..at + 8)
        .map(|s| u64::from_le_bytes(s.try_into().unwrap()))
        .ok_or_else(|| Error::corrupt(at as u64, "file truncated"))
}

/// Parses the binary format.
pub fn read_graph(bytes: &[u8]) -> Result<Graph> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::corrupt(0, "bad magic, not a graph file"));
    }
    let version = bytes
        .get(4..8)
        .map(|s| u32::from_le_bytes(s.try_into().unwrap()))
        .ok_or_else(|| Error::corrupt(4, "file truncated"))?;
    if version != FORMAT_VERSION {
        return Err(Error::Version {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let count = u64_at(bytes, 8)?;
    let records_len = u64_at(bytes, 16)?;
    let table_end = (count as usize)
        .checked_mul(8)
        .and_then(|t| t.checked_add(HEADER_LEN))
        .filter(|&t| t <= bytes.len())
        .ok_or_else(|| Error::corrupt(HEADER_LEN as u64, "offset table truncated"))?;
    let expected_len = table_end as u64 + records_len;
    if (bytes.len() as u64) != expected_len {
        return Err(Error::corrupt(
            bytes.len().min(expected_len as usize) as u64,
            format!(
                "file is {} bytes, header implies {expected_len}",
                bytes.len()
            ),
        ));
    }
    let records = &bytes[table_end..];
    let count = count as usize;
    let mut nodes = Vec::with_capacity(count);
    for i in 0..count {
        let at = HEADER_LEN + 8 * i;
        let start = u64_at(bytes, at)? as usize;
        let end = if i + 1 < count {
            u64_at(bytes, at + 8)? as usize
        } else {
            records.len()
        };
        if start > end || end > records.len() {
            return Err(Error::corrupt(
                at as u64,
                format!("bad offset for node {i}"),
            ));
        }
        let mut cur = Cursor {
            buf: &records[start..end],
            pos: 0,
            base: table_end + start,
        };
        let article_id = cur.varint()? as u32;
        let para_index = cur.varint()? as u32;
        let title = cur.string()?;
        let text = cur.string()?;
        let n_edges = cur.varint()? as usize;
        let mut out_edges = Vec::with_capacity(n_edges.min(end - start));
        let mut prev = i as i64;
        for _ in 0..n_edges {
            let off = cur.offset();
            let kind = EdgeType::from_index(cur.byte()?)
                .ok_or_else(|| Error::corrupt(off, "unknown edge type"))?;
            let t = prev + unzigzag(cur.varint()?);
            if t < 0 || t as usize >= count {
                return Err(Error::corrupt(off, format!("edge target {t} out of range")));
            }
            out_edges.push(Edge {
                kind,
                target: NodeId(t as u32),
            });
            prev = t;
        }
        if cur.pos != cur.buf.len() {
            return Err(Error::corrupt(cur.offset(), "trailing bytes in record"));
        }
        nodes.push(Node {
            id: NodeId::from(i),
            article_id,
            title,
            para_index,
            text,
            out_edges,
        });
    }
    Ok(Graph::from_nodes(nodes))
}

#[derive(Serialize)]
struct NodeLine<'a> {
    id: NodeId,
    article_id: u32,
    title: &'a str,
    para_index: u32,
    text: &'a str,
    edges: Vec<(EdgeType, NodeId)>,
}

/// One JSON object per node, for debugging.
pub fn dump_jsonl(g: &Graph, out: impl Write) -> Result<()> {
    let mut w = BufWriter::new(out);
    for n in g.nodes() {
        let line = NodeLine {
            id: n.id,
            article_id: n.article_id,
            title: &n.title,
            para_index: n.para_index,
            text: &n.text,
            edges: n.out_edges.iter().map(|e| (e.kind, e.target)).collect(),
        };
        serde_json::to_writer(&mut w, &line)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}
