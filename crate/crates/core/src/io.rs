//! On-disk formats. All integers little-endian.
//!
//! Dataset file (`*.bin`), 32-byte header then rows:
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 8    | magic `TANNDATA`                        |
//! | 8      | 4    | format version (1)                      |
//! | 12     | 1    | space tag: 0 sphere, 1 hamming, 2 euclid|
//! | 13     | 3    | zero                                    |
//! | 16     | 8    | n                                       |
//! | 24     | 8    | d                                       |
//!
//! Rows are `d` `f32`s, or for Hamming `ceil(d/8)` bytes with bit `j`
//! (LSB first) set when coordinate `j` is −1. Sphere rows are renormalised to
//! unit length on read, since `f32` storage loses about 1e−7 of the norm.
//!
//! Tree file: magic `TANNTREE`, version `u32`, kind `u8` (1 = data-independent,
//! 2 = data-dependent), 3 zero bytes, payload length `u64`, then the bincode
//! encoding of the tree.

use crate::dd_tree::DDTree;
use crate::error::{Error, Result};
use crate::filter_tree::FilterTree;
use crate::instance::{Instance, InstanceTruth};
use crate::points::{norm, normalize, PointSet, Space};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

pub const DATA_MAGIC: &[u8; 8] = b"TANNDATA";
pub const TREE_MAGIC: &[u8; 8] = b"TANNTREE";
pub const DATA_VERSION: u32 = 1;
pub const TREE_VERSION: u32 = 1;

fn bad<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Format(msg.into()))
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).or_else(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => bad(format!("truncated {what}")),
        _ => Err(e.into()),
    })
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

fn u64_at(b: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

pub fn encode_points<W: Write>(points: &PointSet, w: &mut W) -> Result<()> {
    let mut head = [0u8; 32];
    head[..8].copy_from_slice(DATA_MAGIC);
    head[8..12].copy_from_slice(&DATA_VERSION.to_le_bytes());
    head[12] = points.space().tag();
    head[16..24].copy_from_slice(&(points.len() as u64).to_le_bytes());
    head[24..32].copy_from_slice(&(points.dim() as u64).to_le_bytes());
    w.write_all(&head)?;
    let d = points.dim();
    match points.space() {
        Space::Hamming => {
            let mut row = vec![0u8; d.div_ceil(8)];
            for p in points.rows() {
                row.fill(0);
                for (j, &x) in p.iter().enumerate() {
                    if x < 0.0 {
                        row[j / 8] |= 1 << (j % 8);
                    }
                }
                w.write_all(&row)?;
            }
        }
        _ => {
            let mut row = Vec::with_capacity(4 * d);
            for p in points.rows() {
                row.clear();
                for &x in p {
                    row.extend_from_slice(&(x as f32).to_le_bytes());
                }
                w.write_all(&row)?;
            }
        }
    }
    Ok(())
}

pub fn decode_points<R: Read>(r: &mut R) -> Result<PointSet> {
    let mut head = [0u8; 32];
    read_exact(r, &mut head, "dataset header")?;
    if &head[..8] != DATA_MAGIC {
        return bad("not a dataset file (bad magic)");
    }
    let version = u32_at(&head, 8);
    if version != DATA_VERSION {
        return bad(format!("unsupported dataset version {version}"));
    }
    let space = Space::from_tag(head[12]).ok_or_else(|| Error::Format(format!("unknown space tag {}", head[12])))?;
    let (n, d) = (u64_at(&head, 16), u64_at(&head, 24));
    if d == 0 || d > 1 << 24 || n > 1 << 32 {
        return bad(format!("implausible shape n = {n}, d = {d}"));
    }
    let (n, d) = (n as usize, d as usize);
    let row_bytes = if space == Space::Hamming { d.div_ceil(8) } else { 4 * d };
    let mut data = Vec::with_capacity(n.saturating_mul(d).min(1 << 28));
    let mut row = vec![0u8; row_bytes];
    for _ in 0..n {
        read_exact(r, &mut row, "dataset rows")?;
        if space == Space::Hamming {
            data.extend((0..d).map(|j| if row[j / 8] >> (j % 8) & 1 == 1 { -1.0 } else { 1.0 }));
        } else {
            data.extend(row.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64));
        }
    }
    if r.read(&mut [0u8; 1])? != 0 {
        return bad("trailing bytes after dataset rows");
    }
    if space == Space::Sphere {
        data.chunks_exact_mut(d).for_each(|row| {
            if norm(row) > 0.0 {
                normalize(row)
            }
        });
    }
    PointSet::new(d, space, data).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_points(path: &Path, points: &PointSet) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    encode_points(points, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_points(path: &Path) -> Result<PointSet> {
    decode_points(&mut BufReader::new(File::open(path)?))
}

/// Human-readable sidecar: generator, seed, parameters and ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub format_version: u32,
    pub generator: String,
    pub seed: u64,
    pub n: usize,
    pub dim: usize,
    pub q_count: usize,
    pub params: BTreeMap<String, f64>,
    pub points_file: String,
    pub queries_file: String,
    pub truth: InstanceTruth,
}

pub fn write_meta(path: &Path, meta: &DatasetMeta) -> Result<()> {
    let s = serde_json::to_string_pretty(meta).map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(path, s + "\n")?;
    Ok(())
}

pub fn read_meta(path: &Path) -> Result<DatasetMeta> {
    let s = std::fs::read_to_string(path)?;
    let m: DatasetMeta = serde_json::from_str(&s).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    if m.format_version != DATA_VERSION {
        return bad(format!("unsupported metadata version {}", m.format_version));
    }
    Ok(m)
}

/// Paths of the three files written for a dataset with this stem.
pub fn dataset_paths(stem: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let with = |ext: &str| {
        let mut s = stem.as_os_str().to_owned();
        s.push(ext);
        PathBuf::from(s)
    };
    (with(".points.bin"), with(".queries.bin"), with(".meta.json"))
}

/// Writes `<stem>.points.bin`, `<stem>.queries.bin` and `<stem>.meta.json`.
pub fn write_dataset(stem: &Path, inst: &Instance, generator: &str, seed: u64, params: BTreeMap<String, f64>) -> Result<()> {
    let (pp, qp, mp) = dataset_paths(stem);
    write_points(&pp, &inst.points)?;
    write_points(&qp, &inst.queries)?;
    let name = |p: &Path| p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    write_meta(
        &mp,
        &DatasetMeta {
            format_version: DATA_VERSION,
            generator: generator.into(),
            seed,
            n: inst.points.len(),
            dim: inst.points.dim(),
            q_count: inst.queries.len(),
            params,
            points_file: name(&pp),
            queries_file: name(&qp),
            truth: inst.truth.clone(),
        },
    )
}

/// Reads a dataset written by [`write_dataset`] from its stem or its `.meta.json` path.
pub fn read_dataset(path: &Path) -> Result<(Instance, DatasetMeta)> {
    let s = path.to_string_lossy();
    let stem = PathBuf::from(s.strip_suffix(".meta.json").unwrap_or(&s).to_string());
    let (_, _, mp) = dataset_paths(&stem);
    let meta = read_meta(&mp)?;
    let dir = mp.parent().unwrap_or(Path::new("."));
    let points = read_points(&dir.join(&meta.points_file))?;
    let queries = read_points(&dir.join(&meta.queries_file))?;
    if points.len() != meta.n || queries.len() != meta.q_count || points.dim() != meta.dim || queries.dim() != meta.dim {
        return bad("dataset files disagree with their metadata");
    }
    if meta.truth.planted_pairs.iter().any(|&(q, p)| q as usize >= queries.len() || p as usize >= points.len()) {
        return bad("planted pair index out of range");
    }
    Ok((Instance { points, queries, truth: meta.truth.clone() }, meta))
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnyTree {
    Di(FilterTree),
    Dd(DDTree),
}

impl AnyTree {
    fn kind(&self) -> u8 {
        match self {
            AnyTree::Di(_) => 1,
            AnyTree::Dd(_) => 2,
        }
    }
}

pub fn encode_tree<W: Write>(tree: &AnyTree, w: &mut W) -> Result<()> {
    let payload = match tree {
        AnyTree::Di(t) => bincode::serialize(t),
        AnyTree::Dd(t) => bincode::serialize(t),
    }
    .map_err(|e| Error::Format(e.to_string()))?;
    let mut head = [0u8; 24];
    head[..8].copy_from_slice(TREE_MAGIC);
    head[8..12].copy_from_slice(&TREE_VERSION.to_le_bytes());
    head[12] = tree.kind();
    head[16..24].copy_from_slice(&(payload.len() as u64).to_le_bytes());
    w.write_all(&head)?;
    w.write_all(&payload)?;
    Ok(())
}

pub fn decode_tree<R: Read>(r: &mut R) -> Result<AnyTree> {
    let mut head = [0u8; 24];
    read_exact(r, &mut head, "tree header")?;
    if &head[..8] != TREE_MAGIC {
        return bad("not a tree file (bad magic)");
    }
    let version = u32_at(&head, 8);
    if version != TREE_VERSION {
        return bad(format!("unsupported tree version {version}"));
    }
    let len = u64_at(&head, 16);
    if len > 1 << 36 {
        return bad(format!("implausible payload length {len}"));
    }
    let mut payload = Vec::new();
    r.take(len).read_to_end(&mut payload)?;
    if payload.len() as u64 != len {
        return bad("truncated tree payload");
    }
    let err = |e: bincode::Error| Error::Format(format!("corrupt tree payload: {e}"));
    match head[12] {
        1 => Ok(AnyTree::Di(bincode::deserialize(&payload).map_err(err)?)),
        2 => Ok(AnyTree::Dd(bincode::deserialize(&payload).map_err(err)?)),
        k => bad(format!("unknown tree kind {k}")),
    }
}

pub fn write_tree(path: &Path, tree: &AnyTree) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    encode_tree(tree, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_tree(path: &Path) -> Result<AnyTree> {
    decode_tree(&mut BufReader::new(File::open(path)?))
}
