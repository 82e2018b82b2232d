//! Undirected simple graph in compressed adjacency form, plus the loading and
//! cleaning steps applied before any similarity is computed.

use std::cmp::Ordering;
use std::collections::{HashMap, VecDeque};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Field separator for edge-list files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Delimiter {
    /// Tab if the first data line contains one, else comma, else runs of whitespace.
    #[default]
    Auto,
    Tab,
    Comma,
    Whitespace,
}

impl Delimiter {
    fn detect(line: &str) -> Delimiter {
        if line.contains('\t') {
            Delimiter::Tab
        } else if line.contains(',') {
            Delimiter::Comma
        } else {
            Delimiter::Whitespace
        }
    }

    fn split(self, line: &str) -> Vec<&str> {
        match self {
            Delimiter::Tab => line.split('\t').map(str::trim).collect(),
            Delimiter::Comma => line.split(',').map(str::trim).collect(),
            Delimiter::Whitespace | Delimiter::Auto => line.split_whitespace().collect(),
        }
    }
}

/// What to do with a line that does not hold two non-empty fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MalformedPolicy {
    #[default]
    Fail,
    Skip,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    pub delimiter: Delimiter,
    pub malformed: MalformedPolicy,
}

/// Raw edge records in file order. Direction is kept here and dropped by [`build_graph`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EdgeList {
    pub records: Vec<(String, String)>,
    /// `(line number, reason)` for every line dropped under [`MalformedPolicy::Skip`].
    pub skipped: Vec<(usize, String)>,
}

impl EdgeList {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

pub fn load_edge_list(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<EdgeList> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(BufReader::new(file), path, opts)
}

/// Parses edge records from any reader; `origin` is only used in error messages.
pub fn parse_edge_list<R: BufRead>(reader: R, origin: &Path, opts: &LoadOptions) -> Result<EdgeList> {
    let mut out = EdgeList::default();
    let mut delimiter = opts.delimiter;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(origin, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if delimiter == Delimiter::Auto {
            delimiter = Delimiter::detect(trimmed);
        }
        let fields = delimiter.split(trimmed);
        match fields.as_slice() {
            [a, b, ..] if !a.is_empty() && !b.is_empty() => {
                out.records.push((a.to_string(), b.to_string()));
            }
            _ => {
                let reason = format!("expected two fields, got {:?}", trimmed);
                match opts.malformed {
                    MalformedPolicy::Fail => {
                        return Err(Error::Parse {
                            path: origin.to_path_buf(),
                            line: lineno,
                            message: reason,
                        })
                    }
                    MalformedPolicy::Skip => out.skipped.push((lineno, reason)),
                }
            }
        }
    }
    Ok(out)
}

/// Integer-looking ids sort numerically and ahead of everything else; the rest sort
/// lexicographically. This makes the dense index independent of record order.
fn natural_cmp(a: &str, b: &str) -> Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y).then_with(|| a.cmp(b)),
        (Ok(_), Err(_)) => Ordering::Less,
        (Err(_), Ok(_)) => Ordering::Greater,
        (Err(_), Err(_)) => a.cmp(b),
    }
}

/// Immutable undirected simple graph.
///
/// Neighbour lists are sorted and stored back to back; `offsets[i]..offsets[i + 1]`
/// delimits node `i`'s list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    ids: Vec<String>,
    index: HashMap<String, usize>,
}

impl Graph {
    pub fn empty() -> Self {
        Graph {
            offsets: vec![0],
            neighbors: Vec::new(),
            ids: Vec::new(),
            index: HashMap::new(),
        }
    }

    /// Builds a graph over dense indices `0..node_count`. External ids are the decimal
    /// indices. Self-loops and repeated edges are dropped.
    pub fn from_index_edges<I>(node_count: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let ids = (0..node_count).map(|i| i.to_string()).collect();
        Self::from_parts(ids, edges)
    }

    fn from_parts<I>(ids: Vec<String>, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let n = ids.len();
        if n > u32::MAX as usize {
            return Err(Error::InvalidParameter(format!("{n} nodes exceed u32 indexing")));
        }
        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (a, b) in edges {
            for x in [a, b] {
                if x >= n {
                    return Err(Error::NodeOutOfRange {
                        index: x,
                        node_count: n,
                    });
                }
            }
            if a == b {
                continue;
            }
            adj[a].push(b as u32);
            adj[b].push(a as u32);
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut neighbors = Vec::new();
        offsets.push(0);
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
            neighbors.extend_from_slice(list);
            offsets.push(neighbors.len());
        }
        let index = ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        Ok(Graph {
            offsets,
            neighbors,
            ids,
            index,
        })
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    #[inline]
    pub fn degree(&self, node: usize) -> usize {
        self.offsets[node + 1] - self.offsets[node]
    }

    #[inline]
    pub fn neighbors(&self, node: usize) -> &[u32] {
        &self.neighbors[self.offsets[node]..self.offsets[node + 1]]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.node_count()).map(|i| self.degree(i)).collect()
    }

    pub fn id(&self, node: usize) -> &str {
        &self.ids[node]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn require_index(&self, id: &str) -> Result<usize> {
        self.index_of(id).ok_or_else(|| Error::UnknownId(id.to_string()))
    }

    pub fn check_node(&self, node: usize) -> Result<()> {
        if node < self.node_count() {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange {
                index: node,
                node_count: self.node_count(),
            })
        }
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.neighbors(a).binary_search(&(b as u32)).is_ok()
    }

    /// Each undirected edge once, as `(low, high)` in index order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.node_count()).flat_map(move |a| {
            self.neighbors(a)
                .iter()
                .map(|&b| b as usize)
                .filter(move |&b| b > a)
                .map(move |b| (a, b))
        })
    }

    /// Component label per node, numbered in order of each component's smallest node.
    pub fn components(&self) -> (Vec<usize>, usize) {
        let n = self.node_count();
        let mut label = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        let mut count = 0;
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = count;
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                for &v in self.neighbors(u) {
                    let v = v as usize;
                    if label[v] == usize::MAX {
                        label[v] = count;
                        queue.push_back(v);
                    }
                }
            }
            count += 1;
        }
        (label, count)
    }

    pub fn is_connected(&self) -> bool {
        self.node_count() > 0 && self.components().1 == 1
    }

    /// Induced subgraph on the kept nodes. Kept nodes retain their relative order and ids.
    pub fn induced(&self, keep: &[bool]) -> Graph {
        assert_eq!(keep.len(), self.node_count());
        let mut remap = vec![usize::MAX; self.node_count()];
        let mut ids = Vec::new();
        for (old, _) in keep.iter().enumerate().filter(|(_, &k)| k) {
            remap[old] = ids.len();
            ids.push(self.ids[old].clone());
        }
        let edges: Vec<(usize, usize)> = self
            .edges()
            .filter(|&(a, b)| keep[a] && keep[b])
            .map(|(a, b)| (remap[a], remap[b]))
            .collect();
        Graph::from_parts(ids, edges).expect("remapped indices are in range")
    }
}

/// Undirected simple graph from raw records. Ids get dense indices in natural order
/// (numeric ids numerically, then other strings lexicographically), so any permutation of
/// the input yields the same graph.
pub fn build_graph(edges: &EdgeList) -> Graph {
    let mut ids: Vec<&str> = edges
        .records
        .iter()
        .flat_map(|(a, b)| [a.as_str(), b.as_str()])
        .collect();
    ids.sort_unstable_by(|a, b| natural_cmp(a, b));
    ids.dedup();
    let index: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let pairs = edges
        .records
        .iter()
        .map(|(a, b)| (index[a.as_str()], index[b.as_str()]));
    let ids = ids.into_iter().map(str::to_owned).collect();
    Graph::from_parts(ids, pairs).expect("indices come from the id table")
}

/// One pass: drop every node whose degree is below `min_degree`, then re-index.
/// Survivors may end up with lower degree; use [`k_core`] for the iterated version.
pub fn filter_min_degree(g: &Graph, min_degree: usize) -> Graph {
    let keep: Vec<bool> = (0..g.node_count()).map(|i| g.degree(i) >= min_degree).collect();
    g.induced(&keep)
}

/// Repeats [`filter_min_degree`] until every remaining node has degree `>= k`.
pub fn k_core(g: &Graph, k: usize) -> Graph {
    let mut current = g.clone();
    loop {
        let next = filter_min_degree(&current, k);
        if next.node_count() == current.node_count() {
            return next;
        }
        current = next;
    }
}

/// The component with the most nodes; ties go to the component holding the smallest
/// index. Components without edges are never selected, so an edgeless graph maps to the
/// empty graph.
pub fn largest_component(g: &Graph) -> Graph {
    let (label, count) = g.components();
    let mut sizes = vec![0usize; count];
    for &l in &label {
        sizes[l] += 1;
    }
    let mut best: Option<usize> = None;
    for (c, &size) in sizes.iter().enumerate() {
        if size < 2 {
            continue;
        }
        if best.is_none_or(|b| size > sizes[b]) {
            best = Some(c);
        }
    }
    match best {
        None => Graph::empty(),
        Some(c) if count == 1 && c == 0 => g.clone(),
        Some(c) => {
            let keep: Vec<bool> = label.iter().map(|&l| l == c).collect();
            g.induced(&keep)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CleanOptions {
    pub min_degree: usize,
    /// Iterate the degree filter to a k-core instead of a single pass.
    pub iterate_core: bool,
}

impl Default for CleanOptions {
    fn default() -> Self {
        CleanOptions {
            min_degree: 3,
            iterate_core: false,
        }
    }
}

/// Degree filter followed by main-component selection.
pub fn clean(g: &Graph, opts: &CleanOptions) -> Graph {
    let filtered = if opts.iterate_core {
        k_core(g, opts.min_degree)
    } else {
        filter_min_degree(g, opts.min_degree)
    };
    largest_component(&filtered)
}

const SNAPSHOT_MAGIC: &[u8; 8] = b"TPSIMG01";

/// Writes the id table and adjacency as a little-endian binary snapshot.
pub fn write_snapshot<W: Write>(g: &Graph, mut w: W) -> std::io::Result<()> {
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&(g.node_count() as u64).to_le_bytes())?;
    w.write_all(&(g.neighbors.len() as u64).to_le_bytes())?;
    for id in &g.ids {
        w.write_all(&(id.len() as u32).to_le_bytes())?;
        w.write_all(id.as_bytes())?;
    }
    for &o in &g.offsets {
        w.write_all(&(o as u64).to_le_bytes())?;
    }
    for &v in &g.neighbors {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn save_snapshot(g: &Graph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_snapshot(g, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

fn read_u64<R: Read>(r: &mut R) -> std::io::Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_u32<R: Read>(r: &mut R) -> std::io::Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<Graph> {
    let bad = |e: std::io::Error| Error::Snapshot(e.to_string());
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(bad)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let n = read_u64(&mut r).map_err(bad)? as usize;
    let nnz = read_u64(&mut r).map_err(bad)? as usize;
    let mut ids = Vec::with_capacity(n);
    for _ in 0..n {
        let len = read_u32(&mut r).map_err(bad)? as usize;
        let mut buf = vec![0u8; len];
        r.read_exact(&mut buf).map_err(bad)?;
        ids.push(String::from_utf8(buf).map_err(|e| Error::Snapshot(e.to_string()))?);
    }
    let mut offsets = Vec::with_capacity(n + 1);
    for _ in 0..=n {
        offsets.push(read_u64(&mut r).map_err(bad)? as usize);
    }
    let mut neighbors = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        neighbors.push(read_u32(&mut r).map_err(bad)?);
    }
    if offsets.first() != Some(&0) || offsets.last() != Some(&nnz) || offsets.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Snapshot("inconsistent offsets".into()));
    }
    if neighbors.iter().any(|&v| v as usize >= n) {
        return Err(Error::Snapshot("neighbour index out of range".into()));
    }
    let index: HashMap<String, usize> = ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
    if index.len() != n {
        return Err(Error::Snapshot("duplicate ids".into()));
    }
    Ok(Graph {
        offsets,
        neighbors,
        ids,
        index,
    })
}

pub fn load_snapshot(path: impl AsRef<Path>) -> Result<Graph> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_snapshot(BufReader::new(file))
}
