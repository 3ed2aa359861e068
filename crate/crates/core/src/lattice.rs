//! Lattice geometry, the two neighborhood graphs, and connected components
//! of induced (monochrome) subgraphs.
//!
//! Sites are indexed row-major from the top-left corner. Both graphs use a
//! free boundary: edge sites simply have fewer neighbors.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimensions of a rectangular lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeShape {
    pub height: usize,
    pub width: usize,
}

impl LatticeShape {
    pub fn new(height: usize, width: usize) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::invalid(format!(
                "lattice shape must be at least 1x1, got {height}x{width}"
            )));
        }
        Ok(LatticeShape { height, width })
    }

    /// Number of sites.
    pub fn num_sites(&self) -> usize {
        self.height * self.width
    }

    pub fn site(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.height && col < self.width);
        row * self.width + col
    }
}

/// The two neighborhood systems: rook moves (4 closest sites) and
/// king moves (8 closest sites).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    G4,
    G8,
}

impl GraphKind {
    pub fn name(&self) -> &'static str {
        match self {
            GraphKind::G4 => "g4",
            GraphKind::G8 => "g8",
        }
    }
}

impl std::str::FromStr for GraphKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "g4" | "4" => Ok(GraphKind::G4),
            "g8" | "8" => Ok(GraphKind::G8),
            other => Err(Error::invalid(format!("unknown graph kind `{other}`"))),
        }
    }
}

/// Undirected adjacency structure over the sites of a lattice.
///
/// Edges are stored once each, ordered lexicographically by
/// `(min site, max site)`. An adjacency list in CSR form is kept alongside
/// the edge list for linear-time traversals.
#[derive(Clone, Debug)]
pub struct NeighborhoodGraph {
    shape: LatticeShape,
    kind: GraphKind,
    edges: Vec<(u32, u32)>,
    adj_offsets: Vec<u32>,
    adj_targets: Vec<u32>,
}

/// Build the neighborhood graph of the given kind over a lattice.
pub fn build_graph(shape: LatticeShape, kind: GraphKind) -> NeighborhoodGraph {
    let (h, w) = (shape.height, shape.width);
    let n_edges = match kind {
        GraphKind::G4 => h * (w - 1) + w * (h - 1),
        GraphKind::G8 => h * (w - 1) + w * (h - 1) + 2 * (h - 1) * (w - 1),
    };
    let mut edges = Vec::with_capacity(n_edges);
    for r in 0..h {
        for c in 0..w {
            let i = (r * w + c) as u32;
            // Neighbors with a larger site index, in ascending index order,
            // so the edge list comes out lexicographically sorted.
            if c + 1 < w {
                edges.push((i, i + 1));
            }
            if kind == GraphKind::G8 && r + 1 < h && c > 0 {
                edges.push((i, i + w as u32 - 1));
            }
            if r + 1 < h {
                edges.push((i, i + w as u32));
            }
            if kind == GraphKind::G8 && r + 1 < h && c + 1 < w {
                edges.push((i, i + w as u32 + 1));
            }
        }
    }
    debug_assert_eq!(edges.len(), n_edges);

    let n = shape.num_sites();
    let mut degree = vec![0u32; n];
    for &(a, b) in &edges {
        degree[a as usize] += 1;
        degree[b as usize] += 1;
    }
    let mut adj_offsets = vec![0u32; n + 1];
    for i in 0..n {
        adj_offsets[i + 1] = adj_offsets[i] + degree[i];
    }
    let mut cursor: Vec<u32> = adj_offsets[..n].to_vec();
    let mut adj_targets = vec![0u32; 2 * edges.len()];
    for &(a, b) in &edges {
        adj_targets[cursor[a as usize] as usize] = b;
        cursor[a as usize] += 1;
        adj_targets[cursor[b as usize] as usize] = a;
        cursor[b as usize] += 1;
    }

    NeighborhoodGraph { shape, kind, edges, adj_offsets, adj_targets }
}

impl NeighborhoodGraph {
    pub fn shape(&self) -> LatticeShape {
        self.shape
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    /// Edges as `(smaller site, larger site)` pairs in lexicographic order.
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Neighbors of a site.
    pub fn neighbors(&self, site: usize) -> &[u32] {
        let lo = self.adj_offsets[site] as usize;
        let hi = self.adj_offsets[site + 1] as usize;
        &self.adj_targets[lo..hi]
    }
}

/// A K-color configuration on a lattice.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiscreteField {
    shape: LatticeShape,
    num_colors: usize,
    colors: Vec<u8>,
}

impl DiscreteField {
    /// Wrap a row-major color array. Every entry must lie in `0..num_colors`.
    pub fn new(shape: LatticeShape, num_colors: usize, colors: Vec<u8>) -> Result<Self> {
        if !(2..=256).contains(&num_colors) {
            return Err(Error::invalid(format!(
                "number of colors must be in 2..=256, got {num_colors}"
            )));
        }
        if colors.len() != shape.num_sites() {
            return Err(Error::invalid(format!(
                "color array has {} entries for a lattice of {} sites",
                colors.len(),
                shape.num_sites()
            )));
        }
        if let Some(&c) = colors.iter().find(|&&c| c as usize >= num_colors) {
            return Err(Error::invalid(format!(
                "color {c} out of range for {num_colors} colors"
            )));
        }
        Ok(DiscreteField { shape, num_colors, colors })
    }

    pub fn constant(shape: LatticeShape, num_colors: usize, color: u8) -> Result<Self> {
        let colors = vec![color; shape.num_sites()];
        DiscreteField::new(shape, num_colors, colors)
    }

    pub fn shape(&self) -> LatticeShape {
        self.shape
    }

    pub fn num_colors(&self) -> usize {
        self.num_colors
    }

    pub fn colors(&self) -> &[u8] {
        &self.colors
    }

    pub fn color(&self, site: usize) -> u8 {
        self.colors[site]
    }

    /// Write in plain-text PGM ("P2") format with maxval = K-1.
    pub fn write_pgm<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "P2")?;
        writeln!(out, "{} {}", self.shape.width, self.shape.height)?;
        writeln!(out, "{}", self.num_colors - 1)?;
        for row in self.colors.chunks(self.shape.width) {
            let line: Vec<String> = row.iter().map(|c| c.to_string()).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn write_pgm_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_pgm(std::io::BufWriter::new(file))
    }

    /// Read a plain-text PGM; the number of colors is maxval + 1.
    pub fn read_pgm<R: Read>(input: R) -> Result<Self> {
        let mut tokens = Vec::new();
        for line in BufReader::new(input).lines() {
            let line = line?;
            let body = line.split('#').next().unwrap_or("");
            tokens.extend(body.split_whitespace().map(|s| s.to_string()));
        }
        if tokens.first().map(String::as_str) != Some("P2") {
            return Err(Error::Format("expected plain PGM magic `P2`".into()));
        }
        if tokens.len() < 4 {
            return Err(Error::Format("truncated PGM header".into()));
        }
        let parse = |s: &str| -> Result<usize> {
            s.parse::<usize>()
                .map_err(|_| Error::Format(format!("bad PGM integer `{s}`")))
        };
        let width = parse(&tokens[1])?;
        let height = parse(&tokens[2])?;
        let maxval = parse(&tokens[3])?;
        let shape = LatticeShape::new(height, width)?;
        let values = &tokens[4..];
        if values.len() != shape.num_sites() {
            return Err(Error::Format(format!(
                "PGM body has {} values, expected {}",
                values.len(),
                shape.num_sites()
            )));
        }
        let mut colors = Vec::with_capacity(values.len());
        for v in values {
            let v = parse(v)?;
            if v > maxval {
                return Err(Error::Format(format!("PGM value {v} exceeds maxval {maxval}")));
            }
            colors.push(v as u8);
        }
        DiscreteField::new(shape, maxval + 1, colors)
    }

    pub fn read_pgm_file(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        DiscreteField::read_pgm(BufReader::new(file))
    }
}

/// Partition of the sites into connected components of an induced graph.
///
/// Labels are normalized to first-visit order under a row-major scan, so
/// identical inputs always produce identical labelings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentPartition {
    labels: Vec<u32>,
    sizes: Vec<u32>,
    internal_edges: Vec<u32>,
}

impl ComponentPartition {
    /// Per-site component label.
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Size of each component, indexed by label.
    pub fn sizes(&self) -> &[u32] {
        &self.sizes
    }

    /// Monochrome edges internal to each component, indexed by label.
    pub fn internal_edges(&self) -> &[u32] {
        &self.internal_edges
    }

    pub fn num_components(&self) -> usize {
        self.sizes.len()
    }

    pub fn largest_size(&self) -> u32 {
        self.sizes.iter().copied().max().unwrap_or(0)
    }

    /// Total monochrome edge count, distributed over components.
    pub fn total_edges(&self) -> u64 {
        self.internal_edges.iter().map(|&e| e as u64).sum()
    }
}

fn check_shapes(graph: &NeighborhoodGraph, field: &DiscreteField) -> Result<()> {
    if graph.shape() != field.shape() {
        return Err(Error::ShapeMismatch {
            expected_height: graph.shape().height,
            expected_width: graph.shape().width,
            got_height: field.shape().height,
            got_width: field.shape().width,
        });
    }
    Ok(())
}

/// Connected components of the graph induced on a field: sites are joined
/// when they are graph neighbors of the same color.
///
/// Iterative breadth-first search, linear in sites plus edges.
pub fn induced_components(
    graph: &NeighborhoodGraph,
    field: &DiscreteField,
) -> Result<ComponentPartition> {
    check_shapes(graph, field)?;
    let n = field.shape().num_sites();
    let colors = field.colors();
    const UNVISITED: u32 = u32::MAX;
    let mut labels = vec![UNVISITED; n];
    let mut sizes = Vec::new();
    let mut queue: Vec<u32> = Vec::new();

    for start in 0..n {
        if labels[start] != UNVISITED {
            continue;
        }
        let label = sizes.len() as u32;
        let color = colors[start];
        let mut size = 0u32;
        labels[start] = label;
        queue.push(start as u32);
        while let Some(site) = queue.pop() {
            size += 1;
            for &nb in graph.neighbors(site as usize) {
                let nb = nb as usize;
                if labels[nb] == UNVISITED && colors[nb] == color {
                    labels[nb] = label;
                    queue.push(nb as u32);
                }
            }
        }
        sizes.push(size);
    }

    let mut internal_edges = vec![0u32; sizes.len()];
    for &(a, b) in graph.edges() {
        if colors[a as usize] == colors[b as usize] {
            internal_edges[labels[a as usize] as usize] += 1;
        }
    }

    Ok(ComponentPartition { labels, sizes, internal_edges })
}

/// Number of edges whose endpoints share a color (the edge count of the
/// induced graph).
pub fn monochrome_edge_count(graph: &NeighborhoodGraph, field: &DiscreteField) -> Result<u64> {
    check_shapes(graph, field)?;
    let colors = field.colors();
    let count = graph
        .edges()
        .iter()
        .filter(|&&(a, b)| colors[a as usize] == colors[b as usize])
        .count();
    Ok(count as u64)
}
