//! Finite truncation of the tree of level-set components of `G_f`.
//!
//! Layer `k` sits at height `h_k = ℓ_N / d^k`. Its vertices are the
//! components of `{G_f < ρ h_k}`, where `ρ = sqrt(ℓ_1 / ℓ_0)` keeps the
//! threshold strictly between `h_k` and the next critical level above it;
//! each such component holds exactly one component of the level set
//! `{G_f = h_k}`, including the pinched ones at critical heights.
//!
//! Components are found by flood fill. Every vertex gets its own grid laid
//! over its bounding box, so resolution follows the shrinking components.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::potential::{escape_level_data, green_value};

pub const DEFAULT_MAX_DEPTH: usize = 12;
pub const DEFAULT_GRID: usize = 160;
pub const MAX_GRID: usize = 1280;
/// Minimum Chebyshev gap, in cells, between distinct components.
const MIN_SEPARATION: usize = 3;
const PAD_CELLS: f64 = 2.0;
const DYNAMICS_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeOptions {
    /// Cells along the longer side of each vertex grid.
    pub grid: usize,
    /// Refinement stops here and reports `ResolutionTooCoarse`.
    pub max_grid: usize,
    pub max_depth: usize,
}

impl Default for TreeOptions {
    fn default() -> Self {
        TreeOptions {
            grid: DEFAULT_GRID,
            max_grid: MAX_GRID,
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeVertex {
    pub id: usize,
    pub layer: usize,
    pub height: f64,
    /// Grid point of least Green value in the component.
    pub witness: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEdge {
    pub parent: usize,
    pub child: usize,
    pub length: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetrizedTree {
    pub degree: usize,
    pub depth: usize,
    pub vertices: Vec<TreeVertex>,
    pub edges: Vec<TreeEdge>,
    /// Tree map `σ`: vertex at height `h` to the vertex at height `d h`.
    pub dynamics: BTreeMap<usize, usize>,
    #[serde(skip)]
    locator: Option<Arc<Locator>>,
}

impl PartialEq for MetrizedTree {
    fn eq(&self, other: &Self) -> bool {
        self.degree == other.degree
            && self.depth == other.depth
            && self.vertices == other.vertices
            && self.edges == other.edges
            && self.dynamics == other.dynamics
    }
}

struct Grid {
    /// Centre of cell `(0, 0)`.
    origin: Complex64,
    cell: f64,
    nx: usize,
    ny: usize,
    labels: Vec<u32>,
}

impl Grid {
    fn center(&self, i: usize, j: usize) -> Complex64 {
        self.origin + Complex64::new(i as f64 * self.cell, j as f64 * self.cell)
    }

    fn cell_of(&self, z: Complex64) -> (i64, i64) {
        let rel = (z - self.origin) / self.cell;
        (rel.re.round() as i64, rel.im.round() as i64)
    }

    fn label(&self, i: i64, j: i64) -> u32 {
        if i < 0 || j < 0 || i >= self.nx as i64 || j >= self.ny as i64 {
            0
        } else {
            self.labels[j as usize * self.nx + i as usize]
        }
    }

    /// Labels at the cell of `z` and its eight neighbours, nearest first.
    fn labels_near(&self, z: Complex64) -> impl Iterator<Item = u32> + '_ {
        let (i, j) = self.cell_of(z);
        const RING: [(i64, i64); 9] = [
            (0, 0),
            (1, 0),
            (-1, 0),
            (0, 1),
            (0, -1),
            (1, 1),
            (1, -1),
            (-1, 1),
            (-1, -1),
        ];
        RING.iter()
            .map(move |(di, dj)| self.label(i + di, j + dj))
            .filter(|&l| l != 0)
    }
}

/// Cells of one component in its grid, with the grid that labelled them.
type Frontier = Vec<(usize, Vec<(usize, usize)>, usize)>;

struct Component {
    label: u32,
    cells: Vec<(usize, usize)>,
    witness: Complex64,
}

/// Grids and label-to-vertex tables used to place points in the tree.
#[derive(Debug, Default)]
struct Locator {
    /// Grid holding the components of layer 0.
    root: usize,
    grids: Vec<GridRecord>,
    /// For each vertex, the grid its children were labelled on.
    child_grid: HashMap<usize, usize>,
}

struct GridRecord {
    grid: Grid,
    vertex_of_label: HashMap<u32, usize>,
}

impl std::fmt::Debug for GridRecord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GridRecord")
            .field("nx", &self.grid.nx)
            .field("ny", &self.grid.ny)
            .field("vertices", &self.vertex_of_label.len())
            .finish()
    }
}

impl Locator {
    fn find_in(&self, grid: usize, z: Complex64) -> Option<usize> {
        let record = &self.grids[grid];
        record
            .grid
            .labels_near(z)
            .find_map(|l| record.vertex_of_label.get(&l).copied())
    }

    fn locate(&self, z: Complex64, layer: usize) -> Option<usize> {
        let mut v = self.find_in(self.root, z)?;
        for _ in 0..layer {
            v = self.find_in(*self.child_grid.get(&v)?, z)?;
        }
        Some(v)
    }
}

fn label_grid(
    p: &Polynomial,
    origin: Complex64,
    cell: f64,
    nx: usize,
    ny: usize,
    threshold: f64,
) -> (Grid, Vec<Component>) {
    let greens: Vec<f64> = (0..ny)
        .into_par_iter()
        .flat_map_iter(|j| {
            (0..nx).map(move |i| {
                let z = origin + Complex64::new(i as f64 * cell, j as f64 * cell);
                let g = green_value(p, z);
                // pad by the certified truncation error
                g.value + 2.0 * g.certified_error
            })
        })
        .collect();

    let mut labels = vec![0u32; nx * ny];
    let mut components = Vec::new();
    let mut stack = Vec::new();
    for start in 0..nx * ny {
        if labels[start] != 0 || greens[start] >= threshold {
            continue;
        }
        let label = components.len() as u32 + 1;
        labels[start] = label;
        stack.push(start);
        let mut cells = Vec::new();
        let mut best = start;
        while let Some(idx) = stack.pop() {
            let (i, j) = (idx % nx, idx / nx);
            cells.push((i, j));
            if greens[idx] < greens[best] || (greens[idx] == greens[best] && idx < best) {
                best = idx;
            }
            let neighbours = [
                (i > 0).then(|| idx - 1),
                (i + 1 < nx).then(|| idx + 1),
                (j > 0).then(|| idx - nx),
                (j + 1 < ny).then(|| idx + nx),
            ];
            for n in neighbours.into_iter().flatten() {
                if labels[n] == 0 && greens[n] < threshold {
                    labels[n] = label;
                    stack.push(n);
                }
            }
        }
        let witness = origin + Complex64::new((best % nx) as f64 * cell, (best / nx) as f64 * cell);
        components.push(Component {
            label,
            cells,
            witness,
        });
    }
    (
        Grid {
            origin,
            cell,
            nx,
            ny,
            labels,
        },
        components,
    )
}

/// True when no two of the given labels come within `MIN_SEPARATION` cells.
fn well_separated(grid: &Grid, components: &[&Component]) -> bool {
    if components.len() < 2 {
        return true;
    }
    let kept: Vec<u32> = components.iter().map(|c| c.label).collect();
    let reach = MIN_SEPARATION as i64 - 1;
    components.iter().all(|c| {
        c.cells.iter().all(|&(i, j)| {
            (-reach..=reach).all(|di| {
                (-reach..=reach).all(|dj| {
                    let l = grid.label(i as i64 + di, j as i64 + dj);
                    l == 0 || l == c.label || !kept.contains(&l)
                })
            })
        })
    })
}

fn bounding_box(grid: &Grid, cells: &[(usize, usize)]) -> (Complex64, Complex64) {
    let (mut lo_i, mut lo_j, mut hi_i, mut hi_j) = (usize::MAX, usize::MAX, 0, 0);
    for &(i, j) in cells {
        lo_i = lo_i.min(i);
        lo_j = lo_j.min(j);
        hi_i = hi_i.max(i);
        hi_j = hi_j.max(j);
    }
    let pad = Complex64::new(PAD_CELLS * grid.cell, PAD_CELLS * grid.cell);
    (grid.center(lo_i, lo_j) - pad, grid.center(hi_i, hi_j) + pad)
}

pub fn build_tree(p: &Polynomial, depth: usize) -> Result<MetrizedTree> {
    build_tree_with(p, depth, &TreeOptions::default())
}

pub fn build_tree_with(
    p: &Polynomial,
    depth: usize,
    options: &TreeOptions,
) -> Result<MetrizedTree> {
    if depth < 1 || depth > options.max_depth {
        return Err(Error::InvalidArgument(format!(
            "depth must lie in 1..={}, got {depth}",
            options.max_depth
        )));
    }
    if options.grid < 8 || options.max_grid < options.grid {
        return Err(Error::InvalidArgument(
            "grid sizes must satisfy 8 <= grid <= max_grid".into(),
        ));
    }
    let levels = escape_level_data(p)?;
    let d = p.degree() as f64;
    let l = levels.levels();
    let top = *l.last().unwrap();
    let rho = (l[1] / l[0]).sqrt();
    let height = |k: usize| top / d.powi(k as i32);

    let mut vertices: Vec<TreeVertex> = Vec::new();
    let mut edges = Vec::new();
    let mut locator = Locator::default();

    // layer 0: {G < ρ ℓ_N} is a disk; the window encloses it because
    // G(z) >= log|z| - log(4/3)/(d-1) outside the escape disk.
    let threshold = rho * height(0);
    let half_width = (4.0 / 3.0 * threshold.exp()).max(p.escape_radius()) * 1.1;
    let n = options.grid;
    let cell = 2.0 * half_width / (n - 1) as f64;
    let origin = Complex64::new(-half_width, -half_width);
    let (grid, components) = label_grid(p, origin, cell, n, n, threshold);
    let mut record = GridRecord {
        grid,
        vertex_of_label: HashMap::new(),
    };
    let mut frontier: Frontier = Vec::new();
    for comp in components {
        let id = vertices.len();
        vertices.push(TreeVertex {
            id,
            layer: 0,
            height: height(0),
            witness: comp.witness,
        });
        record.vertex_of_label.insert(comp.label, id);
        frontier.push((id, comp.cells, 0));
    }
    locator.grids.push(record);
    locator.root = 0;

    for layer in 1..=depth {
        let threshold = rho * height(layer);
        let mut next = Vec::new();
        for (parent, cells, parent_grid) in frontier {
            let parent_label = locator.grids[parent_grid]
                .vertex_of_label
                .iter()
                .find(|(_, &v)| v == parent)
                .map(|(&l, _)| l)
                .unwrap();
            let (lo, hi) = bounding_box(&locator.grids[parent_grid].grid, &cells);
            let span = hi - lo;
            let mut n = options.grid;
            let (grid, children) = loop {
                let cell = span.re.max(span.im) / (n - 1) as f64;
                let nx = (span.re / cell).ceil() as usize + 1;
                let ny = (span.im / cell).ceil() as usize + 1;
                let (grid, comps) = label_grid(p, lo, cell, nx, ny, threshold);
                let parent_grid_ref = &locator.grids[parent_grid].grid;
                let inside: Vec<&Component> = comps
                    .iter()
                    .filter(|c| {
                        parent_grid_ref
                            .labels_near(c.witness)
                            .any(|l| l == parent_label)
                    })
                    .collect();
                if !inside.is_empty() && well_separated(&grid, &inside) {
                    let kept: Vec<Component> = inside
                        .into_iter()
                        .map(|c| Component {
                            label: c.label,
                            cells: c.cells.clone(),
                            witness: c.witness,
                        })
                        .collect();
                    break (grid, kept);
                }
                if n >= options.max_grid {
                    return Err(Error::ResolutionTooCoarse { layer });
                }
                n = (n * 2).min(options.max_grid);
            };
            let grid_index = locator.grids.len();
            let mut record = GridRecord {
                grid,
                vertex_of_label: HashMap::new(),
            };
            for Component {
                label,
                cells,
                witness,
            } in children
            {
                let id = vertices.len();
                vertices.push(TreeVertex {
                    id,
                    layer,
                    height: height(layer),
                    witness,
                });
                edges.push(TreeEdge {
                    parent,
                    child: id,
                    length: height(layer - 1) - height(layer),
                });
                record.vertex_of_label.insert(label, id);
                next.push((id, cells, grid_index));
            }
            locator.grids.push(record);
            locator.child_grid.insert(parent, grid_index);
        }
        frontier = next;
    }

    let mut dynamics = BTreeMap::new();
    for v in vertices.iter().filter(|v| v.layer >= 1) {
        let image = p.eval_raw(v.witness);
        let target = locator
            .locate(image, v.layer - 1)
            .ok_or(Error::ResolutionTooCoarse { layer: v.layer })?;
        dynamics.insert(v.id, target);
    }

    Ok(MetrizedTree {
        degree: p.degree(),
        depth,
        vertices,
        edges,
        dynamics,
        locator: Some(Arc::new(locator)),
    })
}

impl MetrizedTree {
    pub fn vertex(&self, id: usize) -> Result<&TreeVertex> {
        self.vertices.get(id).ok_or(Error::UnknownVertex(id))
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.depth + 1];
        for v in &self.vertices {
            sizes[v.layer] += 1;
        }
        sizes
    }

    pub fn parent(&self, id: usize) -> Option<usize> {
        self.edges.iter().find(|e| e.child == id).map(|e| e.parent)
    }

    pub fn children(&self, id: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter(|e| e.parent == id)
            .map(|e| e.child)
            .collect()
    }

    /// Vertex at `layer` whose component contains `z`, if the tree still
    /// carries its grids (trees read back from JSON do not).
    pub fn locate(&self, z: Complex64, layer: usize) -> Option<usize> {
        self.locator.as_ref()?.locate(z, layer)
    }

    /// Sum of edge lengths along the tree path from `v` to `w`.
    pub fn distance(&self, v: usize, w: usize) -> Result<f64> {
        self.vertex(v)?;
        self.vertex(w)?;
        let up: HashMap<usize, (usize, f64)> = self
            .edges
            .iter()
            .map(|e| (e.child, (e.parent, e.length)))
            .collect();
        let ancestors = |mut x: usize| {
            let mut path = vec![(x, 0.0)];
            let mut total = 0.0;
            while let Some(&(parent, len)) = up.get(&x) {
                total += len;
                x = parent;
                path.push((x, total));
            }
            path
        };
        let from_v = ancestors(v);
        let from_w: HashMap<usize, f64> = ancestors(w).into_iter().collect();
        from_v
            .iter()
            .find_map(|(x, dv)| from_w.get(x).map(|dw| dv + dw))
            .ok_or_else(|| {
                Error::InvalidArgument(format!("vertices {v} and {w} are not connected"))
            })
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph tree {\n  rankdir=TB;\n");
        for v in &self.vertices {
            let _ = writeln!(out, "  v{} [label=\"{}\\nh={:.6}\"];", v.id, v.id, v.height);
        }
        for e in &self.edges {
            let _ = writeln!(
                out,
                "  v{} -> v{} [label=\"{:.6}\"];",
                e.parent, e.child, e.length
            );
        }
        for (from, to) in &self.dynamics {
            let _ = writeln!(
                out,
                "  v{from} -> v{to} [style=dashed, color=gray, constraint=false];"
            );
        }
        out.push_str("}\n");
        out
    }
}

pub fn tree_distance(t: &MetrizedTree, v: usize, w: usize) -> Result<f64> {
    t.distance(v, w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsReport {
    pub checked: usize,
    pub max_relative_deviation: f64,
    /// Vertices `v` with `height(σ v) != d height(v)`.
    pub failures: Vec<usize>,
}

impl DynamicsReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks `height(σ(v)) = d · height(v)` for every vertex with an image.
pub fn tree_dynamics_check(t: &MetrizedTree) -> DynamicsReport {
    let d = t.degree as f64;
    let mut max_relative_deviation: f64 = 0.0;
    let mut failures = Vec::new();
    let mut checked = 0;
    for (&v, &image) in &t.dynamics {
        checked += 1;
        let deviation = match (t.vertices.get(v), t.vertices.get(image)) {
            (Some(a), Some(b)) => (b.height - d * a.height).abs() / (d * a.height),
            _ => f64::INFINITY,
        };
        max_relative_deviation = max_relative_deviation.max(deviation);
        if deviation.is_nan() || deviation > DYNAMICS_TOLERANCE {
            failures.push(v);
        }
    }
    DynamicsReport {
        checked,
        max_relative_deviation,
        failures,
    }
}

/// Matches the vertices of `a` to those of `b` through a point map carrying
/// witnesses of `a` into the plane of `b` (a conformal conjugacy).
///
/// Returns the vertex correspondence when it is a bijection on every layer
/// that preserves heights (to `height_tol`, relative), edges, and dynamics.
pub fn match_trees(
    a: &MetrizedTree,
    b: &MetrizedTree,
    point_map: impl Fn(Complex64) -> Complex64,
    height_tol: f64,
) -> std::result::Result<Vec<usize>, String> {
    if a.depth != b.depth || a.degree != b.degree {
        return Err("depth or degree differ".into());
    }
    if a.layer_sizes() != b.layer_sizes() {
        return Err(format!(
            "layer sizes differ: {:?} vs {:?}",
            a.layer_sizes(),
            b.layer_sizes()
        ));
    }
    let mut map = Vec::with_capacity(a.vertices.len());
    for v in &a.vertices {
        let image = b
            .locate(point_map(v.witness), v.layer)
            .ok_or_else(|| format!("vertex {} has no image", v.id))?;
        let w = &b.vertices[image];
        if (w.height - v.height).abs() > height_tol * v.height {
            return Err(format!("heights differ at vertex {}", v.id));
        }
        map.push(image);
    }
    let mut seen = vec![false; b.vertices.len()];
    for &w in &map {
        if std::mem::replace(&mut seen[w], true) {
            return Err(format!("vertex {w} of the second tree is hit twice"));
        }
    }
    for e in &a.edges {
        if b.parent(map[e.child]) != Some(map[e.parent]) {
            return Err(format!("edge {} -> {} is not preserved", e.parent, e.child));
        }
    }
    for (&v, &image) in &a.dynamics {
        if b.dynamics.get(&map[v]) != Some(&map[image]) {
            return Err(format!("dynamics at vertex {v} is not preserved"));
        }
    }
    Ok(map)
}
