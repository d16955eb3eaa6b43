//! Numerical atom decomposition: samples the level coordinate on a grid,
//! labels band regions, extracts gluing circles from region interfaces,
//! measures circle windings by the winding number of mapped boundary loops,
//! and assembles everything into an `AtomGraph`.

use std::collections::HashMap;

use num_complex::Complex64;
use wander_atlas_core::{Atom, AtomGraph, Circle, SingularPoint};

use crate::contour::{sample_tau_rows, Window};
use crate::holo::{HoloError, HoloMap, MapKind};

#[derive(Debug, Clone, PartialEq)]
pub enum ExtractError {
    Holo(HoloError),
    CriticalMargin { base: f64, level: f64 },
    WindowTooSmall,
    Resolution { message: String },
    AmbiguousRegion { message: String },
    Model(String),
}

impl std::fmt::Display for ExtractError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExtractError::Holo(e) => write!(f, "{e}"),
            ExtractError::CriticalMargin { base, level } => write!(
                f,
                "base level {base} is within 0.05 of an integer offset of the critical level {level}"
            ),
            ExtractError::WindowTooSmall => write!(f, "a band region touches the window border"),
            ExtractError::Resolution { message } => write!(f, "resolution: {message}"),
            ExtractError::AmbiguousRegion { message } => write!(f, "ambiguous region: {message}"),
            ExtractError::Model(m) => write!(f, "model: {m}"),
        }
    }
}

impl std::error::Error for ExtractError {}

/// Sensible window for a map and base level: covers the outermost band plus
/// the repeller with a margin.
pub fn auto_window(map: &HoloMap, c: f64, n: usize) -> Window {
    let d = map.degree() as f64;
    let g_max = d.powf(-(c - 1.0));
    let half = match map.kind {
        MapKind::Power(_) => (g_max.exp() * 1.08).max(2.0),
        MapKind::QuadraticPlusC(cc) => {
            let escape = 0.5 * (1.0 + (1.0 + 4.0 * cc.norm()).sqrt()) + 0.15;
            (g_max.exp() * 1.25).max(escape)
        }
    };
    Window::square(half, n)
}

/// Default base level: centers the first branch point one band below the base
/// annulus; `-0.5` for branch-free power maps.
pub fn auto_base_level(map: &HoloMap) -> Result<f64, HoloError> {
    match map.kind {
        MapKind::Power(_) => Ok(-0.5),
        MapKind::QuadraticPlusC(_) => {
            let tau0 = map.tau(Complex64::new(0.0, 0.0))?;
            Ok(tau0 - 0.5)
        }
    }
}

const OUT_REPELLER: i32 = i32::MIN;
const OUT_ATTRACTOR: i32 = i32::MAX;

struct Grid {
    nx: usize,
    ny: usize,
    /// Band index per cell: the atom generation, or an out-of-window marker.
    band: Vec<i32>,
    window: Window,
}

impl Grid {
    fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }
    fn locate(&self, z: Complex64) -> Option<usize> {
        let i = ((z.re - self.window.x0) / self.window.dx()).floor();
        let j = ((z.im - self.window.y0) / self.window.dy()).floor();
        if i < 0.0 || j < 0.0 || i >= self.nx as f64 || j >= self.ny as f64 {
            return None;
        }
        Some(self.idx(i as usize, j as usize))
    }
}

struct Dsu(Vec<u32>);

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu((0..n as u32).collect())
    }
    fn find(&mut self, x: u32) -> u32 {
        let mut root = x;
        while self.0[root as usize] != root {
            root = self.0[root as usize];
        }
        let mut cur = x;
        while self.0[cur as usize] != root {
            let next = self.0[cur as usize];
            self.0[cur as usize] = root;
            cur = next;
        }
        root
    }
    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra as usize] = rb;
        }
    }
}

/// Builds the numerical atom decomposition of the window between levels
/// `c - 1` and `c + depth`, i.e. generations `0` down to `-depth`. The window
/// is fitted by a coarse probe first, so the budget of `n * n` samples is
/// spent on the bands themselves.
pub fn extract_atom_graph(
    map: &HoloMap,
    c: f64,
    depth: u32,
    n: usize,
    threads: usize,
) -> Result<AtomGraph, ExtractError> {
    let generous = auto_window(map, c, n);
    let window = snug_window(map, c, depth, &generous, n, threads);
    extract_atom_graph_in(map, c, depth, window, threads)
}

/// Shrinks a generous window to the bounding box of the in-band cells seen
/// by a coarse probe, with a safety margin.
fn snug_window(
    map: &HoloMap,
    c: f64,
    depth: u32,
    generous: &Window,
    n: usize,
    threads: usize,
) -> Window {
    let probe = Window { nx: 192, ny: 192, ..*generous };
    let field =
        sample_tau_rows(map, &probe, probe.ny, probe.nx, |w, i, j| w.cell_center(i, j), threads);
    let lo = -(depth as i32) as f64;
    let mut bbox: Option<(f64, f64, f64, f64)> = None;
    for j in 0..probe.ny {
        for i in 0..probe.nx {
            let t = field[j * probe.nx + i];
            if !t.is_finite() {
                continue;
            }
            let g = (c - t).floor();
            if !(lo..=0.0).contains(&g) {
                continue;
            }
            let z = probe.cell_center(i, j);
            bbox = Some(match bbox {
                None => (z.re, z.re, z.im, z.im),
                Some((x0, x1, y0, y1)) => (x0.min(z.re), x1.max(z.re), y0.min(z.im), y1.max(z.im)),
            });
        }
    }
    match bbox {
        Some((x0, x1, y0, y1)) => {
            let margin = 3.0 * probe.dx().max(probe.dy());
            Window {
                x0: x0 - margin,
                x1: x1 + margin,
                y0: y0 - margin,
                y1: y1 + margin,
                nx: n,
                ny: n,
            }
        }
        None => *generous,
    }
}

pub fn extract_atom_graph_in(
    map: &HoloMap,
    c: f64,
    depth: u32,
    window: Window,
    threads: usize,
) -> Result<AtomGraph, ExtractError> {
    for level in map.critical_levels().map_err(ExtractError::Holo)? {
        let offset = level - c;
        let dist = (offset - offset.round()).abs();
        if dist < 0.05 {
            return Err(ExtractError::CriticalMargin { base: c, level });
        }
    }

    let lo = -(depth as i32);
    let grid = build_bands(map, c, lo, window, threads)?;
    let (nx, ny) = (grid.nx, grid.ny);

    // Kept cells must stay clear of the window border.
    for i in 0..nx {
        for j in [0, ny - 1] {
            if in_band(grid.band[grid.idx(i, j)]) {
                return Err(ExtractError::WindowTooSmall);
            }
        }
    }
    for j in 0..ny {
        for i in [0, nx - 1] {
            if in_band(grid.band[grid.idx(i, j)]) {
                return Err(ExtractError::WindowTooSmall);
            }
        }
    }

    // Union-find within bands.
    let mut dsu = Dsu::new(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let a = grid.idx(i, j);
            if !in_band(grid.band[a]) {
                continue;
            }
            if i + 1 < nx {
                let b = a + 1;
                if grid.band[b] == grid.band[a] {
                    dsu.union(a as u32, b as u32);
                }
            }
            if j + 1 < ny {
                let b = a + nx;
                if grid.band[b] == grid.band[a] {
                    dsu.union(a as u32, b as u32);
                }
            }
        }
    }
    // Region labels in first-encounter order.
    let mut region_of_root: HashMap<u32, u32> = HashMap::new();
    let mut regions: Vec<Region> = Vec::new();
    let mut cell_region: Vec<u32> = vec![u32::MAX; nx * ny];
    for (idx, slot) in cell_region.iter_mut().enumerate() {
        if !in_band(grid.band[idx]) {
            continue;
        }
        let root = dsu.find(idx as u32);
        let r = *region_of_root.entry(root).or_insert_with(|| {
            regions.push(Region { band: grid.band[idx], cells: Vec::new() });
            (regions.len() - 1) as u32
        });
        *slot = r;
        regions[r as usize].cells.push(idx as u32);
    }
    if regions.is_empty() {
        return Err(ExtractError::Resolution { message: "no band cells in window".into() });
    }
    for (r, region) in regions.iter().enumerate() {
        if region.cells.len() < 8 {
            return Err(ExtractError::Resolution {
                message: format!(
                    "region {r} in band {} has only {} cells; refine the grid",
                    region.band,
                    region.cells.len()
                ),
            });
        }
    }

    // f-action per region by mapping interior sample points.
    let mut region_image: Vec<Option<u32>> = vec![None; regions.len()];
    for (r, region) in regions.iter().enumerate() {
        if region.band == 0 {
            continue; // image is beyond the window on the attractor side
        }
        let mut votes: HashMap<u32, usize> = HashMap::new();
        for &cell in sample_cells(&grid, region, &cell_region) {
            let z = grid.window.cell_center((cell as usize) % nx, (cell as usize) / nx);
            if let Some(t) = grid.locate(map.apply(z)) {
                let tr = cell_region[t];
                if tr != u32::MAX && regions[tr as usize].band == region.band + 1 {
                    *votes.entry(tr).or_default() += 1;
                }
            }
        }
        let best = votes.iter().max_by_key(|(_, &n)| n);
        match best {
            Some((&target, &n)) if n * 2 > votes.values().sum::<usize>() => {
                region_image[r] = Some(target);
            }
            _ => {
                return Err(ExtractError::AmbiguousRegion {
                    message: format!(
                        "region {r} in band {} has no clear image region ({votes:?})",
                        region.band
                    ),
                });
            }
        }
    }

    // Interface edges grouped by circle key, split into connected loops.
    let circles = trace_circles(&grid, &cell_region, lo)?;

    // Windings by the image-loop winding number around an enclosed point.
    let repeller_cells: Vec<u32> = (0..nx * ny)
        .filter(|&i| grid.band[i] == OUT_REPELLER)
        .map(|i| i as u32)
        .collect();
    let mut windings = Vec::with_capacity(circles.len());
    for circ in &circles {
        windings.push(circle_winding(map, &grid, circ, &repeller_cells)?);
    }

    assemble(map, c, depth, &grid, &regions, &region_image, circles, windings)
}

fn in_band(b: i32) -> bool {
    b != OUT_REPELLER && b != OUT_ATTRACTOR
}

fn band_of(c: f64, lo: i32, t: f64) -> i32 {
    if !t.is_finite() {
        return OUT_REPELLER;
    }
    let g = (c - t).floor();
    if g < lo as f64 {
        OUT_REPELLER
    } else if g > 0.0 {
        OUT_ATTRACTOR
    } else {
        g as i32
    }
}

/// Adjacent cells whose bands are not nested: a jump of two or more levels,
/// or frontier contact away from the window's own frontier. These mark spots
/// where a band is thinner than the sampling.
fn violation_cells(band: &[i32], nx: usize, ny: usize, lo: i32) -> Vec<usize> {
    let mut out = Vec::new();
    let mut check = |a: usize, b: usize| {
        let (ba, bb) = (band[a], band[b]);
        let bad = match (in_band(ba), in_band(bb)) {
            (true, true) => (ba - bb).abs() >= 2,
            (true, false) => (bb == OUT_REPELLER && ba > lo) || (bb == OUT_ATTRACTOR && ba < 0),
            (false, true) => (ba == OUT_REPELLER && bb > lo) || (ba == OUT_ATTRACTOR && bb < 0),
            (false, false) => false,
        };
        if bad {
            out.push(a);
            out.push(b);
        }
    };
    for j in 0..ny {
        for i in 0..nx {
            let a = j * nx + i;
            if i + 1 < nx {
                check(a, a + 1);
            }
            if j + 1 < ny {
                check(a, a + nx);
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Bands at the base resolution, refined once by a factor of two around
/// nesting violations (re-sampling only near the violations).
fn build_bands(
    map: &HoloMap,
    c: f64,
    lo: i32,
    window: Window,
    threads: usize,
) -> Result<Grid, ExtractError> {
    let (nx, ny) = (window.nx, window.ny);
    let field =
        sample_tau_rows(map, &window, ny, nx, |w, i, j| w.cell_center(i, j), threads);
    let band: Vec<i32> = field.iter().map(|&t| band_of(c, lo, t)).collect();
    let violations = violation_cells(&band, nx, ny, lo);
    if violations.is_empty() {
        return Ok(Grid { nx, ny, band, window });
    }

    // Dilate the violation mask by two cells; only fine cells under the mask
    // are re-evaluated, the rest inherit their parent band.
    let mut mask = vec![false; nx * ny];
    for &v in &violations {
        let (vi, vj) = (v % nx, v / nx);
        for dj in -2i64..=2 {
            for di in -2i64..=2 {
                let (i, j) = (vi as i64 + di, vj as i64 + dj);
                if i >= 0 && j >= 0 && (i as usize) < nx && (j as usize) < ny {
                    mask[j as usize * nx + i as usize] = true;
                }
            }
        }
    }
    let fine_window = Window { nx: nx * 2, ny: ny * 2, ..window };
    let (fx, fy) = (fine_window.nx, fine_window.ny);
    let mut fine = vec![0i32; fx * fy];
    let todo: Vec<u32> = (0..fx * fy)
        .filter(|&k| {
            let (i, j) = (k % fx, k / fx);
            mask[(j / 2) * nx + i / 2]
        })
        .map(|k| k as u32)
        .collect();
    for (k, slot) in fine.iter_mut().enumerate() {
        let (i, j) = (k % fx, k / fx);
        *slot = band[(j / 2) * nx + i / 2];
    }
    // Parallel re-evaluation of the masked fine cells, merged in index order.
    let threads = threads.clamp(1, todo.len().max(1));
    let chunk = todo.len().div_ceil(threads);
    let results: Vec<(u32, i32)> = std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for piece in todo.chunks(chunk.max(1)) {
            handles.push(scope.spawn(move || {
                piece
                    .iter()
                    .map(|&k| {
                        let (i, j) = ((k as usize) % fx, (k as usize) / fx);
                        let z = fine_window.cell_center(i, j);
                        let t = map.tau(z).unwrap_or(f64::INFINITY);
                        (k, band_of(c, lo, t))
                    })
                    .collect::<Vec<_>>()
            }));
        }
        handles.into_iter().flat_map(|h| h.join().expect("refine worker")).collect()
    });
    for (k, b) in results {
        fine[k as usize] = b;
    }
    let still = violation_cells(&fine, fx, fy, lo);
    if !still.is_empty() {
        let (i, j) = (still[0] % fx, still[0] / fx);
        let z = fine_window.cell_center(i, j);
        return Err(ExtractError::Resolution {
            message: format!(
                "{} band-nesting violations remain after refinement (first near {:.4}+{:.4}i); \
                 use a finer grid or a shallower depth",
                still.len() / 2,
                z.re,
                z.im
            ),
        });
    }
    Ok(Grid { nx: fx, ny: fy, band: fine, window: fine_window })
}

struct Region {
    band: i32,
    cells: Vec<u32>,
}

/// Up to nine interior cells spread through the region.
fn sample_cells<'a>(grid: &Grid, region: &'a Region, cell_region: &[u32]) -> Vec<&'a u32> {
    let interior: Vec<&u32> = region
        .cells
        .iter()
        .filter(|&&cell| {
            let (i, j) = ((cell as usize) % grid.nx, (cell as usize) / grid.nx);
            i > 0
                && j > 0
                && i + 1 < grid.nx
                && j + 1 < grid.ny
                && [cell - 1, cell + 1, cell - grid.nx as u32, cell + grid.nx as u32]
                    .iter()
                    .all(|&n| cell_region[n as usize] == cell_region[cell as usize])
        })
        .collect();
    let pool = if interior.is_empty() { region.cells.iter().collect() } else { interior };
    let step = (pool.len() / 9).max(1);
    pool.into_iter().step_by(step).take(9).collect()
}

/// One extracted gluing circle: its key and an ordered vertex loop.
struct TracedCircle {
    inner_region: Option<u32>,
    outer_region: Option<u32>,
    level: i32,
    /// Closed polyline over grid nodes.
    loop_points: Vec<Complex64>,
}

/// Collects interface edges between adjacent cells of neighboring classes and
/// splits each interface into closed node loops.
/// (inner region, outer region, level): identity of one gluing circle.
type CircleKey = (Option<u32>, Option<u32>, i32);

fn trace_circles(
    grid: &Grid,
    cell_region: &[u32],
    lo: i32,
) -> Result<Vec<TracedCircle>, ExtractError> {
    // node ids: (nx + 1) columns
    let cols = grid.nx + 1;
    let mut edges: HashMap<CircleKey, Vec<(u32, u32)>> = HashMap::new();
    let mut push = |key: CircleKey, v1: u32, v2: u32| edges.entry(key).or_default().push((v1, v2));
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let a = grid.idx(i, j);
            // right neighbor: shared vertical edge at node column i+1
            if i + 1 < grid.nx {
                let b = a + 1;
                if let Some(key) = interface_key(grid, cell_region, a, b, lo)? {
                    let v1 = (j * cols + i + 1) as u32;
                    let v2 = ((j + 1) * cols + i + 1) as u32;
                    push(key, v1, v2);
                }
            }
            // top neighbor: shared horizontal edge at node row j+1
            if j + 1 < grid.ny {
                let b = a + grid.nx;
                if let Some(key) = interface_key(grid, cell_region, a, b, lo)? {
                    let v1 = ((j + 1) * cols + i) as u32;
                    let v2 = ((j + 1) * cols + i + 1) as u32;
                    push(key, v1, v2);
                }
            }
        }
    }

    let mut out = Vec::new();
    let mut keys: Vec<CircleKey> = edges.keys().copied().collect();
    keys.sort();
    for key in keys {
        let segs = &edges[&key];
        for loop_vertices in close_loops(segs).map_err(|m| ExtractError::Resolution {
            message: format!("interface {key:?}: {m}"),
        })? {
            let loop_points = loop_vertices
                .iter()
                .map(|&v| {
                    let (i, j) = ((v as usize) % cols, (v as usize) / cols);
                    grid.window.node(i, j)
                })
                .collect();
            out.push(TracedCircle {
                inner_region: key.0,
                outer_region: key.1,
                level: key.2,
                loop_points,
            });
        }
    }
    Ok(out)
}

/// Circle key for a pair of adjacent cells, if the pair is an interface.
/// Inner side is the repeller-side region, outer the attractor-side one.
fn interface_key(
    grid: &Grid,
    cell_region: &[u32],
    a: usize,
    b: usize,
    lo: i32,
) -> Result<Option<CircleKey>, ExtractError> {
    let (ba, bb) = (grid.band[a], grid.band[b]);
    if ba == bb {
        return Ok(None);
    }
    let side = |idx: usize| (grid.band[idx], cell_region[idx]);
    let ((b1, r1), (b2, r2)) = (side(a), side(b));
    // orient so side 1 is the repeller side (smaller band)
    let (low, high) = if class_rank(b1) < class_rank(b2) { ((b1, r1), (b2, r2)) } else { ((b2, r2), (b1, r1)) };
    match (in_band(low.0), in_band(high.0)) {
        (true, true) => {
            if high.0 - low.0 != 1 {
                return Err(ExtractError::Resolution {
                    message: format!(
                        "bands {} and {} touch; levels are not nested at this resolution",
                        low.0, high.0
                    ),
                });
            }
            Ok(Some((Some(low.1), Some(high.1), high.0)))
        }
        (false, true) => {
            // repeller-out below an in-band cell: the bottom frontier
            if high.0 != lo {
                return Err(ExtractError::Resolution {
                    message: format!(
                        "band {} touches unresolved repeller-side cells (band {} expected)",
                        high.0, lo
                    ),
                });
            }
            Ok(Some((None, Some(high.1), high.0)))
        }
        (true, false) => {
            // attractor-out above an in-band cell: the top frontier
            if low.0 != 0 {
                return Err(ExtractError::Resolution {
                    message: format!("band {} touches the attractor side directly", low.0),
                });
            }
            Ok(Some((Some(low.1), None, 1)))
        }
        (false, false) => Ok(None),
    }
}

fn class_rank(b: i32) -> i64 {
    if b == OUT_REPELLER {
        i64::MIN
    } else if b == OUT_ATTRACTOR {
        i64::MAX
    } else {
        b as i64
    }
}

/// Chains unit edges into closed loops. Vertices have even degree; at
/// degree-4 pinch vertices the walk prefers to continue to the unused edge
/// that does not immediately backtrack.
fn close_loops(segs: &[(u32, u32)]) -> Result<Vec<Vec<u32>>, String> {
    let mut adjacency: HashMap<u32, Vec<(usize, u32)>> = HashMap::new();
    for (k, &(a, b)) in segs.iter().enumerate() {
        adjacency.entry(a).or_default().push((k, b));
        adjacency.entry(b).or_default().push((k, a));
    }
    for (v, inc) in &adjacency {
        if inc.len() % 2 != 0 {
            return Err(format!("node {v} has odd interface degree {}", inc.len()));
        }
    }
    let mut used = vec![false; segs.len()];
    let mut loops = Vec::new();
    for start_edge in 0..segs.len() {
        if used[start_edge] {
            continue;
        }
        used[start_edge] = true;
        let (start, mut cur) = segs[start_edge];
        let mut walk = vec![start, cur];
        while cur != start {
            let next = adjacency[&cur]
                .iter()
                .find(|(k, _)| !used[*k])
                .copied()
                .ok_or_else(|| format!("walk stuck at node {cur}"))?;
            used[next.0] = true;
            cur = next.1;
            walk.push(cur);
        }
        loops.push(walk);
    }
    Ok(loops)
}

/// Degree of the map restricted to a circle: the winding number of the mapped
/// loop around a point enclosed by its image.
fn circle_winding(
    map: &HoloMap,
    grid: &Grid,
    circ: &TracedCircle,
    repeller_cells: &[u32],
) -> Result<u32, ExtractError> {
    let step = (circ.loop_points.len() / 192).max(1);
    let image_loop: Vec<Complex64> =
        circ.loop_points.iter().step_by(step).map(|&z| map.apply(z)).collect();
    if image_loop.len() < 4 {
        return Err(ExtractError::Resolution {
            message: format!("image loop of a level-{} circle has too few points", circ.level),
        });
    }
    // Reference point: a repeller-side point enclosed by the source loop
    // (a simple curve, so ray casting is reliable), pushed forward by the
    // map. Its image stays enclosed by the image loop, which may wind
    // several times and cannot be ray-cast directly.
    let (mut re_lo, mut re_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut im_lo, mut im_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for z in &circ.loop_points {
        re_lo = re_lo.min(z.re);
        re_hi = re_hi.max(z.re);
        im_lo = im_lo.min(z.im);
        im_hi = im_hi.max(z.im);
    }
    let mut reference = None;
    for &cell in repeller_cells {
        let z = grid.window.cell_center((cell as usize) % grid.nx, (cell as usize) / grid.nx);
        if z.re < re_lo || z.re > re_hi || z.im < im_lo || z.im > im_hi {
            continue;
        }
        if point_in_polygon(z, &circ.loop_points) {
            reference = Some(map.apply(z));
            break;
        }
    }
    let p = reference.ok_or_else(|| ExtractError::AmbiguousRegion {
        message: format!("no enclosed repeller point for a level-{} circle", circ.level),
    })?;
    let mut total = 0.0f64;
    for w in image_loop.windows(2) {
        let a = (w[0] - p).arg();
        let bdiff = (w[1] - p).arg() - a;
        total += wrap_angle(bdiff);
    }
    let closing = (image_loop[0] - p).arg() - (image_loop[image_loop.len() - 1] - p).arg();
    total += wrap_angle(closing);
    let turns = total / core::f64::consts::TAU;
    let rounded = turns.round();
    if (turns - rounded).abs() > 0.25 || rounded.abs() < 0.5 {
        return Err(ExtractError::AmbiguousRegion {
            message: format!(
                "winding of a level-{} circle is not integral ({turns:.3}); refine the grid",
                circ.level
            ),
        });
    }
    Ok(rounded.abs() as u32)
}

fn wrap_angle(mut a: f64) -> f64 {
    while a > core::f64::consts::PI {
        a -= core::f64::consts::TAU;
    }
    while a < -core::f64::consts::PI {
        a += core::f64::consts::TAU;
    }
    a
}

fn point_in_polygon(p: Complex64, polygon: &[Complex64]) -> bool {
    let mut inside = false;
    let n = polygon.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (polygon[i], polygon[j]);
        if (a.im > p.im) != (b.im > p.im) {
            let x = (b.re - a.re) * (p.im - a.im) / (b.im - a.im) + a.re;
            if p.re < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    map: &HoloMap,
    c: f64,
    depth: u32,
    grid: &Grid,
    regions: &[Region],
    region_image: &[Option<u32>],
    circles: Vec<TracedCircle>,
    windings: Vec<u32>,
) -> Result<AtomGraph, ExtractError> {
    // Canonical atom ids: generation from the base downward, then by the
    // first cell in scan order.
    let mut region_order: Vec<usize> = (0..regions.len()).collect();
    region_order.sort_by_key(|&r| (-(regions[r].band as i64), regions[r].cells[0]));
    let mut atom_id_of_region: Vec<u32> = vec![0; regions.len()];
    for (id, &r) in region_order.iter().enumerate() {
        atom_id_of_region[r] = id as u32;
    }
    // Canonical circle ids: level from the top downward, then loop anchor.
    let mut circle_order: Vec<usize> = (0..circles.len()).collect();
    circle_order.sort_by_key(|&k| {
        let anchor = circles[k]
            .loop_points
            .first()
            .map(|z| (z.im * 1e6) as i64 * 1_000_000 + (z.re * 1e6) as i64)
            .unwrap_or(0);
        (-(circles[k].level as i64), anchor)
    });
    let mut circle_id_of: Vec<u32> = vec![0; circles.len()];
    for (id, &k) in circle_order.iter().enumerate() {
        circle_id_of[k] = id as u32;
    }

    let mut atoms: Vec<Atom> = region_order
        .iter()
        .map(|&r| Atom {
            id: atom_id_of_region[r],
            generation: regions[r].band,
            internal: Vec::new(),
            external: Vec::new(),
            singular: Vec::new(),
            image: region_image[r].map(|t| atom_id_of_region[t as usize]),
            cover_degree: 0,
        })
        .collect();
    atoms.sort_by_key(|a| a.id);

    let mut wire: Vec<Circle> = Vec::with_capacity(circles.len());
    for (k, circ) in circles.iter().enumerate() {
        wire.push(Circle {
            id: circle_id_of[k],
            level: circ.level,
            inner_atom: circ.inner_region.map(|r| atom_id_of_region[r as usize]),
            outer_atom: circ.outer_region.map(|r| atom_id_of_region[r as usize]),
            image_circle: None,
            winding: windings[k],
        });
        if let Some(inner) = wire.last().unwrap().inner_atom {
            atoms[inner as usize].internal.push(circle_id_of[k]);
        }
        if let Some(outer) = wire.last().unwrap().outer_atom {
            atoms[outer as usize].external.push(circle_id_of[k]);
        }
    }
    for a in &mut atoms {
        a.internal.sort_unstable();
        a.external.sort_unstable();
    }
    wire.sort_by_key(|c| c.id);

    // Image circles: pair lookup where both image atoms are known, geometric
    // matching for the bottom frontier.
    let mut by_pair: HashMap<(Option<u32>, Option<u32>), u32> = HashMap::new();
    for c in &wire {
        by_pair.insert((c.inner_atom, c.outer_atom), c.id);
    }
    let loop_of: HashMap<u32, &TracedCircle> = circles
        .iter()
        .enumerate()
        .map(|(k, circ)| (circle_id_of[k], circ))
        .collect();
    let mut assignments: Vec<(u32, Option<u32>)> = Vec::new();
    for c in &wire {
        if c.level >= 1 {
            assignments.push((c.id, None));
            continue;
        }
        let image = match (c.inner_atom, c.outer_atom) {
            (Some(inner), Some(outer)) => {
                let (ii, oi) = (atoms[inner as usize].image, atoms[outer as usize].image);
                match (ii, oi) {
                    (Some(a), Some(b)) => by_pair.get(&(Some(a), Some(b))).copied(),
                    (Some(a), None) => by_pair.get(&(Some(a), None)).copied(),
                    _ => None,
                }
            }
            (None, Some(outer)) => {
                // bottom frontier: match geometrically among the image atom's
                // external circles
                let target_atom = atoms[outer as usize].image;
                match target_atom {
                    Some(t) => nearest_external(map, &atoms, &wire, &loop_of, c.id, t),
                    None => None,
                }
            }
            _ => None,
        };
        match image {
            Some(img) => assignments.push((c.id, Some(img))),
            None => {
                return Err(ExtractError::AmbiguousRegion {
                    message: format!("no image circle found for circle {} at level {}", c.id, c.level),
                })
            }
        }
    }
    for (id, img) in assignments {
        wire[id as usize].image_circle = img;
    }

    // Singular points: locate escaping critical points in their regions.
    for (cp, mult) in map.critical_points() {
        if let Some(cell) = grid.locate(cp) {
            if in_band(grid.band[cell]) {
                // find the region through the cell's atom id
                for (r, region) in regions.iter().enumerate() {
                    if region.band == grid.band[cell] && region.cells.binary_search(&(cell as u32)).is_ok()
                    {
                        let id = atom_id_of_region[r] as usize;
                        atoms[id].singular.push(SingularPoint { mult });
                        break;
                    }
                }
            }
        }
    }

    // Covering degrees: over each boundary circle of the image the preimage
    // windings sum to the covering degree, so the internal sum is the degree
    // times the image's internal circle count (one for the annulus beyond
    // the window top). The external side cross-checks it.
    let image_counts: HashMap<u32, (u32, u32)> = atoms
        .iter()
        .map(|a| (a.id, (a.internal.len() as u32, a.external.len() as u32)))
        .collect();
    let mut covers = Vec::with_capacity(atoms.len());
    for a in &atoms {
        let internal_sum: u32 = a.internal.iter().map(|&cid| wire[cid as usize].winding).sum();
        let external_sum: u32 = a.external.iter().map(|&cid| wire[cid as usize].winding).sum();
        let (ia, ib) = match a.image {
            Some(img) => image_counts[&img],
            None => (1, 1),
        };
        let consistent = ia > 0
            && ib > 0
            && internal_sum.is_multiple_of(ia)
            && internal_sum / ia == external_sum / ib
            && external_sum.is_multiple_of(ib);
        if !consistent {
            return Err(ExtractError::AmbiguousRegion {
                message: format!(
                    "atom {}: boundary degrees disagree (internal {internal_sum} over {ia} \
                     circles, external {external_sum} over {ib})",
                    a.id
                ),
            });
        }
        covers.push(internal_sum / ia);
    }
    for (a, k) in atoms.iter_mut().zip(covers) {
        a.cover_degree = k;
    }

    // Base chain: descend from the top atom while bands stay annular.
    let mut top_atoms: Vec<u32> =
        atoms.iter().filter(|a| a.generation == 0).map(|a| a.id).collect();
    if top_atoms.len() != 1 {
        return Err(ExtractError::AmbiguousRegion {
            message: format!("expected one base annulus, found {}", top_atoms.len()),
        });
    }
    let mut base_chain = Vec::new();
    let mut cursor = top_atoms.pop();
    while let Some(id) = cursor {
        let a = &atoms[id as usize];
        if !a.singular.is_empty() {
            break;
        }
        base_chain.push(id);
        cursor = if a.external.len() == 1 {
            wire[a.external[0] as usize].inner_atom
        } else {
            None
        };
    }

    let degree = map.degree();
    let _ = c;
    AtomGraph::from_parts(degree, atoms, wire, base_chain, depth)
        .map_err(|e| ExtractError::Model(e.to_string()))
}

/// Among the externals of atom `t`, the circle whose polyline is nearest to
/// the mapped loop of circle `cid`.
fn nearest_external(
    map: &HoloMap,
    atoms: &[Atom],
    wire: &[Circle],
    loop_of: &HashMap<u32, &TracedCircle>,
    cid: u32,
    t: u32,
) -> Option<u32> {
    let source = loop_of.get(&cid)?;
    let samples: Vec<Complex64> = source
        .loop_points
        .iter()
        .step_by((source.loop_points.len() / 16).max(1))
        .map(|&z| map.apply(z))
        .collect();
    let mut best: Option<(f64, u32)> = None;
    for &cand in &atoms[t as usize].external {
        let target = loop_of.get(&cand)?;
        let d: f64 = samples
            .iter()
            .map(|s| {
                target
                    .loop_points
                    .iter()
                    .step_by((target.loop_points.len() / 64).max(1))
                    .map(|&v| (s - v).norm_sqr())
                    .fold(f64::INFINITY, f64::min)
            })
            .sum();
        if best.map(|(bd, _)| d < bd).unwrap_or(true) {
            best = Some((d, wire[cand as usize].id));
        }
    }
    best.map(|(_, id)| id)
}
