//! Level-curve tracing: sampled `tau` fields, marching squares and connected
//! component counting.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::holo::{HoloError, HoloMap};

/// Rectangular sampling window. `nx` by `ny` counts grid cells; nodes are
/// `(nx + 1) * (ny + 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Window {
    pub fn square(half: f64, n: usize) -> Self {
        Window { x0: -half, x1: half, y0: -half, y1: half, nx: n, ny: n }
    }

    pub fn dx(&self) -> f64 {
        (self.x1 - self.x0) / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y1 - self.y0) / self.ny as f64
    }

    pub fn node(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.x0 + i as f64 * self.dx(), self.y0 + j as f64 * self.dy())
    }

    pub fn cell_center(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(
            self.x0 + (i as f64 + 0.5) * self.dx(),
            self.y0 + (j as f64 + 0.5) * self.dy(),
        )
    }
}

/// Default worker count: `WANDER_ATLAS_THREADS`, else the machine's
/// parallelism.
pub fn default_threads() -> usize {
    std::env::var("WANDER_ATLAS_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Samples `tau` row by row; non-escaping points come back as `+inf` (they
/// lie beyond every level toward the repeller). Rows are distributed over
/// `threads` workers and reassembled in index order, so the result does not
/// depend on scheduling.
pub fn sample_tau_rows(
    map: &HoloMap,
    window: &Window,
    rows: usize,
    cols: usize,
    at: impl Fn(&Window, usize, usize) -> Complex64 + Sync,
    threads: usize,
) -> Vec<f64> {
    let threads = threads.clamp(1, rows.max(1));
    let mut field = vec![f64::INFINITY; rows * cols];
    let chunk_rows = rows.div_ceil(threads);
    std::thread::scope(|scope| {
        let mut remaining: &mut [f64] = &mut field;
        let mut j0 = 0usize;
        let mut handles = Vec::new();
        while j0 < rows {
            let take = chunk_rows.min(rows - j0);
            let (chunk, rest) = remaining.split_at_mut(take * cols);
            remaining = rest;
            let at = &at;
            let start = j0;
            handles.push(scope.spawn(move || {
                for (dj, row) in chunk.chunks_mut(cols).enumerate() {
                    let j = start + dj;
                    for (i, slot) in row.iter_mut().enumerate() {
                        *slot = map.tau(at(window, i, j)).unwrap_or(f64::INFINITY);
                    }
                }
            }));
            j0 += take;
        }
        for h in handles {
            h.join().expect("sampler worker");
        }
    });
    field
}

#[derive(Debug, Clone)]
pub struct LevelTrace {
    pub level: f64,
    /// Closed polylines, one per connected component of the level curve.
    pub components: Vec<Vec<(f64, f64)>>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TraceError {
    NearCriticalLevel { level: f64, critical: f64 },
    Holo(HoloError),
}

impl std::fmt::Display for TraceError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TraceError::NearCriticalLevel { level, critical } => {
                write!(f, "level {level} is within 1e-3 of the critical level {critical}")
            }
            TraceError::Holo(e) => write!(f, "{e}"),
        }
    }
}

/// Connected components of the level curve `tau = t` inside the window,
/// by marching squares over the node field with endpoint-chained components.
pub fn trace_levels(
    map: &HoloMap,
    t: f64,
    window: &Window,
    threads: usize,
) -> Result<LevelTrace, TraceError> {
    for critical in map.critical_levels().map_err(TraceError::Holo)? {
        if (t - critical).abs() < 1e-3 {
            return Err(TraceError::NearCriticalLevel { level: t, critical });
        }
    }
    let (rows, cols) = (window.ny + 1, window.nx + 1);
    let field = sample_tau_rows(map, window, rows, cols, |w, i, j| w.node(i, j), threads);
    let value = |i: usize, j: usize| field[j * cols + i];

    // Crossing points live on grid edges; segments are keyed by the exact
    // edge identity (kind, i, j) so chaining never depends on float rounding.
    type EdgeKey = (u8, usize, usize);
    type Seg = (EdgeKey, EdgeKey, (f64, f64), (f64, f64));
    let mut segments: HashMap<EdgeKey, Vec<Seg>> = HashMap::new();
    let dx = window.dx();
    let dy = window.dy();
    let frac = |a: f64, b: f64| -> f64 {
        if (b - a).abs() < f64::MIN_POSITIVE { 0.5 } else { ((t - a) / (b - a)).clamp(0.0, 1.0) }
    };
    const H: u8 = 0; // horizontal edge between nodes (i, j) and (i + 1, j)
    const V: u8 = 1; // vertical edge between nodes (i, j) and (i, j + 1)
    for j in 0..window.ny {
        for i in 0..window.nx {
            let bl = value(i, j);
            let br = value(i + 1, j);
            let tl = value(i, j + 1);
            let tr = value(i + 1, j + 1);
            let mut case = 0u8;
            if bl > t {
                case |= 1;
            }
            if br > t {
                case |= 2;
            }
            if tr > t {
                case |= 4;
            }
            if tl > t {
                case |= 8;
            }
            if case == 0 || case == 15 {
                continue;
            }
            let x = window.x0 + i as f64 * dx;
            let y = window.y0 + j as f64 * dy;
            let bottom = ((H, i, j), (x + frac(bl, br) * dx, y));
            let top = ((H, i, j + 1), (x + frac(tl, tr) * dx, y + dy));
            let left = ((V, i, j), (x, y + frac(bl, tl) * dy));
            let right = ((V, i + 1, j), (x + dx, y + frac(br, tr) * dy));
            let mut push = |a: (EdgeKey, (f64, f64)), b: (EdgeKey, (f64, f64))| {
                segments.entry(a.0).or_default().push((a.0, b.0, a.1, b.1));
            };
            match case {
                1 => push(left, bottom),
                2 => push(bottom, right),
                3 => push(left, right),
                4 => push(right, top),
                5 => {
                    push(left, top);
                    push(right, bottom);
                }
                6 => push(bottom, top),
                7 => push(left, top),
                8 => push(top, left),
                9 => push(top, bottom),
                10 => {
                    push(bottom, left);
                    push(top, right);
                }
                11 => push(top, right),
                12 => push(right, left),
                13 => push(right, bottom),
                14 => push(bottom, left),
                _ => unreachable!(),
            }
        }
    }

    let mut components = Vec::new();
    let mut warnings = Vec::new();
    let cell_diag = (dx * dx + dy * dy).sqrt();
    while !segments.is_empty() {
        let start_key = segments.keys().min().copied().expect("non-empty");
        let bucket = segments.get_mut(&start_key).expect("key present");
        let (first_key, mut cur_key, first_pt, cur_pt) = bucket.pop().expect("non-empty bucket");
        if bucket.is_empty() {
            segments.remove(&start_key);
        }
        let mut polyline = vec![first_pt, cur_pt];
        while cur_key != first_key {
            let Some(bucket) = segments.get_mut(&cur_key) else { break };
            let (_, next_key, _, next_pt) = bucket.pop().expect("non-empty bucket");
            if bucket.is_empty() {
                segments.remove(&cur_key);
            }
            polyline.push(next_pt);
            cur_key = next_key;
        }
        if cur_key != first_key {
            warnings.push(format!(
                "open contour of {} points near ({:.3}, {:.3}); the curve leaves the window",
                polyline.len(),
                first_pt.0,
                first_pt.1
            ));
        }
        let span = polyline
            .iter()
            .map(|p| ((p.0 - first_pt.0).powi(2) + (p.1 - first_pt.1).powi(2)).sqrt())
            .fold(0.0f64, f64::max);
        if span < 3.0 * cell_diag {
            warnings.push(format!(
                "component near ({:.3}, {:.3}) spans {span:.4}, close to the grid spacing",
                first_pt.0, first_pt.1
            ));
        }
        components.push(polyline);
    }

    Ok(LevelTrace { level: t, components, warnings })
}
