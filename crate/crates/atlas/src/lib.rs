//! Numerical companion to `wander-atlas-core`: polynomial dynamics as ground
//! truth (escape potentials, preimage trees, level-curve tracing, atom-graph
//! extraction) plus the generated-versus-extracted cross-check.

pub mod contour;
pub mod extract;
pub mod holo;

pub use contour::{default_threads, trace_levels, LevelTrace, TraceError, Window};
pub use extract::{auto_base_level, auto_window, extract_atom_graph, ExtractError};
pub use holo::{HoloError, HoloMap, MapKind, NeutralSection};

use wander_atlas_core::{generate, iso, validate, AtomGraph, GenerateError, MapSpec};

#[derive(Debug)]
pub enum CrosscheckError {
    Generate(GenerateError),
    Extract(ExtractError),
    DepthTooShallow { needed: u32 },
}

impl std::fmt::Display for CrosscheckError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CrosscheckError::Generate(e) => write!(f, "{e}"),
            CrosscheckError::Extract(e) => write!(f, "{e}"),
            CrosscheckError::DepthTooShallow { needed } => {
                write!(f, "depth must exceed the event chain depth (need > {needed})")
            }
        }
    }
}

pub struct CrosscheckOutcome {
    pub isomorphic: bool,
    pub generated: AtomGraph,
    pub extracted: AtomGraph,
    pub generated_valid: bool,
    pub extracted_valid: bool,
}

/// Generates the combinatorial model of `spec`, extracts the numerical one
/// from `map` at the same total depth, validates both and compares them as
/// labelled trees. `total_depth` is the most negative generation
/// materialized on both sides.
pub fn crosscheck(
    spec: &MapSpec,
    map: &HoloMap,
    total_depth: u32,
    grid: usize,
    threads: usize,
) -> Result<CrosscheckOutcome, CrosscheckError> {
    let chain_len = spec.events.first().map(|e| e.address.len() as u32).unwrap_or(0);
    if total_depth <= chain_len {
        return Err(CrosscheckError::DepthTooShallow { needed: chain_len });
    }
    let generated =
        generate(spec, total_depth - chain_len).map_err(CrosscheckError::Generate)?;

    // Base level: the deepest branch point sits `chain_len` bands below the
    // base annulus, mirroring the event address depth.
    let c = match map.kind {
        MapKind::Power(_) => -0.5,
        MapKind::QuadraticPlusC(_) => {
            let tau0 = map
                .tau(num_complex::Complex64::new(0.0, 0.0))
                .map_err(|e| CrosscheckError::Extract(ExtractError::Holo(e)))?;
            tau0 - (chain_len.max(1) as f64 - 0.5)
        }
    };
    let extracted = extract_atom_graph(map, c, total_depth, grid, threads)
        .map_err(CrosscheckError::Extract)?;

    let generated_valid = validate(&generated).passed();
    let extracted_valid = validate(&extracted).passed();
    let isomorphic = iso::isomorphic(&generated, &extracted);
    Ok(CrosscheckOutcome { isomorphic, generated, extracted, generated_valid, extracted_valid })
}

/// Writes closed polylines as a standalone SVG document.
pub fn polylines_to_svg(polylines: &[Vec<(f64, f64)>], stroke: &str) -> String {
    let mut min_x = f64::INFINITY;
    let mut max_x = f64::NEG_INFINITY;
    let mut min_y = f64::INFINITY;
    let mut max_y = f64::NEG_INFINITY;
    for line in polylines {
        for &(x, y) in line {
            min_x = min_x.min(x);
            max_x = max_x.max(x);
            min_y = min_y.min(y);
            max_y = max_y.max(y);
        }
    }
    if !min_x.is_finite() {
        min_x = -1.0;
        max_x = 1.0;
        min_y = -1.0;
        max_y = 1.0;
    }
    let pad = 0.05 * (max_x - min_x).max(max_y - min_y).max(1e-9);
    let (w, h) = (max_x - min_x + 2.0 * pad, max_y - min_y + 2.0 * pad);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\">\n",
        min_x - pad,
        min_y - pad,
        w,
        h
    );
    for line in polylines {
        if line.is_empty() {
            continue;
        }
        let mut d = format!("M {} {}", line[0].0, line[0].1);
        for &(x, y) in &line[1..] {
            d.push_str(&format!(" L {x} {y}"));
        }
        d.push_str(" Z");
        svg.push_str(&format!(
            "  <path d=\"{d}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"{}\"/>\n",
            w / 800.0
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Points as `x,y` CSV rows.
pub fn points_to_csv(points: &[num_complex::Complex64]) -> String {
    let mut out = String::from("re,im\n");
    for p in points {
        out.push_str(&format!("{},{}\n", p.re, p.im));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_crosscheck_small() {
        let spec = MapSpec::ladder(2);
        let map = HoloMap::power(2).unwrap();
        let out = crosscheck(&spec, &map, 3, 768, default_threads()).unwrap();
        assert!(out.generated_valid, "generated graph invalid");
        assert!(out.extracted_valid, "extracted graph invalid");
        assert!(out.isomorphic, "ladder extraction should match the spec");
        // a degree-3 spec against the same extraction is not isomorphic
        let other = crosscheck(&MapSpec::ladder(3), &map, 3, 768, default_threads()).unwrap();
        assert!(!other.isomorphic);
    }
}
