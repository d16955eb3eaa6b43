//! Canonical codes for labelled atom graphs and the isomorphism check used
//! for cross-validation. Two graphs are isomorphic when their gluing trees
//! match with all labels: generations, boundary types, covering degrees,
//! singular multiplicities and circle windings.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::model::{AtomGraph, AtomId};

/// Canonical code of the gluing tree rooted at the top of the base chain.
/// Children are sorted by code, so the result is independent of ids.
pub fn canonical_code(g: &AtomGraph) -> String {
    let Some(&root) = g.base_chain.first() else {
        return String::from("empty");
    };
    let mut visited = BTreeSet::new();
    visited.insert(root);
    code_of(g, root, None, &mut visited)
}

fn code_of(
    g: &AtomGraph,
    id: AtomId,
    via_winding: Option<(u32, i8)>,
    visited: &mut BTreeSet<AtomId>,
) -> String {
    let a = g.atom(id).expect("coded atom");
    let (x, y) = a.boundary_type();
    let mut mults: Vec<u32> = a.singular.iter().map(|s| s.mult).collect();
    mults.sort_unstable();
    let mut internal_w: Vec<u32> =
        a.internal.iter().filter_map(|&c| g.circle(c)).map(|c| c.winding).collect();
    internal_w.sort_unstable();
    let mut external_w: Vec<u32> =
        a.external.iter().filter_map(|&c| g.circle(c)).map(|c| c.winding).collect();
    external_w.sort_unstable();

    let mut children: Vec<String> = Vec::new();
    for &cid in &a.external {
        if let Some(c) = g.circle(cid) {
            if let Some(up) = c.inner_atom {
                if visited.insert(up) {
                    children.push(code_of(g, up, Some((c.winding, 1)), visited));
                }
            }
        }
    }
    for &cid in &a.internal {
        if let Some(c) = g.circle(cid) {
            if let Some(down) = c.outer_atom {
                if visited.insert(down) {
                    children.push(code_of(g, down, Some((c.winding, -1)), visited));
                }
            }
        }
    }
    children.sort();
    let via = match via_winding {
        Some((w, dir)) => format!("{w}{}", if dir > 0 { '^' } else { 'v' }),
        None => String::from("root"),
    };
    format!(
        "[{via}|g{};t{x},{y};k{};m{mults:?};iw{internal_w:?};ew{external_w:?};c{}]",
        a.generation,
        a.cover_degree,
        children.join("")
    )
}

/// Labelled-tree isomorphism via canonical codes. Both graphs must cover all
/// their atoms from the base chain (canonical graphs do).
pub fn isomorphic(a: &AtomGraph, b: &AtomGraph) -> bool {
    a.degree == b.degree
        && a.atoms.len() == b.atoms.len()
        && a.circles.len() == b.circles.len()
        && canonical_code(a) == canonical_code(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::generate;
    use crate::model::MapSpec;

    #[test]
    fn self_isomorphic_and_degree_sensitive() {
        let a = generate(&MapSpec::single_event(2, 2, 1), 4).unwrap();
        let b = generate(&MapSpec::single_event(2, 2, 1), 4).unwrap();
        assert!(isomorphic(&a, &b));
        let c = generate(&MapSpec::single_event(3, 3, 1), 4).unwrap();
        assert!(!isomorphic(&a, &c));
        let ladder2 = generate(&MapSpec::ladder(2), 4).unwrap();
        let ladder3 = generate(&MapSpec::ladder(3), 4).unwrap();
        assert!(!isomorphic(&ladder2, &ladder3));
        assert!(isomorphic(&ladder2, &generate(&MapSpec::ladder(2), 4).unwrap()));
    }

    #[test]
    fn code_ignores_id_permutations() {
        let a = generate(&MapSpec::event_pair(2, 2, 1), 2).unwrap();
        // rebuild with shuffled ids: reverse both id spaces
        let max_a = a.atoms.iter().map(|x| x.id).max().unwrap();
        let max_c = a.circles.iter().map(|x| x.id).max().unwrap();
        let ra = |id: u32| max_a - id;
        let rc = |id: u32| max_c - id;
        let atoms = a
            .atoms
            .iter()
            .map(|x| {
                let mut x = x.clone();
                x.id = ra(x.id);
                x.image = x.image.map(ra);
                for c in x.internal.iter_mut().chain(x.external.iter_mut()) {
                    *c = rc(*c);
                }
                x
            })
            .collect();
        let circles = a
            .circles
            .iter()
            .map(|x| {
                let mut x = x.clone();
                x.id = rc(x.id);
                x.inner_atom = x.inner_atom.map(ra);
                x.outer_atom = x.outer_atom.map(ra);
                x.image_circle = x.image_circle.map(rc);
                x
            })
            .collect();
        let chain = a.base_chain.iter().map(|&i| ra(i)).collect();
        let b = AtomGraph::from_parts(a.degree, atoms, circles, chain, a.depth).unwrap();
        assert!(isomorphic(&a, &b));
    }
}
