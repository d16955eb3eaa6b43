//! The oriented Reeb tree of the level decomposition and the census and
//! classification of the ideal boundary.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use serde::Serialize;

use crate::model::{AtomGraph, AtomId, CircleId};

#[derive(Debug, Clone, Serialize)]
pub struct ReebVertex {
    pub atom: AtomId,
    pub generation: i32,
    pub btype: (u32, u32),
}

#[derive(Debug, Clone, Serialize)]
pub struct ReebEdge {
    pub circle: CircleId,
    /// Repeller-side endpoint.
    pub from: AtomId,
    /// Attractor-side endpoint; the edge is oriented toward the attractor.
    pub to: AtomId,
    pub winding: u32,
}

/// Quotient tree of the band decomposition: one vertex per atom, one edge per
/// non-frontier gluing circle, oriented toward the attractor.
#[derive(Debug, Clone, Serialize)]
pub struct ReebTree {
    pub vertices: Vec<ReebVertex>,
    pub edges: Vec<ReebEdge>,
    /// Attractor-side frontier circles at the top of the window.
    pub attractor_stubs: Vec<(AtomId, CircleId)>,
    /// Repeller-side frontier circles at the bottom of the window.
    pub repeller_stubs: Vec<(AtomId, CircleId)>,
    /// Attractor-side circles truncated at interior levels (higher-order
    /// auxiliary saturation).
    pub dangling: Vec<(AtomId, CircleId)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReebError {
    CycleDetected { circle: CircleId },
}

impl core::fmt::Display for ReebError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let ReebError::CycleDetected { circle } = self;
        write!(f, "gluing circle {circle} closes a cycle")
    }
}

pub fn build_reeb(g: &AtomGraph) -> Result<ReebTree, ReebError> {
    let vertices: Vec<ReebVertex> = g
        .atoms
        .iter()
        .map(|a| {
            let (x, y) = a.boundary_type();
            ReebVertex { atom: a.id, generation: a.generation, btype: (x as u32, y as u32) }
        })
        .collect();
    let index: BTreeMap<AtomId, usize> =
        g.atoms.iter().enumerate().map(|(i, a)| (a.id, i)).collect();
    let mut parent: Vec<usize> = (0..g.atoms.len()).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let r = find(parent, parent[x]);
            parent[x] = r;
        }
        parent[x]
    }
    let mut edges = Vec::new();
    let mut attractor_stubs = Vec::new();
    let mut repeller_stubs = Vec::new();
    let mut dangling = Vec::new();
    let top_level = g.max_generation() + 1;
    for c in &g.circles {
        match (c.inner_atom, c.outer_atom) {
            (Some(inner), Some(outer)) => {
                let (ri, ro) = (find(&mut parent, index[&inner]), find(&mut parent, index[&outer]));
                if ri == ro {
                    return Err(ReebError::CycleDetected { circle: c.id });
                }
                parent[ri] = ro;
                edges.push(ReebEdge { circle: c.id, from: inner, to: outer, winding: c.winding });
            }
            (Some(inner), None) => {
                if c.level == top_level {
                    attractor_stubs.push((inner, c.id));
                } else {
                    dangling.push((inner, c.id));
                }
            }
            (None, Some(outer)) => repeller_stubs.push((outer, c.id)),
            (None, None) => {}
        }
    }
    Ok(ReebTree { vertices, edges, attractor_stubs, repeller_stubs, dangling })
}

#[derive(Debug, Clone, Serialize)]
pub struct AibEnd {
    pub atom: AtomId,
    /// Materialized annular ladder certifying isolation, from the window top
    /// toward the repeller.
    pub annulus_chain: Vec<AtomId>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RibBranch {
    pub atom: AtomId,
    /// Child-index address along the gluing tree from the base annulus.
    pub address: Vec<u32>,
    pub btype: (u32, u32),
    /// The branch keeps branching beyond the window: its type has more than
    /// one external circle and stabilized preimages are homeomorphic copies.
    pub branches_forever: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EndCensus {
    pub effective_depth: u32,
    pub aib: Vec<AibEnd>,
    pub rib: Vec<RibBranch>,
    /// Atom counts per generation, from the base downward.
    pub atoms_per_generation: Vec<(i32, u64)>,
}

impl EndCensus {
    pub fn aib_count(&self) -> usize {
        self.aib.len()
    }
    pub fn rib_count(&self) -> usize {
        self.rib.len()
    }
    /// Number of repeller-side branches `k` generations beyond `origin`.
    pub fn branches_beyond(&self, origin: i32, k: u32) -> u64 {
        let gen = origin - k as i32;
        self.atoms_per_generation
            .iter()
            .find(|(g, _)| *g == gen)
            .map(|(_, n)| *n)
            .unwrap_or(0)
    }
}

/// Gluing-tree addresses: child indices along external circles, rooted at the
/// top of the base chain; atoms first reached against the orientation (the
/// auxiliary side) are addressed from their discovery atom.
fn addresses(g: &AtomGraph) -> BTreeMap<AtomId, Vec<u32>> {
    let mut out: BTreeMap<AtomId, Vec<u32>> = BTreeMap::new();
    let Some(&root) = g.base_chain.first() else { return out };
    let mut queue = VecDeque::new();
    out.insert(root, Vec::new());
    queue.push_back(root);
    let mut visited: BTreeSet<AtomId> = BTreeSet::new();
    visited.insert(root);
    while let Some(id) = queue.pop_front() {
        let a = g.atom(id).expect("addressed atom");
        let base = out[&id].clone();
        for (child, &cid) in a.external.iter().enumerate() {
            if let Some(up) = g.circle(cid).and_then(|c| c.inner_atom) {
                if visited.insert(up) {
                    let mut addr = base.clone();
                    addr.push(child as u32);
                    out.insert(up, addr);
                    queue.push_back(up);
                }
            }
        }
        // Auxiliary partners discovered across internal circles.
        for &cid in &a.internal {
            if let Some(down) = g.circle(cid).and_then(|c| c.outer_atom) {
                if visited.insert(down) {
                    let mut addr = base.clone();
                    addr.push(u32::MAX); // marks a step against the orientation
                    out.insert(down, addr);
                    queue.push_back(down);
                }
            }
        }
    }
    out
}

/// Counts ends on both sides of the window truncated at `depth` generations
/// below the base annulus (clamped to the materialized depth).
pub fn enumerate_ends(g: &AtomGraph, tree: &ReebTree, depth: u32) -> EndCensus {
    let effective_depth = depth.min(g.depth);
    let addr = addresses(g);
    let mut aib = Vec::new();
    for &(atom, _) in &tree.attractor_stubs {
        let mut chain = Vec::new();
        let mut cur = Some(atom);
        while let Some(id) = cur {
            let a = match g.atom(id) {
                Some(a) if a.is_plain_annulus() => a,
                _ => break,
            };
            chain.push(id);
            cur = if a.external.len() == 1 {
                g.circle(a.external[0]).and_then(|c| c.inner_atom)
            } else {
                None
            };
        }
        if chain.is_empty() {
            chain.push(atom);
        }
        aib.push(AibEnd { atom, annulus_chain: chain });
    }
    aib.sort_by_key(|e| e.atom);

    let frontier_gen = -(effective_depth as i32);
    let mut rib = Vec::new();
    for a in g.atoms_at_generation(frontier_gen) {
        let (x, y) = a.boundary_type();
        rib.push(RibBranch {
            atom: a.id,
            address: addr.get(&a.id).cloned().unwrap_or_default(),
            btype: (x as u32, y as u32),
            branches_forever: y > 1,
        });
    }
    rib.sort_by_key(|b| b.atom);

    let mut per_gen: BTreeMap<i32, u64> = BTreeMap::new();
    for a in &g.atoms {
        if a.generation >= frontier_gen {
            *per_gen.entry(a.generation).or_default() += 1;
        }
    }
    let mut atoms_per_generation: Vec<(i32, u64)> = per_gen.into_iter().collect();
    atoms_per_generation.sort_by_key(|(g, _)| -(*g as i64));

    EndCensus { effective_depth, aib, rib, atoms_per_generation }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AibClass {
    One,
    CountableIsolated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RibClass {
    One,
    Cantor,
}

#[derive(Debug, Clone, Serialize)]
pub struct EndSpace {
    pub aib_class: AibClass,
    pub rib_class: RibClass,
    pub aib: Vec<AibEnd>,
    pub rib: Vec<RibBranch>,
    pub atoms_per_generation: Vec<(i32, u64)>,
    pub certified_depth: u32,
    /// What backs each classification: the structural predicate over the
    /// singular census, and the branching recurrence observed in the window.
    pub certificate: ClassifyCertificate,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifyCertificate {
    pub singular_count: usize,
    pub has_multi_internal_atom: bool,
    /// Every frontier branch exhibits a future branching witness.
    pub frontier_branches_recur: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClassifyError {
    Unclassifiable(String),
}

impl core::fmt::Display for ClassifyError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let ClassifyError::Unclassifiable(m) = self;
        write!(f, "unclassifiable: {m}")
    }
}

/// Classifies the ideal boundary: no singular points gives a single end on
/// each side; singular points make the repeller side a Cantor set, and the
/// attractor side stays a single end exactly when no atom has more than one
/// internal circle.
pub fn classify(g: &AtomGraph) -> Result<EndSpace, ClassifyError> {
    let tree = build_reeb(g)
        .map_err(|e| ClassifyError::Unclassifiable(format!("not a tree: {e}")))?;
    let singular_count = g.singular_census().len();
    if singular_count > 0 {
        let deepest = g
            .atoms
            .iter()
            .filter(|a| !a.singular.is_empty())
            .map(|a| a.generation)
            .min()
            .expect("singular");
        if g.min_generation() >= deepest {
            return Err(ClassifyError::Unclassifiable(String::from(
                "window is truncated at the deepest singular atom; the stabilized regime is not \
                 visible",
            )));
        }
    }
    let census = enumerate_ends(g, &tree, g.depth);
    let has_multi_internal_atom = g.atoms.iter().any(|a| a.internal.len() > 1);
    let aib_class =
        if singular_count > 0 && has_multi_internal_atom { AibClass::CountableIsolated } else { AibClass::One };
    let rib_class = if singular_count > 0 { RibClass::Cantor } else { RibClass::One };
    let frontier_branches_recur = match rib_class {
        RibClass::Cantor => !census.rib.is_empty() && census.rib.iter().all(|b| b.branches_forever),
        RibClass::One => true,
    };
    Ok(EndSpace {
        aib_class,
        rib_class,
        aib: census.aib,
        rib: census.rib,
        atoms_per_generation: census.atoms_per_generation,
        certified_depth: census.effective_depth,
        certificate: ClassifyCertificate {
            singular_count,
            has_multi_internal_atom,
            frontier_branches_recur,
        },
    })
}

impl EndSpace {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("end space serializes")
    }
}

/// DOT rendering of the Reeb tree; edges point toward the attractor and
/// vertices are labelled `(a,b)@generation`.
pub fn export_dot(tree: &ReebTree) -> String {
    let mut out = String::from("digraph reeb {\n");
    for v in &tree.vertices {
        out.push_str(&format!(
            "  a{} [label=\"({},{})@{}\"];\n",
            v.atom, v.btype.0, v.btype.1, v.generation
        ));
    }
    for e in &tree.edges {
        out.push_str(&format!("  a{} -> a{} [label=\"{}\"];\n", e.from, e.to, e.winding));
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::generate;
    use crate::model::MapSpec;

    #[test]
    fn ladder_path_tree() {
        let g = generate(&MapSpec::ladder(2), 5).unwrap();
        let t = build_reeb(&g).unwrap();
        assert_eq!(t.vertices.len(), 6);
        assert_eq!(t.edges.len(), 5);
        assert_eq!(t.attractor_stubs.len(), 1);
        assert_eq!(t.repeller_stubs.len(), 1);
        let census = enumerate_ends(&g, &t, 5);
        assert_eq!(census.aib_count(), 1);
        assert_eq!(census.rib_count(), 1);
        let ends = classify(&g).unwrap();
        assert_eq!(ends.aib_class, AibClass::One);
        assert_eq!(ends.rib_class, RibClass::One);
    }

    #[test]
    fn split_binary_tree() {
        let g = generate(&MapSpec::single_event(2, 2, 1), 4).unwrap();
        let t = build_reeb(&g).unwrap();
        assert_eq!(t.vertices.len(), 32);
        assert_eq!(t.edges.len(), 31);
        let census = enumerate_ends(&g, &t, g.depth);
        assert_eq!(census.aib_count(), 1);
        assert_eq!(census.rib_count(), 16);
        assert_eq!(census.branches_beyond(-1, 4), 16);
        let ends = classify(&g).unwrap();
        assert_eq!(ends.aib_class, AibClass::One);
        assert_eq!(ends.rib_class, RibClass::Cantor);
        assert!(ends.certificate.frontier_branches_recur);
    }

    #[test]
    fn pair_has_two_aib_branches() {
        let g = generate(&MapSpec::event_pair(2, 2, 1), 3).unwrap();
        let t = build_reeb(&g).unwrap();
        let census = enumerate_ends(&g, &t, g.depth);
        assert_eq!(census.aib_count(), 2);
        let ends = classify(&g).unwrap();
        assert_eq!(ends.aib_class, AibClass::CountableIsolated);
        assert_eq!(ends.rib_class, RibClass::Cantor);
    }

    #[test]
    fn dot_output_shape() {
        let g = generate(&MapSpec::single_event(2, 2, 1), 3).unwrap();
        let t = build_reeb(&g).unwrap();
        let dot = export_dot(&t);
        assert!(dot.starts_with("digraph reeb {"));
        assert_eq!(dot.matches(" -> ").count(), t.edges.len());
        // depth 3 beyond the stump: 8 leaves at the bottom row
        assert_eq!(g.atoms_at_generation(-4).len(), 8);
    }

    #[test]
    fn edgeless_tree_exports() {
        use crate::model::{Atom, Circle};
        // one atom whose boundary is all frontier
        let atoms = alloc::vec![Atom {
            id: 0,
            generation: 0,
            internal: alloc::vec![0],
            external: alloc::vec![1],
            singular: alloc::vec::Vec::new(),
            image: None,
            cover_degree: 1,
        }];
        let circles = alloc::vec![
            Circle { id: 0, level: 1, inner_atom: Some(0), outer_atom: None, image_circle: None, winding: 1 },
            Circle { id: 1, level: 0, inner_atom: None, outer_atom: Some(0), image_circle: Some(0), winding: 1 },
        ];
        let g = AtomGraph::from_parts(1, atoms, circles, alloc::vec![0], 0).unwrap();
        let t = build_reeb(&g).unwrap();
        assert!(t.edges.is_empty());
        let dot = export_dot(&t);
        assert!(!dot.contains(" -> "));
    }

    #[test]
    fn monotone_census() {
        let g = generate(&MapSpec::single_event(3, 3, 1), 3).unwrap();
        let t = build_reeb(&g).unwrap();
        let mut last = 0;
        for depth in 1..=g.depth {
            let c = enumerate_ends(&g, &t, depth);
            assert!(c.rib_count() >= last);
            last = c.rib_count();
        }
    }

    #[test]
    fn unclassifiable_when_truncated_at_stump() {
        let mut g = generate(&MapSpec::single_event(2, 2, 1), 1).unwrap();
        // chop the stabilized row
        let keep: alloc::vec::Vec<_> =
            g.atoms.iter().filter(|a| a.generation >= -1).cloned().collect();
        let keep_ids: BTreeSet<AtomId> = keep.iter().map(|a| a.id).collect();
        let circles = g
            .circles
            .iter()
            .cloned()
            .map(|mut c| {
                if let Some(i) = c.inner_atom {
                    if !keep_ids.contains(&i) {
                        c.inner_atom = None;
                    }
                }
                if let Some(o) = c.outer_atom {
                    if !keep_ids.contains(&o) {
                        c.outer_atom = None;
                    }
                }
                c
            })
            .filter(|c| {
                keep.iter().any(|a| a.internal.contains(&c.id) || a.external.contains(&c.id))
            })
            .collect::<Vec<_>>();
        let keep = keep
            .into_iter()
            .map(|mut a| {
                a.internal.retain(|cid| circles.iter().any(|c| c.id == *cid));
                a.external.retain(|cid| circles.iter().any(|c| c.id == *cid));
                a
            })
            .collect();
        g = AtomGraph::from_parts(2, keep, circles, g.base_chain.clone(), 1).unwrap();
        assert!(matches!(classify(&g), Err(ClassifyError::Unclassifiable(_))));
    }
}
