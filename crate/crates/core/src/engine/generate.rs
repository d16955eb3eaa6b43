//! Deterministic materialization of an atom graph from a map presentation.
//!
//! The window spans generations `0` (base annulus) down to `depth`
//! generations beyond the deepest singular event, so the stabilized regime is
//! always visible. Singular events sit on the main preimage chain; an event
//! atom's extra internal circles and any leftover degree spawn auxiliary
//! ladders that descend to generation 0. Beyond the events every band atom is
//! a homeomorphic copy of its image, and the induced action on the preimage
//! tree is the one-sided shift on gluing addresses.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::model::{
    Atom, AtomGraph, AtomId, Circle, CircleId, EventSide, MapSpec, SingularPoint,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GenerateError {
    /// `depth` must be at least 1 so the stabilized regime materializes.
    InvalidDepth,
    /// The presentation cannot be realized; `rule` names the violated
    /// constraint.
    Infeasible { rule: &'static str, message: String },
    /// A singular event addresses a nonexistent preimage atom.
    Address { address: Vec<u32>, message: String },
}

/// Rule names quoted by diagnostics and matched by callers.
pub mod rules {
    pub const HOMEOMORPHISM: &str = "homeomorphism-has-no-singular-points";
    pub const SINGLE_SINGULAR_DEGREE: &str = "single-singular-order-equals-degree";
    pub const INFINITE_SINGULAR: &str = "infinitely-many-singular-points";
    pub const EVENT_COMBINATION: &str = "event-combination-unrealizable";
    pub const EVENT_PLACEMENT: &str = "event-placement-off-main-chain";
    pub const DEGREE: &str = "degree-conservation";
}

impl core::fmt::Display for GenerateError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            GenerateError::InvalidDepth => write!(f, "depth must be at least 1"),
            GenerateError::Infeasible { rule, message } => {
                write!(f, "infeasible presentation ({rule}): {message}")
            }
            GenerateError::Address { address, message } => {
                write!(f, "bad event address {address:?}: {message}")
            }
        }
    }
}

impl GenerateError {
    fn infeasible(rule: &'static str, message: String) -> Self {
        GenerateError::Infeasible { rule, message }
    }
}

#[derive(Debug, Clone, Copy)]
enum StumpKind {
    /// One order-`b` split point: a `(1, b)` atom of covering degree `b`.
    Split { b: u32 },
    /// An order-`b` merge/split pair: a `(b, b)` atom of covering degree `b`.
    Pair { b: u32 },
}

impl StumpKind {
    fn cover(&self) -> u32 {
        match self {
            StumpKind::Split { b } | StumpKind::Pair { b } => *b,
        }
    }

    fn internal_count(&self) -> u32 {
        match self {
            StumpKind::Split { .. } => 1,
            StumpKind::Pair { b } => *b,
        }
    }

    fn external_count(&self) -> u32 {
        self.cover()
    }

    /// Winding of the circle gluing the stump to the trunk; the whole trunk
    /// carries this winding.
    fn trunk_winding(&self) -> u32 {
        match self {
            StumpKind::Split { b } => *b,
            StumpKind::Pair { .. } => 1,
        }
    }

    fn singular(&self) -> Vec<SingularPoint> {
        match self {
            StumpKind::Split { b } => vec![SingularPoint { mult: *b }],
            StumpKind::Pair { b } => {
                vec![SingularPoint { mult: *b }, SingularPoint { mult: *b }]
            }
        }
    }
}

struct Plan {
    degree: u32,
    /// Chain depth of the event atom (0 = no events).
    chain_len: u32,
    stump: Option<StumpKind>,
}

fn plan(spec: &MapSpec) -> Result<Plan, GenerateError> {
    let d = spec.degree;
    if d < 1 {
        return Err(GenerateError::infeasible(rules::DEGREE, String::from("degree must be >= 1")));
    }
    if spec.events.is_empty() {
        return Ok(Plan { degree: d, chain_len: 0, stump: None });
    }
    if d == 1 {
        return Err(GenerateError::infeasible(
            rules::HOMEOMORPHISM,
            String::from("a degree-1 map is a homeomorphism and has no singular points"),
        ));
    }
    for ev in &spec.events {
        if ev.mult < 2 {
            return Err(GenerateError::infeasible(
                rules::EVENT_COMBINATION,
                format!("local branching order {} is below 2", ev.mult),
            ));
        }
        if ev.mult > d {
            return Err(GenerateError::infeasible(
                rules::DEGREE,
                format!("branching order {} exceeds the covering degree {d}", ev.mult),
            ));
        }
        if ev.address.is_empty() {
            return Err(GenerateError::Address {
                address: ev.address.clone(),
                message: String::from(
                    "the empty address names the base annulus, which carries no singular points",
                ),
            });
        }
        if let Some(&j) = ev.address.iter().find(|&&j| j >= d) {
            return Err(GenerateError::Address {
                address: ev.address.clone(),
                message: format!("child index {j} exceeds the preimage count of a degree-{d} map"),
            });
        }
        if ev.address.iter().any(|&j| j != 0) {
            return Err(GenerateError::infeasible(
                rules::EVENT_PLACEMENT,
                format!(
                    "event at {:?} sits off the main preimage chain; the canonical finite \
                     presentation places all events on the chain of zero indices",
                    ev.address
                ),
            ));
        }
    }
    let len0 = spec.events[0].address.len();
    if spec.events.iter().any(|e| e.address.len() != len0) {
        return Err(GenerateError::infeasible(
            rules::EVENT_PLACEMENT,
            String::from(
                "events at several depths nest below a singular atom; only one event atom is \
                 expressible in the canonical finite presentation",
            ),
        ));
    }
    let chain_len = len0 as u32;
    let stump = match spec.events.len() {
        1 => {
            let ev = &spec.events[0];
            match ev.side {
                EventSide::Merge => {
                    return Err(GenerateError::infeasible(
                        rules::INFINITE_SINGULAR,
                        format!(
                            "a single order-{} merge point makes a ({}, 1) stump whose stabilized \
                             preimages repeat type (a, 1) forever, forcing infinitely many \
                             singular points",
                            ev.mult, ev.mult
                        ),
                    ));
                }
                EventSide::Split => {
                    if ev.mult != d {
                        return Err(GenerateError::infeasible(
                            rules::SINGLE_SINGULAR_DEGREE,
                            format!(
                                "a component with exactly one singular point requires its \
                                 branching order {} to equal the covering degree {d}",
                                ev.mult
                            ),
                        ));
                    }
                    StumpKind::Split { b: d }
                }
            }
        }
        2 => {
            let (a, b) = (&spec.events[0], &spec.events[1]);
            if a.mult != b.mult {
                return Err(GenerateError::infeasible(
                    rules::EVENT_COMBINATION,
                    String::from(
                        "two singular points in one atom are realizable only as an equal-order \
                         merge/split pair",
                    ),
                ));
            }
            match (a.side, b.side) {
                (EventSide::Merge, EventSide::Split) | (EventSide::Split, EventSide::Merge) => {
                    StumpKind::Pair { b: a.mult }
                }
                _ => {
                    return Err(GenerateError::infeasible(
                        rules::EVENT_COMBINATION,
                        String::from(
                            "two same-side singular points in one atom do not bound a planar \
                             band; use a merge/split pair",
                        ),
                    ));
                }
            }
        }
        n => {
            return Err(GenerateError::infeasible(
                rules::EVENT_COMBINATION,
                format!("{n} singular points in one atom are not realizable as a planar band"),
            ));
        }
    };
    Ok(Plan { degree: d, chain_len, stump: Some(stump) })
}

/// Build-order store; ids are provisional until the canonical renumbering.
#[derive(Default)]
struct Builder {
    atoms: Vec<Atom>,
    circles: Vec<Circle>,
}

impl Builder {
    fn circle(
        &mut self,
        level: i32,
        inner: Option<AtomId>,
        outer: Option<AtomId>,
        image: Option<CircleId>,
        winding: u32,
    ) -> CircleId {
        let id = self.circles.len() as CircleId;
        self.circles.push(Circle { id, level, inner_atom: inner, outer_atom: outer, image_circle: image, winding });
        id
    }

    fn atom(&mut self, generation: i32, image: Option<AtomId>, cover_degree: u32) -> AtomId {
        let id = self.atoms.len() as AtomId;
        self.atoms.push(Atom {
            id,
            generation,
            internal: Vec::new(),
            external: Vec::new(),
            singular: Vec::new(),
            image,
            cover_degree,
        });
        id
    }

    /// Reassigns ids so atoms are ordered by generation from the base annulus
    /// downward (build order breaking ties) and circles by level from the
    /// attractor frontier downward. Identical inputs yield identical graphs.
    fn finish(mut self, base_chain: Vec<AtomId>, degree: u32, depth: u32) -> AtomGraph {
        let mut atom_order: Vec<usize> = (0..self.atoms.len()).collect();
        atom_order.sort_by_key(|&i| (-(self.atoms[i].generation as i64), i));
        let mut atom_map = vec![0 as AtomId; self.atoms.len()];
        for (new, &old) in atom_order.iter().enumerate() {
            atom_map[old] = new as AtomId;
        }
        let mut circle_order: Vec<usize> = (0..self.circles.len()).collect();
        circle_order.sort_by_key(|&i| (-(self.circles[i].level as i64), i));
        let mut circle_map = vec![0 as CircleId; self.circles.len()];
        for (new, &old) in circle_order.iter().enumerate() {
            circle_map[old] = new as CircleId;
        }

        let mut atoms: Vec<Atom> = atom_order.into_iter().map(|i| self.atoms[i].clone()).collect();
        for a in &mut atoms {
            a.id = atom_map[a.id as usize];
            a.image = a.image.map(|x| atom_map[x as usize]);
            for c in a.internal.iter_mut().chain(a.external.iter_mut()) {
                *c = circle_map[*c as usize];
            }
        }
        let mut circles: Vec<Circle> =
            circle_order.into_iter().map(|i| self.circles[i].clone()).collect();
        for c in &mut circles {
            c.id = circle_map[c.id as usize];
            c.inner_atom = c.inner_atom.map(|x| atom_map[x as usize]);
            c.outer_atom = c.outer_atom.map(|x| atom_map[x as usize]);
            c.image_circle = c.image_circle.map(|x| circle_map[x as usize]);
        }
        let base_chain = base_chain.into_iter().map(|x| atom_map[x as usize]).collect();
        self.atoms.clear();
        self.circles.clear();
        AtomGraph::from_parts(degree, atoms, circles, base_chain, depth)
            .expect("generated graph is well formed")
    }
}

/// Materializes the atom graph of `spec` down to `depth` generations beyond
/// the deepest singular event (or of the base annulus when there are none).
pub fn generate(spec: &MapSpec, depth: u32) -> Result<AtomGraph, GenerateError> {
    if depth < 1 {
        return Err(GenerateError::InvalidDepth);
    }
    let plan = plan(spec)?;
    match plan.stump {
        None => Ok(ladder(plan.degree, depth)),
        Some(kind) => Ok(stump_graph(plan.degree, plan.chain_len, kind, depth)),
    }
}

/// No singular events: one annular ladder, every atom covering the next with
/// the full degree.
fn ladder(d: u32, depth: u32) -> AtomGraph {
    let mut b = Builder::default();
    let lo = -(depth as i32);
    // Circles at levels 1 down to lo; image is one level up.
    let mut prev_circle: Option<CircleId> = None;
    let mut circle_at = alloc::collections::BTreeMap::new();
    for level in (lo..=1).rev() {
        let id = b.circle(level, None, None, prev_circle, d);
        circle_at.insert(level, id);
        prev_circle = Some(id);
    }
    let mut prev_atom: Option<AtomId> = None;
    let mut chain = Vec::new();
    for gen in (lo..=0).rev() {
        let a = b.atom(gen, prev_atom, d);
        let top = circle_at[&(gen + 1)];
        let bottom = circle_at[&gen];
        b.atoms[a as usize].internal.push(top);
        b.atoms[a as usize].external.push(bottom);
        b.circles[top as usize].inner_atom = Some(a);
        b.circles[bottom as usize].outer_atom = Some(a);
        chain.push(a);
        prev_atom = Some(a);
    }
    b.finish(chain, d, depth)
}

fn stump_graph(d: u32, n: u32, kind: StumpKind, depth: u32) -> AtomGraph {
    let mut b = Builder::default();
    let n = n as i32;
    let stump_gen = -n;
    let trunk_w = kind.trunk_winding();

    // Trunk circles at levels 1 down to -(n-1); trunk atoms at generations
    // 0 down to -(n-1). The level -(n-1) circle glues the trunk to the stump.
    let mut trunk_circle = alloc::collections::BTreeMap::new();
    let mut prev: Option<CircleId> = None;
    for level in ((-(n - 1))..=1).rev() {
        let id = b.circle(level, None, None, prev, trunk_w);
        trunk_circle.insert(level, id);
        prev = Some(id);
    }
    let mut trunk_atom = alloc::collections::BTreeMap::new();
    let mut prev_atom: Option<AtomId> = None;
    let mut base_chain = Vec::new();
    for gen in ((-(n - 1))..=0).rev() {
        let a = b.atom(gen, prev_atom, trunk_w);
        let top = trunk_circle[&(gen + 1)];
        let bottom = trunk_circle[&gen];
        b.atoms[a as usize].internal.push(top);
        b.atoms[a as usize].external.push(bottom);
        b.circles[top as usize].inner_atom = Some(a);
        b.circles[bottom as usize].outer_atom = Some(a);
        trunk_atom.insert(gen, a);
        base_chain.push(a);
        prev_atom = Some(a);
    }
    let trunk_bottom = trunk_atom[&(-(n - 1))];
    let chain_circle = trunk_circle[&(-(n - 1))];

    // Stump at generation -n.
    let stump = b.atom(stump_gen, Some(trunk_bottom), kind.cover());
    b.atoms[stump as usize].singular = kind.singular();
    b.atoms[stump as usize].internal.push(chain_circle);
    b.circles[chain_circle as usize].inner_atom = Some(stump);
    // Extra internal circles of the stump; their attractor-side partners are
    // auxiliary ladders created below.
    let extra_image = trunk_circle.get(&(-(n - 2))).copied();
    let mut ladder_origins: Vec<CircleId> = Vec::new();
    for _ in 1..kind.internal_count() {
        let c = b.circle(-(n - 1), Some(stump), None, extra_image, 1);
        b.atoms[stump as usize].internal.push(c);
        ladder_origins.push(c);
    }
    // External circles of the stump; row atoms claim their inner side.
    for _ in 0..kind.external_count() {
        let c = b.circle(stump_gen, None, Some(stump), Some(chain_circle), 1);
        b.atoms[stump as usize].external.push(c);
    }

    // Degree fillers: the leftover preimages of the trunk bottom, each a
    // plain annulus hanging on its own auxiliary ladder.
    let mut row: Vec<AtomId> = vec![stump];
    for _ in 0..(d - kind.cover()) {
        let y = b.atom(stump_gen, Some(trunk_bottom), 1);
        let i = b.circle(-(n - 1), Some(y), None, extra_image, 1);
        let e = b.circle(stump_gen, None, Some(y), Some(chain_circle), 1);
        b.atoms[y as usize].internal.push(i);
        b.atoms[y as usize].external.push(e);
        ladder_origins.push(i);
        row.push(y);
    }

    // Auxiliary ladders: plain annuli descending from each origin circle to
    // generation 0, mapping onto the trunk one level down.
    for origin in ladder_origins {
        let mut below: CircleId = origin;
        for gen in (-(n - 1))..=0 {
            let image_atom = if gen < 0 { Some(trunk_atom[&(gen + 1)]) } else { None };
            let u = b.atom(gen, image_atom, 1);
            b.atoms[u as usize].external.push(below);
            b.circles[below as usize].outer_atom = Some(u);
            let image_circle = trunk_circle.get(&(gen + 2)).copied();
            let i = b.circle(gen + 1, Some(u), None, image_circle, 1);
            b.atoms[u as usize].internal.push(i);
            below = i;
        }
    }

    // Band rows beyond the stump. Every external circle of the previous row
    // sprouts the homeomorphic copy of the atom glued above the circle's
    // image; the induced map on gluing addresses is the one-sided shift.
    let bottom_gen = stump_gen - depth as i32;
    for gen in (bottom_gen..=(stump_gen - 1)).rev() {
        let mut next_row = Vec::new();
        for &p in &row {
            let externals = b.atoms[p as usize].external.clone();
            for ext in externals {
                let img_circle = b.circles[ext as usize].image_circle.expect("row externals map");
                let fa = b.circles[img_circle as usize].inner_atom.expect("image circle claimed");
                let fa_internal = b.atoms[fa as usize].internal.clone();
                let fa_external = b.atoms[fa as usize].external.clone();
                let a = b.atom(gen, Some(fa), b.circles[ext as usize].winding);
                b.atoms[a as usize].internal.push(ext);
                b.circles[ext as usize].inner_atom = Some(a);
                for &extra in fa_internal.iter().skip(1) {
                    let w = b.circles[extra as usize].winding;
                    let c = b.circle(gen + 1, Some(a), None, Some(extra), w);
                    b.atoms[a as usize].internal.push(c);
                }
                for &fe in &fa_external {
                    let w = b.circles[fe as usize].winding;
                    let c = b.circle(gen, None, Some(a), Some(fe), w);
                    b.atoms[a as usize].external.push(c);
                }
                next_row.push(a);
            }
        }
        row = next_row;
    }

    b.finish(base_chain, d, (n as u32) + depth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MapSpec;

    // Independent count oracle: sizes of the preimage tree rows under the
    // stabilization rule, written without reference to the builder.
    fn expected_ladder_atoms(depth: u32) -> usize {
        depth as usize + 1
    }
    fn expected_split_atoms(d: u32, n: u32, depth: u32) -> usize {
        // trunk + ladders (none) + stump row (1) + d^k rows
        let mut total = n as usize; // trunk atoms
        let mut row = 1usize;
        total += row;
        for _ in 0..depth {
            row *= d as usize;
            total += row;
        }
        total
    }

    #[test]
    fn ladder_shape() {
        let g = generate(&MapSpec::ladder(2), 5).unwrap();
        assert_eq!(g.atoms.len(), expected_ladder_atoms(5));
        assert!(g.atoms.iter().all(|a| a.boundary_type() == (1, 1)));
        assert!(g.atoms.iter().all(|a| a.cover_degree == 2));
        assert!(g.circles.iter().all(|c| c.winding == 2));
        assert_eq!(g.base_chain.len(), 6);
        assert_eq!(g.depth, 5);
        assert_eq!(g.min_generation(), -5);
    }

    #[test]
    fn degree_one_ladder() {
        let g = generate(&MapSpec::ladder(1), 3).unwrap();
        assert_eq!(g.atoms.len(), 4);
        assert!(g.circles.iter().all(|c| c.winding == 1));
    }

    #[test]
    fn split_stump_shape() {
        let g = generate(&MapSpec::single_event(2, 2, 1), 4).unwrap();
        assert_eq!(g.atoms.len(), expected_split_atoms(2, 1, 4));
        let stump = g.atoms.iter().find(|a| !a.singular.is_empty()).unwrap();
        assert_eq!(stump.boundary_type(), (1, 2));
        assert_eq!(stump.generation, -1);
        assert_eq!(stump.cover_degree, 2);
        // all row atoms are degree-1 copies
        assert!(g
            .atoms
            .iter()
            .filter(|a| a.generation < -1)
            .all(|a| a.cover_degree == 1 && a.boundary_type() == (1, 2)));
        assert_eq!(g.atoms_at_generation(-5).len(), 16);
        assert_eq!(g.depth, 5);
    }

    #[test]
    fn generate_is_deterministic() {
        let spec = MapSpec::single_event(3, 3, 2);
        let a = generate(&spec, 3).unwrap().to_json();
        let b = generate(&spec, 3).unwrap().to_json();
        assert_eq!(a, b);
    }

    #[test]
    fn pair_stump_shape() {
        let g = generate(&MapSpec::event_pair(2, 2, 1), 1).unwrap();
        // base annulus, one aux ladder atom, stump, two copies
        assert_eq!(g.atoms.len(), 5);
        let stump = g.atoms.iter().find(|a| !a.singular.is_empty()).unwrap();
        assert_eq!(stump.boundary_type(), (2, 2));
        assert_eq!(stump.cover_degree, 2);
        assert_eq!(g.atoms_at_generation(0).len(), 2);
        let pair_d3 = generate(&MapSpec::event_pair(3, 2, 1), 1).unwrap();
        // base annulus + 2 aux tops, stump + filler, 3 row atoms
        assert_eq!(pair_d3.atoms_at_generation(0).len(), 3);
        assert_eq!(pair_d3.atoms_at_generation(-2).len(), 3);
    }

    #[test]
    fn rejections() {
        // merge-only event: the forbidden (a,1) pattern
        let mut merge = MapSpec::single_event(2, 2, 1);
        merge.events[0].side = EventSide::Merge;
        match generate(&merge, 2) {
            Err(GenerateError::Infeasible { rule, .. }) => {
                assert_eq!(rule, rules::INFINITE_SINGULAR)
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
        // single event whose order differs from the degree
        assert!(matches!(
            generate(&MapSpec::single_event(3, 2, 1), 2),
            Err(GenerateError::Infeasible { rule: rules::SINGLE_SINGULAR_DEGREE, .. })
        ));
        // degree-1 map with an event
        assert!(matches!(
            generate(&MapSpec::single_event(1, 2, 1), 2),
            Err(GenerateError::Infeasible { rule: rules::HOMEOMORPHISM, .. })
        ));
        // child index beyond the preimage count
        let mut bad = MapSpec::single_event(2, 2, 1);
        bad.events[0].address = vec![3];
        assert!(matches!(generate(&bad, 2), Err(GenerateError::Address { .. })));
        // empty address
        bad.events[0].address = vec![];
        assert!(matches!(generate(&bad, 2), Err(GenerateError::Address { .. })));
        // off-chain placement
        let mut off = MapSpec::event_pair(4, 2, 1);
        off.events[0].address = vec![1];
        off.events[1].address = vec![1];
        assert!(matches!(
            generate(&off, 2),
            Err(GenerateError::Infeasible { rule: rules::EVENT_PLACEMENT, .. })
        ));
        assert!(matches!(generate(&MapSpec::ladder(2), 0), Err(GenerateError::InvalidDepth)));
    }
}
