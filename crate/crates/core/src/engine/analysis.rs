//! Structural analyses over validated atom graphs: boundary-type transport,
//! main/auxiliary roles, chain checks, the trunk/stump/root decomposition and
//! the forbidden-pattern scan.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use serde::Serialize;

use crate::model::{AtomGraph, AtomId};

#[derive(Debug, Clone, Serialize)]
pub struct TransportViolation {
    pub atom: AtomId,
    pub image: AtomId,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct TypeReport {
    /// Boundary type `(a, b)` per atom.
    pub types: BTreeMap<AtomId, (u32, u32)>,
    pub violations: Vec<TransportViolation>,
}

/// Computes boundary types and checks how they transport along the map:
/// a singular-free atom over a `(1,1)` atom is `(1,1)` (any degree); over
/// anything else it is a homeomorphic copy; a singular atom strictly
/// increases a boundary count.
pub fn classify_types(g: &AtomGraph) -> TypeReport {
    let mut types = BTreeMap::new();
    for a in &g.atoms {
        let (x, y) = a.boundary_type();
        types.insert(a.id, (x as u32, y as u32));
    }
    let mut violations = Vec::new();
    for a in &g.atoms {
        let Some(img) = a.image.and_then(|i| g.atom(i)) else { continue };
        let t = types[&a.id];
        let ti = types[&img.id];
        if a.singular.is_empty() {
            if ti == (1, 1) {
                if t != (1, 1) {
                    violations.push(TransportViolation {
                        atom: a.id,
                        image: img.id,
                        message: format!(
                            "singular-free atom over a (1,1) atom must be (1,1), found {t:?}"
                        ),
                    });
                }
            } else if t != ti || a.cover_degree != 1 {
                violations.push(TransportViolation {
                    atom: a.id,
                    image: img.id,
                    message: format!(
                        "singular-free atom over {ti:?} must be a degree-1 copy, found {t:?} at \
                         degree {}",
                        a.cover_degree
                    ),
                });
            }
        } else if t.0 <= ti.0 && t.1 <= ti.1 {
            violations.push(TransportViolation {
                atom: a.id,
                image: img.id,
                message: format!(
                    "singular atom must increase a boundary count: {t:?} over {ti:?}"
                ),
            });
        }
    }
    TypeReport { types, violations }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Main,
    Auxiliary,
}

#[derive(Debug, Clone, Serialize)]
pub struct RoleError {
    pub atom: AtomId,
    pub message: String,
}

impl core::fmt::Display for RoleError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "role contradiction at atom {}: {}", self.atom, self.message)
    }
}

fn propagate_roles(g: &AtomGraph) -> BTreeMap<AtomId, Role> {
    let mut roles: BTreeMap<AtomId, Role> =
        g.atoms.iter().map(|a| (a.id, Role::Auxiliary)).collect();
    let mut queue: VecDeque<AtomId> = VecDeque::new();
    for &id in &g.base_chain {
        if g.atom(id).is_some() && roles.insert(id, Role::Main) == Some(Role::Auxiliary) {
            queue.push_back(id);
        }
    }
    // Everything glued above a main atom's external boundary is main.
    while let Some(id) = queue.pop_front() {
        let a = g.atom(id).expect("role atom");
        for &cid in &a.external {
            if let Some(inner) = g.circle(cid).and_then(|c| c.inner_atom) {
                if roles.insert(inner, Role::Main) == Some(Role::Auxiliary) {
                    queue.push_back(inner);
                }
            }
        }
    }
    roles
}

/// Assigns main/auxiliary roles by propagation from the base chain and checks
/// the role calculus: images of main atoms are main, and a main atom sees
/// exactly one main atom across its internal boundary.
pub fn mark_main_auxiliary(g: &AtomGraph) -> Result<BTreeMap<AtomId, Role>, RoleError> {
    let roles = propagate_roles(g);
    for a in &g.atoms {
        if roles[&a.id] != Role::Main {
            continue;
        }
        if let Some(img) = a.image {
            if roles[&img] != Role::Main {
                return Err(RoleError {
                    atom: a.id,
                    message: format!("main atom maps onto auxiliary atom {img}"),
                });
            }
        }
        let partners: Vec<AtomId> = a
            .internal
            .iter()
            .filter_map(|&cid| g.circle(cid).and_then(|c| c.outer_atom))
            .collect();
        if !partners.is_empty() {
            let mains = partners.iter().filter(|p| roles[p] == Role::Main).count();
            if mains != 1 {
                return Err(RoleError {
                    atom: a.id,
                    message: format!(
                        "main atom has {mains} main neighbors across its internal boundary"
                    ),
                });
            }
        }
    }
    Ok(roles)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChainError {
    NotAChain { position: usize, message: String },
}

impl core::fmt::Display for ChainError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let ChainError::NotAChain { position, message } = self;
        write!(f, "not a chain at position {position}: {message}")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainVerdict {
    pub length: usize,
    /// Per consecutive pair: does the map send the lower atom onto the upper?
    pub links_map: Vec<bool>,
    pub last_link_maps: bool,
    pub all_links_map: bool,
    /// The propagation property: once the last link maps, every link maps.
    pub propagation_holds: bool,
}

/// Verifies that `chain` (listed from the repeller side toward the attractor)
/// is a forward chain and reports how the map acts along it.
pub fn chain_check(g: &AtomGraph, chain: &[AtomId]) -> Result<ChainVerdict, ChainError> {
    if chain.is_empty() {
        return Err(ChainError::NotAChain {
            position: 0,
            message: String::from("empty sequence"),
        });
    }
    for (i, &id) in chain.iter().enumerate() {
        if g.atom(id).is_none() {
            return Err(ChainError::NotAChain {
                position: i,
                message: format!("atom {id} does not exist"),
            });
        }
    }
    for i in 0..chain.len().saturating_sub(1) {
        let lo = g.atom(chain[i]).expect("checked");
        let hi = g.atom(chain[i + 1]).expect("checked");
        if hi.generation != lo.generation + 1 {
            return Err(ChainError::NotAChain {
                position: i,
                message: format!(
                    "generations {} and {} do not step by one",
                    lo.generation, hi.generation
                ),
            });
        }
        let glued = lo.internal.iter().any(|c| hi.external.contains(c));
        if !glued {
            return Err(ChainError::NotAChain {
                position: i,
                message: format!("atoms {} and {} share no boundary circle", lo.id, hi.id),
            });
        }
    }
    let links_map: Vec<bool> = (0..chain.len().saturating_sub(1))
        .map(|i| g.atom(chain[i]).expect("checked").image == Some(chain[i + 1]))
        .collect();
    let last = links_map.last().copied().unwrap_or(true);
    let all = links_map.iter().all(|&b| b);
    Ok(ChainVerdict {
        length: chain.len(),
        last_link_maps: last,
        all_links_map: all,
        propagation_holds: !last || all,
        links_map,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Decomposition {
    /// Maximal annular ladder from the base annulus downward.
    pub main_trunk: Vec<AtomId>,
    /// First atom on the main chain carrying singular points, if any.
    pub main_stump: Option<AtomId>,
    /// The stump and everything chain-connected above it.
    pub main_root: Vec<AtomId>,
    /// Maximal auxiliary annular ladders, each listed from the attractor side.
    pub auxiliary_trunks: Vec<Vec<AtomId>>,
    /// Auxiliary atoms carrying singular points.
    pub auxiliary_stumps: Vec<AtomId>,
    /// Remaining auxiliary atoms (copies hanging on auxiliary structure).
    pub auxiliary_root: Vec<AtomId>,
}

/// Splits the graph into main trunk, stump and root plus the auxiliary
/// remainders. Requires a graph whose roles are consistent.
pub fn decompose(g: &AtomGraph) -> Result<Decomposition, RoleError> {
    let roles = mark_main_auxiliary(g)?;

    // Trunk: descend from the top of the base chain while atoms stay plain
    // annuli; the first singular atom below ends it.
    let mut main_trunk = Vec::new();
    let mut main_stump = None;
    let mut cursor = g.base_chain.first().copied();
    while let Some(id) = cursor {
        let a = match g.atom(id) {
            Some(a) => a,
            None => break,
        };
        if !a.singular.is_empty() {
            main_stump = Some(id);
            break;
        }
        main_trunk.push(id);
        cursor = if a.external.len() == 1 {
            g.circle(a.external[0]).and_then(|c| c.inner_atom)
        } else {
            None
        };
    }

    let mut main_root = Vec::new();
    if let Some(stump) = main_stump {
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::new();
        seen.insert(stump);
        queue.push_back(stump);
        while let Some(id) = queue.pop_front() {
            main_root.push(id);
            let a = g.atom(id).expect("root atom");
            for &cid in &a.external {
                if let Some(up) = g.circle(cid).and_then(|c| c.inner_atom) {
                    if seen.insert(up) {
                        queue.push_back(up);
                    }
                }
            }
        }
    }

    // Auxiliary side: plain annuli form trunks, singular atoms are stumps,
    // the rest (homeomorphic copies over auxiliary structure) is the root.
    let mut aux_atoms: Vec<&crate::model::Atom> =
        g.atoms.iter().filter(|a| roles[&a.id] == Role::Auxiliary).collect();
    aux_atoms.sort_by_key(|a| (-(a.generation as i64), a.id));
    let mut auxiliary_trunks: Vec<Vec<AtomId>> = Vec::new();
    let mut in_trunk: BTreeSet<AtomId> = BTreeSet::new();
    for a in &aux_atoms {
        if !a.is_plain_annulus() || in_trunk.contains(&a.id) {
            continue;
        }
        // Climb to the attractor-side top of this ladder, then walk down.
        let mut top = a.id;
        loop {
            let t = g.atom(top).expect("aux atom");
            let up = t
                .internal
                .first()
                .and_then(|&c| g.circle(c))
                .and_then(|c| c.outer_atom)
                .filter(|id| {
                    roles[id] == Role::Auxiliary
                        && g.atom(*id).map(|x| x.is_plain_annulus()).unwrap_or(false)
                });
            match up {
                Some(u) if !in_trunk.contains(&u) => top = u,
                _ => break,
            }
        }
        let mut ladder = Vec::new();
        let mut cur = Some(top);
        while let Some(id) = cur {
            let t = match g.atom(id) {
                Some(t) if roles[&id] == Role::Auxiliary && t.is_plain_annulus() => t,
                _ => break,
            };
            if !in_trunk.insert(id) {
                break;
            }
            ladder.push(id);
            cur = if t.external.len() == 1 {
                g.circle(t.external[0]).and_then(|c| c.inner_atom)
            } else {
                None
            };
        }
        if !ladder.is_empty() {
            auxiliary_trunks.push(ladder);
        }
    }
    let mut auxiliary_stumps = Vec::new();
    let mut auxiliary_root = Vec::new();
    for a in &aux_atoms {
        if in_trunk.contains(&a.id) {
            continue;
        }
        if a.singular.is_empty() {
            auxiliary_root.push(a.id);
        } else {
            auxiliary_stumps.push(a.id);
        }
    }

    Ok(Decomposition {
        main_trunk,
        main_stump,
        main_root,
        auxiliary_trunks,
        auxiliary_stumps,
        auxiliary_root,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct InfeasibleFinding {
    pub atom: AtomId,
    pub rule: &'static str,
    pub message: String,
}

/// Scans for the forbidden pattern: an `(a, 1)` atom (`a > 1`) with no
/// singular points anywhere above it would repeat as homeomorphic copies
/// forever, forcing infinitely many singular points. Also asserts that once
/// the graph has singular points, main atoms below the deepest one are mapped
/// homeomorphically.
pub fn infeasibility_scan(g: &AtomGraph) -> Vec<InfeasibleFinding> {
    let mut findings = Vec::new();
    for a in &g.atoms {
        let (x, y) = a.boundary_type();
        if x > 1 && y == 1 && !subtree_has_singular_above(g, a.id) {
            findings.push(InfeasibleFinding {
                atom: a.id,
                rule: "infinitely-many-singular-points",
                message: format!(
                    "type ({x}, 1) atom with no singular points above repeats as ({x}, 1) \
                     homeomorphic copies indefinitely"
                ),
            });
        }
    }
    if g.has_singular() {
        let deepest = g
            .atoms
            .iter()
            .filter(|a| !a.singular.is_empty())
            .map(|a| a.generation)
            .min()
            .expect("has singular");
        if let Ok(roles) = mark_main_auxiliary(g) {
            for a in &g.atoms {
                if a.generation < deepest && roles[&a.id] == Role::Main && a.cover_degree != 1 {
                    findings.push(InfeasibleFinding {
                        atom: a.id,
                        rule: "backward-chain-homeomorphism",
                        message: format!(
                            "main atom below the deepest singular point covers with degree {}",
                            a.cover_degree
                        ),
                    });
                }
            }
        }
    }
    findings
}

fn subtree_has_singular_above(g: &AtomGraph, id: AtomId) -> bool {
    let mut queue = VecDeque::new();
    let mut seen = BTreeSet::new();
    queue.push_back(id);
    seen.insert(id);
    while let Some(cur) = queue.pop_front() {
        let a = g.atom(cur).expect("scan atom");
        if cur != id && !a.singular.is_empty() {
            return true;
        }
        for &cid in &a.external {
            if let Some(up) = g.circle(cid).and_then(|c| c.inner_atom) {
                if seen.insert(up) {
                    queue.push_back(up);
                }
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::generate;
    use crate::model::{MapSpec, SingularPoint};

    #[test]
    fn ladder_all_main_trunk_only() {
        let g = generate(&MapSpec::ladder(2), 4).unwrap();
        let roles = mark_main_auxiliary(&g).unwrap();
        assert!(roles.values().all(|&r| r == Role::Main));
        let d = decompose(&g).unwrap();
        assert_eq!(d.main_trunk.len(), 5);
        assert!(d.main_stump.is_none());
        assert!(d.main_root.is_empty());
        assert!(d.auxiliary_trunks.is_empty());
    }

    #[test]
    fn split_root_all_main() {
        let g = generate(&MapSpec::single_event(2, 2, 1), 4).unwrap();
        let roles = mark_main_auxiliary(&g).unwrap();
        assert!(roles.values().all(|&r| r == Role::Main));
        let d = decompose(&g).unwrap();
        assert_eq!(d.main_trunk.len(), 1);
        let stump = d.main_stump.unwrap();
        assert_eq!(g.atom(stump).unwrap().boundary_type(), (1, 2));
        assert_eq!(d.main_root.len(), 1 + 2 + 4 + 8 + 16);
    }

    #[test]
    fn pair_has_one_auxiliary_trunk() {
        let g = generate(&MapSpec::event_pair(2, 2, 1), 3).unwrap();
        let d = decompose(&g).unwrap();
        assert_eq!(d.auxiliary_trunks.len(), 1);
        assert_eq!(d.auxiliary_trunks[0].len(), 1);
        assert!(d.auxiliary_stumps.is_empty());
        assert!(d.auxiliary_root.is_empty());
        let stump = d.main_stump.unwrap();
        assert_eq!(g.atom(stump).unwrap().boundary_type(), (2, 2));
    }

    #[test]
    fn pair_with_filler_decomposes() {
        // degree 3, order-2 pair: the leftover degree hangs a copy of the
        // stump on auxiliary structure
        let g = generate(&MapSpec::event_pair(3, 2, 1), 2).unwrap();
        let d = decompose(&g).unwrap();
        assert_eq!(d.main_trunk.len(), 1);
        assert_eq!(d.main_root.len(), 7);
        assert_eq!(d.auxiliary_trunks.len(), 2);
        assert!(d.auxiliary_stumps.is_empty());
        assert_eq!(d.auxiliary_root.len(), 3);
    }

    #[test]
    fn chain_verdicts() {
        let g = generate(&MapSpec::ladder(2), 5).unwrap();
        // base_chain runs attractor -> repeller; a forward chain is reversed
        let mut chain = g.base_chain.clone();
        chain.reverse();
        let v = chain_check(&g, &chain).unwrap();
        assert!(v.all_links_map && v.last_link_maps && v.propagation_holds);
        let single = chain_check(&g, &chain[..1]).unwrap();
        assert_eq!(single.length, 1);
        // two non-adjacent atoms
        let bad = [chain[0], chain[2]];
        assert!(matches!(chain_check(&g, &bad), Err(ChainError::NotAChain { .. })));
    }

    #[test]
    fn scan_flags_merge_stump_shape() {
        // hand-build a (2,1) atom over an annulus: the forbidden shape
        let mut g = generate(&MapSpec::event_pair(2, 2, 1), 1).unwrap();
        let stump_pos = g.atoms.iter().position(|a| !a.singular.is_empty()).unwrap();
        // drop one external circle and its subtree linkage to fake (2,1)
        let dropped = g.atoms[stump_pos].external.pop().unwrap();
        let orphan = g.circles.iter().position(|c| c.id == dropped).unwrap();
        g.circles[orphan].outer_atom = None;
        g.atoms[stump_pos].singular = alloc::vec![SingularPoint { mult: 2 }];
        // detach the copy that was glued above the dropped circle
        let copy = g.circles[orphan].inner_atom;
        if let Some(cid) = copy {
            let pos = g.atoms.iter().position(|a| a.id == cid).unwrap();
            g.atoms[pos].image = None;
        }
        let findings = infeasibility_scan(&g);
        assert!(findings.iter().any(|f| f.rule == "infinitely-many-singular-points"));
    }

    #[test]
    fn scan_clean_on_canonical() {
        for spec in [MapSpec::ladder(2), MapSpec::single_event(2, 2, 1)] {
            let g = generate(&spec, 3).unwrap();
            assert!(infeasibility_scan(&g).is_empty());
        }
    }

    #[test]
    fn transport_examples() {
        let g = generate(&MapSpec::single_event(3, 3, 1), 2).unwrap();
        let report = classify_types(&g);
        assert!(report.violations.is_empty());
        let stump = g.atoms.iter().find(|a| !a.singular.is_empty()).unwrap();
        assert_eq!(report.types[&stump.id], (1, 3));
        assert_eq!(stump.euler(), -2);
        // a degree-2 copy of a non-annulus image is a violation
        let mut broken = g.clone();
        let pos = broken.atoms.iter().position(|a| a.generation == -2).unwrap();
        broken.atoms[pos].cover_degree = 2;
        assert!(!classify_types(&broken).violations.is_empty());
    }
}
