//! Rule-by-rule validation of an atom graph. Failures are report entries,
//! never panics; the rule order is fixed so reports are deterministic.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use serde::Serialize;

use crate::engine::analysis::{classify_types, infeasibility_scan};
use crate::model::{AtomGraph, AtomId};

#[derive(Debug, Clone, Serialize)]
pub struct RuleResult {
    pub name: &'static str,
    pub passed: bool,
    pub offenders: Vec<String>,
}

impl RuleResult {
    fn new(name: &'static str, offenders: Vec<String>) -> Self {
        RuleResult { name, passed: offenders.is_empty(), offenders }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub rules: Vec<RuleResult>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.rules.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &RuleResult> {
        self.rules.iter().filter(|r| !r.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Runs every structural rule and returns the per-rule report.
pub fn validate(g: &AtomGraph) -> ValidationReport {
    let rules = alloc::vec![
        RuleResult::new("structure", structure(g)),
        RuleResult::new("rh-identity", rh_identity(g)),
        RuleResult::new("gluing-acyclic", acyclicity(g)),
        RuleResult::new("single-gluing", single_gluing(g)),
        RuleResult::new("degree-conservation", degree_conservation(g)),
        RuleResult::new("covering-degree", covering_degree(g)),
        RuleResult::new("generation-step", generation_step(g)),
        RuleResult::new("type-transport", type_transport(g)),
        RuleResult::new("infeasible-pattern", infeasible_pattern(g)),
    ];
    ValidationReport { rules }
}

/// Cross-link consistency: boundary lists agree with circle endpoints, the
/// base chain is a descending glued ladder, and depth matches the window.
fn structure(g: &AtomGraph) -> Vec<String> {
    let mut bad = Vec::new();
    for a in &g.atoms {
        for &cid in &a.internal {
            match g.circle(cid) {
                Some(c) if c.inner_atom == Some(a.id) && c.level == a.generation + 1 => {}
                _ => bad.push(format!("atom {} internal circle {cid} mislinked", a.id)),
            }
        }
        for &cid in &a.external {
            match g.circle(cid) {
                Some(c) if c.outer_atom == Some(a.id) && c.level == a.generation => {}
                _ => bad.push(format!("atom {} external circle {cid} mislinked", a.id)),
            }
        }
        if a.cover_degree < 1 {
            bad.push(format!("atom {} has covering degree 0", a.id));
        }
        if a.internal.is_empty() && a.external.is_empty() {
            bad.push(format!("atom {} has no boundary", a.id));
        }
    }
    for c in &g.circles {
        if c.winding < 1 {
            bad.push(format!("circle {} has winding 0", c.id));
        }
        if let Some(inner) = c.inner_atom {
            let a = g.atom(inner).expect("indexed");
            if !a.internal.contains(&c.id) {
                bad.push(format!("circle {} not listed by inner atom {inner}", c.id));
            }
        }
        if let Some(outer) = c.outer_atom {
            let a = g.atom(outer).expect("indexed");
            if !a.external.contains(&c.id) {
                bad.push(format!("circle {} not listed by outer atom {outer}", c.id));
            }
        }
    }
    if !g.atoms.is_empty() {
        if g.depth as i64 != -(g.min_generation() as i64) {
            bad.push(format!(
                "depth {} does not match most negative generation {}",
                g.depth,
                g.min_generation()
            ));
        }
        if g.base_chain.is_empty() {
            bad.push(String::from("base chain is empty"));
        }
    }
    for w in g.base_chain.windows(2) {
        let (hi, lo) = (g.atom(w[0]), g.atom(w[1]));
        match (hi, lo) {
            (Some(hi), Some(lo)) => {
                let glued = lo.internal.iter().any(|c| hi.external.contains(c));
                if lo.generation != hi.generation - 1 || !glued {
                    bad.push(format!("base chain breaks between {} and {}", w[0], w[1]));
                }
            }
            _ => bad.push(String::from("base chain references missing atom")),
        }
    }
    if let Some(&first) = g.base_chain.first() {
        if let Some(a) = g.atom(first) {
            if a.generation != g.max_generation() {
                bad.push(format!("base chain does not start at the top generation ({first})"));
            }
        }
    }
    bad
}

/// Per atom with a materialized image: `chi(A) = k * chi(f(A)) - sum(b_p - 1)`
/// with `chi = 2 - |boundary|`, and every branching order fits the covering.
fn rh_identity(g: &AtomGraph) -> Vec<String> {
    let mut bad = Vec::new();
    for a in &g.atoms {
        for s in &a.singular {
            if s.mult as i64 > a.cover_degree as i64 {
                bad.push(format!(
                    "atom {}: branching order {} exceeds covering degree {}",
                    a.id, s.mult, a.cover_degree
                ));
            }
        }
        let Some(img) = a.image.and_then(|i| g.atom(i)) else { continue };
        let lhs = a.euler();
        let rhs = a.cover_degree as i64 * img.euler() - a.defect_sum();
        if lhs != rhs {
            bad.push(format!(
                "atom {}: chi {} != {} * chi(image {}) - defects {}",
                a.id, lhs, a.cover_degree, img.id, a.defect_sum()
            ));
        }
    }
    bad
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu((0..n).collect())
    }
    fn find(&mut self, x: usize) -> usize {
        if self.0[x] != x {
            let r = self.find(self.0[x]);
            self.0[x] = r;
        }
        self.0[x]
    }
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra] = rb;
        true
    }
}

/// The gluing multigraph must be a forest; a handle would appear as a cycle.
fn acyclicity(g: &AtomGraph) -> Vec<String> {
    let index: BTreeMap<AtomId, usize> =
        g.atoms.iter().enumerate().map(|(i, a)| (a.id, i)).collect();
    let mut dsu = Dsu::new(g.atoms.len());
    let mut bad = Vec::new();
    for c in &g.circles {
        if let Some((inner, outer)) = g.circle_pair(c) {
            if !dsu.union(index[&inner], index[&outer]) {
                bad.push(format!("circle {} closes a cycle between atoms {inner} and {outer}", c.id));
            }
        }
    }
    bad
}

/// Two atoms share at most one gluing circle.
fn single_gluing(g: &AtomGraph) -> Vec<String> {
    let mut seen: BTreeSet<(AtomId, AtomId)> = BTreeSet::new();
    let mut bad = Vec::new();
    for c in &g.circles {
        if let Some((inner, outer)) = g.circle_pair(c) {
            let key = if inner <= outer { (inner, outer) } else { (outer, inner) };
            if !seen.insert(key) {
                bad.push(format!("atoms {} and {} share more than one circle", key.0, key.1));
            }
        }
    }
    bad
}

/// Windings of the materialized preimage circles of any circle sum to the
/// global degree. Circles with no materialized preimages are frontier-side
/// and are skipped.
fn degree_conservation(g: &AtomGraph) -> Vec<String> {
    let mut sums: BTreeMap<u32, u64> = BTreeMap::new();
    for c in &g.circles {
        if let Some(t) = c.image_circle {
            *sums.entry(t).or_default() += c.winding as u64;
        }
    }
    let mut bad = Vec::new();
    for (target, sum) in sums {
        if sum != g.degree as u64 {
            bad.push(format!(
                "circle {target}: preimage windings sum to {sum}, expected {}",
                g.degree
            ));
        }
    }
    bad
}

/// Boundary restrictions of the covering: over each boundary circle of the
/// image, preimage windings sum to the covering degree. Atoms whose image is
/// beyond the window cover an annulus.
fn covering_degree(g: &AtomGraph) -> Vec<String> {
    let mut bad = Vec::new();
    for a in &g.atoms {
        let (img_internal, img_external) = match a.image.and_then(|i| g.atom(i)) {
            Some(img) => (img.internal.len() as u64, img.external.len() as u64),
            None => (1, 1),
        };
        let sum = |circles: &[crate::model::CircleId]| -> u64 {
            circles.iter().filter_map(|&c| g.circle(c)).map(|c| c.winding as u64).sum()
        };
        let internal_sum = sum(&a.internal);
        let external_sum = sum(&a.external);
        let k = a.cover_degree as u64;
        if !a.internal.is_empty() && internal_sum != k * img_internal {
            bad.push(format!(
                "atom {}: internal windings sum to {internal_sum}, covering degree {k} over \
                 {img_internal} image circles requires {}",
                a.id,
                k * img_internal
            ));
        }
        if !a.external.is_empty() && external_sum != k * img_external {
            bad.push(format!(
                "atom {}: external windings sum to {external_sum}, covering degree {k} over \
                 {img_external} image circles requires {}",
                a.id,
                k * img_external
            ));
        }
    }
    bad
}

/// The map shifts generations and levels by one toward the attractor and
/// commutes with the gluing.
fn generation_step(g: &AtomGraph) -> Vec<String> {
    let mut bad = Vec::new();
    let top = g.max_generation();
    for a in &g.atoms {
        match a.image.and_then(|i| g.atom(i)) {
            Some(img) => {
                if img.generation != a.generation + 1 {
                    bad.push(format!(
                        "atom {} maps to generation {} instead of {}",
                        a.id,
                        img.generation,
                        a.generation + 1
                    ));
                }
            }
            None => {
                if a.generation != top {
                    bad.push(format!(
                        "atom {} below the attractor frontier has no image",
                        a.id
                    ));
                }
            }
        }
    }
    for c in &g.circles {
        let Some(ic) = c.image_circle.and_then(|i| g.circle(i)) else { continue };
        if ic.level != c.level + 1 {
            bad.push(format!("circle {} maps to level {} instead of {}", c.id, ic.level, c.level + 1));
        }
        if let (Some(inner), Some(img_inner)) = (c.inner_atom, ic.inner_atom) {
            if let Some(a) = g.atom(inner) {
                if let Some(ai) = a.image {
                    if ai != img_inner {
                        bad.push(format!(
                            "circle {}: inner atom maps to {ai} but image circle is internal to {img_inner}",
                            c.id
                        ));
                    }
                }
            }
        }
        if let (Some(outer), Some(img_outer)) = (c.outer_atom, ic.outer_atom) {
            if let Some(a) = g.atom(outer) {
                if let Some(ai) = a.image {
                    if ai != img_outer {
                        bad.push(format!(
                            "circle {}: outer atom maps to {ai} but image circle is external to {img_outer}",
                            c.id
                        ));
                    }
                }
            }
        }
    }
    bad
}

fn type_transport(g: &AtomGraph) -> Vec<String> {
    classify_types(g)
        .violations
        .into_iter()
        .map(|v| format!("atom {} over {}: {}", v.atom, v.image, v.message))
        .collect()
}

fn infeasible_pattern(g: &AtomGraph) -> Vec<String> {
    infeasibility_scan(g)
        .into_iter()
        .map(|f| format!("atom {} ({}): {}", f.atom, f.rule, f.message))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::generate;
    use crate::model::MapSpec;

    #[test]
    fn generated_graphs_pass() {
        for spec in [
            MapSpec::ladder(1),
            MapSpec::ladder(3),
            MapSpec::single_event(2, 2, 1),
            MapSpec::single_event(3, 3, 2),
            MapSpec::event_pair(2, 2, 1),
            MapSpec::event_pair(3, 2, 1),
        ] {
            let g = generate(&spec, 3).unwrap();
            let report = validate(&g);
            assert!(
                report.passed(),
                "spec {:?} failed: {:?}",
                spec.label,
                report.failures().collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn broken_rh_detected() {
        let mut g = generate(&MapSpec::single_event(2, 2, 1), 2).unwrap();
        // strip the stump's singular points: a (1,2) atom of degree 2 over an
        // annulus now violates -1 = 2*0 - 0
        for a in &mut g.atoms {
            a.singular.clear();
        }
        let report = validate(&g);
        assert!(report.failures().any(|r| r.name == "rh-identity"));
    }

    #[test]
    fn double_gluing_detected() {
        let mut g = generate(&MapSpec::ladder(2), 2).unwrap();
        // re-point the bottom frontier circle to close a second gluing
        let bottom = g.atoms.iter().find(|a| a.generation == -2).unwrap().id;
        let top_of_bottom = g.atom(bottom).unwrap().internal[0];
        let partner = g.circle(top_of_bottom).unwrap().outer_atom.unwrap();
        let frontier = g.atom(bottom).unwrap().external[0];
        let idx = g.circles.iter().position(|c| c.id == frontier).unwrap();
        g.circles[idx].inner_atom = Some(partner);
        let pidx = g.atoms.iter().position(|a| a.id == partner).unwrap();
        g.atoms[pidx].internal.push(frontier);
        let report = validate(&g);
        assert!(report.failures().any(|r| r.name == "single-gluing"));
        assert!(report.failures().any(|r| r.name == "gluing-acyclic"));
        // the frontier circle now sits at the wrong level for its inner atom
        assert!(report.failures().any(|r| r.name == "structure"));
    }

    #[test]
    fn conservation_breach_detected() {
        let mut g = generate(&MapSpec::ladder(2), 2).unwrap();
        let idx = g.circles.iter().position(|c| c.image_circle.is_some()).unwrap();
        g.circles[idx].winding = 1;
        let report = validate(&g);
        assert!(report.failures().any(|r| r.name == "degree-conservation"));
    }
}
