//! Domain types: map presentations, atoms, gluing circles and atom graphs,
//! plus the JSON wire format.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

pub type AtomId = u32;
pub type CircleId = u32;

/// How a singular level crosses its atom: a `Split` wedge multiplies circles
/// toward the repeller, a `Merge` wedge multiplies them toward the attractor.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventSide {
    #[default]
    Split,
    Merge,
}

/// A branch point of the map, addressed by child indices from the base
/// annulus into the preimage tree. `mult` is the local branching order
/// (the map looks like `z^mult` near the point), so the defect is `mult - 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingularEvent {
    pub address: Vec<u32>,
    pub mult: u32,
    #[serde(default)]
    pub side: EventSide,
}

/// Finite presentation of an inner self-covering restricted to one wandering
/// component: a global degree, finitely many singular events in the preimage
/// tree of the base annulus, and the convention that beyond the deepest event
/// all further preimages stabilize to homeomorphic copies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub degree: u32,
    #[serde(default)]
    pub label: String,
    #[serde(default)]
    pub events: Vec<SingularEvent>,
}

impl MapSpec {
    pub fn ladder(degree: u32) -> Self {
        MapSpec { degree, label: format!("degree-{degree} ladder"), events: Vec::new() }
    }

    /// One singular event of local order `mult`, `chain_depth` steps down the
    /// main chain.
    pub fn single_event(degree: u32, mult: u32, chain_depth: u32) -> Self {
        MapSpec {
            degree,
            label: format!("degree-{degree}, one order-{mult} branch point"),
            events: alloc::vec![SingularEvent {
                address: alloc::vec![0; chain_depth as usize],
                mult,
                side: EventSide::Split,
            }],
        }
    }

    /// A merge/split pair of order-`mult` events in one atom `chain_depth`
    /// steps down the main chain.
    pub fn event_pair(degree: u32, mult: u32, chain_depth: u32) -> Self {
        let address = alloc::vec![0; chain_depth as usize];
        MapSpec {
            degree,
            label: format!("degree-{degree}, order-{mult} merge/split pair"),
            events: alloc::vec![
                SingularEvent { address: address.clone(), mult, side: EventSide::Merge },
                SingularEvent { address, mult, side: EventSide::Split },
            ],
        }
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }
}

/// One singular point recorded inside an atom (position is irrelevant to the
/// combinatorics, only the local branching order matters).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingularPoint {
    pub mult: u32,
}

/// A connected component of one level band.
///
/// Generation increases toward the attractor: an atom of generation `n` is a
/// component of the band between levels `c - n - 1` and `c - n`, and the map
/// raises generation by one. `internal` circles sit on the attractor side of
/// the band, `external` circles on the repeller side.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub id: AtomId,
    pub generation: i32,
    pub internal: Vec<CircleId>,
    pub external: Vec<CircleId>,
    pub singular: Vec<SingularPoint>,
    /// Image atom under the map (one generation toward the attractor), absent
    /// when the image lies beyond the materialized window.
    pub image: Option<AtomId>,
    /// Degree of the restriction of the map to this atom onto its image.
    pub cover_degree: u32,
}

impl Atom {
    /// Boundary type `(a, b)`: `a` internal circles, `b` external circles.
    pub fn boundary_type(&self) -> (usize, usize) {
        (self.internal.len(), self.external.len())
    }

    /// Euler characteristic of a planar atom: `2 - |boundary|`.
    pub fn euler(&self) -> i64 {
        2 - (self.internal.len() + self.external.len()) as i64
    }

    pub fn defect_sum(&self) -> i64 {
        self.singular.iter().map(|s| s.mult as i64 - 1).sum()
    }

    pub fn is_plain_annulus(&self) -> bool {
        self.internal.len() == 1 && self.external.len() == 1 && self.singular.is_empty()
    }
}

/// A gluing circle on an integer level curve.
///
/// A circle of level `l` lives on the curve `tau = c - l`. The atom of
/// generation `l - 1` (repeller side) carries it as internal boundary, the
/// atom of generation `l` (attractor side) as external boundary. A missing
/// side marks the truncation frontier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Circle {
    pub id: CircleId,
    pub level: i32,
    /// Atom for which this circle is internal boundary (generation `level - 1`).
    pub inner_atom: Option<AtomId>,
    /// Atom for which this circle is external boundary (generation `level`).
    pub outer_atom: Option<AtomId>,
    /// Circle one level toward the attractor that this one winds onto.
    pub image_circle: Option<CircleId>,
    /// Degree of the restriction of the map to this circle.
    pub winding: u32,
}

impl Circle {
    pub fn is_frontier(&self) -> bool {
        self.inner_atom.is_none() || self.outer_atom.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelError {
    Json(String),
    BadReference(String),
}

impl core::fmt::Display for ModelError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ModelError::Json(m) => write!(f, "json error: {m}"),
            ModelError::BadReference(m) => write!(f, "bad reference: {m}"),
        }
    }
}

/// The finite-depth combinatorial model of a wandering component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomGraph {
    /// Global degree of the map restricted to the component.
    pub degree: u32,
    pub atoms: Vec<Atom>,
    pub circles: Vec<Circle>,
    /// Main trunk ladder ids, from the base annulus (generation 0) downward.
    pub base_chain: Vec<AtomId>,
    /// Truncation depth toward the repeller: the most negative generation
    /// materialized is `-depth`.
    pub depth: u32,
    atom_index: BTreeMap<AtomId, usize>,
    circle_index: BTreeMap<CircleId, usize>,
}

#[derive(Serialize)]
struct WireGraph<'a> {
    degree: u32,
    atoms: &'a [Atom],
    circles: &'a [Circle],
    base_chain: &'a [AtomId],
    depth: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WireGraphOwned {
    degree: u32,
    atoms: Vec<Atom>,
    circles: Vec<Circle>,
    base_chain: Vec<AtomId>,
    depth: u32,
}

impl AtomGraph {
    /// Builds the graph and its id indexes, rejecting duplicate ids and
    /// dangling references.
    pub fn from_parts(
        degree: u32,
        atoms: Vec<Atom>,
        circles: Vec<Circle>,
        base_chain: Vec<AtomId>,
        depth: u32,
    ) -> Result<Self, ModelError> {
        let mut atom_index = BTreeMap::new();
        for (i, a) in atoms.iter().enumerate() {
            if atom_index.insert(a.id, i).is_some() {
                return Err(ModelError::BadReference(format!("duplicate atom id {}", a.id)));
            }
        }
        let mut circle_index = BTreeMap::new();
        for (i, c) in circles.iter().enumerate() {
            if circle_index.insert(c.id, i).is_some() {
                return Err(ModelError::BadReference(format!("duplicate circle id {}", c.id)));
            }
        }
        let g = AtomGraph { degree, atoms, circles, base_chain, depth, atom_index, circle_index };
        for a in &g.atoms {
            for cid in a.internal.iter().chain(a.external.iter()) {
                if g.circle(*cid).is_none() {
                    return Err(ModelError::BadReference(format!(
                        "atom {} references missing circle {cid}",
                        a.id
                    )));
                }
            }
            if let Some(img) = a.image {
                if g.atom(img).is_none() {
                    return Err(ModelError::BadReference(format!(
                        "atom {} references missing image {img}",
                        a.id
                    )));
                }
            }
        }
        for c in &g.circles {
            for aid in [c.inner_atom, c.outer_atom].into_iter().flatten() {
                if g.atom(aid).is_none() {
                    return Err(ModelError::BadReference(format!(
                        "circle {} references missing atom {aid}",
                        c.id
                    )));
                }
            }
            if let Some(ic) = c.image_circle {
                if g.circle(ic).is_none() {
                    return Err(ModelError::BadReference(format!(
                        "circle {} references missing image circle {ic}",
                        c.id
                    )));
                }
            }
        }
        for aid in &g.base_chain {
            if g.atom(*aid).is_none() {
                return Err(ModelError::BadReference(format!("base_chain references {aid}")));
            }
        }
        Ok(g)
    }

    pub fn atom(&self, id: AtomId) -> Option<&Atom> {
        self.atom_index.get(&id).map(|&i| &self.atoms[i])
    }

    pub fn circle(&self, id: CircleId) -> Option<&Circle> {
        self.circle_index.get(&id).map(|&i| &self.circles[i])
    }

    pub fn min_generation(&self) -> i32 {
        self.atoms.iter().map(|a| a.generation).min().unwrap_or(0)
    }

    pub fn max_generation(&self) -> i32 {
        self.atoms.iter().map(|a| a.generation).max().unwrap_or(0)
    }

    pub fn atoms_at_generation(&self, generation: i32) -> Vec<&Atom> {
        self.atoms.iter().filter(|a| a.generation == generation).collect()
    }

    /// All singular multiplicities present, in atom order.
    pub fn singular_census(&self) -> Vec<u32> {
        let mut out = Vec::new();
        for a in &self.atoms {
            out.extend(a.singular.iter().map(|s| s.mult));
        }
        out
    }

    pub fn has_singular(&self) -> bool {
        self.atoms.iter().any(|a| !a.singular.is_empty())
    }

    /// The two atoms glued along a circle, if both sides are materialized.
    pub fn circle_pair(&self, c: &Circle) -> Option<(AtomId, AtomId)> {
        match (c.inner_atom, c.outer_atom) {
            (Some(i), Some(o)) => Some((i, o)),
            _ => None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.wire()).expect("graph serializes")
    }

    pub fn to_json_compact(&self) -> String {
        serde_json::to_string(&self.wire()).expect("graph serializes")
    }

    fn wire(&self) -> WireGraph<'_> {
        WireGraph {
            degree: self.degree,
            atoms: &self.atoms,
            circles: &self.circles,
            base_chain: &self.base_chain,
            depth: self.depth,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let wire: WireGraphOwned =
            serde_json::from_str(text).map_err(|e| ModelError::Json(e.to_string()))?;
        AtomGraph::from_parts(wire.degree, wire.atoms, wire.circles, wire.base_chain, wire.depth)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn tiny() -> AtomGraph {
        let atoms = vec![
            Atom {
                id: 0,
                generation: 0,
                internal: vec![0],
                external: vec![1],
                singular: Vec::new(),
                image: None,
                cover_degree: 2,
            },
            Atom {
                id: 1,
                generation: -1,
                internal: vec![1],
                external: vec![2],
                singular: Vec::new(),
                image: Some(0),
                cover_degree: 2,
            },
        ];
        let circles = vec![
            Circle { id: 0, level: 1, inner_atom: Some(0), outer_atom: None, image_circle: None, winding: 2 },
            Circle { id: 1, level: 0, inner_atom: Some(1), outer_atom: Some(0), image_circle: Some(0), winding: 2 },
            Circle { id: 2, level: -1, inner_atom: None, outer_atom: Some(1), image_circle: Some(1), winding: 2 },
        ];
        AtomGraph::from_parts(2, atoms, circles, vec![0, 1], 1).unwrap()
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let g = tiny();
        let text = g.to_json();
        let back = AtomGraph::from_json(&text).unwrap();
        assert_eq!(g, back);
        assert_eq!(text, back.to_json());
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = tiny().to_json().replacen("\"degree\"", "\"extra\": 1, \"degree\"", 1);
        assert!(AtomGraph::from_json(&text).is_err());
    }

    #[test]
    fn dangling_references_rejected() {
        let mut g = tiny();
        g.atoms[1].image = Some(99);
        let text = g.to_json();
        assert!(matches!(AtomGraph::from_json(&text), Err(ModelError::BadReference(_))));
    }

    #[test]
    fn spec_json_defaults() {
        let s = MapSpec::from_json(r#"{"degree":2,"events":[{"address":[0],"mult":2}]}"#).unwrap();
        assert_eq!(s.events[0].side, EventSide::Split);
        assert!(MapSpec::from_json(r#"{"degree":2,"bogus":1}"#).is_err());
    }

    #[test]
    fn euler_and_type() {
        let a = Atom {
            id: 7,
            generation: -1,
            internal: vec![0],
            external: vec![1, 2],
            singular: vec![SingularPoint { mult: 2 }],
            image: Some(0),
            cover_degree: 2,
        };
        assert_eq!(a.boundary_type(), (1, 2));
        assert_eq!(a.euler(), -1);
        assert_eq!(a.defect_sum(), 1);
    }
}
