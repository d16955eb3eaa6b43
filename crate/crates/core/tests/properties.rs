//! Randomized structural properties over generated graphs: every validator
//! rule holds, roles obey the role calculus, and the census counts follow the
//! stabilization rule.

use wander_atlas_core::{
    build_reeb, enumerate_ends, generate, mark_main_auxiliary, validate, MapSpec, Role,
};

/// Small deterministic xorshift; the suite must not depend on external seeds.
struct Rng(u64);

impl Rng {
    fn next(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }
    fn below(&mut self, n: u64) -> u64 {
        self.next() % n
    }
}

fn random_spec(rng: &mut Rng) -> MapSpec {
    let d = 1 + rng.below(4) as u32;
    if d == 1 {
        return MapSpec::ladder(1);
    }
    match rng.below(3) {
        0 => MapSpec::ladder(d),
        1 => MapSpec::single_event(d, d, 1 + rng.below(3) as u32),
        _ => {
            let b = 2 + rng.below(d as u64 - 1) as u32;
            MapSpec::event_pair(d, b, 1 + rng.below(3) as u32)
        }
    }
}

#[test]
fn random_specs_satisfy_all_rules() {
    let mut rng = Rng(0x5eed_cafe);
    for case in 0..60 {
        let spec = random_spec(&mut rng);
        let depth = 1 + rng.below(4) as u32;
        let g = generate(&spec, depth).unwrap_or_else(|e| panic!("case {case}: {e}"));
        let report = validate(&g);
        assert!(
            report.passed(),
            "case {case} ({}) depth {depth}: {:?}",
            spec.label,
            report.failures().collect::<Vec<_>>()
        );
        let roles = mark_main_auxiliary(&g).expect("role calculus");
        for a in &g.atoms {
            if roles[&a.id] == Role::Main {
                if let Some(img) = a.image {
                    assert_eq!(roles[&img], Role::Main, "case {case}: f(main) not main");
                }
            }
        }
        let tree = build_reeb(&g).expect("tree");
        assert_eq!(tree.vertices.len(), g.atoms.len());
        let non_frontier = g.circles.iter().filter(|c| !c.is_frontier()).count();
        assert_eq!(tree.edges.len(), non_frontier);
        // a finite forest with as many edges as atoms minus components
        assert!(tree.edges.len() < g.atoms.len());
    }
}

#[test]
fn census_counts_follow_stabilization() {
    for d in [2u32, 3, 4] {
        let g = generate(&MapSpec::single_event(d, d, 1), 5).unwrap();
        let tree = build_reeb(&g).unwrap();
        let census = enumerate_ends(&g, &tree, g.depth);
        for k in 0..=5u32 {
            assert_eq!(census.branches_beyond(-1, k), (d as u64).pow(k));
        }
        assert_eq!(census.aib_count(), 1);
    }
}

#[test]
fn classification_stable_under_regeneration() {
    for spec in [
        MapSpec::ladder(2),
        MapSpec::single_event(2, 2, 1),
        MapSpec::event_pair(3, 2, 2),
    ] {
        let classes: Vec<String> = (1..=4)
            .map(|depth| {
                let g = generate(&spec, depth).unwrap();
                let ends = wander_atlas_core::classify(&g).unwrap();
                format!("{:?}/{:?}", ends.aib_class, ends.rib_class)
            })
            .collect();
        assert!(classes.windows(2).all(|w| w[0] == w[1]), "{}: {classes:?}", spec.label);
    }
}

#[test]
fn serialization_round_trips_generated_graphs() {
    let mut rng = Rng(0xabcd_1234);
    for _ in 0..20 {
        let spec = random_spec(&mut rng);
        let g = generate(&spec, 1 + rng.below(3) as u32).unwrap();
        let back = wander_atlas_core::AtomGraph::from_json(&g.to_json()).unwrap();
        assert_eq!(g, back);
    }
}
