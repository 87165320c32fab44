use gch_core::classes::{self, Relation, StarSpec};
use gch_core::graph::library;
use gch_core::homology;
use gch_core::{Complex, FieldTag, Graph};
use itertools::Itertools;

const Q: FieldTag = FieldTag::Rationals;

fn corpus() -> Vec<Graph> {
    vec![
        library::star(3),
        library::star(4),
        library::star(5),
        library::theta(),
        library::lollipop(),
        library::h_tree(),
        library::banana(4),
        library::partition_example(),
        library::complete(4),
        library::complete(5),
    ]
}

#[test]
fn every_star_is_a_cycle() {
    for g in corpus() {
        let cx = Complex::reduced(&g);
        for v in g.essential_vertices().iter() {
            for triple in g.half_edges_at(v).iter().copied().combinations(3) {
                let spec = StarSpec::new(&g, [triple[0], triple[1], triple[2]]).unwrap();
                let c = classes::star_class(&cx, &spec, Q).unwrap();
                assert!(cx.boundary(&c).is_zero());
            }
        }
    }
}

#[test]
fn x_relations_at_every_vertex_of_degree_four() {
    let mut checked = 0;
    for g in corpus() {
        let cx = Complex::reduced(&g);
        for v in g.vertices().filter(|&v| g.degree(v) >= 4) {
            let hs = g.half_edges_at(v);
            let halves = [hs[0], hs[1], hs[2], hs[3]];
            for relation in [Relation::UnstableX(halves), Relation::StableX(halves), Relation::CombinedX(halves)] {
                let report = classes::verify_relation(&cx, &relation, Q).unwrap();
                assert!(report.is_boundary, "{} at {} on {}", report.kind, g.vertex_name(v), g.hash());
                checked += 1;
            }
        }
    }
    assert!(checked >= 9);
}

#[test]
fn well_separating_maximizers_carry_rigid_tori() {
    for (g, i) in [(library::h_tree(), 2), (library::partition_example(), 2), (library::partition_example(), 1), (library::star(4), 1)] {
        let cx = Complex::reduced(&g);
        for w in g.ramos_number(i).unwrap().maximizers {
            if !g.is_well_separating(&w).unwrap() {
                continue;
            }
            let fam = classes::a_w_family(&g, &w, &[]).unwrap();
            let mut rigid = 0;
            for m in &fam.members {
                let combinatorial = classes::is_rigid(&g, m).unwrap();
                assert_eq!(combinatorial, classes::is_rigid_by_filtration(&cx, m, Q).unwrap());
                rigid += usize::from(combinatorial);
            }
            assert!(rigid > 0, "{:?}", w.names(&g));
        }
    }
}

#[test]
fn tori_are_killed_by_differences_in_one_block() {
    let g = library::partition_example();
    let cx = Complex::reduced(&g);
    let w = g.vertex_set(["C", "F"]).unwrap();
    let fam = classes::a_w_family(&g, &w, &[]).unwrap();
    let (cd, de) = (g.edge_id("CD").unwrap(), g.edge_id("DE").unwrap());
    assert!(g.component_partition(&w).same_block(cd, de));
    for m in &fam.members {
        let alpha = classes::torus_class(&cx, m, Q).unwrap();
        let killed = cx.multiply_linear(&alpha, &[(cd, 1), (de, -1)]);
        assert!(homology::is_boundary(&cx, &killed).unwrap());
        // the same product across blocks survives
        let ac = g.edge_id("AC").unwrap();
        let kept = cx.multiply_linear(&alpha, &[(cd, 1), (ac, -1)]);
        assert!(!homology::is_boundary(&cx, &kept).unwrap());
    }
}

#[test]
fn freeness_on_the_partition_example() {
    let g = library::partition_example();
    let cx = Complex::reduced(&g);
    for names in [["C", "D"], ["C", "F"], ["D", "F"]] {
        let w = g.vertex_set(names).unwrap();
        let fam = classes::a_w_family(&g, &w, &[]).unwrap();
        for k in 4..=6 {
            let r = classes::verify_aw_freeness(&cx, &fam, Q, k).unwrap();
            assert!(r.passed(), "{names:?} k={k}: {} vs {}", r.observed, r.expected);
        }
    }
}
