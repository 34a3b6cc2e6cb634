mod common;

use topicsurvey::geocode::Gazetteer;

#[test]
fn hand_labeled_fixture() {
    let (n, wrong) = common::geocode_fixture();
    assert_eq!(n, 50);
    assert!(wrong.is_empty(), "{wrong:#?}");
}

#[test]
fn grid_index_matches_brute_force() {
    let fixture = Gazetteer::load(&common::fixture_path("gazetteer.tsv")).unwrap();
    for gaz in [fixture, Gazetteer::builtin()] {
        let (bad, hits) = common::grid_vs_brute(&gaz, 10_000, 5);
        assert!(bad.is_empty(), "{bad:?}");
        assert!(hits > 500, "too few resolved points to be meaningful: {hits}");
    }
}
