//! Classification of tuned couplings on the 128² grid of half-width 20.
//! Crossings were located by bracketing the smallest singular value of the stage-1 operator.

use thresh2d::grid::Grid2D;
use thresh2d::potential::{Potential, Profile};
use thresh2d::threshold::{classify, coupling_scan, ClassifyOptions, SingularityKind};

const SECOND_KIND_COUPLING: f64 = 10.677_605_722_760_386;
const FIRST_KIND_COUPLING: f64 = 17.898_929_253_284_2;
const THIRD_KIND_COUPLING: f64 = 6.603_957_828_216_062;

fn grid() -> Grid2D {
    Grid2D::new(128, 20.0).unwrap()
}

fn kind_of(profile: &Profile, coupling: f64) -> (SingularityKind, [usize; 3]) {
    let rep = classify(
        &Potential::from_profile(grid(), profile, coupling).unwrap(),
        &ClassifyOptions::default(),
    )
    .unwrap();
    (rep.kind, [rep.rank_s1, rep.rank_s2, rep.rank_s3])
}

#[test]
fn weak_and_moderate_gaussians_are_regular() {
    for g in [0.1, 5.0] {
        assert_eq!(
            kind_of(&Profile::gaussian(0.8), g).0,
            SingularityKind::Regular,
            "coupling {g}"
        );
    }
}

#[test]
fn tuned_gaussians_realize_first_and_second_kind() {
    let (kind, ranks) = kind_of(&Profile::gaussian(0.8), SECOND_KIND_COUPLING);
    assert_eq!(kind, SingularityKind::SecondKind);
    assert_eq!(ranks[0], 2);
    let (kind, ranks) = kind_of(&Profile::gaussian(0.8), FIRST_KIND_COUPLING);
    assert_eq!(kind, SingularityKind::FirstKind);
    assert_eq!(ranks[0], 1);
}

#[test]
fn tuned_clover_realizes_third_kind() {
    let clover = Profile::Clover {
        separation: 1.3,
        width: 0.6,
        center: [0.0, 0.0],
    };
    let (kind, ranks) = kind_of(&clover, THIRD_KIND_COUPLING);
    assert_eq!(kind, SingularityKind::ThirdKind);
    assert!(ranks[2] >= 1 && ranks[1] == ranks[2], "{ranks:?}");
}

#[test]
fn scan_recovers_tuned_crossings() {
    let shape = Potential::from_profile(grid(), &Profile::gaussian(0.8), 1.0).unwrap();
    let found = coupling_scan(&shape, (2.0, 20.0), 24, &ClassifyOptions::default()).unwrap();
    assert!(!found.is_empty());
    for target in [SECOND_KIND_COUPLING, FIRST_KIND_COUPLING] {
        assert!(
            found.iter().any(|c| (c.g_star - target).abs() < 1e-6 * target),
            "no crossing near {target}: {found:?}"
        );
    }
}
