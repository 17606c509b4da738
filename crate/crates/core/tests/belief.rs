mod common;

use std::sync::Arc;

use common::*;
use evsvm::belief::{
    conjunctive_combine, dempster_combine, BeliefError, FocalSet, Frame, MassFunction, Validity,
    Violation, World,
};
use proptest::prelude::*;

fn abc() -> Arc<Frame> {
    Arc::new(Frame::new(["a", "b", "c"]).unwrap())
}

fn from(frame: &Arc<Frame>, focal: &[(&[&str], f64)]) -> MassFunction {
    let pairs: Vec<(FocalSet, f64)> = focal
        .iter()
        .map(|(names, v)| (frame.set_of(names).unwrap(), *v))
        .collect();
    MassFunction::from_focal(Arc::clone(frame), &pairs).unwrap()
}

#[test]
fn validity_examples() {
    let f = abc();
    assert!(MassFunction::vacuous(Arc::clone(&f))
        .validate(World::Closed)
        .is_valid());

    let m = MassFunction::from_focal(Arc::clone(&f), &[(FocalSet::EMPTY, 0.2), (f.full(), 0.8)])
        .unwrap();
    assert!(matches!(
        m.validate(World::Closed),
        Validity::Invalid(Violation::EmptySetMass { .. })
    ));
    assert!(m.validate(World::Open).is_valid());

    let m = from(&f, &[(&["a"], 0.5), (&["b"], 0.6)]);
    assert!(matches!(
        m.validate(World::Open),
        Validity::Invalid(Violation::UnitSum { .. })
    ));

    let m = from(&f, &[(&["a"], 1.2), (&["b"], -0.2)]);
    assert!(matches!(
        m.validate(World::Open),
        Validity::Invalid(Violation::Negative { .. })
    ));
}

#[test]
fn credibility_examples() {
    let f = abc();
    let m = from(&f, &[(&["a"], 0.6), (&["a", "b"], 0.4)]);
    assert_eq!(m.bel(f.set_of(&["a"]).unwrap()).unwrap(), 0.6);
    assert_eq!(m.bel(f.set_of(&["a", "b"]).unwrap()).unwrap(), 1.0);

    let m = from(
        &f,
        &[(&["a"], 0.3), (&["a", "b"], 0.6), (&["a", "b", "c"], 0.1)],
    );
    let ab = f.set_of(&["a", "b"]).unwrap();
    let oracle = bel_oracle(m.masses(), ab.mask(), 3);
    assert!((oracle - 0.9).abs() < 1e-15);
    assert!((m.bel(ab).unwrap() - oracle).abs() < 1e-15);
}

#[test]
fn plausibility_examples() {
    let f = abc();
    let m = from(&f, &[(&["a"], 0.6), (&["a", "b"], 0.4)]);
    assert_eq!(m.pl(f.set_of(&["b"]).unwrap()).unwrap(), 0.4);
    assert_eq!(m.pl(f.set_of(&["a"]).unwrap()).unwrap(), 1.0);

    let mut m = from(&f, &[(&["a"], 0.3), (&["b", "c"], 0.6)]);
    m = MassFunction::from_focal(
        Arc::clone(&f),
        &m.focal_elements()
            .chain([(FocalSet::EMPTY, 0.1)])
            .collect::<Vec<_>>(),
    )
    .unwrap();
    let b = f.set_of(&["b"]).unwrap();
    let direct = pl_oracle(m.masses(), b.mask(), 3);
    let via_bel = 1.0 - m.empty_mass() - bel_oracle(m.masses(), f.complement(b).mask(), 3);
    assert!((direct - 0.6).abs() < 1e-15);
    assert!((via_bel - 0.6).abs() < 1e-15);
    assert!((m.pl(b).unwrap() - 0.6).abs() < 1e-15);
}

#[test]
fn pignistic_examples() {
    let f = abc();
    let m = from(&f, &[(&["a", "b"], 1.0)]);
    assert_eq!(m.betp().unwrap(), vec![0.5, 0.5, 0.0]);

    let v = MassFunction::vacuous(Arc::clone(&f)).betp().unwrap();
    for p in v {
        assert!((p - 1.0 / 3.0).abs() < 1e-15);
    }

    let m = from(
        &f,
        &[(&["a"], 0.3), (&["a", "b"], 0.6), (&["a", "b", "c"], 0.1)],
    );
    let oracle = betp_oracle(m.masses(), 3);
    let expected = [0.3 + 0.3 + 1.0 / 30.0, 0.3 + 1.0 / 30.0, 1.0 / 30.0];
    assert!(max_abs_diff(&oracle, &expected) < 1e-15);
    assert!(max_abs_diff(&m.betp().unwrap(), &expected) < 1e-15);

    let total = MassFunction::from_focal(Arc::clone(&f), &[(FocalSet::EMPTY, 1.0)]).unwrap();
    assert!(matches!(
        total.betp(),
        Err(BeliefError::TotalConflict { .. })
    ));
}

#[test]
fn conjunctive_examples() {
    let f = Arc::new(Frame::new(["a", "b"]).unwrap());
    let m1 = from(&f, &[(&["a"], 0.5), (&["a", "b"], 0.5)]);
    let m2 = from(&f, &[(&["b"], 0.5), (&["a", "b"], 0.5)]);

    let oracle = conjunctive_oracle(&[m1.masses().to_vec(), m2.masses().to_vec()], 2);
    assert_eq!(oracle, vec![0.25; 4]);
    let conj = conjunctive_combine(&[m1.clone(), m2.clone()]).unwrap();
    assert!(max_abs_diff(conj.masses(), &oracle) < 1e-15);

    let vac = MassFunction::vacuous(Arc::clone(&f));
    let same = conjunctive_combine(&[m1.clone(), vac]).unwrap();
    assert!(max_abs_diff(same.masses(), m1.masses()) < 1e-15);

    let a = from(&f, &[(&["a"], 1.0)]);
    let b = from(&f, &[(&["b"], 1.0)]);
    let c = conjunctive_combine(&[a, b]).unwrap();
    assert_eq!(c.masses(), &[1.0, 0.0, 0.0, 0.0]);
}

#[test]
fn dempster_examples() {
    let f = Arc::new(Frame::new(["a", "b"]).unwrap());
    let m1 = from(&f, &[(&["a"], 0.5), (&["a", "b"], 0.5)]);
    let m2 = from(&f, &[(&["b"], 0.5), (&["a", "b"], 0.5)]);

    let (oracle, k) = dempster_oracle(&[m1.masses().to_vec(), m2.masses().to_vec()], 2);
    assert!(max_abs_diff(&oracle, &[0.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]) < 1e-15);
    assert_eq!(k, 0.25);
    let d = dempster_combine(&[m1.clone(), m2]).unwrap();
    assert!(max_abs_diff(d.mass.masses(), &oracle) < 1e-15);
    assert_eq!(d.conflict, 0.25);

    let vac = MassFunction::vacuous(Arc::clone(&f));
    let same = dempster_combine(&[m1.clone(), vac]).unwrap();
    assert_eq!(same.conflict, 0.0);
    assert!(max_abs_diff(same.mass.masses(), m1.masses()) < 1e-15);

    let a = from(&f, &[(&["a"], 1.0)]);
    let b = from(&f, &[(&["b"], 1.0)]);
    assert!(matches!(
        dempster_combine(&[a, b]),
        Err(BeliefError::TotalConflict { .. })
    ));
}

#[test]
fn combination_rejects_mismatched_frames_and_empty_input() {
    let m1 = MassFunction::vacuous(abc());
    let m2 = MassFunction::vacuous(Arc::new(Frame::new(["x", "y", "z"]).unwrap()));
    assert!(conjunctive_combine(&[m1, m2]).is_err());
    assert!(matches!(
        conjunctive_combine(&[]),
        Err(BeliefError::NoSources)
    ));
}

#[test]
fn out_of_frame_subsets_are_rejected() {
    let f = Arc::new(Frame::new(["a", "b"]).unwrap());
    let m = MassFunction::vacuous(Arc::clone(&f));
    assert!(m.bel(FocalSet(0b100)).is_err());
    assert!(m.pl(FocalSet(0b100)).is_err());
    assert!(MassFunction::from_dense(f, vec![1.0; 3]).is_err());
}

#[test]
fn display_lists_focal_elements() {
    let f = abc();
    let m = from(&f, &[(&["a"], 0.5), (&["a", "b"], 0.5)]);
    assert_eq!(m.to_string(), "{{a}: 0.5, {a,b}: 0.5}");
}

fn mass_strategy() -> impl Strategy<Value = (usize, Vec<f64>)> {
    (2usize..=4).prop_flat_map(|n| {
        let size = 1usize << n;
        (Just(n), prop::collection::vec(0.0f64..1.0, size)).prop_filter_map(
            "needs some non-empty mass",
            |(n, mut raw)| {
                raw[0] = 0.0;
                // Sparsify so that many subsets carry no mass.
                for (i, v) in raw.iter_mut().enumerate() {
                    if i % 3 == 1 && *v < 0.5 {
                        *v = 0.0;
                    }
                }
                let s: f64 = raw.iter().sum();
                (s > 1e-3).then(|| (n, raw.iter().map(|v| v / s).collect()))
            },
        )
    })
}

proptest! {
    #[test]
    fn bel_and_pl_match_definitions((n, m) in mass_strategy()) {
        let f = frame(n);
        let mf = mass(&f, m.clone());
        for x in 0..(1u32 << n) {
            let bel = mf.bel(FocalSet(x)).unwrap();
            let pl = mf.pl(FocalSet(x)).unwrap();
            prop_assert!((bel - bel_oracle(&m, x, n)).abs() < 1e-12);
            prop_assert!((pl - pl_oracle(&m, x, n)).abs() < 1e-12);
            prop_assert!(bel <= pl + 1e-12);
            let comp = f.complement(FocalSet(x));
            let identity = 1.0 - mf.empty_mass() - mf.bel(comp).unwrap();
            prop_assert!((pl - identity).abs() < 1e-9);
        }
    }

    #[test]
    fn bel_and_pl_are_monotone((n, m) in mass_strategy()) {
        let f = frame(n);
        let mf = mass(&f, m);
        for x in 0..(1u32 << n) {
            for y in 0..(1u32 << n) {
                if x & !y == 0 {
                    prop_assert!(mf.bel(FocalSet(x)).unwrap() <= mf.bel(FocalSet(y)).unwrap() + 1e-12);
                    prop_assert!(mf.pl(FocalSet(x)).unwrap() <= mf.pl(FocalSet(y)).unwrap() + 1e-12);
                }
            }
        }
    }

    #[test]
    fn betp_matches_oracle_and_sums_to_one((n, m) in mass_strategy()) {
        let f = frame(n);
        let p = mass(&f, m.clone()).betp().unwrap();
        prop_assert!(max_abs_diff(&p, &betp_oracle(&m, n)) < 1e-12);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bayesian_masses_have_equal_bel_pl_and_betp(raw in prop::collection::vec(0.01f64..1.0, 3)) {
        let f = frame(3);
        let s: f64 = raw.iter().sum();
        let mut m = vec![0.0; 8];
        for (i, v) in raw.iter().enumerate() {
            m[1 << i] = v / s;
        }
        let mf = mass(&f, m.clone());
        let p = mf.betp().unwrap();
        for x in 1..8u32 {
            let bel = mf.bel(FocalSet(x)).unwrap();
            let pl = mf.pl(FocalSet(x)).unwrap();
            prop_assert!((bel - pl).abs() < 1e-12);
        }
        for i in 0..3 {
            prop_assert!((p[i] - m[1 << i]).abs() < 1e-12);
        }
    }

    #[test]
    fn combination_matches_tuple_enumeration(
        n in 2usize..=4,
        sources in 2usize..=4,
        seed in any::<u64>(),
    ) {
        let f = frame(n);
        let mut r = rng(seed);
        let raw: Vec<Vec<f64>> = (0..sources).map(|_| random_mass(&mut r, n, 3)).collect();
        let ms: Vec<MassFunction> = raw.iter().map(|m| mass(&f, m.clone())).collect();
        let conj = conjunctive_combine(&ms).unwrap();
        prop_assert!(max_abs_diff(conj.masses(), &conjunctive_oracle(&raw, n)) < 1e-12);
        let (oracle, k) = dempster_oracle(&raw, n);
        if k < 1.0 - 1e-9 {
            let d = dempster_combine(&ms).unwrap();
            prop_assert!((d.conflict - k).abs() < 1e-12);
            prop_assert!(max_abs_diff(d.mass.masses(), &oracle) < 1e-12 / (1.0 - k));
            prop_assert!(d.mass.validate(World::Closed).is_valid());
        }
    }

    #[test]
    fn combination_is_order_invariant(n in 2usize..=4, seed in any::<u64>()) {
        let f = frame(n);
        let mut r = rng(seed);
        let ms: Vec<MassFunction> = (0..3).map(|_| mass(&f, random_mass(&mut r, n, 4))).collect();
        let abc = conjunctive_combine(&ms).unwrap();
        let cba = conjunctive_combine(&[ms[2].clone(), ms[1].clone(), ms[0].clone()]).unwrap();
        let bac = conjunctive_combine(&[ms[1].clone(), ms[0].clone(), ms[2].clone()]).unwrap();
        prop_assert!(max_abs_diff(abc.masses(), cba.masses()) < 1e-12);
        prop_assert!(max_abs_diff(abc.masses(), bac.masses()) < 1e-12);
    }

    #[test]
    fn vacuous_is_neutral((n, m) in mass_strategy()) {
        let f = frame(n);
        let mf = mass(&f, m);
        let vac = MassFunction::vacuous(Arc::clone(&f));
        let c = conjunctive_combine(&[mf.clone(), vac]).unwrap();
        prop_assert!(max_abs_diff(c.masses(), mf.masses()) < 1e-15);
    }

    #[test]
    fn relabeling_classes_permutes_results(seed in any::<u64>()) {
        // Reverse the class order: subset masks map bit i -> bit n-1-i.
        let n = 3;
        let f = frame(n);
        let flip = |x: u32| (0..n).filter(|i| x & (1 << i) != 0).fold(0u32, |acc, i| acc | 1 << (n - 1 - i));
        let mut r = rng(seed);
        let raw: Vec<Vec<f64>> = (0..2).map(|_| random_mass(&mut r, n, 3)).collect();
        let permuted: Vec<Vec<f64>> = raw
            .iter()
            .map(|m| {
                let mut p = vec![0.0; m.len()];
                for (x, v) in m.iter().enumerate() {
                    p[flip(x as u32) as usize] = *v;
                }
                p
            })
            .collect();
        let c1 = conjunctive_combine(&raw.iter().map(|m| mass(&f, m.clone())).collect::<Vec<_>>()).unwrap();
        let c2 = conjunctive_combine(&permuted.iter().map(|m| mass(&f, m.clone())).collect::<Vec<_>>()).unwrap();
        for x in 0..8u32 {
            prop_assert!((c1.masses()[x as usize] - c2.masses()[flip(x) as usize]).abs() < 1e-12);
        }
    }
}
