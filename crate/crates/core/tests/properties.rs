use loggas::dynamics::velocity_field;
use loggas::functionals::{fisher_discrete, hilbert_all};
use loggas::measures::{moment, symmetrize, w2, ParticleEnsemble};
use loggas::Potential;
use proptest::prelude::*;

fn positions(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, 1..=max_len).prop_filter_map("distinct", |mut v| {
        v.sort_by(f64::total_cmp);
        v.dedup();
        if v.windows(2).all(|w| w[1] - w[0] > 1e-6) {
            Some(v)
        } else {
            None
        }
    })
}

fn same_len(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, n).prop_map(|mut v| {
        v.sort_by(f64::total_cmp);
        // spread ties apart deterministically
        for i in 1..v.len() {
            if v[i] - v[i - 1] < 1e-6 {
                v[i] = v[i - 1] + 1e-3;
            }
        }
        v
    })
}

fn antisymmetric(max_half: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..5.0, 1..=max_half).prop_filter_map("distinct", |mut h| {
        h.sort_by(f64::total_cmp);
        h.dedup();
        if !h.windows(2).all(|w| w[1] - w[0] > 1e-6) {
            return None;
        }
        let mut x: Vec<f64> = h.iter().rev().map(|v| -v).collect();
        x.extend(h);
        Some(x)
    })
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for k in 0..=p.len() {
            let mut q = p.clone();
            q.insert(k, n - 1);
            out.push(q);
        }
    }
    out
}

fn potentials() -> impl Strategy<Value = Potential> {
    prop_oneof![
        (-1.9f64..5.0).prop_map(|c| Potential::quartic_confining(c).unwrap()),
        (-0.08f64..=0.0).prop_map(|g| Potential::quartic_nonconfining(g).unwrap()),
        (2u32..4, prop::collection::vec(-2.0f64..2.0, 2))
            .prop_map(|(n, c)| Potential::general_even(n, c[..(n - 1) as usize].to_vec()).unwrap()),
    ]
}

proptest! {
    #[test]
    fn w2_is_a_metric(a in positions(12), b in positions(12), c in positions(12)) {
        let (a, b, c) = (
            ParticleEnsemble::new(a).unwrap(),
            ParticleEnsemble::new(b).unwrap(),
            ParticleEnsemble::new(c).unwrap(),
        );
        prop_assert_eq!(w2(&a, &a), 0.0);
        prop_assert!((w2(&a, &b) - w2(&b, &a)).abs() <= 1e-12 * (1.0 + w2(&a, &b)));
        prop_assert!(w2(&a, &c) <= w2(&a, &b) + w2(&b, &c) + 1e-9);
    }

    #[test]
    fn w2_equals_best_permutation((a, b) in (1usize..=6).prop_flat_map(|n| (same_len(n), same_len(n)))) {
        let n = a.len();
        let best = permutations(n)
            .into_iter()
            .map(|p| p.iter().enumerate().map(|(i, &j)| (a[i] - b[j]).powi(2)).sum::<f64>() / n as f64)
            .fold(f64::INFINITY, f64::min)
            .sqrt();
        let got = w2(&ParticleEnsemble::new(a).unwrap(), &ParticleEnsemble::new(b).unwrap());
        prop_assert!((got - best).abs() <= 1e-12 * (1.0 + best));
    }

    #[test]
    fn w2_unequal_sizes_match_replication(a in positions(5), b in positions(4)) {
        // replicate each point to a common count and use the equal-size formula
        let (na, nb) = (a.len(), b.len());
        let rep = |v: &[f64], k: usize| v.iter().flat_map(|&x| std::iter::repeat_n(x, k)).collect::<Vec<_>>();
        let (ra, rb) = (rep(&a, nb), rep(&b, na));
        let s: f64 = ra.iter().zip(&rb).map(|(p, q)| (p - q).powi(2)).sum();
        let oracle = (s / (na * nb) as f64).sqrt();
        let got = w2(&ParticleEnsemble::new(a).unwrap(), &ParticleEnsemble::new(b).unwrap());
        prop_assert!((got - oracle).abs() <= 1e-12 * (1.0 + oracle));
    }

    #[test]
    fn potentials_are_even(v in potentials(), x in -5.0f64..5.0) {
        prop_assert_eq!(v.value(x), v.value(-x));
        prop_assert_eq!(v.derivative(x), -v.derivative(-x));
        prop_assert_eq!(v.second_derivative(x), v.second_derivative(-x));
    }

    #[test]
    fn derivative_matches_finite_difference(v in potentials(), x in -3.0f64..3.0) {
        let h = 1e-5;
        let fd = (v.value(x + h) - v.value(x - h)) / (2.0 * h);
        prop_assert!((fd - v.derivative(x)).abs() <= 1e-6 * (1.0 + v.derivative(x).abs()));
        let fd2 = (v.derivative(x + h) - v.derivative(x - h)) / (2.0 * h);
        prop_assert!((fd2 - v.second_derivative(x)).abs() <= 1e-6 * (1.0 + v.second_derivative(x).abs()));
    }

    #[test]
    fn symmetrize_yields_odd_ensemble(x in positions(16)) {
        prop_assume!(x.len() % 2 == 0);
        let e = ParticleEnsemble::new(x).unwrap();
        if let Ok(s) = symmetrize(&e) {
            prop_assert!(s.is_symmetric(0.0));
            let y = s.positions();
            for i in 0..y.len() / 2 {
                prop_assert_eq!(y[i] + y[y.len() - 1 - i], 0.0);
            }
            // symmetrizing never increases the second moment
            prop_assert!(moment(&s, 2.0).unwrap() <= moment(&e, 2.0).unwrap() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn hilbert_sums_to_zero(x in positions(40)) {
        let e = ParticleEnsemble::new(x).unwrap();
        let h = hilbert_all(&e);
        let scale = h.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let s: f64 = h.iter().sum();
        prop_assert!(s.abs() <= 1e-12 * h.len() as f64 * (1.0 + scale));
    }

    #[test]
    fn fisher_nonnegative(x in positions(30), v in potentials()) {
        let e = ParticleEnsemble::new(x).unwrap();
        prop_assert!(fisher_discrete(&e, &v) >= 0.0);
    }

    #[test]
    fn velocity_is_odd_for_symmetric_ensembles(x in antisymmetric(20), v in potentials()) {
        let e = ParticleEnsemble::new(x).unwrap();
        let vel = velocity_field(&e, &v);
        let n = vel.len();
        for i in 0..n {
            prop_assert_eq!(vel[i], -vel[n - 1 - i]);
        }
        let h = hilbert_all(&e);
        for i in 0..n {
            let r = v.derivative(e.positions()[i]) - 2.0 * h[i];
            let m = v.derivative(e.positions()[n - 1 - i]) - 2.0 * h[n - 1 - i];
            prop_assert_eq!(r, -m);
        }
    }
}
