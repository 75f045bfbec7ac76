mod common;

use common::*;
use ndarray::{Array1, Array2};
use rand::Rng;
use spancrf::corpus::{Segmentation, Span};
use spancrf::semicrf::{
    build_lattice, log_likelihood, log_partition, marginals, nll, nll_and_gradient, viterbi,
    viterbi_with_score, ScoreLattice,
};
use spancrf::spanrep::SpanFeatureVariant;

#[test]
fn log_partition_matches_enumeration() {
    let mut rng = rng(11);
    for _ in 0..100 {
        let m = rng.random_range(1..=6);
        let ny = rng.random_range(1..=3);
        let lmax = rng.random_range(1..=4);
        let lat = random_lattice(&mut rng, m, ny, lmax, 3.0);
        let want = brute_log_z(&lat);
        let got = log_partition(&lat);
        assert!(
            (got - want).abs() <= 1e-10 * want.abs().max(1.0),
            "{got} vs {want}"
        );
    }
}

#[test]
fn zero_lattice_partition_counts_paths() {
    for m in 1..=10 {
        for ny in 1..=4 {
            for lmax in 1..=4 {
                let lat =
                    ScoreLattice::from_fn(m, lmax, Array2::zeros((ny, ny)), Array1::zeros(ny), |_, _, _| 0.0)
                        .unwrap();
                let want = path_count(m, ny, lmax).ln();
                assert!((log_partition(&lat) - want).abs() <= 1e-10 * want.max(1.0));
                if m <= 6 {
                    assert_eq!(enumerate_paths(m, lmax, ny).len() as f64, path_count(m, ny, lmax));
                }
            }
        }
    }
}

#[test]
fn viterbi_matches_enumeration() {
    let mut rng = rng(12);
    for _ in 0..200 {
        let m = rng.random_range(1..=6);
        let ny = rng.random_range(1..=3);
        let lmax = rng.random_range(1..=4);
        let lat = random_lattice(&mut rng, m, ny, lmax, 3.0);
        let (path, score) = viterbi_with_score(&lat);
        let (best, best_score) = brute_best(&lat);
        assert!((score - best_score).abs() <= 1e-9);
        assert_eq!(path.spans(), best.as_slice());
        assert!(score <= log_partition(&lat) + 1e-12);
    }
}

#[test]
fn viterbi_tie_break_on_integer_scores() {
    // Coarse integer scores produce many exact ties.
    let mut rng = rng(13);
    for _ in 0..200 {
        let m = rng.random_range(1..=5);
        let ny = rng.random_range(1..=3);
        let lmax = rng.random_range(1..=3);
        let trans = Array2::from_shape_fn((ny, ny), |_| rng.random_range(-1..=1) as f64);
        let start = Array1::from_shape_fn(ny, |_| rng.random_range(-1..=1) as f64);
        let phis: Vec<f64> = (0..m * lmax * ny)
            .map(|_| rng.random_range(-1..=1) as f64)
            .collect();
        let lat = ScoreLattice::from_fn(m, lmax, trans, start, |a, len, y| {
            phis[(a * lmax + len - 1) * ny + y]
        })
        .unwrap();
        let (best, _) = brute_best(&lat);
        assert_eq!(viterbi(&lat).spans(), best.as_slice());
    }
}

#[test]
fn viterbi_worked_examples() {
    let zero = |m, lmax, ny| {
        ScoreLattice::from_fn(m, lmax, Array2::zeros((ny, ny)), Array1::zeros(ny), |_, _, _| 0.0).unwrap()
    };
    assert_eq!(
        viterbi(&zero(4, 2, 2)).spans(),
        &[Span::new(0, 1, 0), Span::new(2, 3, 0)]
    );
    assert_eq!(viterbi(&zero(1, 3, 3)).spans(), &[Span::new(0, 0, 0)]);
}

#[test]
fn span_marginals_match_enumeration() {
    let mut rng = rng(14);
    for _ in 0..60 {
        let m = rng.random_range(1..=5);
        let ny = rng.random_range(1..=3);
        let lmax = rng.random_range(1..=3);
        let lat = random_lattice(&mut rng, m, ny, lmax, 2.0);
        let mu = marginals(&lat);
        let want = brute_span_marginals(&lat);
        for a in 0..m {
            for len in 1..=lat.max_len_at(a) {
                for y in 0..ny {
                    let w = want.get(&(a, len, y)).copied().unwrap_or(0.0);
                    assert!((mu.span(a, len, y) - w).abs() < 1e-10);
                }
            }
        }
    }
}

#[test]
fn marginals_normalize() {
    let mut rng = rng(15);
    for _ in 0..100 {
        let m = rng.random_range(1..=25);
        let ny = rng.random_range(1..=5);
        let lmax = rng.random_range(1..=8);
        let lat = random_lattice(&mut rng, m, ny, lmax, 4.0);
        let mu = marginals(&lat);
        for i in 0..m {
            assert!(
                (mu.coverage(i) - 1.0).abs() <= 1e-10,
                "coverage {}",
                mu.coverage(i)
            );
            let post = mu.sentence_posterior(i);
            assert!((post.sum() - 1.0).abs() <= 1e-10);
        }
        assert!((mu.start.sum() - 1.0).abs() <= 1e-10);
    }
}

#[test]
fn path_probabilities_sum_to_one() {
    let mut rng = rng(16);
    for _ in 0..40 {
        let m = rng.random_range(1..=5);
        let ny = rng.random_range(1..=3);
        let lmax = rng.random_range(1..=3);
        let lat = random_lattice(&mut rng, m, ny, lmax, 2.0);
        let total: f64 = enumerate_paths(m, lmax, ny)
            .into_iter()
            .map(|p| {
                log_likelihood(&lat, &Segmentation::new(p).unwrap())
                    .unwrap()
                    .exp()
            })
            .sum();
        assert!((total - 1.0).abs() < 1e-10);
    }
}

#[test]
fn unit_lmax_reduces_to_linear_chain() {
    let mut rng = rng(17);
    for _ in 0..100 {
        let m = rng.random_range(1..=12);
        let ny = rng.random_range(1..=4);
        let lat = random_lattice(&mut rng, m, ny, 1, 3.0);
        let crf = LinearChainCrf::from_lattice(&lat);
        let want = crf.log_z();
        assert!((log_partition(&lat) - want).abs() <= 1e-10 * want.abs().max(1.0));
        assert_eq!(viterbi(&lat).flatten(), crf.viterbi());
    }
}

#[test]
fn lattice_matches_materialized_features() {
    let mut rng = rng(18);
    for variant in [SpanFeatureVariant::OursNoBiLSTM, SpanFeatureVariant::Simple] {
        for radius in [0, 1, 2] {
            let m = rng.random_range(1..=9);
            let params = random_params(&mut rng, 3, 4, variant, 5, radius, 1.0);
            let emb = random_embeddings(&mut rng, m, 4);
            let lat = build_lattice(&params, emb.view()).unwrap();
            for a in 0..m {
                for len in 1..=lat.max_len_at(a) {
                    for y in 0..3 {
                        let want = naive_span_score(&params, &emb, a, a + len - 1, y);
                        assert!((lat.phi(a, len, y) - want).abs() < 1e-10);
                    }
                }
            }
        }
    }
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = rng(19);
    for variant in [SpanFeatureVariant::OursNoBiLSTM, SpanFeatureVariant::Simple] {
        for _ in 0..5 {
            let m = rng.random_range(1..=7);
            let ny = rng.random_range(2..=3);
            let d = rng.random_range(1..=3);
            let lmax = rng.random_range(1..=4);
            let radius = rng.random_range(0..=1);
            let params = random_params(&mut rng, ny, d, variant, lmax, radius, 0.5);
            let emb = random_embeddings(&mut rng, m, d);
            let gold = random_gold(&mut rng, m, ny, lmax);
            let (_, g) = nll_and_gradient(&params, emb.view(), &gold).unwrap();
            let numeric = finite_difference(&params, 1e-5, |p| nll(p, emb.view(), &gold).unwrap());
            let analytic: Vec<f64> = g
                .weights
                .iter()
                .chain(g.bias.iter())
                .chain(g.transitions.iter())
                .chain(g.start.iter())
                .copied()
                .collect();
            for ((name, num), an) in numeric.iter().zip(&analytic) {
                assert!(rel_err(*an, *num) <= 1e-4, "{name}: {an} vs {num}");
            }
        }
    }
}

#[test]
fn label_permutation_invariance() {
    let mut rng = rng(20);
    for _ in 0..20 {
        let m = rng.random_range(1..=8);
        let params = random_params(&mut rng, 3, 2, SpanFeatureVariant::OursNoBiLSTM, 3, 0, 1.0);
        let emb = random_embeddings(&mut rng, m, 2);
        let perm = [2, 0, 1];
        let permuted = params.permuted(&perm).unwrap();
        let z = log_partition(&build_lattice(&params, emb.view()).unwrap());
        let zp = log_partition(&build_lattice(&permuted, emb.view()).unwrap());
        assert!((z - zp).abs() < 1e-10);
        let gold = random_gold(&mut rng, m, 3, 3);
        let moved = Segmentation::new(
            gold.spans()
                .iter()
                .map(|s| Span::new(s.a, s.b, perm[s.y]))
                .collect(),
        )
        .unwrap();
        let l = nll(&params, emb.view(), &gold).unwrap();
        let lp = nll(&permuted, emb.view(), &moved).unwrap();
        assert!((l - lp).abs() < 1e-10);
    }
}
