use std::collections::BTreeMap;

use histbias::embed::{EmbeddingModel, Vocab};
use histbias::weat::{
    bundled_tests, effect_size, effect_size_from_scores, exact_pvalue_from_scores, permutation_pvalue_from_scores,
    run_test, target_scores, weat_statistic, weat_temporal, write_csv, WeatOptions, WeatTest, WordSet,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn model(rows: &[(String, Vec<f64>)]) -> EmbeddingModel<f64> {
    let dim = rows[0].1.len();
    let vocab = Vocab::from_ordered(rows.iter().map(|(w, _)| (w.clone(), 1)).collect()).unwrap();
    let matrix = rows.iter().flat_map(|(_, v)| v.iter().copied()).collect();
    EmbeddingModel::new(vocab, matrix, dim, 1, 0).unwrap()
}

fn set(name: &str, words: &[&str]) -> WordSet {
    WordSet::new(name, words).unwrap()
}

fn test_of(x: &[&str], y: &[&str], a: &[&str], b: &[&str]) -> WeatTest {
    WeatTest {
        x: set("x", x),
        y: set("y", y),
        a: set("a", a),
        b: set("b", b),
    }
}

fn hand_model() -> (EmbeddingModel<f64>, WeatTest) {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let rows: Vec<(String, Vec<f64>)> = [
        ("a1", [1.0, 0.0]),
        ("a2", [0.0, 1.0]),
        ("b1", [-1.0, 0.0]),
        ("b2", [0.0, -1.0]),
        ("x1", [1.0, 0.0]),
        ("x2", [r, r]),
        ("y1", [-1.0, 0.0]),
        ("y2", [0.0, -1.0]),
    ]
    .iter()
    .map(|(w, v)| (w.to_string(), v.to_vec()))
    .collect();
    (model(&rows), test_of(&["x1", "x2"], &["y1", "y2"], &["a1", "a2"], &["b1", "b2"]))
}

#[test]
fn hand_computed_two_dimensional_case() {
    let (m, t) = hand_model();
    let (sx, sy) = target_scores(&t.x, &t.y, &t.a, &t.b, &m).unwrap();
    let root2 = 2f64.sqrt();
    approx::assert_abs_diff_eq!(sx[0], 1.0, epsilon = 1e-15);
    approx::assert_abs_diff_eq!(sx[1], root2, epsilon = 1e-15);
    approx::assert_abs_diff_eq!(sy[0], -1.0, epsilon = 1e-15);
    approx::assert_abs_diff_eq!(sy[1], -1.0, epsilon = 1e-15);
    let s = weat_statistic(&t.x, &t.y, &t.a, &t.b, &m).unwrap();
    approx::assert_abs_diff_eq!(s, 3.0 + root2, epsilon = 1e-14);
    // pooled scores {1, √2, -1, -1}
    let mu = (1.0 + root2 - 2.0) / 4.0;
    let var = ((1.0 - mu).powi(2) + (root2 - mu).powi(2) + 2.0 * (-1.0 - mu).powi(2)) / 4.0;
    let d = ((1.0 + root2) / 2.0 + 1.0) / var.sqrt();
    approx::assert_abs_diff_eq!(effect_size(&t.x, &t.y, &t.a, &t.b, &m).unwrap(), d, epsilon = 1e-14);
    // observed split is the largest of the six
    approx::assert_abs_diff_eq!(exact_pvalue_from_scores(&sx, &sy).unwrap(), 1.0 / 6.0, epsilon = 1e-15);
    let r = run_test(&t, &m, &WeatOptions::default()).unwrap();
    approx::assert_abs_diff_eq!(r.p_value, 1.0 / 6.0, epsilon = 1e-15);
}

fn random_rows(rng: &mut ChaCha8Rng, names: &[String], dim: usize) -> Vec<(String, Vec<f64>)> {
    names
        .iter()
        .map(|n| (n.clone(), (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()))
        .collect()
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

fn refs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

/// Plain loops over the raw rows, sharing nothing with the library.
fn oracle(rows: &BTreeMap<String, Vec<f64>>, x: &[String], y: &[String], a: &[String], b: &[String]) -> (f64, f64) {
    let cos = |u: &[f64], v: &[f64]| {
        let mut uv = 0.0;
        let mut uu = 0.0;
        let mut vv = 0.0;
        for k in 0..u.len() {
            uv += u[k] * v[k];
            uu += u[k] * u[k];
            vv += v[k] * v[k];
        }
        uv / (uu.sqrt() * vv.sqrt())
    };
    let s = |w: &String| {
        let ma: f64 = a.iter().map(|t| cos(&rows[w], &rows[t])).sum::<f64>() / a.len() as f64;
        let mb: f64 = b.iter().map(|t| cos(&rows[w], &rows[t])).sum::<f64>() / b.len() as f64;
        ma - mb
    };
    let sx: Vec<f64> = x.iter().map(s).collect();
    let sy: Vec<f64> = y.iter().map(s).collect();
    let stat = sx.iter().sum::<f64>() - sy.iter().sum::<f64>();
    let all: Vec<f64> = sx.iter().chain(&sy).copied().collect();
    let mu = all.iter().sum::<f64>() / all.len() as f64;
    let sd = (all.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / all.len() as f64).sqrt();
    let d = (sx.iter().sum::<f64>() / sx.len() as f64 - sy.iter().sum::<f64>() / sy.len() as f64) / sd;
    (stat, d)
}

#[test]
fn random_ten_dimensional_models_match_recomputation() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..50 {
        let (nx, ny, na, nb) = (rng.gen_range(2..8), rng.gen_range(2..8), rng.gen_range(1..6), rng.gen_range(1..6));
        let (x, y, a, b) = (names("x", nx), names("y", ny), names("a", na), names("b", nb));
        let all: Vec<String> = [&x, &y, &a, &b].into_iter().flatten().cloned().collect();
        let rows = random_rows(&mut rng, &all, 10);
        let m = model(&rows);
        let lookup: BTreeMap<String, Vec<f64>> = rows.into_iter().collect();
        let (want_s, want_d) = oracle(&lookup, &x, &y, &a, &b);
        let t = test_of(&refs(&x), &refs(&y), &refs(&a), &refs(&b));
        let s = weat_statistic(&t.x, &t.y, &t.a, &t.b, &m).unwrap();
        let d = effect_size(&t.x, &t.y, &t.a, &t.b, &m).unwrap();
        assert!((s - want_s).abs() <= 1e-12, "{s} vs {want_s}");
        assert!((d - want_d).abs() <= 1e-12, "{d} vs {want_d}");
    }
}

fn instance(seed: u64, nx: usize, ny: usize, dim: usize) -> (EmbeddingModel<f64>, WeatTest) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (x, y, a, b) = (names("x", nx), names("y", ny), names("a", 3), names("b", 3));
    let all: Vec<String> = [&x, &y, &a, &b].into_iter().flatten().cloned().collect();
    let m = model(&random_rows(&mut rng, &all, dim));
    (m, test_of(&refs(&x), &refs(&y), &refs(&a), &refs(&b)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn swapping_roles_negates(seed in any::<u64>(), nx in 2usize..7, ny in 2usize..7) {
        let (m, t) = instance(seed, nx, ny, 6);
        let s = weat_statistic(&t.x, &t.y, &t.a, &t.b, &m).unwrap();
        let d = effect_size(&t.x, &t.y, &t.a, &t.b, &m).unwrap();
        let s_xy = weat_statistic(&t.y, &t.x, &t.a, &t.b, &m).unwrap();
        let d_xy = effect_size(&t.y, &t.x, &t.a, &t.b, &m).unwrap();
        let s_ab = weat_statistic(&t.x, &t.y, &t.b, &t.a, &m).unwrap();
        let d_ab = effect_size(&t.x, &t.y, &t.b, &t.a, &m).unwrap();
        prop_assert!((s + s_xy).abs() < 1e-12);
        prop_assert!((d + d_xy).abs() < 1e-12);
        prop_assert!((s + s_ab).abs() < 1e-12);
        prop_assert!((d + d_ab).abs() < 1e-12);
    }

    #[test]
    fn invariant_to_uniform_scaling(seed in any::<u64>(), c in 1e-3f64..1e3) {
        let (m, t) = instance(seed, 4, 5, 6);
        let scaled = m.scaled(c).unwrap();
        let s = weat_statistic(&t.x, &t.y, &t.a, &t.b, &m).unwrap();
        let s2 = weat_statistic(&t.x, &t.y, &t.a, &t.b, &scaled).unwrap();
        let d = effect_size(&t.x, &t.y, &t.a, &t.b, &m).unwrap();
        let d2 = effect_size(&t.x, &t.y, &t.a, &t.b, &scaled).unwrap();
        prop_assert!((s - s2).abs() < 1e-12);
        prop_assert!((d - d2).abs() < 1e-10);
    }

    #[test]
    fn effect_size_bounded_by_group_balance(sx in prop::collection::vec(-2.0f64..2.0, 1..12), sy in prop::collection::vec(-2.0f64..2.0, 1..12)) {
        if let Ok(d) = effect_size_from_scores(&sx, &sy) {
            let p = sx.len() as f64 / (sx.len() + sy.len()) as f64;
            prop_assert!(d.abs() <= 1.0 / (p * (1.0 - p)).sqrt() + 1e-9);
            if sx.len() == sy.len() {
                prop_assert!(d.abs() <= 2.0 + 1e-9);
            }
        }
    }
}

#[test]
fn equal_sizes_reach_the_bound_of_two() {
    let d = effect_size_from_scores(&[1.0, 1.0, 1.0], &[-1.0, -1.0, -1.0]).unwrap();
    approx::assert_abs_diff_eq!(d, 2.0, epsilon = 1e-15);
    assert!(effect_size_from_scores(&[0.5, 0.5], &[0.5, 0.5]).is_err());
}

#[test]
fn monte_carlo_agrees_with_enumeration_at_six_targets() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for k in 0..10 {
        let sx: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let sy: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let exact = exact_pvalue_from_scores(&sx, &sy).unwrap();
        let n = 20_000;
        let mc = permutation_pvalue_from_scores(&sx, &sy, n, k).unwrap();
        let se = (exact * (1.0 - exact) / n as f64).sqrt().max(1.0 / n as f64);
        assert!((mc - exact).abs() <= 3.0 * se + 1.0 / n as f64, "case {k}: mc {mc} exact {exact}");
        // twenty splits: exact p is a multiple of 1/20
        assert!(((exact * 20.0).round() - exact * 20.0).abs() < 1e-9);
    }
}

#[test]
fn planted_separation_is_significant() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let dim = 8;
    let axis: Vec<f64> = (0..dim).map(|k| if k == 0 { 1.0 } else { 0.0 }).collect();
    let near = |sign: f64, rng: &mut ChaCha8Rng| -> Vec<f64> {
        axis.iter().map(|v| sign * v * 3.0 + rng.gen_range(-0.5..0.5)).collect()
    };
    let mut rows = Vec::new();
    for (prefix, sign, n) in [("x", 1.0, 8), ("y", -1.0, 8), ("a", 1.0, 4), ("b", -1.0, 4)] {
        for i in 0..n {
            rows.push((format!("{prefix}{i}"), near(sign, &mut rng)));
        }
    }
    let m = model(&rows);
    let t = test_of(&refs(&names("x", 8)), &refs(&names("y", 8)), &refs(&names("a", 4)), &refs(&names("b", 4)));
    let r = run_test(&t, &m, &WeatOptions::default()).unwrap();
    assert!(r.p_value <= 0.01, "{r:?}");
    assert!(r.effect_size_d > 1.5);
}

#[test]
fn oov_words_are_dropped_and_reported() {
    let (m, _) = hand_model();
    let t = test_of(&["x1", "x2"], &["y1", "y2"], &["a1", "a2", "ghost"], &["b1", "b2"]);
    let r = run_test(&t, &m, &WeatOptions::default()).unwrap();
    assert_eq!(r.dropped_words.a, vec!["ghost"]);
    approx::assert_abs_diff_eq!(r.s_statistic, 3.0 + 2f64.sqrt(), epsilon = 1e-14);
    let t = test_of(&["x1", "x2"], &["y1", "y2"], &["a1", "ghost", "spirit"], &["b1", "b2"]);
    assert!(run_test(&t, &m, &WeatOptions::default()).is_err());
}

#[test]
fn temporal_table_over_bundled_tests() {
    let tests = bundled_tests().unwrap();
    assert_eq!(tests.len(), 18);
    let mut words: Vec<String> = tests
        .iter()
        .flat_map(|t| [&t.x, &t.y, &t.a, &t.b])
        .flat_map(|s| s.words.iter().cloned())
        .collect();
    words.sort();
    words.dedup();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let m = model(&random_rows(&mut rng, &words, 12));
    let mut models = BTreeMap::new();
    models.insert("early".to_string(), Some(m.clone()));
    models.insert("gap".to_string(), None);
    models.insert("late".to_string(), Some(m));
    let opts = WeatOptions {
        n_perm: 500,
        ..WeatOptions::default()
    };
    let rows = weat_temporal(&models, &tests, &opts);
    assert_eq!(rows.len(), 54);
    let by_period = |p: &str| rows.iter().filter(|r| r.period == p).collect::<Vec<_>>();
    assert!(by_period("gap").iter().all(|r| r.outcome.is_err()));
    for (e, l) in by_period("early").iter().zip(by_period("late")) {
        assert_eq!(e.outcome, l.outcome);
        assert!(e.outcome.is_ok());
    }
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 55);
    let gap_line = text.lines().find(|l| l.starts_with("gap,")).unwrap();
    assert!(gap_line.contains(",,,"), "{gap_line}");
}
