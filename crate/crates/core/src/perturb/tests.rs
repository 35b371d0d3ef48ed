use super::*;
use crate::graph::load_dataset;
use crate::graph::test_graphs::plain;
use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn erdos(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    plain(n, &edges)
}

/// One-hot predictions for the given classes.
fn onehot(classes: &[usize], c: usize) -> Array2<f64> {
    let mut y = Array2::zeros((classes.len(), c));
    for (i, &k) in classes.iter().enumerate() {
        y[[i, k]] = 1.0;
    }
    y
}

fn assert_symmetric_01(p: &Perturbation, g: &Graph) {
    let d = p.delta_matrix();
    assert!(d.is_symmetric(0.0));
    for i in 0..p.num_nodes {
        assert_eq!(d.get(i, i), 0.0);
    }
    for &(i, j) in &p.added {
        assert!(i < j && !g.has_edge(i, j));
    }
    for &(i, j) in &p.removed {
        assert!(i < j && g.has_edge(i, j));
    }
    let g2 = p.apply(g).unwrap();
    assert!(g2.adjacency().is_symmetric(0.0));
    for (_, _, v) in g2.adjacency().triplets() {
        assert_eq!(v, 1.0);
    }
}

#[test]
fn zero_gamma_is_empty() {
    let g = erdos(30, 0.2, 1);
    let y = onehot(&(0..30).map(|i| i % 3).collect::<Vec<_>>(), 3);
    let p = pp_perturb(&g, &y, 0.0, 5).unwrap();
    assert!(p.is_empty() && !p.exhausted);
    assert!(pp_perturb(&g, &y, -0.1, 5).is_err());
    assert!(pp_perturb(&g, &y, f64::NAN, 5).is_err());
}

#[test]
fn degree_four_node_adds_two() {
    // Star 0-{1..4}; the leaves share node 0's class and 5..15 are isolated.
    let edges: Vec<(usize, usize)> = (1..5).map(|j| (0, j)).collect();
    let g = plain(16, &edges);
    let classes: Vec<usize> = (0..16).map(|i| usize::from(i >= 5)).collect();
    let y = onehot(&classes, 2);
    for seed in 0..10 {
        let p = pp_perturb(&g, &y, 0.5, seed).unwrap();
        let at_zero = p.added.iter().filter(|&&(i, _)| i == 0).count();
        assert_eq!(at_zero, 2);
        // Each leaf's budget round(0.5) = 1.
        assert_eq!(p.added.len(), 2 + 4);
        assert!(!p.exhausted);
    }
}

#[test]
fn single_predicted_class_exhausts() {
    let g = erdos(20, 0.3, 2);
    let y = onehot(&[1; 20], 2);
    let p = pp_perturb(&g, &y, 1.0, 0).unwrap();
    assert!(p.is_empty() && p.exhausted);
}

#[test]
fn pp_is_deterministic() {
    let g = erdos(40, 0.1, 3);
    let y = onehot(&(0..40).map(|i| i % 2).collect::<Vec<_>>(), 2);
    assert_eq!(pp_perturb(&g, &y, 0.7, 9).unwrap(), pp_perturb(&g, &y, 0.7, 9).unwrap());
    assert_ne!(pp_perturb(&g, &y, 0.7, 9).unwrap(), pp_perturb(&g, &y, 0.7, 10).unwrap());
}

#[test]
fn edge_rand_limits() {
    let g = erdos(60, 0.1, 4);
    assert!(edge_rand(&g, f64::INFINITY, 1).unwrap().is_empty());
    assert!(edge_rand(&g, 60.0, 1).unwrap().is_empty());
    assert!(edge_rand(&g, 0.0, 1).is_err());
    assert!(edge_rand(&g, -1.0, 1).is_err());

    let g = erdos(200, 0.02, 5);
    let p = edge_rand(&g, 1e-9, 1).unwrap();
    let cells = 200.0 * 199.0 / 2.0;
    let density = p.apply(&g).unwrap().num_edges() as f64 / cells;
    assert!((density - 0.5).abs() < 0.02, "density {density}");
}

#[test]
fn edge_rand_flip_rate() {
    let n = 100;
    let cells = (n * (n - 1) / 2) as f64;
    let q = 1.0 / (1.0 + 1f64.exp());
    let seeds = 10;
    let mut flips = 0usize;
    for seed in 0..seeds {
        let g = erdos(n, 0.05, 100 + seed);
        let p = edge_rand(&g, 1.0, seed).unwrap();
        flips += p.added.len() + p.removed.len();
    }
    let trials = cells * seeds as f64;
    let rate = flips as f64 / trials;
    let sigma = (q * (1.0 - q) / trials).sqrt();
    assert!((rate - q).abs() <= 3.0 * sigma, "rate {rate} vs {q} (sigma {sigma})");
}

/// Pearson chi-square statistic of a 2x2 table.
fn chi_square_2x2(t: [[f64; 2]; 2]) -> f64 {
    let total: f64 = t.iter().flatten().sum();
    let rows = [t[0][0] + t[0][1], t[1][0] + t[1][1]];
    let cols = [t[0][0] + t[1][0], t[0][1] + t[1][1]];
    let mut chi = 0.0;
    for r in 0..2 {
        for c in 0..2 {
            let e = rows[r] * cols[c] / total;
            chi += (t[r][c] - e).powi(2) / e;
        }
    }
    chi
}

#[test]
fn edge_rand_flips_are_independent() {
    // Cells: two edges and two non-edges of a 5-node path.
    let g = plain(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]);
    let cells = [(0, 1), (2, 3), (0, 2), (1, 4)];
    let flipped = |p: &Perturbation, c: (usize, usize)| p.added.contains(&c) || p.removed.contains(&c);
    let runs: Vec<Perturbation> = (0..4000).map(|s| edge_rand(&g, 0.5, s).unwrap()).collect();
    // 1% critical value of chi-square with one degree of freedom.
    const CRIT: f64 = 6.635;
    for a in 0..cells.len() {
        for b in a + 1..cells.len() {
            let mut t = [[0.0; 2]; 2];
            for p in &runs {
                t[usize::from(flipped(p, cells[a]))][usize::from(flipped(p, cells[b]))] += 1.0;
            }
            let chi = chi_square_2x2(t);
            assert!(chi < CRIT, "cells {:?} {:?}: chi2 = {chi}", cells[a], cells[b]);
        }
    }
}

#[test]
fn laplace_sampler_moments() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let b = 2.0;
    let xs: Vec<f64> = (0..200_000).map(|_| laplace(&mut rng, b)).collect();
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let mad = xs.iter().map(|x| x.abs()).sum::<f64>() / xs.len() as f64;
    // Var = 2b², so the standard error of the mean is b·sqrt(2/N).
    assert!(mean.abs() < 4.0 * b * (2.0 / xs.len() as f64).sqrt());
    assert!((mad - b).abs() < 0.02 * b);
    assert!((laplace_isf(0.5, b)).abs() < 1e-15);
    assert!((laplace_isf(0.25, b) + laplace_isf(0.75, b)).abs() < 1e-12);
}

#[test]
fn lap_graph_count_and_limits() {
    let g = erdos(50, 0.1, 6);
    for seed in 0..10 {
        let p = lap_graph(&g, 1.0, seed).unwrap();
        let e_hat = p.noisy_edge_count.unwrap();
        assert_eq!(p.apply(&g).unwrap().num_edges(), e_hat);
        assert_symmetric_01(&p, &g);
    }
    let p = lap_graph(&g, 1e7, 3).unwrap();
    assert!(p.is_empty(), "{} added, {} removed", p.added.len(), p.removed.len());
    assert!(lap_graph(&g, 0.0, 3).is_err());
    let empty = plain(10, &[]);
    let p = lap_graph(&empty, 1.0, 0).unwrap();
    assert_eq!(p.apply(&empty).unwrap().num_edges(), p.noisy_edge_count.unwrap());
}

#[test]
fn lap_graph_overlap_is_partial() {
    let g = erdos(200, 0.03, 7);
    for seed in 0..10 {
        let p = lap_graph(&g, 1.0, seed).unwrap();
        let kept = g.num_edges() - p.removed.len();
        let union = g.num_edges() + p.added.len();
        let jaccard = kept as f64 / union as f64;
        assert!(jaccard > 0.0 && jaccard < 1.0, "seed {seed}: {jaccard}");
    }
}

/// Materialized LapGraph: noise on every cell, then the top `Ê`.
fn lap_graph_dense(g: &Graph, eps: f64, rng: &mut ChaCha8Rng) -> usize {
    let n = g.num_nodes();
    let b_count = 1.0 / (LAPGRAPH_COUNT_SHARE * eps);
    let b_cell = 1.0 / ((1.0 - LAPGRAPH_COUNT_SHARE) * eps);
    let total = n * (n - 1) / 2;
    let e_hat = (g.num_edges() as f64 + laplace(rng, b_count)).round().clamp(0.0, total as f64) as usize;
    let mut cells: Vec<(f64, bool)> = Vec::with_capacity(total);
    for i in 0..n {
        for j in i + 1..n {
            let a = if g.has_edge(i, j) { 1.0 } else { 0.0 };
            cells.push((a + laplace(rng, b_cell), a == 1.0));
        }
    }
    cells.sort_by(|x, y| y.0.total_cmp(&x.0));
    cells[..e_hat].iter().filter(|c| c.1).count()
}

#[test]
fn lazy_lap_graph_matches_dense_reference() {
    // Large eps on the count keeps Ê near |E| so the comparison isolates
    // the cell selection. Compare mean retained original edges.
    let g = erdos(40, 0.1, 8);
    let eps = 3.0;
    let runs = 400;
    let lazy: Vec<f64> = (0..runs)
        .map(|s| (g.num_edges() - lap_graph(&g, eps, s).unwrap().removed.len()) as f64)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let dense: Vec<f64> = (0..runs).map(|_| lap_graph_dense(&g, eps, &mut rng) as f64).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let var = |v: &[f64]| {
        let m = mean(v);
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
    };
    let se = ((var(&lazy) + var(&dense)) / runs as f64).sqrt();
    assert!(
        (mean(&lazy) - mean(&dense)).abs() < 4.0 * se,
        "lazy {} dense {} se {se}",
        mean(&lazy),
        mean(&dense)
    );
}

#[test]
fn sidecar_and_dataset_round_trip() {
    let mut p = crate::graph::SbmParams::new(30, 0.3, 0.05, 2);
    p.feature_dim = 4;
    let g = crate::graph::generate_sbm(&p, 1).unwrap();
    let pert = edge_rand(&g, 1.0, 3).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    save_perturbed(&g, &pert, tmp.path()).unwrap();
    let back = load_dataset(tmp.path()).unwrap();
    assert_eq!(back.edges(), pert.perturbed_edges(&g).unwrap());
    let text = std::fs::read_to_string(tmp.path().join("perturbation.json")).unwrap();
    let side: Sidecar = serde_json::from_str(&text).unwrap();
    assert_eq!(side, pert.sidecar());
    assert!(text.contains("\"edge_rand\"") && text.contains("\"eps\""));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pp_respects_classes_and_existing_edges(
        n in 5usize..40,
        dens in 0.0f64..0.4,
        gamma in 0.0f64..2.0,
        seed in 0u64..1000,
    ) {
        let g = erdos(n, dens, seed);
        let classes: Vec<usize> = (0..n).map(|i| (i * 7 + seed as usize) % 3).collect();
        let y = onehot(&classes, 3);
        let p = pp_perturb(&g, &y, gamma, seed).unwrap();
        for &(i, j) in &p.added {
            prop_assert!(classes[i] != classes[j]);
        }
        prop_assert!(p.removed.is_empty());
        assert_symmetric_01(&p, &g);
    }

    #[test]
    fn dp_mechanisms_stay_symmetric_01(n in 2usize..40, dens in 0.0f64..0.5, eps in 0.1f64..5.0, seed in 0u64..1000) {
        let g = erdos(n, dens, seed);
        assert_symmetric_01(&edge_rand(&g, eps, seed).unwrap(), &g);
        assert_symmetric_01(&lap_graph(&g, eps, seed).unwrap(), &g);
    }
}
