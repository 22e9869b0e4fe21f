use critgraph::oracle::{
    components_of, enumerate_exact, explore_on_graph, parse_probability, sample_explicit,
    ExplicitGraph, UnionFind,
};
use critgraph::stats::{empirical_pmf, total_variation};
use critgraph::{sweep_components, GraphParams, RngStream};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;

fn frac(a: i64, b: i64) -> BigRational {
    BigRational::new(a.into(), b.into())
}

#[test]
fn three_vertex_distributions_are_exact() {
    let (cv, c1) = enumerate_exact(3, &frac(1, 3)).unwrap();
    assert_eq!(cv.probs, vec![frac(4, 9), frac(8, 27), frac(7, 27)]);
    assert_eq!(c1.probs, vec![frac(8, 27), frac(12, 27), frac(7, 27)]);
    let (_, c1) = enumerate_exact(2, &BigRational::one()).unwrap();
    assert_eq!(c1.probs, vec![BigRational::zero(), BigRational::one()]);
}

#[test]
fn exact_distributions_sum_to_one() {
    for n in 1..=6 {
        for p in ["1/3", "0.3", "1/7", "1"] {
            let (cv, c1) = enumerate_exact(n, &parse_probability(p).unwrap()).unwrap();
            assert!(
                cv.total().is_one() && c1.total().is_one(),
                "n = {n}, p = {p}"
            );
        }
    }
}

/// Brute force over all graphs on four vertices with a hand-rolled
/// component count, independent of the library's enumeration.
#[test]
fn four_vertex_enumeration_matches_brute_force() {
    let p = frac(1, 4);
    let q = BigRational::one() - &p;
    let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    let mut cv = vec![BigRational::zero(); 4];
    let mut c1 = vec![BigRational::zero(); 4];
    for mask in 0u32..64 {
        let mut label = [0usize, 1, 2, 3];
        // relabel until stable
        for _ in 0..4 {
            for (bit, &(a, b)) in pairs.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    let m = label[a].min(label[b]);
                    let (la, lb) = (label[a], label[b]);
                    for l in label.iter_mut() {
                        if *l == la || *l == lb {
                            *l = m;
                        }
                    }
                }
            }
        }
        let size = |v: usize| label.iter().filter(|&&l| l == label[v]).count();
        let k = mask.count_ones() as i32;
        let w =
            num_traits::pow(p.clone(), k as usize) * num_traits::pow(q.clone(), (6 - k) as usize);
        cv[size(0) - 1] += &w;
        c1[(0..4).map(size).max().unwrap() - 1] += &w;
    }
    let (ecv, ec1) = enumerate_exact(4, &p).unwrap();
    assert_eq!(ecv.probs, cv);
    assert_eq!(ec1.probs, c1);
}

#[test]
fn explicit_edge_count_mean() {
    let params = GraphParams::critical(1000).unwrap();
    let m = 10_000u64;
    let counts: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|i| {
            sample_explicit(&params, &mut RngStream::new(3, i))
                .unwrap()
                .edges()
                .len() as f64
        })
        .collect();
    let mean = counts.iter().sum::<f64>() / m as f64;
    let pairs = 499_500.0;
    let se = (pairs * 0.001 * 0.999 / m as f64).sqrt();
    assert!((mean - 499.5).abs() <= 3.0 * se, "mean {mean}");
}

#[test]
fn explicit_extremes() {
    let mut rng = RngStream::new(4, 0);
    assert!(
        sample_explicit(&GraphParams::new(50, 0.0).unwrap(), &mut rng)
            .unwrap()
            .edges()
            .is_empty()
    );
    let full = sample_explicit(&GraphParams::new(4, 1.0).unwrap(), &mut rng).unwrap();
    assert_eq!(full.edges().len(), 6);
}

#[test]
fn hand_checkable_components() {
    let empty = ExplicitGraph::new(5, vec![]).unwrap();
    assert_eq!(components_of(&empty).sizes, vec![1; 5]);
    let path = ExplicitGraph::new(4, vec![(0, 1), (1, 2)]).unwrap();
    let mut sizes = components_of(&path).sizes;
    sizes.sort_unstable();
    assert_eq!(sizes, vec![1, 3]);
    assert_eq!(explore_on_graph(&path, 3).unwrap(), (1, vec![0]));
    let triangle = ExplicitGraph::new(4, vec![(0, 1), (1, 2), (0, 2)]).unwrap();
    let (size, trace) = explore_on_graph(&triangle, 1).unwrap();
    assert_eq!(size, 3);
    assert_eq!(trace.len(), 3);
}

#[test]
fn graph_exploration_agrees_with_union_find() {
    let params = GraphParams::new(50, 0.02).unwrap();
    let mismatches: u64 = (0..10_000u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(5, i);
            let g = sample_explicit(&params, &mut rng).unwrap();
            let mut uf = UnionFind::new(50);
            for &(a, b) in g.edges() {
                uf.union(a as usize, b as usize);
            }
            (0..50)
                .filter(|&v| explore_on_graph(&g, v).unwrap().0 != uf.size_of(v as usize) as u64)
                .count() as u64
        })
        .sum();
    assert_eq!(mismatches, 0);
}

#[test]
fn explicit_and_process_largest_agree() {
    let params = GraphParams::new(100, 0.01).unwrap();
    let m = 100_000u64;
    let explicit: Vec<u64> = (0..m)
        .into_par_iter()
        .map(|i| {
            components_of(&sample_explicit(&params, &mut RngStream::new(6, i)).unwrap()).largest - 1
        })
        .collect();
    let process: Vec<u64> = (0..m)
        .into_par_iter()
        .map(|i| {
            sweep_components(&params, &mut RngStream::new(7, i))
                .unwrap()
                .largest
                - 1
        })
        .collect();
    let tv = total_variation(
        &empirical_pmf(&explicit, 100),
        &empirical_pmf(&process, 100),
    );
    assert!(tv <= 0.02, "TV {tv}");
}

#[test]
fn text_format_round_trip() {
    let g = ExplicitGraph::new(6, vec![(0, 5), (2, 3), (1, 4)]).unwrap();
    let back: ExplicitGraph = g.to_string().parse().unwrap();
    assert_eq!(back, g);
    assert!("3 1\n0 3\n".parse::<ExplicitGraph>().is_err());
}
