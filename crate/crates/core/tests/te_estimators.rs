use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use teggcn::te::{kdtree::chebyshev, te_ksg, te_plugin, KdTree, SeriesPair, TeConfig};

fn bits(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { 0.0 }).collect()
}

fn normals(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// x_{t+1} = y_t with y iid fair bits.
fn copy_chain(n: usize, seed: u64) -> SeriesPair<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y = bits(n, &mut rng);
    let mut x = vec![0.0];
    x.extend_from_slice(&y[..n - 1]);
    SeriesPair::new(x, y).unwrap()
}

fn brute_count(points: &[f64], dim: usize, center: &[f64], radius: f64, skip: Option<usize>) -> usize {
    points
        .chunks(dim)
        .enumerate()
        .filter(|&(i, p)| Some(i) != skip && chebyshev(p, center) < radius)
        .count()
}

#[test]
fn kdtree_matches_brute_force_on_random_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for dim in 1..=4 {
        let n = 100;
        let pts: Vec<f64> = (0..n * dim).map(|_| rng.random::<f64>()).collect();
        let tree = KdTree::new(&pts, dim);
        for _ in 0..50 {
            let q: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
            let r = rng.random::<f64>() * 0.6;
            assert_eq!(tree.range_count(&q, r), brute_count(&pts, dim, &q, r, None));
            let i = rng.random_range(0..n);
            assert_eq!(
                tree.range_count_excluding(i, r),
                brute_count(&pts, dim, &pts[i * dim..(i + 1) * dim], r, Some(i))
            );
        }
    }
}

#[test]
fn kdtree_kth_neighbor_matches_sorting() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let dim = 3;
    let n = 200;
    // coarse grid values create many ties
    let pts: Vec<f64> = (0..n * dim).map(|_| rng.random_range(0..6) as f64).collect();
    let tree = KdTree::new(&pts, dim);
    for i in (0..n).step_by(7) {
        let me = &pts[i * dim..(i + 1) * dim];
        let mut d: Vec<f64> = (0..n)
            .filter(|&j| j != i)
            .map(|j| chebyshev(&pts[j * dim..(j + 1) * dim], me))
            .collect();
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for k in [1, 3, 10] {
            assert_eq!(tree.kth_neighbor_distance(i, k), d[k - 1]);
        }
    }
}

#[test]
fn ksg_agrees_with_plugin_on_copy_chain() {
    let pair = copy_chain(10_000, 21);
    let cfg = TeConfig::default();
    let plugin = te_plugin(&pair, &cfg, 2).unwrap();
    let ksg = te_ksg(&pair, &cfg).unwrap();
    assert!((plugin - std::f64::consts::LN_2).abs() < 0.02, "plugin {plugin}");
    assert!((ksg - plugin).abs() < 0.1, "ksg {ksg} plugin {plugin}");
}

#[test]
fn te_is_asymmetric_on_copy_chain() {
    let pair = copy_chain(10_000, 22);
    let reversed = SeriesPair::new(pair.y.clone(), pair.x.clone()).unwrap();
    let cfg = TeConfig::default();
    let forward = te_ksg(&pair, &cfg).unwrap();
    let backward = te_ksg(&reversed, &cfg).unwrap();
    assert!(backward < 0.05, "{backward}");
    assert!(forward > 10.0 * backward.max(0.01));
    assert!(te_plugin(&reversed, &cfg, 2).unwrap() < 0.05);
}

#[test]
fn ksg_independent_gaussians_average_to_zero() {
    let cfg = TeConfig::default();
    let mut total = 0.0;
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let pair = SeriesPair::new(normals(2000, &mut rng), normals(2000, &mut rng)).unwrap();
        total += te_ksg(&pair, &TeConfig { seed, ..cfg }).unwrap();
    }
    let mean = total / 10.0;
    assert!(mean.abs() < 0.05, "{mean}");
}

#[test]
fn ksg_recovers_gaussian_linear_coupling() {
    // x_{t+1} = 0.5 y_t + 0.5 e_t: corr(x_{t+1}, y_t) = 0.5 / sqrt(0.5), x_t independent
    let n = 2000;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let y = normals(n, &mut rng);
    let e = normals(n, &mut rng);
    let mut x = vec![0.0; n];
    x[0] = rng.sample(StandardNormal);
    for t in 0..n - 1 {
        x[t + 1] = 0.5 * y[t] + 0.5 * e[t];
    }
    let rho2: f64 = 0.25 / 0.5;
    let analytic = -0.5 * (1.0 - rho2).ln();
    let te = te_ksg(&SeriesPair::new(x, y).unwrap(), &TeConfig::default()).unwrap();
    assert!((te - analytic).abs() < 0.1, "te {te} analytic {analytic}");
}

#[test]
fn plugin_is_never_negative() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let n = rng.random_range(20..300);
        let pair = SeriesPair::new(normals(n, &mut rng), normals(n, &mut rng)).unwrap();
        for bins in [2, 3, 5] {
            assert!(te_plugin(&pair, &TeConfig::default(), bins).unwrap() >= -1e-12);
        }
    }
}

#[test]
fn plugin_on_shifted_copy_approaches_entropy_rate() {
    // x is an iid 4-symbol process; y_t = x_{t+1}, so TE(Y→X) = H(X) = ln 4
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 40_000;
    let x: Vec<f64> = (0..n).map(|_| rng.random_range(0..4) as f64).collect();
    let mut y = x[1..].to_vec();
    y.push(0.0);
    let te = te_plugin(&SeriesPair::new(x, y).unwrap(), &TeConfig::default(), 4).unwrap();
    assert!((te - 4f64.ln()).abs() < 0.01, "{te}");
}
