use dmclusts::dmf::{concat_views, dmf_fit};
use dmclusts::seminmf::seminmf_fit;
use dmclusts::{MultiViewDataset, SolverConfig};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn signed(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.random::<f64>() * 2.0 - 1.0)
}

#[test]
fn one_layer_is_semi_nmf_of_the_stacked_views() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let ds = MultiViewDataset::from_views(vec![signed(4, 30, &mut rng), signed(5, 30, &mut rng)]).unwrap();
    let mut cfg = SolverConfig::new(vec![3], 3);
    cfg.seed = 17;
    let dmf = dmf_fit(&ds, &cfg).unwrap();
    let direct = seminmf_fit(concat_views(&ds).view(), 3, cfg.max_iter, cfg.tol, cfg.seed).unwrap();
    assert_eq!(dmf.z, vec![direct.z]);
    assert_eq!(dmf.h, vec![direct.h]);
    assert_eq!(dmf.history, direct.history);
}

#[test]
fn exact_low_rank_data_is_reconstructed() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut h = Array2::<f64>::zeros((2, 50));
    for j in 0..50 {
        h[[j % 2, j]] = 1.0 + rng.random::<f64>();
    }
    let ds =
        MultiViewDataset::from_views(vec![signed(3, 2, &mut rng).dot(&h), signed(4, 2, &mut rng).dot(&h)]).unwrap();
    let mut cfg = SolverConfig::new(vec![2, 2], 2);
    cfg.max_iter = 300;
    let fit = dmf_fit(&ds, &cfg).unwrap();
    let scale: f64 = concat_views(&ds).iter().map(|x| x * x).sum();
    let last = *fit.history.last().unwrap();
    assert!(last <= 1e-6 * scale, "{last} vs {scale}");
}

#[test]
fn residual_never_increases_and_h_stays_nonnegative() {
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ds = MultiViewDataset::from_views(vec![signed(8, 60, &mut rng), signed(6, 60, &mut rng)]).unwrap();
        for pretrain in [true, false] {
            let mut cfg = SolverConfig::new(vec![5, 4, 3], 3);
            cfg.seed = seed;
            cfg.pretrain = pretrain;
            cfg.max_iter = 40;
            let fit = dmf_fit(&ds, &cfg).unwrap();
            for w in fit.history.windows(2) {
                assert!(w[1] <= w[0] + 1e-8, "seed {seed}: {:?}", fit.history);
            }
            for h in &fit.h {
                assert!(h.iter().all(|&x| x >= 0.0));
            }
            let again = dmf_fit(&ds, &cfg).unwrap();
            assert_eq!(again.h, fit.h);
            assert_eq!(again.history, fit.history);
        }
    }
}
