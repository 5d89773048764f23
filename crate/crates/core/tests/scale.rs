//! Scale smoke tests for the persistence engine. Ignored by default;
//! run with `cargo test --release --test scale -- --ignored --nocapture`.

use std::time::Instant;

use distop::filtration::rips_filtration;
use distop::geometry::{pairwise_distances, shapes};
use distop::persistence::compute_persistence_up_to;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
#[ignore]
fn rips_500_two_skeleton_reduction() {
    for (name, cloud) in [
        ("circle", shapes::circle::<f64>(500, 1.0)),
        ("disc", shapes::disc_uniform::<f64>(500, 1.0, &mut ChaCha8Rng::seed_from_u64(7))),
        (
            "noisy-circle",
            shapes::noisy_circle::<f64>(450, 50, 1.0, &mut ChaCha8Rng::seed_from_u64(8)),
        ),
    ] {
        let t0 = Instant::now();
        let d = pairwise_distances(&cloud);
        let k = rips_filtration(&d, 2).unwrap();
        let built = t0.elapsed();
        let t1 = Instant::now();
        let (dg, _) = compute_persistence_up_to(&k, 1).unwrap();
        println!(
            "{name}: {} simplices, build {:.1}s, reduce {:.1}s, |H0|={}, |H1|={}",
            k.len(),
            built.as_secs_f64(),
            t1.elapsed().as_secs_f64(),
            dg.points(0).len(),
            dg.points(1).len()
        );
    }
}
