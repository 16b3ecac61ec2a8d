use criterion::{criterion_group, criterion_main, Criterion};
use spatcon_core::geom::Window;
use spatcon_core::mac::aloha;
use spatcon_core::outage::{estimate_success, EstimateConfig, LinkSpec, PalmPolicy, PathLossModel};
use spatcon_core::pointprocess::gen_ppp;
use spatcon_core::rng::derive_seed;

fn bench_estimator(c: &mut Criterion) {
    let pl = PathLossModel::Singular { alpha: 4.0 };
    let link = LinkSpec::new(2.0).unwrap();

    let mut g = c.benchmark_group("estimate_success ppp+aloha eta=0.1");
    g.sample_size(10);
    for (label, palm) in [
        ("fixed-center", PalmPolicy::FixedCenter),
        ("all-points", PalmPolicy::AllPoints),
    ] {
        g.bench_function(label, |b| {
            let w = Window::square(64.0).unwrap();
            let gen = move |rep: u64| {
                let pat = gen_ppp(1.0, &w, derive_seed(3, &[1, rep]))?;
                aloha(&pat, 0.1, derive_seed(3, &[2, rep]))
            };
            let cfg = EstimateConfig::new(2000, 5).palm(palm);
            b.iter(|| estimate_success(gen, 0.1, &link, &pl, &cfg).unwrap());
        });
    }
    g.finish();
}

criterion_group!(benches, bench_estimator);
criterion_main!(benches);
