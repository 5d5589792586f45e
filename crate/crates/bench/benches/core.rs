use criterion::{black_box, criterion_group, criterion_main, Criterion};

use phistatic::curvature::phi_bundle;
use phistatic::newton::{kazdan_warner, newton_chain};
use phistatic::oscillation::{solve_cauchy, RadialProfile};
use phistatic::quadrature::QuadratureGrid;
use phistatic::spfst::{divergence_identity, system_residual, SystemKind};
use phistatic::Geo;
use phistatic_bench::{fixture, symmetric};

fn jets(c: &mut Criterion) {
    let (s, x) = fixture("costa");
    let mut g = c.benchmark_group("jets");
    g.bench_function("geo_order4_costa", |b| b.iter(|| Geo::new(black_box(&s), black_box(&x), 4).unwrap().scal().value()));
    g.bench_function("phi_bundle_costa", |b| b.iter(|| phi_bundle(&s, black_box(&x)).unwrap()));
    g.bench_function("fluid_system_costa", |b| b.iter(|| system_residual(&s, black_box(&x), SystemKind::Fluid).unwrap()));
    g.finish();
}

fn identities(c: &mut Criterion) {
    let (s, x) = fixture("costa");
    let mut g = c.benchmark_group("identities");
    g.sample_size(20);
    for id in ["divZ_shen", "cotton_fundamental", "weyl_div3"] {
        g.bench_function(id, |b| b.iter(|| divergence_identity(id, &s, black_box(&x)).unwrap()));
    }
    g.finish();
}

fn newton(c: &mut Criterion) {
    let a = symmetric(5, 3);
    c.bench_function("newton_chain_5x5", |b| b.iter(|| newton_chain(black_box(&a), 5, 5)));
    let (s, _) = fixture("codazzi-sphere");
    let grid = QuadratureGrid::build(&s, 1, phistatic::quadrature::POLE_EXCLUSION).unwrap();
    let mut g = c.benchmark_group("kazdan_warner");
    g.sample_size(10);
    g.bench_function("codazzi_sphere_level1_k1", |b| b.iter(|| kazdan_warner(&s, 1, &grid).unwrap().defect));
    g.finish();
}

fn oscillation(c: &mut Criterion) {
    let p = RadialProfile::new("bessel", |t| t, |_| 1.0, 10.0);
    c.bench_function("solve_cauchy_bessel", |b| b.iter(|| solve_cauchy(&p, 1.0, black_box(10.0)).unwrap().first_zero));
}

criterion_group!(benches, jets, identities, newton, oscillation);
criterion_main!(benches);
