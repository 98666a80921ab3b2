use criterion::{black_box, criterion_group, criterion_main, Criterion};
use lzscatter::asymptotics;
use lzscatter::geometry;
use lzscatter::propagator::{self, Regime, RegimeParams, Thresholds};
use lzscatter::ring::{self, RingElement};
use lzscatter::transfer::{self, TransferChain};
use lzscatter::wkb::{self, PolylinePath};
use lzscatter::{Potential, C64};

fn propagation(c: &mut Criterion) {
    let p = Potential::preset("one-zero").unwrap();
    let mut g = c.benchmark_group("propagate");
    g.sample_size(10);
    for h in [0.1, 0.02] {
        let rp = RegimeParams::new(0.1, h).unwrap();
        g.bench_function(format!("one-zero h={h}"), |b| b.iter(|| propagator::transition_probability(&p, black_box(&rp)).unwrap()));
    }
    g.finish();
}

fn geometry_and_chain(c: &mut Criterion) {
    let p = Potential::preset("three-zero").unwrap();
    c.bench_function("geometry three-zero", |b| b.iter(|| geometry::geometry(&p, black_box(0.1)).unwrap()));
    let geom = geometry::geometry(&p, 0.1).unwrap();
    let th = Thresholds::default();
    c.bench_function("chain product three-zero", |b| {
        b.iter(|| transfer::chain_product(&TransferChain::build(&geom, black_box(0.2), Regime::Nonadiabatic, &th).unwrap()))
    });
    c.bench_function("bs roots two-zero", |b| {
        let p2 = Potential::preset("two-zero").unwrap();
        b.iter(|| asymptotics::bohr_sommerfeld_roots(&p2, black_box(0.005), 0.05).unwrap())
    });
}

fn ring_product(c: &mut Criterion) {
    let els: Vec<RingElement> = (0..1000)
        .map(|k| {
            let t = k as f64 * 0.01;
            RingElement::new(C64::from_polar(1.0, t), C64::new(0.3, 0.1 * t.sin()), C64::new(0.2, -0.1), C64::from_polar(0.5, -t))
        })
        .collect();
    c.bench_function("ring product 1000", |b| b.iter(|| ring::ring_product(black_box(&els))));
}

fn wronskian(c: &mut Criterion) {
    let p = Potential::preset("one-zero").unwrap();
    let path = PolylinePath::vertical(1.0, 0.5);
    let mut g = c.benchmark_group("wkb");
    g.sample_size(10);
    g.bench_function("wronskian h=0.01", |b| b.iter(|| wkb::wronskian(&p, 0.3, black_box(0.01), &path, wkb::DEFAULT_K_MAX, 0.1).unwrap()));
    g.finish();
}

criterion_group!(benches, propagation, geometry_and_chain, ring_product, wronskian);
criterion_main!(benches);
