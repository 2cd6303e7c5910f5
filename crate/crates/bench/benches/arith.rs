use catmap::{bdb_sequence, matrix_order_mod, p_sequence, quantum_period};
use catmap_bench::standard;
use criterion::{criterion_group, criterion_main, Criterion};
use num_bigint::BigInt;

fn arith(c: &mut Criterion) {
    let a = standard();
    c.bench_function("bdb_sequence_12", |b| b.iter(|| bdb_sequence(&a, 12)));
    c.bench_function("matrix_order_mod_989", |b| b.iter(|| matrix_order_mod(&a, 989)));
    c.bench_function("quantum_period_1000_range", |b| {
        b.iter(|| (3..1000u64).map(|n| quantum_period(&a, n).unwrap().period).sum::<u64>())
    });
    let four = BigInt::from(4);
    c.bench_function("p_sequence_200", |b| b.iter(|| p_sequence(&four, 200)));
}

criterion_group!(benches, arith);
criterion_main!(benches);
