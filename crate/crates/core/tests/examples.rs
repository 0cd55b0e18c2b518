//! Every cargo example, run as a test.

#[path = "../examples/cluster_basics.rs"]
mod cluster_basics;

#[test]
fn cluster_basics_runs() {
    cluster_basics::run().unwrap();
}

#[path = "../examples/heap_vs_bucket.rs"]
mod heap_vs_bucket;

#[test]
fn heap_vs_bucket_runs() {
    heap_vs_bucket::run().unwrap();
}

#[path = "../examples/lsh_store.rs"]
mod lsh_store;

#[test]
fn lsh_store_runs() {
    lsh_store::run().unwrap();
}

#[path = "../examples/adaptive_store.rs"]
mod adaptive_store;

#[test]
fn adaptive_store_runs() {
    adaptive_store::run().unwrap();
}

#[path = "../examples/lsh_adaptive_hac.rs"]
mod lsh_adaptive_hac;

#[test]
fn lsh_adaptive_hac_runs() {
    lsh_adaptive_hac::run().unwrap();
}

#[path = "../examples/iris_quality.rs"]
mod iris_quality;

#[test]
fn iris_quality_runs() {
    iris_quality::run().unwrap();
}

#[path = "../examples/files_and_cli.rs"]
mod files_and_cli;

#[test]
fn files_and_cli_runs() {
    files_and_cli::run().unwrap();
}
