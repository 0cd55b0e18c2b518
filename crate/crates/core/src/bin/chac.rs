fn main() {
    std::process::exit(centroid_hac::cli::run_cli(std::env::args_os()));
}
