fn main() {
    std::process::exit(airy_spline::harness::cli::run(std::env::args_os()));
}
