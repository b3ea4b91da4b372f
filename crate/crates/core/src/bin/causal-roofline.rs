fn main() {
    std::process::exit(causal_roofline::report::cli::run(std::env::args_os()));
}
