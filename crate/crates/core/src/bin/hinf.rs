fn main() {
    std::process::exit(hinf_core::cli::run(std::env::args()));
}
