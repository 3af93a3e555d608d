fn main() {
    std::process::exit(robustmm_cli::run());
}
