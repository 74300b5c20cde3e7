fn main() {
    std::process::exit(gradsat::cli::run());
}
