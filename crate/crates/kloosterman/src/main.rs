fn main() {
    std::process::exit(kloosterman::harness::cli::run());
}
