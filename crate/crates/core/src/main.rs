fn main() {
    std::process::exit(qrbm::cli::run());
}
