fn main() {
    std::process::exit(nfsim::cli::run());
}
