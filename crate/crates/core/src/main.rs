fn main() {
    std::process::exit(curvlab::cli::main());
}
