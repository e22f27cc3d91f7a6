fn main() {
    std::process::exit(rfh_core::cli::main());
}
