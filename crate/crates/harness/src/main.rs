fn main() {
    std::process::exit(radgauss_harness::cli::main_with(std::env::args_os()));
}
