fn main() {
    std::process::exit(sgs_core::cli::main(std::env::args_os()));
}
