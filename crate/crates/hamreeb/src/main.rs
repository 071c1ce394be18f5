fn main() {
    std::process::exit(hamreeb::cli::main(std::env::args_os()));
}
