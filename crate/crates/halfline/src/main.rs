fn main() {
    std::process::exit(halfline::cli::main(std::env::args_os()));
}
