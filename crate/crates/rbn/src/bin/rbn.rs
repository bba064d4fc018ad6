fn main() {
    std::process::exit(rbn::cli::main_with(std::env::args_os()));
}
